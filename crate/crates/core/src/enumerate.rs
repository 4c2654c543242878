//! Exhaustive enumeration of small structures.

use itertools::Itertools;

use crate::signature::Signature;
use crate::structure::{full_structure, Structure};

/// All structures over `signature` with universes `0..n` for n = 1..=max_size,
/// ordered by size, then number of tuples, then lexicographically by tuple slot.
pub struct StructureEnumerator {
    signature: Signature,
    max_size: usize,
    size: usize,
    slots: Vec<(String, Vec<usize>)>,
    popcount: usize,
    combos: Option<Box<dyn Iterator<Item = Vec<usize>>>>,
}

impl StructureEnumerator {
    pub fn new(signature: &Signature, max_size: usize) -> Self {
        Self {
            signature: signature.clone(),
            max_size,
            size: 0,
            slots: Vec::new(),
            popcount: 0,
            combos: None,
        }
    }

    fn start_size(&mut self, n: usize) {
        self.size = n;
        self.slots = self
            .signature
            .iter()
            .flat_map(|(rel, arity)| {
                (0..arity)
                    .map(|_| 0..n)
                    .multi_cartesian_product()
                    .map(move |t| (rel.to_string(), t))
            })
            .collect();
        self.popcount = 0;
        self.combos = Some(Box::new((0..self.slots.len()).combinations(0)));
    }
}

impl Iterator for StructureEnumerator {
    type Item = Structure;

    fn next(&mut self) -> Option<Structure> {
        loop {
            if self.combos.is_none() {
                if self.size >= self.max_size {
                    return None;
                }
                self.start_size(self.size + 1);
            }
            if let Some(choice) = self.combos.as_mut().unwrap().next() {
                let mut s = full_structure(&Signature::new(), self.size)
                    .with_signature(self.signature.clone())
                    .expect("empty signature extends");
                for i in choice {
                    let (rel, t) = &self.slots[i];
                    s.insert_tuple(rel, t.clone()).unwrap();
                }
                return Some(s);
            }
            if self.popcount < self.slots.len() {
                self.popcount += 1;
                let k = self.popcount;
                self.combos = Some(Box::new((0..self.slots.len()).combinations(k)));
            } else {
                self.combos = None;
            }
        }
    }
}

/// Every structure up to `max_size` elements.
pub fn all_structures(signature: &Signature, max_size: usize) -> StructureEnumerator {
    StructureEnumerator::new(signature, max_size)
}
