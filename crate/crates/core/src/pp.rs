//! Primitive positive formulas in structure view: a structure whose universe holds
//! the formula's variables, together with the liberal variables.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::formula::{EpFormula, FreshNames, Node};
use crate::signature::Signature;
use crate::structure::Structure;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PpFormula {
    structure: Structure,
    lib: Vec<String>,
}

/// Prefix of the unary relations pinning liberal elements in augmented structures.
pub const LIB_RELATION_PREFIX: &str = "__lib_";

impl PpFormula {
    pub fn new(structure: Structure, lib: Vec<String>) -> Result<Self> {
        let mut seen = HashSet::new();
        for v in &lib {
            if structure.index_of(v).is_none() {
                return Err(Error::InvalidFormula(format!(
                    "liberal variable {v} is not in the universe"
                )));
            }
            if !seen.insert(v) {
                return Err(Error::InvalidFormula(format!(
                    "liberal variable {v} repeated"
                )));
            }
        }
        Ok(Self { structure, lib })
    }

    /// Builds the structure view from atoms over variable names. Quantified names
    /// and atom variables outside `lib` become non-liberal elements.
    pub fn from_atoms<'a>(
        signature: &Signature,
        lib: &[String],
        quantified: impl IntoIterator<Item = &'a str>,
        atoms: impl IntoIterator<Item = (&'a str, &'a [String])>,
    ) -> Result<Self> {
        let mut s = Structure::new(signature.clone());
        for v in lib {
            s.add_element(v);
        }
        for q in quantified {
            s.add_element(q);
        }
        for (rel, args) in atoms {
            let tuple = args.iter().map(|a| s.add_element(a)).collect();
            s.insert_tuple(rel, tuple)?;
        }
        PpFormula::new(s, lib.to_vec())
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn signature(&self) -> &Signature {
        self.structure.signature()
    }

    pub fn lib(&self) -> &[String] {
        &self.lib
    }

    pub fn lib_set(&self) -> BTreeSet<&str> {
        self.lib.iter().map(String::as_str).collect()
    }

    pub fn lib_indices(&self) -> Vec<usize> {
        self.lib
            .iter()
            .map(|v| self.structure.index_of(v).unwrap())
            .collect()
    }

    /// Elements that are not liberal, in universe order.
    pub fn quantified(&self) -> Vec<usize> {
        let lib = self.lib_set();
        (0..self.structure.size())
            .filter(|&e| !lib.contains(self.structure.element(e)))
            .collect()
    }

    /// Some liberal variable occurs in an atom.
    pub fn is_free(&self) -> bool {
        self.lib_indices()
            .into_iter()
            .any(|e| self.structure.occurs(e))
    }

    pub fn is_liberal(&self) -> bool {
        !self.lib.is_empty()
    }

    pub fn is_sentence(&self) -> bool {
        !self.is_free()
    }

    pub fn same_lib(&self, other: &PpFormula) -> bool {
        self.lib_set() == other.lib_set()
    }

    /// Atoms as (relation, argument names), in relation then tuple order.
    pub fn atoms(&self) -> Vec<(String, Vec<String>)> {
        self.structure
            .relations()
            .flat_map(|(rel, tuples)| {
                tuples.iter().map(move |t| {
                    (
                        rel.to_string(),
                        t.iter()
                            .map(|&e| self.structure.element(e).to_string())
                            .collect(),
                    )
                })
            })
            .collect()
    }

    /// Prenex formula: every non-liberal element is existentially quantified.
    pub fn to_node(&self) -> Node {
        let mut atoms: Vec<Node> = self
            .atoms()
            .into_iter()
            .map(|(rel, args)| Node::atom(&rel, args))
            .collect();
        atoms.sort_by_key(|a| a.to_string());
        let matrix = Node::conjunction(atoms);
        self.quantified().into_iter().rev().fold(matrix, |acc, q| {
            Node::exists(self.structure.element(q), acc)
        })
    }

    pub fn to_ep_formula(&self) -> EpFormula {
        EpFormula::new(self.signature().clone(), self.lib.clone(), self.to_node())
            .expect("structure view always yields a well-formed formula")
    }

    /// Formula text `lib(...): body`. Quantified names are kept as they are.
    pub fn to_text(&self) -> String {
        format!("lib({}): {}", self.lib.join(","), self.to_node())
    }

    /// Same formula listing its liberal variables in the order of `lib`.
    pub fn with_lib_order(&self, lib: &[String]) -> Result<PpFormula> {
        let mine = self.lib_set();
        if lib.len() != mine.len() || !lib.iter().all(|v| mine.contains(v.as_str())) {
            return Err(Error::LibMismatch(format!(
                "({}) vs ({})",
                self.lib.join(","),
                lib.join(",")
            )));
        }
        Ok(PpFormula {
            structure: self.structure.clone(),
            lib: lib.to_vec(),
        })
    }

    /// Core of the augmented structure, as a formula over the original signature.
    pub fn core(&self) -> PpFormula {
        let core = crate::hom::core(&self.augmented());
        let keep: Vec<usize> = core
            .elements()
            .iter()
            .map(|e| self.structure.index_of(e).unwrap())
            .sorted()
            .collect();
        PpFormula::new(self.structure.induced(&keep), self.lib.clone()).unwrap()
    }

    /// Augmented structure: one extra unary relation per liberal element, holding
    /// only that element.
    pub fn augmented(&self) -> Structure {
        let mut sig = self.signature().clone();
        let names: Vec<String> = self
            .lib
            .iter()
            .map(|v| lib_relation_name(self.signature(), v))
            .collect();
        for n in &names {
            sig.add(n, 1).expect("fresh unary relation");
        }
        let mut aug = self
            .structure
            .with_signature(sig)
            .expect("extension of the base signature");
        for (v, n) in self.lib.iter().zip(&names) {
            let e = aug.index_of(v).unwrap();
            aug.insert_tuple(n, vec![e]).unwrap();
        }
        aug
    }

    /// One formula per connected component of the formula graph.
    pub fn components(&self) -> Vec<PpFormula> {
        let n = self.structure.size();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut x = x;
            while p[x] != r {
                let next = p[x];
                p[x] = r;
                x = next;
            }
            r
        }
        for (_, tuples) in self.structure.relations() {
            for t in tuples {
                for w in t.windows(2) {
                    let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
        let mut slot: HashMap<usize, usize> = HashMap::new();
        for e in 0..n {
            let r = find(&mut parent, e);
            let g = *slot.entry(r).or_insert_with(|| {
                groups.push((r, Vec::new()));
                groups.len() - 1
            });
            groups[g].1.push(e);
        }
        groups
            .into_iter()
            .map(|(_, members)| {
                let sub = self.structure.induced(&members);
                let lib = self
                    .lib
                    .iter()
                    .filter(|v| sub.index_of(v).is_some())
                    .cloned()
                    .collect();
                PpFormula::new(sub, lib).unwrap()
            })
            .collect()
    }

    /// Drops every component without liberal variables.
    pub fn hat(&self) -> Result<PpFormula> {
        if self.lib.is_empty() {
            return Err(Error::EmptyLib);
        }
        let keep: Vec<usize> = self
            .components()
            .into_iter()
            .filter(PpFormula::is_liberal)
            .flat_map(|c| {
                c.structure
                    .elements()
                    .iter()
                    .map(|e| self.structure.index_of(e).unwrap())
                    .collect::<Vec<_>>()
            })
            .sorted()
            .collect();
        PpFormula::new(self.structure.induced(&keep), self.lib.clone())
    }

    /// Same formula with quantified elements renamed to canonical `_qN` names.
    ///
    /// Names are chosen by colour refinement followed by a bounded search over
    /// orderings inside colour classes for the lexicographically least atom list.
    pub fn canonical(&self) -> PpFormula {
        let quantified = self.quantified();
        if quantified.is_empty() {
            return self.clone();
        }
        let qpos: HashMap<usize, usize> = quantified
            .iter()
            .enumerate()
            .map(|(i, &e)| (e, i))
            .collect();
        let atoms: Vec<(&str, &Vec<usize>)> = self
            .structure
            .relations()
            .flat_map(|(r, ts)| ts.iter().map(move |t| (r, t)))
            .collect();

        let mut colour = vec![0usize; quantified.len()];
        loop {
            let sigs: Vec<String> = quantified
                .iter()
                .map(|&q| {
                    let mut parts: Vec<String> = atoms
                        .iter()
                        .filter(|(_, t)| t.contains(&q))
                        .map(|(r, t)| {
                            let args = t
                                .iter()
                                .map(|&e| {
                                    if e == q {
                                        "*".to_string()
                                    } else if let Some(&i) = qpos.get(&e) {
                                        format!("#{}", colour[i])
                                    } else {
                                        self.structure.element(e).to_string()
                                    }
                                })
                                .join(",");
                            format!("{r}({args})")
                        })
                        .collect();
                    parts.sort();
                    format!("{}|{}", colour[qpos[&q]], parts.join(";"))
                })
                .collect();
            let ranks: Vec<&String> = sigs.iter().sorted().dedup().collect();
            let next: Vec<usize> = sigs
                .iter()
                .map(|s| ranks.binary_search(&s).unwrap())
                .collect();
            let stable = next.iter().copied().collect::<BTreeSet<_>>().len()
                == colour.iter().copied().collect::<BTreeSet<_>>().len();
            colour = next;
            if stable {
                break;
            }
        }

        let mut cells: Vec<Vec<usize>> = Vec::new();
        for c in colour.iter().copied().sorted().dedup() {
            cells.push(
                (0..quantified.len())
                    .filter(|&i| colour[i] == c)
                    .sorted_by_key(|&i| self.structure.element(quantified[i]).to_string())
                    .collect(),
            );
        }
        let orderings: usize = cells
            .iter()
            .map(|c| (1..=c.len()).product::<usize>())
            .fold(1usize, |a, b| a.saturating_mul(b));

        let mut fresh = FreshNames::new(self.lib.iter().cloned());
        let fresh_names: Vec<String> = quantified.iter().map(|_| fresh.fresh()).collect();
        let render = |order: &[usize]| -> (String, PpFormula) {
            let mut names = HashMap::new();
            for (k, &i) in order.iter().enumerate() {
                names.insert(quantified[i], fresh_names[k].clone());
            }
            let renamed = self
                .structure
                .renamed(|e| {
                    let idx = self.structure.index_of(e).unwrap();
                    names.get(&idx).cloned().unwrap_or_else(|| e.to_string())
                })
                .expect("canonical names are fresh");
            let sorted_universe: Vec<usize> = self
                .lib_indices()
                .into_iter()
                .chain(order.iter().map(|&i| quantified[i]))
                .collect();
            let pp = PpFormula::new(renamed.induced(&sorted_universe), self.lib.clone()).unwrap();
            (pp.to_text(), pp)
        };

        if orderings <= 720 {
            let per_cell: Vec<Vec<Vec<usize>>> = cells
                .iter()
                .map(|c| c.iter().copied().permutations(c.len()).collect())
                .collect();
            per_cell
                .into_iter()
                .multi_cartesian_product()
                .map(|choice| render(&choice.concat()))
                .min_by(|a, b| a.0.cmp(&b.0))
                .unwrap()
                .1
        } else {
            render(&cells.concat()).1
        }
    }

    pub fn canonical_text(&self) -> String {
        self.canonical().to_text()
    }
}

impl fmt::Display for PpFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

pub(crate) fn lib_relation_name(sig: &Signature, var: &str) -> String {
    let mut name = format!("{LIB_RELATION_PREFIX}{var}");
    while sig.contains(&name) {
        name.insert(0, '_');
    }
    name
}

/// Structure view of a primitive positive formula. Fails on disjunctions.
pub fn to_structure_view(phi: &EpFormula) -> Result<PpFormula> {
    if !phi.is_pp() {
        return Err(Error::NotPrimitivePositive);
    }
    fn walk<'a>(
        n: &'a Node,
        quantified: &mut Vec<&'a str>,
        atoms: &mut Vec<(&'a str, &'a [String])>,
    ) {
        match n {
            Node::True => {}
            Node::Atom { relation, args } => atoms.push((relation, args)),
            Node::And(a, b) => {
                walk(a, quantified, atoms);
                walk(b, quantified, atoms);
            }
            Node::Exists(v, b) => {
                quantified.push(v);
                walk(b, quantified, atoms);
            }
            Node::Or(..) => unreachable!(),
        }
    }
    let mut quantified = Vec::new();
    let mut atoms = Vec::new();
    walk(phi.body(), &mut quantified, &mut atoms);
    // variables in order of first appearance, then unused quantifiers
    let mut order: Vec<&str> = Vec::new();
    for (_, args) in &atoms {
        for a in args.iter() {
            if !phi.lib().contains(a) && !order.contains(&a.as_str()) {
                order.push(a);
            }
        }
    }
    for q in quantified {
        if !order.contains(&q) {
            order.push(q);
        }
    }
    PpFormula::from_atoms(phi.signature(), phi.lib(), order, atoms)
}

/// Prenex formula text for a structure view.
pub fn from_structure_view(pp: &PpFormula) -> String {
    pp.to_text()
}

/// Conjunction of formulas sharing their liberal variables, with quantified
/// variables renamed apart.
pub fn conjoin_pp(phis: &[PpFormula]) -> Result<PpFormula> {
    let first = phis
        .first()
        .ok_or_else(|| Error::Precondition("conjunction of an empty list".into()))?;
    for p in &phis[1..] {
        if !p.same_lib(first) {
            return Err(Error::LibMismatch(format!(
                "({}) vs ({})",
                first.lib.join(","),
                p.lib.join(",")
            )));
        }
        first.structure.check_same_signature(&p.structure)?;
    }
    if phis.len() == 1 {
        return Ok(first.clone());
    }
    let mut out = Structure::new(first.signature().clone());
    for v in &first.lib {
        out.add_element(v);
    }
    let mut fresh = FreshNames::new(first.lib.iter().cloned());
    for p in phis {
        let lib = p.lib_set();
        let remap: Vec<usize> = p
            .structure
            .elements()
            .iter()
            .map(|e| {
                if lib.contains(e.as_str()) {
                    out.index_of(e).unwrap()
                } else {
                    out.add_element(&fresh.fresh())
                }
            })
            .collect();
        for (rel, tuples) in p.structure.relations() {
            for t in tuples {
                out.insert_tuple(rel, t.iter().map(|&e| remap[e]).collect())?;
            }
        }
    }
    PpFormula::new(out, first.lib.clone())
}
