//! Seeded generators of formulas and structures for property checks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formula::{EpFormula, Node};
use crate::normalize::DisjunctiveEp;
use crate::pp::PpFormula;
use crate::signature::Signature;
use crate::structure::Structure;

/// Shape limits for generated formulas.
#[derive(Clone, Debug)]
pub struct Shape {
    pub max_lib: usize,
    /// Bound on liberal plus quantified variables of one disjunct.
    pub max_vars: usize,
    pub max_atoms: usize,
    pub max_disjuncts: usize,
}

impl Default for Shape {
    fn default() -> Self {
        Self {
            max_lib: 3,
            max_vars: 4,
            max_atoms: 4,
            max_disjuncts: 3,
        }
    }
}

pub struct Generator {
    rng: ChaCha8Rng,
    signature: Signature,
}

/// Signature with one binary and one unary relation.
pub fn default_signature() -> Signature {
    Signature::from_pairs([("E", 2), ("F", 1)]).unwrap()
}

const LIB_NAMES: [&str; 6] = ["x", "y", "z", "w", "v", "u"];

impl Generator {
    pub fn new(seed: u64, signature: Signature) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            signature,
        }
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn lib(&mut self, min: usize, max: usize) -> Vec<String> {
        let n = self.rng.gen_range(min..=max.min(LIB_NAMES.len()));
        LIB_NAMES[..n].iter().map(|s| s.to_string()).collect()
    }

    /// Structure with universe `0..n`, each possible tuple present with
    /// probability `density`.
    pub fn structure(&mut self, min_size: usize, max_size: usize, density: f64) -> Structure {
        let n = self.rng.gen_range(min_size..=max_size);
        let names: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        let mut s = Structure::with_elements(self.signature.clone(), &names).unwrap();
        let rels: Vec<(String, usize)> = self
            .signature
            .iter()
            .map(|(r, a)| (r.to_string(), a))
            .collect();
        for (rel, arity) in rels {
            let total = n.pow(arity as u32);
            for code in 0..total {
                if self.rng.gen_bool(density) {
                    let mut c = code;
                    let t = (0..arity)
                        .map(|_| {
                            let x = c % n;
                            c /= n;
                            x
                        })
                        .collect();
                    s.insert_tuple(&rel, t).unwrap();
                }
            }
        }
        s
    }

    fn atom(&mut self, vars: &[String]) -> (String, Vec<String>) {
        let rels: Vec<(String, usize)> = self
            .signature
            .iter()
            .map(|(r, a)| (r.to_string(), a))
            .collect();
        let (rel, arity) = rels.choose(&mut self.rng).unwrap().clone();
        let args = (0..arity)
            .map(|_| vars.choose(&mut self.rng).unwrap().clone())
            .collect();
        (rel, args)
    }

    /// Primitive positive formula over `lib`. With `free`, some liberal variable
    /// occurs in an atom; with `sentence`, none does.
    pub fn pp(&mut self, lib: &[String], shape: &Shape, kind: PpKind) -> PpFormula {
        let room = shape.max_vars.saturating_sub(lib.len());
        let quantified: Vec<String> = (0..self.rng.gen_range(0..=room))
            .map(|i| format!("_g{i}"))
            .collect();
        let quantified = if kind == PpKind::Sentence && quantified.is_empty() {
            vec!["_g0".to_string()]
        } else {
            quantified
        };
        let pool: Vec<String> = match kind {
            PpKind::Sentence => quantified.clone(),
            _ => lib.iter().chain(&quantified).cloned().collect(),
        };
        let n_atoms = if pool.is_empty() {
            0
        } else {
            self.rng.gen_range(1..=shape.max_atoms.max(1))
        };
        let mut atoms: Vec<(String, Vec<String>)> =
            (0..n_atoms).map(|_| self.atom(&pool)).collect();
        if kind == PpKind::Free
            && !lib.is_empty()
            && !atoms.iter().any(|(_, a)| a.iter().any(|v| lib.contains(v)))
        {
            let (rel, mut args) = self.atom(&pool);
            let k = self.rng.gen_range(0..args.len());
            args[k] = lib.choose(&mut self.rng).unwrap().clone();
            atoms.push((rel, args));
        }
        let used: Vec<&str> = quantified
            .iter()
            .filter(|q| atoms.iter().any(|(_, a)| a.contains(q)))
            .map(String::as_str)
            .collect();
        PpFormula::from_atoms(
            &self.signature,
            lib,
            used,
            atoms.iter().map(|(r, a)| (r.as_str(), a.as_slice())),
        )
        .unwrap()
    }

    /// Disjunction of free disjuncts.
    pub fn all_free(&mut self, shape: &Shape) -> DisjunctiveEp {
        let lib = self.lib(1, shape.max_lib);
        let n = self.rng.gen_range(1..=shape.max_disjuncts);
        let ds = (0..n).map(|_| self.pp(&lib, shape, PpKind::Free)).collect();
        DisjunctiveEp::new(self.signature.clone(), lib, ds).unwrap()
    }

    /// Disjunction with at least one free and one sentence disjunct when
    /// `with_sentence`, otherwise an arbitrary mix.
    pub fn disjunctive(&mut self, shape: &Shape, with_sentence: bool) -> DisjunctiveEp {
        let lib = self.lib(1, shape.max_lib);
        let n = self
            .rng
            .gen_range(if with_sentence { 2 } else { 1 }..=shape.max_disjuncts.max(2));
        let ds = (0..n)
            .map(|i| {
                let kind = if with_sentence && i == 0 {
                    PpKind::Sentence
                } else if with_sentence && i == 1 {
                    PpKind::Free
                } else if self.rng.gen_bool(0.25) {
                    PpKind::Sentence
                } else {
                    PpKind::Free
                };
                self.pp(&lib, shape, kind)
            })
            .collect();
        DisjunctiveEp::new(self.signature.clone(), lib, ds).unwrap()
    }

    /// Existential positive formula with nested connectives and quantifiers.
    pub fn ep(&mut self, shape: &Shape) -> EpFormula {
        let lib = self.lib(1, shape.max_lib);
        let mut next = 0;
        let body = self.node(&lib, 3, &mut next, shape.max_vars.saturating_sub(lib.len()));
        EpFormula::new(self.signature.clone(), lib, body).unwrap()
    }

    fn node(&mut self, scope: &[String], depth: usize, next: &mut usize, budget: usize) -> Node {
        let choice = if depth == 0 {
            0
        } else {
            self.rng.gen_range(0..6)
        };
        match choice {
            0..=1 => {
                let (rel, args) = self.atom(scope);
                Node::atom(&rel, args)
            }
            2 => Node::and(
                self.node(scope, depth - 1, next, budget),
                self.node(scope, depth - 1, next, budget),
            ),
            3 => Node::or(
                self.node(scope, depth - 1, next, budget),
                self.node(scope, depth - 1, next, budget),
            ),
            _ if *next < budget => {
                let v = format!("_g{next}");
                *next += 1;
                let mut inner = scope.to_vec();
                inner.push(v.clone());
                Node::exists(&v, self.node(&inner, depth - 1, next, budget))
            }
            _ => Node::and(
                self.node(scope, depth - 1, next, budget),
                self.node(scope, depth - 1, next, budget),
            ),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PpKind {
    Any,
    Free,
    Sentence,
}
