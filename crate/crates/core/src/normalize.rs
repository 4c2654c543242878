//! Disjunctive normal form of existential positive formulas.

use std::fmt;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::formula::{EpFormula, Node};
use crate::hom::homomorphic;
use crate::pp::PpFormula;
use crate::signature::Signature;

/// A disjunction of prenex primitive positive formulas over a shared liberal set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DisjunctiveEp {
    signature: Signature,
    lib: Vec<String>,
    disjuncts: Vec<PpFormula>,
}

impl DisjunctiveEp {
    /// Disjuncts are reordered to list liberal variables like `lib`, and kept in
    /// the given order.
    pub fn new(signature: Signature, lib: Vec<String>, disjuncts: Vec<PpFormula>) -> Result<Self> {
        if disjuncts.is_empty() {
            return Err(Error::InvalidFormula("empty disjunction".into()));
        }
        let disjuncts = disjuncts
            .iter()
            .map(|d| {
                if d.signature() != &signature {
                    return Err(Error::SignatureMismatch(format!(
                        "disjunct over {} in a formula over {}",
                        d.signature(),
                        signature
                    )));
                }
                d.with_lib_order(&lib)
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            signature,
            lib,
            disjuncts,
        })
    }

    /// Same disjuncts, renamed canonically and sorted by canonical text.
    pub fn canonical(&self) -> Self {
        let disjuncts = self
            .disjuncts
            .iter()
            .map(|d| d.canonical())
            .sorted_by_cached_key(|d| d.to_text())
            .collect();
        Self {
            disjuncts,
            ..self.clone()
        }
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn lib(&self) -> &[String] {
        &self.lib
    }

    pub fn disjuncts(&self) -> &[PpFormula] {
        &self.disjuncts
    }

    pub fn len(&self) -> usize {
        self.disjuncts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.disjuncts.is_empty()
    }

    pub fn sentence_disjuncts(&self) -> Vec<&PpFormula> {
        self.disjuncts.iter().filter(|d| d.is_sentence()).collect()
    }

    pub fn free_disjuncts(&self) -> Vec<&PpFormula> {
        self.disjuncts.iter().filter(|d| d.is_free()).collect()
    }

    pub fn is_all_free(&self) -> bool {
        self.disjuncts.iter().all(PpFormula::is_free)
    }

    /// No sentence disjunct maps homomorphically into another disjunct.
    pub fn is_normalized(&self) -> bool {
        let augs: Vec<_> = self.disjuncts.iter().map(PpFormula::augmented).collect();
        self.disjuncts.iter().enumerate().all(|(i, d)| {
            !d.is_sentence() || (0..augs.len()).all(|j| j == i || !homomorphic(&augs[i], &augs[j]))
        })
    }

    pub fn to_ep_formula(&self) -> EpFormula {
        let body = Node::disjunction(self.disjuncts.iter().map(PpFormula::to_node))
            .expect("at least one disjunct");
        EpFormula::new(self.signature.clone(), self.lib.clone(), body)
            .expect("disjuncts are well formed")
    }

    pub fn to_text(&self) -> String {
        let parts = self.disjuncts.iter().map(|d| {
            let body = d.to_node().to_string();
            if self.disjuncts.len() > 1 && matches!(d.to_node(), Node::Exists(..)) {
                format!("({body})")
            } else {
                body
            }
        });
        format!("lib({}): {}", self.lib.join(","), parts.format(" | "))
    }
}

impl fmt::Display for DisjunctiveEp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

struct Conjunct<'a> {
    quantified: Vec<&'a str>,
    atoms: Vec<(&'a str, &'a [String])>,
}

fn dnf(node: &Node) -> Vec<Conjunct<'_>> {
    match node {
        Node::True => vec![Conjunct {
            quantified: vec![],
            atoms: vec![],
        }],
        Node::Atom { relation, args } => vec![Conjunct {
            quantified: vec![],
            atoms: vec![(relation.as_str(), args.as_slice())],
        }],
        Node::Or(a, b) => {
            let mut out = dnf(a);
            out.extend(dnf(b));
            out
        }
        Node::And(a, b) => {
            let left = dnf(a);
            let right = dnf(b);
            left.iter()
                .cartesian_product(right.iter())
                .map(|(l, r)| Conjunct {
                    quantified: l.quantified.iter().chain(&r.quantified).copied().collect(),
                    atoms: l.atoms.iter().chain(&r.atoms).copied().collect(),
                })
                .collect()
        }
        Node::Exists(v, body) => dnf(body)
            .into_iter()
            .map(|mut c| {
                if c.atoms.iter().any(|(_, args)| args.contains(v)) {
                    c.quantified.insert(0, v);
                }
                c
            })
            .collect(),
    }
}

/// Disjunctive form: bound variables are already apart, so conjunction distributes
/// over disjunction and quantifiers move into each disjunct. Quantified variables
/// that occur in no atom of a disjunct are dropped.
pub fn disjunctive_form(phi: &EpFormula) -> DisjunctiveEp {
    let disjuncts = dnf(phi.body())
        .into_iter()
        .map(|c| {
            PpFormula::from_atoms(phi.signature(), phi.lib(), c.quantified, c.atoms)
                .expect("atoms were validated by the formula")
        })
        .collect();
    DisjunctiveEp::new(phi.signature().clone(), phi.lib().to_vec(), disjuncts)
        .expect("disjuncts share the formula's liberal variables")
}

/// Logically equivalent normalized disjunctive formula, in canonical order.
///
/// Whenever a sentence disjunct θ maps into another disjunct ψ, ψ entails θ and is
/// deleted. Scanning in canonical order until nothing changes makes the result
/// deterministic.
pub fn normalize_ep(phi: &EpFormula) -> DisjunctiveEp {
    normalize_disjunctive(&disjunctive_form(phi))
}

pub fn normalize_disjunctive(phi: &DisjunctiveEp) -> DisjunctiveEp {
    let mut d = phi.canonical();
    'scan: loop {
        let augs: Vec<_> = d.disjuncts.iter().map(PpFormula::augmented).collect();
        for i in 0..d.disjuncts.len() {
            if !d.disjuncts[i].is_sentence() {
                continue;
            }
            for j in 0..d.disjuncts.len() {
                if i != j && homomorphic(&augs[i], &augs[j]) {
                    d.disjuncts.remove(j);
                    continue 'scan;
                }
            }
        }
        return d;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::hom::{hom_equivalent, homomorphic};
    use crate::pp::to_structure_view;

    const NESTED: &str = "sig E/2\nquery phi lib(w,x,y,z): E(x,y) & (E(w,x) | (E(y,z) & E(z,z)))";

    fn pp(src: &str) -> PpFormula {
        to_structure_view(&parse_formula(src).unwrap()).unwrap()
    }

    #[test]
    fn nested_formula_splits_into_two_disjuncts() {
        let n = normalize_ep(&parse_formula(NESTED).unwrap());
        let texts: Vec<String> = n.disjuncts().iter().map(|d| d.to_text()).collect();
        assert_eq!(
            texts,
            vec![
                "lib(w,x,y,z): E(w,x) & E(x,y)",
                "lib(w,x,y,z): E(x,y) & E(y,z) & E(z,z)"
            ]
        );
        assert!(n.is_all_free());
        assert!(n.is_normalized());
    }

    #[test]
    fn disjunctive_input_is_a_fixed_point() {
        let f = parse_formula(
            "sig E/2\nquery q lib(x,y): (exists u. E(x,u) & E(u,y)) | E(y,x) | E(x,x)",
        )
        .unwrap();
        let n = normalize_ep(&f);
        assert_eq!(n.len(), 3);
        let again = normalize_disjunctive(&n);
        assert_eq!(again, n);
    }

    #[test]
    fn sentence_disjunct_absorbs_the_disjuncts_entailing_it() {
        let f = parse_formula(
            "sig E/2\nquery q lib(x): E(x,x) | (exists a. E(a,a)) | (exists a,b. E(a,b))",
        )
        .unwrap();
        let n = normalize_ep(&f);
        // E(x,x) entails both sentences; the loop sentence entails the edge sentence
        assert_eq!(n.len(), 1);
        assert_eq!(
            n.disjuncts()[0].to_text(),
            "lib(x): exists _q0,_q1. E(_q1,_q0)"
        );
        assert!(n.is_normalized());
    }

    #[test]
    fn incomparable_sentence_is_kept() {
        let theta = "sig E/2\nquery t lib(w,x,y,z): (E(x,y) & E(y,z)) | (E(z,w) & E(w,x)) | (E(w,x) & E(x,y)) | (exists a,b,c,d. E(a,b) & E(b,c) & E(c,d))";
        let n = normalize_ep(&parse_formula(theta).unwrap());
        assert_eq!(n.len(), 4);
        assert_eq!(n.sentence_disjuncts().len(), 1);
        let sentence = n.sentence_disjuncts()[0].augmented();
        for d in n.free_disjuncts() {
            assert!(!homomorphic(&sentence, &d.augmented()));
        }
    }

    #[test]
    fn equivalent_sentences_keep_one() {
        let f = parse_formula(
            "sig E/2\nquery q lib(x): (exists a. E(a,a)) | (exists a,b. E(a,b) & E(b,b)) | E(x,x)",
        )
        .unwrap();
        let n = normalize_ep(&f);
        assert_eq!(n.len(), 1);
        assert!(hom_equivalent(
            n.disjuncts()[0].structure(),
            pp("sig E/2\nquery q lib(x): exists a. E(a,a)").structure()
        ));
    }

    #[test]
    fn quantifier_over_disjunction_is_distributed() {
        let f =
            parse_formula("sig E/2 F/1\nquery q lib(x): exists u. E(x,u) & (F(u) | F(x))").unwrap();
        let d = disjunctive_form(&f);
        assert_eq!(d.len(), 2);
        assert_eq!(d.disjuncts()[0].quantified().len(), 1);
        assert_eq!(d.disjuncts()[1].quantified().len(), 1);
        let text = d.to_text();
        let back = parse_formula(&format!("sig E/2 F/1\nquery q {text}")).unwrap();
        assert_eq!(disjunctive_form(&back).canonical(), d.canonical());
    }
}
