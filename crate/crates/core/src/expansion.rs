//! Inclusion-exclusion expansion of all-free formulas with merging of counting
//! equivalent terms, and the sets used for formulas with sentence disjuncts.

use std::fmt;

use itertools::Itertools;
use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Zero};

use crate::equivalence::are_counting_equivalent;
use crate::error::{Error, Result};
use crate::hom::homomorphic;
use crate::normalize::DisjunctiveEp;
use crate::pp::{conjoin_pp, PpFormula};

/// Weighted sum of primitive positive formulas over one liberal set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedPpSum {
    lib: Vec<String>,
    terms: Vec<(BigInt, PpFormula)>,
}

impl WeightedPpSum {
    /// Merges counting-equivalent terms in the given order, keeping the canonically
    /// smaller formula of each merged pair, then drops zero coefficients and sorts.
    pub fn merged(lib: Vec<String>, terms: impl IntoIterator<Item = (BigInt, PpFormula)>) -> Self {
        let mut merged: Vec<(BigInt, PpFormula, String)> = Vec::new();
        for (c, phi) in terms {
            let phi = phi.canonical();
            let text = phi.to_text();
            match merged
                .iter_mut()
                .find(|(_, rep, rep_text)| *rep_text == text || are_counting_equivalent(rep, &phi))
            {
                Some((coef, rep, rep_text)) => {
                    *coef += c;
                    if text < *rep_text {
                        *rep = phi;
                        *rep_text = text;
                    }
                }
                None => merged.push((c, phi, text)),
            }
        }
        let terms = merged
            .into_iter()
            .filter(|(c, _, _)| !c.is_zero())
            .sorted_by(|a, b| a.2.cmp(&b.2))
            .map(|(c, phi, _)| (c, phi))
            .collect();
        Self { lib, terms }
    }

    pub fn empty(lib: Vec<String>) -> Self {
        Self { lib, terms: vec![] }
    }

    pub fn lib(&self) -> &[String] {
        &self.lib
    }

    pub fn terms(&self) -> &[(BigInt, PpFormula)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Σ c·count(ψ), which must come out nonnegative.
    pub fn evaluate(
        &self,
        mut count: impl FnMut(&PpFormula) -> Result<BigUint>,
    ) -> Result<BigUint> {
        let mut total = BigInt::zero();
        for (c, phi) in &self.terms {
            total += c * BigInt::from(count(phi)?);
        }
        to_count(total)
    }

    /// One line per term: coefficient, then the canonical formula text.
    pub fn to_text(&self) -> String {
        self.terms
            .iter()
            .map(|(c, phi)| format!("{c} {}\n", phi.to_text()))
            .collect()
    }
}

impl fmt::Display for WeightedPpSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

pub(crate) fn to_count(value: BigInt) -> Result<BigUint> {
    match value.sign() {
        Sign::Minus => Err(Error::OracleInconsistency(format!(
            "negative answer count {value}"
        ))),
        _ => Ok(value.magnitude().clone()),
    }
}

/// The conjunction over each nonempty subset of disjuncts with sign
/// (-1)^(|J|+1), in subset order.
pub fn subset_terms(phi: &DisjunctiveEp) -> Result<Vec<(BigInt, PpFormula)>> {
    let d = phi.disjuncts();
    if d.len() >= 32 {
        return Err(Error::LimitExceeded(format!("{} disjuncts", d.len())));
    }
    (1u32..(1 << d.len()))
        .map(|mask| {
            let parts: Vec<PpFormula> = (0..d.len())
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| d[i].clone())
                .collect();
            let sign = if mask.count_ones() % 2 == 1 {
                BigInt::one()
            } else {
                -BigInt::one()
            };
            Ok((sign, conjoin_pp(&parts)?))
        })
        .collect()
}

/// Inclusion-exclusion expansion of an all-free formula with counting-equivalent
/// terms merged.
pub fn star_expansion(phi: &DisjunctiveEp) -> Result<WeightedPpSum> {
    if let Some(d) = phi.disjuncts().iter().find(|d| !d.is_free()) {
        return Err(Error::Precondition(format!("disjunct {d} is not free")));
    }
    Ok(WeightedPpSum::merged(
        phi.lib().to_vec(),
        subset_terms(phi)?,
    ))
}

/// Free disjuncts (as a formula, if any) and sentence disjuncts.
pub fn all_free_part(phi: &DisjunctiveEp) -> (Option<DisjunctiveEp>, Vec<PpFormula>) {
    let free: Vec<PpFormula> = phi.free_disjuncts().into_iter().cloned().collect();
    let sentences = phi.sentence_disjuncts().into_iter().cloned().collect();
    let af = (!free.is_empty()).then(|| {
        DisjunctiveEp::new(phi.signature().clone(), phi.lib().to_vec(), free)
            .expect("subset of a valid formula")
    });
    (af, sentences)
}

/// Expansion of the all-free part, split by whether a term entails a sentence
/// disjunct, together with the sentence disjuncts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlusSet {
    af_star: WeightedPpSum,
    entails_sentence: Vec<bool>,
    sentences: Vec<PpFormula>,
}

impl PlusSet {
    pub fn af_star(&self) -> &WeightedPpSum {
        &self.af_star
    }

    /// Terms of the expansion that entail no sentence disjunct.
    pub fn minus_terms(&self) -> Vec<&(BigInt, PpFormula)> {
        self.af_star
            .terms()
            .iter()
            .zip(&self.entails_sentence)
            .filter(|(_, e)| !**e)
            .map(|(t, _)| t)
            .collect()
    }

    /// Terms of the expansion that entail some sentence disjunct.
    pub fn dropped_terms(&self) -> Vec<&(BigInt, PpFormula)> {
        self.af_star
            .terms()
            .iter()
            .zip(&self.entails_sentence)
            .filter(|(_, e)| **e)
            .map(|(t, _)| t)
            .collect()
    }

    pub fn sentences(&self) -> &[PpFormula] {
        &self.sentences
    }

    /// The minus terms followed by the sentence disjuncts.
    pub fn formulas(&self) -> Vec<&PpFormula> {
        self.minus_terms()
            .into_iter()
            .map(|(_, phi)| phi)
            .chain(&self.sentences)
            .collect()
    }

    pub fn is_minus_term(&self, psi: &PpFormula) -> bool {
        let text = psi.canonical_text();
        self.minus_terms().iter().any(|(_, t)| t.to_text() == text)
    }

    pub fn is_sentence(&self, psi: &PpFormula) -> bool {
        let text = psi.canonical_text();
        self.sentences.iter().any(|t| t.canonical_text() == text)
    }

    pub fn contains(&self, psi: &PpFormula) -> bool {
        self.is_minus_term(psi) || self.is_sentence(psi)
    }

    /// Serialized set: weighted minus terms, then sentence disjuncts with `S`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (c, phi) in self.minus_terms() {
            out.push_str(&format!("{c} {}\n", phi.to_text()));
        }
        for s in &self.sentences {
            out.push_str(&format!("S {}\n", s.canonical_text()));
        }
        out
    }
}

impl fmt::Display for PlusSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

pub fn plus_set(phi: &DisjunctiveEp) -> Result<PlusSet> {
    if !phi.is_normalized() {
        return Err(Error::Precondition("formula is not normalized".into()));
    }
    let (af, sentences) = all_free_part(phi);
    let af_star = match &af {
        Some(af) => star_expansion(af)?,
        None => WeightedPpSum::empty(phi.lib().to_vec()),
    };
    let sentence_augs: Vec<_> = sentences.iter().map(PpFormula::augmented).collect();
    let entails_sentence = af_star
        .terms()
        .iter()
        .map(|(_, psi)| {
            let aug = psi.augmented();
            sentence_augs.iter().any(|s| homomorphic(s, &aug))
        })
        .collect();
    Ok(PlusSet {
        af_star,
        entails_sentence,
        sentences,
    })
}
