//! Recovering counts through counting oracles, in both directions between a
//! formula and the primitive positive formulas of its expansion.

use std::sync::Mutex;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::count::{brute_force_count, count_pp, pow};
use crate::equivalence::{
    are_counting_equivalent, joint_distinguishing_structure, min_hom_order_witness,
    semi_counting_classes, SearchLimits,
};
use crate::error::{Error, Result};
use crate::expansion::{to_count, PlusSet, WeightedPpSum};
use crate::formula::EpFormula;
use crate::hom::homomorphic;
use crate::normalize::DisjunctiveEp;
use crate::pp::PpFormula;
use crate::structure::{disjoint_union_all, power, product, Structure};
use crate::vandermonde::solve_vandermonde_integral;

/// Answer counts of one fixed formula.
pub trait CountOracle {
    fn count(&self, b: &Structure) -> Result<BigUint>;
}

impl<F: Fn(&Structure) -> Result<BigUint>> CountOracle for F {
    fn count(&self, b: &Structure) -> Result<BigUint> {
        self(b)
    }
}

/// Answer counts of any primitive positive formula.
pub trait PpCountOracle {
    fn count(&self, psi: &PpFormula, b: &Structure) -> Result<BigUint>;
}

impl<F: Fn(&PpFormula, &Structure) -> Result<BigUint>> PpCountOracle for F {
    fn count(&self, psi: &PpFormula, b: &Structure) -> Result<BigUint> {
        self(psi, b)
    }
}

/// Oracle backed by the reference evaluator.
pub fn brute_force_oracle(phi: &EpFormula) -> impl CountOracle + '_ {
    move |b: &Structure| brute_force_count(phi, b)
}

/// Oracle backed by the primitive positive counting path.
pub fn exact_pp_oracle() -> impl PpCountOracle {
    |psi: &PpFormula, b: &Structure| count_pp(psi, b)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleCall {
    pub label: String,
    pub structure_size: usize,
    pub tuple_count: usize,
    pub answer: BigUint,
}

/// Wraps an oracle and keeps a transcript of its calls.
pub struct RecordingOracle<O> {
    inner: O,
    label: String,
    calls: Mutex<Vec<OracleCall>>,
}

impl<O: CountOracle> RecordingOracle<O> {
    pub fn new(label: impl Into<String>, inner: O) -> Self {
        Self {
            inner,
            label: label.into(),
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> Vec<OracleCall> {
        self.calls.lock().unwrap().clone()
    }

    pub fn call_count(&self) -> usize {
        self.calls.lock().unwrap().len()
    }
}

impl<O: CountOracle> CountOracle for RecordingOracle<O> {
    fn count(&self, b: &Structure) -> Result<BigUint> {
        let answer = self.inner.count(b)?;
        self.calls.lock().unwrap().push(OracleCall {
            label: self.label.clone(),
            structure_size: b.size(),
            tuple_count: b.tuple_count(),
            answer: answer.clone(),
        });
        Ok(answer)
    }
}

/// Semi-counting classes of an expansion with a structure on which every class
/// member is positive and the classes have pairwise distinct counts.
#[derive(Clone, Debug)]
pub struct RecoveryPlan {
    star: WeightedPpSum,
    classes: Vec<Vec<usize>>,
    structure: Structure,
    nodes: Vec<BigUint>,
    max_query_size: usize,
}

impl RecoveryPlan {
    pub fn new(star: &WeightedPpSum, limits: &SearchLimits) -> Result<Self> {
        let formulas: Vec<PpFormula> = star.terms().iter().map(|(_, p)| p.clone()).collect();
        if formulas.is_empty() {
            return Err(Error::Precondition("empty expansion".into()));
        }
        let c = joint_distinguishing_structure(&formulas, limits)?;
        Ok(Self::with_structure(star, c)?.with_query_limit(limits.max_query_size))
    }

    /// Refuses oracle queries on structures with more than `max` elements.
    pub fn with_query_limit(mut self, max: usize) -> Self {
        self.max_query_size = max;
        self
    }

    /// Uses `c` as the separating structure after checking that it qualifies.
    pub fn with_structure(star: &WeightedPpSum, c: Structure) -> Result<Self> {
        let formulas: Vec<PpFormula> = star.terms().iter().map(|(_, p)| p.clone()).collect();
        let classes = semi_counting_classes(&formulas)?;
        let mut nodes = Vec::with_capacity(classes.len());
        for class in &classes {
            let counts = class
                .iter()
                .map(|&i| count_pp(&formulas[i], &c))
                .collect::<Result<Vec<_>>>()?;
            if counts[0].is_zero() || counts.iter().any(|n| *n != counts[0]) {
                return Err(Error::Precondition(
                    "structure does not give one positive count per class".into(),
                ));
            }
            if nodes.contains(&counts[0]) {
                return Err(Error::Precondition(
                    "structure gives two classes the same count".into(),
                ));
            }
            nodes.push(counts[0].clone());
        }
        Ok(Self {
            star: star.clone(),
            classes,
            structure: c,
            nodes,
            max_query_size: SearchLimits::default().max_query_size,
        })
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    /// Count of every member of each class on the separating structure.
    pub fn nodes(&self) -> &[BigUint] {
        &self.nodes
    }

    pub fn star(&self) -> &WeightedPpSum {
        &self.star
    }

    /// Σ c·|ψ(b)| over each class, from one oracle call on b × C^l per class.
    pub fn class_sums(&self, b: &Structure, oracle: &dyn CountOracle) -> Result<Vec<BigInt>> {
        let largest =
            (self.structure.size() as f64).powi(self.classes.len() as i32 - 1) * b.size() as f64;
        if largest > self.max_query_size as f64 {
            return Err(Error::LimitExceeded(format!(
                "oracle queries would reach {largest} elements, above the limit of {}",
                self.max_query_size
            )));
        }
        let rhs = (0..self.classes.len())
            .map(|l| {
                let x = product(b, &power(&self.structure, l)?)?;
                oracle.count(&x).map(BigInt::from)
            })
            .collect::<Result<Vec<_>>>()?;
        let nodes: Vec<BigInt> = self.nodes.iter().cloned().map(BigInt::from).collect();
        solve_vandermonde_integral(&nodes, &rhs)
    }

    /// Count of every expansion term on b, in term order. The class sums on b are
    /// queried once; classes with several members make further calls per level.
    pub fn term_counts(&self, b: &Structure, oracle: &dyn CountOracle) -> Result<Vec<BigUint>> {
        let terms = self.star.terms();
        let on_b = self.class_sums(b, oracle)?;
        let mut out = vec![BigUint::zero(); terms.len()];
        for (j, class) in self.classes.iter().enumerate() {
            let members: Vec<(BigInt, PpFormula)> =
                class.iter().map(|&i| terms[i].clone()).collect();
            let sum_oracle = |x: &Structure| -> Result<BigInt> {
                if x == b {
                    Ok(on_b[j].clone())
                } else {
                    Ok(self.class_sums(x, oracle)?.swap_remove(j))
                }
            };
            let counts = split_semi_class(&members, b, &sum_oracle)?;
            for (&i, n) in class.iter().zip(counts) {
                out[i] = n;
            }
        }
        Ok(out)
    }
}

/// Per-class sums Σ c·|ψ(b)| of the expansion of an all-free formula, from an
/// oracle for the formula itself.
pub fn recover_class_sums(
    phi: &DisjunctiveEp,
    star: &WeightedPpSum,
    b: &Structure,
    oracle: &dyn CountOracle,
    limits: &SearchLimits,
) -> Result<(RecoveryPlan, Vec<BigInt>)> {
    if !phi.is_all_free() {
        return Err(Error::Precondition(
            "formula has a sentence disjunct".into(),
        ));
    }
    let plan = RecoveryPlan::new(star, limits)?;
    let sums = plan.class_sums(b, oracle)?;
    Ok((plan, sums))
}

fn exact_div(a: &BigInt, b: &BigInt) -> Result<BigInt> {
    if b.is_zero() {
        return Err(Error::OracleInconsistency("division by zero".into()));
    }
    let (q, r) = a.div_rem(b);
    if !r.is_zero() {
        return Err(Error::OracleInconsistency(format!(
            "{a} is not divisible by {b}"
        )));
    }
    Ok(q)
}

/// Counts of the terms of one semi-counting class on `b`, given an oracle for the
/// weighted sum of the class.
///
/// Each level picks a term whose structure receives no homomorphism from the other
/// remaining terms; on b × (that structure) only it and already recovered terms
/// count, so one oracle call isolates it. The last term is read off `b` itself.
pub fn split_semi_class(
    terms: &[(BigInt, PpFormula)],
    b: &Structure,
    sum_oracle: &dyn Fn(&Structure) -> Result<BigInt>,
) -> Result<Vec<BigUint>> {
    if terms.iter().any(|(c, _)| c.is_zero()) {
        return Err(Error::Precondition("zero coefficient".into()));
    }
    let mut known: Vec<Option<BigUint>> = vec![None; terms.len()];
    let mut remaining: Vec<usize> = (0..terms.len()).collect();
    while !remaining.is_empty() {
        let (i, x, c) = if remaining.len() == 1 {
            (remaining[0], b.clone(), None)
        } else {
            let formulas: Vec<PpFormula> = remaining.iter().map(|&k| terms[k].1.clone()).collect();
            let (pos, c) = min_hom_order_witness(&formulas)?;
            (remaining[pos], product(b, &c)?, Some(c))
        };
        let mut value = sum_oracle(&x)?;
        for (k, n) in known.iter().enumerate() {
            if let Some(n) = n {
                let on_c = match &c {
                    Some(c) => BigInt::from(count_pp(&terms[k].1, c)?),
                    None => BigInt::one(),
                };
                value -= &terms[k].0 * BigInt::from(n.clone()) * on_c;
            }
        }
        let scale = match &c {
            Some(c) => BigInt::from(count_pp(&terms[i].1, c)?),
            None => BigInt::one(),
        };
        let n = to_count(exact_div(&value, &(&terms[i].0 * scale))?)?;
        known[i] = Some(n);
        remaining.retain(|&k| k != i);
    }
    Ok(known.into_iter().map(Option::unwrap).collect())
}

/// Count of a normalized formula from counts of the formulas in its plus set.
pub fn ep_count_from_pp_oracle(
    phi: &DisjunctiveEp,
    plus: &PlusSet,
    b: &Structure,
    pp_oracle: &dyn PpCountOracle,
) -> Result<BigUint> {
    let max = pow(b.size(), phi.lib().len());
    for theta in plus.sentences() {
        if !pp_oracle.count(theta, b)?.is_zero() {
            return Ok(max);
        }
    }
    let mut total = BigInt::zero();
    for (c, psi) in plus.minus_terms() {
        total += c * BigInt::from(pp_oracle.count(psi, b)?);
    }
    let total = to_count(total)?;
    if total > max {
        return Err(Error::OracleInconsistency(format!(
            "count {total} exceeds the number of assignments {max}"
        )));
    }
    Ok(total)
}

/// Count of a formula of the plus set from an oracle for the whole formula.
///
/// A sentence disjunct holds on b exactly when the formula reaches its maximum
/// count on (its structure) × b. A free term is recovered on b × C where no
/// sentence disjunct holds on C, then divided by its count on C.
pub fn pp_count_from_ep_oracle(
    psi: &PpFormula,
    phi: &DisjunctiveEp,
    plus: &PlusSet,
    b: &Structure,
    ep_oracle: &dyn CountOracle,
    limits: &SearchLimits,
) -> Result<BigUint> {
    let v = phi.lib().len();
    if plus.is_sentence(psi) {
        let a = psi.structure();
        let x = product(a, b)?;
        let answer = ep_oracle.count(&x)?;
        let max = pow(a.size() * b.size(), v);
        return Ok(if answer == max {
            pow(b.size(), v)
        } else {
            BigUint::zero()
        });
    }
    let star = plus.af_star();
    let index = star
        .terms()
        .iter()
        .position(|(_, t)| t.to_text() == psi.canonical_text())
        .or_else(|| {
            star.terms()
                .iter()
                .position(|(_, t)| are_counting_equivalent(t, psi))
        })
        .filter(|_| {
            plus.contains(psi)
                || plus
                    .minus_terms()
                    .iter()
                    .any(|(_, t)| are_counting_equivalent(t, psi))
        })
        .ok_or_else(|| Error::Precondition(format!("{psi} is not in the plus set")))?;
    let c = separating_base(psi, plus)?;
    let plan = RecoveryPlan::new(star, limits)?;
    let base = product(b, &c)?;
    let counts = plan.term_counts(&base, ep_oracle)?;
    let on_c = BigInt::from(count_pp(&star.terms()[index].1, &c)?);
    to_count(exact_div(&BigInt::from(counts[index].clone()), &on_c)?)
}

/// Disjoint union of the minus-term structures when no sentence disjunct holds
/// there, and otherwise the structure of `psi` alone.
pub fn separating_base(psi: &PpFormula, plus: &PlusSet) -> Result<Structure> {
    let holds_sentence = |c: &Structure| {
        plus.sentences()
            .iter()
            .any(|t| homomorphic(t.structure(), c))
    };
    let parts: Vec<&Structure> = plus
        .minus_terms()
        .iter()
        .map(|(_, t)| t.structure())
        .collect();
    let union = disjoint_union_all(&parts)?;
    if !holds_sentence(&union) {
        return Ok(union);
    }
    let own = psi.structure().clone();
    if holds_sentence(&own) {
        return Err(Error::Precondition(format!(
            "{psi} entails a sentence disjunct"
        )));
    }
    Ok(own)
}
