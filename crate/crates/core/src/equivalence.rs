//! Logical, counting and semi-counting equivalence of primitive positive formulas,
//! and structures telling inequivalent formulas apart.

use std::fmt;

use itertools::Itertools;
use num_bigint::BigUint;

use crate::count::count_pp;
use crate::enumerate::all_structures;
use crate::error::{Error, Result};
use crate::hom::{find_homomorphism, homomorphic, HomSearch};
use crate::pp::PpFormula;
use crate::structure::{disjoint_union, full_structure, power, product, unit_structure, Structure};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EquivalenceKind {
    Logical,
    Counting,
    SemiCounting,
}

impl fmt::Display for EquivalenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EquivalenceKind::Logical => "logical",
            EquivalenceKind::Counting => "counting",
            EquivalenceKind::SemiCounting => "semi-counting",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    /// Homomorphisms between the augmented structures, indexed by element.
    Homomorphisms {
        forward: Vec<usize>,
        backward: Vec<usize>,
    },
    /// Bijections between the liberal sets that extend to homomorphisms.
    Renaming {
        forward: Vec<(String, String)>,
        backward: Vec<(String, String)>,
    },
    /// A structure on which the two counts differ.
    Distinguisher {
        structure: Structure,
        counts: (BigUint, BigUint),
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivalenceVerdict {
    pub kind: EquivalenceKind,
    pub equivalent: bool,
    pub witness: Option<Witness>,
}

impl fmt::Display for EquivalenceVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.equivalent {
            "equivalent"
        } else {
            "not equivalent"
        })?;
        match &self.witness {
            Some(Witness::Renaming { forward, .. }) => {
                let pairs = forward.iter().map(|(a, b)| {
                    if a == b {
                        a.clone()
                    } else {
                        format!("{a}↔{b}")
                    }
                });
                write!(f, " (renaming witness: {})", pairs.format(", "))
            }
            Some(Witness::Distinguisher { counts, .. }) => {
                write!(
                    f,
                    " (distinguishing structure with counts {} and {})",
                    counts.0, counts.1
                )
            }
            Some(Witness::Homomorphisms { .. }) | None => Ok(()),
        }
    }
}

/// Bounds for distinguishing-structure searches.
#[derive(Clone, Debug)]
pub struct SearchLimits {
    /// Largest universe tried by exhaustive enumeration.
    pub max_enumerated_size: usize,
    /// Number of enumerated structures tried before switching strategy.
    pub max_enumerated: usize,
    /// Largest universe allowed for constructed product structures.
    pub max_product_size: usize,
    /// Largest universe of a structure handed to a counting oracle.
    pub max_query_size: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        Self {
            max_enumerated_size: 4,
            max_enumerated: 5_000,
            max_product_size: 4_096,
            max_query_size: 1 << 16,
        }
    }
}

fn check_pair(p: &PpFormula, q: &PpFormula) -> Result<()> {
    if p.signature() != q.signature() {
        return Err(Error::SignatureMismatch(format!(
            "{} vs {}",
            p.signature(),
            q.signature()
        )));
    }
    Ok(())
}

/// Same liberal set and mutually homomorphic augmented structures.
pub fn logically_equivalent(p: &PpFormula, q: &PpFormula) -> Result<EquivalenceVerdict> {
    check_pair(p, q)?;
    if !p.same_lib(q) {
        return Err(Error::LibMismatch(format!(
            "({}) vs ({})",
            p.lib().join(","),
            q.lib().join(",")
        )));
    }
    let (ap, aq) = (p.augmented(), q.augmented());
    let forward = find_homomorphism(&ap, &aq);
    let backward = find_homomorphism(&aq, &ap);
    let equivalent = forward.is_some() && backward.is_some();
    Ok(EquivalenceVerdict {
        kind: EquivalenceKind::Logical,
        equivalent,
        witness: forward
            .zip(backward)
            .map(|(forward, backward)| Witness::Homomorphisms { forward, backward }),
    })
}

/// A bijection from the liberal elements of `p` onto those of `q` that extends to
/// a homomorphism, as a full element map.
pub fn renaming_map(p: &PpFormula, q: &PpFormula) -> Option<Vec<usize>> {
    if p.lib().len() != q.lib().len() {
        return None;
    }
    let targets = q.lib_indices();
    let mut search = HomSearch::new(p.structure(), q.structure());
    for e in p.lib_indices() {
        search.restrict(e, targets.iter().copied());
    }
    search.injective_on(p.lib_indices());
    search.find()
}

fn lib_pairs(p: &PpFormula, q: &PpFormula, map: &[usize]) -> Vec<(String, String)> {
    p.lib()
        .iter()
        .zip(p.lib_indices())
        .map(|(v, e)| (v.clone(), q.structure().element(map[e]).to_string()))
        .collect()
}

/// Renaming equivalence, which coincides with equal counts on every structure.
pub fn counting_equivalent(p: &PpFormula, q: &PpFormula) -> Result<EquivalenceVerdict> {
    check_pair(p, q)?;
    let forward = renaming_map(p, q);
    let backward = forward.as_ref().and_then(|_| renaming_map(q, p));
    let witness = forward.zip(backward).map(|(f, b)| Witness::Renaming {
        forward: lib_pairs(p, q, &f),
        backward: lib_pairs(q, p, &b),
    });
    Ok(EquivalenceVerdict {
        kind: EquivalenceKind::Counting,
        equivalent: witness.is_some(),
        witness,
    })
}

pub(crate) fn are_counting_equivalent(p: &PpFormula, q: &PpFormula) -> bool {
    p.signature() == q.signature() && renaming_map(p, q).is_some() && renaming_map(q, p).is_some()
}

/// Counting equivalence of the hat formulas. Both formulas need liberal variables.
pub fn semi_counting_equivalent(p: &PpFormula, q: &PpFormula) -> Result<EquivalenceVerdict> {
    check_pair(p, q)?;
    let mut v = counting_equivalent(&p.hat()?, &q.hat()?)?;
    v.kind = EquivalenceKind::SemiCounting;
    Ok(v)
}

/// Attaches a distinguishing structure to a negative counting or semi-counting verdict.
pub fn with_distinguisher(
    mut verdict: EquivalenceVerdict,
    p: &PpFormula,
    q: &PpFormula,
    limits: &SearchLimits,
) -> Result<EquivalenceVerdict> {
    if verdict.equivalent {
        return Ok(verdict);
    }
    let structure = match verdict.kind {
        EquivalenceKind::Counting => counting_distinguisher(p, q, limits)?,
        EquivalenceKind::SemiCounting => distinguishing_pair_structure(p, q, limits)?,
        EquivalenceKind::Logical => return Ok(verdict),
    };
    let counts = (count_pp(p, &structure)?, count_pp(q, &structure)?);
    verdict.witness = Some(Witness::Distinguisher { structure, counts });
    Ok(verdict)
}

/// `a` with every element of `blow` replaced by `j` copies; a tuple is replaced by
/// every combination of copies of its entries.
fn blow_up(a: &Structure, blow: &[usize], j: usize) -> Structure {
    let mut out = Structure::new(a.signature().clone());
    let copies: Vec<Vec<usize>> = (0..a.size())
        .map(|e| {
            let name = a.element(e);
            if blow.contains(&e) {
                (0..j)
                    .map(|c| out.add_element(&format!("{name}#{c}")))
                    .collect()
            } else {
                vec![out.add_element(name)]
            }
        })
        .collect();
    for (rel, tuples) in a.relations() {
        for t in tuples {
            for choice in t
                .iter()
                .map(|&e| copies[e].iter().copied())
                .multi_cartesian_product()
            {
                out.insert_tuple(rel, choice).unwrap();
            }
        }
    }
    out
}

fn counts_differ(p: &PpFormula, q: &PpFormula, s: &Structure) -> Result<bool> {
    Ok(count_pp(p, s)? != count_pp(q, s)?)
}

/// A structure on which the counts of `p` and `q` differ.
///
/// Tries small structures in enumeration order first, then the blow-ups of either
/// formula's structure in which a subset of liberal elements is copied j times.
pub fn counting_distinguisher(
    p: &PpFormula,
    q: &PpFormula,
    limits: &SearchLimits,
) -> Result<Structure> {
    check_pair(p, q)?;
    if are_counting_equivalent(p, q) {
        return Err(Error::Precondition(
            "the formulas are counting equivalent".into(),
        ));
    }
    if p.lib().len() != q.lib().len() {
        return Ok(full_structure(p.signature(), 2));
    }
    for s in all_structures(p.signature(), limits.max_enumerated_size).take(limits.max_enumerated) {
        if counts_differ(p, q, &s)? {
            return Ok(s);
        }
    }
    let n = p.lib().len();
    for base in [p, q] {
        let lib = base.lib_indices();
        for j in 1..=n + 1 {
            for k in 0..=n {
                for blow in lib.iter().copied().combinations(k) {
                    let d = blow_up(base.structure(), &blow, j);
                    if counts_differ(p, q, &d)? {
                        return Ok(d);
                    }
                }
            }
        }
    }
    Err(Error::LimitExceeded(
        "no distinguishing structure found within the search limits".into(),
    ))
}

/// A structure on which every primitive positive formula has a positive count and
/// the counts of `p` and `q` differ. Requires the formulas not to be semi-counting
/// equivalent.
pub fn distinguishing_pair_structure(
    p: &PpFormula,
    q: &PpFormula,
    limits: &SearchLimits,
) -> Result<Structure> {
    check_pair(p, q)?;
    let (hp, hq) = (p.hat()?, q.hat()?);
    if are_counting_equivalent(&hp, &hq) {
        return Err(Error::Precondition(
            "the formulas are semi-counting equivalent".into(),
        ));
    }
    let unit = unit_structure(p.signature());
    let b = counting_distinguisher(&hp, &hq, limits)?;
    let bound = p.structure().size().max(q.structure().size()) + 1;
    for k in 1..=bound {
        let d = disjoint_union(&b, k, &unit)?;
        if counts_differ(p, q, &d)? {
            return Ok(d);
        }
    }
    for b in all_structures(p.signature(), limits.max_enumerated_size).take(limits.max_enumerated) {
        let d = disjoint_union(&b, 1, &unit)?;
        if counts_differ(p, q, &d)? {
            return Ok(d);
        }
    }
    Err(Error::LimitExceeded(
        "no positive distinguishing structure found within the search limits".into(),
    ))
}

/// Indices grouped into semi-counting equivalence classes, in order of first member.
pub fn semi_counting_classes(phis: &[PpFormula]) -> Result<Vec<Vec<usize>>> {
    let hats = phis
        .iter()
        .map(PpFormula::hat)
        .collect::<Result<Vec<_>>>()?;
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for i in 0..phis.len() {
        match classes
            .iter_mut()
            .find(|c| are_counting_equivalent(&hats[c[0]], &hats[i]))
        {
            Some(c) => c.push(i),
            None => classes.push(vec![i]),
        }
    }
    Ok(classes)
}

/// Universe bound for the quick search in [`joint_distinguishing_structure`].
const SMALL_SEARCH_SIZE: usize = 3;

fn all_distinct(values: &[BigUint]) -> bool {
    values.iter().all_unique()
}

/// A structure with positive counts for every primitive positive formula on which
/// formulas from different semi-counting classes have different counts.
///
/// Small structures `B + I` are tried first, smallest universe first. Otherwise
/// classes are added one at a time. With `C` separating the earlier classes and
/// `D` separating the new class from the one earlier class it collides with on
/// `C`, some `C^l × D` separates all of them; counts are multiplicative, so `l` is
/// chosen from counts alone before anything is built.
pub fn joint_distinguishing_structure(
    phis: &[PpFormula],
    limits: &SearchLimits,
) -> Result<Structure> {
    if phis.is_empty() {
        return Err(Error::Precondition("no formulas given".into()));
    }
    if let Some(p) = phis.iter().find(|p| !p.is_liberal()) {
        return Err(Error::Precondition(format!("{p} has no liberal variables")));
    }
    let sig = phis[0].signature().clone();
    for p in phis {
        if p.signature() != &sig {
            return Err(Error::SignatureMismatch(format!(
                "{} vs {}",
                p.signature(),
                sig
            )));
        }
    }
    let classes = semi_counting_classes(phis)?;
    let reps: Vec<&PpFormula> = classes.iter().map(|c| &phis[c[0]]).collect();
    let counts_on = |s: &Structure, upto: usize| -> Result<Vec<BigUint>> {
        reps[..upto].iter().map(|r| count_pp(r, s)).collect()
    };

    let unit = unit_structure(&sig);
    if reps.len() == 1 {
        return Ok(unit);
    }
    let small = all_structures(&sig, limits.max_enumerated_size.min(SMALL_SEARCH_SIZE))
        .take(limits.max_enumerated);
    for b in small {
        let d = disjoint_union(&b, 1, &unit)?;
        if all_distinct(&counts_on(&d, reps.len())?) {
            return Ok(d);
        }
    }

    let mut c = unit.clone();
    let mut built = true;
    for m in 1..reps.len() {
        let on_c = counts_on(&c, m + 1)?;
        if all_distinct(&on_c) {
            continue;
        }
        let clash = (0..m).find(|&i| on_c[i] == on_c[m]);
        let d = match clash {
            Some(i) => distinguishing_pair_structure(reps[i], reps[m], limits)?,
            None => unit_structure(&sig),
        };
        let on_d = counts_on(&d, m + 1)?;
        let mut chosen = None;
        for l in 0..=(m + 1) * (m + 1) {
            let values: Vec<BigUint> = on_c
                .iter()
                .zip(&on_d)
                .map(|(x, y)| num_traits::pow(x.clone(), l) * y)
                .collect();
            if all_distinct(&values) {
                chosen = Some(l);
                break;
            }
        }
        let l = chosen.ok_or_else(|| {
            Error::LimitExceeded("no exponent separates the formula classes".into())
        })?;
        let size = (c.size() as f64).powi(l as i32) * d.size() as f64;
        if size > limits.max_product_size as f64 {
            built = false;
            break;
        }
        c = product(&power(&c, l)?, &d)?;
    }
    if built && all_distinct(&counts_on(&c, reps.len())?) {
        return Ok(c);
    }
    let larger = all_structures(&sig, limits.max_enumerated_size)
        .skip_while(|b| b.size() <= SMALL_SEARCH_SIZE)
        .take(limits.max_enumerated);
    for b in larger {
        let d = disjoint_union(&b, 1, &unit)?;
        if all_distinct(&counts_on(&d, reps.len())?) {
            return Ok(d);
        }
    }
    Err(Error::LimitExceeded(
        "joint distinguishing structure exceeds the size cap".into(),
    ))
}

/// Index of a formula minimal in the homomorphism order, with its own structure:
/// no other formula's structure maps into it, so the others vanish there.
pub fn min_hom_order_witness(phis: &[PpFormula]) -> Result<(usize, Structure)> {
    if phis.is_empty() {
        return Err(Error::Precondition("no formulas given".into()));
    }
    for i in 0..phis.len() {
        let minimal = (0..phis.len())
            .all(|j| j == i || !homomorphic(phis[j].structure(), phis[i].structure()));
        if minimal {
            return Ok((i, phis[i].structure().clone()));
        }
    }
    Err(Error::Precondition(
        "formulas are homomorphically equivalent; they must be pairwise non counting equivalent within one semi-counting class".into(),
    ))
}
