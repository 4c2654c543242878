//! Randomized cross-checks of the counting paths against the reference evaluator.

use num_traits::Zero;
use rand::Rng;

use crate::count::{brute_force_count, count_ep, count_pp};
use crate::enumerate::all_structures;
use crate::equivalence::{counting_equivalent, SearchLimits};
use crate::error::Result;
use crate::expansion::{plus_set, star_expansion};
use crate::normalize::{normalize_disjunctive, normalize_ep};
use crate::oracle::{
    brute_force_oracle, ep_count_from_pp_oracle, exact_pp_oracle, pp_count_from_ep_oracle,
};
use crate::random::{default_signature, Generator, PpKind, Shape};
use crate::structure::product;

#[derive(Clone, Debug)]
pub struct SuiteResult {
    pub name: &'static str,
    pub cases: usize,
    pub failures: Vec<String>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

type Suite = fn(&mut Generator, usize) -> Result<Vec<String>>;

fn pp_vs_reference(g: &mut Generator, cases: usize) -> Result<Vec<String>> {
    let shape = Shape::default();
    let mut failures = Vec::new();
    for _ in 0..cases {
        let lib = g.lib(0, 3);
        let p = g.pp(&lib, &shape, PpKind::Any);
        let b = g.structure(1, 4, 0.35);
        let (fast, slow) = (
            count_pp(&p, &b)?,
            brute_force_count(&p.to_ep_formula(), &b)?,
        );
        if fast != slow {
            failures.push(format!("{p}: {fast} vs {slow} on\n{b}"));
        }
    }
    Ok(failures)
}

fn ep_vs_reference(g: &mut Generator, cases: usize) -> Result<Vec<String>> {
    let shape = Shape::default();
    let mut failures = Vec::new();
    for _ in 0..cases {
        let phi = g.ep(&shape);
        let b = g.structure(1, 3, 0.35);
        let (fast, slow) = (count_ep(&phi, &b)?, brute_force_count(&phi, &b)?);
        if fast != slow {
            failures.push(format!("{phi}: {fast} vs {slow} on\n{b}"));
        }
    }
    Ok(failures)
}

fn inclusion_exclusion(g: &mut Generator, cases: usize) -> Result<Vec<String>> {
    let shape = Shape::default();
    let mut failures = Vec::new();
    for _ in 0..cases {
        let phi = g.all_free(&shape);
        let star = star_expansion(&phi)?;
        let b = g.structure(1, 4, 0.35);
        let sum = star.evaluate(|t| count_pp(t, &b))?;
        let reference = brute_force_count(&phi.to_ep_formula(), &b)?;
        if sum != reference {
            failures.push(format!("{phi}: {sum} vs {reference}"));
        }
    }
    Ok(failures)
}

fn hat_solutions(g: &mut Generator, cases: usize) -> Result<Vec<String>> {
    let shape = Shape::default();
    let mut failures = Vec::new();
    for _ in 0..cases {
        let lib = g.lib(1, 3);
        let p = g.pp(&lib, &shape, PpKind::Any);
        let b = g.structure(1, 4, 0.35);
        let n = count_pp(&p, &b)?;
        if !n.is_zero() && n != count_pp(&p.hat()?, &b)? {
            failures.push(format!("{p} on\n{b}"));
        }
    }
    Ok(failures)
}

fn multiplicativity(g: &mut Generator, cases: usize) -> Result<Vec<String>> {
    let shape = Shape::default();
    let mut failures = Vec::new();
    for _ in 0..cases {
        let lib = g.lib(0, 3);
        let p = g.pp(&lib, &shape, PpKind::Any);
        let (b1, b2) = (g.structure(1, 3, 0.4), g.structure(1, 3, 0.4));
        let whole = count_pp(&p, &product(&b1, &b2)?)?;
        let parts = count_pp(&p, &b1)? * count_pp(&p, &b2)?;
        if whole != parts {
            failures.push(format!("{p}: {whole} vs {parts}"));
        }
    }
    Ok(failures)
}

fn counting_soundness(g: &mut Generator, cases: usize) -> Result<Vec<String>> {
    let shape = Shape {
        max_atoms: 3,
        ..Shape::default()
    };
    let mut failures = Vec::new();
    let structures: Vec<_> = all_structures(g.signature(), 2).collect();
    for _ in 0..cases {
        let lib = g.lib(1, 2);
        let p = g.pp(&lib, &shape, PpKind::Any);
        let q = if g.rng().gen_bool(0.5) {
            g.pp(&lib, &shape, PpKind::Any)
        } else {
            p.canonical()
        };
        let verdict = counting_equivalent(&p, &q)?;
        let mut agree = true;
        for s in &structures {
            if count_pp(&p, s)? != count_pp(&q, s)? {
                agree = false;
                break;
            }
        }
        if verdict.equivalent && !agree {
            failures.push(format!("{p} and {q} declared equivalent"));
        }
    }
    Ok(failures)
}

fn normalization(g: &mut Generator, cases: usize) -> Result<Vec<String>> {
    let shape = Shape::default();
    let mut failures = Vec::new();
    for _ in 0..cases {
        let phi = g.ep(&shape);
        let normal = normalize_ep(&phi);
        if !normal.is_normalized() || normalize_disjunctive(&normal) != normal {
            failures.push(format!("{phi} normalizes to {normal}"));
            continue;
        }
        let b = g.structure(1, 3, 0.35);
        let (a, r) = (
            brute_force_count(&normal.to_ep_formula(), &b)?,
            brute_force_count(&phi, &b)?,
        );
        if a != r {
            failures.push(format!("{phi}: {a} vs {r}"));
        }
    }
    Ok(failures)
}

fn oracle_round_trips(g: &mut Generator, cases: usize) -> Result<Vec<String>> {
    let shape = Shape {
        max_lib: 2,
        max_vars: 3,
        max_atoms: 2,
        max_disjuncts: 3,
    };
    let mut failures = Vec::new();
    for i in 0..cases {
        let phi = normalize_disjunctive(&g.disjunctive(&shape, i % 2 == 0));
        let plus = plus_set(&phi)?;
        let ep = phi.to_ep_formula();
        let b = g.structure(1, 3, 0.4);
        let reference = brute_force_count(&ep, &b)?;
        let got = ep_count_from_pp_oracle(&phi, &plus, &b, &exact_pp_oracle())?;
        if got != reference {
            failures.push(format!("{phi}: {got} vs {reference}"));
        }
        for psi in plus.formulas() {
            let got = pp_count_from_ep_oracle(
                psi,
                &phi,
                &plus,
                &b,
                &brute_force_oracle(&ep),
                &SearchLimits::default(),
            )?;
            let want = count_pp(psi, &b)?;
            if got != want {
                failures.push(format!("{psi} in {phi}: {got} vs {want}"));
            }
        }
    }
    Ok(failures)
}

const SUITES: [(&str, Suite, usize); 8] = [
    (
        "count_pp agrees with the reference evaluator",
        pp_vs_reference,
        1,
    ),
    (
        "count_ep agrees with the reference evaluator",
        ep_vs_reference,
        1,
    ),
    ("inclusion-exclusion identity", inclusion_exclusion, 1),
    ("count is zero or equals the hat count", hat_solutions, 1),
    ("counts multiply over products", multiplicativity, 1),
    (
        "counting equivalence implies equal counts",
        counting_soundness,
        4,
    ),
    ("normalization preserves counts", normalization, 1),
    ("oracle round trips", oracle_round_trips, 8),
];

/// Runs every suite with `cases` cases (fewer for the expensive ones).
pub fn run_selftest(seed: u64, cases: usize) -> Result<Vec<SuiteResult>> {
    SUITES
        .iter()
        .enumerate()
        .map(|(i, &(name, suite, divisor))| {
            let mut g = Generator::new(seed.wrapping_add(i as u64), default_signature());
            let n = (cases / divisor).max(1);
            Ok(SuiteResult {
                name,
                cases: n,
                failures: suite(&mut g, n)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass() {
        for r in run_selftest(11, 40).unwrap() {
            assert!(r.passed(), "{}: {:?}", r.name, r.failures);
        }
    }
}
