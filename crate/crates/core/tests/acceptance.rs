//! Acceptance run: one line per criterion, nonzero exit status if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use epcount_core::classify::{graph_of, treewidth};
use epcount_core::enumerate::all_structures;
use epcount_core::equivalence::{counting_distinguisher, SearchLimits};
use epcount_core::expansion::{plus_set, star_expansion};
use epcount_core::normalize::{normalize_disjunctive, DisjunctiveEp};
use epcount_core::oracle::{
    brute_force_oracle, ep_count_from_pp_oracle, exact_pp_oracle, pp_count_from_ep_oracle,
    split_semi_class, CountOracle, RecoveryPlan,
};
use epcount_core::random::{default_signature, Generator, PpKind, Shape};
use epcount_core::structure::{full_structure, unit_structure};
use epcount_core::{
    brute_force_count, classify_set, conjoin_pp, count_pp, counting_equivalent, normalize_ep,
    parse_formula, parse_structure, semi_counting_equivalent, to_structure_view, PpFormula,
    Signature, Structure,
};
use num_bigint::{BigInt, BigUint};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

const THREE_PATHS: &str =
    "sig E/2\nquery phi lib(w,x,y,z): (E(x,y) & E(y,z)) | (E(z,w) & E(w,x)) | (E(w,x) & E(x,y))";
const NESTED: &str = "sig E/2\nquery phi lib(w,x,y,z): E(x,y) & (E(w,x) | (E(y,z) & E(z,z)))";
const C: &str = "structure C\ndomain 1 2 3 4\nrel E: (1,2) (2,3) (3,4) (4,4)\nend";

const CORPUS: [(&str, &str); 30] = [
    ("lib(x,y): E(x,y)", "lib(w,z): E(w,z)"),
    ("lib(x,y): E(x,y)", "lib(x,y): E(y,x)"),
    ("lib(x,y): E(x,y)", "lib(x,y): exists z. E(x,y) & E(x,z)"),
    ("lib(x,y): E(x,y)", "lib(x,y): exists z. E(x,z) & E(z,y)"),
    ("lib(x): E(x,x)", "lib(x): exists y. E(x,y) & E(y,x)"),
    ("lib(x): exists y. E(x,y)", "lib(x): exists y. E(y,x)"),
    ("lib(x,y): E(x,x)", "lib(x,y): E(y,y)"),
    (
        "lib(x,y): E(x,x) & E(y,y)",
        "lib(x,y): E(x,y) & E(x,x) & E(y,y)",
    ),
    ("lib(x,y,z): E(x,y) & E(y,z)", "lib(x,y,z): E(z,y) & E(y,x)"),
    ("lib(x,y,z): E(x,y) & E(y,z)", "lib(x,y,z): E(x,y) & E(x,z)"),
    ("lib(x,y,z): E(x,y) & E(x,z)", "lib(x,y,z): E(y,x) & E(z,x)"),
    (
        "lib(x,y,z): E(x,y) & E(y,z) & E(z,x)",
        "lib(x,y,z): E(y,x) & E(z,y) & E(x,z)",
    ),
    (
        "lib(x): exists a,b. E(x,a) & E(a,b) & E(b,x)",
        "lib(x): E(x,x)",
    ),
    (
        "lib(x,y): exists a. E(x,a) & E(a,a)",
        "lib(x,y): exists a. E(x,a) & E(a,a) & E(y,y)",
    ),
    (
        "lib(x): exists a,b. E(x,a) & E(a,b)",
        "lib(x): exists a,b,c. E(x,a) & E(a,b) & E(b,c)",
    ),
    (
        "lib(x): exists a,b. E(x,a) & E(x,b)",
        "lib(x): exists a. E(x,a)",
    ),
    (
        "lib(x,y): exists a. E(x,a) & E(y,a)",
        "lib(x,y): exists a. E(a,x) & E(a,y)",
    ),
    (
        "lib(x,y): exists a. E(x,a) & E(y,a)",
        "lib(y,x): exists b. E(y,b) & E(x,b)",
    ),
    ("lib(x,y,z): E(x,y)", "lib(x,y,z): E(y,z)"),
    ("lib(x,y,z): E(x,y)", "lib(x,y): E(x,y)"),
    (
        "lib(x): exists a. E(a,a)",
        "lib(x): exists a,b. E(a,b) & E(b,a)",
    ),
    (
        "lib(x): exists a,b. E(a,b) & E(b,a) & E(a,a)",
        "lib(x): exists a. E(a,a)",
    ),
    (
        "lib(x,y): E(x,y) & E(y,x)",
        "lib(x,y): E(x,y) & E(y,x) & E(x,x)",
    ),
    (
        "lib(x,y): exists a,b. E(x,a) & E(a,y) & E(x,b) & E(b,y)",
        "lib(x,y): exists a. E(x,a) & E(a,y)",
    ),
    (
        "lib(x,y): exists a,b. E(x,a) & E(a,b) & E(b,y)",
        "lib(x,y): exists p,q. E(x,p) & E(p,q) & E(q,y)",
    ),
    (
        "lib(x,y): exists a. E(x,a) & E(a,y)",
        "lib(x,y): exists a,b. E(x,a) & E(a,y) & E(b,b)",
    ),
    (
        "lib(w,x,y,z): E(x,y) & E(y,z)",
        "lib(w,x,y,z): E(z,w) & E(w,x)",
    ),
    (
        "lib(w,x,y,z): E(x,y) & E(y,z)",
        "lib(w,x,y,z): E(w,x) & E(x,y) & E(y,z)",
    ),
    ("lib(x,y): E(x,y) & E(y,y)", "lib(x,y): E(x,x) & E(x,y)"),
    (
        "lib(x,y,z): E(x,y) & E(y,z) & E(x,z)",
        "lib(x,y,z): E(x,z) & E(z,y) & E(x,y)",
    ),
];

fn edge_signature() -> Signature {
    Signature::from_pairs([("E", 2)]).unwrap()
}

fn pp(text: &str) -> PpFormula {
    to_structure_view(&parse_formula(&format!("sig E/2\nquery q {text}")).unwrap()).unwrap()
}

fn corpus() -> Vec<(PpFormula, PpFormula)> {
    CORPUS.iter().map(|(a, b)| (pp(a), pp(b))).collect()
}

fn fail_on<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn expansion_fixture() -> Outcome {
    let phi = parse_formula(THREE_PATHS).unwrap();
    let star = fail_on(star_expansion(&normalize_ep(&phi)))?;
    let coefficients: Vec<BigInt> = star.terms().iter().map(|(c, _)| c.clone()).collect();
    if coefficients != [BigInt::from(3), BigInt::from(-2)] {
        return Err(format!("coefficients {coefficients:?}"));
    }
    let [p1, _, p3] = [
        pp("lib(w,x,y,z): E(x,y) & E(y,z)"),
        pp("lib(w,x,y,z): E(z,w) & E(w,x)"),
        pp("lib(w,x,y,z): E(w,x) & E(x,y)"),
    ];
    let both = fail_on(conjoin_pp(&[p1, p3]))?;
    if !fail_on(counting_equivalent(&star.terms()[1].1, &both))?.equivalent {
        return Err("second term is not a renaming of the first and third disjunct".into());
    }
    Ok("coefficients 3 and -2".into())
}

fn recovery_fixture() -> Outcome {
    let phi = parse_formula(NESTED).unwrap();
    let star = fail_on(star_expansion(&normalize_ep(&phi)))?;
    let c = parse_structure(C, phi.signature()).unwrap();
    let plan = fail_on(RecoveryPlan::with_structure(&star, c))?;
    let oracle = brute_force_oracle(&phi);
    let mut gen = Generator::new(43, edge_signature());
    for case in 0..50 {
        let b = gen.structure(1, 4, 0.4);
        let sums = fail_on(plan.class_sums(&b, &oracle))?;
        for (j, class) in plan.classes().iter().enumerate() {
            let members: Vec<_> = class.iter().map(|&i| star.terms()[i].clone()).collect();
            let sum_oracle = |x: &Structure| -> epcount_core::Result<BigInt> {
                if *x == b {
                    Ok(sums[j].clone())
                } else {
                    Ok(plan.class_sums(x, &oracle)?.swap_remove(j))
                }
            };
            let counts = fail_on(split_semi_class(&members, &b, &sum_oracle))?;
            for ((_, t), n) in members.iter().zip(counts) {
                let expected = fail_on(brute_force_count(&t.to_ep_formula(), &b))?;
                if n != expected {
                    return Err(format!(
                        "case {case}: {t} recovered {n}, expected {expected}"
                    ));
                }
            }
        }
    }
    Ok(format!(
        "50 structures, class counts on C {:?}",
        plan.nodes()
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
    ))
}

fn inclusion_exclusion() -> Outcome {
    let shape = Shape {
        max_vars: 4,
        max_disjuncts: 3,
        ..Shape::default()
    };
    let mut gen = Generator::new(3, default_signature());
    for case in 0..500 {
        let phi = gen.all_free(&shape);
        let b = gen.structure(1, 4, 0.35);
        let star = fail_on(star_expansion(&phi))?;
        let got = fail_on(star.evaluate(|t| count_pp(t, &b)))?;
        let expected = fail_on(brute_force_count(&phi.to_ep_formula(), &b))?;
        if got != expected {
            return Err(format!(
                "case {case}: {} gives {got}, expected {expected}",
                phi.to_text()
            ));
        }
    }
    Ok("500 formulas".into())
}

fn deciders_vs_exhaustive() -> Outcome {
    let structures: Vec<Structure> = all_structures(&edge_signature(), 3).collect();
    let limits = SearchLimits::default();
    let mut equivalent_pairs = 0;
    for (k, (p, q)) in corpus().iter().enumerate() {
        let verdict = fail_on(counting_equivalent(p, q))?;
        let mut agree_everywhere = true;
        for s in &structures {
            if fail_on(count_pp(p, s))? != fail_on(count_pp(q, s))? {
                agree_everywhere = false;
                break;
            }
        }
        if verdict.equivalent != agree_everywhere {
            return Err(format!(
                "pair {}: decider says {}, exhaustive says {}",
                k + 1,
                verdict.equivalent,
                agree_everywhere
            ));
        }
        if verdict.equivalent {
            equivalent_pairs += 1;
            continue;
        }
        let d = fail_on(counting_distinguisher(p, q, &limits))?;
        let (a, b) = (
            fail_on(brute_force_count(&p.to_ep_formula(), &d))?,
            fail_on(brute_force_count(&q.to_ep_formula(), &d))?,
        );
        if a == b {
            return Err(format!(
                "pair {}: distinguisher gives equal counts {a}",
                k + 1
            ));
        }
    }
    Ok(format!(
        "30 pairs, {equivalent_pairs} equivalent, {} structures",
        structures.len()
    ))
}

fn semi_counting_consistency() -> Outcome {
    for (k, (p, q)) in corpus().iter().enumerate() {
        let semi = fail_on(semi_counting_equivalent(p, q))?.equivalent;
        let hats = fail_on(counting_equivalent(&fail_on(p.hat())?, &fail_on(q.hat())?))?.equivalent;
        if semi != hats {
            return Err(format!("pair {}: semi {semi}, hats {hats}", k + 1));
        }
    }
    let mut gen = Generator::new(5, default_signature());
    let shape = Shape::default();
    for case in 0..200 {
        let lib = gen.lib(1, shape.max_lib);
        let p = gen.pp(&lib, &shape, PpKind::Any);
        let b = gen.structure(1, 4, 0.3);
        let n = fail_on(brute_force_count(&p.to_ep_formula(), &b))?;
        let hat = fail_on(brute_force_count(&fail_on(p.hat())?.to_ep_formula(), &b))?;
        if n != BigUint::from(0u32) && n != hat {
            return Err(format!("case {case}: {p} counts {n}, hat counts {hat}"));
        }
    }
    Ok("30 pairs, 200 samples".into())
}

/// Normalized formula with one or two free disjuncts and up to two sentence
/// disjuncts, so the recovery queries stay small enough for the reference evaluator.
fn round_trip_formula(gen: &mut Generator, shape: &Shape, sentences: usize) -> DisjunctiveEp {
    let lib = gen.lib(1, shape.max_lib);
    let free = 1 + usize::from(gen.rng().gen_bool(0.5));
    let mut disjuncts: Vec<PpFormula> = (0..free)
        .map(|_| gen.pp(&lib, shape, PpKind::Free))
        .collect();
    disjuncts.extend((0..sentences).map(|_| gen.pp(&lib, shape, PpKind::Sentence)));
    normalize_disjunctive(&DisjunctiveEp::new(gen.signature().clone(), lib, disjuncts).unwrap())
}

fn round_trips() -> Outcome {
    let shape = Shape {
        max_lib: 3,
        max_vars: 3,
        max_atoms: 3,
        max_disjuncts: 4,
    };
    let limits = SearchLimits::default();
    let mut gen = Generator::new(7, default_signature());
    let mut with_sentences = 0;
    let max_query = std::cell::Cell::new(0);
    for case in 0..100 {
        let phi = round_trip_formula(&mut gen, &shape, case % 3);
        if !phi.sentence_disjuncts().is_empty() {
            with_sentences += 1;
        }
        let ep = phi.to_ep_formula();
        let plus = fail_on(plus_set(&phi))?;
        let b = gen.structure(1, 3, 0.4);
        let expected = fail_on(brute_force_count(&ep, &b))?;
        let got = fail_on(ep_count_from_pp_oracle(&phi, &plus, &b, &exact_pp_oracle()))?;
        if got != expected {
            return Err(format!(
                "case {case}: {} recovered {got}, expected {expected}",
                phi.to_text()
            ));
        }
        let reference = brute_force_oracle(&ep);
        let oracle = |s: &Structure| {
            max_query.set(max_query.get().max(s.size()));
            reference.count(s)
        };
        for psi in plus.formulas() {
            let got = fail_on(pp_count_from_ep_oracle(
                psi, &phi, &plus, &b, &oracle, &limits,
            ))?;
            let expected = fail_on(count_pp(psi, &b))?;
            if got != expected {
                return Err(format!(
                    "case {case}: {psi} recovered {got}, expected {expected}"
                ));
            }
        }
    }
    if with_sentences < 20 {
        return Err(format!(
            "only {with_sentences} formulas with sentence disjuncts"
        ));
    }
    Ok(format!(
        "100 formulas, {with_sentences} with sentence disjuncts, largest oracle query {} elements",
        max_query.get()
    ))
}

fn classifier_fixture() -> Outcome {
    let phi = parse_formula(THREE_PATHS).unwrap();
    let report = fail_on(classify_set(&[phi], 1))?;
    if report.case != 1 {
        return Err(format!("case {}", report.case));
    }
    let both = fail_on(conjoin_pp(&[
        pp("lib(w,x,y,z): E(x,y) & E(y,z)"),
        pp("lib(w,x,y,z): E(z,w) & E(w,x)"),
    ]))?;
    let tw = treewidth(&graph_of(&both));
    if !tw.exact || tw.value != 2 {
        return Err(format!("treewidth {tw:?}"));
    }
    Ok("case 1, conjunction treewidth 2".into())
}

fn full_relation_sanity() -> Outcome {
    let mut gen = Generator::new(8, default_signature());
    let shape = Shape::default();
    let full = full_structure(gen.signature(), 2);
    let unit = unit_structure(gen.signature());
    for case in 0..200 {
        let lib = gen.lib(0, shape.max_lib);
        let p = gen.pp(&lib, &shape, PpKind::Any);
        let expected = BigUint::from(1u32) << p.lib().len();
        for (name, s, want) in [
            ("full", &full, expected),
            ("unit", &unit, BigUint::from(1u32)),
        ] {
            let n = fail_on(count_pp(&p, s))?;
            let reference = fail_on(brute_force_count(&p.to_ep_formula(), s))?;
            if n != want || reference != want {
                return Err(format!("case {case}: {p} on {name} counts {n}"));
            }
        }
    }
    Ok("200 formulas".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        (
            "expansion of the three-path disjunction",
            Duration::from_secs(1),
            expansion_fixture,
        ),
        (
            "oracle recovery with the fixed path structure",
            Duration::from_secs(30),
            recovery_fixture,
        ),
        (
            "inclusion-exclusion identity",
            Duration::from_secs(300),
            inclusion_exclusion,
        ),
        (
            "counting equivalence vs exhaustive counts",
            Duration::from_secs(300),
            deciders_vs_exhaustive,
        ),
        (
            "semi-counting equivalence vs hats",
            Duration::from_secs(120),
            semi_counting_consistency,
        ),
        ("oracle round trips", Duration::from_secs(600), round_trips),
        (
            "classifier fixture",
            Duration::from_secs(1),
            classifier_fixture,
        ),
        (
            "full and unit structures",
            Duration::from_secs(1),
            full_relation_sanity,
        ),
    ];
    let mut all = true;
    for (k, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= *limit => (true, d),
            Ok(d) => (false, format!("{d}; over the {limit:?} limit")),
            Err(e) => (false, e),
        };
        all &= ok;
        println!(
            "[{}] criterion {}: {name} ({elapsed:.2?}) {detail}",
            if ok { "PASS" } else { "FAIL" },
            k + 1
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
