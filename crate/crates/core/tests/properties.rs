use epcount_core::enumerate::all_structures;
use epcount_core::equivalence::counting_distinguisher;
use epcount_core::random::{default_signature, Generator, PpKind, Shape};
use epcount_core::structure::product;
use epcount_core::{
    brute_force_count, count_ep, count_pp, counting_equivalent, normalize_ep, parse_formula,
    parse_structure, semi_counting_equivalent, EpFormula, PpFormula, SearchLimits, Signature,
};
use proptest::prelude::*;

fn reparse(phi: &EpFormula) -> EpFormula {
    parse_formula(&format!(
        "sig {}\nquery q {}",
        phi.signature(),
        phi.to_text()
    ))
    .unwrap()
}

fn reparse_pp(p: &PpFormula) -> PpFormula {
    epcount_core::to_structure_view(&reparse(&p.to_ep_formula())).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printed_formulas_parse_back(seed in any::<u64>()) {
        let mut gen = Generator::new(seed, default_signature());
        let phi = gen.ep(&Shape::default());
        let again = reparse(&phi);
        prop_assert_eq!(again.to_text(), phi.to_text());
        let b = gen.structure(1, 3, 0.4);
        prop_assert_eq!(brute_force_count(&again, &b).unwrap(), brute_force_count(&phi, &b).unwrap());
    }

    #[test]
    fn printed_structures_parse_back(seed in any::<u64>()) {
        let mut gen = Generator::new(seed, default_signature());
        let b = gen.structure(1, 5, 0.3);
        let again = parse_structure(&b.to_text("B"), b.signature()).unwrap();
        prop_assert_eq!(again, b);
    }

    #[test]
    fn engines_agree(seed in any::<u64>()) {
        let mut gen = Generator::new(seed, default_signature());
        let phi = gen.ep(&Shape::default());
        let b = gen.structure(1, 4, 0.35);
        prop_assert_eq!(count_ep(&phi, &b).unwrap(), brute_force_count(&phi, &b).unwrap());
        let lib = gen.lib(0, 3);
        let p = gen.pp(&lib, &Shape::default(), PpKind::Any);
        prop_assert_eq!(count_pp(&p, &b).unwrap(), brute_force_count(&p.to_ep_formula(), &b).unwrap());
    }

    #[test]
    fn normalization_is_idempotent(seed in any::<u64>()) {
        let mut gen = Generator::new(seed, default_signature());
        let phi = gen.ep(&Shape::default());
        let once = normalize_ep(&phi);
        let twice = normalize_ep(&once.to_ep_formula());
        prop_assert_eq!(once.to_text(), twice.to_text());
        prop_assert!(once.is_normalized());
    }

    #[test]
    fn counts_multiply_over_products(seed in any::<u64>()) {
        let mut gen = Generator::new(seed, default_signature());
        let lib = gen.lib(1, 2);
        let p = gen.pp(&lib, &Shape::default(), PpKind::Any);
        let (b, c) = (gen.structure(1, 3, 0.4), gen.structure(1, 3, 0.4));
        let bc = product(&b, &c).unwrap();
        prop_assert_eq!(count_pp(&p, &bc).unwrap(), count_pp(&p, &b).unwrap() * count_pp(&p, &c).unwrap());
    }

    #[test]
    fn counting_verdicts_are_symmetric_and_witnessed(seed in any::<u64>()) {
        let mut gen = Generator::new(seed, default_signature());
        let shape = Shape { max_vars: 3, max_atoms: 3, ..Shape::default() };
        let lib = gen.lib(1, 2);
        let p = gen.pp(&lib, &shape, PpKind::Any);
        let q = gen.pp(&lib, &shape, PpKind::Any);
        let forward = counting_equivalent(&p, &q).unwrap().equivalent;
        prop_assert_eq!(forward, counting_equivalent(&q, &p).unwrap().equivalent);
        prop_assert!(counting_equivalent(&p, &p.core()).unwrap().equivalent);
        prop_assert!(counting_equivalent(&p, &reparse_pp(&p.canonical())).unwrap().equivalent);
        if forward {
            prop_assert!(semi_counting_equivalent(&p, &q).unwrap().equivalent);
        } else {
            let d = counting_distinguisher(&p, &q, &SearchLimits::default()).unwrap();
            prop_assert_ne!(count_pp(&p, &d).unwrap(), count_pp(&q, &d).unwrap());
        }
    }
}

#[test]
fn canonical_forms_coincide_for_renamed_quantifiers() {
    let a =
        parse_formula("sig E/2\nquery a lib(x,y): exists u,v. E(x,u) & E(u,v) & E(v,y)").unwrap();
    let b =
        parse_formula("sig E/2\nquery b lib(x,y): exists s,t. E(t,y) & E(s,t) & E(x,s)").unwrap();
    let (a, b) = (
        epcount_core::to_structure_view(&a).unwrap(),
        epcount_core::to_structure_view(&b).unwrap(),
    );
    assert_eq!(a.canonical_text(), b.canonical_text());
}

#[test]
fn engines_agree_on_every_small_edge_structure() {
    let sig = Signature::from_pairs([("E", 2)]).unwrap();
    let phi = parse_formula("sig E/2\nquery q lib(w,x,y,z): E(x,y) & (E(w,x) | (E(y,z) & E(z,z)))")
        .unwrap();
    let path = epcount_core::to_structure_view(
        &parse_formula("sig E/2\nquery p lib(x,y): exists z. E(x,z) & E(z,y)").unwrap(),
    )
    .unwrap();
    for b in all_structures(&sig, 3) {
        assert_eq!(
            count_ep(&phi, &b).unwrap(),
            brute_force_count(&phi, &b).unwrap(),
            "{b}"
        );
        assert_eq!(
            count_pp(&path, &b).unwrap(),
            brute_force_count(&path.to_ep_formula(), &b).unwrap()
        );
    }
}
