mod common;

use common::int_tuple;
use l0conc::families::{pullback_family, translate_family, FamilyDescriptor};
use l0conc::groups::{Element, WordGroup};
use l0conc::l0_step::{h_embed, PiecewiseMap};
use proptest::prelude::*;

const DESCRIPTORS: [&str; 4] = [
    "wordlen-clamp:c=3,windows=4",
    "disagreement:windows=3",
    "signed-ramp:c=2,windows=2+cell-indicator-smoothed:c=2",
    "wordlen-clamp:c=1,shift=1+disagreement",
];

proptest! {
    #[test]
    fn l0_families_respect_declared_constants(
        d in prop::sample::select(DESCRIPTORS.to_vec()),
        maps in prop::collection::vec((1usize..6).prop_flat_map(|n| int_tuple(n, 4)), 2..8),
    ) {
        let z = WordGroup::integers();
        let fam = FamilyDescriptor::parse(d).unwrap().build_l0(&z).unwrap();
        let samples: Vec<PiecewiseMap> = maps.into_iter().map(|t| h_embed(t).unwrap().to_piecewise()).collect();
        prop_assert!(fam.verify(&samples).is_ok());
        prop_assert_eq!(FamilyDescriptor::parse(&FamilyDescriptor::parse(d).unwrap().to_string()).unwrap(),
            FamilyDescriptor::parse(d).unwrap());
    }

    #[test]
    fn pullbacks_are_lipschitz_with_constant_l_over_n(
        (n, i, rest) in (1usize..6).prop_flat_map(|n| (Just(n), 1..=n, int_tuple(n - 1, 4))),
        points in prop::collection::vec((-6i64..=6).prop_map(Element::int), 2..10),
    ) {
        let z = WordGroup::integers();
        let fam = FamilyDescriptor::parse("wordlen-clamp:c=2,windows=3+disagreement").unwrap().build_l0(&z).unwrap();
        let pulled = pullback_family(&fam, n, i, &rest).unwrap();
        prop_assert_eq!(pulled.lipschitz(), fam.lipschitz() / n as f64);
        prop_assert!(pulled.verify(&points).is_ok());
    }

    #[test]
    fn translated_group_families_keep_constants(g in -5i64..5, points in prop::collection::vec((-6i64..=6).prop_map(Element::int), 2..10)) {
        let z = WordGroup::integers();
        let fam = FamilyDescriptor::parse("wordlen-clamp:c=3+signed-ramp:c=2").unwrap().build_group(&z).unwrap();
        let moved = translate_family(&fam, &Element::int(g)).unwrap();
        prop_assert!(moved.verify(&points).is_ok());
        for x in &points {
            for m in 0..fam.len() {
                let shifted = z.compose(&Element::int(g), x).unwrap();
                prop_assert_eq!(moved.eval_member(m, x).unwrap(), fam.eval_member(m, &shifted).unwrap());
            }
        }
    }
}
