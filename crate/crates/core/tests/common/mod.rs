#![allow(dead_code)]

use l0conc::groups::{Element, WordGroup};
use proptest::prelude::*;

pub fn groups() -> Vec<WordGroup> {
    vec![
        WordGroup::integers(),
        WordGroup::lattice(2).unwrap(),
        WordGroup::cyclic(6).unwrap(),
        WordGroup::Free2,
    ]
}

/// Elements of `group` with word length at most about `radius`.
pub fn element(group: &WordGroup, radius: i64) -> BoxedStrategy<Element> {
    match group.clone() {
        WordGroup::Lattice { dim } => prop::collection::vec(-radius..=radius, dim)
            .prop_map(Element::Lattice)
            .boxed(),
        WordGroup::Cyclic { modulus } => (0..modulus).prop_map(Element::Cyclic).boxed(),
        WordGroup::Free2 => prop::collection::vec(prop::sample::select(vec!['a', 'A', 'b', 'B']), 0..=radius as usize)
            .prop_map(|w| Element::free(&w.into_iter().collect::<String>()).unwrap())
            .boxed(),
    }
}

/// A group together with a strategy for its elements.
pub fn group_and(radius: i64) -> impl Strategy<Value = (WordGroup, Element, Element, Element)> {
    (0..4usize).prop_flat_map(move |i| {
        let g = groups()[i].clone();
        (
            Just(g.clone()),
            element(&g, radius),
            element(&g, radius),
            element(&g, radius),
        )
    })
}

/// A tuple of `n` integers in `[-r, r]` as elements of `Z`.
pub fn int_tuple(n: usize, r: i64) -> impl Strategy<Value = Vec<Element>> {
    prop::collection::vec((-r..=r).prop_map(Element::int), n)
}

/// Sorted distinct interior breakpoints.
pub fn breakpoints(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::btree_set(1u32..1000, 0..=max).prop_map(|s| s.into_iter().map(|b| b as f64 / 1000.0).collect())
}
