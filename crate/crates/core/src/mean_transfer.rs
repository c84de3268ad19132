//! The averaging operator `Φ(f)(h) = ∫ f(h(t)) dt` from functions on `G` to
//! functions on step maps, and the transfer of means along it.

use rand::Rng;
use serde::Serialize;

use crate::amplify::{l0_defect, push_forward, L0Measure, PushMode};
use crate::families::{compose_with_translation, GroupFamily, L0Family, Member};
use crate::groups::{Element, FinSuppMeasure, WordGroup};
use crate::l0_step::{h_embed, PiecewiseMap, StepMap};
use crate::rng::{mix, sample_rng};
use crate::{Error, Result};

/// `Φ(f)(h)`: the cell-length weighted average of `f` over the values of `h`.
pub fn phi_eval(f: &Member<Element>, h: &PiecewiseMap) -> f64 {
    h.integrate_over(0.0, 1.0, |x| f.eval(x))
}

pub fn phi_eval_step(f: &Member<Element>, h: &StepMap) -> f64 {
    phi_eval(f, &h.to_piecewise())
}

/// `Φ(f)` as a function on step maps.
pub fn phi_member(f: &Member<Element>) -> Member<PiecewiseMap> {
    let f = f.clone();
    Member::new(format!("Φ({})", f.name()), move |h: &PiecewiseMap| phi_eval(&f, h))
}

/// `{Φf}` with bound `B` and Lipschitz constant `2B` for the disagreement
/// metric.
pub fn phi_family(family: &GroupFamily) -> L0Family {
    let mut out = L0Family::new(family.group().clone(), family.bound(), 2.0 * family.bound());
    for m in family.members() {
        out.push(phi_member(m));
    }
    out
}

/// `|Φ(f o λ_g)(h) - Φ(f)(h_1(g) h)|`.
pub fn phi_equivariance_check(group: &WordGroup, f: &Member<Element>, g: &Element, h: &PiecewiseMap) -> Result<f64> {
    let moved = compose_with_translation(group, f, g)?;
    let gh = PiecewiseMap::constant(g.clone()).multiply(group, h)?;
    Ok((phi_eval(&moved, h) - phi_eval(f, &gh)).abs())
}

/// A finitely supported measure on step maps used as a positive unital
/// functional.
#[derive(Debug, Clone)]
pub struct MeanApprox {
    measure: L0Measure,
}

impl MeanApprox {
    pub fn new(measure: L0Measure) -> Self {
        Self { measure }
    }

    pub fn measure(&self) -> &L0Measure {
        &self.measure
    }

    pub fn group(&self) -> &WordGroup {
        self.measure.group()
    }

    pub fn expectation(&self, member: &Member<PiecewiseMap>) -> f64 {
        self.measure
            .maps()
            .iter()
            .zip(self.measure.weights())
            .map(|(h, w)| w * member.eval(h))
            .sum()
    }

    /// `E_M(Φ f)`.
    pub fn mean_of(&self, f: &Member<Element>) -> f64 {
        self.expectation(&phi_member(f))
    }
}

/// `|E_M(Φf) - E_M(Φ(f o λ_g))|`.
pub fn transfer_defect(m: &MeanApprox, f: &Member<Element>, g: &Element) -> Result<f64> {
    let moved = compose_with_translation(m.group(), f, g)?;
    Ok((m.mean_of(f) - m.mean_of(&moved)).abs())
}

/// The same defect computed on `L0(G)`: the defect of `M` against the
/// constant map `h_1(g)` for the singleton family `{Φf}`.
pub fn transfer_defect_l0(m: &MeanApprox, f: &Member<Element>, g: &Element, bound: f64) -> Result<f64> {
    let family = L0Family::new(m.group().clone(), bound, 2.0 * bound).with_member(phi_member(f));
    Ok(l0_defect(m.measure(), &PiecewiseMap::constant(g.clone()), &family)?.defect)
}

/// Stable 64-bit key of an element, used to build pseudo-random tables.
fn element_key(x: &Element) -> u64 {
    match x {
        Element::Lattice(v) => v.iter().fold(0x5EED, |acc, c| mix(acc, *c as u64)),
        Element::Cyclic(r) => mix(0xC1C, *r),
        Element::Free(w) => w.iter().fold(0xF2, |acc, c| mix(acc, *c as u64)),
    }
}

/// A random bounded function on `G`: a combination of a pseudo-random
/// table, a clamped word length and a point indicator. Returns the member
/// and a bound on its sup norm.
pub fn random_member<R: Rng + ?Sized>(group: &WordGroup, rng: &mut R) -> (Member<Element>, f64) {
    let coef: [f64; 3] = [
        rng.gen_range(-1.0..=1.0),
        rng.gen_range(-1.0..=1.0),
        rng.gen_range(-1.0..=1.0),
    ];
    let salt: u64 = rng.gen();
    let clamp = rng.gen_range(1..=6) as f64;
    let point = group.random_element(rng, 4);
    let g = group.clone();
    let name = format!("rand[{salt:016x}]");
    let member = Member::new(name, move |x: &Element| {
        let table = (mix(salt, element_key(x)) >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0;
        let len = g.word_length(x).unwrap_or(0) as f64;
        coef[0] * table + coef[1] * len.min(clamp) / clamp + coef[2] * f64::from(u8::from(*x == point))
    });
    (member, coef.iter().map(|c| c.abs()).sum())
}

/// A random map with up to four breakpoints and values of word length at
/// most 6; half of the draws are uniform-grid step maps.
pub fn random_map<R: Rng + ?Sized>(group: &WordGroup, rng: &mut R) -> PiecewiseMap {
    if rng.gen_bool(0.5) {
        let n = rng.gen_range(1..=6);
        let values = (0..n).map(|_| group.random_element(rng, 6)).collect();
        return h_embed(values).expect("n >= 1").to_piecewise();
    }
    let mut breaks: Vec<f64> = (0..rng.gen_range(0..=4)).map(|_| rng.gen_range(0.01..0.99)).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let values = (0..=breaks.len()).map(|_| group.random_element(rng, 6)).collect();
    PiecewiseMap::new(breaks, values).expect("sorted interior breakpoints")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteRow {
    pub case: &'static str,
    /// Largest violation over all trials.
    pub residual: f64,
}

pub const SUITE_CASES: [&str; 7] = [
    "unitality",
    "linearity",
    "monotonicity",
    "equivariance",
    "sup-bound",
    "uc-transfer",
    "transfer",
];

/// Runs every identity of `Φ` on `trials` seeded random cases and reports
/// the largest residual per identity.
pub fn run_phi_suite(group: &WordGroup, trials: usize, seed: u64) -> Result<Vec<SuiteRow>> {
    if trials == 0 {
        return Err(Error::InvalidMeasure("trial count must be positive".into()));
    }
    let one = Member::new("one", |_: &Element| 1.0);
    let mut worst = [0.0f64; SUITE_CASES.len()];
    for t in 0..trials as u64 {
        let mut rng = sample_rng(seed, t);
        let (f1, b1) = random_member(group, &mut rng);
        let (f2, _) = random_member(group, &mut rng);
        let h = random_map(group, &mut rng);
        let h1 = random_map(group, &mut rng);
        let g = group.random_element(&mut rng, 5);
        let (alpha, beta) = (rng.gen_range(-2.0..=2.0), rng.gen_range(-2.0..=2.0));

        let residuals = [
            (phi_eval(&one, &h) - 1.0).abs(),
            (phi_eval(&f1.linear_combination(alpha, &f2, beta), &h)
                - alpha * phi_eval(&f1, &h)
                - beta * phi_eval(&f2, &h))
            .abs(),
            {
                let f2c = f2.clone();
                let lower = f1.linear_combination(1.0, &Member::new("abs", move |x: &Element| f2c.eval(x).abs()), -1.0);
                (phi_eval(&lower, &h) - phi_eval(&f1, &h)).max(0.0)
            },
            phi_equivariance_check(group, &f1, &g, &h)?,
            {
                let sup = h.values().iter().map(|x| f1.eval(x).abs()).fold(0.0, f64::max);
                (phi_eval(&f1, &h).abs() - sup).max(0.0)
            },
            ((phi_eval(&f1, &h) - phi_eval(&f1, &h1)).abs() - 2.0 * b1 * h.disagreement(&h1)).max(0.0),
            {
                let support: Vec<Element> = {
                    let mut s: Vec<Element> = (0..rng.gen_range(1..=4))
                        .map(|_| group.random_element(&mut rng, 4))
                        .collect();
                    s.sort();
                    s.dedup();
                    s
                };
                let mu = FinSuppMeasure::uniform(group.clone(), support)?;
                let m = MeanApprox::new(push_forward(&mu, rng.gen_range(1..=3), PushMode::Exact)?);
                (transfer_defect(&m, &f1, &g)? - transfer_defect_l0(&m, &f1, &g, b1)?).abs()
            },
        ];
        for (w, r) in worst.iter_mut().zip(residuals) {
            *w = w.max(r);
        }
    }
    Ok(SUITE_CASES
        .iter()
        .zip(worst)
        .map(|(case, residual)| SuiteRow { case, residual })
        .collect())
}

/// Whether every residual of a suite is within `1e-12`.
pub fn suite_passes(rows: &[SuiteRow]) -> bool {
    rows.iter().all(|r| r.residual <= 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clamp5(g: &WordGroup) -> Member<Element> {
        let g = g.clone();
        Member::new("min(|x|,5)/5", move |x: &Element| {
            (g.word_length(x).unwrap() as f64).min(5.0) / 5.0
        })
    }

    #[test]
    fn phi_examples() {
        let z = WordGroup::integers();
        let one = Member::new("one", |_: &Element| 1.0);
        let h = h_embed(vec![Element::int(0), Element::int(1), Element::int(2)]).unwrap();
        assert_eq!(phi_eval_step(&one, &h), 1.0);
        assert!((phi_eval_step(&clamp5(&z), &h) - 0.2).abs() < 1e-15);
        let c = PiecewiseMap::constant(Element::int(-3));
        assert_eq!(phi_eval(&clamp5(&z), &c), 0.6);
    }

    #[test]
    fn equivariance_examples() {
        let z = WordGroup::integers();
        let h = PiecewiseMap::parse(&z, "0.3,0.6: 4|-2|7").unwrap();
        assert_eq!(phi_equivariance_check(&z, &clamp5(&z), &z.identity(), &h).unwrap(), 0.0);
        let k = Member::new("k", |_: &Element| 0.4);
        assert_eq!(phi_equivariance_check(&z, &k, &Element::int(3), &h).unwrap(), 0.0);
        assert!(phi_equivariance_check(&z, &clamp5(&z), &Element::int(3), &h).unwrap() <= 1e-12);
    }

    #[test]
    fn transfer_examples() {
        let z12 = WordGroup::cyclic(12).unwrap();
        let f = clamp5(&z12);
        let m = MeanApprox::new(push_forward(&FinSuppMeasure::haar(z12.clone()).unwrap(), 2, PushMode::Exact).unwrap());
        assert!(transfer_defect(&m, &f, &Element::Cyclic(5)).unwrap() < 1e-12);
        let k = Member::new("k", |_: &Element| 0.7);
        assert_eq!(transfer_defect(&m, &k, &Element::Cyclic(5)).unwrap(), 0.0);

        let z = WordGroup::integers();
        let mu = FinSuppMeasure::uniform(z.clone(), (0..=4).map(Element::int).collect()).unwrap();
        let m = MeanApprox::new(push_forward(&mu, 2, PushMode::Exact).unwrap());
        let f = clamp5(&z);
        let a = transfer_defect(&m, &f, &Element::int(2)).unwrap();
        let b = transfer_defect_l0(&m, &f, &Element::int(2), 1.0).unwrap();
        assert!(a > 0.0);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn suites_pass() {
        for g in [WordGroup::integers(), WordGroup::cyclic(12).unwrap(), WordGroup::Free2] {
            let rows = run_phi_suite(&g, 50, 42).unwrap();
            assert!(suite_passes(&rows), "{g}: {rows:?}");
        }
    }
}
