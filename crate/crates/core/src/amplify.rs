//! Amplification of almost-invariant measures on `G` to concentrated,
//! almost-invariant measures on step maps.
//!
//! For a schedule of pairs `(n_i, mu_i)` the push-forward
//! `nu_i = (h_{n_i})_* mu_i^{n_i}` is built exactly or by sampling. Its
//! defect against a target map `g` is bounded by approximating `g` on the
//! grid by `h_n(g')` and telescoping along `a_j = (g'_1, .., g'_j, e, .., e)`:
//!
//! ```text
//! |E f - E f o λ_g| <= sum_j |E f o λ_{h(a_{j-1})} - E f o λ_{h(a_j)}| + L * λ{g != h(g')}
//! ```
//!
//! For exact push-forwards each step is computed through the product
//! structure, as an average over `z` of the base-group defect of the
//! pulled-back function `f o h_n o c_{j, b_j z}` against `g'_j`.

use rayon::prelude::*;
use serde::Serialize;

use crate::families::{pullback_family, GroupFamily, L0Family};
use crate::groups::{folner_measure, invariance_defect, Element, FinSuppMeasure, WordGroup};
use crate::hamming::talagrand_bound;
use crate::l0_step::{grid_approximate, h_embed, PiecewiseMap, StepMap};
use crate::mm_core::{deviation_mass, median_of};
use crate::rng::{mix, sample_rng};
use crate::{checked_power, Error, Result, EXACT_PRODUCT_CAP, MASS_TOL, TOL};

use rand::distributions::{Distribution, WeightedIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PushMode {
    Exact,
    Sampled { count: usize, seed: u64 },
}

/// A finitely supported measure on step maps of a common grid.
#[derive(Debug, Clone)]
pub struct L0Measure {
    group: WordGroup,
    n: usize,
    support: Vec<StepMap>,
    maps: Vec<PiecewiseMap>,
    weights: Vec<f64>,
    /// The base measure when this is an exact push-forward.
    base: Option<FinSuppMeasure>,
    mode: PushMode,
}

impl L0Measure {
    /// A measure with explicit support; all maps must share one grid.
    pub fn new(group: WordGroup, support: Vec<StepMap>, weights: Vec<f64>) -> Result<Self> {
        if support.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: support.len(),
                got: weights.len(),
            });
        }
        crate::check_probability(&weights)?;
        let n = support.first().map(StepMap::n).ok_or(Error::EmptyTuple)?;
        for s in &support {
            if s.n() != n {
                return Err(Error::InvalidStep(format!("support mixes grids {n} and {}", s.n())));
            }
            s.validate(&group)?;
        }
        let maps = support.iter().map(StepMap::to_piecewise).collect();
        Ok(Self {
            group,
            n,
            support,
            maps,
            weights,
            base: None,
            mode: PushMode::Exact,
        })
    }

    pub fn group(&self) -> &WordGroup {
        &self.group
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> &[StepMap] {
        &self.support
    }

    pub fn maps(&self) -> &[PiecewiseMap] {
        &self.maps
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mode(&self) -> PushMode {
        self.mode
    }

    /// The base measure if this measure is an exact push-forward.
    pub fn base(&self) -> Option<&FinSuppMeasure> {
        self.base.as_ref()
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    fn check_family(&self, family: &L0Family) -> Result<()> {
        if family.group() != &self.group {
            return Err(Error::CarrierMismatch(format!(
                "measure on L0({}) but family over L0({})",
                self.group,
                family.group()
            )));
        }
        Ok(())
    }

    /// Values of every member on every support point, translated on the
    /// left by `u` when given. Indexed `[member][point]`.
    pub fn member_values(&self, family: &L0Family, u: Option<&PiecewiseMap>) -> Result<Vec<Vec<f64>>> {
        self.check_family(family)?;
        let rows: Vec<Vec<f64>> = self
            .maps
            .par_iter()
            .map(|h| {
                let moved;
                let point = match u {
                    Some(u) => {
                        moved = u.multiply(&self.group, h)?;
                        &moved
                    }
                    None => h,
                };
                (0..family.len())
                    .map(|m| family.eval_member(m, point))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((0..family.len()).map(|m| rows.iter().map(|r| r[m]).collect()).collect())
    }

    /// `E_nu(f o λ_u)` for every member.
    pub fn expectations(&self, family: &L0Family, u: Option<&PiecewiseMap>) -> Result<Vec<f64>> {
        Ok(self
            .member_values(family, u)?
            .iter()
            .map(|vals| vals.iter().zip(&self.weights).map(|(v, w)| v * w).sum())
            .collect())
    }
}

fn product_sampler(mu: &FinSuppMeasure) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(mu.weights().iter().copied()).map_err(|e| Error::InvalidMeasure(e.to_string()))
}

/// Odometer over `support^len` yielding index tuples and product weights.
fn for_each_tuple<F: FnMut(&[usize], f64)>(weights: &[f64], len: usize, mut visit: F) {
    let k = weights.len();
    let mut cur = vec![0usize; len];
    loop {
        let w: f64 = cur.iter().map(|&i| weights[i]).product();
        visit(&cur, w);
        let mut i = len;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < k {
                break;
            }
            cur[i] = 0;
        }
    }
}

/// `(h_n)_* mu^n`, enumerated exactly or as an equal-weight empirical measure.
pub fn push_forward(mu: &FinSuppMeasure, n: usize, mode: PushMode) -> Result<L0Measure> {
    if n == 0 {
        return Err(Error::EmptyTuple);
    }
    let group = mu.group().clone();
    let (support, weights, base) = match mode {
        PushMode::Exact => {
            let count = checked_power(mu.len(), n);
            if count > EXACT_PRODUCT_CAP {
                return Err(Error::TooLargeForExact {
                    points: count,
                    limit: EXACT_PRODUCT_CAP,
                });
            }
            let mut support = Vec::with_capacity(count as usize);
            let mut weights = Vec::with_capacity(count as usize);
            for_each_tuple(mu.weights(), n, |idx, w| {
                support.push(h_embed(idx.iter().map(|&i| mu.support()[i].clone()).collect()).expect("n >= 1"));
                weights.push(w);
            });
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            (support, weights, Some(mu.clone()))
        }
        PushMode::Sampled { count, seed } => {
            if count == 0 {
                return Err(Error::InvalidMeasure("sample count must be positive".into()));
            }
            let sampler = product_sampler(mu)?;
            let support: Vec<StepMap> = (0..count as u64)
                .into_par_iter()
                .map(|s| {
                    let mut rng = sample_rng(seed, s);
                    let values = (0..n).map(|_| mu.support()[sampler.sample(&mut rng)].clone()).collect();
                    h_embed(values).expect("n >= 1")
                })
                .collect();
            (support, vec![1.0 / count as f64; count], None)
        }
    };
    let maps = support.iter().map(StepMap::to_piecewise).collect();
    Ok(L0Measure {
        group,
        n,
        support,
        maps,
        weights,
        base,
        mode,
    })
}

/// Per-step telescoping terms for the chain `a_0 = e, .., a_n = g'`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Telescoping {
    /// `signed[m][j-1] = E f_m o λ_{h(a_{j-1})} - E f_m o λ_{h(a_j)}`.
    pub signed: Vec<Vec<f64>>,
    /// `per_step[j-1] = max_m |signed[m][j-1]|`.
    pub per_step: Vec<f64>,
    pub total: f64,
    /// Per step, the largest base-group defect against `g'_j` over the
    /// pulled-back family `{f o h_n o c_{j, b_j z}}`. Only available on the
    /// product route.
    pub pullback_sup: Option<Vec<f64>>,
}

impl Telescoping {
    fn from_signed(signed: Vec<Vec<f64>>, n: usize, pullback_sup: Option<Vec<f64>>) -> Self {
        let per_step: Vec<f64> = (0..n)
            .map(|j| signed.iter().map(|s| s[j].abs()).fold(0.0, f64::max))
            .collect();
        let total = per_step.iter().sum();
        Self {
            signed,
            per_step,
            total,
            pullback_sup,
        }
    }
}

fn check_chain_target(group: &WordGroup, n: usize, gprime: &[Element]) -> Result<()> {
    if gprime.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "target tuple has {} entries, grid is {n}",
            gprime.len()
        )));
    }
    gprime.iter().try_for_each(|g| group.validate(g))
}

/// `a_j = (g'_1, .., g'_j, e, .., e)`.
pub fn chain_prefix(group: &WordGroup, gprime: &[Element], j: usize) -> Vec<Element> {
    gprime
        .iter()
        .enumerate()
        .map(|(i, g)| if i < j { g.clone() } else { group.identity() })
        .collect()
}

/// Telescoping terms through the product structure of `mu^n`: step `j` is
/// the `mu^{n-1}`-average over `z` of
/// `E_mu(f o h_n o c_{j,b_j z}) - E_mu(f o h_n o c_{j,b_j z} o λ_{g'_j})`.
pub fn telescoping_bound(mu: &FinSuppMeasure, n: usize, gprime: &[Element], family: &L0Family) -> Result<Telescoping> {
    let group = mu.group();
    if family.group() != group {
        return Err(Error::CarrierMismatch(format!(
            "measure on {group} but family over L0({})",
            family.group()
        )));
    }
    check_chain_target(group, n, gprime)?;
    let count = checked_power(mu.len(), n);
    if count > EXACT_PRODUCT_CAP {
        return Err(Error::TooLargeForExact {
            points: count,
            limit: EXACT_PRODUCT_CAP,
        });
    }
    let mut rests: Vec<(Vec<usize>, f64)> = Vec::new();
    for_each_tuple(mu.weights(), n - 1, |idx, w| rests.push((idx.to_vec(), w)));
    let members = family.len();
    let mut signed = vec![vec![0.0; n]; members];
    let mut sup = vec![0.0f64; n];
    for j in 1..=n {
        let gj = &gprime[j - 1];
        let shifted = mu.translate(gj)?;
        // per z: (weight, signed inner difference per member)
        let inner: Vec<(f64, Vec<f64>)> = rests
            .par_iter()
            .map(|(idx, w)| {
                // b_j z = (g'_1 z_1, .., g'_{j-1} z_{j-1}, z_j, .., z_{n-1})
                let rest = idx
                    .iter()
                    .enumerate()
                    .map(|(p, &i)| {
                        let z = &mu.support()[i];
                        if p < j - 1 {
                            group.compose(&gprime[p], z)
                        } else {
                            Ok(z.clone())
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                let pulled = pullback_family(family, n, j, &rest)?;
                let diffs = (0..members)
                    .map(|m| {
                        let mut d = 0.0;
                        for ((x, gx), wx) in mu.support().iter().zip(shifted.support()).zip(mu.weights()) {
                            d += wx * (pulled.eval_member(m, x)? - pulled.eval_member(m, gx)?);
                        }
                        Ok(d)
                    })
                    .collect::<Result<Vec<f64>>>()?;
                Ok((*w, diffs))
            })
            .collect::<Result<Vec<_>>>()?;
        for (w, diffs) in &inner {
            for (m, d) in diffs.iter().enumerate() {
                signed[m][j - 1] += w * d;
                sup[j - 1] = sup[j - 1].max(d.abs());
            }
        }
    }
    Ok(Telescoping::from_signed(signed, n, Some(sup)))
}

/// Telescoping terms computed directly on an arbitrary measure by
/// evaluating `E_nu(f o λ_{h(a_j)})` for `j = 0..=n`.
pub fn chain_on_measure(nu: &L0Measure, gprime: &[Element], family: &L0Family) -> Result<Telescoping> {
    let n = nu.n();
    check_chain_target(nu.group(), n, gprime)?;
    let mut levels = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let a = h_embed(chain_prefix(nu.group(), gprime, j))?.to_piecewise();
        levels.push(nu.expectations(family, Some(&a))?);
    }
    let signed = (0..family.len())
        .map(|m| (1..=n).map(|j| levels[j - 1][m] - levels[j][m]).collect())
        .collect();
    Ok(Telescoping::from_signed(signed, n, None))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefectReport {
    /// `max_f |E_nu f - E_nu f o λ_g|`.
    pub defect: f64,
    /// `telescoping.total + L * approx_disagreement`.
    pub bound: f64,
    pub telescoping: Telescoping,
    /// Disagreement between `g` and its grid approximation `h_n(g')`.
    pub approx_disagreement: f64,
    #[serde(skip)]
    pub gprime: Vec<Element>,
}

impl DefectReport {
    pub fn within_bound(&self) -> bool {
        self.defect <= self.bound + TOL
    }
}

/// Defect of `nu` against the left translation by `g`, with the telescoping
/// bound. The grid approximation of `g` uses `nu`'s own grid.
pub fn l0_defect(nu: &L0Measure, g: &PiecewiseMap, family: &L0Family) -> Result<DefectReport> {
    g.validate(nu.group())?;
    let (gprime, approx_disagreement) = grid_approximate(g, nu.n())?;
    let plain = nu.expectations(family, None)?;
    let moved = nu.expectations(family, Some(g))?;
    let defect = plain.iter().zip(&moved).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let telescoping = match nu.base() {
        Some(mu) => telescoping_bound(mu, nu.n(), &gprime, family)?,
        None => chain_on_measure(nu, &gprime, family)?,
    };
    let residual = if approx_disagreement > 0.0 {
        family.lipschitz() * approx_disagreement
    } else {
        0.0
    };
    Ok(DefectReport {
        defect,
        bound: telescoping.total + residual,
        telescoping,
        approx_disagreement,
        gprime,
    })
}

/// `c0 + c1 i + c2 i^2` with integer coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Quadratic {
    pub c0: i64,
    pub c1: i64,
    pub c2: i64,
}

impl Quadratic {
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || {
            Error::Parse(format!(
                "expression {s:?} is not an integer polynomial of degree <= 2 in i"
            ))
        };
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(bad());
        }
        let mut q = Quadratic { c0: 0, c1: 0, c2: 0 };
        let mut terms = Vec::new();
        let mut cur = String::new();
        for c in compact.chars() {
            if (c == '+' || c == '-') && !cur.is_empty() {
                terms.push(std::mem::take(&mut cur));
            }
            cur.push(c);
        }
        terms.push(cur);
        for t in terms {
            let (sign, body) = match t.strip_prefix('-') {
                Some(b) => (-1, b),
                None => (1, t.strip_prefix('+').unwrap_or(&t)),
            };
            let (coef, power) = match body.find('i') {
                None => (body, 0),
                Some(pos) => {
                    let power = match &body[pos + 1..] {
                        "" => 1,
                        "^2" => 2,
                        "^1" => 1,
                        _ => return Err(bad()),
                    };
                    (body[..pos].trim_end_matches('*'), power)
                }
            };
            let coef: i64 = if coef.is_empty() {
                1
            } else {
                coef.parse().map_err(|_| bad())?
            };
            match power {
                0 => q.c0 += sign * coef,
                1 => q.c1 += sign * coef,
                _ => q.c2 += sign * coef,
            }
        }
        Ok(q)
    }

    pub fn eval(&self, i: i64) -> i64 {
        self.c0 + self.c1 * i + self.c2 * i * i
    }
}

/// `k=<expr>,n=<expr>,i=a..b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ScheduleSpec {
    pub k: Quadratic,
    pub n: Quadratic,
    pub first: i64,
    pub last: i64,
}

impl ScheduleSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let (mut k, mut n, mut range) = (None, None, None);
        for part in s.split(',') {
            let (key, val) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("schedule part {part:?} needs key=value")))?;
            match key.trim() {
                "k" => k = Some(Quadratic::parse(val)?),
                "n" => n = Some(Quadratic::parse(val)?),
                "i" => {
                    let (a, b) = val
                        .split_once("..")
                        .ok_or_else(|| Error::Parse(format!("range {val:?} needs a..b")))?;
                    let a: i64 = a
                        .trim()
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad range start {a:?}")))?;
                    let b: i64 = b
                        .trim()
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad range end {b:?}")))?;
                    if b < a {
                        return Err(Error::Parse(format!("empty range {a}..{b}")));
                    }
                    range = Some((a, b));
                }
                other => return Err(Error::Parse(format!("unknown schedule key {other:?}"))),
            }
        }
        let missing = |what: &str| Error::Parse(format!("schedule {s:?} is missing {what}"));
        let (first, last) = range.ok_or_else(|| missing("i=a..b"))?;
        Ok(Self {
            k: k.ok_or_else(|| missing("k"))?,
            n: n.ok_or_else(|| missing("n"))?,
            first,
            last,
        })
    }

    /// `(i, k_i, n_i)` rows; both values must be positive.
    pub fn rows(&self) -> Result<Vec<(i64, u64, usize)>> {
        (self.first..=self.last)
            .map(|i| {
                let (k, n) = (self.k.eval(i), self.n.eval(i));
                if k < 1 || n < 1 {
                    return Err(Error::InvalidSchedule(format!(
                        "k={k}, n={n} at i={i} must be positive"
                    )));
                }
                Ok((i, k as u64, n as usize))
            })
            .collect()
    }

    /// Entries with `mu_i` the box `[-k_i, k_i]^d` on `Z^d` or the uniform
    /// measure on the ball of radius `k_i` otherwise.
    pub fn entries(&self, group: &WordGroup) -> Result<Vec<ScheduleEntry>> {
        self.rows()?
            .into_iter()
            .map(|(i, k, n)| {
                let mu = match group {
                    WordGroup::Lattice { .. } => folner_measure(group, k)?,
                    _ => FinSuppMeasure::ball_uniform(group.clone(), k)?,
                };
                Ok(ScheduleEntry { index: i, k, n, mu })
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct ScheduleEntry {
    pub index: i64,
    pub k: u64,
    pub n: usize,
    pub mu: FinSuppMeasure,
}

/// A finite stage of the net `(n_i, mu_i)`.
#[derive(Debug, Clone)]
pub struct Schedule {
    entries: Vec<ScheduleEntry>,
    target_eps: f64,
    /// `n_i * max_s defect(mu_i, s, witness family)` over generators `s`.
    witness: Vec<f64>,
}

impl Schedule {
    /// Checks that `n_i` is non-decreasing and that the hypothesis witness
    /// `n_i * (generator defect of mu_i)` is non-increasing.
    pub fn new(entries: Vec<ScheduleEntry>, target_eps: f64, witness_family: &GroupFamily) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidSchedule("no entries".into()));
        }
        if target_eps.is_nan() || target_eps <= 0.0 {
            return Err(Error::NonPositiveEps(target_eps));
        }
        if entries.windows(2).any(|w| w[1].n < w[0].n) {
            return Err(Error::InvalidSchedule("grid sizes must be non-decreasing".into()));
        }
        let witness = entries
            .iter()
            .map(|e| {
                let worst =
                    e.mu.group()
                        .generators()
                        .iter()
                        .map(|s| invariance_defect(&e.mu, s, witness_family))
                        .collect::<Result<Vec<_>>>()?
                        .into_iter()
                        .fold(0.0, f64::max);
                Ok(e.n as f64 * worst)
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(i) = witness.windows(2).position(|w| w[1] > w[0] + 1e-12) {
            return Err(Error::InvalidSchedule(format!(
                "n_i * defect increases from {} to {} at entry {}",
                witness[i],
                witness[i + 1],
                i + 2
            )));
        }
        Ok(Self {
            entries,
            target_eps,
            witness,
        })
    }

    pub fn entries(&self) -> &[ScheduleEntry] {
        &self.entries
    }

    pub fn target_eps(&self) -> f64 {
        self.target_eps
    }

    pub fn witness(&self) -> &[f64] {
        &self.witness
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunOptions {
    /// Samples per entry when the exact product is too large.
    pub samples: usize,
    pub seed: u64,
    /// Entries with at most this many product points are computed exactly.
    pub exact_cap: u128,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            samples: 20_000,
            seed: crate::rng::DEFAULT_SEED,
            exact_cap: EXACT_PRODUCT_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub i: i64,
    pub k: u64,
    pub n: usize,
    pub exact: bool,
    pub defect: f64,
    pub bound: f64,
    pub telescoping_total: f64,
    pub approx_disagreement: f64,
    /// `max_f nu{|f - E f| > eps}`.
    pub conc_mass: f64,
    /// Binomial standard error of `conc_mass` (zero when exact).
    pub conc_stderr: f64,
    /// `max_f nu{|f - m(f)| > eps/2}`.
    pub median_mass_half: f64,
    /// `max_f |E f - m(f)|` with `m` the smallest median.
    pub median_gap: f64,
    /// `2 exp(-(eps/L)^2 n)`.
    pub talagrand: f64,
    pub witness: f64,
}

impl ReportRow {
    /// Expectation-centered mass at `eps` is at most the median-centered
    /// mass at `eps/2` whenever the median gap is at most `eps/2`.
    pub fn median_mass_dominates(&self, eps: f64) -> bool {
        self.median_gap > eps / 2.0 || self.conc_mass <= self.median_mass_half + MASS_TOL
    }

    pub fn concentration_within_talagrand(&self) -> bool {
        self.conc_mass <= self.talagrand + 4.0 * self.conc_stderr + MASS_TOL
    }
}

fn concentration_stats(nu: &L0Measure, family: &L0Family, eps: f64) -> Result<(f64, f64, f64)> {
    let values = nu.member_values(family, None)?;
    let (mut conc, mut half, mut gap) = (0.0f64, 0.0f64, 0.0f64);
    for vals in &values {
        let mean: f64 = vals.iter().zip(nu.weights()).map(|(v, w)| v * w).sum();
        let median = median_of(nu.weights(), vals)?;
        conc = conc.max(deviation_mass(nu.weights(), vals, mean, eps)?);
        half = half.max(deviation_mass(nu.weights(), vals, median, eps / 2.0)?);
        gap = gap.max((mean - median).abs());
    }
    Ok((conc, half, gap))
}

/// Runs every entry and reports rows in schedule order.
pub fn run_schedule(
    schedule: &Schedule,
    g: &PiecewiseMap,
    family: &L0Family,
    eps: f64,
    opts: RunOptions,
) -> Result<Vec<ReportRow>> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::NonPositiveEps(eps));
    }
    schedule
        .entries
        .par_iter()
        .zip(schedule.witness.par_iter())
        .map(|(entry, witness)| {
            let points = checked_power(entry.mu.len(), entry.n);
            let exact = points <= opts.exact_cap.min(EXACT_PRODUCT_CAP);
            let mode = if exact {
                PushMode::Exact
            } else {
                PushMode::Sampled {
                    count: opts.samples,
                    seed: mix(opts.seed, entry.index as u64),
                }
            };
            let nu = push_forward(&entry.mu, entry.n, mode)?;
            let report = l0_defect(&nu, g, family)?;
            let (conc_mass, median_mass_half, median_gap) = concentration_stats(&nu, family, eps)?;
            let conc_stderr = if exact {
                0.0
            } else {
                (conc_mass * (1.0 - conc_mass) / opts.samples as f64).sqrt()
            };
            Ok(ReportRow {
                i: entry.index,
                k: entry.k,
                n: entry.n,
                exact,
                defect: report.defect,
                bound: report.bound,
                telescoping_total: report.telescoping.total,
                approx_disagreement: report.approx_disagreement,
                conc_mass,
                conc_stderr,
                median_mass_half,
                median_gap,
                talagrand: talagrand_bound(eps / family.lipschitz(), entry.n),
                witness: *witness,
            })
        })
        .collect()
}

/// The group family `{f o h_1}` obtained by restricting an `L0` family to
/// constant maps; used as the schedule's hypothesis witness.
pub fn constant_map_family(family: &L0Family) -> Result<GroupFamily> {
    pullback_family(family, 1, 1, &[])
}
