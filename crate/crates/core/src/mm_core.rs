//! Finite metric-measure spaces.
//!
//! Neighborhoods are closed: `B(A, eps) = {x : d(x, A) <= eps}`. The infimum
//! over measurable sets becomes an infimum over all subsets, which is
//! enumerated with bitmasks and therefore capped at
//! [`EXACT_ENUMERATION_LIMIT`] points.

use crate::{check_probability, Error, Result, MASS_TOL};

/// Default cap on the number of points for [`FiniteMMSpace::concentration_alpha_exact`].
pub const EXACT_ENUMERATION_LIMIT: usize = 20;

/// Hard cap: subsets are indexed by `u32` masks.
const HARD_LIMIT: usize = 26;

/// Slack for closed-ball membership so that grid-generated radii such as
/// `3 * 0.1` still contain points at distance `0.3`.
const BALL_SLACK: f64 = 1e-12;

const METRIC_TOL: f64 = 1e-12;

/// A finite metric space `(X, d)` with a probability vector `mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMMSpace {
    points: Vec<String>,
    dist: Vec<f64>,
    mu: Vec<f64>,
}

/// One real value per point of a [`FiniteMMSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct RealFunctionTable {
    values: Vec<f64>,
}

impl RealFunctionTable {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidMeasure(format!("function value {v} is not finite")));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl FiniteMMSpace {
    /// Builds a space from labels, a square distance matrix and a probability
    /// vector, checking the metric axioms and normalization.
    pub fn new(points: Vec<String>, dist: Vec<Vec<f64>>, mu: Vec<f64>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::InvalidSpace("no points".into()));
        }
        if dist.len() != n || dist.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidSpace(format!("distance matrix is not {n}x{n}")));
        }
        if mu.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: mu.len(),
            });
        }
        check_probability(&mu)?;
        let flat: Vec<f64> = dist.into_iter().flatten().collect();
        let d = |i: usize, j: usize| flat[i * n + j];
        for i in 0..n {
            if d(i, i) != 0.0 {
                return Err(Error::InvalidSpace(format!("d({i},{i}) = {} is not zero", d(i, i))));
            }
            for j in 0..n {
                let v = d(i, j);
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidSpace(format!(
                        "d({i},{j}) = {v} is not a non-negative real"
                    )));
                }
                if (v - d(j, i)).abs() > METRIC_TOL {
                    return Err(Error::InvalidSpace(format!("d({i},{j}) != d({j},{i})")));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if d(i, k) > d(i, j) + d(j, k) + METRIC_TOL {
                        return Err(Error::InvalidSpace(format!(
                            "triangle inequality fails for ({i},{j},{k})"
                        )));
                    }
                }
            }
        }
        Ok(Self { points, dist: flat, mu })
    }

    /// Builds a space from a distance function on the labels.
    pub fn from_metric<F>(points: Vec<String>, mu: Vec<f64>, metric: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> f64,
    {
        let n = points.len();
        let dist = (0..n).map(|i| (0..n).map(|j| metric(i, j)).collect()).collect();
        Self::new(points, dist, mu)
    }

    /// Two points at distance `d` with uniform measure.
    pub fn two_point(d: f64) -> Result<Self> {
        Self::new(
            vec!["x".into(), "y".into()],
            vec![vec![0.0, d], vec![d, 0.0]],
            vec![0.5, 0.5],
        )
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.len() + j]
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// Exact concentration function with the default enumeration cap.
    pub fn concentration_alpha_exact(&self, eps: f64) -> Result<f64> {
        self.concentration_alpha_exact_with_limit(eps, EXACT_ENUMERATION_LIMIT)
    }

    /// `alpha(0) = 1/2`; otherwise `1 - inf { mu(B(A, eps)) : mu(A) >= 1/2 }`
    /// with the infimum taken over every subset.
    pub fn concentration_alpha_exact_with_limit(&self, eps: f64, limit: usize) -> Result<f64> {
        if eps.is_nan() || eps < 0.0 {
            return Err(Error::NegativeEps(eps));
        }
        let n = self.len();
        let limit = limit.min(HARD_LIMIT);
        if n > limit {
            return Err(Error::SpaceTooLarge { points: n, limit });
        }
        if eps == 0.0 {
            return Ok(0.5);
        }
        let balls: Vec<u32> = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| self.distance(i, j) <= eps + BALL_SLACK)
                    .fold(0u32, |m, j| m | (1 << j))
            })
            .collect();
        let size = 1usize << n;
        // mass[S] and nbhd[S] by peeling the lowest set bit.
        let mut mass = vec![0.0f64; size];
        let mut nbhd = vec![0u32; size];
        for s in 1..size {
            let low = s.trailing_zeros() as usize;
            let rest = s & (s - 1);
            mass[s] = mass[rest] + self.mu[low];
            nbhd[s] = nbhd[rest] | balls[low];
        }
        // 1 - mu(B(A, eps)) is taken as the mass of the complement, which is
        // exactly zero when the neighborhood covers the space
        let full = (size - 1) as u32;
        let mut sup = 0.0f64;
        for s in 1..size {
            if mass[s] >= 0.5 - MASS_TOL {
                sup = sup.max(mass[(full & !nbhd[s]) as usize]);
            }
        }
        Ok(sup.clamp(0.0, 0.5))
    }

    /// Smallest median of `f` under this space's measure.
    pub fn median(&self, f: &RealFunctionTable) -> Result<f64> {
        median_of(&self.mu, f.values())
    }

    pub fn expectation(&self, f: &RealFunctionTable) -> Result<f64> {
        expectation(&self.mu, f.values())
    }

    pub fn deviation_mass(&self, f: &RealFunctionTable, center: f64, eps: f64) -> Result<f64> {
        deviation_mass(&self.mu, f.values(), center, eps)
    }
}

fn check_lengths(mu: &[f64], values: &[f64]) -> Result<()> {
    if mu.len() != values.len() {
        return Err(Error::LengthMismatch {
            expected: mu.len(),
            got: values.len(),
        });
    }
    Ok(())
}

/// `sum_x mu_x f(x)`.
pub fn expectation(mu: &[f64], values: &[f64]) -> Result<f64> {
    check_lengths(mu, values)?;
    Ok(mu.iter().zip(values).map(|(w, v)| w * v).sum())
}

/// The smallest `m` with `mu{f >= m} >= 1/2` and `mu{f <= m} >= 1/2`.
///
/// The set of medians is a closed interval whose left end is a value of `f`,
/// so scanning the sorted values suffices.
pub fn median_of(mu: &[f64], values: &[f64]) -> Result<f64> {
    check_lengths(mu, values)?;
    if values.is_empty() {
        return Err(Error::InvalidMeasure("median of an empty measure".into()));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let total: f64 = mu.iter().sum();
    let mut below = 0.0; // mass of {f < current value}
    let mut i = 0;
    while i < order.len() {
        let v = values[order[i]];
        let mut at = 0.0;
        let mut j = i;
        while j < order.len() && values[order[j]] == v {
            at += mu[order[j]];
            j += 1;
        }
        let upper = total - below; // mu{f >= v}
        let lower = below + at; // mu{f <= v}
        if upper >= 0.5 - MASS_TOL && lower >= 0.5 - MASS_TOL {
            return Ok(v);
        }
        below += at;
        i = j;
    }
    // Unreachable for a probability vector; fall back to the largest value.
    Ok(values[*order.last().unwrap()])
}

/// Deviations within this of `eps` count as ties, so that values such as
/// `0.8 - 0.5` are not counted as exceeding `0.3`.
pub const DEVIATION_SLACK: f64 = 1e-12;

/// `mu{x : |f(x) - center| > eps}` with strict inequality (up to
/// [`DEVIATION_SLACK`]).
pub fn deviation_mass(mu: &[f64], values: &[f64], center: f64, eps: f64) -> Result<f64> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::NonPositiveEps(eps));
    }
    check_lengths(mu, values)?;
    let mass: f64 = mu
        .iter()
        .zip(values)
        .filter(|(_, v)| (**v - center).abs() > eps + DEVIATION_SLACK)
        .map(|(w, _)| *w)
        .sum();
    // an empty sum is -0.0
    Ok((mass + 0.0).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube2() -> FiniteMMSpace {
        let pts: Vec<[u8; 2]> = vec![[0, 0], [0, 1], [1, 0], [1, 1]];
        let labels = pts.iter().map(|p| format!("{}{}", p[0], p[1])).collect();
        FiniteMMSpace::from_metric(labels, vec![0.25; 4], |i, j| {
            pts[i].iter().zip(&pts[j]).filter(|(a, b)| a != b).count() as f64 / 2.0
        })
        .unwrap()
    }

    fn fraction_of_ones() -> RealFunctionTable {
        RealFunctionTable::new(vec![0.0, 0.5, 0.5, 1.0]).unwrap()
    }

    #[test]
    fn alpha_two_point() {
        let s = FiniteMMSpace::two_point(1.0).unwrap();
        assert_eq!(s.concentration_alpha_exact(0.0).unwrap(), 0.5);
        assert_eq!(s.concentration_alpha_exact(1.0).unwrap(), 0.0);
        // below the distance, the singleton {x} has half mass and is its own neighborhood
        assert_eq!(s.concentration_alpha_exact(0.5).unwrap(), 0.5);
    }

    #[test]
    fn alpha_one_point() {
        let s = FiniteMMSpace::new(vec!["p".into()], vec![vec![0.0]], vec![1.0]).unwrap();
        assert_eq!(s.concentration_alpha_exact(0.1).unwrap(), 0.0);
    }

    #[test]
    fn alpha_errors() {
        let s = FiniteMMSpace::two_point(1.0).unwrap();
        assert!(matches!(s.concentration_alpha_exact(-0.1), Err(Error::NegativeEps(_))));
        let n = 21;
        let big = FiniteMMSpace::from_metric(
            (0..n).map(|i| i.to_string()).collect(),
            vec![1.0 / n as f64; n],
            |i, j| if i == j { 0.0 } else { 1.0 },
        )
        .unwrap();
        assert_eq!(
            big.concentration_alpha_exact(0.5),
            Err(Error::SpaceTooLarge { points: 21, limit: 20 })
        );
    }

    #[test]
    fn construction_rejects_bad_metrics() {
        let labels = || vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let mu = || vec![1.0 / 3.0; 3];
        // triangle inequality: d(a,c) = 3 > 1 + 1
        let bad = vec![vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 1.0], vec![3.0, 1.0, 0.0]];
        assert!(matches!(
            FiniteMMSpace::new(labels(), bad, mu()),
            Err(Error::InvalidSpace(_))
        ));
        let asym = vec![vec![0.0, 1.0, 1.0], vec![2.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
        assert!(matches!(
            FiniteMMSpace::new(labels(), asym, mu()),
            Err(Error::InvalidSpace(_))
        ));
        let ok = vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
        assert!(matches!(
            FiniteMMSpace::new(labels(), ok.clone(), vec![0.5, 0.5, 0.5]),
            Err(Error::InvalidMeasure(_))
        ));
        assert!(FiniteMMSpace::new(labels(), ok, mu()).is_ok());
    }

    #[test]
    fn medians() {
        let s = cube2();
        let c = RealFunctionTable::new(vec![3.0; 4]).unwrap();
        assert_eq!(s.median(&c).unwrap(), 3.0);
        assert_eq!(s.median(&fraction_of_ones()).unwrap(), 0.5);
        let two = FiniteMMSpace::two_point(1.0).unwrap();
        assert_eq!(
            two.median(&RealFunctionTable::new(vec![0.0, 1.0]).unwrap()).unwrap(),
            0.0
        );
    }

    #[test]
    fn expectations() {
        assert_eq!(expectation(&[0.0, 1.0, 0.0], &[5.0, 7.0, 9.0]).unwrap(), 7.0);
        let f: Vec<f64> = (0..4).map(|x: i32| (x.abs().min(5)) as f64 / 5.0).collect();
        assert!((expectation(&[0.25; 4], &f).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(cube2().expectation(&fraction_of_ones()).unwrap(), 0.5);
        assert_eq!(
            expectation(&[0.5, 0.5], &[1.0]),
            Err(Error::LengthMismatch { expected: 2, got: 1 })
        );
    }

    #[test]
    fn deviation_masses() {
        let s = cube2();
        let c = RealFunctionTable::new(vec![2.0; 4]).unwrap();
        assert_eq!(s.deviation_mass(&c, 2.0, 0.01).unwrap(), 0.0);
        assert_eq!(s.deviation_mass(&fraction_of_ones(), 0.5, 0.4).unwrap(), 0.5);
        assert_eq!(s.deviation_mass(&fraction_of_ones(), 0.5, 0.6).unwrap(), 0.0);
        // strict inequality: deviation exactly eps does not count
        assert_eq!(s.deviation_mass(&fraction_of_ones(), 0.5, 0.5).unwrap(), 0.0);
        assert!(matches!(s.deviation_mass(&c, 2.0, 0.0), Err(Error::NonPositiveEps(_))));
        // 0.8 - 0.5 rounds above 0.3 but is a tie
        assert_eq!(deviation_mass(&[0.5, 0.5], &[0.2, 0.8], 0.5, 0.3).unwrap(), 0.0);
        assert!(deviation_mass(&[1.0], &[1.0], 1.0, 0.5).unwrap().is_sign_positive());
    }
}
