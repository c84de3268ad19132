//! Product spaces `(X^n, mu^n, d_n)` with the normalized Hamming distance.
//!
//! The concentration function of a large product cannot be enumerated, so
//! the quantity computed here is the deviation profile
//! `mu^n{ |f - median(f)| > eps }` of a declared Lipschitz function, either
//! exactly (up to [`EXACT_PRODUCT_CAP`] points) or by seeded Monte Carlo.

use std::collections::HashSet;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rayon::prelude::*;

use crate::mm_core::{deviation_mass, median_of, FiniteMMSpace};
use crate::rng::sample_rng;
use crate::{check_probability, checked_power, Error, Result, EXACT_PRODUCT_CAP, TOL};

/// Number of random pairs used to spot-check a declared Lipschitz constant.
const LIPSCHITZ_PAIRS: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteBase {
    atoms: Vec<String>,
    weights: Vec<f64>,
}

impl DiscreteBase {
    pub fn new(atoms: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: atoms.len(),
                got: weights.len(),
            });
        }
        check_probability(&weights)?;
        let distinct: HashSet<&String> = atoms.iter().collect();
        if distinct.len() != atoms.len() {
            return Err(Error::InvalidMeasure("atoms are not distinct".into()));
        }
        Ok(Self { atoms, weights })
    }

    /// Uniform measure on the atoms `0..k`.
    pub fn uniform(k: usize) -> Result<Self> {
        Self::new((0..k).map(|i| i.to_string()).collect(), vec![1.0 / k as f64; k])
    }

    /// `uniform<k>`, `bernoulli:p=<p>` or `weights:<w0>,<w1>,..`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(k) = s.strip_prefix("uniform") {
            let k: usize = k.parse().map_err(|_| Error::Parse(format!("bad base {s:?}")))?;
            if k == 0 {
                return Err(Error::Parse("uniform base needs at least one atom".into()));
            }
            return Self::uniform(k);
        }
        if let Some(p) = s.strip_prefix("bernoulli:p=") {
            let p: f64 = p.parse().map_err(|_| Error::Parse(format!("bad base {s:?}")))?;
            return Self::new(vec!["0".into(), "1".into()], vec![1.0 - p, p]);
        }
        if let Some(ws) = s.strip_prefix("weights:") {
            let w = ws
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::Parse(format!("bad base {s:?}")))?;
            return Self::new((0..w.len()).map(|i| i.to_string()).collect(), w);
        }
        Err(Error::Parse(format!(
            "unknown base {s:?}; expected uniform<k>, bernoulli:p=<p> or weights:<list>"
        )))
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HammingProduct {
    base: DiscreteBase,
    n: usize,
}

impl HammingProduct {
    pub fn new(base: DiscreteBase, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyTuple);
        }
        Ok(Self { base, n })
    }

    pub fn base(&self) -> &DiscreteBase {
        &self.base
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn point_count(&self) -> u128 {
        checked_power(self.base.len(), self.n)
    }

    /// All tuples (as atom indices) with their product weights, in
    /// lexicographic order.
    pub fn enumerate(&self, cap: u128) -> Result<Vec<(Vec<usize>, f64)>> {
        let count = self.point_count();
        if count > cap {
            return Err(Error::TooLargeForExact {
                points: count,
                limit: cap,
            });
        }
        let k = self.base.len();
        let mut out = Vec::with_capacity(count as usize);
        let mut cur = vec![0usize; self.n];
        loop {
            let w: f64 = cur.iter().map(|&a| self.base.weights[a]).product();
            out.push((cur.clone(), w));
            let mut i = self.n;
            loop {
                if i == 0 {
                    return Ok(out);
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

    /// The product as a [`FiniteMMSpace`]; labels are concatenated atoms.
    pub fn to_mm_space(&self, cap: usize) -> Result<FiniteMMSpace> {
        let pts = self.enumerate(cap as u128).map_err(|_| Error::SpaceTooLarge {
            points: self.point_count().min(usize::MAX as u128) as usize,
            limit: cap,
        })?;
        let labels = pts
            .iter()
            .map(|(t, _)| {
                t.iter()
                    .map(|&a| self.base.atoms[a].as_str())
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect();
        let mu = pts.iter().map(|(_, w)| *w).collect::<Vec<_>>();
        // renormalize away the rounding of long products
        let total: f64 = mu.iter().sum();
        let mu = mu.into_iter().map(|w| w / total).collect();
        FiniteMMSpace::from_metric(labels, mu, |i, j| {
            hamming_distance(&pts[i].0, &pts[j].0).expect("equal lengths")
        })
    }

    fn draw<R: Rng>(&self, sampler: &WeightedIndex<f64>, rng: &mut R) -> Vec<usize> {
        (0..self.n).map(|_| sampler.sample(rng)).collect()
    }
}

/// `|{i : x_i != y_i}| / n`.
pub fn hamming_distance<T: PartialEq>(x: &[T], y: &[T]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::EmptyTuple);
    }
    let differing = x.iter().zip(y).filter(|(a, b)| a != b).count();
    Ok(differing as f64 / x.len() as f64)
}

/// `2 exp(-eps^2 n)`.
pub fn talagrand_bound(eps: f64, n: usize) -> f64 {
    2.0 * (-eps * eps * n as f64).exp()
}

/// `count` i.i.d. tuples of atom indices. Sample `i` depends only on
/// `(seed, i)`, so the parallel generation is reproducible.
pub fn sample_product(product: &HammingProduct, count: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if count == 0 {
        return Err(Error::InvalidMeasure("sample count must be positive".into()));
    }
    let sampler =
        WeightedIndex::new(product.base.weights.iter().copied()).map_err(|e| Error::InvalidMeasure(e.to_string()))?;
    Ok((0..count as u64)
        .into_par_iter()
        .map(|i| product.draw(&sampler, &mut sample_rng(seed, i)))
        .collect())
}

type TupleFn = Box<dyn Fn(&[usize]) -> f64 + Send + Sync>;

/// A function on tuples with a declared sup bound and Lipschitz constant for
/// the normalized Hamming distance.
pub struct DeclaredFunction {
    func: TupleFn,
    pub bound: f64,
    pub lipschitz: f64,
}

impl DeclaredFunction {
    pub fn new<F>(bound: f64, lipschitz: f64, func: F) -> Self
    where
        F: Fn(&[usize]) -> f64 + Send + Sync + 'static,
    {
        Self {
            func: Box::new(func),
            bound,
            lipschitz,
        }
    }

    pub fn eval(&self, x: &[usize]) -> f64 {
        (self.func)(x)
    }

    /// Mean of the coordinates, atom `i` of `k` counted as `i / (k-1)`.
    /// With values in `[0,1]` it is 1-Lipschitz for `d_n`.
    pub fn coordinate_mean(base: &DiscreteBase) -> Self {
        let scale = (base.len().max(2) - 1) as f64;
        Self::new(1.0, 1.0, move |x| {
            x.iter().map(|&a| a as f64 / scale).sum::<f64>() / x.len() as f64
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileMode {
    Exact,
    Sampled { count: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileEstimate {
    pub estimate: f64,
    /// Zero in exact mode.
    pub stderr: f64,
    pub median: f64,
    pub points: usize,
}

fn spot_check_lipschitz(product: &HammingProduct, f: &DeclaredFunction, seed: u64) -> Result<()> {
    let sampler =
        WeightedIndex::new(product.base.weights.iter().copied()).map_err(|e| Error::InvalidMeasure(e.to_string()))?;
    let mut rng = sample_rng(seed ^ 0x4C49_5053, u64::MAX);
    for p in 0..LIPSCHITZ_PAIRS {
        let x = product.draw(&sampler, &mut rng);
        let y = if p % 2 == 0 {
            // neighbor differing in (at most) one coordinate
            let mut y = x.clone();
            let i = rng.gen_range(0..product.n);
            y[i] = rng.gen_range(0..product.base.len());
            y
        } else {
            product.draw(&sampler, &mut rng)
        };
        let d = hamming_distance(&x, &y)?;
        let gap = (f.eval(&x) - f.eval(&y)).abs();
        if gap > f.lipschitz * d + TOL {
            return Err(Error::LipschitzViolation {
                declared: f.lipschitz,
                observed: if d > 0.0 { gap / d } else { f64::INFINITY },
            });
        }
    }
    Ok(())
}

/// `mu^n{ |f - median(f)| > eps }`.
pub fn lipschitz_profile(
    product: &HammingProduct,
    f: &DeclaredFunction,
    eps: f64,
    mode: ProfileMode,
) -> Result<ProfileEstimate> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::NonPositiveEps(eps));
    }
    let check_seed = match mode {
        ProfileMode::Exact => 0,
        ProfileMode::Sampled { seed, .. } => seed,
    };
    spot_check_lipschitz(product, f, check_seed)?;
    let (values, weights) = match mode {
        ProfileMode::Exact => {
            let pts = product.enumerate(EXACT_PRODUCT_CAP)?;
            let values: Vec<f64> = pts.par_iter().map(|(t, _)| f.eval(t)).collect();
            let weights: Vec<f64> = pts.iter().map(|(_, w)| *w).collect();
            (values, weights)
        }
        ProfileMode::Sampled { count, seed } => {
            let samples = sample_product(product, count, seed)?;
            let values: Vec<f64> = samples.par_iter().map(|t| f.eval(t)).collect();
            (values, vec![1.0 / count as f64; count])
        }
    };
    let median = median_of(&weights, &values)?;
    let estimate = deviation_mass(&weights, &values, median, eps)?;
    let stderr = match mode {
        ProfileMode::Exact => 0.0,
        ProfileMode::Sampled { count, .. } => (estimate * (1.0 - estimate) / count as f64).sqrt(),
    };
    Ok(ProfileEstimate {
        estimate,
        stderr,
        median,
        points: values.len(),
    })
}
