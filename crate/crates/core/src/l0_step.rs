//! Step-function model of `L0(G)`.
//!
//! A [`StepMap`] is constant on the `n` uniform cells `[(i-1)/n, i/n)`; a
//! [`PiecewiseMap`] is constant on cells cut at arbitrary breakpoints. Cells
//! are half-open, so a breakpoint belongs to the cell on its right. Two maps
//! are compared through the disagreement pseudometric `lambda{t : f(t) != g(t)}`,
//! which is the convergence-in-measure metric for discrete `G`.

use std::fmt;

use crate::groups::{Element, WordGroup};
use crate::{Error, Result};

/// Cap on the size of a common refinement grid.
pub const GRID_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StepMap {
    values: Vec<Element>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseMap {
    breakpoints: Vec<f64>,
    values: Vec<Element>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOp {
    /// `f(t) g(t)`
    Multiply,
    /// `f(t) g(t)^-1`
    InvertSecond,
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn common_grid(a: usize, b: usize) -> Result<usize> {
    let (a, b) = (a as u128, b as u128);
    let l = a / gcd(a, b) * b;
    if l > GRID_CAP {
        return Err(Error::GridBlowup { grid: l, cap: GRID_CAP });
    }
    Ok(l as usize)
}

/// `h_n`: the step map with value `values[i]` on the `i`-th cell.
pub fn h_embed(values: Vec<Element>) -> Result<StepMap> {
    if values.is_empty() {
        return Err(Error::EmptyTuple);
    }
    Ok(StepMap { values })
}

/// `c_{i,a}(x) = (a_1, .., a_{i-1}, x, a_i, .., a_{n-1})` with `i` one-based.
pub fn insert_coordinate(i: usize, rest: &[Element], x: Element) -> Result<Vec<Element>> {
    let n = rest.len() + 1;
    if i == 0 || i > n {
        return Err(Error::DimensionMismatch(format!("cell index {i} outside 1..={n}")));
    }
    let mut out = Vec::with_capacity(n);
    out.extend_from_slice(&rest[..i - 1]);
    out.push(x);
    out.extend_from_slice(&rest[i - 1..]);
    Ok(out)
}

impl StepMap {
    pub fn identity(group: &WordGroup, n: usize) -> Result<Self> {
        h_embed(vec![group.identity(); n])
    }

    pub fn constant(x: Element) -> Self {
        StepMap { values: vec![x] }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Element] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Element> {
        self.values
    }

    /// Same map on the finer grid `m`, which must be a multiple of `n`.
    pub fn refine(&self, m: usize) -> Result<Self> {
        let n = self.n();
        if m == 0 || !m.is_multiple_of(n) {
            return Err(Error::InvalidStep(format!("grid {m} is not a multiple of {n}")));
        }
        let k = m / n;
        Ok(StepMap {
            values: self
                .values
                .iter()
                .flat_map(|v| std::iter::repeat_n(v.clone(), k))
                .collect(),
        })
    }

    pub fn to_piecewise(&self) -> PiecewiseMap {
        let n = self.n();
        PiecewiseMap {
            breakpoints: (1..n).map(|i| i as f64 / n as f64).collect(),
            values: self.values.clone(),
        }
    }

    pub fn validate(&self, group: &WordGroup) -> Result<()> {
        self.values.iter().try_for_each(|v| group.validate(v))
    }

    /// Exact disagreement on the common grid: `#{cells differing} / lcm`.
    pub fn disagreement(&self, other: &StepMap) -> Result<f64> {
        let m = common_grid(self.n(), other.n())?;
        let (p, q) = (m / self.n(), m / other.n());
        let differing = (0..m).filter(|c| self.values[c / p] != other.values[c / q]).count();
        Ok(differing as f64 / m as f64)
    }

    pub fn in_neighborhood(&self, group: &WordGroup, radius: u64, eps: f64) -> Result<bool> {
        in_neighborhood(group, &self.to_piecewise(), radius, eps)
    }

    /// Parses `"n=4: a,a,b,b"`.
    pub fn parse(group: &WordGroup, s: &str) -> Result<Self> {
        let (head, body) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("step literal {s:?} needs the form n=<k>: v1,..,vk")))?;
        let n: usize = head
            .trim()
            .strip_prefix("n=")
            .and_then(|k| k.trim().parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad grid size in {s:?}")))?;
        let values = split_top_level(body, ',')
            .iter()
            .map(|v| group.parse_element(v))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != n {
            return Err(Error::Parse(format!(
                "{s:?} declares n={n} but has {} values",
                values.len()
            )));
        }
        h_embed(values)
    }
}

impl fmt::Display for StepMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vals: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
        write!(f, "n={}: {}", self.n(), vals.join(","))
    }
}

/// Pointwise product or quotient on the common refinement grid.
pub fn step_op(group: &WordGroup, f: &StepMap, g: &StepMap, op: StepOp) -> Result<StepMap> {
    let m = common_grid(f.n(), g.n())?;
    let (p, q) = (m / f.n(), m / g.n());
    let values = (0..m)
        .map(|c| {
            let (x, y) = (&f.values[c / p], &g.values[c / q]);
            match op {
                StepOp::Multiply => group.compose(x, y),
                StepOp::InvertSecond => group.divide(x, y),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StepMap { values })
}

impl From<&StepMap> for PiecewiseMap {
    fn from(s: &StepMap) -> Self {
        s.to_piecewise()
    }
}

impl PiecewiseMap {
    pub fn new(breakpoints: Vec<f64>, values: Vec<Element>) -> Result<Self> {
        if values.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidStep(format!(
                "{} breakpoints need {} values, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                values.len()
            )));
        }
        if breakpoints.iter().any(|b| !(b.is_finite() && *b > 0.0 && *b < 1.0)) {
            return Err(Error::InvalidStep("breakpoints must lie inside (0,1)".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidStep("breakpoints must be strictly increasing".into()));
        }
        Ok(Self { breakpoints, values })
    }

    pub fn constant(x: Element) -> Self {
        Self {
            breakpoints: Vec::new(),
            values: vec![x],
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[Element] {
        &self.values
    }

    pub fn validate(&self, group: &WordGroup) -> Result<()> {
        self.values.iter().try_for_each(|v| group.validate(v))
    }

    /// `(start, end, value)` for every cell, left to right.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, &Element)> + '_ {
        let nb = self.breakpoints.len();
        self.values.iter().enumerate().map(move |(i, v)| {
            let start = if i == 0 { 0.0 } else { self.breakpoints[i - 1] };
            let end = if i == nb { 1.0 } else { self.breakpoints[i] };
            (start, end, v)
        })
    }

    /// Value on the cell containing `t` (breakpoints belong to the right cell).
    pub fn value_at(&self, t: f64) -> &Element {
        let idx = self.breakpoints.partition_point(|b| *b <= t);
        &self.values[idx]
    }

    /// `integral over [start, end) of phi(f(t)) dt`.
    pub fn integrate_over<F: Fn(&Element) -> f64>(&self, start: f64, end: f64, phi: F) -> f64 {
        self.cells()
            .map(|(a, b, v)| {
                let len = b.min(end) - a.max(start);
                if len > 0.0 {
                    len * phi(v)
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// Merged breakpoints and, per merged cell, the value indices in `self`
    /// and `other`.
    fn merge(&self, other: &PiecewiseMap) -> (Vec<f64>, Vec<(usize, usize)>) {
        let (a, b) = (&self.breakpoints, &other.breakpoints);
        let (mut i, mut j) = (0, 0);
        let mut breaks = Vec::with_capacity(a.len() + b.len());
        let mut pairs = Vec::with_capacity(a.len() + b.len() + 1);
        pairs.push((0, 0));
        while i < a.len() || j < b.len() {
            let next = match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) if x == y => {
                    i += 1;
                    j += 1;
                    *x
                }
                (Some(x), Some(y)) if x < y => {
                    i += 1;
                    *x
                }
                (Some(x), None) => {
                    i += 1;
                    *x
                }
                (_, Some(y)) => {
                    j += 1;
                    *y
                }
                (None, None) => unreachable!(),
            };
            breaks.push(next);
            pairs.push((i, j));
        }
        (breaks, pairs)
    }

    fn combine(&self, group: &WordGroup, other: &PiecewiseMap, op: StepOp) -> Result<PiecewiseMap> {
        let (breakpoints, pairs) = self.merge(other);
        let values = pairs
            .into_iter()
            .map(|(i, j)| match op {
                StepOp::Multiply => group.compose(&self.values[i], &other.values[j]),
                StepOp::InvertSecond => group.divide(&self.values[i], &other.values[j]),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PiecewiseMap { breakpoints, values })
    }

    /// Pointwise product `self(t) other(t)`.
    pub fn multiply(&self, group: &WordGroup, other: &PiecewiseMap) -> Result<PiecewiseMap> {
        self.combine(group, other, StepOp::Multiply)
    }

    /// Pointwise `self(t) other(t)^-1`.
    pub fn divide(&self, group: &WordGroup, other: &PiecewiseMap) -> Result<PiecewiseMap> {
        self.combine(group, other, StepOp::InvertSecond)
    }

    pub fn disagreement(&self, other: &PiecewiseMap) -> f64 {
        let (breaks, pairs) = self.merge(other);
        let nb = breaks.len();
        pairs
            .iter()
            .enumerate()
            .filter(|(_, (i, j))| self.values[*i] != other.values[*j])
            .map(|(c, _)| {
                let start = if c == 0 { 0.0 } else { breaks[c - 1] };
                let end = if c == nb { 1.0 } else { breaks[c] };
                end - start
            })
            .sum()
    }

    /// Parses `"0.35: a|b"` or `"0.2,0.7: 1|0|2"`; a bare value is a constant map.
    pub fn parse(group: &WordGroup, s: &str) -> Result<Self> {
        let (bps, vals) = match s.split_once(':') {
            Some((b, v)) => (b.trim(), v),
            None => ("", s),
        };
        let breakpoints = if bps.is_empty() {
            Vec::new()
        } else {
            bps.split(',')
                .map(|b| {
                    b.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad breakpoint {b:?}")))
                })
                .collect::<Result<Vec<_>>>()?
        };
        let values = vals
            .split('|')
            .map(|v| group.parse_element(v))
            .collect::<Result<Vec<_>>>()?;
        Self::new(breakpoints, values)
    }
}

impl fmt::Display for PiecewiseMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bps: Vec<String> = self.breakpoints.iter().map(|b| b.to_string()).collect();
        let vals: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
        write!(f, "{}: {}", bps.join(","), vals.join("|"))
    }
}

/// Membership in `N(U, eps)` with `U` the open ball of word length below
/// `radius`: `lambda{t : |f(t)| >= radius} < eps`.
pub fn in_neighborhood(group: &WordGroup, f: &PiecewiseMap, radius: u64, eps: f64) -> Result<bool> {
    let mut outside = 0.0;
    for (a, b, v) in f.cells() {
        if group.word_length(v)? >= radius {
            outside += b - a;
        }
    }
    Ok(outside < eps)
}

/// Left-endpoint sampling of `f` on the grid `n`, together with the
/// disagreement between `f` and the resulting step map.
pub fn grid_approximate(f: &PiecewiseMap, n: usize) -> Result<(Vec<Element>, f64)> {
    if n == 0 {
        return Err(Error::EmptyTuple);
    }
    let tuple: Vec<Element> = (0..n).map(|i| f.value_at(i as f64 / n as f64).clone()).collect();
    let approx = StepMap { values: tuple };
    let mismatch = f.disagreement(&approx.to_piecewise());
    Ok((approx.values, mismatch))
}

/// Splits on `sep` outside parentheses, trimming each part.
pub(crate) fn split_top_level(s: &str, sep: char) -> Vec<String> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in s.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            _ => {}
        }
        if c == sep && depth == 0 {
            parts.push(cur.trim().to_string());
            cur.clear();
        } else {
            cur.push(c);
        }
    }
    parts.push(cur.trim().to_string());
    parts
}
