//! Word-metric groups and finitely supported measures on them.
//!
//! Three kinds are supported: `Z^d` with the standard generators (word
//! length is the l1 norm), `Z_m` with generator `1` (cyclic distance) and the
//! free group `F2` on `a, b` stored as reduced words over `a, A, b, B` where
//! the capitals are inverses. The metric `d(x, y) = |x y^-1|` is
//! right-invariant.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rand::Rng;
use serde::Serialize;

use crate::families::GroupFamily;
use crate::{check_probability, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum WordGroup {
    Lattice { dim: usize },
    Cyclic { modulus: u64 },
    Free2,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    Lattice(Vec<i64>),
    Cyclic(u64),
    /// Reduced word over `b'a'`, `b'A'`, `b'b'`, `b'B'`.
    Free(Vec<u8>),
}

fn letter_inverse(c: u8) -> u8 {
    c ^ 0x20
}

fn is_letter(c: u8) -> bool {
    matches!(c, b'a' | b'A' | b'b' | b'B')
}

/// Appends `c` to a reduced word, cancelling against the last letter.
fn push_reduced(word: &mut Vec<u8>, c: u8) {
    if word.last() == Some(&letter_inverse(c)) {
        word.pop();
    } else {
        word.push(c);
    }
}

impl Element {
    /// Reduced free-group element from a word over `a, A, b, B`; `""` and `"e"`
    /// denote the identity.
    pub fn free(word: &str) -> Result<Self> {
        let mut out = Vec::with_capacity(word.len());
        if word != "e" {
            for c in word.bytes() {
                if !is_letter(c) {
                    return Err(Error::InvalidElement {
                        group: "F2".into(),
                        detail: format!("letter {:?} not in {{a,A,b,B}}", c as char),
                    });
                }
                push_reduced(&mut out, c);
            }
        }
        Ok(Element::Free(out))
    }

    pub fn int(x: i64) -> Self {
        Element::Lattice(vec![x])
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Lattice(v) if v.len() == 1 => write!(f, "{}", v[0]),
            Element::Lattice(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "({})", parts.join(","))
            }
            Element::Cyclic(r) => write!(f, "{r}"),
            Element::Free(w) if w.is_empty() => write!(f, "e"),
            Element::Free(w) => write!(f, "{}", String::from_utf8_lossy(w)),
        }
    }
}

impl fmt::Display for WordGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WordGroup::Lattice { dim: 1 } => write!(f, "Z"),
            WordGroup::Lattice { dim } => write!(f, "Z^{dim}"),
            WordGroup::Cyclic { modulus } => write!(f, "Z_{modulus}"),
            WordGroup::Free2 => write!(f, "F2"),
        }
    }
}

impl WordGroup {
    pub fn integers() -> Self {
        WordGroup::Lattice { dim: 1 }
    }

    pub fn lattice(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Parse("Z^d needs d >= 1".into()));
        }
        Ok(WordGroup::Lattice { dim })
    }

    pub fn cyclic(modulus: u64) -> Result<Self> {
        if modulus < 2 {
            return Err(Error::Parse("Z_m needs m >= 2".into()));
        }
        Ok(WordGroup::Cyclic { modulus })
    }

    /// Parses `Z`, `Z^d`, `Z_m` or `F2`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("unknown group {s:?}; expected Z, Z^d, Z_m or F2"));
        match s {
            "Z" => Ok(Self::integers()),
            "F2" => Ok(WordGroup::Free2),
            _ => {
                if let Some(d) = s.strip_prefix("Z^") {
                    Self::lattice(d.parse().map_err(|_| bad())?)
                } else if let Some(m) = s.strip_prefix("Z_") {
                    Self::cyclic(m.parse().map_err(|_| bad())?)
                } else {
                    Err(bad())
                }
            }
        }
    }

    fn invalid(&self, detail: impl Into<String>) -> Error {
        Error::InvalidElement {
            group: self.to_string(),
            detail: detail.into(),
        }
    }

    pub fn identity(&self) -> Element {
        match self {
            WordGroup::Lattice { dim } => Element::Lattice(vec![0; *dim]),
            WordGroup::Cyclic { .. } => Element::Cyclic(0),
            WordGroup::Free2 => Element::Free(Vec::new()),
        }
    }

    pub fn is_identity(&self, x: &Element) -> bool {
        match x {
            Element::Lattice(v) => v.iter().all(|c| *c == 0),
            Element::Cyclic(r) => *r == 0,
            Element::Free(w) => w.is_empty(),
        }
    }

    pub fn validate(&self, x: &Element) -> Result<()> {
        match (self, x) {
            (WordGroup::Lattice { dim }, Element::Lattice(v)) if v.len() == *dim => Ok(()),
            (WordGroup::Lattice { dim }, Element::Lattice(v)) => {
                Err(self.invalid(format!("expected {dim} coordinates, got {}", v.len())))
            }
            (WordGroup::Cyclic { modulus }, Element::Cyclic(r)) if r < modulus => Ok(()),
            (WordGroup::Cyclic { modulus }, Element::Cyclic(r)) => {
                Err(self.invalid(format!("residue {r} not below {modulus}")))
            }
            (WordGroup::Free2, Element::Free(w)) => {
                if w.iter().any(|c| !is_letter(*c)) {
                    return Err(self.invalid("word contains letters outside {a,A,b,B}"));
                }
                if w.windows(2).any(|p| p[1] == letter_inverse(p[0])) {
                    return Err(self.invalid("word is not reduced"));
                }
                Ok(())
            }
            _ => Err(self.invalid(format!("element {x} has the wrong kind"))),
        }
    }

    fn kind_mismatch(&self, x: &Element, y: &Element) -> Error {
        self.invalid(format!("cannot combine {x} and {y}"))
    }

    /// Group product `x * y`.
    pub fn compose(&self, x: &Element, y: &Element) -> Result<Element> {
        match (self, x, y) {
            (WordGroup::Lattice { dim }, Element::Lattice(a), Element::Lattice(b))
                if a.len() == *dim && b.len() == *dim =>
            {
                Ok(Element::Lattice(a.iter().zip(b).map(|(p, q)| p + q).collect()))
            }
            (WordGroup::Cyclic { modulus }, Element::Cyclic(a), Element::Cyclic(b)) => {
                Ok(Element::Cyclic(((*a as u128 + *b as u128) % *modulus as u128) as u64))
            }
            (WordGroup::Free2, Element::Free(a), Element::Free(b)) => {
                let mut out = a.clone();
                for &c in b {
                    push_reduced(&mut out, c);
                }
                Ok(Element::Free(out))
            }
            _ => Err(self.kind_mismatch(x, y)),
        }
    }

    pub fn inverse(&self, x: &Element) -> Result<Element> {
        self.validate(x)?;
        Ok(match (self, x) {
            (_, Element::Lattice(v)) => Element::Lattice(v.iter().map(|c| -c).collect()),
            (WordGroup::Cyclic { modulus }, Element::Cyclic(r)) => Element::Cyclic((modulus - r) % modulus),
            (_, Element::Free(w)) => Element::Free(w.iter().rev().map(|c| letter_inverse(*c)).collect()),
            _ => unreachable!("validated above"),
        })
    }

    /// `x * y^-1`.
    pub fn divide(&self, x: &Element, y: &Element) -> Result<Element> {
        self.compose(x, &self.inverse(y)?)
    }

    /// Minimal length of a word in the generators representing `x`.
    pub fn word_length(&self, x: &Element) -> Result<u64> {
        self.validate(x)?;
        Ok(match (self, x) {
            (_, Element::Lattice(v)) => v.iter().map(|c| c.unsigned_abs()).sum(),
            (WordGroup::Cyclic { modulus }, Element::Cyclic(r)) => (*r).min(modulus - r),
            (_, Element::Free(w)) => w.len() as u64,
            _ => unreachable!("validated above"),
        })
    }

    /// Right-invariant word metric `|x y^-1|`.
    pub fn distance(&self, x: &Element, y: &Element) -> Result<f64> {
        Ok(self.word_length(&self.divide(x, y)?)? as f64)
    }

    /// The symmetric generating set.
    pub fn generators(&self) -> Vec<Element> {
        match self {
            WordGroup::Lattice { dim } => (0..*dim)
                .flat_map(|i| {
                    [1i64, -1].into_iter().map(move |s| {
                        let mut v = vec![0; *dim];
                        v[i] = s;
                        Element::Lattice(v)
                    })
                })
                .collect(),
            WordGroup::Cyclic { modulus: 2 } => vec![Element::Cyclic(1)],
            WordGroup::Cyclic { modulus } => vec![Element::Cyclic(1), Element::Cyclic(modulus - 1)],
            WordGroup::Free2 => b"aAbB".iter().map(|c| Element::Free(vec![*c])).collect(),
        }
    }

    /// All elements of word length at most `radius`, in breadth-first order.
    pub fn ball(&self, radius: u64) -> Vec<Element> {
        let mut seen: HashSet<Element> = HashSet::new();
        let mut out = vec![self.identity()];
        seen.insert(self.identity());
        let mut frontier = out.clone();
        let gens = self.generators();
        for _ in 0..radius {
            let mut next = Vec::new();
            for x in &frontier {
                for s in &gens {
                    let y = self.compose(s, x).expect("generators are valid");
                    if seen.insert(y.clone()) {
                        next.push(y);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out
    }

    /// Parses an element literal: `5` or `(1,-2)` for `Z^d`, a residue for
    /// `Z_m` (reduced modulo `m`), a word over `a, A, b, B` (or `e`) for `F2`.
    pub fn parse_element(&self, s: &str) -> Result<Element> {
        let s = s.trim();
        let x = match self {
            WordGroup::Lattice { dim } => {
                let inner = s.strip_prefix('(').and_then(|t| t.strip_suffix(')')).unwrap_or(s);
                let coords = inner
                    .split(',')
                    .map(|c| c.trim().parse::<i64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| self.invalid(format!("cannot parse {s:?}")))?;
                if coords.len() != *dim {
                    return Err(self.invalid(format!("{s:?} does not have {dim} coordinates")));
                }
                Element::Lattice(coords)
            }
            WordGroup::Cyclic { modulus } => {
                let r: i128 = s.parse().map_err(|_| self.invalid(format!("cannot parse {s:?}")))?;
                Element::Cyclic(r.rem_euclid(*modulus as i128) as u64)
            }
            WordGroup::Free2 => Element::free(s)?,
        };
        self.validate(&x)?;
        Ok(x)
    }

    /// A random element with word length at most `radius` (not uniform on
    /// the ball for `F2`).
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R, radius: u64) -> Element {
        match self {
            WordGroup::Lattice { dim } => {
                let mut left = radius as i64;
                let mut v = vec![0i64; *dim];
                for c in v.iter_mut() {
                    let x = rng.gen_range(-left..=left);
                    *c = x;
                    left -= x.abs();
                }
                Element::Lattice(v)
            }
            WordGroup::Cyclic { modulus } => Element::Cyclic(rng.gen_range(0..*modulus)),
            WordGroup::Free2 => {
                let len = rng.gen_range(0..=radius);
                let mut w = Vec::new();
                while (w.len() as u64) < len {
                    let c = b"aAbB"[rng.gen_range(0..4)];
                    push_reduced(&mut w, c);
                }
                Element::Free(w)
            }
        }
    }

    /// Signed coordinate used by ramp functions: the first coordinate on
    /// `Z^d` and the exponent sum of `a` on `F2`. Both are 1-Lipschitz
    /// homomorphisms to `Z`; `Z_m` has none.
    pub fn signed_coordinate(&self, x: &Element) -> Result<i64> {
        match (self, x) {
            (WordGroup::Lattice { .. }, Element::Lattice(v)) => Ok(v[0]),
            (WordGroup::Free2, Element::Free(w)) => Ok(w
                .iter()
                .map(|c| match c {
                    b'a' => 1,
                    b'A' => -1,
                    _ => 0,
                })
                .sum()),
            (WordGroup::Cyclic { .. }, _) => Err(Error::WrongKind("Z_m has no signed coordinate".into())),
            _ => Err(self.invalid(format!("element {x} has the wrong kind"))),
        }
    }
}

/// A finitely supported probability measure on a word group.
#[derive(Debug, Clone, PartialEq)]
pub struct FinSuppMeasure {
    group: WordGroup,
    support: Vec<Element>,
    weights: Vec<f64>,
}

impl FinSuppMeasure {
    pub fn new(group: WordGroup, support: Vec<Element>, weights: Vec<f64>) -> Result<Self> {
        if support.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: support.len(),
                got: weights.len(),
            });
        }
        check_probability(&weights)?;
        if let Some(w) = weights.iter().find(|w| **w <= 0.0) {
            return Err(Error::InvalidMeasure(format!("support weight {w} is not positive")));
        }
        let mut seen = HashSet::with_capacity(support.len());
        for x in &support {
            group.validate(x)?;
            if !seen.insert(x) {
                return Err(Error::InvalidMeasure(format!("support element {x} repeated")));
            }
        }
        Ok(Self {
            group,
            support,
            weights,
        })
    }

    pub fn uniform(group: WordGroup, support: Vec<Element>) -> Result<Self> {
        let n = support.len();
        Self::new(group, support, vec![1.0 / n as f64; n])
    }

    pub fn dirac(group: WordGroup, x: Element) -> Result<Self> {
        Self::new(group, vec![x], vec![1.0])
    }

    /// Uniform measure on the whole of `Z_m`.
    pub fn haar(group: WordGroup) -> Result<Self> {
        match group {
            WordGroup::Cyclic { modulus } => {
                let support = (0..modulus).map(Element::Cyclic).collect();
                Self::uniform(group, support)
            }
            _ => Err(Error::WrongKind(format!("{group} is not finite"))),
        }
    }

    /// Uniform measure on the ball of the given radius.
    pub fn ball_uniform(group: WordGroup, radius: u64) -> Result<Self> {
        let support = group.ball(radius);
        Self::uniform(group, support)
    }

    pub fn group(&self) -> &WordGroup {
        &self.group
    }

    pub fn support(&self) -> &[Element] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn expectation<F: Fn(&Element) -> f64>(&self, f: F) -> f64 {
        self.support.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }

    /// Push-forward under `x -> g x`.
    pub fn translate(&self, g: &Element) -> Result<Self> {
        self.group.validate(g)?;
        let support = self
            .support
            .iter()
            .map(|x| self.group.compose(g, x))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            group: self.group.clone(),
            support,
            weights: self.weights.clone(),
        })
    }
}

/// Max over the family of `|E_mu(f) - E_mu(f o lambda_g)|`.
pub fn invariance_defect(mu: &FinSuppMeasure, g: &Element, family: &GroupFamily) -> Result<f64> {
    if family.group() != mu.group() {
        return Err(Error::CarrierMismatch(format!(
            "measure on {} but family over {}",
            mu.group(),
            family.group()
        )));
    }
    mu.group().validate(g)?;
    let shifted = mu.translate(g)?;
    let mut worst = 0.0f64;
    for index in 0..family.len() {
        let mut plain = 0.0;
        let mut moved = 0.0;
        for ((x, gx), w) in mu.support().iter().zip(shifted.support()).zip(mu.weights()) {
            plain += w * family.eval_member(index, x)?;
            moved += w * family.eval_member(index, gx)?;
        }
        worst = worst.max((plain - moved).abs());
    }
    Ok(worst)
}

/// `sum_x |mu(x) - mu(g^-1 x)|`. For a family bounded by `B` the defect
/// against `g` is at most `B` times this; on the box `[-k,k]^d` and a
/// generator it equals `2 / (2k + 1)`.
pub fn translation_l1(mu: &FinSuppMeasure, g: &Element) -> Result<f64> {
    let shifted = mu.translate(g)?;
    let mut diff: BTreeMap<&Element, f64> = BTreeMap::new();
    for (x, w) in mu.support().iter().zip(mu.weights()) {
        *diff.entry(x).or_default() += w;
    }
    for (x, w) in shifted.support().iter().zip(shifted.weights()) {
        *diff.entry(x).or_default() -= w;
    }
    Ok(diff.values().map(|d| d.abs()).sum())
}

/// Uniform measure on the box `[-k, k]^d` of `Z^d`.
pub fn folner_measure(group: &WordGroup, k: u64) -> Result<FinSuppMeasure> {
    let dim = match group {
        WordGroup::Lattice { dim } => *dim,
        other => return Err(Error::WrongKind(format!("Folner boxes need Z^d, got {other}"))),
    };
    if k == 0 {
        return Err(Error::InvalidMeasure("box half-width must be positive".into()));
    }
    let k = k as i64;
    let side = (2 * k + 1) as u128;
    let count = crate::checked_power(side as usize, dim);
    if count > crate::EXACT_PRODUCT_CAP {
        return Err(Error::TooLargeForExact {
            points: count,
            limit: crate::EXACT_PRODUCT_CAP,
        });
    }
    let mut support = Vec::with_capacity(count as usize);
    let mut cur = vec![-k; dim];
    loop {
        support.push(Element::Lattice(cur.clone()));
        let mut i = 0;
        loop {
            if i == dim {
                return FinSuppMeasure::uniform(group.clone(), support);
            }
            if cur[i] < k {
                cur[i] += 1;
                break;
            }
            cur[i] = -k;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{BLFamily, Member};

    fn clamp5(g: &WordGroup) -> GroupFamily {
        let gg = g.clone();
        BLFamily::new(g.clone(), 1.0, 0.2).with_member(Member::new("min(|x|,5)/5", move |x| {
            gg.word_length(x).unwrap().min(5) as f64 / 5.0
        }))
    }

    #[test]
    fn word_lengths() {
        let z = WordGroup::integers();
        assert_eq!(z.word_length(&Element::int(5)).unwrap(), 5);
        let f2 = WordGroup::Free2;
        assert_eq!(f2.word_length(&Element::free("abA").unwrap()).unwrap(), 3);
        assert_eq!(f2.word_length(&Element::free("abBA").unwrap()).unwrap(), 0);
        let z6 = WordGroup::cyclic(6).unwrap();
        assert_eq!(z6.word_length(&Element::Cyclic(4)).unwrap(), 2);
        assert!(matches!(
            z6.word_length(&Element::Cyclic(6)),
            Err(Error::InvalidElement { .. })
        ));
        assert!(z.word_length(&Element::Cyclic(1)).is_err());
    }

    #[test]
    fn parse_round_trip() {
        let z2 = WordGroup::parse("Z^2").unwrap();
        let x = z2.parse_element("(1,-2)").unwrap();
        assert_eq!(x, Element::Lattice(vec![1, -2]));
        assert_eq!(x.to_string(), "(1,-2)");
        assert_eq!(
            WordGroup::parse("Z_12").unwrap().parse_element("-1").unwrap(),
            Element::Cyclic(11)
        );
        assert_eq!(
            WordGroup::Free2.parse_element("aAb").unwrap(),
            Element::free("b").unwrap()
        );
        assert_eq!(WordGroup::parse("Z").unwrap(), WordGroup::integers());
        assert!(WordGroup::parse("Q").is_err());
        assert!(WordGroup::Free2.parse_element("abc").is_err());
    }

    #[test]
    fn translate_measure() {
        let z = WordGroup::integers();
        let mu = FinSuppMeasure::uniform(z.clone(), (0..4).map(Element::int).collect()).unwrap();
        let moved = mu.translate(&Element::int(1)).unwrap();
        assert_eq!(moved.support(), &(1..5).map(Element::int).collect::<Vec<_>>()[..]);
        assert!((moved.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let d = FinSuppMeasure::dirac(z.clone(), Element::int(3)).unwrap();
        assert_eq!(d.translate(&Element::int(-5)).unwrap().support(), &[Element::int(-2)]);
    }

    #[test]
    fn measure_validation() {
        let z = WordGroup::integers();
        assert!(FinSuppMeasure::new(z.clone(), vec![Element::int(0), Element::int(0)], vec![0.5, 0.5]).is_err());
        assert!(FinSuppMeasure::new(z.clone(), vec![Element::int(0), Element::int(1)], vec![1.0, 0.0]).is_err());
        assert!(FinSuppMeasure::new(z, vec![Element::Cyclic(0)], vec![1.0]).is_err());
    }

    #[test]
    fn defects() {
        let z = WordGroup::integers();
        let mu = FinSuppMeasure::uniform(z.clone(), (0..4).map(Element::int).collect()).unwrap();
        let d = invariance_defect(&mu, &Element::int(1), &clamp5(&z)).unwrap();
        assert!((d - 0.2).abs() < 1e-12);

        let z7 = WordGroup::cyclic(7).unwrap();
        let haar = FinSuppMeasure::haar(z7.clone()).unwrap();
        for g in 0..7 {
            assert!(invariance_defect(&haar, &Element::Cyclic(g), &clamp5(&z7)).unwrap() < 1e-15);
        }

        let f2 = WordGroup::Free2;
        let g2 = f2.clone();
        let fam = BLFamily::new(f2.clone(), 1.0, 1.0).with_member(Member::new("min(len,1)", move |x| {
            g2.word_length(x).unwrap().min(1) as f64
        }));
        let delta = FinSuppMeasure::dirac(f2.clone(), f2.identity()).unwrap();
        assert_eq!(
            invariance_defect(&delta, &Element::free("a").unwrap(), &fam).unwrap(),
            1.0
        );

        assert!(matches!(
            invariance_defect(&mu, &Element::int(1), &clamp5(&z7)),
            Err(Error::CarrierMismatch(_))
        ));
    }

    #[test]
    fn folner_boxes() {
        let z = WordGroup::integers();
        let mu = folner_measure(&z, 2).unwrap();
        assert_eq!(mu.len(), 5);
        assert!(mu.weights().iter().all(|w| (*w - 0.2).abs() < 1e-15));
        let d = invariance_defect(&mu, &Element::int(1), &clamp5(&z)).unwrap();
        assert!((d - 0.04).abs() < 1e-12);
        assert_eq!(folner_measure(&WordGroup::lattice(2).unwrap(), 1).unwrap().len(), 9);
        assert!(matches!(folner_measure(&WordGroup::Free2, 1), Err(Error::WrongKind(_))));
        for k in 1..6 {
            let box2 = folner_measure(&WordGroup::lattice(2).unwrap(), k).unwrap();
            let l1 = translation_l1(&box2, &Element::Lattice(vec![0, 1])).unwrap();
            assert!((l1 - 2.0 / (2 * k + 1) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn free_ball_sizes() {
        for k in 0..6u32 {
            assert_eq!(WordGroup::Free2.ball(k as u64).len(), 2 * 3usize.pow(k) - 1);
        }
        assert_eq!(WordGroup::cyclic(5).unwrap().ball(10).len(), 5);
        assert_eq!(WordGroup::lattice(2).unwrap().ball(2).len(), 13);
    }
}
