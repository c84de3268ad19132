//! Bounded-Lipschitz test families.
//!
//! A family is a finite list of functions together with a common sup-norm
//! bound `B` and a common Lipschitz constant `L` for the carrier's metric
//! (the word metric on `G`, the disagreement pseudometric on step maps).
//! Suprema over a uniformly equicontinuous bounded set become maxima over
//! the list.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::groups::{Element, WordGroup};
use crate::l0_step::{h_embed, insert_coordinate, PiecewiseMap};
use crate::{Error, Result, TOL};

/// A point type a family can be carried by.
pub trait Carried: Clone + Send + Sync + 'static {
    const CARRIER: &'static str;
    fn metric(group: &WordGroup, x: &Self, y: &Self) -> Result<f64>;
}

impl Carried for Element {
    const CARRIER: &'static str = "group";
    fn metric(group: &WordGroup, x: &Self, y: &Self) -> Result<f64> {
        group.distance(x, y)
    }
}

impl Carried for PiecewiseMap {
    const CARRIER: &'static str = "L0";
    fn metric(_: &WordGroup, x: &Self, y: &Self) -> Result<f64> {
        Ok(x.disagreement(y))
    }
}

type Func<X> = Arc<dyn Fn(&X) -> f64 + Send + Sync>;

/// A named real function on the carrier.
pub struct Member<X> {
    name: String,
    func: Func<X>,
}

impl<X> Clone for Member<X> {
    fn clone(&self) -> Self {
        Self {
            name: self.name.clone(),
            func: Arc::clone(&self.func),
        }
    }
}

impl<X> fmt::Debug for Member<X> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Member").field("name", &self.name).finish()
    }
}

impl<X> Member<X> {
    pub fn new<F>(name: impl Into<String>, func: F) -> Self
    where
        F: Fn(&X) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            func: Arc::new(func),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: &X) -> f64 {
        (self.func)(x)
    }
}

impl<X: 'static> Member<X> {
    /// `alpha * self + beta * other`.
    pub fn linear_combination(&self, alpha: f64, other: &Member<X>, beta: f64) -> Member<X> {
        let (f, g) = (Arc::clone(&self.func), Arc::clone(&other.func));
        Member::new(format!("{alpha}*{}+{beta}*{}", self.name, other.name), move |x| {
            alpha * f(x) + beta * g(x)
        })
    }
}

#[derive(Debug, Clone)]
pub struct BLFamily<X> {
    group: WordGroup,
    members: Vec<Member<X>>,
    bound: f64,
    lipschitz: f64,
}

pub type GroupFamily = BLFamily<Element>;
pub type L0Family = BLFamily<PiecewiseMap>;

impl<X: Carried> BLFamily<X> {
    /// Empty family with declared bound and Lipschitz constant. An infinite
    /// Lipschitz constant means "not declared".
    pub fn new(group: WordGroup, bound: f64, lipschitz: f64) -> Self {
        Self {
            group,
            members: Vec::new(),
            bound,
            lipschitz,
        }
    }

    pub fn with_member(mut self, member: Member<X>) -> Self {
        self.members.push(member);
        self
    }

    pub fn push(&mut self, member: Member<X>) {
        self.members.push(member);
    }

    /// Union of two families over the same group; bounds are maxed.
    pub fn union(mut self, other: BLFamily<X>) -> Result<Self> {
        if self.group != other.group {
            return Err(Error::CarrierMismatch(format!("{} vs {}", self.group, other.group)));
        }
        self.bound = self.bound.max(other.bound);
        self.lipschitz = self.lipschitz.max(other.lipschitz);
        self.members.extend(other.members);
        Ok(self)
    }

    pub fn group(&self) -> &WordGroup {
        &self.group
    }

    pub fn carrier(&self) -> &'static str {
        X::CARRIER
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn members(&self) -> &[Member<X>] {
        &self.members
    }

    pub fn member(&self, index: usize) -> Result<&Member<X>> {
        self.members
            .get(index)
            .ok_or_else(|| Error::DimensionMismatch(format!("member {index} of a family of {}", self.members.len())))
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Evaluates a member, rejecting values outside `[-B, B]`.
    pub fn eval_member(&self, index: usize, x: &X) -> Result<f64> {
        let value = self.member(index)?.eval(x);
        if !value.is_finite() || value.abs() > self.bound + TOL {
            return Err(Error::OutOfRange {
                index,
                value,
                bound: self.bound,
            });
        }
        Ok(value)
    }

    /// Checks the bound on every sample and the Lipschitz constant on every
    /// pair of samples.
    pub fn verify(&self, samples: &[X]) -> Result<()> {
        for (index, _) in self.members.iter().enumerate() {
            for x in samples {
                self.eval_member(index, x)?;
            }
        }
        if !self.lipschitz.is_finite() {
            return Ok(());
        }
        for (i, x) in samples.iter().enumerate() {
            for y in &samples[i + 1..] {
                let d = X::metric(&self.group, x, y)?;
                for m in &self.members {
                    let gap = (m.eval(x) - m.eval(y)).abs();
                    if gap > self.lipschitz * d + TOL {
                        return Err(Error::LipschitzViolation {
                            declared: self.lipschitz,
                            observed: if d > 0.0 { gap / d } else { f64::INFINITY },
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// `x -> F(h_n(c_{i,a}(x)))`.
pub fn pullback_member(
    group: &WordGroup,
    member: &Member<PiecewiseMap>,
    n: usize,
    i: usize,
    rest: &[Element],
) -> Result<Member<Element>> {
    if n == 0 || rest.len() + 1 != n {
        return Err(Error::DimensionMismatch(format!(
            "grid {n} needs {} fixed coordinates, got {}",
            n.saturating_sub(1),
            rest.len()
        )));
    }
    if i == 0 || i > n {
        return Err(Error::DimensionMismatch(format!("cell index {i} outside 1..={n}")));
    }
    for a in rest {
        group.validate(a)?;
    }
    let rest = rest.to_vec();
    let f = member.clone();
    Ok(Member::new(
        format!("{}@c({i},n={n})", member.name()),
        move |x: &Element| {
            let tuple = insert_coordinate(i, &rest, x.clone()).expect("dimensions checked");
            f.eval(&h_embed(tuple).expect("non-empty").to_piecewise())
        },
    ))
}

/// The pulled-back family `{F o h_n o c_{i,a}}`; it keeps the bound `B`, and
/// its Lipschitz constant for the word metric is `L / n`.
pub fn pullback_family(family: &L0Family, n: usize, i: usize, rest: &[Element]) -> Result<GroupFamily> {
    let mut out = GroupFamily::new(family.group().clone(), family.bound(), family.lipschitz() / n as f64);
    for m in family.members() {
        out.push(pullback_member(family.group(), m, n, i, rest)?);
    }
    Ok(out)
}

/// `x -> f(g x)`.
pub fn compose_with_translation(group: &WordGroup, member: &Member<Element>, g: &Element) -> Result<Member<Element>> {
    group.validate(g).map_err(|e| Error::CarrierMismatch(e.to_string()))?;
    let (group, g, f) = (group.clone(), g.clone(), member.clone());
    Ok(Member::new(
        format!("{}∘λ[{g}]", member.name()),
        move |x: &Element| f.eval(&group.compose(&g, x).expect("validated")),
    ))
}

/// Translates every member by `g`. Bound and declared Lipschitz constant are
/// kept; the latter is exact only when left translations are isometries.
pub fn translate_family(family: &GroupFamily, g: &Element) -> Result<GroupFamily> {
    let mut out = GroupFamily::new(family.group().clone(), family.bound(), family.lipschitz());
    for m in family.members() {
        out.push(compose_with_translation(family.group(), m, g)?);
    }
    Ok(out)
}

/// `h -> F(u h)` for a fixed map `u`.
pub fn translate_l0_member(
    group: &WordGroup,
    member: &Member<PiecewiseMap>,
    u: &PiecewiseMap,
) -> Result<Member<PiecewiseMap>> {
    u.validate(group).map_err(|e| Error::CarrierMismatch(e.to_string()))?;
    let (group, u, f) = (group.clone(), u.clone(), member.clone());
    Ok(Member::new(
        format!("{}∘λ[{u}]", member.name()),
        move |h: &PiecewiseMap| f.eval(&u.multiply(&group, h).expect("validated")),
    ))
}

/// Named builders for descriptor strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuilderKind {
    /// `min(max(|x| - shift, 0), c) / c`
    WordlenClamp,
    /// `[x != e]`
    Disagreement,
    /// `max(0, 1 - |x| / c)`
    CellIndicatorSmoothed,
    /// `clamp((s(x) + c) / (2c), 0, 1)` with `s` the signed coordinate
    SignedRamp,
}

impl BuilderKind {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "wordlen-clamp" => Ok(Self::WordlenClamp),
            "disagreement" => Ok(Self::Disagreement),
            "cell-indicator-smoothed" => Ok(Self::CellIndicatorSmoothed),
            "signed-ramp" => Ok(Self::SignedRamp),
            _ => Err(Error::Parse(format!(
                "unknown family builder {s:?}; expected wordlen-clamp, disagreement, cell-indicator-smoothed or signed-ramp"
            ))),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Self::WordlenClamp => "wordlen-clamp",
            Self::Disagreement => "disagreement",
            Self::CellIndicatorSmoothed => "cell-indicator-smoothed",
            Self::SignedRamp => "signed-ramp",
        }
    }

    fn allowed(self) -> &'static [&'static str] {
        match self {
            Self::WordlenClamp => &["c", "shift", "windows"],
            Self::Disagreement => &["windows"],
            Self::CellIndicatorSmoothed | Self::SignedRamp => &["c", "windows"],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuilderSpec {
    pub kind: BuilderKind,
    pub params: BTreeMap<String, f64>,
}

/// A `+`-separated list of builders, e.g.
/// `wordlen-clamp:c=4,windows=10+signed-ramp:c=4,windows=10`.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyDescriptor {
    pub builders: Vec<BuilderSpec>,
}

impl BuilderSpec {
    fn param(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    fn windows(&self) -> Result<usize> {
        let w = self.param("windows", 1.0);
        if w < 1.0 || w.fract() != 0.0 {
            return Err(Error::Parse(format!("windows must be a positive integer, got {w}")));
        }
        Ok(w as usize)
    }

    /// The underlying function on the group with values in `[0, 1]` and its
    /// Lipschitz constant for the word metric.
    fn group_function(&self, group: &WordGroup) -> Result<(String, Func<Element>, f64)> {
        let g = group.clone();
        let c = self.param("c", 1.0);
        if c <= 0.0 {
            return Err(Error::Parse(format!("c must be positive, got {c}")));
        }
        Ok(match self.kind {
            BuilderKind::WordlenClamp => {
                let shift = self.param("shift", 0.0);
                (
                    format!("wordlen-clamp(c={c},shift={shift})"),
                    Arc::new(move |x: &Element| {
                        let l = g.word_length(x).expect("valid element") as f64;
                        (l - shift).clamp(0.0, c) / c
                    }),
                    1.0 / c,
                )
            }
            BuilderKind::Disagreement => (
                "disagreement".to_string(),
                Arc::new(move |x: &Element| if g.is_identity(x) { 0.0 } else { 1.0 }),
                1.0,
            ),
            BuilderKind::CellIndicatorSmoothed => (
                format!("cell-indicator-smoothed(c={c})"),
                Arc::new(move |x: &Element| {
                    let l = g.word_length(x).expect("valid element") as f64;
                    (1.0 - l / c).max(0.0)
                }),
                1.0 / c,
            ),
            BuilderKind::SignedRamp => {
                if matches!(group, WordGroup::Cyclic { .. }) {
                    return Err(Error::WrongKind("signed-ramp needs Z^d or F2".into()));
                }
                (
                    format!("signed-ramp(c={c})"),
                    Arc::new(move |x: &Element| {
                        let s = g.signed_coordinate(x).expect("valid element") as f64;
                        ((s + c) / (2.0 * c)).clamp(0.0, 1.0)
                    }),
                    1.0 / (2.0 * c),
                )
            }
        })
    }
}

/// Integration windows: `[0,1)` first, then sliding half-length windows
/// `[s, s + 1/2)` with starts spread over `[0, 1/2]`.
pub fn windows(count: usize) -> Vec<(f64, f64)> {
    let mut out = vec![(0.0, 1.0)];
    if count > 1 {
        let slots = (count - 2).max(1) as f64;
        for j in 0..count - 1 {
            let start = 0.5 * j as f64 / slots;
            out.push((start, start + 0.5));
        }
    }
    out
}

impl FamilyDescriptor {
    pub fn parse(s: &str) -> Result<Self> {
        let builders = s
            .split('+')
            .map(|part| {
                let part = part.trim();
                let (name, rest) = part.split_once(':').unwrap_or((part, ""));
                let kind = BuilderKind::parse(name.trim())?;
                let mut params = BTreeMap::new();
                for kv in rest.split(',').map(str::trim).filter(|kv| !kv.is_empty()) {
                    let (k, v) = kv
                        .split_once('=')
                        .ok_or_else(|| Error::Parse(format!("parameter {kv:?} needs key=value")))?;
                    let k = k.trim();
                    if !kind.allowed().contains(&k) {
                        return Err(Error::Parse(format!("{} takes no parameter {k:?}", kind.name())));
                    }
                    let v: f64 = v
                        .trim()
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad value in {kv:?}")))?;
                    params.insert(k.to_string(), v);
                }
                Ok(BuilderSpec { kind, params })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { builders })
    }

    /// One member per builder, over the group itself.
    pub fn build_group(&self, group: &WordGroup) -> Result<GroupFamily> {
        let mut lip = 0.0f64;
        let mut members = Vec::new();
        for b in &self.builders {
            let (name, f, l) = b.group_function(group)?;
            lip = lip.max(l);
            members.push(Member { name, func: f });
        }
        let mut fam = GroupFamily::new(group.clone(), 1.0, lip);
        fam.members = members;
        Ok(fam)
    }

    /// Members `h -> integral over W of phi(h(t)) dt`, one per builder and
    /// window. Integrands lie in `[0,1]`, so `B = 1` and `L = 1` for the
    /// disagreement pseudometric.
    pub fn build_l0(&self, group: &WordGroup) -> Result<L0Family> {
        let mut fam = L0Family::new(group.clone(), 1.0, 1.0);
        for b in &self.builders {
            let (name, f, _) = b.group_function(group)?;
            for (start, end) in windows(b.windows()?) {
                let f = Arc::clone(&f);
                fam.push(Member::new(
                    format!("∫[{start},{end}) {name}"),
                    move |h: &PiecewiseMap| h.integrate_over(start, end, |x| f(x)),
                ));
            }
        }
        Ok(fam)
    }
}

impl fmt::Display for FamilyDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .builders
            .iter()
            .map(|b| {
                if b.params.is_empty() {
                    b.kind.name().to_string()
                } else {
                    let ps: Vec<String> = b.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                    format!("{}:{}", b.kind.name(), ps.join(","))
                }
            })
            .collect();
        write!(f, "{}", parts.join("+"))
    }
}

/// Clamped word-length family used for the free-group contrast: the shells
/// `clamp(|x| - r, 0, 1)` for `r = 0..=k` and the ramp `min(|x| / (k+1), 1)`.
/// All members have `B = 1`, `L = 1`.
pub fn clamped_wordlen_family(group: &WordGroup, k: u64) -> GroupFamily {
    let mut fam = GroupFamily::new(group.clone(), 1.0, 1.0);
    let g = group.clone();
    let scale = (k + 1) as f64;
    fam.push(Member::new(format!("min(|x|/{scale},1)"), move |x: &Element| {
        (g.word_length(x).expect("valid element") as f64 / scale).min(1.0)
    }));
    for r in 0..=k {
        let g = group.clone();
        fam.push(Member::new(format!("clamp(|x|-{r},0,1)"), move |x: &Element| {
            (g.word_length(x).expect("valid element") as f64 - r as f64).clamp(0.0, 1.0)
        }));
    }
    fam
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::l0_step::StepMap;

    fn z() -> WordGroup {
        WordGroup::integers()
    }

    fn disagreement_l0(group: &WordGroup) -> L0Family {
        FamilyDescriptor::parse("disagreement")
            .unwrap()
            .build_l0(group)
            .unwrap()
    }

    #[test]
    fn eval_members() {
        let g = z();
        let fam = GroupFamily::new(g.clone(), 2.0, 0.0).with_member(Member::new("c", |_| 1.5));
        assert_eq!(fam.eval_member(0, &Element::int(9)).unwrap(), 1.5);
        let clamp = FamilyDescriptor::parse("wordlen-clamp:c=5")
            .unwrap()
            .build_group(&g)
            .unwrap();
        assert!((clamp.eval_member(0, &Element::int(3)).unwrap() - 0.6).abs() < 1e-15);
        let l0 = disagreement_l0(&g);
        let id = StepMap::identity(&g, 4).unwrap().to_piecewise();
        assert_eq!(l0.eval_member(0, &id).unwrap(), 0.0);
        let bad = GroupFamily::new(g, 1.0, 1.0).with_member(Member::new("big", |_| 3.0));
        assert!(matches!(
            bad.eval_member(0, &Element::int(0)),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            bad.eval_member(1, &Element::int(0)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn pullbacks() {
        let g = z();
        let l0 = disagreement_l0(&g);
        let e = g.identity();
        let p = pullback_member(&g, &l0.members()[0], 4, 2, &[e.clone(), e.clone(), e.clone()]).unwrap();
        assert_eq!(p.eval(&e), 0.0);
        assert_eq!(p.eval(&Element::int(3)), 0.25);
        let p = pullback_member(&g, &l0.members()[0], 4, 2, &[Element::int(2), e.clone(), e.clone()]).unwrap();
        assert_eq!(p.eval(&e), 0.25);
        assert_eq!(p.eval(&Element::int(-1)), 0.5);
        let constant = Member::new("k", |_: &PiecewiseMap| 0.7);
        let p = pullback_member(&g, &constant, 3, 1, &[e.clone(), e.clone()]).unwrap();
        assert_eq!(p.eval(&Element::int(5)), 0.7);
        assert!(matches!(
            pullback_member(&g, &constant, 3, 1, std::slice::from_ref(&e)),
            Err(Error::DimensionMismatch(_))
        ));
        let fam = pullback_family(&l0, 4, 1, &[e.clone(), e.clone(), e]).unwrap();
        assert_eq!(fam.bound(), 1.0);
        assert_eq!(fam.lipschitz(), 0.25);
        let samples: Vec<Element> = (-6..=6).map(Element::int).collect();
        fam.verify(&samples).unwrap();
    }

    #[test]
    fn translations() {
        let g = z();
        let clamp = FamilyDescriptor::parse("wordlen-clamp:c=5")
            .unwrap()
            .build_group(&g)
            .unwrap();
        let same = compose_with_translation(&g, &clamp.members()[0], &g.identity()).unwrap();
        for x in -7..=7 {
            assert_eq!(same.eval(&Element::int(x)), clamp.members()[0].eval(&Element::int(x)));
        }
        let moved = translate_family(&clamp, &Element::int(3)).unwrap();
        let samples: Vec<Element> = (-10..=10).map(Element::int).collect();
        moved.verify(&samples).unwrap();

        let f2 = WordGroup::Free2;
        let one = FamilyDescriptor::parse("wordlen-clamp:c=1")
            .unwrap()
            .build_group(&f2)
            .unwrap();
        let a = Element::free("a").unwrap();
        let t = compose_with_translation(&f2, &one.members()[0], &a).unwrap();
        assert_eq!(t.eval(&Element::free("A").unwrap()), 0.0);
        assert!(matches!(
            compose_with_translation(&f2, &one.members()[0], &Element::int(1)),
            Err(Error::CarrierMismatch(_))
        ));
    }

    #[test]
    fn lipschitz_check_catches_misdeclared_families() {
        let g = z();
        let steep = FamilyDescriptor::parse("wordlen-clamp:c=2")
            .unwrap()
            .build_group(&g)
            .unwrap();
        let lying = GroupFamily::new(g, 1.0, 0.1).with_member(steep.members()[0].clone());
        let samples: Vec<Element> = (-3..=3).map(Element::int).collect();
        assert!(matches!(lying.verify(&samples), Err(Error::LipschitzViolation { .. })));
    }

    #[test]
    fn descriptors() {
        let d = FamilyDescriptor::parse("wordlen-clamp:c=4,windows=10+signed-ramp:c=4,windows=10").unwrap();
        let fam = d.build_l0(&z()).unwrap();
        assert_eq!(fam.len(), 20);
        assert_eq!(d.to_string(), "wordlen-clamp:c=4,windows=10+signed-ramp:c=4,windows=10");
        assert!(FamilyDescriptor::parse("nope").is_err());
        assert!(FamilyDescriptor::parse("disagreement:c=2").is_err());
        assert!(FamilyDescriptor::parse("signed-ramp")
            .unwrap()
            .build_group(&WordGroup::cyclic(5).unwrap())
            .is_err());
        let w = windows(10);
        assert_eq!(w.len(), 10);
        assert_eq!(w[0], (0.0, 1.0));
        assert_eq!(w[9], (0.5, 1.0));
    }

    #[test]
    fn l0_members_respect_disagreement_lipschitz() {
        let g = z();
        let fam = FamilyDescriptor::parse("wordlen-clamp:c=3,windows=4+signed-ramp:c=2,windows=3+disagreement")
            .unwrap()
            .build_l0(&g)
            .unwrap();
        let maps: Vec<PiecewiseMap> = [
            "0.3: 1|-2",
            "0.3,0.6: 1|4|0",
            "0.1,0.5,0.9: -3|0|2|2",
            "5",
            "0.25,0.5,0.75: 0|0|1|1",
        ]
        .iter()
        .map(|s| PiecewiseMap::parse(&g, s).unwrap())
        .collect();
        fam.verify(&maps).unwrap();
    }
}
