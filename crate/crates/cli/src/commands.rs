//! Subcommand implementations. Each returns the CSV table, the resolved
//! configuration and the checked bounds.

use std::fmt::Write;

use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::json;

use l0conc::amplify::{constant_map_family, run_schedule, RunOptions, Schedule, ScheduleSpec};
use l0conc::families::{clamped_wordlen_family, FamilyDescriptor, GroupFamily};
use l0conc::groups::{folner_measure, invariance_defect, translation_l1, FinSuppMeasure, WordGroup};
use l0conc::hamming::{
    lipschitz_profile, talagrand_bound, DeclaredFunction, DiscreteBase, HammingProduct, ProfileMode,
};
use l0conc::l0_step::PiecewiseMap;
use l0conc::mean_transfer::run_phi_suite;
use l0conc::mm_core::{FiniteMMSpace, EXACT_ENUMERATION_LIMIT};
use l0conc::{Error, Result, EXACT_PRODUCT_CAP, MASS_TOL, TOL};

use crate::{Common, Mode, Outcome};

fn config_of<T: Serialize>(args: &T) -> serde_json::Value {
    serde_json::to_value(args).expect("arguments serialize")
}

/// `a:b:step`, inclusive of `b` up to rounding; values rounded to `1e-12`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::Parse(format!("grid {s:?} must be start:end:step with step > 0"));
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let [a, b, step] = parts[..] else { return Err(bad()) };
    if step.is_nan() || step <= 0.0 || !a.is_finite() || !b.is_finite() || b < a {
        return Err(bad());
    }
    let count = ((b - a) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((a + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpaceKind {
    /// Two points at distance `--distance`, uniform measure.
    TwoPoint,
    /// `--base` to the power `--n` with the normalized Hamming distance.
    Hamming,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AlphaArgs {
    #[arg(long, value_enum, default_value_t = SpaceKind::TwoPoint)]
    pub space: SpaceKind,
    #[arg(long, default_value_t = 1.0)]
    pub distance: f64,
    /// `uniform<k>`, `bernoulli:p=<p>` or `weights:<w0>,<w1>,..`.
    #[arg(long, default_value = "uniform2")]
    pub base: String,
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value = "0:1:0.1")]
    pub eps_grid: String,
    #[command(flatten)]
    pub common: Common,
}

pub fn alpha(args: &AlphaArgs) -> Result<Outcome> {
    let grid = parse_grid(&args.eps_grid)?;
    let space = match args.space {
        SpaceKind::TwoPoint => FiniteMMSpace::two_point(args.distance)?,
        SpaceKind::Hamming => {
            HammingProduct::new(DiscreteBase::parse(&args.base)?, args.n)?.to_mm_space(EXACT_ENUMERATION_LIMIT)?
        }
    };
    let alphas = grid
        .iter()
        .map(|&e| space.concentration_alpha_exact(e))
        .collect::<Result<Vec<_>>>()?;
    let mut csv = String::from("eps,alpha\n");
    for (e, a) in grid.iter().zip(&alphas) {
        writeln!(csv, "{e},{a}").unwrap();
    }
    let mut checks = vec![(
        "non_increasing".to_string(),
        alphas.windows(2).all(|w| w[1] <= w[0] + MASS_TOL),
    )];
    if let Some(i) = grid.iter().position(|e| *e == 0.0) {
        checks.push(("alpha_zero_is_half".into(), alphas[i] == 0.5));
    }
    if args.space == SpaceKind::Hamming {
        let ok = grid
            .iter()
            .zip(&alphas)
            .all(|(e, a)| *e == 0.0 || *a <= talagrand_bound(*e, args.n) + MASS_TOL);
        checks.push(("below_talagrand".into(), ok));
    }
    Ok(Outcome {
        csv,
        config: config_of(args),
        checks,
        details: json!({ "points": space.len() }),
    })
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProfileArgs {
    #[arg(long, default_value = "uniform2")]
    pub base: String,
    /// Product sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "50")]
    pub n: Vec<usize>,
    /// Deviation radii, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.3")]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[command(flatten)]
    pub common: Common,
}

pub fn profile(args: &ProfileArgs) -> Result<Outcome> {
    let base = DiscreteBase::parse(&args.base)?;
    let f = DeclaredFunction::coordinate_mean(&base);
    let mut csv = String::from("eps,n,estimate,stderr,bound\n");
    let mut within = true;
    let mut rows = Vec::new();
    for &n in &args.n {
        let product = HammingProduct::new(base.clone(), n)?;
        let exact = match args.common.mode {
            Mode::Exact => true,
            Mode::Sampled => false,
            Mode::Auto => product.point_count() <= EXACT_PRODUCT_CAP,
        };
        for &eps in &args.eps {
            let mode = if exact {
                ProfileMode::Exact
            } else {
                ProfileMode::Sampled {
                    count: args.samples,
                    seed: args.common.seed,
                }
            };
            let p = lipschitz_profile(&product, &f, eps, mode)?;
            let bound = talagrand_bound(eps / f.lipschitz, n);
            within &= p.estimate <= bound + 4.0 * p.stderr + MASS_TOL;
            writeln!(csv, "{eps},{n},{},{},{bound}", p.estimate, p.stderr).unwrap();
            rows.push(json!({ "eps": eps, "n": n, "exact": exact, "median": p.median }));
        }
    }
    Ok(Outcome {
        csv,
        config: config_of(args),
        checks: vec![("estimate_within_talagrand".into(), within)],
        details: json!({ "rows": rows }),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sweep {
    /// Uniform measures on the boxes `[-k,k]^d` (lattices only).
    Folner,
    /// Uniform measures on word-metric balls of radius `k`.
    Ball,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DefectArgs {
    /// `Z`, `Z^d`, `Z_m` or `F2`.
    #[arg(long, default_value = "Z")]
    pub group: String,
    /// Defaults to `folner` on lattices and `ball` otherwise.
    #[arg(long, value_enum)]
    pub sweep: Option<Sweep>,
    #[arg(long, default_value_t = 1)]
    pub k_min: u64,
    #[arg(long, default_value_t = 10)]
    pub k_max: u64,
    /// Family descriptor over the group; defaults to
    /// `wordlen-clamp:c=3+signed-ramp:c=2+disagreement` for box sweeps and
    /// to the clamped word-length family of radius `k` for ball sweeps.
    #[arg(long)]
    pub family: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

const DEFAULT_BOX_FAMILY: &str = "wordlen-clamp:c=3+signed-ramp:c=2+disagreement";
/// Lower bound on the ball defect in `F2` for the clamped word-length family.
const FREE_CONTRAST: f64 = 0.2;

pub fn defect(args: &DefectArgs) -> Result<Outcome> {
    let group = WordGroup::parse(&args.group)?;
    if args.k_max < args.k_min {
        return Err(Error::Parse(format!("k range {}..{} is empty", args.k_min, args.k_max)));
    }
    let lattice = matches!(group, WordGroup::Lattice { .. });
    let sweep = args.sweep.unwrap_or(if lattice { Sweep::Folner } else { Sweep::Ball });
    let fixed = match (&args.family, sweep) {
        (Some(d), _) => Some(FamilyDescriptor::parse(d)?.build_group(&group)?),
        (None, Sweep::Folner) => Some(FamilyDescriptor::parse(DEFAULT_BOX_FAMILY)?.build_group(&group)?),
        (None, Sweep::Ball) => None,
    };
    let mut csv = String::from("k,defect,bound\n");
    let (mut within, mut rate, mut contrast) = (true, true, true);
    for k in args.k_min..=args.k_max {
        let mu = match sweep {
            Sweep::Folner => folner_measure(&group, k)?,
            Sweep::Ball => FinSuppMeasure::ball_uniform(group.clone(), k)?,
        };
        let family: GroupFamily = match &fixed {
            Some(f) => f.clone(),
            None => clamped_wordlen_family(&group, k),
        };
        let (mut worst, mut l1) = (0.0f64, 0.0f64);
        for s in group.generators() {
            worst = worst.max(invariance_defect(&mu, &s, &family)?);
            l1 = l1.max(translation_l1(&mu, &s)?);
        }
        let bound = family.bound() * l1;
        within &= worst <= bound + TOL;
        rate &= worst <= 2.0 * family.bound() / (2 * k + 1) as f64 + TOL;
        contrast &= worst >= FREE_CONTRAST;
        writeln!(csv, "{k},{worst},{bound}").unwrap();
    }
    let mut checks = vec![("defect_within_bound".to_string(), within)];
    if sweep == Sweep::Folner {
        checks.push(("folner_rate".into(), rate));
    }
    if group == WordGroup::Free2 && sweep == Sweep::Ball && args.family.is_none() {
        checks.push(("free_contrast".into(), contrast));
    }
    let family = match &args.family {
        Some(d) => d.clone(),
        None if sweep == Sweep::Folner => DEFAULT_BOX_FAMILY.to_string(),
        None => "clamped-wordlen(k)".to_string(),
    };
    Ok(Outcome {
        csv,
        config: config_of(args),
        checks,
        details: json!({ "sweep": sweep, "family": family }),
    })
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AmplifyArgs {
    #[arg(long, default_value = "Z")]
    pub group: String,
    /// `k=<expr>,n=<expr>,i=a..b` with expressions of degree at most 2 in `i`.
    #[arg(long, default_value = "k=4i^2,n=i,i=1..8")]
    pub schedule: String,
    /// Target map, e.g. `0.35: 1|0` or `0.35,0.7: 1|-1|2`.
    #[arg(long, default_value = "0.35: 1|0")]
    pub g: String,
    /// Family descriptor; members are windowed integrals over `[0,1)`.
    #[arg(long, default_value = "disagreement")]
    pub family: String,
    #[arg(long, default_value_t = 0.2)]
    pub eps: f64,
    /// Samples per entry when an entry is not computed exactly.
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    #[command(flatten)]
    pub common: Common,
}

pub fn amplify(args: &AmplifyArgs) -> Result<Outcome> {
    let group = WordGroup::parse(&args.group)?;
    let spec = ScheduleSpec::parse(&args.schedule)?;
    let g = PiecewiseMap::parse(&group, &args.g)?;
    let family = FamilyDescriptor::parse(&args.family)?.build_l0(&group)?;
    let schedule = Schedule::new(spec.entries(&group)?, args.eps, &constant_map_family(&family)?)?;
    if args.common.mode == Mode::Exact {
        for e in schedule.entries() {
            let points = (e.mu.len() as u128).checked_pow(e.n as u32).unwrap_or(u128::MAX);
            if points > EXACT_PRODUCT_CAP {
                return Err(Error::TooLargeForExact {
                    points,
                    limit: EXACT_PRODUCT_CAP,
                });
            }
        }
    }
    let exact_cap = if args.common.mode == Mode::Sampled {
        0
    } else {
        EXACT_PRODUCT_CAP
    };
    let opts = RunOptions {
        samples: args.samples,
        seed: args.common.seed,
        exact_cap,
    };
    let rows = run_schedule(&schedule, &g, &family, args.eps, opts)?;
    let mut csv = String::from("i,n,defect,bound,conc_mass,median_gap\n");
    for r in &rows {
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.i, r.n, r.defect, r.bound, r.conc_mass, r.median_gap
        )
        .unwrap();
    }
    let checks = vec![
        (
            "defect_within_bound".to_string(),
            rows.iter().all(|r| r.defect <= r.bound + TOL),
        ),
        (
            "mean_mass_below_median_mass".to_string(),
            rows.iter().all(|r| r.median_mass_dominates(args.eps)),
        ),
        (
            "concentration_within_talagrand".to_string(),
            rows.iter().all(|r| r.concentration_within_talagrand()),
        ),
    ];
    Ok(Outcome {
        csv,
        config: config_of(args),
        checks,
        details: json!({ "family_size": family.len(), "rows": rows }),
    })
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PhiCheckArgs {
    /// Groups, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "Z,Z_12")]
    pub group: Vec<String>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[command(flatten)]
    pub common: Common,
}

pub fn phi_check(args: &PhiCheckArgs) -> Result<Outcome> {
    let mut csv = String::from("case,residual\n");
    let mut checks = Vec::new();
    for name in &args.group {
        let group = WordGroup::parse(name)?;
        let rows = run_phi_suite(&group, args.trials, args.common.seed)?;
        for r in &rows {
            writeln!(csv, "{group}/{},{}", r.case, r.residual).unwrap();
        }
        checks.push((format!("{group}_identities"), rows.iter().all(|r| r.residual <= 1e-12)));
    }
    Ok(Outcome {
        csv,
        config: config_of(args),
        checks,
        details: json!({}),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = parse_grid("0:1:0.1").unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[3], 0.3);
        assert_eq!(g[10], 1.0);
        assert_eq!(parse_grid("0.5:0.5:1").unwrap(), vec![0.5]);
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0:1").is_err());
    }
}
