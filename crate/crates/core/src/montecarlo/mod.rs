//! Seeded Monte Carlo estimation of the additive gap.
//!
//! Trial `i` of a plan draws from `RandomnessSource::from_seed(derive_seed(master_seed, i))`,
//! so trials are independent of execution order. Winner degrees are integers
//! and are accumulated as exact integer sums, which makes every report
//! bit-identical across thread counts.

mod sweep;

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{self, format_rational};
use crate::mechanisms::{MechanismSpec, Scratch};
use crate::profile::NominationProfile;
use crate::rng::{derive_seed, RandomnessSource};

pub use sweep::{
    fit_comment_lines, fits_by_mechanism, parse_sweep_config, rows_to_csv, rows_to_json, sweep, DeltaParam, GeneratorTemplate, KParam, SweepConfig,
    SweepRow, CSV_HEADER,
};

const CHUNK: u64 = 2048;

#[derive(Debug, Clone, PartialEq)]
pub struct TrialPlan {
    pub spec: MechanismSpec,
    pub trials: u64,
    pub master_seed: u64,
}

impl TrialPlan {
    pub fn new(spec: MechanismSpec, trials: u64, master_seed: u64) -> Self {
        Self { spec, trials, master_seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub n: usize,
    pub k: usize,
    pub delta: usize,
    pub mean_degree: f64,
    pub gap: f64,
    pub std_err: f64,
    pub ci95_half_width: f64,
    pub no_winner_rate: f64,
    pub trials: u64,
    pub master_seed: u64,
    pub exact: bool,
    /// Exact expected degree as `num/den` when the report is exact.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_degree_exact: Option<String>,
}

#[derive(Default, Clone, Copy)]
struct Tally {
    sum: u64,
    sum_sq: u128,
    none: u64,
}

impl Tally {
    fn merge(self, o: Self) -> Self {
        Self { sum: self.sum + o.sum, sum_sq: self.sum_sq + o.sum_sq, none: self.none + o.none }
    }
}

/// Runs `plan.trials` seeded executions of `spec` on `profile`.
///
/// Deterministic mechanisms are evaluated once and reported as exact.
pub fn estimate(spec: &MechanismSpec, profile: &NominationProfile, plan: &TrialPlan) -> Result<GapReport> {
    spec.validate(profile.n(), profile.model())?;
    if plan.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let n = profile.n();
    let delta = profile.delta();
    if spec.is_deterministic() {
        let dist = exact::exact_distribution(spec, profile)?;
        let mut report = exact_report_from(spec, profile, &dist);
        report.trials = plan.trials;
        report.master_seed = plan.master_seed;
        return Ok(report);
    }

    let plurality = matches!(spec, MechanismSpec::SimpleKSample { .. });
    let k = spec.resolve_k(n);
    if plurality && k > n - 1 {
        return Err(Error::InvalidArgument(format!("k = {k} outside [1, {}]", n - 1)));
    }
    let in_deg = profile.in_degrees();
    let chunks = plan.trials.div_ceil(CHUNK);
    let tally = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut scratch = Scratch::new(n);
            let mut draws = vec![0usize; k];
            let mut t = Tally::default();
            for i in c * CHUNK..((c + 1) * CHUNK).min(plan.trials) {
                let mut rng = RandomnessSource::from_seed(derive_seed(plan.master_seed, i));
                for d in draws.iter_mut() {
                    *d = rng.draw(n);
                }
                let w = if plurality {
                    scratch.plurality_rule(profile, &draws)
                } else {
                    scratch.sample_rule(profile, &draws)
                };
                match w {
                    Some(w) => {
                        let d = in_deg[w] as u64;
                        t.sum += d;
                        t.sum_sq += (d * d) as u128;
                    }
                    None => t.none += 1,
                }
            }
            t
        })
        .reduce(Tally::default, Tally::merge);

    let trials = plan.trials;
    let mean = tally.sum as f64 / trials as f64;
    let std_err = if trials > 1 {
        let t = trials as u128;
        let s = tally.sum as u128;
        let numerator = t * tally.sum_sq - s * s;
        let variance = numerator as f64 / (t * (t - 1)) as f64;
        (variance / trials as f64).sqrt()
    } else {
        0.0
    };
    Ok(GapReport {
        n,
        k: spec.report_k(n),
        delta,
        mean_degree: mean,
        gap: delta as f64 - mean,
        std_err,
        ci95_half_width: 1.96 * std_err,
        no_winner_rate: tally.none as f64 / trials as f64,
        trials,
        master_seed: plan.master_seed,
        exact: false,
        mean_degree_exact: None,
    })
}

/// Report computed from the exact distribution; `trials` and `master_seed`
/// are zero.
pub fn exact_report(spec: &MechanismSpec, profile: &NominationProfile, cap: u128) -> Result<GapReport> {
    let dist = exact::exact_distribution_with_cap(spec, profile, cap)?;
    Ok(exact_report_from(spec, profile, &dist))
}

fn exact_report_from(spec: &MechanismSpec, profile: &NominationProfile, dist: &exact::WinnerDistribution) -> GapReport {
    let n = profile.n();
    let delta = profile.delta();
    let mean = exact::expected_winner_degree(dist, profile);
    let mean_f = mean.to_f64().unwrap_or(f64::NAN);
    GapReport {
        n,
        k: spec.report_k(n),
        delta,
        mean_degree: mean_f,
        gap: exact::additive_gap(dist, profile).to_f64().unwrap_or(f64::NAN),
        std_err: 0.0,
        ci95_half_width: 0.0,
        no_winner_rate: dist.p_none().to_f64().unwrap_or(f64::NAN),
        trials: 0,
        master_seed: 0,
        exact: true,
        mean_degree_exact: Some(format_rational(&mean)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Least squares fit of `ln gap` against `ln n`. Rows with `gap <= 0` are
/// skipped.
pub fn fit_scaling(rows: &[GapReport]) -> Result<ScalingFit> {
    let pts: Vec<(f64, f64)> =
        rows.iter().filter(|r| r.gap > 0.0).map(|r| ((r.n as f64).ln(), r.gap.ln())).collect();
    if pts.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "scaling fit needs at least 3 rows with positive gap, got {}",
            pts.len()
        )));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("scaling fit needs at least two distinct n".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(ScalingFit { slope, intercept, r2, points: pts.len() })
}
