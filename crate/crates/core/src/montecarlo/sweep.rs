//! Multi-instance sweeps driven by a JSON config.

use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{Map, Value};

use super::{estimate, exact_report, fit_scaling, GapReport, ScalingFit, TrialPlan};
use crate::error::{Error, Result};
use crate::exact::enumeration_size;
use crate::generators::{bound_stress_delta, Family, GeneratorSpec};
use crate::mechanisms::{ceil_sqrt, MechanismSpec};
use crate::profile::NominationProfile;
use crate::rng::derive_seed;

pub const CSV_HEADER: &str =
    "mechanism,n,k,generator,instance_seed,delta,mean_degree,gap,std_err,ci95,no_winner_rate,trials,master_seed,exact";

const INSTANCE_STREAM: u64 = 0x696e_7374_616e_6365;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaParam {
    Fixed(usize),
    /// The bound-stress degree for `k = ⌈√n⌉`.
    Stress,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KParam {
    Fixed(usize),
    Sqrt,
}

/// A generator family with parameters that may depend on `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorTemplate {
    pub family: Family,
    pub delta: DeltaParam,
    pub v: usize,
    pub k: KParam,
    pub p: f64,
    pub center: usize,
}

impl GeneratorTemplate {
    pub fn new(family: Family) -> Self {
        Self { family, delta: DeltaParam::Stress, v: 0, k: KParam::Sqrt, p: 0.1, center: 0 }
    }

    pub fn resolve(&self, n: usize, seed: u64) -> GeneratorSpec {
        let k = |param: KParam| match param {
            KParam::Fixed(k) => k,
            KParam::Sqrt => ceil_sqrt(n),
        };
        match self.family {
            Family::SingleWorst => {
                let delta = match self.delta {
                    DeltaParam::Fixed(d) => d,
                    DeltaParam::Stress if n >= 2 => bound_stress_delta(n, ceil_sqrt(n)),
                    DeltaParam::Stress => 1,
                };
                GeneratorSpec::SingleWorst { n, delta }
            }
            Family::FixedSampleAdversary => GeneratorSpec::FixedSampleAdversary { n, v: self.v },
            Family::SqrtAdversary => GeneratorSpec::SqrtAdversary { n },
            Family::BoundStress => GeneratorSpec::BoundStress { n, k: k(self.k) },
            Family::RandomSingle => GeneratorSpec::RandomSingle { n, seed },
            Family::RandomMulti => GeneratorSpec::RandomMulti { n, p: self.p, seed },
            Family::Star => GeneratorSpec::Star { n, center: self.center },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub mechanisms: Vec<MechanismSpec>,
    pub generator: GeneratorTemplate,
    pub n_values: Vec<usize>,
    pub trials: u64,
    pub master_seed: u64,
    /// Instances per (n, mechanism); only seeded families differ between them.
    pub instances: usize,
    /// When set, rows whose enumeration fits this many draw sequences are
    /// computed exactly instead of sampled.
    pub exact_budget: Option<u128>,
    pub format: Option<String>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub mechanism: String,
    pub generator: String,
    pub instance_seed: u64,
    #[serde(flatten)]
    pub report: GapReport,
}

fn schema(pointer: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config { pointer: pointer.into(), message: message.into() }
}

fn as_count(v: &Value, pointer: &str) -> Result<u64> {
    if let Some(x) = v.as_u64() {
        return Ok(x);
    }
    match v.as_f64() {
        Some(x) if x >= 0.0 && x.fract() == 0.0 && x < 1.8e19 => Ok(x as u64),
        _ => Err(schema(pointer, format!("expected a non-negative integer, found {v}"))),
    }
}

fn lookup<'a>(obj: &'a Map<String, Value>, names: &[&str]) -> Result<Option<(&'a Value, String)>> {
    let mut found = None;
    for name in names {
        if let Some(v) = obj.get(*name) {
            if found.is_some() {
                return Err(schema(format!("/{name}"), format!("duplicate of `{}`", names[0])));
            }
            found = Some((v, format!("/{name}")));
        }
    }
    Ok(found)
}

fn parse_generator(v: &Value, pointer: &str) -> Result<GeneratorTemplate> {
    let obj = match v {
        Value::String(s) => {
            let family = s.parse::<Family>().map_err(|e| schema(pointer, e.to_string()))?;
            return Ok(GeneratorTemplate::new(family));
        }
        Value::Object(obj) => obj,
        _ => return Err(schema(pointer, "expected a family name or an object")),
    };
    let fam_val = obj.get("family").ok_or_else(|| schema(pointer, "missing `family`"))?;
    let family = fam_val
        .as_str()
        .ok_or_else(|| schema(format!("{pointer}/family"), "expected a string"))?
        .parse::<Family>()
        .map_err(|e| schema(format!("{pointer}/family"), e.to_string()))?;
    let mut t = GeneratorTemplate::new(family);
    for (key, val) in obj {
        let at = format!("{pointer}/{key}");
        match key.as_str() {
            "family" => {}
            "delta" => {
                t.delta = if val.as_str() == Some("stress") {
                    DeltaParam::Stress
                } else {
                    DeltaParam::Fixed(as_count(val, &at)? as usize)
                }
            }
            "k" => {
                t.k = if val.as_str() == Some("sqrt") { KParam::Sqrt } else { KParam::Fixed(as_count(val, &at)? as usize) }
            }
            "v" => t.v = as_count(val, &at)? as usize,
            "center" => t.center = as_count(val, &at)? as usize,
            "p" => t.p = val.as_f64().ok_or_else(|| schema(&at, "expected a number"))?,
            _ => return Err(schema(at, "unknown generator parameter")),
        }
    }
    Ok(t)
}

/// Parses and validates a sweep config. Every mechanism is checked against
/// every `n` and against the generator's model, so a bad config fails before
/// any trial runs.
pub fn parse_sweep_config(text: &str) -> Result<SweepConfig> {
    let root: Value = serde_json::from_str(text).map_err(|e| schema("", format!("invalid JSON: {e}")))?;
    let obj = root.as_object().ok_or_else(|| schema("", "expected a JSON object"))?;
    const KNOWN: [&str; 13] = [
        "mechanisms",
        "mech",
        "generator",
        "gen",
        "n_values",
        "n",
        "trials",
        "master_seed",
        "seed",
        "instances",
        "exact_budget",
        "format",
        "output",
    ];
    if let Some(key) = obj.keys().find(|k| !KNOWN.contains(&k.as_str())) {
        return Err(schema(format!("/{key}"), "unknown field"));
    }

    let (mech_val, mech_ptr) =
        lookup(obj, &["mechanisms", "mech"])?.ok_or_else(|| schema("/mechanisms", "missing field"))?;
    let mech_items: Vec<(&Value, String)> = match mech_val {
        Value::Array(a) => a.iter().enumerate().map(|(i, v)| (v, format!("{mech_ptr}/{i}"))).collect(),
        v => vec![(v, mech_ptr.clone())],
    };
    let mut mechanisms = Vec::new();
    for (v, at) in &mech_items {
        let s = v.as_str().ok_or_else(|| schema(at, "expected a mechanism string"))?;
        mechanisms.push(s.parse::<MechanismSpec>().map_err(|e| schema(at, e.to_string()))?);
    }
    if mechanisms.is_empty() {
        return Err(schema(mech_ptr, "at least one mechanism is required"));
    }

    let (gen_val, gen_ptr) =
        lookup(obj, &["generator", "gen"])?.ok_or_else(|| schema("/generator", "missing field"))?;
    let generator = parse_generator(gen_val, &gen_ptr)?;

    let (n_val, n_ptr) = lookup(obj, &["n_values", "n"])?.ok_or_else(|| schema("/n_values", "missing field"))?;
    let n_arr = n_val.as_array().ok_or_else(|| schema(&n_ptr, "expected an array of integers"))?;
    let n_values = n_arr
        .iter()
        .enumerate()
        .map(|(i, v)| as_count(v, &format!("{n_ptr}/{i}")).map(|x| x as usize))
        .collect::<Result<Vec<_>>>()?;

    let trials = match lookup(obj, &["trials"])? {
        Some((v, at)) => {
            let t = as_count(v, &at)?;
            if t == 0 {
                return Err(schema(at, "trials must be at least 1"));
            }
            t
        }
        None => return Err(schema("/trials", "missing field")),
    };
    let master_seed = match lookup(obj, &["master_seed", "seed"])? {
        Some((v, at)) => v.as_u64().ok_or_else(|| schema(at, "expected a 64-bit unsigned integer"))?,
        None => return Err(schema("/master_seed", "missing field")),
    };
    let instances = match lookup(obj, &["instances"])? {
        Some((v, at)) => match as_count(v, &at)? {
            0 => return Err(schema(at, "instances must be at least 1")),
            i => i as usize,
        },
        None => 1,
    };
    let exact_budget = match lookup(obj, &["exact_budget"])? {
        Some((Value::Null, _)) | None => None,
        Some((v, at)) => Some(as_count(v, &at)? as u128),
    };
    let format = match lookup(obj, &["format"])? {
        Some((v, at)) => {
            let f = v.as_str().ok_or_else(|| schema(&at, "expected a string"))?;
            if f != "csv" && f != "json" {
                return Err(schema(at, format!("unsupported format `{f}`")));
            }
            Some(f.to_string())
        }
        None => None,
    };
    let output = match lookup(obj, &["output"])? {
        Some((v, at)) => Some(PathBuf::from(v.as_str().ok_or_else(|| schema(at, "expected a path string"))?)),
        None => None,
    };

    let config = SweepConfig {
        mechanisms,
        generator,
        n_values,
        trials,
        master_seed,
        instances,
        exact_budget,
        format,
        output,
    };
    let model = config.generator.family.model();
    for (i, spec) in config.mechanisms.iter().enumerate() {
        if let Some(required) = spec.required_model() {
            if required != model {
                let at = mech_items[i].1.clone();
                return Err(schema(
                    at,
                    format!("`{spec}` needs the {required} model but `{}` generates {model}", config.generator.family),
                ));
            }
        }
    }
    for (j, &n) in config.n_values.iter().enumerate() {
        let at = format!("{n_ptr}/{j}");
        let gen = config.generator.resolve(n, 0);
        // A seeded family's parameters do not depend on the seed.
        gen.generate().map_err(|e| schema(&at, e.to_string()))?;
        for spec in &config.mechanisms {
            spec.validate(n, model).map_err(|e| schema(&at, format!("`{spec}`: {e}")))?;
        }
    }
    Ok(config)
}

fn instance_seed(master: u64, n: usize, instance: usize) -> u64 {
    derive_seed(derive_seed(master ^ INSTANCE_STREAM, n as u64), instance as u64)
}

/// Runs every (n, mechanism, instance) row in that nesting order. Row `r`
/// uses trial plan seed `derive_seed(master_seed, r)`; instances depend only
/// on `(master_seed, n, instance)` and are shared across mechanisms.
pub fn sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    struct Job<'a> {
        spec: &'a MechanismSpec,
        profile: usize,
        seed: u64,
    }
    let mut profiles: Vec<(NominationProfile, GeneratorSpec, u64)> = Vec::new();
    let mut jobs = Vec::new();
    for &n in &config.n_values {
        let first = profiles.len();
        for i in 0..config.instances {
            let seed = if config.generator.family.is_seeded() { instance_seed(config.master_seed, n, i) } else { 0 };
            let gen = config.generator.resolve(n, seed);
            profiles.push((gen.generate()?, gen, seed));
        }
        for spec in &config.mechanisms {
            for i in 0..config.instances {
                let row = jobs.len() as u64;
                jobs.push(Job { spec, profile: first + i, seed: derive_seed(config.master_seed, row) });
            }
        }
    }
    jobs.par_iter()
        .map(|job| {
            let (profile, _, inst_seed) = &profiles[job.profile];
            let n = profile.n();
            let exact = match config.exact_budget {
                Some(cap) if !job.spec.is_deterministic() => enumeration_size(n, job.spec.resolve_k(n)) <= cap,
                _ => false,
            };
            let report = if exact {
                let mut r = exact_report(job.spec, profile, config.exact_budget.unwrap())?;
                r.master_seed = job.seed;
                r
            } else {
                estimate(job.spec, profile, &TrialPlan::new(job.spec.clone(), config.trials, job.seed))?
            };
            Ok(SweepRow {
                mechanism: job.spec.to_string(),
                generator: config.generator.family.to_string(),
                instance_seed: *inst_seed,
                report,
            })
        })
        .collect()
}

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let g = &r.report;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.mechanism,
            g.n,
            g.k,
            r.generator,
            r.instance_seed,
            g.delta,
            g.mean_degree,
            g.gap,
            g.std_err,
            g.ci95_half_width,
            g.no_winner_rate,
            g.trials,
            g.master_seed,
            g.exact
        )
        .unwrap();
    }
    out
}

/// Fits per mechanism, in first-appearance order. Mechanisms with too few
/// usable rows are omitted.
pub fn fits_by_mechanism(rows: &[SweepRow]) -> Vec<(String, ScalingFit)> {
    let mut names: Vec<&str> = Vec::new();
    for r in rows {
        if !names.contains(&r.mechanism.as_str()) {
            names.push(&r.mechanism);
        }
    }
    names
        .into_iter()
        .filter_map(|m| {
            let reports: Vec<GapReport> =
                rows.iter().filter(|r| r.mechanism == m).map(|r| r.report.clone()).collect();
            fit_scaling(&reports).ok().map(|f| (m.to_string(), f))
        })
        .collect()
}

pub fn fit_comment_lines(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    for (m, f) in fits_by_mechanism(rows) {
        writeln!(out, "# fit mechanism={m} slope={} intercept={} r2={} points={}", f.slope, f.intercept, f.r2, f.points)
            .unwrap();
    }
    out
}

pub fn rows_to_json(rows: &[SweepRow], with_fit: bool) -> String {
    let mut doc = serde_json::json!({ "rows": rows });
    if with_fit {
        let fits: Vec<Value> = fits_by_mechanism(rows)
            .into_iter()
            .map(|(m, f)| serde_json::json!({ "mechanism": m, "slope": f.slope, "intercept": f.intercept, "r2": f.r2, "points": f.points }))
            .collect();
        doc["fits"] = Value::Array(fits);
    }
    let mut s = serde_json::to_string_pretty(&doc).unwrap();
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rks_gap_bound;

    fn pointer_of(e: Error) -> String {
        match e {
            Error::Config { pointer, .. } => pointer,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn small_sweep_within_bound() {
        let cfg = parse_sweep_config(
            r#"{"n": [16, 64], "mech": "random-k:auto", "gen": "single-worst", "trials": 10000, "seed": 7}"#,
        )
        .unwrap();
        let rows = sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        for r in &rows {
            let g = &r.report;
            assert!(g.gap <= rks_gap_bound(g.n, g.k) + 5.0 * g.std_err, "{g:?}");
        }
        assert_eq!(rows[0].report.n, 16);
        assert_eq!(rows[0].report.k, 4);
    }

    #[test]
    fn empty_n_list_gives_empty_table() {
        let cfg =
            parse_sweep_config(r#"{"n_values": [], "mechanisms": ["random-k:2"], "generator": "random-single", "trials": 5, "master_seed": 1}"#)
                .unwrap();
        let rows = sweep(&cfg).unwrap();
        assert!(rows.is_empty());
        assert_eq!(rows_to_csv(&rows), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn model_mismatch_fails_validation() {
        let e = parse_sweep_config(
            r#"{"n": [8], "mechanisms": ["simple-k:2", "random-k:2"], "generator": "star", "trials": 5, "seed": 1}"#,
        )
        .unwrap_err();
        assert_eq!(pointer_of(e), "/mechanisms/1");
    }

    #[test]
    fn schema_errors_carry_pointers() {
        let base = r#""mech": "random-k:2", "gen": "random-single", "trials": 5, "seed": 1"#;
        let cases = [
            (format!(r#"{{"n": [8, "x"], {base}}}"#), "/n/1"),
            (format!(r#"{{"n": [8], {base}, "colour": 1}}"#), "/colour"),
            (format!(r#"{{"n": [8, 1], {base}}}"#), "/n/1"),
            (r#"{"n": [8], "mech": "random-k:2", "gen": "random-single", "trials": 0, "seed": 1}"#.into(), "/trials"),
            (r#"{"n": [8], "mech": "bogus", "gen": "random-single", "trials": 1, "seed": 1}"#.into(), "/mech"),
            (
                r#"{"n": [8], "mech": "random-k:2", "gen": {"family": "single-worst", "delta": 9}, "trials": 1, "seed": 1}"#
                    .into(),
                "/n/0",
            ),
            (
                r#"{"n": [8], "mech": "random-k:2", "gen": {"family": "bound-stress", "q": 1}, "trials": 1, "seed": 1}"#
                    .into(),
                "/gen/q",
            ),
            (r#"{"n": [8], "mech": "random-k:2", "gen": "random-single", "trials": 1}"#.into(), "/master_seed"),
        ];
        for (text, expected) in cases {
            assert_eq!(pointer_of(parse_sweep_config(&text).unwrap_err()), expected, "{text}");
        }
    }

    #[test]
    fn instances_are_shared_across_mechanisms() {
        let cfg = parse_sweep_config(
            r#"{"n": [10], "mechanisms": ["random-k:1", "random-k:2"], "generator": "random-single", "trials": 50, "seed": 3, "instances": 2}"#,
        )
        .unwrap();
        let rows = sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].instance_seed, rows[2].instance_seed);
        assert_eq!(rows[1].instance_seed, rows[3].instance_seed);
        assert_ne!(rows[0].instance_seed, rows[1].instance_seed);
        let seeds: std::collections::HashSet<_> = rows.iter().map(|r| r.report.master_seed).collect();
        assert_eq!(seeds.len(), 4);
    }

    #[test]
    fn exact_budget_switches_to_enumeration() {
        let cfg = parse_sweep_config(
            r#"{"n": [5], "mechanisms": ["random-k:2"], "generator": "single-worst", "trials": 10, "seed": 3, "exact_budget": 1000}"#,
        )
        .unwrap();
        let rows = sweep(&cfg).unwrap();
        assert!(rows[0].report.exact);
        assert!(rows[0].report.mean_degree_exact.is_some());
    }

    #[test]
    fn csv_and_json_shapes() {
        let cfg = parse_sweep_config(
            r#"{"n": [8, 16, 32], "mech": "fixed:0", "gen": {"family": "fixed-sample-adversary", "v": 0}, "trials": 3, "seed": 2}"#,
        )
        .unwrap();
        let rows = sweep(&cfg).unwrap();
        let csv = rows_to_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], format!("fixed:0,8,1,fixed-sample-adversary,0,7,1,6,0,0,0,3,{},true", rows[0].report.master_seed));
        let fit = fit_comment_lines(&rows);
        assert!(fit.starts_with("# fit mechanism=fixed:0 slope="));
        let json: Value = serde_json::from_str(&rows_to_json(&rows, true)).unwrap();
        assert_eq!(json["rows"].as_array().unwrap().len(), 3);
        assert_eq!(json["rows"][0]["gap"], 6.0);
        assert!(json["fits"][0]["slope"].as_f64().unwrap() > 0.9);
    }
}
