//! Acceptance suite. Prints one `[PASS]`/`[FAIL]` line per criterion and
//! exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use impsel::exact::{
    self, exact_distribution_by_sequences, exact_distribution_with_cap, for_each_random_k_trace, nominated_probability,
    pr_top_in_nominated, rks_gap_bound, sks_gap_bound, sks_sample_size, Rational, DEFAULT_ENUMERATION_CAP,
};
use impsel::generators::{
    bound_stress_delta, gen_fixed_sample_adversary, gen_random_multi, gen_random_single, gen_single_worst,
    gen_sqrt_adversary, gen_star,
};
use impsel::montecarlo::{estimate, fit_scaling, parse_sweep_config, rows_to_csv, sweep, TrialPlan};
use impsel::verify::{
    builtin_oracle, catalog, check_impartial, falsify_characterization, measure_additive_gap_exhaustive,
    refute_two_additive, ExactMechanism, MechanismOracle, ProfileSpace, WitnessKind, DEFAULT_PROFILE_BUDGET,
};
use impsel::{MechanismSpec, Model, NominationProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, elapsed: Duration) -> Result<(), String> {
    ensure(elapsed <= limit, || format!("took {:.1}s, limit {}s", elapsed.as_secs_f64(), limit.as_secs()))
}

fn e(err: impsel::Error) -> String {
    err.to_string()
}

fn single_spaces(ns: impl IntoIterator<Item = usize>) -> Result<Vec<ProfileSpace>, String> {
    ns.into_iter().map(|n| ProfileSpace::with_default_budget(n, Model::Single).map_err(e)).collect()
}

fn unique_top(p: &NominationProfile) -> bool {
    p.max_degree().1.len() == 1
}

fn closed_form() -> Outcome {
    let start = Instant::now();
    let mut checked = 0usize;
    for space in single_spaces(2..=6)? {
        let n = space.n();
        for i in 0..space.len() {
            let p = space.profile(i);
            if !unique_top(&p) {
                continue;
            }
            for k in 1..=3 {
                let got = nominated_probability(&p, k, p.top_vertex(), DEFAULT_ENUMERATION_CAP).map_err(e)?;
                let want = pr_top_in_nominated(n, k, p.delta()).map_err(e)?;
                ensure(got == want, || format!("n={n} k={k} profile {p:?}: enumerated {got}, closed form {want}"))?;
                checked += 1;
            }
        }
    }
    within(Duration::from_secs(60), start.elapsed())?;
    Ok(format!("{checked} (profile, k) pairs"))
}

fn conditional_winner_quality() -> Outcome {
    let mut traces = 0u64;
    for space in single_spaces(2..=6)? {
        for i in 0..space.len() {
            let p = space.profile(i);
            if !unique_top(&p) {
                continue;
            }
            let (top, delta) = (p.top_vertex(), p.delta());
            for k in 1..=3 {
                let mut violation = None;
                for_each_random_k_trace(&p, k, DEFAULT_ENUMERATION_CAP, |draws, nominated, winner| {
                    if !nominated.contains(&top) {
                        return;
                    }
                    traces += 1;
                    let d = winner.map_or(0, |w| p.in_degrees()[w] as usize);
                    if d + k < delta && violation.is_none() {
                        violation = Some(format!("profile {p:?} draws {draws:?}: winner degree {d}, Δ={delta}, k={k}"));
                    }
                })
                .map_err(e)?;
                if let Some(v) = violation {
                    return Err(v);
                }
            }
        }
    }
    Ok(format!("{traces} traces with u* nominated, 0 violations"))
}

fn impartiality() -> Outcome {
    let start = Instant::now();
    let mut spaces = 0;
    for n in 3..=5 {
        let space = ProfileSpace::with_default_budget(n, Model::Single).map_err(e)?;
        for k in 1..=3 {
            let w = check_impartial(&ExactMechanism::new(MechanismSpec::random_k(k)), &space).map_err(e)?;
            ensure(w.is_empty(), || format!("random-k:{k} at n={n}: {}", w[0]))?;
            spaces += 1;
        }
    }
    for n in 3..=4 {
        let space = ProfileSpace::with_default_budget(n, Model::Multi).map_err(e)?;
        for k in 1..=2 {
            let w = check_impartial(&ExactMechanism::new(MechanismSpec::simple_k(k)), &space).map_err(e)?;
            ensure(w.is_empty(), || format!("simple-k:{k} at n={n}: {}", w[0]))?;
            spaces += 1;
        }
    }
    let plurality = builtin_oracle("plurality").map_err(e)?;
    let space = ProfileSpace::with_default_budget(3, Model::Single).map_err(e)?;
    let w = check_impartial(&plurality, &space).map_err(e)?;
    ensure(!w.is_empty(), || "plurality produced no witness".into())?;
    within(Duration::from_secs(300), start.elapsed())?;
    Ok(format!("{spaces} mechanism/space pairs impartial, plurality: {} witnesses", w.len()))
}

fn sqrt_scaling() -> Outcome {
    let start = Instant::now();
    let ns: Vec<usize> = (6..=12).map(|e| 1usize << e).collect();
    let cfg = parse_sweep_config(&format!(
        r#"{{"mechanisms": ["random-k:auto"], "generator": "single-worst", "n_values": {ns:?}, "trials": 100000, "master_seed": 20240601}}"#
    ))
    .map_err(e)?;
    let rows = sweep(&cfg).map_err(e)?;
    ensure(rows.len() == ns.len(), || format!("{} rows", rows.len()))?;
    for row in &rows {
        let r = &row.report;
        let k = "random-k:auto".parse::<MechanismSpec>().unwrap().resolve_k(r.n);
        ensure(r.k == k && r.delta == bound_stress_delta(r.n, k), || format!("unexpected instance at n={}", r.n))?;
        ensure(r.trials >= 100_000, || format!("n={}: {} trials", r.n, r.trials))?;
        let limit = rks_gap_bound(r.n, k) + 5.0 * r.std_err;
        ensure(r.gap <= limit, || format!("n={}: gap {} > {}", r.n, r.gap, limit))?;
    }
    let reports: Vec<_> = rows.iter().map(|r| r.report.clone()).collect();
    let fit = fit_scaling(&reports).map_err(e)?;
    let gaps: Vec<String> = rows.iter().map(|r| format!("{}:{:.2}", r.report.n, r.report.gap)).collect();
    let gaps = gaps.join(" ");
    ensure((0.35..=0.65).contains(&fit.slope), || format!("slope {:.4} outside [0.35, 0.65], gaps {gaps}", fit.slope))?;
    within(Duration::from_secs(600), start.elapsed())?;
    Ok(format!("slope {:.4}, r2 {:.4}, gaps {gaps}", fit.slope, fit.r2))
}

fn simple_k_bound() -> Outcome {
    let mut instances = 0;
    let mut worst_margin = f64::INFINITY;
    for n in (7..=12).map(|e| 1usize << e) {
        let k = sks_sample_size(n);
        let spec = "simple-k:auto".parse::<MechanismSpec>().unwrap();
        ensure(spec.resolve_k(n) == k, || format!("n={n}: auto size {} != {k}", spec.resolve_k(n)))?;
        let profiles = [
            ("single-worst", gen_single_worst(n, bound_stress_delta(n, k.min(n - 1))).map_err(e)?),
            ("sqrt-adversary", gen_sqrt_adversary(n).map_err(e)?),
            ("star", gen_star(n, 0).map_err(e)?),
            ("random-single", gen_random_single(n, 11).map_err(e)?),
            ("random-multi", gen_random_multi(n, 0.05, 12).map_err(e)?),
        ];
        for (i, (name, p)) in profiles.iter().enumerate() {
            let r = estimate(&spec, p, &TrialPlan::new(spec.clone(), 2000, 7000 + i as u64)).map_err(e)?;
            let limit = sks_gap_bound(n, k) + 5.0 * r.std_err;
            ensure(r.gap <= limit, || format!("{name} n={n}: gap {} > {limit}", r.gap))?;
            worst_margin = worst_margin.min(limit - r.gap);
            instances += 1;
        }
    }
    Ok(format!("{instances} instances within bound, smallest margin {worst_margin:.2}"))
}

fn fixed_sample_lower_bound() -> Outcome {
    let m = ExactMechanism::new(MechanismSpec::fixed([0]));
    let mut alphas = Vec::new();
    for space in single_spaces(3..=6)? {
        let n = space.n();
        let g = measure_additive_gap_exhaustive(&m, &space).map_err(e)?;
        let want = Rational::from_integer((n as i64 - 2).into());
        ensure(g.alpha == want, || format!("n={n}: α = {}", g.alpha))?;
        let adv = gen_fixed_sample_adversary(n, 0).map_err(e)?;
        let gap = exact::additive_gap(&m.distribution(&adv).map_err(e)?, &adv);
        ensure(gap == want, || format!("n={n}: adversary gap {gap}"))?;
        alphas.push(format!("n={n}:{}", g.alpha));
    }
    Ok(format!("α {}", alphas.join(" ")))
}

fn characterization_falsifier() -> Outcome {
    let fns = catalog();
    let rows = falsify_characterization(&fns, &[3, 4], DEFAULT_PROFILE_BUDGET).map_err(e)?;
    let mut failing = Vec::new();
    for g in &fns {
        let mine: Vec<_> = rows.iter().filter(|r| r.name == g.name()).collect();
        ensure(mine.len() == 2, || format!("{}: {} rows", g.name(), mine.len()))?;
        if mine.iter().all(|r| r.strong && r.impartial) {
            ensure(mine.iter().all(|r| r.constant), || format!("{} passes both checks but is not constant", g.name()))?;
        } else {
            failing.push(g.name().to_string());
        }
    }
    ensure(failing.len() >= 2, || format!("only {} catalog members fail a check", failing.len()))?;
    Ok(format!("{} functions, failing: {}", fns.len(), failing.join(", ")))
}

fn refutation_driver() -> Outcome {
    let mut notes = Vec::new();
    for name in ["dictator:0", "plurality", "majority-default:0"] {
        let oracle = builtin_oracle(name).map_err(e)?;
        let start = Instant::now();
        let w = refute_two_additive(&oracle).map_err(e)?;
        let elapsed = start.elapsed();
        ensure(w.profile_a.n() == 4, || format!("{name}: witness on n = {}", w.profile_a.n()))?;
        ensure(w.validate(&oracle).map_err(e)?, || format!("{name}: witness does not validate"))?;
        within(Duration::from_secs(1), elapsed).map_err(|m| format!("{name}: {m}"))?;
        if name.starts_with("dictator") {
            ensure(w.kind == WitnessKind::AdditivityViolation, || format!("dictator: {}", w.kind.name()))?;
            ensure(w.gap == Some(Rational::from_integer(3.into())), || format!("dictator gap {:?}", w.gap))?;
        }
        notes.push(format!("{name}: {} ({:.1}ms)", w.kind.name(), elapsed.as_secs_f64() * 1e3));
    }
    Ok(notes.join(", "))
}

fn enumeration_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut checked = 0;
    for case in 0..200 {
        let n = rng.gen_range(2..=6);
        let k = rng.gen_range(1..=4);
        let seed = rng.gen();
        let (p, specs) = if case % 2 == 0 {
            (gen_random_single(n, seed).map_err(e)?, vec![MechanismSpec::random_k(k), MechanismSpec::simple_k(k)])
        } else {
            (gen_random_multi(n, rng.gen_range(0.1..0.9), seed).map_err(e)?, vec![MechanismSpec::simple_k(k)])
        };
        for spec in specs {
            let by_seq = exact_distribution_by_sequences(&spec, &p, DEFAULT_ENUMERATION_CAP).map_err(e)?;
            let by_set = exact_distribution_with_cap(&spec, &p, DEFAULT_ENUMERATION_CAP).map_err(e)?;
            ensure(by_seq == by_set, || format!("{spec} on {p:?}: routes disagree"))?;
            checked += 1;
        }
    }
    Ok(format!("200 profiles, {checked} distributions identical"))
}

fn reproducibility() -> Outcome {
    let cfg = parse_sweep_config(
        r#"{"mechanisms": ["random-k:auto", "simple-k:3", "fixed:0", "majority-default:0"],
            "generator": "random-single", "n_values": [16, 64, 256], "trials": 20000,
            "master_seed": 424242, "instances": 2}"#,
    )
    .map_err(e)?;
    let run = |threads: usize| -> Result<String, String> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|x| x.to_string())?;
        pool.install(|| sweep(&cfg)).map(|rows| rows_to_csv(&rows)).map_err(e)
    };
    let one = run(1)?;
    let eight = run(8)?;
    ensure(one == eight, || "1-thread and 8-thread CSV differ".into())?;
    ensure(run(8)? == eight, || "re-run at 8 threads differs".into())?;
    Ok(format!("{} rows, {} bytes identical", one.lines().count() - 1, one.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("closed-form Pr[u* in W]", closed_form),
        ("conditional winner quality", conditional_winner_quality),
        ("exact impartiality", impartiality),
        ("sqrt(n) scaling of random k-sample", sqrt_scaling),
        ("simple k-sample bound", simple_k_bound),
        ("fixed-sample lower bound n-2", fixed_sample_lower_bound),
        ("characterization falsifier", characterization_falsifier),
        ("refutation driver", refutation_driver),
        ("enumeration route equivalence", enumeration_equivalence),
        ("sweep reproducibility across worker counts", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {:>2} {name}: {detail} ({secs:.1}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {:>2} {name}: {why} ({secs:.1}s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
