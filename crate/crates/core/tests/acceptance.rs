//! Acceptance run: one PASS/FAIL line per criterion. Exits nonzero if any fails.
//! Simulation criteria run the shipped configs in `configs/` at full size.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use serde_json::{json, Value};
use sidiff::diagnostics::{kl_to_gibbs, uniform_edges};
use sidiff::experiments::{execute, Criterion, ExperimentConfig, VerdictFile};
use sidiff::gibbs::{gibbs_sample, laplace_approx, pi0, GibbsMeasure};
use sidiff::landscape::{generator_spectrum_1d, maximal_height_at, search_half_width};
use sidiff::potential::Basins;
use sidiff::{Potential, Result, RngStream};

struct Outcome {
    passed: bool,
    summary: String,
}

type Check = fn() -> Result<Outcome>;

fn outcome(passed: bool, summary: impl Into<String>) -> Outcome {
    Outcome { passed, summary: summary.into() }
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> Value {
    let text = fs::read_to_string(configs().join(format!("{name}.json"))).expect("shipped config");
    serde_json::from_str(&text).expect("config is JSON")
}

fn parse(v: &Value) -> ExperimentConfig {
    ExperimentConfig::from_json(&v.to_string()).unwrap_or_else(|e| panic!("config errors: {e:?}"))
}

fn run(name: &str) -> Result<VerdictFile> {
    Ok(execute(&parse(&load(name)))?.verdict)
}

fn criterion<'a>(v: &'a VerdictFile, id: &str) -> &'a Criterion {
    v.criterion(id).unwrap_or_else(|| panic!("{} reports no `{id}`", v.experiment))
}

fn num(c: &Criterion, key: &str) -> f64 {
    c.number(key).unwrap_or(f64::NAN)
}

fn gibbs_self_consistency() -> Result<Outcome> {
    let start = Instant::now();
    let p = Potential::double_well();
    let m = GibbsMeasure::new(&p, 0.2, f64::INFINITY)?;
    let xs = gibbs_sample(&m, &mut RngStream::new(1, 0), 100_000)?;
    let l = search_half_width(&p);
    let d = kl_to_gibbs(&xs, &m, &uniform_edges(-l, l, 100))?;
    let secs = start.elapsed().as_secs_f64();
    Ok(outcome(
        d.tv < 0.03 && d.kl < 0.01 && secs < 10.0,
        format!("TV = {:.4} (< 0.03), KL = {:.2e} (< 0.01), {secs:.2} s (< 10 s)", d.tv, d.kl),
    ))
}

fn basin_mass_deviation(p: &Potential, eps2: f64) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let basins = Basins::from_scan(&p.critical_points()?)?;
    let m = GibbsMeasure::new(p, eps2, f64::INFINITY)?;
    let mut cuts = vec![f64::NEG_INFINITY];
    cuts.extend(&basins.boundaries);
    cuts.push(f64::INFINITY);
    let masses: Vec<f64> = cuts.windows(2).map(|w| m.interval_mass(w[0], w[1])).collect();
    let weights = pi0(p)?.weights;
    let dev = masses.iter().zip(&weights).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok((masses, weights, dev))
}

fn limit_weights() -> Result<Outcome> {
    let start = Instant::now();
    let (dw, _, dw_dev) = basin_mass_deviation(&Potential::double_well(), 0.01)?;
    let (sp, w, sp_dev) = basin_mass_deviation(&Potential::spline_twowell(2.0, 8.0, 1.0)?, 0.01)?;
    let secs = start.elapsed().as_secs_f64();
    Ok(outcome(
        dw_dev <= 0.02 && sp_dev <= 0.02 && secs < 5.0,
        format!(
            "double_well [{:.4}, {:.4}] vs [0.5, 0.5]; spline_twowell [{:.4}, {:.4}] vs [{:.4}, {:.4}]; max deviation {:.4} (≤ 0.02), {secs:.2} s",
            dw[0], dw[1], sp[0], sp[1], w[0], w[1], dw_dev.max(sp_dev)
        ),
    ))
}

fn laplace_ratio() -> Result<Outcome> {
    let p = Potential::double_well();
    let mut ratios = Vec::new();
    for eps2 in [0.1, 0.05, 0.02, 0.01] {
        let l = laplace_approx(&p, eps2)?;
        let z = GibbsMeasure::new(&p, eps2, f64::INFINITY)?.log_partition();
        ratios.push((z + 2.0 * l.min_value / eps2).exp() / l.value);
    }
    let last = *ratios.last().unwrap();
    let monotone = ratios.windows(2).all(|w| (w[1] - 1.0).abs() <= (w[0] - 1.0).abs());
    Ok(outcome(
        (0.95..=1.05).contains(&last) && monotone,
        format!("ratios over ε² = 0.1, 0.05, 0.02, 0.01: {ratios:.5?}; final in [0.95, 1.05], monotone approach: {monotone}"),
    ))
}

fn annealed_convergence() -> Result<Outcome> {
    let v = run("anneal_double_well")?;
    let basins = criterion(&v, "basin_masses");
    let pinsker = criterion(&v, "pinsker");
    let masses = basins.measured.get("basin_masses").cloned().unwrap_or(Value::Null);
    let secs = v.wall_clock_seconds;
    Ok(outcome(
        basins.passed && pinsker.passed && secs < 300.0,
        format!(
            "basin masses {masses} vs [0.5, 0.5] ± 0.08; Pinsker at every checkpoint: {}; {secs:.0} s (< 300 s)",
            pinsker.passed
        ),
    ))
}

fn freezing() -> Result<Outcome> {
    let v = run("freeze_double_well")?;
    let c = criterion(&v, "frozen_mass");
    Ok(outcome(
        c.passed,
        format!(
            "mean final-window mass in the +1 basin {:.4} (≥ 0.9), paths with majority there {:.4}, {:.0} s",
            num(c, "mass"),
            num(c, "majority_fraction"),
            v.wall_clock_seconds
        ),
    ))
}

fn free_energy_decay() -> Result<Outcome> {
    let v = run("free_energy_double_well")?;
    let c = criterion(&v, "entropy_decrease");
    Ok(outcome(
        c.passed,
        format!(
            "{} of 5 checkpoint steps decrease (≥ 4); KL {}; {:.0} s",
            num(c, "decreases"),
            c.measured.get("kl").cloned().unwrap_or(Value::Null),
            v.wall_clock_seconds
        ),
    ))
}

fn constant_g_dichotomy() -> Result<Outcome> {
    let tilted = run("constant_g_tilted")?;
    let flat = run("constant_g_double_well")?;
    let (t_mean, f_mean) = (criterion(&tilted, "mean_dichotomy"), criterion(&flat, "mean_dichotomy"));
    let (t_gap, f_gap) = (criterion(&tilted, "coupled_gap"), criterion(&flat, "coupled_gap"));
    Ok(outcome(
        t_mean.passed && f_mean.passed && t_gap.passed && f_gap.passed,
        format!(
            "tilted μ̄_T/log T = {:.4} (in [0.9, 1.1]); double_well last-decade oscillation {:.4} of range (< 0.05); gap drop {:.1}× and {:.1}× (≥ 10×); {:.0} s",
            num(t_mean, "mu_over_log"),
            num(f_mean, "relative_oscillation"),
            num(t_gap, "ratio"),
            num(f_gap, "ratio"),
            tilted.wall_clock_seconds + flat.wall_clock_seconds
        ),
    ))
}

fn landscape() -> Result<Outcome> {
    let quad = maximal_height_at(&Potential::quadratic(1, 1.0)?, f64::INFINITY, 1e-3)?.m;
    let dw = maximal_height_at(&Potential::double_well(), f64::INFINITY, 1e-3)?.m;
    let v = run("landscape_double_well")?;
    let bound = criterion(&v, "height_bound");
    Ok(outcome(
        quad == 0.0 && (dw - 1.0).abs() <= 0.01 && bound.passed,
        format!(
            "quadratic m = {quad}; double_well m = {dw:.6} (1 ± 1%); |m(t) − 1|·a(t) = {} with C = {:.4}, spread {:.3} (≤ 2)",
            bound.measured.get("scaled_gap").cloned().unwrap_or(Value::Null),
            num(bound, "fitted_c"),
            num(bound, "spread")
        ),
    ))
}

fn spectrum() -> Result<Outcome> {
    let q = Potential::quadratic(1, 1.0)?;
    let eps2: f64 = 0.5;
    let ou = generator_spectrum_1d(&q, eps2, f64::INFINITY, 8.0 * eps2.sqrt() + 4.0, 1e-3)?.lambda2;
    let v = run("landscape_double_well")?;
    let mono = criterion(&v, "gap_exponent_monotone");
    let fin = criterion(&v, "gap_exponent_final");
    Ok(outcome(
        (ou - 1.0).abs() <= 0.01 && mono.passed && fin.passed,
        format!(
            "OU λ₂ = {ou:.5} (1 ± 1%); distances to 2m {} non-increasing: {}; final −ε² log λ₂ = {:.4}, relative error {:.4} (≤ 0.25)",
            mono.measured.get("distance").cloned().unwrap_or(Value::Null),
            mono.passed,
            num(fin, "final_value"),
            num(fin, "error")
        ),
    ))
}

fn emitted_csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

fn reproducibility() -> Result<Outcome> {
    // every experiment kind; the long simulations are shortened
    let shorten = |name: &str, patch: Value| {
        let mut v = load(name);
        for (k, x) in patch.as_object().unwrap() {
            v[k] = x.clone();
        }
        (name.to_string(), v)
    };
    let runs = [
        ("smoke_anneal".to_string(), load("smoke_anneal")),
        shorten("freeze_double_well", json!({"ensemble": 16, "horizon": 200.0, "dt": 0.01, "stride": 10})),
        shorten(
            "free_energy_double_well",
            json!({"ensemble": 512, "horizon": 100.0, "analysis": {"pool_fraction": 0.1}}),
        ),
        shorten("constant_g_tilted", json!({"ensemble": 16, "horizon": 200.0, "dt": 0.01, "stride": 10})),
        ("landscape_double_well".to_string(), load("landscape_double_well")),
    ];
    let root = tempfile::tempdir()?;
    let mut files = 0;
    let mut mismatched = Vec::new();
    for (name, v) in &runs {
        let cfg = parse(v);
        let (a, b) = (root.path().join(format!("{name}_a")), root.path().join(format!("{name}_b")));
        execute(&cfg)?.write(&a)?;
        execute(&cfg)?.write(&b)?;
        let (ca, cb) = (emitted_csvs(&a), emitted_csvs(&b));
        files += ca.len();
        if ca.is_empty() || ca != cb {
            mismatched.push(name.clone());
        }
    }
    Ok(outcome(
        mismatched.is_empty(),
        format!("{} configs rerun, {files} CSV files compared byte by byte, mismatches: {mismatched:?}", runs.len()),
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 10] = [
        ("Gibbs self-consistency", gibbs_self_consistency),
        ("limit measure weights", limit_weights),
        ("Laplace ratio", laplace_ratio),
        ("annealed convergence", annealed_convergence),
        ("freezing", freezing),
        ("free-energy decay", free_energy_decay),
        ("constant-g dichotomy", constant_g_dichotomy),
        ("landscape heights", landscape),
        ("spectral gap", spectrum),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check().unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        if !o.passed {
            failed += 1;
        }
        println!(
            "criterion {:>2} [{}] {name}: {} ({:.1} s)",
            i + 1,
            if o.passed { "PASS" } else { "FAIL" },
            o.summary,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
