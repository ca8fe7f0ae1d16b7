use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use tmgrowth::certificate::{build_certificate, DyadicCertificate};
use tmgrowth::extremal::{constant_sequence_ratio, radial_tm_sweep, solve_mu_d, ASYMPTOTIC_PADDING};
use tmgrowth::families::{self, Family};
use tmgrowth::groundstate::{self, Builtin, NonlinearityF};
use tmgrowth::radial::{GSpec, RadialProfile};
use tmgrowth::verify::{self, BridgeBranch};
use tmgrowth::witnesses::{self, Regime, Schedule};

use crate::config::*;
use crate::output::{write_atomic, write_json, Manifest, NamedCheck, RunOutput};

/// Errors that should exit with the usage code.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn pick<'a>(flag: &str, value: &'a Option<String>, default: &'a str, allowed: &[&str]) -> Result<&'a str> {
    let v = value.as_deref().unwrap_or(default);
    if allowed.contains(&v) {
        Ok(v)
    } else {
        Err(usage(format!("--{flag}: unknown value `{v}` (expected one of {})", allowed.join(", "))))
    }
}

fn positive(flag: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(usage(format!("--{flag} must be positive (got {v})")))
    }
}

fn out_path(dir: &Path, out: &Option<String>, default: &str) -> PathBuf {
    dir.join(out.as_deref().unwrap_or(default))
}

fn with_ext(p: &Path, ext: &str) -> PathBuf {
    p.with_extension(ext)
}

fn gspec(name: &str, k: f64, p: Option<f64>, alpha: Option<f64>) -> Result<GSpec<f64>> {
    let g = match name {
        "theorem_form" => GSpec::theorem_form(k),
        "exact_growth" => GSpec::exact_growth(k, p.unwrap_or(2.0)),
        "exp_minus_one" => GSpec::exp_minus_one(alpha.unwrap_or(1.0 / k)),
        "mass" => GSpec::power(1.0, 2.0),
        _ => unreachable!(),
    };
    g.map_err(|e| usage(e.to_string()))
}

pub fn witness(a: &WitnessArgs, dir: &Path) -> Result<RunOutput> {
    let family = pick("family", &a.family, "concentration", &["concentration", "blowup", "noncompact"])?;
    let regime = pick("regime", &a.regime, "compactness", &["compactness", "boundedness"])?;
    let gname = pick("g", &a.g, "theorem_form", &["theorem_form", "exact_growth", "exp_minus_one"])?;
    let sched = pick("schedule", &a.schedule, "geometric", &["geometric", "linear"])?;
    let k = positive("k", a.k.unwrap_or(1.0))?;
    let n = a.n.unwrap_or(8);
    let g = gspec(gname, k, a.p, a.alpha)?;
    let reports = match family {
        "concentration" => {
            let regime = if regime == "compactness" {
                Regime::CompactnessFail
            } else {
                Regime::BoundednessFail
            };
            let s = if sched == "geometric" {
                Schedule::geometric(k, n)
            } else {
                Schedule::linear(k, n)
            };
            witnesses::concentration_sequence_with(k, &g, regime, &s)?
        }
        "blowup" => witnesses::plateau_blowup_sequence(k, &g, n)?,
        _ => witnesses::plateau_noncompact_sequence(k, &g, n)?,
    };
    let csv_path = out_path(dir, &a.out, "witness.csv");
    let mut buf = Vec::new();
    witnesses::write_csv(&reports, &mut buf)?;
    write_atomic(&csv_path, &buf)?;
    let json_path = with_ext(&csv_path, "json");
    write_json(&json_path, &reports)?;
    let mut out = RunOutput {
        files: vec![csv_path, json_path],
        ..Default::default()
    };
    let budget = 2.0 * PI * k;
    for r in &reports {
        out.check(format!("energy_budget[{}]", r.k), r.energy <= budget * (1.0 + 1e-12));
    }
    Ok(out)
}

#[derive(Serialize)]
struct MuRow {
    n: usize,
    h: f64,
    big_n: usize,
    objective: f64,
    ratio: f64,
    constant_bound: f64,
    active_ball: bool,
    kkt_residual: f64,
}

pub fn mu(a: &MuArgs, dir: &Path) -> Result<RunOutput> {
    let ns = parse_int_list(a.h_sq.as_deref().unwrap_or("2..12")).map_err(usage)?;
    if ns.iter().any(|&n| n < 2) {
        return Err(usage("--h-sq values must be at least 2"));
    }
    let pad = a.padding.unwrap_or(ASYMPTOTIC_PADDING);
    let rows = ns
        .par_iter()
        .map(|&n| {
            let h = (n as f64).sqrt();
            let s = solve_mu_d(h, n + pad)?;
            Ok(MuRow {
                n,
                h,
                big_n: n + pad,
                objective: s.objective,
                ratio: s.objective * h * (-(n as f64)).exp(),
                constant_bound: constant_sequence_ratio(n),
                active_ball: s.active_ball,
                kkt_residual: s.kkt_residual,
            })
        })
        .collect::<tmgrowth::Result<Vec<_>>>()?;
    let path = out_path(dir, &a.out, "mu.csv");
    let mut w = csv_writer();
    w.write_record(["n", "h", "N", "objective", "ratio", "constant_bound", "active_ball", "kkt_residual"])?;
    let mut out = RunOutput::default();
    for r in &rows {
        w.write_record([
            r.n.to_string(),
            r.h.to_string(),
            r.big_n.to_string(),
            r.objective.to_string(),
            r.ratio.to_string(),
            r.constant_bound.to_string(),
            r.active_ball.to_string(),
            r.kkt_residual.to_string(),
        ])?;
        out.check(format!("kkt[{}]", r.n), r.kkt_residual <= 1e-9);
        out.check(format!("constant_bound[{}]", r.n), r.ratio <= r.constant_bound * (1.0 + 1e-12));
    }
    write_atomic(&path, &finish_csv(w)?)?;
    out.files.push(path);
    Ok(out)
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::Writer::from_writer(Vec::new())
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| anyhow!("csv: {e}"))
}

pub fn radtm(a: &RadtmArgs, dir: &Path) -> Result<RunOutput> {
    let k = positive("k", a.k.unwrap_or(1.0))?;
    let seed = a.seed.unwrap_or(1);
    let (lo, hi, step) = (a.h_min.unwrap_or(1.5), a.h_max.unwrap_or(6.0), a.h_step.unwrap_or(0.25));
    if !(lo > k.sqrt() && hi >= lo && step > 0.0) {
        return Err(usage("need sqrt(K) < h-min <= h-max and h-step > 0"));
    }
    let grid: Vec<f64> = (0..).map(|i| lo + step * i as f64).take_while(|h| *h <= hi + 1e-12).collect();
    let sweep = radial_tm_sweep(k, a.samples.unwrap_or(500), seed, &grid)?;
    let path = out_path(dir, &a.out, "radtm.json");
    write_json(&path, &sweep)?;
    let mut out = RunOutput {
        seed: Some(seed),
        ..Default::default()
    };
    out.check("max_ratio_finite", sweep.max_ratio.is_finite() && sweep.max_ratio > 0.0);
    out.files.push(path);
    Ok(out)
}

fn certify_profile(a: &CertifyArgs) -> Result<RadialProfile<f64>> {
    let kind = pick(
        "profile",
        &a.profile,
        "moser",
        &["moser", "log_cap", "random", "near_extremizer", "perturbed", "file"],
    )?;
    let seed = a.seed.unwrap_or(1);
    let index = a.index.unwrap_or(0);
    let p = match kind {
        "moser" => witnesses::make_moser(positive("alpha", a.alpha.unwrap_or(4.0))?)?,
        "log_cap" => witnesses::make_log_cap(a.b.unwrap_or(3.0), 1.0)?,
        "random" => families::sample(Family::Random, seed, index, 1.0, (1.0, 6.0))?,
        "near_extremizer" => families::sample(Family::NearExtremizer, seed, index, 1.0, (1.0, 6.0))?,
        "perturbed" => families::sample(Family::Perturbed, seed, index, 1.0, (1.0, 6.0))?,
        _ => {
            let path = a.input.as_deref().ok_or_else(|| usage("--profile file needs --input"))?;
            let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
            serde_json::from_str(&text).map_err(|e| usage(format!("--input {path}: {e}")))?
        }
    };
    Ok(families::normalize_energy(&p, 1.0))
}

#[derive(Serialize)]
struct CertifyReport<'a> {
    profile: &'a RadialProfile<f64>,
    certificate: &'a DyadicCertificate<f64>,
}

pub fn certify(a: &CertifyArgs, dir: &Path) -> Result<RunOutput> {
    let kappa = a.kappa.unwrap_or(0.9);
    if !(kappa > 2.0 / 3.0 && kappa < 1.0) {
        return Err(usage(format!("--kappa must lie in (2/3, 1) (got {kappa})")));
    }
    let p = certify_profile(a)?;
    let cert = build_certificate(&p, kappa)?;
    let path = out_path(dir, &a.out, "certificate.json");
    write_json(
        &path,
        &CertifyReport {
            profile: &p,
            certificate: &cert,
        },
    )?;
    let mut out = RunOutput {
        seed: a.seed,
        ..Default::default()
    };
    for c in &cert.checks {
        out.checks.push(NamedCheck::new(&c.name, c.pass).with_detail(format!("{} <= {}", c.lhs, c.rhs)));
    }
    out.files.push(path);
    Ok(out)
}

pub fn ground(a: &GroundArgs, dir: &Path) -> Result<RunOutput> {
    let name = pick("f", &a.f, "cubic", &["cubic", "exp_subcritical", "exp_damped", "power"])?;
    let kappa0 = a.kappa0.unwrap_or(1.0);
    let b = match name {
        "cubic" => Builtin::Cubic,
        "exp_subcritical" => Builtin::ExpSubcritical { kappa0 },
        "exp_damped" => Builtin::ExpDamped { kappa0 },
        _ => Builtin::Power { q: a.q.unwrap_or(4.0) },
    };
    let f = NonlinearityF::from_builtin(b).map_err(|e| usage(e.to_string()))?;
    f.coercivity().map_err(|e| usage(e.to_string()))?;
    let grid = parse_float_list(a.c_grid.as_deref().unwrap_or("0.5,1,2")).map_err(usage)?;
    if grid.iter().any(|c| !(*c > 0.0)) || grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(usage("--c-grid must be positive and sorted"));
    }
    let rows = groundstate::critical_mass_scan(&f, &grid);
    let path = out_path(dir, &a.out, "ground.csv");
    let mut buf = Vec::new();
    groundstate::write_csv(&rows, &mut buf)?;
    write_atomic(&path, &buf)?;
    let json_path = with_ext(&path, "json");
    write_json(&json_path, &rows)?;
    let mut out = RunOutput {
        files: vec![path, json_path],
        ..Default::default()
    };
    for row in &rows {
        let c = row.c;
        match &row.result {
            Some(r) => {
                out.check(format!("nehari[c={c}]"), r.nehari_residual < 1e-5);
                out.check(format!("pohozaev[c={c}]"), r.pohozaev_residual < 1e-5);
                out.check(format!("ode_residual[c={c}]"), r.ode_residual < 1e-4);
                if row.status == "ok" {
                    out.check(format!("kappa_grad[c={c}]"), r.kappa_grad() <= 4.0 * PI + 1e-6);
                }
            }
            None if row.status == "no_sign_change" => {}
            None => out.checks.push(NamedCheck::new(format!("solve[c={c}]"), false).with_detail(&row.status)),
        }
    }
    Ok(out)
}

pub fn verify_cmd(a: &VerifyArgs, dir: &Path) -> Result<RunOutput> {
    let gname = pick("g", &a.g, "exact_growth", &["exact_growth", "exp_minus_one", "theorem_form", "mass"])?;
    let k = positive("k", a.k.unwrap_or(1.0))?;
    let seed = a.seed.unwrap_or(1);
    let g = gspec(gname, k, a.p, a.alpha)?;
    let report = verify::sup_ratio_search(&g, k, a.samples.unwrap_or(1000), seed)?;
    let path = out_path(dir, &a.out, "verify.json");
    write_json(&path, &report)?;
    let mut out = RunOutput {
        seed: Some(seed),
        files: vec![path],
        ..Default::default()
    };
    if let Some(csv_path) = &a.samples_csv {
        let p = dir.join(csv_path);
        let mut buf = Vec::new();
        verify::write_samples_csv(&report, &mut buf)?;
        write_atomic(&p, &buf)?;
        out.files.push(p);
    }
    out.check("sup_ratio_finite", report.sup_ratio.is_finite());
    let arg = families::normalize_energy(&report.argmax_profile, 1.0);
    match build_certificate(&arg, 0.9) {
        Ok(c) => out.check("argmax_certificate", c.all_pass()),
        Err(e) => out
            .checks
            .push(NamedCheck::new("argmax_certificate", false).with_detail(e.to_string())),
    }
    Ok(out)
}

#[derive(Serialize)]
struct BridgeRow {
    index: u64,
    report: verify::BridgeReport<f64>,
    moments: verify::MomentTable<f64>,
}

#[derive(Serialize)]
struct BridgeSummary {
    seed: u64,
    holder_count: usize,
    subcritical_count: usize,
    moment_bound: f64,
    rows: Vec<BridgeRow>,
}

pub fn bridge(a: &BridgeArgs, dir: &Path) -> Result<RunOutput> {
    let seed = a.seed.unwrap_or(1);
    let n_max = a.n_max.unwrap_or(20);
    if n_max == 0 || n_max > 20 {
        return Err(usage("--n-max must be in 1..=20"));
    }
    let p_grid = [1.0, 1.5, 2.0, 2.5, 3.0, 5.0, 7.5, 10.0, 20.0];
    let rows = (0..a.samples.unwrap_or(50) as u64)
        .into_par_iter()
        .map(|i| {
            let u = verify::bridge_sample::<f64>(seed, i)?;
            Ok(BridgeRow {
                index: i,
                report: verify::holder_bridge_check(&u)?,
                moments: verify::taylor_moment_check(&u, n_max, &p_grid)?,
            })
        })
        .collect::<tmgrowth::Result<Vec<_>>>()?;
    let mut out = RunOutput {
        seed: Some(seed),
        ..Default::default()
    };
    for r in &rows {
        for c in &r.report.checks {
            out.check(format!("{}[{}]", c.name, r.index), c.pass);
        }
        out.check(format!("lp_continuity[{}]", r.index), r.moments.continuity_gap < 1e-4);
    }
    let summary = BridgeSummary {
        seed,
        holder_count: rows.iter().filter(|r| r.report.branch == BridgeBranch::Holder).count(),
        subcritical_count: rows.iter().filter(|r| r.report.branch == BridgeBranch::Subcritical).count(),
        moment_bound: rows.iter().map(|r| r.moments.moment_bound).fold(0.0, f64::max),
        rows,
    };
    out.check("moment_bound_finite", summary.moment_bound.is_finite());
    let path = out_path(dir, &a.out, "bridge.json");
    write_json(&path, &summary)?;
    out.files.push(path);
    Ok(out)
}

#[derive(Serialize)]
struct ReportEntry {
    run: String,
    command: String,
    passed: bool,
    checks_total: usize,
    failed: Vec<String>,
}

/// Collect the manifests of `dir` and its immediate subdirectories.
pub fn report(a: &ReportArgs, dir: &Path) -> Result<RunOutput> {
    let root = PathBuf::from(a.dir.as_deref().unwrap_or("runs"));
    if !root.is_dir() {
        return Err(usage(format!("--dir {}: not a directory", root.display())));
    }
    let mut candidates = vec![root.join("manifest.json")];
    let mut subdirs: Vec<PathBuf> = fs::read_dir(&root)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    candidates.extend(subdirs.into_iter().map(|d| d.join("manifest.json")));
    let mut entries = Vec::new();
    for m in candidates.into_iter().filter(|p| p.is_file()) {
        let text = fs::read_to_string(&m)?;
        let man: Manifest = serde_json::from_str(&text).with_context(|| format!("parsing {}", m.display()))?;
        entries.push(ReportEntry {
            run: m.parent().unwrap().display().to_string(),
            command: man.command,
            passed: man.passed,
            checks_total: man.checks_total,
            failed: man.failed_checks.into_iter().map(|c| c.name).collect(),
        });
    }
    if entries.is_empty() {
        bail!("no manifests found under {}", root.display());
    }
    for e in &entries {
        println!(
            "{:<6} {:<8} {:>5} checks  {}",
            if e.passed { "PASS" } else { "FAIL" },
            e.command,
            e.checks_total,
            e.run
        );
    }
    let path = out_path(dir, &a.out, "report.json");
    write_json(&path, &entries)?;
    let mut out = RunOutput {
        files: vec![path],
        ..Default::default()
    };
    for e in &entries {
        out.check(format!("run[{}]", e.run), e.passed);
    }
    Ok(out)
}
