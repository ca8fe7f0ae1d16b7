use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use tmgrowth::certificate::{build_certificate, empirical_red_sum_constant};
use tmgrowth::extremal::{constant_sequence_ratio, mu_d_asymptotic_ratio, radial_tm_sweep, solve_mu_d};
use tmgrowth::families::{self, Family};
use tmgrowth::groundstate::{critical_mass_scan, find_ground_state, Builtin, NonlinearityF};
use tmgrowth::radial::GSpec;
use tmgrowth::verify::{bridge_sample, holder_bridge_check, taylor_moment_check, BridgeBranch};
use tmgrowth::witnesses::{make_concentration_sequence, make_moser, Regime};

type Outcome = Result<String, String>;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn moser_norms() -> Outcome {
    let mut worst = 0.0f64;
    for alpha in [0.5f64, 1.0, 2.0, 5.0] {
        let p = make_moser(alpha).map_err(|e| e.to_string())?;
        let e2 = (-2.0 * alpha).exp();
        let mass = (1.0 - e2) / (4.0 * alpha) - 0.5 * e2;
        worst = worst.max(rel(p.dirichlet_energy(), 1.0));
        worst = worst.max(rel(p.mass().map_err(|e| e.to_string())?, mass));
    }
    ensure(worst <= 1e-10, format!("max relative error {worst:.2e}"))
}

fn brute_mu_d(h: f64, n: usize, d: f64) -> f64 {
    fn go(i: usize, n: usize, left: f64, sq: f64, e: f64, d: f64, best: &mut f64) {
        if i == n {
            let (sq, e) = (sq + left * left, e + (2.0 * n as f64).exp() * left * left);
            if sq <= 1.0 + 1e-12 && e < *best {
                *best = e;
            }
            return;
        }
        let w = (2.0 * i as f64).exp();
        let steps = (left / d + 1e-9).floor() as usize;
        for s in 0..=steps {
            let x = s as f64 * d;
            if sq + x * x <= 1.0 + 1e-12 && e + w * x * x < *best {
                go(i + 1, n, left - x, sq + x * x, e + w * x * x, d, best);
            }
        }
    }
    let mut best = f64::INFINITY;
    go(0, n, h, 0.0, 0.0, d, &mut best);
    best.sqrt()
}

fn discrete_law() -> Outcome {
    let ns: Vec<usize> = (2..=12).collect();
    let ratios = mu_d_asymptotic_ratio::<f64>(&ns).map_err(|e| e.to_string())?;
    let lo = ratios.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    let upper = ratios.iter().all(|&(n, r)| r <= constant_sequence_ratio::<f64>(n) * (1.0 + 1e-12));
    let mut oracle = 0.0f64;
    for (h, n) in [(1.2, 2), (1.5, 2), (1.1, 3), (1.6, 3)] {
        let s = solve_mu_d(h, n).map_err(|e| e.to_string())?;
        let d = if n == 2 { 1e-3 } else { 2e-3 };
        oracle = oracle.max((s.objective - brute_mu_d(h, n, d)).abs());
    }
    ensure(
        hi / lo <= 10.0 && upper && oracle <= 1e-3,
        format!("band [{lo:.4}, {hi:.4}] width {:.3}, flat bound {upper}, brute-force gap {oracle:.1e}", hi / lo),
    )
}

fn radial_uniformity() -> Outcome {
    let grid: Vec<f64> = (0..=18).map(|i| 1.5 + 0.25 * i as f64).collect();
    let a = radial_tm_sweep(1.0, 500, 1, &grid).map_err(|e| e.to_string())?;
    let b = radial_tm_sweep(1.0, 500, 2, &grid).map_err(|e| e.to_string())?;
    let (x, y) = (a.max_ratio, b.max_ratio);
    let spread = x.max(y) / x.min(y);
    ensure(
        x.is_finite() && y.is_finite() && x > 0.0 && spread <= 1.25,
        format!("max ratio {x:.4} vs {y:.4} (spread {spread:.3})"),
    )
}

fn certificate_chain() -> Outcome {
    let mut constants = Vec::new();
    let mut failures = 0;
    let mut worst = f64::INFINITY;
    for seed in [1u64, 2] {
        let family: Vec<_> = (0..100u64)
            .map(|i| families::sample::<f64>(Family::ALL[(i % 3) as usize], seed, i, 1.0, (1.0, 6.0)))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        for p in &family {
            let c = build_certificate(p, 0.9).map_err(|e| e.to_string())?;
            for ch in &c.checks {
                worst = worst.min(ch.slack() / ch.rhs.abs().max(f64::MIN_POSITIVE));
                if !ch.pass {
                    failures += 1;
                }
            }
        }
        constants.push(empirical_red_sum_constant(&family, 0.9).map_err(|e| e.to_string())?.value);
    }
    let spread = constants[0].max(constants[1]) / constants[0].min(constants[1]);
    ensure(
        failures == 0 && worst >= -1e-10 && constants.iter().all(|c| c.is_finite()) && spread <= 1.25,
        format!(
            "{failures} failed checks, min relative slack {worst:.3e}, constant {:.3} vs {:.3}",
            constants[0], constants[1]
        ),
    )
}

fn ratios(p: f64) -> Result<Vec<f64>, String> {
    let g = GSpec::exact_growth(1.0, p).map_err(|e| e.to_string())?;
    let w = make_concentration_sequence(1.0, &g, 9, Regime::CompactnessFail).map_err(|e| e.to_string())?;
    Ok(w[2..=8].iter().map(|r| r.ratio).collect())
}

fn sharpness() -> Outcome {
    let sub = ratios(1.5)?;
    let exact = ratios(2.0)?;
    let growth = sub[6] / sub[0];
    let band = exact.iter().cloned().fold(0.0, f64::max) / exact.iter().cloned().fold(f64::INFINITY, f64::min);
    ensure(
        growth >= 10.0 && band <= 3.0,
        format!("p=1.5 grows {growth:.1}x, p=2 band {band:.3}"),
    )
}

fn weak_null() -> Outcome {
    let g = GSpec::theorem_form(1.0).map_err(|e| e.to_string())?;
    let w = make_concentration_sequence(1.0, &g, 13, Regime::CompactnessFail).map_err(|e| e.to_string())?;
    let delta = w[4..].iter().map(|r| r.g_value).fold(f64::INFINITY, f64::min);
    let mut monotone = true;
    let mut last = [0.0; 3];
    for (i, r) in w[4..].iter().enumerate() {
        let p = r.params.profile().map_err(|e| e.to_string())?;
        let vals = [0.1, 1.0, 10.0].map(|x| p.value_at(x));
        if i > 0 && vals.iter().zip(&last).any(|(v, l)| v > l) {
            monotone = false;
        }
        last = vals;
    }
    let tail = last.iter().cloned().fold(0.0, f64::max);
    ensure(
        delta > 0.0 && monotone && tail < 1e-3,
        format!("G >= {delta:.3} for k >= 4, monotone {monotone}, max value at k=12 {tail:.2e}"),
    )
}

fn holder_bridge() -> Outcome {
    let p_grid = [1.0, 2.0, 5.0];
    let (mut holder, mut sub, mut failed) = (0, 0, 0);
    let mut bound = 0.0f64;
    for i in 0..50u64 {
        let u = bridge_sample::<f64>(1, i).map_err(|e| e.to_string())?;
        let r = holder_bridge_check(&u).map_err(|e| e.to_string())?;
        match r.branch {
            BridgeBranch::Holder => holder += 1,
            BridgeBranch::Subcritical => sub += 1,
        }
        if !r.all_pass() {
            failed += 1;
        }
        bound = bound.max(taylor_moment_check(&u, 20, &p_grid).map_err(|e| e.to_string())?.moment_bound);
    }
    ensure(
        failed == 0 && holder > 0 && sub > 0 && bound <= 2.0 * PI * (1.0 + 1e-9),
        format!("{failed} failing samples, branches {holder} holder / {sub} subcritical, moment constant {bound:.4}"),
    )
}

fn ground_states() -> Outcome {
    let cubic = NonlinearityF::from_builtin(Builtin::Cubic).map_err(|e| e.to_string())?;
    let base = find_ground_state(&cubic, 1.0).map_err(|e| e.to_string())?;
    let (mut identity, mut scaling) = (0.0f64, 0.0f64);
    for c in [0.5, 1.0, 2.0] {
        let r = find_ground_state(&cubic, c).map_err(|e| e.to_string())?;
        identity = identity.max(r.nehari_residual).max(r.pohozaev_residual);
        scaling = scaling
            .max(rel(r.q0, c.sqrt() * base.q0))
            .max(rel(r.grad_norm_sq, c * base.grad_norm_sq))
            .max(rel(r.mass_sq, base.mass_sq));
    }
    let exp = NonlinearityF::from_builtin(Builtin::ExpSubcritical { kappa0: 1.0 }).map_err(|e| e.to_string())?;
    let grid: Vec<f64> = (0..9).map(|i| 0.05 * 2f64.powi(i)).collect();
    let rows = critical_mass_scan(&exp, &grid);
    let solved: Vec<f64> = rows.iter().filter_map(|r| r.result.as_ref()).map(|r| r.kappa_grad()).collect();
    let top = solved.iter().cloned().fold(0.0, f64::max);
    ensure(
        identity < 1e-5 && scaling < 1e-4 && !solved.is_empty() && top <= 4.0 * PI + 1e-6,
        format!(
            "identity residual {identity:.1e}, scaling error {scaling:.1e}, {} solved, max kappa0 grad^2 {top:.4}",
            solved.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Option<u64>); 8] = [
        ("moser_norms", moser_norms, Some(1)),
        ("discrete_extremal_law", discrete_law, Some(10)),
        ("radial_uniformity", radial_uniformity, Some(30)),
        ("certificate_chain", certificate_chain, Some(60)),
        ("sharpness_blowup", sharpness, Some(10)),
        ("weak_null_noncompactness", weak_null, None),
        ("holder_bridge", holder_bridge, Some(20)),
        ("ground_state_identities", ground_states, Some(60)),
    ];
    let mut all = true;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let slow = limit.is_some_and(|s| took > Duration::from_secs(s));
        let (ok, detail) = match outcome {
            Ok(d) => (!slow, d),
            Err(d) => (false, d),
        };
        all &= ok;
        let budget = limit.map(|s| format!(" (limit {s} s)")).unwrap_or_default();
        println!(
            "{} {} {name}: {detail}; {:.2} s{budget}",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            took.as_secs_f64()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
