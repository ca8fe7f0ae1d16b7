//! Dyadic bookkeeping for the whole-plane bound on normalized profiles.
//!
//! With `K = 1` (so `integral |phi_r|^2 r dr = 1`), `R_0` cuts off a tail of
//! energy `2 pi kappa`; inside, annuli `R_j = R_0 e^{-j}` carry
//! `a_j^2 = integral_{R_j}^{R_{j-1}} |phi_r|^2 r dr` and indices run inward.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::check::Check;
use crate::error::{Error, Result};
use crate::quadrature::LogQuadrature;
use crate::radial::{GSpec, LeftExtension, RadialProfile, SplitHints};
use crate::real::Real;

/// Relative slack allowed on every named inequality.
pub const SLACK_TOL: f64 = 1e-10;
const NORMALIZATION_TOL: f64 = 1e-9;
const TAIL_SAMPLES: usize = 64;

/// A maximal run `start..=end` of consecutive indices in `B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct BRun<T> {
    pub start: usize,
    pub end: usize,
    /// `zeta_j = K_j (xi_start + j - start) - j` for `j` in the run.
    pub zeta: Vec<T>,
    /// `min_{start < j <= end} a_j^2 (xi_start + j - 1 - start)`; `None` for
    /// runs of length one.
    pub delta: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DyadicCertificate<T> {
    pub kappa: T,
    pub r0: T,
    /// Index of the last annulus; `phi` is constant inside `R_N`.
    pub n: usize,
    pub rj: Vec<T>,
    pub hj: Vec<T>,
    /// `a_0 = 0` by convention.
    pub aj: Vec<T>,
    /// Nondecreasing: `K_j = K_{j-1} + a_j^2`, `K_0 = kappa`.
    pub kj: Vec<T>,
    pub big_hj: Vec<T>,
    pub xij: Vec<T>,
    /// `ln eta_j = 2 xi_j - 2 j + 2 ln R_0`.
    pub log_etaj: Vec<T>,
    pub a_set: Vec<usize>,
    pub b_set: Vec<usize>,
    pub runs: Vec<BRun<T>>,
    /// `min` over runs of their `delta`.
    pub delta_obs: Option<T>,
    /// `integral_{R_0}^inf phi^2 r dr`.
    pub m0: T,
    /// `ln sum_{j <= N} e^{2 h_j^2} R_j^2 / h_j^2`.
    pub log_red_sum: T,
    pub checks: Vec<Check<T>>,
}

impl<T: Real> DyadicCertificate<T> {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// `sum / M_0` for the reduced sum.
    pub fn red_sum_ratio(&self) -> T {
        (self.log_red_sum - self.m0.ln()).exp()
    }

    /// Plain-text table of the named checks.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "kappa {}  R0 {:.6e}  N {}  |A| {}  |B| {}  runs {}  M0 {:.6e}  sum/M0 {:.6e}",
            self.kappa,
            self.r0.as_f64(),
            self.n,
            self.a_set.len(),
            self.b_set.len(),
            self.runs.len(),
            self.m0.as_f64(),
            self.red_sum_ratio().as_f64()
        );
        if let Some(d) = self.delta_obs {
            let _ = writeln!(s, "delta_obs {:.6e}", d.as_f64());
        }
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{:<4} {:<28} lhs {:>14.6e}  rhs {:>14.6e}  slack {:>14.6e}",
                if c.pass { "ok" } else { "FAIL" },
                c.name,
                c.lhs.as_f64(),
                c.rhs.as_f64(),
                c.slack().as_f64()
            );
        }
        s
    }
}

/// `R_0` with `||grad phi||^2_{r > R_0} = 2 pi kappa`; flat stretches resolve
/// to the largest such radius.
fn find_r0<T: Real>(p: &RadialProfile<T>, kappa: T) -> T {
    let target = T::two_pi() * kappa;
    let knots = p.knots();
    let (mut lo, mut hi) = (knots[0], knots[knots.len() - 1]);
    // energy(lo) >= target > energy(hi)
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if !(mid > lo && mid < hi) {
            break;
        }
        if p.energy_between(mid, T::infinity()) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo.exp()
}

/// Assemble the bookkeeping for a nonincreasing profile with
/// `||grad phi||^2 = 2 pi`.
pub fn build_certificate<T: Real>(p: &RadialProfile<T>, kappa: T) -> Result<DyadicCertificate<T>> {
    if !(kappa > T::lit(2.0 / 3.0) && kappa < T::one()) {
        return Err(Error::InvalidArgument(format!("kappa must lie in (2/3, 1), got {kappa}")));
    }
    let energy = p.dirichlet_energy();
    if ((energy - T::two_pi()) / T::two_pi()).abs() > T::lit(NORMALIZATION_TOL) {
        return Err(Error::NotNormalized {
            energy: energy.as_f64(),
            target: T::two_pi().as_f64(),
        });
    }
    if !p.is_nonincreasing() {
        return Err(Error::NotMonotone);
    }
    if p.left() != LeftExtension::Constant {
        return Err(Error::NoPlateau);
    }
    let two = T::lit(2.0);
    let r0 = find_r0(p, kappa);
    let t0 = r0.ln();
    let n = (t0 - p.knots()[0]).ceil().to_usize().unwrap_or(0).max(1);

    let mut rj = Vec::with_capacity(n + 1);
    let mut hj = Vec::with_capacity(n + 1);
    let mut aj = vec![T::zero()];
    let mut kj = vec![kappa];
    for j in 0..=n {
        let t = t0 - T::lit(j as f64);
        rj.push(t.exp());
        hj.push(p.value_at_log(t));
        if j > 0 {
            let a2 = p.energy_between(t, t + T::one()) / T::two_pi();
            aj.push(a2.sqrt());
            let prev = kj[j - 1];
            kj.push(prev + a2);
        }
    }
    let mut big_hj = vec![hj[0]];
    for j in 1..=n {
        let prev = big_hj[j - 1];
        big_hj.push(prev + aj[j]);
    }
    let xij: Vec<T> = big_hj.iter().zip(&kj).map(|(h, k)| *h * *h / *k).collect();
    let log_etaj: Vec<T> = xij
        .iter()
        .enumerate()
        .map(|(j, x)| two * *x - two * T::lit(j as f64) + two * t0)
        .collect();

    let mut a_set = Vec::new();
    let mut b_set = Vec::new();
    for j in 1..=n {
        if aj[j] * big_hj[j - 1] <= kj[j - 1] - kj[j] / T::lit(3.0) {
            a_set.push(j);
        } else {
            b_set.push(j);
        }
    }
    let mut runs: Vec<BRun<T>> = Vec::new();
    for &j in &b_set {
        match runs.last_mut() {
            Some(r) if r.end + 1 == j => r.end = j,
            _ => runs.push(BRun {
                start: j,
                end: j,
                zeta: Vec::new(),
                delta: None,
            }),
        }
    }
    for run in &mut runs {
        let (a, xa) = (run.start, xij[run.start]);
        run.zeta = (a..=run.end)
            .map(|j| kj[j] * (xa + T::lit((j - a) as f64)) - T::lit(j as f64))
            .collect();
        run.delta = (a + 1..=run.end)
            .map(|j| aj[j] * aj[j] * (xa + T::lit((j - 1 - a) as f64)))
            .reduce(T::min);
    }
    let delta_obs = runs.iter().filter_map(|r| r.delta).reduce(T::min);

    let m0 = p.mass_outside(r0)? / T::two_pi();
    let log_red_sum = (0..=n)
        .map(|j| two * hj[j] * hj[j] + two * rj[j].ln() - two * hj[j].abs().ln())
        .fold(T::neg_infinity(), T::log_add_exp);

    let mut cert = DyadicCertificate {
        kappa,
        r0,
        n,
        rj,
        hj,
        aj,
        kj,
        big_hj,
        xij,
        log_etaj,
        a_set,
        b_set,
        runs,
        delta_obs,
        m0,
        log_red_sum,
        checks: Vec::new(),
    };
    cert.checks = check_chain(&cert, p)?;
    Ok(cert)
}

/// Evaluate every named inequality of the chain.
pub fn check_chain<T: Real>(c: &DyadicCertificate<T>, p: &RadialProfile<T>) -> Result<Vec<Check<T>>> {
    let tol = T::lit(SLACK_TOL);
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let mut out = Vec::new();
    let worst = |name: &str, items: &mut dyn Iterator<Item = (T, T)>| -> Check<T> {
        // keep the pair with the smallest relative slack
        let mut best: Option<(T, T, T)> = None;
        for (l, r) in items {
            let rel = (r - l) / r.abs().max(T::min_positive_value());
            if best.map_or(true, |b| rel < b.2) {
                best = Some((l, r, rel));
            }
        }
        match best {
            Some((l, r, _)) => Check::le(name, l, r, tol),
            None => Check::le(name, T::zero(), T::zero(), tol),
        }
    };
    let js = 1..=c.n;
    let (h, a, k, bh, xi) = (&c.hj, &c.aj, &c.kj, &c.big_hj, &c.xij);

    out.push(Check::eq("k0_equals_kappa", p.energy_outside(c.r0) / T::two_pi(), c.kappa, T::lit(1e-9)));
    out.push(Check::le("energy_budget", k[c.n], T::one(), tol));
    out.push(worst(
        "schwarz_step",
        &mut js.clone().map(|j| (h[j] - h[j - 1], a[j])),
    ));
    out.push(worst(
        "young",
        &mut js.clone().map(|j| (h[j] * h[j], k[j] * h[j - 1] * h[j - 1] / k[j - 1] + k[j])),
    ));
    out.push(worst(
        "young_identity",
        &mut js.clone().flat_map(|j| {
            let lhs = (h[j - 1] + a[j]) * (h[j - 1] + a[j]);
            let d = a[j] * h[j - 1] - k[j - 1];
            let rhs = k[j] * h[j - 1] * h[j - 1] / k[j - 1] + k[j] - d * d / k[j - 1];
            let slop = T::lit(64.0) * T::epsilon() * (lhs.abs() + rhs.abs());
            [(lhs, rhs + slop), (rhs, lhs + slop)]
        }),
    ));
    out.push(worst(
        "h_over_k_step",
        &mut js.clone().map(|j| (h[j] * h[j] / k[j], h[j - 1] * h[j - 1] / k[j - 1] + T::one())),
    ));
    out.push(worst("h_le_H", &mut (0..=c.n).map(|j| (h[j], bh[j]))));
    out.push(worst("xi_step", &mut js.clone().map(|j| (xi[j], xi[j - 1] + T::one()))));
    out.push(worst(
        "xi_bound",
        &mut js.clone().map(|j| (xi[j], xi[0] + T::lit(j as f64))),
    ));
    out.push(worst(
        "eta_monotone",
        &mut js.clone().map(|j| (c.log_etaj[j].exp(), c.log_etaj[j - 1].exp())),
    ));
    out.push(worst(
        "xi_step_A",
        &mut c.a_set.iter().map(|&j| (xi[j], xi[j - 1] + T::lit(8.0 / 9.0))),
    ));
    out.push(worst(
        "B_lower",
        &mut c.b_set.iter().map(|&j| {
            let bound = (k[j - 1] / two).min(k[j - 1] / (T::lit(4.0) * xi[j - 1]));
            (bound, a[j] * a[j])
        }),
    ));
    out.push(worst(
        "B_not_in_A",
        &mut c.b_set.iter().map(|&j| (k[j - 1] - k[j] / three, a[j] * bh[j - 1])),
    ));

    let eta0 = c.log_etaj[0].exp();
    let mut a_geo = Vec::new();
    for (idx, &j) in c.a_set.iter().enumerate() {
        let kk = T::lit((idx + 1) as f64);
        a_geo.push((c.log_etaj[j].exp(), (-two * kk / T::lit(9.0)).exp() * eta0));
    }
    out.push(worst("A_geometric_term", &mut a_geo.iter().copied()));
    let sum_a: T = c.a_set.iter().map(|&j| c.log_etaj[j].exp()).sum();
    let geo_a: T = (1..=c.a_set.len())
        .map(|kk| (-two * T::lit(kk as f64) / T::lit(9.0)).exp() * eta0)
        .sum();
    out.push(Check::le("A_geometric", sum_a, geo_a, tol));

    let r0sq = c.r0 * c.r0;
    let mut zeta_id = Vec::new();
    let mut zeta_dom = Vec::new();
    let mut zeta_inc = Vec::new();
    let mut run_tail = Vec::new();
    let mut run_geo = Vec::new();
    let mut run_sum_total = T::zero();
    let mut run_bound_total = T::zero();
    for run in &c.runs {
        let (s, xa) = (run.start, xi[run.start]);
        for (i, j) in (s..=run.end).enumerate() {
            zeta_dom.push((bh[j] * bh[j] - T::lit(j as f64), run.zeta[i]));
            if i > 0 {
                let inc = run.zeta[i] - run.zeta[i - 1];
                let formula = a[j] * a[j] * (xa + T::lit((j - 1 - s) as f64)) + k[j] - T::one();
                let slop = T::lit(64.0) * T::epsilon() * (run.zeta[i].abs() + run.zeta[i - 1].abs() + T::one());
                zeta_id.push((inc, formula + slop));
                zeta_id.push((formula, inc + slop));
                if let Some(d) = run.delta {
                    zeta_inc.push((d + c.kappa - T::one(), formula));
                }
            }
        }
        let zb = *run.zeta.last().unwrap();
        let eta_before = c.log_etaj[s - 1].exp();
        run_tail.push(((two * zb).exp() * r0sq, c.log_etaj[s].exp()));
        run_tail.push((c.log_etaj[s].exp(), eta_before));
        let run_sum: T = (s..=run.end).map(|j| (two * bh[j] * bh[j]).exp() * c.rj[j] * c.rj[j]).sum();
        if let Some(d) = run.delta {
            let m = d + c.kappa - T::one();
            if m > T::zero() {
                let geo = (two * zb).exp() * r0sq / (T::one() - (-two * m).exp());
                run_geo.push((run_sum, geo));
                run_sum_total = run_sum_total + run_sum;
                run_bound_total = run_bound_total + geo;
            }
        } else {
            run_geo.push((run_sum, (two * zb).exp() * r0sq));
            run_sum_total = run_sum_total + run_sum;
            run_bound_total = run_bound_total + (two * zb).exp() * r0sq;
        }
    }
    out.push(worst("zeta_identity", &mut zeta_id.into_iter()));
    out.push(worst("zeta_dominates", &mut zeta_dom.into_iter()));
    out.push(worst("zeta_increment", &mut zeta_inc.into_iter()));
    match c.delta_obs {
        Some(d) => out.push(Check {
            name: "zeta_margin".into(),
            lhs: T::one() - c.kappa,
            rhs: d,
            pass: d + c.kappa - T::one() > T::zero(),
        }),
        None => out.push(Check::le("zeta_margin", T::zero(), T::zero(), tol)),
    }
    out.push(worst("B_run_tail", &mut run_tail.into_iter()));
    out.push(worst("B_run_geometric", &mut run_geo.into_iter()));

    // sum_{j<=N} e^{2 h_j^2} R_j^2 / h_j^2 against the assembled bound
    let h0sq = h[0] * h[0];
    let red_sum = c.log_red_sum.exp();
    let chain = (eta0 + sum_a + run_bound_total) / h0sq;
    out.push(Check::le("red_sum_chain", red_sum, chain, tol));
    let geo_const = T::one() / (two / T::lit(9.0)).exp_m1();
    let margin = c.delta_obs.map(|d| d + c.kappa - T::one());
    if let Some(m) = margin.filter(|m| *m > T::zero()).or(if c.runs.is_empty() { Some(T::infinity()) } else { None }) {
        let run_factor = if m == T::infinity() {
            T::one()
        } else {
            T::one() / (T::one() - (-two * m).exp())
        };
        let bound = eta0 / h0sq * (T::one() + geo_const) * (T::one() + run_factor);
        out.push(Check::le("red_sum_eta0", red_sum, bound, tol));
    }
    let _ = run_sum_total;

    out.extend(tail_checks(c, p)?);
    Ok(out)
}

/// The subcritical region `r > R_0`: with `phi(R) = 1` and `K' = (1 + kappa)/2`,
/// `phi^2/K' <= ln(R/r) + 2/(1-kappa)` on `R_0 < r < R`, and the integral of
/// `e^{2 phi^2}` is dominated by `(R/r)^{2K'}`.
fn tail_checks<T: Real>(c: &DyadicCertificate<T>, p: &RadialProfile<T>) -> Result<Vec<Check<T>>> {
    let tol = T::lit(SLACK_TOL);
    let two = T::lit(2.0);
    let kappa = c.kappa;
    let t0 = c.r0.ln();
    if !(c.hj[0] > two) {
        return Ok(vec![Check::le("tail_subcritical", c.hj[0], two, tol)]);
    }
    // phi is nonincreasing, so phi(R) = 1 has a unique crossing beyond R_0
    let t_end = *p.knots().last().unwrap();
    let (mut lo, mut hi) = (t0, t_end);
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if !(mid > lo && mid < hi) {
            break;
        }
        if p.value_at_log(mid) > T::one() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t_r = hi;
    let kp = (T::one() + kappa) / two;
    let mut pts: Vec<T> = p.knots().iter().copied().filter(|t| *t > t0 && *t < t_r).collect();
    for i in 0..=TAIL_SAMPLES {
        pts.push(t0 + (t_r - t0) * T::lit(i as f64 / TAIL_SAMPLES as f64));
    }
    let mut worst_pt: Option<Check<T>> = None;
    let mut worst_schwarz: Option<Check<T>> = None;
    for t in pts {
        let v = p.value_at_log(t);
        let log_rr = t_r - t;
        let ck = Check::le("tail_subcritical", v * v / kp, log_rr + two / (T::one() - kappa), tol);
        if worst_pt.as_ref().map_or(true, |w| ck.slack() < w.slack()) {
            worst_pt = Some(ck);
        }
        let cs = Check::le("tail_schwarz", v - T::one(), (kappa * log_rr).sqrt(), tol);
        if worst_schwarz.as_ref().map_or(true, |w| cs.slack() < w.slack()) {
            worst_schwarz = Some(cs);
        }
    }
    // integral_{R_0}^{R} e^{2 phi^2} r dr <= e^{4K'/(1-kappa)} integral (R/r)^{2K'} r dr
    let hints = SplitHints {
        exponent_coeff: Some(two),
        kinks: Vec::new(),
    };
    let quad = LogQuadrature::default();
    let li = p.log_integral(|_| T::zero(), t0, t_r, &hints, &quad)?;
    let lhs = li.value() / T::two_pi();
    let e = two - two * kp;
    let r_big = t_r.exp();
    let rhs = (T::lit(4.0) * kp / (T::one() - kappa)).exp()
        * r_big.powf(two * kp)
        * (r_big.powf(e) - c.r0.powf(e))
        / e;
    Ok(vec![
        worst_pt.unwrap(),
        worst_schwarz.unwrap(),
        Check::le("tail_integral", lhs, rhs, tol),
    ])
}

/// Smallest `h_0` counted by [`empirical_red_sum_constant`].
pub const RED_SUM_MIN_HEIGHT: f64 = 2.0;

/// Result of [`empirical_red_sum_constant`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RedSumConstant<T> {
    /// `max sum / M_0` over members with `h_0 > RED_SUM_MIN_HEIGHT`.
    pub value: T,
    pub argmax: Option<usize>,
    pub counted: usize,
    /// Members with `h_0 <= RED_SUM_MIN_HEIGHT`, where the weight
    /// `e^{2h^2}/h^2` does not describe `g` and the reduced sum is not
    /// compared with `M_0`.
    pub skipped: usize,
}

/// `max` over `family` of `sum / M_0`.
pub fn empirical_red_sum_constant<T: Real>(family: &[RadialProfile<T>], kappa: T) -> Result<RedSumConstant<T>> {
    let mut out = RedSumConstant {
        value: T::zero(),
        argmax: None,
        counted: 0,
        skipped: 0,
    };
    for (i, p) in family.iter().enumerate() {
        let c = build_certificate(p, kappa)?;
        if !(c.hj[0] > T::lit(RED_SUM_MIN_HEIGHT)) {
            out.skipped += 1;
            continue;
        }
        out.counted += 1;
        let r = c.red_sum_ratio();
        if out.argmax.is_none() || r > out.value {
            out.value = r;
            out.argmax = Some(i);
        }
    }
    Ok(out)
}

/// Fractions `integral_{|phi| > L} g / ||phi||^2` and
/// `integral_{|x| > R} g / ||phi||^2` used in the compactness argument.
pub fn compactness_fractions<T: Real>(p: &RadialProfile<T>, g: &GSpec<T>, level: T, radius: T) -> Result<(T, T)> {
    let mass = p.mass()?;
    let mut high = crate::quadrature::LogIntegral::zero();
    for (lo, hi) in p.superlevel_ranges(level) {
        high = high.add(p.g_functional_log_between(g, lo, hi)?);
    }
    let outer = p.g_functional_log_between(g, radius.ln(), T::infinity())?;
    Ok((
        (high.log_value - mass.ln()).exp(),
        (outer.log_value - mass.ln()).exp(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{sample, Family};
    use crate::radial::RightExtension;

    fn moser_normalized(alpha: f64) -> RadialProfile<f64> {
        let h = (alpha / (2.0 * std::f64::consts::PI)).sqrt();
        RadialProfile::new(vec![-alpha, 0.0], vec![h, 0.0], LeftExtension::Constant, RightExtension::Zero)
            .unwrap()
            .scaled((2.0 * std::f64::consts::PI).sqrt())
    }

    #[test]
    fn moser_certificate_passes() {
        for alpha in [2.0, 4.0, 9.0] {
            let c = build_certificate(&moser_normalized(alpha), 0.9).unwrap();
            assert!(c.all_pass(), "{}", c.summary());
            // kappa of the energy sits outside R_0 on a uniform log-linear profile
            assert!((c.r0.ln() - (-0.9 * alpha)).abs() < 1e-9);
            assert!(c.kj.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn random_profiles_pass() {
        for fam in Family::ALL {
            for i in 0..20 {
                let p: RadialProfile<f64> = sample(fam, 42, i, 1.0, (1.5, 6.0)).unwrap();
                let c = build_certificate(&p, 0.9).unwrap();
                assert!(c.all_pass(), "{fam:?} {i}\n{}", c.summary());
                assert!(c.red_sum_ratio().is_finite() && c.red_sum_ratio() > 0.0);
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        let p = RadialProfile::new(vec![0.0, 1.0], vec![1.5_f64, 0.0], LeftExtension::Constant, RightExtension::Zero)
            .unwrap();
        assert!(matches!(build_certificate(&p, 0.9), Err(Error::NotNormalized { .. })));
        let q = RadialProfile::new(vec![0.0, 1.0, 2.0], vec![1.0_f64, 2.0, 0.0], LeftExtension::Constant, RightExtension::Zero)
            .unwrap();
        let q = crate::families::normalize_energy(&q, 1.0);
        assert_eq!(build_certificate(&q, 0.9).unwrap_err(), Error::NotMonotone);
        assert!(build_certificate(&moser_normalized(2.0), 0.5).is_err());
    }

    #[test]
    fn red_sum_constant_counts_members() {
        let fam: Vec<RadialProfile<f64>> = (0..12).map(|i| sample(Family::ALL[i % 3], 5, i as u64, 1.0, (1.5, 6.0)).unwrap()).collect();
        let c = empirical_red_sum_constant(&fam, 0.9).unwrap();
        assert_eq!(c.counted + c.skipped, 12);
        assert!(c.value > 0.0 && c.value.is_finite());
        let one = empirical_red_sum_constant(&[moser_normalized(6.0)], 0.9).unwrap();
        assert!(one.value > 0.0 && one.counted == 1);
        let low = empirical_red_sum_constant(&[moser_normalized(2.0)], 0.9).unwrap();
        assert_eq!((low.counted, low.skipped), (0, 1));
    }

    #[test]
    fn json_roundtrip() {
        let c = build_certificate(&moser_normalized(3.0), 0.9).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        let back: DyadicCertificate<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back.checks.len(), c.checks.len());
        assert_eq!(back.n, c.n);
    }
}
