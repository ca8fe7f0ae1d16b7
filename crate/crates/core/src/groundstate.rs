//! Positive radial solutions of `-Delta Q + c Q = f'(Q)` by shooting.
//!
//! The radial equation `Q'' + Q'/r - c Q + f'(Q) = 0`, `Q'(0) = 0` is
//! integrated from the regular-center series at `r = 1e-6`. A shot
//! undershoots when `Q'` turns positive while `Q > 0` and overshoots when
//! `Q` crosses zero; the ground state is the bisection limit between the two.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{Control, Dp45};
use crate::radial::{LeftExtension, RadialProfile, RightExtension};
use crate::real::Real;

const R_START: f64 = 1e-6;
const BISECTION_REL_TOL: f64 = 1e-12;
const MAX_AMPLITUDE: f64 = 50.0;
const EXP_LIMIT: f64 = 700.0;
const FD_STEP: f64 = 1e-3;
const FD_PER_WIDTH: f64 = 20.0;

type ScalarFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Named nonlinearities with closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Real")]
pub enum Builtin<T> {
    /// `f(u) = u^4 / 4`.
    Cubic,
    /// `f(u) = |u|^q / q`, `q > 2`.
    Power { q: T },
    /// `f(u) = e^{k u^2} - 1 - k u^2`; `f e^{-k u^2} u^2 -> inf`.
    ExpSubcritical { kappa0: T },
    /// `f(u) = (e^{k u^2} - 1 - k u^2) / (1 + k u^2)^2`;
    /// `f e^{-k u^2} u^2 -> 0`.
    ExpDamped { kappa0: T },
}

/// `f` together with `f'` and the critical coefficient `kappa0`.
#[derive(Clone)]
pub struct NonlinearityF<T> {
    pub name: String,
    pub f: ScalarFn<T>,
    pub f_prime: ScalarFn<T>,
    pub kappa0: T,
    pub builtin: Option<Builtin<T>>,
}

impl<T: Real> fmt::Debug for NonlinearityF<T> {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("NonlinearityF")
            .field("name", &self.name)
            .field("kappa0", &self.kappa0)
            .finish()
    }
}

impl<T: Real> NonlinearityF<T> {
    pub fn custom(
        name: &str,
        f: impl Fn(T) -> T + Send + Sync + 'static,
        f_prime: impl Fn(T) -> T + Send + Sync + 'static,
        kappa0: T,
    ) -> Self {
        NonlinearityF {
            name: name.to_string(),
            f: Arc::new(f),
            f_prime: Arc::new(f_prime),
            kappa0,
            builtin: None,
        }
    }

    pub fn from_builtin(b: Builtin<T>) -> Result<Self> {
        let two = T::lit(2.0);
        let mut out = match b {
            Builtin::Cubic => Self::custom("cubic", |u: T| u.powi(4) / T::lit(4.0), |u: T| u.powi(3), T::zero()),
            Builtin::Power { q } => {
                if !(q > two) {
                    return Err(Error::InvalidNonlinearity("power needs q > 2".into()));
                }
                Self::custom(
                    "power",
                    move |u: T| u.abs().powf(q) / q,
                    move |u: T| u.abs().powf(q - T::one()) * u.signum(),
                    T::zero(),
                )
            }
            Builtin::ExpSubcritical { kappa0: k } => {
                if !(k > T::zero()) {
                    return Err(Error::InvalidNonlinearity("kappa0 must be positive".into()));
                }
                Self::custom(
                    "exp_subcritical",
                    move |u: T| exp_rest(k * u * u),
                    move |u: T| two * k * u * (k * u * u).exp_m1(),
                    k,
                )
            }
            Builtin::ExpDamped { kappa0: k } => {
                if !(k > T::zero()) {
                    return Err(Error::InvalidNonlinearity("kappa0 must be positive".into()));
                }
                Self::custom(
                    "exp_damped",
                    move |u: T| {
                        let s = k * u * u;
                        exp_rest(s) / ((T::one() + s) * (T::one() + s))
                    },
                    move |u: T| {
                        // d/du [F(s) / (1+s)^2] with s = k u^2, F = e^s - 1 - s
                        let s = k * u * u;
                        let d = T::one() + s;
                        let fs = exp_rest(s);
                        let dfs = s.exp_m1();
                        two * k * u * (dfs / (d * d) - two * fs / (d * d * d))
                    },
                    k,
                )
            }
        };
        out.builtin = Some(b);
        Ok(out)
    }

    /// Largest shooting amplitude: `min(50, sqrt(700 / kappa0))`.
    pub fn amplitude_cap(&self) -> T {
        let cap = T::lit(MAX_AMPLITUDE);
        if self.kappa0 > T::zero() {
            cap.min((T::lit(EXP_LIMIT) / self.kappa0).sqrt())
        } else {
            cap
        }
    }

    /// `min (u f'(u) - 2 f(u)) / f(u)` over a grid on `(0, cap]`; errors if
    /// `f < 0` or the minimum is not positive.
    pub fn coercivity(&self) -> Result<T> {
        let cap = self.amplitude_cap();
        let mut eps = T::infinity();
        for i in 1..=400 {
            let u = cap * T::lit(i as f64 / 400.0);
            let f = (self.f)(u);
            if f < T::zero() {
                return Err(Error::InvalidNonlinearity(format!("f({u}) = {f} < 0")));
            }
            if f > T::zero() {
                eps = eps.min((u * (self.f_prime)(u) - T::lit(2.0) * f) / f);
            }
        }
        if !(eps > T::zero()) {
            return Err(Error::InvalidNonlinearity(format!("(D-2)f >= eps f fails (eps = {eps})")));
        }
        Ok(eps)
    }
}

/// `e^s - 1 - s` without cancellation for small `s`.
fn exp_rest<T: Real>(s: T) -> T {
    if s.abs() < T::lit(0.1) {
        // Taylor series to s^10
        let mut term = s * s / T::lit(2.0);
        let mut sum = term;
        for n in 3..=12 {
            term = term * s / T::lit(n as f64);
            sum = sum + term;
        }
        sum
    } else {
        s.exp_m1() - s
    }
}

/// Classification of a single shot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Still positive and decreasing at `r_max`.
    Decays,
    /// `Q'` became positive while `Q > 0`: amplitude too small.
    Undershoot,
    /// `Q` crossed zero: amplitude too large.
    CrossesZero,
    /// `|Q|` exceeded `2 Q0`.
    BlowsUp,
}

/// State `(Q, Q', int Q^2 r, int Q'^2 r, int Q f'(Q) r, int f(Q) r)`.
type State<T> = [T; 6];

/// A single shot.
#[derive(Debug, Clone)]
pub struct Shot<T> {
    pub outcome: Outcome,
    /// Radius of the classifying event.
    pub r_end: T,
    /// Accepted states `(r, y)` up to the event.
    pub samples: Vec<(T, State<T>)>,
}

fn rhs<T: Real>(f: &NonlinearityF<T>, c: T) -> impl Fn(T, &State<T>) -> State<T> + '_ {
    move |r: T, y: &State<T>| {
        let (q, p) = (y[0], y[1]);
        let fp = (f.f_prime)(q);
        [p, -p / r + c * q - fp, q * q * r, p * p * r, q * fp * r, (f.f)(q) * r]
    }
}

/// Core width `1 / sqrt(c + max(f'(Q0)/Q0, f''(Q0)))`.
fn core_width<T: Real>(f: &NonlinearityF<T>, c: T, q0: T) -> T {
    let d = T::lit(1e-4) * q0;
    let f2 = ((f.f_prime)(q0 + d) - (f.f_prime)(q0 - d)) / (d + d);
    (c + ((f.f_prime)(q0) / q0).max(f2)).sqrt().recip()
}

/// Series start at `min(1e-6, 1e-3 * width)`.
fn start<T: Real>(f: &NonlinearityF<T>, c: T, q0: T) -> (T, State<T>) {
    let e = T::lit(R_START).min(T::lit(1e-3) * core_width(f, c, q0));
    let curv = (c * q0 - (f.f_prime)(q0)) / T::lit(2.0);
    let half_e2 = e * e / T::lit(2.0);
    (
        e,
        [
            q0 + curv * e * e / T::lit(2.0),
            curv * e,
            q0 * q0 * half_e2,
            T::zero(),
            q0 * (f.f_prime)(q0) * half_e2,
            (f.f)(q0) * half_e2,
        ],
    )
}

/// Shoot from `Q(0) = q0` up to `r_max`.
pub fn shoot<T: Real>(f: &NonlinearityF<T>, c: T, q0: T, r_max: T) -> Result<Shot<T>> {
    let (r0, y0) = start(f, c, q0);
    let ode = Dp45 {
        h_min: T::lit(1e-8) * r0,
        ..Dp45::default()
    };
    let mut samples = vec![(r0, y0)];
    let mut outcome = Outcome::Decays;
    if y0[1] > T::zero() {
        return Ok(Shot {
            outcome: Outcome::Undershoot,
            r_end: r0,
            samples,
        });
    }
    let two_q0 = T::lit(2.0) * q0;
    let h0 = T::lit(1e-4).min(T::lit(0.01) * core_width(f, c, q0));
    let (r_end, _, _) = ode.integrate(rhs(f, c), r0, y0, r_max, h0, |r, y| {
        samples.push((r, *y));
        if y[0] <= T::zero() {
            outcome = Outcome::CrossesZero;
            Control::Stop
        } else if y[0] > two_q0 || !y[0].is_finite() {
            outcome = Outcome::BlowsUp;
            Control::Stop
        } else if y[1] > T::zero() {
            outcome = Outcome::Undershoot;
            Control::Stop
        } else {
            Control::Continue
        }
    })?;
    Ok(Shot { outcome, r_end, samples })
}

/// A computed ground state and its identity residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GroundStateResult<T> {
    pub c: T,
    pub q0: T,
    /// Radius where the accepted trajectory was truncated.
    pub r_max: T,
    pub profile: RadialProfile<T>,
    pub grad_norm_sq: T,
    pub mass_sq: T,
    /// `int Q f'(Q) dx`.
    pub nonlinear_sq: T,
    /// `max |Q'' + Q'/r - cQ + f'(Q)| / max |f'(Q)|` on `[0, r_max/2]`.
    pub ode_residual: T,
    /// `|grad^2 + c mass^2 - int Q f'(Q)| / int Q f'(Q)`.
    pub nehari_residual: T,
    /// `|c mass^2 - 2 int f(Q)| / (c mass^2)`.
    pub pohozaev_residual: T,
    /// `(min, max)` of `Q e^{sqrt(c) r} sqrt(r)` on `[0.5, 0.8] r_max`.
    pub tail_band: (T, T),
    pub kappa0: T,
}

impl<T: Real> GroundStateResult<T> {
    pub fn kappa_grad(&self) -> T {
        self.kappa0 * self.grad_norm_sq
    }
}

fn radius_guess<T: Real>(c: T) -> T {
    T::lit(60.0) / c.sqrt() + T::lit(10.0)
}

/// Bisection on `Q(0)` between an undershoot and an overshoot.
pub fn find_ground_state<T: Real>(f: &NonlinearityF<T>, c: T) -> Result<GroundStateResult<T>> {
    if !(c > T::zero()) || !c.is_finite() {
        return Err(Error::InvalidArgument(format!("c must be positive (got {c})")));
    }
    let r_max = radius_guess(c);
    let cap = f.amplitude_cap();
    let overshoots = |q: T| -> Result<bool> {
        Ok(matches!(shoot(f, c, q, r_max)?.outcome, Outcome::CrossesZero))
    };
    // Smallest probe: below sqrt(c)-type amplitudes f'(q) < c q and the shot
    // turns up at once.
    let mut lo = T::lit(1e-3);
    if overshoots(lo)? {
        return Err(Error::InvalidNonlinearity("tiny amplitudes already overshoot".into()));
    }
    let mut hi = lo;
    loop {
        hi = (hi * T::lit(1.5)).min(cap);
        if overshoots(hi)? {
            break;
        }
        lo = hi;
        if hi >= cap {
            return Err(Error::NoSignChange { cap: cap.as_f64() });
        }
    }
    while hi - lo > T::lit(BISECTION_REL_TOL) * hi {
        let mid = (lo + hi) * T::lit(0.5);
        if !(mid > lo && mid < hi) {
            break;
        }
        if overshoots(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let shot = shoot(f, c, lo, r_max)?;
    assemble(f, c, lo, shot)
}

fn assemble<T: Real>(f: &NonlinearityF<T>, c: T, q0: T, shot: Shot<T>) -> Result<GroundStateResult<T>> {
    // Truncate at the last point where Q is still decreasing.
    let mut samples = shot.samples;
    while samples.len() > 2 && samples.last().unwrap().1[1] > T::zero() {
        samples.pop();
    }
    let (r_t, y_t) = *samples.last().unwrap();
    let two_pi = T::two_pi();
    let mass_sq = two_pi * y_t[2];
    let grad_norm_sq = two_pi * y_t[3];
    let nonlinear_sq = two_pi * y_t[4];
    let f_int = two_pi * y_t[5];
    let nehari_residual = (grad_norm_sq + c * mass_sq - nonlinear_sq).abs() / nonlinear_sq.abs();
    let pohozaev_residual = (c * mass_sq - T::lit(2.0) * f_int).abs() / (c * mass_sq);

    let sc = c.sqrt();
    let (mut tmin, mut tmax) = (T::infinity(), T::zero());
    for (r, y) in &samples {
        if *r >= T::lit(0.5) * r_t && *r <= T::lit(0.8) * r_t {
            let v = y[0] * (sc * *r).exp() * r.sqrt();
            tmin = tmin.min(v);
            tmax = tmax.max(v);
        }
    }

    // Profile on a log grid of 400 radii plus the truncation point.
    let mut radii = Vec::new();
    let mut values = Vec::new();
    let (lr0, lr1) = (samples[0].0.ln(), r_t.ln());
    let mut idx = 0;
    for i in 0..400 {
        let target = (lr0 + (lr1 - lr0) * T::lit(i as f64 / 400.0)).exp();
        while idx + 1 < samples.len() && samples[idx + 1].0 <= target {
            idx += 1;
        }
        let (ra, ya) = samples[idx];
        if radii.last().map_or(true, |l| ra > *l) {
            radii.push(ra);
            values.push(ya[0]);
        }
    }
    if radii.last().map_or(true, |l| r_t > *l) {
        radii.push(r_t);
        values.push(y_t[0]);
    }
    radii.push(r_t * T::lit(1.001));
    values.push(T::zero());
    let profile = RadialProfile::from_radial_samples(&radii, &values, LeftExtension::Constant, RightExtension::Zero)?;

    let ode_residual = ode_residual(f, c, q0, r_t / T::lit(2.0))?;
    Ok(GroundStateResult {
        c,
        q0,
        r_max: r_t,
        profile,
        grad_norm_sq,
        mass_sq,
        nonlinear_sq,
        ode_residual,
        nehari_residual,
        pohozaev_residual,
        tail_band: (tmin, tmax),
        kappa0: f.kappa0,
    })
}

/// Re-integrate onto a uniform grid and apply five-point central differences.
/// The spacing shrinks with the core width `1 / sqrt(c + f'(Q0)/Q0)`.
fn ode_residual<T: Real>(f: &NonlinearityF<T>, c: T, q0: T, r_end: T) -> Result<T> {
    let h = T::lit(FD_STEP).min(core_width(f, c, q0) / T::lit(FD_PER_WIDTH));
    let ode = Dp45::default();
    let (mut r, mut y) = start(f, c, q0);
    let mut grid: Vec<(T, T)> = Vec::new();
    let mut step = T::lit(1e-4);
    let mut k = 1usize;
    loop {
        let target = h * T::lit(k as f64);
        if target > r_end {
            break;
        }
        let (r1, y1, h1) = ode.integrate(rhs(f, c), r, y, target, step, |_, _| Control::Continue)?;
        r = r1;
        y = y1;
        step = h1.max(T::lit(1e-6));
        grid.push((r, y[0]));
        k += 1;
    }
    let mut worst = T::zero();
    let mut scale = T::zero();
    let twelve = T::lit(12.0);
    for w in grid.windows(5) {
        let (r, q) = w[2];
        let d2 = (T::lit(16.0) * (w[3].1 + w[1].1) - (w[4].1 + w[0].1) - T::lit(30.0) * q) / (twelve * h * h);
        let d1 = (T::lit(8.0) * (w[3].1 - w[1].1) - (w[4].1 - w[0].1)) / (twelve * h);
        let fp = (f.f_prime)(q);
        worst = worst.max((d2 + d1 / r - c * q + fp).abs());
        scale = scale.max(fp.abs());
    }
    Ok(worst / scale)
}

/// One row of a scan over `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ScanRow<T> {
    pub c: T,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<GroundStateResult<T>>,
}

/// Ground states along `c_grid`; failures are recorded per row.
///
/// A positive solution with `kappa0 * grad^2 > 4 pi` is kept but marked
/// `above_4pi`: it cannot be the least-energy solution.
pub fn critical_mass_scan<T: Real>(f: &NonlinearityF<T>, c_grid: &[T]) -> Vec<ScanRow<T>> {
    let four_pi = T::lit(4.0 * std::f64::consts::PI);
    c_grid
        .par_iter()
        .map(|&c| match find_ground_state(f, c) {
            Ok(r) => ScanRow {
                c,
                status: if r.kappa_grad() > four_pi { "above_4pi" } else { "ok" }.into(),
                result: Some(r),
            },
            Err(Error::NoSignChange { .. }) => ScanRow {
                c,
                status: "no_sign_change".into(),
                result: None,
            },
            Err(e) => ScanRow {
                c,
                status: format!("error: {e}"),
                result: None,
            },
        })
        .collect()
}

/// Largest `c` in a scan with status `ok`.
pub fn empirical_threshold<T: Real>(rows: &[ScanRow<T>]) -> Option<T> {
    rows.iter().filter(|r| r.status == "ok").map(|r| r.c).reduce(T::max)
}

/// Write `c,Q0,grad2,mass2,kappa_grad2,nehari_res,pohozaev_res,status` rows.
pub fn write_csv<T: Real, W: Write>(rows: &[ScanRow<T>], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["c", "Q0", "grad2", "mass2", "kappa_grad2", "nehari_res", "pohozaev_res", "status"])?;
    for row in rows {
        let cells: Vec<String> = match &row.result {
            Some(r) => vec![
                r.q0.as_f64().to_string(),
                r.grad_norm_sq.as_f64().to_string(),
                r.mass_sq.as_f64().to_string(),
                r.kappa_grad().as_f64().to_string(),
                r.nehari_residual.as_f64().to_string(),
                r.pohozaev_residual.as_f64().to_string(),
            ],
            None => vec![String::new(); 6],
        };
        let mut rec = vec![row.c.as_f64().to_string()];
        rec.extend(cells);
        rec.push(row.status.clone());
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic() -> NonlinearityF<f64> {
        NonlinearityF::from_builtin(Builtin::Cubic).unwrap()
    }

    #[test]
    fn townes_profile() {
        let g = find_ground_state(&cubic(), 1.0).unwrap();
        assert!((g.q0 - 2.206_2).abs() < 1e-3, "{}", g.q0);
        assert!(g.nehari_residual < 1e-5 && g.pohozaev_residual < 1e-5, "{g:?}");
        assert!(g.ode_residual < 1e-4, "{}", g.ode_residual);
        assert!(g.profile.is_nonincreasing());
    }

    #[test]
    fn cubic_scaling_symmetry() {
        let one = find_ground_state(&cubic(), 1.0).unwrap();
        for c in [0.5, 2.0] {
            let g = find_ground_state(&cubic(), c).unwrap();
            assert!((g.q0 / c.sqrt() / one.q0 - 1.0).abs() < 1e-4);
            assert!((g.mass_sq / one.mass_sq - 1.0).abs() < 1e-4);
            assert!((g.grad_norm_sq / (c * one.grad_norm_sq) - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn exp_scan_stays_below_four_pi() {
        let f = NonlinearityF::from_builtin(Builtin::ExpSubcritical { kappa0: 1.0 }).unwrap();
        let rows = critical_mass_scan(&f, &[0.1, 1.0, 10.0]);
        let mut last = 0.0;
        for row in &rows {
            assert_eq!(row.status, "ok");
            let r = row.result.as_ref().unwrap();
            assert!(r.kappa_grad() <= 4.0 * std::f64::consts::PI + 1e-6);
            assert!(r.kappa_grad() > last);
            last = r.kappa_grad();
        }
    }

    #[test]
    fn damped_scan_has_finite_threshold() {
        let f = NonlinearityF::from_builtin(Builtin::ExpDamped { kappa0: 1.0 }).unwrap();
        let rows = critical_mass_scan(&f, &[0.2, 0.4, 0.8, 1.6]);
        let t = empirical_threshold(&rows).unwrap();
        assert!(t >= 0.4 && t < 1.6, "{t}");
        assert!(rows.iter().any(|r| r.status == "no_sign_change"));
    }

    #[test]
    fn shot_classes() {
        let f = cubic();
        assert_eq!(shoot(&f, 1.0, 0.01, 30.0).unwrap().outcome, Outcome::Undershoot);
        assert_eq!(shoot(&f, 1.0, 10.0, 30.0).unwrap().outcome, Outcome::CrossesZero);
    }

    #[test]
    fn coercivity_of_builtins() {
        assert!((cubic().coercivity().unwrap() - 2.0).abs() < 1e-12);
        let e = NonlinearityF::<f64>::from_builtin(Builtin::ExpSubcritical { kappa0: 1.0 }).unwrap();
        assert!(e.coercivity().unwrap() > 0.0);
        let d = NonlinearityF::<f64>::from_builtin(Builtin::ExpDamped { kappa0: 1.0 }).unwrap();
        assert!(d.coercivity().unwrap() > 0.0);
    }

    #[test]
    fn damped_derivative_matches_difference_quotient() {
        let d = NonlinearityF::<f64>::from_builtin(Builtin::ExpDamped { kappa0: 1.3 }).unwrap();
        for u in [0.05, 0.7, 2.0, 4.0] {
            let h = 1e-6 * u;
            let fd = ((d.f)(u + h) - (d.f)(u - h)) / (2.0 * h);
            assert!(((d.f_prime)(u) - fd).abs() <= 1e-6 * fd.abs().max(1e-12), "{u}");
        }
    }
}
