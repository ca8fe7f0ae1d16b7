//! Sharpness witnesses: plateau sequences, Moser functions, log-caps and
//! their rescalings.
//!
//! Each generator returns an exact [`RadialProfile`]; reports carry the
//! energy, mass and `G` value together with the lower bound the
//! construction guarantees.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial::{GSpec, Interp, LeftExtension, RadialProfile, RightExtension, TailClass};
use crate::real::Real;

/// Parameters of one witness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", bound = "T: Real")]
pub enum WitnessParams<T> {
    /// `a` on `|x| < R`, linear ramp to 0 on `R < |x| < R + 1`.
    Plateau { a: T, r: T },
    /// Moser's `f_alpha`, energy exactly 1.
    Moser { alpha: T },
    /// `b` on `r < R = e^{-b^2/K}`, `b |ln r| / |ln R|` up to `r = 1`.
    LogCap { b: T, k: T },
    /// Log-cap composed with `x -> x / s`.
    Rescaled { b: T, k: T, s: T },
}

impl<T: Real> WitnessParams<T> {
    pub fn profile(&self) -> Result<RadialProfile<T>> {
        match *self {
            WitnessParams::Plateau { a, r } => make_plateau(a, r),
            WitnessParams::Moser { alpha } => make_moser(alpha),
            WitnessParams::LogCap { b, k } => make_log_cap(b, k),
            WitnessParams::Rescaled { b, k, s } => Ok(make_log_cap(b, k)?.rescaled(s)),
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            WitnessParams::Plateau { .. } => "plateau",
            WitnessParams::Moser { .. } => "moser",
            WitnessParams::LogCap { .. } => "log_cap",
            WitnessParams::Rescaled { .. } => "rescaled",
        }
    }

    /// `ln` of the guaranteed lower bound on `G`.
    fn log_lower_bound(&self, g: &GSpec<T>) -> T {
        let two = T::lit(2.0);
        match *self {
            WitnessParams::Plateau { a, r } => T::PI().ln() + two * r.ln() + g.log_g(a),
            WitnessParams::Moser { alpha } => {
                let h = (alpha / T::two_pi()).sqrt();
                T::PI().ln() - two * alpha + g.log_g(h)
            }
            WitnessParams::LogCap { b, k } => T::two_pi().ln() - two * b * b / k + g.log_g(b),
            WitnessParams::Rescaled { b, k, s } => {
                T::two_pi().ln() - two * b * b / k + g.log_g(b) + two * s.ln()
            }
        }
    }
}

/// One row of a witness table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct WitnessReport<T> {
    pub k: usize,
    pub params: WitnessParams<T>,
    pub energy: T,
    pub mass: T,
    pub g_lower_bound: T,
    pub g_value: T,
    /// `G / mass`.
    pub ratio: T,
    /// `e^{-2b^2/K_k} b^2 g(b)` for log-cap families.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_k: Option<T>,
}

/// Plateau of height `a` on `|x| < R` with a unit linear ramp.
pub fn make_plateau<T: Real>(a: T, r: T) -> Result<RadialProfile<T>> {
    if !(a > T::zero()) || !(r > T::one()) {
        return Err(Error::InvalidArgument(format!("plateau needs a > 0 and R > 1 (a = {a}, R = {r})")));
    }
    RadialProfile::with_segments(
        vec![r.ln(), (r + T::one()).ln()],
        vec![a, T::zero()],
        vec![Interp::Linear],
        LeftExtension::Constant,
        RightExtension::Zero,
    )
}

/// `f_alpha(x) = sqrt(alpha / 2 pi) L(-ln|x| / alpha)`.
pub fn make_moser<T: Real>(alpha: T) -> Result<RadialProfile<T>> {
    if !(alpha > T::zero()) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("alpha must be positive (got {alpha})")));
    }
    let h = (alpha / T::two_pi()).sqrt();
    RadialProfile::new(vec![-alpha, T::zero()], vec![h, T::zero()], LeftExtension::Constant, RightExtension::Zero)
}

/// `psi` with plateau `b` on `r < e^{-b^2/K}`; energy exactly `2 pi K`.
pub fn make_log_cap<T: Real>(b: T, k: T) -> Result<RadialProfile<T>> {
    if !(b > T::one()) || !(k > T::zero()) || !b.is_finite() || !k.is_finite() {
        return Err(Error::InvalidArgument(format!("log-cap needs b > 1, K > 0 (b = {b}, K = {k})")));
    }
    RadialProfile::new(vec![-b * b / k, T::zero()], vec![b, T::zero()], LeftExtension::Constant, RightExtension::Zero)
}

/// Closed-form mass of the Moser function.
pub fn moser_mass<T: Real>(alpha: T) -> T {
    let e = (T::lit(-2.0) * alpha).exp();
    (T::one() - e) / (T::lit(4.0) * alpha) - e / T::lit(2.0)
}

/// Evaluate a witness against `g`.
pub fn report<T: Real>(k: usize, params: WitnessParams<T>, g: &GSpec<T>) -> Result<WitnessReport<T>> {
    let p = params.profile()?;
    let energy = p.dirichlet_energy();
    let mass = p.mass()?;
    let lg = p.g_functional_log(g)?;
    let lb = params.log_lower_bound(g);
    let c_k = match params {
        WitnessParams::LogCap { b, k } | WitnessParams::Rescaled { b, k, .. } => {
            Some((T::lit(-2.0) * b * b / k + T::lit(2.0) * b.ln() + g.log_g(b)).exp())
        }
        _ => None,
    };
    Ok(WitnessReport {
        k,
        params,
        energy,
        mass,
        g_lower_bound: lb.exp(),
        g_value: lg.value(),
        ratio: (lg.log_value - mass.ln()).exp(),
        c_k,
    })
}

/// Which clause of the main theorem the sequence should witness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `limsup e^{-2u^2/K} u^2 g(u) > 0`: weakly null, `G` bounded below.
    CompactnessFail,
    /// `limsup = inf`: mass to zero, `G` to infinity.
    BoundednessFail,
}

/// Amplitudes `b_k`, budgets `K_k` and (optionally) scales `S_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule<T> {
    pub b: Vec<T>,
    pub k: Vec<T>,
    pub s: Option<Vec<T>>,
}

impl<T: Real> Schedule<T> {
    /// `b_k = 2 e^k`, `K_k = K (1 - b_k^-3)` (the gap floored at a few ulps so
    /// `K_k < K` survives rounding).
    ///
    /// `K - K_k = O(b_k^-3)` keeps `e^{2 b_k^2 (1/K - 1/K_k)} -> 1`, so `c_k`
    /// tracks the limsup; the geometric growth of `b_k` makes the pointwise
    /// decay `ln(b_k / r) / b_k` visible within a dozen terms.
    pub fn geometric(k_budget: T, n_terms: usize) -> Self {
        let b: Vec<T> = (0..n_terms).map(|i| T::lit(2.0) * T::lit(i as f64).exp()).collect();
        let k = b
            .iter()
            .map(|&bk| k_budget * (T::one() - bk.powi(-3).max(T::lit(4.0) * T::epsilon())))
            .collect();
        Schedule { b, k, s: None }
    }

    /// `b_k = k + 2`, `K_k = K (1 - 1/(k + 3))`.
    pub fn linear(k_budget: T, n_terms: usize) -> Self {
        let b = (0..n_terms).map(|i| T::lit(i as f64 + 2.0)).collect();
        let k = (0..n_terms).map(|i| k_budget * (T::one() - T::one() / T::lit(i as f64 + 3.0))).collect();
        Schedule { b, k, s: None }
    }

    pub fn with_scales(mut self, s: Vec<T>) -> Self {
        self.s = Some(s);
        self
    }

    fn len(&self) -> usize {
        self.b.len().min(self.k.len())
    }
}

/// Rescaled log-cap sequence for the requested regime with the default
/// geometric schedule.
pub fn make_concentration_sequence<T: Real>(
    k_budget: T,
    g: &GSpec<T>,
    n_terms: usize,
    regime: Regime,
) -> Result<Vec<WitnessReport<T>>> {
    concentration_sequence_with(k_budget, g, regime, &Schedule::geometric(k_budget, n_terms))
}

/// Same as [`make_concentration_sequence`] with an explicit schedule.
///
/// Scales default to `S_k = b_k` (compactness) or
/// `S_k = b_k / sqrt(min(c_k, k + 1))` (boundedness).
pub fn concentration_sequence_with<T: Real>(
    k_budget: T,
    g: &GSpec<T>,
    regime: Regime,
    schedule: &Schedule<T>,
) -> Result<Vec<WitnessReport<T>>> {
    if !(k_budget > T::zero()) {
        return Err(Error::InvalidArgument("K must be positive".into()));
    }
    let tail = g.infinity_tail(k_budget);
    match (regime, tail.class) {
        (_, TailClass::Zero) => {
            return Err(Error::RegimeMismatch(format!(
                "limsup of e^(-2u^2/K) u^2 g(u) estimated as 0 (slope {:.3}); no witness exists",
                tail.slope.as_f64()
            )))
        }
        (Regime::BoundednessFail, TailClass::Finite(v)) => {
            return Err(Error::RegimeMismatch(format!(
                "limsup of e^(-2u^2/K) u^2 g(u) estimated finite ({:.4e}); boundedness holds",
                v.as_f64()
            )))
        }
        _ => {}
    }
    let mut out = Vec::with_capacity(schedule.len());
    for i in 0..schedule.len() {
        let (b, kk) = (schedule.b[i], schedule.k[i]);
        if !(kk < k_budget) {
            return Err(Error::InvalidArgument(format!("K_k = {kk} must stay below K = {k_budget}")));
        }
        let c_k = (T::lit(-2.0) * b * b / kk + T::lit(2.0) * b.ln() + g.log_g(b)).exp();
        let s = match (&schedule.s, regime) {
            (Some(s), _) => s[i],
            (None, Regime::CompactnessFail) => b,
            (None, Regime::BoundednessFail) => b / c_k.min(T::lit(i as f64 + 1.0)).sqrt(),
        };
        out.push(report(i, WitnessParams::Rescaled { b, k: kk, s }, g)?);
    }
    Ok(out)
}

/// Plateau sequence for `limsup_{u->0} u^-2 g(u) = inf`:
/// `g(a_n) >= n a_n^2`, `R_n = a_n^{-1/2} + a_n^{-1} n^{-1/4}`.
pub fn plateau_blowup_sequence<T: Real>(
    k_budget: T,
    g: &GSpec<T>,
    n_terms: usize,
) -> Result<Vec<WitnessReport<T>>> {
    let mut out = Vec::new();
    let mut a = T::lit(0.5);
    let mut n = 1usize;
    let floor = T::lit(1e-300);
    while out.len() < n_terms {
        let nn = T::lit(n as f64);
        let radius = |a: T| a.powf(T::lit(-0.5)) + nn.powf(T::lit(-0.25)) / a;
        let ok = |a: T| {
            let r = radius(a);
            g.log_g(a) >= nn.ln() + T::lit(2.0) * a.ln()
                && r > T::one()
                && T::two_pi() * a * a * (r + T::lit(0.5)) < T::two_pi() * k_budget
        };
        while !ok(a) {
            a = a * T::lit(0.75);
            if a < floor {
                return Err(Error::RegimeMismatch(format!("no a with g(a) >= {n} a^2 found")));
            }
        }
        out.push(report(n, WitnessParams::Plateau { a, r: radius(a) }, g)?);
        a = a * T::lit(0.75);
        n += 1;
    }
    Ok(out)
}

/// Plateau sequence for `limsup_{u->0} u^-2 g(u) > 0`: `R_n = 1 / a_n`,
/// `a_n -> 0`, so `G >= delta` while the energy `~ a_n` vanishes.
pub fn plateau_noncompact_sequence<T: Real>(
    k_budget: T,
    g: &GSpec<T>,
    n_terms: usize,
) -> Result<Vec<WitnessReport<T>>> {
    let origin = g.origin_tail();
    if origin.class == TailClass::Zero {
        return Err(Error::RegimeMismatch("u^-2 g(u) -> 0 at the origin".into()));
    }
    let mut out = Vec::new();
    let mut a = T::lit(0.25);
    let mut n = 1usize;
    while out.len() < n_terms {
        let r = T::one() / a;
        if T::two_pi() * a * a * (r + T::lit(0.5)) < T::two_pi() * k_budget {
            out.push(report(n, WitnessParams::Plateau { a, r }, g)?);
            n += 1;
        }
        a = a * T::lit(0.5);
    }
    Ok(out)
}

/// Write `family,k,energy,mass,g_value,ratio` rows.
pub fn write_csv<T: Real, W: Write>(reports: &[WitnessReport<T>], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["family", "k", "energy", "mass", "g_value", "ratio"])?;
    for r in reports {
        wtr.write_record([
            r.params.family_name().to_string(),
            r.k.to_string(),
            r.energy.as_f64().to_string(),
            r.mass.as_f64().to_string(),
            r.g_value.as_f64().to_string(),
            r.ratio.as_f64().to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn plateau_norms() {
        let (a, r) = (0.1_f64, 100.0);
        let p = make_plateau(a, r).unwrap();
        let e = p.dirichlet_energy();
        assert!((e - 2.0 * PI * a * a * (r + 0.5)).abs() < 1e-12);
        let ratio = e / (a * a * r);
        assert!((1.0..=4.0 * PI).contains(&ratio));
        let m = p.mass().unwrap();
        let mr = m / (a * a * r * r);
        assert!((0.25..=4.0).contains(&mr), "{mr}");
    }

    #[test]
    fn plateau_scales_with_amplitude() {
        let p1 = make_plateau(0.2_f64, 10.0).unwrap();
        let p2 = make_plateau(0.1_f64, 10.0).unwrap();
        assert!((p1.mass().unwrap() / p2.mass().unwrap() - 4.0).abs() < 1e-12);
        assert!((p1.dirichlet_energy() / p2.dirichlet_energy() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn moser_witness() {
        let p = make_moser(1.0_f64).unwrap();
        assert!((p.dirichlet_energy() - 1.0).abs() < 1e-12);
        let m2 = make_moser(2.0_f64).unwrap().mass().unwrap();
        assert!((m2 - moser_mass(2.0_f64)).abs() < 1e-14);
        assert!((m2 - 0.113_552_7).abs() < 1e-6, "{m2}");
        assert!(make_moser(200.0).unwrap().mass().unwrap() < 2e-3);
        assert!(make_moser(-1.0).is_err());
    }

    #[test]
    fn log_cap_energy_and_mass() {
        for &(b, k) in &[(3.0_f64, 0.9_f64), (5.0, 1.0), (8.0, 2.0)] {
            let p = make_log_cap(b, k).unwrap();
            assert!((p.dirichlet_energy() - 2.0 * PI * k).abs() < 1e-12 * k);
            // mass * b^2 / (2 pi K^2) -> 1/4
            let m = p.mass().unwrap();
            let normalized = m * b * b / (2.0 * PI * k * k);
            assert!((normalized - 0.25).abs() < 0.05, "b={b}: {normalized}");
        }
    }

    #[test]
    fn rescaling_multiplies_mass() {
        let p = make_log_cap(4.0_f64, 0.95).unwrap();
        let q = p.rescaled(7.0);
        assert!((q.mass().unwrap() / p.mass().unwrap() - 49.0).abs() < 1e-10);
        assert!((q.dirichlet_energy() - p.dirichlet_energy()).abs() < 1e-12);
    }

    #[test]
    fn log_cap_lower_bound_holds() {
        let g = GSpec::theorem_form(1.0).unwrap();
        let r = report(0, WitnessParams::LogCap { b: 2.0, k: 0.9 }, &g).unwrap();
        assert!(r.g_value >= r.g_lower_bound, "{r:?}");
    }

    #[test]
    fn linear_schedule_ratio_bound() {
        let g = GSpec::theorem_form(1.0).unwrap();
        let reps = concentration_sequence_with(1.0, &g, Regime::CompactnessFail, &Schedule::linear(1.0, 6)).unwrap();
        for r in &reps {
            let c = r.c_k.unwrap();
            assert!(r.ratio >= c, "k={}: ratio {} < c_k {}", r.k, r.ratio, c);
            assert!(r.energy < 2.0 * PI);
            assert!(r.g_value >= r.g_lower_bound);
        }
    }

    #[test]
    fn exact_growth_rejects_boundedness_regime() {
        let g = GSpec::exact_growth(1.0, 2.0).unwrap();
        let e = make_concentration_sequence(1.0, &g, 4, Regime::BoundednessFail);
        assert!(matches!(e, Err(Error::RegimeMismatch(_))));
        let weak = GSpec::exp_minus_one(1.0).unwrap();
        assert!(matches!(
            make_concentration_sequence(1.0, &weak, 4, Regime::CompactnessFail),
            Err(Error::RegimeMismatch(_))
        ));
    }

    #[test]
    fn plateau_blowup_for_linear_origin_growth() {
        // g(u) = |u|: u^-2 g(u) is unbounded at the origin
        let g = GSpec::power(1.0, 1.0).unwrap();
        let reps = plateau_blowup_sequence(1.0, &g, 8).unwrap();
        for w in reps.windows(2) {
            assert!(w[1].mass < w[0].mass);
        }
        let last = reps.last().unwrap();
        assert!(last.ratio > reps[0].ratio);
        for r in &reps {
            let n = r.k as f64;
            if let WitnessParams::Plateau { a, r: rr } = r.params {
                assert!(r.g_value >= n * a * a * rr * rr);
            }
            assert!(r.energy < 2.0 * PI);
        }
    }

    #[test]
    fn csv_rows() {
        let g = GSpec::theorem_form(1.0).unwrap();
        let reps = make_concentration_sequence(1.0, &g, 2, Regime::CompactnessFail).unwrap();
        let mut buf = Vec::new();
        write_csv(&reps, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "family,k,energy,mass,g_value,ratio");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("rescaled,0,"));
    }
}
