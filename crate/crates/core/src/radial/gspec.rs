//! Growth functions `g(u) >= 0` entering `G(phi) = integral g(phi(x)) dx`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::{ln_expm1, Real};

/// The shape of `g`.
///
/// `K` is the energy-budget parameter of the `2 pi K` normalization: the
/// critical exponent is `2 u^2 / K`. The `||grad u|| <= 1` convention of the
/// classical statements corresponds to `K = 1 / (2 pi)`, i.e. `e^{4 pi u^2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Real")]
pub enum GKind<T> {
    /// `(e^{2u^2/K} - 1) / (1 + |u|)^p`.
    ExactGrowth { k: T, p: T },
    /// `e^{alpha u^2} - 1`.
    ExpMinusOne { alpha: T },
    /// `min(u^2, u^-2) e^{2u^2/K}`.
    TheoremForm { k: T },
    /// Samples `(u_i, ln g(u_i))`, `u_i > 0` increasing; `ln g` is interpolated
    /// linearly in `ln u` and extrapolated with the end slopes.
    Custom { samples: Vec<(T, T)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GSpec<T> {
    pub kind: GKind<T>,
    /// Largest `ln g` returned by direct evaluation.
    #[serde(default = "default_cap")]
    pub overflow_cap: T,
    /// `g^L`: amplitudes beyond `L` are clamped to `L` before evaluation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<T>,
}

fn default_cap<T: Real>() -> T {
    T::lit(648.0)
}

/// Numerical classification of a limit superior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailClass<T> {
    Zero,
    Finite(T),
    Infinite,
}

/// A tail classification together with the evidence it was based on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate<T> {
    pub class: TailClass<T>,
    /// Maximum of the probed log-quantity over the fit window.
    pub log_level: T,
    /// Fitted slope of the log-quantity against `ln u` over the window.
    pub slope: T,
}

const SLOPE_THRESHOLD: f64 = 0.25;
const NEGLIGIBLE_LOG: f64 = -40.0;
const TAIL_WINDOW_TOP: f64 = 1000.0;

impl<T: Real> GSpec<T> {
    fn from_kind(kind: GKind<T>) -> Result<Self> {
        let g = GSpec {
            kind,
            overflow_cap: default_cap(),
            truncation: None,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn exact_growth(k: T, p: T) -> Result<Self> {
        Self::from_kind(GKind::ExactGrowth { k, p })
    }

    pub fn exp_minus_one(alpha: T) -> Result<Self> {
        Self::from_kind(GKind::ExpMinusOne { alpha })
    }

    pub fn theorem_form(k: T) -> Result<Self> {
        Self::from_kind(GKind::TheoremForm { k })
    }

    pub fn custom(samples: Vec<(T, T)>) -> Result<Self> {
        Self::from_kind(GKind::Custom { samples })
    }

    /// `g(u) = c |u|^q`, represented exactly by a two-sample custom table.
    pub fn power(c: T, q: T) -> Result<Self> {
        let lc = c.ln();
        Self::custom(vec![(T::one(), lc), (T::E(), lc + q)])
    }

    pub fn with_overflow_cap(mut self, cap: T) -> Self {
        self.overflow_cap = cap;
        self
    }

    /// `g^L(u) = g(u)` for `|u| <= L`, `g(L sign u)` beyond.
    pub fn truncated(mut self, level: T) -> Self {
        self.truncation = Some(level);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidGSpec(m.to_string()));
        match &self.kind {
            GKind::ExactGrowth { k, p } => {
                if !(*k > T::zero()) || !k.is_finite() {
                    return bad("K must be positive");
                }
                if !(*p >= T::zero()) || !p.is_finite() {
                    return bad("p must be nonnegative");
                }
            }
            GKind::ExpMinusOne { alpha } => {
                if !(*alpha > T::zero()) || !alpha.is_finite() {
                    return bad("alpha must be positive");
                }
            }
            GKind::TheoremForm { k } => {
                if !(*k > T::zero()) || !k.is_finite() {
                    return bad("K must be positive");
                }
            }
            GKind::Custom { samples } => {
                if samples.len() < 2 {
                    return bad("custom table needs at least two samples");
                }
                for w in samples.windows(2) {
                    if !(w[1].0 > w[0].0) {
                        return bad("custom abscissae must be strictly increasing");
                    }
                }
                if samples.iter().any(|(u, lg)| !(*u > T::zero()) || !u.is_finite() || !lg.is_finite()) {
                    return bad("custom samples must be finite with u > 0");
                }
            }
        }
        if let Some(l) = self.truncation {
            if !(l > T::zero()) {
                return bad("truncation level must be positive");
            }
        }
        Ok(())
    }

    /// `ln g(u)`; `-inf` where `g` vanishes. Never overflows.
    pub fn log_g(&self, u: T) -> T {
        let mut a = u.abs();
        if let Some(l) = self.truncation {
            a = a.min(l);
        }
        match &self.kind {
            GKind::ExactGrowth { k, p } => {
                let x = T::lit(2.0) * a * a / *k;
                ln_expm1(x) - *p * a.ln_1p()
            }
            GKind::ExpMinusOne { alpha } => ln_expm1(*alpha * a * a),
            GKind::TheoremForm { k } => {
                if a == T::zero() {
                    return T::neg_infinity();
                }
                T::lit(-2.0) * a.ln().abs() + T::lit(2.0) * a * a / *k
            }
            GKind::Custom { samples } => custom_log_g(samples, a),
        }
    }

    /// `ln g(u) - c u^2` with `c` the [`exponent_coeff`](Self::exponent_coeff)
    /// (zero if none), evaluated without forming `c u^2`.
    pub fn log_g_rest(&self, u: T) -> T {
        let a = u.abs();
        if let Some(l) = self.truncation {
            if a > l {
                let c = self.exponent_coeff().unwrap_or(T::zero());
                return self.log_g(l) - c * a * a;
            }
        }
        let ln_one_minus_exp_neg = |x: T| {
            if x == T::zero() {
                T::neg_infinity()
            } else if x > T::LN_2() {
                (-(-x).exp()).ln_1p()
            } else {
                (-(-x).exp_m1()).ln()
            }
        };
        match &self.kind {
            GKind::ExactGrowth { k, p } => ln_one_minus_exp_neg(T::lit(2.0) * a * a / *k) - *p * a.ln_1p(),
            GKind::ExpMinusOne { alpha } => ln_one_minus_exp_neg(*alpha * a * a),
            GKind::TheoremForm { .. } => {
                if a == T::zero() {
                    return T::neg_infinity();
                }
                T::lit(-2.0) * a.ln().abs()
            }
            GKind::Custom { samples } => custom_log_g(samples, a),
        }
    }

    /// Direct evaluation; fails when `ln g` exceeds the overflow cap.
    pub fn eval(&self, u: T) -> Result<T> {
        let lg = self.log_g(u);
        if lg > self.overflow_cap {
            return Err(Error::Overflow { log_value: lg.as_f64() });
        }
        Ok(lg.exp())
    }

    /// Coefficient `c` of the dominant `e^{c u^2}` factor, if any.
    pub fn exponent_coeff(&self) -> Option<T> {
        match &self.kind {
            GKind::ExactGrowth { k, .. } | GKind::TheoremForm { k } => Some(T::lit(2.0) / *k),
            GKind::ExpMinusOne { alpha } => Some(*alpha),
            GKind::Custom { .. } => None,
        }
    }

    /// Amplitudes where `g` is not smooth.
    pub fn kinks(&self) -> Vec<T> {
        let mut out = match &self.kind {
            GKind::TheoremForm { .. } => vec![T::one()],
            GKind::Custom { samples } => samples.iter().map(|s| s.0).collect(),
            _ => Vec::new(),
        };
        if let Some(l) = self.truncation {
            out.push(l);
        }
        out
    }

    /// Largest amplitude at which `e^{2u^2/K}` stays below the overflow cap.
    pub fn amplitude_cap(&self, k: T) -> T {
        (self.overflow_cap * k / T::lit(2.0)).sqrt()
    }

    /// Estimate `limsup_{u -> inf} e^{-2u^2/K} u^2 g(u)` on a geometric grid
    /// with 64 points per decade over the half decade below
    /// `max(1000, amplitude cap)`. `ln g` is evaluated in closed form, so the
    /// window does not need to respect the overflow cap.
    pub fn infinity_tail(&self, k: T) -> TailEstimate<T> {
        let u_max = self.amplitude_cap(k).max(T::lit(TAIL_WINDOW_TOP));
        let q = |u: T| T::lit(2.0) * u.ln() + self.log_g(u) - T::lit(2.0) * u * u / k;
        let lo = u_max / T::lit(10f64.sqrt());
        classify(q, lo.max(T::one()), u_max, |slope| {
            if slope > T::lit(SLOPE_THRESHOLD) {
                Some(TailClass::Infinite)
            } else if slope < -T::lit(SLOPE_THRESHOLD) {
                Some(TailClass::Zero)
            } else {
                None
            }
        })
    }

    /// Estimate `limsup_{u -> 0} u^-2 g(u)` on `u in [1e-6, 1e-3]`.
    pub fn origin_tail(&self) -> TailEstimate<T> {
        let q = |u: T| self.log_g(u) - T::lit(2.0) * u.ln();
        // Walking u downward: a positive slope in ln u means q falls as u -> 0.
        classify(q, T::lit(1e-6), T::lit(1e-3), |slope| {
            if slope < -T::lit(SLOPE_THRESHOLD) {
                Some(TailClass::Infinite)
            } else if slope > T::lit(SLOPE_THRESHOLD) {
                Some(TailClass::Zero)
            } else {
                None
            }
        })
    }

    /// Condition (1): both limsups finite.
    pub fn satisfies_boundedness(&self, k: T) -> bool {
        self.infinity_tail(k).class != TailClass::Infinite
            && self.origin_tail().class != TailClass::Infinite
    }
}

fn classify<T: Real, Q: Fn(T) -> T, S: Fn(T) -> Option<TailClass<T>>>(
    q: Q,
    lo: T,
    hi: T,
    by_slope: S,
) -> TailEstimate<T> {
    let decades = (hi / lo).log10().max(T::lit(1.0 / 64.0));
    let n = (decades * T::lit(64.0)).ceil().to_usize().unwrap_or(1).max(2);
    let xs: Vec<T> = (0..=n)
        .map(|i| lo.ln() + (hi.ln() - lo.ln()) * T::lit(i as f64) / T::lit(n as f64))
        .collect();
    let ys: Vec<T> = xs.iter().map(|&x| q(x.exp())).collect();
    let log_level = ys.iter().copied().fold(T::neg_infinity(), T::max);
    let slope = if ys.iter().all(|y| y.is_finite()) {
        let m = T::lit(xs.len() as f64);
        let mx = xs.iter().copied().sum::<T>() / m;
        let my = ys.iter().copied().sum::<T>() / m;
        let sxy = xs.iter().zip(&ys).map(|(&x, &y)| (x - mx) * (y - my)).sum::<T>();
        let sxx = xs.iter().map(|&x| (x - mx) * (x - mx)).sum::<T>();
        sxy / sxx
    } else {
        T::nan()
    };
    let class = if !(log_level > T::lit(NEGLIGIBLE_LOG)) || slope.is_nan() {
        TailClass::Zero
    } else {
        by_slope(slope).unwrap_or(TailClass::Finite(log_level.exp()))
    };
    TailEstimate {
        class,
        log_level,
        slope,
    }
}

fn custom_log_g<T: Real>(samples: &[(T, T)], a: T) -> T {
    let x = a.ln();
    if x == T::neg_infinity() {
        let s0 = slope(samples, 0);
        return if s0 > T::zero() {
            T::neg_infinity()
        } else if s0 == T::zero() {
            samples[0].1
        } else {
            T::infinity()
        };
    }
    let n = samples.len();
    let idx = samples.partition_point(|s| s.0 <= a);
    let i = idx.clamp(1, n - 1) - 1;
    let (u0, l0) = samples[i];
    l0 + slope(samples, i) * (x - u0.ln())
}

fn slope<T: Real>(samples: &[(T, T)], i: usize) -> T {
    let (u0, l0) = samples[i];
    let (u1, l1) = samples[i + 1];
    (l1 - l0) / (u1.ln() - u0.ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_growth_matches_direct_formula() {
        let g = GSpec::exact_growth(1.0_f64, 2.0).unwrap();
        for &u in &[0.01, 0.5, 1.0, 3.0, -3.0] {
            let direct = ((2.0f64 * u * u).exp() - 1.0) / (1.0 + f64::abs(u)).powi(2);
            let v = g.eval(u).unwrap();
            assert!((v - direct).abs() <= 1e-12 * direct, "u={u}: {v} vs {direct}");
        }
        assert_eq!(g.eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn theorem_form_is_continuous_at_one() {
        let g = GSpec::theorem_form(1.0_f64).unwrap();
        let a = g.log_g(1.0 - 1e-12);
        let b = g.log_g(1.0 + 1e-12);
        assert!((a - b).abs() < 1e-10);
        assert!((g.eval(2.0).unwrap() - (8f64).exp() / 4.0).abs() < 1e-9);
    }

    #[test]
    fn rest_plus_exponent_is_log_g() {
        let specs = [
            GSpec::<f64>::exact_growth(0.7, 1.5).unwrap(),
            GSpec::exp_minus_one(2.0).unwrap(),
            GSpec::theorem_form(1.0).unwrap(),
            GSpec::power(2.0, 3.0).unwrap(),
            GSpec::exp_minus_one(2.0).unwrap().truncated(1.5),
        ];
        for g in &specs {
            let c = g.exponent_coeff().unwrap_or(0.0);
            for &u in &[1e-4, 0.3, 1.0, 2.5, -4.0, 11.0] {
                let full = g.log_g(u);
                let split = c * u * u + g.log_g_rest(u);
                assert!((full - split).abs() <= 1e-12 * full.abs().max(1.0), "{g:?} at {u}: {full} vs {split}");
            }
        }
    }

    #[test]
    fn overflow_cap_is_enforced() {
        let g = GSpec::theorem_form(1.0_f64).unwrap();
        assert!(g.eval(18.0).is_ok());
        assert!(matches!(g.eval(18.5), Err(Error::Overflow { .. })));
        assert!(g.log_g(100.0).is_finite());
    }

    #[test]
    fn power_table_is_exact() {
        let g = GSpec::power(1.0_f64, 2.0).unwrap();
        for &u in &[1e-4, 0.3, 1.0, 7.0] {
            assert!((g.eval(u).unwrap() - u * u).abs() < 1e-12 * (u * u).max(1.0));
        }
        assert_eq!(g.eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn truncation_clamps() {
        let g = GSpec::exp_minus_one(1.0_f64).unwrap().truncated(2.0);
        assert_eq!(g.log_g(5.0), g.log_g(2.0));
        assert!(g.log_g(1.0) < g.log_g(2.0));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(GSpec::exact_growth(0.0_f64, 2.0).is_err());
        assert!(GSpec::exact_growth(1.0_f64, -1.0).is_err());
        assert!(GSpec::custom(vec![(1.0_f64, 0.0)]).is_err());
        assert!(GSpec::custom(vec![(1.0_f64, 0.0), (0.5, 1.0)]).is_err());
    }

    #[test]
    fn tail_classification() {
        let k = 1.0_f64;
        let sub = GSpec::exact_growth(k, 1.5).unwrap().infinity_tail(k);
        assert_eq!(sub.class, TailClass::Infinite, "{sub:?}");
        let exact = GSpec::exact_growth(k, 2.0).unwrap().infinity_tail(k);
        assert!(matches!(exact.class, TailClass::Finite(_)), "{exact:?}");
        let thm = GSpec::theorem_form(k).unwrap().infinity_tail(k);
        match thm.class {
            TailClass::Finite(v) => assert!((v - 1.0).abs() < 1e-6),
            other => panic!("{other:?}"),
        }
        let weak = GSpec::exp_minus_one(1.0).unwrap().infinity_tail(k);
        assert_eq!(weak.class, TailClass::Zero);
        let strong = GSpec::exact_growth(k, 3.0).unwrap().infinity_tail(k);
        assert_eq!(strong.class, TailClass::Zero, "{strong:?}");

        assert!(matches!(GSpec::exact_growth(k, 2.0).unwrap().origin_tail().class, TailClass::Finite(_)));
        match GSpec::theorem_form(k).unwrap().origin_tail().class {
            TailClass::Finite(v) => assert!((v - 1.0).abs() < 1e-5, "{v}"),
            other => panic!("{other:?}"),
        }
        assert_eq!(GSpec::power(1.0, 1.0).unwrap().origin_tail().class, TailClass::Infinite);
        assert_eq!(GSpec::power(1.0, 3.0).unwrap().origin_tail().class, TailClass::Zero);
    }
}
