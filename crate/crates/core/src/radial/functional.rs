//! Nonlinear functionals of radial profiles.

use crate::error::{Error, Result};
use crate::quadrature::{LogIntegral, LogQuadrature, QuadPart};
use crate::radial::gspec::GSpec;
use crate::radial::profile::{Interp, RadialProfile, RightExtension};
use crate::real::Real;

/// Cap on the number of exponent-level breakpoints per integral.
const MAX_LEVEL_SPLITS: usize = 2000;
/// Target change of the exponent `c phi^2` between breakpoints.
const EXPONENT_STEP: f64 = 0.5;

/// How `ln f(u)` should be integrated against a profile.
///
/// `f` is passed as `ln f(u) = c u^2 + rest(u)`; keeping the `c u^2` part
/// symbolic lets long segments be integrated in coordinates local to their
/// endpoints, where `c phi^2 + 2 t` no longer cancels catastrophically.
#[derive(Debug, Clone, Default)]
pub struct SplitHints<T> {
    /// The coefficient `c` (zero when absent).
    pub exponent_coeff: Option<T>,
    /// Amplitudes where `f` has kinks.
    pub kinks: Vec<T>,
}

impl<T: Real> SplitHints<T> {
    pub fn from_gspec(g: &GSpec<T>) -> Self {
        SplitHints {
            exponent_coeff: g.exponent_coeff(),
            kinks: g.kinks(),
        }
    }
}

impl<T: Real> RadialProfile<T> {
    /// `ln integral_{lo < ln|x| < hi} f(phi(x)) dx` with
    /// `ln f(u) = c u^2 + log_rest(u)`, `c` taken from `hints`.
    pub fn log_integral<F: Fn(T) -> T>(
        &self,
        log_rest: F,
        lo: T,
        hi: T,
        hints: &SplitHints<T>,
        quad: &LogQuadrature<T>,
    ) -> Result<LogIntegral<T>> {
        let knots = self.knots();
        let values = self.values();
        let n = knots.len();
        let two = T::lit(2.0);
        let c = hints.exponent_coeff.unwrap_or(T::zero());
        let log_f = |u: T| {
            let r = log_rest(u);
            if r == T::neg_infinity() {
                r
            } else {
                c * u * u + r
            }
        };
        let mut total = LogIntegral::zero();
        if !(hi > lo) {
            return Ok(total);
        }

        // Inner plateau: f(phi_0) * pi * (r_top^2 - r_lo^2).
        if lo < knots[0] {
            let top = knots[0].min(hi);
            let u0 = self.center_value();
            let rest = log_rest(u0);
            if rest != T::neg_infinity() && top > lo {
                let mut v = T::PI().ln() + rest + (c * u0).mul_add(u0, two * top);
                if lo != T::neg_infinity() {
                    v = v + (-(two * (lo - top)).exp()).ln_1p();
                }
                total = total.add(LogIntegral {
                    log_value: v,
                    log_error: v + T::epsilon().ln(),
                    pieces: 0,
                    converged: true,
                });
            }
        }

        // Outer extension.
        if hi > knots[n - 1] {
            let outer = match self.right() {
                RightExtension::Zero => T::zero(),
                RightExtension::Constant => values[n - 1],
            };
            let lf = log_f(outer);
            if lf != T::neg_infinity() {
                if hi == T::infinity() {
                    return Err(Error::InfiniteMass);
                }
                let bottom = knots[n - 1].max(lo);
                let v = lf + T::PI().ln() + two * hi + (-(two * (bottom - hi)).exp()).ln_1p();
                total = total.add(LogIntegral {
                    log_value: v,
                    log_error: v + T::epsilon().ln(),
                    pieces: 0,
                    converged: true,
                });
            }
        }

        // Segments, split at amplitude levels.
        let a = knots[0].max(lo);
        let b = knots[n - 1].min(hi);
        if b > a {
            let mut cuts: Vec<T> = Vec::new();
            let mut levels: Vec<T> = hints.kinks.clone();
            levels.push(T::zero());
            if c > T::zero() {
                let top = self.max_abs();
                let span = c * top * top;
                let step = T::lit(EXPONENT_STEP).max(span / T::lit(MAX_LEVEL_SPLITS as f64));
                let mut m = step;
                while m < span {
                    levels.push((m / c).sqrt());
                    m = m + step;
                }
            }
            for level in levels {
                cuts.extend(self.level_crossings(level).into_iter().filter(|t| *t > a && *t < b));
            }
            cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
            cuts.dedup();

            let ln_two_pi = T::two_pi().ln();
            // Each log-linear segment is integrated as two halves, in the offset
            // `s = t - t_e` from the nearer endpoint `t_e`:
            // `ln f + 2t = C_e + s (2 c phi_e m + 2) + c m^2 s^2 + rest(phi_e + m s)`.
            let mut integrands: Vec<Box<dyn Fn(T) -> T + '_>> = Vec::new();
            let mut breakpoints: Vec<Vec<T>> = Vec::new();
            for i in 0..n - 1 {
                let (t0, t1) = (knots[i], knots[i + 1]);
                let (s_lo, s_hi) = (t0.max(a), t1.min(b));
                if !(s_hi > s_lo) {
                    continue;
                }
                let inner: Vec<T> = cuts.iter().copied().filter(|t| *t > s_lo && *t < s_hi).collect();
                match self.segments()[i] {
                    Interp::Linear => {
                        let f = move |t: T| {
                            let lf = log_f(self.value_at_log(t));
                            if lf == T::neg_infinity() {
                                lf
                            } else {
                                lf + two * t + ln_two_pi
                            }
                        };
                        let mut bp = vec![s_lo];
                        bp.extend(inner);
                        bp.push(s_hi);
                        integrands.push(Box::new(f));
                        breakpoints.push(bp);
                    }
                    Interp::LogLinear => {
                        let m = (values[i + 1] - values[i]) / (t1 - t0);
                        let mid = (t0 + t1) * T::lit(0.5);
                        for (te, ue, h_lo, h_hi) in [(t0, values[i], s_lo, mid.min(s_hi)), (t1, values[i + 1], mid.max(s_lo), s_hi)] {
                            if !(h_hi > h_lo) {
                                continue;
                            }
                            let ce = (c * ue).mul_add(ue, two * te) + ln_two_pi;
                            let lin = two * (c * ue).mul_add(m, T::one());
                            let quad_c = c * m * m;
                            let rest = &log_rest;
                            let f = move |s: T| {
                                let r = rest(m.mul_add(s, ue));
                                if r == T::neg_infinity() {
                                    r
                                } else {
                                    quad_c.mul_add(s * s, lin.mul_add(s, ce)) + r
                                }
                            };
                            let mut bp = vec![h_lo - te];
                            bp.extend(inner.iter().filter(|t| **t > h_lo && **t < h_hi).map(|t| *t - te));
                            bp.push(h_hi - te);
                            integrands.push(Box::new(f));
                            breakpoints.push(bp);
                        }
                    }
                }
            }
            let parts: Vec<QuadPart<'_, T>> = integrands
                .iter()
                .zip(&breakpoints)
                .map(|(f, bp)| QuadPart {
                    log_f: f.as_ref(),
                    breakpoints: bp,
                })
                .collect();
            total = total.add(quad.integrate_parts(&parts));
        }
        Ok(total)
    }

    /// `ln G(phi)` for `G(phi) = integral g(phi(x)) dx`, over the whole plane.
    pub fn g_functional_log(&self, g: &GSpec<T>) -> Result<LogIntegral<T>> {
        self.g_functional_log_between(g, T::neg_infinity(), T::infinity())
    }

    pub fn g_functional_log_between(&self, g: &GSpec<T>, lo: T, hi: T) -> Result<LogIntegral<T>> {
        let quad = LogQuadrature::default();
        let r = self.log_integral(|u| g.log_g_rest(u), lo, hi, &SplitHints::from_gspec(g), &quad)?;
        if !r.converged {
            return Err(Error::QuadratureNotConverged {
                estimate: r.log_value.as_f64(),
                error: r.log_error.as_f64(),
            });
        }
        Ok(r)
    }

    /// `G(phi)`; fails with `Overflow` when the value is not representable.
    pub fn g_functional(&self, g: &GSpec<T>) -> Result<T> {
        let r = self.g_functional_log(g)?;
        if r.log_value > T::max_ln() {
            return Err(Error::Overflow {
                log_value: r.log_value.as_f64(),
            });
        }
        Ok(r.value())
    }

    /// `|phi(r)|^2 r / (||phi||_{L^2} ||grad phi||_{L^2})`, the quantity the
    /// radial Sobolev inequality bounds by an absolute constant.
    pub fn pointwise_radial_bound(&self, r: T) -> Result<T> {
        if !(r > T::zero()) {
            return Err(Error::InvalidArgument("radius must be positive".into()));
        }
        let mass = self.mass()?;
        let energy = self.dirichlet_energy();
        if self.is_zero() || mass == T::zero() || energy == T::zero() {
            return Err(Error::DivisionByZero);
        }
        let v = self.value_at(r);
        Ok(v * v * r / (mass.sqrt() * energy.sqrt()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::profile::LeftExtension;
    use std::f64::consts::PI;

    fn moser(alpha: f64) -> RadialProfile<f64> {
        let h = (alpha / (2.0 * PI)).sqrt();
        RadialProfile::new(vec![-alpha, 0.0], vec![h, 0.0], LeftExtension::Constant, RightExtension::Zero).unwrap()
    }

    #[test]
    fn square_functional_equals_mass() {
        let u2 = GSpec::power(1.0, 2.0).unwrap();
        for p in [moser(1.0), moser(7.0)] {
            let g = p.g_functional(&u2).unwrap();
            let m = p.mass().unwrap();
            assert!(((g - m) / m).abs() < 1e-9, "{g} vs {m}");
        }
    }

    #[test]
    fn zero_profile_gives_zero() {
        let z = RadialProfile::<f64>::zero();
        let g = GSpec::theorem_form(1.0).unwrap();
        assert_eq!(z.g_functional(&g).unwrap(), 0.0);
    }

    #[test]
    fn plateau_lower_bound() {
        let (a, r) = (0.3_f64, 5.0_f64);
        let p = RadialProfile::with_segments(
            vec![r.ln(), (r + 1.0).ln()],
            vec![a, 0.0],
            vec![Interp::Linear],
            LeftExtension::Constant,
            RightExtension::Zero,
        )
        .unwrap();
        let g = GSpec::exp_minus_one(3.0).unwrap();
        let big_g = p.g_functional(&g).unwrap();
        assert!(big_g >= PI * r * r * g.eval(a).unwrap());
    }

    #[test]
    fn monotone_in_g() {
        let p = moser(6.0);
        let small = GSpec::exact_growth(1.0, 2.0).unwrap();
        let large = GSpec::exp_minus_one(2.0).unwrap();
        assert!(p.g_functional(&small).unwrap() <= p.g_functional(&large).unwrap());
    }

    #[test]
    fn huge_amplitude_goes_log_domain() {
        let p = RadialProfile::new(vec![-10.0, 0.0], vec![30.0, 0.0], LeftExtension::Constant, RightExtension::Zero)
            .unwrap();
        let g = GSpec::theorem_form(1.0).unwrap();
        let l = p.g_functional_log(&g).unwrap();
        assert!(l.log_value > 709.0);
        assert!(matches!(p.g_functional(&g), Err(Error::Overflow { .. })));
    }

    #[test]
    fn constant_tail_with_positive_g_is_infinite() {
        let p = RadialProfile::new(vec![0.0, 1.0], vec![1.0, 0.5], LeftExtension::Constant, RightExtension::Constant)
            .unwrap();
        let g = GSpec::exp_minus_one(1.0).unwrap();
        assert_eq!(p.g_functional(&g), Err(Error::InfiniteMass));
    }

    #[test]
    fn pointwise_bound_rejects_zero() {
        assert_eq!(RadialProfile::<f64>::zero().pointwise_radial_bound(1.0), Err(Error::DivisionByZero));
        let r = moser(2.0).pointwise_radial_bound((-2.0f64).exp()).unwrap();
        assert!(r.is_finite() && r > 0.0);
    }
}
