//! Adaptive Gauss-Kronrod (7/15) quadrature carried out in log space.
//!
//! The integrands met in this crate look like `exp(2 phi(t)^2 / K + 2 t)`:
//! their magnitude spans hundreds of orders over a single profile segment.
//! Every piece is therefore stored as `(ln value, ln error)` and combined with
//! log-sum-exp, so the total never overflows before it is reported.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::real::Real;

const SIGNIFICANT_LOG_RANGE: f64 = 60.0;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of a log-domain integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogIntegral<T> {
    /// `ln` of the integral (`-inf` for an identically zero integrand).
    pub log_value: T,
    /// `ln` of the estimated absolute error.
    pub log_error: T,
    pub pieces: usize,
    pub converged: bool,
}

impl<T: Real> LogIntegral<T> {
    pub fn zero() -> Self {
        LogIntegral {
            log_value: T::neg_infinity(),
            log_error: T::neg_infinity(),
            pieces: 0,
            converged: true,
        }
    }

    pub fn value(&self) -> T {
        self.log_value.exp()
    }

    /// Combine two disjoint integrals.
    pub fn add(self, other: Self) -> Self {
        LogIntegral {
            log_value: self.log_value.log_add_exp(other.log_value),
            log_error: self.log_error.log_add_exp(other.log_error),
            pieces: self.pieces + other.pieces,
            converged: self.converged && other.converged,
        }
    }
}

/// Adaptive integrator settings.
#[derive(Debug, Clone, Copy)]
pub struct LogQuadrature<T> {
    pub rel_tol: T,
    pub max_pieces: usize,
    /// Initial intervals longer than this are pre-split geometrically from
    /// both ends so that features of unit width near an endpoint are seen.
    pub geometric_split_above: T,
}

impl<T: Real> Default for LogQuadrature<T> {
    fn default() -> Self {
        LogQuadrature {
            rel_tol: T::lit(1e-10).max(T::lit(64.0) * T::epsilon()),
            max_pieces: 20_000,
            geometric_split_above: T::lit(8.0),
        }
    }
}

/// One summand of [`LogQuadrature::integrate_parts`].
pub struct QuadPart<'a, T> {
    pub log_f: &'a dyn Fn(T) -> T,
    pub breakpoints: &'a [T],
}

#[derive(Debug, Clone, Copy)]
struct Piece<T> {
    part: usize,
    a: T,
    b: T,
    log_val: T,
    log_err: T,
}

struct ByError<T>(Piece<T>);

impl<T: Real> PartialEq for ByError<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Real> Eq for ByError<T> {}
impl<T: Real> PartialOrd for ByError<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for ByError<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.log_err.as_f64().total_cmp(&other.0.log_err.as_f64())
    }
}

fn gk15<T: Real>(log_f: &dyn Fn(T) -> T, part: usize, a: T, b: T) -> Piece<T> {
    let half = (b - a) * T::lit(0.5);
    let center = (a + b) * T::lit(0.5);
    let mut logs = [T::zero(); 15];
    for (i, &x) in XGK.iter().enumerate() {
        let dx = half * T::lit(x);
        if i < 7 {
            logs[2 * i] = log_f(center - dx);
            logs[2 * i + 1] = log_f(center + dx);
        } else {
            logs[14] = log_f(center);
        }
    }
    let m = logs.iter().copied().fold(T::neg_infinity(), T::max);
    let mut piece = Piece {
        part,
        a,
        b,
        log_val: T::neg_infinity(),
        log_err: T::neg_infinity(),
    };
    if m.is_finite() {
        let scaled = |i: usize| (logs[i] - m).exp();
        let mut kron = T::zero();
        let mut gauss = T::zero();
        for i in 0..7 {
            let s = scaled(2 * i) + scaled(2 * i + 1);
            kron = kron + T::lit(WGK[i]) * s;
            if i % 2 == 1 {
                gauss = gauss + T::lit(WG[i / 2]) * s;
            }
        }
        kron = kron + T::lit(WGK[7]) * scaled(14);
        gauss = gauss + T::lit(WG[3]) * scaled(14);
        piece.log_val = m + (kron * half).ln();
        let diff = (kron - gauss).abs() * half;
        piece.log_err = if diff > T::zero() { m + diff.ln() } else { T::neg_infinity() };
        // A floor at a few ulps of the value keeps the error model honest.
        let floor = piece.log_val + (T::epsilon() * T::lit(50.0)).ln();
        piece.log_err = piece.log_err.max(floor);
    } else if m == T::infinity() || m.is_nan() {
        piece.log_val = m;
        piece.log_err = m;
        return piece;
    }
    // Endpoint probe: when an endpoint is far above every interior node, the
    // interval is unresolved regardless of the Gauss/Kronrod agreement.
    let end = log_f(a).max(log_f(b));
    if end.is_finite() && end > m + T::lit(2.0) {
        let width = (b - a).min(T::one());
        piece.log_err = piece.log_err.max(end + width.ln());
    }
    piece
}

fn geometric_split<T: Real>(a: T, b: T, above: T, out: &mut Vec<(T, T)>) {
    let len = b - a;
    if !(len > above) {
        out.push((a, b));
        return;
    }
    let mid = (a + b) * T::lit(0.5);
    let mut left = vec![a];
    let mut step = T::one();
    while left.last().copied().unwrap() + step < mid {
        let next = left.last().copied().unwrap() + step;
        left.push(next);
        step = step * T::lit(2.0);
    }
    let mut right = vec![b];
    step = T::one();
    while right.last().copied().unwrap() - step > mid {
        let next = right.last().copied().unwrap() - step;
        right.push(next);
        step = step * T::lit(2.0);
    }
    left.push(mid);
    right.reverse();
    let pts: Vec<T> = left.into_iter().chain(right).collect();
    for w in pts.windows(2) {
        if w[1] > w[0] {
            out.push((w[0], w[1]));
        }
    }
}

impl<T: Real> LogQuadrature<T> {
    /// `ln` of `integral exp(log_f(t)) dt` over `[breakpoints[0], breakpoints[last]]`.
    ///
    /// `breakpoints` must be sorted; consecutive points bound the initial
    /// intervals. `log_f` may return `-inf` (zero integrand).
    pub fn integrate<F: Fn(T) -> T>(&self, log_f: F, breakpoints: &[T]) -> LogIntegral<T> {
        self.integrate_parts(&[QuadPart { log_f: &log_f, breakpoints }])
    }

    /// Sum of several integrals, each in its own coordinate, refined against
    /// one shared tolerance.
    pub fn integrate_parts(&self, parts: &[QuadPart<'_, T>]) -> LogIntegral<T> {
        let mut initial = Vec::new();
        let mut tops = Vec::new();
        for (k, part) in parts.iter().enumerate() {
            let ends: Vec<T> = part.breakpoints.iter().map(|&t| (part.log_f)(t)).collect();
            tops.push(ends.iter().copied().fold(T::neg_infinity(), T::max));
            initial.push((k, ends));
        }
        let top = tops.iter().copied().fold(T::neg_infinity(), T::max);
        // Long intervals are split geometrically when one of their ends is
        // significant or a zero of the integrand (a peak may hide next to it).
        let significant = |e: T| e == T::neg_infinity() || e > top - T::lit(SIGNIFICANT_LOG_RANGE);
        let mut heap = BinaryHeap::new();
        let mut frozen: Vec<Piece<T>> = Vec::new();
        let mut intervals = Vec::new();
        for (k, ends) in initial {
            let bp = parts[k].breakpoints;
            for (i, w) in bp.windows(2).enumerate() {
                if w[1] > w[0] {
                    intervals.clear();
                    if significant(ends[i]) || significant(ends[i + 1]) {
                        geometric_split(w[0], w[1], self.geometric_split_above, &mut intervals);
                    } else {
                        intervals.push((w[0], w[1]));
                    }
                    for &(a, b) in &intervals {
                        heap.push(ByError(gk15(parts[k].log_f, k, a, b)));
                    }
                }
            }
        }
        if heap.is_empty() {
            return LogIntegral::zero();
        }
        let mut count = heap.len();

        let totals = |heap: &BinaryHeap<ByError<T>>, frozen: &[Piece<T>]| {
            let mut v = T::neg_infinity();
            let mut e = T::neg_infinity();
            for p in heap.iter().map(|p| &p.0).chain(frozen.iter()) {
                v = v.log_add_exp(p.log_val);
                e = e.log_add_exp(p.log_err);
            }
            (v, e)
        };
        let log_tol = self.rel_tol.ln();
        let (mut log_val, mut log_err) = totals(&heap, &frozen);
        let mut since_exact = 0usize;
        let mut converged = false;
        loop {
            if !log_val.is_finite() && log_val != T::neg_infinity() {
                break;
            }
            if log_err <= log_val + log_tol || log_err == T::neg_infinity() {
                let (v, e) = totals(&heap, &frozen);
                log_val = v;
                log_err = e;
                if log_err <= log_val + log_tol || log_err == T::neg_infinity() {
                    converged = true;
                    break;
                }
            }
            if count >= self.max_pieces {
                break;
            }
            let Some(ByError(worst)) = heap.pop() else { break };
            let mid = (worst.a + worst.b) * T::lit(0.5);
            if !(mid > worst.a && mid < worst.b) {
                frozen.push(worst);
                if heap.is_empty() {
                    break;
                }
                continue;
            }
            let f = parts[worst.part].log_f;
            let left = gk15(f, worst.part, worst.a, mid);
            let right = gk15(f, worst.part, mid, worst.b);
            count += 1;
            // Incremental update; an exact recount happens before accepting.
            let new_val = left.log_val.log_add_exp(right.log_val);
            let new_err = left.log_err.log_add_exp(right.log_err);
            log_val = log_sub_exp(log_val, worst.log_val).log_add_exp(new_val);
            log_err = log_sub_exp(log_err, worst.log_err).log_add_exp(new_err);
            heap.push(ByError(left));
            heap.push(ByError(right));
            since_exact += 1;
            if since_exact >= 64 {
                let (v, e) = totals(&heap, &frozen);
                log_val = v;
                log_err = e;
                since_exact = 0;
            }
        }
        let (v, e) = totals(&heap, &frozen);
        LogIntegral {
            log_value: v,
            log_error: e,
            pieces: count,
            converged: converged || (e <= v + log_tol) || e == T::neg_infinity(),
        }
    }
}

/// `ln(e^a - e^b)`, clamped to `-inf` when `b >= a`.
fn log_sub_exp<T: Real>(a: T, b: T) -> T {
    if b == T::neg_infinity() {
        return a;
    }
    if b >= a {
        return T::neg_infinity();
    }
    a + (-(b - a).exp()).ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let q = LogQuadrature::<f64>::default();
        // integral of t^2 on [1, 3] = 26/3
        let r = q.integrate(|t| 2.0 * t.ln(), &[1.0, 3.0]);
        assert!((r.value() - 26.0 / 3.0).abs() < 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn huge_exponent_stays_in_log_form() {
        let q = LogQuadrature::<f64>::default();
        // integral of exp(2000 t) on [0, 1] = (e^2000 - 1) / 2000
        let r = q.integrate(|t| 2000.0 * t, &[0.0, 1.0]);
        let expected = 2000.0 - 2000f64.ln();
        assert!((r.log_value - expected).abs() < 1e-9, "{}", r.log_value);
    }

    #[test]
    fn endpoint_spike_on_long_interval_is_found() {
        let q = LogQuadrature::<f64>::default();
        // exp(-(t - a)) on a very long interval: mass 1 sits at the left end.
        let a = -1e10;
        let r = q.integrate(|t| -(t - a), &[a, 0.0]);
        assert!((r.value() - 1.0).abs() < 1e-9, "{}", r.value());
    }

    #[test]
    fn zero_integrand() {
        let q = LogQuadrature::<f64>::default();
        let r = q.integrate(|_| f64::NEG_INFINITY, &[0.0, 1.0, 2.0]);
        assert_eq!(r.log_value, f64::NEG_INFINITY);
        assert!(r.converged);
    }

    #[test]
    fn gaussian_integral() {
        let q = LogQuadrature::<f64>::default();
        let r = q.integrate(|t| -t * t, &[-40.0, 40.0]);
        assert!((r.value() - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn f32_smoke() {
        let q = LogQuadrature::<f32> {
            rel_tol: 1e-5,
            ..Default::default()
        };
        let r = q.integrate(|t| t, &[0.0, 1.0]);
        assert!((r.value() - (1f32.exp() - 1.0)).abs() < 1e-5);
    }
}
