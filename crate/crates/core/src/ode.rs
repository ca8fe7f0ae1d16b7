//! Dormand-Prince 5(4) with step-size control.

use crate::error::{Error, Result};
use crate::real::Real;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// What the observer wants after an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy)]
pub struct Dp45<T> {
    pub atol: T,
    pub rtol: T,
    pub h_max: T,
    pub h_min: T,
}

impl<T: Real> Default for Dp45<T> {
    fn default() -> Self {
        Dp45 {
            atol: T::lit(1e-12),
            rtol: T::lit(1e-12),
            h_max: T::lit(0.25),
            h_min: T::lit(1e-14),
        }
    }
}

fn axpy<T: Real, const N: usize>(y: &[T; N], h: T, k: &[[T; N]; 7], w: &[f64], upto: usize) -> [T; N] {
    let mut out = *y;
    for (s, ks) in k.iter().enumerate().take(upto) {
        let ws = T::lit(w[s]);
        if ws != T::zero() {
            for i in 0..N {
                out[i] = out[i] + h * ws * ks[i];
            }
        }
    }
    out
}

impl<T: Real> Dp45<T> {
    /// Integrate `y' = f(x, y)` from `x0` to `x_end`, calling `observe` after
    /// every accepted step. Returns the last accepted `(x, y)` and step size.
    pub fn integrate<const N: usize, F, O>(
        &self,
        f: F,
        x0: T,
        y0: [T; N],
        x_end: T,
        h0: T,
        mut observe: O,
    ) -> Result<(T, [T; N], T)>
    where
        F: Fn(T, &[T; N]) -> [T; N],
        O: FnMut(T, &[T; N]) -> Control,
    {
        let mut x = x0;
        let mut y = y0;
        let mut h = h0.min(self.h_max).min(x_end - x0);
        let mut k = [[T::zero(); N]; 7];
        k[0] = f(x, &y);
        while x < x_end {
            if x + h > x_end {
                h = x_end - x;
            }
            for s in 1..7 {
                let ys = axpy(&y, h, &k, &A[s], s);
                k[s] = f(x + T::lit(C[s]) * h, &ys);
            }
            let y5 = axpy(&y, h, &k, &B5, 7);
            let mut err = T::zero();
            for i in 0..N {
                let mut e = T::zero();
                for s in 0..7 {
                    e = e + T::lit(B5[s] - B4[s]) * k[s][i];
                }
                let scale = self.atol + self.rtol * y[i].abs().max(y5[i].abs());
                let v = (h * e).abs() / scale;
                if !(v <= err) {
                    err = v;
                }
            }
            if !err.is_finite() {
                h = h * T::lit(0.1);
                if h < self.h_min {
                    return Err(Error::StiffnessFailure { r: x.as_f64() });
                }
                continue;
            }
            if err <= T::one() {
                x = x + h;
                y = y5;
                k[0] = k[6];
                let grow = if err == T::zero() {
                    T::lit(5.0)
                } else {
                    (T::lit(0.9) * err.powf(T::lit(-0.2))).min(T::lit(5.0))
                };
                h = (h * grow).min(self.h_max);
                if observe(x, &y) == Control::Stop {
                    return Ok((x, y, h));
                }
            } else {
                h = h * (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.1));
                if h < self.h_min {
                    return Err(Error::StiffnessFailure { r: x.as_f64() });
                }
            }
        }
        Ok((x, y, h))
    }
}
