//! Radial profiles, piecewise linear in log-radius.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Behaviour of the profile inside the first knot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeftExtension {
    /// Plateau at the first value for `r < r_0`.
    Constant,
    /// Zero for `r < r_0`; the first value must then be 0.
    Zero,
}

/// Behaviour of the profile beyond the last knot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RightExtension {
    /// Zero beyond the last knot; the last value must then be 0.
    Zero,
    /// Constant at the last value.
    Constant,
}

/// Interpolation rule on one segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interp {
    /// Linear in `t = ln r` (the Moser / log-cap shape).
    LogLinear,
    /// Linear in `r` (the unit ramp of the plateau sequences).
    Linear,
}

/// A radial function `phi(|x|)` on the plane.
///
/// Knots are log-radii `t_i = ln r_i`. Energy and mass are exact closed forms
/// per segment; nonlinear functionals go through log-domain quadrature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileRepr<T>", into = "ProfileRepr<T>", bound = "T: Real")]
pub struct RadialProfile<T> {
    knots: Vec<T>,
    values: Vec<T>,
    segments: Vec<Interp>,
    left: LeftExtension,
    right: RightExtension,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
struct ProfileRepr<T> {
    knots: Vec<T>,
    values: Vec<T>,
    left: LeftExtension,
    right: RightExtension,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    segments: Option<Vec<Interp>>,
}

impl<T: Real> TryFrom<ProfileRepr<T>> for RadialProfile<T> {
    type Error = Error;
    fn try_from(r: ProfileRepr<T>) -> Result<Self> {
        let n = r.knots.len().saturating_sub(1);
        let segments = r.segments.unwrap_or_else(|| vec![Interp::LogLinear; n]);
        RadialProfile::with_segments(r.knots, r.values, segments, r.left, r.right)
    }
}

impl<T: Real> From<RadialProfile<T>> for ProfileRepr<T> {
    fn from(p: RadialProfile<T>) -> Self {
        let all_log = p.segments.iter().all(|s| *s == Interp::LogLinear);
        ProfileRepr {
            knots: p.knots,
            values: p.values,
            left: p.left,
            right: p.right,
            segments: if all_log { None } else { Some(p.segments) },
        }
    }
}

/// One segment clipped to a sub-range, in local form.
#[derive(Debug, Clone, Copy)]
struct Piece<T> {
    ta: T,
    tb: T,
    fa: T,
    fb: T,
    interp: Interp,
}

impl<T: Real> RadialProfile<T> {
    /// All-log-linear profile.
    pub fn new(knots: Vec<T>, values: Vec<T>, left: LeftExtension, right: RightExtension) -> Result<Self> {
        let n = knots.len().saturating_sub(1);
        Self::with_segments(knots, values, vec![Interp::LogLinear; n], left, right)
    }

    pub fn with_segments(
        knots: Vec<T>,
        values: Vec<T>,
        segments: Vec<Interp>,
        left: LeftExtension,
        right: RightExtension,
    ) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidProfile(m));
        if knots.len() < 2 {
            return bad("need at least two knots".into());
        }
        if values.len() != knots.len() {
            return bad(format!("{} knots but {} values", knots.len(), values.len()));
        }
        if segments.len() != knots.len() - 1 {
            return bad("one interpolation rule per segment required".into());
        }
        if knots.iter().chain(values.iter()).any(|x| !x.is_finite()) {
            return bad("knots and values must be finite".into());
        }
        if let Some(i) = knots.windows(2).position(|w| !(w[1] > w[0])) {
            return bad(format!("knots not strictly increasing at index {i}"));
        }
        if right == RightExtension::Zero && *values.last().unwrap() != T::zero() {
            return bad("right extension is zero but the last value is not 0".into());
        }
        if left == LeftExtension::Zero && values[0] != T::zero() {
            return bad("left extension is zero but the first value is not 0".into());
        }
        Ok(RadialProfile {
            knots,
            values,
            segments,
            left,
            right,
        })
    }

    /// Identically zero profile.
    pub fn zero() -> Self {
        Self::new(
            vec![T::zero(), T::one()],
            vec![T::zero(), T::zero()],
            LeftExtension::Constant,
            RightExtension::Zero,
        )
        .expect("valid")
    }

    /// Log-linear interpolation of samples `(r_i, phi_i)`, `r_i > 0` increasing.
    pub fn from_radial_samples(
        radii: &[T],
        values: &[T],
        left: LeftExtension,
        right: RightExtension,
    ) -> Result<Self> {
        if radii.iter().any(|r| !(*r > T::zero())) {
            return Err(Error::InvalidProfile("radii must be positive".into()));
        }
        Self::new(radii.iter().map(|r| r.ln()).collect(), values.to_vec(), left, right)
    }

    pub fn knots(&self) -> &[T] {
        &self.knots
    }
    pub fn values(&self) -> &[T] {
        &self.values
    }
    pub fn segments(&self) -> &[Interp] {
        &self.segments
    }
    pub fn left(&self) -> LeftExtension {
        self.left
    }
    pub fn right(&self) -> RightExtension {
        self.right
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == T::zero())
    }

    /// Value at the origin.
    pub fn center_value(&self) -> T {
        match self.left {
            LeftExtension::Constant => self.values[0],
            LeftExtension::Zero => T::zero(),
        }
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    fn segment_value(&self, i: usize, t: T) -> T {
        let (ta, tb) = (self.knots[i], self.knots[i + 1]);
        let (fa, fb) = (self.values[i], self.values[i + 1]);
        interp_value(self.segments[i], ta, tb, fa, fb, t)
    }

    /// `phi` at log-radius `t`.
    pub fn value_at_log(&self, t: T) -> T {
        let n = self.knots.len();
        if t <= self.knots[0] {
            return match self.left {
                LeftExtension::Constant => self.values[0],
                LeftExtension::Zero => T::zero(),
            };
        }
        if t >= self.knots[n - 1] {
            return match self.right {
                RightExtension::Constant => self.values[n - 1],
                RightExtension::Zero => T::zero(),
            };
        }
        let i = self.knots.partition_point(|k| *k <= t) - 1;
        self.segment_value(i, t)
    }

    /// `phi` at radius `r > 0`.
    pub fn value_at(&self, r: T) -> T {
        self.value_at_log(r.ln())
    }

    /// Segments clipped to `lo < t < hi`.
    fn pieces(&self, lo: T, hi: T) -> Vec<Piece<T>> {
        let mut out = Vec::new();
        for i in 0..self.segments.len() {
            let (ta, tb) = (self.knots[i], self.knots[i + 1]);
            let a = ta.max(lo);
            let b = tb.min(hi);
            if !(b > a) {
                continue;
            }
            let fa = if a == ta { self.values[i] } else { self.segment_value(i, a) };
            let fb = if b == tb { self.values[i + 1] } else { self.segment_value(i, b) };
            out.push(Piece {
                ta: a,
                tb: b,
                fa,
                fb,
                interp: self.segments[i],
            });
        }
        out
    }

    /// `||grad phi||^2_{L^2(R^2)}`.
    pub fn dirichlet_energy(&self) -> T {
        self.energy_between(T::neg_infinity(), T::infinity())
    }

    /// Dirichlet energy over the annulus `lo < ln|x| < hi`.
    pub fn energy_between(&self, lo: T, hi: T) -> T {
        self.pieces(lo, hi).iter().map(piece_energy).sum()
    }

    /// Dirichlet energy over `|x| > r`.
    pub fn energy_outside(&self, r: T) -> T {
        self.energy_between(r.ln(), T::infinity())
    }

    /// `||phi||^2_{L^2(R^2)}`.
    pub fn mass(&self) -> Result<T> {
        self.mass_between(T::neg_infinity(), T::infinity())
    }

    /// `L^2` mass over the annulus `lo < ln|x| < hi`.
    pub fn mass_between(&self, lo: T, hi: T) -> Result<T> {
        let n = self.knots.len();
        let last = self.values[n - 1];
        if hi > self.knots[n - 1] && self.right == RightExtension::Constant && last != T::zero() {
            if hi == T::infinity() {
                return Err(Error::InfiniteMass);
            }
        }
        let mut total: T = self.pieces(lo, hi).iter().map(piece_mass).sum();
        let pi = T::PI();
        // plateau inside the first knot
        let c = self.center_value();
        if c != T::zero() && lo < self.knots[0] {
            let top = self.knots[0].min(hi);
            if top > lo {
                total = total + pi * c * c * area_factor(lo, top);
            }
        }
        // constant extension beyond the last knot
        if self.right == RightExtension::Constant && last != T::zero() && hi > self.knots[n - 1] {
            let bottom = self.knots[n - 1].max(lo);
            total = total + pi * last * last * area_factor(bottom, hi);
        }
        Ok(total)
    }

    /// Mass over `|x| > r`.
    pub fn mass_outside(&self, r: T) -> Result<T> {
        self.mass_between(r.ln(), T::infinity())
    }

    /// `phi(x / s)`: shifts every knot by `ln s`.
    pub fn rescaled(&self, s: T) -> Self {
        let shift = s.ln();
        let mut p = self.clone();
        p.knots.iter_mut().for_each(|k| *k = *k + shift);
        p
    }

    /// `lambda * phi`.
    pub fn scaled(&self, lambda: T) -> Self {
        let mut p = self.clone();
        p.values.iter_mut().for_each(|v| *v = *v * lambda);
        p
    }

    /// Insert a knot at `t` without changing the function.
    pub fn refined(&self, t: T) -> Self {
        let n = self.knots.len();
        if self.knots.iter().any(|k| *k == t) {
            return self.clone();
        }
        let mut p = self.clone();
        if t < self.knots[0] {
            p.knots.insert(0, t);
            p.values.insert(0, self.value_at_log(t));
            p.segments.insert(0, Interp::LogLinear);
        } else if t > self.knots[n - 1] {
            p.knots.push(t);
            p.values.push(self.value_at_log(t));
            p.segments.push(Interp::LogLinear);
        } else {
            let i = self.knots.partition_point(|k| *k <= t) - 1;
            let v = self.segment_value(i, t);
            p.knots.insert(i + 1, t);
            p.values.insert(i + 1, v);
            let kind = self.segments[i];
            p.segments.insert(i + 1, kind);
        }
        p
    }

    /// Replace the profile on `[t_lo, t_hi]` by the log-linear interpolant of
    /// its endpoint values. Endpoint values are unchanged and the energy does
    /// not increase (Cauchy-Schwarz on the annulus).
    pub fn log_linear_replacement(&self, t_lo: T, t_hi: T) -> Result<Self> {
        if !(t_hi > t_lo) || !t_lo.is_finite() || !t_hi.is_finite() {
            return Err(Error::InvalidArgument("replacement interval must be finite and nonempty".into()));
        }
        let p = self.refined(t_lo).refined(t_hi);
        let mut knots = Vec::new();
        let mut values = Vec::new();
        let mut segments = Vec::new();
        for i in 0..p.knots.len() {
            let k = p.knots[i];
            if k > t_lo && k < t_hi {
                continue;
            }
            knots.push(k);
            values.push(p.values[i]);
            if i + 1 < p.knots.len() {
                segments.push(if k == t_lo { Interp::LogLinear } else { p.segments[i] });
            }
        }
        Self::with_segments(knots, values, segments, p.left, p.right)
    }

    /// `phi` is nonincreasing in `r` on `ln r >= t_from`.
    pub fn is_nonincreasing_from(&self, t_from: T) -> bool {
        let n = self.knots.len();
        let mut prev = self.value_at_log(t_from);
        for i in 0..n {
            if self.knots[i] <= t_from {
                continue;
            }
            if self.values[i] > prev {
                return false;
            }
            prev = self.values[i];
        }
        match self.right {
            RightExtension::Zero => prev >= T::zero(),
            RightExtension::Constant => true,
        }
    }

    /// Nonincreasing in `r` everywhere (the center plateau included).
    pub fn is_nonincreasing(&self) -> bool {
        if self.left == LeftExtension::Zero {
            // starts at 0 and may never go up
            return self.values.iter().all(|v| *v <= T::zero()) && self.is_nonincreasing_from(self.knots[0]);
        }
        self.is_nonincreasing_from(T::neg_infinity())
    }

    /// Log-radius where `|phi|` crosses `level` on each segment, plus knots.
    /// Used to split integrals at amplitude levels.
    pub(crate) fn level_crossings(&self, level: T) -> Vec<T> {
        let mut out = Vec::new();
        for i in 0..self.segments.len() {
            let (ta, tb) = (self.knots[i], self.knots[i + 1]);
            let (fa, fb) = (self.values[i], self.values[i + 1]);
            for target in [level, -level] {
                if (fa - target) * (fb - target) < T::zero() {
                    let t = crossing(self.segments[i], ta, tb, fa, fb, target);
                    if t > ta && t < tb {
                        out.push(t);
                    }
                }
            }
        }
        out
    }

    /// Log-radius ranges where `|phi| >= level`. The first range may start
    /// at `-inf` (center plateau), the last may end at `+inf`.
    pub fn superlevel_ranges(&self, level: T) -> Vec<(T, T)> {
        let mut cuts = vec![T::neg_infinity()];
        cuts.extend(self.knots.iter().copied());
        cuts.extend(self.level_crossings(level));
        cuts.push(T::infinity());
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();
        let mut ranges: Vec<(T, T)> = Vec::new();
        for w in cuts.windows(2) {
            let mid = if w[0] == T::neg_infinity() {
                w[1] - T::one()
            } else if w[1] == T::infinity() {
                w[0] + T::one()
            } else {
                (w[0] + w[1]) * T::lit(0.5)
            };
            if self.value_at_log(mid).abs() >= level {
                match ranges.last_mut() {
                    Some(last) if last.1 == w[0] => last.1 = w[1],
                    _ => ranges.push((w[0], w[1])),
                }
            }
        }
        ranges
    }
}

fn interp_value<T: Real>(kind: Interp, ta: T, tb: T, fa: T, fb: T, t: T) -> T {
    match kind {
        Interp::LogLinear => fa + (fb - fa) * (t - ta) / (tb - ta),
        Interp::Linear => {
            let (ra, rb) = (ta.exp(), tb.exp());
            fa + (fb - fa) * (t.exp() - ra) / (rb - ra)
        }
    }
}

fn crossing<T: Real>(kind: Interp, ta: T, tb: T, fa: T, fb: T, target: T) -> T {
    let s = (target - fa) / (fb - fa);
    match kind {
        Interp::LogLinear => ta + s * (tb - ta),
        Interp::Linear => {
            let (ra, rb) = (ta.exp(), tb.exp());
            (ra + s * (rb - ra)).ln()
        }
    }
}

/// `(r_hi^2 - r_lo^2)` from log-radii, tolerant of `lo = -inf`.
fn area_factor<T: Real>(lo: T, hi: T) -> T {
    if hi == T::infinity() {
        return T::infinity();
    }
    let top = (T::lit(2.0) * hi).exp();
    if lo == T::neg_infinity() {
        top
    } else {
        -top * (T::lit(2.0) * (lo - hi)).exp_m1()
    }
}

fn piece_energy<T: Real>(p: &Piece<T>) -> T {
    let df = p.fb - p.fa;
    match p.interp {
        Interp::LogLinear => T::two_pi() * df * df / (p.tb - p.ta),
        Interp::Linear => {
            // pi B^2 (r_b^2 - r_a^2) with B the slope in r
            let (ra, rb) = (p.ta.exp(), p.tb.exp());
            let b = df / (rb - ra);
            T::PI() * b * b * (rb - ra) * (rb + ra)
        }
    }
}

fn piece_mass<T: Real>(p: &Piece<T>) -> T {
    let two = T::lit(2.0);
    match p.interp {
        Interp::LogLinear => {
            // 2 pi int_0^L (A + B s)^2 e^{2(ta + s)} ds
            //   = 2 pi [e^{2 tb} q(L) - e^{2 ta} q(0)],
            // q(x) = f(x)^2 / 2 - B f(x) / 2 + B^2 / 4 > 0.
            let len = p.tb - p.ta;
            let b = (p.fb - p.fa) / len;
            let q = |f: T| f * f / two - b * f / two + b * b / T::lit(4.0);
            let (qa, qb) = (q(p.fa), q(p.fb));
            let body = if len <= T::one() {
                let expm = (two * len).exp_m1();
                let dq = (p.fb - p.fa) * (p.fb + p.fa - b) / two;
                (two * p.ta).exp() * (expm * qb + dq)
            } else {
                (two * p.tb).exp() * qb - (two * p.ta).exp() * qa
            };
            T::two_pi() * body
        }
        Interp::Linear => {
            // 2 pi int_0^w (A + B x)^2 (ra + x) dx
            let (ra, rb) = (p.ta.exp(), p.tb.exp());
            let w = rb - ra;
            let a = p.fa;
            let b = (p.fb - p.fa) / w;
            let three = T::lit(3.0);
            let four = T::lit(4.0);
            let body = a * a * ra * w
                + (a * a + two * a * b * ra) * w * w / two
                + (two * a * b + b * b * ra) * w * w * w / three
                + b * b * w * w * w * w / four;
            T::two_pi() * body
        }
    }
}
