//! The discrete extremal problem
//! `mu_d(h) = inf { ||a||_(e) : ||a||_1 = h, ||a||_2 <= 1 }`, its link to radial
//! profiles, and the radial Trudinger-Moser ratio.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::check::Check;
use crate::error::{Error, Result};
use crate::families::{self, Family};
use crate::radial::{LeftExtension, RadialProfile, RightExtension};
use crate::real::Real;

const MAX_BISECTIONS: usize = 200;

/// A finite sequence `(a_0, ..., a_N)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DiscreteSequence<T> {
    pub a: Vec<T>,
}

impl<T: Real> DiscreteSequence<T> {
    pub fn new(a: Vec<T>) -> Result<Self> {
        if a.is_empty() || a.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("sequence must be nonempty and finite".into()));
        }
        Ok(DiscreteSequence { a })
    }

    pub fn l1(&self) -> T {
        self.a.iter().map(|x| x.abs()).sum()
    }

    pub fn l2(&self) -> T {
        self.a.iter().map(|x| *x * *x).sum::<T>().sqrt()
    }

    /// `(sum e^{2n} a_n^2)^{1/2}`.
    pub fn e_norm(&self) -> T {
        self.a
            .iter()
            .enumerate()
            .map(|(n, x)| (T::lit(2.0 * n as f64)).exp() * *x * *x)
            .sum::<T>()
            .sqrt()
    }
}

/// Minimizer of the discrete problem with its KKT data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ExtremalSolution<T> {
    pub sequence: DiscreteSequence<T>,
    /// `||a||_(e)`.
    pub objective: T,
    /// Multiplier of `sum a_n = h`.
    pub lambda_sum: T,
    /// Multiplier of `sum a_n^2 <= 1`.
    pub lambda_ball: T,
    pub active_ball: bool,
    pub h: T,
    pub n_max: usize,
    pub kkt_residual: T,
}

/// `a_n = c / (e^{2n} + mu)` with `c` fixed by `sum a_n = h`.
fn candidate<T: Real>(h: T, n_max: usize, mu: T) -> (Vec<T>, T) {
    let w: Vec<T> = (0..=n_max).map(|n| T::one() / (T::lit(2.0 * n as f64).exp() + mu)).collect();
    let c = h / w.iter().copied().sum::<T>();
    (w.into_iter().map(|x| c * x).collect(), c)
}

fn sum_sq<T: Real>(a: &[T]) -> T {
    a.iter().map(|x| *x * *x).sum()
}

/// Solve for `mu_d(h)` over sequences supported on `0..=n_max`.
///
/// Stationarity gives `a_n = c / (e^{2n} + mu)`; every such entry is positive,
/// so the sign constraint never binds. The ball multiplier `mu` is found by
/// bisection in `ln mu`.
pub fn solve_mu_d<T: Real>(h: T, n_max: usize) -> Result<ExtremalSolution<T>> {
    if !(h > T::zero()) || !h.is_finite() {
        return Err(Error::InvalidArgument(format!("h must be positive (got {h})")));
    }
    let limit = T::lit((n_max + 1) as f64).sqrt();
    let tol = T::lit(4.0) * T::epsilon() * limit;
    if h > limit + tol {
        return Err(Error::Infeasible {
            h: h.as_f64(),
            limit: limit.as_f64(),
        });
    }
    if (h - limit).abs() <= tol {
        let a = vec![T::one() / limit; n_max + 1];
        let seq = DiscreteSequence { a };
        let objective = seq.e_norm();
        return Ok(ExtremalSolution {
            sequence: seq,
            objective,
            lambda_sum: T::nan(),
            lambda_ball: T::infinity(),
            active_ball: true,
            h,
            n_max,
            kkt_residual: T::zero(),
        });
    }

    let (a0, c0) = candidate(h, n_max, T::zero());
    let (a, c, mu) = if sum_sq(&a0) <= T::one() {
        (a0, c0, T::zero())
    } else {
        // ||a(mu)||_2 decreases from ||a(0)||_2 > 1 to h / sqrt(N + 1) < 1.
        let mut lo = T::lit(-60.0);
        let mut hi = T::lit(2.0 * n_max as f64 + 60.0);
        while sum_sq(&candidate(h, n_max, hi.exp()).0) > T::one() {
            hi = hi + T::lit(20.0);
            if hi > T::max_ln() {
                return Err(Error::NoConvergence {
                    iterations: MAX_BISECTIONS,
                });
            }
        }
        let target = T::lit(1e-12);
        let mut iterations = 0;
        while (hi.exp() - lo.exp()) > target * hi.exp() {
            iterations += 1;
            if iterations > MAX_BISECTIONS {
                return Err(Error::NoConvergence { iterations });
            }
            let mid = (lo + hi) * T::lit(0.5);
            if sum_sq(&candidate(h, n_max, mid.exp()).0) > T::one() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mu = hi.exp();
        let (a, c) = candidate(h, n_max, mu);
        (a, c, mu)
    };

    let lambda_sum = T::lit(2.0) * c;
    let seq = DiscreteSequence { a };
    let mut residual = T::zero();
    for (n, &x) in seq.a.iter().enumerate() {
        let grad = T::lit(2.0) * (T::lit(2.0 * n as f64).exp() + mu) * x - lambda_sum;
        residual = residual.max(grad.abs() / lambda_sum);
    }
    residual = residual.max((seq.l1() - h).abs() / h);
    if mu > T::zero() {
        residual = residual.max((sum_sq(&seq.a) - T::one()).abs());
    }
    let objective = seq.e_norm();
    Ok(ExtremalSolution {
        sequence: seq,
        objective,
        lambda_sum,
        lambda_ball: mu,
        active_ball: mu > T::zero(),
        h,
        n_max,
        kkt_residual: residual,
    })
}

/// Padding beyond `n` used for `mu_d(sqrt n)`.
pub const ASYMPTOTIC_PADDING: usize = 20;

/// `(n, mu_d(sqrt n) sqrt(n) e^{-n})` with `N = n + 20`.
pub fn mu_d_asymptotic_ratio<T: Real>(ns: &[usize]) -> Result<Vec<(usize, T)>> {
    ns.iter()
        .map(|&n| {
            if n < 2 {
                return Err(Error::InvalidArgument("n must be at least 2".into()));
            }
            let nn = T::lit(n as f64);
            let sol = solve_mu_d(nn.sqrt(), n + ASYMPTOTIC_PADDING)?;
            Ok((n, sol.objective * nn.sqrt() * (-nn).exp()))
        })
        .collect()
}

/// The ratio attained by the flat sequence `(1, ..., 1) / sqrt(n)`:
/// `sqrt((1 - e^{-2n}) / (e^2 - 1))`.
pub fn constant_sequence_ratio<T: Real>(n: usize) -> T {
    let nn = T::lit(n as f64);
    ((-(T::lit(-2.0) * nn).exp()).ln_1p().exp() / (T::lit(2.0).exp() - T::one())).sqrt()
}

/// A profile on `r > 1` reduced to lattice data.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduction<T> {
    /// `h_k = phi(e^k)`, ending with the first zero.
    pub heights: Vec<T>,
    /// `a_k = h_k - h_{k+1}`.
    pub sequence: DiscreteSequence<T>,
    /// Log-linear interpolant of the heights on `r > 1`, constant `h_0` inside.
    pub rebuilt: RadialProfile<T>,
    /// `||grad psi||^2_{r>1} / ||grad phi||^2_{r>1}`.
    pub energy_ratio: T,
    /// `||psi||^2_{r>1} / ||phi||^2_{r>1}`.
    pub mass_ratio: T,
    /// `||psi||^2_{r>1} / ||a||_(e)^2`.
    pub lattice_ratio: T,
}

/// `h_k = phi(e^k)`, `a_k = h_k - h_{k+1}` for a profile nonincreasing on `r > 1`.
pub fn reduce_profile_to_sequence<T: Real>(p: &RadialProfile<T>) -> Result<Reduction<T>> {
    if p.right() != RightExtension::Zero {
        return Err(Error::InfiniteMass);
    }
    if !p.is_nonincreasing_from(T::zero()) {
        return Err(Error::NotMonotone);
    }
    let t_end = *p.knots().last().unwrap();
    let last = if t_end <= T::zero() { 0 } else { t_end.ceil().to_usize().unwrap_or(0) };
    let mut heights: Vec<T> = (0..=last).map(|k| p.value_at_log(T::lit(k as f64))).collect();
    if *heights.last().unwrap() != T::zero() {
        heights.push(T::zero());
    }
    let a: Vec<T> = heights.windows(2).map(|w| w[0] - w[1]).collect();
    let sequence = DiscreteSequence::new(a)?;

    let knots: Vec<T> = (0..heights.len()).map(|k| T::lit(k as f64)).collect();
    let rebuilt = if heights.len() >= 2 {
        RadialProfile::new(knots, heights.clone(), LeftExtension::Constant, RightExtension::Zero)?
    } else {
        RadialProfile::zero()
    };
    let e_phi = p.energy_outside(T::one());
    let e_psi = rebuilt.energy_outside(T::one());
    let m_phi = p.mass_outside(T::one())?;
    let m_psi = rebuilt.mass_outside(T::one())?;
    let e2 = sequence.e_norm() * sequence.e_norm();
    Ok(Reduction {
        heights,
        energy_ratio: e_psi / e_phi,
        mass_ratio: m_psi / m_phi,
        lattice_ratio: m_psi / e2,
        sequence,
        rebuilt,
    })
}

/// `int_1^{e^{1/4}} phi^2 r dr >= h_0^2 (e^{1/2} - 1) / 8` for `h_0 = phi(1) > 1`
/// under the energy bound `||grad phi||^2_{r>1} <= 2 pi`.
pub fn boundary_mass_check<T: Real>(p: &RadialProfile<T>) -> Result<Check<T>> {
    let h0 = p.value_at(T::one());
    if !(h0 > T::one()) {
        return Err(Error::ZeroBoundaryValue { value: h0.as_f64() });
    }
    let budget = T::two_pi();
    let energy = p.energy_outside(T::one());
    if energy > budget * (T::one() + T::lit(1e-12)) {
        return Err(Error::EnergyBudgetExceeded {
            energy: energy.as_f64(),
            budget: budget.as_f64(),
        });
    }
    let lhs = p.mass_between(T::zero(), T::lit(0.25))? / T::two_pi();
    let rhs = h0 * h0 * (T::lit(0.5).exp() - T::one()) / T::lit(8.0);
    let mut c = Check::le("boundary_mass", rhs, lhs, T::lit(1e-12));
    c.lhs = lhs;
    c.rhs = rhs;
    Ok(c)
}

/// `ln` of `e^{2h^2/K} / (h^2/K^2) / ||phi/R||^2_{L^2(|x|>R)}` with `h = phi(R)`.
pub fn radial_tm_log_ratio<T: Real>(p: &RadialProfile<T>, r: T, k: T) -> Result<T> {
    if !(r > T::zero()) || !(k > T::zero()) {
        return Err(Error::InvalidArgument("R and K must be positive".into()));
    }
    let h = p.value_at(r).abs();
    let xi = h * h / k;
    if !(xi > T::one()) {
        return Err(Error::ZeroBoundaryValue { value: h.as_f64() });
    }
    let budget = T::two_pi() * k;
    let energy = p.energy_outside(r);
    if energy > budget * (T::one() + T::lit(1e-12)) {
        return Err(Error::EnergyBudgetExceeded {
            energy: energy.as_f64(),
            budget: budget.as_f64(),
        });
    }
    let mass = p.mass_outside(r)?;
    Ok(T::lit(2.0) * xi - (xi / k).ln() - mass.ln() + T::lit(2.0) * r.ln())
}

/// [`radial_tm_log_ratio`] exponentiated.
pub fn radial_tm_check<T: Real>(p: &RadialProfile<T>, r: T, k: T) -> Result<T> {
    let l = radial_tm_log_ratio(p, r, k)?;
    if l > T::max_ln() {
        return Err(Error::Overflow { log_value: l.as_f64() });
    }
    Ok(l.exp())
}

/// One point of a radial bound sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RadialTmSample<T> {
    pub index: u64,
    pub family: Family,
    pub r: T,
    pub h: T,
    pub log_ratio: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RadialTmSweep<T> {
    pub k: T,
    pub seed: u64,
    pub samples: Vec<RadialTmSample<T>>,
    /// Samples with `phi^2 <= K` everywhere.
    pub skipped: usize,
    /// `(h, ratio)` for log-caps of height `h` at `R = 1`.
    pub near_extremizers: Vec<(T, T)>,
    pub max_ratio: T,
}

/// Radius for sample `index`: `ln R` uniform on the last six log-units
/// (or the support, if shorter) of the set where `phi^2 > K`.
fn sweep_radius<T: Real>(p: &RadialProfile<T>, k: T, seed: u64, index: u64) -> Option<T> {
    let ranges = p.superlevel_ranges(k.sqrt() * T::lit(1.0 + 1e-9));
    let &(_, edge) = ranges.first()?;
    let start = (p.knots()[0] - T::one()).max(edge - T::lit(6.0));
    let mut rng = families::sample_rng(seed ^ 0x5eed_7a11, index);
    let u: f64 = rng.gen_range(0.0..1.0);
    Some((start + (edge - start) * T::lit(u)).exp())
}

/// Radial bound ratios over `n_samples` family members of energy `2 pi K`
/// (families in rotation), plus log-caps with `h` on `h_grid`.
pub fn radial_tm_sweep<T: Real>(k: T, n_samples: usize, seed: u64, h_grid: &[T]) -> Result<RadialTmSweep<T>> {
    let b = (1.5 * k.as_f64().sqrt(), 6.0 * k.as_f64().sqrt());
    let evaluated = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let family = Family::ALL[(i % 3) as usize];
            let p = families::sample(family, seed, i, k, b)?;
            let Some(r) = sweep_radius(&p, k, seed, i) else {
                return Ok(None);
            };
            let log_ratio = radial_tm_log_ratio(&p, r, k)?;
            Ok(Some(RadialTmSample {
                index: i,
                family,
                r,
                h: p.value_at(r),
                log_ratio,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    let skipped = evaluated.iter().filter(|s| s.is_none()).count();
    let samples: Vec<_> = evaluated.into_iter().flatten().collect();
    let near_extremizers = h_grid
        .iter()
        .map(|&h| {
            let p = families::near_extremizer(h, k, T::one())?;
            Ok((h, radial_tm_check(&p, T::one(), k)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_log = samples.iter().map(|s| s.log_ratio).fold(T::neg_infinity(), T::max);
    let max_ratio = near_extremizers.iter().map(|x| x.1).fold(max_log.exp(), T::max);
    Ok(RadialTmSweep {
        k,
        seed,
        samples,
        skipped,
        near_extremizers,
        max_ratio,
    })
}

/// Write `h,N,objective,active_ball,kkt_residual` rows.
pub fn write_csv<T: Real, W: Write>(solutions: &[ExtremalSolution<T>], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["h", "N", "objective", "active_ball", "kkt_residual"])?;
    for s in solutions {
        wtr.write_record([
            s.h.as_f64().to_string(),
            s.n_max.to_string(),
            s.objective.as_f64().to_string(),
            s.active_ball.to_string(),
            s.kkt_residual.as_f64().to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_candidate_bounds_mu_d_of_two() {
        let s = solve_mu_d(2.0_f64, 3).unwrap();
        let flat: f64 = (0..4).map(|n| (2.0 * n as f64).exp() / 4.0).sum();
        assert!((flat - 116.604).abs() < 1e-3);
        assert!(s.objective * s.objective <= flat + 1e-9);
    }

    #[test]
    fn equality_case_is_uniform() {
        let s = solve_mu_d(5.0_f64.sqrt(), 4).unwrap();
        for &x in &s.sequence.a {
            assert_eq!(x, 1.0 / 5.0_f64.sqrt());
        }
        assert!(matches!(solve_mu_d(2.3_f64, 4), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn kkt_and_constraints() {
        for &(h, n) in &[(1.2_f64, 2usize), (1.5, 6), (3.0, 25), (0.5, 3)] {
            let s = solve_mu_d(h, n).unwrap();
            assert!(s.kkt_residual < 1e-9, "{h} {n}: {}", s.kkt_residual);
            assert!((s.sequence.l1() - h).abs() < 1e-9);
            assert!(s.sequence.l2() <= 1.0 + 1e-12);
        }
        assert!(!solve_mu_d(0.5_f64, 3).unwrap().active_ball);
        assert!(solve_mu_d(3.0_f64, 25).unwrap().active_ball);
    }

    #[test]
    fn ratios_below_flat_bound() {
        for (n, r) in mu_d_asymptotic_ratio::<f64>(&[2, 5, 12]).unwrap() {
            assert!(r > 0.0 && r <= constant_sequence_ratio::<f64>(n) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn moving_mass_outward_costs() {
        let s = solve_mu_d(3.0_f64, 29).unwrap();
        let mut a = s.sequence.a.clone();
        let d = 0.1 * a[9];
        a[9] -= d;
        a[14] += d;
        assert!(DiscreteSequence::new(a).unwrap().e_norm() > s.objective);
    }

    #[test]
    fn reduction_of_moser_function() {
        let p = RadialProfile::new(vec![0.0, 3.0], vec![1.2_f64, 0.0], LeftExtension::Constant, RightExtension::Zero)
            .unwrap();
        let red = reduce_profile_to_sequence(&p).unwrap();
        for &x in &red.sequence.a {
            assert!((x - 0.4).abs() < 1e-14);
        }
        assert!((red.sequence.l1() - 1.2).abs() < 1e-14);
        assert!(red.energy_ratio <= 1.0 + 1e-12);
    }

    #[test]
    fn reduction_rejects_increasing_profile() {
        let p = RadialProfile::new(vec![0.0, 1.0, 2.0], vec![1.0_f64, 2.0, 0.0], LeftExtension::Constant, RightExtension::Zero)
            .unwrap();
        assert_eq!(reduce_profile_to_sequence(&p).unwrap_err(), Error::NotMonotone);
    }

    #[test]
    fn boundary_mass() {
        let p = RadialProfile::new(vec![0.0, 2.5], vec![1.5_f64, 0.0], LeftExtension::Constant, RightExtension::Zero)
            .unwrap();
        let c = boundary_mass_check(&p).unwrap();
        assert!(c.pass, "{c:?}");
    }

    #[test]
    fn radial_tm_errors() {
        let p = RadialProfile::new(vec![0.0, 1.0], vec![0.8_f64, 0.0], LeftExtension::Constant, RightExtension::Zero)
            .unwrap();
        assert!(matches!(radial_tm_check(&p, 1.0, 1.0), Err(Error::ZeroBoundaryValue { .. })));
        let q = RadialProfile::new(vec![0.0, 1.0], vec![3.0_f64, 0.0], LeftExtension::Constant, RightExtension::Zero)
            .unwrap();
        assert!(matches!(radial_tm_check(&q, 1.0, 1.0), Err(Error::EnergyBudgetExceeded { .. })));
    }

    #[test]
    fn csv_header() {
        let s = solve_mu_d(1.5_f64, 4).unwrap();
        let mut buf = Vec::new();
        write_csv(&[s], &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("h,N,objective,active_ball,kkt_residual\n1.5,4,"));
    }
}
