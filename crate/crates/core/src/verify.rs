//! Empirical verification runs: sup-ratio searches over seeded profile
//! families, Taylor-moment tables and the Holder bridge from the exact-growth
//! inequality to the `H^1` form.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::check::Check;
use crate::error::{Error, Result};
use crate::families::{self, Family};
use crate::quadrature::LogQuadrature;
use crate::radial::{GSpec, RadialProfile, SplitHints};
use crate::real::Real;

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;
const LINK_TOL: f64 = 1e-8;

/// One evaluated sample of a sup-ratio search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SampleRecord<T> {
    pub index: u64,
    pub family: Family,
    pub mass: T,
    /// `ln G(phi) - ln ||phi||^2`; `None` when quadrature failed.
    pub log_ratio: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FamilyStats<T> {
    pub family: Family,
    pub count: usize,
    pub failures: usize,
    pub sup_ratio: T,
    pub argmax_index: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SupRatioReport<T> {
    pub gspec: GSpec<T>,
    pub k: T,
    pub n_samples: usize,
    pub seed: u64,
    pub sup_ratio: T,
    pub argmax_index: u64,
    pub argmax_family: Family,
    pub argmax_profile: RadialProfile<T>,
    pub per_family: Vec<FamilyStats<T>>,
    #[serde(skip)]
    pub samples: Vec<SampleRecord<T>>,
}

/// Family of sample `index`: the three families in rotation.
pub fn family_of(index: u64) -> Family {
    Family::ALL[(index % 3) as usize]
}

/// Cap heights for the log-cap families: `[sqrt(K), 6 sqrt(K)]`.
pub fn cap_range<T: Real>(k: T) -> (f64, f64) {
    let s = k.as_f64().sqrt();
    (s, 6.0 * s)
}

/// Sample `index` of the search with budget `k`.
pub fn search_sample<T: Real>(k: T, seed: u64, index: u64) -> Result<RadialProfile<T>> {
    families::sample(family_of(index), seed, index, k, cap_range(k))
}

fn evaluate<T: Real>(g: &GSpec<T>, k: T, seed: u64, index: u64) -> Result<SampleRecord<T>> {
    let p = search_sample(k, seed, index)?;
    let mass = p.mass()?;
    let log_ratio = p.g_functional_log(g).ok().map(|lg| lg.log_value - mass.ln());
    Ok(SampleRecord {
        index,
        family: family_of(index),
        mass,
        log_ratio,
    })
}

/// Largest `G(phi) / ||phi||^2` over `n_samples` seeded profiles of energy
/// `2 pi K`. Fails with `ConditionFailed` when `g` violates the boundedness
/// condition at the origin or at infinity.
pub fn sup_ratio_search<T: Real>(g: &GSpec<T>, k: T, n_samples: usize, seed: u64) -> Result<SupRatioReport<T>> {
    if !(k > T::zero()) || n_samples == 0 {
        return Err(Error::InvalidArgument("need K > 0 and at least one sample".into()));
    }
    if !g.satisfies_boundedness(k) {
        return Err(Error::ConditionFailed(format!(
            "limsup at infinity ({:?}) or at the origin ({:?}) is infinite",
            g.infinity_tail(k).class,
            g.origin_tail().class
        )));
    }
    let samples = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| evaluate(g, k, seed, i))
        .collect::<Result<Vec<_>>>()?;

    let mut per_family: Vec<FamilyStats<T>> = Family::ALL
        .iter()
        .map(|&family| FamilyStats {
            family,
            count: 0,
            failures: 0,
            sup_ratio: T::zero(),
            argmax_index: None,
        })
        .collect();
    let mut best: Option<(T, u64)> = None;
    for s in &samples {
        let stats = per_family.iter_mut().find(|f| f.family == s.family).unwrap();
        stats.count += 1;
        let Some(lr) = s.log_ratio else {
            stats.failures += 1;
            continue;
        };
        if stats.argmax_index.is_none() || lr > stats.sup_ratio {
            stats.sup_ratio = lr;
            stats.argmax_index = Some(s.index);
        }
        if best.map_or(true, |(b, _)| lr > b) {
            best = Some((lr, s.index));
        }
    }
    for f in &mut per_family {
        if f.argmax_index.is_some() {
            f.sup_ratio = f.sup_ratio.exp();
        }
    }
    let (log_best, argmax_index) = best.ok_or(Error::QuadratureNotConverged {
        estimate: f64::NAN,
        error: f64::NAN,
    })?;
    Ok(SupRatioReport {
        gspec: g.clone(),
        k,
        n_samples,
        seed,
        sup_ratio: log_best.exp(),
        argmax_index,
        argmax_family: family_of(argmax_index),
        argmax_profile: search_sample(k, seed, argmax_index)?,
        per_family,
        samples,
    })
}

/// Write `index,family,mass,ratio` rows.
pub fn write_samples_csv<T: Real, W: Write>(report: &SupRatioReport<T>, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["index", "family", "mass", "ratio"])?;
    for s in &report.samples {
        let ratio = s.log_ratio.map_or(String::new(), |l| l.exp().as_f64().to_string());
        wtr.write_record([
            s.index.to_string(),
            s.family.name().to_string(),
            s.mass.as_f64().to_string(),
            ratio,
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// `ln integral_{lo < ln|x| < hi} e^{c u^2 + rest(u)} dx`.
fn log_integral<T: Real>(p: &RadialProfile<T>, c: T, rest: impl Fn(T) -> T, lo: T, hi: T) -> Result<T> {
    let hints = SplitHints {
        exponent_coeff: if c == T::zero() { None } else { Some(c) },
        kinks: Vec::new(),
    };
    let r = p.log_integral(rest, lo, hi, &hints, &LogQuadrature::default())?;
    if !r.converged {
        return Err(Error::QuadratureNotConverged {
            estimate: r.log_value.as_f64(),
            error: r.log_error.as_f64(),
        });
    }
    Ok(r.log_value)
}

/// `ln integral |u|^{2p} dx` over `lo < ln|x| < hi`.
fn log_power<T: Real>(u: &RadialProfile<T>, p: T, lo: T, hi: T) -> Result<T> {
    log_integral(u, T::zero(), |x: T| T::lit(2.0) * p * x.abs().ln(), lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MomentRow<T> {
    pub n: usize,
    /// `ln integral (4 pi u^2)^n dx`.
    pub log_moment: T,
    /// `integral (4 pi u^2)^n dx / ((n+1)! ||u||^2)`.
    pub ratio: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LpRow<T> {
    pub p: T,
    /// `|| u^2 ||_{L^p}`.
    pub norm: T,
    /// `|| u^2 ||_{L^p} / (p ||u||^{2/p})`.
    pub ratio: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MomentTable<T> {
    pub energy: T,
    pub mass: T,
    pub moments: Vec<MomentRow<T>>,
    pub lp: Vec<LpRow<T>>,
    pub moment_bound: T,
    pub lp_bound: T,
    /// Largest `|r(p + d) - r(p - d)| / r(p)` at integer `p`, `d = 1e-6 p`.
    pub continuity_gap: T,
}

/// `|| u^2 ||_{L^p} / (p ||u||^{2/p})` computed by direct quadrature.
pub fn lp_ratio<T: Real>(u: &RadialProfile<T>, p: T) -> Result<LpRow<T>> {
    let mass = u.mass()?;
    let log_norm = log_power(u, p, T::neg_infinity(), T::infinity())? / p;
    Ok(LpRow {
        p,
        norm: log_norm.exp(),
        ratio: (log_norm - p.ln() - mass.ln() / p).exp(),
    })
}

/// Moment ratios for `n = 1..=n_max` and the `L^p` ratios on `p_grid`.
/// Requires `||grad u||^2 <= 1` and `n_max <= 20`.
pub fn taylor_moment_check<T: Real>(u: &RadialProfile<T>, n_max: usize, p_grid: &[T]) -> Result<MomentTable<T>> {
    let energy = u.dirichlet_energy();
    if energy > T::one() + T::lit(1e-12) {
        return Err(Error::NormBudgetExceeded(format!("||grad u||^2 = {energy} > 1")));
    }
    if n_max == 0 || n_max > 20 {
        return Err(Error::InvalidArgument(format!("n_max must be in 1..=20 (got {n_max})")));
    }
    let mass = u.mass()?;
    let mut moments = Vec::with_capacity(n_max);
    let mut log_fact = T::zero();
    for n in 1..=n_max {
        log_fact = log_fact + T::lit((n + 1) as f64).ln();
        let nn = T::lit(n as f64);
        let lm = nn * T::lit(FOUR_PI).ln() + log_power(u, nn, T::neg_infinity(), T::infinity())?;
        moments.push(MomentRow {
            n,
            log_moment: lm,
            ratio: (lm - log_fact - mass.ln()).exp(),
        });
    }
    let lp = p_grid.iter().map(|&p| lp_ratio(u, p)).collect::<Result<Vec<_>>>()?;
    let mut gap = T::zero();
    for row in &lp {
        let p = row.p;
        if p > T::one() && p == p.round() {
            let d = T::lit(1e-6) * p;
            let lo = lp_ratio(u, p - d)?.ratio;
            let hi = lp_ratio(u, p + d)?.ratio;
            gap = gap.max((hi - lo).abs() / row.ratio);
        }
    }
    Ok(MomentTable {
        energy,
        mass,
        moment_bound: moments.iter().map(|m| m.ratio).fold(T::zero(), T::max),
        lp_bound: lp.iter().map(|m| m.ratio).fold(T::zero(), T::max),
        moments,
        lp,
        continuity_gap: gap,
    })
}

/// Which route the bridge takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BridgeBranch {
    /// `theta >= 1/2`: `sqrt(2) u` has `||grad||^2 <= 1` and the
    /// subcritical inequality at `alpha = 2 pi` applies.
    Subcritical,
    /// `theta < 1/2`: Holder on `A = {|u| >= 1}`.
    Holder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct BridgeReport<T> {
    pub theta: T,
    pub branch: BridgeBranch,
    /// Outer log-radius of `A`; `-inf` when `A` is empty.
    pub a_edge: T,
    /// `integral_A e^{4 pi u^2} dx` (Holder) or
    /// `integral (e^{4 pi u^2} - 1) dx` (subcritical).
    pub lhs: T,
    /// Right-hand sides of the chain, in order.
    pub rhs_chain: Vec<T>,
    /// Effective constants `C_1`, `C_2` (Holder) or `c_{2 pi}` (subcritical).
    pub constants: Vec<T>,
    pub checks: Vec<Check<T>>,
}

impl<T: Real> BridgeReport<T> {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Rescale `u` to `||grad u||^2 = 1 - theta`, `||u||^2 = theta`.
pub fn h1_normalized<T: Real>(u: &RadialProfile<T>, theta: T) -> Result<RadialProfile<T>> {
    if !(theta > T::zero() && theta < T::one()) {
        return Err(Error::InvalidArgument(format!("theta must lie in (0, 1) (got {theta})")));
    }
    let lam = ((T::one() - theta) / u.dirichlet_energy()).sqrt();
    let v = u.scaled(lam);
    let s = (theta / v.mass()?).sqrt();
    Ok(v.rescaled(s))
}

/// Bridge sample `index`: a family member rescaled to `||grad u||^2 = 1 - theta`,
/// `||u||^2 = theta` with `theta` uniform on `[0.02, 0.98]`. Cap heights
/// are drawn from `[2.5, 10]` before rescaling so that `{|u| >= 1}` is
/// usually nonempty.
pub fn bridge_sample<T: Real>(seed: u64, index: u64) -> Result<RadialProfile<T>> {
    let base = families::sample(family_of(index), seed, index, T::one(), (2.5, 10.0))?;
    let mut rng = families::sample_rng(seed ^ 0xb41d_6e00, index);
    let theta = T::lit(rand::Rng::gen_range(&mut rng, 0.02..0.98));
    h1_normalized(&base, theta)
}

/// Evaluate every link of the Holder bridge for `u` with `||u||_{H^1} <= 1`.
pub fn holder_bridge_check<T: Real>(u: &RadialProfile<T>) -> Result<BridgeReport<T>> {
    let energy = u.dirichlet_energy();
    let theta = u.mass()?;
    let one = T::one();
    let tol = T::lit(LINK_TOL);
    if energy + theta > one + T::lit(1e-12) {
        return Err(Error::NormBudgetExceeded(format!("||u||_H1^2 = {} > 1", energy + theta)));
    }
    let four_pi = T::lit(FOUR_PI);
    let mut checks = Vec::new();

    if theta >= T::lit(0.5) {
        let w = u.scaled(T::lit(2.0).sqrt());
        let lhs = log_integral(&w, T::lit(std::f64::consts::TAU), |x: T| ln_one_minus_exp(-T::two_pi() * x * x), T::neg_infinity(), T::infinity())?
            .exp();
        let w_mass = w.mass()?;
        checks.push(Check::le("scaled_gradient", w.dirichlet_energy(), one, T::lit(1e-12)));
        checks.push(Check::eq("scaled_mass", w_mass, T::lit(2.0) * theta, T::lit(1e-12)));
        let finite = if lhs.is_finite() { T::zero() } else { T::one() };
        checks.push(Check::le("finite", finite, T::zero(), T::zero()));
        return Ok(BridgeReport {
            theta,
            branch: BridgeBranch::Subcritical,
            a_edge: T::neg_infinity(),
            lhs,
            rhs_chain: vec![w_mass],
            constants: vec![lhs / w_mass],
            checks,
        });
    }

    let ranges = u.superlevel_ranges(one);
    let a_edge = match ranges.first() {
        Some(&(lo, hi)) if lo == T::neg_infinity() && ranges.len() == 1 => hi,
        None => T::neg_infinity(),
        _ => return Err(Error::NotMonotone),
    };
    let ninf = T::neg_infinity();
    let omt = one - theta;
    let q = omt / theta;
    let v = u.scaled(omt.sqrt().recip());
    let v_mass = theta / omt;

    // Outside A: e^{4 pi u^2} - 1 <= (e^{4 pi} - 1) u^2.
    let outside = log_integral(u, four_pi, |x: T| ln_one_minus_exp(-four_pi * x * x), a_edge, T::infinity())?.exp();
    checks.push(Check::le(
        "complement",
        outside,
        four_pi.exp_m1() * u.mass_between(a_edge, T::infinity())?,
        tol,
    ));

    if a_edge == ninf {
        checks.push(Check::le("empty_a", T::zero(), T::zero(), T::zero()));
        return Ok(BridgeReport {
            theta,
            branch: BridgeBranch::Holder,
            a_edge,
            lhs: T::zero(),
            rhs_chain: Vec::new(),
            constants: Vec::new(),
            checks,
        });
    }

    let lhs = log_integral(u, four_pi, |_| T::zero(), ninf, a_edge)?;
    // integral_A e^{4 pi v^2} / v^2
    let log_i1 = log_integral(&v, four_pi, |x: T| -T::lit(2.0) * x.abs().ln(), ninf, a_edge)?;
    // || v^2 ||_{L^q(A)} and over the whole plane
    let log_i2 = log_power(&v, q, ninf, a_edge)? / q;
    let log_i2_full = log_power(&v, q, ninf, T::infinity())? / q;
    // exact-growth functional of v: integral (e^{4 pi v^2} - 1) / (1 + |v|)^2
    let log_j = log_integral(
        &v,
        four_pi,
        |x: T| ln_one_minus_exp(-four_pi * x * x) - T::lit(2.0) * x.abs().ln_1p(),
        ninf,
        T::infinity(),
    )?;
    let c2 = T::lit(4.0) * four_pi.exp() / four_pi.exp_m1() * (log_j - v_mass.ln()).exp();
    let c1 = (log_i2_full - q.ln() - v_mass.ln() / q).exp();

    let holder = omt * (log_i1 + log_i2);
    let power_rhs = c1.ln() + ((one - T::lit(2.0) * theta) / omt) * q.ln();
    let final_rhs = omt * (c2.ln() + c1.ln()) + theta * (theta / omt).ln();

    checks.push(Check::le("holder", lhs.exp(), holder.exp(), tol));
    checks.push(Check::le("exact_growth", log_i1.exp(), (c2 * v_mass).max(T::min_positive_value()), tol));
    checks.push(Check::le("restriction", log_i2.exp(), log_i2_full.exp(), tol));
    checks.push(Check::le(
        "power_bound",
        log_i2_full.exp(),
        (c1.ln() + q.ln() + v_mass.ln() / q).exp(),
        tol,
    ));
    checks.push(Check::eq(
        "power_identity",
        (q.ln() + v_mass.ln() / q).exp(),
        ((one - T::lit(2.0) * theta) / omt * q.ln()).exp(),
        T::lit(1e-12),
    ));
    checks.push(Check::le("chain", lhs.exp(), final_rhs.exp(), tol));
    Ok(BridgeReport {
        theta,
        branch: BridgeBranch::Holder,
        a_edge,
        lhs: lhs.exp(),
        rhs_chain: vec![holder.exp(), (omt * (c2 * v_mass).ln() + omt * power_rhs).exp(), final_rhs.exp()],
        constants: vec![c1, c2],
        checks,
    })
}

/// `ln(1 - e^{x})` for `x <= 0`.
fn ln_one_minus_exp<T: Real>(x: T) -> T {
    if x > -T::LN_2() {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::witnesses::make_moser;
    use std::f64::consts::PI;

    #[test]
    fn first_moment_is_two_pi() {
        let u = make_moser(2.0_f64).unwrap().scaled((2.0 * PI).sqrt().recip());
        let t = taylor_moment_check(&u, 3, &[1.0, 2.0]).unwrap();
        assert!((t.moments[0].ratio - 2.0 * PI).abs() < 1e-9 * 2.0 * PI);
        assert!((t.lp[0].ratio - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mass_functional_has_unit_ratio() {
        let g = GSpec::power(1.0_f64, 2.0).unwrap();
        let r = sup_ratio_search(&g, 1.0, 30, 5).unwrap();
        for s in &r.samples {
            assert!(s.log_ratio.unwrap().abs() < 1e-9, "{s:?}");
        }
        assert!((r.sup_ratio - 1.0).abs() < 1e-9);
    }

    #[test]
    fn search_rejects_supercritical_tail() {
        let g = GSpec::exp_minus_one(3.0_f64).unwrap();
        assert!(matches!(sup_ratio_search(&g, 1.0, 3, 1), Err(Error::ConditionFailed(_))));
    }

    #[test]
    fn bridge_branches() {
        let base = make_moser(3.0_f64).unwrap();
        let hol = holder_bridge_check(&h1_normalized(&base, 0.1).unwrap()).unwrap();
        assert_eq!(hol.branch, BridgeBranch::Holder);
        assert!(hol.all_pass(), "{:?}", hol.checks);
        let sub = holder_bridge_check(&h1_normalized(&base, 0.6).unwrap()).unwrap();
        assert_eq!(sub.branch, BridgeBranch::Subcritical);
        assert!(sub.all_pass() && sub.lhs.is_finite());
    }

    #[test]
    fn bridge_with_empty_a() {
        let u = make_moser(1.0_f64).unwrap().scaled(0.1);
        let r = holder_bridge_check(&u).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.all_pass());
    }
}
