use std::f64::consts::PI;

use proptest::prelude::*;
use tmgrowth::certificate::build_certificate;
use tmgrowth::extremal::solve_mu_d;
use tmgrowth::families::{self, Family};
use tmgrowth::radial::{GSpec, Interp, LeftExtension, RadialProfile, RightExtension};
use tmgrowth::verify;
use tmgrowth::witnesses::{make_concentration_sequence, Regime};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

prop_compose! {
    /// Compactly supported profile with 2..12 knots on [-8, 4], arbitrary
    /// signs, mixed interpolation.
    fn profile()(n in 2usize..12)
        (gaps in prop::collection::vec(0.05f64..2.0, n - 1),
         start in -8.0f64..0.0,
         vals in prop::collection::vec(-3.0f64..3.0, n - 1),
         linear in prop::collection::vec(any::<bool>(), n - 1)) -> RadialProfile<f64> {
        let mut knots = vec![start];
        for g in &gaps {
            knots.push(knots.last().unwrap() + g);
        }
        let mut values = vals.clone();
        values.push(0.0);
        let segs = linear.iter().map(|&l| if l { Interp::Linear } else { Interp::LogLinear }).collect();
        RadialProfile::with_segments(knots, values, segs, LeftExtension::Constant, RightExtension::Zero).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn dilation_keeps_energy_and_scales_mass(p in profile(), ls in -5.0f64..5.0) {
        let s = ls.exp();
        let q = p.rescaled(s);
        prop_assert!(rel(q.dirichlet_energy(), p.dirichlet_energy()) < 1e-12);
        prop_assert!(rel(q.mass().unwrap(), s * s * p.mass().unwrap()) < 1e-12);
    }

    #[test]
    fn refinement_changes_nothing(p in profile(), u in 0.0f64..1.0) {
        let (a, b) = (p.knots()[0], *p.knots().last().unwrap());
        let q = p.refined(a - 1.0 + u * (b - a + 2.0));
        prop_assert!(rel(q.dirichlet_energy(), p.dirichlet_energy()) < 1e-12);
        prop_assert!(rel(q.mass().unwrap(), p.mass().unwrap()) < 1e-12);
        for t in [a - 0.5, (a + b) / 2.0, b - 1e-3] {
            prop_assert!((q.value_at_log(t) - p.value_at_log(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn replacement_never_adds_energy(p in profile(), u in 0.0f64..1.0, w in 0.0f64..1.0) {
        let (a, b) = (p.knots()[0], *p.knots().last().unwrap());
        let lo = a + u * (b - a) * 0.9;
        let hi = lo + 1e-3 + w * (b - lo);
        let q = p.log_linear_replacement(lo, hi).unwrap();
        prop_assert!(q.dirichlet_energy() <= p.dirichlet_energy() * (1.0 + 1e-12) + 1e-15);
        prop_assert!((q.value_at_log(lo) - p.value_at_log(lo)).abs() < 1e-12);
        prop_assert!((q.value_at_log(hi) - p.value_at_log(hi)).abs() < 1e-12);
    }

    #[test]
    fn square_growth_gives_mass(p in profile()) {
        let g = GSpec::power(1.0, 2.0).unwrap();
        let m = p.mass().unwrap();
        prop_assume!(m > 1e-200);
        prop_assert!(rel(p.g_functional(&g).unwrap(), m) < 1e-9);
    }

    #[test]
    fn profile_json_round_trip(p in profile()) {
        let s = serde_json::to_string(&p).unwrap();
        let q: RadialProfile<f64> = serde_json::from_str(&s).unwrap();
        prop_assert_eq!(p, q);
    }

    #[test]
    fn mu_d_is_monotone(n in 2usize..7, x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let cap = ((n + 1) as f64).sqrt();
        let (h1, h2) = (1.0 + x * (cap - 1.0), 1.0 + y * (cap - 1.0));
        let (lo, hi) = if h1 <= h2 { (h1, h2) } else { (h2, h1) };
        let a = solve_mu_d(lo, n).unwrap();
        let b = solve_mu_d(hi, n).unwrap();
        prop_assert!(a.objective <= b.objective * (1.0 + 1e-12));
    }

    #[test]
    fn perturbing_optimum_to_a_later_index_costs(n in 2usize..10) {
        let s = solve_mu_d((n as f64).sqrt(), n + 20).unwrap();
        let mut a = s.sequence.a.clone();
        let eps = 1e-3 * a[0];
        a[0] -= eps;
        a[n + 5] += eps;
        let e: f64 = a.iter().enumerate().map(|(j, x): (usize, &f64)| (2.0 * j as f64).exp() * x * x).sum();
        prop_assert!(e.sqrt() > s.objective);
    }

    #[test]
    fn certificates_pass_for_family_members(seed in 0u64..1000, i in 0u64..30, kappa in 0.8f64..0.95) {
        let fam = Family::ALL[(i % 3) as usize];
        let p: RadialProfile<f64> = families::sample(fam, seed, i, 1.0, (1.0, 6.0)).unwrap();
        let c = build_certificate(&p, kappa).unwrap();
        for ch in &c.checks {
            prop_assert!(ch.pass, "{} failed: {} vs {}", ch.name, ch.lhs, ch.rhs);
        }
    }

    #[test]
    fn bridge_links_hold(seed in 0u64..1000, i in 0u64..50) {
        let u = verify::bridge_sample::<f64>(seed, i).unwrap();
        let r = verify::holder_bridge_check(&u).unwrap();
        for ch in &r.checks {
            prop_assert!(ch.pass, "{} failed: {} vs {}", ch.name, ch.lhs, ch.rhs);
        }
    }
}

#[test]
fn witnesses_stay_strictly_inside_budget() {
    for k in [0.5, 1.0, 2.0] {
        let cases = [
            (GSpec::theorem_form(k).unwrap(), Regime::CompactnessFail),
            (GSpec::exact_growth(k, 1.5).unwrap(), Regime::BoundednessFail),
        ];
        for (g, regime) in cases {
            for w in make_concentration_sequence(k, &g, 8, regime).unwrap() {
                assert!(w.energy < 2.0 * PI * k, "{regime:?} {}", w.k);
            }
        }
    }
}

#[test]
fn search_is_deterministic_and_dominates_random_family() {
    let g = GSpec::exact_growth(1.0, 2.0).unwrap();
    let a = verify::sup_ratio_search::<f64>(&g, 1.0, 90, 11).unwrap();
    let b = verify::sup_ratio_search(&g, 1.0, 90, 11).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    for s in &a.samples {
        assert!(s.log_ratio.unwrap().exp() <= a.sup_ratio * (1.0 + 1e-12));
    }
    let random = a.per_family.iter().find(|f| f.family == Family::Random).unwrap();
    assert!(a.sup_ratio >= random.sup_ratio);
}

#[test]
fn single_precision_core() {
    let p = RadialProfile::<f32>::new(vec![-2.0, 0.0], vec![1.0, 0.0], LeftExtension::Constant, RightExtension::Zero).unwrap();
    assert!((p.dirichlet_energy() - std::f32::consts::PI).abs() < 1e-5);
    let g = GSpec::<f32>::power(1.0, 2.0).unwrap();
    let m = p.mass().unwrap();
    assert!((p.g_functional(&g).unwrap() - m).abs() < 1e-4 * m);
}
