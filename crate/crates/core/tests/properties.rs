//! Randomized invariants across modules.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pointgas::bounds::{
    assemble_ledger, ground_state_count, kinetic_lower_bound, max_occupation, mu_opt_bound, mu_opt_constant,
    random_instance, tail_condition, LedgerConstants, SandwichOptions,
};
use pointgas::freefermi::{box_free_energy, f_density, Boundary, CanonicalOptions};
use pointgas::geometry::{enumerate_occupations, localization_stats, make_partition, OccupationVector};
use pointgas::hardy::{min_rayleigh, HardyDomain, RayleighProblem};
use pointgas::spectral2::{two_body_spectrum, Sector, TwoBodyBoxProblem};
use pointgas::weight::{g_eval, g_lower_bound, g_upper_bound, sample_in_boxes, Configuration};

const TWO_SQRT3: f64 = 3.464_101_615_137_754_6;

fn occupation(m: usize, placements: &[usize]) -> OccupationVector {
    let mut c = vec![0; m * m * m];
    let len = c.len();
    for &p in placements {
        c[p % len] += 1;
    }
    OccupationVector::new(c)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn far_pair_sums_are_comparable(m in 2usize..=4, side in 0.5f64..5.0, places in prop::collection::vec(0usize..64, 2..=12)) {
        let p = make_partition(side, m).unwrap();
        let n = occupation(m, &places);
        let s = localization_stats(&p, &n).unwrap();
        prop_assert!(s.k_minus <= s.k_plus);
        if s.k_minus > 0.0 {
            prop_assert!(s.k_plus <= (1.0 + TWO_SQRT3) * s.k_minus * (1.0 + 1e-12));
        }
    }

    #[test]
    fn neighbour_double_count(m in 2usize..=4, places in prop::collection::vec(0usize..64, 1..=12)) {
        let p = make_partition(1.0, m).unwrap();
        let n = occupation(m, &places);
        let s = localization_stats(&p, &n).unwrap();
        let c = n.counts();
        let lhs: usize = c.iter().zip(&s.m_neigh).map(|(a, b)| a * b).sum();
        let mut rhs = 0;
        for j in 0..c.len() {
            for k in j + 1..c.len() {
                if p.adjacent(j, k) {
                    rhs += c[j] * c[k];
                }
            }
        }
        prop_assert_eq!(lhs, 2 * rhs);
    }

    #[test]
    fn weight_is_homogeneous(pts in prop::collection::vec(prop::array::uniform3(-3.0f64..3.0), 2..7), lambda in 0.1f64..10.0) {
        let c = Configuration::new(pts).unwrap();
        let g = g_eval(&c, 0.0).unwrap();
        let gs = g_eval(&c.scaled(lambda), 0.0).unwrap();
        prop_assert!((gs - g / lambda).abs() <= 1e-12 * g / lambda);
    }

    #[test]
    fn adding_a_particle_raises_the_weight(pts in prop::collection::vec(prop::array::uniform3(-3.0f64..3.0), 2..7), x in prop::array::uniform3(-3.0f64..3.0)) {
        let c = Configuration::new(pts).unwrap();
        let more = c.with_particle(x);
        prop_assert!(g_eval(&more, 0.0).unwrap() > g_eval(&c, 0.0).unwrap());
    }

    #[test]
    fn weight_bounds_on_sampled_configurations(m in 2usize..=3, side in 0.5f64..4.0, places in prop::collection::vec(0usize..27, 2..=10), seed in any::<u64>()) {
        let p = make_partition(side, m).unwrap();
        let n = occupation(m, &places);
        let s = localization_stats(&p, &n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let (c, boxes) = sample_in_boxes(&p, &n, &mut rng).unwrap();
            let g = g_eval(&c, 0.0).unwrap();
            prop_assert!(g >= g_lower_bound(&s, p.ell()) * (1.0 - 1e-12));
            prop_assert!(g <= g_upper_bound(&c, &p, &boxes, &s).unwrap() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn capped_enumeration_is_the_count_support(q in 1u32..=3, m in 1usize..=4, n in 0usize..=7) {
        let capped: Vec<Vec<usize>> = enumerate_occupations(n, m, Some(q as usize)).unwrap().map(|o| o.counts().to_vec()).collect();
        let support: Vec<Vec<usize>> = enumerate_occupations(n, m, None)
            .unwrap()
            .filter(|o| ground_state_count(o, q) > 0u32.into())
            .map(|o| o.counts().to_vec())
            .collect();
        prop_assert_eq!(capped, support);
    }

    #[test]
    fn max_occupation_inverts(e in 0.0f64..1e4, ell in 0.05f64..3.0, q in 1u32..=4, kappa in 0.1f64..50.0) {
        let m = max_occupation(e, ell, q, kappa).unwrap();
        let one = |n: u64| {
            let mut c = vec![0usize; 2];
            c[0] = n as usize;
            kinetic_lower_bound(&OccupationVector::new(c), q, ell, kappa)
        };
        prop_assert!(one(m.bound + 1) >= e);
        prop_assert!(m.bound == q as u64 || one(m.bound) < e);
        if e * ell * ell * (q as f64).powf(2.0 / 3.0) <= kappa {
            prop_assert!(m.bound <= q as u64);
        }
    }

    #[test]
    fn tail_condition_is_exhaustive(beta in 0.2f64..5.0, n in 2usize..200, rho in 0.1f64..5.0, q in 1u32..=4, c in 0.005f64..0.5, ce in 0.5f64..20.0) {
        let e_bar = ce * n as f64 * (n as f64).ln() / beta;
        let t = tail_condition(beta, e_bar, n, rho, q, c);
        let lhs = |k: f64| n as f64 * (c * q as f64 / rho).ln() + 1.5 * n as f64 * ((k + 2.0) * e_bar).ln()
            - (k + 0.5) * beta * e_bar + k * std::f64::consts::LN_2;
        let worst = (0..500).map(|k| lhs(k as f64)).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((worst - t.worst_log).abs() <= 1e-9 * worst.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn sandwich_margins_are_non_negative(seed in any::<u64>(), eps in prop::sample::select(vec![0.5, 1.0, 2.0])) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, 3, 10);
        let r = inst.check(&SandwichOptions { eps, ..Default::default() }).unwrap();
        prop_assert!(r.lower_margin >= -1e-12 * r.norm_g);
        prop_assert!(r.upper_margin >= -1e-12 * r.norm_g);
    }

    #[test]
    fn integer_mu_sup_dominates_the_power_law(q in 1u64..=8, a in 0u64..10_000) {
        let c = mu_opt_constant(10_000, 8).c_star;
        let rhs = c * (q as f64).powf(-2.0 / 3.0) * (a.saturating_sub(q) as f64).powf(5.0 / 3.0);
        prop_assert!(mu_opt_bound(a, q) as f64 >= rhs * (1.0 - 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn hardy_refinement_does_not_raise_lambda(y in prop::array::uniform3(-0.5f64..1.5)) {
        let coarse = min_rayleigh(&RayleighProblem::scaled(HardyDomain::Cube { side: 1.0 }, y, 4, 16.0, 144.0)).unwrap();
        let fine = min_rayleigh(&RayleighProblem::scaled(HardyDomain::Cube { side: 1.0 }, y, 8, 16.0, 144.0)).unwrap();
        prop_assert!(fine.lambda <= coarse.lambda * (1.0 + 1e-6));
    }

    #[test]
    fn hardy_scale_invariance(y in prop::array::uniform3(-0.5f64..1.5), s in 0.2f64..5.0) {
        let a = min_rayleigh(&RayleighProblem::scaled(HardyDomain::Cube { side: 1.0 }, y, 6, 16.0, 144.0)).unwrap();
        let b = min_rayleigh(&RayleighProblem::scaled(HardyDomain::Cube { side: s }, y.map(|v| v * s), 6, 16.0, 144.0)).unwrap();
        prop_assert!((a.lambda - b.lambda).abs() <= 1e-6 * a.lambda);
    }

    #[test]
    fn exterior_points_do_not_lower_lambda(y in prop::array::uniform3(0.0f64..1.0), axis in 0usize..3, push in 0.05f64..1.0) {
        // move y straight out through the face nearest along `axis`
        let mut out = y;
        out[axis] = if y[axis] < 0.5 { -push } else { 1.0 + push };
        let mut face = y;
        face[axis] = if y[axis] < 0.5 { 0.0 } else { 1.0 };
        let inside = min_rayleigh(&RayleighProblem::scaled(HardyDomain::Cube { side: 1.0 }, face, 6, 16.0, 144.0)).unwrap();
        let outside = min_rayleigh(&RayleighProblem::scaled(HardyDomain::Cube { side: 1.0 }, out, 6, 16.0, 144.0)).unwrap();
        prop_assert!(outside.lambda >= inside.lambda * (1.0 - 1e-5));
    }

    #[test]
    fn ledger_is_dimensionless(s in 0.3f64..3.0, n in prop::sample::select(vec![200usize, 1000])) {
        let k = LedgerConstants::default();
        let a = assemble_ledger(1.0, n, 1.0, 2, &k).unwrap();
        // β → sβ, energies → E/s, lengths → √s·L
        let b = assemble_ledger(s, n, s.powf(-1.5), 2, &k).unwrap();
        prop_assert_eq!(a.m, b.m);
        let close = |x: f64, y: f64, tol: f64| (x - y).abs() <= tol * x.abs().max(1e-300);
        prop_assert!(close(a.delta.delta, b.delta.delta, 1e-12));
        prop_assert!(close(a.beta * a.e_bar, b.beta * b.e_bar, 1e-12));
        prop_assert!(close(a.terms["finite_size_defect"], s * b.terms["finite_size_defect"], 1e-12));
        prop_assert!(close(a.f_local, s * b.f_local, 1e-9));
        prop_assert!(close(a.f_free, s * b.f_free, 1e-9));
    }
}

#[test]
fn two_body_refinement_is_variational() {
    for (bc, sector) in [(Boundary::Dirichlet, Sector::Symmetric), (Boundary::Dirichlet, Sector::Antisymmetric), (Boundary::Neumann, Sector::Symmetric)] {
        let mut prev: Option<Vec<f64>> = None;
        for cut in [9, 12, 15] {
            let s = two_body_spectrum(&TwoBodyBoxProblem::new(1.0, 2, cut, sector, bc)).unwrap();
            assert!(s.values.iter().all(|v| *v >= -1e-9));
            if let Some(p) = &prev {
                for (fine, coarse) in s.values.iter().zip(p) {
                    assert!(*fine <= coarse + 1e-8 * coarse.abs().max(1.0), "{bc:?} {sector:?}: {fine} > {coarse}");
                }
            }
            prev = Some(s.values);
        }
    }
}

#[test]
fn sector_degeneracies_add_to_q_squared() {
    for q in 1..=6 {
        assert_eq!(Sector::Symmetric.degeneracy(q) + Sector::Antisymmetric.degeneracy(q), (q * q) as u64);
    }
}

#[test]
fn free_energy_falls_with_volume() {
    let o = CanonicalOptions::default();
    for bc in [Boundary::Dirichlet, Boundary::Neumann] {
        let fs: Vec<f64> = [1.0, 1.3, 1.7, 2.2, 3.0]
            .iter()
            .map(|&l| box_free_energy(1.0, 6, l, 2, bc, &o).unwrap().free_energy)
            .collect();
        assert!(fs.windows(2).all(|w| w[1] < w[0]), "{bc:?}: {fs:?}");
    }
}

#[test]
fn free_energy_density_is_convex_in_rho() {
    for beta in [0.2, 1.0, 5.0] {
        let rhos: Vec<f64> = (1..=12).map(|i| 0.25 * i as f64).collect();
        let f: Vec<f64> = rhos.iter().map(|&r| f_density(beta, r, 2).unwrap().f).collect();
        for w in f.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] > 0.0);
        }
    }
}

#[test]
fn finite_volume_approaches_the_density() {
    // |F/V − f| shrinks as L grows at fixed ρ
    let (beta, rho, q) = (1.0, 1.0, 2);
    let f = f_density(beta, rho, q).unwrap().f;
    let diffs: Vec<f64> = [3.0f64, 4.0, 5.0, 6.0]
        .iter()
        .map(|&l| {
            let n = (rho * l.powi(3)).round() as usize;
            let v = n as f64 / rho;
            let side = v.cbrt();
            let fv = box_free_energy(beta, n, side, q, Boundary::Neumann, &CanonicalOptions::default()).unwrap().free_energy / v;
            (fv - f).abs()
        })
        .collect();
    assert!(diffs.windows(2).all(|w| w[1] < w[0]), "{diffs:?}");
}
