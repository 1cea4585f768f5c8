use kahler_quant::numerics::{integrate_unit, QuadratureSpec};
use kahler_quant::toric::{
    calabi_energy, d_e, geodesic_residual, h_distance, i_functional, k_energy, legendre,
    random_potential, PathInH, SymplecticPotential,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn potential(seed: u64) -> SymplecticPotential {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_potential(&mut rng, 6, 0.6)
}

fn spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn second_differences(v: &[f64]) -> impl Iterator<Item = f64> + '_ {
    v.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn legendre_round_trip(seed in any::<u64>()) {
        let u = potential(seed);
        let phi = legendre(&u);
        for i in 1..=99 {
            let p = i as f64 / 100.0;
            prop_assert!((phi.symplectic_value(p).unwrap() - u.value(p)).abs() <= 1e-9);
        }
    }

    #[test]
    fn unit_volume_and_mean_curvature(seed in any::<u64>()) {
        let u = potential(seed);
        let phi = legendre(&u);
        let mass = phi.integrate_mu(|_| 1.0, &spec()).unwrap().value;
        prop_assert!((mass - 1.0).abs() <= 1e-10);
        let mean_s = integrate_unit(|p| u.scalar_curvature(p), &spec()).unwrap().value;
        prop_assert!((mean_s - 2.0).abs() <= 1e-8, "{mean_s}");
        let mean_x = phi.integrate_mu(|m| m.jet.scalar_curvature(), &spec()).unwrap().value;
        prop_assert!((mean_x - 2.0).abs() <= 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn exact_geodesics_have_constant_speed(s0 in any::<u64>(), s1 in any::<u64>()) {
        let (u0, u1) = (potential(s0), potential(s1));
        let path = PathInH::geodesic(&u0, &u1);
        prop_assert!(geodesic_residual(&path).unwrap() <= 1e-7);
        let d = h_distance(&u0, &u1);
        for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let s = path.at(t).unwrap();
            let sq = s.phi.integrate_mu(|m| s.phi_dot.value(m.x).powi(2), &spec()).unwrap().value;
            prop_assert!((sq - d * d).abs() <= 1e-8);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn energy_convex_and_i_affine_along_geodesics(s0 in any::<u64>(), s1 in any::<u64>()) {
        let (u0, u1) = (potential(s0), potential(s1));
        let path = PathInH::geodesic(&u0, &u1);
        let (mut e, mut i) = (Vec::new(), Vec::new());
        for s in path.sample(33).unwrap() {
            e.push(k_energy(&s.phi, &spec()).unwrap());
            i.push(i_functional(&s.phi, &spec()).unwrap());
        }
        for d in second_differences(&e) {
            prop_assert!(d >= -1e-7, "{d}");
        }
        for (n, v) in i.iter().enumerate() {
            let t = n as f64 / 32.0;
            prop_assert!((v - ((1.0 - t) * i[0] + t * i[32])).abs() <= 1e-7);
        }
    }

    #[test]
    fn i_is_concave_along_linear_paths(s0 in any::<u64>(), s1 in any::<u64>()) {
        let path = PathInH::Linear { phi0: legendre(&potential(s0)), phi1: legendre(&potential(s1)) };
        let i: Vec<f64> = path.sample(17).unwrap().iter().map(|s| i_functional(&s.phi, &spec()).unwrap()).collect();
        for d in second_differences(&i) {
            prop_assert!(d <= 1e-9, "{d}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn energy_slope_increases_along_geodesics(s0 in any::<u64>(), s1 in any::<u64>()) {
        let (u0, u1) = (potential(s0), potential(s1));
        let path = PathInH::geodesic(&u0, &u1);
        let (a, b) = (path.at(0.0).unwrap(), path.at(1.0).unwrap());
        let d0 = d_e(&a.phi, &a.phi_dot, &spec()).unwrap();
        let d1 = d_e(&b.phi, &b.phi_dot, &spec()).unwrap();
        prop_assert!(d0 <= d1 + 1e-7, "{d0} > {d1}");
    }

    #[test]
    fn energy_gap_bounded_by_distance_times_calabi(s0 in any::<u64>(), s1 in any::<u64>()) {
        let (u0, u1) = (potential(s0), potential(s1));
        let (p0, p1) = (legendre(&u0), legendre(&u1));
        let gap = k_energy(&p1, &spec()).unwrap() - k_energy(&p0, &spec()).unwrap();
        let bound = h_distance(&u0, &u1) * calabi_energy(&p1, &spec()).unwrap().sqrt();
        prop_assert!(gap <= bound + 1e-7, "{gap} > {bound}");
    }
}

#[test]
fn flat_direction_saturates_the_energy_bound() {
    let u0 = potential(7);
    let p0 = legendre(&u0);
    let p1 = legendre(&u0.shifted(0.7));
    assert!((h_distance(&u0, &u0.shifted(0.7)) - 0.7).abs() < 1e-15);
    assert!((k_energy(&p1, &spec()).unwrap() - k_energy(&p0, &spec()).unwrap()).abs() < 1e-10);
    assert!((i_functional(&p1, &spec()).unwrap() - i_functional(&p0, &spec()).unwrap() - 0.7).abs() < 1e-12);
}
