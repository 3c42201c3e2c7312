//! Property tests of structural invariants: linearity, gauge and translation
//! covariance, antisymmetry, scale invariance and reversibility.

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fisher_hydro::brackets::{poisson_bracket, FunctionalDerivs};
use fisher_hydro::fields::{density_mask, quantum_potential, PhysicalConstants, WaveField};
use fisher_hydro::functionals::fisher_information;
use fisher_hydro::grid::{make_grid, neumaier_sum, norm_squared, Grid};
use fisher_hydro::propagate::{step_dg, step_linear};
use fisher_hydro::states::{gaussian_packet, harmonic_potential, vortex_state};
use fisher_hydro::stresstests::circulation;

fn grid() -> Grid {
    make_grid(1, 256, 32.0).unwrap()
}

fn packet(center: f64, sigma: f64, k: f64) -> WaveField {
    gaussian_packet(&grid(), &[center], sigma, &[k]).unwrap()
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn combine(a: Complex64, x: &WaveField, b: Complex64, y: &WaveField) -> WaveField {
    let values = x.values.iter().zip(&y.values).map(|(p, q)| a * p + b * q).collect();
    WaveField::new(x.grid.clone(), values, x.time).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn linear_step_is_linear(
        c1 in -4.0..4.0f64, c2 in -4.0..4.0f64, k in -2.0..2.0f64,
        ar in -2.0..2.0f64, ai in -2.0..2.0f64, dt in 0.001..0.1f64,
    ) {
        let c = PhysicalConstants::natural();
        let v = harmonic_potential(&grid(), 1.0, 0.7, &[0.0]);
        let (x, y) = (packet(c1, 1.0, k), packet(c2, 0.8, -k));
        let a = Complex64::new(ar, ai);
        let one = Complex64::new(1.0, 0.0);
        let joint = step_linear(&combine(a, &x, one, &y), &v, dt, &c).unwrap();
        let split = combine(a, &step_linear(&x, &v, dt, &c).unwrap(), one, &step_linear(&y, &v, dt, &c).unwrap());
        prop_assert!(max_diff(&joint.values, &split.values) <= 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn linear_step_preserves_norm(center in -4.0..4.0f64, k in -3.0..3.0f64, dt in 0.001..0.2f64) {
        let c = PhysicalConstants::natural();
        let v = harmonic_potential(&grid(), 1.0, 1.0, &[0.5]);
        let psi = packet(center, 1.0, k);
        let out = step_linear(&psi, &v, dt, &c).unwrap();
        prop_assert!((norm_squared(&out.values, &grid()) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn global_phase_commutes_with_evolution(theta in 0.0..6.3f64, d in 0.0..0.1f64) {
        let c = PhysicalConstants::natural();
        let v = harmonic_potential(&grid(), 1.0, 0.5, &[0.0]);
        let psi = packet(1.0, 1.0, 0.5);
        let phase = Complex64::from_polar(1.0, theta);
        let zero = Complex64::new(0.0, 0.0);
        let rotated = step_dg(&combine(phase, &psi, zero, &psi), &v, 0.01, d, &c).unwrap();
        let expected = combine(phase, &step_dg(&psi, &v, 0.01, d, &c).unwrap(), zero, &psi);
        prop_assert!(max_diff(&rotated.values, &expected.values) <= 1e-12);
    }

    #[test]
    fn conjugated_round_trip_is_identity(center in -3.0..3.0f64, k in -2.0..2.0f64, dt in 0.001..0.05f64) {
        let c = PhysicalConstants::natural();
        let v = harmonic_potential(&grid(), 1.0, 0.5, &[0.0]);
        let psi = packet(center, 1.0, k);
        let back = step_linear(&step_linear(&psi, &v, dt, &c).unwrap().conj(), &v, dt, &c).unwrap().conj();
        prop_assert!(max_diff(&back.values, &psi.values) <= 1e-12);
    }

    #[test]
    fn quantum_potential_ignores_density_scale(scale in 1e-3..1e3f64, sigma in 0.7..2.0f64) {
        let g = grid();
        let rho = packet(0.0, sigma, 0.0).density();
        // Sites where Δ√ρ/√ρ is resolved above round-off.
        let peak = rho.iter().copied().fold(0.0, f64::max);
        let mask: Vec<bool> = rho.iter().map(|r| *r > 1e-8 * peak).collect();
        let q = quantum_potential(&rho, 0.5, &g, &mask).unwrap();
        let scaled: Vec<f64> = rho.iter().map(|r| r * scale).collect();
        let qs = quantum_potential(&scaled, 0.5, &g, &mask).unwrap();
        let worst = q.iter().zip(&qs).map(|(a, b)| (a - b).abs() / (1.0 + a.abs())).fold(0.0, f64::max);
        prop_assert!(worst <= 1e-9);
    }

    #[test]
    fn fisher_information_is_translation_invariant(shift in 0usize..64, sigma in 0.8..2.0f64) {
        let g = grid();
        let rho = packet(0.0, sigma, 0.0).density();
        let mut moved = rho.clone();
        moved.rotate_right(shift);
        let f0 = fisher_information(&rho, &g, &density_mask(&rho, 1e-12)).unwrap();
        let f1 = fisher_information(&moved, &g, &density_mask(&moved, 1e-12)).unwrap();
        prop_assert!((f0 - f1).abs() <= 1e-10 * f0);
        // Density variance σ²/2 gives I_F = 2/σ².
        prop_assert!((f0 - 2.0 / (sigma * sigma)).abs() <= 1e-8 * f0);
    }

    #[test]
    fn bracket_is_antisymmetric(seed in any::<u64>()) {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut derivs = |label: &str| FunctionalDerivs {
            d_rho: (0..g.size()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            d_s: (0..g.size()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            label: label.into(),
        };
        let (f, h) = (derivs("f"), derivs("h"));
        let fh = poisson_bracket(&f, &h, &g).unwrap();
        prop_assert_eq!(fh, -poisson_bracket(&h, &f, &g).unwrap());
        prop_assert_eq!(poisson_bracket(&f, &f, &g).unwrap(), 0.0);
    }

    #[test]
    fn compensated_sum_is_order_independent(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values: Vec<f64> = (0..200).map(|_| rng.gen_range(-1.0..1.0) * 10f64.powi(rng.gen_range(-8..8))).collect();
        let forward = neumaier_sum(values.iter().copied());
        values.reverse();
        let reversed = neumaier_sum(values.iter().copied());
        prop_assert!((forward - reversed).abs() <= 1e-15 * values.iter().map(|v| v.abs()).sum::<f64>());
    }

    #[test]
    fn circulation_is_quantised(winding in -3i32..=3, cx in -1.0..1.0f64, cy in -1.0..1.0f64, radius in 4usize..12) {
        let g = make_grid(2, 128, 20.0).unwrap();
        let psi = vortex_state(&g, winding, 1.5, [cx, cy]).unwrap();
        let rep = circulation(&psi, radius, [cx, cy], &PhysicalConstants::natural()).unwrap();
        prop_assert_eq!(rep.nearest_integer, winding as i64);
        prop_assert!(rep.integer_defect <= 1e-6);
    }
}

#[test]
fn compensated_sum_recovers_cancelled_terms() {
    assert_eq!(neumaier_sum([1.0, 1e100, 1.0, -1e100]), 2.0);
}
