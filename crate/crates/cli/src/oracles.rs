//! Independent references: closed forms and convergence rates that the
//! numerics must reproduce before any suite verdict means anything.

use num_complex::Complex64;

use fisher_hydro::brackets::{gateaux_pair, Generator};
use fisher_hydro::fields::{density_mask, quantum_potential, PhysicalConstants};
use fisher_hydro::functionals::{functional_gateaux_pair, RegulariserSpec};
use fisher_hydro::grid::{fd_gradient4, make_grid, spectral_gradient};
use fisher_hydro::propagate::{dg_density_residual, evolve, evolve_density_diffusion, EvolutionKind, EvolutionSpec};
use fisher_hydro::residuals::{multi_mass_scan, ratio_grid, RESIDUAL_MASK_EPS};
use fisher_hydro::states::{gaussian_packet, harmonic_potential};

use crate::error::CliError;
use crate::suites::{momentum_floor, MOMENTUM_BASE};
use crate::verdict::Report;

fn max_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m, v| if v.is_nan() { f64::NAN } else { m.max(v.abs()) })
}

/// Every oracle, each in its own check group.
pub fn run_oracles() -> Result<Report, CliError> {
    let mut r = Report::default();
    free_spreading(&mut r)?;
    heat_kernel(&mut r)?;
    generator_gateaux(&mut r)?;
    functional_gateaux(&mut r)?;
    gaussian_quantum_potential(&mut r)?;
    derivatives(&mut r)?;
    strang_order(&mut r)?;
    dg_pde(&mut r)?;
    let floor = momentum_floor(MOMENTUM_BASE, 1.0, &PhysicalConstants::natural())?;
    let fine = momentum_floor(MOMENTUM_BASE.refined(), 1.0, &PhysicalConstants::natural())?;
    r.at_least("momentum_refinement", "floor_ratio", floor / fine, 4.0, "momentum floor shrinks at least 4x per grid doubling");
    multi_mass_shift(&mut r)?;
    Ok(r)
}

/// Free Gaussian against the analytic complex-width solution.
fn free_spreading(r: &mut Report) -> Result<(), CliError> {
    let c = PhysicalConstants::natural();
    let (sigma, t) = (1.0, 1.0);
    let g = make_grid(1, 1024, 40.0)?;
    let psi0 = gaussian_packet(&g, &[0.0], sigma, &[0.0])?;
    let spec = EvolutionSpec::new(EvolutionKind::Linear, 0.01, t, 100)?;
    let traj = evolve(&psi0, &vec![0.0; g.size()], "free", &spec, &c)?;
    let last = traj.snapshots.last().expect("final snapshot");
    let w = Complex64::new(1.0, c.hbar * last.time / (c.mass * sigma * sigma));
    let norm = (std::f64::consts::PI * sigma * sigma).powf(-0.25);
    let exact: Vec<Complex64> = g
        .axis()
        .iter()
        .map(|x| norm / w.sqrt() * (-(x * x) / (2.0 * sigma * sigma * w)).exp())
        .collect();
    let peak = max_abs(exact.iter().map(|z| z.norm()));
    let err = max_abs(last.values.iter().zip(&exact).map(|(a, b)| (a - b).norm())) / peak;
    r.at_most("free_spreading", "max_relative_error", err, 1e-10, "split-step reproduces free Gaussian spreading");
    Ok(())
}

/// Diffused Gaussian against the widened Gaussian.
fn heat_kernel(r: &mut Report) -> Result<(), CliError> {
    let (d, t, s0) = (0.05, 1.0, 1.0);
    let g = make_grid(1, 512, 40.0)?;
    let gauss = |var: f64| -> Vec<f64> {
        g.axis().iter().map(|x| (-(x * x) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()).collect()
    };
    let spec = EvolutionSpec::new(EvolutionKind::DensityDiffusion { d }, 0.01, t, 100)?;
    let traj = evolve_density_diffusion(&g, &gauss(s0), &[vec![0.0; g.size()]], d, &spec)?;
    let exact = gauss(s0 + 2.0 * d * t);
    let peak = max_abs(exact.iter().copied());
    let err = max_abs(traj.densities.last().expect("final").iter().zip(&exact).map(|(a, b)| a - b)) / peak;
    r.at_most("heat_kernel", "max_relative_error", err, 1e-8, "density diffusion reproduces the heat kernel");
    Ok(())
}

/// Analytic functional derivatives of H, P and K against central differences.
fn generator_gateaux(r: &mut Report) -> Result<(), CliError> {
    let c = PhysicalConstants::natural();
    let g = make_grid(1, 512, 32.0)?;
    let psi = gaussian_packet(&g, &[0.5], 1.0, &[0.7])?;
    let v = harmonic_potential(&g, 1.0, 0.5, &[0.0]);
    let x = g.axis();
    let eta_rho: Vec<f64> = x.iter().map(|x| 0.05 * (x - 0.3) * (-(x - 0.5) * (x - 0.5)).exp()).collect();
    let eta_s: Vec<f64> = x.iter().map(|x| 0.1 * (-(x * x) / 4.0).exp()).collect();
    for (label, gen) in [("h", Generator::H), ("p", Generator::P(0)), ("k", Generator::K(0))] {
        let (fd, an) = gateaux_pair(gen, &psi, &v, &c, &eta_rho, &eta_s, 1e-4, 1e-12)?;
        let rel = (fd - an).abs() / an.abs().max(1e-3);
        r.at_most("generator_gateaux", &format!("{label}_relative"), rel, 1e-7, "analytic generator derivatives match central differences");
    }
    Ok(())
}

/// Central-difference error of regulariser derivatives falls as the step squared.
fn functional_gateaux(r: &mut Report) -> Result<(), CliError> {
    let g = make_grid(1, 512, 24.0)?;
    let rho: Vec<f64> = g.axis().iter().map(|x| (-(x * x) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()).collect();
    let mask = density_mask(&rho, 1e-8);
    // A relative perturbation keeps ρ ± εη positive for every step used.
    let eta: Vec<f64> = g.axis().iter().zip(&rho).map(|(x, p)| 0.5 * x.cos() * p).collect();
    for (label, spec) in [("fisher", RegulariserSpec::Fisher { c: 0.5 }), ("power_0.5", RegulariserSpec::Power { p: 0.5, c: 0.5 })] {
        let err = |eps: f64| -> Result<f64, CliError> {
            let (fd, an) = functional_gateaux_pair(&spec, &rho, &eta, eps, &g, &mask)?;
            Ok((fd - an).abs())
        };
        let ratio = err(0.1)? / err(0.05)?;
        r.within("functional_gateaux", &format!("{label}_halving_ratio"), ratio, 3.5, 4.5, "central differences converge at second order onto the analytic derivative");
    }
    Ok(())
}

/// Quantum potential of a Gaussian: `−α⋆ (x²/σ⁴ − 1/σ²)`.
fn gaussian_quantum_potential(r: &mut Report) -> Result<(), CliError> {
    let c = PhysicalConstants::natural();
    let sigma: f64 = 1.3;
    let g = make_grid(1, 512, 40.0)?;
    let rho = gaussian_packet(&g, &[0.0], sigma, &[0.0])?.density();
    let x = g.axis();
    let mask: Vec<bool> = x.iter().map(|x| x.abs() < 5.0).collect();
    let q = quantum_potential(&rho, c.alpha_star(), &g, &mask)?;
    let s2 = sigma * sigma;
    let err = max_abs(
        (0..x.len()).filter(|&i| mask[i]).map(|i| q[i] + c.alpha_star() * (x[i] * x[i] / (s2 * s2) - 1.0 / s2)),
    );
    r.at_most("gaussian_q", "max_abs_error", err, 1e-8, "quantum potential of a Gaussian is an inverted parabola");
    Ok(())
}

/// Spectral derivative to round-off; the fd4 stencil at fourth order.
fn derivatives(r: &mut Report) -> Result<(), CliError> {
    let g = make_grid(1, 256, 20.0)?;
    let f: Vec<f64> = g.axis().iter().map(|x| (-(x * x)).exp()).collect();
    let df = spectral_gradient(&f, &g)?;
    let err = max_abs(g.axis().iter().zip(&df[0]).map(|(x, d)| d + 2.0 * x * (-(x * x)).exp()));
    r.at_most("spectral", "gaussian_derivative_error", err, 1e-10, "spectral derivative of a Gaussian is exact to round-off");

    let fd_err = |n: usize| -> Result<f64, CliError> {
        let g = make_grid(1, n, 20.0)?;
        let f: Vec<f64> = g.axis().iter().map(|x| (-(x * x)).exp()).collect();
        let df = fd_gradient4(&f, &g)?;
        Ok(max_abs(g.axis().iter().zip(&df[0]).map(|(x, d)| d + 2.0 * x * (-(x * x)).exp())))
    };
    let ratio = fd_err(128)? / fd_err(256)?;
    r.within("fd4", "halving_ratio", ratio, 14.0, 18.0, "the five-point stencil is fourth order");
    Ok(())
}

/// Split-step error falls by 4x when the step halves.
fn strang_order(r: &mut Report) -> Result<(), CliError> {
    let c = PhysicalConstants::natural();
    let g = make_grid(1, 512, 32.0)?;
    let v = harmonic_potential(&g, 1.0, 1.0, &[0.0]);
    let psi0 = gaussian_packet(&g, &[1.5], 0.8, &[0.5])?;
    let run = |dt: f64| -> Result<Vec<Complex64>, CliError> {
        let spec = EvolutionSpec::new(EvolutionKind::Linear, dt, 1.0, 1)?;
        let traj = evolve(&psi0, &v, "harmonic", &spec, &c)?;
        Ok(traj.snapshots.last().expect("final").values.clone())
    };
    let reference = run(0.02 / 32.0)?;
    let err = |dt: f64| -> Result<f64, CliError> {
        Ok(max_abs(run(dt)?.iter().zip(&reference).map(|(a, b)| (a - b).norm())))
    };
    let ratio = err(0.02)? / err(0.01)?;
    r.within("strang", "halving_ratio", ratio, 3.6, 4.4, "split-step evolution is second order in time");
    Ok(())
}

/// The diffusive wave flow moves the density by the drift-diffusion equation.
fn dg_pde(r: &mut Report) -> Result<(), CliError> {
    let c = PhysicalConstants::natural();
    let g = make_grid(1, 1024, 40.0)?;
    let v = harmonic_potential(&g, 1.0, 0.5, &[0.0]);
    let psi = gaussian_packet(&g, &[1.0], 1.0, &[0.5])?;
    for delta in [1e-3, 5e-4] {
        let res = dg_density_residual(&psi, &v, 0.05, delta, &c, RESIDUAL_MASK_EPS)?;
        r.at_most("dg_pde", &format!("residual_delta_{delta}"), res, 1e-6, "density under the diffusive flow obeys drift-diffusion");
    }
    Ok(())
}

/// A mass component with a mis-scaled coefficient moves its minimum to `1/scale`.
fn multi_mass_shift(r: &mut Report) -> Result<(), CliError> {
    let g = make_grid(1, 1024, 20.0)?;
    let ratios = ratio_grid(0.5, 1.5, 41);
    let step = 1.0 / 40.0;
    let rep = multi_mass_scan(&g, &ratios, &[0.5, 1.0, 3.0], Some(&[1.0, 1.2, 1.0]), 1.0, 1.0)?;
    r.is_true("multi_mass_shift", "common_argmin_lost", rep.common_argmin.is_none(), "a wrong scale breaks the shared minimum");
    r.at_most("multi_mass_shift", "shifted_argmin_offset", (rep.scans[1].argmin - 1.0 / 1.2).abs(), step * (1.0 + 1e-9), "the mis-scaled component minimises at the inverse scale");
    Ok(())
}
