//! Time evolution: Strang split-step for the linear equation, the diffusive
//! (Doebner–Goldin) and `β`-nonlinear variants, and RK4 density diffusion.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{smooth_mask_weights, PhysicalConstants, WaveField};
use crate::grid::{
    integrate, neumaier_sum, spectral_divergence, spectral_gradient, spectral_gradient_complex, spectral_laplacian, Grid,
};

/// Node-mask threshold for the diffusive factor. The smooth mask has to reach
/// deep enough that the untreated tail does not bias entropy production at the
/// `1e−6` level; below about `1e−12` the quotient `Δρ/ρ` is round-off.
pub const DIFFUSION_MASK_EPS: f64 = 1e-10;

/// Which flow to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EvolutionKind {
    Linear,
    DgDiffusion { d: f64 },
    /// `eps_reg` is relative to `max ρ` at each evaluation.
    BetaNonlinear { beta: f64, eps_reg: f64 },
    DensityDiffusion { d: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionSpec {
    pub kind: EvolutionKind,
    pub dt: f64,
    pub t_final: f64,
    /// Steps between recorded snapshots.
    pub record_stride: usize,
    /// Node mask for the diffusive factor.
    pub mask_eps: f64,
}

impl EvolutionSpec {
    pub fn new(kind: EvolutionKind, dt: f64, t_final: f64, record_stride: usize) -> Result<Self> {
        let spec = Self { kind, dt, t_final, record_stride, mask_eps: DIFFUSION_MASK_EPS };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if !(self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if self.t_final < 0.0 || (self.t_final > 0.0 && self.t_final < self.dt) {
            return bad("t_final must be zero or at least dt");
        }
        if self.record_stride == 0 {
            return bad("record_stride must be at least 1");
        }
        match self.kind {
            EvolutionKind::DgDiffusion { d } | EvolutionKind::DensityDiffusion { d } if !(d >= 0.0) => {
                bad("diffusion coefficient must be non-negative")
            }
            EvolutionKind::BetaNonlinear { beta, eps_reg } if !(beta >= 0.0) || !(eps_reg > 0.0) => {
                bad("beta must be non-negative and eps_reg positive")
            }
            _ => Ok(()),
        }
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

/// Cached Strang factors for one `(V, dt)` pair.
#[derive(Debug, Clone)]
pub struct LinearPropagator {
    grid: Grid,
    half_potential: Vec<Complex64>,
    kinetic: Vec<Complex64>,
    potential: Vec<f64>,
    hbar: f64,
    dt: f64,
}

impl LinearPropagator {
    pub fn new(grid: &Grid, potential: &[f64], dt: f64, constants: &PhysicalConstants) -> Result<Self> {
        grid.check_len(potential.len())?;
        let hbar = constants.hbar;
        let half_potential = potential
            .iter()
            .map(|v| Complex64::from_polar(1.0, -v * dt / (2.0 * hbar)))
            .collect();
        let kinetic = grid
            .k_squared()
            .iter()
            .map(|k2| Complex64::from_polar(1.0, -hbar * k2 * dt / (2.0 * constants.mass)))
            .collect();
        Ok(Self { grid: grid.clone(), half_potential, kinetic, potential: potential.to_vec(), hbar, dt })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn kinetic_step(&self, values: &mut [Complex64]) {
        self.grid.fft(values);
        values.iter_mut().zip(&self.kinetic).for_each(|(z, k)| *z *= k);
        self.grid.ifft(values);
    }

    /// One Strang step in place.
    pub fn apply(&self, values: &mut [Complex64]) {
        values.iter_mut().zip(&self.half_potential).for_each(|(z, p)| *z *= p);
        self.kinetic_step(values);
        values.iter_mut().zip(&self.half_potential).for_each(|(z, p)| *z *= p);
    }

    /// Strang step with an extra state-dependent real potential `U[ρ]`,
    /// re-evaluated on each half step.
    fn apply_with(&self, values: &mut [Complex64], extra: impl Fn(&[Complex64]) -> Vec<f64>) {
        let u = extra(values);
        let half = self.dt / (2.0 * self.hbar);
        for ((z, v), u) in values.iter_mut().zip(&self.potential).zip(&u) {
            *z *= Complex64::from_polar(1.0, -(v + u) * half);
        }
        self.kinetic_step(values);
        let u = extra(values);
        for ((z, v), u) in values.iter_mut().zip(&self.potential).zip(&u) {
            *z *= Complex64::from_polar(1.0, -(v + u) * half);
        }
    }
}

/// One linear Strang step.
pub fn step_linear(psi: &WaveField, potential: &[f64], dt: f64, constants: &PhysicalConstants) -> Result<WaveField> {
    Stepper::new(&psi.grid, potential, EvolutionKind::Linear, dt, constants, DIFFUSION_MASK_EPS)?.step(psi)
}

/// One diffusive step; exactly `step_linear` when `d == 0`.
pub fn step_dg(psi: &WaveField, potential: &[f64], dt: f64, d: f64, constants: &PhysicalConstants) -> Result<WaveField> {
    Stepper::new(&psi.grid, potential, EvolutionKind::DgDiffusion { d }, dt, constants, DIFFUSION_MASK_EPS)?.step(psi)
}

/// One step with the non-Fisher potential `U_β`; exactly `step_linear` when `β == 0`.
pub fn step_beta(
    psi: &WaveField,
    potential: &[f64],
    dt: f64,
    beta: f64,
    eps_reg: f64,
    constants: &PhysicalConstants,
) -> Result<WaveField> {
    let kind = EvolutionKind::BetaNonlinear { beta, eps_reg };
    Stepper::new(&psi.grid, potential, kind, dt, constants, DIFFUSION_MASK_EPS)?.step(psi)
}

/// `U_β = β |∇ρ|² / (ρ + ε)²` with `ε = eps_rel · max ρ`.
pub fn beta_potential(values: &[Complex64], grid: &Grid, beta: f64, eps_rel: f64) -> Vec<f64> {
    let rho: Vec<f64> = values.iter().map(|z| z.norm_sqr()).collect();
    let eps = eps_rel * rho.iter().copied().fold(0.0, f64::max);
    let grad = spectral_gradient(&rho, grid).expect("grid-sized field");
    (0..rho.len())
        .map(|i| {
            let g2: f64 = grad.iter().map(|g| g[i] * g[i]).sum();
            beta * g2 / (rho[i] + eps).powi(2)
        })
        .collect()
}

/// Multiply by `exp((d/2)(Δρ/ρ) τ)` under the smooth node mask. A hard cut
/// would leave a kink in ρ at the mask edge once the tails start to spread.
fn dg_factor(values: &mut [Complex64], grid: &Grid, d: f64, tau: f64, mask_eps: f64) {
    let rho: Vec<f64> = values.iter().map(|z| z.norm_sqr()).collect();
    let lap = spectral_laplacian(&rho, grid).expect("grid-sized field");
    let chi = smooth_mask_weights(&rho, mask_eps);
    for (((z, r), l), w) in values.iter_mut().zip(&rho).zip(&lap).zip(&chi) {
        if *w > 0.0 {
            *z *= (0.5 * d * w * l / r * tau).exp();
        }
    }
}

/// A reusable single-step integrator for one evolution kind.
#[derive(Debug, Clone)]
pub struct Stepper {
    linear: LinearPropagator,
    kind: EvolutionKind,
    mask_eps: f64,
}

impl Stepper {
    pub fn new(
        grid: &Grid,
        potential: &[f64],
        kind: EvolutionKind,
        dt: f64,
        constants: &PhysicalConstants,
        mask_eps: f64,
    ) -> Result<Self> {
        if let EvolutionKind::DensityDiffusion { .. } = kind {
            return Err(Error::InvalidParameter("density diffusion has no wavefunction stepper".into()));
        }
        Ok(Self { linear: LinearPropagator::new(grid, potential, dt, constants)?, kind, mask_eps })
    }

    pub fn dt(&self) -> f64 {
        self.linear.dt
    }

    pub fn step_in_place(&self, values: &mut [Complex64]) {
        let grid = &self.linear.grid;
        match self.kind {
            EvolutionKind::DgDiffusion { d } if d != 0.0 => {
                let before: f64 = values.iter().map(|z| z.norm_sqr()).sum();
                let half = 0.5 * self.linear.dt;
                dg_factor(values, grid, d, half, self.mask_eps);
                self.linear.apply(values);
                dg_factor(values, grid, d, half, self.mask_eps);
                let after: f64 = values.iter().map(|z| z.norm_sqr()).sum();
                let s = (before / after).sqrt();
                values.iter_mut().for_each(|z| *z *= s);
            }
            EvolutionKind::BetaNonlinear { beta, eps_reg } if beta != 0.0 => {
                self.linear.apply_with(values, |v| beta_potential(v, grid, beta, eps_reg));
            }
            _ => self.linear.apply(values),
        }
    }

    pub fn step(&self, psi: &WaveField) -> Result<WaveField> {
        let mut values = psi.values.clone();
        self.step_in_place(&mut values);
        WaveField::new(psi.grid.clone(), values, psi.time + self.linear.dt)
    }
}

/// Recorded wavefunction history.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<WaveField>,
    pub spec: EvolutionSpec,
    pub potential: Vec<f64>,
    pub potential_id: String,
}

/// Step `psi0` to `spec.t_final`, recording every `record_stride` steps and the final state.
pub fn evolve(
    psi0: &WaveField,
    potential: &[f64],
    potential_id: &str,
    spec: &EvolutionSpec,
    constants: &PhysicalConstants,
) -> Result<Trajectory> {
    spec.validate()?;
    let stepper = Stepper::new(&psi0.grid, potential, spec.kind, spec.dt, constants, spec.mask_eps)?;
    let steps = spec.steps();
    let mut psi = psi0.clone();
    let mut snapshots = vec![psi.clone()];
    for k in 1..=steps {
        stepper.step_in_place(&mut psi.values);
        psi.time = psi0.time + k as f64 * spec.dt;
        if !psi.is_finite() {
            return Err(Error::NonFinite { step: k, time: psi.time });
        }
        if k % spec.record_stride == 0 || k == steps {
            snapshots.push(psi.clone());
        }
    }
    Ok(Trajectory { snapshots, spec: *spec, potential: potential.to_vec(), potential_id: potential_id.to_string() })
}

/// Recorded density history.
#[derive(Debug, Clone)]
pub struct DensityTrajectory {
    pub grid: Grid,
    pub times: Vec<f64>,
    pub densities: Vec<Vec<f64>>,
    pub spec: EvolutionSpec,
}

/// RK4 integration of `∂tρ = −∇·(ρv) + DΔρ` with a fixed velocity field.
pub fn evolve_density_diffusion(
    grid: &Grid,
    rho0: &[f64],
    velocity: &[Vec<f64>],
    d: f64,
    spec: &EvolutionSpec,
) -> Result<DensityTrajectory> {
    spec.validate()?;
    grid.check_len(rho0.len())?;
    if velocity.len() != grid.dim() {
        return Err(Error::ShapeMismatch { expected: grid.dim(), got: velocity.len() });
    }
    let cfl = spec.dt * d / grid.spacing().powi(2);
    if cfl > 0.25 {
        log::warn!("diffusion number dt·D/h² = {cfl:.3} exceeds 0.25");
    }
    let rhs = |rho: &[f64]| -> Vec<f64> {
        let flux: Vec<Vec<f64>> = velocity.iter().map(|v| v.iter().zip(rho).map(|(v, r)| v * r).collect()).collect();
        let div = spectral_divergence(&flux, grid).expect("grid-sized field");
        let lap = spectral_laplacian(rho, grid).expect("grid-sized field");
        div.iter().zip(&lap).map(|(a, l)| -a + d * l).collect()
    };
    let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + s * y).collect() };
    let dt = spec.dt;
    let steps = spec.steps();
    let mut rho = rho0.to_vec();
    let mut times = vec![0.0];
    let mut densities = vec![rho.clone()];
    for k in 1..=steps {
        let k1 = rhs(&rho);
        let k2 = rhs(&axpy(&rho, 0.5 * dt, &k1));
        let k3 = rhs(&axpy(&rho, 0.5 * dt, &k2));
        let k4 = rhs(&axpy(&rho, dt, &k3));
        for i in 0..rho.len() {
            rho[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if rho.iter().any(|r| !r.is_finite()) {
            return Err(Error::NonFinite { step: k, time: k as f64 * dt });
        }
        if k % spec.record_stride == 0 || k == steps {
            times.push(k as f64 * dt);
            densities.push(rho.clone());
        }
    }
    debug_assert!((integrate(&rho, grid) - integrate(rho0, grid)).abs() < 1e-8);
    Ok(DensityTrajectory { grid: grid.clone(), times, densities, spec: *spec })
}

/// Masked relative defect of `∂tρ = −∇·j + DΔρ` for the diffusive wave flow
/// at `psi`, with `∂tρ` from one `±delta` step and spectral fluxes.
pub fn dg_density_residual(
    psi: &WaveField,
    potential: &[f64],
    d: f64,
    delta: f64,
    constants: &PhysicalConstants,
    mask_eps: f64,
) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter("delta must be positive".into()));
    }
    let grid = &psi.grid;
    let kind = EvolutionKind::DgDiffusion { d };
    let plus = Stepper::new(grid, potential, kind, delta, constants, DIFFUSION_MASK_EPS)?.step(psi)?.density();
    let minus = Stepper::new(grid, potential, kind, -delta, constants, DIFFUSION_MASK_EPS)?.step(psi)?.density();
    let rho = psi.density();
    let grad = spectral_gradient_complex(&psi.values, grid)?;
    let scale = constants.hbar / constants.mass;
    let current: Vec<Vec<f64>> =
        grad.iter().map(|g| psi.values.iter().zip(g).map(|(p, q)| scale * (p.conj() * q).im).collect()).collect();
    let div = spectral_divergence(&current, grid)?;
    let lap = spectral_laplacian(&rho, grid)?;
    let chi = smooth_mask_weights(&rho, mask_eps);
    let mut top = Vec::with_capacity(rho.len());
    let mut bottom = Vec::with_capacity(rho.len());
    for i in 0..rho.len() {
        let rate = (plus[i] - minus[i]) / (2.0 * delta);
        let drift = -div[i] + d * lap[i];
        top.push(chi[i] * (rate - drift).powi(2));
        bottom.push(chi[i] * (rate * rate + drift * drift));
    }
    let bottom = neumaier_sum(bottom);
    if bottom == 0.0 {
        return Ok(0.0);
    }
    Ok((neumaier_sum(top) / bottom).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{inner, make_grid};
    use crate::states::{gaussian_packet, harmonic_potential, hermite_state};

    fn natural() -> PhysicalConstants {
        PhysicalConstants::natural()
    }

    #[test]
    fn ground_state_returns_after_period() {
        let g = make_grid(1, 256, 20.0).unwrap();
        let psi = hermite_state(&g, 0, 1.0, 1.0, 1.0, 0.0).unwrap();
        let v = harmonic_potential(&g, 1.0, 1.0, &[0.0]);
        let spec = EvolutionSpec::new(EvolutionKind::Linear, 2.0 * std::f64::consts::PI / 2000.0, 2.0 * std::f64::consts::PI, 100).unwrap();
        let traj = evolve(&psi, &v, "harmonic", &spec, &natural()).unwrap();
        let last = traj.snapshots.last().unwrap();
        let fid = inner(&psi.values, &last.values, &g).norm_sqr();
        assert!(fid >= 1.0 - 1e-8, "fidelity {fid}");
        for s in &traj.snapshots {
            assert!((s.norm_squared() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dg_with_zero_diffusion_is_linear() {
        let g = make_grid(1, 128, 20.0).unwrap();
        let psi = gaussian_packet(&g, &[0.0], 1.0, &[0.7]).unwrap();
        let v = harmonic_potential(&g, 1.0, 0.3, &[0.0]);
        let a = step_linear(&psi, &v, 0.01, &natural()).unwrap();
        let b = step_dg(&psi, &v, 0.01, 0.0, &natural()).unwrap();
        let c = step_beta(&psi, &v, 0.01, 0.0, 1e-6, &natural()).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.values, c.values);
    }

    #[test]
    fn uniform_density_is_untouched_by_nonlinear_terms() {
        let g = make_grid(1, 64, 10.0).unwrap();
        let psi = WaveField::new(g.clone(), vec![Complex64::new(10f64.powf(-0.5), 0.0); 64], 0.0).unwrap();
        let v = vec![0.0; 64];
        let a = step_linear(&psi, &v, 0.1, &natural()).unwrap();
        let b = step_dg(&psi, &v, 0.1, 0.05, &natural()).unwrap();
        let c = step_beta(&psi, &v, 0.1, 0.3, 1e-6, &natural()).unwrap();
        for i in 0..64 {
            assert!((a.values[i] - b.values[i]).norm() < 1e-15);
            assert!((a.values[i] - c.values[i]).norm() < 1e-15);
        }
    }

    #[test]
    fn beta_step_preserves_norm() {
        let g = make_grid(1, 256, 20.0).unwrap();
        let psi = gaussian_packet(&g, &[1.0], 0.8, &[0.4]).unwrap();
        let out = step_beta(&psi, &vec![0.0; 256], 0.01, 0.05, 1e-6, &natural()).unwrap();
        assert!((out.norm_squared() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn zero_steps_keeps_initial_snapshot() {
        let g = make_grid(1, 64, 10.0).unwrap();
        let psi = gaussian_packet(&g, &[0.0], 1.0, &[0.0]).unwrap();
        let spec = EvolutionSpec::new(EvolutionKind::Linear, 0.1, 0.0, 1).unwrap();
        let t = evolve(&psi, &vec![0.0; 64], "free", &spec, &natural()).unwrap();
        assert_eq!(t.snapshots.len(), 1);
        assert_eq!(t.snapshots[0].time, 0.0);
    }

    #[test]
    fn boosted_packet_moves_at_group_velocity() {
        let g = make_grid(1, 1024, 80.0).unwrap();
        let c = PhysicalConstants::new(1.0, 2.0).unwrap();
        let psi = gaussian_packet(&g, &[0.0], 1.0, &[3.0]).unwrap();
        let spec = EvolutionSpec::new(EvolutionKind::Linear, 0.01, 2.0, 200).unwrap();
        let t = evolve(&psi, &vec![0.0; 1024], "free", &spec, &c).unwrap();
        let last = t.snapshots.last().unwrap();
        let x = g.axis();
        let mean: f64 = last.density().iter().zip(&x).map(|(r, x)| r * x).sum::<f64>() * g.spacing();
        assert!((mean - 3.0 / 2.0 * 2.0).abs() < 1e-9);
    }

    #[test]
    fn spec_validation() {
        assert!(EvolutionSpec::new(EvolutionKind::Linear, 0.0, 1.0, 1).is_err());
        assert!(EvolutionSpec::new(EvolutionKind::Linear, 0.1, 0.05, 1).is_err());
        assert!(EvolutionSpec::new(EvolutionKind::DgDiffusion { d: -1.0 }, 0.1, 1.0, 1).is_err());
        assert!(EvolutionSpec::new(EvolutionKind::BetaNonlinear { beta: 0.1, eps_reg: 0.0 }, 0.1, 1.0, 1).is_err());
    }

    #[test]
    fn nan_aborts() {
        let g = make_grid(1, 64, 10.0).unwrap();
        let psi = gaussian_packet(&g, &[0.0], 1.0, &[0.0]).unwrap();
        let mut v = vec![0.0; 64];
        v[3] = f64::NAN;
        let spec = EvolutionSpec::new(EvolutionKind::Linear, 0.1, 0.5, 1).unwrap();
        assert!(matches!(evolve(&psi, &v, "bad", &spec, &natural()), Err(Error::NonFinite { step: 1, .. })));
    }

    #[test]
    fn static_density_without_diffusion() {
        let g = make_grid(1, 128, 20.0).unwrap();
        let rho = gaussian_packet(&g, &[0.0], 1.0, &[0.0]).unwrap().density();
        let spec = EvolutionSpec::new(EvolutionKind::DensityDiffusion { d: 0.0 }, 0.01, 0.5, 10).unwrap();
        let t = evolve_density_diffusion(&g, &rho, &[vec![0.0; 128]], 0.0, &spec).unwrap();
        for d in &t.densities {
            assert!(d.iter().zip(&rho).all(|(a, b)| (a - b).abs() < 1e-15));
        }
    }

    #[test]
    fn diffusive_density_obeys_drift_diffusion() {
        let g = make_grid(1, 512, 32.0).unwrap();
        let v = harmonic_potential(&g, 1.0, 0.5, &[0.0]);
        let psi = gaussian_packet(&g, &[1.0], 1.0, &[0.5]).unwrap();
        let coarse = dg_density_residual(&psi, &v, 0.05, 1e-3, &natural(), 1e-10).unwrap();
        let fine = dg_density_residual(&psi, &v, 0.05, 5e-4, &natural(), 1e-10).unwrap();
        assert!(coarse < 1e-5 && fine < coarse, "{coarse} {fine}");
        assert!(dg_density_residual(&psi, &v, 0.05, 0.0, &natural(), 1e-10).is_err());
    }
}
