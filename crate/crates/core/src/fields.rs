//! Wavefunctions, the polar (Madelung) map and derived hydrodynamic fields.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{fd_gradient4, norm_squared, spectral_gradient_complex, spectral_laplacian, spectral_laplacian_complex, Grid};

/// Default node-mask threshold relative to `max ρ`.
pub const DEFAULT_MASK_EPS: f64 = 1e-6;

/// `ħ`, the mass and the regulariser coefficient `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub mass: f64,
    pub alpha: f64,
}

impl PhysicalConstants {
    /// Constants with `α` set to the Fisher scale `ħ²/2m`.
    pub fn new(hbar: f64, mass: f64) -> Result<Self> {
        if !(hbar > 0.0) || !(mass > 0.0) {
            return Err(Error::InvalidParameter("hbar and mass must be positive".into()));
        }
        Ok(Self { hbar, mass, alpha: hbar * hbar / (2.0 * mass) })
    }

    pub fn natural() -> Self {
        Self { hbar: 1.0, mass: 1.0, alpha: 0.5 }
    }

    pub fn with_alpha(self, alpha: f64) -> Self {
        Self { alpha, ..self }
    }

    /// `ħ²/2m`, always derived.
    pub fn alpha_star(&self) -> f64 {
        self.hbar * self.hbar / (2.0 * self.mass)
    }
}

/// Complex amplitude on a grid together with its time stamp.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    pub grid: Grid,
    pub values: Vec<Complex64>,
    pub time: f64,
}

impl WaveField {
    pub fn new(grid: Grid, values: Vec<Complex64>, time: f64) -> Result<Self> {
        grid.check_len(values.len())?;
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { step: 0, time });
        }
        Ok(Self { grid, values, time })
    }

    /// Same field rescaled to unit `L²` norm.
    pub fn normalized(mut self) -> Result<Self> {
        let nrm = self.norm_squared();
        if !(nrm > 0.0) {
            return Err(Error::InvalidParameter("cannot normalise a zero field".into()));
        }
        let s = 1.0 / nrm.sqrt();
        self.values.iter_mut().for_each(|z| *z *= s);
        Ok(self)
    }

    pub fn norm_squared(&self) -> f64 {
        norm_squared(&self.values, &self.grid)
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn conj(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|z| z.conj()).collect(),
            time: self.time,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Hydrodynamic view of a wavefunction.
#[derive(Debug, Clone)]
pub struct HydroFields {
    pub grid: Grid,
    pub rho: Vec<f64>,
    /// Phase action `S`, unwrapped from the density maximum.
    pub phase: Vec<f64>,
    /// `v = j/ρ` on the mask, zero elsewhere.
    pub velocity: Vec<Vec<f64>>,
    /// `j = (ħ/m) Im(ψ* ∇ψ)` everywhere.
    pub current: Vec<Vec<f64>>,
    pub mask: Vec<bool>,
    pub mask_eps: f64,
    /// Largest masked gap between `j/ρ` and the stencil gradient of `S` over `m`.
    pub velocity_discrepancy: f64,
    /// Largest masked gap between the two 2D unwrap orders (0 in 1D).
    pub unwrap_inconsistency: f64,
}

impl HydroFields {
    pub fn mask_fraction(&self) -> f64 {
        self.mask.iter().filter(|&&m| m).count() as f64 / self.mask.len() as f64
    }
}

/// `ψ = √ρ e^{iS/ħ}`.
pub fn polar_compose(grid: &Grid, rho: &[f64], phase: &[f64], hbar: f64) -> Result<WaveField> {
    grid.check_len(rho.len())?;
    grid.check_len(phase.len())?;
    if let Some(r) = rho.iter().find(|&&r| r < -1e-14) {
        return Err(Error::InvalidParameter(format!("negative density {r}")));
    }
    let values = rho
        .iter()
        .zip(phase)
        .map(|(&r, &s)| Complex64::from_polar(r.max(0.0).sqrt(), s / hbar))
        .collect();
    WaveField::new(grid.clone(), values, 0.0)
}

/// Sites with `ρ > eps · max ρ`.
pub fn density_mask(rho: &[f64], eps: f64) -> Vec<bool> {
    let cut = eps * rho.iter().copied().fold(0.0, f64::max);
    rho.iter().map(|&r| r > cut).collect()
}

/// Weights rising smoothly from 0 at `ρ = eps·max ρ` to 1 a decade above.
pub fn smooth_mask_weights(rho: &[f64], eps: f64) -> Vec<f64> {
    let cut = eps * rho.iter().copied().fold(0.0, f64::max);
    rho.iter()
        .map(|&r| {
            if r <= cut {
                return 0.0;
            }
            let s = (r / cut).log10().clamp(0.0, 1.0);
            s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
        })
        .collect()
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Unwrap raw phases along a line of indices, anchored at `line[start]`.
fn unwrap_line(raw: &[f64], out: &mut [f64], line: &[usize], start: usize, anchor: f64) {
    out[line[start]] = anchor;
    for k in start + 1..line.len() {
        out[line[k]] = out[line[k - 1]] + wrap_angle(raw[line[k]] - raw[line[k - 1]]);
    }
    for k in (0..start).rev() {
        out[line[k]] = out[line[k + 1]] + wrap_angle(raw[line[k]] - raw[line[k + 1]]);
    }
}

fn unwrap_phase(raw: &[f64], grid: &Grid, origin: usize, x_first: bool) -> Vec<f64> {
    let n = grid.n();
    let mut out = vec![0.0; raw.len()];
    if grid.dim() == 1 {
        let line: Vec<usize> = (0..n).collect();
        unwrap_line(raw, &mut out, &line, origin, raw[origin]);
        return out;
    }
    let (ix0, iy0) = (origin % n, origin / n);
    let row = |iy: usize| -> Vec<usize> { (0..n).map(|ix| iy * n + ix).collect() };
    let col = |ix: usize| -> Vec<usize> { (0..n).map(|iy| iy * n + ix).collect() };
    if x_first {
        unwrap_line(raw, &mut out, &row(iy0), ix0, raw[origin]);
        for ix in 0..n {
            let anchor = out[iy0 * n + ix];
            unwrap_line(raw, &mut out, &col(ix), iy0, anchor);
        }
    } else {
        unwrap_line(raw, &mut out, &col(ix0), iy0, raw[origin]);
        for iy in 0..n {
            let anchor = out[iy * n + ix0];
            unwrap_line(raw, &mut out, &row(iy), ix0, anchor);
        }
    }
    out
}

/// Madelung decomposition with node mask `ρ > eps_mask · max ρ`.
pub fn polar_decompose(psi: &WaveField, eps_mask: f64, constants: &PhysicalConstants) -> Result<HydroFields> {
    let grid = &psi.grid;
    let rho = psi.density();
    let mask = density_mask(&rho, eps_mask);
    let grad = spectral_gradient_complex(&psi.values, grid)?;
    let scale = constants.hbar / constants.mass;
    let current: Vec<Vec<f64>> = grad
        .iter()
        .map(|g| psi.values.iter().zip(g).map(|(p, d)| scale * (p.conj() * d).im).collect())
        .collect();
    let velocity: Vec<Vec<f64>> = current
        .iter()
        .map(|j| {
            j.iter()
                .zip(&rho)
                .zip(&mask)
                .map(|((&j, &r), &m)| if m { j / r } else { 0.0 })
                .collect()
        })
        .collect();

    let origin = rho
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |acc, (i, &r)| if r > acc.1 { (i, r) } else { acc })
        .0;
    let raw: Vec<f64> = psi.values.iter().map(|z| z.arg()).collect();
    let unwrapped = unwrap_phase(&raw, grid, origin, true);
    let unwrap_inconsistency = if grid.dim() == 2 {
        let other = unwrap_phase(&raw, grid, origin, false);
        unwrapped
            .iter()
            .zip(&other)
            .zip(&mask)
            .filter(|(_, &m)| m)
            .map(|((a, b), _)| constants.hbar * (a - b).abs())
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    let phase: Vec<f64> = unwrapped.iter().map(|a| constants.hbar * a).collect();

    // Health metric: compare j/ρ with ∇S/m where the whole stencil is masked in.
    let grad_s = fd_gradient4(&phase, grid)?;
    let n = grid.n();
    let mut velocity_discrepancy: f64 = 0.0;
    for i in 0..rho.len() {
        let inner = (0..grid.dim()).all(|a| {
            (-2isize..=2).all(|o| {
                let (ix, iy) = ((i % n) as isize, (i / n) as isize);
                let k = if a == 0 {
                    iy * n as isize + (ix + o).rem_euclid(n as isize)
                } else {
                    (iy + o).rem_euclid(n as isize) * n as isize + ix
                };
                mask[k as usize]
            })
        });
        if inner {
            for a in 0..grid.dim() {
                let d = (velocity[a][i] - grad_s[a][i] / constants.mass).abs();
                velocity_discrepancy = velocity_discrepancy.max(d);
            }
        }
    }

    Ok(HydroFields {
        grid: grid.clone(),
        rho,
        phase,
        velocity,
        current,
        mask,
        mask_eps: eps_mask,
        velocity_discrepancy,
        unwrap_inconsistency,
    })
}

/// `Q = −coeff · Δ√ρ/√ρ` on the mask, zero elsewhere.
pub fn quantum_potential(rho: &[f64], coeff: f64, grid: &Grid, mask: &[bool]) -> Result<Vec<f64>> {
    grid.check_len(rho.len())?;
    grid.check_len(mask.len())?;
    let amp: Vec<f64> = rho.iter().map(|r| r.max(0.0).sqrt()).collect();
    let lap = spectral_laplacian(&amp, grid)?;
    Ok(lap
        .iter()
        .zip(&amp)
        .zip(mask)
        .map(|((l, a), &m)| if m { -coeff * l / a } else { 0.0 })
        .collect())
}

/// `Hψ` with `H = −ħ²/2m Δ + V`, spectral kinetic term.
pub fn apply_hamiltonian(psi: &WaveField, potential: &[f64], constants: &PhysicalConstants) -> Result<Vec<Complex64>> {
    psi.grid.check_len(potential.len())?;
    let lap = spectral_laplacian_complex(&psi.values, &psi.grid)?;
    let c = constants.hbar * constants.hbar / (2.0 * constants.mass);
    Ok(lap
        .iter()
        .zip(&psi.values)
        .zip(potential)
        .map(|((l, p), v)| -c * l + v * p)
        .collect())
}

/// `S_t = −Re(Hψ/ψ)` on the mask, zero elsewhere.
pub fn phase_time_derivative(
    psi: &WaveField,
    potential: &[f64],
    constants: &PhysicalConstants,
    mask: &[bool],
) -> Result<Vec<f64>> {
    let h = apply_hamiltonian(psi, potential, constants)?;
    Ok(h.iter()
        .zip(&psi.values)
        .zip(mask)
        .map(|((h, p), &m)| if m { -(h / p).re } else { 0.0 })
        .collect())
}

/// Centred estimate of `S_t` from neighbouring snapshots, free of unwrapping.
pub fn centered_phase_rate(
    minus: &WaveField,
    centre: &WaveField,
    plus: &WaveField,
    dt: f64,
    hbar: f64,
    mask: &[bool],
) -> Vec<f64> {
    centre
        .values
        .iter()
        .zip(&minus.values)
        .zip(&plus.values)
        .zip(mask)
        .map(|(((c, m), p), &on)| {
            if on {
                hbar * ((p * c.conj()).arg() - (m * c.conj()).arg()) / (2.0 * dt)
            } else {
                0.0
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::states::{gaussian_packet, hermite_state, harmonic_potential};

    #[test]
    fn constants_derive_alpha_star() {
        let c = PhysicalConstants::new(2.0, 3.0).unwrap();
        assert_eq!(c.alpha_star(), 4.0 / 6.0);
        assert!(PhysicalConstants::new(0.0, 1.0).is_err());
    }

    #[test]
    fn uniform_compose() {
        let g = make_grid(1, 32, 4.0).unwrap();
        let psi = polar_compose(&g, &vec![0.25; 32], &vec![0.0; 32], 1.0).unwrap();
        assert!(psi.values.iter().all(|z| (z.re - 0.5).abs() < 1e-15 && z.im == 0.0));
        assert!((psi.norm_squared() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_density_rejected() {
        let g = make_grid(1, 16, 1.0).unwrap();
        let mut rho = vec![1.0; 16];
        rho[3] = -1e-10;
        assert!(polar_compose(&g, &rho, &[0.0; 16], 1.0).is_err());
    }

    #[test]
    fn plane_wave_velocity() {
        let g = make_grid(1, 64, 10.0).unwrap();
        let k0 = 2.0 * PI * 3.0 / 10.0;
        let c = PhysicalConstants::new(1.0, 2.0).unwrap();
        let vals = g.map(|x| Complex64::from_polar(1.0 / 10f64.sqrt(), k0 * x[0]));
        let h = polar_decompose(&WaveField::new(g, vals, 0.0).unwrap(), DEFAULT_MASK_EPS, &c).unwrap();
        assert!(h.mask.iter().all(|&m| m));
        assert!(h.velocity[0].iter().all(|v| (v - k0 / 2.0).abs() < 1e-12));
    }

    #[test]
    fn boosted_gaussian_phase() {
        let g = make_grid(1, 512, 40.0).unwrap();
        let c = PhysicalConstants::natural();
        let psi = gaussian_packet(&g, &[0.0], 1.0, &[1.5]).unwrap();
        let h = polar_decompose(&psi, DEFAULT_MASK_EPS, &c).unwrap();
        let x = g.axis();
        let offset = h.phase[256] - 1.5 * x[256];
        for i in 0..512 {
            if h.mask[i] {
                assert!((h.phase[i] - 1.5 * x[i] - offset).abs() < 1e-8);
                assert!((h.current[0][i] - h.rho[i] * h.velocity[0][i]).abs() <= 1e-10);
            }
        }
        assert!(h.velocity_discrepancy < 1e-6);
    }

    #[test]
    fn excited_state_node_is_masked() {
        let g = make_grid(1, 256, 20.0).unwrap();
        let psi = hermite_state(&g, 1, 1.0, 1.0, 1.0, 0.0).unwrap();
        let h = polar_decompose(&psi, DEFAULT_MASK_EPS, &PhysicalConstants::natural()).unwrap();
        assert!(!h.mask[128]);
        assert!(h.mask[140]);
    }

    #[test]
    fn gaussian_quantum_potential() {
        let g = make_grid(1, 512, 30.0).unwrap();
        let s2: f64 = 1.3;
        let rho = g.map(|x| (-x[0] * x[0] / s2).exp());
        let mask = density_mask(&rho, DEFAULT_MASK_EPS);
        let q = quantum_potential(&rho, 0.7, &g, &mask).unwrap();
        let x = g.axis();
        for i in 0..512 {
            if mask[i] {
                let exact = 0.7 * (1.0 / s2 - x[i] * x[i] / (s2 * s2));
                assert!((q[i] - exact).abs() < 1e-8, "{i} {} {exact}", q[i]);
            }
        }
        let uniform = quantum_potential(&vec![0.1; 512], 1.0, &g, &vec![true; 512]).unwrap();
        assert!(uniform.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn ground_state_balances_potential() {
        let g = make_grid(1, 512, 24.0).unwrap();
        let c = PhysicalConstants::natural();
        let psi = hermite_state(&g, 0, 1.0, 1.0, 1.0, 0.0).unwrap();
        let v = harmonic_potential(&g, 1.0, 1.0, &[0.0]);
        let rho = psi.density();
        let mask = density_mask(&rho, DEFAULT_MASK_EPS);
        let q = quantum_potential(&rho, c.alpha_star(), &g, &mask).unwrap();
        for i in 0..512 {
            if mask[i] {
                assert!((v[i] + q[i] - 0.5).abs() < 1e-8);
            }
        }
        let st = phase_time_derivative(&psi, &v, &c, &mask).unwrap();
        for i in 0..512 {
            if mask[i] {
                assert!((st[i] + 0.5).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn free_plane_wave_phase_rate() {
        let g = make_grid(1, 64, 10.0).unwrap();
        let k0 = 2.0 * PI * 2.0 / 10.0;
        let vals = g.map(|x| Complex64::from_polar(1.0 / 10f64.sqrt(), k0 * x[0]));
        let psi = WaveField::new(g.clone(), vals, 0.0).unwrap();
        let st = phase_time_derivative(&psi, &[0.0; 64], &PhysicalConstants::natural(), &[true; 64]).unwrap();
        assert!(st.iter().all(|s| (s + 0.5 * k0 * k0).abs() < 1e-12));
    }

    #[test]
    fn smooth_weights_bounded() {
        let rho = vec![1.0, 1e-7, 2e-6, 5e-6, 1e-5, 0.5];
        let w = smooth_mask_weights(&rho, 1e-6);
        assert_eq!(w[1], 0.0);
        assert!(w[2] > 0.0 && w[2] < w[3] && w[3] < 1.0);
        assert_eq!(w[4], 1.0);
        assert_eq!(w[5], 1.0);
    }
}
