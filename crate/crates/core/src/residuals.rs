//! Continuity and Hamilton–Jacobi residuals, coefficient scans and the
//! momentum-balance audit.
//!
//! The continuity residual is the masked quotient
//! `⟨|ρ_t + ∇·(ρ∇S/m)|²⟩ / ⟨|ρ_t|² + |∇·(ρ∇S/m)|² + |(ħ/2m)Δρ|²⟩`. The last
//! denominator term is a state-intrinsic rate scale that keeps the quotient
//! defined on stationary states, where both drift terms vanish.
//!
//! The HJ residual is the root quotient
//! `(⟨|r − ⟨r⟩|²⟩ / ⟨|S_t|² + |∇S|²/2m + V|² + |Q_α|²⟩)^{1/2}` with
//! `r = S_t + |∇S|²/2m + V + Q_α`, averaged with weight `ρ`. It grows linearly
//! in `|α − α⋆|`. Both are evaluated in the centre-of-momentum frame by
//! default so that the curve does not depend on a Galilean boost.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{
    apply_hamiltonian, centered_phase_rate, density_mask, phase_time_derivative, polar_decompose,
    smooth_mask_weights, PhysicalConstants, WaveField, DEFAULT_MASK_EPS,
};
use crate::grid::{fd_gradient4, fd_laplacian4, neumaier_sum, spectral_laplacian, Grid};
use crate::propagate::{EvolutionKind, Stepper, Trajectory, DIFFUSION_MASK_EPS};

/// Mask threshold for residual quotients. The HJ quotient is `ρ`-weighted so
/// the deep tails carry no weight, while a cut at `1e−6` lets the sampling of
/// the cut itself leak into the curve at the `1e−9` level under sub-cell
/// translations.
pub const RESIDUAL_MASK_EPS: f64 = 1e-10;

/// Reference frame for residual evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Lab,
    /// Frame moving with the mean velocity `P/(m∫ρ)`.
    Comoving,
}

/// How `S_t` (and `ρ_t`) are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseRate {
    /// `S_t = −Re(Hψ/ψ)`, `ρ_t = (2/ħ) Im(ψ* Hψ)` from the centre snapshot.
    Generator,
    /// Centred differences of the neighbouring snapshots.
    Centered,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualOptions {
    pub eps_mask: f64,
    pub frame: Frame,
    pub phase_rate: PhaseRate,
    /// Five-point quadratic smoothing of `S_t`.
    pub smooth_phase_rate: bool,
}

impl Default for ResidualOptions {
    fn default() -> Self {
        Self { eps_mask: RESIDUAL_MASK_EPS, frame: Frame::Comoving, phase_rate: PhaseRate::Centered, smooth_phase_rate: false }
    }
}

impl ResidualOptions {
    pub fn generator() -> Self {
        Self { phase_rate: PhaseRate::Generator, ..Self::default() }
    }
}

/// Residual values at one snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSample {
    pub time: f64,
    pub r_cont: f64,
    pub r_hj: f64,
    pub alpha_used: f64,
    pub mask_fraction: f64,
}

/// Three time-adjacent states `(t−dt, t, t+dt)`.
#[derive(Debug, Clone)]
pub struct SnapshotTriple {
    pub minus: WaveField,
    pub centre: WaveField,
    pub plus: WaveField,
    pub dt: f64,
}

impl SnapshotTriple {
    /// Neighbours produced by one forward and one backward step of `kind`.
    pub fn around(
        psi: &WaveField,
        potential: &[f64],
        kind: EvolutionKind,
        dt: f64,
        constants: &PhysicalConstants,
    ) -> Result<Self> {
        let fwd = Stepper::new(&psi.grid, potential, kind, dt, constants, DIFFUSION_MASK_EPS)?;
        let bwd = Stepper::new(&psi.grid, potential, kind, -dt, constants, DIFFUSION_MASK_EPS)?;
        Ok(Self { minus: bwd.step(psi)?, centre: psi.clone(), plus: fwd.step(psi)?, dt })
    }

    /// Mean velocity `∫j / ∫ρ` of the centre state.
    pub fn mean_velocity(&self, constants: &PhysicalConstants) -> Result<Vec<f64>> {
        let h = polar_decompose(&self.centre, 1.0, constants)?;
        let total = neumaier_sum(h.rho.iter().copied());
        Ok(h.current.iter().map(|j| neumaier_sum(j.iter().copied()) / total).collect())
    }

    /// The same triple seen from a frame moving with the mean velocity.
    pub fn comoving(&self, constants: &PhysicalConstants) -> Result<Self> {
        let u = self.mean_velocity(constants)?;
        let tr = |psi: &WaveField, tau: f64| galilean_shift(psi, &u, tau, constants);
        Ok(Self { minus: tr(&self.minus, -self.dt), centre: tr(&self.centre, 0.0), plus: tr(&self.plus, self.dt), dt: self.dt })
    }
}

/// `ψ'(x) = e^{−i(m u·x + ½ m u² τ)/ħ} ψ(x + uτ)` with a spectral translation.
pub fn galilean_shift(psi: &WaveField, u: &[f64], tau: f64, constants: &PhysicalConstants) -> WaveField {
    let grid = &psi.grid;
    let mut hat = psi.values.clone();
    if tau != 0.0 {
        grid.fft(&mut hat);
        let n = grid.n();
        let k = grid.wavenumbers();
        for (idx, z) in hat.iter_mut().enumerate() {
            let mut ph = k[idx % n] * u[0] * tau;
            if grid.dim() == 2 {
                ph += k[idx / n] * u[1] * tau;
            }
            *z *= Complex64::from_polar(1.0, ph);
        }
        grid.ifft(&mut hat);
    }
    let u2: f64 = u.iter().map(|v| v * v).sum();
    let (m, hbar) = (constants.mass, constants.hbar);
    for (idx, z) in hat.iter_mut().enumerate() {
        let ux: f64 = (0..grid.dim()).map(|a| u[a] * grid.coord(idx, a)).sum();
        *z *= Complex64::from_polar(1.0, -(m * ux + 0.5 * m * u2 * tau) / hbar);
    }
    WaveField { grid: grid.clone(), values: hat, time: psi.time }
}

fn weighted_mean(values: &[f64], weights: &[f64]) -> f64 {
    let wsum = neumaier_sum(weights.iter().copied());
    if wsum == 0.0 {
        return 0.0;
    }
    neumaier_sum(values.iter().zip(weights).map(|(v, w)| v * w)) / wsum
}

/// Subtract the weighted mean; applying it twice equals applying it once.
pub fn mean_subtract(values: &[f64], weights: &[f64]) -> Vec<f64> {
    let mean = weighted_mean(values, weights);
    values.iter().zip(weights).map(|(v, w)| if *w > 0.0 { v - mean } else { 0.0 }).collect()
}

/// Five-point quadratic (Savitzky–Golay) smoothing where the window is masked in.
pub fn smooth5(values: &[f64], mask: &[bool], grid: &Grid) -> Vec<f64> {
    const C: [f64; 5] = [-3.0, 12.0, 17.0, 12.0, -3.0];
    let n = grid.n() as isize;
    (0..values.len())
        .map(|i| {
            if grid.dim() != 1 || !mask[i] {
                return values[i];
            }
            let idx = |o: isize| (i as isize + o).rem_euclid(n) as usize;
            if (-2..=2).all(|o| mask[idx(o)]) {
                (-2..=2).map(|o| C[(o + 2) as usize] * values[idx(o)]).sum::<f64>() / 35.0
            } else {
                values[i]
            }
        })
        .collect()
}

/// Pre-computed fields of the HJ residual; evaluating a new `α` is cheap.
#[derive(Debug, Clone)]
pub struct HjTerms {
    pub time: f64,
    phase_rate: Vec<f64>,
    classical: Vec<f64>,
    bohm: Vec<f64>,
    weights: Vec<f64>,
    pub mask_fraction: f64,
    pub r_cont: f64,
}

fn prepared(triple: &SnapshotTriple, constants: &PhysicalConstants, opts: &ResidualOptions) -> Result<SnapshotTriple> {
    match opts.frame {
        Frame::Lab => Ok(triple.clone()),
        Frame::Comoving => triple.comoving(constants),
    }
}

impl HjTerms {
    pub fn new(
        triple: &SnapshotTriple,
        potential: &[f64],
        constants: &PhysicalConstants,
        opts: &ResidualOptions,
    ) -> Result<Self> {
        let t = prepared(triple, constants, opts)?;
        let grid = &t.centre.grid;
        let hydro = polar_decompose(&t.centre, opts.eps_mask, constants)?;
        if !hydro.mask.iter().any(|&m| m) {
            return Err(Error::EmptyMask);
        }
        let mask = &hydro.mask;
        let mut st = match opts.phase_rate {
            PhaseRate::Generator => phase_time_derivative(&t.centre, potential, constants, mask)?,
            PhaseRate::Centered => {
                if !(t.dt > 0.0) {
                    return Err(Error::InvalidParameter("centred rate needs dt > 0".into()));
                }
                centered_phase_rate(&t.minus, &t.centre, &t.plus, t.dt, constants.hbar, mask)
            }
        };
        if opts.smooth_phase_rate {
            st = smooth5(&st, mask, grid);
        }
        let grad_s = fd_gradient4(&hydro.phase, grid)?;
        let amp: Vec<f64> = hydro.rho.iter().map(|r| r.sqrt()).collect();
        let lap_amp = fd_laplacian4(&amp, grid)?;
        let chi = smooth_mask_weights(&hydro.rho, opts.eps_mask);
        let m = constants.mass;
        let n = hydro.rho.len();
        let mut classical = vec![0.0; n];
        let mut bohm = vec![0.0; n];
        let mut phase_rate = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            if chi[i] > 0.0 {
                let g2: f64 = grad_s.iter().map(|g| g[i] * g[i]).sum();
                classical[i] = g2 / (2.0 * m) + potential[i];
                bohm[i] = lap_amp[i] / amp[i];
                phase_rate[i] = st[i];
                weights[i] = chi[i] * hydro.rho[i];
            }
        }
        let r_cont = continuity_from(&t, &hydro.phase, &hydro.rho, potential, constants, opts)?;
        Ok(Self { time: triple.centre.time, phase_rate, classical, bohm, weights, mask_fraction: hydro.mask_fraction(), r_cont })
    }

    /// HJ residual at coefficient `alpha`.
    pub fn residual(&self, alpha: f64) -> f64 {
        let num: Vec<f64> = (0..self.weights.len())
            .map(|i| self.phase_rate[i] + self.classical[i] - alpha * self.bohm[i])
            .collect();
        let num = mean_subtract(&num, &self.weights);
        let top = neumaier_sum(num.iter().zip(&self.weights).map(|(r, w)| w * r * r));
        let bottom = neumaier_sum((0..self.weights.len()).map(|i| {
            let q = alpha * self.bohm[i];
            self.weights[i] * (self.phase_rate[i].powi(2) + self.classical[i].powi(2) + q * q)
        }));
        if top == 0.0 {
            0.0
        } else {
            (top / bottom).sqrt()
        }
    }
}

fn continuity_from(
    t: &SnapshotTriple,
    phase: &[f64],
    rho: &[f64],
    potential: &[f64],
    constants: &PhysicalConstants,
    opts: &ResidualOptions,
) -> Result<f64> {
    let grid = &t.centre.grid;
    let rho_t: Vec<f64> = match opts.phase_rate {
        PhaseRate::Generator => {
            let h = apply_hamiltonian(&t.centre, potential, constants)?;
            t.centre.values.iter().zip(&h).map(|(p, h)| 2.0 / constants.hbar * (p.conj() * h).im).collect()
        }
        PhaseRate::Centered => t
            .plus
            .values
            .iter()
            .zip(&t.minus.values)
            .map(|(p, m)| (p.norm_sqr() - m.norm_sqr()) / (2.0 * t.dt))
            .collect(),
    };
    let grad_s = fd_gradient4(phase, grid)?;
    let mut div = vec![0.0; rho.len()];
    for (a, g) in grad_s.iter().enumerate() {
        let flux: Vec<f64> = g.iter().zip(rho).map(|(g, r)| r * g / constants.mass).collect();
        let d = fd_gradient4(&flux, grid)?;
        div.iter_mut().zip(&d[a]).for_each(|(o, v)| *o += v);
    }
    let scale = fd_laplacian4(rho, grid)?;
    let c = constants.hbar / (2.0 * constants.mass);
    let chi = smooth_mask_weights(rho, opts.eps_mask);
    let top = neumaier_sum((0..rho.len()).map(|i| chi[i] * (rho_t[i] + div[i]).powi(2)));
    let bottom = neumaier_sum(
        (0..rho.len()).map(|i| chi[i] * (rho_t[i].powi(2) + div[i].powi(2) + (c * scale[i]).powi(2))),
    );
    if bottom == 0.0 {
        return Err(Error::EmptyMask);
    }
    Ok(top / bottom)
}

/// Continuity residual of a snapshot triple; independent of `α`.
pub fn continuity_residual(
    triple: &SnapshotTriple,
    potential: &[f64],
    constants: &PhysicalConstants,
    opts: &ResidualOptions,
) -> Result<f64> {
    let t = prepared(triple, constants, opts)?;
    let hydro = polar_decompose(&t.centre, opts.eps_mask, constants)?;
    if !hydro.mask.iter().any(|&m| m) {
        return Err(Error::EmptyMask);
    }
    continuity_from(&t, &hydro.phase, &hydro.rho, potential, constants, opts)
}

/// HJ residual of a snapshot triple at coefficient `alpha`.
pub fn hj_residual(
    triple: &SnapshotTriple,
    potential: &[f64],
    alpha: f64,
    constants: &PhysicalConstants,
    opts: &ResidualOptions,
) -> Result<f64> {
    Ok(HjTerms::new(triple, potential, constants, opts)?.residual(alpha))
}

/// Both residuals at one snapshot.
pub fn residual_sample(
    triple: &SnapshotTriple,
    potential: &[f64],
    alpha: f64,
    constants: &PhysicalConstants,
    opts: &ResidualOptions,
) -> Result<ResidualSample> {
    let terms = HjTerms::new(triple, potential, constants, opts)?;
    Ok(ResidualSample {
        time: terms.time,
        r_cont: terms.r_cont,
        r_hj: terms.residual(alpha),
        alpha_used: alpha,
        mask_fraction: terms.mask_fraction,
    })
}

/// A residual curve over coefficient ratios `α/α⋆`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub alphas: Vec<f64>,
    pub residuals: Vec<f64>,
    pub r_cont_mean: f64,
    pub argmin: f64,
    pub min_value: f64,
    /// Minimum sits on the end of the grid.
    pub inconclusive: bool,
}

impl ScanResult {
    pub fn from_curve(alphas: Vec<f64>, residuals: Vec<f64>, r_cont_mean: f64) -> Result<Self> {
        if alphas.is_empty() || alphas.len() != residuals.len() {
            return Err(Error::InvalidParameter("scan grid and curve must match".into()));
        }
        if alphas.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("scan grid must be strictly increasing".into()));
        }
        let (k, &min_value) = residuals
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty");
        Ok(Self {
            argmin: alphas[k],
            min_value,
            inconclusive: k == 0 || k + 1 == alphas.len(),
            alphas,
            residuals,
            r_cont_mean,
        })
    }

    /// Number of interior local minima of the curve.
    pub fn local_minima(&self) -> usize {
        self.residuals.windows(3).filter(|w| w[1] < w[0] && w[1] < w[2]).count()
    }
}

/// Evenly spaced grid of `steps` ratios on `[lo, hi]`.
pub fn ratio_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps < 2 {
        return vec![lo];
    }
    (0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect()
}

/// Terms for every interior snapshot of a trajectory.
pub fn trajectory_terms(
    traj: &Trajectory,
    constants: &PhysicalConstants,
    opts: &ResidualOptions,
) -> Result<Vec<HjTerms>> {
    let inner = traj.snapshots.len().saturating_sub(2);
    if inner == 0 {
        return Err(Error::TooFewSnapshots { needed: 3, got: traj.snapshots.len() });
    }
    traj.snapshots[1..traj.snapshots.len() - 1]
        .par_iter()
        .map(|psi| {
            let triple = SnapshotTriple::around(psi, &traj.potential, traj.spec.kind, traj.spec.dt, constants)?;
            HjTerms::new(&triple, &traj.potential, constants, opts)
        })
        .collect()
}

/// Time-averaged HJ residual over interior snapshots for each `α/α⋆`.
pub fn alpha_scan(
    traj: &Trajectory,
    alpha_ratios: &[f64],
    constants: &PhysicalConstants,
    opts: &ResidualOptions,
) -> Result<ScanResult> {
    let terms = trajectory_terms(traj, constants, opts)?;
    scan_terms(&terms, alpha_ratios, constants)
}

/// Scan pre-computed snapshot terms.
pub fn scan_terms(terms: &[HjTerms], alpha_ratios: &[f64], constants: &PhysicalConstants) -> Result<ScanResult> {
    let a_star = constants.alpha_star();
    let count = terms.len() as f64;
    let curve: Vec<f64> = alpha_ratios
        .par_iter()
        .map(|r| neumaier_sum(terms.iter().map(|t| t.residual(r * a_star))) / count)
        .collect();
    let r_cont = neumaier_sum(terms.iter().map(|t| t.r_cont)) / count;
    ScanResult::from_curve(alpha_ratios.to_vec(), curve, r_cont)
}

/// Per-mass coefficient scans on oscillator ground states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiMassReport {
    pub masses: Vec<f64>,
    pub scans: Vec<ScanResult>,
    /// Shared argmin when every component agrees.
    pub common_argmin: Option<f64>,
}

/// For each mass `m_i`, `R_i(c) = ‖V_i + Q_{c,i} − E_i‖_{L²(ρ_i)} / E_i` with
/// `Q_{c,i} = −c · scale_i · ħ²/(2m_i) · Δ√ρ_i/√ρ_i`. `scales` defaults to 1.
pub fn multi_mass_scan(
    grid: &Grid,
    c_grid: &[f64],
    masses: &[f64],
    scales: Option<&[f64]>,
    hbar: f64,
    omega: f64,
) -> Result<MultiMassReport> {
    let mut scans = Vec::with_capacity(masses.len());
    for (i, &m) in masses.iter().enumerate() {
        let scale = scales.map_or(1.0, |s| s[i]);
        let constants = PhysicalConstants::new(hbar, m)?;
        let psi = crate::states::hermite_state(grid, 0, m, omega, hbar, 0.0)?;
        let v = crate::states::harmonic_potential(grid, m, omega, &[0.0]);
        let e = crate::states::hermite_energy(0, omega, hbar);
        let rho = psi.density();
        let mask = density_mask(&rho, DEFAULT_MASK_EPS);
        let amp: Vec<f64> = rho.iter().map(|r| r.sqrt()).collect();
        let lap = spectral_laplacian(&amp, grid)?;
        let w: Vec<f64> = (0..rho.len()).map(|k| if mask[k] { rho[k] } else { 0.0 }).collect();
        let wsum = neumaier_sum(w.iter().copied());
        let curve = c_grid
            .iter()
            .map(|c| {
                let coeff = c * scale * constants.alpha_star();
                let s = neumaier_sum((0..rho.len()).filter(|&k| mask[k]).map(|k| {
                    let q = -coeff * lap[k] / amp[k];
                    w[k] * (v[k] + q - e).powi(2)
                }));
                (s / wsum).sqrt() / e
            })
            .collect();
        scans.push(ScanResult::from_curve(c_grid.to_vec(), curve, 0.0)?);
    }
    if let Some(s) = scans.iter().find(|s| s.inconclusive) {
        return Err(Error::InconclusiveScan { argmin: s.argmin });
    }
    let first = scans[0].argmin;
    let common_argmin = scans.iter().all(|s| s.argmin == first).then_some(first);
    Ok(MultiMassReport { masses: masses.to_vec(), scans, common_argmin })
}

/// Normalised defect of local momentum balance with the quantum stress
/// `Π = ρvv − (α/2m) ρ ∂²ln ρ` at the candidate `alpha` (1D).
pub fn momentum_balance_residual(
    triple: &SnapshotTriple,
    potential: &[f64],
    alpha: f64,
    constants: &PhysicalConstants,
    eps_mask: f64,
) -> Result<f64> {
    let grid = &triple.centre.grid;
    if grid.dim() != 1 {
        return Err(Error::InvalidParameter("momentum balance is evaluated in 1D".into()));
    }
    let m = constants.mass;
    let momentum = |psi: &WaveField| -> Result<Vec<f64>> {
        let h = polar_decompose(psi, eps_mask, constants)?;
        let g = fd_gradient4(&h.phase, grid)?;
        Ok(h.rho.iter().zip(&g[0]).map(|(r, g)| r * g / m).collect())
    };
    let hydro = polar_decompose(&triple.centre, eps_mask, constants)?;
    if !hydro.mask.iter().any(|&b| b) {
        return Err(Error::EmptyMask);
    }
    let rho = &hydro.rho;
    let (p_minus, p_plus) = (momentum(&triple.minus)?, momentum(&triple.plus)?);
    let dt_flux: Vec<f64> = p_plus.iter().zip(&p_minus).map(|(a, b)| (a - b) / (2.0 * triple.dt)).collect();
    let v = &fd_gradient4(&hydro.phase, grid)?[0];
    let drho = &fd_gradient4(rho, grid)?[0];
    let d2rho = fd_laplacian4(rho, grid)?;
    let chi = smooth_mask_weights(rho, eps_mask);
    let stress: Vec<f64> = (0..rho.len())
        .map(|i| {
            if chi[i] == 0.0 {
                return 0.0;
            }
            let vel = v[i] / m;
            rho[i] * vel * vel - alpha / (2.0 * m) * (d2rho[i] - drho[i] * drho[i] / rho[i])
        })
        .collect();
    let div_stress = &fd_gradient4(&stress, grid)?[0];
    let dv = &fd_gradient4(potential, grid)?[0];
    // Only sites whose stress stencil is fully weighted enter the norms.
    let n = grid.n() as isize;
    let inner = |i: usize| (-2..=2).all(|o| chi[(i as isize + o).rem_euclid(n) as usize] > 0.0);
    let force: Vec<f64> = rho.iter().zip(dv).map(|(r, d)| r * d / m).collect();
    let top = neumaier_sum((0..rho.len()).filter(|&i| inner(i)).map(|i| chi[i] * (dt_flux[i] + div_stress[i] + force[i]).powi(2)));
    let bottom = neumaier_sum(
        (0..rho.len())
            .filter(|&i| inner(i))
            .map(|i| chi[i] * (dt_flux[i].powi(2) + div_stress[i].powi(2) + force[i].powi(2))),
    );
    if top == 0.0 {
        return Ok(0.0);
    }
    Ok((top / bottom).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::states::{gaussian_packet, harmonic_potential, hermite_state};

    #[test]
    fn mean_subtraction_idempotent() {
        let v = vec![1.0, 2.0, 5.0, -1.0];
        let w = vec![0.5, 1.0, 0.0, 2.0];
        let once = mean_subtract(&v, &w);
        let twice = mean_subtract(&once, &w);
        for (a, b) in once.iter().zip(&twice) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn scan_result_flags_boundary() {
        let s = ScanResult::from_curve(vec![0.5, 1.0, 1.5], vec![0.1, 0.2, 0.3], 0.0).unwrap();
        assert!(s.inconclusive);
        let s = ScanResult::from_curve(vec![0.5, 1.0, 1.5], vec![0.3, 0.2, 0.3], 0.0).unwrap();
        assert!(!s.inconclusive);
        assert!(ScanResult::from_curve(vec![1.0, 0.5], vec![0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn eigenstate_residuals_at_floor() {
        let g = make_grid(1, 2048, 20.0).unwrap();
        let c = PhysicalConstants::natural();
        let psi = hermite_state(&g, 0, 1.0, 1.0, 1.0, 0.0).unwrap();
        let v = harmonic_potential(&g, 1.0, 1.0, &[0.0]);
        let t = SnapshotTriple::around(&psi, &v, EvolutionKind::Linear, 0.01, &c).unwrap();
        let opts = ResidualOptions::generator();
        let s = residual_sample(&t, &v, c.alpha_star(), &c, &opts).unwrap();
        assert!(s.r_hj < 1e-8, "{}", s.r_hj);
        assert!(s.r_cont < 1e-12, "{}", s.r_cont);
        assert!(hj_residual(&t, &v, 0.0, &c, &opts).unwrap() > 1e-2);
    }

    #[test]
    fn uniform_state_momentum_balance_is_zero() {
        let g = make_grid(1, 64, 10.0).unwrap();
        let psi = WaveField::new(g.clone(), vec![Complex64::new(0.1f64.sqrt(), 0.0); 64], 0.0).unwrap();
        let t = SnapshotTriple { minus: psi.clone(), centre: psi.clone(), plus: psi, dt: 0.1 };
        let r = momentum_balance_residual(&t, &vec![0.0; 64], 0.5, &PhysicalConstants::natural(), 1e-6).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn galilean_shift_is_invertible() {
        let g = make_grid(1, 256, 40.0).unwrap();
        let c = PhysicalConstants::natural();
        let psi = gaussian_packet(&g, &[0.0], 1.0, &[1.0]).unwrap();
        let a = galilean_shift(&psi, &[0.7], 0.3, &c);
        let b = galilean_shift(&a, &[-0.7], 0.3, &c);
        // Inverse of a boost by u over τ is the boost by −u with the phase
        // evaluated at the shifted point; compare densities only.
        let shifted = galilean_shift(&psi, &[0.7], 0.0, &c);
        assert!((a.norm_squared() - 1.0).abs() < 1e-12);
        assert!((shifted.density()[100] - psi.density()[100]).abs() < 1e-15);
        assert!((b.norm_squared() - 1.0).abs() < 1e-12);
    }
}
