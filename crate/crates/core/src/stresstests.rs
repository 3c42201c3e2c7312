//! Falsification stress tests: projective superposition under a non-Fisher
//! nonlinearity, rigidity of the complexifying map, the time-reversal
//! involution, and circulation quantisation around vortex nodes.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{density_mask, polar_decompose, PhysicalConstants, WaveField, DEFAULT_MASK_EPS};
use crate::grid::{fd_laplacian4, inner, make_grid, neumaier_sum, norm_squared, Grid};
use crate::propagate::{EvolutionKind, Stepper, DIFFUSION_MASK_EPS};
use crate::residuals::SnapshotTriple;
use crate::states::{gaussian_packet, harmonic_potential};

/// Resolution of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub n: usize,
    pub dt: f64,
}

impl Resolution {
    /// Twice the points, half the step.
    pub fn refined(self) -> Self {
        Self { n: 2 * self.n, dt: 0.5 * self.dt }
    }
}

/// Two displaced packets in a harmonic trap, evolved separately and jointly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuperpositionConfig {
    pub centers: [f64; 2],
    pub momenta: [f64; 2],
    pub sigma: f64,
    pub betas: Vec<f64>,
    /// Regulariser in `U_β`, relative to `max ρ`.
    pub eps_reg: f64,
    pub omega: f64,
    pub horizon: f64,
    /// Full box length; the box is `[−length/2, length/2)`.
    pub length: f64,
    pub base: Resolution,
    pub hbar: f64,
    pub mass: f64,
}

impl Default for SuperpositionConfig {
    fn default() -> Self {
        Self {
            centers: [-5.0, 5.0],
            momenta: [0.0, 0.0],
            sigma: 1.0,
            betas: vec![0.0, 0.005, 0.01, 0.02, 0.05],
            eps_reg: 1e-6,
            omega: 1.0,
            horizon: 1.2,
            length: 32.0,
            base: Resolution { n: 1024, dt: 0.005 },
            hbar: 1.0,
            mass: 1.0,
        }
    }
}

impl SuperpositionConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.sigma > 0.0) || !(self.length > 0.0) || !(self.eps_reg > 0.0) {
            return bad("sigma, length and eps_reg must be positive".into());
        }
        if (self.centers[0] - self.centers[1]).abs() < 6.0 * self.sigma {
            return bad(format!("packets closer than 6σ at t = 0: {:?}", self.centers));
        }
        if self.betas.iter().any(|b| !(*b >= 0.0)) {
            return bad("beta values must be non-negative".into());
        }
        if !(self.horizon >= 0.0) || !(self.base.dt > 0.0) {
            return bad("horizon must be non-negative and dt positive".into());
        }
        PhysicalConstants::new(self.hbar, self.mass)?;
        Ok(())
    }

    pub fn constants(&self) -> PhysicalConstants {
        PhysicalConstants { hbar: self.hbar, mass: self.mass, alpha: self.hbar * self.hbar / (2.0 * self.mass) }
    }

    fn packets(&self, grid: &Grid) -> Result<(WaveField, WaveField)> {
        let mk = |i: usize| gaussian_packet(grid, &[self.centers[i]], self.sigma, &[self.momenta[i] / self.hbar]);
        Ok((mk(0)?, mk(1)?))
    }
}

/// `min_θ ‖a − e^{iθ}b‖` for unit-normalised copies of `a` and `b`, with
/// `θ = arg⟨b, a⟩` in closed form. Returns `(residual, θ)`.
pub fn projective_distance(a: &[Complex64], b: &[Complex64], grid: &Grid) -> (f64, f64) {
    let theta = inner(b, a, grid).arg();
    (phase_distance(a, b, theta, grid), theta)
}

/// `‖â − e^{iθ} b̂‖` for unit-normalised `â`, `b̂`.
pub fn phase_distance(a: &[Complex64], b: &[Complex64], theta: f64, grid: &Grid) -> f64 {
    let na = norm_squared(a, grid).sqrt();
    let nb = norm_squared(b, grid).sqrt();
    let rot = Complex64::from_polar(1.0, theta);
    let diff: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x / na - rot * y / nb).collect();
    norm_squared(&diff, grid).sqrt()
}

/// Residual of the joint evolution of `(ψ₁+ψ₂)/√2` against the sum of the
/// separately evolved packets, for arbitrary input states.
#[allow(clippy::too_many_arguments)]
pub fn superposition_residual_states(
    psi1: &WaveField,
    psi2: &WaveField,
    potential: &[f64],
    beta: f64,
    eps_reg: f64,
    dt: f64,
    horizon: f64,
    constants: &PhysicalConstants,
) -> Result<f64> {
    let grid = &psi1.grid;
    let kind = EvolutionKind::BetaNonlinear { beta, eps_reg };
    let stepper = Stepper::new(grid, potential, kind, dt, constants, DIFFUSION_MASK_EPS)?;
    let joint: Vec<Complex64> =
        psi1.values.iter().zip(&psi2.values).map(|(a, b)| (a + b) / 2f64.sqrt()).collect();
    let steps = (horizon / dt).round() as usize;
    let mut fields = [psi1.values.clone(), psi2.values.clone(), joint];
    fields.par_iter_mut().for_each(|v| (0..steps).for_each(|_| stepper.step_in_place(v)));
    if fields.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite { step: steps, time: horizon });
    }
    let sum: Vec<Complex64> = fields[0].iter().zip(&fields[1]).map(|(a, b)| a + b).collect();
    Ok(projective_distance(&fields[2], &sum, grid).0)
}

/// Superposition residual for one `β` at one resolution.
pub fn superposition_residual(config: &SuperpositionConfig, beta: f64, resolution: Resolution) -> Result<f64> {
    config.validate()?;
    let grid = make_grid(1, resolution.n, config.length)?;
    let (a, b) = config.packets(&grid)?;
    let v = harmonic_potential(&grid, config.mass, config.omega, &[0.0]);
    superposition_residual_states(&a, &b, &v, beta, config.eps_reg, resolution.dt, config.horizon, &config.constants())
}

/// Residuals per `β` on the base and refined grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperpositionCurve {
    pub betas: Vec<f64>,
    pub base: Vec<f64>,
    pub refined: Vec<f64>,
    pub base_resolution: Resolution,
    pub refined_resolution: Resolution,
    /// Both curves non-decreasing in `β` up to `1e−12`.
    pub monotone: bool,
}

/// Tolerance on decreases that still count as monotone.
pub const MONOTONE_SLACK: f64 = 1e-12;

/// [`superposition_residual`] over the configured `β` list.
pub fn superposition_curve(config: &SuperpositionConfig) -> Result<SuperpositionCurve> {
    config.validate()?;
    let base_res = config.base;
    let fine_res = base_res.refined();
    let jobs: Vec<(usize, Resolution)> =
        (0..config.betas.len()).flat_map(|i| [(i, base_res), (i, fine_res)]).collect();
    let values: Vec<f64> = jobs
        .par_iter()
        .map(|&(i, r)| superposition_residual(config, config.betas[i], r))
        .collect::<Result<_>>()?;
    let base: Vec<f64> = values.iter().step_by(2).copied().collect();
    let refined: Vec<f64> = values.iter().skip(1).step_by(2).copied().collect();
    let order: Vec<usize> = {
        let mut o: Vec<usize> = (0..config.betas.len()).collect();
        o.sort_by(|&a, &b| config.betas[a].total_cmp(&config.betas[b]));
        o
    };
    let mono = |c: &[f64]| order.windows(2).all(|w| c[w[1]] >= c[w[0]] - MONOTONE_SLACK);
    let monotone = mono(&base) && mono(&refined);
    Ok(SuperpositionCurve {
        betas: config.betas.clone(),
        base,
        refined,
        base_resolution: base_res,
        refined_resolution: fine_res,
        monotone,
    })
}

/// `φ = ρ^p e^{i s S}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexifierAnsatz {
    pub p: f64,
    pub s: f64,
}

impl ComplexifierAnsatz {
    pub fn new(p: f64, s: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.5) || !(s > 0.0) {
            return Err(Error::InvalidParameter(format!("ansatz needs p in (0, 1.5] and s > 0, got ({p}, {s})")));
        }
        Ok(Self { p, s })
    }

    pub fn label(&self) -> String {
        format!("rho^{}·exp(i·{}·S)", self.p, self.s)
    }
}

/// A reference state of the linear flow and the potential it lives in.
#[derive(Debug, Clone)]
pub struct ComplexifierCase {
    pub label: String,
    pub psi: WaveField,
    pub potential: Vec<f64>,
}

/// Defects of every ansatz, worst case over the test states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexifierScan {
    pub p_grid: Vec<f64>,
    pub s_grid: Vec<f64>,
    /// `defects[i][j]` belongs to `(p_grid[i], s_grid[j])`.
    pub defects: Vec<Vec<f64>>,
    pub argmin: (usize, usize),
    pub min_value: f64,
    /// The minimum is strictly below every other cell.
    pub unique: bool,
    /// `κ = 1/s` and `α = κ²/2m` at the minimum.
    pub kappa: f64,
    pub alpha: f64,
    /// False when every state lacks gradients and all cells sit at zero.
    pub informative: bool,
}

/// Snapshot data of one case, reused across the whole `(p, s)` grid.
struct CaseFields {
    rho: [Vec<f64>; 3],
    phase: [Vec<f64>; 3],
    potential: Vec<f64>,
    mask: Vec<bool>,
    grid: Grid,
}

fn case_fields(case: &ComplexifierCase, delta: f64, constants: &PhysicalConstants) -> Result<CaseFields> {
    let triple = SnapshotTriple::around(&case.psi, &case.potential, EvolutionKind::Linear, delta, constants)?;
    let hydro = polar_decompose(&triple.centre, DEFAULT_MASK_EPS, constants)?;
    // Neighbouring phases from local increments, so no second unwrap is needed.
    let shifted = |other: &WaveField| -> Vec<f64> {
        other
            .values
            .iter()
            .zip(&triple.centre.values)
            .zip(&hydro.phase)
            .map(|((o, c), s)| s + constants.hbar * (o * c.conj()).arg())
            .collect()
    };
    Ok(CaseFields {
        rho: [triple.minus.density(), hydro.rho.clone(), triple.plus.density()],
        phase: [shifted(&triple.minus), hydro.phase.clone(), shifted(&triple.plus)],
        potential: case.potential.clone(),
        mask: hydro.mask,
        grid: case.psi.grid.clone(),
    })
}

/// Terms below this fraction of `‖φ‖` count as absent.
const UNINFORMATIVE_SCALE: f64 = 1e-10;

/// `‖iκφ_t + (κ²/2m)Δφ − Vφ‖ / (‖κφ_t‖ + ‖(κ²/2m)Δφ‖ + ‖Vφ‖)` over the mask,
/// with centred time differences and the fourth-order Laplacian. `None` when
/// every term is negligible.
fn ansatz_defect(f: &CaseFields, ansatz: ComplexifierAnsatz, delta: f64, mass: f64) -> Result<Option<f64>> {
    let phi = |k: usize| -> Vec<Complex64> {
        f.rho[k]
            .iter()
            .zip(&f.phase[k])
            .map(|(r, s)| Complex64::from_polar(r.max(0.0).powf(ansatz.p), ansatz.s * s))
            .collect()
    };
    let (minus, centre, plus) = (phi(0), phi(1), phi(2));
    let lap = fd_laplacian4(&centre, &f.grid)?;
    let kappa = 1.0 / ansatz.s;
    let c2 = kappa * kappa / (2.0 * mass);
    let i = Complex64::i();
    let mut num = Vec::new();
    let (mut a, mut b, mut c, mut scale) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for k in (0..centre.len()).filter(|&k| f.mask[k]) {
        let dt_phi = (plus[k] - minus[k]) / (2.0 * delta);
        let t1 = i * kappa * dt_phi;
        let t2 = c2 * lap[k];
        let t3 = f.potential[k] * centre[k];
        num.push((t1 + t2 - t3).norm_sqr());
        a.push(t1.norm_sqr());
        b.push(t2.norm_sqr());
        c.push(t3.norm_sqr());
        scale.push(centre[k].norm_sqr());
    }
    let nrm = |v: Vec<f64>| neumaier_sum(v).sqrt();
    let den = nrm(a) + nrm(b) + nrm(c);
    // Without gradients or a potential every term is round-off.
    if den <= UNINFORMATIVE_SCALE * nrm(scale) {
        return Ok(None);
    }
    Ok(Some(nrm(num) / den))
}

/// Defect of every ansatz `ρ^p e^{isS}` against the linear equation with
/// `κ = 1/s`, on the given reference states advanced by `±delta`.
pub fn complexifier_scan(
    p_grid: &[f64],
    s_grid: &[f64],
    cases: &[ComplexifierCase],
    constants: &PhysicalConstants,
    delta: f64,
) -> Result<ComplexifierScan> {
    if p_grid.is_empty() || s_grid.is_empty() || cases.is_empty() {
        return Err(Error::InvalidParameter("complexifier scan needs p, s and at least one state".into()));
    }
    let ansatze: Vec<Vec<ComplexifierAnsatz>> = p_grid
        .iter()
        .map(|&p| s_grid.iter().map(|&s| ComplexifierAnsatz::new(p, s)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let fields: Vec<CaseFields> = cases.iter().map(|c| case_fields(c, delta, constants)).collect::<Result<_>>()?;
    let mut informative = false;
    let mut defects = vec![vec![0.0; s_grid.len()]; p_grid.len()];
    let cells: Vec<(usize, usize)> = (0..p_grid.len()).flat_map(|i| (0..s_grid.len()).map(move |j| (i, j))).collect();
    let values: Vec<Vec<Option<f64>>> = cells
        .par_iter()
        .map(|&(i, j)| fields.iter().map(|f| ansatz_defect(f, ansatze[i][j], delta, constants.mass)).collect())
        .collect::<Result<_>>()?;
    for (&(i, j), per_case) in cells.iter().zip(&values) {
        informative |= per_case.iter().any(|v| v.is_some());
        defects[i][j] = per_case.iter().map(|v| v.unwrap_or(0.0)).fold(0.0, f64::max);
    }
    let (mut argmin, mut min_value) = ((0, 0), f64::INFINITY);
    for &(i, j) in &cells {
        if defects[i][j] < min_value {
            argmin = (i, j);
            min_value = defects[i][j];
        }
    }
    let unique = cells.iter().filter(|&&c| c != argmin).all(|&(i, j)| defects[i][j] > min_value);
    let kappa = 1.0 / s_grid[argmin.1];
    Ok(ComplexifierScan {
        p_grid: p_grid.to_vec(),
        s_grid: s_grid.to_vec(),
        defects,
        argmin,
        min_value,
        unique,
        kappa,
        alpha: kappa * kappa / (2.0 * constants.mass),
        informative,
    })
}

/// Reference states for the complexifier scan: a moving packet on a free
/// line and a displaced, kicked packet in a harmonic trap.
pub fn default_complexifier_cases(grid: &Grid, constants: &PhysicalConstants) -> Result<Vec<ComplexifierCase>> {
    let free = gaussian_packet(grid, &[-1.0], 1.0, &[1.0])?;
    let trapped = gaussian_packet(grid, &[1.5], 0.8, &[-0.5])?;
    Ok(vec![
        ComplexifierCase { label: "free packet".into(), psi: free, potential: vec![0.0; grid.size()] },
        ComplexifierCase {
            label: "trapped packet".into(),
            psi: trapped,
            potential: harmonic_potential(grid, constants.mass, 0.7, &[0.0]),
        },
    ])
}

/// Outcome of the involution `K U(T) K U(T)` against the identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeReversalReport {
    /// `‖K U(T) K U(T) ψ₀ − ψ₀‖` for the requested `D`.
    pub defect: f64,
    /// The same with `D = 0` on the identical grid and step.
    pub floor: f64,
    /// `defect / floor`; 1 when both vanish.
    pub floor_ratio: f64,
}

fn involution_defect(psi0: &WaveField, potential: &[f64], steps: usize, stepper: &Stepper) -> Result<f64> {
    let mut v = psi0.values.clone();
    for _ in 0..steps {
        stepper.step_in_place(&mut v);
    }
    v.iter_mut().for_each(|z| *z = z.conj());
    for _ in 0..steps {
        stepper.step_in_place(&mut v);
    }
    let diff: Vec<Complex64> = v.iter().zip(&psi0.values).map(|(a, b)| a.conj() - b).collect();
    let _ = potential;
    let d = norm_squared(&diff, &psi0.grid).sqrt();
    if !d.is_finite() {
        return Err(Error::NonFinite { step: 2 * steps, time: 0.0 });
    }
    Ok(d)
}

/// Evolve for `horizon`, conjugate, evolve again, conjugate, and compare with
/// `ψ₀`; `d > 0` uses the diffusive variant.
pub fn time_reversal_defect(
    psi0: &WaveField,
    potential: &[f64],
    horizon: f64,
    dt: f64,
    d: f64,
    constants: &PhysicalConstants,
) -> Result<TimeReversalReport> {
    if !(dt > 0.0) || !(horizon >= 0.0) || !(d >= 0.0) {
        return Err(Error::InvalidParameter("need dt > 0, horizon ≥ 0 and D ≥ 0".into()));
    }
    let steps = (horizon / dt).round() as usize;
    if (steps as f64 * dt - horizon).abs() > 1e-9 * horizon.max(dt) {
        return Err(Error::InvalidParameter(format!("horizon {horizon} is not a multiple of dt {dt}")));
    }
    let grid = &psi0.grid;
    let lin = Stepper::new(grid, potential, EvolutionKind::Linear, dt, constants, DIFFUSION_MASK_EPS)?;
    let floor = involution_defect(psi0, potential, steps, &lin)?;
    let defect = if d == 0.0 {
        floor
    } else {
        let dg = Stepper::new(grid, potential, EvolutionKind::DgDiffusion { d }, dt, constants, DIFFUSION_MASK_EPS)?;
        involution_defect(psi0, potential, steps, &dg)?
    };
    let floor_ratio = if floor > 0.0 {
        defect / floor
    } else if defect == 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    Ok(TimeReversalReport { defect, floor, floor_ratio })
}

/// Smallest loop half-size, in cells, that keeps clear of the node.
pub const MIN_LOOP_CELLS: usize = 3;

/// Circulation around a square lattice loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CirculationReport {
    /// `ħ Σ arg(ψ_{k+1}/ψ_k)` along the loop.
    pub line_value: f64,
    /// Sum of plaquette circulations over the enclosed cells.
    pub area_value: f64,
    /// `line_value / 2πħ`.
    pub n_estimate: f64,
    pub nearest_integer: i64,
    /// `|n_estimate − nearest_integer|`.
    pub integer_defect: f64,
}

fn increment(a: Complex64, b: Complex64) -> f64 {
    (b * a.conj()).arg()
}

/// Circulation of `∇S` around a square loop of half-size `loop_radius`
/// cells about `center`. Only local phase increments enter, so the
/// multivalued phase is never unwrapped.
pub fn circulation(
    psi: &WaveField,
    loop_radius: usize,
    center: [f64; 2],
    constants: &PhysicalConstants,
) -> Result<CirculationReport> {
    let grid = &psi.grid;
    if grid.dim() != 2 {
        return Err(Error::InvalidParameter("circulation needs a 2D state".into()));
    }
    if loop_radius < MIN_LOOP_CELLS {
        return Err(Error::LoopOnNode);
    }
    let n = grid.n() as isize;
    let h = grid.spacing();
    let half = 0.5 * grid.length();
    // Lower-left corner of the plaquette holding the centre.
    let cell = |c: f64| ((c + half) / h).floor() as isize;
    let (cx, cy) = (cell(center[0]), cell(center[1]));
    let r = loop_radius as isize;
    let (x0, x1, y0, y1) = (cx - r, cx + 1 + r, cy - r, cy + 1 + r);
    if x0 < 0 || y0 < 0 || x1 >= n || y1 >= n {
        return Err(Error::InvalidParameter("loop leaves the box".into()));
    }
    let at = |ix: isize, iy: isize| psi.values[(iy * n + ix) as usize];

    // Counter-clockwise perimeter.
    let mut path = Vec::new();
    path.extend((x0..x1).map(|x| (x, y0)));
    path.extend((y0..y1).map(|y| (x1, y)));
    path.extend((x0 + 1..=x1).rev().map(|x| (x, y1)));
    path.extend((y0 + 1..=y1).rev().map(|y| (x0, y)));
    let rho = psi.density();
    let mask = density_mask(&rho, DEFAULT_MASK_EPS);
    if path.iter().any(|&(x, y)| !mask[(y * n + x) as usize]) {
        return Err(Error::LoopOnNode);
    }
    let mut closed = path.clone();
    closed.push(path[0]);
    let line = neumaier_sum(closed.windows(2).map(|w| increment(at(w[0].0, w[0].1), at(w[1].0, w[1].1))));

    let plaquette = |x: isize, y: isize| {
        increment(at(x, y), at(x + 1, y))
            + increment(at(x + 1, y), at(x + 1, y + 1))
            + increment(at(x + 1, y + 1), at(x, y + 1))
            + increment(at(x, y + 1), at(x, y))
    };
    let area = neumaier_sum((y0..y1).flat_map(|y| (x0..x1).map(move |x| (x, y))).map(|(x, y)| plaquette(x, y)));

    let hbar = constants.hbar;
    let n_estimate = line / (2.0 * PI);
    let nearest_integer = n_estimate.round() as i64;
    Ok(CirculationReport {
        line_value: hbar * line,
        area_value: hbar * area,
        n_estimate,
        nearest_integer,
        integer_defect: (n_estimate - nearest_integer as f64).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::vortex_state;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn closed_form_phase_beats_random_phases() {
        let g = make_grid(1, 128, 20.0).unwrap();
        let a = gaussian_packet(&g, &[0.3], 1.0, &[0.5]).unwrap();
        let b = gaussian_packet(&g, &[-0.2], 1.3, &[0.1]).unwrap();
        let (r, _) = projective_distance(&a.values, &b.values, &g);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..64 {
            let th = rng.gen_range(-PI..PI);
            assert!(r <= phase_distance(&a.values, &b.values, th, &g) + 1e-15);
        }
    }

    #[test]
    fn identical_packets_superpose_exactly() {
        let g = make_grid(1, 256, 32.0).unwrap();
        let c = PhysicalConstants::natural();
        let a = gaussian_packet(&g, &[1.0], 1.0, &[0.0]).unwrap();
        let v = harmonic_potential(&g, 1.0, 1.0, &[0.0]);
        let r0 = superposition_residual_states(&a, &a, &v, 0.0, 1e-6, 0.01, 0.5, &c).unwrap();
        assert!(r0 < 1e-13, "{r0}");
        // Exact in arithmetic; the nonlinear flow amplifies the round-off gap
        // between √2·ψ and ψ + ψ, mildly at small β.
        for beta in [0.005, 0.02] {
            let r = superposition_residual_states(&a, &a, &v, beta, 1e-6, 0.01, 0.5, &c).unwrap();
            assert!(r < 1e-6, "{beta}: {r}");
        }
    }

    #[test]
    fn strong_nonlinearity_amplifies_round_off() {
        let g = make_grid(1, 256, 32.0).unwrap();
        let c = PhysicalConstants::natural();
        let a = gaussian_packet(&g, &[1.0], 1.0, &[0.0]).unwrap();
        let v = harmonic_potential(&g, 1.0, 1.0, &[0.0]);
        let r = superposition_residual_states(&a, &a, &v, 0.05, 1e-6, 0.01, 0.5, &c).unwrap();
        assert!(r > 1e-6, "{r}");
    }

    #[test]
    fn overlapping_packets_are_rejected() {
        let cfg = SuperpositionConfig { centers: [-1.0, 1.0], ..Default::default() };
        assert!(superposition_residual(&cfg, 0.0, cfg.base).is_err());
    }

    #[test]
    fn ansatz_bounds() {
        assert!(ComplexifierAnsatz::new(0.0, 1.0).is_err());
        assert!(ComplexifierAnsatz::new(1.6, 1.0).is_err());
        assert!(ComplexifierAnsatz::new(0.5, -1.0).is_err());
        assert!(ComplexifierAnsatz::new(1.5, 2.0).is_ok());
    }

    #[test]
    fn uniform_state_is_uninformative() {
        let g = make_grid(1, 64, 10.0).unwrap();
        let psi = WaveField::new(g.clone(), vec![Complex64::new(0.1f64.sqrt(), 0.0); 64], 0.0).unwrap();
        let cases = [ComplexifierCase { label: "flat".into(), psi, potential: vec![0.0; 64] }];
        let scan = complexifier_scan(&[0.4, 0.5], &[1.0], &cases, &PhysicalConstants::natural(), 1e-3).unwrap();
        assert!(!scan.informative);
    }

    #[test]
    fn zero_horizon_is_identity() {
        let g = make_grid(1, 128, 20.0).unwrap();
        let psi = gaussian_packet(&g, &[0.0], 1.0, &[1.0]).unwrap();
        let r = time_reversal_defect(&psi, &vec![0.0; 128], 0.0, 0.01, 0.05, &PhysicalConstants::natural()).unwrap();
        assert_eq!(r.defect, 0.0);
        assert!(time_reversal_defect(&psi, &vec![0.0; 128], 0.105, 0.01, 0.0, &PhysicalConstants::natural()).is_err());
    }

    #[test]
    fn reversal_floor_grows_at_most_linearly() {
        let g = make_grid(1, 256, 24.0).unwrap();
        let c = PhysicalConstants::natural();
        let psi = gaussian_packet(&g, &[1.0], 1.0, &[0.5]).unwrap();
        let v = harmonic_potential(&g, 1.0, 1.0, &[0.0]);
        let a = time_reversal_defect(&psi, &v, 1.0, 0.01, 0.0, &c).unwrap().defect;
        let b = time_reversal_defect(&psi, &v, 2.0, 0.01, 0.0, &c).unwrap().defect;
        assert!(a <= 1e-10 && b <= 1e-10);
        assert!(b <= 4.0 * a.max(1e-15), "{a} {b}");
    }

    #[test]
    fn loops_must_clear_the_node() {
        let g = make_grid(2, 64, 10.0).unwrap();
        let h = g.spacing();
        let psi = vortex_state(&g, 1, 1.0, [0.5 * h, 0.5 * h]).unwrap();
        let c = PhysicalConstants::natural();
        assert_eq!(circulation(&psi, 2, [0.5 * h, 0.5 * h], &c), Err(Error::LoopOnNode));
        let r = circulation(&psi, 4, [0.5 * h, 0.5 * h], &c).unwrap();
        assert_eq!(r.nearest_integer, 1);
    }

    #[test]
    fn anticlockwise_winding_is_negative() {
        let g = make_grid(2, 64, 10.0).unwrap();
        let h = g.spacing();
        let psi = vortex_state(&g, -1, 1.0, [0.5 * h, 0.5 * h]).unwrap();
        let r = circulation(&psi, 5, [0.5 * h, 0.5 * h], &PhysicalConstants::natural()).unwrap();
        assert_eq!(r.nearest_integer, -1);
    }
}
