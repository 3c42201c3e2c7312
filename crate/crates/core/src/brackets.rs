//! Functional Poisson brackets on `(ρ, S)` and the Galilei generators.
//!
//! `{F, G} = ∫ (δF/δρ · δG/δS − δF/δS · δG/δρ) dx`. Gradients of `S` are never
//! taken from the unwrapped phase directly, which is not periodic for a moving
//! packet. They come from the current instead: `ρ∇S = m j` everywhere and
//! `∇S = m v` on the mask.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{polar_compose, polar_decompose, quantum_potential, HydroFields, PhysicalConstants, WaveField};
use crate::functionals::energy;
use crate::grid::{integrate, neumaier_sum, spectral_divergence, spectral_gradient, Grid};

/// Sites nearer than this to the coordinate seam must carry no mass.
pub const SEAM_CELLS: usize = 5;
/// Density (relative to the maximum) that counts as mass near the seam.
pub const SEAM_DENSITY_EPS: f64 = 1e-10;

/// Variational derivatives of one functional.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalDerivs {
    pub d_rho: Vec<f64>,
    pub d_s: Vec<f64>,
    pub label: String,
}

/// `{f, g}` by trapezoid quadrature. Antisymmetric to the last bit: the
/// integrand of `{g, f}` is the exact negation of that of `{f, g}`.
pub fn poisson_bracket(f: &FunctionalDerivs, g: &FunctionalDerivs, grid: &Grid) -> Result<f64> {
    for v in [&f.d_rho, &f.d_s, &g.d_rho, &g.d_s] {
        if v.len() != grid.size() {
            return Err(Error::GridMismatch);
        }
    }
    let terms = (0..grid.size()).map(|i| f.d_rho[i] * g.d_s[i] - f.d_s[i] * g.d_rho[i]);
    Ok(neumaier_sum(terms) * grid.cell_volume())
}

/// The Galilei generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Generator {
    /// Hamiltonian with the Fisher term `α∫|∇√ρ|²`.
    H,
    /// Momentum along an axis.
    P(usize),
    /// Boost along an axis.
    K(usize),
    /// Angular momentum (2D only).
    Lz,
}

impl Generator {
    pub fn label(&self) -> String {
        match self {
            Generator::H => "H".into(),
            Generator::P(a) => format!("P_{}", axis_name(*a)),
            Generator::K(a) => format!("K_{}", axis_name(*a)),
            Generator::Lz => "L_z".into(),
        }
    }
}

fn axis_name(a: usize) -> &'static str {
    ["x", "y"].get(a).copied().unwrap_or("?")
}

/// Position coordinates on one branch of the periodic box. The branch seam
/// sits half a box away from `origin` on every axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Coordinates {
    pub origin: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl Coordinates {
    /// Branch centred on `origin`; values stay absolute.
    pub fn about(grid: &Grid, origin: &[f64]) -> Result<Self> {
        if origin.len() != grid.dim() {
            return Err(Error::InvalidParameter("origin dimension differs from grid".into()));
        }
        let l = grid.length();
        let raw = grid.coordinates();
        let values = raw
            .iter()
            .zip(origin)
            .map(|(axis, &o)| axis.iter().map(|&x| o + (x - o + 0.5 * l).rem_euclid(l) - 0.5 * l).collect())
            .collect();
        Ok(Self { origin: origin.to_vec(), values })
    }

    /// Branch centred on the density maximum.
    pub fn packet_centred(hydro: &HydroFields) -> Result<Self> {
        let grid = &hydro.grid;
        let imax = hydro.rho.iter().enumerate().fold((0, f64::MIN), |a, (i, &r)| if r > a.1 { (i, r) } else { a }).0;
        let origin: Vec<f64> = (0..grid.dim()).map(|a| grid.coord(imax, a)).collect();
        Self::about(grid, &origin)
    }

    /// The box's own branch, origin at the box centre.
    pub fn box_centred(grid: &Grid) -> Self {
        Self { origin: vec![0.0; grid.dim()], values: grid.coordinates() }
    }

    /// Refuse densities that reach within [`SEAM_CELLS`] of the seam, where
    /// moment integrals pick up the jump of the coordinate.
    pub fn check_seam(&self, rho: &[f64], grid: &Grid) -> Result<()> {
        let cut = SEAM_DENSITY_EPS * rho.iter().copied().fold(0.0, f64::max);
        let band = SEAM_CELLS as f64 * grid.spacing();
        let half = 0.5 * grid.length();
        for (i, &r) in rho.iter().enumerate() {
            if r > cut && self.values.iter().zip(&self.origin).any(|(c, &o)| half - (c[i] - o).abs() < band) {
                return Err(Error::PacketNearEdge { cells: SEAM_CELLS });
            }
        }
        Ok(())
    }
}

/// `m·v` on the mask, the masked surrogate for `∇S`.
fn phase_gradient(hydro: &HydroFields, constants: &PhysicalConstants) -> Vec<Vec<f64>> {
    hydro.velocity.iter().map(|v| v.iter().map(|x| constants.mass * x).collect()).collect()
}

/// Analytic functional derivatives of a generator at time `t`.
pub fn generator_derivs(
    gen: Generator,
    hydro: &HydroFields,
    potential: &[f64],
    alpha: f64,
    constants: &PhysicalConstants,
    t: f64,
) -> Result<FunctionalDerivs> {
    let coords = match gen {
        Generator::Lz => Coordinates::box_centred(&hydro.grid),
        _ => Coordinates::packet_centred(hydro)?,
    };
    generator_derivs_with(gen, hydro, potential, alpha, constants, t, &coords)
}

/// [`generator_derivs`] on an explicit coordinate branch.
pub fn generator_derivs_with(
    gen: Generator,
    hydro: &HydroFields,
    potential: &[f64],
    alpha: f64,
    constants: &PhysicalConstants,
    t: f64,
    coords: &Coordinates,
) -> Result<FunctionalDerivs> {
    let grid = &hydro.grid;
    let n = grid.size();
    grid.check_len(potential.len())?;
    check_axis(gen, grid)?;
    let m = constants.mass;
    let grad_s = phase_gradient(hydro, constants);
    let (d_rho, d_s) = match gen {
        Generator::H => {
            let q = quantum_potential(&hydro.rho, alpha, grid, &hydro.mask)?;
            let d_rho = (0..n)
                .map(|i| grad_s.iter().map(|g| g[i] * g[i]).sum::<f64>() / (2.0 * m) + potential[i] + q[i])
                .collect();
            let div = spectral_divergence(&hydro.current, grid)?;
            (d_rho, div.iter().map(|d| -d).collect())
        }
        Generator::P(a) => {
            let grad_rho = spectral_gradient(&hydro.rho, grid)?;
            (grad_s[a].clone(), grad_rho[a].iter().map(|d| -d).collect())
        }
        Generator::K(a) => {
            coords.check_seam(&hydro.rho, grid)?;
            let grad_rho = spectral_gradient(&hydro.rho, grid)?;
            let d_rho = (0..n).map(|i| m * coords.values[a][i] - t * grad_s[a][i]).collect();
            (d_rho, grad_rho[a].iter().map(|d| t * d).collect())
        }
        Generator::Lz => {
            coords.check_seam(&hydro.rho, grid)?;
            let (x, y) = (&coords.values[0], &coords.values[1]);
            let grad_rho = spectral_gradient(&hydro.rho, grid)?;
            let d_rho = (0..n).map(|i| x[i] * grad_s[1][i] - y[i] * grad_s[0][i]).collect();
            let d_s = (0..n).map(|i| y[i] * grad_rho[0][i] - x[i] * grad_rho[1][i]).collect();
            (d_rho, d_s)
        }
    };
    Ok(FunctionalDerivs { d_rho, d_s, label: gen.label() })
}

fn check_axis(gen: Generator, grid: &Grid) -> Result<()> {
    match gen {
        Generator::P(a) | Generator::K(a) if a >= grid.dim() => {
            Err(Error::InvalidParameter(format!("axis {a} on a {}D grid", grid.dim())))
        }
        Generator::Lz if grid.dim() != 2 => Err(Error::InvalidParameter("L_z needs a 2D grid".into())),
        _ => Ok(()),
    }
}

/// Value of a generator at time `t` on an explicit coordinate branch.
pub fn generator_value_with(
    gen: Generator,
    hydro: &HydroFields,
    potential: &[f64],
    alpha: f64,
    constants: &PhysicalConstants,
    t: f64,
    coords: &Coordinates,
) -> Result<f64> {
    let grid = &hydro.grid;
    check_axis(gen, grid)?;
    let m = constants.mass;
    // ρ∂S = m j needs no mask.
    let momentum = |a: usize| m * integrate(&hydro.current[a], grid);
    Ok(match gen {
        Generator::H => energy(hydro, potential, alpha, constants)?.total,
        Generator::P(a) => momentum(a),
        Generator::K(a) => {
            coords.check_seam(&hydro.rho, grid)?;
            let moment: Vec<f64> = hydro.rho.iter().zip(&coords.values[a]).map(|(r, x)| r * x).collect();
            m * integrate(&moment, grid) - t * momentum(a)
        }
        Generator::Lz => {
            coords.check_seam(&hydro.rho, grid)?;
            let (x, y) = (&coords.values[0], &coords.values[1]);
            let (jx, jy) = (&hydro.current[0], &hydro.current[1]);
            let density: Vec<f64> = (0..grid.size()).map(|i| x[i] * jy[i] - y[i] * jx[i]).collect();
            m * integrate(&density, grid)
        }
    })
}

/// Value of a generator on its default branch.
pub fn generator_value(
    gen: Generator,
    hydro: &HydroFields,
    potential: &[f64],
    alpha: f64,
    constants: &PhysicalConstants,
    t: f64,
) -> Result<f64> {
    let coords = match gen {
        Generator::Lz => Coordinates::box_centred(&hydro.grid),
        _ => Coordinates::packet_centred(hydro)?,
    };
    generator_value_with(gen, hydro, potential, alpha, constants, t, &coords)
}

/// Directional derivative of a generator along `(η_ρ, η_S)`, by central
/// differences of its value and by the analytic derivatives. Returns
/// `(finite_difference, analytic)`.
#[allow(clippy::too_many_arguments)]
pub fn gateaux_pair(
    gen: Generator,
    psi: &WaveField,
    potential: &[f64],
    constants: &PhysicalConstants,
    eta_rho: &[f64],
    eta_s: &[f64],
    eps: f64,
    eps_mask: f64,
) -> Result<(f64, f64)> {
    let grid = &psi.grid;
    let base = polar_decompose(psi, eps_mask, constants)?;
    let coords = match gen {
        Generator::Lz => Coordinates::box_centred(grid),
        _ => Coordinates::packet_centred(&base)?,
    };
    let t = psi.time;
    let value_at = |s: f64| -> Result<f64> {
        let rho: Vec<f64> = base.rho.iter().zip(eta_rho).map(|(r, e)| r + s * e).collect();
        let phase: Vec<f64> = base.phase.iter().zip(eta_s).map(|(p, e)| p + s * e).collect();
        let shifted = polar_compose(grid, &rho, &phase, constants.hbar)?;
        let hydro = polar_decompose(&shifted, eps_mask, constants)?;
        generator_value_with(gen, &hydro, potential, constants.alpha, constants, t, &coords)
    };
    let fd = (value_at(eps)? - value_at(-eps)?) / (2.0 * eps);
    let d = generator_derivs_with(gen, &base, potential, constants.alpha, constants, t, &coords)?;
    let pairing: Vec<f64> = (0..grid.size()).map(|i| d.d_rho[i] * eta_rho[i] + d.d_s[i] * eta_s[i]).collect();
    Ok((fd, integrate(&pairing, grid)))
}

/// One bracket identity: measured bracket, its predicted value and tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraEntry {
    pub name: String,
    pub bracket: f64,
    pub expected: f64,
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// The identity predicts a nonzero bracket (e.g. `{H,P}` in a trap).
    pub expected_nonclosure: bool,
}

impl AlgebraEntry {
    fn new(name: String, bracket: f64, expected: f64, tolerance: f64, expected_nonclosure: bool) -> Self {
        let deviation = bracket - expected;
        Self { name, bracket, expected, deviation, tolerance, pass: deviation.abs() <= tolerance, expected_nonclosure }
    }
}

/// Per-entry tolerances of the closure check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgebraFloors {
    /// Absolute bound on `{H,P}` for translation-invariant `V`.
    pub hp: f64,
    /// Bound on `{H,P} − ∫ρ∂V` otherwise.
    pub hp_trapped: f64,
    /// Bound on `{H,K} + P`, relative to `max(|P|, 1)`.
    pub hk_relative: f64,
    /// Absolute bound on `{P,K} + m∫ρ`.
    pub pk: f64,
    /// Absolute bound on the angular-momentum identities.
    pub ll: f64,
}

impl Default for AlgebraFloors {
    fn default() -> Self {
        Self { hp: 1e-10, hp_trapped: 1e-8, hk_relative: 1e-8, pk: 1e-10, ll: 1e-9 }
    }
}

/// Deviations of the Bargmann relations, one entry per axis (pair).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraReport {
    pub time: f64,
    pub hp: Vec<AlgebraEntry>,
    pub hk_plus_p: Vec<AlgebraEntry>,
    pub pk_plus_m: Vec<AlgebraEntry>,
    pub ll: Vec<AlgebraEntry>,
    pub floors: AlgebraFloors,
}

impl AlgebraReport {
    pub fn entries(&self) -> impl Iterator<Item = &AlgebraEntry> {
        self.hp.iter().chain(&self.hk_plus_p).chain(&self.pk_plus_m).chain(&self.ll)
    }

    pub fn passes(&self) -> bool {
        self.entries().all(|e| e.pass)
    }
}

/// `V` constant up to round-off: the `{H,P}` entry then predicts zero.
fn is_translation_invariant(potential: &[f64]) -> bool {
    let lo = potential.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = potential.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo <= 1e-14 * hi.abs().max(1.0)
}

/// Brackets among `H`, `P_i`, `K_j` (and `L_z` in 2D) against the Bargmann
/// relations with central charge `m`.
pub fn bargmann_check(
    hydro: &HydroFields,
    potential: &[f64],
    alpha: f64,
    constants: &PhysicalConstants,
    t: f64,
    floors: AlgebraFloors,
) -> Result<AlgebraReport> {
    let grid = &hydro.grid;
    let dim = grid.dim();
    let coords = Coordinates::packet_centred(hydro)?;
    let derivs = |g| generator_derivs_with(g, hydro, potential, alpha, constants, t, &coords);
    let h = derivs(Generator::H)?;
    let p: Vec<_> = (0..dim).map(|a| derivs(Generator::P(a))).collect::<Result<_>>()?;
    let k: Vec<_> = (0..dim).map(|a| derivs(Generator::K(a))).collect::<Result<_>>()?;
    let mass_total = integrate(&hydro.rho, grid);
    let m = constants.mass;
    let free = is_translation_invariant(potential);
    let grad_v = spectral_gradient(potential, grid)?;

    let mut hp = Vec::new();
    let mut hk_plus_p = Vec::new();
    let mut pk_plus_m = Vec::new();
    for a in 0..dim {
        let b_hp = poisson_bracket(&h, &p[a], grid)?;
        if free {
            hp.push(AlgebraEntry::new(format!("{{H,{}}}", p[a].label), b_hp, 0.0, floors.hp, false));
        } else {
            // With `{ρ, S} = δ` this is `+∫ρ∂V`; `dP/dt = {P, H}` is the force.
            let force: Vec<f64> = hydro.rho.iter().zip(&grad_v[a]).map(|(r, g)| r * g).collect();
            let expected = integrate(&force, grid);
            hp.push(AlgebraEntry::new(format!("{{H,{}}}", p[a].label), b_hp, expected, floors.hp_trapped, true));
        }
        if free {
            let p_val = m * integrate(&hydro.current[a], grid);
            let b_hk = poisson_bracket(&h, &k[a], grid)?;
            let tol = floors.hk_relative * p_val.abs().max(1.0);
            hk_plus_p.push(AlgebraEntry::new(format!("{{H,{}}}", k[a].label), b_hk, -p_val, tol, false));
        }
        for b in 0..dim {
            let b_pk = poisson_bracket(&p[a], &k[b], grid)?;
            let expected = if a == b { -m * mass_total } else { 0.0 };
            let name = format!("{{{},{}}}", p[a].label, k[b].label);
            pk_plus_m.push(AlgebraEntry::new(name, b_pk, expected, floors.pk, false));
        }
    }

    let mut ll = Vec::new();
    if dim == 2 {
        let lz = generator_derivs(Generator::Lz, hydro, potential, alpha, constants, t)?;
        let px = m * integrate(&hydro.current[0], grid);
        let py = m * integrate(&hydro.current[1], grid);
        ll.push(AlgebraEntry::new("{P_x,L_z}".into(), poisson_bracket(&p[0], &lz, grid)?, -py, floors.ll, false));
        ll.push(AlgebraEntry::new("{P_y,L_z}".into(), poisson_bracket(&p[1], &lz, grid)?, px, floors.ll, false));
        if is_central(potential, grid) {
            ll.push(AlgebraEntry::new("{H,L_z}".into(), poisson_bracket(&h, &lz, grid)?, 0.0, floors.ll, false));
        }
    }
    Ok(AlgebraReport { time: t, hp, hk_plus_p, pk_plus_m, ll, floors })
}

/// Whether a 2D potential is invariant under the box's quarter turn and
/// reflection about the box centre (the lattice surrogate of `V(|x|)`).
pub fn is_central(potential: &[f64], grid: &Grid) -> bool {
    if grid.dim() != 2 || potential.len() != grid.size() {
        return false;
    }
    let n = grid.n();
    let scale = potential.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    let at = |ix: usize, iy: usize| potential[iy * n + ix];
    (0..n).all(|iy| {
        (0..n).all(|ix| {
            let v = at(ix, iy);
            // (x, y) → (−y, x) and x → −x about index n/2.
            let rot = at((n - iy) % n, ix);
            let refl = at((n - ix) % n, iy);
            (v - rot).abs() <= 1e-12 * scale && (v - refl).abs() <= 1e-12 * scale
        })
    })
}

/// Angular-momentum diagnostics of a 2D state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularMomentumReport {
    pub lz: f64,
    /// `L_z / (ħ ∫ρ)`: the winding for a vortex state.
    pub lz_over_hbar_mass: f64,
    /// `{H, L_z}`.
    pub h_lz: f64,
    /// `{P_x, L_z} + P_y`.
    pub px_lz_plus_py: f64,
    /// `{P_y, L_z} − P_x`.
    pub py_lz_minus_px: f64,
    /// False when `V` is not central; `{H, L_z} = 0` is then not predicted.
    pub central: bool,
    pub tolerance: f64,
    pub pass: bool,
}

/// `L_z` and its brackets for a 2D state in a central potential.
pub fn angular_momentum_check(
    hydro: &HydroFields,
    potential: &[f64],
    alpha: f64,
    constants: &PhysicalConstants,
    tolerance: f64,
) -> Result<AngularMomentumReport> {
    let grid = &hydro.grid;
    check_axis(Generator::Lz, grid)?;
    let coords = Coordinates::box_centred(grid);
    let lz_d = generator_derivs_with(Generator::Lz, hydro, potential, alpha, constants, 0.0, &coords)?;
    let lz = generator_value_with(Generator::Lz, hydro, potential, alpha, constants, 0.0, &coords)?;
    let h = generator_derivs_with(Generator::H, hydro, potential, alpha, constants, 0.0, &coords)?;
    let px_d = generator_derivs_with(Generator::P(0), hydro, potential, alpha, constants, 0.0, &coords)?;
    let py_d = generator_derivs_with(Generator::P(1), hydro, potential, alpha, constants, 0.0, &coords)?;
    let m = constants.mass;
    let px = m * integrate(&hydro.current[0], grid);
    let py = m * integrate(&hydro.current[1], grid);
    let h_lz = poisson_bracket(&h, &lz_d, grid)?;
    let px_lz_plus_py = poisson_bracket(&px_d, &lz_d, grid)? + py;
    let py_lz_minus_px = poisson_bracket(&py_d, &lz_d, grid)? - px;
    let central = is_central(potential, grid);
    let pass = central && [h_lz, px_lz_plus_py, py_lz_minus_px].iter().all(|v| v.abs() <= tolerance);
    Ok(AngularMomentumReport {
        lz,
        lz_over_hbar_mass: lz / (constants.hbar * integrate(&hydro.rho, grid)),
        h_lz,
        px_lz_plus_py,
        py_lz_minus_px,
        central,
        tolerance,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::propagate::{evolve, EvolutionKind, EvolutionSpec};
    use crate::states::{gaussian_packet, harmonic_potential, vortex_state};

    const TINY: f64 = 1e-14;

    fn free_packet(k: f64) -> (WaveField, HydroFields) {
        let g = make_grid(1, 1024, 40.0).unwrap();
        let psi = gaussian_packet(&g, &[-2.0], 1.0, &[k]).unwrap();
        let h = polar_decompose(&psi, TINY, &PhysicalConstants::natural()).unwrap();
        (psi, h)
    }

    #[test]
    fn bracket_is_antisymmetric() {
        let g = make_grid(1, 64, 10.0).unwrap();
        let f = FunctionalDerivs { d_rho: g.map(|x| x[0].sin()), d_s: g.map(|x| x[0].cos() + 0.3), label: "f".into() };
        let h = FunctionalDerivs { d_rho: g.map(|x| (0.7 * x[0]).cos()), d_s: g.map(|x| x[0] * x[0]), label: "g".into() };
        let a = poisson_bracket(&f, &h, &g).unwrap();
        assert_eq!(a, -poisson_bracket(&h, &f, &g).unwrap());
        assert_eq!(poisson_bracket(&f, &f, &g).unwrap(), 0.0);
    }

    #[test]
    fn charge_against_smeared_phase() {
        let g = make_grid(1, 256, 20.0).unwrap();
        let smear = g.map(|x| (-x[0] * x[0]).exp());
        let c = FunctionalDerivs { d_rho: vec![1.0; 256], d_s: vec![0.0; 256], label: "C".into() };
        let s = FunctionalDerivs { d_rho: vec![0.0; 256], d_s: smear.clone(), label: "S".into() };
        let b = poisson_bracket(&s, &c, &g).unwrap();
        assert!((b + integrate(&smear, &g)).abs() < 1e-14);
    }

    #[test]
    fn bracket_rejects_foreign_grid() {
        let g = make_grid(1, 32, 1.0).unwrap();
        let f = FunctionalDerivs { d_rho: vec![0.0; 16], d_s: vec![0.0; 16], label: "f".into() };
        assert_eq!(poisson_bracket(&f, &f, &g), Err(Error::GridMismatch));
    }

    #[test]
    fn momentum_derivatives_match_definition() {
        let (_, h) = free_packet(0.8);
        let c = PhysicalConstants::natural();
        let d = generator_derivs(Generator::P(0), &h, &vec![0.0; 1024], 0.5, &c, 0.0).unwrap();
        let grad = spectral_gradient(&h.rho, &h.grid).unwrap();
        for i in 0..1024 {
            assert_eq!(d.d_s[i], -grad[0][i]);
            if h.rho[i] > 1e-8 {
                assert!((d.d_rho[i] - 0.8).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn hamiltonian_flux_vanishes_for_uniform_state() {
        let g = make_grid(1, 64, 8.0).unwrap();
        let psi = polar_compose(&g, &vec![1.0 / 8.0; 64], &vec![0.0; 64], 1.0).unwrap();
        let h = polar_decompose(&psi, TINY, &PhysicalConstants::natural()).unwrap();
        let d = generator_derivs_with(
            Generator::H,
            &h,
            &vec![0.0; 64],
            0.5,
            &PhysicalConstants::natural(),
            0.0,
            &Coordinates::box_centred(&g),
        )
        .unwrap();
        assert!(d.d_s.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn free_algebra_closes() {
        for k in [0.0, 1.5] {
            let (_, h) = free_packet(k);
            let c = PhysicalConstants::natural();
            let r = bargmann_check(&h, &vec![0.0; 1024], 0.5, &c, 0.3, AlgebraFloors::default()).unwrap();
            assert!(r.passes(), "{r:?}");
        }
    }

    #[test]
    fn trap_reports_expected_force() {
        let (_, h) = free_packet(0.5);
        let v = harmonic_potential(&h.grid, 1.0, 0.5, &[0.0]);
        let r = bargmann_check(&h, &v, 0.5, &PhysicalConstants::natural(), 0.0, AlgebraFloors::default()).unwrap();
        assert!(r.hp[0].expected_nonclosure);
        assert!(r.hp[0].expected.abs() > 0.1);
        assert!(r.hp[0].pass, "{:?}", r.hp[0]);
    }

    #[test]
    fn central_charge_scales_with_norm() {
        let (psi, _) = free_packet(1.0);
        let c = PhysicalConstants::natural();
        let mut heavy = psi.clone();
        heavy.values.iter_mut().for_each(|z| *z *= 3f64.sqrt());
        let h = polar_decompose(&heavy, TINY, &c).unwrap();
        let r = bargmann_check(&h, &vec![0.0; 1024], 0.5, &c, 0.0, AlgebraFloors::default()).unwrap();
        assert!((r.pk_plus_m[0].bracket + 3.0).abs() < 1e-10);
    }

    #[test]
    fn seam_mass_is_refused() {
        let g = make_grid(1, 256, 8.0).unwrap();
        let psi = gaussian_packet(&g, &[0.0], 1.0, &[0.0]).unwrap();
        let h = polar_decompose(&psi, TINY, &PhysicalConstants::natural()).unwrap();
        let e = generator_derivs(Generator::K(0), &h, &vec![0.0; 256], 0.5, &PhysicalConstants::natural(), 0.0);
        assert_eq!(e.unwrap_err(), Error::PacketNearEdge { cells: SEAM_CELLS });
    }

    #[test]
    fn gateaux_matches_analytic_derivatives() {
        let (psi, _) = free_packet(0.7);
        let g = psi.grid.clone();
        let c = PhysicalConstants::natural();
        let v = harmonic_potential(&g, 1.0, 0.3, &[0.0]);
        let bump = |x: f64, c0: f64| (-(x - c0).powi(2)).exp();
        let eta_rho: Vec<f64> = g.map(|x| 0.05 * (bump(x[0], -2.5) - bump(x[0], -1.5)));
        let eta_s: Vec<f64> = g.map(|x| 0.3 * bump(x[0], -2.2));
        for gen in [Generator::H, Generator::P(0), Generator::K(0)] {
            let (fd, an) = gateaux_pair(gen, &psi.clone(), &v, &c, &eta_rho, &eta_s, 1e-4, TINY).unwrap();
            assert!((fd - an).abs() <= 1e-7 * an.abs().max(1e-3), "{gen:?}: {fd} vs {an}");
        }
    }

    #[test]
    fn boost_is_conserved_along_free_flow() {
        let (psi, _) = free_packet(1.0);
        let c = PhysicalConstants::natural();
        let v = vec![0.0; 1024];
        let spec = EvolutionSpec::new(EvolutionKind::Linear, 0.01, 2.0, 100).unwrap();
        let traj = evolve(&psi, &v, "free", &spec, &c).unwrap();
        let origin = Coordinates::about(&psi.grid, &[0.0]).unwrap();
        let ks: Vec<f64> = traj
            .snapshots
            .iter()
            .map(|s| {
                let h = polar_decompose(s, TINY, &c).unwrap();
                generator_value_with(Generator::K(0), &h, &v, 0.5, &c, s.time, &origin).unwrap()
            })
            .collect();
        assert_eq!(ks.len(), 3);
        for k in &ks {
            assert!((k - ks[0]).abs() <= 1e-8 * ks[0].abs(), "{ks:?}");
        }
    }

    #[test]
    fn vortex_carries_one_quantum() {
        let g = make_grid(2, 128, 20.0).unwrap();
        let c = PhysicalConstants::natural();
        let psi = vortex_state(&g, 1, 1.5, [0.0, 0.0]).unwrap();
        let h = polar_decompose(&psi, 1e-10, &c).unwrap();
        let v = harmonic_potential(&g, 1.0, 0.5, &[0.0, 0.0]);
        let r = angular_momentum_check(&h, &v, 0.5, &c, 1e-9).unwrap();
        assert!((r.lz - 1.0).abs() < 1e-6, "{r:?}");
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn displaced_packet_in_central_trap_keeps_lz() {
        let g = make_grid(2, 128, 16.0).unwrap();
        let c = PhysicalConstants::natural();
        let psi = gaussian_packet(&g, &[1.0, -0.5], 1.0, &[0.3, 0.8]).unwrap();
        let h = polar_decompose(&psi, TINY, &c).unwrap();
        let v = harmonic_potential(&g, 1.0, 0.5, &[0.0, 0.0]);
        let r = angular_momentum_check(&h, &v, 0.5, &c, 1e-9).unwrap();
        assert!(r.lz.abs() > 0.1);
        assert!(r.pass, "{r:?}");
        let off = harmonic_potential(&g, 1.0, 0.5, &[0.5, 0.0]);
        assert!(!angular_momentum_check(&h, &off, 0.5, &c, 1e-9).unwrap().central);
    }

    #[test]
    fn phaseless_state_has_no_angular_momentum() {
        let g = make_grid(2, 64, 16.0).unwrap();
        let c = PhysicalConstants::natural();
        let psi = gaussian_packet(&g, &[0.0, 0.0], 1.0, &[0.0, 0.0]).unwrap();
        let h = polar_decompose(&psi, TINY, &c).unwrap();
        let r = angular_momentum_check(&h, &vec![0.0; 64 * 64], 0.5, &c, 1e-9).unwrap();
        assert!(r.lz.abs() < 1e-14);
    }
}
