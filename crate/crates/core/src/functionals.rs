//! Energy, entropy, Fisher information and convex gradient regularisers
//! `F[ρ] = ∫ f(ρ)|∇ρ|²` with their Euler–Lagrange fields.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{density_mask, HydroFields, PhysicalConstants, WaveField};
use crate::grid::{neumaier_sum, spectral_gradient, spectral_gradient_complex, spectral_laplacian, Grid};
use crate::propagate::{DensityTrajectory, EvolutionKind, Stepper};
use crate::residuals::ScanResult;

/// Mask threshold for conserved-quantity bookkeeping; far below anything that
/// could shift an integral at the `1e−10` level.
pub const TIGHT_MASK_EPS: f64 = 1e-14;

/// Regulariser family `f(ρ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum RegulariserSpec {
    /// `C/ρ`.
    Fisher { c: f64 },
    /// `C ρ^p`.
    Power { p: f64, c: f64 },
    /// `C`.
    Constant { c: f64 },
    /// `f` and `f′` tabulated on increasing `ρ`, interpolated linearly in `ln ρ`.
    Tabulated { label: String, rho: Vec<f64>, f: Vec<f64>, fprime: Vec<f64> },
}

impl RegulariserSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Self::Fisher { c } | Self::Power { c, .. } | Self::Constant { c } => *c > 0.0,
            Self::Tabulated { rho, f, fprime, .. } => {
                rho.len() >= 2
                    && rho.len() == f.len()
                    && rho.len() == fprime.len()
                    && rho.windows(2).all(|w| w[1] > w[0])
                    && rho[0] > 0.0
                    && f.iter().all(|&v| v > 0.0)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid regulariser {}", self.label())))
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Fisher { .. } => "fisher".into(),
            Self::Power { p, .. } => format!("power(p={p})"),
            Self::Constant { .. } => "constant".into(),
            Self::Tabulated { label, .. } => label.clone(),
        }
    }

    pub fn coefficient(&self) -> f64 {
        match self {
            Self::Fisher { c } | Self::Power { c, .. } | Self::Constant { c } => *c,
            Self::Tabulated { .. } => 1.0,
        }
    }

    /// `(f(ρ), f′(ρ))`.
    pub fn eval(&self, rho: f64) -> (f64, f64) {
        match self {
            Self::Fisher { c } => (c / rho, -c / (rho * rho)),
            Self::Power { p, c } => (c * rho.powf(*p), c * p * rho.powf(p - 1.0)),
            Self::Constant { c } => (*c, 0.0),
            Self::Tabulated { rho: xs, f, fprime, .. } => {
                let x = rho.clamp(xs[0], xs[xs.len() - 1]).ln();
                let k = xs.partition_point(|&v| v.ln() <= x).clamp(1, xs.len() - 1);
                let (x0, x1) = (xs[k - 1].ln(), xs[k].ln());
                let w = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
                (f[k - 1] + w * (f[k] - f[k - 1]), fprime[k - 1] + w * (fprime[k] - fprime[k - 1]))
            }
        }
    }

    /// The same family with every coefficient scaled by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        match self {
            Self::Fisher { c } => Self::Fisher { c: c * s },
            Self::Power { p, c } => Self::Power { p: *p, c: c * s },
            Self::Constant { c } => Self::Constant { c: c * s },
            Self::Tabulated { label, rho, f, fprime } => Self::Tabulated {
                label: label.clone(),
                rho: rho.clone(),
                f: f.iter().map(|v| v * s).collect(),
                fprime: fprime.iter().map(|v| v * s).collect(),
            },
        }
    }
}

fn grad_sq(field: &[f64], grid: &Grid) -> Result<Vec<f64>> {
    let g = spectral_gradient(field, grid)?;
    Ok((0..field.len()).map(|i| g.iter().map(|c| c[i] * c[i]).sum()).collect())
}

fn masked_integral(values: impl Iterator<Item = f64>, mask: &[bool], grid: &Grid) -> f64 {
    neumaier_sum(values.zip(mask).filter(|(_, &m)| m).map(|(v, _)| v)) * grid.cell_volume()
}

/// `F[ρ] = ∫_mask f(ρ)|∇ρ|²`.
pub fn functional_value(spec: &RegulariserSpec, rho: &[f64], grid: &Grid, mask: &[bool]) -> Result<f64> {
    let g2 = grad_sq(rho, grid)?;
    Ok(masked_integral(rho.iter().zip(&g2).map(|(&r, g)| spec.eval(r).0 * g), mask, grid))
}

/// `δF/δρ = −2fΔρ − f′|∇ρ|²` on the mask, zero elsewhere.
pub fn el_derivative(spec: &RegulariserSpec, rho: &[f64], grid: &Grid, mask: &[bool]) -> Result<Vec<f64>> {
    spec.validate()?;
    grid.check_len(mask.len())?;
    let lap = spectral_laplacian(rho, grid)?;
    let g2 = grad_sq(rho, grid)?;
    Ok((0..rho.len())
        .map(|i| {
            if !mask[i] {
                return 0.0;
            }
            let (f, fp) = spec.eval(rho[i]);
            -2.0 * f * lap[i] - fp * g2[i]
        })
        .collect())
}

/// `Δa/a` for a real amplitude `a` with `a² = ρ`, on the mask. A signed
/// amplitude keeps the quotient smooth through nodes.
pub fn laplacian_quotient(amplitude: &[f64], grid: &Grid, mask: &[bool]) -> Result<Vec<f64>> {
    let lap = spectral_laplacian(amplitude, grid)?;
    Ok((0..amplitude.len()).map(|i| if mask[i] { lap[i] / amplitude[i] } else { 0.0 }).collect())
}

/// Distance of an EL field from the span of `Δa/a`, weighted by `ρ`:
/// returns `(min_c ‖δF − c·(−4Δa/a)‖ / ‖δF‖, best c)`.
pub fn laplacian_quotient_defect(el: &[f64], quotient: &[f64], rho: &[f64], mask: &[bool]) -> (f64, f64) {
    let idx = || (0..el.len()).filter(|&i| mask[i]);
    let q = |i: usize| -4.0 * quotient[i];
    let qq = neumaier_sum(idx().map(|i| rho[i] * q(i) * q(i)));
    let eq = neumaier_sum(idx().map(|i| rho[i] * el[i] * q(i)));
    let ee = neumaier_sum(idx().map(|i| rho[i] * el[i] * el[i]));
    if ee == 0.0 {
        return (0.0, 0.0);
    }
    let c = if qq > 0.0 { eq / qq } else { 0.0 };
    let rr = neumaier_sum(idx().map(|i| rho[i] * (el[i] - c * q(i)).powi(2)));
    ((rr / ee).sqrt(), c)
}

/// A density with a real amplitude carrying the sign through nodes.
#[derive(Debug, Clone)]
pub struct DensitySample {
    pub id: String,
    pub rho: Vec<f64>,
    pub amplitude: Vec<f64>,
    pub mask: Vec<bool>,
}

impl DensitySample {
    /// Positive amplitude `√ρ` with the default mask.
    pub fn positive(id: &str, rho: Vec<f64>, eps_mask: f64) -> Self {
        let amplitude = rho.iter().map(|r| r.max(0.0).sqrt()).collect();
        let mask = density_mask(&rho, eps_mask);
        Self { id: id.into(), rho, amplitude, mask }
    }

    /// Real wavefunction with sites `|x − node| < half_width` removed from the mask.
    pub fn with_node(id: &str, psi: &WaveField, node: f64, half_width: f64, eps_mask: f64) -> Self {
        let rho = psi.density();
        let mut mask = density_mask(&rho, eps_mask);
        for (i, m) in mask.iter_mut().enumerate() {
            if (psi.grid.coord(i, 0) - node).abs() < half_width {
                *m = false;
            }
        }
        Self { id: id.into(), rho, amplitude: psi.values.iter().map(|z| z.re).collect(), mask }
    }
}

/// One row of the necessity table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NecessityRow {
    pub rho_id: String,
    pub family: String,
    pub coefficient: f64,
    pub fitted_coefficient: f64,
    pub residual: f64,
    pub is_fisher: bool,
}

/// EL field of every family against every density, measured as distance from
/// a Laplacian quotient.
pub fn fisher_el_necessity_report(
    library: &[DensitySample],
    specs: &[RegulariserSpec],
    grid: &Grid,
) -> Result<Vec<NecessityRow>> {
    let mut rows = Vec::new();
    for sample in library {
        let quotient = laplacian_quotient(&sample.amplitude, grid, &sample.mask)?;
        for spec in specs {
            let el = el_derivative(spec, &sample.rho, grid, &sample.mask)?;
            let (residual, fitted) = laplacian_quotient_defect(&el, &quotient, &sample.rho, &sample.mask);
            rows.push(NecessityRow {
                rho_id: sample.id.clone(),
                family: spec.label(),
                coefficient: spec.coefficient(),
                fitted_coefficient: fitted,
                residual,
                is_fisher: matches!(spec, RegulariserSpec::Fisher { .. }),
            });
        }
    }
    Ok(rows)
}

/// Pass iff Fisher rows sit at `≤ fisher_tol` and all others at `≥ other_tol`.
pub fn necessity_passes(rows: &[NecessityRow], fisher_tol: f64, other_tol: f64) -> bool {
    rows.iter().all(|r| if r.is_fisher { r.residual <= fisher_tol } else { r.residual >= other_tol })
}

/// `(value, off-mask error bar)` of `S_Sh = −∫ρ ln ρ`.
pub fn shannon_entropy(rho: &[f64], grid: &Grid, mask: &[bool]) -> (f64, f64) {
    let value = -masked_integral(rho.iter().map(|&r| r * r.ln()), mask, grid);
    let cut = rho.iter().zip(mask).filter(|(_, &m)| m).map(|(r, _)| *r).fold(f64::INFINITY, f64::min);
    let off = mask.iter().filter(|&&m| !m).count() as f64 * grid.cell_volume();
    let bar = if cut.is_finite() && cut > 0.0 && cut < (-1f64).exp() { cut * (1.0 / cut).ln() * off } else { 0.0 };
    (value, bar)
}

/// `I_F = ∫_mask |∇ρ|²/ρ`.
pub fn fisher_information(rho: &[f64], grid: &Grid, mask: &[bool]) -> Result<f64> {
    let g2 = grad_sq(rho, grid)?;
    Ok(masked_integral(rho.iter().zip(&g2).map(|(&r, g)| if r > 0.0 { g / r } else { 0.0 }), mask, grid))
}

/// Energy split and information measures of a state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub kinetic: f64,
    pub potential: f64,
    pub curvature: f64,
    pub total: f64,
    pub fisher_info: f64,
    pub shannon: f64,
}

/// `∫ρ|∇S|²/2m + ∫Vρ + α∫|∇√ρ|²` on the mask of `hydro`.
pub fn energy(hydro: &HydroFields, potential: &[f64], alpha: f64, constants: &PhysicalConstants) -> Result<EnergyReport> {
    let grid = &hydro.grid;
    grid.check_len(potential.len())?;
    let mask = &hydro.mask;
    if !mask.iter().any(|&m| m) {
        return Err(Error::EmptyMask);
    }
    let m = constants.mass;
    let kinetic = masked_integral(
        (0..hydro.rho.len()).map(|i| {
            let vj: f64 = (0..grid.dim()).map(|a| hydro.velocity[a][i] * hydro.current[a][i]).sum();
            0.5 * m * vj
        }),
        mask,
        grid,
    );
    let pot = masked_integral(hydro.rho.iter().zip(potential).map(|(r, v)| r * v), mask, grid);
    let amp: Vec<f64> = hydro.rho.iter().map(|r| r.sqrt()).collect();
    let curvature = alpha * masked_integral(grad_sq(&amp, grid)?.into_iter(), mask, grid);
    Ok(EnergyReport {
        kinetic,
        potential: pot,
        curvature,
        total: kinetic + pot + curvature,
        fisher_info: fisher_information(&hydro.rho, grid, mask)?,
        shannon: shannon_entropy(&hydro.rho, grid, mask).0,
    })
}

/// Entropy rate at one interior snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyRate {
    pub time: f64,
    pub measured: f64,
    pub predicted: f64,
}

/// Centred `dS_Sh/dt` against `D·I_F + ∫ρ∇·v` at each interior snapshot.
pub fn shannon_entropy_rate(traj: &DensityTrajectory, d: f64, velocity: &[Vec<f64>], eps_mask: f64) -> Result<Vec<EntropyRate>> {
    let k = traj.densities.len();
    if k < 3 {
        return Err(Error::TooFewSnapshots { needed: 3, got: k });
    }
    let grid = &traj.grid;
    let mut div = vec![0.0; grid.size()];
    for (a, v) in velocity.iter().enumerate() {
        let g = spectral_gradient(v, grid)?;
        div.iter_mut().zip(&g[a]).for_each(|(o, x)| *o += x);
    }
    let entropy = |r: &Vec<f64>| shannon_entropy(r, grid, &density_mask(r, eps_mask)).0;
    let s: Vec<f64> = traj.densities.iter().map(entropy).collect();
    (1..k - 1)
        .map(|j| {
            let rho = &traj.densities[j];
            let mask = density_mask(rho, eps_mask);
            let advective = masked_integral(rho.iter().zip(&div).map(|(r, d)| r * d), &mask, grid);
            Ok(EntropyRate {
                time: traj.times[j],
                measured: (s[j + 1] - s[j - 1]) / (traj.times[j + 1] - traj.times[j - 1]),
                predicted: d * fisher_information(rho, grid, &mask)? + advective,
            })
        })
        .collect()
}

/// Entropy balance of the diffusive wave flow at `psi`: the centred rate of
/// `S_Sh` over one `±delta` step against `D·I_F + ∫ρ∇·v`.
pub fn dg_entropy_identity(
    psi: &WaveField,
    potential: &[f64],
    d: f64,
    delta: f64,
    constants: &PhysicalConstants,
    mask_eps: f64,
) -> Result<EntropyRate> {
    let grid = &psi.grid;
    let kind = EvolutionKind::DgDiffusion { d };
    let fwd = Stepper::new(grid, potential, kind, delta, constants, mask_eps)?.step(psi)?;
    let bwd = Stepper::new(grid, potential, kind, -delta, constants, mask_eps)?.step(psi)?;
    let entropy = |w: &WaveField| {
        let r = w.density();
        shannon_entropy(&r, grid, &density_mask(&r, TIGHT_MASK_EPS)).0
    };
    let rho = psi.density();
    let mask = density_mask(&rho, TIGHT_MASK_EPS);
    // ∫ρ∇·v = −∫ j·∇ρ/ρ, with j = (ħ/m) Im(ψ*∇ψ).
    let grad_psi = spectral_gradient_complex(&psi.values, grid)?;
    let grad_rho = spectral_gradient(&rho, grid)?;
    let scale = constants.hbar / constants.mass;
    let advective = -masked_integral(
        (0..rho.len()).map(|i| {
            (0..grid.dim())
                .map(|a| scale * (psi.values[i].conj() * grad_psi[a][i]).im * grad_rho[a][i] / rho[i])
                .sum::<f64>()
        }),
        &mask,
        grid,
    );
    Ok(EntropyRate {
        time: psi.time,
        measured: (entropy(&fwd) - entropy(&bwd)) / (2.0 * delta),
        predicted: d * fisher_information(&rho, grid, &mask)? + advective,
    })
}

/// Directional derivative of `F` along `eta`: central difference of the value
/// with step `eps` against `∫ δF/δρ · η`. Returns `(finite_difference, analytic)`.
pub fn functional_gateaux_pair(
    spec: &RegulariserSpec,
    rho: &[f64],
    eta: &[f64],
    eps: f64,
    grid: &Grid,
    mask: &[bool],
) -> Result<(f64, f64)> {
    grid.check_len(eta.len())?;
    let shifted = |s: f64| -> Vec<f64> { rho.iter().zip(eta).map(|(r, e)| r + s * e).collect() };
    let fd = (functional_value(spec, &shifted(eps), grid, mask)? - functional_value(spec, &shifted(-eps), grid, mask)?)
        / (2.0 * eps);
    let el = el_derivative(spec, rho, grid, mask)?;
    Ok((fd, masked_integral(el.iter().zip(eta).map(|(a, b)| a * b), mask, grid)))
}

/// Stationary-state balance `‖V − c·α⋆·Δa/a − E‖_{L²(ρ)} / |E|` over a grid
/// of coefficient ratios `c`, on the mask of `sample`.
pub fn coefficient_scan(
    sample: &DensitySample,
    potential: &[f64],
    energy: f64,
    alpha_star: f64,
    c_grid: &[f64],
    grid: &Grid,
) -> Result<ScanResult> {
    grid.check_len(potential.len())?;
    let quotient = laplacian_quotient(&sample.amplitude, grid, &sample.mask)?;
    let idx: Vec<usize> = (0..sample.rho.len()).filter(|&i| sample.mask[i]).collect();
    if idx.is_empty() {
        return Err(Error::EmptyMask);
    }
    let wsum = neumaier_sum(idx.iter().map(|&i| sample.rho[i]));
    let curve = c_grid
        .iter()
        .map(|c| {
            let s = neumaier_sum(idx.iter().map(|&i| {
                sample.rho[i] * (potential[i] - c * alpha_star * quotient[i] - energy).powi(2)
            }));
            (s / wsum).sqrt() / energy.abs()
        })
        .collect();
    ScanResult::from_curve(c_grid.to_vec(), curve, 0.0)
}
