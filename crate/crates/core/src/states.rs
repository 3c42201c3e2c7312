//! Analytic initial states and potentials used by the test suites.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::WaveField;
use crate::grid::{integrate, Grid};

fn check_point(grid: &Grid, p: &[f64], what: &str) -> Result<()> {
    if p.len() != grid.dim() {
        return Err(Error::InvalidParameter(format!(
            "{what} has {} components on a {}D grid",
            p.len(),
            grid.dim()
        )));
    }
    Ok(())
}

/// `exp(−|x−x₀|²/2σ² + i k·x)`, normalised on the grid.
pub fn gaussian_packet(grid: &Grid, center: &[f64], sigma: f64, k: &[f64]) -> Result<WaveField> {
    check_point(grid, center, "center")?;
    check_point(grid, k, "wavevector")?;
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter("sigma must be positive".into()));
    }
    let values = grid.map(|x| {
        let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c).powi(2)).sum();
        let ph: f64 = x.iter().zip(k).map(|(a, k)| a * k).sum();
        Complex64::from_polar((-0.5 * r2 / (sigma * sigma)).exp(), ph)
    });
    WaveField::new(grid.clone(), values, 0.0)?.normalized()
}

/// Oscillator eigenfunction `φ_n` for `V = ½ m ω² (x − c)²` in 1D.
pub fn hermite_state(grid: &Grid, n: usize, mass: f64, omega: f64, hbar: f64, center: f64) -> Result<WaveField> {
    if grid.dim() != 1 {
        return Err(Error::InvalidParameter("hermite states are 1D".into()));
    }
    let scale = (mass * omega / hbar).sqrt();
    let values = grid.map(|x| {
        let xi = scale * (x[0] - center);
        let mut prev = 0.0;
        let mut cur = (scale * scale / PI).powf(0.25) * (-0.5 * xi * xi).exp();
        for k in 0..n {
            let next = (2.0 / (k as f64 + 1.0)).sqrt() * xi * cur - (k as f64 / (k as f64 + 1.0)).sqrt() * prev;
            prev = cur;
            cur = next;
        }
        Complex64::new(cur, 0.0)
    });
    WaveField::new(grid.clone(), values, 0.0)?.normalized()
}

/// Eigenvalue `ħω(n + ½)`.
pub fn hermite_energy(n: usize, omega: f64, hbar: f64) -> f64 {
    hbar * omega * (n as f64 + 0.5)
}

/// `½ m ω² |x − c|²`.
pub fn harmonic_potential(grid: &Grid, mass: f64, omega: f64, center: &[f64]) -> Vec<f64> {
    grid.map(|x| {
        let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c).powi(2)).sum();
        0.5 * mass * omega * omega * r2
    })
}

/// 2D vortex `((x−cx) + i(y−cy))^n exp(−r²/2σ²)`; negative `n` winds clockwise.
pub fn vortex_state(grid: &Grid, winding: i32, sigma: f64, center: [f64; 2]) -> Result<WaveField> {
    if grid.dim() != 2 {
        return Err(Error::InvalidParameter("vortex states are 2D".into()));
    }
    let values = grid.map(|x| {
        let z = Complex64::new(x[0] - center[0], x[1] - center[1]);
        let core = if winding >= 0 { z.powi(winding) } else { z.conj().powi(-winding) };
        core * (-0.5 * z.norm_sqr() / (sigma * sigma)).exp()
    });
    WaveField::new(grid.clone(), values, 0.0)?.normalized()
}

/// Smooth compactly supported density `∝ exp(−1/(1 − (x/a)²))`.
pub fn bump_density(grid: &Grid, half_width: f64) -> Vec<f64> {
    let raw = grid.map(|x| {
        let r2: f64 = x.iter().map(|v| v * v).sum::<f64>() / (half_width * half_width);
        if r2 < 1.0 {
            (-1.0 / (1.0 - r2)).exp()
        } else {
            0.0
        }
    });
    let z = integrate(&raw, grid);
    raw.iter().map(|r| r / z).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{inner, make_grid};

    #[test]
    fn hermite_functions_are_orthonormal() {
        let g = make_grid(1, 512, 30.0).unwrap();
        let s: Vec<_> = (0..5).map(|n| hermite_state(&g, n, 2.0, 0.7, 1.3, 0.4).unwrap()).collect();
        for a in 0..5 {
            for b in 0..5 {
                let ip = inner(&s[a].values, &s[b].values, &g);
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((ip.re - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gaussian_is_normalised() {
        let g = make_grid(2, 64, 16.0).unwrap();
        let psi = gaussian_packet(&g, &[0.5, -1.0], 1.2, &[0.3, 0.0]).unwrap();
        assert!((psi.norm_squared() - 1.0).abs() < 1e-13);
        assert!(gaussian_packet(&g, &[0.0], 1.0, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn bump_integrates_to_one() {
        let g = make_grid(1, 256, 8.0).unwrap();
        let b = bump_density(&g, 2.0);
        assert!((integrate(&b, &g) - 1.0).abs() < 1e-13);
        assert!(b.iter().all(|&v| v >= 0.0));
    }
}
