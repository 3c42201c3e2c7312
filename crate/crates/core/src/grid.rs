//! Periodic uniform grids with spectral and fourth-order stencil derivatives.
//!
//! Fields are flat vectors. In 2D the layout is row-major with `x` fastest,
//! i.e. site `(ix, iy)` lives at `iy * n + ix`. Coordinates run over
//! `[-L/2, L/2)` so the origin sits at index `n / 2`.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Periodic lattice in one or two dimensions.
#[derive(Clone)]
pub struct Grid {
    dim: usize,
    n: usize,
    length: f64,
    spacing: f64,
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .field("length", &self.length)
            .field("spacing", &self.spacing)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n && self.length == other.length
    }
}

/// Build a grid with `n` points per axis over a periodic box of side `length`.
pub fn make_grid(dim: usize, n: usize, length: f64) -> Result<Grid> {
    if dim != 1 && dim != 2 {
        return Err(Error::InvalidGrid(format!("dim must be 1 or 2, got {dim}")));
    }
    if n < 16 || !n.is_power_of_two() {
        return Err(Error::InvalidGrid(format!(
            "n must be a power of two >= 16, got {n}"
        )));
    }
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
    }
    let dk = 2.0 * PI / length;
    let wavenumbers = (0..n)
        .map(|i| {
            let m = if i < n / 2 { i as f64 } else { i as f64 - n as f64 };
            m * dk
        })
        .collect();
    let mut planner = FftPlanner::new();
    Ok(Grid {
        dim,
        n,
        length,
        spacing: length / n as f64,
        wavenumbers,
        forward: planner.plan_fft_forward(n),
        inverse: planner.plan_fft_inverse(n),
    })
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Angular wavenumbers in FFT ordering; the Nyquist entry is negative.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Total number of sites.
    pub fn size(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Volume element `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// Coordinates along one axis.
    pub fn axis(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| -0.5 * self.length + i as f64 * self.spacing)
            .collect()
    }

    /// Coordinate of site `idx` along `axis`.
    pub fn coord(&self, idx: usize, axis: usize) -> f64 {
        let i = match axis {
            0 => idx % self.n,
            _ => idx / self.n,
        };
        -0.5 * self.length + i as f64 * self.spacing
    }

    /// Per-axis coordinate fields.
    pub fn coordinates(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|a| (0..self.size()).map(|i| self.coord(i, a)).collect())
            .collect()
    }

    /// Map a function of position over the grid.
    pub fn map<T>(&self, f: impl Fn(&[f64]) -> T) -> Vec<T> {
        let mut x = vec![0.0; self.dim];
        (0..self.size())
            .map(|i| {
                for (a, xa) in x.iter_mut().enumerate() {
                    *xa = self.coord(i, a);
                }
                f(&x)
            })
            .collect()
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if len == self.size() {
            Ok(())
        } else {
            Err(Error::ShapeMismatch { expected: self.size(), got: len })
        }
    }

    /// In-place forward DFT (unnormalised).
    pub fn fft(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// In-place inverse DFT including the `1/n^d` normalisation.
    pub fn ifft(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let s = 1.0 / self.size() as f64;
        data.iter_mut().for_each(|z| *z *= s);
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        if self.dim == 1 {
            plan.process(data);
            return;
        }
        for row in data.chunks_exact_mut(n) {
            plan.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for ix in 0..n {
            for iy in 0..n {
                col[iy] = data[iy * n + ix];
            }
            plan.process(&mut col);
            for iy in 0..n {
                data[iy * n + ix] = col[iy];
            }
        }
    }

    /// Wavenumber of spectral index `idx` along `axis`.
    fn k_at(&self, idx: usize, axis: usize) -> f64 {
        let i = if axis == 0 { idx % self.n } else { idx / self.n };
        self.wavenumbers[i]
    }

    /// `|k|^2` in FFT ordering, Nyquist included.
    pub fn k_squared(&self) -> Vec<f64> {
        (0..self.size())
            .map(|i| (0..self.dim).map(|a| self.k_at(i, a).powi(2)).sum())
            .collect()
    }

    /// First-derivative multiplier along `axis`; the Nyquist mode is dropped
    /// so real fields stay real.
    fn derivative_symbol(&self, idx: usize, axis: usize) -> f64 {
        let i = if axis == 0 { idx % self.n } else { idx / self.n };
        if i == self.n / 2 {
            0.0
        } else {
            self.wavenumbers[i]
        }
    }
}

fn to_complex(field: &[f64]) -> Vec<Complex64> {
    field.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

/// Spectral gradient of a complex field, one component per axis.
pub fn spectral_gradient_complex(field: &[Complex64], grid: &Grid) -> Result<Vec<Vec<Complex64>>> {
    grid.check_len(field.len())?;
    let mut hat = field.to_vec();
    grid.fft(&mut hat);
    Ok((0..grid.dim())
        .map(|a| {
            let mut d: Vec<Complex64> = hat
                .iter()
                .enumerate()
                .map(|(i, &z)| z * Complex64::new(0.0, grid.derivative_symbol(i, a)))
                .collect();
            grid.ifft(&mut d);
            d
        })
        .collect())
}

/// Spectral gradient of a real field.
pub fn spectral_gradient(field: &[f64], grid: &Grid) -> Result<Vec<Vec<f64>>> {
    let g = spectral_gradient_complex(&to_complex(field), grid)?;
    Ok(g.into_iter().map(|c| c.iter().map(|z| z.re).collect()).collect())
}

/// Spectral Laplacian of a complex field.
pub fn spectral_laplacian_complex(field: &[Complex64], grid: &Grid) -> Result<Vec<Complex64>> {
    grid.check_len(field.len())?;
    let mut hat = field.to_vec();
    grid.fft(&mut hat);
    for (z, k2) in hat.iter_mut().zip(grid.k_squared()) {
        *z *= -k2;
    }
    grid.ifft(&mut hat);
    Ok(hat)
}

/// Spectral Laplacian of a real field.
pub fn spectral_laplacian(field: &[f64], grid: &Grid) -> Result<Vec<f64>> {
    Ok(spectral_laplacian_complex(&to_complex(field), grid)?
        .iter()
        .map(|z| z.re)
        .collect())
}

/// Spectral divergence of a vector field.
pub fn spectral_divergence(components: &[Vec<f64>], grid: &Grid) -> Result<Vec<f64>> {
    if components.len() != grid.dim() {
        return Err(Error::ShapeMismatch { expected: grid.dim(), got: components.len() });
    }
    let mut out = vec![0.0; grid.size()];
    for (a, c) in components.iter().enumerate() {
        let g = spectral_gradient(c, grid)?;
        out.iter_mut().zip(&g[a]).for_each(|(o, d)| *o += d);
    }
    Ok(out)
}

/// Values that the stencil operators can act on.
pub trait StencilValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {}
impl<T> StencilValue for T where T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T> {}

fn neighbour(grid: &Grid, idx: usize, axis: usize, offset: isize) -> usize {
    let n = grid.n() as isize;
    let (ix, iy) = ((idx % grid.n()) as isize, (idx / grid.n()) as isize);
    if axis == 0 {
        (iy * n + (ix + offset).rem_euclid(n)) as usize
    } else {
        (((iy + offset).rem_euclid(n)) * n + ix) as usize
    }
}

/// Periodic five-point fourth-order gradient.
pub fn fd_gradient4<T: StencilValue>(field: &[T], grid: &Grid) -> Result<Vec<Vec<T>>> {
    grid.check_len(field.len())?;
    let inv = 1.0 / (12.0 * grid.spacing());
    Ok((0..grid.dim())
        .map(|a| {
            (0..field.len())
                .map(|i| {
                    let f = |o| field[neighbour(grid, i, a, o)];
                    (f(-2) - f(2) + (f(1) - f(-1)) * 8.0) * inv
                })
                .collect()
        })
        .collect())
}

/// Periodic five-point fourth-order Laplacian.
pub fn fd_laplacian4<T: StencilValue>(field: &[T], grid: &Grid) -> Result<Vec<T>> {
    grid.check_len(field.len())?;
    let inv = 1.0 / (12.0 * grid.spacing() * grid.spacing());
    Ok((0..field.len())
        .map(|i| {
            let mut acc = field[i] * (-30.0 * grid.dim() as f64);
            for a in 0..grid.dim() {
                let f = |o| field[neighbour(grid, i, a, o)];
                acc = acc + (f(1) + f(-1)) * 16.0 - (f(2) + f(-2));
            }
            acc * inv
        })
        .collect())
}

/// Trapezoid quadrature (a plain Riemann sum on a periodic lattice).
pub fn integrate(field: &[f64], grid: &Grid) -> f64 {
    neumaier_sum(field.iter().copied()) * grid.cell_volume()
}

/// `∫|ψ|²`.
pub fn norm_squared(field: &[Complex64], grid: &Grid) -> f64 {
    neumaier_sum(field.iter().map(|z| z.norm_sqr())) * grid.cell_volume()
}

/// `∫|ψ|²` evaluated from the DFT coefficients.
pub fn spectral_norm_squared(field: &[Complex64], grid: &Grid) -> f64 {
    let mut hat = field.to_vec();
    grid.fft(&mut hat);
    neumaier_sum(hat.iter().map(|z| z.norm_sqr())) * grid.cell_volume() / grid.size() as f64
}

/// `⟨a, b⟩ = ∫ conj(a) b`.
pub fn inner(a: &[Complex64], b: &[Complex64], grid: &Grid) -> Complex64 {
    let re = neumaier_sum(a.iter().zip(b).map(|(x, y)| (x.conj() * y).re));
    let im = neumaier_sum(a.iter().zip(b).map(|(x, y)| (x.conj() * y).im));
    Complex64::new(re, im) * grid.cell_volume()
}

/// Compensated summation, so aggregates do not depend on rounding luck.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}
