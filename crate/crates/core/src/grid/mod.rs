//! Periodized waveguide geometry: the box `[-L, L)^d` times the torus of
//! circumference `2π`, sampled on a uniform grid.
//!
//! Samples are stored row-major over `(x_1, .., x_d, y)`, so the torus index
//! is the fastest-varying one. Spectral coefficients use the same layout in
//! FFT order, normalized so that `f(x, y) = Σ c_k e^{i(ξ·x + m y)}`.

mod norms;
pub mod snapshot;
mod transform;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub use norms::{abs_pow, energy_norm, h1_norm, lp_norm, spectral_energy_norm};
pub use transform::SpectralPair;

/// Uniform grid on `[-L, L)^d × 𝕋`.
#[derive(Clone)]
pub struct TorusWaveguideGrid {
    dim: usize,
    half_width: f64,
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    cell_volume: f64,
    /// Euclidean wavenumbers `πk/L` in FFT order.
    xi: Vec<f64>,
    /// Torus wavenumbers `m` in FFT order.
    m: Vec<f64>,
    /// `|ξ|² + m²` per spectral index.
    wavenumber_sq: Vec<f64>,
    /// Flat index of the mode `-k` for every mode `k`.
    neg: Vec<usize>,
    plans: Plans,
}

#[derive(Clone)]
struct Plans {
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for TorusWaveguideGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusWaveguideGrid")
            .field("d", &self.dim)
            .field("L", &self.half_width)
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .finish()
    }
}

impl PartialEq for TorusWaveguideGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.half_width == other.half_width && self.nx == other.nx && self.ny == other.ny
    }
}

fn fft_wavenumber(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl TorusWaveguideGrid {
    /// Builds a grid, validating `d ∈ {1, 2}`, power-of-two counts with
    /// `nx ≥ 16`, `ny ≥ 4`, and `L > 0`.
    pub fn new(dim: usize, half_width: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidGrid(format!(
                "euclidean dimension {dim} is not supported numerically (use 1 or 2)"
            )));
        }
        if !nx.is_power_of_two() || nx < 16 {
            return Err(Error::InvalidGrid(format!(
                "nx = {nx} must be a power of two and at least 16"
            )));
        }
        if !ny.is_power_of_two() || ny < 4 {
            return Err(Error::InvalidGrid(format!(
                "ny = {ny} must be a power of two and at least 4"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half-width L = {half_width} must be positive"
            )));
        }

        let dx = 2.0 * half_width / nx as f64;
        let dy = 2.0 * PI / ny as f64;
        let cell_volume = dx.powi(dim as i32) * dy;

        let xi: Vec<f64> = (0..nx)
            .map(|i| PI * fft_wavenumber(i, nx) as f64 / half_width)
            .collect();
        let m: Vec<f64> = (0..ny).map(|j| fft_wavenumber(j, ny) as f64).collect();

        let n_euclid = nx.pow(dim as u32);
        let len = n_euclid * ny;
        let mut wavenumber_sq = Vec::with_capacity(len);
        let mut neg = Vec::with_capacity(len);
        for e in 0..n_euclid {
            let (xi_sq, e_neg) = match dim {
                1 => (xi[e] * xi[e], (nx - e) % nx),
                _ => {
                    let (i1, i2) = (e / nx, e % nx);
                    (
                        xi[i1] * xi[i1] + xi[i2] * xi[i2],
                        ((nx - i1) % nx) * nx + (nx - i2) % nx,
                    )
                }
            };
            for j in 0..ny {
                wavenumber_sq.push(xi_sq + m[j] * m[j]);
                neg.push(e_neg * ny + (ny - j) % ny);
            }
        }

        let mut planner = FftPlanner::new();
        let plans = Plans {
            fwd_x: planner.plan_fft_forward(nx),
            inv_x: planner.plan_fft_inverse(nx),
            fwd_y: planner.plan_fft_forward(ny),
            inv_y: planner.plan_fft_inverse(ny),
        };

        Ok(Self {
            dim,
            half_width,
            nx,
            ny,
            dx,
            dy,
            cell_volume,
            xi,
            m,
            wavenumber_sq,
            neg,
            plans,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    /// `(2L/nx)^d · (2π/ny)`.
    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    /// Total measure `(2L)^d · 2π` of the periodized domain.
    pub fn volume(&self) -> f64 {
        self.cell_volume * self.len() as f64
    }

    /// Number of euclidean grid points, `nx^d`.
    pub fn euclid_len(&self) -> usize {
        self.nx.pow(self.dim as u32)
    }

    /// Total number of samples.
    pub fn len(&self) -> usize {
        self.euclid_len() * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Shape `[nx, (nx,) ny]` of the sample array.
    pub fn shape(&self) -> Vec<usize> {
        let mut s = vec![self.nx; self.dim];
        s.push(self.ny);
        s
    }

    /// Euclidean wavenumbers `πk/L` for one axis, FFT order.
    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    /// Torus wavenumbers in FFT order.
    pub fn torus_modes(&self) -> &[f64] {
        &self.m
    }

    /// `|ξ|² + m²` per spectral index.
    pub fn wavenumber_sq(&self) -> &[f64] {
        &self.wavenumber_sq
    }

    pub(crate) fn neg_index(&self) -> &[usize] {
        &self.neg
    }

    /// Coordinate of grid index `i` along a euclidean axis.
    pub fn x_coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.dx
    }

    pub fn y_coord(&self, j: usize) -> f64 {
        j as f64 * self.dy
    }

    /// Euclidean grid multi-index of a flat euclidean index.
    pub fn euclid_multi_index(&self, e: usize) -> [usize; 2] {
        match self.dim {
            1 => [e, 0],
            _ => [e / self.nx, e % self.nx],
        }
    }

    /// Euclidean coordinates of a flat euclidean index; unused axes are 0.
    pub fn euclid_point(&self, e: usize) -> [f64; 2] {
        let [i1, i2] = self.euclid_multi_index(e);
        match self.dim {
            1 => [self.x_coord(i1), 0.0],
            _ => [self.x_coord(i1), self.x_coord(i2)],
        }
    }

    /// Wraps a displacement into `[-L, L)` (minimum image).
    pub fn min_image(&self, delta: f64) -> f64 {
        let period = 2.0 * self.half_width;
        delta - period * ((delta + self.half_width) / period).floor()
    }

    /// Periodized euclidean distance between a grid point and `center`.
    pub fn periodic_distance(&self, e: usize, center: &[f64]) -> f64 {
        let p = self.euclid_point(e);
        (0..self.dim)
            .map(|a| {
                let c = center.get(a).copied().unwrap_or(0.0);
                self.min_image(p[a] - c).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Checks that a sample array matches this grid.
    pub fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                got: len,
            });
        }
        Ok(())
    }

    pub fn check_state(&self, state: &FieldState) -> Result<()> {
        self.check_len(state.u.len())?;
        self.check_len(state.v.len())
    }

    /// Spectral mask for the 2/3 rule: keeps modes with `|k| ≤ n/3` on every axis.
    pub fn dealias_mask(&self) -> Vec<bool> {
        let keep = |i: usize, n: usize| 3 * fft_wavenumber(i, n).unsigned_abs() as usize <= n;
        let mut mask = Vec::with_capacity(self.len());
        for e in 0..self.euclid_len() {
            let [i1, i2] = self.euclid_multi_index(e);
            let ex = keep(i1, self.nx) && (self.dim == 1 || keep(i2, self.nx));
            for j in 0..self.ny {
                mask.push(ex && keep(j, self.ny));
            }
        }
        mask
    }

    /// Samples `f(x, y)` on the grid.
    pub fn sample<F>(&self, mut f: F) -> Vec<f64>
    where
        F: FnMut(&[f64], f64) -> f64,
    {
        let mut out = Vec::with_capacity(self.len());
        for e in 0..self.euclid_len() {
            let p = self.euclid_point(e);
            for j in 0..self.ny {
                out.push(f(&p[..self.dim], self.y_coord(j)));
            }
        }
        out
    }
}

/// Convenience wrapper mirroring [`TorusWaveguideGrid::new`].
pub fn make_grid(dim: usize, half_width: f64, nx: usize, ny: usize) -> Result<TorusWaveguideGrid> {
    TorusWaveguideGrid::new(dim, half_width, nx, ny)
}

/// The pair `(u, ∂ₜu)` sampled on a grid at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
}

impl FieldState {
    /// Builds a state, checking the shapes against `grid` and that every sample is finite.
    pub fn new(grid: &TorusWaveguideGrid, u: Vec<f64>, v: Vec<f64>, t: f64) -> Result<Self> {
        let state = Self { u, v, t };
        grid.check_state(&state)?;
        state.check_finite()?;
        Ok(state)
    }

    pub fn zeros(grid: &TorusWaveguideGrid) -> Self {
        Self {
            u: vec![0.0; grid.len()],
            v: vec![0.0; grid.len()],
            t: 0.0,
        }
    }

    pub fn check_finite(&self) -> Result<()> {
        if !self.t.is_finite() {
            return Err(Error::NonFinite("time stamp"));
        }
        if self.u.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("u"));
        }
        if self.v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("v"));
        }
        Ok(())
    }

    /// Componentwise `self - other`, keeping the time stamp of `self`.
    pub fn sub(&self, other: &FieldState) -> FieldState {
        FieldState {
            u: self.u.iter().zip(&other.u).map(|(a, b)| a - b).collect(),
            v: self.v.iter().zip(&other.v).map(|(a, b)| a - b).collect(),
            t: self.t,
        }
    }

    /// Componentwise `self + other`, keeping the time stamp of `self`.
    pub fn add(&self, other: &FieldState) -> FieldState {
        FieldState {
            u: self.u.iter().zip(&other.u).map(|(a, b)| a + b).collect(),
            v: self.v.iter().zip(&other.v).map(|(a, b)| a + b).collect(),
            t: self.t,
        }
    }

    pub fn scale(&self, c: f64) -> FieldState {
        FieldState {
            u: self.u.iter().map(|a| c * a).collect(),
            v: self.v.iter().map(|a| c * a).collect(),
            t: self.t,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_volume_of_benchmark_grid() {
        let g = make_grid(1, 64.0, 1024, 16).unwrap();
        let expected = 0.125 * (PI / 8.0);
        assert!((g.cell_volume() - expected).abs() <= 1e-15 * expected);
        assert_eq!(g.len(), 1024 * 16);
    }

    #[test]
    fn minimal_grid_is_legal() {
        let g = make_grid(1, 1.0, 16, 4).unwrap();
        assert_eq!(g.shape(), vec![16, 4]);
        assert!(g.cell_volume() > 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_grid(3, 64.0, 1024, 16).is_err());
        assert!(make_grid(0, 64.0, 1024, 16).is_err());
        assert!(make_grid(1, 64.0, 1000, 16).is_err());
        assert!(make_grid(1, 64.0, 8, 16).is_err());
        assert!(make_grid(1, 64.0, 64, 2).is_err());
        assert!(make_grid(1, 64.0, 64, 6).is_err());
        assert!(make_grid(1, 0.0, 64, 8).is_err());
        assert!(make_grid(1, -1.0, 64, 8).is_err());
    }

    #[test]
    fn frequency_tables() {
        let g = make_grid(1, 8.0, 16, 4).unwrap();
        let k: Vec<f64> = g.xi().iter().map(|x| x * 8.0 / PI).collect();
        let expected: Vec<f64> = (0..8).chain(-8..0).map(|k| k as f64).collect();
        assert_eq!(k, expected);
        assert_eq!(g.torus_modes(), &[0.0, 1.0, -2.0, -1.0]);
    }

    #[test]
    fn neg_index_is_involution() {
        let g = make_grid(2, 4.0, 16, 4).unwrap();
        for (k, &nk) in g.neg_index().iter().enumerate() {
            assert_eq!(g.neg_index()[nk], k);
            assert_eq!(g.wavenumber_sq()[k], g.wavenumber_sq()[nk]);
        }
    }

    #[test]
    fn min_image_wraps_into_box() {
        let g = make_grid(1, 10.0, 16, 4).unwrap();
        assert!((g.min_image(15.0) + 5.0).abs() < 1e-12);
        assert!((g.min_image(-15.0) - 5.0).abs() < 1e-12);
        assert!((g.min_image(3.0) - 3.0).abs() < 1e-12);
        assert!((g.min_image(-10.0) + 10.0).abs() < 1e-12);
    }

    #[test]
    fn state_rejects_nan_and_bad_shape() {
        let g = make_grid(1, 1.0, 16, 4).unwrap();
        let mut u = vec![0.0; g.len()];
        u[3] = f64::NAN;
        assert!(matches!(
            FieldState::new(&g, u, vec![0.0; g.len()], 0.0),
            Err(Error::NonFinite("u"))
        ));
        assert!(matches!(
            FieldState::new(&g, vec![0.0; 3], vec![0.0; g.len()], 0.0),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}
