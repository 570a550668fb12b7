//! Exact free Klein–Gordon flow, applied mode by mode.
//!
//! On each joint Fourier mode with `ω = √(1 + |ξ|² + m²)`:
//!
//! ```text
//! û(τ) =       cos(ωτ) û₀ + sin(ωτ)/ω v̂₀
//! v̂(τ) = −ω sin(ωτ) û₀ +     cos(ωτ) v̂₀
//! ```

use crate::error::Result;
use crate::grid::{FieldState, SpectralPair, TorusWaveguideGrid};

/// Per-mode frequencies `ω(ξ, m)`, in FFT order.
#[derive(Clone, Debug)]
pub struct DispersionTable {
    pub omega: Vec<f64>,
}

pub fn dispersion(grid: &TorusWaveguideGrid) -> DispersionTable {
    DispersionTable {
        omega: grid.wavenumber_sq().iter().map(|k2| (1.0 + k2).sqrt()).collect(),
    }
}

/// The rotation coefficients of `e^{τH}` for a fixed `τ`.
#[derive(Clone, Debug)]
pub struct LinearFlow {
    tau: f64,
    cos: Vec<f64>,
    sin_over_omega: Vec<f64>,
    omega_sin: Vec<f64>,
}

impl LinearFlow {
    pub fn new(table: &DispersionTable, tau: f64) -> Self {
        let n = table.omega.len();
        let mut cos = Vec::with_capacity(n);
        let mut sin_over_omega = Vec::with_capacity(n);
        let mut omega_sin = Vec::with_capacity(n);
        for &w in &table.omega {
            let (s, c) = (w * tau).sin_cos();
            cos.push(c);
            // ω ≥ 1, so the quotient is regular.
            sin_over_omega.push(s / w);
            omega_sin.push(w * s);
        }
        Self {
            tau,
            cos,
            sin_over_omega,
            omega_sin,
        }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Rotates spectral coefficients in place.
    pub fn apply_spectral(&self, spec: &mut SpectralPair) {
        for k in 0..spec.u.len() {
            let (u, v) = (spec.u[k], spec.v[k]);
            spec.u[k] = u * self.cos[k] + v * self.sin_over_omega[k];
            spec.v[k] = v * self.cos[k] - u * self.omega_sin[k];
        }
    }

    /// Rotated copy of the coefficients.
    pub fn rotated(&self, spec: &SpectralPair) -> SpectralPair {
        let mut out = spec.clone();
        self.apply_spectral(&mut out);
        out
    }
}

/// Free flow on a fixed grid. Holds the dispersion table and the grid's FFT plans.
#[derive(Clone, Debug)]
pub struct Propagator {
    grid: TorusWaveguideGrid,
    table: DispersionTable,
}

impl Propagator {
    pub fn new(grid: &TorusWaveguideGrid) -> Self {
        Self {
            grid: grid.clone(),
            table: dispersion(grid),
        }
    }

    pub fn grid(&self) -> &TorusWaveguideGrid {
        &self.grid
    }

    pub fn table(&self) -> &DispersionTable {
        &self.table
    }

    /// Cached multipliers for repeated steps of length `tau`.
    pub fn flow(&self, tau: f64) -> LinearFlow {
        LinearFlow::new(&self.table, tau)
    }

    /// Advances `state` by `tau` under the free flow.
    pub fn apply_linear(&self, state: &FieldState, tau: f64) -> Result<FieldState> {
        self.apply_flow(state, &self.flow(tau))
    }

    /// `e^{-τH}`; the free group is inverted by reversing time.
    pub fn apply_inverse_linear(&self, state: &FieldState, tau: f64) -> Result<FieldState> {
        self.apply_linear(state, -tau)
    }

    pub fn apply_flow(&self, state: &FieldState, flow: &LinearFlow) -> Result<FieldState> {
        self.grid.check_state(state)?;
        state.check_finite()?;
        let mut spec = self.grid.forward_state(state)?;
        flow.apply_spectral(&mut spec);
        let (u, v) = self.grid.inverse_pair(&spec)?;
        Ok(FieldState {
            u,
            v,
            t: state.t + flow.tau,
        })
    }

    /// Rotates spectral coefficients by `tau` without leaving spectral space.
    pub fn apply_spectral(&self, spec: &SpectralPair, tau: f64) -> SpectralPair {
        self.flow(tau).rotated(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{energy_norm, make_grid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_state(g: &TorusWaveguideGrid, seed: u64) -> FieldState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FieldState {
            u: (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect(),
            v: (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect(),
            t: 0.0,
        }
    }

    fn rel_diff(a: &FieldState, b: &FieldState) -> f64 {
        let num: f64 =
            a.u.iter()
                .zip(&b.u)
                .chain(a.v.iter().zip(&b.v))
                .map(|(x, y)| (x - y).powi(2))
                .sum();
        let den: f64 = b.u.iter().chain(&b.v).map(|x| x * x).sum();
        (num / den).sqrt()
    }

    #[test]
    fn dispersion_values() {
        let g = make_grid(2, PI, 16, 4).unwrap();
        let t = dispersion(&g);
        assert!(t.omega.iter().all(|&w| w >= 1.0));
        assert_eq!(t.omega[0], 1.0);
        // L = π makes ξ integral: index (3, 4) on the euclidean axes, m = 0.
        let k = (3 * 16 + 4) * 4;
        assert!((t.omega[k] - 26f64.sqrt()).abs() < 1e-14);
        // ξ = 0, m = 2 sits at torus index 2 (FFT order gives -2 there, same ω).
        assert!((t.omega[2] - 5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn zero_time_is_identity() {
        let g = make_grid(1, 5.0, 32, 4).unwrap();
        let p = Propagator::new(&g);
        let s = random_state(&g, 1);
        let out = p.apply_linear(&s, 0.0).unwrap();
        assert!(rel_diff(&out, &s) < 1e-14);
        let back = p.apply_inverse_linear(&s, 0.0).unwrap();
        assert!(rel_diff(&back, &s) < 1e-14);
    }

    #[test]
    fn single_mode_velocity_datum() {
        let g = make_grid(1, 4.0, 32, 8).unwrap();
        let p = Propagator::new(&g);
        let xi0 = 3.0 * PI / 4.0;
        let m0 = 2.0;
        let omega = (1.0 + xi0 * xi0 + m0 * m0).sqrt();
        let mode = g.sample(|x, y| (xi0 * x[0] + m0 * y).cos());
        let s = FieldState {
            u: vec![0.0; g.len()],
            v: mode.clone(),
            t: 0.0,
        };
        let tau = 0.83;
        let out = p.apply_linear(&s, tau).unwrap();
        for (got, m) in out.u.iter().zip(&mode) {
            assert!((got - (omega * tau).sin() / omega * m).abs() < 1e-13);
        }
        for (got, m) in out.v.iter().zip(&mode) {
            assert!((got - (omega * tau).cos() * m).abs() < 1e-13);
        }
        assert!((out.t - tau).abs() < 1e-15);
    }

    #[test]
    fn preserves_energy_norm() {
        let g = make_grid(2, 3.0, 16, 4).unwrap();
        let p = Propagator::new(&g);
        let s = random_state(&g, 9);
        let before = energy_norm(&g, &s).unwrap();
        let after = energy_norm(&g, &p.apply_linear(&s, 2.3).unwrap()).unwrap();
        assert!((before - after).abs() <= 1e-12 * before);
    }

    #[test]
    fn inverse_round_trip() {
        let g = make_grid(1, 6.0, 64, 8).unwrap();
        let p = Propagator::new(&g);
        for seed in 0..50 {
            let s = random_state(&g, seed);
            let back = p.apply_inverse_linear(&p.apply_linear(&s, 1.7).unwrap(), 1.7).unwrap();
            assert!(rel_diff(&back, &s) <= 1e-12, "seed {seed}");
        }
    }

    #[test]
    fn single_mode_round_trip() {
        let g = make_grid(1, 2.0, 16, 4).unwrap();
        let p = Propagator::new(&g);
        let u = g.sample(|x, y| (PI * x[0]).cos() * y.cos());
        let s = FieldState::new(&g, u, vec![0.0; g.len()], 0.0).unwrap();
        let back = p
            .apply_inverse_linear(&p.apply_linear(&s, 12.5).unwrap(), 12.5)
            .unwrap();
        assert!(rel_diff(&back, &s) < 1e-13);
    }

    #[test]
    fn group_law() {
        let g = make_grid(2, 4.0, 16, 8).unwrap();
        let p = Propagator::new(&g);
        let s = random_state(&g, 4);
        let a = 0.9;
        let b = -2.35;
        let one = p.apply_linear(&s, a + b).unwrap();
        let two = p.apply_linear(&p.apply_linear(&s, a).unwrap(), b).unwrap();
        assert!(rel_diff(&two, &one) <= 1e-11);
    }

    #[test]
    fn single_mode_stays_single() {
        let g = make_grid(1, 8.0, 32, 8).unwrap();
        let p = Propagator::new(&g);
        let xi0 = 5.0 * PI / 8.0;
        let u = g.sample(|x, y| (xi0 * x[0] - 3.0 * y).cos());
        let s = FieldState::new(&g, u, vec![0.0; g.len()], 0.0).unwrap();
        let out = p.apply_linear(&s, 3.1).unwrap();
        let spec = g.forward_state(&out).unwrap();
        let support: Vec<usize> = (0..g.len())
            .filter(|&k| spec.u[k].norm() > 1e-13 || spec.v[k].norm() > 1e-13)
            .collect();
        // (+5, -3) and (-5, +3).
        let k1 = 5 * 8 + 5;
        let k2 = (32 - 5) * 8 + 3;
        assert_eq!(support, vec![k1, k2]);
    }

    #[test]
    fn rejects_non_finite_input() {
        let g = make_grid(1, 2.0, 16, 4).unwrap();
        let p = Propagator::new(&g);
        let mut s = FieldState::zeros(&g);
        s.v[2] = f64::INFINITY;
        assert!(p.apply_linear(&s, 1.0).is_err());
    }
}
