//! Monitored functionals on snapshots, and their accumulation along a run.
//!
//! The energy is
//! `E = ½(‖∂ₜu‖² + ‖∇u‖² + ‖u‖²) + ‖u‖^{α+2}_{L^{α+2}}/(α+2)`
//! with the gradient taken spectrally. Space-time accumulators integrate
//! their instantaneous increments with the trapezoid rule in time.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::grid::{abs_pow, lp_norm, spectral_energy_norm, FieldState, SpectralPair, TorusWaveguideGrid};
use crate::propagator::{DispersionTable, LinearFlow};
use crate::stepper::Model;

/// Time-indexed record of every monitored functional. All vectors share the
/// length of `times`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DiagnosticsSeries {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub h_norm: Vec<f64>,
    pub l2: Vec<f64>,
    pub linf: Vec<f64>,
    /// `‖u‖_{L^{α+2}}`.
    pub lp_pot: Vec<f64>,
    /// Instantaneous `‖u‖^{α+1}_{L^{2(α+1)}}`.
    pub strichartz_increment: Vec<f64>,
    pub strichartz_accum: Vec<f64>,
    pub morawetz_increment: Vec<f64>,
    pub morawetz_accum: Vec<f64>,
    /// Energy outside the expanding ball; NaN when no probe is set or the
    /// ball has reached the box boundary.
    pub exterior_energy: Vec<f64>,
    /// Localized `∫|u|^p` over the local probe window; NaN without a probe.
    pub local_mass: Vec<f64>,
    /// `‖V(tᵢ) − V(tᵢ₋₁)‖_𝓗` with `V(t) = e^{−tH}(u, ∂ₜu)`; zero on the first row.
    pub cauchy_residual: Vec<f64>,
}

impl DiagnosticsSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Linear interpolation of an accumulator at time `t` inside the sampled range.
    pub fn interpolate(values: &[f64], times: &[f64], t: f64) -> Option<f64> {
        if times.is_empty() || t < times[0] - 1e-12 || t > times[times.len() - 1] + 1e-12 {
            return None;
        }
        let i = times.partition_point(|&s| s < t);
        if i == 0 {
            return Some(values[0]);
        }
        if i == times.len() {
            return Some(values[i - 1]);
        }
        let (t0, t1) = (times[i - 1], times[i]);
        let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 1.0 };
        Some(values[i - 1] + w * (values[i] - values[i - 1]))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExteriorProbe {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalProbe {
    pub center: Vec<f64>,
    pub radius: f64,
    pub p: f64,
}

/// Optional probes evaluated at every sample.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Probes {
    pub exterior: Option<ExteriorProbe>,
    pub local: Option<LocalProbe>,
    /// Exponent for the `α`-dependent columns when the model is linear.
    pub norm_alpha: Option<f64>,
}

/// Energy outside `B(x₀, r + t) × 𝕋`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExteriorEnergy {
    pub value: f64,
    /// `r + t ≥ L`: the ball has met its periodic images.
    pub horizon_exceeded: bool,
}

fn potential_sum(grid: &TorusWaveguideGrid, u: &[f64], alpha: f64) -> f64 {
    let p = alpha + 2.0;
    grid.cell_volume() * u.iter().map(|x| abs_pow(*x, p)).sum::<f64>() / p
}

fn quadratic_energy(grid: &TorusWaveguideGrid, spec: &SpectralPair) -> f64 {
    0.5 * spectral_energy_norm(grid, spec).powi(2)
}

/// `E(u, ∂ₜu)` for the defocusing equation with exponent `alpha`.
pub fn energy(grid: &TorusWaveguideGrid, state: &FieldState, alpha: f64) -> Result<f64> {
    let spec = grid.forward_state(state)?;
    Ok(quadratic_energy(grid, &spec) + potential_sum(grid, &state.u, alpha))
}

/// Free energy `½‖(u, ∂ₜu)‖²_𝓗`, conserved by the linear flow.
pub fn linear_energy(grid: &TorusWaveguideGrid, state: &FieldState) -> Result<f64> {
    Ok(quadratic_energy(grid, &grid.forward_state(state)?))
}

/// Energy functional of a model: linear runs conserve the quadratic part only.
pub fn model_energy(grid: &TorusWaveguideGrid, state: &FieldState, model: Model) -> Result<f64> {
    match model {
        Model::Linear => linear_energy(grid, state),
        Model::Defocusing { alpha } => energy(grid, state, alpha),
    }
}

/// `‖u(t)‖^{α+1}_{L^{2(α+1)}}`, the integrand of the global space-time bound.
pub fn strichartz_increment(grid: &TorusWaveguideGrid, state: &FieldState, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(invalid("alpha", "must be positive"));
    }
    Ok(lp_norm(grid, &state.u, 2.0 * (alpha + 1.0))?.powf(alpha + 1.0))
}

/// `∫ min{|u|², |u|^{α+2}} / (⟨t⟩ log(|t|+2) log(max{|x₁|−t, 2}))` at time `t`.
pub fn morawetz_increment(grid: &TorusWaveguideGrid, state: &FieldState, t: f64, alpha: f64) -> Result<f64> {
    grid.check_state(state)?;
    let t_abs = t.abs();
    let time_weight = (1.0 + t * t).sqrt() * (t_abs + 2.0).ln();
    let ny = grid.ny();
    let mut total = 0.0;
    for e in 0..grid.euclid_len() {
        let x1 = grid.euclid_point(e)[0];
        let w = (x1.abs() - t_abs).max(2.0).ln();
        let mut cell = 0.0;
        for &u in &state.u[e * ny..(e + 1) * ny] {
            let a = u.abs();
            cell += (a * a).min(abs_pow(a, alpha + 2.0));
        }
        total += cell / w;
    }
    Ok(grid.cell_volume() * total / time_weight)
}

fn exterior_from_parts(
    grid: &TorusWaveguideGrid,
    state: &FieldState,
    grad: &[Vec<f64>],
    center: &[f64],
    r: f64,
    t: f64,
    alpha: Option<f64>,
) -> ExteriorEnergy {
    let radius = r + t;
    let ny = grid.ny();
    let mut total = 0.0;
    for e in 0..grid.euclid_len() {
        if grid.periodic_distance(e, center) <= radius {
            continue;
        }
        for k in e * ny..(e + 1) * ny {
            let mut dens = state.v[k] * state.v[k] + state.u[k] * state.u[k];
            for g in grad {
                dens += g[k] * g[k];
            }
            dens *= 0.5;
            if let Some(a) = alpha {
                dens += abs_pow(state.u[k], a + 2.0) / (a + 2.0);
            }
            total += dens;
        }
    }
    ExteriorEnergy {
        value: grid.cell_volume() * total,
        horizon_exceeded: radius >= grid.half_width(),
    }
}

/// Energy on `B(x₀, r + t)^c × 𝕋`, with the ball taken in the periodized metric.
pub fn exterior_energy(
    grid: &TorusWaveguideGrid,
    state: &FieldState,
    center: &[f64],
    r: f64,
    t: f64,
    alpha: Option<f64>,
) -> Result<ExteriorEnergy> {
    if !(r > 0.0) {
        return Err(invalid("r", "ball radius must be positive"));
    }
    grid.check_state(state)?;
    let grad = grid.gradient(&grid.forward_transform(&state.u)?)?;
    Ok(exterior_from_parts(grid, state, &grad, center, r, t, alpha))
}

/// `∫_𝕋 ∫_{|x−x_c|≤R} |u|^p`.
pub fn local_potential_mass(
    grid: &TorusWaveguideGrid,
    state: &FieldState,
    center: &[f64],
    radius: f64,
    p: f64,
) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(invalid("R", "window radius must be positive"));
    }
    grid.check_state(state)?;
    let ny = grid.ny();
    let mut total = 0.0;
    for e in 0..grid.euclid_len() {
        if grid.periodic_distance(e, center) > radius {
            continue;
        }
        total += state.u[e * ny..(e + 1) * ny]
            .iter()
            .map(|x| abs_pow(*x, p))
            .sum::<f64>();
    }
    Ok(grid.cell_volume() * total)
}

/// Least-squares slope of `log y` against `log t` over samples with
/// `t ∈ [t0, t1]`.
pub fn decay_fit(samples: &[(f64, f64)], window: (f64, f64)) -> Result<f64> {
    let (t0, t1) = window;
    if !(t0 >= 2.0) || !(t1 > t0) {
        return Err(invalid("window", format!("need 2 <= t0 < t1, got [{t0}, {t1}]")));
    }
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(t, _)| *t >= t0 && *t <= t1)
        .map(|&(t, y)| (t.ln(), y.ln()))
        .collect();
    if pts.len() < 5 {
        return Err(Error::TooFewSamples {
            needed: 5,
            got: pts.len(),
        });
    }
    if pts.iter().any(|(_, y)| !y.is_finite()) {
        return Err(invalid("samples", "values must be positive"));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// Builds a [`DiagnosticsSeries`] sample by sample.
pub struct Recorder<'a> {
    grid: &'a TorusWaveguideGrid,
    table: &'a DispersionTable,
    model: Model,
    probes: Probes,
    series: DiagnosticsSeries,
    prev_interaction: Option<SpectralPair>,
}

impl<'a> Recorder<'a> {
    pub fn new(grid: &'a TorusWaveguideGrid, table: &'a DispersionTable, model: Model, probes: Probes) -> Self {
        Self {
            grid,
            table,
            model,
            probes,
            series: DiagnosticsSeries::default(),
            prev_interaction: None,
        }
    }

    fn norm_alpha(&self) -> Option<f64> {
        self.model.alpha().or(self.probes.norm_alpha)
    }

    pub fn series(&self) -> &DiagnosticsSeries {
        &self.series
    }

    pub fn finish(self) -> DiagnosticsSeries {
        self.series
    }

    /// Records one sample; `spec` must be the coefficients of `state`.
    pub fn record(&mut self, spec: &SpectralPair, state: &FieldState) -> Result<()> {
        let interaction = LinearFlow::new(self.table, -state.t).rotated(spec);
        self.record_with_interaction(spec, state, &interaction)
    }

    /// As [`Recorder::record`], with `V(t)` supplied by the caller.
    pub fn record_with_interaction(
        &mut self,
        spec: &SpectralPair,
        state: &FieldState,
        interaction: &SpectralPair,
    ) -> Result<()> {
        let grid = self.grid;
        let t = state.t;
        if let Some(&last) = self.series.times.last() {
            if !(t > last) {
                return Err(invalid("t", format!("sample times must increase ({t} after {last})")));
            }
        }
        let alpha = self.norm_alpha();
        let s = &mut self.series;
        let quad = quadratic_energy(grid, spec);
        let model_alpha = self.model.alpha();
        let e = quad + model_alpha.map_or(0.0, |a| potential_sum(grid, &state.u, a));
        s.times.push(t);
        s.energy.push(e);
        s.h_norm.push((2.0 * quad).sqrt());
        s.l2.push(lp_norm(grid, &state.u, 2.0)?);
        s.linf.push(lp_norm(grid, &state.u, f64::INFINITY)?);

        let (lp, sinc, minc) = match alpha {
            Some(a) => (
                lp_norm(grid, &state.u, a + 2.0)?,
                strichartz_increment(grid, state, a)?,
                morawetz_increment(grid, state, t, a)?,
            ),
            None => (f64::NAN, 0.0, 0.0),
        };
        s.lp_pot.push(lp);
        let n = s.times.len();
        let trapezoid = |acc: &[f64], inc: &[f64], new_inc: f64| -> f64 {
            if n == 1 {
                0.0
            } else {
                acc[n - 2] + 0.5 * (s.times[n - 1] - s.times[n - 2]) * (inc[n - 2] + new_inc)
            }
        };
        let sacc = trapezoid(&s.strichartz_accum, &s.strichartz_increment, sinc);
        let macc = trapezoid(&s.morawetz_accum, &s.morawetz_increment, minc);
        s.strichartz_increment.push(sinc);
        s.strichartz_accum.push(sacc);
        s.morawetz_increment.push(minc);
        s.morawetz_accum.push(macc);

        let ext = match &self.probes.exterior {
            Some(probe) => {
                let grad = grid.gradient(&spec.u)?;
                let ext = exterior_from_parts(grid, state, &grad, &probe.center, probe.radius, t, model_alpha);
                if ext.horizon_exceeded {
                    f64::NAN
                } else {
                    ext.value
                }
            }
            None => f64::NAN,
        };
        s.exterior_energy.push(ext);

        let local = match &self.probes.local {
            Some(p) => local_potential_mass(grid, state, &p.center, p.radius, p.p)?,
            None => f64::NAN,
        };
        s.local_mass.push(local);

        let residual = match &self.prev_interaction {
            Some(prev) => {
                let diff = SpectralPair {
                    u: interaction.u.iter().zip(&prev.u).map(|(a, b)| a - b).collect(),
                    v: interaction.v.iter().zip(&prev.v).map(|(a, b)| a - b).collect(),
                };
                spectral_energy_norm(grid, &diff)
            }
            None => 0.0,
        };
        s.cauchy_residual.push(residual);
        self.prev_interaction = Some(interaction.clone());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use std::f64::consts::{LN_2, PI};

    #[test]
    fn zero_state_functionals_vanish() {
        let g = make_grid(1, 4.0, 32, 4).unwrap();
        let z = FieldState::zeros(&g);
        assert_eq!(energy(&g, &z, 3.0).unwrap(), 0.0);
        assert_eq!(strichartz_increment(&g, &z, 3.0).unwrap(), 0.0);
        assert_eq!(morawetz_increment(&g, &z, 1.0, 3.0).unwrap(), 0.0);
        assert_eq!(local_potential_mass(&g, &z, &[0.0], 1.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn constant_velocity_energy() {
        let g = make_grid(2, 3.0, 16, 4).unwrap();
        let c = 0.7;
        let s = FieldState {
            u: vec![0.0; g.len()],
            v: vec![c; g.len()],
            t: 0.0,
        };
        let vol = 36.0 * 2.0 * PI;
        let e = energy(&g, &s, 5.0).unwrap();
        assert!((e - 0.5 * c * c * vol).abs() < 1e-12 * e);
    }

    #[test]
    fn cos_y_energy_against_closed_form() {
        let l = 5.0;
        let g = make_grid(1, l, 32, 16).unwrap();
        let s = FieldState {
            u: g.sample(|_, y| y.cos()),
            v: vec![0.0; g.len()],
            t: 0.0,
        };
        // ∫cos² = ∫sin² = 2L·π, ∫cos⁴ = 2L·3π/4.
        let l2 = 2.0 * l * PI;
        let l4 = 2.0 * l * 0.75 * PI;
        let expected = 0.5 * (l2 + l2 + 0.5 * l4);
        let e = energy(&g, &s, 2.0).unwrap();
        assert!((e - expected).abs() < 1e-12 * expected, "{e} vs {expected}");
    }

    #[test]
    fn strichartz_increment_of_unit_field() {
        let g = make_grid(1, 2.0, 16, 4).unwrap();
        let s = FieldState {
            u: vec![1.0; g.len()],
            v: vec![0.0; g.len()],
            t: 0.0,
        };
        let vol = g.volume();
        let got = strichartz_increment(&g, &s, 3.0).unwrap();
        assert!((got - vol.sqrt()).abs() < 1e-12 * got);
    }

    #[test]
    fn morawetz_single_cell() {
        let g = make_grid(1, 4.0, 16, 4).unwrap();
        let mut s = FieldState::zeros(&g);
        // x₁ = 0 is euclidean index nx/2.
        s.u[8 * 4] = 2.0;
        let got = morawetz_increment(&g, &s, 0.0, 2.0).unwrap();
        let expected = 4.0 / (LN_2 * LN_2) * g.cell_volume();
        assert!((got - expected).abs() < 1e-13 * expected);
    }

    #[test]
    fn morawetz_unit_field_is_weight_integral() {
        let g = make_grid(1, 8.0, 32, 4).unwrap();
        let s = FieldState {
            u: vec![-1.0; g.len()],
            v: vec![0.0; g.len()],
            t: 0.0,
        };
        let t = 1.5;
        let got = morawetz_increment(&g, &s, t, 4.0).unwrap();
        let tw = (1.0 + t * t).sqrt() * (t + 2.0).ln();
        let mut expected = 0.0;
        for i in 0..32 {
            let x = g.x_coord(i);
            expected += 4.0 * g.cell_volume() / ((x.abs() - t).max(2.0).ln() * tw);
        }
        assert!((got - expected).abs() < 1e-13 * expected);
    }

    #[test]
    fn exterior_energy_of_global_field_is_flagged() {
        let g = make_grid(1, 4.0, 32, 4).unwrap();
        let s = FieldState {
            u: vec![1.0; g.len()],
            v: vec![0.0; g.len()],
            t: 0.0,
        };
        let ext = exterior_energy(&g, &s, &[0.0], 3.0, 1.5, None).unwrap();
        assert!(ext.horizon_exceeded);
        assert!(exterior_energy(&g, &s, &[0.0], 0.0, 1.0, None).is_err());
    }

    #[test]
    fn exterior_energy_of_contained_bump() {
        let g = make_grid(1, 64.0, 1024, 4).unwrap();
        let s = FieldState {
            u: g.sample(|x, y| (-x[0] * x[0]).exp() * (1.0 + 0.5 * y.cos())),
            v: vec![0.0; g.len()],
            t: 0.0,
        };
        let e = energy(&g, &s, 5.0).unwrap();
        let ext = exterior_energy(&g, &s, &[0.0], 5.0, 0.0, Some(5.0)).unwrap();
        assert!(!ext.horizon_exceeded);
        assert!(ext.value <= 1e-10 * e, "{}", ext.value / e);
    }

    #[test]
    fn local_mass_full_window_is_global() {
        let g = make_grid(2, 3.0, 16, 4).unwrap();
        let u = g.sample(|x, y| (x[0] - 0.3 * x[1]).sin() + y.cos());
        let s = FieldState {
            u: u.clone(),
            v: vec![0.0; g.len()],
            t: 0.0,
        };
        let got = local_potential_mass(&g, &s, &[0.0, 0.0], 12.0, 3.0).unwrap();
        let global = lp_norm(&g, &u, 3.0).unwrap().powi(3);
        assert!((got - global).abs() < 1e-12 * global);
    }

    #[test]
    fn decay_fit_cases() {
        let power: Vec<(f64, f64)> = (0..30)
            .map(|i| 2.0 + i as f64)
            .map(|t| (t, 3.0 * t.powf(-0.5)))
            .collect();
        assert!((decay_fit(&power, (5.0, 25.0)).unwrap() + 0.5).abs() < 1e-12);
        let flat: Vec<(f64, f64)> = power.iter().map(|&(t, _)| (t, 0.25)).collect();
        assert!(decay_fit(&flat, (5.0, 25.0)).unwrap().abs() < 1e-12);
        assert!(matches!(
            decay_fit(&power[..4], (2.0, 25.0)),
            Err(Error::TooFewSamples { .. })
        ));
        assert!(decay_fit(&power, (1.0, 25.0)).is_err());
    }

    #[test]
    fn interpolate_accumulator() {
        let t = [0.0, 1.0, 2.0];
        let v = [0.0, 1.0, 4.0];
        assert_eq!(DiagnosticsSeries::interpolate(&v, &t, 1.5), Some(2.5));
        assert_eq!(DiagnosticsSeries::interpolate(&v, &t, 2.0), Some(4.0));
        assert_eq!(DiagnosticsSeries::interpolate(&v, &t, 3.0), None);
    }
}
