//! Scattering data from the interaction-picture variable `V(t) = e^{−tH}(u, ∂ₜu)`.
//!
//! By Duhamel, `V(t) − V(τ) = −∫_τ^t e^{−sH}(0, |u|^α u) ds`, so the Cauchy
//! residual of `V` over a window is controlled by `∫‖u‖^{α+1}_{L^{2(α+1)}}`.

use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::{strichartz_increment, DiagnosticsSeries};
use crate::error::{invalid, Result};
use crate::grid::{spectral_energy_norm, FieldState, SpectralPair};
use crate::propagator::Propagator;

/// Relative slack on the windowwise Cauchy inequality, absorbing rounding.
pub const CAUCHY_SLACK: f64 = 1e-9;

/// `V(t)` as a state stamped at time 0.
pub fn backpropagate(prop: &Propagator, state: &FieldState) -> Result<FieldState> {
    let mut out = prop.apply_inverse_linear(state, state.t)?;
    out.t = 0.0;
    Ok(out)
}

fn interaction_spectral(prop: &Propagator, state: &FieldState) -> Result<SpectralPair> {
    let grid = prop.grid();
    grid.check_state(state)?;
    state.check_finite()?;
    Ok(prop.apply_spectral(&grid.forward_state(state)?, -state.t))
}

fn distance(prop: &Propagator, a: &SpectralPair, b: &SpectralPair) -> f64 {
    let diff = SpectralPair {
        u: a.u.iter().zip(&b.u).map(|(x, y)| x - y).collect(),
        v: a.v.iter().zip(&b.v).map(|(x, y)| x - y).collect(),
    };
    spectral_energy_norm(prop.grid(), &diff)
}

fn check_times(trajectory: &[FieldState]) -> Result<Vec<f64>> {
    if trajectory.is_empty() {
        return Err(invalid("trajectory", "needs at least one snapshot"));
    }
    let times: Vec<f64> = trajectory.iter().map(|s| s.t).collect();
    if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(invalid(
            "trajectory",
            format!("sample times must increase, found {} then {}", w[0], w[1]),
        ));
    }
    Ok(times)
}

/// Both sides of the windowwise Cauchy inequality, plus the scattering candidate.
#[derive(Clone, Debug, Serialize)]
pub struct ScatteringReport {
    pub alpha: f64,
    pub sample_times: Vec<f64>,
    /// `‖V(tᵢ₊₁) − V(tᵢ)‖_𝓗`.
    pub cauchy_residuals: Vec<f64>,
    /// `∫_{tᵢ}^{tᵢ₊₁} ‖u‖^{α+1}_{L^{2(α+1)}} dt`.
    pub strichartz_tail: Vec<f64>,
    /// Ratio residual/tail on the first window; NaN when the first tail vanishes.
    pub c_fit: f64,
    /// `residual ≤ C_fit · tail` per window.
    pub window_holds: Vec<bool>,
    /// `‖V(tᵢ)‖_𝓗`.
    pub interaction_norms: Vec<f64>,
    /// `‖(u, ∂ₜu)(tᵢ) − e^{tᵢH}(f⁺, g⁺)‖_𝓗`.
    pub residual_series: Vec<f64>,
    #[serde(skip)]
    pub final_state: FieldState,
}

impl ScatteringReport {
    pub fn all_windows_hold(&self) -> bool {
        self.window_holds.iter().all(|&h| h)
    }
}

/// `(f⁺, g⁺) = V(T)` with `T` the last sample, and the residual at every sample.
#[derive(Clone, Debug)]
pub struct ScatteringState {
    pub sample_times: Vec<f64>,
    pub final_state: FieldState,
    pub residual_series: Vec<f64>,
}

/// `(f⁺, g⁺) := V(T)`; the residual `‖(u, ∂ₜu)(t) − e^{tH}(f⁺, g⁺)‖` equals
/// `‖V(t) − V(T)‖` because the free flow is unitary.
pub fn extract_scattering_state(prop: &Propagator, trajectory: &[FieldState]) -> Result<ScatteringState> {
    let sample_times = check_times(trajectory)?;
    let vs = interaction_states(prop, trajectory)?;
    let last = vs.last().expect("non-empty trajectory");
    let residual_series = vs.iter().map(|v| distance(prop, v, last)).collect();
    let (u, v) = prop.grid().inverse_pair(last)?;
    Ok(ScatteringState {
        sample_times,
        final_state: FieldState { u, v, t: 0.0 },
        residual_series,
    })
}

fn interaction_states(prop: &Propagator, trajectory: &[FieldState]) -> Result<Vec<SpectralPair>> {
    trajectory.par_iter().map(|s| interaction_spectral(prop, s)).collect()
}

/// Space-time tail over `[a, b]`, read from the recorded accumulator when it
/// covers the window.
fn tail_from_series(series: &DiagnosticsSeries, a: f64, b: f64) -> Option<f64> {
    let lo = DiagnosticsSeries::interpolate(&series.strichartz_accum, &series.times, a)?;
    let hi = DiagnosticsSeries::interpolate(&series.strichartz_accum, &series.times, b)?;
    Some((hi - lo).max(0.0))
}

/// Checks `‖V(tᵢ₊₁) − V(tᵢ)‖ ≤ C ∫‖u‖^{α+1}_{L^{2(α+1)}}` on consecutive
/// snapshots. `series` supplies the time integral at the recording cadence;
/// without it the integral is a trapezoid over the snapshots themselves.
pub fn cauchy_check(
    prop: &Propagator,
    trajectory: &[FieldState],
    series: Option<&DiagnosticsSeries>,
    alpha: f64,
) -> Result<ScatteringReport> {
    let vs = interaction_states(prop, trajectory)?;
    cauchy_check_with_interaction(prop, trajectory, &vs, series, alpha)
}

/// As [`cauchy_check`], with `V(tᵢ)` supplied in spectral form (for instance
/// as carried by [`crate::stepper::Stepper::evolve`]) instead of being
/// recomputed from the snapshots.
pub fn cauchy_check_with_interaction(
    prop: &Propagator,
    trajectory: &[FieldState],
    vs: &[SpectralPair],
    series: Option<&DiagnosticsSeries>,
    alpha: f64,
) -> Result<ScatteringReport> {
    if !(alpha > 0.0) {
        return Err(invalid("alpha", "must be positive"));
    }
    let sample_times = check_times(trajectory)?;
    let grid = prop.grid();
    if vs.len() != trajectory.len() {
        return Err(crate::error::Error::ShapeMismatch {
            expected: trajectory.len(),
            got: vs.len(),
        });
    }
    for v in vs {
        grid.check_len(v.u.len())?;
        grid.check_len(v.v.len())?;
    }
    let increments: Vec<f64> = trajectory
        .par_iter()
        .map(|s| strichartz_increment(grid, s, alpha))
        .collect::<Result<_>>()?;

    let n = trajectory.len();
    let cauchy_residuals: Vec<f64> = (0..n.saturating_sub(1))
        .into_par_iter()
        .map(|i| distance(prop, &vs[i + 1], &vs[i]))
        .collect();
    let strichartz_tail: Vec<f64> = (0..n.saturating_sub(1))
        .map(|i| {
            let (a, b) = (sample_times[i], sample_times[i + 1]);
            series
                .and_then(|s| tail_from_series(s, a, b))
                .unwrap_or_else(|| 0.5 * (b - a) * (increments[i] + increments[i + 1]))
        })
        .collect();

    let c_fit = match (cauchy_residuals.first(), strichartz_tail.first()) {
        (Some(&r), Some(&t)) if t > 0.0 => r / t,
        _ => f64::NAN,
    };
    let window_holds = cauchy_residuals
        .iter()
        .zip(&strichartz_tail)
        .map(|(&r, &t)| {
            if c_fit.is_nan() {
                r == 0.0
            } else {
                r <= c_fit * t * (1.0 + CAUCHY_SLACK) + f64::MIN_POSITIVE
            }
        })
        .collect();

    let last = vs.last().expect("non-empty trajectory");
    let residual_series = vs.iter().map(|v| distance(prop, v, last)).collect();
    let interaction_norms = vs.iter().map(|v| spectral_energy_norm(grid, v)).collect();
    let (u, v) = grid.inverse_pair(last)?;
    Ok(ScatteringReport {
        alpha,
        sample_times,
        cauchy_residuals,
        strichartz_tail,
        c_fit,
        window_holds,
        interaction_norms,
        residual_series,
        final_state: FieldState { u, v, t: 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{energy_norm, make_grid};

    fn bump(prop: &Propagator) -> FieldState {
        let g = prop.grid();
        FieldState {
            u: g.sample(|x, y| (-(x[0] * x[0]) / 4.0).exp() * (1.0 + 0.3 * y.sin())),
            v: g.sample(|x, _| 0.2 * (-(x[0] - 1.0).powi(2)).exp()),
            t: 0.0,
        }
    }

    #[test]
    fn backpropagate_at_zero_is_identity() {
        let g = make_grid(1, 8.0, 64, 4).unwrap();
        let p = Propagator::new(&g);
        let s = bump(&p);
        let back = backpropagate(&p, &s).unwrap();
        let err = energy_norm(&g, &back.sub(&s)).unwrap();
        assert!(err < 1e-13);
    }

    #[test]
    fn linear_trajectory_has_constant_interaction_state() {
        let g = make_grid(1, 8.0, 64, 4).unwrap();
        let p = Propagator::new(&g);
        let s0 = bump(&p);
        let traj: Vec<FieldState> = [1.0, 2.0, 5.0]
            .iter()
            .map(|&t| p.apply_linear(&s0, t).unwrap())
            .collect();
        for s in &traj {
            let back = backpropagate(&p, s).unwrap();
            assert!(energy_norm(&g, &back.sub(&s0)).unwrap() < 1e-10);
        }
        let sc = extract_scattering_state(&p, &traj).unwrap();
        assert!(sc.residual_series.iter().all(|&r| r < 1e-10));
        let report = cauchy_check(&p, &traj, None, 3.0).unwrap();
        assert!(report.cauchy_residuals.iter().all(|&r| r < 1e-10));
        assert!(report.strichartz_tail.iter().all(|&t| t > 0.0));
    }

    #[test]
    fn zero_solution() {
        let g = make_grid(1, 4.0, 32, 4).unwrap();
        let p = Propagator::new(&g);
        let traj: Vec<FieldState> = (0..4)
            .map(|i| FieldState {
                t: i as f64,
                ..FieldState::zeros(&g)
            })
            .collect();
        let r = cauchy_check(&p, &traj, None, 5.0).unwrap();
        assert!(r.cauchy_residuals.iter().all(|&x| x == 0.0));
        assert!(r.all_windows_hold());
        let sc = extract_scattering_state(&p, &traj).unwrap();
        assert!(sc.final_state.u.iter().chain(&sc.final_state.v).all(|&x| x == 0.0));
    }

    #[test]
    fn rejects_non_monotone_times() {
        let g = make_grid(1, 4.0, 32, 4).unwrap();
        let p = Propagator::new(&g);
        let mut a = FieldState::zeros(&g);
        a.t = 2.0;
        let mut b = FieldState::zeros(&g);
        b.t = 1.0;
        assert!(cauchy_check(&p, &[a.clone(), b], None, 2.0).is_err());
        assert!(cauchy_check(&p, &[a.clone(), a], None, 2.0).is_err());
    }
}
