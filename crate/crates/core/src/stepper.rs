//! Strang splitting of the defocusing equation `u_tt − Δu + u = −|u|^α u`.
//!
//! The free part is solved exactly by [`Propagator`]; the remaining sub-flow
//! `∂ₜv = −|u|^α u` with `u` frozen is solved exactly by a pointwise kick.
//! One step is `L(dt/2) ∘ N(dt) ∘ L(dt/2)`.

use crate::diagnostics::{DiagnosticsSeries, Probes, Recorder};
use crate::error::{invalid, Error, Result};
use crate::grid::{FieldState, SpectralPair, TorusWaveguideGrid};
use rustfft::num_complex::Complex64;

use crate::propagator::{DispersionTable, LinearFlow, Propagator};

/// Relative energy drift that aborts a run.
pub const BLOW_UP_DRIFT: f64 = 1e-2;

/// Which equation a run integrates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Model {
    /// Free Klein–Gordon flow (nonlinear term disabled).
    Linear,
    /// `−|u|^α u` with `α > 0`.
    Defocusing { alpha: f64 },
}

impl Model {
    pub fn alpha(&self) -> Option<f64> {
        match *self {
            Model::Linear => None,
            Model::Defocusing { alpha } => Some(alpha),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepperConfig {
    pub model: Model,
    pub dt: f64,
    pub t_final: f64,
    pub dealias: bool,
}

impl StepperConfig {
    /// `dt > 0`, `T ≥ 0` and `dt ≤ T` unless `T = 0` (an empty run).
    pub fn new(model: Model, dt: f64, t_final: f64, dealias: bool) -> Result<Self> {
        let cfg = Self {
            model,
            dt,
            t_final,
            dealias,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Model::Defocusing { alpha } = self.model {
            if !(alpha.is_finite() && alpha > 0.0) {
                return Err(invalid("alpha", format!("must be positive, got {alpha}")));
            }
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return Err(invalid("T", format!("must be non-negative, got {}", self.t_final)));
        }
        if self.t_final > 0.0 && self.dt > self.t_final {
            return Err(invalid("dt", format!("dt = {} exceeds T = {}", self.dt, self.t_final)));
        }
        Ok(())
    }

    /// Step sizes covering `[0, T]`: full steps plus one short final step
    /// when `T/dt` is not an integer.
    pub fn step_sizes(&self) -> (usize, Option<f64>) {
        if self.t_final == 0.0 {
            return (0, None);
        }
        let ratio = self.t_final / self.dt;
        let n_full = (ratio + 1e-9).floor() as usize;
        let rest = self.t_final - n_full as f64 * self.dt;
        if rest > 1e-9 * self.dt {
            (n_full, Some(rest))
        } else {
            (n_full, None)
        }
    }
}

/// `|u|^α u`, with value 0 at `u = 0`.
#[inline]
pub fn nonlinearity(u: f64, alpha: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        crate::grid::abs_pow(u, alpha) * u
    }
}

/// Exact solution of `∂ₜv = −|u|^α u` over time `tau` with `u` frozen.
pub fn nonlinear_kick(state: &FieldState, tau: f64, alpha: f64) -> Result<FieldState> {
    state.check_finite()?;
    let mut out = state.clone();
    kick_in_place(&out.u, &mut out.v, tau, alpha);
    Ok(out)
}

fn kick_in_place(u: &[f64], v: &mut [f64], tau: f64, alpha: f64) {
    for (vi, &ui) in v.iter_mut().zip(u) {
        *vi -= tau * nonlinearity(ui, alpha);
    }
}

/// One Strang step `L(dt/2) ∘ N(dt) ∘ L(dt/2)` for the defocusing equation.
pub fn strang_step(prop: &Propagator, state: &FieldState, dt: f64, alpha: f64) -> Result<FieldState> {
    let half = prop.flow(0.5 * dt);
    let mut s = prop.apply_flow(state, &half)?;
    kick_in_place(&s.u, &mut s.v, dt, alpha);
    let mut out = prop.apply_flow(&s, &half)?;
    // Avoid accumulating the two half-step stamps separately.
    out.t = state.t + dt;
    Ok(out)
}

/// When to record diagnostics and which states to keep.
#[derive(Clone, Debug, Default)]
pub struct Schedule {
    /// Diagnostics every `cadence` steps, starting at step 0.
    pub cadence: usize,
    /// Times at which full states are kept (rounded to the nearest step).
    pub snapshot_times: Vec<f64>,
    pub probes: Probes,
}

/// Outcome of [`evolve`].
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub final_state: FieldState,
    pub series: DiagnosticsSeries,
    pub snapshots: Vec<FieldState>,
    /// `V(t)` in spectral form at each snapshot, as carried by the integrator.
    pub interaction_snapshots: Vec<SpectralPair>,
}

/// Fixed-step integrator holding cached multipliers.
pub struct Stepper {
    prop: Propagator,
    config: StepperConfig,
    dealias_mask: Option<Vec<bool>>,
}

impl Stepper {
    pub fn new(grid: &TorusWaveguideGrid, config: StepperConfig) -> Result<Self> {
        config.validate()?;
        let dealias_mask = config.dealias.then(|| grid.dealias_mask());
        Ok(Self {
            prop: Propagator::new(grid),
            config,
            dealias_mask,
        })
    }

    pub fn propagator(&self) -> &Propagator {
        &self.prop
    }

    pub fn config(&self) -> &StepperConfig {
        &self.config
    }

    /// Nonlinear kick on spectral coefficients: back to physical space, kick, forward.
    fn kick_spectral(&self, spec: &mut SpectralPair, tau: f64) -> Result<()> {
        let Model::Defocusing { alpha } = self.config.model else {
            return Ok(());
        };
        let grid = self.prop.grid();
        let (u, mut v) = grid.inverse_pair(spec)?;
        match &self.dealias_mask {
            None => kick_in_place(&u, &mut v, tau, alpha),
            Some(mask) => {
                let f: Vec<f64> = u.iter().map(|&x| nonlinearity(x, alpha)).collect();
                let mut fh = grid.forward_transform(&f)?;
                for (c, keep) in fh.iter_mut().zip(mask) {
                    if !keep {
                        *c = Default::default();
                    }
                }
                let f = grid.inverse_transform(&fh)?;
                for (vi, fi) in v.iter_mut().zip(&f) {
                    *vi -= tau * fi;
                }
            }
        }
        if u.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("field after nonlinear kick"));
        }
        *spec = grid.forward_pair(&u, &v)?;
        Ok(())
    }

    /// One Strang step with the configured `dt` (and model).
    pub fn step(&self, state: &FieldState) -> Result<FieldState> {
        let half = self.prop.flow(0.5 * self.config.dt);
        let grid = self.prop.grid();
        grid.check_state(state)?;
        state.check_finite()?;
        let mut spec = grid.forward_state(state)?;
        half.apply_spectral(&mut spec);
        self.kick_spectral(&mut spec, self.config.dt)?;
        half.apply_spectral(&mut spec);
        let (u, v) = grid.inverse_pair(&spec)?;
        Ok(FieldState {
            u,
            v,
            t: state.t + self.config.dt,
        })
    }

    /// Runs to `T`, recording diagnostics on the schedule.
    ///
    /// The trajectory is carried in the interaction picture
    /// `V = e^{−tH}(u, ∂ₜu)`, where a Strang step is exactly
    /// `V ← V + e^{−t_mH}(0, −h|u(t_m)|^α u(t_m))` at the step midpoint `t_m`.
    /// `V` is accumulated with compensated summation, so rounding stays
    /// proportional to the kicks rather than to the solution.
    pub fn evolve(&self, initial: &FieldState, schedule: &Schedule) -> Result<RunRecord> {
        let grid = self.prop.grid();
        grid.check_state(initial)?;
        initial.check_finite()?;
        let table = self.prop.table();
        let cfg = &self.config;
        let t0 = initial.t;

        let mut recorder = Recorder::new(grid, table, cfg.model, schedule.probes.clone());
        let mut snapshots = Vec::new();
        let mut interaction_snapshots = Vec::new();

        let spec0 = grid.forward_state(initial)?;
        let mut acc = Compensated::new(LinearFlow::new(table, -t0).rotated(&spec0));

        let (n_full, partial) = cfg.step_sizes();
        let total = n_full + usize::from(partial.is_some());
        if total == 0 {
            recorder.record_with_interaction(&spec0, initial, &acc.value())?;
            if !schedule.snapshot_times.is_empty() {
                snapshots.push(initial.clone());
                interaction_snapshots.push(acc.value());
            }
            return Ok(RunRecord {
                final_state: initial.clone(),
                series: recorder.finish(),
                snapshots,
                interaction_snapshots,
            });
        }

        let cadence = schedule.cadence.max(1);
        let mut snap_steps: Vec<usize> = schedule
            .snapshot_times
            .iter()
            .map(|&t| {
                if t >= t0 + cfg.t_final - 1e-9 * cfg.dt {
                    total
                } else {
                    ((t - t0).max(0.0) / cfg.dt).round() as usize
                }
            })
            .map(|s| s.min(total))
            .collect();
        snap_steps.sort_unstable();
        snap_steps.dedup();

        let step_len = |s: usize| -> f64 {
            match partial {
                Some(h) if s == total => h,
                _ => cfg.dt,
            }
        };
        let time_at = |s: usize| -> f64 {
            if s == total {
                t0 + cfg.t_final
            } else {
                t0 + s as f64 * cfg.dt
            }
        };
        let guard = |e: Error, t: f64| -> Error {
            match e {
                Error::NonFinite(what) => Error::BlowUp {
                    t,
                    reason: format!("non-finite {what}"),
                },
                other => other,
            }
        };

        let mut observe = |s: usize, v: &SpectralPair, recorder: &mut Recorder| -> Result<Option<FieldState>> {
            let sample = s % cadence == 0 && s <= n_full;
            let snap = snap_steps.binary_search(&s).is_ok();
            if !(sample || snap || s == total) {
                return Ok(None);
            }
            let t = time_at(s);
            let spec = LinearFlow::new(table, t).rotated(v);
            let (u, w) = grid.inverse_pair(&spec)?;
            let state = FieldState { u, v: w, t };
            state.check_finite().map_err(|e| guard(e, t))?;
            if sample {
                recorder.record_with_interaction(&spec, &state, v)?;
                check_blow_up(recorder, t)?;
            }
            if snap {
                snapshots.push(state.clone());
                interaction_snapshots.push(v.clone());
            }
            Ok(Some(state))
        };

        observe(0, &acc.value(), &mut recorder)?;
        let mut phase = Phase::new(table);
        let mut final_state = None;
        for s in 1..=total {
            let h = step_len(s);
            let tm = time_at(s - 1) + 0.5 * h;
            phase.set(table, tm);
            if let Model::Defocusing { alpha } = cfg.model {
                self.interaction_kick(&mut acc, &phase, h, alpha)
                    .map_err(|e| guard(e, tm))?;
            }
            let v = acc.value();
            if let Some(state) = observe(s, &v, &mut recorder)? {
                if s == total {
                    final_state = Some(state);
                }
            }
        }

        Ok(RunRecord {
            final_state: final_state.expect("the final step is always observed"),
            series: recorder.finish(),
            snapshots,
            interaction_snapshots,
        })
    }

    /// `V ← V + e^{−t_mH}(0, −h N(u(t_m)))`, with `N` optionally dealiased.
    fn interaction_kick(&self, acc: &mut Compensated, phase: &Phase, h: f64, alpha: f64) -> Result<()> {
        let grid = self.prop.grid();
        let n = grid.len();
        let v = &acc.hi;
        let mut u_hat = Vec::with_capacity(n);
        for k in 0..n {
            let (c, sn) = (phase.cos[k], phase.sin[k]);
            u_hat.push(v.u[k] * c + v.v[k] * (sn * phase.inv_omega[k]));
        }
        let u = grid.inverse_transform(&u_hat)?;
        let f: Vec<f64> = u.iter().map(|&x| -h * nonlinearity(x, alpha)).collect();
        if f.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("field after nonlinear kick"));
        }
        let mut f_hat = grid.forward_transform(&f)?;
        if let Some(mask) = &self.dealias_mask {
            for (c, keep) in f_hat.iter_mut().zip(mask) {
                if !keep {
                    *c = Default::default();
                }
            }
        }
        for k in 0..n {
            let (c, sn) = (phase.cos[k], phase.sin[k]);
            acc.add(k, -f_hat[k] * (sn * phase.inv_omega[k]), f_hat[k] * c);
        }
        Ok(())
    }
}

/// Mode phases `cos ωt`, `sin ωt`, advanced by rotation between exact refreshes.
struct Phase {
    omega: Vec<f64>,
    inv_omega: Vec<f64>,
    cos: Vec<f64>,
    sin: Vec<f64>,
    t: f64,
    step: Option<(f64, Vec<f64>, Vec<f64>)>,
    since_refresh: usize,
}

impl Phase {
    const REFRESH: usize = 64;

    fn new(table: &DispersionTable) -> Self {
        let n = table.omega.len();
        Self {
            omega: table.omega.clone(),
            inv_omega: table.omega.iter().map(|w| 1.0 / w).collect(),
            cos: vec![1.0; n],
            sin: vec![0.0; n],
            t: f64::NAN,
            step: None,
            since_refresh: 0,
        }
    }

    fn exact(&mut self, t: f64) {
        for ((c, s), w) in self.cos.iter_mut().zip(&mut self.sin).zip(&self.omega) {
            let (sn, cs) = (w * t).sin_cos();
            *c = cs;
            *s = sn;
        }
        self.t = t;
        self.since_refresh = 0;
    }

    fn set(&mut self, table: &DispersionTable, t: f64) {
        let tau = t - self.t;
        if !tau.is_finite() || self.since_refresh >= Self::REFRESH {
            self.exact(t);
            return;
        }
        let fresh = match &self.step {
            Some((h, _, _)) => (h - tau).abs() > 1e-12 * tau.abs(),
            None => true,
        };
        if fresh {
            let (c, s): (Vec<f64>, Vec<f64>) = table
                .omega
                .iter()
                .map(|w| {
                    let (s, c) = (w * tau).sin_cos();
                    (c, s)
                })
                .unzip();
            self.step = Some((tau, c, s));
        }
        let (_, dc, ds) = self.step.as_ref().expect("step phases set");
        for k in 0..self.cos.len() {
            let (c, s) = (self.cos[k], self.sin[k]);
            self.cos[k] = c * dc[k] - s * ds[k];
            self.sin[k] = s * dc[k] + c * ds[k];
        }
        self.t = t;
        self.since_refresh += 1;
    }
}

/// Kahan-compensated spectral accumulator.
struct Compensated {
    hi: SpectralPair,
    lo: SpectralPair,
}

impl Compensated {
    fn new(v: SpectralPair) -> Self {
        let n = v.u.len();
        Self {
            hi: v,
            lo: SpectralPair::zeros(n),
        }
    }

    #[inline]
    fn add(&mut self, k: usize, du: Complex64, dv: Complex64) {
        two_sum(&mut self.hi.u[k], &mut self.lo.u[k], du);
        two_sum(&mut self.hi.v[k], &mut self.lo.v[k], dv);
    }

    fn value(&self) -> SpectralPair {
        SpectralPair {
            u: self.hi.u.iter().zip(&self.lo.u).map(|(a, b)| a + b).collect(),
            v: self.hi.v.iter().zip(&self.lo.v).map(|(a, b)| a + b).collect(),
        }
    }
}

#[inline]
fn two_sum(hi: &mut Complex64, lo: &mut Complex64, x: Complex64) {
    let y = x + *lo;
    let t = *hi + y;
    *lo = y - (t - *hi);
    *hi = t;
}

fn check_blow_up(recorder: &Recorder, t: f64) -> Result<()> {
    let series = recorder.series();
    let (Some(&e0), Some(&e)) = (series.energy.first(), series.energy.last()) else {
        return Ok(());
    };
    if !e.is_finite() {
        return Err(Error::BlowUp {
            t,
            reason: "non-finite energy".into(),
        });
    }
    if e0 > 0.0 && ((e - e0) / e0).abs() > BLOW_UP_DRIFT {
        return Err(Error::BlowUp {
            t,
            reason: format!(
                "relative energy drift {:.3e} exceeds {BLOW_UP_DRIFT}",
                ((e - e0) / e0).abs()
            ),
        });
    }
    Ok(())
}

/// Builds a [`Stepper`] and runs it.
pub fn evolve(
    grid: &TorusWaveguideGrid,
    state: &FieldState,
    config: &StepperConfig,
    schedule: &Schedule,
) -> Result<RunRecord> {
    Stepper::new(grid, config.clone())?.evolve(state, schedule)
}
