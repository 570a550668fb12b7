//! Finite-sequence analogue of the profile decomposition: translated bubbles
//! are located by windowed mass, recentred by whole-cell rolls, averaged into a
//! profile, and subtracted. Only space translations are searched; time and
//! torus shifts are not.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::grid::{energy_norm, lp_norm, FieldState, TorusWaveguideGrid};

/// Relative tolerance under which two windowed masses count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Slope, in cells per sequence index, separating bounded from diverging shifts.
pub const DIVERGENCE_SLOPE: f64 = 0.5;

/// Grid shift of a concentration point relative to the origin, in whole cells
/// per euclidean axis (unused axes are 0).
pub type Shift = [i64; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Dichotomy {
    Bounded,
    Diverging,
}

fn origin_index(grid: &TorusWaveguideGrid) -> i64 {
    (grid.nx() / 2) as i64
}

/// Cell offsets inside the window `|x| ≤ radius`, taken with wrap-around.
fn window_stencil(grid: &TorusWaveguideGrid, radius: f64) -> Vec<Shift> {
    let dx = grid.dx();
    let nx = grid.nx() as i64;
    let reach = ((radius / dx).floor() as i64).min(nx / 2);
    let mut out = Vec::new();
    if grid.dim() == 1 {
        for i in -reach..=reach {
            out.push([i, 0]);
        }
    } else {
        for i in -reach..=reach {
            for j in -reach..=reach {
                let r2 = ((i * i + j * j) as f64) * dx * dx;
                if r2 <= radius * radius * (1.0 + 1e-12) {
                    out.push([i, j]);
                }
            }
        }
    }
    out
}

fn wrap(i: i64, n: i64) -> usize {
    i.rem_euclid(n) as usize
}

fn euclid_index(grid: &TorusWaveguideGrid, i: i64, j: i64) -> usize {
    let nx = grid.nx() as i64;
    if grid.dim() == 1 {
        wrap(i, nx)
    } else {
        wrap(i, nx) * grid.nx() + wrap(j, nx)
    }
}

/// Windowed mass `∫_𝕋 ∫_{|x−x_c|≤R} (u² + v²)` at every euclidean grid point.
pub fn windowed_mass(grid: &TorusWaveguideGrid, state: &FieldState, window_radius: f64) -> Result<Vec<f64>> {
    if !(window_radius > 0.0) {
        return Err(invalid("window_radius", "must be positive"));
    }
    grid.check_state(state)?;
    let ny = grid.ny();
    let h = grid.cell_volume();
    let column: Vec<f64> = (0..grid.euclid_len())
        .map(|e| {
            let r = e * ny..(e + 1) * ny;
            h * state.u[r.clone()]
                .iter()
                .zip(&state.v[r])
                .map(|(u, v)| u * u + v * v)
                .sum::<f64>()
        })
        .collect();
    let stencil = window_stencil(grid, window_radius);
    let nx = grid.nx();
    Ok((0..grid.euclid_len())
        .into_par_iter()
        .map(|e| {
            let (i, j) = if grid.dim() == 1 {
                (e as i64, 0)
            } else {
                ((e / nx) as i64, (e % nx) as i64)
            };
            stencil
                .iter()
                .map(|o| column[euclid_index(grid, i + o[0], j + o[1])])
                .sum()
        })
        .collect())
}

/// Grid point of largest windowed mass, as a shift from the origin cell.
/// Near-ties resolve to the lexicographically smallest coordinate.
pub fn locate_concentration(grid: &TorusWaveguideGrid, state: &FieldState, window_radius: f64) -> Result<Shift> {
    let mass = windowed_mass(grid, state, window_radius)?;
    let max = mass.iter().cloned().fold(0.0, f64::max);
    let e = mass.iter().position(|&m| m >= max * (1.0 - TIE_TOLERANCE)).unwrap_or(0);
    let idx = grid.euclid_multi_index(e);
    let o = origin_index(grid);
    let mut shift = [idx[0] as i64 - o, 0];
    if grid.dim() == 2 {
        shift[1] = idx[1] as i64 - o;
    }
    Ok(shift)
}

/// `out(x) = f(x + shift)`: moves the point at `shift` to the origin.
pub fn roll(grid: &TorusWaveguideGrid, field: &[f64], shift: Shift) -> Vec<f64> {
    let ny = grid.ny();
    let nx = grid.nx();
    let mut out = vec![0.0; field.len()];
    for e in 0..grid.euclid_len() {
        let (i, j) = if grid.dim() == 1 {
            (e as i64, 0)
        } else {
            ((e / nx) as i64, (e % nx) as i64)
        };
        let src = euclid_index(grid, i + shift[0], j + shift[1]);
        out[e * ny..(e + 1) * ny].copy_from_slice(&field[src * ny..(src + 1) * ny]);
    }
    out
}

pub fn roll_state(grid: &TorusWaveguideGrid, state: &FieldState, shift: Shift) -> FieldState {
    FieldState {
        u: roll(grid, &state.u, shift),
        v: roll(grid, &state.v, shift),
        t: state.t,
    }
}

fn neg(s: Shift) -> Shift {
    [-s[0], -s[1]]
}

/// One extraction step.
#[derive(Clone, Debug)]
pub struct Extraction {
    pub shifts: Vec<Shift>,
    /// Pointwise mean of the recentred elements.
    pub profile: FieldState,
    /// Recentred elements minus the profile.
    pub remainders: Vec<FieldState>,
}

fn check_sequence(grid: &TorusWaveguideGrid, seq: &[FieldState]) -> Result<()> {
    if seq.is_empty() {
        return Err(invalid("sequence", "must not be empty"));
    }
    for s in seq {
        grid.check_state(s)?;
        s.check_finite()?;
    }
    Ok(())
}

pub fn extract_profile(grid: &TorusWaveguideGrid, seq: &[FieldState], window_radius: f64) -> Result<Extraction> {
    check_sequence(grid, seq)?;
    let shifts: Vec<Shift> = seq
        .par_iter()
        .map(|s| locate_concentration(grid, s, window_radius))
        .collect::<Result<_>>()?;
    let recentred: Vec<FieldState> = seq
        .par_iter()
        .zip(&shifts)
        .map(|(s, &sh)| roll_state(grid, s, sh))
        .collect();
    let n = seq.len() as f64;
    let mut profile = FieldState::zeros(grid);
    for r in &recentred {
        for (p, x) in profile.u.iter_mut().zip(&r.u) {
            *p += x;
        }
        for (p, x) in profile.v.iter_mut().zip(&r.v) {
            *p += x;
        }
    }
    let profile = profile.scale(1.0 / n);
    let remainders = recentred.iter().map(|r| r.sub(&profile)).collect();
    Ok(Extraction {
        shifts,
        profile,
        remainders,
    })
}

/// Least-squares slope of `|shift|` (euclidean length, in cells) against the index.
pub fn shift_slope(shifts: &[Shift]) -> f64 {
    let n = shifts.len();
    if n < 2 {
        return 0.0;
    }
    let ys: Vec<f64> = shifts
        .iter()
        .map(|s| ((s[0] * s[0] + s[1] * s[1]) as f64).sqrt())
        .collect();
    let mx = (n - 1) as f64 / 2.0;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - mx;
        sxy += dx * (y - my);
        sxx += dx * dx;
    }
    sxy / sxx
}

/// Either the shifts stay put or they run off: a slope test on `|xₙ|`.
pub fn classify_shifts(shifts: &[Shift], threshold: f64) -> Dichotomy {
    if shift_slope(shifts).abs() > threshold {
        Dichotomy::Diverging
    } else {
        Dichotomy::Bounded
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Profile {
    /// Shift of this profile in each sequence element.
    pub shifts: Vec<Shift>,
    pub dichotomy: Dichotomy,
    pub h_norm: f64,
    pub lp_norm: f64,
    #[serde(skip)]
    pub field: FieldState,
}

/// Per-element norms of a stage's remainder.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RemainderNorms {
    pub h: Vec<f64>,
    pub lq: Vec<f64>,
    pub lp: Vec<f64>,
}

impl RemainderNorms {
    fn of(grid: &TorusWaveguideGrid, seq: &[FieldState], q: f64, p: f64) -> Result<Self> {
        let rows: Vec<(f64, f64, f64)> = seq
            .par_iter()
            .map(|s| Ok((energy_norm(grid, s)?, lp_norm(grid, &s.u, q)?, lp_norm(grid, &s.u, p)?)))
            .collect::<Result<_>>()?;
        Ok(Self {
            h: rows.iter().map(|r| r.0).collect(),
            lq: rows.iter().map(|r| r.1).collect(),
            lp: rows.iter().map(|r| r.2).collect(),
        })
    }

    /// `(mean over n of ‖Rₙ‖²_𝓗)^{1/2}`, which no extraction can increase.
    pub fn h_rms(&self) -> f64 {
        if self.h.is_empty() {
            return 0.0;
        }
        (self.h.iter().map(|x| x * x).sum::<f64>() / self.h.len() as f64).sqrt()
    }

    pub fn lq_max(&self) -> f64 {
        self.lq.iter().cloned().fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StageLedger {
    pub stage: usize,
    pub remainder: RemainderNorms,
    pub h_rms: f64,
    pub lq_max: f64,
}

/// Relative Pythagorean defects after stage `k`, one entry per element.
#[derive(Clone, Debug, Serialize)]
pub struct AuditStage {
    pub stage: usize,
    /// `|‖uₙ‖²_𝓗 − Σⱼ‖ψⱼ‖²_𝓗 − ‖Rₙᵏ‖²_𝓗| / ‖uₙ‖²_𝓗`.
    pub h_defect: Vec<f64>,
    /// Same with `‖·‖^{α+2}_{L^{α+2}}`.
    pub lp_defect: Vec<f64>,
}

impl AuditStage {
    pub fn max_h_defect(&self) -> f64 {
        self.h_defect.iter().cloned().fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecomposeConfig {
    pub k_max: usize,
    pub eps_stop: f64,
    /// In length units.
    pub window_radius: f64,
    pub alpha: f64,
    /// Exponent of the stopping norm; `α + 2` when unset.
    pub q: Option<f64>,
}

impl DecomposeConfig {
    /// Defaults: eight-cell window, stopping norm `L^{α+2}`.
    pub fn new(grid: &TorusWaveguideGrid, k_max: usize, eps_stop: f64, alpha: f64) -> Self {
        Self {
            k_max,
            eps_stop,
            window_radius: 8.0 * grid.dx(),
            alpha,
            q: None,
        }
    }

    fn q(&self) -> f64 {
        self.q.unwrap_or(self.alpha + 2.0)
    }

    fn validate(&self) -> Result<()> {
        if self.k_max == 0 {
            return Err(invalid("k_max", "must be >= 1"));
        }
        if !(self.eps_stop >= 0.0) {
            return Err(invalid("eps_stop", "must be non-negative"));
        }
        if !(self.window_radius > 0.0) {
            return Err(invalid("window_radius", "must be positive"));
        }
        if !(self.alpha > 0.0) {
            return Err(invalid("alpha", "must be positive"));
        }
        if self.q() < 1.0 {
            return Err(invalid("q", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProfileDecomposition {
    pub profiles: Vec<Profile>,
    pub initial: RemainderNorms,
    /// One entry per extracted profile.
    pub stages: Vec<StageLedger>,
    pub pythagorean: Vec<AuditStage>,
    /// Final remainders, in the frame of the input sequence.
    #[serde(skip)]
    pub remainders: Vec<FieldState>,
}

/// Repeated extraction on the running remainder until its largest `L^q`
/// norm drops below `eps_stop` or `k_max` profiles are found.
pub fn decompose(grid: &TorusWaveguideGrid, seq: &[FieldState], cfg: &DecomposeConfig) -> Result<ProfileDecomposition> {
    cfg.validate()?;
    check_sequence(grid, seq)?;
    let q = cfg.q();
    let p = cfg.alpha + 2.0;
    let initial = RemainderNorms::of(grid, seq, q, p)?;
    let mut current: Vec<FieldState> = seq.to_vec();
    let mut current_lq_max = initial.lq_max();
    let mut profiles = Vec::new();
    let mut stages = Vec::new();
    while profiles.len() < cfg.k_max && current_lq_max >= cfg.eps_stop && current_lq_max > 0.0 {
        let ex = extract_profile(grid, &current, cfg.window_radius)?;
        // Back to the input frame, so every stage reports absolute shifts.
        current = ex
            .remainders
            .par_iter()
            .zip(&ex.shifts)
            .map(|(r, &s)| roll_state(grid, r, neg(s)))
            .collect();
        let remainder = RemainderNorms::of(grid, &current, q, p)?;
        current_lq_max = remainder.lq_max();
        profiles.push(Profile {
            dichotomy: classify_shifts(&ex.shifts, DIVERGENCE_SLOPE),
            shifts: ex.shifts,
            h_norm: energy_norm(grid, &ex.profile)?,
            lp_norm: lp_norm(grid, &ex.profile.u, p)?,
            field: ex.profile,
        });
        stages.push(StageLedger {
            stage: profiles.len(),
            h_rms: remainder.h_rms(),
            lq_max: current_lq_max,
            remainder,
        });
    }
    let mut out = ProfileDecomposition {
        profiles,
        initial,
        stages,
        pythagorean: Vec::new(),
        remainders: current,
    };
    out.pythagorean = pythagorean_audit(grid, seq, &out, cfg.alpha)?;
    Ok(out)
}

/// Pythagorean defects of the energy and `L^{α+2}` expansions at every stage.
pub fn pythagorean_audit(
    grid: &TorusWaveguideGrid,
    seq: &[FieldState],
    dec: &ProfileDecomposition,
    alpha: f64,
) -> Result<Vec<AuditStage>> {
    let n = seq.len();
    if dec.initial.h.len() != n || dec.stages.iter().any(|s| s.remainder.h.len() != n) {
        return Err(Error::ShapeMismatch {
            expected: n,
            got: dec.initial.h.len(),
        });
    }
    for s in seq {
        grid.check_state(s)?;
    }
    let p = alpha + 2.0;
    let un_h: Vec<f64> = dec.initial.h.iter().map(|x| x * x).collect();
    let un_p: Vec<f64> = seq
        .iter()
        .map(|s| Ok(lp_norm(grid, &s.u, p)?.powf(p)))
        .collect::<Result<_>>()?;
    let mut psi_h = 0.0;
    let mut psi_p = 0.0;
    let mut out = Vec::new();
    for (k, stage) in dec.stages.iter().enumerate() {
        let prof = &dec.profiles[k];
        psi_h += prof.h_norm * prof.h_norm;
        psi_p += prof.lp_norm.powf(p);
        let h_defect = (0..n)
            .map(|i| relative_defect(un_h[i], psi_h, stage.remainder.h[i].powi(2)))
            .collect();
        let lp_defect = (0..n)
            .map(|i| relative_defect(un_p[i], psi_p, stage.remainder.lp[i].powf(p)))
            .collect();
        out.push(AuditStage {
            stage: stage.stage,
            h_defect,
            lp_defect,
        });
    }
    Ok(out)
}

fn relative_defect(total: f64, profiles: f64, rest: f64) -> f64 {
    if total > 0.0 {
        (total - profiles - rest).abs() / total
    } else {
        0.0
    }
}
