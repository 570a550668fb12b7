//! Execution of one configured run and the artifacts it leaves on disk.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use nlkg_core::diagnostics::{decay_fit, ExteriorProbe, LocalProbe};
use nlkg_core::exponents::{parse_batch, report};
use nlkg_core::grid::snapshot::{read_snapshot, write_snapshot};
use nlkg_core::initial::{build_initial, support_radius, wrap_horizon};
use nlkg_core::profiles::{decompose, DecomposeConfig};
use nlkg_core::scattering::cauchy_check_with_interaction;
use nlkg_core::stepper::{evolve, Model, RunRecord, Schedule, StepperConfig};
use nlkg_core::{make_grid, DiagnosticsSeries, FieldState, Probes, Propagator, TorusWaveguideGrid};

use crate::config::{Mode, RunConfig};

/// Bumped whenever a column, file name or manifest field changes meaning.
pub const FORMAT_VERSION: u32 = 1;

pub const CSV_HEADER: &str =
    "t,E,H_norm,L2,Linf,Lp_pot,strichartz_accum,morawetz_accum,exterior_energy,cauchy_residual";

/// What a finished run produced.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub manifest: Value,
    pub series_rows: Option<usize>,
}

/// Runs `cfg`, writing every artifact into `out_dir`.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<RunOutcome> {
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let (body, rows) = match cfg.mode {
        Mode::Simulate | Mode::Linear => run_evolution(cfg, out_dir)?,
        Mode::Exponents => (run_exponents(cfg, out_dir)?, None),
        Mode::Profiles => (run_profiles(cfg, out_dir)?, None),
    };
    let mut manifest = json!({
        "format_version": FORMAT_VERSION,
        "nlkg_version": env!("CARGO_PKG_VERSION"),
        "mode": cfg.mode.as_str(),
        "config": cfg,
    });
    if let (Value::Object(m), Value::Object(b)) = (&mut manifest, body) {
        m.extend(b);
    }
    let text = serde_json::to_string_pretty(&manifest)? + "\n";
    fs::write(out_dir.join("manifest.json"), text).context("writing manifest.json")?;
    Ok(RunOutcome {
        out_dir: out_dir.to_path_buf(),
        manifest,
        series_rows: rows,
    })
}

fn grid_of(cfg: &RunConfig) -> Result<TorusWaveguideGrid> {
    let g = &cfg.grid;
    Ok(make_grid(g.d, g.half_width, g.nx, g.ny)?)
}

/// Initial state described by the `[data]` section.
pub fn initial_state(cfg: &RunConfig, grid: &TorusWaveguideGrid) -> Result<FieldState> {
    let bumps: Vec<_> = cfg.data.bumps.iter().map(|b| b.to_bump()).collect();
    let noise = cfg.data.noise.as_ref().map(|n| n.to_noise());
    Ok(build_initial(grid, &bumps, noise.as_ref(), cfg.seed)?)
}

fn scattering_times(t_final: f64, interval: f64) -> Vec<f64> {
    let n = (t_final / interval + 1e-9).floor() as usize;
    let mut ts: Vec<f64> = (0..=n).map(|k| k as f64 * interval).collect();
    if t_final - ts[n] > 1e-9 * interval {
        ts.push(t_final);
    }
    ts
}

fn near_any(t: f64, targets: &[f64], tol: f64) -> bool {
    targets.iter().any(|&s| (s - t).abs() <= tol)
}

fn run_evolution(cfg: &RunConfig, out_dir: &Path) -> Result<(Value, Option<usize>)> {
    let grid = grid_of(cfg)?;
    let s0 = initial_state(cfg, &grid)?;
    let st = &cfg.stepper;
    let model = match cfg.mode {
        Mode::Linear => Model::Linear,
        _ => Model::Defocusing { alpha: st.alpha },
    };
    let stepper = StepperConfig::new(model, st.dt, st.t_final, st.dealias)?;
    let diag = &cfg.diagnostics;
    let probes = Probes {
        exterior: diag.exterior.as_ref().map(|e| ExteriorProbe {
            center: e.center.clone(),
            radius: e.radius,
        }),
        local: diag.local.as_ref().map(|l| LocalProbe {
            center: l.center.clone(),
            radius: l.radius,
            p: l.p,
        }),
        norm_alpha: Some(st.alpha),
    };
    let scatter = cfg.mode == Mode::Simulate && st.t_final > 0.0;
    let scatter_times = if scatter {
        scattering_times(st.t_final, diag.scattering_interval)
    } else {
        Vec::new()
    };
    let mut snapshot_times = diag.snapshot_times.clone();
    snapshot_times.extend(&scatter_times);
    let schedule = Schedule {
        cadence: diag.cadence,
        snapshot_times,
        probes,
    };
    let rec = evolve(&grid, &s0, &stepper, &schedule)?;

    fs::write(out_dir.join("series.csv"), series_csv(&rec.series)).context("writing series.csv")?;
    let tol = 0.5 * st.dt;
    let mut written = Vec::new();
    if !diag.snapshot_times.is_empty() {
        let dir = out_dir.join("snapshots");
        fs::create_dir_all(&dir)?;
        for s in rec
            .snapshots
            .iter()
            .filter(|s| near_any(s.t, &diag.snapshot_times, tol))
        {
            let stem = format!("snap_{:04}", written.len());
            write_snapshot(&dir.join(&stem), &grid, s)?;
            written.push(json!({ "t": s.t, "stem": format!("snapshots/{stem}") }));
        }
    }

    let r0 = support_radius(
        &cfg.data.bumps.iter().map(|b| b.to_bump()).collect::<Vec<_>>(),
        cfg.data.noise.as_ref().map(|n| n.to_noise()).as_ref(),
    );
    let t_wrap = wrap_horizon(&grid, r0, diag.horizon_margin);
    let mut body = json!({
        "horizon": {
            "r0": r0,
            "margin": diag.horizon_margin,
            "T_wrap": t_wrap,
            "T_exceeds_horizon": st.t_final > t_wrap,
        },
        "summary": summary(&rec, cfg),
        "snapshots": written,
    });
    if scatter {
        let (traj, vs): (Vec<_>, Vec<_>) = rec
            .snapshots
            .iter()
            .zip(&rec.interaction_snapshots)
            .filter(|(s, _)| near_any(s.t, &scatter_times, tol))
            .map(|(s, v)| (s.clone(), v.clone()))
            .unzip();
        let prop = Propagator::new(&grid);
        let report = cauchy_check_with_interaction(&prop, &traj, &vs, Some(&rec.series), st.alpha)?;
        body["scattering"] = json!({
            "all_windows_hold": report.all_windows_hold(),
            "report": report,
        });
    }
    Ok((body, Some(rec.series.len())))
}

fn max_of(xs: &[f64]) -> f64 {
    xs.iter()
        .cloned()
        .filter(|x| !x.is_nan())
        .fold(f64::NEG_INFINITY, f64::max)
}

fn summary(rec: &RunRecord, cfg: &RunConfig) -> Value {
    let s = &rec.series;
    let e0 = s.energy[0];
    let drift = s.energy.iter().map(|e| (e - e0).abs() / e0).fold(0.0, f64::max);
    let last = s.len() - 1;
    let mut out = json!({
        "rows": s.len(),
        "t_final": rec.final_state.t,
        "E0": e0,
        "E_final": s.energy[last],
        "max_relative_energy_drift": drift,
        "max_Linf": max_of(&s.linf),
        "strichartz_accum_final": s.strichartz_accum[last],
        "morawetz_accum_final": s.morawetz_accum[last],
        "morawetz_over_E": s.morawetz_accum[last] / e0,
    });
    if cfg.diagnostics.exterior.is_some() {
        out["max_exterior_over_E"] = json!(max_of(&s.exterior_energy) / e0);
    }
    if cfg.mode == Mode::Linear {
        let samples: Vec<(f64, f64)> = s.times.iter().cloned().zip(s.linf.iter().cloned()).collect();
        let window = cfg.diagnostics.decay_window;
        out["decay_window"] = json!([window.0, window.1]);
        out["expected_decay_slope"] = json!(-(cfg.grid.d as f64) / 2.0);
        match decay_fit(&samples, window) {
            Ok(slope) => out["decay_slope"] = json!(slope),
            Err(e) => {
                out["decay_slope"] = Value::Null;
                out["decay_slope_error"] = json!(e.to_string());
            }
        }
    }
    out
}

/// The series as CSV with the fixed column order of [`CSV_HEADER`].
pub fn series_csv(s: &DiagnosticsSeries) -> String {
    let mut out = String::with_capacity(200 * (s.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for i in 0..s.len() {
        let row = [
            s.times[i],
            s.energy[i],
            s.h_norm[i],
            s.l2[i],
            s.linf[i],
            s.lp_pot[i],
            s.strichartz_accum[i],
            s.morawetz_accum[i],
            s.exterior_energy[i],
            s.cauchy_residual[i],
        ];
        for (k, x) in row.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            let _ = write!(out, "{x:.16e}");
        }
        out.push('\n');
    }
    out
}

fn run_exponents(cfg: &RunConfig, out_dir: &Path) -> Result<Value> {
    let mut text = String::new();
    if let Some(path) = &cfg.exponents.batch {
        text = fs::read_to_string(path).with_context(|| format!("reading batch {}", path.display()))?;
        text.push('\n');
    }
    for q in &cfg.exponents.queries {
        text.push_str(q);
        text.push('\n');
    }
    let queries = parse_batch(&text)?;
    if queries.is_empty() {
        bail!("exponent batch contains no queries");
    }
    let reports: Vec<_> = queries.iter().map(report).collect();
    let body = serde_json::to_string_pretty(&reports)? + "\n";
    fs::write(out_dir.join("exponents.json"), body).context("writing exponents.json")?;
    Ok(json!({ "summary": { "reports": reports.len(), "file": "exponents.json" } }))
}

fn run_profiles(cfg: &RunConfig, out_dir: &Path) -> Result<Value> {
    let pc = &cfg.profiles;
    let mut grid: Option<TorusWaveguideGrid> = None;
    let mut seq = Vec::with_capacity(pc.sequence.len());
    for path in &pc.sequence {
        let (g, s) = read_snapshot(path).with_context(|| format!("reading snapshot {}", path.display()))?;
        if let Some(g0) = &grid {
            if g0.shape() != g.shape() || g0.half_width() != g.half_width() {
                bail!("snapshot {} lives on a different grid", path.display());
            }
        } else {
            grid = Some(g);
        }
        seq.push(s);
    }
    let grid = grid.context("profiles.sequence is empty")?;
    let dcfg = DecomposeConfig {
        window_radius: pc.window_cells * grid.dx(),
        q: pc.q,
        ..DecomposeConfig::new(&grid, pc.k_max, pc.eps_stop, cfg.stepper.alpha)
    };
    let dec = decompose(&grid, &seq, &dcfg)?;
    let dir = out_dir.join("profiles");
    fs::create_dir_all(&dir)?;
    for (k, p) in dec.profiles.iter().enumerate() {
        write_snapshot(&dir.join(format!("profile_{k:02}")), &grid, &p.field)?;
    }
    fs::write(
        out_dir.join("profiles.json"),
        serde_json::to_string_pretty(&dec)? + "\n",
    )
    .context("writing profiles.json")?;
    Ok(json!({
        "summary": {
            "elements": seq.len(),
            "profiles": dec.profiles.len(),
            "window_radius": dcfg.window_radius,
            "final_h_rms": dec.stages.last().map(|s| s.h_rms),
            "final_lq_max": dec.stages.last().map(|s| s.lq_max),
            "file": "profiles.json",
        }
    }))
}
