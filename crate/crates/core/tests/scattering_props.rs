use nlkg_core::grid::{energy_norm, spectral_energy_norm, SpectralPair};
use nlkg_core::initial::{build_initial, Bump};
use nlkg_core::scattering::{backpropagate, cauchy_check, cauchy_check_with_interaction, extract_scattering_state};
use nlkg_core::stepper::{evolve, Model, RunRecord, Schedule, StepperConfig};
use nlkg_core::{make_grid, FieldState, Propagator, TorusWaveguideGrid};

fn small_data_run(grid: &TorusWaveguideGrid, amplitude: f64, t: f64) -> RunRecord {
    let bumps = [
        Bump::centered(1, amplitude, 2.0),
        Bump {
            torus_mode: 2,
            ..Bump::centered(1, 0.3 * amplitude, 2.0)
        },
    ];
    let s0 = build_initial(grid, &bumps, None, 0).unwrap();
    let cfg = StepperConfig::new(Model::Defocusing { alpha: 5.0 }, 1e-2, t, false).unwrap();
    let sched = Schedule {
        cadence: 1,
        snapshot_times: (0..=(t as usize)).map(|i| i as f64).collect(),
        ..Default::default()
    };
    evolve(grid, &s0, &cfg, &sched).unwrap()
}

fn diff(a: &SpectralPair, b: &SpectralPair) -> SpectralPair {
    SpectralPair {
        u: a.u.iter().zip(&b.u).map(|(x, y)| x - y).collect(),
        v: a.v.iter().zip(&b.v).map(|(x, y)| x - y).collect(),
    }
}

#[test]
fn carried_interaction_state_matches_back_propagation() {
    let g = make_grid(1, 16.0, 128, 8).unwrap();
    let p = Propagator::new(&g);
    let rec = small_data_run(&g, 0.8, 6.0);
    assert_eq!(rec.snapshots.len(), rec.interaction_snapshots.len());
    for (s, v) in rec.snapshots.iter().zip(&rec.interaction_snapshots) {
        let back = g.forward_state(&backpropagate(&p, s).unwrap()).unwrap();
        let scale = spectral_energy_norm(&g, v);
        assert!(spectral_energy_norm(&g, &diff(&back, v)) <= 1e-11 * scale);
    }
}

#[test]
fn triangle_inequality_over_windows() {
    let g = make_grid(1, 16.0, 128, 8).unwrap();
    let p = Propagator::new(&g);
    let rec = small_data_run(&g, 0.8, 6.0);
    let report = cauchy_check(&p, &rec.snapshots, Some(&rec.series), 5.0).unwrap();
    let v0 = backpropagate(&p, &rec.snapshots[0]).unwrap();
    let mut sum = 0.0;
    for (i, r) in report.cauchy_residuals.iter().enumerate() {
        sum += r;
        let vi = backpropagate(&p, &rec.snapshots[i + 1]).unwrap();
        let direct = energy_norm(&g, &vi.sub(&v0)).unwrap();
        assert!(direct <= sum + 1e-12, "window {i}: {direct} > {sum}");
    }
}

#[test]
fn small_data_windows_hold_and_residual_decays() {
    let g = make_grid(1, 32.0, 256, 8).unwrap();
    let p = Propagator::new(&g);
    let rec = small_data_run(&g, 1e-2, 20.0);
    let report =
        cauchy_check_with_interaction(&p, &rec.snapshots, &rec.interaction_snapshots, Some(&rec.series), 5.0).unwrap();
    assert!(report.all_windows_hold(), "{:?}", report.window_holds);
    assert!(report.c_fit > 0.0 && report.c_fit <= 1.0 + 1e-6);
    let res = &report.residual_series;
    assert_eq!(*res.last().unwrap(), 0.0);
    assert!(res[10] > res[18], "{} vs {}", res[10], res[18]);
    assert!(report.cauchy_residuals.iter().all(|&r| r >= 0.0));
}

#[test]
fn scattering_state_reproduces_final_sample() {
    let g = make_grid(1, 16.0, 128, 8).unwrap();
    let p = Propagator::new(&g);
    let rec = small_data_run(&g, 0.5, 4.0);
    let sc = extract_scattering_state(&p, &rec.snapshots).unwrap();
    let last: &FieldState = rec.snapshots.last().unwrap();
    let forward = p.apply_linear(&sc.final_state, last.t).unwrap();
    let err = energy_norm(&g, &forward.sub(last)).unwrap() / energy_norm(&g, last).unwrap();
    assert!(err < 1e-12, "{err}");
    assert_eq!(sc.residual_series.len(), rec.snapshots.len());
}
