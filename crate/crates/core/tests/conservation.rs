use nlkg_core::diagnostics::{ExteriorProbe, Probes};
use nlkg_core::grid::energy_norm;
use nlkg_core::initial::{build_initial, Bump, SUPPORT_FACTOR};
use nlkg_core::stepper::{evolve, Model, RunRecord, Schedule, StepperConfig};
use nlkg_core::{make_grid, FieldState, Propagator, TorusWaveguideGrid};

fn preset(grid: &TorusWaveguideGrid, amplitude: f64) -> FieldState {
    let bumps = [
        Bump::centered(1, amplitude, 2.0),
        Bump {
            torus_mode: 2,
            ..Bump::centered(1, 0.3 * amplitude, 2.0)
        },
    ];
    build_initial(grid, &bumps, None, 0).unwrap()
}

fn run(grid: &TorusWaveguideGrid, s0: &FieldState, model: Model, dt: f64, t: f64, schedule: &Schedule) -> RunRecord {
    let cfg = StepperConfig::new(model, dt, t, false).unwrap();
    evolve(grid, s0, &cfg, schedule).unwrap()
}

fn every_step() -> Schedule {
    Schedule {
        cadence: 1,
        ..Default::default()
    }
}

fn max_drift(rec: &RunRecord) -> f64 {
    let e0 = rec.series.energy[0];
    rec.series
        .energy
        .iter()
        .map(|e| (e - e0).abs() / e0)
        .fold(0.0, f64::max)
}

#[test]
fn drift_shrinks_fourfold_when_dt_halves() {
    let g = make_grid(1, 16.0, 128, 8).unwrap();
    let s0 = preset(&g, 1.0);
    let model = Model::Defocusing { alpha: 5.0 };
    let drifts: Vec<f64> = [1e-2, 5e-3, 2.5e-3]
        .iter()
        .map(|&dt| max_drift(&run(&g, &s0, model, dt, 5.0, &every_step())))
        .collect();
    for w in drifts.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.5..=4.5).contains(&ratio), "drifts {drifts:?}");
    }
}

#[test]
fn small_gaussian_conserves_energy() {
    let g = make_grid(1, 32.0, 256, 8).unwrap();
    let s0 = preset(&g, 1e-2);
    let rec = run(&g, &s0, Model::Defocusing { alpha: 5.0 }, 1e-2, 20.0, &every_step());
    assert!(max_drift(&rec) < 1e-6, "{}", max_drift(&rec));
}

#[test]
fn energy_dominates_half_the_squared_norm() {
    let g = make_grid(1, 16.0, 128, 8).unwrap();
    let s0 = preset(&g, 1.5);
    let rec = run(&g, &s0, Model::Defocusing { alpha: 3.0 }, 1e-2, 4.0, &every_step());
    for (e, h) in rec.series.energy.iter().zip(&rec.series.h_norm) {
        assert!(*e >= 0.5 * h * h);
    }
}

#[test]
fn accumulators_never_decrease() {
    let g = make_grid(1, 16.0, 128, 8).unwrap();
    let s0 = preset(&g, 1.0);
    let rec = run(&g, &s0, Model::Defocusing { alpha: 5.0 }, 1e-2, 6.0, &every_step());
    for series in [&rec.series.strichartz_accum, &rec.series.morawetz_accum] {
        assert!(series.windows(2).all(|w| w[1] >= w[0]));
    }
    assert_eq!(rec.series.strichartz_accum[0], 0.0);
}

#[test]
fn reversing_velocity_retraces_the_path() {
    let g = make_grid(1, 16.0, 128, 8).unwrap();
    let s0 = preset(&g, 1.0);
    let model = Model::Defocusing { alpha: 5.0 };
    let dt = 1e-2;
    let sched = Schedule {
        cadence: usize::MAX,
        ..Default::default()
    };
    let mut end = run(&g, &s0, model, dt, 3.0, &sched).final_state;
    end.v.iter_mut().for_each(|v| *v = -*v);
    end.t = 0.0;
    let mut back = run(&g, &end, model, dt, 3.0, &sched).final_state;
    back.v.iter_mut().for_each(|v| *v = -*v);
    back.t = 0.0;
    let err = energy_norm(&g, &back.sub(&s0)).unwrap() / energy_norm(&g, &s0).unwrap();
    assert!(err < dt * dt, "{err}");
}

#[test]
fn linear_model_reproduces_free_flow() {
    let g = make_grid(1, 16.0, 128, 8).unwrap();
    let s0 = preset(&g, 1.0);
    let rec = run(&g, &s0, Model::Linear, 7e-3, 5.0, &every_step());
    let exact = Propagator::new(&g).apply_linear(&s0, 5.0).unwrap();
    let err = energy_norm(&g, &rec.final_state.sub(&exact)).unwrap() / energy_norm(&g, &exact).unwrap();
    assert!(err < 1e-10, "{err}");
    assert!((rec.final_state.t - 5.0).abs() < 1e-12);
}

#[test]
fn exterior_energy_stays_outside_light_cone() {
    let g = make_grid(1, 32.0, 512, 8).unwrap();
    let w = 3.0 / SUPPORT_FACTOR;
    let bumps = [
        Bump::centered(1, 1.0, w),
        Bump {
            torus_mode: 1,
            ..Bump::centered(1, 0.5, w)
        },
    ];
    let s0 = build_initial(&g, &bumps, None, 0).unwrap();
    let sched = Schedule {
        cadence: 5,
        probes: Probes {
            exterior: Some(ExteriorProbe {
                center: vec![0.0],
                radius: 3.0,
            }),
            ..Default::default()
        },
        ..Default::default()
    };
    let rec = run(&g, &s0, Model::Defocusing { alpha: 5.0 }, 1e-2, 20.0, &sched);
    let e = rec.series.energy[0];
    let ext = &rec.series.exterior_energy;
    assert!(
        ext.iter().all(|&x| x <= 1e-8 * e),
        "max {}",
        ext.iter().cloned().fold(0.0, f64::max)
    );
    assert!(ext.windows(2).all(|w| w[1] <= w[0] + 1e-9 * e));
}
