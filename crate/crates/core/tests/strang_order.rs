//! Splitting error measured against classical RK4 on the same
//! semidiscretization `u' = v`, `v' = Δu − u − |u|^α u`.

use nlkg_core::grid::energy_norm;
use nlkg_core::initial::{build_initial, Bump};
use nlkg_core::stepper::{evolve, strang_step, Model, Schedule, StepperConfig};
use nlkg_core::{make_grid, FieldState, Propagator, TorusWaveguideGrid};

const ALPHA: f64 = 5.0;

fn laplacian(grid: &TorusWaveguideGrid, u: &[f64]) -> Vec<f64> {
    let mut c = grid.forward_transform(u).unwrap();
    for (c, k2) in c.iter_mut().zip(grid.wavenumber_sq()) {
        *c *= -k2;
    }
    grid.inverse_transform(&c).unwrap()
}

fn rhs(grid: &TorusWaveguideGrid, u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let lap = laplacian(grid, u);
    let dv = u
        .iter()
        .zip(&lap)
        .map(|(&u, &l)| l - u - u.abs().powf(ALPHA) * u)
        .collect();
    (v.to_vec(), dv)
}

fn axpy(a: &[f64], h: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + h * y).collect()
}

fn rk4(grid: &TorusWaveguideGrid, s: &FieldState, t: f64, steps: usize) -> FieldState {
    let h = t / steps as f64;
    let (mut u, mut v) = (s.u.clone(), s.v.clone());
    for _ in 0..steps {
        let (k1u, k1v) = rhs(grid, &u, &v);
        let (k2u, k2v) = rhs(grid, &axpy(&u, h / 2.0, &k1u), &axpy(&v, h / 2.0, &k1v));
        let (k3u, k3v) = rhs(grid, &axpy(&u, h / 2.0, &k2u), &axpy(&v, h / 2.0, &k2v));
        let (k4u, k4v) = rhs(grid, &axpy(&u, h, &k3u), &axpy(&v, h, &k3v));
        for i in 0..u.len() {
            u[i] += h / 6.0 * (k1u[i] + 2.0 * k2u[i] + 2.0 * k3u[i] + k4u[i]);
            v[i] += h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
        }
    }
    FieldState { u, v, t: s.t + t }
}

fn datum(grid: &TorusWaveguideGrid) -> FieldState {
    let bumps = [
        Bump::centered(1, 1.0, 1.5),
        Bump {
            torus_mode: 1,
            ..Bump::centered(1, 0.5, 1.5)
        },
    ];
    build_initial(grid, &bumps, None, 0).unwrap()
}

fn orders(errs: &[f64]) -> Vec<f64> {
    errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[test]
fn one_step_error_is_third_order() {
    let g = make_grid(1, 4.0, 16, 4).unwrap();
    let p = Propagator::new(&g);
    let s0 = datum(&g);
    let errs: Vec<f64> = [2e-2, 1e-2, 5e-3]
        .iter()
        .map(|&dt| {
            let split = strang_step(&p, &s0, dt, ALPHA).unwrap();
            let reference = rk4(&g, &s0, dt, 200);
            energy_norm(&g, &split.sub(&reference)).unwrap()
        })
        .collect();
    for o in orders(&errs) {
        assert!(
            (2.7..=3.3).contains(&o),
            "local orders {:?} from {errs:?}",
            orders(&errs)
        );
    }
}

#[test]
fn global_error_is_second_order() {
    let g = make_grid(1, 4.0, 16, 4).unwrap();
    let s0 = datum(&g);
    let t = 1.0;
    let reference = rk4(&g, &s0, t, 20_000);
    let errs: Vec<f64> = [2e-2, 1e-2, 5e-3]
        .iter()
        .map(|&dt| {
            let cfg = StepperConfig::new(Model::Defocusing { alpha: ALPHA }, dt, t, false).unwrap();
            let sched = Schedule {
                cadence: usize::MAX,
                ..Default::default()
            };
            let end = evolve(&g, &s0, &cfg, &sched).unwrap().final_state;
            energy_norm(&g, &end.sub(&reference)).unwrap()
        })
        .collect();
    for o in orders(&errs) {
        assert!(
            (1.8..=2.2).contains(&o),
            "global orders {:?} from {errs:?}",
            orders(&errs)
        );
    }
}

#[test]
fn small_steps_approach_identity() {
    let g = make_grid(1, 4.0, 16, 4).unwrap();
    let p = Propagator::new(&g);
    let s0 = datum(&g);
    let h0 = energy_norm(&g, &s0).unwrap();
    let mut last = f64::INFINITY;
    for dt in [1e-2, 1e-4, 1e-6] {
        let d = energy_norm(&g, &strang_step(&p, &s0, dt, ALPHA).unwrap().sub(&s0)).unwrap() / h0;
        assert!(d < last);
        last = d;
    }
    assert!(last < 1e-4);
}
