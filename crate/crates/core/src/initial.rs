//! Smooth localized initial data: sums of Gaussian bumps, optionally with
//! seeded noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::grid::{FieldState, TorusWaveguideGrid};

/// `exp(−r²/w²) < 1e−12` beyond `r = SUPPORT_FACTOR · w`.
pub const SUPPORT_FACTOR: f64 = 5.26;

/// `A exp(−|x − x₀|²/w²) cos(m y)`, with `|x − x₀|` measured periodically.
#[derive(Clone, Debug, PartialEq)]
pub struct Bump {
    pub amplitude: f64,
    pub width: f64,
    pub center: Vec<f64>,
    /// Sets `v = −∂ₓ₁u` for this bump, so it starts moving towards `+x₁`.
    pub velocity: bool,
    pub torus_mode: i64,
}

impl Bump {
    pub fn centered(dim: usize, amplitude: f64, width: f64) -> Self {
        Self {
            amplitude,
            width,
            center: vec![0.0; dim],
            velocity: false,
            torus_mode: 0,
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if !self.amplitude.is_finite() {
            return Err(invalid("amplitude", "must be finite"));
        }
        if !(self.width.is_finite() && self.width > 0.0) {
            return Err(invalid("width", format!("must be positive, got {}", self.width)));
        }
        if self.center.len() != dim || self.center.iter().any(|c| !c.is_finite()) {
            return Err(invalid(
                "center",
                format!("needs {dim} finite coordinates, got {:?}", self.center),
            ));
        }
        Ok(())
    }

    /// Radius beyond which the bump is below `1e−12` of its amplitude,
    /// measured from the origin.
    pub fn support_radius(&self) -> f64 {
        let c = self.center.iter().map(|x| x * x).sum::<f64>().sqrt();
        c + SUPPORT_FACTOR * self.width
    }
}

/// `amplitude · ξ(x, y) · exp(−|x|²/width²)` with `ξ` i.i.d. uniform on `[−1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Noise {
    pub amplitude: f64,
    pub width: f64,
}

pub fn build_initial(
    grid: &TorusWaveguideGrid,
    bumps: &[Bump],
    noise: Option<&Noise>,
    seed: u64,
) -> Result<FieldState> {
    let dim = grid.dim();
    for b in bumps {
        b.validate(dim)?;
    }
    let mut state = FieldState::zeros(grid);
    let ny = grid.ny();
    for e in 0..grid.euclid_len() {
        let p = grid.euclid_point(e);
        for b in bumps {
            let mut r2 = 0.0;
            let mut dx1 = 0.0;
            for k in 0..dim {
                let dk = grid.min_image(p[k] - b.center[k]);
                if k == 0 {
                    dx1 = dk;
                }
                r2 += dk * dk;
            }
            let w2 = b.width * b.width;
            let env = b.amplitude * (-r2 / w2).exp();
            for j in 0..ny {
                let val = env * (b.torus_mode as f64 * grid.y_coord(j)).cos();
                let k = e * ny + j;
                state.u[k] += val;
                if b.velocity {
                    state.v[k] += 2.0 * dx1 / w2 * val;
                }
            }
        }
    }
    if let Some(n) = noise {
        if !(n.width > 0.0) || !n.amplitude.is_finite() {
            return Err(invalid("noise", "needs finite amplitude and positive width"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for e in 0..grid.euclid_len() {
            let p = grid.euclid_point(e);
            let r2: f64 = p[..dim].iter().map(|x| x * x).sum();
            let env = n.amplitude * (-r2 / (n.width * n.width)).exp();
            for j in 0..ny {
                state.u[e * ny + j] += env * rng.random_range(-1.0..=1.0);
            }
        }
    }
    state.check_finite()?;
    Ok(state)
}

/// Initial support radius `r₀` of a set of bumps (and the noise envelope).
pub fn support_radius(bumps: &[Bump], noise: Option<&Noise>) -> f64 {
    let r = bumps.iter().map(Bump::support_radius).fold(0.0, f64::max);
    match noise {
        Some(n) => r.max(SUPPORT_FACTOR * n.width),
        None => r,
    }
}

/// `T_wrap = L − r₀ − margin`: before this time no signal travelling at unit
/// speed can wrap around the periodized box. Negative when the data do not fit.
pub fn wrap_horizon(grid: &TorusWaveguideGrid, r0: f64, margin: f64) -> f64 {
    grid.half_width() - r0 - margin
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn single_bump_values() {
        let g = make_grid(1, 8.0, 64, 4).unwrap();
        let b = Bump {
            torus_mode: 1,
            ..Bump::centered(1, 2.0, 1.5)
        };
        let s = build_initial(&g, &[b], None, 0).unwrap();
        for e in 0..g.euclid_len() {
            let x = g.x_coord(e);
            for j in 0..4 {
                let want = 2.0 * (-(x * x) / 2.25).exp() * g.y_coord(j).cos();
                assert!((s.u[e * 4 + j] - want).abs() < 1e-15);
            }
        }
        assert!(s.v.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn velocity_flag_is_minus_x_derivative() {
        let g = make_grid(1, 16.0, 256, 4).unwrap();
        let b = Bump {
            velocity: true,
            center: vec![1.0],
            ..Bump::centered(1, 1.0, 2.0)
        };
        let s = build_initial(&g, &[b], None, 0).unwrap();
        let grad = g.gradient(&g.forward_transform(&s.u).unwrap()).unwrap();
        for (v, dx) in s.v.iter().zip(&grad[0]) {
            assert!((v + dx).abs() < 1e-10);
        }
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let g = make_grid(1, 8.0, 32, 4).unwrap();
        let n = Noise {
            amplitude: 0.1,
            width: 3.0,
        };
        let a = build_initial(&g, &[], Some(&n), 7).unwrap();
        let b = build_initial(&g, &[], Some(&n), 7).unwrap();
        let c = build_initial(&g, &[], Some(&n), 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn horizon_arithmetic() {
        let g = make_grid(1, 64.0, 1024, 16).unwrap();
        let r0 = support_radius(&[Bump::centered(1, 1.0, 2.0)], None);
        assert!((r0 - 10.52).abs() < 1e-12);
        assert!((wrap_horizon(&g, r0, 2.0) - 51.48).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_bumps() {
        let g = make_grid(2, 8.0, 16, 4).unwrap();
        assert!(build_initial(&g, &[Bump::centered(1, 1.0, 1.0)], None, 0).is_err());
        assert!(build_initial(&g, &[Bump::centered(2, 1.0, 0.0)], None, 0).is_err());
    }
}
