use super::{FieldState, SpectralPair, TorusWaveguideGrid};
use crate::error::{invalid, Result};

/// `|x|^p`, through repeated multiplication when `p` is a small integer.
#[inline]
pub fn abs_pow(x: f64, p: f64) -> f64 {
    if p.fract() == 0.0 && p.abs() <= 32.0 {
        x.abs().powi(p as i32)
    } else {
        x.abs().powf(p)
    }
}

/// Uniform-weight `L^p` quadrature; `p = ∞` gives the largest `|sample|`.
pub fn lp_norm(grid: &TorusWaveguideGrid, field: &[f64], p: f64) -> Result<f64> {
    grid.check_len(field.len())?;
    if p.is_nan() || p < 1.0 {
        return Err(invalid("p", format!("L^p exponent must be >= 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(field.iter().fold(0.0, |m, x| m.max(x.abs())));
    }
    // Scale by the largest sample so high exponents do not under/overflow.
    let peak = field.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if peak == 0.0 {
        return Ok(0.0);
    }
    let sum: f64 = if p == 2.0 {
        field.iter().map(|x| (x / peak) * (x / peak)).sum()
    } else {
        field.iter().map(|x| abs_pow(x / peak, p)).sum()
    };
    Ok(peak * (grid.cell_volume() * sum).powf(1.0 / p))
}

/// `(Σ (1 + |ξ|² + m²) |û|²)^{1/2}` scaled by the domain measure.
pub fn h1_norm(grid: &TorusWaveguideGrid, u: &[f64]) -> Result<f64> {
    let c = grid.forward_transform(u)?;
    let sum: f64 = c
        .iter()
        .zip(grid.wavenumber_sq())
        .map(|(z, k2)| (1.0 + k2) * z.norm_sqr())
        .sum();
    Ok((grid.volume() * sum).sqrt())
}

/// The `H¹ × L²` norm of spectral coefficients.
pub fn spectral_energy_norm(grid: &TorusWaveguideGrid, spec: &SpectralPair) -> f64 {
    let sum: f64 = spec
        .u
        .iter()
        .zip(&spec.v)
        .zip(grid.wavenumber_sq())
        .map(|((a, b), k2)| (1.0 + k2) * a.norm_sqr() + b.norm_sqr())
        .sum();
    (grid.volume() * sum).sqrt()
}

/// `‖(u, v)‖_𝓗 = (‖u‖²_{H¹} + ‖v‖²_{L²})^{1/2}`.
pub fn energy_norm(grid: &TorusWaveguideGrid, state: &FieldState) -> Result<f64> {
    let spec = grid.forward_state(state)?;
    Ok(spectral_energy_norm(grid, &spec))
}
