use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::Fft;

use super::{FieldState, TorusWaveguideGrid};
use crate::error::Result;

/// Spectral coefficients of a real pair `(u, v)`.
#[derive(Clone, Debug)]
pub struct SpectralPair {
    pub u: Vec<Complex64>,
    pub v: Vec<Complex64>,
}

impl SpectralPair {
    pub fn zeros(len: usize) -> Self {
        Self {
            u: vec![Complex64::new(0.0, 0.0); len],
            v: vec![Complex64::new(0.0, 0.0); len],
        }
    }
}

/// Runs `fft` along one axis of a row-major array: the axis has length `n`
/// and stride `stride`; blocks of `n * stride` repeat outward.
fn process_axis(data: &mut [Complex64], n: usize, stride: usize, fft: &Arc<dyn Fft<f64>>) {
    if stride == 1 {
        fft.process(data);
        return;
    }
    let block = n * stride;
    let mut lanes = vec![Complex64::new(0.0, 0.0); block];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for chunk in data.chunks_exact_mut(block) {
        for i in 0..n {
            for j in 0..stride {
                lanes[j * n + i] = chunk[i * stride + j];
            }
        }
        fft.process_with_scratch(&mut lanes, &mut scratch);
        for i in 0..n {
            for j in 0..stride {
                chunk[i * stride + j] = lanes[j * n + i];
            }
        }
    }
}

impl TorusWaveguideGrid {
    fn fft_in_place(&self, data: &mut [Complex64], inverse: bool) {
        let (fx, fy) = if inverse {
            (&self.plans.inv_x, &self.plans.inv_y)
        } else {
            (&self.plans.fwd_x, &self.plans.fwd_y)
        };
        process_axis(data, self.ny, 1, fy);
        let mut stride = self.ny;
        for _ in 0..self.dim {
            process_axis(data, self.nx, stride, fx);
            stride *= self.nx;
        }
    }

    /// Forward transform of a complex array, normalized by `1/N`.
    pub fn forward_complex(&self, data: &mut [Complex64]) {
        self.fft_in_place(data, false);
        let scale = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|c| *c *= scale);
    }

    /// Inverse of [`forward_complex`](Self::forward_complex) (no normalization).
    pub fn inverse_complex(&self, data: &mut [Complex64]) {
        self.fft_in_place(data, true);
    }

    /// Spectral coefficients of a real field.
    pub fn forward_transform(&self, field: &[f64]) -> Result<Vec<Complex64>> {
        self.check_len(field.len())?;
        let mut data: Vec<Complex64> = field.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward_complex(&mut data);
        Ok(data)
    }

    /// Real field from spectral coefficients; the imaginary part (roundoff
    /// for conjugate-symmetric input) is dropped.
    pub fn inverse_transform(&self, coeffs: &[Complex64]) -> Result<Vec<f64>> {
        self.check_len(coeffs.len())?;
        let mut data = coeffs.to_vec();
        self.inverse_complex(&mut data);
        Ok(data.into_iter().map(|c| c.re).collect())
    }

    /// Transforms two real fields with one complex FFT by packing `u + i v`.
    pub fn forward_pair(&self, u: &[f64], v: &[f64]) -> Result<SpectralPair> {
        self.check_len(u.len())?;
        self.check_len(v.len())?;
        let mut z: Vec<Complex64> = u.iter().zip(v).map(|(&a, &b)| Complex64::new(a, b)).collect();
        self.forward_complex(&mut z);
        let neg = self.neg_index();
        let mut out = SpectralPair::zeros(z.len());
        for k in 0..z.len() {
            let zk = z[k];
            let zn = z[neg[k]].conj();
            out.u[k] = (zk + zn) * 0.5;
            // (zk - zn) / 2i
            let d = (zk - zn) * 0.5;
            out.v[k] = Complex64::new(d.im, -d.re);
        }
        Ok(out)
    }

    /// Inverse of [`forward_pair`](Self::forward_pair) for conjugate-symmetric coefficients.
    pub fn inverse_pair(&self, spec: &SpectralPair) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_len(spec.u.len())?;
        self.check_len(spec.v.len())?;
        let mut z: Vec<Complex64> = spec
            .u
            .iter()
            .zip(&spec.v)
            .map(|(a, b)| a + Complex64::new(-b.im, b.re))
            .collect();
        self.inverse_complex(&mut z);
        Ok(z.into_iter().map(|c| (c.re, c.im)).unzip())
    }

    pub fn forward_state(&self, state: &FieldState) -> Result<SpectralPair> {
        self.forward_pair(&state.u, &state.v)
    }

    /// Spectral derivatives `(∂_{x_1} u, .., ∂_{x_d} u, ∂_y u)` from the
    /// coefficients of `u`. Nyquist modes are dropped from the derivative.
    pub fn gradient(&self, u_hat: &[Complex64]) -> Result<Vec<Vec<f64>>> {
        self.check_len(u_hat.len())?;
        let nyq_x = self.nx / 2;
        let nyq_y = self.ny / 2;
        let mut comps: Vec<Vec<Complex64>> = Vec::with_capacity(self.dim + 1);
        for axis in 0..=self.dim {
            let mut d = vec![Complex64::new(0.0, 0.0); u_hat.len()];
            for e in 0..self.euclid_len() {
                let [i1, i2] = self.euclid_multi_index(e);
                for j in 0..self.ny {
                    let k = e * self.ny + j;
                    let (idx, wav, nyq) = match axis {
                        a if a == self.dim => (j, self.m[j], nyq_y),
                        0 => (i1, self.xi[i1], nyq_x),
                        _ => (i2, self.xi[i2], nyq_x),
                    };
                    if idx != nyq {
                        d[k] = u_hat[k] * Complex64::new(0.0, wav);
                    }
                }
            }
            comps.push(d);
        }
        // Pack two real derivatives per inverse transform.
        let mut out = Vec::with_capacity(comps.len());
        let mut it = comps.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => {
                    let (da, db) = self.inverse_pair(&SpectralPair { u: a, v: b })?;
                    out.push(da);
                    out.push(db);
                }
                None => out.push(self.inverse_transform(&a)?),
            }
        }
        Ok(out)
    }
}
