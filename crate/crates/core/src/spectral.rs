//! Fourier coefficients of real fields on the torus and the multiplier
//! operators built on them: derivatives, the Laplacian, the heat-kernel
//! mollifier `J^eps` (multiplier `exp(-eps |k|^2)`), and Sobolev norms.
//!
//! Coefficients use the basis `exp(2 pi i k.x)` on the integer lattice and are
//! normalized so that the zero mode is the mean of the field. Storage is in
//! FFT order; [`TorusGrid::wavevector`] maps a flat index to its signed `k`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftDirection;
use thiserror::Error;

use crate::fft;
use crate::grid::{squared_norm, GridError, GridField, TorusGrid, Wavevector};

/// Highest derivative order the multiplier tables support.
pub const MAX_DERIVATIVE_ORDER: u32 = 12;

/// Relative imaginary residue tolerated when synthesizing a real field.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("coefficient array has length {got}, grid expects {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("synthesized field has relative imaginary residue {residue:.3e} (coefficients are not Hermitian)")]
    NonHermitian { residue: f64 },
    #[error("non-finite coefficient at index {0}")]
    NonFinite(usize),
    #[error("mollifier parameter must be a finite nonnegative number, got {0}")]
    InvalidEpsilon(f64),
    #[error("multi-index {alpha:?} does not fit a {dim}-dimensional grid")]
    MultiIndexDimension { alpha: Vec<u32>, dim: usize },
    #[error("derivative order {0} exceeds the supported maximum {MAX_DERIVATIVE_ORDER}")]
    OrderTooHigh(u32),
    #[error("spectral fields live on different grids")]
    GridMismatch,
    #[error("cannot resample between dimensions {from} and {to}")]
    DimensionMismatch { from: usize, to: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Complex Fourier coefficients of a (real) field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_coeffs(grid: TorusGrid, coeffs: Vec<Complex64>) -> Result<Self, SpectralError> {
        if coeffs.len() != grid.len() {
            return Err(SpectralError::LengthMismatch {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient of wavevector `k`, with `k_i` in `-n/2..n/2`.
    pub fn coeff(&self, k: &[i64]) -> Option<Complex64> {
        self.grid.coeff_index(k).map(|i| self.coeffs[i])
    }

    pub fn set_coeff(&mut self, k: &[i64], value: Complex64) -> bool {
        match self.grid.coeff_index(k) {
            Some(i) => {
                self.coeffs[i] = value;
                true
            }
            None => false,
        }
    }

    /// Mean of the synthesized field.
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// `L^2` norm via Parseval.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, a: f64) -> SpectralField {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    /// `self += a * other`.
    pub fn add_scaled(&mut self, other: &SpectralField, a: f64) -> Result<(), SpectralError> {
        if self.grid != other.grid {
            return Err(SpectralError::GridMismatch);
        }
        for (c, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *c += o * a;
        }
        Ok(())
    }

    pub fn difference(&self, other: &SpectralField) -> Result<SpectralField, SpectralError> {
        let mut out = self.clone();
        out.add_scaled(other, -1.0)?;
        Ok(out)
    }

    /// Largest Hermitian-symmetry defect `|c(-k) - conj(c(k))|`.
    pub fn hermitian_defect(&self) -> f64 {
        (0..self.coeffs.len())
            .map(|i| {
                let j = self.grid.conjugate_index(i);
                (self.coeffs[j] - self.coeffs[i].conj()).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Applies a real multiplier depending only on the wavevector.
    pub fn map_multiplier(&self, symbol: impl Fn(&Wavevector) -> f64) -> SpectralField {
        let grid = self.grid;
        Self {
            grid,
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c * symbol(&grid.wavevector(i)))
                .collect(),
        }
    }
}

/// Rectangle-rule discrete Fourier transform, normalized so `c(0)` is the mean.
pub fn forward_transform(f: &GridField) -> SpectralField {
    let grid = *f.grid();
    let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft::transform(&grid, &mut data, FftDirection::Forward);
    let scale = 1.0 / grid.len() as f64;
    for c in &mut data {
        *c *= scale;
    }
    SpectralField { grid, coeffs: data }
}

/// Synthesizes grid values from coefficients.
///
/// The imaginary part of the synthesis must stay below [`IMAG_RESIDUE_TOL`]
/// relative to the largest value; anything larger means the coefficients were
/// not Hermitian and is reported as an error.
pub fn inverse_transform(f: &SpectralField) -> Result<GridField, SpectralError> {
    if let Some(i) = f.coeffs.iter().position(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(SpectralError::NonFinite(i));
    }
    let grid = f.grid;
    let mut data = f.coeffs.clone();
    fft::transform(&grid, &mut data, FftDirection::Inverse);
    let scale = data.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let imag = data.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    if scale > 0.0 && imag > IMAG_RESIDUE_TOL * scale {
        return Err(SpectralError::NonHermitian {
            residue: imag / scale,
        });
    }
    let values = data.into_iter().map(|c| c.re).collect();
    Ok(GridField::new(grid, values)?)
}

fn check_epsilon(eps: f64) -> Result<(), SpectralError> {
    if eps.is_finite() && eps >= 0.0 {
        Ok(())
    } else {
        Err(SpectralError::InvalidEpsilon(eps))
    }
}

/// Heat-kernel multiplier `exp(-eps |k|^2)` at one wavevector.
pub fn mollifier_symbol(eps: f64, k: &Wavevector) -> f64 {
    (-eps * squared_norm(k)).exp()
}

/// `J^eps`: multiplies mode `k` by `exp(-eps |k|^2)`. `eps = 0` is the identity.
pub fn mollify(f: &SpectralField, eps: f64) -> Result<SpectralField, SpectralError> {
    check_epsilon(eps)?;
    if eps == 0.0 {
        return Ok(f.clone());
    }
    Ok(f.map_multiplier(|k| mollifier_symbol(eps, k)))
}

/// `d^alpha f`, multiplier `(2 pi i k)^alpha`.
///
/// Axes differentiated an odd number of times drop the unpaired `-n/2` mode,
/// whose derivative has no real representative on the grid.
pub fn derivative(f: &SpectralField, alpha: &[u32]) -> Result<SpectralField, SpectralError> {
    let grid = f.grid;
    if alpha.len() != grid.dim() {
        return Err(SpectralError::MultiIndexDimension {
            alpha: alpha.to_vec(),
            dim: grid.dim(),
        });
    }
    let order: u32 = alpha.iter().sum();
    if order > MAX_DERIVATIVE_ORDER {
        return Err(SpectralError::OrderTooHigh(order));
    }
    let nyq = -grid.nyquist();
    // i^order
    let unit = match order % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    let coeffs = f
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let k = grid.wavevector(i);
            let mut mag = 1.0;
            for (axis, &a) in alpha.iter().enumerate() {
                if a % 2 == 1 && k[axis] == nyq {
                    return Complex64::new(0.0, 0.0);
                }
                mag *= (2.0 * PI * k[axis] as f64).powi(a as i32);
            }
            c * unit * mag
        })
        .collect();
    Ok(SpectralField { grid, coeffs })
}

/// Symbol of the Laplacian, `-4 pi^2 |k|^2`.
pub fn laplacian_symbol(k: &Wavevector) -> f64 {
    -4.0 * PI * PI * squared_norm(k)
}

pub fn laplacian(f: &SpectralField) -> SpectralField {
    f.map_multiplier(laplacian_symbol)
}

/// First derivatives along every axis.
pub fn gradient(f: &SpectralField) -> Vec<SpectralField> {
    let dim = f.grid.dim();
    (0..dim)
        .map(|axis| {
            let mut alpha = vec![0; dim];
            alpha[axis] = 1;
            derivative(f, &alpha).expect("first-order multi-index is always valid")
        })
        .collect()
}

/// Complete homogeneous sums `h_j(a_1..a_d)` for `j = 0..=order`, where
/// `a_i = (2 pi k_i)^2`. `h_j` is `sum_{|alpha| = j} |(2 pi i k)^alpha|^2`.
pub fn derivative_energy_weights(k: &Wavevector, dim: usize, order: u32) -> Vec<f64> {
    let len = order as usize + 1;
    let mut h = vec![0.0; len];
    h[0] = 1.0;
    for &ki in &k[..dim] {
        let a = (2.0 * PI * ki as f64).powi(2);
        // h_new[j] = h_old[j] + a * h_new[j-1]
        for j in 1..len {
            h[j] += a * h[j - 1];
        }
    }
    h
}

/// `H^m` weight `sum_{|alpha| <= m} |(2 pi i k)^alpha|^2`; each multi-index
/// counted once.
pub fn sobolev_weight(k: &Wavevector, dim: usize, m: u32) -> f64 {
    derivative_energy_weights(k, dim, m).iter().sum()
}

/// `(f, g)_{H^m} = sum_{|alpha| <= m} int d^alpha f d^alpha g`, via Parseval.
pub fn sobolev_inner(f: &SpectralField, g: &SpectralField, m: u32) -> Result<f64, SpectralError> {
    if f.grid != g.grid {
        return Err(SpectralError::GridMismatch);
    }
    let grid = f.grid;
    let dim = grid.dim();
    Ok(f
        .coeffs
        .iter()
        .zip(&g.coeffs)
        .enumerate()
        .map(|(i, (a, b))| sobolev_weight(&grid.wavevector(i), dim, m) * (a * b.conj()).re)
        .sum())
}

pub fn sobolev_norm(f: &SpectralField, m: u32) -> f64 {
    let grid = f.grid;
    let dim = grid.dim();
    f.coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| sobolev_weight(&grid.wavevector(i), dim, m) * c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Diagnostic norm `(sum_k (1 + |k|^2)^m |c(k)|^2)^{1/2}`; equivalent to, not
/// equal to, [`sobolev_norm`].
pub fn fourier_weight_norm(f: &SpectralField, m: u32) -> f64 {
    let grid = f.grid;
    f.coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| (1.0 + squared_norm(&grid.wavevector(i))).powi(m as i32) * c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// `sum_{|alpha| = order} ||d^alpha f||^2_{L^2}`.
pub fn derivative_energy(f: &SpectralField, order: u32) -> f64 {
    let grid = f.grid;
    let dim = grid.dim();
    f.coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| derivative_energy_weights(&grid.wavevector(i), dim, order)[order as usize] * c.norm_sqr())
        .sum()
}

/// Zeroes every mode with some `|k_i| > n/3` (the 2/3 rule).
pub fn dealias_two_thirds(f: &SpectralField) -> SpectralField {
    let cutoff = f.grid.n() as i64 / 3;
    let dim = f.grid.dim();
    f.map_multiplier(|k| {
        if k[..dim].iter().all(|ki| ki.abs() <= cutoff) {
            1.0
        } else {
            0.0
        }
    })
}

/// Moves coefficients onto a grid of different resolution (zero padding or
/// truncation). An unpaired `-n/2` mode is split evenly between `+-n/2` when
/// refining, and `+-n_target/2` modes fold onto `-n_target/2` when coarsening,
/// so real fields stay real.
pub fn resample(f: &SpectralField, target: TorusGrid) -> Result<SpectralField, SpectralError> {
    let src = f.grid;
    if src.dim() != target.dim() {
        return Err(SpectralError::DimensionMismatch {
            from: src.dim(),
            to: target.dim(),
        });
    }
    let dim = src.dim();
    let src_nyq = src.nyquist();
    let tgt_nyq = target.nyquist();
    let mut out = SpectralField::zeros(target);
    for (i, &c) in f.coeffs.iter().enumerate() {
        if c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let k = src.wavevector(i);
        // expand unpaired source Nyquist components when the target can hold +n/2
        let mut images: Vec<(Wavevector, f64)> = vec![(k, 1.0)];
        for axis in 0..dim {
            if k[axis] == -src_nyq && src_nyq < tgt_nyq {
                images = images
                    .into_iter()
                    .flat_map(|(kk, w)| {
                        let mut flipped = kk;
                        flipped[axis] = src_nyq;
                        [(kk, 0.5 * w), (flipped, 0.5 * w)]
                    })
                    .collect();
            }
        }
        'image: for (mut kk, w) in images {
            for axis in 0..dim {
                if kk[axis].abs() > tgt_nyq {
                    continue 'image;
                }
                if kk[axis] == tgt_nyq {
                    kk[axis] = -tgt_nyq;
                }
            }
            let j = target
                .coeff_index(&kk[..dim])
                .expect("wavevector folded into target range");
            out.coeffs[j] += c * w;
        }
    }
    Ok(out)
}

/// Real random field whose modes satisfy `|k_i| <= band`, coefficients
/// uniform in the unit square before Hermitian symmetrization.
pub fn random_band_limited(grid: TorusGrid, band: i64, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = grid.dim();
    let band = band.min(grid.nyquist() - 1);
    let mut raw = SpectralField::zeros(grid);
    for i in 0..grid.len() {
        let k = grid.wavevector(i);
        if k[..dim].iter().all(|ki| ki.abs() <= band) {
            raw.coeffs[i] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
    }
    let mut out = SpectralField::zeros(grid);
    for i in 0..grid.len() {
        let j = grid.conjugate_index(i);
        out.coeffs[i] = 0.5 * (raw.coeffs[i] + raw.coeffs[j].conj());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid1(n: usize) -> TorusGrid {
        TorusGrid::new(1, n).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn constant_transforms_to_zero_mode() {
        let grid = TorusGrid::new(2, 8).unwrap();
        let f = forward_transform(&GridField::constant(grid, 1.0));
        assert!((f.coeffs[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(f.coeffs[1..].iter().all(|c| c.norm() < 1e-15));
    }

    #[test]
    fn cosine_has_half_amplitudes() {
        let grid = grid1(16);
        let f = GridField::from_fn(grid, |x| (2.0 * PI * x[0]).cos()).unwrap();
        let s = forward_transform(&f);
        for i in 0..grid.len() {
            let k = grid.wavevector(i)[0];
            let expected = if k.abs() == 1 { 0.5 } else { 0.0 };
            assert!((s.coeffs[i] - Complex64::new(expected, 0.0)).norm() < 1e-15, "k = {k}");
        }
    }

    #[test]
    fn synthesis_of_single_modes() {
        let grid = grid1(16);
        let mut s = SpectralField::zeros(grid);
        s.set_coeff(&[0], Complex64::new(3.5, 0.0));
        let g = inverse_transform(&s).unwrap();
        assert!(g.values().iter().all(|&v| (v - 3.5).abs() < 1e-15));

        let mut s = SpectralField::zeros(grid);
        s.set_coeff(&[1], Complex64::new(0.5, 0.0));
        s.set_coeff(&[-1], Complex64::new(0.5, 0.0));
        let g = inverse_transform(&s).unwrap();
        for (i, v) in g.values().iter().enumerate() {
            assert!((v - (2.0 * PI * i as f64 / 16.0).cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn imaginary_residue_is_rejected() {
        let grid = grid1(16);
        let mut s = SpectralField::zeros(grid);
        s.set_coeff(&[1], Complex64::new(0.5, 1e-3));
        s.set_coeff(&[-1], Complex64::new(0.5, 1e-3));
        assert!(matches!(
            inverse_transform(&s),
            Err(SpectralError::NonHermitian { .. })
        ));
    }

    #[test]
    fn mollify_identity_and_constants() {
        let grid = grid1(32);
        let f = random_band_limited(grid, 8, 3);
        assert_eq!(mollify(&f, 0.0).unwrap(), f);
        let c = forward_transform(&GridField::constant(grid, 2.5));
        let m = mollify(&c, 0.7).unwrap();
        assert!((m.mean() - 2.5).abs() < 1e-15);
        assert!(matches!(mollify(&f, -0.1), Err(SpectralError::InvalidEpsilon(_))));
    }

    #[test]
    fn mollify_damps_unit_mode() {
        let grid = grid1(32);
        let f = forward_transform(&GridField::from_fn(grid, |x| (2.0 * PI * x[0]).cos()).unwrap());
        let g = inverse_transform(&mollify(&f, 0.5).unwrap()).unwrap();
        let factor = (-0.5f64).exp();
        for (i, v) in g.values().iter().enumerate() {
            let x = i as f64 / 32.0;
            assert!((v - factor * (2.0 * PI * x).cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn derivative_of_sine_and_constant() {
        let grid = grid1(32);
        let f = forward_transform(&GridField::from_fn(grid, |x| (2.0 * PI * x[0]).sin()).unwrap());
        let d = inverse_transform(&derivative(&f, &[1]).unwrap()).unwrap();
        for (i, v) in d.values().iter().enumerate() {
            let x = i as f64 / 32.0;
            assert!((v - 2.0 * PI * (2.0 * PI * x).cos()).abs() < 1e-13);
        }
        let c = forward_transform(&GridField::constant(grid, 4.0));
        let dc = inverse_transform(&derivative(&c, &[1]).unwrap()).unwrap();
        assert!(dc.sup_norm() < 1e-15);
        assert_eq!(
            derivative(&c, &[13]),
            Err(SpectralError::OrderTooHigh(13))
        );
        assert!(derivative(&c, &[1, 0]).is_err());
    }

    #[test]
    fn laplacian_of_cosine_and_constant() {
        let grid = TorusGrid::new(2, 16).unwrap();
        let f = forward_transform(&GridField::from_fn(grid, |x| (2.0 * PI * x[0]).cos()).unwrap());
        let l = inverse_transform(&laplacian(&f)).unwrap();
        let g = GridField::from_fn(grid, |x| -4.0 * PI * PI * (2.0 * PI * x[0]).cos()).unwrap();
        for (a, b) in l.values().iter().zip(g.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        let c = forward_transform(&GridField::constant(grid, 1.0));
        assert!(inverse_transform(&laplacian(&c)).unwrap().sup_norm() < 1e-15);
    }

    #[test]
    fn laplacian_matches_summed_second_derivatives() {
        let grid = TorusGrid::new(2, 16).unwrap();
        for seed in 0..10 {
            let f = random_band_limited(grid, 7, seed);
            let lap = laplacian(&f);
            let mut sum = derivative(&f, &[2, 0]).unwrap();
            sum.add_scaled(&derivative(&f, &[0, 2]).unwrap(), 1.0).unwrap();
            let diff = lap.difference(&sum).unwrap().l2_norm();
            assert!(diff <= 1e-12 * lap.l2_norm());
        }
    }

    #[test]
    fn sobolev_norms_of_simple_fields() {
        let grid = grid1(32);
        let c = forward_transform(&GridField::constant(grid, -3.0));
        for m in 0..6 {
            assert!(close(sobolev_norm(&c, m), 3.0, 1e-15));
        }
        // closed form: int sin^2 = 1/2, int (2 pi cos)^2 = 2 pi^2
        let s = forward_transform(&GridField::from_fn(grid, |x| (2.0 * PI * x[0]).sin()).unwrap());
        let expected = (0.5 + 2.0 * PI * PI).sqrt();
        assert!(close(sobolev_norm(&s, 1), expected, 1e-14));
        assert!(close(sobolev_norm(&s, 1), ((1.0 + 4.0 * PI * PI) / 2.0).sqrt(), 1e-14));
    }

    #[test]
    fn sobolev_norm_matches_explicit_derivative_sum_in_2d() {
        // oracle: enumerate every multi-index, differentiate, integrate on the grid
        let grid = TorusGrid::new(2, 16).unwrap();
        for seed in 0..5 {
            let f = random_band_limited(grid, 6, seed);
            for m in 0..=4u32 {
                let mut total = 0.0;
                for a0 in 0..=m {
                    for a1 in 0..=(m - a0) {
                        let d = inverse_transform(&derivative(&f, &[a0, a1]).unwrap()).unwrap();
                        total += d.dot(&d).unwrap();
                    }
                }
                assert!(close(sobolev_norm(&f, m), total.sqrt(), 1e-12), "m = {m}");
            }
        }
    }

    #[test]
    fn complete_homogeneous_weights() {
        let k: Wavevector = [1, 2, 0];
        let a = (2.0 * PI).powi(2);
        let b = (4.0 * PI).powi(2);
        let h = derivative_energy_weights(&k, 2, 2);
        assert!(close(h[0], 1.0, 1e-15));
        assert!(close(h[1], a + b, 1e-15));
        assert!(close(h[2], a * a + a * b + b * b, 1e-15));
    }

    #[test]
    fn resample_round_trip_preserves_band_limited_fields() {
        let coarse = grid1(16);
        let fine = grid1(32);
        let f = random_band_limited(coarse, 7, 11);
        let up = resample(&f, fine).unwrap();
        let back = resample(&up, coarse).unwrap();
        assert!(back.difference(&f).unwrap().l2_norm() < 1e-15);
        // point values agree at shared grid points
        let gc = inverse_transform(&f).unwrap();
        let gf = inverse_transform(&up).unwrap();
        for (i, v) in gc.values().iter().enumerate() {
            assert!((v - gf.values()[2 * i]).abs() < 1e-13);
        }
    }

    #[test]
    fn resample_splits_nyquist_mode() {
        let coarse = grid1(8);
        let mut f = SpectralField::zeros(coarse);
        f.set_coeff(&[-4], Complex64::new(1.0, 0.0));
        let up = resample(&f, grid1(16)).unwrap();
        assert_eq!(up.coeff(&[-4]), Some(Complex64::new(0.5, 0.0)));
        assert_eq!(up.coeff(&[4]), Some(Complex64::new(0.5, 0.0)));
        let g = inverse_transform(&up).unwrap();
        // cos(8 pi x) sampled on the fine grid
        for (i, v) in g.values().iter().enumerate() {
            assert!((v - (8.0 * PI * i as f64 / 16.0).cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn dealias_keeps_low_modes_only() {
        let grid = grid1(16);
        let f = random_band_limited(grid, 7, 2);
        let d = dealias_two_thirds(&f);
        for i in 0..grid.len() {
            let k = grid.wavevector(i)[0];
            if k.abs() > 5 {
                assert_eq!(d.coeffs()[i], Complex64::new(0.0, 0.0));
            } else {
                assert_eq!(d.coeffs()[i], f.coeffs()[i]);
            }
        }
    }

    proptest! {
        #[test]
        fn round_trip_and_parseval(seed in any::<u64>(), two_d in any::<bool>()) {
            let grid = if two_d { TorusGrid::new(2, 16).unwrap() } else { grid1(64) };
            let band = if two_d { 6 } else { 24 };
            let f = random_band_limited(grid, band, seed);
            let g = inverse_transform(&f).unwrap();
            let back = forward_transform(&g);
            prop_assert!(back.difference(&f).unwrap().l2_norm() <= 1e-12 * f.l2_norm());
            let again = inverse_transform(&back).unwrap();
            for (a, b) in g.values().iter().zip(again.values()) {
                prop_assert!((a - b).abs() <= 1e-12 * g.sup_norm());
            }
            prop_assert!(close(g.l2_norm(), f.l2_norm(), 1e-12));
            prop_assert!(close(sobolev_norm(&f, 0), g.l2_norm(), 1e-12));
            prop_assert!(f.hermitian_defect() < 1e-15);
        }

        #[test]
        fn derivative_commutes_with_mollifier(seed in any::<u64>(), eps in 0.0f64..1.0, a in 0u32..4, b in 0u32..4) {
            let grid = TorusGrid::new(2, 16).unwrap();
            let f = random_band_limited(grid, 7, seed);
            let lhs = derivative(&mollify(&f, eps).unwrap(), &[a, b]).unwrap();
            let rhs = mollify(&derivative(&f, &[a, b]).unwrap(), eps).unwrap();
            prop_assert!(lhs.difference(&rhs).unwrap().l2_norm() <= 1e-12 * (1.0 + lhs.l2_norm()));
        }
    }
}
