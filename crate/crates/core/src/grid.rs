//! Transforms between the truncated momentum ladder and a uniform real-space
//! grid over one cavity period.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Minimum grid size that evaluates a cubic term of a `n_max`-truncated field
/// without aliasing back into the retained modes.
pub fn min_grid_points(n_max: usize) -> usize {
    4 * n_max
}

/// FFT plans and scratch space for one `(n_max, grid_points)` pair.
pub struct SpectralGrid<T: Real> {
    n_max: usize,
    points: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    scratch: Vec<Complex<T>>,
}

impl<T: Real> Clone for SpectralGrid<T> {
    fn clone(&self) -> Self {
        Self {
            n_max: self.n_max,
            points: self.points,
            forward: Arc::clone(&self.forward),
            inverse: Arc::clone(&self.inverse),
            scratch: vec![Complex::new(T::zero(), T::zero()); self.scratch.len()],
        }
    }
}

impl<T: Real> SpectralGrid<T> {
    pub fn new(n_max: usize, points: usize) -> Result<Self> {
        let required = min_grid_points(n_max).max(2 * n_max + 1);
        if points < required {
            return Err(Error::GridTooCoarse { grid_points: points, required });
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(points);
        let inverse = planner.plan_fft_inverse(points);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Ok(Self {
            n_max,
            points,
            forward,
            inverse,
            scratch: vec![Complex::new(T::zero(), T::zero()); scratch_len],
        })
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Grid coordinate `x_j = 2πj / grid_points` (units of 1/k_c).
    pub fn x(&self, j: usize) -> T {
        T::TAU() * T::from_usize_lossy(j) / T::from_usize_lossy(self.points)
    }

    /// Evaluates `ψ(x_j) = Σ_n c_n e^{i n x_j}` on the grid.
    pub fn synthesize(&mut self, amps: &[Complex<T>], field: &mut [Complex<T>]) {
        debug_assert_eq!(amps.len(), 2 * self.n_max + 1);
        debug_assert_eq!(field.len(), self.points);
        let zero = Complex::new(T::zero(), T::zero());
        field.iter_mut().for_each(|v| *v = zero);
        let g = self.points as isize;
        let n_max = self.n_max as isize;
        for (k, &c) in amps.iter().enumerate() {
            let n = k as isize - n_max;
            field[n.rem_euclid(g) as usize] = c;
        }
        self.inverse.process_with_scratch(field, &mut self.scratch);
    }

    /// Projects a grid field back onto the retained modes, destroying `field`.
    pub fn analyze(&mut self, field: &mut [Complex<T>], amps: &mut [Complex<T>]) {
        debug_assert_eq!(amps.len(), 2 * self.n_max + 1);
        self.forward.process_with_scratch(field, &mut self.scratch);
        let g = self.points as isize;
        let n_max = self.n_max as isize;
        let inv = T::one() / T::from_usize_lossy(self.points);
        for (k, out) in amps.iter_mut().enumerate() {
            let n = k as isize - n_max;
            *out = field[n.rem_euclid(g) as usize] * inv;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthesize_then_analyze_is_identity() {
        let n_max = 4;
        let mut grid = SpectralGrid::<f64>::new(n_max, 16).unwrap();
        let amps: Vec<Complex<f64>> = (0..9)
            .map(|k| Complex::new(0.1 * k as f64, -0.05 * k as f64 + 0.2))
            .collect();
        let mut field = vec![Complex::new(0.0, 0.0); 16];
        grid.synthesize(&amps, &mut field);
        // spot check against a direct sum
        let x = grid.x(3);
        let direct: Complex<f64> = amps
            .iter()
            .enumerate()
            .map(|(k, c)| c * Complex::from_polar(1.0, (k as f64 - 4.0) * x))
            .sum();
        assert!((field[3] - direct).norm() < 1e-12);
        let mut back = vec![Complex::new(0.0, 0.0); 9];
        grid.analyze(&mut field, &mut back);
        for (a, b) in amps.iter().zip(&back) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn coarse_grid_is_rejected() {
        assert!(matches!(
            SpectralGrid::<f64>::new(16, 32),
            Err(Error::GridTooCoarse { required: 64, .. })
        ));
    }
}
