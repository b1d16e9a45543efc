use num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Shortest analysis window accepted by the spectral routines.
pub const MIN_WINDOW: f64 = 50.0;

/// One-sided power spectrum of a mean-subtracted series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensitySpectrum<T> {
    /// Angular frequencies `2πk / (N Δt)`, `k = 0..=N/2`.
    pub freqs: Vec<T>,
    /// Power normalized to unit sum; all zero when `degenerate`.
    pub power: Vec<T>,
    pub t0: T,
    pub t1: T,
    /// The series was constant to rounding, so there is no spectrum to normalize.
    pub degenerate: bool,
}

impl<T: Real> IntensitySpectrum<T> {
    /// Frequency resolution `2π / (N Δt)`.
    pub fn resolution(&self) -> T {
        if self.freqs.len() > 1 {
            self.freqs[1]
        } else {
            T::zero()
        }
    }

    /// Peak frequency refined by a parabola through the neighbouring
    /// magnitudes. `None` for a degenerate spectrum.
    pub fn dominant_frequency(&self) -> Option<T> {
        let k = peak_bin(self)?;
        let df = self.resolution();
        let centre = self.freqs[k];
        if k + 1 >= self.power.len() {
            return Some(centre);
        }
        let (l, m, r) = (self.power[k - 1].sqrt(), self.power[k].sqrt(), self.power[k + 1].sqrt());
        let curvature = l - m - m + r;
        if curvature >= T::zero() {
            return Some(centre);
        }
        let shift = (T::lit(0.5) * (l - r) / curvature).max(T::lit(-0.5)).min(T::lit(0.5));
        Some(centre + shift * df)
    }
}

fn check_uniform<T: Real>(times: &[T]) -> Result<T> {
    let n = times.len();
    let dt = (times[n - 1] - times[0]) / T::from_usize_lossy(n - 1);
    let slack = T::lit(1e-6) * dt;
    if !(dt > T::zero()) || times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > slack) {
        return Err(Error::NonuniformSampling);
    }
    Ok(dt)
}

/// Power spectrum of `values` sampled at the uniformly spaced `times`.
pub fn power_spectrum<T: Real>(times: &[T], values: &[T]) -> Result<IntensitySpectrum<T>> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: times.len(), found: values.len() });
    }
    let n = times.len();
    let span = if n >= 2 { times[n - 1] - times[0] } else { T::zero() };
    if n < 4 || span < T::lit(MIN_WINDOW) {
        return Err(Error::WindowTooShort { length: span.as_f64(), minimum: MIN_WINDOW });
    }
    let dt = check_uniform(times)?;

    let mean = values.iter().copied().sum::<T>() / T::from_usize_lossy(n);
    let mut buf: Vec<Complex<T>> =
        values.iter().map(|&v| Complex::new(v - mean, T::zero())).collect();
    let spread = buf.iter().map(|z| z.re.abs()).fold(T::zero(), T::max);

    let half = n / 2;
    let df = T::TAU() / (T::from_usize_lossy(n) * dt);
    let freqs: Vec<T> = (0..=half).map(|k| df * T::from_usize_lossy(k)).collect();
    let (t0, t1) = (times[0], times[n - 1]);

    let floor = T::lit(64.0) * T::epsilon() * mean.abs();
    if !(spread > floor) || spread == T::zero() {
        let power = vec![T::zero(); half + 1];
        return Ok(IntensitySpectrum { freqs, power, t0, t1, degenerate: true });
    }

    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mut power: Vec<T> = buf[..=half].iter().map(|z| z.norm_sqr()).collect();
    power[0] = T::zero();
    let total: T = power.iter().copied().sum();
    if !(total > T::zero()) || !total.is_finite() {
        return Ok(IntensitySpectrum { freqs, power: vec![T::zero(); half + 1], t0, t1, degenerate: true });
    }
    power.iter_mut().for_each(|p| *p /= total);
    Ok(IntensitySpectrum { freqs, power, t0, t1, degenerate: false })
}

/// Angular frequency in `[lo, hi]` that maximizes the periodogram
/// `|Σ (x_j − x̄) e^{−iωt_j}|²`, found by golden-section search. This is the
/// maximum-likelihood frequency of a single tone and is far more accurate
/// than the bin grid.
pub fn refine_frequency<T: Real>(times: &[T], values: &[T], lo: T, hi: T) -> T {
    let n = T::from_usize_lossy(values.len().max(1));
    let mean = values.iter().copied().sum::<T>() / n;
    let t0 = times.first().copied().unwrap_or(T::zero());
    let periodogram = |w: T| -> T {
        let (mut re, mut im) = (T::zero(), T::zero());
        for (&t, &v) in times.iter().zip(values) {
            let (s, c) = (w * (t - t0)).sin_cos();
            re += (v - mean) * c;
            im -= (v - mean) * s;
        }
        re * re + im * im
    };
    let ratio = T::lit(0.618_033_988_749_894_9);
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut f1, mut f2) = (periodogram(x1), periodogram(x2));
    let tol = T::lit(1e-10) * hi.abs().max(T::one());
    while b - a > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = periodogram(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = periodogram(x2);
        }
    }
    T::lit(0.5) * (a + b)
}

/// Dominant frequency of a series: peak bin of its spectrum, refined by
/// [`refine_frequency`] within one bin on either side.
pub fn dominant_frequency<T: Real>(times: &[T], values: &[T]) -> Result<Option<T>> {
    let spec = power_spectrum(times, values)?;
    Ok(peak_bin(&spec).map(|k| {
        let df = spec.resolution();
        let centre = spec.freqs[k];
        refine_frequency(times, values, (centre - df).max(T::zero()), centre + df)
    }))
}

fn peak_bin<T: Real>(spec: &IntensitySpectrum<T>) -> Option<usize> {
    if spec.degenerate || spec.power.len() < 2 {
        return None;
    }
    spec.power
        .iter()
        .enumerate()
        .skip(1)
        .fold(None, |best: Option<(usize, T)>, (i, &p)| match best {
            Some((_, q)) if q >= p => best,
            _ => Some((i, p)),
        })
        .map(|(i, _)| i)
}

/// Spectrum over the longest leading part of the window that spans a whole
/// number of dominant periods, together with the refined dominant frequency.
///
/// A limit cycle whose frequency falls between two bins of the full window
/// leaks power into neighbouring bins, which lowers its IPR by as much as a
/// factor of two depending only on the alignment. Cutting the window to an
/// integer number of periods puts the fundamental and its harmonics on bins.
pub fn synchronized_spectrum<T: Real>(times: &[T], values: &[T]) -> Result<(IntensitySpectrum<T>, Option<T>)> {
    let full = power_spectrum(times, values)?;
    let Some(freq) = dominant_frequency(times, values)? else {
        return Ok((full, None));
    };
    let n = times.len();
    let dt = (times[n - 1] - times[0]) / T::from_usize_lossy(n - 1);
    let period = T::TAU() / freq;
    let cycles = (dt * T::from_usize_lossy(n) / period).floor();
    let keep = (cycles * period / dt).round().to_usize().unwrap_or(n).min(n);
    if cycles < T::one() || dt * T::from_usize_lossy(keep.saturating_sub(1)) < T::lit(MIN_WINDOW) {
        return Ok((full, Some(freq)));
    }
    Ok((power_spectrum(&times[..keep], &values[..keep])?, Some(freq)))
}

/// Spectrum of the cavity intensity `I(t)` over `[t0, t1]`.
pub fn intensity_spectrum<T: Real>(traj: &Trajectory<T>, t0: T, t1: T) -> Result<IntensitySpectrum<T>> {
    let r = traj.window_range(t0, t1);
    power_spectrum(&traj.times[r.clone()], &traj.observables.intensity[r])
}

/// Inverse participation ratio `Σ p_k²` of the normalized power.
pub fn spectral_ipr<T: Real>(spec: &IntensitySpectrum<T>) -> Result<T> {
    if spec.degenerate {
        return Err(Error::DegenerateSpectrum);
    }
    let total: T = spec.power.iter().copied().sum();
    if !(total > T::zero()) {
        return Err(Error::DegenerateSpectrum);
    }
    Ok(spec.power.iter().map(|&p| (p / total) * (p / total)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::TAU;

    fn grid(n: usize, dt: f64) -> Vec<f64> {
        (0..n).map(|i| 1500.0 + dt * i as f64).collect()
    }

    fn spec_from(power: Vec<f64>) -> IntensitySpectrum<f64> {
        let freqs = (0..power.len()).map(|k| k as f64).collect();
        IntensitySpectrum { freqs, power, t0: 0.0, t1: 1.0, degenerate: false }
    }

    #[test]
    fn constant_series_is_degenerate() {
        let t = grid(2000, 0.05);
        let v = vec![0.37; t.len()];
        let s = power_spectrum(&t, &v).unwrap();
        assert!(s.degenerate);
        assert!(s.power.iter().all(|&p| p == 0.0));
        assert!(matches!(spectral_ipr(&s), Err(Error::DegenerateSpectrum)));
        assert_eq!(s.dominant_frequency(), None);
    }

    #[test]
    fn on_bin_tone_occupies_one_bin() {
        let (n, dt) = (2000, 0.05);
        let t = grid(n, dt);
        let k0 = 37;
        let w0 = TAU * k0 as f64 / (n as f64 * dt);
        let v: Vec<f64> = t.iter().map(|&t| 2.0 + 0.3 * (w0 * t).cos()).collect();
        let s = power_spectrum(&t, &v).unwrap();
        assert_relative_eq!(s.power[k0], 1.0, epsilon = 1e-10);
        assert_relative_eq!(spectral_ipr(&s).unwrap(), 1.0, epsilon = 1e-10);
        assert_relative_eq!(s.dominant_frequency().unwrap(), w0, epsilon = 1e-9);
        assert_relative_eq!(s.resolution(), TAU / (n as f64 * dt), epsilon = 1e-12);
    }

    #[test]
    fn off_bin_peak_is_interpolated() {
        let (n, dt) = (10001, 0.05);
        let t = grid(n, dt);
        let w0 = 0.9317;
        let v: Vec<f64> = t.iter().map(|&t| (w0 * t).sin()).collect();
        let s = power_spectrum(&t, &v).unwrap();
        let f = s.dominant_frequency().unwrap();
        assert!((f - w0).abs() < 0.25 * s.resolution(), "{f} vs {w0}");
    }

    #[test]
    fn refined_frequency_beats_the_bin_grid() {
        let (n, dt) = (10001, 0.05);
        let t = grid(n, dt);
        let w0 = 0.896_1;
        let v: Vec<f64> = t.iter().map(|&t| 0.1 + (w0 * t).cos() + 0.3 * (2.0 * w0 * t + 0.4).cos()).collect();
        let f = dominant_frequency(&t, &v).unwrap().unwrap();
        assert!((f - w0).abs() < 1e-4, "{f}");
    }

    #[test]
    fn synchronized_window_removes_leakage() {
        let (n, dt) = (10001, 0.05);
        let t = grid(n, dt);
        let w0 = 0.896_1;
        let v: Vec<f64> = t.iter().map(|&t| (w0 * t).sin()).collect();
        let raw = spectral_ipr(&power_spectrum(&t, &v).unwrap()).unwrap();
        let (spec, f) = synchronized_spectrum(&t, &v).unwrap();
        let ipr = spectral_ipr(&spec).unwrap();
        assert!(raw < 0.8, "raw {raw}");
        assert!(ipr > 0.98, "synchronized {ipr}");
        assert!((f.unwrap() - w0).abs() < 1e-4);
        let periods = (spec.t1 - spec.t0 + dt) * w0 / TAU;
        assert!((periods - periods.round()).abs() < 0.01, "{periods}");
    }

    #[test]
    fn ipr_of_simple_distributions() {
        assert_relative_eq!(spectral_ipr(&spec_from(vec![0.0, 0.5, 0.5, 0.0])).unwrap(), 0.5);
        let flat = spec_from(vec![0.2; 5]);
        assert_relative_eq!(spectral_ipr(&flat).unwrap(), 0.2, epsilon = 1e-15);
        assert_relative_eq!(spectral_ipr(&spec_from(vec![0.0, 0.0, 1.0])).unwrap(), 1.0);
    }

    #[test]
    fn short_or_irregular_windows_are_rejected() {
        let t = grid(100, 0.05);
        let v = vec![1.0; 100];
        assert!(matches!(power_spectrum(&t, &v), Err(Error::WindowTooShort { .. })));
        let mut t = grid(2000, 0.05);
        t[700] += 0.01;
        let v: Vec<f64> = t.iter().map(|t| t.sin()).collect();
        assert!(matches!(power_spectrum(&t, &v), Err(Error::NonuniformSampling)));
    }

    #[test]
    fn two_tones_split_the_power() {
        let (n, dt) = (4000, 0.05);
        let t = grid(n, dt);
        let w = |k: usize| TAU * k as f64 / (n as f64 * dt);
        let v: Vec<f64> = t.iter().map(|&t| (w(40) * t).cos() + (w(90) * t).sin()).collect();
        let s = power_spectrum(&t, &v).unwrap();
        assert_relative_eq!(spectral_ipr(&s).unwrap(), 0.5, epsilon = 1e-9);
    }
}
