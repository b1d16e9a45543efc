use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::spectrum::dominant_frequency;
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Orbits whose spread is below this fraction of their offset are fixed points.
const FIXED_POINT_SPREAD: f64 = 1e-6;
/// Lagged distance an orbit must reach before it counts as having left its start.
const DEPARTURE: f64 = 0.5;
/// Point budget of the pairwise set distances.
const HAUSDORFF_POINTS: usize = 4000;

/// Default tolerance of [`detect_merging`] on the scaled set distances.
pub const MERGE_TOLERANCE: f64 = 0.05;

/// Trajectory of one correlation `χ_n` in the complex plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orbit<T> {
    pub n: usize,
    pub times: Vec<T>,
    pub points: Vec<Complex<T>>,
    /// RMS spread of the points about their centroid.
    pub extent: T,
    /// Smallest scaled RMS distance between the orbit and a lagged copy of
    /// itself, once the lag exceeds the initial departure. Near zero for
    /// periodic motion, of order one for chaos.
    pub closure: T,
    /// Hausdorff distance between the orbit and its negation, scaled by the
    /// largest `|χ_n|`.
    pub symmetry: T,
    /// The orbit is a fixed point: `closure` and `symmetry` are not meaningful.
    pub degenerate: bool,
}

fn subsample<T: Copy>(points: &[T], budget: usize) -> Vec<T> {
    let stride = points.len().div_ceil(budget).max(1);
    points.iter().step_by(stride).copied().collect()
}

fn directed_distance<T: Real>(from: &[Complex<T>], to: &[Complex<T>]) -> T {
    from.iter()
        .map(|p| to.iter().map(|q| (p - q).norm_sqr()).fold(T::infinity(), T::min))
        .fold(T::zero(), T::max)
        .sqrt()
}

/// Symmetric Hausdorff distance between two point sets.
pub fn hausdorff_distance<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> T {
    if a.is_empty() || b.is_empty() {
        return T::infinity();
    }
    let a = subsample(a, HAUSDORFF_POINTS);
    let b = subsample(b, HAUSDORFF_POINTS);
    directed_distance(&a, &b).max(directed_distance(&b, &a))
}

fn closure_metric<T: Real>(z: &[Complex<T>], extent: T) -> T {
    let n = z.len();
    let lagged = |lag: usize| -> T {
        let sum: T = (0..n - lag).map(|i| (z[i + lag] - z[i]).norm_sqr()).sum();
        (sum / T::from_usize_lossy(n - lag)).sqrt() / extent
    };
    let max_lag = n / 2;
    let mut lag = 1;
    while lag <= max_lag && lagged(lag) <= T::lit(DEPARTURE) {
        lag += 1;
    }
    if lag > max_lag {
        return lagged(max_lag.max(1));
    }
    (lag..=max_lag).map(lagged).fold(T::infinity(), T::min)
}

/// Builds an orbit from `χ_n` samples.
pub fn orbit_from_points<T: Real>(n: usize, times: Vec<T>, points: Vec<Complex<T>>) -> Result<Orbit<T>> {
    if points.len() < 3 || points.len() != times.len() {
        return Err(Error::IncompatibleOrbits(format!("orbit needs at least 3 samples, got {}", points.len())));
    }
    let count = T::from_usize_lossy(points.len());
    let centre = points.iter().fold(Complex::new(T::zero(), T::zero()), |s, z| s + z) / count;
    let extent = (points.iter().map(|z| (z - centre).norm_sqr()).sum::<T>() / count).sqrt();
    let radius = points.iter().map(|z| z.norm()).fold(T::zero(), T::max);
    let degenerate = extent <= T::lit(FIXED_POINT_SPREAD) * centre.norm().max(T::lit(1e-3));
    let (closure, symmetry) = if degenerate {
        (T::zero(), if radius > T::zero() { T::lit(2.0) * centre.norm() / radius } else { T::zero() })
    } else {
        let negated: Vec<Complex<T>> = points.iter().map(|z| -z).collect();
        (closure_metric(&points, extent), hausdorff_distance(&points, &negated) / radius)
    };
    Ok(Orbit { n, times, points, extent, closure, symmetry, degenerate })
}

/// Orbit of `χ_n` recorded in `traj` over `[t0, t1]`.
pub fn chi_orbit<T: Real>(traj: &Trajectory<T>, n: usize, t0: T, t1: T) -> Result<Orbit<T>> {
    let series = traj.chi(n).ok_or(Error::MissingObservable(n))?;
    let r = traj.window_range(t0, t1);
    orbit_from_points(n, traj.times[r.clone()].to_vec(), series[r].to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergingReport<T> {
    pub merged: bool,
    /// Hausdorff distance between the two orbits, scaled by their size.
    pub coincidence: T,
    /// Larger of the two symmetry metrics.
    pub asymmetry: T,
    /// At least one orbit is a fixed point.
    pub degenerate: bool,
}

/// Decides whether two orbits from opposite seeds have merged into a single
/// `Z₂`-symmetric orbit.
pub fn detect_merging<T: Real>(plus: &Orbit<T>, minus: &Orbit<T>, tolerance: T) -> Result<MergingReport<T>> {
    if plus.n != minus.n {
        return Err(Error::IncompatibleOrbits(format!("orders {} and {} differ", plus.n, minus.n)));
    }
    let asymmetry = plus.symmetry.max(minus.symmetry);
    let scale = plus
        .points
        .iter()
        .chain(&minus.points)
        .map(|z| z.norm())
        .fold(T::zero(), T::max);
    let coincidence = if scale > T::zero() {
        hausdorff_distance(&plus.points, &minus.points) / scale
    } else {
        T::zero()
    };
    let degenerate = plus.degenerate || minus.degenerate;
    let merged = !degenerate && coincidence <= tolerance && asymmetry <= tolerance;
    Ok(MergingReport { merged, coincidence, asymmetry, degenerate })
}

/// Dominant periods of `Θ` and `|a|²` over a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Periods<T> {
    pub theta: T,
    pub intensity: T,
}

pub fn dominant_periods<T: Real>(traj: &Trajectory<T>, t0: T, t1: T) -> Result<Periods<T>> {
    let r = traj.window_range(t0, t1);
    let times = &traj.times[r.clone()];
    let period = |values: &[T]| -> Result<T> {
        let f = dominant_frequency(times, values)?.ok_or(Error::DegenerateSpectrum)?;
        Ok(T::TAU() / f)
    };
    Ok(Periods {
        theta: period(&traj.observables.theta[r.clone()])?,
        intensity: period(&traj.observables.intensity[r])?,
    })
}

/// Period ratios across a merge: `Θ` should double while `|a|²` stays put.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodSignature<T> {
    pub before: Periods<T>,
    pub after: Periods<T>,
    /// `after.theta / before.theta`.
    pub theta_ratio: T,
    /// `after.intensity / before.intensity`.
    pub intensity_ratio: T,
}

impl<T: Real> PeriodSignature<T> {
    /// `Θ` period doubled within `tolerance` and `|a|²` period unchanged within it.
    pub fn is_merging(&self, tolerance: T) -> bool {
        (self.theta_ratio / T::lit(2.0) - T::one()).abs() < tolerance
            && (self.intensity_ratio - T::one()).abs() < tolerance
    }
}

pub fn period_signature<T: Real>(
    before: &Trajectory<T>,
    after: &Trajectory<T>,
    t0: T,
    t1: T,
) -> Result<PeriodSignature<T>> {
    let b = dominant_periods(before, t0, t1)?;
    let a = dominant_periods(after, t0, t1)?;
    Ok(PeriodSignature {
        before: b,
        after: a,
        theta_ratio: a.theta / b.theta,
        intensity_ratio: a.intensity / b.intensity,
    })
}
