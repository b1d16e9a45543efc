//! Phase labels from long-time trajectories, correlation orbits and the
//! merging of `Z₂`-related limit cycles.

mod orbit;
mod spectrum;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use orbit::{
    chi_orbit, detect_merging, dominant_periods, hausdorff_distance, orbit_from_points,
    period_signature, MergingReport, Orbit, PeriodSignature, Periods, MERGE_TOLERANCE,
};
pub use spectrum::{
    dominant_frequency, intensity_spectrum, power_spectrum, refine_frequency, spectral_ipr,
    synchronized_spectrum, IntensitySpectrum, MIN_WINDOW,
};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhaseLabel {
    /// Normal phase: empty cavity, homogeneous condensate.
    N,
    /// Superradiant steady state.
    S,
    /// Superradiant limit cycle.
    SL,
    /// Atomic limit cycle with an empty cavity.
    AL,
    /// Chaotic motion.
    C,
}

impl PhaseLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            PhaseLabel::N => "N",
            PhaseLabel::S => "S",
            PhaseLabel::SL => "SL",
            PhaseLabel::AL => "AL",
            PhaseLabel::C => "C",
        }
    }
}

impl fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PhaseLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "N" => Ok(PhaseLabel::N),
            "S" => Ok(PhaseLabel::S),
            "SL" => Ok(PhaseLabel::SL),
            "AL" => Ok(PhaseLabel::AL),
            "C" => Ok(PhaseLabel::C),
            other => Err(Error::Format(format!("unknown phase label {other:?}"))),
        }
    }
}

/// Thresholds of the phase decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rules<T> {
    pub window_start: T,
    pub window_end: T,
    /// Mean intensity below which the cavity counts as empty.
    pub intensity_floor: T,
    /// Relative standard deviation of `I` below which it counts as constant.
    pub constancy: T,
    /// Standard deviation of `Θ` or `B` above which the atoms count as moving.
    pub activity: T,
    /// IPR separating limit cycles from chaos.
    pub ipr_split: T,
    /// Half-width of the band around `ipr_split` reported as low confidence.
    pub ipr_margin: T,
}

impl<T: Real> Default for Rules<T> {
    fn default() -> Self {
        Self {
            window_start: T::lit(1500.0),
            window_end: T::lit(2000.0),
            intensity_floor: T::lit(1e-3),
            constancy: T::lit(1e-3),
            activity: T::lit(1e-4),
            ipr_split: T::lit(0.5),
            ipr_margin: T::lit(0.1),
        }
    }
}

/// A phase label together with the numbers that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification<T> {
    pub label: PhaseLabel,
    /// IPR of the intensity spectrum; `None` when the intensity is constant.
    pub ipr: Option<T>,
    pub mean_intensity: T,
    /// Relative standard deviation of the intensity.
    pub intensity_spread: T,
    /// Larger of the standard deviations of `Θ` and `B`.
    pub activity: T,
    /// Dominant angular frequency: of `I` in the superradiant phases, of the
    /// atomic observables in the atomic limit cycle.
    pub dominant_frequency: Option<T>,
    /// The IPR lies within the margin of the split.
    pub low_confidence: bool,
}

fn mean_std<T: Real>(x: &[T]) -> (T, T) {
    let n = T::from_usize_lossy(x.len().max(1));
    let mean = x.iter().copied().sum::<T>() / n;
    let var = x.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
    (mean, var.sqrt())
}

/// Dominant frequency of the atomic motion: from `Θ` when it oscillates,
/// otherwise from `B` (the grating at `cos 2x`, which carries the `4ω_R`
/// oscillation of the atomic limit cycle).
pub fn atomic_frequency<T: Real>(traj: &Trajectory<T>, t0: T, t1: T, activity: T) -> Result<Option<T>> {
    let r = traj.window_range(t0, t1);
    let times = &traj.times[r.clone()];
    let theta = &traj.observables.theta[r.clone()];
    let series = if mean_std(theta).1 > activity { theta } else { &traj.observables.bmean[r] };
    dominant_frequency(times, series)
}

/// Labels a trajectory that reaches at least `rules.window_end`.
///
/// The IPR is taken from [`synchronized_spectrum`] of the intensity over the
/// analysis window.
pub fn classify_phase<T: Real>(traj: &Trajectory<T>, rules: &Rules<T>) -> Result<Classification<T>> {
    let t_end = traj.times.last().copied().unwrap_or(T::neg_infinity());
    let slack = T::lit(1e-9) * rules.window_end.abs().max(T::one());
    if t_end + slack < rules.window_end {
        return Err(Error::TrajectoryTooShort { t_end: t_end.as_f64(), required: rules.window_end.as_f64() });
    }
    let (t0, t1) = (rules.window_start, rules.window_end);
    let r = traj.window_range(t0, t1);
    let o = &traj.observables;
    let (mean_i, std_i) = mean_std(&o.intensity[r.clone()]);
    let activity = mean_std(&o.theta[r.clone()]).1.max(mean_std(&o.bmean[r]).1);
    let spread = if mean_i > T::zero() { std_i / mean_i } else { T::zero() };
    let mut out = Classification {
        label: PhaseLabel::N,
        ipr: None,
        mean_intensity: mean_i,
        intensity_spread: spread,
        activity,
        dominant_frequency: None,
        low_confidence: false,
    };

    if mean_i < rules.intensity_floor {
        if activity > rules.activity {
            out.label = PhaseLabel::AL;
            out.dominant_frequency = atomic_frequency(traj, t0, t1, rules.activity)?;
        }
        return Ok(out);
    }
    if spread < rules.constancy {
        out.label = PhaseLabel::S;
        return Ok(out);
    }
    let range = traj.window_range(t0, t1);
    let (spec, freq) = synchronized_spectrum(&traj.times[range.clone()], &o.intensity[range])?;
    let ipr = spectral_ipr(&spec)?;
    out.ipr = Some(ipr);
    out.dominant_frequency = freq;
    out.low_confidence = (ipr - rules.ipr_split).abs() < rules.ipr_margin;
    out.label = if ipr >= rules.ipr_split { PhaseLabel::SL } else { PhaseLabel::C };
    Ok(out)
}
