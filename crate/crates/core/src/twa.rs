//! Truncated Wigner ensembles: vacuum noise in the initial state plus
//! stochastic cavity noise during the evolution.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{power_spectrum, IntensitySpectrum};
use crate::dynamics::trajectory::{linear_generator, pack, run_fixed_step, sample_count, Recorder};
use crate::dynamics::{ExponentialMidpoint, IntegratorConfig, Method, MeanFieldSystem, Trajectory, DEFAULT_SEED_AMPLITUDE};
use crate::error::{Error, Result};
use crate::model::{CondensateState, ModelParams, SystemState};
use crate::scalar::Real;

/// Largest fraction of failed trajectories tolerated by [`run_ensemble`].
pub const MAX_EXCLUDED_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig<T> {
    pub n_traj: usize,
    pub master_seed: u64,
    /// Fixed stochastic step.
    pub dt: T,
    pub dt_out: T,
    pub t_end: T,
    /// Window of the per-trajectory spectra and terminal means.
    pub window: (T, T),
    pub include_initial_noise: bool,
    pub include_dynamical_noise: bool,
}

impl<T: Real> Default for EnsembleConfig<T> {
    fn default() -> Self {
        Self {
            n_traj: 500,
            master_seed: 0,
            dt: T::lit(2e-3),
            dt_out: T::lit(0.05),
            t_end: T::lit(2000.0),
            window: (T::lit(1500.0), T::lit(2000.0)),
            include_initial_noise: true,
            include_dynamical_noise: true,
        }
    }
}

impl<T: Real> EnsembleConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| Err(Error::InvalidValue { name, reason: reason.into() });
        if self.n_traj == 0 {
            return bad("n_traj", "must be at least 1");
        }
        if !(self.dt > T::zero()) || !(self.dt_out >= self.dt) {
            return bad("dt", "need 0 < dt <= dt_out");
        }
        if !(self.window.0 < self.window.1) || self.window.1 > self.t_end {
            return bad("window", "need t0 < t1 <= t_end");
        }
        Ok(())
    }

    fn integrator(&self) -> IntegratorConfig<T> {
        IntegratorConfig {
            method: Method::FixedStep,
            dt: self.dt,
            dt_out: self.dt_out,
            t_end: self.t_end,
            chi_orders: Vec::new(),
            ..IntegratorConfig::default()
        }
    }
}

/// Ensemble averages over the trajectories that completed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats<T> {
    pub times: Vec<T>,
    pub mean_intensity: Vec<T>,
    /// Standard error of the ensemble-mean intensity.
    pub sem_intensity: Vec<T>,
    pub mean_theta: Vec<T>,
    pub sem_theta: Vec<T>,
    /// Average of the per-trajectory normalized intensity spectra.
    pub mean_spectrum: IntensitySpectrum<T>,
    /// Per-trajectory mean intensity over the window, in trajectory order.
    pub terminal_intensity: Vec<T>,
    /// Indices of trajectories dropped after a numerical failure.
    pub excluded: Vec<usize>,
}

impl<T: Real> EnsembleStats<T> {
    pub fn used(&self) -> usize {
        self.terminal_intensity.len()
    }

    /// Half the peak-to-peak range of the ensemble-mean intensity over
    /// `[t - half_width, t + half_width]`.
    pub fn oscillation_amplitude(&self, t: T, half_width: T) -> T {
        let lo = self.times.partition_point(|&s| s < t - half_width);
        let hi = self.times.partition_point(|&s| s <= t + half_width);
        let w = &self.mean_intensity[lo..hi.max(lo)];
        let max = w.iter().copied().fold(T::neg_infinity(), T::max);
        let min = w.iter().copied().fold(T::infinity(), T::min);
        if w.is_empty() {
            T::zero()
        } else {
            (max - min) * T::lit(0.5)
        }
    }

    /// Mean and standard error of the per-trajectory window-mean intensity.
    pub fn terminal_mean(&self) -> (T, T) {
        let n = self.terminal_intensity.len();
        let nf = T::from_usize_lossy(n.max(1));
        let mean = self.terminal_intensity.iter().copied().sum::<T>() / nf;
        let var = if n > 1 {
            self.terminal_intensity.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>()
                / T::from_usize_lossy(n - 1)
        } else {
            T::zero()
        };
        (mean, (var / nf).sqrt())
    }

    /// Ensemble means with their standard errors, one row per output time.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t[1/omega_R],mean_I[|alpha|^2/N],sem_I[|alpha|^2/N],mean_theta[1],sem_theta[1]")?;
        for i in 0..self.times.len() {
            writeln!(
                w,
                "{:e},{:e},{:e},{:e},{:e}",
                self.times[i], self.mean_intensity[i], self.sem_intensity[i], self.mean_theta[i], self.sem_theta[i]
            )?;
        }
        Ok(())
    }
}

/// Random stream of trajectory `index`, independent of scheduling.
pub fn trajectory_rng(master_seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(master_seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn gaussian_pair<T: Real, R: Rng + ?Sized>(rng: &mut R, std: T) -> Complex<T> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(T::lit(re) * std, T::lit(im) * std)
}

/// Draws a Wigner initial state: half a quantum of noise in every condensate
/// mode and in the cavity, around the homogeneous condensate and the default
/// cavity seed.
pub fn sample_wigner_initial<T: Real, R: Rng + ?Sized>(p: &ModelParams<T>, rng: &mut R) -> SystemState<T> {
    // |δc|² has mean 1/(2N), so each quadrature has variance 1/(4N).
    let std = (T::lit(0.25) / p.atom_number).sqrt();
    let k = p.modes();
    let mut amps: Vec<Complex<T>> = (0..k).map(|_| gaussian_pair(rng, std)).collect();
    let excited: T = amps
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != p.n_max)
        .map(|(_, z)| z.norm_sqr())
        .sum();
    amps[p.n_max] += Complex::new((T::one() - excited).max(T::zero()).sqrt(), T::zero());
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
    amps.iter_mut().for_each(|z| *z = *z / norm);
    let a = Complex::new(T::lit(DEFAULT_SEED_AMPLITUDE), T::zero()) + gaussian_pair(rng, std);
    let condensate = CondensateState::from_amplitudes(amps).expect("odd mode count");
    SystemState::new(condensate, a, T::zero())
}

/// Cavity noise increment over `dt` with `⟨|ΔW|²⟩ = κ dt / N`.
pub fn noise_increment<T: Real, R: Rng + ?Sized>(rng: &mut R, dt: T, p: &ModelParams<T>) -> Complex<T> {
    let std = (p.kappa * dt / (T::lit(2.0) * p.atom_number)).sqrt();
    gaussian_pair(rng, std)
}

/// Runs one stochastic trajectory.
pub fn run_trajectory<T: Real>(
    p: &ModelParams<T>,
    cfg: &EnsembleConfig<T>,
    index: usize,
) -> Result<Trajectory<T>> {
    let mut rng = trajectory_rng(cfg.master_seed, index);
    let s0 = if cfg.include_initial_noise {
        sample_wigner_initial(p, &mut rng)
    } else {
        SystemState::seeded(p.n_max, T::lit(DEFAULT_SEED_AMPLITUDE))
    };
    let icfg = cfg.integrator();
    let mut sys = MeanFieldSystem::new(*p)?;
    let mut stepper = ExponentialMidpoint::new(cfg.dt, linear_generator(&sys));
    let mut y = pack(&s0);
    let mut rec = Recorder::new(&[], None, sample_count(T::zero(), &icfg));
    let k = p.modes();
    let noisy = cfg.include_dynamical_noise;
    run_fixed_step(
        &mut sys,
        &mut stepper,
        T::zero(),
        &mut y,
        &icfg,
        |dt, y| {
            if noisy {
                y[k] += noise_increment(&mut rng, dt, p);
            }
        },
        &mut rec,
    )?;
    let final_state = crate::dynamics::trajectory::unpack(icfg.t_end, &y);
    Ok(rec.finish(final_state, icfg.truncation_threshold))
}

struct Summary<T> {
    intensity: Vec<T>,
    theta: Vec<T>,
    spectrum: IntensitySpectrum<T>,
    terminal: T,
}

fn summarize<T: Real>(traj: Trajectory<T>, cfg: &EnsembleConfig<T>) -> Result<Summary<T>> {
    let r = traj.window_range(cfg.window.0, cfg.window.1);
    let window = &traj.observables.intensity[r.clone()];
    let terminal = window.iter().copied().sum::<T>() / T::from_usize_lossy(window.len().max(1));
    let spectrum = power_spectrum(&traj.times[r], window)?;
    let Trajectory { observables, .. } = traj;
    Ok(Summary { intensity: observables.intensity, theta: observables.theta, spectrum, terminal })
}

struct Accumulator<T> {
    sum_i: Vec<T>,
    sum_i2: Vec<T>,
    sum_th: Vec<T>,
    sum_th2: Vec<T>,
    spectrum: Vec<T>,
    template: Option<IntensitySpectrum<T>>,
    terminal: Vec<T>,
    excluded: Vec<usize>,
}

impl<T: Real> Accumulator<T> {
    fn new(samples: usize) -> Self {
        Self {
            sum_i: vec![T::zero(); samples],
            sum_i2: vec![T::zero(); samples],
            sum_th: vec![T::zero(); samples],
            sum_th2: vec![T::zero(); samples],
            spectrum: Vec::new(),
            template: None,
            terminal: Vec::new(),
            excluded: Vec::new(),
        }
    }

    fn add(&mut self, s: Summary<T>) {
        for (i, (&x, &th)) in s.intensity.iter().zip(&s.theta).enumerate() {
            self.sum_i[i] += x;
            self.sum_i2[i] += x * x;
            self.sum_th[i] += th;
            self.sum_th2[i] += th * th;
        }
        if self.spectrum.is_empty() {
            self.spectrum = vec![T::zero(); s.spectrum.power.len()];
        }
        for (acc, p) in self.spectrum.iter_mut().zip(&s.spectrum.power) {
            *acc += *p;
        }
        self.terminal.push(s.terminal);
        self.template.get_or_insert(s.spectrum);
    }

    fn finish(self, times: Vec<T>) -> Result<EnsembleStats<T>> {
        let n = self.terminal.len();
        let template = self.template.ok_or(Error::ExcessiveFailures { excluded: self.excluded.len(), total: self.excluded.len() })?;
        let nf = T::from_usize_lossy(n);
        let stats = |sum: &[T], sum2: &[T]| -> (Vec<T>, Vec<T>) {
            sum.iter()
                .zip(sum2)
                .map(|(&s, &s2)| {
                    let mean = s / nf;
                    let sem = if n > 1 {
                        let var = ((s2 - s * mean) / T::from_usize_lossy(n - 1)).max(T::zero());
                        (var / nf).sqrt()
                    } else {
                        T::zero()
                    };
                    (mean, sem)
                })
                .unzip()
        };
        let (mean_intensity, sem_intensity) = stats(&self.sum_i, &self.sum_i2);
        let (mean_theta, sem_theta) = stats(&self.sum_th, &self.sum_th2);
        let total: T = self.spectrum.iter().copied().sum();
        let power = if total > T::zero() {
            self.spectrum.iter().map(|&p| p / total).collect()
        } else {
            self.spectrum
        };
        let mean_spectrum = IntensitySpectrum { power, degenerate: !(total > T::zero()), ..template };
        Ok(EnsembleStats {
            times,
            mean_intensity,
            sem_intensity,
            mean_theta,
            sem_theta,
            mean_spectrum,
            terminal_intensity: self.terminal,
            excluded: self.excluded,
        })
    }
}

/// Integrates `cfg.n_traj` stochastic trajectories in parallel on the current
/// rayon pool and reduces them in index order, so the result does not depend
/// on the number of threads.
pub fn run_ensemble<T: Real>(p: &ModelParams<T>, cfg: &EnsembleConfig<T>) -> Result<EnsembleStats<T>> {
    cfg.validate()?;
    let p = p.validate()?;
    let icfg = cfg.integrator();
    let samples = sample_count(T::zero(), &icfg);
    let steps = (cfg.dt_out / cfg.dt).round().to_usize().unwrap_or(1).max(1);
    let sample_dt = cfg.dt * T::from_usize_lossy(steps);
    let times: Vec<T> = (0..samples).map(|i| sample_dt * T::from_usize_lossy(i)).collect();

    let batch = (rayon::current_num_threads() * 2).max(4);
    let mut acc = Accumulator::new(samples);
    for start in (0..cfg.n_traj).step_by(batch) {
        let end = (start + batch).min(cfg.n_traj);
        let results: Vec<(usize, Result<Summary<T>>)> = (start..end)
            .into_par_iter()
            .map(|i| (i, run_trajectory(&p, cfg, i).and_then(|t| summarize(t, cfg))))
            .collect();
        for (i, r) in results {
            match r {
                Ok(s) => acc.add(s),
                Err(e) if e.is_numerical() => acc.excluded.push(i),
                Err(e) => return Err(e),
            }
        }
    }
    let excluded = acc.excluded.len();
    if excluded as f64 > MAX_EXCLUDED_FRACTION * cfg.n_traj as f64 {
        return Err(Error::ExcessiveFailures { excluded, total: cfg.n_traj });
    }
    acc.finish(times)
}
