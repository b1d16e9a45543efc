use std::io::Write;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::integrator::{ComplexOde, Dopri5, ExponentialMidpoint};
use super::rhs::MeanFieldSystem;
use crate::error::{Error, Result};
use crate::model::{
    chi_raw, kinetic_energy_raw, order_parameters_raw, CondensateState, ModelParams,
    SystemState, TRUNCATION_ALARM,
};
use crate::scalar::Real;

/// Cavity seed used when no initial state is given.
pub const DEFAULT_SEED_AMPLITUDE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Embedded Dormand–Prince 5(4) with error control.
    Adaptive,
    /// Exponential midpoint with a fixed step, as used for stochastic runs.
    FixedStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig<T> {
    pub method: Method,
    pub rtol: T,
    pub atol: T,
    /// Step of the fixed-step scheme.
    pub dt: T,
    /// Sampling interval of the recorded observables.
    pub dt_out: T,
    pub t_end: T,
    /// Orders `n` of the recorded correlations `χ_n`.
    pub chi_orders: Vec<usize>,
    /// Keep every `k`-th sample as a full state snapshot.
    pub snapshot_stride: Option<usize>,
    pub truncation_threshold: T,
    /// Optional linear pump ramp duration; off by default.
    pub ramp_time: Option<T>,
}

impl<T: Real> Default for IntegratorConfig<T> {
    fn default() -> Self {
        Self {
            method: Method::Adaptive,
            rtol: T::lit(1e-11),
            atol: T::lit(1e-13),
            dt: T::lit(2e-3),
            dt_out: T::lit(0.05),
            t_end: T::lit(2000.0),
            chi_orders: vec![1, 2],
            snapshot_stride: None,
            truncation_threshold: T::lit(TRUNCATION_ALARM),
            ramp_time: None,
        }
    }
}

impl<T: Real> IntegratorConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| Err(Error::InvalidValue { name, reason: reason.into() });
        if !(self.rtol > T::zero()) || !(self.atol > T::zero()) {
            return bad("rtol/atol", "tolerances must be positive");
        }
        if !(self.dt_out > T::zero()) {
            return bad("dt_out", "must be positive");
        }
        if self.method == Method::FixedStep && !(self.dt > T::zero()) {
            return bad("dt", "must be positive for fixed-step runs");
        }
        if !self.t_end.is_finite() {
            return Err(Error::NonFiniteValue("t_end"));
        }
        if self.snapshot_stride == Some(0) {
            return bad("snapshot_stride", "must be at least 1");
        }
        Ok(())
    }

    pub fn with_t_end(mut self, t_end: T) -> Self {
        self.t_end = t_end;
        self
    }
}

/// Sampled observables, one entry per output time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Observables<T> {
    pub intensity: Vec<T>,
    pub theta: Vec<T>,
    pub bmean: Vec<T>,
    pub kinetic: Vec<T>,
    pub norm: Vec<T>,
    pub cavity: Vec<Complex<T>>,
    /// `(n, χ_n(t))` for every recorded order.
    pub chi: Vec<(usize, Vec<Complex<T>>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    pub observables: Observables<T>,
    pub snapshots: Vec<SystemState<T>>,
    /// Largest boundary occupation `|c_{±n_max}|²` seen at any sample.
    pub max_boundary_occupation: T,
    pub truncation_alarm: bool,
    pub final_state: SystemState<T>,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn chi(&self, n: usize) -> Option<&[Complex<T>]> {
        self.observables
            .chi
            .iter()
            .find(|(m, _)| *m == n)
            .map(|(_, v)| v.as_slice())
    }

    /// Indices of samples with `t0 <= t <= t1`.
    pub fn window_range(&self, t0: T, t1: T) -> std::ops::Range<usize> {
        let slack = T::lit(1e-9) * t1.abs().max(T::one());
        let start = self.times.partition_point(|&t| t < t0 - slack);
        let end = self.times.partition_point(|&t| t <= t1 + slack);
        start..end.max(start)
    }

    /// Column names (with units) of [`Trajectory::write_csv`].
    pub fn csv_header(&self) -> Vec<String> {
        let mut cols: Vec<String> = [
            "t[1/omega_R]",
            "I[|alpha|^2/N]",
            "theta[1]",
            "B[1]",
            "E_kin[hbar*omega_R]",
            "norm[1]",
            "re_a[1/sqrt(N)]",
            "im_a[1/sqrt(N)]",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        for (n, _) in &self.observables.chi {
            cols.push(format!("re_chi{n}[1]"));
            cols.push(format!("im_chi{n}[1]"));
        }
        cols
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.csv_header().join(","))?;
        let o = &self.observables;
        for i in 0..self.times.len() {
            write!(
                w,
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                self.times[i],
                o.intensity[i],
                o.theta[i],
                o.bmean[i],
                o.kinetic[i],
                o.norm[i],
                o.cavity[i].re,
                o.cavity[i].im
            )?;
            for (_, series) in &o.chi {
                write!(w, ",{:e},{:e}", series[i].re, series[i].im)?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Accumulates samples of the packed state vector into a [`Trajectory`].
pub(crate) struct Recorder<T> {
    times: Vec<T>,
    obs: Observables<T>,
    snapshots: Vec<SystemState<T>>,
    snapshot_stride: Option<usize>,
    max_boundary: T,
    count: usize,
}

impl<T: Real> Recorder<T> {
    pub(crate) fn new(chi_orders: &[usize], snapshot_stride: Option<usize>, capacity: usize) -> Self {
        let obs = Observables {
            intensity: Vec::with_capacity(capacity),
            theta: Vec::with_capacity(capacity),
            bmean: Vec::with_capacity(capacity),
            kinetic: Vec::with_capacity(capacity),
            norm: Vec::with_capacity(capacity),
            cavity: Vec::with_capacity(capacity),
            chi: chi_orders.iter().map(|&n| (n, Vec::with_capacity(capacity))).collect(),
        };
        Self {
            times: Vec::with_capacity(capacity),
            obs,
            snapshots: Vec::new(),
            snapshot_stride,
            max_boundary: T::zero(),
            count: 0,
        }
    }

    pub(crate) fn record(&mut self, t: T, y: &[Complex<T>]) -> Result<()> {
        let k = y.len() - 1;
        let (amps, a) = (&y[..k], y[k]);
        let (theta, bmean) = order_parameters_raw(amps);
        let intensity = a.norm_sqr();
        if !intensity.is_finite() || !theta.is_finite() || !bmean.is_finite() {
            return Err(Error::NonFiniteState { t: t.as_f64() });
        }
        self.times.push(t);
        self.obs.intensity.push(intensity);
        self.obs.theta.push(theta);
        self.obs.bmean.push(bmean);
        self.obs.kinetic.push(kinetic_energy_raw(amps));
        self.obs.norm.push(amps.iter().map(|c| c.norm_sqr()).sum());
        self.obs.cavity.push(a);
        for (n, series) in self.obs.chi.iter_mut() {
            series.push(chi_raw(amps, *n));
        }
        let boundary = amps[0].norm_sqr().max(amps[k - 1].norm_sqr());
        self.max_boundary = self.max_boundary.max(boundary);
        if let Some(stride) = self.snapshot_stride {
            if self.count % stride == 0 {
                self.snapshots.push(unpack(t, y));
            }
        }
        self.count += 1;
        Ok(())
    }

    pub(crate) fn finish(self, final_state: SystemState<T>, threshold: T) -> Trajectory<T> {
        Trajectory {
            times: self.times,
            observables: self.obs,
            snapshots: self.snapshots,
            truncation_alarm: self.max_boundary > threshold,
            max_boundary_occupation: self.max_boundary,
            final_state,
        }
    }
}

pub(crate) fn pack<T: Real>(s: &SystemState<T>) -> Vec<Complex<T>> {
    let mut y = s.condensate.amplitudes().to_vec();
    y.push(s.a);
    y
}

pub(crate) fn unpack<T: Real>(t: T, y: &[Complex<T>]) -> SystemState<T> {
    let k = y.len() - 1;
    SystemState {
        condensate: CondensateState::from_amplitudes(y[..k].to_vec())
            .expect("packed state has odd length"),
        a: y[k],
        t,
    }
}

/// Diagonal linear generator treated exactly by the fixed-step scheme.
pub(crate) fn linear_generator<T: Real>(sys: &MeanFieldSystem<T>) -> Vec<Complex<T>> {
    let p = sys.params();
    let mut lin: Vec<Complex<T>> =
        sys.kinetic().iter().map(|&e| Complex::new(T::zero(), -e)).collect();
    lin.push(Complex::new(-p.kappa, -p.delta_c));
    lin
}

pub(crate) fn sample_count<T: Real>(t0: T, cfg: &IntegratorConfig<T>) -> usize {
    let span = (cfg.t_end - t0).max(T::zero());
    (span / cfg.dt_out).ceil().to_usize().unwrap_or(0) + 1
}

/// Deterministic mean-field evolution of `s0` up to `cfg.t_end`.
pub fn evolve_meanfield<T: Real>(
    s0: &SystemState<T>,
    p: &ModelParams<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<Trajectory<T>> {
    cfg.validate()?;
    let mut sys = MeanFieldSystem::new(*p)?.with_ramp(cfg.ramp_time);
    if s0.condensate.amplitudes().len() != p.modes() {
        return Err(Error::DimensionMismatch {
            expected: p.modes(),
            found: s0.condensate.amplitudes().len(),
        });
    }
    let mut y = pack(s0);
    let mut rec = Recorder::new(&cfg.chi_orders, cfg.snapshot_stride, sample_count(s0.t, cfg));
    match cfg.method {
        Method::Adaptive => {
            let solver = Dopri5::new(cfg.rtol, cfg.atol);
            solver.integrate(&mut sys, s0.t, &mut y, cfg.t_end, cfg.dt_out, |t, y| {
                rec.record(t, y)
            })?;
        }
        Method::FixedStep => {
            let mut stepper = ExponentialMidpoint::new(cfg.dt, linear_generator(&sys));
            run_fixed_step(&mut sys, &mut stepper, s0.t, &mut y, cfg, |_, _| {}, &mut rec)?;
        }
    }
    let t_final = rec.times.last().copied().unwrap_or(s0.t);
    let final_state = unpack(t_final, &y);
    Ok(rec.finish(final_state, cfg.truncation_threshold))
}

/// Fixed-step loop shared by deterministic and stochastic runs. `kick` is
/// applied to the state after every drift step.
pub(crate) fn run_fixed_step<T, S, K>(
    sys: &mut S,
    stepper: &mut ExponentialMidpoint<T>,
    t0: T,
    y: &mut [Complex<T>],
    cfg: &IntegratorConfig<T>,
    mut kick: K,
    rec: &mut Recorder<T>,
) -> Result<()>
where
    T: Real,
    S: ComplexOde<T>,
    K: FnMut(T, &mut [Complex<T>]),
{
    let dt = stepper.dt();
    let steps_per_sample = (cfg.dt_out / dt).round().to_usize().unwrap_or(1).max(1);
    let n_samples = sample_count(t0, cfg);
    rec.record(t0, y)?;
    let mut step: usize = 0;
    for _ in 1..n_samples {
        for _ in 0..steps_per_sample {
            let t = t0 + dt * T::from_usize_lossy(step);
            stepper.step(sys, t, y);
            kick(dt, y);
            step += 1;
        }
        rec.record(t0 + dt * T::from_usize_lossy(step), y)?;
    }
    Ok(())
}

/// Homogeneous condensate with the default real cavity seed.
pub fn default_initial_state<T: Real>(p: &ModelParams<T>) -> SystemState<T> {
    SystemState::seeded(p.n_max, T::lit(DEFAULT_SEED_AMPLITUDE))
}
