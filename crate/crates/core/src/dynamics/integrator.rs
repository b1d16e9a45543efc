//! Time steppers over packed complex state vectors.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A first-order system `dy/dt = f(t, y)` over complex components.
pub trait ComplexOde<T: Real> {
    fn eval(&mut self, t: T, y: &[Complex<T>], dy: &mut [Complex<T>]);
}

impl<T: Real> ComplexOde<T> for super::rhs::MeanFieldSystem<T> {
    fn eval(&mut self, t: T, y: &[Complex<T>], dy: &mut [Complex<T>]) {
        self.derivative(t, y, dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Dormand–Prince 5(4) with PI step-size control.
///
/// Steps are shortened so that every output time is hit exactly, which keeps
/// sampled observables at full order without dense output.
#[derive(Debug, Clone, Copy)]
pub struct Dopri5<T> {
    pub rtol: T,
    pub atol: T,
    pub h_max: T,
    pub max_steps: usize,
    pub safety: T,
    pub beta: T,
}

impl<T: Real> Dopri5<T> {
    pub fn new(rtol: T, atol: T) -> Self {
        Self {
            rtol,
            atol,
            h_max: T::lit(1.0),
            max_steps: 500_000_000,
            safety: T::lit(0.9),
            beta: T::lit(0.04),
        }
    }

    fn error_norm(&self, y: &[Complex<T>], y_new: &[Complex<T>], err: &[Complex<T>]) -> T {
        let mut acc = T::zero();
        for ((a, b), e) in y.iter().zip(y_new).zip(err) {
            let sc = self.atol + self.rtol * a.norm().max(b.norm());
            let r = e.norm() / sc;
            acc += r * r;
        }
        (acc / T::from_usize_lossy(y.len())).sqrt()
    }

    fn initial_step<S: ComplexOde<T>>(
        &self,
        sys: &mut S,
        t0: T,
        y0: &[Complex<T>],
        f0: &[Complex<T>],
        scratch: &mut [Complex<T>],
        f1: &mut [Complex<T>],
    ) -> T {
        let n = T::from_usize_lossy(y0.len());
        let scale = |y: &Complex<T>| self.atol + self.rtol * y.norm();
        let d0 = (y0.iter().map(|y| (y.norm() / scale(y)).powi(2)).sum::<T>() / n).sqrt();
        let d1 = (y0
            .iter()
            .zip(f0)
            .map(|(y, f)| (f.norm() / scale(y)).powi(2))
            .sum::<T>()
            / n)
            .sqrt();
        let tiny = T::lit(1e-5);
        let mut h0 = if d0 < tiny || d1 < tiny { T::lit(1e-6) } else { T::lit(0.01) * d0 / d1 };
        h0 = h0.min(self.h_max);
        for ((s, y), f) in scratch.iter_mut().zip(y0).zip(f0) {
            *s = *y + *f * h0;
        }
        sys.eval(t0 + h0, scratch, f1);
        let d2 = (y0
            .iter()
            .zip(f0.iter().zip(f1.iter()))
            .map(|(y, (a, b))| ((*b - *a).norm() / scale(y)).powi(2))
            .sum::<T>()
            / n)
            .sqrt()
            / h0;
        let dmax = d1.max(d2);
        let h1 = if dmax <= T::lit(1e-15) {
            (h0 * T::lit(1e-3)).max(T::lit(1e-6))
        } else {
            (T::lit(0.01) / dmax).powf(T::lit(0.2))
        };
        (h0 * T::lit(100.0)).min(h1).min(self.h_max)
    }

    /// Integrates from `t0` to `t_end`, calling `observe` at `t0` and at every
    /// `t0 + k·dt_out` up to and including `t_end`.
    pub fn integrate<S, F>(
        &self,
        sys: &mut S,
        t0: T,
        y: &mut [Complex<T>],
        t_end: T,
        dt_out: T,
        mut observe: F,
    ) -> Result<StepStats>
    where
        S: ComplexOde<T>,
        F: FnMut(T, &[Complex<T>]) -> Result<()>,
    {
        // Butcher tableau
        let l = T::lit;
        let (c2, c3, c4, c5) = (l(0.2), l(0.3), l(0.8), l(8.0 / 9.0));
        let a21 = l(0.2);
        let (a31, a32) = (l(3.0 / 40.0), l(9.0 / 40.0));
        let (a41, a42, a43) = (l(44.0 / 45.0), l(-56.0 / 15.0), l(32.0 / 9.0));
        let (a51, a52, a53, a54) =
            (l(19372.0 / 6561.0), l(-25360.0 / 2187.0), l(64448.0 / 6561.0), l(-212.0 / 729.0));
        let (a61, a62, a63, a64, a65) = (
            l(9017.0 / 3168.0),
            l(-355.0 / 33.0),
            l(46732.0 / 5247.0),
            l(49.0 / 176.0),
            l(-5103.0 / 18656.0),
        );
        let (b1, b3, b4, b5, b6) =
            (l(35.0 / 384.0), l(500.0 / 1113.0), l(125.0 / 192.0), l(-2187.0 / 6784.0), l(11.0 / 84.0));
        let (e1, e3, e4, e5, e6, e7) = (
            l(71.0 / 57600.0),
            l(-71.0 / 16695.0),
            l(71.0 / 1920.0),
            l(-17253.0 / 339200.0),
            l(22.0 / 525.0),
            l(-1.0 / 40.0),
        );

        let n = y.len();
        let zero = Complex::new(T::zero(), T::zero());
        let mut k1 = vec![zero; n];
        let mut k2 = vec![zero; n];
        let mut k3 = vec![zero; n];
        let mut k4 = vec![zero; n];
        let mut k5 = vec![zero; n];
        let mut k6 = vec![zero; n];
        let mut k7 = vec![zero; n];
        let mut ys = vec![zero; n];
        let mut y_new = vec![zero; n];
        let mut err = vec![zero; n];
        let mut stats = StepStats { accepted: 0, rejected: 0, evaluations: 0 };

        let mut t = t0;
        observe(t, y)?;
        if t_end <= t0 {
            return Ok(stats);
        }
        sys.eval(t, y, &mut k1);
        let mut h = self.initial_step(sys, t, y, &k1, &mut ys, &mut k2);
        stats.evaluations += 2;

        let mut next_out_index: usize = 1;
        let out_time = |k: usize| (t0 + dt_out * T::from_usize_lossy(k)).min(t_end);
        let mut next_out = out_time(next_out_index);
        let mut facold = l(1e-4);
        let expo1 = l(0.2) - self.beta * l(0.75);
        let fac_min = l(0.2);
        let fac_max = l(10.0);
        let mut last_rejected = false;

        loop {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(Error::TooManySteps { max_steps: self.max_steps, t: t.as_f64() });
            }
            let mut hit_output = false;
            let h_natural = h;
            let h_min = T::epsilon() * l(16.0) * t.abs().max(T::one());
            if t + h * l(1.01) + h_min * l(2.0) >= next_out {
                h = next_out - t;
                hit_output = true;
            }
            if h <= h_min {
                return Err(Error::StepSizeUnderflow { t: t.as_f64(), h: h.as_f64() });
            }

            for i in 0..n {
                ys[i] = y[i] + k1[i] * (h * a21);
            }
            sys.eval(t + c2 * h, &ys, &mut k2);
            for i in 0..n {
                ys[i] = y[i] + (k1[i] * a31 + k2[i] * a32) * h;
            }
            sys.eval(t + c3 * h, &ys, &mut k3);
            for i in 0..n {
                ys[i] = y[i] + (k1[i] * a41 + k2[i] * a42 + k3[i] * a43) * h;
            }
            sys.eval(t + c4 * h, &ys, &mut k4);
            for i in 0..n {
                ys[i] = y[i] + (k1[i] * a51 + k2[i] * a52 + k3[i] * a53 + k4[i] * a54) * h;
            }
            sys.eval(t + c5 * h, &ys, &mut k5);
            for i in 0..n {
                ys[i] = y[i]
                    + (k1[i] * a61 + k2[i] * a62 + k3[i] * a63 + k4[i] * a64 + k5[i] * a65) * h;
            }
            let t_new = if hit_output { next_out } else { t + h };
            sys.eval(t_new, &ys, &mut k6);
            for i in 0..n {
                y_new[i] =
                    y[i] + (k1[i] * b1 + k3[i] * b3 + k4[i] * b4 + k5[i] * b5 + k6[i] * b6) * h;
            }
            sys.eval(t_new, &y_new, &mut k7);
            stats.evaluations += 6;
            for i in 0..n {
                err[i] = (k1[i] * e1 + k3[i] * e3 + k4[i] * e4 + k5[i] * e5 + k6[i] * e6
                    + k7[i] * e7)
                    * h;
            }
            let e = self.error_norm(y, &y_new, &err);
            if !e.is_finite() {
                if y_new.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) && h <= l(1e-10) {
                    return Err(Error::NonFiniteState { t: t.as_f64() });
                }
                h = h * fac_min;
                last_rejected = true;
                stats.rejected += 1;
                continue;
            }

            let fac11 = e.powf(expo1);
            if e <= T::one() {
                stats.accepted += 1;
                let mut fac = fac11 / facold.powf(self.beta);
                fac = (fac / self.safety).max(T::one() / fac_max).min(T::one() / fac_min);
                let mut h_new = h / fac;
                if last_rejected {
                    h_new = h_new.min(h);
                }
                facold = e.max(l(1e-4));
                last_rejected = false;

                y.copy_from_slice(&y_new);
                std::mem::swap(&mut k1, &mut k7);
                t = t_new;
                if hit_output {
                    observe(t, y)?;
                    if t >= t_end {
                        return Ok(stats);
                    }
                    next_out_index += 1;
                    next_out = out_time(next_out_index);
                    // clipping to the output grid says nothing about the step size
                    h_new = h_new.max(h_natural);
                }
                h = h_new.min(self.h_max);
            } else {
                stats.rejected += 1;
                h = h / (fac11 / self.safety).min(T::one() / fac_min);
                last_rejected = true;
            }
        }
    }
}

/// Fixed-step exponential midpoint scheme for the mean-field drift.
///
/// The stiff linear parts (kinetic phases `n²` on the condensate and
/// `Δ_c − iκ` on the cavity) are propagated exactly; the remainder is treated
/// with a second-order midpoint rule in the interaction picture.
pub struct ExponentialMidpoint<T: Real> {
    dt: T,
    linear: Vec<Complex<T>>,
    full: Vec<Complex<T>>,
    half: Vec<Complex<T>>,
    k: Vec<Complex<T>>,
    ymid: Vec<Complex<T>>,
}

impl<T: Real> ExponentialMidpoint<T> {
    /// `linear[i]` is the diagonal generator of component `i`.
    pub fn new(dt: T, linear: Vec<Complex<T>>) -> Self {
        let full = linear.iter().map(|l| (*l * dt).exp()).collect();
        let half = linear.iter().map(|l| (*l * (dt * T::lit(0.5))).exp()).collect();
        let n = linear.len();
        let zero = Complex::new(T::zero(), T::zero());
        Self { dt, linear, full, half, k: vec![zero; n], ymid: vec![zero; n] }
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// Advances `y` by one step of the deterministic drift.
    pub fn step<S: ComplexOde<T>>(&mut self, sys: &mut S, t: T, y: &mut [Complex<T>]) {
        let h = self.dt;
        let half_h = h * T::lit(0.5);
        sys.eval(t, y, &mut self.k);
        for i in 0..y.len() {
            let nonlinear = self.k[i] - self.linear[i] * y[i];
            self.ymid[i] = self.half[i] * (y[i] + nonlinear * half_h);
        }
        sys.eval(t + half_h, &self.ymid, &mut self.k);
        for i in 0..y.len() {
            let nonlinear = self.k[i] - self.linear[i] * self.ymid[i];
            y[i] = self.full[i] * y[i] + self.half[i] * nonlinear * h;
        }
    }
}
