#![allow(dead_code)]

use bec_cavity::dynamics::{evolve_meanfield, IntegratorConfig};
use bec_cavity::model::{CondensateState, ModelParams, SystemState};
use bec_cavity::steady::SteadyState;
use nalgebra::DMatrix;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type C64 = Complex<f64>;

pub fn params(delta_c: f64, eta: f64) -> ModelParams<f64> {
    ModelParams { delta_c, eta, ..Default::default() }
}

/// Seeded random perturbation `(δC, δa)` with total Euclidean norm `size`.
pub fn random_perturbation(modes: usize, size: f64, seed: u64) -> (Vec<C64>, C64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
    let mut dc: Vec<C64> = (0..modes).map(|_| draw()).collect();
    let mut da = draw();
    let norm = (dc.iter().map(|z| z.norm_sqr()).sum::<f64>() + da.norm_sqr()).sqrt();
    dc.iter_mut().for_each(|z| *z *= size / norm);
    da *= size / norm;
    (dc, da)
}

/// Steady state displaced by `(δC, δa)`, without renormalizing.
pub fn displaced(ss: &SteadyState<f64>, dc: &[C64], da: C64) -> SystemState<f64> {
    let amps: Vec<C64> = ss.condensate.amplitudes().iter().zip(dc).map(|(c, d)| c + d).collect();
    SystemState::new(CondensateState::from_amplitudes(amps).unwrap(), ss.a + da, 0.0)
}

/// `exp(−iSt) v` by classical RK4 with `steps` steps.
pub fn propagate_linear(s: &DMatrix<C64>, v0: &[C64], t: f64, steps: usize) -> Vec<C64> {
    let minus_i = C64::new(0.0, -1.0);
    let f = |v: &nalgebra::DVector<C64>| (s * v) * minus_i;
    let h = t / steps as f64;
    let mut v = nalgebra::DVector::from_column_slice(v0);
    for _ in 0..steps {
        let k1 = f(&v);
        let k2 = f(&(&v + &k1 * C64::new(h / 2.0, 0.0)));
        let k3 = f(&(&v + &k2 * C64::new(h / 2.0, 0.0)));
        let k4 = f(&(&v + &k3 * C64::new(h, 0.0)));
        v += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0);
    }
    v.iter().copied().collect()
}

/// Relative error between nonlinear and linearized propagation of a
/// perturbation of norm `size` around `ss` over time `t`.
pub fn linearization_error(ss: &SteadyState<f64>, p: &ModelParams<f64>, size: f64, t: f64, seed: u64) -> f64 {
    let k = p.modes();
    let (dc, da) = random_perturbation(k, size, seed);
    let s = bec_cavity::stability::build_stability_matrix(ss, p).unwrap();
    let v0 = bec_cavity::stability::fluctuation_vector(&dc, da);
    let lin = propagate_linear(&s, &v0, t, 4000);

    let cfg = IntegratorConfig { t_end: t, dt_out: t, rtol: 1e-13, atol: 1e-15, ..IntegratorConfig::default() };
    let traj = evolve_meanfield(&displaced(ss, &dc, da), p, &cfg).unwrap();
    let end = &traj.final_state;
    let rotate = C64::from_polar(1.0, ss.mu * t);
    let mut diff = 0.0;
    let mut scale = 0.0;
    for (i, (c, c0)) in end.condensate.amplitudes().iter().zip(ss.condensate.amplitudes()).enumerate() {
        let d = c * rotate - c0;
        diff += (d - lin[i]).norm_sqr();
        scale += lin[i].norm_sqr();
    }
    let d = end.a - ss.a;
    diff += (d - lin[2 * k]).norm_sqr();
    scale += lin[2 * k].norm_sqr();
    (diff / scale).sqrt()
}
