use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::Result;
use crate::grid::SpectralGrid;
use crate::model::{order_parameters_raw, ModelParams, SystemState};
use crate::scalar::Real;

/// Multiplies by `-i`.
#[inline]
pub(crate) fn mul_neg_i<T: Real>(z: Complex<T>) -> Complex<T> {
    Complex::new(z.im, -z.re)
}

struct Interaction<T: Real> {
    grid: SpectralGrid<T>,
    field: Vec<Complex<T>>,
    projected: Vec<Complex<T>>,
}

/// Drift of the coupled condensate/cavity mean-field equations.
///
/// The state vector packs the `2 n_max + 1` condensate amplitudes followed by
/// the normalized cavity amplitude `a`:
///
/// ```text
/// i dC/dt = [ (n² + U₀N|a|²/2) δ⁰ + (U₀N|a|²/4) δ² + η Re(a) δ¹ + g|ψ|² ] C
/// i da/dt = (Δ_c − iκ + U₀N·B) a + η Θ
/// ```
///
/// The hopping term is `η(a + a*)·cos x`, whose matrix in the momentum basis
/// is `η(a + a*) δ¹/2`.
pub struct MeanFieldSystem<T: Real> {
    params: ModelParams<T>,
    ramp_time: Option<T>,
    kinetic: Vec<T>,
    interaction: Option<Interaction<T>>,
}

impl<T: Real> MeanFieldSystem<T> {
    pub fn new(params: ModelParams<T>) -> Result<Self> {
        let params = params.validate()?;
        let n_max = params.n_max as isize;
        let kinetic = (-n_max..=n_max)
            .map(|n| T::from_isize(n * n).unwrap())
            .collect();
        let interaction = if params.g1d != T::zero() {
            Some(Interaction {
                grid: SpectralGrid::new(params.n_max, params.grid_points)?,
                field: vec![Complex::new(T::zero(), T::zero()); params.grid_points],
                projected: vec![Complex::new(T::zero(), T::zero()); params.modes()],
            })
        } else {
            None
        };
        Ok(Self { params, ramp_time: None, kinetic, interaction })
    }

    /// Ramps the pump linearly from zero to `η` over `ramp_time`.
    pub fn with_ramp(mut self, ramp_time: Option<T>) -> Self {
        self.ramp_time = ramp_time.filter(|r| *r > T::zero());
        self
    }

    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    pub fn modes(&self) -> usize {
        self.kinetic.len()
    }

    /// Kinetic energies `n²` in storage order.
    pub fn kinetic(&self) -> &[T] {
        &self.kinetic
    }

    pub fn eta_at(&self, t: T) -> T {
        match self.ramp_time {
            Some(r) if t < r => self.params.eta * (t / r).max(T::zero()),
            _ => self.params.eta,
        }
    }

    /// `out = H C` with `H = M(a) + g|ψ|²`.
    pub fn apply_hamiltonian(
        &mut self,
        amps: &[Complex<T>],
        a: Complex<T>,
        eta: T,
        out: &mut [Complex<T>],
    ) {
        let k = amps.len();
        let intensity = a.norm_sqr();
        let u0n = self.params.u0n;
        let diag_shift = u0n * intensity * T::lit(0.5);
        let off2 = u0n * intensity * T::lit(0.25);
        let off1 = eta * a.re;
        for n in 0..k {
            let mut v = amps[n] * (self.kinetic[n] + diag_shift);
            if n >= 1 {
                v += amps[n - 1] * off1;
            }
            if n + 1 < k {
                v += amps[n + 1] * off1;
            }
            if n >= 2 {
                v += amps[n - 2] * off2;
            }
            if n + 2 < k {
                v += amps[n + 2] * off2;
            }
            out[n] = v;
        }
        if let Some(int) = self.interaction.as_mut() {
            let g = self.params.g1d;
            int.grid.synthesize(amps, &mut int.field);
            for z in int.field.iter_mut() {
                *z = *z * (g * z.norm_sqr());
            }
            int.grid.analyze(&mut int.field, &mut int.projected);
            for (o, p) in out.iter_mut().zip(&int.projected) {
                *o += *p;
            }
        }
    }

    /// Interaction energy per particle `(g/2) ⟨|ψ|⁴⟩`; zero when `g = 0`.
    pub fn interaction_energy(&mut self, amps: &[Complex<T>]) -> T {
        match self.interaction.as_mut() {
            None => T::zero(),
            Some(int) => {
                int.grid.synthesize(amps, &mut int.field);
                let sum: T = int.field.iter().map(|z| z.norm_sqr() * z.norm_sqr()).sum();
                self.params.g1d * T::lit(0.5) * sum / T::from_usize_lossy(int.field.len())
            }
        }
    }

    /// Deterministic drift of the packed state `[c_-n_max, …, c_n_max, a]`.
    pub fn derivative(&mut self, t: T, y: &[Complex<T>], dy: &mut [Complex<T>]) {
        let k = self.kinetic.len();
        let (amps, rest) = y.split_at(k);
        let a = rest[0];
        let eta = self.eta_at(t);
        let (dc, da) = dy.split_at_mut(k);
        self.apply_hamiltonian(amps, a, eta, dc);
        for v in dc.iter_mut() {
            *v = mul_neg_i(*v);
        }
        let (theta, bmean) = order_parameters_raw(amps);
        let p = &self.params;
        let drive = a * p.delta_eff(bmean) + Complex::new(eta * theta, T::zero());
        da[0] = mul_neg_i(drive) - a * p.kappa;
    }
}

/// Time derivatives `(dC/dt, da/dt)` of a state, without noise.
pub fn coupled_rhs<T: Real>(
    s: &SystemState<T>,
    p: &ModelParams<T>,
) -> Result<(Vec<Complex<T>>, Complex<T>)> {
    let mut sys = MeanFieldSystem::new(*p)?;
    let mut y: Vec<Complex<T>> = s.condensate.amplitudes().to_vec();
    if y.len() != p.modes() {
        return Err(crate::Error::DimensionMismatch { expected: p.modes(), found: y.len() });
    }
    y.push(s.a);
    let mut dy = vec![Complex::new(T::zero(), T::zero()); y.len()];
    sys.derivative(s.t, &y, &mut dy);
    let da = dy.pop().unwrap();
    Ok((dy, da))
}

/// Dense single-particle matrix `M(a)` of the non-interacting condensate.
pub fn mean_field_matrix<T: Real>(a: Complex<T>, p: &ModelParams<T>) -> DMatrix<Complex<T>> {
    let k = p.modes();
    let n_max = p.n_max as isize;
    let intensity = a.norm_sqr();
    let mut m = DMatrix::from_element(k, k, Complex::new(T::zero(), T::zero()));
    let real = |x: T| Complex::new(x, T::zero());
    for i in 0..k {
        let n = T::from_isize(i as isize - n_max).unwrap();
        m[(i, i)] = real(n * n + p.u0n * intensity * T::lit(0.5));
        if i + 1 < k {
            m[(i, i + 1)] = real(p.eta * a.re);
            m[(i + 1, i)] = real(p.eta * a.re);
        }
        if i + 2 < k {
            m[(i, i + 2)] = real(p.u0n * intensity * T::lit(0.25));
            m[(i + 2, i)] = real(p.u0n * intensity * T::lit(0.25));
        }
    }
    m
}
