use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::SpectralGrid;
use crate::model::CondensateState;
use crate::scalar::Real;

/// Tolerance on the phase jump across a density dip, in radians.
pub const SLIP_PHASE_TOLERANCE: f64 = 0.2;

/// A density zero of the condensate carrying a π phase jump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSlip<T> {
    /// Centre of the dip, in `[0, 2π)`.
    pub x: T,
    /// First and last grid index of the dip (may wrap around).
    pub first: usize,
    pub last: usize,
    /// Phase jump across the dip, wrapped to `(-π, π]`.
    pub jump: T,
}

fn wrap<T: Real>(phi: T) -> T {
    let tau = T::TAU();
    let mut p = phi % tau;
    if p > T::PI() {
        p -= tau;
    } else if p <= -T::PI() {
        p += tau;
    }
    p
}

/// Finds runs of grid points where `ρ = |ψ|²/2π` drops below `density_floor`
/// and the phase of `ψ` differs by π (within tolerance) on either side.
pub fn detect_phase_slips<T: Real>(
    c: &CondensateState<T>,
    grid_points: usize,
    density_floor: T,
) -> Result<Vec<PhaseSlip<T>>> {
    let mut grid = SpectralGrid::new(c.n_max(), grid_points)?;
    let mut psi = vec![Complex::new(T::zero(), T::zero()); grid_points];
    grid.synthesize(c.amplitudes(), &mut psi);
    let inv_len = T::one() / T::TAU();
    let low: Vec<bool> = psi.iter().map(|z| z.norm_sqr() * inv_len < density_floor).collect();
    let g = grid_points;
    if low.iter().all(|&l| l) || !low.iter().any(|&l| l) {
        return Ok(Vec::new());
    }
    // start scanning just after a point above the floor so runs never straddle the seam
    let start = (0..g).find(|&j| !low[j]).unwrap();
    let mut slips = Vec::new();
    let mut k = 1;
    while k <= g {
        let j = (start + k) % g;
        if !low[j] {
            k += 1;
            continue;
        }
        let first = j;
        let mut len = 0;
        while low[(first + len) % g] {
            len += 1;
        }
        let last = (first + len - 1) % g;
        let before = psi[(first + g - 1) % g];
        let after = psi[(last + 1) % g];
        let jump = wrap(after.arg() - before.arg());
        if (jump.abs() - T::PI()).abs() <= T::lit(SLIP_PHASE_TOLERANCE) {
            let centre = T::from_usize_lossy(first) + T::from_usize_lossy(len - 1) * T::lit(0.5);
            let x = (centre * T::TAU() / T::from_usize_lossy(g)) % T::TAU();
            slips.push(PhaseSlip { x, first, last, jump });
        }
        k += len;
    }
    slips.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap());
    Ok(slips)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    #[test]
    fn homogeneous_has_no_slips() {
        let st = CondensateState::<f64>::homogeneous(4);
        assert!(detect_phase_slips(&st, 64, 1e-3).unwrap().is_empty());
    }

    #[test]
    fn sine_standing_wave_slips_at_nodes() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let st = CondensateState::from_modes(4, &[(1, c(s)), (-1, c(-s))]).unwrap();
        let slips = detect_phase_slips(&st, 64, 1e-3).unwrap();
        assert_eq!(slips.len(), 2);
        assert!(slips[0].x.abs() < 1e-12);
        assert!((slips[1].x - std::f64::consts::PI).abs() < 1e-12);
        for s in &slips {
            assert!((s.jump.abs() - std::f64::consts::PI).abs() < 1e-9);
        }
    }

    #[test]
    fn shallow_modulation_has_no_slips() {
        let c1 = (1.0f64 - 0.99 * 0.99).sqrt();
        let st = CondensateState::from_modes(4, &[(0, c(0.99)), (1, c(c1))]).unwrap();
        let min_rho = crate::model::density_profile(&st, 64)
            .unwrap()
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        assert!(min_rho > 0.1);
        assert!(detect_phase_slips(&st, 64, 1e-3).unwrap().is_empty());
    }

    #[test]
    fn dip_without_phase_jump_is_not_a_slip() {
        // ψ ∝ 1 + cos x touches zero at x = π but keeps its phase
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let st = CondensateState::from_modes(4, &[(0, c(s)), (1, c(s * 0.5)), (-1, c(s * 0.5))])
            .unwrap();
        assert!(detect_phase_slips(&st, 64, 1e-3).unwrap().is_empty());
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let st = CondensateState::<f64>::homogeneous(8);
        assert!(matches!(detect_phase_slips(&st, 16, 1e-3), Err(Error::GridTooCoarse { .. })));
    }
}
