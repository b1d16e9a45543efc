//! Binary checkpoint of a single [`SystemState`].
//!
//! Layout (all little-endian):
//!
//! | offset | size        | field                                   |
//! |--------|-------------|-----------------------------------------|
//! | 0      | 4           | magic `b"BECS"`                         |
//! | 4      | 4           | format version (`u32`, currently 1)     |
//! | 8      | 4           | `n_max` (`u32`)                         |
//! | 12     | 8           | time `t` (`f64`)                        |
//! | 20     | 16          | cavity amplitude `a` (re, im as `f64`)  |
//! | 36     | 16·(2n+1)   | `c_n` for `n = -n_max..=n_max` (re, im) |

use std::io::{Read, Write};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::model::{CondensateState, SystemState};
use crate::scalar::Real;

pub const SNAPSHOT_MAGIC: [u8; 4] = *b"BECS";
pub const SNAPSHOT_VERSION: u32 = 1;

pub fn write_snapshot<T: Real, W: Write>(s: &SystemState<T>, mut w: W) -> Result<()> {
    w.write_all(&SNAPSHOT_MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    let n_max = u32::try_from(s.condensate.n_max())
        .map_err(|_| Error::Format("n_max does not fit in u32".into()))?;
    w.write_all(&n_max.to_le_bytes())?;
    w.write_all(&s.t.as_f64().to_le_bytes())?;
    for z in std::iter::once(&s.a).chain(s.condensate.amplitudes()) {
        w.write_all(&z.re.as_f64().to_le_bytes())?;
        w.write_all(&z.im.as_f64().to_le_bytes())?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_snapshot<T: Real, R: Read>(mut r: R) -> Result<SystemState<T>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != SNAPSHOT_MAGIC {
        return Err(Error::Format("not a state snapshot".into()));
    }
    let version = read_u32(&mut r)?;
    if version != SNAPSHOT_VERSION {
        return Err(Error::Format(format!("unsupported snapshot version {version}")));
    }
    let n_max = read_u32(&mut r)? as usize;
    if n_max > 1 << 16 {
        return Err(Error::Format(format!("implausible n_max {n_max}")));
    }
    let t = T::lit(read_f64(&mut r)?);
    let mut complex = || -> Result<Complex<T>> {
        let re = read_f64(&mut r)?;
        let im = read_f64(&mut r)?;
        Ok(Complex::new(T::lit(re), T::lit(im)))
    };
    let a = complex()?;
    let amps = (0..2 * n_max + 1).map(|_| complex()).collect::<Result<Vec<_>>>()?;
    Ok(SystemState { condensate: CondensateState::from_amplitudes(amps)?, a, t })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_round_trip_is_exact() {
        let cond = CondensateState::from_modes(
            3,
            &[(0, Complex::new(0.8, 0.1)), (-2, Complex::new(-0.3, 0.2))],
        )
        .unwrap();
        let s = SystemState::new(cond, Complex::new(0.25, -1e-3), 12.5);
        let mut buf = Vec::new();
        write_snapshot(&s, &mut buf).unwrap();
        assert_eq!(buf.len(), 36 + 16 * 7);
        assert_eq!(&buf[..4], b"BECS");
        let back: SystemState<f64> = read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_foreign_data() {
        let err = read_snapshot::<f64, _>(&b"NOPE\x01\0\0\0"[..]).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
        let mut buf = Vec::new();
        write_snapshot(&SystemState::<f64>::seeded(2, 1e-3), &mut buf).unwrap();
        buf[4] = 9;
        assert!(matches!(read_snapshot::<f64, _>(buf.as_slice()), Err(Error::Format(_))));
        buf[4] = 1;
        buf.truncate(40);
        assert!(matches!(read_snapshot::<f64, _>(buf.as_slice()), Err(Error::Io(_))));
    }
}
