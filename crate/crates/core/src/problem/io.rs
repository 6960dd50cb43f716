//! Binary instance container.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic  "DQP1"            4 bytes
//! d                        u64
//! R, u, λ, σ², L           5 × f64
//! Σ^{1/2}                  d × d f64, row-major
//! x_true                   d f64
//! ```

use std::io::{Read, Write};

use nalgebra::DMatrix;

use super::synthetic::SyntheticQP;
use super::truncnorm::truncated_normal_variance;
use super::StochasticProblem;
use crate::{DisfomError, Result};

pub const INSTANCE_MAGIC: &[u8; 4] = b"DQP1";

// Refuse to allocate more than this many matrix entries when reading.
const MAX_DIM: u64 = 1 << 16;

pub fn write_instance<W: Write>(qp: &SyntheticQP, mut out: W) -> Result<()> {
    let d = qp.dim();
    out.write_all(INSTANCE_MAGIC)?;
    out.write_all(&(d as u64).to_le_bytes())?;
    for v in [qp.box_radius(), qp.truncation(), qp.lambda_reg(), qp.trunc_var(), qp.lipschitz()] {
        out.write_all(&v.to_le_bytes())?;
    }
    let b = qp.block_size();
    let fb = qp.factor_block();
    let mut row = vec![0u8; 8 * d];
    for i in 0..d {
        for j in 0..d {
            let v = if i < b && j < b {
                fb[(i, j)]
            } else if i == j {
                1.0
            } else {
                0.0
            };
            row[8 * j..8 * j + 8].copy_from_slice(&v.to_le_bytes());
        }
        out.write_all(&row)?;
    }
    for v in qp.x_true() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

/// Reads an instance and validates its structural invariants: dimension a
/// multiple of 16, a symmetric factor equal to the identity outside the
/// leading block, the `x_true` pattern, `σ²` consistent with `u`, and `L`
/// within `[σ² + 2λ, 2σ² + 2λ]`.
pub fn read_instance<R: Read>(mut input: R) -> Result<SyntheticQP> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != INSTANCE_MAGIC {
        return Err(DisfomError::Format(format!("bad magic {magic:?}")));
    }
    let mut dbuf = [0u8; 8];
    input.read_exact(&mut dbuf)?;
    let d64 = u64::from_le_bytes(dbuf);
    if d64 < 16 || d64 % 16 != 0 || d64 > MAX_DIM {
        return Err(DisfomError::Format(format!("unsupported dimension {d64}")));
    }
    let d = d64 as usize;
    let radius = read_f64(&mut input)?;
    let trunc = read_f64(&mut input)?;
    let lambda = read_f64(&mut input)?;
    let sigma2 = read_f64(&mut input)?;
    let lip = read_f64(&mut input)?;
    for (name, v) in [("R", radius), ("u", trunc), ("lambda", lambda), ("sigma^2", sigma2), ("L", lip)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(DisfomError::Format(format!("{name} must be positive, got {v}")));
        }
    }
    let expected_var = truncated_normal_variance(trunc)?;
    if (expected_var - sigma2).abs() > 1e-12 {
        return Err(DisfomError::Format(format!(
            "sigma^2 = {sigma2} does not match truncation width {trunc} (expected {expected_var})"
        )));
    }

    let b = d / 16;
    let mut factor = DMatrix::<f64>::zeros(b, b);
    let mut row = vec![0u8; 8 * d];
    for i in 0..d {
        input.read_exact(&mut row)?;
        for j in 0..d {
            let v = f64::from_le_bytes(row[8 * j..8 * j + 8].try_into().unwrap());
            if i < b && j < b {
                factor[(i, j)] = v;
            } else {
                let expect = if i == j { 1.0 } else { 0.0 };
                if v != expect {
                    return Err(DisfomError::Format(format!(
                        "factor entry ({i}, {j}) = {v} outside the leading block"
                    )));
                }
            }
        }
    }
    if factor != factor.transpose() {
        return Err(DisfomError::Format("factor block is not symmetric".into()));
    }
    for i in 0..d {
        let v = read_f64(&mut input)?;
        let expect = if i < b { 1.0 } else { 0.0 };
        if v != expect {
            return Err(DisfomError::Format(format!("x_true[{i}] = {v}, expected {expect}")));
        }
    }
    let mut trailing = [0u8; 1];
    if input.read(&mut trailing)? != 0 {
        return Err(DisfomError::Format("trailing bytes after x_true".into()));
    }
    let lo = sigma2 + 2.0 * lambda;
    let hi = 2.0 * sigma2 + 2.0 * lambda;
    if lip < lo * (1.0 - 1e-9) || lip > hi * (1.0 + 1e-9) {
        return Err(DisfomError::Format(format!("L = {lip} outside [{lo}, {hi}]")));
    }
    SyntheticQP::assemble(d, factor, radius, trunc, sigma2, lambda, Some(lip))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bitwise() {
        let qp = SyntheticQP::generate(48, 31, 3.0, 3.0, 2.5).unwrap();
        let mut buf = Vec::new();
        write_instance(&qp, &mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 8 + 5 * 8 + 48 * 48 * 8 + 48 * 8);
        assert_eq!(&buf[..4], b"DQP1");
        assert_eq!(u64::from_le_bytes(buf[4..12].try_into().unwrap()), 48);
        let back = read_instance(buf.as_slice()).unwrap();
        assert_eq!(back, qp);
    }

    #[test]
    fn corrupted_files_are_rejected() {
        let qp = SyntheticQP::generate(16, 1, 3.0, 3.0, 2.5).unwrap();
        let mut buf = Vec::new();
        write_instance(&qp, &mut buf).unwrap();

        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_instance(bad.as_slice()).is_err());

        // off-block factor entry
        let mut bad = buf.clone();
        let off = 4 + 8 + 40 + 8 * (16 + 2);
        bad[off..off + 8].copy_from_slice(&0.5f64.to_le_bytes());
        assert!(read_instance(bad.as_slice()).is_err());

        // truncated
        assert!(read_instance(&buf[..buf.len() - 3]).is_err());

        // trailing junk
        let mut bad = buf.clone();
        bad.push(0);
        assert!(read_instance(bad.as_slice()).is_err());
    }
}
