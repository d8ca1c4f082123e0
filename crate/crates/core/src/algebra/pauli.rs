//! Named single-qubit matrices and Pauli strings.

use ndarray::{array, linalg::kron, Array2};

use crate::{Error, Mat, Result, C64};

const O: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

pub fn identity(d: usize) -> Mat {
    Array2::eye(d)
}

pub fn x() -> Mat {
    array![[O, ONE], [ONE, O]]
}

pub fn y() -> Mat {
    array![[O, -I], [I, O]]
}

pub fn z() -> Mat {
    array![[ONE, O], [O, -ONE]]
}

/// `|0⟩⟨1|`: moves the excitation `|1⟩` down to `|0⟩`, the `σ_z = +1` state.
pub fn sigma_minus() -> Mat {
    array![[O, ONE], [O, O]]
}

/// `|1⟩⟨0|`, the adjoint of [`sigma_minus`].
pub fn sigma_plus() -> Mat {
    array![[O, O], [ONE, O]]
}

/// Single-qubit matrix for one of `I X Y Z` (case-insensitive), plus `+`/`-`
/// for the ladder operators.
pub fn single(p: char) -> Result<Mat> {
    Ok(match p.to_ascii_uppercase() {
        'I' => identity(2),
        'X' => x(),
        'Y' => y(),
        'Z' => z(),
        '+' => sigma_plus(),
        '-' => sigma_minus(),
        other => {
            return Err(Error::DimensionMismatch(format!(
                "unknown Pauli letter {other:?}"
            )))
        }
    })
}

/// Kronecker product of the letters of `s`, first letter most significant.
pub fn pauli_string(s: &str) -> Result<Mat> {
    let mut out = identity(1);
    for c in s.chars() {
        out = kron(&out, &single(c)?);
    }
    if s.is_empty() {
        return Err(Error::DimensionMismatch("empty Pauli string".into()));
    }
    Ok(out)
}

/// Non-identity Weyl operators `X^a Z^b` on `C^d`; for `d = 2` these are
/// `Z`, `X` and `XZ = -iY`. Together with the identity they span all
/// `d × d` matrices.
pub fn weyl_basis(d: usize) -> Vec<Mat> {
    let omega = |k: usize| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / d as f64);
    let mut out = Vec::with_capacity(d * d - 1);
    for a in 0..d {
        for b in 0..d {
            if a == 0 && b == 0 {
                continue;
            }
            // (X^a Z^b)|j⟩ = ω^{bj} |j + a⟩
            let mut m = Array2::zeros((d, d));
            for j in 0..d {
                m[[(j + a) % d, j]] = omega((b * j) % d);
            }
            out.push(m);
        }
    }
    out
}
