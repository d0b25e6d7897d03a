use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{OttoError, Result};
use crate::qops::matrix::{kron, CMatrix};
use crate::scalar::{c, Real, C};

/// Pauli axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

/// Single-qubit Pauli matrix with `σ_z = diag(1, −1)`.
pub fn pauli<R: Real>(axis: PauliAxis) -> CMatrix<R> {
    let (o, z) = (C::<R>::one(), C::<R>::zero());
    let i = c(R::zero(), R::one());
    let entries = match axis {
        PauliAxis::X => vec![z, o, o, z],
        PauliAxis::Y => vec![z, -i, i, z],
        PauliAxis::Z => vec![o, z, z, -o],
    };
    CMatrix::from_rows(entries).expect("2x2")
}

/// Embeds `op` (2×2) on `site` (1-based, qubit 1 most significant) of an
/// `n_qubits` register.
pub fn embed<R: Real>(op: &CMatrix<R>, site: usize, n_qubits: usize) -> Result<CMatrix<R>> {
    if op.dim() != 2 {
        return Err(OttoError::arg("embedded operator must be 2x2"));
    }
    if site == 0 || site > n_qubits {
        return Err(OttoError::arg(format!(
            "site {site} outside 1..={n_qubits}"
        )));
    }
    let id = CMatrix::identity(2);
    let mut out = CMatrix::identity(1);
    for k in 1..=n_qubits {
        out = kron(&out, if k == site { op } else { &id });
    }
    Ok(out)
}

/// Pauli `axis` acting on `site` of an `n_qubits` register.
pub fn pauli_embed<R: Real>(axis: PauliAxis, site: usize, n_qubits: usize) -> Result<CMatrix<R>> {
    embed(&pauli(axis), site, n_qubits)
}

/// `σ_x^a σ_x^b + σ_y^a σ_y^b` on an `n_qubits` register.
pub fn xx_plus_yy<R: Real>(a: usize, b: usize, n_qubits: usize) -> Result<CMatrix<R>> {
    let xx = pauli_embed::<R>(PauliAxis::X, a, n_qubits)?.matmul(&pauli_embed(
        PauliAxis::X,
        b,
        n_qubits,
    )?);
    let yy = pauli_embed::<R>(PauliAxis::Y, a, n_qubits)?.matmul(&pauli_embed(
        PauliAxis::Y,
        b,
        n_qubits,
    )?);
    Ok(&xx + &yy)
}
