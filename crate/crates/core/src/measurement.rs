//! Projective measurement on one spin pair, standing in for the cold bath.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{OttoError, Result};
use crate::qops::{kron, partial_trace, CMatrix, QState};
use crate::scalar::{cr, Real, C};

/// Below this outcome probability post-selection is refused.
pub const MIN_OUTCOME_PROBABILITY: f64 = 1e-12;

/// Which pair is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pair {
    /// Qubits 1–2.
    System,
    /// Qubits 3–4.
    Ancilla,
}

/// Two-qubit state the measured pair is projected onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeasurementBasis {
    #[serde(rename = "proj00")]
    Proj00,
    #[serde(rename = "proj11")]
    Proj11,
    /// `(|01⟩ + |10⟩)/√2`.
    #[serde(rename = "bell+")]
    BellPlus,
    /// `(|01⟩ − |10⟩)/√2`.
    #[serde(rename = "bell-", alias = "bell−")]
    BellMinus,
}

impl MeasurementBasis {
    pub const ALL: [MeasurementBasis; 4] = [
        MeasurementBasis::Proj00,
        MeasurementBasis::Proj11,
        MeasurementBasis::BellPlus,
        MeasurementBasis::BellMinus,
    ];

    /// Normalized two-qubit ket, `|q_a q_b⟩` ordering.
    pub fn ket<R: Real>(self) -> [C<R>; 4] {
        let (o, z) = (C::one(), C::zero());
        let s = cr(R::FRAC_1_SQRT_2());
        match self {
            MeasurementBasis::Proj00 => [o, z, z, z],
            MeasurementBasis::Proj11 => [z, z, z, o],
            MeasurementBasis::BellPlus => [z, s, s, z],
            MeasurementBasis::BellMinus => [z, s, -s, z],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MeasurementBasis::Proj00 => "proj00",
            MeasurementBasis::Proj11 => "proj11",
            MeasurementBasis::BellPlus => "bell+",
            MeasurementBasis::BellMinus => "bell-",
        }
    }
}

impl fmt::Display for MeasurementBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MeasurementBasis {
    type Err = OttoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proj00" => Ok(MeasurementBasis::Proj00),
            "proj11" => Ok(MeasurementBasis::Proj11),
            "bell+" => Ok(MeasurementBasis::BellPlus),
            "bell-" | "bell−" => Ok(MeasurementBasis::BellMinus),
            other => Err(OttoError::arg(format!(
                "unknown measurement basis {other:?} (expected proj00, proj11, bell+ or bell-)"
            ))),
        }
    }
}

/// Measured pair, projection target, and whether to post-select.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSpec {
    pub target: Pair,
    pub basis: MeasurementBasis,
    /// `true`: keep only the selected outcome, `PρP/p_m`.
    /// `false`: record it without selecting, `PρP + (1−P)ρ(1−P)`.
    #[serde(default = "yes")]
    pub renormalize: bool,
}

fn yes() -> bool {
    true
}

impl MeasurementSpec {
    pub fn new(target: Pair, basis: MeasurementBasis) -> Self {
        Self {
            target,
            basis,
            renormalize: true,
        }
    }
}

/// Rank-4 projector on the register for `spec`.
pub fn projector<R: Real>(spec: &MeasurementSpec) -> CMatrix<R> {
    let pair = CMatrix::projector_onto(&spec.basis.ket::<R>());
    let id = CMatrix::identity(4);
    match spec.target {
        Pair::System => kron(&pair, &id),
        Pair::Ancilla => kron(&id, &pair),
    }
}

fn check_register<R: Real>(rho: &QState<R>) -> Result<()> {
    if rho.dim() != 16 {
        return Err(OttoError::arg(format!(
            "measurement acts on 16-dimensional states, got {}",
            rho.dim()
        )));
    }
    Ok(())
}

/// Applies the measurement; returns the post-measurement state and the
/// probability `p_m = Tr[PρP]` of the selected outcome.
pub fn apply_measurement<R: Real>(
    rho: &QState<R>,
    spec: &MeasurementSpec,
) -> Result<(QState<R>, R)> {
    check_register(rho)?;
    let p = projector::<R>(spec);
    let selected = p.matmul(rho.rho()).matmul(&p);
    let p_m = selected.trace().re;
    if p_m < R::lit(MIN_OUTCOME_PROBABILITY) {
        return Err(OttoError::ImpossibleOutcome(p_m.as_f64()));
    }
    let post = if spec.renormalize {
        selected.scale(R::one() / p_m)
    } else {
        let q = &CMatrix::identity(16) - &p;
        &selected + &q.matmul(rho.rho()).matmul(&q)
    };
    Ok((
        QState::new_unchecked(post.hermitian_part())?,
        p_m.min(R::one()),
    ))
}

/// `Tr[H_sys(ρ_after^sys − ρ_before^sys)]` for a 4×4 system Hamiltonian.
pub fn heat_of_measurement<R: Real>(
    rho_before: &QState<R>,
    rho_after: &QState<R>,
    h_sys: &CMatrix<R>,
) -> Result<R> {
    check_register(rho_before)?;
    check_register(rho_after)?;
    if h_sys.dim() != 4 {
        return Err(OttoError::arg("system Hamiltonian must be 4x4"));
    }
    let before = partial_trace(rho_before, &[1, 2])?;
    let after = partial_trace(rho_after, &[1, 2])?;
    Ok(after.expectation(h_sys) - before.expectation(h_sys))
}

/// `Tr_anc[ρ] ⊗ |00⟩⟨00|`.
pub fn reset_ancilla<R: Real>(rho: &QState<R>) -> Result<QState<R>> {
    check_register(rho)?;
    let sys = partial_trace(rho, &[1, 2])?;
    Ok(QState::tensor(&sys, &QState::basis(2, 0)?))
}
