//! Spin-ladder Hamiltonians and the linear field ramp.
//!
//! Qubits 1–2 form the driven working pair, qubits 3–4 the ancilla pair:
//!
//! ```text
//! H_sys = J1 (XX + YY)_12 + B(t) (Z1 + Z2) + δ1 (X1 + X2)
//! H_anc = J2 (XX + YY)_34 + ω (Z3 + Z4)    + δ2 (X3 + X4)
//! H_int = g (X1X3 + Y1Y3 + X2X4 + Y2Y4)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{OttoError, Result};
use crate::qops::{kron, pauli_embed, xx_plus_yy, CMatrix, PauliAxis};
use crate::scalar::Real;

/// Which single-qubit state is the low-energy state of a positive field.
///
/// With [`SpinBasis::ZeroGround`] the Zeeman term `B Z` lowers `|0⟩`, so the
/// register's initial state `|0000⟩` is the field ground state. With
/// [`SpinBasis::ZeroExcited`] the textbook `σ_z|0⟩ = +|0⟩` is used and
/// `|0000⟩` is the most excited Zeeman state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpinBasis {
    #[default]
    ZeroGround,
    ZeroExcited,
}

impl SpinBasis {
    /// Sign multiplying every `Z` field term.
    pub fn field_sign<R: Real>(self) -> R {
        match self {
            SpinBasis::ZeroGround => -R::one(),
            SpinBasis::ZeroExcited => R::one(),
        }
    }
}

/// Direction of the field ramp over a work stroke.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RampDirection {
    /// `B_L → B_H`.
    Expand,
    /// `B_H → B_L`.
    Compress,
}

/// Full parameter record. Energies in units of `J2`, times in `1/J2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound = "")]
pub struct ModelParams<R: Real> {
    #[serde(rename = "J1")]
    pub j1: R,
    #[serde(rename = "J2")]
    pub j2: R,
    pub g: R,
    pub delta1: R,
    pub delta2: R,
    pub omega: R,
    #[serde(rename = "B_L")]
    pub b_low: R,
    #[serde(rename = "B_H")]
    pub b_high: R,
    pub tau: R,
    #[serde(rename = "T")]
    pub temperature: R,
    pub omega_c: R,
    pub t_h: R,
    /// Initial number of sub-intervals per work stroke.
    pub n_steps: usize,
    /// Step-halving acceptance threshold (trace distance of final states).
    pub refine_tol: R,
    /// Upper bound on sub-intervals reached by step doubling.
    pub max_steps: usize,
    /// Time step of the dissipative integrator.
    pub gkls_dt: R,
    /// Prefactor of the Ohmic rate `γ0 ω e^{−ω/ω_c}`.
    pub gamma0: R,
    /// Local coupling operator of each bath.
    pub bath_axis: PauliAxis,
    /// 1-based qubits attached to a bath.
    pub bath_qubits: Vec<usize>,
    pub basis: SpinBasis,
}

impl<R: Real> Default for ModelParams<R> {
    fn default() -> Self {
        Self {
            j1: R::one(),
            j2: R::one(),
            g: R::zero(),
            delta1: R::zero(),
            delta2: R::zero(),
            omega: R::lit(0.5),
            b_low: R::one(),
            b_high: R::lit(2.0),
            tau: R::one(),
            temperature: R::lit(10.0),
            omega_c: R::lit(10.0),
            t_h: R::lit(10.0),
            n_steps: 512,
            refine_tol: R::tol(1e-8),
            max_steps: 1 << 17,
            gkls_dt: R::lit(0.02),
            gamma0: R::lit(0.1),
            bath_axis: PauliAxis::X,
            bath_qubits: vec![1, 2, 3, 4],
            basis: SpinBasis::ZeroGround,
        }
    }
}

impl<R: Real> ModelParams<R> {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("J1", self.j1),
            ("J2", self.j2),
            ("g", self.g),
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("omega", self.omega),
            ("B_L", self.b_low),
            ("B_H", self.b_high),
            ("tau", self.tau),
            ("T", self.temperature),
            ("omega_c", self.omega_c),
            ("t_h", self.t_h),
            ("refine_tol", self.refine_tol),
            ("gkls_dt", self.gkls_dt),
            ("gamma0", self.gamma0),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(OttoError::arg(format!("{name} must be finite")));
            }
        }
        let positive = [
            ("tau", self.tau),
            ("T", self.temperature),
            ("omega_c", self.omega_c),
            ("refine_tol", self.refine_tol),
            ("gkls_dt", self.gkls_dt),
        ];
        for (name, v) in positive {
            if v <= R::zero() {
                return Err(OttoError::arg(format!("{name} must be positive, got {v}")));
            }
        }
        if self.t_h < R::zero() {
            return Err(OttoError::arg("t_h must be non-negative"));
        }
        if self.gamma0 < R::zero() {
            return Err(OttoError::arg("gamma0 must be non-negative"));
        }
        if self.n_steps < 2 {
            return Err(OttoError::arg("n_steps must be at least 2"));
        }
        if self.max_steps < self.n_steps {
            return Err(OttoError::arg("max_steps must be at least n_steps"));
        }
        if self.bath_qubits.iter().any(|&q| q == 0 || q > 4) {
            return Err(OttoError::arg("bath_qubits must lie in 1..=4"));
        }
        let mut qs = self.bath_qubits.clone();
        qs.sort_unstable();
        qs.dedup();
        if qs.len() != self.bath_qubits.len() {
            return Err(OttoError::arg("bath_qubits contains duplicates"));
        }
        Ok(())
    }

    /// Parameter value by its config key, for sweeps.
    pub fn get(&self, name: &str) -> Option<R> {
        Some(match name {
            "J1" => self.j1,
            "J2" => self.j2,
            "g" => self.g,
            "delta1" => self.delta1,
            "delta2" => self.delta2,
            "omega" => self.omega,
            "B_L" => self.b_low,
            "B_H" => self.b_high,
            "tau" => self.tau,
            "T" => self.temperature,
            "omega_c" => self.omega_c,
            "t_h" => self.t_h,
            "gamma0" => self.gamma0,
            _ => return None,
        })
    }

    /// Sets a real-valued parameter by its config key.
    pub fn set(&mut self, name: &str, value: R) -> Result<()> {
        let slot = match name {
            "J1" => &mut self.j1,
            "J2" => &mut self.j2,
            "g" => &mut self.g,
            "delta1" => &mut self.delta1,
            "delta2" => &mut self.delta2,
            "omega" => &mut self.omega,
            "B_L" => &mut self.b_low,
            "B_H" => &mut self.b_high,
            "tau" => &mut self.tau,
            "T" => &mut self.temperature,
            "omega_c" => &mut self.omega_c,
            "t_h" => &mut self.t_h,
            "gamma0" => &mut self.gamma0,
            _ => return Err(OttoError::arg(format!("unknown sweep variable {name:?}"))),
        };
        *slot = value;
        Ok(())
    }

    pub const SWEEPABLE: [&'static str; 13] = [
        "J1", "J2", "g", "delta1", "delta2", "omega", "B_L", "B_H", "tau", "T", "omega_c", "t_h",
        "gamma0",
    ];
}

/// Field at time `t ∈ [0, τ]` of a stroke.
pub fn field_at<R: Real>(t: R, params: &ModelParams<R>, dir: RampDirection) -> Result<R> {
    let tau = params.tau;
    let slack = R::tol(1e-12) * tau;
    if !(t >= -slack && t <= tau + slack) {
        return Err(OttoError::arg(format!("t = {t} outside [0, {tau}]")));
    }
    let t = t.max(R::zero()).min(tau);
    let s = match dir {
        RampDirection::Expand => t,
        RampDirection::Compress => tau - t,
    };
    Ok(params.b_low + (params.b_high - params.b_low) * s / tau)
}

/// `dB/dt` over a stroke.
pub fn field_rate<R: Real>(params: &ModelParams<R>, dir: RampDirection) -> R {
    let r = (params.b_high - params.b_low) / params.tau;
    match dir {
        RampDirection::Expand => r,
        RampDirection::Compress => -r,
    }
}

/// `∂H_sys/∂B` on the pair: `±(Z1 + Z2)` depending on the basis convention.
pub fn field_operator<R: Real>(params: &ModelParams<R>) -> CMatrix<R> {
    let z = &pauli_embed::<R>(PauliAxis::Z, 1, 2).expect("site")
        + &pauli_embed(PauliAxis::Z, 2, 2).expect("site");
    z.scale(params.basis.field_sign())
}

fn pair_hamiltonian<R: Real>(coupling: R, field: R, transverse: R, basis: SpinBasis) -> CMatrix<R> {
    let xy = xx_plus_yy::<R>(1, 2, 2).expect("sites").scale(coupling);
    let z = &pauli_embed::<R>(PauliAxis::Z, 1, 2).expect("site")
        + &pauli_embed(PauliAxis::Z, 2, 2).expect("site");
    let x = &pauli_embed::<R>(PauliAxis::X, 1, 2).expect("site")
        + &pauli_embed(PauliAxis::X, 2, 2).expect("site");
    let mut h = xy;
    h += &z.scale(field * basis.field_sign());
    h += &x.scale(transverse);
    h
}

/// System pair Hamiltonian (4×4) at field `b`.
pub fn build_h_sys<R: Real>(params: &ModelParams<R>, b: R) -> CMatrix<R> {
    pair_hamiltonian(params.j1, b, params.delta1, params.basis)
}

/// Ancilla pair Hamiltonian (4×4).
pub fn build_h_anc<R: Real>(params: &ModelParams<R>) -> CMatrix<R> {
    pair_hamiltonian(params.j2, params.omega, params.delta2, params.basis)
}

/// Inter-pair exchange (16×16).
pub fn build_h_int<R: Real>(params: &ModelParams<R>) -> CMatrix<R> {
    let h = &xx_plus_yy::<R>(1, 3, 4).expect("sites") + &xx_plus_yy::<R>(2, 4, 4).expect("sites");
    h.scale(params.g)
}

/// `A ⊗ I` for a system-pair operator.
pub fn embed_sys<R: Real>(op: &CMatrix<R>) -> CMatrix<R> {
    kron(op, &CMatrix::identity(4))
}

/// `I ⊗ A` for an ancilla-pair operator.
pub fn embed_anc<R: Real>(op: &CMatrix<R>) -> CMatrix<R> {
    kron(&CMatrix::identity(4), op)
}

/// Total ladder Hamiltonian at time `t` of a stroke.
pub fn build_h_tot<R: Real>(
    params: &ModelParams<R>,
    t: R,
    dir: RampDirection,
) -> Result<CMatrix<R>> {
    let b = field_at(t, params, dir)?;
    Ok(ModelOperators::new(params).h_tot(b))
}

/// Field-independent and field-proportional parts of the Hamiltonians,
/// precomputed once per parameter set.
#[derive(Debug, Clone)]
pub struct ModelOperators<R: Real> {
    /// `H_sys(0)` on the pair.
    pub sys_static: CMatrix<R>,
    /// `∂H_sys/∂B` on the pair.
    pub sys_field: CMatrix<R>,
    /// `H_tot(0)` on the register.
    pub tot_static: CMatrix<R>,
    /// `∂H_tot/∂B` on the register.
    pub tot_field: CMatrix<R>,
    pub h_anc: CMatrix<R>,
    pub h_int: CMatrix<R>,
}

impl<R: Real> ModelOperators<R> {
    pub fn new(params: &ModelParams<R>) -> Self {
        let sys_static = build_h_sys(params, R::zero());
        let sys_field = field_operator(params);
        let h_anc = build_h_anc(params);
        let h_int = build_h_int(params);
        let mut tot_static = embed_sys(&sys_static);
        tot_static += &embed_anc(&h_anc);
        tot_static += &h_int;
        let tot_field = embed_sys(&sys_field);
        Self {
            sys_static,
            sys_field,
            tot_static,
            tot_field,
            h_anc,
            h_int,
        }
    }

    pub fn h_sys(&self, b: R) -> CMatrix<R> {
        &self.sys_static + &self.sys_field.scale(b)
    }

    pub fn h_tot(&self, b: R) -> CMatrix<R> {
        &self.tot_static + &self.tot_field.scale(b)
    }
}
