use num_traits::{One, Zero};

use crate::error::{OttoError, Result};
use crate::qops::eigh::{eigh, Spectrum};
use crate::qops::matrix::{kron, CMatrix};
use crate::scalar::{cr, Real, C};

/// Density matrix of an `n_qubits` register.
#[derive(Debug, Clone, PartialEq)]
pub struct QState<R: Real> {
    rho: CMatrix<R>,
    n_qubits: usize,
}

/// Negative eigenvalues above `-CLIP` are treated as round-off.
const CLIP: f64 = 1e-10;

impl<R: Real> QState<R> {
    /// Validates unit trace, Hermiticity and positivity.
    pub fn new(rho: CMatrix<R>) -> Result<Self> {
        let state = Self::new_unchecked(rho)?;
        let tr = state.rho.trace();
        if (tr.re - R::one()).abs() > R::tol(1e-10) || tr.im.abs() > R::tol(1e-10) {
            return Err(OttoError::pre(format!(
                "density matrix trace is {:e}{:+e}i",
                tr.re.as_f64(),
                tr.im.as_f64()
            )));
        }
        if !state.rho.is_hermitian(R::tol(1e-12)) {
            return Err(OttoError::pre("density matrix is not Hermitian"));
        }
        let min = state.min_eigenvalue()?;
        if min < -R::tol(CLIP) {
            return Err(OttoError::Positivity(min.as_f64()));
        }
        Ok(state)
    }

    /// Wraps `rho` after checking only that its dimension is a power of two.
    pub fn new_unchecked(rho: CMatrix<R>) -> Result<Self> {
        let dim = rho.dim();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(OttoError::arg(format!(
                "dimension {dim} is not a power of two"
            )));
        }
        Ok(Self {
            n_qubits: dim.trailing_zeros() as usize,
            rho,
        })
    }

    /// Computational basis projector `|index⟩⟨index|`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(OttoError::arg(format!("basis index {index} >= {dim}")));
        }
        let mut rho = CMatrix::zeros(dim);
        rho[(index, index)] = C::one();
        Ok(Self { rho, n_qubits })
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) ket.
    pub fn pure(ket: &[C<R>]) -> Result<Self> {
        let norm = ket.iter().map(|z| z.norm_sqr()).sum::<R>().sqrt();
        if norm == R::zero() {
            return Err(OttoError::arg("zero ket"));
        }
        let unit: Vec<C<R>> = ket.iter().map(|&z| z / norm).collect();
        Self::new_unchecked(CMatrix::projector_onto(&unit))
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        Self {
            rho: CMatrix::identity(dim).scale(R::one() / R::lit(dim as f64)),
            n_qubits,
        }
    }

    /// `a ⊗ b`, with `a` on the leading qubits.
    pub fn tensor(a: &Self, b: &Self) -> Self {
        Self {
            rho: kron(&a.rho, &b.rho),
            n_qubits: a.n_qubits + b.n_qubits,
        }
    }

    pub fn rho(&self) -> &CMatrix<R> {
        &self.rho
    }

    pub fn into_rho(self) -> CMatrix<R> {
        self.rho
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    /// `Re Tr[ρ A]`.
    pub fn expectation(&self, a: &CMatrix<R>) -> R {
        self.rho.trace_product_re(a)
    }

    pub fn populations(&self) -> Vec<R> {
        self.rho.diagonal_real()
    }

    pub fn trace(&self) -> R {
        self.rho.trace().re
    }

    pub fn purity(&self) -> R {
        self.rho.trace_product_re(&self.rho)
    }

    pub fn eigenvalues(&self) -> Result<Vec<R>> {
        Ok(eigh(&self.rho.hermitian_part())?.eigenvalues)
    }

    pub fn min_eigenvalue(&self) -> Result<R> {
        Ok(self.eigenvalues()?[0])
    }

    /// `U ρ U†`.
    pub fn evolve(&self, u: &CMatrix<R>) -> Self {
        Self {
            rho: u.conjugate(&self.rho),
            n_qubits: self.n_qubits,
        }
    }

    pub fn cast<S: Real>(&self) -> QState<S> {
        QState {
            rho: self.rho.cast(),
            n_qubits: self.n_qubits,
        }
    }
}

/// Reduced state on the 1-based qubit indices in `keep`, in ascending order.
pub fn partial_trace<R: Real>(state: &QState<R>, keep: &[usize]) -> Result<QState<R>> {
    let n = state.n_qubits;
    if keep.is_empty() {
        return Err(OttoError::arg("partial trace must keep at least one qubit"));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.iter().any(|&q| q == 0 || q > n) {
        return Err(OttoError::arg(format!("qubit index outside 1..={n}")));
    }
    let traced: Vec<usize> = (1..=n).filter(|q| !kept.contains(q)).collect();
    let bit = |q: usize| n - q;
    let compose = |kept_idx: usize, traced_idx: usize| -> usize {
        let mut full = 0usize;
        for (pos, &q) in kept.iter().enumerate() {
            if (kept_idx >> (kept.len() - 1 - pos)) & 1 == 1 {
                full |= 1 << bit(q);
            }
        }
        for (pos, &q) in traced.iter().enumerate() {
            if (traced_idx >> (traced.len() - 1 - pos)) & 1 == 1 {
                full |= 1 << bit(q);
            }
        }
        full
    };
    let dk = 1usize << kept.len();
    let dt = 1usize << traced.len();
    let rho = &state.rho;
    let out = CMatrix::from_fn(dk, |i, j| {
        (0..dt).fold(C::zero(), |acc, e| {
            acc + rho[(compose(i, e), compose(j, e))]
        })
    });
    Ok(QState {
        rho: out,
        n_qubits: kept.len(),
    })
}

/// `−Σ λ ln λ` in nats.
pub fn von_neumann_entropy<R: Real>(state: &QState<R>) -> Result<R> {
    entropy_of_spectrum(&state.eigenvalues()?)
}

pub(crate) fn entropy_of_spectrum<R: Real>(eigenvalues: &[R]) -> Result<R> {
    let mut s = R::zero();
    for &l in eigenvalues {
        if l < -R::tol(CLIP) {
            return Err(OttoError::Positivity(l.as_f64()));
        }
        if l > R::zero() {
            s = s - l * l.ln();
        }
    }
    Ok(s.max(R::zero()))
}

/// `½ Tr|a − b|`.
pub fn trace_distance<R: Real>(a: &QState<R>, b: &QState<R>) -> Result<R> {
    if a.dim() != b.dim() {
        return Err(OttoError::arg(format!(
            "trace distance between dimensions {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    let diff = (&a.rho - &b.rho).hermitian_part();
    let spec = eigh(&diff)?;
    let d = spec.eigenvalues.iter().map(|l| l.abs()).sum::<R>() * R::lit(0.5);
    Ok(d.min(R::one()))
}

/// `e^{−h/T}/Z`, built in the eigenbasis of `h`.
pub fn gibbs_state<R: Real>(h: &CMatrix<R>, temperature: R) -> Result<QState<R>> {
    let spec = eigh(h)?;
    gibbs_from_spectrum(&spec, temperature)
}

/// Boltzmann weights of a spectrum at `temperature`, normalized.
pub fn boltzmann_weights<R: Real>(eigenvalues: &[R], temperature: R) -> Result<Vec<R>> {
    if !(temperature > R::zero()) || !temperature.is_finite() {
        return Err(OttoError::arg(format!(
            "temperature must be positive and finite, got {}",
            temperature
        )));
    }
    let e0 = eigenvalues.iter().cloned().fold(R::infinity(), R::min);
    let w: Vec<R> = eigenvalues
        .iter()
        .map(|&e| (-(e - e0) / temperature).exp())
        .collect();
    let z: R = w.iter().cloned().sum();
    Ok(w.into_iter().map(|x| x / z).collect())
}

pub fn gibbs_from_spectrum<R: Real>(spec: &Spectrum<R>, temperature: R) -> Result<QState<R>> {
    let p = boltzmann_weights(&spec.eigenvalues, temperature)?;
    let v = &spec.eigenvectors;
    let n = spec.dim();
    let rho = CMatrix::from_fn(n, |i, j| {
        (0..n).fold(C::zero(), |acc, k| {
            acc + v[(i, k)] * v[(j, k)].conj() * cr(p[k])
        })
    });
    QState::new_unchecked(rho.hermitian_part())
}
