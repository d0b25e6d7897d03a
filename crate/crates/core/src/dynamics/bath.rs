use serde::{Deserialize, Serialize};

use crate::error::{OttoError, Result};
use crate::model::ModelParams;
use crate::qops::{eigh, pauli_embed, CMatrix, Spectrum};
use crate::scalar::{Real, C};

/// Default tolerance for grouping Bohr frequencies.
pub const BOHR_TOL: f64 = 1e-9;

/// Mean bosonic occupation `1/(e^{ω/T} − 1)`.
pub fn bose_occupation<R: Real>(omega: R, temperature: R) -> Result<R> {
    if !(omega > R::zero()) {
        return Err(OttoError::arg(format!(
            "occupation needs ω > 0, got {omega}"
        )));
    }
    if !(temperature > R::zero()) {
        return Err(OttoError::arg(format!(
            "occupation needs T > 0, got {temperature}"
        )));
    }
    Ok(R::one() / (omega / temperature).exp_m1())
}

/// Ohmic coupling rate `γ0 ω e^{−ω/ω_c}` with the conventional `γ0 = 0.1`.
pub fn ohmic_rate<R: Real>(omega: R, omega_c: R) -> Result<R> {
    ohmic_rate_scaled(omega, omega_c, R::lit(0.1))
}

pub fn ohmic_rate_scaled<R: Real>(omega: R, omega_c: R, gamma0: R) -> Result<R> {
    if !(omega > R::zero()) || !(omega_c > R::zero()) {
        return Err(OttoError::arg("Ohmic rate needs ω > 0 and ω_c > 0"));
    }
    Ok(gamma0 * omega * (-omega / omega_c).exp())
}

/// Bath parameters shared by every local reservoir.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BathSpec<R: Real> {
    pub temperature: R,
    pub omega_c: R,
    pub gamma0: R,
    pub bohr_tol: R,
}

impl<R: Real> BathSpec<R> {
    pub fn from_params(params: &ModelParams<R>) -> Self {
        Self {
            temperature: params.temperature,
            omega_c: params.omega_c,
            gamma0: params.gamma0,
            bohr_tol: R::tol(BOHR_TOL),
        }
    }

    /// `(Γ(n+1), Γn)` at a positive Bohr frequency.
    pub fn rates(&self, omega: R) -> Result<(R, R)> {
        let gamma = ohmic_rate_scaled(omega, self.omega_c, self.gamma0)?;
        let n = bose_occupation(omega, self.temperature)?;
        Ok((gamma * (n + R::one()), gamma * n))
    }
}

/// Local coupling operators `σ_axis^(i)` for the bath qubits of `params`.
pub fn coupling_operators<R: Real>(params: &ModelParams<R>) -> Result<Vec<CMatrix<R>>> {
    params
        .bath_qubits
        .iter()
        .map(|&q| pauli_embed(params.bath_axis, q, 4))
        .collect()
}

/// Component of a coupling operator at one Bohr frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpOperator<R: Real> {
    /// Energy removed by the jump (`0` for the dephasing part).
    pub frequency: R,
    pub operator: CMatrix<R>,
}

/// Bohr-frequency component with its up and down rates.
#[derive(Debug, Clone, PartialEq)]
pub struct Dissipator<R: Real> {
    pub frequency: R,
    /// Lowering operator `X(ω)`; `X(−ω) = X(ω)†`.
    pub operator: CMatrix<R>,
    /// `Γ(ω)(n(ω)+1)`, attached to `X(ω)`.
    pub rate_down: R,
    /// `Γ(ω)n(ω)`, attached to `X(ω)†`.
    pub rate_up: R,
}

impl<R: Real> Dissipator<R> {
    /// Attaches Ohmic rates to a positive-frequency jump operator.
    pub fn new(jump: JumpOperator<R>, bath: &BathSpec<R>) -> Result<Self> {
        let (rate_down, rate_up) = bath.rates(jump.frequency)?;
        Ok(Self {
            frequency: jump.frequency,
            operator: jump.operator,
            rate_down,
            rate_up,
        })
    }
}

/// Positive Bohr frequencies of a spectrum, clustered: consecutive sorted
/// differences closer than `tol` share a bin.
#[derive(Debug, Clone)]
pub(crate) struct BohrBins<R: Real> {
    /// Mean frequency of each bin, ascending.
    pub centers: Vec<R>,
    bounds: Vec<(R, R)>,
    tol: R,
}

impl<R: Real> BohrBins<R> {
    pub fn new(eigenvalues: &[R], tol: R) -> Self {
        let n = eigenvalues.len();
        let mut diffs: Vec<R> = Vec::with_capacity(n * n / 2);
        for a in 0..n {
            for b in (a + 1)..n {
                let w = eigenvalues[b] - eigenvalues[a];
                if w > tol {
                    diffs.push(w);
                }
            }
        }
        diffs.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
        let mut groups: Vec<(R, R, R, usize)> = Vec::new();
        for w in diffs {
            match groups.last_mut() {
                Some((_, hi, sum, count)) if w - *hi < tol => {
                    *hi = w;
                    *sum = *sum + w;
                    *count += 1;
                }
                _ => groups.push((w, w, w, 1)),
            }
        }
        Self {
            centers: groups.iter().map(|g| g.2 / R::lit(g.3 as f64)).collect(),
            bounds: groups.iter().map(|g| (g.0, g.1)).collect(),
            tol,
        }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    /// Bin holding a positive difference `w`.
    pub fn find(&self, w: R) -> Option<usize> {
        let k = self.bounds.partition_point(|&(_, hi)| hi < w - self.tol);
        (k < self.bounds.len() && w >= self.bounds[k].0 - self.tol).then_some(k)
    }
}

/// Decomposes `coupling` into Bohr-frequency components in the eigenbasis of
/// `h`: `X(ω) = Σ_{E_b − E_a = ω} |a⟩⟨a|X|b⟩⟨b|`.
///
/// Returns the positive-frequency components in ascending frequency followed
/// by the `ω = 0` component, so that `Σ_{ω>0} (X(ω) + X(ω)†) + X(0)` rebuilds
/// the coupling.
pub fn jump_operators<R: Real>(
    h: &CMatrix<R>,
    coupling: &CMatrix<R>,
    tol: R,
) -> Result<Vec<JumpOperator<R>>> {
    if h.dim() != coupling.dim() {
        return Err(OttoError::arg("Hamiltonian and coupling dimensions differ"));
    }
    if !coupling.is_hermitian(R::tol(1e-12) * coupling.max_abs().max(R::one())) {
        return Err(OttoError::pre("coupling operator is not Hermitian"));
    }
    let spec = eigh(h)?;
    Ok(jump_operators_in(&spec, coupling, tol))
}

pub(crate) fn jump_operators_in<R: Real>(
    spec: &Spectrum<R>,
    coupling: &CMatrix<R>,
    tol: R,
) -> Vec<JumpOperator<R>> {
    let n = spec.dim();
    let v = &spec.eigenvectors;
    let a_eig = v.conjugate_adj(coupling);
    let bins = BohrBins::new(&spec.eigenvalues, tol);
    let mut eig_ops: Vec<CMatrix<R>> = vec![CMatrix::zeros(n); bins.len() + 1];
    let zero = bins.len();
    for a in 0..n {
        for b in 0..n {
            let w = spec.eigenvalues[b] - spec.eigenvalues[a];
            let slot = if w.abs() <= tol {
                Some(zero)
            } else if w > R::zero() {
                bins.find(w)
            } else {
                None
            };
            if let Some(k) = slot {
                eig_ops[k][(a, b)] = a_eig[(a, b)];
            }
        }
    }
    let mut out: Vec<JumpOperator<R>> = bins
        .centers
        .iter()
        .zip(eig_ops.iter())
        .map(|(&w, x)| JumpOperator {
            frequency: w,
            operator: v.conjugate(x),
        })
        .filter(|j| !j.operator.is_zero())
        .collect();
    out.push(JumpOperator {
        frequency: R::zero(),
        operator: v.conjugate(&eig_ops[zero]),
    });
    out
}

/// Positive-frequency dissipators of every coupling operator.
pub fn dissipators<R: Real>(
    h: &CMatrix<R>,
    couplings: &[CMatrix<R>],
    bath: &BathSpec<R>,
) -> Result<Vec<Dissipator<R>>> {
    let spec = eigh(h)?;
    let mut out = Vec::new();
    for x in couplings {
        for j in jump_operators_in(&spec, x, bath.bohr_tol) {
            if j.frequency > R::zero() {
                out.push(Dissipator::new(j, bath)?);
            }
        }
    }
    Ok(out)
}

/// Sparse lowering operator in an eigenbasis: entries `(a, b, ⟨a|X|b⟩)`.
#[derive(Debug, Clone)]
pub(crate) struct Channel<R: Real> {
    pub rate: R,
    pub entries: Vec<(usize, usize, C<R>)>,
}

/// Davies generator in the eigenbasis of a (frozen) Hamiltonian.
///
/// Only the dissipative part is stored; the coherent part is the phase
/// `e^{−i(E_a − E_b)t}` on `ρ_ab`, which commutes with the dissipator because
/// every channel moves population between a fixed Bohr-frequency pair.
#[derive(Debug, Clone)]
pub(crate) struct DaviesGenerator<R: Real> {
    pub spectrum: Spectrum<R>,
    channels: Vec<Channel<R>>,
    /// `½ Σ γ L†L`.
    half_k: CMatrix<R>,
    /// Largest total escape rate, for step-size control.
    pub stiffness: R,
}

impl<R: Real> DaviesGenerator<R> {
    pub fn new(
        spectrum: Spectrum<R>,
        couplings: &[CMatrix<R>],
        bath: &BathSpec<R>,
    ) -> Result<Self> {
        let n = spectrum.dim();
        let tol = bath.bohr_tol;
        let bins = BohrBins::new(&spectrum.eigenvalues, tol);
        let mut channels = Vec::new();
        if bath.gamma0 > R::zero() {
            let rates: Vec<(R, R)> = bins
                .centers
                .iter()
                .map(|&w| bath.rates(w))
                .collect::<Result<_>>()?;
            let v = &spectrum.eigenvectors;
            for x in couplings {
                let a_eig = v.conjugate_adj(x);
                let mut per_bin: Vec<Vec<(usize, usize, C<R>)>> = vec![Vec::new(); bins.len()];
                for a in 0..n {
                    for b in 0..n {
                        let w = spectrum.eigenvalues[b] - spectrum.eigenvalues[a];
                        let z = a_eig[(a, b)];
                        if w <= tol || z.norm() <= R::epsilon() {
                            continue;
                        }
                        if let Some(k) = bins.find(w) {
                            per_bin[k].push((a, b, z));
                        }
                    }
                }
                for (k, entries) in per_bin.into_iter().enumerate() {
                    if entries.is_empty() {
                        continue;
                    }
                    let (down, up) = rates[k];
                    let adj: Vec<_> = entries.iter().map(|&(a, b, z)| (b, a, z.conj())).collect();
                    channels.push(Channel {
                        rate: down,
                        entries,
                    });
                    if up > R::zero() {
                        channels.push(Channel {
                            rate: up,
                            entries: adj,
                        });
                    }
                }
            }
        }
        let mut half_k = CMatrix::zeros(n);
        for ch in &channels {
            // L†L = Σ conj(v_ab) v_ab' |b⟩⟨b'| over entries sharing row a.
            for &(a, b, z) in &ch.entries {
                for &(a2, b2, z2) in &ch.entries {
                    if a == a2 {
                        half_k[(b, b2)] = half_k[(b, b2)] + z.conj() * z2 * ch.rate * R::lit(0.5);
                    }
                }
            }
        }
        let stiffness = (0..n).map(|i| half_k[(i, i)].re).fold(R::zero(), R::max) * R::lit(2.0);
        Ok(Self {
            spectrum,
            channels,
            half_k,
            stiffness,
        })
    }

    pub fn is_trivial(&self) -> bool {
        self.channels.is_empty()
    }

    /// `Σ γ (L ρ L† − ½{L†L, ρ})` for `ρ` in the eigenbasis.
    pub fn apply(&self, rho: &CMatrix<R>) -> CMatrix<R> {
        let n = rho.dim();
        let mut out = CMatrix::zeros(n);
        for ch in &self.channels {
            for &(a, b, z) in &ch.entries {
                for &(a2, b2, z2) in &ch.entries {
                    out[(a, a2)] = out[(a, a2)] + z * rho[(b, b2)] * z2.conj() * ch.rate;
                }
            }
        }
        let kr = self.half_k.matmul(rho);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = out[(i, j)] - kr[(i, j)] - kr[(j, i)].conj();
            }
        }
        out
    }

    /// One classical RK4 step of the dissipator alone.
    pub fn rk4(&self, rho: &CMatrix<R>, dt: R) -> CMatrix<R> {
        let half = dt * R::lit(0.5);
        let k1 = self.apply(rho);
        let k2 = self.apply(&(rho + &k1.scale(half)));
        let k3 = self.apply(&(rho + &k2.scale(half)));
        let k4 = self.apply(&(rho + &k3.scale(dt)));
        let mut incr = k1;
        incr += &k2.scale(R::lit(2.0));
        incr += &k3.scale(R::lit(2.0));
        incr += &k4;
        rho + &incr.scale(dt / R::lit(6.0))
    }

    /// Coherent phase `ρ_ab ← e^{−i(E_a − E_b)dt} ρ_ab`.
    pub fn rotate(&self, rho: &CMatrix<R>, dt: R) -> CMatrix<R> {
        let e = &self.spectrum.eigenvalues;
        CMatrix::from_fn(rho.dim(), |a, b| {
            let ph = -(e[a] - e[b]) * dt;
            rho[(a, b)] * C::new(ph.cos(), ph.sin())
        })
    }
}
