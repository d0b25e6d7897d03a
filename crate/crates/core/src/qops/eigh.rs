use std::ops::Range;

use num_traits::Zero;

use crate::error::{OttoError, Result};
use crate::qops::matrix::CMatrix;
use crate::scalar::{cr, Real, C};

const MAX_SWEEPS: usize = 64;

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<R: Real> {
    pub eigenvalues: Vec<R>,
    /// Column `k` is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: CMatrix<R>,
}

impl<R: Real> Spectrum<R> {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, k: usize) -> Vec<C<R>> {
        self.eigenvectors.column(k)
    }

    /// `V f(Λ) V†`.
    pub fn map(&self, f: impl Fn(R) -> C<R>) -> CMatrix<R> {
        let v = &self.eigenvectors;
        let n = self.dim();
        let fl: Vec<C<R>> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        CMatrix::from_fn(n, |i, j| {
            (0..n).fold(C::zero(), |acc, k| {
                acc + v[(i, k)] * fl[k] * v[(j, k)].conj()
            })
        })
    }

    /// `V Λ V†`.
    pub fn reconstruct(&self) -> CMatrix<R> {
        self.map(cr)
    }

    /// Projector onto the span of eigenvector columns in `range`.
    pub fn projector(&self, range: Range<usize>) -> CMatrix<R> {
        let v = &self.eigenvectors;
        let n = self.dim();
        CMatrix::from_fn(n, |i, j| {
            range
                .clone()
                .fold(C::zero(), |acc, k| acc + v[(i, k)] * v[(j, k)].conj())
        })
    }

    /// Maximal runs of eigenvalues whose neighbours differ by less than `tol`.
    pub fn degenerate_blocks(&self, tol: R) -> Vec<Range<usize>> {
        degenerate_blocks(&self.eigenvalues, tol)
    }
}

/// Groups a sorted list into runs whose consecutive gaps are below `tol`.
pub fn degenerate_blocks<R: Real>(sorted: &[R], tol: R) -> Vec<Range<usize>> {
    let mut blocks = Vec::new();
    let mut start = 0;
    for k in 1..=sorted.len() {
        if k == sorted.len() || sorted[k] - sorted[k - 1] >= tol {
            blocks.push(start..k);
            start = k;
        }
    }
    blocks
}

/// Hermitian eigen-decomposition by cyclic complex Jacobi rotations.
///
/// Fails with a precondition error if `h` is not Hermitian to `1e-10`
/// relative to its largest entry.
pub fn eigh<R: Real>(h: &CMatrix<R>) -> Result<Spectrum<R>> {
    check_hermitian(h)?;
    let (values, vectors) = jacobi(h.hermitian_part(), CMatrix::identity(h.dim()))?;
    Ok(sorted(values, vectors))
}

/// Like [`eigh`], but rotates into the basis `guess` first.
///
/// When `guess` is the eigenbasis of a nearby matrix (the previous step of a
/// slow ramp) only a sweep or two is needed.
pub fn eigh_with_guess<R: Real>(h: &CMatrix<R>, guess: &CMatrix<R>) -> Result<Spectrum<R>> {
    check_hermitian(h)?;
    if guess.dim() != h.dim() {
        return Err(OttoError::arg("eigenbasis guess has the wrong dimension"));
    }
    let q = orthonormalize(guess);
    let a = q.conjugate_adj(&h.hermitian_part()).hermitian_part();
    let (values, vectors) = jacobi(a, q)?;
    Ok(sorted(values, vectors))
}

fn check_hermitian<R: Real>(h: &CMatrix<R>) -> Result<()> {
    let scale = h.max_abs().max(R::one());
    let err = h.hermiticity_error();
    if err > R::tol(1e-10) * scale {
        return Err(OttoError::pre(format!(
            "matrix is not Hermitian (max |A - A^H| = {:e})",
            err.as_f64()
        )));
    }
    Ok(())
}

/// Modified Gram–Schmidt on the columns.
fn orthonormalize<R: Real>(m: &CMatrix<R>) -> CMatrix<R> {
    let n = m.dim();
    let mut q = m.clone();
    for j in 0..n {
        for k in 0..j {
            let mut dot = C::zero();
            for i in 0..n {
                dot = dot + q[(i, k)].conj() * q[(i, j)];
            }
            for i in 0..n {
                let qik = q[(i, k)];
                q[(i, j)] = q[(i, j)] - qik * dot;
            }
        }
        let norm = (0..n).map(|i| q[(i, j)].norm_sqr()).sum::<R>().sqrt();
        for i in 0..n {
            q[(i, j)] = q[(i, j)] / norm;
        }
    }
    q
}

fn off_diagonal_norm<R: Real>(a: &CMatrix<R>) -> R {
    let n = a.dim();
    let mut s = R::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s = s + a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Diagonalizes the Hermitian `a` in place, accumulating rotations into `v`.
fn jacobi<R: Real>(mut a: CMatrix<R>, mut v: CMatrix<R>) -> Result<(Vec<R>, CMatrix<R>)> {
    let n = a.dim();
    let frob = a.frobenius_norm();
    let target = R::epsilon() * R::lit(n as f64) * frob;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= target {
            return Ok(((0..n).map(|i| a[(i, i)].re).collect(), v));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if off_diagonal_norm(&a) <= target {
        return Ok(((0..n).map(|i| a[(i, i)].re).collect(), v));
    }
    Err(OttoError::NoConvergence(MAX_SWEEPS))
}

/// Zeroes `a[p][q]` with the unitary `G = [[c, s], [−s·ē, c·ē]]` on columns
/// `p, q`, where `e` is the phase of `a[p][q]`: `A ← G†AG`, `V ← VG`.
fn rotate<R: Real>(a: &mut CMatrix<R>, v: &mut CMatrix<R>, p: usize, q: usize) {
    let z = a[(p, q)];
    let r = z.norm();
    if r == R::zero() {
        return;
    }
    let n = a.dim();
    let e = z / r;
    let ec = e.conj();
    let (app, aqq) = (a[(p, p)].re, a[(q, q)].re);
    let theta = (aqq - app) / (R::lit(2.0) * r);
    let t = if theta >= R::zero() {
        R::one() / (theta + (theta * theta + R::one()).sqrt())
    } else {
        -R::one() / (-theta + (theta * theta + R::one()).sqrt())
    };
    let cs = R::one() / (R::one() + t * t).sqrt();
    let sn = t * cs;

    for k in 0..n {
        let (akp, akq) = (a[(k, p)], a[(k, q)]);
        a[(k, p)] = akp * cs - akq * ec * sn;
        a[(k, q)] = akp * sn + akq * ec * cs;
    }
    for k in 0..n {
        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
        a[(p, k)] = apk * cs - aqk * e * sn;
        a[(q, k)] = apk * sn + aqk * e * cs;
    }
    a[(p, p)] = cr(app - t * r);
    a[(q, q)] = cr(aqq + t * r);
    a[(p, q)] = C::zero();
    a[(q, p)] = C::zero();

    for k in 0..n {
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = vkp * cs - vkq * ec * sn;
        v[(k, q)] = vkp * sn + vkq * ec * cs;
    }
}

fn sorted<R: Real>(values: Vec<R>, vectors: CMatrix<R>) -> Spectrum<R> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        values[i]
            .partial_cmp(&values[j])
            .expect("finite eigenvalues")
    });
    Spectrum {
        eigenvalues: order.iter().map(|&k| values[k]).collect(),
        eigenvectors: CMatrix::from_fn(n, |i, j| vectors[(i, order[j])]),
    }
}

/// `exp(−i h dt)`, exact for constant `h`.
pub fn propagator<R: Real>(h: &CMatrix<R>, dt: R) -> Result<CMatrix<R>> {
    if !dt.is_finite() {
        return Err(OttoError::arg("propagator time step must be finite"));
    }
    if dt == R::zero() {
        return Ok(CMatrix::identity(h.dim()));
    }
    Ok(phase_propagator(&eigh(h)?, dt))
}

/// `V e^{−iΛdt} V†` from an existing decomposition.
pub fn phase_propagator<R: Real>(spec: &Spectrum<R>, dt: R) -> CMatrix<R> {
    spec.map(|l| {
        let ph = -l * dt;
        C::new(ph.cos(), ph.sin())
    })
}

/// `max |U†U − I|`.
pub fn unitarity_error<R: Real>(u: &CMatrix<R>) -> R {
    u.adjoint()
        .matmul(u)
        .max_abs_diff(&CMatrix::identity(u.dim()))
}
