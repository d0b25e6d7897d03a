use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use ndarray::{Array2, ArrayView2};
use num_traits::{One, Zero};

use crate::error::{OttoError, Result};
use crate::scalar::{cr, Real, C};

/// Dense square complex matrix.
///
/// Hamiltonians, propagators, projectors and density matrices all share this
/// representation. Dimensions in this crate are 2, 4 or 16.
#[derive(Clone, PartialEq)]
pub struct CMatrix<R: Real> {
    data: Array2<C<R>>,
}

impl<R: Real> fmt::Debug for CMatrix<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({}x{})", self.dim(), self.dim())?;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let z = self[(i, j)];
                write!(f, " {:+.4}{:+.4}i", z.re.as_f64(), z.im.as_f64())?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl<R: Real> CMatrix<R> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            data: Array2::from_elem((dim, dim), C::zero()),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { C::one() } else { C::zero() })
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C<R>) -> Self {
        let mut f = f;
        Self {
            data: Array2::from_shape_fn((dim, dim), |(i, j)| f(i, j)),
        }
    }

    /// Builds a matrix from row-major entries; fails unless the length is a
    /// perfect square.
    pub fn from_rows(entries: Vec<C<R>>) -> Result<Self> {
        let dim = (entries.len() as f64).sqrt().round() as usize;
        if dim * dim != entries.len() || dim == 0 {
            return Err(OttoError::arg(format!(
                "{} entries do not form a square matrix",
                entries.len()
            )));
        }
        let data = Array2::from_shape_vec((dim, dim), entries)
            .map_err(|e| OttoError::arg(e.to_string()))?;
        Ok(Self { data })
    }

    pub fn from_array(data: Array2<C<R>>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(OttoError::arg(format!(
                "matrix is {}x{}, expected square",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(Self { data })
    }

    pub fn diag_real(values: &[R]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = cr(v);
        }
        m
    }

    /// `|ket⟩⟨bra|`.
    pub fn outer(ket: &[C<R>], bra: &[C<R>]) -> Result<Self> {
        if ket.len() != bra.len() {
            return Err(OttoError::arg("outer product of vectors of unequal length"));
        }
        Ok(Self::from_fn(ket.len(), |i, j| ket[i] * bra[j].conj()))
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn projector_onto(ket: &[C<R>]) -> Self {
        Self::from_fn(ket.len(), |i, j| ket[i] * ket[j].conj())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn view(&self) -> ArrayView2<'_, C<R>> {
        self.data.view()
    }

    pub fn as_array(&self) -> &Array2<C<R>> {
        &self.data
    }

    pub fn into_array(self) -> Array2<C<R>> {
        self.data
    }

    pub fn adjoint(&self) -> Self {
        Self {
            data: self.data.t().mapv(|z| z.conj()),
        }
    }

    pub fn trace(&self) -> C<R> {
        self.data.diag().iter().fold(C::zero(), |acc, &z| acc + z)
    }

    /// `Re Tr[self · other]`, computed without forming the product.
    pub fn trace_product_re(&self, other: &Self) -> R {
        let n = self.dim();
        let mut acc = R::zero();
        for i in 0..n {
            for k in 0..n {
                let a = self.data[(i, k)];
                let b = other.data[(k, i)];
                acc = acc + (a.re * b.re - a.im * b.im);
            }
        }
        acc
    }

    pub fn scale(&self, s: R) -> Self {
        Self {
            data: self.data.mapv(|z| z * s),
        }
    }

    pub fn scale_c(&self, s: C<R>) -> Self {
        Self {
            data: self.data.mapv(|z| z * s),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        Self {
            data: self.data.dot(&other.data),
        }
    }

    /// `self · m · self†`.
    pub fn conjugate(&self, m: &Self) -> Self {
        self.matmul(m).matmul(&self.adjoint())
    }

    /// `self† · m · self`.
    pub fn conjugate_adj(&self, m: &Self) -> Self {
        self.adjoint().matmul(m).matmul(self)
    }

    pub fn frobenius_norm(&self) -> R {
        self.data.iter().map(|z| z.norm_sqr()).sum::<R>().sqrt()
    }

    pub fn max_abs(&self) -> R {
        self.data.iter().fold(R::zero(), |m, z| m.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> R {
        self.data
            .iter()
            .zip(other.data.iter())
            .fold(R::zero(), |m, (a, b)| m.max((*a - *b).norm()))
    }

    /// `max |A − A†|` over all entries.
    pub fn hermiticity_error(&self) -> R {
        let n = self.dim();
        let mut err = R::zero();
        for i in 0..n {
            for j in i..n {
                err = err.max((self.data[(i, j)] - self.data[(j, i)].conj()).norm());
            }
        }
        err
    }

    pub fn is_hermitian(&self, tol: R) -> bool {
        self.hermiticity_error() <= tol
    }

    /// `(A + A†)/2`.
    pub fn hermitian_part(&self) -> Self {
        let half = R::lit(0.5);
        let n = self.dim();
        Self::from_fn(n, |i, j| {
            (self.data[(i, j)] + self.data[(j, i)].conj()) * half
        })
    }

    pub fn diagonal_real(&self) -> Vec<R> {
        self.data.diag().iter().map(|z| z.re).collect()
    }

    pub fn column(&self, j: usize) -> Vec<C<R>> {
        self.data.column(j).to_vec()
    }

    pub fn apply(&self, v: &[C<R>]) -> Vec<C<R>> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).fold(C::zero(), |acc, k| acc + self.data[(i, k)] * v[k]))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.is_zero())
    }

    pub fn map(&self, f: impl Fn(C<R>) -> C<R>) -> Self {
        Self {
            data: self.data.mapv(f),
        }
    }

    /// Converts to another scalar precision.
    pub fn cast<S: Real>(&self) -> CMatrix<S> {
        CMatrix {
            data: self
                .data
                .mapv(|z| C::new(S::lit(z.re.as_f64()), S::lit(z.im.as_f64()))),
        }
    }
}

/// Kronecker product; the left factor indexes the more significant qubits.
pub fn kron<R: Real>(a: &CMatrix<R>, b: &CMatrix<R>) -> CMatrix<R> {
    let (na, nb) = (a.dim(), b.dim());
    CMatrix::from_fn(na * nb, |i, j| a[(i / nb, j / nb)] * b[(i % nb, j % nb)])
}

/// `[A, B] = AB − BA`.
pub fn commutator<R: Real>(a: &CMatrix<R>, b: &CMatrix<R>) -> CMatrix<R> {
    &a.matmul(b) - &b.matmul(a)
}

impl<R: Real> Index<(usize, usize)> for CMatrix<R> {
    type Output = C<R>;
    #[inline]
    fn index(&self, idx: (usize, usize)) -> &C<R> {
        &self.data[idx]
    }
}

impl<R: Real> IndexMut<(usize, usize)> for CMatrix<R> {
    #[inline]
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut C<R> {
        &mut self.data[idx]
    }
}

impl<R: Real> Add for &CMatrix<R> {
    type Output = CMatrix<R>;
    fn add(self, rhs: Self) -> CMatrix<R> {
        CMatrix {
            data: &self.data + &rhs.data,
        }
    }
}

impl<R: Real> Sub for &CMatrix<R> {
    type Output = CMatrix<R>;
    fn sub(self, rhs: Self) -> CMatrix<R> {
        CMatrix {
            data: &self.data - &rhs.data,
        }
    }
}

impl<R: Real> Mul for &CMatrix<R> {
    type Output = CMatrix<R>;
    fn mul(self, rhs: Self) -> CMatrix<R> {
        self.matmul(rhs)
    }
}

impl<R: Real> Neg for &CMatrix<R> {
    type Output = CMatrix<R>;
    fn neg(self) -> CMatrix<R> {
        CMatrix {
            data: self.data.mapv(|z| -z),
        }
    }
}

impl<R: Real> AddAssign<&CMatrix<R>> for CMatrix<R> {
    fn add_assign(&mut self, rhs: &CMatrix<R>) {
        self.data.zip_mut_with(&rhs.data, |a, &b| *a = *a + b);
    }
}

impl<R: Real> SubAssign<&CMatrix<R>> for CMatrix<R> {
    fn sub_assign(&mut self, rhs: &CMatrix<R>) {
        self.data.zip_mut_with(&rhs.data, |a, &b| *a = *a - b);
    }
}
