//! Dense complex linear algebra for dimensions up to [`MAX_DIM`].
//!
//! Vectors and matrices are stored inline in fixed-size arrays so that the
//! hot loops of the basis optimizer and the statevector simulator never touch
//! the allocator for them.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 8;

/// Tolerance for unit norm and Gram-matrix checks.
pub const ORTHONORMAL_TOL: f64 = 1e-12;

/// Tolerance for entrywise Hermiticity.
pub const HERMITIAN_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn check_dim(dim: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

#[derive(Clone, Copy, PartialEq)]
pub struct ComplexVector {
    amps: [Complex64; MAX_DIM],
    dim: usize,
}

impl ComplexVector {
    pub fn new(amps: &[Complex64]) -> Result<Self> {
        check_dim(amps.len())?;
        let mut out = [ZERO; MAX_DIM];
        out[..amps.len()].copy_from_slice(amps);
        Ok(Self { amps: out, dim: amps.len() })
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        check_dim(amps.len())?;
        let mut out = [ZERO; MAX_DIM];
        for (o, &a) in out.iter_mut().zip(amps) {
            *o = Complex64::new(a, 0.0);
        }
        Ok(Self { amps: out, dim: amps.len() })
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { amps: [ZERO; MAX_DIM], dim })
    }

    /// The `k`-th standard basis vector.
    pub fn unit(dim: usize, k: usize) -> Result<Self> {
        let mut v = Self::zeros(dim)?;
        if k >= dim {
            return Err(Error::DimensionMismatch { left: k + 1, right: dim });
        }
        v.amps[k] = ONE;
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.amps[..self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Complex64> {
        self.as_slice().iter()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= ORTHONORMAL_TOL
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = *self;
        for a in &mut out.amps[..self.dim] {
            *a *= s;
        }
        out
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        same_dim(self.dim, other.dim)?;
        Ok(self
            .iter()
            .zip(other.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

impl fmt::Debug for ComplexVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

impl Index<usize> for ComplexVector {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.as_slice()[i]
    }
}

impl IndexMut<usize> for ComplexVector {
    fn index_mut(&mut self, i: usize) -> &mut Complex64 {
        &mut self.amps[..self.dim][i]
    }
}

impl Add for ComplexVector {
    type Output = ComplexVector;
    fn add(mut self, rhs: Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "vector dimension mismatch");
        for (a, b) in self.amps.iter_mut().zip(rhs.amps.iter()) {
            *a += b;
        }
        self
    }
}

impl Sub for ComplexVector {
    type Output = ComplexVector;
    fn sub(mut self, rhs: Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "vector dimension mismatch");
        for (a, b) in self.amps.iter_mut().zip(rhs.amps.iter()) {
            *a -= b;
        }
        self
    }
}

fn same_dim(left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { left, right })
    }
}

/// `⟨u|v⟩`, conjugate-linear in `u`.
pub fn inner(u: &ComplexVector, v: &ComplexVector) -> Result<Complex64> {
    same_dim(u.dim, v.dim)?;
    Ok(inner_unchecked(u, v))
}

#[inline]
pub(crate) fn inner_unchecked(u: &ComplexVector, v: &ComplexVector) -> Complex64 {
    u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum()
}

pub fn normalize(v: &ComplexVector) -> Result<ComplexVector> {
    let n2 = v.norm_sqr();
    if n2 <= 1e-30 {
        return Err(Error::ZeroNorm(n2));
    }
    Ok(v.scale(Complex64::new(1.0 / n2.sqrt(), 0.0)))
}

#[derive(Clone, Copy, PartialEq)]
pub struct HermitianMatrix {
    entries: [[Complex64; MAX_DIM]; MAX_DIM],
    dim: usize,
}

impl HermitianMatrix {
    /// Builds a matrix from `f(row, col)`, rejecting non-Hermitian input.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        check_dim(dim)?;
        let mut entries = [[ZERO; MAX_DIM]; MAX_DIM];
        for (i, row) in entries.iter_mut().enumerate().take(dim) {
            for (j, e) in row.iter_mut().enumerate().take(dim) {
                *e = f(i, j);
            }
        }
        let m = Self { entries, dim };
        let dev = m.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        Ok(m)
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::from_fn(dim, |_, _| ZERO)
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        Self::from_fn(diag.len(), |i, j| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                ZERO
            }
        })
    }

    /// The projector-like outer product `|v⟩⟨v|`.
    pub fn outer(v: &ComplexVector) -> Self {
        let mut entries = [[ZERO; MAX_DIM]; MAX_DIM];
        for i in 0..v.dim {
            for j in 0..v.dim {
                entries[i][j] = v[i] * v[j].conj();
            }
        }
        Self { entries, dim: v.dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        assert!(i < self.dim && j < self.dim, "matrix index out of range");
        self.entries[i][j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.entries[i][i].re).sum()
    }

    pub fn hermitian_deviation(&self) -> f64 {
        let mut dev = 0.0_f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                dev = dev.max((self.entries[i][j] - self.entries[j][i].conj()).norm());
            }
        }
        dev
    }

    pub fn apply(&self, v: &ComplexVector) -> Result<ComplexVector> {
        same_dim(self.dim, v.dim)?;
        let mut out = ComplexVector::zeros(self.dim)?;
        for i in 0..self.dim {
            out[i] = (0..self.dim).map(|j| self.entries[i][j] * v[j]).sum();
        }
        Ok(out)
    }

    /// `⟨v|M|v⟩`, real for Hermitian `M`.
    pub fn expectation(&self, v: &ComplexVector) -> Result<f64> {
        Ok(inner(v, &self.apply(v)?)?.re)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        same_dim(self.dim, other.dim)?;
        let mut dev = 0.0_f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                dev = dev.max((self.entries[i][j] - other.entries[i][j]).norm());
            }
        }
        Ok(dev)
    }

    fn zip_with(self, rhs: Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        let mut out = self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.entries[i][j] = f(self.entries[i][j], rhs.entries[i][j]);
            }
        }
        out
    }
}

impl fmt::Debug for HermitianMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[Complex64]> =
            (0..self.dim).map(|i| &self.entries[i][..self.dim]).collect();
        f.debug_list().entries(rows).finish()
    }
}

impl Add for HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: Self) -> Self {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: Self) -> Self {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for HermitianMatrix {
    type Output = HermitianMatrix;
    fn mul(mut self, s: f64) -> Self {
        for row in self.entries.iter_mut().take(self.dim) {
            for e in row.iter_mut().take(self.dim) {
                *e *= s;
            }
        }
        self
    }
}

/// An orthonormal set of `dim` vectors spanning `C^dim`.
#[derive(Clone, PartialEq)]
pub struct OrthonormalBasis {
    vectors: Vec<ComplexVector>,
}

impl OrthonormalBasis {
    pub fn new(vectors: Vec<ComplexVector>) -> Result<Self> {
        let basis = Self::from_parts(vectors)?;
        let dev = basis.gram_deviation();
        if dev > ORTHONORMAL_TOL {
            return Err(Error::NotOrthonormal(dev));
        }
        Ok(basis)
    }

    /// Orthonormalizes `vectors` in order (modified Gram-Schmidt, two passes).
    pub fn gram_schmidt(vectors: Vec<ComplexVector>) -> Result<Self> {
        let mut basis = Self::from_parts(vectors)?;
        for k in 0..basis.vectors.len() {
            let (done, rest) = basis.vectors.split_at_mut(k);
            let v = &mut rest[0];
            for _ in 0..2 {
                for q in done.iter() {
                    let c = inner_unchecked(q, v);
                    for i in 0..v.dim {
                        v.amps[i] -= c * q.amps[i];
                    }
                }
            }
            *v = normalize(v)?;
        }
        Ok(basis)
    }

    pub fn standard(dim: usize) -> Result<Self> {
        let vectors = (0..dim).map(|k| ComplexVector::unit(dim, k)).collect::<Result<_>>()?;
        Ok(Self { vectors })
    }

    fn from_parts(vectors: Vec<ComplexVector>) -> Result<Self> {
        let dim = vectors.first().map(ComplexVector::dim).unwrap_or(0);
        check_dim(dim)?;
        same_dim(vectors.len(), dim)?;
        for v in &vectors {
            same_dim(v.dim, dim)?;
        }
        Ok(Self { vectors })
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[ComplexVector] {
        &self.vectors
    }

    pub fn iter(&self) -> impl Iterator<Item = &ComplexVector> {
        self.vectors.iter()
    }

    /// Largest entrywise deviation of the Gram matrix from the identity.
    pub fn gram_deviation(&self) -> f64 {
        let mut dev = 0.0_f64;
        for (i, u) in self.vectors.iter().enumerate() {
            for (j, v) in self.vectors.iter().enumerate() {
                let target = if i == j { ONE } else { ZERO };
                dev = dev.max((inner_unchecked(u, v) - target).norm());
            }
        }
        dev
    }

    /// Applies `f` to every component of every vector, keeping the result
    /// only if it is still orthonormal.
    pub fn map_components(&self, f: impl Fn(&ComplexVector) -> ComplexVector) -> Result<Self> {
        Self::new(self.vectors.iter().map(f).collect())
    }
}

impl fmt::Debug for OrthonormalBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.vectors).finish()
    }
}

impl Index<usize> for OrthonormalBasis {
    type Output = ComplexVector;
    fn index(&self, i: usize) -> &ComplexVector {
        &self.vectors[i]
    }
}

/// Rotates `v` so its first component with modulus above 1e-12 is real and
/// positive.
fn fix_phase(v: &mut ComplexVector) {
    let pivot_index = v.iter().position(|c| c.norm() > 1e-12);
    if let Some(k) = pivot_index {
        let pivot = v[k];
        *v = v.scale(pivot.conj() / pivot.norm());
        v[k] = Complex64::new(pivot.norm(), 0.0);
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues are sorted in descending order. Each eigenvector has its first
/// nonzero component real and positive, which pins the output down up to the
/// choice of basis inside a degenerate eigenspace (fixed by the solver and
/// therefore reproducible).
pub fn hermitian_eig(m: &HermitianMatrix) -> Result<(Vec<f64>, OrthonormalBasis)> {
    let dev = m.hermitian_deviation();
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let n = m.dim;
    let dense = DMatrix::from_fn(n, n, |i, j| m.entries[i][j]);
    let eig = dense.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = Vec::with_capacity(n);
    for &k in &order {
        let col = eig.eigenvectors.column(k);
        let mut v = ComplexVector::new(col.as_slice())?;
        fix_phase(&mut v);
        vectors.push(v);
    }
    Ok((values, OrthonormalBasis::new(vectors)?))
}

/// Draws an orthonormal basis of `C^dim` from the Haar measure.
///
/// Gram-Schmidt on independent standard complex Gaussian vectors is the QR
/// factorization with a positive real diagonal in the triangular factor, so
/// no further phase correction is needed for exact Haar uniformity.
pub fn haar_random_basis<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<OrthonormalBasis> {
    check_dim(dim)?;
    let mut vectors = Vec::with_capacity(dim);
    for _ in 0..dim {
        let mut v = ComplexVector::zeros(dim)?;
        for a in &mut v.amps[..dim] {
            *a = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        }
        vectors.push(v);
    }
    OrthonormalBasis::gram_schmidt(vectors)
}
