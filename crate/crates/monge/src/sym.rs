//! Matrix algebra bridging the Hermitian n×n and real symmetric 2n×2n worlds.
//!
//! A Hermitian matrix H = A + √-1·B embeds into Sym(2n) as the block matrix
//! ((A, B), (-B, A)); the image is exactly the set of J-invariant symmetric
//! matrices for the standard complex structure J. The projection
//! p(N) = ½(N + JᵀNJ) retracts Sym(2n) onto that image. Determinants square
//! under the embedding and eigenvalues double in multiplicity, which is what
//! lets every Hermitian eigenvalue problem ride on a real symmetric solver.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Real symmetric matrix. Construction symmetrizes, so the invariant
/// `m[(i,j)] == m[(j,i)]` holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    data: DMatrix<f64>,
}

impl SymMatrix {
    /// Symmetrize-and-wrap. The stored matrix is ½(M + Mᵀ).
    pub fn new(m: DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "SymMatrix requires a square matrix");
        let sym = (&m + m.transpose()) * 0.5;
        SymMatrix { data: sym }
    }

    /// Wrap a matrix that is already exactly symmetric (e.g. assembled
    /// entry-by-entry). Debug builds verify the claim.
    pub fn from_symmetric(m: DMatrix<f64>) -> Self {
        debug_assert!(m == m.transpose(), "matrix not exactly symmetric");
        SymMatrix { data: m }
    }

    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            data: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        SymMatrix {
            data: DMatrix::identity(dim, dim),
        }
    }

    pub fn scaled_identity(dim: usize, c: f64) -> Self {
        SymMatrix {
            data: DMatrix::identity(dim, dim) * c,
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = self.data.clone().symmetric_eigenvalues();
        let mut v: Vec<f64> = eig.iter().copied().collect();
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        v
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self
            .eigenvalues()
            .last()
            .expect("eigenvalues of empty matrix")
    }

    /// Operator norm: max |eigenvalue|. Zero iff the matrix is zero.
    pub fn operator_norm(&self) -> f64 {
        self.eigenvalues()
            .iter()
            .fold(0.0_f64, |acc, &l| acc.max(l.abs()))
    }

    /// Frobenius inner product tr(A·B).
    pub fn dot(&self, other: &SymMatrix) -> f64 {
        self.data.dot(&other.data)
    }

    pub fn trace(&self) -> f64 {
        self.data.trace()
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        SymMatrix {
            data: &self.data * c,
        }
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix {
            data: &self.data + &other.data,
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix {
            data: &self.data - &other.data,
        }
    }

    /// A + c·I.
    pub fn shift(&self, c: f64) -> SymMatrix {
        let mut m = self.data.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += c;
        }
        SymMatrix { data: m }
    }

    /// Determinant via LU.
    pub fn det(&self) -> f64 {
        self.data.clone().lu().determinant()
    }

    /// Spectral clamp: replace every eigenvalue λ by min(hi, max(lo, λ)).
    /// This is the Frobenius projection onto the spectral box [lo·I, hi·I].
    pub fn clamp_eigenvalues(&self, lo: f64, hi: f64) -> SymMatrix {
        let eig = nalgebra::SymmetricEigen::new(self.data.clone());
        let clamped = DVector::from_iterator(
            eig.eigenvalues.len(),
            eig.eigenvalues.iter().map(|&l| l.clamp(lo, hi)),
        );
        let m = &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose();
        SymMatrix::new(m)
    }
}

/// Complex Hermitian matrix. Construction enforces conjugate symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct HermMatrix {
    data: DMatrix<Complex64>,
}

impl HermMatrix {
    /// Hermitize-and-wrap: stores ½(M + Mᴴ).
    pub fn new(m: DMatrix<Complex64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "HermMatrix requires a square matrix");
        let herm = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        HermMatrix { data: herm }
    }

    pub fn from_real(m: &DMatrix<f64>) -> Self {
        let c = m.map(|x| Complex64::new(x, 0.0));
        HermMatrix::new(c)
    }

    pub fn identity(n: usize) -> Self {
        HermMatrix {
            data: DMatrix::identity(n, n),
        }
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        HermMatrix {
            data: DMatrix::identity(n, n) * Complex64::new(c, 0.0),
        }
    }

    pub fn zeros(n: usize) -> Self {
        HermMatrix {
            data: DMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn add(&self, other: &HermMatrix) -> HermMatrix {
        HermMatrix {
            data: &self.data + &other.data,
        }
    }

    pub fn sub(&self, other: &HermMatrix) -> HermMatrix {
        HermMatrix {
            data: &self.data - &other.data,
        }
    }

    pub fn scale(&self, c: f64) -> HermMatrix {
        HermMatrix {
            data: &self.data * Complex64::new(c, 0.0),
        }
    }

    /// Real trace (the imaginary part of a Hermitian trace is zero).
    pub fn trace(&self) -> f64 {
        self.data.trace().re
    }

    /// Determinant (real for Hermitian matrices; the imaginary residue is dropped).
    pub fn det(&self) -> f64 {
        self.data.clone().lu().determinant().re
    }

    /// Eigenvalues in descending order. Hermitian matrices have real spectra;
    /// the solver works on the complex matrix directly.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = nalgebra::SymmetricEigen::new(self.data.clone());
        let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        v
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self
            .eigenvalues()
            .last()
            .expect("eigenvalues of empty matrix")
    }

    pub fn operator_norm(&self) -> f64 {
        self.eigenvalues()
            .iter()
            .fold(0.0_f64, |acc, &l| acc.max(l.abs()))
    }

    /// Hermitian square root of a positive definite matrix.
    pub fn sqrt(&self) -> Result<HermMatrix> {
        let eig = nalgebra::SymmetricEigen::new(self.data.clone());
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min <= 0.0 {
            return Err(Error::MetricNotPositive {
                min_eigenvalue: min,
            });
        }
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            eig.eigenvalues.len(),
            eig.eigenvalues.iter().map(|&l| Complex64::new(l.sqrt(), 0.0)),
        ));
        let m = &eig.eigenvectors * d * eig.eigenvectors.adjoint();
        Ok(HermMatrix::new(m))
    }
}

/// An almost complex structure: a real 2n×2n matrix with J·J = -I.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexStructure {
    data: DMatrix<f64>,
}

impl ComplexStructure {
    /// The standard structure on ℂⁿ: ∂/∂xⁱ ↦ ∂/∂xⁿ⁺ⁱ, ∂/∂xⁿ⁺ⁱ ↦ -∂/∂xⁱ,
    /// i.e. the block matrix ((0, -I), (I, 0)).
    pub fn standard(n: usize) -> Self {
        let dim = 2 * n;
        let mut j = DMatrix::zeros(dim, dim);
        for i in 0..n {
            j[(i, n + i)] = -1.0;
            j[(n + i, i)] = 1.0;
        }
        ComplexStructure { data: j }
    }

    /// Wrap an arbitrary matrix, verifying J·J = -I to 1e-12 entrywise.
    pub fn from_matrix(j: DMatrix<f64>) -> Result<Self> {
        let dim = j.nrows();
        if dim != j.ncols() || dim % 2 != 0 {
            return Err(Error::InvalidConfig(
                "complex structure must be square of even dimension".into(),
            ));
        }
        let jj = &j * &j;
        let mut dev = 0.0_f64;
        for i in 0..dim {
            for k in 0..dim {
                let target = if i == k { -1.0 } else { 0.0 };
                dev = dev.max((jj[(i, k)] - target).abs());
            }
        }
        if dev > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "J·J differs from -I by {dev:.3e}"
            )));
        }
        Ok(ComplexStructure { data: j })
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn is_standard(&self) -> bool {
        let std = ComplexStructure::standard(self.dim() / 2);
        (&self.data - std.matrix()).abs().max() <= 1e-12
    }
}

/// The embedding ι(H) = ((A, B), (-B, A)) for H = A + √-1·B.
///
/// The image is the J-invariant part of Sym(2n); det(ι(H)) = (det H)² and
/// the ordering of Hermitian forms is preserved in both directions.
pub fn iota(h: &HermMatrix) -> SymMatrix {
    let n = h.dim();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h.matrix()[(i, j)];
            m[(i, j)] = z.re;
            m[(n + i, n + j)] = z.re;
            m[(i, n + j)] = z.im;
            m[(n + i, j)] = -z.im;
        }
    }
    SymMatrix::from_symmetric(m)
}

/// Inverse of `iota` on J-invariant symmetric matrices (standard J).
///
/// Fails with `NotJInvariant` when ‖JᵀMJ - M‖ exceeds 1e-10·(‖M‖ + 1).
pub fn iota_inverse(m: &SymMatrix, j: &ComplexStructure) -> Result<HermMatrix> {
    assert!(j.is_standard(), "iota_inverse requires the standard J");
    let dev = j_invariance_defect(m, j);
    if dev > 1e-10 * (m.operator_norm() + 1.0) {
        return Err(Error::NotJInvariant { deviation: dev });
    }
    let dim = m.dim();
    let n = dim / 2;
    let mm = m.matrix();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        for k in 0..n {
            // Average the two copies of each block so roundoff in the input
            // cannot break conjugate symmetry.
            let re = 0.5 * (mm[(i, k)] + mm[(n + i, n + k)]);
            let im = 0.5 * (mm[(i, n + k)] - mm[(n + i, k)]);
            h[(i, k)] = Complex64::new(re, im);
        }
    }
    Ok(HermMatrix::new(h))
}

/// ‖JᵀMJ - M‖ in operator norm.
pub fn j_invariance_defect(m: &SymMatrix, j: &ComplexStructure) -> f64 {
    let jm = j.matrix().transpose() * m.matrix() * j.matrix();
    SymMatrix::new(jm - m.matrix()).operator_norm()
}

/// J-invariant projection p(N) = ½(N + JᵀNJ).
///
/// Linear, idempotent, and positivity preserving; for the standard J its
/// image equals the image of ι.
pub fn project_j(n: &SymMatrix, j: &ComplexStructure) -> SymMatrix {
    assert_eq!(n.dim(), j.dim(), "dimension mismatch in project_j");
    let jnj = j.matrix().transpose() * n.matrix() * j.matrix();
    SymMatrix::new((n.matrix() + jnj) * 0.5)
}

/// Operator norm of a symmetric matrix (max |eigenvalue|).
pub fn operator_norm(n: &SymMatrix) -> f64 {
    n.operator_norm()
}

/// Eigenvalues of g⁻¹h for Hermitian h and positive definite Hermitian g,
/// in descending order.
///
/// Computed as Cholesky g = LLᴴ followed by a Hermitian eigensolve of the
/// congruence-reduced matrix L⁻¹ h L⁻ᴴ, which keeps the spectrum real by
/// construction. Invariant under simultaneous congruence of (h, g).
pub fn generalized_eigenvalues(h: &HermMatrix, g: &HermMatrix) -> Result<Vec<f64>> {
    assert_eq!(h.dim(), g.dim(), "dimension mismatch");
    let min = g.min_eigenvalue();
    if min <= 1e-12 {
        return Err(Error::MetricNotPositive {
            min_eigenvalue: min,
        });
    }
    let chol = nalgebra::Cholesky::new(g.matrix().clone()).ok_or(Error::MetricNotPositive {
        min_eigenvalue: min,
    })?;
    let l = chol.l();
    let tmp = l
        .solve_lower_triangular(h.matrix())
        .expect("Cholesky factor is invertible");
    let reduced = l
        .solve_lower_triangular(&tmp.adjoint())
        .expect("Cholesky factor is invertible")
        .adjoint();
    Ok(HermMatrix::new(reduced).eigenvalues())
}

/// Generalized eigenpairs (λᵢ, vᵢ) of g⁻¹h with g-orthonormal eigenvectors,
/// descending. Used for derivative formulas of eigenvalue-symmetric operators.
pub fn generalized_eigenpairs(
    h: &HermMatrix,
    g: &HermMatrix,
) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let min = g.min_eigenvalue();
    if min <= 1e-12 {
        return Err(Error::MetricNotPositive {
            min_eigenvalue: min,
        });
    }
    let chol = nalgebra::Cholesky::new(g.matrix().clone()).ok_or(Error::MetricNotPositive {
        min_eigenvalue: min,
    })?;
    let l = chol.l();
    let tmp = l
        .solve_lower_triangular(h.matrix())
        .expect("Cholesky factor is invertible");
    let reduced = HermMatrix::new(
        l.solve_lower_triangular(&tmp.adjoint())
            .expect("Cholesky factor is invertible")
            .adjoint(),
    );
    let eig = nalgebra::SymmetricEigen::new(reduced.matrix().clone());
    // Sort descending and back-substitute v = L⁻ᴴ w so that vᴴ g v = I.
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let nn = h.dim();
    let mut w = DMatrix::zeros(nn, nn);
    let mut vals = Vec::with_capacity(nn);
    for (col, &idx) in order.iter().enumerate() {
        vals.push(eig.eigenvalues[idx]);
        w.set_column(col, &eig.eigenvectors.column(idx));
    }
    let lh = l.adjoint();
    let v = lh
        .solve_upper_triangular(&w)
        .expect("Cholesky factor is invertible");
    Ok((vals, v))
}
