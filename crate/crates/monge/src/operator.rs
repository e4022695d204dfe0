//! The six equation families as triples (F, S, T) on Sym(2n) × B₁, their
//! admissible convex sets 𝓔, residual evaluation, analytic derivatives DF,
//! and sampled certification of the structure conditions: uniform
//! ellipticity of DF, fiberwise concavity of F, Hölder continuity in x of
//! F, S and T, linearity and positivity of T.
//!
//! Eigenvalue convention: for the σ_k-type families the eigenvalues λ(x)
//! are those of the pencil (½·ι⁻¹(p(N)), g(x)); with N = S + T(D²u) this
//! makes λ the eigenvalues of g⁻¹(h + u_{ij̄}), so the right-hand sides
//! carry no stray factors of two. The determinant families use det(N)^{1/2n}
//! on the full matrix, where the factor two lives inside N = ι(2(h + u)).

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::background::Background;
use crate::error::{Error, Result};
use crate::sampling::{
    par_map_indexed, random_unitary, rng_for, uniform, unit_vector, weyl_orthogonal, weyl_point,
};
use crate::sym::{
    generalized_eigenpairs, generalized_eigenvalues, iota, iota_inverse, project_j,
    ComplexStructure, HermMatrix, SymMatrix,
};
use crate::symfun::{binomial, in_gamma_cone, sigma, sigma_reduced, EigenTuple};

/// One of the six reduced equation families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Family {
    MongeAmpere,
    Hessian { k: usize },
    Quotient { k: usize, l: usize },
    PshMongeAmpere,
    PshHessian { k: usize },
    PshQuotient { k: usize, l: usize },
}

impl Family {
    pub fn is_psh(&self) -> bool {
        matches!(
            self,
            Family::PshMongeAmpere | Family::PshHessian { .. } | Family::PshQuotient { .. }
        )
    }

    fn is_det(&self) -> bool {
        matches!(self, Family::MongeAmpere | Family::PshMongeAmpere)
    }
}

/// Which equation to solve: family, complex dimension, integrability flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquationSpec {
    pub family: Family,
    pub n: usize,
    pub almost_complex: bool,
}

impl EquationSpec {
    pub fn new(family: Family, n: usize) -> Self {
        EquationSpec {
            family,
            n,
            almost_complex: false,
        }
    }

    pub fn almost_complex(mut self) -> Self {
        self.almost_complex = true;
        self
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n == 0 {
            return Err(Error::InvalidConfig("n must be positive".into()));
        }
        match self.family {
            Family::MongeAmpere => {}
            Family::PshMongeAmpere => {
                if n < 2 {
                    return Err(Error::InvalidConfig(
                        "psh families need n >= 2 (the transform divides by n-1)".into(),
                    ));
                }
            }
            Family::Hessian { k } | Family::PshHessian { k } => {
                if !(2 <= k && k + 1 <= n) {
                    return Err(Error::InvalidConfig(format!(
                        "Hessian family requires 2 <= k <= n-1, got k={k}, n={n}"
                    )));
                }
            }
            Family::Quotient { k, l } | Family::PshQuotient { k, l } => {
                if !(1 < k && k < l && l <= n) {
                    return Err(Error::InvalidConfig(format!(
                        "quotient family requires 1 < k < l <= n, got k={k}, l={l}, n={n}"
                    )));
                }
            }
        }
        if self.almost_complex && !self.family.is_det() {
            return Err(Error::InvalidConfig(
                "almost-complex σ_k families are not supported; use the determinant families"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// The compact convex admissible set 𝓔.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum SetKind {
    /// lo·I ≤ N ≤ hi·I in Sym(2n).
    EigenBox { lo: f64, hi: f64 },
    /// J-invariant N whose pencil eigenvalues λ(0) of (½ι⁻¹(p(N)), g(0))
    /// satisfy -2K₀ ≤ λᵢ ≤ 2K₀ and σ_j(λ)^{1/j} ≥ (2K₀)⁻¹ for j ≤ k.
    ConeBox { k0: f64, k: usize },
}

#[derive(Debug, Clone)]
pub struct ConvexSetE {
    pub kind: SetKind,
    /// Reference metric g(0) for the pencil eigenvalues.
    pub g0: HermMatrix,
}

impl ConvexSetE {
    pub fn eigen_box(n: usize, lo: f64, hi: f64) -> Self {
        assert!(0.0 < lo && lo < hi);
        ConvexSetE {
            kind: SetKind::EigenBox { lo, hi },
            g0: HermMatrix::identity(n),
        }
    }

    pub fn cone_box(g0: HermMatrix, k0: f64, k: usize) -> Self {
        assert!(k0 > 0.0 && k >= 1);
        ConvexSetE {
            kind: SetKind::ConeBox { k0, k },
            g0,
        }
    }

    /// Default set per family: the eigenvalue box with C₀ = 4 for the
    /// determinant families, the cone box with K₀ = 2 at the admissibility
    /// degree for the σ_k families.
    pub fn default_for(spec: &EquationSpec, bg: &Background) -> Self {
        match spec.family {
            Family::MongeAmpere | Family::PshMongeAmpere => {
                ConvexSetE::eigen_box(spec.n, 0.25, 4.0)
            }
            Family::Hessian { k } | Family::PshHessian { k } => {
                ConvexSetE::cone_box(bg.g(&vec![0.0; spec.dim()]), 2.0, k)
            }
            Family::Quotient { l, .. } | Family::PshQuotient { l, .. } => {
                ConvexSetE::cone_box(bg.g(&vec![0.0; spec.dim()]), 2.0, l)
            }
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.g0.dim()
    }

    fn cone_lambda(&self, n: &SymMatrix) -> Result<EigenTuple> {
        let j = ComplexStructure::standard(self.g0.dim());
        let p = project_j(n, &j);
        let herm = iota_inverse(&p, &j)?.scale(0.5);
        Ok(EigenTuple::new(generalized_eigenvalues(&herm, &self.g0)?))
    }

    fn cone_lambda_ok(k0: f64, k: usize, lam: &EigenTuple) -> bool {
        let bound = 2.0 * k0;
        if lam.values().iter().any(|&l| l < -bound || l > bound) {
            return false;
        }
        for j in 1..=k {
            let s = match sigma(j, lam) {
                Ok(s) => s,
                Err(_) => return false,
            };
            if s <= 0.0 || s.powf(1.0 / j as f64) < 1.0 / bound {
                return false;
            }
        }
        true
    }

    pub fn contains(&self, n: &SymMatrix) -> bool {
        match self.kind {
            SetKind::EigenBox { lo, hi } => {
                let ev = n.eigenvalues();
                ev[0] <= hi + 1e-12 && ev[ev.len() - 1] >= lo - 1e-12
            }
            SetKind::ConeBox { k0, k } => {
                let j = ComplexStructure::standard(self.g0.dim());
                let p = project_j(n, &j);
                // Members live in the J-invariant subspace; the cone data
                // cannot see (or bound) anti-invariant components.
                if n.sub(&p).operator_norm() > 1e-9 * (n.operator_norm() + 1.0) {
                    return false;
                }
                match self.cone_lambda(n) {
                    Ok(lam) => Self::cone_lambda_ok(k0, k, &lam),
                    Err(_) => false,
                }
            }
        }
    }

    /// 10% dilation, the working neighborhood 𝓔⁺ of the operators.
    pub fn dilate(&self, factor: f64) -> ConvexSetE {
        let kind = match self.kind {
            SetKind::EigenBox { lo, hi } => SetKind::EigenBox {
                lo: lo / factor,
                hi: hi * factor,
            },
            SetKind::ConeBox { k0, k } => SetKind::ConeBox {
                k0: k0 * factor,
                k,
            },
        };
        ConvexSetE {
            kind,
            g0: self.g0.clone(),
        }
    }

    /// Random member.
    pub fn sample(&self, rng: &mut rand_chacha::ChaCha8Rng) -> SymMatrix {
        let dim = self.dim();
        match self.kind {
            SetKind::EigenBox { lo, hi } => {
                crate::sampling::random_sym_in_box(rng, dim, lo, hi)
            }
            SetKind::ConeBox { k0, k } => {
                let nn = self.g0.dim();
                let lam = self.sample_cone_lambda(rng, k0, k);
                let u = random_unitary(rng, nn);
                self.assemble_from_lambda(&lam, &u)
            }
        }
    }

    fn sample_cone_lambda(
        &self,
        rng: &mut rand_chacha::ChaCha8Rng,
        k0: f64,
        k: usize,
    ) -> Vec<f64> {
        let nn = self.g0.dim();
        for _ in 0..500 {
            let lam: Vec<f64> = (0..nn)
                .map(|_| uniform(rng, -0.4 * k0, 1.8 * k0))
                .collect();
            if Self::cone_lambda_ok(k0, k, &EigenTuple::new(lam.clone())) {
                return lam;
            }
        }
        vec![1.0; nn]
    }

    fn assemble_from_lambda(&self, lam: &[f64], u: &DMatrix<Complex64>) -> SymMatrix {
        let gs = self.g0.sqrt().expect("reference metric is positive definite");
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            lam.len(),
            lam.iter().map(|&l| Complex64::new(l, 0.0)),
        ));
        let h = HermMatrix::new(gs.matrix() * u * d * u.adjoint() * gs.matrix());
        iota(&h.scale(2.0))
    }

    /// Deterministic low-discrepancy member for index i.
    pub fn low_discrepancy(&self, i: usize) -> SymMatrix {
        let dim = self.dim();
        match self.kind {
            SetKind::EigenBox { lo, hi } => {
                let t = weyl_point(i, dim);
                let d = nalgebra::DVector::from_iterator(
                    dim,
                    t.iter().map(|&u| lo + (hi - lo) * u),
                );
                let q = weyl_orthogonal(i, dim);
                SymMatrix::new(&q * DMatrix::from_diagonal(&d) * q.transpose())
            }
            SetKind::ConeBox { k0, k } => {
                let nn = self.g0.dim();
                let t = weyl_point(i, nn);
                let raw: Vec<f64> = t.iter().map(|&u| -0.4 * k0 + 2.2 * k0 * u).collect();
                let lam = blend_into_cone(&raw, k0, k);
                let q = weyl_orthogonal(i, nn).map(|v| Complex64::new(v, 0.0));
                self.assemble_from_lambda(&lam, &q)
            }
        }
    }

    /// Extreme points used to seed dual sample sets: the axis-aligned
    /// {lo, hi} diagonal patterns of the eigenvalue box (capped at 2¹²).
    pub fn extreme_points(&self) -> Vec<SymMatrix> {
        match self.kind {
            SetKind::EigenBox { lo, hi } => {
                let dim = self.dim();
                let count = 1usize << dim.min(12);
                (0..count)
                    .map(|mask| {
                        let d = nalgebra::DVector::from_iterator(
                            dim,
                            (0..dim).map(|b| if mask >> (b % 12) & 1 == 1 { hi } else { lo }),
                        );
                        SymMatrix::from_symmetric(DMatrix::from_diagonal(&d))
                    })
                    .collect()
            }
            SetKind::ConeBox { .. } => vec![],
        }
    }

    /// Projection into the set. Exact (Frobenius-optimal) for the eigenvalue
    /// box; for the cone box a retraction that clamps the pencil eigenvalues
    /// and blends toward the interior point λ = 𝟙 until admissible.
    pub fn project(&self, n: &SymMatrix) -> SymMatrix {
        match self.kind {
            SetKind::EigenBox { lo, hi } => n.clamp_eigenvalues(lo, hi),
            SetKind::ConeBox { k0, k } => {
                let j = ComplexStructure::standard(self.g0.dim());
                let p = project_j(n, &j);
                let herm = iota_inverse(&p, &j)
                    .expect("projected matrix is J-invariant")
                    .scale(0.5);
                let (lam, v) = generalized_eigenpairs(&herm, &self.g0)
                    .expect("reference metric is positive definite");
                let bound = 2.0 * k0 * (1.0 - 1e-9);
                let clamped: Vec<f64> = lam.iter().map(|&l| l.clamp(-bound, bound)).collect();
                let lam_ok = blend_into_cone(&clamped, k0, k);
                // Reconstruct in the same pencil eigenbasis: H = g₀ V Λ Vᴴ g₀
                // is wrong in general; use H = g₀^{1/2} W Λ Wᴴ g₀^{1/2} with
                // the unitary W = g₀^{1/2} V.
                let gs = self.g0.sqrt().expect("reference metric is positive definite");
                let w = gs.matrix() * &v;
                let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                    lam_ok.len(),
                    lam_ok.iter().map(|&l| Complex64::new(l, 0.0)),
                ));
                let h = HermMatrix::new(gs.matrix() * &w * d * w.adjoint() * gs.matrix());
                iota(&h.scale(2.0))
            }
        }
    }

    /// Sampled convexity self-check: midpoints of random member pairs are
    /// members. Returns the number of failures.
    pub fn convexity_failures(&self, seed: u64, trials: usize) -> usize {
        let mut rng = rng_for(seed, 777);
        let mut failures = 0;
        for _ in 0..trials {
            let a = self.sample(&mut rng);
            let b = self.sample(&mut rng);
            let mid = a.add(&b).scale(0.5);
            if !self.contains(&mid) {
                failures += 1;
            }
        }
        failures
    }
}

/// Blend λ toward the interior point 𝟙 until the cone-box conditions hold.
fn blend_into_cone(lam: &[f64], k0: f64, k: usize) -> Vec<f64> {
    let ok = |v: &[f64]| ConvexSetE::cone_lambda_ok(k0, k, &EigenTuple::new(v.to_vec()));
    if ok(lam) {
        return lam.to_vec();
    }
    let center = vec![1.0; lam.len()];
    let blend = |t: f64| -> Vec<f64> {
        lam.iter()
            .zip(&center)
            .map(|(&a, &c)| (1.0 - t) * a + t * c)
            .collect()
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    if !ok(&blend(1.0)) {
        return center;
    }
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if ok(&blend(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    blend(hi)
}

/// ½·ι⁻¹(p(N)): the Hermitian side of a symmetric matrix in the
/// (h + u_{ij̄}) normalization.
pub fn hermitian_side(n: &SymMatrix) -> HermMatrix {
    let j = ComplexStructure::standard(n.dim() / 2);
    let p = project_j(n, &j);
    iota_inverse(&p, &j)
        .expect("projection is J-invariant by construction")
        .scale(0.5)
}

/// S(x) = ι(2h(x)), projected to J(x)-invariance in the almost-complex case.
pub fn build_s(spec: &EquationSpec, bg: &Background, x: &[f64]) -> SymMatrix {
    let base = iota(&bg.h(x).scale(2.0));
    if spec.almost_complex {
        crate::almost_complex::project_with(&base, &bg.jfield().j_matrix(x))
    } else {
        base
    }
}

/// S(x) with the almost-complex gradient correction absorbed:
/// S̃ = S + T_lin(E(Du, x)). Reduces to `build_s` when Du = 0 or J is flat.
pub fn build_s_with_gradient(
    spec: &EquationSpec,
    bg: &Background,
    du: &[f64],
    x: &[f64],
) -> SymMatrix {
    let s = build_s(spec, bg, x);
    if !spec.almost_complex || bg.jfield().is_constant() {
        return s;
    }
    let e = crate::almost_complex::error_tensor(&bg.jfield().j_matrix(x), &bg.jfield().dj(x), du);
    if spec.family.is_psh() {
        s.add(&psh_transform(&e, &riemannian_metric(spec, bg, x), spec.n))
    } else {
        s.add(&e)
    }
}

/// The Riemannian metric ι(2g(x)) associated to the Hermitian metric,
/// projected to J(x)-invariance in the almost-complex case.
pub fn riemannian_metric(spec: &EquationSpec, bg: &Background, x: &[f64]) -> SymMatrix {
    let base = iota(&bg.g(x).scale(2.0));
    if spec.almost_complex {
        crate::almost_complex::project_with(&base, &bg.jfield().j_matrix(x))
    } else {
        base
    }
}

/// The (n-1)-psh transform of an already J-invariant matrix:
/// M ↦ (1/(n-1))·(½·tr(g_R⁻¹ M)·g_R - M).
pub fn psh_transform(m: &SymMatrix, g_r: &SymMatrix, n: usize) -> SymMatrix {
    assert!(n >= 2);
    let gi = g_r
        .matrix()
        .clone()
        .try_inverse()
        .expect("Riemannian metric is invertible");
    let tr = (gi * m.matrix()).trace();
    let scaled = g_r.scale(0.5 * tr);
    scaled.sub(m).scale(1.0 / (n as f64 - 1.0))
}

/// Adjoint of the psh transform with respect to the trace pairing:
/// Q ↦ (1/(n-1))·(½·tr(g_R Q)·g_R⁻¹ - Q).
fn psh_transform_adjoint(q: &SymMatrix, g_r: &SymMatrix, n: usize) -> SymMatrix {
    let gi = SymMatrix::new(
        g_r.matrix()
            .clone()
            .try_inverse()
            .expect("Riemannian metric is invertible"),
    );
    let tr = (g_r.matrix() * q.matrix()).trace();
    gi.scale(0.5 * tr).sub(q).scale(1.0 / (n as f64 - 1.0))
}

/// The family map T(N, x): the J(x)-projection for the determinant and σ_k
/// families, composed with the psh transform for the (n-1)-psh families.
/// Linear in N; maps P ≥ 0 into the positive cone.
pub fn build_t(spec: &EquationSpec, bg: &Background, x: &[f64], n: &SymMatrix) -> SymMatrix {
    let p = if spec.almost_complex {
        crate::almost_complex::project_with(n, &bg.jfield().j_matrix(x))
    } else {
        let j = ComplexStructure::standard(spec.n);
        project_j(n, &j)
    };
    if spec.family.is_psh() {
        psh_transform(&p, &riemannian_metric(spec, bg, x), spec.n)
    } else {
        p
    }
}

/// Adjoint of N ↦ T(N, x), used to pull operator derivatives back onto the
/// Hessian variable in Newton linearizations.
pub fn t_adjoint(spec: &EquationSpec, bg: &Background, x: &[f64], q: &SymMatrix) -> SymMatrix {
    let inner = if spec.family.is_psh() {
        psh_transform_adjoint(q, &riemannian_metric(spec, bg, x), spec.n)
    } else {
        q.clone()
    };
    if spec.almost_complex {
        crate::almost_complex::project_with(&inner, &bg.jfield().j_matrix(x))
    } else {
        let j = ComplexStructure::standard(spec.n);
        project_j(&inner, &j)
    }
}

/// Pencil eigenvalues λ(x) of (½ι⁻¹(p(N)), g(x)), descending.
pub fn pencil_eigenvalues(bg: &Background, n: &SymMatrix, x: &[f64]) -> Result<EigenTuple> {
    let herm = hermitian_side(n);
    Ok(EigenTuple::new(generalized_eigenvalues(&herm, &bg.g(x))?))
}

/// F(N, x) per family. `OutsideDomain` signals that the positivity or cone
/// precondition of the closed-form expression fails, i.e. the caller has
/// left the working neighborhood 𝓔⁺.
pub fn evaluate_f(spec: &EquationSpec, bg: &Background, n: &SymMatrix, x: &[f64]) -> Result<f64> {
    match spec.family {
        Family::MongeAmpere | Family::PshMongeAmpere => {
            let dim = n.dim() as f64;
            match nalgebra::Cholesky::new(n.matrix().clone()) {
                Some(chol) => {
                    let mut logdet = 0.0;
                    for i in 0..n.dim() {
                        logdet += chol.l_dirty()[(i, i)].ln();
                    }
                    // det(N)^{1/2n} = exp(2·Σ log Lᵢᵢ / 2n).
                    Ok((2.0 * logdet / dim).exp())
                }
                None => Err(Error::OutsideDomain {
                    reason: "matrix argument is not positive definite".into(),
                }),
            }
        }
        Family::Hessian { k } | Family::PshHessian { k } => {
            let lam = pencil_eigenvalues(bg, n, x)?;
            if !in_gamma_cone(k, &lam)? {
                return Err(Error::OutsideDomain {
                    reason: format!("pencil eigenvalues left the Γ_{k} cone"),
                });
            }
            Ok(sigma(k, &lam)?.powf(1.0 / k as f64))
        }
        Family::Quotient { k, l } | Family::PshQuotient { k, l } => {
            let lam = pencil_eigenvalues(bg, n, x)?;
            if !in_gamma_cone(l, &lam)? {
                return Err(Error::OutsideDomain {
                    reason: format!("pencil eigenvalues left the Γ_{l} cone"),
                });
            }
            let sk = sigma(k, &lam)?;
            let sl = sigma(l, &lam)?;
            Ok((sl / sk).powf(1.0 / (l - k) as f64))
        }
    }
}

/// Analytic derivative DF(N, x) as the symmetric matrix with
/// d/dt F(N + tP) = tr(DF·P).
pub fn df(spec: &EquationSpec, bg: &Background, n: &SymMatrix, x: &[f64]) -> Result<SymMatrix> {
    match spec.family {
        Family::MongeAmpere | Family::PshMongeAmpere => {
            let f = evaluate_f(spec, bg, n, x)?;
            let inv = n.matrix().clone().try_inverse().ok_or(Error::OutsideDomain {
                reason: "matrix argument is singular".into(),
            })?;
            Ok(SymMatrix::new(inv * (f / n.dim() as f64)))
        }
        Family::Hessian { .. }
        | Family::PshHessian { .. }
        | Family::Quotient { .. }
        | Family::PshQuotient { .. } => {
            let herm = hermitian_side(n);
            let g = bg.g(x);
            let (vals, vecs) = generalized_eigenpairs(&herm, &g)?;
            let lam = EigenTuple::new(vals.clone());
            let w = eigenvalue_weights(spec, &lam)?;
            // DF = ¼·ι(Σ wᵢ vᵢ vᵢᴴ) with g-orthonormal eigenvectors.
            let nn = spec.n;
            let mut acc = DMatrix::<Complex64>::zeros(nn, nn);
            for (i, &wi) in w.iter().enumerate() {
                let v = vecs.column(i);
                acc += v * v.adjoint() * Complex64::new(wi, 0.0);
            }
            Ok(iota(&HermMatrix::new(acc)).scale(0.25))
        }
    }
}

/// ∂G/∂λᵢ for the eigenvalue-symmetric part of F, matched to the descending
/// eigenvalue order.
fn eigenvalue_weights(spec: &EquationSpec, lam: &EigenTuple) -> Result<Vec<f64>> {
    let n = lam.n();
    match spec.family {
        Family::Hessian { k } | Family::PshHessian { k } => {
            if !in_gamma_cone(k, lam)? {
                return Err(Error::OutsideDomain {
                    reason: format!("pencil eigenvalues left the Γ_{k} cone"),
                });
            }
            let sk = sigma(k, lam)?;
            let c = sk.powf(1.0 / k as f64 - 1.0) / k as f64;
            (0..n)
                .map(|i| Ok(c * sigma_reduced(k - 1, i, lam)?))
                .collect()
        }
        Family::Quotient { k, l } | Family::PshQuotient { k, l } => {
            if !in_gamma_cone(l, lam)? {
                return Err(Error::OutsideDomain {
                    reason: format!("pencil eigenvalues left the Γ_{l} cone"),
                });
            }
            let sk = sigma(k, lam)?;
            let sl = sigma(l, lam)?;
            let g = (sl / sk).powf(1.0 / (l - k) as f64);
            let c = g / (l - k) as f64;
            (0..n)
                .map(|i| {
                    Ok(c * (sigma_reduced(l - 1, i, lam)? / sl
                        - sigma_reduced(k - 1, i, lam)? / sk))
                })
                .collect()
        }
        _ => unreachable!("determinant families use the closed-form derivative"),
    }
}

/// The right-hand side f(x) of the reduced equation with ψ from the
/// background sampler.
pub fn equation_rhs(spec: &EquationSpec, bg: &Background, x: &[f64]) -> f64 {
    equation_rhs_with(spec, bg, x, bg.psi(x))
}

/// The right-hand side with an explicit ψ value (manufactured ψ fields).
pub fn equation_rhs_with(spec: &EquationSpec, bg: &Background, x: &[f64], psi: f64) -> f64 {
    let n = spec.n;
    match spec.family {
        Family::MongeAmpere | Family::PshMongeAmpere => {
            2.0 * (psi / n as f64).exp() * bg.g(x).det().powf(1.0 / n as f64)
        }
        Family::Hessian { k } | Family::PshHessian { k } => {
            binomial(n, k).powf(1.0 / k as f64) * (psi / k as f64).exp()
        }
        Family::Quotient { k, l } | Family::PshQuotient { k, l } => {
            let c = binomial(n, l) / binomial(n, k);
            c.powf(1.0 / (l - k) as f64) * (-psi / (l - k) as f64).exp()
        }
    }
}

/// The full operator argument S(x) + T-side(D²u, Du, x). In the
/// almost-complex case the second-derivative argument is corrected by the
/// gradient tensor E before the family transform is applied.
pub fn reduced_argument(
    spec: &EquationSpec,
    bg: &Background,
    d2u: &SymMatrix,
    du: &[f64],
    x: &[f64],
) -> SymMatrix {
    let h = if spec.almost_complex {
        crate::almost_complex::hessian_form(d2u, du, &bg.jfield().j_matrix(x), &bg.jfield().dj(x))
    } else {
        let j = ComplexStructure::standard(spec.n);
        project_j(d2u, &j)
    };
    let inner = if spec.family.is_psh() {
        psh_transform(&h, &riemannian_metric(spec, bg, x), spec.n)
    } else {
        h
    };
    build_s(spec, bg, x).add(&inner)
}

/// The reduced-equation residual F(S(x) + T-side(D²u, Du, x), x) - f(x).
pub fn evaluate_residual(
    spec: &EquationSpec,
    bg: &Background,
    d2u: &SymMatrix,
    du: &[f64],
    x: &[f64],
) -> Result<f64> {
    let arg = reduced_argument(spec, bg, d2u, du, x);
    Ok(evaluate_f(spec, bg, &arg, x)? - equation_rhs(spec, bg, x))
}

/// Abstraction of a uniformly elliptic concave candidate used by the
/// envelope and by the operator-only certifier; test fixtures implement it
/// with deliberately broken operators.
pub trait UniformOperator: Sync {
    fn dim(&self) -> usize;
    fn set(&self) -> &ConvexSetE;
    /// Declared (K, β) Hölder data of the x-dependence.
    fn holder_data(&self) -> (f64, f64);
    fn eval(&self, n: &SymMatrix, x: &[f64]) -> Result<f64>;
    /// Derivative matrix; default central finite differences at step 1e-5.
    fn grad(&self, n: &SymMatrix, x: &[f64]) -> Result<SymMatrix> {
        let d = self.dim();
        let t = 1e-5;
        let mut g = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..=i {
                let mut ep = n.matrix().clone();
                let mut em = n.matrix().clone();
                ep[(i, j)] += t;
                ep[(j, i)] = ep[(i, j)];
                em[(i, j)] -= t;
                em[(j, i)] = em[(i, j)];
                let fp = self.eval(&SymMatrix::new(ep), x)?;
                let fm = self.eval(&SymMatrix::new(em), x)?;
                let slope = (fp - fm) / (2.0 * t);
                // tr(DF·(E_ij + E_ji)) = 2·DF_ij off the diagonal.
                let v = if i == j { slope } else { 0.5 * slope };
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        Ok(SymMatrix::new(g))
    }
}

/// The standard implementation: one of the six families over a background.
pub struct FamilyOperator {
    pub spec: EquationSpec,
    pub background: Background,
    pub set: ConvexSetE,
}

impl FamilyOperator {
    pub fn new(spec: EquationSpec, background: Background) -> Result<Self> {
        spec.validate()?;
        let set = ConvexSetE::default_for(&spec, &background);
        Ok(FamilyOperator {
            spec,
            background,
            set,
        })
    }

    pub fn with_set(mut self, set: ConvexSetE) -> Self {
        self.set = set;
        self
    }
}

impl UniformOperator for FamilyOperator {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn set(&self) -> &ConvexSetE {
        &self.set
    }

    fn holder_data(&self) -> (f64, f64) {
        (self.background.holder_k, self.background.beta)
    }

    fn eval(&self, n: &SymMatrix, x: &[f64]) -> Result<f64> {
        evaluate_f(&self.spec, &self.background, n, x)
    }

    fn grad(&self, n: &SymMatrix, x: &[f64]) -> Result<SymMatrix> {
        df(&self.spec, &self.background, n, x)
    }
}

/// Sampled range of the eigenvalues of DF(A, x) over 𝓔 × B_r.
pub fn ellipticity_bounds(
    spec: &EquationSpec,
    bg: &Background,
    set: &ConvexSetE,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if samples == 0 {
        return Err(Error::InvalidConfig(
            "ellipticity estimation needs a nonempty sample plan".into(),
        ));
    }
    let radius = admissible_chart_radius(spec, bg, set, seed);
    let results: Vec<Result<(f64, f64)>> = par_map_indexed(samples, |i| {
        let mut rng = rng_for(seed, 1000 + i as u64);
        let a = set.sample(&mut rng);
        let x = chart_point(&mut rng, spec.dim(), radius);
        let d = df(spec, bg, &a, &x)?;
        let ev = d.eigenvalues();
        Ok((ev[ev.len() - 1], ev[0]))
    });
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for r in results {
        let (a, b) = r?;
        lo = lo.min(a);
        hi = hi.max(b);
    }
    Ok((lo, hi))
}

fn chart_point(rng: &mut rand_chacha::ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    let dir = unit_vector(rng, dim);
    let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
    dir.iter().map(|&v| v * r).collect()
}

/// Largest dyadic chart radius r ≤ 1 on which sampled members of 𝓔 keep
/// their pencil eigenvalues within the factor-two relaxation of the cone
/// data (the eigenvalue-box families are x-independent, so r = 1).
pub fn admissible_chart_radius(
    spec: &EquationSpec,
    bg: &Background,
    set: &ConvexSetE,
    seed: u64,
) -> f64 {
    let (k0, k) = match set.kind {
        SetKind::EigenBox { .. } => return 1.0,
        SetKind::ConeBox { k0, k } => (k0, k),
    };
    let mut rng = rng_for(seed, 555);
    let probes: Vec<(SymMatrix, Vec<f64>)> = (0..64)
        .map(|_| {
            let n = set.sample(&mut rng);
            let dir: Vec<f64> = unit_vector(&mut rng, spec.dim()).iter().copied().collect();
            (n, dir)
        })
        .collect();
    let relaxed_ok = |lam: &EigenTuple| -> bool {
        let bound = 4.0 * k0;
        if lam.values().iter().any(|&l| l.abs() > bound) {
            return false;
        }
        (1..=k).all(|j| match sigma(j, lam) {
            Ok(s) => s > 0.0 && s.powf(1.0 / j as f64) >= 1.0 / bound,
            Err(_) => false,
        })
    };
    let mut r = 1.0;
    'outer: for _ in 0..7 {
        for (n, dir) in &probes {
            let x: Vec<f64> = dir.iter().map(|&d| d * r).collect();
            match pencil_eigenvalues(bg, n, &x) {
                Ok(lam) if relaxed_ok(&lam) => {}
                _ => {
                    r *= 0.5;
                    continue 'outer;
                }
            }
        }
        return r;
    }
    r
}

/// Sampling plan for structure certification.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SamplePlan {
    pub matrix_samples: usize,
    pub pair_samples: usize,
    pub holder_pairs: usize,
    pub seed: u64,
}

impl Default for SamplePlan {
    fn default() -> Self {
        SamplePlan {
            matrix_samples: 400,
            pair_samples: 400,
            holder_pairs: 1000,
            seed: 7,
        }
    }
}

/// Certification record for the structure conditions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructureReport {
    pub spec: EquationSpec,
    pub lambda_hat: f64,
    #[serde(rename = "Lambda_hat")]
    pub big_lambda_hat: f64,
    pub concavity_margin: f64,
    pub holder_k_hat: f64,
    pub holder_k_f: f64,
    pub holder_k_s: f64,
    pub holder_k_t: f64,
    pub t_linearity_defect: f64,
    pub t_positivity_margin: f64,
    pub t_ratio_lo: f64,
    pub t_ratio_hi: f64,
    pub chart_radius: f64,
    pub ma_envelope_lo: Option<f64>,
    pub ma_envelope_hi: Option<f64>,
    pub ma_envelope_ok: Option<bool>,
    pub passed: bool,
    pub seed: u64,
    pub matrix_samples: usize,
    pub pair_samples: usize,
    pub holder_pairs: usize,
}

/// Certify the structure conditions for a family by sampling: ellipticity of
/// DF over 𝓔 × B_r, midpoint concavity of F, Hölder quotients of F, S and T
/// in x, exact linearity of T, and positivity preservation with the
/// family-specific norm equivalence. Failures are recorded, not raised.
pub fn check_structure(
    spec: &EquationSpec,
    bg: &Background,
    set: &ConvexSetE,
    plan: &SamplePlan,
) -> StructureReport {
    let seed = plan.seed;
    let dim = spec.dim();
    let radius = admissible_chart_radius(spec, bg, set, seed);

    // Ellipticity.
    let (mut lambda_hat, mut big_lambda_hat) = (f64::INFINITY, f64::NEG_INFINITY);
    let ell: Vec<Option<(f64, f64)>> = par_map_indexed(plan.matrix_samples, |i| {
        let mut rng = rng_for(seed, 1000 + i as u64);
        let a = set.sample(&mut rng);
        let x = chart_point(&mut rng, dim, radius);
        df(spec, bg, &a, &x).ok().map(|d| {
            let ev = d.eigenvalues();
            (ev[ev.len() - 1], ev[0])
        })
    });
    for e in ell.into_iter().flatten() {
        lambda_hat = lambda_hat.min(e.0);
        big_lambda_hat = big_lambda_hat.max(e.1);
    }

    // Concavity: min over sampled midpoints of F(mid) - ½F(A) - ½F(B).
    let conc: Vec<Option<f64>> = par_map_indexed(plan.pair_samples, |i| {
        let mut rng = rng_for(seed, 2000 + i as u64);
        let a = set.sample(&mut rng);
        let b = set.sample(&mut rng);
        let x = chart_point(&mut rng, dim, radius);
        let mid = a.add(&b).scale(0.5);
        match (
            evaluate_f(spec, bg, &mid, &x),
            evaluate_f(spec, bg, &a, &x),
            evaluate_f(spec, bg, &b, &x),
        ) {
            (Ok(fm), Ok(fa), Ok(fb)) => Some(fm - 0.5 * fa - 0.5 * fb),
            _ => None,
        }
    });
    let concavity_margin = conc
        .into_iter()
        .flatten()
        .fold(f64::INFINITY, f64::min);

    // Hölder quotients in x.
    let beta = bg.beta;
    let quot: Vec<(f64, f64, f64)> = par_map_indexed(plan.holder_pairs, |i| {
        let mut rng = rng_for(seed, 3000 + i as u64);
        let a = set.sample(&mut rng);
        let x = chart_point(&mut rng, dim, radius);
        let y = chart_point(&mut rng, dim, radius);
        let dist: f64 = x
            .iter()
            .zip(&y)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt();
        if dist < 1e-8 {
            return (0.0, 0.0, 0.0);
        }
        let den = dist.powf(beta);
        let qf = match (evaluate_f(spec, bg, &a, &x), evaluate_f(spec, bg, &a, &y)) {
            (Ok(fx), Ok(fy)) => (fx - fy).abs() / den,
            _ => 0.0,
        };
        let qs = build_s(spec, bg, &x)
            .sub(&build_s(spec, bg, &y))
            .operator_norm()
            / den;
        // H2.(1) is a statement over all of Sym(2n); probe mixed scales.
        let scale = 10.0_f64.powf(uniform(&mut rng, -1.0, 1.5));
        let nn = crate::sampling::random_sym(&mut rng, dim, scale);
        let qt = build_t(spec, bg, &x, &nn)
            .sub(&build_t(spec, bg, &y, &nn))
            .operator_norm()
            / ((nn.operator_norm() + 1.0) * den);
        (qf, qs, qt)
    });
    let mut holder_k_f = 0.0_f64;
    let mut holder_k_s = 0.0_f64;
    let mut holder_k_t = 0.0_f64;
    for (qf, qs, qt) in quot {
        holder_k_f = holder_k_f.max(qf);
        holder_k_s = holder_k_s.max(qs);
        holder_k_t = holder_k_t.max(qt);
    }
    let holder_k_hat = holder_k_f.max(holder_k_s).max(holder_k_t);

    // T: linearity, positivity, norm equivalence.
    let tstats: Vec<(f64, f64, f64, f64)> = par_map_indexed(plan.matrix_samples, |i| {
        let mut rng = rng_for(seed, 4000 + i as u64);
        let x = chart_point(&mut rng, dim, radius);
        let m = crate::sampling::random_sym(&mut rng, dim, 1.0);
        let nn = crate::sampling::random_sym(&mut rng, dim, 1.0);
        let a = uniform(&mut rng, -2.0, 2.0);
        let b = uniform(&mut rng, -2.0, 2.0);
        let combo = build_t(spec, bg, &x, &m.scale(a).add(&nn.scale(b)));
        let parts = build_t(spec, bg, &x, &m)
            .scale(a)
            .add(&build_t(spec, bg, &x, &nn).scale(b));
        let scale = combo.operator_norm().max(parts.operator_norm()).max(1.0);
        let lin_defect = combo.sub(&parts).operator_norm() / scale;
        let p = crate::sampling::random_psd_sym(&mut rng, dim, 1.0);
        let tp = build_t(spec, bg, &x, &p);
        let pos_margin = tp.min_eigenvalue() / p.operator_norm().max(1e-300);
        let ratio = tp.operator_norm() / p.operator_norm().max(1e-300);
        (lin_defect, pos_margin, ratio, ratio)
    });
    let mut t_linearity_defect = 0.0_f64;
    let mut t_positivity_margin = f64::INFINITY;
    let mut t_ratio_lo = f64::INFINITY;
    let mut t_ratio_hi = 0.0_f64;
    for (l, p, rlo, rhi) in tstats {
        t_linearity_defect = t_linearity_defect.max(l);
        t_positivity_margin = t_positivity_margin.min(p);
        t_ratio_lo = t_ratio_lo.min(rlo);
        t_ratio_hi = t_ratio_hi.max(rhi);
    }

    // Analytic ellipticity envelope for the determinant families on an
    // eigenvalue box: DF eigenvalues lie in [(1/2n)·lo/hi, (1/2n)·hi/lo].
    let (ma_envelope_lo, ma_envelope_hi, ma_envelope_ok) =
        if let (true, SetKind::EigenBox { lo, hi }) = (spec.family.is_det(), &set.kind) {
            let a = lo / hi / dim as f64;
            let b = hi / lo / dim as f64;
            let ok = lambda_hat >= a - 1e-9 && big_lambda_hat <= b + 1e-9;
            (Some(a), Some(b), Some(ok))
        } else {
            (None, None, None)
        };

    // Norm-equivalence budget for T: the complementary-sum bound gives
    // 2(n-1) for the psh transform in the g-adapted norm; in the Euclidean
    // norm it degrades by the metric equivalence cond(g_R) ≤ K².
    let k_family = if spec.family.is_psh() {
        2.0 * (spec.n as f64 - 1.0) * bg.holder_k * bg.holder_k
    } else {
        2.0
    };
    let passed = lambda_hat.is_finite()
        && lambda_hat > 0.0
        && concavity_margin >= -1e-10
        && t_linearity_defect <= 1e-12
        && t_positivity_margin >= -1e-12
        && t_ratio_lo >= 1.0 / k_family - 1e-9
        && t_ratio_hi <= k_family + 1e-9
        && holder_k_hat <= 3.0 * bg.holder_k
        && ma_envelope_ok.unwrap_or(true);

    StructureReport {
        spec: *spec,
        lambda_hat,
        big_lambda_hat,
        concavity_margin,
        holder_k_hat,
        holder_k_f,
        holder_k_s,
        holder_k_t,
        t_linearity_defect,
        t_positivity_margin,
        t_ratio_lo,
        t_ratio_hi,
        chart_radius: radius,
        ma_envelope_lo,
        ma_envelope_hi,
        ma_envelope_ok,
        passed,
        seed,
        matrix_samples: plan.matrix_samples,
        pair_samples: plan.pair_samples,
        holder_pairs: plan.holder_pairs,
    }
}

/// Concavity-and-ellipticity-only certification of an arbitrary candidate
/// operator; used by fixtures that deliberately break a condition.
pub fn certify_operator_only(
    op: &dyn UniformOperator,
    plan: &SamplePlan,
) -> (f64, f64, f64, f64) {
    let dim = op.dim();
    let set = op.set();
    let (_, beta) = op.holder_data();
    let seed = plan.seed;
    let ell: Vec<Option<(f64, f64)>> = par_map_indexed(plan.matrix_samples, |i| {
        let mut rng = rng_for(seed, 1000 + i as u64);
        let a = set.sample(&mut rng);
        let x = chart_point(&mut rng, dim, 1.0);
        op.grad(&a, &x).ok().map(|d| {
            let ev = d.eigenvalues();
            (ev[ev.len() - 1], ev[0])
        })
    });
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for e in ell.into_iter().flatten() {
        lo = lo.min(e.0);
        hi = hi.max(e.1);
    }
    let conc: Vec<Option<f64>> = par_map_indexed(plan.pair_samples, |i| {
        let mut rng = rng_for(seed, 2000 + i as u64);
        let a = set.sample(&mut rng);
        let b = set.sample(&mut rng);
        let x = chart_point(&mut rng, dim, 1.0);
        let mid = a.add(&b).scale(0.5);
        match (op.eval(&mid, &x), op.eval(&a, &x), op.eval(&b, &x)) {
            (Ok(fm), Ok(fa), Ok(fb)) => Some(fm - 0.5 * fa - 0.5 * fb),
            _ => None,
        }
    });
    let concavity = conc.into_iter().flatten().fold(f64::INFINITY, f64::min);
    let holder: Vec<f64> = par_map_indexed(plan.holder_pairs, |i| {
        let mut rng = rng_for(seed, 3000 + i as u64);
        let a = set.sample(&mut rng);
        let x = chart_point(&mut rng, dim, 1.0);
        let y = chart_point(&mut rng, dim, 1.0);
        let dist: f64 = x
            .iter()
            .zip(&y)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt();
        if dist < 1e-8 {
            return 0.0;
        }
        match (op.eval(&a, &x), op.eval(&a, &y)) {
            (Ok(fx), Ok(fy)) => (fx - fy).abs() / dist.powf(beta),
            _ => 0.0,
        }
    });
    let holder_hat = holder.into_iter().fold(0.0_f64, f64::max);
    (lo, hi, concavity, holder_hat)
}
