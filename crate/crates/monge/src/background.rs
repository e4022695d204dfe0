//! Background geometric data on the unit chart: the Hermitian metric g, the
//! form coefficients h (= χ), the almost complex structure J with its first
//! derivatives, and the inhomogeneity ψ — plus analytic trigonometric fields
//! used to manufacture exact solutions.
//!
//! All built-in samplers are trigonometric with integer wave vectors, so the
//! same background is smooth on the unit chart and 2π-periodic on the torus;
//! the solver can sample it at torus coordinates without a seam.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::sym::{ComplexStructure, HermMatrix, SymMatrix};

/// A finite sum of cosine waves a·cos(⟨w, x⟩ + φ) with integer wave vectors.
/// Derivatives of any order are available in closed form, which is what the
/// manufactured-solution pipeline needs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrigPoly {
    pub dim: usize,
    terms: Vec<TrigTerm>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TrigTerm {
    amp: f64,
    wave: Vec<i32>,
    phase: f64,
}

impl TrigPoly {
    pub fn new(dim: usize) -> Self {
        TrigPoly { dim, terms: vec![] }
    }

    pub fn with_term(mut self, amp: f64, wave: &[i32], phase: f64) -> Self {
        assert_eq!(wave.len(), self.dim);
        self.terms.push(TrigTerm {
            amp,
            wave: wave.to_vec(),
            phase,
        });
        self
    }

    /// The default manufactured field for complex dimension n: one diagonal
    /// wave per real coordinate plus two mixed waves that populate the
    /// off-diagonal complex Hessian entries. Coordinates pair as
    /// zⁱ = xⁱ + √-1·xⁿ⁺ⁱ.
    pub fn manufactured(n: usize, amplitude: f64) -> Self {
        let dim = 2 * n;
        let mut poly = TrigPoly::new(dim);
        for a in 0..dim {
            let mut w = vec![0i32; dim];
            w[a] = 1;
            poly = poly.with_term(amplitude, &w, 0.3 * a as f64);
        }
        if dim >= 2 {
            let mut w = vec![0i32; dim];
            w[0] = 1;
            w[1] = 1;
            poly = poly.with_term(0.5 * amplitude, &w, 0.0);
        }
        if dim >= 4 {
            let mut w = vec![0i32; dim];
            w[0] = 1;
            w[dim - 1] = 1;
            poly = poly.with_term(0.3 * amplitude, &w, 0.7);
        }
        poly
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let arg: f64 = t
                    .wave
                    .iter()
                    .zip(x)
                    .map(|(&w, &xi)| w as f64 * xi)
                    .sum::<f64>()
                    + t.phase;
                t.amp * arg.cos()
            })
            .sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for t in &self.terms {
            let arg: f64 = t
                .wave
                .iter()
                .zip(x)
                .map(|(&w, &xi)| w as f64 * xi)
                .sum::<f64>()
                + t.phase;
            let s = -t.amp * arg.sin();
            for (gi, &w) in g.iter_mut().zip(&t.wave) {
                *gi += s * w as f64;
            }
        }
        g
    }

    pub fn hessian(&self, x: &[f64]) -> SymMatrix {
        let d = self.dim;
        let mut m = DMatrix::zeros(d, d);
        for t in &self.terms {
            let arg: f64 = t
                .wave
                .iter()
                .zip(x)
                .map(|(&w, &xi)| w as f64 * xi)
                .sum::<f64>()
                + t.phase;
            let c = -t.amp * arg.cos();
            for a in 0..d {
                for b in 0..d {
                    m[(a, b)] += c * t.wave[a] as f64 * t.wave[b] as f64;
                }
            }
        }
        SymMatrix::from_symmetric(m)
    }

    /// Analytic complex Hessian u_{ij̄} assembled from the real Hessian.
    pub fn complex_hessian(&self, x: &[f64]) -> HermMatrix {
        complex_from_real_hessian(&self.hessian(x))
    }
}

/// The entrywise bridge u_{ij̄} = ¼[(D²u)_{ij} + (D²u)_{n+i,n+j}]
/// + (√-1/4)[(D²u)_{i,n+j} - (D²u)_{n+i,j}] for zⁱ = xⁱ + √-1·xⁿ⁺ⁱ.
pub fn complex_from_real_hessian(d2: &SymMatrix) -> HermMatrix {
    let dim = d2.dim();
    assert!(dim % 2 == 0, "real Hessian must have even dimension");
    let n = dim / 2;
    let m = d2.matrix();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let re = 0.25 * (m[(i, j)] + m[(n + i, n + j)]);
            let im = 0.25 * (m[(i, n + j)] - m[(n + i, j)]);
            h[(i, j)] = Complex64::new(re, im);
        }
    }
    HermMatrix::new(h)
}

/// Smooth field of almost complex structures J(x) = R(θ(x)) J₀ R(θ(x))ᵀ with
/// R a product of plane rotations; J² = -I holds exactly at every point and
/// ∂J is available in closed form via ∂ₐJ = θ'ₐ · [G, J].
#[derive(Debug, Clone)]
pub struct JField {
    n: usize,
    eps: f64,
    theta: TrigPoly,
    generator: DMatrix<f64>,
}

impl JField {
    /// Constant standard structure (∂J = 0).
    pub fn standard(n: usize) -> Self {
        JField {
            n,
            eps: 0.0,
            theta: TrigPoly::new(2 * n),
            generator: DMatrix::zeros(2 * n, 2 * n),
        }
    }

    /// Nonconstant field, a perturbation of size `eps` of the standard J.
    /// Needs n ≥ 2: in one complex dimension every rotation commutes with J₀.
    pub fn warped(n: usize, eps: f64) -> Self {
        assert!(n >= 2, "a nonconstant J-field needs n >= 2");
        let dim = 2 * n;
        let mut w1 = vec![0i32; dim];
        w1[0] = 1;
        let mut w2 = vec![0i32; dim];
        w2[1] = 1;
        w2[2] = 1;
        let theta = TrigPoly::new(dim)
            .with_term(eps, &w1, 0.2)
            .with_term(0.6 * eps, &w2, 1.1);
        // Rotation generator in the (x¹, x²) plane; it does not commute with J₀.
        let mut g = DMatrix::zeros(dim, dim);
        g[(0, 1)] = -1.0;
        g[(1, 0)] = 1.0;
        JField {
            n,
            eps,
            theta,
            generator: g,
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn is_constant(&self) -> bool {
        self.eps == 0.0
    }

    fn rotation(&self, t: f64) -> DMatrix<f64> {
        // exp(t·G) for the single-plane generator: a rotation by t in that plane.
        let dim = self.dim();
        let mut r = DMatrix::identity(dim, dim);
        let (s, c) = t.sin_cos();
        r[(0, 0)] = c;
        r[(0, 1)] = -s;
        r[(1, 0)] = s;
        r[(1, 1)] = c;
        r
    }

    pub fn j_matrix(&self, x: &[f64]) -> DMatrix<f64> {
        let j0 = ComplexStructure::standard(self.n);
        if self.is_constant() {
            return j0.matrix().clone();
        }
        let r = self.rotation(self.theta.eval(x));
        &r * j0.matrix() * r.transpose()
    }

    pub fn j(&self, x: &[f64]) -> ComplexStructure {
        ComplexStructure::from_matrix(self.j_matrix(x)).expect("rotated J satisfies J² = -I")
    }

    /// ∂ₐJ for a = 0..2n-1.
    pub fn dj(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        let dim = self.dim();
        if self.is_constant() {
            return vec![DMatrix::zeros(dim, dim); dim];
        }
        let j = self.j_matrix(x);
        let bracket = &self.generator * &j - &j * &self.generator;
        let dtheta = self.theta.gradient(x);
        dtheta.iter().map(|&d| &bracket * d).collect()
    }
}

/// Which built-in coefficient family a background uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BackgroundKind {
    /// g = I, h = h_scale·I, ψ = 0, constant J.
    Flat,
    /// Trigonometric g(x), h(x), ψ(x) around the identity, constant J.
    Warped,
    /// Flat metric with a nonconstant J-field.
    AlmostComplex,
}

/// Samplers for g, h = χ, J and ψ together with the declared Hölder data
/// (K, β). The spec of a background is that g stays uniformly equivalent to
/// the identity (eigenvalues in [1/K, K]) and that the sampled β-Hölder
/// quotients of g, h, J stay below K with 10% margin.
#[derive(Debug, Clone)]
pub struct Background {
    pub n: usize,
    pub kind: BackgroundKind,
    /// Declared Hölder constant K.
    pub holder_k: f64,
    /// Hölder exponent β of the coefficient data.
    pub beta: f64,
    /// Hölder exponent α₀ of ψ.
    pub alpha0: f64,
    h_scale: f64,
    eps: f64,
    jfield: JField,
    psi: TrigPoly,
}

impl Background {
    pub fn flat(n: usize) -> Self {
        Background {
            n,
            kind: BackgroundKind::Flat,
            holder_k: 1.0,
            beta: 0.5,
            alpha0: 0.5,
            h_scale: 1.0,
            eps: 0.0,
            jfield: JField::standard(n),
            psi: TrigPoly::new(2 * n),
        }
    }

    /// Flat background with h = c·I (so S = ι(2c·I) = 2c·I).
    pub fn flat_with_h(n: usize, h_scale: f64) -> Self {
        let mut bg = Background::flat(n);
        bg.h_scale = h_scale;
        bg.holder_k = bg.holder_k.max(2.0 * h_scale).max(1.0);
        bg
    }

    /// Trigonometric perturbation of the flat background. `eps` up to ~0.3
    /// keeps g positive definite with a comfortable margin.
    pub fn warped(n: usize, eps: f64) -> Self {
        assert!(eps.abs() < 0.4, "warped background needs eps < 0.4");
        let dim = 2 * n;
        let beta = 0.5;
        let mut w = vec![0i32; dim];
        w[0] = 1;
        if dim > 1 {
            w[1] = -1;
        }
        let psi = TrigPoly::new(dim).with_term(eps, &w, 0.4);
        // Lipschitz bound of the coefficient fields: eps·(sum of |wave|·|amp factors|)
        // ≤ 4·eps; on a chart of diameter 2 the β-quotient is ≤ L·2^{1-β}.
        let lip = 4.0 * eps;
        let k_holder = lip * 2.0_f64.powf(1.0 - beta);
        let k_eig = 1.0 / (1.0 - 2.0 * eps);
        Background {
            n,
            kind: BackgroundKind::Warped,
            holder_k: k_holder.max(k_eig).max(2.0) * 1.05,
            beta,
            alpha0: 0.5,
            h_scale: 1.0,
            eps,
            jfield: JField::standard(n),
            psi,
        }
    }

    /// Flat metric data with a nonconstant J-field (n ≥ 2).
    pub fn almost_complex(n: usize, eps: f64) -> Self {
        let mut bg = Background::flat(n);
        bg.kind = BackgroundKind::AlmostComplex;
        bg.jfield = JField::warped(n, eps);
        bg.holder_k = (4.0 * eps * 2.0_f64.sqrt()).max(2.0) * 1.05;
        bg
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn jfield(&self) -> &JField {
        &self.jfield
    }

    fn warp_scalars(&self, x: &[f64]) -> (f64, f64) {
        // Two independent trig scalars driving the g and h perturbations.
        let s1 = (x[0] - 0.5 * x[x.len() - 1]).sin();
        let s2 = (x[1 % x.len()] + x[0]).cos();
        (self.eps * s1, self.eps * s2)
    }

    /// Hermitian metric g(x); positive definite on the chart.
    pub fn g(&self, x: &[f64]) -> HermMatrix {
        match self.kind {
            BackgroundKind::Flat | BackgroundKind::AlmostComplex => HermMatrix::identity(self.n),
            BackgroundKind::Warped => {
                let (s1, s2) = self.warp_scalars(x);
                let mut m = DMatrix::identity(self.n, self.n)
                    .map(|v: f64| Complex64::new(v, 0.0));
                for i in 0..self.n {
                    m[(i, i)] += Complex64::new(s1 * if i % 2 == 0 { 1.0 } else { -0.5 }, 0.0);
                }
                if self.n >= 2 {
                    m[(0, 1)] += Complex64::new(0.4 * s2, 0.3 * s1);
                    m[(1, 0)] += Complex64::new(0.4 * s2, -0.3 * s1);
                }
                HermMatrix::new(m)
            }
        }
    }

    /// Coefficients h(x) of the (1,1) form χ.
    pub fn h(&self, x: &[f64]) -> HermMatrix {
        match self.kind {
            BackgroundKind::Flat | BackgroundKind::AlmostComplex => {
                HermMatrix::scaled_identity(self.n, self.h_scale)
            }
            BackgroundKind::Warped => {
                let (s1, s2) = self.warp_scalars(x);
                let mut m = DMatrix::identity(self.n, self.n)
                    .map(|v: f64| Complex64::new(v * self.h_scale, 0.0));
                for i in 0..self.n {
                    m[(i, i)] += Complex64::new(0.5 * s2, 0.0);
                }
                if self.n >= 2 {
                    m[(0, 1)] += Complex64::new(0.2 * s1, 0.25 * s2);
                    m[(1, 0)] += Complex64::new(0.2 * s1, -0.25 * s2);
                }
                HermMatrix::new(m)
            }
        }
    }

    pub fn psi(&self, x: &[f64]) -> f64 {
        self.psi.eval(x)
    }

    /// Replace ψ by the given analytic field (used by manufactured solutions).
    pub fn set_psi(&mut self, psi: TrigPoly) {
        assert_eq!(psi.dim, self.dim());
        self.psi = psi;
    }

    /// Add a constant to ψ (a cos(0·x) term).
    pub fn set_psi_offset(&mut self, c: f64) {
        let dim = self.dim();
        self.psi = TrigPoly::new(dim).with_term(c, &vec![0i32; dim], 0.0);
    }

    pub fn j(&self, x: &[f64]) -> ComplexStructure {
        self.jfield.j(x)
    }

    /// Sampled validation of the declared constants: g-eigenvalue bounds and
    /// β-Hölder quotients of g, h within K·(1 + 10%). Returns the worst
    /// observed (eig_bound, holder_quotient).
    pub fn validate(&self, seed: u64, samples: usize) -> (f64, f64) {
        use crate::sampling::{rng_for, uniform};
        let mut rng = rng_for(seed, 901);
        let d = self.dim();
        let mut worst_eig = 1.0_f64;
        let mut worst_holder = 0.0_f64;
        let scale = 1.0 / (d as f64).sqrt();
        for _ in 0..samples {
            let x: Vec<f64> = (0..d).map(|_| uniform(&mut rng, -scale, scale)).collect();
            let y: Vec<f64> = (0..d).map(|_| uniform(&mut rng, -scale, scale)).collect();
            let gx = self.g(&x);
            let ev = gx.eigenvalues();
            worst_eig = worst_eig.max(ev[0]).max(1.0 / ev[ev.len() - 1]);
            let dist: f64 = x
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if dist > 1e-6 {
                let q_g = self.g(&x).sub(&self.g(&y)).operator_norm() / dist.powf(self.beta);
                let q_h = self.h(&x).sub(&self.h(&y)).operator_norm() / dist.powf(self.beta);
                worst_holder = worst_holder.max(q_g).max(q_h);
            }
        }
        (worst_eig, worst_holder)
    }
}
