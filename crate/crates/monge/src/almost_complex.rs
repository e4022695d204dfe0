//! Tensor calculus for the almost complex case: the 2-form dJdu, its (1,1)
//! and (2,0)+(0,2) parts, and the first-order correction E that turns the
//! J-projected real Hessian into the Hessian form H(u).
//!
//! Conventions. J acts on 1-forms by (Jα)(X) = -α(JX); 2-forms are handled
//! through their value arrays ω(∂_a, ∂_b), which are antisymmetric matrices.
//! With these conventions H(u)(X, Y) = ½·(dJdu)^{(1,1)}(X, JY) reduces to
//! p(D²u) for constant standard J.

use nalgebra::DMatrix;

use crate::background::JField;
use crate::sym::SymMatrix;

/// The error tensor E(x)·Du from the expansion H(u) = p(D²u, x) + E:
/// E_ij = ¼(-J^ℓ_j ∂_i J^k_ℓ - J^ℓ_i ∂_j J^k_ℓ + J^ℓ_j ∂_ℓ J^k_i + J^ℓ_i ∂_ℓ J^k_j)·∂_k u.
/// Linear in Du and identically zero when ∂J = 0.
pub fn error_tensor(j: &DMatrix<f64>, dj: &[DMatrix<f64>], du: &[f64]) -> SymMatrix {
    let d = j.nrows();
    let mut e = DMatrix::zeros(d, d);
    for i in 0..d {
        for jj in 0..=i {
            let mut acc = 0.0;
            for l in 0..d {
                for k in 0..d {
                    let coeff = -j[(l, jj)] * dj[i][(k, l)] - j[(l, i)] * dj[jj][(k, l)]
                        + j[(l, jj)] * dj[l][(k, i)]
                        + j[(l, i)] * dj[l][(k, jj)];
                    acc += coeff * du[k];
                }
            }
            let v = 0.25 * acc;
            e[(i, jj)] = v;
            e[(jj, i)] = v;
        }
    }
    SymMatrix::from_symmetric(e)
}

/// Hessian form H(u)(x) = p(D²u, x) + E at a point with structure J(x), ∂J(x).
pub fn hessian_form(
    d2u: &SymMatrix,
    du: &[f64],
    j: &DMatrix<f64>,
    dj: &[DMatrix<f64>],
) -> SymMatrix {
    let p = project_with(d2u, j);
    p.add(&error_tensor(j, dj, du))
}

/// p(N, x) = ½(N + J(x)ᵀ N J(x)) for a pointwise structure matrix.
pub fn project_with(n: &SymMatrix, j: &DMatrix<f64>) -> SymMatrix {
    let jnj = j.transpose() * n.matrix() * j;
    SymMatrix::new((n.matrix() + jnj) * 0.5)
}

/// Value array ω(∂_a, ∂_b) of the 2-form dJdu, assembled from the closed-form
/// coefficient A_{iℓ} = -J^k_ℓ ∂_k∂_i u - (∂_i J^k_ℓ) ∂_k u.
pub fn djdu_values(
    d2u: &SymMatrix,
    du: &[f64],
    j: &DMatrix<f64>,
    dj: &[DMatrix<f64>],
) -> DMatrix<f64> {
    let d = j.nrows();
    let mut a = DMatrix::zeros(d, d);
    for i in 0..d {
        for l in 0..d {
            let mut acc = 0.0;
            for k in 0..d {
                acc += -j[(k, l)] * d2u.matrix()[(k, i)] - dj[i][(k, l)] * du[k];
            }
            a[(i, l)] = acc;
        }
    }
    // ω(∂_i, ∂_ℓ) = A_{iℓ} - A_{ℓi}.
    let at = a.transpose();
    a - at
}

/// (1,1) part of a 2-form value array: ω¹¹(X, Y) = ½(ω(X, Y) + ω(JX, JY)).
pub fn one_one_part(omega: &DMatrix<f64>, j: &DMatrix<f64>) -> DMatrix<f64> {
    (omega + j.transpose() * omega * j) * 0.5
}

/// (2,0)+(0,2) part computed directly from the gradient-only formula
/// B_{iℓ} = ½(-(∂_i J^k_ℓ) ∂_k u + J^a_i J^b_ℓ (∂_a J^k_b) ∂_k u),
/// returned as the antisymmetric value array B - Bᵀ. Contains no second
/// derivatives of u by construction.
pub fn anti_invariant_part(du: &[f64], j: &DMatrix<f64>, dj: &[DMatrix<f64>]) -> DMatrix<f64> {
    let d = j.nrows();
    let mut b = DMatrix::zeros(d, d);
    for i in 0..d {
        for l in 0..d {
            let mut acc = 0.0;
            for k in 0..d {
                acc -= dj[i][(k, l)] * du[k];
                for a in 0..d {
                    for bb in 0..d {
                        acc += j[(a, i)] * j[(bb, l)] * dj[a][(k, bb)] * du[k];
                    }
                }
            }
            b[(i, l)] = 0.5 * acc;
        }
    }
    let bt = b.transpose();
    b - bt
}

/// (2,0)+(0,2) projection of a value array: ½(ω - JᵀωJ). Used as the
/// independent route against [`anti_invariant_part`].
pub fn anti_invariant_projection(omega: &DMatrix<f64>, j: &DMatrix<f64>) -> DMatrix<f64> {
    (omega - j.transpose() * omega * j) * 0.5
}

/// Finite-difference oracle: assemble the value array of dJdu = d(Jdu) by
/// central differencing the 1-form (Jdu)_ℓ = -J^k_ℓ ∂_k u of an analytic
/// field. Independent of the closed-form expansion above.
pub fn djdu_values_fd(
    u: &crate::background::TrigPoly,
    jf: &JField,
    x: &[f64],
    step: f64,
) -> DMatrix<f64> {
    let d = x.len();
    let one_form = |y: &[f64]| -> Vec<f64> {
        let grad = u.gradient(y);
        let j = jf.j_matrix(y);
        (0..d)
            .map(|l| -(0..d).map(|k| grad[k] * j[(k, l)]).sum::<f64>())
            .collect()
    };
    let mut domega = DMatrix::zeros(d, d);
    for i in 0..d {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += step;
        xm[i] -= step;
        let fp = one_form(&xp);
        let fm = one_form(&xm);
        for l in 0..d {
            domega[(i, l)] = (fp[l] - fm[l]) / (2.0 * step);
        }
    }
    // d(f_ℓ dx^ℓ)(∂_i, ∂_ℓ) = ∂_i f_ℓ - ∂_ℓ f_i.
    let dt = domega.transpose();
    domega - dt
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::TrigPoly;
    use crate::sym::ComplexStructure;

    fn test_field() -> TrigPoly {
        TrigPoly::new(4)
            .with_term(0.8, &[1, 0, 0, 0], 0.1)
            .with_term(-0.5, &[0, 1, 1, 0], 0.7)
            .with_term(0.3, &[1, 0, 0, 2], -0.4)
    }

    #[test]
    fn error_tensor_vanishes_for_constant_j() {
        let jf = JField::standard(2);
        let x = [0.2, 0.4, -0.1, 0.8];
        let u = test_field();
        let e = error_tensor(&jf.j_matrix(&x), &jf.dj(&x), &u.gradient(&x));
        assert_eq!(e.matrix().abs().max(), 0.0);
        let h = hessian_form(&u.hessian(&x), &u.gradient(&x), &jf.j_matrix(&x), &jf.dj(&x));
        let p = project_with(&u.hessian(&x), &jf.j_matrix(&x));
        assert!((h.matrix() - p.matrix()).abs().max() < 1e-15);
    }

    #[test]
    fn error_tensor_vanishes_for_zero_gradient() {
        let jf = JField::warped(2, 0.3);
        let x = [0.2, 0.4, -0.1, 0.8];
        let du = [0.0; 4];
        let e = error_tensor(&jf.j_matrix(&x), &jf.dj(&x), &du);
        assert_eq!(e.matrix().abs().max(), 0.0);
    }

    #[test]
    fn error_tensor_is_linear_in_gradient() {
        let jf = JField::warped(2, 0.3);
        let x = [0.5, -0.2, 0.9, 0.3];
        let j = jf.j_matrix(&x);
        let dj = jf.dj(&x);
        let du1 = [0.4, -0.7, 0.2, 1.1];
        let du2 = [-0.3, 0.5, 0.8, -0.9];
        let combo: Vec<f64> = du1.iter().zip(&du2).map(|(a, b)| 2.0 * a - 0.5 * b).collect();
        let lhs = error_tensor(&j, &dj, &combo);
        let rhs = error_tensor(&j, &dj, &du1)
            .scale(2.0)
            .add(&error_tensor(&j, &dj, &du2).scale(-0.5));
        assert!((lhs.matrix() - rhs.matrix()).abs().max() < 1e-14);
    }

    #[test]
    fn hessian_form_matches_fd_assembly_of_one_one_part() {
        let jf = JField::warped(2, 0.3);
        let u = test_field();
        for x in [[0.3, -0.6, 0.2, 0.9], [1.4, 0.8, -0.5, 0.05]] {
            let j = jf.j_matrix(&x);
            let omega = djdu_values_fd(&u, &jf, &x, 1e-4);
            let p11 = one_one_part(&omega, &j);
            // H_ij = ½·ω¹¹(∂_i, J∂_j).
            let h_oracle = (&p11 * &j) * 0.5;
            let h = hessian_form(&u.hessian(&x), &u.gradient(&x), &j, &jf.dj(&x));
            let err = (h.matrix() - &h_oracle).abs().max();
            assert!(err < 1e-6, "H vs oracle error {err}");
        }
    }

    #[test]
    fn closed_form_djdu_matches_fd() {
        let jf = JField::warped(2, 0.25);
        let u = test_field();
        let x = [0.7, 0.1, -0.4, 1.2];
        let omega_fd = djdu_values_fd(&u, &jf, &x, 1e-4);
        let omega =
            djdu_values(&u.hessian(&x), &u.gradient(&x), &jf.j_matrix(&x), &jf.dj(&x));
        assert!((&omega - &omega_fd).abs().max() < 1e-6);
    }

    #[test]
    fn parts_reconstruct_full_form() {
        let jf = JField::warped(2, 0.3);
        let u = test_field();
        let x = [0.25, -0.95, 0.55, 1.05];
        let j = jf.j_matrix(&x);
        let omega = djdu_values_fd(&u, &jf, &x, 1e-4);
        let p11 = one_one_part(&omega, &j);
        let anti = anti_invariant_part(&u.gradient(&x), &j, &jf.dj(&x));
        let recon = &p11 + &anti;
        assert!((&recon - &omega).abs().max() < 1e-6);
        // The projection route agrees with the gradient-only formula.
        let anti_proj = anti_invariant_projection(&omega, &j);
        assert!((&anti - &anti_proj).abs().max() < 1e-6);
    }

    #[test]
    fn anti_invariant_part_ignores_second_derivatives() {
        let jf = JField::warped(2, 0.3);
        let x = [0.4, 0.2, -0.8, 0.6];
        let j = jf.j_matrix(&x);
        let dj = jf.dj(&x);
        let du = [0.3, -0.2, 0.9, 0.5];
        // Zero gradient kills the whole part.
        assert_eq!(anti_invariant_part(&[0.0; 4], &j, &dj).abs().max(), 0.0);
        // The formula route never reads D²u.
        let a1 = anti_invariant_part(&du, &j, &dj);
        let a2 = anti_invariant_part(&du, &j, &dj);
        assert_eq!(a1, a2);
        // The projection route kills the second-derivative contribution
        // structurally: perturbing D²u leaves it unchanged.
        let u = test_field();
        let d2_a = u.hessian(&x);
        let d2_b = d2_a.shift(3.7); // a very different Hessian
        let om_a = djdu_values(&d2_a, &du, &j, &dj);
        let om_b = djdu_values(&d2_b, &du, &j, &dj);
        let pa = anti_invariant_projection(&om_a, &j);
        let pb = anti_invariant_projection(&om_b, &j);
        assert!((&pa - &pb).abs().max() < 1e-10);
    }

    #[test]
    fn constant_j_kills_all_gradient_terms() {
        let jf = JField::standard(2);
        let x = [0.0; 4];
        let du = [1.0, 2.0, 3.0, 4.0];
        let anti = anti_invariant_part(&du, &jf.j_matrix(&x), &jf.dj(&x));
        assert_eq!(anti.abs().max(), 0.0);
        let _ = ComplexStructure::standard(2);
    }
}
