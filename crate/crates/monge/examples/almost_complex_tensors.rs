//! Tensor calculus on a nonintegrable structure: the 2-form dJdu, its (1,1)
//! and (2,0)+(0,2) parts, and the gradient correction E that completes the
//! projected real Hessian to the Hessian form H(u).
//!
//! Run: cargo run --release -p monge --example almost_complex_tensors

use monge::almost_complex::{
    anti_invariant_part, djdu_values, djdu_values_fd, error_tensor, hessian_form, one_one_part,
};
use monge::background::{JField, TrigPoly};

fn main() {
    let jf = JField::warped(2, 0.3);
    let u = TrigPoly::new(4)
        .with_term(0.8, &[1, 0, 0, 0], 0.1)
        .with_term(-0.5, &[0, 1, 1, 0], 0.7)
        .with_term(0.3, &[1, 0, 0, 2], -0.4);
    let x = [0.7, 0.1, -0.4, 1.2];

    let j = jf.j_matrix(&x);
    let dj = jf.dj(&x);
    let du = u.gradient(&x);
    let d2u = u.hessian(&x);

    // Closed-form dJdu against central differences of the 1-form Jdu.
    let omega = djdu_values(&d2u, &du, &j, &dj);
    let omega_fd = djdu_values_fd(&u, &jf, &x, 1e-4);
    println!(
        "dJdu closed form vs finite differences: max entry gap {:.2e}",
        (&omega - &omega_fd).abs().max()
    );

    // Decomposition into the (1,1) and (2,0)+(0,2) parts; the latter reads
    // only the gradient of u.
    let p11 = one_one_part(&omega, &j);
    let anti = anti_invariant_part(&du, &j, &dj);
    println!(
        "reconstruction 1-1 part + anti part:     max entry gap {:.2e}",
        (&(&p11 + &anti) - &omega).abs().max()
    );

    // The Hessian form and its error tensor.
    let e = error_tensor(&j, &dj, &du);
    let h = hessian_form(&d2u, &du, &j, &dj);
    println!("‖E(Du)‖ = {:.4} (linear in Du; zero when ∂J = 0)", e.operator_norm());
    println!("‖H(u)‖  = {:.4}", h.operator_norm());

    let std = JField::standard(2);
    let e0 = error_tensor(&std.j_matrix(&x), &std.dj(&x), &du);
    println!("with constant J the correction vanishes exactly: ‖E‖ = {}", e0.operator_norm());
}
