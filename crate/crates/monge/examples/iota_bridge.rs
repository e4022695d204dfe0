//! The bridge between Hermitian n×n and real symmetric 2n×2n matrices:
//! the embedding ι, its inverse on J-invariant matrices, the projection p,
//! and generalized eigenvalues with respect to a Hermitian metric.
//!
//! Run: cargo run --release -p monge --example iota_bridge

use monge::sampling::{random_hermitian, random_psd_sym, rng_for};
use monge::sym::{
    generalized_eigenvalues, iota, iota_inverse, project_j, ComplexStructure, HermMatrix,
};

fn main() {
    let n = 3;
    let mut rng = rng_for(42, 0);
    let h = random_hermitian(&mut rng, n, 1.0);

    let m = iota(&h);
    println!("ι maps Hermitian {n}×{n} into Sym({}):", 2 * n);
    println!("  det(ι(H))       = {:+.6e}", m.det());
    println!("  det(H)²         = {:+.6e}", h.det() * h.det());

    let j = ComplexStructure::standard(n);
    let back = iota_inverse(&m, &j).unwrap();
    println!(
        "  round trip error = {:.2e}",
        (back.matrix() - h.matrix()).norm()
    );

    // The projection p retracts Sym(2n) onto the image of ι and contracts
    // operator norms by at most a factor of two on the positive cone.
    let p = random_psd_sym(&mut rng, 2 * n, 1.0);
    let pp = project_j(&p, &j);
    println!("\np(N) = ½(N + JᵀNJ) on a random P ≥ 0:");
    println!("  ‖P‖    = {:.6}", p.operator_norm());
    println!("  ‖p(P)‖ = {:.6}   (must lie in [½‖P‖, ‖P‖])", pp.operator_norm());

    // Pencil eigenvalues against a non-flat metric.
    let a = random_hermitian(&mut rng, n, 0.4);
    let g = HermMatrix::new(
        a.matrix() * a.matrix().adjoint()
            + nalgebra::DMatrix::identity(n, n),
    );
    let lam = generalized_eigenvalues(&h, &g).unwrap();
    println!("\neigenvalues of g⁻¹H (descending): {lam:.4?}");
}
