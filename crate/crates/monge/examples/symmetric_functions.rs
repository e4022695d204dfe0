//! Elementary symmetric polynomial calculus: σ_k, Gårding cones, Maclaurin
//! ratios, and the quantitative eigenvalue bounds behind the σ_k equations.
//!
//! Run: cargo run --release -p monge --example symmetric_functions

use monge::symfun::{
    in_gamma_cone, lemma_bounds, maclaurin_ratio, sigma, sigma_gradient, EigenTuple,
};

fn main() {
    let lam = EigenTuple::new(vec![5.0, 1.0, -0.5]);
    println!("λ = {:?}", lam.values());
    for k in 0..=3 {
        println!("  σ_{k}(λ) = {}", sigma(k, &lam).unwrap());
    }
    println!("  Γ₂ member: {}", in_gamma_cone(2, &lam).unwrap());
    println!("  Γ₃ member: {}", in_gamma_cone(3, &lam).unwrap());
    println!("  ∇σ₂ = {:?}", sigma_gradient(2, &lam).unwrap());

    // Maclaurin chain (σ_j/C(n,j))^{1/j} is nonincreasing inside the cone.
    let cone = EigenTuple::new(vec![2.0, 1.2, 0.4]);
    let ratios: Vec<f64> = (1..=3).map(|j| maclaurin_ratio(j, &cone).unwrap()).collect();
    println!("\nMaclaurin chain of {:?}: {ratios:.4?}", cone.values());

    // The eigenvalue bounds: hypotheses σ_j > 0 (j ≤ k), σ_k^{1/k} ≥ 1/A,
    // σ₁ ≤ A pin every λᵢ and every σ_{k-1}(λ|i) inside [1/K₀, K₀].
    let a = 5.5;
    let rep = lemma_bounds(&lam, 2, a).unwrap();
    println!("\neigenvalue bounds at A = {a}:");
    println!("  hypotheses hold : {}", rep.hypotheses_hold);
    println!("  tightest K₀     : {:.6}", rep.k0_empirical);
    println!("  margins         : {:?}", rep.conclusion_margins);
    println!("  chain slack     : {:.3e}", rep.uno_margin);

    // Push σ₁ past A and the hypotheses fail.
    let stretched = EigenTuple::new(vec![64.0, 1.0 / 64.0, 1.0]);
    let rep2 = lemma_bounds(&stretched, 2, a).unwrap();
    println!(
        "stretched tuple σ₁ = {:.2}: hypotheses hold = {}",
        sigma(1, &stretched).unwrap(),
        rep2.hypotheses_hold
    );
}
