//! The concave envelope F̄: equal to F on the admissible set, globally
//! concave, Lipschitz with constant 2nΛ, elliptically sandwiched, and
//! Hölder in the chart variable — plus the assembled operator Φ.
//!
//! Run: cargo run --release -p monge --example concave_envelope

use std::sync::Arc;

use monge::background::Background;
use monge::envelope::{
    phi_eval, verify_envelope, verify_phi, EnvelopeContext, EnvelopeOptions, GradientSet,
};
use monge::operator::{evaluate_f, ConvexSetE, EquationSpec, Family, FamilyOperator};
use monge::sym::SymMatrix;

fn main() {
    let spec = EquationSpec::new(Family::MongeAmpere, 2);
    let bg = Background::flat(2);
    let set = ConvexSetE::eigen_box(2, 0.25, 4.0);
    // DF eigenvalues on this box lie in [(1/2n)C₀⁻², (1/2n)C₀²]; open the
    // slope box by 1% so every tangent is strictly admissible.
    let (lo, hi) = (0.25 / 16.0, 16.0 / 4.0);
    let op = FamilyOperator::new(spec, bg.clone()).unwrap().with_set(set.clone());
    let ctx = EnvelopeContext::new(
        Arc::new(op),
        GradientSet::new(0.99 * lo, 1.01 * hi),
        EnvelopeOptions::default(),
    );
    println!("dual sample set size: {}", ctx.sample_count());

    // Inside the set the envelope reproduces F.
    let inside = SymMatrix::scaled_identity(4, 1.7);
    ctx.register(&inside);
    let x = [0.0; 4];
    let fbar = ctx.eval(&inside, &x).unwrap();
    let f = evaluate_f(&spec, &bg, &inside, &x).unwrap();
    println!("inside the box:   F̄ = {fbar:.8}, F = {f:.8}, gap = {:.1e}", (fbar - f).abs());

    // Outside it grows linearly with slope between 2nλ and 2nΛ.
    for t in [2.0, 6.0, 12.0] {
        let outside = inside.shift(t);
        ctx.register(&outside);
        let v = ctx.eval(&outside, &x).unwrap();
        println!("  F̄(N + {t:>4}·I) = {v:.6}");
    }

    // Φ(N, x) = F̄(S(x) + T(N, x), x) agrees with the raw operator whenever
    // the argument stays admissible.
    let phi0 = phi_eval(&ctx, &spec, &bg, &SymMatrix::zeros(4), &x).unwrap();
    println!("Φ(0, 0) = {phi0:.8} (argument S(0) = 2I is inside the box)");

    let report = verify_envelope(&ctx, 200, 7).unwrap();
    println!("\nenvelope certification over 200 trials:");
    println!("  concavity margin    {:+.2e}", report.concavity_margin);
    println!("  Lipschitz margin    {:+.2e}", report.lipschitz_margin);
    println!(
        "  ellipticity margins {:+.2e} / {:+.2e}",
        report.ellipticity_lower_margin, report.ellipticity_upper_margin
    );
    println!("  Hölder margin       {:+.2e}", report.holder_margin);
    println!("  equality gap on 𝓔   {:.2e}", report.equality_gap);
    println!("  passed = {}", report.passed);

    let phi = verify_phi(&ctx, &spec, &bg, 100, 9).unwrap();
    println!("\nΦ increment sandwich (K̂ = {:.3}):", phi.t_constant);
    println!(
        "  lower margin {:+.2e}, upper margin {:+.2e}, passed = {}",
        phi.increment_lower_margin, phi.increment_upper_margin, phi.passed
    );
}
