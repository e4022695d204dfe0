//! Certify the structure conditions for each equation family: uniform
//! ellipticity of DF on the admissible set, fiberwise concavity of F,
//! Hölder continuity in x of F, S and T, and the linearity/positivity
//! properties of T.
//!
//! Run: cargo run --release -p monge --example structure_check

use monge::background::Background;
use monge::operator::{check_structure, ConvexSetE, EquationSpec, Family, SamplePlan};

fn main() {
    let cases = [
        (EquationSpec::new(Family::MongeAmpere, 2), Background::flat(2)),
        (EquationSpec::new(Family::Hessian { k: 2 }, 3), Background::flat(3)),
        (EquationSpec::new(Family::Quotient { k: 2, l: 3 }, 3), Background::flat(3)),
        (EquationSpec::new(Family::PshMongeAmpere, 2), Background::warped(2, 0.15)),
    ];
    let plan = SamplePlan::default();
    for (spec, bg) in cases {
        let set = ConvexSetE::default_for(&spec, &bg);
        let rep = check_structure(&spec, &bg, &set, &plan);
        println!(
            "{:?} (n = {}): passed = {}",
            spec.family, spec.n, rep.passed
        );
        println!(
            "  ellipticity   λ̂ = {:.4e}, Λ̂ = {:.4e}",
            rep.lambda_hat, rep.big_lambda_hat
        );
        println!("  concavity margin = {:+.2e}", rep.concavity_margin);
        println!(
            "  Hölder fits (F, S, T) = ({:.3}, {:.3}, {:.3}), chart radius = {}",
            rep.holder_k_f, rep.holder_k_s, rep.holder_k_t, rep.chart_radius
        );
        println!(
            "  T: linearity defect {:.1e}, positivity margin {:+.1e}, norm ratio [{:.3}, {:.3}]",
            rep.t_linearity_defect, rep.t_positivity_margin, rep.t_ratio_lo, rep.t_ratio_hi
        );
        if let (Some(lo), Some(hi)) = (rep.ma_envelope_lo, rep.ma_envelope_hi) {
            println!("  analytic DF envelope: [{lo:.4e}, {hi:.4e}]");
        }
        println!();
    }
}
