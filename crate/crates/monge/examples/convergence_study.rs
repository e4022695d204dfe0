//! Manufactured-solution refinement study: sup-norm errors against the
//! known truth across grid sizes, and the observed convergence order of the
//! second-order stencils, for three equation families.
//!
//! Run: cargo run --release -p monge --example convergence_study

use monge::background::Background;
use monge::operator::{EquationSpec, Family};
use monge::solver::{manufactured_convergence, observed_order, SolveOptions};

fn main() {
    let cases = [
        ("Monge-Ampère, n = 2", EquationSpec::new(Family::MongeAmpere, 2), 0.1),
        ("psh Monge-Ampère, n = 2", EquationSpec::new(Family::PshMongeAmpere, 2), 0.05),
        ("Monge-Ampère, n = 1 (linear)", EquationSpec::new(Family::MongeAmpere, 1), 0.2),
    ];
    for (name, spec, amplitude) in cases {
        let bg = Background::flat(spec.n);
        let rows =
            manufactured_convergence(&spec, &bg, amplitude, &[8, 12, 16], &SolveOptions::default())
                .unwrap();
        println!("{name}:");
        println!("  m      h        sup error   iters");
        for r in &rows {
            println!(
                "  {:<3}  {:.5}  {:.4e}   {}",
                r.m, r.h, r.error_sup, r.iterations
            );
        }
        println!("  observed order: {:.3}\n", observed_order(&rows));
    }
}
