//! Refinement studies beyond the acceptance family. The σ_k study on a
//! six-dimensional lattice is expensive and ignored by default:
//! `cargo test -p monge --test convergence -- --ignored --nocapture`.

use monge::background::Background;
use monge::operator::{EquationSpec, Family};
use monge::solver::{manufactured_convergence, observed_order, SolveOptions};

#[test]
fn psh_monge_ampere_is_second_order() {
    let spec = EquationSpec::new(Family::PshMongeAmpere, 2);
    let bg = Background::flat(2);
    let rows =
        manufactured_convergence(&spec, &bg, 0.05, &[8, 12, 16], &SolveOptions::default())
            .unwrap();
    let order = observed_order(&rows);
    println!("psh-MA rows: {rows:?}");
    assert!(order >= 1.8, "observed order {order}");
    for r in &rows {
        assert!(r.converged && r.iterations <= 8);
    }
}

#[test]
fn warped_background_ma_is_second_order() {
    let spec = EquationSpec::new(Family::MongeAmpere, 2);
    let bg = Background::warped(2, 0.15);
    let rows =
        manufactured_convergence(&spec, &bg, 0.08, &[8, 12, 16], &SolveOptions::default())
            .unwrap();
    let order = observed_order(&rows);
    println!("warped MA rows: {rows:?}");
    assert!(order >= 1.8, "observed order {order}");
}

#[test]
#[ignore = "six-dimensional lattice, several minutes"]
fn hessian_equation_is_second_order_on_small_grids() {
    let spec = EquationSpec::new(Family::Hessian { k: 2 }, 3);
    let bg = Background::flat(3);
    let rows = manufactured_convergence(&spec, &bg, 0.08, &[4, 6, 8], &SolveOptions::default())
        .unwrap();
    let order = observed_order(&rows);
    println!("Hessian(k=2, n=3) rows: {rows:?}");
    assert!(order >= 1.8, "observed order {order}");
}
