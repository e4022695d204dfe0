//! Acceptance suite: one test per criterion, one PASS/FAIL line each.
//! Run with `cargo test -p monge --test acceptance -- --nocapture` to see
//! the lines; every tolerance is pinned in code.

use std::sync::Arc;

use monge::background::{Background, TrigPoly};
use monge::envelope::{verify_envelope, verify_phi, EnvelopeContext, EnvelopeOptions, GradientSet};
use monge::grid::{PeriodicGrid, ScalarField};
use monge::harness::{c2alpha_norm, decay_exponent, decay_radii};
use monge::operator::{
    check_structure, ConvexSetE, EquationSpec, Family, FamilyOperator, SamplePlan,
};
use monge::sampling::{random_hermitian, random_psd_sym, rng_for, uniform};
use monge::solver::{manufacture, newton_solve, observed_order, ConvergenceRow, SolveOptions};
use monge::sym::{iota, project_j, ComplexStructure, HermMatrix};
use monge::symfun::{
    in_gamma_cone, lemma_bounds, reference, sigma, sigma_reduced, EigenTuple,
};

fn criterion(name: &str, ok: bool) {
    println!("{}: criterion {}", if ok { "PASS" } else { "FAIL" }, name);
    assert!(ok, "criterion failed: {name}");
}

#[test]
fn criterion_1_iota_algebra() {
    let mut ok = true;

    // det(ι(H)) = (det H)², 500 random Hermitian, n ≤ 6.
    let mut rng = rng_for(101, 0);
    for trial in 0..500 {
        let n = 1 + trial % 6;
        let h = random_hermitian(&mut rng, n, 1.0);
        let a = iota(&h).det();
        let b = h.det();
        let scale = a.abs().max((b * b).abs()).max(1.0);
        if (a - b * b).abs() > 1e-10 * scale {
            ok = false;
        }
    }

    // Order preservation, 200 random ordered pairs.
    let mut rng = rng_for(102, 0);
    for trial in 0..200 {
        let n = 1 + trial % 5;
        let h1 = random_hermitian(&mut rng, n, 1.0);
        let p = random_hermitian(&mut rng, n, 1.0);
        let h2 = h1.add(&HermMatrix::new(p.matrix().adjoint() * p.matrix()));
        let diff = iota(&h2).sub(&iota(&h1));
        if diff.min_eigenvalue() < -1e-12 * (1.0 + diff.operator_norm()) {
            ok = false;
        }
    }

    // Projection sandwich ½‖P‖ ≤ ‖p(P)‖ ≤ ‖P‖, 500 random P ≥ 0.
    let mut rng = rng_for(103, 0);
    for trial in 0..500 {
        let n = 1 + trial % 5;
        let j = ComplexStructure::standard(n);
        let p = random_psd_sym(&mut rng, 2 * n, 1.0);
        let pp = project_j(&p, &j);
        let (np, npp) = (p.operator_norm(), pp.operator_norm());
        if npp > np + 1e-12 || npp < 0.5 * np - 1e-12 {
            ok = false;
        }
    }

    criterion("1 (iota algebra: determinant, order, projection sandwich)", ok);
}

#[test]
fn criterion_2_symmetric_functions() {
    let mut ok = true;

    // Recurrence vs subset enumeration, n ≤ 8.
    let mut rng = rng_for(201, 0);
    for trial in 0..400 {
        let n = 2 + trial % 7;
        let vals: Vec<f64> = (0..n).map(|_| uniform(&mut rng, -2.0, 2.0)).collect();
        let lam = EigenTuple::new(vals);
        for k in 0..=n {
            let fast = sigma(k, &lam).unwrap();
            let (slow, scale) = reference::sigma_subsets(k, &lam);
            if (fast - slow).abs() > 1e-12 * scale.max(1.0) {
                ok = false;
            }
        }
    }

    // The two reduced-polynomial identities, exact to 1e-12.
    let mut rng = rng_for(202, 0);
    for trial in 0..400 {
        let n = 2 + trial % 6;
        let vals: Vec<f64> = (0..n).map(|_| uniform(&mut rng, -2.0, 2.0)).collect();
        let lam = EigenTuple::new(vals);
        let s1 = sigma(1, &lam).unwrap();
        for i in 0..n {
            let li = s1 - sigma_reduced(1, i, &lam).unwrap();
            if (li - lam.get(i)).abs() > 1e-12 * (1.0 + s1.abs()) {
                ok = false;
            }
        }
        for j in 1..=n {
            let lhs: f64 = (0..n)
                .map(|i| sigma_reduced(j - 1, i, &lam).unwrap())
                .sum();
            let rhs = (n - j + 1) as f64 * sigma(j - 1, &lam).unwrap();
            if (lhs - rhs).abs() > 1e-12 * (1.0 + lhs.abs() + rhs.abs()) {
                ok = false;
            }
        }
    }

    // Lemma conclusions with nonnegative margins, 1000 hypothesis-satisfying
    // samples per (n, k).
    for (idx, &(n, k)) in [(3usize, 2usize), (4, 2), (4, 3), (5, 3)].iter().enumerate() {
        let mut rng = rng_for(203, idx as u64);
        let mut accepted = 0;
        while accepted < 1000 {
            let vals: Vec<f64> = (0..n).map(|_| uniform(&mut rng, -0.5, 2.0)).collect();
            let lam = EigenTuple::new(vals);
            if !in_gamma_cone(k, &lam).unwrap() {
                continue;
            }
            let a = (sigma(1, &lam).unwrap())
                .max(1.0 / sigma(k, &lam).unwrap().powf(1.0 / k as f64))
                * (1.0 + 1e-9);
            let rep = lemma_bounds(&lam, k, a).unwrap();
            if !rep.hypotheses_hold {
                continue;
            }
            accepted += 1;
            if rep.conclusion_margins.iter().any(|&m| m < 0.0) {
                ok = false;
            }
            if lam.values().iter().any(|&l| l.abs() > rep.k0_empirical) {
                ok = false;
            }
            if rep.uno_margin < 0.0 || rep.due_ratio_min <= 0.0 {
                ok = false;
            }
        }
    }

    criterion("2 (symmetric functions: oracle agreement, identities, lemma margins)", ok);
}

fn default_structure_cases() -> Vec<(EquationSpec, Background)> {
    vec![
        (EquationSpec::new(Family::MongeAmpere, 1), Background::flat(1)),
        (EquationSpec::new(Family::MongeAmpere, 2), Background::flat(2)),
        (EquationSpec::new(Family::MongeAmpere, 3), Background::flat(3)),
        (EquationSpec::new(Family::Hessian { k: 2 }, 3), Background::flat(3)),
        (EquationSpec::new(Family::Hessian { k: 2 }, 4), Background::flat(4)),
        (EquationSpec::new(Family::Quotient { k: 2, l: 3 }, 3), Background::flat(3)),
        (EquationSpec::new(Family::PshMongeAmpere, 2), Background::flat(2)),
        // The psh σ_k variants need n ≥ 3 by their own parameter ranges;
        // certified at the smallest valid dimension.
        (EquationSpec::new(Family::PshHessian { k: 2 }, 3), Background::flat(3)),
        (EquationSpec::new(Family::PshQuotient { k: 2, l: 3 }, 3), Background::flat(3)),
    ]
}

#[test]
fn criterion_3_structure_certification() {
    let mut ok = true;
    for (spec, bg) in default_structure_cases() {
        let set = ConvexSetE::default_for(&spec, &bg);
        let plan = SamplePlan {
            matrix_samples: 400,
            pair_samples: 400,
            holder_pairs: 600,
            seed: 7,
        };
        let rep = check_structure(&spec, &bg, &set, &plan);
        if !(rep.passed && rep.lambda_hat > 0.0 && rep.concavity_margin >= -1e-10) {
            println!("  structure failure: {rep:?}");
            ok = false;
        }
        if let Some(env_ok) = rep.ma_envelope_ok {
            if !env_ok {
                ok = false;
            }
        }
    }
    criterion("3 (structure conditions certified for all six families)", ok);
}

fn ma_envelope_context() -> (EquationSpec, Background, EnvelopeContext) {
    let spec = EquationSpec::new(Family::MongeAmpere, 2);
    let bg = Background::flat(2);
    let set = ConvexSetE::eigen_box(2, 0.25, 4.0);
    // Slope box from the analytic DF range on the eigenvalue box, opened by
    // 1% so tangent slopes stay strictly admissible.
    let lo = 0.25 / 4.0 / 4.0;
    let hi = 4.0 / 0.25 / 4.0;
    let op = FamilyOperator::new(spec, bg.clone()).unwrap().with_set(set);
    let ctx = EnvelopeContext::new(
        Arc::new(op),
        GradientSet::new(0.99 * lo, 1.01 * hi),
        EnvelopeOptions::default(),
    );
    (spec, bg, ctx)
}

#[test]
fn criterion_4_envelope() {
    let (spec, bg, ctx) = ma_envelope_context();
    let rep = verify_envelope(&ctx, 500, 41).unwrap();
    let mut ok = rep.passed
        && rep.concavity_margin >= -1e-6
        && rep.lipschitz_margin >= -1e-6
        && rep.ellipticity_lower_margin >= -1e-6
        && rep.ellipticity_upper_margin >= -1e-6
        && rep.holder_margin >= -1e-6
        && rep.domination_margin >= -1e-6
        && rep.equality_gap <= 1e-6;
    let phi = verify_phi(&ctx, &spec, &bg, 200, 43).unwrap();
    ok = ok && phi.passed && phi.increment_lower_margin >= -1e-6 && phi.increment_upper_margin >= -1e-6;
    if !ok {
        println!("  envelope: {rep:?}");
        println!("  phi: {phi:?}");
    }
    criterion("4 (envelope properties i-iv and the Phi increment sandwich)", ok);
}

struct SolveOutcome {
    m: usize,
    u: ScalarField,
    row: ConvergenceRow,
}

fn run_manufactured_family() -> Vec<SolveOutcome> {
    let spec = EquationSpec::new(Family::MongeAmpere, 2);
    let bg = Background::flat(2);
    let u_star = TrigPoly::manufactured(2, 0.1);
    let mut out = Vec::new();
    for m in [8usize, 12, 16, 24] {
        let grid = PeriodicGrid::new(4, m);
        let prob = manufacture(&spec, &bg, &u_star, &grid).unwrap();
        let (u, rep) = newton_solve(
            &spec,
            &bg,
            &prob.psi,
            &ScalarField::zeros(grid.clone()),
            &SolveOptions::default(),
        )
        .unwrap();
        let err = u
            .values()
            .iter()
            .zip(prob.u_star.values())
            .fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
        out.push(SolveOutcome {
            m,
            u,
            row: ConvergenceRow {
                m,
                h: grid.spacing(),
                error_sup: err,
                iterations: rep.iterations,
                converged: rep.converged,
                normalization_shift: rep.normalization_shift,
            },
        });
    }
    out
}

#[test]
fn criteria_5_and_6_solver_convergence_and_regularity_proxy() {
    let outcomes = run_manufactured_family();
    let rows: Vec<ConvergenceRow> = outcomes.iter().map(|o| o.row.clone()).collect();

    // Criterion 5: observed order ≥ 1.8, ≤ 8 Newton steps per grid, and the
    // one-dimensional equation is linear (≤ 2 steps).
    let order = observed_order(&rows);
    let mut ok5 = order >= 1.8;
    for r in &rows {
        ok5 = ok5 && r.converged && r.iterations <= 8;
    }
    {
        let spec1 = EquationSpec::new(Family::MongeAmpere, 1);
        let bg1 = Background::flat(1);
        let grid = PeriodicGrid::new(2, 16);
        let prob = manufacture(&spec1, &bg1, &TrigPoly::manufactured(1, 0.2), &grid).unwrap();
        let (_, rep) = newton_solve(
            &spec1,
            &bg1,
            &prob.psi,
            &ScalarField::zeros(grid),
            &SolveOptions::default(),
        )
        .unwrap();
        ok5 = ok5 && rep.iterations <= 2;
    }
    if !ok5 {
        println!("  order {order}, rows {rows:?}");
    }
    criterion("5 (manufactured convergence order >= 1.8, Newton budgets)", ok5);

    // Criterion 6: C^{2,1/2} bounded across refinements (max/min ≤ 1.5) and
    // median decay exponent ≥ 0.5 at 20 interior centers on the finest grid.
    let mut norms = Vec::new();
    for o in &outcomes {
        norms.push(c2alpha_norm(&o.u, 0.5, 20_000, 61));
    }
    let max = norms.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let min = norms.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let mut ok6 = max / min <= 1.5;

    let finest = outcomes.iter().max_by_key(|o| o.m).unwrap();
    let radii = decay_radii(finest.u.grid()).expect("finest grid supports the decay fit");
    let mut exps = Vec::new();
    let mut rng = rng_for(62, 0);
    use rand::Rng;
    for _ in 0..20 {
        let center = rng.random_range(0..finest.u.grid().len());
        exps.push(decay_exponent(&finest.u, center, &radii).unwrap());
    }
    exps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = 0.5 * (exps[9] + exps[10]);
    ok6 = ok6 && median >= 0.5;
    if !ok6 {
        println!("  c2alpha norms {norms:?} ratio {}", max / min);
        println!("  decay exponents {exps:?} median {median}");
    }
    criterion("6 (regularity proxy: bounded C^{2,a} across refinement, decay median)", ok6);
}

#[test]
fn criterion_7_almost_complex_tensors() {
    use monge::almost_complex::{
        anti_invariant_part, anti_invariant_projection, djdu_values_fd, error_tensor,
        one_one_part,
    };
    use monge::background::JField;
    let mut ok = true;

    // Constant J: E vanishes exactly.
    let std = JField::standard(2);
    let u = TrigPoly::new(4)
        .with_term(0.8, &[1, 0, 0, 0], 0.1)
        .with_term(-0.5, &[0, 1, 1, 0], 0.7)
        .with_term(0.3, &[1, 0, 0, 2], -0.4);
    let x = [0.3, -0.6, 0.2, 0.9];
    let e = error_tensor(&std.j_matrix(&x), &std.dj(&x), &u.gradient(&x));
    ok = ok && e.matrix().abs().max() == 0.0;

    // Finite-difference reconstruction of dJdu from its two parts.
    let jf = JField::warped(2, 0.3);
    for x in [[0.3, -0.6, 0.2, 0.9], [1.1, 0.4, -0.2, 0.6]] {
        let j = jf.j_matrix(&x);
        let omega = djdu_values_fd(&u, &jf, &x, 1e-4);
        let p11 = one_one_part(&omega, &j);
        let anti = anti_invariant_part(&u.gradient(&x), &j, &jf.dj(&x));
        let recon = &p11 + &anti;
        ok = ok && (&recon - &omega).abs().max() <= 1e-6;
    }

    // The anti-invariant part reads only the gradient: perturbing D²u
    // through the projection route changes nothing.
    let x = [0.4, 0.2, -0.8, 0.6];
    let j = jf.j_matrix(&x);
    let dj = jf.dj(&x);
    let du = u.gradient(&x);
    let om_a = monge::almost_complex::djdu_values(&u.hessian(&x), &du, &j, &dj);
    let om_b = monge::almost_complex::djdu_values(&u.hessian(&x).shift(5.0), &du, &j, &dj);
    let pa = anti_invariant_projection(&om_a, &j);
    let pb = anti_invariant_projection(&om_b, &j);
    ok = ok && (&pa - &pb).abs().max() <= 1e-10;
    let f1 = anti_invariant_part(&du, &j, &dj);
    let f2 = anti_invariant_part(&du, &j, &dj);
    ok = ok && f1 == f2;

    criterion("7 (almost-complex tensors: E, dJdu decomposition, gradient-only part)", ok);
}

#[test]
fn criterion_8_determinism_across_thread_counts() {
    let run_all = || -> (String, String, Vec<u8>, String) {
        // Structure certification.
        let spec = EquationSpec::new(Family::MongeAmpere, 2);
        let bg = Background::flat(2);
        let set = ConvexSetE::default_for(&spec, &bg);
        let plan = SamplePlan {
            matrix_samples: 150,
            pair_samples: 150,
            holder_pairs: 200,
            seed: 7,
        };
        let structure = serde_json::to_string(&check_structure(&spec, &bg, &set, &plan)).unwrap();

        // Envelope verification.
        let (_, _, ctx) = ma_envelope_context();
        let envelope = serde_json::to_string(&verify_envelope(&ctx, 40, 17).unwrap()).unwrap();

        // A small solve: field bytes and the report.
        let grid = PeriodicGrid::new(4, 8);
        let prob = manufacture(&spec, &bg, &TrigPoly::manufactured(2, 0.1), &grid).unwrap();
        let (u, rep) = newton_solve(
            &spec,
            &bg,
            &prob.psi,
            &ScalarField::zeros(grid),
            &SolveOptions::default(),
        )
        .unwrap();
        let mut field_bytes = Vec::new();
        for v in u.values() {
            field_bytes.extend_from_slice(&v.to_le_bytes());
        }
        let report = serde_json::to_string(&rep).unwrap();
        (structure, envelope, field_bytes, report)
    };

    let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let pool4 = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = pool1.install(run_all);
    let b = pool4.install(run_all);
    let c = pool4.install(run_all);

    let ok = a == b && b == c;
    criterion("8 (bit-identical reports at 1 and 4 threads, and across reruns)", ok);
}
