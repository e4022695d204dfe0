//! Damped Newton solver for the reduced equations on periodic grids.
//!
//! The discrete problem on a compact torus carries the usual normalization
//! constant: we solve F(S(x) + T-side(D²u, Du, x)) = e^s·f(x) for the pair
//! (u, s) with the gauge mean(u) = 0. The scalar s absorbs the O(h²)
//! solvability defect of manufactured data (for exact continuum data s → 0
//! under refinement) and makes the bordered Newton system nonsingular.
//!
//! Linear solves are matrix-free BiCGStab with diagonal preconditioning;
//! the Jacobian coefficients are the analytic DF pulled back through the
//! adjoint of T, so Newton converges quadratically once damping deactivates.

use serde::{Deserialize, Serialize};

use crate::background::{Background, TrigPoly};
use crate::error::{Error, Result};
use crate::grid::{gradient_fd, laplacian, real_hessian_fd, PeriodicGrid, ScalarField};
use crate::operator::{df, equation_rhs_with, evaluate_f, reduced_argument, t_adjoint, EquationSpec};
use crate::sampling::par_map_indexed;
use crate::sym::SymMatrix;

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Sup-norm residual tolerance.
    pub tol: f64,
    pub max_iter: usize,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    /// Starting value of the normalization shift s (restarts pass the
    /// previously reported shift to resume at the exact fixed point).
    pub initial_shift: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-8,
            max_iter: 30,
            cg_tol: 1e-10,
            cg_max_iter: 600,
            initial_shift: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_residual: f64,
    pub damping_history: Vec<f64>,
    /// max(sup|u|, sup Δu) with the complex Laplacian.
    pub k_measured: f64,
    pub converged: bool,
    /// The additive normalization shift s in F(...) = e^s·f.
    pub normalization_shift: f64,
}

/// Manufactured problem data: the ψ field that makes `u_star` an exact
/// solution of the continuum equation, sampled on the grid.
#[derive(Debug, Clone)]
pub struct ManufacturedProblem {
    pub psi: ScalarField,
    pub u_star: ScalarField,
    /// Worst-case admissibility margin over the grid (minimum eigenvalue or
    /// minimum σ_j root of the reduced argument).
    pub admissibility_margin: f64,
}

/// Invert the equation family pointwise on analytic data: given u*, compute
/// the ψ field for which u* solves the continuum equation exactly. Fails
/// with `NotAdmissible` at the first grid point where the reduction leaves
/// the admissible cone.
pub fn manufacture(
    spec: &EquationSpec,
    bg: &Background,
    u_star: &TrigPoly,
    grid: &PeriodicGrid,
) -> Result<ManufacturedProblem> {
    spec.validate()?;
    assert_eq!(grid.dim(), spec.dim(), "grid dimension mismatch");
    let count = grid.len();
    let rows: Vec<(f64, f64)> = par_map_indexed(count, |p| {
        let x = grid.point(p);
        let d2 = u_star.hessian(&x);
        let du = u_star.gradient(&x);
        psi_at(spec, bg, &d2, &du, &x)
    });
    let mut worst = f64::INFINITY;
    let mut psi_values = Vec::with_capacity(count);
    for (p, (psi, margin)) in rows.into_iter().enumerate() {
        if margin <= 0.0 || !psi.is_finite() {
            return Err(Error::NotAdmissible {
                point: grid.coords(p),
                reason: format!("reduction margin {margin:.3e} at the manufactured solution"),
            });
        }
        worst = worst.min(margin);
        psi_values.push(psi);
    }
    let mut u_star_field = ScalarField::from_fn(grid.clone(), |x| u_star.eval(x));
    u_star_field.subtract_mean();
    Ok(ManufacturedProblem {
        psi: ScalarField::from_values(grid.clone(), psi_values),
        u_star: u_star_field,
        admissibility_margin: worst,
    })
}

/// Pointwise (ψ, admissibility margin) for analytic second derivatives.
fn psi_at(
    spec: &EquationSpec,
    bg: &Background,
    d2u: &SymMatrix,
    du: &[f64],
    x: &[f64],
) -> (f64, f64) {
    use crate::operator::{pencil_eigenvalues, Family};
    use crate::symfun::{binomial, sigma};
    let arg = reduced_argument(spec, bg, d2u, du, x);
    match spec.family {
        Family::MongeAmpere | Family::PshMongeAmpere => {
            let margin = arg.min_eigenvalue();
            if margin <= 0.0 {
                return (f64::NAN, margin);
            }
            let f = evaluate_f(spec, bg, &arg, x).expect("positive definite argument");
            let n = spec.n as f64;
            let psi = n * (f / (2.0 * bg.g(x).det().powf(1.0 / n))).ln();
            (psi, margin)
        }
        Family::Hessian { k } | Family::PshHessian { k } => {
            let lam = match pencil_eigenvalues(bg, &arg, x) {
                Ok(l) => l,
                Err(_) => return (f64::NAN, -1.0),
            };
            let mut margin = f64::INFINITY;
            for j in 1..=k {
                margin = margin.min(sigma(j, &lam).unwrap());
            }
            if margin <= 0.0 {
                return (f64::NAN, margin);
            }
            let psi = (sigma(k, &lam).unwrap() / binomial(spec.n, k)).ln();
            (psi, margin)
        }
        Family::Quotient { k, l } | Family::PshQuotient { k, l } => {
            let lam = match pencil_eigenvalues(bg, &arg, x) {
                Ok(lm) => lm,
                Err(_) => return (f64::NAN, -1.0),
            };
            let mut margin = f64::INFINITY;
            for j in 1..=l {
                margin = margin.min(sigma(j, &lam).unwrap());
            }
            if margin <= 0.0 {
                return (f64::NAN, margin);
            }
            let sk = sigma(k, &lam).unwrap();
            let sl = sigma(l, &lam).unwrap();
            let psi = (sk * binomial(spec.n, l) / (sl * binomial(spec.n, k))).ln();
            (psi, margin)
        }
    }
}

struct Discretization<'a> {
    spec: &'a EquationSpec,
    bg: &'a Background,
    grid: PeriodicGrid,
    f: Vec<f64>,
}

impl<'a> Discretization<'a> {
    fn new(spec: &'a EquationSpec, bg: &'a Background, psi: &ScalarField) -> Self {
        let grid = psi.grid().clone();
        let f = par_map_indexed(grid.len(), |p| {
            equation_rhs_with(spec, bg, &grid.point(p), psi.values()[p])
        });
        Discretization { spec, bg, grid, f }
    }

    /// Residual field r_p = F(arg_p) - e^s f_p; Err when any point leaves
    /// the admissible domain.
    fn residual(&self, u: &ScalarField, s: f64) -> Result<Vec<f64>> {
        let es = s.exp();
        let needs_du = self.spec.almost_complex;
        let rows: Vec<Result<f64>> = par_map_indexed(self.grid.len(), |p| {
            let x = self.grid.point(p);
            let d2 = real_hessian_fd(u, p);
            let du = if needs_du {
                gradient_fd(u, p)
            } else {
                vec![0.0; self.grid.dim()]
            };
            let arg = reduced_argument(self.spec, self.bg, &d2, &du, &x);
            Ok(evaluate_f(self.spec, self.bg, &arg, &x)? - es * self.f[p])
        });
        rows.into_iter().collect()
    }

    /// Per-point Jacobian coefficients at the current iterate: the symmetric
    /// matrix contracted against D²v, the gradient coefficients (almost
    /// complex only), and the shift column -e^s·f.
    fn coefficients(&self, u: &ScalarField, s: f64) -> Result<Coefficients> {
        let d = self.grid.dim();
        let needs_du = self.spec.almost_complex;
        let rows: Vec<Result<(Vec<f64>, Vec<f64>)>> = par_map_indexed(self.grid.len(), |p| {
            let x = self.grid.point(p);
            let d2 = real_hessian_fd(u, p);
            let du = if needs_du {
                gradient_fd(u, p)
            } else {
                vec![0.0; d]
            };
            let arg = reduced_argument(self.spec, self.bg, &d2, &du, &x);
            let dfm = df(self.spec, self.bg, &arg, &x)?;
            let c = t_adjoint(self.spec, self.bg, &x, &dfm);
            let mut flat = Vec::with_capacity(d * (d + 1) / 2);
            for a in 0..d {
                flat.push(c.matrix()[(a, a)]);
            }
            for a in 0..d {
                for b in (a + 1)..d {
                    flat.push(2.0 * c.matrix()[(a, b)]);
                }
            }
            let grad_coeff = if needs_du {
                let j = self.bg.jfield().j_matrix(&x);
                let dj = self.bg.jfield().dj(&x);
                (0..d)
                    .map(|k| {
                        let mut unit = vec![0.0; d];
                        unit[k] = 1.0;
                        let et = crate::almost_complex::error_tensor(&j, &dj, &unit);
                        let et = if self.spec.family.is_psh() {
                            crate::operator::psh_transform(
                                &et,
                                &crate::operator::riemannian_metric(self.spec, self.bg, &x),
                                self.spec.n,
                            )
                        } else {
                            et
                        };
                        dfm.dot(&et)
                    })
                    .collect()
            } else {
                vec![]
            };
            Ok((flat, grad_coeff))
        });
        let es = s.exp();
        let mut c2 = Vec::with_capacity(self.grid.len());
        let mut c1 = Vec::with_capacity(self.grid.len());
        for r in rows {
            let (flat, grad) = r?;
            c2.push(flat);
            c1.push(grad);
        }
        let fcol: Vec<f64> = self.f.iter().map(|&f| -es * f).collect();
        Ok(Coefficients { c2, c1, fcol })
    }
}

struct Coefficients {
    /// Diagonal entries then doubled upper-triangle entries, per point.
    c2: Vec<Vec<f64>>,
    /// Gradient coefficients (empty in the integrable case), per point.
    c1: Vec<Vec<f64>>,
    /// Shift column -e^s·f_p.
    fcol: Vec<f64>,
}

/// Apply the bordered Jacobian to (v, t): rows are the linearized residual,
/// the last row is the (scaled) gauge mean(v) = 0.
fn apply_jacobian(
    grid: &PeriodicGrid,
    co: &Coefficients,
    z: &[f64],
    gauge_scale: f64,
) -> Vec<f64> {
    let count = grid.len();
    let d = grid.dim();
    let h = grid.spacing();
    let h2 = h * h;
    let t = z[count];
    let v = &z[..count];
    let mut out = par_map_indexed(count, |p| {
        let row = &co.c2[p];
        let v0 = v[p];
        let mut acc = 0.0;
        for a in 0..d {
            let up = v[grid.neighbor(p, a, 1)];
            let dn = v[grid.neighbor(p, a, -1)];
            acc += row[a] * (up - 2.0 * v0 + dn) / h2;
        }
        let mut k = d;
        for a in 0..d {
            let pa = grid.neighbor(p, a, 1);
            let ma = grid.neighbor(p, a, -1);
            for b in (a + 1)..d {
                let pp = v[grid.neighbor(pa, b, 1)];
                let pm = v[grid.neighbor(pa, b, -1)];
                let mp = v[grid.neighbor(ma, b, 1)];
                let mm = v[grid.neighbor(ma, b, -1)];
                acc += row[k] * (pp - pm - mp + mm) / (4.0 * h2);
                k += 1;
            }
        }
        if !co.c1[p].is_empty() {
            for (a, &ca) in co.c1[p].iter().enumerate() {
                let up = v[grid.neighbor(p, a, 1)];
                let dn = v[grid.neighbor(p, a, -1)];
                acc += ca * (up - dn) / (2.0 * h);
            }
        }
        acc + t * co.fcol[p]
    });
    let mean: f64 = v.iter().sum::<f64>() / count as f64;
    out.push(gauge_scale * mean);
    out
}

/// Matrix-free preconditioned BiCGStab on the bordered system.
fn bicgstab(
    grid: &PeriodicGrid,
    co: &Coefficients,
    rhs: &[f64],
    gauge_scale: f64,
    diag: &[f64],
    tol: f64,
    max_iter: usize,
) -> Vec<f64> {
    let n = rhs.len();
    let precond = |v: &[f64]| -> Vec<f64> { v.iter().zip(diag).map(|(x, d)| x / d).collect() };
    let matvec = |v: &[f64]| apply_jacobian(grid, co, v, gauge_scale);

    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let rhat = r.clone();
    let bnorm = norm2(rhs).max(1e-300);
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut vv = vec![0.0; n];
    let mut pv = vec![0.0; n];
    let mut best = x.clone();
    let mut best_res = norm2(&r);
    for _ in 0..max_iter {
        let rho1 = dot(&rhat, &r);
        if rho1.abs() < 1e-300 {
            break;
        }
        let beta = (rho1 / rho) * (alpha / omega);
        for i in 0..n {
            pv[i] = r[i] + beta * (pv[i] - omega * vv[i]);
        }
        let phat = precond(&pv);
        vv = matvec(&phat);
        let denom = dot(&rhat, &vv);
        if denom.abs() < 1e-300 {
            break;
        }
        alpha = rho1 / denom;
        let s: Vec<f64> = (0..n).map(|i| r[i] - alpha * vv[i]).collect();
        if norm2(&s) <= tol * bnorm {
            for i in 0..n {
                x[i] += alpha * phat[i];
            }
            return x;
        }
        let shat = precond(&s);
        let tvec = matvec(&shat);
        let tt = dot(&tvec, &tvec);
        if tt < 1e-300 {
            break;
        }
        omega = dot(&tvec, &s) / tt;
        for i in 0..n {
            x[i] += alpha * phat[i] + omega * shat[i];
            r[i] = s[i] - omega * tvec[i];
        }
        let res = norm2(&r);
        if res < best_res {
            best_res = res;
            best.copy_from_slice(&x);
        }
        if res <= tol * bnorm {
            return x;
        }
        rho = rho1;
    }
    best
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn sup(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
}

/// Damped Newton iteration on (u, s) with mean-zero gauge. Every accepted
/// iterate is admissible at all grid points; damping rejects steps that
/// leave the domain or fail to decrease the sup residual.
pub fn newton_solve(
    spec: &EquationSpec,
    bg: &Background,
    psi: &ScalarField,
    u0: &ScalarField,
    opts: &SolveOptions,
) -> Result<(ScalarField, SolveReport)> {
    spec.validate()?;
    let disc = Discretization::new(spec, bg, psi);
    let count = disc.grid.len();
    let d = disc.grid.dim();
    let h2 = disc.grid.spacing() * disc.grid.spacing();

    let mut u = u0.clone();
    u.subtract_mean();
    let mut s = opts.initial_shift;
    let mut r = disc.residual(&u, s)?;
    let mut res_sup = sup(&r);
    let mut damping = Vec::new();
    let mut iterations = 0;

    while res_sup > opts.tol {
        if iterations >= opts.max_iter {
            return Err(Error::MaxIterations {
                max_iter: opts.max_iter,
                residual: res_sup,
            });
        }
        let co = disc.coefficients(&u, s)?;
        // Diagonal of the u-block plus a unit entry for the shift.
        let mut diag: Vec<f64> = (0..count)
            .map(|p| {
                let v: f64 = co.c2[p][..d].iter().map(|c| c * (-2.0) / h2).sum();
                if v.abs() < 1e-12 {
                    -1.0
                } else {
                    v
                }
            })
            .collect();
        let gauge_scale = diag.iter().map(|v| v.abs()).sum::<f64>() / count as f64;
        diag.push(gauge_scale.max(1.0));

        let mut rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        rhs.push(0.0);
        let z = bicgstab(
            &disc.grid,
            &co,
            &rhs,
            gauge_scale.max(1.0),
            &diag,
            opts.cg_tol,
            opts.cg_max_iter,
        );

        // Backtracking: admissible everywhere and sup-residual decrease.
        let mut alpha = 1.0_f64;
        let mut accepted = false;
        while alpha >= 1e-6 {
            let mut trial = u.clone();
            for (tv, &dz) in trial.values_mut().iter_mut().zip(&z[..count]) {
                *tv += alpha * dz;
            }
            trial.subtract_mean();
            let s_trial = s + alpha * z[count];
            match disc.residual(&trial, s_trial) {
                Ok(rt) => {
                    let new_sup = sup(&rt);
                    if new_sup < res_sup * (1.0 - 1e-4 * alpha) || new_sup <= opts.tol {
                        u = trial;
                        s = s_trial;
                        r = rt;
                        res_sup = new_sup;
                        accepted = true;
                        break;
                    }
                }
                Err(Error::OutsideDomain { .. }) => {}
                Err(e) => return Err(e),
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(Error::LineSearchFailed {
                iteration: iterations,
                residual: res_sup,
            });
        }
        damping.push(alpha);
        iterations += 1;
    }

    let k_measured = measure_k(bg, &u)?;
    let report = SolveReport {
        iterations,
        final_residual: res_sup,
        damping_history: damping,
        k_measured,
        converged: true,
        normalization_shift: s,
    };
    Ok((u, report))
}

/// K = max(sup|u|, sup Δu) with the complex Laplacian of the background.
pub fn measure_k(bg: &Background, u: &ScalarField) -> Result<f64> {
    let laps: Vec<Result<f64>> =
        par_map_indexed(u.grid().len(), |p| laplacian(u, bg, p));
    let mut sup_lap = f64::NEG_INFINITY;
    for l in laps {
        sup_lap = sup_lap.max(l?);
    }
    Ok(u.sup_norm().max(sup_lap))
}

/// One refinement row of a manufactured convergence study.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub m: usize,
    pub h: f64,
    pub error_sup: f64,
    pub iterations: usize,
    pub converged: bool,
    pub normalization_shift: f64,
}

/// Solve the manufactured problem at each grid size and report sup-norm
/// errors against the (mean-zero) manufactured truth.
pub fn manufactured_convergence(
    spec: &EquationSpec,
    bg: &Background,
    amplitude: f64,
    grid_sizes: &[usize],
    opts: &SolveOptions,
) -> Result<Vec<ConvergenceRow>> {
    let u_star = TrigPoly::manufactured(spec.n, amplitude);
    let mut rows = Vec::new();
    for &m in grid_sizes {
        let grid = PeriodicGrid::new(spec.dim(), m);
        let problem = manufacture(spec, bg, &u_star, &grid)?;
        let u0 = ScalarField::zeros(grid.clone());
        let (u, report) = newton_solve(spec, bg, &problem.psi, &u0, opts)?;
        let err = u
            .values()
            .iter()
            .zip(problem.u_star.values())
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));
        rows.push(ConvergenceRow {
            m,
            h: grid.spacing(),
            error_sup: err,
            iterations: report.iterations,
            converged: report.converged,
            normalization_shift: report.normalization_shift,
        });
    }
    Ok(rows)
}

/// Least-squares slope of ln(error) against ln(h): the observed order.
pub fn observed_order(rows: &[ConvergenceRow]) -> f64 {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.error_sup > 0.0)
        .map(|r| (r.h.ln(), r.error_sup.ln()))
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::Family;

    #[test]
    fn manufacture_flat_zero_gives_zero_psi() {
        // u* ≡ 0 and χ = ω = I solve the equation with ψ = 0.
        let spec = EquationSpec::new(Family::MongeAmpere, 2);
        let bg = Background::flat(2);
        let grid = PeriodicGrid::new(4, 6);
        let zero = TrigPoly::new(4);
        let prob = manufacture(&spec, &bg, &zero, &grid).unwrap();
        assert!(prob.psi.sup_norm() <= 1e-13);
        assert!(prob.admissibility_margin > 0.9);
    }

    #[test]
    fn manufacture_matches_pointwise_determinant() {
        let spec = EquationSpec::new(Family::MongeAmpere, 2);
        let bg = Background::flat(2);
        let grid = PeriodicGrid::new(4, 8);
        let u_star = TrigPoly::new(4)
            .with_term(0.1, &[1, 0, 0, 0], 0.0)
            .with_term(0.1, &[0, 0, 1, 0], 0.0);
        let prob = manufacture(&spec, &bg, &u_star, &grid).unwrap();
        for idx in [0usize, 5, 100] {
            let x = grid.point(idx);
            let hu = u_star.complex_hessian(&x);
            let det = crate::sym::HermMatrix::identity(2).add(&hu).det();
            assert!((prob.psi.values()[idx] - det.ln()).abs() <= 1e-12);
        }
    }

    #[test]
    fn manufacture_rejects_large_amplitude() {
        let spec = EquationSpec::new(Family::MongeAmpere, 2);
        let bg = Background::flat(2);
        let grid = PeriodicGrid::new(4, 8);
        let u_star = TrigPoly::manufactured(2, 2.0);
        match manufacture(&spec, &bg, &u_star, &grid) {
            Err(Error::NotAdmissible { .. }) => {}
            other => panic!("expected NotAdmissible, got {other:?}"),
        }
    }

    #[test]
    fn linear_one_dimensional_ma_converges_in_two_iterations() {
        let spec = EquationSpec::new(Family::MongeAmpere, 1);
        let bg = Background::flat(1);
        let grid = PeriodicGrid::new(2, 16);
        let u_star = TrigPoly::manufactured(1, 0.2);
        let prob = manufacture(&spec, &bg, &u_star, &grid).unwrap();
        let (u, report) =
            newton_solve(&spec, &bg, &prob.psi, &ScalarField::zeros(grid), &SolveOptions::default())
                .unwrap();
        assert!(report.converged);
        assert!(report.iterations <= 2, "took {} iterations", report.iterations);
        let err = u
            .values()
            .iter()
            .zip(prob.u_star.values())
            .fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
        assert!(err <= 0.05 * grid_err_scale(&prob.u_star), "error {err}");
    }

    fn grid_err_scale(u: &ScalarField) -> f64 {
        u.sup_norm().max(1.0)
    }

    #[test]
    fn manufactured_ma_two_dim_converges_with_small_error() {
        let spec = EquationSpec::new(Family::MongeAmpere, 2);
        let bg = Background::flat(2);
        let grid = PeriodicGrid::new(4, 8);
        let u_star = TrigPoly::manufactured(2, 0.1);
        let prob = manufacture(&spec, &bg, &u_star, &grid).unwrap();
        let (u, report) =
            newton_solve(&spec, &bg, &prob.psi, &ScalarField::zeros(grid.clone()), &SolveOptions::default())
                .unwrap();
        assert!(report.converged);
        assert!(report.iterations <= 8);
        assert!(report.final_residual <= 1e-8);
        assert!(report.normalization_shift.abs() < 0.05);
        let err = u
            .values()
            .iter()
            .zip(prob.u_star.values())
            .fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
        // Second-order stencils at h = 2π/8.
        assert!(err <= 1.5 * grid.spacing().powi(2), "error {err}");

        // Restarting from the exact fixed point (u, s) needs no Newton steps.
        let restart = SolveOptions {
            initial_shift: report.normalization_shift,
            ..SolveOptions::default()
        };
        let (_, again) = newton_solve(&spec, &bg, &prob.psi, &u, &restart).unwrap();
        assert_eq!(again.iterations, 0);
    }

    #[test]
    fn psh_ma_two_dim_converges() {
        let spec = EquationSpec::new(Family::PshMongeAmpere, 2);
        let bg = Background::flat(2);
        let grid = PeriodicGrid::new(4, 8);
        let u_star = TrigPoly::manufactured(2, 0.05);
        let prob = manufacture(&spec, &bg, &u_star, &grid).unwrap();
        let (u, report) =
            newton_solve(&spec, &bg, &prob.psi, &ScalarField::zeros(grid.clone()), &SolveOptions::default())
                .unwrap();
        assert!(report.converged && report.iterations <= 8);
        let err = u
            .values()
            .iter()
            .zip(prob.u_star.values())
            .fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
        assert!(err <= 1.5 * grid.spacing().powi(2), "error {err}");
    }

    #[test]
    fn almost_complex_ma_converges() {
        let spec = EquationSpec::new(Family::MongeAmpere, 2).almost_complex();
        let bg = Background::almost_complex(2, 0.1);
        let grid = PeriodicGrid::new(4, 6);
        let u_star = TrigPoly::manufactured(2, 0.05);
        let prob = manufacture(&spec, &bg, &u_star, &grid).unwrap();
        let (u, report) =
            newton_solve(&spec, &bg, &prob.psi, &ScalarField::zeros(grid.clone()), &SolveOptions::default())
                .unwrap();
        assert!(report.converged && report.iterations <= 10);
        let err = u
            .values()
            .iter()
            .zip(prob.u_star.values())
            .fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
        assert!(err <= 2.0 * grid.spacing().powi(2), "error {err}");
    }

    #[test]
    fn residual_is_gauge_invariant() {
        let spec = EquationSpec::new(Family::MongeAmpere, 2);
        let bg = Background::flat(2);
        let grid = PeriodicGrid::new(4, 6);
        let u_star = TrigPoly::manufactured(2, 0.1);
        let prob = manufacture(&spec, &bg, &u_star, &grid).unwrap();
        let disc = Discretization::new(&spec, &bg, &prob.psi);
        let u = prob.u_star.clone();
        let mut shifted = u.clone();
        for v in shifted.values_mut() {
            *v += 0.37;
        }
        let r1 = disc.residual(&u, 0.0).unwrap();
        let r2 = disc.residual(&shifted, 0.0).unwrap();
        let diff = r1
            .iter()
            .zip(&r2)
            .fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
        assert!(diff <= 1e-11, "gauge leak {diff}");
    }

    #[test]
    fn jacobian_matches_directional_derivative() {
        let spec = EquationSpec::new(Family::MongeAmpere, 2);
        let bg = Background::flat(2);
        let grid = PeriodicGrid::new(4, 6);
        let u_star = TrigPoly::manufactured(2, 0.1);
        let prob = manufacture(&spec, &bg, &u_star, &grid).unwrap();
        let disc = Discretization::new(&spec, &bg, &prob.psi);
        let u = ScalarField::from_fn(grid.clone(), |x| 0.05 * (x[0] + x[2]).cos());
        let co = disc.coefficients(&u, 0.0).unwrap();
        let v = ScalarField::from_fn(grid.clone(), |x| (x[1] - 0.3 * x[3]).sin());
        let t = 1e-6;
        let mut up = u.clone();
        for (a, b) in up.values_mut().iter_mut().zip(v.values()) {
            *a += t * b;
        }
        let r0 = disc.residual(&u, 0.0).unwrap();
        let r1 = disc.residual(&up, 0.0).unwrap();
        let mut z: Vec<f64> = v.values().to_vec();
        z.push(0.0);
        let jv = apply_jacobian(&disc.grid, &co, &z, 1.0);
        for p in (0..grid.len()).step_by(7) {
            let fd = (r1[p] - r0[p]) / t;
            assert!(
                (fd - jv[p]).abs() <= 1e-5 * (1.0 + jv[p].abs()),
                "point {p}: fd {fd} vs Jv {}",
                jv[p]
            );
        }
    }

    #[test]
    fn two_grid_convergence_order_is_second() {
        let spec = EquationSpec::new(Family::MongeAmpere, 2);
        let bg = Background::flat(2);
        let rows = manufactured_convergence(&spec, &bg, 0.1, &[6, 12], &SolveOptions::default())
            .unwrap();
        let order = observed_order(&rows);
        assert!(order >= 1.5, "observed order {order}, rows {rows:?}");
    }
}
