//! Measurements on solved fields: sup norms, sampled Hölder seminorms,
//! C^{2,α}-type norms on the interior half-domain, the pointwise
//! quadratic-decay exponent, and refinement experiments with CSV output.
//!
//! The a-priori estimate being probed is universal with existential
//! constants, so nothing here "computes the constant"; the experiments
//! record desk-scale proxies: boundedness of the measured C^{2,α} norm under
//! refinement and under data sweeps, and the empirical decay exponent of the
//! best local quadratic fit.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::background::{Background, TrigPoly};
use crate::error::{Error, Result};
use crate::grid::{laplacian, real_hessian_fd, PeriodicGrid, ScalarField};
use crate::operator::EquationSpec;
use crate::sampling::rng_for;
use crate::solver::{manufacture, newton_solve, SolveOptions};

/// max |u| over the lattice.
pub fn sup_norm(field: &ScalarField) -> f64 {
    field.sup_norm()
}

/// Sampled α-Hölder seminorm: max over `pair_budget` seeded lattice pairs of
/// |u(p) - u(q)| / d(p,q)^α with the torus metric. Monotone nondecreasing in
/// the budget by construction (the sample for a bigger budget is a superset).
pub fn holder_seminorm(field: &ScalarField, alpha: f64, pair_budget: usize, seed: u64) -> f64 {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0,1)");
    holder_seminorm_masked(field, alpha, pair_budget, seed, |_| true)
}

fn holder_seminorm_masked(
    field: &ScalarField,
    alpha: f64,
    pair_budget: usize,
    seed: u64,
    admit: impl Fn(usize) -> bool,
) -> f64 {
    let grid = field.grid();
    let count = grid.len();
    let v = field.values();
    let mut best = 0.0_f64;
    let mut rng = rng_for(seed, 31);
    use rand::Rng;
    let mut drawn = 0usize;
    let mut attempts = 0usize;
    while drawn < pair_budget && attempts < pair_budget * 20 {
        attempts += 1;
        let p = rng.random_range(0..count);
        let q = rng.random_range(0..count);
        if p == q || !admit(p) || !admit(q) {
            continue;
        }
        drawn += 1;
        let d = grid.distance(p, q);
        if d < 1e-12 {
            continue;
        }
        let quot = (v[p] - v[q]).abs() / d.powf(alpha);
        if quot > best {
            best = quot;
        }
    }
    best
}

/// The three ingredients of the C^{2,α} measurement on the interior
/// half-domain: sup |u|, sup of the Hessian operator norm, and the largest
/// sampled α-seminorm over the second-difference entry fields.
pub fn c2alpha_parts(
    field: &ScalarField,
    alpha: f64,
    pair_budget: usize,
    seed: u64,
) -> (f64, f64, f64) {
    let grid = field.grid();
    let d = grid.dim();
    let m = grid.points_per_axis();
    let half = |idx: usize| -> bool {
        grid.coords(idx)
            .iter()
            .all(|&c| c >= m / 4 && c < m - m / 4)
    };
    let sup_u = field.sup_norm();
    let mut sup_hess = 0.0_f64;
    let hessians: Vec<crate::sym::SymMatrix> = (0..grid.len())
        .map(|p| real_hessian_fd(field, p))
        .collect();
    for (p, h) in hessians.iter().enumerate() {
        if half(p) {
            sup_hess = sup_hess.max(h.operator_norm());
        }
    }
    let mut max_semi = 0.0_f64;
    let mut entry = ScalarField::zeros(grid.clone());
    for a in 0..d {
        for b in a..d {
            for p in 0..grid.len() {
                entry.values_mut()[p] = hessians[p].matrix()[(a, b)];
            }
            let s = holder_seminorm_masked(&entry, alpha, pair_budget, seed ^ ((a * d + b) as u64), half);
            max_semi = max_semi.max(s);
        }
    }
    (sup_u, sup_hess, max_semi)
}

/// C^{2,α}-type norm: sup |u| + sup ‖D²u‖ + max entrywise α-seminorm of the
/// discrete Hessian, measured on the interior half-domain.
pub fn c2alpha_norm(field: &ScalarField, alpha: f64, pair_budget: usize, seed: u64) -> f64 {
    let (a, b, c) = c2alpha_parts(field, alpha, pair_budget, seed);
    a + b + c
}

/// Quadratic monomial count for the local fit.
fn quad_coeff_count(d: usize) -> usize {
    1 + d + d * (d + 1) / 2
}

/// Radii for the decay fit on this grid: the smallest radius holding at
/// least 2.2× the coefficient count of lattice points, then 1.35× and 1.8×
/// that, all capped at a quarter period. None when the grid is too coarse to
/// nest three usable radii.
pub fn decay_radii(grid: &PeriodicGrid) -> Option<Vec<f64>> {
    let h = grid.spacing();
    let quarter = grid.period() / 4.0;
    let need = (2.2 * quad_coeff_count(grid.dim()) as f64).ceil() as usize;
    let mut r1 = None;
    let mut c = 1.5;
    while c * h <= quarter {
        if ball_size(grid, c * h) >= need {
            r1 = Some(c * h);
            break;
        }
        c += 0.5;
    }
    let r1 = r1?;
    let (r2, r3) = (1.35 * r1, 1.8 * r1);
    if r3 > quarter {
        return None;
    }
    Some(vec![r1, r2, r3])
}

fn ball_size(grid: &PeriodicGrid, r: f64) -> usize {
    let h = grid.spacing();
    let reach = (r / h).floor() as i64;
    let d = grid.dim();
    let mut count = 0usize;
    let mut offset = vec![-reach; d];
    'outer: loop {
        let dist2: f64 = offset.iter().map(|&o| (o as f64 * h).powi(2)).sum();
        if dist2 <= r * r {
            count += 1;
        }
        for a in (0..d).rev() {
            offset[a] += 1;
            if offset[a] <= reach {
                continue 'outer;
            }
            offset[a] = -reach;
            if a == 0 {
                break 'outer;
            }
        }
    }
    count
}

/// Pointwise decay exponent: fit the best degree-2 polynomial (approximate
/// Chebyshev via iteratively reweighted least squares) over lattice balls of
/// each radius, regress log max-residual against log r, and return
/// slope - 2. Residuals at roundoff cap the exponent at 10.
pub fn decay_exponent(field: &ScalarField, center: usize, radii: &[f64]) -> Result<f64> {
    assert!(radii.len() >= 3, "need at least three nested radii");
    let grid = field.grid();
    let d = grid.dim();
    let ncoef = quad_coeff_count(d);
    let h = grid.spacing();
    let quarter = grid.period() / 4.0;
    let mut log_pts = Vec::new();
    let c_center = grid.coords(center);
    for &r in radii {
        assert!(r <= quarter * (1.0 + 1e-12), "radius exceeds quarter period");
        // Gather ball points in wrapped local coordinates.
        let reach = (r / h).floor() as i64;
        let m = grid.points_per_axis() as i64;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        let mut offset = vec![-reach; d];
        'gather: loop {
            let delta: Vec<f64> = offset.iter().map(|&o| o as f64 * h).collect();
            let dist2: f64 = delta.iter().map(|&x| x * x).sum();
            if dist2 <= r * r {
                let coords: Vec<usize> = c_center
                    .iter()
                    .zip(&*offset)
                    .map(|(&c, &o)| (c as i64 + o).rem_euclid(m) as usize)
                    .collect();
                vals.push(field.values()[grid.index(&coords)]);
                let mut row = Vec::with_capacity(ncoef);
                row.push(1.0);
                row.extend_from_slice(&delta);
                for a in 0..d {
                    for b in a..d {
                        row.push(delta[a] * delta[b]);
                    }
                }
                rows.push(row);
            }
            for a in (0..d).rev() {
                offset[a] += 1;
                if offset[a] <= reach {
                    continue 'gather;
                }
                offset[a] = -reach;
                if a == 0 {
                    break 'gather;
                }
            }
        }
        if rows.len() < 2 * ncoef {
            return Err(Error::TooFewPoints {
                points: rows.len(),
                needed: 2 * ncoef,
                radius: r,
            });
        }
        let max_res = chebyshev_fit_residual(&rows, &vals, ncoef);
        log_pts.push((r.ln(), max_res));
    }
    let scale = 1.0 + field.sup_norm();
    if log_pts.iter().all(|&(_, res)| res <= 1e-12 * scale) {
        return Ok(10.0);
    }
    let pts: Vec<(f64, f64)> = log_pts
        .iter()
        .map(|&(lr, res)| (lr, res.max(1e-300).ln()))
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    Ok(slope - 2.0)
}

/// Weighted least squares with 5 Lawson reweighting sweeps toward the max
/// residual; returns the final max |residual|.
fn chebyshev_fit_residual(rows: &[Vec<f64>], vals: &[f64], ncoef: usize) -> f64 {
    let npts = rows.len();
    let mut w = vec![1.0_f64; npts];
    let mut max_res = 0.0_f64;
    for _ in 0..5 {
        let mut a = DMatrix::zeros(npts, ncoef);
        let mut b = DVector::zeros(npts);
        for (i, row) in rows.iter().enumerate() {
            let sw = w[i].sqrt();
            for (j, &x) in row.iter().enumerate() {
                a[(i, j)] = sw * x;
            }
            b[i] = sw * vals[i];
        }
        let svd = a.svd(true, true);
        let coef = svd.solve(&b, 1e-12).expect("SVD solve");
        max_res = 0.0;
        let mut resids = vec![0.0; npts];
        for (i, row) in rows.iter().enumerate() {
            let fit: f64 = row.iter().zip(coef.iter()).map(|(x, c)| x * c).sum();
            let r = (vals[i] - fit).abs();
            resids[i] = r;
            max_res = max_res.max(r);
        }
        if max_res <= 0.0 {
            break;
        }
        let mut total = 0.0;
        for i in 0..npts {
            w[i] *= 0.1 + resids[i] / max_res;
            total += w[i];
        }
        for wi in &mut w {
            *wi *= npts as f64 / total;
        }
    }
    max_res
}

/// Norm measurements of one solved field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormReport {
    pub sup_u: f64,
    pub sup_laplacian: f64,
    pub psi_holder: f64,
    pub u_c2alpha: f64,
    pub decay_exponents: Vec<f64>,
}

/// K = max(sup|u|, sup Δu), the quantity the solver also reports.
pub fn k_measured(bg: &Background, u: &ScalarField) -> Result<f64> {
    let mut sup_lap = f64::NEG_INFINITY;
    for p in 0..u.grid().len() {
        sup_lap = sup_lap.max(laplacian(u, bg, p)?);
    }
    Ok(u.sup_norm().max(sup_lap))
}

pub fn measure(
    u: &ScalarField,
    psi: &ScalarField,
    bg: &Background,
    alpha: f64,
    alpha0: f64,
    pair_budget: usize,
    seed: u64,
    decay_centers: usize,
) -> Result<NormReport> {
    let grid = u.grid();
    let mut sup_lap = f64::NEG_INFINITY;
    for p in 0..grid.len() {
        sup_lap = sup_lap.max(laplacian(u, bg, p)?);
    }
    let psi_holder = holder_seminorm(psi, alpha0, pair_budget, seed ^ 0xabcd);
    let u_c2alpha = c2alpha_norm(u, alpha, pair_budget, seed);
    let mut decay = Vec::new();
    if let Some(radii) = decay_radii(grid) {
        use rand::Rng;
        let mut rng = rng_for(seed, 97);
        for _ in 0..decay_centers {
            let center = rng.random_range(0..grid.len());
            decay.push(decay_exponent(u, center, &radii)?);
        }
    }
    Ok(NormReport {
        sup_u: u.sup_norm(),
        sup_laplacian: sup_lap,
        psi_holder,
        u_c2alpha,
        decay_exponents: decay,
    })
}

/// Discrete admissibility box for converged determinant-family runs: from
/// K = sup Δu and inf f, the arithmetic-geometric bound pins the pencil
/// matrix 2(h + u_{ij̄}) inside [C₀⁻¹·I, C₀·I]. Returns (C₀, check passed).
pub fn ma_domain_check(
    spec: &EquationSpec,
    bg: &Background,
    u: &ScalarField,
    psi: &ScalarField,
    shift: f64,
) -> Result<(f64, bool)> {
    use crate::operator::{equation_rhs_with, hermitian_side, reduced_argument, Family};
    assert!(matches!(spec.family, Family::MongeAmpere),
        "domain box check applies to the Monge-Ampère family");
    let grid = u.grid();
    let n = spec.n as f64;
    let mut trace_max = f64::NEG_INFINITY;
    let mut f_min = f64::INFINITY;
    for p in 0..grid.len() {
        let x = grid.point(p);
        let tr_h = bg
            .g(&x)
            .matrix()
            .clone()
            .lu()
            .solve(bg.h(&x).matrix())
            .expect("metric invertible")
            .trace()
            .re;
        trace_max = trace_max.max(tr_h + laplacian(u, bg, p)?);
        f_min = f_min.min(shift.exp() * equation_rhs_with(spec, bg, &x, psi.values()[p]));
    }
    let up = 2.0 * trace_max;
    let lo = f_min.powf(n) / up.powf(n - 1.0);
    let c0 = up.max(1.0 / lo);
    let mut ok = true;
    for p in 0..grid.len() {
        let x = grid.point(p);
        let d2 = real_hessian_fd(u, p);
        let arg = reduced_argument(spec, bg, &d2, &[], &x);
        let herm = hermitian_side(&arg).scale(2.0);
        let ev = herm.eigenvalues();
        if ev[0] > c0 * (1.0 + 1e-9) || ev[ev.len() - 1] < 1.0 / c0 * (1.0 - 1e-9) {
            ok = false;
            break;
        }
    }
    Ok((c0, ok))
}

/// Which built-in background an experiment uses.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "eps")]
pub enum BackgroundSpec {
    Flat,
    Warped(f64),
    AlmostComplex(f64),
}

impl BackgroundSpec {
    pub fn build(&self, n: usize) -> Background {
        match *self {
            BackgroundSpec::Flat => Background::flat(n),
            BackgroundSpec::Warped(eps) => Background::warped(n, eps),
            BackgroundSpec::AlmostComplex(eps) => Background::almost_complex(n, eps),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub spec: EquationSpec,
    pub background: BackgroundSpec,
    pub grid_sizes: Vec<usize>,
    pub amplitude: f64,
    pub alpha: f64,
    pub alpha0: f64,
    pub seed: u64,
    #[serde(default = "default_pair_budget")]
    pub pair_budget: usize,
    #[serde(default = "default_decay_centers")]
    pub decay_centers: usize,
    /// Optional ψ-amplitude sweep on the finest grid (data product only).
    #[serde(default)]
    pub amplitude_sweep: Vec<f64>,
}

fn default_pair_budget() -> usize {
    20_000
}

fn default_decay_centers() -> usize {
    20
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.grid_sizes.is_empty() {
            return Err(Error::InvalidConfig("empty grid size list".into()));
        }
        if !self.grid_sizes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidConfig(
                "grid sizes must be strictly increasing".into(),
            ));
        }
        if !(0.0 < self.alpha && self.alpha < 1.0) {
            return Err(Error::InvalidConfig("alpha must lie in (0,1)".into()));
        }
        if !(0.0 < self.alpha0 && self.alpha0 < 1.0) {
            return Err(Error::InvalidConfig("alpha0 must lie in (0,1)".into()));
        }
        Ok(())
    }
}

/// One CSV row of an experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub grid_m: usize,
    pub h: f64,
    pub sup_u: f64,
    pub sup_lap: f64,
    pub psi_holder: f64,
    pub u_c2alpha: f64,
    pub decay_alpha_median: f64,
    pub solve_iters: usize,
    pub converged: bool,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn run_one(
    config: &ExperimentConfig,
    bg: &Background,
    m: usize,
    amplitude: f64,
) -> Result<ExperimentRow> {
    let grid = PeriodicGrid::new(config.spec.dim(), m);
    let u_star = TrigPoly::manufactured(config.spec.n, amplitude);
    let problem = manufacture(&config.spec, bg, &u_star, &grid)?;
    let u0 = ScalarField::zeros(grid.clone());
    let (u, report) = newton_solve(&config.spec, bg, &problem.psi, &u0, &SolveOptions::default())?;
    let norms = measure(
        &u,
        &problem.psi,
        bg,
        config.alpha,
        config.alpha0,
        config.pair_budget,
        config.seed,
        config.decay_centers,
    )?;
    Ok(ExperimentRow {
        grid_m: m,
        h: grid.spacing(),
        sup_u: norms.sup_u,
        sup_lap: norms.sup_laplacian,
        psi_holder: norms.psi_holder,
        u_c2alpha: norms.u_c2alpha,
        decay_alpha_median: median(norms.decay_exponents),
        solve_iters: report.iterations,
        converged: report.converged,
    })
}

/// Run the refinement experiment. Solver failures are recorded per row
/// (converged = false, norms NaN) and the remaining rows still run.
pub fn run_experiment(config: &ExperimentConfig) -> Result<(Vec<ExperimentRow>, bool)> {
    config.validate()?;
    let bg = config.background.build(config.spec.n);
    let mut rows = Vec::new();
    let mut all_ok = true;
    for &m in &config.grid_sizes {
        match run_one(config, &bg, m, config.amplitude) {
            Ok(row) => rows.push(row),
            Err(e) => {
                all_ok = false;
                eprintln!("grid m={m}: {e}");
                rows.push(ExperimentRow {
                    grid_m: m,
                    h: PeriodicGrid::new(config.spec.dim(), m).spacing(),
                    sup_u: f64::NAN,
                    sup_lap: f64::NAN,
                    psi_holder: f64::NAN,
                    u_c2alpha: f64::NAN,
                    decay_alpha_median: f64::NAN,
                    solve_iters: 0,
                    converged: false,
                });
            }
        }
    }
    Ok((rows, all_ok))
}

/// Sweep rows (finest grid, varying amplitude), a data product with no
/// assertion attached.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<(f64, ExperimentRow)>> {
    config.validate()?;
    let bg = config.background.build(config.spec.n);
    let m = *config.grid_sizes.last().unwrap();
    let mut out = Vec::new();
    for &amp in &config.amplitude_sweep {
        let row = run_one(config, &bg, m, amp)?;
        out.push((amp, row));
    }
    Ok(out)
}

pub const CSV_HEADER: &str =
    "grid_m,h,sup_u,sup_lap,psi_holder,u_c2alpha,decay_alpha_median,solve_iters,converged";

pub fn write_csv(rows: &[ExperimentRow], path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{},{}",
            r.grid_m,
            r.h,
            r.sup_u,
            r.sup_lap,
            r.psi_holder,
            r.u_c2alpha,
            r.decay_alpha_median,
            r.solve_iters,
            r.converged
        )?;
    }
    Ok(())
}

pub fn write_sweep_csv(rows: &[(f64, ExperimentRow)], path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "amplitude,{CSV_HEADER}")?;
    for (amp, r) in rows {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{},{},{}",
            amp,
            r.grid_m,
            r.h,
            r.sup_u,
            r.sup_lap,
            r.psi_holder,
            r.u_c2alpha,
            r.decay_alpha_median,
            r.solve_iters,
            r.converged
        )?;
    }
    Ok(())
}
