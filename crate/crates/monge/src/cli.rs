//! Command-line front end. One binary, five subcommands:
//!
//! * `check`    — certify the structure conditions for a family, JSON report
//! * `solve`    — manufactured or ψ-file solve, HFG1 field + JSON report
//! * `envelope` — evaluate or verify the concave envelope
//! * `report`   — refinement experiment from a JSON config, CSV output
//! * `lemma`    — sampled eigenvalue-lemma constants
//!
//! Exit codes: 0 success, 1 analytic failure (non-convergence or failed
//! certification), 2 usage/config error, 3 inadmissible data.

use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::background::{Background, TrigPoly};
use crate::envelope::{phi_eval, verify_envelope, verify_phi, EnvelopeContext, EnvelopeOptions, GradientSet};
use crate::error::{Error, Result};
use crate::grid::{read_field, write_field, PeriodicGrid, ScalarField};
use crate::harness::{run_experiment, run_sweep, write_csv, write_sweep_csv, ExperimentConfig};
use crate::operator::{
    check_structure, ConvexSetE, EquationSpec, Family, FamilyOperator, SamplePlan,
};
use crate::solver::{manufacture, newton_solve, SolveOptions};
use crate::sym::SymMatrix;

#[derive(Parser, Debug)]
#[command(
    name = "monge",
    about = "Concave elliptic reductions of complex Monge-Ampère type equations"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Master seed for every randomized component.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Worker threads (0 = automatic).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Output path (report JSON, field file, or CSV depending on command).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct SpecArgs {
    /// Equation family: ma | hessian | quotient | psh-ma | psh-hessian | psh-quotient.
    #[arg(long)]
    family: String,
    /// Complex dimension n.
    #[arg(long)]
    n: usize,
    /// Hessian/quotient degree k.
    #[arg(long)]
    k: Option<usize>,
    /// Quotient upper degree ℓ (defaults to n).
    #[arg(long)]
    l: Option<usize>,
    /// Almost-complex variant (determinant families only).
    #[arg(long, default_value_t = false)]
    almost_complex: bool,
    /// Background: eigenvalue box constant C₀ for determinant families.
    #[arg(long, default_value_t = 4.0)]
    c0: f64,
    /// Cone-box constant K₀ for σ_k families.
    #[arg(long, default_value_t = 2.0)]
    k0: f64,
    /// Warped-background amplitude (0 = flat data).
    #[arg(long, default_value_t = 0.0)]
    warp: f64,
}

impl SpecArgs {
    fn spec(&self) -> Result<EquationSpec> {
        let family = match self.family.as_str() {
            "ma" => Family::MongeAmpere,
            "hessian" => Family::Hessian {
                k: self.k.ok_or_else(|| missing("--k"))?,
            },
            "quotient" => Family::Quotient {
                k: self.k.ok_or_else(|| missing("--k"))?,
                l: self.l.unwrap_or(self.n),
            },
            "psh-ma" => Family::PshMongeAmpere,
            "psh-hessian" => Family::PshHessian {
                k: self.k.ok_or_else(|| missing("--k"))?,
            },
            "psh-quotient" => Family::PshQuotient {
                k: self.k.ok_or_else(|| missing("--k"))?,
                l: self.l.unwrap_or(self.n),
            },
            other => {
                return Err(Error::InvalidConfig(format!("unknown family '{other}'")));
            }
        };
        let mut spec = EquationSpec::new(family, self.n);
        if self.almost_complex {
            spec = spec.almost_complex();
        }
        spec.validate()?;
        Ok(spec)
    }

    fn background(&self) -> Background {
        if self.almost_complex {
            Background::almost_complex(self.n, if self.warp > 0.0 { self.warp } else { 0.1 })
        } else if self.warp > 0.0 {
            Background::warped(self.n, self.warp)
        } else {
            Background::flat(self.n)
        }
    }

    fn set(&self, spec: &EquationSpec, bg: &Background) -> ConvexSetE {
        match spec.family {
            Family::MongeAmpere | Family::PshMongeAmpere => {
                ConvexSetE::eigen_box(spec.n, 1.0 / self.c0, self.c0)
            }
            Family::Hessian { k } | Family::PshHessian { k } => {
                ConvexSetE::cone_box(bg.g(&vec![0.0; spec.dim()]), self.k0, k)
            }
            Family::Quotient { l, .. } | Family::PshQuotient { l, .. } => {
                ConvexSetE::cone_box(bg.g(&vec![0.0; spec.dim()]), self.k0, l)
            }
        }
    }
}

fn missing(flag: &str) -> Error {
    Error::InvalidConfig(format!("required flag {flag} is missing"))
}

fn warn_on_large_grid(grid: &PeriodicGrid) {
    if grid.len() > 2_000_000 {
        eprintln!(
            "warning: {} lattice points ({}^{}); expect long runtimes",
            grid.len(),
            grid.points_per_axis(),
            grid.dim()
        );
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Certify the structure conditions (ellipticity, concavity, Hölder
    /// continuity, properties of T) for one family.
    Check {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
    },
    /// Solve a manufactured or ψ-file problem on a periodic grid.
    Solve {
        #[command(flatten)]
        spec: SpecArgs,
        /// Points per axis.
        #[arg(long)]
        m: usize,
        /// Manufactured-solution amplitude.
        #[arg(long)]
        manufacture: Option<f64>,
        /// ψ field file (HFG1) as an alternative to --manufacture.
        #[arg(long)]
        psi: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 30)]
        max_iter: usize,
    },
    /// Evaluate or verify the concave envelope.
    Envelope {
        #[command(subcommand)]
        action: EnvelopeAction,
    },
    /// Run a refinement experiment from a JSON config and emit CSV.
    Report {
        #[arg(long)]
        config: PathBuf,
    },
    /// Sample the eigenvalue lemma and print the worst constant.
    Lemma {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Hypothesis constant A.
        #[arg(long, default_value_t = 5.0)]
        a: f64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
}

#[derive(Subcommand, Debug)]
enum EnvelopeAction {
    /// Evaluate F̄ and Φ along the ray B + t·I for a seeded member B.
    Eval {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value_t = 0.0)]
        shift: f64,
    },
    /// Certify the envelope properties and the Φ increment sandwich.
    Verify {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value_t = 500)]
        trials: usize,
    },
}

/// Parse argv and run; returns the process exit code.
pub fn run_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap's own help/version paths exit 0; argument errors exit 2.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if cli.threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidConfig(_) | Error::Json(_) => 2,
                Error::NotAdmissible { .. } => 3,
                _ => 1,
            }
        }
    }
}

fn write_or_print(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn envelope_context(
    spec: &EquationSpec,
    bg: &Background,
    set: &ConvexSetE,
    seed: u64,
) -> Result<EnvelopeContext> {
    let (lo, hi) = crate::operator::ellipticity_bounds(spec, bg, set, 400, seed)?;
    let op = FamilyOperator::new(*spec, bg.clone())?.with_set(set.clone());
    Ok(EnvelopeContext::new(
        Arc::new(op),
        GradientSet::new(0.9 * lo, 1.1 * hi),
        EnvelopeOptions::default(),
    ))
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Check { spec, samples } => {
            let eq = spec.spec()?;
            let bg = spec.background();
            let set = spec.set(&eq, &bg);
            let plan = SamplePlan {
                matrix_samples: samples / 4,
                pair_samples: samples / 4,
                holder_pairs: samples / 2,
                seed: cli.seed,
            };
            let report = check_structure(&eq, &bg, &set, &plan);
            let text = serde_json::to_string_pretty(&report)?;
            write_or_print(&cli.out, &text)?;
            Ok(if report.passed { 0 } else { 1 })
        }
        Command::Solve {
            spec,
            m,
            manufacture: amp,
            psi,
            tol,
            max_iter,
        } => {
            let eq = spec.spec()?;
            let bg = spec.background();
            let grid = PeriodicGrid::new(eq.dim(), m);
            warn_on_large_grid(&grid);
            let (psi_field, truth) = match (amp, psi) {
                (Some(a), None) => {
                    let u_star = TrigPoly::manufactured(eq.n, a);
                    let prob = manufacture(&eq, &bg, &u_star, &grid)?;
                    (prob.psi, Some(prob.u_star))
                }
                (None, Some(path)) => {
                    let f = read_field(&path)?;
                    if f.grid().dim() != eq.dim() || f.grid().points_per_axis() != m {
                        return Err(Error::InvalidConfig(
                            "ψ field dimensions do not match --n/--m".into(),
                        ));
                    }
                    (f, None)
                }
                _ => {
                    return Err(Error::InvalidConfig(
                        "pass exactly one of --manufacture or --psi".into(),
                    ));
                }
            };
            let opts = SolveOptions {
                tol,
                max_iter,
                ..SolveOptions::default()
            };
            let u0 = ScalarField::zeros(grid);
            let (u, report) = newton_solve(&eq, &bg, &psi_field, &u0, &opts)?;
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("u.hfg"));
            write_field(&u, &out)?;
            let mut report_json = serde_json::to_value(&report)?;
            if let Some(truth) = truth {
                let err = u
                    .values()
                    .iter()
                    .zip(truth.values())
                    .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));
                report_json["manufactured_error_sup"] = serde_json::json!(err);
            }
            let report_path = out.with_extension("report.json");
            std::fs::write(&report_path, serde_json::to_string_pretty(&report_json)?)?;
            println!(
                "solved: {} iterations, residual {:.3e}, report {}",
                report.iterations,
                report.final_residual,
                report_path.display()
            );
            Ok(if report.converged { 0 } else { 1 })
        }
        Command::Envelope { action } => match action {
            EnvelopeAction::Eval { spec, shift } => {
                let eq = spec.spec()?;
                let bg = spec.background();
                let set = spec.set(&eq, &bg);
                let ctx = envelope_context(&eq, &bg, &set, cli.seed)?;
                let mut rng = crate::sampling::rng_for(cli.seed, 1);
                let b = set.sample(&mut rng).shift(shift);
                ctx.register(&b);
                let x = vec![0.0; eq.dim()];
                let fbar = ctx.eval(&b, &x)?;
                let phi = phi_eval(&ctx, &eq, &bg, &SymMatrix::zeros(eq.dim()), &x)?;
                let text = serde_json::to_string_pretty(&serde_json::json!({
                    "envelope_at_shifted_member": fbar,
                    "phi_at_zero": phi,
                    "shift": shift,
                    "gradient_set": ctx.gradient,
                }))?;
                write_or_print(&cli.out, &text)?;
                Ok(0)
            }
            EnvelopeAction::Verify { spec, trials } => {
                let eq = spec.spec()?;
                let bg = spec.background();
                let set = spec.set(&eq, &bg);
                let ctx = envelope_context(&eq, &bg, &set, cli.seed)?;
                let env_report = verify_envelope(&ctx, trials, cli.seed)?;
                let phi_report = verify_phi(&ctx, &eq, &bg, trials.min(200), cli.seed)?;
                let passed = env_report.passed && phi_report.passed;
                let text = serde_json::to_string_pretty(&serde_json::json!({
                    "envelope": env_report,
                    "phi": phi_report,
                }))?;
                write_or_print(&cli.out, &text)?;
                Ok(if passed { 0 } else { 1 })
            }
        },
        Command::Report { config } => {
            let text = std::fs::read_to_string(&config)?;
            let cfg: ExperimentConfig = serde_json::from_str(&text)?;
            for &m in &cfg.grid_sizes {
                warn_on_large_grid(&PeriodicGrid::new(cfg.spec.dim(), m));
            }
            let (rows, all_ok) = run_experiment(&cfg)?;
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("report.csv"));
            write_csv(&rows, &out)?;
            if !cfg.amplitude_sweep.is_empty() {
                let sweep = run_sweep(&cfg)?;
                let sweep_path = out.with_extension("sweep.csv");
                write_sweep_csv(&sweep, &sweep_path)?;
            }
            println!("wrote {} rows to {}", rows.len(), out.display());
            Ok(if all_ok { 0 } else { 1 })
        }
        Command::Lemma { n, k, a, samples } => {
            if !(2 <= k && k <= n) {
                return Err(Error::InvalidConfig(format!(
                    "lemma needs 2 <= k <= n, got k={k}, n={n}"
                )));
            }
            if a <= 0.0 {
                return Err(Error::InvalidConfig("lemma constant A must be positive".into()));
            }
            let mut worst = 0.0_f64;
            let mut accepted = 0usize;
            let mut rng = crate::sampling::rng_for(cli.seed, 2);
            while accepted < samples {
                let vals: Vec<f64> = (0..n)
                    .map(|_| crate::sampling::uniform(&mut rng, -0.5, 2.0))
                    .collect();
                let lam = crate::symfun::EigenTuple::new(vals);
                let rep = crate::symfun::lemma_bounds(&lam, k, a)?;
                if rep.hypotheses_hold {
                    accepted += 1;
                    worst = worst.max(rep.k0_empirical);
                }
            }
            println!(
                "worst K0 over {samples} hypothesis-satisfying samples (n={n}, k={k}, A={a}): {worst:.6}"
            );
            Ok(0)
        }
    }
}
