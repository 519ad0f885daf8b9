use std::path::PathBuf;
use std::process::ExitCode;

use carnot_core::mc::{read_batch, Scheme};
use carnot_core::verify::{self, parse_t_grid, Experiment, ExperimentConfig, Report};
use carnot_core::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Monte Carlo and quadrature experiments on stratified complex Lie groups.
///
/// Exit status: 0 when every check passes, 1 when a check fails, 2 for
/// configuration or input errors, 3 for numerical failures.
#[derive(Parser)]
#[command(name = "carnot", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Structure checks: Jacobi identity, grading, BCH associativity, H-type.
    Validate {
        #[command(flatten)]
        common: Common,
        /// `euclidean` or a JSON file holding a Gram matrix on the realification.
        #[arg(long)]
        inner_product: Option<String>,
        /// Make the H-type test part of the verdict.
        #[arg(long)]
        require_h_type: bool,
    },
    /// Sample the heat kernel at s = a; `--out` is the batch file.
    Sample {
        #[command(flatten)]
        common: Common,
        /// Where to write the report JSON (and its CSV mirror).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Integration-by-parts identities and orthogonality of homogeneous parts.
    Identities {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        family: Family,
        /// Number of random polynomial pairs.
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long)]
        orthogonality_pairs: Option<usize>,
    },
    /// L^p norms of f composed with shrinking dilations over a t-grid.
    Contractivity {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        family: Family,
        /// Single exponent; default sweeps 0.5, 1, 2, 4.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        t_grid: Option<String>,
        /// Slack in standard errors per step.
        #[arg(long)]
        slack: Option<f64>,
    },
    /// Strong hypercontractivity ratio over a t-grid augmented with t_J.
    Shc {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        family: Family,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        p: f64,
        /// LSI constant. Required unless `--c-from-probe`.
        #[arg(long)]
        c: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        /// Take c from the LSI probe on the same batch.
        #[arg(long, conflicts_with = "c")]
        c_from_probe: bool,
        #[arg(long)]
        t_grid: Option<String>,
        #[arg(long)]
        slack: Option<f64>,
        /// Random probe members beyond the monomials (with --c-from-probe).
        #[arg(long)]
        family_size: Option<usize>,
    },
    /// Empirical LSI constant over a seeded polynomial family.
    LsiProbe {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        family: Family,
        /// Random members beyond the monomials.
        #[arg(long)]
        family_size: Option<usize>,
    },
    /// Heat-kernel quadrature against its invariants and the sampler.
    KernelCheck {
        #[command(flatten)]
        common: Common,
        /// KDE bandwidth.
        #[arg(long)]
        bandwidth: Option<f64>,
    },
    /// Non-holomorphy of the Ornstein-Uhlenbeck operator at the center.
    Nonholo {
        #[command(flatten)]
        common: Common,
        /// Test polynomial; default is the first central coordinate.
        #[arg(long)]
        f: Option<String>,
    },
}

#[derive(Args)]
struct Common {
    /// Builtin tag (heisenberg:N, abelian:N, filiform:N) or a JSON group spec.
    #[arg(long, default_value = "heisenberg:1")]
    group: String,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    /// Report path; a CSV mirror is written next to it. Default: stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Standard errors allowed in statistical checks.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Reuse a batch written by `sample` instead of sampling.
    #[arg(long, conflicts_with_all = ["n", "steps", "seed", "scheme"])]
    batch: Option<PathBuf>,
}

#[derive(Args)]
struct Family {
    /// Test polynomial, e.g. "z1 + (0,2)*z3^2". Default: seeded random ones.
    #[arg(long)]
    f: Option<String>,
    /// Largest weighted degree of random polynomials.
    #[arg(long)]
    degree: Option<u32>,
    /// Number of random test polynomials when `--f` is absent.
    #[arg(long)]
    held_out: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Auto,
    IncrementExp,
    AreaMatched,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Auto => Scheme::Auto,
            SchemeArg::IncrementExp => Scheme::IncrementExp,
            SchemeArg::AreaMatched => Scheme::AreaMatched,
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl Common {
    fn config(&self, experiment: Experiment) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(experiment, &self.group);
        cfg.a = self.a;
        set(&mut cfg.n, self.n);
        set(&mut cfg.steps, self.steps);
        set(&mut cfg.seed, self.seed);
        set(&mut cfg.scheme, self.scheme.map(Scheme::from));
        set(&mut cfg.sigmas, self.tol);
        cfg.workers = self.workers;
        cfg
    }
}

impl Family {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        cfg.f = self.f.clone();
        set(&mut cfg.degree, self.degree);
        set(&mut cfg.held_out, self.held_out);
    }
}

/// Builds the config plus the report destination.
fn configure(command: &Command) -> Result<(ExperimentConfig, &Common, Option<PathBuf>)> {
    let grid = |text: &Option<String>| text.as_deref().map(parse_t_grid).transpose();
    Ok(match command {
        Command::Validate {
            common,
            inner_product,
            require_h_type,
        } => {
            let mut cfg = common.config(Experiment::Validate);
            cfg.inner_product = inner_product.clone();
            cfg.require_h_type = *require_h_type;
            (cfg, common, common.out.clone())
        }
        Command::Sample { common, report } => {
            let mut cfg = common.config(Experiment::Sample);
            cfg.out = common.out.clone();
            (cfg, common, report.clone())
        }
        Command::Identities {
            common,
            family,
            pairs,
            orthogonality_pairs,
        } => {
            let mut cfg = common.config(Experiment::Identities);
            family.apply(&mut cfg);
            set(&mut cfg.pairs, *pairs);
            set(&mut cfg.orthogonality_pairs, *orthogonality_pairs);
            (cfg, common, common.out.clone())
        }
        Command::Contractivity {
            common,
            family,
            p,
            t_grid,
            slack,
        } => {
            let mut cfg = common.config(Experiment::Contractivity);
            family.apply(&mut cfg);
            cfg.p = *p;
            set(&mut cfg.t_grid, grid(t_grid)?);
            set(&mut cfg.slack, *slack);
            (cfg, common, common.out.clone())
        }
        Command::Shc {
            common,
            family,
            q,
            p,
            c,
            beta,
            c_from_probe,
            t_grid,
            slack,
            family_size,
        } => {
            if c.is_none() && !c_from_probe {
                return Err(Error::Domain("shc needs --c or --c-from-probe".into()));
            }
            let mut cfg = common.config(Experiment::Shc);
            family.apply(&mut cfg);
            cfg.q = Some(*q);
            cfg.p = Some(*p);
            cfg.c = *c;
            cfg.beta = *beta;
            cfg.c_from_probe = *c_from_probe;
            set(&mut cfg.t_grid, grid(t_grid)?);
            set(&mut cfg.slack, *slack);
            set(&mut cfg.family_size, *family_size);
            (cfg, common, common.out.clone())
        }
        Command::LsiProbe {
            common,
            family,
            family_size,
        } => {
            let mut cfg = common.config(Experiment::LsiProbe);
            family.apply(&mut cfg);
            set(&mut cfg.family_size, *family_size);
            (cfg, common, common.out.clone())
        }
        Command::KernelCheck { common, bandwidth } => {
            let mut cfg = common.config(Experiment::KernelCheck);
            set(&mut cfg.bandwidth, *bandwidth);
            (cfg, common, common.out.clone())
        }
        Command::Nonholo { common, f } => {
            let mut cfg = common.config(Experiment::Nonholo);
            cfg.f = f.clone();
            (cfg, common, common.out.clone())
        }
    })
}

fn execute(cli: &Cli) -> Result<Report> {
    let (cfg, common, dest) = configure(&cli.command)?;
    let report = match &common.batch {
        Some(path) => {
            cfg.validate()?;
            let batch = read_batch(path)?;
            verify::run_with_batch(&cfg, &batch)?
        }
        None => verify::run(&cfg)?,
    };
    match dest {
        Some(path) => {
            report.write(&path)?;
        }
        None => println!("{}", report.to_json()?),
    }
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(report) => {
            eprintln!(
                "{}: {} ({} checks, {:.1} s)",
                report.experiment,
                if report.passed() { "pass" } else { "fail" },
                report.checks.len(),
                report.walltime_s
            );
            ExitCode::from(verify::report_exit_code(&report) as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(verify::exit_code(&e) as u8)
        }
    }
}
