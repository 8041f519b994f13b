use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use projsmooth::bundles::{
    chern_number, fixture_bott_pullback, fixture_constant, fixture_loring,
    fixture_random_near_projection,
};
use projsmooth::calculus::{contour_projection, upper_spectral_projection, ContourSpec};
use projsmooth::grid_field::io::{read_field, write_field};
use projsmooth::grid_field::{lipschitz_constant, operator_norm, TorusGrid};
use projsmooth::mollifier::{discretize, smooth, MollifierKernel};
use projsmooth::pipeline::{smooth_project, Choice, PipelineConfig, DEFAULT_MAX_RETRIES};
use projsmooth::verify::{self, Scope};
use projsmooth::Error;

#[derive(Parser)]
#[command(name = "projsmooth", version, about = "Smooth Lipschitz projection fields on flat tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FixtureKind {
    #[value(name = "loring_k")]
    LoringK,
    #[value(name = "bott_pullback")]
    BottPullback,
    Random,
    Constant,
}

#[derive(Subcommand)]
enum Command {
    /// Write a fixture field to an mfield-json file.
    Fixture {
        #[arg(long, value_enum)]
        name: FixtureKind,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        k: i64,
        /// Points per dimension.
        #[arg(long)]
        grid: usize,
        /// Torus dimension (1 or 2).
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Matrix size for random and constant fixtures.
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.2)]
        delta: f64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Mollify a field with the radial bump kernel.
    Smooth {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        epsilon_smooth: f64,
        #[arg(long, default_value_t = 0.5)]
        kernel_plateau: f64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Exact grid Lipschitz constant.
    Lipschitz {
        #[arg(long)]
        input: PathBuf,
    },
    /// First Chern number of a projection field on T².
    Chern {
        #[arg(long)]
        input: PathBuf,
    },
    /// Smooth a projection field and project back, certifying the result.
    Pipeline {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        target_eps: f64,
        /// Gap half-width or "auto".
        #[arg(long, default_value = "auto")]
        delta: String,
        /// Smoothing radius or "auto".
        #[arg(long, default_value = "auto")]
        epsilon_smooth: String,
        #[arg(long, default_value_t = 0.5)]
        kernel_plateau: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_RETRIES)]
        max_retries: usize,
        #[arg(long)]
        check_chern: bool,
        /// Omit the generation timestamp so reports are byte-reproducible.
        #[arg(long)]
        no_timestamp: bool,
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Riesz projection of one matrix of a field by contour quadrature.
    Contour {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        s: f64,
        #[arg(long, default_value_t = 16)]
        segments: usize,
        /// Grid index of the matrix to use.
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// Run the invariant suite.
    Verify {
        #[arg(long, default_value = "all")]
        scope: String,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

enum Outcome {
    Pass,
    CertificationFailure,
}

fn parse_choice(s: &str) -> Result<Choice, Error> {
    if s == "auto" {
        return Ok(Choice::Auto);
    }
    s.parse::<f64>()
        .map(Choice::Value)
        .map_err(|_| Error::Parameter(format!("expected a number or \"auto\", got {s:?}")))
}

fn matrix_json(a: &projsmooth::CMatrix) -> serde_json::Value {
    let rows: Vec<Vec<[f64; 2]>> = (0..a.nrows())
        .map(|r| (0..a.ncols()).map(|c| [a[(r, c)].re, a[(r, c)].im]).collect())
        .collect();
    json!(rows)
}

fn run(cli: Cli) -> Result<Outcome, Error> {
    match cli.command {
        Command::Fixture {
            name,
            k,
            grid,
            dim,
            m,
            seed,
            delta,
            output,
        } => {
            let sizes = vec![grid; dim];
            let g = TorusGrid::new(&sizes)?;
            let field = match name {
                FixtureKind::LoringK => fixture_loring(k, &g)?,
                FixtureKind::BottPullback => fixture_bott_pullback(k, 1.0, &g)?,
                FixtureKind::Random => fixture_random_near_projection(seed, &g, m, delta)?,
                FixtureKind::Constant => fixture_constant(&g, m, m / 2)?,
            };
            write_field(&field, output)?;
        }
        Command::Smooth {
            input,
            epsilon_smooth,
            kernel_plateau,
            output,
        } => {
            let f = read_field(input)?;
            let kernel = MollifierKernel::new(f.grid().dim(), kernel_plateau)?;
            let stencil = discretize(&kernel, f.grid(), epsilon_smooth)?;
            write_field(&smooth(&f, &stencil)?, output)?;
        }
        Command::Lipschitz { input } => {
            let est = lipschitz_constant(&read_field(input)?)?;
            let out = json!({
                "value": est.value,
                "witness": [est.witness.0, est.witness.1],
                "pair_count": est.pair_count,
            });
            println!("{out}");
        }
        Command::Chern { input } => {
            let c = chern_number(&read_field(input)?)?;
            println!("{}", json!({ "chern": c.chern, "residual": c.residual }));
        }
        Command::Pipeline {
            input,
            target_eps,
            delta,
            epsilon_smooth,
            kernel_plateau,
            max_retries,
            check_chern,
            no_timestamp,
            report,
            output,
        } => {
            let p = read_field(input)?;
            let config = PipelineConfig {
                target_eps,
                delta: parse_choice(&delta)?,
                epsilon_smooth: parse_choice(&epsilon_smooth)?,
                kernel_plateau,
                max_retries,
                check_chern,
            };
            let mut out = smooth_project(&p, &config)?;
            if !no_timestamp {
                out.report.generated_unix = SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .ok()
                    .map(|d| d.as_secs());
            }
            std::fs::write(&report, out.report.to_json()? + "\n")?;
            write_field(&out.q, output)?;
            if !out.report.certified() {
                return Ok(Outcome::CertificationFailure);
            }
        }
        Command::Contour {
            input,
            delta,
            s,
            segments,
            index,
        } => {
            let f = read_field(input)?;
            if index >= f.len() {
                return Err(Error::IndexOutOfRange {
                    index,
                    len: f.len(),
                });
            }
            let a = f.matrix(index);
            let spec = ContourSpec::new(s, segments, delta)?;
            let c = contour_projection(&a, &spec)?;
            let q = upper_spectral_projection(&a, delta)?;
            let dist = operator_norm(&(&c.projection - &q))?;
            let out = json!({
                "projection": matrix_json(&c.projection),
                "distance_to_eigen": dist,
                "segments_used": c.segments_used,
                "last_change": c.last_change,
                "r": c.r,
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
            if dist > 1e-6 {
                return Ok(Outcome::CertificationFailure);
            }
        }
        Command::Verify { scope, json } => {
            let scope: Scope = scope.parse()?;
            let report = verify::run(scope);
            for c in &report.checks {
                println!(
                    "{} {:<10} {:<45} n={:<4} worst={:e} threshold={:e}",
                    if c.pass { "PASS" } else { "FAIL" },
                    format!("{:?}", c.scope).to_lowercase(),
                    c.name,
                    c.instances,
                    c.worst,
                    c.threshold
                );
                if let Some(e) = &c.error {
                    println!("     error: {e}");
                }
            }
            if let Some(path) = json {
                std::fs::write(path, report.to_json()? + "\n")?;
            }
            if !report.passed {
                return Ok(Outcome::CertificationFailure);
            }
        }
    }
    Ok(Outcome::Pass)
}

fn configure_threads() {
    if let Some(n) = std::env::var("PROJSMOOTH_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::CertificationFailure) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_certification_failure() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
