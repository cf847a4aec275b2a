//! Command-line entry point.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand};
use num_complex::Complex64;

use crate::charfn::{CharFnFromPotential, CharFnFromSpectrum};
use crate::error::{Error, Result};
use crate::forward::{solve, ForwardOptions, ForwardSolution};
use crate::inverse::recover_potential;
use crate::io::{self, RunConfig};
use crate::model::{omega_classify, Potential, SpectralInput, Spectrum};
use crate::oracle::{fd_eigenvalues_near, fd_matrix};
use crate::quadrature::{basis_coefficients, l2_norm};
use crate::stability::{scale_test, StabilityOptions};

type C = Complex64;

#[derive(Debug, Parser)]
#[command(
    name = "frozen-sl",
    version,
    about = "Spectra of Sturm-Liouville operators with a frozen argument"
)]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Eigenvalues of a potential.
    Forward {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        potential: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Potential from spectral data.
    Inverse {
        #[arg(long)]
        config: PathBuf,
        /// CSV with columns n, kind (rho|lambda|xi), re, im.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Forward then inverse; prints the relative L2 recovery error.
    Roundtrip {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        potential: PathBuf,
        /// Optional file for the recovered potential.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Randomized stability trials.
    Stability {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        magnitude: f64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Characteristic function on a rectangular λ grid.
    Charfn(CharfnArgs),
    /// Finite-difference eigenvalues, refined from the forward solution.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        potential: PathBuf,
        /// Number of eigenvalues.
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["potential", "spectrum"])))]
struct CharfnArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    potential: Option<PathBuf>,
    #[arg(long)]
    spectrum: Option<PathBuf>,
    /// Real parts as lo:hi:count.
    #[arg(long, allow_hyphen_values = true)]
    re: String,
    /// Imaginary parts as lo:hi:count.
    #[arg(long, default_value = "0:0:1", allow_hyphen_values = true)]
    im: String,
    #[arg(long)]
    out: PathBuf,
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command)),
            Err(e) => Err(Error::input("threads", e.to_string())),
        },
        None => dispatch(cli.command),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

fn stage(msg: impl AsRef<str>) {
    eprintln!("{}", msg.as_ref());
}

fn load(config: &Path) -> Result<RunConfig> {
    let c = io::read_config(config)?;
    stage(format!(
        "config: a = {}, N = {}, M = {}",
        c.bvp.a(),
        c.n_max,
        c.m
    ));
    Ok(c)
}

/// Reads a potential and brings it onto the configured grid.
fn load_potential(path: &Path, config: &RunConfig) -> Result<Potential> {
    let q = io::read_potential(path)?;
    if q.grid_size() != config.m {
        stage(format!(
            "potential: resampled from {} to {} cells",
            q.grid_size(),
            config.m
        ));
        Ok(q.resampled(config.m))
    } else {
        stage(format!("potential: {} cells", q.grid_size()));
        Ok(q)
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Forward {
            config,
            potential,
            out,
        } => {
            let c = load(&config)?;
            let q = load_potential(&potential, &c)?;
            let sol = solve(&q, &c.bvp, c.n_max, &ForwardOptions::default())?;
            stage(format!("forward: {} eigenvalues", c.n_max));
            io::write_spectrum(&out, &sol)?;
            stage(format!("wrote {}", out.display()));
        }
        Command::Inverse { config, input, out } => {
            let c = load(&config)?;
            let data = io::read_spectral_input(&input, &c.bvp, c.n_max)?;
            let q = recover_potential(&data, &c.bvp, c.m)?;
            stage("inverse: potential recovered");
            io::write_potential(&out, &q)?;
            stage(format!("wrote {}", out.display()));
        }
        Command::Roundtrip {
            config,
            potential,
            out,
        } => {
            let c = load(&config)?;
            let q = load_potential(&potential, &c)?;
            let spectrum = solve(&q, &c.bvp, c.n_max, &ForwardOptions::default())?.spectrum;
            stage(format!("forward: {} eigenvalues", c.n_max));
            let xi = basis_coefficients(&q, &c.bvp, c.n_max);
            let data = SpectralInput::from_full(&c.bvp, &spectrum, &xi)?;
            let back = recover_potential(&data, &c.bvp, c.m)?;
            stage("inverse: potential recovered");
            let err = l2_norm(&back.difference(&q)?);
            let norm = l2_norm(&q);
            let rel = if norm > 0.0 { err / norm } else { err };
            println!("relative L2 error: {}", io::fmt(rel));
            if let Some(out) = out {
                io::write_potential(&out, &back)?;
                stage(format!("wrote {}", out.display()));
            }
        }
        Command::Stability {
            config,
            r,
            trials,
            seed,
            magnitude,
            out_dir,
        } => {
            let c = load(&config)?;
            if r.is_nan() || r <= 0.0 {
                return Err(Error::input("r", "must be positive"));
            }
            if magnitude.is_nan() || magnitude < 0.0 {
                return Err(Error::input("magnitude", "must be non-negative"));
            }
            let options = StabilityOptions {
                n_max: c.n_max,
                m: c.m,
                ..StabilityOptions::new(r, trials, seed, magnitude)
            };
            let scales = [1.0, 0.5, 0.25];
            let reports = scale_test(&c.bvp, &options, &scales)?;
            let main = &reports[0];
            stage(format!(
                "stability: {} accepted, {} rejected, C_r = {}",
                main.rows.len(),
                main.rejected,
                io::fmt(main.c_r)
            ));
            fs::create_dir_all(&out_dir)?;
            let rows = out_dir.join("stability.csv");
            io::write_stability_rows(&rows, main)?;
            let summary = out_dir.join("summary.json");
            let pairs: Vec<(f64, &_)> = scales.iter().copied().zip(reports.iter()).collect();
            io::write_summary(&summary, main, &pairs)?;
            stage(format!(
                "wrote {} and {}",
                rows.display(),
                summary.display()
            ));
        }
        Command::Charfn(args) => {
            let c = load(&args.config)?;
            let re = io::parse_range("re", &args.re)?;
            let im = io::parse_range("im", &args.im)?;
            let grid: Vec<C> = im
                .iter()
                .flat_map(|&y| re.iter().map(move |&x| C::new(x, y)))
                .collect();
            let values: Vec<(C, C)> = if let Some(path) = &args.potential {
                let q = load_potential(path, &c)?;
                let cf = CharFnFromPotential::new(&c.bvp, &q);
                grid.iter().map(|&l| (l, cf.eval(l))).collect()
            } else {
                let path = args
                    .spectrum
                    .as_ref()
                    .expect("argument group requires a source");
                let s = io::read_spectrum(path)?;
                stage(format!("spectrum: {} eigenvalues", s.len()));
                let cf = CharFnFromSpectrum::new(&c.bvp, &s);
                grid.iter()
                    .map(|&l| match cf.eval(l) {
                        Ok(v) => Ok((l, v)),
                        Err(Error::NodeCollision { k, .. }) => Ok((l, cf.at_node(k)?)),
                        Err(e) => Err(e),
                    })
                    .collect::<Result<_>>()?
            };
            stage(format!("charfn: {} values", values.len()));
            io::write_charfn(&args.out, &values)?;
            stage(format!("wrote {}", args.out.display()));
        }
        Command::Oracle {
            config,
            potential,
            count,
            out,
        } => {
            let c = load(&config)?;
            let q = load_potential(&potential, &c)?;
            let op = fd_matrix(&q, &c.bvp, c.m)?;
            let targets = solve(&q, &c.bvp, count, &ForwardOptions::default())?
                .spectrum
                .lambdas();
            let lambdas = fd_eigenvalues_near(&op, &targets, 1e-13)?;
            stage(format!("oracle: {} eigenvalues", lambdas.len()));
            let cf = CharFnFromPotential::new(&c.bvp, &q);
            let solution = ForwardSolution {
                spectrum: Spectrum::from_lambdas(&lambdas),
                residuals: lambdas.iter().map(|&l| cf.eval(l).norm()).collect(),
                pre_snap: Default::default(),
                classification: omega_classify(&c.bvp, count),
            };
            io::write_spectrum(&out, &solution)?;
            stage(format!("wrote {}", out.display()));
        }
    }
    Ok(())
}
