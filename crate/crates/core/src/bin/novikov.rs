use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use novikov::cli::{emit_plot_data, run, Command, RunConfig};

#[derive(Parser)]
#[command(name = "novikov", version, about = "Novikov theory computations for vector fields on flat tori")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// System file (field, harmonic part, potential)
    system: PathBuf,
    /// Cutoff on |ω| for instantons and closed orbits
    #[arg(long, default_value_t = 10.0)]
    cutoff: f64,
    /// Grid size N for the Witten Laplacians
    #[arg(long, default_value_t = 48)]
    grid: usize,
    /// Deformation parameters, comma separated
    #[arg(long, value_delimiter = ',', default_value = "10")]
    t: Vec<f64>,
    /// Seed grid for rest-point search
    #[arg(long, default_value_t = 32)]
    seed_grid: usize,
    /// Lyapunov check grid
    #[arg(long, default_value_t = 128)]
    lyapunov_grid: usize,
    /// Rays for growth estimates
    #[arg(long, default_value_t = 48)]
    growth_rays: usize,
    /// Largest intrinsic radius for growth estimates
    #[arg(long, default_value_t = 1.0)]
    rmax: f64,
    /// Maximal orbit period searched
    #[arg(long, default_value_t = 200.0)]
    tmax: f64,
    /// Quadrature points per axis for the R-invariant
    #[arg(long, default_value_t = 512)]
    quad: usize,
    /// Class ξ for Betti numbers, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    xi: Option<Vec<f64>>,
    /// Evaluate the orbit series at this point
    #[arg(long, allow_hyphen_values = true)]
    eval: Option<f64>,
    /// Record wall-clock time in the report
    #[arg(long)]
    timing: bool,
    /// Progress on stderr
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Write the report here instead of stdout
    #[arg(long = "json", short = 'o', value_name = "OUT")]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Rest points with Morse indices and multipliers
    RestPoints(Common),
    /// Check that ω(X) < 0 away from rest points
    Lyapunov(Common),
    /// Volume growth of unstable manifolds
    Growth {
        #[command(flatten)]
        common: Common,
        /// Only this rest point
        #[arg(long)]
        rest_point: Option<usize>,
    },
    /// Instantons between rest points of adjacent index
    Instantons {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        from: Option<usize>,
        #[arg(long)]
        to: Option<usize>,
    },
    /// Closed orbits below the cutoff
    Orbits(Common),
    /// Instanton and closed-orbit counting functions
    Counting(Common),
    /// Orbit Dirichlet series, abscissa and evaluation
    Series(Common),
    /// Novikov complex and the δ² = 0 check
    Complex {
        #[command(flatten)]
        common: Common,
        /// Fail (exit 3) when δ² has a nonzero coefficient
        #[arg(long)]
        check_d2: bool,
    },
    /// Twisted Betti numbers, closed form and spectral
    Betti(Common),
    /// Novikov inequalities for the rest-point counts
    Inequalities(Common),
    /// Witten Laplacian spectra and the integration map
    #[command(subcommand)]
    Witten(WittenCmd),
    /// Torsions, volume term and their identities
    Torsion(Common),
    /// R-invariant of a rest-point-free field
    Rinv(Common),
    /// Full chain, one consolidated report
    ReportAll(Common),
    /// Extract two-column plot data from a JSON report
    Plot {
        report: PathBuf,
        #[arg(long)]
        quantity: String,
        /// x range as a:b
        #[arg(long)]
        range: Option<String>,
    },
}

#[derive(Subcommand)]
enum WittenCmd {
    /// Small/large split of the Witten Laplacian spectra
    Spectrum(Common),
    /// Integration map and its chain-map residual
    Intmap(Common),
}

fn config(c: &Common) -> RunConfig {
    let mut cfg = RunConfig::new(&c.system);
    cfg.cutoff = c.cutoff;
    cfg.grid = c.grid;
    cfg.t = c.t.clone();
    cfg.seed_grid = c.seed_grid;
    cfg.lyapunov_grid = c.lyapunov_grid;
    cfg.growth_rays = c.growth_rays;
    cfg.growth_radius = c.rmax;
    cfg.orbit_time = c.tmax;
    cfg.quadrature = c.quad;
    cfg.xi = c.xi.clone();
    cfg.eval = c.eval;
    cfg.timing = c.timing;
    cfg.verbosity = c.verbose;
    cfg
}

fn plot(report: &PathBuf, quantity: &str, range: Option<&str>) -> Result<String, String> {
    let range = match range {
        None => None,
        Some(r) => {
            let (a, b) = r.split_once(':').ok_or("range must be a:b")?;
            Some((a.trim().parse::<f64>().map_err(|e| e.to_string())?, b.trim().parse::<f64>().map_err(|e| e.to_string())?))
        }
    };
    let text = std::fs::read_to_string(report).map_err(|e| format!("{}: {e}", report.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    emit_plot_data(&value, quantity, range).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    if let Some(n) = std::env::var("NOVIKOV_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global().ok();
    }
    let (command, common, cfg_extra): (Command, Common, Box<dyn Fn(&mut RunConfig)>) = match Cli::parse().command {
        Cmd::Plot { report, quantity, range } => {
            return match plot(&report, &quantity, range.as_deref()) {
                Ok(s) => {
                    print!("{s}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            };
        }
        Cmd::RestPoints(c) => (Command::RestPoints, c, Box::new(|_| {})),
        Cmd::Lyapunov(c) => (Command::Lyapunov, c, Box::new(|_| {})),
        Cmd::Growth { common, rest_point } => (Command::Growth, common, Box::new(move |c| c.rest_point = rest_point)),
        Cmd::Instantons { common, from, to } => (
            Command::Instantons,
            common,
            Box::new(move |c| {
                c.from = from;
                c.to = to;
            }),
        ),
        Cmd::Orbits(c) => (Command::Orbits, c, Box::new(|_| {})),
        Cmd::Counting(c) => (Command::Counting, c, Box::new(|_| {})),
        Cmd::Series(c) => (Command::Series, c, Box::new(|_| {})),
        Cmd::Complex { common, check_d2 } => (Command::Complex, common, Box::new(move |c| c.check_d2 = check_d2)),
        Cmd::Betti(c) => (Command::Betti, c, Box::new(|_| {})),
        Cmd::Inequalities(c) => (Command::Inequalities, c, Box::new(|_| {})),
        Cmd::Witten(WittenCmd::Spectrum(c)) => (Command::WittenSpectrum, c, Box::new(|_| {})),
        Cmd::Witten(WittenCmd::Intmap(c)) => (Command::WittenIntmap, c, Box::new(|_| {})),
        Cmd::Torsion(c) => (Command::Torsion, c, Box::new(|_| {})),
        Cmd::Rinv(c) => (Command::Rinv, c, Box::new(|_| {})),
        Cmd::ReportAll(c) => (Command::ReportAll, c, Box::new(|_| {})),
    };
    let mut cfg = config(&common);
    cfg_extra(&mut cfg);
    let outcome = run(command, &cfg);
    if let Some(e) = &outcome.error {
        eprintln!("error: {e}");
    }
    if let Some(report) = &outcome.report {
        let json = match report.to_json() {
            Ok(j) => j,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(3);
            }
        };
        let written = match &common.output {
            Some(p) => std::fs::write(p, json + "\n").map_err(|e| format!("{}: {e}", p.display())),
            None => {
                println!("{json}");
                Ok(())
            }
        };
        if let Err(e) = written {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    ExitCode::from(outcome.exit_code as u8)
}
