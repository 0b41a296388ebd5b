//! End-to-end runs on a system file, producing one JSON report per command.

mod plot;

use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;

pub use plot::{emit_plot_data, PLOT_QUANTITIES};

use crate::error::{Error, Result};
use crate::flow::{check_lyapunov, estimate_growth, find_rest_points_with, GrowthEstimate, LyapunovReport, RestPoint};
use crate::instanton::SearchOptions;
use crate::novikov::{
    abscissa_estimate, betti_table, build_orbit_counting, check_delta_squared, compute_complex, novikov_inequalities, AbscissaEstimate,
    BettiTable, D2Report, DirichletSeries, InequalityReport, InstantonCounting, NovikovComplex, OrbitCounting,
};
use crate::orbit::{find_closed_orbits, OrbitOptions, OrbitSearch};
use crate::system::FieldSystem;
use crate::torus::HomotopyClass;
use crate::witten::{
    build_dec, chain_residual, integration_map, r_invariant, spectral_betti, spectral_split, torsion_report, witten_operator, ChainResidual,
    IntegrationMap, SpectralSplit, TorsionReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    RestPoints,
    Lyapunov,
    Growth,
    Instantons,
    Orbits,
    Counting,
    Series,
    Complex,
    Betti,
    Inequalities,
    WittenSpectrum,
    WittenIntmap,
    Torsion,
    Rinv,
    ReportAll,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub system: PathBuf,
    pub cutoff: f64,
    pub grid: usize,
    pub t: Vec<f64>,
    pub seed_grid: usize,
    pub lyapunov_grid: usize,
    pub growth_rays: usize,
    pub growth_radius: f64,
    pub orbit_time: f64,
    pub quadrature: usize,
    /// Class ξ for the Betti numbers; defaults to the class of ω.
    pub xi: Option<Vec<f64>>,
    /// Point z at which the orbit series is evaluated.
    pub eval: Option<f64>,
    /// Restrict growth estimates to one rest point.
    pub rest_point: Option<usize>,
    /// Restrict listed instantons to these endpoints.
    pub from: Option<usize>,
    pub to: Option<usize>,
    /// Treat a nonzero δ² coefficient as a failure.
    pub check_d2: bool,
    /// Include wall-clock timing (makes the report non-reproducible).
    pub timing: bool,
    #[serde(skip)]
    pub verbosity: u8,
}

impl RunConfig {
    pub fn new(system: impl Into<PathBuf>) -> RunConfig {
        RunConfig {
            system: system.into(),
            cutoff: 10.0,
            grid: 48,
            t: vec![10.0],
            seed_grid: crate::flow::DEFAULT_SEED_GRID,
            lyapunov_grid: crate::flow::DEFAULT_LYAPUNOV_GRID,
            growth_rays: 48,
            growth_radius: 1.0,
            orbit_time: 200.0,
            quadrature: 512,
            xi: None,
            eval: None,
            rest_point: None,
            from: None,
            to: None,
            check_d2: false,
            timing: false,
            verbosity: 0,
        }
    }

    /// Range checks on every numeric parameter.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.cutoff > 0.0 && self.cutoff.is_finite()) {
            return bad(format!("cutoff {} must be positive and finite", self.cutoff));
        }
        if !(8..=256).contains(&self.grid) {
            return bad(format!("grid {} outside [8, 256]", self.grid));
        }
        if self.t.is_empty() || self.t.iter().any(|t| !(*t >= 0.0 && *t <= 100.0)) {
            return bad(format!("t values {:?} must lie in [0, 100]", self.t));
        }
        if !(4..=256).contains(&self.seed_grid) || !(8..=1024).contains(&self.lyapunov_grid) {
            return bad("seed grid must lie in [4, 256] and Lyapunov grid in [8, 1024]".into());
        }
        if !(4..=4096).contains(&self.growth_rays) || !(self.growth_radius > 0.0 && self.growth_radius <= 100.0) {
            return bad("growth rays must lie in [4, 4096] and radius in (0, 100]".into());
        }
        if !(self.orbit_time > 0.0 && self.orbit_time <= 1e4) {
            return bad(format!("orbit time {} outside (0, 1e4]", self.orbit_time));
        }
        if !(16..=8192).contains(&self.quadrature) {
            return bad(format!("quadrature {} outside [16, 8192]", self.quadrature));
        }
        if let Some(xi) = &self.xi {
            if xi.iter().any(|x| !x.is_finite()) {
                return bad("xi must be finite".into());
            }
        }
        if self.eval.is_some_and(|z| !z.is_finite()) {
            return bad("eval point must be finite".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InstantonSummary {
    pub from: usize,
    pub to: usize,
    pub winding: HomotopyClass,
    pub omega_value: f64,
    pub sign: i32,
    pub arrival: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CountingSection {
    pub instantons: Vec<InstantonCounting>,
    pub orbits: OrbitCounting,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesSection {
    pub orbit_series: DirichletSeries,
    pub abscissa: Option<AbscissaEstimate>,
    /// (z, Z(z)) at the requested point.
    pub eval: Option<[f64; 2]>,
    /// (t, Z(t)) at every configured t.
    pub samples: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComplexSection {
    pub complex: NovikovComplex,
    pub complete: bool,
    pub delta_squared: D2Report,
}

#[derive(Debug, Clone, Serialize)]
pub struct IntmapSection {
    pub map: IntegrationMap,
    pub chain: ChainResidual,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Results {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rest_points: Option<Vec<RestPoint>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lyapunov: Option<LyapunovReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth: Option<Vec<GrowthEstimate>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instantons: Option<Vec<InstantonSummary>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orbits: Option<OrbitSearch>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counting: Option<CountingSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series: Option<SeriesSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub complex: Option<ComplexSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub betti: Option<BettiTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inequalities: Option<InequalityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectra: Option<Vec<SpectralSplit>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intmaps: Option<Vec<IntmapSection>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub torsion: Option<Vec<TorsionReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_invariant: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: Command,
    pub config: RunConfig,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub warnings: Vec<String>,
    pub results: Results,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seconds: Option<f64>,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Exit codes: 0 success, 2 invalid configuration or input, 3 computational failure.
#[derive(Debug)]
pub struct RunOutcome {
    /// Absent when the configuration was rejected before any computation.
    pub report: Option<Report>,
    pub exit_code: i32,
    pub error: Option<Error>,
}

/// Errors caused by the configuration or the system file rather than the computation.
pub fn is_config_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Syntax { .. }
            | Error::UnknownIdentifier { .. }
            | Error::NonIntegerExponent { .. }
            | Error::NotPeriodic { .. }
            | Error::SystemFile(_)
            | Error::InvalidParameter(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::UnknownQuantity { .. }
    )
}

pub fn run(command: Command, config: &RunConfig) -> RunOutcome {
    let reject = |e: Error| RunOutcome { report: None, exit_code: 2, error: Some(e) };
    if let Err(e) = config.validate() {
        return reject(e);
    }
    let sys = match FieldSystem::from_file(&config.system) {
        Ok(s) => s,
        Err(e) => return reject(e),
    };
    let start = Instant::now();
    let mut results = Results::default();
    let mut warnings = Vec::new();
    let outcome = execute(command, config, &sys, &mut results, &mut warnings);
    let mut report = Report {
        tool: "novikov",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config: config.clone(),
        status: "ok",
        error: None,
        warnings,
        results,
        seconds: config.timing.then(|| start.elapsed().as_secs_f64()),
    };
    match outcome {
        Ok(()) => RunOutcome { report: Some(report), exit_code: 0, error: None },
        Err(e) if is_config_error(&e) => reject(e),
        Err(e) => {
            report.status = "failed";
            report.error = Some(e.to_string());
            RunOutcome { report: Some(report), exit_code: 3, error: Some(e) }
        }
    }
}

fn log(cfg: &RunConfig, msg: &str) {
    if cfg.verbosity > 0 {
        eprintln!("[novikov] {msg}");
    }
}

fn execute(command: Command, cfg: &RunConfig, sys: &FieldSystem, res: &mut Results, warnings: &mut Vec<String>) -> Result<()> {
    use Command::*;
    let need = |cs: &[Command]| command == ReportAll || cs.contains(&command);
    let planar = sys.dim() == 2;
    if matches!(command, WittenSpectrum | WittenIntmap | Torsion | Rinv) && !planar {
        return Err(Error::InvalidParameter(format!("{command:?} needs a system on T², found dimension {}", sys.dim())));
    }

    let mut rest_points: Vec<RestPoint> = Vec::new();
    if need(&[RestPoints, Lyapunov, Growth, Instantons, Counting, Complex, Betti, Inequalities, WittenSpectrum, WittenIntmap, Torsion]) {
        log(cfg, "rest points");
        rest_points = find_rest_points_with(sys, cfg.seed_grid)?;
        res.rest_points = Some(rest_points.clone());
    }
    let n_k: Vec<usize> = (0..=sys.dim()).map(|k| rest_points.iter().filter(|r| r.morse_index == k).count()).collect();

    if need(&[Lyapunov]) {
        log(cfg, "Lyapunov check");
        res.lyapunov = Some(check_lyapunov(sys, &rest_points, cfg.lyapunov_grid)?);
    }
    if need(&[Growth]) {
        log(cfg, "growth");
        let mut out = Vec::new();
        if let Some(i) = cfg.rest_point.filter(|&i| i >= rest_points.len()) {
            return Err(Error::InvalidParameter(format!("rest point {i} out of range, found {}", rest_points.len())));
        }
        let chosen = rest_points.iter().enumerate().filter(|(i, r)| r.morse_index > 0 && cfg.rest_point.is_none_or(|j| j == *i));
        for (_, r) in chosen {
            let g = estimate_growth(sys, r, &rest_points, cfg.growth_radius, cfg.growth_rays, 50.0)?;
            if g.partial {
                warnings.push(format!("growth at {:?} is partial: some rays ran out of time", r.position));
            }
            out.push(g);
        }
        res.growth = Some(out);
    }

    let mut complex = None;
    if need(&[Instantons, Counting, Complex, WittenIntmap, Torsion]) {
        log(cfg, "instantons");
        let run = compute_complex(sys, &rest_points, cfg.cutoff, &SearchOptions::default())?;
        if !run.complete {
            warnings.push("instanton search incomplete: some rays did not settle within the time budget".into());
        }
        if need(&[Instantons]) {
            res.instantons = Some(
                run.instantons
                    .iter()
                    .filter(|i| cfg.from.is_none_or(|f| f == i.from) && cfg.to.is_none_or(|t| t == i.to))
                    .map(|i| InstantonSummary {
                        from: i.from,
                        to: i.to,
                        winding: i.winding.clone(),
                        omega_value: i.omega_value,
                        sign: i.sign,
                        arrival: i.arrival,
                        samples: i.path.times.len(),
                    })
                    .collect(),
            );
        }
        if need(&[Complex]) {
            let d2 = check_delta_squared(&run.complex);
            if cfg.check_d2 && !d2.passed {
                let first = d2.violations.first().map(|v| format!("{} -> {}, coefficient {}", v.from, v.to, v.coefficient)).unwrap_or_default();
                res.complex = Some(ComplexSection { complex: run.complex.clone(), complete: run.complete, delta_squared: d2 });
                return Err(Error::DeltaSquared(first));
            }
            res.complex = Some(ComplexSection { complex: run.complex.clone(), complete: run.complete, delta_squared: d2 });
        }
        complex = Some(run.complex);
    }

    let mut orbit_counting = None;
    if need(&[Orbits, Counting, Series, Torsion]) {
        log(cfg, "closed orbits");
        let search = find_closed_orbits(sys, &OrbitOptions { cutoff: cfg.cutoff, t_max: cfg.orbit_time, ..OrbitOptions::default() })?;
        if !search.nct_failures.is_empty() {
            warnings.push(format!("{} degenerate closed orbit(s) excluded from counting", search.nct_failures.len()));
        }
        warnings.extend(search.warnings.iter().cloned());
        let exhaustive = search.stopped_by == crate::orbit::StoppedBy::Cutoff && search.nct_failures.is_empty();
        orbit_counting = Some(build_orbit_counting(&search.orbits, cfg.cutoff, exhaustive));
        if need(&[Orbits]) {
            res.orbits = Some(search);
        }
    }
    if need(&[Counting]) {
        res.counting = Some(CountingSection {
            instantons: complex.as_ref().map(|c| c.counts.clone()).unwrap_or_default(),
            orbits: orbit_counting.clone().unwrap(),
        });
    }
    if need(&[Series]) {
        let series = orbit_counting.as_ref().unwrap().laplace();
        let abscissa = match abscissa_estimate(&series) {
            Ok(a) => Some(a),
            Err(e) => {
                warnings.push(format!("abscissa not estimated: {e}"));
                None
            }
        };
        res.series = Some(SeriesSection {
            eval: cfg.eval.map(|z| [z, series.eval_real(z)]),
            samples: cfg.t.iter().map(|&t| [t, series.eval_real(t)]).collect(),
            orbit_series: series,
            abscissa,
        });
    }

    if need(&[Betti, Inequalities]) {
        let xi = cfg.xi.clone().unwrap_or_else(|| sys.omega.cohomology_class().to_vec());
        if xi.len() != sys.dim() {
            return Err(Error::InvalidParameter(format!("xi has {} entries, system dimension is {}", xi.len(), sys.dim())));
        }
        let t = cfg.t[0].max(1.0);
        let spectral = if planar { Some(spectral_betti(&xi, t)?) } else { None };
        let table = betti_table(&xi, t, spectral)?;
        if need(&[Inequalities]) {
            let ineq = novikov_inequalities(&n_k, &table.betti);
            if !ineq.all_hold {
                warnings.push("Novikov inequalities violated".into());
            }
            res.inequalities = Some(ineq);
        }
        if need(&[Betti]) {
            res.betti = Some(table);
        }
    }

    if planar && need(&[WittenSpectrum, WittenIntmap, Torsion]) {
        let dec = build_dec(cfg.grid)?;
        let (mut spectra, mut maps, mut torsions) = (Vec::new(), Vec::new(), Vec::new());
        let r = if rest_points.is_empty() { r_invariant(sys, &sys.omega, cfg.quadrature).ok() } else { None };
        for &t in &cfg.t {
            log(cfg, &format!("Witten Laplacians at t = {t}"));
            let wop = witten_operator(&dec, &sys.omega, t)?;
            let split = spectral_split(&wop, &n_k);
            let split = match split {
                Ok(s) => s,
                Err(e) => {
                    res.spectra = Some(spectra);
                    return Err(e);
                }
            };
            if !split.matches_targets {
                warnings.push(format!("t = {t}: small counts {:?} differ from rest-point counts {:?}", split.small_counts, n_k));
            }
            if need(&[WittenIntmap, Torsion]) && split.matches_targets {
                let cx = complex.as_ref().unwrap();
                let map = integration_map(sys, &dec, &split, &rest_points)?;
                let chain = chain_residual(&map, &wop, &split, cx);
                if need(&[Torsion]) {
                    torsions.push(torsion_report(&wop, &split, &map, cx, r, orbit_counting.as_ref())?);
                }
                maps.push(IntmapSection { map, chain });
            }
            spectra.push(split);
        }
        res.spectra = Some(spectra);
        if need(&[WittenIntmap]) {
            res.intmaps = Some(maps);
        }
        if need(&[Torsion]) {
            res.torsion = Some(torsions);
        }
    }

    if need(&[Rinv]) {
        if !planar {
            warnings.push("R-invariant skipped: system is not on T²".into());
        } else if command == ReportAll && !rest_points.is_empty() {
            warnings.push("R-invariant skipped: the field has rest points".into());
        } else {
            log(cfg, "R-invariant");
            res.r_invariant = Some(r_invariant(sys, &sys.omega, cfg.quadrature)?);
        }
    }
    Ok(())
}
