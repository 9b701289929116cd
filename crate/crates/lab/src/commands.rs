//! Implementations of the `terrace` subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use terrace_core::evolve::{evolve_until, lipschitz_dt, Event, Stepper, StepperConfig};
use terrace_core::model::{make_heaviside, Grid, IntervalShape, Preset, Profile};
use terrace_core::stationary::{
    check_assumptions, enumerate_equilibria, principal_eigenvalue, linearization, AssumptionReport, Stability,
    StationaryConfig,
};
use terrace_core::steepness::{is_steeper, sign_change_count, IntersectionReport, SteepnessVerdict, DEFAULT_TIE_TOL};
use terrace_core::terrace::{convergence_diagnostics, extract_terrace, top_state, TerraceExtraction};

use crate::config::{read_json, CoefficientConfig, Kind, NonlinearityConfig, ProblemConfig};
use crate::output::{
    grid_x, write_columns, write_json, write_profile, write_terrace_bundle, write_wave_frames, LadderSummary,
    TerraceSummary, WaveSummary,
};
use crate::scenario::{run_scenario, scenario, SCENARIOS};
use crate::verify::{verify_all, VerifyConfig};

#[derive(Debug, Parser)]
#[command(name = "terrace", version, about = "Propagating terraces of spatially periodic reaction-diffusion equations")]
pub struct Cli {
    /// JSON configuration (a problem, or a verify configuration for `verify`).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify the reaction between consecutive equilibria.
    Classify(ProblemArgs),
    /// Ordered ladder of periodic equilibria with assumption certificates.
    Equilibria(ProblemArgs),
    /// Principal eigenpairs of the linearization at every rung.
    Eigen(ProblemArgs),
    /// Evolve a datum on the line with clamped ends.
    Evolve {
        #[command(flatten)]
        problem: ProblemArgs,
        /// heaviside:<x0>, constant:<c> or file:<path>
        #[arg(long, default_value = "heaviside:0")]
        datum: String,
        /// Number of snapshot files to write.
        #[arg(long, default_value_t = 10)]
        snapshots: usize,
    },
    /// Compare two profile files, or the snapshots of two run directories.
    Steepness {
        first: PathBuf,
        second: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Full terrace extraction from the Heaviside datum.
    Terrace(ProblemArgs),
    /// Pulsating wave frames of every front.
    Waves(ProblemArgs),
    /// Run a preset and check its expected outcome.
    Scenario { name: String },
    /// Run every verification suite.
    Verify,
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    /// Reaction: a JSON file, or kpp, zero, bistable:<theta>, ignition:<theta>.
    #[arg(long)]
    pub nl: Option<String>,
    /// Diffusion coefficient: a JSON file or a constant.
    #[arg(long)]
    pub a: Option<String>,
    #[arg(long)]
    pub dx: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long = "T")]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub domain_periods: Option<usize>,
}

fn parse_reaction(s: &str) -> Result<NonlinearityConfig> {
    let (name, arg) = s.split_once(':').map_or((s, None), |(n, a)| (n, Some(a)));
    let theta = arg.map(|a| a.parse::<f64>().with_context(|| format!("bad parameter in {s}"))).transpose()?;
    Ok(match name {
        "kpp" => NonlinearityConfig::new(Kind::Kpp),
        "zero" => NonlinearityConfig::new(Kind::Zero),
        "bistable" => NonlinearityConfig::bistable(theta.unwrap_or(0.25)),
        "ignition" => NonlinearityConfig { theta: Some(theta.unwrap_or(0.2)), ..NonlinearityConfig::new(Kind::Ignition) },
        _ => read_json(Path::new(s))?,
    })
}

impl ProblemArgs {
    fn resolve(&self, config: Option<&Path>) -> Result<ProblemConfig> {
        let mut p = match config {
            Some(path) => read_json(path)?,
            None => ProblemConfig::new(NonlinearityConfig::bistable(0.25)),
        };
        if let Some(nl) = &self.nl {
            p.nonlinearity = parse_reaction(nl)?;
        }
        if let Some(a) = &self.a {
            p.coefficient = match a.parse::<f64>() {
                Ok(v) => CoefficientConfig { value: Some(v), ..CoefficientConfig::default() },
                Err(_) => read_json(Path::new(a))?,
            };
        }
        let n = &mut p.numerics;
        n.dx = self.dx.unwrap_or(n.dx);
        n.dt = self.dt.or(n.dt);
        n.horizon = self.horizon.unwrap_or(n.horizon);
        n.domain_periods = self.domain_periods.unwrap_or(n.domain_periods);
        Ok(p)
    }
}

/// Runs the command and returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    let config = cli.config.as_deref();
    let out = cli.out.as_path();
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    match &cli.command {
        Command::Classify(p) => classify(&p.resolve(config)?, out),
        Command::Equilibria(p) => equilibria(&p.resolve(config)?, out),
        Command::Eigen(p) => eigen(&p.resolve(config)?, out),
        Command::Evolve { problem, datum, snapshots } => evolve(&problem.resolve(config)?, datum, *snapshots, out),
        Command::Steepness { first, second, tol } => steepness(first, second, *tol, out),
        Command::Terrace(p) => terrace(&p.resolve(config)?, out),
        Command::Waves(p) => waves(&p.resolve(config)?, out),
        Command::Scenario { name } => run_named(name, out),
        Command::Verify => {
            let cfg: VerifyConfig = match config {
                Some(path) => read_json(path)?,
                None => VerifyConfig::default(),
            };
            verify(&cfg, cli.seed, out)
        }
    }
}

struct Ladder {
    ladder: terrace_core::stationary::EquilibriaLadder,
    assumptions: AssumptionReport,
    cells: usize,
    period: f64,
}

fn ladder_of(p: &ProblemConfig) -> Result<Ladder> {
    let (nl, a) = p.build()?;
    let cells = p.cells()?;
    let scfg = StationaryConfig { cells, ..StationaryConfig::default() };
    let top = top_state(&nl, &a, p.top_guess, cells, &scfg)?;
    let ladder = enumerate_equilibria(&nl, &a, &top, 32, &scfg)?;
    let assumptions = check_assumptions(&nl, &a, &ladder, &scfg)?;
    Ok(Ladder { ladder, assumptions, cells, period: a.period() })
}

#[derive(Serialize)]
struct StepClass {
    upper_rung: usize,
    lower_rung: usize,
    upper_stability: Stability,
    lower_stability: Stability,
    class: &'static str,
}

#[derive(Serialize)]
struct PieceClass {
    lower: f64,
    upper: f64,
    shape: &'static str,
    homogeneous_speed: f64,
}

#[derive(Serialize)]
struct Classification {
    pieces: Vec<PieceClass>,
    /// Consecutive rungs.
    steps: Vec<StepClass>,
    /// Consecutive linearly stable rungs, plus the two ends.
    segments: Vec<StepClass>,
    crossing_equilibria: usize,
}

fn step_class(upper: Stability, lower: Stability) -> &'static str {
    use Stability::*;
    match (upper, lower) {
        (LinearlyStable, LinearlyStable) => "bistable",
        (LinearlyStable, LinearlyUnstable) => "monostable",
        (LinearlyUnstable, LinearlyStable) => "monostable (reversed)",
        (LinearlyUnstable, LinearlyUnstable) => "unstable pair",
        _ => "degenerate",
    }
}

fn classify(p: &ProblemConfig, out: &Path) -> Result<i32> {
    let pieces = match p.nonlinearity.spec()?.preset {
        Preset::Stacked(v) => v
            .iter()
            .map(|s| PieceClass {
                lower: s.lower,
                upper: s.upper,
                shape: match s.shape {
                    IntervalShape::Bistable { .. } => "bistable",
                    IntervalShape::Monostable => "monostable",
                },
                homogeneous_speed: s.homogeneous_speed(),
            })
            .collect(),
        _ => Vec::new(),
    };
    let l = ladder_of(p)?;
    let steps = l
        .ladder
        .rungs
        .windows(2)
        .enumerate()
        .map(|(k, w)| StepClass {
            upper_rung: k,
            lower_rung: k + 1,
            upper_stability: w[0].stability,
            lower_stability: w[1].stability,
            class: step_class(w[0].stability, w[1].stability),
        })
        .collect::<Vec<_>>();
    let rungs = &l.ladder.rungs;
    let last = rungs.len() - 1;
    let anchors: Vec<usize> =
        (0..=last).filter(|&k| k == 0 || k == last || rungs[k].stability == Stability::LinearlyStable).collect();
    let segments: Vec<StepClass> = anchors
        .windows(2)
        .map(|w| StepClass {
            upper_rung: w[0],
            lower_rung: w[1],
            upper_stability: rungs[w[0]].stability,
            lower_stability: rungs[w[1]].stability,
            class: step_class(rungs[w[0]].stability, rungs[w[1]].stability),
        })
        .collect();
    for s in &segments {
        println!("rungs {} -> {}: {}", s.upper_rung, s.lower_rung, s.class);
    }
    write_json(
        &out.join("classify.json"),
        &Classification { pieces, steps, segments, crossing_equilibria: l.ladder.crossing.len() },
    )?;
    Ok(0)
}

#[derive(Serialize)]
struct EquilibriaReport {
    ladder: LadderSummary,
    assumptions: AssumptionReport,
}

fn periodic_x(cells: usize, period: f64) -> Vec<f64> {
    (0..cells).map(|i| i as f64 * period / cells as f64).collect()
}

fn write_rungs(path: &Path, x: &[f64], rungs: &[&[f64]], prefix: &str) -> Result<()> {
    let names: Vec<String> = (0..rungs.len()).map(|k| format!("{prefix}{k}")).collect();
    let mut header = vec!["x"];
    header.extend(names.iter().map(String::as_str));
    let mut cols: Vec<&[f64]> = vec![x];
    cols.extend_from_slice(rungs);
    write_columns(path, &header, &cols)
}

fn equilibria(p: &ProblemConfig, out: &Path) -> Result<i32> {
    let l = ladder_of(p)?;
    for (k, r) in l.ladder.rungs.iter().enumerate() {
        println!("q{k}: mean {:.6}, mu {:.4e}, {:?}", r.mean(), r.mu, r.stability);
    }
    let rungs: Vec<&[f64]> = l.ladder.rungs.iter().map(|r| r.profile.as_slice()).collect();
    write_rungs(&out.join("equilibria.csv"), &periodic_x(l.cells, l.period), &rungs, "q")?;
    write_json(&out.join("equilibria.json"), &EquilibriaReport { ladder: LadderSummary::from(&l.ladder), assumptions: l.assumptions })?;
    Ok(0)
}

#[derive(Serialize)]
struct EigenEntry {
    rung: usize,
    mu: f64,
    stability: Stability,
    residual: f64,
    iterations: usize,
}

fn eigen(p: &ProblemConfig, out: &Path) -> Result<i32> {
    let (nl, a) = p.build()?;
    let l = ladder_of(p)?;
    let scfg = StationaryConfig::default();
    let mut entries = Vec::new();
    let mut phis = Vec::new();
    for (k, r) in l.ladder.rungs.iter().enumerate() {
        let e = principal_eigenvalue(&a, &linearization(&nl, &r.profile), scfg.eigen_tol, scfg.eigen_max_iters)?;
        println!("q{k}: mu = {:.6e}", e.mu);
        entries.push(EigenEntry {
            rung: k,
            mu: e.mu,
            stability: Stability::from_mu(e.mu, scfg.degenerate_band),
            residual: e.residual,
            iterations: e.iterations,
        });
        phis.push(e.phi);
    }
    let cols: Vec<&[f64]> = phis.iter().map(Vec::as_slice).collect();
    write_rungs(&out.join("eigen.csv"), &periodic_x(l.cells, l.period), &cols, "phi")?;
    write_json(&out.join("eigen.json"), &entries)?;
    Ok(0)
}

#[derive(Serialize)]
struct EvolveReport {
    dt: f64,
    horizon: f64,
    final_time: f64,
    truncated: bool,
    events: Vec<Event>,
    snapshot_files: Vec<String>,
}

fn evolve(p: &ProblemConfig, datum: &str, count: usize, out: &Path) -> Result<i32> {
    let (nl, a) = p.build()?;
    let cells = p.cells()?;
    let scfg = StationaryConfig { cells, ..StationaryConfig::default() };
    let top = top_state(&nl, &a, p.top_guess, cells, &scfg)?;
    let n = &p.numerics;
    let upper = top.max();
    let dt = n.dt.unwrap_or_else(|| lipschitz_dt(&nl, (-0.1, upper + 0.1), n.dt_fraction));
    let grid = Grid::line(a.period(), cells, n.domain_periods, n.domain_periods)?;
    let mut sc = StepperConfig::clamped(dt, top.profile.clone());
    sc.theta = n.theta;
    let stepper = Stepper::new(grid, &nl, &a, sc)?;
    let u0 = match datum.split_once(':') {
        Some(("heaviside", x0)) => make_heaviside(&grid, &top.profile, x0.parse()?)?,
        Some(("constant", c)) => Profile::constant(grid, c.parse()?),
        Some(("file", path)) => {
            let (_, u) = crate::output::read_profile(Path::new(path))?;
            if u.len() != grid.len() {
                bail!("datum has {} nodes, the grid has {}", u.len(), grid.len());
            }
            Profile::new(grid, u, 0.0)?
        }
        _ => bail!("datum must be heaviside:<x0>, constant:<c> or file:<path>"),
    };
    let run = evolve_until(&u0, n.horizon, &stepper, &mut [])?;
    let x = grid_x(&grid);
    let m = run.snapshots.len();
    let picks: Vec<usize> = if m <= count || count < 2 {
        (0..m).collect()
    } else {
        let mut v: Vec<usize> = (0..count).map(|k| k * (m - 1) / (count - 1)).collect();
        v.dedup();
        v
    };
    let mut files = Vec::new();
    for (k, i) in picks.into_iter().enumerate() {
        let s = &run.snapshots[i];
        let name = format!("snapshot_{k:03}_t{:.3}.csv", s.time);
        write_profile(&out.join(&name), &x, &s.values)?;
        files.push(name);
    }
    println!("evolved to t = {:.3} with dt = {:.4e}{}", run.final_time(), dt, if run.truncated { " (guard fired)" } else { "" });
    write_json(
        &out.join("events.json"),
        &EvolveReport { dt, horizon: n.horizon, final_time: run.final_time(), truncated: run.truncated, events: run.events.clone(), snapshot_files: files },
    )?;
    Ok(0)
}

/// Grid whose node positions are `x`, assuming unit period.
fn grid_for(x: &[f64]) -> Result<Grid> {
    if x.len() < 2 {
        bail!("profile too short");
    }
    let dx = x[1] - x[0];
    let cells = (1.0 / dx).round() as usize;
    let left = (-x[0]).round() as usize;
    let right = x[x.len() - 1].round() as usize;
    let grid = Grid::line(1.0, cells, left, right)?;
    let matches = grid.len() == x.len() && x.iter().enumerate().all(|(i, v)| (grid.x(i) - v).abs() <= 1e-6 * dx.max(1.0));
    if !matches {
        bail!("profile nodes do not form a unit-period grid");
    }
    Ok(grid)
}

fn family(path: &Path) -> Result<Vec<Profile>> {
    let files: Vec<PathBuf> = if path.is_dir() {
        let mut v: Vec<PathBuf> = fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .collect();
        v.sort();
        v
    } else {
        vec![path.to_path_buf()]
    };
    if files.is_empty() {
        bail!("no profiles in {}", path.display());
    }
    files
        .iter()
        .map(|f| {
            let (x, u) = crate::output::read_profile(f)?;
            Ok(Profile::new(grid_for(&x)?, u, 0.0)?)
        })
        .collect()
}

#[derive(Serialize)]
struct SteepnessReport {
    first_profiles: usize,
    second_profiles: usize,
    /// Sign changes between the last profiles of the two families.
    intersections: IntersectionReport,
    first_steeper: SteepnessVerdict,
    second_steeper: SteepnessVerdict,
}

fn steepness(first: &Path, second: &Path, tol: f64, out: &Path) -> Result<i32> {
    let u = family(first)?;
    let v = family(second)?;
    let intersections = sign_change_count(u.last().unwrap(), v.last().unwrap(), DEFAULT_TIE_TOL)?;
    let report = SteepnessReport {
        first_profiles: u.len(),
        second_profiles: v.len(),
        intersections,
        first_steeper: is_steeper(&u, &v, tol)?,
        second_steeper: is_steeper(&v, &u, tol)?,
    };
    println!("first steeper: {}, second steeper: {}", report.first_steeper.steeper, report.second_steeper.steeper);
    write_json(&out.join("steepness.json"), &report)?;
    Ok(0)
}

fn extraction(p: &ProblemConfig) -> Result<TerraceExtraction> {
    let (nl, a) = p.build()?;
    let cells = p.cells()?;
    Ok(extract_terrace(&nl, &a, &vec![p.top_guess; cells], &p.numerics.terrace_config())?)
}

fn print_terrace(t: &TerraceSummary) {
    for (k, pl) in t.platforms.iter().enumerate() {
        println!("platform {k}: rung {}, mean level {:.6}", pl.rung, pl.state.mean);
    }
    for (k, f) in t.fronts.iter().enumerate() {
        match &f.speed {
            Some(s) => println!("front {}: c = {:.6} +- {:.2e}", k + 1, s.c, s.ci),
            None => println!("front {}: zero speed", k + 1),
        }
    }
    println!("verified: {}", t.verified);
}

fn terrace(p: &ProblemConfig, out: &Path) -> Result<i32> {
    let ex = extraction(p)?;
    let drift = convergence_diagnostics(&ex.run, &ex.terrace, 2.0 * ex.terrace.grid.dx());
    write_terrace_bundle(out, &ex.terrace, &ex.ladder, &ex.run, &drift)?;
    print_terrace(&TerraceSummary::new(&ex.terrace, &ex.ladder));
    Ok(0)
}

fn waves(p: &ProblemConfig, out: &Path) -> Result<i32> {
    let ex = extraction(p)?;
    let mut all = Vec::new();
    for (k, f) in ex.terrace.fronts.iter().enumerate() {
        if let Some(w) = &f.wave {
            write_wave_frames(&out.join(format!("wave_{}", k + 1)), w)?;
            println!("front {}: c = {:.6}, accepted {}", k + 1, w.speed, w.accepted);
            all.push(WaveSummary::from(w));
        }
    }
    write_json(&out.join("waves.json"), &all)?;
    Ok(0)
}

fn run_named(name: &str, out: &Path) -> Result<i32> {
    let Some(s) = scenario(name) else {
        bail!("unknown scenario {name}; choose one of {}", SCENARIOS.join(", "));
    };
    let run = run_scenario(&s, None)?;
    if let (Some(ex), Some(drift)) = (&run.extraction, &run.drift) {
        write_terrace_bundle(out, &ex.terrace, &ex.ladder, &ex.run, drift)?;
    }
    write_json(&out.join("scenario.json"), &run.report)?;
    if let Some(t) = &run.report.terrace {
        print_terrace(t);
    }
    if let Some(c) = &run.report.continuum {
        println!("{c}");
    }
    for m in &run.report.mismatches {
        eprintln!("mismatch: {m}");
    }
    println!("{}: {}", name, if run.report.passed { "pass" } else { "FAIL" });
    Ok(if run.report.passed { 0 } else { 1 })
}

fn verify(cfg: &VerifyConfig, seed: u64, out: &Path) -> Result<i32> {
    let report = verify_all(cfg, seed);
    for s in &report.suites {
        println!("{:<16} {}", s.name, if s.passed { "pass" } else { "FAIL" });
        for c in s.checks.iter().filter(|c| !c.passed) {
            eprintln!("  {}: {} {}", s.name, c.name, c.detail);
        }
    }
    write_json(&out.join("report.json"), &report)?;
    Ok(if report.passed { 0 } else { 1 })
}
