//! The terrace pipeline: evolve the Heaviside datum `H(-x) p(x)`, record
//! first-hitting times of probe levels at the sites `n L`, turn them into
//! speeds, find the platforms left behind, extract one pulsating wave per
//! gap and verify the whole stack.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::Serialize;

use crate::evolve::{evolve_until, lipschitz_dt, EvolveError, EventKind, Run, Side, Stepper, StepperConfig};
use crate::model::{make_heaviside, Grid, ModelError, Nonlinearity, PeriodicCoefficient, Profile};
use crate::stationary::{
    check_assumptions, enumerate_equilibria, solve_stationary, AssumptionReport, EquilibriaLadder,
    StationaryConfig, StationaryError, StationarySolution,
};
use crate::stats::{linear_fit, mean};
use crate::waves::{
    extract_wave, interface_position, wave_steepness, zero_speed_probe, PulsatingWave, WaveConfig, WaveError,
    ZeroSpeedLabel,
};

#[derive(Debug, Clone, PartialEq)]
pub enum TerraceError {
    Model(ModelError),
    Evolve(EvolveError),
    Stationary(StationaryError),
    Wave(WaveError),
    /// Fewer than the minimal number of sites were reached.
    SeriesTooShort { reached: usize, needed: usize },
    UnresolvedSpeed { alpha: f64, slope: f64, cross: f64, ci: f64 },
    UnclassifiedGaps { alpha: f64, spread: f64 },
    UnidentifiedPlatform { x_lo: f64, x_hi: f64, mean: f64 },
    /// The guard still fired after enlarging the domain.
    DomainTooSmall { periods_left: usize, periods_right: usize },
    TopNotPositive,
}

impl fmt::Display for TerraceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TerraceError::Model(e) => write!(f, "{e}"),
            TerraceError::Evolve(e) => write!(f, "{e}"),
            TerraceError::Stationary(e) => write!(f, "{e}"),
            TerraceError::Wave(e) => write!(f, "{e}"),
            TerraceError::SeriesTooShort { reached, needed } => {
                write!(f, "only {reached} sites reached, {needed} needed")
            }
            TerraceError::UnresolvedSpeed { alpha, slope, cross, ci } => write!(
                f,
                "unresolved speed at level {alpha}: slope {slope} vs gap estimate {cross} (ci {ci})"
            ),
            TerraceError::UnclassifiedGaps { alpha, spread } => {
                write!(f, "crossing gaps at level {alpha} neither converge nor diverge (spread {spread})")
            }
            TerraceError::UnidentifiedPlatform { x_lo, x_hi, mean } => write!(
                f,
                "unidentified platform near u = {mean} on [{x_lo}, {x_hi}]; the equilibria ladder is incomplete"
            ),
            TerraceError::DomainTooSmall { periods_left, periods_right } => write!(
                f,
                "fronts still reach the guard zone with {periods_left} + {periods_right} periods"
            ),
            TerraceError::TopNotPositive => write!(f, "the top state must be positive"),
        }
    }
}

impl core::error::Error for TerraceError {}

impl From<ModelError> for TerraceError {
    fn from(e: ModelError) -> Self {
        TerraceError::Model(e)
    }
}
impl From<EvolveError> for TerraceError {
    fn from(e: EvolveError) -> Self {
        TerraceError::Evolve(e)
    }
}
impl From<StationaryError> for TerraceError {
    fn from(e: StationaryError) -> Self {
        TerraceError::Stationary(e)
    }
}
impl From<WaveError> for TerraceError {
    fn from(e: WaveError) -> Self {
        TerraceError::Wave(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Rightward,
    Leftward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GapBehaviour {
    Converging,
    Diverging,
    Unclassified,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingSeries {
    pub alpha: f64,
    pub period: f64,
    pub direction: Direction,
    /// Reached sites in order of distance from the origin.
    pub sites: Vec<i64>,
    pub taus: Vec<f64>,
    /// Requested sites never reached within the run.
    pub absent: Vec<i64>,
}

impl CrossingSeries {
    pub fn gaps(&self) -> Vec<f64> {
        self.taus.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Gaps over the last quartile of the series (at least three).
    pub fn late_gaps(&self) -> Vec<f64> {
        let g = self.gaps();
        let k = (g.len() / 4).max(3).min(g.len());
        g[g.len() - k..].to_vec()
    }

    pub fn is_monotone(&self) -> bool {
        self.taus.windows(2).all(|w| w[1] > w[0])
    }

    pub fn gap_behaviour(&self) -> (GapBehaviour, f64) {
        let g = self.late_gaps();
        if g.is_empty() {
            return (GapBehaviour::Unclassified, f64::INFINITY);
        }
        let m = mean(&g);
        let (lo, hi) = g.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        let spread = (hi - lo) / m.abs().max(1e-300);
        if spread <= 0.1 {
            (GapBehaviour::Converging, spread)
        } else if g.windows(2).all(|w| w[1] > w[0]) {
            (GapBehaviour::Diverging, spread)
        } else {
            (GapBehaviour::Unclassified, spread)
        }
    }
}

/// First-hitting times of `alpha` at the sites `n L`, interpolated linearly
/// in time between the bracketing steps. Rightward sites (`n >= 1`) are hit
/// from below, leftward sites (`n <= -1`) from above.
pub fn crossing_times(
    run: &Run,
    alpha: f64,
    sites: &[i64],
    direction: Direction,
    min_sites: usize,
) -> Result<CrossingSeries, TerraceError> {
    let mut series = CrossingSeries {
        alpha,
        period: run.grid.period(),
        direction,
        sites: Vec::new(),
        taus: Vec::new(),
        absent: Vec::new(),
    };
    let hit = |v: f64| match direction {
        Direction::Rightward => v >= alpha,
        Direction::Leftward => v <= alpha,
    };
    for &n in sites {
        let Some(values) = run.site_series(n) else {
            series.absent.push(n);
            continue;
        };
        let mut prev: Option<f64> = None;
        let mut tau = None;
        for (k, v) in values.enumerate() {
            if hit(v) {
                tau = Some(match prev {
                    Some(p) if p != v => (k as f64 - 1.0 + (alpha - p) / (v - p)) * run.dt,
                    _ => k as f64 * run.dt,
                });
                break;
            }
            prev = Some(v);
        }
        match tau {
            Some(t) => {
                series.sites.push(n);
                series.taus.push(t);
            }
            None => series.absent.push(n),
        }
    }
    if series.sites.len() < min_sites {
        return Err(TerraceError::SeriesTooShort { reached: series.sites.len(), needed: min_sites });
    }
    Ok(series)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedEstimate {
    /// Signed speed (negative for leftward fronts).
    pub c: f64,
    /// Half-width of the confidence interval.
    pub ci: f64,
    pub slope_se: f64,
    /// Difference of the slopes fitted on the two halves of the window.
    pub drift: f64,
    /// `L / mean(last-quartile gaps)`, signed.
    pub cross_estimate: f64,
    pub sites_used: usize,
    pub gap_spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SpeedOutcome {
    Speed(SpeedEstimate),
    /// No number is reported: the series was absent or its gaps diverge.
    ZeroSpeed { reached: usize, diverging: bool },
}

impl SpeedOutcome {
    pub fn speed(&self) -> Option<&SpeedEstimate> {
        match self {
            SpeedOutcome::Speed(s) => Some(s),
            SpeedOutcome::ZeroSpeed { .. } => None,
        }
    }
}

/// Relative floor on the confidence half-width.
pub const CI_FLOOR: f64 = 1e-4;

/// Speed from a crossing series: least-squares slope of `n L` against
/// `tau_n` over the last half of the series, with half-width
/// `2 SE + drift` (drift: slope change between the two halves of that
/// window, which catches slow logarithmic corrections).
pub fn estimate_speed(series: &CrossingSeries, min_sites: usize) -> Result<SpeedOutcome, TerraceError> {
    let reached = series.sites.len();
    if reached < min_sites {
        return Ok(SpeedOutcome::ZeroSpeed { reached, diverging: false });
    }
    let (behaviour, spread) = series.gap_behaviour();
    match behaviour {
        GapBehaviour::Diverging => return Ok(SpeedOutcome::ZeroSpeed { reached, diverging: true }),
        GapBehaviour::Unclassified => {
            return Err(TerraceError::UnclassifiedGaps { alpha: series.alpha, spread })
        }
        GapBehaviour::Converging => {}
    }
    let sign = match series.direction {
        Direction::Rightward => 1.0,
        Direction::Leftward => -1.0,
    };
    let start = reached / 2;
    let x: Vec<f64> = series.taus[start..].to_vec();
    let y: Vec<f64> = series.sites[start..].iter().map(|n| (*n as f64).abs() * series.period).collect();
    let fit = linear_fit(&x, &y).ok_or(TerraceError::SeriesTooShort { reached, needed: min_sites })?;
    let half = x.len() / 2;
    let drift = if half >= 3 {
        match (linear_fit(&x[..half], &y[..half]), linear_fit(&x[half..], &y[half..])) {
            (Some(a), Some(b)) => (a.slope - b.slope).abs(),
            _ => 0.0,
        }
    } else {
        0.0
    };
    let c = fit.slope;
    let ci = (2.0 * fit.slope_se + drift).max(CI_FLOOR * c.abs());
    let cross = series.period / mean(&series.late_gaps());
    if (cross - c).abs() > 3.0 * ci {
        return Err(TerraceError::UnresolvedSpeed { alpha: series.alpha, slope: sign * c, cross: sign * cross, ci });
    }
    Ok(SpeedOutcome::Speed(SpeedEstimate {
        c: sign * c,
        ci,
        slope_se: fit.slope_se,
        drift,
        cross_estimate: sign * cross,
        sites_used: x.len(),
        gap_spread: spread,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Platform {
    pub rung: usize,
    /// Occupied window in the last snapshot (empty for the end states when
    /// they only exist beyond the domain).
    pub x_lo: f64,
    pub x_hi: f64,
    pub periods: usize,
    /// Width of the same plateau at three quarters of the run.
    pub earlier_periods: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlateauOptions {
    pub plateau_tol: f64,
    pub min_periods: usize,
}

impl Default for PlateauOptions {
    fn default() -> Self {
        Self { plateau_tol: 1e-2, min_periods: 10 }
    }
}

/// Maximal runs of whole periods in `values` that match one ladder rung to
/// `plateau_tol` (rung index, first period, length).
fn plateaus(grid: &Grid, values: &[f64], ladder: &EquilibriaLadder, opts: &PlateauOptions) -> Result<Vec<(usize, usize, usize)>, TerraceError> {
    let n = grid.cells_per_period();
    let periods = (values.len() - 1) / n;
    let mut labels: Vec<Option<usize>> = Vec::with_capacity(periods);
    for j in 0..periods {
        let win = &values[j * n..=(j + 1) * n];
        let (k, d) = ladder
            .rungs
            .iter()
            .enumerate()
            .map(|(k, r)| (k, win.iter().enumerate().fold(0.0f64, |m, (i, v)| m.max((v - r.at_phase(i)).abs()))))
            .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
        labels.push((d <= opts.plateau_tol).then_some(k));
    }
    // flat but unmatched stretches point to a missing rung
    let mut run_start = 0;
    for j in 1..=periods {
        let flat = j < periods && labels[j].is_none() && labels[j - 1].is_none() && {
            let a = &values[(j - 1) * n..j * n];
            let b = &values[j * n..(j + 1) * n];
            a.iter().zip(b).all(|(x, y)| (x - y).abs() <= opts.plateau_tol)
        };
        if !flat {
            if j - run_start >= opts.min_periods && labels[run_start].is_none() {
                let seg = &values[run_start * n..j * n];
                return Err(TerraceError::UnidentifiedPlatform {
                    x_lo: grid.x(run_start * n),
                    x_hi: grid.x(j * n),
                    mean: mean(seg),
                });
            }
            run_start = j;
        }
    }
    let mut out = Vec::new();
    let mut j = 0;
    while j < periods {
        if let Some(k) = labels[j] {
            let s = j;
            while j < periods && labels[j] == Some(k) {
                j += 1;
            }
            if j - s >= opts.min_periods {
                out.push((k, s, j - s));
            }
        } else {
            j += 1;
        }
    }
    Ok(out)
}

/// Platforms left behind by the fronts: the top and 0 always, plus every
/// interior rung occupying at least `min_periods` whole periods in the last
/// snapshot whose width did not shrink since three quarters of the run.
pub fn detect_platforms(run: &Run, ladder: &EquilibriaLadder, opts: &PlateauOptions) -> Result<Vec<Platform>, TerraceError> {
    let grid = run.grid;
    let n = grid.cells_per_period();
    let last = plateaus(&grid, &run.last().values, ladder, opts)?;
    let earlier_snap = run.snapshot_before(0.75 * run.final_time());
    let earlier = plateaus(&grid, &earlier_snap.values, ladder, opts)?;
    let width = |set: &[(usize, usize, usize)], k: usize| set.iter().filter(|p| p.0 == k).map(|p| p.2).max().unwrap_or(0);
    let bottom = ladder.rungs.len() - 1;
    let mut out = Vec::new();
    for k in 0..=bottom {
        let now = last.iter().filter(|p| p.0 == k).max_by_key(|p| p.2).copied();
        let before = width(&earlier, k);
        let keep = k == 0 || k == bottom || now.is_some_and(|p| p.2 >= before);
        if keep {
            let (x_lo, x_hi, periods) = match now {
                Some((_, s, len)) => (grid.x(s * n), grid.x((s + len) * n), len),
                None => (0.0, 0.0, 0),
            };
            out.push(Platform { rung: k, x_lo, x_hi, periods, earlier_periods: before });
        }
    }
    Ok(out)
}

/// Initial datum of the front run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Datum {
    /// `H(x0 - x) p(x)`.
    Heaviside { x0: f64 },
    /// `min(1, exp(-lambda x)) p(x)`: a slowly decaying tail selecting a
    /// faster monostable wave.
    ExponentialTail { lambda: f64 },
}

impl Datum {
    pub fn profile(&self, grid: &Grid, top: &[f64]) -> Result<Profile, ModelError> {
        match *self {
            Datum::Heaviside { x0 } => make_heaviside(grid, top, x0),
            Datum::ExponentialTail { lambda } => {
                if !(lambda > 0.0) {
                    return Err(ModelError::BadDecayRate(lambda));
                }
                if top.len() != grid.cells_per_period() {
                    return Err(ModelError::ProfileLength { expected: grid.cells_per_period(), got: top.len() });
                }
                let mut values: Vec<f64> =
                    (0..grid.len()).map(|i| top[grid.phase(i)] * libm::exp(-lambda * grid.x(i).max(0.0))).collect();
                *values.last_mut().unwrap() = 0.0;
                Profile::new(*grid, values, 0.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TerraceConfig {
    pub datum: Datum,
    pub dx: f64,
    /// Explicit step; `None` applies the Lipschitz rule with `dt_fraction`.
    pub dt: Option<f64>,
    pub dt_fraction: f64,
    pub horizon: f64,
    pub periods_left: usize,
    pub periods_right: usize,
    /// Enlarge a side of the domain and rerun when the guard fires.
    pub auto_domain: bool,
    pub max_retries: usize,
    pub guard_periods: usize,
    pub theta_scheme: f64,
    pub plateau: PlateauOptions,
    pub platform_tol: f64,
    pub min_sites: usize,
    pub ladder_resolution: usize,
    pub wave: WaveConfig,
    pub stationary: StationaryConfig,
    /// Also extract waves at a second level in each gap (quarter point).
    pub second_level: bool,
}

impl Default for TerraceConfig {
    fn default() -> Self {
        Self {
            datum: Datum::Heaviside { x0: 0.0 },
            dx: 0.02,
            dt: None,
            dt_fraction: 0.05,
            horizon: 100.0,
            periods_left: 100,
            periods_right: 100,
            auto_domain: true,
            max_retries: 3,
            guard_periods: 5,
            theta_scheme: 1.0,
            plateau: PlateauOptions::default(),
            platform_tol: 1e-6,
            min_sites: 8,
            ladder_resolution: 32,
            wave: WaveConfig::default(),
            stationary: StationaryConfig::default(),
            second_level: false,
        }
    }
}

impl TerraceConfig {
    pub fn cells(&self, period: f64) -> Result<usize, ModelError> {
        Grid::cells_for_spacing(period, self.dx)
    }

    pub fn time_step(&self, nl: &Nonlinearity, upper: f64) -> f64 {
        self.dt.unwrap_or_else(|| lipschitz_dt(nl, (-0.1, upper + 0.1), self.dt_fraction))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Front {
    pub upper_rung: usize,
    pub lower_rung: usize,
    pub alpha: f64,
    pub series: Option<CrossingSeries>,
    pub speed: SpeedOutcome,
    pub wave: Option<PulsatingWave>,
    pub zero_speed_label: Option<ZeroSpeedLabel>,
    /// Speed measured at a second level inside the same gap.
    pub second_speed: Option<SpeedEstimate>,
    pub second_wave: Option<PulsatingWave>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Terrace {
    pub grid: Grid,
    pub dt: f64,
    pub horizon: f64,
    pub platforms: Vec<Platform>,
    pub platform_profiles: Vec<StationarySolution>,
    pub fronts: Vec<Front>,
    pub zero_speed_flag: bool,
    pub checks: Vec<Check>,
    pub assumptions: AssumptionReport,
}

impl Terrace {
    /// Signed speeds `c_1, ..., c_N` (top front first); `None` for zero-speed fronts.
    pub fn speeds(&self) -> Vec<Option<f64>> {
        self.fronts.iter().map(|f| f.speed.speed().map(|s| s.c)).collect()
    }

    pub fn verified(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub struct TerraceExtraction {
    pub terrace: Terrace,
    pub run: Run,
    pub ladder: EquilibriaLadder,
    pub stepper_config: StepperConfig,
}

/// Stepper configuration for the Heaviside run: clamped ends and guard
/// levels halfway into the first and last gap of the ladder.
pub fn heaviside_stepper_config(top: &StationarySolution, ladder: &EquilibriaLadder, dt: f64, cfg: &TerraceConfig) -> StepperConfig {
    let mut sc = StepperConfig::clamped(dt, top.profile.clone());
    sc.theta = cfg.theta_scheme;
    sc.guard_periods = cfg.guard_periods;
    let m = ladder.rungs.len();
    let ratio = |r: &StationarySolution| {
        r.profile.iter().zip(&top.profile).fold(f64::INFINITY, |acc, (q, p)| acc.min(q / p))
    };
    let lowest = if m >= 2 { ratio(&ladder.rungs[m - 2]) } else { 1.0 };
    let second = if m >= 2 {
        ladder.rungs[1].profile.iter().zip(&top.profile).fold(0.0f64, |acc, (q, p)| acc.max(q / p))
    } else {
        0.0
    };
    sc.guard_levels = (1.0 - 0.5 * (1.0 - second), 0.5 * lowest);
    sc
}

/// Runs the configured datum, enlarging the side of the domain where the
/// guard fired (front speed estimated from the truncated run, 30% margin)
/// up to `max_retries` times.
pub fn run_datum<'a>(
    nl: &'a Nonlinearity,
    a: &PeriodicCoefficient,
    top: &StationarySolution,
    sc: &StepperConfig,
    cfg: &TerraceConfig,
) -> Result<(Run, Stepper<'a>), TerraceError> {
    let cells = top.profile.len();
    let (mut left, mut right) = (cfg.periods_left, cfg.periods_right);
    for attempt in 0..=cfg.max_retries {
        let grid = Grid::line(a.period(), cells, left, right)?;
        let stepper = Stepper::new(grid, nl, a, sc.clone())?;
        let u0 = cfg.datum.profile(&grid, &top.profile)?;
        let run = evolve_until(&u0, cfg.horizon, &stepper, &mut [])?;
        if !run.truncated {
            return Ok((run, stepper));
        }
        if !cfg.auto_domain || attempt == cfg.max_retries {
            break;
        }
        let l = a.period();
        for ev in &run.events {
            if let EventKind::Guard { side, x } = ev.kind {
                let t = ev.time.max(run.dt);
                let dist = x.abs() + cfg.guard_periods as f64 * l;
                let v = dist / t;
                let need = dist + 1.3 * v * (cfg.horizon - t).max(0.0);
                let periods = libm::ceil(need / l) as usize + cfg.guard_periods + 10;
                match side {
                    Side::Left => left = left.max(periods).max(left * 3 / 2),
                    Side::Right => right = right.max(periods).max(right * 3 / 2),
                }
            }
        }
    }
    Err(TerraceError::DomainTooSmall { periods_left: left, periods_right: right })
}

fn mid_level(upper: &[f64], lower: &[f64], weight: f64) -> f64 {
    lower[0] + weight * (upper[0] - lower[0])
}

/// Crossing series at `alpha` in whichever direction reached more sites.
fn front_series(run: &Run, alpha: f64, guard: usize) -> Option<CrossingSeries> {
    let grid = run.grid;
    let right: Vec<i64> = (1..=(grid.periods_right() - guard) as i64).collect();
    let left: Vec<i64> = (1..=(grid.periods_left() - guard) as i64).map(|n| -n).collect();
    let r = crossing_times(run, alpha, &right, Direction::Rightward, 0).ok();
    let l = crossing_times(run, alpha, &left, Direction::Leftward, 0).ok();
    let best = match (r, l) {
        (Some(r), Some(l)) => {
            if l.sites.len() > r.sites.len() {
                l
            } else {
                r
            }
        }
        (Some(r), None) => r,
        (None, Some(l)) => l,
        (None, None) => return None,
    };
    Some(best)
}

/// Full pipeline from the problem data to a verified terrace.
pub fn extract_terrace(
    nl: &Nonlinearity,
    a: &PeriodicCoefficient,
    p_guess: &[f64],
    cfg: &TerraceConfig,
) -> Result<TerraceExtraction, TerraceError> {
    let mut scfg = cfg.stationary.clone();
    scfg.cells = p_guess.len();
    let top = solve_stationary(nl, a, p_guess, &scfg)?;
    if !(top.min() > 0.0) {
        return Err(TerraceError::TopNotPositive);
    }
    let ladder = enumerate_equilibria(nl, a, &top, cfg.ladder_resolution, &scfg)?;
    let assumptions = check_assumptions(nl, a, &ladder, &scfg)?;
    let dt = cfg.time_step(nl, top.max());
    let sc = heaviside_stepper_config(&top, &ladder, dt, cfg);
    let (run, stepper) = run_datum(nl, a, &top, &sc, cfg)?;
    let platforms = detect_platforms(&run, &ladder, &cfg.plateau)?;

    let mut fronts = Vec::new();
    for pair in platforms.windows(2) {
        let (ku, kl) = (pair[0].rung, pair[1].rung);
        let up = &ladder.rungs[ku].profile;
        let lo = &ladder.rungs[kl].profile;
        let alpha = mid_level(up, lo, 0.5);
        let series = front_series(&run, alpha, cfg.guard_periods);
        let speed = match &series {
            Some(s) => estimate_speed(s, cfg.min_sites)?,
            None => SpeedOutcome::ZeroSpeed { reached: 0, diverging: false },
        };
        let zero_speed_label = match speed {
            SpeedOutcome::ZeroSpeed { .. } => Some(zero_speed_probe(&run, up, lo)),
            SpeedOutcome::Speed(_) => None,
        };
        fronts.push(Front {
            upper_rung: ku,
            lower_rung: kl,
            alpha,
            series,
            speed,
            wave: None,
            zero_speed_label,
            second_speed: None,
            second_wave: None,
        });
    }

    // window half-width: at most half the distance to neighbouring fronts
    let t_ref = 0.9 * run.final_time();
    let speeds: Vec<Option<f64>> = fronts.iter().map(|f| f.speed.speed().map(|s| s.c)).collect();
    let window_for = |k: usize| -> usize {
        let mine = speeds[k].unwrap_or(0.0);
        let mut w = cfg.wave.max_window_periods as f64;
        for (j, other) in speeds.iter().enumerate() {
            if j != k {
                let gap = (mine - other.unwrap_or(0.0)).abs() * t_ref / 2.0 / a.period();
                w = w.min(libm::floor(gap));
            }
        }
        w.max(0.0) as usize
    };
    for k in 0..fronts.len() {
        let window = window_for(k);
        let f = &fronts[k];
        let (Some(series), Some(est)) = (&f.series, f.speed.speed()) else { continue };
        let rungs = (f.upper_rung, f.lower_rung);
        let wave = extract_wave(&run, &stepper, series, est, &ladder, rungs, window, &cfg.wave).ok();
        let (mut second_speed, mut second_wave) = (None, None);
        if cfg.second_level {
            let up = &ladder.rungs[rungs.0].profile;
            let lo = &ladder.rungs[rungs.1].profile;
            let alpha2 = mid_level(up, lo, 0.25);
            let dir_sites: Vec<i64> = series.sites.iter().copied().chain(series.absent.iter().copied()).collect();
            if let Ok(s2) = crossing_times(&run, alpha2, &dir_sites, series.direction, cfg.min_sites) {
                if let Ok(SpeedOutcome::Speed(e2)) = estimate_speed(&s2, cfg.min_sites) {
                    second_wave = extract_wave(&run, &stepper, &s2, &e2, &ladder, rungs, window, &cfg.wave).ok();
                    second_speed = Some(e2);
                }
            }
        }
        let f = &mut fronts[k];
        f.wave = wave;
        f.second_speed = second_speed;
        f.second_wave = second_wave;
    }

    let zero_speed_flag = fronts.iter().any(|f| f.speed.speed().is_none());
    let platform_profiles: Vec<StationarySolution> = platforms.iter().map(|p| ladder.rungs[p.rung].clone()).collect();
    let mut terrace = Terrace {
        grid: run.grid,
        dt,
        horizon: cfg.horizon,
        platforms,
        platform_profiles,
        fronts,
        zero_speed_flag,
        checks: Vec::new(),
        assumptions,
    };
    terrace.checks = verify_terrace(&terrace, cfg);
    Ok(TerraceExtraction { terrace, run, ladder, stepper_config: sc })
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check { name: String::from(name), passed, detail }
}

/// Definition-level checks on an assembled terrace.
pub fn verify_terrace(t: &Terrace, cfg: &TerraceConfig) -> Vec<Check> {
    let mut out = Vec::new();
    let margins: Vec<f64> = t.platform_profiles.windows(2).map(|w| w[0].margin_over(&w[1])).collect();
    let min_margin = margins.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    out.push(check(
        "platform ordering",
        margins.iter().all(|m| *m > cfg.platform_tol),
        alloc::format!("min margin {min_margin:.3e}"),
    ));
    let speeds: Vec<Option<(f64, f64)>> = t.fronts.iter().map(|f| f.speed.speed().map(|s| (s.c, s.ci))).collect();
    let mut ordered = true;
    for w in speeds.windows(2) {
        if let (Some((c1, e1)), Some((c2, e2))) = (w[0], w[1]) {
            ordered &= c1 <= c2 + e1 + e2;
        }
    }
    out.push(check("speed ordering", ordered, alloc::format!("{speeds:?}")));
    if t.zero_speed_flag {
        out.push(check("zero speed", true, String::from("uniqueness cross-checks disabled")));
        return out;
    }
    for (k, f) in t.fronts.iter().enumerate() {
        let name = alloc::format!("wave {}", k + 1);
        match &f.wave {
            None => out.push(check(&name, false, String::from("wave extraction failed"))),
            Some(w) => {
                let detail = alloc::format!(
                    "pulsating {:.2e}, Cauchy {:.2e}, asymptotics {:.2e}/{:.2e}{}",
                    w.pulsating_residual,
                    w.cauchy_residual,
                    w.left_asymptotic_residual,
                    w.right_asymptotic_residual,
                    if w.rejections.is_empty() { String::new() } else { alloc::format!(" ({})", w.rejections.join("; ")) }
                );
                out.push(check(&name, w.accepted, detail));
            }
        }
    }
    // steepness of each wave against itself (up to time shifts) and the others
    let waves: Vec<&PulsatingWave> = t.fronts.iter().filter_map(|f| f.wave.as_ref()).collect();
    let mut steep_ok = true;
    let mut detail = String::new();
    for (i, wi) in waves.iter().enumerate() {
        for (j, wj) in waves.iter().enumerate() {
            if let Some(v) = wave_steepness(wi, wj, cfg.wave.wave_tol) {
                if !v.steeper {
                    steep_ok = false;
                    detail.push_str(&alloc::format!("U{} vs U{} fails; ", i + 1, j + 1));
                }
            }
        }
    }
    out.push(check("steepness", steep_ok, detail));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontDrift {
    pub front: usize,
    /// `(t, m_k(t))` at the crossing times.
    pub m: Vec<(f64, f64)>,
    /// Least-squares slope of `m_k(t) / t` against `t` over the last half.
    pub tail_slope: f64,
    /// `|m_k(t)| / t` at the last crossing.
    pub final_ratio: f64,
    /// `(t, sup |u - U|)` in the moving frame, at snapshot times.
    pub frame_residual: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftReport {
    pub fronts: Vec<FrontDrift>,
    /// Per consecutive pair of fronts: `(t, gap)` at late snapshots.
    pub gaps: Vec<Vec<(f64, f64)>>,
    pub gaps_nondecreasing: bool,
    pub plateau_growth: Vec<(usize, usize)>,
}

/// Time drifts `m_k(t)` of each front, gaps between consecutive fronts over
/// the last half of the run, and the distance of `u` to the extracted wave
/// in its moving frame.
pub fn convergence_diagnostics(run: &Run, terrace: &Terrace, gap_tol: f64) -> DriftReport {
    let grid = run.grid;
    let n = grid.cells_per_period();
    let plateau_growth = terrace.platforms.iter().map(|p| (p.earlier_periods, p.periods)).collect();
    if terrace.zero_speed_flag {
        return DriftReport { fronts: Vec::new(), gaps: Vec::new(), gaps_nondecreasing: true, plateau_growth };
    }
    let mut fronts = Vec::new();
    for (k, f) in terrace.fronts.iter().enumerate() {
        let (Some(series), Some(est)) = (&f.series, f.speed.speed()) else { continue };
        let l = series.period;
        let m: Vec<(f64, f64)> = series
            .sites
            .iter()
            .zip(&series.taus)
            .map(|(site, tau)| {
                let t = (*site as f64).abs() * l / est.c.abs();
                (t, tau - t)
            })
            .collect();
        let start = m.len() / 2;
        let tail: Vec<&(f64, f64)> = m[start..].iter().filter(|p| p.0 > 0.0).collect();
        let ts: Vec<f64> = tail.iter().map(|p| p.0).collect();
        let ms: Vec<f64> = tail.iter().map(|p| p.1 / p.0).collect();
        let tail_slope = linear_fit(&ts, &ms).map_or(f64::NAN, |fit| fit.slope.abs());
        let final_ratio = m.last().map_or(f64::NAN, |p| p.1.abs() / p.0);
        let mut frame_residual = Vec::new();
        if let Some(w) = &f.wave {
            let sgn = if est.c > 0.0 { 1 } else { -1 };
            for snap in run.snapshots.iter().filter(|s| s.time >= 0.5 * run.final_time()) {
                let Some(idx) = series.taus.iter().rposition(|tau| *tau <= snap.time) else { continue };
                let s = snap.time - series.taus[idx];
                if s > 2.0 * w.time_period {
                    continue;
                }
                let site = series.sites[idx];
                let Some(center) = grid.site_node(site + sgn) else { continue };
                let half = w.window_periods * n;
                if center < half || center + half >= grid.len() {
                    continue;
                }
                let frame = w.frame_at(s);
                let d = frame
                    .iter()
                    .enumerate()
                    .fold(0.0f64, |acc, (i, v)| acc.max((snap.values[center - half + i] - v).abs()));
                frame_residual.push((snap.time, d));
            }
        }
        fronts.push(FrontDrift { front: k, m, tail_slope, final_ratio, frame_residual });
    }
    let mut gaps = Vec::new();
    let mut nondecreasing = true;
    for pair in terrace.fronts.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let (ua, la) = (&terrace_rung(terrace, a.upper_rung), &terrace_rung(terrace, a.lower_rung));
        let (ub, lb) = (&terrace_rung(terrace, b.upper_rung), &terrace_rung(terrace, b.lower_rung));
        let mut g = Vec::new();
        for snap in run.snapshots.iter().filter(|s| s.time >= 0.5 * run.final_time()) {
            if let (Some(xa), Some(xb)) = (
                interface_position(&snap.values, &grid, ua, la),
                interface_position(&snap.values, &grid, ub, lb),
            ) {
                g.push((snap.time, xb - xa));
            }
        }
        nondecreasing &= g.windows(2).all(|w| w[1].1 >= w[0].1 - gap_tol);
        gaps.push(g);
    }
    DriftReport { fronts, gaps, gaps_nondecreasing: nondecreasing, plateau_growth }
}

fn terrace_rung(t: &Terrace, rung: usize) -> Vec<f64> {
    t.platforms
        .iter()
        .position(|p| p.rung == rung)
        .map(|i| t.platform_profiles[i].profile.clone())
        .unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimalityReport {
    pub subset_ok: bool,
    /// Platform rung missing from an alternate decomposition, with its index.
    pub witness: Option<(usize, usize)>,
    pub steepness_ok: bool,
    pub steepness_failures: Vec<(usize, usize)>,
}

/// The platform set must be contained in every alternate chain of
/// equilibria, and every extracted wave must be steeper than every
/// comparison wave sharing its window.
pub fn check_minimality(terrace: &Terrace, alternates: &[Vec<Vec<f64>>], comparison: &[PulsatingWave], tol: f64) -> MinimalityReport {
    let mut report = MinimalityReport { subset_ok: true, witness: None, steepness_ok: true, steepness_failures: Vec::new() };
    'outer: for (ai, alt) in alternates.iter().enumerate() {
        for (pi, p) in terrace.platform_profiles.iter().enumerate() {
            let found = alt.iter().any(|q| q.len() == p.profile.len() && p.distance(q) <= tol);
            if !found {
                report.subset_ok = false;
                report.witness = Some((pi, ai));
                break 'outer;
            }
        }
    }
    for (k, f) in terrace.fronts.iter().enumerate() {
        let Some(w) = &f.wave else { continue };
        for (j, other) in comparison.iter().enumerate() {
            if let Some(v) = wave_steepness(w, other, 1e-3) {
                if !v.steeper {
                    report.steepness_ok = false;
                    report.steepness_failures.push((k, j));
                }
            }
        }
    }
    report
}

/// Convenience: the top state from a constant guess at `level`.
pub fn top_state(nl: &Nonlinearity, a: &PeriodicCoefficient, level: f64, cells: usize, cfg: &StationaryConfig) -> Result<StationarySolution, TerraceError> {
    let mut scfg = cfg.clone();
    scfg.cells = cells;
    Ok(solve_stationary(nl, a, &vec![level; cells], &scfg)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(taus: Vec<f64>, direction: Direction) -> CrossingSeries {
        let sign = if direction == Direction::Rightward { 1 } else { -1 };
        let sites = (1..=taus.len() as i64).map(|n| sign * n).collect();
        CrossingSeries { alpha: 0.5, period: 1.0, direction, sites, taus, absent: Vec::new() }
    }

    #[test]
    fn exact_arrivals_give_exact_speed() {
        let s = series((1..=40).map(|n| 3.0 + n as f64 / 0.8).collect(), Direction::Rightward);
        let SpeedOutcome::Speed(e) = estimate_speed(&s, 8).unwrap() else { panic!() };
        assert!((e.c - 0.8).abs() < 1e-12);
        assert!((e.cross_estimate - 0.8).abs() < 1e-12);
        assert!((e.ci - CI_FLOOR * 0.8).abs() < 1e-15);
        let left = series(s.taus.clone(), Direction::Leftward);
        let SpeedOutcome::Speed(e) = estimate_speed(&left, 8).unwrap() else { panic!() };
        assert!((e.c + 0.8).abs() < 1e-12);
    }

    #[test]
    fn pulsation_is_averaged_out() {
        // arrival times wobble with the period but the mean gap is 1/0.5
        let taus: Vec<f64> = (1..=60).map(|n| 2.0 * n as f64 + 0.05 * (n % 2) as f64).collect();
        let SpeedOutcome::Speed(e) = estimate_speed(&series(taus, Direction::Rightward), 8).unwrap() else { panic!() };
        assert!((e.c - 0.5).abs() <= e.ci);
    }

    #[test]
    fn diverging_gaps_raise_the_flag() {
        let taus: Vec<f64> = (1..=20).map(|n| (n * n) as f64).collect();
        let out = estimate_speed(&series(taus, Direction::Rightward), 8).unwrap();
        assert_eq!(out, SpeedOutcome::ZeroSpeed { reached: 20, diverging: true });
        let short = estimate_speed(&series(vec![1.0, 2.0, 3.0], Direction::Rightward), 8).unwrap();
        assert_eq!(short, SpeedOutcome::ZeroSpeed { reached: 3, diverging: false });
    }

    #[test]
    fn erratic_gaps_are_an_error() {
        let mut t = 0.0;
        let taus: Vec<f64> = (0..40)
            .map(|n| {
                t += if n % 3 == 0 { 3.0 } else { 1.0 };
                t
            })
            .collect();
        assert!(matches!(
            estimate_speed(&series(taus, Direction::Rightward), 8),
            Err(TerraceError::UnclassifiedGaps { .. })
        ));
    }

    #[test]
    fn late_gaps_take_the_last_quarter() {
        let s = series((1..=17).map(|n| n as f64).collect(), Direction::Rightward);
        assert_eq!(s.late_gaps().len(), 4);
        let s = series(vec![1.0, 2.0, 4.0], Direction::Rightward);
        assert_eq!(s.late_gaps(), vec![1.0, 2.0]);
    }
}
