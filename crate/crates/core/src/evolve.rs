//! Time stepping of the reaction-diffusion equation on the truncated line
//! (clamped ends) or on one period (periodic wrap).
//!
//! Each step applies the reaction explicitly, `u* = u + dt f(x, u)`, then a
//! theta-weighted diffusion step in conservative flux form with harmonic-mean
//! face coefficients. With `dt * sup|f_u| <= 1` and
//! `(1 - theta) dt (a_l + a_r) / dx^2 <= 1` both sub-steps are monotone maps,
//! so ordered data stay ordered and sign changes of differences never grow.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::Serialize;

use crate::linalg::{CyclicTridiagonalLu, LinalgError, TridiagonalLu};
use crate::model::{Grid, ModelError, Nonlinearity, PeriodicCoefficient, PhaseReaction, Profile};

#[derive(Debug, Clone, PartialEq)]
pub enum EvolveError {
    /// `dt` violates one of the monotonicity conditions.
    NonMonotone { dt: f64, limit: f64, which: &'static str },
    BadTheta(f64),
    BadStep(f64),
    RangeEscape { node: usize, value: f64, time: f64 },
    NonFinite { node: usize, time: f64 },
    GridMismatch,
    ReplayOutOfRange { time: f64 },
    Model(ModelError),
    Linalg(LinalgError),
}

impl fmt::Display for EvolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvolveError::NonMonotone { dt, limit, which } => {
                write!(f, "dt = {dt} exceeds the {which} monotonicity limit {limit}")
            }
            EvolveError::BadTheta(t) => write!(f, "theta = {t} is outside [0.5, 1]"),
            EvolveError::BadStep(dt) => write!(f, "time step {dt} must be positive"),
            EvolveError::RangeEscape { node, value, time } => write!(
                f,
                "u = {value} left the invariant range at node {node}, t = {time} (dt too large?)"
            ),
            EvolveError::NonFinite { node, time } => {
                write!(f, "non-finite value at node {node}, t = {time}")
            }
            EvolveError::GridMismatch => write!(f, "profile and stepper grids differ"),
            EvolveError::ReplayOutOfRange { time } => {
                write!(f, "requested time {time} is outside the recorded run")
            }
            EvolveError::Model(e) => write!(f, "{e}"),
            EvolveError::Linalg(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for EvolveError {}

impl From<ModelError> for EvolveError {
    fn from(e: ModelError) -> Self {
        EvolveError::Model(e)
    }
}

impl From<LinalgError> for EvolveError {
    fn from(e: LinalgError) -> Self {
        EvolveError::Linalg(e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum BoundaryMode {
    /// Left end held at `top` (one period of values, by phase), right end at 0.
    Clamped { top: Vec<f64> },
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepperConfig {
    pub dt: f64,
    /// Implicitness of the diffusion step, in `[0.5, 1]`.
    pub theta: f64,
    pub boundary: BoundaryMode,
    /// Minimal distance, in periods, between a tracked front and an end.
    pub guard_periods: usize,
    /// The guard fires when `u < left * top` inside the left zone or
    /// `u > right * top` inside the right zone. `(0.5, 0.5)` watches the
    /// level set `u = top / 2`.
    pub guard_levels: (f64, f64),
    /// Values outside `[lo, hi]` abort the run.
    pub range: (f64, f64),
}

impl StepperConfig {
    pub fn clamped(dt: f64, top: Vec<f64>) -> Self {
        let hi = top.iter().fold(0.0f64, |m, v| m.max(*v)) + 0.1;
        Self {
            dt,
            theta: 1.0,
            boundary: BoundaryMode::Clamped { top },
            guard_periods: 5,
            guard_levels: (0.5, 0.5),
            range: (-0.1, hi),
        }
    }

    pub fn periodic(dt: f64, upper: f64) -> Self {
        Self {
            dt,
            theta: 1.0,
            boundary: BoundaryMode::Periodic,
            guard_periods: 0,
            guard_levels: (0.5, 0.5),
            range: (-0.1, upper + 0.1),
        }
    }
}

/// Time step from the Lipschitz rule `dt = fraction / sup|f_u|` over `range`.
pub fn lipschitz_dt(nl: &Nonlinearity, range: (f64, f64), fraction: f64) -> f64 {
    let lip = nl.lipschitz_bound(range.0, range.1);
    if lip > 0.0 {
        fraction / lip
    } else {
        fraction
    }
}

#[derive(Debug, Clone)]
enum Solver {
    Line(TridiagonalLu),
    Periodic(CyclicTridiagonalLu),
}

/// A configured stepper bound to one grid, reaction and coefficient.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    grid: Grid,
    reaction: PhaseReaction<'a>,
    faces: Vec<f64>,
    cfg: StepperConfig,
    solver: Solver,
    boundary_left: f64,
}

impl<'a> Stepper<'a> {
    /// Builds a stepper after checking both monotonicity conditions.
    pub fn new(
        grid: Grid,
        nl: &'a Nonlinearity,
        a: &PeriodicCoefficient,
        cfg: StepperConfig,
    ) -> Result<Self, EvolveError> {
        let lip = nl.lipschitz_bound(cfg.range.0, cfg.range.1);
        if cfg.dt * lip > 1.0 {
            return Err(EvolveError::NonMonotone { dt: cfg.dt, limit: 1.0 / lip, which: "reaction" });
        }
        if cfg.theta < 1.0 {
            let dx = grid.dx();
            let amax = a.max_value() * 1.001;
            let limit = dx * dx / (2.0 * amax * (1.0 - cfg.theta));
            if cfg.dt > limit {
                return Err(EvolveError::NonMonotone { dt: cfg.dt, limit, which: "diffusion" });
            }
        }
        Self::new_unchecked(grid, nl, a, cfg)
    }

    /// Builds a stepper without the monotonicity checks. Only meant for
    /// negative controls that must show what a non-monotone step breaks.
    pub fn new_unchecked(
        grid: Grid,
        nl: &'a Nonlinearity,
        a: &PeriodicCoefficient,
        cfg: StepperConfig,
    ) -> Result<Self, EvolveError> {
        if !(cfg.theta >= 0.5 && cfg.theta <= 1.0) {
            return Err(EvolveError::BadTheta(cfg.theta));
        }
        if !(cfg.dt > 0.0) {
            return Err(EvolveError::BadStep(cfg.dt));
        }
        let cells = grid.cells_per_period();
        if (nl.period() - grid.period()).abs() > 1e-12 || (a.period() - grid.period()).abs() > 1e-12 {
            return Err(EvolveError::GridMismatch);
        }
        match (&cfg.boundary, grid.is_periodic()) {
            (BoundaryMode::Periodic, true) => {}
            (BoundaryMode::Clamped { top }, false) if top.len() == cells => {}
            _ => return Err(EvolveError::GridMismatch),
        }
        let faces = a.face_values(cells);
        let dx = grid.dx();
        let r = cfg.theta * cfg.dt / (dx * dx);
        let n = grid.len();
        let (solver, boundary_left) = match &cfg.boundary {
            BoundaryMode::Periodic => {
                let mut lower = vec![0.0; n];
                let mut diag = vec![0.0; n];
                let mut upper = vec![0.0; n];
                for i in 0..n {
                    let al = faces[(i + cells - 1) % cells];
                    let ar = faces[i];
                    lower[i] = -r * al;
                    upper[i] = -r * ar;
                    diag[i] = 1.0 + r * (al + ar);
                }
                (Solver::Periodic(CyclicTridiagonalLu::new(&lower, &diag, &upper)?), 0.0)
            }
            BoundaryMode::Clamped { top } => {
                let m = n - 2;
                let mut lower = vec![0.0; m];
                let mut diag = vec![0.0; m];
                let mut upper = vec![0.0; m];
                for j in 0..m {
                    let ph = grid.phase(j + 1);
                    let al = faces[(ph + cells - 1) % cells];
                    let ar = faces[ph];
                    lower[j] = -r * al;
                    upper[j] = -r * ar;
                    diag[j] = 1.0 + r * (al + ar);
                }
                (Solver::Line(TridiagonalLu::new(&lower, &diag, &upper)?), top[grid.phase(0)])
            }
        };
        Ok(Self { grid, reaction: nl.on_phases(cells), faces, cfg, solver, boundary_left })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    pub fn dt(&self) -> f64 {
        self.cfg.dt
    }

    /// One-period profile the left end is clamped to, if any.
    pub fn top(&self) -> Option<&[f64]> {
        match &self.cfg.boundary {
            BoundaryMode::Clamped { top } => Some(top),
            BoundaryMode::Periodic => None,
        }
    }

    fn face_pair(&self, i: usize) -> (f64, f64) {
        let cells = self.grid.cells_per_period();
        let ph = self.grid.phase(i);
        (self.faces[(ph + cells - 1) % cells], self.faces[ph])
    }

    /// Advances `u` by one step in place; `time` is only used in diagnostics.
    pub fn step_in_place(&self, u: &mut [f64], time: f64) -> Result<(), EvolveError> {
        let n = self.grid.len();
        if u.len() != n {
            return Err(EvolveError::GridMismatch);
        }
        let dt = self.cfg.dt;
        let periodic = self.grid.is_periodic();
        let (first, last) = if periodic { (0, n) } else { (1, n - 1) };
        for (i, v) in u.iter_mut().enumerate().take(last).skip(first) {
            *v += dt * self.reaction.f(self.grid.phase(i), *v);
        }
        if !periodic {
            u[0] = self.boundary_left;
            u[n - 1] = 0.0;
        }
        if self.cfg.theta < 1.0 {
            let c = (1.0 - self.cfg.theta) * dt / (self.grid.dx() * self.grid.dx());
            let old = u.to_vec();
            for i in first..last {
                let (al, ar) = self.face_pair(i);
                let l = old[(i + n - 1) % n];
                let r = old[(i + 1) % n];
                u[i] = old[i] + c * (ar * (r - old[i]) - al * (old[i] - l));
            }
        }
        match &self.solver {
            Solver::Periodic(lu) => lu.solve_in_place(u),
            Solver::Line(lu) => {
                let r = self.cfg.theta * dt / (self.grid.dx() * self.grid.dx());
                let (al, _) = self.face_pair(1);
                u[1] += r * al * self.boundary_left;
                lu.solve_in_place(&mut u[1..n - 1]);
            }
        }
        let (lo, hi) = self.cfg.range;
        for (node, &value) in u.iter().enumerate() {
            if !value.is_finite() {
                return Err(EvolveError::NonFinite { node, time: time + dt });
            }
            if value < lo || value > hi {
                return Err(EvolveError::RangeEscape { node, value, time: time + dt });
            }
        }
        Ok(())
    }

    /// One step on a profile.
    pub fn step(&self, u: &Profile) -> Result<Profile, EvolveError> {
        if u.grid != self.grid {
            return Err(EvolveError::GridMismatch);
        }
        let mut values = u.values.clone();
        self.step_in_place(&mut values, u.time)?;
        Ok(Profile { grid: self.grid, values, time: u.time + self.cfg.dt })
    }

    /// Whether a watched level set lies inside one of the guard zones.
    fn guard_side(&self, u: &[f64]) -> Option<(Side, f64)> {
        let top = self.top()?;
        let n = u.len();
        let g = (self.cfg.guard_periods * self.grid.cells_per_period()).min(n - 1);
        let (left, right) = self.cfg.guard_levels;
        for i in 0..=g {
            if u[i] < left * top[self.grid.phase(i)] {
                return Some((Side::Left, self.grid.x(i)));
            }
        }
        for i in n - 1 - g..n {
            if u[i] > right * top[self.grid.phase(i)] {
                return Some((Side::Right, self.grid.x(i)));
            }
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum EventKind {
    /// The half-level set entered the guard zone on one side.
    Guard { side: Side, x: f64 },
    /// Free-form note from a monitor.
    Note(String),
    /// A monitor stopped the run.
    Stopped(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub step: usize,
    pub time: f64,
    pub kind: EventKind,
}

/// What a monitor asks the driver to do after observing a step.
#[derive(Debug, Clone, PartialEq)]
pub enum Control {
    Continue,
    Record(String),
    Stop(String),
}

/// Observer called after every step (and once on the initial datum).
pub trait Monitor {
    fn observe(&mut self, step: usize, time: f64, values: &[f64]) -> Control;
}

/// Checks `u(t, x + L) <= u(t, x) + tol` at every node and step.
#[derive(Debug, Clone)]
pub struct SpatialOrderingMonitor {
    cells: usize,
    tol: f64,
    pub violations: Vec<(usize, usize, f64)>,
}

impl SpatialOrderingMonitor {
    pub fn new(grid: &Grid, tol: f64) -> Self {
        Self { cells: grid.cells_per_period(), tol, violations: Vec::new() }
    }
}

impl Monitor for SpatialOrderingMonitor {
    fn observe(&mut self, step: usize, _time: f64, values: &[f64]) -> Control {
        for i in 0..values.len().saturating_sub(self.cells) {
            let excess = values[i + self.cells] - values[i];
            if excess > self.tol {
                self.violations.push((step, i, excess));
                return Control::Record(format!("spatial ordering broken at node {i}"));
            }
        }
        Control::Continue
    }
}

/// Checks `lower <= u <= upper` (one period of bounds, by phase) every step.
#[derive(Debug, Clone)]
pub struct RangeMonitor {
    grid: Grid,
    lower: Vec<f64>,
    upper: Vec<f64>,
    tol: f64,
    pub worst: f64,
    pub violations: usize,
}

impl RangeMonitor {
    pub fn new(grid: &Grid, lower: Vec<f64>, upper: Vec<f64>, tol: f64) -> Self {
        Self { grid: *grid, lower, upper, tol, worst: 0.0, violations: 0 }
    }
}

impl Monitor for RangeMonitor {
    fn observe(&mut self, _step: usize, _time: f64, values: &[f64]) -> Control {
        for (i, &v) in values.iter().enumerate() {
            let ph = self.grid.phase(i);
            let excess = (self.lower[ph] - v).max(v - self.upper[ph]);
            if excess > self.worst {
                self.worst = excess;
            }
            if excess > self.tol {
                self.violations += 1;
            }
        }
        Control::Continue
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub values: Vec<f64>,
}

/// A recorded evolution: decimated full snapshots, the value at every site
/// `n L` after every step, and the event log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Run {
    pub grid: Grid,
    pub dt: f64,
    pub horizon: f64,
    pub snapshots: Vec<Snapshot>,
    pub events: Vec<Event>,
    /// Set when the guard fired or a monitor stopped the run early.
    pub truncated: bool,
    pub final_step: usize,
    sites: Vec<i64>,
    site_nodes: Vec<usize>,
    #[serde(skip)]
    site_history: Vec<f64>,
}

impl Run {
    pub fn final_time(&self) -> f64 {
        self.final_step as f64 * self.dt
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("runs always store the initial datum")
    }

    pub fn last_profile(&self) -> Profile {
        let s = self.last();
        Profile { grid: self.grid, values: s.values.clone(), time: s.time }
    }

    pub fn sites(&self) -> &[i64] {
        &self.sites
    }

    /// Values `u(k dt, n L)` for `k = 0..=final_step`, if `n L` is on the grid.
    pub fn site_series(&self, n: i64) -> Option<impl Iterator<Item = f64> + '_> {
        let col = self.sites.iter().position(|s| *s == n)?;
        let width = self.sites.len();
        Some((0..=self.final_step).map(move |k| self.site_history[k * width + col]))
    }

    /// Latest snapshot at or before `time`.
    pub fn snapshot_before(&self, time: f64) -> &Snapshot {
        let idx = self.snapshots.partition_point(|s| s.time <= time + 1e-12);
        &self.snapshots[idx.saturating_sub(1)]
    }

    /// Exact profiles at arbitrary times, recomputed by replaying the
    /// deterministic stepper from the nearest stored snapshot and
    /// interpolating linearly between the two bracketing steps.
    pub fn profiles_at(&self, times: &[f64], stepper: &Stepper<'_>) -> Result<Vec<Profile>, EvolveError> {
        if *stepper.grid() != self.grid || (stepper.dt() - self.dt).abs() > 0.0 {
            return Err(EvolveError::GridMismatch);
        }
        let mut order: Vec<usize> = (0..times.len()).collect();
        order.sort_by(|a, b| times[*a].total_cmp(&times[*b]));
        let mut out: Vec<Option<Profile>> = vec![None; times.len()];
        let mut cache: Option<(usize, Vec<f64>)> = None;
        for idx in order {
            let t = times[idx];
            if !(t >= 0.0) || t > self.final_time() + 1e-12 {
                return Err(EvolveError::ReplayOutOfRange { time: t });
            }
            let k = (libm::floor(t / self.dt + 1e-9) as usize).min(self.final_step);
            let snap = self.snapshot_before(k as f64 * self.dt);
            let reuse = matches!(&cache, Some((s, _)) if *s <= k && *s >= snap.step);
            if !reuse {
                cache = Some((snap.step, snap.values.clone()));
            }
            let (step, state) = cache.as_mut().expect("cache set above");
            while *step < k {
                stepper.step_in_place(state, *step as f64 * self.dt)?;
                *step += 1;
            }
            let w = t / self.dt - k as f64;
            let values = if w <= 1e-12 || k == self.final_step {
                state.clone()
            } else {
                let mut next = state.clone();
                stepper.step_in_place(&mut next, k as f64 * self.dt)?;
                state.iter().zip(&next).map(|(a, b)| a + w * (b - a)).collect()
            };
            out[idx] = Some(Profile { grid: self.grid, values, time: t });
        }
        Ok(out.into_iter().map(|p| p.expect("every slot filled")).collect())
    }
}

/// Evolves `u0` to time `horizon` (or until the guard or a monitor stops the
/// run). Snapshots are kept every `ceil(horizon / (200 dt))` steps, plus the
/// final and any event step.
pub fn evolve_until(
    u0: &Profile,
    horizon: f64,
    stepper: &Stepper<'_>,
    monitors: &mut [&mut dyn Monitor],
) -> Result<Run, EvolveError> {
    let grid = *stepper.grid();
    if u0.grid != grid {
        return Err(EvolveError::GridMismatch);
    }
    let dt = stepper.dt();
    let ratio = horizon / dt;
    let steps = if (ratio - libm::round(ratio)).abs() <= 1e-9 * ratio.max(1.0) {
        libm::round(ratio)
    } else {
        libm::ceil(ratio)
    }
    .max(0.0) as usize;
    let stride = (libm::ceil(horizon / (200.0 * dt)) as usize).max(1);
    let sites: Vec<i64> = grid.sites().collect();
    let site_nodes: Vec<usize> =
        sites.iter().map(|n| grid.site_node(*n).expect("sites lie on the grid")).collect();

    let mut u = u0.values.clone();
    if !grid.is_periodic() {
        let n = u.len();
        u[0] = stepper.boundary_left;
        u[n - 1] = 0.0;
    }
    let mut run = Run {
        grid,
        dt,
        horizon,
        snapshots: vec![Snapshot { step: 0, time: 0.0, values: u.clone() }],
        events: Vec::new(),
        truncated: false,
        final_step: 0,
        sites,
        site_history: Vec::with_capacity((steps + 1) * site_nodes.len()),
        site_nodes,
    };
    run.site_history.extend(run.site_nodes.iter().map(|&i| u[i]));
    for m in monitors.iter_mut() {
        if let Control::Stop(why) = m.observe(0, 0.0, &u) {
            run.events.push(Event { step: 0, time: 0.0, kind: EventKind::Stopped(why) });
            run.truncated = true;
            return Ok(run);
        }
    }

    for k in 1..=steps {
        stepper.step_in_place(&mut u, (k - 1) as f64 * dt)?;
        let t = k as f64 * dt;
        run.final_step = k;
        run.site_history.extend(run.site_nodes.iter().map(|&i| u[i]));
        let mut stop = false;
        let mut event = false;
        if let Some((side, x)) = stepper.guard_side(&u) {
            run.events.push(Event { step: k, time: t, kind: EventKind::Guard { side, x } });
            stop = true;
        }
        for m in monitors.iter_mut() {
            match m.observe(k, t, &u) {
                Control::Continue => {}
                Control::Record(note) => {
                    event = true;
                    run.events.push(Event { step: k, time: t, kind: EventKind::Note(note) });
                }
                Control::Stop(why) => {
                    stop = true;
                    run.events.push(Event { step: k, time: t, kind: EventKind::Stopped(why) });
                }
            }
        }
        if stop || event || k % stride == 0 || k == steps {
            run.snapshots.push(Snapshot { step: k, time: t, values: u.clone() });
        }
        if stop {
            run.truncated = true;
            break;
        }
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_nonlinearity, make_heaviside, NonlinearitySpec, Preset};

    fn nl(preset: Preset) -> Nonlinearity {
        build_nonlinearity(&NonlinearitySpec::homogeneous(preset)).unwrap()
    }

    fn unit_a() -> PeriodicCoefficient {
        PeriodicCoefficient::constant(1.0, 1.0).unwrap()
    }

    #[test]
    fn constant_equilibrium_is_fixed() {
        let f = nl(Preset::Bistable { theta: 0.25 });
        let a = unit_a();
        let grid = Grid::line(1.0, 20, 3, 3).unwrap();
        let cfg = StepperConfig::clamped(0.05, vec![1.0; 20]);
        let stepper = Stepper::new(grid, &f, &a, cfg).unwrap();
        let mut u = vec![1.0; grid.len()];
        let n = u.len();
        u[n - 1] = 0.0;
        // the clamped zero only pulls values down, monotonically in x
        stepper.step_in_place(&mut u, 0.0).unwrap();
        assert!(u.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        assert!((u[0] - 1.0).abs() < 1e-15 && u[n / 4] > 1.0 - 1e-6);
        let pgrid = Grid::periodic(1.0, 32).unwrap();
        let ps = Stepper::new(pgrid, &f, &a, StepperConfig::periodic(0.05, 1.0)).unwrap();
        let mut q = vec![0.25; 32];
        ps.step_in_place(&mut q, 0.0).unwrap();
        assert!(q.iter().all(|v| (v - 0.25).abs() < 1e-14));
    }

    #[test]
    fn pure_diffusion_smooths_a_step() {
        let f = nl(Preset::Zero);
        let a = unit_a();
        let grid = Grid::line(1.0, 16, 4, 4).unwrap();
        let stepper = Stepper::new(grid, &f, &a, StepperConfig::clamped(0.01, vec![1.0; 16])).unwrap();
        let u0 = make_heaviside(&grid, &[1.0; 16], 0.0).unwrap();
        let tv = |v: &[f64]| v.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>();
        let u1 = stepper.step(&u0).unwrap();
        assert!(tv(&u1.values) <= tv(&u0.values) + 1e-14);
        let (lo, hi) = u1.values.iter().fold((1.0f64, 0.0f64), |(l, h), v| (l.min(*v), h.max(*v)));
        assert!(lo >= -1e-14 && hi <= 1.0 + 1e-14, "{lo} {hi}");
        assert!(u1.values[grid.site_node(0).unwrap()] < 1.0);
    }

    #[test]
    fn rejects_non_monotone_step() {
        let f = nl(Preset::Bistable { theta: 0.25 });
        let a = unit_a();
        let grid = Grid::line(1.0, 16, 2, 2).unwrap();
        let err = Stepper::new(grid, &f, &a, StepperConfig::clamped(2.0, vec![1.0; 16])).unwrap_err();
        assert!(matches!(err, EvolveError::NonMonotone { which: "reaction", .. }));
        let mut cn = StepperConfig::clamped(0.01, vec![1.0; 16]);
        cn.theta = 0.5;
        let err = Stepper::new(grid, &f, &a, cn).unwrap_err();
        assert!(matches!(err, EvolveError::NonMonotone { which: "diffusion", .. }));
        assert!(Stepper::new_unchecked(grid, &f, &a, StepperConfig::clamped(2.0, vec![1.0; 16])).is_ok());
    }

    #[test]
    fn range_escape_aborts() {
        let f = nl(Preset::Kpp);
        let a = unit_a();
        let grid = Grid::periodic(1.0, 16).unwrap();
        let mut cfg = StepperConfig::periodic(0.5, 1.0);
        cfg.range = (-0.1, 1.1);
        let s = Stepper::new(grid, &f, &a, cfg).unwrap();
        let mut u = vec![1.3; 16];
        assert!(matches!(s.step_in_place(&mut u, 0.0), Err(EvolveError::RangeEscape { .. })));
    }

    #[test]
    fn periodic_mode_keeps_translation_symmetry() {
        let mut spec = NonlinearitySpec::homogeneous(Preset::Bistable { theta: 0.3 });
        spec.modulation_eps = 0.3;
        let f = build_nonlinearity(&spec).unwrap();
        let a = unit_a();
        // two periods on a 2L-periodic grid vs one period: identical values
        let g1 = Grid::periodic(1.0, 32).unwrap();
        let s1 = Stepper::new(g1, &f, &a, StepperConfig::periodic(0.02, 1.0)).unwrap();
        let mut u: Vec<f64> = (0..32).map(|i| 0.5 + 0.4 * libm::sin(i as f64 * 0.4)).collect();
        let u_start = u.clone();
        for k in 0..50 {
            s1.step_in_place(&mut u, k as f64 * 0.02).unwrap();
        }
        let run = evolve_until(
            &Profile::new(g1, u_start, 0.0).unwrap(),
            1.0,
            &s1,
            &mut [],
        )
        .unwrap();
        assert_eq!(run.last().values, u);
    }

    #[test]
    fn heaviside_keeps_spatial_ordering_and_range() {
        let f = nl(Preset::Bistable { theta: 0.3 });
        let a = PeriodicCoefficient::series(1.0, crate::model::TrigSeries::from_flat(&[1.0, 0.3]).unwrap())
            .unwrap();
        let grid = Grid::line(1.0, 20, 10, 20).unwrap();
        let stepper = Stepper::new(grid, &f, &a, StepperConfig::clamped(0.025, vec![1.0; 20])).unwrap();
        let u0 = make_heaviside(&grid, &[1.0; 20], 0.0).unwrap();
        let mut order = SpatialOrderingMonitor::new(&grid, 1e-12);
        let mut range = RangeMonitor::new(&grid, vec![0.0; 20], vec![1.0; 20], 1e-12);
        let run = evolve_until(&u0, 10.0, &stepper, &mut [&mut order, &mut range]).unwrap();
        assert!(!run.truncated);
        assert!(order.violations.is_empty());
        assert_eq!(range.violations, 0);
        assert_eq!(run.snapshots.len(), 201);
    }

    #[test]
    fn replay_reproduces_stored_states() {
        let f = nl(Preset::Bistable { theta: 0.25 });
        let a = unit_a();
        let grid = Grid::line(1.0, 20, 10, 20).unwrap();
        let stepper = Stepper::new(grid, &f, &a, StepperConfig::clamped(0.03, vec![1.0; 20])).unwrap();
        let u0 = make_heaviside(&grid, &[1.0; 20], 0.0).unwrap();
        let run = evolve_until(&u0, 6.0, &stepper, &mut []).unwrap();
        let snap = &run.snapshots[57];
        let again = run.profiles_at(&[snap.time, 2.0 * 0.03 + 0.01], &stepper).unwrap();
        assert_eq!(again[0].values, snap.values);
        let s2: Vec<f64> = run.site_series(3).unwrap().collect();
        assert_eq!(s2.len(), run.final_step + 1);
    }

    #[test]
    fn guard_fires_when_front_nears_the_end() {
        let f = nl(Preset::Kpp);
        let a = unit_a();
        let grid = Grid::line(1.0, 20, 6, 8).unwrap();
        let stepper = Stepper::new(grid, &f, &a, StepperConfig::clamped(0.02, vec![1.0; 20])).unwrap();
        let u0 = make_heaviside(&grid, &[1.0; 20], 0.0).unwrap();
        let run = evolve_until(&u0, 20.0, &stepper, &mut []).unwrap();
        assert!(run.truncated);
        assert!(matches!(run.events[0].kind, EventKind::Guard { side: Side::Right, .. }));
    }
}
