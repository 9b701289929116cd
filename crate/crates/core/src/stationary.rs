//! Periodic stationary states, principal eigenvalues of the linearization,
//! the ladder of equilibria between 0 and `p`, and certification of the
//! stability assumptions used by the steepness/speed results.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::Serialize;

use crate::evolve::{evolve_until, lipschitz_dt, EvolveError, Stepper, StepperConfig};
use crate::linalg::{dense_solve, CyclicTridiagonalLu, LinalgError};
use crate::model::{Grid, Nonlinearity, PeriodicCoefficient, Profile};

#[derive(Debug, Clone, PartialEq)]
pub enum StationaryError {
    NoConvergence { iterations: usize, residual: f64 },
    OutOfRange { min: f64, max: f64 },
    EigenStagnation { iterations: usize, residual: f64 },
    /// The converged eigenvector changed sign (Perron positivity violated).
    PerronViolation { min: f64 },
    ContinuumSuspected { seeds: usize, trivial: usize, distinct: usize },
    BadInput(&'static str),
    Linalg(LinalgError),
    Evolve(EvolveError),
}

impl fmt::Display for StationaryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StationaryError::NoConvergence { iterations, residual } => {
                write!(f, "Newton did not converge in {iterations} iterations (residual {residual:e})")
            }
            StationaryError::OutOfRange { min, max } => {
                write!(f, "Newton iterate left the admissible range: [{min}, {max}]")
            }
            StationaryError::EigenStagnation { iterations, residual } => {
                write!(f, "inverse iteration stagnated after {iterations} iterations (residual {residual:e})")
            }
            StationaryError::PerronViolation { min } => {
                write!(f, "principal eigenvector changed sign (min {min:e})")
            }
            StationaryError::ContinuumSuspected { seeds, trivial, distinct } => write!(
                f,
                "continuum suspected: {trivial} of {seeds} seeds are already stationary ({distinct} distinct limits)"
            ),
            StationaryError::BadInput(what) => write!(f, "invalid input: {what}"),
            StationaryError::Linalg(e) => write!(f, "{e}"),
            StationaryError::Evolve(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for StationaryError {}

impl From<LinalgError> for StationaryError {
    fn from(e: LinalgError) -> Self {
        StationaryError::Linalg(e)
    }
}

impl From<EvolveError> for StationaryError {
    fn from(e: EvolveError) -> Self {
        StationaryError::Evolve(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stability {
    LinearlyStable,
    LinearlyUnstable,
    Degenerate,
}

impl Stability {
    pub fn from_mu(mu: f64, band: f64) -> Self {
        if mu < -band {
            Stability::LinearlyStable
        } else if mu > band {
            Stability::LinearlyUnstable
        } else {
            Stability::Degenerate
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryConfig {
    /// Nodes per period.
    pub cells: usize,
    pub newton_tol: f64,
    pub max_iters: usize,
    pub degenerate_band: f64,
    pub eigen_tol: f64,
    pub eigen_max_iters: usize,
    /// Upper end of the admissible range (0.1 is added). Defaults to the
    /// maximum of the guess.
    pub upper: Option<f64>,
    pub dedup_tol: f64,
    pub continuum_fraction: f64,
    /// Times of the periodic-evolution snapshots used as extra seeds.
    pub snapshot_times: Vec<f64>,
}

impl Default for StationaryConfig {
    fn default() -> Self {
        Self {
            cells: 50,
            newton_tol: 1e-10,
            max_iters: 50,
            degenerate_band: 1e-8,
            eigen_tol: 1e-10,
            eigen_max_iters: 10_000,
            upper: None,
            dedup_tol: 1e-6,
            continuum_fraction: 0.9,
            snapshot_times: vec![10.0, 100.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Eigenpair {
    pub mu: f64,
    /// Positive, max-normalized eigenfunction samples.
    pub phi: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationarySolution {
    pub period: f64,
    /// Values at `x = i L / cells`, `i = 0..cells`.
    pub profile: Vec<f64>,
    pub residual_norm: f64,
    pub stability: Stability,
    pub mu: f64,
    pub phi: Vec<f64>,
    pub newton_iterations: usize,
    /// Max-norm of the first Newton correction (zero if the guess already
    /// solved the equation).
    pub first_correction: f64,
}

impl StationarySolution {
    pub fn min(&self) -> f64 {
        self.profile.iter().fold(f64::INFINITY, |m, v| m.min(*v))
    }

    pub fn max(&self) -> f64 {
        self.profile.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v))
    }

    pub fn mean(&self) -> f64 {
        self.profile.iter().sum::<f64>() / self.profile.len() as f64
    }

    pub fn distance(&self, other: &[f64]) -> f64 {
        self.profile.iter().zip(other).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `min_x (self - other)`.
    pub fn margin_over(&self, other: &StationarySolution) -> f64 {
        self.profile.iter().zip(&other.profile).fold(f64::INFINITY, |m, (a, b)| m.min(a - b))
    }

    /// Value at the node with the given phase index.
    pub fn at_phase(&self, phase: usize) -> f64 {
        self.profile[phase % self.profile.len()]
    }
}

/// Discrete periodic operator `q -> (a q_x)_x` with harmonic face values:
/// row `i` has `lower = a_{i-1/2}/dx^2`, `upper = a_{i+1/2}/dx^2`.
struct PeriodicOperator {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl PeriodicOperator {
    fn new(a: &PeriodicCoefficient, cells: usize) -> Self {
        let faces = a.face_values(cells);
        let dx = a.period() / cells as f64;
        let s = 1.0 / (dx * dx);
        let lower = (0..cells).map(|i| faces[(i + cells - 1) % cells] * s).collect();
        let upper = faces.iter().map(|v| v * s).collect();
        Self { lower, upper }
    }

    fn n(&self) -> usize {
        self.upper.len()
    }

    fn apply(&self, q: &[f64], i: usize) -> f64 {
        let n = self.n();
        self.upper[i] * (q[(i + 1) % n] - q[i]) - self.lower[i] * (q[i] - q[(i + n - 1) % n])
    }

    fn norm(&self) -> f64 {
        (0..self.n()).fold(0.0f64, |m, i| m.max(2.0 * (self.lower[i] + self.upper[i])))
    }
}

/// Principal eigenpair of `phi -> (a phi_x)_x + g phi` on one period sampled
/// at `g.len()` nodes, by inverse iteration with the fixed shift
/// `max g + delta`. The shifted matrix is a nonsingular M-matrix, so the
/// iteration stays positive and converges to the Perron pair.
pub fn principal_eigenvalue(a: &PeriodicCoefficient, g: &[f64], tol: f64, max_iters: usize) -> Result<Eigenpair, StationaryError> {
    let n = g.len();
    if n < 3 {
        return Err(StationaryError::BadInput("need at least three nodes per period"));
    }
    let op = PeriodicOperator::new(a, n);
    let gmax = g.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    let gmin = g.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    let sigma = gmax + 1e-3 + 0.01 * (gmax - gmin);
    let lower: Vec<f64> = op.lower.iter().map(|v| -v).collect();
    let upper: Vec<f64> = op.upper.iter().map(|v| -v).collect();
    let diag: Vec<f64> = (0..n).map(|i| sigma - g[i] + op.lower[i] + op.upper[i]).collect();
    let lu = CyclicTridiagonalLu::new(&lower, &diag, &upper)?;

    let scale = op.norm() + gmax.abs().max(gmin.abs());
    let tol = tol.max(64.0 * f64::EPSILON * scale);
    let mut phi = vec![1.0; n];
    let mut residual = f64::INFINITY;
    for it in 1..=max_iters {
        lu.solve_in_place(&mut phi);
        let m = phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let sign = if phi.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        for v in phi.iter_mut() {
            *v *= sign / m;
        }
        let lphi: Vec<f64> = (0..n).map(|i| op.apply(&phi, i) + g[i] * phi[i]).collect();
        let num: f64 = lphi.iter().zip(&phi).map(|(a, b)| a * b).sum();
        let den: f64 = phi.iter().map(|v| v * v).sum();
        let mu = num / den;
        residual = lphi.iter().zip(&phi).fold(0.0f64, |r, (l, p)| r.max((l - mu * p).abs()));
        if residual <= tol {
            let min = phi.iter().fold(f64::INFINITY, |m, v| m.min(*v));
            if !(min > 0.0) {
                return Err(StationaryError::PerronViolation { min });
            }
            return Ok(Eigenpair { mu, phi, residual, iterations: it });
        }
    }
    Err(StationaryError::EigenStagnation { iterations: max_iters, residual })
}

fn residual(op: &PeriodicOperator, nl: &Nonlinearity, cells: usize, q: &[f64], out: &mut [f64]) -> f64 {
    let reaction = nl.on_phases(cells);
    let mut norm = 0.0f64;
    for i in 0..cells {
        out[i] = op.apply(q, i) + reaction.f(i, q[i]);
        norm = norm.max(out[i].abs());
    }
    norm
}

/// Linearization weight `g(x) = f_u(x, q(x))` on the nodes of one period.
pub fn linearization(nl: &Nonlinearity, q: &[f64]) -> Vec<f64> {
    let reaction = nl.on_phases(q.len());
    q.iter().enumerate().map(|(i, v)| reaction.eval(i, *v).1).collect()
}

/// Newton's method for the discrete periodic stationary problem
/// `(a q_x)_x + f(x, q) = 0`, with backtracking on the residual norm.
pub fn solve_stationary(
    nl: &Nonlinearity,
    a: &PeriodicCoefficient,
    guess: &[f64],
    cfg: &StationaryConfig,
) -> Result<StationarySolution, StationaryError> {
    let n = guess.len();
    if n < 3 {
        return Err(StationaryError::BadInput("need at least three nodes per period"));
    }
    if (nl.period() - a.period()).abs() > 1e-12 {
        return Err(StationaryError::BadInput("coefficient and nonlinearity periods differ"));
    }
    let upper = cfg.upper.unwrap_or_else(|| guess.iter().fold(0.0f64, |m, v| m.max(*v)));
    let (lo, hi) = (-0.1, upper + 0.1);
    let op = PeriodicOperator::new(a, n);
    let reaction = nl.on_phases(n);
    let mut q = guess.to_vec();
    let mut f = vec![0.0; n];
    let mut res = residual(&op, nl, n, &q, &mut f);
    let mut first_correction = 0.0;
    let mut iterations = 0;
    while res > cfg.newton_tol {
        if iterations == cfg.max_iters {
            return Err(StationaryError::NoConvergence { iterations, residual: res });
        }
        iterations += 1;
        let mut jac = vec![0.0; n * n];
        for i in 0..n {
            let (_, df) = reaction.eval(i, q[i]);
            jac[i * n + i] = -op.lower[i] - op.upper[i] + df;
            jac[i * n + (i + n - 1) % n] += op.lower[i];
            jac[i * n + (i + 1) % n] += op.upper[i];
        }
        let mut delta: Vec<f64> = f.iter().map(|v| -v).collect();
        dense_solve(&mut jac, &mut delta)?;
        let step_norm = delta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if iterations == 1 {
            first_correction = step_norm;
        }
        let mut lambda = 1.0;
        let mut trial = vec![0.0; n];
        let mut ft = vec![0.0; n];
        loop {
            for i in 0..n {
                trial[i] = q[i] + lambda * delta[i];
            }
            let rt = residual(&op, nl, n, &trial, &mut ft);
            if rt < res || lambda < 1.0 / 64.0 {
                q.copy_from_slice(&trial);
                f.copy_from_slice(&ft);
                res = rt;
                break;
            }
            lambda *= 0.5;
        }
        let (min, max) = q.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        if min < lo || max > hi || !res.is_finite() {
            return Err(StationaryError::OutOfRange { min, max });
        }
    }
    let g = linearization(nl, &q);
    let eig = principal_eigenvalue(a, &g, cfg.eigen_tol, cfg.eigen_max_iters)?;
    Ok(StationarySolution {
        period: a.period(),
        profile: q,
        residual_norm: res,
        stability: Stability::from_mu(eig.mu, cfg.degenerate_band),
        mu: eig.mu,
        phi: eig.phi,
        newton_iterations: iterations,
        first_correction,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriaLadder {
    /// Strictly ordered chain, top (`p`) first and 0 last.
    pub rungs: Vec<StationarySolution>,
    /// `min_x (q_{j-1} - q_j)` for consecutive rungs.
    pub margins: Vec<f64>,
    /// Equilibria found between 0 and `p` that cross another one; they are
    /// left out of `rungs`.
    pub crossing: Vec<StationarySolution>,
    pub seeds_tried: usize,
}

impl EquilibriaLadder {
    pub fn top(&self) -> &StationarySolution {
        &self.rungs[0]
    }

    /// Index of the rung closest (max-norm) to `values`, with the distance.
    pub fn nearest(&self, values: &[f64]) -> (usize, f64) {
        self.rungs
            .iter()
            .enumerate()
            .map(|(i, r)| (i, r.distance(values)))
            .fold((0, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best })
    }
}

/// Searches for all periodic equilibria between 0 and `top` and arranges them
/// in a strictly ordered ladder. Seeds are `resolution` constant levels in
/// `(0, min top)` plus snapshots of the periodic evolution started from them.
pub fn enumerate_equilibria(
    nl: &Nonlinearity,
    a: &PeriodicCoefficient,
    top: &StationarySolution,
    resolution: usize,
    cfg: &StationaryConfig,
) -> Result<EquilibriaLadder, StationaryError> {
    let n = top.profile.len();
    if resolution == 0 {
        return Err(StationaryError::BadInput("resolution must be positive"));
    }
    let upper = top.max();
    let mut sub = cfg.clone();
    sub.upper = Some(upper);
    let lvl = top.min();
    let levels: Vec<f64> = (0..resolution).map(|j| lvl * (j as f64 + 0.5) / resolution as f64).collect();

    let zero = solve_stationary(nl, a, &vec![0.0; n], &sub)?;
    let mut found: Vec<StationarySolution> = vec![top.clone(), zero];
    let inside = |s: &StationarySolution| {
        s.profile.iter().zip(&top.profile).all(|(q, p)| *q >= -1e-8 && *q <= p + 1e-8)
    };
    let add = |found: &mut Vec<StationarySolution>, s: StationarySolution| {
        if inside(&s) && found.iter().all(|f| f.distance(&s.profile) >= cfg.dedup_tol) {
            found.push(s);
        }
    };

    let mut trivial = Vec::new();
    for &c in &levels {
        if let Ok(s) = solve_stationary(nl, a, &vec![c; n], &sub) {
            if s.first_correction < 1e-12 && s.newton_iterations <= 1 {
                trivial.push(s.profile.clone());
            }
            add(&mut found, s);
        }
    }
    let mut distinct: Vec<Vec<f64>> = Vec::new();
    for t in &trivial {
        if distinct.iter().all(|d| d.iter().zip(t).any(|(a, b)| (a - b).abs() >= cfg.dedup_tol)) {
            distinct.push(t.clone());
        }
    }
    if resolution >= 2 && distinct.len() as f64 >= cfg.continuum_fraction * resolution as f64 {
        return Err(StationaryError::ContinuumSuspected {
            seeds: resolution,
            trivial: trivial.len(),
            distinct: distinct.len(),
        });
    }

    let mut seeds_tried = resolution + 1;
    if !cfg.snapshot_times.is_empty() {
        let grid = Grid::periodic(a.period(), n).map_err(|_| StationaryError::BadInput("grid"))?;
        let range = (-0.1, upper + 0.1);
        let dt = lipschitz_dt(nl, range, 0.5).min(0.1);
        let stepper = Stepper::new(grid, nl, a, StepperConfig::periodic(dt, upper))?;
        let t_max = cfg.snapshot_times.iter().fold(0.0f64, |m, t| m.max(*t));
        for &c in &levels {
            let run = evolve_until(&Profile::constant(grid, c), t_max, &stepper, &mut [])?;
            let profiles = run.profiles_at(&cfg.snapshot_times, &stepper)?;
            for p in profiles {
                seeds_tried += 1;
                if let Ok(s) = solve_stationary(nl, a, &p.values, &sub) {
                    add(&mut found, s);
                }
            }
        }
    }

    found.sort_by(|x, y| y.mean().total_cmp(&x.mean()));
    let m = found.len();
    let mut crosses = vec![false; m];
    for i in 0..m {
        for j in i + 1..m {
            if found[i].margin_over(&found[j]) <= 0.0 {
                crosses[i] = true;
                crosses[j] = true;
            }
        }
    }
    let top_idx = found.iter().position(|s| s.distance(&top.profile) < cfg.dedup_tol).unwrap_or(0);
    let mut rungs = Vec::new();
    let mut crossing = Vec::new();
    for (i, s) in found.into_iter().enumerate() {
        let is_end = i == top_idx || s.profile.iter().all(|v| v.abs() < cfg.dedup_tol);
        if crosses[i] && !is_end {
            crossing.push(s);
        } else {
            rungs.push(s);
        }
    }
    let margins = rungs.windows(2).map(|w| w[0].margin_over(&w[1])).collect();
    Ok(EquilibriaLadder { rungs, margins, crossing, seeds_tried })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CertificateStatus {
    Certified,
    Failed,
    /// A degenerate equilibrium is involved; the canonical witness cannot
    /// decide, which does not mean the assumption is false.
    NotCertified,
    NotRequired,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RungCertificate {
    pub rung: usize,
    pub mean_level: f64,
    pub stability: Stability,
    pub mu: f64,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub status: CertificateStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    /// Positive rungs (0 excluded), one-sided bands on both sides.
    pub assumption1: CertificateStatus,
    pub rungs1: Vec<RungCertificate>,
    /// Interior rungs with two-sided bands, plus the end witness.
    pub assumption2: CertificateStatus,
    pub rungs2: Vec<RungCertificate>,
    /// Witness `g = max(f_u(x,0), f_u(x,p)) + eps` on `[0,d] u [p-d,p]`.
    pub ends: RungCertificate,
}

const DELTA_START: f64 = 0.05;
const DELTA_FLOOR: f64 = 1e-4;
const BAND_SAMPLES: usize = 33;

/// Largest `delta` in the halving sequence from 0.05 down to 1e-4 such that
/// `f_u(x_i, u) <= g_i` for sampled `u` in `[q_i - delta, q_i + delta]`
/// (or only the bands selected by `bands`).
fn certify_band(
    nl: &Nonlinearity,
    g: &[f64],
    bands: &dyn Fn(usize, f64) -> Vec<(f64, f64)>,
) -> Option<f64> {
    let reaction = nl.on_phases(g.len());
    let mut delta = DELTA_START;
    while delta >= DELTA_FLOOR {
        let ok = (0..g.len()).all(|i| {
            bands(i, delta).into_iter().all(|(lo, hi)| {
                (0..BAND_SAMPLES).all(|k| {
                    let u = lo + (hi - lo) * k as f64 / (BAND_SAMPLES - 1) as f64;
                    reaction.eval(i, u).1 <= g[i] + 1e-12
                })
            })
        });
        if ok {
            return Some(delta);
        }
        delta *= 0.5;
    }
    None
}

fn certify_rung(nl: &Nonlinearity, rung: usize, q: &StationarySolution) -> RungCertificate {
    let mut cert = RungCertificate {
        rung,
        mean_level: q.mean(),
        stability: q.stability,
        mu: q.mu,
        epsilon: None,
        delta: None,
        status: CertificateStatus::NotRequired,
    };
    match q.stability {
        Stability::LinearlyUnstable => {}
        Stability::Degenerate => cert.status = CertificateStatus::NotCertified,
        Stability::LinearlyStable => {
            let eps = -q.mu / 2.0;
            let g: Vec<f64> = linearization(nl, &q.profile).iter().map(|v| v + eps).collect();
            let prof = &q.profile;
            let delta = certify_band(nl, &g, &|i, d| vec![(prof[i] - d, prof[i] + d)]);
            cert.epsilon = Some(eps);
            cert.delta = delta;
            cert.status = if delta.is_some() { CertificateStatus::Certified } else { CertificateStatus::Failed };
        }
    }
    cert
}

fn combine(certs: &[RungCertificate]) -> CertificateStatus {
    if certs.iter().any(|c| c.status == CertificateStatus::Failed) {
        CertificateStatus::Failed
    } else if certs.iter().any(|c| c.status == CertificateStatus::NotCertified) {
        CertificateStatus::NotCertified
    } else {
        CertificateStatus::Certified
    }
}

/// Certifies the two stability assumptions on a ladder with the canonical
/// witness `g = f_u(x, q) + eps`, `eps = -mu / 2` (so `mu_g = mu / 2 <= 0`).
pub fn check_assumptions(
    nl: &Nonlinearity,
    a: &PeriodicCoefficient,
    ladder: &EquilibriaLadder,
    cfg: &StationaryConfig,
) -> Result<AssumptionReport, StationaryError> {
    let last = ladder.rungs.len() - 1;
    let rungs1: Vec<RungCertificate> =
        (0..last).map(|k| certify_rung(nl, k, &ladder.rungs[k])).collect();
    let rungs2: Vec<RungCertificate> = (1..last).map(|k| certify_rung(nl, k, &ladder.rungs[k])).collect();

    let p = &ladder.rungs[0].profile;
    let n = p.len();
    let g0 = linearization(nl, &vec![0.0; n]);
    let gp = linearization(nl, p);
    let gmax: Vec<f64> = g0.iter().zip(&gp).map(|(a, b)| a.max(*b)).collect();
    let eig = principal_eigenvalue(a, &gmax, cfg.eigen_tol, cfg.eigen_max_iters)?;
    let stability = Stability::from_mu(eig.mu, cfg.degenerate_band);
    let mut ends = RungCertificate {
        rung: last,
        mean_level: 0.0,
        stability,
        mu: eig.mu,
        epsilon: None,
        delta: None,
        status: CertificateStatus::Failed,
    };
    match stability {
        Stability::LinearlyUnstable => {}
        Stability::Degenerate => ends.status = CertificateStatus::NotCertified,
        Stability::LinearlyStable => {
            let eps = -eig.mu / 2.0;
            let g: Vec<f64> = gmax.iter().map(|v| v + eps).collect();
            let delta = certify_band(nl, &g, &|i, d| vec![(0.0, d), (p[i] - d, p[i])]);
            ends.epsilon = Some(eps);
            ends.delta = delta;
            ends.status = if delta.is_some() { CertificateStatus::Certified } else { CertificateStatus::Failed };
        }
    }
    let mut all2 = rungs2.clone();
    all2.push(ends.clone());
    Ok(AssumptionReport {
        assumption1: combine(&rungs1),
        rungs1,
        assumption2: combine(&all2),
        rungs2,
        ends,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_nonlinearity, NonlinearitySpec, Preset, TrigSeries};

    fn unit_a() -> PeriodicCoefficient {
        PeriodicCoefficient::constant(1.0, 1.0).unwrap()
    }

    fn nl(preset: Preset) -> Nonlinearity {
        build_nonlinearity(&NonlinearitySpec::homogeneous(preset)).unwrap()
    }

    #[test]
    fn constant_potential_gives_constant_eigenfunction() {
        let e = principal_eigenvalue(&unit_a(), &[0.3; 40], 1e-10, 10_000).unwrap();
        assert!((e.mu - 0.3).abs() < 1e-12);
        assert!(e.phi.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn cubic_roots_have_expected_stability() {
        let f = nl(Preset::Bistable { theta: 0.25 });
        let cfg = StationaryConfig::default();
        let one = solve_stationary(&f, &unit_a(), &[1.0; 50], &cfg).unwrap();
        assert_eq!(one.residual_norm, 0.0);
        assert!((one.mu + 0.75).abs() < 1e-10);
        assert_eq!(one.stability, Stability::LinearlyStable);
        let mid = solve_stationary(&f, &unit_a(), &[0.25; 50], &cfg).unwrap();
        assert_eq!(mid.stability, Stability::LinearlyUnstable);
        let near = solve_stationary(&f, &unit_a(), &[0.3; 50], &cfg).unwrap();
        assert!((near.mean() - 0.25).abs() < 1e-9);
    }

    #[test]
    fn modulated_cubic_keeps_one() {
        let mut spec = NonlinearitySpec::homogeneous(Preset::Bistable { theta: 0.25 });
        spec.modulation_eps = 0.2;
        let f = build_nonlinearity(&spec).unwrap();
        let s = solve_stationary(&f, &unit_a(), &[1.0; 50], &StationaryConfig::default()).unwrap();
        assert!(s.profile.iter().all(|v| *v == 1.0));
        assert!(s.mu < 0.0);
    }

    #[test]
    fn nonconstant_state_for_heterogeneous_reaction() {
        // f = u (b(x) - u) with b periodic positive: p is nonconstant
        let series = vec![vec![1.0, 0.0, 0.5], vec![-1.0]];
        let f = build_nonlinearity(&NonlinearitySpec::homogeneous(Preset::Series(series))).unwrap();
        let a = PeriodicCoefficient::series(1.0, TrigSeries::from_flat(&[1.0, 0.2]).unwrap()).unwrap();
        let s = solve_stationary(&f, &a, &[1.0; 64], &StationaryConfig::default()).unwrap();
        assert!(s.residual_norm <= 1e-10);
        assert!(s.max() - s.min() > 1e-3);
        assert_eq!(s.stability, Stability::LinearlyStable);
        let again = solve_stationary(&f, &a, &s.profile, &StationaryConfig::default()).unwrap();
        assert!(again.distance(&s.profile) < 1e-10);
    }

    #[test]
    fn bistable_ladder_and_assumptions() {
        let f = nl(Preset::Bistable { theta: 0.25 });
        let cfg = StationaryConfig::default();
        let top = solve_stationary(&f, &unit_a(), &[1.0; 50], &cfg).unwrap();
        let ladder = enumerate_equilibria(&f, &unit_a(), &top, 16, &cfg).unwrap();
        let means: Vec<f64> = ladder.rungs.iter().map(|r| r.mean()).collect();
        assert_eq!(means.len(), 3);
        assert!((means[1] - 0.25).abs() < 1e-9);
        assert!(ladder.margins.iter().all(|m| *m > 0.0));
        let rep = check_assumptions(&f, &unit_a(), &ladder, &cfg).unwrap();
        assert_eq!(rep.assumption1, CertificateStatus::Certified);
        assert_eq!(rep.assumption2, CertificateStatus::Certified);
    }

    #[test]
    fn kpp_fails_the_end_witness_only() {
        let f = nl(Preset::Kpp);
        let cfg = StationaryConfig::default();
        let top = solve_stationary(&f, &unit_a(), &[1.0; 50], &cfg).unwrap();
        let ladder = enumerate_equilibria(&f, &unit_a(), &top, 16, &cfg).unwrap();
        assert_eq!(ladder.rungs.len(), 2);
        let rep = check_assumptions(&f, &unit_a(), &ladder, &cfg).unwrap();
        assert_eq!(rep.assumption1, CertificateStatus::Certified);
        assert_eq!(rep.assumption2, CertificateStatus::Failed);
    }

    #[test]
    fn flat_reaction_is_a_continuum() {
        let f = nl(Preset::Zero);
        let cfg = StationaryConfig::default();
        let top = solve_stationary(&f, &unit_a(), &[1.0; 50], &cfg).unwrap();
        assert_eq!(top.stability, Stability::Degenerate);
        let err = enumerate_equilibria(&f, &unit_a(), &top, 16, &cfg).unwrap_err();
        assert!(matches!(err, StationaryError::ContinuumSuspected { .. }));
    }
}
