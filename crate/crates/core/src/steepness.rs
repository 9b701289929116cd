//! Sign changes of differences between profiles, the steepness relation and
//! monitors asserting that intersection numbers never grow in time.

use alloc::vec::Vec;
use core::fmt;

use serde::Serialize;

use crate::evolve::{EvolveError, Run, Stepper};
use crate::model::{Grid, Profile};

pub const DEFAULT_TIE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum SteepnessError {
    GridMismatch,
    EmptyFamily,
    UnsynchronizedRuns,
    Evolve(EvolveError),
}

impl fmt::Display for SteepnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SteepnessError::GridMismatch => write!(f, "profiles live on different grids"),
            SteepnessError::EmptyFamily => write!(f, "empty profile family"),
            SteepnessError::UnsynchronizedRuns => write!(f, "runs share no snapshot steps"),
            SteepnessError::Evolve(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for SteepnessError {}

impl From<EvolveError> for SteepnessError {
    fn from(e: EvolveError) -> Self {
        SteepnessError::Evolve(e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntersectionReport {
    pub count: usize,
    pub crossing_positions: Vec<f64>,
    /// Per crossing: the tied run between the bracketing nodes has >= 3 nodes.
    pub degenerate_flags: Vec<bool>,
    /// `|u - v| <= tie_tol` everywhere.
    pub identical: bool,
}

/// Sign changes of `d` sampled at `x(i)`. Tied entries (`|d| <= tie_tol`)
/// take the sign of the nearest untied neighbour, which never creates or
/// removes an alternation between untied entries, so crossings are located
/// between consecutive untied nodes of opposite sign.
pub fn crossings_of(d: &[f64], x: impl Fn(usize) -> f64, tie_tol: f64) -> IntersectionReport {
    let mut report = IntersectionReport {
        count: 0,
        crossing_positions: Vec::new(),
        degenerate_flags: Vec::new(),
        identical: false,
    };
    let mut prev: Option<usize> = None;
    for (i, &di) in d.iter().enumerate() {
        if di.abs() <= tie_tol {
            continue;
        }
        if let Some(j) = prev {
            if (d[j] > 0.0) != (di > 0.0) {
                let (xa, xb) = (x(j), x(i));
                let pos = xa + (xb - xa) * d[j] / (d[j] - di);
                report.crossing_positions.push(pos);
                report.degenerate_flags.push(i - j - 1 >= 3);
            }
        }
        prev = Some(i);
    }
    report.identical = prev.is_none();
    report.count = report.crossing_positions.len();
    report
}

fn diff_on(grid: &Grid, u: &[f64], v: &[f64], tie_tol: f64) -> IntersectionReport {
    let d: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
    crossings_of(&d, |i| grid.x(i), tie_tol)
}

pub fn sign_change_count(u: &Profile, v: &Profile, tie_tol: f64) -> Result<IntersectionReport, SteepnessError> {
    if u.grid != v.grid {
        return Err(SteepnessError::GridMismatch);
    }
    Ok(diff_on(&u.grid, &u.values, &v.values, tie_tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteepnessWitness {
    /// Index into the first family.
    pub t1_index: usize,
    /// Index into the second family.
    pub t2_index: usize,
    /// Crossing whose one-sided ordering fails.
    pub x: f64,
    /// Node where the ordering fails and by how much.
    pub at: f64,
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteepnessVerdict {
    pub steeper: bool,
    pub pairs_checked: usize,
    pub max_crossings: usize,
    pub witness: Option<SteepnessWitness>,
}

/// Finite-sample certificate that `u` is steeper than `v`: for every pair of
/// sampled times and every crossing `x1` of `u(t1, .)` and `v(t2, .)`,
/// `u >= v - tol` left of `x1` and `u <= v + tol` right of it.
pub fn is_steeper(u_family: &[Profile], v_family: &[Profile], tol: f64) -> Result<SteepnessVerdict, SteepnessError> {
    let first = u_family.first().ok_or(SteepnessError::EmptyFamily)?;
    if v_family.is_empty() {
        return Err(SteepnessError::EmptyFamily);
    }
    let grid = first.grid;
    if u_family.iter().chain(v_family).any(|p| p.grid != grid) {
        return Err(SteepnessError::GridMismatch);
    }
    let mut verdict = SteepnessVerdict { steeper: true, pairs_checked: 0, max_crossings: 0, witness: None };
    for (i, u) in u_family.iter().enumerate() {
        for (j, v) in v_family.iter().enumerate() {
            verdict.pairs_checked += 1;
            if let Some(w) = pair_violation(&grid, &u.values, &v.values, tol, &mut verdict.max_crossings) {
                verdict.steeper = false;
                verdict.witness = Some(SteepnessWitness { t1_index: i, t2_index: j, ..w });
                return Ok(verdict);
            }
        }
    }
    Ok(verdict)
}

/// Steepness check on raw value slices sampled on `grid`.
pub(crate) fn pair_violation(
    grid: &Grid,
    u: &[f64],
    v: &[f64],
    tol: f64,
    max_crossings: &mut usize,
) -> Option<SteepnessWitness> {
    let report = diff_on(grid, u, v, tol);
    *max_crossings = (*max_crossings).max(report.count);
    for &xc in &report.crossing_positions {
        for i in 0..u.len() {
            let x = grid.x(i);
            let d = u[i] - v[i];
            let excess = if x < xc { -d } else if x > xc { d } else { 0.0 };
            if excess > tol {
                return Some(SteepnessWitness { t1_index: 0, t2_index: 0, x: xc, at: x, excess });
            }
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroNumberViolation {
    pub t_before: f64,
    pub t_after: f64,
    pub count_before: usize,
    pub count_after: usize,
}

/// Sign-change counts between two runs at their common snapshot steps, and
/// every place where the count grew.
pub fn zero_number_monitor(
    run_u: &Run,
    run_v: &Run,
    tie_tol: f64,
) -> Result<(Vec<usize>, Vec<ZeroNumberViolation>), SteepnessError> {
    if run_u.grid != run_v.grid || run_u.dt != run_v.dt {
        return Err(SteepnessError::GridMismatch);
    }
    let mut counts = Vec::new();
    let mut times = Vec::new();
    let mut j = 0;
    for su in &run_u.snapshots {
        while j < run_v.snapshots.len() && run_v.snapshots[j].step < su.step {
            j += 1;
        }
        if j < run_v.snapshots.len() && run_v.snapshots[j].step == su.step {
            counts.push(diff_on(&run_u.grid, &su.values, &run_v.snapshots[j].values, tie_tol).count);
            times.push(su.time);
        }
    }
    if counts.is_empty() {
        return Err(SteepnessError::UnsynchronizedRuns);
    }
    let violations = violations_of(&counts, &times);
    Ok((counts, violations))
}

fn violations_of(counts: &[usize], times: &[f64]) -> Vec<ZeroNumberViolation> {
    counts
        .windows(2)
        .zip(times.windows(2))
        .filter(|(c, _)| c[1] > c[0])
        .map(|(c, t)| ZeroNumberViolation { t_before: t[0], t_after: t[1], count_before: c[0], count_after: c[1] })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LockstepReport {
    pub steps: usize,
    pub initial_count: usize,
    pub final_count: usize,
    pub max_count: usize,
    pub violations: Vec<ZeroNumberViolation>,
    /// Largest `u - v` seen, useful when the pair starts ordered.
    pub max_excess: f64,
    /// Time of a range escape that ended the pair early (negative controls
    /// with a non-monotone step).
    pub aborted_at: Option<f64>,
}

/// Evolves two data with the same stepper and checks the sign-change count
/// after every single step. A range escape stops the pair and is recorded.
pub fn lockstep_zero_number(
    stepper: &Stepper<'_>,
    u0: &Profile,
    v0: &Profile,
    steps: usize,
    tie_tol: f64,
) -> Result<LockstepReport, SteepnessError> {
    let grid = *stepper.grid();
    if u0.grid != grid || v0.grid != grid {
        return Err(SteepnessError::GridMismatch);
    }
    let mut u = u0.values.clone();
    let mut v = v0.values.clone();
    let dt = stepper.dt();
    let excess = |u: &[f64], v: &[f64]| u.iter().zip(v).fold(f64::NEG_INFINITY, |m, (a, b)| m.max(a - b));
    let c0 = diff_on(&grid, &u, &v, tie_tol).count;
    let mut report = LockstepReport {
        steps,
        initial_count: c0,
        final_count: c0,
        max_count: c0,
        violations: Vec::new(),
        max_excess: excess(&u, &v),
        aborted_at: None,
    };
    let mut prev = c0;
    for k in 0..steps {
        let t = k as f64 * dt;
        match stepper.step_in_place(&mut u, t).and_then(|_| stepper.step_in_place(&mut v, t)) {
            Ok(()) => {}
            Err(EvolveError::RangeEscape { .. } | EvolveError::NonFinite { .. }) => {
                report.aborted_at = Some(t + dt);
                break;
            }
            Err(e) => return Err(e.into()),
        }
        let c = diff_on(&grid, &u, &v, tie_tol).count;
        if c > prev {
            report.violations.push(ZeroNumberViolation {
                t_before: t,
                t_after: t + dt,
                count_before: prev,
                count_after: c,
            });
        }
        report.max_count = report.max_count.max(c);
        report.max_excess = report.max_excess.max(excess(&u, &v));
        prev = c;
    }
    report.final_count = prev;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Grid;

    fn grid() -> Grid {
        Grid::line(1.0, 20, 4, 4).unwrap()
    }

    #[test]
    fn identical_profiles() {
        let g = grid();
        let u = Profile::from_fn(g, |x| libm::tanh(-x)).unwrap();
        let r = sign_change_count(&u, &u, DEFAULT_TIE_TOL).unwrap();
        assert_eq!(r.count, 0);
        assert!(r.identical);
    }

    #[test]
    fn odd_profile_crosses_zero_once_at_origin() {
        let g = Grid::line(1.0, 20, 4, 4).unwrap();
        let u = Profile::from_fn(g, |x| libm::tanh(-x)).unwrap();
        let z = Profile::constant(g, 0.0);
        let r = sign_change_count(&u, &z, DEFAULT_TIE_TOL).unwrap();
        assert_eq!(r.count, 1);
        assert!(r.crossing_positions[0].abs() <= g.dx() / 2.0);
        // tanh(0) = 0 is a tie at the node; the crossing is still found
        assert!(!r.degenerate_flags[0]);
    }

    #[test]
    fn long_tied_runs_are_flagged() {
        let d = [1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0];
        let r = crossings_of(&d, |i| i as f64, 1e-10);
        assert_eq!(r.count, 2);
        assert_eq!(r.degenerate_flags, [true, false]);
        assert_eq!(r.crossing_positions, [2.0, 5.0]);
    }

    #[test]
    fn scaled_tanh_is_less_steep() {
        let g = grid();
        let u = Profile::from_fn(g, |x| libm::tanh(-x)).unwrap();
        let v = Profile::from_fn(g, |x| libm::tanh(-x / 2.0)).unwrap();
        let fwd = is_steeper(&[u.clone()], &[v.clone()], 1e-12).unwrap();
        assert!(fwd.steeper);
        let back = is_steeper(&[v], &[u], 1e-12).unwrap();
        assert!(!back.steeper);
        assert!(back.witness.is_some());
    }

    #[test]
    fn double_crossing_fails_with_witness() {
        let g = grid();
        let u = Profile::from_fn(g, |x| 0.5 * libm::sin(x)).unwrap();
        let v = Profile::from_fn(g, |x| 0.1 * x).unwrap();
        let verdict = is_steeper(&[u], &[v], 1e-12).unwrap();
        assert!(!verdict.steeper);
        assert!(verdict.max_crossings >= 2);
        let w = verdict.witness.unwrap();
        assert_eq!((w.t1_index, w.t2_index), (0, 0));
    }

    #[test]
    fn families_on_different_grids_are_rejected() {
        let u = Profile::constant(grid(), 0.0);
        let v = Profile::constant(Grid::line(1.0, 16, 4, 4).unwrap(), 0.0);
        assert_eq!(is_steeper(&[u], &[v], 0.0), Err(SteepnessError::GridMismatch));
    }
}
