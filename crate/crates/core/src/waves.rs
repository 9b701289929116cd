//! Pulsating travelling waves recovered from a run in the crossing-anchored
//! frame `u(tau_n + s, z + n L)`, their certificates, profile comparison up to
//! time shifts, and the steepness/speed relation.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::Serialize;

use crate::evolve::{EvolveError, Run, Stepper};
use crate::model::{Grid, Profile};
use crate::stationary::{CertificateStatus, EquilibriaLadder};
use crate::steepness::{is_steeper, SteepnessVerdict};
use crate::terrace::{CrossingSeries, Direction, SpeedEstimate};

#[derive(Debug, Clone, PartialEq)]
pub enum WaveError {
    /// No anchor site leaves room for the frames in time and space.
    NoAnchor,
    SeriesTooShort,
    Evolve(EvolveError),
}

impl fmt::Display for WaveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WaveError::NoAnchor => write!(f, "no crossing site leaves room for the wave frames"),
            WaveError::SeriesTooShort => write!(f, "crossing series too short for the Cauchy certificate"),
            WaveError::Evolve(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for WaveError {}

impl From<EvolveError> for WaveError {
    fn from(e: EvolveError) -> Self {
        WaveError::Evolve(e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaveConfig {
    /// Frames per time period `L / |c|`.
    pub frames_per_period: usize,
    pub wave_tol: f64,
    pub asym_tol: f64,
    /// Cauchy certificate compares anchors `n` and `n - lag`.
    pub cauchy_lag: i64,
    /// Share of the window on each side used for the asymptotic residuals.
    pub outer_fraction: f64,
    pub max_window_periods: usize,
    /// Windows narrower than this are not attempted.
    pub min_window_periods: usize,
}

impl Default for WaveConfig {
    fn default() -> Self {
        Self {
            frames_per_period: 16,
            wave_tol: 1e-3,
            asym_tol: 1e-3,
            cauchy_lag: 4,
            outer_fraction: 0.2,
            max_window_periods: 40,
            min_window_periods: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PulsatingWave {
    pub speed: f64,
    pub ci: f64,
    pub alpha: f64,
    pub direction: Direction,
    /// Time period `L / |c|` (mean of the late crossing gaps).
    pub time_period: f64,
    pub anchor_site: i64,
    pub anchor_time: f64,
    /// Frame `j` is `u(anchor_time + frame_times[j], z + anchor_site L)`.
    pub frame_times: Vec<f64>,
    pub frames: Vec<Vec<f64>>,
    pub cells_per_period: usize,
    pub period: f64,
    /// `z` of the first frame node, in periods (negative).
    pub z_first_period: i64,
    pub window_periods: usize,
    pub upper_rung: usize,
    pub lower_rung: usize,
    pub upper_profile: Vec<f64>,
    pub lower_profile: Vec<f64>,
    pub pulsating_residual: f64,
    pub cauchy_residual: f64,
    pub left_asymptotic_residual: f64,
    pub right_asymptotic_residual: f64,
    /// `U(t, z + L) <= U(t, z)` at every frame.
    pub spatially_ordered: bool,
    /// Reported only: not implied in heterogeneous media.
    pub monotone_in_x: bool,
    pub accepted: bool,
    pub rejections: Vec<String>,
}

impl PulsatingWave {
    pub fn len(&self) -> usize {
        self.frames.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> f64 {
        self.period / self.cells_per_period as f64
    }

    pub fn z(&self, k: usize) -> f64 {
        (self.z_first_period * self.cells_per_period as i64 + k as i64) as f64 * self.dx()
    }

    fn sign(&self) -> i64 {
        match self.direction {
            Direction::Rightward => 1,
            Direction::Leftward => -1,
        }
    }

    /// Frame at relative time `s` in `[0, 2 T]`, linear in time between frames.
    pub fn frame_at(&self, s: f64) -> Vec<f64> {
        let h = self.time_period / self.frames_per_period() as f64;
        let last = self.frames.len() - 1;
        let pos = (s / h).clamp(0.0, last as f64);
        let j = (libm::floor(pos) as usize).min(last.saturating_sub(1));
        let w = pos - j as f64;
        self.frames[j].iter().zip(&self.frames[j + 1]).map(|(a, b)| a + w * (b - a)).collect()
    }

    fn frames_per_period(&self) -> usize {
        (self.frames.len() - 1) / 2
    }

    /// The frames of one time period as profiles on a line grid whose
    /// coordinates are the relative `z`, cropped to `[lo, hi]` periods.
    pub fn period_profiles(&self, lo: i64, hi: i64) -> Vec<Profile> {
        let n = self.cells_per_period as i64;
        let grid = Grid::line(self.period, self.cells_per_period, (-lo) as usize, hi as usize)
            .expect("window spans at least one period on each side");
        let start = ((lo - self.z_first_period) * n) as usize;
        let len = grid.len();
        (0..=self.frames_per_period())
            .map(|j| Profile {
                grid,
                values: self.frames[j][start..start + len].to_vec(),
                time: self.frame_times[j],
            })
            .collect()
    }

    /// Range of `z` covered, in whole periods.
    pub fn z_range(&self) -> (i64, i64) {
        (self.z_first_period, self.z_first_period + 2 * self.window_periods as i64)
    }
}

fn tile(profile: &[f64], k_node: i64) -> f64 {
    let n = profile.len() as i64;
    profile[k_node.rem_euclid(n) as usize]
}

/// Extracts the wave carried by `series` from `run`. Frames are recomputed
/// exactly by replaying the stepper from stored snapshots. The wave is
/// returned even when a certificate fails; `accepted` and `rejections`
/// record the outcome.
#[allow(clippy::too_many_arguments)]
pub fn extract_wave(
    run: &Run,
    stepper: &Stepper<'_>,
    series: &CrossingSeries,
    speed: &SpeedEstimate,
    ladder: &EquilibriaLadder,
    rungs: (usize, usize),
    window_periods: usize,
    cfg: &WaveConfig,
) -> Result<PulsatingWave, WaveError> {
    let grid = run.grid;
    let n_cells = grid.cells_per_period() as i64;
    let l = grid.period();
    let sgn: i64 = match series.direction {
        Direction::Rightward => 1,
        Direction::Leftward => -1,
    };
    let gaps = series.late_gaps();
    if gaps.is_empty() || series.sites.len() <= cfg.cauchy_lag as usize {
        return Err(WaveError::SeriesTooShort);
    }
    let period_t = crate::stats::mean(&gaps);
    let m = cfg.frames_per_period;
    let frame_times: Vec<f64> = (0..=2 * m).map(|j| j as f64 * period_t / m as f64).collect();

    // Room (in periods) around center site c inside the domain minus the guard.
    let guard = stepper.config().guard_periods as i64;
    let lo_site = -(grid.periods_left() as i64) + guard;
    let hi_site = grid.periods_right() as i64 - guard;
    let room = |c: i64| (c - lo_site).min(hi_site - c);

    let want = window_periods.min(cfg.max_window_periods) as i64;
    let mut best: Option<(i64, usize, i64)> = None;
    for (idx, &n) in series.sites.iter().enumerate() {
        let tau = series.taus[idx];
        if tau + 2.0 * period_t > run.final_time() {
            continue;
        }
        let back = n - sgn * cfg.cauchy_lag;
        if !series.sites.contains(&back) {
            continue;
        }
        let w = want.min(room(n + sgn)).min(room(back + sgn));
        if w < cfg.min_window_periods as i64 {
            continue;
        }
        let better = match best {
            None => true,
            Some((_, _, bw)) => w >= bw,
        };
        if better {
            best = Some((n, idx, w));
        }
    }
    let (anchor, anchor_idx, w) = best.ok_or(WaveError::NoAnchor)?;
    let back = anchor - sgn * cfg.cauchy_lag;
    let back_idx = series.sites.iter().position(|s| *s == back).expect("checked above");

    let capture = |site: i64, tau: f64, count: usize| -> Result<Vec<Vec<f64>>, WaveError> {
        let center = grid.site_node(site + sgn).expect("anchor inside grid") as i64;
        let first = (center - w * n_cells) as usize;
        let last = (center + w * n_cells) as usize;
        let times: Vec<f64> = frame_times[..count].iter().map(|s| tau + s).collect();
        let profiles = run.profiles_at(&times, stepper)?;
        Ok(profiles.into_iter().map(|p| p.values[first..=last].to_vec()).collect())
    };
    let frames = capture(anchor, series.taus[anchor_idx], 2 * m + 1)?;
    let older = capture(back, series.taus[back_idx], m + 1)?;

    let (upper_rung, lower_rung) = rungs;
    let upper = ladder.rungs[upper_rung].profile.clone();
    let lower = ladder.rungs[lower_rung].profile.clone();
    let z_first = sgn - w;
    let len = frames[0].len();
    // phase of frame node k equals phase of z = z_first L + k dx, i.e. k mod N
    let mut pulsating: f64 = 0.0;
    let shift = (sgn * n_cells) as isize;
    for j in 0..=m {
        for k in 0..len {
            let k2 = k as isize + shift;
            if k2 < 0 || k2 >= len as isize {
                continue;
            }
            pulsating = pulsating.max((frames[j + m][k2 as usize] - frames[j][k]).abs());
        }
    }
    let mut cauchy: f64 = 0.0;
    for j in 0..=m {
        for k in 0..len {
            cauchy = cauchy.max((frames[j][k] - older[j][k]).abs());
        }
    }
    let outer = ((len as f64 * cfg.outer_fraction) as usize).max(1);
    let mut left_res: f64 = 0.0;
    let mut right_res: f64 = 0.0;
    for fr in &frames {
        for k in 0..outer {
            left_res = left_res.max((fr[k] - tile(&upper, k as i64)).abs());
        }
        for k in len - outer..len {
            right_res = right_res.max((fr[k] - tile(&lower, k as i64)).abs());
        }
    }
    let n = n_cells as usize;
    let spatially_ordered = frames.iter().all(|fr| (0..len - n).all(|k| fr[k + n] <= fr[k] + 1e-9));
    let monotone_in_x = frames.iter().all(|fr| fr.windows(2).all(|p| p[1] <= p[0] + 1e-9));

    let mut rejections = Vec::new();
    if pulsating > cfg.wave_tol {
        rejections.push(alloc::format!("pulsating residual {pulsating:.3e} > {:.0e}", cfg.wave_tol));
    }
    if cauchy > cfg.wave_tol {
        rejections.push(alloc::format!("Cauchy residual {cauchy:.3e} > {:.0e}", cfg.wave_tol));
    }
    if left_res > cfg.asym_tol || right_res > cfg.asym_tol {
        rejections.push(alloc::format!(
            "asymptotic residuals {left_res:.3e} / {right_res:.3e} > {:.0e}",
            cfg.asym_tol
        ));
    }
    if !spatially_ordered {
        rejections.push(String::from("frames violate u(z + L) <= u(z)"));
    }

    Ok(PulsatingWave {
        speed: speed.c,
        ci: speed.ci,
        alpha: series.alpha,
        direction: series.direction,
        time_period: period_t,
        anchor_site: anchor,
        anchor_time: series.taus[anchor_idx],
        frame_times,
        frames,
        cells_per_period: n,
        period: l,
        z_first_period: z_first,
        window_periods: w as usize,
        upper_rung,
        lower_rung,
        upper_profile: upper,
        lower_profile: lower,
        pulsating_residual: pulsating,
        cauchy_residual: cauchy,
        left_asymptotic_residual: left_res,
        right_asymptotic_residual: right_res,
        spatially_ordered,
        monotone_in_x,
        accepted: rejections.is_empty(),
        rejections,
    })
}

/// Overlap of the `z` ranges of two waves, in whole periods.
fn overlap(w1: &PulsatingWave, w2: &PulsatingWave) -> Option<(i64, i64)> {
    let (a1, b1) = w1.z_range();
    let (a2, b2) = w2.z_range();
    let lo = a1.max(a2).min(-1);
    let hi = b1.min(b2).max(1);
    (lo >= a1.max(a2) && hi <= b1.min(b2) && hi > lo).then_some((lo, hi))
}

fn slice(w: &PulsatingWave, values: &[f64], lo: i64, hi: i64) -> Vec<f64> {
    let n = w.cells_per_period as i64;
    let start = ((lo - w.z_first_period) * n) as usize;
    let end = ((hi - w.z_first_period) * n) as usize;
    values[start..=end].to_vec()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeShift {
    /// `w1(t + shift, z + periods L) ~ w2(t, z)`.
    pub shift: f64,
    pub periods: i64,
    pub distance: f64,
}

/// Largest whole-period offset tried by [`optimal_time_shift`].
pub const MAX_PERIOD_OFFSET: i64 = 4;

/// Best time shift `s` in one period, combined with a whole-period offset
/// in `z`, making `w1` match `w2`. Coarse scan refined with golden-section
/// search.
pub fn optimal_time_shift(w1: &PulsatingWave, w2: &PulsatingWave) -> Option<TimeShift> {
    if w1.cells_per_period != w2.cells_per_period || (w1.period - w2.period).abs() > 1e-12 {
        return None;
    }
    let k_max = MAX_PERIOD_OFFSET;
    let (a1, b1) = w1.z_range();
    let (a2, b2) = w2.z_range();
    let lo = a2.max(a1 + k_max);
    let hi = b2.min(b1 - k_max);
    if hi <= lo {
        return None;
    }
    let m = w2.frames_per_period();
    let targets: Vec<(f64, Vec<f64>)> =
        (0..=m).map(|j| (w2.frame_times[j], slice(w2, &w2.frames[j], lo, hi))).collect();
    let dist = |k: i64, s: f64| -> f64 {
        let mut d: f64 = 0.0;
        for (t, target) in &targets {
            let fr = w1.frame_at(t + s);
            let a = slice(w1, &fr, lo + k, hi + k);
            for (x, y) in a.iter().zip(target) {
                d = d.max((x - y).abs());
            }
        }
        d
    };
    let period = w1.time_period.min(2.0 * w1.time_period - targets.last()?.0);
    let scan = 64;
    let h = period / scan as f64;
    let (mut best_k, mut best_s, mut best_d) = (0, 0.0, f64::INFINITY);
    for k in -k_max..=k_max {
        for i in 0..scan {
            let s = i as f64 * h;
            let d = dist(k, s);
            if d < best_d {
                (best_k, best_s, best_d) = (k, s, d);
            }
        }
    }
    let f = |s: f64| dist(best_k, s);
    let (mut a, mut b) = ((best_s - h).max(0.0), (best_s + h).min(period));
    let g = 0.5 * (libm::sqrt(5.0) - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..40 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let (s, v) = if fc < fd { (c, fc) } else { (d, fd) };
    let (s, v) = if v < best_d { (s, v) } else { (best_s, best_d) };
    Some(TimeShift { shift: s, periods: best_k, distance: v })
}

/// Steepness of `w1` against `w2` over one time period of each, on the
/// common part of their windows.
pub fn wave_steepness(w1: &PulsatingWave, w2: &PulsatingWave, tol: f64) -> Option<SteepnessVerdict> {
    let (lo, hi) = overlap(w1, w2)?;
    is_steeper(&w1.period_profiles(lo, hi), &w2.period_profiles(lo, hi), tol).ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Orientation {
    /// Shared upper state is stable: the steeper wave is the slower one.
    TopStable,
    /// Shared lower state is stable: the steeper wave is the faster one.
    BottomStable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum VerdictStatus {
    Pass,
    Fail(String),
    Skipped(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedSteepnessVerdict {
    pub status: VerdictStatus,
    pub c1: f64,
    pub c2: f64,
    pub slack: f64,
    pub w1_steeper: bool,
    pub w2_steeper: bool,
    pub identity: Option<TimeShift>,
}

/// Checks the steepness/speed relation between two waves sharing a stable
/// platform, and identity up to a time shift when the speeds coincide.
pub fn speed_steepness_test(
    w1: &PulsatingWave,
    w2: &PulsatingWave,
    orientation: Orientation,
    certificate: Option<CertificateStatus>,
    identity_tol: f64,
    tie_tol: f64,
) -> SpeedSteepnessVerdict {
    let slack = w1.ci + w2.ci;
    let mut v = SpeedSteepnessVerdict {
        status: VerdictStatus::Pass,
        c1: w1.speed,
        c2: w2.speed,
        slack,
        w1_steeper: false,
        w2_steeper: false,
        identity: None,
    };
    if certificate != Some(CertificateStatus::Certified) {
        v.status = VerdictStatus::Skipped(String::from("hypothesis unmet: shared state not certified stable"));
        return v;
    }
    let (a, b) = match orientation {
        Orientation::TopStable => (&w1.upper_profile, &w2.upper_profile),
        Orientation::BottomStable => (&w1.lower_profile, &w2.lower_profile),
    };
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| (x - y).abs() > 1e-6) {
        v.status = VerdictStatus::Skipped(String::from("hypothesis unmet: waves do not share the platform"));
        return v;
    }
    let (Some(s12), Some(s21)) = (wave_steepness(w1, w2, tie_tol), wave_steepness(w2, w1, tie_tol)) else {
        v.status = VerdictStatus::Skipped(String::from("waves have no common window"));
        return v;
    };
    v.w1_steeper = s12.steeper;
    v.w2_steeper = s21.steeper;
    // orient so that "slower" means smaller c for TopStable and larger for BottomStable
    let slower = |x: f64, y: f64| match orientation {
        Orientation::TopStable => x <= y + slack,
        Orientation::BottomStable => x >= y - slack,
    };
    if v.w1_steeper && !slower(w1.speed, w2.speed) {
        v.status = VerdictStatus::Fail(alloc::format!("steeper wave 1 has c = {} vs {}", w1.speed, w2.speed));
        return v;
    }
    if v.w2_steeper && !slower(w2.speed, w1.speed) {
        v.status = VerdictStatus::Fail(alloc::format!("steeper wave 2 has c = {} vs {}", w2.speed, w1.speed));
        return v;
    }
    if (w1.speed - w2.speed).abs() <= slack && w1.speed != 0.0 && w2.speed != 0.0 && (v.w1_steeper || v.w2_steeper) {
        let id = optimal_time_shift(w1, w2);
        v.identity = id;
        match id {
            Some(t) if t.distance <= identity_tol => {}
            Some(t) => {
                v.status = VerdictStatus::Fail(alloc::format!(
                    "equal speeds but profiles differ by {:.3e} after optimal shift",
                    t.distance
                ));
            }
            None => v.status = VerdictStatus::Skipped(String::from("profiles not comparable")),
        }
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ZeroSpeedLabel {
    Moving,
    StationaryLike,
    Unresolved,
}

/// Rightmost crossing of `u` with the phase-wise mid level between `upper`
/// and `lower`, linearly interpolated.
pub fn interface_position(values: &[f64], grid: &Grid, upper: &[f64], lower: &[f64]) -> Option<f64> {
    let d = |i: usize| {
        let ph = grid.phase(i);
        values[i] - 0.5 * (upper[ph] + lower[ph])
    };
    let n = values.len();
    (0..n - 1).rev().find(|&i| d(i) >= 0.0 && d(i + 1) < 0.0).map(|i| {
        let (a, b) = (d(i), d(i + 1));
        grid.x(i) + grid.dx() * a / (a - b)
    })
}

/// Coarse classification of a front whose crossing series gave no speed:
/// displacement of the mid-gap interface over the last half of the run.
pub fn zero_speed_probe(run: &Run, upper: &[f64], lower: &[f64]) -> ZeroSpeedLabel {
    let half = 0.5 * run.final_time();
    let positions: Vec<f64> = run
        .snapshots
        .iter()
        .filter(|s| s.time >= half)
        .filter_map(|s| interface_position(&s.values, &run.grid, upper, lower))
        .collect();
    if positions.len() < 2 {
        return ZeroSpeedLabel::Unresolved;
    }
    let dx = run.grid.dx();
    let disp = positions[positions.len() - 1] - positions[0];
    if disp.abs() < dx {
        return ZeroSpeedLabel::StationaryLike;
    }
    let tol = 1e-9;
    let up = positions.windows(2).all(|p| p[1] >= p[0] - tol);
    let down = positions.windows(2).all(|p| p[1] <= p[0] + tol);
    if up || down {
        ZeroSpeedLabel::Moving
    } else {
        ZeroSpeedLabel::Unresolved
    }
}

/// How far the wave is from a rigid translate: for each frame within one
/// period, the smallest sup-distance to a spatial translate of frame 0
/// (shifts sampled every `dx / 8` over two periods), maximized over frames.
/// Zero up to interpolation error in a homogeneous medium.
pub fn translate_distance(w: &PulsatingWave) -> f64 {
    let base = &w.frames[0];
    let len = base.len();
    let sub = 8usize;
    let max_shift = 2 * w.cells_per_period * sub;
    let sgn = w.sign() as f64;
    let shifted = |k: usize, xi_nodes: f64| -> Option<f64> {
        let pos = k as f64 - xi_nodes;
        if pos < 0.0 || pos > (len - 1) as f64 {
            return None;
        }
        let i = (libm::floor(pos) as usize).min(len - 2);
        let t = pos - i as f64;
        Some(base[i] + t * (base[i + 1] - base[i]))
    };
    let mut worst: f64 = 0.0;
    for fr in w.frames.iter().take(w.frames_per_period() + 1).skip(1) {
        let mut best = f64::INFINITY;
        for step in 0..=max_shift {
            let xi = sgn * step as f64 / sub as f64;
            let mut d: f64 = 0.0;
            for (k, v) in fr.iter().enumerate() {
                if let Some(b) = shifted(k, xi) {
                    d = d.max((v - b).abs());
                }
            }
            best = best.min(d);
        }
        worst = worst.max(best);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `(1 - tanh(xi)) / 2` moving right at speed 1/2, sampled the way the
    /// extractor stores frames.
    fn tanh_wave(anchor_site: i64, anchor_time: f64) -> PulsatingWave {
        let (cells, m, window) = (50usize, 16usize, 10usize);
        let (c, period_t) = (0.5, 2.0);
        let frame_times: Vec<f64> = (0..=2 * m).map(|j| j as f64 * period_t / m as f64).collect();
        let z_first = -(window as i64);
        let frames = frame_times
            .iter()
            .map(|t| {
                (0..=2 * window * cells)
                    .map(|k| {
                        let z = (z_first * cells as i64 + k as i64) as f64 / cells as f64;
                        0.5 * (1.0 - libm::tanh(z + anchor_site as f64 - c * (anchor_time + t)))
                    })
                    .collect()
            })
            .collect();
        PulsatingWave {
            speed: c,
            ci: 1e-6,
            alpha: 0.5,
            direction: Direction::Rightward,
            time_period: period_t,
            anchor_site,
            anchor_time,
            frame_times,
            frames,
            cells_per_period: cells,
            period: 1.0,
            z_first_period: z_first,
            window_periods: window,
            upper_rung: 0,
            lower_rung: 1,
            upper_profile: vec![1.0; cells],
            lower_profile: vec![0.0; cells],
            pulsating_residual: 0.0,
            cauchy_residual: 0.0,
            left_asymptotic_residual: 0.0,
            right_asymptotic_residual: 0.0,
            spatially_ordered: true,
            monotone_in_x: true,
            accepted: true,
            rejections: Vec::new(),
        }
    }

    #[test]
    fn shift_needing_a_period_offset() {
        let w1 = tanh_wave(5, 10.0);
        let w2 = tanh_wave(8, 19.3);
        // w1(t + s, z + k) = w2(t, z) iff k - s / 2 = -1.65
        let t = optimal_time_shift(&w1, &w2).unwrap();
        assert_eq!(t.periods, -1);
        assert!((t.shift - 1.3).abs() < 1e-3, "{t:?}");
        assert!(t.distance < 1e-3, "{t:?}");
    }

    #[test]
    fn identical_waves_need_no_shift() {
        let w = tanh_wave(3, 4.0);
        let t = optimal_time_shift(&w, &w).unwrap();
        assert_eq!(t.periods, 0);
        assert!(t.distance < 1e-12);
    }
}
