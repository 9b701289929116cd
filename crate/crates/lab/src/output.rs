//! CSV and JSON writers, and the flat report records written to disk.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use terrace_core::evolve::Run;
use terrace_core::model::Grid;
use terrace_core::stationary::{EquilibriaLadder, StationarySolution};
use terrace_core::terrace::{CrossingSeries, DriftReport, SpeedEstimate, SpeedOutcome, Terrace};
use terrace_core::waves::PulsatingWave;

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_columns(path: &Path, header: &[&str], columns: &[&[f64]]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(header)?;
    let rows = columns.first().map_or(0, |c| c.len());
    for i in 0..rows {
        w.write_record(columns.iter().map(|c| c[i].to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_profile(path: &Path, x: &[f64], u: &[f64]) -> Result<()> {
    write_columns(path, &["x", "u"], &[x, u])
}

pub fn write_series(path: &Path, series: &CrossingSeries) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["n", "tau"])?;
    for (n, tau) in series.sites.iter().zip(&series.taus) {
        w.write_record([n.to_string(), tau.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a two-column `x,u` file.
pub fn read_profile(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let header = r.headers()?.clone();
    if header.len() != 2 || &header[0] != "x" || &header[1] != "u" {
        bail!("{}: expected header x,u", path.display());
    }
    let mut x = Vec::new();
    let mut u = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        x.push(rec[0].trim().parse::<f64>()?);
        u.push(rec[1].trim().parse::<f64>()?);
    }
    Ok((x, u))
}

pub fn grid_x(grid: &Grid) -> Vec<f64> {
    (0..grid.len()).map(|i| grid.x(i)).collect()
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub period: f64,
    pub cells_per_period: usize,
    pub periods_left: usize,
    pub periods_right: usize,
    pub dx: f64,
}

impl From<&Grid> for GridSummary {
    fn from(g: &Grid) -> Self {
        Self {
            period: g.period(),
            cells_per_period: g.cells_per_period(),
            periods_left: g.periods_left(),
            periods_right: g.periods_right(),
            dx: g.dx(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSummary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub mu: f64,
    pub stability: String,
    pub residual: f64,
}

impl From<&StationarySolution> for StateSummary {
    fn from(s: &StationarySolution) -> Self {
        Self {
            mean: s.mean(),
            min: s.min(),
            max: s.max(),
            mu: s.mu,
            stability: format!("{:?}", s.stability),
            residual: s.residual_norm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderSummary {
    pub rungs: Vec<StateSummary>,
    pub margins: Vec<f64>,
    pub crossing: Vec<StateSummary>,
    pub seeds_tried: usize,
}

impl From<&EquilibriaLadder> for LadderSummary {
    fn from(l: &EquilibriaLadder) -> Self {
        Self {
            rungs: l.rungs.iter().map(StateSummary::from).collect(),
            margins: l.margins.clone(),
            crossing: l.crossing.iter().map(StateSummary::from).collect(),
            seeds_tried: l.seeds_tried,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedSummary {
    pub c: f64,
    pub ci: f64,
    pub slope_se: f64,
    pub drift: f64,
    pub cross_estimate: f64,
    pub sites_used: usize,
}

impl From<&SpeedEstimate> for SpeedSummary {
    fn from(s: &SpeedEstimate) -> Self {
        Self {
            c: s.c,
            ci: s.ci,
            slope_se: s.slope_se,
            drift: s.drift,
            cross_estimate: s.cross_estimate,
            sites_used: s.sites_used,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveSummary {
    pub speed: f64,
    pub ci: f64,
    pub alpha: f64,
    pub direction: String,
    pub time_period: f64,
    pub anchor_site: i64,
    pub window_periods: usize,
    pub pulsating_residual: f64,
    pub cauchy_residual: f64,
    pub left_asymptotic_residual: f64,
    pub right_asymptotic_residual: f64,
    pub spatially_ordered: bool,
    pub monotone_in_x: bool,
    pub accepted: bool,
    pub rejections: Vec<String>,
}

impl From<&PulsatingWave> for WaveSummary {
    fn from(w: &PulsatingWave) -> Self {
        Self {
            speed: w.speed,
            ci: w.ci,
            alpha: w.alpha,
            direction: format!("{:?}", w.direction),
            time_period: w.time_period,
            anchor_site: w.anchor_site,
            window_periods: w.window_periods,
            pulsating_residual: w.pulsating_residual,
            cauchy_residual: w.cauchy_residual,
            left_asymptotic_residual: w.left_asymptotic_residual,
            right_asymptotic_residual: w.right_asymptotic_residual,
            spatially_ordered: w.spatially_ordered,
            monotone_in_x: w.monotone_in_x,
            accepted: w.accepted,
            rejections: w.rejections.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontSummary {
    pub upper_level: f64,
    pub lower_level: f64,
    pub alpha: f64,
    pub direction: Option<String>,
    pub reached_sites: usize,
    pub speed: Option<SpeedSummary>,
    /// Set when no speed is reported.
    pub zero_speed: Option<String>,
    pub wave: Option<WaveSummary>,
    pub second_speed: Option<SpeedSummary>,
    pub second_wave: Option<WaveSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformSummary {
    pub rung: usize,
    pub state: StateSummary,
    pub x_lo: f64,
    pub x_hi: f64,
    pub periods: usize,
    pub earlier_periods: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerraceSummary {
    pub grid: GridSummary,
    pub dt: f64,
    pub horizon: f64,
    pub platforms: Vec<PlatformSummary>,
    pub fronts: Vec<FrontSummary>,
    pub zero_speed_flag: bool,
    pub verified: bool,
    pub checks: Vec<CheckSummary>,
    pub assumption1: String,
    pub assumption2: String,
}

impl TerraceSummary {
    pub fn new(t: &Terrace, ladder: &EquilibriaLadder) -> Self {
        let level = |k: usize| ladder.rungs[k].mean();
        let fronts = t
            .fronts
            .iter()
            .map(|f| FrontSummary {
                upper_level: level(f.upper_rung),
                lower_level: level(f.lower_rung),
                alpha: f.alpha,
                direction: f.series.as_ref().map(|s| format!("{:?}", s.direction)),
                reached_sites: f.series.as_ref().map_or(0, |s| s.sites.len()),
                speed: f.speed.speed().map(SpeedSummary::from),
                zero_speed: match &f.speed {
                    SpeedOutcome::Speed(_) => None,
                    SpeedOutcome::ZeroSpeed { reached, diverging } => Some(format!(
                        "{} sites reached{}, probe {:?}",
                        reached,
                        if *diverging { ", gaps diverging" } else { "" },
                        f.zero_speed_label
                    )),
                },
                wave: f.wave.as_ref().map(WaveSummary::from),
                second_speed: f.second_speed.as_ref().map(SpeedSummary::from),
                second_wave: f.second_wave.as_ref().map(WaveSummary::from),
            })
            .collect();
        Self {
            grid: GridSummary::from(&t.grid),
            dt: t.dt,
            horizon: t.horizon,
            platforms: t
                .platforms
                .iter()
                .zip(&t.platform_profiles)
                .map(|(p, s)| PlatformSummary {
                    rung: p.rung,
                    state: StateSummary::from(s),
                    x_lo: p.x_lo,
                    x_hi: p.x_hi,
                    periods: p.periods,
                    earlier_periods: p.earlier_periods,
                })
                .collect(),
            fronts,
            zero_speed_flag: t.zero_speed_flag,
            verified: t.verified(),
            checks: t
                .checks
                .iter()
                .map(|c| CheckSummary { name: c.name.clone(), passed: c.passed, detail: c.detail.clone() })
                .collect(),
            assumption1: format!("{:?}", t.assumptions.assumption1),
            assumption2: format!("{:?}", t.assumptions.assumption2),
        }
    }

    pub fn speeds(&self) -> Vec<Option<f64>> {
        self.fronts.iter().map(|f| f.speed.as_ref().map(|s| s.c)).collect()
    }

    pub fn platform_levels(&self) -> Vec<f64> {
        self.platforms.iter().map(|p| p.state.mean).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontDriftSummary {
    pub front: usize,
    pub tail_slope: Option<f64>,
    pub final_ratio: Option<f64>,
    pub frame_residual_first: Option<f64>,
    pub frame_residual_last: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSummary {
    pub fronts: Vec<FrontDriftSummary>,
    pub gaps_nondecreasing: bool,
    pub gap_samples: Vec<usize>,
}

impl From<&DriftReport> for DriftSummary {
    fn from(d: &DriftReport) -> Self {
        Self {
            fronts: d
                .fronts
                .iter()
                .map(|f| FrontDriftSummary {
                    front: f.front,
                    tail_slope: finite(f.tail_slope),
                    final_ratio: finite(f.final_ratio),
                    frame_residual_first: f.frame_residual.first().map(|p| p.1),
                    frame_residual_last: f.frame_residual.last().map(|p| p.1),
                })
                .collect(),
            gaps_nondecreasing: d.gaps_nondecreasing,
            gap_samples: d.gaps.iter().map(Vec::len).collect(),
        }
    }
}

/// Writes the files of a terrace bundle into `dir`: the JSON summary, the
/// crossing series, wave frames and plot data.
pub fn write_terrace_bundle(dir: &Path, terrace: &Terrace, ladder: &EquilibriaLadder, run: &Run, drift: &DriftReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_json(&dir.join("terrace.json"), &TerraceSummary::new(terrace, ladder))?;
    write_json(&dir.join("convergence.json"), &DriftSummary::from(drift))?;
    for (k, f) in terrace.fronts.iter().enumerate() {
        if let Some(s) = &f.series {
            write_series(&dir.join(format!("crossings_{}.csv", k + 1)), s)?;
        }
        if let Some(w) = &f.wave {
            write_wave_frames(&dir.join(format!("wave_{}", k + 1)), w)?;
        }
    }
    write_plot_data(&dir.join("plot"), run, 10)?;
    Ok(())
}

/// One `x,u` file per frame of one time period, `z` relative to the anchor.
pub fn write_wave_frames(dir: &Path, w: &PulsatingWave) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_json(&dir.join("wave.json"), &WaveSummary::from(w))?;
    let z: Vec<f64> = (0..w.len()).map(|k| w.z(k)).collect();
    let per_period = (w.frames.len() - 1) / 2;
    for j in 0..=per_period {
        write_profile(&dir.join(format!("frame_{j:02}.csv")), &z, &w.frames[j])?;
    }
    Ok(())
}

/// Two-column `x,u` files of `count` evenly spaced snapshots.
pub fn write_plot_data(dir: &Path, run: &Run, count: usize) -> Result<()> {
    fs::create_dir_all(dir)?;
    let x = grid_x(&run.grid);
    let n = run.snapshots.len();
    let picks: Vec<usize> = if n <= count {
        (0..n).collect()
    } else {
        let mut v: Vec<usize> = (0..count).map(|k| k * (n - 1) / (count - 1)).collect();
        v.dedup();
        v
    };
    for (k, i) in picks.into_iter().enumerate() {
        let s = &run.snapshots[i];
        write_profile(&dir.join(format!("snapshot_{k:02}_t{:.2}.csv", s.time)), &x, &s.values)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.csv");
        let x = [0.0, 0.5, 1.0];
        let u = [1.0, 0.25, 1e-17];
        write_profile(&p, &x, &u).unwrap();
        assert!(fs::read_to_string(&p).unwrap().starts_with("x,u\n"));
        let (x2, u2) = read_profile(&p).unwrap();
        assert_eq!(x2, x);
        assert_eq!(u2, u);
    }

    #[test]
    fn wrong_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.csv");
        fs::write(&p, "n,tau\n1,2\n").unwrap();
        assert!(read_profile(&p).is_err());
    }
}
