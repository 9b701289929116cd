//! The verification battery behind `terrace verify`.
//!
//! Every suite records raw numbers next to its pass/fail lines so that the
//! report can be checked independently. Nothing time- or thread-dependent
//! enters the report: random inputs are drawn from per-task seeds derived
//! from the global seed.

use anyhow::Result;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use terrace_core::evolve::{lipschitz_dt, Stepper, StepperConfig};
use terrace_core::model::{make_heaviside, Grid, Nonlinearity, PeriodicCoefficient, Profile, TrigSeries};
use terrace_core::stationary::{principal_eigenvalue, solve_stationary, CertificateStatus, StationaryConfig};
use terrace_core::steepness::{crossings_of, lockstep_zero_number, DEFAULT_TIE_TOL};
use terrace_core::terrace::{extract_terrace, Datum, Terrace};
use terrace_core::waves::{optimal_time_shift, speed_steepness_test, Orientation, PulsatingWave, VerdictStatus};

use crate::config::{CoefficientConfig, Kind, NonlinearityConfig, NumericsConfig};
use crate::output::TerraceSummary;
use crate::scenario::{all_scenarios, quadristable, run_scenario, Scenario, ScenarioReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Ordered pairs per reaction preset in the comparison fuzz.
    pub fuzz_pairs: usize,
    pub fuzz_horizon: f64,
    /// Periods on each side of the origin in the fuzz domain.
    pub fuzz_periods: usize,
    pub zero_number_pairs: usize,
    pub zero_number_horizon: f64,
    pub zero_number_periods: usize,
    /// Forces this time step everywhere (a negative control when it breaks
    /// the monotonicity bound).
    pub dt_override: Option<f64>,
    /// Grid refinement factor of the refinement check.
    pub refinement: usize,
    /// Subset of the scenario battery; all scenarios when absent.
    pub scenarios: Option<Vec<String>>,
    pub numerics: NumericsConfig,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            fuzz_pairs: 100,
            fuzz_horizon: 100.0,
            fuzz_periods: 3,
            zero_number_pairs: 3,
            zero_number_horizon: 20.0,
            zero_number_periods: 10,
            dt_override: None,
            refinement: 4,
            scenarios: None,
            numerics: NumericsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub bound: Option<f64>,
    pub detail: String,
}

fn record(name: &str, passed: bool, value: Option<f64>, bound: Option<f64>, detail: impl Into<String>) -> CheckRecord {
    CheckRecord { name: name.to_string(), passed, value, bound, detail: detail.into() }
}

fn at_most(name: &str, value: f64, bound: f64) -> CheckRecord {
    record(name, value <= bound, Some(value), Some(bound), "")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub passed: bool,
    pub checks: Vec<CheckRecord>,
}

impl SuiteReport {
    fn new(name: &str, checks: Vec<CheckRecord>) -> Self {
        Self { name: name.to_string(), passed: !checks.is_empty() && checks.iter().all(|c| c.passed), checks }
    }

    fn failure(name: &str, what: &str, err: impl std::fmt::Display) -> Self {
        Self::new(name, vec![record(what, false, None, None, err.to_string())])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzRecord {
    pub preset: String,
    pub pairs: usize,
    pub steps_per_pair: usize,
    pub violations: usize,
    pub worst_excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroNumberRecord {
    pub scenario: String,
    pub pair: usize,
    pub steps: usize,
    pub initial_count: usize,
    pub final_count: usize,
    pub max_count: usize,
    pub violations: usize,
    /// Steps where halving the tie tolerance changed the count.
    pub tie_mismatches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativeControlRecord {
    pub dt: f64,
    pub monotone_limit: f64,
    pub violations: usize,
    pub initial_count: usize,
    pub max_count: usize,
    pub aborted_at: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenRecord {
    pub constant_error: f64,
    pub dense_nodes: usize,
    pub dense_error: f64,
    pub perron_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteepnessRecord {
    pub kpp_speed: Option<(f64, f64)>,
    pub exponential_lambda: f64,
    pub exponential_speed: Option<(f64, f64)>,
    pub kpp_verdict: Option<String>,
    pub kpp_steeper: Option<bool>,
    pub bistable_shift_distance: Option<f64>,
    pub bistable_verdict: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementRecord {
    pub factor: usize,
    pub coarse: Option<(f64, f64)>,
    pub fine: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Details {
    pub comparison: Vec<FuzzRecord>,
    pub zero_number: Vec<ZeroNumberRecord>,
    pub negative_control: Option<NegativeControlRecord>,
    pub eigen: Option<EigenRecord>,
    pub balanced: Option<TerraceSummary>,
    pub steepness: Option<SteepnessRecord>,
    pub refinement: Option<RefinementRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub config: VerifyConfig,
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
    pub scenarios: Vec<ScenarioReport>,
    pub details: Details,
}

impl VerifyReport {
    pub fn suite(&self, name: &str) -> Option<&SuiteReport> {
        self.suites.iter().find(|s| s.name == name)
    }

    pub fn scenario(&self, name: &str) -> Option<&ScenarioReport> {
        self.scenarios.iter().find(|s| s.name == name)
    }
}

fn task_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from(index) << 20);
    rng
}

fn fuzz_presets() -> Vec<(String, NonlinearityConfig, CoefficientConfig)> {
    let mut periodic = NonlinearityConfig::bistable(0.25);
    periodic.modulation_eps = 0.2;
    vec![
        ("kpp".into(), NonlinearityConfig::new(Kind::Kpp), CoefficientConfig::default()),
        ("bistable".into(), NonlinearityConfig::bistable(0.25), CoefficientConfig::default()),
        (
            "ignition".into(),
            NonlinearityConfig { theta: Some(0.2), ..NonlinearityConfig::new(Kind::Ignition) },
            CoefficientConfig::default(),
        ),
        ("bistable-periodic".into(), periodic, CoefficientConfig::series(&[1.0, 0.2, 0.1])),
        ("quadristable".into(), NonlinearityConfig::stacked(quadristable([0.1, 0.2, 0.3])), CoefficientConfig::default()),
    ]
}

/// Smooth random profile with a little node noise, clamped to `[0, 1]`.
fn random_profile(rng: &mut ChaCha8Rng, grid: &Grid) -> Vec<f64> {
    let (lo, hi) = (grid.left_end(), grid.right_end());
    let bumps: Vec<(f64, f64, f64)> = (0..rng.gen_range(1..5))
        .map(|_| (rng.gen_range(lo..hi), rng.gen_range(0.2..3.0), rng.gen_range(0.0..1.0)))
        .collect();
    (0..grid.len())
        .map(|i| {
            let x = grid.x(i);
            let s: f64 = bumps.iter().map(|(c, w, h)| h * (-(x - c) * (x - c) / (w * w)).exp()).sum();
            (s + rng.gen_range(0.0..0.02)).clamp(0.0, 1.0)
        })
        .collect()
}

/// Independent uniform node values with the clamped end values.
fn noise_profile(rng: &mut ChaCha8Rng, n: usize, left: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    v[0] = left;
    v[n - 1] = 0.0;
    v
}

fn time_step(nl: &Nonlinearity, cfg: &VerifyConfig) -> f64 {
    cfg.dt_override.unwrap_or_else(|| lipschitz_dt(nl, (-0.1, 1.1), cfg.numerics.dt_fraction))
}

fn comparison_suite(cfg: &VerifyConfig, seed: u64, details: &mut Details) -> SuiteReport {
    let mut checks = Vec::new();
    for (k, (name, nlc, ac)) in fuzz_presets().into_iter().enumerate() {
        let built = nlc.build().and_then(|nl| Ok((ac.build(nlc.period)?, nl)));
        let (a, nl) = match built {
            Ok(v) => v,
            Err(e) => return SuiteReport::failure("comparison", &name, e),
        };
        let cells = match Grid::cells_for_spacing(nlc.period, cfg.numerics.dx) {
            Ok(c) => c,
            Err(e) => return SuiteReport::failure("comparison", &name, e),
        };
        let grid = Grid::line(nlc.period, cells, cfg.fuzz_periods, cfg.fuzz_periods).expect("valid fuzz grid");
        let dt = time_step(&nl, cfg);
        let stepper = match Stepper::new(grid, &nl, &a, StepperConfig::clamped(dt, vec![1.0; cells])) {
            Ok(s) => s,
            Err(e) => return SuiteReport::failure("comparison", &format!("{name}: stepper"), e),
        };
        let steps = (cfg.fuzz_horizon / dt).round() as usize;
        let results: Vec<Result<(usize, f64), String>> = (0..cfg.fuzz_pairs)
            .into_par_iter()
            .map(|pair| {
                let mut rng = task_rng(seed, 1 + k as u64, pair as u64);
                let mut v = random_profile(&mut rng, &grid);
                let dent = random_profile(&mut rng, &grid);
                let mut u: Vec<f64> = v.iter().zip(&dent).map(|(a, b)| (a - b).max(0.0)).collect();
                for w in [&mut u, &mut v] {
                    w[0] = 1.0;
                    *w.last_mut().unwrap() = 0.0;
                }
                let (mut bad, mut worst) = (0usize, f64::NEG_INFINITY);
                let mut t = 0.0;
                for _ in 0..steps {
                    stepper.step_in_place(&mut u, t).map_err(|e| e.to_string())?;
                    stepper.step_in_place(&mut v, t).map_err(|e| e.to_string())?;
                    t += dt;
                    let excess = u.iter().zip(&v).fold(f64::NEG_INFINITY, |m, (a, b)| m.max(a - b));
                    worst = worst.max(excess);
                    if excess > 1e-12 {
                        bad += 1;
                    }
                }
                Ok((bad, worst))
            })
            .collect();
        let mut rec = FuzzRecord { preset: name.clone(), pairs: cfg.fuzz_pairs, steps_per_pair: steps, violations: 0, worst_excess: f64::NEG_INFINITY };
        for r in results {
            match r {
                Ok((bad, worst)) => {
                    rec.violations += bad;
                    rec.worst_excess = rec.worst_excess.max(worst);
                }
                Err(e) => return SuiteReport::failure("comparison", &format!("{name}: step"), e),
            }
        }
        checks.push(record(
            &format!("{name}: ordered pairs stay ordered"),
            rec.violations == 0,
            Some(rec.violations as f64),
            Some(0.0),
            format!("{} pairs x {} steps, worst u - v = {:.3e}", rec.pairs, steps, rec.worst_excess),
        ));
        details.comparison.push(rec);
    }
    SuiteReport::new("comparison", checks)
}

fn zero_number_pair(stepper: &Stepper<'_>, u0: &[f64], v0: &[f64], steps: usize) -> Result<(usize, usize, usize, usize, usize), String> {
    let grid = *stepper.grid();
    let count = |u: &[f64], v: &[f64], tie: f64| {
        let d: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
        crossings_of(&d, |i| grid.x(i), tie).count
    };
    let (mut u, mut v) = (u0.to_vec(), v0.to_vec());
    let initial = count(&u, &v, DEFAULT_TIE_TOL);
    let (mut prev, mut max, mut violations, mut ties) = (initial, initial, 0, 0);
    let mut t = 0.0;
    for _ in 0..steps {
        stepper.step_in_place(&mut u, t).map_err(|e| e.to_string())?;
        stepper.step_in_place(&mut v, t).map_err(|e| e.to_string())?;
        t += stepper.dt();
        let c = count(&u, &v, DEFAULT_TIE_TOL);
        if c != count(&u, &v, 0.5 * DEFAULT_TIE_TOL) {
            ties += 1;
        }
        if c > prev {
            violations += 1;
        }
        max = max.max(c);
        prev = c;
    }
    Ok((initial, prev, max, violations, ties))
}

fn zero_number_suite(cfg: &VerifyConfig, scenarios: &[Scenario], seed: u64, details: &mut Details) -> SuiteReport {
    let mut checks = Vec::new();
    let results: Vec<Result<Vec<ZeroNumberRecord>, String>> = scenarios
        .par_iter()
        .enumerate()
        .map(|(k, s)| {
            let (nl, a) = s.problem.build().map_err(|e| e.to_string())?;
            let cells = s.problem.cells().map_err(|e| e.to_string())?;
            let scfg = StationaryConfig { cells, ..StationaryConfig::default() };
            let top = solve_stationary(&nl, &a, &vec![s.problem.top_guess; cells], &scfg).map_err(|e| e.to_string())?;
            let grid = Grid::line(a.period(), cells, cfg.zero_number_periods, cfg.zero_number_periods).map_err(|e| e.to_string())?;
            let dt = time_step(&nl, cfg);
            let stepper = Stepper::new(grid, &nl, &a, StepperConfig::clamped(dt, top.profile.clone())).map_err(|e| e.to_string())?;
            let u0 = make_heaviside(&grid, &top.profile, 0.0).map_err(|e| e.to_string())?;
            let steps = (cfg.zero_number_horizon / dt).round() as usize;
            let mut out = Vec::new();
            for pair in 0..cfg.zero_number_pairs {
                let mut rng = task_rng(seed, 100 + k as u64, pair as u64);
                let left = u0.values[0];
                // Heaviside against a smooth profile, then pairs of rough profiles
                let (a0, b0) = if pair == 0 {
                    let mut v = random_profile(&mut rng, &grid);
                    v[0] = left;
                    *v.last_mut().unwrap() = 0.0;
                    (u0.values.clone(), v)
                } else {
                    (noise_profile(&mut rng, grid.len(), left), noise_profile(&mut rng, grid.len(), left))
                };
                let (initial, last, max, violations, ties) = zero_number_pair(&stepper, &a0, &b0, steps)?;
                out.push(ZeroNumberRecord {
                    scenario: s.name.clone(),
                    pair,
                    steps,
                    initial_count: initial,
                    final_count: last,
                    max_count: max,
                    violations,
                    tie_mismatches: ties,
                });
            }
            Ok(out)
        })
        .collect();
    for (s, r) in scenarios.iter().zip(results) {
        match r {
            Ok(recs) => {
                let v: usize = recs.iter().map(|r| r.violations).sum();
                let t: usize = recs.iter().map(|r| r.tie_mismatches).sum();
                let counts: Vec<(usize, usize)> = recs.iter().map(|r| (r.initial_count, r.final_count)).collect();
                checks.push(record(
                    &format!("{}: sign changes never increase", s.name),
                    v == 0,
                    Some(v as f64),
                    Some(0.0),
                    format!("(initial, final) counts {counts:?}; {t} steps change count at half the tie tolerance"),
                ));
                details.zero_number.extend(recs);
            }
            Err(e) => checks.push(record(&format!("{}: setup", s.name), false, None, None, e)),
        }
    }
    checks.push(negative_control(seed, details));
    SuiteReport::new("zero-number", checks)
}

/// Bistable pair stepped with `dt` far above the monotonicity bound.
fn negative_control(seed: u64, details: &mut Details) -> CheckRecord {
    let name = "broken time step is detected";
    let run = || -> Result<NegativeControlRecord> {
        let nl = NonlinearityConfig::bistable(0.25).build()?;
        let a = PeriodicCoefficient::constant(1.0, 1.0)?;
        let grid = Grid::line(1.0, 50, 10, 10)?;
        let limit = 1.0 / nl.lipschitz_bound(-0.1, 1.1);
        let dt = 2.0;
        let stepper = Stepper::new_unchecked(grid, &nl, &a, StepperConfig::clamped(dt, vec![1.0; 50]))?;
        let u0 = make_heaviside(&grid, &[1.0; 50], 0.0)?;
        let mut rng = task_rng(seed, 999, 0);
        let v0 = Profile::new(grid, noise_profile(&mut rng, grid.len(), 1.0), 0.0)?;
        let rep = lockstep_zero_number(&stepper, &u0, &v0, 50, DEFAULT_TIE_TOL).map_err(|e| anyhow::anyhow!("{e}"))?;
        Ok(NegativeControlRecord {
            dt,
            monotone_limit: limit,
            violations: rep.violations.len(),
            initial_count: rep.initial_count,
            max_count: rep.max_count,
            aborted_at: rep.aborted_at,
        })
    };
    match run() {
        Ok(rec) => {
            let c = record(
                name,
                rec.violations >= 1,
                Some(rec.violations as f64),
                Some(1.0),
                format!("dt = {} against the bound {:.3}", rec.dt, rec.monotone_limit),
            );
            details.negative_control = Some(rec);
            c
        }
        Err(e) => record(name, false, None, None, e.to_string()),
    }
}

fn dense_top(a: &PeriodicCoefficient, g: &[f64]) -> f64 {
    let n = g.len();
    let dx = a.period() / n as f64;
    let node = |i: usize| a.eval((i % n) as f64 * dx);
    let face = |i: usize| {
        let (l, r) = (node(i), node(i + 1));
        2.0 * l * r / (l + r) / (dx * dx)
    };
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let (left, right) = (face(i + n - 1), face(i));
        m[(i, i)] += g[i] - left - right;
        m[(i, (i + 1) % n)] += right;
        m[(i, (i + n - 1) % n)] += left;
    }
    SymmetricEigen::new(m).eigenvalues.iter().fold(f64::NEG_INFINITY, |x, v| x.max(*v))
}

fn eigen_suite(cfg: &VerifyConfig, details: &mut Details) -> SuiteReport {
    let run = || -> Result<EigenRecord> {
        let mut constant_error: f64 = 0.0;
        for (period, value, c) in [(1.0, 1.0, 0.5), (2.0, 1.7, -3.0), (1.0, 0.3, 4.0)] {
            let a = PeriodicCoefficient::constant(period, value)?;
            let e = principal_eigenvalue(&a, &vec![c; 64], 1e-13, 10_000)?;
            constant_error = constant_error.max((e.mu - c).abs());
        }
        // four times the production resolution
        let n = 4 * Grid::cells_for_spacing(1.0, cfg.numerics.dx)?;
        let a = PeriodicCoefficient::series(1.0, TrigSeries::from_flat(&[1.0, 0.3, 0.0])?)?;
        let g: Vec<f64> = (0..n).map(|i| 0.5 + (2.0 * std::f64::consts::PI * i as f64 / n as f64).sin()).collect();
        let e = principal_eigenvalue(&a, &g, 1e-12, 100_000)?;
        let dense_error = (e.mu - dense_top(&a, &g)).abs();
        let perron_min = e.phi.iter().fold(f64::INFINITY, |m, v| m.min(*v));
        Ok(EigenRecord { constant_error, dense_nodes: n, dense_error, perron_min })
    };
    match run() {
        Ok(rec) => {
            let checks = vec![
                at_most("constant potential exact", rec.constant_error, 1e-12),
                at_most("sinusoidal potential matches dense solve", rec.dense_error, 1e-8),
                record("Perron eigenfunction positive", rec.perron_min > 0.0, Some(rec.perron_min), Some(0.0), ""),
            ];
            details.eigen = Some(rec);
            SuiteReport::new("eigen", checks)
        }
        Err(e) => SuiteReport::failure("eigen", "eigen oracle", e),
    }
}

fn scenario_config(cfg: &VerifyConfig, s: &Scenario) -> Scenario {
    let mut s = s.clone();
    s.problem.numerics = cfg.numerics.clone();
    s
}

fn top_certificate(t: &Terrace) -> Option<CertificateStatus> {
    t.assumptions.rungs1.iter().find(|r| r.rung == 0).map(|r| r.status)
}

fn verdict(status: &VerdictStatus) -> String {
    match status {
        VerdictStatus::Pass => String::from("pass"),
        VerdictStatus::Fail(why) => format!("fail: {why}"),
        VerdictStatus::Skipped(why) => format!("skipped: {why}"),
    }
}

fn speed_pair(w: &PulsatingWave) -> (f64, f64) {
    (w.speed, w.ci)
}

fn steepness_suite(cfg: &VerifyConfig, kpp: Option<&Terrace>, bistable: Option<&Terrace>, details: &mut Details) -> SuiteReport {
    let mut checks = Vec::new();
    let lambda = 0.5;
    let mut rec = SteepnessRecord {
        kpp_speed: None,
        exponential_lambda: lambda,
        exponential_speed: None,
        kpp_verdict: None,
        kpp_steeper: None,
        bistable_shift_distance: None,
        bistable_verdict: None,
    };
    let kpp_wave = kpp.and_then(|t| t.fronts.first()).and_then(|f| f.wave.as_ref());
    let exponential = || -> Result<Terrace> {
        let nlc = NonlinearityConfig::new(Kind::Kpp);
        let nl = nlc.build()?;
        let a = CoefficientConfig::default().build(1.0)?;
        let mut tc = cfg.numerics.terrace_config();
        tc.dt = cfg.dt_override.or(tc.dt);
        tc.datum = Datum::ExponentialTail { lambda };
        let cells = Grid::cells_for_spacing(1.0, tc.dx)?;
        Ok(extract_terrace(&nl, &a, &vec![1.0; cells], &tc)?.terrace)
    };
    match (kpp, kpp_wave, exponential()) {
        (Some(t), Some(w1), Ok(te)) => match te.fronts.first().and_then(|f| f.wave.as_ref()) {
            Some(w2) => {
                rec.kpp_speed = Some(speed_pair(w1));
                rec.exponential_speed = Some(speed_pair(w2));
                let slack = w1.ci + w2.ci;
                checks.push(record(
                    "Heaviside KPP front is not faster than the exponential-datum front",
                    w1.speed <= w2.speed + slack,
                    Some(w1.speed - w2.speed),
                    Some(slack),
                    format!("c = {:.5} vs {:.5} (linear prediction 2 vs {})", w1.speed, w2.speed, lambda + 1.0 / lambda),
                ));
                let v = speed_steepness_test(w1, w2, Orientation::TopStable, top_certificate(t), 2e-3, 1e-9);
                rec.kpp_verdict = Some(verdict(&v.status));
                rec.kpp_steeper = Some(v.w1_steeper);
                checks.push(record(
                    "steeper KPP wave is the slower one",
                    !matches!(v.status, VerdictStatus::Fail(_)),
                    None,
                    None,
                    verdict(&v.status),
                ));
            }
            None => checks.push(record("exponential-datum wave", false, None, None, "no wave extracted")),
        },
        (_, _, Err(e)) => checks.push(record("exponential-datum run", false, None, None, e.to_string())),
        _ => checks.push(record("KPP Heaviside wave", false, None, None, "no wave extracted")),
    }
    match bistable.and_then(|t| t.fronts.first().map(|f| (t, f))) {
        Some((t, f)) => match (&f.wave, &f.second_wave) {
            (Some(w1), Some(w2)) => {
                let shift = optimal_time_shift(w1, w2);
                let d = shift.map_or(f64::INFINITY, |s| s.distance);
                rec.bistable_shift_distance = shift.map(|s| s.distance);
                checks.push(at_most("bistable waves at two levels coincide after a time shift", d, 2e-3));
                let v = speed_steepness_test(w1, w2, Orientation::TopStable, top_certificate(t), 2e-3, 1e-9);
                rec.bistable_verdict = Some(verdict(&v.status));
                checks.push(record("bistable speed/steepness relation", v.status == VerdictStatus::Pass, None, None, verdict(&v.status)));
            }
            _ => checks.push(record("bistable double extraction", false, None, None, "a wave is missing")),
        },
        None => checks.push(record("bistable double extraction", false, None, None, "no bistable front")),
    }
    details.steepness = Some(rec);
    SuiteReport::new("steepness-speed", checks)
}

fn balanced_suite(cfg: &VerifyConfig, details: &mut Details) -> SuiteReport {
    let run = || -> Result<TerraceSummary> {
        let nl = NonlinearityConfig::bistable(0.5).build()?;
        let a = CoefficientConfig::default().build(1.0)?;
        let mut tc = cfg.numerics.terrace_config();
        tc.dt = cfg.dt_override.or(tc.dt);
        let cells = Grid::cells_for_spacing(1.0, tc.dx)?;
        let ex = extract_terrace(&nl, &a, &vec![1.0; cells], &tc)?;
        Ok(TerraceSummary::new(&ex.terrace, &ex.ladder))
    };
    match run() {
        Ok(t) => {
            let emitted = t.speeds().iter().filter(|c| c.is_some()).count();
            let checks = vec![
                record("balanced bistable raises the zero-speed flag", t.zero_speed_flag, None, None, ""),
                record("no numeric speed emitted", emitted == 0, Some(emitted as f64), Some(0.0), ""),
            ];
            details.balanced = Some(t);
            SuiteReport::new("zero-speed", checks)
        }
        Err(e) => SuiteReport::failure("zero-speed", "balanced bistable run", e),
    }
}

fn pulsating_suite(report: Option<&ScenarioReport>) -> SuiteReport {
    let Some(front) = report.and_then(|r| r.terrace.as_ref()).and_then(|t| t.fronts.first()) else {
        return SuiteReport::failure("pulsating", "modulated bistable front", "no terrace");
    };
    let mut checks = Vec::new();
    match &front.wave {
        Some(w) => checks.push(at_most("pulsating residual", w.pulsating_residual, 1e-3)),
        None => checks.push(record("pulsating residual", false, None, None, "no wave")),
    }
    match (&front.speed, &front.second_speed) {
        (Some(a), Some(b)) => checks.push(record(
            "speed independent of the probe level",
            (a.c - b.c).abs() <= a.ci + b.ci,
            Some((a.c - b.c).abs()),
            Some(a.ci + b.ci),
            format!("{} at level {} vs {}", a.c, front.alpha, b.c),
        )),
        _ => checks.push(record("speed independent of the probe level", false, None, None, "missing speed")),
    }
    SuiteReport::new("pulsating", checks)
}

fn convergence_suite(reports: &[&ScenarioReport]) -> SuiteReport {
    let mut checks = Vec::new();
    for r in reports {
        let Some(d) = &r.convergence else {
            checks.push(record(&format!("{}: diagnostics", r.name), false, None, None, "no terrace"));
            continue;
        };
        for f in &d.fronts {
            let v = f.tail_slope.unwrap_or(f64::INFINITY);
            checks.push(record(&format!("{}: front {} drift tail slope", r.name, f.front + 1), v <= 0.05, Some(v), Some(0.05), ""));
        }
        checks.push(record(&format!("{}: inter-front gaps nondecreasing", r.name), d.gaps_nondecreasing, None, None, ""));
    }
    SuiteReport::new("convergence", checks)
}

fn refinement_suite(cfg: &VerifyConfig, coarse: Option<&ScenarioReport>, details: &mut Details) -> SuiteReport {
    let c0 = coarse.and_then(|r| r.terrace.as_ref()).and_then(|t| t.fronts.first()).and_then(|f| f.speed.clone());
    let mut rec = RefinementRecord { factor: cfg.refinement, coarse: c0.as_ref().map(|s| (s.c, s.ci)), fine: None };
    let fine = || -> Result<Option<(f64, f64)>> {
        let nl = NonlinearityConfig::bistable(0.25).build()?;
        let a = CoefficientConfig::default().build(1.0)?;
        let mut tc = cfg.numerics.terrace_config();
        tc.dt = cfg.dt_override.or(tc.dt);
        tc.dx /= cfg.refinement as f64;
        let cells = Grid::cells_for_spacing(1.0, tc.dx)?;
        let ex = extract_terrace(&nl, &a, &vec![1.0; cells], &tc)?;
        Ok(ex.terrace.fronts.first().and_then(|f| f.speed.speed()).map(|s| (s.c, s.ci)))
    };
    let out = match (c0, fine()) {
        (Some(c), Ok(Some((cf, cif)))) => {
            rec.fine = Some((cf, cif));
            SuiteReport::new(
                "refinement",
                vec![record(
                    "bistable speed moves within the intervals under refinement",
                    (cf - c.c).abs() <= c.ci + cif,
                    Some((cf - c.c).abs()),
                    Some(c.ci + cif),
                    format!("dx / {}: {} vs {}", cfg.refinement, c.c, cf),
                )],
            )
        }
        (_, Err(e)) => SuiteReport::failure("refinement", "refined run", e),
        _ => SuiteReport::failure("refinement", "refined run", "missing speed"),
    };
    details.refinement = Some(rec);
    out
}

/// Runs every suite. The result depends only on `cfg` and `seed`.
pub fn verify_all(cfg: &VerifyConfig, seed: u64) -> VerifyReport {
    let mut details = Details::default();
    let battery: Vec<Scenario> = all_scenarios()
        .into_iter()
        .filter(|s| cfg.scenarios.as_ref().map_or(true, |names| names.contains(&s.name)))
        .map(|s| scenario_config(cfg, &s))
        .collect();

    // heavy runs first, keeping only the terraces needed later
    let keep = ["bistable", "kpp"];
    let runs: Vec<(ScenarioReport, Option<Terrace>)> = battery
        .par_iter()
        .map(|s| match run_scenario(s, cfg.dt_override) {
            Ok(run) => {
                let terrace = run.extraction.filter(|_| keep.contains(&s.name.as_str())).map(|ex| ex.terrace);
                (run.report, terrace)
            }
            Err(e) => (
                ScenarioReport {
                    name: s.name.clone(),
                    passed: false,
                    mismatches: vec![format!("setup error: {e}")],
                    continuum: None,
                    error: Some(e.to_string()),
                    terrace: None,
                    convergence: None,
                },
                None,
            ),
        })
        .collect();
    let terrace_of = |name: &str| runs.iter().find(|r| r.0.name == name).and_then(|r| r.1.as_ref());
    let report_of = |name: &str| runs.iter().find(|r| r.0.name == name).map(|r| &r.0);

    let mut suites = Vec::new();
    suites.push(SuiteReport::new(
        "scenarios",
        runs.iter()
            .map(|(r, _)| record(&r.name, r.passed, None, None, r.mismatches.join("; ")))
            .collect(),
    ));
    suites.push(comparison_suite(cfg, seed, &mut details));
    suites.push(zero_number_suite(cfg, &battery, seed, &mut details));
    suites.push(eigen_suite(cfg, &mut details));
    suites.push(balanced_suite(cfg, &mut details));
    suites.push(steepness_suite(cfg, terrace_of("kpp"), terrace_of("bistable"), &mut details));
    suites.push(pulsating_suite(report_of("bistable-periodic")));
    let conv: Vec<&ScenarioReport> = ["bistable", "quadristable-ordered"].iter().filter_map(|n| report_of(n)).collect();
    suites.push(convergence_suite(&conv));
    suites.push(refinement_suite(cfg, report_of("bistable"), &mut details));

    let scenarios: Vec<ScenarioReport> = runs.into_iter().map(|r| r.0).collect();
    VerifyReport {
        seed,
        config: cfg.clone(),
        passed: suites.iter().all(|s| s.passed),
        suites,
        scenarios,
        details,
    }
}
