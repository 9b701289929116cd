//! Acceptance battery. Criterion 1 runs through the library; criteria 2 to 11
//! read the raw numbers of a `terrace verify` report and apply the
//! tolerances here; criterion 12 compares two reports byte for byte.

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use terrace_lab::config::{NonlinearityConfig, ProblemConfig};
use terrace_lab::output::TerraceSummary;
use terrace_lab::scenario::SCENARIOS;
use terrace_lab::verify::VerifyReport;
use terrace_core::terrace::extract_terrace;

struct Line {
    id: usize,
    name: &'static str,
    passed: bool,
    detail: String,
}

/// `sqrt(k) (1 - 2 theta) / sqrt 2`, the exact speed of the cubic front.
fn cubic_speed(k: f64, theta: f64) -> f64 {
    k.sqrt() * (1.0 - 2.0 * theta) / 2f64.sqrt()
}

fn run_verify(dir: &Path) -> Vec<u8> {
    let status = Command::new(env!("CARGO_BIN_EXE_terrace"))
        .args(["verify", "--seed", "0", "--out"])
        .arg(dir)
        .status()
        .expect("terrace binary runs");
    // the exit code only reports the suites; the criteria are judged below
    assert!(status.code().is_some_and(|c| c == 0 || c == 1), "verify crashed: {status}");
    std::fs::read(dir.join("report.json")).expect("report written")
}

fn terrace<'a>(r: &'a VerifyReport, name: &str) -> Option<&'a TerraceSummary> {
    r.scenario(name).and_then(|s| s.terrace.as_ref())
}

fn criterion_1() -> Line {
    let p = ProblemConfig::new(NonlinearityConfig::bistable(0.25));
    let (nl, a) = p.build().unwrap();
    let mut cfg = p.numerics.terrace_config();
    cfg.periods_left = 100;
    cfg.periods_right = 100;
    cfg.horizon = 100.0;
    let start = Instant::now();
    let ex = extract_terrace(&nl, &a, &vec![1.0; p.cells().unwrap()], &cfg);
    let secs = start.elapsed().as_secs_f64();
    let target = cubic_speed(1.0, 0.25);
    let c = ex.ok().and_then(|ex| ex.terrace.fronts.first().and_then(|f| f.speed.speed()).map(|s| s.c));
    let passed = c.is_some_and(|c| (c - target).abs() <= 0.01) && secs <= 60.0;
    Line { id: 1, name: "bistable speed oracle", passed, detail: format!("c = {c:?}, exact {target:.6}, {secs:.1} s") }
}

fn criterion_2(r: &VerifyReport) -> Line {
    let c = terrace(r, "kpp").and_then(|t| t.speeds().first().copied().flatten());
    let passed = c.is_some_and(|c| (1.90..=2.00).contains(&c));
    Line { id: 2, name: "KPP spreading speed", passed, detail: format!("c = {c:?}, window [1.90, 2.00]") }
}

fn criterion_3(r: &VerifyReport) -> Line {
    let t = r.details.balanced.as_ref();
    let flag = t.is_some_and(|t| t.zero_speed_flag);
    let emitted = t.map(|t| t.speeds().iter().filter(|c| c.is_some()).count());
    Line {
        id: 3,
        name: "zero-speed detection",
        passed: flag && emitted == Some(0),
        detail: format!("flag {flag}, numeric speeds {emitted:?}"),
    }
}

fn criterion_4(r: &VerifyReport) -> Line {
    let Some(t) = terrace(r, "quadristable-ordered") else {
        return Line { id: 4, name: "quadristable ordered terrace", passed: false, detail: "no terrace".into() };
    };
    let levels = t.platform_levels();
    let interior: Vec<f64> = levels.iter().copied().filter(|l| *l > 1e-3 && *l < 1.0 - 1e-3).collect();
    let levels_ok = interior.len() == 2
        && (interior[0] - 2.0 / 3.0).abs() <= 1e-3
        && (interior[1] - 1.0 / 3.0).abs() <= 1e-3;
    // pieces of height 1/3, thresholds 0.3, 0.2, 0.1 from the top down
    let targets: Vec<f64> = [0.3, 0.2, 0.1].iter().map(|th| cubic_speed(3.0, *th)).collect();
    let speeds: Vec<Option<f64>> = t.speeds();
    let speeds_ok = speeds.len() == 3
        && speeds.iter().zip(&targets).all(|(c, e)| c.is_some_and(|c| (c - e).abs() <= 0.01));
    let increasing = speeds.windows(2).all(|w| matches!((w[0], w[1]), (Some(a), Some(b)) if a < b));
    Line {
        id: 4,
        name: "quadristable ordered terrace",
        passed: levels_ok && speeds_ok && increasing,
        detail: format!("levels {levels:?}, speeds {speeds:?}, targets {targets:?}"),
    }
}

fn criterion_5(r: &VerifyReport) -> Line {
    // monostable piece on [0, 1/2] with amplitude 0.02, bistable piece on
    // [1/2, 1] with amplitude 4 and threshold 1/4
    let c2 = 2.0 * (0.02f64 / 0.5).sqrt();
    let c1 = cubic_speed(4.0 / 0.5, 0.25);
    let t = terrace(r, "mono-bi-merged");
    let speeds = t.map(TerraceSummary::speeds).unwrap_or_default();
    let one = t.is_some_and(|t| t.platforms.len() == 2) && speeds.len() == 1;
    let between = speeds.first().copied().flatten().is_some_and(|c| c > c2 && c < c1);
    Line {
        id: 5,
        name: "terrace collapse",
        passed: c1 > c2 && one && between,
        detail: format!("speeds {speeds:?} in ({c2:.4}, {c1:.4})"),
    }
}

fn criterion_6(r: &VerifyReport) -> Line {
    let recs = &r.details.comparison;
    let passed = recs.len() >= 5
        && r.config.fuzz_horizon >= 100.0
        && recs.iter().all(|f| f.pairs >= 100 && f.violations == 0 && f.worst_excess <= 1e-12);
    let detail = recs.iter().map(|f| format!("{} {}/{}", f.preset, f.violations, f.pairs)).collect::<Vec<_>>().join(", ");
    Line { id: 6, name: "comparison-principle fuzz", passed, detail }
}

fn criterion_7(r: &VerifyReport) -> Line {
    let recs = &r.details.zero_number;
    let covered = SCENARIOS.iter().all(|s| recs.iter().any(|z| z.scenario == *s));
    let increases: usize = recs.iter().map(|z| z.violations).sum();
    let control = r.details.negative_control.as_ref().map_or(0, |n| n.violations);
    Line {
        id: 7,
        name: "zero-number monotonicity",
        passed: covered && increases == 0 && control >= 1,
        detail: format!("{} pairs, {increases} increases; broken dt control detected {control}", recs.len()),
    }
}

fn criterion_8(r: &VerifyReport) -> Line {
    let Some(e) = &r.details.eigen else {
        return Line { id: 8, name: "eigen oracle", passed: false, detail: "missing".into() };
    };
    let passed = e.constant_error <= 1e-12 && e.dense_error <= 1e-8 && e.perron_min > 0.0 && e.dense_nodes == 200;
    Line {
        id: 8,
        name: "eigen oracle",
        passed,
        detail: format!("constant {:.1e}, dense ({} nodes) {:.1e}, min phi {:.3}", e.constant_error, e.dense_nodes, e.dense_error, e.perron_min),
    }
}

fn criterion_9(r: &VerifyReport) -> Line {
    let Some(s) = &r.details.steepness else {
        return Line { id: 9, name: "steepest is slowest", passed: false, detail: "missing".into() };
    };
    let lambda = s.exponential_lambda;
    let predicted = lambda + 1.0 / lambda;
    let ordered = match (s.kpp_speed, s.exponential_speed) {
        (Some((c1, e1)), Some((c2, e2))) => 2.0 <= predicted && c1 <= c2 + e1 + e2,
        _ => false,
    };
    let verdict = s.kpp_verdict.as_deref() == Some("pass");
    let identical = s.bistable_shift_distance.is_some_and(|d| d <= 2e-3);
    Line {
        id: 9,
        name: "steepest is slowest",
        passed: lambda == 0.5 && ordered && verdict && identical,
        detail: format!(
            "KPP {:?} vs exponential {:?} (2 <= {predicted}), verdict {:?}, bistable shift distance {:?}",
            s.kpp_speed, s.exponential_speed, s.kpp_verdict, s.bistable_shift_distance
        ),
    }
}

fn criterion_10(r: &VerifyReport) -> Line {
    let f = terrace(r, "bistable-periodic").and_then(|t| t.fronts.first());
    let residual = f.and_then(|f| f.wave.as_ref()).map(|w| w.pulsating_residual);
    let probe = f.and_then(|f| match (&f.speed, &f.second_speed) {
        (Some(a), Some(b)) => Some(((a.c - b.c).abs(), a.ci + b.ci)),
        _ => None,
    });
    let passed = residual.is_some_and(|v| v <= 1e-3) && probe.is_some_and(|(d, ci)| d <= ci);
    Line { id: 10, name: "pulsating structure", passed, detail: format!("residual {residual:?}, probe (diff, ci) {probe:?}") }
}

fn criterion_11(r: &VerifyReport) -> Line {
    let mut passed = true;
    let mut detail = Vec::new();
    for name in ["bistable", "quadristable-ordered"] {
        match r.scenario(name).and_then(|s| s.convergence.as_ref()) {
            Some(d) => {
                let slopes: Vec<Option<f64>> = d.fronts.iter().map(|f| f.tail_slope).collect();
                passed &= !slopes.is_empty() && slopes.iter().all(|s| s.is_some_and(|v| v <= 0.05)) && d.gaps_nondecreasing;
                detail.push(format!("{name}: slopes {slopes:?}, gaps nondecreasing {}", d.gaps_nondecreasing));
            }
            None => {
                passed = false;
                detail.push(format!("{name}: missing"));
            }
        }
    }
    Line { id: 11, name: "convergence diagnostics", passed, detail: detail.join("; ") }
}

#[test]
fn acceptance_criteria() {
    let mut lines = vec![criterion_1()];
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = run_verify(a.path());
    let second = run_verify(b.path());
    let report: VerifyReport = serde_json::from_slice(&first).expect("report parses");
    lines.extend([
        criterion_2(&report),
        criterion_3(&report),
        criterion_4(&report),
        criterion_5(&report),
        criterion_6(&report),
        criterion_7(&report),
        criterion_8(&report),
        criterion_9(&report),
        criterion_10(&report),
        criterion_11(&report),
    ]);
    lines.push(Line {
        id: 12,
        name: "determinism",
        passed: first == second,
        detail: format!("{} and {} bytes", first.len(), second.len()),
    });
    // written to the handle directly so the lines survive output capture
    let mut out = std::io::stdout().lock();
    for l in &lines {
        let status = if l.passed { "PASS" } else { "FAIL" };
        writeln!(out, "criterion {:>2} {:<30} {}  {}", l.id, l.name, status, l.detail).unwrap();
    }
    drop(out);
    let failed: Vec<usize> = lines.iter().filter(|l| !l.passed).map(|l| l.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
