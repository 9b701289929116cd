use proptest::prelude::*;
use terrace_core::evolve::{lipschitz_dt, Stepper, StepperConfig};
use terrace_core::model::{build_nonlinearity, Grid, NonlinearitySpec, PeriodicCoefficient, Preset};

fn presets() -> Vec<NonlinearitySpec> {
    let mut modulated = NonlinearitySpec::homogeneous(Preset::Bistable { theta: 0.3 });
    modulated.modulation_eps = 0.4;
    vec![
        NonlinearitySpec::homogeneous(Preset::Kpp),
        NonlinearitySpec::homogeneous(Preset::Bistable { theta: 0.25 }),
        NonlinearitySpec::homogeneous(Preset::Ignition { theta: 0.2 }),
        modulated,
    ]
}

// Smooth random profile in [0, 1] built from a few bumps.
fn profile(grid: &Grid, bumps: &[(f64, f64, f64)]) -> Vec<f64> {
    (0..grid.len())
        .map(|i| {
            let x = grid.x(i);
            let s: f64 = bumps.iter().map(|(c, w, h)| h * (-(x - c) * (x - c) / (w * w)).exp()).sum();
            s.clamp(0.0, 1.0)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ordered_data_stay_ordered(
        preset in 0usize..4,
        theta in prop_oneof![Just(1.0), Just(0.5), Just(0.75)],
        bumps in prop::collection::vec((-6.0f64..6.0, 0.2f64..3.0, 0.0f64..1.0), 1..5),
        dents in prop::collection::vec((-6.0f64..6.0, 0.2f64..3.0, 0.0f64..1.0), 1..5),
    ) {
        let spec = &presets()[preset];
        let nl = build_nonlinearity(spec).unwrap();
        let a = PeriodicCoefficient::series(1.0, terrace_core::model::TrigSeries::from_flat(&[1.0, 0.3, 0.1]).unwrap()).unwrap();
        let grid = Grid::line(1.0, 16, 8, 8).unwrap();
        let mut dt = lipschitz_dt(&nl, (-0.1, 1.1), 0.5);
        if theta < 1.0 {
            let limit = grid.dx() * grid.dx() / (2.0 * a.max_value() * 1.001 * (1.0 - theta));
            dt = dt.min(0.9 * limit);
        }
        let mut cfg = StepperConfig::clamped(dt, vec![1.0; 16]);
        cfg.theta = theta;
        let stepper = Stepper::new(grid, &nl, &a, cfg).unwrap();
        let mut v = profile(&grid, &bumps);
        let lower = profile(&grid, &dents);
        let mut u: Vec<f64> = v.iter().zip(&lower).map(|(a, b)| (a - b).max(0.0)).collect();
        // boundary values are imposed by the stepper, start from them
        for w in [&mut u, &mut v] {
            w[0] = 1.0;
            *w.last_mut().unwrap() = 0.0;
        }
        let mut t = 0.0;
        for _ in 0..200 {
            stepper.step_in_place(&mut u, t).unwrap();
            stepper.step_in_place(&mut v, t).unwrap();
            t += dt;
            for (a, b) in u.iter().zip(&v) {
                prop_assert!(*a <= *b + 1e-12, "ordering lost: {a} > {b}");
            }
        }
    }
}
