use proptest::prelude::*;
use terrace_core::model::{Grid, Profile};
use terrace_core::steepness::{crossings_of, is_steeper, sign_change_count};

// Brute force: drop ties, count sign flips of what remains.
fn oracle(d: &[f64], tie: f64) -> usize {
    let signs: Vec<bool> = d.iter().filter(|v| v.abs() > tie).map(|v| *v > 0.0).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

fn front(grid: &Grid, k: f64, shift: f64) -> Profile {
    Profile::from_fn(*grid, |x| 0.5 * (1.0 - (k * (x - shift)).tanh())).unwrap()
}

proptest! {
    #[test]
    fn count_matches_brute_force(
        d in prop::collection::vec(prop_oneof![-1.0f64..1.0, Just(0.0), Just(1e-12)], 1..120),
    ) {
        let tie = 1e-10;
        let r = crossings_of(&d, |i| i as f64, tie);
        prop_assert_eq!(r.count, oracle(&d, tie));
        prop_assert_eq!(r.crossing_positions.len(), r.count);
        prop_assert_eq!(r.identical, d.iter().all(|v| v.abs() <= tie));
        for w in r.crossing_positions.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn count_is_symmetric(
        u in prop::collection::vec(-1.0f64..1.0, 41),
        v in prop::collection::vec(-1.0f64..1.0, 41),
    ) {
        let grid = Grid::periodic(1.0, 41).unwrap();
        let pu = Profile::new(grid, u, 0.0).unwrap();
        let pv = Profile::new(grid, v, 0.0).unwrap();
        let a = sign_change_count(&pu, &pv, 1e-10).unwrap();
        let b = sign_change_count(&pv, &pu, 1e-10).unwrap();
        prop_assert_eq!(a.count, b.count);
        prop_assert_eq!(a.crossing_positions, b.crossing_positions);
    }

    #[test]
    fn steeper_front_wins_against_every_translate(
        k in 1.5f64..4.0,
        shifts in prop::collection::vec(-3.0f64..3.0, 1..6),
    ) {
        let grid = Grid::line(1.0, 20, 6, 6).unwrap();
        let steep = vec![front(&grid, k, 0.0)];
        let shallow: Vec<Profile> = shifts.iter().map(|s| front(&grid, 1.0, *s)).collect();
        prop_assert!(is_steeper(&steep, &shallow, 1e-9).unwrap().steeper);
        let reverse = is_steeper(&shallow, &steep, 1e-9).unwrap();
        prop_assert!(!reverse.steeper);
        prop_assert!(reverse.witness.is_some());
    }
}

#[test]
fn translates_never_cross() {
    let grid = Grid::line(1.0, 20, 6, 6).unwrap();
    let u = front(&grid, 2.0, 0.0);
    for s in [-2.0, -0.3, 0.7, 2.5] {
        let v = front(&grid, 2.0, s);
        assert_eq!(sign_change_count(&u, &v, 1e-12).unwrap().count, 0);
    }
    assert!(sign_change_count(&u, &u, 1e-12).unwrap().identical);
}
