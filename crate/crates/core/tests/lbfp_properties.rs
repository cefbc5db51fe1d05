mod common;

use common::{axis_nodes, integrate, random_grid};
use lbfp_nis::lbfp::{
    build_histogram, deserialize_grid, invert_segment, serialize_grid, LbfpDensity, OriginPolicy,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn density(seed: u64, d: usize) -> LbfpDensity {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    LbfpDensity::new(random_grid(&mut rng, d, 7))
}

fn all_indices(counts: &[usize]) -> Vec<Vec<isize>> {
    let mut out = vec![vec![]];
    for &n in counts {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..n as isize).map(move |k| {
                    let mut q = p.clone();
                    q.push(k);
                    q
                })
            })
            .collect();
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quadrature_of_density_is_one(seed in any::<u64>(), d in 1usize..=3) {
        let f = density(seed, d);
        let total = integrate(f.grid(), |x| f.eval(x));
        prop_assert!((total - 1.0).abs() < 1e-6, "integral {}", total);
    }

    #[test]
    fn midpoints_reproduce_heights(seed in any::<u64>(), d in 1usize..=3) {
        let f = density(seed, d);
        let g = f.grid();
        for idx in all_indices(g.counts()) {
            let x: Vec<f64> = idx.iter().enumerate().map(|(i, &k)| g.midpoint(i, k)).collect();
            prop_assert_eq!(f.eval(&x), g.height(&idx));
        }
    }

    #[test]
    fn marginal_matches_integrated_density(seed in any::<u64>(), d in 2usize..=3) {
        let f = density(seed, d);
        let g = f.grid();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let last = d - 1;
        let nodes = axis_nodes(g, last);
        for _ in 0..50 {
            let prefix: Vec<f64> = (0..last)
                .map(|i| rng.random_range(g.midpoint(i, -1)..g.midpoint(i, g.counts()[i] as isize)))
                .collect();
            let mut x = prefix.clone();
            x.push(0.0);
            let integrated: f64 = nodes
                .iter()
                .map(|&(t, w)| {
                    x[last] = t;
                    w * f.eval(&x)
                })
                .sum();
            let marginal = f.eval_marginal(&prefix).unwrap();
            prop_assert!((integrated - marginal).abs() < 1e-8, "{} vs {}", integrated, marginal);
        }
    }

    #[test]
    fn inversion_round_trips(seed in any::<u64>(), d in 1usize..=3) {
        let f = density(seed, d);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let u: Vec<f64> = (0..d).map(|_| rng.random()).collect();
        let x = f.sample(&u).unwrap();
        for axis in 0..d {
            let table = f.conditional_cdf_table(&x[..axis]).unwrap();
            prop_assert!((table.last().unwrap().cdf_high - 1.0).abs() < 1e-12);
            for seg in &table {
                for _ in 0..50 {
                    let y = seg.cdf_low + rng.random::<f64>() * (seg.cdf_high - seg.cdf_low);
                    if y >= seg.cdf_high {
                        continue;
                    }
                    let z = invert_segment(seg, y).unwrap();
                    prop_assert!(z >= seg.left_midpoint && z <= seg.left_midpoint + seg.width);
                    prop_assert!((seg.cdf(z) - y).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn grid_text_round_trip_is_exact(seed in any::<u64>(), d in 1usize..=3) {
        let f = density(seed, d);
        let back = deserialize_grid(&serialize_grid(f.grid())).unwrap();
        prop_assert_eq!(&back, f.grid());
    }

    #[test]
    fn whole_support_box_has_unit_mass(seed in any::<u64>(), d in 1usize..=3) {
        let f = density(seed, d);
        let g = f.grid();
        let lo: Vec<f64> = (0..d).map(|i| g.midpoint(i, -2)).collect();
        let hi: Vec<f64> = (0..d).map(|i| g.midpoint(i, g.counts()[i] as isize + 1)).collect();
        prop_assert!((f.box_mass(&lo, &hi) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn univariate_sampling_is_monotone(seed in any::<u64>()) {
        let f = density(seed, 1);
        let mut last = f64::NEG_INFINITY;
        for i in 0..500 {
            let x = f.sample(&[i as f64 / 500.0]).unwrap()[0];
            prop_assert!(x >= last);
            last = x;
        }
    }

    #[test]
    fn power_of_two_weight_scaling_is_exact(
        pts in proptest::collection::vec(-5.0f64..5.0, 2..40),
        k in 1i32..20,
    ) {
        let w: Vec<f64> = (0..pts.len()).map(|i| 1.0 + (i % 3) as f64).collect();
        let w2: Vec<f64> = w.iter().map(|v| v * 2f64.powi(k)).collect();
        let a = build_histogram(1, &pts, &w, 0.7, &OriginPolicy::Auto).unwrap();
        let b = build_histogram(1, &pts, &w2, 0.7, &OriginPolicy::Auto).unwrap();
        prop_assert_eq!(a.heights(), b.heights());
        prop_assert_eq!(a.origin(), b.origin());
    }

    #[test]
    fn anchored_edges_sit_on_the_lattice(
        pts in proptest::collection::vec(0.0f64..10.0, 1..30),
        anchor in -3.0f64..3.0,
    ) {
        let h = 0.4;
        let w = vec![1.0; pts.len()];
        let g = build_histogram(1, &pts, &w, h, &OriginPolicy::Anchored(vec![anchor])).unwrap();
        let edge = g.origin()[0] - h / 2.0;
        let k = (edge - anchor) / h;
        prop_assert!((k - k.round()).abs() < 1e-9);
    }
}

#[test]
fn single_point_gives_a_tent() {
    let g = build_histogram(1, &[0.3], &[2.5], 0.5, &OriginPolicy::Auto).unwrap();
    // lowest edge at 0.3, so the occupied bin has mid-point 0.55; an
    // empty bin is stored on either side
    assert_eq!(g.counts(), &[3]);
    let t = g.midpoint(0, 1);
    assert!((t - 0.55).abs() < 1e-15);
    let f = LbfpDensity::new(g);
    assert_eq!(f.eval(&[t]), 2.0);
    assert_eq!(f.eval(&[f.grid().midpoint(0, 0)]), 0.0);
    assert_eq!(f.eval(&[f.grid().midpoint(0, 2)]), 0.0);
    assert!((f.eval(&[0.3]) - 1.0).abs() < 1e-12);
}

#[test]
fn conditional_tables_outside_support_are_errors() {
    let f = density(5, 2);
    let far = f.grid().midpoint(0, 100);
    assert!(f.conditional_cdf_table(&[far]).is_err());
    assert!(f.conditional_cdf_table(&[0.0, 0.0]).is_err());
}
