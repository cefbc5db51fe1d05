//! Fit an LBFP to a weighted 2-d sample, evaluate it, draw from it by
//! inversion and round-trip the grid through the text format.
//!
//! cargo run --example lbfp_density

use lbfp_nis::lbfp::{build_histogram, deserialize_grid, serialize_grid, LbfpDensity, OriginPolicy, SampleScratch};
use lbfp_nis::rng::stream;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> lbfp_nis::Result<()> {
    let mut rng = stream(1, 0);
    let n = 20_000;
    let mut points = Vec::with_capacity(2 * n);
    let mut weights = Vec::with_capacity(n);
    for _ in 0..n {
        let x: f64 = StandardNormal.sample(&mut rng);
        let y: f64 = StandardNormal.sample(&mut rng);
        points.extend([x, 0.5 * x + y]);
        // tilt toward positive x
        weights.push((0.5 * x).exp());
    }

    let grid = build_histogram(2, &points, &weights, 0.3, &OriginPolicy::Auto)?;
    println!("grid: {:?} bins of width {}, mass {:.12}", grid.counts(), grid.bin_width(), grid.mass());
    let density = LbfpDensity::new(grid);

    for x in [[0.0, 0.0], [0.5, 0.25], [3.0, -3.0]] {
        println!("f({x:?}) = {:.5}", density.eval(&x));
    }
    println!("mass of [0,1]^2: {:.5}", density.box_mass(&[0.0, 0.0], &[1.0, 1.0]));

    let mut scratch = SampleScratch::default();
    let mut out = [0.0; 2];
    let draws = 100_000;
    let mut mean = [0.0; 2];
    for _ in 0..draws {
        let u: [f64; 2] = [rng.random(), rng.random()];
        density.sample_with(&mut scratch, &u, &mut out)?;
        mean[0] += out[0] / draws as f64;
        mean[1] += out[1] / draws as f64;
    }
    // the tilted law has mean (0.5, 0.25)
    println!("sample mean ({:.3}, {:.3})", mean[0], mean[1]);

    let text = serialize_grid(density.grid());
    let back = deserialize_grid(&text)?;
    println!("serialized {} bytes, round trip exact: {}", text.len(), &back == density.grid());
    Ok(())
}
