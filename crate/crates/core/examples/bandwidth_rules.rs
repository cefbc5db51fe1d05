//! The bin-width rules on one pilot: reference width, curvature pilot and
//! plug-in optimum, plus the optimal pilot fraction per dimension.
//!
//! cargo run --release --example bandwidth_rules

use lbfp_nis::lbfp::{build_histogram, LbfpDensity, OriginPolicy};
use lbfp_nis::nis::{
    curvature_pilot_width, effective_sample_size, optimal_lambda, plugin_bandwidth, plugin_constants,
    reference_bandwidth, PluginMode,
};
use lbfp_nis::rng::stream;
use rand::Rng;

fn main() -> lbfp_nis::Result<()> {
    // pilot of |x| phi(x) on U[-1, 1]
    let m = 1_500;
    let mut rng = stream(9, 0);
    let xs: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let ws: Vec<f64> = xs
        .iter()
        .map(|x| 2.0 * x.abs() * (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt())
        .collect();
    let ess = effective_sample_size(&ws);
    let h_ref = reference_bandwidth(&xs, &ws, 1, ess)?;
    let h_pilot = curvature_pilot_width(h_ref, 1, ess);
    let pilot = LbfpDensity::new(build_histogram(1, &xs, &ws, h_pilot, &OriginPolicy::Auto)?);
    let trial = |x: &[f64]| if x[0].abs() <= 1.0 { 0.5 } else { 0.0 };
    let c = plugin_constants(&pilot, &trial, m, PluginMode::Is);
    let h = plugin_bandwidth(&pilot, &trial, m, h_ref, PluginMode::Is);
    println!("M = {m}, ESS = {ess:.1}");
    println!("reference width {h_ref:.4}, curvature pilot width {h_pilot:.4}");
    println!("H1 = {:.4}, H2 = {:.4}, h* = {:.4}, clamped {h:.4}", c.h1, c.h2, c.h);
    for d in 1..=8 {
        println!("d = {d}: lambda* = {:.4}", optimal_lambda(d));
    }
    Ok(())
}
