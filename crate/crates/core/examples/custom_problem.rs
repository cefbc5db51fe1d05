//! Defining a problem from closures and running the estimators directly.
//!
//! Estimates `P(X1 + X2 > 3)` for independent standard normals with a
//! uniform trial law on `[-2, 5]^2`. The exact value is `1 - Phi(3/sqrt 2)`.
//!
//! cargo run --release --example custom_problem

use std::sync::Arc;

use lbfp_nis::nis::{
    mc_integrate, nis_integrate, BandwidthRule, GaussianProposal, NisConfig, Problem, UniformBox,
};
use statrs::distribution::{ContinuousCDF, Normal};

fn main() -> lbfp_nis::Result<()> {
    let target = Arc::new(|x: &[f64]| (-0.5 * (x[0] * x[0] + x[1] * x[1])).exp() / (2.0 * std::f64::consts::PI));
    let event = Arc::new(|x: &[f64]| if x[0] + x[1] > 3.0 { 1.0 } else { 0.0 });
    let trial = Arc::new(UniformBox::cube(2, -2.0, 5.0)?);
    let problem = Problem::new(2, target, event, trial)?.with_target_sampler(Arc::new(GaussianProposal::standard(2)));

    let exact = 1.0 - Normal::standard().cdf(3.0 / 2f64.sqrt());
    let n = 20_000;
    let mc = mc_integrate(&problem, n, 5)?;
    println!("exact {exact:.6e}");
    println!("mc    {:.6e} (se {:.2e})", mc.estimate, mc.std_error());
    for rule in [BandwidthRule::Reference, BandwidthRule::Plugin] {
        let config = NisConfig::optimal_for(2, n, 5).with_bandwidth(rule);
        let r = nis_integrate(&problem, &config)?;
        println!(
            "nis   {:.6e} (se {:.2e}) with {rule} width {:.4}",
            r.estimate,
            r.std_error(),
            r.bandwidth.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
