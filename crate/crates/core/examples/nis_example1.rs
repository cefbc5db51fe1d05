//! Crude MC, uniform IS, NIS and NIS+/- on `E[x1 1{|x|<=1}]` under a
//! standard normal, whose value is 0.
//!
//! cargo run --release --example nis_example1 -- 4

use lbfp_nis::integrands::example1;
use lbfp_nis::nis::Method;

fn main() -> lbfp_nis::Result<()> {
    let d: usize = std::env::args().nth(1).map_or(1, |s| s.parse().expect("dimension"));
    let bench = example1(d)?;
    let n = 10_000;
    println!("{} with N = {n}, oracle {}", bench.key, bench.oracle);
    for method in [Method::Mc, Method::Is, Method::Nis, Method::NisSplit] {
        let r = bench.run(method, n, 7)?;
        println!(
            "{:>8}: {:+.6} (se {:.2e}), pilot {:>5}, h {}",
            method.name(),
            r.estimate,
            r.std_error(),
            r.pilot_size,
            r.bandwidth.map_or("-".into(), |h| format!("{h:.4}")),
        );
    }
    Ok(())
}
