//! Self-normalized estimation with a target known only up to a constant:
//! uniform-proposal SIS against NSIS.
//!
//! cargo run --release --example nsis_example3 -- 0.75 1

use lbfp_nis::integrands::example3;
use lbfp_nis::nis::Method;

fn main() -> lbfp_nis::Result<()> {
    let mut args = std::env::args().skip(1);
    let a: f64 = args.next().map_or(0.75, |s| s.parse().expect("a"));
    let phi: u8 = args.next().map_or(1, |s| s.parse().expect("phi"));
    let bench = example3(a, phi)?;
    println!("{}: oracle {} ({})", bench.key, bench.oracle, bench.oracle_source);
    let n = 5_000;
    for method in [Method::Mc, Method::Sis, Method::Nsis] {
        let r = bench.run(method, n, 3)?;
        println!("{:>5}: {:.5} (se {:.2e})", method.name(), r.estimate, r.std_error());
    }
    let cfg = bench.config(Method::Nsis, n, 3);
    println!("nsis used lambda {} and {}", cfg.pilot_fraction, cfg.bandwidth);
    Ok(())
}
