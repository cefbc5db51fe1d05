//! European call under Black-Scholes: crude MC, change-of-drift IS and NIS
//! against the closed form.
//!
//! cargo run --release --example option_pricing -- 130

use lbfp_nis::integrands::{black_scholes_price, bs_call, optimal_drift, BsParams};
use lbfp_nis::nis::Method;

fn main() -> lbfp_nis::Result<()> {
    let strike: f64 = std::env::args().nth(1).map_or(130.0, |s| s.parse().expect("strike"));
    let params = BsParams::with_strike(strike);
    let bench = bs_call(params)?;
    println!(
        "K = {strike}: price {:.6}, kink z = {:.4}, CDIS drift {:.4}",
        black_scholes_price(&params),
        params.kink(),
        optimal_drift(&params)?
    );
    for n in [1_000, 5_000, 10_000] {
        for method in [Method::Mc, Method::Cdis, Method::Nis] {
            let r = bench.run(method, n, 11)?;
            println!("N = {n:>6} {:>5}: {:.6} (se {:.2e})", method.name(), r.estimate, r.std_error());
        }
    }
    Ok(())
}
