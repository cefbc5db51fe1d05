//! Replicated runs with independent seeds, summarized as MSE, relative
//! efficiency and CV, printed as CSV.
//!
//! cargo run --release --example replication_study

use lbfp_nis::integrands::lookup;
use lbfp_nis::metrics::{efficiency_product, replicate_integration, CSV_HEADER};
use lbfp_nis::nis::Method;

fn main() -> lbfp_nis::Result<()> {
    let bench = lookup("bs-call?K=130")?;
    let (n, runs, seed) = (5_000, 50, 42);
    let base = replicate_integration(&bench, Method::Mc, n, runs, seed)?;
    println!("{CSV_HEADER}");
    for method in [Method::Mc, Method::Cdis, Method::Nis] {
        let rep = replicate_integration(&bench, method, n, runs, seed)?;
        println!("{}", rep.csv_row(Some(rep.relative_efficiency(&base)), true));
        eprintln!("{}: bias {:+.2e}, mse x time {:.3e}", method, rep.bias(), efficiency_product(&rep));
    }
    Ok(())
}
