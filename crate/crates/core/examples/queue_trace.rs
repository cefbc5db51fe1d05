//! From a service trace to rare-event estimates: generate a synthetic
//! trace, fit the nominal laws, and compare methods for one and two
//! servers.
//!
//! cargo run --release --example queue_trace

use lbfp_nis::queueing::{
    estimate_level_prob, fit_trace, generate_synthetic_trace, read_trace, write_trace, QueueConfig, QueueMethod,
    QueueModel,
};

fn main() -> lbfp_nis::Result<()> {
    let trace = generate_synthetic_trace(22_248, 2008);
    let mut buf = Vec::new();
    write_trace(&mut buf, &trace)?;
    assert_eq!(read_trace(buf.as_slice())?, trace);

    let fit = fit_trace(&trace)?;
    println!(
        "mu = {:.4}, nu = {:.4}, service width {:.3}",
        fit.arrival_rate, fit.service_rate, fit.service_bandwidth
    );
    for (servers, level) in [(1, 10), (2, 8)] {
        let model = QueueModel::from_trace(&trace, servers, level)?;
        let config = QueueConfig::new(200_000, 1);
        for method in QueueMethod::ALL {
            let r = estimate_level_prob(&model, method, &config)?;
            println!(
                "servers {servers} K {level} {:>4}: {:.4e} (cv {:.3})",
                method.name(),
                r.estimate,
                r.std_error / r.estimate
            );
        }
    }
    Ok(())
}
