//! Level-crossing probability of an M/M/1 busy period: MC, exponential IS
//! and NIS against the gambler's-ruin formula.
//!
//! cargo run --release --example queue_mm1 -- 10

use lbfp_nis::queueing::{estimate_level_prob, gambler_ruin_prob, QueueConfig, QueueMethod, QueueModel};

fn main() -> lbfp_nis::Result<()> {
    let k: usize = std::env::args().nth(1).map_or(10, |s| s.parse().expect("level"));
    let (mu, nu) = (0.074, 0.147);
    let model = QueueModel::mm1(mu, nu, k)?;
    let exact = gambler_ruin_prob(mu, nu, k);
    println!("mu = {mu}, nu = {nu}, K = {k}: exact {exact:.6e}");
    let config = QueueConfig::new(1_000_000, 2008);
    for method in QueueMethod::ALL {
        let r = estimate_level_prob(&model, method, &config)?;
        println!(
            "{:>4}: {:.6e} (se {:.2e}, z {:+.2}), hits {}, fitted rate {}",
            method.name(),
            r.estimate,
            r.std_error,
            (r.estimate - exact) / r.std_error,
            r.hits,
            r.interarrival_rate.map_or("-".into(), |v| format!("{v:.4}")),
        );
    }
    Ok(())
}
