use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use super::law::{ReflectedLbfp, TimeLaw};
use super::sim::{simulate_busy_period, BusyPeriodPath, QueueModel};
use crate::error::{Error, Result};
use crate::nis::{effective_sample_size, reference_bandwidth, BandwidthRule};
use crate::rng::{derive_seed, stream};

/// Busy periods per seed substream.
pub const CHUNK: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QueueMethod {
    Mc,
    Is,
    Nis,
}

impl QueueMethod {
    pub const ALL: [QueueMethod; 3] = [QueueMethod::Mc, QueueMethod::Is, QueueMethod::Nis];

    pub fn name(self) -> &'static str {
        match self {
            QueueMethod::Mc => "mc",
            QueueMethod::Is => "is",
            QueueMethod::Nis => "nis",
        }
    }
}

impl fmt::Display for QueueMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QueueMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown queueing method `{s}` (mc, is, nis)")))
    }
}

/// Weights attached to retained pilot draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PilotWeighting {
    /// Every draw of a hit path carries the path's likelihood ratio, so the
    /// weighted draws follow the nominal law conditioned on a hit.
    #[default]
    PathLikelihood,
    /// Each draw carries only its own ratio `p/q0`.
    PerDraw,
}

impl FromStr for PilotWeighting {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "path" => Ok(PilotWeighting::PathLikelihood),
            "draw" => Ok(PilotWeighting::PerDraw),
            _ => Err(Error::InvalidArgument(format!("pilot weighting `{s}` (path, draw)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct QueueConfig {
    /// Busy periods in total, pilot included.
    pub periods: usize,
    pub pilot_fraction: f64,
    /// Pilot weights for the `Nis` proposals.
    pub weighting: PilotWeighting,
    /// Pilot weights for the interarrival rate of the `Is` benchmark.
    pub is_weighting: PilotWeighting,
    pub service_bandwidth: BandwidthRule,
    /// Mass of the uniform floor mixed into the fitted service proposal
    /// over the nominal service support.
    pub service_floor: f64,
    /// Pilot interarrival trial rate; defaults to the nominal service rate.
    pub trial_rate: Option<f64>,
    pub seed: u64,
}

impl QueueConfig {
    pub fn new(periods: usize, seed: u64) -> Self {
        Self {
            periods,
            pilot_fraction: 0.15,
            weighting: PilotWeighting::default(),
            is_weighting: PilotWeighting::PerDraw,
            service_bandwidth: BandwidthRule::Reference,
            service_floor: 0.01,
            trial_rate: None,
            seed,
        }
    }

    pub fn pilot_periods(&self) -> usize {
        ((self.pilot_fraction * self.periods as f64).round() as usize).clamp(1, self.periods.saturating_sub(1).max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelProbEstimate {
    pub method: QueueMethod,
    pub estimate: f64,
    pub std_error: f64,
    /// Main-run periods.
    pub periods: usize,
    pub pilot_periods: usize,
    /// Main-run periods that reached the level.
    pub hits: usize,
    pub pilot_hits: usize,
    pub interarrival_rate: Option<f64>,
    pub service_bandwidth: Option<f64>,
    pub elapsed_secs: f64,
}

/// Runs `n` busy periods under the given proposals and averages
/// `phi * l`. Chunk `c` uses `stream(seed, c)`; sums are combined in chunk
/// order, so the result does not depend on the worker count.
pub fn estimate_with_proposals(
    model: &QueueModel,
    arrivals: &TimeLaw,
    services: &TimeLaw,
    n: usize,
    seed: u64,
) -> (f64, f64, usize) {
    let chunks: Vec<(f64, f64, usize)> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, c as u64);
            let len = CHUNK.min(n - c * CHUNK);
            let (mut s, mut s2, mut hits) = (0.0, 0.0, 0);
            for _ in 0..len {
                let w = simulate_busy_period(model, arrivals, services, &mut rng, false).weight();
                if w != 0.0 {
                    s += w;
                    s2 += w * w;
                    hits += 1;
                }
            }
            (s, s2, hits)
        })
        .collect();
    let (mut s, mut s2, mut hits) = (0.0, 0.0, 0);
    for (a, b, c) in chunks {
        s += a;
        s2 += b;
        hits += c;
    }
    let nf = n as f64;
    let mean = s / nf;
    let var = if n > 1 { ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
    (mean, (var / nf).sqrt(), hits)
}

/// Simulates `m` pilot periods under the trial laws and returns the hit
/// paths with their draws.
pub fn run_pilot(
    model: &QueueModel,
    trial_arrivals: &TimeLaw,
    trial_services: &TimeLaw,
    m: usize,
    seed: u64,
) -> Vec<BusyPeriodPath> {
    let chunks: Vec<Vec<BusyPeriodPath>> = (0..m.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, c as u64);
            let len = CHUNK.min(m - c * CHUNK);
            (0..len)
                .map(|_| simulate_busy_period(model, trial_arrivals, trial_services, &mut rng, true))
                .filter(|p| p.hit)
                .collect()
        })
        .collect();
    chunks.into_iter().flatten().collect()
}

// Per-draw weights for one kind of draw on the hit paths.
fn draw_weights<'a>(
    paths: &'a [BusyPeriodPath],
    nominal: &TimeLaw,
    trial: &TimeLaw,
    weighting: PilotWeighting,
    pick: impl Fn(&'a BusyPeriodPath) -> &'a [f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let hits: Vec<&BusyPeriodPath> = paths.iter().filter(|p| p.hit && p.draws.is_some()).collect();
    if hits.is_empty() {
        return Err(Error::NoRareEventHits);
    }
    // Path ratios are rescaled by the largest; both fits are scale-free.
    let top = hits.iter().map(|p| p.log_lr).fold(f64::NEG_INFINITY, f64::max);
    let mut values = Vec::new();
    let mut weights = Vec::new();
    for p in hits {
        let path_w = (p.log_lr - top).exp();
        for &x in pick(p) {
            values.push(x);
            weights.push(match weighting {
                PilotWeighting::PathLikelihood => path_w,
                PilotWeighting::PerDraw => (nominal.ln_density(x) - trial.ln_density(x)).exp(),
            });
        }
    }
    Ok((values, weights))
}

/// Weighted exponential MLE `sum w / sum w x` over the interarrival draws
/// of the hit paths.
pub fn fit_interarrival_proposal(
    paths: &[BusyPeriodPath],
    nominal: &TimeLaw,
    trial: &TimeLaw,
    weighting: PilotWeighting,
) -> Result<f64> {
    let (x, w) = draw_weights(paths, nominal, trial, weighting, |p| {
        &p.draws.as_ref().expect("filtered").interarrivals
    })?;
    let sw: f64 = w.iter().sum();
    let swx: f64 = x.iter().zip(&w).map(|(x, w)| x * w).sum();
    let rate = sw / swx;
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::DegenerateWeights);
    }
    Ok(rate)
}

/// Weighted folded LBFP over the completed services of the hit paths.
/// `Plugin` is not available here and is treated as `Reference`.
pub fn fit_service_proposal(
    paths: &[BusyPeriodPath],
    nominal: &TimeLaw,
    trial: &TimeLaw,
    weighting: PilotWeighting,
    rule: BandwidthRule,
) -> Result<ReflectedLbfp> {
    let (y, w) = draw_weights(paths, nominal, trial, weighting, |p| {
        &p.draws.as_ref().expect("filtered").services
    })?;
    if y.is_empty() {
        return Err(Error::NoRareEventHits);
    }
    let h = match rule {
        BandwidthRule::Fixed(h) => h,
        BandwidthRule::Reference | BandwidthRule::Plugin => {
            reference_bandwidth(&y, &w, 1, effective_sample_size(&w))?
        }
    };
    ReflectedLbfp::fit(&y, &w, h)
}

/// Pilot trial laws: exponential interarrivals at the nominal service rate
/// and the nominal service law.
pub fn trial_laws(model: &QueueModel, config: &QueueConfig) -> Result<(TimeLaw, TimeLaw)> {
    let rate = config.trial_rate.unwrap_or_else(|| model.service.rate());
    Ok((TimeLaw::exponential(rate)?, model.service.clone()))
}

/// Probability that a busy period reaches `model.level`.
///
/// `Mc` counts hits over all periods. `Is` and `Nis` spend
/// `config.pilot_periods()` periods under [`trial_laws`], fit the
/// exponential interarrival proposal from the hit paths, and run the rest
/// under it. `Is` weights that fit by `config.is_weighting` and `Nis` by
/// `config.weighting`. `Nis` also replaces the service law by the fitted
/// LBFP, mixed with a uniform floor of mass `config.service_floor` over the
/// nominal service support so that every nominal service time stays
/// reachable.
pub fn estimate_level_prob(model: &QueueModel, method: QueueMethod, config: &QueueConfig) -> Result<LevelProbEstimate> {
    if config.periods < 2 {
        return Err(Error::InvalidArgument(format!("{} periods", config.periods)));
    }
    let start = Instant::now();
    let main_seed = derive_seed(config.seed, 1);
    let (arrivals, services, pilot_periods, pilot_hits, rate, bw) = match method {
        QueueMethod::Mc => (model.interarrival.clone(), model.service.clone(), 0, 0, None, None),
        QueueMethod::Is | QueueMethod::Nis => {
            let m = config.pilot_periods();
            let (trial_t, trial_s) = trial_laws(model, config)?;
            let paths = run_pilot(model, &trial_t, &trial_s, m, derive_seed(config.seed, 0));
            if paths.is_empty() {
                return Err(Error::NoRareEventHits);
            }
            let weighting = match method {
                QueueMethod::Is => config.is_weighting,
                _ => config.weighting,
            };
            let rate = fit_interarrival_proposal(&paths, &model.interarrival, &trial_t, weighting)?;
            let arrivals = TimeLaw::exponential(rate)?;
            let (services, bw) = if method == QueueMethod::Nis {
                let mut q = fit_service_proposal(
                    &paths,
                    &model.service,
                    &trial_s,
                    config.weighting,
                    config.service_bandwidth,
                )?;
                if config.service_floor > 0.0 {
                    q = q.with_floor(config.service_floor, model.service.upper_bound())?;
                }
                let bw = q.bin_width();
                (TimeLaw::Reflected(Arc::new(q)), Some(bw))
            } else {
                (model.service.clone(), None)
            };
            (arrivals, services, m, paths.len(), Some(rate), bw)
        }
    };
    let n = config.periods - pilot_periods;
    let (estimate, std_error, hits) = estimate_with_proposals(model, &arrivals, &services, n, main_seed);
    if estimate > 1.0 {
        log::warn!("{method} level probability estimate {estimate} exceeds 1");
    }
    Ok(LevelProbEstimate {
        method,
        estimate,
        std_error,
        periods: n,
        pilot_periods,
        hits,
        pilot_hits,
        interarrival_rate: rate,
        service_bandwidth: bw,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::queueing::gambler_ruin_prob;

    #[test]
    fn unit_weights_give_plain_mle() {
        let model = QueueModel::mm1(0.5, 1.0, 3).unwrap();
        let paths = run_pilot(&model, &model.interarrival, &model.service, 5000, 1);
        let rate = fit_interarrival_proposal(&paths, &model.interarrival, &model.interarrival, PilotWeighting::PerDraw)
            .unwrap();
        let (n, s) = paths
            .iter()
            .flat_map(|p| p.draws.as_ref().unwrap().interarrivals.iter())
            .fold((0.0, 0.0), |(n, s), x| (n + 1.0, s + x));
        assert!((rate - n / s).abs() < 1e-12 * rate);
    }

    #[test]
    fn no_hits_is_an_error() {
        assert!(matches!(
            fit_interarrival_proposal(&[], &TimeLaw::Exponential { rate: 1.0 }, &TimeLaw::Exponential { rate: 1.0 }, PilotWeighting::PathLikelihood),
            Err(Error::NoRareEventHits)
        ));
    }

    #[test]
    fn mc_is_and_nis_agree_with_ruin_oracle() {
        let model = QueueModel::mm1(0.074, 0.147, 6).unwrap();
        let truth = gambler_ruin_prob(0.074, 0.147, 6);
        for method in QueueMethod::ALL {
            let r = estimate_level_prob(&model, method, &QueueConfig::new(100_000, 5)).unwrap();
            assert!(
                (r.estimate - truth).abs() < 4.0 * r.std_error,
                "{method}: {} vs {truth} (se {})",
                r.estimate,
                r.std_error
            );
        }
    }

    #[test]
    fn pilot_fraction_rounding() {
        let c = QueueConfig::new(1_000_000, 0);
        assert_eq!(c.pilot_periods(), 150_000);
        assert!("bogus".parse::<QueueMethod>().is_err());
        assert_eq!("nis".parse::<QueueMethod>().unwrap(), QueueMethod::Nis);
    }
}
