use std::time::Instant;

use rand::Rng;

use super::bandwidth::{optimal_lambda, BandwidthRule};
use super::problem::{Problem, Proposal};
use super::proposal::{fit_proposal, Pilot, PluginTarget, ProposalEstimate};
use crate::error::{Error, Result};
use crate::lbfp::SampleScratch;
use crate::rng::{derive_seed, stream, SimRng};

/// Pilot fractions above this are flagged for NIS and NSIS.
pub const LAMBDA_WARN: f64 = 0.25;

const PILOT_STREAM: u64 = 0;
const MAIN_STREAM: u64 = 1;
const POSITIVE_SIDE: u64 = 2;
const NEGATIVE_SIDE: u64 = 3;

/// Estimator tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Mc,
    Is,
    Cdis,
    Sis,
    Nis,
    NisSplit,
    Nsis,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Mc,
        Method::Is,
        Method::Cdis,
        Method::Sis,
        Method::Nis,
        Method::NisSplit,
        Method::Nsis,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Mc => "mc",
            Method::Is => "is",
            Method::Cdis => "cdis",
            Method::Sis => "sis",
            Method::Nis => "nis",
            Method::NisSplit => "nis-split",
            Method::Nsis => "nsis",
        }
    }

    /// Whether the method fits an LBFP proposal from a pilot.
    pub fn is_two_stage(self) -> bool {
        matches!(self, Method::Nis | Method::NisSplit | Method::Nsis)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method `{s}`")))
    }
}

/// Budget and tuning of a two-stage run.
#[derive(Debug, Clone, PartialEq)]
pub struct NisConfig {
    /// Total evaluations `N`, pilot included.
    pub budget: usize,
    /// `lambda = M / N`.
    pub pilot_fraction: f64,
    pub bandwidth: BandwidthRule,
    /// Build the LBFP on per-axis standardized pilot coordinates.
    pub standardize: bool,
    pub seed: u64,
}

impl NisConfig {
    pub fn new(budget: usize, pilot_fraction: f64, seed: u64) -> Self {
        Self {
            budget,
            pilot_fraction,
            bandwidth: BandwidthRule::Plugin,
            standardize: false,
            seed,
        }
    }

    pub fn with_bandwidth(mut self, rule: BandwidthRule) -> Self {
        self.bandwidth = rule;
        self
    }

    pub fn with_standardize(mut self, on: bool) -> Self {
        self.standardize = on;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Pilot fraction `4/(d+8)`.
    pub fn optimal_for(d: usize, budget: usize, seed: u64) -> Self {
        Self::new(budget, optimal_lambda(d), seed)
    }

    /// `M = round(lambda N)`, required to satisfy `1 <= M < N`.
    pub fn pilot_size(&self) -> Result<usize> {
        pilot_split(self.budget, self.pilot_fraction)
    }
}

fn pilot_split(budget: usize, lambda: f64) -> Result<usize> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidArgument(format!("pilot fraction {lambda} not in (0, 1)")));
    }
    let m = (lambda * budget as f64).round() as usize;
    if m < 1 || m >= budget {
        return Err(Error::InvalidArgument(format!(
            "pilot size {m} from N = {budget}, lambda = {lambda} must satisfy 1 <= M < N"
        )));
    }
    Ok(m)
}

/// One estimator run.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationResult {
    pub method: Method,
    pub estimate: f64,
    /// Estimated variance of `estimate` from the run's own draws.
    pub variance: f64,
    pub pilot_size: usize,
    pub main_size: usize,
    pub elapsed_secs: f64,
    /// Mean pilot weight (sum over sides for NIS+/-).
    pub mean_pilot_weight: Option<f64>,
    /// Pilot draws with positive weight.
    pub pilot_hits: Option<usize>,
    /// Width of the fitted LBFP, in the coordinates it was built in.
    pub bandwidth: Option<f64>,
}

impl IntegrationResult {
    fn baseline(method: Method, estimate: f64, variance: f64, n: usize, start: Instant) -> Self {
        Self {
            method,
            estimate,
            variance,
            pilot_size: 0,
            main_size: n,
            elapsed_secs: start.elapsed().as_secs_f64(),
            mean_pilot_weight: None,
            pilot_hits: None,
            bandwidth: None,
        }
    }

    pub fn std_error(&self) -> f64 {
        self.variance.max(0.0).sqrt()
    }
}

#[derive(Default)]
struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, v: f64) {
        self.n += 1;
        let delta = v - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (v - self.mean);
    }

    /// Mean and the variance of the mean.
    fn finish(&self) -> (f64, f64) {
        let var = if self.n > 1 {
            self.m2 / (self.n - 1) as f64 / self.n as f64
        } else {
            0.0
        };
        (self.mean, var)
    }
}

fn fill_uniform(rng: &mut SimRng, u: &mut [f64]) {
    u.iter_mut().for_each(|v| *v = rng.random());
}

/// `(1/n) sum g(x)/q^(x)` over `n` draws from `q`.
fn lbfp_is_stage(q: &ProposalEstimate, n: usize, rng: &mut SimRng, g: impl Fn(&[f64]) -> f64) -> Result<(f64, f64)> {
    let d = q.density().dim();
    let mut scratch = SampleScratch::default();
    let (mut u, mut z, mut x) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let mut acc = Welford::default();
    for _ in 0..n {
        fill_uniform(rng, &mut u);
        q.sample_with(&mut scratch, &mut u, &mut |v| fill_uniform(rng, v), &mut z, &mut x)?;
        let qx = q.eval_standard(&z);
        if !(qx > 0.0) {
            return Err(Error::Internal(format!("proposal density {qx} at its own draw {x:?}")));
        }
        acc.push(g(&x) / qx);
    }
    Ok(acc.finish())
}

fn plugin_target_for<'a>(
    weights_signed: &[f64],
    signed_target: &'a dyn Fn(&[f64]) -> f64,
) -> PluginTarget<'a> {
    let has_pos = weights_signed.iter().any(|&w| w > 0.0);
    let has_neg = weights_signed.iter().any(|&w| w < 0.0);
    if has_pos && has_neg {
        let m = weights_signed.len() as f64;
        let integral = weights_signed.iter().sum::<f64>() / m;
        let abs_integral = weights_signed.iter().map(|w| w.abs()).sum::<f64>() / m;
        if integral != 0.0 {
            return PluginTarget::Signed {
                signed_target,
                integral,
                abs_integral,
            };
        }
    }
    PluginTarget::Is
}

fn is_proposal_from(
    problem: &Problem,
    m: usize,
    rule: BandwidthRule,
    standardize: bool,
    seed: u64,
    part: impl Fn(f64) -> f64,
) -> Result<ProposalEstimate> {
    if m == 0 {
        return Err(Error::InvalidArgument("pilot size must be at least 1".into()));
    }
    let mut rng = stream(seed, PILOT_STREAM);
    let pilot = Pilot::draw(problem, m, &mut rng)?;
    let signed = pilot.ratios(|x| part(problem.integrand(x)) * problem.target_density(x));
    let weights: Vec<f64> = signed.iter().map(|w| w.abs()).collect();
    let g = |x: &[f64]| part(problem.integrand(x)) * problem.target_density(x);
    let target = plugin_target_for(&signed, &g);
    fit_proposal(problem, &pilot, &weights, rule, standardize, target)
}

/// Step 1 of NIS: fits `q^` to the pilot weights `|phi| p / q0`.
pub fn estimate_is_proposal(
    problem: &Problem,
    m: usize,
    rule: BandwidthRule,
    standardize: bool,
    seed: u64,
) -> Result<ProposalEstimate> {
    is_proposal_from(problem, m, rule, standardize, seed, |v| v)
}

fn warn_lambda(config: &NisConfig) {
    if config.pilot_fraction > LAMBDA_WARN {
        log::warn!(
            "pilot fraction {} exceeds {LAMBDA_WARN}; most of the budget goes to the pilot",
            config.pilot_fraction
        );
    }
}

/// Two-stage NIS: pilot fit, then unnormalized IS from `q^`.
pub fn nis_integrate(problem: &Problem, config: &NisConfig) -> Result<IntegrationResult> {
    let start = Instant::now();
    let m = config.pilot_size()?;
    warn_lambda(config);
    let q = estimate_is_proposal(problem, m, config.bandwidth, config.standardize, config.seed)?;
    let n = config.budget - m;
    let mut rng = stream(config.seed, MAIN_STREAM);
    let (estimate, variance) = lbfp_is_stage(&q, n, &mut rng, |x| {
        problem.integrand(x) * problem.target_density(x)
    })?;
    Ok(IntegrationResult {
        method: Method::Nis,
        estimate,
        variance,
        pilot_size: m,
        main_size: n,
        elapsed_secs: start.elapsed().as_secs_f64(),
        mean_pilot_weight: Some(q.mean_weight()),
        pilot_hits: Some(q.hits()),
        bandwidth: Some(q.bandwidth()),
    })
}

struct Side {
    estimate: f64,
    variance: f64,
    pilot: usize,
    main: usize,
    weight: f64,
    hits: usize,
    bandwidth: Option<f64>,
}

fn run_side(problem: &Problem, config: &NisConfig, budget: usize, seed: u64, sign: f64) -> Result<Option<Side>> {
    let m = pilot_split(budget, config.pilot_fraction)?;
    let part = move |v: f64| (sign * v).max(0.0);
    let q = match is_proposal_from(problem, m, config.bandwidth, config.standardize, seed, part) {
        Ok(q) => q,
        Err(Error::EmptyPilot) => return Ok(None),
        Err(e) => return Err(e),
    };
    let n = budget - m;
    let mut rng = stream(seed, MAIN_STREAM);
    let (estimate, variance) = lbfp_is_stage(&q, n, &mut rng, |x| {
        part(problem.integrand(x)) * problem.target_density(x)
    })?;
    Ok(Some(Side {
        estimate,
        variance,
        pilot: m,
        main: n,
        weight: q.mean_weight(),
        hits: q.hits(),
        bandwidth: Some(q.bandwidth()),
    }))
}

/// NIS+/-: NIS on `phi+` and `phi-` with half the budget each; returns
/// `I+ - I-` with summed variances.
pub fn nis_split_integrate(problem: &Problem, config: &NisConfig) -> Result<IntegrationResult> {
    let start = Instant::now();
    config.pilot_size()?;
    let half = config.budget / 2;
    let pos = run_side(problem, config, config.budget - half, derive_seed(config.seed, POSITIVE_SIDE), 1.0)?;
    let neg = run_side(problem, config, half, derive_seed(config.seed, NEGATIVE_SIDE), -1.0)?;
    if pos.is_none() && neg.is_none() {
        return Err(Error::EmptyPilot);
    }
    for (side, name) in [(&pos, "positive"), (&neg, "negative")] {
        if side.is_none() {
            log::warn!("{name} part of the integrand never hit in the pilot; taking it as 0");
        }
    }
    let get = |s: &Option<Side>, f: fn(&Side) -> f64| s.as_ref().map_or(0.0, f);
    let count = |s: &Option<Side>, f: fn(&Side) -> usize| s.as_ref().map_or(0, f);
    Ok(IntegrationResult {
        method: Method::NisSplit,
        estimate: get(&pos, |s| s.estimate) - get(&neg, |s| s.estimate),
        variance: get(&pos, |s| s.variance) + get(&neg, |s| s.variance),
        pilot_size: count(&pos, |s| s.pilot) + count(&neg, |s| s.pilot),
        main_size: count(&pos, |s| s.main) + count(&neg, |s| s.main),
        elapsed_secs: start.elapsed().as_secs_f64(),
        mean_pilot_weight: Some(get(&pos, |s| s.weight) + get(&neg, |s| s.weight)),
        pilot_hits: Some(count(&pos, |s| s.hits) + count(&neg, |s| s.hits)),
        bandwidth: pos.as_ref().or(neg.as_ref()).and_then(|s| s.bandwidth),
    })
}

/// Self-normalized pilot estimate `sum phi r / sum r` for importance
/// ratios `r = p~ / q0`.
pub fn pilot_snis_estimate(integrand_values: &[f64], ratios: &[f64]) -> Result<f64> {
    let den: f64 = ratios.iter().sum();
    if !(den > 0.0) {
        return Err(Error::EmptyPilot);
    }
    let num: f64 = integrand_values.iter().zip(ratios).map(|(f, r)| f * r).sum();
    Ok(num / den)
}

/// Step 1 of NSIS: fits `q^` to the centered weights `|phi - I~| p~ / q0`.
/// Returns the proposal and the pilot estimate `I~`.
pub fn estimate_sis_proposal(
    problem: &Problem,
    m: usize,
    rule: BandwidthRule,
    standardize: bool,
    seed: u64,
) -> Result<(ProposalEstimate, f64)> {
    if m == 0 {
        return Err(Error::InvalidArgument("pilot size must be at least 1".into()));
    }
    let mut rng = stream(seed, PILOT_STREAM);
    let pilot = Pilot::draw(problem, m, &mut rng)?;
    let ratios = pilot.ratios(|x| problem.unnormalized_target(x));
    let values: Vec<f64> = (0..m).map(|j| problem.integrand(pilot.point(j))).collect();
    let pilot_estimate = pilot_snis_estimate(&values, &ratios)?;
    let weights: Vec<f64> = values
        .iter()
        .zip(&ratios)
        .map(|(f, r)| (f - pilot_estimate).abs() * r)
        .collect();
    let q = fit_proposal(problem, &pilot, &weights, rule, standardize, PluginTarget::Is)?;
    Ok((q, pilot_estimate))
}

/// Two-stage NSIS: centered pilot fit, then self-normalized IS from `q^`.
/// Reads only the unnormalized target.
pub fn nsis_integrate(problem: &Problem, config: &NisConfig) -> Result<IntegrationResult> {
    let start = Instant::now();
    let m = config.pilot_size()?;
    warn_lambda(config);
    let (q, _) = estimate_sis_proposal(problem, m, config.bandwidth, config.standardize, config.seed)?;
    let n = config.budget - m;
    let d = problem.dim();
    let mut rng = stream(config.seed, MAIN_STREAM);
    let mut scratch = SampleScratch::default();
    let (mut u, mut z, mut x) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let mut w = Vec::with_capacity(n);
    let mut f = Vec::with_capacity(n);
    for _ in 0..n {
        fill_uniform(&mut rng, &mut u);
        q.sample_with(&mut scratch, &mut u, &mut |v| fill_uniform(&mut rng, v), &mut z, &mut x)?;
        let qx = q.eval_standard(&z);
        if !(qx > 0.0) {
            return Err(Error::Internal(format!("proposal density {qx} at its own draw {x:?}")));
        }
        w.push(problem.unnormalized_target(&x) / qx);
        f.push(problem.integrand(&x));
    }
    let (estimate, variance) = self_normalized(&f, &w)?;
    Ok(IntegrationResult {
        method: Method::Nsis,
        estimate,
        variance,
        pilot_size: m,
        main_size: n,
        elapsed_secs: start.elapsed().as_secs_f64(),
        mean_pilot_weight: Some(q.mean_weight()),
        pilot_hits: Some(q.hits()),
        bandwidth: Some(q.bandwidth()),
    })
}

/// `sum f w / sum w` and its delta-method variance.
fn self_normalized(f: &[f64], w: &[f64]) -> Result<(f64, f64)> {
    let sw: f64 = w.iter().sum();
    if !(sw > 0.0) {
        return Err(Error::DegenerateWeights);
    }
    let est = f.iter().zip(w).map(|(f, w)| f * w).sum::<f64>() / sw;
    let var = f
        .iter()
        .zip(w)
        .map(|(f, w)| w * w * (f - est) * (f - est))
        .sum::<f64>()
        / (sw * sw);
    Ok((est, var))
}

/// Crude Monte Carlo from the problem's exact target sampler.
pub fn mc_integrate(problem: &Problem, n: usize, seed: u64) -> Result<IntegrationResult> {
    let start = Instant::now();
    let sampler = problem.target_sampler().ok_or_else(|| Error::UnsupportedMethod {
        method: "mc".into(),
        problem: "problem without a target sampler".into(),
    })?;
    let d = problem.dim();
    let mut rng = stream(seed, MAIN_STREAM);
    let (mut u, mut x) = (vec![0.0; d], vec![0.0; d]);
    let mut acc = Welford::default();
    for _ in 0..n {
        fill_uniform(&mut rng, &mut u);
        sampler.sample_into(&u, &mut x)?;
        acc.push(problem.integrand(&x));
    }
    let (est, var) = acc.finish();
    Ok(IntegrationResult::baseline(Method::Mc, est, var, n, start))
}

/// Unnormalized IS `(1/n) sum phi p / q` from a fixed proposal.
pub fn is_integrate(problem: &Problem, proposal: &dyn Proposal, n: usize, seed: u64) -> Result<IntegrationResult> {
    let start = Instant::now();
    let d = problem.dim();
    let mut rng = stream(seed, MAIN_STREAM);
    let (mut u, mut x) = (vec![0.0; d], vec![0.0; d]);
    let mut acc = Welford::default();
    for _ in 0..n {
        fill_uniform(&mut rng, &mut u);
        proposal.sample_into(&u, &mut x)?;
        let q = proposal.density(&x);
        let v = if q > 0.0 {
            problem.integrand(&x) * problem.target_density(&x) / q
        } else {
            0.0
        };
        acc.push(v);
    }
    let (est, var) = acc.finish();
    Ok(IntegrationResult::baseline(Method::Is, est, var, n, start))
}

/// Self-normalized IS `sum phi w / sum w`, `w = p~ / q`, from a fixed proposal.
pub fn sis_integrate(problem: &Problem, proposal: &dyn Proposal, n: usize, seed: u64) -> Result<IntegrationResult> {
    let start = Instant::now();
    let d = problem.dim();
    let mut rng = stream(seed, MAIN_STREAM);
    let (mut u, mut x) = (vec![0.0; d], vec![0.0; d]);
    let mut w = Vec::with_capacity(n);
    let mut f = Vec::with_capacity(n);
    for _ in 0..n {
        fill_uniform(&mut rng, &mut u);
        proposal.sample_into(&u, &mut x)?;
        let q = proposal.density(&x);
        w.push(if q > 0.0 { problem.unnormalized_target(&x) / q } else { 0.0 });
        f.push(problem.integrand(&x));
    }
    let (est, var) = self_normalized(&f, &w)?;
    Ok(IntegrationResult::baseline(Method::Sis, est, var, n, start))
}
