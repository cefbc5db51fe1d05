//! Benchmark problems with analytic or simulation oracles, and their
//! parametric importance-sampling baselines.
//!
//! | key | integrand | target | trial `q0` |
//! |-----|-----------|--------|------------|
//! | `example1?d=` | `x1 1[-1,1]^d(x)` | `N(0, I_d)` | `U[-1,1]^d` |
//! | `bs-call?K=` | discounted call payoff of `Z` | `N(0,1)` | `U[-5,5]` |
//! | `example3?a=&phi=` | `x2` or `1{x1 < 0}` | `U[-1,4] x N(|x1|, .09 a^2)`, unnormalized | `U[-4,7] x [-4,8]` |

use std::sync::Arc;

use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::nis::{
    is_integrate, mc_integrate, nis_integrate, nis_split_integrate, nsis_integrate, optimal_lambda,
    sis_integrate, BandwidthRule, GaussianProposal, IntegrationResult, Method, NisConfig, Problem,
    Proposal, UniformBox,
};

/// Constant that the example-3 target is secretly multiplied by.
const HIDDEN_SCALE: f64 = 7.3;

fn std_normal() -> Normal {
    Normal::standard()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Example1 { d: usize },
    BsCall(BsParams),
    Example3 { a: f64, phi: u8 },
}

/// A registered problem: the integration payload, its oracle and the
/// settings used by each method.
#[derive(Debug, Clone)]
pub struct BenchmarkProblem {
    /// Canonical registry key.
    pub key: String,
    pub problem: Problem,
    pub oracle: f64,
    /// How `oracle` was obtained.
    pub oracle_source: &'static str,
    /// Variance of the optimal IS estimator per draw, where known.
    pub optimal_variance: Option<f64>,
    /// Methods that make sense for the problem, baselines first.
    pub methods: Vec<Method>,
    /// Fixed proposal of the parametric baseline (`is`, `cdis` or `sis`).
    pub baseline: Option<(Method, Arc<dyn Proposal>)>,
    kind: Kind,
}

impl BenchmarkProblem {
    pub fn dim(&self) -> usize {
        self.problem.dim()
    }

    /// Family name without parameters.
    pub fn family(&self) -> &'static str {
        match self.kind {
            Kind::Example1 { .. } => "example1",
            Kind::BsCall(_) => "bs-call",
            Kind::Example3 { .. } => "example3",
        }
    }

    /// Default pilot fraction of a two-stage method.
    pub fn default_lambda(&self, method: Method) -> f64 {
        match (method, self.kind) {
            (Method::NisSplit, _) => optimal_lambda(self.dim()),
            (Method::Nis, Kind::BsCall(_)) => optimal_lambda(1),
            (Method::Nis, _) => 0.15,
            (Method::Nsis, Kind::Example3 { .. }) => 0.2,
            (Method::Nsis, _) => 0.05,
            _ => 0.15,
        }
    }

    /// Default bin-width rule for a two-stage method at budget `n`.
    pub fn default_bandwidth(&self, method: Method, n: usize) -> BandwidthRule {
        match (method, self.kind) {
            // 1.54, 1.224, 1.09 at N = 1250, 5000, 10000 on standardized axes
            (Method::Nsis, Kind::Example3 { .. }) => {
                BandwidthRule::Fixed(1.54 * (n as f64 / 1250.0).powf(-1.0 / 6.0))
            }
            _ => BandwidthRule::Plugin,
        }
    }

    pub fn default_standardize(&self) -> bool {
        matches!(self.kind, Kind::Example3 { .. })
    }

    /// Fully defaulted configuration for `method`.
    pub fn config(&self, method: Method, n: usize, seed: u64) -> NisConfig {
        NisConfig::new(n, self.default_lambda(method), seed)
            .with_bandwidth(self.default_bandwidth(method, n))
            .with_standardize(self.default_standardize())
    }

    /// Runs `method` with an explicit configuration; baselines use only
    /// `config.budget` and `config.seed`.
    pub fn run_with(&self, method: Method, config: &NisConfig) -> Result<IntegrationResult> {
        let unsupported = || Error::UnsupportedMethod {
            method: method.name().into(),
            problem: self.key.clone(),
        };
        if !self.methods.contains(&method) {
            return Err(unsupported());
        }
        let n = config.budget;
        match method {
            Method::Mc => mc_integrate(&self.problem, n, config.seed),
            Method::Is | Method::Cdis | Method::Sis => {
                let (tag, q) = self.baseline.as_ref().filter(|(m, _)| *m == method).ok_or_else(unsupported)?;
                let mut r = if *tag == Method::Sis {
                    sis_integrate(&self.problem, q.as_ref(), n, config.seed)?
                } else {
                    is_integrate(&self.problem, q.as_ref(), n, config.seed)?
                };
                r.method = *tag;
                Ok(r)
            }
            Method::Nis => nis_integrate(&self.problem, config),
            Method::NisSplit => nis_split_integrate(&self.problem, config),
            Method::Nsis => nsis_integrate(&self.problem, config),
        }
    }

    /// Runs `method` with the defaulted configuration.
    pub fn run(&self, method: Method, n: usize, seed: u64) -> Result<IntegrationResult> {
        self.run_with(method, &self.config(method, n, seed))
    }
}

/// `2 (phi(0) - phi(1)) (2 Phi(1) - 1)^(d-1)`, the integral of `|x1|` over
/// `[-1,1]^d` against the standard normal.
pub fn example1_abs_integral(d: usize) -> f64 {
    let n = std_normal();
    2.0 * (n.pdf(0.0) - n.pdf(1.0)) * (2.0 * n.cdf(1.0) - 1.0).powi(d as i32 - 1)
}

pub fn example1(d: usize) -> Result<BenchmarkProblem> {
    if !(1..=8).contains(&d) {
        return Err(Error::InvalidArgument(format!("example1 needs 1 <= d <= 8, got {d}")));
    }
    let norm = (2.0 * std::f64::consts::PI).powf(-0.5 * d as f64);
    let target = Arc::new(move |x: &[f64]| norm * (-0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp());
    let integrand = Arc::new(|x: &[f64]| {
        if x.iter().all(|v| v.abs() <= 1.0) {
            x[0]
        } else {
            0.0
        }
    });
    let trial: Arc<dyn Proposal> = Arc::new(UniformBox::cube(d, -1.0, 1.0)?);
    let problem = Problem::new(d, target, integrand, trial.clone())?
        .with_target_sampler(Arc::new(GaussianProposal::standard(d)));
    Ok(BenchmarkProblem {
        key: format!("example1?d={d}"),
        problem,
        oracle: 0.0,
        oracle_source: "odd integrand on a symmetric domain",
        optimal_variance: Some(example1_abs_integral(d).powi(2)),
        methods: vec![Method::Mc, Method::Is, Method::Nis, Method::NisSplit, Method::Nsis],
        baseline: Some((Method::Is, trial)),
        kind: Kind::Example1 { d },
    })
}

/// Geometric Brownian motion call option on one normal driver `Z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsParams {
    pub spot: f64,
    pub rate: f64,
    pub volatility: f64,
    pub maturity: f64,
    pub strike: f64,
}

impl BsParams {
    /// `S(0) = 100, r = .1, sigma = .2, T = 1`.
    pub fn with_strike(strike: f64) -> Self {
        Self {
            spot: 100.0,
            rate: 0.1,
            volatility: 0.2,
            maturity: 1.0,
            strike,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.spot, self.rate, self.volatility, self.maturity, self.strike];
        if all.iter().any(|v| !v.is_finite()) || self.spot <= 0.0 || self.volatility <= 0.0 || self.maturity <= 0.0 || self.strike <= 0.0 {
            return Err(Error::InvalidArgument(format!("invalid option parameters {self:?}")));
        }
        Ok(())
    }

    fn terminal(&self, z: f64) -> f64 {
        let (s, r, v, t) = (self.spot, self.rate, self.volatility, self.maturity);
        s * ((r - 0.5 * v * v) * t + v * t.sqrt() * z).exp()
    }

    /// `z` at which `S(T) = K`.
    pub fn kink(&self) -> f64 {
        let (r, v, t) = (self.rate, self.volatility, self.maturity);
        ((self.strike / self.spot).ln() - (r - 0.5 * v * v) * t) / (v * t.sqrt())
    }
}

pub fn black_scholes_price(p: &BsParams) -> f64 {
    let n = std_normal();
    let sq = p.volatility * p.maturity.sqrt();
    let d1 = ((p.spot / p.strike).ln() + (p.rate + 0.5 * p.volatility * p.volatility) * p.maturity) / sq;
    let d2 = d1 - sq;
    p.spot * n.cdf(d1) - p.strike * (-p.rate * p.maturity).exp() * n.cdf(d2)
}

/// `exp(-rT) (S(T) - K)+` with `S(T)` driven by `z`.
pub fn discounted_payoff(p: &BsParams, z: f64) -> f64 {
    (-p.rate * p.maturity).exp() * (p.terminal(z) - p.strike).max(0.0)
}

/// Maximizer of `log F(z) - z^2/2` over `z` beyond the kink, by golden
/// section to `1e-10`.
pub fn optimal_drift(p: &BsParams) -> Result<f64> {
    p.validate()?;
    let g = |z: f64| {
        let f = discounted_payoff(p, z);
        if f > 0.0 {
            f.ln() - 0.5 * z * z
        } else {
            f64::NEG_INFINITY
        }
    };
    let lo = p.kink();
    // log F grows at most linearly with slope sigma sqrt(T)
    let mut a = lo;
    let mut b = lo.max(0.0) + p.volatility * p.maturity.sqrt() + 20.0;
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    while b - a > 1e-10 {
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - ratio * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + ratio * (b - a);
            gd = g(d);
        }
    }
    let z = 0.5 * (a + b);
    if !(z > lo) || (b - lo) < 1e-9 {
        return Err(Error::InvalidArgument("no interior maximum of the tilted payoff".into()));
    }
    Ok(z)
}

pub fn bs_call(params: BsParams) -> Result<BenchmarkProblem> {
    params.validate()?;
    let zstar = optimal_drift(&params)?;
    let n = std_normal();
    let target = Arc::new(move |x: &[f64]| n.pdf(x[0]));
    let integrand = Arc::new(move |x: &[f64]| discounted_payoff(&params, x[0]));
    let trial: Arc<dyn Proposal> = Arc::new(UniformBox::cube(1, -5.0, 5.0)?);
    let problem =
        Problem::new(1, target, integrand, trial)?.with_target_sampler(Arc::new(GaussianProposal::standard(1)));
    let cdis: Arc<dyn Proposal> = Arc::new(GaussianProposal::new(vec![zstar], vec![1.0])?);
    Ok(BenchmarkProblem {
        key: format!("bs-call?K={}", params.strike),
        problem,
        oracle: black_scholes_price(&params),
        oracle_source: "Black-Scholes closed form",
        optimal_variance: Some(0.0),
        methods: vec![Method::Mc, Method::Cdis, Method::Nis, Method::Nsis],
        baseline: Some((Method::Cdis, cdis)),
        kind: Kind::BsCall(params),
    })
}

/// Exact sampler of the example-3 target: `X1 ~ U[-1,4]`,
/// `X2 = |X1| + 0.3 a Z`.
#[derive(Debug, Clone)]
pub struct Example3Sampler {
    sd: f64,
    normal: Normal,
}

impl Example3Sampler {
    pub fn new(a: f64) -> Self {
        Self {
            sd: 0.3 * a,
            normal: std_normal(),
        }
    }
}

impl Proposal for Example3Sampler {
    fn dim(&self) -> usize {
        2
    }

    fn sample_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        out[0] = -1.0 + 5.0 * u[0];
        out[1] = out[0].abs() + self.sd * self.normal.inverse_cdf(u[1].max(f64::MIN_POSITIVE));
        Ok(())
    }

    fn density(&self, x: &[f64]) -> f64 {
        if (-1.0..=4.0).contains(&x[0]) {
            let z = (x[1] - x[0].abs()) / self.sd;
            0.2 * self.normal.pdf(z) / self.sd
        } else {
            0.0
        }
    }
}

/// `phi = 1` is `x2`, `phi = 2` is `1{x1 < 0}`.
pub fn example3(a: f64, phi: u8) -> Result<BenchmarkProblem> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::InvalidArgument(format!("example3 needs a > 0, got {a}")));
    }
    let (integrand, oracle): (crate::nis::ScalarField, f64) = match phi {
        1 => (Arc::new(|x: &[f64]| x[1]), 1.7),
        2 => (Arc::new(|x: &[f64]| if x[0] < 0.0 { 1.0 } else { 0.0 }), 0.2),
        _ => return Err(Error::InvalidArgument(format!("example3 phi must be 1 or 2, got {phi}"))),
    };
    let sampler = Example3Sampler::new(a);
    let shape = sampler.clone();
    // p~ = HIDDEN_SCALE * 5 * p
    let target = Arc::new(move |x: &[f64]| HIDDEN_SCALE * 5.0 * shape.density(x));
    let trial: Arc<dyn Proposal> = Arc::new(UniformBox::new(vec![-4.0, -4.0], vec![7.0, 8.0])?);
    let problem = Problem::new(2, target, integrand, trial.clone())?
        .with_target_scale(1.0 / (5.0 * HIDDEN_SCALE))
        .with_target_sampler(Arc::new(sampler));
    Ok(BenchmarkProblem {
        key: format!("example3?a={a}&phi={phi}"),
        problem,
        oracle,
        oracle_source: "generative model: E|X1| = 1.7, P(X1 < 0) = 0.2",
        optimal_variance: None,
        methods: vec![Method::Mc, Method::Sis, Method::Nsis],
        baseline: Some((Method::Sis, trial)),
        kind: Kind::Example3 { a, phi },
    })
}

fn param<T: std::str::FromStr>(params: &[(String, String)], name: &str, default: T) -> Result<T> {
    match params.iter().rev().find(|(k, _)| k == name) {
        None => Ok(default),
        Some((_, v)) => v
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("invalid value `{v}` for `{name}`"))),
    }
}

/// Splits `name?k=v&k=v`.
pub fn parse_key(key: &str) -> Result<(String, Vec<(String, String)>)> {
    let (name, query) = key.split_once('?').unwrap_or((key, ""));
    let mut params = Vec::new();
    for pair in query.split('&').filter(|s| !s.is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("malformed parameter `{pair}` in `{key}`")))?;
        params.push((k.to_string(), v.to_string()));
    }
    Ok((name.to_string(), params))
}

/// Registry names.
pub const PROBLEMS: [&str; 3] = ["example1", "bs-call", "example3"];

/// Builds a problem from `name` and `(key, value)` parameters; later
/// duplicates win. Unknown parameters are rejected.
pub fn lookup_with(name: &str, params: &[(String, String)]) -> Result<BenchmarkProblem> {
    let allowed: &[&str] = match name {
        "example1" => &["d"],
        "bs-call" => &["K", "S0", "r", "sigma", "T"],
        "example3" => &["a", "phi"],
        _ => return Err(Error::UnknownProblem(name.to_string())),
    };
    if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
        return Err(Error::InvalidArgument(format!("`{name}` has no parameter `{k}`")));
    }
    match name {
        "example1" => example1(param(params, "d", 1)?),
        "bs-call" => bs_call(BsParams {
            spot: param(params, "S0", 100.0)?,
            rate: param(params, "r", 0.1)?,
            volatility: param(params, "sigma", 0.2)?,
            maturity: param(params, "T", 1.0)?,
            strike: param(params, "K", 130.0)?,
        }),
        _ => example3(param(params, "a", 0.75)?, param(params, "phi", 1)?),
    }
}

/// Builds a problem from a registry key such as `bs-call?K=90`.
pub fn lookup(key: &str) -> Result<BenchmarkProblem> {
    let (name, params) = parse_key(key)?;
    lookup_with(&name, &params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example1_optimal_variances() {
        let v1 = example1(1).unwrap().optimal_variance.unwrap();
        assert!((v1 - 0.09856).abs() < 5e-5, "{v1}");
        let v4 = example1(4).unwrap().optimal_variance.unwrap();
        assert!((v4 - 0.00998).abs() < 5e-5, "{v4}");
    }

    #[test]
    fn bs_limits() {
        let mut p = BsParams::with_strike(1e-9);
        assert!((black_scholes_price(&p) - 100.0).abs() < 1e-6);
        p.strike = 90.0;
        p.volatility = 1e-9;
        let det = 100.0 - 90.0 * (-0.1f64).exp();
        assert!((black_scholes_price(&p) - det).abs() < 1e-9);
    }

    #[test]
    fn bs_reference_prices() {
        let p90 = black_scholes_price(&BsParams::with_strike(90.0));
        let p130 = black_scholes_price(&BsParams::with_strike(130.0));
        assert!((p90 - 19.99).abs() < 0.01, "{p90}");
        assert!((p130 - 2.54).abs() < 0.02, "{p130}");
    }

    #[test]
    fn payoff_kink_and_monotonicity() {
        let p = BsParams::with_strike(130.0);
        assert_eq!(discounted_payoff(&p, -10.0), 0.0);
        assert!(discounted_payoff(&p, p.kink()).abs() < 1e-9);
        let mut prev = 0.0;
        for i in 0..200 {
            let v = discounted_payoff(&p, -5.0 + 0.05 * i as f64);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn drift_is_stationary() {
        for k in [90.0, 130.0] {
            let p = BsParams::with_strike(k);
            let z = optimal_drift(&p).unwrap();
            let g = |z: f64| discounted_payoff(&p, z).ln() - 0.5 * z * z;
            let e = 1e-5;
            assert!(((g(z + e) - g(z - e)) / (2.0 * e)).abs() < 1e-6);
        }
        assert!(optimal_drift(&BsParams::with_strike(130.0)).unwrap() > 0.0);
    }

    #[test]
    fn registry_keys() {
        assert_eq!(lookup("example1?d=4").unwrap().dim(), 4);
        assert_eq!(lookup("bs-call?K=90").unwrap().key, "bs-call?K=90");
        assert_eq!(lookup("example3?a=3.5&phi=2").unwrap().oracle, 0.2);
        assert!(matches!(lookup("nope"), Err(Error::UnknownProblem(_))));
        assert!(lookup("example1?d=9").is_err());
        assert!(lookup("example1?k=2").is_err());
        assert!(lookup("example1?d").is_err());
    }

    #[test]
    fn example3_target_is_unnormalized() {
        let b = example3(0.75, 1).unwrap();
        let x = [1.0, 1.0];
        let p = b.problem.target_density(&x);
        assert!((b.problem.unnormalized_target(&x) / p - 5.0 * HIDDEN_SCALE).abs() < 1e-12);
        assert!((p - 0.2 * Normal::new(1.0, 0.225).unwrap().pdf(1.0)).abs() < 1e-12);
    }

    #[test]
    fn unsupported_method() {
        let b = example3(0.75, 1).unwrap();
        assert!(matches!(b.run(Method::Nis, 100, 1), Err(Error::UnsupportedMethod { .. })));
    }
}
