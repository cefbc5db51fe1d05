use std::io::{BufRead, Write};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, LogNormal};

use super::law::{ReflectedLbfp, TimeLaw};
use super::sim::QueueModel;
use crate::error::{Error, Result};
use crate::nis::reference_bandwidth;

pub const TRACE_HEADER: &str = "interarrival_s,service_ms";

/// Arrival rate of the synthetic trace.
pub const SYNTHETIC_ARRIVAL_RATE: f64 = 0.074;

/// One job of a trace. Both durations are used on the same clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub interarrival_s: f64,
    pub service_ms: f64,
}

/// Synthetic e-mail trace: exponential interarrivals at rate 0.074 and
/// services from `0.7 Gamma(4, 1) + 0.3 LogNormal(ln(40/3) - 1/8, 1/2)`,
/// whose mean is 6.8 (rate about 0.147).
pub fn generate_synthetic_trace(n: usize, seed: u64) -> Vec<TraceRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exp = Exp::new(SYNTHETIC_ARRIVAL_RATE).expect("positive rate");
    let gamma = Gamma::new(4.0, 1.0).expect("valid shape");
    let lognormal = LogNormal::new((40.0f64 / 3.0).ln() - 0.125, 0.5).expect("valid scale");
    (0..n)
        .map(|_| {
            let interarrival_s = exp.sample(&mut rng);
            let service_ms = if rand::Rng::random::<f64>(&mut rng) < 0.7 {
                gamma.sample(&mut rng)
            } else {
                lognormal.sample(&mut rng)
            };
            TraceRecord {
                interarrival_s,
                service_ms,
            }
        })
        .collect()
}

pub fn write_trace<W: Write>(mut out: W, records: &[TraceRecord]) -> Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in records {
        writeln!(out, "{:.16e},{:.16e}", r.interarrival_s, r.service_ms)?;
    }
    Ok(())
}

/// Reads a trace; leading `#` lines are skipped.
pub fn read_trace<R: BufRead>(input: R) -> Result<Vec<TraceRecord>> {
    let mut lines = input.lines().enumerate().filter(|(_, l)| !matches!(l, Ok(l) if l.starts_with('#')));
    match lines.next().map(|(_, l)| l).transpose()? {
        Some(h) if h.trim() == TRACE_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header `{TRACE_HEADER}`"),
            })
        }
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = |message: String| Error::Parse { line: i + 1, message };
        let (a, b) = line.split_once(',').ok_or_else(|| bad("expected two columns".into()))?;
        let parse = |s: &str| -> Result<f64> {
            let v: f64 = s.trim().parse().map_err(|e| bad(format!("`{s}`: {e}")))?;
            if v.is_finite() && v >= 0.0 {
                Ok(v)
            } else {
                Err(bad(format!("duration {v}")))
            }
        };
        records.push(TraceRecord {
            interarrival_s: parse(a)?,
            service_ms: parse(b)?,
        });
    }
    if records.is_empty() {
        return Err(Error::Parse {
            line: 2,
            message: "trace has no records".into(),
        });
    }
    Ok(records)
}

/// Fitted nominal laws of a trace: `mu = n / sum t` and the service LBFP
/// with the reference width `2.15 sd n^(-1/5)`.
#[derive(Debug, Clone)]
pub struct TraceFit {
    pub arrival_rate: f64,
    pub service_rate: f64,
    pub service_bandwidth: f64,
    pub service: Arc<ReflectedLbfp>,
}

pub fn fit_trace(records: &[TraceRecord]) -> Result<TraceFit> {
    let n = records.len() as f64;
    let t: f64 = records.iter().map(|r| r.interarrival_s).sum();
    let s: Vec<f64> = records.iter().map(|r| r.service_ms).collect();
    let ones = vec![1.0; s.len()];
    let h = reference_bandwidth(&s, &ones, 1, n)?;
    Ok(TraceFit {
        arrival_rate: n / t,
        service_rate: n / s.iter().sum::<f64>(),
        service_bandwidth: h,
        service: Arc::new(ReflectedLbfp::fit(&s, &ones, h)?),
    })
}

impl QueueModel {
    /// Exponential interarrivals at the trace MLE and the service LBFP.
    pub fn from_trace(records: &[TraceRecord], servers: usize, level: usize) -> Result<Self> {
        let fit = fit_trace(records)?;
        Self::new(
            servers,
            TimeLaw::exponential(fit.arrival_rate)?,
            TimeLaw::Reflected(fit.service),
            level,
        )
    }
}
