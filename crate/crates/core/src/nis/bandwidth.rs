//! Bin-width rules: the Gaussian reference rule and plug-in estimates of
//! the asymptotically optimal widths.

use crate::error::{Error, Result};
use crate::lbfp::{LbfpDensity, MAX_DIM};

/// How the pilot LBFP bin width is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandwidthRule {
    Fixed(f64),
    /// `2.15 sigma M^(-1/(d+4))`.
    Reference,
    /// Plug-in estimate of the optimal width, started from the reference rule.
    Plugin,
}

impl std::fmt::Display for BandwidthRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Fixed(h) => write!(f, "fixed:{h}"),
            Self::Reference => f.write_str("reference"),
            Self::Plugin => f.write_str("plugin"),
        }
    }
}

impl std::str::FromStr for BandwidthRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reference" => Ok(Self::Reference),
            "plugin" => Ok(Self::Plugin),
            _ => {
                let v = s.strip_prefix("fixed:").unwrap_or(s);
                match v.parse::<f64>() {
                    Ok(h) if h.is_finite() && h > 0.0 => Ok(Self::Fixed(h)),
                    _ => Err(Error::InvalidArgument(format!(
                        "bandwidth rule `{s}` (expected reference, plugin or a positive width)"
                    ))),
                }
            }
        }
    }
}

/// Weighted mean and standard deviation (divisor `sum w`) of each axis.
pub fn weighted_moments(points: &[f64], weights: &[f64], d: usize) -> (Vec<f64>, Vec<f64>) {
    let total: f64 = weights.iter().sum();
    let mut mean = vec![0.0; d];
    for (x, &w) in points.chunks_exact(d).zip(weights) {
        for i in 0..d {
            mean[i] += w * x[i];
        }
    }
    mean.iter_mut().for_each(|m| *m /= total);
    let mut var = vec![0.0; d];
    for (x, &w) in points.chunks_exact(d).zip(weights) {
        for i in 0..d {
            let r = x[i] - mean[i];
            var[i] += w * r * r;
        }
    }
    (mean, var.into_iter().map(|v| (v / total).sqrt()).collect())
}

/// Kish effective sample size `(sum w)^2 / sum w^2`.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    let s: f64 = weights.iter().sum();
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    if s2 > 0.0 {
        s * s / s2
    } else {
        0.0
    }
}

/// Gaussian reference rule `2.15 sigma M^(-1/(d+4))`, with `sigma` the
/// geometric mean of the per-axis weighted standard deviations.
pub fn reference_bandwidth(points: &[f64], weights: &[f64], d: usize, m: f64) -> Result<f64> {
    if d == 0 || points.len() != weights.len() * d {
        return Err(Error::InvalidArgument("points and weights disagree in length".into()));
    }
    if weights.iter().filter(|&&w| w > 0.0).count() < 2 {
        return Err(Error::DegenerateSpread);
    }
    let (_, sd) = weighted_moments(points, weights, d);
    if sd.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::DegenerateSpread);
    }
    let sigma = (sd.iter().map(|s| s.ln()).sum::<f64>() / d as f64).exp();
    Ok(2.15 * sigma * m.powf(-1.0 / (d as f64 + 4.0)))
}

/// `4 / (d + 8)`.
pub fn optimal_lambda(d: usize) -> f64 {
    4.0 / (d as f64 + 8.0)
}

/// Which optimal width the plug-in targets.
#[derive(Clone, Copy)]
pub enum PluginMode<'a> {
    /// Non-negative integrand, rate `M^(-1/(d+4))`.
    Is,
    /// Integrand of both signs, rate `M^(-1/(d+2))`. `signed_target` is
    /// `phi * p` in the pilot's coordinates; the integrals are `I` and
    /// `int |phi| p`.
    Signed {
        signed_target: &'a dyn Fn(&[f64]) -> f64,
        integral: f64,
        abs_integral: f64,
    },
}

/// Plug-in functionals of the optimal-width formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PluginConstants {
    pub h1: f64,
    pub h2: f64,
    /// Unclamped optimal width; may be non-finite.
    pub h: f64,
}

/// Evaluates the width functionals on the pilot grid: second partials by
/// central differences of bin heights, integrals by Riemann sums over bin
/// mid-points, `q0` at mid-points. Mid-points outside the trial support
/// are skipped, as are differences reaching across its boundary.
pub fn plugin_constants(
    pilot: &LbfpDensity,
    trial_density: &dyn Fn(&[f64]) -> f64,
    m: usize,
    mode: PluginMode<'_>,
) -> PluginConstants {
    let grid = pilot.grid();
    let d = grid.dim();
    let h = grid.bin_width();
    let vol = h.powi(d as i32);
    let counts = grid.counts();
    let total: usize = counts.iter().product();
    let mut idx = [0isize; MAX_DIM];
    let mut nb = [0isize; MAX_DIM];
    let mut x = [0.0; MAX_DIM];
    let mut second = [0.0; MAX_DIM];
    let (mut h1, mut h2) = (0.0, 0.0);
    let mut diag = 0.0;
    let mut cross = 0.0;
    for flat in 0..total {
        let mut r = flat;
        for i in (0..d).rev() {
            idx[i] = (r % counts[i]) as isize;
            r /= counts[i];
            x[i] = grid.midpoint(i, idx[i]);
        }
        let q = grid.heights()[flat];
        let q0 = trial_density(&x[..d]);
        if q0 <= 0.0 {
            continue;
        }
        for i in 0..d {
            // A neighbour outside the trial support marks a support edge,
            // not curvature.
            let xi = x[i];
            x[i] = xi + h;
            let up_inside = trial_density(&x[..d]) > 0.0;
            x[i] = xi - h;
            let down_inside = trial_density(&x[..d]) > 0.0;
            x[i] = xi;
            second[i] = if up_inside && down_inside {
                nb[..d].copy_from_slice(&idx[..d]);
                nb[i] += 1;
                let up = grid.height(&nb[..d]);
                nb[i] -= 2;
                let down = grid.height(&nb[..d]);
                (up - 2.0 * q + down) / (h * h)
            } else {
                0.0
            };
        }
        match mode {
            PluginMode::Is => {
                if q > 0.0 {
                    for i in 0..d {
                        diag += second[i] * second[i] / q;
                        for j in 0..d {
                            if j != i {
                                cross += second[i] * second[j] / q;
                            }
                        }
                    }
                }
                if q0 > 0.0 {
                    h2 += q / q0;
                }
            }
            PluginMode::Signed {
                signed_target,
                integral,
                abs_integral,
            } => {
                let g = signed_target(&x[..d]);
                let f = g / integral - g.abs() / abs_integral;
                let lap: f64 = second[..d].iter().sum();
                if q > 0.0 {
                    h1 -= f * f * lap / (8.0 * q * q) + f * lap / (4.0 * q);
                }
                if q0 > 0.0 {
                    h2 += q / q0 - 2.0 * f / q0;
                    if q > 0.0 {
                        h2 -= f * f / (q0 * q);
                    }
                }
            }
        }
    }
    let df = d as f64;
    let mf = m as f64;
    match mode {
        PluginMode::Is => {
            let h1 = (49.0 / 2880.0 * diag + cross / 64.0) * vol;
            let h2 = h2 * vol;
            let ratio = df * h2 * 2f64.powi(d as i32) / (4.0 * h1 * 3f64.powi(d as i32));
            PluginConstants {
                h1,
                h2,
                h: ratio.powf(1.0 / (df + 4.0)) * mf.powf(-1.0 / (df + 4.0)),
            }
        }
        PluginMode::Signed { .. } => {
            let (h1, h2) = (h1 * vol, h2 * vol);
            let ratio = df * h2 * 2f64.powi(d as i32 - 1) / (h1 * 3f64.powi(d as i32));
            PluginConstants {
                h1,
                h2,
                h: ratio.powf(1.0 / (df + 2.0)) * mf.powf(-1.0 / (df + 2.0)),
            }
        }
    }
}

/// Oversmoothed width for the curvature pilot: the reference width rescaled
/// from the density rate `M^(-1/(d+4))` to the second-derivative rate
/// `M^(-1/(d+8))`.
pub fn curvature_pilot_width(h_ref: f64, d: usize, m: f64) -> f64 {
    let df = d as f64;
    h_ref * m.powf(1.0 / (df + 4.0) - 1.0 / (df + 8.0))
}

/// Plug-in optimal width, clamped to `[h_ref/5, 5 h_ref]`. The pilot should
/// be built wider than `h_ref` (see [`curvature_pilot_width`]) since its
/// second differences are the noisiest ingredient. An unusable signed
/// estimate falls back to the non-negative one, and that to `h_ref`.
pub fn plugin_bandwidth(
    pilot: &LbfpDensity,
    trial_density: &dyn Fn(&[f64]) -> f64,
    m: usize,
    h_ref: f64,
    mode: PluginMode<'_>,
) -> f64 {
    let mut c = plugin_constants(pilot, trial_density, m, mode);
    if matches!(mode, PluginMode::Signed { .. }) && !(c.h.is_finite() && c.h > 0.0) {
        log::debug!("signed plug-in unusable (H1 = {}, H2 = {}); trying h*", c.h1, c.h2);
        c = plugin_constants(pilot, trial_density, m, PluginMode::Is);
    }
    if c.h.is_finite() && c.h > 0.0 {
        c.h.clamp(h_ref / 5.0, 5.0 * h_ref)
    } else {
        log::warn!(
            "plug-in bandwidth unusable (H1 = {}, H2 = {}); using reference width {h_ref}",
            c.h1,
            c.h2
        );
        h_ref
    }
}
