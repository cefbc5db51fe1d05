use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lbfp::{build_histogram, BinSegment, LbfpDensity, OriginPolicy};

/// Distribution of a non-negative duration.
#[derive(Debug, Clone)]
pub enum TimeLaw {
    Exponential { rate: f64 },
    Reflected(Arc<ReflectedLbfp>),
}

impl TimeLaw {
    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidArgument(format!("exponential rate {rate}")));
        }
        Ok(TimeLaw::Exponential { rate })
    }

    pub fn density(&self, y: f64) -> f64 {
        match self {
            TimeLaw::Exponential { rate } if y >= 0.0 => rate * (-rate * y).exp(),
            TimeLaw::Exponential { .. } => 0.0,
            TimeLaw::Reflected(f) => f.eval(y),
        }
    }

    pub fn ln_density(&self, y: f64) -> f64 {
        match self {
            TimeLaw::Exponential { rate } if y >= 0.0 => rate.ln() - rate * y,
            _ => self.density(y).ln(),
        }
    }

    /// Inversion draw for `u` in `[0, 1)`.
    pub fn sample(&self, u: f64) -> f64 {
        match self {
            TimeLaw::Exponential { rate } => -(-u).ln_1p() / rate,
            TimeLaw::Reflected(f) => f.sample(u),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            TimeLaw::Exponential { rate } => 1.0 / rate,
            TimeLaw::Reflected(f) => f.mean(),
        }
    }

    /// Right end of the support, or for unbounded laws the point beyond
    /// which the mass is below `1e-12`.
    pub fn upper_bound(&self) -> f64 {
        match self {
            TimeLaw::Exponential { rate } => 1e-12f64.ln().abs() / rate,
            TimeLaw::Reflected(f) => f.upper_bound(),
        }
    }

    /// Rate of the exponential law with the same mean.
    pub fn rate(&self) -> f64 {
        1.0 / self.mean()
    }
}

/// Univariate LBFP folded at zero: `q(y) = f(y) + f(-y)` for `y >= 0`,
/// where `f` is an LBFP whose bin edges sit on multiples of `h`.
///
/// Only the first bin's taper crosses zero, so folding keeps the shape of
/// the data and puts all mass on `[0, inf)`. A draw is `|z|` with `z` an
/// inversion draw from `f`.
///
/// An optional floor mixes in `U[0, a]` with mass `tau`, so the law is
/// positive on all of `[0, a]` whatever the data covered.
#[derive(Debug, Clone)]
pub struct ReflectedLbfp {
    density: LbfpDensity,
    segments: Vec<BinSegment>,
    floor: Option<(f64, f64)>,
}

impl ReflectedLbfp {
    /// Weighted fit with bin width `h`. Values must be finite and `>= 0`.
    pub fn fit(values: &[f64], weights: &[f64], h: f64) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidSample(format!("duration {v}")));
        }
        let grid = build_histogram(1, values, weights, h, &OriginPolicy::Anchored(vec![0.0]))?;
        Ok(Self::from_density(LbfpDensity::new(grid)))
    }

    pub fn from_density(density: LbfpDensity) -> Self {
        let segments = density
            .conditional_cdf_table(&[])
            .expect("a normalized grid has positive total mass");
        Self {
            density,
            segments,
            floor: None,
        }
    }

    /// Mixes in `U[0, upper]` with mass `tau` in `(0, 1)`.
    pub fn with_floor(mut self, tau: f64, upper: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) || !(upper.is_finite() && upper > 0.0) {
            return Err(Error::InvalidArgument(format!("floor mass {tau} on [0, {upper}]")));
        }
        self.floor = Some((tau, upper));
        Ok(self)
    }

    /// Largest point with positive density.
    pub fn upper_bound(&self) -> f64 {
        let g = self.density.grid();
        let top = g.midpoint(0, g.counts()[0] as isize - 1);
        match self.floor {
            Some((_, a)) => top.max(a),
            None => top,
        }
    }

    pub fn density(&self) -> &LbfpDensity {
        &self.density
    }

    pub fn bin_width(&self) -> f64 {
        self.density.bin_width()
    }

    pub fn eval(&self, y: f64) -> f64 {
        if y < 0.0 {
            return 0.0;
        }
        let fold = self.density.eval(&[y]) + self.density.eval(&[-y]);
        match self.floor {
            Some((tau, a)) => (1.0 - tau) * fold + if y <= a { tau / a } else { 0.0 },
            None => fold,
        }
    }

    pub fn sample(&self, u: f64) -> f64 {
        match self.floor {
            Some((tau, a)) if u >= 1.0 - tau => a * (u - (1.0 - tau)) / tau,
            Some((tau, _)) => self.sample_fold(u / (1.0 - tau)),
            None => self.sample_fold(u),
        }
    }

    fn sample_fold(&self, u: f64) -> f64 {
        let idx = self.segments.partition_point(|s| s.cdf_high <= u);
        let seg = &self.segments[idx.min(self.segments.len() - 1)];
        seg.invert_unchecked(u).abs()
    }

    /// `E|Z|`, exact over the linear pieces.
    pub fn mean(&self) -> f64 {
        let fold = self.fold_mean();
        match self.floor {
            Some((tau, a)) => (1.0 - tau) * fold + tau * a / 2.0,
            None => fold,
        }
    }

    fn fold_mean(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| {
                let (a, b) = (s.left_midpoint, s.left_midpoint + s.width);
                if a < 0.0 && b > 0.0 {
                    -first_moment(s, a, 0.0) + first_moment(s, 0.0, b)
                } else if b <= 0.0 {
                    -first_moment(s, a, b)
                } else {
                    first_moment(s, a, b)
                }
            })
            .sum()
    }
}

// Integral of x * density over [a, b] inside one piece.
fn first_moment(s: &BinSegment, a: f64, b: f64) -> f64 {
    let t = s.left_midpoint;
    let c0 = s.intercept - s.slope * t;
    c0 * (b * b - a * a) / 2.0 + s.slope * (b * b * b - a * a * a) / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_inversion_and_density() {
        let law = TimeLaw::exponential(2.0).unwrap();
        assert_eq!(law.sample(0.0), 0.0);
        let m = law.sample(0.5);
        assert!((m - std::f64::consts::LN_2 / 2.0).abs() < 1e-15);
        assert!((law.ln_density(1.0) - law.density(1.0).ln()).abs() < 1e-14);
        assert_eq!(law.density(-1.0), 0.0);
    }

    #[test]
    fn reflected_fold_integrates_to_one() {
        let values = [0.1, 0.2, 0.9, 1.7, 3.0];
        let f = ReflectedLbfp::fit(&values, &[1.0; 5], 0.5).unwrap();
        let n = 200_000;
        let top = 5.0;
        let dx = top / n as f64;
        let total: f64 = (0..n).map(|i| f.eval((i as f64 + 0.5) * dx) * dx).sum();
        assert!((total - 1.0).abs() < 1e-6, "{total}");
        let mean: f64 = (0..n)
            .map(|i| {
                let y = (i as f64 + 0.5) * dx;
                y * f.eval(y) * dx
            })
            .sum();
        assert!((mean - f.mean()).abs() < 1e-6, "{mean} vs {}", f.mean());
    }

    #[test]
    fn floor_keeps_mass_one() {
        let f = ReflectedLbfp::fit(&[1.0, 1.5], &[1.0, 1.0], 0.5)
            .unwrap()
            .with_floor(0.1, 8.0)
            .unwrap();
        assert_eq!(f.upper_bound(), 8.0);
        let n = 400_000;
        let dx = 8.0 / n as f64;
        let total: f64 = (0..n).map(|i| f.eval((i as f64 + 0.5) * dx) * dx).sum();
        assert!((total - 1.0).abs() < 1e-6, "{total}");
        assert!((f.eval(7.0) - 0.1 / 8.0).abs() < 1e-15);
        assert!((f.sample(0.95) - 4.0).abs() < 1e-12);
        let mean: f64 = (0..n).map(|i| (i as f64 + 0.5) * dx * f.eval((i as f64 + 0.5) * dx) * dx).sum();
        assert!((mean - f.mean()).abs() < 1e-6);
    }

    #[test]
    fn reflected_draws_are_non_negative_and_monotone() {
        let f = ReflectedLbfp::fit(&[0.05, 0.3, 0.6], &[1.0, 2.0, 1.0], 0.25).unwrap();
        let mut last = -1.0;
        for i in 0..1000 {
            let y = f.sample(i as f64 / 1000.0);
            assert!(y >= 0.0);
            if y > 0.25 {
                // past the fold the map is monotone
                assert!(y >= last);
                last = y;
            }
        }
    }

    #[test]
    fn rejects_negative_durations() {
        assert!(ReflectedLbfp::fit(&[-0.1], &[1.0], 1.0).is_err());
        assert!(TimeLaw::exponential(0.0).is_err());
    }
}
