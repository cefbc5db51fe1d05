use crate::error::{Error, Result};

/// One linear piece of a univariate conditional frequency polygon on
/// `[left_midpoint, left_midpoint + width)`.
///
/// The density there is `intercept + slope * (x - left_midpoint)` and the
/// CDF runs from `cdf_low` to `cdf_high`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinSegment {
    pub intercept: f64,
    pub slope: f64,
    pub cdf_low: f64,
    pub cdf_high: f64,
    pub left_midpoint: f64,
    pub width: f64,
}

impl BinSegment {
    /// Probability mass of the piece, `alpha*h + beta*h^2/2`.
    pub fn mass(&self) -> f64 {
        self.width * (self.intercept + 0.5 * self.slope * self.width)
    }

    pub fn density(&self, x: f64) -> f64 {
        self.intercept + self.slope * (x - self.left_midpoint)
    }

    /// Forward CDF at `x` inside the piece.
    pub fn cdf(&self, x: f64) -> f64 {
        let z = x - self.left_midpoint;
        self.cdf_low + z * (self.intercept + 0.5 * self.slope * z)
    }

    /// Inverse CDF on this piece for `cdf_low <= y < cdf_high`.
    pub fn invert(&self, y: f64) -> Result<f64> {
        if !(y >= self.cdf_low && y < self.cdf_high) {
            return Err(Error::SegmentContract {
                y,
                low: self.cdf_low,
                high: self.cdf_high,
            });
        }
        Ok(self.invert_unchecked(y))
    }

    /// As [`invert`](Self::invert) but clamps to the piece instead of
    /// failing; used where rounding may leave `y` a few ulps past `cdf_high`.
    pub(crate) fn invert_unchecked(&self, y: f64) -> f64 {
        let (alpha, beta, h) = (self.intercept, self.slope, self.width);
        let t = self.left_midpoint;
        let (g1, g2) = (self.cdf_low, self.cdf_high);
        if beta == 0.0 {
            if g2 > g1 {
                let x = ((g2 - y) * t + (y - g1) * (t + h)) / (g2 - g1);
                return x.clamp(t, t + h);
            }
            return t;
        }
        // Root of alpha*z + beta*z^2/2 = y - g1 in the rationalized form
        // 2c / (alpha + sqrt(alpha^2 + 2*beta*c)); equal to
        // -alpha/beta + sgn(beta) * sqrt(alpha^2/beta^2 - 2*(g1 - y)/beta)
        // but free of cancellation when beta is small.
        let c = (y - g1).max(0.0);
        let disc = (alpha * alpha + 2.0 * beta * c).max(0.0);
        let denom = alpha + disc.sqrt();
        let z = if denom > 0.0 { 2.0 * c / denom } else { 0.0 };
        t + z.clamp(0.0, h)
    }
}

/// Inverse CDF of a single segment; see [`BinSegment::invert`].
pub fn invert_segment(seg: &BinSegment, y: f64) -> Result<f64> {
    seg.invert(y)
}
