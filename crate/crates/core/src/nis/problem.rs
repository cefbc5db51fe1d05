use std::fmt;
use std::sync::Arc;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// A real function of a point, shared across workers.
pub type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A sampler with a known density, driven by caller-supplied uniforms.
pub trait Proposal: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    /// Maps `u` in `[0,1)^d` to a draw.
    fn sample_into(&self, u: &[f64], out: &mut [f64]) -> Result<()>;

    fn density(&self, x: &[f64]) -> f64;

    /// Bounding box `(low, high)` of the support, when bounded.
    fn support(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        None
    }
}

/// Uniform law on an axis-aligned box.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformBox {
    low: Vec<f64>,
    high: Vec<f64>,
    inv_volume: f64,
}

impl UniformBox {
    pub fn new(low: Vec<f64>, high: Vec<f64>) -> Result<Self> {
        if low.is_empty() || low.len() != high.len() {
            return Err(Error::InvalidArgument("box bounds must have equal, positive length".into()));
        }
        if low.iter().zip(&high).any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b)) {
            return Err(Error::InvalidArgument("box bounds must be finite with low < high".into()));
        }
        let volume: f64 = low.iter().zip(&high).map(|(a, b)| b - a).product();
        Ok(Self {
            low,
            high,
            inv_volume: 1.0 / volume,
        })
    }

    /// `[a, b]^d`.
    pub fn cube(d: usize, a: f64, b: f64) -> Result<Self> {
        Self::new(vec![a; d], vec![b; d])
    }
}

impl Proposal for UniformBox {
    fn dim(&self) -> usize {
        self.low.len()
    }

    fn sample_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        for i in 0..self.low.len() {
            out[i] = self.low[i] + u[i] * (self.high[i] - self.low[i]);
        }
        Ok(())
    }

    fn density(&self, x: &[f64]) -> f64 {
        let inside = x
            .iter()
            .zip(self.low.iter().zip(&self.high))
            .all(|(&v, (&a, &b))| v >= a && v <= b);
        if inside {
            self.inv_volume
        } else {
            0.0
        }
    }

    fn support(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        Some((self.low.clone(), self.high.clone()))
    }
}

/// Independent normal coordinates `N(mean_i, sd_i^2)`.
#[derive(Debug, Clone)]
pub struct GaussianProposal {
    mean: Vec<f64>,
    sd: Vec<f64>,
    std: Normal,
}

impl GaussianProposal {
    pub fn new(mean: Vec<f64>, sd: Vec<f64>) -> Result<Self> {
        if mean.is_empty() || mean.len() != sd.len() {
            return Err(Error::InvalidArgument("mean and sd must have equal, positive length".into()));
        }
        if sd.iter().any(|s| !(s.is_finite() && *s > 0.0)) || mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidArgument("normal parameters must be finite with sd > 0".into()));
        }
        Ok(Self {
            mean,
            sd,
            std: Normal::standard(),
        })
    }

    pub fn standard(d: usize) -> Self {
        Self::new(vec![0.0; d], vec![1.0; d]).expect("valid parameters")
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }
}

impl Proposal for GaussianProposal {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn sample_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        for i in 0..self.mean.len() {
            // u = 0 would map to -inf.
            let ui = u[i].max(f64::MIN_POSITIVE);
            out[i] = self.mean[i] + self.sd[i] * self.std.inverse_cdf(ui);
        }
        Ok(())
    }

    fn density(&self, x: &[f64]) -> f64 {
        let mut log = 0.0;
        for i in 0..self.mean.len() {
            let z = (x[i] - self.mean[i]) / self.sd[i];
            log += -0.5 * z * z - self.sd[i].ln();
        }
        (log - 0.5 * self.mean.len() as f64 * (2.0 * std::f64::consts::PI).ln()).exp()
    }
}

/// An integration problem `I = E_p[phi]` with a trial law `q0`.
///
/// `target` is a possibly unnormalized density `p~`; the normalized `p`
/// used by the unnormalized estimators is `target_scale * target`.
/// Self-normalized estimators read `target` alone, so changing the scale
/// leaves them bit-identical.
#[derive(Clone)]
pub struct Problem {
    dim: usize,
    target: ScalarField,
    target_scale: f64,
    integrand: ScalarField,
    trial: Arc<dyn Proposal>,
    target_sampler: Option<Arc<dyn Proposal>>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("dim", &self.dim)
            .field("target_scale", &self.target_scale)
            .field("trial", &self.trial)
            .finish_non_exhaustive()
    }
}

impl Problem {
    pub fn new(
        dim: usize,
        target: ScalarField,
        integrand: ScalarField,
        trial: Arc<dyn Proposal>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if trial.dim() != dim {
            return Err(Error::InvalidArgument(format!(
                "trial proposal has dimension {}, problem has {dim}",
                trial.dim()
            )));
        }
        Ok(Self {
            dim,
            target,
            target_scale: 1.0,
            integrand,
            trial,
            target_sampler: None,
        })
    }

    /// Sets `c` such that `p = c * target`.
    pub fn with_target_scale(mut self, scale: f64) -> Self {
        assert!(scale.is_finite() && scale > 0.0, "target scale must be positive");
        self.target_scale = scale;
        self
    }

    /// Attaches an exact sampler of `p`, enabling crude Monte Carlo.
    pub fn with_target_sampler(mut self, sampler: Arc<dyn Proposal>) -> Self {
        assert_eq!(sampler.dim(), self.dim, "sampler dimension mismatch");
        self.target_sampler = Some(sampler);
        self
    }

    pub fn with_integrand(&self, integrand: ScalarField) -> Self {
        Self {
            integrand,
            ..self.clone()
        }
    }

    pub fn with_trial(&self, trial: Arc<dyn Proposal>) -> Self {
        assert_eq!(trial.dim(), self.dim, "trial dimension mismatch");
        Self {
            trial,
            ..self.clone()
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Normalized `p(x)`.
    pub fn target_density(&self, x: &[f64]) -> f64 {
        self.target_scale * (self.target)(x)
    }

    /// Unnormalized `p~(x)`.
    pub fn unnormalized_target(&self, x: &[f64]) -> f64 {
        (self.target)(x)
    }

    pub fn target_scale(&self) -> f64 {
        self.target_scale
    }

    pub fn integrand(&self, x: &[f64]) -> f64 {
        (self.integrand)(x)
    }

    pub fn trial(&self) -> &Arc<dyn Proposal> {
        &self.trial
    }

    pub fn target_sampler(&self) -> Option<&Arc<dyn Proposal>> {
        self.target_sampler.as_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_box_maps_and_weights() {
        let b = UniformBox::new(vec![-1.0, 0.0], vec![1.0, 4.0]).unwrap();
        let mut x = [0.0; 2];
        b.sample_into(&[0.5, 0.25], &mut x).unwrap();
        assert_eq!(x, [0.0, 1.0]);
        assert_eq!(b.density(&x), 0.125);
        assert_eq!(b.density(&[2.0, 1.0]), 0.0);
        assert!(UniformBox::new(vec![1.0], vec![1.0]).is_err());
    }

    #[test]
    fn gaussian_density_and_quantile() {
        let g = GaussianProposal::new(vec![1.0], vec![2.0]).unwrap();
        let mut x = [0.0];
        g.sample_into(&[0.5], &mut x).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        let peak = 1.0 / (2.0 * (2.0 * std::f64::consts::PI).sqrt());
        assert!((g.density(&[1.0]) - peak).abs() < 1e-15);
        g.sample_into(&[0.0], &mut x).unwrap();
        assert!(x[0].is_finite());
    }
}
