use rand::Rng;

use super::bandwidth::{
    curvature_pilot_width, effective_sample_size, plugin_bandwidth, reference_bandwidth, weighted_moments, BandwidthRule,
    PluginMode,
};
use super::problem::{Problem, Proposal};
use crate::error::{Error, Result};
use crate::lbfp::{build_histogram, LbfpDensity, OriginPolicy, SampleScratch};
use crate::rng::SimRng;

/// Per-axis affine map `z = (x - center) / scale` between the problem's
/// coordinates and the coordinates the LBFP is built in.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisScaling {
    center: Vec<f64>,
    scale: Vec<f64>,
    jacobian: f64,
}

impl AxisScaling {
    pub fn identity(d: usize) -> Self {
        Self {
            center: vec![0.0; d],
            scale: vec![1.0; d],
            jacobian: 1.0,
        }
    }

    pub fn new(center: Vec<f64>, scale: Vec<f64>) -> Result<Self> {
        if center.len() != scale.len() || scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::DegenerateSpread);
        }
        let jacobian = scale.iter().product();
        Ok(Self {
            center,
            scale,
            jacobian,
        })
    }

    pub fn is_identity(&self) -> bool {
        self.center.iter().all(|&c| c == 0.0) && self.scale.iter().all(|&s| s == 1.0)
    }

    /// `prod scale`, so a density `f` in `z` is `f(z) / jacobian` in `x`.
    pub fn jacobian(&self) -> f64 {
        self.jacobian
    }

    pub fn to_standard(&self, x: &[f64], z: &mut [f64]) {
        for i in 0..x.len() {
            z[i] = (x[i] - self.center[i]) / self.scale[i];
        }
    }

    pub fn from_standard(&self, z: &[f64], x: &mut [f64]) {
        for i in 0..z.len() {
            x[i] = self.center[i] + self.scale[i] * z[i];
        }
    }
}

/// Box the proposal is restricted to, in standardized coordinates, and
/// the LBFP mass inside it.
#[derive(Debug, Clone, PartialEq)]
struct Window {
    low: Vec<f64>,
    high: Vec<f64>,
    mass: f64,
}

impl Window {
    fn contains(&self, z: &[f64]) -> bool {
        z.iter()
            .zip(self.low.iter().zip(&self.high))
            .all(|(&v, (&a, &b))| v >= a && v <= b)
    }
}

/// Rejection attempts before a restricted draw is declared impossible.
const MAX_REJECTIONS: usize = 100_000;

/// An estimated proposal `q^`: an LBFP (possibly in standardized
/// coordinates), optionally restricted to the trial law's bounded support,
/// plus pilot diagnostics.
#[derive(Debug, Clone)]
pub struct ProposalEstimate {
    density: LbfpDensity,
    scaling: AxisScaling,
    window: Option<Window>,
    mean_weight: f64,
    pilot_size: usize,
    hits: usize,
}

impl ProposalEstimate {
    pub fn new(density: LbfpDensity, scaling: AxisScaling, mean_weight: f64, pilot_size: usize, hits: usize) -> Self {
        assert_eq!(density.dim(), scaling.center.len(), "scaling dimension mismatch");
        Self {
            density,
            scaling,
            window: None,
            mean_weight,
            pilot_size,
            hits,
        }
    }

    /// Restricts `q^` to the box `[low, high]` (problem coordinates) and
    /// renormalizes it there.
    pub fn restricted_to(mut self, low: &[f64], high: &[f64]) -> Result<Self> {
        let d = self.density.dim();
        let (mut zl, mut zh) = (vec![0.0; d], vec![0.0; d]);
        self.scaling.to_standard(low, &mut zl);
        self.scaling.to_standard(high, &mut zh);
        let mass = self.density.box_mass(&zl, &zh);
        if !(mass > 0.0) {
            return Err(Error::EmptyPilot);
        }
        self.window = Some(Window {
            low: zl,
            high: zh,
            mass: mass.min(1.0),
        });
        Ok(self)
    }

    /// LBFP mass inside the restriction box (1 when unrestricted).
    pub fn support_mass(&self) -> f64 {
        self.window.as_ref().map_or(1.0, |w| w.mass)
    }

    /// The LBFP in standardized coordinates.
    pub fn density(&self) -> &LbfpDensity {
        &self.density
    }

    pub fn scaling(&self) -> &AxisScaling {
        &self.scaling
    }

    /// Mean pilot weight, an estimate of the normalizing integral.
    pub fn mean_weight(&self) -> f64 {
        self.mean_weight
    }

    pub fn pilot_size(&self) -> usize {
        self.pilot_size
    }

    /// Pilot draws with positive weight.
    pub fn hits(&self) -> usize {
        self.hits
    }

    /// Bin width in standardized coordinates.
    pub fn bandwidth(&self) -> f64 {
        self.density.bin_width()
    }

    /// Draw by inversion of `u`. When restricted, draws outside the box are
    /// rejected and fresh uniforms taken from `fresh`. On return `z` holds
    /// the standardized draw.
    pub fn sample_with(
        &self,
        scratch: &mut SampleScratch,
        u: &mut [f64],
        fresh: &mut dyn FnMut(&mut [f64]),
        z: &mut [f64],
        out: &mut [f64],
    ) -> Result<()> {
        self.density.sample_with(scratch, u, z)?;
        if let Some(w) = &self.window {
            let mut tries = 0;
            while !w.contains(z) {
                tries += 1;
                if tries > MAX_REJECTIONS {
                    return Err(Error::Internal("restricted proposal rejects every draw".into()));
                }
                fresh(u);
                self.density.sample_with(scratch, u, z)?;
            }
        }
        self.scaling.from_standard(z, out);
        Ok(())
    }

    /// `q^` at a standardized point.
    pub fn eval_standard(&self, z: &[f64]) -> f64 {
        match &self.window {
            Some(w) if !w.contains(z) => 0.0,
            Some(w) => self.density.eval(z) / (w.mass * self.scaling.jacobian),
            None => self.density.eval(z) / self.scaling.jacobian,
        }
    }

    /// `q^(x)`; `z` is scratch of length `d`.
    pub fn eval_with(&self, x: &[f64], z: &mut [f64]) -> f64 {
        self.scaling.to_standard(x, z);
        self.eval_standard(z)
    }
}

impl Proposal for ProposalEstimate {
    fn dim(&self) -> usize {
        self.density.dim()
    }

    /// Restricted proposals retry with uniforms derived from `u`.
    fn sample_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        let mut z = vec![0.0; out.len()];
        let mut uu = u.to_vec();
        let seed = u.iter().fold(0u64, |acc, v| acc.rotate_left(17) ^ v.to_bits());
        let mut rng = crate::rng::stream(seed, 0);
        let mut fresh = |v: &mut [f64]| v.iter_mut().for_each(|x| *x = rng.random());
        self.sample_with(&mut SampleScratch::default(), &mut uu, &mut fresh, &mut z, out)
    }

    fn density(&self, x: &[f64]) -> f64 {
        let mut z = vec![0.0; x.len()];
        self.eval_with(x, &mut z)
    }
}

/// `M` draws from the trial law with their trial densities.
pub(crate) struct Pilot {
    pub dim: usize,
    pub points: Vec<f64>,
    pub trial_density: Vec<f64>,
}

impl Pilot {
    pub fn draw(problem: &Problem, m: usize, rng: &mut SimRng) -> Result<Self> {
        let d = problem.dim();
        let trial = problem.trial();
        let mut points = vec![0.0; m * d];
        let mut trial_density = Vec::with_capacity(m);
        let mut u = vec![0.0; d];
        for x in points.chunks_exact_mut(d) {
            u.iter_mut().for_each(|v| *v = rng.random());
            trial.sample_into(&u, x)?;
            trial_density.push(trial.density(x));
        }
        Ok(Self {
            dim: d,
            points,
            trial_density,
        })
    }

    pub fn len(&self) -> usize {
        self.trial_density.len()
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.points[j * self.dim..(j + 1) * self.dim]
    }

    /// `f(x) / q0(x)` for each draw; zero where `q0` vanishes.
    pub fn ratios(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..self.len())
            .map(|j| {
                let q0 = self.trial_density[j];
                if q0 > 0.0 {
                    f(self.point(j)) / q0
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// Which optimal-width functional a plug-in fit should target.
#[derive(Clone, Copy)]
pub(crate) enum PluginTarget<'a> {
    Is,
    Signed {
        signed_target: &'a dyn Fn(&[f64]) -> f64,
        integral: f64,
        abs_integral: f64,
    },
}

/// Builds the weighted LBFP from a pilot.
pub(crate) fn fit_proposal(
    problem: &Problem,
    pilot: &Pilot,
    weights: &[f64],
    rule: BandwidthRule,
    standardize: bool,
    target: PluginTarget<'_>,
) -> Result<ProposalEstimate> {
    let d = pilot.dim;
    let m = pilot.len();
    let total: f64 = weights.iter().sum();
    let hits = weights.iter().filter(|&&w| w > 0.0).count();
    if !(total > 0.0) {
        return Err(Error::EmptyPilot);
    }
    if !total.is_finite() {
        return Err(Error::InvalidSample("non-finite pilot weight".into()));
    }
    let scaling = if standardize {
        let (mean, sd) = weighted_moments(&pilot.points, weights, d);
        AxisScaling::new(mean, sd)?
    } else {
        AxisScaling::identity(d)
    };
    let z: Vec<f64> = if scaling.is_identity() {
        pilot.points.clone()
    } else {
        let mut z = vec![0.0; pilot.points.len()];
        for (x, zz) in pilot.points.chunks_exact(d).zip(z.chunks_exact_mut(d)) {
            scaling.to_standard(x, zz);
        }
        z
    };
    let reference = || reference_bandwidth(&z, weights, d, effective_sample_size(weights));
    let h = match rule {
        BandwidthRule::Fixed(h) => h,
        BandwidthRule::Reference => reference()?,
        BandwidthRule::Plugin => {
            let h_ref = reference()?;
            let h_pilot = curvature_pilot_width(h_ref, d, effective_sample_size(weights));
            let first = LbfpDensity::new(build_histogram(d, &z, weights, h_pilot, &OriginPolicy::Auto)?);
            let trial = problem.trial();
            let jac = scaling.jacobian();
            let q0_z = |zz: &[f64]| {
                let mut x = vec![0.0; zz.len()];
                scaling.from_standard(zz, &mut x);
                trial.density(&x) * jac
            };
            match target {
                PluginTarget::Is => plugin_bandwidth(&first, &q0_z, m, h_ref, PluginMode::Is),
                PluginTarget::Signed {
                    signed_target,
                    integral,
                    abs_integral,
                } => {
                    let g_z = |zz: &[f64]| {
                        let mut x = vec![0.0; zz.len()];
                        scaling.from_standard(zz, &mut x);
                        signed_target(&x) * jac
                    };
                    plugin_bandwidth(
                        &first,
                        &q0_z,
                        m,
                        h_ref,
                        PluginMode::Signed {
                            signed_target: &g_z,
                            integral,
                            abs_integral,
                        },
                    )
                }
            }
        }
    };
    let grid = build_histogram(d, &z, weights, h, &OriginPolicy::Auto)?;
    let q = ProposalEstimate::new(LbfpDensity::new(grid), scaling, total / m as f64, m, hits);
    match problem.trial().support() {
        Some((low, high)) => q.restricted_to(&low, &high),
        None => Ok(q),
    }
}
