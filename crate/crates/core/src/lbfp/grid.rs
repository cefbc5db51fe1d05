use crate::error::{Error, Result};

/// Largest supported dimension. The blend in [`crate::lbfp::LbfpDensity::eval`]
/// touches `2^d` corners per query.
pub const MAX_DIM: usize = 12;

/// Cap on the number of cells a single grid may allocate.
pub const MAX_CELLS: usize = 1 << 26;

/// Tolerance for `sum(heights) * h^d == 1`.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// How the bin-edge lattice is placed.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum OriginPolicy {
    /// Lowest bin edge at the smallest positive-weight coordinate of each
    /// axis, so the data start exactly on an edge.
    #[default]
    Auto,
    /// Bin edges at `anchor[i] + k * h` on axis `i`.
    Anchored(Vec<f64>),
}

/// Axis-aligned weighted histogram with a shared bin width.
///
/// Bin `k` on axis `i` is `[t_k - h/2, t_k + h/2)` with mid-point
/// `t_k = origin[i] + k * h`. Heights are stored row-major, last axis
/// fastest. Indices one step outside the stored block read as zero, so
/// every stored bin is surrounded by a ring of implicit empty bins.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramGrid {
    origin: Vec<f64>,
    bin_width: f64,
    counts: Vec<usize>,
    heights: Vec<f64>,
    total_weight: f64,
    strides: Vec<usize>,
}

fn strides_for(counts: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; counts.len()];
    for i in (0..counts.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * counts[i + 1];
    }
    strides
}

impl HistogramGrid {
    /// Assembles a grid from raw parts, checking every invariant.
    pub fn from_parts(
        origin: Vec<f64>,
        bin_width: f64,
        counts: Vec<usize>,
        heights: Vec<f64>,
        total_weight: f64,
    ) -> Result<Self> {
        let dim = origin.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidArgument(format!(
                "dimension {dim} outside 1..={MAX_DIM}"
            )));
        }
        if counts.len() != dim {
            return Err(Error::InvalidArgument(format!(
                "{} axis counts for a {dim}-dimensional grid",
                counts.len()
            )));
        }
        if !(bin_width.is_finite() && bin_width > 0.0) {
            return Err(Error::InvalidArgument(format!("bin width {bin_width}")));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidArgument("non-finite origin".into()));
        }
        if counts.iter().any(|&c| c == 0) {
            return Err(Error::InvalidArgument("axis with zero bins".into()));
        }
        let cells = counts
            .iter()
            .try_fold(1usize, |acc, &c| acc.checked_mul(c))
            .filter(|&n| n <= MAX_CELLS)
            .ok_or_else(|| Error::InvalidArgument("grid too large".into()))?;
        if heights.len() != cells {
            return Err(Error::InvalidArgument(format!(
                "{} heights for {cells} cells",
                heights.len()
            )));
        }
        if let Some(bad) = heights.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidArgument(format!("bin height {bad}")));
        }
        if !(total_weight.is_finite() && total_weight >= 0.0) {
            return Err(Error::InvalidArgument(format!("total weight {total_weight}")));
        }
        let grid = Self::assemble(origin, bin_width, counts, heights, total_weight);
        let mass = grid.mass();
        if (mass - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidArgument(format!(
                "heights integrate to {mass}, expected 1"
            )));
        }
        Ok(grid)
    }

    pub(crate) fn assemble(
        origin: Vec<f64>,
        bin_width: f64,
        counts: Vec<usize>,
        heights: Vec<f64>,
        total_weight: f64,
    ) -> Self {
        let strides = strides_for(&counts);
        Self {
            origin,
            bin_width,
            counts,
            heights,
            total_weight,
            strides,
        }
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub(crate) fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Mid-point `t_k` of bin `k` on `axis`. `k` may address the implicit ring.
    #[inline]
    pub fn midpoint(&self, axis: usize, k: isize) -> f64 {
        self.origin[axis] + k as f64 * self.bin_width
    }

    /// `sum(heights) * h^d`.
    pub fn mass(&self) -> f64 {
        self.heights.iter().sum::<f64>() * self.bin_width.powi(self.dim() as i32)
    }

    /// Height of the bin at `index`, zero outside the stored block.
    pub fn height(&self, index: &[isize]) -> f64 {
        debug_assert_eq!(index.len(), self.dim());
        let mut flat = 0usize;
        for ((&k, &n), &s) in index.iter().zip(&self.counts).zip(&self.strides) {
            if k < 0 || k as usize >= n {
                return 0.0;
            }
            flat += k as usize * s;
        }
        self.heights[flat]
    }

    /// Locates the interpolation cell `[t_k, t_k + h)` containing `x` on
    /// `axis`. Returns `(k, (x - t_k) / h)` or `None` when the cell has no
    /// stored corner.
    #[inline]
    pub(crate) fn locate(&self, axis: usize, x: f64) -> Option<(isize, f64)> {
        let h = self.bin_width;
        let s = (x - self.origin[axis]) / h;
        if !s.is_finite() || s < -2.0 || s > self.counts[axis] as f64 + 1.0 {
            return None;
        }
        let mut k = s.floor() as isize;
        // Align with the mid-points as `midpoint` computes them so that
        // x == t_k lands exactly on a corner.
        if x < self.midpoint(axis, k) {
            k -= 1;
        } else if x >= self.midpoint(axis, k + 1) {
            k += 1;
        }
        if k < -1 || k > self.counts[axis] as isize - 1 {
            return None;
        }
        let frac = ((x - self.midpoint(axis, k)) / h).clamp(0.0, 1.0);
        // x < t_{k+1}, so the far corner never receives the full weight.
        let frac = if frac == 1.0 { 1.0 - f64::EPSILON / 2.0 } else { frac };
        Some((k, frac))
    }

    /// Histogram over the first `prefix_len` axes: trailing axes are summed
    /// and scaled by `h^(d - prefix_len)`, so the result again integrates to 1.
    pub fn marginalize(&self, prefix_len: usize) -> Result<HistogramGrid> {
        let d = self.dim();
        if prefix_len == 0 || prefix_len > d {
            return Err(Error::IndexOutOfRange {
                index: prefix_len,
                max: d,
            });
        }
        if prefix_len == d {
            return Ok(self.clone());
        }
        let block: usize = self.counts[prefix_len..].iter().product();
        let scale = self.bin_width.powi((d - prefix_len) as i32);
        let heights = self
            .heights
            .chunks_exact(block)
            .map(|chunk| chunk.iter().sum::<f64>() * scale)
            .collect();
        Ok(Self::assemble(
            self.origin[..prefix_len].to_vec(),
            self.bin_width,
            self.counts[..prefix_len].to_vec(),
            heights,
            self.total_weight,
        ))
    }
}

/// Builds the normalized weighted histogram of `points` (row-major,
/// `dim` coordinates per sample).
///
/// The grid spans the bounding box of all positive-weight samples plus one
/// empty bin on each side of every axis.
pub fn build_histogram(
    dim: usize,
    points: &[f64],
    weights: &[f64],
    bin_width: f64,
    origin_policy: &OriginPolicy,
) -> Result<HistogramGrid> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::InvalidArgument(format!(
            "dimension {dim} outside 1..={MAX_DIM}"
        )));
    }
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(Error::InvalidArgument(format!("bin width {bin_width}")));
    }
    if points.len() != weights.len() * dim {
        return Err(Error::InvalidSample(format!(
            "{} coordinates for {} weights in dimension {dim}",
            points.len(),
            weights.len()
        )));
    }
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    let mut total = 0.0;
    for (x, &w) in points.chunks_exact(dim).zip(weights) {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSample(format!("non-finite coordinate in {x:?}")));
        }
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::InvalidSample(format!("weight {w}")));
        }
        if w > 0.0 {
            total += w;
            for i in 0..dim {
                lo[i] = lo[i].min(x[i]);
                hi[i] = hi[i].max(x[i]);
            }
        }
    }
    if !(total > 0.0) {
        return Err(Error::DegenerateWeights);
    }
    if !total.is_finite() {
        return Err(Error::InvalidSample("total weight overflows".into()));
    }

    let anchor = match origin_policy {
        OriginPolicy::Auto => lo.clone(),
        OriginPolicy::Anchored(a) if a.len() == dim && a.iter().all(|v| v.is_finite()) => a.clone(),
        OriginPolicy::Anchored(a) => {
            return Err(Error::InvalidArgument(format!(
                "anchor of length {} for dimension {dim}",
                a.len()
            )))
        }
    };

    let h = bin_width;
    let mut first = vec![0isize; dim];
    let mut counts = vec![0usize; dim];
    let mut origin = vec![0.0; dim];
    for i in 0..dim {
        let kmin = ((lo[i] - anchor[i]) / h).floor() as isize - 1;
        let kmax = ((hi[i] - anchor[i]) / h).floor() as isize + 1;
        first[i] = kmin;
        counts[i] = (kmax - kmin + 1) as usize;
        origin[i] = anchor[i] + (kmin as f64 + 0.5) * h;
    }
    let cells = counts
        .iter()
        .try_fold(1usize, |acc, &c| acc.checked_mul(c))
        .filter(|&n| n <= MAX_CELLS)
        .ok_or_else(|| {
            Error::InvalidArgument(format!("bin width {h} yields more than {MAX_CELLS} cells"))
        })?;
    let strides = strides_for(&counts);

    let mut sums = vec![0.0; cells];
    for (x, &w) in points.chunks_exact(dim).zip(weights) {
        if w > 0.0 {
            let mut flat = 0;
            for i in 0..dim {
                let k = ((x[i] - anchor[i]) / h).floor() as isize - first[i];
                // Rounding can push a sample onto the padding ring.
                let k = k.clamp(1, counts[i] as isize - 2) as usize;
                flat += k * strides[i];
            }
            sums[flat] += w;
        }
    }
    let norm = total * h.powi(dim as i32);
    let heights = sums.into_iter().map(|s| s / norm).collect();
    Ok(HistogramGrid::assemble(origin, h, counts, heights, total))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_sample_is_one_bin_flanked_by_empty_bins() {
        let g = build_histogram(1, &[0.3], &[1.0], 1.0, &OriginPolicy::Anchored(vec![0.0])).unwrap();
        assert_eq!(g.counts(), &[3]);
        assert_eq!(g.heights(), &[0.0, 1.0, 0.0]);
        assert_eq!(g.midpoint(0, 1), 0.5);
        assert_eq!(g.mass(), 1.0);
    }

    #[test]
    fn weighted_two_sample_heights() {
        let g = build_histogram(1, &[0.25, 0.75], &[1.0, 3.0], 0.5, &OriginPolicy::Anchored(vec![0.0])).unwrap();
        // bins [-0.5,0) [0,0.5) [0.5,1) [1,1.5)
        assert_eq!(g.counts(), &[4]);
        assert_eq!(g.heights(), &[0.0, 0.5, 1.5, 0.0]);
        assert_eq!(g.midpoint(0, 1), 0.25);
        assert_eq!(g.total_weight(), 4.0);
    }

    #[test]
    fn zero_weight_samples_do_not_widen_the_grid() {
        let g = build_histogram(1, &[0.25, 100.0], &[1.0, 0.0], 0.5, &OriginPolicy::Auto).unwrap();
        assert_eq!(g.counts(), &[3]);
    }

    #[test]
    fn auto_origin_starts_at_data_minimum() {
        let g = build_histogram(1, &[0.3, 1.0], &[1.0, 1.0], 0.5, &OriginPolicy::Auto).unwrap();
        // bins [-0.2,0.3) [0.3,0.8) [0.8,1.3) [1.3,1.8)
        assert_eq!(g.counts(), &[4]);
        assert!((g.midpoint(0, 1) - 0.55).abs() < 1e-15);
        assert_eq!(g.heights(), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn anchored_lattice() {
        let g = build_histogram(1, &[0.05], &[1.0], 0.1, &OriginPolicy::Anchored(vec![0.0])).unwrap();
        assert!((g.midpoint(0, 1) - 0.05).abs() < 1e-15);
        assert!((g.midpoint(0, 0) + 0.05).abs() < 1e-15);
    }

    #[test]
    fn degenerate_and_invalid_inputs() {
        assert!(matches!(
            build_histogram(1, &[0.1, 0.2], &[0.0, 0.0], 0.1, &OriginPolicy::Auto),
            Err(Error::DegenerateWeights)
        ));
        assert!(matches!(
            build_histogram(1, &[f64::NAN], &[1.0], 0.1, &OriginPolicy::Auto),
            Err(Error::InvalidSample(_))
        ));
        assert!(matches!(
            build_histogram(2, &[0.0], &[1.0], 0.1, &OriginPolicy::Auto),
            Err(Error::InvalidSample(_))
        ));
        assert!(build_histogram(1, &[0.0], &[1.0], 0.0, &OriginPolicy::Auto).is_err());
    }

    #[test]
    fn implicit_ring_reads_zero() {
        let g = build_histogram(2, &[0.0, 0.0], &[1.0], 1.0, &OriginPolicy::Auto).unwrap();
        assert_eq!(g.height(&[-1, 1]), 0.0);
        assert_eq!(g.height(&[1, 3]), 0.0);
        assert_eq!(g.height(&[1, 1]), 1.0);
    }

    #[test]
    fn marginalize_sums_trailing_axes() {
        let pts = [0.1, 0.1, 0.1, 0.6, 0.6, 0.1];
        let g = build_histogram(2, &pts, &[1.0, 1.0, 2.0], 0.5, &OriginPolicy::Auto).unwrap();
        let m = g.marginalize(1).unwrap();
        assert!((m.mass() - 1.0).abs() < 1e-12);
        assert_eq!(m.counts(), &[g.counts()[0]]);
        // bin [0,0.5) holds weight 2 of 4; [0.5,1) holds 2 of 4
        assert!((m.heights()[1] - 1.0).abs() < 1e-12);
        assert!((m.heights()[2] - 1.0).abs() < 1e-12);
        assert_eq!(g.marginalize(2).unwrap(), g);
        assert!(matches!(g.marginalize(3), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(g.marginalize(0), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn from_parts_rejects_unnormalized() {
        assert!(HistogramGrid::from_parts(vec![0.0], 1.0, vec![2], vec![0.5, 0.6], 1.0).is_err());
        assert!(HistogramGrid::from_parts(vec![0.0], 1.0, vec![2], vec![0.5, -0.5], 1.0).is_err());
        assert!(HistogramGrid::from_parts(vec![0.0], 1.0, vec![2], vec![0.5, 0.5], 1.0).is_ok());
    }
}
