use super::grid::{HistogramGrid, MAX_DIM};
use super::segment::BinSegment;
use crate::error::{Error, Result};

/// Linear blend frequency polygon over a [`HistogramGrid`].
///
/// Inside the cell `prod [t_{k_i}, t_{k_i} + h)` the density is the
/// multilinear interpolation of the `2^d` surrounding bin heights. The
/// marginal histograms over every coordinate prefix are computed once at
/// construction; sampling walks them coordinate by coordinate with the
/// inverse CDF of the conditional frequency polygon.
///
/// Immutable after construction and therefore `Sync`.
#[derive(Debug, Clone, PartialEq)]
pub struct LbfpDensity {
    grid: HistogramGrid,
    // prefix_grids[i] covers axes 0..=i; the last entry is the full grid.
    prefix_grids: Vec<HistogramGrid>,
}

/// Reusable buffers for [`LbfpDensity::sample_with`].
#[derive(Debug, Default, Clone)]
pub struct SampleScratch {
    row: Vec<f64>,
    segments: Vec<BinSegment>,
    cells: Vec<(isize, f64)>,
}

/// Multilinear blend of `grid` at `x`.
pub(crate) fn blend(grid: &HistogramGrid, x: &[f64]) -> f64 {
    let d = grid.dim();
    debug_assert_eq!(x.len(), d);
    let mut cell = [0isize; MAX_DIM];
    let mut frac = [0f64; MAX_DIM];
    for i in 0..d {
        match grid.locate(i, x[i]) {
            Some((k, f)) => {
                cell[i] = k;
                frac[i] = f;
            }
            None => return 0.0,
        }
    }
    blend_at(grid, &cell[..d], &frac[..d])
}

fn blend_at(grid: &HistogramGrid, cell: &[isize], frac: &[f64]) -> f64 {
    let d = cell.len();
    let heights = grid.heights();
    let counts = grid.counts();
    let strides = grid.strides();
    let mut sum = 0.0;
    'corner: for mask in 0..(1usize << d) {
        let mut w = 1.0;
        let mut flat = 0usize;
        for i in 0..d {
            let bit = (mask >> i) & 1;
            let k = cell[i] + bit as isize;
            if k < 0 || k as usize >= counts[i] {
                continue 'corner;
            }
            w *= if bit == 1 { frac[i] } else { 1.0 - frac[i] };
            flat += k as usize * strides[i];
        }
        sum += w * heights[flat];
    }
    sum
}

impl LbfpDensity {
    pub fn new(grid: HistogramGrid) -> Self {
        let d = grid.dim();
        let mut prefix_grids = Vec::with_capacity(d);
        prefix_grids.push(grid.clone());
        for len in (1..d).rev() {
            let next = prefix_grids
                .last()
                .expect("non-empty")
                .marginalize(len)
                .expect("prefix length in range");
            prefix_grids.push(next);
        }
        prefix_grids.reverse();
        Self { grid, prefix_grids }
    }

    pub fn grid(&self) -> &HistogramGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn bin_width(&self) -> f64 {
        self.grid.bin_width()
    }

    /// Cached marginal histogram over the first `prefix_len` coordinates.
    pub fn marginal_grid(&self, prefix_len: usize) -> Result<&HistogramGrid> {
        if prefix_len == 0 || prefix_len > self.dim() {
            return Err(Error::IndexOutOfRange {
                index: prefix_len,
                max: self.dim(),
            });
        }
        Ok(&self.prefix_grids[prefix_len - 1])
    }

    /// Owned copy of [`marginal_grid`](Self::marginal_grid).
    pub fn marginalize(&self, prefix_len: usize) -> Result<HistogramGrid> {
        self.marginal_grid(prefix_len).cloned()
    }

    /// Density at `x`; zero outside the support.
    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim(), "dimension mismatch");
        blend(&self.grid, x)
    }

    /// Marginal density of the first `x.len()` coordinates at `x`.
    pub fn eval_marginal(&self, x: &[f64]) -> Result<f64> {
        Ok(blend(self.marginal_grid(x.len())?, x))
    }

    /// Piecewise-linear CDF table of `x_i | x_{1:i-1} = prefix` where
    /// `i = prefix.len() + 1`. Pieces carrying no mass are omitted.
    pub fn conditional_cdf_table(&self, prefix: &[f64]) -> Result<Vec<BinSegment>> {
        if prefix.len() >= self.dim() {
            return Err(Error::IndexOutOfRange {
                index: prefix.len() + 1,
                max: self.dim(),
            });
        }
        let mut cells = Vec::with_capacity(prefix.len());
        for (axis, &x) in prefix.iter().enumerate() {
            cells.push(
                self.grid
                    .locate(axis, x)
                    .ok_or(Error::ConditioningOutsideSupport)?,
            );
        }
        let mut row = Vec::new();
        let mut segments = Vec::new();
        self.fill_conditional(&cells, &mut row, &mut segments)?;
        Ok(segments)
    }

    /// Conditional table for axis `cells.len()` given located prefix cells.
    fn fill_conditional(
        &self,
        cells: &[(isize, f64)],
        row: &mut Vec<f64>,
        segments: &mut Vec<BinSegment>,
    ) -> Result<()> {
        let axis = cells.len();
        let grid = &self.prefix_grids[axis];
        let n = grid.counts()[axis];
        let counts = grid.counts();
        let strides = grid.strides();
        let heights = grid.heights();
        row.clear();
        row.resize(n, 0.0);
        // The conditioned axis is the last axis of `grid`, so each prefix
        // corner addresses one contiguous row of heights.
        'corner: for mask in 0..(1usize << axis) {
            let mut w = 1.0;
            let mut base = 0usize;
            for (i, &(k, f)) in cells.iter().enumerate() {
                let bit = (mask >> i) & 1;
                let k = k + bit as isize;
                if k < 0 || k as usize >= counts[i] {
                    continue 'corner;
                }
                w *= if bit == 1 { f } else { 1.0 - f };
                base += k as usize * strides[i];
            }
            if w == 0.0 {
                continue;
            }
            for (acc, &v) in row.iter_mut().zip(&heights[base..base + n]) {
                *acc += w * v;
            }
        }

        let h = grid.bin_width();
        // h * sum(row) is the prefix marginal f(x_{1:i-1}) evaluated exactly
        // on the same nodes, so the table ends at 1 up to rounding.
        let norm = h * row.iter().sum::<f64>();
        if !(norm > 0.0) {
            return Err(Error::ConditioningOutsideSupport);
        }
        segments.clear();
        let mut cdf = 0.0;
        for k in -1..n as isize {
            let left = if k >= 0 { row[k as usize] } else { 0.0 };
            let right = if k + 1 < n as isize { row[(k + 1) as usize] } else { 0.0 };
            if left == 0.0 && right == 0.0 {
                continue;
            }
            let alpha = left / norm;
            let beta = (right - left) / (norm * h);
            let high = cdf + 0.5 * (left + right) * h / norm;
            segments.push(BinSegment {
                intercept: alpha,
                slope: beta,
                cdf_low: cdf,
                cdf_high: high,
                left_midpoint: grid.midpoint(axis, k),
                width: h,
            });
            cdf = high;
        }
        Ok(())
    }

    /// Inversion sample driven by `u` in `[0,1)^d`.
    pub fn sample(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.sample_with(&mut SampleScratch::default(), u, &mut out)?;
        Ok(out)
    }

    /// Allocation-free variant of [`sample`](Self::sample).
    ///
    /// Coordinate `i` is the inverse conditional CDF at `u[i]` given the
    /// coordinates already drawn, so the map is monotone in each `u[i]`.
    pub fn sample_with(&self, scratch: &mut SampleScratch, u: &[f64], out: &mut [f64]) -> Result<()> {
        let d = self.dim();
        assert_eq!(u.len(), d, "dimension mismatch");
        assert_eq!(out.len(), d, "dimension mismatch");
        scratch.cells.clear();
        for axis in 0..d {
            let SampleScratch { row, segments, cells } = scratch;
            if let Err(e) = self.fill_conditional(cells, row, segments) {
                // The previous coordinate sits exactly on a node of zero
                // height (a u-value on a table boundary). Step into the
                // adjacent cell interior, a measure-zero change.
                let Some(last) = cells.last_mut() else {
                    return Err(e);
                };
                last.1 = last.1.clamp(1e-12, 1.0 - 1e-12);
                let (k, frac) = *last;
                out[axis - 1] = self.grid.midpoint(axis - 1, k) + frac * self.bin_width();
                self.fill_conditional(cells, row, segments)?;
            }
            let y = u[axis];
            let idx = segments.partition_point(|s| s.cdf_high <= y);
            let seg = &segments[idx.min(segments.len() - 1)];
            let mut x = seg.invert_unchecked(y);
            let upper = seg.left_midpoint + seg.width;
            if x >= upper {
                x = upper.next_down();
            }
            out[axis] = x;
            if axis + 1 < d {
                let cell = self
                    .grid
                    .locate(axis, x)
                    .ok_or(Error::ConditioningOutsideSupport)?;
                scratch.cells.push(cell);
            }
        }
        Ok(())
    }

    /// Probability mass of the interpolation cell with lower corner `cell`
    /// (mid-point indices, `-1` allowed): volume times the mean of its
    /// `2^d` corner heights.
    pub fn cell_probability(&self, cell: &[isize]) -> f64 {
        let d = self.dim();
        let mut idx = [0isize; MAX_DIM];
        let mut sum = 0.0;
        for mask in 0..(1usize << d) {
            for i in 0..d {
                idx[i] = cell[i] + ((mask >> i) & 1) as isize;
            }
            sum += self.grid.height(&idx[..d]);
        }
        sum / (1usize << d) as f64 * self.bin_width().powi(d as i32)
    }

    /// Exact probability of the box `[low, high]`: each height's tent
    /// function integrates separably over the box.
    pub fn box_mass(&self, low: &[f64], high: &[f64]) -> f64 {
        let g = &self.grid;
        let d = g.dim();
        let h = g.bin_width();
        let tents: Vec<Vec<f64>> = (0..d)
            .map(|i| {
                (0..g.counts()[i])
                    .map(|k| {
                        let t = g.midpoint(i, k as isize);
                        tent_primitive(high[i] - t, h) - tent_primitive(low[i] - t, h)
                    })
                    .collect()
            })
            .collect();
        let counts = g.counts();
        let mut idx = [0usize; MAX_DIM];
        let mut total = 0.0;
        for &height in g.heights() {
            if height > 0.0 {
                let w: f64 = (0..d).map(|i| tents[i][idx[i]]).product();
                total += height * w;
            }
            for i in (0..d).rev() {
                idx[i] += 1;
                if idx[i] < counts[i] {
                    break;
                }
                idx[i] = 0;
            }
        }
        total
    }
}

/// `int_{-inf}^{u} max(0, 1 - |s|/h) ds`.
fn tent_primitive(u: f64, h: f64) -> f64 {
    if u <= -h {
        0.0
    } else if u <= 0.0 {
        (u + h) * (u + h) / (2.0 * h)
    } else if u < h {
        h - (h - u) * (h - u) / (2.0 * h)
    } else {
        h
    }
}

/// Free-function form of [`LbfpDensity::eval`].
pub fn lbfp_eval(density: &LbfpDensity, x: &[f64]) -> f64 {
    density.eval(x)
}

/// Free-function form of [`LbfpDensity::sample`].
pub fn lbfp_sample(density: &LbfpDensity, u: &[f64]) -> Result<Vec<f64>> {
    density.sample(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lbfp::grid::{build_histogram, OriginPolicy};

    #[test]
    fn box_mass_of_triangle() {
        let d = triangle();
        assert!((d.box_mass(&[-5.0], &[5.0]) - 1.0).abs() < 1e-15);
        assert!((d.box_mass(&[-5.0], &[0.5]) - 0.5).abs() < 1e-15);
        // F(x) = (x + 1/2)^2 / 2 below the apex
        assert!((d.box_mass(&[0.0], &[0.25]) - 0.15625).abs() < 1e-15);
    }

    fn triangle() -> LbfpDensity {
        LbfpDensity::new(build_histogram(1, &[0.5], &[1.0], 1.0, &OriginPolicy::Anchored(vec![0.0])).unwrap())
    }

    #[test]
    fn midpoint_returns_height() {
        let d = LbfpDensity::new(
            build_histogram(1, &[0.25, 0.75], &[1.0, 3.0], 0.5, &OriginPolicy::Anchored(vec![0.0])).unwrap(),
        );
        assert_eq!(d.eval(&[0.25]), 0.5);
        assert_eq!(d.eval(&[0.75]), 1.5);
        assert_eq!(d.eval(&[0.5]), 1.0);
        assert_eq!(d.eval(&[-0.25]), 0.0);
        assert_eq!(d.eval(&[1.25]), 0.0);
        assert_eq!(d.eval(&[10.0]), 0.0);
        assert!((d.eval(&[0.0]) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn triangle_table() {
        let d = triangle();
        let t = d.conditional_cdf_table(&[]).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t[0].cdf_low, 0.0);
        assert!((t[0].cdf_high - 0.5).abs() < 1e-15);
        assert!((t[1].cdf_high - 1.0).abs() < 1e-15);
        assert!(t[0].slope > 0.0 && t[1].slope < 0.0);
        let x = d.sample(&[0.5]).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn flat_region_has_zero_slope() {
        let pts = [0.1, 0.6, 1.1, 1.6];
        let d = LbfpDensity::new(
            build_histogram(1, &pts, &[1.0; 4], 0.5, &OriginPolicy::Auto).unwrap(),
        );
        let t = d.conditional_cdf_table(&[]).unwrap();
        let flat: Vec<_> = t.iter().filter(|s| s.slope == 0.0).collect();
        assert_eq!(flat.len(), 3);
        assert!((t.last().unwrap().cdf_high - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conditioning_outside_support() {
        let d = LbfpDensity::new(
            build_histogram(2, &[0.5, 0.5], &[1.0], 1.0, &OriginPolicy::Auto).unwrap(),
        );
        assert!(matches!(
            d.conditional_cdf_table(&[40.0]),
            Err(Error::ConditioningOutsideSupport)
        ));
        assert!(d.conditional_cdf_table(&[0.5]).is_ok());
        assert!(d.conditional_cdf_table(&[0.5, 0.5]).is_err());
    }

    #[test]
    fn product_grid_marginal_is_proportional_to_first_factor() {
        // heights a_k * b_l on a 4x3 block
        let a = [0.0, 1.0, 3.0, 0.0];
        let b = [0.0, 2.0, 0.0];
        let mut heights = Vec::new();
        for x in a {
            for y in b {
                heights.push(x * y);
            }
        }
        let s: f64 = heights.iter().sum();
        let heights: Vec<f64> = heights.iter().map(|v| v / s).collect();
        let g = HistogramGrid::from_parts(vec![0.0, 0.0], 1.0, vec![4, 3], heights, 1.0).unwrap();
        let d = LbfpDensity::new(g);
        let m = d.marginal_grid(1).unwrap();
        assert!((m.heights()[2] / m.heights()[1] - 3.0).abs() < 1e-12);
        assert_eq!(m.heights()[0], 0.0);
    }

    #[test]
    fn cell_probabilities_sum_to_one() {
        let pts = [0.1, 0.2, 0.7, 0.9, 1.3, 0.4];
        let d = LbfpDensity::new(
            build_histogram(2, &pts, &[1.0, 2.0, 0.5], 0.5, &OriginPolicy::Auto).unwrap(),
        );
        let c = d.grid().counts().to_vec();
        let mut total = 0.0;
        for i in -1..c[0] as isize {
            for j in -1..c[1] as isize {
                total += d.cell_probability(&[i, j]);
            }
        }
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn samples_stay_in_support() {
        let pts = [0.1, 0.2, 0.7, 0.9, 1.3, 0.4];
        let d = LbfpDensity::new(
            build_histogram(2, &pts, &[1.0, 2.0, 0.5], 0.5, &OriginPolicy::Auto).unwrap(),
        );
        let mut scratch = SampleScratch::default();
        let mut out = [0.0; 2];
        for i in 0..40 {
            for j in 0..40 {
                let u = [i as f64 / 40.0, j as f64 / 40.0 + 0.0123];
                d.sample_with(&mut scratch, &u, &mut out).unwrap();
                assert!(d.eval(&out) > 0.0, "{out:?}");
            }
        }
    }
}
