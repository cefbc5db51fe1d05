//! Oracles shared by the integration suites. Nothing here calls into the
//! crate's own integration or CDF code.
#![allow(dead_code)]

use lbfp_nis::lbfp::{HistogramGrid, LbfpDensity};
use rand::Rng;

/// Random normalized grid: 2..=max_bins bins per axis, about a fifth of
/// the heights zero, random origin and width.
pub fn random_grid<R: Rng>(rng: &mut R, d: usize, max_bins: usize) -> HistogramGrid {
    let counts: Vec<usize> = (0..d).map(|_| rng.random_range(2..=max_bins)).collect();
    let origin: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
    let h: f64 = rng.random_range(0.05..2.0);
    let cells: usize = counts.iter().product();
    let mut raw: Vec<f64> = (0..cells)
        .map(|_| if rng.random::<f64>() < 0.2 { 0.0 } else { rng.random::<f64>() })
        .collect();
    if raw.iter().all(|&v| v == 0.0) {
        raw[0] = 1.0;
    }
    let total: f64 = raw.iter().sum();
    let scale = 1.0 / (total * h.powi(d as i32));
    let heights = raw.iter().map(|v| v * scale).collect();
    HistogramGrid::from_parts(origin, h, counts, heights, total).expect("valid random grid")
}

const GL3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// Three-point Gauss-Legendre nodes and weights on each of `pieces`
/// equal sub-intervals of `[a, b]`.
pub fn gauss_nodes(a: f64, b: f64, pieces: usize) -> Vec<(f64, f64)> {
    let w = (b - a) / pieces as f64;
    let mut out = Vec::with_capacity(3 * pieces);
    for p in 0..pieces {
        let c = a + (p as f64 + 0.5) * w;
        for (x, wt) in GL3 {
            out.push((c + 0.5 * w * x, 0.5 * w * wt));
        }
    }
    out
}

/// Support `[t_{-1}, t_n]` of axis `i`, one piece per interpolation cell.
pub fn axis_nodes(grid: &HistogramGrid, i: usize) -> Vec<(f64, f64)> {
    let n = grid.counts()[i];
    gauss_nodes(grid.midpoint(i, -1), grid.midpoint(i, n as isize), n + 1)
}

/// Tensor-product quadrature of `f` over the grid support.
pub fn integrate(grid: &HistogramGrid, f: impl Fn(&[f64]) -> f64) -> f64 {
    let d = grid.dim();
    let nodes: Vec<Vec<(f64, f64)>> = (0..d).map(|i| axis_nodes(grid, i)).collect();
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for i in 0..d {
            let (xi, wi) = nodes[i][idx[i]];
            x[i] = xi;
            w *= wi;
        }
        total += w * f(&x);
        let mut i = d;
        loop {
            if i == 0 {
                return total;
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < nodes[i].len() {
                break;
            }
            idx[i] = 0;
        }
    }
}

/// Heights of the one-dimensional marginal on `axis`: the other axes are
/// summed and scaled by `h^(d-1)`.
pub fn axis_marginal_heights(grid: &HistogramGrid, axis: usize) -> Vec<f64> {
    let d = grid.dim();
    let counts = grid.counts();
    let h = grid.bin_width();
    let mut out = vec![0.0; counts[axis]];
    let mut idx = vec![0usize; d];
    for &v in grid.heights() {
        out[idx[axis]] += v * h.powi(d as i32 - 1);
        for i in (0..d).rev() {
            idx[i] += 1;
            if idx[i] < counts[i] {
                break;
            }
            idx[i] = 0;
        }
    }
    out
}

/// CDF of the frequency polygon through `(origin + k h, g[k])`, zero at
/// both outer mid-points.
pub fn polygon_cdf(origin: f64, h: f64, g: &[f64], x: f64) -> f64 {
    let n = g.len() as isize;
    let at = |k: isize| if (0..n).contains(&k) { g[k as usize] } else { 0.0 };
    let mut acc = 0.0;
    for k in -1..n {
        let a = origin + k as f64 * h;
        if x <= a {
            break;
        }
        let (l, r) = (at(k), at(k + 1));
        let z = (x - a).min(h);
        acc += l * z + (r - l) * z * z / (2.0 * h);
    }
    acc
}

/// Kolmogorov-Smirnov distance of a sample to a continuous CDF.
pub fn ks_distance(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic Kolmogorov critical value at level 0.01.
pub fn ks_critical_01(n: usize) -> f64 {
    1.627_61 / (n as f64).sqrt()
}

/// Interpolation-cell probabilities of `density`: volume times the mean of
/// the `2^d` corner heights, over every cell with a stored corner. Cells
/// are addressed by lower-corner index `k` in `-1..n`.
pub fn cell_probabilities(grid: &HistogramGrid) -> Vec<(Vec<isize>, f64)> {
    let d = grid.dim();
    let h = grid.bin_width();
    let counts = grid.counts();
    let mut out = Vec::new();
    let mut idx: Vec<isize> = vec![-1; d];
    loop {
        let mut sum = 0.0;
        for mask in 0..(1usize << d) {
            let corner: Vec<isize> = (0..d).map(|i| idx[i] + ((mask >> i) & 1) as isize).collect();
            sum += grid.height(&corner);
        }
        out.push((idx.clone(), sum / (1usize << d) as f64 * h.powi(d as i32)));
        let mut i = d;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < counts[i] as isize {
                break;
            }
            idx[i] = -1;
        }
    }
}

/// Chi-square statistic and degrees of freedom of `draws` against the
/// interpolation-cell probabilities, pooling cells expected below 5.
pub fn chi_square(density: &LbfpDensity, draws: &[Vec<f64>]) -> (f64, usize) {
    let grid = density.grid();
    let d = grid.dim();
    let h = grid.bin_width();
    let cells = cell_probabilities(grid);
    let counts = grid.counts();
    let flat = |idx: &[isize]| {
        idx.iter()
            .zip(counts)
            .fold(0usize, |acc, (&k, &n)| acc * (n + 1) + (k + 1) as usize)
    };
    let mut observed = vec![0usize; cells.len()];
    for x in draws {
        let idx: Vec<isize> = (0..d)
            .map(|i| (((x[i] - grid.midpoint(i, 0)) / h).floor() as isize).clamp(-1, counts[i] as isize - 1))
            .collect();
        observed[flat(&idx)] += 1;
    }
    let n = draws.len() as f64;
    let (mut stat, mut buckets) = (0.0, 0usize);
    let (mut pooled_o, mut pooled_e) = (0.0, 0.0);
    for ((_, p), &o) in cells.iter().zip(&observed) {
        let e = p * n;
        if e == 0.0 {
            assert_eq!(o, 0, "draw in a cell of zero probability");
            continue;
        }
        if e < 5.0 {
            pooled_o += o as f64;
            pooled_e += e;
            continue;
        }
        stat += (o as f64 - e).powi(2) / e;
        buckets += 1;
    }
    if pooled_e > 0.0 {
        stat += (pooled_o - pooled_e).powi(2) / pooled_e;
        buckets += 1;
    }
    (stat, buckets.saturating_sub(1))
}
