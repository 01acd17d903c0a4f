//! The three density estimators and the boundary-scaling fit.

use super::{DensityEstimate, DensityError, Grid, Method};
use crate::cusp::IntervalMap;
use crate::numeric::linear_fit;
use crate::par;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Birkhoff histogram of one (chunked) orbit of the map.
///
/// The orbit is split into fixed-count chunks with seed-derived initial
/// points so the result is identical for any worker count; each chunk
/// discards a 10³-step transient. An orbit point landing within 1e-14 of
/// the cusp — or of the absorbing endpoint fixed points — restarts the
/// chunk's remainder from a jittered point (counted in `exceptions`).
pub fn histogram_density(
    map: &(impl IntervalMap + Sync),
    n_iters: u64,
    grid: Grid,
    seed: u64,
) -> Result<DensityEstimate, DensityError> {
    if n_iters < 100_000 {
        return Err(DensityError::TooFewSamples { need: 100_000, got: n_iters });
    }
    const CHUNKS: u64 = 64;
    const TRANSIENT: u64 = 1000;
    let x0 = map.split();
    let per_chunk = n_iters / CHUNKS;

    let results: Vec<(Vec<u64>, u64)> = par::indexed_map(CHUNKS as usize, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(c as u64 + 1)));
        let mut counts = vec![0u64; grid.n_bins];
        let mut restarts = 0u64;
        let mut x: f64 = rng.gen_range(0.05..0.95);
        for _ in 0..TRANSIENT {
            x = map.eval(x);
        }
        let mut done = 0;
        while done < per_chunk {
            if (x - x0).abs() < 1e-14 || !(1e-14..=1.0 - 1e-14).contains(&x) {
                restarts += 1;
                x = rng.gen_range(0.05..0.95);
                for _ in 0..TRANSIENT {
                    x = map.eval(x);
                }
                continue;
            }
            x = map.eval(x);
            counts[grid.bin_of(x)] += 1;
            done += 1;
        }
        (counts, restarts)
    });

    let mut counts = vec![0u64; grid.n_bins];
    let mut restarts = 0;
    for (c, r) in results {
        for (acc, v) in counts.iter_mut().zip(&c) {
            *acc += v;
        }
        restarts += r;
    }
    let total: u64 = counts.iter().sum();
    let values: Vec<f64> = counts
        .iter()
        .map(|&c| c as f64 / (total as f64 * grid.width()))
        .collect();
    let mut est = DensityEstimate::new(grid, values, Method::Histogram);
    est.effort = total;
    est.exceptions = restarts;
    Ok(est)
}

/// Sparse row-stochastic Ulam matrix: fractions of stratified sample
/// points of bin i landing in bin j.
struct UlamMatrix {
    rows: Vec<Vec<(u32, f64)>>,
}

impl UlamMatrix {
    fn build(map: &(impl IntervalMap + Sync), grid: Grid, mc_per_bin: usize) -> Self {
        let rows = par::indexed_map(grid.n_bins, |i| {
            let mut hits: Vec<u32> = Vec::with_capacity(mc_per_bin);
            let w = grid.width();
            for k in 0..mc_per_bin {
                let x = grid.lo + (i as f64 + (k as f64 + 0.5) / mc_per_bin as f64) * w;
                let y = map.eval(x);
                hits.push(grid.bin_of(y.clamp(grid.lo, grid.hi)) as u32);
            }
            hits.sort_unstable();
            let mut row: Vec<(u32, f64)> = Vec::new();
            for &j in &hits {
                match row.last_mut() {
                    Some((last, c)) if *last == j => *c += 1.0,
                    _ => row.push((j, 1.0)),
                }
            }
            for (_, c) in &mut row {
                *c /= mc_per_bin as f64;
            }
            row
        });
        Self { rows }
    }

    /// π ← πP
    fn left_apply(&self, pi: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (i, row) in self.rows.iter().enumerate() {
            let w = pi[i];
            if w != 0.0 {
                for &(j, p) in row {
                    out[j as usize] += w * p;
                }
            }
        }
    }
}

/// Stationary density of the Ulam discretization: leading left
/// eigenvector of the transition matrix by power iteration.
pub fn ulam_density(
    map: &(impl IntervalMap + Sync),
    grid: Grid,
    mc_per_bin: usize,
) -> Result<DensityEstimate, DensityError> {
    if grid.n_bins < 512 {
        return Err(DensityError::InvalidGrid(format!(
            "ulam needs >= 512 bins, got {}",
            grid.n_bins
        )));
    }
    if mc_per_bin < 64 {
        return Err(DensityError::TooFewSamples { need: 64, got: mc_per_bin as u64 });
    }
    let mat = UlamMatrix::build(map, grid, mc_per_bin);
    let n = grid.n_bins;
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    const MAX_ITERS: usize = 10_000;
    const TARGET: f64 = 1e-12;
    let mut iters = 0;
    loop {
        iters += 1;
        mat.left_apply(&pi, &mut next);
        let z: f64 = next.iter().sum();
        for v in &mut next {
            *v /= z;
        }
        let residual: f64 = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if residual < TARGET {
            break;
        }
        if iters >= MAX_ITERS {
            return Err(DensityError::ConvergenceError { target: TARGET, iters });
        }
    }
    let values: Vec<f64> = pi.iter().map(|&p| p / grid.width()).collect();
    let mut est = DensityEstimate::new(grid, values, Method::Ulam);
    est.effort = iters as u64;
    Ok(est)
}

/// Leading-eigenvalue residual |‖πP‖₁ − 1| of the Ulam matrix for a given
/// density (diagnostic; row-stochasticity makes it vanish).
pub fn ulam_eigenvalue_residual(
    map: &(impl IntervalMap + Sync),
    est: &DensityEstimate,
    mc_per_bin: usize,
) -> f64 {
    let mat = UlamMatrix::build(map, est.grid, mc_per_bin);
    let w = est.grid.width();
    let pi: Vec<f64> = est.values.iter().map(|v| v * w).collect();
    let mut out = vec![0.0; pi.len()];
    mat.left_apply(&pi, &mut out);
    (out.iter().sum::<f64>() - pi.iter().sum::<f64>()).abs()
}

/// Pointwise Perron-Frobenius iteration on bin midpoints:
/// ρ ← ρ(T₁⁻¹x)/|DT(T₁⁻¹x)| + ρ(T₂⁻¹x)/|DT(T₂⁻¹x)|,
/// with the inverse-branch stencil precomputed once. The cusp bin is not
/// evaluated (its preimages sit at the branch ends where the stencil is
/// unreliable) and is filled from its left neighbor.
pub fn pf_iterate(
    map: &(impl IntervalMap + Sync),
    init: &DensityEstimate,
    n_steps: usize,
) -> Result<DensityEstimate, DensityError> {
    let grid = init.grid;
    let x0 = map.split();
    let cusp_bin = grid.bin_of(x0);

    #[derive(Clone, Copy)]
    struct Node {
        x1: f64,
        w1: f64,
        x2: f64,
        w2: f64,
        ok: bool,
    }
    let nodes: Vec<Node> = par::indexed_map(grid.n_bins, |j| {
        let y = grid.center(j);
        let x1 = map.invert_left(y, 1e-12);
        let x2 = map.invert_right(y, 1e-12);
        let d1 = map.deriv(x1).abs();
        let d2 = map.deriv(x2).abs();
        let ok = d1 > 1e-9 && d2 > 1e-9 && d1.is_finite() && d2.is_finite();
        Node {
            x1,
            w1: if ok { 1.0 / d1 } else { 0.0 },
            x2,
            w2: if ok { 1.0 / d2 } else { 0.0 },
            ok,
        }
    });
    let excluded = nodes.iter().filter(|n| !n.ok).count() as u64;

    let mut cur = init.clone();
    cur.normalize();
    let mut steps = 0u64;
    for _ in 0..n_steps {
        steps += 1;
        let mut next = vec![0.0; grid.n_bins];
        for (j, node) in nodes.iter().enumerate() {
            if j == cusp_bin || !node.ok {
                continue;
            }
            next[j] = cur.value_at(node.x1) * node.w1 + cur.value_at(node.x2) * node.w2;
        }
        // one-sided fill for the cusp bin and any excluded nodes
        for (j, node) in nodes.iter().enumerate() {
            if j == cusp_bin || !node.ok {
                next[j] = if j > 0 { next[j - 1] } else { next[j + 1] };
            }
        }
        let mut est = DensityEstimate::new(grid, next, Method::PfIteration);
        let delta = super::l1_distance(&est, &cur)?;
        est.effort = steps;
        est.exceptions = excluded;
        cur = est;
        if delta < 1e-10 {
            break;
        }
    }
    Ok(cur)
}

/// One application of the PF operator; returns the L¹ distance to the
/// input (the fixed-point residual).
pub fn pf_residual(
    map: &(impl IntervalMap + Sync),
    est: &DensityEstimate,
) -> Result<f64, DensityError> {
    let once = pf_iterate(map, est, 1)?;
    super::l1_distance(&once, est)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundarySide {
    Zero,
    One,
}

/// Log-log slope of the density against the distance to the boundary,
/// over the r²-best dyadic window [2⁻ᵏ, 2⁻ᵏ⁺⁴].
pub fn boundary_exponent(
    est: &DensityEstimate,
    side: BoundarySide,
) -> Result<f64, DensityError> {
    if est.grid.n_bins < 2048 {
        return Err(DensityError::InvalidGrid(format!(
            "boundary fit needs >= 2048 bins, got {}",
            est.grid.n_bins
        )));
    }
    let mut best: Option<(f64, f64)> = None; // (slope, r2)
    for k in 4..=14 {
        let hi = 2f64.powi(-(k - 4));
        let lo = 2f64.powi(-k);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (i, &v) in est.values.iter().enumerate() {
            let c = est.grid.center(i);
            let d = match side {
                BoundarySide::Zero => c,
                BoundarySide::One => 1.0 - c,
            };
            if d >= lo && d <= hi && v > 0.0 {
                xs.push(d.ln());
                ys.push(v.ln());
            }
        }
        if xs.len() < 8 {
            continue;
        }
        let (slope, _, r2) = linear_fit(&xs, &ys);
        if best.map_or(true, |(_, br2)| r2 > br2) {
            best = Some((slope, r2));
        }
    }
    best.map(|(s, _)| s).ok_or_else(|| {
        DensityError::WindowError("fewer than 8 usable bins in every dyadic window".into())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cusp::AnalyticFamily;
    use crate::test_fixtures::DoublingMap;

    #[test]
    fn histogram_precondition() {
        let m = DoublingMap;
        let g = Grid::unit(512).unwrap();
        assert!(matches!(
            histogram_density(&m, 10, g, 1),
            Err(DensityError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn skew_tent_histogram_is_uniform() {
        // the doubling map is not f64-iterable (orbits shift into the
        // absorbing endpoint within 53 steps); the skew tent has the same
        // uniform invariant density and mixes numerically
        let m = crate::test_fixtures::SkewTent { peak: 0.371 };
        let g = Grid::unit(512).unwrap();
        let est = histogram_density(&m, 2_000_000, g, 42).unwrap();
        let uniform = DensityEstimate::new(g, vec![1.0; 512], Method::Histogram);
        let d = super::super::l1_distance(&est, &uniform).unwrap();
        assert!(d < 0.02, "L1 from uniform: {d}");
    }

    #[test]
    fn doubling_map_ulam_fixed_point_is_uniform() {
        let m = DoublingMap;
        let g = Grid::unit(512).unwrap();
        let est = ulam_density(&m, g, 64).unwrap();
        for &v in &est.values {
            assert!((v - 1.0).abs() < 1e-3, "ulam value {v}");
        }
        // leading eigenvalue is 1 by row-stochasticity
        assert!(ulam_eigenvalue_residual(&m, &est, 64) < 1e-10);
    }

    #[test]
    fn ulam_preconditions() {
        let m = DoublingMap;
        assert!(ulam_density(&m, Grid::on(0.0, 1.0, 128).unwrap(), 64).is_err());
        assert!(ulam_density(&m, Grid::unit(512).unwrap(), 8).is_err());
    }

    #[test]
    fn histogram_two_seeds_close() {
        // Poisson bin noise gives an expected seed-to-seed L¹ of about
        // √(bins/n)·√(4/π); 512 bins at 2·10⁶ keeps that near 0.018
        let map = AnalyticFamily::paper_tuned().unwrap();
        let g = Grid::unit(512).unwrap();
        let a = histogram_density(&map, 2_000_000, g, 7).unwrap();
        let b = histogram_density(&map, 2_000_000, g, 1234).unwrap();
        let d = super::super::l1_distance(&a, &b).unwrap();
        assert!(d < 0.03, "seed-to-seed L1 {d}");
    }

    #[test]
    fn histogram_deterministic_given_seed() {
        let map = AnalyticFamily::paper_tuned().unwrap();
        let g = Grid::unit(512).unwrap();
        let a = histogram_density(&map, 200_000, g, 99).unwrap();
        let b = histogram_density(&map, 200_000, g, 99).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn pf_iteration_reaches_fixed_point_on_doubling_map() {
        let m = DoublingMap;
        let g = Grid::unit(512).unwrap();
        // start well away from the fixed point
        let init = DensityEstimate::new(
            g,
            (0..512).map(|i| 1.0 + 0.5 * (i as f64 / 512.0)).collect(),
            Method::PfIteration,
        );
        let est = pf_iterate(&m, &init, 200).unwrap();
        let res = pf_residual(&m, &est).unwrap();
        assert!(res < 1e-6, "fixed-point residual {res}");
        for &v in &est.values {
            assert!((v - 1.0).abs() < 5e-3, "pf value {v}");
        }
    }

    #[test]
    fn boundary_exponent_flat_density_is_zero() {
        let g = Grid::unit(4096).unwrap();
        let est = DensityEstimate::new(g, vec![1.0; 4096], Method::Ulam);
        let e0 = boundary_exponent(&est, BoundarySide::Zero).unwrap();
        let e1 = boundary_exponent(&est, BoundarySide::One).unwrap();
        assert!(e0.abs() < 0.05 && e1.abs() < 0.05, "{e0}, {e1}");
    }

    #[test]
    fn boundary_exponent_recovers_power_law() {
        let g = Grid::unit(4096).unwrap();
        let vals: Vec<f64> = (0..4096).map(|i| g.center(i).powf(2.23)).collect();
        let est = DensityEstimate::new(g, vals, Method::Ulam);
        let e0 = boundary_exponent(&est, BoundarySide::Zero).unwrap();
        assert!((e0 - 2.23).abs() < 0.05, "{e0}");
    }

    #[test]
    fn boundary_exponent_needs_resolution() {
        let g = Grid::unit(512).unwrap();
        let est = DensityEstimate::new(g, vec![1.0; 512], Method::Ulam);
        assert!(boundary_exponent(&est, BoundarySide::Zero).is_err());
    }

    #[test]
    fn boundary_exponent_of_paper_family_density() {
        // the invariant density scales like x^(1/B*−1) at the ends; for
        // the paper-tuned exponents that is 1/0.3095 − 1 ≈ 2.231
        let map = AnalyticFamily::paper_tuned().unwrap();
        let g = Grid::unit(8192).unwrap();
        let init = DensityEstimate::new(g, vec![1.0; 8192], Method::PfIteration);
        let est = pf_iterate(&map, &init, 2000).unwrap();
        let a = boundary_exponent(&est, BoundarySide::Zero).unwrap();
        let b = boundary_exponent(&est, BoundarySide::One).unwrap();
        assert!((a - 2.23).abs() < 0.3, "exponent at 0: {a}");
        assert!((a - b).abs() < 0.2, "side mismatch: {a} vs {b}");
        // the mode sits left of the cusp, inside [a0', x0]
        let mode = est.argmax_x();
        assert!(mode < map.x0(), "mode {mode} vs cusp {}", map.x0());
    }
}
