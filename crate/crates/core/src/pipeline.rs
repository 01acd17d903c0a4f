//! The orbit-ensemble pipeline: flow → Casimir maxima → normalized pairs
//! → fitted cusp map → density.
//!
//! Statistics come from an ensemble of independent orbits integrated in
//! parallel (identical results for any worker count), each discarding the
//! same transient; successive-maxima pairs never cross orbit boundaries
//! and the normalization range is shared across the whole ensemble.

use crate::cusp::{build_empirical, fit_exponents, CuspError, CuspMap, ExponentFit};
use crate::density::{DensityEstimate, DensityError, Grid, Method};
use crate::flow::{FlowParams, Perturbation, State};
use crate::par;
use crate::section::{
    normalize_collection, winding_counts, Lobe, MaximaCollection, NormalizedPairs, SectionError,
    SectionOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("section stage: {0}")]
    Section(#[from] SectionError),
    #[error("map-fit stage: {0}")]
    Cusp(#[from] CuspError),
    #[error("density stage: {0}")]
    Density(#[from] DensityError),
    #[error("budget: {0}")]
    Budget(String),
}

/// Resource knobs shared by every pipeline run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RunBudget {
    /// Casimir maxima to collect over the whole ensemble.
    pub total_events: usize,
    /// Independent orbits (parallel grain).
    pub orbits: usize,
    /// Integrator tolerance.
    pub tol: f64,
    /// Master seed for initial-condition jitter.
    pub seed: u64,
    /// Bins of the [0,1] density grid (power of two ≥ 512).
    pub grid_bins: usize,
    /// Knots per branch of the empirical map fit.
    pub knots_per_branch: usize,
}

impl Default for RunBudget {
    fn default() -> Self {
        Self {
            total_events: 100_000,
            orbits: 64,
            tol: 1e-10,
            seed: 7,
            grid_bins: 512,
            knots_per_branch: 96,
        }
    }
}

/// Default initial condition of the shifted system; ensemble orbits
/// jitter around it.
pub const DEFAULT_IC: State = [1.0, 1.0, -20.0];

fn jittered_ic(seed: u64, orbit: usize) -> State {
    let mut rng =
        ChaCha8Rng::seed_from_u64(seed ^ (0x517c_c1b7_2722_0a95u64.wrapping_mul(orbit as u64 + 1)));
    [
        DEFAULT_IC[0] + rng.gen_range(-0.5..0.5),
        DEFAULT_IC[1] + rng.gen_range(-0.5..0.5),
        DEFAULT_IC[2] + rng.gen_range(-0.5..0.5),
    ]
}

/// The section stage output: per-orbit maxima plus derived views.
#[derive(Debug, Clone)]
pub struct SectionDataset {
    pub collection: MaximaCollection,
    pub pairs: NormalizedPairs,
    /// Normalized value of every event (ensemble z-range).
    pub values: Vec<f64>,
    pub mean_gap: f64,
    pub z_min: f64,
    pub z_max: f64,
}

/// Integrate the ensemble and extract the normalized section data.
pub fn run_section(
    p: &FlowParams,
    pert: &Perturbation,
    budget: &RunBudget,
    opts: SectionOptions,
) -> Result<SectionDataset, PipelineError> {
    if budget.orbits == 0 || budget.total_events < budget.orbits {
        return Err(PipelineError::Budget(format!(
            "{} events over {} orbits",
            budget.total_events, budget.orbits
        )));
    }
    let per_orbit = budget.total_events / budget.orbits;
    let max_time = opts.transient + 2.0 * per_orbit as f64 + 100.0;
    let opts = SectionOptions { tol: budget.tol, ..opts };
    let series: Vec<_> = par::indexed_map(budget.orbits, |k| {
        crate::section::collect_maxima(
            p,
            pert,
            jittered_ic(budget.seed, k),
            per_orbit,
            max_time,
            opts,
        )
    });
    let mut collection = MaximaCollection::default();
    for s in series {
        collection.series.push(s?);
    }
    let pairs = normalize_collection(&collection)?;
    let values = crate::section::normalized_values(&collection)?;
    let mean_gap = collection.mean_gap();
    Ok(SectionDataset {
        pairs,
        values,
        mean_gap,
        z_min: pairs_range(&collection).0,
        z_max: pairs_range(&collection).1,
        collection,
    })
}

fn pairs_range(coll: &MaximaCollection) -> (f64, f64) {
    coll.z_range().unwrap_or((f64::NAN, f64::NAN))
}

/// Which source-lobe events feed the map fit. Under the R-symmetric flow
/// all maxima lie on one curve; a symmetry-breaking perturbation splits
/// the successor relation into one curve per source lobe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LobeSelect {
    All,
    Plus,
    Minus,
}

/// Successive-maxima pairs whose source event lies on the selected lobe.
pub fn pairs_by_source_lobe(dataset: &SectionDataset, select: LobeSelect) -> NormalizedPairs {
    match select {
        LobeSelect::All => dataset.pairs.clone(),
        LobeSelect::Plus | LobeSelect::Minus => {
            let want = if select == LobeSelect::Plus { Lobe::Plus } else { Lobe::Minus };
            let (z_min, z_max) = (dataset.pairs.z_min, dataset.pairs.z_max);
            let width = z_max - z_min;
            let mut pairs = Vec::new();
            for s in &dataset.collection.series {
                for w in s.events.windows(2) {
                    if w[0].lobe == want {
                        pairs.push((
                            (w[0].c_value - z_min) / width,
                            (w[1].c_value - z_min) / width,
                        ));
                    }
                }
            }
            NormalizedPairs { pairs, z_min, z_max }
        }
    }
}

/// Histogram of the normalized maxima values themselves (the Birkhoff
/// estimate of the invariant density of the successor map).
pub fn values_density(values: &[f64], grid: Grid) -> DensityEstimate {
    let mut counts = vec![0u64; grid.n_bins];
    for &v in values {
        if (0.0..=1.0).contains(&v) {
            counts[grid.bin_of(v)] += 1;
        }
    }
    let total: u64 = counts.iter().sum();
    let values: Vec<f64> =
        counts.iter().map(|&c| c as f64 / (total as f64 * grid.width())).collect();
    let mut est = DensityEstimate::new(grid, values, Method::Histogram);
    est.effort = total;
    est
}

/// A full pipeline product for one (params, perturbation, lobe) choice.
#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub pert: Perturbation,
    pub lobe: LobeSelect,
    pub map: CuspMap,
    pub exponents: ExponentFit,
    pub density: DensityEstimate,
    pub n_events: usize,
    pub n_pairs: usize,
    pub mean_gap: f64,
    pub z_min: f64,
    pub z_max: f64,
}

/// Chain section → map fit → exponents → density for one configuration.
///
/// With `LobeSelect::All` the density is the histogram of the normalized
/// maxima (flow data); with a single lobe it is the Birkhoff histogram of
/// the fitted map, since the one-lobe pair set is not an orbit.
pub fn run_pipeline(
    p: &FlowParams,
    pert: &Perturbation,
    lobe: LobeSelect,
    budget: &RunBudget,
) -> Result<PipelineResult, PipelineError> {
    let dataset = run_section(p, pert, budget, SectionOptions::default())?;
    run_pipeline_on(&dataset, pert, lobe, budget)
}

/// Same as [`run_pipeline`] but reusing an existing section dataset.
pub fn run_pipeline_on(
    dataset: &SectionDataset,
    pert: &Perturbation,
    lobe: LobeSelect,
    budget: &RunBudget,
) -> Result<PipelineResult, PipelineError> {
    let pairs = pairs_by_source_lobe(dataset, lobe);
    let map = build_empirical(&pairs, budget.knots_per_branch)?;
    let exponents = fit_exponents(&map)?;
    let grid = Grid::unit(budget.grid_bins)?;
    let density = match lobe {
        LobeSelect::All => values_density(&dataset.values, grid),
        _ => crate::density::histogram_density(
            &map,
            (dataset.values.len() as u64 * 10).max(1_000_000),
            grid,
            budget.seed,
        )?,
    };
    Ok(PipelineResult {
        pert: *pert,
        lobe,
        n_events: dataset.values.len(),
        n_pairs: pairs.len(),
        mean_gap: dataset.mean_gap,
        z_min: dataset.z_min,
        z_max: dataset.z_max,
        map,
        exponents,
        density,
    })
}

/// Kolmogorov-Smirnov distance between the Casimir-value distributions of
/// the two lobes (zero for the R-symmetric flow up to sampling noise).
pub fn lobe_symmetry_ks(coll: &MaximaCollection) -> f64 {
    let plus: Vec<f64> =
        coll.all_events().filter(|e| e.lobe == Lobe::Plus).map(|e| e.c_value).collect();
    let minus: Vec<f64> =
        coll.all_events().filter(|e| e.lobe == Lobe::Minus).map(|e| e.c_value).collect();
    if plus.is_empty() || minus.is_empty() {
        return 1.0;
    }
    crate::numeric::ks_distance(&plus, &minus)
}

/// Total-variation distance between two empirical count distributions
/// over {1, 2, …}.
pub fn tv_distance(a: &[u64], b: &[u64]) -> f64 {
    let (ta, tb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let n = a.len().max(b.len());
    let mut s = 0.0;
    for i in 0..n {
        let pa = a.get(i).copied().unwrap_or(0) as f64 / ta;
        let pb = b.get(i).copied().unwrap_or(0) as f64 / tb;
        s += (pa - pb).abs();
    }
    0.5 * s
}

/// Winding counts of the ensemble as a histogram over count values.
pub fn winding_histogram(coll: &MaximaCollection) -> Vec<u64> {
    let counts = winding_counts(coll);
    let max = counts.iter().copied().max().unwrap_or(1) as usize;
    let mut hist = vec![0u64; max];
    for c in counts {
        hist[c as usize - 1] += 1;
    }
    hist
}

/// Crossing-excursion run lengths as a histogram over {1, 2, …}; this is
/// the flow-side statistic matching the return time of the interval map
/// to (x₀, 1).
pub fn crossing_histogram(coll: &MaximaCollection) -> Vec<u64> {
    let runs = crate::section::crossing_run_lengths(coll);
    let max = runs.iter().copied().max().unwrap_or(1) as usize;
    let mut hist = vec![0u64; max];
    for c in runs {
        if c >= 1 {
            hist[c as usize - 1] += 1;
        }
    }
    hist
}
