//! CSV and JSON artifact formats.
//!
//! Bulk data goes to CSV with headers (full-precision floats via the
//! shortest round-trip encoding); structured reports and manifests go to
//! pretty-printed JSON.

use crate::cusp::PreimageLattice;
use crate::density::DensityEstimate;
use crate::flow::State;
use crate::inducing::{CylinderPartition, ReturnTimeStats, Side};
use crate::ode::Trajectory;
use crate::section::{Lobe, MaximaCollection, NormalizedPairs};
use crate::stability::SweepResult;
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("malformed artifact: {0}")]
    Format(String),
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<(), ExportError> {
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T, ExportError> {
    let mut s = String::new();
    std::fs::File::open(path)?.read_to_string(&mut s)?;
    Ok(serde_json::from_str(&s)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryRow {
    t: f64,
    u1: f64,
    u2: f64,
    u3: f64,
}

/// Trajectory CSV (t, u1, u2, u3), every `stride`-th accepted step plus
/// the final one.
pub fn write_trajectory(
    path: impl AsRef<Path>,
    traj: &Trajectory,
    stride: usize,
) -> Result<(), ExportError> {
    let stride = stride.max(1);
    let mut w = csv::Writer::from_path(path)?;
    let last = traj.times.len() - 1;
    for (k, (&t, u)) in traj.times.iter().zip(&traj.states).enumerate() {
        if k % stride == 0 || k == last {
            w.serialize(TrajectoryRow { t, u1: u[0], u2: u[1], u3: u[2] })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory(path: impl AsRef<Path>) -> Result<(Vec<f64>, Vec<State>), ExportError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut times = Vec::new();
    let mut states = Vec::new();
    for row in r.deserialize() {
        let row: TrajectoryRow = row?;
        times.push(row.t);
        states.push([row.u1, row.u2, row.u3]);
    }
    if times.len() < 2 {
        return Err(ExportError::Format("trajectory has fewer than 2 samples".into()));
    }
    Ok((times, states))
}

#[derive(Debug, Serialize, Deserialize)]
struct MaximaRow {
    t: f64,
    c_value: f64,
    lobe: String,
    u1: f64,
    u2: f64,
    u3: f64,
    orbit: usize,
}

/// Maxima CSV (t, c_value, lobe, u1, u2, u3, orbit); the orbit column
/// keeps ensemble series separable.
pub fn write_maxima(path: impl AsRef<Path>, coll: &MaximaCollection) -> Result<(), ExportError> {
    let mut w = csv::Writer::from_path(path)?;
    for (k, series) in coll.series.iter().enumerate() {
        for e in &series.events {
            w.serialize(MaximaRow {
                t: e.t,
                c_value: e.c_value,
                lobe: match e.lobe {
                    Lobe::Plus => "plus".into(),
                    Lobe::Minus => "minus".into(),
                },
                u1: e.u[0],
                u2: e.u[1],
                u3: e.u[2],
                orbit: k,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_maxima(path: impl AsRef<Path>) -> Result<MaximaCollection, ExportError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut coll = MaximaCollection::default();
    for row in r.deserialize() {
        let row: MaximaRow = row?;
        while coll.series.len() <= row.orbit {
            coll.series.push(Default::default());
        }
        let lobe = match row.lobe.as_str() {
            "plus" => Lobe::Plus,
            "minus" => Lobe::Minus,
            other => return Err(ExportError::Format(format!("unknown lobe {other:?}"))),
        };
        coll.series[row.orbit].events.push(crate::section::CasimirEvent {
            t: row.t,
            u: [row.u1, row.u2, row.u3],
            c_value: row.c_value,
            lobe,
        });
    }
    if coll.total_events() == 0 {
        return Err(ExportError::Format("maxima file is empty".into()));
    }
    Ok(coll)
}

#[derive(Debug, Serialize, Deserialize)]
struct PairRow {
    s_k: f64,
    s_next: f64,
}

/// Pairs CSV (s_k, s_next).
pub fn write_pairs(path: impl AsRef<Path>, pairs: &NormalizedPairs) -> Result<(), ExportError> {
    let mut w = csv::Writer::from_path(path)?;
    for &(a, b) in &pairs.pairs {
        w.serialize(PairRow { s_k: a, s_next: b })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_pairs(
    path: impl AsRef<Path>,
    z_min: f64,
    z_max: f64,
) -> Result<NormalizedPairs, ExportError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut pairs = Vec::new();
    for row in r.deserialize() {
        let row: PairRow = row?;
        pairs.push((row.s_k, row.s_next));
    }
    Ok(NormalizedPairs { pairs, z_min, z_max })
}

#[derive(Debug, Serialize, Deserialize)]
struct DensityRow {
    bin_center: f64,
    value: f64,
    method: String,
}

/// Density CSV (bin_center, value, method).
pub fn write_density(path: impl AsRef<Path>, est: &DensityEstimate) -> Result<(), ExportError> {
    let mut w = csv::Writer::from_path(path)?;
    let method = format!("{:?}", est.method).to_lowercase();
    for (i, &v) in est.values.iter().enumerate() {
        w.serialize(DensityRow { bin_center: est.grid.center(i), value: v, method: method.clone() })?;
    }
    w.flush()?;
    Ok(())
}

/// Rebuild a density estimate from its CSV (uniform grid inferred from
/// the bin centers).
pub fn read_density(path: impl AsRef<Path>) -> Result<DensityEstimate, ExportError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut centers = Vec::new();
    let mut values = Vec::new();
    for row in r.deserialize() {
        let row: DensityRow = row?;
        centers.push(row.bin_center);
        values.push(row.value);
    }
    if centers.len() < 2 {
        return Err(ExportError::Format("density file needs >= 2 bins".into()));
    }
    let w = centers[1] - centers[0];
    for pair in centers.windows(2) {
        if ((pair[1] - pair[0]) - w).abs() > 1e-9 * w {
            return Err(ExportError::Format("bin centers are not uniform".into()));
        }
    }
    let lo = centers[0] - 0.5 * w;
    let hi = centers[centers.len() - 1] + 0.5 * w;
    let grid = crate::density::Grid::on(lo, hi, centers.len())
        .map_err(|e| ExportError::Format(e.to_string()))?;
    Ok(DensityEstimate::new(grid, values, crate::density::Method::Histogram))
}

#[derive(Debug, Serialize)]
struct ReturnTimeRow {
    n: usize,
    count: u64,
    prob: f64,
    cumprob: f64,
}

/// Return-time histogram CSV (n, count, prob, cumprob).
pub fn write_return_times(
    path: impl AsRef<Path>,
    stats: &ReturnTimeStats,
) -> Result<(), ExportError> {
    let mut w = csv::Writer::from_path(path)?;
    let probs = stats.probabilities();
    let mut cum = 0.0;
    for (k, (&c, &p)) in stats.counts.iter().zip(&probs).enumerate() {
        cum += p;
        w.serialize(ReturnTimeRow { n: k + 1, count: c, prob: p, cumprob: cum })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct CylinderRow {
    p: usize,
    left: f64,
    right: f64,
    side: String,
}

/// Cylinder table CSV (p, left, right, side).
pub fn write_cylinders(
    path: impl AsRef<Path>,
    part: &CylinderPartition,
) -> Result<(), ExportError> {
    let mut w = csv::Writer::from_path(path)?;
    for piece in &part.pieces {
        w.serialize(CylinderRow {
            p: piece.return_time,
            left: piece.lo,
            right: piece.hi,
            side: match piece.side {
                Side::Left => "1".into(),
                Side::Right => "2".into(),
            },
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct LatticeRow {
    p: usize,
    a: f64,
    a_prime: f64,
    b: Option<f64>,
    b_prime: Option<f64>,
}

/// Preimage lattice CSV (p, a, a_prime, b, b_prime); the b-columns start
/// at p = 1.
pub fn write_lattice(path: impl AsRef<Path>, lat: &PreimageLattice) -> Result<(), ExportError> {
    let mut w = csv::Writer::from_path(path)?;
    for p in 0..=lat.depth() {
        w.serialize(LatticeRow {
            p,
            a: lat.a(p),
            a_prime: lat.a_prime(p),
            b: (p >= 1).then(|| lat.b(p)),
            b_prime: (p >= 1).then(|| lat.b_prime(p)),
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct SweepRow {
    epsilon: f64,
    l1_deviation: f64,
    noise_floor: f64,
}

/// Sweep CSV (epsilon, l1_deviation, noise_floor).
pub fn write_sweep(path: impl AsRef<Path>, sweep: &SweepResult) -> Result<(), ExportError> {
    let mut w = csv::Writer::from_path(path)?;
    for p in &sweep.points {
        w.serialize(SweepRow {
            epsilon: p.epsilon,
            l1_deviation: p.l1_deviation,
            noise_floor: sweep.noise_floor,
        })?;
    }
    w.flush()?;
    Ok(())
}
