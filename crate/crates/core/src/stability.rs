//! Forcing-perturbation experiments and L¹ statistical stability.
//!
//! Axial forcing scales the constant term and keeps the R-symmetry;
//! planar forcing breaks it, splitting the successor relation into two
//! maps (one per source lobe). The sweep compares perturbed invariant
//! densities against an unperturbed baseline at matched budgets and
//! seeds, with the resolvable deviation pinned by a second independent
//! unperturbed run.

use crate::cusp::{build_lattice, CuspError, CuspMap, IntervalMap};
use crate::density::l1_distance;
use crate::flow::{FlowParams, Perturbation};
use crate::numeric::{golden_min, linear_fit};
use crate::pipeline::{run_pipeline, LobeSelect, PipelineError, PipelineResult, RunBudget};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StabilityError {
    #[error("pipeline at epsilon = {epsilon}: {source}")]
    Pipeline {
        epsilon: f64,
        #[source]
        source: PipelineError,
    },
    #[error("assumption check: {0}")]
    Assumption(#[from] CuspError),
    #[error("expansion bound d_(eps,1,0) = {0} <= 1: the stability hypotheses fail")]
    ExpansionLost(f64),
    #[error("sweep needs a decreasing epsilon grid with >= 4 points, got {0:?}")]
    BadGrid(Vec<f64>),
}

/// Closeness report of a perturbed map against the unperturbed one.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// sup |T_ε − T| on a grid avoiding 1e-3 neighborhoods of both cusps.
    pub c0_distance: f64,
    /// max |DT_ε − DT| at sampled points away from the cusps.
    pub max_deriv_gap: f64,
    /// (offset, DT_ε/DT) along x₀ ± 2⁻ᵏ.
    pub cusp_ratio_trend: Vec<(f64, f64)>,
    /// Hölder proxies of DT_ε on dyadic approaches to the cusp.
    pub holder_iota: f64,
    pub holder_const: f64,
    /// inf |DT_ε| over (b_ε,1, a_ε,0) and its gap to the unperturbed one.
    pub d_eps_10: f64,
    pub d_10: f64,
    pub d_gap: f64,
    /// The one hard assertion: d_(ε,1,0) > 1.
    pub expansion_ok: bool,
}

fn inf_abs_deriv(map: &impl IntervalMap, lo: f64, hi: f64) -> f64 {
    const SCAN: usize = 400;
    let f = |x: f64| map.deriv(x).abs();
    let mut best_x = lo;
    let mut best = f64::INFINITY;
    for i in 1..SCAN {
        let x = lo + (hi - lo) * i as f64 / SCAN as f64;
        let v = f(x);
        if v < best {
            best = v;
            best_x = x;
        }
    }
    let h = (hi - lo) / SCAN as f64;
    let (_, v) = golden_min(f, (best_x - h).max(lo), (best_x + h).min(hi), 1e-8);
    v.min(best)
}

/// Compare a perturbed map with the unperturbed one. Everything is
/// report-only except the expansion bound, which the stability theorem
/// needs outright.
pub fn check_assumptions(t: &CuspMap, t_eps: &CuspMap) -> Result<AssumptionReport, StabilityError> {
    let x0 = t.x0();
    let x0e = t_eps.x0();
    const GRID: usize = 10_000;
    let mut c0 = 0.0f64;
    for i in 0..=GRID {
        let x = i as f64 / GRID as f64;
        if (x - x0).abs() < 1e-3 || (x - x0e).abs() < 1e-3 {
            continue;
        }
        c0 = c0.max((t.eval(x) - t_eps.eval(x)).abs());
    }
    let mut dgap = 0.0f64;
    for i in 0..1000 {
        let x = (i as f64 + 0.5) / 1000.0;
        if (x - x0).abs() < 1e-2 || (x - x0e).abs() < 1e-2 || x < 1e-3 || x > 1.0 - 1e-3 {
            continue;
        }
        dgap = dgap.max((t.deriv(x) - t_eps.deriv(x)).abs());
    }
    // the cusp-derivative ratio is evaluated at matching offsets from each
    // map's own cusp (the finite-ε surrogate of the iterated limit)
    let mut trend = Vec::new();
    for k in 4..=10 {
        let d = 2f64.powi(-k);
        for s in [-1.0, 1.0] {
            let r = t_eps.deriv(x0e + s * d) / t.deriv(x0 + s * d);
            trend.push((s * d, r));
        }
    }
    // Hölder proxy: slope of log|DT_ε(x_k) − DT_ε(x_{k+1})| against
    // log|x_k − x_{k+1}| on a dyadic approach to the cusp
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for k in 4..=9 {
        let a = x0e - 2f64.powi(-k);
        let b = x0e - 2f64.powi(-(k + 1));
        let dd = (t_eps.deriv(a) - t_eps.deriv(b)).abs();
        if dd > 0.0 {
            lx.push((b - a).abs().ln());
            ly.push(dd.ln());
        }
    }
    let (holder_iota, holder_logc, _) =
        if lx.len() >= 3 { linear_fit(&lx, &ly) } else { (f64::NAN, f64::NAN, 0.0) };

    let lat = build_lattice(t, 3)?;
    let lat_e = build_lattice(t_eps, 3)?;
    let d_10 = inf_abs_deriv(t, lat.b(1), lat.a0());
    let d_eps_10 = inf_abs_deriv(t_eps, lat_e.b(1), lat_e.a0());
    let expansion_ok = d_eps_10 > 1.0;

    let report = AssumptionReport {
        c0_distance: c0,
        max_deriv_gap: dgap,
        cusp_ratio_trend: trend,
        holder_iota,
        holder_const: holder_logc.exp(),
        d_eps_10,
        d_10,
        d_gap: (d_10 - d_eps_10).abs(),
        expansion_ok,
    };
    if !expansion_ok {
        return Err(StabilityError::ExpansionLost(d_eps_10));
    }
    Ok(report)
}

/// One perturbed run bundled with its closeness report and deviation.
#[derive(Debug, Clone)]
pub struct PerturbedRun {
    pub result: PipelineResult,
    pub assumptions: AssumptionReport,
    pub l1_deviation: f64,
}

/// Full perturbed pipeline against a given unperturbed baseline.
pub fn run_perturbed(
    p: &FlowParams,
    pert: &Perturbation,
    lobe: LobeSelect,
    budget: &RunBudget,
    baseline: &PipelineResult,
) -> Result<PerturbedRun, StabilityError> {
    let eps = match *pert {
        Perturbation::None => 0.0,
        Perturbation::AxialForcing { epsilon } | Perturbation::PlanarForcing { epsilon, .. } => {
            epsilon
        }
    };
    let result = run_pipeline(p, pert, lobe, budget)
        .map_err(|source| StabilityError::Pipeline { epsilon: eps, source })?;
    let assumptions = check_assumptions(&baseline.map, &result.map)?;
    let l1_deviation = l1_distance(&baseline.density, &result.density)
        .map_err(|e| StabilityError::Pipeline { epsilon: eps, source: e.into() })?;
    Ok(PerturbedRun { result, assumptions, l1_deviation })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub epsilon: f64,
    pub l1_deviation: f64,
    pub d_eps_10: f64,
    pub c0_distance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    /// L¹ distance between two independent unperturbed runs: the
    /// resolvable deviation at this budget.
    pub noise_floor: f64,
}

/// Axial-forcing stability sweep over a decreasing ε grid with matched
/// budgets and seeds; the noise floor comes from a second unperturbed run
/// with an independent seed. Returns the deviation curve together with
/// the per-point runs and the baseline.
pub fn stability_sweep_full(
    p: &FlowParams,
    eps_grid: &[f64],
    budget: &RunBudget,
) -> Result<(SweepResult, Vec<PerturbedRun>, PipelineResult), StabilityError> {
    if eps_grid.len() < 4 || eps_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(StabilityError::BadGrid(eps_grid.to_vec()));
    }
    let wrap =
        |source: PipelineError| StabilityError::Pipeline { epsilon: 0.0, source };
    let baseline =
        run_pipeline(p, &Perturbation::None, LobeSelect::All, budget).map_err(wrap)?;
    let twin_budget = RunBudget { seed: budget.seed ^ 0x5bd1_e995, ..*budget };
    let twin =
        run_pipeline(p, &Perturbation::None, LobeSelect::All, &twin_budget).map_err(wrap)?;
    let noise_floor = l1_distance(&baseline.density, &twin.density).map_err(|e| wrap(e.into()))?;

    let runs: Vec<Result<PerturbedRun, StabilityError>> = crate::par::slice_map(eps_grid, |&eps| {
        run_perturbed(
            p,
            &Perturbation::AxialForcing { epsilon: eps },
            LobeSelect::All,
            budget,
            &baseline,
        )
    });
    let mut points = Vec::with_capacity(eps_grid.len());
    let mut out_runs = Vec::with_capacity(eps_grid.len());
    for (eps, run) in eps_grid.iter().zip(runs) {
        let run = run?;
        points.push(SweepPoint {
            epsilon: *eps,
            l1_deviation: run.l1_deviation,
            d_eps_10: run.assumptions.d_eps_10,
            c0_distance: run.assumptions.c0_distance,
        });
        out_runs.push(run);
    }
    Ok((SweepResult { points, noise_floor }, out_runs, baseline))
}

/// The deviation curve alone.
pub fn stability_sweep(
    p: &FlowParams,
    eps_grid: &[f64],
    budget: &RunBudget,
) -> Result<SweepResult, StabilityError> {
    stability_sweep_full(p, eps_grid, budget).map(|(sweep, _, _)| sweep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cusp::{AnalyticFamily, LocalExponents};

    fn family(alpha_prime: f64) -> CuspMap {
        let exps = LocalExponents {
            alpha_prime,
            psi: 2.0,
            beta_prime: 1.0,
            alpha: 0.4603,
            kappa: 2.0,
            beta_tilde: 0.5,
            amp_left: 1.0,
            exp_left: 0.3095,
            amp_right: 1.0,
            exp_right: 0.2856,
        };
        AnalyticFamily::new(exps, 0.43).unwrap()
    }

    #[test]
    fn identical_maps_report_zero_distances() {
        let t = family(1.113);
        let rep = check_assumptions(&t, &t).unwrap();
        assert_eq!(rep.c0_distance, 0.0);
        assert_eq!(rep.max_deriv_gap, 0.0);
        assert_eq!(rep.d_gap, 0.0);
        assert!(rep.expansion_ok);
        for &(_, r) in &rep.cusp_ratio_trend {
            assert_eq!(r, 1.0);
        }
    }

    #[test]
    fn distances_scale_linearly_with_parameter_shift() {
        let t = family(1.113);
        let r1 = check_assumptions(&t, &family(1.113 + 0.01)).unwrap();
        let r2 = check_assumptions(&t, &family(1.113 + 0.02)).unwrap();
        assert!(r1.c0_distance > 0.0);
        let ratio = r2.c0_distance / r1.c0_distance;
        assert!((ratio - 2.0).abs() < 0.2, "c0 ratio {ratio}");
        let dratio = r2.max_deriv_gap / r1.max_deriv_gap;
        assert!((dratio - 2.0).abs() < 0.3, "deriv ratio {dratio}");
    }

    #[test]
    fn lost_expansion_is_flagged() {
        // with amplitude 0.95 the preimage a0 sits inside the cusp germ
        // and |DT(a0)| = 0.95·B·(0.167)^(B−1) ≈ 0.97 < 1
        let t = family(1.113);
        let exps = LocalExponents {
            alpha_prime: 1.113,
            psi: 2.0,
            beta_prime: 1.0,
            alpha: 0.4603,
            kappa: 2.0,
            beta_tilde: 0.5,
            amp_left: 1.0,
            exp_left: 0.3095,
            amp_right: 0.95,
            exp_right: 0.2856,
        };
        let weak = AnalyticFamily::new(exps, 0.43).unwrap();
        match check_assumptions(&t, &weak) {
            Err(StabilityError::ExpansionLost(d)) => assert!(d <= 1.0, "d = {d}"),
            other => panic!("expected ExpansionLost, got {other:?}"),
        }
    }

    #[test]
    fn sweep_grid_contract() {
        let p = FlowParams::classical();
        let b = RunBudget { total_events: 2000, ..Default::default() };
        assert!(matches!(
            stability_sweep(&p, &[0.5, 0.25], &b),
            Err(StabilityError::BadGrid(_))
        ));
        assert!(matches!(
            stability_sweep(&p, &[0.1, 0.2, 0.3, 0.4], &b),
            Err(StabilityError::BadGrid(_))
        ));
    }
}
