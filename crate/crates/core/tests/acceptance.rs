//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (visible with `-- --nocapture`). The expensive Lorenz dataset
//! (10⁵ Casimir maxima at the published parameter set) is computed once
//! and shared.
//!
//! Two criteria assert literature values that direct measurement
//! contradicts; they are kept faithful and fail with the measured value
//! and the verification trail in the message rather than being loosened:
//!
//! * the mean inter-maximum time: a dt = 1e-5 dense scan of C(t) pins it
//!   at 0.751 ± 0.005, not 0.66 (the rigorous shortest-period value
//!   1.5586 of the literature corresponds to half-period 0.78, which
//!   backs the measurement);
//! * the density-shape exponent delta: the fitted boundary exponent
//!   tracks this pipeline's cusp exponent B* ≈ 0.276 (delta ≈ 2.49),
//!   not the published B* = 0.3095 (delta ≈ 2.226); the internal
//!   consistency check delta ≈ 1/B*−1 passes either way.

use lorenz_casimir::cusp::{
    build_empirical, build_lattice, check_lemma1, fit_exponents, AnalyticFamily, CuspMap,
    IntervalMap,
};
use lorenz_casimir::density::{
    ansatz_normalizer, fit_ansatz, histogram_density, l1_distance, pf_iterate, pf_residual,
    ulam_density, DensityEstimate, Grid, Method,
};
use lorenz_casimir::flow::{
    casimir, hamiltonian, hamiltonian_part, involution, FlowParams, Perturbation,
};
use lorenz_casimir::inducing::{
    build_cylinders, first_return, return_time_stats, stats_from_times, ReturnDomain,
};
use lorenz_casimir::ode::{integrate, integrate_field};
use lorenz_casimir::pipeline::{
    crossing_histogram, lobe_symmetry_ks, run_pipeline_on, run_section, tv_distance, LobeSelect,
    PipelineResult, RunBudget, SectionDataset,
};
use lorenz_casimir::section::{crossing_run_lengths, SectionOptions};
use lorenz_casimir::special::ln_gamma;
use lorenz_casimir::stability::stability_sweep;
use std::sync::OnceLock;

const EVENTS: usize = 100_000;
const SEED: u64 = 7;

fn budget() -> RunBudget {
    RunBudget { total_events: EVENTS, seed: SEED, ..Default::default() }
}

struct LorenzRun {
    dataset: SectionDataset,
    result: PipelineResult,
}

fn lorenz_run() -> &'static LorenzRun {
    static RUN: OnceLock<LorenzRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let p = FlowParams::classical();
        let dataset =
            run_section(&p, &Perturbation::None, &budget(), SectionOptions::default()).unwrap();
        let result =
            run_pipeline_on(&dataset, &Perturbation::None, LobeSelect::All, &budget()).unwrap();
        LorenzRun { dataset, result }
    })
}

fn paper_family() -> CuspMap {
    AnalyticFamily::paper_tuned().unwrap()
}

fn report(criterion: &str, pass: bool, detail: &str) {
    println!("[{}] {criterion}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{criterion}: {detail}");
}

#[test]
fn criterion_1_paper_constant_reproduction() {
    let run = lorenz_run();
    let e = &run.result.exponents.exponents;
    let checks = [
        ("alpha_prime", e.alpha_prime, 1.113, 0.05),
        ("alpha", e.alpha, 0.4603, 0.05),
        ("B_prime", e.exp_left, 0.3095, 0.05),
        ("B", e.exp_right, 0.2856, 0.05),
    ];
    let mut all = true;
    let mut details = Vec::new();
    for (name, got, want, tol) in checks {
        let ok = (got - want).abs() <= tol;
        all &= ok;
        details.push(format!("{name} = {got:.4} (paper {want} ± {tol})"));
    }
    report("criterion 1 (map constants at ~1e5 maxima)", all, &details.join(", "));
}

#[test]
fn criterion_2_density_fit() {
    let run = lorenz_run();
    let e = &run.result.exponents.exponents;
    let fit = fit_ansatz(&run.result.density).unwrap();
    let delta_ok = (fit.delta - 2.2258).abs() <= 0.15;
    let gamma_ok = (fit.gamma - 4.26).abs() <= 0.5;
    let cross = (fit.delta - (1.0 / e.b_star() - 1.0)).abs();
    let cross_ok = cross <= 0.2;
    report(
        "criterion 2 (density shape fit)",
        delta_ok && gamma_ok && cross_ok,
        &format!(
            "delta = {:.4} (paper 2.2258 ± 0.15), gamma = {:.4} (paper 4.26 ± 0.5), \
             |delta − (1/B*−1)| = {:.4} (< 0.2, B* = {:.4}); the fitted delta follows this \
             pipeline's cusp exponent, see the suite header",
            fit.delta,
            fit.gamma,
            cross,
            e.b_star()
        ),
    );
}

#[test]
fn criterion_3_mean_intermaximum_time() {
    let run = lorenz_run();
    let gap = run.dataset.mean_gap;
    println!("implied shortest period 2×gap = {:.4}", 2.0 * gap);
    report(
        "criterion 3 (mean inter-maximum time)",
        (gap - 0.66).abs() <= 0.05 && run.dataset.values.len() >= 10_000,
        &format!(
            "mean gap = {gap:.4} over {} events (paper 0.66 ± 0.05); a dt = 1e-5 dense scan \
             of C(t) confirms 0.751 ± 0.005, and the implied shortest period 2×gap = {:.3} \
             matches the rigorous literature value 1.5586 far better than 2×0.66 = 1.32",
            run.dataset.values.len(),
            2.0 * gap
        ),
    );
}

#[test]
fn criterion_4_lemma1_verification() {
    // the p* = 8 figure is hand arithmetic from the published constants
    let hand = (1.0 + (1.01f64 / 0.4603).ln() / 1.113f64.ln()).floor() as usize;
    let run = lorenz_run();
    let map = &run.result.map;
    let exps = &run.result.exponents.exponents;
    let lattice = build_lattice(map, 25).unwrap();
    let rep = check_lemma1(map, exps, &lattice, 1.01).unwrap();
    report(
        "criterion 4 (uniform expansion of the induced map)",
        hand == 8 && rep.all_pass(),
        &format!(
            "p*(published constants) = {hand} (want 8); on the fitted map: p* = {}, \
             d_(1,0) = {:.4}, checks i/ii/iii = {}/{}/{}",
            rep.p_star, rep.d_10, rep.check_i, rep.check_ii, rep.check_iii
        ),
    );
}

#[test]
fn criterion_5_return_time_tail_and_windings() {
    let run = lorenz_run();
    let map = &run.result.map;
    let e = &run.result.exponents.exponents;
    let lattice = build_lattice(map, 40).unwrap();

    let stats = return_time_stats(map, &lattice, ReturnDomain::Inducing, EVENTS, SEED).unwrap();
    let predicted = -e.alpha_prime.ln() / e.b_star();
    let slope_ok = (stats.tail_slope - predicted).abs() <= 0.2 * predicted.abs();

    // winding statistic of the flow: opposite-lobe run length per
    // crossing excursion, against the map's return times to (x0, 1)
    let wind = crossing_histogram(&run.dataset.collection);
    let taus = return_time_stats(map, &lattice, ReturnDomain::RightHalf, EVENTS, SEED ^ 1).unwrap();
    let tv = tv_distance(&wind, &taus.counts);
    let tv_ok = tv < 0.03;

    report(
        "criterion 5 (return-time tail and winding counts)",
        slope_ok && tv_ok,
        &format!(
            "tail slope {:.4} vs −(ln alpha')/B* = {:.4} (±20%), TV(flow windings, map \
             return times) = {:.4} (< 0.03)",
            stats.tail_slope, predicted, tv
        ),
    );
}

#[test]
fn criterion_6_density_properties() {
    let map = paper_family();
    let grid = Grid::unit(4096).unwrap();
    // 4e6 orbit samples keep the histogram's own Poisson L1 noise
    // (≈ √(bins/n)) a factor two under the agreement tolerance
    let hist = histogram_density(&map, 4_000_000, grid, 11).unwrap();
    let ulam = ulam_density(&map, grid, 64).unwrap();
    let uniform = DensityEstimate::new(grid, vec![1.0; 4096], Method::PfIteration);
    let pf = pf_iterate(&map, &uniform, 2000).unwrap();

    let d_hu = l1_distance(&hist, &ulam).unwrap();
    let d_hp = l1_distance(&hist, &pf).unwrap();
    let d_up = l1_distance(&ulam, &pf).unwrap();
    let methods_ok = d_hu < 0.05 && d_hp < 0.05 && d_up < 0.05;

    let residual = pf_residual(&map, &pf).unwrap();
    let residual_ok = residual < 1e-6;

    // boundary densities vanish under refinement; the pointwise PF
    // estimator is the one that resolves the steep x^(1/B*−1) tail
    // (sampling estimators see empty outer bins, the Ulam chain's
    // stratified points never reach them)
    let mut boundary_vals = Vec::new();
    for bins in [512usize, 2048, 8192] {
        let g = Grid::unit(bins).unwrap();
        let est = pf_iterate(
            &map,
            &DensityEstimate::new(g, vec![1.0; bins], Method::PfIteration),
            2000,
        )
        .unwrap();
        boundary_vals.push((est.values[0], est.values[bins - 1]));
    }
    let boundary_ok = boundary_vals.windows(2).all(|w| w[1].0 < w[0].0 && w[1].1 < w[0].1)
        && boundary_vals[2].0 < 1e-4
        && boundary_vals[2].1 < 1e-4;

    // continuity at the cusp: rho(x0) = rho(a0')/|DT(a0')| + rho(a0)/|DT(a0)|,
    // on a finer PF grid so the discretization does not mask the identity
    let fine = Grid::unit(8192).unwrap();
    let pf_fine = pf_iterate(
        &map,
        &DensityEstimate::new(fine, vec![1.0; 8192], Method::PfIteration),
        2000,
    )
    .unwrap();
    let lattice = build_lattice(&map, 5).unwrap();
    let lhs = pf_fine.value_at(map.x0());
    let rhs = pf_fine.value_at(lattice.a0_prime()) / map.deriv(lattice.a0_prime()).abs()
        + pf_fine.value_at(lattice.a0()) / map.deriv(lattice.a0()).abs();
    let continuity_ok = (lhs - rhs).abs() < 1e-3;

    // Bessel normalizer against the Beta-series quadrature
    let mut bessel_ok = true;
    let mut worst = 0.0f64;
    let mut s = 0.37f64;
    for _ in 0..20 {
        s = (s * 9301.0 + 49_297.0).fract();
        let gamma = 0.5 + 9.5 * s;
        let delta = 0.5 + 3.5 * (s * 7919.0).fract();
        let err = (ansatz_normalizer(gamma, delta) * beta_series_integral(gamma, delta) - 1.0).abs();
        worst = worst.max(err);
        bessel_ok &= err < 1e-8;
    }

    report(
        "criterion 6 (density properties)",
        methods_ok && residual_ok && boundary_ok && continuity_ok && bessel_ok,
        &format!(
            "pairwise L1 = {d_hu:.4}/{d_hp:.4}/{d_up:.4} (< 0.05), PF residual = {residual:.2e} \
             (< 1e-6), boundary bins shrink under refinement = {boundary_ok}, cusp continuity \
             |lhs−rhs| = {:.2e} (< 1e-3), Bessel quadrature worst error = {worst:.2e} (< 1e-8)",
            (lhs - rhs).abs()
        ),
    );
}

/// Independent quadrature of 1/N via the Beta-function expansion of the
/// exponential.
fn beta_series_integral(gamma: f64, delta: f64) -> f64 {
    let ln_gamma_d1 = ln_gamma(delta + 1.0);
    let mut sum = 0.0f64;
    let mut ln_coeff = 0.0f64;
    for k in 0..400 {
        if k > 0 {
            ln_coeff += gamma.ln() - (k as f64).ln();
        }
        let ln_beta =
            ln_gamma(delta + k as f64 + 1.0) + ln_gamma_d1 - ln_gamma(2.0 * delta + k as f64 + 2.0);
        let term = (ln_coeff + ln_beta).exp() * if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += term;
        if k > gamma as usize + 10 && term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

#[test]
fn criterion_7_oracle_equivalence_on_the_analytic_family() {
    let truth = paper_family();
    let truth_exps = match &truth {
        CuspMap::Analytic(f) => f.exponents.clone(),
        _ => unreachable!(),
    };
    // exact pairs from iterating the family
    let mut x = 0.51f64;
    for _ in 0..200 {
        x = truth.eval(x);
    }
    let mut pairs = Vec::with_capacity(200_000);
    for _ in 0..200_000 {
        let y = truth.eval(x);
        pairs.push((x, y));
        x = y;
    }
    let np = lorenz_casimir::section::NormalizedPairs { pairs, z_min: 0.0, z_max: 1.0 };
    let rebuilt = build_empirical(&np, 96).unwrap();
    let fit = fit_exponents(&rebuilt).unwrap().exponents;
    let exps_ok = (fit.alpha_prime - truth_exps.alpha_prime).abs() <= 0.02
        && (fit.alpha - truth_exps.alpha).abs() <= 0.02
        && (fit.exp_left - truth_exps.exp_left).abs() <= 0.02
        && (fit.exp_right - truth_exps.exp_right).abs() <= 0.02;

    let grid = Grid::unit(1024).unwrap();
    let hist = histogram_density(&truth, 1_000_000, grid, 3).unwrap();
    let ulam = ulam_density(&truth, grid, 64).unwrap();
    let d = l1_distance(&hist, &ulam).unwrap();
    let ulam_ok = d < 0.05;

    // first-return times are exactly the cylinder index up to depth 8
    let lattice = build_lattice(&truth, 12).unwrap();
    let cylinders = build_cylinders(&lattice, 8).unwrap();
    let mut returns_ok = true;
    let mut s = 0.2113f64;
    for p in 1..=8 {
        let (l, r) = cylinders.pieces_of(p);
        for piece in [l, r] {
            for _ in 0..100 {
                s = (s * 9301.0 + 49_297.0).fract();
                let x = piece.lo + (1e-9 + s * (1.0 - 2e-9)) * (piece.hi - piece.lo);
                let (_, tau) = first_return(&truth, &lattice, ReturnDomain::Inducing, x).unwrap();
                returns_ok &= tau == p;
            }
        }
    }

    report(
        "criterion 7 (oracle equivalence)",
        exps_ok && ulam_ok && returns_ok,
        &format!(
            "round-trip exponents (alpha' {:.4}, alpha {:.4}, B' {:.4}, B {:.4}) within ±0.02 = \
             {exps_ok}, Ulam vs histogram L1 = {d:.4} (< 0.05), exact return times at depth ≤ 8 \
             = {returns_ok}",
            fit.alpha_prime, fit.alpha, fit.exp_left, fit.exp_right
        ),
    );
}

#[test]
fn criterion_8_statistical_stability() {
    let p = FlowParams::classical();
    let sweep_budget = RunBudget { total_events: 40_000, seed: SEED, ..Default::default() };
    let sweep = stability_sweep(&p, &[0.5, 0.25, 0.1, 0.05], &sweep_budget).unwrap();
    let floor = sweep.noise_floor;
    let mut monotone_ok = true;
    for w in sweep.points.windows(2) {
        monotone_ok &= w[1].l1_deviation <= w[0].l1_deviation + floor;
    }
    let last = sweep.points.last().unwrap().l1_deviation;
    let last_ok = last <= 2.0 * floor;
    let d_ok = sweep.points.iter().all(|pt| pt.d_eps_10 > 1.0);

    // planar forcing: two distinct valid maps and broken R-symmetry
    let pert = Perturbation::PlanarForcing { epsilon: 2.5, theta: 70f64.to_radians() };
    let planar_budget = RunBudget { total_events: 60_000, seed: SEED, ..Default::default() };
    let dataset = run_section(&p, &pert, &planar_budget, SectionOptions::default()).unwrap();
    let plus = run_pipeline_on(&dataset, &pert, LobeSelect::Plus, &planar_budget).unwrap();
    let minus = run_pipeline_on(&dataset, &pert, LobeSelect::Minus, &planar_budget).unwrap();
    // estimation noise: the same per-lobe construction on the symmetric
    // flow, where the two maps agree up to sampling error
    let sym = run_section(&p, &Perturbation::None, &planar_budget, SectionOptions::default())
        .unwrap();
    let sym_plus =
        run_pipeline_on(&sym, &Perturbation::None, LobeSelect::Plus, &planar_budget).unwrap();
    let sym_minus =
        run_pipeline_on(&sym, &Perturbation::None, LobeSelect::Minus, &planar_budget).unwrap();
    let sup = |a: &CuspMap, b: &CuspMap| {
        let mut worst = 0.0f64;
        for i in 0..=2000 {
            let x = i as f64 / 2000.0;
            if (x - a.x0()).abs() > 2e-2 && (x - b.x0()).abs() > 2e-2 {
                worst = worst.max((a.eval(x) - b.eval(x)).abs());
            }
        }
        worst
    };
    let split = sup(&plus.map, &minus.map);
    let noise = sup(&sym_plus.map, &sym_minus.map);
    let split_ok = split > 3.0 * noise;
    let ks_sym = lobe_symmetry_ks(&sym.collection);
    let ks_planar = lobe_symmetry_ks(&dataset.collection);
    let ks_ok = ks_planar > 5.0 * ks_sym;

    report(
        "criterion 8 (statistical stability)",
        monotone_ok && last_ok && d_ok && split_ok && ks_ok,
        &format!(
            "axial deviations {:?} (noise floor {floor:.4}): decreasing within noise = \
             {monotone_ok}, smallest ≤ 2×floor = {last_ok}, expansion kept = {d_ok}; planar \
             split sup|T+' − T−'| = {split:.4} vs noise {noise:.4} (> 3×) = {split_ok}, lobe KS \
             {ks_planar:.4} vs symmetric {ks_sym:.4} (> 5×) = {ks_ok}",
            sweep.points.iter().map(|pt| (pt.epsilon, (pt.l1_deviation * 1e4).round() / 1e4))
                .collect::<Vec<_>>()
        ),
    );
}

#[test]
fn criterion_9_flow_correctness() {
    let p = FlowParams::classical();
    let tol = 1e-10;

    // fixed points stay fixed to integrator tolerance
    let mut fixed_ok = true;
    for u in [p.c0(), p.c1(), p.c2()] {
        let traj = integrate(&p, &Perturbation::None, u, 5.0, tol).unwrap();
        for i in 0..3 {
            fixed_ok &= (traj.end_state()[i] - u[i]).abs() < 10.0 * tol * (1.0 + u[i].abs());
        }
    }

    // R-equivariance of unperturbed orbits within 10×tol
    let u0 = [2.0, -1.0, -15.0];
    let a = integrate(&p, &Perturbation::None, u0, 8.0, tol).unwrap();
    let b = integrate(&p, &Perturbation::None, involution(u0), 8.0, tol).unwrap();
    let mut equivariant_ok = a.times.len() == b.times.len();
    if equivariant_ok {
        for (sa, sb) in a.states.iter().zip(&b.states) {
            let r = involution(*sa);
            for i in 0..3 {
                equivariant_ok &= (r[i] - sb[i]).abs() <= 10.0 * tol * (1.0 + sa[i].abs());
            }
        }
    }

    // divergence-free Hamiltonian part (central differences are exact
    // for the quadratic components)
    let mut div_ok = true;
    for u in [[1.0, 2.0, 3.0], [-4.0, 0.3, -22.0], [17.0, -9.0, -38.0]] {
        let h = 1e-4;
        let mut trace = 0.0;
        for i in 0..3 {
            let mut up = u;
            let mut dn = u;
            up[i] += h;
            dn[i] -= h;
            trace += (hamiltonian_part(&p, up)[i] - hamiltonian_part(&p, dn)[i]) / (2.0 * h);
        }
        div_ok &= trace.abs() < 1e-10;
    }

    // conservative variant preserves both first integrals
    let u0 = [3.0, -2.0, -10.0];
    let t_end = 5.0;
    let traj = integrate_field(|u| hamiltonian_part(&p, u), u0, t_end, tol).unwrap();
    let end = traj.end_state();
    let dc = (casimir(end) - casimir(u0)).abs() / casimir(u0) / t_end;
    let dh = (hamiltonian(&p, end) - hamiltonian(&p, u0)).abs()
        / hamiltonian(&p, u0).abs().max(1.0)
        / t_end;
    let conservative_ok = dc < 1e-8 && dh < 1e-8;

    report(
        "criterion 9 (flow correctness)",
        fixed_ok && equivariant_ok && div_ok && conservative_ok,
        &format!(
            "equilibria = {fixed_ok}, R-equivariance = {equivariant_ok}, div v = 0 = {div_ok}, \
             first-integral drift (C {dc:.2e}, H {dh:.2e} per unit time) < 1e-8 = \
             {conservative_ok}"
        ),
    );
}

#[test]
fn auxiliary_identifications_hold() {
    // the switch fraction of the flow equals the invariant mass of
    // (x0, 1), the backbone of criterion 5's identification
    let run = lorenz_run();
    let runs = crossing_run_lengths(&run.dataset.collection);
    let total: usize =
        run.dataset.collection.series.iter().map(|s| s.events.len().saturating_sub(1)).sum();
    let p_switch = runs.len() as f64 / total as f64;
    let mu_right = run.result.density.integral_over(run.result.map.x0(), 1.0);
    println!("P(switch) = {p_switch:.4}, mu((x0,1)) = {mu_right:.4}");
    assert!((p_switch - mu_right).abs() < 0.01);

    // the crossing-run mean obeys the Kac identity for (x0, 1)
    let ws = stats_from_times(&runs.iter().map(|&c| c as usize).collect::<Vec<_>>());
    assert!((ws.mean() - 1.0 / mu_right).abs() < 0.1 * ws.mean());

    // unperturbed maxima value distributions agree across lobes
    let ks = lobe_symmetry_ks(&run.dataset.collection);
    println!("lobe KS at 1e5 events: {ks:.4}");
    assert!(ks < 0.02);
}
