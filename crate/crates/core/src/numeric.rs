//! Small numerical building blocks shared across the crate: bracketed
//! root finding, golden-section minimization, least squares and a
//! deterministic Nelder-Mead simplex.

/// Bisection with a Newton polish step on a bracketed root of `f`.
///
/// `f` must have opposite signs at `a` and `b`. The bracket is halved until
/// its width drops below `xtol`, then a few Newton steps with `df` sharpen
/// the root as long as they stay inside the bracket.
pub fn bisect_newton(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    xtol: f64,
) -> f64 {
    let mut fa = f(a);
    let fb = f(b);
    debug_assert!(
        fa == 0.0 || fb == 0.0 || (fa < 0.0) != (fb < 0.0),
        "bisect_newton: no sign change on [{a}, {b}]"
    );
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    while (b - a).abs() > xtol {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    let mut x = 0.5 * (a + b);
    for _ in 0..4 {
        let d = df(x);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let step = f(x) / d;
        let xn = x - step;
        if xn.is_finite() && xn >= a.min(b) && xn <= a.max(b) {
            x = xn;
        } else {
            break;
        }
    }
    x
}

/// Plain bisection to a bracket width of `xtol`; returns the bracket midpoint.
pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, xtol: f64) -> f64 {
    let mut fa = f(a);
    if fa == 0.0 {
        return a;
    }
    while (b - a).abs() > xtol {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Golden-section minimization of a unimodal `f` on [a, b] to width `xtol`.
pub fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64) {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > xtol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Ordinary least squares line fit. Returns (slope, intercept, r²).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    assert!(n >= 2.0, "linear_fit needs at least two points");
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r2)
}

/// Least squares for y ≈ c1·f1(x) + c2·f2(x) (two basis functions, no
/// intercept). Returns (c1, c2).
pub fn two_term_fit(xs: &[f64], ys: &[f64], f1: impl Fn(f64) -> f64, f2: impl Fn(f64) -> f64) -> (f64, f64) {
    let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let u = f1(x);
        let v = f2(x);
        a11 += u * u;
        a12 += u * v;
        a22 += v * v;
        b1 += u * y;
        b2 += v * y;
    }
    let det = a11 * a22 - a12 * a12;
    if det.abs() < 1e-300 {
        // degenerate design: fall back to single-term fit
        return (if a11 > 0.0 { b1 / a11 } else { 0.0 }, 0.0);
    }
    ((a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det)
}

/// Outcome of a Nelder-Mead run.
#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Deterministic Nelder-Mead over n dimensions.
///
/// Standard reflection/expansion/contraction/shrink coefficients; the
/// initial simplex is `x0` plus `step` along each axis. Converges when the
/// simplex function spread falls below `ftol` (relative) or the simplex
/// diameter below 1e-12.
pub fn nelder_mead(
    f: impl Fn(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    ftol: f64,
    max_iter: usize,
) -> SimplexResult {
    let n = x0.len();
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step;
        pts.push(p);
    }
    let mut fv: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        iterations += 1;
        // order ascending by function value
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&i, &j| fv[i].partial_cmp(&fv[j]).unwrap_or(std::cmp::Ordering::Equal));
        let ordered: Vec<Vec<f64>> = idx.iter().map(|&i| pts[i].clone()).collect();
        let fo: Vec<f64> = idx.iter().map(|&i| fv[i]).collect();
        pts = ordered;
        fv = fo;

        let spread = (fv[n] - fv[0]).abs();
        let scale = fv[0].abs().max(fv[n].abs()).max(1e-30);
        let diam: f64 = (0..n)
            .map(|k| {
                pts.iter()
                    .map(|p| p[k])
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
            })
            .map(|(lo, hi)| hi - lo)
            .fold(0.0f64, f64::max);
        if spread <= ftol * scale || diam < 1e-12 {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|k| pts[..n].iter().map(|p| p[k]).sum::<f64>() / n as f64)
            .collect();
        let worst = pts[n].clone();
        let refl: Vec<f64> = (0..n).map(|k| centroid[k] + (centroid[k] - worst[k])).collect();
        let fr = f(&refl);
        if fr < fv[0] {
            let exp: Vec<f64> = (0..n).map(|k| centroid[k] + 2.0 * (centroid[k] - worst[k])).collect();
            let fe = f(&exp);
            if fe < fr {
                pts[n] = exp;
                fv[n] = fe;
            } else {
                pts[n] = refl;
                fv[n] = fr;
            }
        } else if fr < fv[n - 1] {
            pts[n] = refl;
            fv[n] = fr;
        } else {
            let contr: Vec<f64> = if fr < fv[n] {
                (0..n).map(|k| centroid[k] + 0.5 * (refl[k] - centroid[k])).collect()
            } else {
                (0..n).map(|k| centroid[k] + 0.5 * (worst[k] - centroid[k])).collect()
            };
            let fc = f(&contr);
            if fc < fr.min(fv[n]) {
                pts[n] = contr;
                fv[n] = fc;
            } else {
                // shrink towards the best vertex
                for i in 1..=n {
                    for k in 0..n {
                        pts[i][k] = pts[0][k] + 0.5 * (pts[i][k] - pts[0][k]);
                    }
                    fv[i] = f(&pts[i]);
                }
            }
        }
    }

    let mut best = 0;
    for i in 1..=n {
        if fv[i] < fv[best] {
            best = i;
        }
    }
    SimplexResult {
        x: pts[best].clone(),
        fx: fv[best],
        iterations,
        converged,
    }
}

/// Two-sample Kolmogorov-Smirnov distance between empirical distributions.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| x.partial_cmp(y).unwrap());
    sb.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_newton_finds_sqrt2() {
        let r = bisect_newton(|x| x * x - 2.0, |x| 2.0 * x, 0.0, 2.0, 1e-12);
        assert!((r - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn golden_min_quartic() {
        let (x, _) = golden_min(|x| (x - 0.3).powi(4) + 1.0, -1.0, 1.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-2); // quartic floor is flat
        let (x, _) = golden_min(|x| (x - 0.3).powi(2), -1.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
    }

    #[test]
    fn linear_fit_exact_line() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.5).collect();
        let (m, c, r2) = linear_fit(&xs, &ys);
        assert!((m - 3.0).abs() < 1e-12);
        assert!((c + 1.5).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_term_fit_recovers_coefficients() {
        let xs: Vec<f64> = (1..40).map(|i| i as f64 * 0.02).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| 1.25 * x + 0.4 * x * x * x).collect();
        let (c1, c2) = two_term_fit(&xs, &ys, |x| x, |x| x * x * x);
        assert!((c1 - 1.25).abs() < 1e-10);
        assert!((c2 - 0.4).abs() < 1e-10);
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let f = |p: &[f64]| {
            let (x, y) = (p[0], p[1]);
            (1.0 - x).powi(2) + 100.0 * (y - x * x).powi(2)
        };
        let r = nelder_mead(f, &[-1.2, 1.0], 0.5, 1e-14, 2000);
        assert!(r.converged, "did not converge: {r:?}");
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4, "{:?}", r.x);
    }

    #[test]
    fn ks_distance_identical_and_disjoint() {
        let a = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(ks_distance(&a, &a), 0.0);
        let b = [1.1, 1.2, 1.3, 1.4];
        assert!((ks_distance(&a, &b) - 1.0).abs() < 1e-12);
    }
}
