//! Lorenz '63 vector field in shifted (rigid-body) coordinates.
//!
//! The coordinate change u₃ = x₃ − (ρ+σ) turns the classical system into
//! a Hamiltonian field v (with H = ½u·Ωu + h·u, Ω = diag(2,1,1),
//! h = (0,0,−σ)) minus a gradient field w = Λu − f (Λ = diag(σ,1,β),
//! f = (0,0,−β(ρ+σ))). The Casimir C(u) = ‖u‖² is conserved by v, and its
//! evolution under the full field drives everything downstream.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// State of the shifted system (u₁, u₂, u₃).
pub type State = [f64; 3];

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("non-finite state component: {0:?}")]
    NonFiniteInput(State),
    #[error("flow parameters must be strictly positive: sigma={0}, rho={1}, beta={2}")]
    InvalidParams(f64, f64, f64),
}

/// Lorenz parameters (σ, ρ, β), all strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
}

impl FlowParams {
    pub fn new(sigma: f64, rho: f64, beta: f64) -> Result<Self, FlowError> {
        if sigma > 0.0 && rho > 0.0 && beta > 0.0 {
            Ok(Self { sigma, rho, beta })
        } else {
            Err(FlowError::InvalidParams(sigma, rho, beta))
        }
    }

    /// The classical parameter set (10, 28, 8/3).
    pub fn classical() -> Self {
        Self { sigma: 10.0, rho: 28.0, beta: 8.0 / 3.0 }
    }

    /// ρ + σ, the shift between original and rigid-body coordinates.
    pub fn shift(&self) -> f64 {
        self.rho + self.sigma
    }

    /// Unstable fixed point c₁ = (√(β(ρ−1)), √(β(ρ−1)), −(σ+1)).
    pub fn c1(&self) -> State {
        let r = (self.beta * (self.rho - 1.0)).sqrt();
        [r, r, -(self.sigma + 1.0)]
    }

    /// The involution image of c₁.
    pub fn c2(&self) -> State {
        involution(self.c1())
    }

    /// Saddle c₀ = (0, 0, −(ρ+σ)) on the invariant axis.
    pub fn c0(&self) -> State {
        [0.0, 0.0, -self.shift()]
    }
}

/// Additive forcing perturbation of the shifted field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Perturbation {
    /// The unperturbed field.
    None,
    /// (0, 0, −εβ(ρ+σ)): scales the constant forcing, keeps R-symmetry.
    AxialForcing { epsilon: f64 },
    /// (ε cos θ, ε sin θ, 0): breaks the R-symmetry for ε > 0.
    PlanarForcing { epsilon: f64, theta: f64 },
}

impl Perturbation {
    pub fn term(&self, p: &FlowParams) -> State {
        match *self {
            Perturbation::None => [0.0, 0.0, 0.0],
            Perturbation::AxialForcing { epsilon } => [0.0, 0.0, -epsilon * p.beta * p.shift()],
            Perturbation::PlanarForcing { epsilon, theta } => {
                [epsilon * theta.cos(), epsilon * theta.sin(), 0.0]
            }
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Perturbation::None)
    }
}

/// The involution R(u) = (−u₁, −u₂, u₃). The unperturbed field is
/// equivariant under R; planar forcing breaks this.
pub fn involution(u: State) -> State {
    [-u[0], -u[1], u[2]]
}

/// Casimir function C(u) = ‖u‖².
pub fn casimir(u: State) -> f64 {
    u[0] * u[0] + u[1] * u[1] + u[2] * u[2]
}

/// Rigid-body Hamiltonian H(u) = ½ u·Ωu + h·u with Ω = diag(2,1,1),
/// h = (0,0,−σ).
pub fn hamiltonian(p: &FlowParams, u: State) -> f64 {
    0.5 * (2.0 * u[0] * u[0] + u[1] * u[1] + u[2] * u[2]) - p.sigma * u[2]
}

/// Divergence-free Hamiltonian part v(u) = ∇H × u.
pub fn hamiltonian_part(p: &FlowParams, u: State) -> State {
    // ∇H = (2u₁, u₂, u₃ − σ)
    [
        p.sigma * u[1],
        -u[0] * u[2] - p.sigma * u[0],
        u[0] * u[1],
    ]
}

/// Gradient part w(u) = Λu − f = ∇K, K = ½u·Λu − f·u.
pub fn gradient_part(p: &FlowParams, u: State) -> State {
    [
        p.sigma * u[0],
        u[1],
        p.beta * u[2] + p.beta * p.shift(),
    ]
}

/// The full shifted field u̇ = v(u) − w(u) + perturbation, assembled from
/// the decomposition so the identity v − w = u̇ holds exactly.
pub fn field(p: &FlowParams, pert: &Perturbation, u: State) -> State {
    let v = hamiltonian_part(p, u);
    let w = gradient_part(p, u);
    let g = pert.term(p);
    [v[0] - w[0] + g[0], v[1] - w[1] + g[1], v[2] - w[2] + g[2]]
}

/// Validated wrapper around [`field`]: rejects non-finite input.
pub fn shifted_field(p: &FlowParams, pert: &Perturbation, u: State) -> Result<State, FlowError> {
    if u.iter().all(|c| c.is_finite()) {
        Ok(field(p, pert, u))
    } else {
        Err(FlowError::NonFiniteInput(u))
    }
}

/// dC/dt along the unperturbed flow: −2[E(u) − β(ρ+σ)²/4] with
/// E(u) = σu₁² + u₂² + β(u₃ + (ρ+σ)/2)².
pub fn casimir_rate(p: &FlowParams, u: State) -> f64 {
    let half = 0.5 * p.shift();
    let e = p.sigma * u[0] * u[0] + u[1] * u[1] + p.beta * (u[2] + half) * (u[2] + half);
    -2.0 * (e - p.beta * p.shift() * p.shift() / 4.0)
}

/// d²C/dt² along the unperturbed flow, as the closed quartic in u with
/// z = u₃ + (ρ+σ)/2.
pub fn casimir_rate2(p: &FlowParams, u: State) -> f64 {
    let half = 0.5 * p.shift();
    let z = u[2] + half;
    let s = p.sigma;
    let cross = s * (s - 1.0) + (p.beta - 1.0) * z + half;
    4.0 * (s * s * u[0] * u[0] + u[1] * u[1] - cross * u[0] * u[1]
        + p.beta * p.beta * z * z
        + p.beta * p.beta * half * z)
}

/// dC/dt along an arbitrary (possibly perturbed) field: 2 u·u̇.
pub fn casimir_rate_of(p: &FlowParams, pert: &Perturbation, u: State) -> f64 {
    let du = field(p, pert, u);
    2.0 * (u[0] * du[0] + u[1] * du[1] + u[2] * du[2])
}

/// d²C/dt² along an arbitrary field: 2(u̇·u̇ + u·ü) with ü = J(u)u̇.
pub fn casimir_rate2_of(p: &FlowParams, pert: &Perturbation, u: State) -> f64 {
    let du = field(p, pert, u);
    // Jacobian of the shifted field (perturbations are constant):
    //   [ -σ     σ    0  ]
    //   [ -u₃-σ  -1   -u₁]
    //   [  u₂    u₁   -β ]
    let ddu = [
        -p.sigma * du[0] + p.sigma * du[1],
        (-u[2] - p.sigma) * du[0] - du[1] - u[0] * du[2],
        u[1] * du[0] + u[0] * du[1] - p.beta * du[2],
    ];
    2.0 * (du[0] * du[0] + du[1] * du[1] + du[2] * du[2]
        + u[0] * ddu[0] + u[1] * ddu[1] + u[2] * ddu[2])
}

/// Eigenvalues (λ₁ ≥ λ₂) of the quadratic form in the d²C/dt² = 0 surface
/// at height z = u₃ + (ρ+σ)/2.
pub fn quadratic_form_eigenvalues(p: &FlowParams, z: f64) -> (f64, f64) {
    let s = p.sigma;
    let half = 0.5 * p.shift();
    let b = half + s * (s - 1.0) + (p.beta - 1.0) * z;
    let disc = ((s * s - 1.0) * (s * s - 1.0) + b * b).sqrt();
    let tr = s * s + 1.0;
    (0.5 * (tr + disc), 0.5 * (tr - disc))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cl() -> FlowParams {
        FlowParams::classical()
    }

    #[test]
    fn params_validated() {
        assert!(FlowParams::new(10.0, 28.0, 8.0 / 3.0).is_ok());
        assert!(FlowParams::new(0.0, 28.0, 1.0).is_err());
        assert!(FlowParams::new(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn fixed_points_are_equilibria() {
        let p = cl();
        for u in [p.c0(), p.c1(), p.c2()] {
            let f = field(&p, &Perturbation::None, u);
            for c in f {
                assert!(c.abs() < 1e-12, "field at fixed point {u:?} = {f:?}");
            }
        }
        // c₁ of the classical set is (√72, √72, −11)
        let c1 = p.c1();
        assert!((c1[0] - 72f64.sqrt()).abs() < 1e-14);
        assert!((c1[2] + 11.0).abs() < 1e-14);
    }

    #[test]
    fn field_hand_evaluation() {
        // direct substitution at (1,0,0): (−σ, −σ, −β(ρ+σ))
        let p = cl();
        let f = field(&p, &Perturbation::None, [1.0, 0.0, 0.0]);
        assert!((f[0] + 10.0).abs() < 1e-12);
        assert!((f[1] + 10.0).abs() < 1e-12);
        assert!((f[2] + 8.0 / 3.0 * 38.0).abs() < 1e-12);
    }

    #[test]
    fn non_finite_input_rejected() {
        let p = cl();
        assert!(shifted_field(&p, &Perturbation::None, [f64::NAN, 0.0, 0.0]).is_err());
        assert!(shifted_field(&p, &Perturbation::None, [0.0, f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn casimir_values() {
        let p = cl();
        assert_eq!(casimir([0.0; 3]), 0.0);
        assert!((casimir(p.c1()) - 265.0).abs() < 1e-12); // 72+72+121
        assert!((casimir(p.c0()) - 1444.0).abs() < 1e-12); // 38²
    }

    #[test]
    fn hamiltonian_values() {
        let p = cl();
        assert_eq!(hamiltonian(&p, [0.0; 3]), 0.0);
        assert!((hamiltonian(&p, p.c1()) - 278.5).abs() < 1e-12);
        assert!((hamiltonian(&p, [0.0, 0.0, 1.0]) + 9.5).abs() < 1e-12);
    }

    #[test]
    fn casimir_rate_vanishes_on_ellipsoid_anchors() {
        let p = cl();
        assert!(casimir_rate(&p, [0.0; 3]).abs() < 1e-10);
        assert!(casimir_rate(&p, p.c0()).abs() < 1e-9);
        assert!(casimir_rate(&p, p.c1()).abs() < 1e-9);
    }

    #[test]
    fn casimir_rate_matches_dot_product_form() {
        let p = cl();
        let mut x = 0.37f64;
        for _ in 0..200 {
            x = (x * 1103.515_245 + 12.345).fract();
            let u = [40.0 * x - 20.0, 30.0 * x.sin(), -40.0 * (1.3 * x).cos()];
            let a = casimir_rate(&p, u);
            let b = casimir_rate_of(&p, &Perturbation::None, u);
            assert!((a - b).abs() < 1e-8 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn casimir_rate2_closed_form_matches_jacobian_route() {
        let p = cl();
        let mut x = 0.11f64;
        for _ in 0..200 {
            x = (x * 69_069.0 + 1.0).fract();
            let u = [30.0 * x - 15.0, 25.0 * (2.0 * x).sin(), -38.0 * x];
            let a = casimir_rate2(&p, u);
            let b = casimir_rate2_of(&p, &Perturbation::None, u);
            assert!(
                (a - b).abs() < 1e-7 * a.abs().max(1.0),
                "closed {a} vs jacobian {b} at {u:?}"
            );
        }
    }

    #[test]
    fn casimir_rate2_anchors() {
        let p = cl();
        // z = 0 plane with u₁ = u₂ = 0
        assert!(casimir_rate2(&p, [0.0, 0.0, -19.0]).abs() < 1e-10);
        // c₀ has z = −19, u₁ = u₂ = 0: z(z + 19) = 0 either way
        assert!(casimir_rate2(&p, p.c0()).abs() < 1e-9);
    }

    #[test]
    fn quadratic_form_eigenvalues_anchors() {
        let p = cl();
        let (l1, l2) = quadratic_form_eigenvalues(&p, 0.0);
        // λ₂(0) = (101 − √(9801 + 109²))/2 ≈ −23.124
        let exact = 0.5 * (101.0 - (9801.0f64 + 109.0 * 109.0).sqrt());
        assert!((l2 - exact).abs() < 1e-12);
        assert!(l2 < 0.0 && (l2 + 23.124).abs() < 5e-3);
        assert!(l1 >= l2);
        // trace identity and positivity of λ₁ over a z-range
        let mut z = -60.0;
        while z <= 60.0 {
            let (a, b) = quadratic_form_eigenvalues(&p, z);
            assert!((a + b - 101.0).abs() < 1e-9);
            assert!(a > 0.0);
            z += 1.5;
        }
    }

    #[test]
    fn involution_properties() {
        let p = cl();
        assert_eq!(involution([0.0, 0.0, 5.0]), [0.0, 0.0, 5.0]);
        assert_eq!(involution(p.c1()), p.c2());
        let u = [1.3, -0.4, 2.2];
        assert_eq!(involution(involution(u)), u);
    }

    #[test]
    fn equivariance_exact_for_symmetric_forcing() {
        let p = cl();
        for pert in [Perturbation::None, Perturbation::AxialForcing { epsilon: 0.37 }] {
            let mut x = 0.5f64;
            for _ in 0..100 {
                x = (x * 9301.0 + 49_297.0).fract();
                let u = [20.0 * x - 10.0, 14.0 * (3.0 * x).sin(), -30.0 * x];
                let lhs = field(&p, &pert, involution(u));
                let rhs = involution(field(&p, &pert, u));
                assert_eq!(lhs, rhs, "pert {pert:?}");
            }
        }
    }

    #[test]
    fn planar_forcing_breaks_equivariance() {
        let p = cl();
        let pert = Perturbation::PlanarForcing { epsilon: 2.5, theta: 70f64.to_radians() };
        let u = [1.0, 2.0, -20.0];
        let lhs = field(&p, &pert, involution(u));
        let rhs = involution(field(&p, &pert, u));
        // the defect is exactly twice the planar term
        let g = pert.term(&p);
        assert!((lhs[0] - rhs[0] - 2.0 * g[0]).abs() < 1e-14);
        assert!((lhs[1] - rhs[1] - 2.0 * g[1]).abs() < 1e-14);
        assert_eq!(lhs[2], rhs[2]);
        assert!((lhs[0] - rhs[0]).abs() > 1.0); // 2ε cos θ ≈ 1.71
    }

    #[test]
    fn decomposition_identity_exact() {
        let p = cl();
        let mut x = 0.2f64;
        for _ in 0..1000 {
            x = (x * 29_573.0 + 117.0).fract();
            let u = [50.0 * x - 25.0, 50.0 * (7.0 * x).fract() - 25.0, -60.0 * (3.0 * x).fract()];
            let v = hamiltonian_part(&p, u);
            let w = gradient_part(&p, u);
            let f = field(&p, &Perturbation::None, u);
            for i in 0..3 {
                assert!((v[i] - w[i] - f[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hamiltonian_part_is_divergence_free() {
        // central differences are exact for the quadratic field components
        let p = cl();
        let h = 1e-4;
        for u in [[1.0, 2.0, 3.0], [-4.0, 0.3, -22.0], [17.0, -9.0, -38.0]] {
            let mut trace = 0.0;
            for i in 0..3 {
                let mut up = u;
                let mut dn = u;
                up[i] += h;
                dn[i] -= h;
                trace += (hamiltonian_part(&p, up)[i] - hamiltonian_part(&p, dn)[i]) / (2.0 * h);
            }
            assert!(trace.abs() < 1e-10, "div v = {trace} at {u:?}");
        }
    }

    #[test]
    fn casimir_conserved_by_hamiltonian_part() {
        let p = cl();
        for u in [[3.0, -1.0, 5.0], [0.5, 0.5, -20.0]] {
            let v = hamiltonian_part(&p, u);
            let dc = 2.0 * (u[0] * v[0] + u[1] * v[1] + u[2] * v[2]);
            assert!(dc.abs() < 1e-10);
        }
    }
}
