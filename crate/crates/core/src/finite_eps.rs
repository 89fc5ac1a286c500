//! Finite-width verification track: the positive boundary-layer minimizer
//! u_ε of the scalar energy
//!
//! ```text
//! G_ε(u) = ∫ (|∇u|² + (1/2ε²)(p − u²)²),     u ∈ H¹(Ω)  (natural BC)
//! ```
//!
//! together with its decay fit away from ∂S₁, the 1/ε energy scaling, and
//! the convergence of the u_ε-weighted Green function to the pinned one.
//!
//! The minimizer is computed by damped Newton on the discrete Euler-Lagrange
//! system 2L·u = (2h²/ε²)(p − u²)u (L the zero-flux stiffness), starting from
//! √p smoothed by one Jacobi pass, with an explicit gradient-flow fallback.
//! The discrete energy uses face differences and the product weight
//! u_P·u_Q on faces of the reduced (weighted) energy, which makes the
//! splitting identity G_ε(u_ε·φ) = G_ε(u_ε) + F_ε(φ) exact at the discrete
//! stationary point.

use serde::Serialize;

use crate::elliptic::{assemble_with, cg_solve, BoundaryKind, EllipticOperator, SolveStats};
use crate::error::{Error, Result};
use crate::fields::{green_column, GreenColumn};
use crate::geometry::{Grid2D, PinningField, ScalarField};

/// Converged boundary-layer minimizer at width ε.
#[derive(Debug, Clone)]
pub struct UEpsSolution {
    pub epsilon: f64,
    pub u: ScalarField,
    /// Value of the discrete zero-field energy G_ε(u).
    pub energy: f64,
    pub stats: SolveStats,
    /// Strict bounds min(1,√a) < u < max(1,√a) verified nodewise.
    pub bounds_ok: bool,
}

/// Discrete G_ε: Σ_faces (Δu)²·(area/h²) + Σ (h²/2ε²)(p − u²)², zero-flux
/// closure (boundary faces absent).
pub fn gl_energy(grid: &Grid2D, p: &PinningField, epsilon: f64, u: &ScalarField) -> f64 {
    let (hx, hy) = grid.spacing();
    let area = grid.cell_area();
    let wx = area / (hx * hx);
    let wy = area / (hy * hy);
    let mut e = 0.0;
    for k in 0..grid.n_interior() {
        for (d, w) in [(1usize, wx), (3, wy)] {
            let q = grid.neighbors()[k][d];
            if q >= 0 {
                let du = u[k] - u[q as usize];
                e += w * du * du;
            }
        }
        let dev = p.value(k) - u[k] * u[k];
        e += area / (2.0 * epsilon * epsilon) * dev * dev;
    }
    e
}

/// Reduced (weighted) energy of a normalized density φ against a background
/// u: Σ_faces u_P·u_Q (Δφ)² + Σ (h²/2ε²) u⁴ (1−φ²)². The face weight is the
/// product of the endpoint values, the choice under which the discrete
/// splitting identity holds exactly.
pub fn reduced_energy(grid: &Grid2D, u: &ScalarField, epsilon: f64, phi: &ScalarField) -> f64 {
    let (hx, hy) = grid.spacing();
    let area = grid.cell_area();
    let wx = area / (hx * hx);
    let wy = area / (hy * hy);
    let mut e = 0.0;
    for k in 0..grid.n_interior() {
        for (d, w) in [(1usize, wx), (3, wy)] {
            let q = grid.neighbors()[k][d];
            if q >= 0 {
                let q = q as usize;
                let dphi = phi[k] - phi[q];
                e += w * u[k] * u[q] * dphi * dphi;
            }
        }
        let u2 = u[k] * u[k];
        let one_minus = 1.0 - phi[k] * phi[k];
        e += area / (2.0 * epsilon * epsilon) * u2 * u2 * one_minus * one_minus;
    }
    e
}

/// Euler-Lagrange residual in operator units:
/// F(u) = −Δu − (1/ε²)(p − u²)·u, zero-flux Laplacian. The energy gradient
/// is 2·h²·F, so F = 0 characterizes stationary points of G_ε.
fn el_residual(stiff: &EllipticOperator, p: &PinningField, epsilon: f64, u: &[f64], out: &mut [f64]) {
    stiff.apply(u, out);
    let inv_eps2 = 1.0 / (epsilon * epsilon);
    for k in 0..u.len() {
        out[k] -= inv_eps2 * (p.value(k) - u[k] * u[k]) * u[k];
    }
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Minimize G_ε over H¹ (no boundary condition).
///
/// Preconditions: ε ∈ (0, 1] and h ≤ ε/2 so the layer is resolved; coarser
/// grids are rejected with a resolution error.
pub fn solve_ueps(grid: &Grid2D, p: &PinningField, epsilon: f64) -> Result<UEpsSolution> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Parameter(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    let (hx, hy) = grid.spacing();
    let h = hx.max(hy);
    if h > epsilon / 2.0 {
        return Err(Error::Resolution(format!(
            "grid spacing {h:.4} exceeds ε/2 = {:.4}; the boundary layer is unresolved",
            epsilon / 2.0
        )));
    }

    // u⁰ = √p with one Jacobi smoothing pass
    let mut u: Vec<f64> = (0..grid.n_interior()).map(|k| p.value(k).sqrt()).collect();
    let smoothed: Vec<f64> = (0..grid.n_interior())
        .map(|k| {
            let mut acc = u[k];
            let mut count = 1.0;
            for d in 0..4 {
                let q = grid.neighbors()[k][d];
                if q >= 0 {
                    acc += u[q as usize];
                    count += 1.0;
                }
            }
            acc / count
        })
        .collect();
    u = smoothed;

    // zero-flux stiffness of −Δ (unit conductivity, negligible mass)
    let ones = ScalarField::constant(grid, 1.0);
    let stiff = assemble_with(grid, &ones, 1e-300, BoundaryKind::Neumann)?;

    let n = grid.n_interior();
    let inv_eps2 = 1.0 / (epsilon * epsilon);
    // residual floor well above the roundoff of the stiffness apply
    let tol = 1e-13 * (4.0 / (hx * hx).min(hy * hy) + p.a().max(1.0) * inv_eps2);
    let mut res = vec![0.0; n];
    let mut newton_iters = 0usize;

    let max_newton = 60;
    let mut energy = gl_energy(grid, p, epsilon, &ScalarField::from_values(grid, u.clone())?);
    loop {
        el_residual(&stiff, p, epsilon, &u, &mut res);
        let rnorm = norm_inf(&res);
        if rnorm <= tol {
            break;
        }
        if newton_iters >= max_newton {
            return Err(Error::Numeric(format!(
                "Newton stalled after {newton_iters} iterations (residual {rnorm:.3e})"
            )));
        }
        newton_iters += 1;

        // Jacobian −Δ + (1/ε²)·diag(3u² − p); positive near the minimizer
        // (3u² − p → 2p), floored away from it to stay SPD for CG
        let jdiag: Vec<f64> = (0..n)
            .map(|k| {
                let curv = inv_eps2 * (3.0 * u[k] * u[k] - p.value(k));
                stiff.diag()[k] + curv.max(0.1 * inv_eps2 * p.value(k))
            })
            .collect();
        let mut jac = stiff.clone();
        jac.set_diag(jdiag);

        let rhs = ScalarField::from_values(grid, res.iter().map(|g| -g).collect())?;
        let (step, _) = cg_solve(&jac, &rhs, 1e-10)?;

        // backtracking on the energy, keeping the iterate positive
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = (0..n).map(|k| u[k] + t * step[k]).collect();
            if trial.iter().all(|v| *v > 0.0) {
                let e_trial = gl_energy(grid, p, epsilon, &ScalarField::new_unchecked(grid.id(), trial.clone()));
                if e_trial <= energy + 1e-12 * energy.abs().max(1.0) {
                    u = trial;
                    energy = e_trial;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            // gradient-flow fallback: explicit steps under the diffusive and
            // reactive stability bounds
            let dt = ((hx * hx).min(hy * hy) / 5.0).min(epsilon * epsilon / (5.0 * p.a().max(1.0)));
            for _ in 0..200 {
                el_residual(&stiff, p, epsilon, &u, &mut res);
                for k in 0..n {
                    u[k] -= dt * res[k];
                }
            }
            energy = gl_energy(grid, p, epsilon, &ScalarField::new_unchecked(grid.id(), u.clone()))
        }
    }

    let u = ScalarField::from_values(grid, u)?;
    u.validate_finite()?;
    let sqrt_a = p.a().sqrt();
    let (lo, hi) = (sqrt_a.min(1.0), sqrt_a.max(1.0));
    let degenerate = p.a() == 1.0;
    let bounds_ok = if degenerate {
        // p ≡ 1: the minimizer is exactly u ≡ 1
        u.values().iter().all(|v| (v - 1.0).abs() < 1e-9)
    } else {
        u.min() > lo && u.max() < hi && u.min() > 0.0
    };
    Ok(UEpsSolution {
        epsilon,
        u,
        energy,
        stats: SolveStats { iterations: newton_iters, residual: norm_inf(&res), omega: 1.0 },
        bounds_ok,
    })
}

/// Exponential decay fit of |√p − u| against dist(x, ∂S₁)/ε over the band
/// dist ∈ [2ε, 6ε]: least squares on the log gives the rate −δ̂ and r².
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayFit {
    pub delta_hat: f64,
    pub r2: f64,
    pub nodes: usize,
}

pub fn decay_fit(grid: &Grid2D, p: &PinningField, sol: &UEpsSolution) -> Result<DecayFit> {
    let eps = sol.epsilon;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in 0..grid.n_interior() {
        let dist = grid.interface_distance(k);
        if dist < 2.0 * eps || dist > 6.0 * eps {
            continue;
        }
        let dev = (p.value(k).sqrt() - sol.u[k]).abs();
        if dev > 1e-12 {
            xs.push(dist / eps);
            ys.push(dev.ln());
        }
    }
    if xs.len() < 30 {
        return Err(Error::Resolution(format!(
            "only {} nodes in the decay band [2ε, 6ε]; refine the grid or lower ε",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(DecayFit { delta_hat: -slope, r2, nodes: xs.len() })
}

/// Comparison of the u_ε-weighted Green function against the pinned limit at
/// a fixed source, probed away from the diagonal.
#[derive(Debug, Clone, Serialize)]
pub struct GreenComparison {
    pub source: usize,
    /// sup over probes of |G_ε − G₀|.
    pub sup_diff: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GreenConvergenceReport {
    pub epsilon: f64,
    pub comparisons: Vec<GreenComparison>,
    /// max of sup_diff over sources.
    pub worst: f64,
}

/// For each source, solve the Green column with conductivity 1/u_ε² and with
/// 1/p, and record the sup difference over the probe nodes. Probes closer
/// than 0.2 to their source are rejected.
pub fn green_eps_convergence(
    grid: &Grid2D,
    p: &PinningField,
    sol: &UEpsSolution,
    sources: &[usize],
    probes: &[usize],
) -> Result<GreenConvergenceReport> {
    let coeff_eps = ScalarField::from_values(
        grid,
        sol.u.values().iter().map(|u| 1.0 / (u * u)).collect(),
    )?;
    let coeff_pin = p.conductivity(grid);
    let mut comparisons = Vec::with_capacity(sources.len());
    let mut worst = 0.0f64;
    for &src in sources {
        let (sx, sy) = grid.position(src);
        for &probe in probes {
            let (px, py) = grid.position(probe);
            if (px - sx).hypot(py - sy) < 0.2 {
                return Err(Error::Parameter(format!(
                    "probe {probe} is closer than 0.2 to source {src}"
                )));
            }
        }
        let g_eps: GreenColumn = green_column(grid, &coeff_eps, src)?;
        let g_pin: GreenColumn = green_column(grid, &coeff_pin, src)?;
        let mut sup = 0.0f64;
        for &probe in probes {
            sup = sup.max((g_eps.field[probe] - g_pin.field[probe]).abs());
        }
        worst = worst.max(sup);
        comparisons.push(GreenComparison { source: src, sup_diff: sup });
    }
    Ok(GreenConvergenceReport { epsilon: sol.epsilon, comparisons, worst })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, DomainSpec};
    use crate::pinning_field;
    use crate::util::SplitMix64;

    fn setup(a: f64, n: usize) -> (Grid2D, PinningField) {
        let spec = if a == 1.0 {
            DomainSpec::disc(0.5, a, n, n).with_degenerate_allowed()
        } else {
            DomainSpec::disc(0.5, a, n, n)
        };
        let grid = build_grid(&spec).unwrap();
        let p = pinning_field(&grid, a).unwrap();
        (grid, p)
    }

    #[test]
    fn degenerate_pinning_gives_flat_state() {
        let (grid, p) = setup(1.0, 32);
        let sol = solve_ueps(&grid, &p, 0.2).unwrap();
        assert!(sol.bounds_ok);
        assert!(sol.energy.abs() < 1e-18, "energy {}", sol.energy);
        for v in sol.u.values() {
            assert!((v - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn bounds_hold_strictly() {
        let (grid, p) = setup(0.5, 128);
        let sol = solve_ueps(&grid, &p, 0.05).unwrap();
        assert!(sol.bounds_ok);
        let s = 0.5f64.sqrt();
        assert!(sol.u.min() > s && sol.u.max() < 1.0, "range [{}, {}]", sol.u.min(), sol.u.max());
    }

    #[test]
    fn unresolved_layer_is_rejected() {
        let (grid, p) = setup(0.5, 32);
        // h = 2/32 = 0.0625 > ε/2
        assert!(matches!(solve_ueps(&grid, &p, 0.1), Err(Error::Resolution(_))));
    }

    #[test]
    fn energy_scales_inversely_with_epsilon() {
        let (g1, p1) = setup(0.5, 64);
        let (g2, p2) = setup(0.5, 128);
        let s1 = solve_ueps(&g1, &p1, 0.1).unwrap();
        let s2 = solve_ueps(&g2, &p2, 0.05).unwrap();
        let ratio = s2.energy / s1.energy;
        assert!((ratio - 2.0).abs() < 0.2, "energy ratio {ratio} for ε halved");
    }

    #[test]
    fn decay_rate_positive_and_stable() {
        let (g1, p1) = setup(0.5, 64);
        let (g2, p2) = setup(0.5, 128);
        let f1 = decay_fit(&g1, &p1, &solve_ueps(&g1, &p1, 0.08).unwrap()).unwrap();
        let f2 = decay_fit(&g2, &p2, &solve_ueps(&g2, &p2, 0.04).unwrap()).unwrap();
        assert!(f1.delta_hat > 0.0 && f2.delta_hat > 0.0);
        let rel = (f1.delta_hat - f2.delta_hat).abs() / f2.delta_hat;
        assert!(rel < 0.2, "δ̂ drifted by {rel}: {} vs {}", f1.delta_hat, f2.delta_hat);
        // the band mixes the two regional rates (√2 inside, √(2a) outside),
        // so r² sits well below 1 even for a clean exponential per region
        assert!(f2.r2 > 0.7, "poor fit r² = {}", f2.r2);
    }

    #[test]
    fn far_field_deviation_is_exponentially_small() {
        // the deviation |√p − u| collapses several decades past 8ε; the
        // measured bound at a = 0.5 is ~e⁻⁸ of the peak
        let (grid, p) = setup(0.5, 128);
        let sol = solve_ueps(&grid, &p, 0.04).unwrap();
        let mut peak = 0.0f64;
        let mut far = 0.0f64;
        for k in 0..grid.n_interior() {
            let dev = (p.value(k).sqrt() - sol.u[k]).abs();
            peak = peak.max(dev);
            if grid.interface_distance(k) > 8.0 * sol.epsilon {
                far = far.max(dev);
            }
        }
        assert!(far <= 1e-3 * peak, "far-field deviation {far} vs peak {peak}");
    }

    #[test]
    fn splitting_identity_at_stationary_point() {
        let (grid, p) = setup(0.5, 64);
        let sol = solve_ueps(&grid, &p, 0.1).unwrap();
        let c0 = sol.energy;
        let mut rng = SplitMix64::new(42);
        let mut phis = vec![
            ScalarField::constant(&grid, 1.0),
            ScalarField::from_fn(&grid, |x, y| (2.0 * x).cos() * (3.0 * y).sin()),
        ];
        phis.push(ScalarField::from_fn(&grid, |_, _| rng.range(-1.0, 1.0)));
        for phi in &phis {
            assert!(phi.values().iter().all(|v| v.abs() <= 1.0));
            let scaled = ScalarField::from_values(
                &grid,
                (0..grid.n_interior()).map(|k| sol.u[k] * phi[k]).collect(),
            )
            .unwrap();
            let lhs = gl_energy(&grid, &p, sol.epsilon, &scaled);
            let rhs = c0 + reduced_energy(&grid, &sol.u, sol.epsilon, phi);
            assert!(
                (lhs - rhs).abs() <= 1e-6 * c0.max(1.0),
                "splitting defect {} (C0 = {c0})",
                lhs - rhs
            );
        }
    }

    #[test]
    fn u_squared_converges_to_pinning_in_l2() {
        let (g1, p1) = setup(0.5, 64);
        let (g2, p2) = setup(0.5, 128);
        let l2 = |grid: &Grid2D, p: &PinningField, sol: &UEpsSolution| {
            let mut s = 0.0;
            for k in 0..grid.n_interior() {
                s += (sol.u[k] * sol.u[k] - p.value(k)).powi(2) * grid.cell_area();
            }
            s.sqrt()
        };
        let d1 = l2(&g1, &p1, &solve_ueps(&g1, &p1, 0.1).unwrap());
        let d2 = l2(&g2, &p2, &solve_ueps(&g2, &p2, 0.05).unwrap());
        assert!(d2 < d1, "‖u² − p‖ should shrink with ε: {d1} vs {d2}");
    }

    #[test]
    fn green_functions_converge_under_epsilon() {
        let (grid, p) = setup(0.5, 96);
        let src = grid.interior_index_at(0.0, 0.0).unwrap();
        let probes: Vec<usize> = (0..grid.n_interior())
            .filter(|&k| {
                let (x, y) = grid.position(k);
                x.hypot(y) >= 0.3 && x.hypot(y) <= 0.8
            })
            .collect();
        let mut worsts = Vec::new();
        for eps in [0.16, 0.08] {
            let sol = solve_ueps(&grid, &p, eps).unwrap();
            let report = green_eps_convergence(&grid, &p, &sol, &[src], &probes).unwrap();
            worsts.push(report.worst);
        }
        assert!(worsts[1] <= worsts[0] * 1.1, "no decrease: {worsts:?}");
    }

    #[test]
    fn probes_too_close_are_rejected() {
        let (grid, p) = setup(0.5, 64);
        let sol = solve_ueps(&grid, &p, 0.1).unwrap();
        let src = grid.interior_index_at(0.0, 0.0).unwrap();
        let near = grid.interior_index_at(0.05, 0.0).unwrap();
        assert!(green_eps_convergence(&grid, &p, &sol, &[src], &[near]).is_err());
    }
}
