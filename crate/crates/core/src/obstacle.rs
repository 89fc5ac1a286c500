//! The limiting minimization: obstacle problem for h★, the box-constrained
//! dual for v★, extraction of the limiting vorticity μ★ and its coincidence
//! sets, critical field thresholds, λ-sweeps, and a direct minimality probe.
//!
//! Three equivalent formulations are wired to the same discrete operator:
//!
//! ```text
//! h★ = argmin ∫(|∇f|²/p + |f|²),   f = 1 on ∂Ω,  f ≥ 1 − p/(2λ)      (obstacle)
//! v★ = argmin ∫(|∇v|²/p + |v|² + 2v),  v ∈ H₀¹,  |v| ≤ p/(2λ)        (dual box)
//! μ★ = −div((1/p)∇h★) + h★ = (1 − p/(2λ)) 𝟙_{w_λ}
//! ```
//!
//! Finite-dimensional convex duality makes v★ = h★ − 1 exact at the discrete
//! level, so the two solvers must agree to solver tolerance — a strong
//! internal consistency check. μ★ is read off as the residual of the
//! unconstrained equation, which is supported on the coincidence set
//! w_λ = w¹ ∪ w² where h★ sits on the obstacle.

use serde::Serialize;

use crate::elliptic::{psor_solve, psor_solve_observed, EllipticOperator, SolveStats};
use crate::error::{Error, Result};
use crate::fields::{energy_e_lambda_with_field, london_operator, DiscreteMeasure};
use crate::geometry::{Grid2D, PinningField, Region, ScalarField};

/// Default PSOR relaxation parameter.
pub const DEFAULT_OMEGA: f64 = 1.5;
/// Default absolute complementarity tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Active-set detection threshold: PSOR lands exactly on the bound at active
/// nodes, the tolerance only guards rounding.
pub fn coincidence_tol(psi: &ScalarField) -> f64 {
    1e-6 * (1.0 + psi.norm_inf())
}

/// Solution bundle for one applied-field ratio λ.
#[derive(Debug, Clone)]
pub struct ObstacleSolution {
    pub lambda: f64,
    pub h_star: ScalarField,
    pub mu_star: DiscreteMeasure,
    /// Coincidence mask on S₁ nodes.
    pub w1: Vec<bool>,
    /// Coincidence mask on S₂ nodes.
    pub w2: Vec<bool>,
    pub stats: SolveStats,
}

impl ObstacleSolution {
    pub fn w1_cells(&self) -> usize {
        self.w1.iter().filter(|b| **b).count()
    }

    pub fn w2_cells(&self) -> usize {
        self.w2.iter().filter(|b| **b).count()
    }

    /// Nodes in either coincidence set.
    pub fn coincidence_cells(&self) -> usize {
        self.w1_cells() + self.w2_cells()
    }
}

/// Critical field ratios: vortices appear in S_i above λ_i, anywhere above
/// λ₀ = min(λ₁, λ₂).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CriticalLambdas {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda0: f64,
}

/// The obstacle ψ = 1 − p/(2λ).
pub fn obstacle_field(grid: &Grid2D, p: &PinningField, lambda: f64) -> ScalarField {
    let mut psi = ScalarField::zeros(grid);
    for k in 0..grid.n_interior() {
        psi[k] = 1.0 - p.value(k) / (2.0 * lambda);
    }
    psi
}

/// Solve the obstacle problem at ratio λ with defaults.
pub fn solve_obstacle(grid: &Grid2D, p: &PinningField, lambda: f64) -> Result<ObstacleSolution> {
    solve_obstacle_warm(grid, p, lambda, None, DEFAULT_OMEGA, DEFAULT_TOL)
}

/// Obstacle solve with explicit PSOR controls and an optional warm start
/// (the previous λ's h★ in a sweep). Warm starting must not change the
/// converged answer beyond tolerance; it only saves sweeps.
pub fn solve_obstacle_warm(
    grid: &Grid2D,
    p: &PinningField,
    lambda: f64,
    warm: Option<&ScalarField>,
    omega: f64,
    tol: f64,
) -> Result<ObstacleSolution> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Parameter(format!("lambda must be positive, got {lambda}")));
    }
    let op = london_operator(grid, p)?;
    let psi = obstacle_field(grid, p, lambda);
    let rhs = ScalarField::zeros(grid);
    let ones = ScalarField::constant(grid, 1.0);
    let start = warm.unwrap_or(&ones);
    let (h_star, stats) =
        psor_solve_observed(&op, &rhs, Some(&psi), None, omega, tol, Some(start), |_| {})?;
    Ok(extract_solution(grid, &op, lambda, &psi, h_star, stats))
}

fn extract_solution(
    grid: &Grid2D,
    op: &EllipticOperator,
    lambda: f64,
    psi: &ScalarField,
    h_star: ScalarField,
    stats: SolveStats,
) -> ObstacleSolution {
    // μ★ is the residual of the unconstrained equation: A·h★ − lift.
    let mut density = vec![0.0; op.n()];
    op.apply(h_star.values(), &mut density);
    for (d, l) in density.iter_mut().zip(op.lift()) {
        *d -= l;
    }
    let mu_star = DiscreteMeasure::from_residual(grid.id(), density);

    let ctol = coincidence_tol(psi);
    let mut w1 = vec![false; grid.n_interior()];
    let mut w2 = vec![false; grid.n_interior()];
    for k in 0..grid.n_interior() {
        if h_star[k] - psi[k] <= ctol {
            match grid.region(k) {
                Region::S1 => w1[k] = true,
                Region::S2 => w2[k] = true,
                Region::Exterior => unreachable!(),
            }
        }
    }
    ObstacleSolution { lambda, h_star, mu_star, w1, w2, stats }
}

/// Solve the box-constrained dual: minimize ∫(|∇v|²/p + |v|² + 2v) over
/// v ∈ H₀¹ with |v| ≤ p/(2λ). The linear term folds into the right-hand side
/// as −1.
pub fn solve_dual(grid: &Grid2D, p: &PinningField, lambda: f64) -> Result<ScalarField> {
    solve_dual_with(grid, p, lambda, DEFAULT_OMEGA, DEFAULT_TOL).map(|(v, _)| v)
}

pub fn solve_dual_with(
    grid: &Grid2D,
    p: &PinningField,
    lambda: f64,
    omega: f64,
    tol: f64,
) -> Result<(ScalarField, SolveStats)> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Parameter(format!("lambda must be positive, got {lambda}")));
    }
    let op = crate::elliptic::assemble(grid, &p.conductivity(grid), |_, _| 0.0)?;
    let mut bound = ScalarField::zeros(grid);
    for k in 0..grid.n_interior() {
        bound[k] = p.value(k) / (2.0 * lambda);
    }
    let lower = ScalarField::from_values(grid, bound.values().iter().map(|b| -b).collect())?;
    let rhs = ScalarField::constant(grid, -1.0);
    psor_solve(&op, &rhs, Some(&lower), Some(&bound), omega, tol)
}

/// Critical thresholds λ_i = 1 / (2 max_{S̄_i} (1 − h₀)/p).
///
/// Each closure maximum is taken over that region's own tagged nodes,
/// explicitly keeping the rings adjacent to ∂S₁ on both sides — the staircase
/// representation of the closure. Evaluating opposite-tag neighbors instead
/// would import the other region's O(h) interface error scaled by 1/p, which
/// destroys λ₂ for small a (the inner gradient of h₀ is 1/a times the outer
/// one across the transmission interface).
pub fn critical_lambdas(grid: &Grid2D, p: &PinningField, h0: &ScalarField) -> Result<CriticalLambdas> {
    grid.check_field(h0)?;
    if grid.n_region(Region::S1) == 0 || grid.n_region(Region::S2) == 0 {
        return Err(Error::Geometry("critical thresholds need both regions populated".into()));
    }
    let mut max1 = f64::NEG_INFINITY; // over S̄₁ with p = 1
    let mut max2 = f64::NEG_INFINITY; // over S̄₂ with p = a
    for k in 0..grid.n_interior() {
        let deficit = 1.0 - h0[k];
        match grid.region(k) {
            Region::S1 => max1 = max1.max(deficit),
            Region::S2 => max2 = max2.max(deficit / p.a()),
            Region::Exterior => unreachable!(),
        }
    }
    let lambda1 = 1.0 / (2.0 * max1);
    let lambda2 = 1.0 / (2.0 * max2);
    Ok(CriticalLambdas { lambda1, lambda2, lambda0: lambda1.min(lambda2) })
}

/// Per-λ summary row of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct LambdaSummary {
    pub lambda: f64,
    /// ‖μ★‖ (total variation).
    pub mu_mass: f64,
    pub w1_cells: usize,
    pub w2_cells: usize,
    pub e_lambda: f64,
    pub iterations: usize,
}

/// Sweep report: per-λ summaries plus the monotonicity audit of the
/// coincidence sets (w_λ grows with λ).
#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub rows: Vec<LambdaSummary>,
    /// Cells that left the coincidence set between consecutive λ's, beyond
    /// detection-tolerance reclassification. Zero for a clean sweep.
    pub nesting_violations: usize,
    /// Set when a member solve failed: the sweep aborted there and the rows
    /// are partial.
    pub aborted: Option<String>,
}

impl SweepReport {
    pub fn is_complete(&self) -> bool {
        self.aborted.is_none()
    }
}

/// Solve a sorted ascending λ list, warm-starting each solve from the
/// previous h★. A failed member solve aborts the sweep; the partial rows are
/// returned with the abort reason flagged in the report.
pub fn sweep_lambda(grid: &Grid2D, p: &PinningField, lambdas: &[f64]) -> Result<(SweepReport, Vec<ObstacleSolution>)> {
    if lambdas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter("lambda list must be sorted strictly ascending".into()));
    }
    let mut rows = Vec::with_capacity(lambdas.len());
    let mut solutions: Vec<ObstacleSolution> = Vec::with_capacity(lambdas.len());
    let mut nesting_violations = 0usize;
    let mut aborted = None;
    for &lambda in lambdas {
        let warm = solutions.last().map(|s| &s.h_star);
        let sol = match solve_obstacle_warm(grid, p, lambda, warm, DEFAULT_OMEGA, DEFAULT_TOL) {
            Ok(sol) => sol,
            Err(e) => {
                aborted = Some(format!("solve at lambda = {lambda} failed: {e}"));
                break;
            }
        };
        let e = energy_e_lambda_with_field(grid, p, lambda, &sol.mu_star, &sol.h_star)?;
        if let Some(prev) = solutions.last() {
            for k in 0..grid.n_interior() {
                let was = prev.w1[k] || prev.w2[k];
                let is = sol.w1[k] || sol.w2[k];
                if was && !is {
                    nesting_violations += 1;
                }
            }
        }
        rows.push(LambdaSummary {
            lambda,
            mu_mass: sol.mu_star.total_variation(grid),
            w1_cells: sol.w1_cells(),
            w2_cells: sol.w2_cells(),
            e_lambda: e,
            iterations: sol.stats.iterations,
        });
        solutions.push(sol);
    }
    Ok((SweepReport { rows, nesting_violations, aborted }, solutions))
}

/// One trial comparison of the minimality probe.
#[derive(Debug, Clone, Serialize)]
pub struct TrialOutcome {
    pub e_trial: f64,
    /// E_λ(μ_trial) − E_λ(μ★); minimality demands ≥ −slack.
    pub margin: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimalityReport {
    pub e_star: f64,
    pub slack: f64,
    pub trials: Vec<TrialOutcome>,
    pub violations: usize,
}

/// Check E_λ(μ★) ≤ E_λ(μ) + slack against a list of trial measures. The
/// slack combines solver tolerance with a recorded O(h) discretization
/// allowance; in the discrete problem μ★ is the exact minimizer, so the
/// margin is normally positive outright.
pub fn minimality_probe(
    grid: &Grid2D,
    p: &PinningField,
    lambda: f64,
    solution: &ObstacleSolution,
    trials: &[DiscreteMeasure],
) -> Result<MinimalityReport> {
    let e_star = energy_e_lambda_with_field(grid, p, lambda, &solution.mu_star, &solution.h_star)?;
    let (hx, _) = grid.spacing();
    let slack = 10.0 * DEFAULT_TOL * (1.0 + e_star.abs()) + 1e-12 * hx;
    let mut trials_out = Vec::with_capacity(trials.len());
    let mut violations = 0;
    for mu in trials {
        let e_trial = crate::fields::energy_e_lambda(grid, p, lambda, mu)?;
        let margin = e_trial - e_star;
        let violated = margin < -slack;
        if violated {
            violations += 1;
        }
        trials_out.push(TrialOutcome { e_trial, margin, violated });
    }
    Ok(MinimalityReport { e_star, slack, trials: trials_out, violations })
}
