//! Auxiliary fields of the limiting problem: the vortex-free field h₀, the
//! field h_μ induced by a vorticity density, the pinned Green function, the
//! limiting energy E_λ and the primal functional it dualizes to.
//!
//! ```text
//! −div((1/p)∇h_μ) + h_μ = μ  in Ω,   h_μ = 1 on ∂Ω,       h₀ := h_{μ=0}
//!
//! E_λ(μ) = (1/λ)∫ p|μ| + ∫ (|∇h_μ|²/p + |h_μ − 1|²)
//! ```
//!
//! Gradient quadratures reuse the assembly's harmonic face weights so that
//! discrete integration by parts — and hence the obstacle/dual equivalence —
//! is exact in floating point up to roundoff.

use crate::elliptic::{assemble, cg_solve, EllipticOperator, SolveStats};
use crate::error::{Error, Result};
use crate::geometry::{Grid2D, GridId, PinningField, Region, ScalarField};

/// Default relative tolerance for the linear solves behind field evaluations.
pub const FIELD_TOL: f64 = 1e-12;

/// Signed vorticity density per interior node; the measure is density·dx, so
/// a cell carries mass density·hx·hy and a unit point mass at node y is the
/// density 1/(hx·hy) concentrated there.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    grid_id: GridId,
    density: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn zero(grid: &Grid2D) -> Self {
        Self { grid_id: grid.id(), density: vec![0.0; grid.n_interior()] }
    }

    pub fn from_density(grid: &Grid2D, density: Vec<f64>) -> Result<Self> {
        if density.len() != grid.n_interior() {
            return Err(Error::GridMismatch(format!(
                "density length {} does not match interior node count {}",
                density.len(),
                grid.n_interior()
            )));
        }
        if let Some(v) = density.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite density value {v}")));
        }
        Ok(Self { grid_id: grid.id(), density })
    }

    pub fn constant(grid: &Grid2D, value: f64) -> Self {
        Self { grid_id: grid.id(), density: vec![value; grid.n_interior()] }
    }

    /// Unit point mass at an interior node.
    pub fn point_mass(grid: &Grid2D, k: usize, charge: f64) -> Self {
        let mut density = vec![0.0; grid.n_interior()];
        density[k] = charge / grid.cell_area();
        Self { grid_id: grid.id(), density }
    }

    pub(crate) fn from_residual(grid_id: GridId, density: Vec<f64>) -> Self {
        Self { grid_id, density }
    }

    pub fn grid_id(&self) -> GridId {
        self.grid_id
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn density_mut(&mut self) -> &mut [f64] {
        &mut self.density
    }

    /// Total variation ‖μ‖ = Σ|density|·h².
    pub fn total_variation(&self, grid: &Grid2D) -> f64 {
        self.density.iter().map(|d| d.abs()).sum::<f64>() * grid.cell_area()
    }

    /// |μ|(S₁) or |μ|(S₂).
    pub fn region_mass(&self, grid: &Grid2D, region: Region) -> f64 {
        let mut m = 0.0;
        for (k, d) in self.density.iter().enumerate() {
            if grid.region(k) == region {
                m += d.abs();
            }
        }
        m * grid.cell_area()
    }

    pub fn min_density(&self) -> f64 {
        self.density.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// μ₁ + μ₂ (same grid).
    pub fn add(&self, other: &DiscreteMeasure) -> Result<DiscreteMeasure> {
        if self.grid_id != other.grid_id {
            return Err(Error::GridMismatch("measures live on different grids".into()));
        }
        let density = self.density.iter().zip(&other.density).map(|(a, b)| a + b).collect();
        Ok(DiscreteMeasure { grid_id: self.grid_id, density })
    }

    pub fn scale(&self, factor: f64) -> DiscreteMeasure {
        DiscreteMeasure {
            grid_id: self.grid_id,
            density: self.density.iter().map(|d| d * factor).collect(),
        }
    }
}

/// One column x ↦ G(x, y) of a discrete Green function.
#[derive(Debug, Clone)]
pub struct GreenColumn {
    /// Interior index of the source node y.
    pub source: usize,
    pub field: ScalarField,
}

/// Operator of the London-type equation: −div((1/p)∇·) + I with Dirichlet
/// data 1 on the staircase boundary.
pub fn london_operator(grid: &Grid2D, p: &PinningField) -> Result<EllipticOperator> {
    assemble(grid, &p.conductivity(grid), |_, _| 1.0)
}

/// Solve for the vortex-free limit field h₀ (μ = 0).
///
/// The maximum principle puts 0 < h₀ < 1 on interior nodes; violated bounds
/// are reported as numeric errors.
pub fn solve_h0(grid: &Grid2D, p: &PinningField) -> Result<ScalarField> {
    let (h, _) = solve_h0_with_stats(grid, p)?;
    Ok(h)
}

pub fn solve_h0_with_stats(grid: &Grid2D, p: &PinningField) -> Result<(ScalarField, SolveStats)> {
    let op = london_operator(grid, p)?;
    let (h, stats) = cg_solve(&op, &ScalarField::zeros(grid), FIELD_TOL)?;
    if h.min() <= 0.0 || h.max() >= 1.0 {
        return Err(Error::Numeric(format!(
            "h0 violates the maximum principle: range [{}, {}]",
            h.min(),
            h.max()
        )));
    }
    Ok((h, stats))
}

/// Solve the London-type equation for a prescribed vorticity density μ.
pub fn solve_hmu(grid: &Grid2D, p: &PinningField, mu: &DiscreteMeasure) -> Result<ScalarField> {
    if mu.grid_id() != grid.id() {
        return Err(Error::GridMismatch("measure lives on a different grid".into()));
    }
    let op = london_operator(grid, p)?;
    let rhs = ScalarField::from_values(grid, mu.density().to_vec())?;
    let (h, _) = cg_solve(&op, &rhs, FIELD_TOL)?;
    Ok(h)
}

/// Column of the Green function of −div(coeff·∇·) + I with zero Dirichlet
/// data: the discrete delta at `source` is the density 1/h².
///
/// `coeff` is the conductivity itself (1/p for the pinned kernel, 1/u_ε² for
/// the finite-width one).
pub fn green_column(grid: &Grid2D, coeff: &ScalarField, source: usize) -> Result<GreenColumn> {
    grid.check_field(coeff)?;
    if source >= grid.n_interior() {
        return Err(Error::Parameter(format!("source node {source} is not interior")));
    }
    let op = assemble(grid, coeff, |_, _| 0.0)?;
    let mut rhs = ScalarField::zeros(grid);
    rhs[source] = 1.0 / grid.cell_area();
    let (g, _) = cg_solve(&op, &rhs, FIELD_TOL)?;
    if g.min() < -1e-9 {
        return Err(Error::Numeric(format!("Green column went negative: min {}", g.min())));
    }
    Ok(GreenColumn { source, field: g })
}

/// ∫ c|∇h|² with assembly-consistent face weights plus the mass term
/// ∫(h − rest)², where `rest` is the far state the field relaxes to (the
/// Dirichlet datum in both energies: 1 for E_λ, 0 for the primal form).
pub(crate) fn quadratic_part(op: &EllipticOperator, h: &ScalarField, rest: f64) -> f64 {
    let grad = op.gradient_energy(h.values());
    let mass: f64 = h.values().iter().map(|v| (v - rest).powi(2)).sum::<f64>() * op.cell_area();
    grad + mass
}

/// The limiting energy
/// E_λ(μ) = (1/λ)∫p|μ| + ∫(|∇h_μ|²/p + |h_μ−1|²), solving for h_μ internally.
pub fn energy_e_lambda(grid: &Grid2D, p: &PinningField, lambda: f64, mu: &DiscreteMeasure) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Parameter(format!("lambda must be positive, got {lambda}")));
    }
    let h = solve_hmu(grid, p, mu)?;
    energy_e_lambda_with_field(grid, p, lambda, mu, &h)
}

/// E_λ when h_μ is already available (e.g. h★ from the obstacle solve, which
/// is h_{μ★} by construction).
pub fn energy_e_lambda_with_field(
    grid: &Grid2D,
    p: &PinningField,
    lambda: f64,
    mu: &DiscreteMeasure,
    h_mu: &ScalarField,
) -> Result<f64> {
    grid.check_field(h_mu)?;
    let op = london_operator(grid, p)?;
    let area = grid.cell_area();
    let pinning_term: f64 = mu
        .density()
        .iter()
        .enumerate()
        .map(|(k, d)| p.value(k) * d.abs())
        .sum::<f64>()
        * area
        / lambda;
    Ok(pinning_term + quadratic_part(&op, h_mu, 1.0))
}

/// The convex functional whose minimizer generates μ★:
///
/// ```text
/// Φ_λ(h) = ∫ (p/λ)|−div((1/p)∇h) + h + 1| + |∇h|²/p + |h|²,   h ∈ H₀¹.
/// ```
///
/// The measure term is evaluated nodewise as |A·h + 1|·h²; with h = h_μ − 1
/// the argument reproduces the density μ exactly at the discrete level.
pub fn primal_functional(grid: &Grid2D, p: &PinningField, lambda: f64, h: &ScalarField) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Parameter(format!("lambda must be positive, got {lambda}")));
    }
    grid.check_field(h)?;
    let op = assemble(grid, &p.conductivity(grid), |_, _| 0.0)?;
    let mut ah = vec![0.0; op.n()];
    op.apply(h.values(), &mut ah);
    let area = grid.cell_area();
    let measure_term: f64 = (0..op.n())
        .map(|k| p.value(k) / lambda * (ah[k] + 1.0).abs())
        .sum::<f64>()
        * area;
    Ok(measure_term + quadratic_part(&op, h, 0.0))
}
