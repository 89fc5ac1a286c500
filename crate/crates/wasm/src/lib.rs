//! Browser demo bindings: three interactive views onto the solver suite.
//!
//! * [`solve_obstacle_demo`] — the obstacle minimizer h★, the limiting
//!   vorticity μ★, and the coincidence masks on the unit disc, as full-lattice
//!   arrays ready for a canvas heatmap (NaN marks exterior cells);
//! * [`radial_demo`] — the explicit radial profile (series + shooting) with
//!   the critical thresholds and the small-a constants;
//! * [`sweep_demo`] — ‖μ★‖ and coincidence-cell counts along a λ sweep for
//!   the phase-diagram plot.
//!
//! Build for the web with `scripts/build-wasm.sh` (wasm-bindgen CLI); the
//! static page lives in `crates/wasm/www`.

use wasm_bindgen::prelude::*;

use vortexpin::fields::solve_h0;
use vortexpin::geometry::Region;
use vortexpin::obstacle::{critical_lambdas, solve_obstacle, sweep_lambda};
use vortexpin::radial::{radial_lambdas, series_coefficients, shoot_ode, small_a_check, RadialParams};
use vortexpin::{build_grid, pinning_field, DomainSpec, Grid2D};

fn build(r: f64, a: f64, nx: usize) -> Result<(Grid2D, vortexpin::PinningField), JsError> {
    let spec = DomainSpec::disc(r, a, nx, nx);
    let grid = build_grid(&spec).map_err(|e| JsError::new(&e.to_string()))?;
    let p = pinning_field(&grid, a).map_err(|e| JsError::new(&e.to_string()))?;
    Ok((grid, p))
}

/// Interior field scattered onto the full nx × ny lattice, NaN outside Ω.
fn scatter(grid: &Grid2D, values: impl Fn(usize) -> f64) -> Vec<f64> {
    let (nx, ny) = grid.dims();
    let mut out = vec![f64::NAN; nx * ny];
    for (k, &node) in grid.interior_nodes().iter().enumerate() {
        out[node] = values(k);
    }
    out
}

/// Obstacle solve packaged for rendering.
#[wasm_bindgen]
pub struct ObstacleDemo {
    nx: usize,
    lambda: f64,
    lambda0: f64,
    lambda1: f64,
    lambda2: f64,
    mu_mass: f64,
    w1_cells: usize,
    w2_cells: usize,
    h_star: Vec<f64>,
    mu_star: Vec<f64>,
    masks: Vec<u8>,
}

#[wasm_bindgen]
impl ObstacleDemo {
    #[wasm_bindgen(getter)]
    pub fn nx(&self) -> usize {
        self.nx
    }

    #[wasm_bindgen(getter)]
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    #[wasm_bindgen(getter)]
    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    #[wasm_bindgen(getter)]
    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    #[wasm_bindgen(getter)]
    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    #[wasm_bindgen(getter)]
    pub fn mu_mass(&self) -> f64 {
        self.mu_mass
    }

    #[wasm_bindgen(getter)]
    pub fn w1_cells(&self) -> usize {
        self.w1_cells
    }

    #[wasm_bindgen(getter)]
    pub fn w2_cells(&self) -> usize {
        self.w2_cells
    }

    /// h★ on the full lattice (row-major, NaN outside Ω).
    #[wasm_bindgen(getter)]
    pub fn h_star(&self) -> Vec<f64> {
        self.h_star.clone()
    }

    /// μ★ density on the full lattice.
    #[wasm_bindgen(getter)]
    pub fn mu_star(&self) -> Vec<f64> {
        self.mu_star.clone()
    }

    /// 0 = free, 1 = coincidence in S₁, 2 = coincidence in S₂, 255 = exterior.
    #[wasm_bindgen(getter)]
    pub fn masks(&self) -> Vec<u8> {
        self.masks.clone()
    }
}

/// Solve the obstacle problem at λ = factor·λ₀ on the unit disc.
#[wasm_bindgen]
pub fn solve_obstacle_demo(r: f64, a: f64, nx: usize, lambda_factor: f64) -> Result<ObstacleDemo, JsError> {
    let (grid, p) = build(r, a, nx)?;
    let h0 = solve_h0(&grid, &p).map_err(|e| JsError::new(&e.to_string()))?;
    let crit = critical_lambdas(&grid, &p, &h0).map_err(|e| JsError::new(&e.to_string()))?;
    let lambda = lambda_factor * crit.lambda0;
    let sol = solve_obstacle(&grid, &p, lambda).map_err(|e| JsError::new(&e.to_string()))?;

    let (nxd, nyd) = grid.dims();
    let mut masks = vec![255u8; nxd * nyd];
    for (k, &node) in grid.interior_nodes().iter().enumerate() {
        masks[node] = if sol.w1[k] {
            1
        } else if sol.w2[k] {
            2
        } else {
            0
        };
    }
    Ok(ObstacleDemo {
        nx: nxd,
        lambda,
        lambda0: crit.lambda0,
        lambda1: crit.lambda1,
        lambda2: crit.lambda2,
        mu_mass: sol.mu_star.total_variation(&grid),
        w1_cells: sol.w1_cells(),
        w2_cells: sol.w2_cells(),
        h_star: scatter(&grid, |k| sol.h_star[k]),
        mu_star: scatter(&grid, |k| sol.mu_star.density()[k]),
        masks,
    })
}

/// Radial profile with both evaluation routes.
#[wasm_bindgen]
pub struct RadialDemo {
    rs: Vec<f64>,
    series: Vec<f64>,
    shooting: Vec<f64>,
    a0: f64,
    alpha: f64,
    beta: f64,
    lambda1: f64,
    lambda2: f64,
    c0: f64,
    holds: bool,
    sup_gap: f64,
}

#[wasm_bindgen]
impl RadialDemo {
    #[wasm_bindgen(getter)]
    pub fn rs(&self) -> Vec<f64> {
        self.rs.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn series(&self) -> Vec<f64> {
        self.series.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn shooting(&self) -> Vec<f64> {
        self.shooting.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn a0(&self) -> f64 {
        self.a0
    }

    #[wasm_bindgen(getter)]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[wasm_bindgen(getter)]
    pub fn beta(&self) -> f64 {
        self.beta
    }

    #[wasm_bindgen(getter)]
    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    #[wasm_bindgen(getter)]
    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    /// Small-a limit of (1 − b₀(a))/a; NaN when R ≤ 1/2.
    #[wasm_bindgen(getter)]
    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// Whether c₀ > 1 − α⁻¹ (vortices pinned in the annulus for small a).
    #[wasm_bindgen(getter)]
    pub fn holds(&self) -> bool {
        self.holds
    }

    #[wasm_bindgen(getter)]
    pub fn sup_gap(&self) -> f64 {
        self.sup_gap
    }
}

#[wasm_bindgen]
pub fn radial_demo(r: f64, a: f64, n_terms: usize, m_shoot: usize) -> Result<RadialDemo, JsError> {
    let params = RadialParams::new(r, a, n_terms.max(8), m_shoot.max(64));
    let profile = shoot_ode(&params).map_err(|e| JsError::new(&e.to_string()))?;
    let crit = radial_lambdas(&params).map_err(|e| JsError::new(&e.to_string()))?;
    // the series route only exists where the center-value sum converges
    let series = series_coefficients(&params).ok();
    let mut series_vals = Vec::with_capacity(profile.rs.len());
    let mut sup_gap = 0.0f64;
    for (r, h) in profile.rs.iter().zip(&profile.hs) {
        match &series {
            Some(s) => {
                let v = s.eval(*r).map(|e| e.value).unwrap_or(f64::NAN);
                sup_gap = sup_gap.max((v - h).abs());
                series_vals.push(v);
            }
            None => series_vals.push(f64::NAN),
        }
    }
    let small = if r > 0.5 { small_a_check(r, params.n_terms).ok() } else { None };
    Ok(RadialDemo {
        rs: profile.rs.clone(),
        series: series_vals,
        shooting: profile.hs.clone(),
        a0: series.as_ref().map_or(f64::NAN, |s| s.a0),
        alpha: series.as_ref().map_or(f64::NAN, |s| s.alpha),
        beta: series.as_ref().map_or(f64::NAN, |s| s.beta),
        lambda1: crit.lambda1,
        lambda2: crit.lambda2,
        c0: small.as_ref().map_or(f64::NAN, |s| s.c0),
        holds: small.as_ref().is_some_and(|s| s.holds),
        sup_gap,
    })
}

/// Phase-diagram data along a λ sweep.
#[wasm_bindgen]
pub struct SweepDemo {
    lambdas: Vec<f64>,
    mu_mass: Vec<f64>,
    w1_cells: Vec<f64>,
    w2_cells: Vec<f64>,
    lambda0: f64,
    nesting_violations: usize,
    s1_cells: f64,
    s2_cells: f64,
}

#[wasm_bindgen]
impl SweepDemo {
    #[wasm_bindgen(getter)]
    pub fn lambdas(&self) -> Vec<f64> {
        self.lambdas.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn mu_mass(&self) -> Vec<f64> {
        self.mu_mass.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn w1_cells(&self) -> Vec<f64> {
        self.w1_cells.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn w2_cells(&self) -> Vec<f64> {
        self.w2_cells.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    #[wasm_bindgen(getter)]
    pub fn nesting_violations(&self) -> usize {
        self.nesting_violations
    }

    /// Region sizes, for normalizing the coincidence fractions.
    #[wasm_bindgen(getter)]
    pub fn s1_cells(&self) -> f64 {
        self.s1_cells
    }

    #[wasm_bindgen(getter)]
    pub fn s2_cells(&self) -> f64 {
        self.s2_cells
    }
}

#[wasm_bindgen]
pub fn sweep_demo(r: f64, a: f64, nx: usize, fmin: f64, fmax: f64, count: usize) -> Result<SweepDemo, JsError> {
    if !(fmin > 0.0 && fmax > fmin) || count < 2 {
        return Err(JsError::new("need 0 < fmin < fmax and at least 2 sweep points"));
    }
    let (grid, p) = build(r, a, nx)?;
    let h0 = solve_h0(&grid, &p).map_err(|e| JsError::new(&e.to_string()))?;
    let crit = critical_lambdas(&grid, &p, &h0).map_err(|e| JsError::new(&e.to_string()))?;
    let lambdas: Vec<f64> = (0..count)
        .map(|i| crit.lambda0 * (fmin + (fmax - fmin) * i as f64 / (count - 1) as f64))
        .collect();
    let (report, _) = sweep_lambda(&grid, &p, &lambdas).map_err(|e| JsError::new(&e.to_string()))?;
    if let Some(reason) = &report.aborted {
        return Err(JsError::new(reason));
    }
    Ok(SweepDemo {
        lambdas,
        mu_mass: report.rows.iter().map(|r| r.mu_mass).collect(),
        w1_cells: report.rows.iter().map(|r| r.w1_cells as f64).collect(),
        w2_cells: report.rows.iter().map(|r| r.w2_cells as f64).collect(),
        lambda0: crit.lambda0,
        nesting_violations: report.nesting_violations,
        s1_cells: grid.n_region(Region::S1) as f64,
        s2_cells: grid.n_region(Region::S2) as f64,
    })
}
