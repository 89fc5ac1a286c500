//! Five-point discretization of −div(c∇u) + u and its solvers.
//!
//! Face conductivities are harmonic means of the nodal values, which keeps
//! the flux c ∂u continuous across coefficient jumps (the transmission
//! condition at ∂S₁). Dirichlet data is eliminated: boundary values are
//! folded into a lift vector, so the assembled matrix stays symmetric
//! positive definite. Two solvers operate on the same operator:
//!
//! * [`cg_solve`] — Jacobi-preconditioned conjugate gradients for linear
//!   systems;
//! * [`psor_solve`] — projected SOR for one- or two-sided bound constraints
//!   (the discrete variational inequality).
//!
//! Solvers are single-threaded per call and reentrant.

use crate::error::{Error, Result};
use crate::geometry::{opposite, Grid2D, GridId, ScalarField};

/// Iteration record returned by every solver.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final residual measure (2-norm for CG, max KKT violation for PSOR).
    pub residual: f64,
    /// Relaxation parameter used (1.0 for CG).
    pub omega: f64,
}

/// How the domain boundary enters the stencil.
#[derive(Clone, Copy)]
pub enum BoundaryKind<'a> {
    /// u = g on the staircase boundary nodes; g evaluated at their centers.
    Dirichlet(&'a dyn Fn(f64, f64) -> f64),
    /// Zero-flux (mirror) closure: boundary faces drop out.
    Neumann,
}

/// Symmetric positive-definite operator −div(c∇·) + m·I on the interior
/// nodes, with eliminated Dirichlet data.
#[derive(Debug, Clone)]
pub struct EllipticOperator {
    grid_id: GridId,
    n: usize,
    nx: usize,
    ny: usize,
    cell_area: f64,
    /// Neighbor interior indices (copied from the grid; -1 = boundary face).
    nbr: Vec<[i32; 4]>,
    /// Off-diagonal coupling c_face/h², per direction. Applied as −off·u_nbr.
    off: Vec<[f64; 4]>,
    /// Boundary-face coefficient c_face/h² (0 on non-boundary directions).
    bcoef: Vec<[f64; 4]>,
    /// Dirichlet value at the boundary node across each boundary face.
    bval: Vec<[f64; 4]>,
    /// Diagonal: sum of couplings + mass.
    diag: Vec<f64>,
    /// Dirichlet lift: Σ bcoef·bval per node, added to the right-hand side.
    lift: Vec<f64>,
}

/// Assemble −div(c∇·) + u with Dirichlet data `g`.
///
/// `c` must be strictly positive. The stencil uses harmonic face averages of
/// `c`; boundary faces take the one-sided interior value (c is constant near
/// ∂Ω for every pinning configuration, where the inclusion clearance rule
/// applies).
pub fn assemble(grid: &Grid2D, c: &ScalarField, g: impl Fn(f64, f64) -> f64) -> Result<EllipticOperator> {
    assemble_with(grid, c, 1.0, BoundaryKind::Dirichlet(&g))
}

/// Assembly with explicit mass coefficient and boundary kind. Mass must be
/// nonnegative and, for Neumann closures, positive to keep the operator
/// definite.
pub fn assemble_with(grid: &Grid2D, c: &ScalarField, mass: f64, bc: BoundaryKind) -> Result<EllipticOperator> {
    grid.check_field(c)?;
    if let Some(k) = (0..c.len()).find(|&k| !(c[k] > 0.0) || !c[k].is_finite()) {
        return Err(Error::Parameter(format!("conductivity must be positive, got {} at node {k}", c[k])));
    }
    if mass < 0.0 || (mass == 0.0 && matches!(bc, BoundaryKind::Neumann)) {
        return Err(Error::Parameter("mass coefficient must keep the operator definite".into()));
    }

    let n = grid.n_interior();
    let (nx, ny) = grid.dims();
    let (hx, hy) = grid.spacing();
    let inv_h2 = [1.0 / (hx * hx), 1.0 / (hx * hx), 1.0 / (hy * hy), 1.0 / (hy * hy)];
    let nbr = grid.neighbors().to_vec();

    let mut off = vec![[0.0; 4]; n];
    let mut bcoef = vec![[0.0; 4]; n];
    let mut bval = vec![[0.0; 4]; n];
    let mut diag = vec![mass; n];
    let mut lift = vec![0.0; n];

    for k in 0..n {
        for d in 0..4 {
            let q = nbr[k][d];
            if q >= 0 {
                let cf = harmonic_mean(c[k], c[q as usize]);
                off[k][d] = cf * inv_h2[d];
                diag[k] += off[k][d];
            } else if let BoundaryKind::Dirichlet(g) = bc {
                let cf = c[k]; // one-sided
                bcoef[k][d] = cf * inv_h2[d];
                let (bx, by) = grid.boundary_position(k, d);
                bval[k][d] = g(bx, by);
                diag[k] += bcoef[k][d];
                lift[k] += bcoef[k][d] * bval[k][d];
            }
        }
    }

    Ok(EllipticOperator {
        grid_id: grid.id(),
        n,
        nx,
        ny,
        cell_area: grid.cell_area(),
        nbr,
        off,
        bcoef,
        bval,
        diag,
        lift,
    })
}

#[inline]
fn harmonic_mean(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

impl EllipticOperator {
    pub fn grid_id(&self) -> GridId {
        self.grid_id
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_area
    }

    /// The eliminated-Dirichlet contribution to the right-hand side.
    pub fn lift(&self) -> &[f64] {
        &self.lift
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// y = A·x.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for k in 0..self.n {
            let mut acc = self.diag[k] * x[k];
            let nb = self.nbr[k];
            let of = self.off[k];
            for d in 0..4 {
                if nb[d] >= 0 {
                    acc -= of[d] * x[nb[d] as usize];
                }
            }
            y[k] = acc;
        }
    }

    /// A·x at a single node.
    #[inline]
    pub fn apply_at(&self, x: &[f64], k: usize) -> f64 {
        let mut acc = self.diag[k] * x[k];
        let nb = self.nbr[k];
        let of = self.off[k];
        for d in 0..4 {
            if nb[d] >= 0 {
                acc -= of[d] * x[nb[d] as usize];
            }
        }
        acc
    }

    /// Largest asymmetry |A[k][q] − A[q][k]| over all stored couplings.
    /// Zero by construction: both sides compute the same harmonic mean.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..self.n {
            for d in 0..4 {
                let q = self.nbr[k][d];
                if q >= 0 {
                    let back = self.off[q as usize][opposite(d)];
                    worst = worst.max((self.off[k][d] - back).abs());
                }
            }
        }
        worst
    }

    /// Energy quadrature ∫(c|∇u|² ) consistent with the assembled stencil:
    /// face differences weighted by the assembly's harmonic means, boundary
    /// faces against their Dirichlet values. With this choice discrete
    /// integration by parts is exact.
    pub fn gradient_energy(&self, x: &[f64]) -> f64 {
        let mut e = 0.0;
        for k in 0..self.n {
            for d in 0..4 {
                let q = self.nbr[k][d];
                if q >= 0 {
                    // count interior faces once (east/north owner)
                    if d == 1 || d == 3 {
                        let du = x[k] - x[q as usize];
                        e += self.off[k][d] * du * du;
                    }
                } else if self.bcoef[k][d] > 0.0 {
                    let du = x[k] - self.bval[k][d];
                    e += self.bcoef[k][d] * du * du;
                }
            }
        }
        e * self.cell_area
    }

    /// Quadratic objective ½ x·Ax − b·x with b = rhs + lift (the natural
    /// energy PSOR descends).
    pub fn quadratic_energy(&self, x: &[f64], rhs: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.n];
        self.apply(x, &mut ax);
        let mut e = 0.0;
        for k in 0..self.n {
            e += 0.5 * x[k] * ax[k] - (rhs[k] + self.lift[k]) * x[k];
        }
        e
    }

    /// Residual b − A·x of the linear system (b = rhs + lift).
    pub fn residual(&self, x: &[f64], rhs: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.n];
        self.apply(x, &mut r);
        for k in 0..self.n {
            r[k] = rhs[k] + self.lift[k] - r[k];
        }
        r
    }

    /// Internal constructor for hand-built instances (test oracles, Newton
    /// systems assembled elsewhere).
    pub(crate) fn from_raw(
        grid_id: GridId,
        dims: (usize, usize),
        cell_area: f64,
        nbr: Vec<[i32; 4]>,
        off: Vec<[f64; 4]>,
        diag: Vec<f64>,
    ) -> Self {
        let n = diag.len();
        EllipticOperator {
            grid_id,
            n,
            nx: dims.0,
            ny: dims.1,
            cell_area,
            nbr,
            off,
            bcoef: vec![[0.0; 4]; n],
            bval: vec![[0.0; 4]; n],
            diag,
            lift: vec![0.0; n],
        }
    }

    pub(crate) fn set_diag(&mut self, diag: Vec<f64>) {
        assert_eq!(diag.len(), self.n);
        self.diag = diag;
    }


    fn iteration_cap(&self) -> usize {
        200 * (self.nx + self.ny)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solve A·x = rhs + lift by preconditioned conjugate gradients.
///
/// Convergence: ‖b − A·x‖₂ ≤ tol·‖b‖₂, or ≤ tol absolutely when b = 0.
pub fn cg_solve(op: &EllipticOperator, rhs: &ScalarField, tol: f64) -> Result<(ScalarField, SolveStats)> {
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("cg tolerance must be positive, got {tol}")));
    }
    let n = op.n;
    if rhs.len() != n {
        return Err(Error::GridMismatch("rhs length does not match operator".into()));
    }
    let mut b = vec![0.0; n];
    for k in 0..n {
        b[k] = rhs[k] + op.lift[k];
    }
    let bnorm = dot(&b, &b).sqrt();
    let target = if bnorm > 0.0 { tol * bnorm } else { tol };

    let mut x = vec![0.0; n];
    let mut r = b;
    let mut z: Vec<f64> = r.iter().zip(&op.diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];

    let cap = op.iteration_cap();
    let mut iters = 0;
    let mut rnorm = dot(&r, &r).sqrt();
    while rnorm > target {
        if iters >= cap {
            return Err(Error::Convergence {
                context: "conjugate gradients".into(),
                stats: SolveStats { iterations: iters, residual: rnorm, omega: 1.0 },
            });
        }
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        // roundoff stagnation breaks the search-direction recurrence down
        if !(pap > 0.0) || !pap.is_finite() || !rz.is_finite() {
            return Err(Error::Convergence {
                context: "conjugate gradients (breakdown at the roundoff floor)".into(),
                stats: SolveStats { iterations: iters, residual: rnorm, omega: 1.0 },
            });
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        for k in 0..n {
            z[k] = r[k] / op.diag[k];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
        rnorm = dot(&r, &r).sqrt();
        iters += 1;
    }

    let field = ScalarField::new_unchecked(op.grid_id, x);
    field.validate_finite()?;
    Ok((field, SolveStats { iterations: iters, residual: rnorm, omega: 1.0 }))
}

/// Projected SOR for the bound-constrained problem
///
/// ```text
/// minimize ½ x·Ax − (rhs + lift)·x   subject to lower ≤ x ≤ upper
/// ```
///
/// Either bound may be absent. Converged when every node satisfies the
/// complementarity conditions to `tol` (absolute): at inactive nodes the
/// linear residual A·x − b is ≤ tol in magnitude; at an active lower bound it
/// is ≥ −tol; at an active upper bound ≤ tol.
pub fn psor_solve(
    op: &EllipticOperator,
    rhs: &ScalarField,
    lower: Option<&ScalarField>,
    upper: Option<&ScalarField>,
    omega: f64,
    tol: f64,
) -> Result<(ScalarField, SolveStats)> {
    psor_solve_observed(op, rhs, lower, upper, omega, tol, None, |_| {})
}

/// [`psor_solve`] with a warm start and a per-sweep observer (used by the
/// energy-monotonicity checks).
pub fn psor_solve_observed(
    op: &EllipticOperator,
    rhs: &ScalarField,
    lower: Option<&ScalarField>,
    upper: Option<&ScalarField>,
    omega: f64,
    tol: f64,
    warm: Option<&ScalarField>,
    mut observe: impl FnMut(&[f64]),
) -> Result<(ScalarField, SolveStats)> {
    if !(omega > 0.0 && omega < 2.0) {
        return Err(Error::Parameter(format!("relaxation parameter must lie in (0, 2), got {omega}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("psor tolerance must be positive, got {tol}")));
    }
    let n = op.n;
    if rhs.len() != n {
        return Err(Error::GridMismatch("rhs length does not match operator".into()));
    }
    if let (Some(lo), Some(hi)) = (lower, upper) {
        if let Some(k) = (0..n).find(|&k| lo[k] > hi[k]) {
            return Err(Error::Parameter(format!("lower bound exceeds upper bound at node {k}")));
        }
    }

    let mut b = vec![0.0; n];
    for k in 0..n {
        b[k] = rhs[k] + op.lift[k];
    }

    let project = |v: f64, k: usize| -> f64 {
        let mut v = v;
        if let Some(lo) = lower {
            v = v.max(lo[k]);
        }
        if let Some(hi) = upper {
            v = v.min(hi[k]);
        }
        v
    };

    let mut x: Vec<f64> = match warm {
        Some(w) => {
            if w.len() != n {
                return Err(Error::GridMismatch("warm start length does not match operator".into()));
            }
            (0..n).map(|k| project(w[k], k)).collect()
        }
        None => (0..n).map(|k| project(0.0, k)).collect(),
    };

    let cap = op.iteration_cap();
    let check_every = 16;
    let max_diag = op.diag.iter().cloned().fold(0.0f64, f64::max);
    let mut sweeps = 0;
    let mut worst;
    loop {
        for k in 0..n {
            let mut sigma = b[k];
            let nb = op.nbr[k];
            let of = op.off[k];
            for d in 0..4 {
                if nb[d] >= 0 {
                    sigma += of[d] * x[nb[d] as usize];
                }
            }
            let gs = sigma / op.diag[k];
            x[k] = project(x[k] + omega * (gs - x[k]), k);
        }
        sweeps += 1;
        observe(&x);

        if sweeps % check_every == 0 || sweeps >= cap {
            worst = kkt_violation(op, &x, &b, lower, upper);
            // a residual evaluation cannot resolve below the roundoff of the
            // stencil apply; stop once the request drops under that floor
            let x_inf = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let floor = 4.0 * f64::EPSILON * max_diag * (1.0 + x_inf);
            if worst <= tol.max(floor) {
                break;
            }
            if sweeps >= cap {
                return Err(Error::Convergence {
                    context: "projected SOR".into(),
                    stats: SolveStats { iterations: sweeps, residual: worst, omega },
                });
            }
        }
    }

    let field = ScalarField::new_unchecked(op.grid_id, x);
    field.validate_finite()?;
    Ok((field, SolveStats { iterations: sweeps, residual: worst, omega }))
}

/// Max complementarity violation: |A·x − b| off the bounds, one-sided at
/// active bounds (residual ≥ 0 at a lower bound, ≤ 0 at an upper bound).
fn kkt_violation(
    op: &EllipticOperator,
    x: &[f64],
    b: &[f64],
    lower: Option<&ScalarField>,
    upper: Option<&ScalarField>,
) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..op.n {
        let r = op.apply_at(x, k) - b[k];
        let at_lower = lower.is_some_and(|lo| x[k] <= lo[k]);
        let at_upper = upper.is_some_and(|hi| x[k] >= hi[k]);
        let v = if at_lower {
            (-r).max(0.0)
        } else if at_upper {
            r.max(0.0)
        } else {
            r.abs()
        };
        worst = worst.max(v);
    }
    worst
}

/// Brute-force oracles for tiny bound-constrained instances. Independent of
/// the iterative solvers: dense elimination plus exhaustive active-set
/// search. Used by unit tests and the verification suite.
pub(crate) mod oracles {
    use super::EllipticOperator;
    use crate::geometry::GridId;

    /// 1D chain operator with unit couplings and a diagonal boost.
    pub(crate) fn chain_operator(n: usize, diag_boost: f64) -> EllipticOperator {
        let mut nbr = vec![[-1i32; 4]; n];
        let mut off = vec![[0.0f64; 4]; n];
        let mut diag = vec![diag_boost; n];
        for k in 0..n {
            if k > 0 {
                nbr[k][0] = (k - 1) as i32;
                off[k][0] = 1.0;
                diag[k] += 1.0;
            }
            if k + 1 < n {
                nbr[k][1] = (k + 1) as i32;
                off[k][1] = 1.0;
                diag[k] += 1.0;
            }
        }
        EllipticOperator::from_raw(GridId(0xdead), (n, 1), 1.0, nbr, off, diag)
    }

    pub(crate) fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
        let n = b.len();
        for i in 0..n {
            let piv = (i..n).max_by(|&r, &s| a[r][i].abs().partial_cmp(&a[s][i].abs()).unwrap())?;
            if a[piv][i].abs() < 1e-14 {
                return None;
            }
            a.swap(i, piv);
            b.swap(i, piv);
            for r in (i + 1)..n {
                let f = a[r][i] / a[i][i];
                for c in i..n {
                    a[r][c] -= f * a[i][c];
                }
                b[r] -= f * b[i];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = b[i];
            for c in (i + 1)..n {
                s -= a[i][c] * x[c];
            }
            x[i] = s / a[i][i];
        }
        Some(x)
    }

    /// Enumerate all 2ⁿ active sets of a lower-bounded SPD problem and return
    /// the unique KKT point.
    pub(crate) fn enumerate_obstacle(op: &EllipticOperator, b: &[f64], lower: &[f64]) -> Vec<f64> {
        let n = op.n();
        assert!(n <= 20, "active-set enumeration explodes beyond 20 unknowns");
        'sets: for mask in 0u32..(1 << n) {
            let active: Vec<bool> = (0..n).map(|k| mask >> k & 1 == 1).collect();
            let mut rows = Vec::new();
            let mut rhs_red = Vec::new();
            for k in 0..n {
                if active[k] {
                    let mut row = vec![0.0; n];
                    row[k] = 1.0;
                    rows.push(row);
                    rhs_red.push(lower[k]);
                } else {
                    // row k of A by a unit-vector probe (symmetric: row = column)
                    let mut e = vec![0.0; n];
                    e[k] = 1.0;
                    let mut col = vec![0.0; n];
                    op.apply(&e, &mut col);
                    rows.push(col);
                    rhs_red.push(b[k]);
                }
            }
            let x = match gauss_solve(rows, rhs_red) {
                Some(x) => x,
                None => continue 'sets,
            };
            let mut ax = vec![0.0; n];
            op.apply(&x, &mut ax);
            for k in 0..n {
                if active[k] {
                    if ax[k] - b[k] < -1e-11 {
                        continue 'sets;
                    }
                } else if x[k] < lower[k] - 1e-11 {
                    continue 'sets;
                }
            }
            return x;
        }
        unreachable!("an SPD obstacle problem always has a KKT point");
    }

    /// Enumerate all 3ⁿ bound states (lower-active, free, upper-active) of a
    /// box-constrained SPD problem and return the unique KKT point.
    pub(crate) fn enumerate_box(op: &EllipticOperator, b: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
        let n = op.n();
        assert!(n <= 12, "box enumeration explodes beyond 12 unknowns");
        let total = 3u32.pow(n as u32);
        'sets: for code in 0..total {
            let mut state = Vec::with_capacity(n);
            let mut c = code;
            for _ in 0..n {
                state.push(c % 3); // 0 free, 1 at lower, 2 at upper
                c /= 3;
            }
            let mut rows = Vec::new();
            let mut rhs_red = Vec::new();
            for k in 0..n {
                match state[k] {
                    0 => {
                        let mut e = vec![0.0; n];
                        e[k] = 1.0;
                        let mut col = vec![0.0; n];
                        op.apply(&e, &mut col);
                        rows.push(col);
                        rhs_red.push(b[k]);
                    }
                    bound => {
                        let mut row = vec![0.0; n];
                        row[k] = 1.0;
                        rows.push(row);
                        rhs_red.push(if bound == 1 { lower[k] } else { upper[k] });
                    }
                }
            }
            let x = match gauss_solve(rows, rhs_red) {
                Some(x) => x,
                None => continue 'sets,
            };
            let mut ax = vec![0.0; n];
            op.apply(&x, &mut ax);
            for k in 0..n {
                let r = ax[k] - b[k];
                match state[k] {
                    0 => {
                        if x[k] < lower[k] - 1e-11 || x[k] > upper[k] + 1e-11 {
                            continue 'sets;
                        }
                    }
                    1 => {
                        if r < -1e-11 {
                            continue 'sets;
                        }
                    }
                    _ => {
                        if r > 1e-11 {
                            continue 'sets;
                        }
                    }
                }
            }
            return x;
        }
        unreachable!("an SPD box problem always has a KKT point");
    }
}

#[cfg(test)]
mod tests {
    use super::oracles::{chain_operator, enumerate_obstacle};
    use super::*;
    use crate::geometry::{build_grid, pinning_field, DomainSpec, InclusionShape, OuterShape};
    use proptest::prelude::*;

    fn rect_grid(n: usize) -> Grid2D {
        // inclusion must span >= 4 cells and clear the boundary by 2
        let radius = if n <= 10 { 0.25 } else { 0.2 };
        build_grid(&DomainSpec {
            outer: OuterShape::Rectangle { width: 1.0, height: 1.0 },
            inclusion: InclusionShape::Disc { cx: 0.5, cy: 0.5, radius },
            a: 0.5,
            nx: n,
            ny: n,
            allow_degenerate: false,
        })
        .unwrap()
    }

    /// Dense Gaussian elimination, the oracle for small systems.
    fn dense_solve(op: &EllipticOperator, b: &[f64]) -> Vec<f64> {
        let n = op.n();
        let mut a = vec![vec![0.0f64; n]; n];
        for k in 0..n {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            let mut col = vec![0.0; n];
            op.apply(&e, &mut col);
            for i in 0..n {
                a[i][k] = col[i];
            }
        }
        let mut rhs = b.to_vec();
        for i in 0..n {
            let piv = (i..n).max_by(|&r, &s| a[r][i].abs().partial_cmp(&a[s][i].abs()).unwrap()).unwrap();
            a.swap(i, piv);
            rhs.swap(i, piv);
            for r in (i + 1)..n {
                let f = a[r][i] / a[i][i];
                for c in i..n {
                    a[r][c] -= f * a[i][c];
                }
                rhs[r] -= f * rhs[i];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = rhs[i];
            for c in (i + 1)..n {
                s -= a[i][c] * x[c];
            }
            x[i] = s / a[i][i];
        }
        x
    }

    #[test]
    fn manufactured_linear_solution_is_exact() {
        // c ≡ 1, h(x,y) = x: −Δh + h = x with g = x. The stencil is exact on
        // linears, so the solve recovers node coordinates to solver tolerance.
        let grid = rect_grid(16);
        let c = ScalarField::constant(&grid, 1.0);
        let op = assemble(&grid, &c, |x, _| x).unwrap();
        let rhs = ScalarField::from_fn(&grid, |x, _| x);
        let (sol, _) = cg_solve(&op, &rhs, 1e-13).unwrap();
        for k in 0..grid.n_interior() {
            let (x, _) = grid.position(k);
            assert!((sol[k] - x).abs() < 1e-10, "node {k}: {} vs {}", sol[k], x);
        }
    }

    #[test]
    fn constant_one_with_unit_dirichlet_solves_unit_equation() {
        // −div(c∇1) + 1 = 1: applying the operator to the all-ones field
        // reproduces the unit right-hand side once the lift is accounted for.
        let grid = build_grid(&DomainSpec::disc(0.4, 0.25, 24, 24)).unwrap();
        let p = pinning_field(&grid, 0.25).unwrap();
        let op = assemble(&grid, &p.conductivity(&grid), |_, _| 1.0).unwrap();
        let ones = vec![1.0; op.n()];
        let mut out = vec![0.0; op.n()];
        op.apply(&ones, &mut out);
        for k in 0..op.n() {
            let residual = out[k] - op.lift()[k] - 1.0;
            assert!(residual.abs() < 1e-12, "node {k}: residual {residual}");
        }
    }

    #[test]
    fn harmonic_mean_across_jump() {
        let grid = rect_grid(16);
        let p = pinning_field(&grid, 0.5).unwrap();
        // conductivity jumps 1 <-> a at the interface when c = p itself
        let op = assemble(&grid, p.as_field(), |_, _| 0.0).unwrap();
        let (hx, _) = grid.spacing();
        let a = 0.5f64;
        let expect = 2.0 * a / (1.0 + a) / (hx * hx);
        let mut found = false;
        for k in 0..grid.n_interior() {
            for d in 0..4 {
                let q = grid.neighbors()[k][d];
                if q >= 0 && grid.region(k) != grid.region(q as usize) {
                    assert!((op.off[k][d] - expect).abs() < 1e-14);
                    found = true;
                }
            }
        }
        assert!(found, "no interface face found");
    }

    #[test]
    fn assembled_matrix_is_exactly_symmetric() {
        let grid = build_grid(&DomainSpec::disc(0.4, 0.3, 24, 24)).unwrap();
        let p = pinning_field(&grid, 0.3).unwrap();
        let op = assemble(&grid, &p.conductivity(&grid), |_, _| 1.0).unwrap();
        assert_eq!(op.symmetry_defect(), 0.0);
    }

    #[test]
    fn cg_zero_rhs_zero_dirichlet_gives_zero() {
        let grid = rect_grid(16);
        let c = ScalarField::constant(&grid, 1.0);
        let op = assemble(&grid, &c, |_, _| 0.0).unwrap();
        let (sol, stats) = cg_solve(&op, &ScalarField::zeros(&grid), 1e-12).unwrap();
        assert_eq!(sol.norm_inf(), 0.0);
        assert_eq!(stats.iterations, 0);
    }

    #[test]
    fn cg_recovers_random_preimage() {
        let grid = rect_grid(12);
        let c = ScalarField::constant(&grid, 2.0);
        let op = assemble(&grid, &c, |_, _| 0.0).unwrap();
        let mut rng = crate::util::SplitMix64::new(3);
        let y = ScalarField::from_fn(&grid, |_, _| rng.range(-1.0, 1.0));
        let mut ay = vec![0.0; op.n()];
        op.apply(y.values(), &mut ay);
        // rhs = A·y − lift so that the solve target is exactly y
        let rhs = ScalarField::from_values(&grid, (0..op.n()).map(|k| ay[k] - op.lift()[k]).collect()).unwrap();
        let (sol, _) = cg_solve(&op, &rhs, 1e-13).unwrap();
        let err = (0..op.n()).map(|k| (sol[k] - y[k]).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "recovery error {err}");
    }

    #[test]
    fn cg_matches_dense_lu_on_8x8() {
        let grid = rect_grid(8);
        let p = pinning_field(&grid, 0.25).unwrap();
        let op = assemble(&grid, &p.conductivity(&grid), |x, y| x + y).unwrap();
        let rhs = ScalarField::from_fn(&grid, |x, y| (x * 7.0).sin() * (y * 3.0).cos());
        let (sol, _) = cg_solve(&op, &rhs, 1e-14).unwrap();
        let mut b = rhs.values().to_vec();
        for k in 0..op.n() {
            b[k] += op.lift()[k];
        }
        let exact = dense_solve(&op, &b);
        let err = (0..op.n()).map(|k| (sol[k] - exact[k]).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-10, "CG vs dense LU differ by {err}");
    }

    #[test]
    fn discrete_maximum_principle() {
        // rhs = 0, boundary data 1: solution strictly inside (0, 1).
        let grid = build_grid(&DomainSpec::disc(0.5, 0.5, 32, 32)).unwrap();
        let p = pinning_field(&grid, 0.5).unwrap();
        let op = assemble(&grid, &p.conductivity(&grid), |_, _| 1.0).unwrap();
        let (sol, _) = cg_solve(&op, &ScalarField::zeros(&grid), 1e-12).unwrap();
        assert!(sol.min() > 0.0, "min {} not > 0", sol.min());
        assert!(sol.max() < 1.0, "max {} not < 1", sol.max());
    }

    #[test]
    fn psor_without_bounds_matches_cg() {
        let grid = rect_grid(16);
        let p = pinning_field(&grid, 0.5).unwrap();
        let op = assemble(&grid, &p.conductivity(&grid), |_, _| 1.0).unwrap();
        let rhs = ScalarField::from_fn(&grid, |x, y| x - y);
        let tol = 1e-10;
        let (xc, _) = cg_solve(&op, &rhs, 1e-14).unwrap();
        let (xs, _) = psor_solve(&op, &rhs, None, None, 1.5, tol).unwrap();
        let err = (0..op.n()).map(|k| (xc[k] - xs[k]).abs()).fold(0.0, f64::max);
        assert!(err <= 10.0 * tol.max(1e-9), "PSOR vs CG differ by {err}");
    }

    #[test]
    fn fully_active_obstacle_sits_on_bound() {
        let grid = rect_grid(12);
        let c = ScalarField::constant(&grid, 1.0);
        let op = assemble(&grid, &c, |_, _| 0.0).unwrap();
        // unconstrained solution of A x = 0 is 0; a lower bound above it is
        // everywhere active
        let lower = ScalarField::constant(&grid, 2.5);
        let (sol, _) = psor_solve(&op, &ScalarField::zeros(&grid), Some(&lower), None, 1.5, 1e-10).unwrap();
        for k in 0..op.n() {
            assert_eq!(sol[k], 2.5);
        }
    }

    #[test]
    fn three_node_obstacle_matches_enumeration() {
        let op = chain_operator(3, 0.5);
        let b = [1.2, -0.4, 0.9];
        let lower = [0.0, 0.1, -0.5];
        let exact = enumerate_obstacle(&op, &b, &lower);
        let rhs = ScalarField::new_unchecked(op.grid_id(), b.to_vec());
        let lo = ScalarField::new_unchecked(op.grid_id(), lower.to_vec());
        let (sol, _) = psor_solve(&op, &rhs, Some(&lo), None, 1.3, 1e-12).unwrap();
        for k in 0..3 {
            assert!((sol[k] - exact[k]).abs() < 1e-10, "node {k}: {} vs {}", sol[k], exact[k]);
        }
    }

    #[test]
    fn psor_energy_never_increases() {
        let grid = rect_grid(12);
        let p = pinning_field(&grid, 0.5).unwrap();
        let op = assemble(&grid, &p.conductivity(&grid), |_, _| 1.0).unwrap();
        let rhs = ScalarField::zeros(&grid);
        let lower = ScalarField::from_fn(&grid, |x, y| 0.6 - (x - 0.5).hypot(y - 0.5));
        let mut energies = Vec::new();
        let (_, _) = psor_solve_observed(&op, &rhs, Some(&lower), None, 1.5, 1e-10, None, |x| {
            energies.push(op.quadratic_energy(x, rhs.values()));
        })
        .unwrap();
        let scale = energies[0].abs().max(1.0);
        for w in energies.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * scale, "energy increased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn psor_complementarity_at_lower_bound() {
        let grid = rect_grid(16);
        let c = ScalarField::constant(&grid, 1.0);
        let op = assemble(&grid, &c, |_, _| 0.0).unwrap();
        let lower = ScalarField::from_fn(&grid, |x, y| {
            0.3 - 8.0 * ((x - 0.5).powi(2) + (y - 0.5).powi(2))
        });
        let rhs = ScalarField::zeros(&grid);
        let tol = 1e-10;
        let (x, _) = psor_solve(&op, &rhs, Some(&lower), None, 1.5, tol).unwrap();
        let r = op.residual(x.values(), rhs.values());
        for k in 0..op.n() {
            let gap = x[k] - lower[k];
            assert!(gap >= 0.0);
            // (x − lower)·(A·x − b) ≈ 0 nodewise
            assert!(gap * (-r[k]) <= tol * 10.0, "complementarity product {} at node {k}", gap * -r[k]);
        }
    }

    #[test]
    fn exhausted_iteration_budgets_carry_stats() {
        // tolerances below the roundoff floor stall CG against its cap
        let grid = rect_grid(16);
        let c = ScalarField::constant(&grid, 1.0);
        let op = assemble(&grid, &c, |_, _| 1.0).unwrap();
        let rhs = ScalarField::from_fn(&grid, |x, y| x * y);
        match cg_solve(&op, &rhs, 1e-300) {
            Err(Error::Convergence { stats, .. }) => {
                assert!(stats.iterations > 0);
                assert!(stats.residual.is_finite());
            }
            other => panic!("expected a convergence error, got {other:?}"),
        }
        // a nearly singular chain with heavy under-relaxation exceeds the
        // sweep cap long before reaching a tight tolerance
        let chain = oracles::chain_operator(16, 1e-12);
        let b = ScalarField::new_unchecked(chain.grid_id(), vec![1.0; 16]);
        match psor_solve(&chain, &b, None, None, 0.05, 1e-13) {
            Err(Error::Convergence { stats, .. }) => assert!(stats.iterations >= 200 * 17),
            other => panic!("expected a convergence error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let grid = rect_grid(8);
        let c = ScalarField::constant(&grid, 1.0);
        let bad_c = ScalarField::constant(&grid, -1.0);
        assert!(matches!(assemble(&grid, &bad_c, |_, _| 0.0), Err(Error::Parameter(_))));
        let op = assemble(&grid, &c, |_, _| 0.0).unwrap();
        let rhs = ScalarField::zeros(&grid);
        assert!(matches!(psor_solve(&op, &rhs, None, None, 2.5, 1e-9), Err(Error::Parameter(_))));
        assert!(matches!(cg_solve(&op, &rhs, 0.0), Err(Error::Parameter(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn psor_kkt_on_random_chains(seed in 0u64..500) {
            let mut rng = crate::util::SplitMix64::new(seed);
            let n = 6;
            let op = chain_operator(n, 0.4);
            let b: Vec<f64> = (0..n).map(|_| rng.range(-1.0, 1.0)).collect();
            let lo: Vec<f64> = (0..n).map(|_| rng.range(-0.6, 0.6)).collect();
            let exact = enumerate_obstacle(&op, &b, &lo);
            let rhs = ScalarField::new_unchecked(op.grid_id(), b);
            let lof = ScalarField::new_unchecked(op.grid_id(), lo);
            let (sol, _) = psor_solve(&op, &rhs, Some(&lof), None, 1.4, 1e-12).unwrap();
            for k in 0..n {
                prop_assert!((sol[k] - exact[k]).abs() < 1e-9);
            }
        }

        #[test]
        fn two_sided_psor_matches_box_enumeration(seed in 0u64..500) {
            let mut rng = crate::util::SplitMix64::new(seed.wrapping_mul(0x9e37));
            let n = 6;
            let op = super::oracles::chain_operator(n, 0.4);
            let b: Vec<f64> = (0..n).map(|_| rng.range(-1.5, 1.5)).collect();
            let lo: Vec<f64> = (0..n).map(|_| rng.range(-0.5, 0.0)).collect();
            let hi: Vec<f64> = (0..n).map(|_| rng.range(0.0, 0.5)).collect();
            let exact = super::oracles::enumerate_box(&op, &b, &lo, &hi);
            let rhs = ScalarField::new_unchecked(op.grid_id(), b);
            let lof = ScalarField::new_unchecked(op.grid_id(), lo);
            let hif = ScalarField::new_unchecked(op.grid_id(), hi);
            let (sol, _) = psor_solve(&op, &rhs, Some(&lof), Some(&hif), 1.4, 1e-12).unwrap();
            for k in 0..n {
                prop_assert!((sol[k] - exact[k]).abs() < 1e-9, "node {}: {} vs {}", k, sol[k], exact[k]);
            }
        }
    }
}
