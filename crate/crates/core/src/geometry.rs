//! Computational domain, grid, and pinning field.
//!
//! The domain Ω is the unit disc (default) or an axis-aligned rectangle, with
//! an inclusion S₁ (disc or polygon) whose closure lies strictly inside Ω;
//! S₂ = Ω \ S̄₁. The pinning coefficient is
//!
//! ```text
//! p(x) = 1  on S₁,
//! p(x) = a  on S₂,        a > 0, a ≠ 1.
//! ```
//!
//! Discretization is a uniform cell-centered Cartesian grid over the bounding
//! box of Ω. A node belongs to Ω iff its cell center does (staircase
//! boundary, O(h) geometric error); it is tagged `S1` when the center lies in
//! the closed inclusion — nodes exactly on ∂S₁ go to S₁ by convention — and
//! `S2` otherwise. Exterior nodes adjacent to interior ones act as Dirichlet
//! boundary nodes. Grids and fields are immutable after construction and safe
//! to share across threads.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::util::Fnv1a;

/// Outer boundary of Ω.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OuterShape {
    /// Disc of radius 1 centered at the origin.
    UnitDisc,
    /// Rectangle [0, width] × [0, height].
    Rectangle { width: f64, height: f64 },
}

/// The inclusion S₁.
#[derive(Debug, Clone, PartialEq)]
pub enum InclusionShape {
    Disc { cx: f64, cy: f64, radius: f64 },
    Polygon { vertices: Vec<[f64; 2]> },
}

/// Everything needed to build a grid: domain, inclusion, pinning value, and
/// resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub outer: OuterShape,
    pub inclusion: InclusionShape,
    /// Pinning value on S₂ (the value on S₁ is 1).
    pub a: f64,
    pub nx: usize,
    pub ny: usize,
    /// Permit a = 1 (uniform pinning) for solver self-tests.
    pub allow_degenerate: bool,
}

impl DomainSpec {
    /// Unit disc with a centered disc inclusion — the workhorse configuration.
    pub fn disc(inclusion_radius: f64, a: f64, nx: usize, ny: usize) -> Self {
        Self {
            outer: OuterShape::UnitDisc,
            inclusion: InclusionShape::Disc { cx: 0.0, cy: 0.0, radius: inclusion_radius },
            a,
            nx,
            ny,
            allow_degenerate: false,
        }
    }

    pub fn with_degenerate_allowed(mut self) -> Self {
        self.allow_degenerate = true;
        self
    }

    /// Validate all invariants that do not need the grid itself.
    pub fn validate(&self) -> Result<()> {
        if !self.a.is_finite() || self.a <= 0.0 {
            return Err(Error::Parameter(format!("pinning value a must be positive, got {}", self.a)));
        }
        if self.a == 1.0 && !self.allow_degenerate {
            return Err(Error::DegeneratePinning);
        }
        if self.nx < 8 || self.ny < 8 {
            return Err(Error::Geometry(format!("grid too coarse: nx, ny must be >= 8, got {}x{}", self.nx, self.ny)));
        }
        if let OuterShape::Rectangle { width, height } = self.outer {
            if width <= 0.0 || height <= 0.0 {
                return Err(Error::Geometry("rectangle extents must be positive".into()));
            }
        }
        if let InclusionShape::Disc { radius, .. } = self.inclusion {
            if radius <= 0.0 {
                return Err(Error::Geometry("inclusion radius must be positive".into()));
            }
        }
        if let InclusionShape::Polygon { ref vertices } = self.inclusion {
            if vertices.len() < 3 {
                return Err(Error::Geometry("polygon inclusion needs at least 3 vertices".into()));
            }
        }
        let (hx, hy) = self.spacing();
        let h = hx.max(hy);
        // S̄₁ ⊂ Ω with a margin of at least two grid cells.
        let margin = self.inclusion_clearance();
        if margin < 2.0 * h {
            return Err(Error::Geometry(format!(
                "inclusion closure must lie at least two cells inside the outer boundary (clearance {margin:.4}, 2h = {:.4})",
                2.0 * h
            )));
        }
        // The inclusion must span at least 4 nodes in each direction.
        let (ex, ey) = self.inclusion_extent();
        if ex / hx < 4.0 || ey / hy < 4.0 {
            return Err(Error::Geometry(format!(
                "resolution too coarse to resolve the inclusion: {:.1} x {:.1} nodes across S1",
                ex / hx,
                ey / hy
            )));
        }
        Ok(())
    }

    /// Bounding box (x0, y0, width, height) of Ω.
    pub fn bounding_box(&self) -> (f64, f64, f64, f64) {
        match self.outer {
            OuterShape::UnitDisc => (-1.0, -1.0, 2.0, 2.0),
            OuterShape::Rectangle { width, height } => (0.0, 0.0, width, height),
        }
    }

    pub fn spacing(&self) -> (f64, f64) {
        let (_, _, w, h) = self.bounding_box();
        (w / self.nx as f64, h / self.ny as f64)
    }

    fn outer_contains(&self, x: f64, y: f64) -> bool {
        match self.outer {
            OuterShape::UnitDisc => x * x + y * y < 1.0,
            OuterShape::Rectangle { width, height } => x > 0.0 && x < width && y > 0.0 && y < height,
        }
    }

    /// Closed containment: ∂S₁ points count as S₁.
    fn inclusion_contains(&self, x: f64, y: f64) -> bool {
        match &self.inclusion {
            InclusionShape::Disc { cx, cy, radius } => {
                let dx = x - cx;
                let dy = y - cy;
                dx * dx + dy * dy <= radius * radius
            }
            InclusionShape::Polygon { vertices } => point_in_polygon(x, y, vertices),
        }
    }

    /// Distance from the inclusion closure to ∂Ω (clearance).
    fn inclusion_clearance(&self) -> f64 {
        match self.outer {
            OuterShape::UnitDisc => {
                let far = match &self.inclusion {
                    InclusionShape::Disc { cx, cy, radius } => (cx * cx + cy * cy).sqrt() + radius,
                    // |x| is convex so its maximum over the polygon is at a vertex.
                    InclusionShape::Polygon { vertices } => vertices
                        .iter()
                        .map(|v| (v[0] * v[0] + v[1] * v[1]).sqrt())
                        .fold(0.0, f64::max),
                };
                1.0 - far
            }
            OuterShape::Rectangle { width, height } => match &self.inclusion {
                InclusionShape::Disc { cx, cy, radius } => {
                    let d = cx.min(width - cx).min(*cy).min(height - cy);
                    d - radius
                }
                InclusionShape::Polygon { vertices } => vertices
                    .iter()
                    .map(|v| v[0].min(width - v[0]).min(v[1]).min(height - v[1]))
                    .fold(f64::INFINITY, f64::min),
            },
        }
    }

    /// Extent of the inclusion along x and y.
    fn inclusion_extent(&self) -> (f64, f64) {
        match &self.inclusion {
            InclusionShape::Disc { radius, .. } => (2.0 * radius, 2.0 * radius),
            InclusionShape::Polygon { vertices } => {
                let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
                for v in vertices {
                    x0 = x0.min(v[0]);
                    x1 = x1.max(v[0]);
                    y0 = y0.min(v[1]);
                    y1 = y1.max(v[1]);
                }
                (x1 - x0, y1 - y0)
            }
        }
    }

    /// Distance from (x, y) to ∂S₁ (used for boundary-layer fits).
    pub fn distance_to_interface(&self, x: f64, y: f64) -> f64 {
        match &self.inclusion {
            InclusionShape::Disc { cx, cy, radius } => {
                let r = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
                (r - radius).abs()
            }
            InclusionShape::Polygon { vertices } => {
                let mut d = f64::INFINITY;
                let n = vertices.len();
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    d = d.min(dist_point_segment(x, y, a, b));
                }
                d
            }
        }
    }

    /// Parse from flat `key = value` text. Recognized keys: `shape`
    /// (disc|rectangle), `radius` (outer disc, fixed at 1), `width`, `height`,
    /// `inclusion_radius`, `inclusion_cx`, `inclusion_cy`, `a`, `nx`, `ny`,
    /// `allow_degenerate`.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        Self::from_key_values(&kv)
    }

    pub fn from_key_values(kv: &BTreeMap<String, String>) -> Result<Self> {
        fn get_f64(kv: &BTreeMap<String, String>, k: &str, default: f64) -> Result<f64> {
            match kv.get(k) {
                Some(v) => v.parse::<f64>().map_err(|_| Error::Config(format!("key {k}: not a number: {v}"))),
                None => Ok(default),
            }
        }
        fn get_usize(kv: &BTreeMap<String, String>, k: &str, default: usize) -> Result<usize> {
            match kv.get(k) {
                Some(v) => v.parse::<usize>().map_err(|_| Error::Config(format!("key {k}: not an integer: {v}"))),
                None => Ok(default),
            }
        }

        let known = [
            "shape", "radius", "width", "height", "inclusion_radius", "inclusion_cx",
            "inclusion_cy", "a", "nx", "ny", "allow_degenerate",
        ];
        for k in kv.keys() {
            if !known.contains(&k.as_str()) {
                return Err(Error::Config(format!("unknown config key: {k}")));
            }
        }

        let shape = kv.get("shape").map(String::as_str).unwrap_or("disc");
        let outer = match shape {
            "disc" => {
                let r = get_f64(kv, "radius", 1.0)?;
                if (r - 1.0).abs() > 1e-12 {
                    return Err(Error::Config("outer disc radius is fixed at 1".into()));
                }
                OuterShape::UnitDisc
            }
            "rectangle" => OuterShape::Rectangle {
                width: get_f64(kv, "width", 1.0)?,
                height: get_f64(kv, "height", 1.0)?,
            },
            other => return Err(Error::Config(format!("unknown shape: {other}"))),
        };
        let default_center = match outer {
            OuterShape::UnitDisc => (0.0, 0.0),
            OuterShape::Rectangle { width, height } => (width / 2.0, height / 2.0),
        };
        let inclusion = InclusionShape::Disc {
            cx: get_f64(kv, "inclusion_cx", default_center.0)?,
            cy: get_f64(kv, "inclusion_cy", default_center.1)?,
            radius: get_f64(kv, "inclusion_radius", 0.5)?,
        };
        let allow_degenerate = match kv.get("allow_degenerate").map(String::as_str) {
            None => false,
            Some("true") | Some("1") => true,
            Some("false") | Some("0") => false,
            Some(v) => return Err(Error::Config(format!("allow_degenerate: expected true/false, got {v}"))),
        };
        let spec = DomainSpec {
            outer,
            inclusion,
            a: get_f64(kv, "a", 0.5)?,
            nx: get_usize(kv, "nx", 128)?,
            ny: get_usize(kv, "ny", 128)?,
            allow_degenerate,
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn dist_point_segment(x: f64, y: f64, a: [f64; 2], b: [f64; 2]) -> f64 {
    let (ax, ay) = (a[0], a[1]);
    let (bx, by) = (b[0], b[1]);
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((x - ax) * dx + (y - ay) * dy) / len2).clamp(0.0, 1.0) };
    let (px, py) = (ax + t * dx, ay + t * dy);
    ((x - px).powi(2) + (y - py).powi(2)).sqrt()
}

/// Even-odd ray casting; points on an edge resolve by the crossing rule,
/// which is fine for the measure-zero tie at node centers.
fn point_in_polygon(x: f64, y: f64, vertices: &[[f64; 2]]) -> bool {
    let n = vertices.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = (vertices[i][0], vertices[i][1]);
        let (xj, yj) = (vertices[j][0], vertices[j][1]);
        if ((yi > y) != (yj > y)) && (x < (xj - xi) * (y - yi) / (yj - yi) + xi) {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Region tag of a grid node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    S1,
    S2,
    Exterior,
}

/// Identity token tying fields to the grid they were built on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridId(pub u64);

impl std::fmt::Display for GridId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

/// Neighbor directions in stencil order: west, east, south, north.
pub const DIRS: [(i64, i64); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

/// Opposite direction index.
pub const fn opposite(dir: usize) -> usize {
    dir ^ 1
}

/// Uniform cell-centered grid over the bounding box of Ω.
#[derive(Debug, Clone)]
pub struct Grid2D {
    spec: DomainSpec,
    id: GridId,
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
    x0: f64,
    y0: f64,
    /// Region tag for every node of the nx × ny lattice.
    tags: Vec<Region>,
    /// Lattice index of each interior node, row-major order.
    interior_nodes: Vec<usize>,
    /// Lattice index -> interior index (-1 for exterior).
    interior_of: Vec<i32>,
    /// Per interior node: interior index of the 4 neighbors, -1 where the
    /// neighbor is exterior (a Dirichlet boundary face).
    neighbors: Vec<[i32; 4]>,
    /// Exterior lattice nodes adjacent to at least one interior node; these
    /// carry the Dirichlet data.
    boundary_nodes: Vec<usize>,
    n_s1: usize,
    n_s2: usize,
}

/// Build the grid for a validated spec.
///
/// Fails if the domain parameters are invalid or the resolution cannot
/// resolve the inclusion.
pub fn build_grid(spec: &DomainSpec) -> Result<Grid2D> {
    spec.validate()?;
    let (x0, y0, _, _) = spec.bounding_box();
    let (hx, hy) = spec.spacing();
    let (nx, ny) = (spec.nx, spec.ny);

    let mut tags = vec![Region::Exterior; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let x = x0 + (i as f64 + 0.5) * hx;
            let y = y0 + (j as f64 + 0.5) * hy;
            if spec.outer_contains(x, y) {
                tags[j * nx + i] = if spec.inclusion_contains(x, y) { Region::S1 } else { Region::S2 };
            }
        }
    }

    let mut interior_nodes = Vec::new();
    let mut interior_of = vec![-1i32; nx * ny];
    for (node, tag) in tags.iter().enumerate() {
        if *tag != Region::Exterior {
            interior_of[node] = interior_nodes.len() as i32;
            interior_nodes.push(node);
        }
    }
    let n_s1 = tags.iter().filter(|t| **t == Region::S1).count();
    let n_s2 = tags.iter().filter(|t| **t == Region::S2).count();
    if n_s1 < 4 {
        return Err(Error::Geometry(format!("resolution too coarse: only {n_s1} nodes inside S1")));
    }
    if n_s2 == 0 {
        return Err(Error::Geometry("no S2 nodes: inclusion fills the whole domain".into()));
    }

    let mut neighbors = Vec::with_capacity(interior_nodes.len());
    let mut is_boundary = vec![false; nx * ny];
    for &node in &interior_nodes {
        let (i, j) = ((node % nx) as i64, (node / nx) as i64);
        let mut nb = [-1i32; 4];
        for (d, (di, dj)) in DIRS.iter().enumerate() {
            let (ii, jj) = (i + di, j + dj);
            if ii >= 0 && ii < nx as i64 && jj >= 0 && jj < ny as i64 {
                let q = (jj as usize) * nx + ii as usize;
                if interior_of[q] >= 0 {
                    nb[d] = interior_of[q];
                } else {
                    is_boundary[q] = true;
                }
            }
            // Neighbors outside the lattice are staircase boundary positions
            // one cell away; they carry Dirichlet data but have no storage.
        }
        neighbors.push(nb);
    }
    let boundary_nodes = (0..nx * ny).filter(|&k| is_boundary[k]).collect();

    let mut hasher = Fnv1a::new();
    match spec.outer {
        OuterShape::UnitDisc => hasher.write_u64(1),
        OuterShape::Rectangle { width, height } => {
            hasher.write_u64(2);
            hasher.write_f64(width);
            hasher.write_f64(height);
        }
    }
    match &spec.inclusion {
        InclusionShape::Disc { cx, cy, radius } => {
            hasher.write_u64(10);
            hasher.write_f64(*cx);
            hasher.write_f64(*cy);
            hasher.write_f64(*radius);
        }
        InclusionShape::Polygon { vertices } => {
            hasher.write_u64(11);
            for v in vertices {
                hasher.write_f64(v[0]);
                hasher.write_f64(v[1]);
            }
        }
    }
    hasher.write_f64(spec.a);
    hasher.write_u64(spec.nx as u64);
    hasher.write_u64(spec.ny as u64);

    Ok(Grid2D {
        spec: spec.clone(),
        id: GridId(hasher.finish()),
        nx,
        ny,
        hx,
        hy,
        x0,
        y0,
        tags,
        interior_nodes,
        interior_of,
        neighbors,
        boundary_nodes,
        n_s1,
        n_s2,
    })
}

impl Grid2D {
    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn id(&self) -> GridId {
        self.id
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn spacing(&self) -> (f64, f64) {
        (self.hx, self.hy)
    }

    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    /// Number of interior (Ω) nodes.
    pub fn n_interior(&self) -> usize {
        self.interior_nodes.len()
    }

    pub fn n_region(&self, region: Region) -> usize {
        match region {
            Region::S1 => self.n_s1,
            Region::S2 => self.n_s2,
            Region::Exterior => self.nx * self.ny - self.n_s1 - self.n_s2,
        }
    }

    /// Lattice indices of interior nodes, row-major.
    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior_nodes
    }

    /// Exterior nodes adjacent to the interior; all carry Dirichlet data.
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    /// Per interior node, the interior indices of its 4 lattice neighbors
    /// (-1 marks a Dirichlet boundary face). Order: W, E, S, N.
    pub fn neighbors(&self) -> &[[i32; 4]] {
        &self.neighbors
    }

    pub fn tag_of_node(&self, node: usize) -> Region {
        self.tags[node]
    }

    /// Region of an interior node (by interior index).
    pub fn region(&self, k: usize) -> Region {
        self.tags[self.interior_nodes[k]]
    }

    /// Cell-center position of a lattice node.
    pub fn node_position(&self, node: usize) -> (f64, f64) {
        let (i, j) = (node % self.nx, node / self.nx);
        (self.x0 + (i as f64 + 0.5) * self.hx, self.y0 + (j as f64 + 0.5) * self.hy)
    }

    /// Cell-center position of an interior node.
    pub fn position(&self, k: usize) -> (f64, f64) {
        self.node_position(self.interior_nodes[k])
    }

    /// Position of the Dirichlet point across boundary face `dir` of interior
    /// node `k` (one cell outward).
    pub fn boundary_position(&self, k: usize, dir: usize) -> (f64, f64) {
        let (x, y) = self.position(k);
        let (di, dj) = DIRS[dir];
        (x + di as f64 * self.hx, y + dj as f64 * self.hy)
    }

    /// Interior index of the lattice node nearest to (x, y), if interior.
    pub fn interior_index_at(&self, x: f64, y: f64) -> Option<usize> {
        let i = ((x - self.x0) / self.hx - 0.5).round() as i64;
        let j = ((y - self.y0) / self.hy - 0.5).round() as i64;
        if i < 0 || j < 0 || i >= self.nx as i64 || j >= self.ny as i64 {
            return None;
        }
        let node = (j as usize) * self.nx + i as usize;
        let k = self.interior_of[node];
        (k >= 0).then_some(k as usize)
    }

    /// Distance from interior node `k` to the interface ∂S₁.
    pub fn interface_distance(&self, k: usize) -> f64 {
        let (x, y) = self.position(k);
        self.spec.distance_to_interface(x, y)
    }

    /// Grid-measured area of a region (node count × cell area).
    pub fn region_area(&self, region: Region) -> f64 {
        self.n_region(region) as f64 * self.cell_area()
    }

    pub fn check_field(&self, f: &ScalarField) -> Result<()> {
        if f.grid_id != self.id {
            return Err(Error::GridMismatch(format!("field built on grid {} used with grid {}", f.grid_id, self.id)));
        }
        if f.values.len() != self.n_interior() {
            return Err(Error::GridMismatch(format!(
                "field length {} does not match interior node count {}",
                f.values.len(),
                self.n_interior()
            )));
        }
        Ok(())
    }
}

/// One real value per interior node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid_id: GridId,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn constant(grid: &Grid2D, v: f64) -> Self {
        Self { grid_id: grid.id(), values: vec![v; grid.n_interior()] }
    }

    pub fn zeros(grid: &Grid2D) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn from_values(grid: &Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_interior() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.n_interior(),
                values.len()
            )));
        }
        Ok(Self { grid_id: grid.id(), values })
    }

    /// Evaluate a function of position at every interior node.
    pub fn from_fn(grid: &Grid2D, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let values = (0..grid.n_interior())
            .map(|k| {
                let (x, y) = grid.position(k);
                f(x, y)
            })
            .collect();
        Self { grid_id: grid.id(), values }
    }

    pub fn grid_id(&self) -> GridId {
        self.grid_id
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// NaN/Inf are forbidden after any solve.
    pub fn validate_finite(&self) -> Result<()> {
        if let Some((k, v)) = self.values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite value {v} at interior node {k}")));
        }
        Ok(())
    }
}

impl ScalarField {
    /// Constructor for solver internals that already know the lengths line up.
    pub(crate) fn new_unchecked(grid_id: GridId, values: Vec<f64>) -> Self {
        Self { grid_id, values }
    }
}

impl std::ops::Index<usize> for ScalarField {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.values[k]
    }
}

impl std::ops::IndexMut<usize> for ScalarField {
    fn index_mut(&mut self, k: usize) -> &mut f64 {
        &mut self.values[k]
    }
}

/// The step coefficient p: 1 on S₁, `a` on S₂.
#[derive(Debug, Clone)]
pub struct PinningField {
    a: f64,
    field: ScalarField,
}

/// Build the pinning field on a grid.
///
/// `a` must be positive; a = 1 is rejected unless the grid's spec opted into
/// degenerate pinning.
pub fn pinning_field(grid: &Grid2D, a: f64) -> Result<PinningField> {
    if !a.is_finite() || a <= 0.0 {
        return Err(Error::Parameter(format!("pinning value a must be positive, got {a}")));
    }
    if a == 1.0 && !grid.spec().allow_degenerate {
        return Err(Error::DegeneratePinning);
    }
    let mut field = ScalarField::zeros(grid);
    for k in 0..grid.n_interior() {
        field[k] = match grid.region(k) {
            Region::S1 => 1.0,
            Region::S2 => a,
            Region::Exterior => unreachable!("interior nodes are tagged S1 or S2"),
        };
    }
    Ok(PinningField { a, field })
}

impl PinningField {
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn as_field(&self) -> &ScalarField {
        &self.field
    }

    pub fn value(&self, k: usize) -> f64 {
        self.field[k]
    }

    /// The conductivity 1/p entering −div((1/p)∇·).
    pub fn conductivity(&self, grid: &Grid2D) -> ScalarField {
        let values = self.field.values().iter().map(|p| 1.0 / p).collect();
        ScalarField { grid_id: grid.id(), values }
    }

    /// Pinning value by region tag (p is constant per region).
    pub fn region_value(&self, region: Region) -> f64 {
        match region {
            Region::S1 => 1.0,
            _ => self.a,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn disc_grid_tags_match_containment() {
        let spec = DomainSpec::disc(0.5, 0.5, 64, 64);
        let grid = build_grid(&spec).unwrap();
        for k in 0..grid.n_interior() {
            let (x, y) = grid.position(k);
            let inside_s1 = x * x + y * y <= 0.25;
            match grid.region(k) {
                Region::S1 => assert!(inside_s1, "S1 node at ({x},{y}) outside |x|<=0.5"),
                Region::S2 => assert!(!inside_s1, "S2 node at ({x},{y}) inside |x|<=0.5"),
                Region::Exterior => unreachable!(),
            }
            assert!(x * x + y * y < 1.0, "interior node outside the unit disc");
        }
    }

    #[test]
    fn rectangle_inclusion_node_count_near_exact_area() {
        // Brute-force containment scan is the oracle for the node count; the
        // analytic area must agree within one boundary layer of cells.
        let spec = DomainSpec {
            outer: OuterShape::Rectangle { width: 1.0, height: 1.0 },
            inclusion: InclusionShape::Disc { cx: 0.5, cy: 0.5, radius: 0.2 },
            a: 0.5,
            nx: 32,
            ny: 32,
            allow_degenerate: false,
        };
        let grid = build_grid(&spec).unwrap();
        let (hx, hy) = grid.spacing();
        let mut scan_count = 0usize;
        for j in 0..32 {
            for i in 0..32 {
                let x = (i as f64 + 0.5) * hx;
                let y = (j as f64 + 0.5) * hy;
                if (x - 0.5).powi(2) + (y - 0.5).powi(2) <= 0.04 {
                    scan_count += 1;
                }
            }
        }
        assert_eq!(grid.n_region(Region::S1), scan_count);
        let area_exact = std::f64::consts::PI * 0.04;
        let layer_cells = (2.0 * std::f64::consts::PI * 0.2 / hx).ceil() + 4.0;
        let diff = (scan_count as f64 - area_exact / (hx * hy)).abs();
        assert!(diff <= layer_cells, "count {scan_count} deviates from area by {diff} cells");
    }

    #[test]
    fn inclusion_touching_boundary_is_rejected() {
        let spec = DomainSpec::disc(0.99, 0.5, 64, 64);
        assert!(matches!(build_grid(&spec), Err(Error::Geometry(_))));
    }

    #[test]
    fn coarse_inclusion_is_rejected() {
        // 2R/h < 4 nodes across the inclusion.
        let spec = DomainSpec::disc(0.2, 0.5, 8, 8);
        assert!(matches!(build_grid(&spec), Err(Error::Geometry(_))));
    }

    #[test]
    fn small_grids_are_rejected() {
        let spec = DomainSpec::disc(0.5, 0.5, 7, 64);
        assert!(matches!(spec.validate(), Err(Error::Geometry(_))));
    }

    #[test]
    fn pinning_values_per_region() {
        let grid = build_grid(&DomainSpec::disc(0.5, 0.5, 32, 32)).unwrap();
        let p = pinning_field(&grid, 0.5).unwrap();
        for k in 0..grid.n_interior() {
            match grid.region(k) {
                Region::S1 => assert_eq!(p.value(k), 1.0),
                Region::S2 => assert_eq!(p.value(k), 0.5),
                Region::Exterior => unreachable!(),
            }
        }
    }

    #[test]
    fn degenerate_pinning_needs_flag() {
        let grid = build_grid(&DomainSpec::disc(0.5, 0.5, 32, 32)).unwrap();
        assert!(matches!(pinning_field(&grid, 1.0), Err(Error::DegeneratePinning)));
        assert!(matches!(pinning_field(&grid, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(pinning_field(&grid, -2.0), Err(Error::Parameter(_))));

        let grid = build_grid(&DomainSpec::disc(0.5, 1.0, 32, 32).with_degenerate_allowed()).unwrap();
        let p = pinning_field(&grid, 1.0).unwrap();
        assert_eq!(p.value(0), 1.0);
    }

    #[test]
    fn s1_area_converges_first_order() {
        let exact = std::f64::consts::PI * 0.25;
        let mut errs = Vec::new();
        for n in [32usize, 64, 128] {
            let grid = build_grid(&DomainSpec::disc(0.5, 0.5, n, n)).unwrap();
            errs.push((grid.region_area(Region::S1) - exact).abs());
            let (hx, _) = grid.spacing();
            // staircase error is at most a couple of boundary layers of cells
            assert!(errs.last().unwrap() <= &(10.0 * 0.5 * hx), "area error too large at n={n}");
        }
        assert!(errs[2] < errs[0], "area error should shrink under refinement: {errs:?}");
    }

    #[test]
    fn config_roundtrip_and_unknown_key() {
        let text = "shape = disc\nradius = 1.0\ninclusion_radius = 0.4\na = 0.25\nnx = 48\nny = 48\n";
        let spec = DomainSpec::from_config_str(text).unwrap();
        assert_eq!(spec.nx, 48);
        assert_eq!(spec.a, 0.25);
        assert!(matches!(
            DomainSpec::from_config_str("shpae = disc\n"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            DomainSpec::from_config_str("radius = 2.0\n"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn core_types_are_shareable_across_threads() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<Grid2D>();
        assert_send_sync::<ScalarField>();
        assert_send_sync::<PinningField>();
        assert_send_sync::<crate::elliptic::EllipticOperator>();
        assert_send_sync::<crate::fields::DiscreteMeasure>();
    }

    #[test]
    fn polygon_inclusion_tags_and_distance() {
        // square inclusion centered in the unit disc
        let spec = DomainSpec {
            outer: OuterShape::UnitDisc,
            inclusion: InclusionShape::Polygon {
                vertices: vec![[-0.3, -0.3], [0.3, -0.3], [0.3, 0.3], [-0.3, 0.3]],
            },
            a: 2.0,
            nx: 48,
            ny: 48,
            allow_degenerate: false,
        };
        let grid = build_grid(&spec).unwrap();
        for k in 0..grid.n_interior() {
            let (x, y) = grid.position(k);
            let inside = x.abs() < 0.3 && y.abs() < 0.3;
            match grid.region(k) {
                Region::S1 => assert!(inside, "S1 node outside the square at ({x}, {y})"),
                Region::S2 => assert!(!(x.abs() < 0.29 && y.abs() < 0.29), "S2 node deep inside"),
                Region::Exterior => unreachable!(),
            }
        }
        // interface distance: at the center, the nearest edge is 0.3 away
        let d = spec.distance_to_interface(0.0, 0.0);
        assert!((d - 0.3).abs() < 1e-12);
        let d = spec.distance_to_interface(0.5, 0.0);
        assert!((d - 0.2).abs() < 1e-12);
    }

    #[test]
    fn boundary_nodes_are_exterior_and_adjacent() {
        let grid = build_grid(&DomainSpec::disc(0.5, 0.5, 32, 32)).unwrap();
        assert!(!grid.boundary_nodes().is_empty());
        for &b in grid.boundary_nodes() {
            assert_eq!(grid.tag_of_node(b), Region::Exterior);
        }
    }

    proptest! {
        #[test]
        fn region_counts_partition_interior(r in 0.15f64..0.7, n in 16usize..48, a in 0.05f64..4.0) {
            prop_assume!((a - 1.0).abs() > 1e-6);
            let spec = DomainSpec::disc(r, a, n, n);
            if let Ok(grid) = build_grid(&spec) {
                prop_assert_eq!(grid.n_region(Region::S1) + grid.n_region(Region::S2), grid.n_interior());
                // every interior node has exactly one region tag
                for k in 0..grid.n_interior() {
                    prop_assert!(matches!(grid.region(k), Region::S1 | Region::S2));
                }
            }
        }
    }
}
