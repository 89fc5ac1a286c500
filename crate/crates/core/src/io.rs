//! CSV export/import of fields and measures, with a JSON sidecar carrying
//! the grid fingerprint. Writes are atomic (temp file + rename).
//!
//! CSV schema: header `x,y,value`, interior nodes in row-major order, floats
//! at 17 significant digits so round-trips are lossless.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::DiscreteMeasure;
use crate::geometry::{Grid2D, ScalarField};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub grid_hash: String,
    pub units: String,
    pub kind: String,
    pub nx: usize,
    pub ny: usize,
}

fn sidecar_path(csv: &Path) -> PathBuf {
    let mut os = csv.as_os_str().to_owned();
    os.push(".meta.json");
    PathBuf::from(os)
}

/// Write bytes atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn render_csv(grid: &Grid2D, values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 24 + 16);
    out.push_str("x,y,value\n");
    for (k, v) in values.iter().enumerate() {
        let (x, y) = grid.position(k);
        out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", x, y, v));
    }
    out
}

fn export_values(path: &Path, grid: &Grid2D, values: &[f64], kind: &str, units: &str) -> Result<()> {
    write_atomic(path, render_csv(grid, values).as_bytes())?;
    let (nx, ny) = grid.dims();
    let sidecar = Sidecar {
        grid_hash: grid.id().to_string(),
        units: units.to_string(),
        kind: kind.to_string(),
        nx,
        ny,
    };
    let json = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    write_atomic(&sidecar_path(path), json.as_bytes())
}

pub fn export_field(path: &Path, grid: &Grid2D, field: &ScalarField, units: &str) -> Result<()> {
    grid.check_field(field)?;
    export_values(path, grid, field.values(), "scalar_field", units)
}

pub fn export_measure(path: &Path, grid: &Grid2D, mu: &DiscreteMeasure, units: &str) -> Result<()> {
    if mu.grid_id() != grid.id() {
        return Err(Error::GridMismatch("measure lives on a different grid".into()));
    }
    export_values(path, grid, mu.density(), "measure_density", units)
}

fn import_values(path: &Path, grid: &Grid2D, expect_kind: &str) -> Result<Vec<f64>> {
    let meta: Sidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)
        .map_err(|e| Error::Config(format!("sidecar parse: {e}")))?;
    if meta.grid_hash != grid.id().to_string() {
        return Err(Error::GridMismatch(format!(
            "file was written on grid {} but import target is {}",
            meta.grid_hash,
            grid.id()
        )));
    }
    if meta.kind != expect_kind {
        return Err(Error::Config(format!("expected kind {expect_kind}, sidecar says {}", meta.kind)));
    }
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some("x,y,value") => {}
        other => return Err(Error::Config(format!("bad CSV header: {other:?}"))),
    }
    let mut values = Vec::with_capacity(grid.n_interior());
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v = line
            .rsplit(',')
            .next()
            .and_then(|s| s.parse::<f64>().ok())
            .ok_or_else(|| Error::Config(format!("line {}: bad value field", i + 2)))?;
        values.push(v);
    }
    if values.len() != grid.n_interior() {
        return Err(Error::GridMismatch(format!(
            "CSV carries {} rows, grid has {} interior nodes",
            values.len(),
            grid.n_interior()
        )));
    }
    Ok(values)
}

pub fn import_field(path: &Path, grid: &Grid2D) -> Result<ScalarField> {
    ScalarField::from_values(grid, import_values(path, grid, "scalar_field")?)
}

pub fn import_measure(path: &Path, grid: &Grid2D) -> Result<DiscreteMeasure> {
    DiscreteMeasure::from_density(grid, import_values(path, grid, "measure_density")?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, DomainSpec};
    use crate::util::SplitMix64;
    use proptest::prelude::*;

    fn tmpdir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("vortexpin-io-{tag}-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn field_round_trip_is_bit_exact() {
        let grid = build_grid(&DomainSpec::disc(0.5, 0.5, 16, 16)).unwrap();
        let mut rng = SplitMix64::new(1);
        let field = ScalarField::from_fn(&grid, |_, _| rng.range(-10.0, 10.0));
        let path = tmpdir("field").join("h.csv");
        export_field(&path, &grid, &field, "dimensionless").unwrap();
        let back = import_field(&path, &grid).unwrap();
        assert_eq!(field.values(), back.values());
    }

    #[test]
    fn grid_mismatch_is_detected() {
        let grid = build_grid(&DomainSpec::disc(0.5, 0.5, 16, 16)).unwrap();
        let other = build_grid(&DomainSpec::disc(0.5, 0.5, 24, 24)).unwrap();
        let field = ScalarField::zeros(&grid);
        let path = tmpdir("mismatch").join("h.csv");
        export_field(&path, &grid, &field, "dimensionless").unwrap();
        assert!(matches!(import_field(&path, &other), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn truncated_csv_is_rejected() {
        let grid = build_grid(&DomainSpec::disc(0.5, 0.5, 16, 16)).unwrap();
        let field = ScalarField::zeros(&grid);
        let path = tmpdir("trunc").join("h.csv");
        export_field(&path, &grid, &field, "dimensionless").unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let cut: String = text.lines().take(grid.n_interior() / 2).collect::<Vec<_>>().join("\n");
        fs::write(&path, cut).unwrap();
        assert!(matches!(import_field(&path, &grid), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn measure_round_trip_and_kind_check() {
        let grid = build_grid(&DomainSpec::disc(0.5, 0.5, 16, 16)).unwrap();
        let mu = DiscreteMeasure::point_mass(&grid, 7, 2.5);
        let path = tmpdir("measure").join("mu.csv");
        export_measure(&path, &grid, &mu, "density").unwrap();
        let back = import_measure(&path, &grid).unwrap();
        assert_eq!(mu.density(), back.density());
        assert!(matches!(import_field(&path, &grid), Err(Error::Config(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn round_trip_preserves_arbitrary_values(seed in 0u64..1000) {
            let grid = build_grid(&DomainSpec::disc(0.5, 0.5, 12, 12)).unwrap();
            let mut rng = SplitMix64::new(seed);
            let field = ScalarField::from_fn(&grid, |_, _| {
                // spread magnitudes across many decades
                let mag = rng.range(-300.0, 300.0);
                rng.range(-1.0, 1.0) * mag.exp2()
            });
            let path = tmpdir(&format!("prop{seed}")).join("f.csv");
            export_field(&path, &grid, &field, "u").unwrap();
            let back = import_field(&path, &grid).unwrap();
            prop_assert_eq!(field.values(), back.values());
        }
    }
}
