//! Flat key=value run configuration with dotted sections. CLI flags override
//! file keys; everything is validated before any solve starts.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context};
use vortexpin::DomainSpec;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub spec: DomainSpec,
    pub omega: f64,
    pub tol: f64,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Resolved flat key/value view, echoed into run metadata.
    pub echo: BTreeMap<String, String>,
}

pub const KNOWN_KEYS: &[&str] = &[
    "domain.shape",
    "domain.radius",
    "domain.width",
    "domain.height",
    "domain.inclusion_radius",
    "domain.inclusion_cx",
    "domain.inclusion_cy",
    "domain.a",
    "domain.nx",
    "domain.ny",
    "domain.allow_degenerate",
    "solver.omega",
    "solver.tol",
    "out.dir",
    "seed",
    "obstacle.lambda",
    "obstacle.lambda_factor",
    "sweep.factors",
    "sweep.lambdas",
    "radial.r",
    "radial.a",
    "radial.n_terms",
    "radial.m_shoot",
    "ueps.eps",
    "green.source",
    "green.eps",
    "accept.scale",
];

/// Parse `key = value` lines; `#` starts a comment.
pub fn parse_kv_file(text: &str) -> anyhow::Result<BTreeMap<String, String>> {
    let mut kv = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected key = value, got {raw:?}", lineno + 1);
        };
        let key = k.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            bail!("unknown config key: {key}");
        }
        kv.insert(key, v.trim().to_string());
    }
    Ok(kv)
}

pub fn get_f64(kv: &BTreeMap<String, String>, key: &str, default: f64) -> anyhow::Result<f64> {
    match kv.get(key) {
        Some(v) => v.parse::<f64>().with_context(|| format!("key {key}: not a number: {v}")),
        None => Ok(default),
    }
}

pub fn get_usize(kv: &BTreeMap<String, String>, key: &str, default: usize) -> anyhow::Result<usize> {
    match kv.get(key) {
        Some(v) => v.parse::<usize>().with_context(|| format!("key {key}: not an integer: {v}")),
        None => Ok(default),
    }
}

pub fn get_list(kv: &BTreeMap<String, String>, key: &str) -> anyhow::Result<Option<Vec<f64>>> {
    match kv.get(key) {
        None => Ok(None),
        Some(v) => {
            let vals: Result<Vec<f64>, _> = v.split(',').map(|s| s.trim().parse::<f64>()).collect();
            Ok(Some(vals.with_context(|| format!("key {key}: bad list: {v}"))?))
        }
    }
}

impl RunConfig {
    /// Build from the merged key/value map (file + flag overrides applied by
    /// the caller).
    pub fn resolve(kv: BTreeMap<String, String>) -> anyhow::Result<RunConfig> {
        // translate the domain.* section into the geometry parser's keys
        let mut dom = BTreeMap::new();
        for (k, v) in &kv {
            if let Some(short) = k.strip_prefix("domain.") {
                dom.insert(short.to_string(), v.clone());
            }
        }
        let spec = DomainSpec::from_key_values(&dom).map_err(|e| anyhow::anyhow!("{e}"))?;
        let omega = get_f64(&kv, "solver.omega", 1.5)?;
        let tol = get_f64(&kv, "solver.tol", 1e-9)?;
        if !(omega > 0.0 && omega < 2.0) {
            bail!("solver.omega must lie in (0, 2), got {omega}");
        }
        if !(tol > 0.0) {
            bail!("solver.tol must be positive, got {tol}");
        }
        let out_dir = std::env::var("VORTEXPIN_OUT")
            .ok()
            .or_else(|| kv.get("out.dir").cloned())
            .unwrap_or_else(|| "out".to_string());
        let seed = kv
            .get("seed")
            .map(|s| s.parse::<u64>().context("seed: not an integer"))
            .transpose()?
            .unwrap_or(0);

        let mut echo = kv;
        echo.insert("solver.omega".into(), format!("{omega}"));
        echo.insert("solver.tol".into(), format!("{tol:e}"));
        echo.insert("out.dir".into(), out_dir.clone());
        echo.insert("seed".into(), format!("{seed}"));

        Ok(RunConfig { spec, omega, tol, out_dir: PathBuf::from(out_dir), seed, echo })
    }
}
