//! Batch front-end: parses a flat key=value config, dispatches subcommands,
//! and writes CSV/JSON artifacts atomically.
//!
//! Exit codes: 0 success, 1 solver failure, 2 configuration error.

mod config;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::{get_f64, get_list, get_usize, parse_kv_file, RunConfig};
use vortexpin::acceptance::{run_all, Scale};
use vortexpin::fields::{green_column, solve_h0_with_stats, DiscreteMeasure};
use vortexpin::finite_eps::{decay_fit, solve_ueps};
use vortexpin::io::{export_field, export_measure, write_atomic};
use vortexpin::obstacle::{critical_lambdas, minimality_probe, solve_obstacle_warm, sweep_lambda};
use vortexpin::util::SplitMix64;
use vortexpin::radial::{radial_lambdas, series_coefficients, shoot_ode, small_a_check, RadialParams};
use vortexpin::{build_grid, pinning_field, Error, Grid2D, PinningField, ScalarField};

#[derive(Parser)]
#[command(name = "vortexpin", version, about = "Mesoscale vortex-pinning solver suite")]
struct Cli {
    /// Flat key=value config file; flags override file keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (also via VORTEXPIN_OUT).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for randomized probes.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct DomainFlags {
    /// Inclusion radius R.
    #[arg(long = "R", visible_alias = "inclusion-radius")]
    inclusion_radius: Option<f64>,
    /// Pinning value on the annulus.
    #[arg(long)]
    a: Option<f64>,
    /// Grid resolution (nx = ny).
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the vortex-free limit field h0 and report the critical thresholds.
    SolveH0 {
        #[command(flatten)]
        domain: DomainFlags,
    },
    /// Solve one or more pinned Green-function columns.
    Green {
        #[command(flatten)]
        domain: DomainFlags,
        /// Source position "x,y" (repeatable).
        #[arg(long = "source")]
        sources: Vec<String>,
        /// Also solve the boundary-layer-weighted column at this ε.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Solve the obstacle problem at one applied-field ratio.
    Obstacle {
        #[command(flatten)]
        domain: DomainFlags,
        /// Absolute λ.
        #[arg(long)]
        lambda: Option<f64>,
        /// λ as a multiple of the computed λ0 (default 1.5).
        #[arg(long)]
        lambda_factor: Option<f64>,
        /// Probe minimality against this many seeded random trial measures.
        #[arg(long, default_value_t = 0)]
        probe_trials: usize,
    },
    /// Sweep a λ list and report per-λ summaries plus mask nesting.
    Sweep {
        #[command(flatten)]
        domain: DomainFlags,
        /// Comma-separated absolute λ values.
        #[arg(long)]
        lambdas: Option<String>,
        /// Comma-separated multiples of λ0.
        #[arg(long)]
        factors: Option<String>,
        /// Dump per-λ h★ and μ★ CSV files.
        #[arg(long)]
        dump_fields: bool,
    },
    /// Radial series + shooting on the unit disc.
    Radial {
        #[arg(long = "R")]
        big_r: Option<f64>,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        n_terms: Option<usize>,
        #[arg(long)]
        m_shoot: Option<usize>,
    },
    /// Boundary-layer minimizer runs over an ε list.
    Ueps {
        #[command(flatten)]
        domain: DomainFlags,
        /// Comma-separated ε values.
        #[arg(long)]
        eps: Option<String>,
    },
    /// Run the verification suite and write one JSON line per criterion.
    Accept {
        /// full (reference grids) or desk (64²-class).
        #[arg(long)]
        scale: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vortexpin: {e:#}");
            // configuration problems exit 2, solver problems exit 1
            let config_class = e.downcast_ref::<Error>().map_or_else(
                || true, // anyhow-level errors are config/CLI problems
                |ce| {
                    matches!(
                        ce,
                        Error::Config(_) | Error::Parameter(_) | Error::Geometry(_) | Error::DegeneratePinning
                    )
                },
            );
            if config_class {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn load_kv(cli_config: &Option<PathBuf>) -> anyhow::Result<BTreeMap<String, String>> {
    match cli_config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
            parse_kv_file(&text)
        }
        None => Ok(BTreeMap::new()),
    }
}

fn apply_domain_flags(kv: &mut BTreeMap<String, String>, d: &DomainFlags) {
    if let Some(r) = d.inclusion_radius {
        kv.insert("domain.inclusion_radius".into(), r.to_string());
    }
    if let Some(a) = d.a {
        kv.insert("domain.a".into(), a.to_string());
    }
    if let Some(nx) = d.nx {
        kv.insert("domain.nx".into(), nx.to_string());
        if d.ny.is_none() {
            kv.insert("domain.ny".into(), nx.to_string());
        }
    }
    if let Some(ny) = d.ny {
        kv.insert("domain.ny".into(), ny.to_string());
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let mut kv = load_kv(&cli.config)?;
    if let Some(out) = &cli.out {
        kv.insert("out.dir".into(), out.display().to_string());
    }
    if let Some(seed) = cli.seed {
        kv.insert("seed".into(), seed.to_string());
    }

    match cli.command {
        Command::SolveH0 { domain } => {
            apply_domain_flags(&mut kv, &domain);
            let cfg = RunConfig::resolve(kv)?;
            cmd_solve_h0(&cfg)
        }
        Command::Green { domain, sources, eps } => {
            apply_domain_flags(&mut kv, &domain);
            if !sources.is_empty() {
                kv.insert("green.source".into(), sources.join(";"));
            }
            if let Some(e) = eps {
                kv.insert("green.eps".into(), e.to_string());
            }
            let cfg = RunConfig::resolve(kv)?;
            cmd_green(&cfg)
        }
        Command::Obstacle { domain, lambda, lambda_factor, probe_trials } => {
            apply_domain_flags(&mut kv, &domain);
            if let Some(l) = lambda {
                kv.insert("obstacle.lambda".into(), l.to_string());
            }
            if let Some(f) = lambda_factor {
                kv.insert("obstacle.lambda_factor".into(), f.to_string());
            }
            let cfg = RunConfig::resolve(kv)?;
            cmd_obstacle(&cfg, probe_trials)
        }
        Command::Sweep { domain, lambdas, factors, dump_fields } => {
            apply_domain_flags(&mut kv, &domain);
            if let Some(l) = lambdas {
                kv.insert("sweep.lambdas".into(), l);
            }
            if let Some(f) = factors {
                kv.insert("sweep.factors".into(), f);
            }
            let cfg = RunConfig::resolve(kv)?;
            cmd_sweep(&cfg, dump_fields)
        }
        Command::Radial { big_r, a, n_terms, m_shoot } => {
            if let Some(r) = big_r {
                kv.insert("radial.r".into(), r.to_string());
            }
            if let Some(a) = a {
                kv.insert("radial.a".into(), a.to_string());
            }
            if let Some(n) = n_terms {
                kv.insert("radial.n_terms".into(), n.to_string());
            }
            if let Some(m) = m_shoot {
                kv.insert("radial.m_shoot".into(), m.to_string());
            }
            cmd_radial(kv)
        }
        Command::Ueps { domain, eps } => {
            apply_domain_flags(&mut kv, &domain);
            if let Some(e) = eps {
                kv.insert("ueps.eps".into(), e);
            }
            let cfg = RunConfig::resolve(kv)?;
            cmd_ueps(&cfg)
        }
        Command::Accept { scale } => {
            if let Some(s) = scale {
                kv.insert("accept.scale".into(), s);
            }
            cmd_accept(kv)
        }
    }
}

fn setup(cfg: &RunConfig) -> anyhow::Result<(Grid2D, PinningField)> {
    let grid = build_grid(&cfg.spec)?;
    let p = pinning_field(&grid, cfg.spec.a)?;
    Ok((grid, p))
}

/// Envelope shared by every artifact: config echo, versions, grid hash,
/// wall time.
fn envelope(cfg_echo: &BTreeMap<String, String>, grid_hash: Option<String>, started: Instant, data: serde_json::Value) -> serde_json::Value {
    json!({
        "tool": "vortexpin",
        "version": env!("CARGO_PKG_VERSION"),
        "grid_hash": grid_hash,
        "config": cfg_echo,
        "wall_time_s": started.elapsed().as_secs_f64(),
        "data": data,
    })
}

fn write_json(path: &Path, value: &serde_json::Value) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

fn cmd_solve_h0(cfg: &RunConfig) -> anyhow::Result<()> {
    let t = Instant::now();
    let (grid, p) = setup(cfg)?;
    let (h0, stats) = solve_h0_with_stats(&grid, &p)?;
    let crit = critical_lambdas(&grid, &p, &h0)?;
    export_field(&cfg.out_dir.join("h0.csv"), &grid, &h0, "dimensionless")?;
    let data = json!({
        "lambda1": crit.lambda1,
        "lambda2": crit.lambda2,
        "lambda0": crit.lambda0,
        "h0_min": h0.min(),
        "h0_max": h0.max(),
        "iterations": stats.iterations,
    });
    let doc = envelope(&cfg.echo, Some(grid.id().to_string()), t, data);
    write_json(&cfg.out_dir.join("h0.json"), &doc)?;
    println!("h0 solved on {}x{}: lambda0 = {:.6}", cfg.spec.nx, cfg.spec.ny, crit.lambda0);
    Ok(())
}

fn cmd_green(cfg: &RunConfig) -> anyhow::Result<()> {
    let t = Instant::now();
    let (grid, p) = setup(cfg)?;
    let spec_sources = cfg.echo.get("green.source").cloned().unwrap_or_else(|| "0,0".to_string());
    let mut sources = Vec::new();
    for part in spec_sources.split(';') {
        let Some((xs, ys)) = part.split_once(',') else {
            anyhow::bail!("green.source: expected \"x,y\", got {part:?}");
        };
        let (x, y): (f64, f64) = (xs.trim().parse()?, ys.trim().parse()?);
        let k = grid
            .interior_index_at(x, y)
            .ok_or_else(|| anyhow::anyhow!("source ({x}, {y}) is not an interior node"))?;
        sources.push(k);
    }
    let eps = get_f64(&cfg.echo, "green.eps", f64::NAN)?;
    let coeff_pin = p.conductivity(&grid);
    let coeff_eps = if eps.is_finite() {
        let sol = solve_ueps(&grid, &p, eps)?;
        Some(ScalarField::from_values(
            &grid,
            sol.u.values().iter().map(|u| 1.0 / (u * u)).collect(),
        )?)
    } else {
        None
    };

    let mut rows = Vec::new();
    for (i, &src) in sources.iter().enumerate() {
        let g0 = green_column(&grid, &coeff_pin, src)?;
        export_field(&cfg.out_dir.join(format!("green0_{i}.csv")), &grid, &g0.field, "green")?;
        let mut row = json!({
            "source_index": src,
            "source_position": grid.position(src),
            "g0_max": g0.field.max(),
        });
        if let Some(ce) = &coeff_eps {
            let geps = green_column(&grid, ce, src)?;
            export_field(&cfg.out_dir.join(format!("green_eps_{i}.csv")), &grid, &geps.field, "green")?;
            let mut sup = 0.0f64;
            let (sx, sy) = grid.position(src);
            for k in 0..grid.n_interior() {
                let (x, y) = grid.position(k);
                if (x - sx).hypot(y - sy) >= 0.2 {
                    sup = sup.max((geps.field[k] - g0.field[k]).abs());
                }
            }
            row["sup_diff_off_diagonal"] = json!(sup);
        }
        rows.push(row);
    }
    let doc = envelope(&cfg.echo, Some(grid.id().to_string()), t, json!({ "columns": rows }));
    write_json(&cfg.out_dir.join("green.json"), &doc)?;
    println!("{} green column(s) written to {}", sources.len(), cfg.out_dir.display());
    Ok(())
}

fn resolve_lambda(cfg: &RunConfig, grid: &Grid2D, p: &PinningField) -> anyhow::Result<(f64, f64)> {
    let h0 = vortexpin::fields::solve_h0(grid, p)?;
    let crit = critical_lambdas(grid, p, &h0)?;
    let lambda = if let Some(l) = cfg.echo.get("obstacle.lambda") {
        l.parse::<f64>()?
    } else {
        let f = get_f64(&cfg.echo, "obstacle.lambda_factor", 1.5)?;
        f * crit.lambda0
    };
    Ok((lambda, crit.lambda0))
}

fn cmd_obstacle(cfg: &RunConfig, probe_trials: usize) -> anyhow::Result<()> {
    let t = Instant::now();
    let (grid, p) = setup(cfg)?;
    let (lambda, lambda0) = resolve_lambda(cfg, &grid, &p)?;
    let sol = solve_obstacle_warm(&grid, &p, lambda, None, cfg.omega, cfg.tol)?;
    let e = vortexpin::fields::energy_e_lambda_with_field(&grid, &p, lambda, &sol.mu_star, &sol.h_star)?;

    let probe = if probe_trials > 0 {
        let mut rng = SplitMix64::new(cfg.seed);
        let trials: Vec<DiscreteMeasure> = (0..probe_trials)
            .map(|_| {
                let mut mu = DiscreteMeasure::zero(&grid);
                for _ in 0..8 {
                    let k = rng.index(grid.n_interior());
                    mu.density_mut()[k] = rng.range(0.0, 2.0);
                }
                mu
            })
            .collect();
        Some(minimality_probe(&grid, &p, lambda, &sol, &trials)?)
    } else {
        None
    };

    export_field(&cfg.out_dir.join("h_star.csv"), &grid, &sol.h_star, "dimensionless")?;
    export_measure(&cfg.out_dir.join("mu_star.csv"), &grid, &sol.mu_star, "density")?;
    let masks = ScalarField::from_values(
        &grid,
        (0..grid.n_interior())
            .map(|k| {
                if sol.w1[k] {
                    1.0
                } else if sol.w2[k] {
                    2.0
                } else {
                    0.0
                }
            })
            .collect(),
    )?;
    export_field(&cfg.out_dir.join("masks.csv"), &grid, &masks, "mask")?;

    let data = json!({
        "lambda": lambda,
        "lambda0": lambda0,
        "mu_mass": sol.mu_star.total_variation(&grid),
        "w1_cells": sol.w1_cells(),
        "w2_cells": sol.w2_cells(),
        "E_lambda": e,
        "iters": sol.stats.iterations,
        "minimality": probe.as_ref().map(|r| json!({
            "trials": r.trials.len(),
            "violations": r.violations,
            "min_margin": r.trials.iter().map(|t| t.margin).fold(f64::INFINITY, f64::min),
        })),
    });
    let doc = envelope(&cfg.echo, Some(grid.id().to_string()), t, data);
    write_json(&cfg.out_dir.join("obstacle.json"), &doc)?;
    println!(
        "obstacle at lambda = {lambda:.6}: mass {:.6}, |w1| = {}, |w2| = {}",
        sol.mu_star.total_variation(&grid),
        sol.w1_cells(),
        sol.w2_cells()
    );
    Ok(())
}

fn cmd_sweep(cfg: &RunConfig, dump_fields: bool) -> anyhow::Result<()> {
    let t = Instant::now();
    let (grid, p) = setup(cfg)?;
    let h0 = vortexpin::fields::solve_h0(&grid, &p)?;
    let crit = critical_lambdas(&grid, &p, &h0)?;
    let lambdas: Vec<f64> = if let Some(ls) = get_list(&cfg.echo, "sweep.lambdas")? {
        ls
    } else if let Some(fs) = get_list(&cfg.echo, "sweep.factors")? {
        fs.iter().map(|f| f * crit.lambda0).collect()
    } else {
        [0.8, 0.9, 0.95, 1.0, 1.05, 1.15, 1.3, 1.5].iter().map(|f| f * crit.lambda0).collect()
    };
    let (report, sols) = sweep_lambda(&grid, &p, &lambdas)?;
    if dump_fields {
        for (i, sol) in sols.iter().enumerate() {
            export_field(&cfg.out_dir.join(format!("h_star_{i}.csv")), &grid, &sol.h_star, "dimensionless")?;
            export_measure(&cfg.out_dir.join(format!("mu_star_{i}.csv")), &grid, &sol.mu_star, "density")?;
        }
    }
    let data = json!({
        "lambda0": crit.lambda0,
        "lambda1": crit.lambda1,
        "lambda2": crit.lambda2,
        "rows": report.rows,
        "nesting_violations": report.nesting_violations,
        "monotone": report.nesting_violations == 0,
        "aborted": report.aborted,
    });
    let doc = envelope(&cfg.echo, Some(grid.id().to_string()), t, data);
    write_json(&cfg.out_dir.join("sweep.json"), &doc)?;
    println!(
        "sweep over {} lambda(s): nesting violations {}",
        report.rows.len(),
        report.nesting_violations
    );
    if let Some(reason) = report.aborted {
        return Err(Error::Numeric(format!("sweep aborted with partial results: {reason}")).into());
    }
    Ok(())
}

fn cmd_radial(kv: BTreeMap<String, String>) -> anyhow::Result<()> {
    let t = Instant::now();
    let big_r = get_f64(&kv, "radial.r", 0.55)?;
    let a = get_f64(&kv, "radial.a", 0.5)?;
    let n_terms = get_usize(&kv, "radial.n_terms", 40)?;
    let m_shoot = get_usize(&kv, "radial.m_shoot", 4096)?;
    let out_dir = PathBuf::from(
        std::env::var("VORTEXPIN_OUT").ok().or_else(|| kv.get("out.dir").cloned()).unwrap_or_else(|| "out".into()),
    );
    let params = RadialParams::new(big_r, a, n_terms, m_shoot);
    let series = series_coefficients(&params)?;
    let profile = shoot_ode(&params)?;
    let crit = radial_lambdas(&params)?;

    // optional small-a analysis: defined for R in (1/2, 1)
    let small = if big_r > 0.5 { small_a_check(big_r, n_terms).ok() } else { None };

    let mut csv = String::from("r,h_series,h_shooting,remainder\n");
    for (r, h) in profile.rs.iter().zip(&profile.hs) {
        let ev = series.eval(*r)?;
        csv.push_str(&format!("{:.16e},{:.16e},{:.16e},{:.3e}\n", r, ev.value, h, ev.remainder));
    }
    write_atomic(&out_dir.join("radial_profile.csv"), csv.as_bytes())?;

    let data = json!({
        "R": big_r,
        "a": a,
        "a0": series.a0,
        "alpha": series.alpha,
        "beta": series.beta,
        "lambda1": crit.lambda1,
        "lambda2": crit.lambda2,
        "lambda0": crit.lambda0,
        "lambda2_below_lambda1": crit.lambda2 < crit.lambda1,
        "c0": small.as_ref().map(|s| s.c0),
        "holds": small.as_ref().map(|s| s.holds),
    });
    let doc = envelope(&kv, None, t, data);
    write_json(&out_dir.join("radial.json"), &doc)?;
    println!(
        "radial R = {big_r}, a = {a}: a0 = {:.6}, lambda1 = {:.4}, lambda2 = {:.4}",
        series.a0, crit.lambda1, crit.lambda2
    );
    Ok(())
}

fn cmd_ueps(cfg: &RunConfig) -> anyhow::Result<()> {
    let t = Instant::now();
    let (grid, p) = setup(cfg)?;
    let eps_list = get_list(&cfg.echo, "ueps.eps")?.unwrap_or_else(|| vec![0.08]);
    let mut rows = Vec::new();
    for (i, &eps) in eps_list.iter().enumerate() {
        let sol = solve_ueps(&grid, &p, eps)?;
        let fit = decay_fit(&grid, &p, &sol)?;
        export_field(&cfg.out_dir.join(format!("u_eps_{i}.csv")), &grid, &sol.u, "dimensionless")?;
        rows.push(json!({
            "epsilon": eps,
            "energy": sol.energy,
            "min_u": sol.u.min(),
            "max_u": sol.u.max(),
            "delta_hat": fit.delta_hat,
            "fit_r2": fit.r2,
            "bounds_ok": sol.bounds_ok,
            "newton_iters": sol.stats.iterations,
        }));
        println!("ueps eps = {eps}: energy {:.6}, u in ({:.4}, {:.4})", sol.energy, sol.u.min(), sol.u.max());
    }
    let doc = envelope(&cfg.echo, Some(grid.id().to_string()), t, json!({ "runs": rows }));
    write_json(&cfg.out_dir.join("ueps.json"), &doc)?;
    Ok(())
}

fn cmd_accept(kv: BTreeMap<String, String>) -> anyhow::Result<()> {
    let scale_name = kv.get("accept.scale").map(String::as_str).unwrap_or("full").to_string();
    let scale = Scale::parse(&scale_name)
        .ok_or_else(|| anyhow::anyhow!("accept.scale must be full or desk, got {scale_name}"))?;
    let out_dir = PathBuf::from(
        std::env::var("VORTEXPIN_OUT").ok().or_else(|| kv.get("out.dir").cloned()).unwrap_or_else(|| "out".into()),
    );
    let outcomes = run_all(scale);
    let mut lines = String::new();
    let mut all_pass = true;
    for c in &outcomes {
        lines.push_str(&serde_json::to_string(c)?);
        lines.push('\n');
        let status = if c.passed { "PASS" } else { "FAIL" };
        println!("[{status}] criterion {:2} ({:.1} s): {} — {}", c.index, c.seconds, c.name, c.details);
        all_pass &= c.passed;
    }
    write_atomic(&out_dir.join("acceptance.jsonl"), lines.as_bytes())?;
    if !all_pass {
        return Err(Error::Numeric("acceptance criteria failed".into()).into());
    }
    Ok(())
}
