use anyhow::Context;
use clap::{Parser, Subcommand};
use fraclab::appendix_suite::{
    critical_log_check, log_grid, nonlinear_weight_table, table_records, weight_bubble_table, weight_product_table, write_csv, RowOutcome,
};
use fraclab::bubbles::{Ambient, BubbleFamily, PairKind, ZMode};
use fraclab::fraclap::{check_bubble_pde, check_eigen_relation_dilation, default_r_grid};
use fraclab::quadrature::{FunctionRepr, QuadratureSpec};
use fraclab::specfun::{hyp2f1_abcz, hyp2f1_zero_count};
use fraclab::stability_lab::{project_to_manifold, q_gamma_drift, q_gamma_sweep, spectral_gap_radial, verify_cutoff_gradient_bound};
use fraclab::weights::{laplace_grid, verify_laplace_inequality};
use fraclab::Error;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "fraclab",
    version,
    about = "Numerical checks for fractional bubbles, weights and stability"
)]
struct Cli {
    /// JSON run configuration (ambient, family, spec, seeds, command options).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV tables and the run manifest.
    #[arg(long, global = true, default_value = "fraclab-out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Bubble equation and dilation eigen-relation residuals on a radial grid.
    VerifyPde,
    /// Positivity of (-Δ)^s(1+r²)^(-s)(1+r²)^(2s) and the hypergeometric zero count.
    VerifyLaplace,
    /// Rate fits for the weight and bubble integral tables.
    VerifyAppendix,
    /// L^(n/s) energy of the fractional gradient of the logarithmic cut-off.
    VerifyCutoff,
    /// Radial Galerkin eigenvalues of the linearised operator.
    Spectral,
    /// Projection of a perturbed bubble sum onto the manifold.
    Project,
    /// Interaction Q against the deficit Γ along a two-bubble sweep.
    SweepQGamma,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::VerifyPde => "verify-pde",
            Command::VerifyLaplace => "verify-laplace",
            Command::VerifyAppendix => "verify-appendix",
            Command::VerifyCutoff => "verify-cutoff",
            Command::Spectral => "spectral",
            Command::Project => "project",
            Command::SweepQGamma => "sweep-q-gamma",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Tower,
    Cluster,
}

impl From<Mode> for PairKind {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Tower => PairKind::Tower,
            Mode::Cluster => PairKind::Cluster,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Perturbation {
    bubble: usize,
    a: usize,
    coef: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Config {
    ambient: Ambient,
    #[serde(default)]
    family: Option<BubbleFamily>,
    #[serde(default)]
    spec: Option<QuadratureSpec>,
    #[serde(default)]
    seeds: Vec<u64>,
    #[serde(default)]
    mode: Option<Mode>,
    #[serde(default)]
    separations: Option<Vec<f64>>,
    #[serde(default)]
    r_grid: Option<Vec<f64>>,
    #[serde(default)]
    ratios: Option<Vec<f64>>,
    #[serde(default)]
    basis_size: Option<usize>,
    #[serde(default)]
    perturbation: Vec<Perturbation>,
    #[serde(default)]
    init: Option<BubbleFamily>,
    #[serde(default)]
    with_alphas: bool,
}

impl Config {
    fn spec(&self) -> QuadratureSpec {
        let mut s = self.spec.unwrap_or_default();
        if let Some(seed) = self.seeds.first() {
            s.seed = *seed;
        }
        s
    }
}

#[derive(Debug, Serialize)]
struct Check {
    name: String,
    value: f64,
    threshold: f64,
    pass: bool,
}

fn check(name: &str, value: f64, threshold: f64, pass: bool) -> Check {
    Check {
        name: name.into(),
        value,
        threshold,
        pass,
    }
}

#[derive(Debug, Serialize)]
struct Manifest {
    command: String,
    config_hash: String,
    seeds: Vec<u64>,
    wall_time_s: f64,
    pass: bool,
    checks: Vec<Check>,
}

/// Failures split by exit code: configuration problems (2) and everything else (1).
enum Failure {
    Config(anyhow::Error),
    Run(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Domain(_) | Error::Precondition(_) => Failure::Config(e.into()),
            other => Failure::Run(other.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Run(e)
    }
}

fn write_rows<S: Serialize>(path: &Path, rows: &[S]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn load_config(path: Option<&Path>) -> Result<(Config, String), Failure> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Failure::Config(anyhow::anyhow!("reading {}: {e}", p.display())))?,
        None => r#"{"ambient": {"n": 4, "s": 0.5}}"#.to_string(),
    };
    let cfg: Config = serde_json::from_str(&text).map_err(|e| Failure::Config(anyhow::anyhow!("invalid configuration: {e}")))?;
    cfg.spec().validate()?;
    let hash = Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    Ok((cfg, hash))
}

fn run(cmd: Command, cfg: &Config, out: &Path) -> Result<Vec<Check>, Failure> {
    let amb = cfg.ambient;
    let spec = cfg.spec();
    let (n, s, p) = (amb.n(), amb.s(), amb.p());
    let mut checks = Vec::new();
    match cmd {
        Command::VerifyPde => {
            let grid = cfg.r_grid.clone().unwrap_or_else(default_r_grid);
            let pde = check_bubble_pde(n, s, &grid)?;
            let dil = check_eigen_relation_dilation(n, s, &grid)?;
            #[derive(Serialize)]
            struct Row {
                n: u32,
                s: f64,
                points: usize,
                r_max: f64,
                bubble_equation: f64,
                dilation_mode: f64,
            }
            let r_max = grid.iter().copied().fold(0.0, f64::max);
            write_rows(
                &out.join("pde.csv"),
                &[Row {
                    n,
                    s,
                    points: grid.len(),
                    r_max,
                    bubble_equation: pde,
                    dilation_mode: dil,
                }],
            )?;
            checks.push(check("bubble_equation_max_rel_residual", pde, 1e-6, pde <= 1e-6));
            checks.push(check("dilation_mode_max_rel_residual", dil, 1e-6, dil <= 1e-6));
        }
        Command::VerifyLaplace => {
            let grid = cfg.r_grid.clone().unwrap_or_else(|| laplace_grid(200));
            let rep = verify_laplace_inequality(&amb, &grid)?;
            let hmin = grid
                .iter()
                .map(|r| hyp2f1_abcz(n as f64 / 2.0 + s, 2.0 * s, n as f64 / 2.0, -r * r))
                .collect::<fraclab::Result<Vec<_>>>()?
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            let zeros = hyp2f1_zero_count(n, s)?;
            checks.push(check("alpha_min", rep.alpha, 0.0, rep.alpha > 0.0));
            checks.push(check("companion_min", rep.companion_min, 0.0, rep.companion_min > 0.0));
            checks.push(check("hyp2f1_min_on_grid", hmin, 0.0, hmin > 0.0));
            checks.push(check("hyp2f1_zero_count", zeros as f64, 0.0, zeros == 0));
            write_rows(&out.join("laplace.csv"), &[rep])?;
        }
        Command::VerifyAppendix => {
            let mode: PairKind = cfg.mode.unwrap_or(Mode::Tower).into();
            let grid = cfg.r_grid.clone().unwrap_or_else(|| log_grid(1.0, 5.0, 1));
            let mut records = Vec::new();
            let mut push_rows = |table: &str, rows: &[RowOutcome], checks: &mut Vec<Check>| {
                for r in rows {
                    let v = r.fit.as_ref().map_or(f64::NAN, |f| f.fitted_exponent);
                    checks.push(check(&format!("{table}/{}", r.row), v, r.expected_exponent, r.pass));
                }
                records.extend(table_records(table, &amb, rows));
            };
            push_rows("weight_products", &weight_product_table(&amb, mode, &grid, &spec)?, &mut checks);
            push_rows("weight_bubble", &weight_bubble_table(&amb, mode, &grid, &spec)?, &mut checks);
            let wide = cfg.r_grid.clone().unwrap_or_else(|| log_grid(2.0, 6.0, 1));
            push_rows("nonlinear_weight", &nonlinear_weight_table(&amb, mode, &wide, &spec)?, &mut checks);
            if (n as f64 - 6.0 * s).abs() < 1e-12 {
                let c = critical_log_check(&amb, mode, &grid, &spec)?;
                checks.push(check(
                    "critical_log/normalized_bounded",
                    c.normalized.iter().copied().fold(0.0, f64::max),
                    0.0,
                    c.bounded && c.decreasing,
                ));
            }
            write_csv(out.join("appendix.csv"), &records)?;
        }
        Command::VerifyCutoff => {
            let ratios = cfg.ratios.clone().unwrap_or_else(|| vec![10.0, 100.0, 1000.0]);
            let rep = verify_cutoff_gradient_bound(&amb, &ratios)?;
            #[derive(Serialize)]
            struct Row {
                ratio: f64,
                log_ratio: f64,
                energy: f64,
            }
            let rows: Vec<Row> = rep
                .ratios
                .iter()
                .zip(&rep.values)
                .map(|(r, v)| Row {
                    ratio: *r,
                    log_ratio: r.ln(),
                    energy: *v,
                })
                .collect();
            write_rows(&out.join("cutoff.csv"), &rows)?;
            let e = rep.fit.power_exponent;
            checks.push(check("decreasing", 0.0, 0.0, rep.values.windows(2).all(|w| w[1] < w[0])));
            checks.push(check(
                "log_ratio_exponent",
                e,
                rep.expected_exponent + 0.3,
                e <= rep.expected_exponent + 0.3,
            ));
        }
        Command::Spectral => {
            let k = cfg.basis_size.unwrap_or(8);
            let ev = spectral_gap_radial(&amb, k, &spec)?;
            #[derive(Serialize)]
            struct Row {
                index: usize,
                eigenvalue: f64,
            }
            write_rows(
                &out.join("spectral.csv"),
                &ev.iter()
                    .enumerate()
                    .map(|(index, &eigenvalue)| Row { index, eigenvalue })
                    .collect::<Vec<_>>(),
            )?;
            let near = |target: f64| ev.iter().map(|v| (v - target).abs() / target).fold(f64::INFINITY, f64::min);
            checks.push(check("eigenvalue_one", near(1.0), 1e-3, near(1.0) <= 1e-3));
            checks.push(check("eigenvalue_p", near(p), 1e-3, near(p) <= 1e-3));
            let third = ev.iter().copied().find(|v| *v > p * (1.0 + 1e-3)).unwrap_or(f64::NAN);
            checks.push(check("third_over_p", third / p, 1.1, third >= 1.1 * p));
        }
        Command::Project => {
            let fam = cfg
                .family
                .clone()
                .ok_or_else(|| Failure::Config(anyhow::anyhow!("project needs `family` in the configuration")))?;
            if fam.ambient != amb {
                return Err(Failure::Config(anyhow::anyhow!("family ambient differs from `ambient`")));
            }
            let base = FunctionRepr::from_family(&fam);
            let z: Vec<(f64, ZMode)> = cfg
                .perturbation
                .iter()
                .map(|q| Ok((q.coef, ZMode::new(q.bubble, q.a, n)?)))
                .collect::<fraclab::Result<_>>()?;
            let u = FunctionRepr::new(amb, base.bubble_terms, z)?;
            let init = cfg.init.clone().unwrap_or_else(|| fam.clone());
            let res = project_to_manifold(&u, init.len(), &init, cfg.with_alphas, &spec)?;
            #[derive(Serialize)]
            struct Row {
                bubble: usize,
                lambda: f64,
                alpha: f64,
                z: String,
                residual_norm: f64,
                iterations: usize,
            }
            let rows: Vec<Row> = res
                .bubbles
                .bubbles
                .iter()
                .enumerate()
                .map(|(i, b)| Row {
                    bubble: i,
                    lambda: b.lambda,
                    alpha: res.bubbles.alpha(i),
                    z: b.z.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";"),
                    residual_norm: res.residual_norm,
                    iterations: res.iterations,
                })
                .collect();
            write_rows(&out.join("projection.csv"), &rows)?;
            write_rows(&out.join("orthogonality.csv"), &res.orthogonality)?;
            checks.push(check("converged", res.max_orthogonality(), 1e-6, res.converged));
        }
        Command::SweepQGamma => {
            let mode = cfg.mode.unwrap_or(Mode::Cluster);
            let seps = cfg.separations.clone().unwrap_or_else(|| match mode {
                Mode::Cluster => vec![1e2, 1e3, 3e3],
                Mode::Tower => vec![1e4, 1e6, 1e8],
            });
            let reps = q_gamma_sweep(&amb, mode.into(), &seps, &spec)?;
            write_rows(&out.join("q_gamma.csv"), &reps)?;
            let drift = q_gamma_drift(&reps);
            checks.push(check("q_over_gamma_drift", drift, 3.0, drift <= 3.0));
        }
    }
    Ok(checks)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let (cfg, hash) = match load_config(cli.config.as_deref()) {
        Ok(c) => c,
        Err(Failure::Config(e)) | Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        eprintln!("error: creating {}: {e}", cli.out.display());
        return ExitCode::from(2);
    }
    let checks = match run(cli.command, &cfg, &cli.out) {
        Ok(c) => c,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            vec![check("run", f64::NAN, f64::NAN, false)]
        }
    };
    let pass = checks.iter().all(|c| c.pass);
    for c in &checks {
        println!(
            "{} {} (value {:.6e}, threshold {:.3e})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.threshold
        );
    }
    let manifest = Manifest {
        command: cli.command.name().into(),
        config_hash: hash,
        seeds: if cfg.seeds.is_empty() {
            vec![cfg.spec().seed]
        } else {
            cfg.seeds.clone()
        },
        wall_time_s: started.elapsed().as_secs_f64(),
        pass,
        checks,
    };
    let path = cli.out.join("manifest.json");
    match serde_json::to_string_pretty(&manifest)
        .map_err(anyhow::Error::from)
        .and_then(|t| Ok(std::fs::write(&path, t)?))
    {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: writing {}: {e}", path.display());
            return ExitCode::from(1);
        }
    }
    ExitCode::from(if pass { 0 } else { 1 })
}
