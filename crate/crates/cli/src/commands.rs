use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use hypodist::estimator::{self, EstimateResult, EstimationProblem, StepRecord};
use hypodist::io::{save_function, write_heatmap, write_surface};
use hypodist::metrics::{self, Ball, DistanceReport};
use hypodist::scenarios::{self, UUV_F_MEAN, UUV_G_MEAN};
use hypodist::validation::{self, DistributionErrorReport, SandwichReport};
use hypodist::{CdfSpec, Grid, GridFunction, ShapeConstraints};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::*;
use crate::{CliError, Context, Scenario};

const DEFAULT_SEED: u64 = 7;
const DEFAULT_BUDGET: u64 = 5_000_000;

fn base_dir(config: &Path) -> PathBuf {
    config.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(CliError::io(format!("creating {}", dir.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let file = File::create(path).map_err(CliError::io(format!("writing {}", path.display())))?;
    serde_json::to_writer_pretty(BufWriter::new(file), value)
        .map_err(|e| CliError::Io { context: format!("writing {}", path.display()), source: e.into() })
}

fn write_with(path: &Path, f: impl FnOnce(BufWriter<File>) -> hypodist::Result<()>) -> Result<(), CliError> {
    let file = File::create(path).map_err(CliError::io(format!("writing {}", path.display())))?;
    Ok(f(BufWriter::new(file))?)
}

fn build_problem(
    f0: GridFunction,
    g0: GridFunction,
    delta: f64,
    rho: Option<f64>,
    shape: &ShapeConstraints,
    tol: f64,
) -> Result<EstimationProblem, CliError> {
    let mut p = EstimationProblem::new(f0, g0, delta).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(r) = rho {
        p.ball = Ball::new(r).map_err(|e| CliError::Config(e.to_string()))?;
    }
    p.shape = shape.clone();
    p.tol = tol;
    p.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(p)
}

#[derive(Serialize)]
struct EstimateReport {
    delta: f64,
    eta: f64,
    slack: f64,
    expected_value: Option<Vec<f64>>,
    f0_expected_value: Option<Vec<f64>>,
    g0_expected_value: Option<Vec<f64>>,
    distribution_error: DistributionErrorReport,
    lp_variables: usize,
    lp_rows: usize,
    wall_seconds: f64,
    history: Vec<StepRecord>,
}

fn estimate_report(p: &EstimationProblem, r: &EstimateResult, seed: u64) -> Result<EstimateReport, CliError> {
    Ok(EstimateReport {
        delta: p.delta,
        eta: r.eta,
        slack: r.slack,
        expected_value: r.solution.expected_value().ok(),
        f0_expected_value: p.f0.expected_value().ok(),
        g0_expected_value: p.g0.expected_value().ok(),
        distribution_error: validation::distribution_error_pct(&r.solution, DEFAULT_BUDGET, seed)?,
        lp_variables: r.lp_variables,
        lp_rows: r.lp_rows,
        wall_seconds: r.wall_seconds,
        history: r.history.clone(),
    })
}

pub fn estimate(config: &Path, ctx: &Context) -> Result<(), CliError> {
    let cfg: EstimateConfig = read_config(config)?;
    let base = base_dir(config);
    let grid = Arc::new(Grid::with_cells(cfg.domain.build()?, cfg.cells_per_axis).map_err(|e| CliError::Config(e.to_string()))?);
    let f0 = cfg.f0.load(&grid, &base)?;
    let g0 = cfg.g0.load(&grid, &base)?;
    let mut problem = build_problem(f0, g0, cfg.delta, cfg.rho, &cfg.shape, cfg.tol)?;
    if let Some(n) = cfg.max_lp_iterations {
        problem.max_lp_iterations = n;
    }
    let out = ctx.out_dir(cfg.output_dir.as_deref(), &base);
    prepare_dir(&out)?;

    let result = estimator::estimate(&problem)?;
    let seed = ctx.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let report = estimate_report(&problem, &result, seed)?;
    save_function(&result.solution, &out, "solution")?;
    write_with(&out.join("surface.dat"), |w| write_surface(&result.solution, w))?;
    write_with(&out.join("heatmap.dat"), |w| write_heatmap(&result.solution, w))?;
    write_json(&out.join("result.json"), &report)?;
    ctx.say(format!(
        "delta {} -> eta {:.6}, s {:.3e}, expected value {:?} ({} LP solves, {:.1}s)",
        cfg.delta,
        result.eta,
        result.slack,
        report.expected_value,
        result.history.len(),
        result.wall_seconds
    ));
    Ok(())
}

#[derive(Serialize)]
struct RhoReport {
    rho: f64,
    hat: f64,
    eta_minus: f64,
    eta_plus: f64,
    oracle: f64,
}

#[derive(Serialize)]
struct DistanceOutput {
    per_rho: Vec<RhoReport>,
    hypo_distance: DistanceReport,
}

pub fn distance(config: &Path, ctx: &Context) -> Result<(), CliError> {
    let cfg: DistanceConfig = read_config(config)?;
    let base = base_dir(config);
    let grid = Arc::new(Grid::with_cells(cfg.domain.build()?, cfg.cells_per_axis).map_err(|e| CliError::Config(e.to_string()))?);
    let f = cfg.f.load(&grid, &base)?;
    let g = cfg.g.load(&grid, &base)?;
    let mut per_rho = Vec::new();
    for &rho in &cfg.rho_values {
        let ball = Ball::new(rho).map_err(|e| CliError::Config(e.to_string()))?;
        per_rho.push(RhoReport {
            rho,
            hat: metrics::hat_dl_rho(&f, &g, ball, cfg.tol)?,
            eta_minus: metrics::eta_minus(&f, &g, ball, &grid, cfg.tol)?,
            eta_plus: metrics::eta_plus(&f, &g, ball, &grid, cfg.tol)?,
            oracle: metrics::dl_rho_oracle(&f, &g, ball, cfg.oracle_samples)?,
        });
    }
    let output = DistanceOutput {
        per_rho,
        hypo_distance: metrics::hypo_dist_estimate(&f, &g, cfg.quad_points, cfg.tol)?,
    };
    if let Some(dir) = ctx.out.clone().or_else(|| cfg.output_dir.as_ref().map(|p| base.join(p))) {
        prepare_dir(&dir)?;
        write_json(&dir.join("distance.json"), &output)?;
    }
    if !ctx.quiet {
        println!("{}", serde_json::to_string_pretty(&output).expect("report serializes"));
    }
    Ok(())
}

#[derive(Serialize)]
struct LevelRow {
    cells_per_axis: usize,
    eta: f64,
    slack: f64,
    distance_to_previous: Option<DistanceReport>,
    distribution_error_pct: f64,
    sandwich_f0: SandwichReport,
    sandwich_g0: SandwichReport,
    wall_seconds: f64,
}

#[derive(Serialize)]
struct StudyOutput {
    delta: f64,
    levels: Vec<LevelRow>,
    sandwich_violations: usize,
}

pub fn study(config: &Path, ctx: &Context) -> Result<(), CliError> {
    let cfg: StudyConfig = read_config(config)?;
    if cfg.levels.len() < 2 {
        return Err(CliError::Config("a study needs at least 2 refinement levels".into()));
    }
    let base = base_dir(config);
    let domain = cfg.domain.build()?;
    let seed = ctx.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let out = ctx.out_dir(cfg.output_dir.as_deref(), &base);
    prepare_dir(&out)?;

    let levels = estimator::refinement_study(&domain, &cfg.levels, cfg.quad_points, |grid| {
        let f0 = cfg.f0.load(&grid, &base).map_err(|e| hypodist::Error::InvalidArgument(e.to_string()))?;
        let g0 = cfg.g0.load(&grid, &base).map_err(|e| hypodist::Error::InvalidArgument(e.to_string()))?;
        build_problem(f0, g0, cfg.delta, cfg.rho, &cfg.shape, cfg.tol)
            .map_err(|e| hypodist::Error::InvalidArgument(e.to_string()))
    })?;

    let mut rows = Vec::new();
    let mut violations = 0;
    for level in levels {
        let grid = level.result.solution.grid_arc().clone();
        let f0 = cfg.f0.load(&grid, &base)?;
        let g0 = cfg.g0.load(&grid, &base)?;
        let ball = match cfg.rho {
            Some(r) => Ball::new(r)?,
            None => Ball::covering(grid.domain()),
        };
        let sol = &level.result.solution;
        let sandwich_f0 = validation::verify_sandwich(sol, &f0, ball, &grid, cfg.oracle_samples, 1e-9)?;
        let sandwich_g0 = validation::verify_sandwich(sol, &g0, ball, &grid, cfg.oracle_samples, 1e-9)?;
        violations += usize::from(!sandwich_f0.failures.is_empty()) + usize::from(!sandwich_g0.failures.is_empty());
        let row = LevelRow {
            cells_per_axis: level.cells_per_axis,
            eta: level.result.eta,
            slack: level.result.slack,
            distribution_error_pct: validation::distribution_error_pct(sol, cfg.rectangle_budget, seed)?.percent,
            distance_to_previous: level.distance_to_previous,
            sandwich_f0,
            sandwich_g0,
            wall_seconds: level.result.wall_seconds,
        };
        ctx.say(format!(
            "{:>5} cells  eta {:.6}  s {:.3e}  dl(prev) {}  error {:.3}%",
            row.cells_per_axis,
            row.eta,
            row.slack,
            row.distance_to_previous
                .as_ref()
                .map_or("-".to_string(), |d| format!("{:.5}", d.value)),
            row.distribution_error_pct
        ));
        rows.push(row);
    }
    ctx.say(format!("sandwich violations: {violations}"));
    write_json(
        &out.join("study.json"),
        &StudyOutput {
            delta: cfg.delta,
            levels: rows,
            sandwich_violations: violations,
        },
    )
}

fn cdf_source(spec: CdfSpec) -> FunctionSource {
    FunctionSource::Cdf { spec }
}

fn delta_tag(delta: f64) -> String {
    format!("{delta}").replace('.', "p")
}

pub fn generate(scenario: Scenario, ctx: &Context) -> Result<(), CliError> {
    let out = ctx.out.clone().unwrap_or_else(|| PathBuf::from("."));
    prepare_dir(&out)?;
    let seed = ctx.seed.unwrap_or(DEFAULT_SEED);
    let mut written = Vec::new();
    match scenario {
        Scenario::TwoUniforms => {
            let (domain, f0, g0) = scenarios::two_uniforms();
            let domain = DomainConfig::from(&domain);
            for delta in [1.0, 0.7, 0.4, 0.1, 1e-4] {
                let cfg = EstimateConfig {
                    version: CONFIG_VERSION,
                    domain: domain.clone(),
                    cells_per_axis: 50,
                    f0: cdf_source(f0.clone()),
                    g0: cdf_source(g0.clone()),
                    delta,
                    rho: None,
                    shape: ShapeConstraints::default(),
                    tol: 1e-8,
                    max_lp_iterations: None,
                    output_dir: Some(PathBuf::from(format!("two_uniforms_delta_{}", delta_tag(delta)))),
                    seed: Some(seed),
                };
                written.push(format!("two_uniforms_delta_{}.json", delta_tag(delta)));
                write_json(&out.join(written.last().expect("just pushed")), &cfg)?;
            }
            let study = StudyConfig {
                version: CONFIG_VERSION,
                domain: domain.clone(),
                levels: vec![10, 20, 40],
                f0: cdf_source(f0.clone()),
                g0: cdf_source(g0.clone()),
                delta: 0.7,
                rho: None,
                shape: ShapeConstraints::default(),
                tol: 1e-8,
                quad_points: 32,
                oracle_samples: 21,
                rectangle_budget: DEFAULT_BUDGET,
                output_dir: Some(PathBuf::from("two_uniforms_study")),
                seed: Some(seed),
            };
            written.push("two_uniforms_study.json".into());
            write_json(&out.join("two_uniforms_study.json"), &study)?;
            let dist = DistanceConfig {
                version: CONFIG_VERSION,
                domain,
                cells_per_axis: 30,
                f: cdf_source(f0),
                g: cdf_source(g0),
                rho_values: vec![0.5, 1.0, 2.0, 4.0],
                oracle_samples: 21,
                quad_points: 32,
                tol: 1e-9,
                output_dir: None,
            };
            written.push("two_uniforms_distance.json".into());
            write_json(&out.join("two_uniforms_distance.json"), &dist)?;
        }
        Scenario::UuvSynthetic => {
            let data = scenarios::uuv_synthetic(seed, 400)?;
            for (name, set) in [("uuv_f_samples.csv", &data.f_samples), ("uuv_g_samples.csv", &data.g_samples)] {
                write_with(&out.join(name), |w| set.write_csv(w))?;
                written.push(name.into());
            }
            for delta in [0.9, 0.1, 0.01] {
                let cfg = EstimateConfig {
                    version: CONFIG_VERSION,
                    domain: DomainConfig::from(&data.domain),
                    cells_per_axis: 20,
                    f0: FunctionSource::Samples { path: "uuv_f_samples.csv".into() },
                    g0: FunctionSource::Samples { path: "uuv_g_samples.csv".into() },
                    delta,
                    rho: None,
                    shape: ShapeConstraints::default(),
                    tol: 1e-8,
                    max_lp_iterations: None,
                    output_dir: Some(PathBuf::from(format!("uuv_delta_{}", delta_tag(delta)))),
                    seed: Some(seed),
                };
                written.push(format!("uuv_delta_{}.json", delta_tag(delta)));
                write_json(&out.join(written.last().expect("just pushed")), &cfg)?;
            }
            ctx.say(format!("source means: F {UUV_F_MEAN:?}, G {UUV_G_MEAN:?}"));
        }
    }
    for w in written {
        ctx.say(out.join(w).display().to_string());
    }
    Ok(())
}

#[derive(Serialize)]
struct ValidateOutput {
    seed: u64,
    pairs: usize,
    sandwich_violations: usize,
    ordering_violations: usize,
    lipschitz_pairs: usize,
    lipschitz_gap_violations: usize,
    max_lipschitz_gap: f64,
    kappa_mesh: f64,
    density_distances: Vec<f64>,
    closure_delta_a: Vec<(usize, f64)>,
    closure_delta_a_limit: f64,
    closure_distances: Vec<(usize, f64)>,
    failures: Vec<String>,
}

pub fn validate(config: Option<&Path>, ctx: &Context) -> Result<(), CliError> {
    let (cfg, base) = match config {
        Some(p) => (read_config::<ValidateConfig>(p)?, base_dir(p)),
        None => (ValidateConfig::default(), PathBuf::new()),
    };
    let seed = ctx.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = Arc::new(
        Grid::with_cells(hypodist::Domain::unit(2), cfg.cells_per_axis).map_err(|e| CliError::Config(e.to_string()))?,
    );
    let ball = Ball::covering(grid.domain());
    let mut failures = Vec::new();
    let (mut sandwich_violations, mut ordering_violations) = (0, 0);
    for i in 0..cfg.pairs {
        let f = validation::random_monotone(grid.clone(), &mut rng)?;
        let g = validation::random_monotone(grid.clone(), &mut rng)?;
        let r = validation::verify_sandwich(&f, &g, ball, &grid, cfg.oracle_samples, cfg.tol)?;
        sandwich_violations += usize::from(!r.sandwich_ok);
        ordering_violations += usize::from(!r.ordering_ok);
        failures.extend(r.failures.into_iter().map(|s| format!("pair {i}: {s}")));
    }
    let kappa_mesh = cfg.kappa * grid.mesh_size();
    let (mut gap_violations, mut max_gap) = (0, 0.0_f64);
    for i in 0..cfg.lipschitz_pairs {
        let f = validation::random_lipschitz(grid.clone(), cfg.kappa, &mut rng)?;
        let g = validation::random_lipschitz(grid.clone(), cfg.kappa, &mut rng)?;
        let gap = metrics::eta_plus(&f, &g, ball, &grid, cfg.tol)? - metrics::eta_minus(&f, &g, ball, &grid, cfg.tol)?;
        max_gap = max_gap.max(gap);
        if gap > kappa_mesh + validation::SANDWICH_TOL {
            gap_violations += 1;
            failures.push(format!("lipschitz pair {i}: gap {gap} > {kappa_mesh}"));
        }
    }
    let center = CdfSpec::DiracPoint { location: vec![0.5, 0.5] };
    let density_distances = validation::density_convergence(&center, &hypodist::Domain::unit(2), &[4, 8, 16, 32], 64, 16)?
        .into_iter()
        .map(|d| d.value)
        .collect();
    let mut closure_delta_a = Vec::new();
    let mut closure_distances = Vec::new();
    let mut closure_delta_a_limit = 0.0;
    for nu in [1, 2, 4, 8] {
        let fx = validation::closure_fixture(nu, 16)?;
        closure_delta_a.push((nu, fx.delta_a_nu));
        closure_distances.push((nu, fx.distance.value));
        closure_delta_a_limit = fx.delta_a_limit;
    }
    let output = ValidateOutput {
        seed,
        pairs: cfg.pairs,
        sandwich_violations,
        ordering_violations,
        lipschitz_pairs: cfg.lipschitz_pairs,
        lipschitz_gap_violations: gap_violations,
        max_lipschitz_gap: max_gap,
        kappa_mesh,
        density_distances,
        closure_delta_a,
        closure_delta_a_limit,
        closure_distances,
        failures,
    };
    if let Some(dir) = ctx.out.clone().or_else(|| cfg.output_dir.as_ref().map(|p| base.join(p))) {
        prepare_dir(&dir)?;
        write_json(&dir.join("validation.json"), &output)?;
    }
    if !ctx.quiet {
        println!("{}", serde_json::to_string_pretty(&output).expect("report serializes"));
    }
    match output.failures.len() {
        0 => Ok(()),
        n => Err(CliError::Validation(n)),
    }
}
