//! Dispatch of a parsed experiment to the compute modules and CSV output.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use bqo_core::belief_search::{self, Belief, MeasurementModel, Policy, SearchConfig, SearchError};
use bqo_core::cavity::{self, CavityError, CavityModel, DensityMatrix, ObservableSeries, QubitSpec, ResetProcess, SimConfig};
use bqo_core::elastic_net::{self, AnnealSchedule, ElasticNetError, ElasticNetParams, Point2};
use bqo_core::gp_noise::{self, GpKernel, MeanFunction, NoiseError, Oscillator, TimeGrid};
use serde_json::json;
use thiserror::Error;

use crate::config::{
    Command, ConfigError, ExperimentConfig, KernelSpec, MeanSpec, NoiseParams, PolicySpec, QsimMode, QsimParams,
    SearchParams, TspParams, TspSource,
};
use crate::tsplib::{parse_tsplib, TsplibError};

pub const METADATA_FILE: &str = "metadata.json";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("config: subcommand `{requested}` does not match the [{found}] block")]
    CommandMismatch { requested: String, found: String },
    #[error("tsplib: {path}: {source}")]
    Tsplib { path: String, source: TsplibError },
    #[error("belief_search: {0}")]
    Search(#[from] SearchError),
    #[error("elastic_net: {0}")]
    ElasticNet(#[from] ElasticNetError),
    #[error("cavity_sim: {0}")]
    Cavity(#[from] CavityError),
    #[error("gp_noise: {0}")]
    Noise(#[from] NoiseError),
    #[error("io: {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("io: csv: {0}")]
    Csv(#[from] csv::Error),
}

impl RunError {
    /// Process exit status for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::CommandMismatch { .. } => 2,
            RunError::Tsplib { .. } => 3,
            RunError::Search(_) | RunError::ElasticNet(_) | RunError::Cavity(_) | RunError::Noise(_) => 4,
            RunError::Io { .. } | RunError::Csv(_) => 5,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Reads and parses a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, RunError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(crate::config::parse_config(&text)?)
}

/// Where a run reads relative inputs from and writes its files to.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub out_dir: PathBuf,
    /// Base for relative instance paths, normally the config's directory.
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    /// File names written into the output directory, metadata last.
    pub files: Vec<String>,
    pub warnings: Vec<String>,
}

fn fmt(x: f64) -> String {
    format!("{x:?}")
}

/// CSV files collected in memory and flushed together.
struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn write(&mut self, name: &str, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), RunError> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush().map_err(io_err(&path))?;
        self.files.push(name.to_string());
        Ok(())
    }
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

/// Runs the experiment and writes its CSV files and metadata into
/// `ctx.out_dir`, creating it if needed.
pub fn run(config: &ExperimentConfig, ctx: &RunContext) -> Result<RunSummary, RunError> {
    let start = Instant::now();
    fs::create_dir_all(&ctx.out_dir).map_err(io_err(&ctx.out_dir))?;
    let mut out = Outputs {
        dir: ctx.out_dir.clone(),
        files: Vec::new(),
    };
    let (warnings, details) = match &config.command {
        Command::Search(p) => run_search(p, config.seed, &mut out)?,
        Command::Tsp(p) => run_tsp(p, config.seed, ctx, &mut out)?,
        Command::Qsim(p) => run_qsim(p, config.seed, &mut out)?,
        Command::Noise(p) => run_noise(p, config.seed, &mut out)?,
    };
    let metadata = json!({
        "command": config.command.name(),
        "seed": config.seed,
        "version": env!("CARGO_PKG_VERSION"),
        "config": config.to_canonical(),
        "outputs": out.files,
        "warnings": warnings,
        "details": details,
        "wall_time_seconds": start.elapsed().as_secs_f64(),
    });
    let meta_path = ctx.out_dir.join(METADATA_FILE);
    let text = serde_json::to_string_pretty(&metadata).expect("metadata serializes");
    fs::write(&meta_path, text + "\n").map_err(io_err(&meta_path))?;
    out.files.push(METADATA_FILE.to_string());
    Ok(RunSummary {
        files: out.files,
        warnings,
    })
}

type Produced = (Vec<String>, serde_json::Value);

fn run_search(p: &SearchParams, seed: u64, out: &mut Outputs) -> Result<Produced, RunError> {
    let model = MeasurementModel::new(p.p_detect, p.p_false)?;
    let policy = match p.policy {
        PolicySpec::Greedy => Policy::Greedy,
        PolicySpec::MostLikely => Policy::MostLikely,
        PolicySpec::BruteForce { horizon } => Policy::BruteForce { horizon },
    };
    let mut cfg = SearchConfig::new(p.n_cells, p.true_cell, model, policy, p.max_steps, seed);
    cfg.stop_threshold = p.stop_threshold;
    cfg.prior = p.prior.clone().map(Belief::from_weights).transpose()?;
    let rec = belief_search::simulate_search(&cfg)?;
    let rows = (0..rec.len()).map(|i| {
        vec![
            (i + 1).to_string(),
            rec.actions[i].cell.to_string(),
            rec.observations[i].bit().to_string(),
            fmt(rec.entropies[i]),
            fmt(rec.beliefs[i].max_prob()),
        ]
    });
    out.write(
        "search.csv",
        &header(&["step", "action", "observation", "entropy", "max_belief"]),
        rows,
    )?;
    let last = rec.beliefs.last();
    Ok((
        Vec::new(),
        json!({
            "steps": rec.len(),
            "final_argmax": last.map(|b| b.argmax()),
            "found": last.map(|b| b.max_prob() >= p.stop_threshold && b.argmax() == p.true_cell),
        }),
    ))
}

fn load_cities(p: &TspParams, ctx: &RunContext) -> Result<(String, Vec<Point2<f64>>), RunError> {
    let coords = match &p.source {
        TspSource::Inline(c) => ("inline".to_string(), c.clone()),
        TspSource::File(path) => {
            let full = ctx.base_dir.join(path);
            let text = fs::read_to_string(&full).map_err(io_err(&full))?;
            let inst = parse_tsplib(&text).map_err(|source| RunError::Tsplib {
                path: full.display().to_string(),
                source,
            })?;
            (inst.name, inst.coords)
        }
    };
    Ok((coords.0, coords.1.into_iter().map(|[x, y]| Point2::new(x, y)).collect()))
}

fn run_tsp(p: &TspParams, seed: u64, ctx: &RunContext, out: &mut Outputs) -> Result<Produced, RunError> {
    let (name, cities) = load_cities(p, ctx)?;
    let params = ElasticNetParams {
        alpha: p.alpha,
        beta: p.beta,
        node_ratio: p.node_ratio,
    };
    let mut schedule = AnnealSchedule::for_instance(&cities);
    schedule.k_decay = p.k_decay;
    schedule.iters_per_stage = p.iters_per_stage;
    schedule.step_size = p.step_size;
    if let Some(k) = p.k_start {
        schedule.k_start = k;
    }
    if let Some(k) = p.k_min {
        schedule.k_min = k;
    }
    let sol = elastic_net::solve(&cities, &params, &schedule, seed)?;
    out.write(
        "tsp_trace.csv",
        &header(&["stage", "k", "prior_energy", "data_energy", "total", "tour_length"]),
        sol.trace.iter().map(|s| {
            vec![
                s.stage.to_string(),
                fmt(s.k),
                fmt(s.prior_energy),
                fmt(s.data_energy),
                fmt(s.total),
                fmt(s.tour_length),
            ]
        }),
    )?;
    out.write(
        "tour.csv",
        &header(&["position", "city", "x", "y"]),
        sol.tour
            .order()
            .iter()
            .enumerate()
            .map(|(i, &c)| vec![i.to_string(), c.to_string(), fmt(cities[c].x), fmt(cities[c].y)]),
    )?;
    let mut lengths = vec![("elastic_net", sol.tour.length())];
    if p.baselines && cities.len() >= 3 {
        let (nn, two) = elastic_net::baseline_tours(&cities)?;
        lengths.push(("nearest_neighbor", nn.length()));
        lengths.push(("two_opt", two.length()));
    }
    out.write(
        "summary.csv",
        &header(&["method", "tour_length"]),
        lengths.iter().map(|(m, l)| vec![m.to_string(), fmt(*l)]),
    )?;
    let details = json!({
        "instance": name,
        "n_cities": cities.len(),
        "stages": sol.trace.len(),
        "tour_lengths": lengths.iter().map(|(m, l)| (m.to_string(), json!(l))).collect::<serde_json::Map<_, _>>(),
    });
    Ok((Vec::new(), details))
}

fn write_series(out: &mut Outputs, name: &str, series: &ObservableSeries<f64>, d: usize, nq: usize) -> Result<(), RunError> {
    out.write(
        name,
        &ObservableSeries::<f64>::header(d, nq),
        (0..series.len()).map(|i| series.row(i).into_iter().map(fmt).collect()),
    )
}

fn run_qsim(p: &QsimParams, seed: u64, out: &mut Outputs) -> Result<Produced, RunError> {
    let mut model = CavityModel::new(
        p.d,
        p.omega_r,
        p.qubits.iter().map(|q| QubitSpec { delta: q.delta, g: q.g }).collect(),
    );
    model.hbar = p.hbar;
    let nq = model.n_qubits();
    let reset = ResetProcess::new(p.rate, p.targets.clone().unwrap_or_else(|| (0..nq).collect()));
    let mut levels = vec![p.initial_cavity];
    levels.extend(p.initial_qubits.clone().unwrap_or_else(|| vec![0; nq]));
    let rho0 = DensityMatrix::basis(&levels, model.dims())?;
    let cfg = SimConfig::new(p.dt, p.t_max, seed)
        .with_stride(p.record_stride)
        .with_trajectories(p.n_trajectories)
        .with_truncation_tol(p.truncation_guard.then_some(p.truncation_tol));
    let series = match p.mode {
        QsimMode::Mean => cavity::run_mean_evolution(&model, &reset, &rho0, &cfg)?,
        QsimMode::Trajectory => cavity::run_trajectory(&model, &reset, &rho0, &cfg)?,
        QsimMode::Ensemble => {
            let ens = cavity::run_ensemble(&model, &reset, &rho0, &cfg)?;
            write_series(out, "qsim_stderr.csv", &ens.std_err, p.d, nq)?;
            ens.mean
        }
    };
    write_series(out, "qsim.csv", &series, p.d, nq)?;
    let exc = series.qudit_excitation();
    let details = json!({
        "records": series.len(),
        "initial_qudit_excitation": exc.first(),
        "final_qudit_excitation": exc.last(),
    });
    Ok((series.warnings.clone(), details))
}

fn run_noise(p: &NoiseParams, seed: u64, out: &mut Outputs) -> Result<Produced, RunError> {
    let tau = p.correlation_time.unwrap_or(1.0);
    let kernel = match p.kernel {
        KernelSpec::White => GpKernel::white(p.variance),
        KernelSpec::Ou => GpKernel::ornstein_uhlenbeck(p.variance, tau),
        KernelSpec::Se => GpKernel::squared_exponential(p.variance, tau),
    }
    .with_mean(match p.mean {
        MeanSpec::Constant { value } => MeanFunction::Constant(value),
        MeanSpec::Linear { offset, slope } => MeanFunction::Linear { offset, slope },
        MeanSpec::Sinusoid { amplitude, omega, phase } => MeanFunction::Sinusoid { amplitude, omega, phase },
    });
    let grid = TimeGrid::new(p.t0, p.dt, p.n_points)?;
    let paths = gp_noise::sample_paths(&kernel, &grid, p.n_paths, seed)?;
    let stats = gp_noise::empirical_stats(&paths)?;
    let times = grid.times();
    let variance = stats.variance();
    out.write(
        "noise.csv",
        &header(&["t", "mean", "variance"]),
        (0..grid.n).map(|i| vec![fmt(times[i]), fmt(stats.mean[i]), fmt(variance[i])]),
    )?;
    let acov = gp_noise::empirical_autocovariance(&paths, &stats.mean, p.max_lag);
    let c0 = acov.first().copied().unwrap_or(1.0);
    out.write(
        "noise_autocorrelation.csv",
        &header(&["lag", "autocovariance", "autocorrelation"]),
        acov.iter()
            .enumerate()
            .map(|(k, &c)| vec![fmt(p.dt * k as f64), fmt(c), fmt(c / c0)]),
    )?;
    let shown = paths.len().min(5);
    let mut cols = vec!["t".to_string()];
    cols.extend((0..shown).map(|i| format!("path_{i}")));
    out.write(
        "noise_paths.csv",
        &cols,
        (0..grid.n).map(|i| {
            std::iter::once(fmt(times[i]))
                .chain(paths[..shown].iter().map(|path| fmt(path.values[i])))
                .collect()
        }),
    )?;
    let mut details = json!({ "n_paths": paths.len(), "n_points": grid.n });
    if let Some(o) = p.oscillator {
        let osc = Oscillator {
            omega0: o.omega0,
            mass: o.mass,
            x0: o.x0,
            v0: o.v0,
        };
        let ens = gp_noise::drive_with_forces(&osc, &grid, &paths)?;
        let energy = ens.mean_energy(&osc);
        let count = ens.len() as f64;
        out.write(
            "oscillator.csv",
            &header(&["t", "mean_x", "mean_energy"]),
            (0..grid.n).map(|i| {
                let mean_x = ens.positions.iter().map(|x| x[i]).sum::<f64>() / count;
                vec![fmt(times[i]), fmt(mean_x), fmt(energy[i])]
            }),
        )?;
        details["oscillator_final_energy"] = json!(energy.last());
    }
    Ok((Vec::new(), details))
}
