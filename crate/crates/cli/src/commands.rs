use graphon_dyn::{
    birkhoff_average, cut_distance, cut_norm, hom_density_graphs, hom_density_mc, hom_density_step, kernel_smooth,
    recurrence_count, sample_kernel, simulate_mixture_trajectory, Graphon, KernelMixture, MatchMode, SignedKernel,
    SimpleGraph, StateProcess, Transition,
};
use serde::Serialize;

use crate::config::{missing, RunConfig, SimConfig};
use crate::error::{CliError, CliResult};
use crate::manifest::RunOutput;

const DEFAULT_SMOOTHING_STEPS: usize = 10;
const SINKHORN_TOL: f64 = 1e-12;
const SINKHORN_MAX_ITER: usize = 100_000;

#[derive(Serialize)]
struct DensityJson {
    count: u128,
    total: u128,
    density: f64,
    exact: String,
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))
}

fn json_line<T: Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string(value).map(|s| s + "\n").map_err(|e| CliError::Runtime(e.to_string()))
}

fn text_output(file: &str, bytes: Vec<u8>) -> RunOutput {
    RunOutput {
        stdout: String::from_utf8(bytes.clone()).expect("utf-8 output"),
        files: vec![(file.to_string(), bytes)],
        ..RunOutput::default()
    }
}

fn quantity_row(quantity: &str, value: f64, exact: bool, stderr: Option<f64>) -> Vec<String> {
    vec![quantity.into(), value.to_string(), exact.to_string(), stderr.map(|s| s.to_string()).unwrap_or_default()]
}

const QUANTITY_HEADER: [&str; 4] = ["quantity", "value", "exact", "stderr"];

pub fn density(cfg: &RunConfig) -> CliResult<RunOutput> {
    let pattern = cfg.inputs.pattern.as_ref().ok_or_else(|| missing("inputs.pattern"))?;
    match (&cfg.inputs.graph, &cfg.inputs.graphon) {
        (Some(g), None) => {
            let h = hom_density_graphs(pattern, g)?;
            let line = json_line(&DensityJson {
                count: h.count,
                total: h.total_maps,
                density: h.density(),
                exact: h.to_string(),
            })?;
            Ok(text_output("density.json", line.into_bytes()))
        }
        (None, Some(w)) => {
            let analysis = cfg.analysis();
            let mut rows = vec![quantity_row("hom_density", hom_density_step(pattern, w)?, true, None)];
            let mut seed = None;
            if let Some(samples) = analysis.mc_samples {
                let s = cfg.sim.as_ref().map_or(0, |sim| sim.seed);
                let mc = hom_density_mc(pattern, w, samples, s)?;
                rows.push(quantity_row("hom_density_mc", mc.estimate, false, Some(mc.stderr)));
                seed = Some(s);
            }
            let mut out = text_output("density.csv", csv_bytes(&QUANTITY_HEADER, rows)?);
            out.seed = seed;
            Ok(out)
        }
        (Some(_), Some(_)) => Err(CliError::Config("give either `inputs.graph` or `inputs.graphon`, not both".into())),
        (None, None) => Err(missing("inputs.graph or inputs.graphon")),
    }
}

pub fn cutnorm(cfg: &RunConfig) -> CliResult<RunOutput> {
    let u = match (&cfg.inputs.kernel, &cfg.inputs.graphon, &cfg.inputs.other) {
        (Some(u), None, None) => u.clone(),
        (None, Some(a), Some(b)) => SignedKernel::difference(a, b)?,
        _ => {
            return Err(CliError::Config(
                "cutnorm needs either `inputs.kernel` or both `inputs.graphon` and `inputs.other`".into(),
            ))
        }
    };
    let c = cut_norm(&u);
    let rows = [quantity_row("cut_norm", c.value, c.exact, None)];
    Ok(text_output("cutnorm.csv", csv_bytes(&QUANTITY_HEADER, rows)?))
}

pub fn cutdist(cfg: &RunConfig) -> CliResult<RunOutput> {
    let a = cfg.inputs.graphon.as_ref().ok_or_else(|| missing("inputs.graphon"))?;
    let b = cfg.inputs.other.as_ref().ok_or_else(|| missing("inputs.other"))?;
    let d = cut_distance(a, b)?;
    // Only block relabelings are searched, so the value bounds the distance from above.
    let rows = [quantity_row("cut_distance", d.value, !d.restricted, None)];
    let mut out = text_output("cutdist.csv", csv_bytes(&QUANTITY_HEADER, rows)?);
    if d.restricted {
        out.warnings.push(format!("cut distance searched block relabelings of a {}-cell grid only", d.grid));
    }
    Ok(out)
}

fn model(cfg: &RunConfig) -> CliResult<(StateProcess, KernelMixture)> {
    let m = cfg.model()?;
    let process = m.process.build().map_err(|e| CliError::from(e).at("model.process"))?;
    let mixture = m.kernel.build().map_err(|e| CliError::from(e).at("model.kernel"))?;
    mixture.check_space(process.space()).map_err(|e| CliError::from(e).at("model.kernel vs model.process"))?;
    Ok((process, mixture))
}

fn pattern(cfg: &RunConfig) -> CliResult<SimpleGraph> {
    let analysis = cfg.analysis();
    if analysis.patterns.is_empty() {
        return Err(missing("analysis.patterns"));
    }
    analysis.patterns.get(analysis.pattern_index).cloned().ok_or_else(|| {
        CliError::Config(format!(
            "analysis.pattern_index {} is out of range for {} patterns",
            analysis.pattern_index,
            analysis.patterns.len()
        ))
    })
}

/// `sim` with `n_nodes` and, when `need_horizon`, `T` present.
fn sized_sim(cfg: &RunConfig, need_horizon: bool) -> CliResult<SimConfig> {
    let sim = *cfg.sim()?;
    if sim.n_nodes == 0 {
        return Err(missing("sim.n_nodes"));
    }
    if need_horizon && sim.horizon == 0 {
        return Err(missing("sim.T"));
    }
    Ok(sim)
}

fn graph_json(g: &SimpleGraph) -> CliResult<Vec<u8>> {
    json_line(g).map(String::into_bytes)
}

pub fn sample(cfg: &RunConfig) -> CliResult<RunOutput> {
    let (process, mixture) = model(cfg)?;
    let SimConfig { n_nodes, seed, .. } = sized_sim(cfg, false)?;
    let traj = simulate_mixture_trajectory(&mixture, &process, n_nodes, 1, seed)?;
    let mut out = text_output("sample.json", graph_json(&traj.snapshots[0])?);
    out.seed = Some(seed);
    out.kernel_used = Some(traj.kernel_used);
    Ok(out)
}

pub fn simulate(cfg: &RunConfig) -> CliResult<RunOutput> {
    let (process, mixture) = model(cfg)?;
    let SimConfig { n_nodes, horizon, seed } = sized_sim(cfg, true)?;
    let traj = simulate_mixture_trajectory(&mixture, &process, n_nodes, horizon, seed)?;
    let width = (horizon - 1).to_string().len().max(4);
    let files = traj
        .snapshots
        .iter()
        .enumerate()
        .map(|(t, g)| Ok((format!("step_{t:0width$}.json"), graph_json(g)?)))
        .collect::<CliResult<Vec<_>>>()?;
    let mut warnings = Vec::new();
    if !process.is_stationary() {
        warnings.push("state process does not start in its stationary law".into());
    }
    Ok(RunOutput {
        stdout: format!("{horizon} snapshots on {n_nodes} nodes\n"),
        files,
        seed: Some(seed),
        kernel_used: Some(traj.kernel_used),
        warnings,
    })
}

pub fn ergodic(cfg: &RunConfig) -> CliResult<RunOutput> {
    let (process, mixture) = model(cfg)?;
    let f = pattern(cfg)?;
    let seed = cfg.sim()?.seed;
    let n_steps = cfg.analysis().n_steps.ok_or_else(|| missing("analysis.n_steps"))?;
    if n_steps == 0 {
        return Err(CliError::Config("analysis.n_steps must be positive".into()));
    }
    let kernel = sample_kernel(&mixture, seed);
    let series = birkhoff_average(&process, &kernel, &f, n_steps, seed)?;
    let target = series.target.map(|t| t.to_string()).unwrap_or_default();
    let rows = series
        .partial_averages
        .iter()
        .enumerate()
        .map(|(i, a)| vec![(i + 1).to_string(), a.to_string(), target.clone()]);
    let mut out = text_output("ergodic.csv", csv_bytes(&["n", "partial_average", "target"], rows)?);
    out.seed = Some(seed);
    out.kernel_used = Some(kernel);
    if series.not_mixing {
        out.warnings.push("state process is not weakly mixing; the average need not converge to the target".into());
    }
    if series.target.is_none() {
        out.warnings.push("chain has no unique stationary law; no target".into());
    }
    Ok(out)
}

pub fn recurrence(cfg: &RunConfig) -> CliResult<RunOutput> {
    let (process, mixture) = model(cfg)?;
    let f = pattern(cfg)?;
    let SimConfig { n_nodes, horizon, seed } = sized_sim(cfg, true)?;
    let analysis = cfg.analysis();
    let watched = analysis.watched_nodes.clone().unwrap_or_else(|| (1..=f.n()).collect());
    if let Some(&bad) = watched.iter().find(|&&v| v == 0 || v > n_nodes) {
        return Err(CliError::Config(format!("watched node {bad} is outside 1..={n_nodes}")));
    }
    let mode = if analysis.labeled { MatchMode::Labeled } else { MatchMode::Isomorphic };
    let traj = simulate_mixture_trajectory(&mixture, &process, n_nodes, horizon, seed)?;
    let report = recurrence_count(&traj, &f, &watched, mode)?;
    let mut hits = report.return_times.iter().peekable();
    let rows = (0..horizon).map(|t| {
        let matched = hits.next_if_eq(&&t).is_some();
        vec![t.to_string(), u8::from(matched).to_string()]
    });
    let mut out = text_output("recurrence.csv", csv_bytes(&["t", "matched"], rows)?);
    out.seed = Some(seed);
    out.kernel_used = Some(traj.kernel_used);
    if report.non_stationary {
        out.warnings.push("state process is not stationary; recurrence is not guaranteed".into());
    }
    Ok(out)
}

pub fn invariance(cfg: &RunConfig) -> CliResult<RunOutput> {
    let w: &Graphon = cfg.inputs.graphon.as_ref().ok_or_else(|| missing("inputs.graphon"))?;
    let rows = cfg.inputs.transition.clone().ok_or_else(|| missing("inputs.transition"))?;
    let analysis = cfg.analysis();
    let p = if analysis.sinkhorn {
        Transition::sinkhorn(rows, SINKHORN_TOL, SINKHORN_MAX_ITER)?
    } else {
        Transition::new(rows)?
    };
    let steps = analysis.smoothing_steps.unwrap_or(DEFAULT_SMOOTHING_STEPS);
    let mut current = w.clone();
    let mut series = vec![vec!["0".to_string(), current.edge_density().to_string()]];
    for step in 1..=steps {
        current = kernel_smooth(&current, &p)?;
        series.push(vec![step.to_string(), current.edge_density().to_string()]);
    }
    Ok(text_output("invariance.csv", csv_bytes(&["step", "edge_density"], series)?))
}
