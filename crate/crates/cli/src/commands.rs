use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ccrm::analysis::predictive::{graph_stats, ALL_STATS};
use ccrm::analysis::{
    bayes_point_estimate, community_reorder, credible_intervals, degree_distribution, degree_summary,
    posterior_predictive, sparsity_scan, NodeSelector,
};
use ccrm::graph::generate_graph;
use ccrm::inference::run_mcmc;
use ccrm::io::{load_edge_list, load_traces, save_edge_list, save_traces, write_json, RunConfig};
use ccrm::{SparseGraph, Trace};
use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::output::{acceptance, hyper_summaries, num, Table};
use crate::{Command, Common};

/// Bad flags or missing inputs detected by the CLI itself.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match e.downcast_ref::<ccrm::Error>() {
        Some(ce) if ce.is_config_error() => 2,
        _ => 3,
    }
}

pub fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Generate { common, seed } => generate(&common, seed),
        Command::Fit { common, seed, graph } => fit(&common, seed, graph),
        Command::Predict {
            common,
            seed,
            traces,
            graph,
            samples,
            level,
        } => predict(&common, seed, traces, graph, samples, level),
        Command::Report {
            common,
            traces,
            graph,
            subsample,
            level,
        } => report(&common, traces, graph, subsample, level),
        Command::Scan { common, seed } => scan(&common, seed),
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => RunConfig::load(p).map_err(|e| UsageError(e.to_string()).into()),
    }
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(UsageError(format!("--level must lie in (0, 1), got {level}")).into())
    }
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
}

impl Ctx {
    fn new(common: &Common) -> Result<Self> {
        let cfg = load_config(common.config.as_deref())?;
        let out = common
            .out
            .clone()
            .or_else(|| cfg.io.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        Ok(Ctx { cfg, out })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn graph_path(&self, flag: Option<PathBuf>) -> Result<PathBuf> {
        flag.or_else(|| self.cfg.io.graph.clone())
            .ok_or_else(|| UsageError("no graph given: pass --graph or set io.graph".into()).into())
    }

    fn trace_dir(&self, flag: Option<PathBuf>) -> PathBuf {
        flag.or_else(|| self.cfg.io.trace_dir.clone())
            .unwrap_or_else(|| self.out.join("traces"))
    }
}

fn load_graph(path: &Path) -> Result<SparseGraph> {
    let g = load_edge_list(path)?;
    info!("{}: {} nodes, {} edges", path.display(), g.n_nodes(), g.n_edges());
    Ok(g)
}

fn load_fit(dir: &Path) -> Result<Vec<Trace>> {
    let traces = load_traces(dir)?;
    if traces.iter().all(|t| t.post_burnin().next().is_none()) {
        return Err(UsageError(format!("{}: no post-burn-in records", dir.display())).into());
    }
    Ok(traces)
}

fn generate(common: &Common, seed: u64) -> Result<()> {
    let ctx = Ctx::new(common)?;
    let params = ctx.cfg.model.params()?;
    let alpha = ctx.cfg.generate.alpha;
    let epsilon = ctx.cfg.generate_epsilon(alpha);
    let g = generate_graph(&params, alpha, epsilon, seed)?;
    let (graph, keep) = g.graph.connected_subgraph();
    let p = params.p();

    save_edge_list(&graph, ctx.path("graph.txt"))?;

    let mut new_id = vec![None; g.atoms.len()];
    keep.iter().enumerate().for_each(|(n, &i)| new_id[i] = Some(n));
    let mut weights = Table::new(
        ["node".to_string(), "w0".into()]
            .into_iter()
            .chain((1..=p).map(|k| format!("beta_{k}")))
            .chain((1..=p).map(|k| format!("w_{k}"))),
    );
    for (n, &i) in keep.iter().enumerate() {
        let mut row = vec![n.to_string(), num(g.atoms.w0()[i])];
        row.extend(g.atoms.beta_row(i).iter().map(|&x| num(x)));
        row.extend((0..p).map(|k| num(g.atoms.weight(i, k))));
        weights.push(row);
    }
    weights.write(&ctx.path("truth_weights.csv"))?;

    let mut counts = Table::new(["i", "j", "k", "count"]);
    for &((i, j, k), c) in g.counts.entries() {
        if let (Some(a), Some(b)) = (new_id[i], new_id[j]) {
            counts.push(vec![a.to_string(), b.to_string(), (k + 1).to_string(), c.to_string()]);
        }
    }
    counts.write(&ctx.path("truth_counts.csv"))?;

    let mut w_star = vec![0.0; p];
    for i in (0..g.atoms.len()).filter(|&i| new_id[i].is_none()) {
        w_star
            .iter_mut()
            .enumerate()
            .for_each(|(k, w)| *w += g.atoms.weight(i, k));
    }
    let summary = json!({
        "seed": seed,
        "alpha": alpha,
        "epsilon": epsilon,
        "params": params,
        "n_atoms": g.atoms.len(),
        "n_nodes": graph.n_nodes(),
        "n_edges": graph.n_edges(),
        "n_self_loops": graph.n_self_loops(),
        "w_star_unobserved": w_star,
    });
    write_json(&summary, &ctx.path("truth.json"))?;
    println!(
        "generated {} nodes, {} edges -> {}",
        graph.n_nodes(),
        graph.n_edges(),
        ctx.out.display()
    );
    Ok(())
}

fn fit(common: &Common, seed: u64, graph: Option<PathBuf>) -> Result<()> {
    let ctx = Ctx::new(common)?;
    let graph_path = ctx.graph_path(graph)?;
    let graph = load_graph(&graph_path)?;
    let config = ctx.cfg.mcmc_config(seed)?;
    info!("running {} chains of {} iterations", config.chains, config.iters);
    let traces = run_mcmc(&graph, &config)?;
    let dir = ctx.trace_dir(None);
    save_traces(&traces, &dir)?;
    let summary = json!({
        "graph": graph_path,
        "n_nodes": graph.n_nodes(),
        "n_edges": graph.n_edges(),
        "seed": seed,
        "config": config,
        "trace_dir": dir,
        "acceptance": acceptance(&traces),
        "posterior": hyper_summaries(&traces, 0.95),
    });
    write_json(&summary, &ctx.path("fit_summary.json"))?;
    println!("fit {} chains -> {}", traces.len(), dir.display());
    Ok(())
}

fn predict(
    common: &Common,
    seed: Option<u64>,
    traces: Option<PathBuf>,
    graph: Option<PathBuf>,
    samples: usize,
    level: f64,
) -> Result<()> {
    check_level(level)?;
    if samples == 0 {
        return Err(UsageError("--samples must be >= 1".into()).into());
    }
    let ctx = Ctx::new(common)?;
    let seed = seed.or(ctx.cfg.generate.seed).unwrap_or(0);
    let traces = load_fit(&ctx.trace_dir(traces))?;
    let template = ctx.cfg.model.params()?;
    if template.p() != traces[0].p {
        return Err(UsageError(format!(
            "model.p = {} but the traces have p = {}",
            template.p(),
            traces[0].p
        ))
        .into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let result = posterior_predictive(&traces, &template, samples, &ALL_STATS, level, &mut rng)?;

    let observed = match graph.or_else(|| ctx.cfg.io.graph.clone()) {
        Some(path) => Some(graph_stats(&load_graph(&path)?, &ALL_STATS)),
        None => None,
    };
    let obs_deg = observed.as_ref().and_then(|o| o.degree_distribution.clone());

    let mut table = Table::new([
        "bin",
        "degree_from",
        "degree_to",
        "observed",
        "lower",
        "median",
        "upper",
    ]);
    let n_bins = result.degree_bands.len().max(obs_deg.as_ref().map_or(0, Vec::len));
    for j in 0..n_bins {
        let band = result.degree_bands.get(j);
        let cell = |f: fn(&ccrm::analysis::Band) -> f64| band.map_or_else(|| num(0.0), |b| num(f(b)));
        let obs = obs_deg
            .as_ref()
            .map_or(String::new(), |d| num(d.get(j).copied().unwrap_or(0.0)));
        table.push(vec![
            j.to_string(),
            (1usize << j).to_string(),
            ((1usize << (j + 1)) - 1).to_string(),
            obs,
            cell(|b| b.lower),
            cell(|b| b.median),
            cell(|b| b.upper),
        ]);
    }
    table.write(&ctx.path("predictive_degree.csv"))?;

    let coverage = obs_deg.as_ref().map(|d| result.degree_coverage(d));
    let summary = json!({
        "seed": seed,
        "samples": result.samples.len(),
        "level": level,
        "degree_bands": result.degree_bands,
        "degree_std_band": result.degree_std_band,
        "clustering_band": result.clustering_band,
        "observed": observed,
        "degree_coverage": coverage,
    });
    write_json(&summary, &ctx.path("predictive.json"))?;
    match coverage {
        Some(c) => println!("predictive: {} samples, degree coverage {c:.3}", result.samples.len()),
        None => println!("predictive: {} samples", result.samples.len()),
    }
    Ok(())
}

fn report(
    common: &Common,
    traces: Option<PathBuf>,
    graph: Option<PathBuf>,
    subsample: usize,
    level: f64,
) -> Result<()> {
    check_level(level)?;
    if subsample == 0 {
        return Err(UsageError("--subsample must be >= 1".into()).into());
    }
    let ctx = Ctx::new(common)?;
    let graph_path = ctx.graph_path(graph)?;
    let graph = load_graph(&graph_path)?;
    let traces = load_fit(&ctx.trace_dir(traces))?;
    let p = traces[0].p;
    if traces[0].n_nodes != graph.n_nodes() {
        return Err(UsageError(format!(
            "traces have {} nodes but {} has {}",
            traces[0].n_nodes,
            graph_path.display(),
            graph.n_nodes()
        ))
        .into());
    }

    let estimate = bayes_point_estimate(&traces, subsample)?;
    let ordering = community_reorder(&estimate);
    let intervals = credible_intervals(&traces, &graph, &NodeSelector::All, level)?;
    let degrees = degree_summary(&graph);

    let mut est = Table::new(
        ["node".to_string(), "label".into(), "degree".into(), "community".into()]
            .into_iter()
            .chain((1..=p).map(|k| format!("w_{k}"))),
    );
    for i in 0..graph.n_nodes() {
        let mut row = vec![
            i.to_string(),
            graph.label(i),
            degrees.degrees[i].to_string(),
            (ordering.community[i] + 1).to_string(),
        ];
        row.extend(estimate.w_hat[i * p..(i + 1) * p].iter().map(|&x| num(x)));
        est.push(row);
    }
    est.write(&ctx.path("point_estimate.csv"))?;

    let mut order = Table::new(["rank", "node", "label", "community"]);
    for (r, &i) in ordering.order.iter().enumerate() {
        order.push(vec![
            r.to_string(),
            i.to_string(),
            graph.label(i),
            (ordering.community[i] + 1).to_string(),
        ]);
    }
    order.write(&ctx.path("community_order.csv"))?;

    let mut ci = Table::new(["node", "label", "degree", "lower", "median", "upper"]);
    for x in &intervals {
        ci.push(vec![
            x.node.to_string(),
            graph.label(x.node),
            x.degree.to_string(),
            num(x.lower),
            num(x.median),
            num(x.upper),
        ]);
    }
    ci.write(&ctx.path("credible_intervals.csv"))?;

    let mut hist = Table::new(["degree", "count"]);
    for (d, c) in &degrees.histogram {
        hist.push(vec![d.to_string(), c.to_string()]);
    }
    hist.write(&ctx.path("degree_histogram.csv"))?;

    let mut dist = Table::new(["bin", "degree_from", "degree_to", "fraction"]);
    for (j, f) in degree_distribution(&graph).iter().enumerate() {
        dist.push(vec![
            j.to_string(),
            (1usize << j).to_string(),
            ((1usize << (j + 1)) - 1).to_string(),
            num(*f),
        ]);
    }
    dist.write(&ctx.path("degree_distribution.csv"))?;

    let mut sizes = vec![0usize; p];
    ordering.community.iter().for_each(|&c| sizes[c] += 1);
    let summary = json!({
        "graph": graph_path,
        "n_nodes": graph.n_nodes(),
        "n_edges": graph.n_edges(),
        "level": level,
        "posterior": hyper_summaries(&traces, level),
        "acceptance": acceptance(&traces),
        "point_estimate": {
            "chain": estimate.chain,
            "iter": estimate.iter,
            "risk": estimate.risk,
            "w_star": estimate.w_star_hat,
        },
        "community_sizes": sizes,
        "degrees": {
            "mean": degrees.mean,
            "std": degrees.std,
            "max": degrees.degrees.iter().max(),
            "clustering": degrees.clustering,
        },
    });
    write_json(&summary, &ctx.path("report.json"))?;
    println!("report -> {}", ctx.out.display());
    Ok(())
}

fn scan(common: &Common, seed: Option<u64>) -> Result<()> {
    let ctx = Ctx::new(common)?;
    let seed = seed.or(ctx.cfg.generate.seed).unwrap_or(0);
    let params = ctx.cfg.model.params()?;
    let g = &ctx.cfg.generate;
    let run = sparsity_scan(&params, &g.alpha_grid, g.reps, seed)?;
    let mut table = Table::new(["alpha", "n_nodes", "n_edges"]);
    for pt in &run.points {
        table.push(vec![num(pt.alpha), num(pt.n_nodes), num(pt.n_edges)]);
    }
    table.write(&ctx.path("scan.csv"))?;
    let summary = json!({
        "seed": seed,
        "params": params,
        "reps": g.reps,
        "points": run.points,
        "slope": run.slope,
        "intercept": run.intercept,
        "slope_se": run.slope_se,
    });
    write_json(&summary, &ctx.path("scan.json"))?;
    println!("scan slope {:.4} +- {:.4}", run.slope, run.slope_se);
    Ok(())
}
