use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gridcf::eval::{
    crossovers, read_runs, runtime_breakdown, summarize, summarize_by_group, sweep_lambda, RunRecord, SolverSummary,
    OPTIMAL_TOLERANCE,
};
use gridcf::tasks::read_tasks;
use serde_json::json;

use super::ensure_dir;
use super::solve::TIMING_HEADER;
use crate::{manifest, plot, ReportArgs};

const SUMMARY_HEADER: &str =
    "solver,tasks,optimal_found_pct,cost_ratio_mean_pct,cost_ratio_std_pct,exp_ratio_mean_pct,exp_ratio_std_pct";

#[derive(Debug, Clone, PartialEq)]
pub struct TimingSpec {
    pub solver: String,
    pub batch_size: usize,
    pub path: PathBuf,
}

/// `<solver>@<batch size>=<path>`
pub fn parse_timing_spec(s: &str) -> Result<TimingSpec> {
    let (key, path) = s
        .split_once('=')
        .with_context(|| format!("timing spec {s:?} lacks '='"))?;
    let (solver, b) = key
        .rsplit_once('@')
        .with_context(|| format!("timing spec {s:?} lacks '@'"))?;
    let batch_size: usize = b.parse().with_context(|| format!("bad batch size in {s:?}"))?;
    if solver.is_empty() || batch_size == 0 || path.is_empty() {
        bail!("malformed timing spec {s:?}");
    }
    Ok(TimingSpec {
        solver: solver.to_string(),
        batch_size,
        path: PathBuf::from(path),
    })
}

/// Per-batch seconds from a `task_id,batch_id,seconds` file. Every task row
/// repeats its batch's wall time, so each batch id is counted once.
pub fn parse_timing(text: &str) -> Result<Vec<f64>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == TIMING_HEADER => {}
        other => bail!("timing file header should be {TIMING_HEADER:?}, got {other:?}"),
    }
    let mut batches: BTreeMap<u64, f64> = BTreeMap::new();
    for (n, line) in lines.enumerate() {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            bail!("timing line {}: expected 3 fields", n + 2);
        }
        let batch: u64 = fields[1]
            .parse()
            .with_context(|| format!("timing line {}: batch id", n + 2))?;
        let secs: f64 = fields[2]
            .parse()
            .with_context(|| format!("timing line {}: seconds", n + 2))?;
        if !(secs.is_finite() && secs >= 0.0) {
            bail!("timing line {}: seconds must be finite and non-negative", n + 2);
        }
        if let Some(prev) = batches.insert(batch, secs) {
            if prev != secs {
                bail!(
                    "timing line {}: batch {batch} has conflicting times {prev} and {secs}",
                    n + 2
                );
            }
        }
    }
    Ok(batches.into_values().collect())
}

fn summary_row(s: &SolverSummary) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        s.solver,
        s.tasks.len(),
        s.optimal_found_pct,
        s.cost_ratio_mean_pct,
        s.cost_ratio_std_pct,
        s.exp_ratio_mean_pct,
        s.exp_ratio_std_pct
    )
}

pub fn markdown_table(summaries: &[SolverSummary]) -> String {
    let mut out = String::from("| Solver | Optimal Found, % | Cost Ratio, % | Exp. Ratio, % |\n|---|---:|---:|---:|\n");
    for s in summaries {
        writeln!(
            out,
            "| {} | {:.2} | {:.1}±{:.1} | {:.1}±{:.1} |",
            s.solver,
            s.optimal_found_pct,
            s.cost_ratio_mean_pct,
            s.cost_ratio_std_pct,
            s.exp_ratio_mean_pct,
            s.exp_ratio_std_pct
        )
        .unwrap();
    }
    out
}

/// Splits run files by solver, keeping first-appearance order.
fn load_runs(paths: &[PathBuf]) -> Result<Vec<(String, Vec<RunRecord>)>> {
    let mut groups: Vec<(String, Vec<RunRecord>)> = Vec::new();
    for p in paths {
        let runs = read_runs(p).with_context(|| format!("reading runs {}", p.display()))?;
        for r in runs {
            match groups.iter_mut().find(|(s, _)| *s == r.solver) {
                Some((_, v)) => v.push(r),
                None => groups.push((r.solver.clone(), vec![r])),
            }
        }
    }
    Ok(groups)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::write(dir.join(name), text).with_context(|| format!("writing {name}"))
}

pub fn report(args: &ReportArgs) -> Result<()> {
    if args.lambdas.is_empty() {
        bail!("--lambdas must not be empty");
    }
    if let Some(l) = args.lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        bail!("lambda {l} outside [0, 1]");
    }
    let timing_specs = args
        .prediction_timing
        .iter()
        .map(|s| parse_timing_spec(s))
        .collect::<Result<Vec<_>>>()?;

    let tasks = read_tasks(&args.tasks)?;
    let optimal: Vec<f64> = tasks.iter().map(|t| t.optimal_cost).collect();
    let topology: Vec<String> = tasks.iter().map(|t| t.topology()).collect();
    let baseline =
        read_runs(&args.baseline).with_context(|| format!("reading baseline {}", args.baseline.display()))?;
    let base_ids: BTreeSet<usize> = baseline.iter().map(|r| r.task_id).collect();
    let task_ids: BTreeSet<usize> = (0..tasks.len()).collect();
    if base_ids != task_ids {
        let missing: Vec<_> = task_ids.difference(&base_ids).collect();
        let extra: Vec<_> = base_ids.difference(&task_ids).collect();
        bail!("baseline does not cover the task file: missing {missing:?}, extra {extra:?}");
    }

    let groups = load_runs(&args.runs)?;
    let summaries = groups
        .iter()
        .map(|(_, runs)| summarize(runs, &baseline, &optimal).map_err(anyhow::Error::from))
        .collect::<Result<Vec<_>>>()?;
    ensure_dir(&args.out_dir)?;

    let mut summary_csv = format!("{SUMMARY_HEADER}\n");
    for s in &summaries {
        writeln!(summary_csv, "{}", summary_row(s)).unwrap();
    }
    write(&args.out_dir, "summary.csv", &summary_csv)?;
    let table = markdown_table(&summaries);
    write(&args.out_dir, "summary.md", &table)?;

    let mut topo_csv = format!("topology,{SUMMARY_HEADER}\n");
    let mut topologies = BTreeSet::new();
    for s in &summaries {
        for (topo, sub) in summarize_by_group(s, |id| topology[id].clone()) {
            writeln!(topo_csv, "{topo},{}", summary_row(&sub)).unwrap();
            topologies.insert(topo);
        }
    }
    write(&args.out_dir, "topology.csv", &topo_csv)?;

    let rows = sweep_lambda(&summaries, &args.lambdas)?;
    let mut lambda_csv = String::from("solver");
    for l in &args.lambdas {
        write!(lambda_csv, ",lambda={l}").unwrap();
    }
    lambda_csv.push('\n');
    for row in &rows {
        lambda_csv.push_str(&row.solver);
        for (_, j) in &row.values {
            write!(lambda_csv, ",{j}").unwrap();
        }
        lambda_csv.push('\n');
    }
    write(&args.out_dir, "lambda.csv", &lambda_csv)?;

    let mut cross_csv = String::from("first,second,lambda\n");
    for c in crossovers(&summaries) {
        writeln!(cross_csv, "{},{},{}", c.first, c.second, c.lambda).unwrap();
    }
    write(&args.out_dir, "crossovers.csv", &cross_csv)?;

    let mut batch_sizes: Vec<usize> = timing_specs.iter().map(|t| t.batch_size).collect();
    batch_sizes.sort_unstable();
    batch_sizes.dedup();
    if batch_sizes.is_empty() {
        batch_sizes.push(1);
    }
    let mut runtime_csv = String::from("solver,batch_size,prediction_s,search_s,total_s\n");
    let mut runtime_series = Vec::new();
    for (solver, runs) in &groups {
        let per_task: f64 = runs.iter().map(|r| r.predict_time).sum();
        let mut prediction: HashMap<usize, Vec<f64>> = HashMap::new();
        for &b in &batch_sizes {
            let times = match timing_specs.iter().find(|t| &t.solver == solver && t.batch_size == b) {
                Some(spec) => {
                    let text = fs::read_to_string(&spec.path)
                        .with_context(|| format!("reading timing {}", spec.path.display()))?;
                    parse_timing(&text).with_context(|| format!("parsing timing {}", spec.path.display()))?
                }
                None => vec![per_task],
            };
            prediction.insert(b, times);
        }
        let rows = runtime_breakdown(runs, solver, &batch_sizes, &prediction);
        for r in &rows {
            writeln!(
                runtime_csv,
                "{},{},{},{},{}",
                r.solver, r.batch_size, r.prediction_s, r.search_s, r.total_s
            )
            .unwrap();
        }
        runtime_series.push((solver.clone(), rows.iter().map(|r| r.total_s).collect::<Vec<_>>()));
    }
    write(&args.out_dir, "runtime.csv", &runtime_csv)?;

    let lines: Vec<(String, Vec<(f64, f64)>)> = rows.iter().map(|r| (r.solver.clone(), r.values.clone())).collect();
    write(
        &args.out_dir,
        "tradeoff.svg",
        &plot::line_chart("Mean J by lambda", "lambda", "mean J", &lines),
    )?;
    let cats: Vec<String> = batch_sizes.iter().map(|b| b.to_string()).collect();
    write(
        &args.out_dir,
        "runtime.svg",
        &plot::bar_chart(
            "Total runtime by batch size",
            "batch size",
            "seconds",
            &cats,
            &runtime_series,
        ),
    )?;

    let config = json!({
        "runs": args.runs,
        "baseline": args.baseline,
        "tasks": args.tasks,
        "lambdas": args.lambdas,
        "prediction_timing": args.prediction_timing,
        "out_dir": args.out_dir,
    });
    let mut m = manifest::build("report", config, json!([]));
    m["conventions"] = json!({
        "baseline_solver": baseline.first().map(|r| r.solver.clone()),
        "mean": "arithmetic mean over tasks",
        "spread": "population standard deviation over tasks (the ± in summary.md)",
        "ratios": "solver cost or expansions divided by the baseline's on the same task",
        "optimal_tolerance": OPTIMAL_TOLERANCE,
        "objective": "J = (1 - lambda) * cost_ratio + lambda * exp_ratio, averaged over tasks",
        "topology": "map file stem without its trailing _<index>",
        "prediction_timing": "per-batch seconds summed over distinct batch ids; runs without a timing file use their per-task predict_time sum",
        "search_policy": "f = g + w*h, ties prefer larger g then insertion order; cheaper paths re-open closed nodes",
    });
    m["topologies"] = json!(topologies);
    manifest::write(&args.out_dir.join("meta.json"), &m)?;

    print!("{table}");
    Ok(())
}
