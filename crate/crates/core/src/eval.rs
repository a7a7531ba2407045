//! Benchmark metrics: per-task cost and expansion ratios against a baseline
//! solver, optimal-found rate, the `J(λ) = (1-λ)·f1 + λ·f2` trade-off, and
//! runtime accounting.
//!
//! Means are arithmetic over tasks; the `±` spread is the population standard
//! deviation over tasks.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Absolute tolerance for calling a returned cost optimal.
pub const OPTIMAL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub task_id: usize,
    pub solver: String,
    pub found: bool,
    pub cost: f64,
    pub expansions: u64,
    /// Seconds spent producing or loading the heuristic (0 for classical solvers).
    pub predict_time: f64,
    pub search_time: f64,
}

pub fn cost_ratio(run: &RunRecord, baseline: &RunRecord) -> Result<f64> {
    check_pair(run, baseline)?;
    if baseline.cost <= 0.0 {
        return Err(Error::contract(format!(
            "task {}: baseline cost is 0 (start = goal tasks must be excluded)",
            run.task_id
        )));
    }
    Ok(run.cost / baseline.cost)
}

pub fn exp_ratio(run: &RunRecord, baseline: &RunRecord) -> Result<f64> {
    check_pair(run, baseline)?;
    if baseline.expansions == 0 {
        return Err(Error::contract(format!(
            "task {}: baseline made no expansions (start = goal tasks must be excluded)",
            run.task_id
        )));
    }
    Ok(run.expansions as f64 / baseline.expansions as f64)
}

fn check_pair(run: &RunRecord, baseline: &RunRecord) -> Result<()> {
    if run.task_id != baseline.task_id {
        return Err(Error::contract(format!(
            "comparing task {} against baseline task {}",
            run.task_id, baseline.task_id
        )));
    }
    if !run.found || !baseline.found {
        return Err(Error::contract(format!(
            "task {}: both runs must have found a path",
            run.task_id
        )));
    }
    Ok(())
}

pub fn optimal_found(run: &RunRecord, optimal_cost: f64) -> bool {
    run.found && (run.cost - optimal_cost).abs() <= OPTIMAL_TOLERANCE
}

pub fn j_objective(f1: f64, f2: f64, lambda: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::config(format!("lambda {lambda} outside [0, 1]")));
    }
    Ok((1.0 - lambda) * f1 + lambda * f2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskRatios {
    pub task_id: usize,
    pub cost_ratio: f64,
    pub exp_ratio: f64,
    pub optimal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSummary {
    pub solver: String,
    pub tasks: Vec<TaskRatios>,
    pub optimal_found_pct: f64,
    pub cost_ratio_mean_pct: f64,
    pub cost_ratio_std_pct: f64,
    pub exp_ratio_mean_pct: f64,
    pub exp_ratio_std_pct: f64,
}

impl SolverSummary {
    pub fn mean_cost_ratio(&self) -> f64 {
        mean(self.tasks.iter().map(|t| t.cost_ratio))
    }

    pub fn mean_exp_ratio(&self) -> f64 {
        mean(self.tasks.iter().map(|t| t.exp_ratio))
    }

    /// Mean of the per-task `J(λ)`.
    pub fn mean_j(&self, lambda: f64) -> Result<f64> {
        let js = self
            .tasks
            .iter()
            .map(|t| j_objective(t.cost_ratio, t.exp_ratio, lambda))
            .collect::<Result<Vec<_>>>()?;
        Ok(mean(js.into_iter()))
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

fn population_std(xs: &[f64]) -> f64 {
    let m = mean(xs.iter().copied());
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

fn index_by_task<'a>(runs: &'a [RunRecord], what: &str) -> Result<BTreeMap<usize, &'a RunRecord>> {
    let mut map = BTreeMap::new();
    for r in runs {
        if map.insert(r.task_id, r).is_some() {
            return Err(Error::config(format!("{what}: task {} appears twice", r.task_id)));
        }
    }
    Ok(map)
}

/// Compares `runs` with `baseline` task by task. Both must cover exactly the
/// same task ids; `optimal_costs` is indexed by task id.
pub fn summarize(runs: &[RunRecord], baseline: &[RunRecord], optimal_costs: &[f64]) -> Result<SolverSummary> {
    let solver = runs
        .first()
        .map(|r| r.solver.clone())
        .ok_or_else(|| Error::config("no runs to summarize"))?;
    let by_task = index_by_task(runs, &solver)?;
    let base = index_by_task(baseline, "baseline")?;
    let ids: BTreeSet<usize> = by_task.keys().copied().collect();
    let base_ids: BTreeSet<usize> = base.keys().copied().collect();
    if ids != base_ids {
        let missing: Vec<_> = base_ids.difference(&ids).collect();
        let extra: Vec<_> = ids.difference(&base_ids).collect();
        return Err(Error::config(format!(
            "solver {solver} task set differs from baseline: missing {missing:?}, extra {extra:?}"
        )));
    }

    let mut tasks = Vec::with_capacity(ids.len());
    for (id, run) in &by_task {
        let b = base[id];
        let optimal = *optimal_costs
            .get(*id)
            .ok_or_else(|| Error::config(format!("no optimal cost for task {id}")))?;
        tasks.push(TaskRatios {
            task_id: *id,
            cost_ratio: cost_ratio(run, b)?,
            exp_ratio: exp_ratio(run, b)?,
            optimal: optimal_found(run, optimal),
        });
    }
    Ok(summary_from(solver, tasks))
}

fn summary_from(solver: String, tasks: Vec<TaskRatios>) -> SolverSummary {
    let costs: Vec<f64> = tasks.iter().map(|t| t.cost_ratio).collect();
    let exps: Vec<f64> = tasks.iter().map(|t| t.exp_ratio).collect();
    let optimal = tasks.iter().filter(|t| t.optimal).count();
    SolverSummary {
        solver,
        optimal_found_pct: 100.0 * optimal as f64 / tasks.len() as f64,
        cost_ratio_mean_pct: 100.0 * mean(costs.iter().copied()),
        cost_ratio_std_pct: 100.0 * population_std(&costs),
        exp_ratio_mean_pct: 100.0 * mean(exps.iter().copied()),
        exp_ratio_std_pct: 100.0 * population_std(&exps),
        tasks,
    }
}

/// Splits a summary by a per-task group label (e.g. topology).
pub fn summarize_by_group(
    summary: &SolverSummary,
    group_of: impl Fn(usize) -> String,
) -> BTreeMap<String, SolverSummary> {
    let mut groups: BTreeMap<String, Vec<TaskRatios>> = BTreeMap::new();
    for t in &summary.tasks {
        groups.entry(group_of(t.task_id)).or_default().push(*t);
    }
    groups
        .into_iter()
        .map(|(g, tasks)| (g, summary_from(summary.solver.clone(), tasks)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaRow {
    pub solver: String,
    /// `(λ, mean J)` pairs in grid order.
    pub values: Vec<(f64, f64)>,
}

pub fn sweep_lambda(summaries: &[SolverSummary], lambdas: &[f64]) -> Result<Vec<LambdaRow>> {
    summaries
        .iter()
        .map(|s| {
            let values = lambdas
                .iter()
                .map(|&l| Ok((l, s.mean_j(l)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(LambdaRow {
                solver: s.solver.clone(),
                values,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Crossover {
    pub first: String,
    pub second: String,
    pub lambda: f64,
}

/// λ in `[0, 1]` where the mean-J lines of two solvers with mean ratios
/// `(f1a, f2a)` and `(f1b, f2b)` intersect, if they do so at a single point.
pub fn crossover_lambda(a: (f64, f64), b: (f64, f64)) -> Option<f64> {
    let d1 = a.0 - b.0;
    let d2 = a.1 - b.1;
    let denom = d1 - d2;
    if denom.abs() < 1e-15 {
        return None;
    }
    // + 0.0 turns a -0 into 0
    let lambda = d1 / denom + 0.0;
    (0.0..=1.0).contains(&lambda).then_some(lambda)
}

pub fn crossovers(summaries: &[SolverSummary]) -> Vec<Crossover> {
    let means: Vec<(f64, f64)> = summaries
        .iter()
        .map(|s| (s.mean_cost_ratio(), s.mean_exp_ratio()))
        .collect();
    let mut out = Vec::new();
    for i in 0..summaries.len() {
        for j in i + 1..summaries.len() {
            if let Some(lambda) = crossover_lambda(means[i], means[j]) {
                out.push(Crossover {
                    first: summaries[i].solver.clone(),
                    second: summaries[j].solver.clone(),
                    lambda,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeRow {
    pub solver: String,
    pub batch_size: usize,
    pub prediction_s: f64,
    pub search_s: f64,
    pub total_s: f64,
}

/// Total runtime per batch size. Search time does not depend on batching and is
/// taken from the run records; `prediction` maps each batch size to its
/// per-batch wall times (missing batch sizes count as 0, as for classical solvers).
pub fn runtime_breakdown(
    runs: &[RunRecord],
    solver: &str,
    batch_sizes: &[usize],
    prediction: &HashMap<usize, Vec<f64>>,
) -> Vec<RuntimeRow> {
    let search_s: f64 = runs.iter().filter(|r| r.solver == solver).map(|r| r.search_time).sum();
    batch_sizes
        .iter()
        .map(|&b| {
            let prediction_s: f64 = prediction.get(&b).map_or(0.0, |v| v.iter().sum());
            RuntimeRow {
                solver: solver.to_string(),
                batch_size: b,
                prediction_s,
                search_s,
                total_s: prediction_s + search_s,
            }
        })
        .collect()
}

pub const RUN_HEADER: &str = "task_id,solver,found,cost,expansions,predict_time,search_time";

pub fn format_runs(runs: &[RunRecord]) -> String {
    let mut out = String::from(RUN_HEADER);
    out.push('\n');
    for r in runs {
        // `{}` on f64 is the shortest representation that round-trips
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.task_id,
            r.solver,
            u8::from(r.found),
            if r.found { r.cost.to_string() } else { "inf".into() },
            r.expansions,
            r.predict_time,
            r.search_time
        )
        .unwrap();
    }
    out
}

pub fn parse_runs(text: &str) -> Result<Vec<RunRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == RUN_HEADER => {}
        _ => return Err(Error::parse(1, format!("expected header {RUN_HEADER:?}"))),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.trim_end().split(',').collect();
        if f.len() != 7 {
            return Err(Error::parse(no, format!("expected 7 fields, found {}", f.len())));
        }
        let bad = |what: &str, v: &str| Error::parse(no, format!("bad {what} {v:?}"));
        let float = |what: &str, v: &str| v.parse::<f64>().map_err(|_| bad(what, v));
        out.push(RunRecord {
            task_id: f[0].parse().map_err(|_| bad("task id", f[0]))?,
            solver: f[1].to_string(),
            found: match f[2] {
                "1" => true,
                "0" => false,
                v => return Err(bad("found flag", v)),
            },
            cost: float("cost", f[3])?,
            expansions: f[4].parse().map_err(|_| bad("expansions", f[4]))?,
            predict_time: float("predict time", f[5])?,
            search_time: float("search time", f[6])?,
        });
    }
    Ok(out)
}

pub fn write_runs(path: impl AsRef<Path>, runs: &[RunRecord]) -> Result<()> {
    fs::write(path, format_runs(runs))?;
    Ok(())
}

pub fn read_runs(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    parse_runs(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(task_id: usize, cost: f64, expansions: u64) -> RunRecord {
        RunRecord {
            task_id,
            solver: "x".into(),
            found: true,
            cost,
            expansions,
            predict_time: 0.0,
            search_time: 0.001,
        }
    }

    #[test]
    fn ratio_arithmetic() {
        let base = run(0, 100.0, 100);
        assert_eq!(cost_ratio(&base, &base).unwrap(), 1.0);
        assert_eq!(exp_ratio(&base, &base).unwrap(), 1.0);
        assert!((cost_ratio(&run(0, 105.0, 1), &base).unwrap() - 1.05).abs() < 1e-12);
        assert_eq!(exp_ratio(&run(0, 1.0, 50), &base).unwrap(), 0.5);
        assert!(cost_ratio(&run(1, 1.0, 1), &base).is_err());
        assert!(cost_ratio(&base, &run(0, 0.0, 0)).is_err());
        assert!(exp_ratio(&base, &run(0, 3.0, 0)).is_err());
        let mut lost = base.clone();
        lost.found = false;
        assert!(cost_ratio(&lost, &base).is_err());
    }

    #[test]
    fn optimality_tolerance() {
        assert!(optimal_found(&run(0, 10.0, 1), 10.0));
        assert!(optimal_found(&run(0, 10.0 + 5e-7, 1), 10.0));
        assert!(!optimal_found(&run(0, 10.5, 1), 10.0));
    }

    #[test]
    fn j_values() {
        assert_eq!(j_objective(1.2, 0.4, 0.0).unwrap(), 1.2);
        assert_eq!(j_objective(1.2, 0.4, 1.0).unwrap(), 0.4);
        assert!((j_objective(1.011, 0.474, 0.5).unwrap() - 0.7425).abs() < 1e-12);
        assert!(j_objective(1.0, 1.0, 1.5).is_err());
        assert!(j_objective(1.0, 1.0, -0.1).is_err());
    }

    #[test]
    fn baseline_against_itself_is_exactly_one_hundred() {
        let base: Vec<_> = (0..7)
            .map(|i| run(i, 10.0 + i as f64 * 1.37, 13 + i as u64 * 7))
            .collect();
        let optimal: Vec<_> = base.iter().map(|r| r.cost).collect();
        let s = summarize(&base, &base, &optimal).unwrap();
        assert_eq!(s.optimal_found_pct, 100.0);
        assert_eq!(s.cost_ratio_mean_pct, 100.0);
        assert_eq!(s.exp_ratio_mean_pct, 100.0);
        assert_eq!(s.cost_ratio_std_pct, 0.0);
    }

    #[test]
    fn mismatched_task_sets_are_reported() {
        let base: Vec<_> = (0..3).map(|i| run(i, 5.0, 5)).collect();
        let partial = vec![run(0, 5.0, 5), run(2, 5.0, 5)];
        let err = summarize(&partial, &base, &[5.0; 3]).unwrap_err().to_string();
        assert!(err.contains("missing [1]"), "{err}");
    }

    #[test]
    fn summary_statistics() {
        let base = vec![run(0, 10.0, 100), run(1, 10.0, 100)];
        let other = vec![run(0, 10.0, 50), run(1, 12.0, 100)];
        let s = summarize(&other, &base, &[10.0, 10.0]).unwrap();
        assert_eq!(s.optimal_found_pct, 50.0);
        assert!((s.cost_ratio_mean_pct - 110.0).abs() < 1e-9);
        assert!((s.cost_ratio_std_pct - 10.0).abs() < 1e-9);
        assert!((s.exp_ratio_mean_pct - 75.0).abs() < 1e-9);
        assert!((s.exp_ratio_std_pct - 25.0).abs() < 1e-9);
    }

    fn fixed(solver: &str, f1: f64, f2: f64, n: usize) -> SolverSummary {
        let tasks = (0..n)
            .map(|i| TaskRatios {
                task_id: i,
                cost_ratio: f1,
                exp_ratio: f2,
                optimal: true,
            })
            .collect();
        summary_from(solver.into(), tasks)
    }

    #[test]
    fn sweep_constant_rows_and_monotonicity() {
        let s = fixed("a", 1.1, 0.4, 4);
        let rows = sweep_lambda(&[s], &[0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
        for (l, j) in &rows[0].values {
            assert!((j - j_objective(1.1, 0.4, *l).unwrap()).abs() < 1e-12);
        }
        assert!(rows[0].values.windows(2).all(|w| w[1].1 < w[0].1));
    }

    #[test]
    fn crossover_at_one_third() {
        let l = crossover_lambda((1.0, 0.6), (1.1, 0.4)).unwrap();
        assert!((l - 1.0 / 3.0).abs() < 1e-12);
        let xs = crossovers(&[fixed("a", 1.0, 0.6, 3), fixed("b", 1.1, 0.4, 3)]);
        assert_eq!(xs.len(), 1);
        assert!((xs[0].lambda - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(crossover_lambda((1.0, 0.5), (1.1, 0.6)), None);
        assert_eq!(crossover_lambda((1.0, 0.5), (1.0, 0.5)), None);
    }

    #[test]
    fn group_split() {
        let base: Vec<_> = (0..4).map(|i| run(i, 10.0, 10)).collect();
        let s = summarize(&base, &base, &[10.0; 4]).unwrap();
        let groups = summarize_by_group(&s, |id| if id % 2 == 0 { "even".into() } else { "odd".into() });
        assert_eq!(groups.len(), 2);
        assert_eq!(groups["odd"].tasks.len(), 2);
    }

    #[test]
    fn runtime_accounting() {
        let runs: Vec<_> = (0..4).map(|i| run(i, 1.0, 1)).collect();
        let mut pred = HashMap::new();
        pred.insert(1, vec![0.5; 4]);
        pred.insert(2, vec![0.6; 2]);
        let rows = runtime_breakdown(&runs, "x", &[1, 2, 4], &pred);
        assert_eq!(rows.len(), 3);
        for r in &rows {
            assert_eq!(r.search_s, rows[0].search_s);
            assert_eq!(r.total_s, r.prediction_s + r.search_s);
        }
        assert_eq!(rows[2].prediction_s, 0.0);
        assert!((rows[1].prediction_s - 1.2).abs() < 1e-12);
    }

    #[test]
    fn run_file_round_trip() {
        let mut runs = vec![run(0, 1.0 + std::f64::consts::SQRT_2, 17), run(3, 0.1 + 0.2, 2)];
        runs[1].found = false;
        runs[1].cost = f64::INFINITY;
        let back = parse_runs(&format_runs(&runs)).unwrap();
        assert_eq!(back, runs);
        assert!(parse_runs("task_id\n").is_err());
    }
}
