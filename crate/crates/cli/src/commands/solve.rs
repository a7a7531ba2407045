use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use gridcf::cf::{cf_target_with, h_from_cf, read_cf, CfField};
use gridcf::eval::{write_runs, RunRecord};
use gridcf::search::astar_with;
use gridcf::tasks::{read_tasks, TaskRecord};
use gridcf::{Connectivity, Grid, OctileHeuristic};
use serde_json::json;

use super::{cf_file_name, connectivity, ensure_dir, load_task_maps};
use crate::manifest;
use crate::SolveArgs;

pub const TIMING_HEADER: &str = "task_id,batch_id,seconds";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Solver {
    Astar,
    Weighted(f64),
    /// Exact correction factors computed on the fly (the perfect heuristic).
    CfExact,
    /// Predicted correction factors loaded from `task_<id>.cfm`.
    CfFile,
    /// cf ≡ 1, i.e. octile through the CF pipeline.
    CfOne,
}

impl FromStr for Solver {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "astar" => Solver::Astar,
            "cf:exact" => Solver::CfExact,
            "cf:file" => Solver::CfFile,
            "cf:one" => Solver::CfOne,
            _ => {
                let w = s.strip_prefix("wastar:").ok_or_else(|| {
                    anyhow!("unknown solver {s:?} (astar | wastar:<w> | cf:exact | cf:file | cf:one)")
                })?;
                let w: f64 = w.parse().with_context(|| format!("bad weight in {s:?}"))?;
                if !(w.is_finite() && w >= 1.0) {
                    bail!("weight must be finite and >= 1, got {w}");
                }
                Solver::Weighted(w)
            }
        })
    }
}

impl Solver {
    pub fn name(&self) -> String {
        match self {
            Solver::Astar => "astar".into(),
            Solver::Weighted(w) => format!("wastar:{w}"),
            Solver::CfExact => "cf:exact".into(),
            Solver::CfFile => "cf:file".into(),
            Solver::CfOne => "cf:one".into(),
        }
    }

    fn has_prediction(&self) -> bool {
        matches!(self, Solver::CfExact | Solver::CfFile | Solver::CfOne)
    }
}

struct Runner<'a> {
    solver: Solver,
    cf_dir: Option<&'a Path>,
    conn: Connectivity,
}

impl Runner<'_> {
    /// The prediction stage: a CF field for cf solvers, nothing otherwise.
    fn predict(&self, id: usize, grid: &Grid, task: &TaskRecord) -> Result<Option<CfField>> {
        Ok(match self.solver {
            Solver::Astar | Solver::Weighted(_) => None,
            Solver::CfExact => Some(cf_target_with(grid, task.goal, self.conn)?),
            Solver::CfOne => Some(CfField::uniform(grid.width(), grid.height(), 1.0)?),
            Solver::CfFile => {
                let dir = self.cf_dir.context("cf:file needs --cf-dir")?;
                let path = dir.join(cf_file_name(id));
                Some(read_cf(&path).with_context(|| format!("loading {}", path.display()))?)
            }
        })
    }

    fn run(&self, id: usize, grid: &Grid, task: &TaskRecord) -> Result<RunRecord> {
        let t0 = Instant::now();
        let field = self.predict(id, grid, task)?;
        let predict_time = if self.solver.has_prediction() {
            t0.elapsed().as_secs_f64()
        } else {
            0.0
        };

        let t1 = Instant::now();
        let result = match (&field, self.solver) {
            (Some(f), _) => {
                let h = h_from_cf(f, grid, task.goal)?;
                astar_with(grid, task.start, task.goal, &h, 1.0, self.conn)?
            }
            (None, Solver::Weighted(w)) => astar_with(
                grid,
                task.start,
                task.goal,
                &OctileHeuristic::new(task.goal),
                w,
                self.conn,
            )?,
            (None, _) => astar_with(
                grid,
                task.start,
                task.goal,
                &OctileHeuristic::new(task.goal),
                1.0,
                self.conn,
            )?,
        };
        let search_time = t1.elapsed().as_secs_f64();
        Ok(RunRecord {
            task_id: id,
            solver: self.solver.name(),
            found: result.found,
            cost: result.cost,
            expansions: result.expansions,
            predict_time,
            search_time,
        })
    }
}

fn timing_path(out: &Path, batch_size: usize) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(format!(".timing_b{batch_size}.csv"));
    out.with_file_name(name)
}

/// Runs are serial on purpose: timings are only comparable when nothing else
/// competes for the core.
pub fn solve(args: &SolveArgs) -> Result<()> {
    let solver = args.solver;
    if solver == Solver::CfFile {
        match &args.cf_dir {
            Some(d) if d.is_dir() => {}
            Some(d) => bail!("cf directory {} does not exist", d.display()),
            None => bail!("cf:file needs --cf-dir"),
        }
    }
    if args.batch_sizes.contains(&0) {
        bail!("batch sizes must be positive");
    }
    let tasks = read_tasks(&args.tasks)?;
    let maps = load_task_maps(&args.tasks, &tasks);
    let ctx = Runner {
        solver,
        cf_dir: args.cf_dir.as_deref(),
        conn: connectivity(args.no_corner_cutting),
    };
    let grid_of = |t: &TaskRecord| maps[&t.map_path].as_ref().map_err(|e| anyhow!("{e}"));

    if !args.batch_sizes.is_empty() {
        // discarded warm-up pass
        for (id, t) in tasks.iter().enumerate() {
            if let Ok(g) = grid_of(t) {
                let _ = ctx.run(id, g, t);
            }
        }
    }

    let mut runs = Vec::with_capacity(tasks.len());
    let mut failures = Vec::new();
    for (id, t) in tasks.iter().enumerate() {
        match grid_of(t).and_then(|g| ctx.run(id, g, t)) {
            Ok(r) => runs.push(r),
            Err(e) => {
                failures.push(json!({ "task_id": id, "error": format!("{e:#}") }));
                runs.push(RunRecord {
                    task_id: id,
                    solver: solver.name(),
                    found: false,
                    cost: f64::INFINITY,
                    expansions: 0,
                    predict_time: 0.0,
                    search_time: 0.0,
                });
            }
        }
    }
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    write_runs(&args.out, &runs)?;

    let mut timing_files = Vec::new();
    for &b in &args.batch_sizes {
        let mut text = format!("{TIMING_HEADER}\n");
        for (batch_id, chunk) in (0..tasks.len()).collect::<Vec<_>>().chunks(b).enumerate() {
            let t0 = Instant::now();
            if solver.has_prediction() {
                for &id in chunk {
                    if let Ok(g) = grid_of(&tasks[id]) {
                        let _ = ctx.predict(id, g, &tasks[id]);
                    }
                }
            }
            let secs = if solver.has_prediction() {
                t0.elapsed().as_secs_f64()
            } else {
                0.0
            };
            for &id in chunk {
                writeln!(text, "{id},{batch_id},{secs}").unwrap();
            }
        }
        let path = timing_path(&args.out, b);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        timing_files.push(json!({ "batch_size": b, "file": path }));
    }

    let config = json!({
        "tasks": args.tasks,
        "solver": solver.name(),
        "cf_dir": args.cf_dir,
        "out": args.out,
        "batch_sizes": args.batch_sizes,
        "corner_cutting": !args.no_corner_cutting,
        "policy": {
            "ordering": "f = g + w*h, ties prefer larger g, then insertion order",
            "reopening": "closed nodes are re-opened on a strictly cheaper path",
            "expansions": "popped non-goal nodes; the goal pop ends the search",
        },
    });
    let mut m = manifest::build("solve", config, json!([]));
    m["failures"] = json!(failures);
    m["timing_files"] = json!(timing_files);
    manifest::write(&manifest::sidecar(&args.out), &m)?;

    let solved = runs.iter().filter(|r| r.found).count();
    eprintln!(
        "{}: solved {solved}/{} tasks -> {}",
        solver.name(),
        runs.len(),
        args.out.display()
    );
    if !failures.is_empty() {
        for f in &failures {
            eprintln!("task {}: {}", f["task_id"], f["error"]);
        }
        bail!("{} of {} tasks failed", failures.len(), runs.len());
    }
    Ok(())
}
