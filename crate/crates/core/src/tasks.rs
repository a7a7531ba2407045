//! Start/goal sampling with the reachability-diversity and
//! reachability-complexity filters, and the task CSV format.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{octile, Cell, Connectivity, Grid};
use crate::rng::SplitMix64;
use crate::search::{dijkstra_field_with, CostField};

pub const DEFAULT_H_MIN: f64 = 553.0;
pub const DEFAULT_COMPLEXITY_FACTOR: f64 = 1.05;
pub const DEFAULT_MAX_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    pub h_min: f64,
    pub complexity_factor: f64,
    pub max_attempts: usize,
    pub connectivity: Connectivity,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            h_min: DEFAULT_H_MIN,
            complexity_factor: DEFAULT_COMPLEXITY_FACTOR,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            connectivity: Connectivity::CornerCutting,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.h_min > 0.0 && self.h_min.is_finite()) {
            return Err(Error::config(format!("H_min must be positive, got {}", self.h_min)));
        }
        if !(self.complexity_factor >= 1.0 && self.complexity_factor.is_finite()) {
            return Err(Error::config(format!(
                "complexity factor must be >= 1, got {}",
                self.complexity_factor
            )));
        }
        if self.max_attempts == 0 {
            return Err(Error::config("max_attempts must be positive"));
        }
        Ok(())
    }
}

/// Sum of the exact cost-to-go over every cell that can reach the field's goal.
pub fn diversity_of(field: &CostField) -> f64 {
    field.values().iter().filter(|v| v.is_finite()).sum()
}

pub fn reachability_diversity(grid: &Grid, goal: Cell) -> Result<f64> {
    Ok(diversity_of(&dijkstra_field_with(
        grid,
        goal,
        Connectivity::CornerCutting,
    )?))
}

/// Diversity of an empty `side`×`side` grid with the goal in the centre; the
/// audit reference for `H_min`.
pub fn h_min_reference(side: usize) -> Result<f64> {
    if side.is_multiple_of(2) {
        return Err(Error::config(format!("reference side must be odd, got {side}")));
    }
    let grid = Grid::filled(side, side, false)?;
    reachability_diversity(&grid, Cell::new(side / 2, side / 2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledTask {
    pub start: Cell,
    pub goal: Cell,
    pub optimal_cost: f64,
    pub octile: f64,
    pub diversity: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RejectCounts {
    pub diversity: u64,
    pub complexity: u64,
}

impl RejectCounts {
    pub fn add(&mut self, other: RejectCounts) {
        self.diversity += other.diversity;
        self.complexity += other.complexity;
    }

    pub fn total(&self) -> u64 {
        self.diversity + self.complexity
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleOutcome {
    /// `None` when every attempt was rejected.
    pub task: Option<SampledTask>,
    pub rejections: RejectCounts,
}

/// One filtered task. Each attempt draws a fresh goal (one Dijkstra field per
/// goal serves both filters), then a start among the cells that reach it.
pub fn sample_task(grid: &Grid, rng: &mut SplitMix64, cfg: &FilterConfig) -> Result<SampleOutcome> {
    cfg.validate()?;
    let free: Vec<Cell> = grid.free_cells().collect();
    if free.len() < 2 {
        return Err(Error::contract(format!(
            "task sampling needs at least 2 free cells, map has {}",
            free.len()
        )));
    }
    let mut rejections = RejectCounts::default();
    for _ in 0..cfg.max_attempts {
        let goal = free[rng.below(free.len())];
        let field = dijkstra_field_with(grid, goal, cfg.connectivity)?;
        let diversity = diversity_of(&field);
        if diversity < cfg.h_min {
            rejections.diversity += 1;
            continue;
        }
        // diversity > 0 implies some other cell reaches the goal
        let starts: Vec<Cell> = field.reachable_cells().filter(|c| *c != goal).collect();
        let start = starts[rng.below(starts.len())];
        let optimal_cost = field.get(start);
        let estimate = octile(start, goal);
        if optimal_cost < cfg.complexity_factor * estimate {
            rejections.complexity += 1;
            continue;
        }
        return Ok(SampleOutcome {
            task: Some(SampledTask {
                start,
                goal,
                optimal_cost,
                octile: estimate,
                diversity,
            }),
            rejections,
        });
    }
    Ok(SampleOutcome { task: None, rejections })
}

/// Up to `per_map` tasks for one map from a stream seeded with `seed`.
pub fn sample_tasks(
    grid: &Grid,
    seed: u64,
    cfg: &FilterConfig,
    per_map: usize,
) -> Result<(Vec<SampledTask>, RejectCounts)> {
    let mut rng = SplitMix64::new(seed);
    let mut tasks = Vec::with_capacity(per_map);
    let mut rejections = RejectCounts::default();
    for _ in 0..per_map {
        let outcome = sample_task(grid, &mut rng, cfg)?;
        rejections.add(outcome.rejections);
        match outcome.task {
            Some(t) => tasks.push(t),
            None => break,
        }
    }
    Ok((tasks, rejections))
}

/// One row of a task file.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskRecord {
    pub map_path: String,
    pub start: Cell,
    pub goal: Cell,
    pub optimal_cost: f64,
}

impl TaskRecord {
    /// Topology label derived from the map file name: the stem with a trailing
    /// `_<digits>` index removed (`perlin_00012.map` → `perlin`).
    pub fn topology(&self) -> String {
        topology_of(&self.map_path)
    }
}

pub fn topology_of(map_path: &str) -> String {
    let name = map_path.rsplit(['/', '\\']).next().unwrap_or(map_path);
    let stem = name.rsplit_once('.').map_or(name, |(s, _)| s);
    match stem.rsplit_once('_') {
        Some((head, tail)) if !head.is_empty() && !tail.is_empty() && tail.bytes().all(|b| b.is_ascii_digit()) => {
            head.to_string()
        }
        _ => stem.to_string(),
    }
}

pub const TASK_HEADER: &str = "map_path,start_x,start_y,goal_x,goal_y,optimal_cost";

pub fn format_tasks(records: &[TaskRecord]) -> Result<String> {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(TASK_HEADER);
    out.push('\n');
    for r in records {
        if r.map_path.contains([',', '\n', '\r']) {
            return Err(Error::config(format!(
                "map path {:?} cannot be stored in a task file",
                r.map_path
            )));
        }
        writeln!(
            out,
            "{},{},{},{},{},{:.9}",
            r.map_path, r.start.x, r.start.y, r.goal.x, r.goal.y, r.optimal_cost
        )
        .unwrap();
    }
    Ok(out)
}

pub fn parse_tasks(text: &str) -> Result<Vec<TaskRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == TASK_HEADER => {}
        _ => return Err(Error::parse(1, format!("expected header {TASK_HEADER:?}"))),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim_end().split(',').collect();
        if fields.len() != 6 {
            return Err(Error::parse(no, format!("expected 6 fields, found {}", fields.len())));
        }
        let int = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::parse(no, format!("bad coordinate {s:?}")))
        };
        let cost: f64 = fields[5]
            .parse()
            .map_err(|_| Error::parse(no, format!("bad cost {:?}", fields[5])))?;
        out.push(TaskRecord {
            map_path: fields[0].to_string(),
            start: Cell::new(int(fields[1])?, int(fields[2])?),
            goal: Cell::new(int(fields[3])?, int(fields[4])?),
            optimal_cost: cost,
        });
    }
    Ok(out)
}

pub fn write_tasks(path: impl AsRef<Path>, records: &[TaskRecord]) -> Result<()> {
    fs::write(path, format_tasks(records)?)?;
    Ok(())
}

pub fn read_tasks(path: impl AsRef<Path>) -> Result<Vec<TaskRecord>> {
    parse_tasks(&fs::read_to_string(path)?)
}
