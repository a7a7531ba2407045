pub mod generate;
pub mod report;
pub mod solve;
pub mod tasks;

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gridcf::grid::parse_map;
use gridcf::Grid;

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    if jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?)
}

pub fn read_map(path: &Path) -> Result<Grid> {
    let bytes = fs::read(path).with_context(|| format!("reading map {}", path.display()))?;
    parse_map(&bytes).with_context(|| format!("parsing map {}", path.display()))
}

/// Map paths in task files are taken as written; relative ones that do not
/// exist from the working directory are retried next to the task file.
pub fn resolve_map(task_file: &Path, map_path: &str) -> PathBuf {
    let p = PathBuf::from(map_path);
    if p.is_absolute() || p.exists() {
        return p;
    }
    match task_file.parent() {
        Some(dir) => dir.join(p),
        None => p,
    }
}

/// Loads each distinct map of a task file once.
pub fn load_task_maps(
    task_file: &Path,
    records: &[gridcf::tasks::TaskRecord],
) -> HashMap<String, Result<Grid, String>> {
    let mut maps = HashMap::new();
    for r in records {
        maps.entry(r.map_path.clone())
            .or_insert_with(|| read_map(&resolve_map(task_file, &r.map_path)).map_err(|e| format!("{e:#}")));
    }
    maps
}

pub fn cf_file_name(task_id: usize) -> String {
    format!("task_{task_id:06}.cfm")
}

pub fn connectivity(no_corner_cutting: bool) -> gridcf::Connectivity {
    if no_corner_cutting {
        gridcf::Connectivity::NoCornerCutting
    } else {
        gridcf::Connectivity::CornerCutting
    }
}
