use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use gridcf::cf::{cf_target_with, write_cf};
use gridcf::rng::item_seed;
use gridcf::tasks::{h_min_reference, read_tasks, sample_tasks, write_tasks, FilterConfig, RejectCounts, TaskRecord};
use rayon::prelude::*;
use serde_json::json;

use super::{cf_file_name, connectivity, ensure_dir, load_task_maps, read_map, thread_pool};
use crate::manifest;
use crate::{ComputeCfArgs, GenTasksArgs};

/// Side of the empty reference map the default diversity threshold is compared against.
const H_MIN_REFERENCE_SIDE: usize = 11;

fn map_files(dir: &std::path::Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| p.extension().is_some_and(|e| e == "map"));
    files.sort();
    Ok(files)
}

enum MapOutcome {
    Sampled {
        tasks: Vec<TaskRecord>,
        rejections: RejectCounts,
    },
    Skipped(String),
}

pub fn gen_tasks(args: &GenTasksArgs) -> Result<()> {
    let cfg = FilterConfig {
        h_min: args.h_min,
        complexity_factor: args.complexity_factor,
        max_attempts: args.max_attempts,
        connectivity: connectivity(args.no_corner_cutting),
    };
    cfg.validate()?;
    if !args.maps_dir.is_dir() {
        bail!("maps directory {} does not exist", args.maps_dir.display());
    }
    let files = map_files(&args.maps_dir)?;
    if files.is_empty() {
        bail!("no .map files in {}", args.maps_dir.display());
    }

    let pool = thread_pool(args.jobs)?;
    let outcomes: Vec<MapOutcome> = pool.install(|| {
        files
            .par_iter()
            .enumerate()
            .map(|(i, path)| -> Result<MapOutcome> {
                let grid = read_map(path)?;
                if grid.free_count() < 2 {
                    return Ok(MapOutcome::Skipped("fewer than 2 free cells".into()));
                }
                let (sampled, rejections) = sample_tasks(&grid, item_seed(args.seed, i as u64), &cfg, args.per_map)?;
                let map_path = path.to_string_lossy().into_owned();
                let tasks = sampled
                    .into_iter()
                    .map(|t| TaskRecord {
                        map_path: map_path.clone(),
                        start: t.start,
                        goal: t.goal,
                        optimal_cost: t.optimal_cost,
                    })
                    .collect();
                Ok(MapOutcome::Sampled { tasks, rejections })
            })
            .collect::<Result<_>>()
    })?;

    let mut records = Vec::new();
    let mut totals = RejectCounts::default();
    let mut per_map = Vec::new();
    for (path, outcome) in files.iter().zip(&outcomes) {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        match outcome {
            MapOutcome::Sampled { tasks, rejections } => {
                totals.add(*rejections);
                per_map.push(json!({
                    "map": name,
                    "tasks": tasks.len(),
                    "rejected_diversity": rejections.diversity,
                    "rejected_complexity": rejections.complexity,
                }));
                records.extend(tasks.iter().cloned());
            }
            MapOutcome::Skipped(why) => per_map.push(json!({ "map": name, "tasks": 0, "skipped": why })),
        }
    }
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    write_tasks(&args.out, &records)?;

    let reference = h_min_reference(H_MIN_REFERENCE_SIDE)?;
    let config = json!({
        "maps_dir": args.maps_dir,
        "per_map": args.per_map,
        "seed": args.seed,
        "out": args.out,
        "h_min": cfg.h_min,
        "complexity_factor": cfg.complexity_factor,
        "max_attempts": cfg.max_attempts,
        "corner_cutting": !args.no_corner_cutting,
    });
    let mut m = manifest::build("gen-tasks", config, json!(per_map));
    m["tasks_written"] = json!(records.len());
    m["rejections"] = json!({ "diversity": totals.diversity, "complexity": totals.complexity });
    m["h_min_reference"] = json!({
        "side": H_MIN_REFERENCE_SIDE,
        "empty_map_centred_goal": reference,
        "configured": cfg.h_min,
    });
    manifest::write(&manifest::sidecar(&args.out), &m)?;

    eprintln!(
        "wrote {} tasks from {} maps to {}",
        records.len(),
        files.len(),
        args.out.display()
    );
    eprintln!(
        "rejections: diversity {} complexity {}",
        totals.diversity, totals.complexity
    );
    eprintln!(
        "H_min: configured {} (empty {side}x{side} reference with centred goal: {reference:.6})",
        cfg.h_min,
        side = H_MIN_REFERENCE_SIDE
    );
    let short = args.per_map * files.len() - records.len();
    if short > 0 {
        eprintln!(
            "warning: {short} tasks could not be sampled within {} attempts",
            cfg.max_attempts
        );
    }
    Ok(())
}

pub fn compute_cf(args: &ComputeCfArgs) -> Result<()> {
    let records = read_tasks(&args.tasks)?;
    ensure_dir(&args.out_dir)?;
    let maps = load_task_maps(&args.tasks, &records);
    let conn = connectivity(args.no_corner_cutting);

    let pool = thread_pool(args.jobs)?;
    let results: Vec<Result<(), String>> = pool.install(|| {
        records
            .par_iter()
            .enumerate()
            .map(|(id, r)| {
                let grid = maps[&r.map_path].as_ref().map_err(|e| e.clone())?;
                let field = cf_target_with(grid, r.goal, conn).map_err(|e| e.to_string())?;
                write_cf(args.out_dir.join(cf_file_name(id)), &field).map_err(|e| e.to_string())
            })
            .collect()
    });

    let failures: Vec<_> = results
        .iter()
        .enumerate()
        .filter_map(|(id, r)| r.as_ref().err().map(|e| json!({ "task_id": id, "error": e })))
        .collect();
    let config = json!({
        "tasks": args.tasks,
        "out_dir": args.out_dir,
        "corner_cutting": !args.no_corner_cutting,
        "file_pattern": "task_<id:06>.cfm",
    });
    let mut m = manifest::build("compute-cf", config, json!([]));
    m["written"] = json!(records.len() - failures.len());
    m["failures"] = json!(failures);
    manifest::write(&args.out_dir.join("manifest.json"), &m)?;

    eprintln!(
        "wrote {} CF files to {}",
        records.len() - failures.len(),
        args.out_dir.display()
    );
    if !failures.is_empty() {
        for f in &failures {
            eprintln!("task {}: {}", f["task_id"], f["error"]);
        }
        bail!("{} of {} tasks failed", failures.len(), records.len());
    }
    Ok(())
}
