use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use gridcf::gen::train::{self, FigureParams, GenSpec, TrainKind};
use gridcf::gen::upf::{self, Topology, UpfSpec};
use gridcf::grid::serialize_map;
use gridcf::ingest::{self, IngestOptions, SourceKind, SourceSet};
use gridcf::rng::item_seed;
use gridcf::Grid;
use rayon::prelude::*;
use serde_json::json;

use super::{ensure_dir, thread_pool};
use crate::manifest;
use crate::{CommonGen, GenTrainArgs, GenUpfArgs, IngestArgs};

pub fn map_file_name(label: &str, index: usize) -> String {
    format!("{label}_{index:05}.map")
}

/// Generates `count` maps in parallel, keyed by index so scheduling never
/// changes which seed lands in which file.
fn generate_all(
    common: &CommonGen,
    jobs: usize,
    make: impl Fn(u64) -> gridcf::Result<Grid> + Sync,
) -> Result<Vec<(u64, Grid)>> {
    let pool = thread_pool(jobs)?;
    pool.install(|| {
        (0..common.count)
            .into_par_iter()
            .map(|i| {
                let seed = item_seed(common.seed, i as u64);
                make(seed)
                    .map(|g| (seed, g))
                    .with_context(|| format!("map {i} (seed {seed})"))
            })
            .collect()
    })
}

fn write_maps(dir: &Path, label: &str, maps: &[(u64, Grid)]) -> Result<Vec<serde_json::Value>> {
    ensure_dir(dir)?;
    maps.iter()
        .enumerate()
        .map(|(i, (seed, grid))| {
            let name = map_file_name(label, i);
            fs::write(dir.join(&name), serialize_map(grid)).with_context(|| format!("writing {name}"))?;
            Ok(json!({ "file": name, "seed": seed }))
        })
        .collect()
}

fn common_config(c: &CommonGen) -> serde_json::Value {
    json!({ "count": c.count, "size": c.size, "seed": c.seed, "out_dir": c.out_dir })
}

pub fn gen_train(args: &GenTrainArgs) -> Result<()> {
    let kind = match args.kind.as_str() {
        "uniform" => TrainKind::Uniform { p: args.p },
        "beta" => TrainKind::Beta {
            alpha: args.alpha,
            beta: args.beta,
        },
        "beta_figures" => TrainKind::BetaFigures {
            alpha: args.alpha,
            beta: args.beta,
            figures: FigureParams {
                count: (args.figures_min, args.figures_max),
                ..FigureParams::default()
            },
        },
        other => bail!("unknown training kind {other:?}"),
    };
    let c = &args.common;
    GenSpec::new(kind.clone(), c.size, c.size, c.seed).validate()?;
    let maps = generate_all(c, args.jobs, |seed| {
        train::generate(&GenSpec::new(kind.clone(), c.size, c.size, seed))
    })?;
    let items = write_maps(&c.out_dir, kind.name(), &maps)?;

    let mut config = common_config(c);
    config["kind"] = json!(kind.name());
    config["params"] = json!(format!("{kind:?}"));
    manifest::write(
        &c.out_dir.join("manifest.json"),
        &manifest::build("gen-train", config, json!(items)),
    )?;
    eprintln!("wrote {} {} maps to {}", maps.len(), kind.name(), c.out_dir.display());
    Ok(())
}

pub fn gen_upf(args: &GenUpfArgs) -> Result<()> {
    let mut topology =
        Topology::from_name(&args.topology).with_context(|| format!("unknown topology {:?}", args.topology))?;
    match &mut topology {
        Topology::RecursiveDivision(p) => p.flip_prob = args.flip_prob,
        Topology::Perlin(p) => {
            p.density = args.density;
            p.border_blocked = !args.perlin_free_border;
        }
        Topology::RotationalSymmetry { density } => *density = args.density,
        Topology::Dcaffo(p) => {
            p.density = args.density;
            p.radius = args.closing_radius;
        }
        Topology::MaskedPyramid(_) | Topology::PrimMaze => {}
    }
    let c = &args.common;
    let maps = generate_all(c, args.jobs, |seed| {
        upf::generate(&UpfSpec::new(topology.clone(), c.size, c.size, seed))
    })?;
    let items = write_maps(&c.out_dir, topology.name(), &maps)?;

    let mut config = common_config(c);
    config["topology"] = json!(topology.name());
    config["params"] = json!(format!("{topology:?}"));
    manifest::write(
        &c.out_dir.join("manifest.json"),
        &manifest::build("gen-upf", config, json!(items)),
    )?;
    eprintln!(
        "wrote {} {} maps to {}",
        maps.len(),
        topology.name(),
        c.out_dir.display()
    );
    Ok(())
}

pub fn ingest(args: &IngestArgs) -> Result<()> {
    if !args.src_dir.is_dir() {
        bail!("source directory {} does not exist", args.src_dir.display());
    }
    let kind: SourceKind = args.kind.parse()?;
    let opts = IngestOptions {
        rule: args.downsample_rule.parse()?,
        bg_source_side: args.bg_source_side,
        ..IngestOptions::default()
    };
    let c = &args.common;
    let (set, files) = SourceSet::load(kind, &args.src_dir, c.seed)?;
    let report = ingest::ingest(&set, c.size, c.count, &opts)?;

    let source_name = |i: usize| {
        files[i]
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default()
    };
    let maps: Vec<(u64, Grid)> = report.maps.iter().map(|m| (m.seed, m.grid.clone())).collect();
    let written = write_maps(&c.out_dir, kind.name(), &maps)?;
    let items: Vec<_> = report
        .maps
        .iter()
        .zip(written)
        .map(|(m, mut item)| {
            item["source"] = json!(source_name(m.source));
            item["crop"] = json!(m.crop);
            item["rotation_quarter_turns"] = json!(m.rotation_quarter_turns);
            item["downsample_factor"] = json!(m.downsample_factor);
            item["padding"] = json!(m.padding);
            item
        })
        .collect();
    let rejected: Vec<_> = report
        .rejected
        .iter()
        .map(|(seed, src)| json!({ "seed": seed, "source": source_name(*src) }))
        .collect();

    let mut config = common_config(c);
    config["kind"] = json!(kind.name());
    config["src_dir"] = json!(args.src_dir);
    config["downsample_rule"] = json!(opts.rule.name());
    config["bg_source_side"] = json!(opts.bg_source_side);
    config["order"] = json!("downsample, then rotate");
    let mut m = manifest::build("ingest", config, json!(items));
    m["rejected_fully_blocked"] = json!(rejected);
    manifest::write(&c.out_dir.join("manifest.json"), &m)?;
    eprintln!(
        "wrote {} {} maps to {} ({} fully blocked draws rejected)",
        report.maps.len(),
        kind.name(),
        c.out_dir.display(),
        report.rejected.len()
    );
    Ok(())
}
