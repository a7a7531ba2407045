//! Conversion of externally sourced maps (game levels, street maps, floorplans,
//! pre-generated TMP maps) into target-resolution grids.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{parse_map, Grid};
use crate::rng::{item_seed, SplitMix64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DownsampleRule {
    /// Blocked iff at least half the block is blocked.
    #[default]
    Majority,
    /// Blocked iff any cell of the block is blocked.
    Any,
    /// Copies the block's centre cell (`factor / 2` in both axes).
    Center,
}

impl DownsampleRule {
    pub fn name(&self) -> &'static str {
        match self {
            DownsampleRule::Majority => "majority",
            DownsampleRule::Any => "any",
            DownsampleRule::Center => "center",
        }
    }
}

impl FromStr for DownsampleRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "majority" => Ok(DownsampleRule::Majority),
            "any" => Ok(DownsampleRule::Any),
            "center" => Ok(DownsampleRule::Center),
            other => Err(Error::config(format!("unknown downsample rule {other:?}"))),
        }
    }
}

pub fn downsample(grid: &Grid, factor: usize) -> Result<Grid> {
    downsample_with(grid, factor, DownsampleRule::Majority)
}

pub fn downsample_with(grid: &Grid, factor: usize, rule: DownsampleRule) -> Result<Grid> {
    if factor < 2 {
        return Err(Error::config(format!("downsample factor must be >= 2, got {factor}")));
    }
    let (w, h) = (grid.width(), grid.height());
    if w % factor != 0 || h % factor != 0 {
        return Err(Error::Dimension(format!("{w}x{h} is not divisible by {factor}")));
    }
    let cells = grid.cells();
    Grid::from_fn(w / factor, h / factor, |c| {
        let (x0, y0) = (c.x * factor, c.y * factor);
        match rule {
            DownsampleRule::Center => cells[(y0 + factor / 2) * w + x0 + factor / 2],
            _ => {
                let blocked = (y0..y0 + factor)
                    .flat_map(|y| (x0..x0 + factor).map(move |x| y * w + x))
                    .filter(|i| cells[*i])
                    .count();
                match rule {
                    DownsampleRule::Any => blocked > 0,
                    _ => 2 * blocked >= factor * factor,
                }
            }
        }
    })
}

/// Surrounds `grid` with blocked cells to exactly `width`×`height`; the extra
/// margin is split evenly, any odd cell going to the right/bottom.
pub fn pad_blocked(grid: &Grid, width: usize, height: usize) -> Result<Grid> {
    if grid.width() > width || grid.height() > height {
        return Err(Error::Dimension(format!(
            "cannot pad {}x{} down to {width}x{height}",
            grid.width(),
            grid.height()
        )));
    }
    let left = (width - grid.width()) / 2;
    let top = (height - grid.height()) / 2;
    Grid::from_fn(width, height, |c| {
        let inside = c.x >= left && c.y >= top && c.x - left < grid.width() && c.y - top < grid.height();
        !inside || grid.cells()[(c.y - top) * grid.width() + (c.x - left)]
    })
}

pub fn crop(grid: &Grid, x: usize, y: usize, width: usize, height: usize) -> Result<Grid> {
    if x + width > grid.width() || y + height > grid.height() {
        return Err(Error::Dimension(format!(
            "crop {width}x{height} at ({x}, {y}) exceeds {}x{}",
            grid.width(),
            grid.height()
        )));
    }
    Grid::from_fn(width, height, |c| grid.cells()[(y + c.y) * grid.width() + x + c.x])
}

/// Reads a binary PGM (`P5`) raster. Pixels at or above 128 are blocked.
pub fn parse_raster(bytes: &[u8]) -> Result<Grid> {
    let mut pos = 0;
    let mut tokens = Vec::with_capacity(4);
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated raster header".into()));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1; // single whitespace byte before the pixel data
    if tokens[0] != "P5" {
        return Err(Error::Format(format!("unsupported raster magic {:?}", tokens[0])));
    }
    let num = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Format(format!("bad raster header value {s:?}")))
    };
    let (w, h, max) = (num(&tokens[1])?, num(&tokens[2])?, num(&tokens[3])?);
    if max == 0 || max > 255 {
        return Err(Error::Format(format!("unsupported raster maxval {max}")));
    }
    let n = w
        .checked_mul(h)
        .ok_or_else(|| Error::Format(format!("raster {w}x{h} overflows")))?;
    let data = bytes
        .get(pos..pos + n)
        .ok_or_else(|| Error::Format("truncated raster data".into()))?;
    Grid::new(w, h, data.iter().map(|&p| p >= 128).collect())
}

/// Loads a map file (`.pgm` as raster, anything else as map text).
pub fn load_source(path: &Path) -> Result<Grid> {
    let bytes = fs::read(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")) {
        parse_raster(&bytes)
    } else {
        parse_map(&bytes)
    }
}

/// Map files in `dir` (`.map` and `.pgm`), sorted by path.
pub fn list_sources(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "map" | "pgm"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::config(format!("no .map or .pgm files in {}", dir.display())));
    }
    Ok(files)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    BaldursGate,
    MovingStreet,
    HouseExpo,
    Tmp,
}

impl SourceKind {
    pub fn name(&self) -> &'static str {
        match self {
            SourceKind::BaldursGate => "baldurs_gate",
            SourceKind::MovingStreet => "moving_street",
            SourceKind::HouseExpo => "house_expo",
            SourceKind::Tmp => "tmp",
        }
    }
}

impl FromStr for SourceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baldurs_gate" => Ok(SourceKind::BaldursGate),
            "moving_street" => Ok(SourceKind::MovingStreet),
            "house_expo" => Ok(SourceKind::HouseExpo),
            "tmp" => Ok(SourceKind::Tmp),
            other => Err(Error::config(format!("unknown source kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub rule: DownsampleRule,
    /// Required side of Baldur's Gate sources.
    pub bg_source_side: usize,
    /// Give up after `count * attempt_factor` draws when outputs keep coming out fully blocked.
    pub attempt_factor: usize,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            rule: DownsampleRule::Majority,
            bg_source_side: 512,
            attempt_factor: 20,
        }
    }
}

/// Provenance of one emitted map.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestedMap {
    pub grid: Grid,
    pub source: usize,
    /// Seed of the draw that produced this map.
    pub seed: u64,
    pub crop: Option<(usize, usize)>,
    pub rotation_quarter_turns: Option<u8>,
    pub downsample_factor: Option<usize>,
    pub padding: Option<(usize, usize)>,
}

#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub maps: Vec<IngestedMap>,
    /// `(draw seed, source index)` of draws dropped for having no free cell.
    pub rejected: Vec<(u64, usize)>,
}

/// A set of loaded source maps plus the base seed.
#[derive(Debug, Clone)]
pub struct SourceSet {
    pub kind: SourceKind,
    pub grids: Vec<Grid>,
    pub seed: u64,
}

impl SourceSet {
    pub fn new(kind: SourceKind, grids: Vec<Grid>, seed: u64) -> Result<Self> {
        if grids.is_empty() {
            return Err(Error::config("source set is empty"));
        }
        Ok(SourceSet { kind, grids, seed })
    }

    pub fn load(kind: SourceKind, dir: &Path, seed: u64) -> Result<(Self, Vec<PathBuf>)> {
        let files = list_sources(dir)?;
        let grids = files.iter().map(|p| load_source(p)).collect::<Result<Vec<_>>>()?;
        Ok((SourceSet::new(kind, grids, seed)?, files))
    }
}

pub fn ingest(src: &SourceSet, size: usize, count: usize, opts: &IngestOptions) -> Result<IngestReport> {
    match src.kind {
        SourceKind::BaldursGate => ingest_baldurs_gate(src, size, count, opts),
        SourceKind::MovingStreet => ingest_moving_street(src, size, count, opts),
        SourceKind::HouseExpo => ingest_house_expo(src, size, count, opts),
        SourceKind::Tmp => ingest_tmp(src, size, count),
    }
}

/// Draw `i` uses its own stream seeded `base + i`; fully blocked outputs are
/// dropped and the next draw is tried.
fn draw_loop(
    src: &SourceSet,
    count: usize,
    opts: &IngestOptions,
    mut make: impl FnMut(&mut SplitMix64, usize, u64) -> Result<IngestedMap>,
) -> Result<IngestReport> {
    let mut report = IngestReport::default();
    let budget = count.saturating_mul(opts.attempt_factor.max(1));
    for draw in 0..budget as u64 {
        if report.maps.len() == count {
            break;
        }
        let seed = item_seed(src.seed, draw);
        let mut rng = SplitMix64::new(seed);
        let source = rng.below(src.grids.len());
        let map = make(&mut rng, source, seed)?;
        if map.grid.free_count() == 0 {
            report.rejected.push((seed, source));
        } else {
            report.maps.push(map);
        }
    }
    if report.maps.len() < count {
        return Err(Error::config(format!(
            "only {} of {count} maps had a free cell after {budget} draws",
            report.maps.len()
        )));
    }
    Ok(report)
}

/// Downsample a `bg_source_side`² level to `size`, then rotate by a random multiple of 90°.
pub fn ingest_baldurs_gate(src: &SourceSet, size: usize, count: usize, opts: &IngestOptions) -> Result<IngestReport> {
    let side = opts.bg_source_side;
    for g in &src.grids {
        if g.width() != side || g.height() != side {
            return Err(Error::Dimension(format!(
                "Baldur's Gate sources must be {side}x{side}, got {}x{}",
                g.width(),
                g.height()
            )));
        }
    }
    if size == 0 || !side.is_multiple_of(size) || side / size < 2 {
        return Err(Error::Dimension(format!(
            "cannot downsample {side} to {size} by an integer factor >= 2"
        )));
    }
    let factor = side / size;
    draw_loop(src, count, opts, |rng, source, seed| {
        let turns = rng.below(4) as u8;
        let grid = downsample_with(&src.grids[source], factor, opts.rule)?.rotate(turns);
        Ok(IngestedMap {
            grid,
            source,
            seed,
            crop: None,
            rotation_quarter_turns: Some(turns),
            downsample_factor: Some(factor),
            padding: None,
        })
    })
}

/// Random `2·size` square window, downsampled by 2.
pub fn ingest_moving_street(src: &SourceSet, size: usize, count: usize, opts: &IngestOptions) -> Result<IngestReport> {
    let window = 2 * size;
    for g in &src.grids {
        if g.width() < window || g.height() < window {
            return Err(Error::Dimension(format!(
                "street source {}x{} is smaller than the {window}x{window} crop window",
                g.width(),
                g.height()
            )));
        }
    }
    draw_loop(src, count, opts, |rng, source, seed| {
        let g = &src.grids[source];
        let x = rng.below(g.width() - window + 1);
        let y = rng.below(g.height() - window + 1);
        let grid = downsample_with(&crop(g, x, y, window, window)?, 2, opts.rule)?;
        Ok(IngestedMap {
            grid,
            source,
            seed,
            crop: Some((x, y)),
            rotation_quarter_turns: None,
            downsample_factor: Some(2),
            padding: None,
        })
    })
}

/// Fit a floorplan into `size`×`size`: shrink by the smallest integer factor
/// that makes both sides fit (padding the source to a multiple first), then pad
/// with blocked cells.
pub fn fit_floorplan(grid: &Grid, size: usize, rule: DownsampleRule) -> Result<(Grid, Option<usize>)> {
    let longest = grid.width().max(grid.height());
    if longest <= size {
        return Ok((pad_blocked(grid, size, size)?, None));
    }
    let factor = longest.div_ceil(size);
    let padded = pad_blocked(
        grid,
        grid.width().div_ceil(factor) * factor,
        grid.height().div_ceil(factor) * factor,
    )?;
    let small = downsample_with(&padded, factor, rule)?;
    Ok((pad_blocked(&small, size, size)?, Some(factor)))
}

pub fn ingest_house_expo(src: &SourceSet, size: usize, count: usize, opts: &IngestOptions) -> Result<IngestReport> {
    if size == 0 {
        return Err(Error::config("size must be positive"));
    }
    draw_loop(src, count, opts, |_rng, source, seed| {
        let g = &src.grids[source];
        let (grid, factor) = fit_floorplan(g, size, opts.rule)?;
        let pad = |outer: usize, inner: usize| (outer - inner) / 2;
        let inner = factor.map_or((g.width(), g.height()), |f| {
            (g.width().div_ceil(f), g.height().div_ceil(f))
        });
        Ok(IngestedMap {
            grid,
            source,
            seed,
            crop: None,
            rotation_quarter_turns: None,
            downsample_factor: factor,
            padding: Some((pad(size, inner.0), pad(size, inner.1))),
        })
    })
}

/// Pass-through of pre-generated maps, drawn without replacement in a seeded
/// order; returns fewer than `count` when the pool is smaller.
pub fn ingest_tmp(src: &SourceSet, size: usize, count: usize) -> Result<IngestReport> {
    for g in &src.grids {
        if g.width() != size || g.height() != size {
            return Err(Error::Dimension(format!(
                "TMP source is {}x{}, expected {size}x{size}",
                g.width(),
                g.height()
            )));
        }
    }
    let mut order: Vec<usize> = (0..src.grids.len()).collect();
    SplitMix64::new(src.seed).shuffle(&mut order);
    let mut report = IngestReport::default();
    for source in order {
        if report.maps.len() == count {
            break;
        }
        let grid = src.grids[source].clone();
        if grid.free_count() == 0 {
            report.rejected.push((src.seed, source));
            continue;
        }
        report.maps.push(IngestedMap {
            grid,
            source,
            seed: src.seed,
            crop: None,
            rotation_quarter_turns: None,
            downsample_factor: None,
            padding: None,
        });
    }
    Ok(report)
}
