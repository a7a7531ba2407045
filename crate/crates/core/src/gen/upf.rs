//! Procedural evaluation topologies: Masked Pyramid, Prim maze, Perlin-style
//! smoothed noise, Recursive Division, mirror-symmetric noise and Dcaffo.

use crate::error::{Error, Result};
use crate::gen::train::noise;
use crate::grid::{Cell, Grid};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq)]
pub enum Topology {
    MaskedPyramid(PyramidParams),
    PrimMaze,
    Perlin(PerlinParams),
    RecursiveDivision(DivisionParams),
    RotationalSymmetry { density: f64 },
    Dcaffo(DcaffoParams),
}

impl Topology {
    pub const NAMES: [&'static str; 6] = [
        "masked_pyramid",
        "prim_maze",
        "perlin",
        "recursive_division",
        "rotational_symmetry",
        "dcaffo",
    ];

    /// Default parameters for a topology name.
    pub fn from_name(name: &str) -> Option<Topology> {
        Some(match name {
            "masked_pyramid" => Topology::MaskedPyramid(PyramidParams::default()),
            "prim_maze" => Topology::PrimMaze,
            "perlin" => Topology::Perlin(PerlinParams::default()),
            "recursive_division" => Topology::RecursiveDivision(DivisionParams::default()),
            "rotational_symmetry" => Topology::RotationalSymmetry { density: 0.5 },
            "dcaffo" => Topology::Dcaffo(DcaffoParams::default()),
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Topology::MaskedPyramid(_) => "masked_pyramid",
            Topology::PrimMaze => "prim_maze",
            Topology::Perlin(_) => "perlin",
            Topology::RecursiveDivision(_) => "recursive_division",
            Topology::RotationalSymmetry { .. } => "rotational_symmetry",
            Topology::Dcaffo(_) => "dcaffo",
        }
    }
}

#[derive(Debug, Clone)]
pub struct UpfSpec {
    pub topology: Topology,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
}

impl UpfSpec {
    pub fn new(topology: Topology, width: usize, height: usize, seed: u64) -> Self {
        UpfSpec {
            topology,
            width,
            height,
            seed,
        }
    }
}

pub fn generate(spec: &UpfSpec) -> Result<Grid> {
    let (w, h) = (spec.width, spec.height);
    if w == 0 || h == 0 {
        return Err(Error::config("map dimensions must be positive"));
    }
    let mut rng = SplitMix64::new(spec.seed);
    match &spec.topology {
        Topology::MaskedPyramid(p) => masked_pyramid(&mut rng, w, h, p).map(|(g, _)| g),
        Topology::PrimMaze => Ok(prim_maze(&mut rng, w, h).0),
        Topology::Perlin(p) => perlin(&mut rng, w, h, p),
        Topology::RecursiveDivision(p) => recursive_division(&mut rng, w, h, p),
        Topology::RotationalSymmetry { density } => rotational_symmetry(&mut rng, w, h, *density),
        Topology::Dcaffo(p) => dcaffo(&mut rng, w, h, p),
    }
}

// ---------------------------------------------------------------------------
// Masked Pyramid

#[derive(Debug, Clone, PartialEq)]
pub struct PyramidParams {
    pub layers: usize,
    /// Probabilities of blocking exactly 1, 2 and 3 of a ring's four corners.
    pub blocked_corner_probs: [f64; 3],
    pub min_side: usize,
}

impl Default for PyramidParams {
    fn default() -> Self {
        PyramidParams {
            layers: 15,
            blocked_corner_probs: [0.25, 0.5, 0.25],
            min_side: 33,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ring {
    /// Distance of the ring from each map edge.
    pub offset: usize,
    /// Corner cells in order top-left, top-right, bottom-right, bottom-left.
    pub corners: [Cell; 4],
    pub blocked: [bool; 4],
}

impl Ring {
    pub fn blocked_corners(&self) -> usize {
        self.blocked.iter().filter(|b| **b).count()
    }
}

/// Ring offsets from the map edge, outermost first.
///
/// Rings are spaced `s = max(1, min_side / (2·layers))` apart, so a 64×64 map
/// gets a free cell between consecutive rings.
pub fn pyramid_offsets(width: usize, height: usize, layers: usize) -> Vec<usize> {
    let side = width.min(height);
    let spacing = (side / (2 * layers.max(1))).max(1);
    (0..layers).map(|i| spacing * i + spacing / 2).collect()
}

pub fn masked_pyramid(
    rng: &mut SplitMix64,
    width: usize,
    height: usize,
    params: &PyramidParams,
) -> Result<(Grid, Vec<Ring>)> {
    let probs = params.blocked_corner_probs;
    if probs.iter().any(|p| *p < 0.0) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::config("corner probabilities must be a distribution"));
    }
    let offsets = pyramid_offsets(width, height, params.layers);
    let innermost = offsets.last().copied().unwrap_or(0);
    if width.min(height) < params.min_side || width < 2 * innermost + 3 || height < 2 * innermost + 3 {
        return Err(Error::config(format!(
            "{width}x{height} cannot fit {} pyramid layers (need at least {}x{})",
            params.layers, params.min_side, params.min_side
        )));
    }

    let mut blocked = vec![false; width * height];
    let mut rings = Vec::with_capacity(offsets.len());
    for o in offsets {
        let (x0, y0, x1, y1) = (o, o, width - 1 - o, height - 1 - o);
        for x in x0..=x1 {
            blocked[y0 * width + x] = true;
            blocked[y1 * width + x] = true;
        }
        for y in y0..=y1 {
            blocked[y * width + x0] = true;
            blocked[y * width + x1] = true;
        }
        let corners = [
            Cell::new(x0, y0),
            Cell::new(x1, y0),
            Cell::new(x1, y1),
            Cell::new(x0, y1),
        ];
        let u = rng.uniform();
        let count = if u < probs[0] {
            1
        } else if u < probs[0] + probs[1] {
            2
        } else {
            3
        };
        let mut order = [0usize, 1, 2, 3];
        rng.shuffle(&mut order);
        let mut ring_blocked = [false; 4];
        for &k in &order[..count] {
            ring_blocked[k] = true;
        }
        for (corner, is_blocked) in corners.iter().zip(ring_blocked) {
            blocked[corner.y * width + corner.x] = is_blocked;
        }
        rings.push(Ring {
            offset: o,
            corners,
            blocked: ring_blocked,
        });
    }
    Ok((Grid::new(width, height, blocked)?, rings))
}

// ---------------------------------------------------------------------------
// Prim maze

const CARDINAL: [(isize, isize); 4] = [(0, -1), (1, 0), (0, 1), (-1, 0)];

fn cardinal_neighbors(width: usize, height: usize, idx: usize) -> impl Iterator<Item = usize> {
    let (x, y) = (idx % width, idx / width);
    CARDINAL.iter().filter_map(move |&(dx, dy)| {
        let nx = x.checked_add_signed(dx)?;
        let ny = y.checked_add_signed(dy)?;
        (nx < width && ny < height).then_some(ny * width + nx)
    })
}

/// Randomized frontier-list maze. Also returns the cells in the order they were opened.
pub fn prim_maze(rng: &mut SplitMix64, width: usize, height: usize) -> (Grid, Vec<Cell>) {
    let mut blocked = vec![true; width * height];
    let mut opened = Vec::new();
    let seed = rng.below(width * height);
    blocked[seed] = false;
    opened.push(seed);
    let mut frontier: Vec<usize> = cardinal_neighbors(width, height, seed).collect();

    while !frontier.is_empty() {
        let cell = frontier.swap_remove(rng.below(frontier.len()));
        if !blocked[cell] {
            continue;
        }
        let open_neighbors = cardinal_neighbors(width, height, cell).filter(|n| !blocked[*n]).count();
        if open_neighbors == 1 {
            blocked[cell] = false;
            opened.push(cell);
            frontier.extend(cardinal_neighbors(width, height, cell).filter(|n| blocked[*n]));
        }
    }
    let grid = Grid::new(width, height, blocked).expect("dimensions checked by caller");
    let order = opened.into_iter().map(|i| grid.cell_at(i)).collect();
    (grid, order)
}

// ---------------------------------------------------------------------------
// Perlin (majority-smoothed noise)

#[derive(Debug, Clone, PartialEq)]
pub struct PerlinParams {
    pub density: f64,
    pub passes: usize,
    /// Count out-of-bounds neighbours as blocked.
    pub border_blocked: bool,
}

impl Default for PerlinParams {
    fn default() -> Self {
        PerlinParams {
            density: 0.5,
            passes: 2,
            border_blocked: true,
        }
    }
}

/// One majority pass: a cell is blocked iff more than 4 of the 9 cells in its
/// 3×3 neighbourhood (itself included) are blocked.
pub fn majority_smooth(bits: &[bool], width: usize, height: usize, border_blocked: bool) -> Vec<bool> {
    let mut out = vec![false; bits.len()];
    for y in 0..height {
        for x in 0..width {
            let mut count = 0;
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    let nx = x as isize + dx;
                    let ny = y as isize + dy;
                    let inside = nx >= 0 && ny >= 0 && (nx as usize) < width && (ny as usize) < height;
                    let b = if inside {
                        bits[ny as usize * width + nx as usize]
                    } else {
                        border_blocked
                    };
                    count += usize::from(b);
                }
            }
            out[y * width + x] = count > 4;
        }
    }
    out
}

pub fn perlin(rng: &mut SplitMix64, width: usize, height: usize, params: &PerlinParams) -> Result<Grid> {
    check_density(params.density)?;
    let mut bits = noise(rng, width * height, params.density);
    for _ in 0..params.passes {
        bits = majority_smooth(&bits, width, height, params.border_blocked);
    }
    Grid::new(width, height, bits)
}

fn check_density(d: f64) -> Result<()> {
    if (0.0..=1.0).contains(&d) {
        Ok(())
    } else {
        Err(Error::config(format!("density {d} outside [0, 1]")))
    }
}

// ---------------------------------------------------------------------------
// Recursive division

#[derive(Debug, Clone, PartialEq)]
pub struct DivisionParams {
    pub flip_prob: f64,
    /// Chambers with a side shorter than this are not split.
    pub min_chamber: usize,
    /// `Some(1)` draws a single wall.
    pub max_depth: Option<usize>,
}

impl Default for DivisionParams {
    fn default() -> Self {
        DivisionParams {
            flip_prob: 0.2,
            min_chamber: 4,
            max_depth: None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Chamber {
    x: usize,
    y: usize,
    w: usize,
    h: usize,
}

struct Divider<'a> {
    rng: &'a mut SplitMix64,
    width: usize,
    height: usize,
    blocked: Vec<bool>,
    walls: Vec<usize>,
    params: &'a DivisionParams,
}

impl Divider<'_> {
    /// Free in-bounds cell; cells bordering a chamber are walls, so a free one is a door.
    fn is_door(&self, x: isize, y: isize) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && !self.blocked[y as usize * self.width + x as usize]
    }

    fn divide(&mut self, c: Chamber, depth: usize) {
        if c.w < self.params.min_chamber || c.h < self.params.min_chamber {
            return;
        }
        if self.params.max_depth.is_some_and(|d| depth >= d) {
            return;
        }
        let horizontal = depth.is_multiple_of(2);
        if horizontal {
            // a wall row must not seal a door in the chamber's left or right wall
            let rows: Vec<usize> = (c.y + 1..c.y + c.h - 1)
                .filter(|&r| {
                    !self.is_door(c.x as isize - 1, r as isize) && !self.is_door((c.x + c.w) as isize, r as isize)
                })
                .collect();
            if rows.is_empty() {
                return;
            }
            let wy = rows[self.rng.below(rows.len())];
            let door = c.x + self.rng.below(c.w);
            for x in c.x..c.x + c.w {
                if x != door {
                    self.block(wy * self.width + x);
                }
            }
            self.divide(Chamber { h: wy - c.y, ..c }, depth + 1);
            self.divide(
                Chamber {
                    y: wy + 1,
                    h: c.y + c.h - wy - 1,
                    ..c
                },
                depth + 1,
            );
        } else {
            let cols: Vec<usize> = (c.x + 1..c.x + c.w - 1)
                .filter(|&col| {
                    !self.is_door(col as isize, c.y as isize - 1) && !self.is_door(col as isize, (c.y + c.h) as isize)
                })
                .collect();
            if cols.is_empty() {
                return;
            }
            let wx = cols[self.rng.below(cols.len())];
            let door = c.y + self.rng.below(c.h);
            for y in c.y..c.y + c.h {
                if y != door {
                    self.block(y * self.width + wx);
                }
            }
            self.divide(Chamber { w: wx - c.x, ..c }, depth + 1);
            self.divide(
                Chamber {
                    x: wx + 1,
                    w: c.x + c.w - wx - 1,
                    ..c
                },
                depth + 1,
            );
        }
    }

    fn block(&mut self, idx: usize) {
        self.blocked[idx] = true;
        self.walls.push(idx);
    }
}

/// Alternating horizontal/vertical walls, one door each, then every wall cell
/// is opened independently with probability `flip_prob`.
///
/// The flip pass draws one number per wall cell whatever `flip_prob` is, so two
/// runs with the same seed share their wall layout.
pub fn recursive_division(rng: &mut SplitMix64, width: usize, height: usize, params: &DivisionParams) -> Result<Grid> {
    check_density(params.flip_prob)?;
    if params.min_chamber < 3 {
        return Err(Error::config("min_chamber must be at least 3"));
    }
    let mut divider = Divider {
        rng,
        width,
        height,
        blocked: vec![false; width * height],
        walls: Vec::new(),
        params,
    };
    divider.divide(
        Chamber {
            x: 0,
            y: 0,
            w: width,
            h: height,
        },
        0,
    );
    let Divider {
        rng,
        mut blocked,
        walls,
        ..
    } = divider;
    for idx in walls {
        if rng.bernoulli(params.flip_prob) {
            blocked[idx] = false;
        }
    }
    Grid::new(width, height, blocked)
}

// ---------------------------------------------------------------------------
// Mirror-symmetric noise

/// Fair noise on the top-left quadrant, mirrored across both mid-lines.
pub fn rotational_symmetry(rng: &mut SplitMix64, width: usize, height: usize, density: f64) -> Result<Grid> {
    check_density(density)?;
    if !width.is_multiple_of(2) || !height.is_multiple_of(2) {
        return Err(Error::config(format!(
            "rotational symmetry needs even dimensions, got {width}x{height}"
        )));
    }
    let (qw, qh) = (width / 2, height / 2);
    let quadrant = noise(rng, qw * qh, density);
    Grid::from_fn(width, height, |c| {
        let x = if c.x < qw { c.x } else { width - 1 - c.x };
        let y = if c.y < qh { c.y } else { height - 1 - c.y };
        quadrant[y * qw + x]
    })
}

/// True when the grid equals both of its axis mirrors.
pub fn is_mirror_symmetric(grid: &Grid) -> bool {
    let (w, h) = (grid.width(), grid.height());
    (0..grid.len()).map(|i| grid.cell_at(i)).all(|c| {
        let b = grid.is_blocked(c);
        grid.is_blocked(Cell::new(w - 1 - c.x, c.y)) == b && grid.is_blocked(Cell::new(c.x, h - 1 - c.y)) == b
    })
}

// ---------------------------------------------------------------------------
// Dcaffo (morphologically closed noise)

#[derive(Debug, Clone, PartialEq)]
pub struct DcaffoParams {
    pub density: f64,
    /// Structuring element is a `(2r+1)²` square.
    pub radius: usize,
}

impl Default for DcaffoParams {
    fn default() -> Self {
        DcaffoParams {
            density: 0.5,
            radius: 1,
        }
    }
}

fn window_fold(bits: &[bool], width: usize, height: usize, radius: usize, outside: bool, any: bool) -> Vec<bool> {
    let r = radius as isize;
    let mut out = vec![false; bits.len()];
    for y in 0..height as isize {
        for x in 0..width as isize {
            let mut acc = !any;
            'window: for dy in -r..=r {
                for dx in -r..=r {
                    let (nx, ny) = (x + dx, y + dy);
                    let inside = nx >= 0 && ny >= 0 && nx < width as isize && ny < height as isize;
                    let b = if inside {
                        bits[ny as usize * width + nx as usize]
                    } else {
                        outside
                    };
                    if any && b {
                        acc = true;
                        break 'window;
                    }
                    if !any && !b {
                        acc = false;
                        break 'window;
                    }
                }
            }
            out[y as usize * width + x as usize] = acc;
        }
    }
    out
}

/// Blocked-set dilation; cells outside the map are ignored.
pub fn dilate(bits: &[bool], width: usize, height: usize, radius: usize) -> Vec<bool> {
    window_fold(bits, width, height, radius, false, true)
}

/// Blocked-set erosion; cells outside the map count as blocked.
pub fn erode(bits: &[bool], width: usize, height: usize, radius: usize) -> Vec<bool> {
    window_fold(bits, width, height, radius, true, false)
}

pub fn closing(bits: &[bool], width: usize, height: usize, radius: usize) -> Vec<bool> {
    erode(&dilate(bits, width, height, radius), width, height, radius)
}

pub fn dcaffo(rng: &mut SplitMix64, width: usize, height: usize, params: &DcaffoParams) -> Result<Grid> {
    check_density(params.density)?;
    let bits = noise(rng, width * height, params.density);
    Grid::new(width, height, closing(&bits, width, height, params.radius))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn components_4(g: &Grid) -> usize {
        let mut seen = vec![false; g.len()];
        let mut count = 0;
        for start in 0..g.len() {
            if g.cells()[start] || seen[start] {
                continue;
            }
            count += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(i) = stack.pop() {
                for n in cardinal_neighbors(g.width(), g.height(), i) {
                    if !g.cells()[n] && !seen[n] {
                        seen[n] = true;
                        stack.push(n);
                    }
                }
            }
        }
        count
    }

    #[test]
    fn pyramid_has_fifteen_rings_with_open_corners() {
        let mut rng = SplitMix64::new(3);
        let (g, rings) = masked_pyramid(&mut rng, 64, 64, &PyramidParams::default()).unwrap();
        assert_eq!(rings.len(), 15);
        assert_eq!(rings[0].offset, 1);
        assert_eq!(rings[14].offset, 29);
        for ring in &rings {
            let open = ring.corners.iter().filter(|c| g.is_free(**c)).count();
            assert!((1..=3).contains(&open));
            assert_eq!(open, 4 - ring.blocked_corners());
            // non-corner ring cells are walls
            let o = ring.offset;
            assert!(g.is_blocked(Cell::new(o + 1, o)));
            assert!(g.is_blocked(Cell::new(o, 63 - o - 1)));
        }
        // gaps between rings stay free
        assert!(g.is_free(Cell::new(2, 32)));
        assert!(g.is_free(Cell::new(0, 0)));
    }

    #[test]
    fn pyramid_size_limits() {
        let mut rng = SplitMix64::new(0);
        assert!(masked_pyramid(&mut rng, 32, 64, &PyramidParams::default()).is_err());
        assert!(masked_pyramid(&mut rng, 33, 33, &PyramidParams::default()).is_ok());
        assert!(masked_pyramid(&mut rng, 128, 128, &PyramidParams::default()).is_ok());
    }

    #[test]
    fn prim_maze_growth_rule_and_connectivity() {
        for seed in 0..20 {
            let mut rng = SplitMix64::new(seed);
            let (g, order) = prim_maze(&mut rng, 31, 17);
            assert_eq!(components_4(&g), 1);
            assert_eq!(order.len(), g.free_count());
            let mut open = vec![false; g.len()];
            for (k, c) in order.iter().enumerate() {
                let i = g.index(*c);
                let touching = cardinal_neighbors(g.width(), g.height(), i)
                    .filter(|n| open[*n])
                    .count();
                if k > 0 {
                    assert_eq!(touching, 1, "cell {c} opened with {touching} open neighbours");
                }
                open[i] = true;
            }
        }
    }

    #[test]
    fn majority_rule_cases() {
        let full = vec![true; 25];
        assert_eq!(majority_smooth(&full, 5, 5, true), full);

        let empty = vec![false; 25];
        let once = majority_smooth(&empty, 5, 5, true);
        for y in 1..4 {
            for x in 1..4 {
                assert!(!once[y * 5 + x]);
            }
        }
        // corners see 5 blocked out-of-bounds cells
        assert!(once[0]);
        assert!(majority_smooth(&empty, 5, 5, false).iter().all(|b| !b));

        let mut dot = vec![false; 25];
        dot[12] = true;
        assert!(!majority_smooth(&dot, 5, 5, false)[12]);
    }

    #[test]
    fn single_split_draws_one_full_width_wall() {
        let params = DivisionParams {
            flip_prob: 0.0,
            max_depth: Some(1),
            ..DivisionParams::default()
        };
        for seed in 0..10 {
            let mut rng = SplitMix64::new(seed);
            let g = recursive_division(&mut rng, 20, 12, &params).unwrap();
            let wall_rows: Vec<usize> = (0..12)
                .filter(|&y| (0..20).filter(|&x| g.is_blocked(Cell::new(x, y))).count() > 0)
                .collect();
            assert_eq!(wall_rows.len(), 1);
            assert_eq!(
                (0..20).filter(|&x| g.is_blocked(Cell::new(x, wall_rows[0]))).count(),
                19
            );
            assert_eq!(g.blocked_count(), 19);
        }
    }

    #[test]
    fn unflipped_division_is_connected() {
        let params = DivisionParams {
            flip_prob: 0.0,
            ..DivisionParams::default()
        };
        for seed in 0..30 {
            let mut rng = SplitMix64::new(seed);
            let g = recursive_division(&mut rng, 64, 64, &params).unwrap();
            assert!(g.blocked_count() > 64);
            assert_eq!(components_4(&g), 1, "seed {seed}");
        }
    }

    #[test]
    fn flips_only_open_wall_cells() {
        for seed in 0..5 {
            let walls = recursive_division(
                &mut SplitMix64::new(seed),
                64,
                64,
                &DivisionParams {
                    flip_prob: 0.0,
                    ..DivisionParams::default()
                },
            )
            .unwrap();
            let flipped = recursive_division(&mut SplitMix64::new(seed), 64, 64, &DivisionParams::default()).unwrap();
            for i in 0..walls.len() {
                if flipped.cells()[i] {
                    assert!(walls.cells()[i]);
                }
            }
            assert!(flipped.blocked_count() < walls.blocked_count());
        }
    }

    #[test]
    fn mirror_symmetry() {
        let mut rng = SplitMix64::new(8);
        let g = rotational_symmetry(&mut rng, 64, 32, 0.5).unwrap();
        assert!(is_mirror_symmetric(&g));
        assert_eq!(g.rotate(2), g);
        assert!(rotational_symmetry(&mut rng, 63, 64, 0.5).is_err());
        let lopsided = Grid::from_fn(4, 4, |c| c == Cell::new(0, 0)).unwrap();
        assert!(!is_mirror_symmetric(&lopsided));
    }

    #[test]
    fn closing_fixed_points() {
        let free = vec![false; 36];
        assert_eq!(closing(&free, 6, 6, 1), free);
        let full = vec![true; 36];
        assert_eq!(closing(&full, 6, 6, 1), full);
        // closing fills a one-cell hole
        let mut holed = vec![true; 36];
        holed[14] = false;
        assert_eq!(closing(&holed, 6, 6, 1), full);
    }

    #[test]
    fn all_topologies_deterministic_with_requested_dims() {
        for name in Topology::NAMES {
            let topology = Topology::from_name(name).unwrap();
            assert_eq!(topology.name(), name);
            for (w, h) in [(64, 64), (128, 128)] {
                let spec = UpfSpec::new(topology.clone(), w, h, 99);
                let a = generate(&spec).unwrap();
                assert_eq!((a.width(), a.height()), (w, h));
                assert_eq!(a, generate(&spec).unwrap(), "{name}");
                assert_ne!(a, generate(&UpfSpec { seed: 100, ..spec }).unwrap(), "{name}");
            }
        }
    }
}
