//! Training-map distributions: i.i.d. Uniform noise, Beta-density noise, and
//! geometric figures intersected with Beta noise.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::rng::SplitMix64;

pub const MIN_TRAIN_SIDE: usize = 8;

/// Every figure must cover at least this many cells.
pub const MIN_FIGURE_CELLS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub enum TrainKind {
    Uniform {
        p: f64,
    },
    Beta {
        alpha: f64,
        beta: f64,
    },
    BetaFigures {
        alpha: f64,
        beta: f64,
        figures: FigureParams,
    },
}

impl TrainKind {
    pub fn uniform() -> Self {
        TrainKind::Uniform { p: 0.5 }
    }

    pub fn beta() -> Self {
        TrainKind::Beta { alpha: 2.0, beta: 2.0 }
    }

    pub fn beta_figures() -> Self {
        TrainKind::BetaFigures {
            alpha: 2.0,
            beta: 2.0,
            figures: FigureParams::default(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TrainKind::Uniform { .. } => "uniform",
            TrainKind::Beta { .. } => "beta",
            TrainKind::BetaFigures { .. } => "beta_figures",
        }
    }
}

/// Ranges are inclusive.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureParams {
    pub count: (usize, usize),
    pub square_side: (usize, usize),
    pub circle_radius: (usize, usize),
    pub cross_arm: (usize, usize),
    pub cross_width: usize,
}

impl Default for FigureParams {
    fn default() -> Self {
        FigureParams {
            count: (8, 24),
            square_side: (4, 12),
            circle_radius: (2, 6),
            cross_arm: (3, 8),
            cross_width: 2,
        }
    }
}

impl FigureParams {
    fn validate(&self) -> Result<()> {
        let ordered = |(lo, hi): (usize, usize)| lo <= hi;
        if !(ordered(self.count) && ordered(self.square_side) && ordered(self.circle_radius) && ordered(self.cross_arm))
        {
            return Err(Error::config("figure ranges must have lo <= hi"));
        }
        if self.cross_width == 0 {
            return Err(Error::config("cross width must be positive"));
        }
        let smallest = [
            Shape::Square(self.square_side.0),
            Shape::Circle(self.circle_radius.0),
            Shape::Cross {
                arm: self.cross_arm.0,
                width: self.cross_width,
            },
        ];
        for shape in smallest {
            if shape.cells().len() < MIN_FIGURE_CELLS {
                return Err(Error::config(format!(
                    "smallest {shape:?} covers fewer than {MIN_FIGURE_CELLS} cells"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GenSpec {
    pub kind: TrainKind,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
}

impl GenSpec {
    pub fn new(kind: TrainKind, width: usize, height: usize, seed: u64) -> Self {
        GenSpec {
            kind,
            width,
            height,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < MIN_TRAIN_SIDE || self.height < MIN_TRAIN_SIDE {
            return Err(Error::config(format!(
                "training maps must be at least {MIN_TRAIN_SIDE}x{MIN_TRAIN_SIDE}, got {}x{}",
                self.width, self.height
            )));
        }
        match &self.kind {
            TrainKind::Uniform { p } if !(0.0..=1.0).contains(p) => {
                Err(Error::config(format!("p = {p} outside [0, 1]")))
            }
            TrainKind::Beta { alpha, beta } | TrainKind::BetaFigures { alpha, beta, .. }
                if !(*alpha > 0.0 && *beta > 0.0 && alpha.is_finite() && beta.is_finite()) =>
            {
                Err(Error::config(format!(
                    "Beta({alpha}, {beta}) needs positive finite shapes"
                )))
            }
            TrainKind::BetaFigures { figures, .. } => figures.validate(),
            _ => Ok(()),
        }
    }
}

pub fn generate(spec: &GenSpec) -> Result<Grid> {
    spec.validate()?;
    let mut rng = SplitMix64::new(spec.seed);
    let (w, h) = (spec.width, spec.height);
    let blocked = match &spec.kind {
        TrainKind::Uniform { p } => noise(&mut rng, w * h, *p),
        TrainKind::Beta { alpha, beta } => beta_noise(&mut rng, w * h, *alpha, *beta),
        TrainKind::BetaFigures { alpha, beta, figures } => {
            let figs = figure_mask(&mut rng, w, h, figures);
            let background = beta_noise(&mut rng, w * h, *alpha, *beta);
            conjunction(&figs.bits, &background)
        }
    };
    Grid::new(w, h, blocked)
}

pub fn gen_uniform(spec: &GenSpec) -> Result<Grid> {
    expect_kind(spec, "uniform")?;
    generate(spec)
}

pub fn gen_beta(spec: &GenSpec) -> Result<Grid> {
    expect_kind(spec, "beta")?;
    generate(spec)
}

pub fn gen_beta_figures(spec: &GenSpec) -> Result<Grid> {
    expect_kind(spec, "beta_figures")?;
    generate(spec)
}

fn expect_kind(spec: &GenSpec, name: &str) -> Result<()> {
    if spec.kind.name() == name {
        Ok(())
    } else {
        Err(Error::config(format!(
            "expected a {name} spec, got {}",
            spec.kind.name()
        )))
    }
}

/// Each of `n` cells blocked independently with probability `p`.
pub fn noise(rng: &mut SplitMix64, n: usize, p: f64) -> Vec<bool> {
    (0..n).map(|_| rng.bernoulli(p)).collect()
}

/// One density `θ ~ Beta(alpha, beta)` per map, then i.i.d. blocking at `θ`.
pub fn beta_noise(rng: &mut SplitMix64, n: usize, alpha: f64, beta: f64) -> Vec<bool> {
    let theta = rng.beta(alpha, beta);
    noise(rng, n, theta)
}

/// Probability that a Beta-noise map of `cells` cells comes out entirely free:
/// `E[(1-θ)^N] = B(α, β+N) / B(α, β)`, evaluated as a telescoping product.
pub fn empty_map_probability(alpha: f64, beta: f64, cells: usize) -> f64 {
    (0..cells)
        .map(|k| (beta + k as f64) / (alpha + beta + k as f64))
        .product()
}

pub fn conjunction(a: &[bool], b: &[bool]) -> Vec<bool> {
    a.iter().zip(b).map(|(x, y)| *x && *y).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Square(usize),
    Circle(usize),
    Cross { arm: usize, width: usize },
}

impl Shape {
    /// Side of the square bounding box.
    pub fn extent(&self) -> usize {
        match *self {
            Shape::Square(side) => side,
            Shape::Circle(r) => 2 * r + 1,
            Shape::Cross { arm, width } => 2 * arm + width,
        }
    }

    /// Covered offsets relative to the bounding box's top-left corner.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        let ext = self.extent();
        let mut out = Vec::new();
        for dy in 0..ext {
            for dx in 0..ext {
                let inside = match *self {
                    Shape::Square(_) => true,
                    Shape::Circle(r) => {
                        let (cx, cy) = (dx as isize - r as isize, dy as isize - r as isize);
                        cx * cx + cy * cy <= (r * r) as isize
                    }
                    Shape::Cross { arm, width } => {
                        let band = arm..arm + width;
                        band.contains(&dx) || band.contains(&dy)
                    }
                };
                if inside {
                    out.push((dx, dy));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacedFigure {
    pub shape: Shape,
    pub x: usize,
    pub y: usize,
    pub cells: usize,
}

#[derive(Debug, Clone)]
pub struct FigureMask {
    pub bits: Vec<bool>,
    pub figures: Vec<PlacedFigure>,
}

/// Randomly placed squares, circles and crosses. Sizes are clamped so each
/// figure fits the map entirely; figures may overlap.
pub fn figure_mask(rng: &mut SplitMix64, width: usize, height: usize, params: &FigureParams) -> FigureMask {
    let side = width.min(height);
    let mut bits = vec![false; width * height];
    let count = rng.range_inclusive(params.count.0, params.count.1);
    let mut figures = Vec::with_capacity(count);
    for _ in 0..count {
        let shape = match rng.below(3) {
            0 => {
                let s = rng.range_inclusive(params.square_side.0, params.square_side.1);
                Shape::Square(s.min(side))
            }
            1 => {
                let r = rng.range_inclusive(params.circle_radius.0, params.circle_radius.1);
                Shape::Circle(r.min((side - 1) / 2))
            }
            _ => {
                let a = rng.range_inclusive(params.cross_arm.0, params.cross_arm.1);
                let width = params.cross_width.min(side);
                Shape::Cross {
                    arm: a.min((side - width) / 2),
                    width,
                }
            }
        };
        let ext = shape.extent();
        let x = rng.below(width - ext + 1);
        let y = rng.below(height - ext + 1);
        let cells = shape.cells();
        for (dx, dy) in &cells {
            bits[(y + dy) * width + x + dx] = true;
        }
        figures.push(PlacedFigure {
            shape,
            x,
            y,
            cells: cells.len(),
        });
    }
    FigureMask { bits, figures }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blocked_fraction(g: &Grid) -> f64 {
        g.blocked_count() as f64 / g.len() as f64
    }

    #[test]
    fn uniform_extremes() {
        let free = generate(&GenSpec::new(TrainKind::Uniform { p: 0.0 }, 16, 16, 1)).unwrap();
        assert_eq!(free.blocked_count(), 0);
        let full = generate(&GenSpec::new(TrainKind::Uniform { p: 1.0 }, 16, 16, 1)).unwrap();
        assert_eq!(full.free_count(), 0);
    }

    #[test]
    fn uniform_default_density() {
        let mean = (0..200)
            .map(|s| blocked_fraction(&gen_uniform(&GenSpec::new(TrainKind::uniform(), 64, 64, s)).unwrap()))
            .sum::<f64>()
            / 200.0;
        assert!((mean - 0.5).abs() < 0.01);
    }

    #[test]
    fn empty_map_probability_matches_closed_form() {
        let p = empty_map_probability(2.0, 2.0, 64 * 64);
        let closed = 6.0 / (4098.0 * 4099.0);
        assert!((p - closed).abs() / closed < 1e-9, "{p} vs {closed}");
        assert!((p - 3.57e-7).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(generate(&GenSpec::new(TrainKind::uniform(), 7, 64, 0)).is_err());
        assert!(generate(&GenSpec::new(TrainKind::Uniform { p: 1.5 }, 8, 8, 0)).is_err());
        assert!(generate(&GenSpec::new(TrainKind::Beta { alpha: 0.0, beta: 1.0 }, 8, 8, 0)).is_err());
        let tiny = FigureParams {
            square_side: (2, 4),
            ..FigureParams::default()
        };
        let kind = TrainKind::BetaFigures {
            alpha: 2.0,
            beta: 2.0,
            figures: tiny,
        };
        assert!(generate(&GenSpec::new(kind, 16, 16, 0)).is_err());
        assert!(gen_beta(&GenSpec::new(TrainKind::uniform(), 8, 8, 0)).is_err());
    }

    #[test]
    fn shape_cell_counts() {
        assert_eq!(Shape::Square(4).cells().len(), 16);
        assert_eq!(Shape::Circle(2).cells().len(), 13);
        assert_eq!(Shape::Cross { arm: 3, width: 2 }.cells().len(), 28);
    }

    #[test]
    fn figures_fit_and_cover_enough_cells() {
        for (w, h) in [(8, 8), (64, 64), (8, 40), (128, 128)] {
            for seed in 0..50 {
                let mut rng = SplitMix64::new(seed);
                let m = figure_mask(&mut rng, w, h, &FigureParams::default());
                assert!((8..=24).contains(&m.figures.len()));
                for f in &m.figures {
                    assert!(f.cells >= MIN_FIGURE_CELLS, "{f:?}");
                    assert!(f.x + f.shape.extent() <= w && f.y + f.shape.extent() <= h);
                }
            }
        }
    }

    #[test]
    fn beta_figures_is_conjunction_of_its_masks() {
        for seed in 0..20 {
            let spec = GenSpec::new(TrainKind::beta_figures(), 64, 64, seed);
            let g = gen_beta_figures(&spec).unwrap();
            let mut rng = SplitMix64::new(seed);
            let figs = figure_mask(&mut rng, 64, 64, &FigureParams::default());
            let background = beta_noise(&mut rng, 64 * 64, 2.0, 2.0);
            for (i, blocked) in g.cells().iter().enumerate() {
                if *blocked {
                    assert!(figs.bits[i] && background[i]);
                }
            }
            assert_eq!(g.cells(), conjunction(&figs.bits, &background).as_slice());
            let all_blocked = vec![true; 64 * 64];
            assert_eq!(conjunction(&figs.bits, &all_blocked), figs.bits);
        }
    }

    #[test]
    fn generators_are_deterministic() {
        for kind in [TrainKind::uniform(), TrainKind::beta(), TrainKind::beta_figures()] {
            let spec = GenSpec::new(kind, 64, 48, 42);
            let a = generate(&spec).unwrap();
            assert_eq!(a, generate(&spec).unwrap());
            assert_eq!((a.width(), a.height()), (64, 48));
        }
    }
}
