//! Correction-factor fields: supervision targets, loss masks, the heuristic
//! rebuilt from a (predicted) field, and the binary interchange format.
//!
//! The correction factor of a cell is `octile(n, goal) / h*(n)`. A field of
//! them turns back into a heuristic as `octile(n, goal) / max(cf(n), ε)`.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{octile, Cell, Connectivity, Grid};
use crate::search::{dijkstra_field_with, Heuristic};

/// Floor applied to predicted factors before dividing.
pub const CF_EPSILON: f64 = 1e-9;

/// Slack allowed on `[0, 1]` when validating stored factors.
pub const CF_RANGE_SLACK: f64 = 1e-6;

pub const CF_MAGIC: &[u8; 4] = b"CFM1";

/// Loss mask: `true` on free, non-goal cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, cell: Cell) -> bool {
        self.bits[cell.y * self.width + cell.x]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

pub fn build_mask(grid: &Grid, goal: Cell) -> Result<Mask> {
    if !grid.in_bounds(goal) {
        return Err(Error::contract(format!("goal {goal} outside grid")));
    }
    let goal_idx = grid.index(goal);
    let bits = grid
        .cells()
        .iter()
        .enumerate()
        .map(|(i, &blocked)| !blocked && i != goal_idx)
        .collect();
    Ok(Mask {
        width: grid.width(),
        height: grid.height(),
        bits,
    })
}

/// Dense correction factors with the training mask.
#[derive(Debug, Clone, PartialEq)]
pub struct CfField {
    width: usize,
    height: usize,
    cf: Vec<f64>,
    mask: Vec<bool>,
}

impl CfField {
    /// Validates lengths and the `[0, 1]` range (with [`CF_RANGE_SLACK`]).
    pub fn new(width: usize, height: usize, cf: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        let n = width
            .checked_mul(height)
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::Dimension(format!("bad cf-field size {width}x{height}")))?;
        if cf.len() != n || mask.len() != n {
            return Err(Error::Dimension(format!(
                "cf-field {width}x{height} needs {n} values, got {} cf / {} mask",
                cf.len(),
                mask.len()
            )));
        }
        if let Some((i, v)) = cf.iter().enumerate().find(|(_, v)| !in_range(**v)) {
            return Err(Error::Format(format!("cf value {v} at index {i} outside [0, 1]")));
        }
        Ok(CfField {
            width,
            height,
            cf,
            mask,
        })
    }

    /// Constant field, mask all false. `uniform(w, h, 1.0)` reproduces plain octile A*.
    pub fn uniform(width: usize, height: usize, value: f64) -> Result<Self> {
        let n = width.saturating_mul(height);
        CfField::new(width, height, vec![value; n], vec![false; n])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.cf
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn get(&self, cell: Cell) -> f64 {
        self.cf[cell.y * self.width + cell.x]
    }

    pub fn masked(&self, cell: Cell) -> bool {
        self.mask[cell.y * self.width + cell.x]
    }

    /// The field as stored on disk: factors narrowed to single precision.
    pub fn narrowed(&self) -> CfField {
        CfField {
            cf: self.cf.iter().map(|v| *v as f32 as f64).collect(),
            ..self.clone()
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.cf.len();
        let mut out = Vec::with_capacity(12 + 5 * n);
        out.extend_from_slice(CF_MAGIC);
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        out.extend_from_slice(&(self.height as u32).to_le_bytes());
        for v in &self.cf {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        out.extend(self.mask.iter().map(|m| u8::from(*m)));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 {
            return Err(Error::Format(format!("truncated header ({} bytes)", bytes.len())));
        }
        if &bytes[..4] != CF_MAGIC {
            return Err(Error::Format(format!("bad magic {:?}", &bytes[..4])));
        }
        let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let n = width
            .checked_mul(height)
            .filter(|n| *n > 0 && n.checked_mul(5).is_some())
            .ok_or_else(|| Error::Format(format!("unusable dimensions {width}x{height}")))?;
        let expected = 12 + 5 * n;
        if bytes.len() != expected {
            return Err(Error::Format(format!(
                "{width}x{height} field needs {expected} bytes, file has {}",
                bytes.len()
            )));
        }
        let body = &bytes[12..];
        let cf: Vec<f64> = body[..4 * n]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        let mask = body[4 * n..]
            .iter()
            .enumerate()
            .map(|(i, b)| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::Format(format!("mask byte {other} at index {i}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        CfField::new(width, height, cf, mask)
    }
}

fn in_range(v: f64) -> bool {
    (-CF_RANGE_SLACK..=1.0 + CF_RANGE_SLACK).contains(&v)
}

pub fn write_cf(path: impl AsRef<Path>, field: &CfField) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(&field.to_bytes())?;
    Ok(())
}

pub fn read_cf(path: impl AsRef<Path>) -> Result<CfField> {
    CfField::from_bytes(&fs::read(path)?)
}

/// Supervision target for `(grid, goal)`.
///
/// Reachable non-goal free cells get `octile / h*` in `(0, 1]`, unreachable free
/// cells get 0, and blocked cells plus the goal get the placeholder 1 with the
/// mask cleared.
pub fn cf_target(grid: &Grid, goal: Cell) -> Result<CfField> {
    cf_target_with(grid, goal, Connectivity::CornerCutting)
}

pub fn cf_target_with(grid: &Grid, goal: Cell, connectivity: Connectivity) -> Result<CfField> {
    let field = dijkstra_field_with(grid, goal, connectivity)?;
    let mask = build_mask(grid, goal)?;
    let cf = grid
        .cells()
        .iter()
        .enumerate()
        .map(|(i, _)| {
            if !mask.bits[i] {
                return 1.0;
            }
            let cell = grid.cell_at(i);
            let exact = field.get(cell);
            if exact.is_finite() {
                // octile is admissible; the clamp only absorbs rounding in the two sums
                (octile(cell, goal) / exact).min(1.0)
            } else {
                0.0
            }
        })
        .collect();
    CfField::new(grid.width(), grid.height(), cf, mask.bits)
}

/// Heuristic `octile(n, goal) / max(cf(n), ε)`.
#[derive(Debug, Clone)]
pub struct CfHeuristic<'a> {
    field: &'a CfField,
    goal: Cell,
}

impl Heuristic for CfHeuristic<'_> {
    fn estimate(&self, cell: Cell) -> f64 {
        octile(cell, self.goal) / self.field.get(cell).max(CF_EPSILON)
    }
}

/// The goal cell needs no special casing: its octile distance is 0 whatever the
/// predicted factor there.
pub fn h_from_cf<'a>(field: &'a CfField, grid: &Grid, goal: Cell) -> Result<CfHeuristic<'a>> {
    if field.width != grid.width() || field.height != grid.height() {
        return Err(Error::Dimension(format!(
            "cf field {}x{} does not match grid {}x{}",
            field.width,
            field.height,
            grid.width(),
            grid.height()
        )));
    }
    if !grid.in_bounds(goal) {
        return Err(Error::contract(format!("goal {goal} outside grid")));
    }
    Ok(CfHeuristic { field, goal })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::{astar, dijkstra_field, OctileHeuristic};

    fn grid(rows: &[&str]) -> Grid {
        Grid::from_fn(rows[0].len(), rows.len(), |c| rows[c.y].as_bytes()[c.x] == b'@').unwrap()
    }

    #[test]
    fn empty_grid_target_is_all_ones() {
        let g = Grid::filled(6, 5, false).unwrap();
        let goal = Cell::new(2, 3);
        let f = cf_target(&g, goal).unwrap();
        assert!(f.values().iter().all(|v| (*v - 1.0).abs() < 1e-12));
        assert!(!f.masked(goal));
        assert_eq!(f.mask().iter().filter(|m| **m).count(), 29);
    }

    #[test]
    fn unreachable_and_blocked_cells() {
        let g = grid(&["..@..", "..@..", "..@.."]);
        let goal = Cell::new(0, 0);
        let f = cf_target(&g, goal).unwrap();
        assert_eq!(f.get(Cell::new(4, 1)), 0.0);
        assert!(f.masked(Cell::new(4, 1)));
        assert_eq!(f.get(Cell::new(2, 1)), 1.0);
        assert!(!f.masked(Cell::new(2, 1)));
        assert_eq!(f.get(goal), 1.0);
        assert!(!f.masked(goal));
    }

    #[test]
    fn detour_cells_have_fractional_factor() {
        let g = grid(&["....", ".@@.", ".@..", ".@.."]);
        let goal = Cell::new(2, 3);
        let f = cf_target(&g, goal).unwrap();
        let h = dijkstra_field(&g, goal).unwrap();
        for c in g.free_cells().filter(|c| *c != goal) {
            let v = f.get(c);
            assert!(v > 0.0 && v <= 1.0);
            assert!((v * h.get(c) - octile(c, goal)).abs() < 1e-9);
        }
        assert!(f.get(Cell::new(0, 3)) < 1.0);
    }

    #[test]
    fn heuristic_arithmetic() {
        let g = Grid::filled(20, 1, false).unwrap();
        let goal = Cell::new(0, 0);
        let mut cf = vec![1.0; 20];
        cf[5] = 0.0;
        cf[10] = 0.5;
        let f = CfField::new(20, 1, cf, vec![true; 20]).unwrap();
        let h = h_from_cf(&f, &g, goal).unwrap();
        assert!((h.estimate(Cell::new(5, 0)) - 5e9).abs() < 1e-3);
        assert!((h.estimate(Cell::new(10, 0)) - 20.0).abs() < 1e-12);
        assert_eq!(h.estimate(Cell::new(3, 0)), 3.0);
        assert_eq!(h.estimate(goal), 0.0);
    }

    #[test]
    fn uniform_one_field_reproduces_octile_search() {
        let g = grid(&["....@...", ".@@.@.@.", ".@....@.", ".@@@@.@.", "........"]);
        let (s, t) = (Cell::new(0, 0), Cell::new(7, 0));
        let ones = CfField::uniform(8, 5, 1.0).unwrap();
        let h = h_from_cf(&ones, &g, t).unwrap();
        for c in g.free_cells() {
            assert_eq!(h.estimate(c), octile(c, t));
        }
        let a = astar(&g, s, t, &h, 1.0).unwrap();
        let b = astar(&g, s, t, &OctileHeuristic::new(t), 1.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let g = Grid::filled(4, 4, false).unwrap();
        let f = CfField::uniform(4, 3, 1.0).unwrap();
        assert!(matches!(h_from_cf(&f, &g, Cell::new(0, 0)), Err(Error::Dimension(_))));
    }

    #[test]
    fn mask_cases() {
        let g = Grid::filled(2, 2, false).unwrap();
        let m = build_mask(&g, Cell::new(0, 0)).unwrap();
        assert_eq!(m.bits(), &[false, true, true, true]);

        let g = Grid::from_fn(3, 3, |c| c != Cell::new(1, 1)).unwrap();
        let m = build_mask(&g, Cell::new(1, 1)).unwrap();
        assert_eq!(m.count(), 0);
    }

    #[test]
    fn file_format_layout() {
        let f = CfField::new(2, 1, vec![0.5, 1.0], vec![true, false]).unwrap();
        let bytes = f.to_bytes();
        let mut expected = b"CFM1".to_vec();
        expected.extend_from_slice(&2u32.to_le_bytes());
        expected.extend_from_slice(&1u32.to_le_bytes());
        expected.extend_from_slice(&0.5f32.to_le_bytes());
        expected.extend_from_slice(&1.0f32.to_le_bytes());
        expected.extend_from_slice(&[1, 0]);
        assert_eq!(bytes, expected);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let f = CfField::uniform(3, 3, 0.25).unwrap();
        let bytes = f.to_bytes();
        assert!(matches!(
            CfField::from_bytes(&bytes[..bytes.len() - 1]),
            Err(Error::Format(_))
        ));
        assert!(matches!(CfField::from_bytes(&bytes[..7]), Err(Error::Format(_))));

        let mut bad_magic = bytes.clone();
        bad_magic[3] = b'2';
        assert!(matches!(CfField::from_bytes(&bad_magic), Err(Error::Format(_))));

        let mut huge = bytes.clone();
        huge[4..8].copy_from_slice(&u32::MAX.to_le_bytes());
        huge[8..12].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(matches!(CfField::from_bytes(&huge), Err(Error::Format(_))));

        let mut out_of_range = bytes.clone();
        out_of_range[12..16].copy_from_slice(&1.01f32.to_le_bytes());
        assert!(matches!(CfField::from_bytes(&out_of_range), Err(Error::Format(_))));

        let mut nan = bytes.clone();
        nan[12..16].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(CfField::from_bytes(&nan), Err(Error::Format(_))));

        let mut bad_mask = bytes;
        let last = bad_mask.len() - 1;
        bad_mask[last] = 7;
        assert!(matches!(CfField::from_bytes(&bad_mask), Err(Error::Format(_))));
    }

    #[test]
    fn slack_above_one_is_accepted() {
        let f = CfField::new(1, 1, vec![1.0 + 5e-7], vec![true]).unwrap();
        assert!(CfField::from_bytes(&f.to_bytes()).is_ok());
    }
}
