//! Binary occupancy grids with 8-connected move semantics.
//!
//! Origin is the top-left corner, `x` is the column and `y` the row; cells are
//! stored row-major. Cardinal moves cost 1 and diagonal moves cost √2.

use std::fmt;

use crate::error::{Error, Result};

pub const SQRT_2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Cell { x, y }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Move {
    pub target: Cell,
    pub cost: f64,
}

/// Diagonal legality rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Connectivity {
    /// A diagonal move is legal whenever its destination is free.
    #[default]
    CornerCutting,
    /// A diagonal move additionally needs both orthogonally adjacent cells free.
    NoCornerCutting,
}

/// N, NE, E, SE, S, SW, W, NW.
const OFFSETS: [(isize, isize); 8] = [(0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1)];

/// Octile distance: the obstacle-free 8-connected shortest path length.
pub fn octile(a: Cell, b: Cell) -> f64 {
    let dx = a.x.abs_diff(b.x);
    let dy = a.y.abs_diff(b.y);
    let (lo, hi) = if dx < dy { (dx, dy) } else { (dy, dx) };
    SQRT_2 * lo as f64 + (hi - lo) as f64
}

/// Immutable occupancy map.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Grid {
    width: usize,
    height: usize,
    blocked: Vec<bool>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Grid {}x{}", self.width, self.height)?;
        for y in 0..self.height {
            for x in 0..self.width {
                let c = if self.blocked[y * self.width + x] { '@' } else { '.' };
                write!(f, "{c}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl Grid {
    pub fn new(width: usize, height: usize, blocked: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!(
                "grid must be at least 1x1, got {width}x{height}"
            )));
        }
        let expected = width
            .checked_mul(height)
            .ok_or_else(|| Error::Dimension(format!("grid {width}x{height} overflows")))?;
        if blocked.len() != expected {
            return Err(Error::Dimension(format!(
                "{width}x{height} grid needs {expected} cells, got {}",
                blocked.len()
            )));
        }
        Ok(Grid { width, height, blocked })
    }

    pub fn filled(width: usize, height: usize, blocked: bool) -> Result<Self> {
        Grid::new(width, height, vec![blocked; width.saturating_mul(height)])
    }

    pub fn from_fn(width: usize, height: usize, mut is_blocked: impl FnMut(Cell) -> bool) -> Result<Self> {
        let mut blocked = Vec::with_capacity(width.saturating_mul(height));
        for y in 0..height {
            for x in 0..width {
                blocked.push(is_blocked(Cell::new(x, y)));
            }
        }
        Grid::new(width, height, blocked)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.blocked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocked.is_empty()
    }

    /// Row-major occupancy, `true` = blocked.
    pub fn cells(&self) -> &[bool] {
        &self.blocked
    }

    pub fn into_cells(self) -> Vec<bool> {
        self.blocked
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.x < self.width && cell.y < self.height
    }

    pub fn index(&self, cell: Cell) -> usize {
        cell.y * self.width + cell.x
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index % self.width, index / self.width)
    }

    /// Out-of-bounds cells read as blocked.
    pub fn is_blocked(&self, cell: Cell) -> bool {
        !self.in_bounds(cell) || self.blocked[self.index(cell)]
    }

    pub fn is_free(&self, cell: Cell) -> bool {
        !self.is_blocked(cell)
    }

    pub fn free_count(&self) -> usize {
        self.blocked.iter().filter(|b| !**b).count()
    }

    pub fn blocked_count(&self) -> usize {
        self.len() - self.free_count()
    }

    pub fn free_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.blocked
            .iter()
            .enumerate()
            .filter(|(_, b)| !**b)
            .map(|(i, _)| self.cell_at(i))
    }

    pub(crate) fn check_free(&self, cell: Cell, what: &str) -> Result<()> {
        if !self.in_bounds(cell) {
            return Err(Error::contract(format!(
                "{what} {cell} outside {}x{} grid",
                self.width, self.height
            )));
        }
        if self.blocked[self.index(cell)] {
            return Err(Error::contract(format!("{what} {cell} is blocked")));
        }
        Ok(())
    }

    /// Legal moves out of `cell`, in N, NE, E, SE, S, SW, W, NW order.
    pub fn neighbors(&self, cell: Cell) -> Result<Vec<Move>> {
        self.neighbors_with(cell, Connectivity::CornerCutting)
    }

    pub fn neighbors_with(&self, cell: Cell, connectivity: Connectivity) -> Result<Vec<Move>> {
        self.check_free(cell, "cell")?;
        Ok(self.moves(cell, connectivity).collect())
    }

    /// Unchecked successor generation; `cell` must be in bounds.
    pub(crate) fn moves(&self, cell: Cell, connectivity: Connectivity) -> impl Iterator<Item = Move> + '_ {
        OFFSETS.iter().filter_map(move |&(dx, dy)| {
            let target = self.offset(cell, dx, dy)?;
            if self.blocked[self.index(target)] {
                return None;
            }
            let diagonal = dx != 0 && dy != 0;
            if diagonal && connectivity == Connectivity::NoCornerCutting {
                let side_a = Cell::new(target.x, cell.y);
                let side_b = Cell::new(cell.x, target.y);
                if self.is_blocked(side_a) || self.is_blocked(side_b) {
                    return None;
                }
            }
            let cost = if diagonal { SQRT_2 } else { 1.0 };
            Some(Move { target, cost })
        })
    }

    fn offset(&self, cell: Cell, dx: isize, dy: isize) -> Option<Cell> {
        let x = cell.x.checked_add_signed(dx)?;
        let y = cell.y.checked_add_signed(dy)?;
        (x < self.width && y < self.height).then_some(Cell::new(x, y))
    }

    /// Cost of the single move `from -> to`, if it is legal.
    pub fn move_cost(&self, from: Cell, to: Cell, connectivity: Connectivity) -> Option<f64> {
        if self.is_blocked(from) {
            return None;
        }
        self.moves(from, connectivity).find(|m| m.target == to).map(|m| m.cost)
    }

    /// Clockwise rotation by `quarter_turns * 90°`.
    pub fn rotate(&self, quarter_turns: u8) -> Grid {
        let (w, h) = (self.width, self.height);
        match quarter_turns % 4 {
            0 => self.clone(),
            1 => Grid::from_fn(h, w, |c| self.blocked[(h - 1 - c.x) * w + c.y]).unwrap(),
            2 => Grid::from_fn(w, h, |c| self.blocked[(h - 1 - c.y) * w + (w - 1 - c.x)]).unwrap(),
            _ => Grid::from_fn(h, w, |c| self.blocked[c.x * w + (w - 1 - c.y)]).unwrap(),
        }
    }

    pub fn to_map_string(&self) -> String {
        String::from_utf8(serialize_map(self)).expect("map text is ASCII")
    }
}

/// Parses the octile map text format (`type octile` / `height` / `width` / `map` header).
///
/// `'@'` and `'T'` are blocked, `'.'` is free. A trailing `\r` on any line is
/// tolerated so CRLF files from other tools still load.
pub fn parse_map(bytes: &[u8]) -> Result<Grid> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()].iter().filter(|b| **b == b'\n').count() + 1;
        Error::parse(line, "input is not valid UTF-8")
    })?;
    let mut lines = text
        .split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .enumerate()
        .map(|(i, l)| (i + 1, l));

    let mut header = |key: &str| -> Result<(usize, String)> {
        let (no, line) = lines
            .next()
            .ok_or_else(|| Error::parse(0, format!("missing '{key}' header line")))?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(Error::parse(no, format!("expected '{key}', found {line:?}")));
        }
        let value = parts.next().unwrap_or_default().to_string();
        if parts.next().is_some() {
            return Err(Error::parse(no, format!("trailing tokens after '{key}'")));
        }
        Ok((no, value))
    };

    let (no, kind) = header("type")?;
    if kind != "octile" {
        return Err(Error::parse(no, format!("unsupported map type {kind:?}")));
    }
    let (no, h) = header("height")?;
    let height: usize = h.parse().map_err(|_| Error::parse(no, format!("bad height {h:?}")))?;
    let (no, w) = header("width")?;
    let width: usize = w.parse().map_err(|_| Error::parse(no, format!("bad width {w:?}")))?;
    let (no, rest) = header("map")?;
    if !rest.is_empty() {
        return Err(Error::parse(no, "unexpected value after 'map'"));
    }
    if width == 0 || height == 0 {
        return Err(Error::parse(no, format!("empty map {width}x{height}")));
    }

    let mut blocked = Vec::with_capacity(width * height);
    let mut rows = 0;
    for (no, line) in lines.by_ref() {
        if rows == height {
            if line.is_empty() {
                continue;
            }
            return Err(Error::parse(no, format!("more than the declared {height} map rows")));
        }
        if line.is_empty() {
            // only a final newline may follow the last row
            return Err(Error::parse(no, "empty map row"));
        }
        if line.len() != width {
            return Err(Error::parse(
                no,
                format!("row has {} cells, expected {width}", line.len()),
            ));
        }
        for ch in line.chars() {
            blocked.push(match ch {
                '.' => false,
                '@' | 'T' => true,
                other => return Err(Error::parse(no, format!("unknown map character {other:?}"))),
            });
        }
        rows += 1;
    }
    if rows != height {
        return Err(Error::parse(
            4 + rows,
            format!("expected {height} map rows, found {rows}"),
        ));
    }
    Grid::new(width, height, blocked)
}

/// Canonical text form: `'.'` free, `'@'` blocked, LF line endings.
pub fn serialize_map(grid: &Grid) -> Vec<u8> {
    let mut out = format!("type octile\nheight {}\nwidth {}\nmap\n", grid.height, grid.width).into_bytes();
    out.reserve(grid.height * (grid.width + 1));
    for row in grid.blocked.chunks(grid.width) {
        out.extend(row.iter().map(|&b| if b { b'@' } else { b'.' }));
        out.push(b'\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: &[&str]) -> Grid {
        let h = rows.len();
        let w = rows[0].len();
        Grid::from_fn(w, h, |c| rows[c.y].as_bytes()[c.x] == b'@').unwrap()
    }

    #[test]
    fn corner_of_empty_grid_has_three_moves() {
        let g = Grid::filled(3, 3, false).unwrap();
        let moves = g.neighbors(Cell::new(0, 0)).unwrap();
        assert_eq!(
            moves,
            vec![
                Move {
                    target: Cell::new(1, 0),
                    cost: 1.0
                },
                Move {
                    target: Cell::new(1, 1),
                    cost: SQRT_2
                },
                Move {
                    target: Cell::new(0, 1),
                    cost: 1.0
                },
            ]
        );
    }

    #[test]
    fn interior_has_eight_moves_in_compass_order() {
        let g = Grid::filled(3, 3, false).unwrap();
        let targets: Vec<_> = g
            .neighbors(Cell::new(1, 1))
            .unwrap()
            .into_iter()
            .map(|m| (m.target.x, m.target.y))
            .collect();
        assert_eq!(
            targets,
            vec![(1, 0), (2, 0), (2, 1), (2, 2), (1, 2), (0, 2), (0, 1), (0, 0)]
        );
    }

    #[test]
    fn diagonal_squeeze_is_allowed_by_default() {
        let g = grid(&[".@.", "@..", "..."]);
        let moves = g.neighbors(Cell::new(0, 0)).unwrap();
        assert_eq!(
            moves,
            vec![Move {
                target: Cell::new(1, 1),
                cost: SQRT_2
            }]
        );
        let strict = g
            .neighbors_with(Cell::new(0, 0), Connectivity::NoCornerCutting)
            .unwrap();
        assert!(strict.is_empty());
    }

    #[test]
    fn neighbors_rejects_bad_input_cell() {
        let g = grid(&["@."]);
        assert!(matches!(g.neighbors(Cell::new(0, 0)), Err(Error::Contract(_))));
        assert!(matches!(g.neighbors(Cell::new(5, 0)), Err(Error::Contract(_))));
    }

    #[test]
    fn octile_values() {
        assert_eq!(octile(Cell::new(0, 0), Cell::new(0, 0)), 0.0);
        assert!((octile(Cell::new(0, 0), Cell::new(3, 3)) - 4.242640687).abs() < 1e-9);
        assert!((octile(Cell::new(0, 0), Cell::new(5, 2)) - 5.828427125).abs() < 1e-9);
    }

    #[test]
    fn octile_is_consistent_over_every_move() {
        let g = grid(&["..@..", ".@...", "...@.", "@....", "..@.."]);
        for goal in g.free_cells() {
            for a in g.free_cells() {
                for m in g.neighbors(a).unwrap() {
                    assert!(octile(a, goal) <= m.cost + octile(m.target, goal) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn parse_basic_body() {
        let g = parse_map(b"type octile\nheight 2\nwidth 2\nmap\n.@\n@.\n").unwrap();
        assert!(g.is_blocked(Cell::new(1, 0)));
        assert!(g.is_blocked(Cell::new(0, 1)));
        assert!(g.is_free(Cell::new(0, 0)));
        assert!(g.is_free(Cell::new(1, 1)));
    }

    #[test]
    fn parse_treats_trees_as_blocked_and_canonicalizes() {
        let g = parse_map(b"type octile\nheight 1\nwidth 3\nmap\n.T@").unwrap();
        assert_eq!(g.to_map_string(), "type octile\nheight 1\nwidth 3\nmap\n.@@\n");
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = parse_map(b"type octile\nheight 2\nwidth 2\nmap\n..\n..\n..\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 7, .. }), "{err}");

        let err = parse_map(b"type octile\nheight 2\nwidth 2\nmap\n..\n...\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 6, .. }), "{err}");

        let err = parse_map(b"type octile\nheight 1\nwidth 2\nmap\n.x\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }), "{err}");

        let err = parse_map(b"type octile\nheigth 1\nwidth 2\nmap\n..\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");

        let err = parse_map(b"type octile\nheight 3\nwidth 2\nmap\n..\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
    }

    #[test]
    fn serialize_single_cells() {
        let free = Grid::filled(1, 1, false).unwrap();
        let blocked = Grid::filled(1, 1, true).unwrap();
        assert_eq!(serialize_map(&free), b"type octile\nheight 1\nwidth 1\nmap\n.\n");
        assert_eq!(serialize_map(&blocked), b"type octile\nheight 1\nwidth 1\nmap\n@\n");
    }

    #[test]
    fn rotation_round_trips() {
        let g = grid(&["@..", "...", ".@@", "..."]);
        assert_eq!(g.rotate(1).width(), 4);
        assert!(g.rotate(1).is_blocked(Cell::new(3, 0)));
        assert_eq!(g.rotate(1).rotate(3), g);
        assert_eq!(g.rotate(2).rotate(2), g);
        assert_eq!(g.rotate(1).rotate(1), g.rotate(2));
    }
}
