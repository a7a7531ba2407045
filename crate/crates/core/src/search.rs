//! Best-first search over a [`Grid`]: A*, Weighted A* and Dijkstra cost-to-go fields.
//!
//! Policies are fixed so expansion counts are reproducible:
//!
//! * OPEN is ordered by `f = g + w·h`; equal `f` prefers the larger `g`, and the
//!   remaining ties go first-in first-out. `f` values are compared on a grid of
//!   [`F_QUANTUM`] so that sums differing only by rounding still count as ties.
//! * An expansion is a pop from OPEN that generates successors. Popping the goal
//!   ends the search and is not counted.
//! * A node is re-opened, closed or not, whenever a path cheaper by more than
//!   [`G_TOLERANCE`] reaches it. Inconsistent heuristics therefore still return
//!   correct (bounded) paths, at the price of re-expansions, which are counted.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::grid::{octile, Cell, Connectivity, Grid};

/// Minimum g improvement that triggers a re-open.
pub const G_TOLERANCE: f64 = 1e-12;

/// Resolution at which `f` values are compared.
pub const F_QUANTUM: f64 = 1e-9;

fn f_key(f: f64) -> f64 {
    (f / F_QUANTUM).round()
}

/// Heuristic estimate of the cost-to-go; the goal is bound at construction.
pub trait Heuristic {
    fn estimate(&self, cell: Cell) -> f64;
}

impl<F: Fn(Cell) -> f64> Heuristic for F {
    fn estimate(&self, cell: Cell) -> f64 {
        self(cell)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OctileHeuristic {
    pub goal: Cell,
}

impl OctileHeuristic {
    pub fn new(goal: Cell) -> Self {
        OctileHeuristic { goal }
    }
}

impl Heuristic for OctileHeuristic {
    fn estimate(&self, cell: Cell) -> f64 {
        octile(cell, self.goal)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub found: bool,
    /// `start..=goal`, empty when not found.
    pub path: Vec<Cell>,
    /// Sum of move costs along `path`; `f64::INFINITY` when not found.
    pub cost: f64,
    pub expansions: u64,
}

impl SearchResult {
    fn not_found(expansions: u64) -> Self {
        SearchResult {
            found: false,
            path: Vec::new(),
            cost: f64::INFINITY,
            expansions,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct OpenEntry {
    /// Quantized `f`, see [`f_key`].
    f: f64,
    g: f64,
    seq: u64,
    node: usize,
}

impl PartialEq for OpenEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for OpenEntry {}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OpenEntry {
    // BinaryHeap pops the greatest: smallest f, then largest g, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| self.g.total_cmp(&other.g))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// A* ordering by `g + weight·h` under the default (corner-cutting) move model.
pub fn astar<H: Heuristic + ?Sized>(
    grid: &Grid,
    start: Cell,
    goal: Cell,
    heuristic: &H,
    weight: f64,
) -> Result<SearchResult> {
    astar_with(grid, start, goal, heuristic, weight, Connectivity::CornerCutting)
}

pub fn astar_with<H: Heuristic + ?Sized>(
    grid: &Grid,
    start: Cell,
    goal: Cell,
    heuristic: &H,
    weight: f64,
    connectivity: Connectivity,
) -> Result<SearchResult> {
    grid.check_free(start, "start")?;
    grid.check_free(goal, "goal")?;
    if !weight.is_finite() || weight < 1.0 {
        return Err(Error::contract(format!(
            "weight must be a finite value >= 1, got {weight}"
        )));
    }

    let n = grid.len();
    let mut g = vec![f64::INFINITY; n];
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut open = BinaryHeap::new();
    let mut seq = 0u64;
    let mut expansions = 0u64;

    let start_idx = grid.index(start);
    let goal_idx = grid.index(goal);
    g[start_idx] = 0.0;
    open.push(OpenEntry {
        f: f_key(weight * heuristic.estimate(start)),
        g: 0.0,
        seq,
        node: start_idx,
    });

    while let Some(entry) = open.pop() {
        if entry.g > g[entry.node] {
            continue; // superseded by a cheaper path
        }
        if entry.node == goal_idx {
            let path = reconstruct_path(grid, &parent, start, goal)?;
            return Ok(SearchResult {
                found: true,
                path,
                cost: entry.g,
                expansions,
            });
        }
        expansions += 1;
        let cell = grid.cell_at(entry.node);
        for mv in grid.moves(cell, connectivity) {
            let next = grid.index(mv.target);
            let tentative = entry.g + mv.cost;
            if tentative < g[next] - G_TOLERANCE {
                g[next] = tentative;
                parent[next] = Some(entry.node);
                seq += 1;
                open.push(OpenEntry {
                    f: f_key(tentative + weight * heuristic.estimate(mv.target)),
                    g: tentative,
                    seq,
                    node: next,
                });
            }
        }
    }
    Ok(SearchResult::not_found(expansions))
}

/// Walks back-pointers (indexed by cell index) from `goal` to `start`.
pub fn reconstruct_path(grid: &Grid, parents: &[Option<usize>], start: Cell, goal: Cell) -> Result<Vec<Cell>> {
    let start_idx = grid.index(start);
    let mut node = grid.index(goal);
    let mut path = vec![goal];
    while node != start_idx {
        node = parents
            .get(node)
            .copied()
            .flatten()
            .ok_or_else(|| Error::Internal(format!("no parent recorded for {}", grid.cell_at(node))))?;
        path.push(grid.cell_at(node));
        if path.len() > parents.len() {
            return Err(Error::Internal("cycle in parent pointers".into()));
        }
    }
    path.reverse();
    Ok(path)
}

/// Exact cost-to-go to a fixed goal for every cell; `+inf` where unreachable or blocked.
#[derive(Debug, Clone, PartialEq)]
pub struct CostField {
    width: usize,
    height: usize,
    goal: Cell,
    values: Vec<f64>,
}

impl CostField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn goal(&self) -> Cell {
        self.goal
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, cell: Cell) -> f64 {
        self.values[cell.y * self.width + cell.x]
    }

    pub fn is_reachable(&self, cell: Cell) -> bool {
        self.get(cell).is_finite()
    }

    /// Cells with a finite cost-to-go, goal included.
    pub fn reachable_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        let w = self.width;
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(move |(i, _)| Cell::new(i % w, i / w))
    }
}

impl Heuristic for CostField {
    fn estimate(&self, cell: Cell) -> f64 {
        self.get(cell)
    }
}

#[derive(Debug, Clone, Copy)]
struct DistEntry {
    dist: f64,
    node: usize,
}

impl PartialEq for DistEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for DistEntry {}

impl PartialOrd for DistEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DistEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Dijkstra from `goal`. Moves are symmetric under both connectivity rules, so
/// distance from the goal equals cost-to-go.
pub fn dijkstra_field(grid: &Grid, goal: Cell) -> Result<CostField> {
    dijkstra_field_with(grid, goal, Connectivity::CornerCutting)
}

pub fn dijkstra_field_with(grid: &Grid, goal: Cell, connectivity: Connectivity) -> Result<CostField> {
    grid.check_free(goal, "goal")?;
    let mut values = vec![f64::INFINITY; grid.len()];
    let mut heap = BinaryHeap::new();
    let goal_idx = grid.index(goal);
    values[goal_idx] = 0.0;
    heap.push(DistEntry {
        dist: 0.0,
        node: goal_idx,
    });
    while let Some(DistEntry { dist, node }) = heap.pop() {
        if dist > values[node] {
            continue;
        }
        for mv in grid.moves(grid.cell_at(node), connectivity) {
            let next = grid.index(mv.target);
            let candidate = dist + mv.cost;
            if candidate < values[next] {
                values[next] = candidate;
                heap.push(DistEntry {
                    dist: candidate,
                    node: next,
                });
            }
        }
    }
    Ok(CostField {
        width: grid.width(),
        height: grid.height(),
        goal,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SQRT_2;

    fn grid(rows: &[&str]) -> Grid {
        Grid::from_fn(rows[0].len(), rows.len(), |c| rows[c.y].as_bytes()[c.x] == b'@').unwrap()
    }

    /// Exhaustive simple-path enumeration; only usable on tiny grids.
    fn brute_force_cost(g: &Grid, start: Cell, goal: Cell) -> f64 {
        fn dfs(g: &Grid, at: Cell, goal: Cell, seen: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if acc >= *best {
                return;
            }
            if at == goal {
                *best = acc;
                return;
            }
            for m in g.neighbors(at).unwrap() {
                let i = g.index(m.target);
                if !seen[i] {
                    seen[i] = true;
                    dfs(g, m.target, goal, seen, acc + m.cost, best);
                    seen[i] = false;
                }
            }
        }
        let mut seen = vec![false; g.len()];
        seen[g.index(start)] = true;
        let mut best = f64::INFINITY;
        dfs(g, start, goal, &mut seen, 0.0, &mut best);
        best
    }

    #[test]
    fn empty_three_by_three_diagonal() {
        let g = Grid::filled(3, 3, false).unwrap();
        let (s, t) = (Cell::new(0, 0), Cell::new(2, 2));
        let r = astar(&g, s, t, &OctileHeuristic::new(t), 1.0).unwrap();
        assert!(r.found);
        assert!((r.cost - 2.0 * SQRT_2).abs() < 1e-9);
        assert!((brute_force_cost(&g, s, t) - r.cost).abs() < 1e-9);
        assert_eq!(r.expansions, 2);
        assert_eq!(r.path, vec![s, Cell::new(1, 1), t]);
    }

    #[test]
    fn start_equals_goal() {
        let g = Grid::filled(4, 4, false).unwrap();
        let c = Cell::new(2, 1);
        let r = astar(&g, c, c, &OctileHeuristic::new(c), 1.0).unwrap();
        assert!(r.found);
        assert_eq!(r.cost, 0.0);
        assert_eq!(r.expansions, 0);
        assert_eq!(r.path, vec![c]);
    }

    #[test]
    fn wall_disconnects() {
        let g = grid(&[".@.", ".@.", ".@."]);
        let t = Cell::new(2, 0);
        let r = astar(&g, Cell::new(0, 0), t, &OctileHeuristic::new(t), 1.0).unwrap();
        assert!(!r.found);
        assert!(r.path.is_empty());
        assert!(r.cost.is_infinite());
        assert_eq!(r.expansions, 3);
    }

    #[test]
    fn rejects_bad_endpoints_and_weights() {
        let g = grid(&[".@", ".."]);
        let h = OctileHeuristic::new(Cell::new(0, 0));
        assert!(matches!(
            astar(&g, Cell::new(1, 0), Cell::new(0, 0), &h, 1.0),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            astar(&g, Cell::new(0, 0), Cell::new(0, 9), &h, 1.0),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            astar(&g, Cell::new(0, 0), Cell::new(0, 1), &h, 0.5),
            Err(Error::Contract(_))
        ));
        assert!(dijkstra_field(&g, Cell::new(1, 0)).is_err());
    }

    #[test]
    fn matches_brute_force_on_small_mazes() {
        let g = grid(&["....@", ".@@.@", ".@...", ".@.@.", "...@."]);
        for s in g.free_cells() {
            for t in g.free_cells() {
                let r = astar(&g, s, t, &OctileHeuristic::new(t), 1.0).unwrap();
                let bf = brute_force_cost(&g, s, t);
                assert!((r.cost - bf).abs() < 1e-9, "{s} -> {t}: {} vs {bf}", r.cost);
            }
        }
    }

    #[test]
    fn dijkstra_on_empty_grid_is_octile() {
        let g = Grid::filled(7, 5, false).unwrap();
        let goal = Cell::new(4, 1);
        let field = dijkstra_field(&g, goal).unwrap();
        assert_eq!(field.get(goal), 0.0);
        for c in g.free_cells() {
            assert!((field.get(c) - octile(c, goal)).abs() < 1e-9);
        }
    }

    #[test]
    fn dijkstra_field_satisfies_bellman_equation() {
        let g = grid(&["..@...", ".@@.@.", "......", "@.@@.@", "...@.."]);
        let goal = Cell::new(5, 4);
        let field = dijkstra_field(&g, goal).unwrap();
        for c in g.free_cells() {
            let v = field.get(c);
            if c == goal || v.is_infinite() {
                continue;
            }
            let best = g
                .neighbors(c)
                .unwrap()
                .iter()
                .map(|m| m.cost + field.get(m.target))
                .fold(f64::INFINITY, f64::min);
            assert!((v - best).abs() < 1e-9);
        }
        for (i, b) in g.cells().iter().enumerate() {
            if *b {
                assert!(field.values()[i].is_infinite());
            }
        }
    }

    #[test]
    fn reconstruct_chain() {
        let g = Grid::filled(3, 1, false).unwrap();
        let parents = vec![None, Some(0), Some(1)];
        let path = reconstruct_path(&g, &parents, Cell::new(0, 0), Cell::new(2, 0)).unwrap();
        assert_eq!(path, vec![Cell::new(0, 0), Cell::new(1, 0), Cell::new(2, 0)]);
        let single = reconstruct_path(&g, &parents, Cell::new(0, 0), Cell::new(0, 0)).unwrap();
        assert_eq!(single, vec![Cell::new(0, 0)]);
        let broken = vec![None, None, Some(1)];
        assert!(matches!(
            reconstruct_path(&g, &broken, Cell::new(0, 0), Cell::new(2, 0)),
            Err(Error::Internal(_))
        ));
    }

    #[test]
    fn inconsistent_heuristic_still_finds_a_path_via_reopening() {
        // A heuristic that strongly overestimates near the cheap route forces re-opens.
        let g = Grid::filled(6, 6, false).unwrap();
        let goal = Cell::new(5, 5);
        let h = |c: Cell| if c.x == c.y && c != goal { 50.0 } else { octile(c, goal) };
        let r = astar(&g, Cell::new(0, 0), goal, &h, 1.0).unwrap();
        assert!(r.found);
        assert_eq!(r.path.first(), Some(&Cell::new(0, 0)));
        assert_eq!(r.path.last(), Some(&goal));
    }
}
