//! Grid pathfinding with correction-factor heuristics.
//!
//! * [`grid`]: occupancy maps, 8-connected moves, octile distance, map text I/O.
//! * [`search`]: A*/Weighted A* with expansion accounting and Dijkstra cost-to-go fields.
//! * [`cf`]: correction-factor targets, masks, the rebuilt heuristic and the CF-map file format.
//! * [`gen`]: seeded training and evaluation map generators.
//! * [`ingest`]: resizing of externally sourced maps.
//! * [`tasks`]: filtered start/goal sampling and task files.
//! * [`eval`]: cost/expansion ratios, `J(λ)` sweeps and runtime accounting.

pub mod cf;
pub mod error;
pub mod eval;
pub mod gen;
pub mod grid;
pub mod ingest;
pub mod rng;
pub mod search;
pub mod tasks;

pub use error::{Error, Result};
pub use grid::{octile, Cell, Connectivity, Grid, Move};
pub use rng::SplitMix64;
pub use search::{astar, dijkstra_field, CostField, Heuristic, OctileHeuristic, SearchResult};
