//! Grid realization of a [`SpatialConfig`]: furniture modules, partition
//! segments, window slots, validation and the layout file format.
//!
//! Cells are 1 m squares addressed `(x, y)` with `x` growing east and `y`
//! growing north; `y = 0` is the south row. The entrance sits mid-south.

use std::collections::{BTreeSet, VecDeque};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::space::{SpatialConfig, CEILING_MAX_M, CEILING_MIN_M, MAX_FURNITURE_RATIO, MAX_WINDOWS};

/// Version tag written into layout files.
pub const LAYOUT_FORMAT: u32 = 1;
/// Rejected placements tolerated before giving up.
pub const DEFAULT_MAX_RETRIES: usize = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum LayoutError {
    #[error("floor area {0} m² is not a square of whole meters")]
    NonSquareFloor(u32),
    #[error("spatial config is out of range: {0:?}")]
    InvalidConfig(SpatialConfig),
    #[error("could not place {what} after {attempts} attempts")]
    GenerationFailed { what: &'static str, attempts: usize },
    #[error("malformed layout: {0}")]
    Parse(String),
    #[error("unsupported layout format {0}")]
    UnsupportedFormat(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    N,
    E,
    S,
    W,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSize {
    pub w: u32,
    pub d: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Furniture {
    pub x: u32,
    pub y: u32,
    /// Edge length of the square module in meters (1 or 2).
    pub size: u32,
}

impl Furniture {
    pub fn area(&self) -> u32 {
        self.size * self.size
    }

    fn cells(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.size).flat_map(move |dy| (0..self.size).map(move |dx| (self.x + dx, self.y + dy)))
    }
}

/// Unit wall on one side of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub cell: [u32; 2],
    pub side: Side,
}

/// Grid edge between a cell and its east (`east = true`) or north neighbour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Edge {
    x: u32,
    y: u32,
    east: bool,
}

impl Partition {
    /// Canonical interior edge, or `None` for perimeter or out-of-grid segments.
    fn edge(&self, grid: GridSize) -> Option<Edge> {
        let [x, y] = self.cell;
        if x >= grid.w || y >= grid.d {
            return None;
        }
        let edge = match self.side {
            Side::E => Edge { x, y, east: true },
            Side::N => Edge { x, y, east: false },
            Side::W => Edge {
                x: x.checked_sub(1)?,
                y,
                east: true,
            },
            Side::S => Edge {
                x,
                y: y.checked_sub(1)?,
                east: false,
            },
        };
        let interior = if edge.east {
            edge.x + 1 < grid.w
        } else {
            edge.y + 1 < grid.d
        };
        interior.then_some(edge)
    }

    fn from_edge(edge: Edge) -> Self {
        Partition {
            cell: [edge.x, edge.y],
            side: if edge.east { Side::E } else { Side::N },
        }
    }
}

/// Unit window slot on a perimeter wall, `offset` meters from the wall's
/// west (N/S walls) or south (E/W walls) end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WindowSlot {
    pub wall: Side,
    pub offset: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutGeometry {
    pub grid: GridSize,
    pub ceiling_m: u32,
    pub entrance: [u32; 2],
    pub furniture: Vec<Furniture>,
    pub partitions: Vec<Partition>,
    pub windows: Vec<WindowSlot>,
}

/// On-disk form: the layout preceded by its format version.
#[derive(Serialize)]
struct LayoutDocRef<'a> {
    format: u32,
    grid: GridSize,
    ceiling_m: u32,
    entrance: [u32; 2],
    furniture: &'a [Furniture],
    partitions: &'a [Partition],
    windows: &'a [WindowSlot],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LayoutDoc {
    format: u32,
    grid: GridSize,
    ceiling_m: u32,
    entrance: [u32; 2],
    furniture: Vec<Furniture>,
    partitions: Vec<Partition>,
    windows: Vec<WindowSlot>,
}

impl LayoutGeometry {
    fn doc(&self) -> LayoutDocRef<'_> {
        LayoutDocRef {
            format: LAYOUT_FORMAT,
            grid: self.grid,
            ceiling_m: self.ceiling_m,
            entrance: self.entrance,
            furniture: &self.furniture,
            partitions: &self.partitions,
            windows: &self.windows,
        }
    }

    pub fn cell_count(&self) -> usize {
        (self.grid.w * self.grid.d) as usize
    }

    pub fn furniture_area(&self) -> u32 {
        self.furniture.iter().map(Furniture::area).sum()
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self.doc()).expect("layout serializes")
    }
}

/// Pretty JSON with a trailing newline; fields in a fixed order.
pub fn serialize_layout(layout: &LayoutGeometry) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(&layout.doc()).expect("layout serializes");
    out.push(b'\n');
    out
}

pub fn deserialize_layout(bytes: &[u8]) -> Result<LayoutGeometry, LayoutError> {
    let doc: LayoutDoc =
        serde_json::from_slice(bytes).map_err(|e| LayoutError::Parse(e.to_string()))?;
    layout_from_doc(doc)
}

pub fn layout_from_value(value: serde_json::Value) -> Result<LayoutGeometry, LayoutError> {
    let doc: LayoutDoc =
        serde_json::from_value(value).map_err(|e| LayoutError::Parse(e.to_string()))?;
    layout_from_doc(doc)
}

fn layout_from_doc(doc: LayoutDoc) -> Result<LayoutGeometry, LayoutError> {
    if doc.format != LAYOUT_FORMAT {
        return Err(LayoutError::UnsupportedFormat(doc.format));
    }
    Ok(LayoutGeometry {
        grid: doc.grid,
        ceiling_m: doc.ceiling_m,
        entrance: doc.entrance,
        furniture: doc.furniture,
        partitions: doc.partitions,
        windows: doc.windows,
    })
}

/// Occupancy and wall state used while building or checking a layout.
struct Floor {
    grid: GridSize,
    occupied: Vec<bool>,
    walls: BTreeSet<Edge>,
}

impl Floor {
    fn new(grid: GridSize) -> Self {
        Self {
            grid,
            occupied: vec![false; (grid.w * grid.d) as usize],
            walls: BTreeSet::new(),
        }
    }

    fn idx(&self, x: u32, y: u32) -> usize {
        (y * self.grid.w + x) as usize
    }

    fn is_free(&self, x: u32, y: u32) -> bool {
        !self.occupied[self.idx(x, y)]
    }

    fn set(&mut self, module: &Furniture, value: bool) {
        for (x, y) in module.cells() {
            let i = self.idx(x, y);
            self.occupied[i] = value;
        }
    }

    fn fits(&self, module: &Furniture) -> bool {
        module.x + module.size <= self.grid.w
            && module.y + module.size <= self.grid.d
            && module.cells().all(|(x, y)| self.is_free(x, y))
    }

    /// Number of free cells reachable from `start` by 4-connected moves that
    /// do not cross a wall.
    fn reachable_from(&self, start: [u32; 2]) -> usize {
        let [sx, sy] = start;
        if sx >= self.grid.w || sy >= self.grid.d || !self.is_free(sx, sy) {
            return 0;
        }
        let mut seen = vec![false; self.occupied.len()];
        let mut queue = VecDeque::from([(sx, sy)]);
        seen[self.idx(sx, sy)] = true;
        let mut count = 0;
        while let Some((x, y)) = queue.pop_front() {
            count += 1;
            let mut visit = |nx: u32, ny: u32, edge: Edge| {
                let i = self.idx(nx, ny);
                if !seen[i] && !self.occupied[i] && !self.walls.contains(&edge) {
                    seen[i] = true;
                    queue.push_back((nx, ny));
                }
            };
            if x + 1 < self.grid.w {
                visit(x + 1, y, Edge { x, y, east: true });
            }
            if x > 0 {
                visit(
                    x - 1,
                    y,
                    Edge {
                        x: x - 1,
                        y,
                        east: true,
                    },
                );
            }
            if y + 1 < self.grid.d {
                visit(x, y + 1, Edge { x, y, east: false });
            }
            if y > 0 {
                visit(
                    x,
                    y - 1,
                    Edge {
                        x,
                        y: y - 1,
                        east: false,
                    },
                );
            }
        }
        count
    }

    fn free_count(&self) -> usize {
        self.occupied.iter().filter(|o| !**o).count()
    }

    fn connected(&self, entrance: [u32; 2]) -> bool {
        self.reachable_from(entrance) == self.free_count()
    }
}

fn entrance_for(grid: GridSize) -> [u32; 2] {
    [grid.w / 2, 0]
}

/// Perimeter window slots, excluding the entrance slot.
fn window_slots(grid: GridSize, entrance: [u32; 2]) -> Vec<WindowSlot> {
    let mut slots = Vec::with_capacity(2 * (grid.w + grid.d) as usize);
    for wall in [Side::N, Side::E, Side::S, Side::W] {
        let len = match wall {
            Side::N | Side::S => grid.w,
            Side::E | Side::W => grid.d,
        };
        for offset in 0..len {
            if wall == Side::S && entrance[1] == 0 && offset == entrance[0] {
                continue;
            }
            slots.push(WindowSlot { wall, offset });
        }
    }
    slots
}

/// Layout generation knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerateOptions {
    pub max_retries: usize,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        Self {
            max_retries: DEFAULT_MAX_RETRIES,
        }
    }
}

/// Realizes `config` on its square floor grid.
///
/// Deterministic for a given `(config, seed)`. Furniture is placed as 2×2
/// modules while at least 4 m² remain, then 1×1 modules; each module and each
/// partition is drawn uniformly from the remaining candidates and rejected if it
/// would cut a free cell off from the entrance.
pub fn generate_layout(config: &SpatialConfig, seed: u64) -> Result<LayoutGeometry, LayoutError> {
    generate_layout_with(config, seed, &GenerateOptions::default())
}

pub fn generate_layout_with(
    config: &SpatialConfig,
    seed: u64,
    options: &GenerateOptions,
) -> Result<LayoutGeometry, LayoutError> {
    let side = (config.floor_area_m2 as f64).sqrt().round() as u32;
    if side * side != config.floor_area_m2 || side == 0 {
        return Err(LayoutError::NonSquareFloor(config.floor_area_m2));
    }
    if !config.is_valid() {
        return Err(LayoutError::InvalidConfig(*config));
    }
    let grid = GridSize { w: side, d: side };
    let entrance = entrance_for(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut floor = Floor::new(grid);
    let mut rejected = 0usize;

    let mut furniture = Vec::new();
    let mut remaining = config.furniture_area_m2;
    for size in [2u32, 1] {
        let mut candidates: Vec<Furniture> = (0..grid.d)
            .flat_map(|y| (0..grid.w).map(move |x| Furniture { x, y, size }))
            .collect();
        while remaining >= size * size {
            candidates.retain(|m| floor.fits(m) && !m.cells().any(|(x, y)| [x, y] == entrance));
            if candidates.is_empty() {
                break;
            }
            let module = candidates.swap_remove(rng.random_range(0..candidates.len()));
            floor.set(&module, true);
            if floor.connected(entrance) {
                furniture.push(module);
                remaining -= module.area();
            } else {
                floor.set(&module, false);
                rejected += 1;
                if rejected > options.max_retries {
                    return Err(LayoutError::GenerationFailed {
                        what: "furniture",
                        attempts: rejected,
                    });
                }
            }
        }
    }
    if remaining > 0 {
        return Err(LayoutError::GenerationFailed {
            what: "furniture",
            attempts: rejected,
        });
    }

    let mut edges: Vec<Edge> = (0..grid.d)
        .flat_map(|y| {
            (0..grid.w).flat_map(move |x| {
                [
                    (x + 1 < grid.w).then_some(Edge { x, y, east: true }),
                    (y + 1 < grid.d).then_some(Edge { x, y, east: false }),
                ]
            })
        })
        .flatten()
        .collect();
    let mut partitions = Vec::new();
    while partitions.len() < config.partition_count as usize {
        if edges.is_empty() {
            return Err(LayoutError::GenerationFailed {
                what: "partitions",
                attempts: rejected,
            });
        }
        let edge = edges.swap_remove(rng.random_range(0..edges.len()));
        floor.walls.insert(edge);
        if floor.connected(entrance) {
            partitions.push(Partition::from_edge(edge));
        } else {
            floor.walls.remove(&edge);
            rejected += 1;
            if rejected > options.max_retries {
                return Err(LayoutError::GenerationFailed {
                    what: "partitions",
                    attempts: rejected,
                });
            }
        }
    }

    let slots = window_slots(grid, entrance);
    let wanted = config.window_count as usize;
    if wanted > slots.len() {
        return Err(LayoutError::GenerationFailed {
            what: "windows",
            attempts: rejected,
        });
    }
    let windows = index::sample(&mut rng, slots.len(), wanted)
        .into_iter()
        .map(|i| slots[i])
        .collect();

    Ok(LayoutGeometry {
        grid,
        ceiling_m: config.ceiling_height_m,
        entrance,
        furniture,
        partitions,
        windows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    Grid,
    Ceiling,
    Entrance,
    FurnitureBounds,
    FurnitureOverlap,
    Coverage,
    PartitionEdge,
    WindowSlot,
    WindowCapacity,
    Connectivity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: Rule,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn has(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

/// Checks every geometric rule and reports all violations found.
pub fn validate_layout(layout: &LayoutGeometry) -> ValidationReport {
    let mut violations = Vec::new();
    let mut flag = |rule, detail: String| violations.push(Violation { rule, detail });
    let grid = layout.grid;

    if grid.w == 0 || grid.d == 0 {
        flag(Rule::Grid, format!("empty grid {}×{}", grid.w, grid.d));
        return ValidationReport {
            ok: false,
            violations,
        };
    }
    if !(CEILING_MIN_M as u32..=CEILING_MAX_M as u32).contains(&layout.ceiling_m) {
        flag(
            Rule::Ceiling,
            format!("ceiling {} m outside 2–10 m", layout.ceiling_m),
        );
    }

    let mut floor = Floor::new(grid);
    for (i, m) in layout.furniture.iter().enumerate() {
        if !(m.size == 1 || m.size == 2) || m.x + m.size > grid.w || m.y + m.size > grid.d {
            flag(
                Rule::FurnitureBounds,
                format!(
                    "module {i} ({}, {}) size {} leaves the grid",
                    m.x, m.y, m.size
                ),
            );
            continue;
        }
        if !floor.fits(m) {
            flag(
                Rule::FurnitureOverlap,
                format!("module {i} at ({}, {}) overlaps another module", m.x, m.y),
            );
        }
        floor.set(m, true);
    }
    let area = layout.furniture_area() as f64;
    let limit = MAX_FURNITURE_RATIO * layout.cell_count() as f64;
    if area > limit {
        flag(
            Rule::Coverage,
            format!("furniture covers {area} m², limit {limit} m²"),
        );
    }

    let [ex, ey] = layout.entrance;
    let on_perimeter =
        ex < grid.w && ey < grid.d && (ex == 0 || ey == 0 || ex + 1 == grid.w || ey + 1 == grid.d);
    if !on_perimeter {
        flag(
            Rule::Entrance,
            format!("entrance ({ex}, {ey}) is not a perimeter cell"),
        );
    } else if !floor.is_free(ex, ey) {
        flag(
            Rule::Entrance,
            format!("entrance ({ex}, {ey}) is blocked by furniture"),
        );
    }

    for p in &layout.partitions {
        match p.edge(grid) {
            None => flag(
                Rule::PartitionEdge,
                format!(
                    "partition {:?} of cell {:?} is not an interior edge",
                    p.side, p.cell
                ),
            ),
            Some(edge) => {
                if !floor.walls.insert(edge) {
                    flag(
                        Rule::PartitionEdge,
                        format!("duplicate partition {:?} of cell {:?}", p.side, p.cell),
                    );
                }
            }
        }
    }

    let slots = window_slots(grid, layout.entrance);
    let mut seen = BTreeSet::new();
    for w in &layout.windows {
        if !slots.contains(w) {
            flag(
                Rule::WindowSlot,
                format!("window {:?} is not a usable perimeter slot", w),
            );
        } else if !seen.insert(*w) {
            flag(Rule::WindowSlot, format!("window {:?} used twice", w));
        }
    }
    if layout.windows.len() > slots.len() || layout.windows.len() > MAX_WINDOWS as usize {
        flag(
            Rule::WindowCapacity,
            format!(
                "{} windows exceed capacity {}",
                layout.windows.len(),
                slots.len().min(MAX_WINDOWS as usize)
            ),
        );
    }

    if on_perimeter && floor.is_free(ex, ey) {
        let reached = floor.reachable_from(layout.entrance);
        let free = floor.free_count();
        if reached != free {
            flag(
                Rule::Connectivity,
                format!(
                    "{} of {free} free cells unreachable from the entrance",
                    free - reached
                ),
            );
        }
    }

    ValidationReport {
        ok: violations.is_empty(),
        violations,
    }
}
