//! Wang tiles: Turing-machine compilation into a seeded tile set, an
//! unseeded aperiodic tile set built from multiplier dynamics, square and
//! torus searches, run decoding, and the seeded line shift.

use crate::error::{Error, Result};
use crate::shift::{NnSft, SearchOutcome};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Default node budget for tile searches.
pub const DEFAULT_TILE_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WangTile {
    pub id: usize,
    pub north: String,
    pub east: String,
    pub south: String,
    pub west: String,
    #[serde(default)]
    pub seed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileSet {
    /// Declared color alphabet (sorted, deduplicated).
    pub colors: Vec<String>,
    pub tiles: Vec<WangTile>,
    /// True iff the set is meant to be used with a mandatory seed tile.
    pub seeded: bool,
}

impl TileSet {
    pub fn new(tiles: Vec<WangTile>, seeded: bool) -> Result<Self> {
        let mut colors = BTreeSet::new();
        for (i, t) in tiles.iter().enumerate() {
            if t.id != i {
                return Err(Error::Input(format!(
                    "tile ids must be 0..n in order (tile {i} has id {})",
                    t.id
                )));
            }
            for c in [&t.north, &t.east, &t.south, &t.west] {
                colors.insert(c.clone());
            }
        }
        if seeded && !tiles.iter().any(|t| t.seed) {
            return Err(Error::Input("seeded set has no seed tile".into()));
        }
        Ok(TileSet {
            colors: colors.into_iter().collect(),
            tiles,
            seeded,
        })
    }

    pub fn seed_tiles(&self) -> Vec<usize> {
        self.tiles
            .iter()
            .filter(|t| t.seed)
            .map(|t| t.id)
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(Error::from)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ts: TileSet = serde_json::from_str(text)?;
        TileSet::new(ts.tiles, ts.seeded)
    }

    fn east_ok(&self) -> Vec<Vec<bool>> {
        let n = self.tiles.len();
        let mut t = vec![vec![false; n]; n];
        for i in 0..n {
            for j in 0..n {
                t[i][j] = self.tiles[i].east == self.tiles[j].west;
            }
        }
        t
    }

    fn north_ok(&self) -> Vec<Vec<bool>> {
        let n = self.tiles.len();
        let mut t = vec![vec![false; n]; n];
        for i in 0..n {
            for j in 0..n {
                t[i][j] = self.tiles[i].north == self.tiles[j].south;
            }
        }
        t
    }
}

/// Recode a Wang tile set as a nearest-neighbor shift on the grid group
/// (generators a = east step, b = north step).
pub fn tileset_to_nn(ts: &TileSet) -> Result<NnSft> {
    let n = ts.tiles.len();
    let mut east = Vec::new();
    let mut north = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if ts.tiles[i].east == ts.tiles[j].west {
                east.push((i, j));
            }
            if ts.tiles[i].north == ts.tiles[j].south {
                north.push((i, j));
            }
        }
    }
    NnSft::new(
        n,
        vec!["a".into(), "A".into(), "b".into(), "B".into()],
        vec![1, 0, 3, 2],
        &[(0, east), (2, north)],
    )
}

/// Check every interior adjacency of a square/rectangular tiling
/// (rows bottom-up, row 0 south).
pub fn verify_square(ts: &TileSet, rows: &[Vec<usize>]) -> bool {
    let h = rows.len();
    if h == 0 || rows.iter().any(|r| r.len() != rows[0].len()) {
        return false;
    }
    let w = rows[0].len();
    for y in 0..h {
        for x in 0..w {
            let t = &ts.tiles[rows[y][x]];
            if x + 1 < w && t.east != ts.tiles[rows[y][x + 1]].west {
                return false;
            }
            if y + 1 < h && t.north != ts.tiles[rows[y + 1][x]].south {
                return false;
            }
        }
    }
    true
}

/// Check every adjacency of a toroidal tiling (wrapping both ways).
pub fn verify_wang_torus(ts: &TileSet, rows: &[Vec<usize>]) -> bool {
    let h = rows.len();
    if h == 0 || rows.iter().any(|r| r.len() != rows[0].len()) {
        return false;
    }
    let w = rows[0].len();
    for y in 0..h {
        for x in 0..w {
            let t = &ts.tiles[rows[y][x]];
            if t.east != ts.tiles[rows[y][(x + 1) % w]].west {
                return false;
            }
            if t.north != ts.tiles[rows[(y + 1) % h][x]].south {
                return false;
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Square and torus search.
// ---------------------------------------------------------------------------

/// Search for a valid w×h rectangle tiling. With `require_seed`, the seed
/// tile is anchored at the bottom-left corner (the origin-constrained
/// convention); candidate seed tiles are tried in id order. Cell order
/// radiates outward from the seed so contradictions near it surface
/// immediately; the unseeded search runs in row-major order. Deterministic
/// and, short of the node budget, exhaustive.
pub fn tile_rect(
    ts: &TileSet,
    w: usize,
    h: usize,
    require_seed: bool,
    budget: u64,
) -> Result<SearchOutcome<Vec<Vec<usize>>>> {
    if w == 0 || h == 0 {
        return Err(Error::Input("window dimensions must be at least 1".into()));
    }
    if require_seed && ts.seed_tiles().is_empty() {
        return Err(Error::Input(
            "seed required but the tile set has no seed tiles".into(),
        ));
    }
    let east_ok = ts.east_ok();
    let north_ok = ts.north_ok();
    let cells = w * h;
    let mut nodes: u64 = 0;

    if !require_seed {
        let order: Vec<usize> = (0..cells).collect();
        return Ok(grid_search(
            ts, w, h, &east_ok, &north_ok, &order, &[], None, &mut nodes, budget,
        ));
    }
    // The seed is anchored at the window's origin (bottom-left corner), the
    // classical origin-constrained convention. A free-floating seed would
    // let a machine head walk off the window rim on its first move and
    // vacuously "tile" windows its run cannot actually fill, breaking the
    // tilability/simulation equivalence. Other cells stay unrestricted.
    let seeds = ts.seed_tiles();
    let mut order: Vec<usize> = (1..cells).collect();
    order.sort_by_key(|&c| {
        let (cx, cy) = ((c % w) as i64, (c / w) as i64);
        (cx + cy, c)
    });
    for &s in &seeds {
        match grid_search(
            ts,
            w,
            h,
            &east_ok,
            &north_ok,
            &order,
            &[],
            Some((0, s)),
            &mut nodes,
            budget,
        ) {
            SearchOutcome::Found(rows) => return Ok(SearchOutcome::Found(rows)),
            SearchOutcome::Budget => return Ok(SearchOutcome::Budget),
            SearchOutcome::None => {}
        }
    }
    Ok(SearchOutcome::None)
}

/// Square search, the common case of `tile_rect`.
pub fn tile_square(
    ts: &TileSet,
    n: usize,
    require_seed: bool,
    budget: u64,
) -> Result<SearchOutcome<Vec<Vec<usize>>>> {
    tile_rect(ts, n, n, require_seed, budget)
}

#[allow(clippy::too_many_arguments)]
fn grid_search(
    ts: &TileSet,
    w: usize,
    h: usize,
    east_ok: &[Vec<bool>],
    north_ok: &[Vec<bool>],
    order: &[usize],
    no_seed_cells: &[usize],
    fixed: Option<(usize, usize)>,
    nodes: &mut u64,
    budget: u64,
) -> SearchOutcome<Vec<Vec<usize>>> {
    let cells = w * h;
    let mut grid: Vec<Option<usize>> = vec![None; cells];
    let mut forbidden_seed = vec![false; cells];
    for &c in no_seed_cells {
        forbidden_seed[c] = true;
    }
    if let Some((p, s)) = fixed {
        grid[p] = Some(s);
    }
    let consistent = |grid: &[Option<usize>], c: usize| -> bool {
        let t = match grid[c] {
            Some(t) => t,
            None => return true,
        };
        let (x, y) = (c % w, c / w);
        if x > 0 {
            if let Some(l) = grid[c - 1] {
                if !east_ok[l][t] {
                    return false;
                }
            }
        }
        if x + 1 < w {
            if let Some(r) = grid[c + 1] {
                if !east_ok[t][r] {
                    return false;
                }
            }
        }
        if y > 0 {
            if let Some(d) = grid[c - w] {
                if !north_ok[d][t] {
                    return false;
                }
            }
        }
        if y + 1 < h {
            if let Some(u) = grid[c + w] {
                if !north_ok[t][u] {
                    return false;
                }
            }
        }
        true
    };
    if let Some((p, _)) = fixed {
        if !consistent(&grid, p) {
            return SearchOutcome::None;
        }
    }
    let free: Vec<usize> = order.iter().cloned().filter(|&c| grid[c].is_none()).collect();
    let mut depth = 0usize;
    let mut choice = vec![0usize; free.len()];
    loop {
        if depth == free.len() {
            let rows: Vec<Vec<usize>> = (0..h)
                .map(|y| (0..w).map(|x| grid[y * w + x].unwrap()).collect())
                .collect();
            return SearchOutcome::Found(rows);
        }
        let cell = free[depth];
        let mut placed = false;
        while choice[depth] < ts.tiles.len() {
            let t = choice[depth];
            choice[depth] += 1;
            if forbidden_seed[cell] && ts.tiles[t].seed {
                continue;
            }
            *nodes += 1;
            if *nodes > budget {
                return SearchOutcome::Budget;
            }
            grid[cell] = Some(t);
            if consistent(&grid, cell) {
                placed = true;
                break;
            }
            grid[cell] = None;
        }
        if placed {
            depth += 1;
            if depth < free.len() {
                choice[depth] = 0;
            }
        } else {
            grid[cell] = None;
            if depth == 0 {
                return SearchOutcome::None;
            }
            depth -= 1;
            grid[free[depth]] = None;
        }
    }
}

/// Search for a w×h torus tiling (all adjacencies wrap). A `None` under an
/// unexhausted budget is an exhaustive refutation.
pub fn tile_torus(
    ts: &TileSet,
    w: usize,
    h: usize,
    budget: u64,
) -> Result<SearchOutcome<Vec<Vec<usize>>>> {
    let nn = tileset_to_nn(ts)?;
    crate::shift::torus_point_z2(&nn, "a", "b", w, h, budget)
}

// ---------------------------------------------------------------------------
// Turing machines.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dir {
    L,
    R,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TmRule {
    pub from_state: String,
    pub read: String,
    pub to_state: String,
    pub write: String,
    pub dir: Dir,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TuringMachine {
    pub states: Vec<String>,
    pub start: String,
    pub tape: Vec<String>,
    pub blank: String,
    pub rules: Vec<TmRule>,
}

impl TuringMachine {
    pub fn validate(&self) -> Result<()> {
        let states: BTreeSet<&String> = self.states.iter().collect();
        if states.len() != self.states.len() {
            return Err(Error::Input("duplicate machine states".into()));
        }
        if !states.contains(&self.start) {
            return Err(Error::Input("start state not among the states".into()));
        }
        let tape: BTreeSet<&String> = self.tape.iter().collect();
        if !tape.contains(&self.blank) {
            return Err(Error::Input("blank symbol not in the tape alphabet".into()));
        }
        let mut keys = BTreeSet::new();
        for r in &self.rules {
            if !states.contains(&r.from_state) || !states.contains(&r.to_state) {
                return Err(Error::Input(format!(
                    "rule references unknown state ({} -> {})",
                    r.from_state, r.to_state
                )));
            }
            if !tape.contains(&r.read) || !tape.contains(&r.write) {
                return Err(Error::Input("rule references unknown tape symbol".into()));
            }
            if !keys.insert((r.from_state.clone(), r.read.clone())) {
                return Err(Error::Input(format!(
                    "nondeterministic rules for ({}, {})",
                    r.from_state, r.read
                )));
            }
        }
        Ok(())
    }

    pub fn rule_for(&self, state: &str, read: &str) -> Option<&TmRule> {
        self.rules
            .iter()
            .find(|r| r.from_state == state && r.read == read)
    }

    /// States with no outgoing rule for at least... a state is halting when
    /// it has no outgoing rules at all.
    pub fn halting_states(&self) -> Vec<String> {
        self.states
            .iter()
            .filter(|q| self.rules.iter().all(|r| &r.from_state != *q))
            .cloned()
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(Error::from)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let tm: TuringMachine = serde_json::from_str(text)?;
        tm.validate()?;
        Ok(tm)
    }
}

/// One machine configuration: control state, head cell, and the non-blank
/// tape cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TmConfig {
    pub state: String,
    pub head: i64,
    pub tape: BTreeMap<i64, String>,
}

impl TmConfig {
    pub fn symbol_at(&self, cell: i64, blank: &str) -> String {
        self.tape
            .get(&cell)
            .cloned()
            .unwrap_or_else(|| blank.to_string())
    }
}

/// Run the machine from the start state on a blank tape, recording the
/// configuration after each step, up to `max_steps` transitions. Returns the
/// history (including the initial configuration) and whether it halted
/// within the horizon.
pub fn simulate(tm: &TuringMachine, max_steps: usize) -> (Vec<TmConfig>, bool) {
    let mut cfg = TmConfig {
        state: tm.start.clone(),
        head: 0,
        tape: BTreeMap::new(),
    };
    let mut history = vec![cfg.clone()];
    for _ in 0..max_steps {
        let read = cfg.symbol_at(cfg.head, &tm.blank);
        match tm.rule_for(&cfg.state, &read) {
            None => return (history, true),
            Some(r) => {
                if r.write == tm.blank {
                    cfg.tape.remove(&cfg.head);
                } else {
                    cfg.tape.insert(cfg.head, r.write.clone());
                }
                cfg.head += match r.dir {
                    Dir::L => -1,
                    Dir::R => 1,
                };
                cfg.state = r.to_state.clone();
                history.push(cfg.clone());
            }
        }
    }
    // One more probe: halted exactly at the horizon?
    let read = cfg.symbol_at(cfg.head, &tm.blank);
    let halted = tm.rule_for(&cfg.state, &read).is_none();
    (history, halted)
}

/// Number of transitions the machine executes before halting, if that
/// happens within `cap` steps.
pub fn halt_time(tm: &TuringMachine, cap: usize) -> Option<usize> {
    let (history, halted) = simulate(tm, cap);
    if halted && history.len() <= cap + 1 {
        Some(history.len() - 1)
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Machine-to-tile compilation.
// ---------------------------------------------------------------------------

fn sym_color(s: &str) -> String {
    format!("sym:{s}")
}
fn head_color(q: &str, s: &str) -> String {
    format!("head:{q}:{s}")
}
fn signal_right(q: &str) -> String {
    format!("R:{q}")
}
fn signal_left(q: &str) -> String {
    format!("L:{q}")
}

const NEUTRAL: &str = "-";
const FLOOR: &str = "floor";
const SEED_L: &str = "seedL";
const SEED_R: &str = "seedR";

/// Compile a Turing machine into a seeded Wang tile set.
///
/// Conventions (rows grow upward from the seed row):
///   - the north edges of row t encode the configuration after t steps:
///     color "sym:s" for a tape cell holding s, "head:q:s" at the head;
///   - the seed tile's south edge is a floor color no tile can sit under,
///     so a seeded window always has the seed in its bottom row, flanked by
///     floor fillers, and every row above simulates one step;
///   - movement is handed across vertical edges by one-cell signals.
///
/// Hence a seeded n×n window is tilable iff the machine runs at least n−1
/// steps without halting, and the symbol-copy tiles (all-neutral sides)
/// alone tile the plane.
pub fn compile_tm(tm: &TuringMachine) -> Result<TileSet> {
    tm.validate()?;
    let mut tiles = Vec::new();
    let mut push = |north: String, east: String, south: String, west: String, seed: bool| {
        let id = tiles.len();
        tiles.push(WangTile {
            id,
            north,
            east,
            south,
            west,
            seed,
        });
    };
    // 1. Copy tiles, one per tape symbol.
    for s in &tm.tape {
        push(
            sym_color(s),
            NEUTRAL.into(),
            sym_color(s),
            NEUTRAL.into(),
            false,
        );
    }
    // 2. The seed plants the head over a blank tape.
    push(
        head_color(&tm.start, &tm.blank),
        SEED_R.into(),
        FLOOR.into(),
        SEED_L.into(),
        true,
    );
    // 3. Floor fillers left and right of the seed.
    push(
        sym_color(&tm.blank),
        SEED_L.into(),
        FLOOR.into(),
        SEED_L.into(),
        false,
    );
    push(
        sym_color(&tm.blank),
        SEED_R.into(),
        FLOOR.into(),
        SEED_R.into(),
        false,
    );
    // 4. Action tiles, one per rule (rules in declaration order).
    for r in &tm.rules {
        match r.dir {
            Dir::R => push(
                sym_color(&r.write),
                signal_right(&r.to_state),
                head_color(&r.from_state, &r.read),
                NEUTRAL.into(),
                false,
            ),
            Dir::L => push(
                sym_color(&r.write),
                NEUTRAL.into(),
                head_color(&r.from_state, &r.read),
                signal_left(&r.to_state),
                false,
            ),
        }
    }
    // 5. Reception tiles for every state entered by a move, per tape symbol.
    let right_targets: BTreeSet<&String> = tm
        .rules
        .iter()
        .filter(|r| r.dir == Dir::R)
        .map(|r| &r.to_state)
        .collect();
    let left_targets: BTreeSet<&String> = tm
        .rules
        .iter()
        .filter(|r| r.dir == Dir::L)
        .map(|r| &r.to_state)
        .collect();
    for q in &right_targets {
        for u in &tm.tape {
            push(
                head_color(q, u),
                NEUTRAL.into(),
                sym_color(u),
                signal_right(q),
                false,
            );
        }
    }
    for q in &left_targets {
        for u in &tm.tape {
            push(
                head_color(q, u),
                signal_left(q),
                sym_color(u),
                NEUTRAL.into(),
                false,
            );
        }
    }
    TileSet::new(tiles, true)
}

/// Decode a tiling produced from `compile_tm` back into machine
/// configurations, bottom row first. Decoding starts at the (unique) seed
/// row and stops cleanly if the head leaves the window; any other anomaly
/// (no seed, two heads, unknown colors) is a consistency error.
pub fn decode_run(ts: &TileSet, tm: &TuringMachine, rows: &[Vec<usize>]) -> Result<Vec<TmConfig>> {
    let seed_rows: Vec<usize> = rows
        .iter()
        .enumerate()
        .filter(|(_, row)| row.iter().any(|&t| ts.tiles[t].seed))
        .map(|(y, _)| y)
        .collect();
    let y0 = match seed_rows.as_slice() {
        [y] => *y,
        [] => return Err(Error::Consistency("no seed row in the tiling".into())),
        _ => return Err(Error::Consistency("multiple seed rows".into())),
    };
    let mut out = Vec::new();
    for (t, row) in rows[y0..].iter().enumerate() {
        let mut head: Option<(i64, String, String)> = None;
        let mut tape = BTreeMap::new();
        for (x, &tile) in row.iter().enumerate() {
            let north = &ts.tiles[tile].north;
            if let Some(rest) = north.strip_prefix("head:") {
                let (q, s) = rest
                    .split_once(':')
                    .ok_or_else(|| Error::Consistency("malformed head color".into()))?;
                if head.is_some() {
                    return Err(Error::Consistency(format!(
                        "two heads in row {t} of the decoded run"
                    )));
                }
                head = Some((x as i64, q.to_string(), s.to_string()));
                if s != tm.blank {
                    tape.insert(x as i64, s.to_string());
                }
            } else if let Some(s) = north.strip_prefix("sym:") {
                if s != tm.blank {
                    tape.insert(x as i64, s.to_string());
                }
            } else {
                return Err(Error::Consistency(format!(
                    "row {t} carries a non-configuration color {north:?}"
                )));
            }
        }
        match head {
            Some((x, q, _)) => out.push(TmConfig {
                state: q,
                head: x,
                tape,
            }),
            None => break, // the head has left the window
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// The unseeded aperiodic set.
// ---------------------------------------------------------------------------

/// The unseeded aperiodic Wang tile set used as this workbench's fixture.
///
/// Construction (multiplier dynamics in the style of Kari and Culik): a row
/// of tiles reads an integer-sequence encoding of a real x on its north
/// edges (digit d_k = ⌊(k+1)x⌋ − ⌊kx⌋) and writes the encoding of 3x or x/2
/// on its south edges, carrying correction terms across vertical edges:
///
///   ×3 rows:  3·n + w = s + e   with n ∈ {0,1}, s ∈ {1,2}, carries {0,1,2}
///   ÷2 rows:  n + w = 2·s + e   with n ∈ {0,1,2}, s ∈ {0,1}, carries {0,1}
///
/// Vertical colors tag the row's multiplier, so rows never mix machines; ÷2
/// vertical colors also carry a "previous digit was zero" flag that forbids
/// two consecutive zero digits, which removes the all-zero fixed point.
///
/// On any w×h torus the carries cancel around each row, so row sums are
/// exact: x_{i+1} = 3·x_i or x_i/2, and around the vertical cycle
/// 3^a·x = 2^b·x with a + b = h ≥ 1. Since 3^a ≠ 2^b, the only solution is
/// x = 0, excluded by the zero-digit ban (÷2 rows) and by s ≥ 1 (×3 rows).
/// Hence no torus tiling exists at any size, while arbitrarily large squares
/// do: generate digits of a genuine orbit of x ↦ 3x on [1/3, 2/3],
/// x ↦ x/2 on (2/3, 2].
pub fn aperiodic_unseeded_tiles() -> TileSet {
    let d = |n: usize| n.to_string();
    let ca = |c: usize| format!("a{c}");
    let cb = |c: usize, z: bool| format!("b{c}{}", if z { "z" } else { "n" });
    let mut tiles = Vec::new();
    let mut push = |north: String, east: String, south: String, west: String| {
        let id = tiles.len();
        tiles.push(WangTile {
            id,
            north,
            east,
            south,
            west,
            seed: false,
        });
    };
    // ×3 tiles (n, s, w, e) with 3n + e = s + w: the carry on the vertical
    // edge left of column k is ⌊3kx⌋ − 3⌊kx⌋.
    for (n, s, w, e) in [
        (0, 1, 0, 1),
        (0, 1, 1, 2),
        (0, 2, 0, 2),
        (1, 1, 2, 0),
        (1, 2, 1, 0),
        (1, 2, 2, 1),
    ] {
        push(d(n), ca(e), d(s), ca(w));
    }
    // ÷2 tiles (n, s, w, e) with n + w = 2s + e; east flag records n = 0,
    // and n = 0 requires the west flag to be "previous digit nonzero".
    for (n, s, w, e) in [(0usize, 0usize, 1usize, 1usize), (0, 0, 0, 0)] {
        // n = 0: only west flag nz, east flag z.
        push(d(n), cb(e, true), d(s), cb(w, false));
    }
    for (n, s, w, e) in [(1usize, 0usize, 0usize, 1usize), (1, 1, 1, 0), (2, 1, 0, 0), (2, 1, 1, 1)] {
        for west_zero in [false, true] {
            push(d(n), cb(e, false), d(s), cb(w, west_zero));
        }
    }
    TileSet::new(tiles, false).expect("fixed tile set is well-formed")
}

/// An explicit n×n valid window of the unseeded set, generated from the
/// orbit of x₀ = (√5 − 1)/2 under the multiplier dynamics (rows bottom-up:
/// the top row encodes x₀, each row below its image). A constructive
/// witness that arbitrarily large squares exist.
pub fn aperiodic_witness(n: usize) -> Vec<Vec<usize>> {
    let ts = aperiodic_unseeded_tiles();
    let x0 = (5f64.sqrt() - 1.0) / 2.0;
    let mut values = vec![x0];
    for _ in 1..n {
        let x = *values.last().unwrap();
        values.push(if x <= 2.0 / 3.0 { 3.0 * x } else { x / 2.0 });
    }
    // Row for value x (input on north): digits n_k, carries per machine.
    let digits = |x: f64, k: i64| -> usize {
        (((k + 1) as f64 * x).floor() - (k as f64 * x).floor()) as usize
    };
    let mut rows_top_down: Vec<Vec<usize>> = Vec::new();
    for &x in &values {
        let times3 = x <= 2.0 / 3.0;
        let mut row = Vec::new();
        for k in 0..n as i64 {
            let nk = digits(x, k);
            let (tile_n, tile_s, w, e);
            if times3 {
                let c = |k: i64| ((3.0 * (k as f64 * x).floor()) - (3.0 * k as f64 * x).floor()).round() as i64;
                tile_n = nk;
                tile_s = digits(3.0 * x, k);
                w = format!("a{}", -c(k));
                e = format!("a{}", -c(k + 1));
            } else {
                let c = |k: i64| ((k as f64 * x).floor() - 2.0 * (k as f64 * x / 2.0).floor()).round() as i64;
                tile_n = nk;
                tile_s = digits(x / 2.0, k);
                let prev_zero = k > 0 && digits(x, k - 1) == 0;
                let this_zero = nk == 0;
                w = format!("b{}{}", c(k), if prev_zero { "z" } else { "n" });
                e = format!("b{}{}", c(k + 1), if this_zero { "z" } else { "n" });
            }
            let north = tile_n.to_string();
            let south = tile_s.to_string();
            let tile = ts
                .tiles
                .iter()
                .find(|t| t.north == north && t.south == south && t.west == w && t.east == e)
                .unwrap_or_else(|| panic!("no tile for n={north} s={south} w={w} e={e}"))
                .id;
            row.push(tile);
        }
        rows_top_down.push(row);
    }
    rows_top_down.reverse();
    rows_top_down
}

// ---------------------------------------------------------------------------
// The seeded line shift.
// ---------------------------------------------------------------------------

/// Tile indices of the seeded line shift.
pub const LINE_C: usize = 0;
pub const LINE_L: usize = 1;
pub const LINE_R: usize = 2;

/// The three-tile line shift with successor pairs C-R, L-C, R-R, L-L and a
/// mandatory seed C for seeded checks.
pub struct SeededLineSft {
    pub nn: NnSft,
    pub seed_tile: usize,
    pub names: Vec<&'static str>,
}

pub fn seeded_line_sft() -> SeededLineSft {
    let nn = NnSft::new(
        3,
        vec!["a".into(), "A".into()],
        vec![1, 0],
        &[(0, vec![(LINE_C, LINE_R), (LINE_L, LINE_C), (LINE_R, LINE_R), (LINE_L, LINE_L)])],
    )
    .expect("fixed pair list is well-formed");
    SeededLineSft {
        nn,
        seed_tile: LINE_C,
        names: vec!["C", "L", "R"],
    }
}

// ---------------------------------------------------------------------------
// Bundled machines.
// ---------------------------------------------------------------------------

fn rule(from: &str, read: &str, to: &str, write: &str, dir: Dir) -> TmRule {
    TmRule {
        from_state: from.into(),
        read: read.into(),
        to_state: to.into(),
        write: write.into(),
        dir,
    }
}

/// The five bundled machines: an immediate halter, a right-mover, a two-cell
/// zigzag, a three-step halter, and a left-drifting marker writer.
pub fn bundled_machines() -> Vec<(&'static str, TuringMachine)> {
    let halt0 = TuringMachine {
        states: vec!["q0".into()],
        start: "q0".into(),
        tape: vec!["_".into()],
        blank: "_".into(),
        rules: vec![],
    };
    let right_mover = TuringMachine {
        states: vec!["q0".into()],
        start: "q0".into(),
        tape: vec!["_".into()],
        blank: "_".into(),
        rules: vec![rule("q0", "_", "q0", "_", Dir::R)],
    };
    let zigzag = TuringMachine {
        states: vec!["q0".into(), "q1".into()],
        start: "q0".into(),
        tape: vec!["_".into(), "x".into()],
        blank: "_".into(),
        rules: vec![
            rule("q0", "_", "q1", "x", Dir::R),
            rule("q0", "x", "q1", "x", Dir::R),
            rule("q1", "_", "q0", "_", Dir::L),
            rule("q1", "x", "q0", "x", Dir::L),
        ],
    };
    let halt3 = TuringMachine {
        states: vec!["q0".into(), "q1".into(), "q2".into(), "qh".into()],
        start: "q0".into(),
        tape: vec!["_".into(), "1".into()],
        blank: "_".into(),
        rules: vec![
            rule("q0", "_", "q1", "1", Dir::R),
            rule("q1", "_", "q2", "1", Dir::R),
            rule("q2", "_", "qh", "1", Dir::R),
        ],
    };
    let left_drift = TuringMachine {
        states: vec!["q0".into(), "q1".into(), "q2".into(), "q3".into()],
        start: "q0".into(),
        tape: vec!["_".into(), "A".into(), "B".into(), "C".into()],
        blank: "_".into(),
        rules: vec![
            rule("q0", "_", "q1", "A", Dir::R),
            rule("q1", "_", "q2", "B", Dir::L),
            rule("q2", "A", "q3", "A", Dir::L),
            rule("q3", "_", "q3", "C", Dir::L),
        ],
    };
    vec![
        ("halt0", halt0),
        ("right_mover", right_mover),
        ("zigzag", zigzag),
        ("halt3", halt3),
        ("left_drift", left_drift),
    ]
}
