//! Core machinery for shifts of finite type: chart atlases over group balls,
//! nearest-neighbor recoding, deterministic pattern-extension search,
//! periodicity detection on the line and on the grid, and window stabilizers.

use crate::ball::{ball, CayleyBall};
use crate::error::{Error, Result};
use crate::presentation::GroupPresentation;
use crate::rewrite::RewritingSystem;
use crate::word::{shortlex_cmp, Word};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// Default node budget for backtracking searches.
pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

/// Finite ordered list of distinct opaque symbols.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    pub symbols: Vec<String>,
}

impl Alphabet {
    pub fn new(symbols: Vec<String>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::Input("alphabet must be non-empty".into()));
        }
        let mut seen = BTreeSet::new();
        for s in &symbols {
            if !seen.insert(s.clone()) {
                return Err(Error::Input(format!("duplicate symbol {s:?}")));
            }
        }
        Ok(Alphabet { symbols })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == symbol)
    }
}

/// A shift of finite type presented as an atlas of charts: each chart is a
/// total labeling of the radius-R ball (entries parallel to the ball's
/// shortlex-sorted vertex list). An empty atlas denotes the empty shift.
#[derive(Debug, Clone)]
pub struct SftSpec {
    pub alphabet: Alphabet,
    pub radius: u32,
    /// Each chart maps the template ball's vertex list to symbol indices.
    pub charts: Vec<Vec<usize>>,
}

impl SftSpec {
    pub fn new(alphabet: Alphabet, radius: u32, charts: Vec<Vec<usize>>) -> Result<Self> {
        if radius == 0 {
            return Err(Error::Input("chart radius must be at least 1".into()));
        }
        for (i, c) in charts.iter().enumerate() {
            if let Some(&bad) = c.iter().find(|&&s| s >= alphabet.len()) {
                return Err(Error::Input(format!(
                    "chart {i} uses symbol index {bad} outside the alphabet"
                )));
            }
        }
        Ok(SftSpec {
            alphabet,
            radius,
            charts,
        })
    }

    /// The template ball all charts are read against.
    pub fn template(&self, rs: &RewritingSystem) -> Result<CayleyBall> {
        ball(rs, self.radius)
    }
}

/// A finite labeled window: normal-form addresses with one symbol each.
/// Addresses are kept shortlex-sorted for canonical serialization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Patch {
    pub domain: Vec<Word>,
    pub labels: Vec<usize>,
}

impl Patch {
    pub fn new(mut cells: Vec<(Word, usize)>) -> Result<Self> {
        cells.sort_by(|a, b| shortlex_cmp(&a.0, &b.0));
        for w in cells.windows(2) {
            if w[0].0 == w[1].0 {
                if w[0].1 != w[1].1 {
                    return Err(Error::Input("conflicting labels at one address".into()));
                }
            }
        }
        cells.dedup_by(|a, b| a.0 == b.0);
        Ok(Patch {
            domain: cells.iter().map(|(w, _)| w.clone()).collect(),
            labels: cells.iter().map(|&(_, l)| l).collect(),
        })
    }

    pub fn index_map(&self) -> HashMap<Word, usize> {
        self.domain
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect()
    }

    pub fn label_at(&self, w: &Word) -> Option<usize> {
        self.domain
            .binary_search_by(|d| shortlex_cmp(d, w))
            .ok()
            .map(|i| self.labels[i])
    }
}

/// Nearest-neighbor shift of finite type: tiles with per-generator allowed
/// ordered pairs. The pair set for an inverse generator is always the
/// transpose of the pair set for the generator itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NnSft {
    pub tiles: usize,
    pub generators: Vec<String>,
    /// Involution on generator indices (generator ↔ its inverse).
    pub inverses: Vec<usize>,
    /// Per-generator set of allowed (tile-at-g, tile-at-g·a) pairs.
    pub allowed: Vec<BTreeSet<(usize, usize)>>,
}

impl NnSft {
    /// Build from pair sets given for a subset of generators; pair sets for
    /// the inverse generators are filled in by transposition (and validated
    /// for consistency when both directions are supplied).
    pub fn new(
        tiles: usize,
        generators: Vec<String>,
        inverses: Vec<usize>,
        given: &[(usize, Vec<(usize, usize)>)],
    ) -> Result<Self> {
        let n = generators.len();
        if inverses.len() != n {
            return Err(Error::Input("inverse table length mismatch".into()));
        }
        for (g, inv) in inverses.iter().enumerate() {
            if *inv >= n || inverses[*inv] != g {
                return Err(Error::Input("inverse table is not an involution".into()));
            }
        }
        let mut allowed: Vec<Option<BTreeSet<(usize, usize)>>> = vec![None; n];
        for (g, pairs) in given {
            if *g >= n {
                return Err(Error::Input("generator index out of range".into()));
            }
            let set: BTreeSet<(usize, usize)> = pairs.iter().cloned().collect();
            for &(i, j) in &set {
                if i >= tiles || j >= tiles {
                    return Err(Error::Input("tile index out of range".into()));
                }
            }
            allowed[*g] = Some(set);
        }
        // Transpose closure.
        for g in 0..n {
            if allowed[g].is_none() {
                if let Some(fwd) = allowed[inverses[g]].clone() {
                    allowed[g] = Some(fwd.iter().map(|&(i, j)| (j, i)).collect());
                }
            }
        }
        let mut out = Vec::with_capacity(n);
        for g in 0..n {
            let set = allowed[g]
                .clone()
                .ok_or_else(|| Error::Input(format!("no pairs given for generator {g}")))?;
            out.push(set);
        }
        for g in 0..n {
            let transpose: BTreeSet<(usize, usize)> =
                out[g].iter().map(|&(i, j)| (j, i)).collect();
            if out[inverses[g]] != transpose {
                return Err(Error::Consistency(format!(
                    "pairs for generator {} are not the transpose of its inverse",
                    generators[g]
                )));
            }
        }
        Ok(NnSft {
            tiles,
            generators,
            inverses,
            allowed: out,
        })
    }

    pub fn generator_index(&self, name: &str) -> Option<usize> {
        self.generators.iter().position(|g| g == name)
    }

    pub fn is_allowed(&self, gen: usize, i: usize, j: usize) -> bool {
        self.allowed[gen].contains(&(i, j))
    }
}

// ---------------------------------------------------------------------------
// Chart checking and recoding.
// ---------------------------------------------------------------------------

/// Check a window against the atlas: around every address g of the domain,
/// the labeling restricted to (g-ball ∩ domain) must coincide with some chart
/// on that overlap. Edge labels fix the identification — charts are only
/// translated, never rotated. Checking overlaps (rather than only complete
/// interior balls) makes the verdict agree with nearest-neighbor recoding on
/// finite windows, boundary cells included.
pub fn check_patch(rs: &RewritingSystem, sft: &SftSpec, patch: &Patch) -> Result<bool> {
    if let Some(&bad) = patch.labels.iter().find(|&&l| l >= sft.alphabet.len()) {
        return Err(Error::Input(format!(
            "patch label index {bad} outside the alphabet"
        )));
    }
    if sft.charts.is_empty() {
        return Ok(patch.domain.is_empty());
    }
    let template = sft.template(rs)?;
    let red = rs.reducer();
    for (gi, g) in patch.domain.iter().enumerate() {
        // Overlap: template addresses v whose translate g·v lies in the domain.
        let mut overlap: Vec<(usize, usize)> = Vec::new(); // (template idx, patch idx)
        for (vi, v) in template.vertices.iter().enumerate() {
            let mut w = g.clone();
            w.extend_from_slice(v);
            let w = red.reduce(&w);
            if let Some(pi) = patch
                .domain
                .binary_search_by(|d| shortlex_cmp(d, &w))
                .ok()
            {
                overlap.push((vi, pi));
            }
        }
        debug_assert!(overlap.iter().any(|&(_, pi)| pi == gi));
        let matched = sft
            .charts
            .iter()
            .any(|c| overlap.iter().all(|&(vi, pi)| c[vi] == patch.labels[pi]));
        if !matched {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Recode a chart atlas into a nearest-neighbor shift: tile i is chart i, and
/// (i, j) is allowed across generator a exactly when chart i centered at g
/// and chart j centered at g·a agree on the intersection of their balls.
pub fn charts_to_nn(rs: &RewritingSystem, sft: &SftSpec) -> Result<NnSft> {
    if sft.charts.is_empty() {
        return Err(Error::Input("cannot recode an empty atlas".into()));
    }
    let template = sft.template(rs)?;
    let red = rs.reducer();
    let pres = &rs.presentation;
    let n_gens = pres.generators.len();
    let addr_index: HashMap<Word, usize> = template
        .vertices
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), i))
        .collect();

    let mut given = Vec::new();
    for a in 0..n_gens {
        let inv_a = pres.inverses[a];
        // Overlap of B_R(e) and B_R(a), expressed as template-address pairs:
        // address v seen from e corresponds to address a⁻¹·v seen from a.
        let mut overlap: Vec<(usize, usize)> = Vec::new();
        for (vi, v) in template.vertices.iter().enumerate() {
            let mut w = vec![inv_a as u8];
            w.extend_from_slice(v);
            let w = red.reduce(&w);
            if let Some(&vj) = addr_index.get(&w) {
                overlap.push((vi, vj));
            }
        }
        let mut pairs = Vec::new();
        for (i, ci) in sft.charts.iter().enumerate() {
            for (j, cj) in sft.charts.iter().enumerate() {
                if overlap.iter().all(|&(vi, vj)| ci[vi] == cj[vj]) {
                    pairs.push((i, j));
                }
            }
        }
        given.push((a, pairs));
    }
    NnSft::new(
        sft.charts.len(),
        pres.generators.clone(),
        pres.inverses.iter().map(|&i| i as usize).collect(),
        &given,
    )
}

// ---------------------------------------------------------------------------
// Deterministic pattern extension.
// ---------------------------------------------------------------------------

/// Deterministic variable order for a window: breadth-first distance from the
/// window's most central address (minimum eccentricity in the window's own
/// adjacency graph, ties broken shortlex), ties again broken shortlex.
fn window_order(rs: &RewritingSystem, domain: &[Word]) -> Result<Vec<usize>> {
    let n = domain.len();
    let red = rs.reducer();
    let index: HashMap<Word, usize> = domain
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), i))
        .collect();
    // Window adjacency via generator edges.
    let n_gens = rs.presentation.generators.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, w) in domain.iter().enumerate() {
        for a in 0..n_gens {
            let mut x = w.clone();
            x.push(a as u8);
            let x = red.reduce(&x);
            if let Some(&j) = index.get(&x) {
                if j != i {
                    adj[i].push(j);
                }
            }
        }
    }
    let bfs = |start: usize| -> Vec<u32> {
        let mut dist = vec![u32::MAX; n];
        dist[start] = 0;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if dist[v] == u32::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    };
    // Center: minimum eccentricity (unreachable counts as far), shortlex ties.
    let mut center = 0usize;
    let mut best_ecc = u64::MAX;
    for s in 0..n {
        let d = bfs(s);
        let ecc: u64 = d
            .iter()
            .map(|&x| if x == u32::MAX { 1 << 40 } else { x as u64 })
            .max()
            .unwrap_or(0);
        if ecc < best_ecc {
            best_ecc = ecc;
            center = s;
        }
    }
    let d = bfs(center);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (d[i], i)); // domain is shortlex-sorted, so index order = shortlex
    Ok(order)
}

/// Outcome of a budgeted search: found, exhausted, or out of budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome<T> {
    Found(T),
    None,
    Budget,
}

impl<T> SearchOutcome<T> {
    pub fn found(self) -> Option<T> {
        match self {
            SearchOutcome::Found(t) => Some(t),
            _ => None,
        }
    }
}

/// Extend a partial labeling of `domain` to a total labeling accepted by
/// `check_patch`, by deterministic backtracking (variable order: distance
/// from the window center then shortlex; value order: alphabet order).
pub fn extend_patch_charts(
    rs: &RewritingSystem,
    sft: &SftSpec,
    domain: &[Word],
    partial: &Patch,
    budget: u64,
) -> Result<SearchOutcome<Patch>> {
    let red = rs.reducer();
    let mut dom: Vec<Word> = domain.iter().map(|w| red.reduce(w)).collect();
    dom.sort_by(|a, b| shortlex_cmp(a, b));
    dom.dedup();
    let n = dom.len();
    let index: HashMap<Word, usize> = dom
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), i))
        .collect();
    if sft.charts.is_empty() {
        return Ok(if n == 0 {
            SearchOutcome::Found(Patch {
                domain: dom,
                labels: vec![],
            })
        } else {
            SearchOutcome::None
        });
    }
    let template = sft.template(rs)?;
    // overlaps[g] = list of (template idx, domain idx) pairs for center g.
    let mut overlaps: Vec<Vec<(usize, usize)>> = Vec::with_capacity(n);
    // touching[v] = centers whose overlap involves domain cell v.
    let mut touching: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (gi, g) in dom.iter().enumerate() {
        let mut ov = Vec::new();
        for (vi, v) in template.vertices.iter().enumerate() {
            let mut w = g.clone();
            w.extend_from_slice(v);
            let w = red.reduce(&w);
            if let Some(&pi) = index.get(&w) {
                ov.push((vi, pi));
                touching[pi].push(gi);
            }
        }
        overlaps.push(ov);
    }
    for t in &mut touching {
        t.sort_unstable();
        t.dedup();
    }

    let mut assign: Vec<Option<usize>> = vec![None; n];
    for (w, &l) in partial.domain.iter().zip(&partial.labels) {
        let w = red.reduce(w);
        match index.get(&w) {
            Some(&i) => assign[i] = Some(l),
            None => {
                return Err(Error::Input(
                    "partial labeling mentions an address outside the domain".into(),
                ))
            }
        }
    }
    if assign.iter().flatten().any(|&l| l >= sft.alphabet.len()) {
        return Err(Error::Input("partial label outside the alphabet".into()));
    }

    // A center is viable iff some chart agrees with every assigned overlap
    // cell; at full assignment this is exactly the check_patch condition.
    let viable = |assign: &[Option<usize>], gi: usize| -> bool {
        sft.charts.iter().any(|c| {
            overlaps[gi]
                .iter()
                .all(|&(vi, pi)| assign[pi].map_or(true, |l| c[vi] == l))
        })
    };
    if (0..n).any(|gi| !viable(&assign, gi)) {
        return Ok(SearchOutcome::None);
    }

    let order = window_order(rs, &dom)?;
    let free: Vec<usize> = order.into_iter().filter(|&i| assign[i].is_none()).collect();
    let mut nodes: u64 = 0;
    // Iterative backtracking over `free` in order.
    let mut depth = 0usize;
    let mut choice: Vec<usize> = vec![0; free.len()];
    loop {
        if depth == free.len() {
            let labels: Vec<usize> = assign.iter().map(|o| o.unwrap()).collect();
            return Ok(SearchOutcome::Found(Patch {
                domain: dom,
                labels,
            }));
        }
        let cell = free[depth];
        let mut placed = false;
        while choice[depth] < sft.alphabet.len() {
            let val = choice[depth];
            choice[depth] += 1;
            nodes += 1;
            if nodes > budget {
                return Ok(SearchOutcome::Budget);
            }
            assign[cell] = Some(val);
            if touching[cell].iter().all(|&gi| viable(&assign, gi)) {
                placed = true;
                break;
            }
            assign[cell] = None;
        }
        if placed {
            depth += 1;
            if depth < free.len() {
                choice[depth] = 0;
            }
        } else {
            assign[cell] = None;
            if depth == 0 {
                return Ok(SearchOutcome::None);
            }
            depth -= 1;
            assign[free[depth]] = None;
        }
    }
}

/// Extend a partial tile assignment on a group window to a full one
/// respecting nearest-neighbor pairs on every generator edge inside the
/// window. Same deterministic order and budget semantics as the chart search.
pub fn extend_patch_nn(
    rs: &RewritingSystem,
    nn: &NnSft,
    domain: &[Word],
    partial: &Patch,
    budget: u64,
) -> Result<SearchOutcome<Patch>> {
    let red = rs.reducer();
    let pres = &rs.presentation;
    if nn.generators != pres.generators {
        return Err(Error::Input(
            "nearest-neighbor shift generators do not match the group".into(),
        ));
    }
    let mut dom: Vec<Word> = domain.iter().map(|w| red.reduce(w)).collect();
    dom.sort_by(|a, b| shortlex_cmp(a, b));
    dom.dedup();
    let n = dom.len();
    let index: HashMap<Word, usize> = dom
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), i))
        .collect();
    // Directed window edges (i, gen, j).
    let mut edges_at: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n]; // cell → (gen, other)
    for (i, w) in dom.iter().enumerate() {
        for a in 0..pres.generators.len() {
            let mut x = w.clone();
            x.push(a as u8);
            let x = red.reduce(&x);
            if let Some(&j) = index.get(&x) {
                edges_at[i].push((a, j));
            }
        }
    }
    let mut assign: Vec<Option<usize>> = vec![None; n];
    for (w, &l) in partial.domain.iter().zip(&partial.labels) {
        let w = red.reduce(w);
        match index.get(&w) {
            Some(&i) => {
                if l >= nn.tiles {
                    return Err(Error::Input("partial tile outside the tile set".into()));
                }
                assign[i] = Some(l)
            }
            None => {
                return Err(Error::Input(
                    "partial labeling mentions an address outside the domain".into(),
                ))
            }
        }
    }
    let consistent = |assign: &[Option<usize>], i: usize| -> bool {
        let ti = match assign[i] {
            Some(t) => t,
            None => return true,
        };
        edges_at[i].iter().all(|&(a, j)| match assign[j] {
            Some(tj) => nn.is_allowed(a, ti, tj),
            None => true,
        })
    };
    if (0..n).any(|i| !consistent(&assign, i)) {
        return Ok(SearchOutcome::None);
    }
    let order = window_order(rs, &dom)?;
    let free: Vec<usize> = order.into_iter().filter(|&i| assign[i].is_none()).collect();
    let mut nodes: u64 = 0;
    let mut depth = 0usize;
    let mut choice: Vec<usize> = vec![0; free.len()];
    loop {
        if depth == free.len() {
            let labels: Vec<usize> = assign.iter().map(|o| o.unwrap()).collect();
            return Ok(SearchOutcome::Found(Patch {
                domain: dom,
                labels,
            }));
        }
        let cell = free[depth];
        let mut placed = false;
        while choice[depth] < nn.tiles {
            let val = choice[depth];
            choice[depth] += 1;
            nodes += 1;
            if nodes > budget {
                return Ok(SearchOutcome::Budget);
            }
            assign[cell] = Some(val);
            if consistent(&assign, cell) {
                placed = true;
                break;
            }
            assign[cell] = None;
        }
        if placed {
            depth += 1;
            if depth < free.len() {
                choice[depth] = 0;
            }
        } else {
            assign[cell] = None;
            if depth == 0 {
                return Ok(SearchOutcome::None);
            }
            depth -= 1;
            assign[free[depth]] = None;
        }
    }
}

// ---------------------------------------------------------------------------
// Periodicity on the line and on the grid.
// ---------------------------------------------------------------------------

/// Find a periodic bi-infinite configuration of a nearest-neighbor shift on
/// the line: a cycle in the tile digraph whose edges are the allowed pairs of
/// the successor generator (generator index 0). Returns the tile word of one
/// period (length ≤ tile count), or None when the shift is empty. The search
/// is deterministic: depth-first from the smallest tile, smallest successor
/// first; the first back edge closes the cycle.
pub fn z_periodic_point(nn: &NnSft) -> Option<Vec<usize>> {
    let succ: Vec<Vec<usize>> = (0..nn.tiles)
        .map(|i| {
            nn.allowed[0]
                .iter()
                .filter(|&&(x, _)| x == i)
                .map(|&(_, y)| y)
                .collect()
        })
        .collect();
    let mut color = vec![0u8; nn.tiles];
    for start in 0..nn.tiles {
        if color[start] != 0 {
            continue;
        }
        // stack of (tile, next-successor-position)
        let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
        color[start] = 1;
        while let Some(&mut (u, ref mut j)) = stack.last_mut() {
            let mut pushed = false;
            while *j < succ[u].len() {
                let v = succ[u][*j];
                *j += 1;
                match color[v] {
                    0 => {
                        color[v] = 1;
                        stack.push((v, 0));
                        pushed = true;
                        break;
                    }
                    1 => {
                        // Cycle: the stack suffix from v to u.
                        let pos = stack.iter().position(|&(t, _)| t == v).unwrap();
                        return Some(stack[pos..].iter().map(|&(t, _)| t).collect());
                    }
                    _ => {}
                }
            }
            if !pushed {
                color[u] = 2;
                stack.pop();
            }
        }
    }
    None
}

/// Verify a period word against the line shift: every consecutive pair and
/// the wrap-around pair must be allowed for the successor generator.
pub fn verify_z_period(nn: &NnSft, word: &[usize]) -> bool {
    if word.is_empty() {
        return false;
    }
    (0..word.len()).all(|i| nn.is_allowed(0, word[i], word[(i + 1) % word.len()]))
}

/// Exhaustively enumerate all tile rows of a given length satisfying the
/// successor-generator adjacency (no wrap). Test oracle for emptiness.
pub fn enumerate_line_rows(nn: &NnSft, len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut row: Vec<usize> = Vec::new();
    fn rec(nn: &NnSft, len: usize, row: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if row.len() == len {
            out.push(row.clone());
            return;
        }
        for t in 0..nn.tiles {
            if row
                .last()
                .map_or(true, |&p| nn.is_allowed(0, p, t))
            {
                row.push(t);
                rec(nn, len, row, out);
                row.pop();
            }
        }
    }
    rec(nn, len, &mut row, &mut out);
    out
}

/// Search for a w×h torus tiling of a grid nearest-neighbor shift: cell
/// (x, y) constrains (x+1 mod w, y) through `east` and (x, y+1 mod h)
/// through `north`. Deterministic row-major backtracking; a `None` result
/// under an unexhausted budget is an exhaustive refutation.
pub fn torus_point_z2(
    nn: &NnSft,
    east: &str,
    north: &str,
    w: usize,
    h: usize,
    budget: u64,
) -> Result<SearchOutcome<Vec<Vec<usize>>>> {
    if w == 0 || h == 0 {
        return Err(Error::Input("torus dimensions must be at least 1".into()));
    }
    let ge = nn
        .generator_index(east)
        .ok_or_else(|| Error::Input(format!("unknown generator {east:?}")))?;
    let gn = nn
        .generator_index(north)
        .ok_or_else(|| Error::Input(format!("unknown generator {north:?}")))?;
    let east_ok: Vec<Vec<bool>> = lookup(nn, ge);
    let north_ok: Vec<Vec<bool>> = lookup(nn, gn);
    let cells = w * h;
    let mut grid: Vec<Option<usize>> = vec![None; cells];
    let at = |x: usize, y: usize| y * w + x;
    let mut nodes: u64 = 0;
    let mut depth = 0usize;
    let mut choice = vec![0usize; cells];
    loop {
        if depth == cells {
            let rows: Vec<Vec<usize>> = (0..h)
                .map(|y| (0..w).map(|x| grid[at(x, y)].unwrap()).collect())
                .collect();
            return Ok(SearchOutcome::Found(rows));
        }
        let (x, y) = (depth % w, depth / w);
        let mut placed = false;
        while choice[depth] < nn.tiles {
            let t = choice[depth];
            choice[depth] += 1;
            nodes += 1;
            if nodes > budget {
                return Ok(SearchOutcome::Budget);
            }
            // Constraints against already-placed neighbors (row-major order):
            // left, up, and the wrap edges that close a row or column.
            let ok = (x == 0 || east_ok[grid[at(x - 1, y)].unwrap()][t])
                && (y == 0 || north_ok[grid[at(x, y - 1)].unwrap()][t])
                && (x + 1 < w || w == 1 && east_ok[t][t] || w > 1 && east_ok[t][grid[at(0, y)].unwrap()])
                && (y + 1 < h || h == 1 && north_ok[t][t] || h > 1 && north_ok[t][grid[at(x, 0)].unwrap()]);
            if ok {
                grid[at(x, y)] = Some(t);
                placed = true;
                break;
            }
        }
        if placed {
            depth += 1;
            if depth < cells {
                choice[depth] = 0;
            }
        } else {
            grid[at(x, y)] = None;
            if depth == 0 {
                return Ok(SearchOutcome::None);
            }
            depth -= 1;
            let (px, py) = (depth % w, depth / w);
            grid[at(px, py)] = None;
        }
    }
}

fn lookup(nn: &NnSft, gen: usize) -> Vec<Vec<bool>> {
    let mut t = vec![vec![false; nn.tiles]; nn.tiles];
    for &(i, j) in &nn.allowed[gen] {
        t[i][j] = true;
    }
    t
}

/// Verify every adjacency (wrapping) of a torus tiling.
pub fn verify_torus(nn: &NnSft, east: &str, north: &str, rows: &[Vec<usize>]) -> bool {
    let ge = match nn.generator_index(east) {
        Some(g) => g,
        None => return false,
    };
    let gn = match nn.generator_index(north) {
        Some(g) => g,
        None => return false,
    };
    let h = rows.len();
    if h == 0 || rows.iter().any(|r| r.len() != rows[0].len()) {
        return false;
    }
    let w = rows[0].len();
    for y in 0..h {
        for x in 0..w {
            if !nn.is_allowed(ge, rows[y][x], rows[y][(x + 1) % w]) {
                return false;
            }
            if !nn.is_allowed(gn, rows[y][x], rows[(y + 1) % h][x]) {
                return false;
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Window stabilizers.
// ---------------------------------------------------------------------------

/// The moves whose translation action preserves the labeling wherever both
/// the cell and its translate lie in the window. A move whose overlap with
/// the window is empty is rejected (margin too small).
pub fn window_stabilizer(
    rs: &RewritingSystem,
    patch: &Patch,
    moves: &[Word],
) -> Result<Vec<Word>> {
    let red = rs.reducer();
    let mut preserved = Vec::new();
    for t in moves {
        let mut inner = 0usize;
        let mut ok = true;
        for (x, &lx) in patch.domain.iter().zip(&patch.labels) {
            let mut tx = t.clone();
            tx.extend_from_slice(x);
            let tx = red.reduce(&tx);
            if let Some(l_tx) = patch.label_at(&tx) {
                inner += 1;
                if l_tx != lx {
                    ok = false;
                    break;
                }
            }
        }
        if inner == 0 {
            return Err(Error::Input(
                "margin too small: the move has no overlap with the window".into(),
            ));
        }
        if ok {
            preserved.push(t.clone());
        }
    }
    Ok(preserved)
}

// ---------------------------------------------------------------------------
// Serialization (canonical JSON shapes).
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SftFile {
    alphabet: Vec<String>,
    radius: u32,
    charts: Vec<BTreeMap<String, String>>,
}

pub fn sft_to_json(rs: &RewritingSystem, sft: &SftSpec) -> Result<String> {
    let template = sft.template(rs)?;
    let pres = &rs.presentation;
    let charts = sft
        .charts
        .iter()
        .map(|c| {
            template
                .vertices
                .iter()
                .zip(c)
                .map(|(v, &l)| {
                    (
                        pres.word_to_string(v),
                        sft.alphabet.symbols[l].clone(),
                    )
                })
                .collect()
        })
        .collect();
    serde_json::to_string_pretty(&SftFile {
        alphabet: sft.alphabet.symbols.clone(),
        radius: sft.radius,
        charts,
    })
    .map_err(Error::from)
}

pub fn sft_from_json(rs: &RewritingSystem, text: &str) -> Result<SftSpec> {
    let file: SftFile = serde_json::from_str(text)?;
    let alphabet = Alphabet::new(file.alphabet)?;
    let sft_probe = SftSpec::new(alphabet.clone(), file.radius, vec![])?;
    let template = sft_probe.template(rs)?;
    let pres = &rs.presentation;
    let mut charts = Vec::new();
    for (ci, chart) in file.charts.iter().enumerate() {
        let mut labels = vec![usize::MAX; template.vertices.len()];
        for (addr, sym) in chart {
            let w = pres.parse_word(addr)?;
            let idx = template
                .vertices
                .binary_search_by(|v| shortlex_cmp(v, &w))
                .map_err(|_| {
                    Error::Input(format!("chart {ci}: address {addr:?} outside the ball"))
                })?;
            labels[idx] = alphabet
                .index_of(sym)
                .ok_or_else(|| Error::Input(format!("chart {ci}: unknown symbol {sym:?}")))?;
        }
        if labels.iter().any(|&l| l == usize::MAX) {
            return Err(Error::Input(format!(
                "chart {ci} does not cover the whole radius-{} ball",
                file.radius
            )));
        }
        charts.push(labels);
    }
    SftSpec::new(alphabet, file.radius, charts)
}

#[derive(Serialize, Deserialize)]
struct PatchFile {
    domain: Vec<String>,
    labels: Vec<String>,
}

pub fn patch_to_json(
    pres: &GroupPresentation,
    alphabet: &Alphabet,
    patch: &Patch,
) -> Result<String> {
    let file = PatchFile {
        domain: patch.domain.iter().map(|w| pres.word_to_string(w)).collect(),
        labels: patch
            .labels
            .iter()
            .map(|&l| {
                alphabet
                    .symbols
                    .get(l)
                    .cloned()
                    .ok_or_else(|| Error::Input("label outside the alphabet".into()))
            })
            .collect::<Result<_>>()?,
    };
    serde_json::to_string_pretty(&file).map_err(Error::from)
}

pub fn patch_from_json(
    pres: &GroupPresentation,
    alphabet: &Alphabet,
    text: &str,
) -> Result<Patch> {
    let file: PatchFile = serde_json::from_str(text)?;
    if file.domain.len() != file.labels.len() {
        return Err(Error::Input("domain/label length mismatch".into()));
    }
    let cells = file
        .domain
        .iter()
        .zip(&file.labels)
        .map(|(a, s)| {
            Ok((
                pres.parse_word(a)?,
                alphabet
                    .index_of(s)
                    .ok_or_else(|| Error::Input(format!("unknown symbol {s:?}")))?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Patch::new(cells)
}

/// Addresses of the w×h rectangle window a^x b^y (x < w, y < h) for a grid
/// group whose first generator is the x step and third generator the y step.
pub fn rect_domain(w: usize, h: usize) -> Vec<Word> {
    let mut out = Vec::with_capacity(w * h);
    for x in 0..w {
        for y in 0..h {
            let mut word = vec![0u8; x];
            word.extend(std::iter::repeat(2u8).take(y));
            out.push(word);
        }
    }
    out
}

/// Addresses a^0 .. a^(len−1) of a line window.
pub fn line_domain(len: usize) -> Vec<Word> {
    (0..len).map(|x| vec![0u8; x]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presentation::parse_presentation;
    use crate::rewrite::{kb_complete, DEFAULT_MAX_LEN, DEFAULT_MAX_RULES};

    const Z1: &str = "gens a A\ninv a A\n";
    const Z2: &str = "gens a A b B\ninv a A, b B\nrel abAB\n";

    fn rs_for(text: &str) -> RewritingSystem {
        kb_complete(
            &parse_presentation(text).unwrap(),
            DEFAULT_MAX_RULES,
            DEFAULT_MAX_LEN,
        )
        .unwrap()
    }

    /// Two alternating radius-1 charts on the line: ball order (ε, a, A).
    fn alternating_sft() -> SftSpec {
        SftSpec::new(
            Alphabet::new(vec!["0".into(), "1".into()]).unwrap(),
            1,
            vec![vec![0, 1, 1], vec![1, 0, 0]],
        )
        .unwrap()
    }

    fn line_patch(labels: &[usize]) -> Patch {
        Patch::new(
            labels
                .iter()
                .enumerate()
                .map(|(x, &l)| (vec![0u8; x], l))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn alternating_window_accepted() {
        let rs = rs_for(Z1);
        let sft = alternating_sft();
        assert!(check_patch(&rs, &sft, &line_patch(&[0, 1, 0, 1])).unwrap());
        assert!(check_patch(&rs, &sft, &line_patch(&[1, 0, 1, 0])).unwrap());
    }

    #[test]
    fn repeated_symbol_rejected() {
        let rs = rs_for(Z1);
        let sft = alternating_sft();
        assert!(!check_patch(&rs, &sft, &line_patch(&[0, 1, 1, 0])).unwrap());
    }

    #[test]
    fn empty_atlas_rejects_nonempty_windows() {
        let rs = rs_for(Z1);
        let sft = SftSpec::new(
            Alphabet::new(vec!["0".into()]).unwrap(),
            1,
            vec![],
        )
        .unwrap();
        assert!(!check_patch(&rs, &sft, &line_patch(&[0])).unwrap());
    }

    #[test]
    fn label_outside_alphabet_is_an_input_error() {
        let rs = rs_for(Z1);
        let sft = alternating_sft();
        assert!(check_patch(&rs, &sft, &line_patch(&[0, 2])).is_err());
    }

    #[test]
    fn recoding_the_alternating_atlas() {
        let rs = rs_for(Z1);
        let nn = charts_to_nn(&rs, &alternating_sft()).unwrap();
        assert_eq!(nn.tiles, 2);
        let expect: BTreeSet<(usize, usize)> = [(0, 1), (1, 0)].into();
        assert_eq!(nn.allowed[0], expect);
        assert_eq!(nn.allowed[1], expect); // transpose of a symmetric set
    }

    #[test]
    fn constant_chart_allows_self_pairs() {
        let rs = rs_for(Z1);
        let sft = SftSpec::new(
            Alphabet::new(vec!["x".into()]).unwrap(),
            1,
            vec![vec![0, 0, 0]],
        )
        .unwrap();
        let nn = charts_to_nn(&rs, &sft).unwrap();
        assert!(nn.is_allowed(0, 0, 0));
    }

    /// Checkerboard atlas on the grid: radius-1 ball order (ε, a, A, b, B).
    fn checkerboard_sft() -> SftSpec {
        SftSpec::new(
            Alphabet::new(vec!["0".into(), "1".into()]).unwrap(),
            1,
            vec![vec![0, 1, 1, 1, 1], vec![1, 0, 0, 0, 0]],
        )
        .unwrap()
    }

    #[test]
    fn recoding_the_checkerboard() {
        let rs = rs_for(Z2);
        let nn = charts_to_nn(&rs, &checkerboard_sft()).unwrap();
        assert_eq!(nn.tiles, 2);
        let expect: BTreeSet<(usize, usize)> = [(0, 1), (1, 0)].into();
        for g in 0..4 {
            assert_eq!(nn.allowed[g], expect, "generator {g}");
        }
    }

    #[test]
    fn forced_extension_on_the_line() {
        let rs = rs_for(Z1);
        let sft = alternating_sft();
        let partial = line_patch(&[0]);
        let got = extend_patch_charts(
            &rs,
            &sft,
            &line_domain(6),
            &partial,
            DEFAULT_NODE_BUDGET,
        )
        .unwrap()
        .found()
        .expect("extension exists");
        assert_eq!(got.labels, vec![0, 1, 0, 1, 0, 1]);
        assert!(check_patch(&rs, &sft, &got).unwrap());
    }

    #[test]
    fn contradictory_partial_has_no_extension() {
        let rs = rs_for(Z1);
        let sft = alternating_sft();
        let partial = line_patch(&[0, 0]);
        let got = extend_patch_charts(
            &rs,
            &sft,
            &line_domain(4),
            &partial,
            DEFAULT_NODE_BUDGET,
        )
        .unwrap();
        assert_eq!(got, SearchOutcome::None);
    }

    #[test]
    fn extension_is_deterministic() {
        let rs = rs_for(Z2);
        let sft = checkerboard_sft();
        let empty = Patch::new(vec![]).unwrap();
        let a = extend_patch_charts(&rs, &sft, &rect_domain(3, 3), &empty, 1 << 20).unwrap();
        let b = extend_patch_charts(&rs, &sft, &rect_domain(3, 3), &empty, 1 << 20).unwrap();
        assert_eq!(a, b);
        assert!(a.found().is_some());
    }

    #[test]
    fn nn_extension_matches_chart_extension_on_the_checkerboard() {
        let rs = rs_for(Z2);
        let sft = checkerboard_sft();
        let nn = charts_to_nn(&rs, &sft).unwrap();
        let empty = Patch::new(vec![]).unwrap();
        let a = extend_patch_charts(&rs, &sft, &rect_domain(3, 3), &empty, 1 << 20)
            .unwrap()
            .found()
            .unwrap();
        let b = extend_patch_nn(&rs, &nn, &rect_domain(3, 3), &empty, 1 << 20)
            .unwrap()
            .found()
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn recoding_round_trip_small_windows() {
        // On small windows the valid tile assignments of the recoded shift
        // are exactly the labelings the atlas accepts, cell for cell
        // (the tile at each cell is the chart whose center label names it).
        let rs = rs_for(Z1);
        let sft = alternating_sft();
        let nn = charts_to_nn(&rs, &sft).unwrap();
        for len in 1..=5 {
            let rows = enumerate_line_rows(&nn, len);
            // Project: tile t ↦ center label of chart t.
            let projected: BTreeSet<Vec<usize>> = rows
                .iter()
                .map(|r| r.iter().map(|&t| sft.charts[t][0]).collect())
                .collect();
            // Enumerate labelings accepted by check_patch.
            let mut accepted = BTreeSet::new();
            let cells = 1usize << len.min(16);
            let _ = cells;
            let mut stack = vec![Vec::<usize>::new()];
            while let Some(cur) = stack.pop() {
                if cur.len() == len {
                    if check_patch(&rs, &sft, &line_patch(&cur)).unwrap() {
                        accepted.insert(cur);
                    }
                    continue;
                }
                for v in 0..sft.alphabet.len() {
                    let mut nx = cur.clone();
                    nx.push(v);
                    stack.push(nx);
                }
            }
            assert_eq!(projected, accepted, "window length {len}");
            assert_eq!(projected.len(), rows.len(), "projection injective at {len}");
        }
    }

    #[test]
    fn recoding_round_trip_grid_window() {
        let rs = rs_for(Z2);
        let sft = checkerboard_sft();
        let nn = charts_to_nn(&rs, &sft).unwrap();
        let domain = rect_domain(4, 4);
        // Enumerate NN tilings of the 4×4 window by backtracking over all
        // first-cell choices (enumeration via repeated search is unnecessary:
        // the checkerboard forces everything from one cell, so count = 2).
        let red = rs.reducer();
        let doms: Vec<Word> = domain.iter().map(|w| red.reduce(w)).collect();
        let mut tilings = Vec::new();
        for first in 0..nn.tiles {
            let partial = Patch::new(vec![(doms[0].clone(), first)]).unwrap();
            if let Some(p) =
                extend_patch_nn(&rs, &nn, &domain, &partial, 1 << 22).unwrap().found()
            {
                tilings.push(p);
            }
        }
        assert_eq!(tilings.len(), 2);
        for t in &tilings {
            let labeled = Patch {
                domain: t.domain.clone(),
                labels: t.labels.iter().map(|&tile| sft.charts[tile][0]).collect(),
            };
            assert!(check_patch(&rs, &sft, &labeled).unwrap());
        }
    }

    #[test]
    fn translation_equivariance_of_check_patch() {
        let rs = rs_for(Z1);
        let sft = alternating_sft();
        let red = rs.reducer();
        // Translate the window by a³ and relabel accordingly.
        let base = line_patch(&[0, 1, 0, 1, 0]);
        let shifted = Patch::new(
            base.domain
                .iter()
                .zip(&base.labels)
                .map(|(w, &l)| {
                    let mut x = vec![0u8, 0, 0];
                    x.extend_from_slice(w);
                    (red.reduce(&x), l)
                })
                .collect(),
        )
        .unwrap();
        assert_eq!(
            check_patch(&rs, &sft, &base).unwrap(),
            check_patch(&rs, &sft, &shifted).unwrap()
        );
    }

    fn clr_sft() -> NnSft {
        // Tiles C=0, L=1, R=2; allowed successor pairs C-R, L-C, R-R, L-L.
        NnSft::new(
            3,
            vec!["a".into(), "A".into()],
            vec![1, 0],
            &[(0, vec![(0, 2), (1, 0), (2, 2), (1, 1)])],
        )
        .unwrap()
    }

    #[test]
    fn alternating_line_has_period_two() {
        let nn = NnSft::new(
            2,
            vec!["a".into(), "A".into()],
            vec![1, 0],
            &[(0, vec![(0, 1), (1, 0)])],
        )
        .unwrap();
        let p = z_periodic_point(&nn).unwrap();
        assert_eq!(p.len(), 2);
        assert!(verify_z_period(&nn, &p));
    }

    #[test]
    fn seed_free_line_rules_have_a_period_one_point() {
        let nn = clr_sft();
        let p = z_periodic_point(&nn).unwrap();
        assert_eq!(p.len(), 1);
        assert!(p == vec![2] || p == vec![1], "all-R or all-L, got {p:?}");
        assert!(verify_z_period(&nn, &p));
    }

    #[test]
    fn acyclic_pair_digraph_is_empty() {
        let nn = NnSft::new(
            2,
            vec!["a".into(), "A".into()],
            vec![1, 0],
            &[(0, vec![(0, 1)])],
        )
        .unwrap();
        assert_eq!(z_periodic_point(&nn), None);
    }

    #[test]
    fn periodicity_matches_window_oracle() {
        // None ⟺ no valid row of length tiles+1 exists.
        let sets: Vec<NnSft> = vec![
            clr_sft(),
            NnSft::new(
                2,
                vec!["a".into(), "A".into()],
                vec![1, 0],
                &[(0, vec![(0, 1)])],
            )
            .unwrap(),
            NnSft::new(
                3,
                vec!["a".into(), "A".into()],
                vec![1, 0],
                &[(0, vec![(0, 1), (1, 2)])],
            )
            .unwrap(),
        ];
        for nn in &sets {
            let some_period = z_periodic_point(nn).is_some();
            let some_row = !enumerate_line_rows(nn, nn.tiles + 1).is_empty();
            assert_eq!(some_period, some_row);
        }
    }

    fn checkerboard_nn() -> NnSft {
        NnSft::new(
            2,
            vec!["a".into(), "A".into(), "b".into(), "B".into()],
            vec![1, 0, 3, 2],
            &[
                (0, vec![(0, 1), (1, 0)]),
                (2, vec![(0, 1), (1, 0)]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn checkerboard_tiles_the_even_torus() {
        let nn = checkerboard_nn();
        let got = torus_point_z2(&nn, "a", "b", 2, 2, 1 << 20).unwrap();
        let rows = got.found().expect("2×2 torus tiling exists");
        assert!(verify_torus(&nn, "a", "b", &rows));
    }

    #[test]
    fn checkerboard_fails_on_the_odd_torus() {
        let nn = checkerboard_nn();
        let got = torus_point_z2(&nn, "a", "b", 3, 3, 1 << 20).unwrap();
        assert_eq!(got, SearchOutcome::None);
    }

    #[test]
    fn one_by_one_torus_needs_a_diagonal_tile() {
        let nn = checkerboard_nn();
        assert_eq!(
            torus_point_z2(&nn, "a", "b", 1, 1, 1 << 10).unwrap(),
            SearchOutcome::None
        );
        let constant = NnSft::new(
            1,
            vec!["a".into(), "A".into(), "b".into(), "B".into()],
            vec![1, 0, 3, 2],
            &[(0, vec![(0, 0)]), (2, vec![(0, 0)])],
        )
        .unwrap();
        assert!(torus_point_z2(&constant, "a", "b", 1, 1, 1 << 10)
            .unwrap()
            .found()
            .is_some());
    }

    #[test]
    fn constant_window_is_preserved_by_all_shifts() {
        let rs = rs_for(Z1);
        let patch = line_patch(&[2, 2, 2, 2, 2, 2]);
        let moves: Vec<Word> = (1..=4).map(|k| vec![0u8; k]).collect();
        let kept = window_stabilizer(&rs, &patch, &moves).unwrap();
        assert_eq!(kept.len(), 4);
    }

    #[test]
    fn seeded_window_is_preserved_by_no_shift() {
        // L L C R R with tiles C=0, L=1, R=2.
        let rs = rs_for(Z1);
        let patch = line_patch(&[1, 1, 0, 2, 2]);
        let mut moves: Vec<Word> = (1..=4).map(|k| vec![0u8; k]).collect();
        moves.extend((1..=4).map(|k| vec![1u8; k]));
        let kept = window_stabilizer(&rs, &patch, &moves).unwrap();
        assert!(kept.is_empty());
    }

    #[test]
    fn alternating_window_period_two_stabilizer() {
        let rs = rs_for(Z1);
        let patch = line_patch(&[0, 1, 0, 1]);
        let kept = window_stabilizer(&rs, &patch, &[vec![0u8, 0u8], vec![0u8]]).unwrap();
        assert_eq!(kept, vec![vec![0u8, 0u8]]);
    }

    #[test]
    fn move_without_overlap_is_a_margin_error() {
        let rs = rs_for(Z1);
        let patch = line_patch(&[0, 1]);
        assert!(window_stabilizer(&rs, &patch, &[vec![0u8; 5]]).is_err());
    }

    #[test]
    fn sft_json_round_trip() {
        let rs = rs_for(Z1);
        let sft = alternating_sft();
        let text = sft_to_json(&rs, &sft).unwrap();
        let back = sft_from_json(&rs, &text).unwrap();
        assert_eq!(back.alphabet, sft.alphabet);
        assert_eq!(back.radius, sft.radius);
        assert_eq!(back.charts, sft.charts);
    }

    #[test]
    fn patch_json_round_trip() {
        let pres = parse_presentation(Z1).unwrap();
        let alphabet = Alphabet::new(vec!["0".into(), "1".into()]).unwrap();
        let patch = line_patch(&[0, 1, 0]);
        let text = patch_to_json(&pres, &alphabet, &patch).unwrap();
        let back = patch_from_json(&pres, &alphabet, &text).unwrap();
        assert_eq!(back, patch);
    }

    #[test]
    fn nn_json_round_trip() {
        let nn = clr_sft();
        let text = serde_json::to_string(&nn).unwrap();
        let back: NnSft = serde_json::from_str(&text).unwrap();
        assert_eq!(back, nn);
    }

    #[test]
    fn transpose_invariant_enforced() {
        let bad = NnSft::new(
            2,
            vec!["a".into(), "A".into()],
            vec![1, 0],
            &[(0, vec![(0, 1)]), (1, vec![(0, 1)])],
        );
        assert!(bad.is_err());
    }
}
