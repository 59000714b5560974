//! Shortlex shellings: the per-vertex label triple (distance differentials,
//! acceptor state, parent direction) on balls, integration of the height
//! function from its differentials, chart atlases sampled away from the
//! basepoint, and the translation-constant law.

use crate::acceptor::{GrowthClass, WordAcceptor};
use crate::ball::{ball, CayleyBall};
use crate::error::{Error, Result};
use crate::presentation::GroupPresentation;
use crate::rewrite::RewritingSystem;
use crate::shift::{Alphabet, Patch, SftSpec};
use crate::word::{concat, Letter, Word};
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// Hard cap on labeled-ball size; larger requests are budget errors.
pub const SHELL_VERTEX_BUDGET: u64 = 5_000_000;

/// The label triple carried by each vertex of a shelling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShellingLabel {
    /// Distance differential per generator index:
    /// dh(g)(a) = dist(e, g) − dist(e, ga) ∈ {−1, 0, +1}.
    pub dh: Vec<i8>,
    /// Acceptor state reached by the vertex's normal form.
    pub state: usize,
    /// Generator pointing one step toward the basepoint (the inverse of the
    /// normal form's final letter); absent at the basepoint itself.
    pub parent: Option<Letter>,
}

impl ShellingLabel {
    /// Canonical symbol string (used as a chart alphabet): state, parent,
    /// then one sign per generator.
    pub fn symbol(&self, pres: &GroupPresentation) -> String {
        let parent = match self.parent {
            Some(p) => pres.generators[p as usize].clone(),
            None => "-".into(),
        };
        let signs: String = self
            .dh
            .iter()
            .map(|&d| match d {
                -1 => '-',
                0 => '0',
                1 => '+',
                _ => '?',
            })
            .collect();
        format!("s{}|p{}|d{}", self.state, parent, signs)
    }
}

/// A labeled ball: every vertex carries a label triple and a height value,
/// plus a finite boundary ray (the parent-chain word from the shortlex-least
/// outermost vertex back to the basepoint).
#[derive(Debug, Clone)]
pub struct ShellingPatch {
    pub ball: CayleyBall,
    pub labels: Vec<ShellingLabel>,
    pub h: Vec<i64>,
    pub boundary_ray: Word,
}

impl ShellingPatch {
    pub fn label_symbols(&self, pres: &GroupPresentation) -> Vec<String> {
        self.labels.iter().map(|l| l.symbol(pres)).collect()
    }
}

/// Label the radius-`radius` ball around the basepoint: for each vertex,
/// the distance differential toward every generator, the acceptor state of
/// its normal form, its parent direction, and h = distance.
pub fn label_ball(rs: &RewritingSystem, acc: &WordAcceptor, radius: u32) -> Result<ShellingPatch> {
    if radius < 1 {
        return Err(Error::Input("radius must be at least 1".into()));
    }
    // Predict the ball size from the acceptor before building it.
    let predicted: u64 = acc
        .sphere_counts(radius as usize)
        .iter()
        .sum();
    if predicted > SHELL_VERTEX_BUDGET {
        return Err(Error::Budget(format!(
            "radius {radius} ball holds {predicted} vertices (budget {SHELL_VERTEX_BUDGET})"
        )));
    }
    let b = ball(rs, radius)?;
    let reducer = rs.reducer();
    let gens = rs.presentation.alphabet_size();
    let mut labels = Vec::with_capacity(b.vertices.len());
    let mut h = Vec::with_capacity(b.vertices.len());
    for nf in &b.vertices {
        let state = acc.run(nf).ok_or_else(|| {
            Error::Consistency(format!(
                "normal form {:?} rejected by the acceptor",
                rs.presentation.word_to_string(nf)
            ))
        })?;
        let parent = nf
            .last()
            .map(|&last| rs.presentation.inverses[last as usize]);
        let dist = nf.len() as i64;
        let mut dh = Vec::with_capacity(gens);
        for a in 0..gens as Letter {
            let neighbor = reducer.reduce(&concat(nf, &[a]));
            let d = dist - neighbor.len() as i64;
            if !(-1..=1).contains(&d) {
                return Err(Error::Consistency(format!(
                    "distance differential {d} out of range at {}",
                    rs.presentation.word_to_string(nf)
                )));
            }
            dh.push(d as i8);
        }
        labels.push(ShellingLabel { dh, state, parent });
        h.push(dist);
    }
    // Boundary ray: parent-chain word from the shortlex-least outermost
    // vertex (vertices are sorted shortlex, so the first at full distance).
    let mut boundary_ray = Word::new();
    if let Some(start) = b.vertices.iter().position(|w| w.len() == radius as usize) {
        let mut cur = b.vertices[start].clone();
        while let Some(&last) = cur.last() {
            let p = rs.presentation.inverses[last as usize];
            boundary_ray.push(p);
            cur.pop(); // normal forms are prefix-closed
        }
    }
    Ok(ShellingPatch {
        ball: b,
        labels,
        h,
        boundary_ray,
    })
}

/// Integrate a height function from its differentials: h(basepoint) =
/// value0 and h(ga) − h(g) = −dh(g)(a) along every edge. Fails by naming a
/// violating cycle if the differentials are inconsistent around some loop.
pub fn integrate_h(
    pres: &GroupPresentation,
    b: &CayleyBall,
    dh: &[Vec<i8>],
    value0: i64,
) -> Result<Vec<i64>> {
    let n = b.vertices.len();
    if dh.len() != n {
        return Err(Error::Input("one dh vector per vertex is required".into()));
    }
    let mut adj: Vec<Vec<(Letter, usize)>> = vec![Vec::new(); n];
    for &(u, a, v) in &b.edges {
        adj[u].push((a, v));
    }
    let mut h: Vec<Option<i64>> = vec![None; n];
    let mut pred: Vec<Option<(usize, Letter)>> = vec![None; n];
    h[0] = Some(value0);
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        let hu = h[u].unwrap();
        for &(a, v) in &adj[u] {
            let expected = hu - dh[u][a as usize] as i64;
            if h[v].is_none() {
                h[v] = Some(expected);
                pred[v] = Some((u, a));
                queue.push_back(v);
            }
        }
    }
    if h.iter().any(|x| x.is_none()) {
        return Err(Error::Input("patch is not connected".into()));
    }
    // Verify every edge; name a violating cycle through the spanning tree.
    for &(u, a, v) in &b.edges {
        let got = h[v].unwrap() - h[u].unwrap();
        let want = -(dh[u][a as usize] as i64);
        if got != want {
            let path_to = |mut x: usize| -> Vec<Word> {
                let mut path = vec![b.vertices[x].clone()];
                while let Some((p, _)) = pred[x] {
                    x = p;
                    path.push(b.vertices[x].clone());
                }
                path.reverse();
                path
            };
            let mut cycle: Vec<String> = path_to(u)
                .iter()
                .map(|w| pres.word_to_string(w))
                .collect();
            for w in path_to(v).iter().rev() {
                cycle.push(pres.word_to_string(w));
            }
            return Err(Error::Consistency(format!(
                "differentials integrate inconsistently around the cycle {} \
                 (edge {} -{}→ {} wants Δh = {want}, tree gives {got})",
                cycle.join(" → "),
                pres.word_to_string(&b.vertices[u]),
                pres.generators[a as usize],
                pres.word_to_string(&b.vertices[v]),
            )));
        }
    }
    Ok(h.into_iter().map(|x| x.unwrap()).collect())
}

/// A chart atlas for the shelling shift: every distinct radius-R labeled
/// ball pattern sampled at centers away from the basepoint.
#[derive(Debug, Clone)]
pub struct OmegaSAtlas {
    pub spec: SftSpec,
    /// Radius of the ball the charts were sampled from.
    pub sample_radius: u32,
}

/// Collect every distinct R-ball label pattern centered at vertices g with
/// R < dist(e, g) ≤ sample_radius − R. Charts are recorded over the
/// template's canonical address order and deduplicated.
pub fn omega_s_atlas(
    rs: &RewritingSystem,
    acc: &WordAcceptor,
    r: u32,
    sample_radius: u32,
) -> Result<OmegaSAtlas> {
    if r < 1 {
        return Err(Error::Input("chart radius must be at least 1".into()));
    }
    if sample_radius < 3 * r {
        return Err(Error::Input(format!(
            "sample too small: sample_radius {sample_radius} < 3R = {}",
            3 * r
        )));
    }
    let patch = label_ball(rs, acc, sample_radius)?;
    let symbols = patch.label_symbols(&rs.presentation);
    let template = ball(rs, r)?;
    let index = patch.ball.index();
    let reducer = rs.reducer();
    let mut charts: BTreeSet<Vec<String>> = BTreeSet::new();
    for (c, center) in patch.ball.vertices.iter().enumerate() {
        let d = patch.ball.dist(c);
        if d <= r || d > sample_radius - r {
            continue;
        }
        let mut chart = Vec::with_capacity(template.vertices.len());
        for addr in &template.vertices {
            let cell = reducer.reduce(&concat(center, addr));
            let idx = *index.get(cell.as_slice()).ok_or_else(|| {
                Error::Consistency("sampled cell fell outside the ball".into())
            })?;
            chart.push(symbols[idx].clone());
        }
        charts.insert(chart);
    }
    let mut alphabet: BTreeSet<String> = BTreeSet::new();
    for chart in &charts {
        alphabet.extend(chart.iter().cloned());
    }
    let alphabet = Alphabet::new(alphabet.into_iter().collect())?;
    let chart_indices: Vec<Vec<usize>> = charts
        .iter()
        .map(|chart| {
            chart
                .iter()
                .map(|s| alphabet.index_of(s).unwrap())
                .collect()
        })
        .collect();
    Ok(OmegaSAtlas {
        spec: SftSpec::new(alphabet, r, chart_indices)?,
        sample_radius,
    })
}

impl OmegaSAtlas {
    /// Charts as symbol sequences (for comparisons across atlases whose
    /// alphabets differ).
    pub fn charts_as_symbols(&self) -> BTreeSet<Vec<String>> {
        self.spec
            .charts
            .iter()
            .map(|chart| {
                chart
                    .iter()
                    .map(|&i| self.spec.alphabet.symbols[i].clone())
                    .collect()
            })
            .collect()
    }
}

/// Restrict a labeled ball to the vertices selected by `keep` and express it
/// as a patch over the atlas alphabet (for `check_patch`).
pub fn window_as_patch(
    patch: &ShellingPatch,
    pres: &GroupPresentation,
    alphabet: &Alphabet,
    keep: impl Fn(&Word, i64) -> bool,
) -> Result<Patch> {
    let symbols = patch.label_symbols(pres);
    let mut cells = Vec::new();
    for (i, addr) in patch.ball.vertices.iter().enumerate() {
        if !keep(addr, patch.h[i]) {
            continue;
        }
        let label = alphabet.index_of(&symbols[i]).ok_or_else(|| {
            Error::Input(format!(
                "window label {} is outside the atlas alphabet",
                symbols[i]
            ))
        })?;
        cells.push((addr.clone(), label));
    }
    Patch::new(cells)
}

/// The translation-constant law: returns C if h(t·x) = h(x) + C for every x
/// in the inner overlap {x ∈ domain : t·x ∈ domain}, `None` if the
/// differences disagree, and an error if the overlap is empty.
pub fn translation_constant(
    rs: &RewritingSystem,
    domain: &[Word],
    h: &[i64],
    t: &[Letter],
) -> Result<Option<i64>> {
    if domain.len() != h.len() {
        return Err(Error::Input("one h value per domain vertex required".into()));
    }
    let reducer = rs.reducer();
    let t = reducer.reduce(t);
    let index: HashMap<&[Letter], usize> = domain
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_slice(), i))
        .collect();
    let mut c: Option<i64> = None;
    let mut overlap = 0usize;
    for (i, x) in domain.iter().enumerate() {
        let tx = reducer.reduce(&concat(&t, x));
        if let Some(&j) = index.get(tx.as_slice()) {
            overlap += 1;
            let diff = h[j] - h[i];
            match c {
                None => c = Some(diff),
                Some(prev) if prev != diff => return Ok(None),
                _ => {}
            }
        }
    }
    if overlap == 0 {
        return Err(Error::Input(
            "translation margin too small: the shifted domain misses the window".into(),
        ));
    }
    Ok(c)
}

/// Vertices whose acceptor state is classified maximal (the dense
/// sub-population used by the aperiodicity layer).
pub fn maximal_vertices(patch: &ShellingPatch, acc: &WordAcceptor) -> Result<Vec<usize>> {
    if acc.growth_class.len() != acc.states {
        return Err(Error::Input(
            "acceptor states are not classified; classify first".into(),
        ));
    }
    Ok((0..patch.ball.vertices.len())
        .filter(|&v| acc.growth_class[patch.labels[v].state] == GrowthClass::Maximal)
        .collect())
}

/// JSON export: vertices with their label triples and heights, plus the
/// boundary ray.
pub fn shelling_to_json(pres: &GroupPresentation, patch: &ShellingPatch) -> Result<String> {
    let mut vertices = Vec::new();
    for (i, addr) in patch.ball.vertices.iter().enumerate() {
        let l = &patch.labels[i];
        let dh: BTreeMap<String, i8> = l
            .dh
            .iter()
            .enumerate()
            .map(|(a, &d)| (pres.generators[a].clone(), d))
            .collect();
        vertices.push(serde_json::json!({
            "vertex": pres.word_to_string(addr),
            "dh": dh,
            "state": l.state,
            "parent": l.parent.map(|p| pres.generators[p as usize].clone()),
            "h": patch.h[i],
        }));
    }
    serde_json::to_string_pretty(&serde_json::json!({
        "radius": patch.ball.radius,
        "vertices": vertices,
        "boundary_ray": pres.word_to_string(&patch.boundary_ray),
    }))
    .map_err(Error::from)
}

/// DOT export drawing each vertex with its height and the parent arrows.
pub fn shelling_to_dot(pres: &GroupPresentation, patch: &ShellingPatch) -> String {
    let mut out = String::from("digraph shelling {\n  rankdir=BT;\n");
    let index = patch.ball.index();
    for (i, addr) in patch.ball.vertices.iter().enumerate() {
        let name = pres.word_to_string(addr);
        out.push_str(&format!(
            "  n{i} [label=\"{} h={}\"];\n",
            name, patch.h[i]
        ));
    }
    for (i, addr) in patch.ball.vertices.iter().enumerate() {
        if let Some(p) = patch.labels[i].parent {
            let mut target = addr.clone();
            target.pop();
            if let Some(&j) = index.get(target.as_slice()) {
                out.push_str(&format!(
                    "  n{i} -> n{j} [label=\"{}\"];\n",
                    pres.generators[p as usize]
                ));
            }
        }
    }
    out.push_str("}\n");
    out
}
