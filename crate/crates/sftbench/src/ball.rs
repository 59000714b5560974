//! Cayley-graph balls built from a confluent rewriting system.
//!
//! Vertices are shortlex normal forms; since normal forms are shortlex-least
//! they are geodesic, so a vertex's word length is its graph distance from
//! the center. Edges are directed and generator-labeled, and each edge has a
//! reverse edge labeled by the inverse generator.

use crate::error::{Error, Result};
use crate::rewrite::RewritingSystem;
use crate::word::{Letter, Word};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CayleyBall {
    /// Center as a normal form (empty = identity).
    pub center: Word,
    pub radius: u32,
    /// Normal forms of `center⁻¹ · v`, i.e. vertex addresses relative to the
    /// center, in breadth-first (shortlex) order. Index 0 is the center.
    pub vertices: Vec<Word>,
    /// Directed labeled edges (from, letter, to) as indices into `vertices`.
    pub edges: Vec<(usize, Letter, usize)>,
}

impl CayleyBall {
    pub fn index(&self) -> HashMap<&[Letter], usize> {
        self.vertices
            .iter()
            .enumerate()
            .map(|(i, w)| (w.as_slice(), i))
            .collect()
    }

    /// Distance from the center = normal-form length.
    pub fn dist(&self, v: usize) -> u32 {
        self.vertices[v].len() as u32
    }

    /// Sphere sizes |S(0)|, ..., |S(radius)|.
    pub fn sphere_sizes(&self) -> Vec<usize> {
        let mut out = vec![0usize; self.radius as usize + 1];
        for w in &self.vertices {
            out[w.len()] += 1;
        }
        out
    }

    /// Neighbor index for (vertex, letter), if inside the ball.
    pub fn step(&self, neighbors: &HashMap<(usize, Letter), usize>, v: usize, a: Letter) -> Option<usize> {
        neighbors.get(&(v, a)).copied()
    }

    /// Adjacency map (vertex, letter) → vertex for all edges.
    pub fn neighbor_map(&self) -> HashMap<(usize, Letter), usize> {
        self.edges.iter().map(|&(u, a, v)| ((u, a), v)).collect()
    }
}

/// Build the radius-`radius` ball around the identity (or around `center`).
pub fn ball(rs: &RewritingSystem, radius: u32) -> Result<CayleyBall> {
    ball_at(rs, &[], radius)
}

/// Ball around an arbitrary center word (vertex addresses stay relative).
pub fn ball_at(rs: &RewritingSystem, center: &[Letter], radius: u32) -> Result<CayleyBall> {
    if !rs.confluent {
        return Err(Error::Consistency(
            "ball construction requires a confluent rewriting system".into(),
        ));
    }
    let red = rs.reducer();
    let center_nf = red.reduce(center);
    let n_gens = rs.presentation.alphabet_size() as Letter;

    // BFS over relative addresses: vertices are normal forms w with |w| ≤ r.
    let mut vertices: Vec<Word> = vec![Vec::new()];
    let mut index: HashMap<Word, usize> = HashMap::from([(Vec::new(), 0usize)]);
    let mut frontier: Vec<usize> = vec![0];
    for _ in 0..radius {
        let mut next = Vec::new();
        for &vi in &frontier {
            let base = vertices[vi].clone();
            for a in 0..n_gens {
                let mut w = base.clone();
                w.push(a);
                let nf = red.reduce(&w);
                if nf.len() != base.len() + 1 {
                    continue; // not an outward step
                }
                if !index.contains_key(&nf) {
                    index.insert(nf.clone(), vertices.len());
                    next.push(vertices.len());
                    vertices.push(nf);
                }
            }
        }
        frontier = next;
    }
    // Sort spheres shortlex for reproducibility (BFS already groups by length;
    // normal-form insertion order may differ, so sort outright).
    vertices.sort_by(|a, b| crate::word::shortlex_cmp(a, b));
    let index: HashMap<Word, usize> = vertices
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), i))
        .collect();

    let mut edges = Vec::new();
    for (i, w) in vertices.iter().enumerate() {
        for a in 0..n_gens {
            let mut z = w.clone();
            z.push(a);
            let nf = red.reduce(&z);
            if let Some(&j) = index.get(&nf) {
                edges.push((i, a, j));
            }
        }
    }
    Ok(CayleyBall {
        center: center_nf,
        radius,
        vertices,
        edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presentation::parse_presentation;
    use crate::rewrite::{kb_complete, DEFAULT_MAX_LEN, DEFAULT_MAX_RULES};

    fn system(text: &str) -> RewritingSystem {
        kb_complete(
            &parse_presentation(text).unwrap(),
            DEFAULT_MAX_RULES,
            DEFAULT_MAX_LEN,
        )
        .unwrap()
    }

    #[test]
    fn radius_zero_is_a_single_vertex() {
        let rs = system("gens a A\ninv a A\n");
        let b = ball(&rs, 0).unwrap();
        assert_eq!(b.vertices.len(), 1);
        assert!(b.edges.is_empty());
    }

    #[test]
    fn commuting_pair_ball_radius_two_has_thirteen_vertices() {
        let rs = system("gens a A b B\ninv a A, b B\nrel abAB\n");
        let b = ball(&rs, 2).unwrap();
        assert_eq!(b.vertices.len(), 13); // 1 + 4 + 8
        assert_eq!(b.sphere_sizes(), vec![1, 4, 8]);
    }

    #[test]
    fn free_group_ball_radius_two_has_seventeen_vertices() {
        let rs = system("gens a A b B\ninv a A, b B\n");
        let b = ball(&rs, 2).unwrap();
        assert_eq!(b.vertices.len(), 17); // 1 + 4 + 12
        assert_eq!(b.sphere_sizes(), vec![1, 4, 12]);
    }

    #[test]
    fn commuting_pair_spheres_grow_linearly() {
        let rs = system("gens a A b B\ninv a A, b B\nrel abAB\n");
        let b = ball(&rs, 6).unwrap();
        assert_eq!(b.sphere_sizes(), vec![1, 4, 8, 12, 16, 20, 24]);
    }

    #[test]
    fn surface_group_spheres_match_rational_growth_recurrence() {
        let rs = system("gens a A c C b B d D\ninv a A, c C, b B, d D\nrel abABcdCD\ndelta 2\n");
        let b = ball(&rs, 5).unwrap();
        assert_eq!(b.sphere_sizes(), vec![1, 8, 56, 392, 2736, 19096]);
    }

    #[test]
    fn every_edge_has_a_reverse_edge_with_inverse_label() {
        let rs = system("gens a A b B\ninv a A, b B\nrel abAB\n");
        let b = ball(&rs, 3).unwrap();
        let inv = &rs.presentation.inverses;
        let set: std::collections::HashSet<(usize, Letter, usize)> =
            b.edges.iter().copied().collect();
        for &(u, a, v) in &b.edges {
            assert!(set.contains(&(v, inv[a as usize], u)));
        }
    }

    #[test]
    fn vertex_length_equals_bfs_distance() {
        // Independent BFS over the edge set must agree with word length.
        let rs = system("gens a A c C b B d D\ninv a A, c C, b B, d D\nrel abABcdCD\n");
        let b = ball(&rs, 4).unwrap();
        let mut dist = vec![u32::MAX; b.vertices.len()];
        dist[0] = 0;
        let mut queue = std::collections::VecDeque::from([0usize]);
        let adj = b.neighbor_map();
        while let Some(v) = queue.pop_front() {
            for a in 0..rs.presentation.alphabet_size() as Letter {
                if let Some(&w) = adj.get(&(v, a)) {
                    if dist[w] == u32::MAX {
                        dist[w] = dist[v] + 1;
                        queue.push_back(w);
                    }
                }
            }
        }
        for (i, w) in b.vertices.iter().enumerate() {
            assert_eq!(dist[i], w.len() as u32, "vertex {i}");
        }
    }

    #[test]
    fn rejects_non_confluent_systems() {
        let rs = kb_complete(
            &parse_presentation("gens a A b B c C d D\ninv a A, b B, c C, d D\nrel abABcdCD\n")
                .unwrap(),
            100,
            16,
        )
        .unwrap();
        assert!(!rs.confluent);
        assert!(ball(&rs, 2).is_err());
    }
}
