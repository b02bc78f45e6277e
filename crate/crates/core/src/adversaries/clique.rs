//! Exact maximum monochromatic clique by branch and bound.
//!
//! Each colour class is solved separately. Candidate sets are bitsets; the
//! bound is the number of colours in a greedy colouring of the candidates.

use super::graph::Graph;
use crate::error::{Error, Result};

/// Default vertex cap for [`max_mono_clique`].
pub const DEFAULT_VERTEX_CAP: usize = 1024;

type Bits = Vec<u64>;

fn set(bits: &mut Bits, i: usize) {
    bits[i / 64] |= 1 << (i % 64);
}

fn clear(bits: &mut Bits, i: usize) {
    bits[i / 64] &= !(1 << (i % 64));
}

fn first(bits: &Bits) -> Option<usize> {
    bits.iter()
        .enumerate()
        .find(|(_, w)| **w != 0)
        .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

fn is_empty(bits: &Bits) -> bool {
    bits.iter().all(|w| *w == 0)
}

struct Search<'a> {
    adj: &'a [Bits],
    best: Vec<usize>,
    current: Vec<usize>,
}

impl Search<'_> {
    /// Greedy sequential colouring of `p`: vertices in colour order with their colour numbers.
    fn color_sort(&self, p: &Bits) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut uncolored = p.clone();
        let mut color = 0;
        while !is_empty(&uncolored) {
            color += 1;
            let mut q = uncolored.clone();
            while let Some(v) = first(&q) {
                clear(&mut q, v);
                clear(&mut uncolored, v);
                for (w, a) in q.iter_mut().zip(&self.adj[v]) {
                    *w &= !a;
                }
                out.push((v, color));
            }
        }
        out
    }

    fn expand(&mut self, mut p: Bits) {
        let order = self.color_sort(&p);
        for &(v, color) in order.iter().rev() {
            if self.current.len() + color <= self.best.len() {
                return;
            }
            self.current.push(v);
            let next: Bits = p.iter().zip(&self.adj[v]).map(|(a, b)| a & b).collect();
            if is_empty(&next) {
                if self.current.len() > self.best.len() {
                    self.best = self.current.clone();
                }
            } else {
                self.expand(next);
            }
            self.current.pop();
            clear(&mut p, v);
        }
    }
}

/// Largest clique among `vertices` (global indices), returned sorted.
fn max_clique_among(graph: &Graph, vertices: &[usize]) -> Vec<usize> {
    let n = vertices.len();
    if n == 0 {
        return Vec::new();
    }
    let words = n.div_ceil(64);
    let mut adj = vec![vec![0u64; words]; n];
    for a in 0..n {
        for b in a + 1..n {
            if graph.has_edge(vertices[a], vertices[b]) {
                set(&mut adj[a], b);
                set(&mut adj[b], a);
            }
        }
    }
    let mut search = Search {
        adj: &adj,
        best: Vec::new(),
        current: Vec::new(),
    };
    search.expand(all_bits(n));
    let mut out: Vec<usize> = search.best.iter().map(|&i| vertices[i]).collect();
    out.sort_unstable();
    out
}

fn all_bits(n: usize) -> Bits {
    let mut b = vec![0u64; n.div_ceil(64)];
    for i in 0..n {
        set(&mut b, i);
    }
    b
}

fn color_classes(coloring: &[usize]) -> Vec<Vec<usize>> {
    let colors = coloring.iter().copied().max().map_or(0, |c| c + 1);
    let mut classes = vec![Vec::new(); colors];
    for (v, &c) in coloring.iter().enumerate() {
        classes[c].push(v);
    }
    classes
}

/// A maximum clique whose vertices all share one colour; ties go to the
/// lowest colour. `coloring[v]` is the colour of vertex `v`.
pub fn max_mono_clique_witness(
    graph: &Graph,
    coloring: &[usize],
    cap: usize,
) -> Result<Vec<usize>> {
    let n = graph.vertex_count();
    if n > cap {
        return Err(Error::SizeLimit { vertices: n, cap });
    }
    if coloring.len() != n {
        return Err(Error::BadParams(format!(
            "coloring has {} entries for {n} vertices",
            coloring.len()
        )));
    }
    let mut best = Vec::new();
    for class in color_classes(coloring) {
        if class.len() <= best.len() {
            continue;
        }
        let c = max_clique_among(graph, &class);
        if c.len() > best.len() {
            best = c;
        }
    }
    Ok(best)
}

/// Size of the largest monochromatic clique.
///
/// In the clique game's adversary colouring only bad edges (same slot,
/// different bins) can join equal colours, so passing that colouring already
/// restricts the search to bad edges.
pub fn max_mono_clique(graph: &Graph, coloring: &[usize]) -> Result<usize> {
    Ok(max_mono_clique_witness(graph, coloring, DEFAULT_VERTEX_CAP)?.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_cases() {
        assert_eq!(max_mono_clique(&Graph::new(0), &[]).unwrap(), 0);
        assert_eq!(max_mono_clique(&Graph::new(1), &[0]).unwrap(), 1);
        let tri = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(max_mono_clique(&tri, &[0, 0, 0]).unwrap(), 3);
        assert_eq!(max_mono_clique(&tri, &[0, 1, 0]).unwrap(), 2);
        assert_eq!(max_mono_clique(&tri, &[0, 1, 2]).unwrap(), 1);
    }

    #[test]
    fn witness_is_a_clique() {
        // K4 on {1,3,5,7} plus a triangle on {0,2,4}.
        let mut edges = vec![(0, 2), (2, 4), (0, 4)];
        for (a, b) in [(1, 3), (1, 5), (1, 7), (3, 5), (3, 7), (5, 7)] {
            edges.push((a, b));
        }
        let g = Graph::from_edges(8, &edges);
        let w = max_mono_clique_witness(&g, &[0; 8], 100).unwrap();
        assert_eq!(w, vec![1, 3, 5, 7]);
        assert!(g.is_clique(&w));
    }

    #[test]
    fn size_limit() {
        let g = Graph::new(5);
        assert_eq!(
            max_mono_clique_witness(&g, &[0; 5], 4),
            Err(Error::SizeLimit {
                vertices: 5,
                cap: 4
            })
        );
    }

    #[test]
    fn complete_graph_across_words() {
        let n = 70;
        let mut g = Graph::new(n);
        for u in 0..n {
            for v in u + 1..n {
                g.add_edge(u, v);
            }
        }
        assert_eq!(max_mono_clique(&g, &vec![0; n]).unwrap(), 70);
    }
}
