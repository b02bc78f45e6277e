use crate::adversaries::Graph;
use crate::error::{Error, Result};

/// Largest colour class [`exhaustive_clique`] will enumerate.
pub const EXHAUSTIVE_CLASS_LIMIT: usize = 20;

/// Largest monochromatic clique by enumerating every subset of every colour class.
pub fn exhaustive_clique(graph: &Graph, coloring: &[usize]) -> Result<usize> {
    if coloring.len() != graph.vertex_count() {
        return Err(Error::BadParams(
            "coloring length differs from vertex count".into(),
        ));
    }
    let colors = coloring.iter().copied().max().map_or(0, |c| c + 1);
    let mut best = 0;
    for c in 0..colors {
        let class: Vec<usize> = (0..coloring.len()).filter(|&v| coloring[v] == c).collect();
        let n = class.len();
        if n > EXHAUSTIVE_CLASS_LIMIT {
            return Err(Error::TooLarge(format!("colour class of {n} vertices")));
        }
        let nbr: Vec<u32> = class
            .iter()
            .map(|&u| {
                (0..n)
                    .filter(|&b| graph.has_edge(u, class[b]))
                    .fold(0u32, |acc, b| acc | 1 << b)
            })
            .collect();
        for mask in 1u32..(1u32 << n) {
            let size = mask.count_ones() as usize;
            if size <= best {
                continue;
            }
            let clique = (0..n)
                .filter(|&a| mask >> a & 1 == 1)
                .all(|a| mask & !(1 << a) & !nbr[a] == 0);
            if clique {
                best = size;
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_and_path() {
        let tri = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(exhaustive_clique(&tri, &[0, 0, 0]).unwrap(), 3);
        let path = Graph::from_edges(3, &[(0, 1), (1, 2)]);
        assert_eq!(exhaustive_clique(&path, &[0, 0, 0]).unwrap(), 2);
        assert_eq!(exhaustive_clique(&Graph::new(0), &[]).unwrap(), 0);
    }

    #[test]
    fn class_limit() {
        let g = Graph::new(21);
        assert!(matches!(
            exhaustive_clique(&g, &[0; 21]),
            Err(Error::TooLarge(_))
        ));
    }
}
