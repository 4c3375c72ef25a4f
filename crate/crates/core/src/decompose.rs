//! Decomposition services for the pivoting solvers.
//!
//! Separators and feedback vertex sets are found by brute force over subsets
//! in increasing size, each size in lexicographic order of vertex index, so
//! the answer is the lexicographically first among the smallest.

use itertools::Itertools;

use crate::instance::{Instance, UndirectedView, VertexId};
use crate::simulate::non_terminal_order;

/// A vertex subset of some [`UndirectedView`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Separator {
    pub vertices: Vec<VertexId>,
    /// Every component of the view minus `vertices` has at most half of the
    /// view's vertices.
    pub certified_balance: bool,
}

impl Separator {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

/// Connected components as instance-id lists, ordered by smallest member.
pub fn connected_components(view: &UndirectedView) -> Vec<Vec<VertexId>> {
    components_without(view, &vec![false; view.len()])
        .into_iter()
        .map(|comp| comp.into_iter().map(|i| view.vertices()[i]).collect())
        .collect()
}

/// Components of `view` minus the `removed` local positions, as sorted local
/// positions. Ordered by smallest member.
fn components_without(view: &UndirectedView, removed: &[bool]) -> Vec<Vec<usize>> {
    let n = view.len();
    let mut seen = removed.to_vec();
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            for &j in view.neighbours(i) {
                if !seen[j] {
                    seen[j] = true;
                    comp.push(j);
                    stack.push(j);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Largest component size after removing `removed`.
fn largest_component(view: &UndirectedView, removed: &[bool]) -> usize {
    components_without(view, removed)
        .iter()
        .map(Vec::len)
        .max()
        .unwrap_or(0)
}

/// `S` is balanced iff every component of `view - S` has at most `|view|/2`
/// vertices; compared as `2·size ≤ |view|`.
pub fn is_balanced(view: &UndirectedView, separator: &[VertexId]) -> bool {
    let mut removed = vec![false; view.len()];
    for v in separator {
        if let Ok(i) = view.vertices().binary_search(v) {
            removed[i] = true;
        }
    }
    2 * largest_component(view, &removed) <= view.len()
}

/// A minimum-cardinality balanced separator, lexicographically first among
/// those of minimum size.
pub fn smallest_balanced_separator(view: &UndirectedView) -> Separator {
    let n = view.len();
    for size in 0..=n {
        for subset in (0..n).combinations(size) {
            let mut removed = vec![false; n];
            for &i in &subset {
                removed[i] = true;
            }
            if 2 * largest_component(view, &removed) <= n {
                return Separator {
                    vertices: subset.into_iter().map(|i| view.vertices()[i]).collect(),
                    certified_balance: true,
                };
            }
        }
    }
    unreachable!("removing every vertex leaves nothing unbalanced")
}

/// True iff the directed graph on non-terminals minus `removed` is acyclic.
/// Out-edges of terminals never matter: tokens stop there.
fn acyclic_without(instance: &Instance, removed: &[VertexId]) -> bool {
    let mut mask = instance.terminal_mask().to_vec();
    for &v in removed {
        mask[v] = true;
    }
    non_terminal_order(instance.s0(), instance.s1(), &mask).is_ok()
}

/// A minimum feedback vertex set `F ⊆ among` for the non-terminal subgraph,
/// or `None` if no subset of `among` breaks every cycle.
pub fn smallest_feedback_vertex_set(
    instance: &Instance,
    among: &[VertexId],
) -> Option<Vec<VertexId>> {
    let mut pool = among.to_vec();
    pool.sort_unstable();
    pool.dedup();
    for size in 0..=pool.len() {
        for subset in pool.iter().copied().combinations(size) {
            if acyclic_without(instance, &subset) {
                return Some(subset);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::undirected_view;
    use num_bigint::BigUint;

    fn path4() -> UndirectedView {
        UndirectedView::from_edges(vec![0, 1, 2, 3], &[(0, 1), (1, 2), (2, 3)])
    }

    #[test]
    fn components_basic() {
        let empty = UndirectedView::from_edges(vec![], &[]);
        assert!(connected_components(&empty).is_empty());
        let cycle = UndirectedView::from_edges(vec![0, 1, 2, 3], &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert_eq!(connected_components(&cycle), vec![vec![0, 1, 2, 3]]);
        let pairs = UndirectedView::from_edges(vec![0, 1, 2, 3], &[(0, 2), (1, 3)]);
        assert_eq!(connected_components(&pairs), vec![vec![0, 2], vec![1, 3]]);
    }

    #[test]
    fn path_separator_is_second_vertex() {
        let sep = smallest_balanced_separator(&path4());
        assert_eq!(sep.vertices, vec![1]);
        assert!(sep.certified_balance);
    }

    #[test]
    fn single_vertex_must_be_removed() {
        let view = UndirectedView::from_edges(vec![5], &[]);
        assert_eq!(smallest_balanced_separator(&view).vertices, vec![5]);
    }

    #[test]
    fn empty_graph_needs_nothing() {
        let view = UndirectedView::from_edges(vec![], &[]);
        assert!(smallest_balanced_separator(&view).is_empty());
    }

    #[test]
    fn isolated_pair_is_already_balanced() {
        let view = UndirectedView::from_edges(vec![2, 7], &[]);
        assert!(smallest_balanced_separator(&view).is_empty());
        assert!(is_balanced(&view, &[]));
    }

    fn inst(s0: Vec<usize>, s1: Vec<usize>, terminals: &[usize]) -> Instance {
        let mut tokens = vec![BigUint::from(0u32); s0.len()];
        tokens[terminals[0]] = BigUint::from(1u32);
        Instance::from_indices(s0, s1, terminals, tokens).unwrap()
    }

    #[test]
    fn fvs_cases() {
        // acyclic: 1 -> 0, 2 -> 1
        let dag = inst(vec![0, 0, 1], vec![0, 0, 1], &[0]);
        assert_eq!(smallest_feedback_vertex_set(&dag, &[1, 2]), Some(vec![]));
        // self loop at 1
        let looped = inst(vec![0, 1], vec![0, 0], &[0]);
        assert_eq!(smallest_feedback_vertex_set(&looped, &[1]), Some(vec![1]));
        // 3-cycle 1 -> 2 -> 3 -> 1, each also exits to 0
        let tri = inst(vec![0, 2, 3, 1], vec![0, 0, 0, 0], &[0]);
        assert_eq!(smallest_feedback_vertex_set(&tri, &[1, 2, 3]), Some(vec![1]));
        assert_eq!(smallest_feedback_vertex_set(&tri, &[3, 2]), Some(vec![2]));
        assert_eq!(smallest_feedback_vertex_set(&tri, &[]), None);
    }

    #[test]
    fn cycles_through_terminals_do_not_count() {
        // 0 terminal, 1 -> 0 -> 1 only via the terminal
        let i = inst(vec![1, 0], vec![1, 0], &[0]);
        assert_eq!(smallest_feedback_vertex_set(&i, &[1]), Some(vec![]));
        let view = undirected_view(&i, &[1]);
        assert_eq!(smallest_balanced_separator(&view).vertices, vec![1]);
    }
}
