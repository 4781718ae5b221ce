//! Clique → two-exception typed COM SMTI gadget.
//!
//! Builds, from a graph `G` and an integer `r`, a six-type SMTI instance
//! whose only exceptions sit in the lists of the edge-men, such that `G`
//! has a clique on `r` vertices exactly when the instance admits a
//! complete stable matching. Used as a fixture factory for the
//! exception model beyond the tractable frontier.

use thiserror::Error;

use crate::instance::{
    ExceptionEntry, InstanceError, Placement, ProblemKind, Side, TypePreference, TypeSpec,
    TypedInstance,
};
use crate::oracle;

/// Largest vertex count [`verify_reduction`] accepts (brute-force cap).
pub const VERIFY_MAX_VERTICES: usize = 6;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ReductionError {
    #[error("invalid graph: {0}")]
    Graph(String),
    #[error("r = {r} exceeds the vertex count {n}")]
    RangeR { r: usize, n: usize },
    #[error("graph has {0} vertices; verification is capped at {VERIFY_MAX_VERTICES}")]
    TooLarge(usize),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

/// A simple undirected graph on vertices `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UndirectedGraph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl UndirectedGraph {
    /// Validates that the graph is simple: no loops, no repeated edges,
    /// endpoints in range.
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self, ReductionError> {
        let mut seen = std::collections::HashSet::new();
        for &(u, v) in &edges {
            if u >= n || v >= n {
                return Err(ReductionError::Graph(format!("edge ({u},{v}) out of range")));
            }
            if u == v {
                return Err(ReductionError::Graph(format!("self-loop at {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(ReductionError::Graph(format!("repeated edge ({u},{v})")));
            }
        }
        Ok(UndirectedGraph { n, edges })
    }

    /// Parses `n m` followed by `m` lines `u v` (0-indexed); `#` starts a
    /// comment.
    pub fn parse(text: &str) -> Result<Self, ReductionError> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let nums = |l: &str| -> Result<Vec<usize>, ReductionError> {
            l.split_whitespace()
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| ReductionError::Graph(format!("bad integer '{t}'")))
                })
                .collect()
        };
        let header = nums(lines.next().ok_or_else(|| ReductionError::Graph("empty file".into()))?)?;
        let [n, m] = header[..] else {
            return Err(ReductionError::Graph("header must be 'n m'".into()));
        };
        let mut edges = Vec::with_capacity(m);
        for l in lines {
            let uv = nums(l)?;
            let [u, v] = uv[..] else {
                return Err(ReductionError::Graph(format!("edge line '{l}' must be 'u v'")));
            };
            edges.push((u, v));
        }
        if edges.len() != m {
            return Err(ReductionError::Graph(format!(
                "header announces {m} edges, found {}",
                edges.len()
            )));
        }
        UndirectedGraph::new(n, edges)
    }

    /// Complete graph on `n` vertices.
    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        UndirectedGraph { n, edges }
    }

    fn adjacency(&self) -> Vec<Vec<bool>> {
        let mut adj = vec![vec![false; self.n]; self.n];
        for &(u, v) in &self.edges {
            adj[u][v] = true;
            adj[v][u] = true;
        }
        adj
    }

    /// Whether some `r` vertices are pairwise adjacent (exhaustive search).
    pub fn has_clique(&self, r: usize) -> bool {
        fn extend(adj: &[Vec<bool>], chosen: &mut Vec<usize>, from: usize, r: usize) -> bool {
            if chosen.len() == r {
                return true;
            }
            let n = adj.len();
            if n - from < r - chosen.len() {
                return false;
            }
            for v in from..n {
                if chosen.iter().all(|&u| adj[u][v]) {
                    chosen.push(v);
                    if extend(adj, chosen, v + 1, r) {
                        return true;
                    }
                    chosen.pop();
                }
            }
            false
        }
        r <= self.n && extend(&self.adjacency(), &mut Vec::new(), 0, r)
    }
}

/// The gadget instance plus the graph → agent correspondence.
#[derive(Clone, Debug)]
pub struct Gadget {
    pub instance: TypedInstance,
    /// Set when `|E| < C(r,2)`: the instance is a fixed no-instance (one
    /// man whose only acceptable type is empty) instead of the six-type
    /// gadget.
    pub trivial_no: bool,
    /// Agent id of the man for each edge, in input order.
    pub edge_agent: Vec<usize>,
    /// Agent id of the woman for each vertex.
    pub vertex_agent: Vec<usize>,
}

impl Gadget {
    /// Comment block recording which agent stands for which edge or vertex.
    pub fn mapping_comment(&self, graph: &UndirectedGraph, r: usize) -> String {
        let mut out = format!(
            "# clique gadget: n={} m={} r={}\n",
            graph.n,
            graph.edges.len(),
            r
        );
        if self.trivial_no {
            out.push_str("# m < C(r,2): no r-clique possible; trivial no-instance\n");
            return out;
        }
        for (e, (&a, &(u, v))) in self.edge_agent.iter().zip(&graph.edges).enumerate() {
            out.push_str(&format!(
                "# edge {e} ({u},{v}) -> {}\n",
                self.instance.agent_name(a)
            ));
        }
        for (v, &a) in self.vertex_agent.iter().enumerate() {
            out.push_str(&format!("# vertex {v} -> {}\n", self.instance.agent_name(a)));
        }
        out
    }
}

fn binom2(r: usize) -> usize {
    r * r.saturating_sub(1) / 2
}

fn spec(side: Side, count: usize, groups: &[usize]) -> TypeSpec {
    TypeSpec {
        side,
        count,
        capacity: 1,
        pref: TypePreference::new(groups.iter().map(|&t| vec![t]).collect()),
    }
}

/// Builds the clique gadget for `(graph, r)`.
///
/// Types (0-based ids): 0 edge-men, 1 `r` men, 2 `n−r` men, 3 vertex-women,
/// 4 `C(r,2)` women, 5 `m−C(r,2)` women. Each edge-man finds the two
/// endpoint women exceptional, tied between types 5 and 4.
pub fn clique_to_com_smti(graph: &UndirectedGraph, r: usize) -> Result<Gadget, ReductionError> {
    let n = graph.n;
    let m = graph.edges.len();
    if r > n {
        return Err(ReductionError::RangeR { r, n });
    }
    let need = binom2(r);
    if m < need {
        let instance = TypedInstance::build(
            ProblemKind::Smti,
            vec![spec(Side::Man, 1, &[1]), spec(Side::Woman, 0, &[0])],
            Vec::new(),
            Vec::new(),
        )?;
        return Ok(Gadget {
            instance,
            trivial_no: true,
            edge_agent: Vec::new(),
            vertex_agent: Vec::new(),
        });
    }
    let types = vec![
        spec(Side::Man, m, &[5, 4, 3]),
        spec(Side::Man, r, &[3]),
        spec(Side::Man, n - r, &[3]),
        spec(Side::Woman, n, &[1, 0, 2]),
        spec(Side::Woman, need, &[0]),
        spec(Side::Woman, m - need, &[0]),
    ];
    let base = TypedInstance::build(ProblemKind::Smti, types, Vec::new(), Vec::new())?;
    let edge_agent = base.singles_of_type(0);
    let vertex_agent = base.singles_of_type(3);
    let exceptions = graph
        .edges
        .iter()
        .zip(&edge_agent)
        .flat_map(|(&(u, v), &man)| {
            [u, v].map(|w| ExceptionEntry {
                agent: man,
                candidate: vertex_agent[w],
                placement: Placement::TieBetween(5, 4),
            })
        })
        .collect();
    let instance = base.with_exceptions(exceptions)?;
    Ok(Gadget {
        instance,
        trivial_no: false,
        edge_agent,
        vertex_agent,
    })
}

/// Checks the reduction on one input: clique existence (exhaustive) must
/// equal complete-stable-matching existence in the gadget (brute force).
pub fn verify_reduction(graph: &UndirectedGraph, r: usize) -> Result<bool, ReductionError> {
    if graph.n > VERIFY_MAX_VERTICES {
        return Err(ReductionError::TooLarge(graph.n));
    }
    let gadget = clique_to_com_smti(graph, r)?;
    Ok(graph.has_clique(r) == oracle::com_stable_exists_brute(&gadget.instance))
}

/// Every simple graph on exactly `n` vertices (labelled), as edge subsets
/// of the complete graph.
pub fn all_graphs(n: usize) -> Vec<UndirectedGraph> {
    let all = UndirectedGraph::complete(n).edges;
    (0u64..1 << all.len())
        .map(|mask| UndirectedGraph {
            n,
            edges: all
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &e)| e)
                .collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(g: &Gadget) -> Vec<usize> {
        g.instance.types.iter().map(|t| t.count).collect()
    }

    #[test]
    fn triangle_r3() {
        let g = UndirectedGraph::complete(3);
        let gad = clique_to_com_smti(&g, 3).unwrap();
        assert_eq!(counts(&gad), vec![3, 3, 0, 3, 3, 0]);
        assert!(oracle::com_stable_exists_brute(&gad.instance));
        assert!(verify_reduction(&g, 3).unwrap());
    }

    #[test]
    fn path_r2() {
        let g = UndirectedGraph::new(3, vec![(0, 1), (1, 2)]).unwrap();
        let gad = clique_to_com_smti(&g, 2).unwrap();
        assert_eq!(counts(&gad), vec![2, 2, 1, 3, 1, 1]);
        assert!(oracle::com_stable_exists_brute(&gad.instance));
        assert!(verify_reduction(&g, 2).unwrap());
    }

    #[test]
    fn path_r3_is_no() {
        let g = UndirectedGraph::new(3, vec![(0, 1), (1, 2)]).unwrap();
        let gad = clique_to_com_smti(&g, 3).unwrap();
        assert!(gad.trivial_no);
        let g = UndirectedGraph::new(4, vec![(0, 1), (1, 2), (2, 3)]).unwrap();
        let gad = clique_to_com_smti(&g, 3).unwrap();
        assert!(!gad.trivial_no);
        assert!(!oracle::com_stable_exists_brute(&gad.instance));
    }

    #[test]
    fn k4_minus_edge_trivial() {
        let g = UndirectedGraph::new(4, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]).unwrap();
        let gad = clique_to_com_smti(&g, 4).unwrap();
        assert!(gad.trivial_no);
        assert!(!oracle::com_stable_exists_brute(&gad.instance));
        assert!(verify_reduction(&g, 4).unwrap());
    }

    #[test]
    fn empty_graph_r2() {
        let g = UndirectedGraph::new(3, Vec::new()).unwrap();
        assert!(clique_to_com_smti(&g, 2).unwrap().trivial_no);
        assert!(verify_reduction(&g, 2).unwrap());
    }

    #[test]
    fn structure() {
        let g = UndirectedGraph::new(4, vec![(0, 1), (1, 2), (2, 0), (2, 3)]).unwrap();
        let gad = clique_to_com_smti(&g, 3).unwrap();
        let inst = &gad.instance;
        assert!(inst.exceptions.iter().all(|e| inst.agent_type(e.agent) == 0));
        assert_eq!(inst.exceptions.len(), 2 * g.edges.len());
        let men = inst.types.iter().filter(|t| t.side == Side::Man).count();
        assert_eq!(men, 3);
        assert!(inst
            .types
            .iter()
            .all(|t| t.pref.groups.iter().all(|grp| grp.len() == 1)));
        let text = gad.mapping_comment(&g, 3);
        assert!(text.contains("edge 3 (2,3) -> m4"));
        assert!(text.contains("vertex 0 -> w1"));
    }

    #[test]
    fn errors() {
        assert!(matches!(
            clique_to_com_smti(&UndirectedGraph::complete(2), 3),
            Err(ReductionError::RangeR { .. })
        ));
        assert!(matches!(
            verify_reduction(&UndirectedGraph::complete(7), 2),
            Err(ReductionError::TooLarge(7))
        ));
        assert!(UndirectedGraph::new(2, vec![(0, 0)]).is_err());
        assert!(UndirectedGraph::new(2, vec![(0, 1), (1, 0)]).is_err());
        assert!(UndirectedGraph::parse("3 2\n0 1\n").is_err());
        let g = UndirectedGraph::parse("# tri\n3 3\n0 1\n1 2\n0 2\n").unwrap();
        assert!(g.has_clique(3));
    }

    #[test]
    fn sweep_up_to_four_vertices() {
        for n in 0..=4 {
            for g in all_graphs(n) {
                for r in 0..=n {
                    assert!(verify_reduction(&g, r).unwrap(), "n={n} {:?} r={r}", g.edges);
                }
            }
        }
    }
}
