//! Exhaustive reference solvers.
//!
//! Everything here works on explicit agent-level lists and enumerates
//! matchings directly; it is the ground truth the typed solvers are tested
//! against. Enumeration is capped (10 agents, 12 for bipartite kinds; the
//! `STM_ORACLE_CAP` environment variable overrides both).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{expand_to_agent_level, AgentInstance};
use crate::graphalg::{max_matching, SimpleGraph};
use crate::hrc;
use crate::instance::{ProblemKind, TypedInstance};
use crate::matching::{AgentMatching, MatchingError};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance has {n} agents, above the enumeration cap of {cap}")]
    CapExceeded { n: usize, cap: usize },
    #[error(transparent)]
    Matching(#[from] MatchingError),
}

/// A couple-involving blocking coalition in HRC.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Coalition {
    /// Case label, e.g. `"2a"` or `"3d"`.
    pub case: String,
    pub residents: (usize, usize),
    pub hospitals: (usize, usize),
}

/// Blocking pairs of a matching and the agents involved in them.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockingReport {
    /// Agent pairs `(a, b)`, `a < b`, sorted.
    pub blocking_pairs: Vec<(usize, usize)>,
    /// HRC blocks that involve a couple.
    pub coalitions: Vec<Coalition>,
    /// Agents in at least one blocking pair or coalition, sorted.
    pub blocking_agents: Vec<usize>,
}

impl BlockingReport {
    pub fn is_stable(&self) -> bool {
        self.blocking_pairs.is_empty() && self.coalitions.is_empty()
    }

    pub(crate) fn finish(mut self) -> Self {
        self.blocking_pairs.sort_unstable();
        self.blocking_pairs.dedup();
        self.coalitions.sort();
        self.coalitions.dedup();
        let mut agents: Vec<usize> = self
            .blocking_pairs
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .chain(self.coalitions.iter().flat_map(|c| {
                [c.residents.0, c.residents.1, c.hospitals.0, c.hospitals.1]
            }))
            .collect();
        agents.sort_unstable();
        agents.dedup();
        self.blocking_agents = agents;
        self
    }
}

/// Enumeration caps `(general, bipartite)`.
pub fn caps() -> (usize, usize) {
    match std::env::var("STM_ORACLE_CAP")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
    {
        Some(c) => (c, c),
        None => (10, 12),
    }
}

fn check_cap(inst: &TypedInstance) -> Result<(), OracleError> {
    let (general, bipartite) = caps();
    let cap = if inst.kind.is_bipartite() { bipartite } else { general };
    if inst.n() > cap {
        return Err(OracleError::CapExceeded { n: inst.n(), cap });
    }
    Ok(())
}

/// Per-agent acceptance threshold: `b` is wanted by `a` iff
/// `rank(a, b) < threshold[a]`.
fn thresholds(agents: &AgentInstance, partners: &[Vec<usize>]) -> Vec<u32> {
    (0..agents.n())
        .map(|a| {
            if partners[a].len() < agents.capacity[a] {
                agents.unmatched_rank(a)
            } else {
                partners[a].iter().map(|&b| agents.rank(a, b)).max().unwrap()
            }
        })
        .collect()
}

/// Blocking pairs of `m` under explicit lists (no couples).
///
/// `(a, b) ∉ M` blocks when both find each other acceptable and each
/// either has a free seat or strictly prefers the other to its worst
/// current partner.
pub fn agent_blocking_report(
    agents: &AgentInstance,
    m: &AgentMatching,
) -> Result<BlockingReport, MatchingError> {
    m.validate(agents)?;
    let partners = m.partners(agents.n());
    let thr = thresholds(agents, &partners);
    let mut report = BlockingReport::default();
    for (a, b) in agents.edges() {
        if !m.contains(a, b) && agents.rank(a, b) < thr[a] && agents.rank(b, a) < thr[b] {
            report.blocking_pairs.push((a, b));
        }
    }
    Ok(report.finish())
}

/// Blocking report of `m` in `inst`, honouring refinements, exceptions and
/// (for HRC) the couple cases.
pub fn blocking_report(inst: &TypedInstance, m: &AgentMatching) -> Result<BlockingReport, MatchingError> {
    let agents = expand_to_agent_level(inst);
    if inst.kind == ProblemKind::Hrc {
        hrc::blocking_report(inst, &agents, m)
    } else {
        agent_blocking_report(&agents, m)
    }
}

/// Expanded instance plus a fast stability test reused across many
/// matchings of one instance.
pub struct Checker<'a> {
    pub inst: &'a TypedInstance,
    pub agents: AgentInstance,
    edges: Vec<(usize, usize)>,
}

impl<'a> Checker<'a> {
    pub fn new(inst: &'a TypedInstance) -> Self {
        let agents = expand_to_agent_level(inst);
        let edges = agents.edges();
        Checker { inst, agents, edges }
    }

    pub fn report(&self, m: &AgentMatching) -> Result<BlockingReport, MatchingError> {
        if self.inst.kind == ProblemKind::Hrc {
            hrc::blocking_report(self.inst, &self.agents, m)
        } else {
            agent_blocking_report(&self.agents, m)
        }
    }

    pub fn is_stable(&self, m: &AgentMatching) -> bool {
        if self.inst.kind == ProblemKind::Hrc {
            return self.report(m).is_ok_and(|r| r.is_stable());
        }
        let partners = m.partners(self.agents.n());
        let thr = thresholds(&self.agents, &partners);
        !self.edges.iter().any(|&(a, b)| {
            !m.contains(a, b)
                && self.agents.rank(a, b) < thr[a]
                && self.agents.rank(b, a) < thr[b]
        })
    }

    /// Every matching of the instance (couples assigned jointly in HRC),
    /// in a fixed order.
    pub fn matchings(&self) -> Result<Vec<AgentMatching>, OracleError> {
        check_cap(self.inst)?;
        if self.inst.kind == ProblemKind::Hrc {
            return Ok(hrc::enumerate_matchings(self.inst, &self.agents));
        }
        let mut out = Vec::new();
        let mut load = vec![0usize; self.agents.n()];
        let mut chosen = Vec::new();
        self.extend(0, &mut load, &mut chosen, &mut out);
        Ok(out)
    }

    fn extend(
        &self,
        e: usize,
        load: &mut Vec<usize>,
        chosen: &mut Vec<(usize, usize)>,
        out: &mut Vec<AgentMatching>,
    ) {
        if e == self.edges.len() {
            out.push(AgentMatching::new(chosen.iter().copied()));
            return;
        }
        self.extend(e + 1, load, chosen, out);
        let (a, b) = self.edges[e];
        if load[a] < self.agents.capacity[a] && load[b] < self.agents.capacity[b] {
            load[a] += 1;
            load[b] += 1;
            chosen.push((a, b));
            self.extend(e + 1, load, chosen, out);
            chosen.pop();
            load[a] -= 1;
            load[b] -= 1;
        }
    }
}

/// Every matching of `inst` (including the empty one), each exactly once.
pub fn enumerate_matchings(inst: &TypedInstance) -> Result<Vec<AgentMatching>, OracleError> {
    Checker::new(inst).matchings()
}

/// Every stable matching of `inst`.
pub fn all_stable_matchings(inst: &TypedInstance) -> Result<Vec<AgentMatching>, OracleError> {
    let c = Checker::new(inst);
    Ok(c.matchings()?.into_iter().filter(|m| c.is_stable(m)).collect())
}

/// Largest stable matching, or `None` when no stable matching exists.
pub fn max_stable_brute(inst: &TypedInstance) -> Result<Option<(usize, AgentMatching)>, OracleError> {
    let c = Checker::new(inst);
    let mut best: Option<AgentMatching> = None;
    for m in c.matchings()? {
        if best.as_ref().is_some_and(|b| b.size() >= m.size()) {
            continue;
        }
        if c.is_stable(&m) {
            best = Some(m);
        }
    }
    Ok(best.map(|m| (m.size(), m)))
}

fn min_by_report(
    inst: &TypedInstance,
    require_max_size: bool,
    measure: impl Fn(&BlockingReport) -> usize,
) -> Result<(usize, AgentMatching), OracleError> {
    let c = Checker::new(inst);
    let all = c.matchings()?;
    let max_size = all.iter().map(AgentMatching::size).max().unwrap_or(0);
    let mut best: Option<(usize, AgentMatching)> = None;
    for m in all {
        if require_max_size && m.size() != max_size {
            continue;
        }
        let v = measure(&c.report(&m)?);
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, m));
        }
    }
    Ok(best.expect("the enumeration always contains a matching"))
}

/// Fewest blocking pairs over all matchings (over maximum-cardinality ones
/// when `require_max_size`).
pub fn min_bp_brute(inst: &TypedInstance, require_max_size: bool) -> Result<(usize, AgentMatching), OracleError> {
    min_by_report(inst, require_max_size, |r| r.blocking_pairs.len())
}

/// Fewest blocking agents, as [`min_bp_brute`].
pub fn min_ba_brute(inst: &TypedInstance, require_max_size: bool) -> Result<(usize, AgentMatching), OracleError> {
    min_by_report(inst, require_max_size, |r| r.blocking_agents.len())
}

/// Some matching with exactly `z` blocking pairs.
pub fn exact_bp_brute(inst: &TypedInstance, z: usize) -> Result<Option<AgentMatching>, OracleError> {
    let c = Checker::new(inst);
    for m in c.matchings()? {
        if c.report(&m)?.blocking_pairs.len() == z {
            return Ok(Some(m));
        }
    }
    Ok(None)
}

/// Largest matching ignoring stability (exhaustive).
pub fn max_cardinality_brute(inst: &TypedInstance) -> Result<usize, OracleError> {
    Ok(enumerate_matchings(inst)?
        .iter()
        .map(AgentMatching::size)
        .max()
        .unwrap_or(0))
}

/// Whether a stable matching covering every agent exists (bipartite,
/// capacity 1).
///
/// Backtracks over the agents of the first side in index order. Partial
/// assignments are pruned when two already-matched agents block, or when
/// the remaining agents admit no perfect matching. Interchangeable agents
/// (swapping them is an automorphism of all lists) are tried only once per
/// node, which keeps gadget instances with ~30 agents tractable.
pub fn com_stable_exists_brute(inst: &TypedInstance) -> bool {
    com_stable_witness(inst).is_some()
}

/// A complete stable matching, if one exists; see [`com_stable_exists_brute`].
pub fn com_stable_witness(inst: &TypedInstance) -> Option<AgentMatching> {
    let agents = expand_to_agent_level(inst);
    let n = agents.n();
    if n == 0 {
        return Some(AgentMatching::default());
    }
    assert!(
        agents.capacity.iter().all(|&c| c == 1),
        "complete-matching search expects capacity-1 agents"
    );
    let first_side = agents.side[0];
    let left: Vec<usize> = (0..n).filter(|&a| agents.side[a] == first_side).collect();
    let right: Vec<usize> = (0..n).filter(|&a| agents.side[a] != first_side).collect();
    if left.len() != right.len() {
        return None;
    }
    // Clone classes among right-side agents (value symmetry); only
    // contiguous index ranges are used so the lowest free member can stand
    // for the whole class.
    let clone_of = clone_classes(&agents);
    let mut search = ComSearch {
        agents: &agents,
        left,
        right,
        clone_of,
        partner: vec![None; n],
    };
    if search.go(0) {
        let pairs = search
            .left
            .iter()
            .map(|&a| (a, search.partner[a].unwrap()))
            .collect::<Vec<_>>();
        let m = AgentMatching::new(pairs);
        debug_assert!(agent_blocking_report(&agents, &m).unwrap().is_stable());
        Some(m)
    } else {
        None
    }
}

/// Representative of each agent's clone class: the smallest index `r` such
/// that `r..=a` are pairwise swappable.
fn clone_classes(agents: &AgentInstance) -> Vec<usize> {
    let n = agents.n();
    let mut rep: Vec<usize> = (0..n).collect();
    for a in 1..n {
        let r = rep[a - 1];
        if swappable(agents, r, a) {
            rep[a] = r;
        }
    }
    rep
}

fn swappable(agents: &AgentInstance, x: usize, y: usize) -> bool {
    if agents.side[x] != agents.side[y] || agents.capacity[x] != agents.capacity[y] {
        return false;
    }
    let s = |a: usize| if a == x { y } else if a == y { x } else { a };
    (0..agents.n()).all(|a| (0..agents.n()).all(|b| agents.rank(a, b) == agents.rank(s(a), s(b))))
}

struct ComSearch<'a> {
    agents: &'a AgentInstance,
    left: Vec<usize>,
    right: Vec<usize>,
    clone_of: Vec<usize>,
    partner: Vec<Option<usize>>,
}

impl ComSearch<'_> {
    fn go(&mut self, i: usize) -> bool {
        if i == self.left.len() {
            return true;
        }
        if !self.completable(i) {
            return false;
        }
        let a = self.left[i];
        // Clone agents on the left take partners in increasing index order.
        let floor = if i > 0 && self.clone_of[a] == self.clone_of[self.left[i - 1]] {
            self.partner[self.left[i - 1]].map_or(0, |p| p + 1)
        } else {
            0
        };
        let mut tried_class = Vec::new();
        for idx in 0..self.right.len() {
            let b = self.right[idx];
            if b < floor || self.partner[b].is_some() || !self.agents.mutually_acceptable(a, b) {
                continue;
            }
            if tried_class.contains(&self.clone_of[b]) {
                continue;
            }
            tried_class.push(self.clone_of[b]);
            if !self.consistent(a, b, i) {
                continue;
            }
            self.partner[a] = Some(b);
            self.partner[b] = Some(a);
            if self.go(i + 1) {
                return true;
            }
            self.partner[a] = None;
            self.partner[b] = None;
        }
        false
    }

    /// No blocking pair among fully decided agents after adding `(a, b)`.
    fn consistent(&self, a: usize, b: usize, i: usize) -> bool {
        let ag = self.agents;
        for &x in &self.left[..i] {
            let y = self.partner[x].unwrap();
            // (a, y): a prefers y to b and y prefers a to x.
            if ag.mutually_acceptable(a, y)
                && ag.rank(a, y) < ag.rank(a, b)
                && ag.rank(y, a) < ag.rank(y, x)
            {
                return false;
            }
            // (x, b): x prefers b to y and b prefers x to a.
            if ag.mutually_acceptable(x, b)
                && ag.rank(x, b) < ag.rank(x, y)
                && ag.rank(b, x) < ag.rank(b, a)
            {
                return false;
            }
        }
        true
    }

    /// The undecided agents still admit a perfect matching.
    fn completable(&self, i: usize) -> bool {
        let rest_l: Vec<usize> = self.left[i..].to_vec();
        let rest_r: Vec<usize> = self
            .right
            .iter()
            .copied()
            .filter(|&b| self.partner[b].is_none())
            .collect();
        let mut g = SimpleGraph::new(rest_l.len() + rest_r.len());
        for (u, &a) in rest_l.iter().enumerate() {
            for (v, &b) in rest_r.iter().enumerate() {
                if self.agents.mutually_acceptable(a, b) {
                    g.add_edge(u, rest_l.len() + v).unwrap();
                }
            }
        }
        crate::graphalg::matching_size(&max_matching(&g)) == rest_l.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_instance;

    fn two_by_two() -> TypedInstance {
        parse_instance(
            "problem smti\ntypes 4\n\
             type 1 side=m count=1 prefs=3 4\n\
             type 2 side=m count=1 prefs=3 4\n\
             type 3 side=w count=1 prefs=(1 2)\n\
             type 4 side=w count=1 prefs=(1 2)\n",
        )
        .unwrap()
    }

    #[test]
    fn matching_counts() {
        assert_eq!(enumerate_matchings(&two_by_two()).unwrap().len(), 7);
        let one = parse_instance("problem smti\ntypes 2\ntype 1 side=m count=1 prefs=2\ntype 2 side=w count=1 prefs=1\n").unwrap();
        assert_eq!(enumerate_matchings(&one).unwrap().len(), 2);
        assert_eq!(max_stable_brute(&one).unwrap().unwrap().0, 1);
        assert!(com_stable_exists_brute(&one));
    }

    #[test]
    fn odd_roommates_cycle_has_no_stable_matching() {
        let inst = parse_instance(
            "problem srti\ntypes 3\n\
             type 1 side=none count=1 names=a prefs=2 3\n\
             type 2 side=none count=1 names=b prefs=3 1\n\
             type 3 side=none count=1 names=c prefs=1 2\n",
        )
        .unwrap();
        assert_eq!(enumerate_matchings(&inst).unwrap().len(), 4);
        assert_eq!(max_stable_brute(&inst).unwrap(), None);
    }

    #[test]
    fn empty_matching_is_blocked() {
        let inst = two_by_two();
        let r = blocking_report(&inst, &AgentMatching::default()).unwrap();
        assert_eq!(r.blocking_pairs.len(), 4);
        assert_eq!(r.blocking_agents, vec![0, 1, 2, 3]);
        // m1 would rather have w1, but w1 is indifferent between the men.
        let m = AgentMatching::new([(0, 3), (1, 2)]);
        assert!(blocking_report(&inst, &m).unwrap().is_stable());
    }

    #[test]
    fn size_one_matchings_have_one_blocking_pair() {
        let inst = parse_instance(
            "problem smti\ntypes 2\ntype 1 side=w count=2 prefs=2\ntype 2 side=m count=2 prefs=1\n",
        )
        .unwrap();
        let c = Checker::new(&inst);
        let best = c
            .matchings()
            .unwrap()
            .into_iter()
            .filter(|m| m.size() == 1)
            .map(|m| c.report(&m).unwrap().blocking_pairs.len())
            .min();
        assert_eq!(best, Some(1));
        assert_eq!(exact_bp_brute(&inst, 1_000_000).unwrap(), None);
    }

    #[test]
    fn cap_is_enforced() {
        let inst = parse_instance("problem srti\ntypes 1\ntype 1 side=none count=11 prefs=1\n").unwrap();
        assert!(matches!(
            enumerate_matchings(&inst),
            Err(OracleError::CapExceeded { n: 11, .. })
        ));
    }
}
