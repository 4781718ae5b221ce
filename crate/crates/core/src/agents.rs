//! Agent-level preference lists: expansion from types, and derivation of
//! the coarsest type partition from explicit lists.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::instance::{
    InstanceError, Placement, ProblemKind, Side, TypePreference, TypeSpec, TypedInstance,
    UNACCEPTABLE,
};

/// Explicit agent-level instance: every agent has a list of tie groups.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentInstance {
    pub names: Vec<String>,
    pub side: Vec<Side>,
    pub capacity: Vec<usize>,
    /// Type of each agent when the instance came from a typed one.
    pub agent_type: Vec<usize>,
    pub lists: Vec<Vec<Vec<usize>>>,
    rank: Vec<Vec<u32>>,
}

impl AgentInstance {
    /// Builds an instance from explicit lists; every agent is its own type.
    pub fn from_lists(
        names: Vec<String>,
        side: Vec<Side>,
        capacity: Vec<usize>,
        lists: Vec<Vec<Vec<usize>>>,
    ) -> Self {
        let n = names.len();
        assert!(side.len() == n && capacity.len() == n && lists.len() == n);
        Self::with_types(names, side, capacity, (0..n).collect(), lists)
    }

    fn with_types(
        names: Vec<String>,
        side: Vec<Side>,
        capacity: Vec<usize>,
        agent_type: Vec<usize>,
        lists: Vec<Vec<Vec<usize>>>,
    ) -> Self {
        let n = names.len();
        let mut rank = vec![vec![UNACCEPTABLE; n]; n];
        for (a, list) in lists.iter().enumerate() {
            for (g, group) in list.iter().enumerate() {
                for &b in group {
                    rank[a][b] = g as u32;
                }
            }
        }
        AgentInstance {
            names,
            side,
            capacity,
            agent_type,
            lists,
            rank,
        }
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    /// Position of `b` in `a`'s list (lower is better).
    pub fn rank(&self, a: usize, b: usize) -> u32 {
        self.rank[a][b]
    }

    /// Rank of being unmatched, worse than every acceptable agent.
    pub fn unmatched_rank(&self, a: usize) -> u32 {
        self.lists[a].len() as u32
    }

    pub fn acceptable(&self, a: usize, b: usize) -> bool {
        self.rank[a][b] != UNACCEPTABLE
    }

    pub fn mutually_acceptable(&self, a: usize, b: usize) -> bool {
        a != b && self.acceptable(a, b) && self.acceptable(b, a)
    }

    /// `b ≻_a c`, where `None` stands for being unmatched.
    pub fn prefers(&self, a: usize, b: usize, c: Option<usize>) -> bool {
        let rc = c.map_or(self.unmatched_rank(a), |c| self.rank[a][c]);
        self.acceptable(a, b) && self.rank[a][b] < rc
    }

    /// All mutually acceptable pairs `(a, b)` with `a < b`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        let mut out = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if self.mutually_acceptable(a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// True when swapping `x` and `y` maps every list onto itself.
    fn swap_is_automorphism(&self, x: usize, y: usize) -> bool {
        let sigma = |a: usize| {
            if a == x {
                y
            } else if a == y {
                x
            } else {
                a
            }
        };
        if self.side[x] != self.side[y] || self.capacity[x] != self.capacity[y] {
            return false;
        }
        (0..self.n()).all(|a| (0..self.n()).all(|b| self.rank[a][b] == self.rank[sigma(a)][sigma(b)]))
    }
}

/// Builds each agent's list from its type's preference, then applies
/// refinements and exceptions.
///
/// A refined type's agents use the refinement (minus themselves). An
/// exceptional candidate is removed from its type block and placed in a new
/// tie group at its placement; candidates of one agent that land at the same
/// position share a group.
pub fn expand_to_agent_level(inst: &TypedInstance) -> AgentInstance {
    let n = inst.n();
    let k = inst.k();
    let members: Vec<Vec<usize>> = (0..k).map(|t| inst.agents_of_type(t)).collect();
    let mut exceptions: BTreeMap<usize, Vec<(usize, Placement)>> = BTreeMap::new();
    for e in &inst.exceptions {
        exceptions
            .entry(e.agent)
            .or_default()
            .push((e.candidate, e.placement));
    }
    let mut lists = Vec::with_capacity(n);
    for x in 0..n {
        let t = inst.agent_type(x);
        let mut groups: Vec<Vec<usize>> = match &inst.refinements[t] {
            Some(r) => r.clone(),
            None => inst.types[t]
                .pref
                .groups
                .iter()
                .map(|g| g.iter().flat_map(|&u| members[u].iter().copied()).collect())
                .collect(),
        };
        for g in &mut groups {
            g.retain(|&a| a != x);
        }
        if let Some(ex) = exceptions.get(&x) {
            for g in &mut groups {
                g.retain(|a| !ex.iter().any(|(c, _)| c == a));
            }
            // Insertion point i means "before groups[i]". Unrefined lists
            // keep one (possibly empty) group per type group, so anchors on
            // empty types resolve by the type-level list.
            let refined = inst.refinements[t].is_some();
            let last_with = |ty: usize, groups: &[Vec<usize>]| {
                if !refined {
                    return inst.types[t].pref.group_of(ty);
                }
                groups
                    .iter()
                    .rposition(|g| g.iter().any(|&a| inst.agent_type(a) == ty))
            };
            let mut inserts: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for &(c, p) in ex {
                let at = match p {
                    Placement::Top => 0,
                    Placement::Bottom => groups.len(),
                    Placement::After(u) | Placement::TieBetween(u, _) => {
                        last_with(u, &groups).map_or(groups.len(), |i| i + 1)
                    }
                };
                inserts.entry(at).or_default().push(c);
            }
            for (at, mut cands) in inserts.into_iter().rev() {
                cands.sort_unstable();
                groups.insert(at, cands);
            }
        }
        groups.retain(|g| !g.is_empty());
        for g in &mut groups {
            g.sort_unstable();
        }
        lists.push(groups);
    }
    AgentInstance::with_types(
        inst.agent_names().to_vec(),
        (0..n).map(|a| inst.side_of_agent(a)).collect(),
        (0..n).map(|a| inst.capacity_of_agent(a)).collect(),
        (0..n).map(|a| inst.agent_type(a)).collect(),
        lists,
    )
}

/// Coarsest type partition of an agent-level instance.
///
/// Two agents share a type exactly when swapping them is an automorphism
/// of the preference structure (same side and capacity, identical lists
/// outside the pair, ranked equally by everyone else, and ranking each
/// other at the same position). This relation is an equivalence, so its
/// classes form the unique coarsest partition. Agent names are kept; agent
/// indices are regrouped type by type.
pub fn derive_types(kind: ProblemKind, agents: &AgentInstance) -> Result<TypedInstance, InstanceError> {
    let n = agents.n();
    let mut class_of = vec![usize::MAX; n];
    let mut reps: Vec<usize> = Vec::new();
    for x in 0..n {
        match reps.iter().position(|&r| agents.swap_is_automorphism(r, x)) {
            Some(c) => class_of[x] = c,
            None => {
                class_of[x] = reps.len();
                reps.push(x);
            }
        }
    }
    let k = reps.len();
    let mut members = vec![Vec::new(); k];
    for x in 0..n {
        members[class_of[x]].push(x);
    }
    let mut types = Vec::with_capacity(k);
    for &r in &reps {
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for g in &agents.lists[r] {
            let mut cls: Vec<usize> = g.iter().map(|&a| class_of[a]).collect();
            cls.sort_unstable();
            cls.dedup();
            groups.push(cls);
        }
        types.push(TypeSpec {
            side: agents.side[r],
            count: members[class_of[r]].len(),
            capacity: agents.capacity[r],
            pref: TypePreference::new(groups),
        });
    }
    let names = members
        .iter()
        .map(|m| m.iter().map(|&a| agents.names[a].clone()).collect())
        .collect();
    TypedInstance::build(kind, types, names, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_instance;

    fn example_one() -> TypedInstance {
        parse_instance(
            "problem smti\ntypes 4\n\
             type 1 side=m count=3 prefs=(2 3) 4\n\
             type 2 side=w count=2 prefs=1\n\
             type 3 side=w count=2 prefs=1\n\
             type 4 side=w count=3 prefs=1\n",
        )
        .unwrap()
    }

    #[test]
    fn men_get_tied_women_blocks() {
        let inst = example_one();
        let agents = expand_to_agent_level(&inst);
        for m in 0..3 {
            assert_eq!(agents.lists[m], vec![vec![3, 4, 5, 6], vec![7, 8, 9]]);
        }
        assert_eq!(agents.lists[3], vec![vec![0, 1, 2]]);
    }

    #[test]
    fn derive_merges_indistinguishable_women() {
        let inst = example_one();
        let agents = expand_to_agent_level(&inst);
        let derived = derive_types(ProblemKind::Smti, &agents).unwrap();
        // Women of types 2 and 3 are interchangeable, so the coarsest
        // partition merges them.
        assert_eq!(derived.k(), 3);
        let again = expand_to_agent_level(&derived);
        for a in 0..agents.n() {
            let b = again.names.iter().position(|x| *x == agents.names[a]).unwrap();
            let map = |g: &Vec<usize>| {
                let mut v: Vec<&str> = g.iter().map(|&x| again.names[x].as_str()).collect();
                v.sort_unstable();
                v
            };
            let orig: Vec<Vec<&str>> = agents.lists[a]
                .iter()
                .map(|g| {
                    let mut v: Vec<&str> = g.iter().map(|&x| agents.names[x].as_str()).collect();
                    v.sort_unstable();
                    v
                })
                .collect();
            let back: Vec<Vec<&str>> = again.lists[b].iter().map(map).collect();
            assert_eq!(orig, back);
        }
    }

    #[test]
    fn distinct_lists_force_distinct_types() {
        let names = ["m1", "m2", "w1", "w2"].map(String::from).to_vec();
        let side = vec![Side::Man, Side::Man, Side::Woman, Side::Woman];
        let lists = vec![
            vec![vec![2], vec![3]],
            vec![vec![3], vec![2]],
            vec![vec![0, 1]],
            vec![vec![0, 1]],
        ];
        let agents = AgentInstance::from_lists(names, side, vec![1; 4], lists);
        let derived = derive_types(ProblemKind::Smti, &agents).unwrap();
        assert!(derived.k() >= 3);
    }

    #[test]
    fn exceptions_are_spliced() {
        let inst = parse_instance(
            "problem smti\ntypes 3\n\
             type 1 side=m count=1 prefs=2 3\n\
             type 2 side=w count=1 prefs=1\n\
             type 3 side=w count=2 prefs=1\n\
             except agent=m1 cand=w3 place=top\n",
        )
        .unwrap();
        let agents = expand_to_agent_level(&inst);
        assert_eq!(agents.lists[0], vec![vec![3], vec![1], vec![2]]);
    }
}
