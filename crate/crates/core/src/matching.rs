//! Agent-level matchings, their validation, and the `pair` text format.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::AgentInstance;
use crate::instance::TypedInstance;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum MatchingError {
    #[error("agent {0} exceeds its capacity")]
    Capacity(String),
    #[error("pair ({0}, {1}) is not mutually acceptable")]
    Unacceptable(String, String),
    #[error("pair ({0}, {0}) matches an agent with itself")]
    SelfPair(String),
    #[error("pair ({0}, {1}) listed twice")]
    Duplicate(String, String),
    #[error("line {0}: {1}")]
    Syntax(usize, String),
    #[error("unknown agent '{0}'")]
    UnknownAgent(String),
    #[error("couple ({0}, {1}): {2}")]
    Couple(String, String, String),
}

/// A set of unordered agent pairs, kept sorted with `a < b` in each pair.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AgentMatching {
    pub pairs: Vec<(usize, usize)>,
}

impl AgentMatching {
    pub fn new(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut pairs: Vec<(usize, usize)> = pairs
            .into_iter()
            .map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
            .collect();
        pairs.sort_unstable();
        AgentMatching { pairs }
    }

    pub fn size(&self) -> usize {
        self.pairs.len()
    }

    /// Partners of every agent.
    pub fn partners(&self, n: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); n];
        for &(a, b) in &self.pairs {
            out[a].push(b);
            out[b].push(a);
        }
        out
    }

    /// Partner of each capacity-1 agent (first partner for hospitals).
    pub fn partner_of(&self, n: usize) -> Vec<Option<usize>> {
        self.partners(n).into_iter().map(|p| p.first().copied()).collect()
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        let p = if a <= b { (a, b) } else { (b, a) };
        self.pairs.binary_search(&p).is_ok()
    }

    pub fn union(&self, other: &AgentMatching) -> AgentMatching {
        AgentMatching::new(self.pairs.iter().chain(&other.pairs).copied())
    }

    /// Checks capacities, mutual acceptability and duplicates.
    pub fn validate(&self, agents: &AgentInstance) -> Result<(), MatchingError> {
        let name = |a: usize| agents.names[a].clone();
        let mut load = vec![0usize; agents.n()];
        for (i, &(a, b)) in self.pairs.iter().enumerate() {
            if a == b {
                return Err(MatchingError::SelfPair(name(a)));
            }
            if i > 0 && self.pairs[i - 1] == (a, b) {
                return Err(MatchingError::Duplicate(name(a), name(b)));
            }
            if !agents.mutually_acceptable(a, b) {
                return Err(MatchingError::Unacceptable(name(a), name(b)));
            }
            for x in [a, b] {
                load[x] += 1;
                if load[x] > agents.capacity[x] {
                    return Err(MatchingError::Capacity(name(x)));
                }
            }
        }
        Ok(())
    }

    /// Renders `pair a b` lines (names), sorted by pair.
    pub fn render_pairs(&self, names: &[String]) -> String {
        let mut out = String::new();
        for &(a, b) in &self.pairs {
            let _ = writeln!(out, "pair {} {}", names[a], names[b]);
        }
        out
    }

    /// Reads `pair a b` lines; other lines (e.g. `size`) are ignored.
    pub fn parse(text: &str, inst: &TypedInstance) -> Result<AgentMatching, MatchingError> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            let mut words = line.split_whitespace();
            match words.next() {
                Some("pair") => {}
                Some("size") | Some("blocking_pairs") | Some("blocking_agents") | None => continue,
                Some(other) => {
                    return Err(MatchingError::Syntax(i + 1, format!("unexpected '{other}'")))
                }
            }
            let (Some(a), Some(b), None) = (words.next(), words.next(), words.next()) else {
                return Err(MatchingError::Syntax(i + 1, "expected 'pair <a> <b>'".into()));
            };
            let id = |s: &str| {
                inst.agent_by_name(s)
                    .ok_or_else(|| MatchingError::UnknownAgent(s.to_string()))
            };
            pairs.push((id(a)?, id(b)?));
        }
        Ok(AgentMatching::new(pairs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::expand_to_agent_level;
    use crate::parse::parse_instance;

    #[test]
    fn validation_catches_violations() {
        let inst = parse_instance(
            "problem smti\ntypes 2\ntype 1 side=m count=2 prefs=2\ntype 2 side=w count=1 prefs=1\n",
        )
        .unwrap();
        let agents = expand_to_agent_level(&inst);
        assert!(AgentMatching::new([(0, 2)]).validate(&agents).is_ok());
        assert_eq!(
            AgentMatching::new([(0, 2), (1, 2)]).validate(&agents),
            Err(MatchingError::Capacity("w1".into()))
        );
        assert!(matches!(
            AgentMatching::new([(0, 1)]).validate(&agents),
            Err(MatchingError::Unacceptable(..))
        ));
        let m = AgentMatching::parse("pair w1 m2\nsize 1\n", &inst).unwrap();
        assert_eq!(m.pairs, vec![(1, 2)]);
        assert_eq!(m.render_pairs(inst.agent_names()), "pair m2 w1\n");
    }
}
