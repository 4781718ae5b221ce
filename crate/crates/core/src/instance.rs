//! Typed instance data model.
//!
//! Types are 0-based internally (`0..k`); the file format and all
//! user-facing output are 1-based. Index `k` always denotes the implicit
//! dummy type that sits at the tail of every preference list.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Rank of an unacceptable type or agent.
pub const UNACCEPTABLE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProblemKind {
    Smti,
    Srti,
    Hrt,
    Hrc,
}

impl ProblemKind {
    pub fn is_bipartite(self) -> bool {
        !matches!(self, ProblemKind::Srti)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::Smti => "smti",
            ProblemKind::Srti => "srti",
            ProblemKind::Hrt => "hrt",
            ProblemKind::Hrc => "hrc",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Man,
    Woman,
    Hospital,
    Resident,
    /// Roommates agents and dummy agents.
    None,
}

impl Side {
    pub fn code(self) -> &'static str {
        match self {
            Side::Man => "m",
            Side::Woman => "w",
            Side::Hospital => "h",
            Side::Resident => "r",
            Side::None => "none",
        }
    }

    /// Prefix used for generated agent names.
    pub fn name_prefix(self) -> &'static str {
        match self {
            Side::None => "a",
            other => other.code(),
        }
    }
}

/// Ordered tie groups over type ids; types in no group are unacceptable.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypePreference {
    pub groups: Vec<Vec<usize>>,
}

impl TypePreference {
    pub fn new(groups: Vec<Vec<usize>>) -> Self {
        TypePreference { groups }
    }

    /// Rank of every type `0..=k` (index `k` is the dummy, ranked after all
    /// groups); unlisted types get [`UNACCEPTABLE`].
    pub fn rank_table(&self, k: usize) -> Vec<u32> {
        let mut r = vec![UNACCEPTABLE; k + 1];
        for (g, group) in self.groups.iter().enumerate() {
            for &t in group {
                r[t] = g as u32;
            }
        }
        r[k] = self.groups.len() as u32;
        r
    }

    pub fn contains(&self, t: usize) -> bool {
        self.groups.iter().any(|g| g.contains(&t))
    }

    pub fn group_of(&self, t: usize) -> Option<usize> {
        self.groups.iter().position(|g| g.contains(&t))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeSpec {
    pub side: Side,
    pub count: usize,
    /// Per-agent capacity; 1 except for hospitals.
    pub capacity: usize,
    pub pref: TypePreference,
}

/// Where an exceptional candidate is spliced into an agent's list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Placement {
    Top,
    Bottom,
    /// New group directly after the group containing the type.
    After(usize),
    /// New group between the groups containing the two (adjacent) types.
    TieBetween(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExceptionEntry {
    pub agent: usize,
    pub candidate: usize,
    pub placement: Placement,
}

/// A couple type `(first, second)` with `first <= second`, a joint
/// preference over ordered hospital-type pairs, and its couples.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoupleType {
    pub first: usize,
    pub second: usize,
    pub count: usize,
    pub pref: Vec<Vec<(usize, usize)>>,
    /// Agent ids `(first member, second member)` of each couple.
    pub members: Vec<(usize, usize)>,
}

impl CoupleType {
    /// Rank of a hospital-type pair; the all-dummy pair ranks after every
    /// listed pair, anything else is unacceptable.
    pub fn rank(&self, pair: (usize, usize), dummy: usize) -> u32 {
        if pair == (dummy, dummy) {
            return self.pref.len() as u32;
        }
        self.pref
            .iter()
            .position(|g| g.contains(&pair))
            .map_or(UNACCEPTABLE, |g| g as u32)
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum InstanceError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("{0}")]
    Semantic(String),
}

impl InstanceError {
    pub fn semantic(msg: impl Into<String>) -> Self {
        InstanceError::Semantic(msg.into())
    }
}

/// A validated typed instance, immutable once built.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypedInstance {
    pub kind: ProblemKind,
    pub types: Vec<TypeSpec>,
    /// Optional agent-level refinement per type (tie groups of agent ids).
    pub refinements: Vec<Option<Vec<Vec<usize>>>>,
    pub exceptions: Vec<ExceptionEntry>,
    pub couples: Vec<CoupleType>,
    /// Set by [`TypedInstance::normalize_with_dummies`].
    pub dummy_type: Option<usize>,
    agent_type: Vec<usize>,
    agent_names: Vec<String>,
    agent_couple: Vec<Option<usize>>,
    ranks: Vec<Vec<u32>>,
}

impl TypedInstance {
    /// Builds and validates an instance. `names[t]` gives the names of the
    /// single agents of type `t` (generated when empty); couple members are
    /// created after all single agents.
    pub fn build(
        kind: ProblemKind,
        types: Vec<TypeSpec>,
        names: Vec<Vec<String>>,
        couples: Vec<CoupleType>,
    ) -> Result<Self, InstanceError> {
        let inst = Self::assemble(kind, types, names, couples)?;
        inst.validate()?;
        Ok(inst)
    }

    /// [`TypedInstance::build`] without the final validation.
    fn assemble(
        kind: ProblemKind,
        types: Vec<TypeSpec>,
        names: Vec<Vec<String>>,
        couples: Vec<CoupleType>,
    ) -> Result<Self, InstanceError> {
        let k = types.len();
        if k == 0 {
            return Err(InstanceError::semantic("instance needs at least one type"));
        }
        let mut agent_type = Vec::new();
        let mut agent_names = Vec::new();
        let mut agent_couple = Vec::new();
        let mut counters = std::collections::HashMap::new();
        let mut next_name = |side: Side| {
            let c = counters.entry(side.name_prefix()).or_insert(0usize);
            *c += 1;
            format!("{}{}", side.name_prefix(), c)
        };
        for (t, spec) in types.iter().enumerate() {
            let given = names.get(t).filter(|v| !v.is_empty());
            if let Some(g) = given {
                if g.len() != spec.count {
                    return Err(InstanceError::semantic(format!(
                        "type {} lists {} names but count={}",
                        t + 1,
                        g.len(),
                        spec.count
                    )));
                }
            }
            for a in 0..spec.count {
                agent_type.push(t);
                agent_couple.push(None);
                agent_names.push(match given {
                    Some(g) => g[a].clone(),
                    None => next_name(spec.side),
                });
            }
        }
        let mut couples = couples;
        for (c, ct) in couples.iter_mut().enumerate() {
            ct.members.clear();
            for _ in 0..ct.count {
                let x = agent_type.len();
                agent_type.push(ct.first);
                agent_couple.push(Some(c));
                agent_names.push(next_name(Side::Resident));
                agent_type.push(ct.second);
                agent_couple.push(Some(c));
                agent_names.push(next_name(Side::Resident));
                ct.members.push((x, x + 1));
            }
        }
        let ranks = types.iter().map(|s| s.pref.rank_table(k)).collect();
        let inst = TypedInstance {
            kind,
            refinements: vec![None; k],
            exceptions: Vec::new(),
            couples,
            dummy_type: None,
            types,
            agent_type,
            agent_names,
            agent_couple,
            ranks,
        };
        Ok(inst)
    }

    /// Number of real types.
    pub fn k(&self) -> usize {
        self.types.len()
    }

    /// Index of the implicit dummy type.
    pub fn dummy(&self) -> usize {
        self.types.len()
    }

    /// Number of agents (including couple members).
    pub fn n(&self) -> usize {
        self.agent_type.len()
    }

    pub fn agent_type(&self, a: usize) -> usize {
        self.agent_type[a]
    }

    pub fn agent_name(&self, a: usize) -> &str {
        &self.agent_names[a]
    }

    pub fn agent_names(&self) -> &[String] {
        &self.agent_names
    }

    pub fn agent_by_name(&self, name: &str) -> Option<usize> {
        self.agent_names.iter().position(|n| n == name)
    }

    pub fn agent_couple(&self, a: usize) -> Option<usize> {
        self.agent_couple[a]
    }

    pub fn capacity_of_agent(&self, a: usize) -> usize {
        self.types[self.agent_type[a]].capacity
    }

    pub fn side_of_agent(&self, a: usize) -> Side {
        self.types[self.agent_type[a]].side
    }

    /// All agents of type `t`, singles first, then couple members.
    pub fn agents_of_type(&self, t: usize) -> Vec<usize> {
        (0..self.n()).filter(|&a| self.agent_type[a] == t).collect()
    }

    /// Single (non-coupled) agents of type `t`, in index order.
    pub fn singles_of_type(&self, t: usize) -> Vec<usize> {
        (0..self.n())
            .filter(|&a| self.agent_type[a] == t && self.agent_couple[a].is_none())
            .collect()
    }

    /// Rank type `i` gives to type `j` (`j == k` is the dummy).
    pub fn rank(&self, i: usize, j: usize) -> u32 {
        self.ranks[i][j]
    }

    /// `j ≻_i l`.
    pub fn prefers(&self, i: usize, j: usize, l: usize) -> bool {
        self.ranks[i][j] < self.ranks[i][l]
    }

    /// `j ⪰_i l`.
    pub fn weakly_prefers(&self, i: usize, j: usize, l: usize) -> bool {
        self.ranks[i][j] <= self.ranks[i][l]
    }

    pub fn acceptable(&self, i: usize, j: usize) -> bool {
        self.ranks[i][j] != UNACCEPTABLE
    }

    pub fn mutually_acceptable(&self, i: usize, j: usize) -> bool {
        self.acceptable(i, j) && self.acceptable(j, i)
    }

    /// Indifference class (tie group) of `j` in type `i`'s list.
    pub fn class_of(&self, i: usize, j: usize) -> Option<&[usize]> {
        let g = self.types[i].pref.group_of(j)?;
        Some(&self.types[i].pref.groups[g])
    }

    /// Total agent count of type `t` counting hospital capacity as seats.
    pub fn seats(&self, t: usize) -> usize {
        self.types[t].count * self.types[t].capacity
    }

    pub fn has_refinements(&self) -> bool {
        self.refinements.iter().any(Option::is_some)
    }

    pub fn has_exceptions(&self) -> bool {
        !self.exceptions.is_empty()
    }

    /// True when every type lists its acceptable types without ties.
    pub fn strict_type_preferences(&self) -> bool {
        self.types
            .iter()
            .all(|t| t.pref.groups.iter().all(|g| g.len() <= 1))
    }

    /// Largest number of exceptions held by one agent and whether all of
    /// them are placed at the top: `(c, all_top)`.
    pub fn exception_model(&self) -> (usize, bool) {
        let mut per_agent = vec![0usize; self.n()];
        for e in &self.exceptions {
            per_agent[e.agent] += 1;
        }
        let c = per_agent.into_iter().max().unwrap_or(0);
        let top = self
            .exceptions
            .iter()
            .all(|e| e.placement == Placement::Top);
        (c, top)
    }

    /// Attaches agent-level refinements and revalidates.
    pub fn with_refinements(
        mut self,
        refinements: Vec<Option<Vec<Vec<usize>>>>,
    ) -> Result<Self, InstanceError> {
        self.refinements = refinements;
        self.validate()?;
        Ok(self)
    }

    /// Attaches exception entries and revalidates.
    pub fn with_exceptions(mut self, exceptions: Vec<ExceptionEntry>) -> Result<Self, InstanceError> {
        self.exceptions = exceptions;
        self.validate()?;
        Ok(self)
    }

    /// Copy of the instance without refinements (the typed relaxation).
    pub fn typed_relaxation(&self) -> TypedInstance {
        let mut r = self.clone();
        r.refinements = vec![None; self.k()];
        r
    }

    /// Copy without exceptions.
    pub fn without_exceptions(&self) -> TypedInstance {
        let mut r = self.clone();
        r.exceptions.clear();
        r
    }

    /// Appends an explicit dummy type `k+1` at the tail of every list, with
    /// one side-neutral agent per unit of real capacity. Dummies accept every real type (indifferent)
    /// but not each other.
    pub fn normalize_with_dummies(&self) -> TypedInstance {
        assert!(self.dummy_type.is_none(), "instance already normalised");
        let k = self.k();
        let n = self.n();
        let slots: usize = (0..n).map(|a| self.types[self.agent_type[a]].capacity).sum();
        let mut types = self.types.clone();
        for t in &mut types {
            t.pref.groups.push(vec![k]);
        }
        types.push(TypeSpec {
            side: Side::None,
            count: slots,
            capacity: 1,
            pref: TypePreference::new(vec![(0..k).collect()]),
        });
        let mut names: Vec<Vec<String>> = (0..k)
            .map(|t| {
                self.singles_of_type(t)
                    .into_iter()
                    .map(|a| self.agent_names[a].clone())
                    .collect()
            })
            .collect();
        names.push((1..=slots).map(|i| format!("d{i}")).collect());
        // Agent ids of real singles are unchanged because dummies come after
        // all real single types; couple members shift by `slots`.
        let mut out = TypedInstance::assemble(self.kind, types, names, self.couples.clone())
            .expect("normalisation keeps the type structure");
        let shift = |a: usize| {
            if self.agent_couple[a].is_some() {
                a + slots
            } else {
                a
            }
        };
        out.refinements = self
            .refinements
            .iter()
            .map(|r| {
                r.as_ref().map(|groups| {
                    groups
                        .iter()
                        .map(|g| g.iter().map(|&a| shift(a)).collect())
                        .collect()
                })
            })
            .chain(std::iter::once(None))
            .collect();
        out.exceptions = self
            .exceptions
            .iter()
            .map(|e| ExceptionEntry {
                agent: shift(e.agent),
                candidate: shift(e.candidate),
                placement: e.placement,
            })
            .collect();
        out.dummy_type = Some(k);
        out.validate().expect("normalisation preserves validity");
        out
    }

    /// Checks every structural invariant.
    pub fn validate(&self) -> Result<(), InstanceError> {
        let k = self.k();
        let err = |m: String| Err(InstanceError::Semantic(m));
        let mut seen_names = BTreeSet::new();
        for name in &self.agent_names {
            if !seen_names.insert(name.as_str()) {
                return err(format!("duplicate agent name {name}"));
            }
        }
        for (t, spec) in self.types.iter().enumerate() {
            let id = t + 1;
            let mut seen = BTreeSet::new();
            for g in &spec.pref.groups {
                if g.is_empty() {
                    return err(format!("type {id}: empty tie group"));
                }
                for &j in g {
                    if j >= k {
                        return err(format!("type {id}: unknown type id {}", j + 1));
                    }
                    if !seen.insert(j) {
                        return err(format!("type {id}: type {} appears in two tie groups", j + 1));
                    }
                }
            }
            if seen.is_empty() {
                return err(format!("type {id}: finds no type acceptable"));
            }
            if spec.capacity == 0 {
                return err(format!("type {id}: capacity must be positive"));
            }
            if spec.capacity > 1 && spec.side != Side::Hospital {
                return err(format!("type {id}: only hospitals may have capacity > 1"));
            }
            let side_ok = match self.kind {
                ProblemKind::Smti => matches!(spec.side, Side::Man | Side::Woman),
                ProblemKind::Srti => spec.side == Side::None,
                ProblemKind::Hrt | ProblemKind::Hrc => {
                    matches!(spec.side, Side::Hospital | Side::Resident)
                }
            };
            let is_dummy = self.dummy_type == Some(t);
            if !side_ok && !is_dummy {
                return err(format!(
                    "type {id}: side '{}' not allowed in {}",
                    spec.side.code(),
                    self.kind.as_str()
                ));
            }
            if self.kind.is_bipartite() && !is_dummy {
                for &j in &seen {
                    if self.types[j].side == spec.side {
                        return err(format!(
                            "type {id}: same-side type {} in preference list",
                            j + 1
                        ));
                    }
                }
            }
        }
        self.validate_refinements()?;
        self.validate_exceptions()?;
        self.validate_couples()
    }

    fn validate_refinements(&self) -> Result<(), InstanceError> {
        if self.refinements.len() != self.k() {
            return Err(InstanceError::semantic("refinement table has wrong length"));
        }
        for (t, r) in self.refinements.iter().enumerate() {
            let Some(groups) = r else { continue };
            let id = t + 1;
            let pref = &self.types[t].pref;
            let mut seen = BTreeSet::new();
            // Type-level group index of each refined group, which must be
            // non-decreasing; a multi-type tie must be a union of whole types
            // forming exactly one type-level group.
            let mut last_group: Option<usize> = None;
            let mut finished_types = BTreeSet::new();
            let mut current_type: Option<usize> = None;
            for g in groups {
                if g.is_empty() {
                    return Err(InstanceError::semantic(format!(
                        "refine {id}: empty tie group"
                    )));
                }
                let mut types_here = BTreeSet::new();
                for &a in g {
                    if a >= self.n() {
                        return Err(InstanceError::semantic(format!(
                            "refine {id}: unknown agent index {a}"
                        )));
                    }
                    if !seen.insert(a) {
                        return Err(InstanceError::semantic(format!(
                            "refine {id}: agent {} listed twice",
                            self.agent_names[a]
                        )));
                    }
                    types_here.insert(self.agent_type[a]);
                }
                let mut tg = BTreeSet::new();
                for &u in &types_here {
                    match pref.group_of(u) {
                        Some(x) => {
                            tg.insert(x);
                        }
                        None => {
                            return Err(InstanceError::semantic(format!(
                                "refine {id}: agent of unacceptable type {}",
                                u + 1
                            )))
                        }
                    }
                }
                if tg.len() != 1 {
                    return Err(InstanceError::semantic(format!(
                        "refine {id}: tie mixes types from different type-level groups"
                    )));
                }
                let gidx = *tg.iter().next().unwrap();
                if last_group.is_some_and(|l| gidx < l) {
                    return Err(InstanceError::semantic(format!(
                        "refine {id}: order contradicts the type-level preference"
                    )));
                }
                last_group = Some(gidx);
                if types_here.len() > 1 {
                    for &u in &types_here {
                        let all: BTreeSet<usize> = self.agents_of_type(u).into_iter().collect();
                        let here: BTreeSet<usize> = g
                            .iter()
                            .copied()
                            .filter(|&a| self.agent_type[a] == u)
                            .collect();
                        if all != here {
                            return Err(InstanceError::semantic(format!(
                                "refine {id}: a tie spanning several types must contain all of type {}",
                                u + 1
                            )));
                        }
                    }
                }
                // Agents of one type must be contiguous.
                for &u in &types_here {
                    if finished_types.contains(&u) {
                        return Err(InstanceError::semantic(format!(
                            "refine {id}: agents of type {} are not contiguous",
                            u + 1
                        )));
                    }
                }
                if let Some(c) = current_type {
                    if !types_here.contains(&c) || types_here.len() > 1 {
                        finished_types.insert(c);
                    }
                }
                if types_here.len() == 1 {
                    current_type = types_here.iter().next().copied();
                } else {
                    finished_types.extend(types_here.iter().copied());
                    current_type = None;
                }
            }
            for (gi, g) in pref.groups.iter().enumerate() {
                if !g.iter().any(|&u| seen.iter().any(|&a| self.agent_type[a] == u))
                    && g.iter().any(|&u| self.types[u].count > 0)
                {
                    return Err(InstanceError::semantic(format!(
                        "refine {id}: type-level group {} has no listed agent",
                        gi + 1
                    )));
                }
            }
        }
        Ok(())
    }

    fn validate_exceptions(&self) -> Result<(), InstanceError> {
        for e in &self.exceptions {
            if e.agent >= self.n() || e.candidate >= self.n() {
                return Err(InstanceError::semantic("exception refers to unknown agent"));
            }
            let (a, b) = (&self.agent_names[e.agent], &self.agent_names[e.candidate]);
            if e.agent == e.candidate {
                return Err(InstanceError::semantic(format!(
                    "agent {a} cannot consider itself exceptional"
                )));
            }
            let ta = self.agent_type[e.agent];
            let tb = self.agent_type[e.candidate];
            if self.kind.is_bipartite() && self.types[ta].side == self.types[tb].side {
                return Err(InstanceError::semantic(format!(
                    "exception {a} -> {b} joins agents on the same side"
                )));
            }
            let pref = &self.types[ta].pref;
            match e.placement {
                Placement::Top | Placement::Bottom => {}
                Placement::After(t) => {
                    if !pref.contains(t) {
                        return Err(InstanceError::semantic(format!(
                            "exception {a} -> {b}: type {} not in {a}'s list",
                            t + 1
                        )));
                    }
                }
                Placement::TieBetween(t1, t2) => {
                    let (g1, g2) = (pref.group_of(t1), pref.group_of(t2));
                    match (g1, g2) {
                        (Some(x), Some(y)) if y == x + 1 => {}
                        _ => {
                            return Err(InstanceError::semantic(format!(
                                "exception {a} -> {b}: types {} and {} are not adjacent in {a}'s list",
                                t1 + 1,
                                t2 + 1
                            )))
                        }
                    }
                }
            }
        }
        let mut pairs = BTreeSet::new();
        for e in &self.exceptions {
            if !pairs.insert((e.agent, e.candidate)) {
                return Err(InstanceError::semantic(format!(
                    "duplicate exception {} -> {}",
                    self.agent_names[e.agent], self.agent_names[e.candidate]
                )));
            }
        }
        Ok(())
    }

    fn validate_couples(&self) -> Result<(), InstanceError> {
        if self.couples.is_empty() {
            return Ok(());
        }
        if self.kind != ProblemKind::Hrc {
            return Err(InstanceError::semantic("couples are only allowed in hrc"));
        }
        for ct in &self.couples {
            let label = format!("couple type ({},{})", ct.first + 1, ct.second + 1);
            for t in [ct.first, ct.second] {
                if t >= self.k() || self.types[t].side != Side::Resident {
                    return Err(InstanceError::semantic(format!(
                        "{label}: members must be resident types"
                    )));
                }
            }
            if ct.first > ct.second {
                return Err(InstanceError::semantic(format!("{label}: first > second")));
            }
            let mut seen = BTreeSet::new();
            for g in &ct.pref {
                for &(p, q) in g {
                    for h in [p, q] {
                        if h >= self.k() || self.types[h].side != Side::Hospital {
                            return Err(InstanceError::semantic(format!(
                                "{label}: pairs must reference hospital types"
                            )));
                        }
                    }
                    if !seen.insert((p, q)) {
                        return Err(InstanceError::semantic(format!(
                            "{label}: pair ({},{}) listed twice",
                            p + 1,
                            q + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for TypedInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::parse::write_instance(self))
    }
}
