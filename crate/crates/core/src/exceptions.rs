//! Typed marriage instances where each agent may promote one exceptional
//! candidate to the top of its list.
//!
//! Agents are split into subtypes by the best type (up to indifference)
//! that considers them exceptional. A matching is summarised per subtype by
//! its `exworst` value — the worst partner type received by a subtype agent
//! not matched to its own exceptional candidate, or "exceptional" when all
//! of them are. Stability is a pairwise test on these values; for each
//! stable candidate function the largest realising matching is found by
//! binary search over perfect-matching decisions on an agent graph padded
//! with dummy vertices.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::agents::expand_to_agent_level;
use crate::error::SolveError;
use crate::graphalg::{has_perfect_matching, max_matching, SimpleGraph};
use crate::instance::{ExceptionEntry, ProblemKind, TypeSpec, TypedInstance};
use crate::matching::AgentMatching;
use crate::par;
use crate::typed::{class_rep, Radix};

/// Subtype `base[J]`: `class` is the smallest type id of the indifference
/// class (for `base`) of the best types that consider the agent
/// exceptional, `None` when nobody does.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Subtype {
    pub base: usize,
    pub class: Option<usize>,
}

/// An `exworst` value: every agent matched to its exceptional candidate, or
/// a partner type (`k` is the dummy, i.e. unmatched).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExVal {
    Exceptional,
    Partner(usize),
}

/// `exworst` over the nonempty subtypes.
pub type ExWorst = BTreeMap<Subtype, ExVal>;

/// Rank of `v` for agents of type `i`; exceptional partners beat all types.
fn ex_rank(inst: &TypedInstance, i: usize, v: ExVal) -> i64 {
    match v {
        ExVal::Exceptional => -1,
        ExVal::Partner(j) => inst.rank(i, j) as i64,
    }
}

/// `ext(a)` per agent.
pub fn exceptional_candidates(inst: &TypedInstance) -> Vec<Option<usize>> {
    let mut ext = vec![None; inst.n()];
    for e in &inst.exceptions {
        ext[e.agent] = Some(e.candidate);
    }
    ext
}

fn check_model(inst: &TypedInstance) -> Result<(), SolveError> {
    if inst.kind != ProblemKind::Smti {
        return Err(SolveError::Unsupported(
            "the exception solver handles marriage instances only".into(),
        ));
    }
    if inst.has_refinements() || inst.dummy_type.is_some() {
        return Err(SolveError::Unsupported(
            "exceptions cannot be combined with refinements".into(),
        ));
    }
    let (c, top) = inst.exception_model();
    if c > 1 || !top {
        return Err(SolveError::Unsupported(format!(
            "only one top exception per agent has a solver (found up to {c}, all top: {top}); use the oracle"
        )));
    }
    Ok(())
}

/// Result of [`preprocess_mutual`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Preprocessed {
    pub reduced: TypedInstance,
    /// Mutually exceptional pairs, as agent ids of the original instance.
    pub forced: Vec<(usize, usize)>,
    /// Original id of each agent of `reduced`.
    pub original: Vec<usize>,
}

/// Removes every pair of agents that consider each other exceptional; each
/// such pair is matched in every stable matching and blocks with nobody
/// else. Exceptions pointing at removed agents are dropped.
pub fn preprocess_mutual(inst: &TypedInstance) -> Result<Preprocessed, SolveError> {
    let ext = exceptional_candidates(inst);
    let mut forced = Vec::new();
    let mut removed = vec![false; inst.n()];
    for (a, e) in ext.iter().enumerate() {
        if let Some(b) = *e {
            if a < b && ext[b] == Some(a) {
                forced.push((a, b));
                removed[a] = true;
                removed[b] = true;
            }
        }
    }
    if forced.is_empty() {
        return Ok(Preprocessed {
            reduced: inst.clone(),
            forced,
            original: (0..inst.n()).collect(),
        });
    }
    let k = inst.k();
    let mut names: Vec<Vec<String>> = vec![Vec::new(); k];
    let mut types: Vec<TypeSpec> = inst.types.clone();
    for t in 0..k {
        names[t] = inst
            .agents_of_type(t)
            .into_iter()
            .filter(|&a| !removed[a])
            .map(|a| inst.agent_name(a).to_string())
            .collect();
        types[t].count = names[t].len();
    }
    let reduced = TypedInstance::build(inst.kind, types, names, Vec::new())?;
    let id = |a: usize| {
        reduced
            .agent_by_name(inst.agent_name(a))
            .expect("kept agents keep their names")
    };
    let exceptions: Vec<ExceptionEntry> = inst
        .exceptions
        .iter()
        .filter(|e| !removed[e.agent] && !removed[e.candidate])
        .map(|e| ExceptionEntry {
            agent: id(e.agent),
            candidate: id(e.candidate),
            placement: e.placement,
        })
        .collect();
    let reduced = reduced.with_exceptions(exceptions)?;
    let original = (0..reduced.n())
        .map(|a| inst.agent_by_name(reduced.agent_name(a)).expect("same names"))
        .collect();
    Ok(Preprocessed {
        reduced,
        forced,
        original,
    })
}

/// Subtype of every agent. Admirers whose type the agent's type does not
/// accept are ignored: they can never be matched with it.
pub fn compute_subtypes(inst: &TypedInstance) -> Vec<Subtype> {
    let mut best: Vec<Option<usize>> = vec![None; inst.n()];
    for e in &inst.exceptions {
        let (x, y) = (e.candidate, e.agent);
        let (i, j) = (inst.agent_type(x), inst.agent_type(y));
        if !inst.acceptable(i, j) {
            continue;
        }
        if best[x].is_none_or(|b| inst.prefers(i, j, b)) {
            best[x] = Some(j);
        }
    }
    (0..inst.n())
        .map(|x| {
            let base = inst.agent_type(x);
            Subtype {
                base,
                class: best[x].map(|j| class_rep(inst, base, j)),
            }
        })
        .collect()
}

/// `exworst` induced by a matching: per nonempty subtype, the worst partner
/// type (smallest id among tied worst types) of an agent not matched to its
/// own exceptional candidate.
pub fn exworst_of_matching(inst: &TypedInstance, m: &AgentMatching) -> ExWorst {
    let k = inst.k();
    let ext = exceptional_candidates(inst);
    let subtypes = compute_subtypes(inst);
    let partner = m.partner_of(inst.n());
    let mut out = ExWorst::new();
    for x in 0..inst.n() {
        let s = subtypes[x];
        let i = s.base;
        let entry = out.entry(s).or_insert(ExVal::Exceptional);
        if partner[x].is_some() && partner[x] == ext[x] {
            continue;
        }
        let t = partner[x].map_or(k, |y| inst.agent_type(y));
        let worse = match *entry {
            ExVal::Exceptional => true,
            ExVal::Partner(w) => {
                inst.prefers(i, w, t) || (inst.rank(i, w) == inst.rank(i, t) && t < w)
            }
        };
        if worse {
            *entry = ExVal::Partner(t);
        }
    }
    out
}

/// Worst value per type derived from `exworst` (`None` for empty types).
fn derived_worst(inst: &TypedInstance, exworst: &ExWorst) -> Vec<Option<i64>> {
    let mut worst = vec![None; inst.k()];
    for (s, &v) in exworst {
        let r = ex_rank(inst, s.base, v);
        let w: &mut Option<i64> = &mut worst[s.base];
        *w = Some(w.map_or(r, |c| c.max(r)));
    }
    worst
}

/// The pairwise stability test on an `exworst` function: no types `i ≠ j`
/// prefer each other to their derived worst partners, and no `j`-agent
/// admired by class `cls_j(i)` has an `exworst` below `i`.
pub fn is_exception_stable(inst: &TypedInstance, exworst: &ExWorst) -> bool {
    let k = inst.k();
    let worst = derived_worst(inst, exworst);
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            if let (Some(wi), Some(wj)) = (worst[i], worst[j]) {
                if (inst.rank(i, j) as i64) < wi && (inst.rank(j, i) as i64) < wj {
                    return false;
                }
            }
            if inst.acceptable(j, i) {
                let s = Subtype {
                    base: j,
                    class: Some(class_rep(inst, j, i)),
                };
                if let Some(&v) = exworst.get(&s) {
                    if (inst.rank(j, i) as i64) < ex_rank(inst, j, v) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Perfect-matching graph deciding whether a matching of size at least `c`
/// realises `exworst`. Vertices `0..n` are agents, the rest are `n − 2c`
/// dummies forming one pool.
pub fn build_exception_graph(inst: &TypedInstance, exworst: &ExWorst, c: usize) -> Result<SimpleGraph, SolveError> {
    let n = inst.n();
    if 2 * c > n {
        return Err(SolveError::InfeasibleProfile(format!(
            "size {c} exceeds half of {n} agents"
        )));
    }
    let k = inst.k();
    let agents = expand_to_agent_level(inst);
    let ext = exceptional_candidates(inst);
    let subtypes = compute_subtypes(inst);
    let value = |x: usize| exworst.get(&subtypes[x]).copied();
    let in_class = |s: Subtype, t: usize| s.class == Some(class_rep(inst, s.base, t));
    let mut g = SimpleGraph::new(n + n - 2 * c);
    let add = |g: &mut SimpleGraph, u, v| g.add_edge(u, v).expect("simple edge");
    for x in 0..n {
        for y in x + 1..n {
            if !agents.mutually_acceptable(x, y) {
                continue;
            }
            let (sx, sy) = (subtypes[x], subtypes[y]);
            let (a, b) = (sx.base, sy.base);
            let (Some(vx), Some(vy)) = (value(x), value(y)) else { continue };
            let ok_plain = |i: usize, t: usize, v: ExVal| (inst.rank(i, t) as i64) <= ex_rank(inst, i, v);
            let value_in = |s: Subtype, v: ExVal| match v {
                ExVal::Partner(t) if t < k => in_class(s, t),
                _ => false,
            };
            let edge = if ext[x] == Some(y) {
                in_class(sy, a) && value_in(sy, vy)
            } else if ext[y] == Some(x) {
                in_class(sx, b) && value_in(sx, vx)
            } else {
                ok_plain(a, b, vx) && ok_plain(b, a, vy)
            };
            if edge {
                add(&mut g, x, y);
            }
        }
    }
    for d in n..g.n {
        for e in d + 1..g.n {
            add(&mut g, d, e);
        }
        for x in 0..n {
            if value(x) == Some(ExVal::Partner(k)) {
                add(&mut g, x, d);
            }
        }
    }
    Ok(g)
}

/// Largest matching realising `exworst`, by binary search on the size.
/// `None` when nothing realises it.
pub fn max_realising_exworst(inst: &TypedInstance, exworst: &ExWorst) -> Option<(usize, AgentMatching)> {
    let n = inst.n();
    let feasible = |c: usize| has_perfect_matching(&build_exception_graph(inst, exworst, c).expect("c ≤ n/2"));
    if !feasible(0) {
        return None;
    }
    let (mut lo, mut hi) = (0, n / 2);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let g = build_exception_graph(inst, exworst, lo).expect("c ≤ n/2");
    let mate = max_matching(&g);
    let pairs = (0..n).filter_map(|x| match mate[x] {
        Some(y) if y < n && x < y => Some((x, y)),
        _ => None,
    });
    let m = AgentMatching::new(pairs);
    debug_assert!(m.size() >= lo);
    Some((m.size(), m))
}

/// Candidate `exworst` values per nonempty subtype.
fn value_options(inst: &TypedInstance, subtypes: &[Subtype]) -> Vec<(Subtype, Vec<ExVal>)> {
    let k = inst.k();
    let ext = exceptional_candidates(inst);
    let mut members: BTreeMap<Subtype, Vec<usize>> = BTreeMap::new();
    for (x, &s) in subtypes.iter().enumerate() {
        members.entry(s).or_default().push(x);
    }
    members
        .into_iter()
        .map(|(s, xs)| {
            let i = s.base;
            let mut opts = Vec::new();
            if xs.iter().all(|&x| ext[x].is_some()) {
                opts.push(ExVal::Exceptional);
            }
            for g in &inst.types[i].pref.groups {
                if g.iter().any(|&t| inst.seats(t) > 0) {
                    opts.push(ExVal::Partner(*g.iter().min().expect("nonempty group")));
                }
            }
            opts.push(ExVal::Partner(k));
            (s, opts)
        })
        .collect()
}

/// Result of [`solve_1top_max_smti`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExceptionSolution {
    pub size: usize,
    /// Stable matching in the input instance (forced pairs included).
    pub matching: AgentMatching,
    pub forced: Vec<(usize, usize)>,
    /// `exworst` of the winning function, on the reduced instance.
    pub exworst: Vec<(Subtype, ExVal)>,
    /// Number of candidate functions enumerated.
    pub functions: usize,
}

/// Maximum stable matching of a marriage instance with at most one
/// top-placed exception per agent.
pub fn solve_1top_max_smti(inst: &TypedInstance) -> Result<ExceptionSolution, SolveError> {
    check_model(inst)?;
    let pre = preprocess_mutual(inst)?;
    let red = &pre.reduced;
    let subtypes = compute_subtypes(red);
    let options = value_options(red, &subtypes);
    let radix = Radix::new(options.iter().map(|(_, o)| o.len()).collect());
    let function = |idx: usize| -> ExWorst {
        options
            .iter()
            .zip(radix.digits(idx))
            .map(|((s, o), d)| (*s, o[d]))
            .collect()
    };
    let best = par::best_by_key(
        radix.total,
        |idx| {
            let f = function(idx);
            if !is_exception_stable(red, &f) {
                return None;
            }
            max_realising_exworst(red, &f)
        },
        |(size, _)| *size as i64,
    );
    let (idx, (_, m)) = best.ok_or(SolveError::NoStable)?;
    let pairs = m
        .pairs
        .iter()
        .map(|&(a, b)| (pre.original[a], pre.original[b]))
        .chain(pre.forced.iter().copied());
    let matching = AgentMatching::new(pairs);
    Ok(ExceptionSolution {
        size: matching.size(),
        matching,
        forced: pre.forced.clone(),
        exworst: function(idx).into_iter().collect(),
        functions: radix.total,
    })
}
