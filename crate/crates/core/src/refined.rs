//! Consistently refined instances: agents of one type share an agent-level
//! list that refines the type-level preference inside each type.
//!
//! Every typed solver lifts: solve the typed relaxation (refinements
//! dropped), then realise its type-count matrix as a concrete matching by
//! giving each type's best-ranked agents to the partner types that rank
//! them, and pairing the selected groups rank by rank. The realised
//! matching has the same counts and no blocking pair beyond those of the
//! relaxation.
//!
//! Hospitals are handled as seat units: a hospital of capacity `q` is `q`
//! tied copies of itself.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::SolveError;
use crate::instance::TypedInstance;
use crate::matching::AgentMatching;
use crate::oracle::{self, OracleError};
use crate::quality::{self, QualityOutcome, TypeSignature};
use crate::typed::{self, Solved, TypeCountMatrix};

/// Agent-level position table: `pos[j][a]` is the tie-group index of agent
/// `a` in the list shared by type `j`, `None` when `a` is not listed.
struct Positions {
    pos: Vec<Vec<Option<u32>>>,
}

impl Positions {
    fn new(inst: &TypedInstance) -> Self {
        let n = inst.n();
        let pos = (0..inst.k())
            .map(|j| {
                let mut p = vec![None; n];
                match &inst.refinements[j] {
                    Some(groups) => {
                        for (g, members) in groups.iter().enumerate() {
                            for &a in members {
                                p[a] = Some(g as u32);
                            }
                        }
                    }
                    None => {
                        for (g, types) in inst.types[j].pref.groups.iter().enumerate() {
                            for &t in types {
                                for a in inst.agents_of_type(t) {
                                    p[a] = Some(g as u32);
                                }
                            }
                        }
                    }
                }
                p
            })
            .collect();
        Positions { pos }
    }

    fn of(&self, j: usize, a: usize) -> Option<u32> {
        self.pos[j][a]
    }
}

/// A seat: `(agent, copy)`.
type Unit = (usize, usize);

fn units_of_type(inst: &TypedInstance, t: usize) -> Vec<Unit> {
    inst.agents_of_type(t)
        .into_iter()
        .flat_map(|a| (0..inst.capacity_of_agent(a)).map(move |c| (a, c)))
        .collect()
}

fn check_rows(inst: &TypedInstance, m: &TypeCountMatrix) -> Result<(), SolveError> {
    let k = inst.k();
    if m.k() != k {
        return Err(SolveError::InconsistentMatrix("matrix has the wrong size".into()));
    }
    for i in 0..k {
        if m.row_sum(i) != inst.seats(i) {
            return Err(SolveError::InconsistentMatrix(format!(
                "row {} sums to {} but the type has {} seats",
                i + 1,
                m.row_sum(i),
                inst.seats(i)
            )));
        }
        for j in i..k {
            if m.get(i, j) > 0 && !inst.mutually_acceptable(i, j) {
                return Err(SolveError::InconsistentMatrix(format!(
                    "types {} and {} are not mutually acceptable",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    Ok(())
}

/// Selects, per type `i`, the units matched to each partner type: partner
/// types in `i`'s order (ties by id), each taking the best available units
/// of type `i` in its own list. Ties go to units that fewer later partner
/// types accept, then to the lowest index.
fn select(inst: &TypedInstance, pos: &Positions, m: &TypeCountMatrix) -> Result<Vec<Vec<Vec<Unit>>>, SolveError> {
    let k = inst.k();
    let mut chosen = vec![vec![Vec::new(); k]; k];
    for i in 0..k {
        let order: Vec<(usize, usize)> = inst.types[i]
            .pref
            .groups
            .iter()
            .flat_map(|g| {
                let mut g = g.clone();
                g.sort_unstable();
                g
            })
            .map(|j| (j, if j == i { 2 * m.get(i, i) } else { m.get(i, j) }))
            .filter(|&(_, need)| need > 0)
            .collect();
        let mut available: Vec<Unit> = units_of_type(inst, i);
        for (step, &(j, need)) in order.iter().enumerate() {
            let later = &order[step + 1..];
            let mut cands: Vec<(u32, usize, Unit)> = available
                .iter()
                .filter_map(|&u| {
                    let p = pos.of(j, u.0)?;
                    let scarcity = later.iter().filter(|&&(l, _)| pos.of(l, u.0).is_some()).count();
                    Some((p, scarcity, u))
                })
                .collect();
            if cands.len() < need {
                return Err(SolveError::Hypothesis(format!(
                    "type {} lists only {} available agents of type {}, {} needed",
                    j + 1,
                    cands.len(),
                    i + 1,
                    need
                )));
            }
            cands.sort_unstable();
            let picked: Vec<Unit> = cands[..need].iter().map(|&(_, _, u)| u).collect();
            available.retain(|u| !picked.contains(u));
            chosen[i][j] = picked;
        }
    }
    Ok(chosen)
}

/// Pairs the selected groups position by position, each listed best first
/// from the partner type's view.
fn pair_up(inst: &TypedInstance, pos: &Positions, mut chosen: Vec<Vec<Vec<Unit>>>) -> AgentMatching {
    let k = inst.k();
    for row in chosen.iter_mut() {
        for (j, units) in row.iter_mut().enumerate() {
            units.sort_by_key(|&u| (pos.of(j, u.0), u));
        }
    }
    let mut pairs = Vec::new();
    for i in 0..k {
        let same = &chosen[i][i];
        for two in same.chunks(2) {
            pairs.push((two[0].0, two[1].0));
        }
        for j in i + 1..k {
            for (a, b) in chosen[i][j].iter().zip(&chosen[j][i]) {
                pairs.push((a.0, b.0));
            }
        }
    }
    AgentMatching::new(pairs)
}

/// Realises `m` without checking the stability hypothesis. Used for the
/// quality objectives, where `m` may have blocking pairs by design.
pub fn realize_refined_unchecked(inst: &TypedInstance, m: &TypeCountMatrix) -> Result<AgentMatching, SolveError> {
    check_rows(inst, m)?;
    let pos = Positions::new(inst);
    let chosen = select(inst, &pos, m)?;
    let out = pair_up(inst, &pos, chosen);
    if TypeCountMatrix::of_matching(inst, &out) != *m {
        return Err(SolveError::InconsistentMatrix(
            "realisation changed the counts".into(),
        ));
    }
    Ok(out)
}

/// Whether counts `m` are stable in the typed relaxation.
pub fn counts_typed_stable(inst: &TypedInstance, m: &AgentMatching) -> Result<bool, SolveError> {
    let relax = inst.typed_relaxation();
    let p = typed::profile_of_matching(&relax, m);
    if inst.kind.is_bipartite() {
        Ok(typed::is_worst_stable(&relax, &p.worst))
    } else {
        typed::is_i_stable(&relax, &p)
    }
}

/// Realises a typed-stable count matrix as a matching with the same counts
/// that is stable under the refined lists.
///
/// Fails with [`SolveError::Hypothesis`] when `m` is not stable in the
/// typed relaxation, or when truncated refinements leave a partner type too
/// few acceptable agents.
pub fn realize_refined(inst: &TypedInstance, m: &TypeCountMatrix) -> Result<AgentMatching, SolveError> {
    let out = realize_refined_unchecked(inst, m)?;
    if !counts_typed_stable(inst, &out)? {
        return Err(SolveError::Hypothesis(
            "the counts are not stable in the typed relaxation".into(),
        ));
    }
    let report = oracle::blocking_report(inst, &out)?;
    if !report.is_stable() {
        return Err(SolveError::Hypothesis(format!(
            "truncated refinements leave {} blocking pairs",
            report.blocking_pairs.len()
        )));
    }
    Ok(out)
}

/// Maximum stable matching of a refined instance: the typed optimum,
/// realised under the refined lists. Works for every typed kind.
pub fn solve_max_refined(inst: &TypedInstance) -> Result<Solved, SolveError> {
    let relax = inst.typed_relaxation();
    let mut solved = typed::solve_max(&relax)?;
    solved.matching = realize_refined(inst, &solved.counts)?;
    Ok(solved)
}

/// Roommates entry point; identical to [`solve_max_refined`].
pub fn solve_max_refined_srti(inst: &TypedInstance) -> Result<Solved, SolveError> {
    solve_max_refined(inst)
}

/// Quality objective for [`solve_refined_quality`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum QualityObjective {
    MinBp { max_size: bool },
    MinBa { max_size: bool },
    ExactBp(usize),
}

/// Solves a quality objective on the typed relaxation and realises the
/// optimum under the refined lists. `Ok(None)` only for an infeasible
/// exact count.
///
/// The realised matching is re-evaluated on the refined lists; a value
/// differing from the relaxation's (possible only with truncated
/// refinements) is reported as a [`SolveError::Hypothesis`].
pub fn solve_refined_quality(inst: &TypedInstance, objective: QualityObjective) -> Result<Option<QualityOutcome>, SolveError> {
    let relax = inst.typed_relaxation();
    let typed = match objective {
        QualityObjective::MinBp { max_size } => Some(quality::solve_min_bp(&relax, max_size)?),
        QualityObjective::MinBa { max_size } => Some(quality::solve_min_ba(&relax, max_size)?),
        QualityObjective::ExactBp(z) => quality::solve_exact_bp(&relax, z)?,
    };
    let Some(typed) = typed else { return Ok(None) };
    let matching = realize_refined_unchecked(inst, &typed.counts)?;
    let report = oracle::blocking_report(inst, &matching)?;
    let value = match objective {
        QualityObjective::MinBa { .. } => report.blocking_agents.len(),
        _ => report.blocking_pairs.len(),
    };
    if value != typed.value {
        return Err(SolveError::Hypothesis(format!(
            "realisation has {value} blocking units, the relaxation {}",
            typed.value
        )));
    }
    Ok(Some(QualityOutcome {
        value,
        matching,
        signature: TypeSignature::of_counts(&typed.counts),
        counts: typed.counts,
    }))
}

/// Copy of `inst` whose agent-level lists break every remaining tie by
/// agent index, consistently across each type.
pub fn break_ties(inst: &TypedInstance) -> Result<TypedInstance, SolveError> {
    let pos = Positions::new(inst);
    let refinements = (0..inst.k())
        .map(|j| {
            let mut listed: Vec<(u32, usize)> = (0..inst.n())
                .filter_map(|a| pos.of(j, a).map(|p| (p, a)))
                .collect();
            listed.sort_unstable();
            Some(listed.into_iter().map(|(_, a)| vec![a]).collect())
        })
        .collect();
    Ok(inst.clone().with_refinements(refinements)?)
}

/// Outcome of [`verify_strict_types`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrictReport {
    /// Sizes of the stable matchings of the instance.
    pub sizes: BTreeSet<usize>,
    /// Sizes of the stable matchings after consistent tie-breaking.
    pub broken_sizes: BTreeSet<usize>,
    /// All stable matchings of the instance have one size.
    pub all_same_size: bool,
    /// Tie-breaking neither creates nor destroys stable matchings, and
    /// keeps their size.
    pub tie_breaking_consistent: bool,
}

/// Exhaustively checks, for strict type-level preferences, that stable
/// matchings all have one size and that consistent tie-breaking preserves
/// existence and size.
pub fn verify_strict_types(inst: &TypedInstance) -> Result<StrictReport, SolveError> {
    if !inst.strict_type_preferences() {
        return Err(SolveError::Unsupported(
            "type-level preferences must be strict".into(),
        ));
    }
    let sizes_of = |i: &TypedInstance| -> Result<BTreeSet<usize>, SolveError> {
        Ok(oracle::all_stable_matchings(i)
            .map_err(oracle_error)?
            .iter()
            .map(AgentMatching::size)
            .collect())
    };
    let sizes = sizes_of(inst)?;
    let broken_sizes = sizes_of(&break_ties(inst)?)?;
    Ok(StrictReport {
        all_same_size: sizes.len() <= 1,
        tie_breaking_consistent: sizes == broken_sizes,
        sizes,
        broken_sizes,
    })
}

fn oracle_error(e: OracleError) -> SolveError {
    SolveError::Unsupported(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_instance;

    fn inst(text: &str) -> TypedInstance {
        parse_instance(text).unwrap()
    }

    /// Three men over seven women in three types; type-4 women rank m2
    /// over m1 and do not list m3.
    fn truncated_example() -> TypedInstance {
        inst("problem smti\ntypes 4\n\
              type 1 side=m count=3 prefs=(2 3) 4\n\
              type 2 side=w count=2 prefs=1\n\
              type 3 side=w count=2 prefs=1\n\
              type 4 side=w count=3 prefs=1\n\
              refine 1: (w1 w2 w3 w4) w6 (w5 w7)\n\
              refine 4: m2 m1\n")
    }

    /// Six roommates of one type; the first three are preferred by all.
    fn six_roommates() -> TypedInstance {
        inst("problem srti\ntypes 1\n\
              type 1 side=none count=6 prefs=1\n\
              refine 1: (a1 a2 a3) (a4 a5 a6)\n")
    }

    #[test]
    fn truncated_example_reaches_typed_optimum() {
        let i = truncated_example();
        let s = solve_max_refined(&i).unwrap();
        assert_eq!(s.size, 3);
        assert_eq!(s.matching.size(), 3);
        assert!(oracle::blocking_report(&i, &s.matching).unwrap().is_stable());
        assert_eq!(oracle::max_stable_brute(&i).unwrap().unwrap().0, 3);
    }

    #[test]
    fn roommates_all_matched_within_type() {
        let i = six_roommates();
        let s = solve_max_refined_srti(&i).unwrap();
        assert_eq!(s.size, 3);
        assert!(oracle::blocking_report(&i, &s.matching).unwrap().is_stable());
        // Best three pair among themselves first, the odd one out with a4.
        let mut m = TypeCountMatrix::zeros(1);
        m.set(0, 0, 3);
        let r = realize_refined(&i, &m).unwrap();
        assert_eq!(TypeCountMatrix::of_matching(&i, &r), m);
    }

    #[test]
    fn single_pair_is_realised() {
        let i = inst("problem smti\ntypes 2\n\
                      type 1 side=w count=1 prefs=2\n\
                      type 2 side=m count=1 prefs=1\n\
                      refine 1: m1\n");
        let mut m = TypeCountMatrix::zeros(2);
        m.set(0, 1, 1);
        assert_eq!(realize_refined(&i, &m).unwrap().pairs, vec![(0, 1)]);
    }

    #[test]
    fn unstable_counts_are_rejected() {
        let i = six_roommates();
        let mut m = TypeCountMatrix::zeros(1);
        m.set(0, 0, 2);
        m.set(0, 1, 2);
        assert!(matches!(realize_refined(&i, &m), Err(SolveError::Hypothesis(_))));
        assert!(realize_refined_unchecked(&i, &m).is_ok());
    }

    #[test]
    fn relaxation_without_stable_matching() {
        let i = inst("problem srti\ntypes 3\n\
                      type 1 side=none count=1 prefs=2 3\n\
                      type 2 side=none count=1 prefs=3 1\n\
                      type 3 side=none count=1 prefs=1 2\n\
                      refine 1: a2 a3\n");
        assert_eq!(solve_max_refined(&i), Err(SolveError::NoStable));
    }

    #[test]
    fn strict_types_have_one_size() {
        let i = inst("problem smti\ntypes 4\n\
                      type 1 side=m count=3 prefs=2 3 4\n\
                      type 2 side=w count=2 prefs=1\n\
                      type 3 side=w count=2 prefs=1\n\
                      type 4 side=w count=3 prefs=1\n");
        let r = verify_strict_types(&i).unwrap();
        assert!(r.all_same_size && r.tie_breaking_consistent);
        assert_eq!(r.sizes.iter().copied().collect::<Vec<_>>(), vec![3]);
    }

    #[test]
    fn refined_min_bp_at_max_size() {
        let i = truncated_example();
        let q = solve_refined_quality(&i, QualityObjective::MinBp { max_size: true })
            .unwrap()
            .unwrap();
        assert_eq!(q.value, 0);
        assert_eq!(q.matching.size(), 3);
    }
}
