//! Hospitals/Residents with Couples.
//!
//! Agent-level stability follows the standard case analysis: a single
//! resident with a hospital (case 1), a couple moving one member (case 2),
//! or a couple moving both members to a pair of hospitals (case 3, with
//! four sub-cases when both go to the same hospital). A couple is either
//! jointly assigned to an acceptable hospital pair or jointly unmatched.
//!
//! The typed solver lives in [`typed`].

pub mod typed;

pub use typed::{hrc_profile_of_matching, hrc_profile_stable, solve_max_hrc, HrcProfile, HrcSolution};

use crate::agents::AgentInstance;
use crate::instance::{Side, TypedInstance};
use crate::matching::{AgentMatching, MatchingError};
use crate::oracle::{BlockingReport, Coalition};

/// Assignment view of an HRC matching.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HrcAssignment {
    /// Hospital of each resident (`None` for hospitals and unmatched).
    pub hospital_of: Vec<Option<usize>>,
    /// Residents assigned to each hospital.
    pub residents_of: Vec<Vec<usize>>,
}

fn name(agents: &AgentInstance, a: usize) -> String {
    agents.names[a].clone()
}

/// Checks an HRC matching and returns its assignment view.
pub fn validate(
    inst: &TypedInstance,
    agents: &AgentInstance,
    m: &AgentMatching,
) -> Result<HrcAssignment, MatchingError> {
    let n = agents.n();
    let mut hospital_of = vec![None; n];
    let mut residents_of = vec![Vec::new(); n];
    for (i, &(a, b)) in m.pairs.iter().enumerate() {
        if i > 0 && m.pairs[i - 1] == (a, b) {
            return Err(MatchingError::Duplicate(name(agents, a), name(agents, b)));
        }
        let (r, h) = match (agents.side[a], agents.side[b]) {
            (Side::Resident, Side::Hospital) => (a, b),
            (Side::Hospital, Side::Resident) => (b, a),
            _ => return Err(MatchingError::Unacceptable(name(agents, a), name(agents, b))),
        };
        if hospital_of[r].is_some() {
            return Err(MatchingError::Capacity(name(agents, r)));
        }
        if !agents.acceptable(h, r) {
            return Err(MatchingError::Unacceptable(name(agents, r), name(agents, h)));
        }
        if inst.agent_couple(r).is_none() && !agents.acceptable(r, h) {
            return Err(MatchingError::Unacceptable(name(agents, r), name(agents, h)));
        }
        hospital_of[r] = Some(h);
        residents_of[h].push(r);
        if residents_of[h].len() > agents.capacity[h] {
            return Err(MatchingError::Capacity(name(agents, h)));
        }
    }
    let dummy = inst.dummy();
    for ct in &inst.couples {
        for &(x, y) in &ct.members {
            let bad = |msg: &str| {
                Err(MatchingError::Couple(
                    name(agents, x),
                    name(agents, y),
                    msg.to_string(),
                ))
            };
            match (hospital_of[x], hospital_of[y]) {
                (None, None) => {}
                (Some(p), Some(q)) => {
                    let pair = (inst.agent_type(p), inst.agent_type(q));
                    if ct.rank(pair, dummy) == crate::instance::UNACCEPTABLE {
                        return bad("assigned to an unacceptable hospital pair");
                    }
                }
                _ => return bad("only one member is assigned"),
            }
        }
    }
    Ok(HrcAssignment {
        hospital_of,
        residents_of,
    })
}

/// Full blocking analysis of an HRC matching.
pub fn blocking_report(
    inst: &TypedInstance,
    agents: &AgentInstance,
    m: &AgentMatching,
) -> Result<BlockingReport, MatchingError> {
    let asg = validate(inst, agents, m)?;
    let n = agents.n();
    let hospitals: Vec<usize> = (0..n).filter(|&a| agents.side[a] == Side::Hospital).collect();
    let free = |h: usize| agents.capacity[h] - asg.residents_of[h].len();
    // h strictly prefers r to some assignee other than `except`.
    let prefers_to_some = |h: usize, r: usize, except: Option<usize>| {
        asg.residents_of[h]
            .iter()
            .any(|&s| Some(s) != except && agents.rank(h, r) < agents.rank(h, s))
    };
    let mut report = BlockingReport::default();

    // Case 1: single residents.
    for r in 0..n {
        if agents.side[r] != Side::Resident || inst.agent_couple(r).is_some() {
            continue;
        }
        for &h in &hospitals {
            if asg.hospital_of[r] == Some(h) || !agents.mutually_acceptable(r, h) {
                continue;
            }
            if agents.prefers(r, h, asg.hospital_of[r]) && (free(h) > 0 || prefers_to_some(h, r, None)) {
                report.blocking_pairs.push((r.min(h), r.max(h)));
            }
        }
    }

    let dummy = inst.dummy();
    for ct in &inst.couples {
        let type_pair = |p: Option<usize>, q: Option<usize>| match (p, q) {
            (Some(p), Some(q)) => Some((inst.agent_type(p), inst.agent_type(q))),
            (None, None) => Some((dummy, dummy)),
            _ => None,
        };
        let rank_of = |p: Option<usize>, q: Option<usize>| {
            type_pair(p, q).map_or(crate::instance::UNACCEPTABLE, |tp| ct.rank(tp, dummy))
        };
        for &(x, y) in &ct.members {
            let (mx, my) = (asg.hospital_of[x], asg.hospital_of[y]);
            let current = rank_of(mx, my);
            let push = |report: &mut BlockingReport, case: &str, hk: usize, hl: usize| {
                report.coalitions.push(Coalition {
                    case: case.to_string(),
                    residents: (x, y),
                    hospitals: (hk, hl),
                });
            };
            for &h in &hospitals {
                // Case 2(a): x moves to h, y stays.
                if Some(h) != mx
                    && my.is_some()
                    && rank_of(Some(h), my) < current
                    && agents.acceptable(h, x)
                    && (free(h) > 0 || prefers_to_some(h, x, Some(y)))
                {
                    push(&mut report, "2a", h, h);
                }
                // Case 2(b): y moves to h, x stays.
                if Some(h) != my
                    && mx.is_some()
                    && rank_of(mx, Some(h)) < current
                    && agents.acceptable(h, y)
                    && (free(h) > 0 || prefers_to_some(h, y, Some(x)))
                {
                    push(&mut report, "2b", h, h);
                }
            }
            // Case 3: both move.
            for &hk in &hospitals {
                if Some(hk) == mx || !agents.acceptable(hk, x) {
                    continue;
                }
                for &hl in &hospitals {
                    if Some(hl) == my || !agents.acceptable(hl, y) {
                        continue;
                    }
                    if rank_of(Some(hk), Some(hl)) >= current {
                        continue;
                    }
                    let case = if hk != hl {
                        let ok_k = free(hk) > 0 || prefers_to_some(hk, x, None);
                        let ok_l = free(hl) > 0 || prefers_to_some(hl, y, None);
                        (ok_k && ok_l).then_some("3a")
                    } else {
                        let h = hk;
                        let assigned = &asg.residents_of[h];
                        if free(h) >= 2 {
                            Some("3b")
                        } else if free(h) >= 1 && (prefers_to_some(h, x, None) || prefers_to_some(h, y, None)) {
                            Some("3c")
                        } else if free(h) == 0
                            && assigned.iter().any(|&s| {
                                agents.rank(h, x) < agents.rank(h, s)
                                    && assigned
                                        .iter()
                                        .any(|&t| t != s && agents.rank(h, y) < agents.rank(h, t))
                            })
                        {
                            Some("3d")
                        } else {
                            None
                        }
                    };
                    if let Some(c) = case {
                        push(&mut report, c, hk, hl);
                    }
                }
            }
        }
    }
    Ok(report.finish())
}

/// Every valid HRC matching: singles then couples, each either unmatched or
/// placed where capacity and acceptability allow.
pub fn enumerate_matchings(inst: &TypedInstance, agents: &AgentInstance) -> Vec<AgentMatching> {
    let n = agents.n();
    let hospitals: Vec<usize> = (0..n).filter(|&a| agents.side[a] == Side::Hospital).collect();
    let singles: Vec<usize> = (0..n)
        .filter(|&a| agents.side[a] == Side::Resident && inst.agent_couple(a).is_none())
        .collect();
    let couples: Vec<(usize, (usize, usize))> = inst
        .couples
        .iter()
        .enumerate()
        .flat_map(|(c, ct)| ct.members.iter().map(move |&m| (c, m)))
        .collect();
    let mut out = Vec::new();
    let mut load = vec![0usize; n];
    let mut chosen = Vec::new();
    struct Ctx<'a> {
        inst: &'a TypedInstance,
        agents: &'a AgentInstance,
        hospitals: Vec<usize>,
        singles: Vec<usize>,
        couples: Vec<(usize, (usize, usize))>,
    }
    fn go(
        ctx: &Ctx,
        step: usize,
        load: &mut Vec<usize>,
        chosen: &mut Vec<(usize, usize)>,
        out: &mut Vec<AgentMatching>,
    ) {
        let ag = ctx.agents;
        if step < ctx.singles.len() {
            let r = ctx.singles[step];
            go(ctx, step + 1, load, chosen, out);
            for &h in &ctx.hospitals {
                if load[h] < ag.capacity[h] && ag.mutually_acceptable(r, h) {
                    load[h] += 1;
                    chosen.push((r, h));
                    go(ctx, step + 1, load, chosen, out);
                    chosen.pop();
                    load[h] -= 1;
                }
            }
            return;
        }
        let c = step - ctx.singles.len();
        if c == ctx.couples.len() {
            out.push(AgentMatching::new(chosen.iter().copied()));
            return;
        }
        let (ct_idx, (x, y)) = ctx.couples[c];
        let ct = &ctx.inst.couples[ct_idx];
        go(ctx, step + 1, load, chosen, out);
        for &p in &ctx.hospitals {
            for &q in &ctx.hospitals {
                let pair = (ctx.inst.agent_type(p), ctx.inst.agent_type(q));
                if ct.rank(pair, ctx.inst.dummy()) == crate::instance::UNACCEPTABLE
                    || !ag.acceptable(p, x)
                    || !ag.acceptable(q, y)
                {
                    continue;
                }
                load[p] += 1;
                load[q] += 1;
                if load[p] <= ag.capacity[p] && load[q] <= ag.capacity[q] {
                    chosen.push((x, p));
                    chosen.push((y, q));
                    go(ctx, step + 1, load, chosen, out);
                    chosen.pop();
                    chosen.pop();
                }
                load[p] -= 1;
                load[q] -= 1;
            }
        }
    }
    let ctx = Ctx {
        inst,
        agents,
        hospitals,
        singles,
        couples,
    };
    go(&ctx, 0, &mut load, &mut chosen, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::expand_to_agent_level;
    use crate::parse::parse_instance;

    fn couple_instance(cap: usize) -> TypedInstance {
        parse_instance(&format!(
            "problem hrc\ntypes 4\n\
             type 1 side=r count=0 prefs=3 4\n\
             type 2 side=r count=0 prefs=3 4\n\
             type 3 side=h count=1 cap={cap} prefs=(1 2)\n\
             type 4 side=h count=1 prefs=(1 2)\n\
             couple types=(1,2) count=1 prefs=(3,4) (3,3)\n"
        ))
        .unwrap()
    }

    #[test]
    fn unmatched_couple_blocks_with_free_hospitals() {
        let inst = couple_instance(1);
        let agents = expand_to_agent_level(&inst);
        let r = blocking_report(&inst, &agents, &AgentMatching::default()).unwrap();
        assert!(r.coalitions.iter().any(|c| c.case == "3a"));
        // h1 and h2 are agents 0 and 1; couple members come last.
        let m = AgentMatching::new([(2, 0), (3, 1)]);
        assert!(blocking_report(&inst, &agents, &m).unwrap().is_stable());
    }

    #[test]
    fn shared_hospital_with_two_free_seats() {
        let inst = couple_instance(2);
        let agents = expand_to_agent_level(&inst);
        // Block the (3,4) option by filling h2 is impossible here, so check
        // that the (3,3) option is reported as case 3(b) when unmatched.
        let r = blocking_report(&inst, &agents, &AgentMatching::default()).unwrap();
        assert!(r.coalitions.iter().any(|c| c.case == "3b"));
    }

    #[test]
    fn half_matched_couples_are_invalid() {
        let inst = couple_instance(1);
        let agents = expand_to_agent_level(&inst);
        let m = AgentMatching::new([(2, 0)]);
        assert!(matches!(
            validate(&inst, &agents, &m),
            Err(MatchingError::Couple(..))
        ));
        assert_eq!(enumerate_matchings(&inst, &agents).len(), 2);
    }
}
