//! Typed HRC: profile stability test and the maximum-size solver.
//!
//! A profile records, per single-resident type, the worst hospital type any
//! single of that type gets; per couple type, the worst hospital-type pair
//! and the set of pairs actually used; per hospital type, the worst and
//! second-worst resident type over all its seats (empty seats count as the
//! dummy). Types are compared through class representatives as in the
//! typed solvers.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::SolveError;
use crate::instance::{Side, TypedInstance, UNACCEPTABLE};
use crate::matching::AgentMatching;
use crate::par;
use crate::smallip::{self, IntegerProgram, Relation, Sense};
use crate::typed::{class_rep, Radix};

/// Candidate (or induced) profile of a typed HRC matching. Entries for
/// types without agents are ignored.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HrcProfile {
    /// Worst hospital type per resident type, over single residents.
    pub worst_single: Vec<usize>,
    /// Worst hospital-type pair per couple type.
    pub worst_couple: Vec<(usize, usize)>,
    /// Hospital-type pairs used by at least one couple, per couple type.
    pub assigned: Vec<BTreeSet<(usize, usize)>>,
    /// Worst resident type per hospital type, over all seats.
    pub worst_hospital: Vec<usize>,
    /// Second-worst resident type per hospital type with at least two seats.
    pub secondworst_hospital: Vec<Option<usize>>,
}

/// Result of the typed HRC solver.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HrcSolution {
    /// Number of matched residents (couples count twice).
    pub matched_residents: usize,
    pub matching: AgentMatching,
    pub profile: HrcProfile,
    /// Number of candidate profiles enumerated.
    pub profiles: usize,
}

fn is_hospital(inst: &TypedInstance, t: usize) -> bool {
    inst.types[t].side == Side::Hospital
}

fn hospital_types(inst: &TypedInstance) -> Vec<usize> {
    (0..inst.k()).filter(|&t| is_hospital(inst, t)).collect()
}

fn resident_types(inst: &TypedInstance) -> Vec<usize> {
    (0..inst.k()).filter(|&t| !is_hospital(inst, t)).collect()
}

fn singles(inst: &TypedInstance, i: usize) -> usize {
    inst.types[i].count
}

/// Tie group of a pair in a couple's list; the dummy pair is its own class
/// after every listed group.
fn pair_rank(inst: &TypedInstance, c: usize, pair: (usize, usize)) -> u32 {
    inst.couples[c].rank(pair, inst.dummy())
}

fn pair_rep(inst: &TypedInstance, c: usize, pair: (usize, usize)) -> (usize, usize) {
    let ct = &inst.couples[c];
    ct.pref
        .iter()
        .find(|g| g.contains(&pair))
        .and_then(|g| g.iter().copied().min())
        .unwrap_or(pair)
}

/// Profile induced by a valid HRC matching.
pub fn hrc_profile_of_matching(inst: &TypedInstance, m: &AgentMatching) -> HrcProfile {
    let k = inst.k();
    let dummy = inst.dummy();
    let n = inst.n();
    let mut hospital_of = vec![None; n];
    let mut seats: Vec<Vec<usize>> = vec![Vec::new(); k];
    for &(a, b) in &m.pairs {
        let (r, h) = if is_hospital(inst, inst.agent_type(a)) {
            (b, a)
        } else {
            (a, b)
        };
        hospital_of[r] = Some(h);
        seats[inst.agent_type(h)].push(inst.agent_type(r));
    }
    for h in 0..n {
        let t = inst.agent_type(h);
        if is_hospital(inst, t) {
            let used = m.pairs.iter().filter(|&&(a, b)| a == h || b == h).count();
            for _ in used..inst.capacity_of_agent(h) {
                seats[t].push(dummy);
            }
        }
    }
    let htype = |r: usize| hospital_of[r].map_or(dummy, |h| inst.agent_type(h));
    let mut worst_single = vec![dummy; k];
    for i in resident_types(inst) {
        let worst = inst
            .singles_of_type(i)
            .into_iter()
            .map(htype)
            .max_by_key(|&p| (inst.rank(i, p), std::cmp::Reverse(p)));
        if let Some(w) = worst {
            worst_single[i] = class_rep(inst, i, w);
        }
    }
    let mut worst_hospital = vec![dummy; k];
    let mut secondworst_hospital = vec![None; k];
    for p in hospital_types(inst) {
        let mut ts = std::mem::take(&mut seats[p]);
        ts.sort_by_key(|&i| (std::cmp::Reverse(inst.rank(p, i)), i));
        if let Some(&w) = ts.first() {
            worst_hospital[p] = class_rep(inst, p, w);
        }
        secondworst_hospital[p] = ts.get(1).map(|&s| class_rep(inst, p, s));
    }
    let mut worst_couple = Vec::new();
    let mut assigned = Vec::new();
    for (c, ct) in inst.couples.iter().enumerate() {
        let pairs: Vec<(usize, usize)> = ct
            .members
            .iter()
            .map(|&(x, y)| (htype(x), htype(y)))
            .collect();
        let worst = pairs
            .iter()
            .copied()
            .max_by_key(|&pq| (pair_rank(inst, c, pq), std::cmp::Reverse(pq)))
            .map_or((dummy, dummy), |pq| pair_rep(inst, c, pq));
        worst_couple.push(worst);
        assigned.push(pairs.into_iter().collect());
    }
    HrcProfile {
        worst_single,
        worst_couple,
        assigned,
        worst_hospital,
        secondworst_hospital,
    }
}

/// Pairwise no-block test on a profile. Reports `false` when one of the
/// following holds:
/// 1. a single-resident type `i` and hospital type `p` with
///    `p ≻_i worst(i)` and `i ≻_p worst(p)`;
/// 2. a couple type `(i,j)` and hospital type `ℓ` where one member can
///    improve the couple alone: `i ≻_ℓ worst(ℓ)` and some used pair
///    `(p,q)` has `(ℓ,q) ≻ (p,q)` (or symmetrically for `j`);
/// 3. a couple type and distinct hospital types `ℓ ≠ p` with
///    `(ℓ,p) ≻ worst(i,j)`, `i ≻_ℓ worst(ℓ)`, `j ≻_p worst(p)`;
/// 4. a couple type and hospital type `ℓ` with `(ℓ,ℓ) ≻ worst(i,j)`, both
///    `i, j ≻_ℓ worst(ℓ)`, and one of them `≻_ℓ secondworst(ℓ)`.
pub fn hrc_profile_stable(inst: &TypedInstance, p: &HrcProfile) -> bool {
    let hosp: Vec<usize> = hospital_types(inst)
        .into_iter()
        .filter(|&h| inst.seats(h) > 0)
        .collect();
    for i in resident_types(inst) {
        if singles(inst, i) == 0 {
            continue;
        }
        for &h in &hosp {
            if inst.prefers(i, h, p.worst_single[i]) && inst.prefers(h, i, p.worst_hospital[h]) {
                return false;
            }
        }
    }
    let better_than_worst = |h: usize, r: usize| inst.prefers(h, r, p.worst_hospital[h]);
    for (c, ct) in inst.couples.iter().enumerate() {
        if ct.count == 0 {
            continue;
        }
        let (i, j) = (ct.first, ct.second);
        let strictly = |a: (usize, usize), b: (usize, usize)| {
            let ra = pair_rank(inst, c, a);
            ra != UNACCEPTABLE && ra < pair_rank(inst, c, b)
        };
        let wc = p.worst_couple[c];
        for &l in &hosp {
            if better_than_worst(l, i)
                && p.assigned[c].iter().any(|&(a, b)| strictly((l, b), (a, b)))
            {
                return false;
            }
            if better_than_worst(l, j)
                && p.assigned[c].iter().any(|&(a, b)| strictly((a, l), (a, b)))
            {
                return false;
            }
            for &q in &hosp {
                if q != l && strictly((l, q), wc) && better_than_worst(l, i) && better_than_worst(q, j) {
                    return false;
                }
            }
            if strictly((l, l), wc) && better_than_worst(l, i) && better_than_worst(l, j) {
                if let Some(s) = p.secondworst_hospital[l] {
                    if inst.prefers(l, i, s) || inst.prefers(l, j, s) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Per-component choices of the enumeration.
#[derive(Clone, Debug)]
enum Choice {
    Single(usize, usize),
    Hospital(usize, usize, Option<usize>),
    Couple(usize, (usize, usize), BTreeSet<(usize, usize)>),
}

fn class_candidates(inst: &TypedInstance, i: usize, possible: impl Fn(usize) -> bool) -> Vec<usize> {
    let mut out: Vec<usize> = inst.types[i]
        .pref
        .groups
        .iter()
        .filter(|g| g.iter().any(|&j| possible(j)))
        .map(|g| *g.iter().min().expect("groups are nonempty"))
        .collect();
    out.push(inst.dummy());
    out
}

/// Residents of type `i`, singles and couple members.
fn residents_of_type(inst: &TypedInstance, i: usize) -> usize {
    singles(inst, i)
        + inst
            .couples
            .iter()
            .map(|c| c.count * (usize::from(c.first == i) + usize::from(c.second == i)))
            .sum::<usize>()
}

/// Pairs a couple type can actually occupy.
fn possible_pairs(inst: &TypedInstance, c: usize) -> Vec<(usize, usize)> {
    let ct = &inst.couples[c];
    ct.pref
        .iter()
        .flatten()
        .copied()
        .filter(|&(p, q)| {
            inst.seats(p) > 0
                && inst.seats(q) > 0
                && inst.acceptable(p, ct.first)
                && inst.acceptable(q, ct.second)
                && (p != q || inst.seats(p) >= 2)
        })
        .collect()
}

fn options(inst: &TypedInstance) -> Vec<Vec<Choice>> {
    let dummy = inst.dummy();
    let mut out = Vec::new();
    for i in resident_types(inst) {
        if singles(inst, i) == 0 {
            continue;
        }
        let cands = class_candidates(inst, i, |p| inst.mutually_acceptable(i, p) && inst.seats(p) > 0);
        out.push(cands.into_iter().map(|w| Choice::Single(i, w)).collect());
    }
    for p in hospital_types(inst) {
        let n = inst.seats(p);
        if n == 0 {
            continue;
        }
        let cands = class_candidates(inst, p, |i| {
            inst.acceptable(p, i) && residents_of_type(inst, i) > 0
        });
        let mut opts = Vec::new();
        for &w in &cands {
            if n == 1 {
                opts.push(Choice::Hospital(p, w, None));
                continue;
            }
            for &s in &cands {
                if inst.weakly_prefers(p, s, w) {
                    opts.push(Choice::Hospital(p, w, Some(s)));
                }
            }
        }
        out.push(opts);
    }
    for (c, ct) in inst.couples.iter().enumerate() {
        if ct.count == 0 {
            continue;
        }
        let mut possible = possible_pairs(inst, c);
        possible.push((dummy, dummy));
        let mut reps: Vec<(usize, usize)> = possible.iter().map(|&pq| pair_rep(inst, c, pq)).collect();
        reps.sort_by_key(|&pq| pair_rank(inst, c, pq));
        reps.dedup();
        let mut opts = Vec::new();
        for &w in &reps {
            let wr = pair_rank(inst, c, w);
            let above: Vec<(usize, usize)> = possible
                .iter()
                .copied()
                .filter(|&pq| pair_rank(inst, c, pq) <= wr)
                .collect();
            // Subsets of `above` with at least one pair in w's class and at
            // most `count` pairs.
            for mask in 1u64..(1u64 << above.len()) {
                let set: BTreeSet<(usize, usize)> = above
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| mask >> b & 1 == 1)
                    .map(|(_, &pq)| pq)
                    .collect();
                if set.len() > ct.count || !set.iter().any(|&pq| pair_rank(inst, c, pq) == wr) {
                    continue;
                }
                opts.push(Choice::Couple(c, w, set));
            }
        }
        out.push(opts);
    }
    out
}

fn profile_from(inst: &TypedInstance, choices: &[&Choice]) -> HrcProfile {
    let k = inst.k();
    let dummy = inst.dummy();
    let mut p = HrcProfile {
        worst_single: vec![dummy; k],
        worst_couple: vec![(dummy, dummy); inst.couples.len()],
        assigned: vec![BTreeSet::new(); inst.couples.len()],
        worst_hospital: vec![dummy; k],
        secondworst_hospital: vec![None; k],
    };
    for ch in choices {
        match ch {
            Choice::Single(i, w) => p.worst_single[*i] = *w,
            Choice::Hospital(h, w, s) => {
                p.worst_hospital[*h] = *w;
                p.secondworst_hospital[*h] = *s;
            }
            Choice::Couple(c, w, set) => {
                p.worst_couple[*c] = *w;
                p.assigned[*c] = set.clone();
            }
        }
    }
    p
}

/// Integer program of a profile. Variables: singles of type `i` at
/// hospital type `p` (or the dummy), couples of type `c` on each used pair,
/// and empty seats per hospital type.
struct HrcModel {
    ip: IntegerProgram,
    single: Vec<Vec<Option<usize>>>,
    couple: Vec<Vec<((usize, usize), usize)>>,
    empty: Vec<Option<usize>>,
}

impl HrcModel {
    fn build(inst: &TypedInstance, prof: &HrcProfile) -> Self {
        let k = inst.k();
        let dummy = inst.dummy();
        let hosp = hospital_types(inst);
        let mut ip = IntegerProgram::new(Sense::Max);
        let mut single = vec![vec![None; k + 1]; k];
        let mut couple = vec![Vec::new(); inst.couples.len()];
        let mut empty = vec![None; k];
        let mut objective = Vec::new();
        for i in resident_types(inst) {
            let ni = singles(inst, i);
            if ni == 0 {
                continue;
            }
            for &p in &hosp {
                if inst.mutually_acceptable(i, p) && inst.seats(p) > 0 {
                    let v = ip.add_var(format!("s{},{}", i + 1, p + 1), 0, ni.min(inst.seats(p)) as i64);
                    single[i][p] = Some(v);
                    objective.push((v, 1));
                }
            }
            single[i][dummy] = Some(ip.add_var(format!("s{},d", i + 1), 0, ni as i64));
        }
        for (c, ct) in inst.couples.iter().enumerate() {
            if ct.count == 0 {
                continue;
            }
            // Only used pairs get a variable, each at least one couple.
            for &pq in &prof.assigned[c] {
                let v = ip.add_var(format!("c{},{:?}", c + 1, pq), 1, ct.count as i64);
                couple[c].push((pq, v));
                if pq.0 != dummy {
                    objective.push((v, 2));
                }
            }
        }
        for &p in &hosp {
            if inst.seats(p) > 0 {
                empty[p] = Some(ip.add_var(format!("e{}", p + 1), 0, inst.seats(p) as i64));
            }
        }
        ip.set_linear_objective(&objective);
        HrcModel {
            ip,
            single,
            couple,
            empty,
        }
    }

    /// Terms counting seats of hospital type `p` held by resident type `i`
    /// (`i == dummy` for empty seats).
    fn occupancy(&self, inst: &TypedInstance, p: usize, i: usize) -> Vec<(usize, i64)> {
        let dummy = inst.dummy();
        if i == dummy {
            return self.empty[p].map(|v| vec![(v, 1)]).unwrap_or_default();
        }
        let mut out = Vec::new();
        if let Some(v) = self.single[i][p] {
            out.push((v, 1));
        }
        for (c, ct) in inst.couples.iter().enumerate() {
            for &((a, b), v) in &self.couple[c] {
                let mult = i64::from(a == p && ct.first == i) + i64::from(b == p && ct.second == i);
                if mult > 0 {
                    out.push((v, mult));
                }
            }
        }
        out
    }

    fn occupancy_where(&self, inst: &TypedInstance, p: usize, keep: impl Fn(usize) -> bool) -> Vec<(usize, i64)> {
        (0..=inst.k())
            .filter(|&i| keep(i) && (i == inst.dummy() || !is_hospital(inst, i)))
            .flat_map(|i| self.occupancy(inst, p, i))
            .collect()
    }

    fn add_profile(&mut self, inst: &TypedInstance, prof: &HrcProfile) {
        let dummy = inst.dummy();
        for i in resident_types(inst) {
            let ni = singles(inst, i) as i64;
            if ni == 0 {
                continue;
            }
            let row: Vec<(usize, i64)> = self.single[i].iter().flatten().map(|&v| (v, 1)).collect();
            self.ip.add_constraint(&row, Relation::Eq, ni);
            let w = prof.worst_single[i];
            let within: Vec<(usize, i64)> = (0..=dummy)
                .filter(|&p| inst.weakly_prefers(i, p, w))
                .filter_map(|p| self.single[i][p].map(|v| (v, 1)))
                .collect();
            self.ip.add_constraint(&within, Relation::Eq, ni);
            let witness: Vec<(usize, i64)> = (0..=dummy)
                .filter(|&p| inst.rank(i, p) == inst.rank(i, w))
                .filter_map(|p| self.single[i][p].map(|v| (v, 1)))
                .collect();
            self.ip.add_constraint(&witness, Relation::Ge, 1);
        }
        for (c, ct) in inst.couples.iter().enumerate() {
            if ct.count == 0 {
                continue;
            }
            let row: Vec<(usize, i64)> = self.couple[c].iter().map(|&(_, v)| (v, 1)).collect();
            self.ip.add_constraint(&row, Relation::Eq, ct.count as i64);
        }
        for p in hospital_types(inst) {
            let np = inst.seats(p) as i64;
            if np == 0 {
                continue;
            }
            let all = self.occupancy_where(inst, p, |_| true);
            self.ip.add_constraint(&all, Relation::Eq, np);
            let w = prof.worst_hospital[p];
            let rw = inst.rank(p, w);
            let within = self.occupancy_where(inst, p, |i| inst.rank(p, i) <= rw);
            self.ip.add_constraint(&within, Relation::Eq, np);
            let witness = self.occupancy_where(inst, p, |i| inst.rank(p, i) == rw);
            self.ip.add_constraint(&witness, Relation::Ge, 1);
            if np >= 2 {
                let s = prof.secondworst_hospital[p].expect("hospital types with two seats carry secondworst");
                let rs = inst.rank(p, s);
                let band = self.occupancy_where(inst, p, |i| inst.rank(p, i) < rw && inst.rank(p, i) > rs);
                if !band.is_empty() {
                    self.ip.add_constraint(&band, Relation::Eq, 0);
                }
                let pair = self.occupancy_where(inst, p, |i| inst.rank(p, i) == rw || inst.rank(p, i) == rs);
                self.ip.add_constraint(&pair, Relation::Ge, 2);
                // At most one seat may be worse than secondworst.
                let upper = self.occupancy_where(inst, p, |i| inst.rank(p, i) <= rs);
                self.ip.add_constraint(&upper, Relation::Ge, np - 1);
            }
        }
    }
}

/// Realises the solved counts: singles, then couples, take the next free
/// seat of the required hospital type in agent order.
fn realise(inst: &TypedInstance, model: &HrcModel, x: &[i64]) -> AgentMatching {
    let k = inst.k();
    let mut seats: Vec<std::vec::IntoIter<usize>> = (0..k)
        .map(|t| {
            let mut s = Vec::new();
            if is_hospital(inst, t) {
                for h in inst.agents_of_type(t) {
                    for _ in 0..inst.capacity_of_agent(h) {
                        s.push(h);
                    }
                }
            }
            s.into_iter()
        })
        .collect();
    let mut pairs = Vec::new();
    for i in resident_types(inst) {
        let mut residents = inst.singles_of_type(i).into_iter();
        for p in 0..k {
            if let Some(v) = model.single[i][p] {
                for _ in 0..x[v] {
                    let r = residents.next().expect("row sums hold");
                    let h = seats[p].next().expect("hospital rows hold");
                    pairs.push((r, h));
                }
            }
        }
    }
    for (c, ct) in inst.couples.iter().enumerate() {
        let mut members = ct.members.iter();
        for &((p, q), v) in &model.couple[c] {
            for _ in 0..x[v] {
                let &(a, b) = members.next().expect("couple rows hold");
                if p < k {
                    pairs.push((a, seats[p].next().expect("hospital rows hold")));
                    pairs.push((b, seats[q].next().expect("hospital rows hold")));
                }
            }
        }
    }
    AgentMatching::new(pairs)
}

/// Maximum number of matched residents over stable matchings of a typed
/// HRC instance.
///
/// Enumerates candidate profiles, keeps those passing
/// [`hrc_profile_stable`], and maximises an integer program whose solutions
/// are exactly the count vectors realising the profile.
pub fn solve_max_hrc(inst: &TypedInstance) -> Result<HrcSolution, SolveError> {
    if inst.has_refinements() || inst.has_exceptions() {
        return Err(SolveError::Unsupported(
            "refinements and exceptions are not supported with couples".into(),
        ));
    }
    let opts = options(inst);
    let radix = Radix::new(opts.iter().map(Vec::len).collect());
    type Found = Result<(i64, AgentMatching, HrcProfile), SolveError>;
    let best = par::best_by_key(
        radix.total,
        |idx| -> Option<Found> {
            let digits = radix.digits(idx);
            let choices: Vec<&Choice> = opts.iter().zip(&digits).map(|(o, &d)| &o[d]).collect();
            let prof = profile_from(inst, &choices);
            if !hrc_profile_stable(inst, &prof) {
                return None;
            }
            let mut model = HrcModel::build(inst, &prof);
            model.add_profile(inst, &prof);
            match smallip::solve(&model.ip) {
                Ok(sol) => Some(Ok((sol.value, realise(inst, &model, &sol.assignment), prof))),
                Err(smallip::IpError::Infeasible) => None,
                Err(e) => Some(Err(e.into())),
            }
        },
        |r| match r {
            Ok((v, _, _)) => *v,
            Err(_) => i64::MAX,
        },
    );
    let (value, matching, profile) = best.ok_or(SolveError::NoStable)?.1?;
    Ok(HrcSolution {
        matched_residents: value as usize,
        matching,
        profile,
        profiles: radix.total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::parse::parse_instance;

    fn one_couple() -> TypedInstance {
        parse_instance(
            "problem hrc\ntypes 4\n\
             type 1 side=r count=0 prefs=3 4\n\
             type 2 side=r count=0 prefs=3 4\n\
             type 3 side=h count=1 prefs=(1 2)\n\
             type 4 side=h count=1 prefs=(1 2)\n\
             couple types=(1,2) count=1 prefs=(3,4)\n",
        )
        .unwrap()
    }

    #[test]
    fn single_couple_is_placed() {
        let inst = one_couple();
        let s = solve_max_hrc(&inst).unwrap();
        assert_eq!(s.matched_residents, 2);
        assert!(oracle::blocking_report(&inst, &s.matching).unwrap().is_stable());
        let p = hrc_profile_of_matching(&inst, &s.matching);
        assert!(hrc_profile_stable(&inst, &p));
        let empty = hrc_profile_of_matching(&inst, &AgentMatching::default());
        assert!(!hrc_profile_stable(&inst, &empty));
    }

    #[test]
    fn singles_only_matches_typed_solver() {
        let inst = parse_instance(
            "problem hrc\ntypes 3\n\
             type 1 side=r count=3 prefs=2 3\n\
             type 2 side=h count=1 cap=2 prefs=1\n\
             type 3 side=h count=1 prefs=1\n",
        )
        .unwrap();
        let s = solve_max_hrc(&inst).unwrap();
        assert_eq!(s.matched_residents, 3);
        assert!(oracle::blocking_report(&inst, &s.matching).unwrap().is_stable());
    }

    #[test]
    fn couple_with_empty_list_stays_unmatched() {
        let inst = parse_instance(
            "problem hrc\ntypes 3\n\
             type 1 side=r count=1 prefs=3\n\
             type 2 side=r count=0 prefs=3\n\
             type 3 side=h count=1 prefs=1 2\n\
             couple types=(1,2) count=1 prefs=\n",
        )
        .unwrap();
        let s = solve_max_hrc(&inst).unwrap();
        assert_eq!(s.matched_residents, 1);
    }
}
