//! Typed solvers: worst/secondworst profiles, their stability test, and the
//! maximum matching realising a profile (integer program for roommates,
//! max-flow with binary search for bipartite kinds).
//!
//! A matching is stable exactly when its profile — per type, the worst and
//! second-worst partner type any of its agents receives — passes a
//! pairwise test on types. The solvers enumerate every candidate profile,
//! keep the stable ones and maximise the size of a matching that does no
//! worse than the profile for every type.
//!
//! Hospitals are handled by counting seats: a hospital type with `c`
//! agents of capacity `q` behaves like `c·q` identical unit agents.

use serde::{Deserialize, Serialize};

use crate::error::SolveError;
use crate::graphalg::{max_flow, FlowNetwork};
use crate::instance::{ProblemKind, Side, TypedInstance};
use crate::matching::AgentMatching;
use crate::par;
use crate::smallip::{self, IntegerProgram, Relation, Sense};

/// Worst and second-worst partner type per real type. Index `k` is the
/// dummy type (unmatched); `None` in `secondworst` marks a singleton type
/// or, for bipartite kinds, an unconstrained entry.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WorstProfile {
    pub worst: Vec<usize>,
    pub secondworst: Vec<Option<usize>>,
}

/// Number of pairs between every two types, symmetric, `(k+1)×(k+1)`.
/// `n[i][i]` counts pairs inside type `i`; `n[i][k]` counts unmatched
/// agents (seats) of type `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TypeCountMatrix {
    pub n: Vec<Vec<usize>>,
}

impl TypeCountMatrix {
    pub fn zeros(k: usize) -> Self {
        TypeCountMatrix {
            n: vec![vec![0; k + 1]; k + 1],
        }
    }

    /// Number of real types.
    pub fn k(&self) -> usize {
        self.n.len() - 1
    }

    pub fn get(&self, i: usize, j: usize) -> usize {
        self.n[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: usize) {
        self.n[i][j] = v;
        self.n[j][i] = v;
    }

    /// Agents (seats) of type `i` whose partner has type `j`.
    pub fn agents_with(&self, i: usize, j: usize) -> usize {
        if i == j {
            2 * self.n[i][i]
        } else {
            self.n[i][j]
        }
    }

    /// Agents (seats) of type `i` accounted for by the matrix.
    pub fn row_sum(&self, i: usize) -> usize {
        (0..=self.k()).map(|j| self.agents_with(i, j)).sum()
    }

    /// Number of real pairs.
    pub fn size(&self) -> usize {
        let k = self.k();
        (0..k).map(|i| (i..k).map(|j| self.n[i][j]).sum::<usize>()).sum()
    }

    /// Counts of a concrete matching (unfilled seats go to the dummy).
    pub fn of_matching(inst: &TypedInstance, m: &AgentMatching) -> Self {
        let k = inst.k();
        let mut out = TypeCountMatrix::zeros(k);
        let mut used = vec![0usize; k];
        for &(a, b) in &m.pairs {
            let (i, j) = (inst.agent_type(a), inst.agent_type(b));
            out.n[i][j] += 1;
            if i != j {
                out.n[j][i] += 1;
            }
            used[i] += 1;
            used[j] += 1;
        }
        for (i, u) in used.into_iter().enumerate() {
            out.set(i, k, inst.seats(i) - u);
        }
        out
    }
}

/// Result of a typed solve.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Solved {
    pub size: usize,
    pub matching: AgentMatching,
    pub counts: TypeCountMatrix,
    pub profile: WorstProfile,
    /// Number of candidate profiles enumerated.
    pub profiles: usize,
}

/// Smallest type id in the indifference class of `j` for type `i`; the
/// dummy maps to itself.
pub fn class_rep(inst: &TypedInstance, i: usize, j: usize) -> usize {
    if j >= inst.k() {
        return j;
    }
    inst.class_of(i, j)
        .and_then(|c| c.iter().copied().min())
        .unwrap_or(j)
}

/// Profile induced by a matching. Partner types (with unfilled seats as the
/// dummy) are ordered worst first, ties by smallest id; entries are
/// reported as class representatives.
pub fn profile_of_matching(inst: &TypedInstance, m: &AgentMatching) -> WorstProfile {
    let k = inst.k();
    let dummy = inst.dummy();
    let mut partner_types: Vec<Vec<usize>> = vec![Vec::new(); k];
    let partners = m.partners(inst.n());
    for (a, ps) in partners.iter().enumerate() {
        let t = inst.agent_type(a);
        for &b in ps {
            partner_types[t].push(inst.agent_type(b));
        }
        for _ in ps.len()..inst.capacity_of_agent(a) {
            partner_types[t].push(dummy);
        }
    }
    let mut worst = vec![dummy; k];
    let mut secondworst = vec![None; k];
    for (i, mut ts) in partner_types.into_iter().enumerate() {
        ts.sort_by_key(|&j| (std::cmp::Reverse(inst.rank(i, j)), j));
        if let Some(&w) = ts.first() {
            worst[i] = class_rep(inst, i, w);
        }
        secondworst[i] = ts.get(1).map(|&s| class_rep(inst, i, s));
    }
    WorstProfile { worst, secondworst }
}

fn seats_in_class(inst: &TypedInstance, i: usize, j: usize) -> usize {
    match inst.class_of(i, j) {
        Some(c) => c.iter().map(|&t| inst.seats(t)).sum(),
        None => usize::MAX,
    }
}

/// Checks the feasibility conditions of a full (roommates-style) profile.
pub fn check_feasible(inst: &TypedInstance, p: &WorstProfile) -> Result<(), SolveError> {
    let k = inst.k();
    let dummy = inst.dummy();
    if p.worst.len() != k || p.secondworst.len() != k {
        return Err(SolveError::InfeasibleProfile("profile length differs from k".into()));
    }
    for i in 0..k {
        let ok = |j: usize| j == dummy || (j < k && inst.acceptable(i, j));
        if !ok(p.worst[i]) {
            return Err(SolveError::InfeasibleProfile(format!(
                "worst({}) is not acceptable to type {}",
                p.worst[i] + 1,
                i + 1
            )));
        }
        match p.secondworst[i] {
            None if inst.seats(i) >= 2 => {
                return Err(SolveError::InfeasibleProfile(format!(
                    "secondworst({}) absent but type has several agents",
                    i + 1
                )))
            }
            None => {}
            Some(s) if !ok(s) => {
                return Err(SolveError::InfeasibleProfile(format!(
                    "secondworst({}) is not acceptable to type {}",
                    i + 1,
                    i + 1
                )))
            }
            Some(s) if s != dummy && s == p.worst[i] && seats_in_class(inst, i, s) < 2 => {
                return Err(SolveError::InfeasibleProfile(format!(
                    "worst({0}) = secondworst({0}) needs two partners",
                    i + 1
                )));
            }
            Some(_) => {}
        }
    }
    Ok(())
}

/// Pairwise no-block test on worst partners: no distinct nonempty types
/// `i`, `j` with `j ≻_i worst(i)` and `i ≻_j worst(j)`.
pub fn is_worst_stable(inst: &TypedInstance, worst: &[usize]) -> bool {
    let k = inst.k();
    for i in 0..k {
        if inst.seats(i) == 0 {
            continue;
        }
        for j in i + 1..k {
            if inst.seats(j) == 0 {
                continue;
            }
            if inst.prefers(i, j, worst[i]) && inst.prefers(j, i, worst[j]) {
                return false;
            }
        }
    }
    true
}

/// Full stability test: the pairwise worst test plus, for every type with
/// at least two agents, `i ⊁_i secondworst(i)`.
pub fn is_i_stable(inst: &TypedInstance, p: &WorstProfile) -> Result<bool, SolveError> {
    check_feasible(inst, p)?;
    if !is_worst_stable(inst, &p.worst) {
        return Ok(false);
    }
    for i in 0..inst.k() {
        if inst.seats(i) >= 2 {
            let s = p.secondworst[i].expect("checked by feasibility");
            if inst.prefers(i, i, s) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Integer program over the type-count variables with the row-sum
/// constraints; building block of the typed and quality solvers.
pub(crate) struct CountModel {
    pub ip: IntegerProgram,
    /// `var[i][j]` (symmetric) is the variable for `n{i,j}`, if allowed.
    pub var: Vec<Vec<Option<usize>>>,
    pub k: usize,
}

impl CountModel {
    pub fn new(inst: &TypedInstance, sense: Sense) -> Self {
        let k = inst.k();
        let mut ip = IntegerProgram::new(sense);
        let mut var = vec![vec![None; k + 1]; k + 1];
        for i in 0..k {
            let ni = inst.seats(i);
            for j in i..=k {
                let (allowed, upper) = if j == k {
                    (true, ni)
                } else if j == i {
                    (inst.mutually_acceptable(i, i) && ni >= 2, ni / 2)
                } else {
                    let nj = inst.seats(j);
                    (
                        inst.mutually_acceptable(i, j) && ni > 0 && nj > 0,
                        ni.min(nj),
                    )
                };
                if allowed {
                    let v = ip.add_var(format!("n{{{},{}}}", i + 1, j + 1), 0, upper as i64);
                    var[i][j] = Some(v);
                    var[j][i] = Some(v);
                }
            }
        }
        let mut model = CountModel { ip, var, k };
        for i in 0..k {
            let row = model.terms(i, |_| true);
            model
                .ip
                .add_constraint(&row, Relation::Eq, inst.seats(i) as i64);
        }
        model
    }

    /// `Σ_{j : keep(j)}` of agents of type `i` partnered with type `j`.
    pub fn terms(&self, i: usize, keep: impl Fn(usize) -> bool) -> Vec<(usize, i64)> {
        (0..=self.k)
            .filter(|&j| keep(j))
            .filter_map(|j| self.var[i][j].map(|v| (v, if i == j { 2 } else { 1 })))
            .collect()
    }

    /// Number of real pairs as linear terms.
    pub fn size_terms(&self) -> Vec<(usize, i64)> {
        let mut out = Vec::new();
        for i in 0..self.k {
            for j in i..self.k {
                if let Some(v) = self.var[i][j] {
                    out.push((v, 1));
                }
            }
        }
        out
    }

    pub fn matrix(&self, x: &[i64]) -> TypeCountMatrix {
        let mut m = TypeCountMatrix::zeros(self.k);
        for i in 0..=self.k {
            for j in i..=self.k {
                if let Some(v) = self.var[i][j] {
                    m.set(i, j, x[v] as usize);
                }
            }
        }
        m
    }

    /// Adds the realisation rows for `p`: every agent of type `i` gets a
    /// partner no worse than `worst(i)`, and all but one no worse than
    /// `secondworst(i)` (skipped when absent).
    pub fn add_profile(&mut self, inst: &TypedInstance, p: &WorstProfile) {
        for i in 0..self.k {
            let ni = inst.seats(i) as i64;
            let w = p.worst[i];
            let row = self.terms(i, |j| inst.weakly_prefers(i, j, w));
            self.ip.add_constraint(&row, Relation::Eq, ni);
            if let Some(s) = p.secondworst[i] {
                let row = self.terms(i, |j| inst.weakly_prefers(i, j, s));
                self.ip.add_constraint(&row, Relation::Ge, ni - 1);
            }
        }
    }
}

/// Largest matching realising `p`, as a count matrix, via the integer
/// program. `Ok(None)` when no matching realises `p`.
pub fn max_realising_srti(
    inst: &TypedInstance,
    p: &WorstProfile,
) -> Result<Option<(usize, TypeCountMatrix)>, SolveError> {
    let mut model = CountModel::new(inst, Sense::Max);
    model.add_profile(inst, p);
    let obj = model.size_terms();
    model.ip.set_linear_objective(&obj);
    match smallip::solve(&model.ip) {
        Ok(sol) => {
            let m = model.matrix(&sol.assignment);
            Ok(Some((sol.value as usize, m)))
        }
        Err(smallip::IpError::Infeasible) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

pub(crate) fn is_left(side: Side) -> bool {
    matches!(side, Side::Woman | Side::Hospital)
}

fn side_totals(inst: &TypedInstance) -> (usize, usize) {
    let mut n1 = 0;
    let mut n2 = 0;
    for (t, spec) in inst.types.iter().enumerate() {
        if is_left(spec.side) {
            n1 += inst.seats(t);
        } else {
            n2 += inst.seats(t);
        }
    }
    (n1, n2)
}

/// Vertex layout of [`build_flow_network`]: `s = 0`, `t = 1`,
/// `v_i = 2 + i`, `d_w = 2 + k`, `d_m = 3 + k`.
pub mod vertex {
    pub const S: usize = 0;
    pub const T: usize = 1;
    pub fn v(i: usize) -> usize {
        2 + i
    }
    pub fn d_w(k: usize) -> usize {
        2 + k
    }
    pub fn d_m(k: usize) -> usize {
        3 + k
    }
}

/// Flow network deciding whether a matching of size at least `c` realises
/// `worst` in a bipartite instance. Women (and hospitals) are on the source
/// side; the maximum flow equals `n1 + n2 − c` exactly when such a matching
/// exists.
pub fn build_flow_network(inst: &TypedInstance, worst: &[usize], c: usize) -> FlowNetwork {
    use vertex::*;
    let k = inst.k();
    let dummy = inst.dummy();
    let (n1, n2) = side_totals(inst);
    let mut net = FlowNetwork::new(k + 4, S, T);
    let cap = |x: usize| x as i64;
    let add = |net: &mut FlowNetwork, a, b, c: i64| {
        net.add_arc(a, b, c).expect("vertices in range");
    };
    for i in 0..k {
        if is_left(inst.types[i].side) {
            add(&mut net, S, v(i), cap(inst.seats(i)));
        }
    }
    add(&mut net, S, d_w(k), cap(n2 - c));
    for i in (0..k).filter(|&i| is_left(inst.types[i].side)) {
        for j in (0..k).filter(|&j| !is_left(inst.types[j].side)) {
            if inst.weakly_prefers(i, j, worst[i]) && inst.weakly_prefers(j, i, worst[j]) {
                add(&mut net, v(i), v(j), cap(inst.seats(i).min(inst.seats(j))));
            }
        }
    }
    for i in 0..k {
        if worst[i] == dummy {
            if is_left(inst.types[i].side) {
                add(&mut net, v(i), d_m(k), cap(inst.seats(i)));
            } else {
                add(&mut net, d_w(k), v(i), cap(inst.seats(i)));
            }
        }
    }
    add(&mut net, d_w(k), d_m(k), cap(n1.min(n2) - c));
    for j in 0..k {
        if !is_left(inst.types[j].side) {
            add(&mut net, v(j), T, cap(inst.seats(j)));
        }
    }
    add(&mut net, d_m(k), T, cap(n1 - c));
    net
}

fn flow_matrix(inst: &TypedInstance, worst: &[usize], c: usize) -> Option<TypeCountMatrix> {
    let k = inst.k();
    let (n1, n2) = side_totals(inst);
    let net = build_flow_network(inst, worst, c);
    let res = max_flow(&net);
    if res.value != (n1 + n2 - c) as i64 {
        return None;
    }
    let mut m = TypeCountMatrix::zeros(k);
    for (a, f) in net.arcs.iter().zip(&res.flow) {
        if a.from >= 2 && a.from < 2 + k && a.to >= 2 && a.to < 2 + k {
            m.set(a.from - 2, a.to - 2, *f as usize);
        }
    }
    for i in 0..k {
        let matched: usize = (0..k).map(|j| m.get(i, j)).sum();
        m.set(i, k, inst.seats(i) - matched);
    }
    Some(m)
}

/// Largest matching realising `worst` in a bipartite instance, by binary
/// search on `c` over flow decisions. `None` when nothing realises it.
pub fn max_realising_smti(inst: &TypedInstance, worst: &[usize]) -> Option<(usize, TypeCountMatrix)> {
    let k = inst.k();
    let dummy = inst.dummy();
    let (n1, n2) = side_totals(inst);
    let trivial = (0..k).all(|i| inst.seats(i) == 0 || worst[i] == dummy);
    let mut best = if trivial {
        let mut m = TypeCountMatrix::zeros(k);
        for i in 0..k {
            m.set(i, k, inst.seats(i));
        }
        m
    } else {
        flow_matrix(inst, worst, 0)?
    };
    // Invariant: `lo` is feasible (witnessed by `best`), `hi + 1` is not
    // known to be feasible.
    let mut lo = best.size();
    let mut hi = n1.min(n2);
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        match flow_matrix(inst, worst, mid) {
            Some(m) => {
                lo = m.size().max(mid);
                best = m;
            }
            None => hi = mid - 1,
        }
    }
    Some((best.size(), best))
}

/// Turns a count matrix into a concrete matching by taking agents of each
/// type in index order (hospitals once per seat).
pub fn counts_to_matching(inst: &TypedInstance, m: &TypeCountMatrix) -> Result<AgentMatching, SolveError> {
    let k = inst.k();
    if m.k() != k {
        return Err(SolveError::InconsistentMatrix(format!(
            "matrix is for {} types, instance has {}",
            m.k(),
            k
        )));
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
    let mut pools: Vec<std::vec::IntoIter<usize>> = (0..k)
        .map(|t| {
            let mut seats = Vec::with_capacity(inst.seats(t));
            for a in inst.agents_of_type(t) {
                for _ in 0..inst.capacity_of_agent(a) {
                    seats.push(a);
                }
            }
            seats.into_iter()
        })
        .collect();
    let mut pairs = Vec::with_capacity(m.size());
    for i in 0..k {
        for j in i..k {
            for _ in 0..m.get(i, j) {
                let a = pools[i].next().expect("row sums checked");
                let b = pools[j].next().expect("row sums checked");
                pairs.push((a, b));
            }
        }
    }
    Ok(AgentMatching::new(pairs))
}

pub(crate) fn check_plain(inst: &TypedInstance) -> Result<(), SolveError> {
    if inst.kind == ProblemKind::Hrc || !inst.couples.is_empty() {
        return Err(SolveError::Unsupported("couples need the HRC solver".into()));
    }
    if inst.has_refinements() {
        return Err(SolveError::Unsupported(
            "refined instances need the refined solver".into(),
        ));
    }
    if inst.has_exceptions() {
        return Err(SolveError::Unsupported(
            "exceptions need the exception solver".into(),
        ));
    }
    if inst.dummy_type.is_some() {
        return Err(SolveError::Unsupported(
            "solve the instance before dummy normalisation".into(),
        ));
    }
    Ok(())
}

/// Candidate worst values for type `i`: one representative per
/// indifference class holding a nonempty mutually acceptable type, then the
/// dummy. Classes without possible partners never occur in a matching.
pub fn worst_candidates(inst: &TypedInstance, i: usize) -> Vec<usize> {
    let mut out: Vec<usize> = inst.types[i]
        .pref
        .groups
        .iter()
        .filter(|g| {
            g.iter().any(|&j| {
                inst.mutually_acceptable(i, j)
                    && inst.seats(j) > 0
                    && (j != i || inst.seats(i) >= 2)
            })
        })
        .map(|g| *g.iter().min().expect("groups are nonempty"))
        .collect();
    out.push(inst.dummy());
    out
}

/// Mixed-radix enumeration over per-type option lists.
pub(crate) struct Radix {
    pub sizes: Vec<usize>,
    pub total: usize,
}

impl Radix {
    pub fn new(sizes: Vec<usize>) -> Self {
        let total = sizes
            .iter()
            .try_fold(1usize, |acc, &s| acc.checked_mul(s))
            .expect("profile space overflows usize");
        Radix { sizes, total }
    }

    pub fn digits(&self, mut idx: usize) -> Vec<usize> {
        self.sizes
            .iter()
            .map(|&s| {
                let d = idx % s;
                idx /= s;
                d
            })
            .collect()
    }
}

/// Every candidate full profile, indexed; empty types are fixed to the
/// dummy.
pub fn srti_profile_options(inst: &TypedInstance) -> Vec<Vec<(usize, Option<usize>)>> {
    let dummy = inst.dummy();
    (0..inst.k())
        .map(|i| {
            if inst.seats(i) == 0 {
                return vec![(dummy, None)];
            }
            let cands = worst_candidates(inst, i);
            let mut opts = Vec::new();
            for &w in &cands {
                if inst.seats(i) == 1 {
                    opts.push((w, None));
                    continue;
                }
                for &s in &cands {
                    if inst.weakly_prefers(i, s, w) {
                        let p = (w, Some(s));
                        if s == w && w != dummy && seats_in_class(inst, i, w) < 2 {
                            continue;
                        }
                        opts.push(p);
                    }
                }
            }
            opts
        })
        .collect()
}

fn profile_at(options: &[Vec<(usize, Option<usize>)>], digits: &[usize]) -> WorstProfile {
    let (worst, secondworst) = options
        .iter()
        .zip(digits)
        .map(|(o, &d)| o[d])
        .unzip();
    WorstProfile { worst, secondworst }
}

type Found = Result<(usize, TypeCountMatrix, WorstProfile), SolveError>;

fn reduce_best(total: usize, f: impl Fn(usize) -> Option<Found> + Sync + Send) -> Result<Option<(usize, TypeCountMatrix, WorstProfile)>, SolveError> {
    // Errors get the highest key so they surface deterministically.
    let best = par::best_by_key(total, f, |r: &Found| match r {
        Ok((size, _, _)) => *size as i64,
        Err(_) => i64::MAX,
    });
    match best {
        None => Ok(None),
        Some((_, r)) => r.map(Some),
    }
}

fn finish(inst: &TypedInstance, found: Option<(usize, TypeCountMatrix, WorstProfile)>, profiles: usize) -> Result<Solved, SolveError> {
    let (size, counts, profile) = found.ok_or(SolveError::NoStable)?;
    let matching = counts_to_matching(inst, &counts)?;
    Ok(Solved {
        size,
        matching,
        counts,
        profile,
        profiles,
    })
}

/// Maximum stable matching through full profiles and the integer program.
/// Works for roommates and (less efficiently) bipartite instances.
pub fn solve_max_srti(inst: &TypedInstance) -> Result<Solved, SolveError> {
    check_plain(inst)?;
    let options = srti_profile_options(inst);
    let radix = Radix::new(options.iter().map(Vec::len).collect());
    let found = reduce_best(radix.total, |idx| {
        let p = profile_at(&options, &radix.digits(idx));
        match is_i_stable(inst, &p) {
            Ok(true) => {}
            Ok(false) => return None,
            Err(e) => return Some(Err(e)),
        }
        match max_realising_srti(inst, &p) {
            Ok(Some((size, m))) => Some(Ok((size, m, p))),
            Ok(None) => None,
            Err(e) => Some(Err(e)),
        }
    })?;
    finish(inst, found, radix.total)
}

/// Maximum stable matching of a bipartite instance (SMTI, or HRT through
/// seats) through worst-only profiles and max-flow.
pub fn solve_max_smti(inst: &TypedInstance) -> Result<Solved, SolveError> {
    check_plain(inst)?;
    if !inst.kind.is_bipartite() {
        return Err(SolveError::Unsupported(
            "the flow path needs a bipartite instance".into(),
        ));
    }
    let options: Vec<Vec<usize>> = (0..inst.k())
        .map(|i| {
            if inst.seats(i) == 0 {
                vec![inst.dummy()]
            } else {
                worst_candidates(inst, i)
            }
        })
        .collect();
    let radix = Radix::new(options.iter().map(Vec::len).collect());
    let found = reduce_best(radix.total, |idx| {
        let worst: Vec<usize> = options
            .iter()
            .zip(radix.digits(idx))
            .map(|(o, d)| o[d])
            .collect();
        if !is_worst_stable(inst, &worst) {
            return None;
        }
        let (size, m) = max_realising_smti(inst, &worst)?;
        let p = WorstProfile {
            secondworst: vec![None; worst.len()],
            worst,
        };
        Some(Ok((size, m, p)))
    })?;
    finish(inst, found, radix.total)
}

/// Dispatches to the flow path for bipartite kinds and to the integer
/// program for roommates.
pub fn solve_max(inst: &TypedInstance) -> Result<Solved, SolveError> {
    if inst.kind.is_bipartite() {
        solve_max_smti(inst)
    } else {
        solve_max_srti(inst)
    }
}

/// Number of worst-only profiles the flow path enumerates.
pub fn smti_profile_count(inst: &TypedInstance) -> usize {
    (0..inst.k())
        .map(|i| {
            if inst.seats(i) == 0 {
                1
            } else {
                worst_candidates(inst, i).len()
            }
        })
        .product()
}

/// All worst-only profiles (bipartite) in enumeration order.
pub fn all_worst_profiles(inst: &TypedInstance) -> Vec<Vec<usize>> {
    let options: Vec<Vec<usize>> = (0..inst.k())
        .map(|i| {
            if inst.seats(i) == 0 {
                vec![inst.dummy()]
            } else {
                worst_candidates(inst, i)
            }
        })
        .collect();
    let radix = Radix::new(options.iter().map(Vec::len).collect());
    (0..radix.total)
        .map(|idx| {
            options
                .iter()
                .zip(radix.digits(idx))
                .map(|(o, d)| o[d])
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::parse::parse_instance;

    fn inst(text: &str) -> TypedInstance {
        parse_instance(text).unwrap()
    }

    fn example_one() -> TypedInstance {
        inst("problem smti\ntypes 4\n\
              type 1 side=m count=3 prefs=(2 3) 4\n\
              type 2 side=w count=2 prefs=1\n\
              type 3 side=w count=2 prefs=1\n\
              type 4 side=w count=3 prefs=1\n")
    }

    fn odd_cycle() -> TypedInstance {
        inst("problem srti\ntypes 3\n\
              type 1 side=none count=1 prefs=2 3\n\
              type 2 side=none count=1 prefs=3 1\n\
              type 3 side=none count=1 prefs=1 2\n")
    }

    #[test]
    fn trivial_profiles() {
        let i = inst("problem smti\ntypes 2\ntype 1 side=m count=1 prefs=2\ntype 2 side=w count=1 prefs=1\n");
        let d = i.dummy();
        assert!(!is_worst_stable(&i, &[d, d]));
        assert!(is_worst_stable(&i, &[1, 0]));
        assert_eq!(max_realising_smti(&i, &[1, 0]).unwrap().0, 1);
        // Forcing a real partner for everyone while only dummies... none
        // here; all-dummy realises size up to 1 as well.
        assert_eq!(max_realising_smti(&i, &[d, d]).unwrap().0, 1);
    }

    #[test]
    fn example_one_max_size() {
        let i = example_one();
        let s = solve_max_smti(&i).unwrap();
        assert_eq!(s.size, 3);
        assert!(oracle::blocking_report(&i, &s.matching).unwrap().is_stable());
        let ip = solve_max_srti(&i).unwrap();
        assert_eq!(ip.size, 3);
    }

    #[test]
    fn complete_indifference_takes_min_side() {
        let i = inst("problem smti\ntypes 2\ntype 1 side=m count=3 prefs=2\ntype 2 side=w count=5 prefs=1\n");
        assert_eq!(solve_max(&i).unwrap().size, 3);
    }

    #[test]
    fn odd_cycle_has_no_stable_matching() {
        assert_eq!(solve_max_srti(&odd_cycle()), Err(SolveError::NoStable));
    }

    #[test]
    fn all_dummy_profile_realises_size_zero() {
        let i = odd_cycle();
        let d = i.dummy();
        let p = WorstProfile {
            worst: vec![d; 3],
            secondworst: vec![None; 3],
        };
        let (size, m) = max_realising_srti(&i, &p).unwrap().unwrap();
        assert!(size <= 1);
        assert_eq!(counts_to_matching(&i, &m).unwrap().size(), size);
    }

    #[test]
    fn induced_profile_of_matching() {
        let i = example_one();
        // m1-w1 (type 2), m2-w5 (type 4), m3 unmatched.
        let m = AgentMatching::new([(0, 3), (1, 7)]);
        let p = profile_of_matching(&i, &m);
        assert_eq!(p.worst[0], i.dummy());
        assert_eq!(p.secondworst[0], Some(3));
        // Type 3 is tied with type 2, reported through representative 2.
        let m2 = AgentMatching::new([(0, 5)]);
        assert_eq!(profile_of_matching(&i, &m2).secondworst[0], Some(i.dummy()));
    }

    #[test]
    fn hospitals_use_seats() {
        let i = inst("problem hrt\ntypes 2\n\
                      type 1 side=h count=1 cap=2 prefs=2\n\
                      type 2 side=r count=3 prefs=1\n");
        let s = solve_max(&i).unwrap();
        assert_eq!(s.size, 2);
        assert!(oracle::blocking_report(&i, &s.matching).unwrap().is_stable());
    }

    #[test]
    fn counts_reject_bad_rows() {
        let i = example_one();
        let m = TypeCountMatrix::zeros(i.k());
        assert!(matches!(
            counts_to_matching(&i, &m),
            Err(SolveError::InconsistentMatrix(_))
        ));
        let mut ok = TypeCountMatrix::zeros(i.k());
        for t in 0..i.k() {
            ok.set(t, i.k(), i.seats(t));
        }
        assert_eq!(counts_to_matching(&i, &ok).unwrap().size(), 0);
    }

    #[test]
    fn flow_network_capacities() {
        let i = example_one();
        let (n1, n2) = (7usize, 3usize);
        let worst = vec![i.dummy(); 4];
        let net = build_flow_network(&i, &worst, 3);
        let cap = |a: usize, b: usize| {
            net.arcs
                .iter()
                .find(|x| x.from == a && x.to == b)
                .map(|x| x.cap)
        };
        use vertex::*;
        assert_eq!(cap(S, d_w(4)), Some((n2 - 3) as i64));
        assert_eq!(cap(d_w(4), d_m(4)), Some((n1.min(n2) - 3) as i64));
        assert_eq!(cap(d_m(4), T), Some((n1 - 3) as i64));
        assert_eq!(cap(S, v(1)), Some(2));
        assert_eq!(cap(v(0), T), Some(3));
        assert_eq!(cap(d_w(4), v(0)), Some(3));
        assert_eq!(cap(v(3), d_m(4)), Some(3));
    }
}
