//! Quality objectives when stability is out of reach: fewest blocking
//! pairs, fewest blocking agents, and matchings with an exact number of
//! blocking pairs, optionally among maximum-cardinality matchings.
//!
//! Agents of one type are interchangeable, so the number of blocking pairs
//! depends only on the type-count matrix and is a quadratic form in its
//! entries. Whether an agent blocks depends only on which entries are
//! nonzero (the signature); with the signature fixed the blocking-agent
//! count is linear, so signatures are enumerated and each is solved as an
//! integer program.

use serde::{Deserialize, Serialize};

use crate::error::SolveError;
use crate::graphalg::{max_flow, FlowNetwork};
use crate::instance::{ProblemKind, TypedInstance};
use crate::matching::AgentMatching;
use crate::par;
use crate::smallip::{self, IpError, Relation, Sense};
use crate::typed::{check_plain, counts_to_matching, is_left, vertex, CountModel, Radix, TypeCountMatrix};

/// Which entries `n{i,j}` (over `0..=k`, dummy included) are nonzero.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TypeSignature {
    /// Symmetric `(k+1)×(k+1)` table.
    pub v: Vec<Vec<bool>>,
}

impl TypeSignature {
    pub fn of_counts(m: &TypeCountMatrix) -> Self {
        TypeSignature {
            v: m.n.iter().map(|r| r.iter().map(|&x| x > 0).collect()).collect(),
        }
    }
}

/// Result of a quality solver.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityOutcome {
    /// Blocking pairs or blocking agents, depending on the objective.
    pub value: usize,
    pub matching: AgentMatching,
    pub counts: TypeCountMatrix,
    pub signature: TypeSignature,
}

fn check_quality(inst: &TypedInstance) -> Result<(), SolveError> {
    check_plain(inst)?;
    if inst.kind == ProblemKind::Hrt {
        return Err(SolveError::Unsupported(
            "quality objectives need unit capacities (SMTI or SRTI)".into(),
        ));
    }
    Ok(())
}

/// Agents of type `i` whose partner type (dummy included) is strictly worse
/// for them than `j`.
fn worse_than(inst: &TypedInstance, m: &TypeCountMatrix, i: usize, j: usize) -> usize {
    (0..=inst.k())
        .filter(|&l| inst.prefers(i, j, l))
        .map(|l| m.agents_with(i, l))
        .sum()
}

/// Number of blocking pairs of any matching with counts `m`.
///
/// A type-`i` agent and a type-`j` agent block exactly when each has a
/// partner strictly worse than the other's type, so pairs of distinct types
/// contribute a product of two such counts and pairs inside one type a
/// binomial coefficient.
pub fn count_bp_from_counts(inst: &TypedInstance, m: &TypeCountMatrix) -> usize {
    let k = inst.k();
    let mut total = 0;
    for i in 0..k {
        for j in i..k {
            if !inst.mutually_acceptable(i, j) {
                continue;
            }
            let a = worse_than(inst, m, i, j);
            total += if i == j {
                a * a.saturating_sub(1) / 2
            } else {
                a * worse_than(inst, m, j, i)
            };
        }
    }
    total
}

/// Whether an agent of type `i` partnered with type `j` blocks, given
/// `level(a, b) = min(n{a,b}, 2)`.
///
/// It blocks when some agent of a type `j'` it prefers to `j` has a partner
/// of a type worse (for `j'`) than `i`. The witness must differ from the
/// agent itself, which needs a second agent when `(j', i') = (i, j)`.
fn blocks(inst: &TypedInstance, level: &impl Fn(usize, usize) -> usize, i: usize, j: usize) -> bool {
    let k = inst.k();
    (0..k).filter(|&jp| inst.prefers(i, jp, j)).any(|jp| {
        (0..=k)
            .filter(|&ip| inst.prefers(jp, i, ip))
            .any(|ip| level(jp, ip) > usize::from((jp, ip) == (i, j)))
    })
}

/// Number of blocking agents of any matching with counts `m`.
pub fn count_ba_from_counts(inst: &TypedInstance, m: &TypeCountMatrix) -> usize {
    let k = inst.k();
    let level = |a: usize, b: usize| m.get(a, b).min(2);
    let mut total = 0;
    for i in 0..k {
        for j in 0..=k {
            let c = m.agents_with(i, j);
            if c > 0 && blocks(inst, &level, i, j) {
                total += c;
            }
        }
    }
    total
}

/// Largest matching size ignoring stability: max-flow on the type-level
/// acceptability network for bipartite kinds, the count program otherwise.
pub fn c_max(inst: &TypedInstance) -> Result<usize, SolveError> {
    let k = inst.k();
    if inst.kind.is_bipartite() {
        use vertex::{v, S, T};
        let mut net = FlowNetwork::new(k + 2, S, T);
        for i in 0..k {
            let seats = inst.seats(i) as i64;
            let arc = if is_left(inst.types[i].side) {
                net.add_arc(S, v(i), seats)
            } else {
                net.add_arc(v(i), T, seats)
            };
            arc.expect("vertices in range");
        }
        for i in (0..k).filter(|&i| is_left(inst.types[i].side)) {
            for j in (0..k).filter(|&j| !is_left(inst.types[j].side)) {
                if inst.mutually_acceptable(i, j) {
                    let cap = inst.seats(i).min(inst.seats(j)) as i64;
                    net.add_arc(v(i), v(j), cap).expect("vertices in range");
                }
            }
        }
        Ok(max_flow(&net).value as usize)
    } else {
        let mut model = CountModel::new(inst, Sense::Max);
        let size = model.size_terms();
        model.ip.set_linear_objective(&size);
        Ok(smallip::solve(&model.ip)?.value as usize)
    }
}

type QuadTerms = Vec<(usize, usize, i64)>;
type LinTerms = Vec<(usize, i64)>;

/// `2·BP` as a quadratic form `(pairs, linear)` over the count variables.
fn bp_form(model: &CountModel, inst: &TypedInstance) -> (QuadTerms, LinTerms) {
    let k = inst.k();
    let worse = |i: usize, j: usize| model.terms(i, |l| inst.prefers(i, j, l));
    let mut quad = Vec::new();
    let mut linear = Vec::new();
    for i in 0..k {
        for j in i..k {
            if !inst.mutually_acceptable(i, j) {
                continue;
            }
            let a = worse(i, j);
            if i == j {
                for &(x, cx) in &a {
                    for &(y, cy) in &a {
                        quad.push((x, y, cx * cy));
                    }
                    linear.push((x, -cx));
                }
            } else {
                for &(x, cx) in &a {
                    for &(y, cy) in &worse(j, i) {
                        quad.push((x, y, 2 * cx * cy));
                    }
                }
            }
        }
    }
    (quad, linear)
}

/// Count model, with the size pinned to `size` when given.
fn base_model(inst: &TypedInstance, sense: Sense, size: Option<usize>) -> CountModel {
    let mut model = CountModel::new(inst, sense);
    if let Some(c) = size {
        let terms = model.size_terms();
        model.ip.add_constraint(&terms, Relation::Eq, c as i64);
    }
    model
}

fn target_size(inst: &TypedInstance, require_max_size: bool) -> Result<Option<usize>, SolveError> {
    Ok(if require_max_size { Some(c_max(inst)?) } else { None })
}

fn outcome(inst: &TypedInstance, value: usize, counts: TypeCountMatrix) -> Result<QualityOutcome, SolveError> {
    let matching = counts_to_matching(inst, &counts)?;
    Ok(QualityOutcome {
        value,
        matching,
        signature: TypeSignature::of_counts(&counts),
        counts,
    })
}

/// Matching with the fewest blocking pairs (among maximum-cardinality
/// matchings when `require_max_size`).
pub fn solve_min_bp(inst: &TypedInstance, require_max_size: bool) -> Result<QualityOutcome, SolveError> {
    check_quality(inst)?;
    let mut model = base_model(inst, Sense::Min, target_size(inst, require_max_size)?);
    let (quad, linear) = bp_form(&model, inst);
    model.ip.set_quadratic_objective(&quad);
    model.ip.set_linear_objective(&linear);
    let sol = smallip::solve(&model.ip)?;
    let counts = model.matrix(&sol.assignment);
    outcome(inst, sol.value as usize / 2, counts)
}

/// Some matching with exactly `z` blocking pairs, if one exists.
pub fn solve_exact_bp(inst: &TypedInstance, z: usize) -> Result<Option<QualityOutcome>, SolveError> {
    check_quality(inst)?;
    let n = inst.n();
    if z > n * n.saturating_sub(1) / 2 {
        return Ok(None);
    }
    let mut model = CountModel::new(inst, Sense::Min);
    let (quad, linear) = bp_form(&model, inst);
    let rhs = 2 * z as i64;
    model
        .ip
        .add_quadratic_constraint(&quad, &linear, Relation::Le, rhs);
    model
        .ip
        .add_quadratic_constraint(&quad, &linear, Relation::Ge, rhs);
    match smallip::solve(&model.ip) {
        Ok(sol) => {
            let counts = model.matrix(&sol.assignment);
            outcome(inst, z, counts).map(Some)
        }
        Err(IpError::Infeasible) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// An entry of the signature enumeration: the pair, its variable, its
/// upper bound and how many levels (`0`, `1`, `≥2`) are distinguished.
struct SigPair {
    i: usize,
    j: usize,
    var: usize,
    upper: usize,
    levels: usize,
}

fn sig_pairs(inst: &TypedInstance, model: &CountModel) -> Vec<SigPair> {
    let k = inst.k();
    let mut out = Vec::new();
    for i in 0..k {
        for j in i..=k {
            let Some(var) = model.var[i][j] else { continue };
            let upper = if j == k {
                inst.seats(i)
            } else if i == j {
                inst.seats(i) / 2
            } else {
                inst.seats(i).min(inst.seats(j))
            };
            if upper == 0 {
                continue;
            }
            // A second agent matters only when the pair can witness its own
            // members' blocking.
            let multiple = inst.prefers(i, i, j) || (j < k && inst.prefers(j, j, i));
            let levels = if multiple && upper >= 2 { 3 } else { 2 };
            out.push(SigPair { i, j, var, upper, levels });
        }
    }
    out
}

type Candidate = Result<(usize, TypeCountMatrix), SolveError>;

fn signature_candidate(
    inst: &TypedInstance,
    pairs: &[SigPair],
    digits: &[usize],
    size: Option<usize>,
) -> Option<Candidate> {
    let k = inst.k();
    // Row feasibility of the lower bounds before building a program.
    let mut low = vec![0usize; k];
    for (p, &d) in pairs.iter().zip(digits) {
        let l = d.min(2);
        low[p.i] += if p.i == p.j { 2 * l } else { l };
        if p.j < k && p.j != p.i {
            low[p.j] += l;
        }
    }
    if (0..k).any(|i| low[i] > inst.seats(i)) {
        return None;
    }
    let mut level = vec![vec![0usize; k + 1]; k + 1];
    for (p, &d) in pairs.iter().zip(digits) {
        level[p.i][p.j] = d;
        level[p.j][p.i] = d;
    }
    let lv = |a: usize, b: usize| level[a][b];
    let mut model = base_model(inst, Sense::Min, size);
    for i in 0..=k {
        for j in i..=k {
            if level[i][j] == 0 {
                if let Some(v) = model.var[i][j] {
                    model.ip.add_constraint(&[(v, 1)], Relation::Eq, 0);
                }
            }
        }
    }
    let mut objective = Vec::new();
    for (p, &d) in pairs.iter().zip(digits) {
        match (d, p.levels) {
            (1, 3) => model.ip.add_constraint(&[(p.var, 1)], Relation::Eq, 1),
            (1, _) => model.ip.add_constraint(&[(p.var, 1)], Relation::Ge, 1),
            (2, _) => model.ip.add_constraint(&[(p.var, 1)], Relation::Ge, 2),
            _ => continue,
        }
        let mut coeff = 0;
        if blocks(inst, &lv, p.i, p.j) {
            coeff += if p.i == p.j { 2 } else { 1 };
        }
        if p.j < k && p.i != p.j && blocks(inst, &lv, p.j, p.i) {
            coeff += 1;
        }
        if coeff > 0 {
            objective.push((p.var, coeff));
        }
    }
    model.ip.set_linear_objective(&objective);
    match smallip::solve(&model.ip) {
        Ok(sol) => Some(Ok((sol.value as usize, model.matrix(&sol.assignment)))),
        Err(IpError::Infeasible) => None,
        Err(e) => Some(Err(e.into())),
    }
}

/// Matching with the fewest blocking agents (among maximum-cardinality
/// matchings when `require_max_size`), by enumerating signatures.
pub fn solve_min_ba(inst: &TypedInstance, require_max_size: bool) -> Result<QualityOutcome, SolveError> {
    check_quality(inst)?;
    let size = target_size(inst, require_max_size)?;
    let skeleton = CountModel::new(inst, Sense::Min);
    let pairs = sig_pairs(inst, &skeleton);
    let radix = Radix::new(pairs.iter().map(|p| p.levels).collect());
    let best = par::best_by_key(
        radix.total,
        |idx| signature_candidate(inst, &pairs, &radix.digits(idx), size),
        |r: &Candidate| match r {
            Ok((v, _)) => -(*v as i64),
            Err(_) => i64::MAX,
        },
    );
    let (value, counts) = match best {
        Some((_, r)) => r?,
        None => return Err(SolveError::InfeasibleProfile("no signature is realisable".into())),
    };
    debug_assert!(pairs.iter().all(|p| counts.get(p.i, p.j) <= p.upper));
    outcome(inst, value, counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::parse::parse_instance;

    fn inst(text: &str) -> TypedInstance {
        parse_instance(text).unwrap()
    }

    /// Two men with different first choices over two women who both prefer
    /// the same man: the only stable matching has size 1.
    fn two_by_two() -> TypedInstance {
        inst("problem smti\ntypes 4\n\
              type 1 side=w count=1 prefs=3 4\n\
              type 2 side=w count=1 prefs=3\n\
              type 3 side=m count=1 prefs=1 2\n\
              type 4 side=m count=1 prefs=1\n")
    }

    #[test]
    fn counts_single_unmatched_pair() {
        let i = inst("problem smti\ntypes 2\n\
                      type 1 side=w count=2 prefs=2\n\
                      type 2 side=m count=2 prefs=1\n");
        let mut m = TypeCountMatrix::zeros(2);
        m.set(0, 1, 1);
        m.set(0, 2, 1);
        m.set(1, 2, 1);
        assert_eq!(count_bp_from_counts(&i, &m), 1);
        let agents = counts_to_matching(&i, &m).unwrap();
        let r = oracle::blocking_report(&i, &agents).unwrap();
        assert_eq!(r.blocking_pairs.len(), 1);
        assert_eq!(count_ba_from_counts(&i, &m), r.blocking_agents.len());
    }

    #[test]
    fn same_type_partners_never_block() {
        let i = inst("problem srti\ntypes 1\ntype 1 side=none count=4 prefs=1\n");
        let mut m = TypeCountMatrix::zeros(1);
        m.set(0, 0, 2);
        assert_eq!(count_bp_from_counts(&i, &m), 0);
        assert_eq!(count_ba_from_counts(&i, &m), 0);
    }

    #[test]
    fn max_size_forces_a_blocking_pair() {
        let i = two_by_two();
        assert_eq!(c_max(&i).unwrap(), 2);
        let free = solve_min_bp(&i, false).unwrap();
        assert_eq!(free.value, 0);
        let max = solve_min_bp(&i, true).unwrap();
        let (brute, _) = oracle::min_bp_brute(&i, true).unwrap();
        assert_eq!(max.value, brute);
        assert!(max.value >= 1);
        assert_eq!(max.matching.size(), 2);
        let ba = solve_min_ba(&i, true).unwrap();
        assert_eq!(ba.value, oracle::min_ba_brute(&i, true).unwrap().0);
        let r = oracle::blocking_report(&i, &ba.matching).unwrap();
        assert_eq!(r.blocking_agents.len(), ba.value);
    }

    #[test]
    fn exact_bp_matches_oracle() {
        let i = two_by_two();
        for z in 0..4 {
            let ours = solve_exact_bp(&i, z).unwrap();
            let brute = oracle::exact_bp_brute(&i, z).unwrap();
            assert_eq!(ours.is_some(), brute.is_some(), "z = {z}");
            if let Some(o) = ours {
                let r = oracle::blocking_report(&i, &o.matching).unwrap();
                assert_eq!(r.blocking_pairs.len(), z);
            }
        }
        assert!(solve_exact_bp(&i, 1_000_000).unwrap().is_none());
    }

    #[test]
    fn roommates_c_max_and_self_witness() {
        // Three agents of one type, all acceptable: one must stay single
        // and blocks with nobody, since the other two are matched together.
        let i = inst("problem srti\ntypes 1\ntype 1 side=none count=3 prefs=1\n");
        assert_eq!(c_max(&i).unwrap(), 1);
        let ba = solve_min_ba(&i, false).unwrap();
        assert_eq!(ba.value, 0);
        // Five: two pairs and a single, still no blocking agent; four
        // singles would all block.
        let i = inst("problem srti\ntypes 1\ntype 1 side=none count=5 prefs=1\n");
        assert_eq!(solve_min_ba(&i, false).unwrap().value, 0);
        let mut m = TypeCountMatrix::zeros(1);
        m.set(0, 1, 5);
        assert_eq!(count_ba_from_counts(&i, &m), 5);
        m.set(0, 0, 2);
        m.set(0, 1, 1);
        assert_eq!(count_ba_from_counts(&i, &m), 0);
    }

    #[test]
    fn hrt_is_unsupported() {
        let i = inst("problem hrt\ntypes 2\n\
                      type 1 side=r count=2 prefs=2\n\
                      type 2 side=h count=1 cap=2 prefs=1\n");
        assert!(matches!(solve_min_bp(&i, false), Err(SolveError::Unsupported(_))));
    }
}
