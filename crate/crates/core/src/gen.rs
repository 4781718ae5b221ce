//! Deterministic pseudo-random instance generator.
//!
//! The same seed and parameters always produce the same instance (ChaCha8
//! stream, no platform-dependent sampling), so generated suites are
//! reproducible byte for byte.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{
    CoupleType, ExceptionEntry, InstanceError, Placement, ProblemKind, Side, TypePreference,
    TypeSpec, TypedInstance,
};

/// Which preference model to generate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GenModel {
    /// Plain typed preferences.
    Typed,
    /// Typed preferences plus consistent agent-level refinements.
    Refined,
    /// Typed bipartite preferences plus at most one top exception per agent.
    OneTop,
    /// Hospitals/residents with couples.
    Hrc,
}

impl GenModel {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "typed" => Some(GenModel::Typed),
            "refined" => Some(GenModel::Refined),
            "1top" => Some(GenModel::OneTop),
            "hrc" => Some(GenModel::Hrc),
            _ => None,
        }
    }
}

/// Shape of a generated instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub kind: ProblemKind,
    pub model: GenModel,
    /// Number of types.
    pub k: usize,
    /// Total number of agents (including couple members).
    pub n: usize,
    /// Probability that a candidate type is acceptable.
    pub accept: f64,
    /// Probability that consecutive acceptable types are tied.
    pub ties: f64,
    /// Largest hospital capacity.
    pub max_capacity: usize,
    /// Per-agent probability of holding a top exception (1top model).
    pub exception: f64,
    /// Number of couples (hrc model).
    pub couples: usize,
    /// Forbid ties between types.
    pub strict: bool,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            kind: ProblemKind::Smti,
            model: GenModel::Typed,
            k: 4,
            n: 8,
            accept: 0.8,
            ties: 0.3,
            max_capacity: 2,
            exception: 0.3,
            couples: 1,
            strict: false,
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum GenError {
    #[error("inconsistent shape: {0}")]
    Shape(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

fn shape(msg: impl Into<String>) -> GenError {
    GenError::Shape(msg.into())
}

/// Random tie-grouped order over `cands`; never empty when `cands` is not.
fn random_pref(rng: &mut ChaCha8Rng, cands: &[usize], p: &GenParams) -> Vec<Vec<usize>> {
    let mut chosen: Vec<usize> = cands.iter().copied().filter(|_| rng.gen_bool(p.accept)).collect();
    if chosen.is_empty() {
        chosen.push(cands[rng.gen_range(0..cands.len())]);
    }
    chosen.shuffle(rng);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for t in chosen {
        match groups.last_mut() {
            Some(g) if !p.strict && rng.gen_bool(p.ties) => g.push(t),
            _ => groups.push(vec![t]),
        }
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    groups
}

/// Splits `total` into `parts` counts, each at least `min`.
fn split(rng: &mut ChaCha8Rng, total: usize, parts: usize, min: usize) -> Vec<usize> {
    let mut out = vec![min; parts];
    for _ in 0..total - min * parts {
        let i = rng.gen_range(0..parts);
        out[i] += 1;
    }
    out
}

/// Generates an instance from a seed.
pub fn generate(seed: u64, p: &GenParams) -> Result<TypedInstance, GenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if p.k == 0 {
        return Err(shape("k must be positive"));
    }
    if !(0.0..=1.0).contains(&p.accept) || !(0.0..=1.0).contains(&p.ties) || !(0.0..=1.0).contains(&p.exception) {
        return Err(shape("probabilities must lie in [0, 1]"));
    }
    match p.model {
        GenModel::Hrc => generate_hrc(&mut rng, p),
        GenModel::OneTop => {
            if !p.kind.is_bipartite() || p.kind == ProblemKind::Hrc {
                return Err(shape("the 1top model needs smti or hrt"));
            }
            let base = generate_typed(&mut rng, p)?;
            add_exceptions(&mut rng, base, p)
        }
        GenModel::Refined => {
            if p.kind == ProblemKind::Hrc {
                return Err(shape("refinements are not generated for hrc"));
            }
            let base = generate_typed(&mut rng, p)?;
            add_refinements(&mut rng, base)
        }
        GenModel::Typed => {
            if p.kind == ProblemKind::Hrc {
                return generate_hrc(&mut rng, p);
            }
            generate_typed(&mut rng, p)
        }
    }
}

fn generate_typed(rng: &mut ChaCha8Rng, p: &GenParams) -> Result<TypedInstance, GenError> {
    let k = p.k;
    if p.n < k {
        return Err(shape("need at least one agent per type"));
    }
    let sides: Vec<Side> = match p.kind {
        ProblemKind::Srti => vec![Side::None; k],
        ProblemKind::Smti | ProblemKind::Hrt => {
            if k < 2 {
                return Err(shape("bipartite instances need at least two types"));
            }
            let (a, b) = if p.kind == ProblemKind::Smti {
                (Side::Woman, Side::Man)
            } else {
                (Side::Hospital, Side::Resident)
            };
            let k1 = rng.gen_range(1..k);
            (0..k).map(|t| if t < k1 { a } else { b }).collect()
        }
        ProblemKind::Hrc => return Err(shape("use the hrc model")),
    };
    let counts = split(rng, p.n, k, 1);
    let mut types = Vec::with_capacity(k);
    for t in 0..k {
        let cands: Vec<usize> = (0..k)
            .filter(|&u| p.kind == ProblemKind::Srti || sides[u] != sides[t])
            .collect();
        let capacity = if sides[t] == Side::Hospital {
            rng.gen_range(1..=p.max_capacity.max(1))
        } else {
            1
        };
        types.push(TypeSpec {
            side: sides[t],
            count: counts[t],
            capacity,
            pref: TypePreference::new(random_pref(rng, &cands, p)),
        });
    }
    Ok(TypedInstance::build(p.kind, types, Vec::new(), Vec::new())?)
}

/// Each type receives a random refinement with probability one half: agents
/// of a single-type group are shuffled into contiguous random ties, a
/// multi-type group stays one tie over all its agents.
fn add_refinements(rng: &mut ChaCha8Rng, inst: TypedInstance) -> Result<TypedInstance, GenError> {
    let mut refinements = vec![None; inst.k()];
    for (t, slot) in refinements.iter_mut().enumerate() {
        if !rng.gen_bool(0.5) {
            continue;
        }
        let mut groups = Vec::new();
        for g in &inst.types[t].pref.groups {
            if g.len() > 1 {
                let all: Vec<usize> = g.iter().flat_map(|&u| inst.agents_of_type(u)).collect();
                if !all.is_empty() {
                    groups.push(all);
                }
                continue;
            }
            let mut agents = inst.agents_of_type(g[0]);
            agents.shuffle(rng);
            let mut cur: Vec<usize> = Vec::new();
            for a in agents {
                if !cur.is_empty() && !rng.gen_bool(0.4) {
                    cur.sort_unstable();
                    groups.push(std::mem::take(&mut cur));
                }
                cur.push(a);
            }
            if !cur.is_empty() {
                cur.sort_unstable();
                groups.push(cur);
            }
        }
        *slot = Some(groups);
    }
    Ok(inst.with_refinements(refinements)?)
}

/// Gives each agent, with probability `exception`, one exceptional
/// candidate on the other side placed at the top.
fn add_exceptions(rng: &mut ChaCha8Rng, inst: TypedInstance, p: &GenParams) -> Result<TypedInstance, GenError> {
    let mut exceptions = Vec::new();
    for a in 0..inst.n() {
        if !rng.gen_bool(p.exception) {
            continue;
        }
        let side = inst.side_of_agent(a);
        let others: Vec<usize> = (0..inst.n()).filter(|&b| inst.side_of_agent(b) != side).collect();
        if let Some(&b) = others.choose(rng) {
            exceptions.push(ExceptionEntry {
                agent: a,
                candidate: b,
                placement: Placement::Top,
            });
        }
    }
    Ok(inst.with_exceptions(exceptions)?)
}

fn generate_hrc(rng: &mut ChaCha8Rng, p: &GenParams) -> Result<TypedInstance, GenError> {
    let k = p.k;
    if k < 2 {
        return Err(shape("hrc needs a resident and a hospital type"));
    }
    let kr = rng.gen_range(1..k);
    let hospitals = k - kr;
    let members = 2 * p.couples;
    if p.n < members + hospitals {
        return Err(shape("n too small for the couples and one hospital per type"));
    }
    let free = p.n - members - hospitals;
    // Agents left for singles and extra hospitals.
    let extra_h = if free > 0 { rng.gen_range(0..=free.min(hospitals)) } else { 0 };
    let singles_total = free - extra_h;
    let hcounts = split(rng, hospitals + extra_h, hospitals, 1);
    let scounts = split(rng, singles_total, kr, 0);
    let hosp_ids: Vec<usize> = (kr..k).collect();
    let res_ids: Vec<usize> = (0..kr).collect();
    let mut types = Vec::with_capacity(k);
    for t in 0..k {
        if t < kr {
            types.push(TypeSpec {
                side: Side::Resident,
                count: scounts[t],
                capacity: 1,
                pref: TypePreference::new(random_pref(rng, &hosp_ids, p)),
            });
        } else {
            types.push(TypeSpec {
                side: Side::Hospital,
                count: hcounts[t - kr],
                capacity: rng.gen_range(1..=p.max_capacity.max(1)),
                pref: TypePreference::new(random_pref(rng, &res_ids, p)),
            });
        }
    }
    let all_pairs: Vec<(usize, usize)> = hosp_ids
        .iter()
        .flat_map(|&a| hosp_ids.iter().map(move |&b| (a, b)))
        .collect();
    let mut couples: Vec<CoupleType> = Vec::new();
    for _ in 0..p.couples {
        let mut i = res_ids[rng.gen_range(0..kr)];
        let mut j = res_ids[rng.gen_range(0..kr)];
        if i > j {
            std::mem::swap(&mut i, &mut j);
        }
        if let Some(ct) = couples.iter_mut().find(|c| c.first == i && c.second == j) {
            ct.count += 1;
            continue;
        }
        let mut chosen: Vec<(usize, usize)> = all_pairs
            .iter()
            .copied()
            .filter(|_| rng.gen_bool(p.accept * 0.7))
            .collect();
        chosen.shuffle(rng);
        let mut pref: Vec<Vec<(usize, usize)>> = Vec::new();
        for pq in chosen {
            match pref.last_mut() {
                Some(g) if !p.strict && rng.gen_bool(p.ties) => g.push(pq),
                _ => pref.push(vec![pq]),
            }
        }
        for g in &mut pref {
            g.sort_unstable();
        }
        couples.push(CoupleType {
            first: i,
            second: j,
            count: 1,
            pref,
            members: Vec::new(),
        });
    }
    Ok(TypedInstance::build(ProblemKind::Hrc, types, Vec::new(), couples)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_instance() {
        let p = GenParams::default();
        let a = generate(7, &p).unwrap();
        let b = generate(7, &p).unwrap();
        assert_eq!(a, b);
        assert_ne!(generate(8, &p).unwrap().to_string(), "");
    }

    #[test]
    fn every_model_validates() {
        for model in [GenModel::Typed, GenModel::Refined, GenModel::OneTop, GenModel::Hrc] {
            for kind in [ProblemKind::Smti, ProblemKind::Srti, ProblemKind::Hrt] {
                let p = GenParams {
                    kind: if model == GenModel::Hrc { ProblemKind::Hrc } else { kind },
                    model,
                    ..GenParams::default()
                };
                for seed in 0..30 {
                    match generate(seed, &p) {
                        Ok(inst) => inst.validate().unwrap(),
                        Err(GenError::Shape(_)) => assert!(model == GenModel::OneTop && kind == ProblemKind::Srti),
                        Err(e) => panic!("{model:?}/{kind:?} seed {seed}: {e}"),
                    }
                }
            }
        }
    }

    #[test]
    fn zero_exception_probability_gives_typed_instance() {
        let p = GenParams {
            model: GenModel::OneTop,
            exception: 0.0,
            ..GenParams::default()
        };
        assert!(!generate(3, &p).unwrap().has_exceptions());
    }
}
