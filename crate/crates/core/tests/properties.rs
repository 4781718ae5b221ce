//! Property-based invariants, each checked against the brute-force oracle.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use stm_core::gen::GenModel;
use stm_core::graphalg::has_perfect_matching;
use stm_core::oracle::{self, Checker};
use stm_core::typed::{self, TypeCountMatrix};
use stm_core::{
    derive_types, exceptions, expand_to_agent_level, hrc, parse_instance, quality, refined,
    write_instance, AgentInstance, AgentMatching, ProblemKind, TypedInstance,
};

fn kind() -> impl Strategy<Value = ProblemKind> {
    prop_oneof![
        Just(ProblemKind::Smti),
        Just(ProblemKind::Srti),
        Just(ProblemKind::Hrt)
    ]
}

/// Agent lists keyed by name, groups as sorted name sets.
fn by_name(a: &AgentInstance) -> BTreeMap<String, (String, usize, Vec<BTreeSet<String>>)> {
    (0..a.n())
        .map(|x| {
            let lists = a.lists[x]
                .iter()
                .map(|g| g.iter().map(|&y| a.names[y].clone()).collect())
                .collect();
            (a.names[x].clone(), (format!("{:?}", a.side[x]), a.capacity[x], lists))
        })
        .collect()
}

/// Stable matchings as sets of name pairs, ignoring pairs with agents
/// outside `keep`.
fn stable_sets(inst: &TypedInstance, keep: &BTreeSet<String>) -> BTreeSet<Vec<(String, String)>> {
    oracle::all_stable_matchings(inst)
        .unwrap()
        .into_iter()
        .map(|m| {
            let mut v: Vec<(String, String)> = m
                .pairs
                .iter()
                .map(|&(a, b)| (inst.agent_name(a).to_string(), inst.agent_name(b).to_string()))
                .filter(|(a, b)| keep.contains(a) && keep.contains(b))
                .collect();
            v.sort();
            v
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 96, ..ProptestConfig::default() })]

    #[test]
    fn generator_is_deterministic_and_round_trips(seed in any::<u64>(), kind in kind()) {
        let a = common::small(kind, GenModel::Refined, seed, 11, 8);
        let b = common::small(kind, GenModel::Refined, seed, 11, 8);
        prop_assert_eq!(&a, &b);
        let text = write_instance(&a);
        prop_assert_eq!(parse_instance(&text).unwrap(), a);
    }

    #[test]
    fn derived_types_reproduce_the_expansion(seed in any::<u64>(), kind in kind()) {
        let inst = common::small(kind, GenModel::Typed, seed, 12, 8);
        let agents = expand_to_agent_level(&inst);
        // Agents accepting nobody have no typed counterpart.
        prop_assume!(agents.lists.iter().all(|l| !l.is_empty()));
        let derived = derive_types(kind, &agents).unwrap();
        prop_assert!(derived.k() <= inst.k());
        prop_assert_eq!(by_name(&expand_to_agent_level(&derived)), by_name(&agents));
    }

    #[test]
    fn expansion_preserves_acceptability(seed in any::<u64>(), kind in kind()) {
        let inst = common::small(kind, GenModel::Typed, seed, 13, 8);
        let agents = expand_to_agent_level(&inst);
        for a in 0..inst.n() {
            for b in 0..inst.n() {
                if a == b {
                    continue;
                }
                let (i, j) = (inst.agent_type(a), inst.agent_type(b));
                prop_assert_eq!(agents.acceptable(a, b), inst.types[i].pref.contains(j));
            }
        }
    }

    #[test]
    fn dummies_keep_the_stable_matchings(seed in any::<u64>(), kind in kind()) {
        let inst = common::small(kind, GenModel::Typed, seed, 14, 5);
        let real: BTreeSet<String> = inst.agent_names().iter().cloned().collect();
        let norm = inst.normalize_with_dummies();
        prop_assume!(norm.n() <= oracle::caps().0);
        prop_assert_eq!(stable_sets(&norm, &real), stable_sets(&inst, &real));
    }

    #[test]
    fn strict_marriage_stable_matchings_share_a_size(seed in any::<u64>()) {
        let inst = common::small(ProblemKind::Smti, GenModel::Typed, seed, 15, 8);
        let strict = refined::break_ties(&inst).unwrap();
        let sizes: BTreeSet<usize> = oracle::all_stable_matchings(&strict)
            .unwrap()
            .iter()
            .map(AgentMatching::size)
            .collect();
        prop_assert!(sizes.len() <= 1, "sizes {:?}", sizes);
    }

    #[test]
    fn count_realisation_is_stable_and_faithful(seed in any::<u64>(), kind in kind()) {
        let inst = common::small(kind, GenModel::Typed, seed, 16, 8);
        if let Ok(s) = typed::solve_max(&inst) {
            let m = typed::counts_to_matching(&inst, &s.counts).unwrap();
            prop_assert_eq!(TypeCountMatrix::of_matching(&inst, &m), s.counts);
            prop_assert!(oracle::blocking_report(&inst, &m).unwrap().is_stable());
        }
    }

    #[test]
    fn block_counts_match_every_matching(seed in any::<u64>(), roommates in any::<bool>()) {
        let kind = if roommates { ProblemKind::Srti } else { ProblemKind::Smti };
        let inst = common::small(kind, GenModel::Typed, seed, 17, 6);
        for m in oracle::enumerate_matchings(&inst).unwrap() {
            let counts = TypeCountMatrix::of_matching(&inst, &m);
            let report = oracle::blocking_report(&inst, &m).unwrap();
            prop_assert_eq!(quality::count_bp_from_counts(&inst, &counts), report.blocking_pairs.len());
            prop_assert_eq!(quality::count_ba_from_counts(&inst, &counts), report.blocking_agents.len());
            // Any realisation of the same counts has the same blocks.
            let again = typed::counts_to_matching(&inst, &counts).unwrap();
            let r2 = oracle::blocking_report(&inst, &again).unwrap();
            prop_assert_eq!(r2.blocking_pairs.len(), report.blocking_pairs.len());
        }
    }

    #[test]
    fn quality_signature_is_sound(seed in any::<u64>(), roommates in any::<bool>()) {
        let kind = if roommates { ProblemKind::Srti } else { ProblemKind::Smti };
        let inst = common::small(kind, GenModel::Typed, seed, 18, 6);
        let out = quality::solve_min_ba(&inst, false).unwrap();
        let actual = quality::TypeSignature::of_counts(&TypeCountMatrix::of_matching(&inst, &out.matching));
        prop_assert_eq!(actual, out.signature);
    }

    #[test]
    fn refined_realisation_keeps_counts_and_blocks(seed in any::<u64>(), roommates in any::<bool>()) {
        let kind = if roommates { ProblemKind::Srti } else { ProblemKind::Smti };
        let inst = common::small(kind, GenModel::Refined, seed, 19, 7);
        let relax = inst.typed_relaxation();
        for m in oracle::enumerate_matchings(&relax).unwrap() {
            let counts = TypeCountMatrix::of_matching(&relax, &m);
            let real = refined::realize_refined_unchecked(&inst, &counts).unwrap();
            prop_assert_eq!(TypeCountMatrix::of_matching(&inst, &real), counts.clone());
            let report = oracle::blocking_report(&inst, &real).unwrap();
            prop_assert_eq!(report.blocking_pairs.len(), quality::count_bp_from_counts(&relax, &counts));
        }
    }

    #[test]
    fn refinement_keeps_the_maximum_size(seed in any::<u64>(), kind in kind()) {
        let inst = common::small(kind, GenModel::Refined, seed, 20, 8);
        let refined_size = oracle::max_stable_brute(&inst).unwrap().map(|x| x.0);
        let typed_size = oracle::max_stable_brute(&inst.typed_relaxation()).unwrap().map(|x| x.0);
        prop_assert_eq!(refined_size, typed_size);
    }

    #[test]
    fn exceptional_pairs_respect_subtypes(seed in any::<u64>()) {
        let inst = common::small(ProblemKind::Smti, GenModel::OneTop, seed, 21, 8);
        let red = exceptions::preprocess_mutual(&inst).unwrap().reduced;
        let sol = exceptions::solve_1top_max_smti(&red).unwrap();
        let ext = exceptions::exceptional_candidates(&red);
        let subtypes = exceptions::compute_subtypes(&red);
        for &(a, b) in &sol.matching.pairs {
            for (x, y) in [(a, b), (b, a)] {
                if ext[x] == Some(y) {
                    let s = subtypes[y];
                    let rep = typed::class_rep(&red, s.base, red.agent_type(x));
                    prop_assert_eq!(s.class, Some(rep));
                }
            }
        }
    }

    #[test]
    fn exception_graph_decides_realisability(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let inst = common::small(ProblemKind::Smti, GenModel::OneTop, seed, 22, 8);
        let red = exceptions::preprocess_mutual(&inst).unwrap().reduced;
        let all = oracle::enumerate_matchings(&red).unwrap();
        let stable = oracle::all_stable_matchings(&red).unwrap();
        prop_assume!(!stable.is_empty());
        let f = exceptions::exworst_of_matching(&red, pick.get(&stable));
        prop_assert!(exceptions::is_exception_stable(&red, &f));
        let rank = |i: usize, v: exceptions::ExVal| match v {
            exceptions::ExVal::Exceptional => -1,
            exceptions::ExVal::Partner(j) => red.rank(i, j) as i64,
        };
        let realising: Vec<&AgentMatching> = all
            .iter()
            .filter(|m| {
                exceptions::exworst_of_matching(&red, m)
                    .iter()
                    .all(|(s, &v)| rank(s.base, v) <= rank(s.base, f[s]))
            })
            .collect();
        for m in &realising {
            prop_assert!(oracle::blocking_report(&red, m).unwrap().is_stable());
        }
        let realising: Vec<usize> = realising.iter().map(|m| m.size()).collect();
        for c in 0..=red.n() / 2 {
            let g = exceptions::build_exception_graph(&red, &f, c).unwrap();
            prop_assert_eq!(
                has_perfect_matching(&g),
                realising.iter().any(|&s| s >= c),
                "c = {}", c
            );
        }
    }

    #[test]
    fn couple_solver_meets_its_profile(seed in any::<u64>()) {
        let inst = common::small(ProblemKind::Hrc, GenModel::Hrc, seed, 23, 8);
        if let Ok(sol) = hrc::solve_max_hrc(&inst) {
            prop_assert_eq!(hrc::hrc_profile_of_matching(&inst, &sol.matching), sol.profile);
        }
    }

    #[test]
    fn checker_agrees_with_report(seed in any::<u64>(), kind in kind()) {
        let inst = common::small(kind, GenModel::Typed, seed, 24, 7);
        let c = Checker::new(&inst);
        for m in c.matchings().unwrap() {
            prop_assert_eq!(c.is_stable(&m), oracle::blocking_report(&inst, &m).unwrap().is_stable());
        }
    }
}
