//! Shared helpers for the integration suites.
#![allow(dead_code)]

use stm_core::gen::{generate, GenModel, GenParams};
use stm_core::{ProblemKind, TypedInstance};

/// Random small instance; `salt` separates the streams of different suites.
pub fn small(kind: ProblemKind, model: GenModel, seed: u64, salt: u64, max_n: usize) -> TypedInstance {
    let mix = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ salt;
    let k = 2 + (mix % 3) as usize;
    let couples = 1 + (mix >> 16) as usize % 2;
    let mut n = k + (mix >> 8) as usize % (max_n + 1 - k);
    if model == GenModel::Hrc {
        n = n.max(2 * couples + k);
    }
    let p = GenParams {
        kind,
        model,
        k,
        n,
        accept: 0.75,
        ties: 0.35,
        max_capacity: 2,
        exception: 0.35,
        couples,
        strict: false,
    };
    generate(mix, &p).expect("generator parameters are consistent")
}
