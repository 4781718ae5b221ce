//! Generator determinism: a fixed seed reproduces a checked-in file.
//! Regenerate with `STM_BLESS=1 cargo test --test gen_golden`.

use stm_core::gen::{generate, GenParams};
use stm_core::parse::{parse_instance, write_instance};

const GOLDEN: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/gen_seed1_k4.txt");

#[test]
fn seed1_k4_bipartite_matches_golden() {
    let inst = generate(1, &GenParams::default()).unwrap();
    let text = write_instance(&inst);
    if std::env::var_os("STM_BLESS").is_some() {
        std::fs::write(GOLDEN, &text).unwrap();
    }
    let expected = std::fs::read_to_string(GOLDEN).unwrap();
    assert_eq!(text, expected);
    assert_eq!(parse_instance(&expected).unwrap(), inst);
}
