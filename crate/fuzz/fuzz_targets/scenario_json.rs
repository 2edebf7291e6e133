#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use torus_pde::scenario::{parse_scenario, scenario_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // Sidecar paths resolve under a directory that does not exist, so dense
    // kernels fail cleanly instead of reading the host filesystem.
    let base = Path::new("/nonexistent-fuzz-base");
    if let Ok(s) = parse_scenario(text, base) {
        let again = parse_scenario(&scenario_to_json(&s.spec), base).expect("accepted scenarios re-parse");
        assert_eq!(again.spec, s.spec);
    }
});
