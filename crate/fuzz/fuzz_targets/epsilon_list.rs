#![no_main]

use libfuzzer_sys::fuzz_target;
use torus_pde::scenario::parse_epsilon_list;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(list) = parse_epsilon_list(text) {
        assert!(list.iter().all(|e| e.is_finite() && *e >= 0.0));
        let joined: Vec<String> = list.iter().map(|e| format!("{e:e}")).collect();
        assert_eq!(parse_epsilon_list(&joined.join(",")).unwrap(), list);
    }
});
