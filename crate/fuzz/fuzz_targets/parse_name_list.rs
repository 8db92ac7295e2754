#![no_main]

use elliptic_gas::io::parse_name_list;
use libfuzzer_sys::fuzz_target;

const ALLOWED: &[&str] = &["exact", "erfc", "order1", "order2", "resid1", "resid2"];

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(names) = parse_name_list(text, ALLOWED) {
        assert!(!names.is_empty());
        assert!(names.iter().all(|n| ALLOWED.contains(n)));
    }
});
