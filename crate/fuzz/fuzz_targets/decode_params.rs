#![no_main]

use elliptic_gas::io::decode_params;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(p) = decode_params(text) {
        assert!((0.0..1.0).contains(&p.t()) && p.total_mass() > 0.0 && p.n() >= 1);
    }
});
