#![no_main]

use elliptic_gas::io::decode_manifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(manifest) = decode_manifest(text) {
        let again = decode_manifest(&manifest.to_json()).expect("encoded manifest must decode");
        assert_eq!(again.command, manifest.command);
    }
});
