#![no_main]

use elliptic_gas::sampler::SamplerConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(config) = serde_json::from_slice::<SamplerConfig>(data) {
        let _ = config.validate();
    }
});
