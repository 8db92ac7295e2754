#![no_main]

use elliptic_gas::io::parse_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(table) = parse_csv(text) {
        let again = parse_csv(&table.to_csv()).expect("written table must parse");
        assert_eq!(again.header, table.header);
        assert_eq!(again.rows.len(), table.rows.len());
    }
});
