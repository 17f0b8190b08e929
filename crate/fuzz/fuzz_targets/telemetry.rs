#![no_main]

use libfuzzer_sys::fuzz_target;
use prunekit::io::{read_telemetry_records, write_telemetry};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(v) = read_telemetry_records(text) {
        read_telemetry_records(&write_telemetry(&v)).expect("written output parses");
    }
});
