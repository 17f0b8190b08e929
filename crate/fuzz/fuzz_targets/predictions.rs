#![no_main]

use libfuzzer_sys::fuzz_target;
use prunekit::io::{read_predictions, write_predictions};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(v) = read_predictions(text) {
        read_predictions(&write_predictions(&v)).expect("written output parses");
    }
});
