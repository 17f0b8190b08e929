#![no_main]

use libfuzzer_sys::fuzz_target;
use prunekit::io::{read_scores, write_scores};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(v) = read_scores(text) {
        read_scores(&write_scores(&v)).expect("written output parses");
    }
});
