#![no_main]

use libfuzzer_sys::fuzz_target;
use prunekit::io::{read_experiment_rows, write_experiment_rows};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(v) = read_experiment_rows(text) {
        read_experiment_rows(&write_experiment_rows(&v)).expect("written output parses");
    }
});
