#![no_main]

use libfuzzer_sys::fuzz_target;
use prunekit::io::{read_class_stats, write_class_stats};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(v) = read_class_stats(text) {
        read_class_stats(&write_class_stats(&v)).expect("written output parses");
    }
});
