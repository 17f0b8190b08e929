#![no_main]

use libfuzzer_sys::fuzz_target;
use prunekit::io::{read_plan, write_plan};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(v) = read_plan(text) {
        read_plan(&write_plan(&v)).expect("written output parses");
    }
});
