#![no_main]

use libfuzzer_sys::fuzz_target;
use prunekit::io::{read_quotas, write_quotas};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(v) = read_quotas(text) {
        read_quotas(&write_quotas(&v)).expect("written output parses");
    }
});
