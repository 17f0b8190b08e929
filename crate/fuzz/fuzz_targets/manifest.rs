#![no_main]

use libfuzzer_sys::fuzz_target;
use prunekit::io::{read_manifest, write_manifest};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(v) = read_manifest(text) {
        read_manifest(&write_manifest(&v)).expect("written output parses");
    }
});
