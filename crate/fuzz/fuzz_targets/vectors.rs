#![no_main]

use libfuzzer_sys::fuzz_target;
use prunekit::io::{read_vectors, write_vectors};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(v) = read_vectors(text, 'p') {
        read_vectors(&write_vectors(&v, 'p'), 'p').expect("written output parses");
    }
});
