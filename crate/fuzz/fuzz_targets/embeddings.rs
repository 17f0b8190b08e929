#![no_main]

use libfuzzer_sys::fuzz_target;
use prunekit::io::read_embeddings;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = read_embeddings(text);
    }
});
