#![no_main]

use libfuzzer_sys::fuzz_target;
use scenegan::dataset::{parse_manifest, write_manifest};

fuzz_target!(|text: &str| {
    if let Ok(entries) = parse_manifest(text) {
        assert_eq!(parse_manifest(&write_manifest(&entries)).expect("written manifest parses"), entries);
    }
});
