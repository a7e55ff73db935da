#![no_main]

use libfuzzer_sys::fuzz_target;
use scenegan::fusion::parse_jsonl;

fuzz_target!(|text: &str| {
    let _ = parse_jsonl(text);
});
