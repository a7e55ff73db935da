#![no_main]

use libfuzzer_sys::fuzz_target;
use scenegan::neural::{decode_params, encode_params};

fuzz_target!(|bytes: &[u8]| {
    if let Ok(sections) = decode_params(bytes) {
        let bytes = encode_params(&sections);
        assert_eq!(encode_params(&decode_params(&bytes).expect("encoded params decode")), bytes);
    }
});
