#![no_main]

use libfuzzer_sys::fuzz_target;
use scenegan::scene::SegMap;

fuzz_target!(|bytes: &[u8]| {
    if let Ok(seg) = SegMap::decode(bytes) {
        let bytes = seg.encode();
        assert_eq!(SegMap::decode(&bytes).expect("encoded map decodes").encode(), bytes);
    }
});
