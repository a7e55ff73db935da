#![no_main]

use libfuzzer_sys::fuzz_target;
use scenegan::dataset::{parse_world, write_world};

fuzz_target!(|text: &str| {
    if let Ok(world) = parse_world(text) {
        let text = write_world(&world);
        assert_eq!(write_world(&parse_world(&text).expect("written world parses")), text);
    }
});
