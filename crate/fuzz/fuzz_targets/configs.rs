#![no_main]

use libfuzzer_sys::fuzz_target;
use scenegan::fusion::FusionConfig;
use scenegan::gan::TrainConfig;
use scenegan::pipeline::DatasetConfig;

fuzz_target!(|text: &str| {
    if let Ok(c) = serde_json::from_str::<TrainConfig>(text) {
        let _ = c.validate();
    }
    if let Ok(c) = serde_json::from_str::<FusionConfig>(text) {
        let _ = c.validate();
    }
    let _ = serde_json::from_str::<DatasetConfig>(text);
});
