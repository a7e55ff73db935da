#![no_main]

use libfuzzer_sys::fuzz_target;
use scenegan::dataset::{parse_log_csv, write_log_csv};

fuzz_target!(|text: &str| {
    if let Ok(traj) = parse_log_csv(text) {
        let again = parse_log_csv(&write_log_csv(&traj)).expect("written log parses");
        assert_eq!(again.len(), traj.len());
    }
});
