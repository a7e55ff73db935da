#![no_main]

use libfuzzer_sys::fuzz_target;
use scenegan::eval::MetricReport;

fuzz_target!(|text: &str| {
    if let Ok(report) = MetricReport::from_json(text) {
        let _ = report.to_csv();
    }
});
