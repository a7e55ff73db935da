#![no_main]

use libfuzzer_sys::fuzz_target;
use scenegan::scene::Raster;

fuzz_target!(|bytes: &[u8]| {
    if let Ok(image) = Raster::from_ppm(bytes) {
        assert_eq!(Raster::from_ppm(&image.to_ppm()).expect("written image parses"), image);
    }
});
