#![no_main]

use libfuzzer_sys::fuzz_target;
use scenegan::scene::CameraModel;
use scenegan::traj::Vec2;

fuzz_target!(|text: &str| {
    if let Ok(cam) = CameraModel::from_json(text) {
        assert_eq!(CameraModel::from_json(&cam.to_json()).expect("written camera parses"), cam);
        let _ = cam.project(Vec2::new(1.0, 0.0));
        let _ = cam.back_project(cam.cx, cam.cy);
    }
});
