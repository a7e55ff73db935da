use super::camera::CameraModel;
use super::segmap::SegMap;
use crate::error::{Error, Result};
use crate::traj::{Trajectory, Vec2};

/// Score given to waypoints the camera cannot see.
pub const OUTSIDE_VISIBLE_SCORE: f64 = 0.5;
pub const DEFAULT_FOOTPRINT_RADIUS: f64 = 0.5;

/// Region around the agent treated as traversable regardless of the image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootprintDisk {
    center: Vec2,
    radius: f64,
}

impl FootprintDisk {
    pub fn new(center: Vec2, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || !center.is_finite() {
            return Err(Error::Config(format!("footprint radius must be positive, got {radius}")));
        }
        Ok(FootprintDisk { center, radius })
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.distance(self.center) <= self.radius
    }

    pub fn center(&self) -> Vec2 {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// How a waypoint was scored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WaypointScore {
    Classified(f64),
    Footprint,
    OutsideVisible,
}

impl WaypointScore {
    pub fn value(self) -> f64 {
        match self {
            WaypointScore::Classified(p) => p,
            WaypointScore::Footprint => 1.0,
            WaypointScore::OutsideVisible => OUTSIDE_VISIBLE_SCORE,
        }
    }
}

pub fn classify_waypoint(x: Vec2, seg: &SegMap, cam: &CameraModel, foot: &FootprintDisk) -> WaypointScore {
    if foot.contains(x) {
        return WaypointScore::Footprint;
    }
    match cam.project(x).nearest() {
        Some((col, row)) if (col as usize) < seg.width() && (row as usize) < seg.height() => {
            WaypointScore::Classified(seg.traversable_prob(col as usize, row as usize))
        }
        _ => WaypointScore::OutsideVisible,
    }
}

pub fn waypoint_prob(x: Vec2, seg: &SegMap, cam: &CameraModel, foot: &FootprintDisk) -> f64 {
    classify_waypoint(x, seg, cam, foot).value()
}

/// Product of per-waypoint scores.
pub fn trajectory_prob(traj: &Trajectory, seg: &SegMap, cam: &CameraModel, foot: &FootprintDisk) -> f64 {
    traj.positions().iter().map(|p| waypoint_prob(*p, seg, cam, foot)).product()
}

/// Segmentation, camera and footprint for one time step.
#[derive(Debug, Clone)]
pub struct Scene {
    pub seg: SegMap,
    pub cam: CameraModel,
    pub foot: FootprintDisk,
}

impl Scene {
    pub fn new(seg: SegMap, cam: CameraModel, foot: FootprintDisk) -> Result<Self> {
        cam.validate()?;
        if seg.width() != cam.width as usize || seg.height() != cam.height as usize {
            return Err(Error::Config(format!(
                "segmentation map is {}x{} but camera image is {}x{}",
                seg.width(),
                seg.height(),
                cam.width,
                cam.height
            )));
        }
        Ok(Scene { seg, cam, foot })
    }

    pub fn score(&self, traj: &Trajectory) -> f64 {
        trajectory_prob(traj, &self.seg, &self.cam, &self.foot)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::camera::Intrinsics;
    use crate::scene::segmap::{BUILDING, ROAD};
    use crate::traj::{Pose2D, DT};
    use proptest::prelude::*;

    fn cam() -> CameraModel {
        CameraModel::mounted(&Pose2D::new(Vec2::ZERO, 0.0), 1.4, 0.6, &Intrinsics::default()).unwrap()
    }

    fn foot() -> FootprintDisk {
        FootprintDisk::new(Vec2::ZERO, DEFAULT_FOOTPRINT_RADIUS).unwrap()
    }

    fn visible_points(n: usize) -> Vec<Vec2> {
        (0..n).map(|i| Vec2::new(2.0 + 0.5 * i as f64, 0.3 * (i as f64 - 3.0))).collect()
    }

    #[test]
    fn case_values() {
        let c = cam();
        let road = SegMap::uniform_class(128, 96, ROAD).unwrap();
        let wall = SegMap::uniform_class(128, 96, BUILDING).unwrap();
        let p = Vec2::new(3.0, 0.0);
        assert_eq!(waypoint_prob(p, &road, &c, &foot()), 1.0);
        assert_eq!(waypoint_prob(p, &wall, &c, &foot()), 0.0);
        assert_eq!(waypoint_prob(Vec2::new(0.3, 0.2), &wall, &c, &foot()), 1.0);
        assert_eq!(waypoint_prob(Vec2::new(-3.0, 0.0), &wall, &c, &foot()), 0.5);

        let mut mixed = wall.clone();
        let (col, row) = c.project(p).nearest().unwrap();
        mixed.set_pixel(col as usize, row as usize, &[0.6, 0.0, 0.4, 0.0]).unwrap();
        assert!((waypoint_prob(p, &mixed, &c, &foot()) - 0.6).abs() < 1e-7);
    }

    #[test]
    fn trajectory_products() {
        let c = cam();
        let road = SegMap::uniform_class(128, 96, ROAD).unwrap();
        let wall = SegMap::uniform_class(128, 96, BUILDING).unwrap();
        let t = Trajectory::new(visible_points(8), DT).unwrap();
        assert_eq!(trajectory_prob(&t, &road, &c, &foot()), 1.0);

        let mut one_bad = road.clone();
        let (col, row) = c.project(t.positions()[4]).nearest().unwrap();
        one_bad.set_pixel(col as usize, row as usize, &[0.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(trajectory_prob(&t, &one_bad, &c, &foot()), 0.0);

        let behind = Trajectory::new((0..8).map(|i| Vec2::new(-2.0 - i as f64, 0.0)).collect(), DT).unwrap();
        assert_eq!(trajectory_prob(&behind, &wall, &c, &foot()), 0.00390625);
    }

    #[test]
    fn scene_rejects_mismatched_sizes() {
        let seg = SegMap::uniform_class(10, 10, ROAD).unwrap();
        assert!(Scene::new(seg, cam(), foot()).is_err());
        assert!(FootprintDisk::new(Vec2::ZERO, 0.0).is_err());
    }

    fn noisy_map(values: &[f32]) -> SegMap {
        let mut seg = SegMap::uniform_class(128, 96, ROAD).unwrap();
        for row in 0..96 {
            for col in 0..128 {
                let t = values[(row * 128 + col) % values.len()];
                seg.set_pixel(col, row, &[t, 0.0, 1.0 - t, 0.0]).unwrap();
            }
        }
        seg
    }

    proptest! {
        #[test]
        fn multiplicative_and_bounded(
            values in prop::collection::vec(0.0f32..=1.0, 1..50),
            split in 1usize..7,
        ) {
            let seg = noisy_map(&values);
            let pts = visible_points(8);
            let full = Trajectory::new(pts.clone(), DT).unwrap();
            let a = Trajectory::new(pts[..split].to_vec(), DT).unwrap();
            let b = Trajectory::new(pts[split..].to_vec(), DT).unwrap();
            let (c, f) = (cam(), foot());
            let p = trajectory_prob(&full, &seg, &c, &f);
            prop_assert!((0.0..=1.0).contains(&p));
            let prod = trajectory_prob(&a, &seg, &c, &f) * trajectory_prob(&b, &seg, &c, &f);
            prop_assert!((p - prod).abs() <= 1e-14);
            for q in &pts {
                prop_assert!((0.0..=1.0).contains(&waypoint_prob(*q, &seg, &c, &f)));
            }
        }

        #[test]
        fn monotone_in_traversable_mass(
            values in prop::collection::vec(0.0f32..=0.9, 1..50),
            which in 0usize..8,
            raise in 0.0f32..0.1,
        ) {
            let seg = noisy_map(&values);
            let (c, f) = (cam(), foot());
            let t = Trajectory::new(visible_points(8), DT).unwrap();
            let before = trajectory_prob(&t, &seg, &c, &f);
            let (col, row) = c.project(t.positions()[which]).nearest().unwrap();
            let mut raised = seg.clone();
            let px = seg.pixel(col as usize, row as usize);
            raised.set_pixel(col as usize, row as usize, &[px[0] + raise, 0.0, px[2] - raise, 0.0]).unwrap();
            prop_assert!(trajectory_prob(&t, &raised, &c, &f) >= before);
        }
    }
}
