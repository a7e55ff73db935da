use crate::error::{Error, Result};
use crate::traj::{ensure_same_dt, Trajectory};

fn check(pred: &Trajectory, truth: &Trajectory) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::ShapeMismatch {
            what: "predicted trajectory".into(),
            expected: truth.len(),
            got: pred.len(),
        });
    }
    ensure_same_dt(pred.dt(), truth.dt())
}

/// Average displacement error: mean Euclidean distance over all steps.
pub fn ade(pred: &Trajectory, truth: &Trajectory) -> Result<f64> {
    check(pred, truth)?;
    let sum: f64 = pred.positions().iter().zip(truth.positions()).map(|(p, q)| p.distance(*q)).sum();
    Ok(sum / pred.len() as f64)
}

/// Final displacement error: distance between the last positions.
pub fn fde(pred: &Trajectory, truth: &Trajectory) -> Result<f64> {
    check(pred, truth)?;
    Ok(pred.last().distance(truth.last()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traj::{Vec2, DT};
    use proptest::prelude::*;

    fn traj(points: &[(f64, f64)]) -> Trajectory {
        Trajectory::new(points.iter().map(|p| Vec2::new(p.0, p.1)).collect(), DT).unwrap()
    }

    #[test]
    fn hand_computed() {
        let truth = traj(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]);
        let pred = traj(&[(0.0, 3.0), (1.0, 4.0), (5.0, 4.0)]);
        assert!((ade(&pred, &truth).unwrap() - 4.0).abs() < 1e-15);
        assert_eq!(fde(&pred, &truth).unwrap(), 5.0);
        assert!(ade(&traj(&[(0.0, 0.0)]), &truth).is_err());
    }

    #[test]
    fn uniform_shift() {
        let truth = traj(&[(0.0, 0.0), (1.0, 1.0), (2.0, 0.5), (4.0, -1.0)]);
        let shifted = truth.rigid_transform(0.0, Vec2::new(3.0, 4.0));
        assert!((ade(&shifted, &truth).unwrap() - 5.0).abs() < 1e-12);
        assert!((fde(&shifted, &truth).unwrap() - 5.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn zero_iff_equal_and_symmetric(
            a in prop::collection::vec((-50.0..50.0f64, -50.0..50.0f64), 8),
            b in prop::collection::vec((-50.0..50.0f64, -50.0..50.0f64), 8),
        ) {
            let (a, b) = (traj(&a), traj(&b));
            prop_assert_eq!(ade(&a, &a).unwrap(), 0.0);
            prop_assert_eq!(fde(&a, &a).unwrap(), 0.0);
            prop_assert_eq!(ade(&a, &b).unwrap(), ade(&b, &a).unwrap());
            prop_assert!(ade(&a, &b).unwrap() >= 0.0);
            if a != b {
                prop_assert!(ade(&a, &b).unwrap() > 0.0);
            }
            prop_assert!(8.0 * ade(&a, &b).unwrap() >= fde(&a, &b).unwrap());
        }

        #[test]
        fn invariant_under_rigid_motion(
            a in prop::collection::vec((-50.0..50.0f64, -50.0..50.0f64), 8),
            b in prop::collection::vec((-50.0..50.0f64, -50.0..50.0f64), 8),
            angle in -4.0..4.0f64,
            tx in -100.0..100.0f64,
            ty in -100.0..100.0f64,
        ) {
            let (a, b) = (traj(&a), traj(&b));
            let t = Vec2::new(tx, ty);
            let (ma, mb) = (a.rigid_transform(angle, t), b.rigid_transform(angle, t));
            prop_assert!((ade(&ma, &mb).unwrap() - ade(&a, &b).unwrap()).abs() < 1e-9);
            prop_assert!((fde(&ma, &mb).unwrap() - fde(&a, &b).unwrap()).abs() < 1e-9);
        }
    }
}
