use std::f64::consts::TAU;

use proptest::prelude::*;
use vroad::geometry::{GlobalAngle, Point2};
use vroad::route_following::Pose;
use vroad::sensors::{candidate_directions, ray_cast, ultrasonic_reading, DepthCameraModel, OccupancyGrid};

const W: usize = 60;
const H: usize = 40;
const RES: f64 = 0.1;

fn grid(cells: &[(usize, usize)]) -> OccupancyGrid {
    let mut g = OccupancyGrid::new(Point2::new(-1.0, -1.0), RES, W, H).unwrap();
    for &(i, j) in cells {
        g.set_cell(i, j, true);
    }
    g
}

fn cells(max: usize) -> impl Strategy<Value = Vec<(usize, usize)>> {
    prop::collection::vec((0..W, 0..H), 0..max)
}

fn inside() -> impl Strategy<Value = Point2> {
    (-0.95..4.95f64, -0.95..2.95f64).prop_map(|(x, y)| Point2::new(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn ray_stops_at_first_occupied_cell(occ in cells(60), from in inside(), a in 0.0..TAU, range in 0.1..6.0f64) {
        let g = grid(&occ);
        let angle = GlobalAngle::new(a).unwrap();
        let r = ray_cast(&g, from, angle, range);
        prop_assert!((0.0..=range).contains(&r));
        if g.is_occupied(&from) {
            prop_assert_eq!(r, 0.0);
            return Ok(());
        }
        // everything sampled strictly before the hit is free
        let mut t = 0.0;
        while t < r - 1e-6 {
            prop_assert!(!g.is_occupied(&from.offset(a, t)), "occupied at {t} before hit {r}");
            t += 2e-3;
        }
        // a fine march finds no free gap past the hit that the cast skipped
        let mut s = 0.0;
        let mut marched = range;
        while s <= range {
            if g.is_occupied(&from.offset(a, s)) {
                marched = s;
                break;
            }
            s += 1e-4;
        }
        prop_assert!(r <= marched + 1e-3, "cast {r} beyond marched hit {marched}");
    }

    #[test]
    fn obstacles_only_shorten_rays(occ in cells(40), more in cells(40), from in inside(), a in 0.0..TAU) {
        let base = grid(&occ);
        let both: Vec<_> = occ.iter().chain(&more).copied().collect();
        let denser = grid(&both);
        let angle = GlobalAngle::new(a).unwrap();
        prop_assert!(ray_cast(&denser, from, angle, 5.0) <= ray_cast(&base, from, angle, 5.0));
    }

    #[test]
    fn obstacles_only_remove_candidates(occ in cells(40), more in cells(40), from in inside(), h in 0.0..TAU) {
        let cam = DepthCameraModel::default();
        let pose = Pose { position: from, heading: GlobalAngle::new(h).unwrap() };
        let both: Vec<_> = occ.iter().chain(&more).copied().collect();
        let sparse = candidate_directions(&grid(&occ), &pose, &cam);
        let dense = candidate_directions(&grid(&both), &pose, &cam);
        for d in dense.iter() {
            prop_assert!(sparse.0.contains(d));
        }
        for d in sparse.iter() {
            prop_assert!(cam.lattice().contains(d));
        }
    }

    #[test]
    fn ultrasonic_never_exceeds_centre_ray(occ in cells(60), from in inside(), h in 0.0..TAU) {
        let g = grid(&occ);
        let pose = Pose { position: from, heading: GlobalAngle::new(h).unwrap() };
        let centre = ray_cast(&g, from, pose.heading, 4.25).max(0.03);
        let u = ultrasonic_reading(&g, &pose).distance();
        prop_assert!(u <= centre);
        prop_assert!((0.03..=4.25).contains(&u));
    }
}

#[test]
fn free_grid_offers_full_lattice() {
    let mut g = OccupancyGrid::new(Point2::new(-10.0, -10.0), 0.05, 400, 400).unwrap();
    let cam = DepthCameraModel::default();
    let pose = Pose::new(0.0, 0.0, 1.0).unwrap();
    assert_eq!(candidate_directions(&g, &pose, &cam).0, cam.lattice());
    // a wall 1 m ahead across the whole view leaves nothing
    for j in 0..400 {
        for i in 0..400 {
            let p = Point2::new(-10.0 + (i as f64 + 0.5) * 0.05, -10.0 + (j as f64 + 0.5) * 0.05);
            if (p.x * 1f64.cos() + p.y * 1f64.sin() - 1.0).abs() < 0.1 {
                g.set_cell(i, j, true);
            }
        }
    }
    assert!(candidate_directions(&g, &pose, &cam).is_empty());
    assert!(ultrasonic_reading(&g, &pose).distance() < 1.0);
}
