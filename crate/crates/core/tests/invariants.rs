use mci_core::dism::{dism_solve, geometric_compatibility, rotation_angle, DismConfig};
use mci_core::io::config::RunConfig;
use mci_core::io::kitti::{encode_kitti_bin, parse_kitti_bin};
use mci_core::io::ply::{encode_ply, parse_ply, PlyFormat};
use mci_core::matching::{mutual_topk, sinkhorn_normalize, PointCorrespondences};
use mci_core::pointcloud::PointCloud;
use mci_core::synth::{corrupt_correspondences, generate_pair, random_transform, SceneSpec};
use mci_core::tensor::Matrix;
use mci_core::transform::RigidTransform;
use nalgebra::Vector3;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn coords() -> impl Strategy<Value = Vec<[f64; 3]>> {
    prop::collection::vec(prop::array::uniform3(-1e3..1e3f64), 1..60)
}

fn pose(seed: u64) -> RigidTransform {
    random_transform(&mut ChaCha8Rng::seed_from_u64(seed), 180.0, 10.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn binary_ply_round_trip_is_bitwise(pts in coords()) {
        let cloud = PointCloud::from_arrays(&pts).unwrap();
        let back = parse_ply(&encode_ply(&cloud, PlyFormat::BinaryLittleEndian)).unwrap();
        prop_assert_eq!(back.points(), cloud.points());
    }

    #[test]
    fn ascii_ply_round_trip_is_exact(pts in coords()) {
        let cloud = PointCloud::from_arrays(&pts).unwrap();
        let back = parse_ply(&encode_ply(&cloud, PlyFormat::Ascii)).unwrap();
        prop_assert_eq!(back.points(), cloud.points());
    }

    #[test]
    fn kitti_round_trip_matches_f32(pts in coords()) {
        let cloud = PointCloud::from_arrays(&pts).unwrap();
        let back = parse_kitti_bin(&encode_kitti_bin(&cloud)).unwrap();
        for (a, b) in back.points().iter().zip(cloud.points()) {
            for k in 0..3 {
                prop_assert_eq!(a[k], b[k] as f32 as f64);
            }
        }
    }

    #[test]
    fn transform_text_round_trip(seed in any::<u64>()) {
        let t = pose(seed);
        let back = RigidTransform::from_text(&t.to_text()).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn inverse_composes_to_identity(seed in any::<u64>()) {
        let t = pose(seed);
        let id = t.compose(&t.inverse());
        prop_assert!(rotation_angle(&id.rotation, &RigidTransform::identity().rotation) < 1e-12);
        prop_assert!(id.translation.norm() < 1e-12);
    }

    #[test]
    fn compatibility_is_rigid_invariant(seed in 0u64..500) {
        let scene = generate_pair(&SceneSpec { n_points: 80, rng_seed: seed, ..Default::default() }).unwrap();
        let corrs = corrupt_correspondences(&scene.gt_pairs, 0.4, &scene.tgt, seed).unwrap();
        let g = pose(seed.wrapping_add(1));
        let a = geometric_compatibility(&corrs, &scene.src, &scene.tgt, 0.3).unwrap();
        let b = geometric_compatibility(&corrs, &scene.src.transformed(&g), &scene.tgt.transformed(&g), 0.3).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9);
            prop_assert!((0.0..=1.0).contains(x));
        }
    }

    #[test]
    fn corruption_changes_exactly_floor_fraction(seed in 0u64..500, fraction in 0.0..0.95f64) {
        let scene = generate_pair(&SceneSpec { n_points: 60, rng_seed: seed, ..Default::default() }).unwrap();
        let corrs = corrupt_correspondences(&scene.gt_pairs, fraction, &scene.tgt, seed).unwrap();
        let changed = corrs.iter().zip(&scene.gt_pairs).filter(|(c, g)| c.tgt != g.1).count();
        prop_assert_eq!(changed, (fraction * scene.gt_pairs.len() as f64).floor() as usize);
    }

    #[test]
    fn sinkhorn_rows_are_stochastic(n in 2usize..20, m in 2usize..20, seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = Matrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
        let p = sinkhorn_normalize(&z, 2000, 0.1).unwrap();
        prop_assert!(p.data().iter().all(|&v| v >= 0.0));
        for i in 0..n {
            prop_assert!((p.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn mutual_topk_is_symmetric_under_transpose(n in 1usize..12, m in 1usize..12, k in 1usize..4, seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = Matrix::from_fn(n, m, |_, _| rng.random_range(0.0..1.0));
        let mut flipped: Vec<(usize, usize)> = mutual_topk(&z.transpose(), k).into_iter().map(|(a, b)| (b, a)).collect();
        flipped.sort_unstable();
        prop_assert_eq!(mutual_topk(&z, k), flipped);
    }

    #[test]
    fn dism_recovers_clean_poses(seed in any::<u64>(), n in 10usize..80) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = PointCloud::new(
            (0..n).map(|_| Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect(),
        ).unwrap();
        let gt = pose(seed);
        let pairs = PointCorrespondences::from_index_pairs(&(0..n).map(|i| (i, i)).collect::<Vec<_>>()).unwrap();
        let (t, _) = dism_solve(&pairs, &src, &src.transformed(&gt), &DismConfig::for_cloud(&src)).unwrap();
        prop_assert!(rotation_angle(&t.rotation, &gt.rotation) < 1e-9);
        prop_assert!((t.translation - gt.translation).norm() < 1e-9);
    }
}

#[test]
fn config_survives_toml_round_trip() {
    let mut cfg = RunConfig::default();
    cfg.set("estimator=ransac").unwrap();
    cfg.set("sigma=0.25").unwrap();
    cfg.set("decay=uniform").unwrap();
    let back = RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
    assert_eq!(back, cfg);
}
