use incidentdb_core::cluster::{analyze, assign, kmeans, label_zones, pca, standardize, KMeansOptions, Zone, FEATURES};
use incidentdb_core::fixtures::five_zone_blobs;
use incidentdb_core::synth::{synthesize, SeedSet, SynthConfig};
use ndarray::{Array2, Axis};
use proptest::prelude::*;

fn matrix_strategy() -> impl Strategy<Value = (Array2<f64>, usize, u64)> {
    (4usize..40, 1usize..5, 1usize..5, any::<u64>()).prop_flat_map(|(n, d, k, seed)| {
        prop::collection::vec(-50.0f64..50.0, n * d)
            .prop_map(move |v| (Array2::from_shape_vec((n, d), v).unwrap(), k.min(n), seed))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn lloyd_inertia_never_increases((x, k, seed) in matrix_strategy()) {
        let m = kmeans(&x, k, seed, &KMeansOptions::default()).unwrap();
        for w in m.inertia_history.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "{:?}", m.inertia_history);
        }
        prop_assert_eq!(m.inertia, *m.inertia_history.last().unwrap());
    }

    #[test]
    fn final_assignment_is_nearest_centroid((x, k, seed) in matrix_strategy()) {
        let m = kmeans(&x, k, seed, &KMeansOptions::default()).unwrap();
        let c = Array2::from_shape_vec((k, x.ncols()), m.centroids.concat()).unwrap();
        let (labels, inertia) = assign(&x, &c);
        prop_assert_eq!(&labels, &m.assignments);
        prop_assert!((inertia - m.inertia).abs() <= 1e-9 * (1.0 + inertia));
        prop_assert!(m.assignments.iter().all(|&a| a < k));
    }

    #[test]
    fn pca_invariants((x, _k, _seed) in matrix_strategy()) {
        let d = x.ncols();
        let p = pca(&x, 1).unwrap();
        let ratios = &p.explained_variance_ratio;
        if !p.degenerate {
            prop_assert!((ratios.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        for w in ratios.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
        prop_assert!(ratios.iter().all(|&r| (0.0..=1.0 + 1e-12).contains(&r)));
        for i in 0..d {
            for j in 0..d {
                let dot: f64 = p.components[i].iter().zip(&p.components[j]).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot - want).abs() < 1e-9, "components {} {} dot {}", i, j, dot);
            }
        }
        // Variance of the projected scores reproduces each eigenvalue.
        let centered = &x - &x.mean_axis(Axis(0)).unwrap();
        let scale = p.eigenvalues[0].max(1.0);
        for (c, &ev) in p.components.iter().zip(&p.eigenvalues) {
            let var = centered.rows().into_iter()
                .map(|r| r.iter().zip(c).map(|(a, b)| a * b).sum::<f64>().powi(2))
                .sum::<f64>() / x.nrows() as f64;
            prop_assert!((var - ev).abs() < 1e-9 * scale, "{} vs {}", var, ev);
        }
    }
}

#[test]
fn synthetic_run_is_deterministic() {
    let cfg = SynthConfig { seed: 2024, n: 200, ..SynthConfig::default() };
    let records = synthesize(&SeedSet::table2(), &cfg).unwrap();
    let m = standardize(&records).unwrap();
    let a = kmeans(&m.values, 5, 7, &KMeansOptions::default()).unwrap();
    let b = kmeans(&m.values, 5, 7, &KMeansOptions::default()).unwrap();
    assert_eq!(a, b);
    let full_a = analyze(&records, 5, 7, &KMeansOptions::default()).unwrap();
    let full_b = analyze(&records, 5, 7, &KMeansOptions::default()).unwrap();
    assert_eq!(full_a.zones, full_b.zones);
    assert_eq!(full_a.assignments_csv(), full_b.assignments_csv());
}

#[test]
fn zone_map_is_a_bijection_on_synthetic_data() {
    for seed in 0..10 {
        let cfg = SynthConfig { seed, n: 300, ..SynthConfig::default() };
        let records = synthesize(&SeedSet::table2(), &cfg).unwrap();
        let a = analyze(&records, 5, seed, &KMeansOptions::default()).unwrap();
        let mut labels = a.zones.labels.clone();
        labels.sort();
        labels.dedup();
        assert_eq!(labels.len(), 5, "seed {seed}: {:?}", a.zones.labels);
        assert!(!a.zones.degenerate);
    }
}

#[test]
fn five_blob_fixture_recovers_zones() {
    for seed in 1..=5 {
        let (records, truth) = five_zone_blobs(60, seed);
        let opts = KMeansOptions { n_init: 10, ..KMeansOptions::default() };
        let a = analyze(&records, 5, seed, &opts).unwrap();
        // Each constructed blob maps onto exactly one cluster.
        for zone in [Zone::Stable, Zone::Anomalous, Zone::TransitionA, Zone::Irregular, Zone::Strategic] {
            let clusters: std::collections::BTreeSet<usize> =
                truth.iter().zip(&a.model.assignments).filter(|(z, _)| **z == zone).map(|(_, &c)| c).collect();
            assert_eq!(clusters.len(), 1, "seed {seed}: blob {zone} split over {clusters:?}");
            let c = *clusters.iter().next().unwrap();
            assert_eq!(a.zones.zone_of(c), zone, "seed {seed}");
        }
        let anomalous = &a.zones.evidence[a.zones.cluster_of(Zone::Anomalous).unwrap()];
        assert!(anomalous.ai_share > 70.0);
    }
}

#[test]
fn label_zones_uses_original_units() {
    let (records, _) = five_zone_blobs(30, 9);
    let m = standardize(&records).unwrap();
    let model = kmeans(&m.values, 5, 9, &KMeansOptions { n_init: 10, ..Default::default() }).unwrap();
    let p = pca(&m.values, 2).unwrap();
    let z = label_zones(&model, &p, &m).unwrap();
    let stable = &z.evidence[z.cluster_of(Zone::Stable).unwrap()];
    assert_eq!(stable.centroid.len(), FEATURES.len());
    assert!((stable.centroid[5] - 100.0).abs() < 5.0);
    assert!((stable.centroid[4] - 2.0).abs() < 1.0);
}

#[test]
fn report_tables_have_expected_shape() {
    let (records, _) = five_zone_blobs(10, 3);
    let a = analyze(&records, 5, 3, &KMeansOptions::default()).unwrap();
    let assignments = a.assignments_csv();
    assert!(assignments.starts_with("serial_no,cluster,zone,pc1,pc2\n1,"));
    assert_eq!(assignments.lines().count(), 51);
    assert_eq!(a.centroid_table_csv().lines().count(), 6);
    assert!(a.plot_data_csv().starts_with("pc1,pc2,zone\n"));
}
