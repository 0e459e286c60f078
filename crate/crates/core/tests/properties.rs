mod common;

use std::sync::Arc;

use finex_core::baseline::{dbscan_exact, optics_build};
use finex_core::finex::finex_build_report;
use finex_core::model::{deduplicate, TokenSet};
use finex_core::validate::{audit_ordering, check_exact, check_nested, exact_equivalent, BruteNeighborhoods};
use finex_core::{
    border_recall, epsilon_star_query, minpts_star_query, query_clustering, Backend, Dataset,
    NeighborProvider, ObjectId, SeedOrder,
};
use proptest::prelude::*;

/// Integer grid points: many duplicates and tied distances.
fn grid_points() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0i32..6, 2), 2..40).prop_map(|pts| {
        pts.into_iter()
            .map(|p| p.into_iter().map(f64::from).collect())
            .collect()
    })
}

fn small_sets() -> impl Strategy<Value = Vec<Vec<u32>>> {
    prop::collection::vec(prop::collection::vec(0u32..8, 1..5), 2..40)
}

fn shuffled(n: usize, keys: &[u32]) -> Vec<ObjectId> {
    let mut ids: Vec<ObjectId> = (0..n).map(ObjectId::from_index).collect();
    ids.sort_by_key(|o| (keys[o.index() % keys.len()].wrapping_mul(o.0 + 7), o.0));
    ids
}

/// Builds both orderings under `seed` and checks every query against the
/// brute-force oracle.
fn check_all(data: Dataset, eps: f64, m: u64, keys: &[u32]) -> Result<(), TestCaseError> {
    let data = Arc::new(data);
    let n = data.len();
    let seed = SeedOrder::Custom(shuffled(n, keys));
    let provider =
        NeighborProvider::build(Arc::clone(&data), eps, Backend::default_for(data.metric())).unwrap();
    let (index, report) = finex_build_report(&provider, eps, m, &seed).unwrap();
    let optics = optics_build(&provider, eps, m, &seed).unwrap();
    let nb = BruteNeighborhoods::new(&data, eps);
    prop_assert_eq!(audit_ordering(&nb, index.ordering()), Ok(()));
    prop_assert_eq!(audit_ordering(&nb, &optics), Ok(()));
    prop_assert!((report.max_reinsertions() as u64) < m);

    let sparse = query_clustering(index.ordering(), eps).unwrap();
    let mut radii: Vec<f64> = vec![eps, eps / 2.0, 0.0];
    for a in data.ids().take(6) {
        for b in data.ids().take(6) {
            let d = data.distance(a, b);
            if d <= eps {
                radii.push(d);
            }
        }
    }
    for es in radii {
        let exact = nb.dbscan(es, m);
        let q = epsilon_star_query(&index, &provider, es).unwrap();
        prop_assert_eq!(check_exact(&nb, &q.labeling, es, m), Ok(()), "eps* = {}", es);
        prop_assert_eq!(exact_equivalent(&nb, &q.labeling, &exact, es), Ok(()));
        prop_assert_eq!(check_nested(&nb, &q.labeling, &sparse, eps), Ok(()));
        let rf = border_recall(&query_clustering(index.ordering(), es).unwrap(), &exact).unwrap();
        let ro = border_recall(&query_clustering(&optics, es).unwrap(), &exact).unwrap();
        prop_assert!(rf >= ro, "eps* = {}: {} < {}", es, rf, ro);
    }
    for ms in [m, m + 1, m + 2, m + 5] {
        let exact = nb.dbscan(eps, ms);
        let q = minpts_star_query(&index, &provider, ms).unwrap();
        prop_assert_eq!(check_exact(&nb, &q.labeling, eps, ms), Ok(()), "MinPts* = {}", ms);
        prop_assert_eq!(exact_equivalent(&nb, &q.labeling, &exact, eps), Ok(()));
        prop_assert_eq!(check_nested(&nb, &q.labeling, &sparse, eps), Ok(()));
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn grid_vectors_any_seed_order(pts in grid_points(), eps in 1u32..4, m in 1u64..6, keys in prop::collection::vec(any::<u32>(), 1..8)) {
        check_all(Dataset::from_vectors(pts).unwrap(), eps as f64, m, &keys)?;
    }

    #[test]
    fn duplicated_sets_any_seed_order(records in small_sets(), eps in 0.2f64..1.0, m in 1u64..7, keys in prop::collection::vec(any::<u32>(), 1..8)) {
        let (sets, _) = deduplicate(records).unwrap();
        check_all(Dataset::from_sets(sets).unwrap(), eps, m, &keys)?;
    }

    #[test]
    fn dbscan_matches_brute_force(pts in grid_points(), eps in 1u32..4, m in 1u64..6) {
        let data = Arc::new(Dataset::from_vectors(pts).unwrap());
        let p = NeighborProvider::build(Arc::clone(&data), eps as f64, Backend::KdTree).unwrap();
        let l = dbscan_exact(&p, eps as f64, m, &SeedOrder::Ascending).unwrap();
        let nb = BruteNeighborhoods::new(&data, eps as f64);
        prop_assert_eq!(check_exact(&nb, &l, eps as f64, m), Ok(()));
        prop_assert_eq!(l, nb.dbscan(eps as f64, m));
    }

    #[test]
    fn inverted_lists_match_brute_force(records in small_sets(), eps in 0.0f64..=1.0) {
        let (sets, _) = deduplicate(records).unwrap();
        let data = Arc::new(Dataset::from_sets(sets).unwrap());
        let fast = NeighborProvider::build(Arc::clone(&data), eps, Backend::SetInvertedList).unwrap();
        let brute = NeighborProvider::build(data, eps, Backend::BruteForce).unwrap();
        for p in fast.data().ids() {
            let a = fast.range_query(p, eps).unwrap();
            let b = brute.range_query(p, eps).unwrap();
            prop_assert_eq!(a.entries(), b.entries());
        }
    }
}

#[test]
fn fixture_border_recall_is_strictly_better() {
    let p = NeighborProvider::build(
        Arc::new(finex_core::model::fixture::dataset()),
        1.0,
        Backend::ExplicitMatrix,
    )
    .unwrap();
    let exact = dbscan_exact(&p, 0.75, 4, &SeedOrder::Ascending).unwrap();
    let (index, _) = finex_build_report(&p, 1.0, 4, &SeedOrder::Ascending).unwrap();
    let optics = optics_build(&p, 1.0, 4, &SeedOrder::Ascending).unwrap();
    let rf = border_recall(&query_clustering(index.ordering(), 0.75).unwrap(), &exact).unwrap();
    let ro = border_recall(&query_clustering(&optics, 0.75).unwrap(), &exact).unwrap();
    assert!(rf > ro);
}

#[test]
fn harness_instances_have_structure() {
    // Guard against generators drifting into all-noise or single-blob data.
    let mut clustered = 0;
    for inst in common::harness() {
        let p = NeighborProvider::build(
            Arc::clone(&inst.data),
            inst.epsilon,
            Backend::default_for(inst.data.metric()),
        )
        .unwrap();
        let l = dbscan_exact(&p, inst.epsilon, inst.min_pts, &SeedOrder::Ascending).unwrap();
        if l.num_clusters() >= 2 && l.noise_count() > 0 {
            clustered += 1;
        }
    }
    assert!(
        clustered >= 40,
        "only {clustered} instances with clusters and noise"
    );
}

#[test]
fn token_set_weights_drive_core_status() {
    let sets = vec![
        TokenSet::new(vec![1, 2], 3).unwrap(),
        TokenSet::new(vec![9], 1).unwrap(),
    ];
    let data = Arc::new(Dataset::from_sets(sets).unwrap());
    let p = NeighborProvider::build(data, 0.5, Backend::SetInvertedList).unwrap();
    let l = dbscan_exact(&p, 0.5, 3, &SeedOrder::Ascending).unwrap();
    assert!(l.is_core(ObjectId(0)));
    assert!(l.is_noise(ObjectId(1)));
}
