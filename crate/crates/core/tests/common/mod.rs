//! Seeded synthetic datasets shared by the integration suites.

#![allow(dead_code)]

use std::sync::Arc;

use finex_core::model::deduplicate;
use finex_core::{Dataset, ObjectId};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

#[derive(Clone, Debug)]
pub struct Instance {
    pub name: String,
    pub data: Arc<Dataset>,
    pub epsilon: f64,
    pub min_pts: u64,
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Token sets drawn around a few prototypes, with set-level noise. Small
/// vocabularies make duplicates and tied distances common.
pub fn random_records(rng: &mut StdRng, n: usize, vocab: u32) -> Vec<Vec<u32>> {
    let k = rng.gen_range(2..=6);
    let prototypes: Vec<Vec<u32>> = (0..k)
        .map(|_| {
            let len = rng.gen_range(4..=10);
            (0..len).map(|_| rng.gen_range(0..vocab)).collect()
        })
        .collect();
    (0..n)
        .map(|_| {
            let mut set: Vec<u32> = if rng.gen_bool(0.1) {
                let len = rng.gen_range(2..=8);
                (0..len).map(|_| rng.gen_range(0..vocab)).collect()
            } else {
                let proto = &prototypes[rng.gen_range(0..k)];
                let mut s: Vec<u32> = proto.iter().copied().filter(|_| rng.gen_bool(0.8)).collect();
                for _ in 0..rng.gen_range(0..=2) {
                    s.push(rng.gen_range(0..vocab));
                }
                s
            };
            if set.is_empty() {
                set.push(rng.gen_range(0..vocab));
            }
            set
        })
        .collect()
}

pub fn set_dataset(rng: &mut StdRng, n: usize, vocab: u32) -> Dataset {
    let (sets, _) = deduplicate(random_records(rng, n, vocab)).expect("records are non-empty");
    Dataset::from_sets(sets).expect("valid sets")
}

/// Gaussian blobs plus uniform background noise in `[0, 10]^dim`; with
/// `grid` set, coordinates are snapped to multiples of it.
pub fn random_vectors(
    rng: &mut StdRng,
    n: usize,
    dim: usize,
    spread: f64,
    grid: Option<f64>,
) -> Vec<Vec<f64>> {
    let k = rng.gen_range(2..=5);
    let centers: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..dim).map(|_| rng.gen_range(0.0..10.0)).collect())
        .collect();
    (0..n)
        .map(|_| {
            let v: Vec<f64> = if rng.gen_bool(0.1) {
                (0..dim).map(|_| rng.gen_range(0.0..10.0)).collect()
            } else {
                let c = &centers[rng.gen_range(0..k)];
                c.iter()
                    .map(|x| x + spread * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            };
            match grid {
                Some(g) => v.into_iter().map(|x| (x / g).round() * g).collect(),
                None => v,
            }
        })
        .collect()
}

pub fn set_instance(seed: u64) -> Instance {
    let mut r = rng(seed);
    let n = r.gen_range(100..=300);
    let vocab = r.gen_range(30..=80);
    let data = set_dataset(&mut r, n, vocab);
    let epsilon = *[0.4, 0.5, 0.6].choose(&mut r).unwrap();
    let min_pts = r.gen_range(3..=6);
    Instance {
        name: format!("sets/{seed} (n={})", data.len()),
        data: Arc::new(data),
        epsilon,
        min_pts,
    }
}

pub fn vector_instance(seed: u64, dim: usize) -> Instance {
    let mut r = rng(seed);
    let n = r.gen_range(150..=500);
    let grid = r.gen_bool(0.5).then_some(0.1);
    let (spread, epsilon) = if dim <= 2 {
        (r.gen_range(0.3..0.8), r.gen_range(0.4..1.0))
    } else {
        (r.gen_range(0.5..1.0), r.gen_range(1.5..2.5))
    };
    let vectors = random_vectors(&mut r, n, dim, spread, grid);
    let min_pts = r.gen_range(4..=8);
    Instance {
        name: format!(
            "vectors{dim}d/{seed} (n={n}{})",
            if grid.is_some() { ", grid" } else { "" }
        ),
        data: Arc::new(Dataset::from_vectors(vectors).expect("finite vectors")),
        epsilon,
        min_pts,
    }
}

/// 20 set instances and 15 each of 2-d and 5-d vector instances.
pub fn harness() -> Vec<Instance> {
    let mut out = Vec::new();
    for s in 0..20 {
        out.push(set_instance(1000 + s));
    }
    for s in 0..15 {
        out.push(vector_instance(2000 + s, 2));
        out.push(vector_instance(3000 + s, 5));
    }
    out
}

/// Query radii for an instance: fixed fractions of epsilon (epsilon itself
/// included) plus two pairwise distances taken from the data, so that radii
/// coinciding with distances are exercised.
pub fn epsilon_stars(inst: &Instance, seed: u64) -> Vec<f64> {
    let eps = inst.epsilon;
    let mut out = vec![eps, 0.9 * eps, 0.75 * eps, 0.5 * eps, 0.3 * eps];
    let mut r = rng(seed);
    let n = inst.data.len();
    let mut found = 0;
    for _ in 0..1000 {
        if found == 2 {
            break;
        }
        let a = ObjectId::from_index(r.gen_range(0..n));
        let b = ObjectId::from_index(r.gen_range(0..n));
        let d = inst.data.distance(a, b);
        if d > 0.0 && d < eps {
            out.push(d);
            found += 1;
        }
    }
    out
}

pub fn min_pts_stars(inst: &Instance, max_size: u64) -> Vec<u64> {
    let m = inst.min_pts;
    let mut out = vec![m, m + 1, m + 2, m + 4, m + 8, max_size, max_size + 1];
    out.sort_unstable();
    out.dedup();
    out.retain(|&v| v >= m);
    out
}
