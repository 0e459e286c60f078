//! All-pairs Jaccard neighborhoods via an inverted list over token prefixes.
//!
//! Tokens are ranked by ascending document frequency and every set is
//! rewritten in rank order. Two sets within Jaccard distance `eps` share at
//! least one token inside their prefixes of length `|r| - ceil((1 - eps)|r|) + 1`,
//! and their sizes satisfy `|s| ∈ [(1 - eps)|r|, |r| / (1 - eps)]`.
//! Candidates passing both filters are verified with the exact distance.

use std::collections::HashMap;

use super::Neighbor;
use crate::error::{Error, Result};
use crate::model::{jaccard_distance, Dataset, ObjectId};

// Slack applied to the filter bounds so rounding in `1 - eps` can only admit
// extra candidates, never drop one.
const SLACK: f64 = 1e-9;

/// Materializes the `eps`-neighborhood of every set (each sorted by id,
/// including the set itself). Returns the lists and the number of exact
/// distance evaluations performed.
pub fn all_neighborhoods(data: &Dataset, eps: f64) -> Result<(Vec<Vec<Neighbor>>, u64)> {
    let sets = data
        .sets()
        .ok_or_else(|| Error::InvalidParameter("inverted lists require set data".into()))?;
    let n = sets.len();
    let mut lists: Vec<Vec<Neighbor>> = (0..n)
        .map(|i| {
            vec![Neighbor {
                id: ObjectId::from_index(i),
                distance: 0.0,
            }]
        })
        .collect();
    let threshold = 1.0 - eps;
    let mut computations = 0u64;

    let push_pair = |lists: &mut Vec<Vec<Neighbor>>, r: usize, s: usize, distance: f64| {
        lists[r].push(Neighbor {
            id: ObjectId::from_index(s),
            distance,
        });
        lists[s].push(Neighbor {
            id: ObjectId::from_index(r),
            distance,
        });
    };

    if threshold <= SLACK {
        // Every pair (even disjoint ones at distance 1) can qualify; nothing to prune.
        for r in 0..n {
            for s in r + 1..n {
                let d = jaccard_distance(sets[r].tokens(), sets[s].tokens());
                computations += 1;
                if d <= eps {
                    push_pair(&mut lists, r, s, d);
                }
            }
        }
    } else {
        let mut frequency: HashMap<u32, u32> = HashMap::new();
        for s in sets {
            for &t in s.tokens() {
                *frequency.entry(t).or_default() += 1;
            }
        }
        let mut order: Vec<(u32, u32)> = frequency.into_iter().map(|(t, f)| (f, t)).collect();
        order.sort_unstable();
        let rank: HashMap<u32, u32> = order
            .iter()
            .enumerate()
            .map(|(r, &(_, t))| (t, r as u32))
            .collect();

        let ranked: Vec<Vec<u32>> = sets
            .iter()
            .map(|s| {
                let mut v: Vec<u32> = s.tokens().iter().map(|t| rank[t]).collect();
                v.sort_unstable();
                v
            })
            .collect();
        let prefix_len = |len: usize| -> usize {
            let required = (threshold * len as f64 - SLACK).ceil().max(1.0) as usize;
            (len + 1).saturating_sub(required).clamp(1, len)
        };

        let mut postings: Vec<Vec<u32>> = vec![Vec::new(); order.len()];
        for (i, r) in ranked.iter().enumerate() {
            for &t in &r[..prefix_len(r.len())] {
                postings[t as usize].push(i as u32);
            }
        }

        let mut seen = vec![usize::MAX; n];
        for (r, tokens) in ranked.iter().enumerate() {
            let len = tokens.len() as f64;
            let lo = threshold * len - SLACK;
            let hi = len / threshold + SLACK;
            for &t in &tokens[..prefix_len(tokens.len())] {
                for &s in &postings[t as usize] {
                    let s = s as usize;
                    // each unordered pair is verified once, from its smaller id
                    if s <= r || seen[s] == r {
                        continue;
                    }
                    seen[s] = r;
                    let other = ranked[s].len() as f64;
                    if other < lo || other > hi {
                        continue;
                    }
                    let d = jaccard_distance(sets[r].tokens(), sets[s].tokens());
                    computations += 1;
                    if d <= eps {
                        push_pair(&mut lists, r, s, d);
                    }
                }
            }
        }
    }

    for l in lists.iter_mut() {
        l.sort_unstable_by_key(|e| e.id);
    }
    Ok((lists, computations))
}
