//! Normalized mutual information between two labelings.
//!
//! `NMI = I(A; B) / ((H(A) + H(B)) / 2)` (arithmetic-mean normalization).
//! When both labelings put every node in one cluster the score is 1; when
//! only one of them does, it is 0.

use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};

pub const NORMALIZATION: &str = "arithmetic";

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

pub fn nmi<A, B>(labels_a: &[A], labels_b: &[B]) -> Result<f64>
where
    A: Eq + Hash,
    B: Eq + Hash,
{
    if labels_a.len() != labels_b.len() {
        return Err(Error::Mismatch(format!(
            "labelings cover {} and {} nodes",
            labels_a.len(),
            labels_b.len()
        )));
    }
    if labels_a.is_empty() {
        return Err(Error::Mismatch("labelings are empty".into()));
    }
    let ids_a = dense(labels_a);
    let ids_b = dense(labels_b);
    let ka = ids_a.iter().max().map_or(0, |m| m + 1);
    let kb = ids_b.iter().max().map_or(0, |m| m + 1);
    if ka == 1 || kb == 1 {
        return Ok(if ka == kb { 1.0 } else { 0.0 });
    }
    let mut table = vec![0usize; ka * kb];
    let mut row = vec![0usize; ka];
    let mut col = vec![0usize; kb];
    for (&a, &b) in ids_a.iter().zip(&ids_b) {
        table[a * kb + b] += 1;
        row[a] += 1;
        col[b] += 1;
    }
    let n = labels_a.len() as f64;
    let mut mi = 0.0;
    for a in 0..ka {
        for b in 0..kb {
            let c = table[a * kb + b];
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (row[a] as f64 * col[b] as f64)).ln();
            }
        }
    }
    let h = (entropy(row.into_iter(), n) + entropy(col.into_iter(), n)) / 2.0;
    Ok((mi / h).clamp(0.0, 1.0))
}

fn dense<T: Eq + Hash>(labels: &[T]) -> Vec<usize> {
    let mut map: HashMap<&T, usize> = HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}
