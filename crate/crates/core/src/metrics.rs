//! External clustering quality measures: accuracy under the best one-to-one
//! cluster-to-class matching, normalized mutual information, and purity.

use std::collections::HashMap;

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;

use crate::error::{Error, Result};

/// Contingency table with rows = predicted clusters, cols = true classes.
fn contingency(pred: &[usize], truth: &[usize]) -> Result<Vec<Vec<u64>>> {
    if pred.len() != truth.len() {
        return Err(Error::invalid(format!(
            "label vectors differ in length: {} vs {}",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::invalid("label vectors are empty"));
    }
    let index = |labels: &[usize]| {
        let mut map = HashMap::new();
        let mut order: Vec<usize> = labels.to_vec();
        order.sort_unstable();
        order.dedup();
        for (i, l) in order.into_iter().enumerate() {
            map.insert(l, i);
        }
        map
    };
    let (pi, ti) = (index(pred), index(truth));
    let mut table = vec![vec![0u64; ti.len()]; pi.len()];
    for (p, t) in pred.iter().zip(truth) {
        table[pi[p]][ti[t]] += 1;
    }
    Ok(table)
}

/// Fraction of samples correctly labelled under the optimal injective
/// cluster-to-class map (Hungarian assignment on the padded confusion matrix).
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = contingency(pred, truth)?;
    let size = table.len().max(table[0].len());
    let mut weights = Matrix::new(size, size, 0i64);
    for (r, row) in table.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            weights[(r, c)] = v as i64;
        }
    }
    let (matched, _) = kuhn_munkres(&weights);
    Ok(matched as f64 / pred.len() as f64)
}

fn entropy(counts: impl Iterator<Item = u64>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// `I(pred; truth) / sqrt(H(pred) H(truth))`, natural logs; 0 when either side is constant.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = contingency(pred, truth)?;
    let n = pred.len() as f64;
    let rows: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<u64> = (0..table[0].len()).map(|c| table.iter().map(|r| r[c]).sum()).collect();
    let (hp, ht) = (entropy(rows.iter().copied(), n), entropy(cols.iter().copied(), n));
    if hp <= 0.0 || ht <= 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for (r, row) in table.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            if v > 0 {
                let v = v as f64;
                mi += v / n * (v * n / (rows[r] as f64 * cols[c] as f64)).ln();
            }
        }
    }
    Ok((mi / (hp * ht).sqrt()).clamp(0.0, 1.0))
}

/// Share of samples that belong to the majority class of their cluster.
pub fn purity(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = contingency(pred, truth)?;
    let hits: u64 = table.iter().map(|r| r.iter().copied().max().unwrap_or(0)).sum();
    Ok(hits as f64 / pred.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Scores {
    pub acc: f64,
    pub nmi: f64,
    pub purity: f64,
}

pub fn score(pred: &[usize], truth: &[usize]) -> Result<Scores> {
    Ok(Scores {
        acc: accuracy(pred, truth)?,
        nmi: nmi(pred, truth)?,
        purity: purity(pred, truth)?,
    })
}
