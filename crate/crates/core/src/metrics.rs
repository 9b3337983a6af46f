//! External clustering scores: purity and normalized mutual information.

use crate::error::{Error, Result};

/// Classes × clusters co-occurrence counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    counts: Vec<Vec<usize>>,
    n: usize,
}

impl ContingencyTable {
    pub fn new(clusters: &[usize], classes: &[usize]) -> Result<Self> {
        if clusters.len() != classes.len() {
            return Err(Error::param(format!(
                "{} cluster labels but {} class labels",
                clusters.len(),
                classes.len()
            )));
        }
        if clusters.is_empty() {
            return Err(Error::param("no points to score"));
        }
        let rows = classes.iter().max().map_or(0, |m| m + 1);
        let cols = clusters.iter().max().map_or(0, |m| m + 1);
        let mut counts = vec![vec![0usize; cols]; rows];
        for (&cl, &c) in clusters.iter().zip(classes) {
            counts[c][cl] += 1;
        }
        Ok(ContingencyTable {
            counts,
            n: clusters.len(),
        })
    }

    pub fn counts(&self) -> &[Vec<usize>] {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let cols = self.counts.first().map_or(0, Vec::len);
        (0..cols)
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect()
    }
}

/// Fraction of points that belong to the majority class of their cluster.
pub fn purity(clusters: &[usize], classes: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(clusters, classes)?;
    let cols = table.counts.first().map_or(0, Vec::len);
    let hits: usize = (0..cols)
        .map(|j| table.counts.iter().map(|r| r[j]).max().unwrap_or(0))
        .sum();
    Ok(hits as f64 / table.n as f64)
}

fn entropy(sizes: &[usize], n: f64) -> f64 {
    sizes
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// `I(C; X) / √(H(C) H(X))` with natural logarithms. Two single-group
/// partitions score 1; a single-group partition against anything else
/// scores 0.
pub fn nmi(clusters: &[usize], classes: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(clusters, classes)?;
    let n = table.n as f64;
    let class_sizes = table.class_sizes();
    let cluster_sizes = table.cluster_sizes();
    let h_class = entropy(&class_sizes, n);
    let h_cluster = entropy(&cluster_sizes, n);
    if h_class == 0.0 && h_cluster == 0.0 {
        return Ok(1.0);
    }
    if h_class == 0.0 || h_cluster == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (class_sizes[i] as f64 * cluster_sizes[j] as f64)).ln();
            }
        }
    }
    Ok((mi / (h_class * h_cluster).sqrt()).clamp(0.0, 1.0))
}
