use serde::{Deserialize, Serialize};

use super::TrainError;

/// Equal-frequency classes over a set of measured values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassBinning {
    pub n_classes: usize,
    /// Upper end of every class but the last.
    pub boundaries: Vec<f64>,
    /// Closed `[lo, hi]` value range of each class.
    pub class_ranges: Vec<[f64; 2]>,
    /// Class of each input value, in input order.
    pub assignments: Vec<usize>,
}

impl ClassBinning {
    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_classes];
        for &c in &self.assignments {
            sizes[c] += 1;
        }
        sizes
    }
}

/// Little-endian bit string of a class index, qubit 0 first.
pub fn class_bits(class: usize, n_bits: usize) -> String {
    (0..n_bits).map(|k| if class >> k & 1 == 1 { '1' } else { '0' }).collect()
}

/// Sorts values stably and cuts them into `n_classes` runs whose sizes
/// differ by at most one, larger runs first. Equal values split across a
/// cut go to classes by input order.
pub fn bin_labels(values: &[f64], n_classes: usize) -> Result<ClassBinning, TrainError> {
    if n_classes == 0 {
        return Err(TrainError::Binning("need at least one class".into()));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(TrainError::Binning(format!("non-finite value {v}")));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut distinct = order.iter().map(|&i| values[i]).collect::<Vec<_>>();
    distinct.dedup();
    if distinct.len() < n_classes {
        return Err(TrainError::Binning(format!(
            "{} distinct values cannot form {n_classes} classes",
            distinct.len()
        )));
    }
    let n = values.len();
    let (base, extra) = (n / n_classes, n % n_classes);
    let mut assignments = vec![0; n];
    let mut class_ranges = Vec::with_capacity(n_classes);
    let mut start = 0;
    for c in 0..n_classes {
        let size = base + usize::from(c < extra);
        let run = &order[start..start + size];
        for &i in run {
            assignments[i] = c;
        }
        class_ranges.push([values[run[0]], values[run[size - 1]]]);
        start += size;
    }
    let boundaries = class_ranges[..n_classes - 1].iter().map(|r| r[1]).collect();
    Ok(ClassBinning {
        n_classes,
        boundaries,
        class_ranges,
        assignments,
    })
}
