use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::WorkloadError;
use crate::trainer::iteration_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
    Validation,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Test, Split::Validation];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
            Split::Validation => "validation",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;
    fn from_str(s: &str) -> Result<Split, String> {
        Split::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| format!("unknown split {s:?}"))
    }
}

/// Train/test/validation ratios. Only binary tasks get a validation split.
pub fn default_ratios(n_classes: usize) -> [f64; 3] {
    if n_classes == 2 {
        [0.67, 0.165, 0.165]
    } else {
        [0.67, 0.33, 0.0]
    }
}

/// Running totals shared by all classes, so that rounding surplus in one
/// class is paid back in the next.
struct Allocator {
    ratios: [f64; 3],
    given: [usize; 3],
    seen: usize,
}

impl Allocator {
    fn deficit(&self, j: usize, extra: usize) -> f64 {
        self.ratios[j] * (self.seen + extra) as f64 - self.given[j] as f64
    }

    /// The split furthest behind its share; the first wins ties.
    fn next(&mut self) -> usize {
        let j = (0..3)
            .filter(|&j| self.ratios[j] > 0.0)
            .fold(None, |best: Option<usize>, j| match best {
                Some(b) if self.deficit(b, 1) >= self.deficit(j, 1) => Some(b),
                _ => Some(j),
            })
            .expect("some ratio is positive");
        self.given[j] += 1;
        self.seen += 1;
        j
    }

    /// Largest-remainder apportionment of `n` items, remainders ranked by
    /// the global deficit.
    fn apportion(&mut self, n: usize) -> [usize; 3] {
        let exact: Vec<f64> = self.ratios.iter().map(|r| r * n as f64).collect();
        let mut counts = [0usize; 3];
        for j in 0..3 {
            counts[j] = exact[j].floor() as usize;
        }
        let mut left = n - counts.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..3).filter(|&j| self.ratios[j] > 0.0).collect();
        order.sort_by(|&a, &b| {
            let key = |j: usize| exact[j] - counts[j] as f64 + self.deficit(j, 0);
            key(b).total_cmp(&key(a)).then(a.cmp(&b))
        });
        for &j in order.iter().cycle() {
            if left == 0 {
                break;
            }
            counts[j] += 1;
            left -= 1;
        }
        for (g, c) in self.given.iter_mut().zip(&counts) {
            *g += c;
        }
        self.seen += n;
        counts
    }
}

fn check_ratios(ratios: [f64; 3]) -> Result<(), WorkloadError> {
    let ok = ratios.iter().all(|r| r.is_finite() && *r >= 0.0) && (ratios.iter().sum::<f64>() - 1.0).abs() <= 1e-9;
    if ok {
        Ok(())
    } else {
        Err(WorkloadError::Ratios(ratios))
    }
}

/// Assigns a split to each item, stratified by its class. Classes too
/// small to reach every non-empty split are pooled and split together.
pub fn split_dataset(classes: &[String], ratios: [f64; 3], seed: u64) -> Result<Vec<Split>, WorkloadError> {
    check_ratios(ratios)?;
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, c) in classes.iter().enumerate() {
        by_class.entry(c.as_str()).or_default().push(i);
    }
    let nonzero = ratios.iter().filter(|r| **r > 0.0).count();
    let mut alloc = Allocator {
        ratios,
        given: [0; 3],
        seen: 0,
    };
    let mut out = vec![Split::Train; classes.len()];
    let mut pooled: Vec<Vec<usize>> = Vec::new();
    for (stream, (class, mut items)) in by_class.into_iter().enumerate() {
        items.shuffle(&mut iteration_rng(seed, stream as u64));
        if items.len() < nonzero {
            log::warn!(
                "class {class:?} has {} items, fewer than the {nonzero} splits; not stratified",
                items.len()
            );
            pooled.push(items);
            continue;
        }
        let counts = alloc.apportion(items.len());
        let mut rest = items.as_slice();
        for (j, &n) in counts.iter().enumerate() {
            for &i in &rest[..n] {
                out[i] = Split::ALL[j];
            }
            rest = &rest[n..];
        }
    }
    // round-robin across the small classes, then deal out
    let longest = pooled.iter().map(Vec::len).max().unwrap_or(0);
    for k in 0..longest {
        for items in &pooled {
            if let Some(&i) = items.get(k) {
                out[i] = Split::ALL[alloc.next()];
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(spec: &[(&str, usize)]) -> Vec<String> {
        spec.iter().flat_map(|(c, n)| std::iter::repeat_n(c.to_string(), *n)).collect()
    }

    fn sizes(s: &[Split]) -> [usize; 3] {
        let mut n = [0; 3];
        for x in s {
            n[Split::ALL.iter().position(|y| y == x).unwrap()] += 1;
        }
        n
    }

    #[test]
    fn four_items_two_classes() {
        let classes = labels(&[("0", 2), ("1", 2)]);
        let s = split_dataset(&classes, [0.5, 0.25, 0.25], 3).unwrap();
        assert_eq!(sizes(&s), [2, 1, 1]);
        let train: Vec<&String> = classes
            .iter()
            .zip(&s)
            .filter(|(_, x)| **x == Split::Train)
            .map(|(c, _)| c)
            .collect();
        assert_eq!(train.len(), 2);
        assert_ne!(train[0], train[1]);
    }

    #[test]
    fn everything_in_train() {
        let classes = labels(&[("0", 5), ("1", 3)]);
        assert!(split_dataset(&classes, [1.0, 0.0, 0.0], 1)
            .unwrap()
            .iter()
            .all(|s| *s == Split::Train));
    }

    #[test]
    fn full_workload_scale() {
        let classes = labels(&[("0", 335), ("1", 335)]);
        let s = split_dataset(&classes, default_ratios(2), 9).unwrap();
        let n = sizes(&s);
        // 670 x (0.67, 0.165, 0.165) = 448.9, 110.55, 110.55
        assert_eq!(n.iter().sum::<usize>(), 670);
        for (got, want) in n.iter().zip([448.9, 110.55, 110.55]) {
            assert!((*got as f64 - want).abs() < 1.0, "{n:?}");
        }
        assert_eq!(split_dataset(&classes, default_ratios(2), 9).unwrap(), s);
    }

    #[test]
    fn bad_ratios() {
        assert!(matches!(split_dataset(&[], [0.5, 0.5, 0.5], 0), Err(WorkloadError::Ratios(_))));
        assert!(matches!(split_dataset(&[], [1.5, -0.5, 0.0], 0), Err(WorkloadError::Ratios(_))));
    }

    #[test]
    fn names_round_trip() {
        for s in Split::ALL {
            assert_eq!(s.as_str().parse::<Split>().unwrap(), s);
        }
        assert!("valid".parse::<Split>().is_err());
    }
}
