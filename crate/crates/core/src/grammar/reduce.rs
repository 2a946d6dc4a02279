//! Free-pregroup reduction by contractions `a^l a ≤ 1` and `a a^r ≤ 1`.
//!
//! Contractions form a non-crossing matching, so reducibility of a factor
//! string is decided with an interval dynamic program.

use crate::diagram::{Diagram, DiagramBox, Factor, PregroupType};

/// A witness that a factor string reduces to a target type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reduction {
    /// Contracted index pairs `(left, right)`, innermost first.
    pub contractions: Vec<(usize, usize)>,
    /// Indices of the factors that survive, matching the target in order.
    pub kept: Vec<usize>,
}

struct Contractible {
    n: usize,
    // ok[i][j]: factors [i, j) vanish; split[i][j]: the partner of i
    ok: Vec<bool>,
    split: Vec<usize>,
}

impl Contractible {
    fn new(f: &[Factor]) -> Contractible {
        let n = f.len();
        let w = n + 1;
        let mut ok = vec![false; w * w];
        let mut split = vec![usize::MAX; w * w];
        for i in 0..=n {
            ok[i * w + i] = true;
        }
        for len in (2..=n).step_by(2) {
            for i in 0..=n - len {
                let j = i + len;
                let mut k = i + 1;
                while k < j {
                    if f[i].contracts_with(&f[k]) && ok[(i + 1) * w + k] && ok[(k + 1) * w + j] {
                        ok[i * w + j] = true;
                        split[i * w + j] = k;
                        break;
                    }
                    k += 2;
                }
            }
        }
        Contractible { n, ok, split }
    }

    fn get(&self, i: usize, j: usize) -> bool {
        self.ok[i * (self.n + 1) + j]
    }

    fn pairs(&self, i: usize, j: usize, out: &mut Vec<(usize, usize)>) {
        if i >= j {
            return;
        }
        let k = self.split[i * (self.n + 1) + j];
        out.push((i, k));
        self.pairs(i + 1, k, out);
        self.pairs(k + 1, j, out);
    }
}

#[derive(Clone, Copy)]
enum Step {
    Keep,
    Skip(usize),
}

pub fn reduce_to(factors: &[Factor], target: &[Factor]) -> Option<Reduction> {
    let n = factors.len();
    let m = target.len();
    if m > n || !(n - m).is_multiple_of(2) {
        return None;
    }
    let table = Contractible::new(factors);
    // reach[i][t]: factors[..i] reduces to target[..t]
    let w = m + 1;
    let mut reach: Vec<Option<(usize, usize, Step)>> = vec![None; (n + 1) * w];
    let mut seen = vec![false; (n + 1) * w];
    seen[0] = true;
    for i in 0..=n {
        for t in 0..=m {
            if !seen[i * w + t] {
                continue;
            }
            if i < n && t < m && factors[i] == target[t] && !seen[(i + 1) * w + t + 1] {
                seen[(i + 1) * w + t + 1] = true;
                reach[(i + 1) * w + t + 1] = Some((i, t, Step::Keep));
            }
            let mut j = i + 2;
            while j <= n {
                if table.get(i, j) && !seen[j * w + t] {
                    seen[j * w + t] = true;
                    reach[j * w + t] = Some((i, t, Step::Skip(j)));
                }
                j += 2;
            }
        }
    }
    if !seen[n * w + m] {
        return None;
    }
    let mut contractions = Vec::new();
    let mut kept = Vec::new();
    let (mut i, mut t) = (n, m);
    while let Some((pi, pt, step)) = reach[i * w + t] {
        match step {
            Step::Keep => kept.push(pi),
            Step::Skip(j) => table.pairs(pi, j, &mut contractions),
        }
        i = pi;
        t = pt;
    }
    kept.reverse();
    contractions.sort_by_key(|&(l, r)| (r - l, l));
    Some(Reduction { contractions, kept })
}

/// The diagram of cups realising a reduction from `dom` to `cod`, or `None`
/// when `dom` does not reduce to `cod`.
pub fn reduction_diagram(dom: &PregroupType, cod: &PregroupType) -> Option<Diagram> {
    let red = reduce_to(dom.factors(), cod.factors())?;
    let mut alive = vec![true; dom.len()];
    let mut d = Diagram::id(dom.clone());
    for &(l, r) in &red.contractions {
        let offset = alive[..l].iter().filter(|&&a| a).count();
        d.push(offset, DiagramBox::cup(&dom.factors()[l], &dom.factors()[r]))
            .expect("inner contractions are adjacent once nested ones are gone");
        alive[l] = false;
        alive[r] = false;
    }
    debug_assert_eq!(d.cod(), cod);
    Some(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(s: &str) -> Vec<Factor> {
        s.parse::<PregroupType>().unwrap().0
    }

    #[test]
    fn minimal_sentence() {
        let r = reduce_to(&f("n@n.r@s"), &f("s")).unwrap();
        assert_eq!(r.contractions, vec![(0, 1)]);
        assert_eq!(r.kept, vec![2]);
    }

    #[test]
    fn no_contraction_possible() {
        assert!(reduce_to(&f("n@n"), &f("s")).is_none());
        // a^r a is an expansion direction, not a contraction
        assert!(reduce_to(&f("n.r@n@s"), &f("s")).is_none());
    }

    #[test]
    fn nested_contractions_inner_first() {
        let r = reduce_to(&f("s@n.l@n.l@n@n"), &f("s")).unwrap();
        assert_eq!(r.contractions, vec![(2, 3), (1, 4)]);
    }

    #[test]
    fn needs_lookahead() {
        // contracting the leftmost pair first would strand n.r.r
        let r = reduce_to(&f("n@n.r@n.r.r@s"), &f("n@s")).unwrap();
        assert_eq!(r.contractions, vec![(1, 2)]);
        assert_eq!(r.kept, vec![0, 3]);
        let r = reduce_to(&f("s@n.l@n@n.r"), &f("s@n.r"));
        assert!(r.is_some());
    }

    #[test]
    fn cup_diagram() {
        let dom: PregroupType = "n@n.r@n@n.l@n".parse().unwrap();
        let d = reduction_diagram(&dom, &"n".parse().unwrap()).unwrap();
        assert_eq!(d.layers().len(), 2);
        assert_eq!(d.layers()[0].offset, 0);
        assert_eq!(d.layers()[1].offset, 1);
        assert!(d.boxes().all(DiagramBox::is_cup));
        assert!(reduction_diagram(&dom, &"s".parse().unwrap()).is_none());
    }
}
