//! Finite awareness lattices.
//!
//! A lattice is built once from explicit elements and order pairs (or from the
//! powerset generator), validated, and then answers every order, join and meet
//! query by table lookup.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Handle to an element of an [`AwarenessLattice`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Level(u16);

impl Level {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("lattice has no elements")]
    Empty,
    #[error("duplicate lattice element `{0}`")]
    DuplicateElement(String),
    #[error("unknown lattice element `{0}`")]
    UnknownElement(String),
    #[error("order is not a partial order: `{0}` and `{1}` lie below each other")]
    NotAPartialOrder(String, String),
    #[error("not a lattice: `{0}` and `{1}` have no unique {2}")]
    NotALattice(String, String, &'static str),
    #[error("too many lattice elements ({0})")]
    TooLarge(usize),
}

#[derive(Debug, Clone)]
pub struct AwarenessLattice {
    labels: Vec<String>,
    by_label: HashMap<String, Level>,
    // leq[a * n + b] holds when a ⊴ b
    leq: Vec<bool>,
    join: Vec<Level>,
    meet: Vec<Level>,
    top: Level,
    bottom: Level,
    ascending: Vec<Level>,
    height: usize,
}

impl AwarenessLattice {
    /// Builds and validates a lattice from element labels and `(lower, upper)` pairs.
    ///
    /// The pairs need not be transitively closed; reflexivity is implied.
    pub fn build<I, S>(elements: I, order_pairs: &[(String, String)]) -> Result<Self, LatticeError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = elements.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(LatticeError::Empty);
        }
        if labels.len() > u16::MAX as usize {
            return Err(LatticeError::TooLarge(labels.len()));
        }
        let n = labels.len();
        let mut by_label = HashMap::with_capacity(n);
        for (i, l) in labels.iter().enumerate() {
            if by_label.insert(l.clone(), Level(i as u16)).is_some() {
                return Err(LatticeError::DuplicateElement(l.clone()));
            }
        }
        let lookup = |s: &str| {
            by_label
                .get(s)
                .copied()
                .ok_or_else(|| LatticeError::UnknownElement(s.to_string()))
        };

        let mut leq = vec![false; n * n];
        for i in 0..n {
            leq[i * n + i] = true;
        }
        for (lo, hi) in order_pairs {
            let (lo, hi) = (lookup(lo)?, lookup(hi)?);
            leq[lo.index() * n + hi.index()] = true;
        }
        // Warshall closure
        for k in 0..n {
            for i in 0..n {
                if leq[i * n + k] {
                    for j in 0..n {
                        if leq[k * n + j] {
                            leq[i * n + j] = true;
                        }
                    }
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if leq[i * n + j] && leq[j * n + i] {
                    return Err(LatticeError::NotAPartialOrder(
                        labels[i].clone(),
                        labels[j].clone(),
                    ));
                }
            }
        }

        let mut join = vec![Level(0); n * n];
        let mut meet = vec![Level(0); n * n];
        for a in 0..n {
            for b in a..n {
                let j = extremal_bound(&leq, n, a, b, true).ok_or_else(|| {
                    LatticeError::NotALattice(labels[a].clone(), labels[b].clone(), "join")
                })?;
                let m = extremal_bound(&leq, n, a, b, false).ok_or_else(|| {
                    LatticeError::NotALattice(labels[a].clone(), labels[b].clone(), "meet")
                })?;
                join[a * n + b] = Level(j as u16);
                join[b * n + a] = Level(j as u16);
                meet[a * n + b] = Level(m as u16);
                meet[b * n + a] = Level(m as u16);
            }
        }

        let top = (0..n).fold(Level(0), |acc, x| join[acc.index() * n + x]);
        let bottom = (0..n).fold(Level(0), |acc, x| meet[acc.index() * n + x]);

        // Strictly larger elements have strictly larger down-sets, so sorting by
        // down-set size yields a linear extension; labels break ties.
        let down_size: Vec<usize> = (0..n)
            .map(|b| (0..n).filter(|&a| leq[a * n + b]).count())
            .collect();
        let mut ascending: Vec<Level> = (0..n).map(|i| Level(i as u16)).collect();
        ascending.sort_by(|x, y| {
            down_size[x.index()]
                .cmp(&down_size[y.index()])
                .then_with(|| labels[x.index()].cmp(&labels[y.index()]))
        });

        let mut longest = vec![0usize; n];
        for &b in &ascending {
            for &a in &ascending {
                if a != b && leq[a.index() * n + b.index()] {
                    longest[b.index()] = longest[b.index()].max(longest[a.index()] + 1);
                }
            }
        }
        let height = longest.iter().copied().max().unwrap_or(0);

        Ok(Self {
            labels,
            by_label,
            leq,
            join,
            meet,
            top,
            bottom,
            ascending,
            height,
        })
    }

    /// Powerset of `items` ordered by inclusion. Element labels are `{}`,
    /// `{a}`, `{a,b}`, … with items listed in the order given.
    pub fn powerset<S: AsRef<str>>(items: &[S]) -> Result<Self, LatticeError> {
        let k = items.len();
        if k > 12 {
            return Err(LatticeError::TooLarge(1 << k));
        }
        let mut seen = std::collections::HashSet::new();
        for it in items {
            if !seen.insert(it.as_ref()) {
                return Err(LatticeError::DuplicateElement(it.as_ref().to_string()));
            }
        }
        let label = |mask: usize| subset_label(items, mask);
        let elements: Vec<String> = (0..(1usize << k)).map(label).collect();
        let mut pairs = Vec::new();
        for mask in 0..(1usize << k) {
            for bit in 0..k {
                if mask & (1 << bit) == 0 {
                    pairs.push((label(mask), label(mask | (1 << bit))));
                }
            }
        }
        Self::build(elements, &pairs)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn top(&self) -> Level {
        self.top
    }

    pub fn bottom(&self) -> Level {
        self.bottom
    }

    /// Number of edges on the longest chain.
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn label(&self, l: Level) -> &str {
        &self.labels[l.index()]
    }

    pub fn level(&self, label: &str) -> Result<Level, LatticeError> {
        self.by_label
            .get(label)
            .copied()
            .ok_or_else(|| LatticeError::UnknownElement(label.to_string()))
    }

    pub fn levels(&self) -> impl ExactSizeIterator<Item = Level> + '_ {
        (0..self.labels.len()).map(|i| Level(i as u16))
    }

    /// `a ⊴ b`.
    #[inline]
    pub fn leq(&self, a: Level, b: Level) -> bool {
        self.leq[a.index() * self.len() + b.index()]
    }

    #[inline]
    pub fn lt(&self, a: Level, b: Level) -> bool {
        a != b && self.leq(a, b)
    }

    #[inline]
    pub fn join(&self, a: Level, b: Level) -> Level {
        self.join[a.index() * self.len() + b.index()]
    }

    #[inline]
    pub fn meet(&self, a: Level, b: Level) -> Level {
        self.meet[a.index() * self.len() + b.index()]
    }

    pub fn join_all<I: IntoIterator<Item = Level>>(&self, it: I) -> Level {
        it.into_iter().fold(self.bottom, |acc, l| self.join(acc, l))
    }

    /// `L(ℓ)`: every level weakly below `l`, in ascending order.
    pub fn down_set(&self, l: Level) -> Vec<Level> {
        self.ascending
            .iter()
            .copied()
            .filter(|&x| self.leq(x, l))
            .collect()
    }

    pub fn up_set(&self, l: Level) -> Vec<Level> {
        self.ascending
            .iter()
            .copied()
            .filter(|&x| self.leq(l, x))
            .collect()
    }

    /// Deterministic linear extension of the order, starting at the bottom.
    pub fn topo_ascending(&self) -> &[Level] {
        &self.ascending
    }

    /// Explicit `(lower, upper)` covering pairs; enough to rebuild the lattice.
    pub fn covering_pairs(&self) -> Vec<(Level, Level)> {
        let mut out = Vec::new();
        for a in self.levels() {
            for b in self.levels() {
                if self.lt(a, b) && !self.levels().any(|c| self.lt(a, c) && self.lt(c, b)) {
                    out.push((a, b));
                }
            }
        }
        out
    }
}

impl fmt::Display for AwarenessLattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<&str> = self.ascending.iter().map(|&l| self.label(l)).collect();
        write!(f, "lattice[{}]", labels.join(" "))
    }
}

pub(crate) fn subset_label<S: AsRef<str>>(items: &[S], mask: usize) -> String {
    let members: Vec<&str> = items
        .iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, s)| s.as_ref())
        .collect();
    format!("{{{}}}", members.join(","))
}

// Least upper bound (upper = true) or greatest lower bound of a and b.
fn extremal_bound(leq: &[bool], n: usize, a: usize, b: usize, upper: bool) -> Option<usize> {
    let rel = |x: usize, y: usize| {
        if upper {
            leq[x * n + y]
        } else {
            leq[y * n + x]
        }
    };
    let bounds: Vec<usize> = (0..n).filter(|&c| rel(a, c) && rel(b, c)).collect();
    bounds
        .iter()
        .copied()
        .find(|&c| bounds.iter().all(|&d| rel(c, d)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abc() -> AwarenessLattice {
        AwarenessLattice::powerset(&["a", "b", "c"]).unwrap()
    }

    fn pairs(p: &[(&str, &str)]) -> Vec<(String, String)> {
        p.iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    #[test]
    fn powerset_top_and_bottom() {
        let lat = abc();
        assert_eq!(lat.len(), 8);
        assert_eq!(lat.label(lat.top()), "{a,b,c}");
        assert_eq!(lat.label(lat.bottom()), "{}");
        assert_eq!(lat.height(), 3);
    }

    #[test]
    fn one_point_lattice() {
        let lat = AwarenessLattice::build(["{}"], &[]).unwrap();
        assert_eq!(lat.top(), lat.bottom());
        assert_eq!(lat.topo_ascending(), &[lat.bottom()]);
        assert_eq!(lat.height(), 0);
    }

    #[test]
    fn m_shaped_poset_is_not_a_lattice() {
        // x and y both sit below p and q, which are incomparable
        let err = AwarenessLattice::build(
            ["x", "y", "p", "q"],
            &pairs(&[("x", "p"), ("x", "q"), ("y", "p"), ("y", "q")]),
        )
        .unwrap_err();
        assert!(matches!(err, LatticeError::NotALattice(ref a, ref b, _) if a == "x" && b == "y"));
    }

    #[test]
    fn cycle_is_rejected() {
        let err =
            AwarenessLattice::build(["a", "b"], &pairs(&[("a", "b"), ("b", "a")])).unwrap_err();
        assert_eq!(err, LatticeError::NotAPartialOrder("a".into(), "b".into()));
    }

    #[test]
    fn unknown_and_duplicate_elements() {
        assert_eq!(
            AwarenessLattice::build(["a"], &pairs(&[("a", "z")])).unwrap_err(),
            LatticeError::UnknownElement("z".into())
        );
        assert_eq!(
            AwarenessLattice::build(["a", "a"], &[]).unwrap_err(),
            LatticeError::DuplicateElement("a".into())
        );
        assert_eq!(
            AwarenessLattice::build(Vec::<String>::new(), &[]).unwrap_err(),
            LatticeError::Empty
        );
        let lat = abc();
        assert_eq!(
            lat.level("{d}").unwrap_err(),
            LatticeError::UnknownElement("{d}".into())
        );
    }

    #[test]
    fn join_meet_leq_examples() {
        let lat = abc();
        let l = |s: &str| lat.level(s).unwrap();
        assert_eq!(lat.join(l("{a,b}"), l("{b,c}")), l("{a,b,c}"));
        assert_eq!(lat.join(l("{a}"), l("{a}")), l("{a}"));
        assert_eq!(lat.join(lat.bottom(), l("{c}")), l("{c}"));
        assert!(lat.leq(l("{a,b}"), l("{a,b,c}")));
        assert!(!lat.leq(l("{a,b}"), l("{b,c}")));
        assert_eq!(lat.meet(l("{a,b}"), l("{b,c}")), l("{b}"));
        assert_eq!(lat.meet(lat.top(), l("{a,c}")), l("{a,c}"));
    }

    #[test]
    fn down_sets() {
        let lat = abc();
        let l = |s: &str| lat.level(s).unwrap();
        let names: Vec<&str> = lat
            .down_set(l("{a,b}"))
            .into_iter()
            .map(|x| lat.label(x))
            .collect();
        assert_eq!(names, ["{}", "{a}", "{b}", "{a,b}"]);
        assert_eq!(lat.down_set(lat.bottom()), vec![lat.bottom()]);
        assert_eq!(lat.down_set(lat.top()).len(), 8);
    }

    #[test]
    fn topo_orders() {
        let lat = AwarenessLattice::powerset(&["a", "b"]).unwrap();
        let names: Vec<&str> = lat.topo_ascending().iter().map(|&x| lat.label(x)).collect();
        assert_eq!(names, ["{}", "{a}", "{b}", "{a,b}"]);

        let chain = AwarenessLattice::build(
            ["{a,b}", "{a}", "{}"],
            &pairs(&[("{}", "{a}"), ("{a}", "{a,b}")]),
        )
        .unwrap();
        let names: Vec<&str> = chain
            .topo_ascending()
            .iter()
            .map(|&x| chain.label(x))
            .collect();
        assert_eq!(names, ["{}", "{a}", "{a,b}"]);
        assert_eq!(chain.height(), 2);
    }

    #[test]
    fn covering_pairs_rebuild_same_order() {
        let lat = abc();
        let cover: Vec<(String, String)> = lat
            .covering_pairs()
            .into_iter()
            .map(|(a, b)| (lat.label(a).to_string(), lat.label(b).to_string()))
            .collect();
        assert_eq!(cover.len(), 12);
        let labels: Vec<String> = lat.levels().map(|l| lat.label(l).to_string()).collect();
        let again = AwarenessLattice::build(labels, &cover).unwrap();
        for a in lat.levels() {
            for b in lat.levels() {
                assert_eq!(lat.leq(a, b), again.leq(a, b));
            }
        }
    }
}
