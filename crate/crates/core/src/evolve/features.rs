//! Behavioral descriptors: expression size and how far a strategy's test
//! ranking drifts from the initial strategy's on a fixed set of probe grids.

use crate::matrix::BoolMatrix;
use crate::strategy::{Builtin, Strategy, MAX_NODES};

use super::archive::{BEHAVIOR_BUCKETS, COMPLEXITY_BUCKETS};

/// Probe grids plus the reference test rankings they induce.
#[derive(Debug, Clone)]
pub struct ProbeSet {
    probes: Vec<BoolMatrix>,
    reference: Vec<Vec<usize>>,
}

impl Default for ProbeSet {
    fn default() -> Self {
        ProbeSet::standard()
    }
}

impl ProbeSet {
    /// Deterministic grids in which every column has a distinct pass count,
    /// so the reference ranking is strict.
    pub fn standard() -> Self {
        let shapes = [(5, 4), (6, 5), (8, 7), (9, 8)];
        let probes = shapes
            .iter()
            .map(|&(m, n)| {
                let mut grid = BoolMatrix::filled(m, n, false);
                for j in 0..n {
                    // Column j passes exactly `quota` rows, spread by a
                    // stride coprime with m.
                    let quota = (j * 3) % n + 1;
                    for i in 0..m {
                        grid.set(i, j, (i * 7 + j * 5) % m < quota);
                    }
                }
                grid
            })
            .collect();
        ProbeSet::new(probes)
    }

    pub fn new(probes: Vec<BoolMatrix>) -> Self {
        let initial = Builtin::Initial.strategy();
        let reference = probes
            .iter()
            .map(|p| initial.score_grid(p).expect("initial strategy is total").test_ranking)
            .collect();
        ProbeSet { probes, reference }
    }

    pub fn probes(&self) -> &[BoolMatrix] {
        &self.probes
    }

    /// Mean normalized Kendall-tau distance to the reference rankings.
    /// A fault on any probe counts as maximal distance for that probe.
    pub fn behavior_distance(&self, strategy: &Strategy) -> f64 {
        if self.probes.is_empty() {
            return 0.0;
        }
        let total: f64 = self
            .probes
            .iter()
            .zip(&self.reference)
            .map(|(p, r)| match strategy.score_grid(p) {
                Ok(out) => kendall_distance(&out.test_ranking, r),
                Err(_) => 1.0,
            })
            .sum();
        total / self.probes.len() as f64
    }

    pub fn features_of(&self, strategy: &Strategy) -> (usize, usize) {
        (
            complexity_bucket(strategy.node_count()),
            behavior_bucket(self.behavior_distance(strategy)),
        )
    }
}

/// Fraction of item pairs ordered differently by two rankings of the same items.
pub fn kendall_distance(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    assert_eq!(n, b.len(), "rankings differ in length");
    if n < 2 {
        return 0.0;
    }
    let mut pos_b = vec![0; n];
    for (p, &item) in b.iter().enumerate() {
        pos_b[item] = p;
    }
    let mut discordant = 0usize;
    for x in 0..n {
        for y in x + 1..n {
            // a ranks a[x] above a[y]; count pairs b orders the other way.
            if pos_b[a[x]] > pos_b[a[y]] {
                discordant += 1;
            }
        }
    }
    discordant as f64 / (n * (n - 1) / 2) as f64
}

/// Equal-width buckets over node counts `1..=MAX_NODES`.
pub fn complexity_bucket(nodes: usize) -> usize {
    let c = nodes.clamp(1, MAX_NODES);
    ((c - 1) * COMPLEXITY_BUCKETS / (MAX_NODES - 1)).min(COMPLEXITY_BUCKETS - 1)
}

/// Equal-width buckets over `[0, 1]`; 1.0 lands in the last bucket.
pub fn behavior_bucket(distance: f64) -> usize {
    let d = distance.clamp(0.0, 1.0);
    ((d * BEHAVIOR_BUCKETS as f64).floor() as usize).min(BEHAVIOR_BUCKETS - 1)
}
