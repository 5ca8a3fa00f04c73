//! Binary sum tree over per-node rates: O(log n) update and proportional
//! selection. Internal sums are recomputed from children on every update, so
//! the total never accumulates drift.

#[derive(Debug, Clone)]
pub(crate) struct SumTree {
    leaves: usize,
    tree: Vec<f64>,
}

impl SumTree {
    pub fn new(n: usize) -> Self {
        let leaves = n.max(1).next_power_of_two();
        SumTree {
            leaves,
            tree: vec![0.0; 2 * leaves],
        }
    }

    pub fn total(&self) -> f64 {
        self.tree[1]
    }

    pub fn get(&self, i: usize) -> f64 {
        self.tree[self.leaves + i]
    }

    pub fn set(&mut self, i: usize, value: f64) {
        let mut pos = self.leaves + i;
        if self.tree[pos] == value {
            return;
        }
        self.tree[pos] = value;
        while pos > 1 {
            pos /= 2;
            self.tree[pos] = self.tree[2 * pos] + self.tree[2 * pos + 1];
        }
    }

    /// Leaf whose cumulative interval contains `target` in `[0, total)`.
    /// Never returns a zero-weight leaf while the total is positive.
    pub fn find(&self, mut target: f64) -> usize {
        let mut pos = 1;
        while pos < self.leaves {
            let left = self.tree[2 * pos];
            let right = self.tree[2 * pos + 1];
            if (target < left && left > 0.0) || right <= 0.0 {
                pos *= 2;
            } else {
                target -= left;
                pos = 2 * pos + 1;
            }
        }
        pos - self.leaves
    }
}
