//! Level-crossing counts of a contour explored so far.
//!
//! Each completed segment between turning points `lo < hi` adds `+1` at `lo`
//! and `-1` at `hi`, so the number of completed segments strictly crossing a
//! level `t` that is not a key is the sum of the deltas of keys below `t`.

use std::collections::BTreeMap;
use std::ops::Bound::{Excluded, Unbounded};

use ordered_float::OrderedFloat;

#[derive(Debug, Clone, Default)]
pub struct CrossingIndex {
    deltas: BTreeMap<OrderedFloat<f64>, i32>,
}

impl CrossingIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    pub fn delta(&self, level: f64) -> i32 {
        self.deltas.get(&OrderedFloat(level)).copied().unwrap_or(0)
    }

    fn bump(&mut self, level: f64, by: i32) {
        let key = OrderedFloat(level);
        let v = self.deltas.entry(key).or_insert(0);
        *v += by;
        if *v == 0 {
            self.deltas.remove(&key);
        }
    }

    /// Records a completed segment between two levels.
    pub fn add_segment(&mut self, a: f64, b: f64) {
        if a == b {
            return;
        }
        self.bump(a.min(b), 1);
        self.bump(a.max(b), -1);
    }

    /// Number of completed segments crossing `level`, which should not be a
    /// key.
    pub fn count_at(&self, level: f64) -> i64 {
        self.deltas
            .range((Unbounded, Excluded(OrderedFloat(level))))
            .map(|(_, &d)| d as i64)
            .sum()
    }
}

/// Prefix sums of crossing deltas on a fixed range `[0, top]`, bucketed so
/// that counts at arbitrary levels cost `O(log B)` plus a short scan.
#[derive(Debug, Clone)]
pub struct LevelIndex {
    top: f64,
    buckets: Vec<Vec<(f64, i32)>>,
    // Fenwick tree over bucket sums, 1-based
    tree: Vec<i64>,
}

const BUCKETS: usize = 1 << 12;

impl LevelIndex {
    pub fn new(top: f64) -> Self {
        Self {
            top,
            buckets: vec![Vec::new(); BUCKETS],
            tree: vec![0; BUCKETS + 1],
        }
    }

    fn bucket(&self, level: f64) -> usize {
        let b = (level / self.top * BUCKETS as f64) as isize;
        b.clamp(0, BUCKETS as isize - 1) as usize
    }

    pub fn delta(&self, level: f64) -> i32 {
        let b = &self.buckets[self.bucket(level)];
        match b.binary_search_by(|e| e.0.total_cmp(&level)) {
            Ok(i) => b[i].1,
            Err(_) => 0,
        }
    }

    fn bump(&mut self, level: f64, by: i32) {
        let k = self.bucket(level);
        let b = &mut self.buckets[k];
        match b.binary_search_by(|e| e.0.total_cmp(&level)) {
            Ok(i) => {
                b[i].1 += by;
                if b[i].1 == 0 {
                    b.remove(i);
                }
            }
            Err(i) => b.insert(i, (level, by)),
        }
        let mut i = k + 1;
        while i <= BUCKETS {
            self.tree[i] += by as i64;
            i += i & i.wrapping_neg();
        }
    }

    pub fn add_segment(&mut self, a: f64, b: f64) {
        if a == b {
            return;
        }
        self.bump(a.min(b), 1);
        self.bump(a.max(b), -1);
    }

    /// Sum of deltas of keys below `level`, or at or below it when
    /// `inclusive`.
    pub fn prefix(&self, level: f64, inclusive: bool) -> i64 {
        let k = self.bucket(level);
        let mut total = 0;
        let mut i = k;
        while i > 0 {
            total += self.tree[i];
            i &= i - 1;
        }
        for &(key, d) in &self.buckets[k] {
            if key < level || (inclusive && key == level) {
                total += d as i64;
            } else {
                break;
            }
        }
        total
    }

    /// Keys strictly between `lo` and `hi`, ascending.
    pub fn keys_between(&self, lo: f64, hi: f64, out: &mut Vec<(f64, i32)>) {
        out.clear();
        if !(lo < hi) {
            return;
        }
        for k in self.bucket(lo)..=self.bucket(hi) {
            out.extend(self.buckets[k].iter().filter(|e| e.0 > lo && e.0 < hi));
        }
    }
}

/// Direction of travel along the contour.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
}

/// Tracks the height, direction and crossings of a contour confined to
/// `[0, top]` as it is explored. The count at the current height is the
/// number of completed segments crossing the levels just ahead in the
/// direction of travel, so half of it (rounded down) is the number of lines
/// to the left of the one being explored.
#[derive(Debug, Clone)]
pub struct ContourWalker {
    index: LevelIndex,
    height: f64,
    direction: Direction,
    last_turn: f64,
}

impl ContourWalker {
    /// Starts at height 0 going up.
    pub fn new(top: f64) -> Self {
        Self {
            index: LevelIndex::new(top),
            height: 0.0,
            direction: Direction::Up,
            last_turn: 0.0,
        }
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn count(&self) -> i64 {
        self.count_at(self.height)
    }

    /// Count at a level ahead of the current height on the current segment.
    pub fn count_at(&self, level: f64) -> i64 {
        self.index.prefix(level, self.direction == Direction::Up)
    }

    /// Lines explored to the left of the current one at this height.
    pub fn lines_left(&self) -> u64 {
        (self.count().max(0) / 2) as u64
    }

    pub fn index(&self) -> &LevelIndex {
        &self.index
    }

    /// Moves along the current segment.
    pub fn move_to(&mut self, level: f64) {
        debug_assert!(match self.direction {
            Direction::Up => level >= self.height,
            Direction::Down => level <= self.height,
        });
        self.height = level;
    }

    /// Reverses direction at the current height and records the segment
    /// that just ended.
    pub fn turn(&mut self) {
        self.index.add_segment(self.last_turn, self.height);
        self.last_turn = self.height;
        self.direction = match self.direction {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        };
    }

    /// Records the final segment without turning.
    pub fn finish(&mut self) {
        self.index.add_segment(self.last_turn, self.height);
        self.last_turn = self.height;
    }
}
