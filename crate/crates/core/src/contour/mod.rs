//! Height processes of ordered forests.
//!
//! A contour climbs each line from its birth to its death at constant speed,
//! then walks back down, climbing every child line when it reaches that
//! child's birth time. Children are visited latest-born first, which is left
//! to right in the forest. Local time at level `t` counts pairs of crossings,
//! and with the rescaling `(c / 2) L(t)` equals the population at time `t`.

mod crossing;
mod direct;
mod forest;
mod girsanov;

pub use crossing::{ContourWalker, CrossingIndex, Direction};
pub use direct::{direct_contour, ContourParams, DirectContour};
pub use forest::{build_planar_forest, ForestParams, Individual, PlanarForest};
pub use girsanov::{girsanov_weight, GirsanovTerms};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::{PathKind, PiecewisePath};

/// What happened at a turning point of a contour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnKind {
    /// End of a line read from a forest.
    Death,
    /// Birth of a child read from a forest.
    Birth,
    /// Return to 0 between trees.
    Root,
    /// Reflection at the horizon.
    Ceiling,
    /// Binary death clock.
    BinaryDeath,
    /// Death from the single-jump component.
    NaturalDeath,
    InteractionDeath,
    /// Binary birth clock.
    BinaryBirth,
    /// Birth of a litter from the single-jump component.
    NaturalBirth,
    InteractionBirth,
    /// Climb into the next sibling of a litter.
    Sibling,
}

/// A contour as a linear path through its turning points. `turns[k]` is the
/// kind of the turning point `k + 1`; the first point is the start at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourPath {
    pub path: PiecewisePath,
    pub turns: Vec<TurnKind>,
    /// Speed of travel in height per unit time.
    pub slope: f64,
    /// Height at which the contour reflects, if any.
    pub ceiling: Option<f64>,
}

impl ContourPath {
    /// Total time spent in direction `Up`.
    pub fn time_rising(&self) -> f64 {
        let t = self.path.times();
        let v = self.path.values();
        (1..t.len()).filter(|&k| v[k] > v[k - 1]).map(|k| t[k] - t[k - 1]).sum()
    }

    /// Number of strict local maxima and strict local minima above 0.
    pub fn extrema(&self) -> (usize, usize) {
        let v = self.path.values();
        let mut maxima = 0;
        let mut minima = 0;
        for k in 1..v.len().saturating_sub(1) {
            if v[k] > v[k - 1] && v[k] > v[k + 1] {
                maxima += 1;
            }
            if v[k] < v[k - 1] && v[k] < v[k + 1] && v[k] > 0.0 {
                minima += 1;
            }
        }
        (maxima, minima)
    }

    /// Time spent at or below `level`.
    pub fn occupation_below(&self, level: f64) -> f64 {
        let t = self.path.times();
        let v = self.path.values();
        let mut total = 0.0;
        for k in 1..t.len() {
            let (a, b) = (v[k - 1], v[k]);
            let dt = t[k] - t[k - 1];
            let (lo, hi) = (a.min(b), a.max(b));
            total += if hi <= level {
                dt
            } else if lo >= level {
                0.0
            } else {
                dt * (level - lo) / (hi - lo)
            };
        }
        total
    }
}

/// Appends turning points as a contour is traced.
struct Tracer {
    path: PiecewisePath,
    turns: Vec<TurnKind>,
    slope: f64,
    s: f64,
    h: f64,
    rising: bool,
}

impl Tracer {
    fn new(slope: f64) -> Self {
        Self {
            path: PiecewisePath::new(PathKind::Linear, 0.0),
            turns: Vec::new(),
            slope,
            s: 0.0,
            h: 0.0,
            rising: true,
        }
    }

    fn go(&mut self, to: f64, kind_if_turn: TurnKind) {
        if to == self.h {
            return;
        }
        let up = to > self.h;
        if up != self.rising && self.s > 0.0 {
            self.path.push(self.s, self.h);
            self.turns.push(kind_if_turn);
        }
        self.rising = up;
        self.s += (to - self.h).abs() / self.slope;
        self.h = to;
    }

    /// Forces a turning point at the current height even when the contour
    /// leaves in the direction it arrived from (a zero-length excursion).
    fn bounce(&mut self, kind: TurnKind) {
        self.path.push(self.s, self.h);
        self.turns.push(kind);
        self.rising = !self.rising;
    }

    fn finish(mut self, ceiling: Option<f64>) -> ContourPath {
        if self.s > 0.0 {
            self.path.push(self.s, self.h);
        }
        self.path.close(self.s);
        ContourPath {
            path: self.path,
            turns: self.turns,
            slope: self.slope,
            ceiling,
        }
    }
}

/// Traces the contour of a forest at speed `slope`, tree after tree.
pub fn contour_from_forest(forest: &PlanarForest, slope: f64) -> Result<ContourPath> {
    if !(slope > 0.0 && slope.is_finite()) {
        return Err(Error::Domain(format!("contour slope must be positive, got {slope}")));
    }
    forest.validate()?;
    let mut tr = Tracer::new(slope);
    // (individual, index of the next child to visit)
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for &root in &forest.roots {
        let first = tr.s == 0.0 && tr.h == 0.0;
        if !first {
            tr.bounce(TurnKind::Root);
        }
        tr.go(forest.individuals[root].death, TurnKind::Root);
        stack.push((root, 0));
        while let Some(&mut (id, ref mut next)) = stack.last_mut() {
            let ind = &forest.individuals[id];
            if *next < ind.children.len() {
                let child = &forest.individuals[ind.children[*next]];
                *next += 1;
                tr.go(child.birth, TurnKind::Death);
                if tr.h == child.birth && !tr.rising {
                    tr.bounce(TurnKind::Birth);
                }
                tr.go(child.death, TurnKind::Birth);
                stack.push((child.id, 0));
            } else {
                tr.go(ind.birth, TurnKind::Death);
                stack.pop();
            }
        }
    }
    Ok(tr.finish(Some(forest.horizon)))
}

/// Local time of a contour at a list of levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalTimeProfile {
    pub levels: Vec<f64>,
    /// Crossing counts; each level was nudged one ulp down if it coincided
    /// with a turning point.
    pub crossings: Vec<u64>,
    pub nudged: Vec<bool>,
    /// `2 floor(crossings / 2) / (c N)`.
    pub local_time: Vec<f64>,
}

impl LocalTimeProfile {
    /// `(c / 2) L(t)` at each level, the population it encodes.
    pub fn population(&self, c: f64) -> Vec<f64> {
        self.local_time.iter().map(|l| 0.5 * c * l).collect()
    }
}

/// Counts crossings of each level by the contour and converts them to local
/// time with the normalisation of the rescaled model at size `n`.
pub fn local_time_profile(contour: &ContourPath, levels: &[f64], c: f64, n: u64) -> Result<LocalTimeProfile> {
    if !(c > 0.0) || n == 0 {
        return Err(Error::Domain("local time needs c > 0 and N >= 1".into()));
    }
    let mut index = CrossingIndex::new();
    let v = contour.path.values();
    for w in v.windows(2) {
        index.add_segment(w[0], w[1]);
    }
    let mut crossings = Vec::with_capacity(levels.len());
    let mut nudged = Vec::with_capacity(levels.len());
    for &t in levels {
        let on_key = index.delta(t) != 0 || v.contains(&t);
        let level = if on_key { t.next_down() } else { t };
        nudged.push(on_key);
        crossings.push(index.count_at(level).max(0) as u64);
    }
    let scale = 2.0 / (c * n as f64);
    let local_time = crossings.iter().map(|&k| scale * (k / 2) as f64).collect();
    Ok(LocalTimeProfile {
        levels: levels.to_vec(),
        crossings,
        nudged,
        local_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::{IncrementTable, InteractionFunction};
    use crate::laws::OffspringLaw;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ind(id: usize, parent: Option<usize>, birth: f64, death: f64, children: Vec<usize>) -> Individual {
        Individual {
            id,
            parent,
            birth,
            death,
            children,
        }
    }

    #[test]
    fn single_line_is_a_tent() {
        let forest = PlanarForest {
            individuals: vec![ind(0, None, 0.0, 1.0, vec![])],
            roots: vec![0],
            horizon: 5.0,
        };
        let c = contour_from_forest(&forest, 2.0).unwrap();
        assert_eq!(c.path.times(), &[0.0, 0.5, 1.0]);
        assert_eq!(c.path.values(), &[0.0, 1.0, 0.0]);
        assert_eq!(c.turns, vec![TurnKind::Death]);
        assert_eq!(c.extrema(), (1, 0));
    }

    #[test]
    fn two_trees_return_to_zero_twice() {
        let forest = PlanarForest {
            individuals: vec![
                ind(0, None, 0.0, 2.0, vec![2]),
                ind(1, None, 0.0, 1.0, vec![]),
                ind(2, Some(0), 0.5, 1.5, vec![]),
            ],
            roots: vec![0, 1],
            horizon: 5.0,
        };
        let c = contour_from_forest(&forest, 1.0).unwrap();
        assert_eq!(c.path.values(), &[0.0, 2.0, 0.5, 1.5, 0.0, 1.0, 0.0]);
        assert_eq!(c.path.times(), &[0.0, 2.0, 3.5, 4.5, 6.0, 7.0, 8.0]);
        let zeros = c.path.values()[1..].iter().filter(|&&v| v == 0.0).count();
        assert_eq!(zeros, 2);
        assert_eq!(c.extrema(), (3, 1));
        assert!((c.path.horizon() - 2.0 * forest.total_length()).abs() < 1e-12);
    }

    #[test]
    fn litters_give_repeated_minima() {
        let forest = PlanarForest {
            individuals: vec![
                ind(0, None, 0.0, 2.0, vec![1, 2, 3]),
                ind(1, Some(0), 1.0, 1.5, vec![]),
                ind(2, Some(0), 1.0, 1.2, vec![]),
                ind(3, Some(0), 0.5, 0.7, vec![]),
            ],
            roots: vec![0],
            horizon: 5.0,
        };
        let c = contour_from_forest(&forest, 1.0).unwrap();
        assert_eq!(c.path.values(), &[0.0, 2.0, 1.0, 1.5, 1.0, 1.2, 0.5, 0.7, 0.0]);
        let (maxima, _) = c.extrema();
        assert_eq!(maxima, 4);
        let births = c.turns.iter().filter(|k| **k == TurnKind::Birth).count();
        assert_eq!(births, 3);
    }

    #[test]
    fn crossings_match_alive_counts() {
        let q = OffspringLaw::new(vec![0.7, 0.2, 0.1], 1, 0.0).unwrap();
        let f = InteractionFunction::logistic(1.0, 1.0).unwrap();
        let mut p = ForestParams {
            death_rate: 1.0,
            birth_rate: 0.8,
            offspring: q,
            table: IncrementTable::scaled(&f, 4),
            budget: 1_000_000,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let levels: Vec<f64> = (1..40).map(|k| k as f64 * 0.05).collect();
        for _ in 0..200 {
            let forest = build_planar_forest(3, &mut p, 2.0, &mut rng).unwrap();
            let c = contour_from_forest(&forest, 1.7).unwrap();
            let prof = local_time_profile(&c, &levels, 1.0, 1).unwrap();
            for (k, &t) in levels.iter().enumerate() {
                assert_eq!(prof.crossings[k] % 2, 0);
                assert_eq!(prof.crossings[k] / 2, forest.alive_at(t), "level {t}");
            }
            let (maxima, minima) = c.extrema();
            assert_eq!(maxima, forest.len());
            assert_eq!(minima, forest.len() - forest.roots.len());
            assert!((c.path.horizon() - 2.0 * forest.total_length() / 1.7).abs() < 1e-9);
        }
    }

    #[test]
    fn occupation_matches_integrated_crossings() {
        let forest = PlanarForest {
            individuals: vec![
                ind(0, None, 0.0, 2.0, vec![2]),
                ind(1, None, 0.0, 1.0, vec![]),
                ind(2, Some(0), 0.5, 1.5, vec![]),
            ],
            roots: vec![0, 1],
            horizon: 5.0,
        };
        let c = contour_from_forest(&forest, 2.0).unwrap();
        // crossings: 4 below 0.5, 6 in (0.5, 1), 4 in (1, 1.5), 2 above
        let expected = (4.0 * 0.5 + 6.0 * 0.5 + 4.0 * 0.2) / 2.0;
        assert!((c.occupation_below(1.2) - expected).abs() < 1e-12);
    }
}
