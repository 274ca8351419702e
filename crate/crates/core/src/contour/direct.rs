//! Simulation of the height process without building a forest.
//!
//! The contour moves at speed `slope`. While it climbs a line it turns down
//! at the death rate of that line; while it walks down a line it turns up at
//! the birth rate. Both rates are per unit of height and depend on the
//! number of lines to the left at the current height, read off the
//! crossings of the path explored so far. A litter of `k` children is
//! explored by reflecting `k - 1` more times at the birth level.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::crossing::{ContourWalker, Direction};
use super::{ContourPath, TurnKind};
use crate::error::{Error, Result};
use crate::interaction::{IncrementTable, InteractionFunction};
use crate::laws::{ModelConstants, ModelLaws, OffspringLaw};
use crate::path::{PathKind, PiecewisePath};
use crate::population::DEFAULT_EVENT_BUDGET;

#[derive(Debug, Clone)]
pub struct ContourParams {
    pub constants: ModelConstants,
    /// Children per litter of the single-jump component, on `{1, 2, ...}`.
    pub litter: Option<OffspringLaw>,
    pub table: IncrementTable,
    pub slope: f64,
    /// Reflection level.
    pub ceiling: f64,
    /// Contour time at which to stop.
    pub s_max: f64,
    /// Number of trees to explore before stopping.
    pub trees: u64,
    pub budget: u64,
}

impl ContourParams {
    /// Contour of the rescaled model at size `N` with speed `2 a_N`.
    pub fn new(laws: &ModelLaws, f: &InteractionFunction, ceiling: f64, s_max: f64, trees: u64) -> Result<Self> {
        if !(ceiling > 0.0 && ceiling.is_finite()) {
            return Err(Error::Domain(format!(
                "reflection level must be positive, got {ceiling}"
            )));
        }
        if !(s_max > 0.0) {
            return Err(Error::Domain(format!("contour time must be positive, got {s_max}")));
        }
        let k = laws.constants;
        Ok(Self {
            constants: k,
            litter: laws.lambda1.clone(),
            table: IncrementTable::scaled(f, k.n),
            slope: 2.0 * k.a_n,
            ceiling,
            s_max,
            trees,
            budget: DEFAULT_EVENT_BUDGET,
        })
    }

    fn natural_death_rate(&self) -> f64 {
        self.constants.d1 * self.constants.q0_1
    }
}

#[derive(Debug, Clone)]
pub struct DirectContour {
    pub contour: ContourPath,
    pub trees_completed: u64,
    pub events: u64,
    /// True if the run stopped at `s_max` rather than after the last tree.
    pub truncated: bool,
}

/// Simulates the reflected height process until `s_max` or until
/// `params.trees` trees are explored, whichever comes first.
pub fn direct_contour<R: Rng + ?Sized>(params: &mut ContourParams, rng: &mut R) -> Result<DirectContour> {
    let cn = params.constants.binary_rate();
    let nat_death = params.natural_death_rate();
    let nat_birth = if params.litter.is_some() {
        params.constants.gamma1
    } else {
        0.0
    };
    let slope = params.slope;
    let ceiling = params.ceiling;

    let mut walker = ContourWalker::new(ceiling);
    let mut path = PiecewisePath::new(PathKind::Linear, 0.0);
    let mut turns = Vec::new();
    // (level, siblings still to explore)
    let mut litters: Vec<(f64, u64)> = Vec::new();
    let mut s = 0.0;
    let mut trees = 0u64;
    let mut events = 0u64;
    let mut candidates = 0u64;
    let mut truncated = false;
    // Running bounds of the interaction rates over the positions reachable so
    // far; a position is at most one more than half the completed segments.
    let mut bound = RateBound::default();

    if params.trees == 0 {
        path.close(0.0);
        return Ok(DirectContour {
            contour: ContourPath {
                path,
                turns,
                slope,
                ceiling: Some(ceiling),
            },
            trees_completed: 0,
            events: 0,
            truncated: false,
        });
    }

    loop {
        bound.extend(&mut params.table, turns.len() as u64 / 2 + 2);
        let h = walker.height();
        let up = walker.direction() == Direction::Up;
        let (base, bar, boundary) = if up {
            (cn + nat_death, cn + nat_death + bound.minus, ceiling)
        } else {
            let floor = litters.last().map_or(0.0, |l| l.0);
            (cn + nat_birth, cn + nat_birth + bound.plus, floor)
        };
        let to_boundary = (boundary - h).abs();
        let e: f64 = Exp1.sample(rng);
        let to_event = e / bar;
        let remaining = (params.s_max - s) * slope;
        if to_event.min(to_boundary) >= remaining {
            let target = if up { h + remaining } else { h - remaining };
            walker.move_to(target.clamp(0.0, ceiling));
            s = params.s_max;
            truncated = true;
            break;
        }
        if to_event < to_boundary {
            candidates += 1;
            if candidates > params.budget {
                return Err(Error::EventBudget {
                    budget: params.budget,
                    time: s,
                });
            }
            s += to_event / slope;
            let level = if up { h + to_event } else { h - to_event };
            walker.move_to(level);
            let g = params.table.increment(walker.lines_left() + 1);
            let rate = base + if up { (-g).max(0.0) } else { g.max(0.0) };
            let u = rng.random::<f64>() * bar;
            if u >= rate {
                continue;
            }
            events += 1;
            let kind = if up {
                if u < cn {
                    TurnKind::BinaryDeath
                } else if u < cn + nat_death {
                    TurnKind::NaturalDeath
                } else {
                    TurnKind::InteractionDeath
                }
            } else if u < cn {
                TurnKind::BinaryBirth
            } else if u < cn + nat_birth {
                let litter = params.litter.as_ref().expect("litter law present").sample(rng);
                if litter > 1 {
                    litters.push((level, litter - 1));
                }
                TurnKind::NaturalBirth
            } else {
                TurnKind::InteractionBirth
            };
            path.push(s, level);
            turns.push(kind);
            walker.turn();
            continue;
        }
        s += to_boundary / slope;
        walker.move_to(boundary);
        if up {
            path.push(s, boundary);
            turns.push(TurnKind::Ceiling);
            walker.turn();
        } else if let Some(top) = litters.last_mut() {
            top.1 -= 1;
            if top.1 == 0 {
                litters.pop();
            }
            path.push(s, boundary);
            turns.push(TurnKind::Sibling);
            walker.turn();
        } else {
            trees += 1;
            if trees >= params.trees {
                walker.finish();
                break;
            }
            path.push(s, 0.0);
            turns.push(TurnKind::Root);
            walker.turn();
        }
    }
    path.push(s, walker.height());
    path.close(s);
    Ok(DirectContour {
        contour: ContourPath {
            path,
            turns,
            slope,
            ceiling: Some(ceiling),
        },
        trees_completed: trees,
        events,
        truncated,
    })
}

#[derive(Debug, Default)]
struct RateBound {
    scanned: u64,
    plus: f64,
    minus: f64,
}

impl RateBound {
    fn extend(&mut self, table: &mut IncrementTable, upto: u64) {
        while self.scanned < upto {
            self.scanned += 1;
            let g = table.increment(self.scanned);
            self.plus = self.plus.max(g);
            self.minus = self.minus.max(-g);
        }
    }
}
