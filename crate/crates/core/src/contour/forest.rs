//! Ordered forests grown forward in time.
//!
//! Individuals alive at a given time are kept in left-to-right order.
//! Newborns are inserted immediately to the right of their mother, and an
//! individual with `ℒ` individuals to its left feels the interaction
//! increment `g(ℒ + 1) - g(ℒ)` as extra birth (positive part) or death
//! (negative part) rate.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interaction::{IncrementTable, InteractionSums};
use crate::laws::{ModelLaws, OffspringLaw};

/// One line of the forest. `children` are listed left to right, which is
/// latest-born first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub id: usize,
    pub parent: Option<usize>,
    pub birth: f64,
    pub death: f64,
    pub children: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarForest {
    pub individuals: Vec<Individual>,
    /// Roots, left to right.
    pub roots: Vec<usize>,
    /// Time at which surviving lines were cut.
    pub horizon: f64,
}

impl PlanarForest {
    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    /// Number of individuals alive at `t`, i.e. with `birth <= t < death`.
    pub fn alive_at(&self, t: f64) -> u64 {
        self.individuals.iter().filter(|i| i.birth <= t && t < i.death).count() as u64
    }

    /// Sum of all lifetimes.
    pub fn total_length(&self) -> f64 {
        self.individuals.iter().map(|i| i.death - i.birth).sum()
    }

    /// Checks ids, lifetimes, parent links and the left-to-right order of
    /// siblings.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::MalformedForest(m));
        let mut seen = vec![false; self.individuals.len()];
        for (k, ind) in self.individuals.iter().enumerate() {
            if ind.id != k {
                return bad(format!("individual at index {k} has id {}", ind.id));
            }
            if !(ind.birth < ind.death) {
                return bad(format!("individual {k} has birth {} >= death {}", ind.birth, ind.death));
            }
            let mut last_birth = f64::INFINITY;
            for &c in &ind.children {
                let child = self
                    .individuals
                    .get(c)
                    .ok_or_else(|| Error::MalformedForest(format!("unknown child {c}")))?;
                if child.parent != Some(k) {
                    return bad(format!("child {c} does not point back to {k}"));
                }
                if !(child.birth >= ind.birth && child.birth < ind.death) {
                    return bad(format!("child {c} born outside the lifetime of {k}"));
                }
                if child.birth > last_birth {
                    return bad(format!("children of {k} are not latest-born first"));
                }
                last_birth = child.birth;
                if std::mem::replace(&mut seen[c], true) {
                    return bad(format!("individual {c} listed twice"));
                }
            }
        }
        for &r in &self.roots {
            match self.individuals.get(r) {
                Some(ind) if ind.parent.is_none() => {
                    if std::mem::replace(&mut seen[r], true) {
                        return bad(format!("root {r} listed twice"));
                    }
                }
                _ => return bad(format!("root {r} is missing or has a parent")),
            }
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return bad(format!("individual {k} is unreachable"));
        }
        Ok(())
    }
}

/// Rates of the forward forest.
#[derive(Debug, Clone)]
pub struct ForestParams {
    /// Natural death rate of each individual.
    pub death_rate: f64,
    /// Rate of birth events of each individual.
    pub birth_rate: f64,
    /// Number of children per birth event (a law on `{1, 2, ...}`).
    pub offspring: OffspringLaw,
    /// Interaction increments by position.
    pub table: IncrementTable,
    pub budget: u64,
}

impl ForestParams {
    /// The forest of the rescaled model: deaths at `γ_0`, birth events at
    /// `γ_N`, one child with probability `cN / γ_N` and otherwise a
    /// reflection-law number of children.
    pub fn rescaled(laws: &ModelLaws, table: IncrementTable) -> Result<Self> {
        let k = laws.constants;
        let cn = k.binary_rate();
        let offspring = match &laws.lambda1 {
            Some(lambda) if k.gamma1 > 0.0 => {
                let len = lambda.max_value() as usize;
                let mut w = vec![0.0; len];
                w[0] += cn / k.gamma_n;
                for (j, p) in lambda.iter() {
                    w[j as usize - 1] += k.gamma1 / k.gamma_n * p;
                }
                OffspringLaw::new(w, 1, lambda.truncation_tail())?
            }
            _ => OffspringLaw::point(1),
        };
        Ok(Self {
            death_rate: k.gamma0,
            birth_rate: k.gamma_n,
            offspring,
            table,
            budget: crate::population::DEFAULT_EVENT_BUDGET,
        })
    }
}

/// Grows `m` ordered roots until `horizon`; lines still alive then are cut
/// at `horizon`.
pub fn build_planar_forest<R: Rng + ?Sized>(
    m: u64,
    params: &mut ForestParams,
    horizon: f64,
    rng: &mut R,
) -> Result<PlanarForest> {
    if params.offspring.support_offset() < 1 {
        return Err(Error::InvalidLaw("children per birth event must be at least 1".into()));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Domain(format!(
            "forest horizon must be positive and finite, got {horizon}"
        )));
    }
    let mut individuals: Vec<Individual> = (0..m as usize)
        .map(|id| Individual {
            id,
            parent: None,
            birth: 0.0,
            death: f64::NAN,
            children: Vec::new(),
        })
        .collect();
    let roots: Vec<usize> = (0..m as usize).collect();
    let mut alive = roots.clone();
    let table = &mut params.table;
    let mut sums = InteractionSums::from_count(table, m);
    let per_capita = params.death_rate + params.birth_rate;
    let mut t = 0.0;
    let mut events = 0u64;
    loop {
        let n = alive.len();
        let natural = per_capita * n as f64;
        let total = natural + sums.plus() + sums.minus();
        if !(total > 0.0) {
            break;
        }
        let e: f64 = Exp1.sample(rng);
        t += e / total;
        if t >= horizon {
            break;
        }
        events += 1;
        if events > params.budget {
            return Err(Error::EventBudget {
                budget: params.budget,
                time: t,
            });
        }
        let u = rng.random::<f64>() * total;
        if u < natural {
            let pos = ((u / per_capita) as usize).min(n - 1);
            if rng.random::<f64>() * per_capita < params.death_rate {
                individuals[alive[pos]].death = t;
                alive.remove(pos);
            } else {
                let j = params.offspring.sample(rng) as usize;
                give_birth(&mut individuals, &mut alive, pos, j, t);
            }
        } else {
            let birth = u < natural + sums.plus();
            let target = if birth { u - natural } else { u - natural - sums.plus() };
            let pos = pick_position(table, n, target, birth);
            if birth {
                give_birth(&mut individuals, &mut alive, pos, 1, t);
            } else {
                individuals[alive[pos]].death = t;
                alive.remove(pos);
            }
        }
        sums.set_hi(table, alive.len() as u64);
    }
    for &id in &alive {
        individuals[id].death = horizon;
    }
    Ok(PlanarForest {
        individuals,
        roots,
        horizon,
    })
}

fn give_birth(individuals: &mut Vec<Individual>, alive: &mut Vec<usize>, pos: usize, j: usize, t: f64) {
    let mother = alive[pos];
    let first = individuals.len();
    for c in 0..j {
        individuals.push(Individual {
            id: first + c,
            parent: Some(mother),
            birth: t,
            death: f64::NAN,
            children: Vec::new(),
        });
    }
    let block: Vec<usize> = (first..first + j).collect();
    alive.splice(pos + 1..pos + 1, block.iter().copied());
    individuals[mother].children.splice(0..0, block);
}

/// Index (0-based) of the individual whose positive (or negative) increment
/// share contains `target`.
fn pick_position(table: &mut IncrementTable, n: usize, target: f64, positive: bool) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for i in 1..=n {
        let d = table.increment(i as u64);
        let w = if positive { d.max(0.0) } else { (-d).max(0.0) };
        if w > 0.0 {
            acc += w;
            last = i - 1;
            if target < acc {
                return i - 1;
            }
        }
    }
    last
}
