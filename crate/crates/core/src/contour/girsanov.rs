//! Change of measure from the contour without interaction to the contour
//! with interaction.
//!
//! Interaction births act as extra binary births and interaction deaths as
//! extra binary deaths, so a path of the non-interacting contour is
//! reweighted by `1 + g⁺ / λ` at each binary birth, by `1 + g⁻ / μ` at each
//! binary death, and by `exp(-∫ g⁺ dh)` over descents and `exp(-∫ g⁻ dh)`
//! over climbs. Here `g` is the interaction increment of the line being
//! explored.

use super::crossing::{ContourWalker, Direction};
use super::{ContourPath, TurnKind};
use crate::error::{Error, Result};
use crate::interaction::{IncrementTable, InteractionFunction};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GirsanovTerms {
    /// Sum of the log jump factors.
    pub log_jumps: f64,
    /// The integrated extra intensity.
    pub compensator: f64,
    pub binary_births: u64,
    pub binary_deaths: u64,
}

impl GirsanovTerms {
    pub fn log_weight(&self) -> f64 {
        self.log_jumps - self.compensator
    }

    pub fn weight(&self) -> f64 {
        self.log_weight().exp()
    }
}

/// Replays a contour simulated without interaction and returns the terms of
/// its weight under `f` at size `n` with binary rate `c N`.
pub fn girsanov_weight(contour: &ContourPath, f: &InteractionFunction, n: u64, c: f64) -> Result<GirsanovTerms> {
    if f.derivative_bound().is_none() {
        return Err(Error::UnboundedDerivative);
    }
    if !(c > 0.0) || n == 0 {
        return Err(Error::Domain("reweighting needs c > 0 and N >= 1".into()));
    }
    let rate = c * n as f64;
    let mut table = IncrementTable::scaled(f, n);
    let top = contour.ceiling.unwrap_or_else(|| contour.path.max_value());
    let mut walker = ContourWalker::new(top.max(f64::MIN_POSITIVE));
    let mut terms = GirsanovTerms {
        log_jumps: 0.0,
        compensator: 0.0,
        binary_births: 0,
        binary_deaths: 0,
    };
    let mut keys = Vec::new();
    let v = contour.path.values();
    for (k, &target) in v.iter().enumerate().skip(1) {
        let h = walker.height();
        let up = walker.direction() == Direction::Up;
        if target != h && (target > h) != up {
            return Err(Error::MalformedForest(format!(
                "contour changes direction at point {k} without a turn"
            )));
        }
        // integrate the extra rate piece by piece between keys
        let mut count = walker.count();
        let mut at = h;
        walker.index().keys_between(h.min(target), h.max(target), &mut keys);
        if !up {
            keys.reverse();
        }
        for &(key, d) in keys.iter().chain(std::iter::once(&(target, 0))) {
            let g = table.increment((count.max(0) / 2) as u64 + 1);
            let extra = if up { (-g).max(0.0) } else { g.max(0.0) };
            terms.compensator += extra * (key - at).abs();
            at = key;
            count += if up { d as i64 } else { -(d as i64) };
        }
        walker.move_to(target);
        let Some(kind) = contour.turns.get(k - 1) else {
            break;
        };
        let g = table.increment(walker.lines_left() + 1);
        match kind {
            TurnKind::BinaryBirth => {
                terms.binary_births += 1;
                terms.log_jumps += (g.max(0.0) / rate).ln_1p();
            }
            TurnKind::BinaryDeath => {
                terms.binary_deaths += 1;
                terms.log_jumps += ((-g).max(0.0) / rate).ln_1p();
            }
            TurnKind::InteractionBirth | TurnKind::InteractionDeath => {
                return Err(Error::Domain(
                    "reweighting needs a contour simulated without interaction".into(),
                ));
            }
            _ => {}
        }
        walker.turn();
    }
    Ok(terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::{direct_contour, ContourParams};
    use crate::laws::ModelLaws;
    use crate::measure::JumpMeasure;
    use crate::stats::moment_stats;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn linear_interaction_has_closed_form_weight() {
        let n = 10;
        let laws = ModelLaws::build(&JumpMeasure::atoms(&[(2.0, 1.0)]).unwrap(), n, 1.0).unwrap();
        let mut p = ContourParams::new(&laws, &InteractionFunction::zero(), 2.0, 1.0, u64::MAX).unwrap();
        let d = direct_contour(&mut p, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let f = InteractionFunction::linear(0.5).unwrap();
        let w = girsanov_weight(&d.contour, &f, n, 1.0).unwrap();
        let births = d.contour.turns.iter().filter(|k| **k == TurnKind::BinaryBirth).count() as u64;
        assert_eq!(w.binary_births, births);
        let falling = d.contour.path.horizon() - d.contour.time_rising();
        let g = 0.5; // N (f((i + 1) / N) - f(i / N))
        assert!((w.compensator - g * falling * p.slope).abs() < 1e-9 * (1.0 + w.compensator));
        let expected = births as f64 * (g / 10.0f64).ln_1p();
        assert!((w.log_jumps - expected).abs() < 1e-9);
    }

    #[test]
    fn zero_interaction_has_unit_weight() {
        let laws = ModelLaws::build(&JumpMeasure::atoms(&[(2.0, 1.0)]).unwrap(), 8, 1.0).unwrap();
        let mut p = ContourParams::new(&laws, &InteractionFunction::zero(), 1.0, 2.0, u64::MAX).unwrap();
        let d = direct_contour(&mut p, &mut ChaCha8Rng::seed_from_u64(10)).unwrap();
        let w = girsanov_weight(&d.contour, &InteractionFunction::zero(), 8, 1.0).unwrap();
        assert_eq!(w.weight(), 1.0);
    }

    #[test]
    fn rejects_unbounded_derivative() {
        let laws = ModelLaws::build(&JumpMeasure::atoms(&[(2.0, 1.0)]).unwrap(), 4, 1.0).unwrap();
        let mut p = ContourParams::new(&laws, &InteractionFunction::zero(), 1.0, 0.5, u64::MAX).unwrap();
        let d = direct_contour(&mut p, &mut ChaCha8Rng::seed_from_u64(12)).unwrap();
        let f = InteractionFunction::logistic(1.0, 1.0).unwrap();
        assert!(matches!(
            girsanov_weight(&d.contour, &f, 4, 1.0),
            Err(Error::UnboundedDerivative)
        ));
    }

    #[test]
    fn weights_average_to_one() {
        let n = 10;
        let laws = ModelLaws::build(&JumpMeasure::atoms(&[(2.0, 1.0)]).unwrap(), n, 1.0).unwrap();
        let mut p = ContourParams::new(&laws, &InteractionFunction::zero(), 2.0, 1.0, u64::MAX).unwrap();
        let f = InteractionFunction::clipped_logistic(1.0, 1.0, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let ws: Vec<f64> = (0..4000)
            .map(|_| {
                let d = direct_contour(&mut p, &mut rng).unwrap();
                girsanov_weight(&d.contour, &f, n, 1.0).unwrap().weight()
            })
            .collect();
        let m = moment_stats(&ws, 1.5).unwrap();
        assert!((m.mean - 1.0).abs() <= 4.0 * m.mean_se, "{} ± {}", m.mean, m.mean_se);
    }
}
