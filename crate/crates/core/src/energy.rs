//! Electrical energy accounting.
//!
//! The individual load powers are not measured quantities. They are split so
//! that [`DutyCycle::default`] averages to 3.7 V x 0.5 A.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::locomotion::GaitMode;
use crate::mission::{Environment, EventLog};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatterySpec {
    /// V
    pub voltage: f64,
    /// mAh
    pub capacity_mah: f64,
    pub max_c_rate: f64,
}

impl Default for BatterySpec {
    fn default() -> Self {
        Self {
            voltage: 3.7,
            capacity_mah: 1000.0,
            max_c_rate: 20.0,
        }
    }
}

impl BatterySpec {
    pub fn validate(&self) -> Result<()> {
        if [self.voltage, self.capacity_mah, self.max_c_rate]
            .iter()
            .all(|v| *v > 0.0 && v.is_finite())
        {
            Ok(())
        } else {
            Err(Error::Config(format!("battery values must be positive: {self:?}")))
        }
    }

    /// J
    pub fn energy_capacity(&self) -> f64 {
        self.voltage * self.capacity_mah * 3.6
    }

    /// mA
    pub fn max_current(&self) -> f64 {
        self.capacity_mah * self.max_c_rate
    }
}

/// Electrical power per load, W.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerModel {
    /// Electronics, always on.
    pub baseline_power: f64,
    /// While the slider is moving.
    pub actuator_power: f64,
    pub crawl_power: f64,
    pub swim_power: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        Self {
            baseline_power: 1.41,
            actuator_power: 0.12,
            crawl_power: 0.5,
            swim_power: 0.5,
        }
    }
}

/// Fractions of time each intermittent load is on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DutyCycle {
    pub crawl: f64,
    pub swim: f64,
    pub morph: f64,
}

impl Default for DutyCycle {
    fn default() -> Self {
        Self {
            crawl: 0.5,
            swim: 0.35,
            morph: 0.125,
        }
    }
}

/// Which loads draw power over an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadState {
    pub environment: Environment,
    pub gait: GaitMode,
    pub actuator_on: bool,
}

impl PowerModel {
    pub fn validate(&self) -> Result<()> {
        let all = [self.baseline_power, self.actuator_power, self.crawl_power, self.swim_power];
        if all.iter().all(|p| *p >= 0.0 && p.is_finite()) {
            Ok(())
        } else {
            Err(Error::Config(format!("powers must be non-negative: {self:?}")))
        }
    }

    pub fn average_power(&self, duty: &DutyCycle) -> f64 {
        self.baseline_power
            + duty.crawl * self.crawl_power
            + duty.swim * self.swim_power
            + duty.morph * self.actuator_power
    }

    /// Per-load power for `load`: (baseline, crawl, swim, actuator), W.
    pub fn split(&self, load: &LoadState) -> [f64; 4] {
        let gait = |m| if load.gait == m { 1.0 } else { 0.0 };
        [
            self.baseline_power,
            gait(GaitMode::Crawl) * self.crawl_power,
            gait(GaitMode::Swim) * self.swim_power,
            if load.actuator_on { self.actuator_power } else { 0.0 },
        ]
    }
}

/// Hours until `spec` is exhausted at `avg_current_ma`.
pub fn battery_runtime(spec: &BatterySpec, avg_current_ma: f64) -> Result<f64> {
    spec.validate()?;
    if !(avg_current_ma > 0.0) || avg_current_ma.is_nan() {
        return Err(Error::domain("average current (mA)", avg_current_ma, f64::MIN_POSITIVE, spec.max_current()));
    }
    if avg_current_ma > spec.max_current() {
        return Err(Error::Overload {
            current_ma: avg_current_ma,
            limit_ma: spec.max_current(),
        });
    }
    Ok(spec.capacity_mah / avg_current_ma)
}

/// Actuator energy for one compress-then-expand cycle, J.
pub fn morph_cycle_energy(model: &PowerModel, t_compress: f64, t_expand: f64) -> Result<f64> {
    let tc = check_range("compression time (s)", t_compress, 0.0, f64::MAX)?;
    let te = check_range("expansion time (s)", t_expand, 0.0, f64::MAX)?;
    Ok(model.actuator_power * (tc + te))
}

/// Energy split by load and by environment. Both splits sum to `total`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub baseline: f64,
    pub crawl: f64,
    pub swim: f64,
    pub actuator: f64,
    pub by_environment: BTreeMap<Environment, f64>,
    pub total: f64,
}

impl EnergyBreakdown {
    /// Adds `duration` seconds at `load`.
    pub fn accumulate(&mut self, model: &PowerModel, load: &LoadState, duration: f64) {
        let [b, c, s, a] = model.split(load).map(|p| p * duration);
        self.baseline += b;
        self.crawl += c;
        self.swim += s;
        self.actuator += a;
        let sum = b + c + s + a;
        *self.by_environment.entry(load.environment).or_insert(0.0) += sum;
        self.total += sum;
    }

    pub fn load_sum(&self) -> f64 {
        self.baseline + self.crawl + self.swim + self.actuator
    }

    pub fn environment_sum(&self) -> f64 {
        self.by_environment.values().sum()
    }
}

/// Integrates load power between consecutive log entries.
///
/// Each entry's snapshot carries the load that holds until the next entry.
pub fn mission_energy(log: &EventLog, model: &PowerModel) -> EnergyBreakdown {
    let mut out = EnergyBreakdown::default();
    for w in log.entries.windows(2) {
        let dt = w[1].time - w[0].time;
        if dt > 0.0 {
            out.accumulate(model, &w[0].snapshot.load, dt);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn runtime_examples() {
        let b = BatterySpec::default();
        assert_abs_diff_eq!(battery_runtime(&b, 500.0).unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(battery_runtime(&b, 1000.0).unwrap(), 1.0, epsilon = 1e-12);
        assert!(matches!(battery_runtime(&b, 20001.0), Err(Error::Overload { .. })));
        assert!(battery_runtime(&b, 20000.0).is_ok());
        assert!(battery_runtime(&b, 0.0).is_err());
    }

    #[test]
    fn runtime_matches_capacity() {
        let b = BatterySpec::default();
        let h = battery_runtime(&b, 500.0).unwrap();
        assert_abs_diff_eq!(h * 3600.0 * 3.7 * 0.5, b.energy_capacity(), epsilon = 1e-9);
        assert_abs_diff_eq!(b.energy_capacity(), 13_320.0, epsilon = 1e-9);
    }

    #[test]
    fn morph_energy_examples() {
        let p = PowerModel::default();
        assert_abs_diff_eq!(morph_cycle_energy(&p, 10.0, 45.0).unwrap(), 6.6, epsilon = 1e-12);
        assert_eq!(morph_cycle_energy(&p, 0.0, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(morph_cycle_energy(&p, 0.0, 45.0).unwrap(), 5.4, epsilon = 1e-12);
        assert!(morph_cycle_energy(&p, -1.0, 45.0).is_err());
    }

    #[test]
    fn representative_average_is_half_an_amp() {
        let p = PowerModel::default();
        assert_abs_diff_eq!(p.average_power(&DutyCycle::default()), 3.7 * 0.5, epsilon = 1e-12);
        // two hours at that average fits the pack
        assert!(p.average_power(&DutyCycle::default()) * 7200.0 <= BatterySpec::default().energy_capacity() + 1e-9);
    }

    #[test]
    fn empty_log_is_zero() {
        let e = mission_energy(&EventLog::default(), &PowerModel::default());
        assert_eq!(e, EnergyBreakdown::default());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn morph_energy_is_linear(a in 0.0f64..100.0, b in 0.0f64..100.0, c in 0.0f64..100.0) {
                let p = PowerModel::default();
                let lhs = morph_cycle_energy(&p, a + b, c).unwrap();
                let rhs = morph_cycle_energy(&p, a, c).unwrap() + morph_cycle_energy(&p, b, 0.0).unwrap();
                prop_assert!((lhs - rhs).abs() < 1e-9);
                let lhs = morph_cycle_energy(&p, c, a + b).unwrap();
                let rhs = morph_cycle_energy(&p, c, a).unwrap() + morph_cycle_energy(&p, 0.0, b).unwrap();
                prop_assert!((lhs - rhs).abs() < 1e-9);
            }

            #[test]
            fn breakdown_is_additive(segs in proptest::collection::vec((0usize..6, 0usize..3, any::<bool>(), 0.0f64..50.0), 0..40)) {
                let p = PowerModel::default();
                let mut e = EnergyBreakdown::default();
                for (env, gait, on, dt) in segs {
                    let load = LoadState {
                        environment: Environment::ALL[env],
                        gait: [GaitMode::Crawl, GaitMode::Swim, GaitMode::Halt][gait],
                        actuator_on: on,
                    };
                    e.accumulate(&p, &load, dt);
                }
                prop_assert!((e.load_sum() - e.total).abs() < 1e-9);
                prop_assert!((e.environment_sum() - e.total).abs() < 1e-9);
            }
        }
    }
}
