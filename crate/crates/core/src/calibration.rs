//! Fits for the parameters the measurements leave open.
//!
//! Drag coefficients are bracketed and bisected against the simulator
//! itself: the residual is the simulated transit time minus the target, and
//! transit time grows with the coefficient. Gait advances are closed form.

use serde::{Deserialize, Serialize};

use crate::dynamics::{step, Contact, MorphDrive, VerticalParams, VerticalState};
use crate::error::{Error, Result};

pub const MAX_BISECTION_ITERATIONS: usize = 60;

/// Required shrink of the calibration bracket relative to its initial width.
pub const BRACKET_SHRINK: f64 = 1e-6;

/// Simulated-time cap for a single transit evaluation, s.
const TRANSIT_TIME_LIMIT: f64 = 3600.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub iterations: usize,
    /// Final sign-change bracket.
    pub bracket: (f64, f64),
}

/// Bisection on a sign change of `f` over `[lo, hi]`.
///
/// Stops once the bracket is no wider than `x_tol`, once `converged` accepts
/// the midpoint residual, or after `max_iter` halvings. The returned `x` is
/// the last midpoint.
pub fn bisect<F, C>(f: F, lo: f64, hi: f64, x_tol: f64, max_iter: usize, converged: C) -> Result<Root>
where
    F: Fn(f64) -> f64,
    C: Fn(f64) -> bool,
{
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let (mut fa, fb) = (f(a), f(b));
    if converged(fa) {
        return Ok(Root { x: a, iterations: 0, bracket: (a, a) });
    }
    if converged(fb) {
        return Ok(Root { x: b, iterations: 0, bracket: (b, b) });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NotMonotone(format!(
            "no sign change over [{a}, {b}]: f = {fa}, {fb}"
        )));
    }
    let mut mid = 0.5 * (a + b);
    for i in 1..=max_iter {
        mid = 0.5 * (a + b);
        let fm = f(mid);
        if converged(fm) {
            return Ok(Root { x: mid, iterations: i, bracket: (a, b) });
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
        if b - a <= x_tol {
            return Ok(Root { x: 0.5 * (a + b), iterations: i, bracket: (a, b) });
        }
    }
    Ok(Root { x: mid, iterations: max_iter, bracket: (a, b) })
}

/// Which coefficient a transit exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitDirection {
    /// Compressed body released at rest just under the surface, falls to the floor.
    Descend,
    /// Expanded body released from the floor, rises to the surface.
    Ascend,
}

/// Time for a constant-configuration body to cross `distance` cm of water
/// with the given drag coefficient, s.
pub fn transit_time(
    direction: TransitDirection,
    distance: f64,
    coefficient: f64,
    base: &VerticalParams,
    dt: f64,
) -> Result<f64> {
    let mut p = *base;
    p.floor_depth = -distance;
    let (state, goal) = match direction {
        TransitDirection::Descend => {
            p.drag.cd_descend = coefficient;
            let s = VerticalState::in_column(&p, p.morphology.compressed(), 0.0)?;
            (s, Contact::OnFloor)
        }
        TransitDirection::Ascend => {
            p.drag.cd_ascend = coefficient;
            let s = VerticalState::on_floor(&p, p.morphology.expanded())?;
            (s, Contact::AtSurface)
        }
    };
    p.validate()?;
    let net = state.hydrostatic_net();
    let wrong_sign = match direction {
        TransitDirection::Descend => net >= 0.0,
        TransitDirection::Ascend => net <= 0.0,
    };
    if wrong_sign {
        return Err(Error::Config(format!(
            "{direction:?} transit needs the opposite buoyancy; net force is {net} N"
        )));
    }
    let mut s = state;
    s.drive = MorphDrive::Hold;
    let max_steps = (TRANSIT_TIME_LIMIT / dt) as u64;
    while s.step < max_steps {
        s = step(&s, &p, dt)?;
        if s.contact == goal {
            return Ok(s.contact_since);
        }
    }
    Ok(f64::INFINITY)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DragCalibration {
    pub direction: TransitDirection,
    pub coefficient: f64,
    /// Transit time re-simulated at `coefficient`, s.
    pub achieved_time: f64,
    pub target_time: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
    pub initial_bracket: (f64, f64),
}

/// Number of interior probes used to check monotonicity before bisecting.
const MONOTONE_PROBES: usize = 5;

/// Finds the drag coefficient whose transit over `distance` takes `target_time`.
pub fn calibrate_drag(
    direction: TransitDirection,
    target_time: f64,
    distance: f64,
    bracket: (f64, f64),
    base: &VerticalParams,
    dt: f64,
) -> Result<DragCalibration> {
    let (lo, hi) = (bracket.0.min(bracket.1), bracket.0.max(bracket.1));
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Config(format!("invalid coefficient bracket [{lo}, {hi}]")));
    }
    let time = |cd: f64| transit_time(direction, distance, cd, base, dt);

    let mut probes = Vec::with_capacity(MONOTONE_PROBES + 2);
    for i in 0..=MONOTONE_PROBES + 1 {
        let cd = lo + (hi - lo) * i as f64 / (MONOTONE_PROBES + 1) as f64;
        probes.push((cd, time(cd)?));
    }
    if let Some(w) = probes.windows(2).find(|w| !(w[1].1 > w[0].1)) {
        return Err(Error::NotMonotone(format!(
            "transit time {} s at Cd {} is not above {} s at Cd {}",
            w[1].1, w[1].0, w[0].1, w[0].0
        )));
    }
    let (t_lo, t_hi) = (probes[0].1, probes[probes.len() - 1].1);
    if !(target_time >= t_lo && target_time <= t_hi) {
        return Err(Error::Unreachable {
            target: target_time,
            min: t_lo,
            max: t_hi,
        });
    }

    // errors inside the closure surface as NaN and fail the bracket check
    let residual = |cd: f64| time(cd).map(|t| t - target_time).unwrap_or(f64::NAN);
    let root = bisect(residual, lo, hi, BRACKET_SHRINK * (hi - lo), MAX_BISECTION_ITERATIONS, |_| false)?;
    let achieved_time = time(root.x)?;
    Ok(DragCalibration {
        direction,
        coefficient: root.x,
        achieved_time,
        target_time,
        iterations: root.iterations,
        bracket: root.bracket,
        initial_bracket: (lo, hi),
    })
}

/// Stride per gait cycle reproducing `target_speed` at `cadence`.
pub fn calibrate_gait(target_speed: f64, cadence: f64) -> Result<f64> {
    if !(cadence > 0.0 && cadence.is_finite()) {
        return Err(Error::domain("gait cadence (1/s)", cadence, f64::MIN_POSITIVE, f64::MAX));
    }
    Ok(target_speed / cadence)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{CALIBRATED_CD_ASCEND, CALIBRATED_CD_DESCEND, DEFAULT_DT};
    use approx::assert_abs_diff_eq;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-12, 60, |f| f.abs() < 1e-14).unwrap();
        assert_abs_diff_eq!(r.x, 2f64.sqrt(), epsilon = 1e-11);
        assert!(r.iterations <= 60);
    }

    #[test]
    fn bisect_requires_sign_change() {
        assert!(matches!(
            bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-9, 60, |_| false),
            Err(Error::NotMonotone(_))
        ));
    }

    #[test]
    fn gait_examples() {
        assert_abs_diff_eq!(calibrate_gait(0.70, 0.5).unwrap(), 1.4, epsilon = 1e-12);
        assert_abs_diff_eq!(calibrate_gait(0.24, 0.5).unwrap(), 0.48, epsilon = 1e-12);
        assert_eq!(calibrate_gait(0.0, 0.5).unwrap(), 0.0);
        assert!(calibrate_gait(0.7, 0.0).is_err());
        // underwater advance relative to land advance
        assert_abs_diff_eq!(0.48 / 1.4, 0.343, epsilon = 1e-3);
    }

    #[test]
    fn unreachable_target_reports_range() {
        let p = VerticalParams::default();
        match calibrate_drag(TransitDirection::Descend, 0.01, 30.0, (1.0, 1000.0), &p, DEFAULT_DT) {
            Err(Error::Unreachable { min, max, .. }) => {
                assert!(min > 0.01 && max > min);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn shipped_coefficients_are_calibration_outputs() {
        let p = VerticalParams::default();
        let d = calibrate_drag(TransitDirection::Descend, 7.0, 30.0, (1.0, 1000.0), &p, DEFAULT_DT).unwrap();
        let a = calibrate_drag(TransitDirection::Ascend, 2.0, 30.0, (0.01, 1000.0), &p, DEFAULT_DT).unwrap();
        assert_abs_diff_eq!(d.coefficient, CALIBRATED_CD_DESCEND, epsilon = 1e-9);
        assert_abs_diff_eq!(a.coefficient, CALIBRATED_CD_ASCEND, epsilon = 1e-9);
        for c in [d, a] {
            assert!(c.iterations <= MAX_BISECTION_ITERATIONS);
            assert!(c.bracket.1 - c.bracket.0 <= BRACKET_SHRINK * (c.initial_bracket.1 - c.initial_bracket.0));
            assert!((c.achieved_time - c.target_time).abs() < 0.05);
        }
    }

    #[test]
    fn transit_requires_matching_buoyancy() {
        let p = VerticalParams {
            mass: 0.6,
            ..VerticalParams::default()
        };
        assert!(transit_time(TransitDirection::Ascend, 30.0, 10.0, &p, DEFAULT_DT).is_err());
    }
}
