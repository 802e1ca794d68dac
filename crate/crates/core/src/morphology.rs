//! Scissor-lift body kinematics.
//!
//! The actuator moves a slider horizontally along a lead screw. The slider
//! separation `x` sets the body height through a single-stage scissor
//! `h = base + sqrt(L^2 - x^2)`, so `x = 0` is the fully expanded body and
//! `x = slider_max` the fully compressed one. Height drives the fin pitch
//! through a bell-crank and the displaced volume through a [`VolumeModel`].

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};

/// Length of the M3 lead screw available as slider stroke, cm.
pub const SCREW_STROKE_CM: f64 = 5.5;

/// Default fixed displacement: servos (72 cm^3) plus electronics pouch (48 cm^3).
pub const FIXED_VOLUME_CM3: f64 = 72.0 + 48.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScissorGeometry {
    /// Scissor link length, cm.
    pub link_length: f64,
    /// Height of the body when the scissor is flat, cm.
    pub base_height: f64,
    /// Largest slider separation the actuator is allowed to reach, cm.
    pub slider_max: f64,
    /// Usable stroke of the lead screw, cm.
    pub screw_stroke: f64,
    /// Screw lead, mm per revolution.
    pub screw_lead: f64,
    /// Screw speed while expanding (slider moving toward 0), rev/s.
    pub output_speed: f64,
    /// Screw speed while compressing (slider moving toward `slider_max`), rev/s.
    pub compress_speed: f64,
}

impl Default for ScissorGeometry {
    fn default() -> Self {
        let link_length = 5.5;
        let base_height = 3.5;
        // stroke chosen so the scissor spans exactly 4.5 cm .. 9.0 cm
        let slider_max = (link_length * link_length - 1.0f64).sqrt();
        Self {
            link_length,
            base_height,
            slider_max,
            screw_stroke: SCREW_STROKE_CM,
            screw_lead: 0.5,
            output_speed: 2.40,
            compress_speed: 10.8,
        }
    }
}

impl ScissorGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.link_length > 0.0) {
            return Err(Error::Geometry(format!(
                "link_length must be positive, got {}",
                self.link_length
            )));
        }
        if !(self.base_height >= 0.0) {
            return Err(Error::Geometry(format!(
                "base_height must be non-negative, got {}",
                self.base_height
            )));
        }
        if !(self.slider_max > 0.0 && self.slider_max <= self.link_length) {
            return Err(Error::Geometry(format!(
                "slider_max {} must lie in (0, link_length = {}]",
                self.slider_max, self.link_length
            )));
        }
        if self.slider_max > self.screw_stroke {
            return Err(Error::Geometry(format!(
                "slider_max {} exceeds the usable screw stroke {}",
                self.slider_max, self.screw_stroke
            )));
        }
        if !(self.screw_lead > 0.0 && self.output_speed > 0.0 && self.compress_speed > 0.0) {
            return Err(Error::Geometry("screw lead and speeds must be positive".into()));
        }
        Ok(())
    }

    /// Slider speed for a travel direction, cm/s.
    pub fn slider_rate(&self, direction: Travel) -> f64 {
        let rev_per_s = match direction {
            Travel::Retract => self.output_speed,
            Travel::Extend => self.compress_speed,
        };
        self.screw_lead * 0.1 * rev_per_s
    }

    /// Body height range the geometry can reach: (at `slider_max`, at 0).
    pub fn height_span(&self) -> (f64, f64) {
        let lo = self.base_height
            + (self.link_length * self.link_length - self.slider_max * self.slider_max)
                .max(0.0)
                .sqrt();
        (lo, self.base_height + self.link_length)
    }

    /// Time for a full stroke in the given direction, s.
    pub fn full_stroke_time(&self, direction: Travel) -> f64 {
        self.slider_max / self.slider_rate(direction)
    }
}

/// Slider travel direction. Extending the slider compresses the body.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Travel {
    /// Slider separation grows; body height falls.
    Extend,
    /// Slider separation shrinks; body height rises.
    Retract,
}

pub fn slider_to_height(x: f64, geom: &ScissorGeometry) -> Result<f64> {
    check_range("slider separation (cm)", x, 0.0, geom.slider_max)?;
    let l = geom.link_length;
    Ok(geom.base_height + (l * l - x * x).max(0.0).sqrt())
}

/// Closed-form inverse of [`slider_to_height`].
pub fn height_to_slider(height: f64, geom: &ScissorGeometry) -> Result<f64> {
    let (lo, hi) = geom.height_span();
    // the span endpoints carry a rounding error from the sqrt
    let h = check_range("body height (cm)", height, lo - 1e-9, hi + 1e-9)?;
    let rise = (h - geom.base_height).clamp(0.0, geom.link_length);
    let l = geom.link_length;
    Ok((l * l - rise * rise).max(0.0).sqrt().min(geom.slider_max))
}

/// Constant-rate screw travel from `x0`, saturated to the slider stroke.
pub fn actuator_travel(duration: f64, direction: Travel, geom: &ScissorGeometry, x0: f64) -> f64 {
    let d = geom.slider_rate(direction) * duration.max(0.0);
    let x = match direction {
        Travel::Extend => x0 + d,
        Travel::Retract => x0 - d,
    };
    x.clamp(0.0, geom.slider_max)
}

/// Admissible body-height interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MorphRange {
    pub h_min: f64,
    pub h_max: f64,
}

impl Default for MorphRange {
    fn default() -> Self {
        Self {
            h_min: 4.5,
            h_max: 9.0,
        }
    }
}

impl MorphRange {
    pub fn check(&self, height: f64) -> Result<f64> {
        check_range("body height (cm)", height, self.h_min, self.h_max)
    }

    pub fn fraction(&self, height: f64) -> f64 {
        ((height - self.h_min) / (self.h_max - self.h_min)).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum BellCrankModel {
    /// Pitch proportional to morph fraction.
    #[default]
    Linear,
    /// Arcsine law of a crank of radius `crank_radius` centred at
    /// `reference_height`, renormalised to exact 0/90 degree endpoints.
    Crank {
        crank_radius: f64,
        reference_height: f64,
    },
}

pub fn fin_pitch(height: f64, model: &BellCrankModel, range: &MorphRange) -> Result<f64> {
    let h = range.check(height)?;
    match *model {
        BellCrankModel::Linear => Ok(90.0 * range.fraction(h)),
        BellCrankModel::Crank {
            crank_radius,
            reference_height,
        } => {
            if !(crank_radius > 0.0) {
                return Err(Error::Geometry(format!(
                    "crank radius must be positive, got {crank_radius}"
                )));
            }
            let raw = |h: f64| -> Result<f64> {
                let s = (h - reference_height) / crank_radius;
                if s.abs() > 1.0 {
                    return Err(Error::Geometry(format!(
                        "height {h} cm is {} cm from the crank centre, beyond radius {crank_radius} cm",
                        (h - reference_height).abs()
                    )));
                }
                Ok(s.asin())
            };
            let lo = raw(range.h_min)?;
            let hi = raw(range.h_max)?;
            let a = raw(h)?;
            if h == range.h_max {
                return Ok(90.0);
            }
            Ok((90.0 * (a - lo) / (hi - lo)).clamp(0.0, 90.0))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum VolumeShape {
    /// Body volume = footprint area x height.
    Prism { footprint_area: f64 },
    /// Body volume = slope x height + offset.
    Affine { slope: f64, offset: f64 },
}

/// Height-to-displacement law for the deformable body plus a fixed part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeModel {
    pub shape: VolumeShape,
    /// Displacement of the non-deforming parts, cm^3.
    pub fixed_volume: f64,
}

impl Default for VolumeModel {
    fn default() -> Self {
        Self::affine()
    }
}

impl VolumeModel {
    /// 9 cm x 4.5 cm footprint swept over the body height.
    pub fn prism() -> Self {
        Self {
            shape: VolumeShape::Prism {
                footprint_area: 9.0 * 4.5,
            },
            fixed_volume: FIXED_VOLUME_CM3,
        }
    }

    /// Line through the measured compressed (4.5 cm, 135 cm^3) and expanded
    /// (9 cm, 303.75 cm^3) body volumes.
    pub fn affine() -> Self {
        Self::affine_through((4.5, 135.0), (9.0, 303.75), FIXED_VOLUME_CM3)
    }

    pub fn affine_through(a: (f64, f64), b: (f64, f64), fixed_volume: f64) -> Self {
        let slope = (b.1 - a.1) / (b.0 - a.0);
        Self {
            shape: VolumeShape::Affine {
                slope,
                offset: a.1 - slope * a.0,
            },
            fixed_volume,
        }
    }

    /// Deformable-body volume at `height` with no range check (may be negative
    /// for the affine law at very small heights).
    pub fn body_at(&self, height: f64) -> f64 {
        match self.shape {
            VolumeShape::Prism { footprint_area } => footprint_area * height,
            VolumeShape::Affine { slope, offset } => slope * height + offset,
        }
    }

    pub fn total_at(&self, height: f64) -> f64 {
        self.body_at(height) + self.fixed_volume
    }

    /// d(volume)/d(height), cm^3 per cm.
    pub fn slope(&self) -> f64 {
        match self.shape {
            VolumeShape::Prism { footprint_area } => footprint_area,
            VolumeShape::Affine { slope, .. } => slope,
        }
    }

    /// Height at which the deformable body displaces `body_volume`.
    pub fn height_for_body(&self, body_volume: f64) -> f64 {
        match self.shape {
            VolumeShape::Prism { footprint_area } => body_volume / footprint_area,
            VolumeShape::Affine { slope, offset } => (body_volume - offset) / slope,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.shape {
            VolumeShape::Prism { .. } => "prism",
            VolumeShape::Affine { .. } => "affine",
        }
    }
}

pub fn body_volume(height: f64, model: &VolumeModel, range: &MorphRange) -> Result<f64> {
    let h = range.check(height)?;
    let v = model.body_at(h);
    if v < 0.0 {
        return Err(Error::domain("body volume (cm^3)", v, 0.0, f64::INFINITY));
    }
    Ok(v)
}

pub fn total_volume(height: f64, model: &VolumeModel, range: &MorphRange) -> Result<f64> {
    Ok(body_volume(height, model, range)? + model.fixed_volume)
}

/// Instantaneous body configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorphState {
    pub slider_x: f64,
    pub height: f64,
    pub fin_pitch: f64,
    pub morph_fraction: f64,
}

/// Everything needed to turn a slider position into a [`MorphState`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Morphology {
    pub geometry: ScissorGeometry,
    pub range: MorphRange,
    pub bell_crank: BellCrankModel,
}

impl Morphology {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        if !(self.range.h_max > self.range.h_min && self.range.h_min >= 0.0) {
            return Err(Error::Config(format!(
                "height range [{}, {}] is empty",
                self.range.h_min, self.range.h_max
            )));
        }
        Ok(())
    }

    pub fn state_at_slider(&self, x: f64) -> Result<MorphState> {
        let raw = slider_to_height(x, &self.geometry)?;
        // the geometry span and the configured range agree up to rounding
        let height = raw.clamp(self.range.h_min, self.range.h_max);
        Ok(MorphState {
            slider_x: x,
            height,
            fin_pitch: fin_pitch(height, &self.bell_crank, &self.range)?,
            morph_fraction: self.range.fraction(height),
        })
    }

    pub fn compressed(&self) -> MorphState {
        self.state_at_slider(self.geometry.slider_max)
            .expect("slider_max is inside its own stroke")
    }

    pub fn expanded(&self) -> MorphState {
        self.state_at_slider(0.0).expect("zero separation is inside the stroke")
    }
}
