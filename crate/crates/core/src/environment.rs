//! Gravel pile, digging resistance and bucket filling.
//!
//! The pile is a rigid planar wedge: flat ground up to `toe_x`, a face at
//! slope angle ε, and a flat top at `crest_height`. Width is lumped into the
//! specific resistance, so all forces are per machine.

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Edge speed below which the resisting force fades in linearly, m/s.
pub const DIG_SPEED_REG: f64 = 0.02;
/// Depths below this count as surface contact without penetration, m.
const DEPTH_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PileModel {
    pub toe_x: f64,
    /// Face inclination ε, rad.
    pub slope_angle: f64,
    pub crest_height: f64,
    /// Resistance per squared penetration, N/m².
    pub specific_resistance: f64,
    /// Bucket fill fraction per m² of swept cross-section.
    pub fill_gain: f64,
    pub material_density: f64,
    /// Drag of the carried material against the pile at full bucket, N.
    pub fill_drag: f64,
    /// Multiplier slope for negative clearance, 1/rad.
    pub clearance_penalty: f64,
    /// Edge pitch below `-spill_angle` makes material leave the bucket, rad.
    pub spill_angle: f64,
    /// Fill fraction lost per second per radian beyond the spill angle.
    pub spill_rate: f64,
}

impl PileModel {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.slope_angle > 0.0 && self.slope_angle < std::f64::consts::FRAC_PI_2) {
            return Err(ConfigError::invalid("slope_angle", "pile slope must satisfy 0 < slope_angle < pi/2"));
        }
        let positive = [
            ("crest_height", self.crest_height),
            ("specific_resistance", self.specific_resistance),
            ("fill_gain", self.fill_gain),
            ("material_density", self.material_density),
            ("spill_rate", self.spill_rate),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::invalid(name, "must be finite and positive"));
            }
        }
        let non_negative = [
            ("fill_drag", self.fill_drag),
            ("clearance_penalty", self.clearance_penalty),
            ("spill_angle", self.spill_angle),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ConfigError::invalid(name, "must be finite and non-negative"));
            }
        }
        if !self.toe_x.is_finite() {
            return Err(ConfigError::invalid("toe_x", "must be finite"));
        }
        Ok(())
    }

    /// Unit normal of the slope face pointing into the material.
    fn slope_normal_in(&self) -> [f64; 2] {
        let (s, c) = self.slope_angle.sin_cos();
        [s, -c]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DigContact {
    /// Depth below the active pile face, measured along its normal, m.
    pub penetration_depth: f64,
    pub in_contact: bool,
    /// Inward unit normal of the face the depth is measured from.
    pub normal_in: [f64; 2],
    /// Unit tangent of that face, pointing forward/up the pile.
    pub tangent: [f64; 2],
}

pub fn surface_z(x: f64, pile: &PileModel) -> f64 {
    if x <= pile.toe_x {
        0.0
    } else {
        ((x - pile.toe_x) * pile.slope_angle.tan()).min(pile.crest_height)
    }
}

pub fn dig_contact(edge_x: f64, edge_z: f64, pile: &PileModel) -> DigContact {
    let (s, c) = pile.slope_angle.sin_cos();
    // The material is the intersection of the half-planes below the face
    // line and below the crest line; depth is the smaller of the two.
    let below_face = (edge_x - pile.toe_x) * s - edge_z * c;
    let below_crest = pile.crest_height - edge_z;
    let (depth, normal_in, tangent) = if below_face <= below_crest {
        (below_face, pile.slope_normal_in(), [c, s])
    } else {
        (below_crest, [0.0, -1.0], [1.0, 0.0])
    };
    if depth > DEPTH_EPS {
        DigContact { penetration_depth: depth, in_contact: true, normal_in, tangent }
    } else {
        DigContact { penetration_depth: 0.0, in_contact: false, normal_in, tangent }
    }
}

/// Clearance angle of the bucket floor relative to the pile face; negative
/// when the floor is pitched into the slope.
pub fn clearance_angle(edge_angle: f64, pile: &PileModel) -> f64 {
    edge_angle - pile.slope_angle
}

/// Resisting force on the cutting edge `(fx, fz)`, N.
///
/// Magnitude is `k_s·depth² + fill_drag·fill`, scaled up when the floor
/// presses into the face. The force opposes the edge velocity; below
/// [`DIG_SPEED_REG`] it fades in proportionally to speed so that it stays
/// continuous through standstill. At exactly zero velocity it pushes the
/// edge out along the face normal.
pub fn dig_force(contact: &DigContact, edge_velocity: [f64; 2], edge_angle: f64, fill: f64, pile: &PileModel) -> [f64; 2] {
    if !contact.in_contact {
        return [0.0, 0.0];
    }
    let alpha = clearance_angle(edge_angle, pile);
    let magnitude = (pile.specific_resistance * contact.penetration_depth.powi(2)
        + pile.fill_drag * fill.clamp(0.0, 1.0))
        * (1.0 + pile.clearance_penalty * (-alpha).max(0.0));
    let speed = edge_velocity[0].hypot(edge_velocity[1]);
    if speed == 0.0 {
        return [-magnitude * contact.normal_in[0], -magnitude * contact.normal_in[1]];
    }
    let k = magnitude / speed.max(DIG_SPEED_REG);
    [-k * edge_velocity[0], -k * edge_velocity[1]]
}

/// Cross-section swept into the bucket per second, m²/s.
pub fn swept_area_rate(contact: &DigContact, edge_velocity: [f64; 2]) -> f64 {
    if !contact.in_contact {
        return 0.0;
    }
    let along = edge_velocity[0] * contact.tangent[0] + edge_velocity[1] * contact.tangent[1];
    contact.penetration_depth * along.max(0.0)
}

pub fn fill_update(fill: f64, swept_area_rate: f64, contact: &DigContact, pile: &PileModel, dt: f64) -> f64 {
    if !contact.in_contact || swept_area_rate <= 0.0 {
        return fill.clamp(0.0, 1.0);
    }
    (fill + pile.fill_gain * swept_area_rate * dt).clamp(0.0, 1.0)
}

/// Material pouring out when the bucket is pitched nose-down past the spill angle.
pub fn spill_update(fill: f64, edge_angle: f64, pile: &PileModel, dt: f64) -> f64 {
    let beyond = -pile.spill_angle - edge_angle;
    if beyond <= 0.0 {
        return fill;
    }
    (fill - pile.spill_rate * beyond * dt).max(0.0)
}
