//! Kinematic single-track model referenced at the center of gravity, and a
//! pure-pursuit steering law for it.

use crate::envmodel::Pose;
use crate::geometry::{Polyline, Vec2};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams {
    pub wheelbase: f64,
    /// Distance from the rear axle to the center of gravity.
    pub rear_to_cog: f64,
    pub max_steer: f64,
    pub length: f64,
    pub width: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            wheelbase: 2.9,
            rear_to_cog: 1.45,
            max_steer: 0.6,
            length: 5.0,
            width: 2.0,
        }
    }
}

/// One explicit Euler step. The position update uses the speed at the start
/// of the step; the speed is floored at zero.
pub fn bicycle_step(
    pose: Pose,
    speed: f64,
    accel: f64,
    steer: f64,
    dt: f64,
    params: &VehicleParams,
) -> (Pose, f64) {
    let steer = steer.clamp(-params.max_steer, params.max_steer);
    let beta = math::atan(params.rear_to_cog / params.wheelbase * math::tan(steer));
    let course = pose.heading + beta;
    let x = pose.x + speed * math::cos(course) * dt;
    let y = pose.y + speed * math::sin(course) * dt;
    let heading = pose.heading + speed / params.rear_to_cog * math::sin(beta) * dt;
    (Pose::new(x, y, heading), (speed + accel * dt).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PurePursuit {
    pub min_lookahead: f64,
    /// Lookahead per unit speed, seconds.
    pub lookahead_gain: f64,
}

impl Default for PurePursuit {
    fn default() -> Self {
        Self {
            min_lookahead: 3.0,
            lookahead_gain: 0.8,
        }
    }
}

impl PurePursuit {
    pub fn lookahead(&self, speed: f64) -> f64 {
        self.min_lookahead.max(self.lookahead_gain * speed)
    }

    /// Steering angle that puts the center of gravity on a circle through the
    /// lookahead point. `arc` is the current progress along `path`.
    pub fn steer(&self, pose: Pose, speed: f64, path: &Polyline, arc: f64, params: &VehicleParams) -> f64 {
        let target = point_beyond(path, arc + self.lookahead(speed));
        let to_target = target - pose.position();
        let d = to_target.norm();
        if d < 1e-6 {
            return 0.0;
        }
        let alpha = math::normalize_angle(to_target.angle() - pose.heading);
        let sin_beta = (2.0 * params.rear_to_cog * math::sin(alpha) / d).clamp(-0.95, 0.95);
        let beta = libm::asin(sin_beta);
        let steer = math::atan(params.wheelbase / params.rear_to_cog * math::tan(beta));
        steer.clamp(-params.max_steer, params.max_steer)
    }
}

/// Time-gap car-following law on the bumper-to-bumper gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGap {
    pub standstill: f64,
    pub headway: f64,
    pub gap_gain: f64,
    pub speed_gain: f64,
}

impl Default for TimeGap {
    fn default() -> Self {
        Self {
            standstill: 2.0,
            headway: 1.5,
            gap_gain: 0.23,
            speed_gain: 0.74,
        }
    }
}

impl TimeGap {
    pub fn desired_gap(&self, speed: f64) -> f64 {
        self.standstill + self.headway * speed
    }

    /// Deceleration needed to match the lead speed before the gap shrinks to
    /// the standstill distance; zero when not closing in.
    pub fn required_decel(&self, gap: f64, speed: f64, lead_speed: f64) -> f64 {
        if speed <= lead_speed {
            return 0.0;
        }
        let room = gap - self.standstill;
        if room <= 0.0 {
            return f64::INFINITY;
        }
        (speed * speed - lead_speed * lead_speed) / (2.0 * room)
    }

    /// Commanded acceleration, clamped to `±max_accel`.
    pub fn accel(&self, gap: f64, speed: f64, lead_speed: f64, max_accel: f64) -> f64 {
        let mut a = self.gap_gain * (gap - self.desired_gap(speed)) + self.speed_gain * (lead_speed - speed);
        if speed > lead_speed {
            a = a.min(-self.required_decel(gap, speed, lead_speed));
        } else if gap <= self.standstill {
            a = a.min(0.0);
        }
        a.clamp(-max_accel, max_accel)
    }
}

/// Point at `arc`, extrapolated along the end tangent past the path end.
pub fn point_beyond(path: &Polyline, arc: f64) -> Vec2 {
    let len = path.length();
    if arc <= len {
        return path.point_at(arc);
    }
    path.point_at(len) + Vec2::from_angle(path.heading_at(len)) * (arc - len)
}
