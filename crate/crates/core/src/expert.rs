//! Reference PID demonstrator.
//!
//! The expert has privileged access to the signed lateral offset and heading
//! error and produces the supervision action `a_ref` at every step. Gains are
//! configuration, not constants; the defaults were tuned once with
//! `examples/tune_expert.rs` so the expert laps every default track.

/// PID gains applied to the lateral offset (meters) plus a heading-error
/// feedback term (radians).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Heading-error feedback gain.
    pub kh: f64,
    /// Clamp on the offset integral, meter-seconds.
    pub integral_clamp: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        Self {
            kp: 0.8,
            ki: 0.0,
            kd: 0.3,
            kh: 1.2,
            integral_clamp: 5.0,
        }
    }
}

impl PidGains {
    pub fn validate(&self) -> Result<(), String> {
        if self.kp < 0.0 || self.ki < 0.0 || self.kd < 0.0 || self.kh < 0.0 {
            return Err("PID gains must be non-negative".to_string());
        }
        if !(self.integral_clamp > 0.0) {
            return Err("integral_clamp must be positive".to_string());
        }
        Ok(())
    }
}

/// Controller memory carried across steps of one episode.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PidState {
    pub integral: f64,
    pub prev_error: f64,
    pub initialized: bool,
}

/// Fresh controller state for a new episode.
pub fn reset(_gains: &PidGains) -> PidState {
    PidState::default()
}

/// One PID evaluation.
///
/// `u_raw = -(kp*offset + ki*integral + kd*d(offset)/dt + kh*heading_error)`,
/// returned clamped to [-1, 1]. The derivative term is zero on the first call
/// of an episode; the integral is updated before clamping.
pub fn pid_action(
    gains: &PidGains,
    state: &PidState,
    offset: f64,
    heading_error: f64,
    dt: f64,
) -> (f64, PidState) {
    debug_assert!(dt > 0.0);
    let integral = (state.integral + offset * dt)
        .clamp(-gains.integral_clamp, gains.integral_clamp);
    let derivative = if state.initialized {
        (offset - state.prev_error) / dt
    } else {
        0.0
    };
    let u_raw = -(gains.kp * offset
        + gains.ki * integral
        + gains.kd * derivative
        + gains.kh * heading_error);
    let next = PidState {
        integral,
        prev_error: offset,
        initialized: true,
    };
    (u_raw.clamp(-1.0, 1.0), next)
}
