//! Closed-loop episode driver shared by data collection, aggregation, and
//! evaluation.
//!
//! An [`Actor`] chooses the executed steering; the driver independently
//! queries the labeling expert at every visited state so any recorded sample
//! carries the reference action for that state, which is exactly the DAgger
//! labeling rule.

use crate::data::Sample;
use crate::expert::{pid_action, PidGains, PidState};
use crate::policy::PolicyModel;
use crate::track::{
    is_terminated, lateral_offset, observe, step, CarState, LaneFrame, Observation, SimConfig,
    Termination, Track,
};

/// Which part of an [`Observation`] feeds the policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservationKind {
    /// Rangefinder rays scaled by `1/ray_max` into [0, 1].
    Rays,
    /// Flattened G x G lane raster (already in [0, 1]).
    Raster,
}

impl ObservationKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ObservationKind::Rays => "rays",
            ObservationKind::Raster => "raster",
        }
    }
}

/// Feature vector the policy consumes.
pub fn features(obs: &Observation, kind: ObservationKind, sim: &SimConfig) -> Vec<f64> {
    match kind {
        ObservationKind::Rays => obs.rays.iter().map(|r| r / sim.ray_max).collect(),
        ObservationKind::Raster => obs
            .raster
            .clone()
            .expect("raster observation requested but raster_size is 0"),
    }
}

pub fn feature_dim(kind: ObservationKind, sim: &SimConfig) -> usize {
    match kind {
        ObservationKind::Rays => sim.n_rays,
        ObservationKind::Raster => sim.raster_size * sim.raster_size,
    }
}

/// A steering decision source. Receives the policy features plus the
/// privileged lane frame (which only the expert uses).
pub trait Actor {
    fn begin_episode(&mut self) {}
    fn act(&mut self, features: &[f64], frame: &LaneFrame, dt: f64) -> f64;
}

/// The PID demonstrator as an actor.
pub struct ExpertActor {
    gains: PidGains,
    state: PidState,
}

impl ExpertActor {
    pub fn new(gains: PidGains) -> Self {
        Self {
            gains,
            state: PidState::default(),
        }
    }
}

impl Actor for ExpertActor {
    fn begin_episode(&mut self) {
        self.state = PidState::default();
    }

    fn act(&mut self, _features: &[f64], frame: &LaneFrame, dt: f64) -> f64 {
        let (action, next) = pid_action(&self.gains, &self.state, frame.offset, frame.heading_error, dt);
        self.state = next;
        action
    }
}

/// A trained policy as an actor (clamped forward pass, privileged info unused).
pub struct ModelActor<'a> {
    model: &'a PolicyModel,
}

impl<'a> ModelActor<'a> {
    pub fn new(model: &'a PolicyModel) -> Self {
        Self { model }
    }
}

impl Actor for ModelActor<'_> {
    fn act(&mut self, features: &[f64], _frame: &LaneFrame, _dt: f64) -> f64 {
        self.model.act(features)
    }
}

/// Result of one episode.
#[derive(Debug, Clone)]
pub struct EpisodeOutcome {
    pub track_id: String,
    pub survived_steps: u32,
    pub termination: Termination,
    /// progress / total_length; exceeds 1 when evaluation continues past a lap.
    pub lap_fraction: f64,
    /// Samples recorded by the label filter, in step order.
    pub samples: Vec<Sample>,
    /// (executed, reference) action pairs for each recorded sample.
    pub label_pairs: Vec<(f64, f64)>,
}

/// Run a training-style episode: terminate on lane departure, lap
/// completion, or the step budget (in that precedence). The labeling expert
/// is queried at every visited state; a step is recorded when
/// `record(a_executed, a_ref)` returns true.
pub fn run_training_episode(
    track: &Track,
    sim: &SimConfig,
    kind: ObservationKind,
    gains: &PidGains,
    actor: &mut dyn Actor,
    max_steps: u32,
    record: &dyn Fn(f64, f64) -> bool,
) -> EpisodeOutcome {
    let mut state = CarState::spawn(track, sim.speed);
    let mut labeler = PidState::default();
    let mut samples = Vec::new();
    let mut label_pairs = Vec::new();
    actor.begin_episode();

    let termination = loop {
        let verdict = is_terminated(track, &state, max_steps);
        if verdict != Termination::Running {
            break verdict;
        }
        let frame = lateral_offset(track, &state);
        let obs = observe(track, &state, sim);
        let feats = features(&obs, kind, sim);
        let (a_ref, next_labeler) =
            pid_action(gains, &labeler, frame.offset, frame.heading_error, sim.dt);
        labeler = next_labeler;
        let a_exec = actor.act(&feats, &frame, sim.dt).clamp(-1.0, 1.0);
        if record(a_exec, a_ref) {
            samples.push(Sample {
                observation: feats,
                a_ref,
                track_id: track.id().to_string(),
                step_index: state.step_index,
            });
            label_pairs.push((a_exec, a_ref));
        }
        state = step(track, &state, a_exec, sim.dt, sim.omega_max);
    };

    EpisodeOutcome {
        track_id: track.id().to_string(),
        survived_steps: state.step_index,
        termination,
        lap_fraction: state.progress / track.total_length(),
        samples,
        label_pairs,
    }
}

/// Run an evaluation episode: no labeling, no learning, and the car keeps
/// driving past a completed lap until it leaves the lane or exhausts
/// `max_steps`. A completed lap is still reported as `LapComplete`.
pub fn run_eval_episode(
    track: &Track,
    sim: &SimConfig,
    kind: ObservationKind,
    actor: &mut dyn Actor,
    max_steps: u32,
) -> EpisodeOutcome {
    let mut state = CarState::spawn(track, sim.speed);
    actor.begin_episode();

    let termination = loop {
        if state.step_index >= max_steps {
            break if state.progress >= track.total_length() {
                Termination::LapComplete
            } else {
                Termination::StepLimit
            };
        }
        let frame = lateral_offset(track, &state);
        if frame.offset.abs() > track.half_width() {
            break Termination::OutOfLane;
        }
        let obs = observe(track, &state, sim);
        let feats = features(&obs, kind, sim);
        let a_exec = actor.act(&feats, &frame, sim.dt).clamp(-1.0, 1.0);
        state = step(track, &state, a_exec, sim.dt, sim.omega_max);
    };

    EpisodeOutcome {
        track_id: track.id().to_string(),
        survived_steps: state.step_index,
        termination,
        lap_fraction: state.progress / track.total_length(),
        samples: Vec::new(),
        label_pairs: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::track::{generate_track, TrackGenParams};

    fn circle_track() -> Track {
        let params = TrackGenParams {
            radius_jitter: 0.0,
            radius_mean: 50.0,
            target_length: None,
            ..TrackGenParams::default()
        };
        generate_track(7, &params).unwrap()
    }

    #[test]
    fn expert_records_requested_steps() {
        let track = circle_track();
        let sim = SimConfig::default();
        let gains = PidGains::default();
        let mut actor = ExpertActor::new(gains);
        let outcome = run_training_episode(
            &track,
            &sim,
            ObservationKind::Rays,
            &gains,
            &mut actor,
            5,
            &|_, _| true,
        );
        assert_eq!(outcome.samples.len(), 5);
        assert_eq!(outcome.termination, Termination::StepLimit);
        // Executed actions equal the reference actions exactly: the labeling
        // expert and the acting expert see identical histories.
        for (a_exec, a_ref) in outcome.label_pairs {
            assert_eq!(a_exec.to_bits(), a_ref.to_bits());
        }
    }

    #[test]
    fn eval_with_zero_budget_is_step_limit() {
        let track = circle_track();
        let sim = SimConfig::default();
        let gains = PidGains::default();
        let mut actor = ExpertActor::new(gains);
        let outcome =
            run_eval_episode(&track, &sim, ObservationKind::Rays, &mut actor, 0);
        assert_eq!(outcome.survived_steps, 0);
        assert_eq!(outcome.termination, Termination::StepLimit);
    }

    #[test]
    fn expert_closes_the_loop_with_steady_progress() {
        // Closed-loop expert on a circle: progress tracks speed * dt per step
        // within 2%.
        let track = circle_track();
        let sim = SimConfig::default();
        let gains = PidGains::default();
        let mut actor = ExpertActor::new(gains);
        let n = 500u32;
        let outcome = run_training_episode(
            &track,
            &sim,
            ObservationKind::Rays,
            &gains,
            &mut actor,
            n,
            &|_, _| false,
        );
        assert_eq!(outcome.termination, Termination::StepLimit);
        let expected = n as f64 * sim.speed * sim.dt;
        let progress = outcome.lap_fraction * track.total_length();
        assert!(
            (progress - expected).abs() / expected < 0.02,
            "progress {progress} vs expected {expected}"
        );
    }
}
