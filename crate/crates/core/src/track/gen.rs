//! Procedural track generation: control points on a jittered circle, closed
//! Catmull-Rom interpolation, arc-length resampling, and curvature-bounded
//! rejection.

use super::{Track, TrackError};
use crate::geometry::Vec2;
use crate::seeds::derive_seed;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MAX_ATTEMPTS: u32 = 100;
/// Dense spline samples per control segment before resampling.
const SAMPLES_PER_SEGMENT: usize = 200;

/// Parameters of the jittered-circle track generator.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackGenParams {
    /// Control points placed at even angles around a circle.
    pub n_control_points: usize,
    /// Mean control-point radius, meters.
    pub radius_mean: f64,
    /// Uniform radius jitter, meters (must stay below `radius_mean`).
    pub radius_jitter: f64,
    /// Lane half-width, meters.
    pub half_width: f64,
    /// Maximum absolute centerline curvature, 1/m. Candidates above this are
    /// rejected and redrawn.
    pub kappa_max: f64,
    /// Target spacing of resampled centerline points, meters.
    pub resample_spacing: f64,
    /// When set, the candidate is uniformly scaled to this arc length before
    /// resampling. The default 500 m makes one lap exactly 1000 steps at the
    /// default speed and step size.
    pub target_length: Option<f64>,
}

impl Default for TrackGenParams {
    fn default() -> Self {
        Self {
            n_control_points: 12,
            radius_mean: 80.0,
            radius_jitter: 30.0,
            half_width: 4.0,
            kappa_max: 0.035,
            resample_spacing: 1.0,
            target_length: Some(500.0),
        }
    }
}

impl TrackGenParams {
    fn validate(&self) -> Result<(), TrackError> {
        let mut problems = Vec::new();
        if self.n_control_points < 6 {
            problems.push("n_control_points must be >= 6".to_string());
        }
        if !(self.radius_mean > 0.0) {
            problems.push("radius_mean must be positive".to_string());
        }
        if self.radius_jitter < 0.0 || self.radius_jitter >= self.radius_mean {
            problems.push("radius_jitter must be in [0, radius_mean)".to_string());
        }
        if !(self.half_width > 0.0) {
            problems.push("half_width must be positive".to_string());
        }
        if !(self.kappa_max > 0.0) {
            problems.push("kappa_max must be positive".to_string());
        }
        if !(self.resample_spacing > 0.0) {
            problems.push("resample_spacing must be positive".to_string());
        }
        if let Some(t) = self.target_length {
            if !(t > 0.0) {
                problems.push("target_length must be positive".to_string());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(TrackError::BadParams(problems.join("; ")))
        }
    }
}

/// Generate a drivable closed track, deterministically from `(seed, params)`.
///
/// Each attempt draws fresh control-point radii from a seed derived from
/// `(seed, attempt)`; a candidate is accepted once its discrete curvature
/// stays within `kappa_max` everywhere.
pub fn generate_track(seed: u64, params: &TrackGenParams) -> Result<Track, TrackError> {
    params.validate()?;
    let id = format!("track-{seed}");
    for attempt in 0..MAX_ATTEMPTS {
        let attempt_seed = derive_seed(seed, "trackgen", attempt as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(attempt_seed);

        let n = params.n_control_points;
        let mut control = Vec::with_capacity(n);
        for k in 0..n {
            let theta = std::f64::consts::TAU * k as f64 / n as f64;
            let jitter = if params.radius_jitter > 0.0 {
                rng.random_range(-params.radius_jitter..params.radius_jitter)
            } else {
                0.0
            };
            let r = params.radius_mean + jitter;
            control.push(Vec2::from_angle(theta) * r);
        }

        let mut dense = sample_closed_catmull_rom(&control, SAMPLES_PER_SEGMENT);
        if let Some(target) = params.target_length {
            let raw = polyline_length(&dense);
            let scale = target / raw;
            for p in dense.iter_mut() {
                *p = *p * scale;
            }
        }
        let points = resample_closed(&dense, params.resample_spacing);

        if points.len() < 4 {
            continue;
        }
        if max_discrete_curvature(&points) > params.kappa_max {
            continue;
        }
        match Track::new(&id, points, params.half_width, seed) {
            Ok(track) => return Ok(track),
            Err(_) => continue,
        }
    }
    Err(TrackError::GenerationFailed {
        attempts: MAX_ATTEMPTS,
        kappa_max: params.kappa_max,
    })
}

/// Uniform closed Catmull-Rom spline through `control`, sampled
/// `per_segment` times per control segment. The returned polyline is open
/// (no duplicated closing point).
fn sample_closed_catmull_rom(control: &[Vec2], per_segment: usize) -> Vec<Vec2> {
    let n = control.len();
    let mut out = Vec::with_capacity(n * per_segment);
    for i in 0..n {
        let p0 = control[(i + n - 1) % n];
        let p1 = control[i];
        let p2 = control[(i + 1) % n];
        let p3 = control[(i + 2) % n];
        for s in 0..per_segment {
            let t = s as f64 / per_segment as f64;
            out.push(catmull_rom(p0, p1, p2, p3, t));
        }
    }
    out
}

fn catmull_rom(p0: Vec2, p1: Vec2, p2: Vec2, p3: Vec2, t: f64) -> Vec2 {
    let t2 = t * t;
    let t3 = t2 * t;
    (p1 * 2.0
        + (p2 - p0) * t
        + (p0 * 2.0 - p1 * 5.0 + p2 * 4.0 - p3) * t2
        + ((p1 - p2) * 3.0 + p3 - p0) * t3)
        * 0.5
}

fn polyline_length(points: &[Vec2]) -> f64 {
    let n = points.len();
    (0..n).map(|i| points[i].dist(points[(i + 1) % n])).sum()
}

/// Resample a closed polyline at uniform arc spacing as close as possible to
/// `spacing` while dividing the perimeter evenly, then append the closing
/// duplicate point.
fn resample_closed(dense: &[Vec2], spacing: f64) -> Vec<Vec2> {
    let total = polyline_length(dense);
    let k = (total / spacing).round().max(3.0) as usize;
    let step = total / k as f64;
    let n = dense.len();

    let mut out = Vec::with_capacity(k + 1);
    let mut seg = 0usize;
    let mut seg_start_arc = 0.0;
    let mut seg_len = dense[0].dist(dense[1 % n]);
    for i in 0..k {
        let target = step * i as f64;
        while seg_start_arc + seg_len < target && seg < n - 1 {
            seg_start_arc += seg_len;
            seg += 1;
            seg_len = dense[seg].dist(dense[(seg + 1) % n]);
        }
        let t = if seg_len > 0.0 {
            ((target - seg_start_arc) / seg_len).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let a = dense[seg];
        let b = dense[(seg + 1) % n];
        out.push(a + (b - a) * t);
    }
    let first = out[0];
    out.push(first);
    out
}

/// Largest Menger curvature over consecutive point triples (cyclic).
fn max_discrete_curvature(points: &[Vec2]) -> f64 {
    let n = points.len() - 1; // distinct points
    let mut max_kappa: f64 = 0.0;
    for i in 0..n {
        let a = points[(i + n - 1) % n];
        let b = points[i];
        let c = points[(i + 1) % n];
        let ab = b - a;
        let ac = c - a;
        let bc = c - b;
        let denom = ab.norm() * ac.norm() * bc.norm();
        if denom > 0.0 {
            let kappa = 2.0 * ab.cross(ac).abs() / denom;
            max_kappa = max_kappa.max(kappa);
        }
    }
    max_kappa
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn circle_params() -> TrackGenParams {
        TrackGenParams {
            radius_jitter: 0.0,
            radius_mean: 50.0,
            resample_spacing: 1.0,
            target_length: None,
            ..TrackGenParams::default()
        }
    }

    #[test]
    fn circle_circumference() {
        let track = generate_track(7, &circle_params()).unwrap();
        let expected = std::f64::consts::TAU * 50.0;
        let err = (track.total_length() - expected).abs() / expected;
        assert!(err < 0.005, "length {} vs {}", track.total_length(), expected);
    }

    #[test]
    fn deterministic_in_seed() {
        let a = generate_track(7, &TrackGenParams::default()).unwrap();
        let b = generate_track(7, &TrackGenParams::default()).unwrap();
        assert_eq!(a, b);
        let c = generate_track(8, &TrackGenParams::default()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn nineteen_default_tracks_valid() {
        let params = TrackGenParams::default();
        for seed in 1..=19 {
            let track = generate_track(seed, &params).unwrap();
            // Invariants: closed, spacing, length sum, curvature bound.
            let pts = track.centerline();
            assert_eq!(pts[0], pts[pts.len() - 1]);
            let sum: f64 = pts.windows(2).map(|w| w[0].dist(w[1])).sum();
            assert_relative_eq!(sum, track.total_length(), max_relative = 1e-9);
            assert!(max_discrete_curvature(pts) <= params.kappa_max);
            // Default calibration: one lap is 1000 steps of 0.5 m.
            assert_eq!((track.total_length() / 0.5).ceil() as u32, 1000);
        }
    }

    #[test]
    fn infeasible_kappa_fails() {
        let params = TrackGenParams {
            kappa_max: 1e-6,
            ..TrackGenParams::default()
        };
        match generate_track(1, &params) {
            Err(TrackError::GenerationFailed { attempts, .. }) => assert_eq!(attempts, 100),
            other => panic!("expected generation failure, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_params() {
        let params = TrackGenParams {
            n_control_points: 4,
            ..TrackGenParams::default()
        };
        assert!(matches!(
            generate_track(1, &params),
            Err(TrackError::BadParams(_))
        ));
    }
}
