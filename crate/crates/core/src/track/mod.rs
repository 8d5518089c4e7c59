//! Track world: closed 2D centerlines with uniform lane width, unicycle car
//! kinematics, rangefinder observations, and lane-departure detection.

mod gen;
mod io;

pub use gen::{generate_track, TrackGenParams};
pub use io::{load_track, save_track, track_to_string};

use crate::geometry::{normalize_angle, project_on_segment, ray_segment_intersection, Vec2};
use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

/// Minimum and maximum allowed spacing between consecutive centerline points.
pub const MIN_POINT_SPACING: f64 = 0.01;
pub const MAX_POINT_SPACING: f64 = 2.0;

#[derive(Debug, Error)]
pub enum TrackError {
    #[error("track needs at least 3 distinct centerline points, got {0}")]
    TooFewPoints(usize),
    #[error("centerline is not closed: first/last points are {0} m apart")]
    NotClosed(f64),
    #[error("centerline spacing {found} m at segment {segment} outside [{min}, {max}] m")]
    BadSpacing {
        segment: usize,
        found: f64,
        min: f64,
        max: f64,
    },
    #[error("half width must be positive, got {0}")]
    BadHalfWidth(f64),
    #[error("non-finite centerline coordinate at index {0}")]
    NonFinite(usize),
    #[error("track id must be non-empty and contain no whitespace: {0:?}")]
    BadId(String),
    #[error("track generation failed after {attempts} attempts: curvature exceeds {kappa_max} 1/m")]
    GenerationFailed { attempts: u32, kappa_max: f64 },
    #[error("invalid generation parameters: {0}")]
    BadParams(String),
    #[error("malformed track file: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A closed track: centerline polyline plus a uniform lane half-width.
///
/// The centerline stores the closing point explicitly (`points[last] ==
/// points[0]`), matching the on-disk format. Coordinates are quantized to
/// 9 significant digits on construction so that save/load round-trips are
/// bit-exact.
#[derive(Debug, Clone)]
pub struct Track {
    id: String,
    centerline: Vec<Vec2>,
    half_width: f64,
    total_length: f64,
    seed: u64,
    // Derived caches, rebuilt on construction.
    cum_len: Vec<f64>,
    left_boundary: Vec<Vec2>,
    right_boundary: Vec<Vec2>,
    boundary_boxes: Vec<(Vec2, Vec2)>,
}

impl PartialEq for Track {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.half_width == other.half_width
            && self.seed == other.seed
            && self.total_length == other.total_length
            && self.centerline == other.centerline
    }
}

/// Round to 9 significant decimal digits, the precision of the track file
/// format. Exact decimal round-trip through `parse` keeps this bit-stable.
pub(crate) fn quantize_coord(v: f64) -> f64 {
    format!("{v:.8e}").parse().expect("formatted float reparses")
}

pub(crate) fn format_coord(v: f64) -> String {
    format!("{v:.8e}")
}

impl Track {
    /// Build a track from a closed centerline. The final point may either
    /// duplicate the first or sit within 1e-6 m of it; it is snapped exactly.
    pub fn new(id: &str, mut points: Vec<Vec2>, half_width: f64, seed: u64) -> Result<Self, TrackError> {
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(TrackError::BadId(id.to_string()));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(TrackError::BadHalfWidth(half_width));
        }
        for (i, p) in points.iter().enumerate() {
            if !p.is_finite() {
                return Err(TrackError::NonFinite(i));
            }
        }
        for p in points.iter_mut() {
            p.x = quantize_coord(p.x);
            p.y = quantize_coord(p.y);
        }
        if points.len() >= 2 {
            let gap = points[0].dist(points[points.len() - 1]);
            if gap >= 1e-6 {
                return Err(TrackError::NotClosed(gap));
            }
            let first = points[0];
            *points.last_mut().unwrap() = first;
        }
        if points.len() < 4 {
            return Err(TrackError::TooFewPoints(points.len().saturating_sub(1)));
        }
        for i in 0..points.len() - 1 {
            let d = points[i].dist(points[i + 1]);
            if !(MIN_POINT_SPACING..=MAX_POINT_SPACING).contains(&d) {
                return Err(TrackError::BadSpacing {
                    segment: i,
                    found: d,
                    min: MIN_POINT_SPACING,
                    max: MAX_POINT_SPACING,
                });
            }
        }

        let mut cum_len = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        cum_len.push(0.0);
        for i in 0..points.len() - 1 {
            acc += points[i].dist(points[i + 1]);
            cum_len.push(acc);
        }
        let total_length = acc;

        let (left_boundary, right_boundary) = offset_boundaries(&points, half_width);
        let mut boundary_boxes = Vec::with_capacity(2 * (points.len() - 1));
        for poly in [&left_boundary, &right_boundary] {
            for w in poly.windows(2) {
                boundary_boxes.push(segment_box(w[0], w[1]));
            }
        }

        Ok(Self {
            id: id.to_string(),
            centerline: points,
            half_width,
            total_length,
            seed,
            cum_len,
            left_boundary,
            right_boundary,
            boundary_boxes,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Closed centerline including the duplicated final point.
    pub fn centerline(&self) -> &[Vec2] {
        &self.centerline
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Arc length of the closed centerline.
    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn segment_count(&self) -> usize {
        self.centerline.len() - 1
    }

    /// Nearest-point projection of `p` onto the centerline.
    ///
    /// Scans all segments; ties on distance are broken toward the smaller
    /// segment parameter, then the smaller segment index, so a query exactly
    /// on a vertex lands at the start of its outgoing segment.
    pub fn project(&self, p: Vec2) -> Projection {
        let mut best = Projection {
            segment: 0,
            t: 0.0,
            arc: 0.0,
            point: self.centerline[0],
            dist_sq: f64::INFINITY,
        };
        for i in 0..self.segment_count() {
            let a = self.centerline[i];
            let b = self.centerline[i + 1];
            let t = project_on_segment(p, a, b);
            let q = a + (b - a) * t;
            let d = (p - q).norm_sq();
            let better = d < best.dist_sq || (d == best.dist_sq && t < best.t);
            if better {
                best = Projection {
                    segment: i,
                    t,
                    arc: self.cum_len[i] + (q - a).norm(),
                    point: q,
                    dist_sq: d,
                };
            }
        }
        best
    }

    /// Direction angle of centerline segment `i`.
    pub fn segment_angle(&self, i: usize) -> f64 {
        (self.centerline[i + 1] - self.centerline[i]).angle()
    }

    pub fn left_boundary(&self) -> &[Vec2] {
        &self.left_boundary
    }

    pub fn right_boundary(&self) -> &[Vec2] {
        &self.right_boundary
    }

    /// First intersection distance of a ray with either lane boundary,
    /// clamped to `max_range`.
    pub fn ray_distance(&self, origin: Vec2, dir: Vec2, max_range: f64) -> f64 {
        let ray_box = {
            let end = origin + dir * max_range;
            segment_box(origin, end)
        };
        let mut best = max_range;
        let n_left = self.left_boundary.len() - 1;
        for (k, bbox) in self.boundary_boxes.iter().enumerate() {
            if !boxes_overlap(&ray_box, bbox) {
                continue;
            }
            let (a, b) = if k < n_left {
                (self.left_boundary[k], self.left_boundary[k + 1])
            } else {
                let j = k - n_left;
                (self.right_boundary[j], self.right_boundary[j + 1])
            };
            if let Some(t) = ray_segment_intersection(origin, dir, a, b) {
                if t < best {
                    best = t;
                }
            }
        }
        best
    }
}

/// Result of projecting a point onto the centerline.
#[derive(Debug, Clone, Copy)]
pub struct Projection {
    pub segment: usize,
    pub t: f64,
    /// Arc-length coordinate of the projected point, in [0, total_length].
    pub arc: f64,
    pub point: Vec2,
    pub dist_sq: f64,
}

fn segment_box(a: Vec2, b: Vec2) -> (Vec2, Vec2) {
    (
        Vec2::new(a.x.min(b.x), a.y.min(b.y)),
        Vec2::new(a.x.max(b.x), a.y.max(b.y)),
    )
}

fn boxes_overlap(a: &(Vec2, Vec2), b: &(Vec2, Vec2)) -> bool {
    a.0.x <= b.1.x && b.0.x <= a.1.x && a.0.y <= b.1.y && b.0.y <= a.1.y
}

/// Offset the centerline by +/- half_width along per-vertex normals.
fn offset_boundaries(points: &[Vec2], half_width: f64) -> (Vec<Vec2>, Vec<Vec2>) {
    let n = points.len() - 1; // distinct points
    let mut left = Vec::with_capacity(n + 1);
    let mut right = Vec::with_capacity(n + 1);
    for i in 0..n {
        let prev = points[(i + n - 1) % n];
        let next = points[(i + 1) % n];
        let tangent = (next - prev).normalized();
        let normal = tangent.perp();
        left.push(points[i] + normal * half_width);
        right.push(points[i] - normal * half_width);
    }
    left.push(left[0]);
    right.push(right[0]);
    (left, right)
}

/// Ego vehicle state. `speed` is constant for the run; `progress` is a
/// monotone arc-length accumulator that keeps growing across laps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarState {
    pub x: f64,
    pub y: f64,
    /// Heading in (-pi, pi].
    pub heading: f64,
    pub speed: f64,
    pub progress: f64,
    pub step_index: u32,
}

impl CarState {
    /// Spawn at the start of the centerline, aligned with the first segment.
    pub fn spawn(track: &Track, speed: f64) -> Self {
        let p = track.centerline()[0];
        Self {
            x: p.x,
            y: p.y,
            heading: normalize_angle(track.segment_angle(0)),
            speed,
            progress: 0.0,
            step_index: 0,
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

/// Simulation constants shared by stepping and observation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Constant forward speed, m/s.
    pub speed: f64,
    /// Integration step, seconds.
    pub dt: f64,
    /// Yaw rate at full steering deflection, rad/s.
    pub omega_max: f64,
    /// Number of rangefinder rays, spread evenly over [-90, +90] degrees.
    pub n_rays: usize,
    /// Ray reading clamp, meters.
    pub ray_max: f64,
    /// Occupancy-raster side length G (0 disables the raster).
    pub raster_size: usize,
    /// Forward window covered by the raster, meters.
    pub raster_window: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        // One lap of the default 500 m track is exactly 1000 steps.
        Self {
            speed: 10.0,
            dt: 0.05,
            omega_max: 0.6,
            n_rays: 19,
            ray_max: 50.0,
            raster_size: 0,
            raster_window: 20.0,
        }
    }
}

/// Unicycle update: steering commands a yaw rate proportional to
/// `omega_max`, then the car advances at constant speed along the new
/// heading. Progress advances by projection onto the centerline, clamped to
/// be monotone and at most `1.5 * speed * dt` per step.
pub fn step(track: &Track, state: &CarState, steering: f64, dt: f64, omega_max: f64) -> CarState {
    let steering = steering.clamp(-1.0, 1.0);
    let heading = normalize_angle(state.heading + steering * omega_max * dt);
    let x = state.x + state.speed * heading.cos() * dt;
    let y = state.y + state.speed * heading.sin() * dt;

    let length = track.total_length();
    let arc = track.project(Vec2::new(x, y)).arc;
    let prev_arc = state.progress.rem_euclid(length);
    // Smallest signed wrap of the arc delta; backward motion earns nothing,
    // forward motion is capped to rule out shortcut jumps between nearby
    // track sections.
    let mut delta = arc - prev_arc;
    if delta > length / 2.0 {
        delta -= length;
    } else if delta < -length / 2.0 {
        delta += length;
    }
    let capped = delta.clamp(0.0, state.speed * dt * 1.5);

    CarState {
        x,
        y,
        heading,
        speed: state.speed,
        progress: state.progress + capped,
        step_index: state.step_index + 1,
    }
}

/// Signed lateral offset from the centerline (positive = left of the travel
/// direction) plus the heading error against the local track tangent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneFrame {
    pub offset: f64,
    pub heading_error: f64,
}

pub fn lateral_offset(track: &Track, state: &CarState) -> LaneFrame {
    let p = state.position();
    let proj = track.project(p);
    let seg_dir = (track.centerline()[proj.segment + 1] - track.centerline()[proj.segment])
        .normalized();
    let offset = seg_dir.cross(p - proj.point);
    let heading_error = normalize_angle(state.heading - seg_dir.angle());
    LaneFrame {
        offset,
        heading_error,
    }
}

/// Rangefinder (and optional raster) snapshot of the lane around a pose.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// Ray distances in meters, clamped to `ray_max`, ordered from -90 to
    /// +90 degrees in the ego frame.
    pub rays: Vec<f64>,
    /// Flattened G x G lane-boundary raster in [0, 1], row-major with row 0
    /// nearest the car; `None` unless `raster_size > 0`.
    pub raster: Option<Vec<f64>>,
}

pub fn observe(track: &Track, state: &CarState, sim: &SimConfig) -> Observation {
    let origin = state.position();
    let n = sim.n_rays;
    let mut rays = Vec::with_capacity(n);
    for k in 0..n {
        let rel = if n == 1 {
            0.0
        } else {
            -FRAC_PI_2 + std::f64::consts::PI * k as f64 / (n - 1) as f64
        };
        let dir = Vec2::from_angle(state.heading + rel);
        rays.push(track.ray_distance(origin, dir, sim.ray_max));
    }

    let raster = (sim.raster_size > 0).then(|| {
        let g = sim.raster_size;
        let w = sim.raster_window;
        let cell = w / g as f64;
        let fwd = Vec2::from_angle(state.heading);
        let left = fwd.perp();
        let mut values = Vec::with_capacity(g * g);
        for row in 0..g {
            let x_fwd = w * (row as f64 + 0.5) / g as f64;
            for col in 0..g {
                let y_left = w * (col as f64 + 0.5) / g as f64 - w / 2.0;
                let world = origin + fwd * x_fwd + left * y_left;
                let d = track.project(world).dist_sq.sqrt();
                let v = 1.0 - (d - track.half_width()).abs() / cell;
                values.push(v.clamp(0.0, 1.0));
            }
        }
        values
    });

    Observation { rays, raster }
}

/// Episode termination verdict, checked in priority order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    OutOfLane,
    LapComplete,
    StepLimit,
    Running,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::OutOfLane => "out_of_lane",
            Termination::LapComplete => "lap_complete",
            Termination::StepLimit => "step_limit",
            Termination::Running => "running",
        }
    }
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn is_terminated(track: &Track, state: &CarState, max_steps: u32) -> Termination {
    if lateral_offset(track, state).offset.abs() > track.half_width() {
        Termination::OutOfLane
    } else if state.progress >= track.total_length() {
        Termination::LapComplete
    } else if state.step_index >= max_steps {
        Termination::StepLimit
    } else {
        Termination::Running
    }
}
