//! Track file format.
//!
//! Text, line 1 `track-v1 <id> <half_width> <seed>`, then one `x y` pair per
//! line with 9 significant digits; the final point repeats the first.

use super::{format_coord, Track, TrackError};
use crate::fsutil::write_atomic;
use crate::geometry::Vec2;
use std::path::Path;

pub fn track_to_string(track: &Track) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "track-v1 {} {} {}\n",
        track.id(),
        track.half_width(),
        track.seed()
    ));
    for p in track.centerline() {
        out.push_str(&format_coord(p.x));
        out.push(' ');
        out.push_str(&format_coord(p.y));
        out.push('\n');
    }
    out
}

pub fn save_track(track: &Track, path: &Path) -> Result<(), TrackError> {
    write_atomic(path, &track_to_string(track))?;
    Ok(())
}

pub fn load_track(path: &Path) -> Result<Track, TrackError> {
    let text = std::fs::read_to_string(path)?;
    parse_track(&text)
}

pub(crate) fn parse_track(text: &str) -> Result<Track, TrackError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| TrackError::Malformed("empty file".to_string()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != "track-v1" {
        return Err(TrackError::Malformed(format!(
            "expected header `track-v1 <id> <half_width> <seed>`, got {header:?}"
        )));
    }
    let id = fields[1];
    let half_width: f64 = fields[2]
        .parse()
        .map_err(|_| TrackError::Malformed(format!("bad half_width {:?}", fields[2])))?;
    let seed: u64 = fields[3]
        .parse()
        .map_err(|_| TrackError::Malformed(format!("bad seed {:?}", fields[3])))?;

    let mut points = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(xs), Some(ys), None) = (it.next(), it.next(), it.next()) else {
            return Err(TrackError::Malformed(format!(
                "line {}: expected `x y`, got {line:?}",
                lineno + 2
            )));
        };
        let x: f64 = xs.parse().map_err(|_| {
            TrackError::Malformed(format!("line {}: bad x {xs:?}", lineno + 2))
        })?;
        let y: f64 = ys.parse().map_err(|_| {
            TrackError::Malformed(format!("line {}: bad y {ys:?}", lineno + 2))
        })?;
        points.push(Vec2::new(x, y));
    }
    Track::new(id, points, half_width, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::track::{generate_track, TrackGenParams};

    #[test]
    fn round_trip_is_identity() {
        let track = generate_track(3, &TrackGenParams::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.track");
        save_track(&track, &path).unwrap();
        let loaded = load_track(&path).unwrap();
        assert_eq!(track, loaded);
        // Byte-stable on re-save.
        save_track(&loaded, &path).unwrap();
        assert_eq!(track_to_string(&track), std::fs::read_to_string(&path).unwrap());
    }

    #[test]
    fn two_point_file_rejected() {
        let text = "track-v1 tiny 4 0\n0 0\n0 0\n";
        assert!(matches!(
            parse_track(text),
            Err(TrackError::TooFewPoints(_))
        ));
    }

    #[test]
    fn square_loads_with_length_four() {
        let text = "track-v1 square 0.5 0\n0 0\n1 0\n1 1\n0 1\n0 0\n";
        let track = parse_track(text).unwrap();
        assert_eq!(track.total_length(), 4.0);
        assert_eq!(track.id(), "square");
        assert_eq!(track.half_width(), 0.5);
    }

    #[test]
    fn unclosed_file_rejected() {
        let text = "track-v1 open 4 0\n0 0\n1 0\n1 1\n0 1\n";
        assert!(matches!(parse_track(text), Err(TrackError::NotClosed(_))));
    }

    #[test]
    fn garbage_rejected() {
        assert!(parse_track("").is_err());
        assert!(parse_track("track-v2 x 4 0\n").is_err());
        assert!(parse_track("track-v1 x 4 0\n0 zebra\n").is_err());
    }
}
