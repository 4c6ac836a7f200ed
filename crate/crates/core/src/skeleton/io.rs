//! JSON file format for skeleton sequences.
//!
//! ```text
//! { "n": int, "root": int, "edges": [[child, parent], ...], "label": string | null,
//!   "frames": [ { "t": float, "coords": [[x, y, z], ...] }, ... ] }
//! ```
//!
//! The canonical form keeps the keys in that order, writes one frame per line
//! and prints every float with 17 significant digits, so a save after a load
//! reproduces the file byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::Vector3;
use serde::Deserialize;

use super::{Hierarchy, SkeletonFrame, SkeletonSequence};
use crate::error::{Error, Result};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSequence {
    n: usize,
    root: usize,
    edges: Vec<[usize; 2]>,
    label: Option<String>,
    frames: Vec<RawFrame>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFrame {
    t: f64,
    coords: Vec<[f64; 3]>,
}

pub fn parse_sequence(text: &str) -> Result<SkeletonSequence> {
    let raw: RawSequence = serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("line {} column {}: {e}", e.line(), e.column())))?;
    let hierarchy = Hierarchy::new(raw.n, raw.root, raw.edges.iter().map(|e| (e[0], e[1])).collect())?;
    let frames = raw
        .frames
        .into_iter()
        .map(|f| SkeletonFrame {
            t: f.t,
            coords: f.coords.iter().map(|c| Vector3::new(c[0], c[1], c[2])).collect(),
        })
        .collect();
    SkeletonSequence::new(hierarchy, frames, raw.label)
}

pub fn load_sequence(path: impl AsRef<Path>) -> Result<SkeletonSequence> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_sequence(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        Error::Schema(m) => Error::Schema(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn save_sequence(seq: &SkeletonSequence, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_canonical_json(seq))?;
    Ok(())
}

/// 17 significant digits, enough to round-trip any `f64`.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_canonical_json(seq: &SkeletonSequence) -> String {
    let h = &seq.hierarchy;
    let mut s = String::new();
    let edges: Vec<String> = h.edges().iter().map(|(c, p)| format!("[{c},{p}]")).collect();
    let label = match &seq.label {
        Some(l) => serde_json::to_string(l).expect("string serialization"),
        None => "null".to_string(),
    };
    let _ = writeln!(
        s,
        "{{\"n\":{},\"root\":{},\"edges\":[{}],\"label\":{},\"frames\":[",
        h.n(),
        h.root(),
        edges.join(","),
        label
    );
    for (k, f) in seq.frames.iter().enumerate() {
        let coords: Vec<String> = f
            .coords
            .iter()
            .map(|c| format!("[{},{},{}]", fmt_f64(c.x), fmt_f64(c.y), fmt_f64(c.z)))
            .collect();
        let _ = write!(s, "{{\"t\":{},\"coords\":[{}]}}", fmt_f64(f.t), coords.join(","));
        s.push_str(if k + 1 < seq.frames.len() { ",\n" } else { "\n" });
    }
    s.push_str("]}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"n": 2, "root": 0, "edges": [[1, 0]], "label": null,
        "frames": [{"t": 0.0, "coords": [[0,0,0],[0,0,1]]}, {"t": 0.5, "coords": [[0,0,0],[0,1,1]]}]}"#;

    #[test]
    fn minimal_file_parses() {
        let s = parse_sequence(MINIMAL).unwrap();
        assert_eq!(s.frames.len(), 2);
        assert_eq!(s.hierarchy.n(), 2);
        assert!(s.label.is_none());
    }

    #[test]
    fn duplicate_parent_edge_is_schema_error() {
        let text = r#"{"n": 3, "root": 0, "edges": [[1, 0], [1, 2]], "label": "x",
            "frames": [{"t": 0.0, "coords": [[0,0,0],[0,0,1],[1,0,0]]}, {"t": 1.0, "coords": [[0,0,0],[0,0,1],[1,0,0]]}]}"#;
        assert!(matches!(parse_sequence(text), Err(Error::Schema(_))));
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = parse_sequence("{\"n\": 2,\n \"root\": }").unwrap_err();
        match err {
            Error::Parse(m) => assert!(m.contains("line 2"), "{m}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn canonical_form_is_a_fixed_point() {
        let s = parse_sequence(MINIMAL).unwrap();
        let text = to_canonical_json(&s);
        let again = to_canonical_json(&parse_sequence(&text).unwrap());
        assert_eq!(text, again);
        assert_eq!(parse_sequence(&text).unwrap(), s);
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 1.7976931348623157e308, 5e-324] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}
