//! Sequence files, output directories and CSV helpers.
//!
//! A directory input holds `*.json` files, read in file-name order. Each is
//! either a skeleton sequence (has a `frames` key) or a posture sequence as
//! written by `convert`:
//!
//! ```text
//! { "label": string | null, "duration": float, "grid": [float, ...],
//!   "postures": [ [[x, y, z], ...], ... ] }
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use motionlab::motion::resample_sequence;
use motionlab::skeleton::parse_sequence;
use motionlab::{Error, Posture, PostureSequence};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::CliError;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PostureFile {
    label: Option<String>,
    duration: f64,
    grid: Vec<f64>,
    postures: Vec<Posture>,
}

/// A named sequence read from disk, with its class label when known.
#[derive(Clone, Debug)]
pub struct Named {
    pub name: String,
    pub label: Option<String>,
    pub seq: PostureSequence,
}

pub fn parse_any(text: &str) -> motionlab::Result<(Option<String>, PostureSequence)> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("line {} column {}: {e}", e.line(), e.column())))?;
    if value.get("frames").is_some() {
        let s = parse_sequence(text)?;
        let label = s.label.clone();
        return Ok((label, s.to_posture_sequence()?));
    }
    let f: PostureFile = serde_json::from_value(value).map_err(|e| Error::Schema(e.to_string()))?;
    if f.postures.is_empty() {
        return Err(Error::Schema("posture sequence has no postures".into()));
    }
    Ok((f.label, PostureSequence::new(f.grid, f.postures, f.duration)?))
}

pub fn posture_json(label: Option<&str>, seq: &PostureSequence) -> String {
    let f = PostureFile {
        label: label.map(str::to_string),
        duration: seq.duration(),
        grid: seq.grid().to_vec(),
        postures: seq.postures().to_vec(),
    };
    let mut s = serde_json::to_string(&f).expect("posture sequences serialize");
    s.push('\n');
    s
}

/// Reads one sequence file and applies the configured resampling.
pub fn load_file(path: &Path, cfg: &RunConfig) -> Result<Named, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let (label, seq) = parse_any(&text).map_err(|e| CliError::from(e).context(path))?;
    let seq = match cfg.resample {
        Some(l) => resample_sequence(&seq, l, &cfg.kernel()).map_err(|e| CliError::from(e).context(path))?,
        None => seq,
    };
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Named { name, label, seq })
}

pub fn list_json(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for e in entries {
        let p = e.map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?.path();
        if p.is_file() && p.extension().is_some_and(|x| x == "json") {
            files.push(p);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(CliError::Data(format!("{}: no .json sequence files", dir.display())));
    }
    Ok(files)
}

pub fn load_dir(dir: &Path, cfg: &RunConfig) -> Result<Vec<Named>, CliError> {
    list_json(dir)?.iter().map(|p| load_file(p, cfg)).collect()
}

/// Labels of every sequence; a data error if any is missing.
pub fn labels(seqs: &[Named]) -> Result<Vec<String>, CliError> {
    seqs.iter()
        .map(|s| {
            s.label
                .clone()
                .ok_or_else(|| CliError::Data(format!("sequence {} has no class label", s.name)))
        })
        .collect()
}

/// Writes into the output directory; `name` must be a bare file name.
pub struct Out {
    dir: PathBuf,
}

impl Out {
    pub fn create(dir: &Path) -> Result<Out, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
        Ok(Out { dir: dir.to_path_buf() })
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        let p = Path::new(name);
        if p.components().count() != 1 || p.file_name().is_none() {
            return Err(CliError::Data(format!(
                "refusing to write {name:?} outside the output directory"
            )));
        }
        let path = self.dir.join(p);
        fs::write(&path, contents).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
        s.push('\n');
        self.write(name, &s)
    }
}

pub fn f(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV with a `t` column followed by one column per curve.
pub fn curves_csv(grid: &[f64], names: &[String], curves: &[&[f64]]) -> String {
    let mut s = String::from("t");
    for n in names {
        s.push(',');
        s.push_str(n);
    }
    s.push('\n');
    for (l, t) in grid.iter().enumerate() {
        s.push_str(&f(*t));
        for c in curves {
            let _ = write!(s, ",{}", f(c[l]));
        }
        s.push('\n');
    }
    s
}

/// CSV with columns `step,part,x,y,z`.
pub fn postures_csv(postures: &[Posture]) -> String {
    let mut s = String::from("step,part,x,y,z\n");
    for (l, p) in postures.iter().enumerate() {
        for (k, part) in p.parts().iter().enumerate() {
            let c = part.coords();
            let _ = writeln!(s, "{l},{k},{},{},{}", f(c.x), f(c.y), f(c.z));
        }
    }
    s
}
