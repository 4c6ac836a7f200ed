//! Pairwise motion distances and nearest-neighbour recognition.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::{align_tsrvf, compute_tsrvf, karcher_mean, AlignOptions, PostureSequence, Tsrvf};
use crate::posture::Posture;

/// Karcher mean of every posture of every sequence: a central reference for
/// transporting velocity fields.
pub fn reference_posture(seqs: &[PostureSequence]) -> Result<Posture> {
    let all: Vec<Posture> = seqs.iter().flat_map(|s| s.postures().iter().cloned()).collect();
    Ok(karcher_mean(&all, 200, 1e-10)?.posture)
}

pub fn tsrvfs(seqs: &[PostureSequence], y_r: &Posture) -> Result<Vec<Tsrvf>> {
    seqs.par_iter().map(|s| compute_tsrvf(s, y_r)).collect()
}

/// `d[i][j]`: distance with sequence `i` warped onto sequence `j`. The
/// diagonal is exactly zero.
pub fn distance_matrix(fields: &[Tsrvf], opts: &AlignOptions) -> Result<Vec<Vec<f64>>> {
    let k = fields.len();
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .filter(|(i, j)| i != j)
        .collect();
    let ds = pairs
        .par_iter()
        .map(|&(i, j)| align_tsrvf(&fields[i], &fields[j], opts).map(|a| a.distance))
        .collect::<Result<Vec<_>>>()?;
    let mut out = vec![vec![0.0; k]; k];
    for (&(i, j), d) in pairs.iter().zip(ds) {
        out[i][j] = d;
    }
    Ok(out)
}

/// Square CSV: a header row of names, then one row per sequence.
pub fn matrix_csv(names: &[String], d: &[Vec<f64>]) -> String {
    let mut s = String::from("name");
    for n in names {
        s.push(',');
        s.push_str(n);
    }
    s.push('\n');
    for (n, row) in names.iter().zip(d) {
        s.push_str(n);
        for x in row {
            let _ = write!(s, ",{x:.16e}");
        }
        s.push('\n');
    }
    s
}

/// Mean distance between every pair of classes; the within-class entries
/// skip the zero diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassTable {
    pub classes: Vec<String>,
    pub mean: Vec<Vec<f64>>,
}

pub fn class_table(labels: &[String], d: &[Vec<f64>]) -> ClassTable {
    let classes: Vec<String> = labels
        .iter()
        .cloned()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let idx: BTreeMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let c = classes.len();
    let mut sum = vec![vec![0.0; c]; c];
    let mut cnt = vec![vec![0usize; c]; c];
    for i in 0..labels.len() {
        for j in 0..labels.len() {
            if i != j {
                let (a, b) = (idx[labels[i].as_str()], idx[labels[j].as_str()]);
                sum[a][b] += d[i][j];
                cnt[a][b] += 1;
            }
        }
    }
    let mean = (0..c)
        .map(|a| {
            (0..c)
                .map(|b| {
                    if cnt[a][b] > 0 {
                        sum[a][b] / cnt[a][b] as f64
                    } else {
                        f64::NAN
                    }
                })
                .collect()
        })
        .collect();
    ClassTable { classes, mean }
}

impl ClassTable {
    pub fn to_csv(&self) -> String {
        matrix_csv(&self.classes, &self.mean)
    }
}

/// Per-class shuffled split; the first `⌈frac·count⌉` of each class train.
pub fn split_train_test(labels: &[String], train_frac: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_class.entry(l.as_str()).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for idx in by_class.values_mut() {
        idx.shuffle(&mut rng);
        let n = ((train_frac * idx.len() as f64).ceil() as usize).min(idx.len());
        train.extend_from_slice(&idx[..n]);
        test.extend_from_slice(&idx[n..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub predicted: String,
    pub neighbour: usize,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub predictions: Vec<Prediction>,
    /// Fraction of correct predictions when true labels are known.
    pub accuracy: Option<f64>,
}

/// Label of the nearest training motion (test warped onto train); ties go
/// to the lower training index.
pub fn classify_1nn(
    train: &[(String, Tsrvf)],
    test: &[Tsrvf],
    truth: Option<&[String]>,
    opts: &AlignOptions,
) -> Result<Classification> {
    if train.is_empty() {
        return Err(Error::InvalidArgument("1-NN needs at least one training motion".into()));
    }
    let predictions = test
        .par_iter()
        .map(|h| {
            let mut best = (f64::INFINITY, 0usize);
            for (j, (_, g)) in train.iter().enumerate() {
                let d = align_tsrvf(h, g, opts)?.distance;
                if d < best.0 {
                    best = (d, j);
                }
            }
            Ok(Prediction {
                predicted: train[best.1].0.clone(),
                neighbour: best.1,
                distance: best.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let accuracy = truth.map(|t| {
        let ok = predictions.iter().zip(t).filter(|(p, l)| &p.predicted == *l).count();
        if predictions.is_empty() {
            1.0
        } else {
            ok as f64 / predictions.len() as f64
        }
    });
    Ok(Classification { predictions, accuracy })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_stratified_and_deterministic() {
        let labels: Vec<String> = (0..20)
            .map(|i| if i % 2 == 0 { "a" } else { "b" }.to_string())
            .collect();
        let (tr, te) = split_train_test(&labels, 0.8, 3);
        assert_eq!(tr.len(), 16);
        assert_eq!(te.len(), 4);
        assert_eq!(te.iter().filter(|&&i| labels[i] == "a").count(), 2);
        assert_eq!(split_train_test(&labels, 0.8, 3), (tr, te));
    }

    #[test]
    fn class_table_means() {
        let labels = vec!["a".to_string(), "a".into(), "b".into()];
        let d = vec![vec![0.0, 1.0, 4.0], vec![3.0, 0.0, 6.0], vec![5.0, 7.0, 0.0]];
        let t = class_table(&labels, &d);
        assert_eq!(t.mean[0][0], 2.0);
        assert_eq!(t.mean[0][1], 5.0);
        assert_eq!(t.mean[1][0], 6.0);
        assert!(t.mean[1][1].is_nan());
    }
}
