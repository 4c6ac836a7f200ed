//! One function per subcommand. Each reads its inputs, runs the analysis and
//! writes its report files into the output directory.

use std::fmt::Write as _;
use std::path::Path;

use motionlab::gp::{rate_band, select_kernel, RateGP, SeKernel};
use motionlab::motion::{alignment_csv, cumulative_rate, uniform_grid, RateFunction};
use motionlab::sir::{sequence_coords, sir_directions, window_indices, SirOptions};
use motionlab::skeleton::to_canonical_json;
use motionlab::stats::{fit_map, fit_mle, MapHyper, MapOptions, MleOptions, MotionDistribution};
use motionlab::workflows::{
    aligned_sequence, best_practice, class_table, classify_1nn, default_s_values, distance_matrix, find_bottleneck,
    find_bottleneck_printed, matrix_csv, motion_variation, rate_analysis, reference_posture, split_train_test,
    synthesize_dataset, tsrvfs, BottleneckReport, DatasetSpec, PracticeOptions, RateRecord,
};
use motionlab::{Posture, PostureSequence};
use serde::{Deserialize, Serialize};

use crate::config::{FitMethod, RunConfig};
use crate::io::{self, curves_csv, f, load_dir, load_file, Named, Out};
use crate::CliError;

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn synth(cfg: &RunConfig, spec_path: &Path, out: &Path) -> Result<(), CliError> {
    let mut table: toml::Table = toml::from_str(&read_text(spec_path)?)
        .map_err(|e| CliError::Data(format!("{}: {}", spec_path.display(), e.message())))?;
    let seed = cfg.seed.or_else(|| {
        if table.contains_key("seed") {
            None
        } else {
            Some(cfg.env_seed.unwrap_or(0))
        }
    });
    if let Some(s) = seed {
        let s = i64::try_from(s).map_err(|_| CliError::Usage(format!("seed {s} is too large for a dataset spec")))?;
        table.insert("seed".into(), toml::Value::Integer(s));
    }
    let spec: DatasetSpec = table
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Data(format!("{}: {}", spec_path.display(), e.message())))?;
    let seqs = synthesize_dataset(&spec)?;
    let out = Out::create(out)?;
    let mut labels = String::from("name,label\n");
    let per = spec.per_class;
    for (i, s) in seqs.iter().enumerate() {
        let label = s.label.as_deref().unwrap_or("");
        let name = format!("{label}_{:03}", i % per);
        out.write(&format!("{name}.json"), &to_canonical_json(s))?;
        let _ = writeln!(labels, "{name},{label}");
    }
    out.write("labels.csv", &labels)?;
    out.write(
        "dataset.toml",
        &toml::to_string(&spec).expect("dataset specs serialize"),
    )
}

pub fn convert(cfg: &RunConfig, input: &Path, out: &Path) -> Result<(), CliError> {
    let seqs = load_dir(input, cfg)?;
    let out = Out::create(out)?;
    for s in &seqs {
        out.write(
            &format!("{}.json", s.name),
            &io::posture_json(s.label.as_deref(), &s.seq),
        )?;
    }
    Ok(())
}

fn names(seqs: &[Named]) -> Vec<String> {
    seqs.iter().map(|s| s.name.clone()).collect()
}

fn sequences(seqs: &[Named]) -> Vec<PostureSequence> {
    seqs.iter().map(|s| s.seq.clone()).collect()
}

pub fn dist(cfg: &RunConfig, input: &Path, out: &Path) -> Result<(), CliError> {
    let seqs = load_dir(input, cfg)?;
    let all = sequences(&seqs);
    let y = reference_posture(&all)?;
    let d = distance_matrix(&tsrvfs(&all, &y)?, &cfg.align())?;
    let out = Out::create(out)?;
    out.write("distances.csv", &matrix_csv(&names(&seqs), &d))?;
    if seqs.iter().all(|s| s.label.is_some()) {
        out.write("class_table.csv", &class_table(&io::labels(&seqs)?, &d).to_csv())?;
    }
    out.json("reference_posture.json", &y)
}

/// Input sequences, the reference and its central posture.
fn with_reference(
    cfg: &RunConfig,
    input: &Path,
    reference: Option<&Path>,
) -> Result<(Vec<Named>, Named, Posture), CliError> {
    let seqs = load_dir(input, cfg)?;
    let r = match reference {
        Some(p) => load_file(p, cfg)?,
        None => seqs[0].clone(),
    };
    let y = reference_posture(std::slice::from_ref(&r.seq))?;
    Ok((seqs, r, y))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RatesFile {
    reference: String,
    names: Vec<String>,
    records: Vec<RateRecord>,
}

fn analyse(
    cfg: &RunConfig,
    input: &Path,
    reference: Option<&Path>,
) -> Result<(Vec<Named>, Named, Vec<RateRecord>), CliError> {
    let (seqs, r, y) = with_reference(cfg, input, reference)?;
    let records = rate_analysis(&sequences(&seqs), &r.seq, &y, &cfg.align())?;
    Ok((seqs, r, records))
}

pub fn align(cfg: &RunConfig, input: &Path, reference: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let (seqs, r, records) = analyse(cfg, input, reference)?;
    let out = Out::create(out)?;
    let mut summary = String::from("name,reference,distance\n");
    for (s, rec) in seqs.iter().zip(&records) {
        out.write(
            &format!("align_{}.csv", s.name),
            &alignment_csv(&rec.warping, &rec.delta, &rec.rate),
        )?;
        let _ = writeln!(summary, "{},{},{}", s.name, r.name, f(rec.distance));
    }
    out.write("summary.csv", &summary)
}

pub fn rates(cfg: &RunConfig, input: &Path, reference: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let (seqs, r, records) = analyse(cfg, input, reference)?;
    let out = Out::create(out)?;
    let curves: Vec<&[f64]> = records.iter().map(|rec| rec.rate.values.as_slice()).collect();
    out.write("rates.csv", &curves_csv(&records[0].rate.grid, &names(&seqs), &curves))?;
    out.json(
        "rates.json",
        &RatesFile {
            reference: r.name,
            names: names(&seqs),
            records,
        },
    )
}

fn load_rates(path: &Path) -> Result<RatesFile, CliError> {
    let r: RatesFile = read_json(path)?;
    if r.records.is_empty() || r.records.len() != r.names.len() {
        return Err(CliError::Data(format!(
            "{}: expected one record per name",
            path.display()
        )));
    }
    Ok(r)
}

/// Every sequence re-timed onto the reference clock, sampled at `steps` uniform points.
fn aligned_postures(seqs: &[Named], records: &[RateRecord], steps: usize) -> Result<Vec<Vec<Posture>>, CliError> {
    let grid = uniform_grid(steps);
    seqs.iter()
        .zip(records)
        .map(|(s, rec)| {
            let a = aligned_sequence(&s.seq, rec)?;
            Ok(grid
                .iter()
                .map(|&t| a.sample_at(t))
                .collect::<motionlab::Result<Vec<_>>>()?)
        })
        .collect()
}

#[derive(Serialize)]
struct FitReport {
    method: &'static str,
    iterations: Vec<usize>,
    converged: bool,
    objective: Vec<f64>,
}

pub fn fit(cfg: &RunConfig, input: &Path, reference: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let (seqs, _, records) = analyse(cfg, input, reference)?;
    let data = aligned_postures(&seqs, &records, cfg.steps)?;
    let all: Vec<Posture> = data.iter().flatten().cloned().collect();
    let mu0 = motionlab::motion::karcher_mean(&all, 200, 1e-10)?.posture;
    let mut hyper = MapHyper::default_for(mu0);
    hyper.lambda0_sq = cfg.lambda0_sq;
    let (model, report) = match cfg.method {
        FitMethod::Map => {
            let fit = fit_map(&data, &hyper, &MapOptions::default())?;
            let report = FitReport {
                method: "map",
                iterations: vec![fit.sweeps],
                converged: fit.converged,
                objective: fit.objective,
            };
            (fit.dist, report)
        }
        FitMethod::Mle => {
            let mut steps = Vec::with_capacity(cfg.steps);
            let mut iterations = Vec::with_capacity(cfg.steps);
            let mut converged = true;
            for l in 0..cfg.steps {
                let column: Vec<Posture> = data.iter().map(|row| row[l].clone()).collect();
                let fit = fit_mle(&column, &MleOptions::default())?;
                iterations.push(fit.iterations);
                converged &= fit.converged;
                steps.push(fit.dist);
            }
            let report = FitReport {
                method: "mle",
                iterations,
                converged,
                objective: Vec::new(),
            };
            (MotionDistribution { steps, hyper }, report)
        }
    };
    let out = Out::create(out)?;
    out.write("means.csv", &io::postures_csv(&model.means()))?;
    out.json("fit.json", &report)?;
    out.json("model.json", &model)
}

fn load_model(path: &Path) -> Result<MotionDistribution, CliError> {
    let m: MotionDistribution = read_json(path)?;
    if m.len() < 2 {
        return Err(CliError::Data(format!(
            "{}: model needs at least 2 steps",
            path.display()
        )));
    }
    Ok(m)
}

pub fn gp(cfg: &RunConfig, rates_path: &Path, out: &Path) -> Result<(), CliError> {
    let rates: Vec<RateFunction> = load_rates(rates_path)?.records.into_iter().map(|r| r.rate).collect();
    let kernel = SeKernel {
        amplitude_sq: cfg.gp_amplitude_sq,
        lengthscale: cfg.gp_lengthscale,
    };
    let mut model = RateGP::pooled(kernel, cfg.gp_noise, &rates)?;
    if cfg.gp_select {
        model = select_kernel(&model, &[0.01, 0.03, 0.1, 0.3, 1.0], &[0.02, 0.05, 0.1, 0.2, 0.4])?;
    }
    let band = rate_band(&model, &uniform_grid(cfg.band_points), cfg.band_k);
    #[derive(Serialize)]
    struct GpReport {
        amplitude_sq: f64,
        lengthscale: f64,
        noise_var: f64,
        jitter: f64,
        log_marginal_likelihood: f64,
        band_k: f64,
    }
    let out = Out::create(out)?;
    out.write("gp_band.csv", &band.to_csv())?;
    out.json(
        "gp.json",
        &GpReport {
            amplitude_sq: model.kernel().amplitude_sq,
            lengthscale: model.kernel().lengthscale,
            noise_var: model.noise_var(),
            jitter: model.jitter(),
            log_marginal_likelihood: model.log_marginal_likelihood(),
            band_k: cfg.band_k,
        },
    )
}

fn locate_bottleneck(cfg: &RunConfig, records: &[RateRecord]) -> Result<BottleneckReport, CliError> {
    Ok(match cfg.bottleneck() {
        Some(mode) => {
            let rates: Vec<RateFunction> = records.iter().map(|r| r.rate.clone()).collect();
            find_bottleneck(&rates, cfg.window, mode)?
        }
        None => {
            let w: Vec<_> = records.iter().map(|r| r.warping.clone()).collect();
            find_bottleneck_printed(&w, cfg.window)?
        }
    })
}

pub fn bottleneck(cfg: &RunConfig, rates_path: &Path, out: &Path) -> Result<(), CliError> {
    let rates = load_rates(rates_path)?;
    let rep = locate_bottleneck(cfg, &rates.records)?;
    let out = Out::create(out)?;
    out.write("scores.csv", &rep.scores_csv())?;
    out.json("bottleneck.json", &rep)
}

fn sir_options(cfg: &RunConfig) -> SirOptions {
    SirOptions {
        bandwidth: cfg.sir_bandwidth,
        n_directions: cfg.directions,
        reconstruction: cfg.reconstruction,
        ..SirOptions::default()
    }
}

/// Centre of the feature window: the configured value or the bottleneck.
fn t_star(cfg: &RunConfig, records: &[RateRecord]) -> Result<f64, CliError> {
    match cfg.t_star {
        Some(t) => Ok(t),
        None => Ok(locate_bottleneck(cfg, records)?.t_star),
    }
}

pub fn sir(cfg: &RunConfig, input: &Path, reference: Option<&Path>, model: &Path, out: &Path) -> Result<(), CliError> {
    let model = load_model(model)?;
    let (seqs, _, records) = analyse(cfg, input, reference)?;
    let aligned = aligned_postures(&seqs, &records, model.len())?;
    let t = t_star(cfg, &records)?;
    let (s, e) = ((t - cfg.practice_window).max(0.0), (t + cfg.practice_window).min(1.0));
    let range = window_indices(&uniform_grid(model.len()), s, e)?;
    let pairs = aligned
        .iter()
        .zip(&records)
        .map(|(a, rec)| {
            Ok((
                sequence_coords(a, &model, range.clone())?,
                cumulative_rate(&rec.rate, s, e)?,
            ))
        })
        .collect::<motionlab::Result<Vec<_>>>()?;
    let res = sir_directions(&pairs, &sir_options(cfg))?;
    let mut csv = (1..=res.n_directions())
        .map(|i| format!("feature_{i},"))
        .collect::<String>();
    csv.insert_str(0, "name,");
    csv.push_str("rate\n");
    for (sq, (c, r)) in seqs.iter().zip(&pairs) {
        csv.push_str(&sq.name);
        for z in res.project(c)?.iter() {
            let _ = write!(csv, ",{}", f(*z));
        }
        let _ = writeln!(csv, ",{}", f(*r));
    }
    let out = Out::create(out)?;
    out.write("features.csv", &csv)?;
    out.json("sir.json", &res)
}

pub fn bestpractice(
    cfg: &RunConfig,
    input: &Path,
    reference: Option<&Path>,
    model: &Path,
    out: &Path,
) -> Result<(), CliError> {
    let model = load_model(model)?;
    let (seqs, _, records) = analyse(cfg, input, reference)?;
    let aligned = aligned_postures(&seqs, &records, model.len())?;
    let rates: Vec<RateFunction> = records.iter().map(|r| r.rate.clone()).collect();
    let t = t_star(cfg, &records)?;
    let opts = PracticeOptions {
        sir: sir_options(cfg),
        ..PracticeOptions::default()
    };
    let rep = best_practice(&aligned, &rates, &model, t, cfg.practice_window, &opts)?;
    let out = Out::create(out)?;
    out.write("features.csv", &rep.features_csv())?;
    for level in &rep.levels {
        out.write(
            &format!("level_p{}.csv", level.percentile),
            &io::postures_csv(&level.postures),
        )?;
    }
    out.json("practice.json", &rep)
}

pub fn variation(cfg: &RunConfig, model: &Path, out: &Path) -> Result<(), CliError> {
    let model = load_model(model)?;
    let l = cfg.step.unwrap_or(model.len() / 2);
    if l >= model.len() {
        return Err(CliError::Usage(format!(
            "step {l} out of range for a model of {} steps",
            model.len()
        )));
    }
    let rep = motion_variation(&model, l, &default_s_values(cfg.s_points), cfg.n_eigs)?;
    let out = Out::create(out)?;
    out.write("variation.csv", &rep.to_csv())?;
    out.json("variation.json", &rep)
}

pub fn restandardize(cfg: &RunConfig, reference: &Path, rates_path: &Path, out: &Path) -> Result<(), CliError> {
    let r = load_file(reference, cfg)?;
    let rates: Vec<RateFunction> = load_rates(rates_path)?.records.into_iter().map(|r| r.rate).collect();
    let mean = RateFunction::mean(&rates)?;
    let re = motionlab::workflows::restandardize(&r.seq, &mean)?;
    let g = &re.gamma_bar;
    let out = Out::create(out)?;
    out.write(
        "gamma_bar.csv",
        &curves_csv(g.grid(), &["gamma".to_string()], &[g.values()]),
    )?;
    out.write(
        "mean_rate.csv",
        &curves_csv(&mean.grid, &["rate".to_string()], &[&mean.values]),
    )?;
    out.write("reference.json", &io::posture_json(r.label.as_deref(), &re.reference))
}

pub fn classify(cfg: &RunConfig, input: &Path, out: &Path) -> Result<(), CliError> {
    let seqs = load_dir(input, cfg)?;
    let labels = io::labels(&seqs)?;
    let seed = cfg.seed.or(cfg.env_seed).unwrap_or(0);
    let (train, test) = split_train_test(&labels, cfg.train_frac, seed);
    if train.is_empty() || test.is_empty() {
        return Err(CliError::Data("split leaves no training or no test sequences".into()));
    }
    let all = sequences(&seqs);
    let train_seqs: Vec<PostureSequence> = train.iter().map(|&i| all[i].clone()).collect();
    let y = reference_posture(&train_seqs)?;
    let h = tsrvfs(&all, &y)?;
    let train_set: Vec<(String, _)> = train.iter().map(|&i| (labels[i].clone(), h[i].clone())).collect();
    let test_set: Vec<_> = test.iter().map(|&i| h[i].clone()).collect();
    let truth: Vec<String> = test.iter().map(|&i| labels[i].clone()).collect();
    let c = classify_1nn(&train_set, &test_set, Some(&truth), &cfg.align())?;
    let mut csv = String::from("name,truth,predicted,neighbour,distance\n");
    for (&i, p) in test.iter().zip(&c.predictions) {
        let nb = &seqs[train[p.neighbour]].name;
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            seqs[i].name,
            labels[i],
            p.predicted,
            nb,
            f(p.distance)
        );
    }
    #[derive(Serialize)]
    struct Report {
        seed: u64,
        train: Vec<String>,
        test: Vec<String>,
        accuracy: Option<f64>,
    }
    let out = Out::create(out)?;
    out.write("predictions.csv", &csv)?;
    out.json(
        "classification.json",
        &Report {
            seed,
            train: train.iter().map(|&i| seqs[i].name.clone()).collect(),
            test: test.iter().map(|&i| seqs[i].name.clone()).collect(),
            accuracy: c.accuracy,
        },
    )
}
