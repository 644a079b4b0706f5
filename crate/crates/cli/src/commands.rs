use std::cmp::Ordering;
use std::path::Path;
use std::time::Instant;

use serde_json::json;

use netrel::hazard::{MagnitudeSampler, TruncExpMagnitude};
use netrel::montecarlo::{event_magnitude, event_probs, ConnectivityCheck, DfsCheck, McOptions};
use netrel::neural::{Loss, TrainConfig};
use netrel::surrogates::{
    generate_classifier_dataset, generate_e2e_dataset, oat_sensitivity, ranking_csv,
    train_classifier, train_e2e, ClassifierDataConfig, ClassifierSurrogate, E2eDataConfig,
    EndToEndSurrogate, OatEstimator, OatSettings, SplitDataset, CLASSIFIER_HIDDEN, E2E_HIDDEN,
    E2E_LR_FINAL,
};
use netrel::{estimate_connectivity, estimate_probabilistic_event, Scenario, TransportNetwork};

use crate::config::{load_magnitude_dist, read, write};
use crate::{
    CliError, EstimatorKind, ExactArgs, Kind, LabelWith, MagnitudeArgs, PredictArgs, RunConfig,
    SensitivityArgs, SimulateArgs, TrainArgs,
};

/// Magnitude distribution used by `sensitivity` when none is given.
pub const SENSITIVITY_DIST: TruncExpMagnitude = TruncExpMagnitude {
    beta: 0.76,
    m_min: 7.3,
    m_max: 7.9,
};

fn sampler(args: &MagnitudeArgs) -> Result<Option<MagnitudeSampler>, CliError> {
    match (&args.magnitude, &args.magnitude_dist) {
        (Some(m), None) => Ok(Some(MagnitudeSampler::Fixed(*m))),
        (None, Some(path)) => Ok(Some(MagnitudeSampler::TruncExp(load_magnitude_dist(path)?))),
        (None, None) => Ok(None),
        (Some(_), Some(_)) => Err(CliError::Usage(
            "give --magnitude or --magnitude-dist, not both".into(),
        )),
    }
}

fn require_sampler(args: &MagnitudeArgs) -> Result<MagnitudeSampler, CliError> {
    sampler(args)?
        .ok_or_else(|| CliError::Usage("one of --magnitude or --magnitude-dist is required".into()))
}

fn check_model_dims(model_inputs: usize, scenario: &Scenario) -> Result<(), CliError> {
    let l = scenario.num_links();
    if model_inputs != l {
        return Err(CliError::Data(format!(
            "model expects {model_inputs} inputs but the network has {l} roadways"
        )));
    }
    Ok(())
}

pub fn simulate(cfg: &RunConfig, args: &SimulateArgs) -> Result<(), CliError> {
    let scenario = cfg.scenario()?;
    let seed = cfg.seed();
    let opts = McOptions::with_workers(cfg.workers()?);
    let magnitudes = require_sampler(&args.magnitude)?;
    if args.samples == 0 {
        return Err(CliError::Usage("--samples must be >= 1".into()));
    }
    let checker: Box<dyn ConnectivityCheck> = match args.checker.as_str() {
        "dfs" => Box::new(DfsCheck),
        other => match other.strip_prefix("classifier:") {
            Some(path) => {
                let c = ClassifierSurrogate::from_json(&read(Path::new(path))?)?
                    .with_threshold(args.threshold)?;
                check_model_dims(c.input_dim(), &scenario)?;
                Box::new(c)
            }
            None => {
                return Err(CliError::Usage(format!(
                    "unknown checker {other:?}; use dfs or classifier:<file>"
                )))
            }
        },
    };

    let estimate = match magnitudes {
        MagnitudeSampler::Fixed(m) if !args.residuals => {
            let probs = scenario.roadway_probs(m, None)?;
            estimate_connectivity(
                scenario.network(),
                &probs,
                args.samples,
                checker.as_ref(),
                seed,
                opts,
            )?
        }
        _ => {
            let inner = args.inner.min(args.samples);
            if inner == 0 || !args.samples.is_multiple_of(inner) {
                return Err(CliError::Usage(format!(
                    "--samples {} must be a multiple of --inner {}",
                    args.samples, args.inner
                )));
            }
            estimate_probabilistic_event(
                &scenario,
                magnitudes,
                args.samples / inner,
                inner,
                args.residuals,
                checker.as_ref(),
                seed,
                opts,
            )?
        }
    };
    let dir = cfg.output_dir()?;
    write(&dir.join("estimate.json"), &estimate.summary_json())?;
    write(&dir.join("convergence.csv"), &estimate.trace_csv())?;
    println!("{}", estimate.summary_json());
    Ok(())
}

fn parse_hidden(text: &Option<String>, default: &[usize]) -> Result<Vec<usize>, CliError> {
    match text {
        None => Ok(default.to_vec()),
        Some(s) => s
            .split(',')
            .map(|w| match w.trim().parse::<usize>() {
                Ok(n) if n > 0 => Ok(n),
                _ => Err(CliError::Usage(format!("bad hidden width {w:?}"))),
            })
            .collect(),
    }
}

fn history_csv(history: &[f64]) -> String {
    let mut out = String::from("epoch,loss\n");
    for (i, l) in history.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, l));
    }
    out
}

fn write_dataset(path: &Option<std::path::PathBuf>, data: &SplitDataset) -> Result<(), CliError> {
    if let Some(p) = path {
        let mut all = data.train.clone();
        all.extend(&data.eval)?;
        write(p, &all.to_csv()?)?;
    }
    Ok(())
}

pub fn train(cfg: &RunConfig, args: &TrainArgs) -> Result<(), CliError> {
    let scenario = cfg.scenario()?;
    let seed = cfg.seed();
    let workers = cfg.workers()?;
    let dir = cfg.output_dir()?;
    let started = Instant::now();
    match args.kind {
        Kind::Classifier => {
            let hidden = parse_hidden(&args.hidden, &CLASSIFIER_HIDDEN)?;
            let mut dc = ClassifierDataConfig::new(args.samples.unwrap_or(10_000), seed);
            dc.realizations_per_magnitude = args.realizations;
            dc.with_residuals = args.residuals;
            dc.augment_failures = args.augment;
            dc.workers = workers;
            let data = generate_classifier_dataset(&scenario, &dc)?;
            write_dataset(&args.dataset_out, &data)?;
            let mut tc = TrainConfig::new(Loss::Bce, args.epochs.unwrap_or(150), args.batch);
            tc.learning_rate = args.lr;
            tc.shuffle_seed = seed;
            tc.final_lr_fraction = args.lr_final.unwrap_or(1.0);
            let surrogate = train_classifier(&data, &hidden, &tc, seed)?;
            write(&dir.join("classifier_model.json"), &surrogate.to_json())?;
            write(
                &dir.join("classifier_loss.csv"),
                &history_csv(&surrogate.history),
            )?;
            let metrics = surrogate
                .metrics
                .map(|m| m.to_json())
                .unwrap_or_else(|| "{}".into());
            write(&dir.join("classifier_metrics.json"), &metrics)?;
            println!("{metrics}");
        }
        Kind::E2e => {
            let hidden = parse_hidden(&args.hidden, &E2E_HIDDEN)?;
            if matches!(
                args.mag_lo.partial_cmp(&args.mag_hi),
                None | Some(Ordering::Greater)
            ) {
                return Err(CliError::Usage("--mag-lo must not exceed --mag-hi".into()));
            }
            let mut dc = E2eDataConfig::new(
                args.magnitudes.unwrap_or(3000),
                args.topologies.unwrap_or(100_000),
                seed,
            );
            dc.sampler = MagnitudeSampler::Uniform {
                lo: args.mag_lo,
                hi: args.mag_hi,
            };
            dc.residual_fraction = if args.no_residuals {
                0.0
            } else {
                args.residual_fraction
            };
            dc.workers = workers;
            let data = match args.label_with {
                LabelWith::Dfs => generate_e2e_dataset(&scenario, &DfsCheck, &dc)?,
                LabelWith::Classifier => {
                    let path = args.classifier.as_ref().ok_or_else(|| {
                        CliError::Usage(
                            "--classifier <model> is required unless --label-with dfs".into(),
                        )
                    })?;
                    let c = ClassifierSurrogate::from_json(&read(path)?)?;
                    check_model_dims(c.input_dim(), &scenario)?;
                    generate_e2e_dataset(&scenario, &c, &dc)?
                }
            };
            write_dataset(&args.dataset_out, &data)?;
            let mut tc = TrainConfig::new(Loss::Mse, args.epochs.unwrap_or(2000), args.batch);
            tc.learning_rate = args.lr;
            tc.shuffle_seed = seed;
            tc.final_lr_fraction = args.lr_final.unwrap_or(E2E_LR_FINAL);
            let (surrogate, history, metrics) = train_e2e(&data, &hidden, &tc, seed)?;
            write(&dir.join("e2e_model.json"), &surrogate.to_json())?;
            write(&dir.join("e2e_loss.csv"), &history_csv(&history))?;
            let metrics = match metrics {
                Some(m) => {
                    serde_json::to_string_pretty(&json!({ "alpha_qoi": m.alpha_qoi, "mse": m.mse }))
                        .expect("json")
                }
                None => "{}".into(),
            };
            write(&dir.join("e2e_metrics.json"), &metrics)?;
            println!("{metrics}");
        }
    }
    log::info!(
        "training finished in {:.2} s",
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

pub fn predict(cfg: &RunConfig, args: &PredictArgs) -> Result<(), CliError> {
    let scenario = cfg.scenario()?;
    let seed = cfg.seed();
    let surrogate = EndToEndSurrogate::from_json(&read(&args.model)?)?;
    check_model_dims(surrogate.input_dim(), &scenario)?;
    let magnitudes = require_sampler(&args.magnitude)?;
    if args.events == 0 {
        return Err(CliError::Usage("--events must be >= 1".into()));
    }
    let started = Instant::now();
    let mut probs = Vec::with_capacity(args.events as usize * scenario.num_links());
    let mut mags = Vec::with_capacity(args.events as usize);
    for i in 0..args.events {
        mags.push(event_magnitude(magnitudes, seed, i));
        probs.extend(event_probs(&scenario, magnitudes, i, args.residuals, seed)?);
    }
    let pred = surrogate.predict_batch(&probs)?;
    let elapsed = started.elapsed().as_secs_f64();
    let mean = pred.iter().sum::<f64>() / pred.len() as f64;

    let mut csv = String::from("event,magnitude,prediction\n");
    for (i, (m, p)) in mags.iter().zip(&pred).enumerate() {
        csv.push_str(&format!("{i},{m},{p}\n"));
    }
    let dir = cfg.output_dir()?;
    write(&dir.join("predictions.csv"), &csv)?;
    let summary = serde_json::to_string_pretty(&json!({
        "grand_mean": mean,
        "n_events": args.events,
        "elapsed_seconds": elapsed,
    }))
    .expect("json");
    write(&dir.join("prediction_summary.json"), &summary)?;
    println!("{summary}");
    Ok(())
}

pub fn sensitivity(cfg: &RunConfig, args: &SensitivityArgs) -> Result<(), CliError> {
    let scenario = cfg.scenario()?;
    let magnitudes =
        sampler(&args.magnitude)?.unwrap_or(MagnitudeSampler::TruncExp(SENSITIVITY_DIST));
    let mut settings = OatSettings::new(magnitudes, args.events, cfg.seed());
    settings.amplification = args.amplification;
    settings.with_residuals = args.residuals;
    settings.workers = cfg.workers()?;
    let model;
    let estimator = match args.estimator {
        EstimatorKind::McDfs => OatEstimator::McDfs {
            n_inner: args.inner,
        },
        EstimatorKind::E2e => {
            let path = args.model.as_ref().ok_or_else(|| {
                CliError::Usage("--model is required with --estimator e2e".into())
            })?;
            model = EndToEndSurrogate::from_json(&read(path)?)?;
            check_model_dims(model.input_dim(), &scenario)?;
            OatEstimator::EndToEnd(&model)
        }
    };
    let report = oat_sensitivity(&scenario, estimator, &settings)?;
    let dir = cfg.output_dir()?;
    write(&dir.join("ranking.csv"), &ranking_csv(&report.entries))?;
    let summary = serde_json::to_string_pretty(&json!({
        "estimator": estimator.name(),
        "baseline": report.baseline,
        "amplification": args.amplification,
        "elapsed_seconds": report.total_seconds(),
    }))
    .expect("json");
    write(&dir.join("sensitivity_summary.json"), &summary)?;
    println!("{summary}");
    Ok(())
}

pub fn exact(cfg: &RunConfig, args: &ExactArgs) -> Result<(), CliError> {
    let (net, probs) = match (&args.probs, args.magnitude) {
        (Some(text), None) => {
            let net = match &cfg.network {
                Some(path) => TransportNetwork::from_json(&read(path)?)?,
                None => cfg.scenario()?.network().clone(),
            };
            let probs = text
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<f64>()
                        .map_err(|_| CliError::Usage(format!("bad probability {p:?}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            (net, probs)
        }
        (None, Some(m)) => {
            let scenario = cfg.scenario()?;
            let probs = scenario.roadway_probs(m, None)?;
            (scenario.network().clone(), probs)
        }
        _ => {
            return Err(CliError::Usage(
                "give exactly one of --probs or --magnitude".into(),
            ))
        }
    };
    let reliability = net.exact_reliability(&probs)?;
    let out = serde_json::to_string_pretty(&json!({
        "reliability": reliability,
        "num_links": net.num_links(),
    }))
    .expect("json");
    write(&cfg.output_dir()?.join("exact.json"), &out)?;
    println!("{out}");
    Ok(())
}
