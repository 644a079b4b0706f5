use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hazard::MagnitudeSampler;
use crate::montecarlo::{
    event_magnitude, fill_topology, per_event_connectivity, ConnectivityCheck, McOptions,
};
use crate::network::DfsScratch;
use crate::neural::{Dataset, Matrix};
use crate::rng::{Domain, StreamRng};
use crate::scenario::{ResidualStream, Scenario};

pub const TRAIN_FRACTION: f64 = 0.9;

#[derive(Debug, Clone)]
pub struct SplitDataset {
    pub train: Dataset,
    pub eval: Dataset,
}

/// Shuffle rows with the stream `(seed, Split, 0)` and cut at
/// `round(fraction · len)`.
pub fn split_dataset(data: &Dataset, fraction: f64, seed: u64) -> Result<SplitDataset> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidArgument(format!(
            "train fraction {fraction} must lie in [0, 1]"
        )));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut StreamRng::new(seed, Domain::Split, 0));
    let cut = (fraction * data.len() as f64).round() as usize;
    Ok(SplitDataset {
        train: data.subset(&order[..cut]),
        eval: data.subset(&order[cut..]),
    })
}

#[derive(Debug, Clone, Copy)]
pub struct ClassifierDataConfig {
    pub n_magnitudes: usize,
    pub realizations_per_magnitude: usize,
    pub sampler: MagnitudeSampler,
    pub with_residuals: bool,
    /// Add one extra failed row per disconnected training row.
    pub augment_failures: bool,
    pub seed: u64,
    pub workers: usize,
}

impl ClassifierDataConfig {
    pub fn new(n_magnitudes: usize, seed: u64) -> Self {
        Self {
            n_magnitudes,
            realizations_per_magnitude: 1,
            sampler: MagnitudeSampler::Training,
            with_residuals: false,
            augment_failures: false,
            seed,
            workers: 1,
        }
    }
}

/// Labeled roadway-state rows for the classifier.
///
/// Magnitude `i` is drawn from `(seed, Magnitude, i)`; its realization `r`
/// from `(seed, Topology, i·R + r)`. Labels are exact DFS results.
pub fn generate_classifier_dataset(
    scenario: &Scenario,
    config: &ClassifierDataConfig,
) -> Result<SplitDataset> {
    let (n, reps) = (config.n_magnitudes, config.realizations_per_magnitude);
    if n == 0 || reps == 0 {
        return Err(Error::InvalidArgument(
            "magnitude and realization counts must be >= 1".into(),
        ));
    }
    let net = scenario.network();
    let l = net.num_links();
    let seed = config.seed;
    let pool = McOptions::with_workers(config.workers).pool()?;
    let rows: Vec<(Vec<u8>, Vec<bool>)> = pool.install(|| {
        (0..n as u64)
            .into_par_iter()
            .map(|i| {
                let m = event_magnitude(config.sampler, seed, i);
                let residuals = config
                    .with_residuals
                    .then_some(ResidualStream { seed, event: i });
                let probs = scenario.roadway_probs(m, residuals)?;
                let mut states = vec![0u8; reps * l];
                let mut scratch = DfsScratch::default();
                let labels = states
                    .chunks_exact_mut(l)
                    .enumerate()
                    .map(|(r, row)| {
                        let j = i * reps as u64 + r as u64;
                        fill_topology(&probs, &mut StreamRng::new(seed, Domain::Topology, j), row);
                        net.dfs(row, &mut scratch)
                    })
                    .collect();
                Ok((states, labels))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut inputs = Vec::with_capacity(n * reps * l);
    let mut targets = Vec::with_capacity(n * reps);
    for (states, labels) in &rows {
        inputs.extend(states.iter().map(|&s| s as f64));
        targets.extend(labels.iter().map(|&c| c as u8 as f64));
    }
    let all = Dataset::new(
        Matrix::from_vec(targets.len(), l, inputs)?,
        Matrix::from_vec(targets.len(), 1, targets)?,
    )?;
    let mut split = split_dataset(&all, TRAIN_FRACTION, seed)?;
    if config.augment_failures {
        let extra = failure_augmentation(&split.train, seed)?;
        log::info!("augmented {} failed rows", extra.len());
        split.train.extend(&extra)?;
    }
    Ok(split)
}

/// For every disconnected row, close one more open roadway (chosen from
/// `(seed, Augment, row)`). Closing roads cannot reconnect the terminals, so
/// the label stays 0.
fn failure_augmentation(train: &Dataset, seed: u64) -> Result<Dataset> {
    let l = train.input_dim();
    let mut inputs = Vec::new();
    for r in 0..train.len() {
        if train.targets.get(r, 0) != 0.0 {
            continue;
        }
        let row = train.inputs.row(r);
        let open: Vec<usize> = (0..l).filter(|&k| row[k] == 1.0).collect();
        if open.is_empty() {
            continue;
        }
        let pick =
            open[StreamRng::new(seed, Domain::Augment, r as u64).random_range(0..open.len())];
        inputs.extend(
            row.iter()
                .enumerate()
                .map(|(k, &x)| if k == pick { 0.0 } else { x }),
        );
    }
    let rows = inputs.len() / l.max(1);
    Dataset::new(Matrix::from_vec(rows, l, inputs)?, Matrix::zeros(rows, 1))
}

#[derive(Debug, Clone, Copy)]
pub struct E2eDataConfig {
    pub n_magnitudes: usize,
    pub n_topologies: u64,
    pub sampler: MagnitudeSampler,
    /// Share of events whose roadway probabilities carry ground-motion
    /// residuals; the rest sit on the median curve. Residual rows vary each
    /// roadway on its own, which the sensitivity ranking relies on, while
    /// median rows pin the fit where residual-free events land.
    pub residual_fraction: f64,
    pub seed: u64,
    pub workers: usize,
}

impl E2eDataConfig {
    pub fn new(n_magnitudes: usize, n_topologies: u64, seed: u64) -> Self {
        Self {
            n_magnitudes,
            n_topologies,
            sampler: MagnitudeSampler::Uniform { lo: 6.5, hi: 8.0 },
            residual_fraction: 0.5,
            seed,
            workers: 1,
        }
    }
}

/// Rows of (roadway survival probabilities → mean of `check` over
/// `n_topologies` realizations). Pass a trained classifier as `check` to
/// label without DFS.
pub fn generate_e2e_dataset<C: ConnectivityCheck + ?Sized>(
    scenario: &Scenario,
    check: &C,
    config: &E2eDataConfig,
) -> Result<SplitDataset> {
    if config.n_magnitudes == 0 || config.n_topologies == 0 {
        return Err(Error::InvalidArgument(
            "magnitude and topology counts must be >= 1".into(),
        ));
    }
    let f = config.residual_fraction;
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::InvalidArgument(format!(
            "residual fraction {f} must lie in [0, 1]"
        )));
    }
    let seed = config.seed;
    let probs: Vec<Vec<f64>> = (0..config.n_magnitudes as u64)
        .map(|i| {
            let m = event_magnitude(config.sampler, seed, i);
            // spread residual events evenly through the index range
            let noisy = ((i + 1) as f64 * f).floor() > (i as f64 * f).floor();
            let residuals = noisy.then_some(ResidualStream { seed, event: i });
            scenario.roadway_probs(m, residuals)
        })
        .collect::<Result<_>>()?;
    let labels = per_event_connectivity(
        scenario.network(),
        &probs,
        config.n_topologies,
        check,
        seed,
        McOptions::with_workers(config.workers),
    )?;
    let l = scenario.num_links();
    let n = probs.len();
    let all = Dataset::new(
        Matrix::from_vec(n, l, probs.concat())?,
        Matrix::from_vec(n, 1, labels)?,
    )?;
    split_dataset(&all, TRAIN_FRACTION, seed)
}
