use std::time::Instant;

use super::e2e::EndToEndSurrogate;
use crate::error::{Error, Result};
use crate::hazard::MagnitudeSampler;
use crate::montecarlo::{event_magnitude, per_event_connectivity, DfsCheck, McOptions};
use crate::network::BridgeId;
use crate::scenario::{ResidualStream, Scenario};

/// How expected connectivity is computed for each perturbed network.
#[derive(Debug, Clone, Copy)]
pub enum OatEstimator<'a> {
    /// Monte Carlo with DFS, `n_inner` realizations per event. Every variant
    /// reuses the same topology streams, so differences are not masked by
    /// sampling noise.
    McDfs {
        n_inner: u64,
    },
    EndToEnd(&'a EndToEndSurrogate),
}

impl OatEstimator<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            OatEstimator::McDfs { .. } => "mc-dfs",
            OatEstimator::EndToEnd(_) => "e2e",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OatSettings {
    pub sampler: MagnitudeSampler,
    pub n_events: u64,
    pub with_residuals: bool,
    pub amplification: f64,
    pub seed: u64,
    pub workers: usize,
}

impl OatSettings {
    pub fn new(sampler: MagnitudeSampler, n_events: u64, seed: u64) -> Self {
        Self {
            sampler,
            n_events,
            with_residuals: false,
            amplification: 0.10,
            seed,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityEntry {
    pub rank: usize,
    pub bridge_id: BridgeId,
    pub improvement_pct: f64,
    pub estimator_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct OatReport {
    pub baseline: f64,
    pub baseline_seconds: f64,
    /// Sorted by improvement, largest first; ties by ascending bridge id.
    pub entries: Vec<SensitivityEntry>,
}

impl OatReport {
    pub fn total_seconds(&self) -> f64 {
        self.baseline_seconds
            + self
                .entries
                .iter()
                .map(|e| e.estimator_seconds)
                .sum::<f64>()
    }

    pub fn top(&self, k: usize) -> Vec<BridgeId> {
        self.entries.iter().take(k).map(|e| e.bridge_id).collect()
    }

    pub fn bottom(&self, k: usize) -> Vec<BridgeId> {
        self.entries
            .iter()
            .rev()
            .take(k)
            .rev()
            .map(|e| e.bridge_id)
            .collect()
    }

    pub fn improvement(&self, id: BridgeId) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.bridge_id == id)
            .map(|e| e.improvement_pct)
    }
}

/// Survivals with entry `index` scaled by `1 + amplification`, capped at 1.
pub fn amplify(survivals: &[f64], index: usize, amplification: f64) -> Vec<f64> {
    let mut out = survivals.to_vec();
    out[index] = (out[index] * (1.0 + amplification)).min(1.0);
    out
}

/// One-at-a-time retrofit ranking: raise each bridge's survival probability
/// by `amplification` in turn and report the relative gain in expected
/// connectivity over the probabilistic event.
pub fn oat_sensitivity(
    scenario: &Scenario,
    estimator: OatEstimator<'_>,
    settings: &OatSettings,
) -> Result<OatReport> {
    if !(settings.amplification > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "amplification {} must be positive",
            settings.amplification
        )));
    }
    if settings.n_events == 0 {
        return Err(Error::InvalidArgument("event count must be >= 1".into()));
    }
    let seed = settings.seed;
    let survivals: Vec<Vec<f64>> = (0..settings.n_events)
        .map(|i| {
            let m = event_magnitude(settings.sampler, seed, i);
            let residuals = settings
                .with_residuals
                .then_some(ResidualStream { seed, event: i });
            scenario.bridge_survivals(m, residuals)
        })
        .collect::<Result<_>>()?;

    let expected = |bridge: Option<usize>| -> Result<f64> {
        let probs: Vec<Vec<f64>> = survivals
            .iter()
            .map(|s| match bridge {
                Some(b) => scenario.roadway_probs_from(&amplify(s, b, settings.amplification)),
                None => scenario.roadway_probs_from(s),
            })
            .collect();
        let per_event = match estimator {
            OatEstimator::McDfs { n_inner } => per_event_connectivity(
                scenario.network(),
                &probs,
                n_inner,
                &DfsCheck,
                seed,
                McOptions::with_workers(settings.workers),
            )?,
            OatEstimator::EndToEnd(model) => model.predict_batch(&probs.concat())?,
        };
        Ok(per_event.iter().sum::<f64>() / per_event.len() as f64)
    };

    let started = Instant::now();
    let baseline = expected(None)?;
    let baseline_seconds = started.elapsed().as_secs_f64();
    if baseline <= 0.0 {
        return Err(Error::Numerical(
            "baseline connectivity is zero; relative improvement undefined".into(),
        ));
    }
    let mut entries = scenario
        .bridges()
        .iter()
        .enumerate()
        .map(|(b, bridge)| {
            let t = Instant::now();
            let p = expected(Some(b))?;
            Ok(SensitivityEntry {
                rank: 0,
                bridge_id: bridge.id,
                improvement_pct: (p - baseline) / baseline * 100.0,
                estimator_seconds: t.elapsed().as_secs_f64(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    entries.sort_by(|a, b| {
        b.improvement_pct
            .total_cmp(&a.improvement_pct)
            .then(a.bridge_id.cmp(&b.bridge_id))
    });
    for (i, e) in entries.iter_mut().enumerate() {
        e.rank = i + 1;
    }
    log::info!("{} baseline {baseline:.6}", estimator.name());
    Ok(OatReport {
        baseline,
        baseline_seconds,
        entries,
    })
}

pub fn ranking_csv(entries: &[SensitivityEntry]) -> String {
    let mut out = String::from("rank,bridge_id,improvement_pct,estimator_seconds\n");
    for e in entries {
        out.push_str(&format!(
            "{},{},{},{}\n",
            e.rank, e.bridge_id, e.improvement_pct, e.estimator_seconds
        ));
    }
    out
}
