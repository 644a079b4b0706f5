//! Monte Carlo estimation of expected two-terminal connectivity.
//!
//! Sample `j` always draws its roadway states from the stream
//! `(seed, Topology, j)`, and event `i` its magnitude from
//! `(seed, Magnitude, i)`. Work is split into blocks that are evaluated on a
//! rayon pool and reduced in block order, so estimates are bit-identical for
//! any worker count.

use std::borrow::Cow;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hazard::MagnitudeSampler;
use crate::network::{check_probs, DfsScratch, TopologyRealization, TransportNetwork};
use crate::rng::{Domain, StreamRng};
use crate::scenario::{ResidualStream, Scenario};

/// Samples generated and checked together.
pub const BATCH_ROWS: usize = 2048;

/// A connectivity check over a batch of realizations.
///
/// `states` holds `rows` realizations of `net.num_links()` entries each,
/// row-major. Implementations append one indicator per row to `out`.
pub trait ConnectivityCheck: Sync {
    fn check_batch(&self, net: &TransportNetwork, states: &[u8], out: &mut Vec<bool>)
        -> Result<()>;

    fn check(&self, net: &TransportNetwork, topo: &TopologyRealization) -> Result<bool> {
        let mut out = Vec::with_capacity(1);
        self.check_batch(net, topo.states(), &mut out)?;
        Ok(out[0])
    }
}

/// Exact check by depth-first search.
#[derive(Debug, Clone, Copy, Default)]
pub struct DfsCheck;

impl ConnectivityCheck for DfsCheck {
    fn check_batch(
        &self,
        net: &TransportNetwork,
        states: &[u8],
        out: &mut Vec<bool>,
    ) -> Result<()> {
        let l = net.num_links();
        if l == 0 || !states.len().is_multiple_of(l) {
            return Err(Error::DimensionMismatch {
                expected: l,
                actual: states.len(),
            });
        }
        let mut scratch = DfsScratch::default();
        out.extend(states.chunks_exact(l).map(|row| net.dfs(row, &mut scratch)));
        Ok(())
    }
}

impl<F> ConnectivityCheck for F
where
    F: Fn(&TransportNetwork, &[u8]) -> bool + Sync,
{
    fn check_batch(
        &self,
        net: &TransportNetwork,
        states: &[u8],
        out: &mut Vec<bool>,
    ) -> Result<()> {
        let l = net.num_links();
        if l == 0 || !states.len().is_multiple_of(l) {
            return Err(Error::DimensionMismatch {
                expected: l,
                actual: states.len(),
            });
        }
        out.extend(states.chunks_exact(l).map(|row| self(net, row)));
        Ok(())
    }
}

/// Draw one realization: entry `i` is 1 with probability `probs[i]`.
pub fn sample_topology(probs: &[f64], rng: &mut StreamRng) -> Result<TopologyRealization> {
    check_probs(probs)?;
    let mut states = vec![0u8; probs.len()];
    fill_topology(probs, rng, &mut states);
    Ok(TopologyRealization::new(states).expect("binary states"))
}

#[inline]
pub(crate) fn fill_topology(probs: &[f64], rng: &mut StreamRng, out: &mut [u8]) {
    for (s, &p) in out.iter_mut().zip(probs) {
        *s = (rng.uniform() < p) as u8;
    }
}

/// Realization for global sample index `j`.
pub fn topology_for_sample(probs: &[f64], seed: u64, j: u64) -> Result<TopologyRealization> {
    sample_topology(probs, &mut StreamRng::new(seed, Domain::Topology, j))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracePoint {
    pub sample_index: u64,
    pub running_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityEstimate {
    pub p_hat: f64,
    pub n_samples: u64,
    pub successes: u64,
    pub std_err: f64,
    pub trace: Vec<TracePoint>,
    pub elapsed_seconds: f64,
}

#[derive(Serialize)]
struct Summary {
    p_hat: f64,
    n_samples: u64,
    std_err: f64,
    elapsed_seconds: f64,
}

impl ReliabilityEstimate {
    fn from_counts(
        successes: u64,
        n_samples: u64,
        trace: Vec<TracePoint>,
        elapsed_seconds: f64,
    ) -> Self {
        let p_hat = successes as f64 / n_samples as f64;
        Self {
            p_hat,
            n_samples,
            successes,
            std_err: (p_hat * (1.0 - p_hat) / n_samples as f64).sqrt(),
            trace,
            elapsed_seconds,
        }
    }

    /// `{p_hat, n_samples, std_err, elapsed_seconds}`; the timing field is last.
    pub fn summary_json(&self) -> String {
        let s = Summary {
            p_hat: self.p_hat,
            n_samples: self.n_samples,
            std_err: self.std_err,
            elapsed_seconds: self.elapsed_seconds,
        };
        serde_json::to_string_pretty(&s).expect("summary serializes")
    }

    /// `sample_index,running_mean` rows.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("sample_index,running_mean\n");
        for p in &self.trace {
            out.push_str(&format!("{},{}\n", p.sample_index, p.running_mean));
        }
        out
    }
}

/// Checkpoints 1, 2, 5, 10, 20, 50, ... below `n`, then `n`.
pub fn log_checkpoints(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut decade = 1u64;
    'outer: loop {
        for m in [1, 2, 5] {
            let c = decade.saturating_mul(m);
            if c >= n {
                break 'outer;
            }
            out.push(c);
        }
        decade = decade.saturating_mul(10);
    }
    if n > 0 {
        out.push(n);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McOptions {
    pub workers: usize,
}

impl Default for McOptions {
    fn default() -> Self {
        Self { workers: 1 }
    }
}

impl McOptions {
    pub fn with_workers(workers: usize) -> Self {
        Self { workers }
    }

    pub(crate) fn pool(&self) -> Result<rayon::ThreadPool> {
        if self.workers == 0 {
            return Err(Error::InvalidArgument("worker count must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))
    }
}

struct Block {
    start: u64,
    len: u64,
}

struct BlockOutcome {
    successes: u64,
    // (checkpoint, successes within the block up to and including it)
    marks: Vec<(u64, u64)>,
}

/// Evaluate every block; `probs_of(b)` gives the roadway probabilities for
/// block `b`.
fn run_blocks<'a, P, C>(
    net: &TransportNetwork,
    blocks: &[Block],
    probs_of: P,
    check: &C,
    seed: u64,
    checkpoints: &[u64],
    opts: McOptions,
) -> Result<Vec<BlockOutcome>>
where
    P: Fn(usize) -> Result<Cow<'a, [f64]>> + Sync,
    C: ConnectivityCheck + ?Sized,
{
    let l = net.num_links();
    let pool = opts.pool()?;
    pool.install(|| {
        blocks
            .par_iter()
            .enumerate()
            .map(|(b, block)| {
                let probs = probs_of(b)?;
                if probs.len() != l {
                    return Err(Error::DimensionMismatch {
                        expected: l,
                        actual: probs.len(),
                    });
                }
                check_probs(&probs)?;
                let first_cp = checkpoints.partition_point(|&c| c <= block.start);
                let last_cp = checkpoints.partition_point(|&c| c <= block.start + block.len);
                let mut cps = checkpoints[first_cp..last_cp].iter().peekable();

                let mut states = Vec::with_capacity(BATCH_ROWS * l);
                let mut flags = Vec::with_capacity(BATCH_ROWS);
                let mut out = BlockOutcome {
                    successes: 0,
                    marks: Vec::new(),
                };
                let end = block.start + block.len;
                let mut j = block.start;
                while j < end {
                    let rows = (end - j).min(BATCH_ROWS as u64) as usize;
                    states.clear();
                    states.resize(rows * l, 0);
                    for (r, row) in states.chunks_exact_mut(l).enumerate() {
                        let mut rng = StreamRng::new(seed, Domain::Topology, j + r as u64);
                        fill_topology(&probs, &mut rng, row);
                    }
                    flags.clear();
                    check.check_batch(net, &states, &mut flags)?;
                    if flags.len() != rows {
                        return Err(Error::DimensionMismatch {
                            expected: rows,
                            actual: flags.len(),
                        });
                    }
                    for (r, &ok) in flags.iter().enumerate() {
                        out.successes += ok as u64;
                        // checkpoints are 1-based sample counts
                        let count = j + r as u64 + 1;
                        if cps.peek() == Some(&&count) {
                            out.marks.push((count, out.successes));
                            cps.next();
                        }
                    }
                    j += rows as u64;
                }
                Ok(out)
            })
            .collect()
    })
}

fn assemble(outcomes: Vec<BlockOutcome>, n: u64, started: Instant) -> ReliabilityEstimate {
    let mut before = 0u64;
    let mut trace = Vec::new();
    for o in &outcomes {
        for &(c, prefix) in &o.marks {
            trace.push(TracePoint {
                sample_index: c,
                running_mean: (before + prefix) as f64 / c as f64,
            });
        }
        before += o.successes;
    }
    ReliabilityEstimate::from_counts(before, n, trace, started.elapsed().as_secs_f64())
}

/// Mean of `check` over `n` realizations drawn from `probs`.
pub fn estimate_connectivity<C: ConnectivityCheck + ?Sized>(
    net: &TransportNetwork,
    probs: &[f64],
    n: u64,
    check: &C,
    seed: u64,
    opts: McOptions,
) -> Result<ReliabilityEstimate> {
    let started = Instant::now();
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    if probs.len() != net.num_links() {
        return Err(Error::DimensionMismatch {
            expected: net.num_links(),
            actual: probs.len(),
        });
    }
    check_probs(probs)?;
    let block = 16 * BATCH_ROWS as u64;
    let blocks: Vec<Block> = (0..n.div_ceil(block))
        .map(|b| Block {
            start: b * block,
            len: block.min(n - b * block),
        })
        .collect();
    let cps = log_checkpoints(n);
    let outcomes = run_blocks(
        net,
        &blocks,
        |_| Ok(Cow::Borrowed(probs)),
        check,
        seed,
        &cps,
        opts,
    )?;
    Ok(assemble(outcomes, n, started))
}

/// Nested sampling over a probabilistic event: `n_outer` magnitude draws,
/// each followed by `n_inner` topology samples. The estimate is the grand mean
/// over all `n_outer × n_inner` indicators.
#[allow(clippy::too_many_arguments)]
pub fn estimate_probabilistic_event<C: ConnectivityCheck + ?Sized>(
    scenario: &Scenario,
    magnitudes: MagnitudeSampler,
    n_outer: u64,
    n_inner: u64,
    with_residuals: bool,
    check: &C,
    seed: u64,
    opts: McOptions,
) -> Result<ReliabilityEstimate> {
    let started = Instant::now();
    if n_outer == 0 || n_inner == 0 {
        return Err(Error::InvalidArgument(
            "n_outer and n_inner must be >= 1".into(),
        ));
    }
    let n = n_outer * n_inner;
    let blocks: Vec<Block> = (0..n_outer)
        .map(|i| Block {
            start: i * n_inner,
            len: n_inner,
        })
        .collect();
    let cps = log_checkpoints(n);
    let outcomes = run_blocks(
        scenario.network(),
        &blocks,
        |i| event_probs(scenario, magnitudes, i as u64, with_residuals, seed).map(Cow::Owned),
        check,
        seed,
        &cps,
        opts,
    )?;
    Ok(assemble(outcomes, n, started))
}

/// Magnitude of event `i` under the seed discipline.
pub fn event_magnitude(magnitudes: MagnitudeSampler, seed: u64, i: u64) -> f64 {
    magnitudes.sample(&mut StreamRng::new(seed, Domain::Magnitude, i))
}

/// Roadway survival probabilities for event `i`.
pub fn event_probs(
    scenario: &Scenario,
    magnitudes: MagnitudeSampler,
    i: u64,
    with_residuals: bool,
    seed: u64,
) -> Result<Vec<f64>> {
    let m = event_magnitude(magnitudes, seed, i);
    let residuals = with_residuals.then_some(ResidualStream { seed, event: i });
    scenario.roadway_probs(m, residuals)
}

/// Connectivity mean of each probability vector, `n_inner` samples each.
/// Vector `i` uses topology indices `i·n_inner ..`, as an outer loop would.
pub fn per_event_connectivity<C: ConnectivityCheck + ?Sized>(
    net: &TransportNetwork,
    probs: &[Vec<f64>],
    n_inner: u64,
    check: &C,
    seed: u64,
    opts: McOptions,
) -> Result<Vec<f64>> {
    if n_inner == 0 {
        return Err(Error::InvalidArgument("n_inner must be >= 1".into()));
    }
    let blocks: Vec<Block> = (0..probs.len() as u64)
        .map(|i| Block {
            start: i * n_inner,
            len: n_inner,
        })
        .collect();
    let outcomes = run_blocks(
        net,
        &blocks,
        |i| Ok(Cow::Borrowed(probs[i].as_slice())),
        check,
        seed,
        &[],
        opts,
    )?;
    Ok(outcomes
        .iter()
        .map(|o| o.successes as f64 / n_inner as f64)
        .collect())
}
