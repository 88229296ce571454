//! Metropolis-Hastings sampling of community divisions.
//!
//! A proposal picks a node uniformly and a destination uniformly from the
//! `k + 1` options "one of the `k` existing communities" or "a fresh one".
//! The chain targets the posterior over *labeled* divisions, so a set
//! partition with `k` communities carries weight `k! * exp(log_posterior)`;
//! the acceptance ratio contains that factor together with the Hastings
//! correction `(k_before + 1) / (k_after + 1)` for the size-dependent menu.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Fingerprint, Graph};
use crate::partition::{check_p, Partition};
use crate::state::{PartitionState, Target};

/// Steps between full recomputations of the cached log posterior.
pub const RESYNC_INTERVAL: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    /// Total Monte Carlo steps per chain, burn-in included.
    pub steps: u64,
    pub burn_in: u64,
    /// Record every `thin`-th step after burn-in.
    pub thin: u64,
    pub seed: u64,
    /// Overrides the default `p = 2m / n^2`.
    pub p_override: Option<f64>,
    pub chains: usize,
    /// Also record `(step, log posterior)` every this many steps, burn-in included.
    pub logp_every: Option<u64>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            steps: 11_000_000,
            burn_in: 1_000_000,
            thin: 1_000,
            seed: 0,
            p_override: None,
            chains: 1,
            logp_every: None,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps <= self.burn_in {
            return Err(Error::InvalidParameter(format!(
                "steps ({}) must exceed burn_in ({})",
                self.steps, self.burn_in
            )));
        }
        if self.thin == 0 {
            return Err(Error::InvalidParameter("thin must be >= 1".into()));
        }
        if self.chains == 0 {
            return Err(Error::InvalidParameter("chains must be >= 1".into()));
        }
        if let Some(p) = self.p_override {
            check_p(p)?;
        }
        if self.logp_every == Some(0) {
            return Err(Error::InvalidParameter("logp_every must be >= 1".into()));
        }
        Ok(())
    }

    /// Number of records each chain produces.
    pub fn records_per_chain(&self) -> u64 {
        (self.steps - self.burn_in) / self.thin
    }

    pub fn p_for(&self, graph: &Graph) -> f64 {
        self.p_override.unwrap_or_else(|| graph.density())
    }
}

/// One recorded division.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub chain: u32,
    pub step: u64,
    pub log_posterior: f64,
    pub partition: Partition,
}

/// Ordered collection of sampled divisions bound to one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleEnsemble {
    fingerprint: Fingerprint,
    records: Vec<SampleRecord>,
}

impl SampleEnsemble {
    pub fn new(fingerprint: Fingerprint) -> Self {
        Self {
            fingerprint,
            records: Vec::new(),
        }
    }

    pub fn fingerprint(&self) -> &Fingerprint {
        &self.fingerprint
    }

    pub fn node_count(&self) -> usize {
        self.fingerprint.n
    }

    pub fn records(&self) -> &[SampleRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Appends a record, enforcing node count and per-chain step order.
    pub fn push(&mut self, record: SampleRecord) -> Result<()> {
        if record.partition.node_count() != self.fingerprint.n {
            return Err(Error::SizeMismatch {
                expected: self.fingerprint.n,
                found: record.partition.node_count(),
            });
        }
        if let Some(prev) = self.records.iter().rev().find(|r| r.chain == record.chain) {
            if prev.step >= record.step {
                return Err(Error::InvalidParameter(format!(
                    "chain {} steps must increase ({} then {})",
                    record.chain, prev.step, record.step
                )));
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn partitions(&self) -> impl Iterator<Item = &Partition> {
        self.records.iter().map(|r| &r.partition)
    }

    /// At most `cap` records, evenly strided through the ensemble.
    pub fn subsample(&self, cap: usize) -> SampleEnsemble {
        if cap == 0 || cap >= self.records.len() {
            return self.clone();
        }
        let len = self.records.len();
        let records = (0..cap).map(|i| self.records[i * len / cap].clone()).collect();
        SampleEnsemble {
            fingerprint: self.fingerprint.clone(),
            records,
        }
    }

    /// The highest-posterior record; ties go to the smallest `(chain, step)`.
    pub fn best_of(&self) -> Result<&SampleRecord> {
        self.records
            .iter()
            .reduce(|best, r| {
                let better = r.log_posterior > best.log_posterior
                    || (r.log_posterior == best.log_posterior && (r.chain, r.step) < (best.chain, best.step));
                if better {
                    r
                } else {
                    best
                }
            })
            .ok_or(Error::EmptyEnsemble)
    }

    /// The `count` highest-posterior records with pairwise distinct divisions.
    pub fn top_distinct(&self, count: usize) -> Vec<&SampleRecord> {
        let mut order: Vec<&SampleRecord> = self.records.iter().collect();
        order.sort_by(|a, b| {
            b.log_posterior
                .total_cmp(&a.log_posterior)
                .then((a.chain, a.step).cmp(&(b.chain, b.step)))
        });
        let mut seen = std::collections::HashSet::new();
        order
            .into_iter()
            .filter(|r| seen.insert(r.partition.canonical()))
            .take(count)
            .collect()
    }
}

/// A point of the log-posterior time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogpPoint {
    pub chain: u32,
    pub step: u64,
    pub log_posterior: f64,
    pub communities: usize,
}

/// One Markov chain over divisions of a fixed graph.
#[derive(Debug, Clone)]
pub struct Chain<'g> {
    state: PartitionState<'g>,
    log_posterior: f64,
    rng: ChaCha8Rng,
    steps: u64,
    accepted: u64,
    /// `ln k!` for every reachable `k`.
    ln_k_factorial: Vec<f64>,
}

impl<'g> Chain<'g> {
    /// Starts from the all-singletons division.
    pub fn new(graph: &'g Graph, p: f64, seed: u64) -> Result<Self> {
        Self::from_partition(graph, &Partition::singletons(graph.node_count()), p, seed)
    }

    pub fn from_partition(graph: &'g Graph, start: &Partition, p: f64, seed: u64) -> Result<Self> {
        let state = PartitionState::new(graph, start, p)?;
        let log_posterior = state.log_posterior();
        let n = graph.node_count();
        let mut ln_k_factorial = Vec::with_capacity(n + 2);
        let mut acc = 0.0;
        ln_k_factorial.push(0.0);
        for k in 1..=n + 1 {
            acc += (k as f64).ln();
            ln_k_factorial.push(acc);
        }
        Ok(Self {
            state,
            log_posterior,
            rng: ChaCha8Rng::seed_from_u64(seed),
            steps: 0,
            accepted: 0,
            ln_k_factorial,
        })
    }

    pub fn state(&self) -> &PartitionState<'g> {
        &self.state
    }

    pub fn log_posterior(&self) -> f64 {
        self.log_posterior
    }

    pub fn partition(&self) -> Partition {
        self.state.partition()
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn accepted(&self) -> u64 {
        self.accepted
    }

    /// Log of the acceptance ratio for moving `node` to `target`, with the
    /// move's change in log posterior.
    pub fn log_acceptance(&mut self, node: usize, target: Target) -> (f64, f64) {
        let k_before = self.state.community_count();
        let k_after = self.state.community_count_after(node, target);
        let delta = self.state.delta_log_posterior(node, target);
        let labeled = self.ln_k_factorial[k_after] - self.ln_k_factorial[k_before];
        let menu = ((k_before + 1) as f64).ln() - ((k_after + 1) as f64).ln();
        (delta + labeled + menu, delta)
    }

    /// One proposal and accept/reject decision.
    pub fn mh_step(&mut self) -> bool {
        let n = self.state.graph().node_count();
        let k = self.state.community_count();
        let node = self.rng.random_range(0..n);
        let choice = self.rng.random_range(0..=k);
        let target = if choice == k { Target::New } else { Target::Existing(choice) };
        self.steps += 1;
        let accepted = if self.state.is_null_move(node, target) {
            true
        } else {
            let (log_ratio, delta) = self.log_acceptance(node, target);
            let accept = log_ratio >= 0.0 || self.rng.random::<f64>().ln() < log_ratio;
            if accept {
                self.state.apply_move(node, target);
                self.log_posterior += delta;
            }
            accept
        };
        if accepted {
            self.accepted += 1;
        }
        if self.steps % RESYNC_INTERVAL == 0 {
            self.resync();
        }
        accepted
    }

    /// Replaces the cached log posterior by a full recomputation and returns
    /// the drift that had accumulated.
    pub fn resync(&mut self) -> f64 {
        let exact = self.state.log_posterior();
        let drift = self.log_posterior - exact;
        log::debug!("resync after {} steps: drift {drift:.3e}", self.steps);
        self.log_posterior = exact;
        drift
    }
}

/// Ensemble plus side outputs of a sampling run.
#[derive(Debug, Clone)]
pub struct SamplerRun {
    pub ensemble: SampleEnsemble,
    pub series: Vec<LogpPoint>,
    pub total_steps: u64,
    pub accepted: u64,
    pub seconds: f64,
}

impl SamplerRun {
    pub fn steps_per_second(&self) -> f64 {
        self.total_steps as f64 / self.seconds.max(1e-9)
    }
}

struct ChainOutput {
    records: Vec<SampleRecord>,
    series: Vec<LogpPoint>,
    accepted: u64,
}

fn run_chain(graph: &Graph, config: &SamplerConfig, p: f64, chain_id: u32) -> Result<ChainOutput> {
    let mut chain = Chain::new(graph, p, config.seed.wrapping_add(chain_id as u64))?;
    let mut records = Vec::with_capacity(config.records_per_chain() as usize);
    let mut series = Vec::new();
    for step in 1..=config.steps {
        chain.mh_step();
        if step > config.burn_in && (step - config.burn_in) % config.thin == 0 {
            records.push(SampleRecord {
                chain: chain_id,
                step,
                log_posterior: chain.log_posterior(),
                partition: chain.partition(),
            });
        }
        if let Some(every) = config.logp_every {
            if step % every == 0 {
                series.push(LogpPoint {
                    chain: chain_id,
                    step,
                    log_posterior: chain.log_posterior(),
                    communities: chain.state().community_count(),
                });
            }
        }
    }
    Ok(ChainOutput {
        records,
        series,
        accepted: chain.accepted(),
    })
}

/// Runs all chains (concurrently) and assembles their records in chain order.
pub fn run_detailed(graph: &Graph, config: &SamplerConfig) -> Result<SamplerRun> {
    config.validate()?;
    let p = config.p_for(graph);
    let started = Instant::now();
    let outputs: Vec<ChainOutput> = (0..config.chains as u32)
        .into_par_iter()
        .map(|c| run_chain(graph, config, p, c))
        .collect::<Result<_>>()?;
    let seconds = started.elapsed().as_secs_f64();
    let mut ensemble = SampleEnsemble::new(graph.fingerprint());
    let mut series = Vec::new();
    let mut accepted = 0;
    for out in outputs {
        ensemble.records.extend(out.records);
        series.extend(out.series);
        accepted += out.accepted;
    }
    Ok(SamplerRun {
        ensemble,
        series,
        total_steps: config.steps * config.chains as u64,
        accepted,
        seconds,
    })
}

pub fn run(graph: &Graph, config: &SamplerConfig) -> Result<SampleEnsemble> {
    Ok(run_detailed(graph, config)?.ensemble)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::load_edge_list;

    fn path3() -> Graph {
        load_edge_list("a b\nb c".as_bytes()).unwrap()
    }

    fn small_config() -> SamplerConfig {
        SamplerConfig {
            steps: 2_000,
            burn_in: 1_000,
            thin: 100,
            seed: 5,
            p_override: None,
            chains: 3,
            logp_every: None,
        }
    }

    #[test]
    fn config_validation() {
        let mut c = small_config();
        assert!(c.validate().is_ok());
        c.steps = c.burn_in;
        assert!(c.validate().is_err());
        let mut c = small_config();
        c.thin = 0;
        assert!(c.validate().is_err());
        let mut c = small_config();
        c.chains = 0;
        assert!(c.validate().is_err());
        let mut c = small_config();
        c.p_override = Some(0.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn one_record_per_chain() {
        let g = path3();
        let mut c = small_config();
        c.steps = c.burn_in + c.thin;
        let ens = run(&g, &c).unwrap();
        assert_eq!(ens.len(), 3);
        assert!(ens.records().iter().all(|r| r.step == c.steps));
    }

    #[test]
    fn deterministic_given_seed() {
        let g = load_edge_list("a b\nb c\nc a\nc d\nd e\ne f\nf d".as_bytes()).unwrap();
        let a = run(&g, &small_config()).unwrap();
        let b = run(&g, &small_config()).unwrap();
        assert_eq!(a, b);
        let mut other = small_config();
        other.seed = 6;
        assert_ne!(a, run(&g, &other).unwrap());
    }

    #[test]
    fn null_proposal_always_accepted() {
        let g = path3();
        let mut chain = Chain::new(&g, g.density(), 1).unwrap();
        let (ratio, delta) = chain.log_acceptance(0, Target::Existing(0));
        assert_eq!((ratio, delta), (0.0, 0.0));
    }

    #[test]
    fn cached_posterior_tracks_state() {
        let g = load_edge_list("a b\nb c\nc a\nc d\nd e\ne f\nf d\na e".as_bytes()).unwrap();
        let mut chain = Chain::new(&g, g.density(), 3).unwrap();
        for _ in 0..20_000 {
            chain.mh_step();
        }
        assert!(chain.resync().abs() < 1e-9);
    }

    #[test]
    fn best_of_and_ties() {
        let fp = path3().fingerprint();
        let mut ens = SampleEnsemble::new(fp);
        assert!(matches!(ens.best_of(), Err(Error::EmptyEnsemble)));
        let rec = |chain, step, lp| SampleRecord {
            chain,
            step,
            log_posterior: lp,
            partition: Partition::single(3),
        };
        ens.push(rec(1, 5, -3.0)).unwrap();
        assert_eq!(ens.best_of().unwrap().step, 5);
        ens.push(rec(0, 7, -3.0)).unwrap();
        assert_eq!(ens.best_of().unwrap().chain, 0);
        ens.push(rec(1, 9, -1.0)).unwrap();
        assert_eq!(ens.best_of().unwrap().step, 9);
        assert!(ens.push(rec(1, 9, 0.0)).is_err());
    }
}
