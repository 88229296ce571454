//! The cached partition state: O(degree + k) log-posterior differences for
//! single-node moves, checked against full recomputation.
//!
//! cargo run --example incremental_moves

use blockkit::generators::ring_of_cliques;
use blockkit::partition::{compute_stats, log_posterior, Partition};
use blockkit::state::{PartitionState, Target};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> blockkit::error::Result<()> {
    let (graph, cliques) = ring_of_cliques(6, 4)?;
    let p = graph.density();
    let mut state = PartitionState::new(&graph, &cliques, p)?;
    println!("cliques as communities: log P = {:.6}", state.log_posterior());

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..2_000 {
        let node = rng.random_range(0..graph.node_count());
        let k = state.community_count();
        let pick = rng.random_range(0..=k);
        let target = if pick == k { Target::New } else { Target::Existing(pick) };
        let before = state.log_posterior();
        let delta = state.delta_log_posterior(node, target);
        state.apply_move(node, target);
        worst = worst.max((before + delta - state.log_posterior()).abs());
    }
    println!("2000 random moves, largest |delta - recomputed| = {worst:.2e}");

    let now = state.partition();
    assert_eq!(state.stats(), compute_stats(&graph, &now)?);
    println!("k = {}, log P = {:.6}", now.community_count(), log_posterior(&graph, &now, p)?);
    let single = Partition::single(graph.node_count());
    println!("one community: log P = {:.6}", log_posterior(&graph, &single, p)?);
    Ok(())
}
