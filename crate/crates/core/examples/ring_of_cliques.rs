//! Sample a ring of 20 five-node cliques and recover the cliques as building
//! blocks, even though sampled communities are unions of several cliques.
//!
//! cargo run --release --example ring_of_cliques [seed]

use blockkit::blocks::{greedy_blocks, BlockAssignment, GreedyConfig};
use blockkit::comembership::{comembership_matrix, ring_distance_classifier, stratified_histogram, DEFAULT_BINS};
use blockkit::generators::ring_of_cliques;
use blockkit::sampler::{run_detailed, SamplerConfig};

fn main() -> blockkit::error::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let (graph, cliques) = ring_of_cliques(20, 5)?;
    println!("ring of cliques: {}", graph.fingerprint());

    // Many short chains decorrelate which neighbouring cliques are joined.
    let config = SamplerConfig {
        steps: 250_000,
        burn_in: 50_000,
        thin: 2_000,
        chains: 100,
        seed,
        ..Default::default()
    };
    let run = run_detailed(&graph, &config)?;
    println!("{} records, {:.2e} steps/s", run.ensemble.len(), run.steps_per_second());

    let best = run.ensemble.best_of()?;
    let mut sizes = best.partition.sizes();
    sizes.sort_unstable();
    println!("best division: k = {}, community sizes {sizes:?}", best.partition.community_count());
    let intact = BlockAssignment::from(cliques.clone()).refines(&best.partition);
    println!("every clique intact in best division: {intact}");

    let matrix = comembership_matrix(&run.ensemble)?;
    let clique_of: Vec<usize> = cliques.labels().iter().map(|&c| c as usize).collect();
    let hists = stratified_histogram(&matrix, ring_distance_classifier(&clique_of, 20), DEFAULT_BINS)?;
    for d in 0..=10 {
        let h = &hists[&format!("distance {d}")];
        println!("  distance {d:>2}: mean P(same community) = {:.3}", h.mean);
    }

    let result = greedy_blocks(&run.ensemble, &GreedyConfig::default())?;
    let peak = result.trace.best_entry();
    println!("greedy blocks: q = {} (mean RMI {:.4})", peak.q, peak.mean_rmi);
    println!("blocks are exactly the cliques: {}", result.blocks.as_partition().same_division(&cliques));
    Ok(())
}
