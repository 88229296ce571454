//! Draw a degree-corrected SBM with two planted groups and check that the
//! building blocks never straddle the planted boundary.
//!
//! cargo run --release --example planted_dcsbm [seed]

use blockkit::blocks::{greedy_blocks, BlockAssignment, GreedyConfig};
use blockkit::generators::{dcsbm_generate, DcsbmParams};
use blockkit::sampler::{run, SamplerConfig};

fn main() -> blockkit::error::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    // Mean degree 50*w_in + 50*w_out = 10 with w_in / w_out = 10.
    let w_out = 10.0 / (50.0 * 11.0);
    let params = DcsbmParams::planted(&[50, 50], 10.0 * w_out, w_out, seed)?;
    let graph = dcsbm_generate(&params)?;
    println!(
        "{} (mean degree {:.2})",
        graph.fingerprint(),
        2.0 * graph.edge_count() as f64 / graph.node_count() as f64
    );

    let config = SamplerConfig {
        steps: 120_000,
        burn_in: 20_000,
        thin: 1_000,
        chains: 50,
        seed: seed * 1_000,
        ..Default::default()
    };
    let ensemble = run(&graph, &config)?;
    let ks: Vec<usize> = ensemble.partitions().map(|p| p.community_count()).collect();
    println!("mean k = {:.2}", ks.iter().sum::<usize>() as f64 / ks.len() as f64);

    let result = greedy_blocks(&ensemble, &GreedyConfig::default())?;
    let sizes: Vec<usize> = result.blocks.members().iter().map(Vec::len).collect();
    println!("q = {}, block sizes {sizes:?}", result.blocks.block_count());
    println!("blocks refine the planted groups: {}", result.blocks.refines(&params.groups));
    let planted = BlockAssignment::from(params.groups.clone());
    println!("blocks equal the planted groups: {}", result.blocks.as_partition().same_division(&planted.as_partition()));
    Ok(())
}
