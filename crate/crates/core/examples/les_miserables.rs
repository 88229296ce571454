//! Building blocks of the Les Miserables co-appearance network: the RMI curve
//! over the number of blocks, and how the top sampled divisions decompose
//! into blocks plus a few misfit nodes.
//!
//! cargo run --release --example les_miserables [seed]

use std::fs::File;
use std::io::BufReader;

use blockkit::blocks::{describe_division, greedy_blocks, GreedyConfig};
use blockkit::comembership::meet_partition;
use blockkit::graph::load_edge_list;
use blockkit::sampler::{run, SamplerConfig};

fn main() -> blockkit::error::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/lesmis.txt");
    let graph = load_edge_list(BufReader::new(File::open(path)?))?;
    println!("{}", graph.fingerprint());

    let config = SamplerConfig {
        steps: 250_000,
        burn_in: 50_000,
        thin: 2_000,
        chains: 100,
        seed,
        ..Default::default()
    };
    let ensemble = run(&graph, &config)?;
    let result = greedy_blocks(&ensemble, &GreedyConfig::default())?;

    println!("mean RMI by number of blocks:");
    for e in result.trace.entries.iter().filter(|e| e.q <= 16) {
        let bar = "#".repeat((e.mean_rmi.max(0.0) * 60.0) as usize);
        println!("  q = {:>2}  {:.4}  {bar}", e.q, e.mean_rmi);
    }
    let blocks = &result.blocks;
    println!("peak at q = {}", blocks.block_count());
    for (h, members) in blocks.members().iter().enumerate() {
        let names: Vec<&str> = members.iter().map(|&i| graph.label(i)).collect();
        println!("  block {h}: {}", names.join(", "));
    }

    let top = ensemble.top_distinct(4);
    for (rank, rec) in top.iter().enumerate() {
        let d = describe_division(&rec.partition, blocks)?;
        let misfits: Vec<&str> = d.misfits.iter().map(|&i| graph.label(i)).collect();
        println!(
            "division {}: k = {}, log P = {:.2}, block -> community {:?}, misfits [{}]",
            rank + 1,
            rec.partition.community_count(),
            rec.log_posterior,
            d.block_to_community,
            misfits.join(", ")
        );
    }
    let parts: Vec<_> = top.iter().map(|r| &r.partition).collect();
    println!("meet of the top divisions: {} classes", meet_partition(&parts)?.community_count());
    Ok(())
}
