//! Write every plot-ready artifact for a small network: trace, log-posterior
//! series, co-membership CSV and heatmap, histograms, RMI curve and blocks.
//!
//! cargo run --release --example plot_data [out-dir]

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use blockkit::blocks::{greedy_blocks, GreedyConfig};
use blockkit::comembership::{comembership_matrix, ring_distance_classifier, stratified_histogram};
use blockkit::formats;
use blockkit::generators::ring_of_cliques_random_ports;
use blockkit::graph::write_edge_list;
use blockkit::sampler::{run_detailed, SamplerConfig};
use blockkit::svg;

fn main() -> blockkit::error::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "plot-data".into()));
    fs::create_dir_all(&out)?;
    let create = |name: &str| File::create(out.join(name)).map(BufWriter::new);

    let (graph, cliques) = ring_of_cliques_random_ports(8, 4, 11)?;
    let config = SamplerConfig {
        steps: 60_000,
        burn_in: 10_000,
        thin: 500,
        chains: 20,
        seed: 5,
        logp_every: Some(100),
        ..Default::default()
    };
    let run = run_detailed(&graph, &config)?;
    write_edge_list(&graph, create("graph.txt")?)?;
    formats::write_labels(&graph, &cliques, create("truth.txt")?)?;
    formats::write_trace(&run.ensemble, create("trace.txt")?)?;
    formats::write_logp_csv(&run.series, create("logp.csv")?)?;

    let matrix = comembership_matrix(&run.ensemble)?;
    let clique_of: Vec<usize> = cliques.labels().iter().map(|&c| c as usize).collect();
    let order: Vec<usize> = (0..graph.node_count()).collect();
    formats::write_comatrix_csv(&matrix, graph.labels(), Some(&order), create("comembership.csv")?)?;
    let hists = stratified_histogram(&matrix, ring_distance_classifier(&clique_of, 8), 20)?;
    formats::write_histograms_json(&hists, create("histograms.json")?)?;
    fs::write(out.join("heatmap.svg"), svg::heatmap(&matrix, &order))?;

    let result = greedy_blocks(&run.ensemble, &GreedyConfig::default())?;
    formats::write_rmi_curve_csv(&result.trace, create("rmi_curve.csv")?)?;
    formats::write_blocks(
        run.ensemble.fingerprint(),
        &result.blocks,
        result.trace.best_entry().mean_rmi,
        create("blocks.txt")?,
    )?;
    fs::write(out.join("rmi_curve.svg"), svg::rmi_curve(&result.trace))?;

    println!("q = {}, wrote:", result.blocks.block_count());
    let mut names: Vec<_> = fs::read_dir(&out)?.filter_map(|e| e.ok()).map(|e| e.path()).collect();
    names.sort();
    for p in names {
        println!("  {}", p.display());
    }
    Ok(())
}
