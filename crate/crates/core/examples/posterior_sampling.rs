//! Run the Metropolis-Hastings sampler on a tiny graph and compare visit
//! frequencies of each set partition with the exact posterior.
//!
//! cargo run --release --example posterior_sampling

use std::collections::HashMap;

use blockkit::graph::load_edge_list;
use blockkit::partition::{log_posterior, Partition};
use blockkit::sampler::Chain;

/// Restricted-growth strings: every set partition of `n` nodes once.
fn set_partitions(n: usize) -> Vec<Vec<u32>> {
    fn grow(prefix: &mut Vec<u32>, n: usize, max: u32, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for g in 0..=max + 1 {
            prefix.push(g);
            grow(prefix, n, max.max(g), out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    grow(&mut vec![0], n, 0, &mut out);
    out
}

fn ln_factorial(k: usize) -> f64 {
    (1..=k).map(|x| (x as f64).ln()).sum()
}

fn main() -> blockkit::error::Result<()> {
    // Two triangles joined by one edge.
    let graph = load_edge_list("a b\nb c\na c\nc d\nd e\ne f\nd f\n".as_bytes())?;
    let p = graph.density();

    // Labeled target: a set partition with k communities carries k! labelings.
    let parts = set_partitions(graph.node_count());
    let weights: Vec<f64> = parts
        .iter()
        .map(|g| {
            let part = Partition::new(g.clone()).unwrap();
            log_posterior(&graph, &part, p).unwrap() + ln_factorial(part.community_count())
        })
        .collect();
    let top = weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = weights.iter().map(|w| (w - top).exp()).sum();

    let mut chain = Chain::new(&graph, p, 42)?;
    let steps = 2_000_000u64;
    let mut visits: HashMap<Vec<u32>, u64> = HashMap::new();
    for _ in 0..steps {
        chain.mh_step();
        *visits.entry(chain.partition().canonical().labels().to_vec()).or_default() += 1;
    }
    println!("acceptance rate {:.3}", chain.accepted() as f64 / steps as f64);

    let mut rows: Vec<(f64, f64, &Vec<u32>)> = parts
        .iter()
        .zip(&weights)
        .map(|(g, w)| ((w - top).exp() / z, *visits.get(g).unwrap_or(&0) as f64 / steps as f64, g))
        .collect();
    rows.sort_by(|a, b| b.0.total_cmp(&a.0));
    let tv: f64 = rows.iter().map(|(e, s, _)| (e - s).abs()).sum::<f64>() / 2.0;
    println!("{:<16} {:>8} {:>8}", "division", "exact", "sampled");
    for (exact, sampled, g) in rows.iter().take(8) {
        println!("{:<16} {exact:>8.4} {sampled:>8.4}", format!("{g:?}"));
    }
    println!("total-variation distance over {} set partitions: {tv:.4}", parts.len());
    Ok(())
}
