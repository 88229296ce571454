use blockkit::generators::{dcsbm_generate, ring_of_cliques, ring_of_cliques_random_ports, DcsbmParams};
use blockkit::graph::{load_edge_list, write_edge_list};
use blockkit::partition::compute_stats;

#[test]
fn dcsbm_edge_count_mean_matches_expectation() {
    // One group, unit propensities: E[m] = omega n^2 / 2 (pairs plus half-weight loops).
    let (n, omega) = (20usize, 0.3);
    let seeds = 1_000;
    let counts: Vec<f64> = (0..seeds)
        .map(|s| {
            let p = DcsbmParams::planted(&[n], omega, 0.0, s).unwrap();
            dcsbm_generate(&p).unwrap().edge_count() as f64
        })
        .collect();
    let mean = counts.iter().sum::<f64>() / seeds as f64;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (seeds as f64 - 1.0);
    let se = (var / seeds as f64).sqrt();
    let expected = omega * (n * n) as f64 / 2.0;
    assert!((mean - expected).abs() < 3.0 * se, "mean {mean} expected {expected} se {se}");
}

#[test]
fn dcsbm_group_pair_counts_follow_omega() {
    let sizes = [30usize, 20];
    let (w_in, w_out) = (0.2, 0.05);
    let seeds = 400;
    let mut sums = [0.0f64; 3];
    for s in 0..seeds {
        let p = DcsbmParams::planted(&sizes, w_in, w_out, s).unwrap();
        let stats = compute_stats(&dcsbm_generate(&p).unwrap(), &p.groups).unwrap();
        sums[0] += stats.internal[0] as f64;
        sums[1] += stats.internal[1] as f64;
        sums[2] += stats.between(0, 1) as f64;
    }
    let expect = [w_in * 900.0 / 2.0, w_in * 400.0 / 2.0, w_out * 600.0];
    for (s, e) in sums.iter().zip(expect) {
        let mean = s / seeds as f64;
        // Poisson: se = sqrt(mean / seeds)
        assert!((mean - e).abs() < 4.0 * (e / seeds as f64).sqrt(), "{mean} vs {e}");
    }
}

#[test]
fn ring_round_trips_through_edge_list() {
    let (g, _) = ring_of_cliques(20, 5).unwrap();
    let mut buf = Vec::new();
    write_edge_list(&g, &mut buf).unwrap();
    let back = load_edge_list(buf.as_slice()).unwrap();
    assert_eq!((back.node_count(), back.edge_count()), (100, 220));
    assert_eq!(back, g);
    assert!((g.density() - 0.044).abs() < 1e-15);
}

#[test]
fn ring_stats_from_wiring() {
    let (g, truth) = ring_of_cliques(20, 5).unwrap();
    let stats = compute_stats(&g, &truth).unwrap();
    for r in 0..20 {
        assert_eq!(stats.internal[r], 10);
        assert_eq!(stats.between(r, (r + 1) % 20), 1);
        assert_eq!(stats.kappa[r], 22);
    }
    assert_eq!(stats.between(0, 2), 0);
}

#[test]
fn random_ports_vary_with_seed() {
    let (a, _) = ring_of_cliques_random_ports(10, 5, 1).unwrap();
    let (b, _) = ring_of_cliques_random_ports(10, 5, 2).unwrap();
    assert_ne!(a, b);
    assert_eq!(a.edge_count(), b.edge_count());
}
