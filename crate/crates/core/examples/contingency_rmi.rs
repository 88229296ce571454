//! Contingency tables, the number of tables with given margins, and the
//! reduced mutual information between a division and a block assignment.
//!
//! cargo run --example contingency_rmi

use blockkit::blocks::BlockAssignment;
use blockkit::partition::Partition;
use blockkit::rmi::{
    contingency, count_tables, log_omega_approx_with, log_omega_exact, reduced_mutual_information, OmegaConfig,
    OmegaEstimator, DEFAULT_EXACT_THRESHOLD,
};

fn main() -> blockkit::error::Result<()> {
    let communities = Partition::new(vec![0, 0, 0, 1, 1, 1, 2, 2])?;
    let blocks = BlockAssignment::new(vec![0, 0, 1, 1, 2, 2, 3, 3])?;
    let table = contingency(&communities, &blocks)?;
    println!("table {:?}, rows {:?}, cols {:?}", table.to_rows(), table.row_sums(), table.col_sums());

    let margins: [(&[u64], &[u64]); 4] = [
        (&[2, 1], &[2, 1]),
        (&[3, 3], &[3, 3]),
        (&[3, 3, 2], &[2, 2, 2, 2]),
        (&[5, 4, 3], &[6, 4, 2]),
    ];
    println!("{:>14} {:>14} {:>8} {:>9} {:>9}", "a", "b", "Omega", "Good", "eff.cols");
    for (a, b) in margins {
        let exact = count_tables(a, b)?.expect("small margins fit in u128");
        let ln = log_omega_exact(a, b, DEFAULT_EXACT_THRESHOLD)?;
        let good = log_omega_approx_with(a, b, OmegaEstimator::Good)?;
        let ec = log_omega_approx_with(a, b, OmegaEstimator::EffectiveColumns)?;
        println!(
            "{:>14} {:>14} {exact:>8} {:>9.3} {:>9.3}   (exact log {ln:.3})",
            format!("{a:?}"),
            format!("{b:?}"),
            good,
            ec
        );
    }

    let exact = OmegaConfig::exact();
    let n = communities.node_count();
    for (name, h) in [
        ("single block", BlockAssignment::single(n)),
        ("singletons", BlockAssignment::singletons(n)),
        ("pairs", blocks.clone()),
        ("the communities", BlockAssignment::from(communities.clone())),
    ] {
        let m = reduced_mutual_information(&contingency(&communities, &h)?, &exact)?;
        println!("RMI against {name:<16} {m:+.5}");
    }
    Ok(())
}
