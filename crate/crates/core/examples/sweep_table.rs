//! Prints the 15-point sweep (accuracy, cost) for each of the five datasets.
//!
//! cargo run --release -p cogsel-core --example sweep_table -- [master_seed]

use std::sync::Arc;
use std::time::Instant;

use cogsel_core::pool::{Environment, Sweep};
use cogsel_core::rng::derive_seed_str;
use cogsel_core::workload::builtin_datasets;

fn main() -> cogsel_core::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(42);
    for ds in builtin_datasets(seed) {
        let t = Instant::now();
        let env = Environment::new(Arc::new(ds))?;
        let t_feat = t.elapsed();
        let sweep = Sweep::run(&env, derive_seed_str(seed, env.id()))?;
        println!(
            "{} snr_est={:.2} dB  features {:.1?}  sweep {:.1?}",
            env.id(),
            env.profile.snr_db_estimate,
            t_feat,
            t.elapsed() - t_feat
        );
        for (i, r) in sweep.runs().iter().enumerate() {
            println!("  {i:2} {:<32} acc={:.4} cost={:8.2}", r.point.to_string(), r.accuracy, r.cost);
        }
    }
    Ok(())
}
