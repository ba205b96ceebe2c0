//! Alternating power iteration finds the supremum of the top Schmidt value.

use wenzl_lab::entangle::{max_schmidt_optimizer, OptimizerConfig};
use wenzl_lab::vertex::isometry;
use wenzl_lab::{AdmissibleTriple, Calculus};

fn main() -> wenzl_lab::Result<()> {
    let calc = Calculus::new(4)?;
    let cfg = OptimizerConfig { restarts: 10, seed: 7, ..OptimizerConfig::default() };
    for (k, l, m) in [(0, 2, 2), (2, 2, 2), (1, 3, 2), (4, 2, 2)] {
        let t = AdmissibleTriple::new(k, l, m)?;
        let r = max_schmidt_optimizer(&isometry(&calc, t)?, &cfg)?;
        let target = calc.params().lambda_max(&t).sqrt();
        println!(
            "{t}: found {:.12}  target {:.12}  restart {}/{}  sweeps {}",
            r.value, target, r.best_restart, r.restarts, r.sweeps
        );
    }
    Ok(())
}
