//! Random inputs never beat the closed-form bound on the top Schmidt
//! coefficient, and the closed form sits under the coarse q^r estimate.

use wenzl_lab::entangle::rd_certificate;
use wenzl_lab::vertex::isometry;
use wenzl_lab::{admissible_triples, Calculus};

fn main() -> wenzl_lab::Result<()> {
    let calc = Calculus::new(3)?;
    for t in admissible_triples(3, 3) {
        let cert = rd_certificate(&calc, &isometry(&calc, t)?, 500, 42)?;
        println!(
            "{t}: max observed {:.6} <= {:.6} <= {:.6}  ({})",
            cert.max_observed,
            cert.bound_exact,
            cert.bound_coarse,
            if cert.violated { "VIOLATED" } else { "ok" }
        );
    }
    Ok(())
}
