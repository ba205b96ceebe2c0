//! The normalised three-vertex is an isometry from H_k into H_l ⊗ H_m.

use wenzl_lab::vertex::{isometry, summarize};
use wenzl_lab::{admissible_triples, Calculus};

fn main() -> wenzl_lab::Result<()> {
    let calc = Calculus::new(4)?;
    for t in admissible_triples(2, 3) {
        let s = summarize(&calc, &isometry(&calc, t)?)?;
        println!("{t}: {}", serde_json::to_string(&s).expect("summary serializes"));
    }
    Ok(())
}
