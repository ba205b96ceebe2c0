//! Brackets the minimum output entropy between the closed form and the
//! smallest entropy seen on sampled and optimised inputs.

use std::sync::Arc;

use wenzl_lab::channel::{moe_bracket, Direction, EquivariantChannel};
use wenzl_lab::vertex::isometry;
use wenzl_lab::{admissible_triples, Calculus};

fn main() -> wenzl_lab::Result<()> {
    let calc = Calculus::new(3)?;
    for t in admissible_triples(2, 3) {
        let ch = EquivariantChannel::new(Arc::new(isometry(&calc, t)?), Direction::TraceFirst);
        let b = moe_bracket(&calc, &ch, 200, 5, 1)?;
        println!("{t}: {:.6} <= S_min <= {:.6}  gap {:.1e} ({:?})", b.lower, b.upper, b.gap, b.upper_source);
    }
    Ok(())
}
