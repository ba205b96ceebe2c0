//! Equivariant channels: outputs, the S1 -> S∞ norm and the complementary pair.

use std::sync::Arc;

use nalgebra::DVector;
use wenzl_lab::channel::{channel_apply_pure, channel_norm_1_to_inf, output_spectrum, Direction, EquivariantChannel};
use wenzl_lab::entangle::OptimizerConfig;
use wenzl_lab::vertex::isometry;
use wenzl_lab::{AdmissibleTriple, Calculus};

fn main() -> wenzl_lab::Result<()> {
    let calc = Calculus::new(3)?;
    let t = AdmissibleTriple::new(1, 1, 2)?;
    let ch = EquivariantChannel::new(Arc::new(isometry(&calc, t)?), Direction::TraceFirst);
    let comp = ch.complementary();

    let xi = DVector::from_fn(ch.input_dim(), |i, _| if i == 0 { 1.0 } else { 0.0 });
    let top = |s: Vec<f64>| s.into_iter().take(3).collect::<Vec<_>>();
    println!("{t}: output dims {} and {}", ch.output_dim(), comp.output_dim());
    println!("  spectrum      {:.6?}", top(output_spectrum(&channel_apply_pure(&ch, &xi)?)));
    println!("  complementary {:.6?}", top(output_spectrum(&channel_apply_pure(&comp, &xi)?)));

    let norm = channel_norm_1_to_inf(&calc, &ch, &OptimizerConfig::default())?;
    println!("  norm {:.12} exact {:.12} (q^r = {:.6})", norm.value, norm.exact, norm.lower_bound);
    Ok(())
}
