//! The scaled Choi form changes sign exactly at the d-positivity threshold.

use wenzl_lab::channel::choi_witness_value;
use wenzl_lab::vertex::isometry;
use wenzl_lab::{AdmissibleTriple, Calculus};

fn main() -> wenzl_lab::Result<()> {
    let calc = Calculus::new(4)?;
    let t = AdmissibleTriple::new(2, 2, 2)?;
    let iso = isometry(&calc, t)?;
    for d in 1..=2 {
        let th = choi_witness_value(&calc, &iso, d, 1.0, 0, 0)?.threshold;
        println!("{t} d={d}: threshold {th:.6}");
        for f in [0.9, 1.0, 1.1] {
            let r = choi_witness_value(&calc, &iso, d, f * th, 100, 3)?;
            println!(
                "  scale {:.6}: witness {:+.3e}  sampled min {:+.3e}  ({:?})",
                r.scale,
                r.witness_value,
                r.sampled_min.unwrap_or(f64::NAN),
                r.witness_kind
            );
        }
    }
    Ok(())
}
