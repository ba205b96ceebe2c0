//! Quantum integers, irrep dimensions and theta-nets for a few ranks.

use wenzl_lab::{admissible_triples, QParams};

fn main() -> wenzl_lab::Result<()> {
    for n in [2, 3, 4, 5] {
        let p = QParams::new(n)?;
        let dims: Vec<usize> = (0..=6).map(|k| p.dim_irrep_usize(k)).collect::<Result<_, _>>()?;
        println!("N={n} q={:.6} dim H_k for k=0..6: {dims:?}", p.q());
    }

    let p = QParams::new(3)?;
    println!("\ntheta-nets at N=3, l=m=2:");
    for t in admissible_triples(2, 2) {
        let rd = p.rd_bound(&t)?;
        println!(
            "  {t}  theta={:<10.6} [k+1]/theta={:.6}  C^2 q^r={:.6}",
            p.theta_net(&t),
            rd.exact,
            rd.coarse
        );
    }
    Ok(())
}
