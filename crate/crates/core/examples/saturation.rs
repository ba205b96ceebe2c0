//! The alternating input η_k(1,2) puts a plateau of |A| equal Schmidt
//! coefficients at the maximum, and the plateau mass grows with N.

use wenzl_lab::entangle::{saturation_witness, verify_saturation};
use wenzl_lab::vertex::isometry;
use wenzl_lab::{AdmissibleTriple, Calculus};

fn main() -> wenzl_lab::Result<()> {
    for (n, k, l, m) in [(3, 1, 1, 2), (4, 2, 2, 2), (5, 1, 2, 3)] {
        let calc = Calculus::new(n)?;
        let t = AdmissibleTriple::new(k, l, m)?;
        let w = saturation_witness(&calc, t)?;
        let rep = verify_saturation(&calc, &isometry(&calc, t)?, &w)?;
        println!("N={n} {t}: |A|={} lambda_max={:.6} top={:.6?}", rep.family_size, rep.lambda_max, rep.top);
    }

    let bell = AdmissibleTriple::new(0, 1, 1)?;
    println!("\nplateau mass at {bell}:");
    for n in 3..=9 {
        let calc = Calculus::new(n)?;
        let rep = verify_saturation(&calc, &isometry(&calc, bell)?, &saturation_witness(&calc, bell)?)?;
        println!("  N={n} mass={:.6}", rep.mass);
    }
    Ok(())
}
