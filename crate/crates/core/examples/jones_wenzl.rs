//! Builds Jones-Wenzl projections by the Wenzl recursion and checks them.

use wenzl_lab::jones_wenzl::verify_jw;
use wenzl_lab::Calculus;

fn main() -> wenzl_lab::Result<()> {
    let calc = Calculus::new(3)?;
    println!("{:>2} {:>6} {:>5} {:>10} {:>10} {:>10}", "k", "dim", "rank", "idem", "cap", "trace err");
    for k in 0..=6 {
        let r = verify_jw(calc.params(), &*calc.projection(k)?);
        println!(
            "{k:>2} {:>6} {:>5} {:>10.1e} {:>10.1e} {:>10.1e}",
            calc.dim(k)?,
            r.rank,
            r.idempotence,
            r.cap_annihilation,
            r.trace_rel_err
        );
    }
    Ok(())
}
