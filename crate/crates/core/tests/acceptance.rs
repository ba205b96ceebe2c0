//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.

use std::io::Write;
use std::process::Command;
use std::sync::Arc;

use wenzl_lab::channel::{choi_witness_value, d_positivity_threshold, moe_bracket, Direction, EquivariantChannel};
use wenzl_lab::channel::channel_norm_1_to_inf;
use wenzl_lab::entangle::{
    max_schmidt_optimizer, rd_certificate, saturation_witness, schmidt_spectrum, separability_witness_highest_weight,
    verify_saturation, OptimizerConfig,
};
use wenzl_lab::jones_wenzl::verify_jw;
use wenzl_lab::vertex::{isometry, isometry_defect, range_defect, theta_by_trace, three_vertex};
use wenzl_lab::{admissible_triples, AdmissibleTriple, Calculus, Error};

const CAP: usize = 4096;
const RANKS: [usize; 3] = [3, 4, 5];

/// Outcome of one criterion: failures are collected, not short-circuited.
struct Criterion {
    failures: Vec<String>,
    checked: usize,
    notes: Vec<String>,
}

impl Criterion {
    fn new() -> Self {
        Self { failures: Vec::new(), checked: 0, notes: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }
}

fn triples(n: usize, max_lm: usize) -> Vec<AdmissibleTriple> {
    let mut out = Vec::new();
    for l in 0..=max_lm {
        for m in 0..=max_lm {
            if n.pow((l + m) as u32) <= CAP {
                out.extend(admissible_triples(l, m));
            }
        }
    }
    out
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn calculi() -> Vec<Calculus> {
    RANKS.iter().map(|&n| Calculus::with_cap(n, CAP).unwrap()).collect()
}

fn theta_equivalence(calcs: &[Calculus], c: &mut Criterion) {
    for calc in calcs {
        for t in triples(calc.n(), 4) {
            let closed = calc.params().theta_net(&t);
            let traced = theta_by_trace(&three_vertex(calc, t).unwrap());
            c.check(rel(traced, closed) <= 1e-7, || format!("N={} {t}: {traced} vs {closed}", calc.n()));
        }
    }
}

fn jones_wenzl_validity(calcs: &[Calculus], c: &mut Criterion) {
    for calc in calcs {
        let n = calc.n();
        let mut k = 0;
        while n.pow(k as u32) <= CAP {
            let r = verify_jw(calc.params(), &calc.projection(k).unwrap());
            c.check(r.idempotence <= 1e-9, || format!("N={n} k={k} idempotence {}", r.idempotence));
            c.check(r.symmetry <= 1e-9, || format!("N={n} k={k} symmetry {}", r.symmetry));
            c.check(r.cap_annihilation <= 1e-9, || format!("N={n} k={k} cap {}", r.cap_annihilation));
            c.check(r.trace_rel_err <= 1e-8, || format!("N={n} k={k} trace rel err {}", r.trace_rel_err));
            c.check(r.rank == r.expected_rank, || format!("N={n} k={k} rank {} vs {}", r.rank, r.expected_rank));
            k += 1;
        }
    }
}

fn isometry_contract(calcs: &[Calculus], c: &mut Criterion) {
    for calc in calcs {
        for t in triples(calc.n(), 4) {
            let iso = isometry(calc, t).unwrap();
            let gram = isometry_defect(&iso);
            let range = range_defect(calc, &iso).unwrap();
            c.check(gram <= 1e-9, || format!("N={} {t}: isometry defect {gram}", calc.n()));
            c.check(range <= 1e-9, || format!("N={} {t}: range defect {range}", calc.n()));
        }
    }
}

fn rapid_decay(calcs: &[Calculus], c: &mut Criterion) {
    for calc in calcs {
        for t in triples(calc.n(), 4) {
            let iso = isometry(calc, t).unwrap();
            let cert = rd_certificate(calc, &iso, 200, 0).unwrap();
            c.check(cert.max_observed <= cert.bound_exact + 1e-8, || {
                format!("N={} {t}: λ_1 = {} above {}", calc.n(), cert.max_observed, cert.bound_exact)
            });
            c.check(cert.bound_exact <= cert.bound_coarse, || {
                format!("N={} {t}: exact {} above coarse {}", calc.n(), cert.bound_exact, cert.bound_coarse)
            });
        }
    }
}

fn saturation(calcs: &[Calculus], c: &mut Criterion) {
    for calc in calcs {
        for t in triples(calc.n(), 4) {
            let witness = match saturation_witness(calc, t) {
                Ok(w) => w,
                Err(Error::WitnessUnavailable(_)) => continue,
                Err(e) => panic!("N={} {t}: {e}", calc.n()),
            };
            let iso = isometry(calc, t).unwrap();
            let rep = verify_saturation(calc, &iso, &witness).unwrap();
            c.check(rep.max_rel_dev <= 1e-8, || format!("N={} {t}: plateau deviation {}", calc.n(), rep.max_rel_dev));
        }
    }
    for (n, triple, plateau, size) in [(3, (1, 1, 2), 3.0 / 8.0, 1), (4, (2, 2, 2), 2.0 / 7.0, 2)] {
        let calc = &calcs[n - 3];
        let t = AdmissibleTriple::new(triple.0, triple.1, triple.2).unwrap();
        let witness = saturation_witness(calc, t).unwrap();
        let rep = verify_saturation(calc, &isometry(calc, t).unwrap(), &witness).unwrap();
        c.check(rep.family_size == size, || format!("N={n} {t}: |A| = {}", rep.family_size));
        c.check(rep.top[..size].iter().all(|&v| rel(v, plateau) <= 1e-8), || format!("N={n} {t}: top {:?}", rep.top));
    }
}

fn optimizer_attainment(calcs: &[Calculus], c: &mut Criterion) {
    let mut worst: f64 = 0.0;
    for calc in calcs {
        for t in triples(calc.n(), 3) {
            let iso = isometry(calc, t).unwrap();
            let r = max_schmidt_optimizer(&iso, &OptimizerConfig { restarts: 20, ..Default::default() }).unwrap();
            let target = calc.params().lambda_max(&t).sqrt();
            worst = worst.max(rel(r.value, target));
            c.check(rel(r.value, target) <= 1e-6, || format!("N={} {t}: {} vs {target}", calc.n(), r.value));
            c.check(r.value <= target + 1e-8, || format!("N={} {t}: {} exceeds {target}", calc.n(), r.value));
        }
    }
    c.note(format!("worst relative gap {worst:.1e}"));
}

fn channel_norms(calcs: &[Calculus], c: &mut Criterion) {
    let mut floor_misses = 0;
    for calc in calcs {
        for t in triples(calc.n(), 3) {
            let ch = EquivariantChannel::new(Arc::new(isometry(calc, t).unwrap()), Direction::TraceFirst);
            let r = channel_norm_1_to_inf(calc, &ch, &OptimizerConfig::default()).unwrap();
            c.check(r.rel_err <= 1e-6, || format!("N={} {t}: norm {} vs {}", calc.n(), r.value, r.exact));
            let upper = r.upper_bound.unwrap();
            c.check(r.value <= upper * (1.0 + 1e-6), || format!("N={} {t}: norm {} above C²q^r = {upper}", calc.n(), r.value));
            let floor_ok = r.value >= r.lower_bound * (1.0 - 1e-6);
            if !floor_ok {
                floor_misses += 1;
            }
            c.check(floor_ok, || format!("N={} {t}: norm {} below q^r = {}", calc.n(), r.value, r.lower_bound));
        }
    }
    if floor_misses > 0 {
        c.note(format!(
            "{floor_misses} triples fall below q^r; 1/[r+1]_q < q^r for every r ≥ 1, so that floor cannot hold"
        ));
    }
}

fn moe(calcs: &[Calculus], c: &mut Criterion) {
    for calc in calcs {
        for t in triples(calc.n(), 3) {
            let ch = EquivariantChannel::new(Arc::new(isometry(calc, t).unwrap()), Direction::TraceFirst);
            let b = moe_bracket(calc, &ch, 100, 0, 0).unwrap();
            c.check(b.lower <= b.upper + 1e-8, || format!("N={} {t}: lower {} above upper {}", calc.n(), b.lower, b.upper));
            if t.k == 0 && t.l == t.m {
                c.check(b.gap.abs() < 1e-8, || format!("N={} {t}: Bell gap {}", calc.n(), b.gap));
            }
            if t.is_highest_weight() && t.l > 0 && t.m > 0 {
                let w = separability_witness_highest_weight(calc, t.l, t.m, 1, 2).unwrap();
                let e = schmidt_spectrum(&w.vector, t.l).unwrap().entropy;
                c.check(e.abs() < 1e-8 && b.lower.abs() < 1e-8 && w.range_residual < 1e-8, || {
                    format!("N={} {t}: witness entropy {e}, lower {}, residual {}", calc.n(), b.lower, w.range_residual)
                });
            }
        }
    }
}

fn choi_thresholds(calcs: &[Calculus], c: &mut Criterion) {
    for calc in calcs {
        for t in triples(calc.n(), 3).into_iter().filter(|t| t.r >= 1) {
            let iso = isometry(calc, t).unwrap();
            for d in 1..=2 {
                let th = d_positivity_threshold(calc.params(), t, d).unwrap();
                let at = match choi_witness_value(calc, &iso, d, th, 200, 0) {
                    Ok(r) => r,
                    Err(Error::WitnessUnavailable(_)) => continue,
                    Err(e) => panic!("N={} {t} d={d}: {e}", calc.n()),
                };
                let below = choi_witness_value(calc, &iso, d, th * (1.0 - 1e-3), 0, 0).unwrap().witness_value;
                let above = choi_witness_value(calc, &iso, d, th * (1.0 + 1e-3), 0, 0).unwrap().witness_value;
                let tag = || format!("N={} {t} d={d}", calc.n());
                c.check(at.residual.abs() < 1e-9 && at.witness_value.abs() < 1e-9, || {
                    format!("{}: value {} residual {}", tag(), at.witness_value, at.residual)
                });
                c.check(below > 0.0 && above < 0.0, || format!("{}: no sign change ({below}, {above})", tag()));
                let min = at.sampled_min.unwrap();
                c.check(min >= -1e-6, || format!("{}: sampled min {min}", tag()));
            }
        }
    }
    let p = calcs[0].params();
    let bell = AdmissibleTriple::new(0, 1, 1).unwrap();
    for (d, expected) in [(1, 3.0), (2, 1.5)] {
        let th = d_positivity_threshold(p, bell, d).unwrap();
        c.check(rel(th, expected) <= 1e-12, || format!("N=3 (0,1,1) d={d}: threshold {th}"));
    }
}

fn asymptotic_mass(c: &mut Criterion) {
    let t = AdmissibleTriple::new(0, 1, 1).unwrap();
    let masses: Vec<f64> = (3..=9)
        .map(|n| {
            let calc = Calculus::new(n).unwrap();
            let rep = verify_saturation(&calc, &isometry(&calc, t).unwrap(), &saturation_witness(&calc, t).unwrap()).unwrap();
            let expected = (n as f64 - 2.0) / n as f64;
            c.check(rel(rep.mass, expected) <= 1e-12, || format!("N={n}: mass {} vs {expected}", rep.mass));
            rep.mass
        })
        .collect();
    c.check(masses.windows(2).all(|w| w[1] > w[0]), || format!("not increasing: {masses:?}"));
    c.check(masses[4] > 0.7, || format!("N=7 mass {}", masses[4]));
}

fn determinism(c: &mut Criterion) {
    let bin = env!("CARGO_BIN_EXE_wenzl-lab");
    let jobs: [&[&str]; 7] = [
        &["theta", "--n", "3", "--k", "2", "--l", "2", "--m", "2"],
        &["schmidt", "--n", "4", "--k", "2", "--l", "2", "--m", "2", "--seed", "7"],
        &["max-schmidt", "--n", "3", "--k", "2", "--l", "2", "--m", "2", "--seed", "11"],
        &["moe", "--n", "3", "--k", "1", "--l", "2", "--m", "3", "--seed", "3", "--restarts", "4"],
        &["choi", "--n", "4", "--k", "2", "--l", "2", "--m", "2", "--d", "2", "--seed", "5"],
        &["channel", "--n", "3", "--k", "1", "--l", "1", "--m", "2", "--seed", "1"],
        &["sweep", "--n-max", "4", "--samples", "20", "--seed", "9", "--format", "csv"],
    ];
    for args in jobs {
        let outputs: Vec<Vec<u8>> = ["1", "1", "4"]
            .iter()
            .map(|threads| {
                let out = Command::new(bin).args(args).env("RAYON_NUM_THREADS", threads).output().unwrap();
                c.check(out.status.code() == Some(0), || format!("{args:?}: exit {:?}", out.status.code()));
                out.stdout
            })
            .collect();
        c.check(!outputs[0].is_empty() && outputs.windows(2).all(|w| w[0] == w[1]), || {
            format!("{args:?}: reports differ between runs")
        });
    }
}

#[test]
fn acceptance() {
    let calcs = calculi();
    type Run<'a> = Box<dyn Fn(&mut Criterion) + 'a>;
    let criteria: Vec<(&str, Run)> = vec![
        ("theta-net oracle equivalence", Box::new(|c| theta_equivalence(&calcs, c))),
        ("Jones-Wenzl validity", Box::new(|c| jones_wenzl_validity(&calcs, c))),
        ("isometry contract", Box::new(|c| isometry_contract(&calcs, c))),
        ("rapid-decay certificate", Box::new(|c| rapid_decay(&calcs, c))),
        ("saturation plateau", Box::new(|c| saturation(&calcs, c))),
        ("optimizer attainment", Box::new(|c| optimizer_attainment(&calcs, c))),
        ("channel norms", Box::new(|c| channel_norms(&calcs, c))),
        ("MOE bracket", Box::new(|c| moe(&calcs, c))),
        ("Choi thresholds", Box::new(|c| choi_thresholds(&calcs, c))),
        ("asymptotic mass", Box::new(asymptotic_mass)),
        ("determinism", Box::new(determinism)),
    ];

    // Written straight to the process stdout so the lines show without
    // `--nocapture`.
    let mut stdout = std::io::stdout();
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        let mut c = Criterion::new();
        run(&mut c);
        let verdict = if c.failures.is_empty() { "PASS" } else { "FAIL" };
        let mut line = format!(
            "criterion {:>2} {verdict} {name}: {}/{} checks held ({:.1} s)",
            i + 1,
            c.checked - c.failures.len(),
            c.checked,
            start.elapsed().as_secs_f64()
        );
        for note in &c.notes {
            line.push_str(&format!("; {note}"));
        }
        if let Some(first) = c.failures.first() {
            line.push_str(&format!("; first failure: {first}"));
            failed.push(i + 1);
        }
        writeln!(stdout, "{line}").unwrap();
        stdout.flush().unwrap();
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
