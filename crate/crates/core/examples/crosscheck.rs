//! Direct Galerkin solve against the transformed pipeline on the same noise.

use phi43::experiments::{crosscheck_rows, Experiment, Settings};

fn main() -> phi43::Result<()> {
    let s = Settings {
        n: 4,
        dt: 2e-3,
        t_end: 0.04,
        ..Settings::defaults(Experiment::Crosscheck)
    };
    for r in crosscheck_rows(&s)? {
        println!("{:<16} relative distance {:.3e}  ({})", r.case, r.rel_distance, if r.pass { "pass" } else { "fail" });
    }
    Ok(())
}
