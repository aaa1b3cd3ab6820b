//! Picard iteration for the transformed equation and reconstruction of φ.

use phi43::experiments::{transformed_run, Experiment, Settings};

fn main() -> phi43::Result<()> {
    let s = Settings {
        n: 4,
        dt: 2e-3,
        t_end: 0.04,
        ..Settings::defaults(Experiment::Solve)
    };
    let r = transformed_run(&s, s.eps, s.seed)?;
    for row in &r.picard.log {
        println!("iter {:>2}  residual {:.3e}  horizon {}", row.iter, row.residual, row.horizon);
    }
    println!("mild residual {:.2e}", r.picard.mild_residual);
    let last = r.phi.len() - 1;
    println!("φ(T): mean {:.5}, sup {:.5}", r.phi.at(last).mean(), r.phi.at(last).sup_norm());
    Ok(())
}
