//! Coupled runs over a decreasing ε list against the ε = 0 limit.

use phi43::experiments::{convergence_tables, Experiment, Settings};

fn main() -> phi43::Result<()> {
    let s = Settings {
        n: 4,
        dt: 2e-3,
        t_end: 0.04,
        eps_list: vec![0.4, 0.2, 0.1],
        ..Settings::defaults(Experiment::Convergence)
    };
    let t = convergence_tables(&s)?;
    for r in &t.limit {
        println!("eps={:<4} |u-u0| {:.4e}  |Xi-Xi0| {:.4e}", r.eps, r.u_distance, r.xi_distance);
    }
    for p in &t.pairs {
        println!("|phi({}) - phi({})| = {:.4e}", p.eps_a, p.eps_b, p.phi_distance);
    }
    println!("decreasing: u {}, Xi {}", t.u_decreasing(), t.xi_decreasing());
    Ok(())
}
