//! Renormalization constants: box sums, tails, discrete-scheme constants and the quadrature oracle.

use phi43::renorm::{a_const, quadrature_constants, renorm_constants, sim_constants};

fn main() {
    let r = renorm_constants(0.1, 0);
    println!("single mode: a = {}, b = {}, c = {}", a_const(0.1, 0).value, r.b, r.c);

    for eps in [1e-1, 1e-2, 0.0] {
        let r = renorm_constants(eps, 12);
        println!(
            "eps={eps:<5} N_sum=12: a={:.6} (+{:.1e})  b={:.6} (+{:.1e})  c={:.8} (+{:.1e})",
            r.a, r.a_tail, r.b, r.b_tail, r.c, r.c_tail
        );
    }

    let (qb, qc) = quadrature_constants(0.1, 2);
    let r = renorm_constants(0.1, 2);
    println!("N_sum=2: b {:.12} vs quadrature {:.12}; c {:.12} vs {:.12}", r.b, qb, r.c, qc);

    let s = sim_constants(0.1, 4, 1e-3);
    println!("simulator constants N=4 dt=1e-3: a={:.6} b={:.6} c={:.8}", s.a, s.b, s.c);
}
