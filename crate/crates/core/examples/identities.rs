//! Residuals of the ε-corrected product and exponential rules.

use std::collections::BTreeMap;

use phi43::diff_ops::{identity_suite, SuiteConfig};

fn main() -> phi43::Result<()> {
    let cfg = SuiteConfig {
        samples: 3,
        ..SuiteConfig::default()
    };
    let mut worst: BTreeMap<(String, u64), f64> = BTreeMap::new();
    for r in identity_suite(&cfg)? {
        let w = worst.entry((r.identity_id, r.epsilon.to_bits())).or_default();
        *w = w.max(r.residual);
    }
    for ((id, eps), r) in worst {
        println!("{id:<18} eps={:<4} worst residual {r:.2e}", f64::from_bits(eps));
    }
    Ok(())
}
