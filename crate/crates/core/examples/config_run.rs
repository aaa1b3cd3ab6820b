//! Layered configuration and a complete experiment run writing CSV and a manifest.

use phi43::experiments::{run, Experiment, Overrides, Settings};

const CONFIG: &str = r#"
[run]
seed = 3
N = 4
dt = 0.005
T = 0.02
t_burn = 5.0
"#;

fn main() -> phi43::Result<()> {
    let mut s = Settings::defaults(Experiment::SampleDriver);
    Overrides::from_toml(CONFIG)?.apply(&mut s);
    let dir = std::env::temp_dir().join("phi43-config-run");
    s.out = Some(dir.clone());
    let report = run(Experiment::SampleDriver, &s)?;
    println!("{} passed={} in {:.2} s", report.experiment, report.passed, report.runtime_s);
    for line in &report.summary {
        println!("  {line}");
    }
    println!("{} files under {}", report.files.len(), dir.display());
    Ok(())
}
