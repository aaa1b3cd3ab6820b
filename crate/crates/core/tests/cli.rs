use std::fs;
use std::path::Path;
use std::process::Command;

fn phi43(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_phi43")).args(args).output().unwrap()
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, "[run]\nn_sum = 6\neps_list = [0.1, 0.01]\n").unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn renorm_table_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let outs: Vec<_> = ["a", "b"].iter().map(|d| tmp.path().join(d)).collect();
    for out in &outs {
        let o = phi43(&["renorm-table", "--config", &cfg, "--seed", "7", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).contains("renorm-table: PASS"));
    }
    // Everything but the trailing runtime column.
    let table = |p: &Path| -> Vec<String> {
        let text = fs::read_to_string(p.join("renorm_table.csv")).unwrap();
        text.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect()
    };
    assert_eq!(table(&outs[0]), table(&outs[1]));
    assert_eq!(table(&outs[0]).len(), 3);
    let manifest = |p: &Path| {
        let mut v: serde_json::Value = serde_json::from_slice(&fs::read(p.join("manifest.json")).unwrap()).unwrap();
        v["settings"]["out"] = serde_json::Value::Null;
        v
    };
    let m = manifest(&outs[0]);
    assert_eq!(m, manifest(&outs[1]));
    assert_eq!(m["settings"]["seed"], 7);
    assert_eq!(m["settings"]["n_sum"], 6);
}

#[test]
fn flags_override_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "[run]\nn_sum = 6\neps_list = [0.1]\nseed = 3\nkappa = 0.1\n").unwrap();
    let out = tmp.path().join("o");
    let o = phi43(&[
        "renorm-table", "--config", cfg.to_str().unwrap(), "--kappa", "0.02", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let m: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["settings"]["seed"], 3);
    assert_eq!(m["settings"]["kappa"], 0.02);
}

#[test]
fn bad_input_exits_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "[run\nseed = 1\n").unwrap();
    let unknown = tmp.path().join("unknown.toml");
    fs::write(&unknown, "[run]\nsede = 1\n").unwrap();
    for cfg in [&bad, &unknown] {
        let o = phi43(&["renorm-table", "--config", cfg.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{}", cfg.display());
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(phi43(&["renorm-table", "--config", "/nonexistent/run.toml"]).status.code(), Some(2));
    assert_eq!(phi43(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(phi43(&["solve", "--eps", "-1", "--N", "2"]).status.code(), Some(2));
}
