//! Experiment drivers behind the command-line front end.
//!
//! Each driver takes resolved [`Settings`], writes CSV tables and a JSON
//! manifest into the output directory when one is given, and returns a
//! [`Report`] whose `passed` flag reflects every asserted tolerance.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::diff_ops::{identity_suite, SuiteConfig};
use crate::error::{Error, Result};
use crate::fourier::{FourierField, ModeLattice};
use crate::lp::{DyadicPartition, TrajectoryField};
use crate::noise::{
    build_driving_vector, driving_norm, regularity_report, ConstantsMode, DrivingVector, NoiseConfig, OuSampler,
    SampleMean, UsedConstants,
};
use crate::paracalc::Paracalc;
use crate::random::{gaussian_field, Spectrum};
use crate::renorm::renorm_table;
use crate::semigroup::alpha;
use crate::solver::{
    assemble_coefficients, direct_solve, initial_u, picard_solve, reconstruct_phi, Coefficients, DirectConfig,
    PicardOutcome, SolverConfig,
};

pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Subcommands of the front end.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    IdentitySuite,
    RenormTable,
    SampleDriver,
    Solve,
    Convergence,
    Crosscheck,
    OuStats,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::IdentitySuite => "identity-suite",
            Experiment::RenormTable => "renorm-table",
            Experiment::SampleDriver => "sample-driver",
            Experiment::Solve => "solve",
            Experiment::Convergence => "convergence",
            Experiment::Crosscheck => "crosscheck",
            Experiment::OuStats => "ou-stats",
        }
    }
}

/// Fully resolved parameters of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub seed: u64,
    pub eps: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub dt: f64,
    pub kappa: f64,
    pub t_burn: f64,
    pub grid_factor: usize,
    pub constants: ConstantsMode,
    pub eps_list: Vec<f64>,
    pub n_sum: usize,
    pub samples: usize,
    pub driver_samples: usize,
    pub lags: Vec<usize>,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    pub max_substeps: usize,
    /// Constant initial value `φ(0)`.
    pub phi0: f64,
    /// Seed of the independent noise in the negative control.
    pub partner_seed: u64,
    pub bony_tol: f64,
    pub partition_tol: f64,
    pub identity_tol: f64,
    pub crosscheck_tol: f64,
    pub deterministic_tol: f64,
    pub control_min: f64,
    pub z_score: f64,
    pub out: Option<PathBuf>,
}

impl Settings {
    /// Defaults of one subcommand; tolerances match the acceptance thresholds.
    pub fn defaults(exp: Experiment) -> Self {
        let mut s = Settings {
            seed: 1,
            eps: 0.1,
            n: 8,
            t_end: 0.05,
            dt: 1e-3,
            kappa: 0.05,
            t_burn: 5.0,
            grid_factor: 2,
            constants: ConstantsMode::Simulator,
            eps_list: vec![0.2, 0.1, 0.05],
            n_sum: 48,
            samples: 50,
            driver_samples: 1000,
            lags: vec![1, 5, 20],
            picard_tol: 1e-9,
            picard_max_iters: 40,
            max_substeps: 16,
            phi0: 0.0,
            partner_seed: 2,
            bony_tol: 1e-10,
            partition_tol: 1e-12,
            identity_tol: 1e-7,
            crosscheck_tol: 1e-2,
            deterministic_tol: 1e-6,
            control_min: 0.1,
            z_score: 3.0,
            out: None,
        };
        match exp {
            Experiment::IdentitySuite => {
                s.samples = 50;
            }
            Experiment::RenormTable => {
                s.eps_list = vec![1e-1, 1e-2, 1e-3, 0.0];
            }
            Experiment::OuStats => {
                s.n = 2;
                s.dt = 0.02;
                s.t_burn = 10.0;
                s.samples = 10_000;
            }
            Experiment::Crosscheck => {
                s.phi0 = 0.0;
            }
            _ => {}
        }
        s
    }

    pub fn lattice(&self) -> Result<ModeLattice> {
        ModeLattice::new(self.n, self.grid_factor)
    }

    pub fn noise(&self, eps: f64, seed: u64) -> Result<NoiseConfig> {
        NoiseConfig::new(seed, self.lattice()?, self.dt, self.t_end, self.t_burn, eps)
    }

    pub fn solver(&self, eps: f64) -> SolverConfig {
        SolverConfig {
            eps,
            kappa: self.kappa,
            dt: self.dt,
            t_end: self.t_end,
            picard_tol: self.picard_tol,
            picard_max_iters: self.picard_max_iters,
        }
    }

    pub fn used_constants(&self, eps: f64) -> UsedConstants {
        UsedConstants::compute(self.constants, eps, self.n, self.dt)
    }
}

/// Optional overrides read from the `[run]` table of a TOML file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub eps: Option<f64>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[serde(rename = "T")]
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub kappa: Option<f64>,
    pub t_burn: Option<f64>,
    pub grid_factor: Option<usize>,
    pub constants: Option<ConstantsMode>,
    pub eps_list: Option<Vec<f64>>,
    pub n_sum: Option<usize>,
    pub samples: Option<usize>,
    pub driver_samples: Option<usize>,
    pub lags: Option<Vec<usize>>,
    pub picard_tol: Option<f64>,
    pub picard_max_iters: Option<usize>,
    pub max_substeps: Option<usize>,
    pub phi0: Option<f64>,
    pub partner_seed: Option<u64>,
    pub bony_tol: Option<f64>,
    pub partition_tol: Option<f64>,
    pub identity_tol: Option<f64>,
    pub crosscheck_tol: Option<f64>,
    pub deterministic_tol: Option<f64>,
    pub control_min: Option<f64>,
    pub z_score: Option<f64>,
    pub out: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    run: Overrides,
}

impl Overrides {
    pub fn from_toml(text: &str) -> Result<Self> {
        let f: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(f.run)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn apply(&self, s: &mut Settings) {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = &self.$f { s.$f = v.clone(); } )* };
        }
        set!(
            seed, eps, n, t_end, dt, kappa, t_burn, grid_factor, constants, eps_list, n_sum, samples,
            driver_samples, lags, picard_tol, picard_max_iters, max_substeps, phi0, partner_seed, bony_tol,
            partition_tol, identity_tol, crosscheck_tol, deterministic_tol, control_min, z_score
        );
        if self.out.is_some() {
            s.out = self.out.clone();
        }
    }
}

/// Outcome of one experiment.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub passed: bool,
    pub summary: Vec<String>,
    pub files: Vec<String>,
    pub runtime_s: f64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    code_version: &'a str,
    settings: &'a Settings,
    passed: bool,
    summary: &'a [String],
    extra: serde_json::Value,
}

struct Output {
    dir: Option<PathBuf>,
    files: Vec<String>,
}

impl Output {
    fn new(dir: &Option<PathBuf>) -> Result<Self> {
        if let Some(d) = dir {
            fs::create_dir_all(d)?;
        }
        Ok(Output {
            dir: dir.clone(),
            files: Vec::new(),
        })
    }

    fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        if let Some(d) = &self.dir {
            let mut w = csv::Writer::from_path(d.join(name))?;
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
            self.files.push(name.into());
        }
        Ok(())
    }

    fn trajectory(&mut self, prefix: &str, traj: &TrajectoryField) -> Result<()> {
        if let Some(d) = &self.dir {
            for (n, f) in traj.fields().iter().enumerate() {
                let name = format!("{prefix}_{n:05}.bin");
                f.write_dump(BufWriter::new(fs::File::create(d.join(&name))?))?;
                self.files.push(name);
            }
        }
        Ok(())
    }

    fn finish(
        mut self,
        exp: Experiment,
        settings: &Settings,
        passed: bool,
        summary: Vec<String>,
        extra: serde_json::Value,
        start: Instant,
    ) -> Result<Report> {
        if let Some(d) = &self.dir {
            let m = Manifest {
                experiment: exp.name(),
                code_version: CODE_VERSION,
                settings,
                passed,
                summary: &summary,
                extra,
            };
            fs::write(d.join("manifest.json"), serde_json::to_string_pretty(&m)?)?;
            self.files.push("manifest.json".into());
        }
        Ok(Report {
            experiment: exp.name().into(),
            passed,
            summary,
            files: self.files,
            runtime_s: start.elapsed().as_secs_f64(),
        })
    }
}

pub fn run(exp: Experiment, s: &Settings) -> Result<Report> {
    match exp {
        Experiment::IdentitySuite => run_identity_suite(s),
        Experiment::RenormTable => run_renorm_table(s),
        Experiment::SampleDriver => run_sample_driver(s),
        Experiment::Solve => run_solve(s),
        Experiment::Convergence => run_convergence(s),
        Experiment::Crosscheck => run_crosscheck(s),
        Experiment::OuStats => run_ou_stats(s),
    }
}

/// One checked residual.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub identity_id: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub decay_rate: f64,
    pub epsilon: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Worst relative Bony reconstruction error over `samples` random pairs.
pub fn bony_residuals(lattice: &ModeLattice, samples: usize, seed: u64) -> Result<Vec<f64>> {
    let pc = Paracalc::for_lattice(lattice);
    (0..samples as u64)
        .map(|s| {
            let f = gaussian_field(lattice, seed.wrapping_add(2 * s), Spectrum::White, 1.0);
            let g = gaussian_field(lattice, seed.wrapping_add(2 * s + 1), Spectrum::White, 1.0);
            let [a, b, c] = pc.bony(&f, &g)?;
            let prod = f.multiply(&g)?;
            let sum = &(&a + &b) + &c;
            Ok((&sum - &prod).sup_norm() / prod.sup_norm())
        })
        .collect()
}

/// `max_k |Σ_j ρ_j(k) - 1|` over the lattice.
pub fn partition_defect(lattice: &ModeLattice) -> Result<f64> {
    let p = DyadicPartition::for_lattice(lattice);
    let w = p.weights(lattice)?;
    Ok((0..lattice.len())
        .map(|i| (w.iter().map(|b| b[i]).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max))
}

pub fn run_identity_suite(s: &Settings) -> Result<Report> {
    let start = Instant::now();
    let mut out = Output::new(&s.out)?;
    let lattice = s.lattice()?;
    let mut rows = Vec::new();
    for (k, r) in bony_residuals(&lattice, s.samples, s.seed)?.into_iter().enumerate() {
        rows.push(CheckRow {
            identity_id: format!("bony_{k}"),
            n: s.n,
            decay_rate: f64::NAN,
            epsilon: f64::NAN,
            residual: r,
            tolerance: s.bony_tol,
            pass: r <= s.bony_tol,
        });
    }
    let defect = partition_defect(&lattice)?;
    rows.push(CheckRow {
        identity_id: "partition_of_unity".into(),
        n: s.n,
        decay_rate: f64::NAN,
        epsilon: f64::NAN,
        residual: defect,
        tolerance: s.partition_tol,
        pass: defect <= s.partition_tol,
    });
    let suite = SuiteConfig {
        seed: s.seed,
        ..SuiteConfig::default()
    };
    for r in identity_suite(&suite)? {
        rows.push(CheckRow {
            identity_id: r.identity_id,
            n: r.n,
            decay_rate: r.decay_rate,
            epsilon: r.epsilon,
            residual: r.residual,
            tolerance: s.identity_tol,
            pass: r.residual <= s.identity_tol,
        });
    }
    out.csv("identities.csv", &rows)?;
    let failed: Vec<&CheckRow> = rows.iter().filter(|r| !r.pass).collect();
    let worst = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    let summary = vec![format!(
        "{} checks, {} failed, worst residual {worst:.3e}",
        rows.len(),
        failed.len()
    )];
    out.finish(
        Experiment::IdentitySuite,
        s,
        failed.is_empty(),
        summary,
        serde_json::Value::Null,
        start,
    )
}

pub fn run_renorm_table(s: &Settings) -> Result<Report> {
    let start = Instant::now();
    let mut out = Output::new(&s.out)?;
    let rows = renorm_table(&s.eps_list, s.n_sum);
    out.csv("renorm_table.csv", &rows)?;
    let passed = rows.iter().all(|r| r.a.is_finite() && r.b.is_finite() && r.c.is_finite());
    let summary = rows
        .iter()
        .map(|r| format!("eps={:e} a={:.10} b={:.10} c={:.10}", r.eps, r.a, r.b, r.c))
        .collect();
    out.finish(Experiment::RenormTable, s, passed, summary, serde_json::Value::Null, start)
}

pub fn run_sample_driver(s: &Settings) -> Result<Report> {
    let start = Instant::now();
    let mut out = Output::new(&s.out)?;
    let constants = s.used_constants(s.eps);
    let xi = build_driving_vector(&s.noise(s.eps, s.seed)?, constants)?;
    let rows = regularity_report(&xi, s.kappa)?;
    out.csv("norms.csv", &rows)?;
    if let Some(d) = &s.out {
        for f in xi.write_dir(&d.join("driver"))? {
            out.files.push(format!("driver/{f}"));
        }
    }
    let total = rows.last().map(|r| r.value).unwrap_or_default();
    let passed = rows.iter().all(|r| r.value.is_finite());
    let summary = vec![format!("a={} b={} ||Xi||={total:.6}", constants.a, constants.b)];
    let extra = serde_json::json!({ "constants": constants, "norms": rows });
    out.finish(Experiment::SampleDriver, s, passed, summary, extra, start)
}

/// Driving vector, coefficients and Picard solution for one `ε`.
pub struct TransformedRun {
    pub xi: DrivingVector,
    pub coeffs: Coefficients,
    pub picard: PicardOutcome,
    pub phi: TrajectoryField,
}

pub fn transformed_run(s: &Settings, eps: f64, seed: u64) -> Result<TransformedRun> {
    let xi = build_driving_vector(&s.noise(eps, seed)?, s.used_constants(eps))?;
    transformed_from(s, eps, xi)
}

pub fn transformed_from(s: &Settings, eps: f64, xi: DrivingVector) -> Result<TransformedRun> {
    let coeffs = assemble_coefficients(&xi, eps)?;
    let phi0 = FourierField::constant(xi.lattice(), s.phi0);
    let u0 = initial_u(&xi, &coeffs, &phi0)?;
    let picard = picard_solve(&s.solver(eps), &xi, &coeffs, &u0)?;
    let phi = reconstruct_phi(&picard.u, &coeffs, &xi)?;
    Ok(TransformedRun {
        xi,
        coeffs,
        picard,
        phi,
    })
}

pub fn run_solve(s: &Settings) -> Result<Report> {
    let start = Instant::now();
    let mut out = Output::new(&s.out)?;
    let r = transformed_run(s, s.eps, s.seed)?;
    out.csv("iterations.csv", &r.picard.log)?;
    out.trajectory("u", &r.picard.u)?;
    out.trajectory("phi", &r.phi)?;
    let passed = r.picard.mild_residual <= 2.0 * s.picard_tol;
    let summary = vec![format!(
        "{} iterations, horizon {}, mild residual {:.3e}",
        r.picard.iterations, r.picard.horizon, r.picard.mild_residual
    )];
    let extra = serde_json::json!({
        "constants": r.xi.constants,
        "horizon": r.picard.horizon,
        "mild_residual": r.picard.mild_residual,
    });
    out.finish(Experiment::Solve, s, passed, summary, extra, start)
}

/// `sup_t ‖a(t) - b(t)‖_{C^{-1/2-κ}}` on the common prefix of two trajectories.
pub fn negative_norm_distance(a: &TrajectoryField, b: &TrajectoryField, kappa: f64) -> Result<f64> {
    let n = a.len().min(b.len());
    let (a, b) = (a.truncate(n), b.truncate(n));
    let p = DyadicPartition::for_lattice(a.lattice().ok_or_else(|| Error::TimeGrid("empty".into()))?);
    p.sup_in_time(&a.sub(&b)?, -0.5 - kappa)
}

pub fn negative_norm(a: &TrajectoryField, kappa: f64) -> Result<f64> {
    let p = DyadicPartition::for_lattice(a.lattice().ok_or_else(|| Error::TimeGrid("empty".into()))?);
    p.sup_in_time(a, -0.5 - kappa)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub eps_a: f64,
    pub eps_b: f64,
    pub phi_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub eps: f64,
    pub u_distance: f64,
    pub xi_distance: f64,
}

/// Result tables of a convergence study.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTables {
    pub pairs: Vec<PairRow>,
    pub limit: Vec<LimitRow>,
}

impl ConvergenceTables {
    pub fn u_decreasing(&self) -> bool {
        self.limit.windows(2).all(|w| w[1].u_distance < w[0].u_distance)
    }

    pub fn xi_decreasing(&self) -> bool {
        self.limit.windows(2).all(|w| w[1].xi_distance < w[0].xi_distance)
    }

    pub fn phi_decreasing(&self) -> bool {
        self.pairs.windows(2).all(|w| w[1].phi_distance < w[0].phi_distance)
    }
}

pub fn convergence_tables(s: &Settings) -> Result<ConvergenceTables> {
    if s.eps_list.windows(2).any(|w| w[1] >= w[0]) || s.eps_list.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::Config("eps_list must be positive and strictly decreasing".into()));
    }
    let limit = transformed_run(s, 0.0, s.seed)?;
    let mut runs = Vec::new();
    let mut rows = Vec::new();
    for &eps in &s.eps_list {
        let r = transformed_run(s, eps, s.seed)?;
        let u_distance = negative_norm_distance(&r.picard.u, &limit.picard.u, s.kappa)?;
        let xi_distance = driving_norm(&r.xi.difference(&limit.xi)?, s.kappa)?;
        rows.push(LimitRow {
            eps,
            u_distance,
            xi_distance,
        });
        runs.push((eps, r.phi));
    }
    let mut pairs = Vec::new();
    for w in runs.windows(2) {
        pairs.push(PairRow {
            eps_a: w[0].0,
            eps_b: w[1].0,
            phi_distance: negative_norm_distance(&w[0].1, &w[1].1, s.kappa)?,
        });
    }
    Ok(ConvergenceTables { pairs, limit: rows })
}

pub fn run_convergence(s: &Settings) -> Result<Report> {
    let start = Instant::now();
    let mut out = Output::new(&s.out)?;
    let t = convergence_tables(s)?;
    out.csv("convergence_pairs.csv", &t.pairs)?;
    out.csv("convergence_limit.csv", &t.limit)?;
    let passed = t.u_decreasing() && t.xi_decreasing();
    let mut summary: Vec<String> = t
        .limit
        .iter()
        .map(|r| format!("eps={} |u-u0|={:.4e} |Xi-Xi0|={:.4e}", r.eps, r.u_distance, r.xi_distance))
        .collect();
    summary.push(format!(
        "u decreasing: {}, Xi decreasing: {}, phi pair distances decreasing: {}",
        t.u_decreasing(),
        t.xi_decreasing(),
        t.phi_decreasing()
    ));
    out.finish(Experiment::Convergence, s, passed, summary, serde_json::Value::Null, start)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrosscheckRow {
    pub case: String,
    pub rel_distance: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Direct solve on the OU field `x` with the constants of `xi`.
pub fn direct_phi(s: &Settings, eps: f64, xi: &DrivingVector, x: &TrajectoryField) -> Result<TrajectoryField> {
    let cfg = DirectConfig {
        eps,
        a: xi.constants.a,
        b: xi.constants.b,
        max_substeps: s.max_substeps,
    };
    let phi0 = FourierField::constant(xi.lattice(), s.phi0);
    let n = xi.times().len().min(x.len());
    Ok(direct_solve(&cfg, &x.truncate(n), &phi0)?.phi)
}

/// Relative `C_T C^{-1/2-κ}` distance between direct and transformed solutions.
pub fn crosscheck_rows(s: &Settings) -> Result<Vec<CrosscheckRow>> {
    crosscheck_with(s, &transformed_run(s, s.eps, s.seed)?)
}

/// [`crosscheck_rows`] reusing a transformed run at `s.eps`, `s.seed`.
pub fn crosscheck_with(s: &Settings, t: &TransformedRun) -> Result<Vec<CrosscheckRow>> {
    let eps = s.eps;
    let mut rows = Vec::new();

    // No noise and a constant initial value.
    let lattice = s.lattice()?;
    let times = crate::lp::uniform_times(s.t_end, s.dt)?;
    let zero = DrivingVector::zero(&lattice, times, eps)?;
    let c0 = if s.phi0 != 0.0 { s.phi0 } else { 0.3 };
    let det = Settings {
        phi0: c0,
        ..s.clone()
    };
    let flat = transformed_from(&det, eps, zero.clone())?;
    let d = direct_phi(&det, eps, &zero, &zero.x)?;
    let rel = negative_norm_distance(&flat.phi, &d, s.kappa)? / negative_norm(&d, s.kappa)?;
    rows.push(CrosscheckRow {
        case: "deterministic".into(),
        rel_distance: rel,
        threshold: s.deterministic_tol,
        pass: rel <= s.deterministic_tol,
    });

    let d = direct_phi(s, eps, &t.xi, &t.xi.x)?;
    let n = t.phi.len();
    let rel = negative_norm_distance(&t.phi, &d, s.kappa)? / negative_norm(&d.truncate(n), s.kappa)?;
    rows.push(CrosscheckRow {
        case: "coupled".into(),
        rel_distance: rel,
        threshold: s.crosscheck_tol,
        pass: rel <= s.crosscheck_tol,
    });

    let other = crate::noise::sample_ou(&s.noise(eps, s.partner_seed)?)?;
    let d = direct_phi(s, eps, &t.xi, &other)?;
    let rel = negative_norm_distance(&t.phi, &d, s.kappa)? / negative_norm(&d.truncate(n), s.kappa)?;
    rows.push(CrosscheckRow {
        case: "mismatched_seed".into(),
        rel_distance: rel,
        threshold: s.control_min,
        pass: rel >= s.control_min,
    });
    Ok(rows)
}

pub fn run_crosscheck(s: &Settings) -> Result<Report> {
    let start = Instant::now();
    let mut out = Output::new(&s.out)?;
    let rows = crosscheck_rows(s)?;
    out.csv("crosscheck.csv", &rows)?;
    let passed = rows.iter().all(|r| r.pass);
    let summary = rows
        .iter()
        .map(|r| format!("{}: relative distance {:.3e} (threshold {:.1e})", r.case, r.rel_distance, r.threshold))
        .collect();
    out.finish(Experiment::Crosscheck, s, passed, summary, serde_json::Value::Null, start)
}

/// One Monte-Carlo statistic against its target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatRow {
    pub statistic: String,
    pub mode: String,
    pub lag: usize,
    pub estimate: f64,
    pub std_err: f64,
    pub target: f64,
    pub z: f64,
    pub pass: bool,
}

impl StatRow {
    fn new(statistic: &str, mode: String, lag: usize, m: SampleMean, target: f64, z_max: f64) -> Self {
        let z = (m.mean - target) / m.std_err;
        StatRow {
            statistic: statistic.into(),
            mode,
            lag,
            estimate: m.mean,
            std_err: m.std_err,
            target,
            z,
            pass: m.within(target, z_max),
        }
    }
}

const STAT_MODES: [[i32; 3]; 3] = [[0, 0, 0], [1, 0, 0], [1, 1, 0]];

/// OU statistics over `samples` independent seeds.
///
/// For each seed the sampler is started from its stationary draw; per-mode
/// variances use `Re X̂(k)` (variance `1/(4α)` for `k ≠ 0`), lag covariances
/// use `Re(X̂(0,k) X̂(ℓδt,k)*)`, and the point variance uses `X(0,0)²`.
pub fn ou_rows(s: &Settings) -> Result<Vec<StatRow>> {
    let lattice = s.lattice()?;
    let max_lag = s.lags.iter().copied().max().unwrap_or(0);
    let mut var: Vec<Vec<f64>> = vec![Vec::with_capacity(s.samples); STAT_MODES.len()];
    let mut lag: Vec<Vec<Vec<f64>>> = vec![vec![Vec::with_capacity(s.samples); s.lags.len()]; STAT_MODES.len()];
    let mut point = Vec::with_capacity(s.samples);
    for k in 0..s.samples as u64 {
        let seed = s.seed.wrapping_mul(1_000_003).wrapping_add(k);
        let mut ou = OuSampler::new(&lattice, s.eps, s.dt, seed);
        let start: Vec<_> = STAT_MODES.iter().map(|&m| ou.coeff(m)).collect();
        point.push(ou.current().coeffs().iter().map(|c| c.re).sum::<f64>().powi(2));
        for (i, c) in start.iter().enumerate() {
            var[i].push(c.norm_sqr());
        }
        for step in 1..=max_lag {
            ou.advance();
            for (li, &l) in s.lags.iter().enumerate() {
                if l == step {
                    for (i, &m) in STAT_MODES.iter().enumerate() {
                        lag[i][li].push((start[i] * ou.coeff(m).conj()).re);
                    }
                }
            }
        }
    }
    let mut rows = Vec::new();
    for (i, &m) in STAT_MODES.iter().enumerate() {
        let name = format!("{:?}", m);
        let target = 1.0 / (2.0 * alpha(s.eps, m));
        rows.push(StatRow::new("variance", name.clone(), 0, SampleMean::of(&var[i]), target, s.z_score));
        for (li, &l) in s.lags.iter().enumerate() {
            let target = crate::noise::ou_covariance(s.eps, m, l as f64 * s.dt);
            rows.push(StatRow::new("lag_covariance", name.clone(), l, SampleMean::of(&lag[i][li]), target, s.z_score));
        }
    }
    let a = UsedConstants::compute(ConstantsMode::Simulator, s.eps, s.n, s.dt).a;
    rows.push(StatRow::new("point_variance", "x=0".into(), 0, SampleMean::of(&point), a, s.z_score));
    Ok(rows)
}

/// Means of `X²`, `𝒞₂` and `𝒟` at `t = 0` (spatial averages) over `driver_samples` seeds.
pub fn driver_rows(s: &Settings) -> Result<Vec<StatRow>> {
    let constants = s.used_constants(s.eps);
    let (mut x2, mut c2, mut d) = (vec![], vec![], vec![]);
    let one_slice = Settings {
        t_end: 0.0,
        ..s.clone()
    };
    for k in 0..s.driver_samples as u64 {
        let seed = s.seed.wrapping_mul(1_000_003).wrapping_add(k);
        let xi = build_driving_vector(&one_slice.noise(s.eps, seed)?, constants)?;
        x2.push(xi.x2.at(0).mean());
        c2.push(xi.c2.at(0).mean());
        d.push(xi.d.at(0).mean());
    }
    Ok(vec![
        StatRow::new("wick_square_mean", "mean".into(), 0, SampleMean::of(&x2), 0.0, s.z_score),
        StatRow::new("c2_mean", "mean".into(), 0, SampleMean::of(&c2), 0.0, s.z_score),
        StatRow::new("d_mean", "mean".into(), 0, SampleMean::of(&d), constants.c, s.z_score),
    ])
}

pub fn run_ou_stats(s: &Settings) -> Result<Report> {
    let start = Instant::now();
    let mut out = Output::new(&s.out)?;
    let mut rows = ou_rows(s)?;
    if s.driver_samples > 0 {
        rows.extend(driver_rows(s)?);
    }
    out.csv("ou_stats.csv", &rows)?;
    let passed = rows.iter().all(|r| r.pass);
    let summary = rows
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{} {} lag {}: z={:.2}", r.statistic, r.mode, r.lag, r.z))
        .chain(std::iter::once(format!("{} statistics", rows.len())))
        .collect();
    out.finish(Experiment::OuStats, s, passed, summary, serde_json::Value::Null, start)
}

/// One component norm at cutoffs `N` and `2N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow {
    pub quantity: String,
    /// Built without Wick subtraction and without the `b` counterterm.
    pub raw: bool,
    pub coarse: f64,
    pub fine: f64,
    pub ratio: f64,
}

/// Norms of `X²`, `𝒞₂`, `𝒟` and their unrenormalized versions under `N → 2N`.
///
/// The raw versions use `X² + a` in place of the Wick square, the matching
/// `I_raw = I + a(1 - e^{-(t + t_burn)})` (the exact response of the constant
/// mode), and no `b`: `𝒞₂^raw = I_raw ⊙ (X² + a)`, `𝒟^raw = 𝒟 + b`.
pub fn refinement_rows(s: &Settings) -> Result<Vec<RefinementRow>> {
    let kappa = s.kappa;
    let mut per_level = Vec::new();
    for n in [s.n, 2 * s.n] {
        let level = Settings { n, ..s.clone() };
        let cfg = level.noise(s.eps, s.seed)?;
        let xi = build_driving_vector(&cfg, level.used_constants(s.eps))?;
        let lattice = xi.lattice().clone();
        let p = DyadicPartition::for_lattice(&lattice);
        let pc = Paracalc::for_lattice(&lattice);
        let one = FourierField::constant(&lattice, 1.0);
        let (a, b) = (xi.constants.a, xi.constants.b);
        let burn = cfg.burn_steps() as f64 * cfg.dt;
        let mut c2_raw = Vec::with_capacity(xi.x.len());
        for (n, &t) in xi.times().iter().enumerate() {
            let i_raw = xi.i.at(n) + &one.scale(a * -(-(t + burn)).exp_m1());
            let x2_raw = xi.x2.at(n) + &one.scale(a);
            c2_raw.push(pc.resonant(&i_raw, &x2_raw)?);
        }
        let c2_raw = TrajectoryField::new(xi.times().to_vec(), c2_raw)?;
        let shift = |t: &TrajectoryField, c: f64| t.map(|f| f + &one.scale(c));
        per_level.push(vec![
            ("X2", false, p.sup_in_time(&xi.x2, -1.0 - kappa)?),
            ("X2", true, p.sup_in_time(&shift(&xi.x2, a), -1.0 - kappa)?),
            ("C2", false, p.sup_in_time(&xi.c2, -kappa)?),
            ("C2", true, p.sup_in_time(&c2_raw, -kappa)?),
            ("D", false, p.sup_in_time(&xi.d, -kappa)?),
            ("D", true, p.sup_in_time(&shift(&xi.d, b), -kappa)?),
        ]);
    }
    Ok(per_level[0]
        .iter()
        .zip(&per_level[1])
        .map(|(&(name, raw, c), &(_, _, f))| RefinementRow {
            quantity: name.into(),
            raw,
            coarse: c,
            fine: f,
            ratio: f / c,
        })
        .collect())
}

/// Smallest `K` with `value ≤ K·scale` over fitting samples.
pub fn fit_constant(pairs: &[(f64, f64)]) -> f64 {
    pairs
        .iter()
        .map(|&(value, scale)| value / scale)
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_parse_and_reject() {
        let o = Overrides::from_toml("[run]\nseed = 4\nN = 3\neps_list = [0.3, 0.1]\n").unwrap();
        let mut s = Settings::defaults(Experiment::Solve);
        o.apply(&mut s);
        assert_eq!((s.seed, s.n, s.eps_list.clone()), (4, 3, vec![0.3, 0.1]));
        assert!(Overrides::from_toml("[run]\nunknown = 1\n").is_err());
        assert!(Overrides::from_toml("[run]\nseed = \"x\"\n").is_err());
    }

    #[test]
    fn partition_and_bony_small() {
        let l = ModeLattice::new(4, 2).unwrap();
        assert!(partition_defect(&l).unwrap() < 1e-12);
        assert!(bony_residuals(&l, 3, 1).unwrap().iter().all(|&r| r < 1e-10));
    }

    #[test]
    fn convergence_single_eps_has_no_pairs() {
        let s = Settings {
            n: 2,
            dt: 0.01,
            t_end: 0.02,
            eps_list: vec![0.2],
            ..Settings::defaults(Experiment::Convergence)
        };
        let t = convergence_tables(&s).unwrap();
        assert!(t.pairs.is_empty());
        assert_eq!(t.limit.len(), 1);
        let bad = Settings {
            eps_list: vec![0.1, 0.2],
            ..s
        };
        assert!(convergence_tables(&bad).is_err());
    }
}
