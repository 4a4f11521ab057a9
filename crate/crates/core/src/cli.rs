//! The `fracneum` executable: configuration, subcommands and artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::critical::{self, CriticalPointReport, SolverOptions};
use crate::energy::{energy, GridFunction, Kind, ProblemConfig};
use crate::error::{Error, Result};
use crate::kernel::{assemble_weights, write_text, KernelWeights};
use crate::mesh::{build_mesh, DomainMesh, Grading};
use crate::nonlinearity::{Forcing, Nonlinearity};
use crate::propcheck::{self, HypothesisSet};
use crate::spectrum::eig_p2;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_GEOMETRY: i32 = 2;
pub const EXIT_UNCONVERGED: i32 = 3;
pub const EXIT_VERIFY_FAILED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "fracneum", about = "Fractional p-Laplacian with nonlocal Neumann conditions on an interval")]
pub struct Args {
    #[command(subcommand)]
    pub command: Command,
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Overrides `seed` from the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; falls back to FRACNEUM_THREADS.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Build the mesh and pair weights and write them as text.
    Mesh,
    /// Eigenvalues and eigenvectors of the p = 2 operator.
    Eigs,
    /// Mountain-pass search for the positive and negative solutions.
    Solve,
    /// Coercive descent on I.
    Minimize,
    /// Randomized inequality, growth, gradient and invariant checks.
    Verify,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub p: f64,
    pub s: f64,
    #[serde(default)]
    pub lambda: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    #[serde(default)]
    pub lo: f64,
    #[serde(default = "one")]
    pub hi: f64,
    #[serde(default = "half")]
    pub collar_radius: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub n_interior: usize,
    /// Collar cells on each side; defaults to `max(4, n_interior / 5)`.
    pub n_exterior: Option<usize>,
    #[serde(default = "uniform")]
    pub grading: String,
    #[serde(default = "default_ratio")]
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySection {
    #[serde(default = "zero_name")]
    pub name: String,
    pub kappa: Option<f64>,
    pub q: Option<f64>,
    pub c: Option<f64>,
    pub r: Option<f64>,
    pub d: Option<f64>,
    pub rho: Option<f64>,
    pub gamma: Option<f64>,
    pub c0: Option<f64>,
    pub amp: Option<f64>,
    pub freq: Option<f64>,
}

impl Default for NonlinearitySection {
    fn default() -> Self {
        NonlinearitySection {
            name: zero_name(),
            kappa: None,
            q: None,
            c: None,
            r: None,
            d: None,
            rho: None,
            gamma: None,
            c0: None,
            amp: None,
            freq: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub tol: f64,
    pub max_iter: usize,
    pub armijo: f64,
    pub shrink: f64,
    pub memory: usize,
    pub path_nodes: usize,
    pub max_sweeps: usize,
    pub newton_switch: f64,
    pub sphere_samples: usize,
    /// Mountain-pass endpoint is `endpoint_scale · profile`; 0 picks the
    /// smallest power of two with nonpositive endpoint energy.
    pub endpoint_scale: f64,
    /// `constant` or `cosine` (`1 + cos(π(x − lo)/|Ω|)/2`).
    pub endpoint_profile: String,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverOptions::default();
        SolverSection {
            tol: d.tol,
            max_iter: d.max_iter,
            armijo: d.armijo,
            shrink: d.shrink,
            memory: d.memory,
            path_nodes: d.path_nodes,
            max_sweeps: d.max_sweeps,
            newton_switch: d.newton_switch,
            sphere_samples: d.sphere_samples,
            endpoint_scale: 0.0,
            endpoint_profile: "cosine".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigsSection {
    /// Number of eigenpairs written; 0 writes all.
    pub count: usize,
}

impl Default for EigsSection {
    fn default() -> Self {
        EigsSection { count: 10 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub n_samples: usize,
    pub p_lo: f64,
    pub p_hi: f64,
    pub fd_step: f64,
    pub fd_tol: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            n_samples: 100_000,
            p_lo: 1.01,
            p_hi: 10.0,
            fd_step: 1e-6,
            fd_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub seed: u64,
    pub problem: ProblemSection,
    pub domain: Option<DomainSection>,
    pub mesh: MeshSection,
    #[serde(default)]
    pub nonlinearity: NonlinearitySection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub eigs: EigsSection,
    #[serde(default)]
    pub verify: VerifySection,
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn uniform() -> String {
    "uniform".into()
}
fn default_ratio() -> f64 {
    0.8
}
fn zero_name() -> String {
    "zero".into()
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn domain(&self) -> DomainSection {
        self.domain.clone().unwrap_or(DomainSection {
            lo: 0.0,
            hi: 1.0,
            collar_radius: 0.5,
        })
    }

    pub fn build_mesh(&self) -> Result<DomainMesh> {
        let d = self.domain();
        let m = &self.mesh;
        let grading = match m.grading.as_str() {
            "uniform" => Grading::Uniform,
            "geometric" => Grading::Geometric(m.ratio),
            other => {
                return Err(Error::Config(format!(
                    "mesh.grading: expected `uniform` or `geometric`, got `{other}`"
                )))
            }
        };
        let n_ext = m.n_exterior.unwrap_or((m.n_interior / 5).max(4));
        build_mesh(d.lo, d.hi, m.n_interior, n_ext, d.collar_radius, grading)
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity> {
        let nl = &self.nonlinearity;
        let p = self.problem.p;
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| Error::Config(format!("nonlinearity.{key} is required for `{}`", nl.name)))
        };
        let wrap = |r: Result<Nonlinearity>| r.map_err(|e| Error::Config(format!("nonlinearity: {e}")));
        match nl.name.as_str() {
            "zero" => Ok(Nonlinearity::zero(p)),
            "pure_power" => wrap(Nonlinearity::pure_power(need(nl.kappa, "kappa")?, need(nl.q, "q")?, p)),
            "perturbed_power" => wrap(Nonlinearity::perturbed_power(
                need(nl.c, "c")?,
                need(nl.r, "r")?,
                need(nl.d, "d")?,
                need(nl.rho, "rho")?,
                p,
            )),
            "affine_decay" => {
                let forcing = Forcing {
                    c0: nl.c0.unwrap_or(0.0),
                    amp: nl.amp.unwrap_or(0.0),
                    freq: nl.freq.unwrap_or(0.0),
                };
                wrap(Nonlinearity::affine_decay(need(nl.gamma, "gamma")?, forcing, p))
            }
            other => Err(Error::Config(format!(
                "nonlinearity.name: unknown built-in `{other}` (zero, pure_power, perturbed_power, affine_decay)"
            ))),
        }
    }

    pub fn solver_options(&self, seed: u64) -> SolverOptions {
        let s = &self.solver;
        SolverOptions {
            tol: s.tol,
            max_iter: s.max_iter,
            armijo: s.armijo,
            shrink: s.shrink,
            memory: s.memory,
            path_nodes: s.path_nodes,
            max_sweeps: s.max_sweeps,
            newton_switch: s.newton_switch,
            sphere_samples: s.sphere_samples,
            seed,
            ..SolverOptions::default()
        }
    }

    pub fn problem(&self) -> Result<ProblemConfig> {
        let mesh = Arc::new(self.build_mesh()?);
        let w = Arc::new(assemble_weights(&mesh, self.problem.p, self.problem.s)?);
        ProblemConfig::new(
            self.problem.p,
            self.problem.s,
            self.problem.lambda,
            mesh,
            w,
            self.nonlinearity()?,
        )
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Geometry(_) | Error::Connectivity { .. } | Error::Domain(_) => EXIT_GEOMETRY,
        Error::Divergence { .. } | Error::LinearAlgebra(_) => EXIT_UNCONVERGED,
        _ => EXIT_CONFIG,
    }
}

fn write(out: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = out.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

fn endpoint_profile(cfg: &ProblemConfig, name: &str) -> Result<GridFunction> {
    let mesh = &cfg.mesh;
    let (lo, len) = (mesh.omega_lo, mesh.omega_hi - mesh.omega_lo);
    match name {
        "constant" => Ok(GridFunction::constant(mesh, 1.0)),
        "cosine" => Ok(GridFunction::from_fn(mesh, |x| {
            1.0 + 0.5 * (std::f64::consts::PI * (x - lo) / len).cos()
        })),
        other => Err(Error::Config(format!(
            "solver.endpoint_profile: expected `constant` or `cosine`, got `{other}`"
        ))),
    }
}

/// `T · profile` for the configured scale, or the smallest `T = 2^k` with
/// nonpositive E₊ energy when the scale is 0.
pub fn solve_endpoint(cfg: &ProblemConfig, section: &SolverSection) -> Result<GridFunction> {
    let profile = endpoint_profile(cfg, &section.endpoint_profile)?;
    if section.endpoint_scale > 0.0 {
        return Ok(profile.scaled(section.endpoint_scale));
    }
    for k in 0..40 {
        let e = profile.scaled(2f64.powi(k));
        if energy(Kind::EPlus, &e, cfg)? <= 0.0 {
            return Ok(e);
        }
    }
    Err(Error::Geometry(
        "solver.endpoint_scale: no T <= 2^39 gives a nonpositive endpoint energy".into(),
    ))
}

fn report_artifacts(out: &Path, tag: &str, rep: &CriticalPointReport, mesh: &DomainMesh) -> Result<()> {
    write(out, &format!("report_{tag}.json"), &rep.to_json())?;
    write(out, &format!("solution_{tag}.csv"), &rep.solution().to_csv(mesh)?)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    passed: bool,
    inequalities: propcheck::InequalityReport,
    growth: Vec<propcheck::GrowthReport>,
    gradients: Vec<propcheck::GradientCheck>,
    fd_tol: f64,
    invariants: Vec<propcheck::InvariantCheck>,
}

fn run_verify(config: &Config, cfg: &ProblemConfig, seed: u64) -> Result<VerifyReport> {
    let v = &config.verify;
    let inequalities = propcheck::check_pointwise_inequalities(v.n_samples, (v.p_lo, v.p_hi), seed)?;
    let mesh = &cfg.mesh;
    let xs: Vec<f64> = mesh.interior_range().map(|k| mesh.cell_center(k)).collect();
    let grid = propcheck::default_t_grid();
    let nl = &cfg.nonlinearity;
    let mut growth = Vec::new();
    for (set, present) in [
        (HypothesisSet::G, nl.ar.is_some()),
        (HypothesisSet::F, nl.superlinear.is_some()),
        (HypothesisSet::Linear, nl.linear.is_some()),
    ] {
        if present {
            growth.push(propcheck::check_growth(nl, set, &grid, &xs, seed)?);
        }
    }
    let (lo, len) = (mesh.omega_lo, mesh.omega_hi - mesh.omega_lo);
    let u = GridFunction::from_fn(mesh, |x| {
        let t = (x - lo) / len;
        0.3 + (2.3 * t).sin() + 0.4 * (5.1 * t).cos()
    });
    let vanishing = xs.iter().all(|&x| nl.g(x, 0.0) == 0.0);
    let mut gradients = Vec::new();
    for kind in [Kind::I, Kind::EPlus, Kind::EMinus] {
        if kind == Kind::I || vanishing {
            gradients.push(propcheck::check_gradient_fd(kind, &u, cfg, v.fd_step)?);
        }
    }
    let invariants = propcheck::check_invariants(mesh, &cfg.weights, cfg.p, seed)?;
    let passed = inequalities.total_violations == 0
        && growth.iter().all(|g| g.passed)
        && gradients.iter().all(|g| g.max_rel_error < v.fd_tol)
        && invariants.iter().all(|c| c.passed);
    Ok(VerifyReport {
        passed,
        inequalities,
        growth,
        gradients,
        fd_tol: v.fd_tol,
        invariants,
    })
}

fn eigen_csv(values: &[f64]) -> String {
    let mut s = String::new();
    for (i, l) in values.iter().enumerate() {
        let mut v = l.to_string();
        if l.is_finite() && !v.contains('.') {
            v.push_str(".0");
        }
        let _ = writeln!(s, "{}, {v}", i + 1);
    }
    s
}

/// Runs one subcommand and returns the process exit status. Human-readable
/// progress goes to stdout, errors to stderr.
pub fn run(command: Command, config: &Config, out: &Path, seed: u64) -> Result<i32> {
    fs::create_dir_all(out)?;
    let cfg = config.problem()?;
    let mesh = cfg.mesh.clone();
    let w: &KernelWeights = &cfg.weights;
    match command {
        Command::Mesh => {
            let path = write(out, "mesh.txt", &write_text(&mesh, w)?)?;
            println!(
                "mesh: {} interior + {} exterior cells, tail fraction {:.3e} -> {}",
                mesh.n_interior(),
                mesh.n_exterior(),
                w.tail_fraction(),
                path.display()
            );
            Ok(EXIT_OK)
        }
        Command::Eigs => {
            if cfg.p != 2.0 {
                return Err(Error::Config(format!(
                    "problem.p: eigs needs p = 2, got {}",
                    cfg.p
                )));
            }
            let count = match config.eigs.count {
                0 => mesh.n_interior(),
                c => c.min(mesh.n_interior()),
            };
            let pairs = eig_p2(&mesh, w, count, cfg.p)?;
            let values: Vec<f64> = pairs.iter().map(|p| p.lambda).collect();
            write(out, "eigenvalues.csv", &eigen_csv(&values))?;
            for (i, pr) in pairs.iter().enumerate() {
                write(out, &format!("eigenvector_{}.csv", i + 1), &pr.phi.to_csv(&mesh)?)?;
            }
            match values.get(1) {
                Some(l2) => println!("eigs: {count} eigenpairs, lambda_1 = {:e}, lambda_2 = {l2}", values[0]),
                None => println!("eigs: {count} eigenpair, lambda_1 = {:e}", values[0]),
            }
            Ok(EXIT_OK)
        }
        Command::Solve => {
            let opts = config.solver_options(seed);
            let e = solve_endpoint(&cfg, &config.solver)?;
            let plus = critical::mountain_pass(&e, Kind::EPlus, &cfg, &opts)?;
            report_artifacts(out, "e_plus", &plus, &mesh)?;
            let minus = critical::mountain_pass(&e.scaled(-1.0), Kind::EMinus, &cfg, &opts)?;
            report_artifacts(out, "e_minus", &minus, &mesh)?;
            for r in [&plus, &minus] {
                println!(
                    "solve {}: energy {:.12e}, grad_norm {:.3e}, sign {}, converged {}",
                    r.kind.as_str(),
                    r.energy,
                    r.grad_norm,
                    r.sign_class.as_str(),
                    r.converged
                );
            }
            Ok(if plus.converged && minus.converged { EXIT_OK } else { EXIT_UNCONVERGED })
        }
        Command::Minimize => {
            let opts = SolverOptions {
                coercive: true,
                ..config.solver_options(seed)
            };
            let u0 = GridFunction::zeros(&mesh);
            let rep = critical::minimize(&u0, Kind::I, &cfg, &opts)?;
            report_artifacts(out, "minimize", &rep, &mesh)?;
            println!(
                "minimize: energy {:.12e}, grad_norm {:.3e}, iterations {}, converged {}",
                rep.energy, rep.grad_norm, rep.iterations, rep.converged
            );
            Ok(if rep.converged { EXIT_OK } else { EXIT_UNCONVERGED })
        }
        Command::Verify => {
            let rep = run_verify(config, &cfg, seed)?;
            write(
                out,
                "verify.json",
                &serde_json::to_string_pretty(&rep).expect("verify report serializes"),
            )?;
            println!(
                "verify: {} inequality violations in {} samples, passed {}",
                rep.inequalities.total_violations, rep.inequalities.n_samples, rep.passed
            );
            Ok(if rep.passed { EXIT_OK } else { EXIT_VERIFY_FAILED })
        }
    }
}

fn init_threads(flag: Option<usize>) -> Result<()> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("FRACNEUM_THREADS") {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| {
                Error::Config(format!("FRACNEUM_THREADS: expected a thread count, got `{v}`"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("--threads: {e}")))?;
    }
    Ok(())
}

pub fn main() -> i32 {
    let args = Args::parse();
    let result = (|| {
        init_threads(args.threads)?;
        let path = args
            .config
            .as_deref()
            .ok_or_else(|| Error::Config("--config is required".into()))?;
        let config = Config::load(path)?;
        let seed = args.seed.unwrap_or(config.seed);
        run(args.command, &config, &args.out, seed)
    })();
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("fracneum: {e}");
            exit_code(&e)
        }
    }
}
