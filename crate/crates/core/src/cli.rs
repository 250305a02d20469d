//! Command-line front end.
//!
//! Every subcommand resolves a [`RunConfig`] from defaults, an optional JSON
//! file (`--config`) and explicit flags, in increasing order of precedence.
//! The resolved configuration and the tool version are embedded in every
//! file written.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::builder::PossibleValuesParser;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::assembly::GlobalSystem;
use crate::eigsolve::{solve_smallest, EigenError, Spectrum, DEFAULT_TOL};
use crate::mesh::{
    quality_report, write_mesh_with_meta, Domain, MeshError, MeshFamily, PolygonalMesh,
};
use crate::study::{
    convergence_study, default_betas, spurious_scan, Boundary, Problem, StudyError,
};
use crate::vem::{lame_from_young_poisson, Material, Stabilization, VemError};
use crate::vtk::{normalize_max, write_vtk, PointField, VtkError};

pub const TOOL_VERSION: &str = concat!("polyvem ", env!("CARGO_PKG_VERSION"));

const DEFAULT_YOUNG: f64 = 1.0;
const DEFAULT_POISSON: f64 = 0.35;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot read config file {path}: {source}")]
    ConfigFile {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config file: {0}")]
    ConfigJson(#[from] serde_json::Error),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Study(#[from] StudyError),
    #[error(transparent)]
    Vtk(#[from] VtkError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Fully resolved run parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub domain: Domain,
    pub family: String,
    pub n: usize,
    pub n_list: Vec<usize>,
    pub young: Option<f64>,
    pub poisson: Option<f64>,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub rho: f64,
    pub scheme: Stabilization,
    pub beta: f64,
    pub bc: Boundary,
    pub modes: usize,
    pub seed: u64,
    pub betas: Vec<f64>,
    pub match_tol: f64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            domain: Domain::Square,
            family: "triangles".into(),
            n: 16,
            n_list: vec![16, 32, 64],
            young: None,
            poisson: None,
            lambda: None,
            mu: None,
            rho: 1.0,
            scheme: Stabilization::DofiDofi,
            beta: 1.0,
            bc: Boundary::Clamped,
            modes: 10,
            seed: 0,
            betas: default_betas(),
            match_tol: 0.1,
            out: None,
            format: OutputFormat::Csv,
        }
    }
}

impl RunConfig {
    /// Merges `--config` (if any) and explicit flags over the defaults, then
    /// validates.
    pub fn resolve(args: &RunArgs) -> Result<Self, CliError> {
        let mut cfg = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|source| CliError::ConfigFile {
                    path: path.clone(),
                    source,
                })?;
                serde_json::from_str(&text)?
            }
            None => RunConfig::default(),
        };
        args.apply(&mut cfg)?;
        if cfg.lambda.is_none() && cfg.mu.is_none() {
            cfg.young.get_or_insert(DEFAULT_YOUNG);
            cfg.poisson.get_or_insert(DEFAULT_POISSON);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn family(&self) -> Result<MeshFamily, CliError> {
        Ok(MeshFamily::from_name(&self.family, self.seed, 0)?)
    }

    pub fn material(&self) -> Result<Material, CliError> {
        let bad = |e: VemError| CliError::Config(e.to_string());
        match (self.lambda, self.mu, self.young, self.poisson) {
            (Some(lambda), Some(mu), None, None) => Material::new(lambda, mu, self.rho).map_err(bad),
            (None, None, Some(young), Some(poisson)) => {
                let (mu, lambda) = lame_from_young_poisson(young, poisson).map_err(bad)?;
                Material::new(lambda, mu, self.rho).map_err(bad)
            }
            (None, None, _, _) => Err(CliError::Config(
                "young and poisson must be given together".into(),
            )),
            _ => Err(CliError::Config(
                "give either --lambda and --mu, or --young and --poisson".into(),
            )),
        }
    }

    pub fn problem(&self) -> Result<Problem, CliError> {
        Ok(Problem {
            domain: self.domain,
            family: self.family()?,
            material: self.material()?,
            scheme: self.scheme,
            beta: self.beta,
            boundary: self.bc,
            modes: self.modes,
            tol: DEFAULT_TOL,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        let family = self.family()?;
        if self.domain == Domain::Lshape && matches!(family, MeshFamily::Voronoi { .. }) {
            return bad("voronoi meshes are only available on the square".into());
        }
        if self.n == 0 {
            return bad("--n must be at least 1".into());
        }
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return bad("--n-list needs positive refinements".into());
        }
        if self.n_list.windows(2).any(|p| p[1] <= p[0]) {
            return bad("--n-list must be strictly increasing".into());
        }
        self.material()?;
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("--beta must be positive (got {})", self.beta));
        }
        if self.betas.is_empty() || self.betas.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            return bad("--betas must be positive".into());
        }
        if self.modes == 0 {
            return bad("--modes must be at least 1".into());
        }
        if !(self.match_tol >= 0.0) {
            return bad(format!("--match-tol must be non-negative (got {})", self.match_tol));
        }
        Ok(())
    }

    /// Provenance record embedded in output files.
    pub fn provenance(&self) -> Value {
        let material = self.material().ok().map(|m| {
            json!({ "lambda_s": m.lambda_s, "mu_s": m.mu_s, "rho": m.rho })
        });
        json!({ "tool": TOOL_VERSION, "config": self, "material": material })
    }
}

#[derive(Debug, Parser)]
#[command(name = "polyvem", version, about = "Virtual element eigenfrequencies of 2D elastic bodies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a mesh, write it as JSON and print its quality measures.
    Mesh(RunArgs),
    /// Solve for the lowest frequencies at refinement --n.
    Solve(RunArgs),
    /// Refinement study over --n-list with order fits.
    Study(RunArgs),
    /// Stabilization scan over --betas, flagging spurious frequencies.
    Spurious(RunArgs),
    /// Write the lowest modes at refinement --n as a legacy VTK file.
    ExportModes(RunArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON file with configuration keys; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Domain [default: square]
    #[arg(long, value_parser = PossibleValuesParser::new(["square", "lshape"]))]
    pub domain: Option<String>,
    /// Mesh family [default: triangles]
    #[arg(long, value_parser = PossibleValuesParser::new(MeshFamily::NAMES))]
    pub family: Option<String>,
    /// Cells per unit length (Voronoi: n^2 cells) [default: 16]
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated refinements for study and spurious [default: 16,32,64]
    #[arg(long, value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    /// Young's modulus [default: 1]
    #[arg(long)]
    pub young: Option<f64>,
    /// Poisson's ratio in [0, 0.5) [default: 0.35]
    #[arg(long)]
    pub poisson: Option<f64>,
    /// Lame lambda (with --mu, replaces --young/--poisson)
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Lame mu (with --lambda)
    #[arg(long)]
    pub mu: Option<f64>,
    /// Density [default: 1]
    #[arg(long)]
    pub rho: Option<f64>,
    /// Stabilization [default: dofi]
    #[arg(long, value_parser = PossibleValuesParser::new(["dofi", "trace"]))]
    pub scheme: Option<String>,
    /// Stabilization multiplier; baseline of the spurious scan [default: 1]
    #[arg(long)]
    pub beta: Option<f64>,
    /// Boundary conditions [default: clamped]
    #[arg(long, value_parser = PossibleValuesParser::new(["clamped", "bottom-dirichlet"]))]
    pub bc: Option<String>,
    /// Number of eigenpairs [default: 10]
    #[arg(long)]
    pub modes: Option<usize>,
    /// Seed of the deformed and Voronoi generators [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated multipliers for spurious [default: 4^k, k = -3..3]
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub betas: Option<Vec<f64>>,
    /// Relative distance to the baseline spectrum above which a frequency is
    /// spurious [default: 0.1]
    #[arg(long)]
    pub match_tol: Option<f64>,
    /// Output file (mesh: mesh.json, export-modes: modes.vtk, otherwise stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report format [default: csv]
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

impl RunArgs {
    fn apply(&self, cfg: &mut RunConfig) -> Result<(), CliError> {
        if let Some(d) = &self.domain {
            cfg.domain = match d.as_str() {
                "lshape" => Domain::Lshape,
                _ => Domain::Square,
            };
        }
        if let Some(f) = &self.family {
            cfg.family = f.clone();
        }
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(l) = &self.n_list {
            cfg.n_list = l.clone();
        }
        if self.young.is_some() || self.poisson.is_some() {
            if self.lambda.is_some() || self.mu.is_some() {
                return Err(CliError::Config(
                    "give either --lambda and --mu, or --young and --poisson".into(),
                ));
            }
            cfg.lambda = None;
            cfg.mu = None;
            cfg.young = self.young.or(cfg.young);
            cfg.poisson = self.poisson.or(cfg.poisson);
        }
        if self.lambda.is_some() || self.mu.is_some() {
            cfg.young = None;
            cfg.poisson = None;
            cfg.lambda = self.lambda.or(cfg.lambda);
            cfg.mu = self.mu.or(cfg.mu);
        }
        if let Some(r) = self.rho {
            cfg.rho = r;
        }
        if let Some(s) = &self.scheme {
            cfg.scheme = s.parse().map_err(|e: VemError| CliError::Config(e.to_string()))?;
        }
        if let Some(b) = self.beta {
            cfg.beta = b;
        }
        if let Some(bc) = &self.bc {
            cfg.bc = Boundary::parse(bc)
                .ok_or_else(|| CliError::Config(format!("unknown boundary condition `{bc}`")))?;
        }
        if let Some(m) = self.modes {
            cfg.modes = m;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(b) = &self.betas {
            cfg.betas = b.clone();
        }
        if let Some(t) = self.match_tol {
            cfg.match_tol = t;
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        if let Some(f) = self.format {
            cfg.format = f;
        }
        Ok(())
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            if !e.use_stderr() {
                return 0;
            }
            eprintln!("\n{}", Cli::command().render_usage());
            return 2;
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match execute(&cli.command, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn execute(command: &Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Mesh(a) => cmd_mesh(&RunConfig::resolve(a)?, stdout),
        Command::Solve(a) => cmd_solve(&RunConfig::resolve(a)?, stdout),
        Command::Study(a) => cmd_study(&RunConfig::resolve(a)?, stdout),
        Command::Spurious(a) => cmd_spurious(&RunConfig::resolve(a)?, stdout),
        Command::ExportModes(a) => cmd_export_modes(&RunConfig::resolve(a)?, stdout),
    }
}

fn csv_preamble(cfg: &RunConfig) -> String {
    format!("# {TOOL_VERSION}\n# provenance {}\n", cfg.provenance())
}

fn emit(cfg: &RunConfig, document: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &cfg.out {
        Some(path) => {
            fs::write(path, document)?;
            writeln!(stdout, "wrote {}", path.display())?;
        }
        None => stdout.write_all(document.as_bytes())?,
    }
    Ok(())
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

pub fn cmd_mesh(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let problem = cfg.problem()?;
    let mesh = problem.mesh(cfg.n)?;
    let report = quality_report(&mesh)?;
    let path = cfg.out.clone().unwrap_or_else(|| PathBuf::from("mesh.json"));
    write_mesh_with_meta(&mesh, &path, &cfg.provenance())?;
    writeln!(
        stdout,
        "domain {} family {} N {}\ncells {}\nvertices {}\nh_max {:.6e}\ngamma_min {:.6e}\nN_max {}\nmin_edge_ratio {:.6e}\nc(h) {:.6e}\nwrote {}",
        cfg.domain.name(),
        cfg.family,
        cfg.n,
        mesh.num_cells(),
        mesh.num_vertices(),
        report.h_max,
        report.gamma_min,
        report.n_max,
        report.min_edge_ratio,
        report.c_h,
        path.display()
    )?;
    Ok(())
}

/// Solves at `cfg.n`; a spectrum shorter than requested is returned with a
/// warning on stderr.
fn solve_spectrum(cfg: &RunConfig) -> Result<(PolygonalMesh, GlobalSystem, Spectrum), CliError> {
    let problem = cfg.problem()?;
    let mesh = problem.mesh(cfg.n)?;
    let system = problem.system(&mesh, cfg.n)?;
    let spectrum = match solve_smallest(&system, cfg.modes, problem.tol) {
        Ok(s) => s,
        Err(EigenError::Insufficient {
            requested,
            available,
            partial,
        }) => {
            eprintln!(
                "warning: only {available} of the {requested} requested eigenvalues are finite; table truncated"
            );
            *partial
        }
        Err(source) => {
            return Err(StudyError::Solve {
                n: cfg.n,
                beta: cfg.beta,
                source,
            }
            .into())
        }
    };
    Ok((mesh, system, spectrum))
}

pub fn cmd_solve(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (_, system, spectrum) = solve_spectrum(cfg)?;
    let rows = spectrum.eigenvalues.len();
    let document = match cfg.format {
        OutputFormat::Csv => {
            let mut s = csv_preamble(cfg);
            s.push_str("mode,frequency,eigenvalue,residual\n");
            for i in 0..rows {
                s.push_str(&format!(
                    "{},{:.10},{:.10e},{:.3e}\n",
                    i + 1,
                    spectrum.frequencies[i],
                    spectrum.eigenvalues[i],
                    spectrum.residuals[i]
                ));
            }
            s
        }
        OutputFormat::Json => {
            let modes: Vec<Value> = (0..rows)
                .map(|i| {
                    json!({
                        "mode": i + 1,
                        "frequency": spectrum.frequencies[i],
                        "eigenvalue": spectrum.eigenvalues[i],
                        "residual": spectrum.residuals[i],
                    })
                })
                .collect();
            pretty(&json!({ "meta": cfg.provenance(), "free_dofs": system.num_free(), "modes": modes }))
        }
    };
    if cfg.out.is_some() {
        for (i, w) in spectrum.frequencies.iter().enumerate() {
            writeln!(stdout, "{:>3}  {w:.10}", i + 1)?;
        }
    }
    emit(cfg, &document, stdout)
}

pub fn cmd_study(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let table = convergence_study(&cfg.problem()?, &cfg.n_list)?;
    let document = match cfg.format {
        OutputFormat::Csv => csv_preamble(cfg) + &table.to_csv(),
        OutputFormat::Json => pretty(&json!({ "meta": cfg.provenance(), "table": table.to_json() })),
    };
    emit(cfg, &document, stdout)
}

pub fn cmd_spurious(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let report = spurious_scan(&cfg.problem()?, &cfg.betas, &cfg.n_list, cfg.beta, cfg.match_tol)?;
    let document = match cfg.format {
        OutputFormat::Csv => csv_preamble(cfg) + &report.to_csv(),
        OutputFormat::Json => pretty(&json!({ "meta": cfg.provenance(), "report": report.to_json() })),
    };
    emit(cfg, &document, stdout)
}

pub fn cmd_export_modes(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (mesh, system, spectrum) = solve_spectrum(cfg)?;
    let fields: Vec<PointField> = spectrum
        .eigenvectors
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let mut values = system.dof_map.expand(x);
            normalize_max(&mut values);
            PointField {
                name: format!("mode_{}", i + 1),
                values,
            }
        })
        .collect();
    let path = cfg.out.clone().unwrap_or_else(|| PathBuf::from("modes.vtk"));
    let title = format!("{TOOL_VERSION} {} {} N={}", cfg.domain.name(), cfg.family, cfg.n);
    let metadata = [
        ("config", cfg.provenance().to_string()),
        ("version", TOOL_VERSION.to_string()),
    ];
    write_vtk(&path, &mesh, &fields, &title, &metadata)?;
    writeln!(stdout, "wrote {} modes to {}", fields.len(), path.display())?;
    Ok(())
}

/// Reads a configuration file without applying flags.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let args = RunArgs {
        config: Some(path.to_path_buf()),
        ..RunArgs::default()
    };
    RunConfig::resolve(&args)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> RunConfig {
        let cli = Cli::try_parse_from(args).unwrap();
        match cli.command {
            Command::Solve(a) | Command::Mesh(a) | Command::Study(a) => RunConfig::resolve(&a).unwrap(),
            _ => unreachable!(),
        }
    }

    #[test]
    fn defaults() {
        let cfg = parse(&["polyvem", "solve"]);
        assert_eq!(cfg.domain, Domain::Square);
        assert_eq!(cfg.family, "triangles");
        assert_eq!((cfg.n, cfg.modes, cfg.seed), (16, 10, 0));
        assert_eq!(cfg.n_list, vec![16, 32, 64]);
        assert_eq!((cfg.young, cfg.poisson), (Some(1.0), Some(0.35)));
        assert_eq!(cfg.scheme, Stabilization::DofiDofi);
        assert_eq!(cfg.bc, Boundary::Clamped);
        assert_eq!(cfg.format, OutputFormat::Csv);
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"n": 4, "family": "squares", "lambda": 2.0, "mu": 1.0, "bc": "bottom-dirichlet"}"#).unwrap();
        let cfg = load_config(&path).unwrap();
        assert_eq!((cfg.n, cfg.family.as_str(), cfg.lambda, cfg.young), (4, "squares", Some(2.0), None));
        assert_eq!(cfg.bc, Boundary::BottomDirichlet);
        let p = path.to_str().unwrap();
        let cfg = parse(&["polyvem", "solve", "--config", p, "--n", "8", "--poisson", "0.49"]);
        assert_eq!((cfg.n, cfg.family.as_str()), (8, "squares"));
        assert_eq!((cfg.lambda, cfg.mu, cfg.young, cfg.poisson), (None, None, Some(1.0), Some(0.49)));
    }

    #[test]
    fn lame_flags() {
        let cfg = parse(&["polyvem", "solve", "--lambda", "3", "--mu", "2"]);
        let m = cfg.material().unwrap();
        assert_eq!((m.lambda_s, m.mu_s), (3.0, 2.0));
        let cli = Cli::try_parse_from(["polyvem", "solve", "--lambda", "3"]).unwrap();
        let Command::Solve(a) = cli.command else { unreachable!() };
        assert!(RunConfig::resolve(&a).is_err());
        let cli = Cli::try_parse_from(["polyvem", "solve", "--lambda", "3", "--mu", "1", "--young", "2"]).unwrap();
        let Command::Solve(a) = cli.command else { unreachable!() };
        assert!(RunConfig::resolve(&a).is_err());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(Cli::try_parse_from(["polyvem", "mesh", "--family", "hexagons"]).is_err());
        for bad in [
            vec!["--n", "0"],
            vec!["--n-list", "32,16"],
            vec!["--poisson", "0.5"],
            vec!["--beta", "0"],
            vec!["--modes", "0"],
            vec!["--domain", "lshape", "--family", "voronoi"],
        ] {
            let mut args = vec!["polyvem", "solve"];
            args.extend(bad.iter());
            let cli = Cli::try_parse_from(&args).unwrap();
            let Command::Solve(a) = cli.command else { unreachable!() };
            assert!(RunConfig::resolve(&a).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn unknown_config_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"nn": 4}"#).unwrap();
        assert!(matches!(load_config(&path), Err(CliError::ConfigJson(_))));
    }

    #[test]
    fn config_roundtrips_through_provenance() {
        let cfg = parse(&["polyvem", "study", "--family", "voronoi", "--seed", "3", "--scheme", "trace"]);
        let back: RunConfig = serde_json::from_value(cfg.provenance()["config"].clone()).unwrap();
        assert_eq!(back, cfg);
    }
}
