//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::coadjoint::{full_orbit_dim, generic_prefix_dims, genericity_report, jump_sets, numeric_prefix_dims, Functional, DEFAULT_SEED};
use crate::error::{Error, Result};
use crate::fourier::{invert, plancherel, QuadratureSpec, SchwartzFunction};
use crate::lie_basis::{build_layered_basis, left_normed_3_3, BasisConvention, Flavor, GroupSpec, LayeredBasis};
use crate::polarization::{polarization_check, polarization_for};
use crate::signatures::{log_signature, path_signature, PiecewiseLinearPath};

#[derive(Parser, Debug)]
#[command(name = "nilfourier", version, about = "Harmonic analysis on truncated signature groups")]
pub struct Cli {
    /// Group as `d,N`.
    #[arg(long, global = true, value_parser = parse_spec)]
    spec: Option<(usize, usize)>,
    #[arg(long, global = true, value_enum)]
    flavor: Option<FlavorArg>,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// JSON run configuration for the Fourier commands.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for JSON/CSV outputs, in addition to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Use the left-normed layer-3 basis for d=3, N=3.
    #[arg(long, global = true)]
    paper_basis: bool,
    /// Include wall-clock runtimes in the output.
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FlavorArg {
    FreeNilpotent,
    FullTensor,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Layer dimensions m_k.
    Dims,
    /// Basis elements, Malcev order and structure constants.
    Basis,
    /// Signature and log-signature of a piecewise-linear path given as CSV.
    Signature { path: PathBuf },
    /// Genericity verdict and B-matrix ranks for a functional.
    GenericTest { functional: PathBuf },
    /// Generic and sampled orbit dimensions of the Malcev prefix quotients.
    OrbitDims {
        functional: PathBuf,
        #[arg(long, default_value_t = 8)]
        samples: usize,
    },
    /// Jump sets S and T.
    JumpSets,
    /// Polarization of a functional with its checks.
    Polarization { functional: PathBuf },
    /// Fourier inversion of a Gaussian, with a convergence table.
    FourierDemo,
    /// Both sides of the Plancherel identity for a Gaussian.
    PlancherelCheck,
}

fn parse_spec(s: &str) -> std::result::Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [d, n] => Ok((d.parse().map_err(|_| format!("bad d in '{s}'"))?, n.parse().map_err(|_| format!("bad N in '{s}'"))?)),
        _ => Err(format!("expected d,N, got '{s}'")),
    }
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct GaussianConfig {
    widths: Vec<f64>,
    centre: Vec<f64>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct FourierConfig {
    spec: Option<GroupSpec>,
    #[serde(default)]
    quadrature: QuadratureSpec,
    gaussian: Option<GaussianConfig>,
    /// Evaluation points in exponential coordinates.
    points: Option<Vec<Vec<f64>>>,
    /// Node counts for the H and section axes in the convergence table.
    #[serde(default = "default_convergence_nodes")]
    convergence_nodes: Vec<usize>,
}

fn default_convergence_nodes() -> Vec<usize> {
    vec![12, 16, 24, 32, 48]
}

impl Cli {
    fn spec(&self) -> Result<GroupSpec> {
        let (d, n) = self.spec.ok_or_else(|| Error::Input("--spec d,N is required".into()))?;
        GroupSpec::with_flavor(d, n, self.flavor())
    }

    fn flavor(&self) -> Flavor {
        match self.flavor {
            Some(FlavorArg::FullTensor) => Flavor::FullTensor,
            _ => Flavor::FreeNilpotent,
        }
    }

    fn basis(&self, spec: GroupSpec) -> Result<LayeredBasis> {
        if self.paper_basis {
            if (spec.d, spec.level, spec.flavor) != (3, 3, Flavor::FreeNilpotent) {
                return Err(Error::Input("--paper-basis applies to d=3, N=3 only".into()));
            }
            return build_layered_basis(spec, BasisConvention::UserList(left_normed_3_3()));
        }
        build_layered_basis(spec, BasisConvention::Lyndon)
    }

    fn functional(&self, path: &Path) -> Result<(LayeredBasis, Functional)> {
        let value: Value = serde_json::from_str(&fs::read_to_string(path)?)?;
        let spec = Functional::spec_of_json(&value)?;
        let basis = self.basis(spec)?;
        let ell = Functional::from_json(&basis, value)?;
        Ok((basis, ell))
    }

    fn fourier_config(&self) -> Result<FourierConfig> {
        let mut config: FourierConfig = match &self.config {
            Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
            None => serde_json::from_value(json!({}))?,
        };
        if self.spec.is_some() {
            config.spec = Some(self.spec()?);
        }
        config.quadrature.validate()?;
        if config.convergence_nodes.iter().any(|&n| n < 8) {
            return Err(Error::Input("convergence_nodes must be at least 8".into()));
        }
        Ok(config)
    }

    fn emit(&self, name: &str, value: &Value) -> Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        if let Err(e) = writeln!(std::io::stdout(), "{text}") {
            if e.kind() != std::io::ErrorKind::BrokenPipe {
                return Err(e.into());
            }
        }
        if let Some(dir) = &self.out {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(format!("{name}.json")), text + "\n")?;
        }
        Ok(())
    }

    fn emit_csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        if let Some(dir) = &self.out {
            fs::create_dir_all(dir)?;
            let mut w = csv::Writer::from_path(dir.join(format!("{name}.csv")))?;
            w.write_record(header)?;
            for r in rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        Ok(())
    }
}

fn function_and_points(config: &FourierConfig, basis: &LayeredBasis) -> Result<(SchwartzFunction, Vec<Vec<f64>>)> {
    let n = basis.dim();
    let f = match &config.gaussian {
        Some(g) => SchwartzFunction::gaussian(g.widths.clone(), g.centre.clone())?,
        None => SchwartzFunction::gaussian(vec![1.0; n], vec![0.0; n])?,
    };
    if f.dim() != n {
        return Err(Error::DimensionMismatch(format!("gaussian has {} coordinates, group has {n}", f.dim())));
    }
    let points = match &config.points {
        Some(p) => p.clone(),
        None if n == 3 => vec![vec![0.0; 3], vec![0.0, 0.3, 0.0], vec![0.1, 0.0, 0.2]],
        None => vec![vec![0.0; n]],
    };
    if let Some(p) = points.iter().find(|p| p.len() != n) {
        return Err(Error::DimensionMismatch(format!("point with {} coordinates, group has {n}", p.len())));
    }
    Ok((f, points))
}

fn with_nodes(q: &QuadratureSpec, nodes: usize) -> QuadratureSpec {
    QuadratureSpec { h_nodes: nodes, section_nodes: nodes, relative_nodes: nodes, check_convergence: false, ..q.clone() }
}

fn fourier_demo(cli: &Cli) -> Result<()> {
    let start = Instant::now();
    let config = cli.fourier_config()?;
    let basis = cli.basis(config.spec.unwrap_or(GroupSpec::new(2, 2)?))?;
    let (f, points) = function_and_points(&config, &basis)?;
    let q = &config.quadrature;
    let mut rows = Vec::new();
    let mut max_err: f64 = 0.0;
    for x in &points {
        let g = basis.to_algebra(x)?.exp_t()?;
        let report = invert(&basis, &f, &g, q)?;
        let exact = f.eval(x);
        let err = (report.value() - exact).norm() / f.peak();
        max_err = max_err.max(err);
        rows.push(json!({
            "x": x,
            "f": [exact.re, exact.im],
            "inverted": report.value,
            "refined": report.refined,
            "relative_error": err,
            "generic_t_nodes": report.generic_nodes,
            "filled_t_nodes": report.filled_nodes,
        }));
    }
    let mut table = Vec::new();
    for &nodes in &config.convergence_nodes {
        let qn = with_nodes(q, nodes);
        let mut worst: f64 = 0.0;
        for x in &points {
            let g = basis.to_algebra(x)?.exp_t()?;
            worst = worst.max((invert(&basis, &f, &g, &qn)?.value() - f.eval(x)).norm() / f.peak());
        }
        table.push((nodes, worst));
    }
    let mut out = json!({
        "spec": basis.spec(),
        "quadrature": q,
        "c_norm": crate::fourier::c_norm(basis.dim(), jump_sets(&basis).s.len()),
        "points": rows,
        "max_relative_error": max_err,
        "convergence": table.iter().map(|(n, e)| json!({"nodes": n, "max_relative_error": e})).collect::<Vec<_>>(),
    });
    if cli.timings {
        out["seconds"] = json!(start.elapsed().as_secs_f64());
    }
    cli.emit("fourier_demo", &out)?;
    let csv_rows: Vec<Vec<String>> = table.iter().map(|(n, e)| vec![n.to_string(), format!("{e:.17e}")]).collect();
    cli.emit_csv("fourier_convergence", &["nodes", "max_relative_error"], &csv_rows)
}

fn plancherel_check(cli: &Cli) -> Result<()> {
    let start = Instant::now();
    let config = cli.fourier_config()?;
    let basis = cli.basis(config.spec.unwrap_or(GroupSpec::new(2, 2)?))?;
    let (f, _) = function_and_points(&config, &basis)?;
    let report = plancherel(&basis, &f, &config.quadrature)?;
    let mut table = Vec::new();
    for &nodes in &config.convergence_nodes {
        let r = plancherel(&basis, &f, &with_nodes(&config.quadrature, nodes))?;
        table.push((nodes, (r.rhs - r.lhs).abs() / r.lhs));
    }
    let mut out = json!({
        "spec": basis.spec(),
        "quadrature": config.quadrature,
        "lhs": report.lhs,
        "rhs": report.rhs,
        "ratio": report.ratio,
        "relative_error": (report.ratio - 1.0).abs(),
        "refined_rhs": report.refined_rhs,
        "convergence": table.iter().map(|(n, e)| json!({"nodes": n, "relative_error": e})).collect::<Vec<_>>(),
    });
    if cli.timings {
        out["seconds"] = json!(start.elapsed().as_secs_f64());
    }
    cli.emit("plancherel_check", &out)?;
    let csv_rows: Vec<Vec<String>> = table.iter().map(|(n, e)| vec![n.to_string(), format!("{e:.17e}")]).collect();
    cli.emit_csv("plancherel_convergence", &["nodes", "relative_error"], &csv_rows)
}

fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Dims => {
            let spec = cli.spec()?;
            let dims = spec.layer_dims()?;
            let layers: Vec<Value> = dims.iter().enumerate().map(|(k, m)| json!({"k": k + 1, "m_k": m})).collect();
            cli.emit("dims", &json!({"spec": spec, "layer_dims": dims, "layers": layers, "dim": dims.iter().sum::<usize>()}))
        }
        Command::Basis => cli.emit("basis", &cli.basis(cli.spec()?)?.to_json()),
        Command::Signature { path } => {
            let spec = cli.spec()?;
            let p = PiecewiseLinearPath::from_csv(fs::File::open(path)?)?;
            let sig = path_signature(&p, spec)?;
            let mut out = json!({"spec": spec, "signature": sig.levels()});
            if spec.flavor == Flavor::FreeNilpotent {
                let log = log_signature(&p, &cli.basis(spec)?)?;
                let rows: Vec<Value> = log.rows().into_iter().map(|(l, c)| json!({"element": l, "coefficient": c})).collect();
                out["log_signature"] = json!(rows);
                if let Some(dir) = &cli.out {
                    fs::create_dir_all(dir)?;
                    log.write_csv(fs::File::create(dir.join("log_signature.csv"))?)?;
                }
            }
            cli.emit("signature", &out)
        }
        Command::GenericTest { functional } => {
            let (basis, ell) = cli.functional(functional)?;
            let report = genericity_report(&basis, &ell)?;
            let ranks: Vec<Value> = report.ranks.iter().map(|(k, r, t)| json!({"k": k, "rank": r, "max_rank": t})).collect();
            cli.emit(
                "generic_test",
                &json!({"spec": basis.spec(), "generic": report.generic, "ranks": ranks, "alpha_112": report.alpha_112}),
            )
        }
        Command::OrbitDims { functional, samples } => {
            let (basis, ell) = cli.functional(functional)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            let numeric = numeric_prefix_dims(&basis, &ell, *samples, &mut rng);
            let generic = generic_prefix_dims(&basis);
            let labels: Vec<String> = (0..basis.dim()).map(|j| basis.label(j)).collect();
            cli.emit(
                "orbit_dims",
                &json!({
                    "spec": basis.spec(),
                    "prefix_labels": labels,
                    "generic_prefix_dims": generic,
                    "numeric_prefix_dims": numeric,
                    "full_orbit_dim": full_orbit_dim(&basis, &ell),
                    "seed": cli.seed,
                    "samples": samples,
                }),
            )
        }
        Command::JumpSets => {
            let basis = cli.basis(cli.spec()?)?;
            let mut out = jump_sets(&basis).to_json();
            out["spec"] = json!(basis.spec());
            cli.emit("jump_sets", &out)
        }
        Command::Polarization { functional } => {
            let (basis, ell) = cli.functional(functional)?;
            let h = polarization_for(&basis, &ell)?;
            let method = if basis.spec().is_degenerate() { "vergne" } else { "generic" };
            cli.emit(
                "polarization",
                &json!({
                    "spec": basis.spec(),
                    "method": method,
                    "subalgebra": h.to_json(&basis),
                    "report": polarization_check(&basis, &ell, &h),
                }),
            )
        }
        Command::FourierDemo => fourier_demo(cli),
        Command::PlancherelCheck => plancherel_check(cli),
    }
}

fn error_json(kind: &str, message: &str) -> String {
    json!({"error": kind, "message": message}).to_string()
}

/// Runs the CLI on the given arguments and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprintln!("{}", error_json("Usage", e.to_string().trim()));
            return 2;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_json(e.kind(), &e.to_string()));
            if matches!(e, Error::NonConvergence { .. }) {
                3
            } else {
                2
            }
        }
    }
}
