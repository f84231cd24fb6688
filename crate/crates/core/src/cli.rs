//! Command-line front end. [`run`] parses arguments, executes one
//! subcommand and returns the process exit code:
//!
//! | code | meaning                                   |
//! |------|-------------------------------------------|
//! | 0    | success                                   |
//! | 1    | usage error or unparsable input           |
//! | 2    | numeric failure or unknown preset         |
//! | 3    | I/O failure, including a malformed field  |

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::expr::{format, parse, Expr, ParamSet};
use crate::family::{build_family, preset, FamilyConfig, SceneKind, SceneSpec, PRESET_NAMES};
use crate::field::{read_field, sample_field, write_field, GridSpec, ScalarField};
use crate::mesh::{export_obj, export_ply, export_stl, marching_cubes, sample_parametric_sign, TriangleMesh};
use crate::sensitivity::sweep_with;

#[derive(Debug)]
enum CliError {
    Usage(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numeric(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Numeric(m) | CliError::Io(m) => m,
        }
    }
}

fn usage(e: impl ToString) -> CliError {
    CliError::Usage(e.to_string())
}

fn numeric(e: impl ToString) -> CliError {
    CliError::Numeric(e.to_string())
}

fn io_at(path: &Path) -> impl Fn(io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "implicitforge",
    version,
    about = "Sample, mesh and compare implicit surfaces"
)]
struct Cli {
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse an expression and print its canonical form and free names.
    Check(CheckArgs),
    /// Sample an expression on a grid and write an IFLD field.
    Sample(SampleArgs),
    /// Extract a mesh from a field, an expression or a preset.
    Mesh(MeshArgs),
    /// Sweep one parameter of a preset and write a JSON report.
    Sweep(SweepArgs),
    /// List presets or print one.
    #[command(subcommand)]
    Preset(PresetCommand),
}

#[derive(Debug, Args)]
#[group(multiple = false)]
struct Source {
    /// Expression text.
    #[arg(long, allow_hyphen_values = true)]
    expr: Option<String>,
    /// File holding the expression text.
    #[arg(long)]
    file: Option<PathBuf>,
    /// Family configuration (JSON).
    #[arg(long)]
    family: Option<PathBuf>,
    /// Named preset; supplies default bounds, grid and parameters.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Debug, Args)]
struct Space {
    /// xmin,xmax,ymin,ymax,zmin,zmax
    #[arg(long, allow_hyphen_values = true)]
    bounds: Option<String>,
    /// Nx,Ny,Nz
    #[arg(long)]
    grid: Option<String>,
    /// Parameter binding `name=value`; repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[command(flatten)]
    source: Source,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    space: Space,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MeshFormat {
    Obj,
    Stl,
    Ply,
}

#[derive(Debug, Args)]
struct MeshArgs {
    /// IFLD field to mesh.
    #[arg(long = "in", conflicts_with_all = ["expr", "file", "family", "preset"])]
    input: Option<PathBuf>,
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    space: Space,
    /// Mesh the preset's parametric surface instead of its implicit field.
    #[arg(long, requires = "preset")]
    parametric: bool,
    /// Iso-level; corners with value <= iso are inside.
    #[arg(long, allow_hyphen_values = true)]
    iso: Option<f64>,
    #[arg(long, value_enum)]
    format: MeshFormat,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    preset: String,
    #[arg(long = "param-name")]
    param_name: String,
    #[arg(long, allow_hyphen_values = true)]
    from: f64,
    #[arg(long, allow_hyphen_values = true)]
    to: f64,
    #[arg(long)]
    step: f64,
    #[arg(long)]
    out: PathBuf,
    /// Also write one OBJ per row, named `<preset>_<param>_<value>.obj`.
    #[arg(long = "emit-meshes")]
    emit_meshes: Option<PathBuf>,
    /// xmin,xmax,ymin,ymax,zmin,zmax (default: the preset's)
    #[arg(long, allow_hyphen_values = true)]
    bounds: Option<String>,
    /// Nx,Ny,Nz (default: the preset's)
    #[arg(long)]
    grid: Option<String>,
}

#[derive(Debug, Subcommand)]
enum PresetCommand {
    /// Print every preset name.
    List,
    /// Print a preset's expression, bounds, grid and parameters.
    Emit { name: String },
}

/// Runs the command line `args` (including the program name).
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.threads {
        Some(0) => Err(usage("--threads must be at least 1")),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(cli.command)),
            Err(e) => Err(numeric(e)),
        },
        None => execute(cli.command),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("implicitforge: error: {}", e.message());
            e.code()
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Check(a) => check(a),
        Command::Sample(a) => sample(a),
        Command::Mesh(a) => mesh(a),
        Command::Sweep(a) => sweep(a),
        Command::Preset(PresetCommand::List) => {
            for name in PRESET_NAMES {
                println!("{name}");
            }
            Ok(())
        }
        Command::Preset(PresetCommand::Emit { name }) => {
            let scene = preset(&name).map_err(numeric)?;
            print!("{}", describe(&scene));
            Ok(())
        }
    }
}

fn parse_expr(text: &str) -> Result<Expr> {
    parse(text).map_err(|e| usage(format!("parse error: {e}")))
}

/// Expression named by `source`, with the preset scene when there is one.
fn load(source: &Source) -> Result<(Expr, Option<SceneSpec>)> {
    if let Some(text) = &source.expr {
        return Ok((parse_expr(text)?, None));
    }
    if let Some(path) = &source.file {
        let text = fs::read_to_string(path).map_err(io_at(path))?;
        return Ok((parse_expr(&text)?, None));
    }
    if let Some(path) = &source.family {
        let text = fs::read_to_string(path).map_err(io_at(path))?;
        let cfg = FamilyConfig::from_json(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        return Ok((build_family(&cfg).map_err(usage)?, None));
    }
    if let Some(name) = &source.preset {
        let scene = preset(name).map_err(numeric)?;
        return Ok((scene.expr.clone(), Some(scene)));
    }
    Err(usage("one of --expr, --file, --family or --preset is required"))
}

fn list<T: std::str::FromStr>(text: &str, n: usize, what: &str) -> Result<Vec<T>> {
    let items: Vec<T> = text
        .split(',')
        .map(|s| s.trim().parse::<T>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| usage(format!("cannot read {what} `{text}`")))?;
    if items.len() != n {
        return Err(usage(format!(
            "{what} needs {n} comma-separated values, got {}",
            items.len()
        )));
    }
    Ok(items)
}

fn grid_from(bounds: Option<&str>, grid: Option<&str>, default: Option<&GridSpec>) -> Result<GridSpec> {
    let b = match (bounds, default) {
        (Some(text), _) => list::<f64>(text, 6, "--bounds")?.try_into().expect("six values"),
        (None, Some(spec)) => spec.bounds(),
        (None, None) => return Err(usage("--bounds is required")),
    };
    let n = match (grid, default) {
        (Some(text), _) => list::<usize>(text, 3, "--grid")?.try_into().expect("three values"),
        (None, Some(spec)) => spec.counts(),
        (None, None) => return Err(usage("--grid is required")),
    };
    GridSpec::from_bounds(b, n).map_err(usage)
}

fn bind(mut params: ParamSet, bindings: &[String]) -> Result<ParamSet> {
    for b in bindings {
        let (name, value) = b
            .split_once('=')
            .ok_or_else(|| usage(format!("--param expects NAME=VALUE, got `{b}`")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| usage(format!("--param `{name}` has a bad value `{value}`")))?;
        params.set(name.trim(), value).map_err(usage)?;
    }
    Ok(params)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(io_at(path))
}

fn check(a: CheckArgs) -> Result<()> {
    let (e, _) = load(&a.source)?;
    let free = e.free_names();
    let vars: Vec<&str> = free.variables.iter().map(|v| v.name()).collect();
    let params: Vec<&str> = free.params.iter().map(String::as_str).collect();
    println!("{}", format(&e));
    println!("variables: {}", vars.join(", "));
    println!("params: {}", params.join(", "));
    Ok(())
}

/// Expression, grid and bindings from a source plus space overrides.
fn resolve(source: &Source, space: &Space) -> Result<(Expr, GridSpec, ParamSet, Option<SceneSpec>)> {
    let (e, scene) = load(source)?;
    let default = scene.as_ref().map(|s| &s.grid);
    let grid = grid_from(space.bounds.as_deref(), space.grid.as_deref(), default)?;
    let base = scene.as_ref().map(|s| s.params.clone()).unwrap_or_default();
    let params = bind(base, &space.params)?;
    Ok((e, grid, params, scene))
}

fn sample(a: SampleArgs) -> Result<()> {
    let (e, grid, params, _) = resolve(&a.source, &a.space)?;
    let field = sample_field(&e, &grid, &params).map_err(numeric)?;
    let mut out = create(&a.out)?;
    write_field(&field, &mut out)
        .and_then(|_| out.flush())
        .map_err(io_at(&a.out))
}

fn read_ifld(path: &Path) -> Result<ScalarField> {
    let file = File::open(path).map_err(io_at(path))?;
    read_field(BufReader::new(file)).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn mesh(a: MeshArgs) -> Result<()> {
    let mesh: TriangleMesh = if let Some(path) = &a.input {
        marching_cubes(&read_ifld(path)?, a.iso.unwrap_or(0.0))
    } else if a.parametric {
        let (_, scene) = load(&a.source)?;
        let scene = scene.expect("--parametric requires --preset");
        let SceneKind::Parametric(mut spec) = scene.kind else {
            return Err(numeric(format!("preset `{}` has no parametric surface", scene.name)));
        };
        spec.params = bind(spec.params, &a.space.params)?;
        sample_parametric_sign(&spec).map_err(numeric)?
    } else {
        let (e, grid, params, scene) = resolve(&a.source, &a.space)?;
        let iso = a.iso.or(scene.map(|s| s.iso)).unwrap_or(0.0);
        let field = sample_field(&e, &grid, &params).map_err(numeric)?;
        marching_cubes(&field, iso)
    };
    let mut out = create(&a.out)?;
    match a.format {
        MeshFormat::Obj => export_obj(&mesh, &mut out),
        MeshFormat::Stl => export_stl(&mesh, &mut out),
        MeshFormat::Ply => export_ply(&mesh, &mut out),
    }
    .and_then(|_| out.flush())
    .map_err(io_at(&a.out))
}

const MAX_SWEEP_ROWS: usize = 100_000;

/// `from + i·step` for every `i` with the value not past `to` (allowing for
/// rounding in the step arithmetic).
fn sweep_values(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(from.is_finite() && to.is_finite() && step.is_finite()) || step <= 0.0 || from > to {
        return Err(usage("sweep needs finite --from <= --to and --step > 0"));
    }
    let slack = step * 1e-9;
    let mut values = Vec::new();
    for i in 0.. {
        let v = from + i as f64 * step;
        if v > to + slack {
            break;
        }
        if values.len() == MAX_SWEEP_ROWS {
            return Err(usage(format!("sweep would have more than {MAX_SWEEP_ROWS} rows")));
        }
        values.push(v);
    }
    Ok(values)
}

fn sweep(a: SweepArgs) -> Result<()> {
    let mut scene = preset(&a.preset).map_err(numeric)?;
    scene.grid = grid_from(a.bounds.as_deref(), a.grid.as_deref(), Some(&scene.grid))?;
    let values = sweep_values(a.from, a.to, a.step)?;
    if let Some(dir) = &a.emit_meshes {
        fs::create_dir_all(dir).map_err(io_at(dir))?;
    }
    let mut write_error = None;
    let report = sweep_with(&scene, &a.param_name, &values, |row, mesh| {
        let Some(dir) = &a.emit_meshes else { return };
        if write_error.is_some() {
            return;
        }
        let path = dir.join(format!("{}_{}_{}.obj", a.preset, a.param_name, row.value));
        let result = create(&path).and_then(|mut out| {
            export_obj(mesh, &mut out)
                .and_then(|_| out.flush())
                .map_err(io_at(&path))
        });
        write_error = result.err();
    })
    .map_err(|e| match e {
        crate::sensitivity::SweepError::ParamNotFree { .. } => usage(e),
        other => numeric(other),
    })?;
    if let Some(e) = write_error {
        return Err(e);
    }
    fs::write(&a.out, report.to_json()).map_err(io_at(&a.out))
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// Text printed by `preset emit`; every value is usable as a flag.
pub fn describe(scene: &SceneSpec) -> String {
    let params: String = scene.params.iter().map(|(k, v)| format!(" {k}={v}")).collect();
    let mut text = format!(
        "name: {}\nexpr: {}\nbounds: {}\ngrid: {}\nparams:{}\niso: {}\n",
        scene.name,
        format(&scene.expr),
        join(scene.grid.bounds()),
        join(scene.grid.counts()),
        params,
        scene.iso,
    );
    match &scene.kind {
        SceneKind::Implicit => {}
        SceneKind::Curve { profile } => text.push_str(&format!("profile: {}\n", format(profile))),
        SceneKind::Parametric(p) => {
            let flagged: Vec<&str> = ["x", "y", "z"]
                .into_iter()
                .zip(p.sign)
                .filter_map(|(n, s)| s.then_some(n))
                .collect();
            text.push_str(&format!(
                "parametric: x = {}; y = {}; z = {}\nsign axes: {}\nu: {},{},{}\nv: {},{},{}\n",
                format(&p.fx),
                format(&p.fy),
                format(&p.fz),
                flagged.join(","),
                p.u.min,
                p.u.max,
                p.u.count,
                p.v.min,
                p.v.max,
                p.v.count,
            ));
        }
    }
    text
}
