//! Command-line front end. Every failure prints one line
//! `error[E_CODE]: message` to stderr and exits nonzero.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::backfit::{liso_fit, liso_path, AdditiveModel, Dataset, Direction, LisoConfig};
use crate::error::{LisoError, Result};
use crate::modelsel::{cross_validate, default_grid, AdaptiveStage2, PathFitter, Plain};
use crate::numeric::{linear_grid, log_grid};
use crate::sim::{comparison_study, recovery_study, Method, RecoveryConfig, ScenarioKind, SimScenario};
use crate::variants::{adaptive_liso, sign_discovery_from_stage1, signed_liso, PartWeights, ReweightSpec, SignedModel};

#[derive(Debug, Parser)]
#[command(name = "liso", version, about = "Sparse additive isotonic regression")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one model and write it as JSON.
    Fit(FitArgs),
    /// Predict from a saved model; writes a CSV with a `prediction` column.
    Predict(PredictArgs),
    /// K-fold cross-validation over a penalty grid.
    Cv(CvArgs),
    /// Fit a warm-started path; one model per λ plus a summary CSV.
    Path(PathArgs),
    /// Two-stage sign discovery.
    Signfit(SignfitArgs),
    /// Method comparison on a simulated scenario.
    Simulate(SimulateArgs),
    /// Sparsity-recovery study on the four-covariate model.
    Recovery(RecoveryArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    Plain,
    Adaptive,
    Scad,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// Name of the response column.
    #[arg(long)]
    pub response: String,
    /// Per-column shape, `col=inc|dec|unc|auto`; repeatable or comma-separated.
    #[arg(long = "direction", value_delimiter = ',')]
    pub directions: Vec<String>,
    /// Optional column of positive observation weights.
    #[arg(long)]
    pub weights: Option<String>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: f64,
    /// First-stage penalty of two-stage fits (defaults to `--lambda`).
    #[arg(long, allow_hyphen_values = true)]
    pub lambda0: Option<f64>,
    #[arg(long, value_enum, default_value = "plain")]
    pub variant: Variant,
    #[arg(long, default_value_t = 3.7)]
    pub scad_a: f64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    /// Defaults to stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// `max:min:count[:log|lin]`; defaults to 50 log-spaced values below lambda_max.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "plain")]
    pub variant: Variant,
    /// First-stage penalty of the adaptive variants.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda0: Option<f64>,
    #[arg(long, default_value_t = 3.7)]
    pub scad_a: f64,
    /// Report JSON.
    #[arg(long)]
    pub output: PathBuf,
    /// Plot CSV (`lambda,mean_mse,sd_mse`); defaults to the report path with a `.csv` extension.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PathArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub grid: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SignfitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// First-stage penalty.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda0: f64,
    /// Second-stage penalty.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: f64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value = "mixed_powers")]
    pub scenario: String,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 50)]
    pub p: usize,
    #[arg(long, default_value_t = 7.0)]
    pub snr: f64,
    #[arg(long)]
    pub correlated: bool,
    #[arg(long, default_value_t = 100)]
    pub replications: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "plain,adaptive,scad")]
    pub methods: Vec<Variant>,
    #[arg(long, default_value_t = 3.7)]
    pub scad_a: f64,
    /// Summary CSV.
    #[arg(long)]
    pub output: PathBuf,
    /// Optional per-replication CSV.
    #[arg(long)]
    pub replications_output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RecoveryArgs {
    #[arg(long, value_delimiter = ',', default_value = "32,128")]
    pub p_list: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "20,60,100,140")]
    pub n_list: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    pub replications: usize,
    #[arg(long, default_value_t = 4.0)]
    pub snr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1024)]
    pub master_n: usize,
    #[arg(long, default_value_t = 100)]
    pub grid_points: usize,
    #[arg(long, default_value_t = 1e-2)]
    pub grid_ratio: f64,
    #[arg(long)]
    pub output: PathBuf,
}

/// A numeric CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| LisoError::UnknownColumn(name.to_string()))
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }
}

/// Reads a headed, fully numeric CSV. Rows are numbered from 1 after the header.
pub fn read_table(path: &Path) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(e, path))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(e, path))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(LisoError::Csv {
            row: 0,
            column: String::new(),
            message: "missing header row".into(),
        });
    }
    let mut seen = HashMap::new();
    for (j, h) in headers.iter().enumerate() {
        if h.is_empty() {
            return Err(LisoError::Csv {
                row: 0,
                column: format!("#{}", j + 1),
                message: "empty column name".into(),
            });
        }
        if seen.insert(h.as_str(), j).is_some() {
            return Err(LisoError::Csv {
                row: 0,
                column: h.clone(),
                message: "duplicate column name".into(),
            });
        }
    }
    let mut columns = vec![Vec::new(); headers.len()];
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| csv_error(e, path))?;
        if record.len() != headers.len() {
            return Err(LisoError::Csv {
                row,
                column: String::new(),
                message: format!("expected {} cells, found {}", headers.len(), record.len()),
            });
        }
        for (j, cell) in record.iter().enumerate() {
            let bad = |message: String| LisoError::Csv {
                row,
                column: headers[j].clone(),
                message,
            };
            if cell.is_empty() {
                return Err(bad("missing value".into()));
            }
            let v: f64 = cell.parse().map_err(|_| bad(format!("non-numeric value '{cell}'")))?;
            if !v.is_finite() {
                return Err(bad(format!("non-finite value '{cell}'")));
            }
            columns[j].push(v);
        }
    }
    Ok(Table { headers, columns })
}

fn csv_error(e: csv::Error, path: &Path) -> LisoError {
    let row = e.position().map_or(0, |p| p.line().saturating_sub(1) as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => LisoError::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        kind => LisoError::Csv {
            row,
            column: String::new(),
            message: format!("{kind:?}"),
        },
    }
}

/// Per-column shape requested on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Fixed(Direction),
    Auto,
}

pub fn parse_shape(s: &str) -> Result<Shape> {
    Ok(match s {
        "inc" | "increasing" => Shape::Fixed(Direction::Increasing),
        "dec" | "decreasing" => Shape::Fixed(Direction::Decreasing),
        "unc" | "unconstrained" => Shape::Fixed(Direction::Unconstrained),
        "auto" => Shape::Auto,
        _ => return Err(LisoError::InvalidConfig(format!("unknown direction '{s}' (inc, dec, unc, auto)"))),
    })
}

/// Parses `max:min:count[:log|lin]` into a decreasing grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || LisoError::InvalidConfig(format!("grid '{spec}' is not max:min:count[:log|lin]"));
    if !(3..=4).contains(&parts.len()) {
        return Err(bad());
    }
    let hi: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let lo: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    let log = match parts.get(3).map(|s| s.trim()) {
        None | Some("log") => true,
        Some("lin") => false,
        _ => return Err(bad()),
    };
    if count == 0 || !hi.is_finite() || !lo.is_finite() || lo < 0.0 || (count > 1 && !(hi > lo)) {
        return Err(bad());
    }
    if log && count > 1 && lo <= 0.0 {
        return Err(LisoError::InvalidConfig("log grid needs a positive minimum".into()));
    }
    Ok(if log { log_grid(hi, lo, count) } else { linear_grid(hi, lo, count) })
}

/// Data set plus the covariate names and shapes of one run.
pub struct Prepared {
    pub dataset: Dataset,
    pub response: String,
    pub names: Vec<String>,
    pub shapes: Vec<Shape>,
}

impl Prepared {
    fn directions(&self) -> Vec<Direction> {
        self.shapes
            .iter()
            .map(|s| match s {
                Shape::Fixed(d) => *d,
                Shape::Auto => Direction::Unconstrained,
            })
            .collect()
    }

    fn config(&self) -> LisoConfig {
        LisoConfig::default().with_directions(self.directions())
    }

    fn has_auto(&self) -> bool {
        self.shapes.contains(&Shape::Auto)
    }

    fn part_weights(&self) -> Vec<PartWeights> {
        self.shapes
            .iter()
            .map(|s| match s {
                Shape::Fixed(d) => PartWeights::from_direction(*d),
                Shape::Auto => PartWeights::BOTH,
            })
            .collect()
    }
}

/// Loads the input CSV; covariates are every column but the response and weights.
pub fn prepare(args: &DataArgs, default_shape: Shape) -> Result<Prepared> {
    let table = read_table(&args.input)?;
    let ri = table.column_index(&args.response)?;
    let wi = args.weights.as_deref().map(|w| table.column_index(w)).transpose()?;
    let mut names = Vec::new();
    let mut columns = Vec::new();
    for (j, h) in table.headers.iter().enumerate() {
        if j != ri && Some(j) != wi {
            names.push(h.clone());
            columns.push(table.columns[j].clone());
        }
    }
    let mut overrides = BTreeMap::new();
    for item in &args.directions {
        let (col, shape) = item
            .split_once('=')
            .ok_or_else(|| LisoError::InvalidConfig(format!("direction '{item}' is not col=shape")))?;
        let col = col.trim();
        if !names.iter().any(|n| n == col) {
            return Err(LisoError::UnknownColumn(col.to_string()));
        }
        overrides.insert(col.to_string(), parse_shape(shape.trim())?);
    }
    let shapes = names
        .iter()
        .map(|n| overrides.get(n).copied().unwrap_or(default_shape))
        .collect();
    let y = table.columns[ri].clone();
    let w = wi.map(|i| table.columns[i].clone());
    if table.rows() < 2 {
        return Err(LisoError::Csv {
            row: table.rows(),
            column: String::new(),
            message: "need at least two data rows".into(),
        });
    }
    let dataset = Dataset::new(columns, y, w)?;
    Ok(Prepared {
        dataset,
        response: args.response.clone(),
        names,
        shapes,
    })
}

/// A model with the column names it was fitted on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub response: String,
    pub columns: Vec<String>,
    #[serde(flatten)]
    pub model: AdditiveModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedModelFile {
    pub response: String,
    pub columns: Vec<String>,
    #[serde(flatten)]
    pub model: SignedModel,
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, content).map_err(|e| LisoError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn model_json(p: &Prepared, model: AdditiveModel) -> Result<String> {
    let file = ModelFile {
        response: p.response.clone(),
        columns: p.names.clone(),
        model,
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

fn signed_json(p: &Prepared, model: SignedModel) -> Result<String> {
    let file = SignedModelFile {
        response: p.response.clone(),
        columns: p.names.clone(),
        model,
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

fn spec_for(variant: Variant, scad_a: f64) -> Option<ReweightSpec> {
    match variant {
        Variant::Plain => None,
        Variant::Adaptive => Some(ReweightSpec::adaptive()),
        Variant::Scad => Some(ReweightSpec::scad(scad_a)),
    }
}

/// Two-stage sign discovery honouring fixed shapes: the first stage keeps
/// only the allowed parts, the second reweights what survived.
fn sign_discovery(p: &Prepared, lambda0: f64, lambda1: f64) -> Result<SignedModel> {
    let base = LisoConfig::default();
    let first = signed_liso(&p.dataset, lambda0, &p.part_weights(), &base)?;
    sign_discovery_from_stage1(&p.dataset, &first, lambda1, &base)
}

fn fit(a: &FitArgs) -> Result<()> {
    let p = prepare(&a.data, Shape::Fixed(Direction::Increasing))?;
    let lambda0 = a.lambda0.unwrap_or(a.lambda);
    if p.has_auto() {
        if a.variant != Variant::Plain {
            return Err(LisoError::InvalidConfig("auto directions use sign discovery; drop --variant".into()));
        }
        let m = sign_discovery(&p, lambda0, a.lambda)?;
        return write_file(&a.output, &signed_json(&p, m)?);
    }
    let cfg = p.config();
    let model = match spec_for(a.variant, a.scad_a) {
        None => liso_fit(&p.dataset, &cfg.with_lambda(a.lambda))?,
        Some(spec) => adaptive_liso(&p.dataset, lambda0, a.lambda, &spec, &cfg)?,
    };
    write_file(&a.output, &model_json(&p, model)?)
}

fn predict(a: &PredictArgs) -> Result<()> {
    let text = fs::read_to_string(&a.model)?;
    let file: ModelFile = serde_json::from_str(&text)?;
    if file.columns.len() != file.model.p() {
        return Err(LisoError::DimensionMismatch {
            what: "model columns",
            expected: file.model.p(),
            got: file.columns.len(),
        });
    }
    let table = read_table(&a.input)?;
    let cols: Vec<Vec<f64>> = file
        .columns
        .iter()
        .map(|c| table.column_index(c).map(|j| table.columns[j].clone()))
        .collect::<Result<_>>()?;
    let pred = file.model.predict_columns(&cols)?;
    let mut out = String::from("prediction\n");
    for v in pred {
        out.push_str(&format!("{v}\n"));
    }
    match &a.output {
        Some(path) => write_file(path, &out),
        None => Ok(std::io::stdout().write_all(out.as_bytes())?),
    }
}

fn grid_or_default(spec: Option<&str>, d: &Dataset, fitter: &dyn PathFitter) -> Result<Vec<f64>> {
    match spec {
        Some(s) => parse_grid(s),
        None => default_grid(d, fitter),
    }
}

fn no_auto(p: &Prepared, cmd: &str) -> Result<()> {
    if p.has_auto() {
        return Err(LisoError::InvalidConfig(format!("'{cmd}' does not support auto directions; use signfit")));
    }
    Ok(())
}

fn cv(a: &CvArgs) -> Result<()> {
    let p = prepare(&a.data, Shape::Fixed(Direction::Increasing))?;
    no_auto(&p, "cv")?;
    let cfg = p.config();
    let fitter: Box<dyn PathFitter> = match spec_for(a.variant, a.scad_a) {
        None => Box::new(Plain(cfg)),
        Some(spec) => {
            let lambda0 = match a.lambda0 {
                Some(l) => l,
                None => return Err(LisoError::InvalidConfig("--lambda0 is required for two-stage variants".into())),
            };
            Box::new(AdaptiveStage2 { base: cfg, spec, lambda0 })
        }
    };
    let grid = grid_or_default(a.grid.as_deref(), &p.dataset, fitter.as_ref())?;
    let report = cross_validate(&p.dataset, &grid, a.folds, fitter.as_ref(), a.seed)?;
    write_file(&a.output, &report.to_json()?)?;
    let plot = a.plot.clone().unwrap_or_else(|| a.output.with_extension("csv"));
    write_file(&plot, &report.to_csv())
}

fn path(a: &PathArgs) -> Result<()> {
    let p = prepare(&a.data, Shape::Fixed(Direction::Increasing))?;
    no_auto(&p, "path")?;
    let cfg = p.config();
    let grid = grid_or_default(a.grid.as_deref(), &p.dataset, &Plain(cfg.clone()))?;
    let models = liso_path(&p.dataset, &grid, &cfg)?;
    fs::create_dir_all(&a.output)?;
    let mut summary = String::from("index,lambda,active_count,active");
    for n in &p.names {
        summary.push_str(&format!(",tv_{n}"));
    }
    summary.push('\n');
    for (i, m) in models.into_iter().enumerate() {
        let active = m.active_set();
        let names: Vec<&str> = active.iter().map(|&k| p.names[k].as_str()).collect();
        summary.push_str(&format!("{i},{},{},{}", grid[i], active.len(), names.join(";")));
        for c in &m.components {
            summary.push_str(&format!(",{}", c.total_variation()));
        }
        summary.push('\n');
        write_file(&a.output.join(format!("model_{i:03}.json")), &model_json(&p, m)?)?;
    }
    write_file(&a.output.join("summary.csv"), &summary)
}

fn signfit(a: &SignfitArgs) -> Result<()> {
    let p = prepare(&a.data, Shape::Auto)?;
    let m = sign_discovery(&p, a.lambda0, a.lambda)?;
    write_file(&a.output, &signed_json(&p, m)?)
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let kind = ScenarioKind::parse(&a.scenario)?;
    let mut s = SimScenario::new(kind, a.n, a.p, a.snr, a.seed);
    s.correlated = a.correlated;
    let methods: Vec<Method> = a
        .methods
        .iter()
        .map(|v| match v {
            Variant::Plain => Method::Plain,
            Variant::Adaptive => Method::Adaptive,
            Variant::Scad => Method::Scad { a: a.scad_a },
        })
        .collect();
    let r = comparison_study(&s, &methods, a.replications, &LisoConfig::default())?;
    write_file(&a.output, &r.to_csv())?;
    if let Some(path) = &a.replications_output {
        write_file(path, &r.replications_csv())?;
    }
    Ok(())
}

fn recovery(a: &RecoveryArgs) -> Result<()> {
    let mut cfg = RecoveryConfig::new(a.p_list.clone(), a.n_list.clone(), a.replications, a.snr, a.seed);
    cfg.master_n = a.master_n;
    cfg.grid_points = a.grid_points;
    cfg.grid_ratio = a.grid_ratio;
    write_file(&a.output, &recovery_study(&cfg)?.to_csv())
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    match &cfg.command {
        Command::Fit(a) => fit(a),
        Command::Predict(a) => predict(a),
        Command::Cv(a) => cv(a),
        Command::Path(a) => path(a),
        Command::Signfit(a) => signfit(a),
        Command::Simulate(a) => simulate(a),
        Command::Recovery(a) => recovery(a),
    }
}

/// Parses `args`, runs, and reports failures as `error[E_CODE]: message`.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("error[E_USAGE]: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.code());
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_syntax() {
        let g = parse_grid("1:0.01:3").unwrap();
        assert_eq!((g.len(), g[0], g[2]), (3, 1.0, 0.01));
        assert!((g[1] - 0.1).abs() < 1e-15);
        assert_eq!(parse_grid("1:0:3:lin").unwrap(), vec![1.0, 0.5, 0.0]);
        assert_eq!(parse_grid("2:1:1").unwrap(), vec![2.0]);
        for bad in ["1:0:3", "1:2:3", "a:b:c", "1:0.1", "1:0.1:0", "1:0.1:3:cubic"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn shapes() {
        assert_eq!(parse_shape("inc").unwrap(), Shape::Fixed(Direction::Increasing));
        assert_eq!(parse_shape("decreasing").unwrap(), Shape::Fixed(Direction::Decreasing));
        assert_eq!(parse_shape("auto").unwrap(), Shape::Auto);
        assert!(parse_shape("up").is_err());
    }

    #[test]
    fn table_errors_name_row_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let cases = [
            ("y,x\n1,2\n3,abc\n", "E_CSV", "row 2, column 'x'"),
            ("y,x\n1,2\n3,\n", "E_CSV", "missing value"),
            ("y,x\n1,2\n3,inf\n", "E_CSV", "non-finite"),
            ("y,x\n1,2\n3\n", "E_CSV", "expected 2 cells"),
            ("y,y\n1,2\n", "E_CSV", "duplicate"),
        ];
        for (content, code, needle) in cases {
            fs::write(&path, content).unwrap();
            let e = read_table(&path).unwrap_err();
            assert_eq!(e.code(), code);
            assert!(e.to_string().contains(needle), "{e}");
        }
        fs::write(&path, "y,x\n1,2\n3,4\n").unwrap();
        let t = read_table(&path).unwrap();
        assert_eq!(t.columns, vec![vec![1.0, 3.0], vec![2.0, 4.0]]);
        assert!(matches!(t.column_index("z"), Err(LisoError::UnknownColumn(_))));
    }

    #[test]
    fn model_file_round_trips() {
        let d = Dataset::new(vec![vec![0.0, 1.0, 2.0]], vec![0.0, 1.0, 3.0], None).unwrap();
        let m = liso_fit(&d, &LisoConfig::new(0.1)).unwrap();
        let f = ModelFile {
            response: "y".into(),
            columns: vec!["x".into()],
            model: m,
        };
        let back: ModelFile = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back.columns, f.columns);
        assert_eq!(back.model.components, f.model.components);
        assert_eq!(back.model.intercept, f.model.intercept);
    }
}
