//! The `deimkit` command line.
//!
//! Exit codes: 0 on success, 2 for usage or configuration errors, 3 for
//! numerical failures (including a violated error bound).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use deimkit::linalg::{srrqr_bound, Matrix};
use deimkit::{deim, io, pod, selection, DeimProjector, RankSpec, SelectionOperator, Strategy, WeightOperator};

use crate::config::{parse_list, ExperimentConfig, WeightChoice};
use crate::error::{ExpError, Result};
use crate::report::num;

#[derive(Debug, Parser)]
#[command(name = "deimkit", version, about = "DEIM model reduction in weighted inner-product spaces")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Deim,
    Qdeim,
    Srrqr,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Deim => Strategy::DeimGreedy,
            StrategyArg::Qdeim => Strategy::Qdeim,
            StrategyArg::Srrqr => Strategy::Srrqr,
        }
    }
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Seed for every random draw.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Strong RRQR tuning parameter (>= 1).
    #[arg(long, global = true)]
    pub eta: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub strategy: Option<StrategyArg>,
    /// `identity`, `mass`, `h1` or a weight file.
    #[arg(long, global = true)]
    pub weight: Option<String>,
    /// Reduced problem sizes.
    #[arg(long, global = true)]
    pub small: bool,
    /// Full-size training sets (1000 parameters in example 5).
    #[arg(long, global = true)]
    pub paper_scale: bool,
    /// A `key = value` file; flags given on the command line take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (overrides DEIMKIT_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Weighted POD basis of a snapshot file.
    Pod {
        #[arg(long)]
        snapshots: PathBuf,
        #[arg(long, conflicts_with = "energy")]
        rank: Option<usize>,
        /// Relative tail energy tolerance in (0, 1).
        #[arg(long)]
        energy: Option<f64>,
    },
    /// Interpolation indices for a W-orthonormal basis.
    Select {
        #[arg(long)]
        basis: PathBuf,
        /// Number of indices when oversampling (s > r).
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Applies the DEIM projector to every column of an input file.
    Project {
        #[arg(long)]
        basis: PathBuf,
        /// Selection file; computed with --strategy when omitted.
        #[arg(long)]
        selection: Option<PathBuf>,
        #[arg(long)]
        input: PathBuf,
    },
    /// Prints the error constant and its strong RRQR ceiling.
    Bounds {
        #[arg(long)]
        basis: PathBuf,
        #[arg(long)]
        selection: Option<PathBuf>,
    },
    /// Runs one of the numerical experiments.
    Example {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=5))]
        id: u8,
        /// Grid nodes per side, time samples or ladder size.
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        train: Option<usize>,
        #[arg(long)]
        test: Option<usize>,
        /// Basis dimensions, e.g. `5..40:5` or `10,20,34`.
        #[arg(long)]
        ranks: Option<String>,
        #[arg(long)]
        deim_rank: Option<usize>,
    },
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    match run(&cli) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command and returns what it prints on success.
pub fn run(cli: &Cli) -> Result<String> {
    let cfg = base_config(&cli.global)?;
    match &cli.command {
        Command::Pod {
            snapshots,
            rank,
            energy,
        } => run_pod(&cfg, snapshots, *rank, *energy),
        Command::Select { basis, samples } => run_select(&cfg, basis, *samples),
        Command::Project {
            basis,
            selection,
            input,
        } => run_project(&cfg, basis, selection.as_deref(), input),
        Command::Bounds { basis, selection } => run_bounds(&cfg, basis, selection.as_deref()),
        Command::Example {
            id,
            points,
            train,
            test,
            ranks,
            deim_rank,
        } => {
            let mut cfg = cfg;
            cfg.example = *id;
            cfg.points = points.or(cfg.points);
            cfg.train = train.or(cfg.train);
            cfg.test = test.or(cfg.test);
            cfg.deim_rank = deim_rank.or(cfg.deim_rank);
            if let Some(r) = ranks {
                cfg.ranks = Some(parse_list(r).map_err(|e| ExpError::Config(format!("--ranks {r}: {e}")))?);
            }
            run_example_command(&cfg)
        }
    }
}

fn base_config(g: &GlobalArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &g.config {
        cfg.apply_file(path)?;
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(o) = &g.out {
        cfg.out = o.clone();
    }
    if let Some(e) = g.eta {
        cfg.eta = e;
    }
    if let Some(s) = g.strategy {
        cfg.strategy = Some(s.into());
    }
    if let Some(w) = &g.weight {
        cfg.weight = Some(w.parse()?);
    }
    cfg.small |= g.small;
    cfg.paper_scale |= g.paper_scale;
    if g.threads.is_some() {
        cfg.threads = g.threads;
    }
    Ok(cfg)
}

fn weight_for(cfg: &ExperimentConfig, m: usize) -> Result<WeightOperator> {
    cfg.weight.clone().unwrap_or(WeightChoice::Identity).resolve(m)
}

fn ensure_out(cfg: &ExperimentConfig) -> Result<&Path> {
    std::fs::create_dir_all(&cfg.out).map_err(|source| ExpError::Io {
        path: cfg.out.clone(),
        source,
    })?;
    Ok(&cfg.out)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| ExpError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn run_pod(cfg: &ExperimentConfig, snapshots: &Path, rank: Option<usize>, energy: Option<f64>) -> Result<String> {
    let y = io::read_matrix(snapshots)?;
    let w = weight_for(cfg, y.nrows())?;
    let spec = match (rank, energy) {
        (Some(r), _) => RankSpec::Explicit(r),
        (None, Some(t)) => RankSpec::Energy(t),
        (None, None) => return Err(ExpError::config("pod needs --rank or --energy")),
    };
    let basis = pod::pod_basis(&y, &w, spec)?;
    let out = ensure_out(cfg)?;
    io::write_matrix(out.join("pod_basis.txt"), basis.u_hat())?;
    let mut sigma = String::from("index,sigma\n");
    for (i, s) in basis.sigma().iter().enumerate() {
        let _ = writeln!(sigma, "{},{}", i + 1, num(*s));
    }
    write_text(&out.join("pod_sigma.csv"), &sigma)?;
    Ok(format!(
        "rank = {}\nnumerical_rank = {}\nbasis = {}\n",
        basis.rank(),
        basis.numerical_rank(),
        out.join("pod_basis.txt").display()
    ))
}

/// The basis file holds `U_hat`; selection runs on `L^T U_hat`.
fn selection_basis(w: &WeightOperator, u_hat: &Matrix) -> Result<Matrix> {
    Ok(w.lt_mul(u_hat)?)
}

fn load_selection(
    cfg: &ExperimentConfig,
    u: &Matrix,
    path: Option<&Path>,
) -> Result<SelectionOperator> {
    match path {
        Some(p) => {
            let (m, idx) = io::read_selection(p)?;
            if m != u.nrows() {
                return Err(ExpError::config(format!(
                    "selection is for m = {m}, basis has m = {}",
                    u.nrows()
                )));
            }
            Ok(SelectionOperator::from_indices(u, idx, cfg.strategy_or(Strategy::Srrqr), Some(cfg.eta))?)
        }
        None => Ok(selection::select(u, cfg.strategy_or(Strategy::Srrqr), cfg.eta)?),
    }
}

fn run_select(cfg: &ExperimentConfig, basis: &Path, samples: Option<usize>) -> Result<String> {
    let u_hat = io::read_matrix(basis)?;
    let w = weight_for(cfg, u_hat.nrows())?;
    let u = selection_basis(&w, &u_hat)?;
    let strategy = cfg.strategy_or(Strategy::Srrqr);
    let sel = match samples {
        Some(s) if s != u.ncols() => selection::select_oversampled(&u, s, strategy, cfg.eta)?,
        _ => selection::select(&u, strategy, cfg.eta)?,
    };
    let out = ensure_out(cfg)?;
    let path = out.join("selection.txt");
    io::write_selection(&path, u.nrows(), sel.indices())?;
    Ok(format!(
        "{}\nkappa = {}\nselection = {}\n",
        sel.to_line(),
        num(sel.kappa()),
        path.display()
    ))
}

fn projector(w: &WeightOperator, u_hat: &Matrix, sel: &SelectionOperator) -> Result<DeimProjector> {
    if w.is_identity() {
        return Ok(deim::build_oversampled(u_hat, sel)?);
    }
    // A POD of a W-orthonormal basis spans the same space, and D depends
    // only on that space and the selection.
    let basis = pod::pod_basis(u_hat, w, RankSpec::Explicit(u_hat.ncols()))?;
    Ok(deim::build_wdeim_generalized(&basis, sel)?)
}

fn run_project(cfg: &ExperimentConfig, basis: &Path, sel_path: Option<&Path>, input: &Path) -> Result<String> {
    let u_hat = io::read_matrix(basis)?;
    let w = weight_for(cfg, u_hat.nrows())?;
    let u = selection_basis(&w, &u_hat)?;
    let sel = load_selection(cfg, &u, sel_path)?;
    let d = projector(&w, &u_hat, &sel)?;
    let f = io::read_matrix(input)?;
    let df = d.apply_matrix(&f)?;
    let out = ensure_out(cfg)?;
    io::write_matrix(out.join("projected.txt"), &df)?;

    let mut csv = String::from("column,relerr_w,orth_relerr_w,error_constant\n");
    for j in 0..f.ncols() {
        let fj = f.column(j).into_owned();
        let (err, orth) = d.errors(&fj)?;
        let fw = w.w_norm(&fj)?;
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            j + 1,
            num(err / fw),
            num(orth / fw),
            num(d.error_constant())
        );
    }
    write_text(&out.join("project_errors.csv"), &csv)?;
    let weight_desc = cfg.weight.clone().unwrap_or(WeightChoice::Identity).to_string();
    write_text(
        &out.join("projector.txt"),
        &io::format_projector(&d, Some(&basis.display().to_string()), Some(&weight_desc)),
    )?;
    let canonical = deim::canonical_analysis(&d)?;
    write_text(
        &out.join("diagnostics.csv"),
        &format!("{}\n{}\n", io::DIAGNOSTICS_HEADER, io::diagnostics_row(&d, &canonical)),
    )?;
    Ok(format!(
        "variant = {}\nerror_constant = {}\nprojected = {}\n",
        d.variant(),
        num(d.error_constant()),
        out.join("projected.txt").display()
    ))
}

fn run_bounds(cfg: &ExperimentConfig, basis: &Path, sel_path: Option<&Path>) -> Result<String> {
    let u_hat = io::read_matrix(basis)?;
    let w = weight_for(cfg, u_hat.nrows())?;
    let u = selection_basis(&w, &u_hat)?;
    let sel = load_selection(cfg, &u, sel_path)?;
    let (m, r) = u.shape();
    let mut text = format!("m = {m}\nr = {r}\ns = {}\nkappa = {}\n", sel.len(), num(sel.kappa()));
    let _ = writeln!(text, "eta = {}", num(cfg.eta));
    let _ = writeln!(text, "lemma_bound = {}", num(srrqr_bound(r, m, cfg.eta)));
    if !w.is_identity() {
        let d = projector(&w, &u_hat, &sel)?;
        let _ = writeln!(text, "error_constant = {}", num(d.error_constant()));
    }
    Ok(text)
}

fn run_example_command(cfg: &ExperimentConfig) -> Result<String> {
    let report = crate::run_example(cfg)?;
    let files = report.write(&cfg.out)?;
    let mut text = String::new();
    for f in &files {
        let _ = writeln!(text, "wrote {}", f.display());
    }
    let _ = writeln!(
        text,
        "bound checks: {} (worst ratio {:.3e}), wall time {:.2?}",
        report.bounds.checked, report.bounds.worst_ratio, report.wall_time
    );
    report.ensure_bounds()?;
    Ok(text)
}
