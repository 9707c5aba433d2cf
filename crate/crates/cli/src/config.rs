//! Command-line surface and validation.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use homog_core::lattice::CoefficientField;

#[derive(Debug, Parser)]
#[command(name = "homog-lab", version, about = "Cell-formula experiments for lattice weak-membrane energies")]
pub struct Cli {
    /// Worker threads for independent cell problems.
    #[arg(long, global = true, env = "HOMOG_LAB_JOBS")]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Surface density phi_T(nu) by minimum cut.
    Surface(SurfaceArgs),
    /// Bulk densities f_T(zeta) and h_T(zeta).
    Bulk(BulkArgs),
    /// Weak-membrane smoothing of a sampled signal or image.
    Segment(SegmentArgs),
    /// Evaluate an energy of a lattice function.
    Energy(EnergyArgs),
    /// Sample phi_T over evenly spread directions.
    Wulff(WulffArgs),
    /// Run the seeded oracle cross-checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct SurfaceArgs {
    #[arg(long)]
    pub field: PathBuf,
    /// Comma-separated normal.
    #[arg(long, conflicts_with = "sweep", allow_hyphen_values = true)]
    pub nu: Option<String>,
    /// Number of evenly spread directions instead of --nu.
    #[arg(long)]
    pub sweep: Option<String>,
    #[arg(long)]
    pub sizes: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Fill the solve_ms column with wall-clock times (otherwise 0).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct BulkArgs {
    #[arg(long)]
    pub field: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub zeta: String,
    #[arg(long)]
    pub sizes: String,
    /// Compute h_T by exhaustive line enumeration instead of continuation.
    #[arg(long)]
    pub exact_membrane: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// CSV with header x1,...,xd,value.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub field: PathBuf,
    #[arg(long)]
    pub eps: String,
    #[arg(long)]
    pub weight: String,
    /// Use the graduated non-convexity schedule (otherwise only the true potential).
    #[arg(long)]
    pub gnc: bool,
    #[arg(long, default_value = "200")]
    pub max_outer: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Bond list with line variables.
    #[arg(long)]
    pub lines: Option<PathBuf>,
    /// Energy trace as JSON.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EnergyKind {
    Membrane,
    Spin,
    Elastic,
}

#[derive(Debug, Args)]
pub struct EnergyArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub field: PathBuf,
    #[arg(long)]
    pub eps: String,
    #[arg(long, value_enum, default_value = "membrane")]
    pub kind: EnergyKind,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WulffArgs {
    #[arg(long)]
    pub field: PathBuf,
    #[arg(long)]
    pub dirs: String,
    #[arg(long)]
    pub size: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value = "0")]
    pub seed: String,
}

/// Validated run description.
#[derive(Debug, Clone)]
pub enum RunConfig {
    Surface {
        field: CoefficientField,
        directions: Vec<Vec<f64>>,
        sizes: Vec<usize>,
        out: Option<PathBuf>,
        timing: bool,
    },
    Bulk {
        field: CoefficientField,
        zeta: Vec<f64>,
        sizes: Vec<usize>,
        exact_membrane: bool,
        out: Option<PathBuf>,
    },
    Segment {
        input: PathBuf,
        field: CoefficientField,
        eps: f64,
        weight: f64,
        gnc: bool,
        max_outer: usize,
        out: Option<PathBuf>,
        lines: Option<PathBuf>,
        trace: Option<PathBuf>,
    },
    Energy {
        input: PathBuf,
        field: CoefficientField,
        eps: f64,
        kind: EnergyKind,
        out: Option<PathBuf>,
    },
    Wulff {
        field: CoefficientField,
        dirs: usize,
        size: usize,
        out: Option<PathBuf>,
    },
    Verify {
        seed: u64,
    },
}

/// Collects every violation instead of stopping at the first.
#[derive(Default)]
struct Violations(Vec<String>);

impl Violations {
    fn push(&mut self, msg: impl Into<String>) {
        self.0.push(msg.into());
    }

    fn list<T: std::str::FromStr>(&mut self, flag: &str, text: &str) -> Option<Vec<T>> {
        let parsed: Result<Vec<T>, _> = text.split(',').map(|s| s.trim().parse::<T>()).collect();
        match parsed {
            Ok(v) if !v.is_empty() => Some(v),
            _ => {
                self.push(format!("--{flag}: malformed list '{text}'"));
                None
            }
        }
    }

    fn number<T: std::str::FromStr>(&mut self, flag: &str, text: &str) -> Option<T> {
        match text.trim().parse::<T>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.push(format!("--{flag}: malformed number '{text}'"));
                None
            }
        }
    }

    fn positive(&mut self, flag: &str, text: &str) -> Option<f64> {
        let v = self.number::<f64>(flag, text)?;
        if v > 0.0 && v.is_finite() {
            Some(v)
        } else {
            self.push(format!("--{flag} must be positive"));
            None
        }
    }

    fn sizes(&mut self, text: &str) -> Option<Vec<usize>> {
        let sizes = self.list::<usize>("sizes", text)?;
        let mut ok = true;
        if sizes.iter().any(|&t| t < 2) {
            self.push("every cell size must be at least 2");
            ok = false;
        }
        if sizes.windows(2).any(|w| w[0] >= w[1]) {
            self.push("sizes must be strictly increasing");
            ok = false;
        }
        ok.then_some(sizes)
    }

    fn existing(&mut self, flag: &str, path: &Path) -> bool {
        if path.is_file() {
            true
        } else {
            self.push(format!("--{flag}: file not found: {}", path.display()));
            false
        }
    }

    fn field(&mut self, path: &Path) -> Option<CoefficientField> {
        if !self.existing("field", path) {
            return None;
        }
        match CoefficientField::read(path) {
            Ok(f) => Some(f),
            Err(e) => {
                self.push(format!("--field: {e}"));
                None
            }
        }
    }

    fn dimension(&mut self, flag: &str, v: &[f64], field: Option<&CoefficientField>) {
        if let Some(f) = field {
            if v.len() != f.dim() {
                self.push(format!("--{flag} has {} components but the field has dimension {}", v.len(), f.dim()));
            }
        }
    }
}

/// Validates parsed arguments; on failure returns every violation.
pub fn parse_config(cli: &Cli) -> Result<RunConfig, Vec<String>> {
    let mut v = Violations::default();
    let config = match &cli.command {
        Command::Surface(a) => {
            let field = v.field(&a.field);
            let sizes = v.sizes(&a.sizes);
            let directions = match (&a.nu, &a.sweep) {
                (Some(nu), None) => v.list::<f64>("nu", nu).and_then(|nu| {
                    v.dimension("nu", &nu, field.as_ref());
                    match homog_core::lattice::normalize(&nu) {
                        Ok(n) => Some(vec![n]),
                        Err(_) => {
                            v.push("--nu must be a nonzero vector");
                            None
                        }
                    }
                }),
                (None, Some(n)) => v.number::<usize>("sweep", n).and_then(|n| {
                    let dim = field.as_ref()?.dim();
                    match homog_core::spin_cell::sweep_directions(dim, n) {
                        Ok(d) => Some(d),
                        Err(e) => {
                            v.push(format!("--sweep: {e}"));
                            None
                        }
                    }
                }),
                _ => {
                    v.push("one of --nu or --sweep is required");
                    None
                }
            };
            match (field, directions, sizes) {
                (Some(field), Some(directions), Some(sizes)) => {
                    Some(RunConfig::Surface { field, directions, sizes, out: a.out.clone(), timing: a.timing })
                }
                _ => None,
            }
        }
        Command::Bulk(a) => {
            let field = v.field(&a.field);
            let zeta = v.list::<f64>("zeta", &a.zeta);
            if let Some(z) = &zeta {
                v.dimension("zeta", z, field.as_ref());
            }
            let sizes = v.sizes(&a.sizes);
            match (field, zeta, sizes) {
                (Some(field), Some(zeta), Some(sizes)) => Some(RunConfig::Bulk {
                    field,
                    zeta,
                    sizes,
                    exact_membrane: a.exact_membrane,
                    out: a.out.clone(),
                }),
                _ => None,
            }
        }
        Command::Segment(a) => {
            let input_ok = v.existing("input", &a.input);
            let field = v.field(&a.field);
            let eps = v.positive("eps", &a.eps);
            let weight = v.positive("weight", &a.weight);
            let max_outer = v.number::<usize>("max-outer", &a.max_outer).filter(|&m| {
                let ok = m > 0;
                if !ok {
                    v.push("--max-outer must be positive");
                }
                ok
            });
            match (input_ok, field, eps, weight, max_outer) {
                (true, Some(field), Some(eps), Some(weight), Some(max_outer)) => Some(RunConfig::Segment {
                    input: a.input.clone(),
                    field,
                    eps,
                    weight,
                    gnc: a.gnc,
                    max_outer,
                    out: a.out.clone(),
                    lines: a.lines.clone(),
                    trace: a.trace.clone(),
                }),
                _ => None,
            }
        }
        Command::Energy(a) => {
            let input_ok = v.existing("input", &a.input);
            let field = v.field(&a.field);
            let eps = v.positive("eps", &a.eps);
            match (input_ok, field, eps) {
                (true, Some(field), Some(eps)) => Some(RunConfig::Energy {
                    input: a.input.clone(),
                    field,
                    eps,
                    kind: a.kind,
                    out: a.out.clone(),
                }),
                _ => None,
            }
        }
        Command::Wulff(a) => {
            let field = v.field(&a.field);
            let dirs = v.number::<usize>("dirs", &a.dirs);
            let size = v.number::<usize>("size", &a.size);
            if size.is_some_and(|t| t < 2) {
                v.push("--size must be at least 2");
            }
            if dirs == Some(0) {
                v.push("--dirs must be positive");
            }
            match (field, dirs, size) {
                (Some(field), Some(dirs), Some(size)) if size >= 2 && dirs > 0 => {
                    Some(RunConfig::Wulff { field, dirs, size, out: a.out.clone() })
                }
                _ => None,
            }
        }
        Command::Verify(a) => v.number::<u64>("seed", &a.seed).map(|seed| RunConfig::Verify { seed }),
    };
    match config {
        Some(c) if v.0.is_empty() => Ok(c),
        _ => {
            if v.0.is_empty() {
                v.push("invalid arguments");
            }
            Err(v.0)
        }
    }
}
