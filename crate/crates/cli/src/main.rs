use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use quotforge::adf::{CertSet, FamilyGenerator, FamilyKind};
use quotforge::forcing::PairedFamilies;
use quotforge::Rational;
use quotforge_cli::adf_cmd::{self, load_family, parse_indices};
use quotforge_cli::compute::{self, ComputeOp};
use quotforge_cli::forge;
use quotforge_cli::{read_json, CliError, Report, RunConfig, CONFIG_ENV};

#[derive(Parser)]
#[command(name = "quotforge", version, about = "Exact ℓ∞ geometry, almost disjoint families and block-matrix forging")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// Config file; defaults to the file named by QF_CONFIG.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    rho: Option<Rational>,
    #[arg(long, global = true)]
    c1: Option<Rational>,
    #[arg(long, global = true)]
    c2: Option<Rational>,
    #[arg(long, global = true)]
    delta: Option<Rational>,
    #[arg(long, global = true)]
    horizon: Option<usize>,
    /// Ordinal cap such as `w*2`.
    #[arg(long, global = true)]
    cap: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    vertex_cap: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Progression,
    Branch,
    Luzin,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an almost disjoint family with its intersection certificates.
    BuildAdf {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        count: usize,
        /// Progression: number of ω-blocks.
        #[arg(long, default_value_t = 1)]
        blocks: u64,
        /// Branch: tree depth.
        #[arg(long, default_value_t = 4)]
        depth: u32,
        /// Luzin: horizon of the invariant check.
        #[arg(long, default_value_t = 64)]
        luzin_horizon: u64,
    },
    /// Separate two subfamilies of a family by one set.
    CheckSeparation {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        inside: String,
        #[arg(long)]
        outside: Option<String>,
    },
    /// Coherent family and Boolean monomorphism below the ordinal cap.
    BuildCoherent {
        /// Defaults to the 8-member progression family over two ω-blocks.
        #[arg(long)]
        family: Option<PathBuf>,
        #[arg(long, default_value = "0,1,2,w,w+1,w+2")]
        laws: String,
        #[arg(long, default_value = "0,2,w+1")]
        separate: String,
    },
    /// Members of a family meeting a set infinitely, and the uncovered rest.
    MadCensus {
        #[arg(long)]
        family: PathBuf,
        /// The set as JSON, e.g. {"progressions":[[0,2]],"add":[],"remove":[]}.
        #[arg(long)]
        set: String,
    },
    /// One geometry computation on a JSON input.
    Compute {
        #[arg(value_enum)]
        op: ComputeOp,
        #[arg(long, conflicts_with_all = ["demo", "generate"])]
        input: Option<PathBuf>,
        #[arg(long)]
        demo: bool,
        /// extend-iso only: run a generated suite of this many instances.
        #[arg(long)]
        generate: Option<usize>,
    },
    /// Forge a block-diagonal matrix carrying one family onto the other.
    ForgeMatrix {
        #[command(flatten)]
        source: FamilySource,
    },
    /// Re-verify a forge-matrix run.
    VerifyRun {
        /// Run document, given positionally or as `--run`.
        #[arg(long = "run", value_name = "RUN", required_unless_present = "path")]
        run: Option<PathBuf>,
        #[arg(conflicts_with = "run")]
        path: Option<PathBuf>,
        #[command(flatten)]
        source: FamilySource,
    },
}

#[derive(Args)]
struct FamilySource {
    /// Paired tail-vector families as JSON.
    #[arg(long, conflicts_with_all = ["from", "to"])]
    families: Option<PathBuf>,
    /// Almost disjoint family whose indicators are the f-vectors.
    #[arg(long, requires = "to")]
    from: Option<PathBuf>,
    /// Almost disjoint family whose indicators are the g-vectors.
    #[arg(long, requires = "from")]
    to: Option<PathBuf>,
}

impl FamilySource {
    fn load(&self, cfg: &RunConfig) -> Result<Option<PairedFamilies>, CliError> {
        if let Some(p) = &self.families {
            return forge::load_families(p).map(Some);
        }
        match (&self.from, &self.to) {
            (Some(f), Some(t)) => forge::families_from_sets(cfg, &load_family(f)?, &load_family(t)?).map(Some),
            _ => Ok(None),
        }
    }
}

fn config(g: &Global) -> Result<RunConfig, CliError> {
    let mut c = RunConfig::load(g.config.as_deref())?;
    macro_rules! set {
        ($($f:ident),*) => { $(if let Some(v) = &g.$f { c.$f = v.clone(); })* };
    }
    set!(rho, c1, c2, delta, horizon, seed, vertex_cap);
    if let Some(cap) = &g.cap {
        c.ordinal_cap = cap.clone();
    }
    Ok(c)
}

fn run(cli: &Cli) -> Result<Report, CliError> {
    let cfg = config(&cli.global)?;
    match &cli.cmd {
        Cmd::BuildAdf { kind, count, blocks, depth, luzin_horizon } => {
            let gen = FamilyGenerator {
                kind: match kind {
                    Kind::Progression => FamilyKind::Progression,
                    Kind::Branch => FamilyKind::Branch,
                    Kind::Luzin => FamilyKind::Luzin,
                },
                count: *count,
                blocks: *blocks,
                depth: *depth,
                horizon: *luzin_horizon,
                seed: cfg.seed,
                explicit: Vec::new(),
            };
            adf_cmd::build_adf(&cfg, &gen)
        }
        Cmd::CheckSeparation { family, inside, outside } => {
            let outside = outside.as_deref().map(parse_indices).transpose()?;
            adf_cmd::check_separation(&cfg, &load_family(family)?, &parse_indices(inside)?, outside.as_ref())
        }
        Cmd::BuildCoherent { family, laws, separate } => {
            let fam = match family {
                Some(p) => load_family(p)?,
                None => quotforge::adf::make_family(&FamilyGenerator::progression(8, 2))?,
            };
            adf_cmd::build_coherent(&cfg, &fam, &parse_indices(laws)?, &parse_indices(separate)?)
        }
        Cmd::MadCensus { family, set } => {
            let x: CertSet = serde_json::from_str(set).map_err(|e| CliError::Usage(format!("--set: {e}")))?;
            adf_cmd::census(&cfg, &load_family(family)?, &x)
        }
        Cmd::Compute { op, input, demo, generate } => match (generate, op) {
            (Some(n), ComputeOp::ExtendIso) => compute::extend_suite(&cfg, *n),
            (Some(_), _) => Err(CliError::Usage("--generate applies to extend-iso only".into())),
            (None, _) => {
                let value = match (input, demo) {
                    (Some(p), _) => read_json(p)?,
                    (None, true) => compute::demo_input(*op),
                    (None, false) => return Err(CliError::Usage("compute needs --input, --demo or --generate".into())),
                };
                compute::compute(&cfg, *op, value)
            }
        },
        Cmd::ForgeMatrix { source } => {
            let fam = source.load(&cfg)?.ok_or_else(|| CliError::Usage("forge-matrix needs --families or --from/--to".into()))?;
            forge::forge_matrix(&cfg, &fam)
        }
        Cmd::VerifyRun { run, path, source } => {
            let file = run.as_ref().or(path.as_ref()).ok_or_else(|| CliError::Usage("verify-run needs a run file".into()))?;
            let (r, embedded) = forge::load_run(file)?;
            let fam = source
                .load(&cfg)?
                .or(embedded)
                .ok_or_else(|| CliError::Usage("the run embeds no families; pass --families or --from/--to".into()))?;
            Ok(forge::verify(&cfg, &r, &fam))
        }
    }
}

fn write(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io { path: p.display().to_string(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = run(&cli).and_then(|r| write(cli.global.out.as_deref(), &r.to_json()).map(|_| r.exit_code()));
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
