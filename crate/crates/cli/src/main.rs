use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use choimetric::algebra::{Element, LinearFunctional, TraceFunctional};
use choimetric::channels::{choi_matrix, classify, omega_tau, ChannelMap};
use choimetric::geometry::{kasparov_product, Seminorm, SpectralTriple};
use choimetric::harness::{
    self, all_pass, chaining_setup, emit_report, generate_instance, load_config, ExperimentKind,
    ExperimentSpec, RunConfig,
};
use choimetric::io::{self, Loaded, Registry};
use choimetric::metrics::{
    delta_distance, dl_distance, dl_stabilized, mk_distance, wasserstein_dual, DlOptions,
    MkOptions, MkProblem, MkResult,
};

#[derive(Parser)]
#[command(
    name = "choimetric",
    version,
    about = "Distances between completely positive maps via Choi-Jamiolkowski embeddings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone)]
struct Common {
    /// Random seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Number of trials for experiment verbs.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Acceptance tolerance for experiment verbs.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Iteration cap of the SDP solver.
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    /// Random starts of the D_L ascent.
    #[arg(long, global = true)]
    starts: Option<usize>,
    /// Largest amplification in the stabilized D_L.
    #[arg(long, global = true)]
    m_max: Option<usize>,
    /// Output file (JSON, or CSV for experiment verbs). Stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Definition files (algebras, groups) loaded before the positional ones.
    #[arg(long = "def", global = true)]
    defs: Vec<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate input files.
    Validate { files: Vec<PathBuf> },
    /// Choi matrix of a map out of a full matrix algebra.
    Choi { channel: PathBuf },
    /// The functional ω_τ(F) on A ⊗ B^op.
    Omega {
        channel: PathBuf,
        /// Trace on the target; the algebra's default trace when absent.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Complete positivity, trace-channel, unitality and trace preservation.
    Classify {
        channel: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Trace on the source, enabling the trace-preservation flag.
        #[arg(long)]
        source_trace: Option<PathBuf>,
    },
    /// Monge-Kantorovich distance between two functionals.
    Mk {
        phi: PathBuf,
        psi: PathBuf,
        /// Spectral triple on the functionals' algebra.
        #[arg(long)]
        triple: PathBuf,
    },
    /// Δ between two trace channels.
    Delta {
        f: PathBuf,
        g: PathBuf,
        #[command(flatten)]
        seminorm: JointSeminorm,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// D_L between two maps, stabilized over amplifications when --m-max > 1.
    Dl {
        f: PathBuf,
        g: PathBuf,
        /// Spectral triple on the source algebra.
        #[arg(long)]
        triple: PathBuf,
    },
    /// Wasserstein-1 dual between two densities.
    Wasserstein {
        /// Coordinates of the first density, in functional-file layout.
        rho1: PathBuf,
        rho2: PathBuf,
        /// JSON array of Hermitian matrices L_i.
        #[arg(long)]
        ops: PathBuf,
    },
    /// Kasparov product of two triples.
    Kasparov { a: PathBuf, b: PathBuf },
    /// Write a built-in group (Zn, Dn, Sn, Z2xZ2, Z2xZ2tw) as a group file.
    GroupGen { name: String },
    /// Write a small input set and a config for an experiment kind into --out.
    Generate { kind: String },
    /// Stability experiment.
    Stability(ExperimentArgs),
    /// Chaining experiment.
    Chaining(ExperimentArgs),
    /// Embedding experiment.
    Embedding(ExperimentArgs),
    /// Run every experiment of a config (the shipped acceptance config by default).
    RunAll {
        config: Option<PathBuf>,
        /// Record wall time in the ms column.
        #[arg(long)]
        timing: bool,
    },
}

#[derive(Args)]
struct JointSeminorm {
    /// Triple on A ⊗ B^op.
    #[arg(long, conflicts_with = "group")]
    triple: Option<PathBuf>,
    /// Use the product of the word-length triples of this group and its opposite.
    #[arg(long)]
    group: Option<String>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Groups to run over.
    #[arg(long = "group")]
    groups: Vec<String>,
    /// Extra input files (groups, positive definite functions).
    inputs: Vec<PathBuf>,
    #[arg(long)]
    timing: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

struct Ctx {
    reg: Registry,
    common: Common,
}

impl Ctx {
    fn load(&mut self, path: &Path) -> Result<Loaded> {
        Ok(io::load_file(&mut self.reg, path)?)
    }

    fn channel(&mut self, path: &Path) -> Result<ChannelMap> {
        match self.load(path)? {
            Loaded::Channel(c) => Ok(c),
            other => bail!(
                "{}: expected a channel file, found {:?}",
                path.display(),
                other.kind()
            ),
        }
    }

    fn functional(&mut self, path: &Path) -> Result<LinearFunctional> {
        match self.load(path)? {
            Loaded::Functional(f) => Ok(f),
            other => bail!(
                "{}: expected a functional file, found {:?}",
                path.display(),
                other.kind()
            ),
        }
    }

    fn triple(&mut self, path: &Path) -> Result<SpectralTriple> {
        match self.load(path)? {
            Loaded::Triple(t) => Ok(t),
            other => bail!(
                "{}: expected a triple file, found {:?}",
                path.display(),
                other.kind()
            ),
        }
    }

    /// Trace from a file, or the default trace of the named algebra.
    fn trace(&mut self, path: Option<&PathBuf>, algebra_name: &str) -> Result<TraceFunctional> {
        match path {
            Some(p) => {
                let f = self.functional(p)?;
                Ok(TraceFunctional::new(&p.display().to_string(), f)?)
            }
            None => Ok(self.reg.default_trace(algebra_name)?),
        }
    }

    fn mk_options(&self) -> MkOptions {
        let mut o = MkOptions::default();
        if let Some(m) = self.common.max_iter {
            o.max_iter = m;
        }
        o
    }

    fn emit(&self, value: &Value) -> Result<()> {
        let text = serde_json::to_string_pretty(value)? + "\n";
        match &self.common.out {
            Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn channel_file_names(path: &Path) -> Result<(String, String)> {
    let f: io::ChannelFile = io::read_json(path)?;
    Ok((f.source, f.target))
}

fn record(value: &choimetric::metrics::Distance, status: Value, gap: f64, seed: u64) -> Value {
    json!({ "value": value, "status": status, "gap": gap, "seed": seed })
}

fn mk_record(r: &MkResult, seed: u64) -> Value {
    record(&r.value, json!(r.status), r.dual_gap, seed)
}

fn run(cli: Cli) -> Result<bool> {
    let mut ctx = Ctx {
        reg: Registry::new(),
        common: cli.common.clone(),
    };
    for d in &cli.common.defs {
        ctx.load(d)?;
    }
    let seed = cli.common.seed;
    match cli.command {
        Command::Validate { files } => {
            let mut out = Vec::new();
            for f in &files {
                let raw: Value = io::read_json(f)?;
                let kind = if raw.get("experiments").is_some() {
                    let cfg = load_config(f)?;
                    harness::prepare_config(&cfg)?;
                    json!("config")
                } else {
                    json!(ctx.load(f)?.kind())
                };
                out.push(json!({ "file": f.display().to_string(), "kind": kind }));
            }
            ctx.emit(&Value::Array(out))?;
        }
        Command::Choi { channel } => {
            let f = ctx.channel(&channel)?;
            ctx.emit(&json!({ "matrix": io::matrix_to_json(&choi_matrix(&f)?) }))?;
        }
        Command::Omega { channel, trace } => {
            let (_, target) = channel_file_names(&channel)?;
            let f = ctx.channel(&channel)?;
            let tau = ctx.trace(trace.as_ref(), &target)?;
            let w = omega_tau(&f, &tau)?.functional;
            ctx.emit(&serde_json::to_value(io::FunctionalFile {
                algebra: w.algebra.name().to_string(),
                values: io::vec_to_json(&w.values),
            })?)?;
        }
        Command::Classify {
            channel,
            trace,
            source_trace,
        } => {
            let (source, target) = channel_file_names(&channel)?;
            let f = ctx.channel(&channel)?;
            let tau = ctx.trace(trace.as_ref(), &target)?;
            let tau_src = match source_trace {
                Some(p) => Some(ctx.trace(Some(&p), &source)?),
                None => None,
            };
            ctx.emit(&serde_json::to_value(classify(
                &f,
                &tau,
                tau_src.as_ref(),
            )?)?)?;
        }
        Command::Mk { phi, psi, triple } => {
            let t = ctx.triple(&triple)?;
            let (p, q) = (ctx.functional(&phi)?, ctx.functional(&psi)?);
            let mut problem = MkProblem::new(p, q, Seminorm::commutator(&t));
            problem.options = ctx.mk_options();
            let r = mk_distance(&problem)?;
            ctx.emit(&mk_record(&r, seed))?;
            return Ok(r.status == choimetric::metrics::MkStatus::Optimal
                || r.status == choimetric::metrics::MkStatus::Infinite);
        }
        Command::Delta {
            f,
            g,
            seminorm,
            trace,
        } => {
            let (_, target) = channel_file_names(&f)?;
            let (fc, gc) = (ctx.channel(&f)?, ctx.channel(&g)?);
            let tau = ctx.trace(trace.as_ref(), &target)?;
            let l = match (seminorm.triple, seminorm.group) {
                (Some(p), None) => Seminorm::commutator(&ctx.triple(&p)?),
                (None, Some(name)) => chaining_setup(&ctx.reg.group(&name)?)?.seminorm,
                _ => bail!("pass either --triple or --group"),
            };
            let r = delta_distance(&fc, &gc, &tau, &l, &ctx.mk_options())?;
            ctx.emit(&mk_record(&r, seed))?;
            return Ok(r.status != choimetric::metrics::MkStatus::MaxIter);
        }
        Command::Dl { f, g, triple } => {
            let t = ctx.triple(&triple)?;
            let (fc, gc) = (ctx.channel(&f)?, ctx.channel(&g)?);
            let mut opts = DlOptions {
                mk: ctx.mk_options(),
                seed,
                ..DlOptions::default()
            };
            if let Some(s) = ctx.common.starts {
                opts.starts = s;
            }
            let base = Seminorm::commutator(&t);
            let m_max = ctx.common.m_max.unwrap_or(1);
            let value = if m_max <= 1 {
                let r = dl_distance(&fc, &gc, &base, &opts)?;
                json!({ "value": r.value, "status": r.status, "gap": Value::Null, "seed": r.best_seed,
                        "converged": r.converged })
            } else {
                let family = |m: usize,
                              _: &choimetric::algebra::Algebra|
                 -> choimetric::error::Result<Seminorm> {
                    if m == 1 {
                        Ok(base.clone())
                    } else {
                        base.right_tensor(&choimetric::algebra::matrix_algebra(m))
                    }
                };
                let r = dl_stabilized(&fc, &gc, &family, m_max, &opts)?;
                json!({ "value": r.value, "status": r.per_depth.last().map(|d| d.status), "gap": Value::Null,
                        "seed": seed, "per_depth": r.per_depth })
            };
            ctx.emit(&value)?;
        }
        Command::Wasserstein { rho1, rho2, ops } => {
            let to_element = |f: LinearFunctional| Element {
                algebra: f.algebra.clone(),
                coords: f.values,
            };
            let (a, b) = (
                to_element(ctx.functional(&rho1)?),
                to_element(ctx.functional(&rho2)?),
            );
            let mats: Vec<io::MatrixJson> = io::read_json(&ops)?;
            let ls = mats
                .iter()
                .map(io::matrix_from_json)
                .collect::<choimetric::error::Result<Vec<_>>>()?;
            match wasserstein_dual(&a, &b, &ls, &ctx.mk_options()) {
                Ok(r) => ctx.emit(&json!({ "value": r.value, "status": r.status, "gap": r.gap, "seed": seed }))?,
                Err(choimetric::error::Error::Infeasible { residual }) => ctx.emit(
                    &json!({ "value": "inf", "status": "infeasible", "gap": residual, "seed": seed }),
                )?,
                Err(e) => return Err(e.into()),
            }
        }
        Command::Kasparov { a, b } => {
            let (ta, tb) = (ctx.triple(&a)?, ctx.triple(&b)?);
            let p = kasparov_product(&ta, &tb);
            p.validate()?;
            let name = format!("{}⊗{}", ta.algebra.name(), tb.algebra.name());
            ctx.emit(&serde_json::to_value(io::triple_to_file(&name, &p))?)?;
        }
        Command::GroupGen { name } => {
            let g = ctx.reg.group(&name)?;
            ctx.emit(&serde_json::to_value(g.to_file())?)?;
        }
        Command::Generate { kind } => {
            let kind: ExperimentKind = kind.parse()?;
            let dir = ctx
                .common
                .out
                .clone()
                .ok_or_else(|| anyhow!("generate needs --out DIR"))?;
            let files = generate_instance(kind, seed, &dir)?;
            for f in files {
                println!("{}", f.display());
            }
        }
        Command::Stability(args) => {
            return experiment(&ctx.common, ExperimentKind::Stability, args)
        }
        Command::Chaining(args) => return experiment(&ctx.common, ExperimentKind::Chaining, args),
        Command::Embedding(args) => {
            return experiment(&ctx.common, ExperimentKind::Embedding, args)
        }
        Command::RunAll { config, timing } => {
            let mut cfg = match config {
                Some(p) => load_config(&p)?,
                None => harness::acceptance_config(),
            };
            cfg.timing |= timing;
            return report(&ctx.common, &cfg);
        }
    }
    Ok(true)
}

fn experiment(common: &Common, kind: ExperimentKind, args: ExperimentArgs) -> Result<bool> {
    let mut spec = ExperimentSpec::new(kind, common.seed, common.trials.unwrap_or(10));
    spec.tolerance = common.tolerance;
    spec.max_iter = common.max_iter;
    spec.groups = args.groups;
    spec.inputs = common.defs.iter().chain(&args.inputs).cloned().collect();
    report(
        common,
        &RunConfig {
            experiments: vec![spec],
            timing: args.timing,
        },
    )
}

/// Run, then write the CSV in one piece. Validation errors surface before any
/// file is created.
fn report(common: &Common, cfg: &RunConfig) -> Result<bool> {
    let records = harness::run_all(cfg)?;
    match &common.out {
        Some(p) => emit_report(&records, p)?,
        None => print!("{}", String::from_utf8(harness::to_csv(&records)?)?),
    }
    let failed = records.iter().filter(|r| !r.pass).count();
    eprintln!("{} rows, {} failed", records.len(), failed);
    Ok(all_pass(&records))
}
