use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cpnet::harness::{accuracy_sweep, scaling, ScaleConfig};
use cpnet::io::{self, LoadOptions, Loaded};
use cpnet::report::{self, EvaluateJson, FeaturesJson, FitJson, ValidateJson};
use cpnet::{Error, Result};
use cpnet_core::diagnostics::{validate, Features, TwoBlock};
use cpnet_core::exact::{self, Scope};
use cpnet_core::fast::FastLikelihood;
use cpnet_core::kernels::{build_rank_table, EARTH_RADIUS_KM};
use cpnet_core::optimize::fit;
use cpnet_core::sample::{edge_length_cdf, sample, SAMPLE_ACCURACY};
use cpnet_core::{Accuracy, Coords, FitConfig, InitStrategy, Kernel, LikelihoodPath, Rounding, SampleConfig, SampleMethod};

#[derive(Parser, Debug)]
#[command(name = "cpnet", version, about = "Fit, evaluate and sample spatial core-periphery network models")]
struct Cli {
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Fixed seed 0 unless --seed is given, and no wall-clock fields in reports
    #[arg(long, global = true)]
    deterministic: bool,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// No header or progress on stderr
    #[arg(long, short, global = true)]
    quiet: bool,
    #[arg(long, global = true, value_enum, default_value_t = KernelArg::Euclidean)]
    kernel: KernelArg,
    /// Sphere radius in km for the great-circle kernel
    #[arg(long, global = true)]
    earth_radius: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum KernelArg {
    Euclidean,
    Greatcircle,
    Rank,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum PathArg {
    Exact,
    Fast,
}

impl From<PathArg> for LikelihoodPath {
    fn from(p: PathArg) -> Self {
        match p {
            PathArg::Exact => LikelihoodPath::Exact,
            PathArg::Fast => LikelihoodPath::Fast,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum InitArg {
    Zeros,
    Degree,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Naive,
    Fast,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum RoundingArg {
    Poisson,
    Floor,
}

#[derive(Args, Debug)]
struct NetworkArgs {
    /// Edge list, `<id> <id>` per line
    #[arg(long)]
    edges: PathBuf,
    /// Positions, `<id> <x1> .. <xd>` per line
    #[arg(long)]
    coords: PathBuf,
    #[command(flatten)]
    jitter: JitterArgs,
}

#[derive(Args, Debug)]
struct JitterArgs {
    /// Noise added to vertices sharing a position
    #[arg(long, default_value_t = io::DEFAULT_JITTER)]
    jitter: f64,
    /// Keep coincident positions as given
    #[arg(long)]
    no_jitter: bool,
}

#[derive(Args, Debug, Clone, Copy)]
struct AccArgs {
    #[arg(long, default_value_t = 2.0)]
    delta1: f64,
    #[arg(long, default_value_t = 0.2)]
    delta2: f64,
    /// Series truncation order
    #[arg(long, default_value_t = 4)]
    order: usize,
}

impl AccArgs {
    fn get(&self) -> Result<Accuracy> {
        Ok(Accuracy::new(self.delta1, self.delta2, self.order)?)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Maximum likelihood fit
    Fit {
        #[command(flatten)]
        net: NetworkArgs,
        #[arg(long, value_enum, default_value_t = PathArg::Exact)]
        path: PathArg,
        #[command(flatten)]
        acc: AccArgs,
        #[arg(long, default_value_t = 500)]
        max_iters: usize,
        /// Max-norm gradient tolerance
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        fix_epsilon: Option<f64>,
        #[arg(long, value_enum, default_value_t = InitArg::Degree)]
        init: InitArg,
        #[arg(long, default_value_t = 10)]
        history: usize,
        #[arg(long, default_value_t = 1)]
        restarts: usize,
        /// Parameter file to write
        #[arg(long)]
        out: PathBuf,
        /// JSON report (stdout when omitted)
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Log-likelihood and gradient summary at given parameters
    Evaluate {
        #[command(flatten)]
        net: NetworkArgs,
        #[arg(long)]
        params: PathBuf,
        /// Use the tree code
        #[arg(long)]
        fast: bool,
        #[command(flatten)]
        acc: AccArgs,
    },
    /// Draw a random network
    Sample {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        coords: PathBuf,
        #[command(flatten)]
        jitter: JitterArgs,
        #[arg(long, value_enum, default_value_t = MethodArg::Fast)]
        method: MethodArg,
        #[arg(long, value_enum, default_value_t = RoundingArg::Poisson)]
        rounding: RoundingArg,
        /// Keep repeated pairs from the fast sampler
        #[arg(long)]
        no_dedupe: bool,
        /// Drop balls between every sibling pair without splitting
        #[arg(long)]
        no_refine: bool,
        /// Separation required before dropping balls
        #[arg(long, default_value_t = SAMPLE_ACCURACY.delta1)]
        delta1: f64,
        /// Small-z bound required before dropping balls
        #[arg(long, default_value_t = SAMPLE_ACCURACY.delta2)]
        delta2: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Expected versus observed degrees and edge lengths
    Validate {
        #[command(flatten)]
        net: NetworkArgs,
        #[arg(long)]
        params: PathBuf,
        #[arg(long, value_enum, default_value_t = PathArg::Exact)]
        path: PathArg,
        #[command(flatten)]
        acc: AccArgs,
        /// Per-vertex `id degree expected` table
        #[arg(long)]
        degrees: Option<PathBuf>,
        /// JSON report (stdout when omitted)
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Tree-code error and time over a grid of thresholds (TSV)
    Sweep {
        #[command(flatten)]
        net: NetworkArgs,
        #[arg(long)]
        params: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 4.0])]
        delta1: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.8, 0.4, 0.2, 0.1, 0.05])]
        delta2: Vec<f64>,
        #[arg(long, default_value_t = 4)]
        order: usize,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Timing on the two-block family (TSV)
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = [10000, 20000, 40000])]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 10.0)]
        avg_degree: f64,
        /// Also time the exact gradient up to this size
        #[arg(long, default_value_t = 0)]
        exact_upto: usize,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[command(flatten)]
        acc: AccArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summary features of core scores (TSV)
    Features {
        /// Parameter files; one row each
        #[arg(required = true)]
        params: Vec<PathBuf>,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two-block synthetic instance
    Synth {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 0.05)]
        core_frac: f64,
        #[arg(long, default_value_t = 1.0)]
        theta_gap: f64,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        /// Core score; calibrated to --avg-degree when omitted
        #[arg(long, allow_hyphen_values = true)]
        theta_core: Option<f64>,
        #[arg(long, default_value_t = 10.0)]
        avg_degree: f64,
        #[arg(long)]
        out_coords: PathBuf,
        #[arg(long)]
        out_params: PathBuf,
        /// Also sample a network with the fast sampler
        #[arg(long)]
        out_edges: Option<PathBuf>,
    },
    /// Edge-length distribution (TSV of threshold and count)
    Cdf {
        #[command(flatten)]
        net: NetworkArgs,
        /// Ascending thresholds; log-spaced bins over the edge lengths when omitted
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<f64>>,
        #[arg(long, default_value_t = 20)]
        bins: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Ctx {
    seed: u64,
    deterministic: bool,
    quiet: bool,
    kernel_arg: KernelArg,
    radius: f64,
}

impl Ctx {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn warn(&self, msg: impl AsRef<str>) {
        eprintln!("warning: {}", msg.as_ref());
    }

    fn load_opts(&self, j: &JitterArgs) -> LoadOptions {
        LoadOptions { jitter: (!j.no_jitter).then_some(j.jitter), seed: self.seed }
    }

    fn kernel(&self, coords: &Coords) -> Result<Kernel> {
        let k = match self.kernel_arg {
            KernelArg::Euclidean => Kernel::Euclidean,
            KernelArg::Greatcircle => Kernel::GreatCircle { radius: self.radius },
            KernelArg::Rank => Kernel::Rank(build_rank_table(coords, &Kernel::Euclidean)?),
        };
        k.check(coords)?;
        Ok(k)
    }

    fn kernel_name(&self) -> String {
        match self.kernel_arg {
            KernelArg::Euclidean => "euclidean".into(),
            KernelArg::Greatcircle => format!("greatcircle(radius={})", self.radius),
            KernelArg::Rank => "rank".into(),
        }
    }

    /// The tree code needs a metric on positions; rank falls back to exact.
    fn resolve_path(&self, kernel: &Kernel, path: LikelihoodPath) -> LikelihoodPath {
        if path == LikelihoodPath::Fast && !kernel.is_geometric() {
            self.warn("the rank kernel has no tree-code path; using the exact path");
            return LikelihoodPath::Exact;
        }
        path
    }

    fn load(&self, net: &NetworkArgs) -> Result<Loaded> {
        let l = io::load_network(&net.edges, &net.coords, self.load_opts(&net.jitter))?;
        self.note(format!(
            "loaded {} vertices, {} edges ({} dropped), dimension {}{}",
            l.network.n(),
            l.network.edge_count(),
            l.dropped_edges,
            l.network.coords().dim(),
            if l.jittered > 0 { format!(", {} vertices jittered", l.jittered) } else { String::new() }
        ));
        Ok(l)
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => io::write_file(p, |w| w.write_all(text.as_bytes())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| Error::io(Path::new("<stdout>"), e))
        }
    }
}

fn tsv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut buf = Vec::new();
    io::write_tsv(header, rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("utf-8")
}

fn f(x: f64) -> String {
    io::fmt_f64(x)
}

fn run(cli: Cli, ctx: &Ctx) -> Result<()> {
    match cli.command {
        Command::Fit { net, path, acc, max_iters, tol, fix_epsilon, init, history, restarts, out, report } => {
            let l = ctx.load(&net)?;
            let kernel = ctx.kernel(l.network.coords())?;
            let path = ctx.resolve_path(&kernel, path.into());
            let cfg = FitConfig {
                max_iters,
                grad_tol: tol,
                path,
                acc: acc.get()?,
                fix_epsilon,
                init: match init {
                    InitArg::Zeros => InitStrategy::Zeros,
                    InitArg::Degree => InitStrategy::DegreeHeuristic,
                },
                history,
                seed: ctx.seed,
                restarts,
            };
            let t = Instant::now();
            let r = fit(&l.network, &kernel, &cfg)?;
            let secs = t.elapsed().as_secs_f64();
            ctx.note(format!(
                "{} after {} iterations, omega {:.6e}, epsilon {:.6}, |grad| {:.3e}",
                report::termination_name(r.termination),
                r.iterations,
                r.omega_trace.last().copied().unwrap_or(f64::NAN),
                r.params.epsilon,
                r.final_grad_norm
            ));
            if !r.converged {
                ctx.warn("fit did not reach the gradient tolerance");
            }
            io::write_file(&out, |w| io::write_params(&r.params, l.network.labels(), w))?;
            let mut doc = FitJson::new(&r, l.network.n(), l.network.edge_count(), ctx.kernel_name(), path, cfg.acc, ctx.seed);
            if !ctx.deterministic {
                doc.wall_seconds = Some(secs);
            }
            emit(report.as_deref(), &report::to_json(&doc))
        }
        Command::Evaluate { net, params, fast, acc } => {
            let l = ctx.load(&net)?;
            let kernel = ctx.kernel(l.network.coords())?;
            let (labels, p) = io::read_params(&params)?;
            let p = io::align_params(&labels, p, &l.ids, &params)?;
            let want = if fast { LikelihoodPath::Fast } else { LikelihoodPath::Exact };
            let path = ctx.resolve_path(&kernel, want);
            let acc = acc.get()?;
            let ev = match path {
                LikelihoodPath::Exact => exact::evaluate(&l.network, &p, &kernel.bind(l.network.coords())?, Scope::Full)?,
                LikelihoodPath::Fast => FastLikelihood::new(&l.network, &kernel, acc)?.evaluate(&p, Scope::Full)?,
            };
            emit(None, &report::to_json(&EvaluateJson::new(&ev, path, acc)))
        }
        Command::Sample { params, coords, jitter, method, rounding, no_dedupe, no_refine, delta1, delta2, out } => {
            let (ids, c, moved) = io::load_coords(&coords, ctx.load_opts(&jitter))?;
            if moved > 0 {
                ctx.note(format!("{moved} vertices jittered"));
            }
            let kernel = ctx.kernel(&c)?;
            let (labels, p) = io::read_params(&params)?;
            let p = io::align_params(&labels, p, &ids, &params)?;
            let mut method = match method {
                MethodArg::Naive => SampleMethod::Naive,
                MethodArg::Fast => SampleMethod::Fast,
            };
            if method == SampleMethod::Fast && !kernel.is_geometric() {
                ctx.warn("the rank kernel has no hierarchical sampler; using the naive sampler");
                method = SampleMethod::Naive;
            }
            let cfg = SampleConfig {
                method,
                seed: ctx.seed,
                rounding: match rounding {
                    RoundingArg::Poisson => Rounding::Poisson,
                    RoundingArg::Floor => Rounding::StochasticFloor,
                },
                dedupe: !no_dedupe,
                refine: if no_refine { None } else { Some(Accuracy::new(delta1, delta2, SAMPLE_ACCURACY.order)?) },
            };
            let edges = sample(&c, &p, &kernel, &cfg)?;
            ctx.note(format!("sampled {} edges", edges.len()));
            io::write_file(&out, |w| io::write_edges(&edges, Some(ids.labels()), w))
        }
        Command::Validate { net, params, path, acc, degrees, report } => {
            let l = ctx.load(&net)?;
            let kernel = ctx.kernel(l.network.coords())?;
            let (labels, p) = io::read_params(&params)?;
            let p = io::align_params(&labels, p, &l.ids, &params)?;
            let path = ctx.resolve_path(&kernel, path.into());
            let r = validate(&l.network, &p, &kernel, path, acc.get()?)?;
            ctx.note(format!(
                "degree rmse {:.3e}, max {:.3e}; gmel model {:.6e}, network {:.6e}",
                r.degree_rmse, r.degree_max_abs, r.model_gmel, r.network_gmel
            ));
            if let Some(d) = degrees {
                let rows: Vec<Vec<String>> = (0..l.network.n())
                    .map(|u| vec![l.ids.labels()[u].clone(), format!("{}", r.degrees[u]), f(r.expected_degrees[u])])
                    .collect();
                emit(Some(&d), &tsv(&["id", "degree", "expected_degree"], &rows))?;
            }
            emit(report.as_deref(), &report::to_json(&ValidateJson::new(&r, path)))
        }
        Command::Sweep { net, params, delta1, delta2, order, reps, out } => {
            let l = ctx.load(&net)?;
            let kernel = ctx.kernel(l.network.coords())?;
            if !kernel.is_geometric() {
                return Err(cpnet_core::Error::UnsupportedKernel("rank").into());
            }
            let (labels, p) = io::read_params(&params)?;
            let p = io::align_params(&labels, p, &l.ids, &params)?;
            let grid: Vec<(f64, f64)> = delta1.iter().flat_map(|&a| delta2.iter().map(move |&b| (a, b))).collect();
            let rows = accuracy_sweep(&l.network, &p, &kernel, &grid, order, reps)?;
            let mut header = vec!["delta1", "delta2", "order", "rmse_expected_degree", "max_abs_degree_error", "omega_rel_error"];
            if !ctx.deterministic {
                header.push("seconds");
            }
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let mut v = vec![f(r.delta1), f(r.delta2), r.order.to_string(), f(r.rmse), f(r.max_abs), f(r.omega_rel_error)];
                    if !ctx.deterministic {
                        v.push(f(r.seconds));
                    }
                    v
                })
                .collect();
            emit(out.as_deref(), &tsv(&header, &table))
        }
        Command::Bench { sizes, avg_degree, exact_upto, reps, acc, out } => {
            if sizes.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Usage("--sizes must be strictly ascending".into()));
            }
            let cfg = ScaleConfig { avg_degree, acc: acc.get()?, seed: ctx.seed, exact_upto, reps, ..ScaleConfig::default() };
            let rows = scaling(&sizes, &cfg)?;
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        r.edges.to_string(),
                        f(r.theta_core),
                        f(r.build_seconds),
                        f(r.grad_seconds),
                        f(r.sample_seconds),
                        r.exact_grad_seconds.map(f).unwrap_or_else(|| "NA".into()),
                    ]
                })
                .collect();
            let header = ["n", "edges", "theta_core", "build_seconds", "grad_seconds", "sample_seconds", "exact_grad_seconds"];
            emit(out.as_deref(), &tsv(&header, &table))
        }
        Command::Features { params, json, out } => {
            let mut rows = Vec::new();
            let mut docs = Vec::new();
            for p in &params {
                let (_, mp) = io::read_params(p)?;
                let ft = Features::of(&mp.theta)?;
                rows.push(vec![p.display().to_string(), f(ft.max), f(ft.mean), f(ft.std), ft.n.to_string()]);
                docs.push(FeaturesJson::from(ft));
            }
            if json {
                emit(out.as_deref(), &report::to_json(&docs))
            } else {
                emit(out.as_deref(), &tsv(&["file", "max", "mean", "std", "n"], &rows))
            }
        }
        Command::Synth { n, dim, core_frac, theta_gap, epsilon, theta_core, avg_degree, out_coords, out_params, out_edges } => {
            if !(0.0 < core_frac && core_frac < 1.0) {
                return Err(Error::Usage("--core-frac must lie strictly between 0 and 1".into()));
            }
            let tb = TwoBlock { n, dim, core_fraction: core_frac, theta_gap, epsilon };
            let coords = tb.coords(ctx.seed)?;
            let tc = match theta_core {
                Some(t) => t,
                None => {
                    if ctx.kernel_arg != KernelArg::Euclidean {
                        return Err(Error::Usage("calibration uses the euclidean kernel; pass --theta-core".into()));
                    }
                    tb.calibrate_within(&coords, avg_degree, 2000, 1e-9)?
                }
            };
            ctx.note(format!("core score {tc:.6}, {} core vertices", tb.core_count()));
            let p = tb.params(tc);
            io::write_file(&out_coords, |w| io::write_coords(&coords, None, w))?;
            io::write_file(&out_params, |w| io::write_params(&p, None, w))?;
            if let Some(e) = out_edges {
                let kernel = ctx.kernel(&coords)?;
                let method = if kernel.is_geometric() { SampleMethod::Fast } else { SampleMethod::Naive };
                let edges = sample(&coords, &p, &kernel, &SampleConfig { method, seed: ctx.seed, ..SampleConfig::default() })?;
                ctx.note(format!("sampled {} edges", edges.len()));
                io::write_file(&e, |w| io::write_edges(&edges, None, w))?;
            }
            Ok(())
        }
        Command::Cdf { net, thresholds, bins, out } => {
            let l = ctx.load(&net)?;
            let kernel = ctx.kernel(l.network.coords())?;
            let bound = kernel.bind(l.network.coords())?;
            let edges = l.network.edges();
            let th = match thresholds {
                Some(t) => t,
                None => {
                    use cpnet_core::PairKernel;
                    let lens: Vec<f64> = edges.iter().map(|&(u, v)| bound.distance(u, v)).filter(|x| *x > 0.0).collect();
                    let lo = lens.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = lens.iter().copied().fold(0.0, f64::max);
                    if lens.is_empty() || bins == 0 {
                        Vec::new()
                    } else if lo == hi {
                        vec![hi]
                    } else {
                        let (a, b) = (lo.ln(), hi.ln());
                        (0..=bins).map(|i| if i == bins { hi } else { (a + (b - a) * i as f64 / bins as f64).exp() }).collect()
                    }
                }
            };
            let counts = edge_length_cdf(edges, &bound, &th)?;
            let rows: Vec<Vec<String>> = th.iter().zip(&counts).map(|(t, c)| vec![f(*t), c.to_string()]).collect();
            emit(out.as_deref(), &tsv(&["threshold", "edges_at_most"], &rows))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let seed = match (cli.seed, cli.deterministic) {
        (Some(s), _) => s,
        (None, true) => 0,
        (None, false) => std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0),
    };
    let ctx = Ctx {
        seed,
        deterministic: cli.deterministic,
        quiet: cli.quiet,
        kernel_arg: cli.kernel,
        radius: cli.earth_radius.unwrap_or(EARTH_RADIUS_KM),
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    if !ctx.quiet {
        let args: Vec<String> = std::env::args().skip(1).collect();
        eprintln!(
            "# cpnet {} seed={} threads={} deterministic={} args: {}",
            env!("CARGO_PKG_VERSION"),
            ctx.seed,
            rayon::current_num_threads(),
            ctx.deterministic,
            args.join(" ")
        );
    }
    match run(cli, &ctx) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
