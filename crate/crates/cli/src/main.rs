use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use etdiv::cone_cost::{self, ConeTriangleOptions, FiniteMetricSpace};
use etdiv::divergence_dynamics::{self as dynamics, IterateOptions, SampledFunction};
use etdiv::entropy_transport::{self as et, SolveOptions};
use etdiv::io::{self as files, report, EntropyJson, SolutionFile};
use etdiv::marginal_perspective::h_value;
use etdiv::metric_check::{self, TriangleOptions};
use etdiv::{f_divergence, EntropyDescriptor, Error, Family};

#[derive(Parser)]
#[command(name = "etdiv", version, about = "F-divergences, marginal perspective costs and entropy-transport")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct Output {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// D_F(mu1||mu2), D_R(mu1||mu2) and the marginal perspective H_F per atom.
    Divergence {
        #[arg(long, short)]
        entropy: String,
        #[arg(long)]
        mu1: PathBuf,
        #[arg(long)]
        mu2: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Iterate T_a on a sampled entropy and emit the `iter,s,value` trace.
    Iterate {
        #[arg(long, short)]
        entropy: String,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        /// Iterate on s -> H_F(1, s) instead of F.
        #[arg(long)]
        symmetrize: bool,
        #[arg(long, default_value_t = dynamics::DEFAULT_NODES)]
        nodes: usize,
        #[arg(long, default_value_t = dynamics::DEFAULT_S_MAX)]
        s_max: f64,
        #[arg(long, default_value_t = 500)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Triangle audit of H_F^a without transport cost; exits 1 on FAIL.
    MetricAudit {
        #[arg(long, short)]
        entropy: String,
        #[arg(long, default_value_t = 0.5)]
        a: f64,
        #[command(flatten)]
        audit: AuditArgs,
        /// Also search the largest passing exponent in [0.05, 1].
        #[arg(long)]
        max_power: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Costs on the cone over a finite metric space.
    Cone {
        #[command(subcommand)]
        command: ConeCommand,
    },
    /// Solve a discrete entropy-transport problem file.
    EtSolve {
        problem: PathBuf,
        /// Also run the grid brute force (m*n <= 4) with this many points per entry.
        #[arg(long)]
        brute_force: Option<usize>,
        #[arg(long, default_value_t = et::TOL_SOLVE)]
        tol: f64,
        #[arg(long, default_value_t = et::MAX_ITERS)]
        max_iters: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Sample entropy curves as `family,param,s,F(s)` CSV.
    PlotData {
        #[arg(long)]
        family: String,
        /// Comma-separated curves; a curve of a two-parameter family is `p:q`.
        #[arg(long)]
        params: String,
        #[arg(long, default_value_t = 0.0)]
        s_min: f64,
        #[arg(long, default_value_t = 4.0)]
        s_max: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long, default_value_t = 200)]
    grid: usize,
    #[arg(long, default_value_t = 1000)]
    pairs: usize,
    #[arg(long, default_value_t = metric_check::DEFAULT_SEED, value_parser = parse_seed)]
    seed: u64,
    #[arg(long, default_value_t = metric_check::TOL_TRI)]
    tol: f64,
}

#[derive(Subcommand)]
enum ConeCommand {
    /// H_p(d; r, t) in closed form, or H_c for any entropy with --entropy.
    Eval {
        #[arg(long, allow_hyphen_values = true)]
        p: Option<f64>,
        #[arg(long, short)]
        entropy: Option<String>,
        #[arg(long, default_value_t = 0.0)]
        d: f64,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        t: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Random and corner-case triangle audit of sqrt(H_p) on the cone; exits 1 on FAIL.
    Triangle {
        #[arg(long)]
        p: f64,
        /// `single`, `path:N`, `points:FILE.csv` or a distance-matrix CSV file.
        #[arg(long, default_value = "single")]
        space: String,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = metric_check::DEFAULT_SEED, value_parser = parse_seed)]
        seed: u64,
        #[arg(long)]
        no_stress: bool,
        #[command(flatten)]
        output: Output,
    },
    /// A configuration violating the triangle inequality of sqrt(H_p), p < 1.
    Counterexample {
        #[arg(long, allow_hyphen_values = true)]
        p: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Grid audit of the final inequality for p > 1; exits 1 on FAIL.
    Final {
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 100)]
        grid: usize,
        #[command(flatten)]
        output: Output,
    },
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let s = s.trim();
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    }
    .map_err(|e| format!("invalid seed {s:?}: {e}"))
}

type CmdResult = Result<bool, Error>;

struct Sink {
    format: Format,
    out: Box<dyn Write>,
}

impl Sink {
    fn new(output: &Output) -> Result<Self, Error> {
        Ok(Sink { format: output.format, out: open_out(output.out.as_deref())? })
    }

    /// Text: `# key = value` header lines then `text`; JSON: the report body plus a `config` object.
    fn emit<T: Serialize>(&mut self, kind: &str, config: &[(&str, String)], body: T, text: &str) -> Result<(), Error> {
        match self.format {
            Format::Json => {
                #[derive(Serialize)]
                struct WithConfig<'a, T> {
                    config: serde_json::Map<String, serde_json::Value>,
                    #[serde(flatten)]
                    body: &'a T,
                }
                let config = config.iter().map(|(k, v)| (k.to_string(), serde_json::Value::String(v.clone()))).collect();
                serde_json::to_writer_pretty(&mut self.out, &report(kind, WithConfig { config, body: &body }))?;
                writeln!(self.out)?;
            }
            Format::Text => {
                write_header(&mut self.out, kind, config)?;
                self.out.write_all(text.as_bytes())?;
            }
        }
        self.out.flush()?;
        Ok(())
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_header(out: &mut dyn Write, kind: &str, config: &[(&str, String)]) -> io::Result<()> {
    writeln!(out, "# etdiv {kind}")?;
    for (k, v) in config {
        writeln!(out, "# {k} = {v}")?;
    }
    Ok(())
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

fn entropy(spec: &str) -> Result<EntropyDescriptor, Error> {
    spec.parse()
}

fn cmd_divergence(spec: &str, mu1: &Path, mu2: &Path, output: &Output) -> CmdResult {
    let f = entropy(spec)?;
    let (m1, m2) = (files::read_measure(mu1)?, files::read_measure(mu2)?);
    let d = f_divergence(&f, &m1, &m2)?;
    let dr = f_divergence(&f.reverse(), &m1, &m2)?;
    #[derive(Serialize)]
    struct Row {
        index: usize,
        r: f64,
        t: f64,
        h: etdiv::ExtendedValue,
    }
    let rows: Vec<Row> =
        m1.paired(&m2)?.into_iter().map(|(index, r, t)| Row { index, r, t, h: h_value(&f, r, t) }).collect();
    let total: etdiv::ExtendedValue = rows.iter().map(|r| r.h).sum();
    #[derive(Serialize)]
    struct Body<'a> {
        entropy: EntropyJson,
        divergence: etdiv::ExtendedValue,
        reverse_divergence: etdiv::ExtendedValue,
        h_total: etdiv::ExtendedValue,
        atoms: &'a [Row],
    }
    let mut text = format!("D_F = {d}\nD_R = {dr}\nindex,r,t,H\n");
    for row in &rows {
        text += &format!("{},{},{},{}\n", row.index, row.r, row.t, row.h);
    }
    text += &format!("H total = {total}\n");
    let config = [("entropy", f.to_string()), ("mu1", mu1.display().to_string()), ("mu2", mu2.display().to_string())];
    let body = Body { entropy: EntropyJson::from_descriptor(&f), divergence: d, reverse_divergence: dr, h_total: total, atoms: &rows };
    Sink::new(output)?.emit("divergence", &config, body, &text)?;
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn cmd_iterate(
    spec: &str,
    a: f64,
    symmetrize: bool,
    nodes: usize,
    s_max: f64,
    max_iters: usize,
    tol: f64,
    output: &Output,
) -> CmdResult {
    let f = entropy(spec)?;
    let sampled = if symmetrize {
        SampledFunction::from_fn(|s| h_value(&f, 1.0, s).to_f64(), s_max, nodes)?
    } else {
        SampledFunction::from_fn(|s| f.eval_f64(s), s_max, nodes)?
    };
    let opts = IterateOptions { max_iters, tol, keep_trace: output.format == Format::Text };
    let (_, rep) = dynamics::iterate_t(&sampled, a, opts)?;
    let config = [
        ("entropy", f.to_string()),
        ("a", a.to_string()),
        ("symmetrize", symmetrize.to_string()),
        ("nodes", nodes.to_string()),
        ("s_max", s_max.to_string()),
        ("max_iters", max_iters.to_string()),
        ("tol", format!("{tol:e}")),
    ];
    let mut sink = Sink::new(output)?;
    match output.format {
        Format::Json => sink.emit("iterate", &config, &rep, "")?,
        Format::Text => {
            let mut extra = config.to_vec();
            extra.push(("iterations", rep.iterations.to_string()));
            extra.push(("converged", rep.converged.to_string()));
            extra.push(("direction", format!("{:?}", rep.direction).to_lowercase()));
            extra.push(("fitted_c", rep.fitted_c.to_string()));
            write_header(&mut sink.out, "iterate", &extra)?;
            dynamics::write_trace_csv(&sampled, &rep, &mut sink.out)?;
        }
    }
    Ok(true)
}

fn cmd_metric_audit(spec: &str, a: f64, audit: &AuditArgs, max_power: bool, output: &Output) -> CmdResult {
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::Usage(format!("--a must lie in (0, 1], got {a}")));
    }
    let f = entropy(spec)?;
    let mp = etdiv::marginal_perspective::MarginalPerspective::new(f.clone());
    let h = |r: f64, t: f64| mp.eval_f64(r, t);
    let opts = TriangleOptions { grid: audit.grid, random_pairs: audit.pairs, seed: audit.seed, tol: audit.tol };
    let tri = metric_check::check_costless_triangle(h, a, &opts);
    let cert = metric_check::monotonicity_certificate(h, a, 200);
    let best = max_power.then(|| metric_check::max_metric_power(h, 0.05, 1.0, &opts));
    #[derive(Serialize)]
    struct Body<'a> {
        verdict: &'static str,
        triangle: &'a metric_check::TriangleReport,
        certificate_decreasing: bool,
        certificate_max_increase: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        max_metric_power: Option<Option<f64>>,
    }
    let mut text = format!(
        "{} triangle: worst violation {:.3e} over {} pairs ({} skipped)\n",
        verdict(tri.passed),
        tri.worst_violation,
        tri.tested,
        tri.skipped
    );
    if let Some(w) = &tri.witness {
        text += &format!("witness: {}\n", serde_json::to_string(w)?);
    }
    if tri.necessary_condition_failed {
        text += "H(0, 1) = inf: no power of H is a metric\n";
    }
    text += &format!(
        "certificate: {} (max increase {:.3e})\n",
        if cert.decreasing { "decreasing" } else { "not decreasing" },
        cert.max_increase
    );
    if let Some(b) = best {
        text += &match b {
            Some(x) => format!("max metric power: {x:.4}\n"),
            None => "max metric power: none in [0.05, 1]\n".into(),
        };
    }
    let config = [
        ("entropy", f.to_string()),
        ("a", a.to_string()),
        ("grid", audit.grid.to_string()),
        ("pairs", audit.pairs.to_string()),
        ("seed", format!("{:#x}", audit.seed)),
        ("tol", format!("{:e}", audit.tol)),
        ("certificate_samples", "200".into()),
    ];
    let body = Body {
        verdict: verdict(tri.passed),
        triangle: &tri,
        certificate_decreasing: cert.decreasing,
        certificate_max_increase: cert.max_increase,
        max_metric_power: best,
    };
    Sink::new(output)?.emit("metric-audit", &config, body, &text)?;
    Ok(tri.passed)
}

fn load_space(spec: &str) -> Result<FiniteMetricSpace, Error> {
    if spec == "single" {
        return Ok(FiniteMetricSpace::single_point());
    }
    if let Some(n) = spec.strip_prefix("path:") {
        let n = n.parse().map_err(|e| Error::Parse(format!("path size {n:?}: {e}")))?;
        return FiniteMetricSpace::path(n);
    }
    if let Some(file) = spec.strip_prefix("points:") {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).trim(csv::Trim::All).from_path(file)?;
        let mut pts = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let row: Result<Vec<f64>, Error> =
                rec.iter().map(|x| x.parse().map_err(|e| Error::Parse(format!("coordinate {x:?}: {e}")))).collect();
            pts.push(row?);
        }
        return FiniteMetricSpace::from_points(&pts);
    }
    FiniteMetricSpace::from_csv(spec)
}

fn cmd_cone(cmd: &ConeCommand) -> CmdResult {
    match cmd {
        ConeCommand::Eval { p, entropy: spec, d, r, t, output } => {
            let (label, value, dual) = match (p, spec) {
                (Some(p), None) => (format!("powerlike:{p}"), cone_cost::h_p_cone(*p, *d, *r, *t), None),
                (None, Some(s)) => {
                    let f = entropy(s)?;
                    let c = d * d;
                    (f.to_string(), cone_cost::h_cost_primal(&f, c, *r, *t), Some(cone_cost::h_cost_dual(&f, c, *r, *t)))
                }
                _ => return Err(Error::Usage("give exactly one of --p or --entropy".into())),
            };
            #[derive(Serialize)]
            struct Body {
                value: etdiv::ExtendedValue,
                #[serde(skip_serializing_if = "Option::is_none")]
                dual: Option<etdiv::ExtendedValue>,
            }
            let mut text = format!("H = {value}\n");
            if let Some(v) = dual {
                text += &format!("dual = {v}\n");
            }
            let config = [("entropy", label), ("d", d.to_string()), ("cost", (d * d).to_string()), ("r", r.to_string()), ("t", t.to_string())];
            Sink::new(output)?.emit("cone-eval", &config, Body { value, dual }, &text)?;
            Ok(true)
        }
        ConeCommand::Triangle { p, space, samples, seed, no_stress, output } => {
            let x = load_space(space)?;
            let opts = ConeTriangleOptions { samples: *samples, seed: *seed, stress: !no_stress, ..Default::default() };
            let rep = cone_cost::check_cone_triangle(*p, &x, &opts)?;
            let mut text = format!(
                "{} cone triangle: worst violation {:.3e} over {} triples\n",
                verdict(rep.passed),
                rep.worst_violation,
                rep.tested
            );
            if let Some(w) = &rep.witness {
                text += &format!("witness: {}\n", serde_json::to_string(w)?);
            }
            let config = [
                ("p", p.to_string()),
                ("space", format!("{space} ({} points)", x.len())),
                ("samples", samples.to_string()),
                ("seed", format!("{seed:#x}")),
                ("stress", (!no_stress).to_string()),
                ("tol", format!("{:e}", opts.tol)),
            ];
            Sink::new(output)?.emit("cone-triangle", &config, &rep, &text)?;
            Ok(rep.passed)
        }
        ConeCommand::Counterexample { p, output } => {
            let ce = cone_cost::counterexample_p_below_one(*p)?;
            let text = format!(
                "r = {}, s = {}, t = {}\nd12 = {}, d23 = {}, d13 = {}\nsqrt H(1,3) = {:.12}\nsqrt H(1,2) + sqrt H(2,3) = {:.12}\nmargin = {:.6e}\n",
                ce.r, ce.s, ce.t, ce.d12, ce.d23, ce.d13, ce.lhs, ce.rhs, ce.margin
            );
            Sink::new(output)?.emit("cone-counterexample", &[("p", p.to_string())], &ce, &text)?;
            Ok(true)
        }
        ConeCommand::Final { p, grid, output } => {
            let n = (*grid).max(2);
            let xs: Vec<f64> = (0..n).map(|i| (1e-3f64.ln() + (10f64.ln() - 1e-3f64.ln()) * i as f64 / (n - 1) as f64).exp()).collect();
            let us: Vec<f64> = xs.iter().map(|x| (-x).exp()).collect();
            let vs: Vec<f64> = xs.iter().map(|x| x.exp()).collect();
            let rep = cone_cost::final_inequality_check(*p, &us, &vs)?;
            let text = format!(
                "{} sup LHS = {:.6} (at u = {:.6}), inf RHS = {:.6}, expected sup 4/(p-1) = {:.6}\n",
                verdict(rep.holds),
                rep.sup_lhs,
                rep.argsup_u,
                rep.inf_rhs,
                rep.claimed_sup
            );
            let config = [("p", p.to_string()), ("grid", format!("{n}x{n}, u = exp(-x), v = exp(x), x log-spaced in [1e-3, 10]"))];
            Sink::new(output)?.emit("cone-final", &config, &rep, &text)?;
            Ok(rep.holds)
        }
    }
}

fn cmd_et_solve(problem: &Path, brute_force: Option<usize>, tol: f64, max_iters: usize, output: &Output) -> CmdResult {
    let pb = files::read_problem(problem)?;
    let sol = et::solve(&pb, &SolveOptions { tol, max_iters })?;
    let bf = brute_force.map(|g| et::brute_force_et(&pb, g)).transpose()?;
    let mut out = open_out(output.out.as_deref())?;
    match output.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Body<'a> {
                #[serde(flatten)]
                solution: SolutionFile,
                method: et::SolveMethod,
                residual: f64,
                #[serde(skip_serializing_if = "Option::is_none")]
                brute_force: Option<&'a et::BruteForceResult>,
            }
            let body = Body {
                solution: SolutionFile::from_solution(&sol),
                method: sol.report.method,
                residual: sol.report.residual,
                brute_force: bf.as_ref(),
            };
            serde_json::to_writer_pretty(&mut out, &body)?;
            writeln!(out)?;
        }
        Format::Text => {
            let config = [
                ("problem", problem.display().to_string()),
                ("entropy", pb.entropy().to_string()),
                ("tol", format!("{tol:e}")),
                ("max_iters", max_iters.to_string()),
                ("coercivity_factor", et::COERCIVITY.to_string()),
            ];
            write_header(&mut out, "et-solve", &config)?;
            writeln!(out, "value = {}", sol.value)?;
            writeln!(out, "converged = {} after {} iterations ({})", sol.report.converged, sol.report.iterations, sol.report.method)?;
            writeln!(out, "plan:")?;
            for row in sol.plan.entries() {
                let cells: Vec<String> = row.iter().map(|g| format!("{g:.9}")).collect();
                writeln!(out, "  {}", cells.join(" "))?;
            }
            if let Some(b) = &bf {
                writeln!(out, "brute force: E = {}, H = {}", b.min_energy, b.min_h.map_or("n/a".into(), |h| h.to_string()))?;
            }
        }
    }
    out.flush()?;
    Ok(true)
}

fn cmd_plot_data(family: &str, params: &str, s_min: f64, s_max: f64, points: usize, out: Option<&Path>) -> CmdResult {
    if !(s_min >= 0.0 && s_max > s_min) || points < 2 {
        return Err(Error::Usage("need 0 <= s_min < s_max and at least 2 points".into()));
    }
    let mut curves = Vec::new();
    for curve in params.split(',').map(str::trim).filter(|c| !c.is_empty()) {
        let values: Vec<f64> = curve.split(':').map(|x| x.trim().parse()).collect::<Result<_, _>>().map_err(|e| Error::Parse(format!("params {curve:?}: {e}")))?;
        curves.push((curve.to_string(), EntropyDescriptor::new(Family::from_parts(family, &values)?)?));
    }
    let mut w = csv::Writer::from_writer(open_out(out)?);
    w.write_record(["family", "param", "s", "F(s)"])?;
    for (label, f) in &curves {
        for i in 0..points {
            let s = s_min + (s_max - s_min) * i as f64 / (points - 1) as f64;
            w.write_record([f.family().name().to_string(), label.clone(), s.to_string(), f.evaluate(s).to_string()])?;
        }
    }
    w.flush()?;
    Ok(true)
}

fn run(cli: Cli) -> CmdResult {
    match &cli.command {
        Command::Divergence { entropy, mu1, mu2, output } => cmd_divergence(entropy, mu1, mu2, output),
        Command::Iterate { entropy, a, symmetrize, nodes, s_max, max_iters, tol, output } => {
            cmd_iterate(entropy, *a, *symmetrize, *nodes, *s_max, *max_iters, *tol, output)
        }
        Command::MetricAudit { entropy, a, audit, max_power, output } => cmd_metric_audit(entropy, *a, audit, *max_power, output),
        Command::Cone { command } => cmd_cone(command),
        Command::EtSolve { problem, brute_force, tol, max_iters, output } => cmd_et_solve(problem, *brute_force, *tol, *max_iters, output),
        Command::PlotData { family, params, s_min, s_max, points, out } => cmd_plot_data(family, params, *s_min, *s_max, *points, out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("etdiv: {e}");
            ExitCode::from(2)
        }
    }
}
