mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use optkit::diophantine_ip::{DioError, IpRun};
use optkit::geometric_lp::{solve_geometric, strictly_feasible, GeoAlgorithm, GeoConfig, InteriorPoint, StopReason};
use optkit::groebner_nlp::{solve_nlp, MultiPoly, NlpConstraint, NlpProblem};
use optkit::model_io::{Model, ModelFile};
use optkit::reference_oracle::{brute_force_ip, lp_box, simplex_solve, OracleError};
use optkit::{search_first_method, search_second_method, DioConfig, LpOutcome, LpProblem, Rational, Tag};

use report::Report;

#[derive(Parser)]
#[command(name = "optkit", version, about = "Exact parametric-objective LP, IP and QP solvers")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve a model file.
    Solve(SolveArgs),
    /// Print a model file in canonical form.
    Fmt { file: PathBuf },
}

#[derive(clap::Args)]
struct SolveArgs {
    #[arg(long, value_enum, default_value = "parametric", conflicts_with = "all_methods")]
    method: Method,
    /// Run every method that applies to the model, one report each.
    #[arg(long)]
    all_methods: bool,
    /// Geometric start point, e.g. `1,1` or `1/2,3`.
    #[arg(long, value_delimiter = ',')]
    start: Option<Vec<Rational>>,
    /// Geometric boundary margin; 0 steps exactly onto the boundary.
    #[arg(long)]
    eps: Option<Rational>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Node budget for the Diophantine searches.
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    trace: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    file: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Parametric,
    Simplex,
    GeometricCentroid,
    GeometricChord,
    GeometricPerp,
    GeometricPerpEdges,
    Dio1,
    Dio2,
    IpBrute,
    Groebner,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

const EXIT_USAGE: u8 = 1;
const EXIT_INFEASIBLE: i32 = 2;
const EXIT_UNBOUNDED: i32 = 3;
const EXIT_FALLBACK: i32 = 4;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match cli.cmd {
        Cmd::Fmt { file } => match ModelFile::load(&file) {
            Ok(m) => {
                print!("{}", m.render());
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e.to_string()),
        },
        Cmd::Solve(args) => {
            let model = match ModelFile::load(&args.file) {
                Ok(m) => m,
                Err(e) => return fail(&e.to_string()),
            };
            if args.all_methods {
                return solve_all(&args, &model);
            }
            match solve(&args, &model, args.method) {
                Ok(rep) => {
                    match args.format {
                        Format::Text => print!("{}", rep.text()),
                        Format::Json => print!("{}", rep.json()),
                    }
                    ExitCode::from(rep.exit as u8)
                }
                Err(msg) => fail(&msg),
            }
        }
    }
}

fn fail(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Parametric => "parametric",
        Method::Simplex => "simplex",
        Method::GeometricCentroid => "geometric-centroid",
        Method::GeometricChord => "geometric-chord",
        Method::GeometricPerp => "geometric-perp",
        Method::GeometricPerpEdges => "geometric-perp-edges",
        Method::Dio1 => "dio1",
        Method::Dio2 => "dio2",
        Method::IpBrute => "ip-brute",
        Method::Groebner => "groebner",
    }
}

fn applicable(model: &ModelFile) -> Vec<Method> {
    match &model.model {
        Model::Nlp(_) => vec![Method::Groebner],
        Model::Lp(p) => {
            let mut out = vec![
                Method::Parametric,
                Method::Simplex,
                Method::GeometricCentroid,
                Method::GeometricChord,
                Method::GeometricPerp,
                Method::GeometricPerpEdges,
            ];
            if p.integer.iter().any(|&b| b) {
                out.extend([Method::Dio1, Method::Dio2, Method::IpBrute]);
            }
            out
        }
    }
}

fn solve_all(args: &SolveArgs, model: &ModelFile) -> ExitCode {
    let reports: Vec<Report> = applicable(model)
        .into_iter()
        .map(|m| {
            solve(args, model, m).unwrap_or_else(|msg| {
                let mut rep = Report::new(method_name(m));
                rep.status = format!("error: {msg}");
                rep.exit = i32::from(EXIT_USAGE);
                rep
            })
        })
        .collect();
    match args.format {
        Format::Text => print!("{}", reports.iter().map(Report::text).collect::<Vec<_>>().join("\n")),
        Format::Json => {
            let items: Vec<serde_json::Value> = reports.iter().map(Report::value).collect();
            println!("{}", serde_json::to_string_pretty(&items).expect("plain JSON"));
        }
    }
    ExitCode::from(reports.iter().map(|r| r.exit).max().unwrap_or(0) as u8)
}

fn solve(args: &SolveArgs, model: &ModelFile, method: Method) -> Result<Report, String> {
    let mut rep = Report::new(method_name(method));
    if let Method::Groebner = method {
        let p = match &model.model {
            Model::Nlp(p) => p.clone(),
            Model::Lp(p) => as_nlp(p),
        };
        groebner(&mut rep, &p, args.trace)?;
        return Ok(rep);
    }
    let Model::Lp(p) = &model.model else {
        return Err(format!("method {} needs a linear model", rep.method));
    };
    match method {
        Method::Parametric => {
            let out = optkit::solve_parametric(p);
            if args.trace {
                rep.trace = out.trace.iter().map(ToString::to_string).collect();
            }
            relaxed_outcome(&mut rep, p, &out);
        }
        Method::Simplex => relaxed_outcome(&mut rep, p, &simplex_solve(p)),
        Method::GeometricCentroid => geometric(&mut rep, p, GeoAlgorithm::Centroid, args)?,
        Method::GeometricChord => geometric(&mut rep, p, GeoAlgorithm::Chord, args)?,
        Method::GeometricPerp => geometric(&mut rep, p, GeoAlgorithm::PerpPlanes, args)?,
        Method::GeometricPerpEdges => geometric(&mut rep, p, GeoAlgorithm::PerpEdges, args)?,
        Method::Dio1 | Method::Dio2 => {
            let cfg = DioConfig { budget: args.budget.unwrap_or(DioConfig::default().budget) };
            let run = match method {
                Method::Dio1 => search_first_method(p, &cfg),
                _ => search_second_method(p, &cfg),
            };
            dio(&mut rep, p, run, args.trace)?;
        }
        Method::IpBrute => match lp_box(p) {
            Ok(bx) => match brute_force_ip(p, &bx) {
                Ok(out) => lp_outcome(&mut rep, p, &out),
                Err(e) => budget_exceeded(&mut rep, &e.to_string()),
            },
            Err(OracleError::BoxUnbounded(_)) if simplex_solve(p).tag == Tag::Infeasible => status(&mut rep, Tag::Infeasible),
            Err(e) => budget_exceeded(&mut rep, &e.to_string()),
        },
        Method::Groebner => unreachable!("handled above"),
    }
    Ok(rep)
}

fn status(rep: &mut Report, tag: Tag) {
    rep.status = tag.to_string();
    rep.exit = match tag {
        Tag::Optimal => 0,
        Tag::Infeasible | Tag::Inconsistent => EXIT_INFEASIBLE,
        Tag::Unbounded => EXIT_UNBOUNDED,
        Tag::Fallback => EXIT_FALLBACK,
    };
}

fn budget_exceeded(rep: &mut Report, why: &str) {
    rep.status = "budget-exceeded".into();
    rep.field("reason", why);
    rep.exit = EXIT_FALLBACK;
}

fn assignment(rep: &mut Report, p: &LpProblem, x: &[Rational], slacks: &[Rational]) {
    rep.vars.extend(p.names.iter().cloned().zip(x.iter().cloned()));
    rep.vars.extend(slacks.iter().enumerate().map(|(i, v)| (format!("s{}", i + 1), v.clone())));
}

fn lp_outcome(rep: &mut Report, p: &LpProblem, out: &LpOutcome) {
    status(rep, out.tag);
    if out.tag == Tag::Fallback {
        if let Some(t) = out.oracle_tag {
            rep.field("oracle-status", t.to_string());
        }
        if let Some(note) = out.trace.last() {
            rep.field("reason", note.to_string());
        }
    }
    if out.value.is_some() && !out.x.is_empty() {
        rep.objective = out.value.clone();
        assignment(rep, p, &out.x, &out.slacks);
        let integral = out.x.iter().zip(&p.integer).all(|(v, &b)| !b || v.is_integer());
        rep.verified = Some(out.verify(p) && integral);
    }
}

/// LP methods on a model with `int` variables solve its relaxation.
fn relaxed_outcome(rep: &mut Report, p: &LpProblem, out: &LpOutcome) {
    if !p.integer.iter().any(|&b| b) {
        return lp_outcome(rep, p, out);
    }
    let mut q = p.clone();
    q.integer = vec![false; q.n()];
    lp_outcome(rep, &q, out);
    rep.field("integrality", "relaxed");
}

fn geometric(rep: &mut Report, p: &LpProblem, algo: GeoAlgorithm, args: &SolveArgs) -> Result<(), String> {
    let mut cfg = GeoConfig::default();
    if let Some(e) = &args.eps {
        if e.is_negative() || e >= &Rational::one() {
            return Err("--eps must lie in [0, 1)".into());
        }
        cfg.epsilon = e.clone();
    }
    if let Some(k) = args.max_iters {
        cfg.max_iters = k;
    }
    let oracle = simplex_solve(p);
    let start = match &args.start {
        Some(s) => InteriorPoint::new(p, s.clone()).map_err(|e| format!("start point: {e}"))?,
        None => match InteriorPoint::default_for(p) {
            Ok(s) => s,
            Err(e) => {
                if oracle.tag == Tag::Infeasible {
                    status(rep, Tag::Infeasible);
                } else {
                    budget_exceeded(rep, &e.to_string());
                }
                return Ok(());
            }
        },
    };
    let run = match solve_geometric(p, algo, &start.coords, &cfg) {
        Ok(r) => r,
        Err(e) => {
            budget_exceeded(rep, &e.to_string());
            return Ok(());
        }
    };
    if args.trace {
        rep.trace = run
            .trajectory
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let pt: Vec<String> = s.point.iter().map(ToString::to_string).collect();
                format!("{i}: objective {} ({}) at ({})", s.objective, s.objective.to_decimal(6), pt.join(", "))
            })
            .collect();
    }
    let best = run.best();
    if run.stop == StopReason::Unbounded || oracle.tag == Tag::Unbounded {
        status(rep, Tag::Unbounded);
        return Ok(());
    }
    let exact = oracle.value.as_ref() == Some(&best.objective);
    rep.status = if exact { "optimal".into() } else { "approximate".into() };
    rep.objective = Some(best.objective.clone());
    rep.vars.extend(p.names.iter().cloned().zip(best.point.iter().cloned()));
    rep.field("objective-decimal", best.objective.to_decimal(9));
    rep.field("iterations", run.trajectory.len() - 1);
    rep.field("stop", format!("{:?}", run.stop).to_lowercase());
    if let Some(opt) = &oracle.value {
        let gap = (opt - &best.objective).abs() / opt.abs().max(Rational::one());
        rep.field("relative-gap", format!("{:e}", gap.to_f64()));
    }
    let inside = if cfg.epsilon.is_positive() { strictly_feasible(p, &best.point) } else { p.is_feasible(&best.point) };
    rep.verified = Some(inside && p.objective_value(&best.point) == best.objective);
    Ok(())
}

fn dio(rep: &mut Report, p: &LpProblem, run: Result<IpRun, DioError>, trace: bool) -> Result<(), String> {
    let run = match run {
        Ok(r) => r,
        Err(DioError::InfeasibleIP | DioError::NoIntegerSolution) => {
            status(rep, Tag::Infeasible);
            return Ok(());
        }
        Err(DioError::Unbounded) => {
            status(rep, Tag::Unbounded);
            return Ok(());
        }
        Err(e @ DioError::BudgetExceeded(_)) => {
            budget_exceeded(rep, &e.to_string());
            return Ok(());
        }
        Err(e @ DioError::NonIntegerData(_)) => return Err(e.to_string()),
    };
    lp_outcome(rep, p, &run.outcome);
    rep.verified = Some(run.outcome.verify(p) && run.outcome.x.iter().all(Rational::is_integer));
    rep.field("relaxation", run.relaxation.to_string());
    rep.field("cap", run.cap.to_string());
    let tried: Vec<serde_json::Value> = run.tried.iter().map(|v| v.to_string().into()).collect();
    rep.field("tried", tried);
    rep.field("nodes", run.nodes);
    if rep.method == "dio2" {
        if let Some(v) = &run.dual_value {
            rep.field("dual-value", v.to_string());
        }
        rep.field("certified", run.certified);
    }
    if trace {
        rep.trace = run.solution.to_string().lines().map(str::to_string).collect();
    }
    Ok(())
}

fn as_nlp(p: &LpProblem) -> NlpProblem {
    let n = p.n();
    let lin = |a: &[Rational]| {
        MultiPoly::from_terms(
            n,
            a.iter().enumerate().map(|(j, c)| {
                let mut e = vec![0; n];
                e[j] = 1;
                (e, c.clone())
            }),
        )
    };
    let rows = p
        .constraints
        .iter()
        .map(|c| NlpConstraint { name: c.name.clone(), ..NlpConstraint::new(lin(&c.coeffs), c.relation, c.rhs.clone()) })
        .collect();
    let mut q = NlpProblem::new(p.sense, lin(&p.objective), rows);
    q.names = p.names.clone();
    q
}

fn groebner(rep: &mut Report, p: &NlpProblem, trace: bool) -> Result<(), String> {
    let (sys, basis, sol) = match solve_nlp(p) {
        Ok(r) => r,
        Err(e) => {
            budget_exceeded(rep, &e.to_string());
            return Ok(());
        }
    };
    status(rep, Tag::Optimal);
    rep.objective = Some(sol.value.clone());
    rep.vars.extend(p.names.iter().cloned().zip(sol.x.iter().cloned()));
    rep.vars.extend(sol.slacks.iter().enumerate().map(|(i, v)| (format!("s{}", i + 1), v.clone())));
    rep.field("branch", format!("{:?}", sol.branch).to_lowercase());
    rep.verified = Some(p.is_feasible(&sol.x) && p.objective.eval(&sol.x) == sol.value);
    if trace {
        rep.trace = basis.iter().map(|g| g.render(&sys.names)).collect();
    }
    Ok(())
}
