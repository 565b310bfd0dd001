use std::fmt::Write as _;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::output::{emit, loglog_slope, opt, Meta};
use super::{
    AdaptArgs, CheckArgs, Cli, CliError, Command, EigsArgs, EstimateArgs, Format, MeshArgs, ProblemArgs,
    RatesArgs,
};
use crate::check::certify;
use crate::element::check_degree;
use crate::estimator::{dorfler_mark, eigen_report};
use crate::mesh::{make_domain_with, read_mesh, refine_bisect, write_mesh, Domain, Mesh};
use crate::solver::{eigs_on_mesh, rate_rows, write_rate_csv, EigenOptions};

type CmdResult = Result<(), CliError>;

pub fn dispatch(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Eigs(a) => eigs(a),
        Command::Rates(a) => rates(a),
        Command::Estimate(a) => estimate(a),
        Command::Adapt(a) => adapt(a),
        Command::CheckElement(a) => check_element(a),
        Command::Mesh(a) => mesh(a),
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn validate_problem(p: &ProblemArgs) -> CmdResult {
    check_degree(p.k)?;
    if p.nev == 0 {
        return Err(usage("--nev must be at least 1"));
    }
    if [p.tol, p.residual_tol].iter().any(|t| t.is_nan() || *t <= 0.0) {
        return Err(usage("tolerances must be positive"));
    }
    if p.max_iterations == 0 {
        return Err(usage("--max-iterations must be at least 1"));
    }
    Ok(())
}

fn validate_levels(levels: &[usize], halving: bool) -> CmdResult {
    if levels.is_empty() {
        return Err(usage("--levels must list at least one subdivision"));
    }
    if levels.contains(&0) {
        return Err(usage("subdivisions must be positive"));
    }
    if halving {
        for w in levels.windows(2) {
            if w[1] != 2 * w[0] {
                return Err(usage(format!(
                    "levels must halve h successively, got n={} then n={}",
                    w[0], w[1]
                )));
            }
        }
    }
    Ok(())
}

fn options(p: &ProblemArgs, nev: usize) -> EigenOptions {
    EigenOptions {
        nev,
        tol: p.tol,
        residual_tol: p.residual_tol,
        shift: p.shift,
        max_iterations: p.max_iterations,
        seed: p.seed,
        kernel_dim: 0,
    }
}

fn structured(p: &ProblemArgs, n: usize) -> Result<Mesh, CliError> {
    Ok(make_domain_with(p.domain.into(), n, p.diagonal.into())?)
}

fn load_mesh(path: &Path, domain: Domain) -> Result<Mesh, CliError> {
    let f = std::fs::File::open(path)
        .map_err(|e| usage(format!("cannot open mesh file {}: {e}", path.display())))?;
    Ok(read_mesh(BufReader::new(f), domain)?)
}

fn fmt_h(n: Option<usize>, h: f64) -> String {
    n.map_or_else(|| format!("{h:.6e}"), |n| format!("1/{n}"))
}

#[derive(Debug, Serialize)]
struct EigsRow {
    n: Option<usize>,
    h: f64,
    triangles: usize,
    ndof: usize,
    lambdas: Vec<f64>,
    iterations: usize,
    max_residual: f64,
    max_rounding: f64,
    discarded: Vec<f64>,
}

fn eigs(a: &EigsArgs) -> CmdResult {
    let p = &a.problem;
    validate_problem(p)?;
    let meshes: Vec<(Option<usize>, Mesh)> = match &a.mesh {
        Some(path) => vec![(None, load_mesh(path, p.domain.into())?)],
        None => {
            validate_levels(&a.levels, false)?;
            a.levels
                .iter()
                .map(|&n| Ok((Some(n), structured(p, n)?)))
                .collect::<Result<_, CliError>>()?
        }
    };
    let opts = options(p, p.nev);
    let mut rows = Vec::new();
    for (n, mesh) in meshes {
        let h = n.map_or_else(|| mesh.h_max(), |n| 1.0 / n as f64);
        let triangles = mesh.num_triangles();
        let (disc, res) = eigs_on_mesh(mesh, p.k, &opts)?;
        rows.push(EigsRow {
            n,
            h,
            triangles,
            ndof: disc.num_free(),
            lambdas: res.lambdas(),
            iterations: res.iterations,
            max_residual: res.pairs.iter().map(|q| q.residual).fold(0.0, f64::max),
            max_rounding: res.pairs.iter().map(|q| q.rounding).fold(0.0, f64::max),
            discarded: res.discarded,
        });
    }
    let meta = Meta::new("eigs", a);
    let text = match p.format {
        Format::Json => meta.json_document("rows", &rows)?,
        Format::Csv => {
            let mut s = meta.comment_header();
            let mut header = vec!["h".to_string()];
            header.extend((1..=p.nev).map(|i| format!("lambda_{i}")));
            header.extend(["ndof", "iterations", "max_residual", "max_rounding"].map(String::from));
            s.push_str(&header.join(","));
            s.push('\n');
            for r in &rows {
                let mut cells = vec![fmt_h(r.n, r.h)];
                cells.extend(r.lambdas.iter().map(|l| format!("{l:.9}")));
                cells.push(r.ndof.to_string());
                cells.push(r.iterations.to_string());
                cells.push(format!("{:.3e}", r.max_residual));
                cells.push(format!("{:.3e}", r.max_rounding));
                s.push_str(&cells.join(","));
                s.push('\n');
            }
            s
        }
    };
    emit(p.output.as_deref(), &text)
}

fn rates(a: &RatesArgs) -> CmdResult {
    let p = &a.problem;
    validate_problem(p)?;
    if a.levels.len() < 3 {
        return Err(usage(format!(
            "a rate table needs at least 3 levels, got {}",
            a.levels.len()
        )));
    }
    validate_levels(&a.levels, true)?;
    let opts = options(p, p.nev);
    let lambdas = a
        .levels
        .iter()
        .map(|&n| Ok(eigs_on_mesh(structured(p, n)?, p.k, &opts)?.1.lambdas()))
        .collect::<Result<Vec<_>, CliError>>()?;
    let rows = rate_rows(&a.levels, &lambdas)?;
    let meta = Meta::new("rates", a);
    let text = match p.format {
        Format::Json => meta.json_document("rows", &rows)?,
        Format::Csv => {
            let mut buf = meta.comment_header().into_bytes();
            write_rate_csv(&rows, &mut buf)?;
            String::from_utf8(buf).expect("ascii output")
        }
    };
    emit(p.output.as_deref(), &text)
}

#[derive(Debug, Serialize)]
struct EstimateRow {
    n: usize,
    h: f64,
    ndof: usize,
    lambda: f64,
    eta0: f64,
    eta1: f64,
    eta2: f64,
    eta3: f64,
    estimator: f64,
    bound: f64,
    proxy: Option<f64>,
    entities: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Slopes {
    bound: Option<f64>,
    proxy: Option<f64>,
    tolerance: Option<f64>,
    passed: Option<bool>,
}

fn entity_path(prefix: &Path, n: usize) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(format!("-n{n}.csv"));
    PathBuf::from(s)
}

fn estimate(a: &EstimateArgs) -> CmdResult {
    let p = &a.problem;
    validate_problem(p)?;
    validate_levels(&a.levels, true)?;
    if a.eigen_index == 0 || a.eigen_index > p.nev {
        return Err(usage(format!("--eigen-index must lie in 1..={}", p.nev)));
    }
    if a.check_slope.is_some() && a.levels.len() < 3 {
        return Err(usage("--check-slope needs at least 3 levels"));
    }
    let meta = Meta::new("estimate", a);
    let opts = options(p, p.nev);
    let mut rows: Vec<EstimateRow> = Vec::new();
    for &n in &a.levels {
        let (disc, res) = eigs_on_mesh(structured(p, n)?, p.k, &opts)?;
        let pair = &res.pairs[a.eigen_index - 1];
        let report = eigen_report(&disc, &pair.vector, pair.lambda, a.aggregation.into())?;
        let entities = match &a.entities {
            Some(prefix) => {
                let path = entity_path(prefix, n);
                let mut buf = meta.comment_header().into_bytes();
                report.write_csv(&disc, &mut buf)?;
                emit(Some(&path), &String::from_utf8(buf).expect("ascii output"))?;
                Some(path)
            }
            None => None,
        };
        rows.push(EstimateRow {
            n,
            h: 1.0 / n as f64,
            ndof: disc.num_free(),
            lambda: pair.lambda,
            eta0: report.eta0,
            eta1: report.eta1,
            eta2: report.eta2,
            eta3: report.eta3,
            estimator: report.estimator.unwrap_or(f64::NAN),
            bound: report.bound.unwrap_or(f64::NAN),
            proxy: None,
            entities,
        });
    }
    for i in 0..rows.len().saturating_sub(1) {
        rows[i].proxy = Some((rows[i].lambda - rows[i + 1].lambda).abs() / rows[i].lambda);
    }
    let with_proxy: Vec<&EstimateRow> = rows.iter().filter(|r| r.proxy.is_some()).collect();
    let hs: Vec<f64> = with_proxy.iter().map(|r| r.h).collect();
    let bound = loglog_slope(&hs, &with_proxy.iter().map(|r| r.bound).collect::<Vec<_>>());
    let proxy = loglog_slope(&hs, &with_proxy.iter().map(|r| r.proxy.unwrap()).collect::<Vec<_>>());
    let passed = a.check_slope.map(|tol| match (bound, proxy) {
        (Some(b), Some(q)) => (b - q).abs() <= tol,
        _ => false,
    });
    let slopes = Slopes {
        bound,
        proxy,
        tolerance: a.check_slope,
        passed,
    };

    let text = match p.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Body<'a> {
                rows: &'a [EstimateRow],
                slopes: &'a Slopes,
            }
            meta.json_document(
                "result",
                &Body {
                    rows: &rows,
                    slopes: &slopes,
                },
            )?
        }
        Format::Csv => {
            let mut s = meta.comment_header();
            s.push_str("h,ndof,lambda,eta0,eta1,eta2,eta3,estimator,bound,proxy\n");
            for r in &rows {
                let _ = writeln!(
                    s,
                    "1/{},{},{:.9},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{}",
                    r.n,
                    r.ndof,
                    r.lambda,
                    r.eta0,
                    r.eta1,
                    r.eta2,
                    r.eta3,
                    r.estimator,
                    r.bound,
                    opt(r.proxy, |v| format!("{v:.8e}"))
                );
            }
            let _ = writeln!(
                s,
                "# slopes: bound={} proxy={}",
                opt(bound, |v| format!("{v:.4}")),
                opt(proxy, |v| format!("{v:.4}"))
            );
            s
        }
    };
    emit(p.output.as_deref(), &text)?;
    if passed == Some(false) {
        return Err(CliError::Numerical(format!(
            "log-log slopes differ by more than {}: bound {} proxy {}",
            a.check_slope.unwrap_or(0.0),
            opt(bound, |v| format!("{v:.4}")),
            opt(proxy, |v| format!("{v:.4}"))
        )));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct AdaptRow {
    iteration: usize,
    triangles: usize,
    ndof: usize,
    lambda: f64,
    estimator: f64,
    marked: usize,
}

fn adapt(a: &AdaptArgs) -> CmdResult {
    let p = &a.problem;
    validate_problem(p)?;
    validate_levels(&[a.n], false)?;
    if !(a.theta > 0.0 && a.theta < 1.0) {
        return Err(usage(format!("--theta {} must lie in (0, 1)", a.theta)));
    }
    if a.eigen_index == 0 || a.eigen_index > p.nev {
        return Err(usage(format!("--eigen-index must lie in 1..={}", p.nev)));
    }
    let opts = options(p, p.nev);
    let mut mesh = structured(p, a.n)?;
    let mut rows = Vec::new();
    for iteration in 0..=a.iterations {
        let triangles = mesh.num_triangles();
        let (disc, res) = eigs_on_mesh(mesh.clone(), p.k, &opts)?;
        let pair = &res.pairs[a.eigen_index - 1];
        let report = eigen_report(&disc, &pair.vector, pair.lambda, Default::default())?;
        let mut marked = 0;
        if iteration < a.iterations {
            let set = dorfler_mark(&report.indicators(&disc), a.theta)?;
            marked = set.len();
            mesh = refine_bisect(&mesh, &set);
        }
        rows.push(AdaptRow {
            iteration,
            triangles,
            ndof: disc.num_free(),
            lambda: pair.lambda,
            estimator: report.estimator.unwrap_or(f64::NAN),
            marked,
        });
    }
    if let Some(path) = &a.mesh_out {
        let meta = Meta::new("adapt", a);
        let mut buf = meta.comment_header().into_bytes();
        write_mesh(&mesh, &mut buf)?;
        emit(Some(path), &String::from_utf8(buf).expect("ascii output"))?;
    }
    let meta = Meta::new("adapt", a);
    let text = match p.format {
        Format::Json => meta.json_document("rows", &rows)?,
        Format::Csv => {
            let mut s = meta.comment_header();
            s.push_str("iteration,triangles,ndof,lambda,estimator,marked\n");
            for r in &rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{:.9},{:.8e},{}",
                    r.iteration, r.triangles, r.ndof, r.lambda, r.estimator, r.marked
                );
            }
            s
        }
    };
    emit(p.output.as_deref(), &text)
}

fn check_element(a: &CheckArgs) -> CmdResult {
    check_degree(a.k)?;
    let outcomes = certify(a.k, a.seed)?;
    let mut s = Meta::new("check-element", a).comment_header();
    for o in &outcomes {
        let _ = writeln!(s, "{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
    }
    emit(None, &s)?;
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed).map(|o| o.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("failed suites: {}", failed.join(", "))))
    }
}

fn mesh(a: &MeshArgs) -> CmdResult {
    let meta = Meta::new("mesh", a);
    let text = match &a.input {
        Some(path) => {
            let m = load_mesh(path, a.domain.into())?;
            let mut s = meta.comment_header();
            s.push_str("quantity,value\n");
            let _ = writeln!(s, "vertices,{}", m.num_vertices());
            let _ = writeln!(s, "edges,{}", m.num_edges());
            let _ = writeln!(s, "interior_edges,{}", m.num_interior_edges());
            let _ = writeln!(s, "triangles,{}", m.num_triangles());
            let _ = writeln!(s, "holes,{}", m.holes());
            let _ = writeln!(s, "hanging_nodes,{}", m.hanging_nodes().len());
            let _ = writeln!(s, "h_max,{:.6e}", m.h_max());
            let _ = writeln!(s, "area,{:.12}", m.total_area());
            s
        }
        None => {
            if a.n == 0 {
                return Err(usage("--n must be positive"));
            }
            let m = make_domain_with(a.domain.into(), a.n, a.diagonal.into())?;
            let mut buf = meta.comment_header().into_bytes();
            write_mesh(&m, &mut buf)?;
            String::from_utf8(buf).expect("ascii output")
        }
    };
    emit(a.output.as_deref(), &text)
}
