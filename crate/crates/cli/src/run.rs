//! Command dispatch: build core objects from the config, execute, and emit
//! the report and CSV artifacts.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use multitime_core::rng::SplitMix64;
use multitime_core::transform::TRANSFORM_SYSTEM_TOL;
use multitime_core::*;
use std::result::Result;

use crate::config::{self, ConfigError, Ctx};
use crate::report::{fmt_csv, fmt_float, render_table, report_json, Json};

/// Round-trip tolerance checked by the `transform` command.
const ROUND_TRIP_TOL: f64 = 1e-10;

pub struct Options {
    pub config: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    pub quiet: bool,
}

pub enum RunError {
    Config(ConfigError),
    Numeric { code: &'static str, msg: String },
    Io(std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numeric { .. } | RunError::Io(_) => 3,
        }
    }

    pub fn to_stderr_json(&self) -> String {
        let (code, msg) = match self {
            RunError::Config(e) => ("config_error".to_string(), e.to_string()),
            RunError::Numeric { code, msg } => (code.to_string(), msg.clone()),
            RunError::Io(e) => ("io_error".to_string(), e.to_string()),
        };
        let mut err = Json::object();
        err.push("code", Json::Str(code));
        err.push("message", Json::Str(msg));
        let mut o = Json::object();
        o.push("error", err);
        o.render()
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

fn numeric(e: Error) -> RunError {
    RunError::Numeric {
        code: e.code(),
        msg: e.to_string(),
    }
}

fn config_error(msg: impl Into<String>) -> RunError {
    RunError::Config(ConfigError {
        path: String::new(),
        msg: msg.into(),
    })
}

/// Execute the configured command; `Ok(pass)` selects exit code 0 or 1.
pub fn run(opts: &Options) -> Result<bool, RunError> {
    let text = fs::read_to_string(&opts.config)
        .map_err(|e| config_error(format!("cannot read {}: {e}", opts.config.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| config_error(format!("invalid JSON: {e}")))?;
    let root = Ctx::root(&value);

    fs::create_dir_all(&opts.out)?;

    let command = root.field("command")?.ctx().str()?.to_string();
    match command.as_str() {
        "verify" => run_verify(opts, root),
        "simulate" => run_simulate(opts, root),
        "transform" => run_transform(opts, root),
        "profile" => run_profile(opts, root),
        "catalog-list" => run_catalog_list(opts),
        other => Err(config_error(format!("unknown command `{other}`"))),
    }
}

fn write_report(opts: &Options, json: &Json) -> Result<(), RunError> {
    let path = opts.out.join("report.json");
    fs::write(path, json.render())?;
    Ok(())
}

fn emit_text(opts: &Options, title: &str, rows: &[(String, String)]) {
    if !opts.quiet {
        print!("{}", render_table(title, rows));
    }
}

fn run_verify(opts: &Options, root: Ctx<'_>) -> Result<bool, RunError> {
    let pde_ctx = root.field("pde")?;
    let pde = config::parse_pde(pde_ctx.ctx())?;
    let sol_ctx = root.field("solution")?;
    // Catalog solutions carry a default grid, used when `grid` is omitted.
    let entry = config::parse_catalog_entry(sol_ctx.ctx())?;
    let field = match &entry {
        Some(e) => e.field.clone(),
        None => config::parse_solution(sol_ctx.ctx())?,
    };
    let grid = match (root.opt_field("grid"), entry) {
        (Some(g), _) => config::parse_grid(g.ctx())?,
        (None, Some(e)) => e.default_grid,
        (None, None) => {
            return Err(RunError::Config(ConfigError {
                path: "grid".into(),
                msg: "grid is required unless the solution is a catalog entry".into(),
            }))
        }
    };
    if grid.dim() != pde.m() + 1 {
        return Err(RunError::Config(ConfigError {
            path: "grid".into(),
            msg: format!(
                "grid needs {} axes (times then space), got {}",
                pde.m() + 1,
                grid.dim()
            ),
        }));
    }
    let tol = match root.opt_field("tolerance") {
        Some(t) => t.ctx().f64()?,
        None => verify::JET_RESIDUAL_TOL,
    };

    let report = residual_report(&pde, &field, &grid, tol).map_err(numeric)?;

    let mut json = Json::object();
    json.push("command", Json::Str("verify".into()));
    json.push("pass", Json::Bool(report.pass));
    json.push("report", report_json(&report));
    json.push("pde", Json::Raw(pde_ctx.ctx().echo()));
    json.push("solution", Json::Raw(sol_ctx.ctx().echo()));
    write_report(opts, &json)?;

    emit_text(
        opts,
        "verify",
        &[
            ("pass".into(), report.pass.to_string()),
            (
                "max_abs_residual".into(),
                fmt_float(report.max_abs_residual),
            ),
            ("rms_residual".into(), fmt_float(report.rms_residual)),
            (
                "points_evaluated".into(),
                report.points_evaluated.to_string(),
            ),
            ("points_masked".into(), report.points_masked.to_string()),
            ("tolerance".into(), fmt_float(report.tolerance)),
        ],
    );
    Ok(report.pass)
}

fn run_simulate(opts: &Options, root: Ctx<'_>) -> Result<bool, RunError> {
    let pde = config::parse_pde(root.field("pde")?.ctx())?;
    let field = config::parse_solution(root.field("solution")?.ctx())?;
    let omega = match root.opt_field("omega") {
        Some(o) => o
            .ctx()
            .array()?
            .iter()
            .map(|c| c.ctx().f64())
            .collect::<Result<Vec<_>, _>>()?,
        None => Vec::new(),
    };
    let x_range = pair(root.field("x_range")?.ctx())?;
    let s_range = pair(root.field("s_range")?.ctx())?;
    let dx = root.field("dx")?.ctx().f64()?;
    let ds = root.field("ds")?.ctx().f64()?;
    let scheme = match root.opt_field("scheme") {
        Some(s) => config::parse_scheme(s.ctx())?,
        None => Scheme::ExplicitFtcs,
    };
    let tol = root.field("tolerance")?.ctx().f64()?;

    let reduction = reduce_to_characteristic(&pde, &omega).map_err(numeric)?;
    let prob = Rd1dProblem::new(reduction, field, x_range, s_range).map_err(numeric)?;
    let result = march(&prob, dx, ds, scheme).map_err(numeric)?;
    let linf = result.linf_error(&prob).map_err(numeric)?;
    let speed = match root.opt_field("speed_level") {
        Some(level) => Some(measure_front_speed(&result, level.ctx().f64()?).map_err(numeric)?),
        None => None,
    };

    write_grid_csv(&opts.out.join("grid.csv"), &result, &prob)?;

    let pass = linf <= tol;
    let mut json = Json::object();
    json.push("command", Json::Str("simulate".into()));
    json.push("pass", Json::Bool(pass));
    json.push("scheme", Json::Str(result.scheme.as_str().into()));
    json.push("dx", Json::Float(result.dx));
    json.push("ds", Json::Float(result.ds));
    json.push("linf_error", Json::Float(linf));
    json.push("tolerance", Json::Float(tol));
    json.push(
        "front_speed",
        match speed {
            Some(v) => Json::Float(v),
            None => Json::Null,
        },
    );
    json.push("csv", Json::Str("grid.csv".into()));
    write_report(opts, &json)?;

    let mut rows = vec![
        ("pass".into(), pass.to_string()),
        ("scheme".into(), result.scheme.as_str().to_string()),
        ("dx".into(), fmt_float(result.dx)),
        ("ds".into(), fmt_float(result.ds)),
        ("linf_error".into(), fmt_float(linf)),
        ("tolerance".into(), fmt_float(tol)),
    ];
    if let Some(v) = speed {
        rows.push(("front_speed".into(), fmt_float(v)));
    }
    emit_text(opts, "simulate", &rows);
    Ok(pass)
}

fn run_transform(opts: &Options, root: Ctx<'_>) -> Result<bool, RunError> {
    let t_ctx = root.field("transform")?;
    let parsed = config::parse_transform(t_ctx.ctx())?;
    let transform = &parsed.transform;

    // Round-trip check on seeded sample points inside the domain
    // (unbounded axes are sampled on [-2, 2]).
    let points = match root.opt_field("roundtrip_points") {
        Some(p) => p.ctx().usize()?,
        None => 100,
    };
    let mut rng = SplitMix64::new(opts.seed);
    let domain = transform.domain().clone();
    let sample_axis = |rng: &mut SplitMix64, (lo, hi): (f64, f64)| {
        if lo.is_finite() && hi.is_finite() {
            rng.in_range(lo, hi)
        } else {
            rng.in_range(-2.0, 2.0)
        }
    };
    let mut roundtrip_max = 0.0f64;
    for _ in 0..points {
        let tau: Vec<f64> = domain
            .tau
            .iter()
            .map(|ax| sample_axis(&mut rng, *ax))
            .collect();
        let x = sample_axis(&mut rng, domain.x.unwrap_or((-2.0, 2.0)));
        let p = Point::new(tau, x);
        let fwd = transform.forward_point(&p).map_err(numeric)?;
        let back = transform.inverse_point(&fwd).map_err(numeric)?;
        for (a, b) in back.tau.iter().zip(&p.tau) {
            roundtrip_max = roundtrip_max.max((a - b).abs());
        }
        roundtrip_max = roundtrip_max.max((back.x - p.x).abs());
    }
    let mut pass = roundtrip_max <= ROUND_TRIP_TOL;

    // Defining-system verification for the characteristic kind.
    let system_report = match &parsed.system_coeffs {
        Some((h1, h2)) => {
            let grid = match root.opt_field("grid") {
                Some(g) => config::parse_grid(g.ctx())?,
                None => {
                    let ranges: Vec<[f64; 2]> =
                        domain.tau.iter().map(|&(lo, hi)| [lo, hi]).collect();
                    make_grid(&ranges, &vec![20; ranges.len()]).map_err(numeric)?
                }
            };
            let report = verify_transform_system(h1, h2, transform, &grid).map_err(numeric)?;
            pass = pass && report.pass;
            Some(report)
        }
        None => None,
    };

    // Optional pullback verification in the source equation.
    let pullback_report = match root.opt_field("pullback") {
        Some(pb) => {
            let pbc = pb.ctx();
            let target_field = config::parse_solution(pbc.field("solution")?.ctx())?;
            let source_pde = config::parse_pde(pbc.field("source_pde")?.ctx())?;
            let grid = config::parse_grid(pbc.field("grid")?.ctx())?;
            let tol = pbc.field("tolerance")?.ctx().f64()?;
            let pulled = transform.pullback(&target_field).map_err(numeric)?;
            let report = residual_report(&source_pde, &pulled, &grid, tol).map_err(numeric)?;
            pass = pass && report.pass;
            Some(report)
        }
        None => None,
    };

    let mut json = Json::object();
    json.push("command", Json::Str("transform".into()));
    json.push("pass", Json::Bool(pass));
    json.push("kind", Json::Str(transform.kind().as_str().into()));
    json.push("transform", Json::Raw(t_ctx.ctx().echo()));
    json.push("domain_used", domain_json(&domain));
    let mut rt = Json::object();
    rt.push("points", Json::Int(points as i64));
    rt.push("max_error", Json::Float(roundtrip_max));
    rt.push("tolerance", Json::Float(ROUND_TRIP_TOL));
    json.push("roundtrip", rt);
    json.push(
        "system",
        match &system_report {
            Some(r) => report_json(r),
            None => Json::Null,
        },
    );
    json.push(
        "pullback",
        match &pullback_report {
            Some(r) => report_json(r),
            None => Json::Null,
        },
    );
    write_report(opts, &json)?;

    let mut rows = vec![
        ("pass".into(), pass.to_string()),
        ("kind".into(), transform.kind().as_str().to_string()),
        ("roundtrip_max".into(), fmt_float(roundtrip_max)),
    ];
    if let Some(r) = &system_report {
        rows.push(("system_max_residual".into(), fmt_float(r.max_abs_residual)));
        rows.push(("system_tolerance".into(), fmt_float(TRANSFORM_SYSTEM_TOL)));
    }
    if let Some(r) = &pullback_report {
        rows.push((
            "pullback_max_residual".into(),
            fmt_float(r.max_abs_residual),
        ));
        rows.push(("pullback_pass".into(), r.pass.to_string()));
    }
    emit_text(opts, "transform", &rows);
    Ok(pass)
}

fn run_profile(opts: &Options, root: Ctx<'_>) -> Result<bool, RunError> {
    let wave_ctx = root.field("wave")?;
    let wc = wave_ctx.ctx();
    let mu = wc.field("mu")?.ctx().f64()?;
    let reaction = config::parse_reaction(wc.field("reaction")?.ctx())?;
    let mode = match root.opt_field("mode") {
        Some(m) => m.ctx().str()?.to_string(),
        None => "integrate".to_string(),
    };

    match mode.as_str() {
        "integrate" => {
            let k = wc.field("k")?.ctx().f64()?;
            let prob = wc.core(WaveProblem::new(mu, k, reaction))?;
            let u0 = root.field("u0")?.ctx().f64()?;
            let du0 = root.field("du0")?.ctx().f64()?;
            let y_range = pair(root.field("y_range")?.ctx())?;
            let step = root.field("step")?.ctx().f64()?;
            let res_tol = match root.opt_field("residual_tolerance") {
                Some(t) => t.ctx().f64()?,
                None => 1e-4,
            };
            let profile = integrate_profile(&prob, u0, du0, y_range, step).map_err(numeric)?;
            write_profile_csv(&opts.out.join("profile.csv"), &profile)?;

            // Re-substitute interpolated derivatives at interior nodes.
            let ys = profile.y_samples();
            let mut max_res = 0.0f64;
            for &y in &ys[1..ys.len() - 1] {
                let r = prob.residual(
                    profile.value(y),
                    profile.derivative(y),
                    profile.second_derivative(y),
                );
                max_res = max_res.max(r.abs());
            }
            let pass = !profile.truncated && max_res <= res_tol;

            let mut json = Json::object();
            json.push("command", Json::Str("profile".into()));
            json.push("mode", Json::Str("integrate".into()));
            json.push("pass", Json::Bool(pass));
            json.push("samples", Json::Int(profile.len() as i64));
            json.push("truncated", Json::Bool(profile.truncated));
            json.push("max_ode_residual", Json::Float(max_res));
            json.push("residual_tolerance", Json::Float(res_tol));
            json.push("csv", Json::Str("profile.csv".into()));
            write_report(opts, &json)?;

            emit_text(
                opts,
                "profile (integrate)",
                &[
                    ("pass".into(), pass.to_string()),
                    ("samples".into(), profile.len().to_string()),
                    ("truncated".into(), profile.truncated.to_string()),
                    ("max_ode_residual".into(), fmt_float(max_res)),
                ],
            );
            Ok(pass)
        }
        "shoot" => {
            let u_minus = root.field("u_minus")?.ctx().f64()?;
            let u_plus = root.field("u_plus")?.ctx().f64()?;
            let bracket = pair(root.field("bracket")?.ctx())?;
            let (speed, profile) =
                front_shoot(mu, &reaction, u_minus, u_plus, bracket).map_err(numeric)?;
            write_profile_csv(&opts.out.join("profile.csv"), &profile)?;

            let mut json = Json::object();
            json.push("command", Json::Str("profile".into()));
            json.push("mode", Json::Str("shoot".into()));
            json.push("pass", Json::Bool(true));
            json.push("speed", Json::Float(speed));
            json.push("samples", Json::Int(profile.len() as i64));
            json.push("csv", Json::Str("profile.csv".into()));
            write_report(opts, &json)?;

            emit_text(
                opts,
                "profile (shoot)",
                &[
                    ("speed".into(), fmt_float(speed)),
                    ("samples".into(), profile.len().to_string()),
                ],
            );
            Ok(true)
        }
        other => Err(config_error(format!("unknown profile mode `{other}`"))),
    }
}

fn run_catalog_list(opts: &Options) -> Result<bool, RunError> {
    let mut entries = Vec::new();
    let mut rows = Vec::new();
    for id in CatalogId::ALL {
        let mut e = Json::object();
        e.push("id", Json::Str(id.as_str().into()));
        e.push("params", Json::Str(id.param_schema().into()));
        entries.push(e);
        rows.push((id.as_str().to_string(), id.param_schema().to_string()));
    }
    let mut json = Json::object();
    json.push("command", Json::Str("catalog-list".into()));
    json.push("entries", Json::Array(entries));
    write_report(opts, &json)?;
    emit_text(opts, "catalog", &rows);
    Ok(true)
}

fn domain_json(domain: &DomainBox) -> Json {
    let mut o = Json::object();
    o.push(
        "tau",
        Json::Array(
            domain
                .tau
                .iter()
                .map(|&(lo, hi)| Json::Array(vec![Json::Float(lo), Json::Float(hi)]))
                .collect(),
        ),
    );
    o.push(
        "x",
        match domain.x {
            Some((lo, hi)) => Json::Array(vec![Json::Float(lo), Json::Float(hi)]),
            None => Json::Null,
        },
    );
    o
}

fn pair(ctx: Ctx<'_>) -> Result<(f64, f64), ConfigError> {
    let items = ctx.array()?;
    if items.len() != 2 {
        return Err(ConfigError {
            path: ctx.path.to_string(),
            msg: "expected [lo, hi]".into(),
        });
    }
    Ok((items[0].ctx().f64()?, items[1].ctx().f64()?))
}

fn write_profile_csv(path: &Path, profile: &Profile) -> Result<(), RunError> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "y,u")?;
    for (y, u) in profile.y_samples().iter().zip(profile.u_samples()) {
        writeln!(out, "{},{}", fmt_csv(*y), fmt_csv(*u))?;
    }
    Ok(())
}

fn write_grid_csv(path: &Path, result: &GridResult, prob: &Rd1dProblem) -> Result<(), RunError> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "s,x,u,u_exact,error")?;
    for (is, &s) in result.s.iter().enumerate() {
        for (ix, &x) in result.x.iter().enumerate() {
            let u = result.at(is, ix);
            let exact = prob.exact_at(s, x).map_err(numeric)?;
            writeln!(
                out,
                "{},{},{},{},{}",
                fmt_csv(s),
                fmt_csv(x),
                fmt_csv(u),
                fmt_csv(exact),
                fmt_csv(u - exact)
            )?;
        }
    }
    Ok(())
}
