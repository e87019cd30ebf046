//! Config document parsing. The config is a single JSON document whose
//! `command` field selects the workflow; parsing errors carry the JSON
//! path of the offending field.

use multitime_core::solutions::CatalogParams;
use multitime_core::transform::log_time;
use multitime_core::*;
use serde_json::Value;
use std::result::Result;

#[derive(Debug)]
pub struct ConfigError {
    pub path: String,
    pub msg: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.msg)
        } else {
            write!(f, "at {}: {}", self.path, self.msg)
        }
    }
}

pub type CResult<T> = Result<T, ConfigError>;

/// A JSON value paired with its path, for diagnostics.
#[derive(Clone, Copy)]
pub struct Ctx<'a> {
    value: &'a Value,
    pub path: &'a str,
}

pub struct OwnedCtx<'a> {
    value: &'a Value,
    path: String,
}

impl<'a> OwnedCtx<'a> {
    pub fn ctx(&self) -> Ctx<'_> {
        Ctx {
            value: self.value,
            path: &self.path,
        }
    }
}

impl<'a> Ctx<'a> {
    pub fn root(value: &'a Value) -> Ctx<'a> {
        Ctx { value, path: "" }
    }

    fn err<T>(&self, msg: impl Into<String>) -> CResult<T> {
        Err(ConfigError {
            path: self.path.to_string(),
            msg: msg.into(),
        })
    }

    pub fn field(&self, name: &str) -> CResult<OwnedCtx<'a>> {
        if !self.value.is_object() {
            return self.err("expected an object");
        }
        match self.opt_field(name) {
            Some(c) => Ok(c),
            None => self.err(format!("missing required field `{name}`")),
        }
    }

    pub fn opt_field(&self, name: &str) -> Option<OwnedCtx<'a>> {
        let obj = self.value.as_object()?;
        let value = obj.get(name)?;
        let path = if self.path.is_empty() {
            name.to_string()
        } else {
            format!("{}.{}", self.path, name)
        };
        Some(OwnedCtx { value, path })
    }

    pub fn f64(&self) -> CResult<f64> {
        match self.value.as_f64() {
            Some(v) => Ok(v),
            None => self.err("expected a number"),
        }
    }

    pub fn usize(&self) -> CResult<usize> {
        match self.value.as_u64() {
            Some(v) => Ok(v as usize),
            None => self.err("expected a nonnegative integer"),
        }
    }

    pub fn i32(&self) -> CResult<i32> {
        match self.value.as_i64() {
            Some(v) => Ok(v as i32),
            None => self.err("expected an integer"),
        }
    }

    pub fn bool(&self) -> CResult<bool> {
        match self.value.as_bool() {
            Some(v) => Ok(v),
            None => self.err("expected a boolean"),
        }
    }

    pub fn str(&self) -> CResult<&'a str> {
        match self.value.as_str() {
            Some(v) => Ok(v),
            None => self.err("expected a string"),
        }
    }

    pub fn array(&self) -> CResult<Vec<OwnedCtx<'a>>> {
        match self.value.as_array() {
            Some(items) => Ok(items
                .iter()
                .enumerate()
                .map(|(i, v)| OwnedCtx {
                    value: v,
                    path: format!("{}[{}]", self.path, i),
                })
                .collect()),
            None => self.err("expected an array"),
        }
    }

    pub fn is_null(&self) -> bool {
        self.value.is_null()
    }

    /// Echo this fragment back as canonical JSON (sorted keys via
    /// serde_json's default map), for reproducible report embedding.
    pub fn echo(&self) -> String {
        serde_json::to_string(self.value).unwrap_or_else(|_| "null".to_string())
    }

    /// Map a core construction error to a config error at this path.
    pub fn core<T>(&self, r: multitime_core::Result<T>) -> CResult<T> {
        r.map_err(|e| ConfigError {
            path: self.path.to_string(),
            msg: e.to_string(),
        })
    }
}

fn f64_list(ctx: Ctx<'_>) -> CResult<Vec<f64>> {
    ctx.array()?.iter().map(|c| c.ctx().f64()).collect()
}

/// Expression documents: numbers are constants, strings are variables
/// (`x`/`u`/`y` for the spatial slot, `tau1..tauN`/`t1..tN`/`omega1..`/
/// `w1..` for the time slots, `u_x`/`u_xx` for reaction derivatives), and
/// objects are `{"op": ..., "args": [...]}` nodes.
pub fn parse_expr(ctx: Ctx<'_>) -> CResult<Expr> {
    if let Ok(v) = ctx.f64() {
        if ctx.value.is_number() {
            return Ok(Expr::c(v));
        }
    }
    if let Some(name) = ctx.value.as_str() {
        return parse_variable(ctx, name);
    }
    if ctx.value.is_object() {
        let op = ctx.field("op")?;
        let op_name = op.ctx().str()?.to_string();
        let args: Vec<Expr> = match ctx.opt_field("args") {
            Some(a) => a
                .ctx()
                .array()?
                .iter()
                .map(|c| parse_expr(c.ctx()))
                .collect::<CResult<_>>()?,
            None => Vec::new(),
        };
        let arity = |n: usize| -> CResult<()> {
            if args.len() != n {
                return ctx.err(format!(
                    "op `{op_name}` takes {n} argument(s), got {}",
                    args.len()
                ));
            }
            Ok(())
        };
        return match op_name.as_str() {
            "add" | "mul" => {
                if args.len() < 2 {
                    return ctx.err(format!("op `{op_name}` takes at least 2 arguments"));
                }
                let mut iter = args.into_iter();
                let first = iter.next().unwrap();
                Ok(iter.fold(
                    first,
                    |acc, e| {
                        if op_name == "add" {
                            acc + e
                        } else {
                            acc * e
                        }
                    },
                ))
            }
            "sub" => {
                arity(2)?;
                Ok(args[0].clone() - args[1].clone())
            }
            "div" => {
                arity(2)?;
                Ok(args[0].clone() / args[1].clone())
            }
            "neg" => {
                arity(1)?;
                Ok(-args[0].clone())
            }
            "powi" => {
                arity(1)?;
                let n = ctx.field("n")?.ctx().i32()?;
                Ok(args[0].clone().powi(n))
            }
            "exp" => {
                arity(1)?;
                Ok(args[0].clone().exp())
            }
            "ln" => {
                arity(1)?;
                Ok(args[0].clone().ln())
            }
            "sqrt" => {
                arity(1)?;
                Ok(args[0].clone().sqrt())
            }
            "sin" => {
                arity(1)?;
                Ok(args[0].clone().sin())
            }
            "cos" => {
                arity(1)?;
                Ok(args[0].clone().cos())
            }
            "sinh" => {
                arity(1)?;
                Ok(args[0].clone().sinh())
            }
            "cosh" => {
                arity(1)?;
                Ok(args[0].clone().cosh())
            }
            "tanh" => {
                arity(1)?;
                Ok(args[0].clone().tanh())
            }
            "coth" => {
                arity(1)?;
                Ok(args[0].clone().coth())
            }
            other => ctx.err(format!("unknown op `{other}`")),
        };
    }
    ctx.err("expected a number, variable name, or op object")
}

fn parse_variable(ctx: Ctx<'_>, name: &str) -> CResult<Expr> {
    match name {
        "x" | "u" | "y" => return Ok(Expr::x()),
        "u_x" => return Ok(Expr::tau(0)),
        "u_xx" => return Ok(Expr::tau(1)),
        _ => {}
    }
    for prefix in ["tau", "omega", "t", "w"] {
        if let Some(rest) = name.strip_prefix(prefix) {
            if let Ok(k) = rest.parse::<usize>() {
                if k >= 1 {
                    return Ok(Expr::tau(k - 1));
                }
            }
        }
    }
    ctx.err(format!("unknown variable `{name}`"))
}

pub fn parse_reaction(ctx: Ctx<'_>) -> CResult<ReactionTerm> {
    let kind = ctx.field("kind")?;
    match kind.ctx().str()? {
        "huxley_normalized" => Ok(ReactionTerm::HuxleyNormalized),
        "cubic" => Ok(ReactionTerm::Cubic {
            a: ctx.field("a")?.ctx().f64()?,
            b: ctx.field("b")?.ctx().f64()?,
        }),
        "fitzhugh_nagumo" => Ok(ReactionTerm::FitzhughNagumo {
            delta: ctx.field("delta")?.ctx().f64()?,
        }),
        "custom" => {
            let expr = parse_expr(ctx.field("expr")?.ctx())?;
            Ok(ReactionTerm::Custom { expr })
        }
        other => ctx.err(format!("unknown reaction kind `{other}`")),
    }
}

pub fn parse_pde(ctx: Ctx<'_>) -> CResult<PdeSpec> {
    let m = ctx.field("m")?.ctx().usize()?;
    let mu = ctx.field("mu")?.ctx().f64()?;
    let reaction = parse_reaction(ctx.field("reaction")?.ctx())?;
    let form = match ctx.opt_field("form") {
        Some(f) => f.ctx().str()?.to_string(),
        None => "canonical".to_string(),
    };
    let spec = match form.as_str() {
        "canonical" => ctx.core(PdeSpec::canonical(m, mu, reaction))?,
        "canonical_convective" => {
            let k = ctx.field("k")?.ctx().f64()?;
            ctx.core(PdeSpec::canonical_convective(m, mu, k, reaction))?
        }
        "general" => {
            let coeffs = ctx
                .field("coeffs")?
                .ctx()
                .array()?
                .iter()
                .map(|c| parse_expr(c.ctx()))
                .collect::<CResult<Vec<_>>>()?;
            ctx.core(PdeSpec::general(m, mu, reaction, coeffs))?
        }
        other => return ctx.err(format!("unknown pde form `{other}`")),
    };
    match ctx.opt_field("n") {
        Some(n) => ctx.core(spec.with_order(n.ctx().usize()?)),
        None => Ok(spec),
    }
}

pub fn parse_grid(ctx: Ctx<'_>) -> CResult<Grid> {
    let ranges: Vec<[f64; 2]> = ctx
        .field("ranges")?
        .ctx()
        .array()?
        .iter()
        .map(|c| {
            let pair = f64_list(c.ctx())?;
            if pair.len() != 2 {
                return c.ctx().err("range must be [lo, hi]");
            }
            Ok([pair[0], pair[1]])
        })
        .collect::<CResult<_>>()?;
    let counts: Vec<usize> = ctx
        .field("counts")?
        .ctx()
        .array()?
        .iter()
        .map(|c| c.ctx().usize())
        .collect::<CResult<_>>()?;
    ctx.core(make_grid(&ranges, &counts))
}

pub fn parse_arbitrary_function(ctx: Ctx<'_>) -> CResult<ArbitraryFunction> {
    let kind = ctx.field("kind")?;
    match kind.ctx().str()? {
        "constant" => Ok(ArbitraryFunction::Constant(ctx.field("c")?.ctx().f64()?)),
        "linear" => Ok(ArbitraryFunction::Linear {
            offset: match ctx.opt_field("offset") {
                Some(o) => o.ctx().f64()?,
                None => 0.0,
            },
            coeffs: f64_list(ctx.field("coeffs")?.ctx())?,
        }),
        "sine" => Ok(ArbitraryFunction::Sine {
            amplitude: ctx.field("amplitude")?.ctx().f64()?,
            freqs: f64_list(ctx.field("freqs")?.ctx())?,
            phase: match ctx.opt_field("phase") {
                Some(p) => p.ctx().f64()?,
                None => 0.0,
            },
        }),
        "expquad" => Ok(ArbitraryFunction::ExpQuad {
            scale: ctx.field("scale")?.ctx().f64()?,
            quad: f64_list(ctx.field("quad")?.ctx())?,
            lin: match ctx.opt_field("lin") {
                Some(l) => f64_list(l.ctx())?,
                None => Vec::new(),
            },
        }),
        "polynomial" => {
            let coeffs = ctx
                .field("coeffs")?
                .ctx()
                .array()?
                .iter()
                .map(|c| f64_list(c.ctx()))
                .collect::<CResult<_>>()?;
            Ok(ArbitraryFunction::Polynomial { coeffs })
        }
        "sum" => Ok(ArbitraryFunction::Sum(
            Box::new(parse_arbitrary_function(ctx.field("a")?.ctx())?),
            Box::new(parse_arbitrary_function(ctx.field("b")?.ctx())?),
        )),
        "product" => Ok(ArbitraryFunction::Product(
            Box::new(parse_arbitrary_function(ctx.field("a")?.ctx())?),
            Box::new(parse_arbitrary_function(ctx.field("b")?.ctx())?),
        )),
        other => ctx.err(format!("unknown arbitrary-function kind `{other}`")),
    }
}

/// Parse a catalog reference, when the document is one.
pub fn parse_catalog_entry(ctx: Ctx<'_>) -> CResult<Option<CatalogEntry>> {
    let id_ctx = match ctx.opt_field("catalog") {
        Some(c) => c,
        None => return Ok(None),
    };
    let name = id_ctx.ctx().str()?;
    let id = match CatalogId::from_name(name) {
        Some(id) => id,
        None => return id_ctx.ctx().err(format!("unknown catalog id `{name}`")),
    };
    let mut params = CatalogParams::default();
    if let Some(p) = ctx.opt_field("params") {
        let pc = p.ctx();
        if let Some(m) = pc.opt_field("m") {
            params.m = Some(m.ctx().usize()?);
        }
        if let Some(x0) = pc.opt_field("x0") {
            params.x0 = Some(x0.ctx().f64()?);
        }
        if let Some(c) = pc.opt_field("c") {
            params.c = Some(c.ctx().f64()?);
        }
        if let Some(pf) = pc.opt_field("p") {
            params.p = Some(parse_arbitrary_function(pf.ctx())?);
        }
    }
    Ok(Some(ctx.core(catalog(id, &params))?))
}

/// Solution documents: a catalog reference, a family builder, a symmetry
/// orbit of another solution, or a raw closed-form expression.
pub fn parse_solution(ctx: Ctx<'_>) -> CResult<ScalarField> {
    if let Some(entry) = parse_catalog_entry(ctx)? {
        return Ok(entry.field);
    }
    if let Some(builder) = ctx.opt_field("builder") {
        return match builder.ctx().str()? {
            "constraint_solution" => {
                let profile = parse_expr(ctx.field("profile")?.ctx())?;
                let k = ctx.field("k")?.ctx().f64()?;
                let m = ctx.field("m")?.ctx().usize()?;
                ctx.core(build_constraint_solution(&profile, k, m))
            }
            "proposition_form" => {
                let phi = parse_solution(ctx.field("phi")?.ctx())?;
                let k = ctx.field("k")?.ctx().f64()?;
                let p = parse_arbitrary_function(ctx.field("p")?.ctx())?;
                let m = ctx.field("m")?.ctx().usize()?;
                ctx.core(build_proposition_form(&phi, k, &p, m))
            }
            "symmetry_orbit" => {
                let base = parse_solution(ctx.field("base")?.ctx())?;
                let tau0 = f64_list(ctx.field("tau0")?.ctx())?;
                let x0 = ctx.field("x0")?.ctx().f64()?;
                let reflect = match ctx.opt_field("reflect") {
                    Some(r) => r.ctx().bool()?,
                    None => false,
                };
                ctx.core(symmetry_orbit(&base, &tau0, x0, reflect))
            }
            other => ctx.err(format!("unknown builder `{other}`")),
        };
    }
    if let Some(expr_ctx) = ctx.opt_field("expr") {
        let expr = parse_expr(expr_ctx.ctx())?;
        let m = ctx.field("m")?.ctx().usize()?;
        return ctx.core(ScalarField::from_expr(m, expr));
    }
    ctx.err("solution must have `catalog`, `builder`, or `expr`")
}

pub fn parse_domain(ctx: Ctx<'_>) -> CResult<DomainBox> {
    let tau: Vec<(f64, f64)> = ctx
        .field("tau")?
        .ctx()
        .array()?
        .iter()
        .map(|c| {
            let pair = f64_list(c.ctx())?;
            if pair.len() != 2 {
                return c.ctx().err("domain axis must be [lo, hi]");
            }
            Ok((pair[0], pair[1]))
        })
        .collect::<CResult<_>>()?;
    let x = match ctx.opt_field("x") {
        Some(xc) if !xc.ctx().is_null() => {
            let pair = f64_list(xc.ctx())?;
            if pair.len() != 2 {
                return xc.ctx().err("domain x must be [lo, hi]");
            }
            Some((pair[0], pair[1]))
        }
        _ => None,
    };
    Ok(DomainBox::new(tau, x))
}

/// The characteristic-transform section needs its pieces exposed for the
/// system verification, so parsing returns them alongside the transform.
pub struct ParsedTransform {
    pub transform: Transformation,
    pub system_coeffs: Option<(Expr, Expr)>,
}

pub fn parse_transform(ctx: Ctx<'_>) -> CResult<ParsedTransform> {
    let kind = ctx.field("kind")?;
    match kind.ctx().str()? {
        "time_rescale" => {
            let h: Vec<Expr> = ctx
                .field("h")?
                .ctx()
                .array()?
                .iter()
                .map(|c| parse_expr(c.ctx()))
                .collect::<CResult<_>>()?;
            let domain = parse_domain(ctx.field("domain")?.ctx())?;
            // If a coefficient vanishes inside the box, construct on the
            // sign-fixed sub-domain; the report carries the domain used.
            let (transform, _used) = ctx.core(time_rescale_on_subdomain(&h, &domain))?;
            Ok(ParsedTransform {
                transform,
                system_coeffs: None,
            })
        }
        "log" => {
            let m = ctx.field("m")?.ctx().usize()?;
            let domain = parse_domain(ctx.field("domain")?.ctx())?;
            Ok(ParsedTransform {
                transform: ctx.core(log_time(m, domain))?,
                system_coeffs: None,
            })
        }
        "scaling" => {
            let m = ctx.field("m")?.ctx().usize()?;
            let mu = ctx.field("mu")?.ctx().f64()?;
            let a = ctx.field("a")?.ctx().f64()?;
            let b = ctx.field("b")?.ctx().f64()?;
            Ok(ParsedTransform {
                transform: ctx.core(scaling_normalize(m, mu, a, b))?,
                system_coeffs: None,
            })
        }
        "shift_y" => {
            let k = ctx.field("k")?.ctx().f64()?;
            let m = ctx.field("m")?.ctx().usize()?;
            Ok(ParsedTransform {
                transform: ctx.core(shift_to_wave_frame(k, m))?,
                system_coeffs: None,
            })
        }
        "characteristic" => {
            let h1 = parse_expr(ctx.field("h1")?.ctx())?;
            let h2 = parse_expr(ctx.field("h2")?.ctx())?;
            let domain = parse_domain(ctx.field("domain")?.ctx())?;
            let integral_ctx = ctx.field("integral")?;
            let integral = if let Some(traced) = integral_ctx.ctx().opt_field("traced") {
                let anchor = match traced.ctx().opt_field("anchor") {
                    Some(a) => a.ctx().f64()?,
                    None => domain.tau[0].0,
                };
                FirstIntegral::Traced(transform::TracedIntegral::new(
                    h1.clone(),
                    h2.clone(),
                    anchor,
                ))
            } else {
                FirstIntegral::Closed(parse_expr(integral_ctx.ctx())?)
            };
            let w1 = parse_expr(ctx.field("w1")?.ctx())?;
            let w2 = parse_expr(ctx.field("w2")?.ctx())?;
            let transform = ctx.core(characteristic_transform(
                &h1, &h2, &integral, &w1, &w2, &domain,
            ))?;
            Ok(ParsedTransform {
                transform,
                system_coeffs: Some((h1, h2)),
            })
        }
        other => ctx.err(format!("unknown transform kind `{other}`")),
    }
}

pub fn parse_scheme(ctx: Ctx<'_>) -> CResult<Scheme> {
    match ctx.str()? {
        "explicit_ftcs" => Ok(Scheme::ExplicitFtcs),
        "crank_nicolson" => Ok(Scheme::CrankNicolson),
        other => ctx.err(format!("unknown scheme `{other}`")),
    }
}
