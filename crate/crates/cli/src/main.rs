//! `isochron` command-line front end.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 usage or parse error,
//! 3 resource limit.

mod doc;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use isochron::calgorithm::{self, CalgError, RecordKind, SysOptions};
use isochron::catalog::{self, BatteryOptions, Catalog, CatalogError, Family, Instance};
use isochron::exprparse::parse_poly_in;
use isochron::groebner::{self, GroebnerError, Limits};
use isochron::lienard::{self, LienardError};
use isochron::numverify::{self, NumError};
use isochron::polyalg::{format_rational, Context, MonoOrder, Poly, Q};

#[derive(Parser)]
#[command(name = "isochron", version, about = "Isochronous centers of reducible planar polynomial systems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the Liénard form (f, g) and leading series terms.
    Reduce(ReduceArgs),
    /// Generate the condition system Sys(m) and the Urabe coefficients.
    Conditions(ConditionsArgs),
    /// Run the verification battery on a catalog record or a system file.
    Verify(VerifyArgs),
    /// Reduced Gröbner basis of polynomials listed one per line.
    Groebner(GroebnerArgs),
    /// Measure periods of orbits through (amplitude, 0).
    Period(PeriodArgs),
    /// Time generate_sys over a list of orders.
    Bench(BenchArgs),
}

#[derive(Args)]
struct Target {
    /// Catalog id or path to a system document (TOML).
    target: String,
    /// Parameter bindings, e.g. `a=1,b=-1/2,c=0.25`.
    #[arg(long, value_name = "BINDINGS")]
    at: Option<String>,
    /// Structural degree for degree-dependent catalog records.
    #[arg(long)]
    degree: Option<u32>,
}

#[derive(Args)]
struct Common {
    /// Machine-readable output (sorted keys).
    #[arg(long)]
    json: bool,
    /// Wall-clock limit in seconds for long computations.
    #[arg(long, value_name = "SECONDS")]
    time_limit: Option<f64>,
    /// Cap on S-polynomial pairs for Gröbner computations.
    #[arg(long, value_name = "N")]
    pair_limit: Option<usize>,
}

#[derive(Args)]
struct ReduceArgs {
    #[command(flatten)]
    target: Target,
    /// Number of series terms to print.
    #[arg(long, default_value_t = 6)]
    terms: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ConditionsArgs {
    #[command(flatten)]
    target: Target,
    /// Order m: conditions at indices 3, 5, ..., 2m+1.
    #[arg(long, short = 'm')]
    order: usize,
    /// Also run at truncation N+2 and require identical output.
    #[arg(long)]
    cross_check: bool,
    /// Print the per-index derivation.
    #[arg(long)]
    derivation: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    target: Target,
    #[arg(long, short = 'm', default_value_t = 6)]
    order: usize,
    /// Comma-separated amplitudes for the isochronicity scan.
    #[arg(long, value_name = "LIST")]
    amplitudes: Option<String>,
    /// Skip numerical checks.
    #[arg(long)]
    no_numeric: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    Drl,
    Lex,
}

#[derive(Args)]
struct GroebnerArgs {
    /// File with one polynomial per line (`#` starts a comment); `-` reads stdin.
    input: String,
    /// Variable order, e.g. `x,y,z`; defaults to sorted names.
    #[arg(long, value_name = "LIST")]
    vars: Option<String>,
    #[arg(long, value_enum, default_value = "drl")]
    order: OrderArg,
    #[arg(long, default_value_t = 40)]
    degree_limit: u32,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct PeriodArgs {
    #[command(flatten)]
    target: Target,
    #[arg(long, value_name = "LIST", default_value = "0.1,0.2,0.3,0.4,0.5")]
    amplitudes: String,
    #[arg(long, default_value_t = numverify::DEFAULT_TOL)]
    tol: f64,
    /// Emit `amplitude,period` CSV instead of text.
    #[arg(long)]
    csv: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    target: Target,
    /// Comma-separated orders, e.g. `1,2,3,4`.
    #[arg(long, value_name = "LIST")]
    orders: String,
    #[command(flatten)]
    common: Common,
}

/// Failure with its exit code.
struct Fail {
    code: u8,
    msg: String,
}

fn usage(msg: impl Into<String>) -> Fail {
    Fail { code: 2, msg: msg.into() }
}

impl From<CatalogError> for Fail {
    fn from(e: CatalogError) -> Fail {
        match e {
            CatalogError::Calg(c) => c.into(),
            CatalogError::Num(n) => n.into(),
            e => usage(e.to_string()),
        }
    }
}

impl From<CalgError> for Fail {
    fn from(e: CalgError) -> Fail {
        let code = match e {
            CalgError::ResourceLimit(_) => 3,
            CalgError::NonlinearCOccurrence { .. } | CalgError::TruncationSensitivity(..) => 1,
            _ => 2,
        };
        Fail { code, msg: e.to_string() }
    }
}

impl From<LienardError> for Fail {
    fn from(e: LienardError) -> Fail {
        usage(e.to_string())
    }
}

impl From<NumError> for Fail {
    fn from(e: NumError) -> Fail {
        let code = match e {
            NumError::BadTolerance(_) | NumError::UnboundParameter(_) => 2,
            _ => 1,
        };
        Fail { code, msg: e.to_string() }
    }
}

impl From<GroebnerError> for Fail {
    fn from(e: GroebnerError) -> Fail {
        let code = if matches!(e, GroebnerError::ResourceLimit(_)) { 3 } else { 2 };
        Fail { code, msg: e.to_string() }
    }
}

type Res<T> = Result<T, Fail>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Res<u8> {
    match cli.cmd {
        Cmd::Reduce(a) => cmd_reduce(a),
        Cmd::Conditions(a) => cmd_conditions(a),
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::Groebner(a) => cmd_groebner(a),
        Cmd::Period(a) => cmd_period(a),
        Cmd::Bench(a) => cmd_bench(a),
    }
}

// ---------------------------------------------------------------------------
// shared plumbing

/// A resolved target: the family to instantiate and a digest of the input.
struct Loaded {
    cat: Catalog,
    family: Family,
    degree: Option<u32>,
    bindings: BTreeMap<String, Q>,
    digest: String,
    echo: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{:02x}", b)).collect()
}

fn load(t: &Target) -> Res<Loaded> {
    let cat = Catalog::builtin()?;
    let bindings = match &t.at {
        Some(s) => parse_bindings(s)?,
        None => BTreeMap::new(),
    };
    let path = Path::new(&t.target);
    let (family, digest) = if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {}", t.target, e)))?;
        let doc = doc::parse_document(&text, &cat).map_err(|m| usage(format!("{}:{}", t.target, m)))?;
        (Family::from_document(&t.target, &doc), sha256_hex(text.as_bytes()))
    } else if t.target.ends_with(".toml") {
        return Err(usage(format!("{}: no such file", t.target)));
    } else {
        (cat.family(&t.target)?.clone(), sha256_hex(t.target.as_bytes()))
    };
    let mut echo = t.target.clone();
    if let Some(d) = t.degree {
        echo.push_str(&format!(" --degree {}", d));
    }
    if let Some(a) = &t.at {
        echo.push_str(&format!(" --at {}", a));
    }
    Ok(Loaded { cat, family, degree: t.degree, bindings, digest, echo })
}

impl Loaded {
    /// Bind `--at` only; other parameters stay symbolic.
    fn instance(&self) -> Res<Instance> {
        Ok(self.cat.instantiate_family(&self.family, self.degree, &self.bindings)?)
    }

    /// Bind `--at`, then catalog defaults.
    fn instance_at_defaults(&self) -> Res<Instance> {
        Ok(self.cat.instantiate_family_at_defaults(&self.family, self.degree, &self.bindings)?)
    }
}

/// `name=value` pairs; values are integers, `p/q` or finite decimals (read exactly).
fn parse_bindings(s: &str) -> Res<BTreeMap<String, Q>> {
    let mut out = BTreeMap::new();
    for (k, part) in s.split(',').map(str::trim).filter(|p| !p.is_empty()).enumerate() {
        let (name, value) = part.split_once('=').ok_or_else(|| usage(format!("--at item {}: expected name=value, got `{}`", k + 1, part)))?;
        let q = parse_exact(value.trim()).ok_or_else(|| usage(format!("--at {}: `{}` is not a rational or decimal number", name.trim(), value.trim())))?;
        out.insert(name.trim().to_string(), q);
    }
    Ok(out)
}

fn parse_exact(s: &str) -> Option<Q> {
    if let Some(q) = isochron::polyalg::parse_rational(s) {
        return Some(q);
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.')?;
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let num = isochron::polyalg::parse_rational(&format!("{}{}", int, frac))?;
    let den = isochron::polyalg::parse_rational(&format!("1{}", "0".repeat(frac.len())))?;
    let q = num / den;
    Some(if neg { -q } else { q })
}

fn parse_floats(s: &str, what: &str) -> Res<Vec<f64>> {
    let v: Result<Vec<f64>, _> = s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(str::parse::<f64>).collect();
    let v = v.map_err(|e| usage(format!("{}: {}", what, e)))?;
    if v.is_empty() {
        return Err(usage(format!("{}: empty list", what)));
    }
    Ok(v)
}

fn deadline(c: &Common) -> Res<Option<Instant>> {
    match c.time_limit {
        None => Ok(None),
        Some(s) if s.is_finite() && s > 0.0 => Ok(Some(Instant::now() + Duration::from_secs_f64(s))),
        Some(s) => Err(usage(format!("--time-limit must be positive, got {}", s))),
    }
}

fn emit(json_out: bool, report: Value, text: String) {
    if json_out {
        println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
    } else {
        print!("{}", text);
    }
}

fn header(command: &str, l: &Loaded) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("command".into(), json!(format!("{} {}", command, l.echo)));
    m.insert("input_sha256".into(), json!(l.digest));
    m
}

fn q_str(q: &Q) -> String {
    format_rational(q)
}

// ---------------------------------------------------------------------------
// commands

fn cmd_reduce(a: ReduceArgs) -> Res<u8> {
    let l = load(&a.target)?;
    let inst = l.instance()?;
    let lf = lienard::reduce_to_lienard(&inst.system)?;
    let pctx = lf.param_ctx()?;
    let n = a.terms.max(1);
    let fs = lf.f_series(&pctx, n)?;
    let gs = lf.g_series(&pctx, n)?;
    let shape = format!("{:?}", lf.shape).to_lowercase();
    let mut m = header("reduce", &l);
    m.insert("shape".into(), json!(shape));
    m.insert("f".into(), json!({"num": lf.f.num.to_string(), "den": lf.f.den.to_string(), "series": fs.to_string()}));
    m.insert("g".into(), json!({"num": lf.g.num.to_string(), "den": lf.g.den.to_string(), "series": gs.to_string()}));
    m.insert("verdict".into(), json!("pass"));
    let text = format!("shape: {}\nf = {}\ng = {}\nf(x) = {}\ng(x) = {}\n", shape, lf.f, lf.g, fs, gs);
    emit(a.common.json, Value::Object(m), text);
    Ok(0)
}

fn cmd_conditions(a: ConditionsArgs) -> Res<u8> {
    if a.order == 0 {
        return Err(usage("--order must be at least 1"));
    }
    let l = load(&a.target)?;
    let inst = l.instance()?;
    let opts = SysOptions { truncation: None, cross_check: a.cross_check, deadline: deadline(&a.common)? };
    let t0 = Instant::now();
    let sys = calgorithm::generate_sys(&inst.system, a.order, &opts)?;
    let secs = t0.elapsed().as_secs_f64();

    let mut text = format!("Sys({}) over [{}], truncation {}\n", a.order, sys.params.names().join(", "), sys.derivation.truncation);
    let mut urabe = Map::new();
    for (k, c) in &sys.urabe {
        text.push_str(&format!("c{} = {}\n", k, c));
        urabe.insert(format!("c{}", k), json!(c.to_string()));
    }
    if sys.conditions.is_empty() {
        text.push_str("no conditions: every residual vanishes\n");
    }
    for (i, c) in sys.conditions.iter().enumerate() {
        text.push_str(&format!("s{} = {}\n", i + 1, c));
    }
    let mut derivation = Vec::new();
    for r in &sys.derivation.records {
        let kind = match &r.kind {
            RecordKind::Trivial => json!({"kind": "trivial"}),
            RecordKind::Eliminated { c, value } => json!({"kind": "eliminated", "c": c, "value": value.to_string()}),
            RecordKind::Condition { residual } => json!({"kind": "condition", "residual": residual.to_string()}),
        };
        if a.derivation {
            text.push_str(&format!("[{}] {}\n", r.index, kind));
        }
        derivation.push(json!({"index": r.index, "record": kind}));
    }
    let mut m = header("conditions", &l);
    m.insert("order".into(), json!(a.order));
    m.insert("truncation".into(), json!(sys.derivation.truncation));
    m.insert("parameters".into(), json!(sys.params.names()));
    m.insert("conditions".into(), json!(sys.conditions.iter().map(|c| c.to_string()).collect::<Vec<_>>()));
    m.insert("urabe".into(), Value::Object(urabe));
    if a.derivation {
        m.insert("derivation".into(), Value::Array(derivation));
    }
    m.insert("seconds".into(), json!(secs));
    m.insert("verdict".into(), json!("pass"));
    emit(a.common.json, Value::Object(m), text);
    Ok(0)
}

fn cmd_verify(a: VerifyArgs) -> Res<u8> {
    if a.order == 0 {
        return Err(usage("--order must be at least 1"));
    }
    let l = load(&a.target)?;
    let mut opts = BatteryOptions { order: a.order, numeric: !a.no_numeric, deadline: deadline(&a.common)?, ..Default::default() };
    if let Some(s) = &a.amplitudes {
        opts.amplitudes = parse_floats(s, "--amplitudes")?;
    }
    let t0 = Instant::now();
    let rep = catalog::family_battery(&l.cat, &l.family, l.degree, &l.bindings, &opts)?;
    let secs = t0.elapsed().as_secs_f64();
    let mut text = format!("{}{}\n", rep.id, rep.degree.map(|d| format!(" (n = {})", d)).unwrap_or_default());
    if !rep.bindings.is_empty() {
        let b: Vec<String> = rep.bindings.iter().map(|(k, v)| format!("{}={}", k, q_str(v))).collect();
        text.push_str(&format!("at {}\n", b.join(", ")));
    }
    let mut checks = Vec::new();
    for c in &rep.checks {
        text.push_str(&format!("  {:<4} {:<28} {}\n", if c.pass { "ok" } else { "FAIL" }, c.name, c.detail));
        checks.push(json!({"name": c.name, "pass": c.pass, "residual": c.residual, "detail": c.detail}));
    }
    let verdict = if rep.pass { "pass" } else { "fail" };
    text.push_str(&format!("verdict: {}\n", verdict));
    let mut m = header("verify", &l);
    m.insert("id".into(), json!(rep.id));
    m.insert("degree".into(), json!(rep.degree));
    m.insert("bindings".into(), json!(rep.bindings.iter().map(|(k, v)| (k.clone(), q_str(v))).collect::<BTreeMap<_, _>>()));
    m.insert("order".into(), json!(a.order));
    m.insert("checks".into(), Value::Array(checks));
    m.insert("seconds".into(), json!(secs));
    m.insert("verdict".into(), json!(verdict));
    emit(a.common.json, Value::Object(m), text);
    Ok(if rep.pass { 0 } else { 1 })
}

fn cmd_groebner(a: GroebnerArgs) -> Res<u8> {
    let (text, name) = if a.input == "-" {
        let mut s = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut s).map_err(|e| usage(format!("stdin: {}", e)))?;
        (s, "<stdin>".to_string())
    } else {
        (std::fs::read_to_string(&a.input).map_err(|e| usage(format!("{}: {}", a.input, e)))?, a.input.clone())
    };
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("")))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    let vars: Vec<String> = match &a.vars {
        Some(v) => v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
        None => {
            let mut names = std::collections::BTreeSet::new();
            for (_, l) in &lines {
                names.extend(doc::identifiers(l));
            }
            names.into_iter().collect()
        }
    };
    let ctx = Context::new(vars.clone()).map_err(|e| usage(e.to_string()))?;
    let mut gens = Vec::new();
    for (ln, l) in &lines {
        let p = parse_poly_in(l, &ctx).map_err(|e| usage(format!("{}:{}:{}: {}", name, ln + e.line - 1, e.col, e.message)))?;
        gens.push(p);
    }
    let order = match a.order {
        OrderArg::Drl => MonoOrder::Drl,
        OrderArg::Lex => MonoOrder::Lex,
    };
    let limits = Limits { max_pairs: a.common.pair_limit.unwrap_or(Limits::default().max_pairs), max_degree: a.degree_limit, deadline: deadline(&a.common)? };
    let t0 = Instant::now();
    let gb = groebner::buchberger(&gens, order, &limits)?;
    let secs = t0.elapsed().as_secs_f64();
    let mut out = String::new();
    for g in &gb.generators {
        out.push_str(&format!("{}\n", g));
    }
    let mut m = Map::new();
    m.insert("command".into(), json!(format!("groebner {}", a.input)));
    m.insert("input_sha256".into(), json!(sha256_hex(text.as_bytes())));
    m.insert("variables".into(), json!(vars));
    m.insert("order".into(), json!(match order { MonoOrder::Drl => "drl", MonoOrder::Lex => "lex" }));
    m.insert("basis".into(), json!(gb.generators.iter().map(Poly::to_string).collect::<Vec<_>>()));
    m.insert("unit_ideal".into(), json!(gb.is_unit()));
    m.insert("seconds".into(), json!(secs));
    m.insert("verdict".into(), json!("pass"));
    emit(a.common.json, Value::Object(m), out);
    Ok(0)
}

fn cmd_period(a: PeriodArgs) -> Res<u8> {
    let amps = parse_floats(&a.amplitudes, "--amplitudes")?;
    let l = load(&a.target)?;
    let inst = l.instance_at_defaults()?;
    let nf = inst.num_field()?;
    let scan = numverify::isochronicity_scan(&nf, &amps, a.tol)?;
    let mut text = String::new();
    if a.csv {
        text.push_str("amplitude,period\n");
        for p in &scan.periods {
            text.push_str(&format!("{},{:.15}\n", p.amplitude, p.period));
        }
    } else {
        for p in &scan.periods {
            text.push_str(&format!("T({}) = {:.12}\n", p.amplitude, p.period));
        }
        text.push_str(&format!("spread = {:.3e}\n", scan.spread));
    }
    let mut m = header("period", &l);
    m.insert("tol".into(), json!(a.tol));
    m.insert("periods".into(), json!(scan.periods.iter().map(|p| json!({"amplitude": p.amplitude, "period": p.period, "residual": p.residual})).collect::<Vec<_>>()));
    m.insert("spread".into(), json!(scan.spread));
    m.insert("verdict".into(), json!("pass"));
    emit(a.common.json, Value::Object(m), text);
    Ok(0)
}

fn cmd_bench(a: BenchArgs) -> Res<u8> {
    let orders: Vec<usize> = a
        .orders
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|e| usage(format!("--orders: `{}`: {}", s, e))))
        .collect::<Res<_>>()?;
    if orders.is_empty() {
        return Err(usage("--orders: empty list"));
    }
    if orders.contains(&0) {
        return Err(usage("--orders: orders start at 1"));
    }
    let l = load(&a.target)?;
    let inst = l.instance()?;
    let opts = SysOptions { deadline: deadline(&a.common)?, ..Default::default() };
    let mut text = String::from("order  seconds  conditions  digest\n");
    let mut rows = Vec::new();
    for &m in &orders {
        let t0 = Instant::now();
        let sys = calgorithm::generate_sys(&inst.system, m, &opts)?;
        let secs = t0.elapsed().as_secs_f64();
        let listing: String = sys.conditions.iter().map(|c| format!("{}\n", c)).collect();
        let digest = sha256_hex(listing.as_bytes());
        text.push_str(&format!("{:>5}  {:>7.3}  {:>10}  {}\n", m, secs, sys.conditions.len(), &digest[..16]));
        rows.push(json!({"order": m, "seconds": secs, "conditions": sys.conditions.len(), "conditions_sha256": digest}));
    }
    let mut m = header("bench", &l);
    m.insert("rows".into(), Value::Array(rows));
    m.insert("verdict".into(), json!("pass"));
    emit(a.common.json, Value::Object(m), text);
    Ok(0)
}
