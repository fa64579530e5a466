//! Command-line front end.
//!
//! Every subcommand accepts the shared flags (`--gamma`, `--r1`, ..., `--s`,
//! `--n`, `--tol`, `--out`, `--format`, `--seed`, `--const-c`).  Defaults can be
//! supplied through a flat `key = value` file named by `TACNODE_CONFIG`; flags
//! override the file.  Keys are the long flag names without dashes
//! (`const-c` and `const_c` are both accepted).
//!
//! Exit codes: 0 success, 1 tolerance breach, 2 usage or domain error,
//! 3 convergence or internal failure.

use crate::asymptotics::{counting_stats, f_expansion, generating_check, h_expansion, AsymptoticOptions};
use crate::hamiltonian::{
    constraint_project, hamilton_gradient_residual, hamiltonian_expanded, hamiltonian_structured,
    identity_residuals_with, zero_curvature_residual, HamiltonianTerms, PQState,
};
use crate::kernel::{gap_log_probability, KernelEvalConfig, TacnodeParams};
use crate::ode::{init_large_s, integrate, AsymptoticData, Trajectory};
use crate::parametrix::{
    bessel_asymptotic_deviation, bessel_jump_residual, bessel_parametrix, bessel_region, chf_origin_coeffs,
    chf_origin_fit, chf_sector, decay_exponent, det, max_abs, ChfSolver,
};
use crate::specfun::Beta;
use crate::{Error, Result, C64};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "TACNODE_CONFIG";

/// Output schema version, reported in JSON metadata.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "tacnode", version, about = "Thinned tacnode gap probabilities and their integrable structure")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// F(s) = ln det(I - gamma K) on (-s, s).
    Det(Common),
    /// Large gap expansions and counting statistics.
    Asy(Common),
    /// Numerical F against the large gap expansion.
    Compare(Common),
    /// Randomised residuals of the Hamiltonian identities.
    HamCheck {
        #[command(flatten)]
        common: Common,
        /// Number of random states.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Integrate the Hamiltonian system from large-s data.
    OdeRun {
        #[command(flatten)]
        common: Common,
        #[arg(long = "s-from", allow_hyphen_values = true)]
        s_from: Option<f64>,
        #[arg(long = "s-to", allow_hyphen_values = true)]
        s_to: Option<f64>,
    },
    /// Jump, normalisation and origin checks of both parametrices.
    ParametrixCheck(Common),
    /// Mean and variance from finite differences of the expansion.
    Counting {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        nu: Option<f64>,
    },
}

#[derive(Debug, Args, Default, Clone)]
struct Common {
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    r1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    r2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    s1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    s2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<f64>,
    /// Comma-separated list of s values.
    #[arg(long, allow_hyphen_values = true)]
    s: Option<String>,
    /// Outer quadrature order (doubled once for the convergence check).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutFormat>,
    #[arg(long)]
    seed: Option<u64>,
    /// The undetermined constant of the gamma = 1 expansion.
    #[arg(long = "const-c", allow_hyphen_values = true)]
    const_c: Option<f64>,
}

/// Which table to produce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Command {
    Det,
    Asy,
    Compare,
    HamCheck { trials: usize },
    OdeRun { s_from: f64, s_to: f64 },
    ParametrixCheck,
    Counting { nu: f64 },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Det => "det",
            Command::Asy => "asy",
            Command::Compare => "compare",
            Command::HamCheck { .. } => "ham-check",
            Command::OdeRun { .. } => "ode-run",
            Command::ParametrixCheck => "parametrix-check",
            Command::Counting { .. } => "counting",
        }
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub params: TacnodeParams,
    pub s_values: Vec<f64>,
    pub n: usize,
    pub tol: f64,
    pub out_format: OutFormat,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub const_c: f64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.s_values.is_empty() || self.s_values.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::Usage("s values must be a nonempty list of positive numbers".into()));
        }
        if !(1e-12..=1e-4).contains(&self.tol) {
            return Err(Error::Usage(format!("tol {} outside [1e-12, 1e-4]", self.tol)));
        }
        if self.n < 16 {
            return Err(Error::Usage(format!("n = {} must be at least 16", self.n)));
        }
        Ok(())
    }
}

/// Parse a flat `key = value` file; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, val) = line
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("config line {}: expected key = value", k + 1)))?;
        map.insert(key.trim().replace('_', "-"), val.trim().to_string());
    }
    Ok(map)
}

const KNOWN_KEYS: [&str; 17] = [
    "gamma", "r1", "r2", "s1", "s2", "tau", "s", "n", "tol", "out", "format", "seed", "const-c", "trials", "s-from",
    "s-to", "nu",
];

struct Layer {
    file: HashMap<String, String>,
}

impl Layer {
    fn get<T: std::str::FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.file.get(key) {
            Some(s) => s
                .parse()
                .map_err(|_| Error::Usage(format!("config value {key} = {s:?} does not parse"))),
            None => Ok(default),
        }
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Usage(format!("cannot parse {t:?} in s list")))
        })
        .collect()
}

fn resolve(common: &Common, command: Command, file: HashMap<String, String>) -> Result<RunConfig> {
    for key in file.keys() {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::Usage(format!("unknown config key {key:?}")));
        }
    }
    let l = Layer { file };
    let params = TacnodeParams {
        r1: l.get(common.r1, "r1", 1.0)?,
        r2: l.get(common.r2, "r2", 1.0)?,
        s1: l.get(common.s1, "s1", 0.0)?,
        s2: l.get(common.s2, "s2", 0.0)?,
        tau: l.get(common.tau, "tau", 0.0)?,
        gamma: l.get(common.gamma, "gamma", 0.5)?,
    };
    let s_text = l.get(common.s.clone(), "s", "4,6,8".to_string())?;
    let format = match common.format {
        Some(f) => f,
        None => match l.file.get("format").map(|s| s.as_str()) {
            None | Some("csv") => OutFormat::Csv,
            Some("json") => OutFormat::Json,
            Some(other) => return Err(Error::Usage(format!("unknown format {other:?}"))),
        },
    };
    let out = match &common.out {
        Some(p) => Some(p.clone()),
        None => l.file.get("out").map(PathBuf::from),
    };
    let cfg = RunConfig {
        command,
        params,
        s_values: parse_list(&s_text)?,
        n: l.get(common.n, "n", 48)?,
        tol: l.get(common.tol, "tol", 1e-10)?,
        out_format: format,
        out,
        seed: l.get(common.seed, "seed", 42)?,
        const_c: l.get(common.const_c, "const-c", 0.0)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn build_config(cli: Cli, file: HashMap<String, String>) -> Result<RunConfig> {
    let l = Layer { file: file.clone() };
    let (common, command) = match cli.command {
        Sub::Det(c) => (c, Command::Det),
        Sub::Asy(c) => (c, Command::Asy),
        Sub::Compare(c) => (c, Command::Compare),
        Sub::HamCheck { common, trials } => {
            let trials = l.get(trials, "trials", 100)?;
            (common, Command::HamCheck { trials })
        }
        Sub::OdeRun { common, s_from, s_to } => {
            let s_from = l.get(s_from, "s-from", 200.0)?;
            let s_to = l.get(s_to, "s-to", 100.0)?;
            (common, Command::OdeRun { s_from, s_to })
        }
        Sub::ParametrixCheck(c) => (c, Command::ParametrixCheck),
        Sub::Counting { common, nu } => {
            let nu = l.get(nu, "nu", 1e-4)?;
            (common, Command::Counting { nu })
        }
    };
    resolve(&common, command, file)
}

/// Format a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Table sink that writes CSV rows as they arrive and JSON at the end.
struct Table<'a> {
    out: &'a mut dyn Write,
    format: OutFormat,
    header: Vec<&'static str>,
    rows: Vec<Value>,
    meta: Value,
}

#[derive(Clone)]
enum Cell {
    F(f64),
    I(i64),
    S(String),
    B(bool),
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::F(x) => fmt_f64(*x),
            Cell::I(i) => i.to_string(),
            Cell::S(s) => s.clone(),
            Cell::B(b) => b.to_string(),
        }
    }
    fn json(&self) -> Value {
        match self {
            // serde_json prints the shortest round-trip representation
            Cell::F(x) if x.is_finite() => json!(x),
            Cell::F(x) => json!(x.to_string()),
            Cell::I(i) => json!(i),
            Cell::S(s) => json!(s),
            Cell::B(b) => json!(b),
        }
    }
}

impl<'a> Table<'a> {
    fn new(out: &'a mut dyn Write, format: OutFormat, header: Vec<&'static str>, meta: Value) -> Result<Self> {
        let mut t = Self {
            out,
            format,
            header,
            rows: Vec::new(),
            meta,
        };
        if t.format == OutFormat::Csv {
            let h = t.header.join(",");
            t.line(&h)?;
        }
        Ok(t)
    }

    fn line(&mut self, s: &str) -> Result<()> {
        writeln!(self.out, "{s}")
            .and_then(|_| self.out.flush())
            .map_err(|e| Error::Usage(format!("cannot write output: {e}")))
    }

    fn row(&mut self, cells: Vec<Cell>) -> Result<()> {
        debug_assert_eq!(cells.len(), self.header.len());
        match self.format {
            OutFormat::Csv => {
                let l = cells.iter().map(|c| c.text()).collect::<Vec<_>>().join(",");
                self.line(&l)
            }
            OutFormat::Json => {
                let mut m = Map::new();
                for (h, c) in self.header.iter().zip(&cells) {
                    m.insert(h.to_string(), c.json());
                }
                self.rows.push(Value::Object(m));
                Ok(())
            }
        }
    }

    fn finish(mut self) -> Result<()> {
        if self.format == OutFormat::Json {
            let v = json!({ "meta": self.meta, "rows": self.rows });
            let s = serde_json::to_string_pretty(&v).map_err(|e| Error::Internal(e.to_string()))?;
            self.line(&s)?;
        }
        Ok(())
    }
}

fn meta(cfg: &RunConfig, extra: Value) -> Value {
    let mut m = json!({
        "schema": SCHEMA_VERSION,
        "command": cfg.command.name(),
        "params": cfg.params,
        "n": cfg.n,
        "tol": cfg.tol,
        "seed": cfg.seed,
    });
    if let (Value::Object(a), Value::Object(b)) = (&mut m, extra) {
        a.extend(b);
    }
    m
}

/// Outcome of a run: whether every checked tolerance held.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub breaches: Vec<String>,
}

fn check_converged(r: &crate::quad::GapResult, tol: f64) -> Result<()> {
    let bound = tol * r.log_det.abs().max(1.0);
    if r.doubling_delta > bound {
        return Err(Error::Convergence {
            what: format!("F(s = {}) under grid doubling", r.s),
            delta: r.doubling_delta,
            tol: bound,
        });
    }
    Ok(())
}

fn run_det(cfg: &RunConfig, out: &mut dyn Write) -> Result<Outcome> {
    let kc = KernelEvalConfig::default();
    let mut t = Table::new(
        out,
        cfg.out_format,
        vec!["s", "F", "doubling_delta", "order_used"],
        meta(cfg, json!({})),
    )?;
    for &s in &cfg.s_values {
        let r = gap_log_probability(s, &cfg.params, cfg.n, &kc)?;
        check_converged(&r, cfg.tol)?;
        t.row(vec![Cell::F(s), Cell::F(r.log_det), Cell::F(r.doubling_delta), Cell::I(r.order_used as i64)])?;
    }
    t.finish()?;
    Ok(Outcome { breaches: vec![] })
}

fn asy_opts(cfg: &RunConfig) -> AsymptoticOptions {
    AsymptoticOptions {
        c: cfg.const_c,
        ..Default::default()
    }
}

fn run_asy(cfg: &RunConfig, out: &mut dyn Write) -> Result<Outcome> {
    let opts = asy_opts(cfg);
    let mut warnings = Vec::new();
    let mut offset_only = false;
    let mut rows = Vec::new();
    for &s in &cfg.s_values {
        let f = f_expansion(s, &cfg.params, &opts)?;
        let h = h_expansion(s, &cfg.params)?;
        let c = counting_stats(s, &cfg.params)?;
        offset_only |= f.offset_only;
        warnings.extend(f.warnings.iter().cloned());
        rows.push(vec![
            Cell::F(s),
            Cell::F(f.value),
            Cell::F(h.value),
            Cell::F(f.error_exponent),
            Cell::F(c.mu),
            Cell::F(c.sigma2),
            Cell::F(c.var_const),
        ]);
    }
    warnings.dedup();
    let m = meta(
        cfg,
        json!({ "const_c": cfg.const_c, "offset_only": offset_only, "warnings": warnings }),
    );
    let mut t = Table::new(
        out,
        cfg.out_format,
        vec!["s", "F_asy", "H_asy", "F_error_exponent", "mu", "sigma2", "var_const"],
        m,
    )?;
    for r in rows {
        t.row(r)?;
    }
    t.finish()?;
    Ok(Outcome { breaches: vec![] })
}

fn run_compare(cfg: &RunConfig, out: &mut dyn Write) -> Result<Outcome> {
    let kc = KernelEvalConfig::default();
    let opts = asy_opts(cfg);
    let mut t = Table::new(
        out,
        cfg.out_format,
        vec!["s", "F_num", "F_asy", "resid", "resid_sqrts"],
        meta(cfg, json!({ "const_c": cfg.const_c })),
    )?;
    for &s in &cfg.s_values {
        let r = gap_log_probability(s, &cfg.params, cfg.n, &kc)?;
        check_converged(&r, cfg.tol)?;
        let a = f_expansion(s, &cfg.params, &opts)?.value;
        let resid = r.log_det - a;
        t.row(vec![Cell::F(s), Cell::F(r.log_det), Cell::F(a), Cell::F(resid), Cell::F(resid * s.sqrt())])?;
    }
    t.finish()?;
    Ok(Outcome { breaches: vec![] })
}

/// Thresholds of the randomised Hamiltonian suite.
pub const HAM_THRESHOLDS: [(&str, f64); 7] = [
    ("hamilton_gradient", 1e-6),
    ("structured_vs_expanded", 1e-12),
    ("zero_curvature", 1e-8),
    ("dh_ds", 1e-6),
    ("tau0", 1e-6),
    ("dgamma", 1e-6),
    ("constraint", 1e-13),
];

/// Maximum of each Hamiltonian residual over `trials` seeded random states.
pub fn ham_check_residuals(params: &TacnodeParams, seed: u64, trials: usize, s: f64) -> Result<Vec<(String, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = vec![0.0f64; HAM_THRESHOLDS.len()];
    for _ in 0..trials {
        let raw = PQState::random(&mut rng, 1.0);
        let st = PQState::random_constrained(&mut rng, 1.0);
        let dg = PQState::random(&mut rng, 1.0);
        let h1 = hamiltonian_structured(&raw, s, params);
        let h2 = hamiltonian_expanded(&raw, s, params);
        let rel = (h1 - h2).norm() / h2.norm().max(1.0);
        let ids = identity_residuals_with(&st, &dg, s, params, HamiltonianTerms::default())?;
        let proj = constraint_project(&raw)?;
        let vals = [
            hamilton_gradient_residual(&st, s, params)?,
            rel,
            zero_curvature_residual(&st, s, params)?,
            ids.dh_ds,
            ids.tau0.unwrap_or(0.0),
            ids.dgamma,
            proj.trace_a1().norm().max(proj.trace_a2().norm()) / proj.max_abs().powi(2).max(1.0),
        ];
        for (w, v) in worst.iter_mut().zip(vals) {
            *w = w.max(v);
        }
    }
    Ok(HAM_THRESHOLDS
        .iter()
        .zip(worst)
        .map(|((n, _), w)| (n.to_string(), w))
        .collect())
}

fn run_ham(cfg: &RunConfig, trials: usize, out: &mut dyn Write) -> Result<Outcome> {
    let mut t = Table::new(
        out,
        cfg.out_format,
        vec!["check", "s", "max_residual", "threshold", "pass"],
        meta(cfg, json!({ "trials": trials })),
    )?;
    let mut breaches = Vec::new();
    for &s in &cfg.s_values {
        let res = ham_check_residuals(&cfg.params, cfg.seed, trials, s)?;
        for ((name, v), (_, thr)) in res.iter().zip(HAM_THRESHOLDS) {
            let skip = name == "tau0" && cfg.params.tau != 0.0;
            let pass = skip || *v <= thr;
            if !pass {
                breaches.push(format!("{name} at s = {s}: {v:e} > {thr:e}"));
            }
            t.row(vec![Cell::S(name.clone()), Cell::F(s), Cell::F(*v), Cell::F(thr), Cell::B(pass)])?;
        }
    }
    t.finish()?;
    Ok(Outcome { breaches })
}

fn run_ode(cfg: &RunConfig, s_from: f64, s_to: f64, out: &mut dyn Write) -> Result<Outcome> {
    let beta = Beta::from_gamma(cfg.params.gamma)?;
    let start = init_large_s(s_from, &cfg.params, beta, &AsymptoticData::zero())?;
    let traj = integrate(&start, s_from, s_to, &cfg.params, cfg.tol)?;
    let mut breaches = Vec::new();
    if let Some(f) = &traj.failure {
        return Err(Error::Convergence {
            what: format!("trajectory stopped: {f}"),
            delta: f64::INFINITY,
            tol: cfg.tol,
        });
    }
    let drift = traj
        .states
        .iter()
        .map(|s| s.trace_a1().norm().max(s.trace_a2().norm()))
        .fold(0.0, f64::max);
    let scale = traj.states.iter().map(|s| s.max_abs()).fold(1.0, f64::max);
    if drift > 10.0 * cfg.tol * scale {
        breaches.push(format!("constraint drift {drift:e}"));
    }
    match cfg.out_format {
        OutFormat::Csv => traj
            .write_csv(&mut *out)
            .map_err(|e| Error::Usage(format!("cannot write output: {e}")))?,
        OutFormat::Json => write_traj_json(cfg, &traj, drift, out)?,
    }
    Ok(Outcome { breaches })
}

fn write_traj_json(cfg: &RunConfig, traj: &Trajectory, drift: f64, out: &mut dyn Write) -> Result<()> {
    let cols: Vec<String> = Trajectory::csv_header().split(',').map(String::from).collect();
    let rows: Vec<Value> = traj
        .s_grid
        .iter()
        .zip(&traj.states)
        .map(|(s, st)| {
            let mut v = vec![json!(s)];
            for c in st.to_array() {
                v.push(json!(c.re));
                v.push(json!(c.im));
            }
            Value::Array(v)
        })
        .collect();
    let m = meta(
        cfg,
        json!({ "columns": cols, "steps": traj.h_stats, "constraint_drift": drift }),
    );
    let s = serde_json::to_string_pretty(&json!({ "meta": m, "rows": rows }))
        .map_err(|e| Error::Internal(e.to_string()))?;
    writeln!(out, "{s}").map_err(|e| Error::Usage(format!("cannot write output: {e}")))
}

/// Radii of the jump checks.
pub const JUMP_RADII: [f64; 5] = [0.5, 1.0, 2.0, 5.0, 10.0];

/// One line of the parametrix report.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametrixRow {
    pub family: &'static str,
    pub check: &'static str,
    pub ray: i64,
    pub radius: f64,
    pub value: f64,
    pub threshold: f64,
    /// `true` when `value` must be at least `threshold` (decay exponents).
    pub lower_bound: bool,
}

impl ParametrixRow {
    pub fn pass(&self) -> bool {
        if self.lower_bound {
            self.value >= self.threshold
        } else {
            self.value <= self.threshold
        }
    }
}

/// All parametrix checks for one `beta`.
pub fn parametrix_report(beta: Beta) -> Result<Vec<ParametrixRow>> {
    let mut rows = Vec::new();
    let row = |family, check, ray, radius, value, threshold, lower_bound| ParametrixRow {
        family,
        check,
        ray,
        radius,
        value,
        threshold,
        lower_bound,
    };
    for j in 1..=3 {
        for r in JUMP_RADII {
            rows.push(row("bessel", "jump", j as i64, r, bessel_jump_residual(j, r)?, 1e-10, false));
        }
    }
    let chf = ChfSolver::new(beta)?;
    for j in 1..=6 {
        for r in JUMP_RADII {
            rows.push(row("chf", "jump", j as i64, r, chf.jump_residual(j, r)?, 1e-9, false));
        }
    }
    // unimodularity on a fixed set of points covering every region
    let mut bes_det: f64 = 0.0;
    let mut chf_det: f64 = 0.0;
    for k in 0..50 {
        let a = -3.1 + 6.2 * (k as f64 + 0.37) / 50.0;
        let r = 0.2 + 0.4 * k as f64;
        let z = C64::from_polar(r, a);
        let b = bessel_parametrix(z, bessel_region(z)?)?;
        bes_det = bes_det.max((det(&b.matrix) - 1.0).norm());
        let zc = C64::from_polar(r.min(10.0), a);
        let v = chf.eval(zc, chf_sector(zc)?)?;
        chf_det = chf_det.max((det(&v.matrix) - 1.0).norm());
    }
    rows.push(row("bessel", "det", 0, 0.0, bes_det, 1e-11, false));
    rows.push(row("chf", "det", 0, 0.0, chf_det, 1e-11, false));
    // decay of the deviation from the behaviour at infinity
    let radii = [1e2, 1e3, 1e4];
    for (k, a) in [0.0, 1.5, 2.9, -2.9, -1.5].iter().enumerate() {
        let devs: Vec<f64> = radii
            .iter()
            .map(|r| bessel_asymptotic_deviation(C64::from_polar(*r, *a)).map(|d| d.1))
            .collect::<Result<_>>()?;
        rows.push(row("bessel", "decay_exponent", k as i64, 0.0, decay_exponent(&radii, &devs), 0.9, true));
    }
    let radii = [1e2, 3e2, 1e3];
    for (k, a) in [0.5, 1.6, 2.8, -2.8, -1.9, -1.3, -0.5].iter().enumerate() {
        let devs: Vec<f64> = radii
            .iter()
            .map(|r| chf.asymptotic_deviation(C64::from_polar(*r, *a)))
            .collect::<Result<_>>()?;
        rows.push(row("chf", "decay_exponent", k as i64, 0.0, decay_exponent(&radii, &devs), 0.9, true));
    }
    let (u0, _) = chf_origin_coeffs(beta)?;
    let (f0, _) = chf_origin_fit(beta, 0.02)?;
    rows.push(row("chf", "upsilon0_fit", 0, 0.02, max_abs(&(u0 - f0)), 1e-7, false));
    Ok(rows)
}

fn run_parametrix(cfg: &RunConfig, out: &mut dyn Write) -> Result<Outcome> {
    let beta = if cfg.params.gamma < 1.0 {
        Beta::from_gamma(cfg.params.gamma)?
    } else {
        return Err(Error::Usage("parametrix-check needs gamma < 1".into()));
    };
    if beta.value.im >= 0.5 {
        return Err(Error::Usage(format!(
            "gamma = {} gives |beta| >= 1/2",
            cfg.params.gamma
        )));
    }
    let rows = parametrix_report(beta)?;
    let mut t = Table::new(
        out,
        cfg.out_format,
        vec!["family", "check", "ray", "radius", "value", "threshold", "pass"],
        meta(cfg, json!({ "beta_im": beta.value.im })),
    )?;
    let mut breaches = Vec::new();
    for r in rows {
        if !r.pass() {
            breaches.push(format!("{} {} ray {} r {}: {:e}", r.family, r.check, r.ray, r.radius, r.value));
        }
        t.row(vec![
            Cell::S(r.family.into()),
            Cell::S(r.check.into()),
            Cell::I(r.ray),
            Cell::F(r.radius),
            Cell::F(r.value),
            Cell::F(r.threshold),
            Cell::B(r.pass()),
        ])?;
    }
    t.finish()?;
    Ok(Outcome { breaches })
}

fn run_counting(cfg: &RunConfig, nu: f64, out: &mut dyn Write) -> Result<Outcome> {
    let opts = asy_opts(cfg);
    let mut t = Table::new(
        out,
        cfg.out_format,
        vec!["s", "mu", "sigma2", "var_const", "mu_fd", "sigma2_fd", "clt_bound"],
        meta(cfg, json!({ "nu": nu })),
    )?;
    for &s in &cfg.s_values {
        let c = counting_stats(s, &cfg.params)?;
        let (mu, s2) = generating_check(s, &cfg.params, nu, &opts)?;
        t.row(vec![
            Cell::F(s),
            Cell::F(c.mu),
            Cell::F(c.sigma2),
            Cell::F(c.var_const),
            Cell::F(mu),
            Cell::F(s2),
            Cell::F(c.clt_bound),
        ])?;
    }
    t.finish()?;
    Ok(Outcome { breaches: vec![] })
}

/// Execute a resolved configuration, writing the table to `out`.
pub fn run(cfg: &RunConfig, out: &mut dyn Write) -> Result<Outcome> {
    cfg.validate()?;
    match cfg.command {
        Command::Det => run_det(cfg, out),
        Command::Asy => run_asy(cfg, out),
        Command::Compare => run_compare(cfg, out),
        Command::HamCheck { trials } => run_ham(cfg, trials, out),
        Command::OdeRun { s_from, s_to } => run_ode(cfg, s_from, s_to, out),
        Command::ParametrixCheck => run_parametrix(cfg, out),
        Command::Counting { nu } => run_counting(cfg, nu, out),
    }
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) | Error::Domain(_) | Error::Unsupported(_) | Error::Sector(_) => 2,
        Error::Convergence { .. } | Error::BoundaryDegenerate(_) | Error::Internal(_) | Error::NonFinite { .. } => 3,
    }
}

fn load_config_file() -> Result<HashMap<String, String>> {
    match std::env::var_os(CONFIG_ENV) {
        None => Ok(HashMap::new()),
        Some(p) => {
            let text = std::fs::read_to_string(&p)
                .map_err(|e| Error::Usage(format!("cannot read {}: {e}", PathBuf::from(&p).display())))?;
            parse_config_text(&text)
        }
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 { write!(stdout, "{e}") } else { write!(stderr, "{e}") };
            return code;
        }
    };
    let result = load_config_file().and_then(|file| build_config(cli, file)).and_then(|cfg| {
        match &cfg.out {
            Some(path) => {
                let f = File::create(path)
                    .map_err(|e| Error::Usage(format!("cannot create {}: {e}", path.display())))?;
                let mut w = BufWriter::new(f);
                let r = run(&cfg, &mut w);
                w.flush().map_err(|e| Error::Usage(format!("cannot write {}: {e}", path.display())))?;
                r
            }
            None => run(&cfg, stdout),
        }
    });
    match result {
        Ok(o) if o.breaches.is_empty() => 0,
        Ok(o) => {
            for b in &o.breaches {
                let _ = writeln!(stderr, "tolerance breach: {b}");
            }
            1
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Entry point of the binary.
pub fn main_entry() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with_args(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_with_args(args.iter().copied(), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn config_text() {
        let m = parse_config_text("gamma = 0.3 # thinning\n\ns = 1, 2\nconst_c=1.5\n").unwrap();
        assert_eq!(m["gamma"], "0.3");
        assert_eq!(m["s"], "1, 2");
        assert_eq!(m["const-c"], "1.5");
        assert!(parse_config_text("nonsense").is_err());
    }

    #[test]
    fn flags_override_file() {
        let cli = Cli::try_parse_from(["tacnode", "det", "--gamma", "0.2"]).unwrap();
        let file = parse_config_text("gamma = 0.7\nr1 = 1\nn = 20").unwrap();
        let cfg = build_config(cli, file).unwrap();
        assert_eq!(cfg.params.gamma, 0.2);
        assert_eq!(cfg.n, 20);
        let cli = Cli::try_parse_from(["tacnode", "det"]).unwrap();
        assert!(build_config(cli, parse_config_text("bogus = 1").unwrap()).is_err());
    }

    #[test]
    fn det_gamma_zero() {
        let (code, out, _) = run_str(&["tacnode", "det", "--gamma", "0", "--s", "1,2"]);
        assert_eq!(code, 0);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], "s,F,doubling_delta,order_used");
        assert_eq!(lines.len(), 3);
        for l in &lines[1..] {
            assert_eq!(l.split(',').nth(1).unwrap().parse::<f64>().unwrap(), 0.0);
        }
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run_str(&["tacnode", "det", "--bogus"]).0, 2);
        assert_eq!(run_str(&["tacnode", "det", "--tol", "1"]).0, 2);
        assert_eq!(run_str(&["tacnode", "det", "--s", "1,x"]).0, 2);
        assert_eq!(run_str(&["tacnode", "det", "--s", "-1"]).0, 2);
    }

    #[test]
    fn asy_json() {
        let (code, out, _) = run_str(&["tacnode", "asy", "--gamma", "1", "--s", "2", "--format", "json"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["meta"]["offset_only"], json!(true));
        let f = v["rows"][0]["F_asy"].as_f64().unwrap();
        assert!((f + 8.0 / 6.0 + 2f64.ln() / 4.0).abs() < 1e-14);
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 123456.789] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}
