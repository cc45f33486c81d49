//! Observation CSV parsing, run configuration, and report/plot emission.
//!
//! Schemas are strict and fail hard: epidemic data errors (negative
//! actives, death revisions, date gaps) must surface at the boundary, not
//! propagate into the analysis. All emitted files are deterministic
//! functions of their inputs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::analyzer::{
    ActiveInflectionOracle, AnalyzerConfig, EpSpOrderingOracle, OutbreakEvents, SpInflectionOracle,
    TimescaleTimeline,
};
use crate::csp::CspConfig;
use crate::fit::{FitConfig, FitResult, FreeParam, LossWeights, ObservationSeries};
use crate::integrate::{Tolerances, Trajectory};
use crate::model::ModelParams;
use crate::StateVector;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("file is empty")]
    EmptyFile,
    #[error("line 1: expected header `date,active_cases,cumulative_deaths[,exposed]`, found `{found}`")]
    BadHeader { found: String },
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: date gap between {prev} and {next} (dates must be contiguous)")]
    DateGap { line: usize, prev: NaiveDate, next: NaiveDate },
    #[error("line {line}: negative value in column `{column}`")]
    NegativeValue { line: usize, column: &'static str },
    #[error("line {line}: cumulative_deaths decreases")]
    NonMonotoneDeaths { line: usize },
    #[error("line {line}: unknown config key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate config key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("missing required config key `{key}`")]
    MissingKey { key: &'static str },
    #[error("line {line}: bad value for `{key}`: {msg}")]
    BadValue { line: usize, key: String, msg: String },
    #[error("invalid window `{spec}`: expected `<start:end>` day offsets with start < end")]
    BadWindowSpec { spec: String },
    #[error("config invalid: {0}")]
    BadConfig(String),
}

// ---------------------------------------------------------------------------
// Observation CSV

/// Parse the strict observation schema
/// `date,active_cases,cumulative_deaths[,exposed]` (UTF-8, LF, ISO dates).
pub fn parse_observations_str(text: &str) -> Result<ObservationSeries, IoError> {
    if text.contains('\r') {
        return Err(IoError::Malformed { line: 0, msg: "CR found; the schema requires LF line endings".into() });
    }
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(IoError::EmptyFile);
    };
    let with_exposed = match header {
        "date,active_cases,cumulative_deaths" => false,
        "date,active_cases,cumulative_deaths,exposed" => true,
        other => return Err(IoError::BadHeader { found: other.to_string() }),
    };
    let ncols = if with_exposed { 4 } else { 3 };

    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut active: Vec<f64> = Vec::new();
    let mut deaths: Vec<f64> = Vec::new();
    let mut exposed: Vec<f64> = Vec::new();

    for (idx, raw) in lines {
        let line = idx + 1; // 1-based
        if raw.is_empty() {
            return Err(IoError::Malformed { line, msg: "empty row".into() });
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != ncols {
            return Err(IoError::Malformed {
                line,
                msg: format!("expected {ncols} columns, found {}", fields.len()),
            });
        }
        let date = NaiveDate::parse_from_str(fields[0], "%Y-%m-%d").map_err(|e| {
            IoError::Malformed { line, msg: format!("bad date `{}`: {e}", fields[0]) }
        })?;
        if let Some(&prev) = dates.last() {
            let gap = (date - prev).num_days();
            if gap != 1 {
                return Err(IoError::DateGap { line, prev, next: date });
            }
        }
        let parse_num = |s: &str, column: &'static str| -> Result<f64, IoError> {
            let v: f64 = s
                .parse()
                .map_err(|e| IoError::Malformed { line, msg: format!("bad number `{s}` in column `{column}`: {e}") })?;
            if !v.is_finite() {
                return Err(IoError::Malformed { line, msg: format!("non-finite value in column `{column}`") });
            }
            if v < 0.0 {
                return Err(IoError::NegativeValue { line, column });
            }
            Ok(v)
        };
        let a = parse_num(fields[1], "active_cases")?;
        let d = parse_num(fields[2], "cumulative_deaths")?;
        if let Some(&last) = deaths.last() {
            if d < last {
                return Err(IoError::NonMonotoneDeaths { line });
            }
        }
        if with_exposed {
            exposed.push(parse_num(fields[3], "exposed")?);
        }
        dates.push(date);
        active.push(a);
        deaths.push(d);
    }
    if dates.is_empty() {
        return Err(IoError::Malformed { line: 2, msg: "no data rows".into() });
    }
    Ok(ObservationSeries {
        dates,
        active_cases: active,
        cumulative_deaths: deaths,
        exposed: with_exposed.then_some(exposed),
    })
}

pub fn parse_observations(path: &Path) -> Result<ObservationSeries, IoError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| IoError::Read { path: path.to_path_buf(), source })?;
    parse_observations_str(&text)
}

pub fn write_observations_string(series: &ObservationSeries) -> String {
    let mut out = String::new();
    if series.exposed.is_some() {
        out.push_str("date,active_cases,cumulative_deaths,exposed\n");
    } else {
        out.push_str("date,active_cases,cumulative_deaths\n");
    }
    for i in 0..series.len() {
        let _ = write!(out, "{},{},{}", series.dates[i], series.active_cases[i], series.cumulative_deaths[i]);
        if let Some(e) = &series.exposed {
            let _ = write!(out, ",{}", e[i]);
        }
        out.push('\n');
    }
    out
}

pub fn write_observations(series: &ObservationSeries, path: &Path) -> Result<(), IoError> {
    std::fs::write(path, write_observations_string(series))
        .map_err(|source| IoError::Write { path: path.to_path_buf(), source })
}

// ---------------------------------------------------------------------------
// Run configuration

/// Fully resolved run configuration. Loaded from a flat `key = value` file;
/// unknown keys are rejected.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub tp: f64,
    pub wave_start_date: NaiveDate,
    pub horizon_days: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub eps_expl: f64,
    pub cond_threshold: f64,
    pub coalescence_gap: f64,
    pub persistence_days: usize,
    pub beta_insp: f64,
    pub beta_issp: f64,
    pub aincp: f64,
    pub aip: f64,
    pub mu_insp: f64,
    pub mu_issp: f64,
    pub mu_tp: f64,
    pub ss: f64,
    pub ep0: f64,
    pub insp0: f64,
    pub issp0: f64,
    pub rp0: f64,
    pub idp0: f64,
    pub free_params: Vec<FreeParam>,
    pub bounds: Vec<(FreeParam, (f64, f64))>,
    pub budget: usize,
    pub restarts: usize,
    pub w_active: f64,
    pub w_deaths: f64,
    pub w_exposed: f64,
    pub window_a: Option<(usize, usize)>,
    pub window_b: Option<(usize, usize)>,
    pub ranking_days: Vec<usize>,
    pub out_dir: PathBuf,
}

pub fn parse_window(spec: &str) -> Result<(usize, usize), IoError> {
    let bad = || IoError::BadWindowSpec { spec: spec.to_string() };
    let (a, b) = spec.split_once(':').ok_or_else(bad)?;
    let start: usize = a.trim().parse().map_err(|_| bad())?;
    let end: usize = b.trim().parse().map_err(|_| bad())?;
    if start >= end {
        return Err(bad());
    }
    Ok((start, end))
}

impl RunConfig {
    pub fn parse_str(text: &str) -> Result<RunConfig, IoError> {
        let mut seen: Vec<(String, String, usize)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((k, v)) = trimmed.split_once('=') else {
                return Err(IoError::Malformed { line, msg: format!("expected `key = value`, found `{trimmed}`") });
            };
            let key = k.trim().to_string();
            let val = v.trim().to_string();
            if seen.iter().any(|(sk, _, _)| *sk == key) {
                return Err(IoError::DuplicateKey { line, key });
            }
            seen.push((key, val, line));
        }

        let get = |key: &str| seen.iter().find(|(k, _, _)| k == key).map(|(_, v, l)| (v.clone(), *l));
        let f64_key = |key: &str, default: Option<f64>| -> Result<f64, IoError> {
            match get(key) {
                Some((v, line)) => v
                    .parse::<f64>()
                    .map_err(|e| IoError::BadValue { line, key: key.to_string(), msg: e.to_string() })
                    .and_then(|x| {
                        if x.is_finite() {
                            Ok(x)
                        } else {
                            Err(IoError::BadValue { line, key: key.to_string(), msg: "must be finite".into() })
                        }
                    }),
                None => default.ok_or(IoError::MissingKey { key: "tp" }),
            }
        };
        let usize_key = |key: &str, default: usize| -> Result<usize, IoError> {
            match get(key) {
                Some((v, line)) => v
                    .parse::<usize>()
                    .map_err(|e| IoError::BadValue { line, key: key.to_string(), msg: e.to_string() }),
                None => Ok(default),
            }
        };

        const KNOWN: &[&str] = &[
            "tp", "wave_start_date", "horizon_days", "rel_tol", "abs_tol", "eps_expl",
            "cond_threshold", "coalescence_gap", "persistence_days", "beta_insp", "beta_issp",
            "aincp", "aip", "mu_insp", "mu_issp", "mu_tp", "ss", "ep0", "insp0", "issp0", "rp0",
            "idp0", "free_params", "budget", "restarts", "w_active", "w_deaths", "w_exposed",
            "window_a", "window_b", "ranking_days", "out_dir", "bound_beta_insp",
            "bound_beta_issp", "bound_ss", "bound_ep0", "bound_aincp", "bound_aip",
            "bound_mu_insp", "bound_mu_issp", "bound_mu_tp",
        ];
        for (key, _, line) in &seen {
            if !KNOWN.contains(&key.as_str()) {
                return Err(IoError::UnknownKey { line: *line, key: key.clone() });
            }
        }

        let tp = f64_key("tp", None)?;
        let wave_start_date = match get("wave_start_date") {
            Some((v, line)) => NaiveDate::parse_from_str(&v, "%Y-%m-%d").map_err(|e| {
                IoError::BadValue { line, key: "wave_start_date".into(), msg: e.to_string() }
            })?,
            None => return Err(IoError::MissingKey { key: "wave_start_date" }),
        };

        let free_params = match get("free_params") {
            Some((v, line)) => {
                let mut out = Vec::new();
                if !v.is_empty() {
                    for part in v.split(',') {
                        let name = part.trim();
                        let p = FreeParam::parse(name).ok_or_else(|| IoError::BadValue {
                            line,
                            key: "free_params".into(),
                            msg: format!("unknown parameter `{name}`"),
                        })?;
                        out.push(p);
                    }
                }
                out
            }
            None => vec![FreeParam::BetaInsp, FreeParam::BetaIssp, FreeParam::Ss, FreeParam::InitialExposed],
        };

        let mut bounds = Vec::new();
        for (key, param) in [
            ("bound_beta_insp", FreeParam::BetaInsp),
            ("bound_beta_issp", FreeParam::BetaIssp),
            ("bound_ss", FreeParam::Ss),
            ("bound_ep0", FreeParam::InitialExposed),
            ("bound_aincp", FreeParam::Aincp),
            ("bound_aip", FreeParam::Aip),
            ("bound_mu_insp", FreeParam::MuInsp),
            ("bound_mu_issp", FreeParam::MuIssp),
            ("bound_mu_tp", FreeParam::MuTp),
        ] {
            if let Some((v, line)) = get(key) {
                let bad = |msg: &str| IoError::BadValue { line, key: key.into(), msg: msg.into() };
                let (lo, hi) = v.split_once(':').ok_or_else(|| bad("expected `lo:hi`"))?;
                let lo: f64 = lo.trim().parse().map_err(|_| bad("bad lower bound"))?;
                let hi: f64 = hi.trim().parse().map_err(|_| bad("bad upper bound"))?;
                if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                    return Err(bad("need 0 < lo < hi, finite"));
                }
                bounds.push((param, (lo, hi)));
            }
        }

        let window_key = |key: &str| -> Result<Option<(usize, usize)>, IoError> {
            match get(key) {
                Some((v, _)) => parse_window(&v).map(Some),
                None => Ok(None),
            }
        };

        let ranking_days = match get("ranking_days") {
            Some((v, line)) => {
                let mut days = Vec::new();
                if !v.is_empty() {
                    for part in v.split(',') {
                        days.push(part.trim().parse::<usize>().map_err(|e| IoError::BadValue {
                            line,
                            key: "ranking_days".into(),
                            msg: e.to_string(),
                        })?);
                    }
                }
                days
            }
            None => vec![0],
        };

        let cfg = RunConfig {
            tp,
            wave_start_date,
            horizon_days: f64_key("horizon_days", Some(150.0))?,
            rel_tol: f64_key("rel_tol", Some(1e-8))?,
            abs_tol: f64_key("abs_tol", Some(1e-10 * tp))?,
            eps_expl: f64_key("eps_expl", Some(1e-10))?,
            cond_threshold: f64_key("cond_threshold", Some(1e10))?,
            coalescence_gap: f64_key("coalescence_gap", Some(0.05))?,
            persistence_days: usize_key("persistence_days", 3)?,
            beta_insp: f64_key("beta_insp", Some(0.5))?,
            beta_issp: f64_key("beta_issp", Some(0.4))?,
            aincp: f64_key("aincp", Some(5.1))?,
            aip: f64_key("aip", Some(14.0))?,
            mu_insp: f64_key("mu_insp", Some(1e-4))?,
            mu_issp: f64_key("mu_issp", Some(3e-3))?,
            mu_tp: f64_key("mu_tp", Some(3.5e-5))?,
            ss: f64_key("ss", Some(0.1))?,
            ep0: f64_key("ep0", Some(100.0))?,
            insp0: f64_key("insp0", Some(0.0))?,
            issp0: f64_key("issp0", Some(0.0))?,
            rp0: f64_key("rp0", Some(0.0))?,
            idp0: f64_key("idp0", Some(0.0))?,
            free_params,
            bounds,
            budget: usize_key("budget", 4000)?,
            restarts: usize_key("restarts", 4)?,
            w_active: f64_key("w_active", Some(1.0))?,
            w_deaths: f64_key("w_deaths", Some(1.0))?,
            w_exposed: f64_key("w_exposed", Some(0.0))?,
            window_a: window_key("window_a")?,
            window_b: window_key("window_b")?,
            ranking_days,
            out_dir: PathBuf::from(get("out_dir").map(|(v, _)| v).unwrap_or_else(|| "out".into())),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, IoError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| IoError::Read { path: path.to_path_buf(), source })?;
        Self::parse_str(&text)
    }

    fn validate(&self) -> Result<(), IoError> {
        self.model_params().validate().map_err(|e| IoError::BadConfig(e.to_string()))?;
        if self.horizon_days < 1.0 {
            return Err(IoError::BadConfig(format!(
                "horizon_days must be >= 1, got {}",
                self.horizon_days
            )));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(IoError::BadConfig("tolerances must be positive".into()));
        }
        if self.persistence_days == 0 {
            return Err(IoError::BadConfig("persistence_days must be >= 1".into()));
        }
        if self.budget == 0 || self.restarts == 0 {
            return Err(IoError::BadConfig("budget and restarts must be >= 1".into()));
        }
        if self.w_active < 0.0 || self.w_deaths < 0.0 || self.w_exposed < 0.0 {
            return Err(IoError::BadConfig("loss weights must be >= 0".into()));
        }
        let init_total = self.ep0 + self.insp0 + self.issp0 + self.rp0 + self.idp0;
        if init_total > self.tp {
            return Err(IoError::BadConfig(format!(
                "initial seeding ({init_total}) exceeds tp ({})",
                self.tp
            )));
        }
        Ok(())
    }

    pub fn model_params(&self) -> ModelParams {
        ModelParams {
            beta_insp: self.beta_insp,
            beta_issp: self.beta_issp,
            aincp: self.aincp,
            aip: self.aip,
            mu_insp: self.mu_insp,
            mu_issp: self.mu_issp,
            mu_tp: self.mu_tp,
            ss: self.ss,
            tp: self.tp,
        }
    }

    pub fn initial_state(&self) -> StateVector {
        StateVector {
            sp: self.tp - self.ep0 - self.insp0 - self.issp0 - self.rp0 - self.idp0,
            ep: self.ep0,
            insp: self.insp0,
            issp: self.issp0,
            rp: self.rp0,
            idp: self.idp0,
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances { rel: self.rel_tol, abs: self.abs_tol }
    }

    pub fn analyzer_config(&self) -> AnalyzerConfig {
        AnalyzerConfig {
            csp: CspConfig { eps_expl: self.eps_expl, cond_threshold: self.cond_threshold },
            coalescence_gap: self.coalescence_gap,
            persistence_days: self.persistence_days,
        }
    }

    pub fn fit_config(&self, seed: u64) -> FitConfig {
        FitConfig {
            free: self.free_params.clone(),
            bounds: self.bounds.clone(),
            base: self.model_params(),
            ep0_guess: self.ep0,
            budget: self.budget,
            restarts: self.restarts,
            weights: LossWeights { active: self.w_active, deaths: self.w_deaths, exposed: self.w_exposed },
            seed,
            tolerances: self.tolerances(),
        }
    }
}

// ---------------------------------------------------------------------------
// Report emission

/// Round to 6 significant digits for deterministic report formatting.
/// Non-finite values map to JSON null.
fn sig6(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("formatted float");
    json!(rounded)
}

fn opt_day(d: Option<usize>) -> Value {
    match d {
        Some(v) => json!(v),
        None => Value::Null,
    }
}

fn opt_i64(d: Option<i64>) -> Value {
    match d {
        Some(v) => json!(v),
        None => Value::Null,
    }
}

fn opt_sig6(d: Option<f64>) -> Value {
    match d {
        Some(v) => sig6(v),
        None => Value::Null,
    }
}

pub fn events_json(events: &OutbreakEvents) -> Value {
    let mut rankings = Map::new();
    for (day, shares) in &events.path_rankings {
        let rows: Vec<Value> = shares
            .iter()
            .map(|s| json!({"path": format!("R{}", s.path), "percent": sig6(s.percent)}))
            .collect();
        rankings.insert(day.to_string(), Value::Array(rows));
    }
    json!({
        "coalescence_day": opt_day(events.coalescence_day),
        "disappearance_day": opt_day(events.disappearance_day),
        "inflection_day_numeric": opt_day(events.inflection_day_numeric),
        "last_explosive_day": opt_day(events.last_explosive_day),
        "tau_explosive_start": opt_sig6(events.tau_explosive_start),
        "tau_explosive_end": opt_sig6(events.tau_explosive_end),
        "path_rankings": Value::Object(rankings),
    })
}

pub fn oracles_json(
    sp: &SpInflectionOracle,
    active: &ActiveInflectionOracle,
    ordering: &EpSpOrderingOracle,
) -> Value {
    json!({
        "sp_inflection_day": opt_day(sp.sp_inflection_day),
        "max_r1_plus_r2_day": opt_day(sp.max_r1_plus_r2_day),
        "sp_gap_days": opt_i64(sp.gap_days),
        "active_inflection_day": opt_day(active.active_inflection_day),
        "max_ep_day": opt_day(active.max_ep_day),
        "active_gap_days": opt_i64(active.gap_days),
        "ep_inflection_day": opt_day(ordering.ep_inflection_day),
        "ep_sp_gap_days": opt_i64(ordering.gap_days),
        "ep_before_sp": match ordering.ordering_holds() {
            Some(b) => json!(b),
            None => Value::Null,
        },
    })
}

pub fn params_json(p: &ModelParams) -> Value {
    json!({
        "beta_insp": sig6(p.beta_insp),
        "beta_issp": sig6(p.beta_issp),
        "aincp": sig6(p.aincp),
        "aip": sig6(p.aip),
        "mu_insp": sig6(p.mu_insp),
        "mu_issp": sig6(p.mu_issp),
        "mu_tp": sig6(p.mu_tp),
        "ss": sig6(p.ss),
        "tp": sig6(p.tp),
    })
}

fn state_json(s: &StateVector) -> Value {
    json!({
        "sp": sig6(s.sp),
        "ep": sig6(s.ep),
        "insp": sig6(s.insp),
        "issp": sig6(s.issp),
        "rp": sig6(s.rp),
        "idp": sig6(s.idp),
    })
}

pub fn fit_json(fit: &FitResult, window: (usize, usize), seed: u64) -> Value {
    json!({
        "schema": 1,
        "params": params_json(&fit.params),
        "initial_state": state_json(&fit.initial_state),
        "loss": sig6(fit.loss),
        "residual_active": sig6(fit.residual_active),
        "residual_deaths": sig6(fit.residual_deaths),
        "residual_exposed": opt_sig6(fit.residual_exposed),
        "evaluations": fit.evaluations,
        "converged": fit.converged,
        "window": {"start": window.0, "end": window.1},
        "seed": seed,
    })
}

/// Read a previously emitted fit.json back into parameters and an initial
/// state (the analyze command consumes fit output this way).
pub fn parse_fit_json_str(text: &str) -> Result<(ModelParams, StateVector), IoError> {
    let v: Value = serde_json::from_str(text)
        .map_err(|e| IoError::Malformed { line: 0, msg: format!("bad JSON: {e}") })?;
    let num = |obj: &Value, key: &str| -> Result<f64, IoError> {
        obj.get(key).and_then(Value::as_f64).ok_or_else(|| IoError::Malformed {
            line: 0,
            msg: format!("fit JSON missing numeric field `{key}`"),
        })
    };
    let p = &v["params"];
    let params = ModelParams {
        beta_insp: num(p, "beta_insp")?,
        beta_issp: num(p, "beta_issp")?,
        aincp: num(p, "aincp")?,
        aip: num(p, "aip")?,
        mu_insp: num(p, "mu_insp")?,
        mu_issp: num(p, "mu_issp")?,
        mu_tp: num(p, "mu_tp")?,
        ss: num(p, "ss")?,
        tp: num(p, "tp")?,
    };
    let s = &v["initial_state"];
    let state = StateVector {
        sp: num(s, "sp")?,
        ep: num(s, "ep")?,
        insp: num(s, "insp")?,
        issp: num(s, "issp")?,
        rp: num(s, "rp")?,
        idp: num(s, "idp")?,
    };
    params.validate().map_err(|e| IoError::Malformed { line: 0, msg: e.to_string() })?;
    Ok((params, state))
}

pub fn parse_fit_json(path: &Path) -> Result<(ModelParams, StateVector), IoError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| IoError::Read { path: path.to_path_buf(), source })?;
    parse_fit_json_str(&text)
}

/// Full analysis report: events, appendix-oracle checks, optional fit.
pub fn report_json(
    wave_start: NaiveDate,
    events: &OutbreakEvents,
    oracles: Value,
    fit: Option<Value>,
) -> Value {
    json!({
        "schema": 1,
        "wave_start_date": wave_start.to_string(),
        "events": events_json(events),
        "appendix_oracles": oracles,
        "fit": fit.unwrap_or(Value::Null),
    })
}

/// Serialize deterministically: keys are emitted sorted (serde_json maps
/// are ordered), floats were rounded on insertion, trailing newline fixed.
pub fn emit_json(value: &Value, path: &Path) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).expect("valid JSON value");
    text.push('\n');
    std::fs::write(path, text).map_err(|source| IoError::Write { path: path.to_path_buf(), source })
}

// ---------------------------------------------------------------------------
// Plot data

/// Daily active-cases CSV: `day,insp,issp,active_total`.
pub fn actives_csv(trajectory: &Trajectory) -> String {
    let mut out = String::from("day,insp,issp,active_total\n");
    for (d, s) in trajectory.states.iter().enumerate() {
        let _ = writeln!(out, "{d},{},{},{}", s.insp, s.issp, s.active());
    }
    out
}

/// Timescale curves CSV: `day,mode,tau_days,class`, one row per tracked
/// mode per day.
pub fn timescales_csv(timeline: &TimescaleTimeline) -> String {
    let mut out = String::from("day,mode,tau_days,class\n");
    for rec in &timeline.days {
        // Emit in persistent track order so each mode forms one curve.
        let mut order: Vec<usize> = (0..6).collect();
        order.sort_by_key(|&i| rec.track_ids[i]);
        for i in order {
            let tau = rec.analysis.timescale(i);
            let class = rec.analysis.class(i).as_str();
            let _ = writeln!(out, "{},{},{},{}", rec.day, rec.track_ids[i], tau, class);
        }
    }
    out
}

/// Write `timescales.csv` and `actives.csv` under `dir`.
pub fn emit_plot_data(
    timeline: &TimescaleTimeline,
    trajectory: &Trajectory,
    dir: &Path,
) -> Result<(), IoError> {
    std::fs::create_dir_all(dir).map_err(|source| IoError::Write { path: dir.to_path_buf(), source })?;
    let ts = dir.join("timescales.csv");
    std::fs::write(&ts, timescales_csv(timeline)).map_err(|source| IoError::Write { path: ts.clone(), source })?;
    let ac = dir.join("actives.csv");
    std::fs::write(&ac, actives_csv(trajectory)).map_err(|source| IoError::Write { path: ac.clone(), source })?;
    Ok(())
}
