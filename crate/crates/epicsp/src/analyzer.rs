//! Walks a daily trajectory, builds the timescale timeline, detects the
//! coalescence and disappearance of explosive timescales, locates the
//! numeric inflection point of the active cases, ranks transition paths
//! and cross-checks the analytic inflection relations.
//!
//! All detectors work at day granularity with persistence guards, so the
//! same timeline always yields the same events.

use chrono::NaiveDate;
use thiserror::Error;

use crate::csp::{self, CspConfig, CspDiagnostics, EigenAnalysis};
use crate::integrate::Trajectory;
use crate::model::{self, ModelError, ModelParams, StoichiometricMatrix};

#[derive(Debug, Error)]
pub enum AnalyzerError {
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("day {day} out of range (timeline has {len} days)")]
    DayOutOfRange { day: usize, len: usize },
    #[error("no explosive mode on day {day}")]
    NoExplosiveMode { day: usize },
    #[error("eigenbasis degenerate on day {day}; diagnostics unavailable")]
    DegenerateDay { day: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Detector thresholds. The coalescence gap and persistence guard are
/// defaults, not claims about how the events were originally read off
/// plots; both are plain config knobs.
#[derive(Debug, Clone, Copy)]
pub struct AnalyzerConfig {
    pub csp: CspConfig,
    /// Relative timescale gap below which two explosive modes count as
    /// coalesced (when they have not already formed a complex pair).
    pub coalescence_gap: f64,
    /// Days an event condition must persist before it is reported.
    pub persistence_days: usize,
}

impl Default for AnalyzerConfig {
    fn default() -> Self {
        Self { csp: CspConfig::default(), coalescence_gap: 0.05, persistence_days: 3 }
    }
}

/// Analysis of one trajectory day. `track_ids` maps the day's mode order
/// onto persistent track labels so classification flips do not scramble
/// the timescale curves.
#[derive(Debug, Clone)]
pub struct DayRecord {
    pub day: usize,
    pub analysis: EigenAnalysis,
    /// None when the eigenbasis that day is degenerate.
    pub diagnostics: Option<CspDiagnostics>,
    pub track_ids: [usize; 6],
}

#[derive(Debug, Clone)]
pub struct TimescaleTimeline {
    pub start_date: NaiveDate,
    pub days: Vec<DayRecord>,
}

impl TimescaleTimeline {
    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    fn explosive_count(&self, day: usize) -> usize {
        self.days[day].analysis.explosive_modes().len()
    }

    /// Last day on which any explosive mode exists.
    pub fn last_explosive_day(&self) -> Option<usize> {
        (0..self.len()).rev().find(|&d| self.explosive_count(d) > 0)
    }
}

/// Per-day eigen analysis and diagnostics along a daily-grid trajectory.
/// Degenerate days are carried with their diagnostics withheld.
pub fn build_timeline(
    trajectory: &Trajectory,
    params: &ModelParams,
    cfg: &AnalyzerConfig,
) -> Result<TimescaleTimeline, AnalyzerError> {
    if trajectory.is_empty() {
        return Err(AnalyzerError::EmptyTrajectory);
    }
    let stoich = StoichiometricMatrix::new(params.ss);
    let mut days = Vec::with_capacity(trajectory.len());
    for (day, state) in trajectory.states.iter().enumerate() {
        let j = model::jacobian(state, params)?;
        let analysis = csp::eigen_decompose(&j, &cfg.csp).expect("finite Jacobian");
        let diagnostics = if analysis.is_degenerate() {
            None
        } else {
            let rates = model::compute_rates(state, params)?;
            let terms = model::transition_jacobian_terms(state, params)?;
            Some(
                CspDiagnostics::compute(&analysis, &rates, &stoich, &terms)
                    .expect("non-degenerate analysis"),
            )
        };
        let track_ids = match days.last() {
            None => [0, 1, 2, 3, 4, 5],
            Some(prev) => assign_tracks(prev, &analysis),
        };
        days.push(DayRecord { day, analysis, diagnostics, track_ids });
    }
    Ok(TimescaleTimeline { start_date: trajectory.t0, days })
}

/// Match the day's modes to the previous day's by eigenvalue proximity
/// (greedy nearest pairing in the complex plane).
fn assign_tracks(prev: &DayRecord, analysis: &EigenAnalysis) -> [usize; 6] {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(36);
    for i in 0..6 {
        for j in 0..6 {
            let d = (analysis.eigenvalue(i) - prev.analysis.eigenvalue(j)).norm();
            pairs.push((d, i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut ids = [usize::MAX; 6];
    let mut used_prev = [false; 6];
    for (_, i, j) in pairs {
        if ids[i] == usize::MAX && !used_prev[j] {
            ids[i] = prev.track_ids[j];
            used_prev[j] = true;
        }
    }
    ids
}

/// First day d >= 1 where day d-1 still has an explosive mode and the next
/// `persistence_days` days (d included) have none.
pub fn detect_disappearance(timeline: &TimescaleTimeline, cfg: &AnalyzerConfig) -> Option<usize> {
    let n = timeline.len();
    let guard = cfg.persistence_days.max(1);
    for d in 1..n {
        if d + guard > n {
            break; // guard window incomplete
        }
        if timeline.explosive_count(d - 1) > 0
            && (d..d + guard).all(|k| timeline.explosive_count(k) == 0)
        {
            return Some(d);
        }
    }
    None
}

/// First day where the two fastest explosive modes have either formed a
/// complex conjugate pair or closed their relative timescale gap below the
/// configured threshold.
pub fn detect_coalescence(timeline: &TimescaleTimeline, cfg: &AnalyzerConfig) -> Option<usize> {
    for d in 0..timeline.len() {
        let analysis = &timeline.days[d].analysis;
        let explosive = analysis.explosive_modes();
        if explosive.len() < 2 {
            continue;
        }
        let (m1, m2) = (explosive[0], explosive[1]);
        if analysis.pair_partner(m1) == Some(m2) {
            return Some(d);
        }
        let (t1, t2) = (analysis.timescale(m1), analysis.timescale(m2));
        if t1.is_finite() && t2.is_finite() && (t1 - t2).abs() / t1 < cfg.coalescence_gap {
            return Some(d);
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Curvature {
    PlusToMinus,
    MinusToPlus,
}

/// Day-granular inflection detection via centered second differences with
/// a persistence guard and a noise floor of 1e-9 times the series scale.
fn inflection_day(series: &[f64], dir: Curvature, persistence: usize) -> Option<usize> {
    let n = series.len();
    if n < 5 {
        return None;
    }
    let flip = match dir {
        Curvature::PlusToMinus => 1.0,
        Curvature::MinusToPlus => -1.0,
    };
    let scale = series.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let thr = 1e-9 * scale;
    let dd = |d: usize| flip * (series[d + 1] - 2.0 * series[d] + series[d - 1]);
    let guard = persistence.max(1);
    let mut seen_positive = false;
    for d in 1..n - 1 {
        let v = dd(d);
        if v > thr {
            seen_positive = true;
        } else if v < -thr && seen_positive {
            let run_end = d + guard; // requires dd at days d..d+guard-1
            if run_end - 1 <= n - 2 && (d..run_end).all(|k| dd(k) < -thr) {
                return Some(d);
            }
        }
    }
    None
}

/// First day where the active-cases second difference turns from positive
/// to negative and stays negative for the persistence window.
pub fn detect_inflection_numeric(series: &[f64], persistence_days: usize) -> Option<usize> {
    inflection_day(series, Curvature::PlusToMinus, persistence_days)
}

/// Interior argmax: an extremum at either end of the window is treated as
/// absent (no event), not as a maximum.
fn argmax_interior(series: &[f64]) -> Option<usize> {
    if series.len() < 3 {
        return None;
    }
    let mut best = 0usize;
    for (i, &v) in series.iter().enumerate() {
        if v > series[best] {
            best = i;
        }
    }
    if best == 0 || best == series.len() - 1 {
        None
    } else {
        Some(best)
    }
}

/// Signed percentage share of one transition path in a mode's timescale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathShare {
    /// Transition id, 1-based (R1..R10).
    pub path: usize,
    pub percent: f64,
}

/// TPI row of the fastest explosive mode on `day`, as signed percentages
/// sorted by magnitude.
pub fn rank_paths(timeline: &TimescaleTimeline, day: usize) -> Result<Vec<PathShare>, AnalyzerError> {
    let record = timeline
        .days
        .get(day)
        .ok_or(AnalyzerError::DayOutOfRange { day, len: timeline.len() })?;
    let mode = record
        .analysis
        .fastest_explosive()
        .ok_or(AnalyzerError::NoExplosiveMode { day })?;
    let diagnostics = record.diagnostics.as_ref().ok_or(AnalyzerError::DegenerateDay { day })?;
    let mut shares: Vec<PathShare> = diagnostics.tpi.values[mode]
        .iter()
        .enumerate()
        .map(|(k, &v)| PathShare { path: k + 1, percent: 100.0 * v })
        .collect();
    shares.sort_by(|a, b| b.percent.abs().total_cmp(&a.percent.abs()).then(a.path.cmp(&b.path)));
    Ok(shares)
}

/// Detected events of one outbreak wave.
#[derive(Debug, Clone)]
pub struct OutbreakEvents {
    pub coalescence_day: Option<usize>,
    pub disappearance_day: Option<usize>,
    pub inflection_day_numeric: Option<usize>,
    /// Fastest explosive timescale on day 0, days.
    pub tau_explosive_start: Option<f64>,
    /// Fastest explosive timescale on the last day an explosive mode exists.
    pub tau_explosive_end: Option<f64>,
    pub last_explosive_day: Option<usize>,
    /// Path rankings per day, only for days with a usable explosive mode.
    pub path_rankings: Vec<(usize, Vec<PathShare>)>,
}

/// Run every detector over a finished timeline and collect path rankings
/// for the requested days (day 0 and the last explosive day are always
/// attempted).
pub fn analyze_outbreak(
    timeline: &TimescaleTimeline,
    trajectory: &Trajectory,
    cfg: &AnalyzerConfig,
    ranking_days: &[usize],
) -> OutbreakEvents {
    let active: Vec<f64> = trajectory.states.iter().map(|s| s.active()).collect();
    let last_explosive = timeline.last_explosive_day();
    let tau_at = |day: usize| {
        let a = &timeline.days[day].analysis;
        a.fastest_explosive().map(|m| a.timescale(m))
    };

    let mut days: Vec<usize> = ranking_days.to_vec();
    days.push(0);
    if let Some(d) = last_explosive {
        days.push(d);
    }
    days.sort_unstable();
    days.dedup();
    let path_rankings = days
        .into_iter()
        .filter_map(|d| rank_paths(timeline, d).ok().map(|r| (d, r)))
        .collect();

    OutbreakEvents {
        coalescence_day: detect_coalescence(timeline, cfg),
        disappearance_day: detect_disappearance(timeline, cfg),
        inflection_day_numeric: detect_inflection_numeric(&active, cfg.persistence_days),
        tau_explosive_start: tau_at(0),
        tau_explosive_end: last_explosive.and_then(tau_at),
        last_explosive_day: last_explosive,
        path_rankings,
    }
}

/// Analytic-relation check: the inflection of SP should fall on the day
/// R1 + R2 peaks (exact when mu_tp = 0).
#[derive(Debug, Clone, Copy)]
pub struct SpInflectionOracle {
    pub sp_inflection_day: Option<usize>,
    pub max_r1_plus_r2_day: Option<usize>,
    pub gap_days: Option<i64>,
}

pub fn oracle_sp_inflection(
    trajectory: &Trajectory,
    params: &ModelParams,
    persistence_days: usize,
) -> Result<SpInflectionOracle, AnalyzerError> {
    let sp = trajectory.component(0);
    let sp_inflection_day = inflection_day(&sp, Curvature::MinusToPlus, persistence_days);
    let mut r12 = Vec::with_capacity(trajectory.len());
    for state in &trajectory.states {
        let r = model::compute_rates(state, params)?;
        r12.push(r.rate(1) + r.rate(2));
    }
    let max_r1_plus_r2_day = argmax_interior(&r12);
    let gap_days = match (sp_inflection_day, max_r1_plus_r2_day) {
        (Some(a), Some(b)) => Some(a as i64 - b as i64),
        _ => None,
    };
    Ok(SpInflectionOracle { sp_inflection_day, max_r1_plus_r2_day, gap_days })
}

/// Analytic-relation check: the inflection of the active cases should fall
/// on the day EP peaks.
#[derive(Debug, Clone, Copy)]
pub struct ActiveInflectionOracle {
    pub active_inflection_day: Option<usize>,
    pub max_ep_day: Option<usize>,
    pub gap_days: Option<i64>,
}

pub fn oracle_active_inflection_vs_max_ep(
    trajectory: &Trajectory,
    persistence_days: usize,
) -> ActiveInflectionOracle {
    let active: Vec<f64> = trajectory.states.iter().map(|s| s.active()).collect();
    let active_inflection_day = inflection_day(&active, Curvature::PlusToMinus, persistence_days);
    let max_ep_day = argmax_interior(&trajectory.component(1));
    let gap_days = match (active_inflection_day, max_ep_day) {
        (Some(a), Some(b)) => Some(a as i64 - b as i64),
        _ => None,
    };
    ActiveInflectionOracle { active_inflection_day, max_ep_day, gap_days }
}

/// Analytic-relation check: the EP inflection precedes the SP inflection.
#[derive(Debug, Clone, Copy)]
pub struct EpSpOrderingOracle {
    pub ep_inflection_day: Option<usize>,
    pub sp_inflection_day: Option<usize>,
    /// sp day minus ep day, whole days; non-negative when the ordering holds.
    pub gap_days: Option<i64>,
}

impl EpSpOrderingOracle {
    pub fn ordering_holds(&self) -> Option<bool> {
        self.gap_days.map(|g| g >= 0)
    }
}

pub fn oracle_ep_before_sp_inflection(
    trajectory: &Trajectory,
    persistence_days: usize,
) -> EpSpOrderingOracle {
    let ep = trajectory.component(1);
    let sp = trajectory.component(0);
    let ep_inflection_day = inflection_day(&ep, Curvature::PlusToMinus, persistence_days);
    let sp_inflection_day = inflection_day(&sp, Curvature::MinusToPlus, persistence_days);
    let gap_days = match (ep_inflection_day, sp_inflection_day) {
        (Some(e), Some(s)) => Some(s as i64 - e as i64),
        _ => None,
    };
    EpSpOrderingOracle { ep_inflection_day, sp_inflection_day, gap_days }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::{integrate, Tolerances};
    use crate::model::StateVector;
    use nalgebra::{Matrix6, Vector6};

    fn date() -> NaiveDate {
        NaiveDate::from_ymd_opt(2021, 7, 1).unwrap()
    }

    fn outbreak_params() -> ModelParams {
        ModelParams {
            beta_insp: 0.7,
            beta_issp: 0.56,
            aincp: 5.1,
            aip: 14.0,
            mu_insp: 1e-4,
            mu_issp: 3e-3,
            mu_tp: 0.0,
            ss: 0.1,
            tp: 1e7,
        }
    }

    fn outbreak_trajectory(horizon: f64) -> (Trajectory, ModelParams) {
        let p = outbreak_params();
        let init = StateVector { sp: p.tp - 200.0, ep: 200.0, ..StateVector::zero() };
        let traj = integrate(&p, &init, date(), horizon, Tolerances::default_for(&p)).unwrap();
        (traj, p)
    }

    fn timeline_from_matrices(mats: &[Matrix6<f64>]) -> TimescaleTimeline {
        let cfg = AnalyzerConfig::default();
        let days = mats
            .iter()
            .enumerate()
            .map(|(day, m)| DayRecord {
                day,
                analysis: csp::eigen_decompose(m, &cfg.csp).unwrap(),
                diagnostics: None,
                track_ids: [0, 1, 2, 3, 4, 5],
            })
            .collect();
        TimescaleTimeline { start_date: date(), days }
    }

    #[test]
    fn empty_trajectory_is_rejected() {
        let p = outbreak_params();
        let traj = Trajectory { t0: date(), times: vec![], states: vec![], derivatives: vec![] };
        assert!(matches!(
            build_timeline(&traj, &p, &AnalyzerConfig::default()),
            Err(AnalyzerError::EmptyTrajectory)
        ));
    }

    #[test]
    fn disease_free_timeline_has_no_explosive_modes() {
        let p = outbreak_params();
        let init = StateVector { sp: p.tp, ..StateVector::zero() };
        let traj = integrate(&p, &init, date(), 30.0, Tolerances::default_for(&p)).unwrap();
        let tl = build_timeline(&traj, &p, &AnalyzerConfig::default()).unwrap();
        assert!(tl.days.iter().all(|d| d.analysis.explosive_modes().is_empty()));
        assert_eq!(detect_disappearance(&tl, &AnalyzerConfig::default()), None);
    }

    #[test]
    fn outbreak_day0_has_explosive_mode_when_growth_rate_positive() {
        let (traj, p) = outbreak_trajectory(30.0);
        // Independent growth-rate oracle: log-slope of EP over early days.
        let ep = traj.component(1);
        let slope = (ep[6].ln() - ep[2].ln()) / 4.0;
        assert!(slope > 0.0, "no exponential growth, slope {slope}");
        let tl = build_timeline(&traj, &p, &AnalyzerConfig::default()).unwrap();
        assert!(!tl.days[0].analysis.explosive_modes().is_empty());
    }

    #[test]
    fn tracked_timescales_are_continuous_away_from_events() {
        let (traj, p) = outbreak_trajectory(120.0);
        let cfg = AnalyzerConfig::default();
        let tl = build_timeline(&traj, &p, &cfg).unwrap();
        let coal = detect_coalescence(&tl, &cfg);
        let dis = detect_disappearance(&tl, &cfg);
        let near_event = |d: usize| {
            [coal, dis].iter().flatten().any(|&e| (d as i64 - e as i64).abs() <= 1)
        };
        for w in tl.days.windows(2) {
            let [prev, cur] = w else { unreachable!() };
            if near_event(cur.day) {
                continue;
            }
            for (i_cur, &tid) in cur.track_ids.iter().enumerate() {
                let Some(i_prev) = prev.track_ids.iter().position(|&t| t == tid) else { continue };
                if cur.analysis.class(i_cur) != prev.analysis.class(i_prev) {
                    continue;
                }
                let (a, b) = (prev.analysis.timescale(i_prev), cur.analysis.timescale(i_cur));
                if !a.is_finite() || !b.is_finite() {
                    continue;
                }
                let jump = (b - a).abs() / a;
                assert!(jump < 0.5, "day {} track {tid}: tau {a} -> {b}", cur.day);
            }
        }
    }

    #[test]
    fn disappearance_requires_persistence() {
        // Explosive on every day except the very last: the guard window is
        // incomplete, so no event.
        let expl = Matrix6::from_diagonal(&Vector6::new(-1.0, -2.0, -3.0, -4.0, -5.0, 0.5));
        let diss = Matrix6::from_diagonal(&Vector6::new(-1.0, -2.0, -3.0, -4.0, -5.0, -0.5));
        let mut mats = vec![expl; 10];
        mats.push(diss);
        let tl = timeline_from_matrices(&mats);
        assert_eq!(detect_disappearance(&tl, &AnalyzerConfig::default()), None);

        // Three clean dissipative days after day 6 pin the event at day 7.
        let mats: Vec<_> = (0..11).map(|d| if d <= 6 { expl } else { diss }).collect();
        let tl = timeline_from_matrices(&mats);
        assert_eq!(detect_disappearance(&tl, &AnalyzerConfig::default()), Some(7));

        // A one-day flutter back to explosive resets the guard.
        let mats: Vec<_> = (0..12)
            .map(|d| if d <= 6 || d == 8 { expl } else { diss })
            .collect();
        let tl = timeline_from_matrices(&mats);
        assert_eq!(detect_disappearance(&tl, &AnalyzerConfig::default()), Some(9));
    }

    #[test]
    fn coalescence_on_constructed_collision() {
        // Two real explosive eigenvalues approach and merge into a complex
        // pair on day 5.
        let mut mats = Vec::new();
        for d in 0..10 {
            let mut m = Matrix6::from_diagonal(&Vector6::new(0.0, 0.0, -3.0, -4.0, -5.0, -6.0));
            if d < 5 {
                // Separated real pair: 0.5 +- spread.
                let spread = 0.3 * (5 - d) as f64 / 5.0;
                m[(0, 0)] = 0.5 + spread;
                m[(1, 1)] = 0.5 - spread;
            } else {
                // Rotation block: 0.5 +- 0.2i.
                m[(0, 0)] = 0.5;
                m[(1, 1)] = 0.5;
                m[(0, 1)] = 0.2;
                m[(1, 0)] = -0.2;
            }
            mats.push(m);
        }
        let tl = timeline_from_matrices(&mats);
        // Day 4 has gap 0.12/0.56 > 5%, day 5 is the complex pair.
        assert_eq!(detect_coalescence(&tl, &AnalyzerConfig::default()), Some(5));
    }

    #[test]
    fn coalescence_none_with_single_explosive_mode() {
        let expl = Matrix6::from_diagonal(&Vector6::new(-1.0, -2.0, -3.0, -4.0, -5.0, 0.5));
        let tl = timeline_from_matrices(&vec![expl; 8]);
        assert_eq!(detect_coalescence(&tl, &AnalyzerConfig::default()), None);
    }

    #[test]
    fn synthetic_outbreak_event_ordering_and_agreement() {
        let (traj, p) = outbreak_trajectory(120.0);
        let cfg = AnalyzerConfig::default();
        let tl = build_timeline(&traj, &p, &cfg).unwrap();
        let events = analyze_outbreak(&tl, &traj, &cfg, &[]);
        let coal = events.coalescence_day.expect("coalescence");
        let dis = events.disappearance_day.expect("disappearance");
        let infl = events.inflection_day_numeric.expect("inflection");
        assert!(coal <= dis, "coalescence {coal} after disappearance {dis}");
        assert!((dis as i64 - infl as i64).abs() <= 2, "dis {dis} vs infl {infl}");
        let (t0, te) = (
            events.tau_explosive_start.unwrap(),
            events.tau_explosive_end.unwrap(),
        );
        assert!(te > t0, "tau end {te} <= tau start {t0}");
    }

    #[test]
    fn inflection_detector_cases() {
        // Pure convexity: no sign change.
        let quad: Vec<f64> = (0..40).map(|d| (d * d) as f64).collect();
        assert_eq!(detect_inflection_numeric(&quad, 3), None);

        // Logistic: inflection within one day of the midpoint.
        let t0 = 30.0;
        let logistic: Vec<f64> =
            (0..80).map(|d| 1e6 / (1.0 + (-(d as f64 - t0) / 5.0).exp())).collect();
        let found = detect_inflection_numeric(&logistic, 3).expect("inflection");
        assert!((found as f64 - t0).abs() <= 1.0, "found {found}");

        // Strictly linear: second differences sit inside the noise floor.
        let linear: Vec<f64> = (0..40).map(|d| 5.0 * d as f64 + 3.0).collect();
        assert_eq!(detect_inflection_numeric(&linear, 3), None);

        // Too short.
        assert_eq!(detect_inflection_numeric(&[1.0, 2.0, 4.0, 7.0], 3), None);
    }

    #[test]
    fn path_ranking_normalization_and_pattern() {
        let (traj, p) = outbreak_trajectory(120.0);
        let cfg = AnalyzerConfig::default();
        let tl = build_timeline(&traj, &p, &cfg).unwrap();
        let r0 = rank_paths(&tl, 0).unwrap();
        let total: f64 = r0.iter().map(|s| s.percent.abs()).sum();
        assert!((total - 100.0).abs() < 0.1, "total {total}");
        let positives: Vec<usize> =
            r0.iter().filter(|s| s.percent > 0.0).take(2).map(|s| s.path).collect();
        assert!(positives.contains(&1) && positives.contains(&4), "{positives:?}");
        let top_neg = r0.iter().find(|s| s.percent < 0.0).unwrap();
        assert_eq!(top_neg.path, 6);

        // Share of R6 grows toward the end of the explosive period.
        let last = tl.last_explosive_day().unwrap();
        let r_end = rank_paths(&tl, last).unwrap();
        let r6_0 = r0.iter().find(|s| s.path == 6).unwrap().percent;
        let r6_end = r_end.iter().find(|s| s.path == 6).unwrap().percent;
        assert!(r6_end.abs() > r6_0.abs(), "R6 {r6_0}% -> {r6_end}%");
    }

    #[test]
    fn rank_paths_errors_without_explosive_mode() {
        let p = outbreak_params();
        let init = StateVector { sp: p.tp, ..StateVector::zero() };
        let traj = integrate(&p, &init, date(), 10.0, Tolerances::default_for(&p)).unwrap();
        let tl = build_timeline(&traj, &p, &AnalyzerConfig::default()).unwrap();
        assert!(matches!(rank_paths(&tl, 3), Err(AnalyzerError::NoExplosiveMode { day: 3 })));
        assert!(matches!(rank_paths(&tl, 99), Err(AnalyzerError::DayOutOfRange { .. })));
    }

    #[test]
    fn appendix_oracles_on_synthetic_outbreak() {
        let (traj, p) = outbreak_trajectory(120.0);
        let sp = oracle_sp_inflection(&traj, &p, 3).unwrap();
        assert!(sp.gap_days.unwrap().abs() <= 1, "sp gap {:?}", sp.gap_days);
        let act = oracle_active_inflection_vs_max_ep(&traj, 3);
        assert!(act.gap_days.unwrap().abs() <= 1, "active gap {:?}", act.gap_days);
        let ord = oracle_ep_before_sp_inflection(&traj, 3);
        assert_eq!(ord.ordering_holds(), Some(true));
        assert!(ord.gap_days.unwrap() >= 0);
    }

    #[test]
    fn appendix_oracles_absent_without_outbreak() {
        let p = ModelParams { beta_insp: 0.01, beta_issp: 0.01, ..outbreak_params() };
        let init = StateVector { sp: p.tp - 100.0, ep: 100.0, ..StateVector::zero() };
        let traj = integrate(&p, &init, date(), 60.0, Tolerances::default_for(&p)).unwrap();
        let sp = oracle_sp_inflection(&traj, &p, 3).unwrap();
        assert_eq!(sp.sp_inflection_day, None);
        assert_eq!(sp.gap_days, None);
        let ord = oracle_ep_before_sp_inflection(&traj, 3);
        assert_eq!(ord.ep_inflection_day, None);
        assert_eq!(ord.ordering_holds(), None);
    }

    #[test]
    fn oracle_small_mu_tp_stays_within_two_days() {
        let p = ModelParams { mu_tp: 1e-5, ..outbreak_params() };
        let init = StateVector { sp: p.tp - 200.0, ep: 200.0, ..StateVector::zero() };
        let traj = integrate(&p, &init, date(), 120.0, Tolerances::default_for(&p)).unwrap();
        let sp = oracle_sp_inflection(&traj, &p, 3).unwrap();
        assert!(sp.gap_days.unwrap().abs() <= 2);
        let act = oracle_active_inflection_vs_max_ep(&traj, 3);
        assert!(act.gap_days.unwrap().abs() <= 2);
    }
}
