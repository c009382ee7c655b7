//! Fixed hover-point experiments: every scenario flown from the same spawn to
//! six hover points, repeated, with distance curves and summary metrics.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::PhysicalParams;
use crate::env::{
    AttackSource, Controller, EnvConfig, EpisodeOutcome, Layers, LayeredEnv, QuadEnv,
    RewardWeights, Role, TRAJECTORY_HEADER,
};
use crate::error::{Error, Result};
use crate::nn::PolicyParams;
use crate::training::{write_json, FrozenPolicy};

pub const SUITE_SPAWN: [f64; 3] = [0.0, 0.0, 0.5];
pub const SUITE_HOVER_POINTS: [[f64; 3]; 6] = [
    [0.85, 0.90, 1.7],
    [0.0, 0.0, 0.5],
    [0.0, 0.0, 1.2],
    [0.7, 0.85, 0.7],
    [0.0, -1.0, 1.5],
    [-1.0, -1.0, 0.5],
];
/// A run has settled once its distance stays below this for good (m).
pub const SETTLING_THRESHOLD: f64 = 0.1;
/// Oscillation is measured over this final stretch of each run (s).
pub const OSCILLATION_WINDOW_S: f64 = 2.0;

/// Which layers fly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Nominal,
    OptimalAttack,
    RandomAttack,
    AttackDefense,
    RandomDefense,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::Nominal,
        Scenario::OptimalAttack,
        Scenario::RandomAttack,
        Scenario::AttackDefense,
        Scenario::RandomDefense,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Nominal => "nominal",
            Scenario::OptimalAttack => "optimal_attack",
            Scenario::RandomAttack => "random_attack",
            Scenario::AttackDefense => "attack_defense",
            Scenario::RandomDefense => "random_defense",
        }
    }

    fn needs_attacker(self) -> bool {
        matches!(self, Scenario::OptimalAttack | Scenario::AttackDefense)
    }

    fn needs_defender(self) -> bool {
        matches!(self, Scenario::AttackDefense | Scenario::RandomDefense)
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown scenario {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSuite {
    pub spawn: Vector3<f64>,
    pub hover_points: Vec<Vector3<f64>>,
    pub repeats: usize,
    pub horizon_s: f64,
    pub attack_start_s: f64,
    pub scenarios: Vec<Scenario>,
    pub physics: PhysicalParams,
    pub weights: RewardWeights,
}

impl Default for ExperimentSuite {
    fn default() -> Self {
        ExperimentSuite {
            spawn: Vector3::from(SUITE_SPAWN),
            hover_points: SUITE_HOVER_POINTS.iter().map(|&p| Vector3::from(p)).collect(),
            repeats: 20,
            horizon_s: 10.0,
            attack_start_s: 2.0,
            scenarios: Scenario::ALL.to_vec(),
            physics: PhysicalParams::default(),
            weights: RewardWeights::default(),
        }
    }
}

impl ExperimentSuite {
    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::Config("suite repeats must be at least 1".into()));
        }
        if self.hover_points.is_empty() || self.scenarios.is_empty() {
            return Err(Error::Config("suite needs hover points and scenarios".into()));
        }
        self.env_config().validate(&self.physics)
    }

    pub fn env_config(&self) -> EnvConfig {
        EnvConfig {
            horizon_s: self.horizon_s,
            attack_start_s: self.attack_start_s,
            ..EnvConfig::default()
        }
    }

    /// Label used as the hover-point key in summaries and file names.
    pub fn hover_label(p: &Vector3<f64>) -> String {
        format!("({:.2}, {:.2}, {:.2})", p.x, p.y, p.z)
    }
}

/// Trained policies available to a suite. Scenarios whose layers are missing
/// are skipped.
#[derive(Debug, Clone, Default)]
pub struct SuitePolicies {
    pub nominal: Option<PolicyParams>,
    pub attacker: Option<PolicyParams>,
    pub defender: Option<PolicyParams>,
}

/// Checkpoint files for [`SuitePolicies`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteCheckpoints {
    pub nominal: Option<PathBuf>,
    pub attacker: Option<PathBuf>,
    pub defender: Option<PathBuf>,
}

impl SuiteCheckpoints {
    /// Loads every path given, returning the policies and their file hashes.
    pub fn load(&self) -> Result<(SuitePolicies, BTreeMap<String, String>)> {
        let mut hashes = BTreeMap::new();
        let mut load = |name: &str, path: &Option<PathBuf>| -> Result<Option<PolicyParams>> {
            path.as_ref()
                .map(|p| {
                    let f = FrozenPolicy::load(p)?;
                    hashes.insert(name.to_string(), f.file_hash);
                    Ok(f.params)
                })
                .transpose()
        };
        let policies = SuitePolicies {
            nominal: load("nominal", &self.nominal)?,
            attacker: load("attacker", &self.attacker)?,
            defender: load("defender", &self.defender)?,
        };
        Ok((policies, hashes))
    }
}

impl SuitePolicies {
    fn layers(&self, scenario: Scenario) -> Option<Layers> {
        let ctl = |p: &PolicyParams| Controller {
            params: Arc::new(p.clone()),
            stochastic: false,
        };
        let nominal = Some(ctl(self.nominal.as_ref()?));
        let attack = match scenario {
            Scenario::Nominal => None,
            Scenario::OptimalAttack | Scenario::AttackDefense => {
                Some(AttackSource::Policy(ctl(self.attacker.as_ref()?)))
            }
            Scenario::RandomAttack | Scenario::RandomDefense => Some(AttackSource::Random),
        };
        let defense = if scenario.needs_defender() {
            Some(ctl(self.defender.as_ref()?))
        } else {
            None
        };
        Some(Layers {
            nominal,
            attack,
            defense,
        })
    }

    fn missing(&self, scenario: Scenario) -> Vec<&'static str> {
        let mut m = Vec::new();
        if self.nominal.is_none() {
            m.push("nominal");
        }
        if scenario.needs_attacker() && self.attacker.is_none() {
            m.push("attacker");
        }
        if scenario.needs_defender() && self.defender.is_none() {
            m.push("defender");
        }
        m
    }
}

/// Euclidean distance of each logged position to `hover`.
pub fn distance_series(positions: &[Vector3<f64>], hover: &Vector3<f64>) -> Vec<f64> {
    positions.iter().map(|p| (p - hover).norm()).collect()
}

/// First time from which `dist` stays below `threshold` until the end.
pub fn settling_time(times: &[f64], dist: &[f64], threshold: f64) -> Option<f64> {
    let last_out = dist.iter().rposition(|&d| d >= threshold);
    match last_out {
        None => times.first().copied(),
        Some(i) if i + 1 < times.len() => Some(times[i + 1]),
        Some(_) => None,
    }
}

/// Half the peak-to-peak distance over the final `window_s` seconds.
pub fn oscillation_amplitude(times: &[f64], dist: &[f64], window_s: f64) -> f64 {
    let Some(&end) = times.last() else {
        return 0.0;
    };
    let tail = times
        .iter()
        .zip(dist)
        .filter(|(t, _)| **t >= end - window_s + 1e-9)
        .map(|(_, d)| *d);
    let (lo, hi) = tail.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| {
        (lo.min(d), hi.max(d))
    });
    if lo.is_finite() {
        (hi - lo) / 2.0
    } else {
        0.0
    }
}

/// Per-step mean of several distance curves. Step `k` averages the runs that
/// are still flying at `k`; the second vector holds those counts.
pub fn mean_curve(curves: &[Vec<f64>]) -> (Vec<f64>, Vec<usize>) {
    let len = curves.iter().map(Vec::len).max().unwrap_or(0);
    let mut sum = vec![0.0; len];
    let mut n = vec![0usize; len];
    for c in curves {
        for (k, d) in c.iter().enumerate() {
            sum[k] += d;
            n[k] += 1;
        }
    }
    (sum.iter().zip(&n).map(|(s, &n)| s / n as f64).collect(), n)
}

/// Metrics of one scenario at one hover point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMetrics {
    pub crash_rate: f64,
    /// Mean over crashed runs.
    pub mean_time_to_crash_s: Option<f64>,
    pub mean_final_dist_m: f64,
    /// Mean over runs that settled.
    pub mean_settling_s: Option<f64>,
    /// Mean over all runs of the half peak-to-peak distance in the last 2 s.
    pub oscillation_m: f64,
    pub n_runs: usize,
}

impl PointMetrics {
    pub fn from_runs(runs: &[EpisodeOutcome], dt: f64) -> Self {
        let n = runs.len();
        let mean = |v: Vec<f64>| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
        let crashes: Vec<f64> = runs.iter().filter_map(|r| r.time_to_crash(dt)).collect();
        let mut settles = Vec::new();
        let mut osc = Vec::with_capacity(n);
        for r in runs {
            let (t, d) = run_series(r);
            if !r.crashed {
                if let Some(s) = settling_time(&t, &d, SETTLING_THRESHOLD) {
                    settles.push(s);
                }
            }
            osc.push(oscillation_amplitude(&t, &d, OSCILLATION_WINDOW_S));
        }
        PointMetrics {
            crash_rate: crashes.len() as f64 / n.max(1) as f64,
            mean_time_to_crash_s: mean(crashes),
            mean_final_dist_m: mean(runs.iter().map(|r| r.final_distance).collect()).unwrap_or(0.0),
            mean_settling_s: mean(settles),
            oscillation_m: mean(osc).unwrap_or(0.0),
            n_runs: n,
        }
    }
}

/// Time stamps and distances of a run, ending with the state it finished in.
fn run_series(run: &EpisodeOutcome) -> (Vec<f64>, Vec<f64>) {
    let mut t: Vec<f64> = run.trajectory.iter().map(|r| r.t).collect();
    let mut d: Vec<f64> = run.trajectory.iter().map(|r| r.dist).collect();
    if let (Some(&last), Some(&prev)) = (t.last(), t.get(t.len().saturating_sub(2))) {
        let dt = if t.len() > 1 { last - prev } else { last };
        t.push(last + dt.max(0.0));
        d.push(run.final_distance);
    }
    (t, d)
}

/// `{scenario → {hover point → metrics}}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MetricsSummary(pub BTreeMap<String, BTreeMap<String, PointMetrics>>);

impl MetricsSummary {
    pub fn get(&self, scenario: Scenario, hover: &str) -> Option<&PointMetrics> {
        self.0.get(scenario.as_str())?.get(hover)
    }

    /// Crash rate over every run of `scenario`.
    pub fn overall_crash_rate(&self, scenario: Scenario) -> Option<f64> {
        let pts = self.0.get(scenario.as_str())?;
        let runs: usize = pts.values().map(|m| m.n_runs).sum();
        let crashes: f64 = pts.values().map(|m| m.crash_rate * m.n_runs as f64).sum();
        (runs > 0).then(|| crashes / runs as f64)
    }

    /// Mean final distance over every run of `scenario`.
    pub fn overall_final_dist(&self, scenario: Scenario) -> Option<f64> {
        let pts = self.0.get(scenario.as_str())?;
        let runs: usize = pts.values().map(|m| m.n_runs).sum();
        let total: f64 = pts.values().map(|m| m.mean_final_dist_m * m.n_runs as f64).sum();
        (runs > 0).then(|| total / runs as f64)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// All runs of a suite, in `(scenario, hover index) → repeats` order.
#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub summary: MetricsSummary,
    pub runs: BTreeMap<(Scenario, usize), Vec<EpisodeOutcome>>,
    pub skipped: Vec<(Scenario, String)>,
}

/// Seed of repeat `r` at hover point `h`. Shared by every scenario so the
/// random attack sees the same draws wherever it appears.
pub fn repeat_seed(base: u64, hover_index: usize, repeat: usize) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((hover_index as u64) << 32)
        .wrapping_add(repeat as u64)
}

/// Flies every scenario whose policies are available. Nothing is written.
pub fn run_suite_in_memory(
    suite: &ExperimentSuite,
    policies: &SuitePolicies,
    seed: u64,
) -> Result<SuiteResult> {
    suite.validate()?;
    let env_config = suite.env_config();
    let mut summary = MetricsSummary::default();
    let mut runs = BTreeMap::new();
    let mut skipped = Vec::new();
    for &scenario in &suite.scenarios {
        let Some(layers) = policies.layers(scenario) else {
            let why = format!("missing {} checkpoint", policies.missing(scenario).join(" and "));
            log::warn!("skipping scenario {scenario}: {why}");
            skipped.push((scenario, why));
            continue;
        };
        let mut env = LayeredEnv::new(
            QuadEnv::new(env_config.clone(), suite.physics)?,
            suite.weights,
            None,
            layers,
        )?;
        let per_point = summary.0.entry(scenario.as_str().to_string()).or_default();
        for (h, hover) in suite.hover_points.iter().enumerate() {
            let mut outcomes = Vec::with_capacity(suite.repeats);
            for r in 0..suite.repeats {
                let mut rng = ChaCha8Rng::seed_from_u64(repeat_seed(seed, h, r));
                env.core.reset_to(suite.spawn, *hover);
                outcomes.push(env.run_episode(Role::Nominal, &mut rng)?);
            }
            per_point.insert(
                ExperimentSuite::hover_label(hover),
                PointMetrics::from_runs(&outcomes, suite.physics.dt),
            );
            runs.insert((scenario, h), outcomes);
        }
    }
    Ok(SuiteResult {
        summary,
        runs,
        skipped,
    })
}

pub const SUMMARY_FILE: &str = "summary.json";

/// Path of one trajectory CSV below a suite's output directory.
pub fn trajectory_path(out_dir: &Path, scenario: Scenario, hover_index: usize, repeat: usize) -> PathBuf {
    out_dir
        .join("trajectories")
        .join(scenario.as_str())
        .join(format!("hp{hover_index}_run{repeat:02}.csv"))
}

/// Writes trajectories, mean curves, SVG plots and the summary JSON.
pub fn write_suite(result: &SuiteResult, suite: &ExperimentSuite, out_dir: &Path) -> Result<()> {
    for (&(scenario, h), outcomes) in &result.runs {
        let mut curves = Vec::with_capacity(outcomes.len());
        for (r, o) in outcomes.iter().enumerate() {
            o.write_csv(&trajectory_path(out_dir, scenario, h, r))?;
            curves.push(o.trajectory.iter().map(|row| row.dist).collect::<Vec<_>>());
        }
        let (mean, n) = mean_curve(&curves);
        let dt = suite.physics.dt;
        let path = out_dir.join("curves").join(format!("{scenario}_hp{h}.csv"));
        fs::create_dir_all(path.parent().expect("has parent")).map_err(|e| Error::io(&path, e))?;
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["t", "mean_dist", "n_runs"])?;
        for (k, (m, c)) in mean.iter().zip(&n).enumerate() {
            w.write_record([(k as f64 * dt).to_string(), m.to_string(), c.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        let title = format!(
            "{scenario} at {}",
            ExperimentSuite::hover_label(&suite.hover_points[h])
        );
        let svg = render_svg(&title, &curves, &mean, dt, suite.horizon_s, suite.attack_start_s);
        let path = out_dir.join("plots").join(format!("{scenario}_hp{h}.svg"));
        fs::create_dir_all(path.parent().expect("has parent")).map_err(|e| Error::io(&path, e))?;
        fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
    }
    write_json(&out_dir.join(SUMMARY_FILE), &result.summary)
}

/// Loads checkpoints, runs the suite and writes everything into `out_dir`.
pub fn run_suite(
    suite: &ExperimentSuite,
    checkpoints: &SuiteCheckpoints,
    seed: u64,
    out_dir: &Path,
) -> Result<SuiteResult> {
    let (policies, _) = checkpoints.load()?;
    let result = run_suite_in_memory(suite, &policies, seed)?;
    write_suite(&result, suite, out_dir)?;
    Ok(result)
}

/// Reads the `dist` column of a trajectory CSV.
pub fn read_distance_column(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path)?;
    let col = TRAJECTORY_HEADER.iter().position(|h| *h == "dist").expect("dist column");
    r.records()
        .map(|rec| {
            let rec = rec?;
            rec.get(col)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InvalidInput(format!("{}: bad dist field", path.display())))
        })
        .collect()
}

fn render_svg(
    title: &str,
    curves: &[Vec<f64>],
    mean: &[f64],
    dt: f64,
    horizon_s: f64,
    attack_s: f64,
) -> String {
    const W: f64 = 640.0;
    const H: f64 = 360.0;
    const PAD: f64 = 40.0;
    const Y_CAP: f64 = 6.0;
    let y_max = curves
        .iter()
        .flatten()
        .fold(0.5_f64, |m, &d| m.max(d))
        .min(Y_CAP);
    let x = |t: f64| PAD + (W - 2.0 * PAD) * t / horizon_s;
    let y = |d: f64| H - PAD - (H - 2.0 * PAD) * d.min(y_max) / y_max;
    let line = |pts: &[f64]| {
        pts.iter()
            .enumerate()
            .map(|(k, &d)| format!("{:.1},{:.1}", x(k as f64 * dt), y(d)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{PAD}" y="20">{title}</text>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{PAD},{PAD} V{} H{}" stroke="black" fill="none"/>"#,
        H - PAD,
        W - PAD
    );
    let _ = writeln!(
        s,
        r#"<text x="{PAD}" y="{}">0</text><text x="{}" y="{}">{horizon_s} s</text><text x="4" y="{}">{y_max:.2} m</text>"#,
        H - PAD + 15.0,
        W - PAD - 20.0,
        H - PAD + 15.0,
        PAD + 4.0
    );
    if attack_s > 0.0 && attack_s < horizon_s {
        let ax = x(attack_s);
        let _ = writeln!(
            s,
            r##"<line x1="{ax:.1}" y1="{PAD}" x2="{ax:.1}" y2="{}" stroke="#c33" stroke-dasharray="4 3"/>"##,
            H - PAD
        );
    }
    for c in curves {
        let _ = writeln!(
            s,
            r##"<polyline points="{}" stroke="#9ab" stroke-width="0.6" fill="none"/>"##,
            line(c)
        );
    }
    let _ = writeln!(
        s,
        r##"<polyline points="{}" stroke="#123" stroke-width="1.8" fill="none"/>"##,
        line(mean)
    );
    s.push_str("</svg>\n");
    s
}

/// Differences of one scenario against the baseline at one hover point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointDelta {
    pub crash_rate: f64,
    pub mean_final_dist_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointComparison {
    /// Scenario → delta against the baseline scenario.
    pub deltas: BTreeMap<String, PointDelta>,
    /// The optimal attack degrades tracking more than the random one.
    pub optimal_beats_random: Option<bool>,
    /// The defended scenario does better than the undefended attack.
    pub defense_recovers: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub baseline: String,
    pub points: BTreeMap<String, PointComparison>,
}

/// `a` is worse than `b`: more crashes, or as many and a larger final distance.
fn worse(a: &PointMetrics, b: &PointMetrics) -> bool {
    a.crash_rate > b.crash_rate
        || (a.crash_rate == b.crash_rate && a.mean_final_dist_m > b.mean_final_dist_m)
}

/// Per hover point, deltas of every scenario against `baseline` plus the
/// optimal-versus-random and defense-recovery flags. Every scenario must
/// cover the same hover points.
pub fn compare_scenarios(summary: &MetricsSummary, baseline: Scenario) -> Result<Comparison> {
    if summary.0.len() < 2 {
        return Err(Error::InvalidInput("comparison needs at least two scenarios".into()));
    }
    let base = summary.0.get(baseline.as_str()).ok_or_else(|| {
        Error::InvalidInput(format!("baseline scenario {baseline} is not in the summary"))
    })?;
    for (name, pts) in &summary.0 {
        if pts.len() != base.len() || pts.keys().any(|k| !base.contains_key(k)) {
            return Err(Error::InvalidInput(format!(
                "scenario {name} covers different hover points than {baseline}"
            )));
        }
    }
    let mut points = BTreeMap::new();
    for (hover, b) in base {
        let deltas = summary
            .0
            .iter()
            .filter(|(name, _)| name.as_str() != baseline.as_str())
            .map(|(name, pts)| {
                let m = &pts[hover];
                (
                    name.clone(),
                    PointDelta {
                        crash_rate: m.crash_rate - b.crash_rate,
                        mean_final_dist_m: m.mean_final_dist_m - b.mean_final_dist_m,
                    },
                )
            })
            .collect();
        let at = |s: Scenario| summary.get(s, hover);
        let optimal_beats_random = match (at(Scenario::OptimalAttack), at(Scenario::RandomAttack)) {
            (Some(o), Some(r)) => Some(worse(o, r)),
            _ => None,
        };
        let defense_recovers = match (at(Scenario::AttackDefense), at(Scenario::OptimalAttack)) {
            (Some(d), Some(a)) => Some(worse(a, d)),
            _ => None,
        };
        points.insert(
            hover.clone(),
            PointComparison {
                deltas,
                optimal_beats_random,
                defense_recovers,
            },
        );
    }
    Ok(Comparison {
        baseline: baseline.as_str().to_string(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_two_two() {
        let d = distance_series(&[Vector3::new(1.0, 2.0, 2.0)], &Vector3::zeros());
        assert_eq!(d, vec![3.0]);
    }

    #[test]
    fn settling_cases() {
        let t = [0.0, 0.1, 0.2, 0.3];
        assert_eq!(settling_time(&t, &[0.0; 4], 0.1), Some(0.0));
        assert_eq!(settling_time(&t, &[0.5, 0.2, 0.05, 0.01], 0.1), Some(0.2));
        assert_eq!(settling_time(&t, &[0.0, 0.0, 0.0, 0.3], 0.1), None);
    }

    #[test]
    fn oscillation_uses_tail() {
        let t: Vec<f64> = (0..=100).map(|k| k as f64 * 0.1).collect();
        let d: Vec<f64> = t.iter().map(|&t| if t < 5.0 { 3.0 } else { 0.1 + 0.01 * (t * 7.0).sin() }).collect();
        let a = oscillation_amplitude(&t, &d, 2.0);
        assert!(a > 0.009 && a <= 0.01, "{a}");
    }

    #[test]
    fn mean_curve_counts_survivors() {
        let (m, n) = mean_curve(&[vec![1.0, 3.0, 5.0], vec![3.0]]);
        assert_eq!(m, vec![2.0, 3.0, 5.0]);
        assert_eq!(n, vec![2, 1, 1]);
    }

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(s.as_str().parse::<Scenario>().unwrap(), s);
        }
    }
}
