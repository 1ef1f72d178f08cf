//! Success rates, regret curves and exploration-under-failure statistics.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envs::{make_env, EnvError, EnvId, Environment};
use crate::protocol::{StepRecord, Transcript};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no transcripts")]
    Empty,
    #[error("incompatible transcripts: {0}")]
    Input(String),
    #[error("transcript for {task} does not replay: {reason}")]
    Replay { task: String, reason: String },
    #[error(transparent)]
    Env(#[from] EnvError),
}

fn common_shape(transcripts: &[Transcript]) -> Result<(EnvId, usize), MetricsError> {
    let first = transcripts.first().ok_or(MetricsError::Empty)?;
    let shape = (first.task.env_id, first.task.episodes);
    for t in transcripts {
        if (t.task.env_id, t.task.episodes) != shape {
            return Err(MetricsError::Input(format!(
                "mixed suites: {} with T={} and {} with T={}",
                shape.0, shape.1, t.task.env_id, t.task.episodes
            )));
        }
    }
    Ok(shape)
}

/// Fraction of transcripts whose episode `e` succeeded, for `e = 1..=T`.
pub fn success_by_episode(transcripts: &[Transcript]) -> Result<Vec<f64>, MetricsError> {
    let (_, episodes) = common_shape(transcripts)?;
    let mut counts = vec![0usize; episodes];
    for t in transcripts {
        for (c, ok) in counts.iter_mut().zip(t.episode_successes()) {
            *c += ok as usize;
        }
    }
    let n = transcripts.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / n).collect())
}

/// Cumulative regret after each episode, averaged over transcripts, with
/// one `j_star` shared by all of them.
pub fn regret_curve(transcripts: &[Transcript], j_star: f64) -> Result<Vec<f64>, MetricsError> {
    regret_curve_per_instance(transcripts, &vec![j_star; transcripts.len()])
}

/// As [`regret_curve`], with each transcript's own optimum.
pub fn regret_curve_per_instance(
    transcripts: &[Transcript],
    j_stars: &[f64],
) -> Result<Vec<f64>, MetricsError> {
    let (_, episodes) = common_shape(transcripts)?;
    if j_stars.len() != transcripts.len() {
        return Err(MetricsError::Input(format!(
            "{} optima for {} transcripts",
            j_stars.len(),
            transcripts.len()
        )));
    }
    let mut curve = vec![0.0; episodes];
    for (t, &j) in transcripts.iter().zip(j_stars) {
        let mut cumulative = 0.0;
        for (e, g) in t.episode_returns().into_iter().enumerate() {
            cumulative += g;
            curve[e] += (e + 1) as f64 * j - cumulative;
        }
    }
    let n = transcripts.len() as f64;
    Ok(curve.into_iter().map(|r| r / n).collect())
}

/// Mean of a conditional statistic and the size of its conditioning set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conditional {
    /// `None` when the conditioning set is empty.
    pub mean: Option<f64>,
    pub count: usize,
}

impl Conditional {
    fn from_values(values: &[usize]) -> Self {
        Conditional {
            mean: (!values.is_empty())
                .then(|| values.iter().sum::<usize>() as f64 / values.len() as f64),
            count: values.len(),
        }
    }
}

/// New states in later episodes, conditioned on earlier failures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaStates {
    /// `|S(ep2) \ S(ep1)|` over transcripts whose episode 1 failed.
    pub ep2_given_fail1: Conditional,
    /// `|S(ep3) \ (S(ep1) ∪ S(ep2))|` over transcripts whose episodes 1 and 2 failed.
    pub ep3_given_fail12: Conditional,
}

/// Computes [`DeltaStates`] from per-transcript episode success flags and
/// per-episode state sets.
pub fn delta_states_from_sets<K: Eq + Hash>(
    runs: &[(Vec<bool>, Vec<HashSet<K>>)],
) -> DeltaStates {
    let mut d2 = Vec::new();
    let mut d3 = Vec::new();
    for (success, states) in runs {
        let empty = HashSet::new();
        let s = |e: usize| states.get(e).unwrap_or(&empty);
        let failed = |e: usize| !success.get(e).copied().unwrap_or(false);
        if failed(0) && states.len() >= 2 {
            d2.push(s(1).difference(s(0)).count());
            if failed(1) && states.len() >= 3 {
                d3.push(
                    s(2)
                        .iter()
                        .filter(|k| !s(0).contains(k) && !s(1).contains(k))
                        .count(),
                );
            }
        }
    }
    DeltaStates {
        ep2_given_fail1: Conditional::from_values(&d2),
        ep3_given_fail12: Conditional::from_values(&d3),
    }
}

/// [`DeltaStates`] with states taken from each step record by `key`.
pub fn delta_states_by<K: Eq + Hash>(
    transcripts: &[Transcript],
    key: impl Fn(&StepRecord) -> K,
) -> Result<DeltaStates, MetricsError> {
    common_shape(transcripts)?;
    let runs: Vec<_> = transcripts
        .iter()
        .map(|t| {
            let sets = (1..=t.episode_lengths.len())
                .map(|e| t.episode(e).iter().map(&key).collect())
                .collect();
            (t.episode_successes(), sets)
        })
        .collect();
    Ok(delta_states_from_sets(&runs))
}

/// [`DeltaStates`] with states from replaying each transcript through its
/// environment: the maze cell, the Mastermind guess, or the public game
/// state otherwise.
pub fn delta_states(transcripts: &[Transcript]) -> Result<DeltaStates, MetricsError> {
    common_shape(transcripts)?;
    let mut runs = Vec::with_capacity(transcripts.len());
    for t in transcripts {
        let keys = env_state_keys(t)?;
        let sets = keys.into_iter().map(|k| k.into_iter().collect()).collect();
        runs.push((t.episode_successes(), sets));
    }
    Ok(delta_states_from_sets(&runs))
}

/// State fingerprints visited in each episode: the state after reset and
/// after every recorded step. Fails if the replay disagrees with the
/// recorded feedback.
pub fn env_state_keys(transcript: &Transcript) -> Result<Vec<Vec<String>>, MetricsError> {
    let mut env = make_env(&transcript.task)?;
    let mut out = Vec::with_capacity(transcript.episode_lengths.len());
    for e in 1..=transcript.episode_lengths.len() {
        Environment::reset(env.as_mut());
        let mut keys = vec![env.state_key()];
        for step in transcript.episode(e) {
            match &step.action {
                Some(a) => {
                    let outcome = Environment::step(env.as_mut(), a);
                    if outcome.observation != step.next_observation {
                        return Err(MetricsError::Replay {
                            task: transcript.task.to_string(),
                            reason: format!(
                                "episode {e} step {}: feedback differs",
                                step.step_index
                            ),
                        });
                    }
                }
                None => {
                    Environment::reject(env.as_mut(), "");
                }
            }
            keys.push(env.state_key());
        }
        out.push(keys);
    }
    Ok(out)
}

/// A two-sided confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> Interval {
    if n == 0 {
        return Interval { low: 0.0, high: 1.0 };
    }
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    Interval {
        low: (centre - half).max(0.0),
        high: (centre + half).min(1.0),
    }
}

const Z95: f64 = 1.959_963_984_540_054;

/// Change of this report against a baseline run of the same suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineDelta {
    pub baseline_success_by_episode: Vec<f64>,
    /// Per-episode success difference, this run minus the baseline.
    pub success_delta: Vec<f64>,
    /// Difference on the final episode.
    pub final_episode_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub env_id: EnvId,
    pub episodes: usize,
    pub instances: usize,
    pub rollouts: usize,
    pub transcripts: usize,
    pub truncated: usize,
    pub success_by_episode: Vec<f64>,
    pub success_ci95: Vec<Interval>,
    pub regret_curve: Vec<f64>,
    /// Cumulative regret after the last episode.
    pub mean_regret: f64,
    pub delta_states: Option<DeltaStates>,
    pub baseline: Option<BaselineDelta>,
}

impl EvalReport {
    /// Builds the report; `j_stars` holds one optimum per transcript.
    pub fn from_transcripts(transcripts: &[Transcript], j_stars: &[f64]) -> Result<Self, MetricsError> {
        let (env_id, episodes) = common_shape(transcripts)?;
        let rates = success_by_episode(transcripts)?;
        let n = transcripts.len();
        let ci = rates
            .iter()
            .map(|r| wilson_interval((r * n as f64).round() as usize, n, Z95))
            .collect();
        let regret = regret_curve_per_instance(transcripts, j_stars)?;
        let instances = transcripts
            .iter()
            .map(|t| t.task.seed)
            .collect::<BTreeSet<_>>()
            .len();
        let delta = if episodes >= 3 {
            Some(delta_states(transcripts)?)
        } else {
            None
        };
        Ok(EvalReport {
            env_id,
            episodes,
            instances,
            rollouts: n.div_ceil(instances),
            transcripts: n,
            truncated: transcripts.iter().filter(|t| t.truncated).count(),
            success_by_episode: rates,
            success_ci95: ci,
            mean_regret: regret.last().copied().unwrap_or(0.0),
            regret_curve: regret,
            delta_states: delta,
            baseline: None,
        })
    }

    /// Adds the comparison against `base`, which must cover the same game and T.
    pub fn with_baseline(mut self, base: &EvalReport) -> Result<Self, MetricsError> {
        if base.env_id != self.env_id || base.episodes != self.episodes {
            return Err(MetricsError::Input(format!(
                "baseline is {} with T={}, run is {} with T={}",
                base.env_id, base.episodes, self.env_id, self.episodes
            )));
        }
        let delta: Vec<f64> = self
            .success_by_episode
            .iter()
            .zip(&base.success_by_episode)
            .map(|(a, b)| a - b)
            .collect();
        self.baseline = Some(BaselineDelta {
            baseline_success_by_episode: base.success_by_episode.clone(),
            final_episode_delta: *delta.last().unwrap_or(&0.0),
            success_delta: delta,
        });
        Ok(self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Per-episode rows for plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("env,episode,success_rate,ci_low,ci_high,regret");
        if self.baseline.is_some() {
            out.push_str(",baseline_success_rate,delta_vs_base");
        }
        out.push('\n');
        for e in 0..self.episodes {
            let ci = self.success_ci95[e];
            write!(
                out,
                "{},{},{:.6},{:.6},{:.6},{:.6}",
                self.env_id,
                e + 1,
                self.success_by_episode[e],
                ci.low,
                ci.high,
                self.regret_curve[e]
            )
            .unwrap();
            if let Some(b) = &self.baseline {
                write!(
                    out,
                    ",{:.6},{:.6}",
                    b.baseline_success_by_episode[e], b.success_delta[e]
                )
                .unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// One summary line, e.g. `maze  Ep 3 Success 0.55  Δ vs. Base +0.10`.
    pub fn summary_line(&self) -> String {
        let last = self.episodes;
        let mut line = format!(
            "{:<12}{}",
            self.env_id.as_str(),
            format_episode_success(last, self.success_by_episode[last - 1])
        );
        if let Some(b) = &self.baseline {
            write!(line, "  Δ vs. Base {:+.2}", b.final_episode_delta).unwrap();
        }
        if let Some(d) = &self.delta_states {
            for (name, c) in [("ΔStates(Ep2|F1)", d.ep2_given_fail1), ("ΔStates(Ep3|F1-2)", d.ep3_given_fail12)] {
                match c.mean {
                    Some(m) => write!(line, "  {name} {m:.2} (n={})", c.count).unwrap(),
                    None => write!(line, "  {name} - (n=0)").unwrap(),
                }
            }
        }
        line
    }
}

/// `Ep 3 Success 0.55`.
pub fn format_episode_success(episode: usize, rate: f64) -> String {
    format!("Ep {episode} Success {rate:.2}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::ScriptedAgent;
    use crate::envs::MastermindEnv;
    use crate::protocol::{run_task, Budget, TaskInstance};

    fn mastermind_run(seed: u64, episodes_correct: [bool; 3]) -> Transcript {
        let task = TaskInstance::standard(EnvId::Mastermind, seed);
        let secret = MastermindEnv::generate(seed, &Default::default(), 3).unwrap().secret();
        let wrong = crate::envs::Code::all_distinct()
            .into_iter()
            .find(|c| *c != secret)
            .unwrap();
        let scripts = episodes_correct
            .iter()
            .map(|&ok| vec![if ok { secret } else { wrong }.to_string()])
            .collect();
        run_task(&task, &mut ScriptedAgent::per_episode(scripts), &Budget::unlimited()).unwrap()
    }

    #[test]
    fn rates_and_counts() {
        let all = vec![mastermind_run(1, [true; 3]), mastermind_run(2, [true; 3])];
        assert_eq!(success_by_episode(&all).unwrap(), vec![1.0, 1.0, 1.0]);
        let half = vec![
            mastermind_run(1, [true, true, true]),
            mastermind_run(2, [false, true, true]),
            mastermind_run(3, [true, false, true]),
            mastermind_run(4, [false, false, true]),
        ];
        assert_eq!(success_by_episode(&half).unwrap(), vec![0.5, 0.5, 1.0]);
    }

    #[test]
    fn regret_examples() {
        let perfect = vec![mastermind_run(1, [true; 3])];
        assert_eq!(regret_curve(&perfect, 1.0).unwrap(), vec![0.0, 0.0, 0.0]);
        let late = vec![mastermind_run(1, [false, true, true]), mastermind_run(2, [false, true, true])];
        assert_eq!(regret_curve(&late, 1.0).unwrap(), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn mixed_suites_are_rejected() {
        let a = mastermind_run(1, [true; 3]);
        let mut b = a.clone();
        b.task.episodes = 4;
        assert!(matches!(success_by_episode(&[a, b]), Err(MetricsError::Input(_))));
    }

    #[test]
    fn set_difference_semantics() {
        let set = |v: &[u32]| v.iter().copied().collect::<HashSet<_>>();
        let runs = vec![
            (vec![false, false, false], vec![set(&[1, 2]), set(&[2, 3, 4, 5, 6]), set(&[7, 1])]),
            (vec![true, false, false], vec![set(&[1]), set(&[9]), set(&[9])]),
            (vec![false, true, false], vec![set(&[1]), set(&[1]), set(&[8])]),
        ];
        let d = delta_states_from_sets(&runs);
        assert_eq!(d.ep2_given_fail1, Conditional { mean: Some(2.0), count: 2 });
        assert_eq!(d.ep3_given_fail12, Conditional { mean: Some(1.0), count: 1 });
        let none = delta_states_from_sets(&runs[1..2]);
        assert_eq!(none.ep2_given_fail1, Conditional { mean: None, count: 0 });
    }

    #[test]
    fn wilson_known_value() {
        // 5 of 10 at z = 1.96: centre 0.5, half-width 0.2634.
        let ci = wilson_interval(5, 10, 1.96);
        assert!((ci.low - 0.2366).abs() < 1e-4 && (ci.high - 0.7634).abs() < 1e-4, "{ci:?}");
        let ci = wilson_interval(0, 20, 1.96);
        assert_eq!(ci.low, 0.0);
        assert!(ci.high > 0.0);
    }

    #[test]
    fn report_formats() {
        assert_eq!(format_episode_success(3, 0.55), "Ep 3 Success 0.55");
        let runs = vec![mastermind_run(1, [false, true, true]), mastermind_run(2, [true; 3])];
        let report = EvalReport::from_transcripts(&runs, &[1.0, 1.0]).unwrap();
        let same = report.clone().with_baseline(&report).unwrap();
        assert!(same.baseline.as_ref().unwrap().success_delta.iter().all(|d| *d == 0.0));
        let csv = same.to_csv();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("env,episode,success_rate,ci_low,ci_high,regret,baseline_success_rate,delta_vs_base"));
        assert_eq!(EvalReport::from_json(&report.to_json()).unwrap(), report);
        assert!(report.summary_line().contains("Ep 3 Success 1.00"));
    }
}
