//! Timed training, learning-rate sweeps and the multi-replication study.
//!
//! Replication `r` of a study with master seed `m` derives its seeds from a ChaCha8
//! generator seeded with `m` on stream `r`: the first `u64` seeds the dataset
//! draw, the second the network initialization. Every head sees the same data for a
//! given replication, and every learning rate of a sweep starts from the same
//! initial parameters.

use std::fmt::Write as _;
use std::time::Instant;

use pwsurv_core::data::{generate_dataset, SimulationConfig};
use pwsurv_core::heads::HeadKind;
use pwsurv_core::loss::SurvivalRecord;
use pwsurv_core::training::{
    evaluate, learning_rate_grid, resolve_horizon, select_learning_rate, summarize, EpochRecord,
    HorizonRule, Summary, TrainConfig, TrainedModel,
};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// [`pwsurv_core::training::train`] with wall-clock time recorded in the model.
pub fn timed_train(
    config: &TrainConfig,
    train_set: &[SurvivalRecord],
    val_set: &[SurvivalRecord],
) -> Result<TrainedModel> {
    let start = Instant::now();
    let mut model = pwsurv_core::training::train(config, train_set, val_set)?;
    model.training_seconds = start.elapsed().as_secs_f64();
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub lr_min: f64,
    pub lr_max: f64,
    pub count: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            lr_min: 1e-4,
            lr_max: 1e-1,
            count: 20,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub learning_rate: f64,
    /// The finished run, or the reason it was aborted.
    pub outcome: std::result::Result<TrainedModel, String>,
}

impl SweepEntry {
    pub fn best_val_loss(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(|m| m.best_val_loss)
    }

    pub fn history(&self) -> &[EpochRecord] {
        self.outcome.as_ref().map_or(&[], |m| &m.history)
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
    pub selected: usize,
}

impl SweepResult {
    pub fn selected_learning_rate(&self) -> f64 {
        self.entries[self.selected].learning_rate
    }

    pub fn selected_model(&self) -> &TrainedModel {
        self.entries[self.selected]
            .outcome
            .as_ref()
            .expect("selected entry always succeeded")
    }

    pub fn into_selected_model(mut self) -> TrainedModel {
        self.entries
            .swap_remove(self.selected)
            .outcome
            .expect("selected entry always succeeded")
    }
}

/// One training run per learning rate; the run with the lowest checkpointed
/// validation loss wins (ties to the smaller rate). Diverged runs are kept as
/// failed entries; any other error aborts the sweep.
pub fn lr_sweep(
    base: &TrainConfig,
    sweep: &SweepConfig,
    train_set: &[SurvivalRecord],
    val_set: &[SurvivalRecord],
) -> Result<SweepResult> {
    let lrs = learning_rate_grid(sweep.lr_min, sweep.lr_max, sweep.count)?;
    let mut entries = Vec::with_capacity(lrs.len());
    for lr in lrs {
        let config = TrainConfig {
            learning_rate: lr,
            ..base.clone()
        };
        let outcome = match timed_train(&config, train_set, val_set) {
            Ok(m) => Ok(m),
            Err(Error::Core(e @ pwsurv_core::Error::Diverged { .. })) => Err(e.to_string()),
            Err(e) => return Err(e),
        };
        entries.push(SweepEntry {
            learning_rate: lr,
            outcome,
        });
    }
    let keyed: Vec<(f64, Option<f64>)> = entries
        .iter()
        .map(|e| (e.learning_rate, e.best_val_loss()))
        .collect();
    let selected = select_learning_rate(&keyed).ok_or(Error::SweepFailed(entries.len()))?;
    Ok(SweepResult { entries, selected })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub heads: Vec<HeadKind>,
    pub reps: usize,
    pub master_seed: u64,
    /// Train, validation and test sizes.
    pub sizes: [usize; 3],
    pub simulation: SimulationConfig,
    /// Network, grid and epoch settings; head, seed and learning rate are set per run.
    pub base: TrainConfig,
    pub sweep: SweepConfig,
    /// The grid horizon is this factor times the largest time across all three splits.
    pub horizon_factor: f64,
    pub jobs: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            heads: HeadKind::ALL.to_vec(),
            reps: 100,
            master_seed: 0,
            sizes: [1000, 300, 300],
            simulation: SimulationConfig::default(),
            base: TrainConfig::default(),
            sweep: SweepConfig::default(),
            horizon_factor: 1.001,
            jobs: 1,
        }
    }
}

/// `(data_seed, init_seed)` for replication `rep`.
pub fn replication_seeds(master_seed: u64, rep: usize) -> (u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(rep as u64);
    (rng.next_u64(), rng.next_u64())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRun {
    pub test_loss: f64,
    pub learning_rate: f64,
    pub best_epoch: usize,
    pub t_max: f64,
    pub training_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub head: HeadKind,
    pub rep: usize,
    pub outcome: std::result::Result<ReplicationRun, String>,
}

/// Simulate, sweep and test one replication for one head.
pub fn run_replication(config: &StudyConfig, head: HeadKind, rep: usize) -> Result<ReplicationRun> {
    let (data_seed, init_seed) = replication_seeds(config.master_seed, rep);
    let [n_train, n_val, n_test] = config.sizes;
    let all = generate_dataset(n_train + n_val + n_test, &config.simulation, data_seed)?;
    let records = all.records;
    let (train_set, rest) = records.split_at(n_train);
    let (val_set, test_set) = rest.split_at(n_val);

    let t_max = resolve_horizon(
        HorizonRule::ObservedMax {
            factor: config.horizon_factor,
        },
        &[train_set, val_set, test_set],
    )?;
    let mut base = config.base.clone();
    base.head = head;
    base.seed = init_seed;
    base.grid.horizon = HorizonRule::Fixed { t_max };

    let sweep = lr_sweep(&base, &config.sweep, train_set, val_set)?;
    let learning_rate = sweep.selected_learning_rate();
    let model = sweep.into_selected_model();
    let test_loss = evaluate(&model, test_set)?;
    Ok(ReplicationRun {
        test_loss,
        learning_rate,
        best_epoch: model.best_epoch,
        t_max,
        training_seconds: model.training_seconds,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub head: HeadKind,
    pub reps: usize,
    pub failures: usize,
    pub loss: Option<Summary>,
    pub time: Option<Summary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub rows: Vec<StudyRow>,
    pub replications: Vec<Replication>,
}

/// Runs every (head, replication) pair on a pool of `config.jobs` threads.
/// Failed replications are recorded and the study continues.
pub fn replication_study(config: &StudyConfig) -> Result<StudyReport> {
    if config.reps == 0 {
        return Err(Error::Argument(
            "a study needs at least one replication".into(),
        ));
    }
    if config.heads.is_empty() {
        return Err(Error::Argument("a study needs at least one head".into()));
    }
    if config.sizes.contains(&0) {
        return Err(Error::Argument(format!(
            "dataset sizes must be positive, got {:?}",
            config.sizes
        )));
    }
    let tasks: Vec<(HeadKind, usize)> = config
        .heads
        .iter()
        .flat_map(|&h| (0..config.reps).map(move |r| (h, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.max(1))
        .build()
        .map_err(|e| Error::Argument(format!("cannot start worker pool: {e}")))?;
    let replications: Vec<Replication> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(head, rep)| Replication {
                head,
                rep,
                outcome: run_replication(config, head, rep).map_err(|e| e.to_string()),
            })
            .collect()
    });

    let rows = config
        .heads
        .iter()
        .map(|&head| {
            let runs: Vec<&ReplicationRun> = replications
                .iter()
                .filter(|r| r.head == head)
                .filter_map(|r| r.outcome.as_ref().ok())
                .collect();
            let losses: Vec<f64> = runs.iter().map(|r| r.test_loss).collect();
            let times: Vec<f64> = runs.iter().map(|r| r.training_seconds).collect();
            StudyRow {
                head,
                reps: config.reps,
                failures: config.reps - runs.len(),
                loss: summarize(&losses),
                time: summarize(&times),
            }
        })
        .collect();
    Ok(StudyReport { rows, replications })
}

fn num(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

impl StudyReport {
    pub fn row(&self, head: HeadKind) -> Option<&StudyRow> {
        self.rows.iter().find(|r| r.head == head)
    }

    /// Test-loss summary per head. Contains nothing that depends on the clock, so
    /// identical seeds and flags give identical bytes.
    pub fn report_csv(&self) -> String {
        let mut out = String::from("model,reps,failures,mean_loss,sd_loss,single_sample\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.head,
                r.reps,
                r.failures,
                num(r.loss.map(|s| s.mean)),
                num(r.loss.map(|s| s.sd)),
                r.loss.is_some_and(|s| s.single_sample())
            );
        }
        out
    }

    /// Wall-clock training time of each selected run, summarized per head.
    pub fn timing_csv(&self) -> String {
        let mut out = String::from("model,mean_time_s,sd_time_s\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{}",
                r.head,
                num(r.time.map(|s| s.mean)),
                num(r.time.map(|s| s.sd))
            );
        }
        out
    }

    pub fn replications_csv(&self) -> String {
        let mut out = String::from("model,rep,status,learning_rate,best_epoch,t_max,test_loss\n");
        for r in &self.replications {
            match &r.outcome {
                Ok(run) => {
                    let _ = writeln!(
                        out,
                        "{},{},ok,{},{},{},{}",
                        r.head, r.rep, run.learning_rate, run.best_epoch, run.t_max, run.test_loss
                    );
                }
                Err(msg) => {
                    let msg = msg.replace([',', '\n'], ";");
                    let _ = writeln!(out, "{},{},failed: {msg},,,,", r.head, r.rep);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_study() -> StudyConfig {
        StudyConfig {
            heads: vec![HeadKind::ConstantHazard, HeadKind::LinearHazard],
            reps: 2,
            master_seed: 5,
            sizes: [60, 30, 30],
            base: TrainConfig {
                hidden_layers: vec![4],
                epochs: 5,
                ..TrainConfig::default()
            },
            sweep: SweepConfig {
                count: 3,
                ..SweepConfig::default()
            },
            ..StudyConfig::default()
        }
    }

    fn data() -> (Vec<SurvivalRecord>, Vec<SurvivalRecord>) {
        let sim = SimulationConfig::default();
        (
            generate_dataset(50, &sim, 1).unwrap().records,
            generate_dataset(20, &sim, 2).unwrap().records,
        )
    }

    #[test]
    fn seeds_are_split_per_replication() {
        assert_eq!(replication_seeds(1, 0), replication_seeds(1, 0));
        assert_ne!(replication_seeds(1, 0), replication_seeds(1, 1));
        assert_ne!(replication_seeds(1, 0), replication_seeds(2, 0));
    }

    #[test]
    fn sweep_selects_the_best_entry() {
        let (tr, va) = data();
        let base = TrainConfig {
            hidden_layers: vec![4],
            epochs: 10,
            ..TrainConfig::default()
        };
        let cfg = SweepConfig {
            count: 4,
            ..SweepConfig::default()
        };
        let s = lr_sweep(&base, &cfg, &tr, &va).unwrap();
        assert_eq!(s.entries.len(), 4);
        let best = s.selected_model().best_val_loss;
        assert!(s.entries.iter().all(|e| e.best_val_loss().unwrap() >= best));
        assert!(s.entries.iter().all(|e| e.history().len() == 10));
        assert!(s.selected_model().training_seconds > 0.0);

        let again = lr_sweep(&base, &cfg, &tr, &va).unwrap();
        assert_eq!(again.selected, s.selected);
        assert_eq!(again.selected_model().network, s.selected_model().network);
    }

    #[test]
    fn sweep_on_identical_records_completes() {
        let r = SurvivalRecord::new(vec![2.0, 3.0], 1.5, true);
        let base = TrainConfig {
            hidden_layers: vec![4],
            epochs: 5,
            ..TrainConfig::default()
        };
        let cfg = SweepConfig {
            count: 3,
            ..SweepConfig::default()
        };
        let s = lr_sweep(&base, &cfg, &vec![r.clone(); 10], &vec![r.clone(); 5]).unwrap();
        let t = lr_sweep(&base, &cfg, &vec![r.clone(); 10], &vec![r; 5]).unwrap();
        assert_eq!(s.selected, t.selected);
    }

    #[test]
    fn sweep_needs_two_rates() {
        let (tr, va) = data();
        let cfg = SweepConfig {
            count: 1,
            ..SweepConfig::default()
        };
        assert!(lr_sweep(&TrainConfig::default(), &cfg, &tr, &va).is_err());
    }

    #[test]
    fn study_is_deterministic_across_job_counts() {
        let cfg = small_study();
        let a = replication_study(&cfg).unwrap();
        let b = replication_study(&StudyConfig {
            jobs: 3,
            ..cfg.clone()
        })
        .unwrap();
        assert_eq!(a.report_csv(), b.report_csv());
        assert_eq!(a.replications_csv(), b.replications_csv());
        assert_eq!(a.rows.len(), 2);
        assert!(a
            .rows
            .iter()
            .all(|r| r.failures == 0 && r.loss.unwrap().count == 2));
        assert_eq!(a.report_csv().lines().count(), 3);
        assert_eq!(a.timing_csv().lines().count(), 3);
    }

    #[test]
    fn single_replication_flags_single_sample() {
        let cfg = StudyConfig {
            reps: 1,
            heads: vec![HeadKind::LinearHazard],
            ..small_study()
        };
        let r = replication_study(&cfg).unwrap();
        let row = &r.rows[0];
        assert_eq!(row.loss.unwrap().sd, 0.0);
        assert!(r.report_csv().lines().nth(1).unwrap().ends_with(",0,true"));
    }

    #[test]
    fn rejects_empty_study() {
        assert!(replication_study(&StudyConfig {
            reps: 0,
            ..small_study()
        })
        .is_err());
        assert!(replication_study(&StudyConfig {
            heads: vec![],
            ..small_study()
        })
        .is_err());
    }
}
