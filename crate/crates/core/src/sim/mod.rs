//! The federated round loop.

mod config;
mod metrics;
pub mod report;
mod seed;

pub use config::{DatasetKind, PrivacyMode, SimulationConfig, Strategy};
pub use metrics::{BlockEvent, ClientStatus, RoundMetrics, RunMetadata, RunOutcome, TerminalEvent};
pub use seed::{derive_seed, tags};

use std::collections::BTreeMap;

use ndarray::Axis;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::adversary::{flip_labels, noise_params, ClientBehavior};
use crate::aggregation::{afa_round, comed, fedavg, filter_blocked, mkrum, ModelUpdate, ReputationBook};
use crate::data::{partition, split, NormalizationStats, PartitionPlan, TabularDataset};
use crate::error::{Error, Result};
use crate::nn::{train_local, AdamConfig, AdamState, MlpModel, TrainSchedule};
use crate::params::ParameterVector;
use crate::privacy::{apply_mapping, dp_release, fit_k_anonymity, merge_mappings};

fn rng_for(cfg: &SimulationConfig, client: usize, round: usize, tag: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(cfg.master_seed, client, round, tag))
}

/// Misclassification rate and mean cross-entropy of `params` on `test`.
///
/// Predictions are the argmax of the logits, with ties going to the lower
/// class index.
pub fn evaluate(params: &ParameterVector, model_widths: &[usize], test: &TabularDataset) -> Result<(f64, f64)> {
    let mut model = MlpModel::from_widths(test.n_features(), model_widths)?;
    model.unflatten(params)?;
    evaluate_model(&model, test)
}

fn evaluate_model(model: &MlpModel, test: &TabularDataset) -> Result<(f64, f64)> {
    if test.is_empty() {
        return Err(Error::invalid("cannot evaluate on an empty test set"));
    }
    let logits = model.logits(test.features().view())?;
    let mut wrong = 0usize;
    for (row, &label) in logits.axis_iter(Axis(0)).zip(test.labels()) {
        let mut best = 0;
        for (c, &v) in row.iter().enumerate().skip(1) {
            if v > row[best] {
                best = c;
            }
        }
        wrong += usize::from(best != label);
    }
    let loss = model.loss(test.features().view(), test.labels())?;
    Ok((wrong as f64 / test.len() as f64, loss))
}

struct Prepared {
    clients: Vec<TabularDataset>,
    test: TabularDataset,
    metadata: RunMetadata,
}

fn prepare(cfg: &SimulationConfig, data: &TabularDataset) -> Result<Prepared> {
    let (train, test) = split(data, cfg.train_count, cfg.test_count, derive_seed(cfg.master_seed, 0, 0, tags::SPLIT))?;
    let plan = PartitionPlan {
        client_sizes: cfg.client_sizes.clone(),
        seed: derive_seed(cfg.master_seed, 0, 0, tags::PARTITION),
    };
    let mut clients = partition(&train, &plan)?;

    for (idx, part) in clients.iter_mut().enumerate() {
        let id = idx + 1;
        if let ClientBehavior::MaliciousLabelFlip { flip_fraction } = cfg.behavior(id) {
            *part = flip_labels(part, flip_fraction, &mut rng_for(cfg, id, 0, tags::FLIP))?;
        }
    }

    let mut test = test;
    if let PrivacyMode::Kanon(kcfg) = &cfg.privacy {
        let mappings = clients
            .iter()
            .map(|c| fit_k_anonymity(c, kcfg))
            .collect::<Result<Vec<_>>>()?;
        for (part, mapping) in clients.iter_mut().zip(&mappings) {
            *part = apply_mapping(part, mapping)?;
        }
        let merged = merge_mappings(&mappings, &test, kcfg.k)?;
        test = apply_mapping(&test, &merged)?;
    }

    if cfg.normalize {
        let stats = NormalizationStats::fit(&TabularDataset::concat(&clients)?)?;
        for part in clients.iter_mut() {
            *part = stats.apply(part)?;
        }
        test = stats.apply(&test)?;
    }

    let positives = train.labels().iter().filter(|&&y| y == 1).count();
    let majority = usize::from(2 * positives > train.len());
    let baseline_wrong = test.labels().iter().filter(|&&y| y != majority).count();
    let param_count = MlpModel::from_widths(data.n_features(), &cfg.model_widths)?.param_count();
    let metadata = RunMetadata {
        total_rows: data.len(),
        train_rows: train.len(),
        test_rows: test.len(),
        unused_rows: data.len() - train.len() - test.len(),
        client_rows: clients.iter().map(TabularDataset::len).collect(),
        param_count,
        majority_baseline_error: baseline_wrong as f64 / test.len() as f64,
    };
    Ok(Prepared {
        clients,
        test,
        metadata,
    })
}

fn client_update(
    cfg: &SimulationConfig,
    template: &MlpModel,
    global: &ParameterVector,
    id: usize,
    data: &TabularDataset,
    round: usize,
) -> Result<ModelUpdate> {
    let mut model = template.with_parameters(global)?;
    let mut adam = AdamState::new(model.param_count(), AdamConfig::with_learning_rate(cfg.learning_rate))?;
    let schedule = TrainSchedule {
        epochs: cfg.local_epochs,
        batch_size: cfg.batch_size,
    };
    train_local(&mut model, data, schedule, &mut adam, derive_seed(cfg.master_seed, id, round, tags::BATCH))?;
    let mut params = model.flatten();
    if let ClientBehavior::FaultyNoise { noise_std } = cfg.behavior(id) {
        params = noise_params(&params, noise_std, &mut rng_for(cfg, id, round, tags::NOISE))?;
    }
    if let PrivacyMode::Dp(dp) = &cfg.privacy {
        let release = dp_release(&params, global, dp, &mut rng_for(cfg, id, round, tags::DP))?;
        params = release.densify(global)?;
    }
    ModelUpdate::new(id, params, data.len())
}

/// Loads the configured dataset and runs the simulation.
pub fn run(cfg: &SimulationConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let data = cfg.dataset.load(&cfg.data_path)?;
    run_with_data(cfg, &data)
}

/// Runs the simulation on an already loaded dataset; `cfg.data_path` is
/// ignored.
pub fn run_with_data(cfg: &SimulationConfig, data: &TabularDataset) -> Result<RunOutcome> {
    cfg.validate()?;
    let Prepared {
        clients,
        test,
        metadata,
    } = prepare(cfg, data)?;

    let mut template = MlpModel::from_widths(test.n_features(), &cfg.model_widths)?;
    template.init_he(&mut rng_for(cfg, 0, 0, tags::INIT));
    let mut global = template.flatten();
    let mut book = ReputationBook::new(cfg.client_ids(), &cfg.afa);
    let mut metrics = Vec::with_capacity(cfg.rounds);
    let mut terminal = None;

    for round in 1..=cfg.rounds {
        let blocked_before = book.blocked();
        let active: Vec<usize> = cfg.client_ids().filter(|id| !blocked_before.contains(id)).collect();
        if active.is_empty() {
            terminal = Some(TerminalEvent {
                round,
                reason: "all clients are blocked".into(),
            });
            break;
        }

        let train_one = |&id: &usize| client_update(cfg, &template, &global, id, &clients[id - 1], round);
        let updates: Vec<ModelUpdate> = if cfg.parallel_clients {
            active.par_iter().map(train_one).collect::<Result<_>>()?
        } else {
            active.iter().map(train_one).collect::<Result<_>>()?
        };
        let updates = filter_blocked(updates, &book);

        let mut statuses: BTreeMap<usize, ClientStatus> = blocked_before
            .iter()
            .map(|&id| (id, ClientStatus::NotContacted))
            .collect();
        let mut block_events = Vec::new();
        let next = match cfg.strategy {
            Strategy::Fedavg | Strategy::Comed => {
                statuses.extend(updates.iter().map(|u| (u.client_id, ClientStatus::Accepted)));
                if cfg.strategy == Strategy::Fedavg {
                    fedavg(&updates)?
                } else {
                    comed(&updates)?
                }
            }
            Strategy::Mkrum => {
                let (params, selected) = mkrum(&updates, &cfg.mkrum)?;
                for u in &updates {
                    let status = if selected.contains(&u.client_id) {
                        ClientStatus::Accepted
                    } else {
                        ClientStatus::Rejected
                    };
                    statuses.insert(u.client_id, status);
                }
                params
            }
            Strategy::Afa => {
                let outcome = afa_round(&updates, &global, &mut book, &cfg.afa)?;
                for &id in &outcome.accepted {
                    statuses.insert(id, ClientStatus::Accepted);
                }
                for &id in &outcome.rejected {
                    statuses.insert(id, ClientStatus::Rejected);
                }
                for &id in &outcome.newly_blocked {
                    statuses.insert(id, ClientStatus::Blocked);
                    block_events.push(BlockEvent { round, client_id: id });
                }
                outcome.global
            }
        };

        global = next;
        let (test_error, test_loss) = evaluate_model(&template.with_parameters(&global)?, &test)?;
        metrics.push(RoundMetrics {
            round,
            test_error,
            test_loss,
            statuses,
            block_events,
        });
    }

    Ok(RunOutcome {
        strategy: cfg.strategy,
        metrics,
        terminal,
        metadata,
        final_global: global,
    })
}
