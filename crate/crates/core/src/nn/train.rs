use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{AdamState, MlpModel};
use crate::data::TabularDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainSchedule {
    pub epochs: usize,
    pub batch_size: usize,
}

/// Mini-batch Adam training of `model` on `data`, in place.
///
/// Each epoch reshuffles the row order with a generator seeded from
/// `seed`; the trailing partial batch is kept. Returns the number of
/// optimizer steps taken.
pub fn train_local(
    model: &mut MlpModel,
    data: &TabularDataset,
    schedule: TrainSchedule,
    optimizer: &mut AdamState,
    seed: u64,
) -> Result<usize> {
    if schedule.epochs == 0 {
        return Err(Error::invalid("epochs must be at least 1"));
    }
    if schedule.batch_size == 0 {
        return Err(Error::invalid("batch size must be at least 1"));
    }
    if data.is_empty() {
        return Err(Error::invalid("cannot train on an empty dataset"));
    }
    if optimizer.len() != model.param_count() {
        return Err(Error::shape(model.param_count(), optimizer.len()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut grad = vec![0.0; model.param_count()];
    let mut steps = 0;
    for _ in 0..schedule.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(schedule.batch_size) {
            let batch = data.features().select(ndarray::Axis(0), chunk);
            let labels: Vec<usize> = chunk.iter().map(|&i| data.labels()[i]).collect();
            model.backward_into(batch.view(), &labels, &mut grad)?;
            optimizer.step_in_place(model.params_mut(), &grad)?;
            steps += 1;
        }
    }
    Ok(steps)
}
