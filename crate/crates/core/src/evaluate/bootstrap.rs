//! Out-of-sample bootstrap: fit on a resample, score the instances left out.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{auc, brier, prf, EvalError};
use crate::frame::Frame;
use crate::splinefit::{fit_spec, refit_knots, ModelSpec};
use crate::stats::{mean, sample_sd};

/// Draws allowed per iteration before the run is abandoned.
pub const MAX_ATTEMPTS_PER_ITERATION: usize = 50;

/// Generator for bootstrap iteration `index`; independent of thread scheduling.
pub fn iteration_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// `n` row indices drawn with replacement, and the rows never drawn (ascending).
pub fn resample(rng: &mut ChaCha8Rng, n: usize) -> (Vec<usize>, Vec<usize>) {
    let mut drawn = vec![false; n];
    let rows: Vec<usize> = (0..n)
        .map(|_| {
            let r = rng.random_range(0..n);
            drawn[r] = true;
            r
        })
        .collect();
    let out_of_bag = (0..n).filter(|&r| !drawn[r]).collect();
    (rows, out_of_bag)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub iterations: usize,
    pub seed: u64,
    pub threshold: f64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig { iterations: 1000, seed: 0, threshold: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSummary {
    pub mean: f64,
    pub sd: f64,
    pub values: Vec<f64>,
}

impl MeasureSummary {
    pub fn from_values(values: Vec<f64>) -> Self {
        MeasureSummary { mean: mean(&values), sd: sample_sd(&values), values }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub auc: MeasureSummary,
    pub brier: MeasureSummary,
    pub precision: MeasureSummary,
    pub recall: MeasureSummary,
    pub f_measure: MeasureSummary,
    pub iterations: usize,
    pub seed: u64,
    pub threshold: f64,
    /// Draws discarded because a class was missing or the fit failed.
    pub redraws: usize,
}

struct Outcome {
    measures: [f64; 5],
    redraws: usize,
}

fn one_iteration(frame: &Frame, spec: &ModelSpec, config: &BootstrapConfig, index: usize) -> Result<Outcome, EvalError> {
    let mut rng = iteration_rng(config.seed, index);
    let mut last = String::new();
    for attempt in 0..MAX_ATTEMPTS_PER_ITERATION {
        let (rows, oob) = resample(&mut rng, frame.nrows());
        let train = frame.select_rows(&rows);
        let test = frame.select_rows(&oob);
        let (tt, tf) = train.class_counts();
        let (ot, of) = test.class_counts();
        if tt == 0 || tf == 0 || ot == 0 || of == 0 {
            last = "resample or out-of-bag set lacks a class".into();
            log::debug!("bootstrap iteration {index}: {last}, redrawing");
            continue;
        }
        let fitted = refit_knots(spec, &train).and_then(|s| fit_spec(&s, &train));
        let model = match fitted {
            Ok(m) => m,
            Err(e) => {
                last = e.to_string();
                log::debug!("bootstrap iteration {index}: {last}, redrawing");
                continue;
            }
        };
        let scores = model.predict_frame(&test)?;
        let p = prf(&scores, &test.outcome, config.threshold)?;
        return Ok(Outcome {
            measures: [
                auc(&scores, &test.outcome)?,
                brier(&scores, &test.outcome)?,
                p.precision,
                p.recall,
                p.f_measure,
            ],
            redraws: attempt,
        });
    }
    Err(EvalError::Bootstrap { index, attempts: MAX_ATTEMPTS_PER_ITERATION, message: last })
}

/// Runs `config.iterations` out-of-sample iterations in parallel. Knots are re-estimated on
/// each resample; the variable set and degrees-of-freedom allocation come from `spec`.
pub fn out_of_sample_bootstrap(
    frame: &Frame,
    spec: &ModelSpec,
    config: &BootstrapConfig,
) -> Result<BootstrapReport, EvalError> {
    let (t, f) = frame.class_counts();
    if t == 0 || f == 0 {
        return Err(EvalError::MissingClass("bootstrap"));
    }
    if config.iterations == 0 {
        return Err(EvalError::Bootstrap { index: 0, attempts: 0, message: "iterations must be at least 1".into() });
    }
    let outcomes: Vec<Outcome> =
        (0..config.iterations).into_par_iter().map(|i| one_iteration(frame, spec, config, i)).collect::<Result<_, _>>()?;
    let column = |k: usize| MeasureSummary::from_values(outcomes.iter().map(|o| o.measures[k]).collect());
    Ok(BootstrapReport {
        auc: column(0),
        brier: column(1),
        precision: column(2),
        recall: column(3),
        f_measure: column(4),
        iterations: config.iterations,
        seed: config.seed,
        threshold: config.threshold,
        redraws: outcomes.iter().map(|o| o.redraws).sum(),
    })
}
