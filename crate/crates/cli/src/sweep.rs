//! Window/chunk ablation sweeps over an item suite.
//!
//! Each grid cell runs the whole suite on a fresh simulated
//! sliding-window backend and reports the accuracy and total virtual
//! time for that (window, chunk) pair. Cells are independent and run on
//! the rayon pool; results come back in grid order regardless of
//! completion order.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use smoothread_core::backends::{BackendError, CostConfig, SimBackend, TaskProgram};
use smoothread_core::benchgen::EvalItem;
use smoothread_core::engine::{
    plan_chunks, run_one_step, run_smooth, run_unsmooth, EngineError, RunOptions, Strategy,
};
use smoothread_core::metrics::score_item;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep config: {0}")]
    Config(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// Explicit window sizes; leave empty when `ratio` drives the grid.
    pub windows: Vec<u64>,
    pub chunks: Vec<u64>,
    /// Fixed chunk:window ratio, e.g. `(1, 2)` for windows twice the
    /// chunk size. Mutually exclusive with an explicit window list.
    pub ratio: Option<(u64, u64)>,
    pub strategy: Strategy,
    pub early_stop: bool,
    pub seed: u64,
    pub cost: CostConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            windows: Vec::new(),
            chunks: Vec::new(),
            ratio: None,
            strategy: Strategy::Smooth,
            early_stop: true,
            seed: 0,
            cost: CostConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepCell {
    pub window_tokens: u64,
    pub chunk_tokens: u64,
    /// Mean item score in [0, 1].
    pub accuracy: f64,
    /// Summed virtual time over the suite, seconds.
    pub virtual_time_seconds: f64,
    pub mean_chunks_read: f64,
    pub mean_total_tokens: f64,
}

#[derive(Debug, Serialize)]
pub struct SweepOutcome {
    pub seed: u64,
    pub strategy: Strategy,
    pub early_stop: bool,
    pub cells: Vec<SweepCell>,
}

impl SweepOutcome {
    pub fn cell(&self, window: u64, chunk: u64) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.window_tokens == window && c.chunk_tokens == chunk)
    }
}

fn grid(cfg: &SweepConfig) -> Result<Vec<(u64, u64)>, SweepError> {
    if cfg.chunks.is_empty() {
        return Err(SweepError::Config("chunk list is empty".into()));
    }
    match cfg.ratio {
        Some((rc, rw)) => {
            if !cfg.windows.is_empty() {
                return Err(SweepError::Config(
                    "ratio mode and an explicit window list are mutually exclusive".into(),
                ));
            }
            if rc == 0 || rw == 0 {
                return Err(SweepError::Config("ratio parts must be positive".into()));
            }
            Ok(cfg.chunks.iter().map(|&c| (c * rw / rc, c)).collect())
        }
        None => {
            if cfg.windows.is_empty() {
                return Err(SweepError::Config("window list is empty".into()));
            }
            Ok(cfg
                .windows
                .iter()
                .flat_map(|&w| cfg.chunks.iter().map(move |&c| (w, c)))
                .collect())
        }
    }
}

/// Run one strategy over the suite at one (window, chunk) setting.
pub fn run_cell(
    window: u64,
    chunk: u64,
    suite: &[EvalItem],
    strategy: Strategy,
    early_stop: bool,
    cost: CostConfig,
) -> Result<SweepCell, SweepError> {
    let opts = RunOptions {
        early_stop,
        ..RunOptions::default()
    };
    let mut score_sum = 0.0;
    let mut time_sum = 0.0;
    let mut chunks_read_sum = 0usize;
    let mut token_sum = 0u64;

    for item in suite {
        let program = TaskProgram::for_task(item.task)?;
        let mut backend = SimBackend::sliding_window(window, program, cost);
        let trace = match strategy {
            Strategy::OneStep => run_one_step(&mut backend, &item.context, &item.query)?,
            Strategy::Unsmooth => {
                let chunks = plan_chunks(&item.context, chunk).map_err(EngineError::from)?;
                run_unsmooth(&mut backend, &chunks, &item.query, &opts)?
            }
            Strategy::Smooth => {
                let chunks = plan_chunks(&item.context, chunk).map_err(EngineError::from)?;
                run_smooth(&mut backend, &chunks, &item.query, &opts)?
            }
        };
        score_sum += score_item(item, &trace.answer).value;
        time_sum += trace.virtual_time_seconds;
        chunks_read_sum += trace.chunks_read;
        token_sum += trace.total_prefill_tokens + trace.total_decode_tokens;
    }

    let n = suite.len() as f64;
    Ok(SweepCell {
        window_tokens: window,
        chunk_tokens: chunk,
        accuracy: score_sum / n,
        virtual_time_seconds: time_sum,
        mean_chunks_read: chunks_read_sum as f64 / n,
        mean_total_tokens: token_sum as f64 / n,
    })
}

/// Run the full grid; cells execute in parallel.
pub fn run_sweep(cfg: &SweepConfig, suite: &[EvalItem]) -> Result<SweepOutcome, SweepError> {
    if suite.is_empty() {
        return Err(SweepError::Config("item suite is empty".into()));
    }
    let cells = grid(cfg)?
        .into_par_iter()
        .map(|(w, c)| run_cell(w, c, suite, cfg.strategy, cfg.early_stop, cfg.cost))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepOutcome {
        seed: cfg.seed,
        strategy: cfg.strategy,
        early_stop: cfg.early_stop,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use smoothread_core::benchgen::{gen_niah, NiahSpec};

    fn tiny_suite() -> Vec<EvalItem> {
        (0..3)
            .map(|i| gen_niah(&NiahSpec::new(2000, 1, 900 + i)).unwrap())
            .collect()
    }

    #[test]
    fn ratio_and_windows_are_mutually_exclusive() {
        let cfg = SweepConfig {
            windows: vec![512],
            chunks: vec![256],
            ratio: Some((1, 2)),
            ..SweepConfig::default()
        };
        assert!(matches!(
            run_sweep(&cfg, &tiny_suite()),
            Err(SweepError::Config(_))
        ));
    }

    #[test]
    fn ratio_grid_doubles_windows() {
        let cfg = SweepConfig {
            chunks: vec![256, 512],
            ratio: Some((1, 2)),
            ..SweepConfig::default()
        };
        let outcome = run_sweep(&cfg, &tiny_suite()).unwrap();
        assert!(outcome.cell(512, 256).is_some());
        assert!(outcome.cell(1024, 512).is_some());
    }

    #[test]
    fn empty_suite_rejected() {
        let cfg = SweepConfig {
            windows: vec![512],
            chunks: vec![256],
            ..SweepConfig::default()
        };
        assert!(matches!(run_sweep(&cfg, &[]), Err(SweepError::Config(_))));
    }

    #[test]
    fn deterministic_across_runs() {
        let cfg = SweepConfig {
            windows: vec![1024],
            chunks: vec![256],
            ..SweepConfig::default()
        };
        let suite = tiny_suite();
        let a = run_sweep(&cfg, &suite).unwrap();
        let b = run_sweep(&cfg, &suite).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }
}
