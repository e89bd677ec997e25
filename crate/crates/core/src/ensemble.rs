//! Monte Carlo sampling over independent noise realizations.
//!
//! Sample `i` of an ensemble uses the derived seed
//! `derive_sample_seed(base_seed, i)`, so the set of trajectories is fully
//! determined by the base seed and is independent of how samples are
//! scheduled across threads: results are collected into pre-assigned slots
//! in sample order.

use rayon::prelude::*;

use crate::error::SimError;
use crate::mesh::Grid;
use crate::noise::derive_sample_seed;
use crate::stepper::{run_simulation, ModelParams, ObserverConfig, Trajectory, QOI_NAMES};

/// Per-sample trajectories plus ensemble mean and standard deviation of each
/// quantity of interest at every recorded time.
#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub times: Vec<f64>,
    pub qoi_names: Vec<&'static str>,
    /// `samples[i]` is the full trajectory of sample `i`.
    pub samples: Vec<Trajectory>,
    /// `mean[q][k]`: ensemble mean of quantity `q` at time index `k`.
    pub mean: Vec<Vec<f64>>,
    /// Sample standard deviation (n-1 divisor); zero for a single sample.
    pub std: Vec<Vec<f64>>,
}

/// Run `n_samples` independent trajectories and aggregate their statistics.
pub fn run_ensemble(
    grid: &Grid,
    params: &ModelParams,
    base_seed: u64,
    n_samples: usize,
    obs: &ObserverConfig,
) -> Result<EnsembleResult, SimError> {
    if n_samples == 0 {
        return Err(SimError::InvalidInput("n_samples must be positive".into()));
    }
    let seeds: Vec<u64> = (0..n_samples)
        .map(|i| derive_sample_seed(base_seed, i as u64))
        .collect();
    run_with_seeds(grid, params, &seeds, obs)
}

/// Run one trajectory per explicit seed. Used by fixed-seed parameter
/// sweeps, where every parameter value must see the same noise stream.
pub fn run_with_seeds(
    grid: &Grid,
    params: &ModelParams,
    seeds: &[u64],
    obs: &ObserverConfig,
) -> Result<EnsembleResult, SimError> {
    params.validate()?;
    let outcomes: Vec<Result<Trajectory, SimError>> = seeds
        .par_iter()
        .map(|&seed| run_simulation(grid, params, seed, obs))
        .collect();
    let mut samples = Vec::with_capacity(outcomes.len());
    for (i, r) in outcomes.into_iter().enumerate() {
        match r {
            Ok(t) => samples.push(t),
            Err(e) => {
                return Err(SimError::SampleFailed {
                    sample: i,
                    source: Box::new(e),
                })
            }
        }
    }
    aggregate(samples)
}

fn aggregate(samples: Vec<Trajectory>) -> Result<EnsembleResult, SimError> {
    let times = samples[0].times.clone();
    for s in &samples[1..] {
        if s.times != times {
            return Err(SimError::InvalidInput(
                "samples recorded different time grids".into(),
            ));
        }
    }
    let n = samples.len() as f64;
    let n_times = times.len();
    let mut mean = Vec::with_capacity(QOI_NAMES.len());
    let mut std = Vec::with_capacity(QOI_NAMES.len());
    for q in 0..QOI_NAMES.len() {
        let mut mu = vec![0.0; n_times];
        let mut sd = vec![0.0; n_times];
        for k in 0..n_times {
            let vals: Vec<f64> = samples.iter().map(|s| s.qoi_at(k)[q]).collect();
            let m = vals.iter().sum::<f64>() / n;
            mu[k] = m;
            if samples.len() > 1 {
                let ss: f64 = vals.iter().map(|v| (v - m) * (v - m)).sum();
                sd[k] = (ss / (n - 1.0)).sqrt();
            }
        }
        mean.push(mu);
        std.push(sd);
    }
    Ok(EnsembleResult {
        times,
        qoi_names: QOI_NAMES.to_vec(),
        samples,
        mean,
        std,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_setup() -> (Grid, ModelParams, ObserverConfig) {
        let grid = Grid::build(6, 6, 1.0, 1.0).unwrap();
        let params = ModelParams {
            t_end: 0.02,
            ..ModelParams::default()
        };
        (grid, params, ObserverConfig::default())
    }

    #[test]
    fn rejects_zero_samples() {
        let (grid, params, obs) = small_setup();
        assert!(run_ensemble(&grid, &params, 1, 0, &obs).is_err());
    }

    #[test]
    fn single_sample_zero_std() {
        let (grid, params, obs) = small_setup();
        let r = run_ensemble(&grid, &params, 7, 1, &obs).unwrap();
        assert_eq!(r.samples.len(), 1);
        for q in &r.std {
            assert!(q.iter().all(|&v| v == 0.0));
        }
        for q in 0..r.qoi_names.len() {
            for k in 0..r.times.len() {
                assert_eq!(r.mean[q][k], r.samples[0].qoi_at(k)[q]);
            }
        }
    }

    #[test]
    fn samples_differ_and_stats_match_hand_reduction() {
        let (grid, params, obs) = small_setup();
        let r = run_ensemble(&grid, &params, 7, 3, &obs).unwrap();
        let last = r.times.len() - 1;
        let a = r.samples[0].qoi_at(last)[0];
        let b = r.samples[1].qoi_at(last)[0];
        assert_ne!(a, b, "distinct seeds should give distinct trajectories");
        let vals: Vec<f64> = (0..3).map(|i| r.samples[i].qoi_at(last)[0]).collect();
        let m = vals.iter().sum::<f64>() / 3.0;
        let sd = (vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / 2.0).sqrt();
        assert!((r.mean[0][last] - m).abs() < 1e-15);
        assert!((r.std[0][last] - sd).abs() < 1e-15);
    }

    #[test]
    fn reproducible_across_thread_counts() {
        let (grid, params, obs) = small_setup();
        let r1 = {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
            pool.install(|| run_ensemble(&grid, &params, 11, 4, &obs).unwrap())
        };
        let r4 = {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
            pool.install(|| run_ensemble(&grid, &params, 11, 4, &obs).unwrap())
        };
        for q in 0..r1.qoi_names.len() {
            assert_eq!(r1.mean[q], r4.mean[q]);
            assert_eq!(r1.std[q], r4.std[q]);
        }
        for (a, b) in r1.samples.iter().zip(&r4.samples) {
            assert_eq!(a.final_state.phi, b.final_state.phi);
        }
    }

    #[test]
    fn shared_seeds_reuse_noise() {
        let (grid, params, obs) = small_setup();
        let seeds = [5u64, 5u64];
        let r = run_with_seeds(&grid, &params, &seeds, &obs).unwrap();
        assert_eq!(r.samples[0].final_state.phi, r.samples[1].final_state.phi);
    }
}
