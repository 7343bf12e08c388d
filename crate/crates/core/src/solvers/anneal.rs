use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::index::QuboIndex;
use super::SaParams;

/// Inverse temperature at `sweep` of a geometric schedule.
pub fn geometric_beta(start: f64, end: f64, sweep: usize, sweeps: usize) -> f64 {
    if sweeps <= 1 {
        return end;
    }
    start * (end / start).powf(sweep as f64 / (sweeps - 1) as f64)
}

/// One annealing run; returns the best state seen and its wall time.
fn run(index: &QuboIndex, params: &SaParams, seed: u64, record_time: bool) -> (Vec<u8>, Option<f64>) {
    let started = record_time.then(Instant::now);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = index.len();
    let mut bits: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
    let mut energy = index.energy(&bits);
    let mut best = (energy, bits.clone());
    let beta_start = if params.auto_scale {
        (params.beta_start / index.max_abs_coefficient()).min(params.beta_end)
    } else {
        params.beta_start
    };
    for sweep in 0..params.sweeps {
        let beta = geometric_beta(beta_start, params.beta_end, sweep, params.sweeps);
        for i in 0..n {
            let delta = index.flip_delta(&bits, i);
            if delta <= 0.0 || rng.gen::<f64>() < (-beta * delta).exp() {
                bits[i] ^= 1;
                energy += delta;
                if energy < best.0 - 1e-12 {
                    best = (energy, bits.clone());
                }
            }
        }
    }
    (best.1, started.map(|t| t.elapsed().as_secs_f64()))
}

/// Independent runs in parallel; run `r` uses seed `seed + r`.
pub(crate) fn anneal(index: &QuboIndex, params: &SaParams, runs: usize, seed: u64, record_time: bool) -> Vec<(Vec<u8>, Option<f64>)> {
    (0..runs as u64)
        .into_par_iter()
        .map(|r| run(index, params, seed.wrapping_add(r), record_time))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_endpoints() {
        assert_eq!(geometric_beta(0.1, 10.0, 0, 1000), 0.1);
        assert!((geometric_beta(0.1, 10.0, 999, 1000) - 10.0).abs() < 1e-12);
        assert!((geometric_beta(0.1, 10.0, 1, 3) - 1.0).abs() < 1e-12);
        assert_eq!(geometric_beta(0.1, 10.0, 0, 1), 10.0);
    }
}
