//! Statevector simulation of the alternating cost/mixer circuit.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::exhaustive::bits_of;
use super::index::QuboIndex;
use super::nelder_mead::minimize;
use super::QaoaParams;

/// Optimization outcome reported next to the sampled bitstrings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaoaSummary {
    /// `[gamma_1..gamma_p, beta_1..beta_p]`.
    pub angles: Vec<f64>,
    pub expected_energy: f64,
    /// Mean energy over all basis states (the p = 0 state).
    pub uniform_energy: f64,
    pub converged: bool,
}

/// Angle seeds for the restarts: linear ramps at three phase/mixer scales.
fn initial_angle_sets(layers: usize) -> Vec<Vec<f64>> {
    [(1.0, 0.5), (3.0, 0.8), (6.0, 0.3)]
        .iter()
        .map(|&(g, b)| {
            let gammas = (0..layers).map(|k| g * (k + 1) as f64 / layers as f64);
            let betas = (0..layers).map(|k| b * (1.0 - k as f64 / layers as f64));
            gammas.chain(betas).collect()
        })
        .collect()
}

pub(crate) struct Circuit {
    n: usize,
    energies: Vec<f64>,
    /// Energies rescaled to [0, 1]; used in the phase operator.
    phases: Vec<f64>,
}

impl Circuit {
    pub(crate) fn new(index: &QuboIndex) -> Self {
        let n = index.len();
        let energies: Vec<f64> = (0..1u64 << n).map(|z| index.energy(&bits_of(z, n))).collect();
        let lo = energies.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = if hi - lo > 1e-12 { hi - lo } else { 1.0 };
        let phases = energies.iter().map(|e| (e - lo) / span).collect();
        Circuit { n, energies, phases }
    }

    pub(crate) fn state(&self, angles: &[f64]) -> Vec<Complex64> {
        let dim = self.energies.len();
        let layers = angles.len() / 2;
        let amp = 1.0 / (dim as f64).sqrt();
        let mut psi = vec![Complex64::new(amp, 0.0); dim];
        for layer in 0..layers {
            let gamma = angles[layer];
            let beta = angles[layers + layer];
            for (a, &ph) in psi.iter_mut().zip(&self.phases) {
                *a *= Complex64::from_polar(1.0, -gamma * ph);
            }
            // exp(-i beta X) on every qubit
            let (c, s) = (beta.cos(), beta.sin());
            let mix = Complex64::new(0.0, -s);
            for k in 0..self.n {
                let bit = 1usize << k;
                for z in 0..dim {
                    if z & bit == 0 {
                        let (a, b) = (psi[z], psi[z | bit]);
                        psi[z] = a * c + b * mix;
                        psi[z | bit] = a * mix + b * c;
                    }
                }
            }
        }
        psi
    }

    pub(crate) fn expectation(&self, angles: &[f64]) -> f64 {
        self.state(angles).iter().zip(&self.energies).map(|(a, e)| a.norm_sqr() * e).sum()
    }

    pub(crate) fn uniform_energy(&self) -> f64 {
        self.energies.iter().sum::<f64>() / self.energies.len() as f64
    }
}

/// Optimizes the angles and samples `shots` bitstrings.
pub(crate) fn run(index: &QuboIndex, params: &QaoaParams, seed: u64) -> (Vec<Vec<u8>>, QaoaSummary) {
    let circuit = Circuit::new(index);
    let starts = match &params.initial_angles {
        Some(a) => vec![a.clone()],
        None => initial_angle_sets(params.layers),
    };
    let mut best: Option<(Vec<f64>, f64, bool)> = None;
    for x0 in &starts {
        let m = minimize(|x| circuit.expectation(x), x0, 0.3, params.max_optimizer_iters, 1e-10);
        if best.as_ref().is_none_or(|b| m.value < b.1) {
            best = Some((m.x, m.value, m.converged));
        }
    }
    let (angles, expected_energy, converged) = best.expect("at least one start");
    if !converged {
        log::warn!("angle optimization stopped after {} iterations without converging; using best angles seen", params.max_optimizer_iters);
    }
    let probs: Vec<f64> = circuit.state(&angles).iter().map(|a| a.norm_sqr()).collect();
    let mut cumulative = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in &probs {
        acc += p;
        cumulative.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shots = (0..params.shots)
        .map(|_| {
            let u = rng.gen::<f64>() * acc;
            let z = cumulative.partition_point(|&c| c <= u).min(probs.len() - 1);
            bits_of(z as u64, index.len())
        })
        .collect();
    let summary = QaoaSummary { angles, expected_energy, uniform_energy: circuit.uniform_energy(), converged };
    (shots, summary)
}
