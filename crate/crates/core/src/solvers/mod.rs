//! Minimizers for a compiled [`QuboModel`]: exhaustive enumeration (the
//! oracle), simulated annealing, and a statevector QAOA simulation. The
//! penalty-weight retry loop lives in [`lambda_update`].

mod anneal;
mod exhaustive;
mod index;
pub mod lambda_update;
pub mod nelder_mead;
mod qaoa;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use anneal::geometric_beta;
pub use index::QuboIndex;
pub use lambda_update::{next_lambda, solve_with_lambda_update, LambdaRun, UpdateKind, UpdateScope, UpdateStrategy};
pub use qaoa::QaoaSummary;

use crate::compiler::{CompileError, QuboModel};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("{solver} handles at most {cap} binaries, model has {n}")]
    TooManyVariables { solver: SolverKind, n: usize, cap: usize },
    #[error("invalid solver parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Compile(#[from] CompileError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Exhaustive,
    Sa,
    Qaoa,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::Exhaustive => "exhaustive",
            SolverKind::Sa => "sa",
            SolverKind::Qaoa => "qaoa",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("unknown solver `{0}` (expected exhaustive, sa or qaoa)")]
pub struct UnknownSolver(pub String);

impl FromStr for SolverKind {
    type Err = UnknownSolver;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exhaustive" => Ok(SolverKind::Exhaustive),
            "sa" => Ok(SolverKind::Sa),
            "qaoa" => Ok(SolverKind::Qaoa),
            other => Err(UnknownSolver(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SaParams {
    pub sweeps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    /// Divide `beta_start` by the largest coefficient magnitude, so the first
    /// sweeps are hot whatever the energy scale; `beta_end` is kept as given.
    pub auto_scale: bool,
}

impl Default for SaParams {
    fn default() -> Self {
        SaParams { sweeps: 1000, beta_start: 0.1, beta_end: 10.0, auto_scale: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QaoaParams {
    pub layers: usize,
    pub shots: usize,
    pub max_optimizer_iters: usize,
    /// `[gamma_1..gamma_p, beta_1..beta_p]`; replaces the built-in restarts.
    pub initial_angles: Option<Vec<f64>>,
}

impl Default for QaoaParams {
    fn default() -> Self {
        QaoaParams { layers: 2, shots: 100, max_optimizer_iters: 200, initial_angles: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    /// Independent annealing runs.
    pub runs: usize,
    pub seed: u64,
    pub sa: SaParams,
    pub qaoa: QaoaParams,
    pub exhaustive_cap: usize,
    pub qaoa_cap: usize,
    /// Lowest-energy assignments kept by the exhaustive solver.
    pub k_best: usize,
    pub record_time: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            runs: 100,
            seed: 0,
            sa: SaParams::default(),
            qaoa: QaoaParams::default(),
            exhaustive_cap: 26,
            qaoa_cap: 16,
            k_best: 1000,
            record_time: false,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::InvalidParams(m.to_string()));
        if self.runs == 0 {
            return bad("runs must be at least 1");
        }
        if !(self.sa.beta_start > 0.0 && self.sa.beta_start < self.sa.beta_end) {
            return bad("need 0 < beta_start < beta_end");
        }
        if self.qaoa.layers == 0 {
            return bad("qaoa needs at least one layer");
        }
        if self.qaoa.shots == 0 {
            return bad("qaoa needs at least one shot");
        }
        if let Some(a) = &self.qaoa.initial_angles {
            if a.len() != 2 * self.qaoa.layers {
                return bad("initial_angles must hold 2 values per layer");
            }
        }
        if self.exhaustive_cap > 63 {
            return bad("exhaustive_cap above 63");
        }
        Ok(())
    }
}

mod bitstring {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bits: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&bits.iter().map(|b| if *b == 1 { '1' } else { '0' }).collect::<String>())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        s.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(serde::de::Error::custom(format!("invalid bit `{other}`"))),
            })
            .collect()
    }
}

/// One assignment with its energy and decoded source values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Bit `k` belongs to `SolutionSet::variables[k]`.
    #[serde(with = "bitstring")]
    pub bits: Vec<u8>,
    pub energy: f64,
    pub decoded: BTreeMap<String, f64>,
    /// False when some encoding pattern is invalid (e.g. two one-hot bits).
    pub encoding_valid: bool,
}

impl Sample {
    pub fn bit_map(&self, variables: &[String]) -> HashMap<String, u8> {
        variables.iter().cloned().zip(self.bits.iter().copied()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSet {
    pub solver: SolverKind,
    pub variables: Vec<String>,
    pub samples: Vec<Sample>,
    /// Index of the first lowest-energy sample.
    pub best: usize,
    pub best_energy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qaoa: Option<QaoaSummary>,
    /// Wall time per run in seconds; only filled when timing is requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_times: Option<Vec<f64>>,
}

impl SolutionSet {
    pub fn best_sample(&self) -> &Sample {
        &self.samples[self.best]
    }

    pub fn best_decoded(&self) -> &BTreeMap<String, f64> {
        &self.best_sample().decoded
    }

    pub fn best_bits(&self) -> HashMap<String, u8> {
        self.best_sample().bit_map(&self.variables)
    }

    pub fn energies(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.energy).collect()
    }

    pub fn mean_run_time(&self) -> Option<f64> {
        let t = self.run_times.as_ref()?;
        (!t.is_empty()).then(|| t.iter().sum::<f64>() / t.len() as f64)
    }
}

fn build_solution(
    model: &QuboModel,
    index: &QuboIndex,
    solver: SolverKind,
    raw: Vec<Vec<u8>>,
    qaoa: Option<QaoaSummary>,
    run_times: Option<Vec<f64>>,
) -> SolutionSet {
    let samples: Vec<Sample> = raw
        .into_iter()
        .map(|bits| {
            let energy = index.energy(&bits);
            let lookup: HashMap<&str, u8> = index.names.iter().map(String::as_str).zip(bits.iter().copied()).collect();
            let mut decoded = BTreeMap::new();
            let mut encoding_valid = true;
            for plan in &model.encodings {
                let d = plan.decode(|n| lookup.get(n).copied()).expect("every encoding bit is indexed");
                encoding_valid &= d.valid;
                decoded.insert(plan.source.clone(), d.value);
            }
            Sample { bits, energy, decoded, encoding_valid }
        })
        .collect();
    let mut best = 0;
    for (k, s) in samples.iter().enumerate() {
        if s.energy < samples[best].energy {
            best = k;
        }
    }
    let best_energy = samples[best].energy;
    SolutionSet { solver, variables: index.names.clone(), samples, best, best_energy, qaoa, run_times }
}

/// Runs one solver on a compiled model.
pub fn solve(model: &QuboModel, solver: SolverKind, params: &SolverParams) -> Result<SolutionSet, SolverError> {
    params.validate()?;
    let index = QuboIndex::new(model);
    let n = index.len();
    let started = Instant::now();
    let elapsed = |t: Instant| params.record_time.then(|| vec![t.elapsed().as_secs_f64()]);
    let solution = match solver {
        SolverKind::Exhaustive => {
            if n > params.exhaustive_cap {
                return Err(SolverError::TooManyVariables { solver, n, cap: params.exhaustive_cap });
            }
            let ranked = exhaustive::enumerate(&index, params.k_best);
            let raw = ranked.into_iter().map(|(b, _)| b).collect();
            build_solution(model, &index, solver, raw, None, elapsed(started))
        }
        SolverKind::Sa => {
            let runs = anneal::anneal(&index, &params.sa, params.runs, params.seed, params.record_time);
            let times = params.record_time.then(|| runs.iter().map(|(_, t)| t.unwrap_or(0.0)).collect());
            let raw = runs.into_iter().map(|(b, _)| b).collect();
            build_solution(model, &index, solver, raw, None, times)
        }
        SolverKind::Qaoa => {
            if n > params.qaoa_cap {
                return Err(SolverError::TooManyVariables { solver, n, cap: params.qaoa_cap });
            }
            let (raw, summary) = qaoa::run(&index, &params.qaoa, params.seed);
            build_solution(model, &index, solver, raw, Some(summary), elapsed(started))
        }
    };
    Ok(solution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::{compile, CompileConfig};
    use crate::problem::{Direction, Problem};

    fn single(expr: &str, vars: &[&str]) -> QuboModel {
        let mut p = Problem::new();
        for v in vars {
            p.add_binary(v).unwrap();
        }
        p.add_objective(expr, Direction::Minimize, 1.0).unwrap();
        compile(&p, &CompileConfig::default()).unwrap()
    }

    #[test]
    fn one_variable_everywhere() {
        let m = single("b", &["b"]);
        let params = SolverParams { runs: 5, ..SolverParams::default() };
        for kind in [SolverKind::Exhaustive, SolverKind::Sa, SolverKind::Qaoa] {
            let s = solve(&m, kind, &params).unwrap();
            assert_eq!(s.best_energy, 0.0, "{kind}");
            assert_eq!(s.best_decoded()["b"], 0.0);
        }
    }

    #[test]
    fn constant_objective_has_one_empty_sample() {
        let m = single("7", &[]);
        let s = solve(&m, SolverKind::Exhaustive, &SolverParams::default()).unwrap();
        assert_eq!(s.samples.len(), 1);
        assert_eq!(s.best_energy, 7.0);
        let s = solve(&m, SolverKind::Sa, &SolverParams { runs: 3, ..SolverParams::default() }).unwrap();
        assert_eq!(s.energies(), vec![7.0; 3]);
    }

    #[test]
    fn exhaustive_ranks_the_landscape() {
        let m = single("b1 + b2 - 3*b1*b2", &["b1", "b2"]);
        let s = solve(&m, SolverKind::Exhaustive, &SolverParams::default()).unwrap();
        assert_eq!(s.energies(), vec![-1.0, 0.0, 1.0, 1.0]);
        assert_eq!(s.best_sample().bits, vec![1, 1]);
        let s = solve(&m, SolverKind::Exhaustive, &SolverParams { k_best: 2, ..SolverParams::default() }).unwrap();
        assert_eq!(s.energies(), vec![-1.0, 0.0]);
    }

    #[test]
    fn qaoa_two_variable_example() {
        let m = single("b1 + b2 - 3*b1*b2", &["b1", "b2"]);
        let s = solve(&m, SolverKind::Qaoa, &SolverParams::default()).unwrap();
        assert_eq!(s.best_energy, -1.0);
        let q = s.qaoa.unwrap();
        assert!(q.expected_energy < 0.0);
    }

    #[test]
    fn caps_are_enforced() {
        let vars: Vec<String> = (0..5).map(|k| format!("x{k}")).collect();
        let refs: Vec<&str> = vars.iter().map(String::as_str).collect();
        let m = single(&vars.join(" + "), &refs);
        let params = SolverParams { exhaustive_cap: 4, qaoa_cap: 4, ..SolverParams::default() };
        assert!(matches!(solve(&m, SolverKind::Exhaustive, &params), Err(SolverError::TooManyVariables { cap: 4, n: 5, .. })));
        assert!(matches!(solve(&m, SolverKind::Qaoa, &params), Err(SolverError::TooManyVariables { .. })));
    }

    #[test]
    fn params_are_validated() {
        let mut p = SolverParams::default();
        p.sa.beta_start = 20.0;
        assert!(p.validate().is_err());
        let p = SolverParams { runs: 0, ..SolverParams::default() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn solver_names() {
        for k in [SolverKind::Exhaustive, SolverKind::Sa, SolverKind::Qaoa] {
            assert_eq!(k.to_string().parse::<SolverKind>().unwrap(), k);
        }
        assert!("tabu".parse::<SolverKind>().is_err());
    }
}
