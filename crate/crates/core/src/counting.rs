//! Quantum counting of matching pairs: the Grover iterate built from the
//! joint preparation, phase estimation on a counting register, and decoding
//! of the estimated phase into a match count.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracles::{
    ceil_log2, prepare_joint, OracleError, PreparationCircuit, PreparationSpec, ALICE_DATA,
    BOB_DATA,
};
use crate::qstate::{sample_index, QuantumState, Register, StateError};

pub const COUNTING: &str = "C";

/// Extra counting qubits beyond `⌈log₂ K⌉`.
pub const DEFAULT_EXTRA_BITS: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CountingError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error("phase estimation needs {required} qubits but the engine allows {available}")]
    QubitCap { required: usize, available: usize },
    #[error("invalid counting configuration: {0}")]
    InvalidConfig(String),
    #[error("state is not an honest joint preparation: {0}")]
    NotHonestPreparation(String),
}

pub type Result<T> = std::result::Result<T, CountingError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum CountingMode {
    /// Compute the full outcome distribution and report its MAP decode.
    Exact,
    /// Draw one outcome with a seeded generator.
    Sample { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountingConfig {
    pub counting_bits: usize,
    pub mode: CountingMode,
    pub search_space: usize,
}

impl CountingConfig {
    pub fn new(search_space: usize, counting_bits: usize, mode: CountingMode) -> Result<Self> {
        if counting_bits == 0 {
            return Err(CountingError::InvalidConfig(
                "counting register needs at least one qubit".into(),
            ));
        }
        if search_space == 0 {
            return Err(CountingError::InvalidConfig("search space is empty".into()));
        }
        Ok(CountingConfig {
            counting_bits,
            mode,
            search_space,
        })
    }

    /// `p = ⌈log₂ K⌉ + 3`, exact mode.
    pub fn for_search_space(search_space: usize) -> Self {
        CountingConfig {
            counting_bits: default_counting_bits(search_space),
            mode: CountingMode::Exact,
            search_space: search_space.max(1),
        }
    }
}

pub fn default_counting_bits(search_space: usize) -> usize {
    ceil_log2(search_space) + DEFAULT_EXTRA_BITS
}

/// Phase-estimation outcome decoded into a count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountEstimate {
    pub y: usize,
    pub counting_bits: usize,
    pub search_space: usize,
    pub theta_hat: f64,
    pub t_hat: f64,
    pub t_rounded: usize,
    /// Probability of the reported outcome `y`.
    pub outcome_probability: f64,
    /// Mass of all outcomes decoding to the true count, when it is known and
    /// the distribution was computed.
    pub success_prob: Option<f64>,
}

/// `θ̂ = 2πy/2^p`, `t̂ = K sin²(θ̂/2)`, rounded and clamped to `[0, K]`.
pub fn decode_outcome(y: usize, counting_bits: usize, search_space: usize) -> (f64, f64, usize) {
    let n = (1usize << counting_bits) as f64;
    let theta = 2.0 * PI * y as f64 / n;
    let k = search_space as f64;
    let t_hat = (k * (PI * y as f64 / n).sin().powi(2)).clamp(0.0, k);
    let t_rounded = (t_hat.round() as usize).min(search_space);
    (theta, t_hat, t_rounded)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Intersection {
    Intersect,
    Disjoint,
}

pub fn decide_intersection(estimate: &CountEstimate) -> Intersection {
    if estimate.t_rounded >= 1 {
        Intersection::Intersect
    } else {
        Intersection::Disjoint
    }
}

/// Exact distribution over counting-register outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDistribution {
    pub counting_bits: usize,
    pub search_space: usize,
    pub probabilities: Vec<f64>,
}

impl PhaseDistribution {
    pub fn decode(&self, y: usize) -> usize {
        decode_outcome(y, self.counting_bits, self.search_space).2
    }

    /// Total probability of outcomes that decode to `t`.
    pub fn mass_decoding_to(&self, t: usize) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .filter(|(y, _)| self.decode(*y) == t)
            .map(|(_, p)| p)
            .sum()
    }

    /// Most probable decoded count (ties to the smaller count) and the most
    /// probable outcome among those decoding to it (ties to the smaller y).
    pub fn map_outcome(&self) -> usize {
        let mut mass = vec![0.0; self.search_space + 1];
        for (y, p) in self.probabilities.iter().enumerate() {
            mass[self.decode(y)] += p;
        }
        let best_t = argmax(&mass);
        let mut best_y = None;
        for (y, &p) in self.probabilities.iter().enumerate() {
            if self.decode(y) != best_t {
                continue;
            }
            match best_y {
                Some(b) if self.probabilities[b] >= p => {}
                _ => best_y = Some(y),
            }
        }
        best_y.unwrap_or(0)
    }

    pub fn estimate(&self, y: usize, true_count: Option<usize>) -> CountEstimate {
        let (theta_hat, t_hat, t_rounded) = decode_outcome(y, self.counting_bits, self.search_space);
        CountEstimate {
            y,
            counting_bits: self.counting_bits,
            search_space: self.search_space,
            theta_hat,
            t_hat,
            t_rounded,
            outcome_probability: self.probabilities[y],
            success_prob: true_count.map(|t| self.mass_decoding_to(t)),
        }
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// `G = −A·S₀·A⁻¹·S_χ` on the joint work registers, where `A` is the
/// preparation circuit, `S₀` reflects about `|0…0⟩` and `S_χ` flips the sign
/// of branches with `D_b = 0`.
///
/// Operates on raw slices spanning exactly the work layout, so it can act as
/// the target of a controlled operation.
pub struct GroverIterate<'a> {
    circuit: PreparationCircuit<'a>,
    marked: Register,
}

impl<'a> GroverIterate<'a> {
    pub fn new(circuit: PreparationCircuit<'a>) -> Self {
        let marked = circuit.bob_data().clone();
        GroverIterate { circuit, marked }
    }

    fn flip_marked(&self, amplitudes: &mut [Complex64]) {
        for (i, a) in amplitudes.iter_mut().enumerate() {
            if self.marked.extract(i) == 0 {
                *a = -*a;
            }
        }
    }

    /// `−S₀`: negate everything except the all-zero amplitude.
    fn reflect_zero(amplitudes: &mut [Complex64]) {
        for a in amplitudes.iter_mut().skip(1) {
            *a = -*a;
        }
    }

    pub fn apply(&self, amplitudes: &mut [Complex64]) {
        self.flip_marked(amplitudes);
        self.circuit.apply_inverse(amplitudes);
        Self::reflect_zero(amplitudes);
        self.circuit.apply(amplitudes);
    }

    pub fn apply_inverse(&self, amplitudes: &mut [Complex64]) {
        self.circuit.apply_inverse(amplitudes);
        Self::reflect_zero(amplitudes);
        self.circuit.apply(amplitudes);
        self.flip_marked(amplitudes);
    }
}

pub fn grover_iterate(spec: &PreparationSpec) -> Result<GroverIterate<'_>> {
    Ok(GroverIterate::new(spec.circuit()?))
}

/// Applies `Π_k controlled-G^{2^k}` with control bit `k` of the counting
/// register, by repeated application. Valid for any state; cost grows as
/// `4^p`, so it is only practical for small counting registers.
pub fn apply_controlled_powers(state: &mut QuantumState, grover: &GroverIterate<'_>) -> Result<()> {
    let width = state.layout().width(COUNTING)?;
    for k in 0..width {
        state.apply_controlled(COUNTING, k, |block| {
            for _ in 0..(1usize << k) {
                grover.apply(block);
            }
        })?;
    }
    Ok(())
}

/// Phase estimation result.
#[derive(Debug, Clone)]
pub struct PhaseEstimate {
    pub estimate: CountEstimate,
    pub distribution: PhaseDistribution,
}

/// Runs counting on the honest joint preparation of `spec`.
pub fn phase_estimate(spec: &PreparationSpec, cfg: &CountingConfig) -> Result<PhaseEstimate> {
    let start = prepare_joint(spec)?;
    let grover = grover_iterate(spec)?;
    let true_count = exact_count(&start)?;
    estimate_from_state(&start, &grover, cfg, Some(true_count))
}

/// Phase estimation of `grover` seeded with an arbitrary work state.
///
/// The counting register starts uniform, so the joint state is
/// `2^{-p/2} Σ_y |y⟩ ⊗ |ψ⟩`; the controlled powers `Π_k c-G^{2^k}` map it to
/// `2^{-p/2} Σ_y |y⟩ ⊗ G^y|ψ⟩`, which is generated here block by block with
/// one `G` per block instead of [`apply_controlled_powers`]' `O(4^p)`.
pub fn estimate_from_state(
    start: &QuantumState,
    grover: &GroverIterate<'_>,
    cfg: &CountingConfig,
    true_count: Option<usize>,
) -> Result<PhaseEstimate> {
    let p = cfg.counting_bits;
    if p == 0 {
        return Err(CountingError::InvalidConfig(
            "counting register needs at least one qubit".into(),
        ));
    }
    let work = start.layout();
    let layout = work.append(COUNTING, p).map_err(|e| match e {
        StateError::QubitCap {
            required,
            available,
        } => CountingError::QubitCap {
            required,
            available,
        },
        other => other.into(),
    })?;
    let outcomes = 1usize << p;
    let block = work.dim();
    let scale = 1.0 / (outcomes as f64).sqrt();

    let mut amplitudes = vec![Complex64::new(0.0, 0.0); layout.dim()];
    let mut current = start.amplitudes().to_vec();
    for (y, chunk) in amplitudes.chunks_mut(block).enumerate() {
        for (dst, src) in chunk.iter_mut().zip(&current) {
            *dst = src * scale;
        }
        if y + 1 < outcomes {
            grover.apply(&mut current);
        }
    }
    let mut state = QuantumState::from_amplitudes(&layout, amplitudes)?;
    state.inverse_qft(COUNTING)?;

    let distribution = PhaseDistribution {
        counting_bits: p,
        search_space: cfg.search_space,
        probabilities: state.marginal(COUNTING)?,
    };
    let y = match cfg.mode {
        CountingMode::Exact => distribution.map_outcome(),
        CountingMode::Sample { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            sample_index(&distribution.probabilities, &mut rng)
        }
    };
    let estimate = distribution.estimate(y, true_count);
    Ok(PhaseEstimate {
        estimate,
        distribution,
    })
}

/// Number of branches with `D_b = 0` in an honest joint preparation, from
/// probability mass: `t = K · P(D_b = 0)` with `K` the branch count.
pub fn exact_count(state: &QuantumState) -> Result<usize> {
    let d_a = state.layout().register(ALICE_DATA)?.clone();
    let d_b = state.layout().register(BOB_DATA)?.clone();
    let support = state.support(1e-9);
    if support.is_empty() {
        return Err(CountingError::NotHonestPreparation("empty support".into()));
    }
    let branches = support.len();
    let expected = 1.0 / (branches as f64).sqrt();
    let mut marked_mass = 0.0;
    for (index, amp) in &support {
        if (amp.norm() - expected).abs() > 1e-9 {
            return Err(CountingError::NotHonestPreparation(format!(
                "branch {index} has magnitude {} instead of {expected}",
                amp.norm()
            )));
        }
        if d_a.extract(*index) != 0 {
            return Err(CountingError::NotHonestPreparation(format!(
                "branch {index} has a nonzero D_a"
            )));
        }
        if d_b.extract(*index) == 0 {
            marked_mass += amp.norm_sqr();
        }
    }
    Ok((marked_mass * branches as f64).round() as usize)
}
