//! Dense state-vector engine with named registers.
//!
//! Bit packing: registers occupy contiguous bit ranges in layout order, the
//! first register in the least-significant bits. A basis index is therefore
//! `Σ value(reg_k) << offset(reg_k)` with `offset(reg_0) = 0`. Every module
//! relies on this convention; [`RegisterLayout::encode`] is the reference.

use std::collections::HashSet;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{FftDirection, FftPlanner};
use serde::Serialize;
use thiserror::Error;

/// Default upper bound on the qubit count of a layout (2^24 amplitudes).
pub const DEFAULT_MAX_QUBITS: usize = 24;
/// Default upper bound on the dimension of a reduced density matrix.
pub const DEFAULT_MAX_DENSITY_DIM: usize = 1 << 12;
/// Branches below this probability cannot be renormalized.
pub const MIN_BRANCH_PROBABILITY: f64 = 1e-15;
/// Eigenvalues below this are dropped from entropy sums.
pub const ENTROPY_CUTOFF: f64 = 1e-12;

const DENSITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("duplicate register name {0}")]
    DuplicateRegister(String),
    #[error("register {0} must be at least one qubit wide")]
    EmptyRegister(String),
    #[error("layout needs {required} qubits but only {available} are available")]
    QubitCap { required: usize, available: usize },
    #[error("unknown register {0}")]
    UnknownRegister(String),
    #[error("value {value} exceeds register {register} width {width}")]
    ValueOutOfRange {
        register: String,
        value: usize,
        width: usize,
    },
    #[error("map on registers [{registers}] is not a bijection: {detail}")]
    NotBijective { registers: String, detail: String },
    #[error("outcome {outcome} of register {register} has probability {probability:e}; cannot renormalize")]
    ZeroProbability {
        register: String,
        outcome: usize,
        probability: f64,
    },
    #[error("density matrix dimension {dim} exceeds limit {limit}")]
    DensityTooLarge { dim: usize, limit: usize },
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
    #[error("amplitude vector has length {got}, layout needs {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error("register selection is empty")]
    EmptySelection,
}

pub type Result<T> = std::result::Result<T, StateError>;

/// A named, contiguous group of qubits inside a [`RegisterLayout`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Register {
    name: String,
    width: usize,
    offset: usize,
}

impl Register {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    /// Number of basis values, `2^width`.
    pub fn dim(&self) -> usize {
        1 << self.width
    }

    pub fn mask(&self) -> usize {
        (self.dim() - 1) << self.offset
    }

    #[inline]
    pub fn extract(&self, index: usize) -> usize {
        (index >> self.offset) & (self.dim() - 1)
    }

    #[inline]
    pub fn replace(&self, index: usize, value: usize) -> usize {
        (index & !self.mask()) | (value << self.offset)
    }
}

/// Ordered register list with fixed bit offsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegisterLayout {
    registers: Vec<Register>,
    total_qubits: usize,
    #[serde(skip)]
    max_qubits: usize,
}

impl RegisterLayout {
    pub fn new<S: Into<String>>(registers: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        Self::with_max_qubits(registers, DEFAULT_MAX_QUBITS)
    }

    pub fn with_max_qubits<S: Into<String>>(
        registers: impl IntoIterator<Item = (S, usize)>,
        max_qubits: usize,
    ) -> Result<Self> {
        let mut layout = RegisterLayout {
            registers: Vec::new(),
            total_qubits: 0,
            max_qubits,
        };
        for (name, width) in registers {
            layout.push(name.into(), width)?;
        }
        Ok(layout)
    }

    fn push(&mut self, name: String, width: usize) -> Result<()> {
        if width == 0 {
            return Err(StateError::EmptyRegister(name));
        }
        if self.registers.iter().any(|r| r.name == name) {
            return Err(StateError::DuplicateRegister(name));
        }
        let required = self.total_qubits + width;
        if required > self.max_qubits {
            return Err(StateError::QubitCap {
                required,
                available: self.max_qubits,
            });
        }
        self.registers.push(Register {
            name,
            width,
            offset: self.total_qubits,
        });
        self.total_qubits = required;
        Ok(())
    }

    /// Returns a copy with one more register in the most-significant position.
    pub fn append(&self, name: impl Into<String>, width: usize) -> Result<Self> {
        let mut extended = self.clone();
        extended.push(name.into(), width)?;
        Ok(extended)
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn total_qubits(&self) -> usize {
        self.total_qubits
    }

    pub fn max_qubits(&self) -> usize {
        self.max_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.total_qubits
    }

    pub fn register(&self, name: &str) -> Result<&Register> {
        self.registers
            .iter()
            .find(|r| r.name == name)
            .ok_or_else(|| StateError::UnknownRegister(name.to_string()))
    }

    pub fn width(&self, name: &str) -> Result<usize> {
        self.register(name).map(Register::width)
    }

    /// Basis index of an assignment; unassigned registers are 0.
    pub fn encode(&self, assignment: &[(&str, usize)]) -> Result<usize> {
        let mut index = 0;
        for &(name, value) in assignment {
            let reg = self.register(name)?;
            if value >= reg.dim() {
                return Err(StateError::ValueOutOfRange {
                    register: name.to_string(),
                    value,
                    width: reg.width,
                });
            }
            index = reg.replace(index, value);
        }
        Ok(index)
    }

    /// Register values of a basis index, in layout order.
    pub fn decode(&self, index: usize) -> Vec<usize> {
        self.registers.iter().map(|r| r.extract(index)).collect()
    }

    fn lookup_all(&self, names: &[&str]) -> Result<Vec<Register>> {
        names
            .iter()
            .map(|n| self.register(n).cloned())
            .collect::<Result<Vec<_>>>()
    }
}

impl fmt::Display for RegisterLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .registers
            .iter()
            .map(|r| format!("{}:{}", r.name, r.width))
            .collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// Normalized amplitude vector over a [`RegisterLayout`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    layout: RegisterLayout,
    amplitudes: Vec<Complex64>,
}

/// One outcome of a register measurement with its collapsed state.
#[derive(Debug, Clone)]
pub struct MeasurementBranch {
    pub outcome: usize,
    pub probability: f64,
    pub state: QuantumState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureMode {
    Sample { seed: u64 },
    Distribution,
}

#[derive(Debug, Clone)]
pub enum Measurement {
    Sampled(MeasurementBranch),
    /// `probabilities[v]` for every value; `branches` only for outcomes that
    /// can be renormalized.
    Distribution {
        probabilities: Vec<f64>,
        branches: Vec<MeasurementBranch>,
    },
}

impl QuantumState {
    /// All-zero basis state.
    pub fn zero(layout: &RegisterLayout) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); layout.dim()];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        QuantumState {
            layout: layout.clone(),
            amplitudes,
        }
    }

    pub fn basis_state(layout: &RegisterLayout, assignment: &[(&str, usize)]) -> Result<Self> {
        let index = layout.encode(assignment)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); layout.dim()];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(QuantumState {
            layout: layout.clone(),
            amplitudes,
        })
    }

    /// Wraps an amplitude vector, checking length and normalization (1e-12).
    pub fn from_amplitudes(layout: &RegisterLayout, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != layout.dim() {
            return Err(StateError::LengthMismatch {
                got: amplitudes.len(),
                expected: layout.dim(),
            });
        }
        let norm = norm_sqr(&amplitudes);
        if (norm - 1.0).abs() > 1e-12 {
            return Err(StateError::NotNormalized(norm));
        }
        Ok(QuantumState {
            layout: layout.clone(),
            amplitudes,
        })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Raw mutable access for kernels that preserve the norm.
    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn amplitude(&self, assignment: &[(&str, usize)]) -> Result<Complex64> {
        Ok(self.amplitudes[self.layout.encode(assignment)?])
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amplitudes)
    }

    /// `⟨self|other⟩`; layouts must have equal dimension.
    pub fn inner(&self, other: &QuantumState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `self ⊗ other`, with `self`'s registers in the low bits.
    pub fn tensor(&self, other: &QuantumState) -> Result<QuantumState> {
        let mut layout = self.layout.clone();
        for r in &other.layout.registers {
            layout.push(r.name.clone(), r.width)?;
        }
        let mut amplitudes = Vec::with_capacity(layout.dim());
        for b in &other.amplitudes {
            amplitudes.extend(self.amplitudes.iter().map(|a| a * b));
        }
        Ok(QuantumState { layout, amplitudes })
    }

    /// Nonzero amplitudes (|a| > `cutoff`) as `(index, amplitude)`.
    pub fn support(&self, cutoff: f64) -> Vec<(usize, Complex64)> {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > cutoff)
            .map(|(i, a)| (i, *a))
            .collect()
    }

    /// Applies a reversible classical map to the listed registers.
    ///
    /// `f` receives the current values of `registers` (in the order given)
    /// and overwrites them with the image. With `verify` set, `f` is first
    /// checked for injectivity over all `2^k` inputs.
    pub fn apply_permutation<F>(&mut self, registers: &[&str], f: F, verify: bool) -> Result<()>
    where
        F: Fn(&mut [usize]),
    {
        if registers.is_empty() {
            return Err(StateError::EmptySelection);
        }
        let regs = self.layout.lookup_all(registers)?;
        if verify {
            verify_bijection(&regs, &f)?;
        }
        let mut values = vec![0usize; regs.len()];
        let mut out = vec![Complex64::new(0.0, 0.0); self.amplitudes.len()];
        for (index, amp) in self.amplitudes.iter().enumerate() {
            for (v, r) in values.iter_mut().zip(&regs) {
                *v = r.extract(index);
            }
            f(&mut values);
            let mut target = index;
            for (&v, r) in values.iter().zip(&regs) {
                if v >= r.dim() {
                    return Err(StateError::ValueOutOfRange {
                        register: r.name.clone(),
                        value: v,
                        width: r.width,
                    });
                }
                target = r.replace(target, v);
            }
            out[target] = *amp;
        }
        self.amplitudes = out;
        Ok(())
    }

    /// Applies `op` to every fiber of `register` (the `2^width` amplitudes
    /// sharing the values of all other registers). `op` must be unitary.
    pub fn map_fibers<F>(&mut self, register: &str, op: F) -> Result<()>
    where
        F: FnMut(&mut [Complex64]),
    {
        let reg = self.layout.register(register)?.clone();
        map_fibers(&mut self.amplitudes, &reg, op);
        Ok(())
    }

    /// Applies a `2^w × 2^w` unitary matrix to one register.
    pub fn apply_register_unitary(&mut self, register: &str, matrix: &DMatrix<Complex64>) -> Result<()> {
        let reg = self.layout.register(register)?.clone();
        if matrix.nrows() != reg.dim() || matrix.ncols() != reg.dim() {
            return Err(StateError::LengthMismatch {
                got: matrix.nrows(),
                expected: reg.dim(),
            });
        }
        let mut tmp = vec![Complex64::new(0.0, 0.0); reg.dim()];
        map_fibers(&mut self.amplitudes, &reg, |fiber| {
            for (r, t) in tmp.iter_mut().enumerate() {
                *t = (0..fiber.len()).map(|c| matrix[(r, c)] * fiber[c]).sum();
            }
            fiber.copy_from_slice(&tmp);
        });
        Ok(())
    }

    /// Controlled operation: wherever bit `bit` of `control` is set, `op`
    /// acts on the block of registers that precede `control` in the layout.
    /// Each call receives one contiguous block of `2^offset(control)`
    /// amplitudes.
    pub fn apply_controlled<F>(&mut self, control: &str, bit: usize, mut op: F) -> Result<()>
    where
        F: FnMut(&mut [Complex64]),
    {
        let reg = self.layout.register(control)?.clone();
        if bit >= reg.width {
            return Err(StateError::ValueOutOfRange {
                register: reg.name,
                value: bit,
                width: reg.width,
            });
        }
        let block = 1usize << reg.offset;
        let control_mask = 1usize << (reg.offset + bit);
        for (k, chunk) in self.amplitudes.chunks_mut(block).enumerate() {
            if (k * block) & control_mask != 0 {
                op(chunk);
            }
        }
        Ok(())
    }

    /// Inverse quantum Fourier transform on one register:
    /// `|y⟩ → 2^{-w/2} Σ_k e^{-2πi yk/2^w} |k⟩`.
    pub fn inverse_qft(&mut self, register: &str) -> Result<()> {
        let reg = self.layout.register(register)?.clone();
        let n = reg.dim();
        let fft = FftPlanner::<f64>::new().plan_fft(n, FftDirection::Forward);
        let scale = 1.0 / (n as f64).sqrt();
        map_fibers(&mut self.amplitudes, &reg, |fiber| {
            fft.process(fiber);
            for a in fiber.iter_mut() {
                *a *= scale;
            }
        });
        Ok(())
    }

    /// Probability of each value of `register`.
    pub fn marginal(&self, register: &str) -> Result<Vec<f64>> {
        let reg = self.layout.register(register)?;
        let mut probs = vec![0.0; reg.dim()];
        for (index, a) in self.amplitudes.iter().enumerate() {
            probs[reg.extract(index)] += a.norm_sqr();
        }
        Ok(probs)
    }

    /// Projects `register` onto `value` and renormalizes.
    pub fn collapse(&self, register: &str, value: usize) -> Result<MeasurementBranch> {
        let reg = self.layout.register(register)?;
        if value >= reg.dim() {
            return Err(StateError::ValueOutOfRange {
                register: register.to_string(),
                value,
                width: reg.width,
            });
        }
        let probability: f64 = self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| reg.extract(*i) == value)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        if probability < MIN_BRANCH_PROBABILITY {
            return Err(StateError::ZeroProbability {
                register: register.to_string(),
                outcome: value,
                probability,
            });
        }
        let scale = 1.0 / probability.sqrt();
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                if reg.extract(i) == value {
                    a * scale
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Ok(MeasurementBranch {
            outcome: value,
            probability,
            state: QuantumState {
                layout: self.layout.clone(),
                amplitudes,
            },
        })
    }

    /// Draws one outcome of `register` from `rng` and collapses.
    pub fn measure_with<R: Rng + ?Sized>(&self, register: &str, rng: &mut R) -> Result<MeasurementBranch> {
        let probs = self.marginal(register)?;
        let value = sample_index(&probs, rng);
        self.collapse(register, value)
    }

    pub fn measure_register(&self, register: &str, mode: MeasureMode) -> Result<Measurement> {
        match mode {
            MeasureMode::Sample { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                self.measure_with(register, &mut rng).map(Measurement::Sampled)
            }
            MeasureMode::Distribution => {
                let probabilities = self.marginal(register)?;
                let branches = probabilities
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p >= MIN_BRANCH_PROBABILITY)
                    .map(|(v, _)| self.collapse(register, v))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Measurement::Distribution {
                    probabilities,
                    branches,
                })
            }
        }
    }

    pub fn reduced_density(&self, registers: &[&str]) -> Result<DensityMatrix> {
        self.reduced_density_with_limit(registers, DEFAULT_MAX_DENSITY_DIM)
    }

    /// Partial trace over every register not listed. The kept registers are
    /// packed little-endian in the order given.
    pub fn reduced_density_with_limit(&self, registers: &[&str], limit: usize) -> Result<DensityMatrix> {
        if registers.is_empty() {
            return Err(StateError::EmptySelection);
        }
        let kept = self.layout.lookup_all(registers)?;
        let mut seen = HashSet::new();
        for r in &kept {
            if !seen.insert(r.name.as_str()) {
                return Err(StateError::DuplicateRegister(r.name.clone()));
            }
        }
        let kept_bits: usize = kept.iter().map(|r| r.width).sum();
        let dim = 1usize << kept_bits;
        if dim > limit {
            return Err(StateError::DensityTooLarge { dim, limit });
        }
        let traced: Vec<&Register> = self
            .layout
            .registers
            .iter()
            .filter(|r| !seen.contains(r.name.as_str()))
            .collect();
        let env_dim = 1usize << (self.layout.total_qubits - kept_bits);

        // Ψ[k, e] so that ρ = Ψ Ψ†.
        let mut psi = DMatrix::<Complex64>::zeros(dim, env_dim);
        for (index, a) in self.amplitudes.iter().enumerate() {
            let (mut k, mut shift) = (0usize, 0usize);
            for r in &kept {
                k |= r.extract(index) << shift;
                shift += r.width;
            }
            let (mut e, mut eshift) = (0usize, 0usize);
            for r in &traced {
                e |= r.extract(index) << eshift;
                eshift += r.width;
            }
            psi[(k, e)] = *a;
        }
        let rho = &psi * psi.adjoint();
        DensityMatrix::new(rho)
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        let rho = DensityMatrix { entries };
        rho.validate()?;
        Ok(rho)
    }

    /// `|ψ⟩⟨ψ|` over the whole layout.
    pub fn from_pure(state: &QuantumState) -> Result<Self> {
        Self::from_ensemble(&[(1.0, state.clone())])
    }

    /// `Σ p_i |ψ_i⟩⟨ψ_i|`; weights must sum to 1.
    pub fn from_ensemble(members: &[(f64, QuantumState)]) -> Result<Self> {
        let Some((_, first)) = members.first() else {
            return Err(StateError::EmptySelection);
        };
        let dim = first.amplitudes.len();
        if dim > DEFAULT_MAX_DENSITY_DIM {
            return Err(StateError::DensityTooLarge {
                dim,
                limit: DEFAULT_MAX_DENSITY_DIM,
            });
        }
        let mut entries = DMatrix::<Complex64>::zeros(dim, dim);
        for (p, state) in members {
            if state.amplitudes.len() != dim {
                return Err(StateError::LengthMismatch {
                    got: state.amplitudes.len(),
                    expected: dim,
                });
            }
            let v = nalgebra::DVector::from_column_slice(&state.amplitudes);
            entries += (&v * v.adjoint()) * Complex64::new(*p, 0.0);
        }
        Self::new(entries)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut values: Vec<f64> = self
            .entries
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        values.sort_by(f64::total_cmp);
        values
    }

    fn validate(&self) -> Result<()> {
        let m = &self.entries;
        if m.nrows() != m.ncols() {
            return Err(StateError::InvalidDensity(format!(
                "not square ({}x{})",
                m.nrows(),
                m.ncols()
            )));
        }
        let herm_dev = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm_dev > DENSITY_TOLERANCE {
            return Err(StateError::InvalidDensity(format!(
                "not Hermitian (deviation {herm_dev:e})"
            )));
        }
        let tr = m.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > DENSITY_TOLERANCE {
            return Err(StateError::InvalidDensity(format!("trace is {tr}")));
        }
        if let Some(&min) = self.eigenvalues().first() {
            if min < -DENSITY_TOLERANCE {
                return Err(StateError::InvalidDensity(format!(
                    "negative eigenvalue {min:e}"
                )));
            }
        }
        Ok(())
    }

    /// `-Σ λ log₂ λ` over eigenvalues above [`ENTROPY_CUTOFF`], in bits.
    pub fn von_neumann_entropy(&self) -> f64 {
        let s: f64 = self
            .eigenvalues()
            .into_iter()
            .filter(|&l| l > ENTROPY_CUTOFF)
            .map(|l| -l * l.log2())
            .sum();
        s.max(0.0)
    }
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    rho.von_neumann_entropy()
}

pub fn norm_sqr(amplitudes: &[Complex64]) -> f64 {
    amplitudes.iter().map(|a| a.norm_sqr()).sum()
}

/// Visits each fiber of `reg` in `amplitudes`; see [`QuantumState::map_fibers`].
pub fn map_fibers<F>(amplitudes: &mut [Complex64], reg: &Register, mut op: F)
where
    F: FnMut(&mut [Complex64]),
{
    let n = reg.dim();
    let stride = 1usize << reg.offset;
    let low_mask = stride - 1;
    let outer = amplitudes.len() / n;
    let mut fiber = vec![Complex64::new(0.0, 0.0); n];
    for r in 0..outer {
        let base = ((r & !low_mask) << reg.width) | (r & low_mask);
        for (v, slot) in fiber.iter_mut().enumerate() {
            *slot = amplitudes[base + v * stride];
        }
        op(&mut fiber);
        for (v, slot) in fiber.iter().enumerate() {
            amplitudes[base + v * stride] = *slot;
        }
    }
}

/// Applies an index involution in place by swapping each pair once.
/// `f` must satisfy `f(f(i)) = i`.
#[inline]
pub fn swap_involution<F>(amplitudes: &mut [Complex64], f: F)
where
    F: Fn(usize) -> usize,
{
    for i in 0..amplitudes.len() {
        let j = f(i);
        if j > i {
            amplitudes.swap(i, j);
        }
    }
}

fn verify_bijection<F>(regs: &[Register], f: &F) -> Result<()>
where
    F: Fn(&mut [usize]),
{
    let names = || {
        regs.iter()
            .map(|r| r.name.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    };
    let total: usize = regs.iter().map(|r| r.width).sum();
    let mut hit = vec![false; 1usize << total];
    let mut values = vec![0usize; regs.len()];
    for packed in 0..(1usize << total) {
        let mut shift = 0;
        for (v, r) in values.iter_mut().zip(regs) {
            *v = (packed >> shift) & (r.dim() - 1);
            shift += r.width;
        }
        f(&mut values);
        let mut image = 0usize;
        let mut shift = 0;
        for (&v, r) in values.iter().zip(regs) {
            if v >= r.dim() {
                return Err(StateError::NotBijective {
                    registers: names(),
                    detail: format!("image value {v} does not fit register {}", r.name),
                });
            }
            image |= v << shift;
            shift += r.width;
        }
        if std::mem::replace(&mut hit[image], true) {
            return Err(StateError::NotBijective {
                registers: names(),
                detail: format!("two inputs map to packed value {image}"),
            });
        }
    }
    Ok(())
}

/// Inverse-CDF draw from an (approximately) normalized distribution.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let total: f64 = probs.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last_nonzero = i;
        if target < acc {
            return i;
        }
    }
    last_nonzero
}
