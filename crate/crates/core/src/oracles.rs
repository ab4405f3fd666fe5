//! Reversible data-loading and XOR oracles, and the joint preparation
//! pipeline that turns two private tables into the XOR-superposition state.

use num_complex::Complex64;
use thiserror::Error;

use crate::qstate::{
    map_fibers, swap_involution, MeasureMode, Measurement, QuantumState, Register, RegisterLayout,
    StateError, MIN_BRANCH_PROBABILITY,
};

pub const ALICE_ADDRESS: &str = "A_a";
pub const ALICE_DATA: &str = "D_a";
pub const BOB_ADDRESS: &str = "A_b";
pub const BOB_DATA: &str = "D_b";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(transparent)]
    State(#[from] StateError),
    #[error("data table is empty")]
    EmptyTable,
    #[error("data table repeats value {0}")]
    DuplicateEntry(usize),
    #[error("data value {value} does not fit in {bits} bits")]
    EntryOutOfRange { value: usize, bits: usize },
    #[error("register {register} is {actual} qubits wide, expected {expected}")]
    WidthMismatch {
        register: String,
        expected: usize,
        actual: usize,
    },
    #[error("uniform superposition over zero values")]
    ZeroCount,
    #[error("cannot spread {count} values over register {register} of width {width}")]
    CountTooLarge {
        count: usize,
        register: String,
        width: usize,
    },
    #[error("register {0} is not |0⟩ in every branch")]
    RegisterNotZero(String),
    #[error("tables use different value widths ({0} vs {1} bits)")]
    ValueBitsMismatch(usize, usize),
}

pub type Result<T> = std::result::Result<T, OracleError>;

/// `⌈log₂ x⌉`, with `ceil_log2(0) = ceil_log2(1) = 0`.
pub fn ceil_log2(x: usize) -> usize {
    if x <= 1 {
        0
    } else {
        (usize::BITS - (x - 1).leading_zeros()) as usize
    }
}

/// Qubits needed to address `count` values; never less than one.
pub fn register_width(count: usize) -> usize {
    ceil_log2(count).max(1)
}

/// A party's private values, one per address.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataTable {
    entries: Vec<usize>,
    value_bits: usize,
}

impl DataTable {
    /// Entries must be distinct and below `2^value_bits`.
    pub fn new(entries: Vec<usize>, value_bits: usize) -> Result<Self> {
        if entries.is_empty() {
            return Err(OracleError::EmptyTable);
        }
        if value_bits == 0 {
            return Err(OracleError::EntryOutOfRange {
                value: entries[0],
                bits: 0,
            });
        }
        let mut seen = std::collections::HashSet::new();
        for &value in &entries {
            if value >> value_bits != 0 {
                return Err(OracleError::EntryOutOfRange {
                    value,
                    bits: value_bits,
                });
            }
            if !seen.insert(value) {
                return Err(OracleError::DuplicateEntry(value));
            }
        }
        Ok(DataTable {
            entries,
            value_bits,
        })
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn value_bits(&self) -> usize {
        self.value_bits
    }

    pub fn address_bits(&self) -> usize {
        register_width(self.entries.len())
    }
}

/// A data-loading oracle `|i⟩|x⟩ → |i⟩|x ⊕ v_i⟩` that can be applied without
/// reading its values out.
pub trait LoadOracle: Send + Sync {
    fn record_count(&self) -> usize;
    fn value_bits(&self) -> usize;
    /// XOR-loads into `data` on raw amplitudes; addresses past the last
    /// record are left untouched.
    fn load_into(&self, amplitudes: &mut [Complex64], addr: &Register, data: &Register);
}

impl LoadOracle for DataTable {
    fn record_count(&self) -> usize {
        self.entries.len()
    }

    fn value_bits(&self) -> usize {
        self.value_bits
    }

    fn load_into(&self, amplitudes: &mut [Complex64], addr: &Register, data: &Register) {
        let table = &self.entries;
        let shift = data.offset();
        swap_involution(amplitudes, |i| match table.get(addr.extract(i)) {
            Some(&v) => i ^ (v << shift),
            None => i,
        });
    }
}

/// `|u⟩|v⟩ → |u⟩|u ⊕ v⟩` on raw amplitudes.
pub fn xor_into(amplitudes: &mut [Complex64], src: &Register, dst: &Register) {
    let shift = dst.offset();
    swap_involution(amplitudes, |i| i ^ (src.extract(i) << shift));
}

/// Householder reflection mapping `|0⟩` to `count^{-1/2} Σ_{v<count} |v⟩`.
/// It is real, symmetric and its own inverse.
#[derive(Debug, Clone)]
pub struct UniformReflection {
    count: usize,
    head: f64,
    tail: f64,
}

impl UniformReflection {
    pub fn new(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(OracleError::ZeroCount);
        }
        let s = 1.0 / (count as f64).sqrt();
        let norm = (2.0 - 2.0 * s).sqrt();
        let (head, tail) = if count == 1 {
            (0.0, 0.0)
        } else {
            ((1.0 - s) / norm, -s / norm)
        };
        Ok(UniformReflection { count, head, tail })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn apply(&self, amplitudes: &mut [Complex64], reg: &Register) {
        if self.count == 1 {
            return;
        }
        let (head, tail, count) = (self.head, self.tail, self.count);
        map_fibers(amplitudes, reg, |fiber| {
            let mut dot = fiber[0] * head;
            for a in &fiber[1..count] {
                dot += a * tail;
            }
            let twice = dot * 2.0;
            fiber[0] -= twice * head;
            for a in &mut fiber[1..count] {
                *a -= twice * tail;
            }
        });
    }
}

/// Puts `register` (currently |0⟩ everywhere) into the uniform superposition
/// of its first `count` values.
pub fn prepare_uniform(state: &mut QuantumState, register: &str, count: usize) -> Result<()> {
    let reg = state.layout().register(register)?.clone();
    if count == 0 {
        return Err(OracleError::ZeroCount);
    }
    if count > reg.dim() {
        return Err(OracleError::CountTooLarge {
            count,
            register: register.to_string(),
            width: reg.width(),
        });
    }
    let stray: f64 = state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(i, _)| reg.extract(*i) != 0)
        .map(|(_, a)| a.norm_sqr())
        .sum();
    if stray > 1e-24 {
        return Err(OracleError::RegisterNotZero(register.to_string()));
    }
    UniformReflection::new(count)?.apply(state.amplitudes_mut(), &reg);
    Ok(())
}

fn expect_width(layout: &RegisterLayout, register: &str, expected: usize) -> Result<()> {
    let actual = layout.width(register)?;
    if actual != expected {
        return Err(OracleError::WidthMismatch {
            register: register.to_string(),
            expected,
            actual,
        });
    }
    Ok(())
}

/// `|i⟩_addr|x⟩_data → |i⟩|x ⊕ table[i]⟩` for `i < len(table)`, identity
/// elsewhere.
pub fn oracle_load(state: &mut QuantumState, addr: &str, data: &str, table: &DataTable) -> Result<()> {
    expect_width(state.layout(), addr, table.address_bits())?;
    expect_width(state.layout(), data, table.value_bits())?;
    let entries = table.entries();
    state.apply_permutation(
        &[addr, data],
        |v| {
            if let Some(&a) = entries.get(v[0]) {
                v[1] ^= a;
            }
        },
        false,
    )?;
    Ok(())
}

/// `|u⟩_src|v⟩_dst → |u⟩|u ⊕ v⟩`.
pub fn oracle_xor(state: &mut QuantumState, src: &str, dst: &str) -> Result<()> {
    let src_width = state.layout().width(src)?;
    expect_width(state.layout(), dst, src_width)?;
    state.apply_permutation(&[src, dst], |v| v[1] ^= v[0], false)?;
    Ok(())
}

/// Both parties' tables plus the four-register joint layout
/// `A_a:m, D_a:r, A_b:n, D_b:r`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparationSpec {
    pub table_a: DataTable,
    pub table_b: DataTable,
    layout: RegisterLayout,
}

impl PreparationSpec {
    pub fn new(table_a: DataTable, table_b: DataTable) -> Result<Self> {
        if table_a.value_bits() != table_b.value_bits() {
            return Err(OracleError::ValueBitsMismatch(
                table_a.value_bits(),
                table_b.value_bits(),
            ));
        }
        let layout = joint_layout(
            table_a.address_bits(),
            table_b.address_bits(),
            table_a.value_bits(),
        )?;
        Ok(PreparationSpec {
            table_a,
            table_b,
            layout,
        })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    /// Search-space size `M·N`.
    pub fn search_space(&self) -> usize {
        self.table_a.len() * self.table_b.len()
    }

    pub fn circuit(&self) -> Result<PreparationCircuit<'_>> {
        PreparationCircuit::new(&self.layout, &self.table_a, &self.table_b)
    }
}

pub fn joint_layout(m: usize, n: usize, r: usize) -> Result<RegisterLayout> {
    Ok(RegisterLayout::new([
        (ALICE_ADDRESS, m),
        (ALICE_DATA, r),
        (BOB_ADDRESS, n),
        (BOB_DATA, r),
    ])?)
}

/// Runs the full honest preparation from `|0…0⟩`:
/// `(MN)^{-1/2} Σ_{i,j} |i⟩|0⟩|j⟩|a_i ⊕ b_j⟩`.
pub fn prepare_joint(spec: &PreparationSpec) -> Result<QuantumState> {
    let mut state = QuantumState::zero(spec.layout());
    prepare_uniform(&mut state, ALICE_ADDRESS, spec.table_a.len())?;
    oracle_load(&mut state, ALICE_ADDRESS, ALICE_DATA, &spec.table_a)?;
    prepare_uniform(&mut state, BOB_ADDRESS, spec.table_b.len())?;
    oracle_load(&mut state, BOB_ADDRESS, BOB_DATA, &spec.table_b)?;
    oracle_xor(&mut state, ALICE_DATA, BOB_DATA)?;
    oracle_load(&mut state, ALICE_ADDRESS, ALICE_DATA, &spec.table_a)?;
    Ok(state)
}

/// The preparation pipeline as a unitary on raw amplitudes, usable inside
/// larger layouts and in reverse.
pub struct PreparationCircuit<'a> {
    alice: &'a dyn LoadOracle,
    bob: &'a dyn LoadOracle,
    alice_addr: Register,
    alice_data: Register,
    bob_addr: Register,
    bob_data: Register,
    spread_a: UniformReflection,
    spread_b: UniformReflection,
}

impl<'a> PreparationCircuit<'a> {
    pub fn new(layout: &RegisterLayout, alice: &'a dyn LoadOracle, bob: &'a dyn LoadOracle) -> Result<Self> {
        if alice.value_bits() != bob.value_bits() {
            return Err(OracleError::ValueBitsMismatch(
                alice.value_bits(),
                bob.value_bits(),
            ));
        }
        expect_width(layout, ALICE_ADDRESS, register_width(alice.record_count()))?;
        expect_width(layout, BOB_ADDRESS, register_width(bob.record_count()))?;
        expect_width(layout, ALICE_DATA, alice.value_bits())?;
        expect_width(layout, BOB_DATA, bob.value_bits())?;
        Ok(PreparationCircuit {
            alice,
            bob,
            alice_addr: layout.register(ALICE_ADDRESS)?.clone(),
            alice_data: layout.register(ALICE_DATA)?.clone(),
            bob_addr: layout.register(BOB_ADDRESS)?.clone(),
            bob_data: layout.register(BOB_DATA)?.clone(),
            spread_a: UniformReflection::new(alice.record_count())?,
            spread_b: UniformReflection::new(bob.record_count())?,
        })
    }

    pub fn apply(&self, amplitudes: &mut [Complex64]) {
        self.spread_a.apply(amplitudes, &self.alice_addr);
        self.alice.load_into(amplitudes, &self.alice_addr, &self.alice_data);
        self.spread_b.apply(amplitudes, &self.bob_addr);
        self.bob.load_into(amplitudes, &self.bob_addr, &self.bob_data);
        xor_into(amplitudes, &self.alice_data, &self.bob_data);
        self.alice.load_into(amplitudes, &self.alice_addr, &self.alice_data);
    }

    /// Every stage is self-inverse, so the inverse runs them backwards.
    pub fn apply_inverse(&self, amplitudes: &mut [Complex64]) {
        self.alice.load_into(amplitudes, &self.alice_addr, &self.alice_data);
        xor_into(amplitudes, &self.alice_data, &self.bob_data);
        self.bob.load_into(amplitudes, &self.bob_addr, &self.bob_data);
        self.spread_b.apply(amplitudes, &self.bob_addr);
        self.alice.load_into(amplitudes, &self.alice_addr, &self.alice_data);
        self.spread_a.apply(amplitudes, &self.alice_addr);
    }

    pub fn bob_data(&self) -> &Register {
        &self.bob_data
    }
}

/// Result of the uncompute-and-measure check on Alice's data register.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    /// Exact probability that the data register reads 0.
    pub pass_probability: f64,
    /// Sampled residue on `D_a`; absent in distribution mode.
    pub residue: Option<usize>,
    /// Collapsed state: on the sampled outcome, or on 0 in distribution
    /// mode when that outcome is possible.
    pub post_state: Option<QuantumState>,
}

impl CheckOutcome {
    pub fn passed(&self) -> Option<bool> {
        self.residue.map(|r| r == 0)
    }
}

/// Re-applies Alice's loading oracle and measures `D_a`; zero means pass.
pub fn cheat_check(state: &QuantumState, table_a: &DataTable, mode: MeasureMode) -> Result<CheckOutcome> {
    let mut work = state.clone();
    oracle_load(&mut work, ALICE_ADDRESS, ALICE_DATA, table_a)?;
    // Ratio form keeps the all-pass and all-fail cases exact.
    let marginal = work.marginal(ALICE_DATA)?;
    let pass_probability = marginal[0] / marginal.iter().sum::<f64>();
    match work.measure_register(ALICE_DATA, mode)? {
        Measurement::Sampled(branch) => {
            Ok(CheckOutcome {
                pass_probability,
                residue: Some(branch.outcome),
                post_state: Some(branch.state),
            })
        }
        Measurement::Distribution { branches, .. } => {
            let post_state = if pass_probability >= MIN_BRANCH_PROBABILITY {
                branches.into_iter().find(|b| b.outcome == 0).map(|b| b.state)
            } else {
                None
            };
            Ok(CheckOutcome {
                pass_probability,
                residue: None,
                post_state,
            })
        }
    }
}
