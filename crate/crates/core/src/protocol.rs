//! The two-party protocol: party contexts, the five-step run with adversary
//! hooks, exact detection probabilities, leakage analytics and message cost.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::counting::{
    decide_intersection, default_counting_bits, estimate_from_state, CountEstimate,
    CountingConfig, CountingError, CountingMode, GroverIterate, Intersection,
};
use crate::geometry::{classical_intersect, rasterize, GeometryError, GridConfig, GridSet, Scene};
use crate::oracles::{
    cheat_check, oracle_load, oracle_xor, prepare_uniform, register_width, DataTable,
    LoadOracle, OracleError, PreparationCircuit, ALICE_ADDRESS, ALICE_DATA, BOB_ADDRESS,
    BOB_DATA,
};
use crate::qstate::{
    DensityMatrix, MeasureMode, Measurement, QuantumState, Register, RegisterLayout, StateError,
};

pub const TRANSCRIPT_FORMAT: &str = "pqgi-transcript/1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Counting(#[from] CountingError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error("scenes use different grids ({0} vs {1})")]
    GridMismatch(String, String),
    #[error("invalid adversary: {0}")]
    InvalidAdversary(String),
}

pub type Result<T> = std::result::Result<T, ProtocolError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Party {
    Alice,
    Bob,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE", tag = "kind")]
pub enum AdversaryStrategy {
    Honest,
    /// Bob measures Alice's address and data registers on receipt.
    BobMeasureAll,
    /// Bob measures Alice's data register on receipt.
    BobMeasureData,
    /// Bob XORs `mask` into Alice's data register before returning it.
    BobTamper { mask: usize },
    /// Alice measures Bob's data register before counting.
    AliceMeasureResult,
}

impl AdversaryStrategy {
    pub fn validate(&self, data_bits: usize) -> Result<()> {
        if let AdversaryStrategy::BobTamper { mask } = *self {
            if mask == 0 {
                return Err(ProtocolError::InvalidAdversary(
                    "tamper mask must be nonzero".into(),
                ));
            }
            if mask >> data_bits != 0 {
                return Err(ProtocolError::InvalidAdversary(format!(
                    "tamper mask {mask} does not fit the {data_bits}-bit data register"
                )));
            }
        }
        Ok(())
    }

    pub fn all(mask: usize) -> [AdversaryStrategy; 5] {
        [
            AdversaryStrategy::Honest,
            AdversaryStrategy::BobMeasureAll,
            AdversaryStrategy::BobMeasureData,
            AdversaryStrategy::BobTamper { mask },
            AdversaryStrategy::AliceMeasureResult,
        ]
    }
}

impl fmt::Display for AdversaryStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdversaryStrategy::Honest => write!(f, "honest"),
            AdversaryStrategy::BobMeasureAll => write!(f, "bob-measure-all"),
            AdversaryStrategy::BobMeasureData => write!(f, "bob-measure-data"),
            AdversaryStrategy::BobTamper { mask } => write!(f, "bob-tamper:{mask}"),
            AdversaryStrategy::AliceMeasureResult => write!(f, "alice-measure-result"),
        }
    }
}

impl FromStr for AdversaryStrategy {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let strategy = match (name.to_ascii_lowercase().replace('_', "-").as_str(), arg) {
            ("honest", None) => AdversaryStrategy::Honest,
            ("bob-measure-all", None) => AdversaryStrategy::BobMeasureAll,
            ("bob-measure-data", None) => AdversaryStrategy::BobMeasureData,
            ("alice-measure-result", None) => AdversaryStrategy::AliceMeasureResult,
            ("bob-tamper", Some(mask)) => {
                let mask = mask.parse::<usize>().map_err(|_| {
                    ProtocolError::InvalidAdversary(format!("bad tamper mask {mask:?}"))
                })?;
                AdversaryStrategy::BobTamper { mask }
            }
            ("bob-tamper", None) => {
                return Err(ProtocolError::InvalidAdversary(
                    "bob-tamper needs a mask, e.g. bob-tamper:1".into(),
                ))
            }
            _ => return Err(ProtocolError::InvalidAdversary(format!("unknown strategy {s:?}"))),
        };
        Ok(strategy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Intersect,
    Disjoint,
    Abort,
}

impl From<Intersection> for Verdict {
    fn from(i: Intersection) -> Self {
        match i {
            Intersection::Intersect => Verdict::Intersect,
            Intersection::Disjoint => Verdict::Disjoint,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Intersect => "INTERSECT",
            Verdict::Disjoint => "DISJOINT",
            Verdict::Abort => "ABORT",
        })
    }
}

/// A state in transit between the parties.
#[derive(Debug, Clone)]
pub struct QuantumMessage {
    pub from: Party,
    pub to: Party,
    pub state: QuantumState,
}

impl QuantumMessage {
    pub fn qubits(&self) -> usize {
        self.state.layout().total_qubits()
    }
}

/// Bob's loading oracle lent to Alice for counting. It can be applied but
/// its table cannot be read back.
pub struct SealedOracle(DataTable);

impl LoadOracle for SealedOracle {
    fn record_count(&self) -> usize {
        self.0.record_count()
    }

    fn value_bits(&self) -> usize {
        LoadOracle::value_bits(&self.0)
    }

    fn load_into(&self, amplitudes: &mut [Complex64], addr: &Register, data: &Register) {
        self.0.load_into(amplitudes, addr, data)
    }
}

fn table_for(set: &GridSet, grid: &GridConfig) -> Result<DataTable> {
    let codes = set.serials().iter().map(|&s| grid.code(s)).collect();
    Ok(DataTable::new(codes, grid.data_bits())?)
}

/// Alice's private context: her grid set and loading table.
pub struct Alice {
    table: DataTable,
}

impl Alice {
    pub fn new(set: &GridSet, grid: &GridConfig) -> Result<Self> {
        Ok(Alice {
            table: table_for(set, grid)?,
        })
    }

    pub fn record_count(&self) -> usize {
        self.table.len()
    }

    /// Step 1: `|ψ'_A⟩ = M^{-1/2} Σ_i |i⟩|a_i⟩`, addressed to Bob.
    pub fn prepare(&self) -> Result<QuantumMessage> {
        let layout = RegisterLayout::new([
            (ALICE_ADDRESS, self.table.address_bits()),
            (ALICE_DATA, self.table.value_bits()),
        ])?;
        let mut state = QuantumState::zero(&layout);
        prepare_uniform(&mut state, ALICE_ADDRESS, self.table.len())?;
        oracle_load(&mut state, ALICE_ADDRESS, ALICE_DATA, &self.table)?;
        Ok(QuantumMessage {
            from: Party::Alice,
            to: Party::Bob,
            state,
        })
    }

    /// Step 3: uncompute `D_a` and measure it.
    pub fn check(&self, received: &QuantumState, mode: MeasureMode) -> Result<crate::oracles::CheckOutcome> {
        Ok(cheat_check(received, &self.table, mode)?)
    }

    /// Step 4: counting on the checked state, with Bob's sealed oracle.
    pub fn count(
        &self,
        state: &QuantumState,
        bob: &SealedOracle,
        cfg: &CountingConfig,
        true_count: Option<usize>,
    ) -> Result<crate::counting::PhaseEstimate> {
        let circuit = PreparationCircuit::new(state.layout(), &self.table, bob)?;
        let grover = GroverIterate::new(circuit);
        Ok(estimate_from_state(state, &grover, cfg, true_count)?)
    }
}

/// Bob's private context.
pub struct Bob {
    table: DataTable,
}

impl Bob {
    pub fn new(set: &GridSet, grid: &GridConfig) -> Result<Self> {
        Ok(Bob {
            table: table_for(set, grid)?,
        })
    }

    pub fn record_count(&self) -> usize {
        self.table.len()
    }

    /// Step 1 (Bob's half) and step 2: encode his own registers, append
    /// them to the received state and apply the XOR oracle.
    pub fn combine(&self, received: QuantumState) -> Result<QuantumMessage> {
        let layout = RegisterLayout::new([
            (BOB_ADDRESS, self.table.address_bits()),
            (BOB_DATA, self.table.value_bits()),
        ])?;
        let mut own = QuantumState::zero(&layout);
        prepare_uniform(&mut own, BOB_ADDRESS, self.table.len())?;
        oracle_load(&mut own, BOB_ADDRESS, BOB_DATA, &self.table)?;
        let mut joint = received.tensor(&own)?;
        oracle_xor(&mut joint, ALICE_DATA, BOB_DATA)?;
        Ok(QuantumMessage {
            from: Party::Bob,
            to: Party::Alice,
            state: joint,
        })
    }

    pub fn sealed_oracle(&self) -> SealedOracle {
        SealedOracle(self.table.clone())
    }
}

fn tamper(state: &mut QuantumState, mask: usize) -> Result<()> {
    state.apply_permutation(&[ALICE_DATA], |v| v[0] ^= mask, false)?;
    Ok(())
}

/// Qubit traffic per message, plus the printed formula and classical
/// baselines for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostSummary {
    pub alice_to_bob_qubits: usize,
    pub bob_to_alice_qubits: usize,
    pub total_qubits: usize,
    /// `2⌈log M⌉ + ⌈log N⌉ + 4⌈log R⌉` with the same widths as the layout.
    pub paper_formula_qubits: usize,
    pub classical_baselines: ClassicalBaselines,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalBaselines {
    /// `4M²R` bits.
    pub atallah_bits: u128,
    /// `2(M² + N²)R` bits.
    pub qin_bits: u128,
}

pub fn comm_cost(m_count: usize, n_count: usize, cells: usize) -> CostSummary {
    let (m, n, r) = (
        register_width(m_count),
        register_width(n_count),
        register_width(cells),
    );
    let (big_m, big_n, big_r) = (m_count as u128, n_count as u128, cells as u128);
    CostSummary {
        alice_to_bob_qubits: m + r,
        bob_to_alice_qubits: m + n + 2 * r,
        total_qubits: 2 * m + n + 3 * r,
        paper_formula_qubits: 2 * m + n + 4 * r,
        classical_baselines: ClassicalBaselines {
            atallah_bits: 4 * big_m * big_m * big_r,
            qin_bits: 2 * (big_m * big_m + big_n * big_n) * big_r,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub pass_probability: f64,
    pub residue: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeEntry {
    pub index: usize,
    pub registers: Vec<usize>,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u8,
    pub actor: Party,
    pub action: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub qubits_transferred: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub layout: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub check: Option<CheckRecord>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub outcome: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub probability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub amplitudes: Option<Vec<AmplitudeEntry>>,
}

impl StepRecord {
    fn new(step: u8, actor: Party, action: impl Into<String>) -> Self {
        StepRecord {
            step,
            actor,
            action: action.into(),
            qubits_transferred: None,
            layout: None,
            check: None,
            outcome: None,
            probability: None,
            amplitudes: None,
        }
    }

    fn transfer(step: u8, msg: &QuantumMessage, dump: bool) -> Self {
        let to = match msg.to {
            Party::Alice => "ALICE",
            Party::Bob => "BOB",
        };
        let mut rec = StepRecord::new(step, msg.from, format!("send state to {to}"));
        rec.qubits_transferred = Some(msg.qubits());
        rec.layout = Some(msg.state.layout().to_string());
        if dump {
            rec.amplitudes = Some(amplitude_dump(&msg.state));
        }
        rec
    }
}

fn amplitude_dump(state: &QuantumState) -> Vec<AmplitudeEntry> {
    state
        .support(1e-12)
        .into_iter()
        .map(|(index, a)| AmplitudeEntry {
            index,
            registers: state.layout().decode(index),
            re: a.re,
            im: a.im,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolTranscript {
    pub format: String,
    pub complete: bool,
    pub adversary: AdversaryStrategy,
    pub grid: GridConfig,
    pub alice_records: usize,
    pub bob_records: usize,
    pub counting_bits: usize,
    pub counting_mode: CountingMode,
    pub seed: u64,
    pub steps: Vec<StepRecord>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub count_estimate: Option<CountEstimate>,
    pub cost: CostSummary,
    pub notes: Vec<String>,
}

impl ProtocolTranscript {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serializes")
    }

    pub fn check(&self) -> Option<&CheckRecord> {
        self.steps.iter().find_map(|s| s.check.as_ref())
    }

    /// Qubit counts of the two quantum messages, in order.
    pub fn transfers(&self) -> Vec<usize> {
        self.steps.iter().filter_map(|s| s.qubits_transferred).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Counting-register width; `None` picks `⌈log₂ MN⌉ + 3`.
    pub counting_bits: Option<usize>,
    pub mode: CountingMode,
    /// Seeds every in-protocol measurement (adversary, check).
    pub seed: u64,
    pub record_amplitudes: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            counting_bits: None,
            mode: CountingMode::Exact,
            seed: 0,
            record_amplitudes: false,
        }
    }
}

struct Setup {
    grid: GridConfig,
    set_a: GridSet,
    set_b: GridSet,
    alice: Alice,
    bob: Bob,
}

fn setup(scene_a: &Scene, scene_b: &Scene, adversary: &AdversaryStrategy) -> Result<Setup> {
    if scene_a.grid != scene_b.grid {
        return Err(ProtocolError::GridMismatch(
            format!("{}x{}", scene_a.grid.rows, scene_a.grid.cols),
            format!("{}x{}", scene_b.grid.rows, scene_b.grid.cols),
        ));
    }
    let grid = scene_a.grid;
    adversary.validate(grid.data_bits())?;
    let set_a = rasterize(scene_a)?;
    let set_b = rasterize(scene_b)?;
    let alice = Alice::new(&set_a, &grid)?;
    let bob = Bob::new(&set_b, &grid)?;
    Ok(Setup {
        grid,
        set_a,
        set_b,
        alice,
        bob,
    })
}

/// Executes steps 1–5 with the given adversary hooked in.
pub fn run_protocol(
    scene_a: &Scene,
    scene_b: &Scene,
    options: &RunOptions,
    adversary: AdversaryStrategy,
) -> Result<ProtocolTranscript> {
    let Setup {
        grid,
        set_a,
        set_b,
        alice,
        bob,
    } = setup(scene_a, scene_b, &adversary)?;
    let search_space = alice.record_count() * bob.record_count();
    let counting_bits = options
        .counting_bits
        .unwrap_or_else(|| default_counting_bits(search_space));
    let cfg = CountingConfig::new(search_space, counting_bits, options.mode)?;
    let cost = comm_cost(alice.record_count(), bob.record_count(), grid.cell_count());
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let dump = options.record_amplitudes;
    let mut steps = Vec::new();
    let mut notes = vec![
        "counting runs on Alice's side; Alice learns t and announces only the verdict".to_string(),
    ];

    // Step 1
    steps.push(StepRecord::new(1, Party::Alice, "prepare uniform address register and load S_A"));
    steps.push(StepRecord::new(1, Party::Bob, "prepare uniform address register and load S_B"));
    let to_bob = alice.prepare()?;
    steps.push(StepRecord::transfer(1, &to_bob, dump));

    let mut in_flight = to_bob.state;
    match adversary {
        AdversaryStrategy::BobMeasureAll => {
            for reg in [ALICE_ADDRESS, ALICE_DATA] {
                let branch = in_flight.measure_with(reg, &mut rng)?;
                let mut rec = StepRecord::new(1, Party::Bob, format!("adversary: measure {reg}"));
                rec.outcome = Some(branch.outcome);
                rec.probability = Some(branch.probability);
                steps.push(rec);
                in_flight = branch.state;
            }
        }
        AdversaryStrategy::BobMeasureData => {
            let branch = in_flight.measure_with(ALICE_DATA, &mut rng)?;
            let mut rec = StepRecord::new(1, Party::Bob, format!("adversary: measure {ALICE_DATA}"));
            rec.outcome = Some(branch.outcome);
            rec.probability = Some(branch.probability);
            steps.push(rec);
            in_flight = branch.state;
        }
        _ => {}
    }

    // Step 2
    let mut to_alice = bob.combine(in_flight)?;
    steps.push(StepRecord::new(2, Party::Bob, "apply XOR oracle D_b ^= D_a"));
    if let AdversaryStrategy::BobTamper { mask } = adversary {
        tamper(&mut to_alice.state, mask)?;
        steps.push(StepRecord::new(
            2,
            Party::Bob,
            format!("adversary: XOR mask {mask} into {ALICE_DATA}"),
        ));
    }
    steps.push(StepRecord::transfer(2, &to_alice, dump));

    // Step 3
    let check = alice.check(&to_alice.state, MeasureMode::Sample { seed: rng.gen() })?;
    let residue = check.residue.unwrap_or_default();
    let passed = residue == 0;
    let mut rec = StepRecord::new(3, Party::Alice, "uncompute D_a and measure it");
    rec.check = Some(CheckRecord {
        pass_probability: check.pass_probability,
        residue,
        passed,
    });
    steps.push(rec);

    let mut transcript = ProtocolTranscript {
        format: TRANSCRIPT_FORMAT.to_string(),
        complete: true,
        adversary,
        grid,
        alice_records: alice.record_count(),
        bob_records: bob.record_count(),
        counting_bits,
        counting_mode: options.mode,
        seed: options.seed,
        steps,
        verdict: Verdict::Abort,
        count_estimate: None,
        cost,
        notes: Vec::new(),
    };
    if !passed {
        transcript
            .steps
            .push(StepRecord::new(3, Party::Alice, "abort: cheat check failed"));
        transcript.notes = notes;
        return Ok(transcript);
    }
    let mut checked = check
        .post_state
        .expect("sampled check always returns the collapsed state");

    if adversary == AdversaryStrategy::AliceMeasureResult {
        let branch = checked.measure_with(BOB_DATA, &mut rng)?;
        let mut rec = StepRecord::new(3, Party::Alice, format!("adversary: measure {BOB_DATA}"));
        rec.outcome = Some(branch.outcome);
        rec.probability = Some(branch.probability);
        transcript.steps.push(rec);
        notes.push(format!(
            "Alice observed a_i XOR b_j = {} for an unknown pair (i, j); no b_j is revealed",
            branch.outcome
        ));
        checked = branch.state;
    }

    // Step 4
    let true_count = classical_intersect(&set_a, &set_b).1.len();
    let counted = alice.count(&checked, &bob.sealed_oracle(), &cfg, Some(true_count))?;
    let verdict: Verdict = decide_intersection(&counted.estimate).into();
    let mut rec = StepRecord::new(4, Party::Alice, "quantum counting on the checked state");
    rec.outcome = Some(counted.estimate.y);
    rec.probability = Some(counted.estimate.outcome_probability);
    transcript.steps.push(rec);

    // Step 5
    transcript.steps.push(StepRecord::new(
        5,
        Party::Alice,
        format!("announce verdict {verdict} to BOB"),
    ));
    transcript.verdict = verdict;
    transcript.count_estimate = Some(counted.estimate);
    transcript.notes = notes;
    Ok(transcript)
}

/// Exact probability that the step-3 check fails under `adversary`,
/// averaged over every outcome of the adversary's own measurements.
pub fn detection_probability(scene_a: &Scene, scene_b: &Scene, adversary: AdversaryStrategy) -> Result<f64> {
    let Setup { alice, bob, .. } = setup(scene_a, scene_b, &adversary)?;
    let sent = alice.prepare()?.state;

    let mut branches = vec![(1.0, sent)];
    let measured: &[&str] = match adversary {
        AdversaryStrategy::BobMeasureAll => &[ALICE_ADDRESS, ALICE_DATA],
        AdversaryStrategy::BobMeasureData => &[ALICE_DATA],
        _ => &[],
    };
    for reg in measured {
        let mut next = Vec::new();
        for (weight, state) in branches {
            if let Measurement::Distribution { branches: outs, .. } =
                state.measure_register(reg, MeasureMode::Distribution)?
            {
                next.extend(outs.into_iter().map(|b| (weight * b.probability, b.state)));
            }
        }
        branches = next;
    }

    let mut detected = 0.0;
    let mut total = 0.0;
    for (weight, state) in branches {
        let mut returned = bob.combine(state)?.state;
        if let AdversaryStrategy::BobTamper { mask } = adversary {
            tamper(&mut returned, mask)?;
        }
        let check = alice.check(&returned, MeasureMode::Distribution)?;
        detected += weight * (1.0 - check.pass_probability);
        total += weight;
    }
    Ok(detected / total)
}

/// Entropy figures for the ensemble `{1/M, |i⟩|a_i⟩}` that Bob receives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub records: usize,
    pub cells: usize,
    pub ensemble_entropy_bits: f64,
    pub mean_member_entropy_bits: f64,
    /// `S(ρ) − Σ p_i S(ρ_i)`.
    pub holevo_bound_bits: f64,
    /// `log₂(M·R)`.
    pub paper_bound_bits: f64,
}

impl LeakageReport {
    /// Whether the computed ensemble entropy equals `log₂(MR)`.
    pub fn matches_paper_bound(&self) -> bool {
        (self.ensemble_entropy_bits - self.paper_bound_bits).abs() < 1e-9
    }
}

pub fn leakage_report(table_a: &DataTable, cells: usize) -> Result<LeakageReport> {
    let layout = RegisterLayout::new([
        (ALICE_ADDRESS, table_a.address_bits()),
        (ALICE_DATA, table_a.value_bits()),
    ])?;
    let weight = 1.0 / table_a.len() as f64;
    let members = table_a
        .entries()
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            QuantumState::basis_state(&layout, &[(ALICE_ADDRESS, i), (ALICE_DATA, a)])
                .map(|s| (weight, s))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let rho = DensityMatrix::from_ensemble(&members)?;
    let ensemble = rho.von_neumann_entropy();
    let mut member_sum = 0.0;
    for (p, s) in &members {
        member_sum += p * DensityMatrix::from_pure(s)?.von_neumann_entropy();
    }
    Ok(LeakageReport {
        records: table_a.len(),
        cells,
        ensemble_entropy_bits: ensemble,
        mean_member_entropy_bits: member_sum,
        holevo_bound_bits: ensemble - member_sum,
        paper_bound_bits: ((table_a.len() * cells) as f64).log2(),
    })
}

/// Alice's table for a scene, as the protocol would load it.
pub fn scene_table(scene: &Scene) -> Result<DataTable> {
    let set = rasterize(scene)?;
    table_for(&set, &scene.grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g4() -> GridConfig {
        GridConfig::new(4, 4).unwrap()
    }

    fn example() -> (Scene, Scene) {
        (Scene::rect(g4(), 0, 0, 1, 1), Scene::rect(g4(), 1, 1, 2, 2))
    }

    #[test]
    fn parse_adversaries() {
        for s in AdversaryStrategy::all(5) {
            assert_eq!(s.to_string().parse::<AdversaryStrategy>().unwrap(), s);
        }
        assert!("bob-tamper".parse::<AdversaryStrategy>().is_err());
        assert!("eve".parse::<AdversaryStrategy>().is_err());
        assert!(AdversaryStrategy::BobTamper { mask: 0 }.validate(4).is_err());
        assert!(AdversaryStrategy::BobTamper { mask: 16 }.validate(4).is_err());
    }

    #[test]
    fn honest_example_run() {
        let (a, b) = example();
        let t = run_protocol(&a, &b, &RunOptions::default(), AdversaryStrategy::Honest).unwrap();
        assert_eq!(t.verdict, Verdict::Intersect);
        assert_eq!(t.count_estimate.as_ref().unwrap().t_rounded, 1);
        assert_eq!(t.check().unwrap().pass_probability, 1.0);
        assert_eq!(t.transfers(), vec![6, 12]);
        let order: Vec<u8> = t.steps.iter().map(|s| s.step).collect();
        assert!(order.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!((order[0], *order.last().unwrap()), (1, 5));
    }

    #[test]
    fn disjoint_run() {
        let a = Scene::from_cells(g4(), vec![1, 2]);
        let b = Scene::from_cells(g4(), vec![3, 4]);
        let t = run_protocol(&a, &b, &RunOptions::default(), AdversaryStrategy::Honest).unwrap();
        assert_eq!(t.verdict, Verdict::Disjoint);
        assert_eq!(t.count_estimate.unwrap().t_rounded, 0);
    }

    #[test]
    fn tamper_aborts() {
        let (a, b) = example();
        let t = run_protocol(
            &a,
            &b,
            &RunOptions::default(),
            AdversaryStrategy::BobTamper { mask: 1 },
        )
        .unwrap();
        assert_eq!(t.verdict, Verdict::Abort);
        assert_eq!(t.check().unwrap().pass_probability, 0.0);
        assert!(t.count_estimate.is_none());
        assert!(t.steps.iter().all(|s| s.step <= 3));
    }

    #[test]
    fn detection_probabilities() {
        let (a, b) = example();
        assert_eq!(detection_probability(&a, &b, AdversaryStrategy::Honest).unwrap(), 0.0);
        for mask in 1..16 {
            assert_eq!(
                detection_probability(&a, &b, AdversaryStrategy::BobTamper { mask }).unwrap(),
                1.0
            );
        }
        assert_eq!(
            detection_probability(&a, &b, AdversaryStrategy::BobMeasureAll).unwrap(),
            0.0
        );
        assert_eq!(
            detection_probability(&a, &b, AdversaryStrategy::BobMeasureData).unwrap(),
            0.0
        );
    }

    #[test]
    fn alice_measurement_reveals_only_xor() {
        let (a, b) = example();
        let t = run_protocol(
            &a,
            &b,
            &RunOptions {
                seed: 7,
                ..RunOptions::default()
            },
            AdversaryStrategy::AliceMeasureResult,
        )
        .unwrap();
        let seen = t
            .steps
            .iter()
            .find(|s| s.action.contains("measure D_b"))
            .and_then(|s| s.outcome)
            .unwrap();
        let xors: Vec<usize> = [1usize, 2, 5, 6]
            .iter()
            .flat_map(|x| [6usize, 7, 10, 11].map(|y| x ^ y))
            .collect();
        assert!(xors.contains(&seen));
    }

    #[test]
    fn cost_examples() {
        let c = comm_cost(4, 4, 16);
        assert_eq!(
            (c.alice_to_bob_qubits, c.bob_to_alice_qubits, c.total_qubits),
            (6, 12, 18)
        );
        assert_eq!(c.paper_formula_qubits, 22);
        assert_eq!(c.classical_baselines.atallah_bits, 1024);
        assert_eq!(c.classical_baselines.qin_bits, 1024);
        assert_eq!(comm_cost(1, 1, 1).total_qubits, 6);
    }

    #[test]
    fn leakage_examples() {
        let t = DataTable::new(vec![1, 2, 5, 6], 4).unwrap();
        let r = leakage_report(&t, 16).unwrap();
        assert!((r.ensemble_entropy_bits - 2.0).abs() < 1e-9);
        assert!((r.paper_bound_bits - 6.0).abs() < 1e-12);
        assert_eq!(r.holevo_bound_bits, r.ensemble_entropy_bits - r.mean_member_entropy_bits);
        assert!(r.mean_member_entropy_bits.abs() < 1e-9);
        assert!(!r.matches_paper_bound());

        let one = DataTable::new(vec![3], 4).unwrap();
        assert!(leakage_report(&one, 16).unwrap().ensemble_entropy_bits.abs() < 1e-9);
    }

    #[test]
    fn parties_only_touch_their_own_tables() {
        let grid = g4();
        let set_a = GridSet::new(vec![1, 2, 5, 6]).unwrap();
        let honest_b = GridSet::new(vec![6, 7, 10, 11]).unwrap();
        let poisoned_b = GridSet::new(vec![3, 4, 8, 12, 13, 14, 15]).unwrap();

        // Alice's outgoing message does not depend on who Bob is.
        let alice = Alice::new(&set_a, &grid).unwrap();
        let _bob1 = Bob::new(&honest_b, &grid).unwrap();
        let m1 = alice.prepare().unwrap();
        let _bob2 = Bob::new(&poisoned_b, &grid).unwrap();
        let m2 = alice.prepare().unwrap();
        assert_eq!(m1.state, m2.state);

        // Bob's reply depends only on the incoming state and his own table.
        let bob = Bob::new(&honest_b, &grid).unwrap();
        let _poisoned_alice = Alice::new(&GridSet::new(vec![16]).unwrap(), &grid).unwrap();
        let r1 = bob.combine(m1.state.clone()).unwrap();
        let r2 = bob.combine(m1.state).unwrap();
        assert_eq!(r1.state, r2.state);
    }

    #[test]
    fn grid_mismatch_rejected() {
        let a = Scene::rect(g4(), 0, 0, 0, 0);
        let b = Scene::rect(GridConfig::new(4, 5).unwrap(), 0, 0, 0, 0);
        assert!(matches!(
            run_protocol(&a, &b, &RunOptions::default(), AdversaryStrategy::Honest),
            Err(ProtocolError::GridMismatch(..))
        ));
    }
}
