//! Gate-level circuits, Toffoli tallies and a sparse phase-tracking simulator.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::numerics::parity_and;

/// Widest qubit index the simulator can hold in a branch key.
pub const SIM_QUBITS: u32 = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Qubit(pub u32);

impl fmt::Display for Qubit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Exponent,
    Multiplicand,
    Lookup,
    Target,
    Unary,
    Ancilla,
    Pad,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Register {
    pub name: String,
    pub qubits: Vec<Qubit>,
    pub role: Role,
}

impl Register {
    pub fn new(name: impl Into<String>, qubits: Vec<Qubit>, role: Role) -> Self {
        Self {
            name: name.into(),
            qubits,
            role,
        }
    }

    pub fn len(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubits.is_empty()
    }
}

/// Fires when `parity(transcript[slot] & mask) = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condition {
    pub slot: usize,
    pub mask: BigUint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Gate {
    X(Qubit),
    Cnot {
        control: Qubit,
        target: Qubit,
    },
    Toffoli {
        c1: Qubit,
        c2: Qubit,
        target: Qubit,
    },
    TempAndCompute {
        c1: Qubit,
        c2: Qubit,
        target: Qubit,
    },
    /// Measurement-based uncompute; the target must hold `c1 & c2`.
    TempAndUncompute {
        c1: Qubit,
        c2: Qubit,
        target: Qubit,
    },
    CSwap {
        control: Qubit,
        a: Qubit,
        b: Qubit,
    },
    MeasureXRegister {
        qubits: Vec<Qubit>,
        slot: usize,
    },
    /// Z on one qubit, or CZ on two, optionally gated by a recorded outcome.
    ClassicalPhaseZ {
        qubits: Vec<Qubit>,
        cond: Option<Condition>,
    },
    /// Exact `dst <- dst ± src mod N`, a functional stand-in for a modular adder.
    ModAdd {
        src: Vec<Qubit>,
        dst: Vec<Qubit>,
        modulus: BigUint,
        subtract: bool,
    },
    Alloc(Vec<Qubit>),
    Free(Vec<Qubit>),
}

impl Gate {
    pub fn name(&self) -> &'static str {
        match self {
            Gate::X(_) => "X",
            Gate::Cnot { .. } => "CNOT",
            Gate::Toffoli { .. } => "Toffoli",
            Gate::TempAndCompute { .. } => "TempAndCompute",
            Gate::TempAndUncompute { .. } => "TempAndUncompute",
            Gate::CSwap { .. } => "CSwap",
            Gate::MeasureXRegister { .. } => "MeasureXRegister",
            Gate::ClassicalPhaseZ { .. } => "ClassicalPhaseZ",
            Gate::ModAdd { .. } => "ModAdd",
            Gate::Alloc(_) => "Alloc",
            Gate::Free(_) => "Free",
        }
    }

    pub fn qubits(&self) -> Vec<Qubit> {
        match self {
            Gate::X(q) => vec![*q],
            Gate::Cnot { control, target } => vec![*control, *target],
            Gate::Toffoli { c1, c2, target }
            | Gate::TempAndCompute { c1, c2, target }
            | Gate::TempAndUncompute { c1, c2, target } => vec![*c1, *c2, *target],
            Gate::CSwap { control, a, b } => vec![*control, *a, *b],
            Gate::MeasureXRegister { qubits, .. }
            | Gate::ClassicalPhaseZ { qubits, .. }
            | Gate::Alloc(qubits)
            | Gate::Free(qubits) => qubits.clone(),
            Gate::ModAdd { src, dst, .. } => src.iter().chain(dst).copied().collect(),
        }
    }

    /// Toffolis booked for this gate.
    pub fn toffoli_cost(&self) -> u64 {
        match self {
            Gate::Toffoli { .. } | Gate::TempAndCompute { .. } | Gate::CSwap { .. } => 1,
            Gate::ModAdd { dst, .. } => 2 * dst.len() as u64,
            _ => 0,
        }
    }

    pub fn is_reversible(&self) -> bool {
        !matches!(self, Gate::MeasureXRegister { .. })
    }

    pub fn inverse(&self) -> Option<Gate> {
        Some(match self {
            Gate::MeasureXRegister { .. } => return None,
            Gate::TempAndCompute { c1, c2, target } => Gate::TempAndUncompute {
                c1: *c1,
                c2: *c2,
                target: *target,
            },
            Gate::TempAndUncompute { c1, c2, target } => Gate::TempAndCompute {
                c1: *c1,
                c2: *c2,
                target: *target,
            },
            Gate::ModAdd {
                src,
                dst,
                modulus,
                subtract,
            } => Gate::ModAdd {
                src: src.clone(),
                dst: dst.clone(),
                modulus: modulus.clone(),
                subtract: !subtract,
            },
            Gate::Alloc(q) => Gate::Free(q.clone()),
            Gate::Free(q) => Gate::Alloc(q.clone()),
            other => other.clone(),
        })
    }

    fn validate(&self) -> Result<(), CircuitError> {
        let mut qs = self.qubits();
        qs.sort_unstable();
        if let Some(w) = qs.windows(2).find(|w| w[0] == w[1]) {
            return Err(CircuitError::RepeatedOperand(self.name(), w[0]));
        }
        match self {
            Gate::ClassicalPhaseZ { qubits, .. } if qubits.is_empty() || qubits.len() > 2 => {
                Err(CircuitError::Arity(self.name()))
            }
            Gate::ModAdd { src, dst, .. } if src.len() > dst.len() => Err(CircuitError::Arity(self.name())),
            _ => Ok(()),
        }
    }
}

fn join(qs: &[Qubit]) -> String {
    qs.iter().map(|q| q.0.to_string()).collect::<Vec<_>>().join(" ")
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::MeasureXRegister { qubits, slot } => {
                write!(f, "MeasureXRegister {} [{}]", join(qubits), slot)
            }
            Gate::ClassicalPhaseZ { qubits, cond } => {
                write!(f, "ClassicalPhaseZ {}", join(qubits))?;
                if let Some(c) = cond {
                    write!(f, " [{}:{:x}]", c.slot, c.mask)?;
                }
                Ok(())
            }
            Gate::ModAdd {
                src,
                dst,
                modulus,
                subtract,
            } => write!(
                f,
                "ModAdd {} | {} [{}{:x}]",
                join(src),
                join(dst),
                if *subtract { '-' } else { '+' },
                modulus
            ),
            other => write!(f, "{} {}", other.name(), join(&other.qubits())),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error("{0}: qubit {1} used twice")]
    RepeatedOperand(&'static str, Qubit),
    #[error("{0}: wrong operand count")]
    Arity(&'static str),
    #[error("circuit contains a measurement and has no inverse")]
    NotReversible,
    #[error("dump line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl FromStr for Gate {
    type Err = String;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let (body, bracket) = match line.find('[') {
            Some(i) => {
                let end = line.rfind(']').ok_or("unterminated condition")?;
                (&line[..i], Some(line[i + 1..end].trim()))
            }
            None => (line, None),
        };
        let mut words = body.split_whitespace();
        let name = words.next().ok_or("empty line")?;
        let rest: Vec<&str> = words.collect();
        let qubits = |ws: &[&str]| -> Result<Vec<Qubit>, String> {
            ws.iter()
                .map(|w| w.parse::<u32>().map(Qubit).map_err(|_| format!("bad qubit `{w}`")))
                .collect()
        };
        let fixed = |n: usize| -> Result<Vec<Qubit>, String> {
            let qs = qubits(&rest)?;
            if qs.len() != n {
                return Err(format!("{name} takes {n} qubits"));
            }
            Ok(qs)
        };
        let hex = |s: &str| BigUint::parse_bytes(s.as_bytes(), 16).ok_or_else(|| format!("bad hex `{s}`"));
        Ok(match name {
            "X" => Gate::X(fixed(1)?[0]),
            "CNOT" => {
                let q = fixed(2)?;
                Gate::Cnot {
                    control: q[0],
                    target: q[1],
                }
            }
            "Toffoli" | "TempAndCompute" | "TempAndUncompute" | "CSwap" => {
                let q = fixed(3)?;
                match name {
                    "Toffoli" => Gate::Toffoli {
                        c1: q[0],
                        c2: q[1],
                        target: q[2],
                    },
                    "TempAndCompute" => Gate::TempAndCompute {
                        c1: q[0],
                        c2: q[1],
                        target: q[2],
                    },
                    "TempAndUncompute" => Gate::TempAndUncompute {
                        c1: q[0],
                        c2: q[1],
                        target: q[2],
                    },
                    _ => Gate::CSwap {
                        control: q[0],
                        a: q[1],
                        b: q[2],
                    },
                }
            }
            "MeasureXRegister" => {
                let slot = bracket
                    .ok_or("missing slot")?
                    .parse::<usize>()
                    .map_err(|_| "bad slot".to_string())?;
                Gate::MeasureXRegister {
                    qubits: qubits(&rest)?,
                    slot,
                }
            }
            "ClassicalPhaseZ" => {
                let cond = match bracket {
                    None => None,
                    Some(c) => {
                        let (slot, mask) = c.split_once(':').ok_or("bad condition")?;
                        Some(Condition {
                            slot: slot.parse().map_err(|_| "bad slot".to_string())?,
                            mask: hex(mask)?,
                        })
                    }
                };
                Gate::ClassicalPhaseZ {
                    qubits: qubits(&rest)?,
                    cond,
                }
            }
            "ModAdd" => {
                let bar = rest.iter().position(|w| *w == "|").ok_or("missing `|`")?;
                let c = bracket.ok_or("missing modulus")?;
                let subtract = match c.chars().next() {
                    Some('+') => false,
                    Some('-') => true,
                    _ => return Err("modulus needs a sign".into()),
                };
                Gate::ModAdd {
                    src: qubits(&rest[..bar])?,
                    dst: qubits(&rest[bar + 1..])?,
                    modulus: hex(&c[1..])?,
                    subtract,
                }
            }
            "Alloc" => Gate::Alloc(qubits(&rest)?),
            "Free" => Gate::Free(qubits(&rest)?),
            other => return Err(format!("unknown gate `{other}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub toffoli_count: u64,
    pub toffoli_depth: u64,
    pub qubit_highwater: u64,
    pub measurement_depth: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Circuit {
    pub gates: Vec<Gate>,
    pub registers: Vec<Register>,
    pub slots: usize,
}

impl Circuit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, gate: Gate) -> Result<(), CircuitError> {
        gate.validate()?;
        if let Gate::MeasureXRegister { slot, .. } = &gate {
            self.slots = self.slots.max(slot + 1);
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn append(&mut self, other: Circuit) {
        self.slots = self.slots.max(other.slots);
        self.gates.extend(other.gates);
        for r in other.registers {
            if !self.registers.iter().any(|x| x.name == r.name) {
                self.registers.push(r);
            }
        }
    }

    pub fn add_register(&mut self, reg: Register) {
        self.registers.push(reg);
    }

    pub fn register(&self, name: &str) -> Option<&Register> {
        self.registers.iter().find(|r| r.name == name)
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn inverse(&self) -> Result<Circuit, CircuitError> {
        let gates = self
            .gates
            .iter()
            .rev()
            .map(|g| g.inverse().ok_or(CircuitError::NotReversible))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Circuit {
            gates,
            registers: self.registers.clone(),
            slots: self.slots,
        })
    }

    pub fn tally(&self) -> Tally {
        tally(self)
    }

    /// One gate per line: `VARIANT q1 q2 q3 [cond]`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for g in &self.gates {
            out.push_str(&g.to_string());
            out.push('\n');
        }
        out
    }

    pub fn parse_dump(text: &str) -> Result<Circuit, CircuitError> {
        let mut c = Circuit::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let g: Gate = line.parse().map_err(|msg| CircuitError::Parse { line: i + 1, msg })?;
            c.push(g)?;
        }
        Ok(c)
    }
}

/// Toffoli count and ASAP layering of Toffoli-counted gates by qubit overlap.
pub fn tally(circuit: &Circuit) -> Tally {
    let mut t = Tally::default();
    let mut layer: Vec<u64> = Vec::new();
    let mut mlayer: Vec<u64> = Vec::new();
    let mut live: HashSet<Qubit> = circuit
        .registers
        .iter()
        .flat_map(|r| r.qubits.iter().copied())
        .collect();
    t.qubit_highwater = live.len() as u64;
    let bump = |table: &mut Vec<u64>, qs: &[Qubit], cost: u64| -> u64 {
        let mut top = 0;
        for q in qs {
            let i = q.0 as usize;
            if i >= table.len() {
                table.resize(i + 1, 0);
            }
            top = top.max(table[i]);
        }
        let end = top + cost;
        for q in qs {
            table[q.0 as usize] = end;
        }
        end
    };
    for g in &circuit.gates {
        match g {
            Gate::Alloc(qs) => live.extend(qs.iter().copied()),
            Gate::Free(qs) => {
                for q in qs {
                    live.remove(q);
                }
            }
            other => live.extend(other.qubits()),
        }
        t.qubit_highwater = t.qubit_highwater.max(live.len() as u64);
        let cost = g.toffoli_cost();
        if cost > 0 {
            t.toffoli_count += cost;
            let end = bump(&mut layer, &g.qubits(), cost);
            t.toffoli_depth = t.toffoli_depth.max(end);
        }
        if let Gate::MeasureXRegister { qubits, .. } = g {
            let end = bump(&mut mlayer, qubits, 1);
            t.measurement_depth = t.measurement_depth.max(end);
        }
    }
    t
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("qubit {0} is outside the simulator range")]
    UnknownQubit(Qubit),
    #[error("measured register is not a function of the other registers (slot {0})")]
    ContractViolation(usize),
    #[error("qubit {0} was expected to be |0>")]
    DirtyAncilla(Qubit),
    #[error("temporary AND target {0} does not hold the AND of its controls")]
    AndMismatch(Qubit),
    #[error("no recorded outcome for slot {0}")]
    MissingOutcome(usize),
    #[error("modular adder operand out of range")]
    AdderRange,
    #[error("measurement passed to a reversible-only entry point")]
    NotReversible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomePolicy {
    Random,
    /// Every X-basis outcome reads all zeros.
    Zero,
}

#[derive(Debug, Clone)]
pub struct SparseState {
    branches: Vec<(u128, i8)>,
    rng: ChaCha8Rng,
    policy: OutcomePolicy,
    transcript: Vec<Option<BigUint>>,
}

fn bit(q: Qubit) -> Result<u128, SimError> {
    if q.0 >= SIM_QUBITS {
        return Err(SimError::UnknownQubit(q));
    }
    Ok(1u128 << q.0)
}

fn masks(qs: &[Qubit]) -> Result<Vec<u128>, SimError> {
    qs.iter().map(|q| bit(*q)).collect()
}

/// Integer held by `qubits` (little-endian) in a branch key.
pub fn read_bits(key: u128, qubits: &[Qubit]) -> u128 {
    qubits
        .iter()
        .enumerate()
        .fold(0u128, |acc, (i, q)| acc | (((key >> q.0) & 1) << i))
}

/// Overwrites `qubits` in `key` with the low bits of `value`.
pub fn write_bits(key: u128, qubits: &[Qubit], value: u128) -> u128 {
    qubits.iter().enumerate().fold(key, |k, (i, q)| {
        let b = 1u128 << q.0;
        if (value >> i) & 1 == 1 {
            k | b
        } else {
            k & !b
        }
    })
}

impl SparseState {
    pub fn from_branches(branches: Vec<(u128, i8)>, seed: u64) -> Self {
        assert!(!branches.is_empty(), "a state needs at least one branch");
        let mut keys: Vec<u128> = branches.iter().map(|b| b.0).collect();
        keys.sort_unstable();
        keys.dedup();
        assert_eq!(keys.len(), branches.len(), "branch keys must be distinct");
        assert!(branches.iter().all(|b| b.1 == 1 || b.1 == -1));
        Self {
            branches,
            rng: ChaCha8Rng::seed_from_u64(seed),
            policy: OutcomePolicy::Random,
            transcript: Vec::new(),
        }
    }

    pub fn basis(key: u128, seed: u64) -> Self {
        Self::from_branches(vec![(key, 1)], seed)
    }

    pub fn with_policy(mut self, policy: OutcomePolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn branches(&self) -> &[(u128, i8)] {
        &self.branches
    }

    pub fn transcript(&self) -> &[Option<BigUint>] {
        &self.transcript
    }

    /// Branches sorted by key, for exact comparisons.
    pub fn canonical(&self) -> Vec<(u128, i8)> {
        let mut b = self.branches.clone();
        b.sort_unstable_by_key(|x| x.0);
        b
    }

    /// Equal up to one shared sign.
    pub fn equal_up_to_global_phase(&self, other: &SparseState) -> bool {
        let a = self.canonical();
        let b = other.canonical();
        if a.len() != b.len() {
            return false;
        }
        let g = a[0].1 * b[0].1;
        a.iter().zip(&b).all(|(x, y)| x.0 == y.0 && x.1 * g == y.1)
    }

    fn fires(&self, cond: &Option<Condition>) -> Result<bool, SimError> {
        match cond {
            None => Ok(true),
            Some(c) => {
                let s = self
                    .transcript
                    .get(c.slot)
                    .and_then(|s| s.as_ref())
                    .ok_or(SimError::MissingOutcome(c.slot))?;
                Ok(parity_and(s, &c.mask))
            }
        }
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<(), SimError> {
        match gate {
            Gate::X(q) => {
                let m = bit(*q)?;
                self.branches.iter_mut().for_each(|b| b.0 ^= m);
            }
            Gate::Cnot { control, target } => {
                let (c, t) = (bit(*control)?, bit(*target)?);
                for b in &mut self.branches {
                    if b.0 & c != 0 {
                        b.0 ^= t;
                    }
                }
            }
            Gate::Toffoli { c1, c2, target } => {
                let c = bit(*c1)? | bit(*c2)?;
                let t = bit(*target)?;
                for b in &mut self.branches {
                    if b.0 & c == c {
                        b.0 ^= t;
                    }
                }
            }
            Gate::TempAndCompute { c1, c2, target } => {
                let c = bit(*c1)? | bit(*c2)?;
                let t = bit(*target)?;
                for b in &mut self.branches {
                    if b.0 & t != 0 {
                        return Err(SimError::DirtyAncilla(*target));
                    }
                    if b.0 & c == c {
                        b.0 |= t;
                    }
                }
            }
            Gate::TempAndUncompute { c1, c2, target } => {
                // The X-basis outcome and its CZ fixup cancel exactly, so the
                // net action is a deterministic reset.
                let c = bit(*c1)? | bit(*c2)?;
                let t = bit(*target)?;
                for b in &mut self.branches {
                    if (b.0 & c == c) != (b.0 & t != 0) {
                        return Err(SimError::AndMismatch(*target));
                    }
                    b.0 &= !t;
                }
            }
            Gate::CSwap { control, a, b } => {
                let c = bit(*control)?;
                let (ma, mb) = (bit(*a)?, bit(*b)?);
                for br in &mut self.branches {
                    if br.0 & c != 0 && ((br.0 & ma == 0) != (br.0 & mb == 0)) {
                        br.0 ^= ma | mb;
                    }
                }
            }
            Gate::ClassicalPhaseZ { qubits, cond } => {
                let m = masks(qubits)?.into_iter().fold(0, |a, b| a | b);
                if self.fires(cond)? {
                    for b in &mut self.branches {
                        if b.0 & m == m {
                            b.1 = -b.1;
                        }
                    }
                }
            }
            Gate::ModAdd {
                src,
                dst,
                modulus,
                subtract,
            } => {
                masks(src)?;
                masks(dst)?;
                let n = modulus.to_u128().ok_or(SimError::AdderRange)?;
                for b in &mut self.branches {
                    let v = read_bits(b.0, src);
                    let d = read_bits(b.0, dst);
                    if v >= n || d >= n {
                        return Err(SimError::AdderRange);
                    }
                    let r = if *subtract { (d + n - v) % n } else { (d + v) % n };
                    b.0 = write_bits(b.0, dst, r);
                }
            }
            Gate::Alloc(qs) | Gate::Free(qs) => {
                for (q, m) in qs.iter().zip(masks(qs)?) {
                    if self.branches.iter().any(|b| b.0 & m != 0) {
                        return Err(SimError::DirtyAncilla(*q));
                    }
                }
            }
            Gate::MeasureXRegister { qubits, slot } => {
                self.measure_x(qubits, *slot)?;
            }
        }
        Ok(())
    }

    fn draw(&mut self, width: usize) -> u128 {
        match self.policy {
            OutcomePolicy::Zero => 0,
            OutcomePolicy::Random => {
                let raw: u128 = self.rng.gen();
                if width >= 128 {
                    raw
                } else {
                    raw & ((1u128 << width) - 1)
                }
            }
        }
    }

    /// X-basis measurement of a register whose contents are a function of the
    /// remaining qubits. Each branch picks up `(-1)^{s·reg}` and the register
    /// is cleared.
    pub fn measure_x(&mut self, qubits: &[Qubit], slot: usize) -> Result<BigUint, SimError> {
        let s = self.draw(qubits.len());
        self.measure_x_with(qubits, slot, s)
    }

    pub fn measure_x_with(&mut self, qubits: &[Qubit], slot: usize, s: u128) -> Result<BigUint, SimError> {
        let reg = masks(qubits)?.into_iter().fold(0, |a, b| a | b);
        let mut rests: Vec<u128> = self.branches.iter().map(|b| b.0 & !reg).collect();
        rests.sort_unstable();
        if rests.windows(2).any(|w| w[0] == w[1]) {
            return Err(SimError::ContractViolation(slot));
        }
        for b in &mut self.branches {
            let v = read_bits(b.0, qubits);
            if (v & s).count_ones() % 2 == 1 {
                b.1 = -b.1;
            }
            b.0 &= !reg;
        }
        let s_big = BigUint::from(s);
        if self.transcript.len() <= slot {
            self.transcript.resize(slot + 1, None);
        }
        self.transcript[slot] = Some(s_big.clone());
        Ok(s_big)
    }

    pub fn run(&mut self, circuit: &Circuit) -> Result<(), SimError> {
        circuit.gates.iter().try_for_each(|g| self.apply(g))
    }

    /// Applies only reversible gates; measurements are rejected.
    pub fn run_reversible(&mut self, circuit: &Circuit) -> Result<(), SimError> {
        for g in &circuit.gates {
            if !g.is_reversible() {
                return Err(SimError::NotReversible);
            }
            self.apply(g)?;
        }
        Ok(())
    }
}
