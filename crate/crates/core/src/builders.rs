//! Circuit synthesis: unary encodings, QROM lookup, measurement-based
//! unlookup, adders and windowed modular exponentiation.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::circuit_ir::{
    read_bits, write_bits, Circuit, CircuitError, Condition, Gate, OutcomePolicy, Qubit, Register, Role, SimError,
    SparseState,
};
use crate::numerics::{
    direct_exp_entries, mod_pow, window_widths, LookupTable, MulTableSpec, NumericsError, ProblemInstance, WindowParams,
};

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("{what}: expected {expected} qubits, found {found}")]
    SizeMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("initial lookup bits {0} exceed n_e = {1}")]
    InitialBits(u32, u32),
}

/// Issues gates and hands out qubit ids, reusing released ones lowest-first.
#[derive(Debug, Default)]
pub struct Builder {
    circuit: Circuit,
    free: BTreeSet<u32>,
    next: u32,
    next_slot: usize,
}

impl Builder {
    pub fn new() -> Self {
        Self::default()
    }

    /// A builder whose fresh qubits avoid every id in `taken`.
    pub fn avoiding(taken: &[Qubit]) -> Self {
        Self {
            next: taken.iter().map(|q| q.0 + 1).max().unwrap_or(0),
            ..Self::default()
        }
    }

    fn gate(&mut self, g: Gate) {
        self.circuit.push(g).expect("builder emitted a malformed gate");
    }

    pub fn alloc(&mut self, k: usize) -> Vec<Qubit> {
        let mut out = Vec::with_capacity(k);
        for _ in 0..k {
            let id = match self.free.pop_first() {
                Some(id) => id,
                None => {
                    self.next += 1;
                    self.next - 1
                }
            };
            out.push(Qubit(id));
        }
        if !out.is_empty() {
            self.gate(Gate::Alloc(out.clone()));
        }
        out
    }

    pub fn release(&mut self, qs: &[Qubit]) {
        if qs.is_empty() {
            return;
        }
        self.gate(Gate::Free(qs.to_vec()));
        self.free.extend(qs.iter().map(|q| q.0));
    }

    /// Declares a register present from the start of the circuit.
    pub fn register(&mut self, name: &str, k: usize, role: Role) -> Register {
        let qubits: Vec<Qubit> = (self.next..self.next + k as u32).map(Qubit).collect();
        self.next += k as u32;
        let reg = Register::new(name, qubits, role);
        self.circuit.add_register(reg.clone());
        reg
    }

    fn new_slot(&mut self) -> usize {
        self.next_slot += 1;
        self.next_slot - 1
    }

    pub fn finish(self) -> Circuit {
        self.circuit
    }
}

fn expect_len(what: &'static str, expected: usize, found: usize) -> Result<(), BuildError> {
    if expected != found {
        return Err(BuildError::SizeMismatch { what, expected, found });
    }
    Ok(())
}

/// One-hot tree of temporary ANDs over address bits, most significant first.
/// Leaf `v` is set iff the address equals `v`.
struct AndTree {
    root: Qubit,
    splits: Vec<(Qubit, Qubit, Qubit)>,
    routing: Vec<Qubit>,
    /// `None` marks values folded into an unexpanded node.
    leaves: Vec<Option<Qubit>>,
}

impl AndTree {
    /// `addr` is little-endian. With `lowdepth`, each level's control is
    /// fanned out so that its ANDs touch disjoint qubits. `freeze_zero_after`
    /// stops expanding the all-zero prefix after that many levels.
    fn build(b: &mut Builder, addr: &[Qubit], lowdepth: bool, freeze_zero_after: Option<usize>) -> AndTree {
        let root = b.alloc(1)[0];
        b.gate(Gate::X(root));
        let bits = addr.len();
        let routing = if lowdepth && bits > 1 {
            b.alloc((1usize << (bits - 1)) - 1)
        } else {
            Vec::new()
        };
        // (prefix, qubit, still expanding)
        let mut nodes: Vec<(usize, Qubit, bool)> = vec![(0, root, true)];
        let mut splits = Vec::new();
        for (level, &a) in addr.iter().rev().enumerate() {
            let active = nodes.iter().filter(|n| n.2).count();
            let copies = if lowdepth { active.saturating_sub(1) } else { 0 };
            for r in &routing[..copies] {
                b.gate(Gate::Cnot { control: a, target: *r });
            }
            let mut next = Vec::with_capacity(nodes.len() * 2);
            let mut k = 0;
            for &(prefix, q, expanding) in &nodes {
                if !expanding {
                    next.push((prefix << 1, q, false));
                    continue;
                }
                let ctrl = if lowdepth && k > 0 { routing[k - 1] } else { a };
                k += 1;
                let c = b.alloc(1)[0];
                b.gate(Gate::TempAndCompute {
                    c1: q,
                    c2: ctrl,
                    target: c,
                });
                b.gate(Gate::Cnot { control: c, target: q });
                splits.push((q, a, c));
                next.push((prefix << 1, q, true));
                next.push(((prefix << 1) | 1, c, true));
            }
            for r in routing[..copies].iter().rev() {
                b.gate(Gate::Cnot { control: a, target: *r });
            }
            if freeze_zero_after == Some(level + 1) {
                if let Some(n) = next.iter_mut().find(|n| n.0 == 0) {
                    n.2 = false;
                }
            }
            nodes = next;
        }
        let mut leaves = vec![None; 1 << bits];
        for (prefix, q, expanding) in nodes {
            if expanding {
                leaves[prefix] = Some(q);
            }
        }
        AndTree {
            root,
            splits,
            routing,
            leaves,
        }
    }

    fn teardown(self, b: &mut Builder) {
        for &(q, a, c) in self.splits.iter().rev() {
            b.gate(Gate::Cnot { control: c, target: q });
            b.gate(Gate::TempAndUncompute {
                c1: q,
                c2: a,
                target: c,
            });
            b.release(&[c]);
        }
        b.release(&self.routing);
        b.gate(Gate::X(self.root));
        b.release(&[self.root]);
    }
}

fn xor_word(b: &mut Builder, control: Qubit, word: &BigUint, dest: &[Qubit]) {
    for (k, &d) in dest.iter().enumerate() {
        if word.bit(k as u64) {
            b.gate(Gate::Cnot { control, target: d });
        }
    }
}

/// `dest ^= entries[addr]`; `selective` carries the exponent-window width
/// below which the mult = 0 rows are skipped.
fn emit_lookup(b: &mut Builder, addr: &[Qubit], entries: &[BigUint], dest: &[Qubit], skip_mult_zero: Option<usize>) {
    let freeze = skip_mult_zero.map(|e_bits| addr.len() - e_bits);
    let tree = AndTree::build(b, addr, false, freeze);
    for (v, leaf) in tree.leaves.iter().enumerate() {
        match leaf {
            Some(q) => xor_word(b, *q, &entries[v], dest),
            None => debug_assert!(entries[v].is_zero(), "skipped row must be zero"),
        }
    }
    tree.teardown(b);
}

/// Phase fixup addressed by `high`, acting on the unarized `low` bits:
/// the branch at address `high ‖ low` is negated iff `parity(s & mask(high ‖ low))`.
fn emit_phase_fixup(
    b: &mut Builder,
    unary: &AndTree,
    high: &[Qubit],
    mask: impl Fn(usize, usize) -> BigUint,
    slot: usize,
) {
    let rows = AndTree::build(b, high, false, None);
    for (r, row) in rows.leaves.iter().enumerate() {
        let row = row.expect("fixup rows are never pruned");
        for (x, col) in unary.leaves.iter().enumerate() {
            let m = mask(r, x);
            if m.is_zero() {
                continue;
            }
            b.gate(Gate::ClassicalPhaseZ {
                qubits: vec![row, col.expect("unary leaves are never pruned")],
                cond: Some(Condition { slot, mask: m }),
            });
        }
    }
    rows.teardown(b);
}

/// Measurement-based unlookup with `u = floor(ℓ/2)` unarized low bits.
fn emit_unlookup(b: &mut Builder, addr: &[Qubit], entries: &[BigUint], dest: &[Qubit], lowdepth: bool) {
    let slot = b.new_slot();
    b.gate(Gate::MeasureXRegister {
        qubits: dest.to_vec(),
        slot,
    });
    let u = addr.len() / 2;
    let unary = AndTree::build(b, &addr[..u], lowdepth, None);
    emit_phase_fixup(b, &unary, &addr[u..], |r, x| entries[(r << u) | x].clone(), slot);
    unary.teardown(b);
}

/// Fig. 5 style binary-to-unary conversion with controlled swaps. `out` must
/// start with qubit 0 set.
pub fn build_unary(input: &[Qubit], out: &[Qubit]) -> Result<Circuit, BuildError> {
    expect_len("unary output", 1 << input.len(), out.len())?;
    let mut c = Circuit::new();
    for (k, &a) in input.iter().enumerate() {
        // Alternating sweep direction: each level starts on a wire the
        // previous level ended on, so all swaps form a single chain.
        let order: Vec<usize> = if k % 2 == 1 {
            (0..1usize << k).collect()
        } else {
            (0..1usize << k).rev().collect()
        };
        for i in order {
            c.push(Gate::CSwap {
                control: a,
                a: out[i],
                b: out[i + (1 << k)],
            })?;
        }
    }
    Ok(c)
}

/// Same function as [`build_unary`] with each address bit fanned out over
/// `routing` first, so every level is one layer of disjoint swaps.
pub fn build_unary_lowdepth(input: &[Qubit], out: &[Qubit], routing: &[Qubit]) -> Result<Circuit, BuildError> {
    expect_len("unary output", 1 << input.len(), out.len())?;
    let need = if input.is_empty() {
        0
    } else {
        (1usize << (input.len() - 1)) - 1
    };
    expect_len("routing ancillas", need, routing.len())?;
    let mut c = Circuit::new();
    for (k, &a) in input.iter().enumerate() {
        let copies = (1usize << k) - 1;
        for r in &routing[..copies] {
            c.push(Gate::Cnot { control: a, target: *r })?;
        }
        for i in 0..(1usize << k) {
            let ctrl = if i == 0 { a } else { routing[i - 1] };
            c.push(Gate::CSwap {
                control: ctrl,
                a: out[i],
                b: out[i + (1 << k)],
            })?;
        }
        for r in routing[..copies].iter().rev() {
            c.push(Gate::Cnot { control: a, target: *r })?;
        }
    }
    Ok(c)
}

/// `dest ^= table[addr]` with `2^ℓ − 1` temporary ANDs.
pub fn build_qrom_lookup(addr: &[Qubit], table: &LookupTable, dest: &[Qubit]) -> Result<Circuit, BuildError> {
    expect_len("lookup address", table.addr_bits as usize, addr.len())?;
    if dest.len() < table.word_bits as usize {
        return Err(BuildError::SizeMismatch {
            what: "lookup destination",
            expected: table.word_bits as usize,
            found: dest.len(),
        });
    }
    let taken: Vec<Qubit> = addr.iter().chain(dest).copied().collect();
    let mut b = Builder::avoiding(&taken);
    emit_lookup(&mut b, addr, &table.entries, dest, None);
    Ok(b.finish())
}

/// Clears `dest`, which must hold `table[addr]`, by X-basis measurement and a
/// phase fixup over the high address bits.
pub fn build_unlookup(
    addr: &[Qubit],
    table: &LookupTable,
    dest: &[Qubit],
    lowdepth: bool,
) -> Result<Circuit, BuildError> {
    expect_len("unlookup address", table.addr_bits as usize, addr.len())?;
    let taken: Vec<Qubit> = addr.iter().chain(dest).copied().collect();
    let mut b = Builder::avoiding(&taken);
    emit_unlookup(&mut b, addr, &table.entries, dest, lowdepth);
    Ok(b.finish())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdderMode {
    /// `dst <- dst ± src mod N`, exact.
    ExactModular(BigUint),
    /// Cuccaro ripple-carry over the full register width.
    Coset,
}

fn maj(b: &mut Builder, x: Qubit, y: Qubit, z: Qubit) {
    b.gate(Gate::Cnot { control: z, target: y });
    b.gate(Gate::Cnot { control: z, target: x });
    b.gate(Gate::Toffoli {
        c1: x,
        c2: y,
        target: z,
    });
}

fn uma(b: &mut Builder, x: Qubit, y: Qubit, z: Qubit) {
    b.gate(Gate::Toffoli {
        c1: x,
        c2: y,
        target: z,
    });
    b.gate(Gate::Cnot { control: z, target: x });
    b.gate(Gate::Cnot { control: x, target: y });
}

fn emit_cuccaro(b: &mut Builder, src: &[Qubit], dst: &[Qubit], subtract: bool) {
    let start = b.circuit.gates.len();
    let carry = b.alloc(1)[0];
    let prev = |k: usize| if k == 0 { carry } else { src[k - 1] };
    for k in 0..dst.len() {
        maj(b, prev(k), dst[k], src[k]);
    }
    for k in (0..dst.len()).rev() {
        uma(b, prev(k), dst[k], src[k]);
    }
    b.release(&[carry]);
    if subtract {
        let forward: Vec<Gate> = b.circuit.gates.drain(start..).collect();
        b.circuit.gates.extend(
            forward
                .iter()
                .rev()
                .map(|g| g.inverse().expect("adder gates are reversible")),
        );
    }
}

fn emit_adder(b: &mut Builder, src: &[Qubit], dst: &[Qubit], mode: &AdderMode, subtract: bool) {
    match mode {
        AdderMode::ExactModular(n) => b.gate(Gate::ModAdd {
            src: src.to_vec(),
            dst: dst.to_vec(),
            modulus: n.clone(),
            subtract,
        }),
        AdderMode::Coset => emit_cuccaro(b, src, dst, subtract),
    }
}

/// `dst <- dst + src` (or minus) under the selected adder semantics.
pub fn build_adder(dst: &[Qubit], src: &[Qubit], mode: &AdderMode, subtract: bool) -> Result<Circuit, BuildError> {
    expect_len("adder operand", dst.len(), src.len())?;
    let taken: Vec<Qubit> = src.iter().chain(dst).copied().collect();
    let mut b = Builder::avoiding(&taken);
    emit_adder(&mut b, src, dst, mode, subtract);
    Ok(b.finish())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ModexpFlags {
    pub deferred_unlookup: bool,
    pub selective_lookup: bool,
    /// Exponent bits handled by one direct lookup up front (0 disables).
    pub initial_lookup_bits: u32,
    pub lowdepth_unary: bool,
}

impl ModexpFlags {
    /// Flag subset from a 4-bit mask (bit 0 deferred, 1 selective, 2
    /// initial lookup, 3 low-depth unary).
    pub fn from_mask(mask: u8, initial_bits: u32) -> Self {
        Self {
            deferred_unlookup: mask & 1 != 0,
            selective_lookup: mask & 2 != 0,
            initial_lookup_bits: if mask & 4 != 0 { initial_bits } else { 0 },
            lowdepth_unary: mask & 8 != 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AdderKind {
    ExactModular,
    Coset,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModexpConfig {
    pub inst: ProblemInstance,
    pub wp: WindowParams,
    pub flags: ModexpFlags,
    pub adder: AdderKind,
    pub coset_pad: u32,
}

impl ModexpConfig {
    pub fn new(inst: ProblemInstance, wp: WindowParams) -> Self {
        Self {
            inst,
            wp,
            flags: ModexpFlags::default(),
            adder: AdderKind::ExactModular,
            coset_pad: 0,
        }
    }

    pub fn with_flags(mut self, flags: ModexpFlags) -> Self {
        self.flags = flags;
        self
    }

    pub fn with_adder(mut self, adder: AdderKind, coset_pad: u32) -> Self {
        self.adder = adder;
        self.coset_pad = coset_pad;
        self
    }

    /// Width of the multiplicand, target and lookup registers.
    pub fn register_width(&self) -> u32 {
        self.inst.n() + self.coset_pad
    }

    fn adder_mode(&self) -> AdderMode {
        match self.adder {
            AdderKind::ExactModular => AdderMode::ExactModular(self.inst.modulus().clone()),
            AdderKind::Coset => AdderMode::Coset,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModexpCircuit {
    pub circuit: Circuit,
    pub exponent: Register,
    /// Holds `b^x mod N` at the end (after the final register renaming).
    pub result: Register,
    pub workspace: Vec<Register>,
}

/// Registers touched by one lookup-addition.
#[derive(Debug, Clone)]
pub struct LookupAddRegs {
    pub exp_window: Vec<Qubit>,
    pub mult_window: Vec<Qubit>,
    pub lookup: Vec<Qubit>,
    pub target: Vec<Qubit>,
}

struct Pending {
    slot: usize,
    mult: Vec<Qubit>,
    entries: Vec<BigUint>,
}

#[allow(clippy::too_many_arguments)]
fn emit_lookup_add(
    b: &mut Builder,
    cfg: &ModexpConfig,
    spec: &MulTableSpec,
    regs: &LookupAddRegs,
    subtract: bool,
    defer: bool,
) -> Result<Option<Pending>, BuildError> {
    let table = spec.build()?;
    let addr: Vec<Qubit> = regs.exp_window.iter().chain(&regs.mult_window).copied().collect();
    if cfg.flags.selective_lookup {
        for (k, &q) in regs.mult_window.iter().enumerate() {
            b.gate(Gate::Cnot {
                control: q,
                target: regs.lookup[spec.m_shift as usize + k],
            });
        }
        let pruned = spec.build_pruned()?;
        emit_lookup(b, &addr, &pruned.entries, &regs.lookup, Some(regs.exp_window.len()));
    } else {
        emit_lookup(b, &addr, &table.entries, &regs.lookup, None);
    }
    emit_adder(b, &regs.lookup, &regs.target, &cfg.adder_mode(), subtract);
    if defer {
        let slot = b.new_slot();
        b.gate(Gate::MeasureXRegister {
            qubits: regs.lookup.clone(),
            slot,
        });
        Ok(Some(Pending {
            slot,
            mult: regs.mult_window.clone(),
            entries: table.entries,
        }))
    } else {
        emit_unlookup(b, &addr, &table.entries, &regs.lookup, cfg.flags.lowdepth_unary);
        Ok(None)
    }
}

fn table_spec(cfg: &ModexpConfig, base: &BigUint, exp_shift: u32, e_bits: u32, j: u32, m_bits: u32) -> MulTableSpec {
    MulTableSpec {
        modulus: cfg.inst.modulus().clone(),
        base: base.clone(),
        exp_shift,
        e_bits,
        m_shift: j * cfg.wp.w_m,
        m_bits,
        word_bits: cfg.register_width(),
    }
}

/// A single lookup-addition for exponent window `i` and multiplication
/// window `j`, using base `b`. Under a deferred configuration the circuit
/// ends right after the lookup register is measured.
pub fn build_lookup_add(cfg: &ModexpConfig, i: u32, j: u32, regs: &LookupAddRegs) -> Result<Circuit, BuildError> {
    let width = cfg.register_width() as usize;
    expect_len("lookup register", width, regs.lookup.len())?;
    expect_len("target register", width, regs.target.len())?;
    let exp_shift = cfg.flags.initial_lookup_bits + i * cfg.wp.w_e;
    let spec = table_spec(
        cfg,
        cfg.inst.base(),
        exp_shift,
        regs.exp_window.len() as u32,
        j,
        regs.mult_window.len() as u32,
    );
    let taken: Vec<Qubit> = regs
        .exp_window
        .iter()
        .chain(&regs.mult_window)
        .chain(&regs.lookup)
        .chain(&regs.target)
        .copied()
        .collect();
    let mut b = Builder::avoiding(&taken);
    emit_lookup_add(&mut b, cfg, &spec, regs, false, cfg.flags.deferred_unlookup)?;
    Ok(b.finish())
}

/// One multiplication pass: `dst ± = Σ_j T_{i,j}(src_j, expn)`.
#[allow(clippy::too_many_arguments)]
fn emit_pass(
    b: &mut Builder,
    cfg: &ModexpConfig,
    base: &BigUint,
    exp_shift: u32,
    exp_window: &[Qubit],
    src: &[Qubit],
    dst: &[Qubit],
    lookup: &[Qubit],
    subtract: bool,
) -> Result<(), BuildError> {
    let defer = cfg.flags.deferred_unlookup;
    let mut pending = Vec::new();
    let mut offset = 0usize;
    for (j, m_bits) in window_widths(cfg.register_width(), cfg.wp.w_m).into_iter().enumerate() {
        let regs = LookupAddRegs {
            exp_window: exp_window.to_vec(),
            mult_window: src[offset..offset + m_bits as usize].to_vec(),
            lookup: lookup.to_vec(),
            target: dst.to_vec(),
        };
        offset += m_bits as usize;
        let spec = table_spec(cfg, base, exp_shift, exp_window.len() as u32, j as u32, m_bits);
        if let Some(p) = emit_lookup_add(b, cfg, &spec, &regs, subtract, defer)? {
            pending.push(p);
        }
    }
    if defer {
        let e = exp_window.len();
        let unary = AndTree::build(b, exp_window, cfg.flags.lowdepth_unary, None);
        for p in &pending {
            emit_phase_fixup(b, &unary, &p.mult, |r, x| p.entries[(r << e) | x].clone(), p.slot);
        }
        unary.teardown(b);
    }
    Ok(())
}

/// Windowed modular exponentiation. The input state has the multiplicand
/// register set to 1; the output holds `b^x mod N` in `result`.
pub fn build_windowed_modexp(cfg: &ModexpConfig) -> Result<ModexpCircuit, BuildError> {
    let n_e = cfg.inst.n_e();
    let init = cfg.flags.initial_lookup_bits;
    if init > n_e {
        return Err(BuildError::InitialBits(init, n_e));
    }
    let width = cfg.register_width() as usize;
    let base_inv = cfg.inst.base_inverse();
    let mut b = Builder::new();
    let x = b.register("exponent", n_e as usize, Role::Exponent);
    let mut m = b.register("multiplicand", width, Role::Multiplicand);
    let mut t = b.register("target", width, Role::Target);
    let lk = b.register("lookup", width, Role::Lookup);

    if init > 0 {
        let table = direct_exp_entries(cfg.inst.modulus(), cfg.inst.base(), init, width as u32)?;
        b.gate(Gate::X(m.qubits[0]));
        emit_lookup(&mut b, &x.qubits[..init as usize], &table.entries, &m.qubits, None);
    }

    let mut offset = init as usize;
    for (i, e_bits) in window_widths(n_e - init, cfg.wp.w_e).into_iter().enumerate() {
        let exp_window = x.qubits[offset..offset + e_bits as usize].to_vec();
        let exp_shift = init + i as u32 * cfg.wp.w_e;
        offset += e_bits as usize;
        emit_pass(
            &mut b,
            cfg,
            cfg.inst.base(),
            exp_shift,
            &exp_window,
            &m.qubits,
            &t.qubits,
            &lk.qubits,
            false,
        )?;
        emit_pass(
            &mut b,
            cfg,
            &base_inv,
            exp_shift,
            &exp_window,
            &t.qubits,
            &m.qubits,
            &lk.qubits,
            true,
        )?;
        std::mem::swap(&mut m, &mut t);
    }

    Ok(ModexpCircuit {
        circuit: b.finish(),
        exponent: x,
        result: m,
        workspace: vec![t, lk],
    })
}

/// Deferred-unlookup variant of [`build_windowed_modexp`].
pub fn build_windowed_modexp_deferred(cfg: &ModexpConfig) -> Result<ModexpCircuit, BuildError> {
    let mut cfg = cfg.clone();
    cfg.flags.deferred_unlookup = true;
    build_windowed_modexp(&cfg)
}

/// Variant whose first `initial_bits` exponent bits come from one lookup.
pub fn build_modexp_with_initial_lookup(cfg: &ModexpConfig, initial_bits: u32) -> Result<ModexpCircuit, BuildError> {
    let mut cfg = cfg.clone();
    cfg.flags.initial_lookup_bits = initial_bits;
    build_windowed_modexp(&cfg)
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("modulus too wide for the simulator")]
    TooWide,
    #[error("expected {expected} branches, found {found}")]
    BranchCount { expected: usize, found: usize },
    #[error("branch x={x}: expected {expected}, found {found}")]
    WrongValue { x: u128, expected: u128, found: u128 },
    #[error("branch x={x}: workspace not cleared")]
    DirtyWorkspace { x: u128 },
    #[error("branch x={x}: phase is -1")]
    Phase { x: u128 },
}

/// The uniform superposition over all exponents with the multiplicand at 1.
pub fn modexp_input(mc: &ModexpCircuit, seed: u64) -> SparseState {
    let n_e = mc.exponent.len();
    let branches = (0..1u128 << n_e)
        .map(|x| {
            let k = write_bits(0, &mc.exponent.qubits, x);
            (write_bits(k, &mc.result_input_qubits(), 1), 1)
        })
        .collect();
    SparseState::from_branches(branches, seed)
}

impl ModexpCircuit {
    /// The register that starts at 1. Renaming swaps it with the target an
    /// even or odd number of times; the circuit remembers its name.
    pub fn result_input_qubits(&self) -> Vec<Qubit> {
        self.circuit
            .register("multiplicand")
            .expect("modexp circuits declare a multiplicand")
            .qubits
            .clone()
    }
}

/// Simulates the full superposition and checks every branch against
/// `mod_pow`, requiring a clean workspace and phase +1 everywhere.
pub fn verify_modexp(
    mc: &ModexpCircuit,
    inst: &ProblemInstance,
    seed: u64,
    policy: OutcomePolicy,
) -> Result<SparseState, VerifyError> {
    let n = inst.modulus().to_u128().ok_or(VerifyError::TooWide)?;
    let b = inst.base().to_u128().ok_or(VerifyError::TooWide)?;
    let mut state = modexp_input(mc, seed).with_policy(policy);
    state.run(&mc.circuit)?;
    let expected = 1usize << mc.exponent.len();
    if state.branches().len() != expected {
        return Err(VerifyError::BranchCount {
            expected,
            found: state.branches().len(),
        });
    }
    for &(key, phase) in state.branches() {
        let x = read_bits(key, &mc.exponent.qubits);
        let found = read_bits(key, &mc.result.qubits);
        let want = mod_pow(&BigUint::from(b), &BigUint::from(x), &BigUint::from(n))
            .to_u128()
            .expect("residue fits");
        if found != want {
            return Err(VerifyError::WrongValue {
                x,
                expected: want,
                found,
            });
        }
        let rest = write_bits(write_bits(key, &mc.exponent.qubits, 0), &mc.result.qubits, 0);
        if rest != 0 {
            return Err(VerifyError::DirtyWorkspace { x });
        }
        if phase != 1 {
            return Err(VerifyError::Phase { x });
        }
    }
    Ok(state)
}
