//! Exact modular arithmetic and classical table precomputation.
//!
//! Table addresses are laid out as `mult ‖ expn`: the exponent window sits in
//! the low-order address bits, the multiplication window above it.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NumericsError {
    #[error("{base} is not invertible modulo {modulus}")]
    NotInvertible { base: BigUint, modulus: BigUint },
    #[error("modulus must be an odd integer >= 3, got {0}")]
    BadModulus(BigUint),
    #[error("base must lie in [2, N) and be coprime to N, got {0}")]
    BadBase(BigUint),
    #[error("window sizes must be at least 1 (w_e={w_e}, w_m={w_m})")]
    BadWindow { w_e: u32, w_m: u32 },
    #[error("exponent register must have at least one bit")]
    EmptyExponent,
    #[error("window index {index} out of range ({count} windows)")]
    WindowOutOfRange { index: u32, count: u32 },
    #[error("initial lookup bits {0} exceed the exponent size {1}")]
    InitialBits(u32, u32),
    #[error("address split {low} exceeds address width {addr}")]
    BadSplit { low: u32, addr: u32 },
    #[error("table text: {0}")]
    Format(String),
}

/// `b^e mod N` by square-and-multiply.
pub fn mod_pow(b: &BigUint, e: &BigUint, modulus: &BigUint) -> BigUint {
    assert!(*modulus >= BigUint::from(2u32), "modulus must be >= 2");
    let mut result = BigUint::one();
    let mut acc = b % modulus;
    let bits = e.bits();
    for k in 0..bits {
        if e.bit(k) {
            result = (&result * &acc) % modulus;
        }
        if k + 1 < bits {
            acc = (&acc * &acc) % modulus;
        }
    }
    result % modulus
}

/// Inverse of `b` modulo `N` via the extended Euclidean algorithm.
pub fn mod_inverse(b: &BigUint, modulus: &BigUint) -> Result<BigUint, NumericsError> {
    use num_bigint::BigInt;
    let m = BigInt::from(modulus.clone());
    let a = BigInt::from(b % modulus);
    let ext = a.extended_gcd(&m);
    if !ext.gcd.is_one() {
        return Err(NumericsError::NotInvertible {
            base: b.clone(),
            modulus: modulus.clone(),
        });
    }
    let x = ext.x.mod_floor(&m);
    Ok(x.to_biguint().expect("mod_floor result is non-negative"))
}

/// Parity of the bitwise AND of two words.
pub fn parity_and(a: &BigUint, b: &BigUint) -> bool {
    let (short, long) = if a.bits() <= b.bits() { (a, b) } else { (b, a) };
    let mut acc = 0u32;
    for (x, y) in short.iter_u64_digits().zip(long.iter_u64_digits()) {
        acc ^= (x & y).count_ones() & 1;
    }
    acc == 1
}

/// Widths of consecutive `w`-bit windows covering `total` bits; the last one
/// holds the remainder.
pub fn window_widths(total: u32, w: u32) -> Vec<u32> {
    assert!(w > 0);
    let mut out = Vec::with_capacity(total.div_ceil(w) as usize);
    let mut left = total;
    while left > 0 {
        let k = left.min(w);
        out.push(k);
        left -= k;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemInstance {
    modulus: BigUint,
    base: BigUint,
    n: u32,
    n_e: u32,
}

impl ProblemInstance {
    pub fn new(modulus: BigUint, base: BigUint, n_e: u32) -> Result<Self, NumericsError> {
        if modulus < BigUint::from(3u32) || modulus.is_even() {
            return Err(NumericsError::BadModulus(modulus));
        }
        if base < BigUint::from(2u32) || base >= modulus || !base.gcd(&modulus).is_one() {
            return Err(NumericsError::BadBase(base));
        }
        if n_e == 0 {
            return Err(NumericsError::EmptyExponent);
        }
        let n = modulus.bits() as u32;
        Ok(Self { modulus, base, n, n_e })
    }

    pub fn small(modulus: u64, base: u64, n_e: u32) -> Result<Self, NumericsError> {
        Self::new(BigUint::from(modulus), BigUint::from(base), n_e)
    }

    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    pub fn base(&self) -> &BigUint {
        &self.base
    }

    /// Bit length of the modulus.
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn n_e(&self) -> u32 {
        self.n_e
    }

    pub fn base_inverse(&self) -> BigUint {
        mod_inverse(&self.base, &self.modulus).expect("base is coprime by construction")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WindowParams {
    pub w_e: u32,
    pub w_m: u32,
}

impl WindowParams {
    pub fn new(w_e: u32, w_m: u32) -> Result<Self, NumericsError> {
        if w_e == 0 || w_m == 0 {
            return Err(NumericsError::BadWindow { w_e, w_m });
        }
        Ok(Self { w_e, w_m })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TableKind {
    Multiply,
    Pruned,
    PhaseFixup,
    DirectExp,
}

impl TableKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TableKind::Multiply => "multiply",
            TableKind::Pruned => "pruned",
            TableKind::PhaseFixup => "phase_fixup",
            TableKind::DirectExp => "direct_exp",
        }
    }
}

impl fmt::Display for TableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TableKind {
    type Err = NumericsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "multiply" => Ok(TableKind::Multiply),
            "pruned" => Ok(TableKind::Pruned),
            "phase_fixup" => Ok(TableKind::PhaseFixup),
            "direct_exp" => Ok(TableKind::DirectExp),
            other => Err(NumericsError::Format(format!("unknown table kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LookupTable {
    pub kind: TableKind,
    pub addr_bits: u32,
    pub word_bits: u32,
    pub entries: Vec<BigUint>,
}

impl LookupTable {
    pub fn new(kind: TableKind, addr_bits: u32, word_bits: u32, entries: Vec<BigUint>) -> Result<Self, NumericsError> {
        if entries.len() != 1usize << addr_bits {
            return Err(NumericsError::Format(format!(
                "expected {} entries, found {}",
                1usize << addr_bits,
                entries.len()
            )));
        }
        if let Some(e) = entries.iter().find(|e| e.bits() > word_bits as u64) {
            return Err(NumericsError::Format(format!(
                "entry {e:x} wider than {word_bits} bits"
            )));
        }
        Ok(Self {
            kind,
            addr_bits,
            word_bits,
            entries,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, addr: usize) -> &BigUint {
        &self.entries[addr]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    /// Line-oriented text: a header `table <kind> <addr_bits> <word_bits>`
    /// followed by one lowercase hex entry per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("table {} {} {}\n", self.kind, self.addr_bits, self.word_bits);
        for e in &self.entries {
            out.push_str(&format!("{e:x}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, NumericsError> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| NumericsError::Format("missing header".into()))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 4 || parts[0] != "table" {
            return Err(NumericsError::Format(format!("bad header `{header}`")));
        }
        let kind: TableKind = parts[1].parse()?;
        let parse_u32 = |s: &str| {
            s.parse::<u32>()
                .map_err(|_| NumericsError::Format(format!("bad number `{s}`")))
        };
        let addr_bits = parse_u32(parts[2])?;
        let word_bits = parse_u32(parts[3])?;
        if addr_bits > 30 {
            return Err(NumericsError::Format(format!("addr_bits {addr_bits} too large")));
        }
        let entries = lines
            .map(|l| {
                BigUint::parse_bytes(l.as_bytes(), 16)
                    .ok_or_else(|| NumericsError::Format(format!("bad hex entry `{l}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(kind, addr_bits, word_bits, entries)
    }
}

/// Geometry of one windowed multiplication table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MulTableSpec {
    pub modulus: BigUint,
    pub base: BigUint,
    /// Position of the exponent window's lowest bit inside the full exponent.
    pub exp_shift: u32,
    pub e_bits: u32,
    /// Position of the multiplication window's lowest bit.
    pub m_shift: u32,
    pub m_bits: u32,
    pub word_bits: u32,
}

impl MulTableSpec {
    pub fn addr_bits(&self) -> u32 {
        self.e_bits + self.m_bits
    }

    /// `base^{2^{exp_shift}} mod N`, the multiplier selected by `expn = 1`.
    fn window_base(&self) -> BigUint {
        let mut c = &self.base % &self.modulus;
        for _ in 0..self.exp_shift {
            c = (&c * &c) % &self.modulus;
        }
        c
    }

    pub fn build(&self) -> Result<LookupTable, NumericsError> {
        if !self.base.gcd(&self.modulus).is_one() {
            return Err(NumericsError::NotInvertible {
                base: self.base.clone(),
                modulus: self.modulus.clone(),
            });
        }
        let c = self.window_base();
        let mut powers = Vec::with_capacity(1 << self.e_bits);
        let mut acc = BigUint::one() % &self.modulus;
        for _ in 0..(1u64 << self.e_bits) {
            powers.push(acc.clone());
            acc = (&acc * &c) % &self.modulus;
        }
        let shift = mod_pow(&BigUint::from(2u32), &BigUint::from(self.m_shift), &self.modulus);
        let mut entries = Vec::with_capacity(1 << self.addr_bits());
        for mult in 0..(1u64 << self.m_bits) {
            let scaled = (&shift * mult) % &self.modulus;
            for p in &powers {
                entries.push((&scaled * p) % &self.modulus);
            }
        }
        LookupTable::new(TableKind::Multiply, self.addr_bits(), self.word_bits, entries)
    }

    pub fn build_pruned(&self) -> Result<LookupTable, NumericsError> {
        let mut t = self.build()?;
        for (addr, e) in t.entries.iter_mut().enumerate() {
            *e ^= self.copy_pattern(addr);
        }
        t.kind = TableKind::Pruned;
        Ok(t)
    }

    /// The raw value `mult · 2^{m_shift}` that the copy stage writes for `addr`.
    pub fn copy_pattern(&self, addr: usize) -> BigUint {
        let mult = (addr >> self.e_bits) as u64;
        BigUint::from(mult) << self.m_shift
    }
}

fn window_spec(
    inst: &ProblemInstance,
    wp: WindowParams,
    i: u32,
    j: u32,
    base: &BigUint,
) -> Result<MulTableSpec, NumericsError> {
    let e_w = window_widths(inst.n_e(), wp.w_e);
    let m_w = window_widths(inst.n(), wp.w_m);
    let e_bits = *e_w.get(i as usize).ok_or(NumericsError::WindowOutOfRange {
        index: i,
        count: e_w.len() as u32,
    })?;
    let m_bits = *m_w.get(j as usize).ok_or(NumericsError::WindowOutOfRange {
        index: j,
        count: m_w.len() as u32,
    })?;
    Ok(MulTableSpec {
        modulus: inst.modulus().clone(),
        base: base.clone(),
        exp_shift: i * wp.w_e,
        e_bits,
        m_shift: j * wp.w_m,
        m_bits,
        word_bits: inst.n(),
    })
}

/// `T_{i,j}(mult, expn) = base^{expn·2^{i·w_e}} · 2^{j·w_m} · mult mod N`.
pub fn build_mul_table(
    inst: &ProblemInstance,
    wp: WindowParams,
    i: u32,
    j: u32,
    base: &BigUint,
) -> Result<LookupTable, NumericsError> {
    window_spec(inst, wp, i, j, base)?.build()
}

/// `T'(mult, expn) = T(mult, expn) XOR (2^{j·w_m} · mult)`.
pub fn build_pruned_table(
    inst: &ProblemInstance,
    wp: WindowParams,
    i: u32,
    j: u32,
    base: &BigUint,
) -> Result<LookupTable, NumericsError> {
    window_spec(inst, wp, i, j, base)?.build_pruned()
}

/// Bit `x` of `F[row]` is set iff `parity(s & table[row ‖ x]) = 1`, where
/// `x` ranges over the `low_bits` least significant address bits.
pub fn build_phase_fixup_table(table: &LookupTable, s: &BigUint, low_bits: u32) -> Result<LookupTable, NumericsError> {
    if low_bits > table.addr_bits {
        return Err(NumericsError::BadSplit {
            low: low_bits,
            addr: table.addr_bits,
        });
    }
    let rows = 1usize << (table.addr_bits - low_bits);
    let cols = 1usize << low_bits;
    let mut entries = Vec::with_capacity(rows);
    for row in 0..rows {
        let mut word = BigUint::zero();
        for x in 0..cols {
            if parity_and(s, &table.entries[(row << low_bits) | x]) {
                word.set_bit(x as u64, true);
            }
        }
        entries.push(word);
    }
    LookupTable::new(TableKind::PhaseFixup, table.addr_bits - low_bits, cols as u32, entries)
}

/// Entry `e` holds `b^e mod N` for every `e < 2^{n'_e}`.
pub fn build_direct_exp_table(inst: &ProblemInstance, initial_bits: u32) -> Result<LookupTable, NumericsError> {
    if initial_bits > inst.n_e() {
        return Err(NumericsError::InitialBits(initial_bits, inst.n_e()));
    }
    direct_exp_entries(inst.modulus(), inst.base(), initial_bits, inst.n())
}

pub(crate) fn direct_exp_entries(
    modulus: &BigUint,
    base: &BigUint,
    bits: u32,
    word_bits: u32,
) -> Result<LookupTable, NumericsError> {
    let mut entries = Vec::with_capacity(1 << bits);
    let mut acc = BigUint::one() % modulus;
    for _ in 0..(1u64 << bits) {
        entries.push(acc.clone());
        acc = (&acc * base) % modulus;
    }
    LookupTable::new(TableKind::DirectExp, bits, word_bits, entries)
}
