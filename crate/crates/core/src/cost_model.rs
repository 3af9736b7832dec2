//! Closed-form Toffoli count, depth and qubit formulas for windowed modular
//! exponentiation and its optimized variants.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::numerics::window_widths;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CostError {
    #[error("unknown variant `{0}`")]
    InvalidVariant(String),
    #[error("parameters must be positive (n={n}, n_e={n_e}, w_e={w_e}, w_m={w_m})")]
    BadParams { n: u64, n_e: u64, w_e: u32, w_m: u32 },
    #[error("initial lookup bits {0} exceed n_e = {1}")]
    InitialBits(u32, u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Original,
    Opt1,
    Opt2,
    Opt3,
    Opt4,
    Combined,
    SlicedA,
    SlicedB,
}

impl Variant {
    pub const ALL: [Variant; 8] = [
        Variant::Original,
        Variant::Opt1,
        Variant::Opt2,
        Variant::Opt3,
        Variant::Opt4,
        Variant::Combined,
        Variant::SlicedA,
        Variant::SlicedB,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Original => "original",
            Variant::Opt1 => "opt1",
            Variant::Opt2 => "opt2",
            Variant::Opt3 => "opt3",
            Variant::Opt4 => "opt4",
            Variant::Combined => "combined",
            Variant::SlicedA => "sliced_a",
            Variant::SlicedB => "sliced_b",
        }
    }

    /// Whether the variant exponentiates a prefix of the exponent directly.
    pub fn uses_initial_lookup(self) -> bool {
        matches!(self, Variant::Opt3 | Variant::Combined)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = CostError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| CostError::InvalidVariant(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct CostParams {
    pub n: u64,
    pub n_e: u64,
    pub w_e: u32,
    pub w_m: u32,
    /// Exponent bits handled by the initial direct lookup.
    pub n_e_init: u32,
}

impl CostParams {
    pub fn new(n: u64, n_e: u64, w_e: u32, w_m: u32, n_e_init: u32) -> Self {
        Self {
            n,
            n_e,
            w_e,
            w_m,
            n_e_init,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostOptions {
    /// Multiplier on `sqrt(2^{w_e+w_m})` for the plain unlookup; 3 books an
    /// explicit unary uncompute, 2 a temporary-AND one.
    pub unlookup_const: f64,
    /// Coset padding qubits added to every arithmetic register.
    pub coset_pad: u64,
    /// Count windows with `ceil` instead of the continuous ratio.
    pub ceil_reps: bool,
    /// Replace the combined-row unlookup depth by `2^{w_m} + 2(w_e − 1)`.
    pub corrected_combined_depth: bool,
}

impl Default for CostOptions {
    fn default() -> Self {
        Self {
            unlookup_const: 3.0,
            coset_pad: 0,
            ceil_reps: false,
            corrected_combined_depth: false,
        }
    }
}

impl CostOptions {
    pub fn temp_and() -> Self {
        Self {
            unlookup_const: 2.0,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostBreakdown {
    pub variant: Variant,
    pub params: CostParams,
    pub reps: f64,
    pub adt_factor: f64,
    pub lookup_tofs: f64,
    pub add_tofs: f64,
    pub unlookup_tofs: f64,
    pub lookup_depth: f64,
    pub add_depth: f64,
    pub unlookup_depth: f64,
    pub total_tofs: f64,
    pub total_depth: f64,
    pub logical_qubits: u64,
}

impl CostBreakdown {
    pub fn per_rep_tofs(&self) -> f64 {
        self.lookup_tofs + self.add_tofs + self.unlookup_tofs
    }

    pub fn per_rep_depth(&self) -> f64 {
        self.lookup_depth + self.add_depth + self.unlookup_depth
    }

    /// Recomputes both totals from the columns.
    pub fn refresh_totals(&mut self) {
        self.total_tofs = self.adt_factor + self.reps * self.per_rep_tofs();
        self.total_depth = self.adt_factor + self.reps * self.per_rep_depth();
    }
}

fn pow2(k: f64) -> f64 {
    k.exp2()
}

/// Table-row formulas for one parameter point.
pub fn cost(variant: Variant, p: CostParams, opts: &CostOptions) -> Result<CostBreakdown, CostError> {
    if p.n == 0 || p.n_e == 0 || p.w_e == 0 || p.w_m == 0 {
        return Err(CostError::BadParams {
            n: p.n,
            n_e: p.n_e,
            w_e: p.w_e,
            w_m: p.w_m,
        });
    }
    let init = if variant.uses_initial_lookup() { p.n_e_init } else { 0 };
    if init as u64 > p.n_e {
        return Err(CostError::InitialBits(init, p.n_e));
    }
    let n = p.n as f64;
    let nr = (p.n + opts.coset_pad) as f64;
    let (we, wm) = (p.w_e as f64, p.w_m as f64);
    let rest = (p.n_e - init as u64) as f64;
    let reps = if opts.ceil_reps {
        2.0 * (rest / we).ceil() * (nr / wm).ceil()
    } else {
        2.0 * nr * rest / (wm * we)
    };
    let table = pow2(we + wm);
    let root = table.sqrt();
    let plain_unlookup = opts.unlookup_const * root;
    let deferred_unlookup = 2.0 * (wm / nr) * pow2(we) + pow2(wm);
    let pruned_lookup = table - pow2(we);
    let add = 2.0 * nr;

    let mut b = CostBreakdown {
        variant,
        params: CostParams { n_e_init: init, ..p },
        reps,
        adt_factor: 0.0,
        lookup_tofs: table,
        add_tofs: add,
        unlookup_tofs: plain_unlookup,
        lookup_depth: table,
        add_depth: add,
        unlookup_depth: plain_unlookup,
        total_tofs: 0.0,
        total_depth: 0.0,
        logical_qubits: 3 * (p.n + opts.coset_pad) + p.n_e,
    };
    match variant {
        Variant::Original => {}
        Variant::Opt1 => {
            b.unlookup_tofs = deferred_unlookup;
            b.unlookup_depth = deferred_unlookup;
        }
        Variant::Opt2 => {
            b.lookup_tofs = pruned_lookup;
            b.lookup_depth = pruned_lookup;
        }
        Variant::Opt3 => {
            b.adt_factor = initial_lookup_cost(init);
        }
        Variant::Opt4 => {
            b.unlookup_depth = root + 2.0 * (we - 1.0);
            b.logical_qubits += routing_qubits((p.w_e + p.w_m) / 2);
        }
        Variant::Combined => {
            b.adt_factor = initial_lookup_cost(init);
            b.lookup_tofs = pruned_lookup;
            b.lookup_depth = pruned_lookup;
            b.unlookup_tofs = deferred_unlookup;
            b.unlookup_depth = if opts.corrected_combined_depth {
                pow2(wm) + 2.0 * (we - 1.0)
            } else {
                2.0 * (wm / nr) * (we - 1.0) + pow2(wm)
            };
            b.logical_qubits += routing_qubits(p.w_e);
        }
        Variant::SlicedA => {
            // n extra depth per lookup-add pair.
            b.add_depth += n / 2.0;
            b.logical_qubits -= p.n / 2;
        }
        Variant::SlicedB => {
            b.add_tofs -= n / 2.0;
        }
    }
    b.refresh_totals();
    Ok(b)
}

/// `2^{n'_e}`, or nothing when the initial lookup is disabled.
fn initial_lookup_cost(init: u32) -> f64 {
    if init == 0 {
        0.0
    } else {
        pow2(init as f64)
    }
}

/// Fan-out copies needed by the low-depth unary on `w` bits.
fn routing_qubits(w: u32) -> u64 {
    if w == 0 {
        0
    } else {
        (1u64 << (w - 1)) - 1
    }
}

/// Shape of a synthesized circuit, for the exact metered Toffoli count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CircuitShape {
    /// Width of the arithmetic registers, coset padding included.
    pub n_reg: u32,
    pub n_e: u32,
    pub w_e: u32,
    pub w_m: u32,
    pub initial_bits: u32,
    pub deferred: bool,
    pub selective: bool,
}

/// Toffolis the builders emit for `shape` with the Cuccaro adder:
/// lookups `2^ℓ − 1` (selective `2^ℓ − 2^{e}`), additions `2·n_reg`,
/// unlookups `2^u + 2^{ℓ−u} − 2`, or per deferred pass
/// `2^{e} − 1 + Σ_j (2^{m_j} − 1)`, plus `2^{n'_e} − 1` up front.
pub fn metered_toffolis(s: &CircuitShape) -> u64 {
    let mut total = 0u64;
    if s.initial_bits > 0 {
        total += (1u64 << s.initial_bits) - 1;
    }
    let mult = window_widths(s.n_reg, s.w_m);
    for e in window_widths(s.n_e - s.initial_bits, s.w_e) {
        let mut pass = 0u64;
        for &m in &mult {
            let l = e + m;
            pass += if s.selective {
                (1u64 << l) - (1u64 << e)
            } else {
                (1u64 << l) - 1
            };
            pass += 2 * s.n_reg as u64;
            if !s.deferred {
                let u = l / 2;
                pass += (1u64 << u) + (1u64 << (l - u)) - 2;
            }
        }
        if s.deferred {
            pass += (1u64 << e) - 1;
            pass += mult.iter().map(|&m| (1u64 << m) - 1).sum::<u64>();
        }
        total += 2 * pass;
    }
    total
}

/// Windowed Toffoli cost of one exponent window: `2(n/w_m)(2^ℓ + 2n + 2·2^{ℓ/2})`.
pub fn window_cost(n: u64, w_e: u32, w_m: u32) -> f64 {
    let l = (w_e + w_m) as f64;
    2.0 * (n as f64 / w_m as f64) * (pow2(l) + 2.0 * n as f64 + 2.0 * pow2(l / 2.0))
}

/// Largest initial-lookup width considered.
pub const MAX_INITIAL_BITS: u32 = 40;

/// `argmin_x 2^x + (n_e − x)/w_e · window_cost` over `x ∈ [0, 40]`; the
/// `n_e` term is constant so it drops out.
pub fn crossover_initial_lookup(n: u64, w_e: u32, w_m: u32) -> u32 {
    let per_bit = window_cost(n, w_e, w_m) / w_e as f64;
    (0..=MAX_INITIAL_BITS)
        .min_by(|&a, &b| {
            let f = |x: u32| pow2(x as f64) - x as f64 * per_bit;
            f(a).total_cmp(&f(b))
        })
        .expect("range is non-empty")
}

/// Largest window considered by [`grid_best_windows`].
pub const MAX_WINDOW: u32 = 10;

/// Exhaustive search over `w_e, w_m ∈ [1, 10]` and, for variants with an
/// initial lookup, `n'_e ∈ [0, min(40, n_e)]`, minimizing total Toffolis.
/// Ties go to the lexicographically smallest `(w_e, w_m, n'_e)`.
pub fn grid_best_windows(n: u64, n_e: u64, variant: Variant, opts: &CostOptions) -> Result<CostBreakdown, CostError> {
    let max_init = if variant.uses_initial_lookup() {
        (MAX_INITIAL_BITS as u64).min(n_e) as u32
    } else {
        0
    };
    let points: Vec<(u32, u32, u32)> = (1..=MAX_WINDOW)
        .flat_map(|we| (1..=MAX_WINDOW).flat_map(move |wm| (0..=max_init).map(move |x| (we, wm, x))))
        .collect();
    let rows = points
        .par_iter()
        .map(|&(we, wm, x)| cost(variant, CostParams::new(n, n_e, we, wm, x), opts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(rows
        .into_iter()
        .min_by(|a, b| {
            a.total_tofs.total_cmp(&b.total_tofs).then_with(|| {
                let k = |c: &CostBreakdown| (c.params.w_e, c.params.w_m, c.params.n_e_init);
                k(a).cmp(&k(b))
            })
        })
        .expect("grid is non-empty"))
}

/// Relative Toffoli saving of `better` against `baseline`, in percent.
pub fn reduction_percent(baseline: f64, better: f64) -> f64 {
    100.0 * (1.0 - better / baseline)
}
