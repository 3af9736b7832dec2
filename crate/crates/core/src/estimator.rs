//! Surface-code resource estimation and parameter grid search.
//!
//! Physical qubits come from `2(d+1)^2` per logical patch times a routing
//! factor plus CCZ factory footprints; runtime is the larger of the
//! reaction-limited Toffoli depth and the factory-limited Toffoli rate.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cost_model::{cost, crossover_initial_lookup, CostBreakdown, CostError, CostOptions, CostParams, Variant};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("total error {0:.4} leaves no chance of success")]
    BudgetOverflow(f64),
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("invalid profile: {0}")]
    BadProfile(String),
    #[error("invalid layout point: {0}")]
    BadPoint(String),
    #[error(transparent)]
    Cost(#[from] CostError),
}

/// Megaqubit budgets of the reference runtime comparison at `p = 1e-3`.
pub const REFERENCE_BUDGETS_MQB: [f64; 12] = [
    14.747, 15.592, 17.492, 18.513, 19.249, 21.616, 24.001, 25.265, 27.308, 29.184, 32.602, 40.075,
];

/// Hardware assumptions, factory model and search ranges. Every field can be
/// set from a `key = value` config file; see [`HardwareProfile::apply_config`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardwareProfile {
    pub p_phys: f64,
    pub cycle_ns: f64,
    /// Wall-clock time of one layer of dependent Toffolis (control-system
    /// reaction plus lattice-surgery overhead).
    pub reaction_time_us: f64,
    /// Logical error per patch per round: `prefactor · (p/threshold)^{(d+1)/2}`.
    pub logical_prefactor: f64,
    pub threshold: f64,
    /// Factory cycle length in rounds is this times `L2`.
    pub factory_rounds_per_distance: f64,
    /// Factory footprint, in level-1 patches of `2(L1+1)^2` qubits.
    pub factory_patches_l1: f64,
    /// Additional footprint in level-2 patches of `2(L2+1)^2` qubits.
    pub factory_patches_l2: f64,
    pub routing_overhead: f64,
    /// Level-0 injection error is `p + injection_cells · p_L(L1/2)`.
    pub injection_cells: f64,
    /// Level-1 output error is `l1_distill · e0^3 + l1_cells · p_L(L1)`.
    pub l1_distill: f64,
    pub l1_cells: f64,
    /// CCZ output error is `l2_distill · e1^2 + l2_cells · p_L(L2)`.
    pub l2_distill: f64,
    pub l2_cells: f64,
    pub search: SearchSpace,
}

impl Default for HardwareProfile {
    fn default() -> Self {
        Self {
            p_phys: 1e-3,
            cycle_ns: 1000.0,
            reaction_time_us: 12.0,
            logical_prefactor: 0.1,
            threshold: 0.01,
            factory_rounds_per_distance: 5.5,
            factory_patches_l1: 586.0,
            factory_patches_l2: 0.0,
            routing_overhead: 1.05,
            injection_cells: 100.0,
            l1_distill: 35.0,
            l1_cells: 1100.0,
            l2_distill: 28.0,
            l2_cells: 1000.0,
            search: SearchSpace::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SearchSpace {
    pub l1_min: u32,
    pub l1_max: u32,
    pub l2_max: u32,
    pub d_off_min: u32,
    pub d_off_max: u32,
    pub g_min: u32,
    pub g_max: u32,
    pub g_seps: Vec<u64>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            l1_min: 9,
            l1_max: 25,
            l2_max: 39,
            d_off_min: 2,
            d_off_max: 10,
            g_min: 3,
            g_max: 7,
            g_seps: vec![256, 512, 1024, 2048],
        }
    }
}

impl HardwareProfile {
    pub fn with_error_rate(p_phys: f64) -> Self {
        Self {
            p_phys,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), EstimateError> {
        let bad = |m: &str| Err(EstimateError::BadProfile(m.to_string()));
        if !(self.p_phys > 0.0 && self.p_phys < 1.0) {
            return bad("p_phys must lie in (0, 1)");
        }
        if self.p_phys >= self.threshold {
            return bad("p_phys must be below the threshold");
        }
        if self.cycle_ns <= 0.0 || self.reaction_time_us <= 0.0 {
            return bad("times must be positive");
        }
        if self.routing_overhead < 1.0 {
            return bad("routing_overhead must be at least 1");
        }
        if self.search.g_min == 0 || self.search.g_min > self.search.g_max {
            return bad("window range is empty");
        }
        if self.search.l1_min > self.search.l1_max || self.search.d_off_min > self.search.d_off_max {
            return bad("distance or padding range is empty");
        }
        if self.search.g_seps.is_empty() || self.search.g_seps.contains(&0) {
            return bad("g_sep list must be non-empty and positive");
        }
        Ok(())
    }

    /// Reads `key = value` lines; `#` starts a comment.
    pub fn apply_config(&mut self, text: &str) -> Result<(), EstimateError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| EstimateError::Config { line: i + 1, msg };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let num = || value.parse::<f64>().map_err(|_| err(format!("bad number `{value}`")));
            let int = || value.parse::<u32>().map_err(|_| err(format!("bad integer `{value}`")));
            match key {
                "p_phys" => self.p_phys = num()?,
                "cycle_ns" => self.cycle_ns = num()?,
                "reaction_time_us" => self.reaction_time_us = num()?,
                "logical_prefactor" => self.logical_prefactor = num()?,
                "threshold" => self.threshold = num()?,
                "factory_rounds_per_distance" => self.factory_rounds_per_distance = num()?,
                "factory_patches_l1" => self.factory_patches_l1 = num()?,
                "factory_patches_l2" => self.factory_patches_l2 = num()?,
                "routing_overhead" => self.routing_overhead = num()?,
                "injection_cells" => self.injection_cells = num()?,
                "l1_distill" => self.l1_distill = num()?,
                "l1_cells" => self.l1_cells = num()?,
                "l2_distill" => self.l2_distill = num()?,
                "l2_cells" => self.l2_cells = num()?,
                "l1_min" => self.search.l1_min = int()?,
                "l1_max" => self.search.l1_max = int()?,
                "l2_max" => self.search.l2_max = int()?,
                "d_off_min" => self.search.d_off_min = int()?,
                "d_off_max" => self.search.d_off_max = int()?,
                "g_min" => self.search.g_min = int()?,
                "g_max" => self.search.g_max = int()?,
                "g_seps" => {
                    self.search.g_seps = value
                        .split(',')
                        .map(|s| s.trim().parse::<u64>().map_err(|_| err(format!("bad g_sep `{s}`"))))
                        .collect::<Result<_, _>>()?
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        self.validate()
    }

    /// Logical error per patch per round at distance `d`.
    pub fn logical_error(&self, d: u32) -> f64 {
        self.logical_prefactor * (self.p_phys / self.threshold).powf((d as f64 + 1.0) / 2.0)
    }

    /// Output error of one CCZ state from the two-level factory.
    pub fn ccz_error(&self, l1: u32, l2: u32) -> f64 {
        let e0 = self.p_phys + self.injection_cells * self.logical_error(l1 / 2);
        let e1 = self.l1_distill * e0.powi(3) + self.l1_cells * self.logical_error(l1);
        self.l2_distill * e1.powi(2) + self.l2_cells * self.logical_error(l2)
    }

    /// Physical qubits of one factory.
    pub fn factory_qubits(&self, l1: u32, l2: u32) -> f64 {
        self.factory_patches_l1 * patch_qubits(l1) + self.factory_patches_l2 * patch_qubits(l2)
    }

    fn cycle_us(&self) -> f64 {
        self.cycle_ns / 1000.0
    }
}

/// `2(d+1)^2` physical qubits per logical patch.
pub fn patch_qubits(d: u32) -> f64 {
    let s = d as f64 + 1.0;
    2.0 * s * s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct LayoutPoint {
    pub l1: u32,
    pub l2: u32,
    /// Data distances; both equal `l2` in the searched grid.
    pub d1: u32,
    pub d2: u32,
    pub d_off: u32,
    pub g_mul: u32,
    pub g_exp: u32,
    pub g_sep: u64,
}

impl LayoutPoint {
    pub fn new(l1: u32, l2: u32, d_off: u32, g_mul: u32, g_exp: u32, g_sep: u64) -> Self {
        Self {
            l1,
            l2,
            d1: l2,
            d2: l2,
            d_off,
            g_mul,
            g_exp,
            g_sep,
        }
    }

    fn validate(&self) -> Result<(), EstimateError> {
        if self.l1 == 0 || self.l1 >= self.l2 {
            return Err(EstimateError::BadPoint(format!(
                "need 0 < L1 < L2, got {} {}",
                self.l1, self.l2
            )));
        }
        if self.g_mul == 0 || self.g_exp == 0 || self.g_sep == 0 || self.d1 == 0 || self.d2 == 0 {
            return Err(EstimateError::BadPoint("sizes must be positive".into()));
        }
        Ok(())
    }

    fn key(&self) -> (u32, u32, u32, u32, u32, u64) {
        (self.l1, self.l2, self.d_off, self.g_mul, self.g_exp, self.g_sep)
    }
}

/// Adder pieces, coset padding per piece and padded register width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Layout {
    pub pieces: u64,
    pub pad: u64,
    pub register: u64,
    pub logical_qubits: u64,
}

/// Register geometry: `n/g_sep` runway pieces each padded by
/// `ceil(log2(n·n_e)) + d_off` qubits, three padded registers plus the
/// exponent window and one runway carry per piece.
pub fn logical_layout(n: u64, n_e: u64, point: &LayoutPoint) -> Layout {
    let pieces = n.div_ceil(point.g_sep);
    let pad = ((n * n_e) as f64).log2().ceil() as u64 + point.d_off as u64;
    let register = n + pieces * pad;
    Layout {
        pieces,
        pad,
        register,
        logical_qubits: 3 * register + point.g_exp as u64 + pieces,
    }
}

/// Cost breakdown for the padded registers of `point`.
pub fn point_cost(
    n: u64,
    n_e: u64,
    point: &LayoutPoint,
    variant: Variant,
    n_e_init: u32,
) -> Result<CostBreakdown, EstimateError> {
    let layout = logical_layout(n, n_e, point);
    let opts = CostOptions {
        unlookup_const: 2.0,
        coset_pad: layout.register - n,
        ceil_reps: true,
        corrected_combined_depth: false,
    };
    Ok(cost(
        variant,
        CostParams::new(n, n_e, point.g_exp, point.g_mul, n_e_init),
        &opts,
    )?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Binding {
    /// Reaction-limited Toffoli depth.
    Depth,
    /// Factory output rate.
    Factory,
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Binding::Depth => "depth",
            Binding::Factory => "factory",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorBudget {
    pub data: f64,
    pub factory: f64,
    pub coset_deviation: f64,
    pub runway: f64,
    pub total: f64,
}

impl ErrorBudget {
    fn new(data: f64, factory: f64, coset_deviation: f64, runway: f64) -> Self {
        Self {
            data,
            factory,
            coset_deviation,
            runway,
            total: data + factory + coset_deviation + runway,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateRow {
    pub n: u64,
    pub n_e: u64,
    pub p_phys: f64,
    pub variant: Variant,
    pub n_e_init: u32,
    pub point: LayoutPoint,
    pub retry_risk: f64,
    pub vol_per_run: f64,
    pub expected_vol: f64,
    pub mqb: f64,
    pub hours: f64,
    pub expected_hours: f64,
    pub b_tofs: f64,
    pub q: f64,
    pub skewed_volume: f64,
    pub factories: u64,
    pub logical_qubits: u64,
    pub binding: Binding,
    pub errors: ErrorBudget,
}

/// Derived columns of one row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Derived {
    pub vol_per_run: f64,
    pub expected_vol: f64,
    pub expected_hours: f64,
    pub skewed_volume: f64,
}

/// `E[hrs] = hrs/(1−risk)`, `v.p.r = Mqb·hrs/24`, `E[vol] = v.p.r/(1−risk)`,
/// skewed volume `Mqb^q · E[hrs]`.
pub fn derive(mqb: f64, hours: f64, risk: f64, q: f64) -> Derived {
    let keep = 1.0 - risk;
    let vol_per_run = mqb * hours / 24.0;
    let expected_hours = hours / keep;
    Derived {
        vol_per_run,
        expected_vol: vol_per_run / keep,
        expected_hours,
        skewed_volume: mqb.powf(q) * expected_hours,
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

impl EstimateRow {
    /// The row's identities hold to `rel` relative error.
    pub fn audit(&self, rel: f64) -> bool {
        let d = derive(self.mqb, self.hours, self.retry_risk, self.q);
        (0.0..1.0).contains(&self.retry_risk)
            && close(self.vol_per_run, d.vol_per_run, rel)
            && close(self.expected_vol, d.expected_vol, rel)
            && close(self.expected_hours, d.expected_hours, rel)
            && close(self.skewed_volume, d.skewed_volume, rel)
    }
}

/// Physical estimate for one layout point and cost breakdown.
pub fn estimate(
    n: u64,
    n_e: u64,
    profile: &HardwareProfile,
    point: &LayoutPoint,
    cost: &CostBreakdown,
    q: f64,
) -> Result<EstimateRow, EstimateError> {
    point.validate()?;
    let layout = logical_layout(n, n_e, point);
    let tofs = cost.total_tofs;
    let add_depth = 2.0 * layout.register.div_ceil(layout.pieces) as f64;
    let layers = cost.adt_factor + cost.reps * (cost.lookup_depth + cost.unlookup_depth + add_depth);

    let t_layer = profile.reaction_time_us;
    let period = profile.factory_rounds_per_distance * point.l2 as f64 * profile.cycle_us();
    let factories = ((layout.pieces as f64 * period / t_layer).ceil() as u64).max(1);
    let depth_us = layers * t_layer;
    let factory_us = tofs * period / factories as f64;
    let (binding, run_us) = if depth_us >= factory_us {
        (Binding::Depth, depth_us)
    } else {
        (Binding::Factory, factory_us)
    };
    let hours = run_us / 3.6e9;

    let patches = layout.logical_qubits as f64 * profile.routing_overhead;
    let data_qubits = patches * patch_qubits(point.d2);
    let mqb = (data_qubits + factories as f64 * profile.factory_qubits(point.l1, point.l2)) / 1e6;

    let rounds = run_us / profile.cycle_us();
    let deviation = cost.reps * (-(layout.pad as f64)).exp2();
    let errors = ErrorBudget::new(
        patches * rounds * profile.logical_error(point.d2),
        tofs * profile.ccz_error(point.l1, point.l2),
        deviation,
        deviation * (layout.pieces - 1) as f64,
    );
    if errors.total >= 1.0 {
        return Err(EstimateError::BudgetOverflow(errors.total));
    }
    let d = derive(mqb, hours, errors.total, q);
    Ok(EstimateRow {
        n,
        n_e,
        p_phys: profile.p_phys,
        variant: cost.variant,
        n_e_init: cost.params.n_e_init,
        point: *point,
        retry_risk: errors.total,
        vol_per_run: d.vol_per_run,
        expected_vol: d.expected_vol,
        mqb,
        hours,
        expected_hours: d.expected_hours,
        b_tofs: tofs / 1e9,
        q,
        skewed_volume: d.skewed_volume,
        factories,
        logical_qubits: layout.logical_qubits,
        binding,
        errors,
    })
}

/// Initial-lookup width used for `variant` at a window pair.
pub fn initial_bits_for(variant: Variant, n: u64, n_e: u64, g_exp: u32, g_mul: u32) -> u32 {
    if variant.uses_initial_lookup() {
        (crossover_initial_lookup(n, g_exp, g_mul) as u64).min(n_e) as u32
    } else {
        0
    }
}

/// Estimate for `point` with the variant's own initial-lookup choice.
pub fn estimate_point(
    n: u64,
    n_e: u64,
    profile: &HardwareProfile,
    variant: Variant,
    point: &LayoutPoint,
    q: f64,
) -> Result<EstimateRow, EstimateError> {
    let init = initial_bits_for(variant, n, n_e, point.g_exp, point.g_mul);
    let c = point_cost(n, n_e, point, variant, init)?;
    estimate(n, n_e, profile, point, &c, q)
}

fn by_volume(a: &EstimateRow, b: &EstimateRow) -> Ordering {
    a.skewed_volume
        .total_cmp(&b.skewed_volume)
        .then_with(|| a.point.key().cmp(&b.point.key()))
}

fn by_hours(a: &EstimateRow, b: &EstimateRow) -> Ordering {
    a.expected_hours
        .total_cmp(&b.expected_hours)
        .then_with(|| a.mqb.total_cmp(&b.mqb))
        .then_with(|| a.point.key().cmp(&b.point.key()))
}

/// Rows not dominated in both Mqb and expected hours, by increasing Mqb.
pub fn pareto_frontier(rows: &[EstimateRow]) -> Vec<EstimateRow> {
    let mut sorted: Vec<EstimateRow> = rows.to_vec();
    sorted.sort_by(|a, b| a.mqb.total_cmp(&b.mqb).then_with(|| by_hours(a, b)));
    let mut out: Vec<EstimateRow> = Vec::new();
    for r in sorted {
        if out.last().is_none_or(|last| r.expected_hours < last.expected_hours) {
            out.push(r);
        }
    }
    out
}

/// Fastest expected runtime among rows fitting in `budget_mqb`.
pub fn best_within_budget(rows: &[EstimateRow], budget_mqb: f64) -> Option<EstimateRow> {
    rows.iter()
        .filter(|r| r.mqb <= budget_mqb)
        .min_by(|a, b| by_hours(a, b))
        .copied()
}

#[derive(Debug, Clone, Serialize)]
pub struct BudgetRow {
    pub budget_mqb: f64,
    pub best: Option<EstimateRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridResult {
    /// Every feasible point, by increasing skewed volume.
    pub rows: Vec<EstimateRow>,
    pub minimizer: Option<EstimateRow>,
    pub frontier: Vec<EstimateRow>,
    pub budgets: Vec<BudgetRow>,
}

/// All layout points of the profile's search space for modulus size `n`.
pub fn search_points(profile: &HardwareProfile, n: u64) -> Vec<LayoutPoint> {
    let s = &profile.search;
    let mut out = Vec::new();
    for l1 in (s.l1_min..=s.l1_max).step_by(2) {
        for l2 in ((l1 + 2)..=s.l2_max).step_by(2) {
            for d_off in s.d_off_min..=s.d_off_max {
                for g_mul in s.g_min..=s.g_max {
                    for g_exp in s.g_min..=s.g_max {
                        for &g_sep in &s.g_seps {
                            if g_sep <= n {
                                out.push(LayoutPoint::new(l1, l2, d_off, g_mul, g_exp, g_sep));
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Evaluates every point; points over the error budget are dropped.
pub fn grid_search(
    n: u64,
    n_e: u64,
    profile: &HardwareProfile,
    variant: Variant,
    q: f64,
    budgets: &[f64],
) -> Result<GridResult, EstimateError> {
    profile.validate()?;
    evaluate_points(n, n_e, profile, variant, q, &search_points(profile, n), budgets)
}

/// Same as [`grid_search`] over an explicit point list.
pub fn evaluate_points(
    n: u64,
    n_e: u64,
    profile: &HardwareProfile,
    variant: Variant,
    q: f64,
    points: &[LayoutPoint],
    budgets: &[f64],
) -> Result<GridResult, EstimateError> {
    let results: Vec<Result<EstimateRow, EstimateError>> = points
        .par_iter()
        .map(|p| estimate_point(n, n_e, profile, variant, p, q))
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(EstimateError::BudgetOverflow(_)) => {}
            Err(e) => return Err(e),
        }
    }
    rows.sort_by(by_volume);
    let frontier = pareto_frontier(&rows);
    let budgets = budgets
        .iter()
        .map(|&b| BudgetRow {
            budget_mqb: b,
            best: best_within_budget(&rows, b),
        })
        .collect();
    Ok(GridResult {
        minimizer: rows.first().copied(),
        frontier,
        budgets,
        rows,
    })
}

/// Output format of the estimate tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format `{other}`")),
        }
    }
}

/// Column set of the reference estimate tables.
pub const CSV_HEADER: &str = "n,n_e,gate err,L1,L2,d_off,g_mul,g_exp,g_sep,%,v.p.r,E[vol],Mqb,hrs,E[hrs],B Tofs";

pub fn csv_line(r: &EstimateRow) -> String {
    format!(
        "{},{},{:e},{},{},{},{},{},{},{:.1},{:.3},{:.3},{:.3},{:.3},{:.3},{:.3}",
        r.n,
        r.n_e,
        r.p_phys,
        r.point.l1,
        r.point.l2,
        r.point.d_off,
        r.point.g_mul,
        r.point.g_exp,
        r.point.g_sep,
        100.0 * r.retry_risk,
        r.vol_per_run,
        r.expected_vol,
        r.mqb,
        r.hours,
        r.expected_hours,
        r.b_tofs
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_overrides_and_rejects_unknown_keys() {
        let mut p = HardwareProfile::default();
        p.apply_config("p_phys = 1e-4 # comment\n\ng_seps = 512, 1024\n")
            .unwrap();
        assert_eq!(p.p_phys, 1e-4);
        assert_eq!(p.search.g_seps, vec![512, 1024]);
        let err = p.apply_config("bogus = 1").unwrap_err();
        assert!(matches!(err, EstimateError::Config { line: 1, .. }));
        assert!(p.apply_config("p_phys = 2").is_err());
    }

    #[test]
    fn single_piece_has_no_runway_term() {
        let pt = LayoutPoint::new(15, 27, 4, 5, 5, 2048);
        let l = logical_layout(2048, 3029, &pt);
        assert_eq!(l.pieces, 1);
        let row = estimate_point(2048, 3029, &HardwareProfile::default(), Variant::Original, &pt, 1.2).unwrap();
        assert_eq!(row.errors.runway, 0.0);
    }

    #[test]
    fn rejects_inverted_distances() {
        let pt = LayoutPoint::new(27, 15, 4, 5, 5, 1024);
        assert!(estimate_point(2048, 3029, &HardwareProfile::default(), Variant::Original, &pt, 1.2).is_err());
    }
}
