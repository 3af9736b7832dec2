mod manifest;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use serde::Serialize;
use thiserror::Error;

use modexp_core::builders::{build_windowed_modexp, verify_modexp, AdderKind, ModexpConfig, ModexpFlags};
use modexp_core::circuit_ir::{OutcomePolicy, Tally};
use modexp_core::cost_model::{
    cost, grid_best_windows, metered_toffolis, CircuitShape, CostBreakdown, CostOptions, CostParams, Variant,
};
use modexp_core::estimator::{
    csv_line, estimate_point, evaluate_points, grid_search, EstimateRow, GridResult, HardwareProfile, LayoutPoint,
    CSV_HEADER, REFERENCE_BUDGETS_MQB,
};
use modexp_core::numerics::{
    build_direct_exp_table, build_mul_table, build_phase_fixup_table, build_pruned_table, mod_pow, ProblemInstance,
    WindowParams,
};

use manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(
    name = "modexp",
    version,
    about = "Windowed modular exponentiation circuits and cost estimates"
)]
struct Cli {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Line-oriented `key = value` hardware profile.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; results go to stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dump lookup tables in the text format.
    Tables(TablesArgs),
    /// Build and simulate a modexp circuit, checking every branch.
    Simulate(SimulateArgs),
    /// Analytic Toffoli counts and depths.
    Cost(CostArgs),
    /// Physical resource estimates and grid search.
    Estimate(EstimateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum TableChoice {
    Multiply,
    Pruned,
    PhaseFixup,
    DirectExp,
    All,
}

#[derive(Debug, Args, Serialize)]
struct TablesArgs {
    #[arg(long)]
    modulus: String,
    #[arg(long)]
    base: String,
    #[arg(long)]
    ne: u32,
    #[arg(long, default_value_t = 2)]
    we: u32,
    #[arg(long, default_value_t = 2)]
    wm: u32,
    /// Exponent window index.
    #[arg(long, default_value_t = 0)]
    i: u32,
    /// Multiplicand window index.
    #[arg(long, default_value_t = 0)]
    j: u32,
    #[arg(long, value_enum, default_value_t = TableChoice::All)]
    kind: TableChoice,
    /// Measurement outcome (hex) used for the phase fixup table.
    #[arg(long, default_value = "1")]
    outcome: String,
    #[arg(long, default_value_t = 2)]
    initial_bits: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum AdderChoice {
    Exact,
    Coset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum PolicyChoice {
    Random,
    Zero,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    #[arg(long, default_value_t = 15)]
    modulus: u64,
    #[arg(long, default_value_t = 7)]
    base: u64,
    #[arg(long, default_value_t = 4)]
    ne: u32,
    #[arg(long, default_value_t = 2)]
    we: u32,
    #[arg(long, default_value_t = 2)]
    wm: u32,
    /// Optimization mask 0..15 (bit 0 deferred unlookup, 1 selective
    /// lookup, 2 initial lookup, 3 low-depth unary) or `all`.
    #[arg(long, default_value = "all")]
    variant: String,
    #[arg(long, default_value_t = 2)]
    initial_bits: u32,
    #[arg(long, value_enum, default_value_t = AdderChoice::Exact)]
    adder: AdderChoice,
    #[arg(long, default_value_t = 0)]
    coset_pad: u32,
    #[arg(long, value_enum, default_value_t = PolicyChoice::Random)]
    policy: PolicyChoice,
    /// Also write the gate dump of every simulated circuit.
    #[arg(long)]
    dump: bool,
}

#[derive(Debug, Args, Serialize)]
struct CostArgs {
    #[arg(long, default_value_t = 2048)]
    n: u64,
    #[arg(long, default_value_t = 3029)]
    ne: u64,
    #[arg(long, default_value_t = 5)]
    we: u32,
    #[arg(long, default_value_t = 5)]
    wm: u32,
    /// Initial-lookup bits; defaults to the crossover choice.
    #[arg(long)]
    nep: Option<u32>,
    /// Variant name or `all`.
    #[arg(long, default_value = "all")]
    variant: String,
    #[arg(long, default_value_t = 3.0)]
    unlookup_const: f64,
    #[arg(long, default_value_t = 0)]
    coset_pad: u64,
    #[arg(long)]
    ceil_reps: bool,
    #[arg(long)]
    corrected_depth: bool,
    /// Search the window sizes instead of using --we/--wm/--nep.
    #[arg(long)]
    best: bool,
    /// Append the exact count of the synthesized circuit with this mask.
    #[arg(long)]
    meter: Option<u8>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Args, Serialize)]
struct EstimateArgs {
    #[arg(long, default_value_t = 2048)]
    n: u64,
    #[arg(long, default_value_t = 3029)]
    ne: u64,
    /// Physical gate error rate; overrides the config file.
    #[arg(long)]
    perr: Option<f64>,
    #[arg(long, default_value = "original")]
    variant: String,
    #[arg(long, default_value_t = 1.2)]
    q: f64,
    /// Megaqubit budgets, comma separated; defaults to the reference list.
    #[arg(long, value_delimiter = ',')]
    budget_mqb: Vec<f64>,
    /// Evaluate a single point `L1,L2,d_off,g_mul,g_exp,g_sep`.
    #[arg(long)]
    point: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    BadInput(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Verification(_) => 1,
            CliError::BadInput(_) | CliError::Io(_) => 2,
        }
    }
}

fn bad(e: impl ToString) -> CliError {
    CliError::BadInput(e.to_string())
}

struct Ctx {
    seed: u64,
    config: Option<Vec<u8>>,
    out: Option<PathBuf>,
}

impl Ctx {
    fn manifest(&self, sub: &str, flags: &impl Serialize) -> RunManifest {
        RunManifest::new(sub, flags, self.seed, self.config.as_deref())
    }

    fn write(&self, name: &str, content: &str) -> Result<(), CliError> {
        match &self.out {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                fs::write(dir.join(name), content)?;
            }
            None => {
                // Text outputs get a separator so several files on stdout stay apart.
                let sep = if name.ends_with(".json") {
                    String::new()
                } else {
                    format!("# file {name}\n")
                };
                let mut out = std::io::stdout().lock();
                match out
                    .write_all(sep.as_bytes())
                    .and_then(|_| out.write_all(content.as_bytes()))
                    .and_then(|_| out.flush())
                {
                    Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                    r => r?,
                }
            }
        }
        Ok(())
    }

    fn profile(&self) -> Result<HardwareProfile, CliError> {
        let mut p = HardwareProfile::default();
        if let Some(bytes) = &self.config {
            let text = std::str::from_utf8(bytes).map_err(bad)?;
            p.apply_config(text).map_err(bad)?;
        }
        Ok(p)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(p) => Some(fs::read(p).map_err(|e| bad(format!("{}: {e}", p.display())))?),
        None => None,
    };
    let ctx = Ctx {
        seed: cli.seed,
        config,
        out: cli.out,
    };
    match &cli.command {
        Command::Tables(a) => cmd_tables(&ctx, a),
        Command::Simulate(a) => cmd_simulate(&ctx, a),
        Command::Cost(a) => cmd_cost(&ctx, a),
        Command::Estimate(a) => cmd_estimate(&ctx, a),
    }
}

fn parse_biguint(s: &str) -> Result<BigUint, CliError> {
    let s = s.trim();
    let parsed = match s.strip_prefix("0x") {
        Some(hex) => BigUint::parse_bytes(hex.as_bytes(), 16),
        None => BigUint::parse_bytes(s.as_bytes(), 10),
    };
    parsed.ok_or_else(|| bad(format!("bad integer `{s}`")))
}

fn cmd_tables(ctx: &Ctx, a: &TablesArgs) -> Result<(), CliError> {
    let inst = ProblemInstance::new(parse_biguint(&a.modulus)?, parse_biguint(&a.base)?, a.ne).map_err(bad)?;
    let wp = WindowParams::new(a.we, a.wm).map_err(bad)?;
    let outcome = BigUint::parse_bytes(a.outcome.trim_start_matches("0x").as_bytes(), 16)
        .ok_or_else(|| bad(format!("bad outcome `{}`", a.outcome)))?;
    let header = ctx.manifest("tables", a).comment();
    let wanted = |k: TableChoice| a.kind == k || a.kind == TableChoice::All;
    let base = inst.base().clone();
    let tag = format!("i{}_j{}", a.i, a.j);

    let mut outputs = Vec::new();
    if wanted(TableChoice::Multiply) || wanted(TableChoice::PhaseFixup) {
        let t = build_mul_table(&inst, wp, a.i, a.j, &base).map_err(bad)?;
        if wanted(TableChoice::PhaseFixup) {
            let f = build_phase_fixup_table(&t, &outcome, t.addr_bits / 2).map_err(bad)?;
            outputs.push((format!("phase_fixup_{tag}.txt"), f.to_text()));
        }
        if wanted(TableChoice::Multiply) {
            outputs.insert(0, (format!("multiply_{tag}.txt"), t.to_text()));
        }
    }
    if wanted(TableChoice::Pruned) {
        let t = build_pruned_table(&inst, wp, a.i, a.j, &base).map_err(bad)?;
        outputs.push((format!("pruned_{tag}.txt"), t.to_text()));
    }
    if wanted(TableChoice::DirectExp) {
        let t = build_direct_exp_table(&inst, a.initial_bits.min(inst.n_e())).map_err(bad)?;
        outputs.push(("direct_exp.txt".to_string(), t.to_text()));
    }
    for (name, text) in outputs {
        ctx.write(&name, &format!("{header}{text}"))?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct SimRun {
    mask: u8,
    deferred_unlookup: bool,
    selective_lookup: bool,
    initial_lookup_bits: u32,
    lowdepth_unary: bool,
    /// `None` under the coset adder, which is not checked.
    verified: Option<bool>,
    error: Option<String>,
    tally: Tally,
    metered_toffolis: u64,
    tally_matches_meter: bool,
}

#[derive(Debug, Serialize)]
struct SimReport {
    manifest: RunManifest,
    modulus: u64,
    base: u64,
    n_e: u32,
    /// `(x, b^x mod N)` for every exponent.
    expected: Vec<(u64, u64)>,
    runs: Vec<SimRun>,
    identical_outputs: bool,
    ok: bool,
}

fn parse_masks(s: &str) -> Result<Vec<u8>, CliError> {
    if s == "all" {
        return Ok((0..16).collect());
    }
    s.split(',')
        .map(|m| match m.trim().parse::<u8>() {
            Ok(v) if v < 16 => Ok(v),
            _ => Err(bad(format!("bad variant mask `{m}`"))),
        })
        .collect()
}

fn cmd_simulate(ctx: &Ctx, a: &SimulateArgs) -> Result<(), CliError> {
    let inst = ProblemInstance::small(a.modulus, a.base, a.ne).map_err(bad)?;
    let wp = WindowParams::new(a.we, a.wm).map_err(bad)?;
    let masks = parse_masks(&a.variant)?;
    let policy = match a.policy {
        PolicyChoice::Random => OutcomePolicy::Random,
        PolicyChoice::Zero => OutcomePolicy::Zero,
    };
    let adder = match a.adder {
        AdderChoice::Exact => AdderKind::ExactModular,
        AdderChoice::Coset => AdderKind::Coset,
    };
    let manifest = ctx.manifest("simulate", a);
    let header = manifest.comment();

    let mut runs = Vec::new();
    let mut outputs = Vec::new();
    for &mask in &masks {
        let flags = ModexpFlags::from_mask(mask, a.initial_bits.min(a.ne));
        let cfg = ModexpConfig::new(inst.clone(), wp)
            .with_flags(flags)
            .with_adder(adder, a.coset_pad);
        let mc = build_windowed_modexp(&cfg).map_err(bad)?;
        if a.dump {
            ctx.write(
                &format!("circuit_mask{mask}.txt"),
                &format!("{header}{}", mc.circuit.dump()),
            )?;
        }
        let tally = mc.circuit.tally();
        let metered = metered_toffolis(&CircuitShape {
            n_reg: cfg.register_width(),
            n_e: a.ne,
            w_e: a.we,
            w_m: a.wm,
            initial_bits: flags.initial_lookup_bits,
            deferred: flags.deferred_unlookup,
            selective: flags.selective_lookup,
        });
        // The coset adder only books costs; its outputs are unreduced
        // representatives, so there is nothing exact to verify.
        let result = match adder {
            AdderKind::ExactModular => Some(verify_modexp(&mc, &inst, ctx.seed, policy)),
            AdderKind::Coset => None,
        };
        let (verified, error) = match &result {
            None => (None, None),
            Some(Ok(state)) => {
                let mut out: Vec<(u128, u128)> = state
                    .branches()
                    .iter()
                    .map(|&(k, _)| {
                        (
                            modexp_core::circuit_ir::read_bits(k, &mc.exponent.qubits),
                            modexp_core::circuit_ir::read_bits(k, &mc.result.qubits),
                        )
                    })
                    .collect();
                out.sort_unstable();
                outputs.push(out);
                (Some(true), None)
            }
            Some(Err(e)) => (Some(false), Some(e.to_string())),
        };
        runs.push(SimRun {
            mask,
            deferred_unlookup: flags.deferred_unlookup,
            selective_lookup: flags.selective_lookup,
            initial_lookup_bits: flags.initial_lookup_bits,
            lowdepth_unary: flags.lowdepth_unary,
            verified,
            error,
            tally_matches_meter: tally.toffoli_count == metered,
            tally,
            metered_toffolis: metered,
        });
    }

    let b = BigUint::from(a.base);
    let m = BigUint::from(a.modulus);
    let expected: Vec<(u64, u64)> = (0..1u64 << a.ne)
        .map(|x| {
            let y = mod_pow(&b, &BigUint::from(x), &m);
            (x, y.try_into().expect("residue fits in u64"))
        })
        .collect();
    let identical_outputs = outputs.windows(2).all(|w| w[0] == w[1]);
    let ok = runs.iter().all(|r| r.verified != Some(false) && r.tally_matches_meter) && identical_outputs;
    let report = SimReport {
        manifest,
        modulus: a.modulus,
        base: a.base,
        n_e: a.ne,
        expected,
        runs,
        identical_outputs,
        ok,
    };
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    ctx.write("simulate.json", &text)?;
    if !ok {
        let failed: Vec<String> = report
            .runs
            .iter()
            .filter(|r| r.verified == Some(false) || !r.tally_matches_meter)
            .map(|r| format!("mask {}", r.mask))
            .collect();
        return Err(CliError::Verification(if failed.is_empty() {
            "outputs differ between variants".into()
        } else {
            failed.join(", ")
        }));
    }
    Ok(())
}

const COST_HEADER: &str = "variant,n,n_e,w_e,w_m,n_e_init,reps,adt,lookup_tofs,add_tofs,unlookup_tofs,lookup_depth,add_depth,unlookup_depth,total_tofs,total_depth,logical_qubits";

fn cost_csv(c: &CostBreakdown) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        c.variant,
        c.params.n,
        c.params.n_e,
        c.params.w_e,
        c.params.w_m,
        c.params.n_e_init,
        c.reps,
        c.adt_factor,
        c.lookup_tofs,
        c.add_tofs,
        c.unlookup_tofs,
        c.lookup_depth,
        c.add_depth,
        c.unlookup_depth,
        c.total_tofs,
        c.total_depth,
        c.logical_qubits
    )
}

#[derive(Debug, Serialize)]
struct Metered {
    mask: u8,
    n_reg: u64,
    toffolis: u64,
}

#[derive(Debug, Serialize)]
struct CostReport {
    manifest: RunManifest,
    rows: Vec<CostBreakdown>,
    metered: Option<Metered>,
}

fn cmd_cost(ctx: &Ctx, a: &CostArgs) -> Result<(), CliError> {
    let variants: Vec<Variant> = if a.variant == "all" {
        Variant::ALL.to_vec()
    } else {
        a.variant
            .split(',')
            .map(|v| v.trim().parse::<Variant>().map_err(bad))
            .collect::<Result<_, _>>()?
    };
    let opts = CostOptions {
        unlookup_const: a.unlookup_const,
        coset_pad: a.coset_pad,
        ceil_reps: a.ceil_reps,
        corrected_combined_depth: a.corrected_depth,
    };
    let nep = a.nep.unwrap_or_else(|| {
        (modexp_core::cost_model::crossover_initial_lookup(a.n, a.we, a.wm) as u64).min(a.ne) as u32
    });
    let rows = variants
        .iter()
        .map(|&v| {
            if a.best {
                grid_best_windows(a.n, a.ne, v, &opts)
            } else {
                cost(v, CostParams::new(a.n, a.ne, a.we, a.wm, nep), &opts)
            }
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(bad)?;
    let metered = match a.meter {
        None => None,
        Some(mask) if mask < 16 => {
            let flags = ModexpFlags::from_mask(mask, nep);
            let n_reg = a.n + a.coset_pad;
            let shape = CircuitShape {
                n_reg: u32::try_from(n_reg).map_err(bad)?,
                n_e: u32::try_from(a.ne).map_err(bad)?,
                w_e: a.we,
                w_m: a.wm,
                initial_bits: flags.initial_lookup_bits,
                deferred: flags.deferred_unlookup,
                selective: flags.selective_lookup,
            };
            if shape.initial_bits > shape.n_e || a.we + a.wm > 40 || nep > 40 {
                return Err(bad("meter shape out of range"));
            }
            Some(Metered {
                mask,
                n_reg,
                toffolis: metered_toffolis(&shape),
            })
        }
        Some(mask) => return Err(bad(format!("bad meter mask {mask}"))),
    };
    let manifest = ctx.manifest("cost", a);
    let text = match a.format {
        Format::Csv => {
            let mut s = manifest.comment();
            s.push_str(COST_HEADER);
            s.push('\n');
            for r in &rows {
                s.push_str(&cost_csv(r));
                s.push('\n');
            }
            if let Some(m) = &metered {
                s.push_str(&format!(
                    "# metered mask={} n_reg={} toffolis={}\n",
                    m.mask, m.n_reg, m.toffolis
                ));
            }
            s
        }
        Format::Json => {
            let report = CostReport {
                manifest,
                rows,
                metered,
            };
            let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
            s.push('\n');
            s
        }
    };
    let ext = match a.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    ctx.write(&format!("cost.{ext}"), &text)
}

fn parse_point(s: &str) -> Result<LayoutPoint, CliError> {
    let v: Vec<u64> = s
        .split(',')
        .map(|x| x.trim().parse::<u64>().map_err(|_| bad(format!("bad point `{s}`"))))
        .collect::<Result<_, _>>()?;
    if v.len() != 6 || v[..5].iter().any(|&x| x > u32::MAX as u64) {
        return Err(bad(format!("point needs L1,L2,d_off,g_mul,g_exp,g_sep: `{s}`")));
    }
    Ok(LayoutPoint::new(
        v[0] as u32,
        v[1] as u32,
        v[2] as u32,
        v[3] as u32,
        v[4] as u32,
        v[5],
    ))
}

fn rows_csv(header: &str, rows: &[EstimateRow]) -> String {
    let mut s = header.to_string();
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&csv_line(r));
        s.push('\n');
    }
    s
}

#[derive(Debug, Serialize)]
struct EstimateReport<'a> {
    manifest: &'a RunManifest,
    section: &'a str,
    rows: Vec<EstimateRow>,
}

fn cmd_estimate(ctx: &Ctx, a: &EstimateArgs) -> Result<(), CliError> {
    let mut profile = ctx.profile()?;
    if let Some(p) = a.perr {
        profile.p_phys = p;
    }
    profile.validate().map_err(bad)?;
    let variant: Variant = a.variant.parse().map_err(bad)?;
    if a.n == 0 || a.ne == 0 {
        return Err(bad("n and n_e must be positive"));
    }
    let budgets: Vec<f64> = if a.budget_mqb.is_empty() {
        REFERENCE_BUDGETS_MQB.to_vec()
    } else {
        a.budget_mqb.clone()
    };
    let result: GridResult = match &a.point {
        Some(p) => {
            let pt = parse_point(p)?;
            // Surfaces the budget overflow instead of an empty result.
            estimate_point(a.n, a.ne, &profile, variant, &pt, a.q).map_err(bad)?;
            evaluate_points(a.n, a.ne, &profile, variant, a.q, &[pt], &budgets).map_err(bad)?
        }
        None => grid_search(a.n, a.ne, &profile, variant, a.q, &budgets).map_err(bad)?,
    };

    let minimizer: Vec<EstimateRow> = result.minimizer.into_iter().collect();
    let budget_rows: Vec<EstimateRow> = result.budgets.iter().filter_map(|b| b.best).collect();
    let sections = [
        ("minimizer", minimizer),
        ("frontier", result.frontier),
        ("budgets", budget_rows),
    ];
    if let Some((name, r)) = sections
        .iter()
        .find_map(|(name, rows)| rows.iter().find(|r| !r.audit(1e-9)).map(|r| (name, r)))
    {
        return Err(CliError::Verification(format!(
            "{name} row at {:?} fails the identity audit",
            r.point
        )));
    }

    let manifest = ctx.manifest("estimate", a);
    let header = manifest.comment();
    for (name, rows) in sections {
        let (file, text) = match a.format {
            Format::Csv => (format!("{name}.csv"), rows_csv(&header, &rows)),
            Format::Json => {
                let report = EstimateReport {
                    manifest: &manifest,
                    section: name,
                    rows,
                };
                let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
                s.push('\n');
                (format!("{name}.json"), s)
            }
        };
        ctx.write(&file, &text)?;
    }
    Ok(())
}
