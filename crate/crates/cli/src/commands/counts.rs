use super::RunConfig;
use crate::error::CliError;
use crate::input::{self, BlowUp, Source};
use crate::output::{Run, Table};
use crate::{BoundsArgs, Cli, IndicesArgs, VerifyArgs};
use morsecount_core::index_calculus::{CaseClass, ClosedFormFamily, Parity};
use morsecount_core::{
    admissible_epsilon, classify_case, euler_poincare_check, index_k, mu_closed_form, mu_direct, mu_recurrence,
    solution_bounds, BigInt, CaseLabel, IndexTable, ParityConfig, Sign, SolutionBoundReport,
};
use rayon::prelude::*;
use serde::Serialize;

/// Largest `m` accepted by the exhaustive sweep (`2^(m-1)` configurations).
const MAX_SWEEP_POINTS: usize = 20;

fn count(v: &BigInt) -> serde_json::Value {
    match v.to_string().parse::<i64>() {
        Ok(x) => x.into(),
        Err(_) => v.to_string().into(),
    }
}

fn bits_string(cfg: &ParityConfig) -> String {
    cfg.bits().iter().map(|b| b.to_string()).collect::<Vec<_>>().join(",")
}

#[derive(Serialize)]
struct ResolvedParities {
    n: u32,
    parities: Vec<u8>,
    #[serde(rename = "N")]
    max_level: usize,
}

impl From<&ParityConfig> for ResolvedParities {
    fn from(c: &ParityConfig) -> Self {
        Self { n: c.n(), parities: c.bits(), max_level: c.max_level() }
    }
}

#[derive(Serialize)]
struct Routes {
    direct_equals_recurrence: bool,
    closed_form_family: Option<ClosedFormFamily>,
    closed_form_agrees: Option<bool>,
}

#[derive(Serialize)]
struct MorseEqualities {
    direct: bool,
    recurrence: bool,
}

#[derive(Serialize)]
struct IndicesResult {
    m: usize,
    index_k: i64,
    case: CaseClass,
    warnings: Vec<String>,
    mu: Vec<serde_json::Value>,
    routes: Routes,
    morse_equalities: MorseEqualities,
    table: IndexTable,
    #[serde(skip_serializing_if = "Option::is_none")]
    blow_up: Option<BlowUp>,
}

fn index_table_csv(t: &IndexTable) -> Table {
    let m = t.m();
    let mut header = vec!["p".to_string(), "mu".to_string()];
    header.extend((1..=m + 1).map(|k| format!("mu_geq_{k}")));
    header.extend((1..=m).map(|k| format!("mu_geq_at_{k}")));
    let mut table = Table::new("indices.csv", header);
    for p in 1..=t.max_level() {
        let mut row = vec![p.to_string(), t.mu(p).to_string()];
        row.extend((1..=m + 1).map(|k| t.geq(k, p).to_string()));
        row.extend((1..=m).map(|k| t.geq_at(k, p).to_string()));
        table.push(row);
    }
    table
}

fn warn_outside(cfg: &ParityConfig) {
    for w in cfg.warnings() {
        eprintln!("warning: {w}");
    }
}

pub fn indices(cli: &Cli, args: &IndicesArgs) -> Result<(), CliError> {
    let run = Run::start("indices", cli.out.clone());
    let (cfg, source, blow_up) = input::parity_config(cli, &args.parity)?;
    warn_outside(&cfg);
    let direct = mu_direct(&cfg);
    let recurrence = mu_recurrence(&cfg);
    let closed = mu_closed_form(&cfg);
    let routes = Routes {
        direct_equals_recurrence: direct == recurrence,
        closed_form_family: closed.as_ref().map(|c| c.family),
        closed_form_agrees: closed.as_ref().map(|c| c.mu == recurrence.mu_values()),
    };
    let morse = MorseEqualities { direct: euler_poincare_check(&direct), recurrence: euler_poincare_check(&recurrence) };
    let consistent = routes.direct_equals_recurrence
        && routes.closed_form_agrees != Some(false)
        && morse.direct
        && morse.recurrence;
    let result = IndicesResult {
        m: cfg.m(),
        index_k: index_k(&cfg),
        case: classify_case(&cfg),
        warnings: cfg.warnings().iter().map(|w| w.to_string()).collect(),
        mu: recurrence.mu_values().iter().map(count).collect(),
        routes,
        morse_equalities: morse,
        table: recurrence,
        blow_up,
    };
    let tables = [index_table_csv(&result.table)];
    run.finish(&RunConfig::new(cli, source, ResolvedParities::from(&cfg)), &result, &tables)?;
    if consistent {
        Ok(())
    } else {
        Err(CliError::invariant("counting routes or Morse equalities disagree"))
    }
}

#[derive(Serialize)]
struct Threshold {
    eta: f64,
    eta_limit: f64,
    epsilon_max: f64,
}

#[derive(Serialize)]
struct BoundsResult {
    m: usize,
    theorem_hypotheses_hold: bool,
    #[serde(flatten)]
    report: SolutionBoundReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold: Option<Threshold>,
    #[serde(skip_serializing_if = "Option::is_none")]
    blow_up: Option<BlowUp>,
}

pub fn bounds(cli: &Cli, args: &BoundsArgs) -> Result<(), CliError> {
    let run = Run::start("bounds", cli.out.clone());
    let (cfg, source, blow_up) = input::parity_config(cli, &args.parity)?;
    let threshold = match args.eta {
        Some(eta) => {
            let epsilon_max = admissible_epsilon(cfg.max_level(), eta, cfg.n() as usize)?;
            Some(Threshold { eta, eta_limit: 1.0 / (2 * cfg.max_level() + 1) as f64, epsilon_max })
        }
        None => None,
    };
    let report = solution_bounds(&cfg)?;
    let hypotheses = report.warnings.is_empty();
    if !hypotheses {
        eprintln!("== outside the hypotheses of the multiplicity theorems; bounds are informational ==");
        warn_outside(&cfg);
    }
    let mut table = Table::new(
        "bounds.csv",
        ["level", "energy", "energy_value", "lower_bound", "mu"].map(String::from).to_vec(),
    );
    for r in &report.rows {
        table.push(vec![
            r.level.to_string(),
            r.energy.label(),
            format!("{:e}", r.energy.value()),
            r.lower_bound.to_string(),
            r.mu.to_string(),
        ]);
    }
    let result = BoundsResult { m: cfg.m(), theorem_hypotheses_hold: hypotheses, report, threshold, blow_up };
    run.finish(&RunConfig::new(cli, source, ResolvedParities::from(&cfg)), &result, &[table])
}

#[derive(Serialize)]
struct Check {
    parities: String,
    index_k: i64,
    case: CaseLabel,
    routes_agree: bool,
    closed_form: Option<ClosedFormFamily>,
    closed_form_agrees: Option<bool>,
    morse_direct: bool,
    morse_recurrence: bool,
    /// Every `mu_p` nonzero; only checked when `Index_K != 1`.
    nonvanishing: Option<bool>,
    bounds_consistent: bool,
}

impl Check {
    fn ok(&self) -> bool {
        self.routes_agree
            && self.closed_form_agrees != Some(false)
            && self.morse_direct
            && self.morse_recurrence
            && self.nonvanishing != Some(false)
            && self.bounds_consistent
    }
}

fn check(cfg: &ParityConfig) -> Check {
    let direct = mu_direct(cfg);
    let recurrence = mu_recurrence(cfg);
    let closed = mu_closed_form(cfg);
    let index = index_k(cfg);
    Check {
        parities: bits_string(cfg),
        index_k: index,
        case: classify_case(cfg).label,
        routes_agree: direct == recurrence,
        closed_form: closed.as_ref().map(|c| c.family),
        closed_form_agrees: closed.as_ref().map(|c| c.mu == recurrence.mu_values()),
        morse_direct: euler_poincare_check(&direct),
        morse_recurrence: euler_poincare_check(&recurrence),
        nonvanishing: (index != 1).then(|| recurrence.mu_values().iter().all(|v| v.sign() != Sign::NoSign)),
        bounds_consistent: solution_bounds(cfg).is_ok(),
    }
}

#[derive(Serialize, Default)]
struct Summary {
    configurations: usize,
    passed: usize,
    failed: usize,
    routes_agree: usize,
    closed_form_checked: usize,
    closed_form_agree: usize,
    morse_equalities_hold: usize,
    index_not_one: usize,
    nonvanishing: usize,
    bounds_consistent: usize,
    failures: Vec<String>,
}

fn summarize(checks: &[Check]) -> Summary {
    let mut s = Summary { configurations: checks.len(), ..Default::default() };
    for c in checks {
        s.routes_agree += c.routes_agree as usize;
        s.closed_form_checked += c.closed_form_agrees.is_some() as usize;
        s.closed_form_agree += (c.closed_form_agrees == Some(true)) as usize;
        s.morse_equalities_hold += (c.morse_direct && c.morse_recurrence) as usize;
        s.index_not_one += c.nonvanishing.is_some() as usize;
        s.nonvanishing += (c.nonvanishing == Some(true)) as usize;
        s.bounds_consistent += c.bounds_consistent as usize;
        if c.ok() {
            s.passed += 1;
        } else {
            s.failed += 1;
            s.failures.push(c.parities.clone());
        }
    }
    s
}

#[derive(Serialize)]
struct SweepInput {
    n: u32,
    max_m: usize,
    #[serde(rename = "N")]
    max_level: usize,
}

fn sweep(n: u32, max_m: usize, max_level: usize) -> Result<Vec<ParityConfig>, CliError> {
    let mut configs = Vec::new();
    for m in 1..=max_m {
        for mask in 0u64..(1 << (m - 1)) {
            let mut parities = vec![Parity::Even];
            parities.extend((0..m - 1).map(|j| if (mask >> j) & 1 == 1 { Parity::Odd } else { Parity::Even }));
            configs.push(ParityConfig::new(n, parities, max_level)?);
        }
    }
    Ok(configs)
}

pub fn verify(cli: &Cli, args: &VerifyArgs) -> Result<(), CliError> {
    let run = Run::start("verify", cli.out.clone());
    let (configs, source, resolved) = if args.exhaustive {
        if input::load(cli, args.parity.parities.as_deref())?.is_some() {
            return Err(CliError::parse("--exhaustive does not take an input configuration"));
        }
        if args.max_m == 0 || args.max_m > MAX_SWEEP_POINTS {
            return Err(CliError::parse(format!("--max-m must lie in 1..={MAX_SWEEP_POINTS}")));
        }
        let n = args.parity.dim.unwrap_or(input::DEFAULT_DIMENSION);
        let configs = sweep(n, args.max_m, args.sweep_level)?;
        let resolved = serde_json::to_value(SweepInput { n, max_m: args.max_m, max_level: args.sweep_level })
            .expect("serializable");
        (configs, Source { kind: "sweep", value: None }, resolved)
    } else {
        let (cfg, source, _) = input::parity_config(cli, &args.parity)?;
        let resolved = serde_json::to_value(ResolvedParities::from(&cfg)).expect("serializable");
        (vec![cfg], source, resolved)
    };
    let checks: Vec<Check> = configs.par_iter().map(check).collect();
    let summary = summarize(&checks);
    let mut table = Table::new(
        "verify.csv",
        [
            "parities",
            "index_k",
            "case",
            "routes_agree",
            "closed_form",
            "closed_form_agrees",
            "morse_equalities",
            "nonvanishing",
            "bounds_consistent",
        ]
        .map(String::from)
        .to_vec(),
    );
    let opt = |v: Option<bool>| v.map_or(String::new(), |b| b.to_string());
    for c in &checks {
        table.push(vec![
            c.parities.clone(),
            c.index_k.to_string(),
            format!("{:?}", c.case),
            c.routes_agree.to_string(),
            c.closed_form.map_or(String::new(), |f| format!("{f:?}")),
            opt(c.closed_form_agrees),
            (c.morse_direct && c.morse_recurrence).to_string(),
            opt(c.nonvanishing),
            c.bounds_consistent.to_string(),
        ]);
    }
    eprintln!("verified {} configurations: {} passed, {} failed", summary.configurations, summary.passed, summary.failed);
    let failed = summary.failed;
    let result = serde_json::json!({ "summary": summary, "checks": if args.exhaustive { None } else { Some(&checks) } });
    run.finish(&RunConfig::new(cli, source, resolved), &result, &[table])?;
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::invariant(format!("{failed} configurations failed verification")))
    }
}
