use super::{abs, binomial, index_k, mu_recurrence, ConfigWarning, IndexError, IndexTable, Parity, ParityConfig};
use num_bigint::BigInt;
use num_traits::Zero;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseLabel {
    /// All co-indices even.
    Case1,
    /// All co-indices after the global maximum odd.
    Case2,
    /// `l` (odd, even) pairs followed by an even tail.
    Case3,
    /// `l` (odd, even) pairs followed by an odd tail.
    Case4,
    /// `Index_K = 1`.
    IndexOne,
}

/// Result of matching a parity configuration against the case analysis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CaseClass {
    pub label: CaseLabel,
    /// Number of leading (odd, even) pairs after the maximum; 0 for Cases 1 and 2.
    pub ell: usize,
    /// Original 0-based positions in rearranged order (maximum first, then
    /// the pairs, then the homogeneous tail).
    pub arrangement: Vec<usize>,
}

impl CaseClass {
    pub fn rearranged(&self, cfg: &ParityConfig) -> Vec<Parity> {
        self.arrangement.iter().map(|&i| cfg.parities()[i]).collect()
    }
}

/// Classifies a configuration, performing the rearrangement into
/// (odd, even) pairs followed by a homogeneous tail.
pub fn classify_case(cfg: &ParityConfig) -> CaseClass {
    let mut odd: Vec<usize> = Vec::new();
    let mut even: Vec<usize> = Vec::new();
    for (i, p) in cfg.parities().iter().enumerate().skip(1) {
        if p.is_odd() {
            odd.push(i)
        } else {
            even.push(i)
        }
    }
    let ell = odd.len().min(even.len());
    let mut arrangement = vec![0];
    for j in 0..ell {
        arrangement.push(odd[j]);
        arrangement.push(even[j]);
    }
    arrangement.extend_from_slice(&odd[ell..]);
    arrangement.extend_from_slice(&even[ell..]);

    let label = if index_k(cfg) == 1 {
        CaseLabel::IndexOne
    } else if odd.is_empty() {
        CaseLabel::Case1
    } else if even.is_empty() {
        CaseLabel::Case2
    } else if even.len() > odd.len() {
        CaseLabel::Case3
    } else if odd.len() > even.len() {
        CaseLabel::Case4
    } else {
        unreachable!("equal odd and even tails give Index_K = 1")
    };
    let ell = match label {
        CaseLabel::Case1 | CaseLabel::Case2 => 0,
        _ => ell,
    };
    CaseClass { label, ell, arrangement }
}

/// Energy level `p * S_n / n`, kept symbolic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EnergyLevel {
    pub multiple: usize,
    pub n: u32,
}

impl EnergyLevel {
    pub fn label(&self) -> String {
        format!("{}*S_{}/{}", self.multiple, self.n, self.n)
    }

    pub fn value(&self) -> f64 {
        let n = self.n as usize;
        self.multiple as f64 * crate::bubble::sobolev_constant(n).unwrap_or(f64::NAN) / n as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelBound {
    pub level: usize,
    pub energy: EnergyLevel,
    #[serde(serialize_with = "super::count_serde::one")]
    pub lower_bound: BigInt,
    #[serde(serialize_with = "super::count_serde::one")]
    pub mu: BigInt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SolutionBoundReport {
    pub index_k: i64,
    pub case: CaseClass,
    pub rows: Vec<LevelBound>,
    #[serde(serialize_with = "super::count_serde::one")]
    pub total_bound: BigInt,
    /// Set when the configuration has fewer than two blow-up points; all bounds are then zero.
    pub bounds_suppressed: bool,
    pub warnings: Vec<ConfigWarning>,
}

fn theorem_bound(label: CaseLabel, ell: usize, m: usize, p: usize) -> BigInt {
    match label {
        CaseLabel::IndexOne => {
            if p % 2 == 1 {
                BigInt::zero()
            } else {
                let k = p / 2;
                binomial(k + ell - 1, k)
            }
        }
        CaseLabel::Case1 | CaseLabel::Case2 => binomial(p + m - 2, p),
        CaseLabel::Case3 | CaseLabel::Case4 => {
            if p.is_multiple_of(2) {
                let q = p / 2;
                binomial(q + m - ell - 2, q)
            } else {
                let q = p.div_ceil(2);
                binomial(q + m - ell - 3, q - 1)
            }
        }
    }
}

/// Per-level lower bounds on the number of solutions, checked against `|mu_p|`.
pub fn solution_bounds(cfg: &ParityConfig) -> Result<SolutionBoundReport, IndexError> {
    let table: IndexTable = mu_recurrence(cfg);
    let case = classify_case(cfg);
    let warnings = cfg.warnings();
    let suppressed = warnings.contains(&ConfigWarning::FewBlowUpPoints);
    let m = cfg.m();

    let mut rows = Vec::with_capacity(cfg.max_level());
    let mut total = BigInt::zero();
    for p in 1..=cfg.max_level() {
        let mu = table.mu(p).clone();
        let bound = if suppressed { BigInt::zero() } else { theorem_bound(case.label, case.ell, m, p) };
        if bound > abs(&mu) {
            return Err(IndexError::Inconsistent { level: p, bound, mu });
        }
        total += &bound;
        rows.push(LevelBound { level: p, energy: EnergyLevel { multiple: p, n: cfg.n() }, lower_bound: bound, mu });
    }
    Ok(SolutionBoundReport {
        index_k: index_k(cfg),
        case,
        rows,
        total_bound: total,
        bounds_suppressed: suppressed,
        warnings,
    })
}
