//! US House composition pipeline: per-congress party counts, empirical
//! diversity and activity metrics, zealot-count estimation by exhaustive
//! search, and backfire sweeps anchored at the estimate.
//!
//! The model reading: each chamber is a complete graph whose Democrats and
//! Republicans split into committed members (zealots) and persuadable ones.
//! Comparing the series' empirical diversity and active-link density with
//! the complete-graph closed forms fits how many members of each party are
//! committed.

use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::optimize::{
    solve_p2_diversity_complete, solve_p3_active_complete, BackfireSpec, OptimizeError,
};

#[derive(Debug, Error)]
pub enum CongressError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing column {0:?}")]
    MissingColumn(&'static str),
    #[error("no House records in the window of congresses 80-117")]
    NoHouseRecords,
    #[error("empty series")]
    EmptySeries,
    #[error("record k={k}: {message}")]
    BadRecord { k: u32, message: String },
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
}

/// One congress: Democrat and Republican member counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CongressRecord {
    /// Congress index; the bundled window uses k = congress number - 79.
    pub k: u32,
    /// Democrat members (unique within the congress).
    pub d: u32,
    /// Republican members.
    pub r: u32,
    /// Chamber size d + r.
    pub n: u32,
}

#[derive(Debug, Clone)]
pub struct CongressSeries {
    records: Vec<CongressRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Party {
    Democrat,
    Republican,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Party::Democrat => "D",
            Party::Republican => "R",
        })
    }
}

/// Fitted zealot counts and the metrics behind them.
#[derive(Debug, Clone, Copy)]
pub struct ZealotEstimate {
    pub z_d: u32,
    pub z_r: u32,
    pub sigma_hat: f64,
    /// Empirical active-link density at (z_d, z_r).
    pub rho_hat: f64,
    /// Mean distance between empirical and closed-form metrics.
    pub epsilon: f64,
    /// Population used for the closed forms (rounded mean chamber size).
    pub population: u32,
}

impl CongressSeries {
    /// Validates that every record has both parties present and a
    /// consistent total.
    pub fn new(records: Vec<CongressRecord>) -> Result<Self, CongressError> {
        if records.is_empty() {
            return Err(CongressError::EmptySeries);
        }
        for rec in &records {
            if rec.d == 0 || rec.r == 0 {
                return Err(CongressError::BadRecord {
                    k: rec.k,
                    message: format!("zero-count party (D={}, R={})", rec.d, rec.r),
                });
            }
            if rec.n != rec.d + rec.r {
                return Err(CongressError::BadRecord {
                    k: rec.k,
                    message: format!("N={} but D+R={}", rec.n, rec.d + rec.r),
                });
            }
        }
        Ok(CongressSeries { records })
    }

    /// Parses the pre-aggregated format: one `k D R N` row per congress,
    /// whitespace separated, `#` comments and blank lines ignored.
    pub fn from_counts_str(text: &str) -> Result<Self, CongressError> {
        let mut records = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(CongressError::Parse {
                    line: idx + 1,
                    message: format!("expected 4 fields (k D R N), got {}", fields.len()),
                });
            }
            let mut parsed = [0u32; 4];
            for (slot, field) in parsed.iter_mut().zip(&fields) {
                *slot = field.parse().map_err(|_| CongressError::Parse {
                    line: idx + 1,
                    message: format!("bad count {field:?}"),
                })?;
            }
            records.push(CongressRecord {
                k: parsed[0],
                d: parsed[1],
                r: parsed[2],
                n: parsed[3],
            });
        }
        CongressSeries::new(records)
    }

    pub fn from_counts_path(path: impl AsRef<Path>) -> Result<Self, CongressError> {
        CongressSeries::from_counts_str(&std::fs::read_to_string(path)?)
    }

    /// The packaged party counts for House congresses 80-117.
    pub fn bundled() -> Self {
        CongressSeries::from_counts_str(include_str!("../data/house_party_counts.tsv"))
            .expect("bundled counts table is valid")
    }

    pub fn records(&self) -> &[CongressRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn d_min(&self) -> u32 {
        self.records.iter().map(|r| r.d).min().expect("nonempty")
    }

    pub fn r_min(&self) -> u32 {
        self.records.iter().map(|r| r.r).min().expect("nonempty")
    }

    pub fn mean_population(&self) -> f64 {
        self.records.iter().map(|r| r.n as f64).sum::<f64>() / self.records.len() as f64
    }

    /// Population parameter used by the closed forms when fitting.
    pub fn rounded_mean_population(&self) -> u32 {
        self.mean_population().round() as u32
    }
}

/// Reads a member roster (delimited text with named columns `congress`,
/// `chamber`, `party_code`, `icpsr`) and counts unique House members per
/// congress per party for congresses 80-117. Party codes 100 (Democrat) and
/// 200 (Republican) are kept; all other parties are discarded.
pub fn parse_members(path: impl AsRef<Path>) -> Result<CongressSeries, CongressError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let column = |name: &'static str| -> Result<usize, CongressError> {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or(CongressError::MissingColumn(name))
    };
    let congress_col = column("congress")?;
    let chamber_col = column("chamber")?;
    let party_col = column("party_code")?;
    let icpsr_col = column("icpsr")?;

    // (congress, party, icpsr): replacements count once, switchers once per
    // party they served under.
    let mut seen = std::collections::HashSet::new();
    let mut counts = std::collections::BTreeMap::<u32, (u32, u32)>::new();
    for (idx, row) in reader.records().enumerate() {
        let row = row?;
        let field = |col: usize, name: &'static str| {
            row.get(col).ok_or(CongressError::Parse {
                line: idx + 2,
                message: format!("row is missing the {name} field"),
            })
        };
        if !field(chamber_col, "chamber")?.eq_ignore_ascii_case("house") {
            continue;
        }
        let congress: u32 =
            field(congress_col, "congress")?.parse().map_err(|_| CongressError::Parse {
                line: idx + 2,
                message: "bad congress number".into(),
            })?;
        if !(80..=117).contains(&congress) {
            continue;
        }
        let party = field(party_col, "party_code")?;
        let democrat = match party {
            "100" => true,
            "200" => false,
            _ => continue,
        };
        let icpsr = field(icpsr_col, "icpsr")?.to_owned();
        if !seen.insert((congress, democrat, icpsr)) {
            continue;
        }
        let entry = counts.entry(congress).or_insert((0, 0));
        if democrat {
            entry.0 += 1;
        } else {
            entry.1 += 1;
        }
    }
    if counts.is_empty() {
        return Err(CongressError::NoHouseRecords);
    }
    let records = counts
        .into_iter()
        .map(|(congress, (d, r))| CongressRecord { k: congress - 79, d, r, n: d + r })
        .collect();
    CongressSeries::new(records)
}

/// Mean opinion diversity over the series: `(4/K) sum D_k R_k/(D_k+R_k)^2`.
pub fn empirical_sigma(series: &CongressSeries) -> f64 {
    let k = series.len() as f64;
    series
        .records()
        .iter()
        .map(|rec| {
            let (d, r) = (rec.d as f64, rec.r as f64);
            4.0 * d * r / ((d + r) * (d + r))
        })
        .sum::<f64>()
        / k
}

/// Mean active-link density when `z_d` Democrats and `z_r` Republicans are
/// committed: `(1/K) sum (2 D_k R_k - D_k z_r - R_k z_d)/(N_k (N_k - 1))`.
/// Cross-party links not touching a committed member count as active.
pub fn empirical_rho(series: &CongressSeries, z_d: u32, z_r: u32) -> Result<f64, CongressError> {
    for rec in series.records() {
        if z_d > rec.d || z_r > rec.r {
            return Err(CongressError::BadRecord {
                k: rec.k,
                message: format!(
                    "zealot counts ({z_d}, {z_r}) exceed the party sizes ({}, {})",
                    rec.d, rec.r
                ),
            });
        }
    }
    Ok(rho_hat_from_sums(&EmpiricalSums::of(series), z_d as f64, z_r as f64))
}

/// Per-candidate O(1) pieces of the empirical density, which is linear in
/// the zealot counts.
struct EmpiricalSums {
    cross: f64,
    per_d: f64,
    per_r: f64,
}

impl EmpiricalSums {
    fn of(series: &CongressSeries) -> Self {
        let k = series.len() as f64;
        let mut cross = 0.0;
        let mut per_d = 0.0;
        let mut per_r = 0.0;
        for rec in series.records() {
            let (d, r, n) = (rec.d as f64, rec.r as f64, rec.n as f64);
            let pairs = n * (n - 1.0);
            cross += 2.0 * d * r / pairs;
            per_d += d / pairs;
            per_r += r / pairs;
        }
        EmpiricalSums { cross: cross / k, per_d: per_d / k, per_r: per_r / k }
    }
}

fn rho_hat_from_sums(sums: &EmpiricalSums, z_d: f64, z_r: f64) -> f64 {
    sums.cross - z_r * sums.per_d - z_d * sums.per_r
}

/// Exhaustively fits zealot counts over `{1..D_min} x {1..R_min}`,
/// minimizing the mean distance between the empirical metrics and the
/// complete-graph closed forms at the rounded mean chamber size. Ties break
/// to the lexicographically smallest pair.
pub fn estimate_zealots(series: &CongressSeries) -> ZealotEstimate {
    estimate_zealots_with(series, series.rounded_mean_population())
}

/// Same fit with an explicit population parameter for the closed forms.
/// The argmin is sensitive to this choice; the default rounded mean is the
/// documented convention.
pub fn estimate_zealots_with(series: &CongressSeries, population: u32) -> ZealotEstimate {
    let sums = EmpiricalSums::of(series);
    let sigma_hat = empirical_sigma(series);
    let n = population as f64;
    let best = (1..=series.d_min())
        .into_par_iter()
        .map(|z_d| {
            let mut row_best = (f64::INFINITY, 0u32, 0u32);
            for z_r in 1..=series.r_min() {
                let (zd, zr) = (z_d as f64, z_r as f64);
                let s = zd + zr;
                let sigma = 4.0 * zd * zr / (s * s);
                let rho = 2.0 * zd * zr * (n - s) / ((n - 1.0) * s * (s + 1.0));
                let rho_hat = rho_hat_from_sums(&sums, zd, zr);
                let eps = ((sigma_hat - sigma).abs() + (rho_hat - rho).abs()) / 2.0;
                if eps < row_best.0 {
                    row_best = (eps, z_d, z_r);
                }
            }
            row_best
        })
        .reduce(
            || (f64::INFINITY, u32::MAX, u32::MAX),
            |a, b| {
                if (b.0, b.1, b.2) < (a.0, a.1, a.2) {
                    b
                } else {
                    a
                }
            },
        );
    let (epsilon, z_d, z_r) = best;
    ZealotEstimate {
        z_d,
        z_r,
        sigma_hat,
        rho_hat: rho_hat_from_sums(&sums, z_d as f64, z_r as f64),
        epsilon,
        population,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepObjective {
    /// Maximize opinion diversity.
    Diversity,
    /// Maximize active-link density.
    Activity,
}

impl fmt::Display for SweepObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepObjective::Diversity => "diversity",
            SweepObjective::Activity => "activity",
        })
    }
}

/// One sweep evaluation: act on `party` with backfire `alpha`, holding the
/// other party's committed members at their estimate.
#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub alpha: f64,
    pub party: Party,
    pub objective: SweepObjective,
    pub z_star: f64,
    pub z_star_rounded: u64,
    pub z_max: f64,
    /// Diversity at the post-intervention composition.
    pub sigma_at_star: f64,
    /// Complete-graph active-link density at the post-intervention
    /// composition and the estimate's population.
    pub rho_at_star: f64,
}

/// Optimizes committed-member placement for each party and backfire level.
///
/// Acting on a party makes its committed count the planting variable
/// (opinion 1) while the other party's estimate acts as the fixed opposing
/// zealots (opinion 0), on a complete graph of the estimate's population.
/// Emits one diversity row and one activity row per (alpha, party).
pub fn alpha_sweep(
    series: &CongressSeries,
    estimate: &ZealotEstimate,
    alphas: &[f64],
) -> Result<Vec<SweepRow>, CongressError> {
    let n = estimate.population as f64;
    if series.is_empty() {
        return Err(CongressError::EmptySeries);
    }
    let mut rows = Vec::with_capacity(alphas.len() * 4);
    for &alpha in alphas {
        for party in [Party::Democrat, Party::Republican] {
            let z0 = match party {
                Party::Democrat => estimate.z_r,
                Party::Republican => estimate.z_d,
            } as f64;
            let spec = BackfireSpec::new(n, z0, alpha)?;
            for (objective, result) in [
                (SweepObjective::Diversity, solve_p2_diversity_complete(&spec)?),
                (SweepObjective::Activity, solve_p3_active_complete(&spec)?),
            ] {
                rows.push(SweepRow {
                    alpha,
                    party,
                    objective,
                    z_star: result.z1_star,
                    z_star_rounded: result.z1_star_rounded,
                    z_max: spec.z1_max(),
                    sigma_at_star: result.post_intervention.sigma,
                    rho_at_star: result.post_intervention.rho,
                });
            }
        }
    }
    Ok(rows)
}
