//! Grid sweeps over `(n, c)` and limit checks for the two-scale family.
//!
//! Asymptotic statements are operationalized as finite-grid checks with a
//! declared direction. A passing report is evidence, not a proof.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cutoff::{location, width};
use crate::error::{Error, Result};
use crate::families::{limit_target, BetaSchedule, FamilyDescriptor, LimitBehavior, ParametricFamily};
use crate::interval::LogInterval;

/// Tolerance for identities that hold exactly (up to rounding).
pub const EXACT_TOLERANCE: f64 = 1e-9;
/// Log-domain tolerance for the two-scale limit at `n = 10^4`.
pub const LIMIT_TOLERANCE: f64 = 0.02;
/// Minimum log-domain gap between parity subsequences of the oscillating
/// schedule.
pub const SEPARATION_THRESHOLD: f64 = 0.1;

/// Where a row evaluates `d_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffsetRule {
    /// `t + c w`
    Left,
    /// `t + r + c w`
    Right,
    /// `t + (1 - β_n) r + c w`; two-scale family only.
    Shifted,
    /// `t + θ r + c w`
    Custom { theta: f64 },
}

impl OffsetRule {
    pub fn label(&self) -> String {
        match self {
            OffsetRule::Left => "left".into(),
            OffsetRule::Right => "right".into(),
            OffsetRule::Shifted => "shifted".into(),
            OffsetRule::Custom { theta } => format!("custom:{theta}"),
        }
    }

    fn needs_correction(&self) -> bool {
        match self {
            OffsetRule::Left => false,
            OffsetRule::Custom { theta } => *theta != 0.0,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceProfile {
    /// Left rows on families whose profile is exactly `e^{-c}`.
    pub exact: f64,
    /// Left rows on every other family.
    pub asymptotic: f64,
}

impl Default for ToleranceProfile {
    fn default() -> Self {
        Self {
            exact: EXACT_TOLERANCE,
            asymptotic: LIMIT_TOLERANCE,
        }
    }
}

/// Family given either in short form or as a JSON descriptor.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum FamilyField {
    Short(String),
    Full(FamilyDescriptor),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSpecFile {
    family: FamilyField,
    n_grid: Vec<u64>,
    c_grid: Vec<f64>,
    offset_rule: OffsetRule,
    #[serde(default)]
    tolerance: ToleranceProfile,
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub family: ParametricFamily,
    pub n_grid: Vec<u64>,
    pub c_grid: Vec<f64>,
    pub offset_rule: OffsetRule,
    pub tolerance: ToleranceProfile,
}

impl SweepSpec {
    pub fn new(
        family: ParametricFamily,
        n_grid: Vec<u64>,
        c_grid: Vec<f64>,
        offset_rule: OffsetRule,
    ) -> Result<Self> {
        let spec = Self {
            family,
            n_grid,
            c_grid,
            offset_rule,
            tolerance: ToleranceProfile::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_grids(&self.n_grid, &self.c_grid)?;
        if self.offset_rule == OffsetRule::Shifted && self.family.beta().is_none() {
            return Err(Error::InvalidSpec(
                "the shifted offset needs a family with a beta schedule".into(),
            ));
        }
        if let OffsetRule::Custom { theta } = self.offset_rule {
            if !theta.is_finite() {
                return Err(Error::InvalidSpec(format!("theta = {theta}")));
            }
        }
        for &n in &self.n_grid {
            if self.offset_rule.needs_correction() {
                self.family.params(n)?;
            } else {
                location_width(&self.family, n)?;
            }
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: SweepSpecFile = serde_json::from_str(s)?;
        let family = match file.family {
            FamilyField::Short(s) => ParametricFamily::from_descriptor(&s)?,
            FamilyField::Full(d) => d.try_into()?,
        };
        let spec = Self {
            family,
            n_grid: file.n_grid,
            c_grid: file.c_grid,
            offset_rule: file.offset_rule,
            tolerance: file.tolerance,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&fs::read_to_string(path)?)
    }

    fn has_exact_profile(&self) -> bool {
        matches!(
            self.family,
            ParametricFamily::SingleOu { .. } | ParametricFamily::Lemma31 { .. }
        )
    }
}

fn check_grids(n_grid: &[u64], c_grid: &[f64]) -> Result<()> {
    if n_grid.is_empty() || c_grid.is_empty() {
        return Err(Error::InvalidSpec("grids must be nonempty".into()));
    }
    if n_grid.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::InvalidSpec("n_grid must be strictly increasing".into()));
    }
    if let Some(c) = c_grid.iter().find(|c| !c.is_finite()) {
        return Err(Error::InvalidSpec(format!("c = {c}")));
    }
    Ok(())
}

/// Direction of a row's check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Assertion {
    /// measured (lower endpoint) >= reference - tolerance
    Ge,
    /// measured (upper endpoint) <= reference
    Le,
    None,
}

impl Assertion {
    pub fn label(&self) -> &'static str {
        match self {
            Assertion::Ge => "ge",
            Assertion::Le => "le",
            Assertion::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub family: String,
    pub n: u64,
    pub c: f64,
    pub offset_rule: String,
    pub t_eval: f64,
    pub log_d_lo: f64,
    pub log_d_hi: f64,
    pub reference: f64,
    pub assertion: Assertion,
    pub pass: bool,
    /// Measured minus reference, using the endpoint the assertion reads.
    pub slack: f64,
    /// Asymptotic value of `ln d_n` at this offset, where known.
    pub target: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    /// A failed assertion or an evaluation error.
    pub fn is_fatal(&self) -> bool {
        !self.pass
    }
}

/// `(t_n, w_n)`, also when `r_n` is undefined.
fn location_width(family: &ParametricFamily, n: u64) -> Result<(f64, f64)> {
    match family.params(n) {
        Ok(p) => Ok((p.t, p.w)),
        Err(Error::CorrectionUndefined(_)) => {
            let m = family.mixture(n)?;
            Ok((location(&m).0, width(&m)))
        }
        Err(e) => Err(e),
    }
}

fn eval_time(spec: &SweepSpec, n: u64, c: f64) -> Result<f64> {
    let theta = match spec.offset_rule {
        OffsetRule::Left => 0.0,
        OffsetRule::Right => 1.0,
        OffsetRule::Shifted => {
            let beta = spec.family.beta().expect("validated");
            1.0 - beta.at(n)?
        }
        OffsetRule::Custom { theta } => theta,
    };
    if theta == 0.0 {
        let (t, w) = location_width(&spec.family, n)?;
        return Ok(t + c * w);
    }
    let p = spec.family.params(n)?;
    Ok(p.t + theta * p.r + c * p.w)
}

fn sweep_row(spec: &SweepSpec, n: u64, c: f64) -> SweepRow {
    let mut row = SweepRow {
        family: spec.family.label(),
        n,
        c,
        offset_rule: spec.offset_rule.label(),
        t_eval: f64::NAN,
        log_d_lo: f64::NAN,
        log_d_hi: f64::NAN,
        reference: f64::NAN,
        assertion: Assertion::None,
        pass: false,
        slack: f64::NAN,
        target: None,
        error: None,
    };
    if let Err(e) = fill_row(spec, &mut row) {
        row.pass = false;
        row.error = Some(e.to_string());
    }
    row
}

fn fill_row(spec: &SweepSpec, row: &mut SweepRow) -> Result<()> {
    let (n, c) = (row.n, row.c);
    let t = eval_time(spec, n, c)?;
    row.t_eval = t;
    let measured: LogInterval = spec.family.evaluate(n, t)?;
    row.log_d_lo = measured.log_lo;
    row.log_d_hi = measured.log_hi;

    match spec.offset_rule {
        OffsetRule::Left if c < 0.0 => {
            let tol = if spec.has_exact_profile() {
                spec.tolerance.exact
            } else {
                spec.tolerance.asymptotic
            };
            row.reference = -c;
            row.target = Some(-c);
            row.assertion = Assertion::Ge;
            row.slack = measured.log_lo - row.reference;
            row.pass = row.slack >= -tol;
        }
        OffsetRule::Right if c > 0.0 => {
            let cert = spec.family.upper_certificate(n, c)?;
            row.reference = cert.log_bound;
            row.target = Some(-c);
            row.assertion = Assertion::Le;
            row.slack = measured.log_hi - row.reference;
            row.pass = row.slack <= 0.0;
        }
        rule => {
            row.reference = -c;
            row.target = match rule {
                OffsetRule::Left | OffsetRule::Right => Some(-c),
                OffsetRule::Shifted => {
                    let beta = spec.family.beta().expect("validated");
                    Some(limit_target(c, beta.limit().gamma_at(n)))
                }
                OffsetRule::Custom { .. } => None,
            };
            if let Some(target) = row.target {
                row.reference = target;
            }
            row.assertion = Assertion::None;
            row.slack = measured.midpoint() - row.reference;
            row.pass = true;
        }
    }
    Ok(())
}

/// Evaluates every `(n, c)` pair, in parallel, sorted by `(n, c)`.
///
/// ```
/// use cutoff_lab::harness::{sweep, OffsetRule, SweepSpec};
/// let family = "single-ou".parse().unwrap();
/// let spec = SweepSpec::new(family, vec![10, 100], vec![-2.0], OffsetRule::Left).unwrap();
/// let rows = sweep(&spec).unwrap();
/// assert!(rows.iter().all(|r| r.pass && (r.log_d_lo - 2.0).abs() < 1e-12));
/// ```
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let pairs: Vec<(u64, f64)> = spec
        .n_grid
        .iter()
        .flat_map(|&n| spec.c_grid.iter().map(move |&c| (n, c)))
        .collect();
    let mut rows: Vec<SweepRow> = pairs.par_iter().map(|&(n, c)| sweep_row(spec, n, c)).collect();
    rows.sort_by(|a, b| a.n.cmp(&b.n).then(a.c.total_cmp(&b.c)));
    Ok(rows)
}

/// One evaluation in a limit check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitRow {
    pub n: u64,
    pub c: f64,
    pub beta: f64,
    pub t_eval: f64,
    pub log_d_lo: f64,
    pub log_d_hi: f64,
    pub target: f64,
    /// Largest distance from the target to either endpoint.
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitReport {
    pub schedule: String,
    pub tolerance: f64,
    pub rows: Vec<LimitRow>,
    /// Every final row (per `c`, per parity where relevant) within tolerance.
    pub within_tolerance: bool,
    /// Error nonincreasing along the grid (per `c`, per parity).
    pub monotone: bool,
    /// Smallest gap between the last even and last odd enclosures; only for
    /// schedules without a profile.
    pub separation: Option<f64>,
    pub passed: bool,
    pub worst: Option<LimitRow>,
}

impl LimitReport {
    /// `Err(ToleranceNotMet)` naming the worst row unless the check passed.
    pub fn check(&self) -> Result<()> {
        if self.passed {
            return Ok(());
        }
        let detail = match (&self.separation, &self.worst) {
            (Some(sep), _) => format!(
                "{}: parity subsequences separated by {sep:.6} < {SEPARATION_THRESHOLD}",
                self.schedule
            ),
            (None, Some(w)) => format!(
                "{}: n = {}, c = {}: |{:.6} - {:.6}| = {:.6} > {}",
                self.schedule,
                w.n,
                w.c,
                0.5 * (w.log_d_lo + w.log_d_hi),
                w.target,
                w.error,
                self.tolerance
            ),
            (None, None) => self.schedule.clone(),
        };
        Err(Error::ToleranceNotMet(detail))
    }
}

/// Checks `ln d_n(t_n + (1 - β_n) r_n + c w_n)` against
/// `-c + ln(1 + e^{-γ})`.
///
/// Schedules with a single limit are checked at the largest `n`; the
/// alternating schedule at the largest even and the largest odd `n`. The
/// oscillating schedule has no profile: it is evaluated at the fixed
/// location `t_n + c w_n`, where the parity subsequences approach
/// `ln(1 + e^{γ}) - c` with `γ = 3` (even) and `γ = 1` (odd), and the check
/// is that their enclosures stay at least `0.1` apart.
pub fn limit_check(beta: &BetaSchedule, c_grid: &[f64], n_grid: &[u64], tol: f64) -> Result<LimitReport> {
    check_grids(n_grid, c_grid)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidSpec(format!("tolerance {tol}")));
    }
    let limit = beta.limit();
    let fixed_location = matches!(beta, BetaSchedule::Oscillating);
    let family = ParametricFamily::lemma31(*beta);

    let pairs: Vec<(u64, f64)> = n_grid
        .iter()
        .flat_map(|&n| c_grid.iter().map(move |&c| (n, c)))
        .collect();
    let mut rows = pairs
        .par_iter()
        .map(|&(n, c)| -> Result<LimitRow> {
            let b = beta.at(n)?;
            let p = family.params(n)?;
            let gamma = limit.gamma_at(n);
            let (t_eval, target) = if fixed_location {
                (p.t + c * p.w, -c + gamma.exp().ln_1p())
            } else {
                let shift = if b == 1.0 { 0.0 } else { (1.0 - b) * p.r };
                (p.t + shift + c * p.w, limit_target(c, gamma))
            };
            let d = family.evaluate(n, t_eval)?;
            Ok(LimitRow {
                n,
                c,
                beta: b,
                t_eval,
                log_d_lo: d.log_lo,
                log_d_hi: d.log_hi,
                target,
                error: d.max_abs_deviation(target),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.c.total_cmp(&b.c).then(a.n.cmp(&b.n)));

    // group per c and, for parity-dependent limits, per parity
    let by_parity = matches!(limit, LimitBehavior::Subsequences { .. });
    let mut groups: BTreeMap<(usize, u64), Vec<&LimitRow>> = BTreeMap::new();
    for (ci, c) in c_grid.iter().enumerate() {
        for row in rows.iter().filter(|r| r.c.total_cmp(c).is_eq()) {
            let parity = if by_parity { row.n % 2 } else { 0 };
            groups.entry((ci, parity)).or_default().push(row);
        }
    }

    let mut within = true;
    let mut monotone = true;
    let mut worst: Option<&LimitRow> = None;
    for group in groups.values() {
        let last = group.last().expect("nonempty group");
        if worst.is_none_or(|w| last.error > w.error) {
            worst = Some(last);
        }
        within &= last.error <= tol;
        monotone &= group.windows(2).all(|p| p[1].error <= p[0].error);
    }

    let separation = fixed_location.then(|| {
        (0..c_grid.len())
            .map(|ci| match (groups.get(&(ci, 0)), groups.get(&(ci, 1))) {
                (Some(even), Some(odd)) => {
                    let e = even.last().expect("nonempty");
                    let o = odd.last().expect("nonempty");
                    (e.log_d_lo - o.log_d_hi).max(o.log_d_lo - e.log_d_hi)
                }
                _ => f64::NEG_INFINITY,
            })
            .fold(f64::INFINITY, f64::min)
    });
    let passed = match separation {
        Some(sep) => sep >= SEPARATION_THRESHOLD,
        None => within,
    };
    let worst = worst.cloned();

    Ok(LimitReport {
        schedule: beta.label(),
        tolerance: tol,
        rows,
        within_tolerance: within,
        monotone,
        separation,
        passed,
        worst,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    /// `.json` selects JSON; anything else is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => ReportFormat::Json,
            _ => ReportFormat::Csv,
        }
    }

    pub fn extension(&self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        }
    }
}

pub const CSV_HEADER: [&str; 11] = [
    "family",
    "n",
    "c",
    "offset_rule",
    "t_eval",
    "log_d_lo",
    "log_d_hi",
    "reference",
    "assertion",
    "pass",
    "slack",
];

/// Twelve significant digits, shortest round-trip form of the rounded
/// value.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    let mag = rounded.abs();
    if (1e-6..1e15).contains(&mag) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

/// Shortest representation that parses back to the same `f64`; keeps the
/// two endpoints of tight enclosures distinct.
pub fn format_exact(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        format_number(x)
    }
}

/// Serializes rows to a string in the given format.
pub fn render_report(rows: &[SweepRow], format: ReportFormat) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::InvalidSpec("no rows to report".into()));
    }
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(rows)?;
            s.push('\n');
            Ok(s)
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_HEADER)?;
            for r in rows {
                w.write_record([
                    r.family.clone(),
                    r.n.to_string(),
                    format_exact(r.c),
                    r.offset_rule.clone(),
                    format_exact(r.t_eval),
                    format_exact(r.log_d_lo),
                    format_exact(r.log_d_hi),
                    format_exact(r.reference),
                    r.assertion.label().to_string(),
                    r.pass.to_string(),
                    format_exact(r.slack),
                ])?;
            }
            let bytes = w.into_inner().map_err(|e| Error::IoFailure(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
    }
}

/// Writes rows to `path`.
pub fn emit_report(rows: &[SweepRow], format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    let body = render_report(rows, format)?;
    fs::write(path, body)?;
    Ok(())
}

/// Writes one file per `(family, offset_rule)` into `dir`, named after the
/// pair. Returns the paths in sorted order.
pub fn emit_reports_by_group(
    rows: &[SweepRow],
    format: ReportFormat,
    dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    let mut groups: BTreeMap<(String, String), Vec<SweepRow>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.family.clone(), r.offset_rule.clone()))
            .or_default()
            .push(r.clone());
    }
    fs::create_dir_all(dir.as_ref())?;
    let sanitize = |s: &str| -> String {
        s.chars()
            .map(|ch| {
                if ch.is_ascii_alphanumeric() || ch == '.' || ch == '-' {
                    ch
                } else {
                    '_'
                }
            })
            .collect()
    };
    groups
        .into_iter()
        .map(|((family, rule), group)| {
            let name = format!(
                "{}__{}.{}",
                sanitize(&family),
                sanitize(&rule),
                format.extension()
            );
            let path = dir.as_ref().join(name);
            emit_report(&group, format, &path)?;
            Ok(path)
        })
        .collect()
}
