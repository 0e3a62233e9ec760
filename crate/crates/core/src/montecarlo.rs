//! Logical error rates of a hole-encoded qudit under single-spin noise.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{is_prime, modulo, PauliOperator};
use crate::code::{CheckId, CodeState};
use crate::decoder::decode_greedy;
use crate::dense::StateVector;
use crate::engine::{Engine, ForcedOutcomes, Sampler};
use crate::error::{Error, Result};
use crate::lattice::{LatticeGeometry, SiteKind};
use crate::noise::NoiseModel;
use crate::protocols::{prepare_x_eigenstate, LogicalQudit};
use crate::tableau::Tableau;

/// Two-sided 95% normal quantile.
pub const WILSON_Z: f64 = 1.959963984540054;

/// Minimum number of logical-error events for a point to enter a fit.
pub const MIN_FIT_EVENTS: u64 = 20;

const SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

/// One qudit of `kind` on an `lx × ly` torus: primary holes at `(x0, y0)`
/// and `(x0 + s, y0)`, each row extended by `rows - 1` holes in `+y`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EncodingConfig {
    pub d: u32,
    pub lx: usize,
    pub ly: usize,
    pub separation: usize,
    pub rows: usize,
    #[serde(default = "default_kind")]
    pub kind: SiteKind,
}

fn default_kind() -> SiteKind {
    SiteKind::Vertex
}

impl EncodingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.separation == 0 || self.rows == 0 {
            return Err(Error::Config("separation and rows must be positive".into()));
        }
        if self.lx < 2 * self.separation {
            return Err(Error::Config(format!(
                "lx = {} is too small for separation {} (needs at least {})",
                self.lx,
                self.separation,
                2 * self.separation
            )));
        }
        if self.ly < self.rows + 2 {
            return Err(Error::Config(format!("ly = {} is too small for {} rows", self.ly, self.rows)));
        }
        if !is_prime(self.d) {
            return Err(Error::NotPrime(self.d));
        }
        LatticeGeometry::new(self.lx, self.ly, self.d)?;
        Ok(())
    }

    pub fn hole_rows(&self, geom: &LatticeGeometry) -> [Vec<usize>; 2] {
        let x0 = ((self.lx - self.separation) / 2) as i64;
        let y0 = ((self.ly - self.rows) / 2) as i64;
        let row = |x: i64| (0..self.rows as i64).map(|k| geom.site(self.kind, x, y0 + k)).collect();
        [row(x0), row(x0 + self.separation as i64)]
    }
}

/// The logical error left after decoding: the X power read from `|0⟩` and
/// the Z power read from `|0̃⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialResult {
    pub x_power: u32,
    pub z_power: u32,
    pub fault_weight: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogicalErrorKind {
    None,
    X(u32),
    Z(u32),
    Both { x: u32, z: u32 },
}

impl TrialResult {
    pub fn kind(&self) -> LogicalErrorKind {
        match (self.x_power, self.z_power) {
            (0, 0) => LogicalErrorKind::None,
            (x, 0) => LogicalErrorKind::X(x),
            (0, z) => LogicalErrorKind::Z(z),
            (x, z) => LogicalErrorKind::Both { x, z },
        }
    }
}

/// Engine hooks used by the trial runner.
pub trait TrialEngine: Engine {
    /// Optionally re-express the state so that the given operators, which
    /// it must fix, are cheap to evaluate.
    fn canonicalize(_state: &mut CodeState<Self>, _fixed: &[PauliOperator]) -> Result<()> {
        Ok(())
    }
}

impl TrialEngine for Tableau {
    fn canonicalize(state: &mut CodeState<Self>, fixed: &[PauliOperator]) -> Result<()> {
        state.rebase(fixed)
    }
}

impl TrialEngine for StateVector {}

/// Pair of code states (`|0⟩` and `|0̃⟩`) that trials perturb and restore.
#[derive(Clone, Debug)]
pub struct Workspace<E> {
    zero: CodeState<E>,
    plus: CodeState<E>,
}

#[derive(Clone, Debug)]
pub struct TrialRunner<E> {
    config: EncodingConfig,
    qudit: LogicalQudit,
    templates: Workspace<E>,
    checks: Vec<(CheckId, PauliOperator)>,
    x_strings: Vec<PauliOperator>,
}

impl<E: TrialEngine> TrialRunner<E> {
    /// Build the encoded templates. `seed` drives the random outcomes of the
    /// preparation measurements.
    pub fn new(config: EncodingConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let geom = Arc::new(LatticeGeometry::new(config.lx, config.ly, config.d)?);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = CodeState::<E>::ground_state(geom.clone(), &mut Sampler(&mut rng))?;
        let rows = config.hole_rows(&geom);
        let mut qudit = LogicalQudit::encode(&mut state, config.kind, rows[0][0], rows[1][0])?;
        for k in 1..config.rows {
            qudit.split(&mut state, 0, rows[0][k], &mut Sampler(&mut rng))?;
            qudit.split(&mut state, 1, rows[1][k], &mut Sampler(&mut rng))?;
        }
        let mut x_strings = Vec::new();
        for i in 0..config.rows {
            for j in 0..config.rows {
                x_strings.push(qudit.x_string(&state, i, j)?);
            }
        }
        let checks = state.enforced_checks()?;
        let ops: Vec<PauliOperator> = checks.iter().map(|(_, op)| op.clone()).collect();
        let mut zero = state.clone();
        let mut fixed = ops.clone();
        fixed.push(qudit.z_rep().clone());
        E::canonicalize(&mut zero, &fixed)?;
        let mut plus = state;
        prepare_x_eigenstate(&mut plus, &qudit, &mut Sampler(&mut rng))?;
        let mut fixed = ops;
        fixed.extend(x_strings.iter().cloned());
        E::canonicalize(&mut plus, &fixed)?;
        Ok(Self { config, qudit, templates: Workspace { zero, plus }, checks, x_strings })
    }

    pub fn config(&self) -> &EncodingConfig {
        &self.config
    }

    pub fn qudit(&self) -> &LogicalQudit {
        &self.qudit
    }

    pub fn num_spins(&self) -> usize {
        self.templates.zero.geometry().num_edges()
    }

    pub fn workspace(&self) -> Workspace<E> {
        self.templates.clone()
    }

    /// Apply `fault`, decode, read both logical values, then undo everything
    /// so `ws` can be reused.
    pub fn evaluate(&self, ws: &mut Workspace<E>, fault: &PauliOperator) -> Result<(u32, u32)> {
        let d = self.config.d;
        ws.zero.apply_pauli(fault)?;
        let syndrome = ws.zero.measure_checks(&self.checks, &mut ForcedOutcomes::default())?;
        let correction = decode_greedy(&syndrome, ws.zero.holes(), ws.zero.links(), ws.zero.geometry())?;
        ws.zero.apply_pauli(&correction.operator)?;
        let x_power = ws
            .zero
            .engine()
            .deterministic_value(self.qudit.z_rep())?
            .ok_or_else(|| Error::Protocol("logical Z is not fixed after decoding".into()))?;
        ws.plus.apply_pauli(fault)?;
        ws.plus.apply_pauli(&correction.operator)?;
        let mut votes = BTreeMap::new();
        for x in &self.x_strings {
            let m = ws
                .plus
                .engine()
                .deterministic_value(x)?
                .ok_or_else(|| Error::Protocol("logical X is not fixed after decoding".into()))?;
            *votes.entry(modulo(-(m as i64), d)).or_insert(0usize) += 1;
        }
        // Most votes wins; ties go to the smallest value.
        let z_power = votes.iter().max_by_key(|(v, c)| (**c, std::cmp::Reverse(**v))).map(|(v, _)| *v).unwrap_or(0);
        let undo_c = correction.operator.power(-1);
        let undo_f = fault.power(-1);
        for s in [&mut ws.zero, &mut ws.plus] {
            s.apply_pauli(&undo_c)?;
            s.apply_pauli(&undo_f)?;
        }
        Ok((x_power, z_power))
    }

    pub fn run_trial(&self, ws: &mut Workspace<E>, model: &NoiseModel, seed: u64) -> Result<TrialResult> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fault = model.sample(self.num_spins(), self.config.d, &mut rng)?;
        let (x_power, z_power) = self.evaluate(ws, &fault)?;
        Ok(TrialResult { x_power, z_power, fault_weight: fault.weight(), seed })
    }
}

/// Which single-spin operators an exhaustive scan uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaultFamily {
    /// `X^a` faults, which create fluxes.
    Shift,
    /// `Z^b` faults, which create charges.
    Clock,
    /// Every nonidentity `X^a Z^b`.
    Any,
}

impl FaultFamily {
    fn powers(self, d: u32) -> Vec<(i64, i64)> {
        let d = d as i64;
        match self {
            FaultFamily::Shift => (1..d).map(|a| (a, 0)).collect(),
            FaultFamily::Clock => (1..d).map(|b| (0, b)).collect(),
            FaultFamily::Any => (0..d).flat_map(|a| (0..d).map(move |b| (a, b))).filter(|&p| p != (0, 0)).collect(),
        }
    }
}

/// Call `f` on every fault of exactly `weight` spins from `family`, in
/// lexicographic order of (sites, powers).
pub fn for_each_fault(
    n: usize,
    d: u32,
    weight: usize,
    family: FaultFamily,
    f: &mut dyn FnMut(&PauliOperator) -> Result<()>,
) -> Result<()> {
    let powers = family.powers(d);
    let mut sites = Vec::with_capacity(weight);
    fn rec(
        n: usize,
        d: u32,
        weight: usize,
        powers: &[(i64, i64)],
        sites: &mut Vec<usize>,
        f: &mut dyn FnMut(&PauliOperator) -> Result<()>,
    ) -> Result<()> {
        if sites.len() == weight {
            let mut choice = vec![0usize; weight];
            loop {
                let factors: Vec<(usize, i64, i64)> =
                    sites.iter().zip(&choice).map(|(&s, &c)| (s, powers[c].0, powers[c].1)).collect();
                f(&PauliOperator::from_sparse(n, d, &factors)?)?;
                let mut i = weight;
                loop {
                    if i == 0 {
                        return Ok(());
                    }
                    i -= 1;
                    choice[i] += 1;
                    if choice[i] < powers.len() {
                        break;
                    }
                    choice[i] = 0;
                }
            }
        }
        let start = sites.last().map_or(0, |&s| s + 1);
        for s in start..n {
            sites.push(s);
            rec(n, d, weight, powers, sites, f)?;
            sites.pop();
        }
        Ok(())
    }
    rec(n, d, weight, &powers, &mut sites, f)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub weight: usize,
    pub family: FaultFamily,
    pub faults: u64,
    pub x_failures: u64,
    pub z_failures: u64,
    pub first_x_failure: Option<PauliOperator>,
    pub first_z_failure: Option<PauliOperator>,
}

/// Decode every fault of the given weight and count logical failures.
pub fn exhaustive_scan<E: TrialEngine>(runner: &TrialRunner<E>, weight: usize, family: FaultFamily) -> Result<ScanReport> {
    let mut ws = runner.workspace();
    let mut report = ScanReport {
        weight,
        family,
        faults: 0,
        x_failures: 0,
        z_failures: 0,
        first_x_failure: None,
        first_z_failure: None,
    };
    for_each_fault(runner.num_spins(), runner.config.d, weight, family, &mut |fault| {
        let (x, z) = runner.evaluate(&mut ws, fault)?;
        report.faults += 1;
        if x != 0 {
            report.x_failures += 1;
            report.first_x_failure.get_or_insert_with(|| fault.clone());
        }
        if z != 0 {
            report.z_failures += 1;
            report.first_z_failure.get_or_insert_with(|| fault.clone());
        }
        Ok(())
    })?;
    Ok(report)
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(SEED_STRIDE);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of trial `index`, independent of how trials are scheduled.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add(index.wrapping_mul(SEED_STRIDE)))
}

/// Wilson score interval `(rate, lo, hi)` for `k` events in `n` trials.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64, f64) {
    if n == 0 {
        return (0.0, 0.0, 1.0);
    }
    let (k, n) = (k as f64, n as f64);
    let p = k / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if k == 0.0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (center + half).min(1.0) };
    (p, lo, hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub trials: u64,
    pub x_errors: u64,
    pub z_errors: u64,
}

impl RateEstimate {
    pub fn x_interval(&self) -> (f64, f64, f64) {
        wilson_interval(self.x_errors, self.trials)
    }

    pub fn z_interval(&self) -> (f64, f64, f64) {
        wilson_interval(self.z_errors, self.trials)
    }
}

/// Run `job` on a pool of `workers` threads, or on the global pool.
pub fn with_workers<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(job()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

/// Run `trials` seeded trials. Results depend only on the runner, the model
/// and `master_seed`, not on the number of workers.
pub fn estimate_logical_rate<E: TrialEngine>(
    runner: &TrialRunner<E>,
    model: &NoiseModel,
    trials: u64,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<RateEstimate> {
    let results: Result<Vec<(bool, bool)>> = with_workers(workers, || {
        (0..trials)
            .into_par_iter()
            .map_init(
                || runner.workspace(),
                |ws, i| {
                    let r = runner.run_trial(ws, model, trial_seed(master_seed, i))?;
                    Ok((r.x_power != 0, r.z_power != 0))
                },
            )
            .collect()
    })?;
    let results = results?;
    Ok(RateEstimate {
        trials,
        x_errors: results.iter().filter(|r| r.0).count() as u64,
        z_errors: results.iter().filter(|r| r.1).count() as u64,
    })
}

/// Least-squares slope of `ln rate` against `ln p`.
pub fn fit_scaling_exponent(points: &[(f64, f64)]) -> Result<f64> {
    let pts: Vec<(f64, f64)> =
        points.iter().filter(|(p, r)| *p > 0.0 && *r > 0.0).map(|(p, r)| (p.ln(), r.ln())).collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientPoints { required: 3, got: pts.len() });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientPoints { required: 3, got: 1 });
    }
    Ok(sxy / sxx)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub encoding: EncodingConfig,
    pub p_x: f64,
    pub p_z: f64,
    pub estimate: RateEstimate,
    pub x_exponent: Option<f64>,
    pub z_exponent: Option<f64>,
}

/// Rates over a grid of noise strengths with per-encoding exponent fits.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub rows: Vec<RateRow>,
}

pub const CSV_HEADER: &str = "d,Lx,Ly,s,N,p_x,p_z,trials,x_rate,x_lo,x_hi,z_rate,z_lo,z_hi,x_exponent,z_exponent";

impl ScalingReport {
    /// Build from measured rows, filling in the exponents. Logical X errors
    /// are driven by faults that create the qudit's own anyon type (clock
    /// faults for vertex qudits), logical Z errors by the other type; each
    /// exponent is fitted against its driving rate over the points of one
    /// encoding with at least `MIN_FIT_EVENTS` events.
    pub fn from_rows(mut rows: Vec<RateRow>) -> Self {
        let mut groups: BTreeMap<EncodingConfig, Vec<usize>> = BTreeMap::new();
        for (i, r) in rows.iter().enumerate() {
            groups.entry(r.encoding.clone()).or_default().push(i);
        }
        for (enc, idx) in groups {
            let driving = |r: &RateRow, logical_x: bool| match (enc.kind, logical_x) {
                (SiteKind::Vertex, true) | (SiteKind::Plaquette, false) => r.p_z,
                _ => r.p_x,
            };
            let fit = |logical_x: bool| {
                let pts: Vec<(f64, f64)> = idx
                    .iter()
                    .map(|&i| &rows[i])
                    .filter(|r| {
                        let k = if logical_x { r.estimate.x_errors } else { r.estimate.z_errors };
                        k >= MIN_FIT_EVENTS
                    })
                    .map(|r| {
                        let rate = if logical_x { r.estimate.x_interval().0 } else { r.estimate.z_interval().0 };
                        (driving(r, logical_x), rate)
                    })
                    .collect();
                fit_scaling_exponent(&pts).ok()
            };
            let (xe, ze) = (fit(true), fit(false));
            for i in idx {
                rows[i].x_exponent = xe;
                rows[i].z_exponent = ze;
            }
        }
        Self { rows }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let e = &r.encoding;
            let (xr, xl, xh) = r.estimate.x_interval();
            let (zr, zl, zh) = r.estimate.z_interval();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                e.d,
                e.lx,
                e.ly,
                e.separation,
                e.rows,
                r.p_x,
                r.p_z,
                r.estimate.trials,
                xr,
                xl,
                xh,
                zr,
                zl,
                zh,
                opt(r.x_exponent),
                opt(r.z_exponent)
            );
        }
        out
    }
}
