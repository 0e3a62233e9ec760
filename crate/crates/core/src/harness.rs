//! Declarative experiment runner: one JSON config in, a CSV table, a JSON
//! document and a transcript out. Outputs depend only on the config and
//! seed, never on the worker count.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{omega_pow, PauliOperator};
use crate::code::CodeState;
use crate::dense::{check_capacity, StateVector};
use crate::engine::{sample_index, Engine, ForcedOutcomes, Sampler};
use crate::error::{Error, Result};
use crate::lattice::{LatticeGeometry, Orientation, SiteKind};
use crate::montecarlo::{
    estimate_logical_rate, splitmix64, trial_seed, with_workers, EncodingConfig, RateRow, ScalingReport, TrialEngine,
    TrialRunner,
};
use crate::noise::NoiseModel;
use crate::protocols::{
    braid_controlled_z, controlled_x, decouple_x, fourier_teleport, logical_fidelity, phase_gate_rus,
    prepare_ancilla_theta, prepare_logical_state, prepare_x_eigenstate, straddling_layout, DEFAULT_MAX_ATTEMPTS,
};
use crate::six_spin::{SixSpinCode, SixSpinVariant};
use crate::tableau::Tableau;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ProtocolDemo,
    NoiseSweep,
    SixSpinReport,
    EngineCrosscheck,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineChoice {
    Dense,
    Tableau,
    /// Dense when the experiment has a non-Clifford step or reports
    /// fidelities, tableau otherwise.
    #[default]
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolName {
    FourierTeleport,
    ControlledX,
    BraidControlledZ,
    AncillaTheta,
    PhaseGateRus,
}

impl ProtocolName {
    pub fn is_clifford(self) -> bool {
        !matches!(self, ProtocolName::AncillaTheta | ProtocolName::PhaseGateRus)
    }

    pub fn name(self) -> &'static str {
        match self {
            ProtocolName::FourierTeleport => "fourier-teleport",
            ProtocolName::ControlledX => "controlled-x",
            ProtocolName::BraidControlledZ => "braid-controlled-z",
            ProtocolName::AncillaTheta => "ancilla-theta",
            ProtocolName::PhaseGateRus => "phase-gate-rus",
        }
    }
}

/// Which fault channels a sweep point switches on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseChannels {
    /// `p_x = p_z = p`.
    #[default]
    Both,
    /// `p_x = p`, `p_z = 0`.
    Shift,
    /// `p_x = 0`, `p_z = p`.
    Clock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Qudit dimension; 2 for the six-spin report, 3 otherwise.
    #[serde(default)]
    pub d: Option<u32>,
    #[serde(default = "default_side")]
    pub lx: usize,
    #[serde(default = "default_side")]
    pub ly: usize,
    #[serde(default = "default_separation")]
    pub separation: usize,
    #[serde(default = "default_rows")]
    pub rows: usize,
    #[serde(default = "default_qudit_kind")]
    pub qudit_kind: SiteKind,
    #[serde(default)]
    pub protocol: Option<ProtocolName>,
    #[serde(default)]
    pub theta: Option<Vec<f64>>,
    #[serde(default)]
    pub p_grid: Vec<f64>,
    #[serde(default)]
    pub noise: NoiseChannels,
    /// Trials per sweep point, runs of a protocol demo, or circuits of a
    /// crosscheck.
    #[serde(default = "default_trials")]
    pub trials: u64,
    /// Gates per crosscheck circuit.
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub engine: EngineChoice,
}

fn default_side() -> usize {
    2
}
fn default_separation() -> usize {
    2
}
fn default_rows() -> usize {
    1
}
fn default_qudit_kind() -> SiteKind {
    SiteKind::Vertex
}
fn default_trials() -> u64 {
    1
}
fn default_depth() -> usize {
    16
}

/// The engine an experiment actually runs on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResolvedEngine {
    Dense,
    Tableau,
    Both,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))
    }

    pub fn dim(&self) -> u32 {
        self.d.unwrap_or(match self.kind {
            ExperimentKind::SixSpinReport => 2,
            _ => 3,
        })
    }

    fn encoding(&self) -> EncodingConfig {
        EncodingConfig {
            d: self.dim(),
            lx: self.lx,
            ly: self.ly,
            separation: self.separation,
            rows: self.rows,
            kind: self.qudit_kind,
        }
    }

    /// Check the config and pick the engine. Capacity errors are reported
    /// separately from other config errors.
    pub fn validate(&self) -> Result<ResolvedEngine> {
        let d = self.dim();
        crate::algebra::check_dim(d)?;
        if !crate::algebra::is_prime(d) {
            return Err(Error::NotPrime(d));
        }
        let spins = 2 * self.lx * self.ly;
        let engine = match self.kind {
            ExperimentKind::ProtocolDemo => {
                let protocol =
                    self.protocol.ok_or_else(|| Error::Config("protocol-demo needs a \"protocol\"".into()))?;
                if self.engine == EngineChoice::Tableau {
                    return Err(Error::Config(format!(
                        "{} reports fidelities and needs the dense engine",
                        protocol.name()
                    )));
                }
                if self.lx < 2 || self.ly < 2 {
                    return Err(Error::Config("protocol demos need a lattice of at least 2×2".into()));
                }
                if let Some(theta) = &self.theta {
                    if protocol.is_clifford() {
                        return Err(Error::Config(format!("{} takes no θ", protocol.name())));
                    }
                    if theta.len() != d as usize {
                        return Err(Error::Config(format!("θ has {} entries, expected {d}", theta.len())));
                    }
                }
                check_capacity(spins, d)?;
                ResolvedEngine::Dense
            }
            ExperimentKind::NoiseSweep => {
                self.encoding().validate()?;
                if self.p_grid.is_empty() {
                    return Err(Error::Config("noise-sweep needs a non-empty p_grid".into()));
                }
                for &p in &self.p_grid {
                    NoiseModel::new(p, p)?;
                }
                if self.trials == 0 {
                    return Err(Error::Config("trials must be positive".into()));
                }
                match self.engine {
                    EngineChoice::Dense => {
                        check_capacity(spins, d)?;
                        ResolvedEngine::Dense
                    }
                    _ => ResolvedEngine::Tableau,
                }
            }
            ExperimentKind::SixSpinReport => {
                if d != 2 {
                    return Err(Error::Config(format!("the six-spin code is a qubit code, got d = {d}")));
                }
                match self.engine {
                    EngineChoice::Dense => ResolvedEngine::Dense,
                    _ => ResolvedEngine::Tableau,
                }
            }
            ExperimentKind::EngineCrosscheck => {
                if self.engine != EngineChoice::Auto {
                    return Err(Error::Config("engine-crosscheck always runs both engines; leave engine as auto".into()));
                }
                if self.lx == 0 || self.ly == 0 {
                    return Err(Error::Config("lattice sides must be positive".into()));
                }
                check_capacity(spins, d)?;
                ResolvedEngine::Both
            }
        };
        Ok(engine)
    }
}

/// Everything a run produces.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub csv: String,
    pub json: String,
    pub transcript: String,
}

impl RunOutput {
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, body) in [("results.csv", &self.csv), ("results.json", &self.json), ("transcript.log", &self.transcript)] {
            std::fs::write(dir.join(name), body)?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct JsonDocument<'a, T: Serialize> {
    config: &'a ExperimentConfig,
    engine: ResolvedEngine,
    results: T,
}

fn json_document<T: Serialize>(config: &ExperimentConfig, engine: ResolvedEngine, results: T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&JsonDocument { config, engine, results })?;
    s.push('\n');
    Ok(s)
}

/// Run an experiment. `workers` sizes the trial pool; `None` uses the global
/// pool.
pub fn run(config: &ExperimentConfig, workers: Option<usize>) -> Result<RunOutput> {
    let engine = config.validate()?;
    let mut log = String::new();
    let _ = writeln!(log, "experiment {:?} d={} engine={engine:?} seed={}", config.kind, config.dim(), config.seed);
    match config.kind {
        ExperimentKind::ProtocolDemo => run_protocol_demo(config, engine, log),
        ExperimentKind::NoiseSweep => match engine {
            ResolvedEngine::Dense => run_noise_sweep::<StateVector>(config, engine, workers, log),
            _ => run_noise_sweep::<Tableau>(config, engine, workers, log),
        },
        ExperimentKind::SixSpinReport => run_six_spin(config, engine, log),
        ExperimentKind::EngineCrosscheck => run_crosscheck(config, engine, workers, log),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoRun {
    pub run: u64,
    pub seed: u64,
    pub attempts: u32,
    pub success: bool,
    pub outcomes: Vec<u32>,
    pub fidelity: f64,
}

fn random_amplitudes(rng: &mut ChaCha8Rng, len: usize) -> Vec<Complex64> {
    let v: Vec<Complex64> =
        (0..len).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / n).collect()
}

fn state_of(d: u32, qudits: usize, amps: Vec<Complex64>) -> Result<StateVector> {
    StateVector::from_amplitudes(qudits, d, amps)
}

/// One run of a protocol on a fresh vacuum: a random input, the protocol,
/// and the fidelity of the logical output with the ideal one.
pub fn demo_run(config: &ExperimentConfig, run: u64) -> Result<DemoRun> {
    let protocol = config.protocol.ok_or_else(|| Error::Config("protocol-demo needs a \"protocol\"".into()))?;
    let d = config.dim();
    let du = d as usize;
    let seed = trial_seed(config.seed, run);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let geom = Arc::new(LatticeGeometry::new(config.lx, config.ly, d)?);
    let mut state = CodeState::<StateVector>::ground_state(geom, &mut Sampler(&mut rng))?;
    let (mut v, mut p, data) = straddling_layout(&mut state)?;
    let theta = match &config.theta {
        Some(t) => t.clone(),
        None => (0..du).map(|_| rng.gen_range(0.0..2.0 * PI)).collect(),
    };
    let t = match protocol {
        ProtocolName::FourierTeleport => {
            let amps = random_amplitudes(&mut rng, du);
            prepare_logical_state(&mut state, &[&v], &amps)?;
            decouple_x(&mut p, &v)?;
            prepare_x_eigenstate(&mut state, &p, &mut Sampler(&mut rng))?;
            let mut t = fourier_teleport(&mut state, &v, &p, &mut Sampler(&mut rng))?;
            let s = 1.0 / (d as f64).sqrt();
            let want: Vec<Complex64> =
                (0..du).map(|a| (0..du).map(|b| omega_pow((a * b) as i64, d) * amps[b] * s).sum()).collect();
            t.fidelity = Some(logical_fidelity(&state, &[&p], &state_of(d, 1, want)?)?);
            t
        }
        ProtocolName::ControlledX => {
            decouple_x(&mut p, &v)?;
            let amps = random_amplitudes(&mut rng, du * du);
            prepare_logical_state(&mut state, &[&data, &p], &amps)?;
            let mut t = controlled_x(&mut state, &data, &mut p, &mut v, false, &mut Sampler(&mut rng))?;
            let mut want = vec![Complex64::new(0.0, 0.0); du * du];
            for a in 0..du {
                for b in 0..du {
                    want[a * du + (a + b) % du] = amps[a * du + b];
                }
            }
            t.fidelity = Some(logical_fidelity(&state, &[&data, &p], &state_of(d, 2, want)?)?);
            t
        }
        ProtocolName::BraidControlledZ => {
            let amps = random_amplitudes(&mut rng, du * du);
            prepare_logical_state(&mut state, &[&v, &data], &amps)?;
            braid_controlled_z(&mut state, &v, &data, Orientation::Clockwise)?;
            let want: Vec<Complex64> =
                amps.iter().enumerate().map(|(i, a)| omega_pow(((i / du) * (i % du)) as i64, d) * a).collect();
            let fidelity = logical_fidelity(&state, &[&v, &data], &state_of(d, 2, want)?)?;
            crate::protocols::ProtocolTranscript {
                protocol: "braid_controlled_z".into(),
                attempts: 1,
                success: true,
                fidelity: Some(fidelity),
                ..Default::default()
            }
        }
        ProtocolName::AncillaTheta => {
            let mut t = prepare_ancilla_theta(&mut state, &mut v, &mut p, &theta, &mut Sampler(&mut rng), DEFAULT_MAX_ATTEMPTS)?;
            let s = 1.0 / (d as f64).sqrt();
            let want: Vec<Complex64> = theta.iter().map(|&x| Complex64::from_polar(s, x)).collect();
            t.fidelity = Some(logical_fidelity(&state, &[&p], &state_of(d, 1, want)?)?);
            t
        }
        ProtocolName::PhaseGateRus => {
            let amps = random_amplitudes(&mut rng, du);
            prepare_logical_state(&mut state, &[&data], &amps)?;
            let mut t =
                phase_gate_rus(&mut state, &data, &mut v, &mut p, &theta, &mut Sampler(&mut rng), DEFAULT_MAX_ATTEMPTS)?;
            let want: Vec<Complex64> =
                amps.iter().zip(&theta).map(|(a, &x)| a * Complex64::from_polar(1.0, x)).collect();
            t.fidelity = Some(logical_fidelity(&state, &[&data], &state_of(d, 1, want)?)?);
            t
        }
    };
    Ok(DemoRun {
        run,
        seed,
        attempts: t.attempts,
        success: t.success,
        outcomes: t.outcomes,
        fidelity: t.fidelity.unwrap_or(0.0),
    })
}

fn run_protocol_demo(config: &ExperimentConfig, engine: ResolvedEngine, mut log: String) -> Result<RunOutput> {
    let protocol = config.protocol.expect("validated");
    let runs: Vec<DemoRun> = (0..config.trials).map(|i| demo_run(config, i)).collect::<Result<_>>()?;
    let mut csv = String::from("protocol,d,run,seed,attempts,success,fidelity\n");
    for r in &runs {
        let _ = writeln!(csv, "{},{},{},{},{},{},{}", protocol.name(), config.dim(), r.run, r.seed, r.attempts, r.success, r.fidelity);
        let _ = writeln!(
            log,
            "run {} seed {}: {} attempts {} outcomes {:?} success {} fidelity {:.12}",
            r.run,
            r.seed,
            protocol.name(),
            r.attempts,
            r.outcomes,
            r.success,
            r.fidelity
        );
    }
    let worst = runs.iter().map(|r| r.fidelity).fold(f64::INFINITY, f64::min);
    let _ = writeln!(log, "minimum fidelity {worst:.12}");
    Ok(RunOutput { csv, json: json_document(config, engine, &runs)?, transcript: log })
}

fn run_noise_sweep<E: TrialEngine>(
    config: &ExperimentConfig,
    engine: ResolvedEngine,
    workers: Option<usize>,
    mut log: String,
) -> Result<RunOutput> {
    let encoding = config.encoding();
    let runner = TrialRunner::<E>::new(encoding.clone(), splitmix64(config.seed))?;
    let _ = writeln!(log, "encoding {encoding:?}, {} spins", runner.num_spins());
    let mut rows = Vec::new();
    for (i, &p) in config.p_grid.iter().enumerate() {
        let (p_x, p_z) = match config.noise {
            NoiseChannels::Both => (p, p),
            NoiseChannels::Shift => (p, 0.0),
            NoiseChannels::Clock => (0.0, p),
        };
        let model = NoiseModel::new(p_x, p_z)?;
        let master = trial_seed(config.seed, 1 + i as u64);
        let estimate = estimate_logical_rate(&runner, &model, config.trials, master, workers)?;
        let _ = writeln!(
            log,
            "p_x={p_x} p_z={p_z}: {} trials, {} logical X, {} logical Z",
            estimate.trials, estimate.x_errors, estimate.z_errors
        );
        rows.push(RateRow { encoding: encoding.clone(), p_x, p_z, estimate, x_exponent: None, z_exponent: None });
    }
    let report = ScalingReport::from_rows(rows);
    if let Some(r) = report.rows.first() {
        let _ = writeln!(log, "fitted exponents: x {:?}, z {:?}", r.x_exponent, r.z_exponent);
    }
    Ok(RunOutput { csv: report.to_csv(), json: json_document(config, engine, &report)?, transcript: log })
}

fn run_six_spin(config: &ExperimentConfig, engine: ResolvedEngine, mut log: String) -> Result<RunOutput> {
    let code = SixSpinCode::new();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut reports = Vec::new();
    let mut csv = String::from("variant,enforced,rank,encoded_qubits,min_weight,example,hits_stored_qubit,encoded_ok\n");
    for variant in SixSpinVariant::ALL {
        let report = code.protection_report(variant, 2)?;
        let encoded_ok = match engine {
            ResolvedEngine::Dense => encoded_reads_zero::<StateVector>(&code, variant, &mut rng)?,
            _ => encoded_reads_zero::<Tableau>(&code, variant, &mut rng)?,
        };
        let enforced: Vec<String> = report.enforced.iter().map(|i| format!("S{}", i + 1)).collect();
        let opt = |v: Option<String>| v.unwrap_or_default();
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            variant.name(),
            enforced.join(" "),
            report.rank,
            report.encoded_qubits,
            opt(report.min_weight.map(|w| w.to_string())),
            opt(report.example.clone()),
            opt(report.hits_stored_qubit.map(|b| b.to_string())),
            encoded_ok
        );
        let _ = writeln!(
            log,
            "variant {}: enforced {}, minimal undetectable logical fault weight {}",
            variant.name(),
            enforced.join(" "),
            report.min_weight.map_or_else(|| format!("> {}", report.searched_weight), |w| w.to_string())
        );
        reports.push(report);
    }
    Ok(RunOutput { csv, json: json_document(config, engine, &reports)?, transcript: log })
}

fn encoded_reads_zero<E: Engine>(code: &SixSpinCode, variant: SixSpinVariant, rng: &mut ChaCha8Rng) -> Result<bool> {
    let enc = code.encode::<E>(variant, &mut Sampler(rng))?;
    for g in code.generators() {
        if enc.engine.deterministic_value(g)? != Some(0) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A gate of a random Clifford circuit on lattice spins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CliffordStep {
    Pauli(PauliOperator),
    Fourier { site: usize, inverse: bool },
    ControlledZ { control: usize, target: usize, power: i64 },
    /// `Σ ω^{k ab} Π_a(A) Π_b(B)` for a vertex stabilizer `A` and a
    /// plaquette stabilizer `B`.
    StabilizerPhase { a: PauliOperator, b: PauliOperator, power: i64 },
    Measure(PauliOperator),
}

fn order_d(mut p: PauliOperator) -> PauliOperator {
    let d = p.dim() as i64;
    for num in 0..2 * d {
        p = p.with_phase_numerator(num);
        if p.has_order_d() {
            break;
        }
    }
    p
}

fn random_pauli(geom: &LatticeGeometry, rng: &mut ChaCha8Rng, weight: usize) -> Result<PauliOperator> {
    let (n, d) = (geom.num_edges(), geom.d());
    let mut factors = Vec::new();
    while factors.len() < weight.min(n) {
        let site = rng.gen_range(0..n);
        if factors.iter().any(|&(s, _, _)| s == site) {
            continue;
        }
        let (x, z) = loop {
            let (x, z) = (rng.gen_range(0..d) as i64, rng.gen_range(0..d) as i64);
            if x != 0 || z != 0 {
                break (x, z);
            }
        };
        factors.push((site, x, z));
    }
    Ok(order_d(PauliOperator::from_sparse(n, d, &factors)?))
}

pub fn random_clifford_circuit(geom: &LatticeGeometry, depth: usize, rng: &mut ChaCha8Rng) -> Result<Vec<CliffordStep>> {
    let (n, d) = (geom.num_edges(), geom.d());
    let mut steps = Vec::with_capacity(depth);
    for _ in 0..depth {
        let step = match rng.gen_range(0..6) {
            0 => {
                let w = 1 + rng.gen_range(0..2);
                CliffordStep::Pauli(random_pauli(geom, rng, w)?)
            }
            1 => CliffordStep::Fourier { site: rng.gen_range(0..n), inverse: rng.gen() },
            2 if n > 1 => {
                let control = rng.gen_range(0..n);
                let target = (control + rng.gen_range(1..n)) % n;
                CliffordStep::ControlledZ { control, target, power: rng.gen_range(1..d) as i64 }
            }
            3 => CliffordStep::StabilizerPhase {
                a: geom.stabilizer(SiteKind::Vertex, rng.gen_range(0..geom.num_sites(SiteKind::Vertex)))?,
                b: geom.stabilizer(SiteKind::Plaquette, rng.gen_range(0..geom.num_sites(SiteKind::Plaquette)))?,
                power: rng.gen_range(1..d) as i64,
            },
            4 => {
                let kind = if rng.gen() { SiteKind::Vertex } else { SiteKind::Plaquette };
                CliffordStep::Measure(geom.stabilizer(kind, rng.gen_range(0..geom.num_sites(kind)))?)
            }
            _ => {
                let w = 1 + rng.gen_range(0..3);
                CliffordStep::Measure(random_pauli(geom, rng, w)?)
            }
        };
        steps.push(step);
    }
    Ok(steps)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CrosscheckResult {
    pub circuit: u64,
    pub measurements: u32,
    pub random_measurements: u32,
    /// First disagreement, if any.
    pub mismatch: Option<String>,
}

const CROSSCHECK_TOLERANCE: f64 = 1e-9;

/// Run one seeded circuit on both engines from `|0…0⟩`, comparing the
/// outcome distribution of every measurement and, at the end, the dense
/// expectation of every tableau stabilizer row including its phase.
pub fn crosscheck_circuit(geom: &LatticeGeometry, depth: usize, seed: u64, circuit: u64) -> Result<CrosscheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = random_clifford_circuit(geom, depth, &mut rng)?;
    let (n, d) = (geom.num_edges(), geom.d());
    let mut dense = StateVector::zero(n, d)?;
    let mut tab = Tableau::zero(n, d)?;
    let mut out = CrosscheckResult { circuit, ..Default::default() };
    for (i, step) in steps.iter().enumerate() {
        match step {
            CliffordStep::Pauli(p) => {
                Engine::apply_pauli(&mut dense, p)?;
                Engine::apply_pauli(&mut tab, p)?;
            }
            CliffordStep::Fourier { site, inverse } => {
                Engine::apply_fourier(&mut dense, *site, *inverse)?;
                Engine::apply_fourier(&mut tab, *site, *inverse)?;
            }
            CliffordStep::ControlledZ { control, target, power } => {
                Engine::apply_controlled_z(&mut dense, *control, *target, *power)?;
                Engine::apply_controlled_z(&mut tab, *control, *target, *power)?;
            }
            CliffordStep::StabilizerPhase { a, b, power } => {
                Engine::apply_controlled_phase(&mut dense, a, b, *power)?;
                Engine::apply_controlled_phase(&mut tab, a, b, *power)?;
            }
            CliffordStep::Measure(p) => {
                out.measurements += 1;
                let probs = dense.pauli_probabilities(p)?;
                let expected: Vec<f64> = match Engine::deterministic_value(&tab, p)? {
                    Some(v) => (0..d).map(|k| (k == v) as u8 as f64).collect(),
                    None => {
                        out.random_measurements += 1;
                        vec![1.0 / d as f64; d as usize]
                    }
                };
                let gap = probs.iter().zip(&expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                if gap > CROSSCHECK_TOLERANCE {
                    out.mismatch = Some(format!("step {i}: measuring {p} gives {probs:?} densely, {expected:?} on the tableau"));
                    return Ok(out);
                }
                let k = sample_index(&mut rng, &expected)?;
                let a = Engine::measure_pauli(&mut dense, p, &mut ForcedOutcomes::new([k]))?;
                let b = Engine::measure_pauli(&mut tab, p, &mut ForcedOutcomes::new([k]))?;
                if a.exponent != b.exponent {
                    out.mismatch = Some(format!("step {i}: outcomes {} and {}", a.exponent, b.exponent));
                    return Ok(out);
                }
            }
        }
    }
    for s in tab.stabilizers() {
        let e = dense.expectation(s)?;
        if (e - Complex64::new(1.0, 0.0)).norm() > CROSSCHECK_TOLERANCE {
            out.mismatch = Some(format!("stabilizer {s} has dense expectation {e}"));
            return Ok(out);
        }
    }
    Ok(out)
}

fn run_crosscheck(
    config: &ExperimentConfig,
    engine: ResolvedEngine,
    workers: Option<usize>,
    mut log: String,
) -> Result<RunOutput> {
    let geom = LatticeGeometry::new(config.lx, config.ly, config.dim())?;
    let results: Result<Vec<CrosscheckResult>> = with_workers(workers, || {
        (0..config.trials)
            .into_par_iter()
            .map(|i| crosscheck_circuit(&geom, config.depth, trial_seed(config.seed, i), i))
            .collect()
    })?;
    let results = results?;
    let disagreements: Vec<&CrosscheckResult> = results.iter().filter(|r| r.mismatch.is_some()).collect();
    let measurements: u64 = results.iter().map(|r| r.measurements as u64).sum();
    let random: u64 = results.iter().map(|r| r.random_measurements as u64).sum();
    let verdict = if disagreements.is_empty() { "agree" } else { "disagree" };
    for r in &disagreements {
        let _ = writeln!(log, "circuit {}: {}", r.circuit, r.mismatch.as_deref().unwrap_or_default());
    }
    let _ = writeln!(
        log,
        "{} circuits, {measurements} measurements ({random} random), {} disagreements: {verdict}",
        results.len(),
        disagreements.len()
    );
    let csv = format!(
        "d,Lx,Ly,circuits,depth,measurements,random_measurements,disagreements,verdict\n{},{},{},{},{},{},{},{},{}\n",
        config.dim(),
        config.lx,
        config.ly,
        results.len(),
        config.depth,
        measurements,
        random,
        disagreements.len(),
        verdict
    );
    #[derive(Serialize)]
    struct Summary<'a> {
        verdict: &'a str,
        circuits: usize,
        measurements: u64,
        random_measurements: u64,
        disagreements: Vec<&'a CrosscheckResult>,
    }
    let summary = Summary { verdict, circuits: results.len(), measurements, random_measurements: random, disagreements };
    Ok(RunOutput { csv, json: json_document(config, engine, &summary)?, transcript: log })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(text).unwrap()
    }

    #[test]
    fn parses_defaults() {
        let c = config(r#"{"kind": "engine-crosscheck"}"#);
        assert_eq!((c.dim(), c.lx, c.ly, c.engine), (3, 2, 2, EngineChoice::Auto));
        assert_eq!(config(r#"{"kind": "six-spin-report"}"#).dim(), 2);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(matches!(ExperimentConfig::from_json(r#"{"kind": "nope"}"#), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::from_json(r#"{"kind": "noise-sweep", "bogus": 1}"#), Err(Error::Config(_))));
        let c = config(r#"{"kind": "noise-sweep", "lx": 10, "ly": 4, "separation": 4}"#);
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c = config(r#"{"kind": "protocol-demo", "protocol": "fourier-teleport", "engine": "tableau"}"#);
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c = config(r#"{"kind": "six-spin-report", "d": 3}"#);
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c = config(r#"{"kind": "noise-sweep", "d": 4, "lx": 8, "ly": 3, "p_grid": [0.1]}"#);
        assert!(matches!(c.validate(), Err(Error::NotPrime(4))));
    }

    #[test]
    fn dense_capacity_is_checked() {
        let c = config(r#"{"kind": "protocol-demo", "protocol": "fourier-teleport", "lx": 4, "ly": 4}"#);
        assert!(matches!(c.validate(), Err(Error::Capacity { .. })));
        let c = config(r#"{"kind": "noise-sweep", "lx": 8, "ly": 3, "p_grid": [0.1], "engine": "dense"}"#);
        assert!(matches!(c.validate(), Err(Error::Capacity { .. })));
    }

    #[test]
    fn auto_engine_choice() {
        let demo = config(r#"{"kind": "protocol-demo", "protocol": "braid-controlled-z"}"#);
        assert_eq!(demo.validate().unwrap(), ResolvedEngine::Dense);
        let sweep = config(r#"{"kind": "noise-sweep", "lx": 8, "ly": 3, "p_grid": [0.1]}"#);
        assert_eq!(sweep.validate().unwrap(), ResolvedEngine::Tableau);
    }

    #[test]
    fn every_protocol_demo_reaches_full_fidelity() {
        for protocol in ["fourier-teleport", "controlled-x", "braid-controlled-z", "ancilla-theta", "phase-gate-rus"] {
            let c = config(&format!(r#"{{"kind": "protocol-demo", "protocol": "{protocol}", "trials": 2, "seed": 5}}"#));
            let out = run(&c, None).unwrap();
            for line in out.csv.lines().skip(1) {
                let f: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
                assert!((f - 1.0).abs() < 1e-10, "{protocol}: {line}");
            }
        }
    }

    #[test]
    fn crosscheck_agrees() {
        let c = config(r#"{"kind": "engine-crosscheck", "trials": 50, "seed": 3}"#);
        let out = run(&c, None).unwrap();
        assert!(out.csv.trim_end().ends_with(",0,agree"), "{}", out.transcript);
    }

    #[test]
    fn six_spin_report_table() {
        let out = run(&config(r#"{"kind": "six-spin-report"}"#), None).unwrap();
        let lines: Vec<&str> = out.csv.lines().collect();
        assert!(lines[1].starts_with("A,S3 S4 S5 S6,4,2,1,"));
        assert!(lines[2].starts_with("B,S1 S4 S5 S6,4,2,2,"));
        assert!(lines.iter().skip(1).all(|l| l.ends_with(",true")));
    }

    #[test]
    fn noiseless_sweep_has_zero_rates() {
        let c = config(r#"{"kind": "noise-sweep", "lx": 8, "ly": 3, "p_grid": [0.0], "trials": 20}"#);
        let out = run(&c, None).unwrap();
        let fields: Vec<&str> = out.csv.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(&fields[..8], &["3", "8", "3", "2", "1", "0", "0", "20"]);
        assert_eq!((fields[8], fields[11]), ("0", "0"));
    }

    #[test]
    fn output_is_independent_of_worker_count() {
        let c = config(r#"{"kind": "noise-sweep", "lx": 8, "ly": 3, "p_grid": [0.05, 0.1], "trials": 200, "seed": 9}"#);
        let a = run(&c, Some(1)).unwrap();
        let b = run(&c, Some(3)).unwrap();
        assert_eq!(a, b);
    }
}
