//! Acceptance suite. Prints one `[PASS]`/`[FAIL]` line per criterion and
//! exits nonzero if any fails. Pass criterion numbers as arguments to run a
//! subset, e.g. `cargo test --test acceptance -- 3 8`.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use qdouble::algebra::omega_pow;
use qdouble::harness::{run, ExperimentConfig};
use qdouble::montecarlo::{
    estimate_logical_rate, exhaustive_scan, EncodingConfig, FaultFamily, RateRow, ScalingReport, TrialRunner,
};
use qdouble::noise::NoiseModel;
use qdouble::protocols::{
    fourier_teleport, logical_fidelity, phase_gate_rus, prepare_ancilla_theta, prepare_logical_state,
    prepare_x_eigenstate, straddling_layout, LogicalQudit, DEFAULT_MAX_ATTEMPTS,
};
use qdouble::six_spin::{SixSpinCode, SixSpinVariant};
use qdouble::{
    CodeState, Engine, ForcedOutcomes, LatticeGeometry, Orientation, PauliOperator, Result, Sampler, SiteKind,
    StateVector, Tableau,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<(bool, String)>;

const FIDELITY_TOLERANCE: f64 = 1e-10;

fn report(num: u32, title: &str, limit: Duration, f: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let outcome = f();
    let elapsed = start.elapsed();
    let (ok, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    let in_time = elapsed <= limit;
    let pass = ok && in_time;
    let timing = if in_time { "" } else { " over the time limit" };
    println!(
        "[{}] {num}. {title}: {detail} ({:.2} s, limit {} s{timing})",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    pass
}

// Dense matrix oracle.

type Matrix = Vec<Complex64>;

fn matmul(a: &Matrix, b: &Matrix, dim: usize) -> Matrix {
    let mut c = vec![Complex64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        for k in 0..dim {
            let aik = a[i * dim + k];
            if aik.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..dim {
                c[i * dim + j] += aik * b[k * dim + j];
            }
        }
    }
    c
}

fn adjoint(a: &Matrix, dim: usize) -> Matrix {
    let mut c = vec![Complex64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            c[j * dim + i] = a[i * dim + j].conj();
        }
    }
    c
}

fn max_gap(a: &Matrix, b: &Matrix) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `F` on `site` of `n` qudits, site 0 most significant.
fn fourier_matrix(n: usize, d: u32, site: usize) -> Matrix {
    let du = d as usize;
    let dim = du.pow(n as u32);
    let stride = du.pow((n - 1 - site) as u32);
    let s = 1.0 / (d as f64).sqrt();
    let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];
    for col in 0..dim {
        let l = (col / stride) % du;
        for a in 0..du {
            let row = col - l * stride + a * stride;
            m[row * dim + col] = omega_pow((a * l) as i64, d) * s;
        }
    }
    m
}

fn controlled_z_matrix(n: usize, d: u32, c: usize, t: usize, k: i64) -> Matrix {
    let du = d as usize;
    let dim = du.pow(n as u32);
    let digit = |idx: usize, site: usize| (idx / du.pow((n - 1 - site) as u32)) % du;
    let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        m[i * dim + i] = omega_pow(k * (digit(i, c) * digit(i, t)) as i64, d);
    }
    m
}

fn random_operator(rng: &mut ChaCha8Rng, n: usize, d: u32) -> PauliOperator {
    let x: Vec<i64> = (0..n).map(|_| rng.gen_range(0..d) as i64).collect();
    let z: Vec<i64> = (0..n).map(|_| rng.gen_range(0..d) as i64).collect();
    PauliOperator::from_powers(d, &x, &z, 0).unwrap().with_phase_numerator(rng.gen_range(0..2 * d) as i64)
}

fn algebra_exactness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut checks = 0u64;
    for d in [2u32, 3, 5] {
        for n in 1..=3usize {
            let dim = (d as usize).pow(n as u32);
            let samples = if dim > 100 { 40 } else { 200 };
            for _ in 0..samples {
                let p = random_operator(&mut rng, n, d);
                let q = random_operator(&mut rng, n, d);
                let (mp, mq) = (p.to_matrix(), q.to_matrix());
                let pq = matmul(&mp, &mq, dim);
                worst = worst.max(max_gap(&p.compose(&q)?.to_matrix(), &pq));
                let c = p.commutation_exponent(&q)?;
                let qp = matmul(&mq, &mp, dim);
                let twisted: Matrix = qp.iter().map(|&v| v * omega_pow(c as i64, d)).collect();
                worst = worst.max(max_gap(&twisted, &pq));
                let k = rng.gen_range(-3i64..=2 * d as i64);
                let mut mk = PauliOperator::identity(n, d)?.to_matrix();
                let base = if k >= 0 { mp.clone() } else { adjoint(&mp, dim) };
                for _ in 0..k.unsigned_abs() {
                    mk = matmul(&mk, &base, dim);
                }
                worst = worst.max(max_gap(&p.power(k).to_matrix(), &mk));
                let site = rng.gen_range(0..n);
                let f = fourier_matrix(n, d, site);
                let fd = adjoint(&f, dim);
                let fwd = matmul(&matmul(&f, &mp, dim), &fd, dim);
                worst = worst.max(max_gap(&p.fourier_conjugate(site, false)?.to_matrix(), &fwd));
                let inv = matmul(&matmul(&fd, &mp, dim), &f, dim);
                worst = worst.max(max_gap(&p.fourier_conjugate(site, true)?.to_matrix(), &inv));
                checks += 5;
                if n >= 2 {
                    let c = rng.gen_range(0..n);
                    let t = (c + rng.gen_range(1..n)) % n;
                    let k = rng.gen_range(1..d) as i64;
                    let u = controlled_z_matrix(n, d, c, t, k);
                    let conj = matmul(&matmul(&u, &mp, dim), &adjoint(&u, dim), dim);
                    worst = worst.max(max_gap(&p.controlled_z_conjugate(c, t, k)?.to_matrix(), &conj));
                    checks += 1;
                }
            }
        }
    }
    Ok((worst < 1e-12, format!("{checks} operator identities, largest entry deviation {worst:.1e}")))
}

fn code_consistency() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut lattices = 0;
    let mut dense_runs = 0;
    for d in [2u32, 3, 5] {
        for lx in 2..=4 {
            for ly in 2..=4 {
                let geom = Arc::new(LatticeGeometry::new(lx, ly, d)?);
                let checks: Vec<PauliOperator> = [SiteKind::Vertex, SiteKind::Plaquette]
                    .iter()
                    .flat_map(|&k| (0..geom.num_sites(k)).map(move |s| (k, s)))
                    .map(|(k, s)| geom.stabilizer(k, s))
                    .collect::<Result<_>>()?;
                for (i, a) in checks.iter().enumerate() {
                    for b in &checks[i + 1..] {
                        if a.commutation_exponent(b)? != 0 {
                            return Ok((false, format!("{a} and {b} do not commute on {lx}x{ly}, d={d}")));
                        }
                    }
                }
                let mut t = CodeState::<Tableau>::ground_state(geom.clone(), &mut Sampler(&mut rng))?;
                if !t.extract_syndrome(&mut ForcedOutcomes::default())?.is_clean() {
                    return Ok((false, format!("tableau vacuum has a syndrome on {lx}x{ly}, d={d}")));
                }
                // The dense engine covers every lattice of up to 2^20 amplitudes.
                if qdouble::dense::required_amplitudes(geom.num_edges(), d) <= 1 << 20 {
                    let mut s = CodeState::<StateVector>::ground_state(geom.clone(), &mut Sampler(&mut rng))?;
                    if !s.extract_syndrome(&mut ForcedOutcomes::default())?.is_clean() {
                        return Ok((false, format!("dense vacuum has a syndrome on {lx}x{ly}, d={d}")));
                    }
                    dense_runs += 1;
                }
                lattices += 1;
            }
        }
    }
    Ok((
        true,
        format!("{lattices} lattices up to 4x4 for d in {{2,3,5}}, tableau on all, dense on the {dense_runs} that fit"),
    ))
}

fn braiding_phase() -> Verdict {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for d in [3u32, 5] {
        let geom = Arc::new(LatticeGeometry::new(2, 2, d)?);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let vacuum = CodeState::<StateVector>::ground_state(geom.clone(), &mut Sampler(&mut rng))?;
        let p = geom.plaquette(0, 0);
        let e = geom.plaquette_edges(p)[0];
        for h in 0..d as i64 {
            let mut with_flux = vacuum.clone();
            with_flux.apply_pauli(&geom.transport_step(SiteKind::Plaquette, p, e, h)?)?;
            let flux = with_flux.engine().deterministic_value(&geom.plaquette_stabilizer(p)?)?;
            if flux != Some(h.rem_euclid(d as i64) as u32) {
                return Ok((false, format!("flux preparation gave {flux:?}, wanted {h}")));
            }
            for g in 0..d as i64 {
                for (orientation, sign) in [(Orientation::Clockwise, 1), (Orientation::Anticlockwise, -1)] {
                    let mut moved = with_flux.clone();
                    moved.apply_pauli(&geom.loop_operator(SiteKind::Vertex, p, g, orientation)?)?;
                    let overlap = with_flux.engine().overlap(moved.engine())?;
                    worst = worst.max((overlap - omega_pow(sign * g * h, d)).norm());
                    cases += 1;
                }
            }
        }
    }
    Ok((worst < 1e-10, format!("{cases} (d, g, h, orientation) cases, largest phase error {worst:.1e}")))
}

fn random_amplitudes(rng: &mut ChaCha8Rng, len: usize) -> Vec<Complex64> {
    let v: Vec<Complex64> =
        (0..len).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / n).collect()
}

fn fourier_of(d: u32, amps: &[Complex64]) -> Vec<Complex64> {
    let du = d as usize;
    let s = 1.0 / (d as f64).sqrt();
    (0..du).map(|a| (0..du).map(|b| omega_pow((a * b) as i64, d) * amps[b] * s).sum()).collect()
}

fn single(d: u32, amps: Vec<Complex64>) -> Result<StateVector> {
    StateVector::from_amplitudes(1, d, amps)
}

fn teleport(
    state: &mut CodeState<StateVector>,
    src: &LogicalQudit,
    dst: &LogicalQudit,
    rng: &mut ChaCha8Rng,
    branch: Option<usize>,
) -> Result<()> {
    prepare_x_eigenstate(state, dst, &mut Sampler(&mut *rng))?;
    match branch {
        Some(k) => fourier_teleport(state, src, dst, &mut ForcedOutcomes::new([k]))?,
        None => fourier_teleport(state, src, dst, &mut Sampler(rng))?,
    };
    Ok(())
}

fn fourier_teleportation() -> Verdict {
    let d = 3u32;
    let geom = Arc::new(LatticeGeometry::new(2, 2, d)?);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut vacuum = CodeState::<StateVector>::ground_state(geom, &mut Sampler(&mut rng))?;
    let (v, _, data) = straddling_layout(&mut vacuum)?;
    let mut worst = 1.0f64;
    for _ in 0..50 {
        let amps = random_amplitudes(&mut rng, d as usize);
        let mut input = vacuum.clone();
        prepare_logical_state(&mut input, &[&v], &amps)?;
        let want = single(d, fourier_of(d, &amps))?;
        for branch in 0..d as usize {
            let mut s = input.clone();
            teleport(&mut s, &v, &data, &mut rng, Some(branch))?;
            worst = worst.min(logical_fidelity(&s, &[&data], &want)?);
        }
        let mut s = input.clone();
        for hop in 0..4 {
            let (src, dst) = if hop % 2 == 0 { (&v, &data) } else { (&data, &v) };
            teleport(&mut s, src, dst, &mut rng, None)?;
        }
        worst = worst.min(logical_fidelity(&s, &[&v], &single(d, amps)?)?);
    }
    Ok((
        1.0 - worst <= FIDELITY_TOLERANCE,
        format!("50 states, every branch and a 4-teleport round trip, minimum fidelity 1 - {:.1e}", 1.0 - worst),
    ))
}

fn ancilla_and_phase_gates() -> Verdict {
    let mut worst = 1.0f64;
    let mut lines = Vec::new();
    let mut ok = true;
    for d in [2u32, 3] {
        let du = d as usize;
        let geom = Arc::new(LatticeGeometry::new(2, 2, d)?);
        let mut rng = ChaCha8Rng::seed_from_u64(5 + d as u64);
        let mut vacuum = CodeState::<StateVector>::ground_state(geom, &mut Sampler(&mut rng))?;
        let (v0, p0, data) = straddling_layout(&mut vacuum)?;
        let s = 1.0 / (d as f64).sqrt();
        for _ in 0..25 {
            let theta: Vec<f64> = (0..du).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
            let (mut st, mut v, mut p) = (vacuum.clone(), v0.clone(), p0.clone());
            let t = prepare_ancilla_theta(&mut st, &mut v, &mut p, &theta, &mut Sampler(&mut rng), DEFAULT_MAX_ATTEMPTS)?;
            ok &= t.success;
            let want: Vec<Complex64> = theta.iter().map(|&x| Complex64::from_polar(s, x)).collect();
            worst = worst.min(logical_fidelity(&st, &[&p], &single(d, want)?)?);

            let amps = random_amplitudes(&mut rng, du);
            let (mut st, mut v, mut p) = (vacuum.clone(), v0.clone(), p0.clone());
            prepare_logical_state(&mut st, &[&data], &amps)?;
            let t = phase_gate_rus(&mut st, &data, &mut v, &mut p, &theta, &mut Sampler(&mut rng), DEFAULT_MAX_ATTEMPTS)?;
            ok &= t.success;
            let want: Vec<Complex64> = amps.iter().zip(&theta).map(|(a, &x)| a * Complex64::from_polar(1.0, x)).collect();
            worst = worst.min(logical_fidelity(&st, &[&data], &single(d, want)?)?);
        }
        // Per-attempt success frequency, counted over whole gates with random θ.
        let (mut attempts, mut successes) = (0u64, 0u64);
        while attempts < 10_000 {
            let theta: Vec<f64> = (0..du).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
            let (mut st, mut v, mut p) = (vacuum.clone(), v0.clone(), p0.clone());
            let t = phase_gate_rus(&mut st, &data, &mut v, &mut p, &theta, &mut Sampler(&mut rng), DEFAULT_MAX_ATTEMPTS)?;
            attempts += t.attempts as u64;
            successes += t.success as u64;
        }
        let q = 1.0 / d as f64;
        let freq = successes as f64 / attempts as f64;
        let sigma = (q * (1.0 - q) / attempts as f64).sqrt();
        let within = (freq - q).abs() <= 3.0 * sigma;
        ok &= within;
        lines.push(format!("d={d}: success frequency {freq:.4} over {attempts} attempts (1/d = {q:.4}, 3σ = {:.4})", 3.0 * sigma));
    }
    ok &= 1.0 - worst <= FIDELITY_TOLERANCE;
    Ok((ok, format!("minimum fidelity 1 - {:.1e}; {}", 1.0 - worst, lines.join("; "))))
}

fn encoding(d: u32, lx: usize, ly: usize, s: usize, rows: usize) -> EncodingConfig {
    EncodingConfig { d, lx, ly, separation: s, rows, kind: SiteKind::Vertex }
}

fn distance_and_scaling() -> Verdict {
    let mut scanned = 0u64;
    for d in [2u32, 3] {
        for s in 1..=4usize {
            let runner = TrialRunner::<Tableau>::new(encoding(d, (2 * s).max(2), 3, s, 1), 6)?;
            for w in 0..s.div_ceil(2) {
                let r = exhaustive_scan(&runner, w, FaultFamily::Any)?;
                scanned += r.faults;
                if r.x_failures > 0 {
                    return Ok((
                        false,
                        format!("d={d} s={s}: weight-{w} fault {:?} causes a logical X", r.first_x_failure),
                    ));
                }
            }
        }
    }
    let enc = encoding(3, 8, 4, 4, 1);
    let runner = TrialRunner::<Tableau>::new(enc.clone(), 7)?;
    let mut rows = Vec::new();
    for (i, p) in [0.02, 0.04, 0.08].into_iter().enumerate() {
        let model = NoiseModel::new(p, p)?;
        let estimate = estimate_logical_rate(&runner, &model, 100_000, 70 + i as u64, None)?;
        rows.push(RateRow { encoding: enc.clone(), p_x: p, p_z: p, estimate, x_exponent: None, z_exponent: None });
    }
    let report = ScalingReport::from_rows(rows);
    let rates: Vec<String> = report.rows.iter().map(|r| format!("{:.2e}", r.estimate.x_interval().0)).collect();
    let exponent = report.rows[0].x_exponent;
    let ok = exponent.map_or(false, |e| (e - 2.0).abs() <= 0.5);
    Ok((
        ok,
        format!(
            "{scanned} faults below half the separation all corrected; s=4 X rates {} at p = 0.02, 0.04, 0.08 (1e5 trials each), fitted exponent {}",
            rates.join(", "),
            exponent.map_or("none".into(), |e| format!("{e:.3}"))
        ),
    ))
}

fn repetition_code() -> Verdict {
    let (d, lx, ly, s) = (3u32, 8usize, 6usize, 4usize);
    let single = TrialRunner::<Tableau>::new(encoding(d, lx, ly, s, 1), 8)?;
    let split = TrialRunner::<Tableau>::new(encoding(d, lx, ly, s, 2), 8)?;
    let a = exhaustive_scan(&single, 2, FaultFamily::Shift)?;
    let b = exhaustive_scan(&split, 2, FaultFamily::Shift)?;
    let model = NoiseModel::new(0.05, 0.05)?;
    let trials = 40_000;
    let ra = estimate_logical_rate(&single, &model, trials, 80, None)?;
    let rb = estimate_logical_rate(&split, &model, trials, 81, None)?;
    let (za, za_lo, za_hi) = ra.z_interval();
    let (zb, zb_lo, zb_hi) = rb.z_interval();
    let ok = a.z_failures > 0 && b.z_failures == 0 && zb_hi < za_lo;
    Ok((
        ok,
        format!(
            "weight-2 flux faults defeating the hole: N=1 {} of {} (e.g. {}), N=2 {} of {}; Z rate at p=0.05 N=1 {za:.4} [{za_lo:.4}, {za_hi:.4}], N=2 {zb:.4} [{zb_lo:.4}, {zb_hi:.4}]",
            a.z_failures,
            a.faults,
            a.first_z_failure.map_or("none".into(), |f| f.to_string()),
            b.z_failures,
            b.faults
        ),
    ))
}

fn six_spin_code() -> Verdict {
    let code = SixSpinCode::new();
    let a = code.protection_report(SixSpinVariant::A, 2)?;
    let b = code.protection_report(SixSpinVariant::B, 2)?;
    let full = code.protection_report(SixSpinVariant::Full, 2)?;
    let ok = a.min_weight == Some(1) && b.min_weight == Some(2) && full.min_weight.map_or(true, |w| w >= 2);
    Ok((ok, format!("minimal weights A {:?}, B {:?}, fully enforced {:?}", a.min_weight, b.min_weight, full.min_weight)))
}

fn engine_agreement() -> Verdict {
    let config = ExperimentConfig::from_json(r#"{"kind": "engine-crosscheck", "d": 3, "trials": 10000, "seed": 9}"#)?;
    let out = run(&config, None)?;
    let summary = out.csv.lines().nth(1).unwrap_or_default().to_string();
    Ok((summary.ends_with(",0,agree"), format!("d,Lx,Ly,circuits,depth,measurements,random,disagreements,verdict = {summary}")))
}

fn reproducibility() -> Verdict {
    let config = ExperimentConfig::from_json(
        r#"{"kind": "noise-sweep", "d": 3, "lx": 6, "ly": 3, "separation": 3, "p_grid": [0.03, 0.06, 0.12], "trials": 2000, "seed": 10}"#,
    )?;
    let dirs = [tempfile::tempdir()?, tempfile::tempdir()?, tempfile::tempdir()?];
    for (dir, workers) in dirs.iter().zip([1usize, 2, 4]) {
        run(&config, Some(workers))?.write_to(dir.path())?;
    }
    let read = |i: usize, name: &str| std::fs::read(dirs[i].path().join(name));
    let mut identical = true;
    for name in ["results.csv", "results.json", "transcript.log"] {
        let first = read(0, name)?;
        identical &= (1..3).map(|i| read(i, name)).all(|r| r.map_or(false, |b| b == first));
    }
    Ok((identical, "noise-sweep outputs byte-identical with 1, 2 and 4 workers".into()))
}

fn main() {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let selected = |n: u32| wanted.is_empty() || wanted.contains(&n);
    let secs = Duration::from_secs;
    let criteria: [(u32, &str, Duration, fn() -> Verdict); 10] = [
        (1, "algebra exactness", secs(10), algebra_exactness),
        (2, "code consistency", secs(10), code_consistency),
        (3, "braiding phase", secs(60), braiding_phase),
        (4, "Fourier teleportation", secs(60), fourier_teleportation),
        (5, "ancilla and phase gates", secs(300), ancilla_and_phase_gates),
        (6, "distance and scaling", secs(900), distance_and_scaling),
        (7, "repetition code", secs(600), repetition_code),
        (8, "six-spin code", secs(1), six_spin_code),
        (9, "engine agreement", secs(300), engine_agreement),
        (10, "reproducibility", secs(300), reproducibility),
    ];
    let mut failed = 0;
    for (num, title, limit, f) in criteria {
        if selected(num) && !report(num, title, limit, f) {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
