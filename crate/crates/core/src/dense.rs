//! Exact state-vector simulation of `n` qudits.
//!
//! Basis index `Σ_i g_i d^{n-1-i}`: site 0 is the most significant digit.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{check_dim, modulo, omega_pow, PauliOperator};
use crate::engine::{require_order_d, Engine, OutcomeSelector, PauliMeasurementOutcome};
use crate::error::{Error, Result};

/// Maximum number of amplitudes a dense state may hold.
pub const DENSE_CAPACITY: u128 = 1 << 24;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    d: u32,
    amps: Vec<Complex64>,
}

/// Outcome of a single-site measurement in an explicit basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub site: usize,
    pub basis_label: String,
    pub outcome: usize,
    pub probability: f64,
}

#[derive(Serialize, Deserialize)]
struct StateDump {
    n: usize,
    d: u32,
    amplitudes: Vec<f64>,
}

pub fn required_amplitudes(n: usize, d: u32) -> u128 {
    (d as u128).checked_pow(n as u32).unwrap_or(u128::MAX)
}

pub fn check_capacity(n: usize, d: u32) -> Result<usize> {
    let required = required_amplitudes(n, d);
    if required > DENSE_CAPACITY {
        return Err(Error::Capacity { required, capacity: DENSE_CAPACITY });
    }
    Ok(required as usize)
}

impl StateVector {
    /// Computational basis state with the given digits.
    pub fn basis_state(d: u32, digits: &[u32]) -> Result<Self> {
        check_dim(d)?;
        let len = check_capacity(digits.len(), d)?;
        let mut amps = vec![ZERO; len];
        let mut idx = 0usize;
        for &g in digits {
            if g >= d {
                return Err(Error::InvalidIndex { index: g as usize, limit: d as usize });
            }
            idx = idx * d as usize + g as usize;
        }
        amps[idx] = Complex64::new(1.0, 0.0);
        Ok(Self { n: digits.len(), d, amps })
    }

    pub fn zero(n: usize, d: u32) -> Result<Self> {
        Self::basis_state(d, &vec![0; n])
    }

    /// Wrap and normalize an amplitude vector.
    pub fn from_amplitudes(n: usize, d: u32, amps: Vec<Complex64>) -> Result<Self> {
        check_dim(d)?;
        let len = check_capacity(n, d)?;
        if amps.len() != len {
            return Err(Error::DimensionMismatch(format!(
                "expected {} amplitudes, got {}",
                len,
                amps.len()
            )));
        }
        let mut s = Self { n, d, amps };
        let norm = s.norm();
        if norm < 1e-300 {
            return Err(Error::DimensionMismatch("zero vector is not a state".into()));
        }
        s.scale(1.0 / norm);
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn scale(&mut self, s: f64) {
        for a in &mut self.amps {
            *a *= s;
        }
    }

    fn stride(&self, site: usize) -> usize {
        (self.d as usize).pow((self.n - 1 - site) as u32)
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n {
            Err(Error::InvalidIndex { index: site, limit: self.n })
        } else {
            Ok(())
        }
    }

    fn check_operator(&self, p: &PauliOperator) -> Result<()> {
        if p.n() != self.n || p.dim() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "operator on {} qudits of dimension {} applied to state of {} qudits of dimension {}",
                p.n(),
                p.dim(),
                self.n,
                self.d
            )));
        }
        Ok(())
    }

    fn check_same_space(&self, other: &Self) -> Result<()> {
        if self.n != other.n || self.d != other.d {
            return Err(Error::DimensionMismatch(format!(
                "states on ({}, {}) and ({}, {})",
                self.n, self.d, other.n, other.d
            )));
        }
        Ok(())
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &Self) -> Result<Complex64> {
        self.check_same_space(other)?;
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|⟨self|other⟩|²`, insensitive to global phase.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        Ok(self.overlap(other)?.norm_sqr())
    }

    /// Image of `self` under `p` as a new vector (not necessarily normalized
    /// if `p` is, but Paulis are unitary so the norm is kept).
    pub fn pauli_image(&self, p: &PauliOperator) -> Result<Self> {
        self.check_operator(p)?;
        let d = self.d as usize;
        let support: Vec<(usize, usize, u32)> = p
            .support()
            .into_iter()
            .map(|i| (self.stride(i), p.x_power(i) as usize, p.z_power(i)))
            .collect();
        let global = p.phase().to_complex();
        let roots: Vec<Complex64> = (0..self.d).map(|k| omega_pow(k as i64, self.d)).collect();
        let mut out = vec![ZERO; self.amps.len()];
        for (idx, &a) in self.amps.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            let mut target = idx;
            let mut zexp = 0u32;
            for &(stride, x, z) in &support {
                let g = (idx / stride) % d;
                zexp += z * g as u32;
                let shifted = (g + x) % d;
                target = target + shifted * stride - g * stride;
            }
            out[target] = a * global * roots[(zexp % self.d) as usize];
        }
        Ok(Self { n: self.n, d: self.d, amps: out })
    }

    /// `⟨ψ|P|ψ⟩`.
    pub fn expectation(&self, p: &PauliOperator) -> Result<Complex64> {
        self.overlap(&self.pauli_image(p)?)
    }

    /// Replace the state by `Σ_j c_j P_j |ψ⟩`, renormalized. Returns the norm
    /// before renormalization.
    pub fn apply_linear_combination(&mut self, terms: &[(Complex64, PauliOperator)]) -> Result<f64> {
        let mut acc = vec![ZERO; self.amps.len()];
        for (c, p) in terms {
            let img = self.pauli_image(p)?;
            for (t, a) in acc.iter_mut().zip(&img.amps) {
                *t += c * a;
            }
        }
        let norm = acc.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(Error::ZeroProbabilityBranch(0));
        }
        self.amps = acc;
        self.scale(1.0 / norm);
        Ok(norm)
    }

    /// Eigenvalue exponent of a diagonal order-`d` Pauli on each basis index.
    fn diagonal_exponents(&self, p: &PauliOperator) -> Vec<u32> {
        let d = self.d as usize;
        let base = p.phase_numerator() / 2;
        let support: Vec<(usize, u32)> =
            p.support().into_iter().map(|i| (self.stride(i), p.z_power(i))).collect();
        (0..self.amps.len())
            .map(|idx| {
                let mut e = base;
                for &(stride, z) in &support {
                    e += z * ((idx / stride) % d) as u32;
                }
                e % self.d
            })
            .collect()
    }

    /// Components `Π_a ψ` for every eigenvalue `ω^a` of `p`.
    fn eigen_components(&self, p: &PauliOperator) -> Result<Vec<Vec<Complex64>>> {
        require_order_d(p)?;
        let d = self.d as usize;
        let mut comps = vec![vec![ZERO; self.amps.len()]; d];
        if p.is_identity_up_to_phase() || p.support().iter().all(|&i| p.x_power(i) == 0) {
            let exps = self.diagonal_exponents(p);
            for (idx, (&a, &e)) in self.amps.iter().zip(&exps).enumerate() {
                comps[e as usize][idx] = a;
            }
            return Ok(comps);
        }
        // Π_a = (1/d) Σ_j ω^{-aj} P^j
        let mut v = self.clone();
        let inv_d = 1.0 / d as f64;
        for j in 0..d {
            for (a, comp) in comps.iter_mut().enumerate() {
                let w = omega_pow(-((a * j) as i64), self.d) * inv_d;
                for (c, x) in comp.iter_mut().zip(&v.amps) {
                    *c += w * x;
                }
            }
            if j + 1 < d {
                v = v.pauli_image(p)?;
            }
        }
        Ok(comps)
    }

    /// Born probabilities of the `d` eigenvalues of an order-`d` Pauli.
    pub fn pauli_probabilities(&self, p: &PauliOperator) -> Result<Vec<f64>> {
        self.check_operator(p)?;
        Ok(self
            .eigen_components(p)?
            .iter()
            .map(|c| c.iter().map(|a| a.norm_sqr()).sum())
            .collect())
    }

    /// Projective measurement in an explicit single-site basis. `basis[k][g]`
    /// is the amplitude of `|g⟩` in the `k`-th basis vector.
    pub fn measure_in_basis(
        &mut self,
        site: usize,
        basis: &[Vec<Complex64>],
        label: &str,
        selector: &mut dyn OutcomeSelector,
    ) -> Result<MeasurementRecord> {
        self.check_site(site)?;
        check_orthonormal(basis, self.d as usize)?;
        let d = self.d as usize;
        let stride = self.stride(site);
        let block = stride * d;
        // Coefficients ⟨b_k|ψ_rest⟩ for every configuration of the other sites.
        let mut probs = vec![0.0; d];
        for (k, b) in basis.iter().enumerate() {
            for hi in (0..self.amps.len()).step_by(block) {
                for lo in 0..stride {
                    let c: Complex64 =
                        (0..d).map(|g| b[g].conj() * self.amps[hi + g * stride + lo]).sum();
                    probs[k] += c.norm_sqr();
                }
            }
        }
        let outcome = selector.select(&probs)?;
        let b = &basis[outcome];
        for hi in (0..self.amps.len()).step_by(block) {
            for lo in 0..stride {
                let c: Complex64 = (0..d).map(|g| b[g].conj() * self.amps[hi + g * stride + lo]).sum();
                for g in 0..d {
                    self.amps[hi + g * stride + lo] = b[g] * c;
                }
            }
        }
        let norm = self.norm();
        self.scale(1.0 / norm);
        Ok(MeasurementRecord {
            site,
            basis_label: label.to_string(),
            outcome,
            probability: probs[outcome],
        })
    }

    /// Second Rényi entropy `-ln Tr ρ_A²` of the reduced state on `sites`.
    pub fn renyi2_entropy(&self, sites: &[usize]) -> Result<f64> {
        for &s in sites {
            self.check_site(s)?;
        }
        let d = self.d as usize;
        let mut in_a = vec![false; self.n];
        for &s in sites {
            in_a[s] = true;
        }
        let rest: Vec<usize> = (0..self.n).filter(|&i| !in_a[i]).collect();
        let mut a_sites: Vec<usize> = sites.to_vec();
        a_sites.sort_unstable();
        a_sites.dedup();
        let dim_a = d.pow(a_sites.len() as u32);
        let dim_b = d.pow(rest.len() as u32);
        // M[a][b] = ψ(a, b)
        let mut m = vec![ZERO; dim_a * dim_b];
        for (idx, &amp) in self.amps.iter().enumerate() {
            let digit = |i: usize| (idx / self.stride(i)) % d;
            let ia = a_sites.iter().fold(0, |acc, &i| acc * d + digit(i));
            let ib = rest.iter().fold(0, |acc, &i| acc * d + digit(i));
            m[ia * dim_b + ib] = amp;
        }
        let mut purity = 0.0;
        for i in 0..dim_a {
            for j in 0..dim_a {
                let rho: Complex64 =
                    (0..dim_b).map(|b| m[i * dim_b + b] * m[j * dim_b + b].conj()).sum();
                purity += rho.norm_sqr();
            }
        }
        Ok(-purity.ln())
    }

    /// JSON dump: `n`, `d`, interleaved real/imaginary amplitudes.
    pub fn to_json(&self) -> Result<String> {
        let dump = StateDump {
            n: self.n,
            d: self.d,
            amplitudes: self.amps.iter().flat_map(|a| [a.re, a.im]).collect(),
        };
        Ok(serde_json::to_string(&dump)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dump: StateDump = serde_json::from_str(text)?;
        let amps = dump.amplitudes.chunks(2).map(|c| Complex64::new(c[0], *c.get(1).unwrap_or(&0.0))).collect();
        Self::from_amplitudes(dump.n, dump.d, amps)
    }

    pub fn apply_pauli(&mut self, p: &PauliOperator) -> Result<()> {
        *self = self.pauli_image(p)?;
        Ok(())
    }

    /// Single-site `F|g⟩ = Σ_h ω^{gh}|h⟩/√d`, or its inverse.
    pub fn apply_fourier(&mut self, site: usize, inverse: bool) -> Result<()> {
        self.check_site(site)?;
        let d = self.d as usize;
        let sign = if inverse { -1 } else { 1 };
        let s = 1.0 / (d as f64).sqrt();
        let kernel: Vec<Complex64> =
            (0..d * d).map(|gh| omega_pow(sign * ((gh / d) * (gh % d)) as i64, self.d) * s).collect();
        let stride = self.stride(site);
        let block = stride * d;
        let mut buf = vec![ZERO; d];
        for hi in (0..self.amps.len()).step_by(block) {
            for lo in 0..stride {
                for (h, out) in buf.iter_mut().enumerate() {
                    *out = (0..d).map(|g| kernel[h * d + g] * self.amps[hi + g * stride + lo]).sum();
                }
                for (g, &v) in buf.iter().enumerate() {
                    self.amps[hi + g * stride + lo] = v;
                }
            }
        }
        Ok(())
    }

    pub fn apply_controlled_z_power(&mut self, control: usize, target: usize, k: i64) -> Result<()> {
        self.check_site(control)?;
        self.check_site(target)?;
        if control == target {
            return Err(Error::SameSite(control));
        }
        let d = self.d as usize;
        let (sc, st) = (self.stride(control), self.stride(target));
        let k = modulo(k, self.d) as usize;
        for (idx, a) in self.amps.iter_mut().enumerate() {
            let e = k * ((idx / sc) % d) * ((idx / st) % d);
            if e % d != 0 {
                *a *= omega_pow(e as i64, self.d);
            }
        }
        Ok(())
    }

    /// `Σ_b A^{kb} Π_b(B)`, which equals `Σ_{a,b} ω^{kab} Π_a(A)Π_b(B)`.
    pub fn apply_controlled_phase(&mut self, a: &PauliOperator, b: &PauliOperator, k: i64) -> Result<()> {
        self.check_operator(a)?;
        self.check_operator(b)?;
        require_order_d(a)?;
        require_order_d(b)?;
        if a.commutation_exponent(b)? != 0 {
            return Err(Error::NonCommuting(format!("{a} and {b}")));
        }
        let a_diag = a.support().iter().all(|&i| a.x_power(i) == 0);
        let (a, b) = if a_diag { (b, a) } else { (a, b) };
        let comps = self.eigen_components(b)?;
        let mut out = vec![ZERO; self.amps.len()];
        for (bv, comp) in comps.into_iter().enumerate() {
            let power = a.power(k * bv as i64);
            let piece = Self { n: self.n, d: self.d, amps: comp };
            let img = piece.pauli_image(&power)?;
            for (o, x) in out.iter_mut().zip(&img.amps) {
                *o += x;
            }
        }
        self.amps = out;
        Ok(())
    }

    pub fn measure_pauli(
        &mut self,
        p: &PauliOperator,
        selector: &mut dyn OutcomeSelector,
    ) -> Result<PauliMeasurementOutcome> {
        self.check_operator(p)?;
        let comps = self.eigen_components(p)?;
        let probs: Vec<f64> = comps.iter().map(|c| c.iter().map(|a| a.norm_sqr()).sum()).collect();
        let k = selector.select(&probs)?;
        let pk = probs[k];
        self.amps = comps.into_iter().nth(k).expect("outcome within range");
        self.scale(1.0 / pk.sqrt());
        Ok(PauliMeasurementOutcome {
            exponent: k as u32,
            was_deterministic: pk > 1.0 - 1e-9,
            probability: pk,
        })
    }
}

/// Rejects bases that are not `d` orthonormal vectors of length `d`.
pub fn check_orthonormal(basis: &[Vec<Complex64>], d: usize) -> Result<()> {
    if basis.len() != d || basis.iter().any(|b| b.len() != d) {
        return Err(Error::DimensionMismatch(format!("basis must hold {d} vectors of length {d}")));
    }
    let mut worst: f64 = 0.0;
    for (i, u) in basis.iter().enumerate() {
        for (j, v) in basis.iter().enumerate() {
            let ip: Complex64 = u.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
            let expected = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((ip - expected).norm());
        }
    }
    if worst > 1e-10 {
        return Err(Error::NotOrthonormal(worst));
    }
    Ok(())
}

/// Computational basis `{|0⟩, …, |d-1⟩}`.
pub fn computational_basis(d: usize) -> Vec<Vec<Complex64>> {
    (0..d)
        .map(|k| (0..d).map(|g| if g == k { Complex64::new(1.0, 0.0) } else { ZERO }).collect())
        .collect()
}

/// Fourier basis `{|k~⟩}` with `|k~⟩ = Σ_h ω^{kh}|h⟩/√d`.
pub fn fourier_basis(d: usize) -> Vec<Vec<Complex64>> {
    let s = 1.0 / (d as f64).sqrt();
    (0..d)
        .map(|k| (0..d).map(|h| omega_pow((k * h) as i64, d as u32) * s).collect())
        .collect()
}

impl Engine for StateVector {
    fn zero_state(n: usize, d: u32) -> Result<Self> {
        Self::zero(n, d)
    }

    fn num_sites(&self) -> usize {
        self.n
    }

    fn dim(&self) -> u32 {
        self.d
    }

    fn apply_pauli(&mut self, p: &PauliOperator) -> Result<()> {
        StateVector::apply_pauli(self, p)
    }

    fn apply_fourier(&mut self, site: usize, inverse: bool) -> Result<()> {
        StateVector::apply_fourier(self, site, inverse)
    }

    fn apply_controlled_phase(&mut self, a: &PauliOperator, b: &PauliOperator, k: i64) -> Result<()> {
        StateVector::apply_controlled_phase(self, a, b, k)
    }

    fn measure_pauli(
        &mut self,
        p: &PauliOperator,
        selector: &mut dyn OutcomeSelector,
    ) -> Result<PauliMeasurementOutcome> {
        StateVector::measure_pauli(self, p, selector)
    }

    fn deterministic_value(&self, p: &PauliOperator) -> Result<Option<u32>> {
        let probs = self.pauli_probabilities(p)?;
        Ok(probs.iter().position(|&q| q > 1.0 - 1e-9).map(|k| k as u32))
    }

    fn apply_controlled_z(&mut self, control: usize, target: usize, k: i64) -> Result<()> {
        self.apply_controlled_z_power(control, target, k)
    }
}
