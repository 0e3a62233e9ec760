//! Arithmetic over Z_d, roots of unity, and the n-qudit generalized Pauli group.
//!
//! A Pauli operator is stored in normal order: `phase · Π_i X_i^{x_i} Z_i^{z_i}`
//! with every X factor to the left of the Z factor on the same site. The clock
//! and shift matrices follow `X|g> = |g+1>`, `Z|g> = ω^g |g>`, so `Z X = ω X Z`.
//! Phases are kept as numerators modulo `2d` of `e^{iπ·num/d}`, which leaves room
//! for the sign that appears at even `d` (for example `(XZ)^2 = -I` at `d = 2`).

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported local dimension.
pub const MAX_DIM: u32 = 127;

pub fn check_dim(d: u32) -> Result<()> {
    if (2..=MAX_DIM).contains(&d) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(d))
    }
}

pub fn is_prime(d: u32) -> bool {
    d >= 2 && (2..d).take_while(|k| k * k <= d).all(|k| d % k != 0)
}

/// Reduce any integer into `[0, m)`.
#[inline]
pub fn modulo(a: i64, m: u32) -> u32 {
    a.rem_euclid(m as i64) as u32
}

/// Multiplicative inverse modulo a prime `p`; `None` when `a ≡ 0`.
pub fn inverse_mod(a: i64, p: u32) -> Option<u32> {
    let a = modulo(a, p);
    if a == 0 {
        return None;
    }
    let (mut r0, mut r1) = (p as i64, a as i64);
    let (mut t0, mut t1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    (r0 == 1).then(|| modulo(t0, p))
}

/// `ω^k` as a complex number, `ω = e^{2πi/d}`.
pub fn omega_pow(k: i64, d: u32) -> Complex64 {
    let k = modulo(k, d);
    Complex64::from_polar(1.0, 2.0 * PI * k as f64 / d as f64)
}

/// An element of Z_d.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupElement {
    value: u32,
    modulus: u32,
}

impl GroupElement {
    pub fn new(value: i64, modulus: u32) -> Self {
        assert!(modulus >= 1, "modulus must be positive");
        Self { value: modulo(value, modulus), modulus }
    }

    pub fn zero(modulus: u32) -> Self {
        Self::new(0, modulus)
    }

    pub fn value(self) -> u32 {
        self.value
    }

    pub fn modulus(self) -> u32 {
        self.modulus
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    /// Representative in `(-d/2, d/2]`, handy for distances and readable logs.
    pub fn signed(self) -> i64 {
        let v = self.value as i64;
        let m = self.modulus as i64;
        if 2 * v > m {
            v - m
        } else {
            v
        }
    }

    fn same_group(self, other: Self) {
        assert_eq!(self.modulus, other.modulus, "elements of different groups");
    }
}

impl std::ops::Add for GroupElement {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.same_group(rhs);
        Self::new(self.value as i64 + rhs.value as i64, self.modulus)
    }
}

impl std::ops::Sub for GroupElement {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.same_group(rhs);
        Self::new(self.value as i64 - rhs.value as i64, self.modulus)
    }
}

impl std::ops::Neg for GroupElement {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-(self.value as i64), self.modulus)
    }
}

impl std::ops::Mul<i64> for GroupElement {
    type Output = Self;
    fn mul(self, k: i64) -> Self {
        Self::new(self.value as i64 * k, self.modulus)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// The phase `e^{iπ·numerator/d}`; `ω^k` has numerator `2k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PhaseExponent {
    numerator: u32,
    d: u32,
}

impl PhaseExponent {
    pub fn new(numerator: i64, d: u32) -> Self {
        Self { numerator: modulo(numerator, 2 * d), d }
    }

    pub fn omega(k: i64, d: u32) -> Self {
        Self::new(2 * k, d)
    }

    pub fn one(d: u32) -> Self {
        Self::new(0, d)
    }

    pub fn numerator(self) -> u32 {
        self.numerator
    }

    pub fn dim(self) -> u32 {
        self.d
    }

    /// The power of ω when the phase is a d-th root of unity.
    pub fn omega_exponent(self) -> Option<u32> {
        (self.numerator % 2 == 0).then_some(self.numerator / 2)
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(1.0, PI * self.numerator as f64 / self.d as f64)
    }
}

impl std::ops::Mul for PhaseExponent {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        assert_eq!(self.d, rhs.d, "phases of different dimensions");
        Self::new(self.numerator as i64 + rhs.numerator as i64, self.d)
    }
}

/// A generalized Pauli operator on `n` qudits of dimension `d`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliOperator {
    d: u32,
    x: Vec<u8>,
    z: Vec<u8>,
    phase: u32,
}

impl PauliOperator {
    pub fn identity(n: usize, d: u32) -> Result<Self> {
        check_dim(d)?;
        Ok(Self { d, x: vec![0; n], z: vec![0; n], phase: 0 })
    }

    /// `ω^{phase_omega} · Π X^{x_i} Z^{z_i}`; powers may be any integers.
    pub fn from_powers(d: u32, x: &[i64], z: &[i64], phase_omega: i64) -> Result<Self> {
        check_dim(d)?;
        if x.len() != z.len() {
            return Err(Error::DimensionMismatch(format!(
                "x has {} entries, z has {}",
                x.len(),
                z.len()
            )));
        }
        Ok(Self {
            d,
            x: x.iter().map(|&a| modulo(a, d) as u8).collect(),
            z: z.iter().map(|&b| modulo(b, d) as u8).collect(),
            phase: modulo(2 * phase_omega, 2 * d),
        })
    }

    /// `X^x Z^z` acting on a single site of an `n`-site register.
    pub fn single(n: usize, d: u32, site: usize, x: i64, z: i64) -> Result<Self> {
        let mut p = Self::identity(n, d)?;
        p.set_site(site, x, z)?;
        Ok(p)
    }

    /// Product of single-site factors `(site, x, z)`; repeated sites multiply in order.
    pub fn from_sparse(n: usize, d: u32, factors: &[(usize, i64, i64)]) -> Result<Self> {
        let mut p = Self::identity(n, d)?;
        for &(site, x, z) in factors {
            let f = Self::single(n, d, site, x, z)?;
            p = p.compose(&f)?;
        }
        Ok(p)
    }

    pub fn x_on(n: usize, d: u32, site: usize, power: i64) -> Result<Self> {
        Self::single(n, d, site, power, 0)
    }

    pub fn z_on(n: usize, d: u32, site: usize, power: i64) -> Result<Self> {
        Self::single(n, d, site, 0, power)
    }

    fn set_site(&mut self, site: usize, x: i64, z: i64) -> Result<()> {
        if site >= self.n() {
            return Err(Error::InvalidIndex { index: site, limit: self.n() });
        }
        self.x[site] = modulo(x, self.d) as u8;
        self.z[site] = modulo(z, self.d) as u8;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn dim(&self) -> u32 {
        self.d
    }

    pub fn x_power(&self, site: usize) -> u32 {
        self.x[site] as u32
    }

    pub fn z_power(&self, site: usize) -> u32 {
        self.z[site] as u32
    }

    pub fn x_powers(&self) -> Vec<GroupElement> {
        self.x.iter().map(|&a| GroupElement::new(a as i64, self.d)).collect()
    }

    pub fn z_powers(&self) -> Vec<GroupElement> {
        self.z.iter().map(|&b| GroupElement::new(b as i64, self.d)).collect()
    }

    pub fn phase(&self) -> PhaseExponent {
        PhaseExponent::new(self.phase as i64, self.d)
    }

    pub fn phase_numerator(&self) -> u32 {
        self.phase
    }

    /// Same operator with the phase replaced by `e^{iπ·numerator/d}`.
    pub fn with_phase_numerator(mut self, numerator: i64) -> Self {
        self.phase = modulo(numerator, 2 * self.d);
        self
    }

    /// Multiply by `ω^k`.
    pub fn times_omega(mut self, k: i64) -> Self {
        self.phase = modulo(self.phase as i64 + 2 * k, 2 * self.d);
        self
    }

    pub(crate) fn add_omega(&mut self, k: i64) {
        self.phase = modulo(self.phase as i64 + 2 * k, 2 * self.d);
    }

    /// The operator with its phase stripped.
    pub fn unphased(&self) -> Self {
        self.clone().with_phase_numerator(0)
    }

    pub fn is_identity(&self) -> bool {
        self.phase == 0 && self.is_identity_up_to_phase()
    }

    pub fn is_identity_up_to_phase(&self) -> bool {
        self.x.iter().chain(self.z.iter()).all(|&a| a == 0)
    }

    /// Same X/Z powers on every site, phases ignored.
    pub fn same_support_powers(&self, other: &Self) -> bool {
        self.d == other.d && self.x == other.x && self.z == other.z
    }

    /// Sites on which the operator acts nontrivially.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.x[i] != 0 || self.z[i] != 0).collect()
    }

    pub fn weight(&self) -> usize {
        (0..self.n()).filter(|&i| self.x[i] != 0 || self.z[i] != 0).count()
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.n() != other.n() || self.d != other.d {
            return Err(Error::DimensionMismatch(format!(
                "operator on {} qudits of dimension {} vs {} qudits of dimension {}",
                self.n(),
                self.d,
                other.n(),
                other.d
            )));
        }
        Ok(())
    }

    /// The normal-ordered product `self · other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.mul_assign_unchecked(other);
        Ok(out)
    }

    /// In-place `self ← self · other` for operators already known to be compatible.
    pub(crate) fn mul_assign_unchecked(&mut self, other: &Self) {
        let d = self.d;
        let mut reorder: u64 = 0;
        for i in 0..self.x.len() {
            let (zp, xq) = (self.z[i] as u64, other.x[i] as u64);
            reorder += zp * xq;
            self.x[i] = ((self.x[i] as u32 + other.x[i] as u32) % d) as u8;
            self.z[i] = ((self.z[i] as u32 + other.z[i] as u32) % d) as u8;
        }
        let m = 2 * d as u64;
        self.phase = ((self.phase as u64 + other.phase as u64 + 2 * (reorder % d as u64)) % m) as u32;
    }

    /// In-place `self ← self · other^k`, touching only `other`'s support.
    pub(crate) fn mul_assign_power_sparse(&mut self, other: &Self, support: &[usize], k: u32) {
        if k == 0 {
            return;
        }
        let d = self.d as u64;
        // other^k = ω^{Σ ab·k(k-1)/2} X^{ka} Z^{kb} · phase^k
        let kk = k as u64;
        let mut extra: u64 = 0;
        for &i in support {
            let (a, b) = (other.x[i] as u64, other.z[i] as u64);
            let xa = (kk * a) % d;
            let zb = (kk * b) % d;
            extra += (a * b % d) * ((kk * (kk.wrapping_sub(1)) / 2) % d);
            extra += self.z[i] as u64 * xa;
            self.x[i] = ((self.x[i] as u64 + xa) % d) as u8;
            self.z[i] = ((self.z[i] as u64 + zb) % d) as u8;
        }
        let m = 2 * d;
        self.phase = ((self.phase as u64 + other.phase as u64 * kk % m + 2 * (extra % d)) % m) as u32;
    }

    /// Exponent `c` in `P·Q = ω^c Q·P`.
    pub fn commutation_exponent(&self, other: &Self) -> Result<u32> {
        self.check_compatible(other)?;
        Ok(self.commutation_unchecked(other))
    }

    pub(crate) fn commutation_unchecked(&self, other: &Self) -> u32 {
        let d = self.d as i64;
        let mut c: i64 = 0;
        for i in 0..self.x.len() {
            c += self.z[i] as i64 * other.x[i] as i64 - self.x[i] as i64 * other.z[i] as i64;
        }
        modulo(c % d, self.d)
    }

    /// Commutation exponent evaluated only over the given sites (which must
    /// contain the support of one of the two operators).
    pub(crate) fn commutation_on(&self, other: &Self, sites: &[usize]) -> u32 {
        let mut c: i64 = 0;
        for &i in sites {
            c += self.z[i] as i64 * other.x[i] as i64 - self.x[i] as i64 * other.z[i] as i64;
        }
        modulo(c, self.d)
    }

    pub fn commutes_with(&self, other: &Self) -> Result<bool> {
        Ok(self.commutation_exponent(other)? == 0)
    }

    /// `P^k` for any integer `k`, negative powers included.
    pub fn power(&self, k: i64) -> Self {
        let d = self.d;
        // (X^a Z^b)^k = ω^{ab·k(k-1)/2} X^{ka} Z^{kb}, valid for all integers k.
        let tri = (k as i128 * (k as i128 - 1) / 2).rem_euclid(d as i128) as i64;
        let mut reorder: i64 = 0;
        let mut out = self.clone();
        for i in 0..self.n() {
            let (a, b) = (self.x[i] as i64, self.z[i] as i64);
            reorder = (reorder + (a * b % d as i64) * tri) % d as i64;
            out.x[i] = modulo(a * k.rem_euclid(d as i64), d) as u8;
            out.z[i] = modulo(b * k.rem_euclid(d as i64), d) as u8;
        }
        let m = 2 * d as i64;
        let global = (self.phase as i128 * k as i128).rem_euclid(m as i128) as i64;
        out.phase = modulo(global + 2 * reorder, 2 * d);
        out
    }

    /// Whether `P^d` is the identity, i.e. the eigenvalues are powers of `ω`.
    pub fn has_order_d(&self) -> bool {
        let d = self.d as u64;
        let tri = (d * (d - 1) / 2) % d;
        let reorder: u64 = self.x.iter().zip(&self.z).map(|(&a, &b)| (a as u64 * b as u64 % d) * tri).sum::<u64>() % d;
        (self.phase as u64 * d + 2 * reorder) % (2 * d) == 0
    }

    /// Hermitian adjoint, equal to the inverse.
    pub fn dagger(&self) -> Self {
        self.power(-1)
    }

    /// Conjugation by the single-site Fourier gate `F = Σ_g |g~><g|`.
    ///
    /// Forward (`F P F†`) maps `X → Z`, `Z → X^{-1}`; inverse (`F† P F`) maps
    /// `X → Z^{-1}`, `Z → X`. These were fixed against the dense engine.
    pub fn fourier_conjugate(&self, site: usize, inverse: bool) -> Result<Self> {
        if site >= self.n() {
            return Err(Error::InvalidIndex { index: site, limit: self.n() });
        }
        let d = self.d;
        let (a, b) = (self.x[site] as i64, self.z[site] as i64);
        let mut out = self.clone();
        if inverse {
            // X^a Z^b → Z^{-a} X^{b} = ω^{-ab} X^{b} Z^{-a}
            out.x[site] = modulo(b, d) as u8;
            out.z[site] = modulo(-a, d) as u8;
        } else {
            // X^a Z^b → Z^{a} X^{-b} = ω^{-ab} X^{-b} Z^{a}
            out.x[site] = modulo(-b, d) as u8;
            out.z[site] = modulo(a, d) as u8;
        }
        out.phase = modulo(self.phase as i64 - 2 * a * b, 2 * d);
        Ok(out)
    }

    /// Conjugation by `ω^{k·a·b}` acting on basis states `|a>` of `control` and
    /// `|b>` of `target` (the controlled-Z power gate): `X_c → X_c Z_t^{k}`,
    /// `X_t → X_t Z_c^{k}`.
    pub fn controlled_z_conjugate(&self, control: usize, target: usize, k: i64) -> Result<Self> {
        let n = self.n();
        for s in [control, target] {
            if s >= n {
                return Err(Error::InvalidIndex { index: s, limit: n });
            }
        }
        if control == target {
            return Err(Error::SameSite(control));
        }
        let d = self.d;
        let (xc, xt) = (self.x[control] as i64, self.x[target] as i64);
        // U X_c^{xc} X_t^{xt} U† = ω^{k xc xt} X_c^{xc} X_t^{xt} Z_c^{k xt} Z_t^{k xc}
        let mut out = self.clone();
        let zc = self.z[control] as i64 + k * xt;
        let zt = self.z[target] as i64 + k * xc;
        out.z[control] = modulo(zc, d) as u8;
        out.z[target] = modulo(zt, d) as u8;
        out.phase = modulo(self.phase as i64 + 2 * ((k * xc % d as i64) * xt % d as i64), 2 * d);
        Ok(out)
    }

    /// Dense matrix of this operator (row-major, site 0 most significant).
    /// Intended for small oracle checks.
    pub fn to_matrix(&self) -> Vec<Complex64> {
        let n = self.n();
        let d = self.d as usize;
        let dim = d.pow(n as u32);
        let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];
        let global = self.phase().to_complex();
        let mut digits = vec![0usize; n];
        for col in 0..dim {
            let mut rem = col;
            for i in (0..n).rev() {
                digits[i] = rem % d;
                rem /= d;
            }
            // Z acts first, then X.
            let mut zexp = 0i64;
            let mut row = 0usize;
            for i in 0..n {
                zexp += self.z[i] as i64 * digits[i] as i64;
                row = row * d + (digits[i] + self.x[i] as usize) % d;
            }
            m[row * dim + col] = global * omega_pow(zexp, self.d);
        }
        m
    }
}

impl fmt::Debug for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliOperator(d={}, n={}, {})", self.d, self.n(), self)
    }
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.phase != 0 {
            if self.phase % 2 == 0 {
                parts.push(format!("w^{}", self.phase / 2));
            } else {
                parts.push(format!("w^{}/2", self.phase));
            }
        }
        for i in 0..self.n() {
            if self.x[i] != 0 {
                parts.push(format!("X{}^{}", i, self.x[i]));
            }
            if self.z[i] != 0 {
                parts.push(format!("Z{}^{}", i, self.z[i]));
            }
        }
        if self.is_identity_up_to_phase() {
            parts.push("I".to_string());
        }
        write!(f, "{}", parts.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type Mat = Vec<Complex64>;

    fn matmul(a: &Mat, b: &Mat, dim: usize) -> Mat {
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

    fn dagger(a: &Mat, dim: usize) -> Mat {
        let mut c = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                c[j * dim + i] = a[i * dim + j].conj();
            }
        }
        c
    }

    fn close(a: &Mat, b: &Mat) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).norm() < 1e-12)
    }

    /// Single-site matrices built from the defining relations, independent of
    /// `to_matrix`.
    fn shift(d: usize) -> Mat {
        let mut m = vec![Complex64::new(0.0, 0.0); d * d];
        for g in 0..d {
            m[((g + 1) % d) * d + g] = Complex64::new(1.0, 0.0);
        }
        m
    }

    fn clock(d: usize) -> Mat {
        let mut m = vec![Complex64::new(0.0, 0.0); d * d];
        for g in 0..d {
            m[g * d + g] = omega_pow(g as i64, d as u32);
        }
        m
    }

    fn fourier(d: usize) -> Mat {
        let s = 1.0 / (d as f64).sqrt();
        let mut m = vec![Complex64::new(0.0, 0.0); d * d];
        for g in 0..d {
            for h in 0..d {
                m[h * d + g] = omega_pow((g * h) as i64, d as u32) * s;
            }
        }
        m
    }

    fn kron(a: &Mat, da: usize, b: &Mat, db: usize) -> Mat {
        let dim = da * db;
        let mut c = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..da {
            for j in 0..da {
                for k in 0..db {
                    for l in 0..db {
                        c[(i * db + k) * dim + j * db + l] = a[i * da + j] * b[k * db + l];
                    }
                }
            }
        }
        c
    }

    fn identity(dim: usize) -> Mat {
        let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            m[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    fn mat_power(a: &Mat, k: u32, dim: usize) -> Mat {
        (0..k).fold(identity(dim), |acc, _| matmul(&acc, a, dim))
    }

    /// Oracle matrix built as a Kronecker product of clock/shift powers.
    fn oracle(p: &PauliOperator) -> Mat {
        let d = p.dim() as usize;
        let mut m = vec![Complex64::new(1.0, 0.0)];
        let mut dim = 1;
        for i in 0..p.n() {
            let x = mat_power(&shift(d), p.x_power(i), d);
            let z = mat_power(&clock(d), p.z_power(i), d);
            let local = matmul(&x, &z, d);
            m = kron(&m, dim, &local, d);
            dim *= d;
        }
        let ph = p.phase().to_complex();
        m.iter().map(|v| v * ph).collect()
    }

    fn on_site(local: &Mat, d: usize, site: usize, n: usize) -> Mat {
        let mut m = vec![Complex64::new(1.0, 0.0)];
        let mut dim = 1;
        for i in 0..n {
            let f = if i == site { local.clone() } else { identity(d) };
            m = kron(&m, dim, &f, d);
            dim *= d;
        }
        m
    }

    fn arb_pauli(n: usize, d: u32) -> impl Strategy<Value = PauliOperator> {
        (
            prop::collection::vec(0..d as i64, n),
            prop::collection::vec(0..d as i64, n),
            0..2 * d as i64,
        )
            .prop_map(move |(x, z, ph)| PauliOperator::from_powers(d, &x, &z, 0).unwrap().with_phase_numerator(ph))
    }

    fn arb_case() -> impl Strategy<Value = (PauliOperator, PauliOperator, PauliOperator)> {
        (prop::sample::select(vec![2u32, 3, 5]), 1usize..=3).prop_flat_map(|(d, n)| {
            (arb_pauli(n, d), arb_pauli(n, d), arb_pauli(n, d))
        })
    }

    #[test]
    fn z_times_x_picks_up_omega() {
        let z = PauliOperator::z_on(1, 3, 0, 1).unwrap();
        let x = PauliOperator::x_on(1, 3, 0, 1).unwrap();
        let zx = z.compose(&x).unwrap();
        assert_eq!(zx.x_power(0), 1);
        assert_eq!(zx.z_power(0), 1);
        assert_eq!(zx.phase().omega_exponent(), Some(1));
    }

    #[test]
    fn identity_is_neutral() {
        let p = PauliOperator::from_powers(5, &[1, 4, 2], &[3, 0, 1], 2).unwrap();
        let id = PauliOperator::identity(3, 5).unwrap();
        assert_eq!(id.compose(&p).unwrap(), p);
        assert_eq!(p.compose(&id).unwrap(), p);
    }

    #[test]
    fn qubit_xz_squared_is_minus_identity() {
        let xz = PauliOperator::single(1, 2, 0, 1, 1).unwrap();
        let sq = xz.compose(&xz).unwrap();
        assert!(sq.is_identity_up_to_phase());
        assert_eq!(sq.phase_numerator(), 2);
        assert!(close(&oracle(&sq), &matmul(&oracle(&xz), &oracle(&xz), 2)));
        assert_eq!(xz.power(2), sq);
    }

    #[test]
    fn z_x_commutation_exponent_is_one() {
        let z = PauliOperator::z_on(1, 5, 0, 1).unwrap();
        let x = PauliOperator::x_on(1, 5, 0, 1).unwrap();
        assert_eq!(z.commutation_exponent(&x).unwrap(), 1);
        assert_eq!(z.commutation_exponent(&z).unwrap(), 0);
    }

    #[test]
    fn shift_has_order_d() {
        for d in [2u32, 3, 5, 7] {
            let x = PauliOperator::x_on(2, d, 1, 1).unwrap();
            assert!(x.power(d as i64).is_identity());
            assert!(x.power(0).is_identity());
        }
    }

    #[test]
    fn mismatched_operators_are_rejected() {
        let a = PauliOperator::identity(2, 3).unwrap();
        let b = PauliOperator::identity(3, 3).unwrap();
        let c = PauliOperator::identity(2, 5).unwrap();
        assert!(matches!(a.compose(&b), Err(Error::DimensionMismatch(_))));
        assert!(matches!(a.commutation_exponent(&c), Err(Error::DimensionMismatch(_))));
        assert!(PauliOperator::identity(1, 1).is_err());
        assert!(PauliOperator::identity(1, 128).is_err());
    }

    #[test]
    fn fourier_maps_shift_to_clock() {
        for d in [2usize, 3, 5] {
            let f = fourier(d);
            let fx = matmul(&matmul(&f, &shift(d), d), &dagger(&f, d), d);
            assert!(close(&fx, &clock(d)));
            let x = PauliOperator::x_on(1, d as u32, 0, 1).unwrap();
            let conj = x.fourier_conjugate(0, false).unwrap();
            assert_eq!(conj, PauliOperator::z_on(1, d as u32, 0, 1).unwrap());
        }
    }

    #[test]
    fn fourier_conjugation_has_order_four() {
        let p = PauliOperator::from_powers(5, &[2, 1], &[3, 4], 1).unwrap();
        let mut q = p.clone();
        for _ in 0..4 {
            q = q.fourier_conjugate(1, false).unwrap();
        }
        assert_eq!(q, p);
        let id = PauliOperator::identity(2, 5).unwrap();
        assert_eq!(id.fourier_conjugate(0, true).unwrap(), id);
    }

    #[test]
    fn modular_inverse() {
        for p in [2u32, 3, 5, 7, 11] {
            for a in 1..p as i64 {
                let inv = inverse_mod(a, p).unwrap();
                assert_eq!((a as u32 * inv) % p, 1);
            }
            assert_eq!(inverse_mod(0, p), None);
        }
        assert!(is_prime(2) && is_prime(3) && is_prime(127));
        assert!(!is_prime(4) && !is_prime(9) && !is_prime(1));
    }

    #[test]
    fn display_format() {
        let p = PauliOperator::from_powers(3, &[0, 1], &[0, 2], 2).unwrap();
        assert_eq!(p.to_string(), "w^2 X1^1 Z1^2");
        assert_eq!(PauliOperator::identity(2, 3).unwrap().to_string(), "I");
    }

    proptest! {
        #[test]
        fn compose_matches_matrix_product((p, q, _r) in arb_case()) {
            let dim = (p.dim() as usize).pow(p.n() as u32);
            let pq = p.compose(&q).unwrap();
            prop_assert!(close(&oracle(&pq), &matmul(&oracle(&p), &oracle(&q), dim)));
            prop_assert!(close(&pq.to_matrix(), &oracle(&pq)));
        }

        #[test]
        fn compose_is_associative((p, q, r) in arb_case()) {
            let left = p.compose(&q).unwrap().compose(&r).unwrap();
            let right = p.compose(&q.compose(&r).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn commutation_exponent_relates_orderings((p, q, _r) in arb_case()) {
            let c = p.commutation_exponent(&q).unwrap();
            let pq = p.compose(&q).unwrap();
            let qp = q.compose(&p).unwrap().times_omega(c as i64);
            prop_assert_eq!(pq, qp);
        }

        #[test]
        fn power_matches_repeated_product((p, _q, _r) in arb_case(), k in -6i64..=12) {
            let dim = (p.dim() as usize).pow(p.n() as u32);
            let pk = p.power(k);
            let base = if k >= 0 { oracle(&p) } else { dagger(&oracle(&p), dim) };
            let expected = mat_power(&base, k.unsigned_abs() as u32, dim);
            prop_assert!(close(&oracle(&pk), &expected));
        }

        #[test]
        fn power_d_is_signed_identity((p, _q, _r) in arb_case()) {
            let pd = p.unphased().power(p.dim() as i64);
            prop_assert!(pd.is_identity_up_to_phase());
            prop_assert!(pd.phase_numerator() == 0 || pd.phase_numerator() == p.dim());
        }

        #[test]
        fn fourier_conjugate_matches_matrix((p, _q, _r) in arb_case(), site in 0usize..3, inverse: bool) {
            let site = site % p.n();
            let d = p.dim() as usize;
            let n = p.n();
            let dim = d.pow(n as u32);
            let f = on_site(&fourier(d), d, site, n);
            let fd = dagger(&f, dim);
            let expected = if inverse {
                matmul(&matmul(&fd, &oracle(&p), dim), &f, dim)
            } else {
                matmul(&matmul(&f, &oracle(&p), dim), &fd, dim)
            };
            let got = p.fourier_conjugate(site, inverse).unwrap();
            prop_assert!(close(&oracle(&got), &expected));
        }

        #[test]
        fn sparse_power_product_matches_dense((p, q, _r) in arb_case(), k in 0u32..7) {
            let mut a = p.clone();
            a.mul_assign_power_sparse(&q, &q.support(), k);
            prop_assert_eq!(a, p.compose(&q.power(k as i64)).unwrap());
        }

        #[test]
        fn controlled_z_conjugate_matches_matrix((p, _q, _r) in arb_case(), k in -3i64..4) {
            prop_assume!(p.n() >= 2);
            let d = p.dim() as usize;
            let n = p.n();
            let dim = d.pow(n as u32);
            let (c, t) = (0usize, n - 1);
            let mut u = vec![Complex64::new(0.0, 0.0); dim * dim];
            for idx in 0..dim {
                let a = (idx / d.pow((n - 1 - c) as u32)) % d;
                let b = (idx / d.pow((n - 1 - t) as u32)) % d;
                u[idx * dim + idx] = omega_pow(k * (a * b) as i64, d as u32);
            }
            let expected = matmul(&matmul(&u, &oracle(&p), dim), &dagger(&u, dim), dim);
            let got = p.controlled_z_conjugate(c, t, k).unwrap();
            prop_assert!(close(&oracle(&got), &expected));
        }
    }
}
