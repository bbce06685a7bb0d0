//! Exact arithmetic in `F_q = F_p[X]/(rbar)` and in the unramified extension
//! `Z_q = Z_p[X]/(r)` truncated modulo `p^N`, including the Frobenius
//! substitution.

use crate::error::{Error, Result};
use crate::nat::{self, Limb, Modulus};
use crate::ntt::is_prime_u64;
use num_bigint::BigUint;
use std::sync::OnceLock;

/// An element of `F_q`, stored as `n` coefficients in `[0, p)`.
pub type FqElement = Vec<u64>;

/// Description of the base field `F_{p^n}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldSpec {
    pub p: u64,
    pub n: usize,
    /// Monic modulus polynomial, length `n + 1`, ascending degree.
    pub rbar: Vec<u64>,
}

// -------------------- dense polynomial helpers over F_p --------------------

fn poly_trim(v: &mut Vec<u64>) {
    while v.len() > 1 && *v.last().unwrap() == 0 {
        v.pop();
    }
}

fn poly_rem(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    let mut r = a.to_vec();
    poly_trim(&mut r);
    let dm = m.len() - 1;
    let lead_inv = nat::inv_mod_u64(m[dm], p);
    while r.len() > dm && !(r.len() == 1 && r[0] == 0) {
        let k = r.len() - 1;
        let c = ((r[k] as u128) * (lead_inv as u128) % p as u128) as u64;
        if c != 0 {
            for i in 0..=dm {
                let idx = k - dm + i;
                let sub = (c as u128) * (m[i] as u128) % (p as u128);
                r[idx] = ((r[idx] as u128 + p as u128 * p as u128 - sub) % p as u128) as u64;
            }
        }
        r.pop();
        poly_trim(&mut r);
    }
    if r.is_empty() {
        r.push(0);
    }
    r
}

fn poly_mulmod(a: &[u64], b: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    let mut prod = vec![0u64; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            prod[i + j] =
                ((prod[i + j] as u128 + (ai as u128) * (bj as u128)) % p as u128) as u64;
        }
    }
    poly_rem(&prod, m, p)
}

fn poly_gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let (mut x, mut y) = (a.to_vec(), b.to_vec());
    poly_trim(&mut x);
    poly_trim(&mut y);
    while !(y.len() == 1 && y[0] == 0) {
        let r = poly_rem(&x, &monicize(&y, p), p);
        x = y;
        y = r;
    }
    x
}

fn monicize(a: &[u64], p: u64) -> Vec<u64> {
    let mut v = a.to_vec();
    poly_trim(&mut v);
    let inv = nat::inv_mod_u64(*v.last().unwrap(), p);
    for c in v.iter_mut() {
        *c = ((*c as u128) * (inv as u128) % p as u128) as u64;
    }
    v
}

/// X^(p^k) mod m, by repeated p-th powering.
fn xpow_frobenius(m: &[u64], p: u64, k: usize) -> Vec<u64> {
    let mut cur = if m.len() - 1 > 1 {
        vec![0, 1]
    } else {
        poly_rem(&[0, 1], m, p)
    };
    for _ in 0..k {
        // cur := cur^p mod m via square and multiply
        let mut acc = vec![1u64];
        let mut base = cur.clone();
        let mut e = p;
        while e > 0 {
            if e & 1 == 1 {
                acc = poly_mulmod(&acc, &base, m, p);
            }
            base = poly_mulmod(&base, &base, m, p);
            e >>= 1;
        }
        cur = acc;
    }
    cur
}

fn is_irreducible(rbar: &[u64], p: u64) -> bool {
    let n = rbar.len() - 1;
    if n == 1 {
        return true;
    }
    // no factor of degree <= n/2, and X^(p^n) = X
    for i in 1..=n / 2 {
        let xp = xpow_frobenius(rbar, p, i);
        // xp - X
        let mut d = xp;
        if d.len() < 2 {
            d.resize(2, 0);
        }
        d[1] = (d[1] + p - 1) % p;
        poly_trim(&mut d);
        let g = poly_gcd(rbar, &d, p);
        if g.len() > 1 {
            return false;
        }
    }
    let xq = xpow_frobenius(rbar, p, n);
    let mut d = xq;
    if d.len() < 2 {
        d.resize(2, 0);
    }
    d[1] = (d[1] + p - 1) % p;
    poly_trim(&mut d);
    d.len() == 1 && d[0] == 0
}

/// Smallest monic irreducible polynomial of degree `n` over `F_p`, ordered
/// lexicographically on the coefficient vector `(c_0, ..., c_{n-1})`.
pub fn find_irreducible(p: u64, n: usize) -> Vec<u64> {
    assert!(n >= 1);
    let mut coeffs = vec![0u64; n + 1];
    coeffs[n] = 1;
    loop {
        if is_irreducible(&coeffs, p) {
            return coeffs;
        }
        // increment (c_0, ..., c_{n-1}) with c_0 most significant
        let mut i = n - 1;
        loop {
            coeffs[i] += 1;
            if coeffs[i] < p {
                break;
            }
            coeffs[i] = 0;
            if i == 0 {
                unreachable!("ran out of candidate polynomials");
            }
            i -= 1;
        }
    }
}

impl FieldSpec {
    pub fn new(p: u64, n: usize, rbar: Vec<u64>) -> Result<FieldSpec> {
        if !is_prime_u64(p) {
            return Err(Error::Parse {
                line: 0,
                msg: format!("p = {p} is not prime"),
            });
        }
        if p >= 1 << 62 {
            return Err(Error::Parse {
                line: 0,
                msg: "p too large".into(),
            });
        }
        if n == 0 || rbar.len() != n + 1 || rbar[n] != 1 || rbar.iter().any(|&c| c >= p) {
            return Err(Error::Parse {
                line: 0,
                msg: "modulus must be monic of degree n with coefficients in [0, p)".into(),
            });
        }
        if !is_irreducible(&rbar, p) {
            return Err(Error::Parse {
                line: 0,
                msg: "modulus polynomial is reducible".into(),
            });
        }
        Ok(FieldSpec { p, n, rbar })
    }

    pub fn with_default_modulus(p: u64, n: usize) -> Result<FieldSpec> {
        if !is_prime_u64(p) {
            return Err(Error::Parse {
                line: 0,
                msg: format!("p = {p} is not prime"),
            });
        }
        let rbar = find_irreducible(p, n);
        FieldSpec::new(p, n, rbar)
    }

    pub fn q(&self) -> BigUint {
        BigUint::from(self.p).pow(self.n as u32)
    }

    pub fn zero(&self) -> FqElement {
        vec![0; self.n]
    }

    pub fn one(&self) -> FqElement {
        let mut v = vec![0; self.n];
        v[0] = 1;
        v
    }

    pub fn gen(&self) -> FqElement {
        let mut v = vec![0; self.n];
        if self.n > 1 {
            v[1] = 1;
        } else {
            // [X] reduces to -c_0 when n = 1
            v[0] = (self.p - self.rbar[0]) % self.p;
        }
        v
    }

    pub fn from_u64(&self, v: u64) -> FqElement {
        let mut out = vec![0; self.n];
        out[0] = v % self.p;
        out
    }

    pub fn is_zero(&self, a: &FqElement) -> bool {
        a.iter().all(|&c| c == 0)
    }

    pub fn add(&self, a: &FqElement, b: &FqElement) -> FqElement {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| {
                let s = x + y;
                if s >= self.p {
                    s - self.p
                } else {
                    s
                }
            })
            .collect()
    }

    pub fn sub(&self, a: &FqElement, b: &FqElement) -> FqElement {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| if x >= y { x - y } else { x + self.p - y })
            .collect()
    }

    pub fn neg(&self, a: &FqElement) -> FqElement {
        a.iter()
            .map(|&x| if x == 0 { 0 } else { self.p - x })
            .collect()
    }

    pub fn scale(&self, a: &FqElement, c: u64) -> FqElement {
        a.iter()
            .map(|&x| ((x as u128) * (c as u128) % self.p as u128) as u64)
            .collect()
    }

    pub fn mul(&self, a: &FqElement, b: &FqElement) -> FqElement {
        if self.n == 1 {
            return vec![((a[0] as u128) * (b[0] as u128) % self.p as u128) as u64];
        }
        let mut r = poly_mulmod(a, b, &self.rbar, self.p);
        r.resize(self.n, 0);
        r
    }

    pub fn inv(&self, a: &FqElement) -> Result<FqElement> {
        if self.is_zero(a) {
            return Err(Error::NonUnit);
        }
        if self.n == 1 {
            return Ok(vec![nat::inv_mod_u64(a[0], self.p)]);
        }
        // extended Euclid in F_p[X]
        let mut a_poly = a.clone();
        poly_trim(&mut a_poly);
        let (mut r0, mut r1) = (self.rbar.clone(), a_poly);
        let (mut t0, mut t1) = (vec![0u64], vec![1u64]);
        while !(r1.len() == 1 && r1[0] == 0) {
            // divide r0 by r1
            let lead_inv = nat::inv_mod_u64(*r1.last().unwrap(), self.p);
            let mut q = vec![0u64; r0.len().saturating_sub(r1.len()) + 1];
            let mut rem = r0.clone();
            while rem.len() >= r1.len() && !(rem.len() == 1 && rem[0] == 0) {
                let k = rem.len() - 1;
                let c = ((rem[k] as u128) * (lead_inv as u128) % self.p as u128) as u64;
                let shift = k + 1 - r1.len();
                q[shift] = c;
                for i in 0..r1.len() {
                    let sub = (c as u128) * (r1[i] as u128) % self.p as u128;
                    let idx = shift + i;
                    rem[idx] = ((rem[idx] as u128 + (self.p as u128) * (self.p as u128) - sub)
                        % self.p as u128) as u64;
                }
                poly_trim(&mut rem);
                if rem.len() == 1 && rem[0] == 0 {
                    break;
                }
                if rem.len() < r1.len() {
                    break;
                }
            }
            let mut qt1 = vec![0u64; q.len() + t1.len() - 1];
            for (i, &qi) in q.iter().enumerate() {
                if qi == 0 {
                    continue;
                }
                for (j, &tj) in t1.iter().enumerate() {
                    qt1[i + j] =
                        ((qt1[i + j] as u128 + (qi as u128) * (tj as u128)) % self.p as u128)
                            as u64;
                }
            }
            let mut t2 = vec![0u64; t0.len().max(qt1.len())];
            for i in 0..t2.len() {
                let a = if i < t0.len() { t0[i] } else { 0 };
                let b = if i < qt1.len() { qt1[i] } else { 0 };
                t2[i] = (a + self.p - b % self.p) % self.p;
            }
            poly_trim(&mut t2);
            (r0, r1) = (r1, rem);
            (t0, t1) = (t1, t2);
        }
        // r0 is the gcd, a nonzero constant
        if r0.len() != 1 || r0[0] == 0 {
            return Err(Error::NonUnit);
        }
        let c_inv = nat::inv_mod_u64(r0[0], self.p);
        let mut out: Vec<u64> = t0
            .iter()
            .map(|&t| ((t as u128) * (c_inv as u128) % self.p as u128) as u64)
            .collect();
        out.resize(self.n, 0);
        Ok(out)
    }

    pub fn pow_big(&self, a: &FqElement, e: &BigUint) -> FqElement {
        let mut acc = self.one();
        let mut base = a.clone();
        for i in 0..e.bits() {
            if e.bit(i) {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
        }
        acc
    }

    /// Frobenius x -> x^p on F_q.
    pub fn frobenius(&self, a: &FqElement) -> FqElement {
        self.pow_big(a, &BigUint::from(self.p))
    }

    /// Iterates over all field elements (for small fields).
    pub fn iter_elements(&self) -> impl Iterator<Item = FqElement> + '_ {
        let total = self.p.checked_pow(self.n as u32).expect("field too large");
        (0..total).map(move |mut v| {
            let mut e = vec![0u64; self.n];
            for c in e.iter_mut() {
                *c = v % self.p;
                v /= self.p;
            }
            e
        })
    }
}

// ------------------------------- Z_q ---------------------------------------

/// An element of `Z_q` mod `p^N`: `n` coefficients of `words` limbs each,
/// stored contiguously.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZqElement {
    pub c: Vec<Limb>,
}

/// Arithmetic context for `Z_q = Z_p[X]/(r)` at a fixed precision `N`.
#[derive(Debug)]
pub struct ZqContext {
    pub spec: FieldSpec,
    pub precision: u32,
    pub modulus: Modulus,
    /// X^(n+j) mod r for j < n-1, each an n-coefficient element.
    xpow: Vec<Vec<Limb>>,
    /// sigma^i([X]) for 0 <= i < n, computed on first use.
    sigma: Vec<OnceLock<ZqElement>>,
}

impl ZqContext {
    pub fn new(spec: FieldSpec, precision: u32) -> ZqContext {
        let modulus = Modulus::new(spec.p, precision);
        let n = spec.n;
        let w = modulus.words;
        // canonical small lift of rbar
        let mut xpow = Vec::new();
        if n > 1 {
            // X^n = -(c_0 + c_1 X + ... + c_{n-1} X^{n-1}) mod r
            let mut xn = vec![0u64; n * w];
            for i in 0..n {
                let c = modulus.from_u64(spec.rbar[i]);
                let mut negc = modulus.zero();
                modulus.neg(&c, &mut negc);
                xn[i * w..(i + 1) * w].copy_from_slice(&negc);
            }
            xpow.push(xn);
            for j in 1..n - 1 {
                // X^(n+j) = X * X^(n+j-1) reduced
                let prev = xpow[j - 1].clone();
                let mut cur = vec![0u64; n * w];
                // shift up by one degree
                cur[w..].copy_from_slice(&prev[..(n - 1) * w]);
                // plus prev[n-1] * X^n
                let top = &prev[(n - 1) * w..];
                let xn = &xpow[0];
                let mut t = modulus.zero();
                let mut s = modulus.zero();
                for i in 0..n {
                    modulus.mul(top, &xn[i * w..(i + 1) * w], &mut t);
                    let dst = &mut cur[i * w..(i + 1) * w];
                    let tmp = dst.to_vec();
                    modulus.add(&tmp, &t, &mut s);
                    dst.copy_from_slice(&s);
                }
                xpow.push(cur);
            }
        }
        let sigma = (0..n).map(|_| OnceLock::new()).collect();
        ZqContext {
            spec,
            precision,
            modulus,
            xpow,
            sigma,
        }
    }

    #[inline]
    pub fn words(&self) -> usize {
        self.modulus.words
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn zero(&self) -> ZqElement {
        ZqElement {
            c: vec![0; self.n() * self.words()],
        }
    }

    pub fn one(&self) -> ZqElement {
        let mut e = self.zero();
        e.c[0] = 1;
        e
    }

    pub fn from_u64(&self, v: u64) -> ZqElement {
        let mut e = self.zero();
        let w = self.words();
        e.c[..w].copy_from_slice(&self.modulus.from_u64(v));
        e
    }

    pub fn is_zero(&self, a: &ZqElement) -> bool {
        nat::is_zero(&a.c)
    }

    /// Digitwise lift of an F_q element.
    pub fn canonical_lift(&self, a: &FqElement) -> ZqElement {
        let w = self.words();
        let mut e = self.zero();
        for (i, &d) in a.iter().enumerate() {
            e.c[i * w..(i + 1) * w].copy_from_slice(&self.modulus.from_u64(d));
        }
        e
    }

    /// Reduction mod p back to F_q.
    pub fn reduce_mod_p(&self, a: &ZqElement) -> FqElement {
        let w = self.words();
        let p = self.spec.p as u128;
        let shift = (1u128 << 64) % p;
        (0..self.n())
            .map(|i| {
                let mut r: u128 = 0;
                for &l in a.c[i * w..(i + 1) * w].iter().rev() {
                    r = (r * shift + l as u128) % p;
                }
                r as u64
            })
            .collect()
    }

    pub fn add(&self, a: &ZqElement, b: &ZqElement) -> ZqElement {
        let w = self.words();
        let mut out = self.zero();
        for i in 0..self.n() {
            self.modulus.add(
                &a.c[i * w..(i + 1) * w],
                &b.c[i * w..(i + 1) * w],
                &mut out.c[i * w..(i + 1) * w],
            );
        }
        out
    }

    pub fn sub(&self, a: &ZqElement, b: &ZqElement) -> ZqElement {
        let w = self.words();
        let mut out = self.zero();
        for i in 0..self.n() {
            self.modulus.sub(
                &a.c[i * w..(i + 1) * w],
                &b.c[i * w..(i + 1) * w],
                &mut out.c[i * w..(i + 1) * w],
            );
        }
        out
    }

    pub fn neg(&self, a: &ZqElement) -> ZqElement {
        let w = self.words();
        let mut out = self.zero();
        for i in 0..self.n() {
            self.modulus
                .neg(&a.c[i * w..(i + 1) * w], &mut out.c[i * w..(i + 1) * w]);
        }
        out
    }

    pub fn mul(&self, a: &ZqElement, b: &ZqElement) -> ZqElement {
        let n = self.n();
        let w = self.words();
        if n == 1 {
            let mut out = self.zero();
            self.modulus.mul(&a.c, &b.c, &mut out.c);
            return out;
        }
        // schoolbook product of degree < n polynomials
        let mut prod = vec![0u64; (2 * n - 1) * w];
        let mut t = self.modulus.zero();
        let mut s = self.modulus.zero();
        for i in 0..n {
            let ai = &a.c[i * w..(i + 1) * w];
            if nat::is_zero(ai) {
                continue;
            }
            for j in 0..n {
                let bj = &b.c[j * w..(j + 1) * w];
                if nat::is_zero(bj) {
                    continue;
                }
                self.modulus.mul(ai, bj, &mut t);
                let dst = &mut prod[(i + j) * w..(i + j + 1) * w];
                let tmp = dst.to_vec();
                self.modulus.add(&tmp, &t, &mut s);
                dst.copy_from_slice(&s);
            }
        }
        self.reduce_poly(&prod)
    }

    /// Reduces a coefficient vector of degree < 2n-1 by the X-power table.
    pub(crate) fn reduce_poly(&self, prod: &[Limb]) -> ZqElement {
        let n = self.n();
        let w = self.words();
        let mut out = self.zero();
        out.c.copy_from_slice(&prod[..n * w]);
        let mut t = self.modulus.zero();
        let mut s = self.modulus.zero();
        for j in 0..n - 1 {
            let top = &prod[(n + j) * w..(n + j + 1) * w];
            if nat::is_zero(top) {
                continue;
            }
            let red = &self.xpow[j];
            for i in 0..n {
                self.modulus.mul(top, &red[i * w..(i + 1) * w], &mut t);
                let dst = &mut out.c[i * w..(i + 1) * w];
                let tmp = dst.to_vec();
                self.modulus.add(&tmp, &t, &mut s);
                dst.copy_from_slice(&s);
            }
        }
        out
    }

    /// Multiplies by p^k.
    pub fn scale_p_power(&self, a: &ZqElement, k: u32) -> ZqElement {
        let mut factor = self.zero();
        let big = BigUint::from(self.spec.p).pow(k);
        factor.c[..self.words()].copy_from_slice(&self.modulus.from_biguint(&big));
        self.mul(a, &factor)
    }

    /// True if `a` reduces to a nonzero element of F_q.
    pub fn is_unit(&self, a: &ZqElement) -> bool {
        let w = self.words();
        (0..self.n()).any(|i| self.modulus.is_unit(&a.c[i * w..(i + 1) * w]))
    }

    /// Minimum p-adic valuation over coefficients, capped at the precision.
    pub fn valuation(&self, a: &ZqElement) -> u32 {
        let w = self.words();
        (0..self.n())
            .map(|i| self.modulus.valuation(&a.c[i * w..(i + 1) * w]))
            .min()
            .unwrap_or(self.precision)
    }

    /// Exact division by p^k (all coefficient valuations must be >= k).
    /// The result is well defined modulo p^(N-k) and returned zero-extended.
    pub fn div_exact_p(&self, a: &ZqElement, k: u32) -> ZqElement {
        let w = self.words();
        let mut out = self.zero();
        for i in 0..self.n() {
            let q = self.modulus.div_exact_p(&a.c[i * w..(i + 1) * w], k);
            out.c[i * w..(i + 1) * w].copy_from_slice(&q);
        }
        out
    }

    /// Inverse of a unit, by Newton iteration from the mod-p inverse.
    pub fn inv(&self, a: &ZqElement) -> Result<ZqElement> {
        if !self.is_unit(a) {
            return Err(Error::NonUnit);
        }
        let abar = self.reduce_mod_p(a);
        let ibar = self.spec.inv(&abar)?;
        let mut x = self.canonical_lift(&ibar);
        let two = self.from_u64(2);
        let mut steps = 1;
        while (1u32 << steps) < self.precision {
            steps += 1;
        }
        for _ in 0..=steps {
            let t = self.mul(a, &x);
            let s = self.sub(&two, &t);
            x = self.mul(&x, &s);
        }
        Ok(x)
    }

    pub fn pow_u64(&self, a: &ZqElement, mut e: u64) -> ZqElement {
        let mut acc = self.one();
        let mut base = a.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    /// Evaluates the lifted modulus polynomial r and its derivative at `x`
    /// by a joint Horner scheme.
    fn eval_r(&self, x: &ZqElement) -> (ZqElement, ZqElement) {
        let n = self.n();
        let mut v = self.zero();
        let mut d = self.zero();
        for k in (0..=n).rev() {
            d = self.mul(&d, x);
            d = self.add(&d, &v);
            v = self.mul(&v, x);
            v = self.add(&v, &self.from_u64(self.spec.rbar[k]));
        }
        (v, d)
    }

    /// sigma^i([X]): the image of the generator under the i-th power of the
    /// Frobenius substitution, found by Newton iteration on r from the lift
    /// of [X]^(p^i).
    pub fn sigma_image(&self, i: usize) -> &ZqElement {
        let i = i % self.n().max(1);
        self.sigma[i].get_or_init(|| {
            if i == 0 {
                let mut x = self.zero();
                let w = self.words();
                if self.n() > 1 {
                    x.c[w] = 1;
                } else {
                    // [X] = -c_0 for n = 1
                    let c = self.from_u64(self.spec.rbar[0]);
                    x = self.neg(&c);
                }
                return x;
            }
            let seed_bar = xpow_frobenius(&self.spec.rbar, self.spec.p, i);
            let mut seed_vec = seed_bar;
            seed_vec.resize(self.n(), 0);
            let mut x = self.canonical_lift(&seed_vec);
            let mut steps = 1;
            while (1u32 << steps) < self.precision {
                steps += 1;
            }
            for _ in 0..=steps {
                let (v, d) = self.eval_r(&x);
                let dinv = self.inv(&d).expect("r' must be a unit at a simple root");
                let delta = self.mul(&v, &dinv);
                x = self.sub(&x, &delta);
            }
            x
        })
    }

    /// Frobenius substitution sigma^i applied to `a`.
    pub fn frobenius(&self, a: &ZqElement, i: usize) -> ZqElement {
        let n = self.n();
        if n == 1 || i % n == 0 {
            return a.clone();
        }
        let s = self.sigma_image(i % n).clone();
        // evaluate a as a polynomial (with Z_p coefficients) at s
        let w = self.words();
        let mut acc = self.zero();
        for k in (0..n).rev() {
            acc = self.mul(&acc, &s);
            let mut coeff = self.zero();
            coeff.c[..w].copy_from_slice(&a.c[k * w..(k + 1) * w]);
            acc = self.add(&acc, &coeff);
        }
        acc
    }

    /// Converts an element to a context with a different precision.
    pub fn convert(&self, a: &ZqElement, target: &ZqContext) -> ZqElement {
        assert_eq!(self.spec, target.spec);
        let (w, tw) = (self.words(), target.words());
        let mut out = target.zero();
        for i in 0..self.n() {
            let red = target.modulus.reduce_wide(&a.c[i * w..(i + 1) * w]);
            out.c[i * tw..(i + 1) * tw].copy_from_slice(&red);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn irreducibles() {
        assert_eq!(find_irreducible(2, 2), vec![1, 1, 1]); // X^2 + X + 1
        assert_eq!(find_irreducible(7, 1), vec![0, 1]); // X
        assert_eq!(find_irreducible(3, 2), vec![1, 0, 1]); // X^2 + 1
    }

    #[test]
    fn fq_field_axioms() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for &(p, n) in &[(2u64, 2usize), (3, 2), (7, 1), (5, 3), (2, 6)] {
            let f = FieldSpec::with_default_modulus(p, n).unwrap();
            for _ in 0..50 {
                let a: FqElement = (0..n).map(|_| rng.gen_range(0..p)).collect();
                let b: FqElement = (0..n).map(|_| rng.gen_range(0..p)).collect();
                let c: FqElement = (0..n).map(|_| rng.gen_range(0..p)).collect();
                // distributivity
                let lhs = f.mul(&a, &f.add(&b, &c));
                let rhs = f.add(&f.mul(&a, &b), &f.mul(&a, &c));
                assert_eq!(lhs, rhs);
                if !f.is_zero(&a) {
                    let inv = f.inv(&a).unwrap();
                    assert_eq!(f.mul(&a, &inv), f.one());
                }
                // Frobenius is additive
                assert_eq!(
                    f.frobenius(&f.add(&a, &b)),
                    f.add(&f.frobenius(&a), &f.frobenius(&b))
                );
            }
        }
    }

    #[test]
    fn canonical_lift_round_trip() {
        let f = FieldSpec::with_default_modulus(2, 2).unwrap();
        let ctx = ZqContext::new(f.clone(), 10);
        let a = vec![1, 1];
        let lifted = ctx.canonical_lift(&a);
        assert_eq!(ctx.reduce_mod_p(&lifted), a);
        let z = ctx.canonical_lift(&f.zero());
        assert!(ctx.is_zero(&z));
        let f7 = FieldSpec::with_default_modulus(7, 1).unwrap();
        let ctx7 = ZqContext::new(f7, 5);
        let three = ctx7.canonical_lift(&vec![3]);
        assert_eq!(three, ctx7.from_u64(3));
    }

    #[test]
    fn zq_units_and_valuation() {
        let f = FieldSpec::with_default_modulus(7, 1).unwrap();
        let ctx = ZqContext::new(f, 3);
        let a = ctx.from_u64(14);
        assert_eq!(ctx.valuation(&a), 1);
        assert_eq!(ctx.valuation(&ctx.one()), 0);
        assert_eq!(ctx.valuation(&ctx.zero()), 3);
        let seven = ctx.from_u64(7);
        assert!(ctx.inv(&seven).is_err());
        let two = ctx.from_u64(2);
        let inv = ctx.inv(&two).unwrap();
        assert_eq!(ctx.mul(&two, &inv), ctx.one());
        // invert(3) in Z/49
        let f2 = FieldSpec::with_default_modulus(7, 1).unwrap();
        let ctx2 = ZqContext::new(f2, 2);
        let three = ctx2.from_u64(3);
        assert_eq!(ctx2.inv(&three).unwrap(), ctx2.from_u64(33));
    }

    #[test]
    fn frobenius_substitution_properties() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(12);
        for &(p, n, prec) in &[(2u64, 2usize, 8u32), (3, 2, 6), (5, 3, 5), (7, 1, 4)] {
            let f = FieldSpec::with_default_modulus(p, n).unwrap();
            let ctx = ZqContext::new(f.clone(), prec);
            for _ in 0..20 {
                let a: FqElement = (0..n).map(|_| rng.gen_range(0..p)).collect();
                let b: FqElement = (0..n).map(|_| rng.gen_range(0..p)).collect();
                let (za, zb) = (ctx.canonical_lift(&a), ctx.canonical_lift(&b));
                let sab = ctx.frobenius(&ctx.mul(&za, &zb), 1);
                let sa_sb = ctx.mul(&ctx.frobenius(&za, 1), &ctx.frobenius(&zb, 1));
                assert_eq!(sab, sa_sb, "multiplicative");
                let s_add = ctx.frobenius(&ctx.add(&za, &zb), 1);
                assert_eq!(s_add, ctx.add(&ctx.frobenius(&za, 1), &ctx.frobenius(&zb, 1)));
                // sigma^n = id
                let mut it = za.clone();
                for _ in 0..n {
                    it = ctx.frobenius(&it, 1);
                }
                assert_eq!(it, za, "sigma^n = id");
                // sigma(a) = a^p mod p
                let fr = ctx.reduce_mod_p(&ctx.frobenius(&za, 1));
                assert_eq!(fr, f.frobenius(&a));
            }
        }
        // explicit example: sigma([X]) = [X] + 1 mod 2 for F_4
        let f = FieldSpec::with_default_modulus(2, 2).unwrap();
        let ctx = ZqContext::new(f.clone(), 6);
        let x = ctx.sigma_image(0).clone();
        let sx = ctx.frobenius(&x, 1);
        assert_eq!(ctx.reduce_mod_p(&sx), vec![1, 1]);
    }
}
