//! Fixed-width arithmetic modulo `p^N` on little-endian u64 limbs.
//!
//! Values are plain residues in `[0, p^N)` stored as exactly `words` limbs.
//! For odd `p` reduction goes through Montgomery; for `p = 2` the modulus is
//! a power of two and reduction is a mask. The word count is bounded by
//! [`MAX_WORDS`]; contexts whose modulus would not fit must be rejected by
//! the caller.

use num_bigint::BigUint;

pub type Limb = u64;

/// Upper bound on limbs per residue (768 bits).
pub const MAX_WORDS: usize = 12;

const SCRATCH: usize = 2 * MAX_WORDS + 1;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Kind {
    /// p = 2, modulus 2^bits: reduction is truncation.
    Pow2 { bits: u32 },
    /// Odd modulus: Montgomery with R = 2^(64*words).
    Odd { ninv: Limb, r2: Vec<Limb> },
}

/// A fixed modulus `p^exp` with precomputed reduction data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Modulus {
    pub p: u64,
    pub exp: u32,
    pub limbs: Vec<Limb>,
    pub words: usize,
    /// 2^64 mod p^exp, used when folding wide values.
    two64: Vec<Limb>,
    kind: Kind,
}

fn biguint_to_limbs(v: &BigUint, words: usize) -> Vec<Limb> {
    let mut out = v.to_u64_digits();
    assert!(out.len() <= words, "value does not fit in {words} limbs");
    out.resize(words, 0);
    out
}

pub fn limbs_to_biguint(a: &[Limb]) -> BigUint {
    BigUint::from_slice(
        &a.iter()
            .flat_map(|&l| [l as u32, (l >> 32) as u32])
            .collect::<Vec<_>>(),
    )
}

impl Modulus {
    /// Builds the modulus `p^exp`. Panics if it exceeds [`MAX_WORDS`] limbs.
    pub fn new(p: u64, exp: u32) -> Modulus {
        assert!(p >= 2 && exp >= 1);
        let m = BigUint::from(p).pow(exp);
        let words = ((m.bits() as usize) + 63) / 64;
        assert!(
            words <= MAX_WORDS,
            "modulus {p}^{exp} needs {words} limbs, max {MAX_WORDS}"
        );
        let limbs = biguint_to_limbs(&m, words);
        let two64 = biguint_to_limbs(&((BigUint::from(1u64) << 64u32) % &m), words);
        let kind = if p == 2 {
            Kind::Pow2 { bits: exp }
        } else {
            // -m^{-1} mod 2^64 by Hensel lifting on the low limb.
            let m0 = limbs[0];
            let mut inv: u64 = 1;
            for _ in 0..6 {
                inv = inv.wrapping_mul(2u64.wrapping_sub(m0.wrapping_mul(inv)));
            }
            let ninv = inv.wrapping_neg();
            let r = (BigUint::from(1u64) << (64 * words)) % &m;
            let r2 = biguint_to_limbs(&(&r * &r % &m), words);
            Kind::Odd { ninv, r2 }
        };
        Modulus {
            p,
            exp,
            limbs,
            words,
            two64,
            kind,
        }
    }

    pub fn zero(&self) -> Vec<Limb> {
        vec![0; self.words]
    }

    pub fn one(&self) -> Vec<Limb> {
        let mut v = vec![0; self.words];
        v[0] = 1;
        v
    }

    pub fn from_u64(&self, v: u64) -> Vec<Limb> {
        let mut out = vec![0; self.words];
        if self.words == 1 {
            out[0] = v % self.single_word();
        } else {
            out[0] = v;
        }
        // exp >= 1 so p^exp > v only when words == 1 can wrap; handled above.
        out
    }

    fn single_word(&self) -> u64 {
        debug_assert_eq!(self.words, 1);
        self.limbs[0]
    }

    pub fn from_biguint(&self, v: &BigUint) -> Vec<Limb> {
        let m = limbs_to_biguint(&self.limbs);
        biguint_to_limbs(&(v % m), self.words)
    }

    pub fn add(&self, a: &[Limb], b: &[Limb], out: &mut [Limb]) {
        debug_assert_eq!(a.len(), self.words);
        let carry = add_into(out, a, b);
        if carry != 0 || cmp(out, &self.limbs) != std::cmp::Ordering::Less {
            sub_in_place(out, &self.limbs);
        }
        self.mask(out);
    }

    pub fn sub(&self, a: &[Limb], b: &[Limb], out: &mut [Limb]) {
        let borrow = sub_into(out, a, b);
        if borrow != 0 {
            add_in_place(out, &self.limbs);
        }
        self.mask(out);
    }

    pub fn neg(&self, a: &[Limb], out: &mut [Limb]) {
        if is_zero(a) {
            out.fill(0);
        } else {
            let borrow = sub_into(out, &self.limbs, a);
            debug_assert_eq!(borrow, 0);
            self.mask(out);
        }
    }

    /// For Pow2 the modulus is 2^bits; truncate values to that many bits.
    fn mask(&self, out: &mut [Limb]) {
        if let Kind::Pow2 { bits } = self.kind {
            let top = bits as usize % 64;
            if top != 0 {
                out[self.words - 1] &= (1u64 << top) - 1;
            } else {
                // bits is a limb multiple, so the minimal representation of
                // 2^bits has an extra all-zero residue limb on top.
                out[self.words - 1] = 0;
            }
        }
    }

    pub fn mul(&self, a: &[Limb], b: &[Limb], out: &mut [Limb]) {
        let mut t = [0u64; SCRATCH];
        mul_full(&mut t, a, b);
        match &self.kind {
            Kind::Pow2 { .. } => {
                out.copy_from_slice(&t[..self.words]);
                self.mask(out);
            }
            Kind::Odd { r2, .. } => {
                let mut lo = [0u64; MAX_WORDS];
                self.redc(&mut t, &mut lo[..self.words]);
                let mut t2 = [0u64; SCRATCH];
                mul_full(&mut t2, &lo[..self.words], r2);
                self.redc(&mut t2, out);
            }
        }
    }

    /// Converts to Montgomery form (odd moduli). For a power of two this is
    /// the identity; callers pair it with [`Modulus::mul_pre`].
    pub fn to_mont(&self, a: &[Limb], out: &mut [Limb]) {
        match &self.kind {
            Kind::Pow2 { .. } => out.copy_from_slice(a),
            Kind::Odd { r2, .. } => {
                let mut t = [0u64; SCRATCH];
                mul_full(&mut t, a, r2);
                self.redc(&mut t, out);
            }
        }
    }

    /// Multiplies a Montgomery-form operand with a plain one, producing a
    /// plain residue. Saves one reduction in inner loops.
    pub fn mul_pre(&self, a_mont: &[Limb], b: &[Limb], out: &mut [Limb]) {
        match &self.kind {
            Kind::Pow2 { .. } => {
                let mut t = [0u64; SCRATCH];
                mul_full(&mut t, a_mont, b);
                out.copy_from_slice(&t[..self.words]);
                self.mask(out);
            }
            Kind::Odd { .. } => {
                let mut t = [0u64; SCRATCH];
                mul_full(&mut t, a_mont, b);
                self.redc(&mut t, out);
            }
        }
    }

    /// REDC step: t (2*words used) -> t * R^{-1} mod m.
    fn redc(&self, t: &mut [Limb; SCRATCH], out: &mut [Limb]) {
        let w = self.words;
        let m = &self.limbs;
        let ninv = match &self.kind {
            Kind::Odd { ninv, .. } => *ninv,
            Kind::Pow2 { .. } => unreachable!(),
        };
        for i in 0..w {
            let u = t[i].wrapping_mul(ninv);
            let mut carry: u64 = 0;
            for j in 0..w {
                let acc = (t[i + j] as u128) + (u as u128) * (m[j] as u128) + carry as u128;
                t[i + j] = acc as u64;
                carry = (acc >> 64) as u64;
            }
            let mut k = i + w;
            while carry != 0 {
                let (s, o) = t[k].overflowing_add(carry);
                t[k] = s;
                carry = o as u64;
                k += 1;
            }
        }
        out.copy_from_slice(&t[w..2 * w]);
        if t[2 * w] != 0 || cmp(out, m) != std::cmp::Ordering::Less {
            sub_in_place(out, m);
        }
    }

    /// Reduces a wide little-endian value modulo `p^exp`.
    pub fn reduce_wide(&self, v: &[Limb]) -> Vec<Limb> {
        match &self.kind {
            Kind::Pow2 { .. } => {
                let mut out = vec![0; self.words];
                let n = v.len().min(self.words);
                out[..n].copy_from_slice(&v[..n]);
                self.mask(&mut out);
                out
            }
            Kind::Odd { .. } => {
                // Horner over limbs: acc = acc * 2^64 + limb.
                let mut acc = self.zero();
                let mut tmp = self.zero();
                let mut limb_val = self.zero();
                for &l in v.iter().rev() {
                    self.mul(&acc, &self.two64, &mut tmp);
                    limb_val.fill(0);
                    limb_val[0] = l;
                    if self.words == 1 {
                        limb_val[0] = l % self.limbs[0];
                    }
                    self.add(&tmp, &limb_val, &mut acc);
                }
                acc
            }
        }
    }

    /// p-adic valuation, capped at `exp` (zero reports `exp`).
    pub fn valuation(&self, a: &[Limb]) -> u32 {
        if is_zero(a) {
            return self.exp;
        }
        let mut v = a.to_vec();
        let mut val = 0;
        loop {
            let (q, r) = div_small(&v, self.p);
            if r != 0 {
                return val;
            }
            v = q;
            val += 1;
            if val >= self.exp {
                return self.exp;
            }
        }
    }

    pub fn is_unit(&self, a: &[Limb]) -> bool {
        let mut r: u128 = 0;
        // fold limbs mod p
        let p = self.p as u128;
        let shift = (1u128 << 64) % p;
        for &l in a.iter().rev() {
            r = (r * shift + (l as u128)) % p;
        }
        r != 0
    }

    /// Exact division by p^k; panics if the division is not exact.
    pub fn div_exact_p(&self, a: &[Limb], k: u32) -> Vec<Limb> {
        let mut v = a.to_vec();
        if self.p == 2 {
            shr_bits(&mut v, k, true);
            return v;
        }
        for _ in 0..k {
            let (q, r) = div_small(&v, self.p);
            assert_eq!(r, 0, "division by p not exact");
            v = q;
        }
        v
    }

    /// Inverse of a unit by lifting the mod-p inverse. Returns None for
    /// non-units.
    pub fn inv(&self, a: &[Limb]) -> Option<Vec<Limb>> {
        if !self.is_unit(a) {
            return None;
        }
        // inverse mod p
        let p = self.p as u128;
        let shift = (1u128 << 64) % p;
        let mut r: u128 = 0;
        for &l in a.iter().rev() {
            r = (r * shift + (l as u128)) % p;
        }
        let x0 = inv_mod_u64(r as u64, self.p);
        let mut x = self.from_u64(x0);
        // x <- x(2 - a x); doubles correct digits each round.
        let mut steps = 1;
        while (1u32 << steps) < self.exp {
            steps += 1;
        }
        let two = self.from_u64(2);
        let mut t = self.zero();
        let mut s = self.zero();
        for _ in 0..=steps {
            self.mul(a, &x, &mut t);
            self.sub(&two, &t, &mut s);
            self.mul(&x, &s, &mut t);
            x.copy_from_slice(&t);
        }
        Some(x)
    }

    pub fn pow_u64(&self, a: &[Limb], mut e: u64) -> Vec<Limb> {
        let mut base = a.to_vec();
        let mut acc = self.one();
        let mut t = self.zero();
        while e > 0 {
            if e & 1 == 1 {
                self.mul(&acc, &base, &mut t);
                acc.copy_from_slice(&t);
            }
            self.mul(&base, &base.clone(), &mut t);
            base.copy_from_slice(&t);
            e >>= 1;
        }
        acc
    }
}

/// out = a + b, returns carry.
pub fn add_into(out: &mut [Limb], a: &[Limb], b: &[Limb]) -> u64 {
    let mut carry = 0u64;
    for i in 0..a.len() {
        let acc = (a[i] as u128) + (b[i] as u128) + (carry as u128);
        out[i] = acc as u64;
        carry = (acc >> 64) as u64;
    }
    carry
}

fn add_in_place(out: &mut [Limb], b: &[Limb]) -> u64 {
    let mut carry = 0u64;
    for i in 0..out.len() {
        let acc = (out[i] as u128) + (b[i] as u128) + (carry as u128);
        out[i] = acc as u64;
        carry = (acc >> 64) as u64;
    }
    carry
}

/// out = a - b, returns borrow.
pub fn sub_into(out: &mut [Limb], a: &[Limb], b: &[Limb]) -> u64 {
    let mut borrow = 0i128;
    for i in 0..a.len() {
        let acc = (a[i] as i128) - (b[i] as i128) + borrow;
        out[i] = acc as u64;
        borrow = if acc < 0 { -1 } else { 0 };
    }
    (-borrow) as u64
}

fn sub_in_place(out: &mut [Limb], b: &[Limb]) -> u64 {
    let mut borrow = 0i128;
    for i in 0..out.len() {
        let acc = (out[i] as i128) - (b[i] as i128) + borrow;
        out[i] = acc as u64;
        borrow = if acc < 0 { -1 } else { 0 };
    }
    (-borrow) as u64
}

pub fn cmp(a: &[Limb], b: &[Limb]) -> std::cmp::Ordering {
    for i in (0..a.len()).rev() {
        match a[i].cmp(&b[i]) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}

pub fn is_zero(a: &[Limb]) -> bool {
    a.iter().all(|&l| l == 0)
}

/// Schoolbook product a*b into t (zeroed by this function).
pub fn mul_full(t: &mut [Limb], a: &[Limb], b: &[Limb]) {
    t[..a.len() + b.len() + 1].fill(0);
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        let mut carry = 0u64;
        for (j, &bj) in b.iter().enumerate() {
            let acc = (t[i + j] as u128) + (ai as u128) * (bj as u128) + (carry as u128);
            t[i + j] = acc as u64;
            carry = (acc >> 64) as u64;
        }
        t[i + b.len()] = t[i + b.len()].wrapping_add(carry);
    }
}

/// Long division by a single limb.
pub fn div_small(a: &[Limb], d: u64) -> (Vec<Limb>, u64) {
    let mut q = vec![0; a.len()];
    let mut rem: u128 = 0;
    for i in (0..a.len()).rev() {
        let cur = (rem << 64) | (a[i] as u128);
        q[i] = (cur / (d as u128)) as u64;
        rem = cur % (d as u128);
    }
    (q, rem as u64)
}

fn shr_bits(v: &mut [Limb], k: u32, check_exact: bool) {
    let limb_shift = (k / 64) as usize;
    let bit_shift = k % 64;
    if check_exact {
        for i in 0..limb_shift.min(v.len()) {
            assert_eq!(v[i], 0, "division by 2^k not exact");
        }
        if bit_shift > 0 && limb_shift < v.len() {
            assert_eq!(v[limb_shift] & ((1u64 << bit_shift) - 1), 0);
        }
    }
    let n = v.len();
    for i in 0..n {
        let src = i + limb_shift;
        let mut x = if src < n { v[src] } else { 0 };
        if bit_shift > 0 {
            x >>= bit_shift;
            if src + 1 < n {
                x |= v[src + 1] << (64 - bit_shift);
            }
        }
        v[i] = x;
    }
}

/// Inverse of a mod m for word-sized odd or prime m (extended Euclid).
pub fn inv_mod_u64(a: u64, m: u64) -> u64 {
    let (mut old_r, mut r) = (a as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    assert_eq!(old_r.abs(), 1, "not invertible");
    let mut inv = old_s * old_r.signum();
    inv %= m as i128;
    if inv < 0 {
        inv += m as i128;
    }
    inv as u64
}
