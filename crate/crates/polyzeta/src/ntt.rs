//! Number-theoretic transforms over word-sized primes, with CRT
//! recombination back to residues modulo `p^N`.
//!
//! Dense row convolutions dominate the pipeline cost, so products are
//! computed modulo a set of NTT-friendly primes and recombined by Garner's
//! algorithm. Primes are found at run time (deterministic Miller-Rabin) and
//! twiddle tables are cached per transform size.

use crate::nat::{self, Limb, Modulus};
use std::collections::HashMap;

/// Largest supported transform, as a power of two.
const MAX_LOG: u32 = 24;

fn mulmod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128) * (b as u128) % (m as u128)) as u64
}

fn powmod_u64(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod_u64(acc, a, m);
        }
        a = mulmod_u64(a, a, m);
        e >>= 1;
    }
    acc
}

pub(crate) fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let d = n - 1;
    let s = d.trailing_zeros();
    let d = d >> s;
    'witness: for &a in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod_u64(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn pollard_rho(n: u64) -> u64 {
    if n % 2 == 0 {
        return 2;
    }
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mulmod_u64(x, x, n) + c) % n;
        let (mut x, mut y, mut d) = (2u64, 2u64, 1u64);
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = gcd_u64(x.abs_diff(y), n);
        }
        if d != n {
            return d;
        }
        c += 1;
    }
}

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn factorize(mut n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime_u64(n) {
        out.push(n);
        return;
    }
    let mut d = 0;
    for p in [2u64, 3, 5, 7, 11, 13] {
        if n % p == 0 {
            d = p;
            break;
        }
    }
    if d == 0 {
        d = pollard_rho(n);
    }
    while n % d == 0 {
        n /= d;
    }
    factorize(d, out);
    factorize(n, out);
}

/// An NTT prime `q = k * 2^MAX_LOG + 1` with Montgomery constants.
#[derive(Debug, Clone)]
struct NttPrime {
    q: u64,
    ninv: u64, // -q^{-1} mod 2^64
    r2: u64,   // 2^128 mod q
    g: u64,    // primitive root (plain form)
}

impl NttPrime {
    fn new(q: u64) -> NttPrime {
        let mut inv: u64 = 1;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(q.wrapping_mul(inv)));
        }
        let r = ((1u128 << 64) % q as u128) as u64;
        let r2 = mulmod_u64(r, r, q);
        let mut fs = Vec::new();
        factorize(q - 1, &mut fs);
        fs.sort_unstable();
        fs.dedup();
        let mut g = 2u64;
        'search: loop {
            for &f in &fs {
                if powmod_u64(g, (q - 1) / f, q) == 1 {
                    g += 1;
                    continue 'search;
                }
            }
            break;
        }
        NttPrime {
            q,
            ninv: inv.wrapping_neg(),
            r2,
            g,
        }
    }

    #[inline(always)]
    fn redc(&self, t: u128) -> u64 {
        let m = (t as u64).wrapping_mul(self.ninv);
        let t = (t + (m as u128) * (self.q as u128)) >> 64;
        let t = t as u64;
        if t >= self.q {
            t - self.q
        } else {
            t
        }
    }

    #[inline(always)]
    fn mmul(&self, a: u64, b: u64) -> u64 {
        self.redc((a as u128) * (b as u128))
    }

    #[inline(always)]
    fn to_mont(&self, a: u64) -> u64 {
        self.mmul(a, self.r2)
    }

    #[inline(always)]
    fn from_mont(&self, a: u64) -> u64 {
        self.redc(a as u128)
    }

    #[inline(always)]
    fn madd(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }

    #[inline(always)]
    fn msub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.q - b
        }
    }
}

/// Per (prime, size) twiddle tables, in Montgomery form.
struct Twiddles {
    fwd: Vec<u64>,
    inv: Vec<u64>,
    n_inv: u64,
}

fn build_twiddles(pr: &NttPrime, log_len: u32) -> Twiddles {
    let len = 1usize << log_len;
    let w = powmod_u64(pr.g, (pr.q - 1) >> log_len, pr.q);
    let winv = powmod_u64(w, pr.q - 2, pr.q);
    // tables indexed by [block half-size] layout: for each stage with half h,
    // the h twiddles live at offset h.
    let mut fwd = vec![0u64; len];
    let mut inv = vec![0u64; len];
    let mut h = 1usize;
    while h < len {
        let step = powmod_u64(w, (len / (2 * h)) as u64, pr.q);
        let step_inv = powmod_u64(winv, (len / (2 * h)) as u64, pr.q);
        let mut cur = pr.to_mont(1);
        let mut cur_inv = pr.to_mont(1);
        let sm = pr.to_mont(step);
        let sim = pr.to_mont(step_inv);
        for k in 0..h {
            fwd[h + k] = cur;
            inv[h + k] = cur_inv;
            cur = pr.mmul(cur, sm);
            cur_inv = pr.mmul(cur_inv, sim);
        }
        h *= 2;
    }
    let n_inv = pr.to_mont(powmod_u64(len as u64, pr.q - 2, pr.q));
    Twiddles { fwd, inv, n_inv }
}

/// Decimation-in-frequency forward transform; output in bit-reversed order.
fn ntt_forward(pr: &NttPrime, tw: &Twiddles, a: &mut [u64]) {
    let n = a.len();
    let mut h = n / 2;
    while h >= 1 {
        for start in (0..n).step_by(2 * h) {
            for k in 0..h {
                let wk = tw.fwd[h + k];
                let (x, y) = (a[start + k], a[start + k + h]);
                a[start + k] = pr.madd(x, y);
                a[start + k + h] = pr.mmul(pr.msub(x, y), wk);
            }
        }
        h /= 2;
    }
}

/// Decimation-in-time inverse transform; input in bit-reversed order.
fn ntt_inverse(pr: &NttPrime, tw: &Twiddles, a: &mut [u64]) {
    let n = a.len();
    let mut h = 1;
    while h < n {
        for start in (0..n).step_by(2 * h) {
            for k in 0..h {
                let wk = tw.inv[h + k];
                let x = a[start + k];
                let y = pr.mmul(a[start + k + h], wk);
                a[start + k] = pr.madd(x, y);
                a[start + k + h] = pr.msub(x, y);
            }
        }
        h *= 2;
    }
    for v in a.iter_mut() {
        *v = pr.mmul(*v, tw.n_inv);
    }
}

/// Plan for a batch of row convolutions sharing length and coefficient size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvPlan {
    pub primes: usize,
    pub log_len: u32,
    pub len: usize,
}

/// Forward transforms of one coefficient row under a plan.
pub struct RowFft {
    data: Vec<Vec<u64>>,
}

/// Pointwise accumulator for sums of row products.
pub struct RowAcc {
    data: Vec<Vec<u64>>,
}

pub struct Convolver {
    primes: Vec<NttPrime>,
    tables: HashMap<(usize, u32), Twiddles>,
    /// Garner data per prime count: pp[t][s] = prod(q_0..q_{s-1}) mod q_t,
    /// inv[t] = prod(q_0..q_{t-1})^{-1} mod q_t (all Montgomery form).
    garner_pp: Vec<Vec<u64>>,
    garner_inv: Vec<u64>,
    /// prod(q_0..q_{t-1}) as limbs, for digit recombination.
    prefix_limbs: Vec<Vec<Limb>>,
}

impl Convolver {
    pub fn new() -> Convolver {
        Convolver {
            primes: Vec::new(),
            tables: HashMap::new(),
            garner_pp: Vec::new(),
            garner_inv: Vec::new(),
            prefix_limbs: Vec::new(),
        }
    }

    fn ensure_primes(&mut self, count: usize) {
        let mut candidate = if let Some(last) = self.primes.last() {
            last.q - (1u64 << MAX_LOG)
        } else {
            // largest k*2^MAX_LOG + 1 below 2^62
            ((1u64 << 62) >> MAX_LOG << MAX_LOG) + 1
        };
        while self.primes.len() < count {
            if is_prime_u64(candidate) {
                let pr = NttPrime::new(candidate);
                // Garner precomputations for the new index t.
                let t = self.primes.len();
                let mut row = Vec::with_capacity(t + 1);
                let mut prod_mod = 1u64 % pr.q;
                row.push(pr.to_mont(prod_mod)); // empty product for s = 0
                for s in 0..t {
                    prod_mod = mulmod_u64(prod_mod, self.primes[s].q % pr.q, pr.q);
                    row.push(pr.to_mont(prod_mod));
                }
                let inv = powmod_u64(prod_mod, pr.q - 2, pr.q);
                self.garner_inv.push(pr.to_mont(inv));
                self.garner_pp.push(row);
                let prev = if t == 0 {
                    vec![1u64]
                } else {
                    let v = &self.prefix_limbs[t - 1];
                    let mut wide = vec![0u64; v.len() + 2];
                    nat::mul_full(&mut wide, v, &[self.primes[t - 1].q]);
                    while wide.len() > 1 && *wide.last().unwrap() == 0 {
                        wide.pop();
                    }
                    wide
                };
                self.prefix_limbs.push(prev);
                self.primes.push(pr);
            }
            candidate -= 1u64 << MAX_LOG;
        }
    }

    /// Chooses prime count and transform length for products whose
    /// coefficients are bounded by `2^product_bits`.
    pub fn plan(&mut self, product_bits: u64, out_len: usize) -> ConvPlan {
        let mut log_len = 0;
        while (1usize << log_len) < out_len {
            log_len += 1;
        }
        assert!(log_len <= MAX_LOG, "convolution too long");
        let mut primes = 0;
        let mut bits = 0u64;
        while bits < product_bits {
            primes += 1;
            self.ensure_primes(primes);
            bits += 63 - self.primes[primes - 1].q.leading_zeros() as u64;
        }
        self.ensure_primes(primes);
        for t in 0..primes {
            if !self.tables.contains_key(&(t, log_len)) {
                let tw = build_twiddles(&self.primes[t], log_len);
                self.tables.insert((t, log_len), tw);
            }
        }
        ConvPlan {
            primes,
            log_len,
            len: 1usize << log_len,
        }
    }

    /// Transforms a dense row of coefficients, each `words` limbs.
    pub fn forward_slices(&mut self, plan: &ConvPlan, words: usize, row: &[Limb]) -> RowFft {
        let n_coeff = row.len() / words.max(1);
        let mut data = Vec::with_capacity(plan.primes);
        for t in 0..plan.primes {
            let pr = &self.primes[t];
            let q = pr.q as u128;
            let shift = ((1u128 << 64) % q) as u64;
            let mut buf = vec![0u64; plan.len];
            for c in 0..n_coeff {
                let limbs = &row[c * words..(c + 1) * words];
                let mut r: u64 = 0;
                for &l in limbs.iter().rev() {
                    r = ((r as u128 * shift as u128 + l as u128) % q) as u64;
                }
                buf[c] = pr.to_mont(r);
            }
            let tw = self.tables.get(&(t, plan.log_len)).unwrap();
            ntt_forward(pr, tw, &mut buf);
            data.push(buf);
        }
        RowFft { data }
    }

    pub fn new_acc(&self, plan: &ConvPlan) -> RowAcc {
        RowAcc {
            data: (0..plan.primes).map(|_| vec![0u64; plan.len]).collect(),
        }
    }

    /// acc += a * b pointwise.
    pub fn add_product(&self, plan: &ConvPlan, acc: &mut RowAcc, a: &RowFft, b: &RowFft) {
        for t in 0..plan.primes {
            let pr = &self.primes[t];
            let (av, bv, ov) = (&a.data[t], &b.data[t], &mut acc.data[t]);
            for i in 0..plan.len {
                ov[i] = pr.madd(ov[i], pr.mmul(av[i], bv[i]));
            }
        }
    }

    /// Inverse transform plus Garner recombination into residues mod `m`.
    /// Returns `out_len` coefficients of `m.words` limbs each.
    pub fn finish(
        &mut self,
        plan: &ConvPlan,
        mut acc: RowAcc,
        m: &Modulus,
        out_len: usize,
    ) -> Vec<Limb> {
        for t in 0..plan.primes {
            let tw = self.tables.get(&(t, plan.log_len)).unwrap();
            ntt_inverse(&self.primes[t], tw, &mut acc.data[t]);
        }
        let w = m.words;
        let mut out = vec![0u64; out_len * w];
        let t_count = plan.primes;
        let mut digits = vec![0u64; t_count];
        let mut wide = vec![0u64; t_count + 2];
        for c in 0..out_len {
            // Garner mixed-radix digits.
            for t in 0..t_count {
                let pr = &self.primes[t];
                let r = acc.data[t][c]; // montgomery form
                let mut x = 0u64; // montgomery accumulated value of digits
                for s in 0..t {
                    // x += v_s * prod(q_0..q_{s-1}) (mont)
                    let term = pr.mmul(pr.to_mont(digits[s] % pr.q), self.garner_pp[t][s]);
                    x = pr.madd(x, term);
                }
                let diff = pr.msub(r, x);
                let v = pr.mmul(diff, self.garner_inv[t]);
                digits[t] = pr.from_mont(v);
            }
            // value = sum digits[t] * prefix_limbs[t]
            wide.fill(0);
            for t in 0..t_count {
                if digits[t] == 0 {
                    continue;
                }
                let p = &self.prefix_limbs[t];
                let mut carry: u64 = 0;
                for (i, &pl) in p.iter().enumerate() {
                    let accv =
                        (wide[i] as u128) + (digits[t] as u128) * (pl as u128) + carry as u128;
                    wide[i] = accv as u64;
                    carry = (accv >> 64) as u64;
                }
                let mut k = p.len();
                while carry != 0 {
                    let (s, o) = wide[k].overflowing_add(carry);
                    wide[k] = s;
                    carry = o as u64;
                    k += 1;
                }
            }
            let red = m.reduce_wide(&wide);
            out[c * w..(c + 1) * w].copy_from_slice(&red);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;
    use rand::{Rng, SeedableRng};

    #[test]
    fn primes_are_found() {
        let mut cv = Convolver::new();
        cv.ensure_primes(4);
        for pr in &cv.primes {
            assert!(is_prime_u64(pr.q));
            assert_eq!((pr.q - 1) % (1 << MAX_LOG), 0);
        }
    }

    #[test]
    fn convolution_matches_schoolbook() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let mut cv = Convolver::new();
        for &(p, e) in &[(7u64, 31u32), (2, 69), (5, 102)] {
            let m = Modulus::new(p, e);
            let la = 37;
            let lb = 25;
            let mk_row = |rng: &mut rand::rngs::StdRng| -> Vec<u64> {
                let mut row = vec![0u64; la.max(lb) * m.words];
                for c in row.chunks_mut(m.words) {
                    let v: Vec<u32> = (0..2 * m.words).map(|_| rng.gen()).collect();
                    c.copy_from_slice(&m.from_biguint(&BigUint::from_slice(&v)));
                }
                row
            };
            let a = mk_row(&mut rng)[..la * m.words].to_vec();
            let b = mk_row(&mut rng)[..lb * m.words].to_vec();
            let out_len = la + lb - 1;
            let bits = 2 * (m.limbs.len() as u64 * 64) + 8;
            let plan = cv.plan(bits, out_len);
            let fa = cv.forward_slices(&plan, m.words, &a);
            let fb = cv.forward_slices(&plan, m.words, &b);
            let mut acc = cv.new_acc(&plan);
            cv.add_product(&plan, &mut acc, &fa, &fb);
            let got = cv.finish(&plan, acc, &m, out_len);
            // schoolbook reference over BigUint
            let mb = BigUint::from(p).pow(e);
            for k in 0..out_len {
                let mut expect = BigUint::from(0u32);
                for i in 0..la {
                    if k >= i && k - i < lb {
                        let av = crate::nat::limbs_to_biguint(&a[i * m.words..(i + 1) * m.words]);
                        let bv = crate::nat::limbs_to_biguint(
                            &b[(k - i) * m.words..(k - i + 1) * m.words],
                        );
                        expect += av * bv;
                    }
                }
                expect %= &mb;
                let got_k =
                    crate::nat::limbs_to_biguint(&got[k * m.words..(k + 1) * m.words]);
                assert_eq!(got_k, expect, "coefficient {k} mismatch");
            }
        }
    }
}
