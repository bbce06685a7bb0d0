//! Independent verification: brute-force torus point counts over
//! extension fields, and count extraction from a computed zeta function.

use crate::arith::{FieldSpec, FqElement};
use crate::error::{Error, Result, Stage};
use crate::laurent::LaurentPolynomial;
use crate::nondegen::{pdeg, pdiv_exact, pgcd, pmul, ppowmod, prem, ptrim};
use crate::zeta::{compute_zeta, power_sums, ZetaOptions, ZetaResult};
use num_bigint::{BigInt, BigUint};

/// Guard on the enumeration size.
const TORUS_GUARD: u64 = 100_000_000;

/// Deterministic generator for the root-splitting trials.
struct XorShift(u64);

impl XorShift {
    fn next(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }
}

/// Finds a root in `ext` of a polynomial with `ext` coefficients that
/// splits completely there (used for the subfield embedding).
fn find_root(ext: &FieldSpec, poly: &[FqElement]) -> Result<FqElement> {
    let mut g = poly.to_vec();
    ptrim(ext, &mut g);
    let mut rng = XorShift(0x0ddba11);
    loop {
        let deg = pdeg(ext, &g);
        if deg == 0 {
            return Err(Error::Internal("no root in the extension".into()));
        }
        if deg == 1 {
            let inv = ext.inv(&g[1])?;
            return Ok(ext.mul(&ext.neg(&g[0]), &inv));
        }
        // random splitting trial
        let h: Vec<FqElement> = (0..deg)
            .map(|_| (0..ext.n).map(|_| rng.next() % ext.p).collect())
            .collect();
        let w = if ext.p == 2 {
            // trace map over F_2
            let bits = ext.n;
            let mut acc = prem(ext, &h, &g)?;
            let mut cur = acc.clone();
            for _ in 1..bits {
                cur = prem(ext, &pmul(ext, &cur, &cur), &g)?;
                for (i, c) in cur.iter().enumerate() {
                    if i < acc.len() {
                        acc[i] = ext.add(&acc[i], c);
                    } else {
                        acc.push(c.clone());
                    }
                }
                ptrim(ext, &mut acc);
            }
            pgcd(ext, &g, &acc)?
        } else {
            let mut e = ext.q();
            e -= 1u32;
            e /= 2u32;
            let hp = ppowmod(ext, &h, &e, &g)?;
            let mut shifted = hp;
            if shifted.is_empty() {
                shifted.push(ext.zero());
            }
            shifted[0] = ext.sub(&shifted[0], &ext.one());
            ptrim(ext, &mut shifted);
            pgcd(ext, &g, &shifted)?
        };
        let dw = pdeg(ext, &w);
        if dw >= 1 && dw < deg {
            // keep the smaller factor
            let other = pdiv_exact(ext, &g, &w)?;
            g = if pdeg(ext, &w) <= pdeg(ext, &other) {
                w
            } else {
                other
            };
        }
    }
}

/// Embedding of the base field into the degree-k extension: the image of
/// the generator plus the extension itself.
struct Embedding {
    ext: FieldSpec,
    /// Image of the base generator; powers embed coefficient vectors.
    gen_image_powers: Vec<FqElement>,
}

impl Embedding {
    fn new(base: &FieldSpec, k: usize) -> Result<Embedding> {
        let ext = FieldSpec::with_default_modulus(base.p, base.n * k)?;
        let gen_image = if base.n == 1 {
            ext.zero()
        } else {
            // root of the base modulus inside the extension
            let rbar: Vec<FqElement> = base.rbar.iter().map(|&c| ext.from_u64(c)).collect();
            find_root(&ext, &rbar)?
        };
        let mut powers = vec![ext.one()];
        for _ in 1..base.n.max(1) {
            let prev = powers.last().unwrap();
            powers.push(ext.mul(prev, &gen_image));
        }
        Ok(Embedding {
            ext,
            gen_image_powers: powers,
        })
    }

    fn embed(&self, c: &FqElement) -> FqElement {
        let mut acc = self.ext.zero();
        for (digit, pw) in c.iter().zip(&self.gen_image_powers) {
            let t = self.ext.scale(pw, *digit);
            acc = self.ext.add(&acc, &t);
        }
        acc
    }
}

/// Quadratic residue character via Euler's criterion (odd fields).
fn chi_quadratic(ext: &FieldSpec, a: &FqElement) -> i32 {
    if ext.is_zero(a) {
        return 0;
    }
    let mut e = ext.q();
    e -= 1u32;
    e /= 2u32;
    let v = ext.pow_big(a, &e);
    if v == ext.one() {
        1
    } else {
        -1
    }
}

/// Exhaustive torus count of `fbar = 0` over the degree-k extension.
pub fn brute_force_count(
    field: &FieldSpec,
    fbar: &LaurentPolynomial<FieldSpec>,
    k: usize,
) -> Result<u64> {
    let q_k = field.q().pow(k as u32);
    let torus = (&q_k - 1u32) * (&q_k - 1u32);
    if torus > BigUint::from(TORUS_GUARD) {
        return Err(Error::TooLarge);
    }
    let emb = Embedding::new(field, k)?;
    let ext = &emb.ext;
    // shift exponents to a nonnegative grid (torus counts are unchanged)
    let min_x = fbar.iter().map(|(q, _)| q.x).min().unwrap();
    let min_y = fbar.iter().map(|(q, _)| q.y).min().unwrap();
    let max_y = fbar.iter().map(|(q, _)| q.y).max().unwrap();
    let rows = (max_y - min_y + 1) as usize;
    let max_x = fbar.iter().map(|(q, _)| q.x).max().unwrap();
    let cols = (max_x - min_x + 1) as usize;
    let mut grid: Vec<Vec<FqElement>> = vec![vec![ext.zero(); cols]; rows];
    for (q, c) in fbar.iter() {
        grid[(q.y - min_y) as usize][(q.x - min_x) as usize] = emb.embed(c);
    }
    let quadratic = rows == 3 || rows == 2;
    let fiber_count = |x: FqElement| -> u64 {
        if ext.is_zero(&x) {
            return 0;
        }
        // evaluate the row polynomials at x
        let mut rows_at_x: Vec<FqElement> = Vec::with_capacity(rows);
        for row in &grid {
            let mut acc = ext.zero();
            for c in row.iter().rev() {
                acc = ext.mul(&acc, &x);
                acc = ext.add(&acc, c);
            }
            rows_at_x.push(acc);
        }
        if quadratic && ext.p != 2 && rows == 3 {
            // count nonzero roots of A y^2 + B y + C
            let (c, b, a) = (&rows_at_x[0], &rows_at_x[1], &rows_at_x[2]);
            return count_quadratic_roots(ext, a, b, c);
        }
        if quadratic && ext.p != 2 && rows == 2 {
            let (c, b) = (&rows_at_x[0], &rows_at_x[1]);
            return count_quadratic_roots(ext, &ext.zero(), b, c);
        }
        let mut count = 0u64;
        for y in ext.iter_elements() {
            if ext.is_zero(&y) {
                continue;
            }
            let mut acc = ext.zero();
            for c in rows_at_x.iter().rev() {
                acc = ext.mul(&acc, &y);
                acc = ext.add(&acc, c);
            }
            if ext.is_zero(&acc) {
                count += 1;
            }
        }
        count
    };
    #[cfg(feature = "parallel")]
    let count: u64 = {
        use rayon::prelude::*;
        let xs: Vec<FqElement> = ext.iter_elements().collect();
        xs.into_par_iter().map(fiber_count).sum()
    };
    #[cfg(not(feature = "parallel"))]
    let count: u64 = ext.iter_elements().map(fiber_count).sum();
    Ok(count)
}

/// Nonzero roots of `A y^2 + B y + C` over an odd field.
fn count_quadratic_roots(ext: &FieldSpec, a: &FqElement, b: &FqElement, c: &FqElement) -> u64 {
    if ext.is_zero(a) {
        return if ext.is_zero(b) {
            if ext.is_zero(c) {
                // the whole fiber lies on the curve
                let q: BigUint = ext.q() - 1u32;
                q.to_u64_digits().first().copied().unwrap_or(0)
            } else {
                0
            }
        } else if ext.is_zero(c) {
            0
        } else {
            1
        };
    }
    let four = ext.from_u64(4);
    let disc = ext.sub(&ext.mul(b, b), &ext.mul(&four, &ext.mul(a, c)));
    let roots = match chi_quadratic(ext, &disc) {
        1 => 2i64,
        0 => 1,
        _ => 0,
    };
    let at_zero = if ext.is_zero(c) { 1 } else { 0 };
    (roots - at_zero).max(0) as u64
}

/// Point counts over F_{q^k} read off a zeta result.
pub fn counts_from_zeta(z: &ZetaResult, kmax: usize) -> Vec<BigInt> {
    let q = BigUint::from(z.p).pow(z.n as u32);
    let s = power_sums(&z.p_num, kmax);
    (1..=kmax)
        .map(|k| BigInt::from(q.pow(k as u32)) - &s[k])
        .collect()
}

/// One verification row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountRow {
    pub k: usize,
    pub oracle: u64,
    pub from_zeta: BigInt,
    pub matches: bool,
}

#[derive(Debug, Clone)]
pub struct CountReport {
    pub rows: Vec<CountRow>,
    pub all_match: bool,
    pub result: ZetaResult,
}

/// Runs the pipeline and compares against brute force for k up to kmax.
pub fn verify(
    field: &FieldSpec,
    fbar: &LaurentPolynomial<FieldSpec>,
    kmax: usize,
    options: &ZetaOptions,
) -> Result<CountReport> {
    let mut opts = *options;
    opts.kmax = opts.kmax.max(kmax);
    let result = compute_zeta(field, fbar, &opts)?;
    let from_zeta = counts_from_zeta(&result, kmax);
    let mut rows = Vec::with_capacity(kmax);
    let mut all = true;
    for k in 1..=kmax {
        let oracle = brute_force_count(field, fbar, k).map_err(|e| e.staged(Stage::Oracle))?;
        let z = from_zeta[k - 1].clone();
        let matches = BigInt::from(oracle) == z;
        all &= matches;
        rows.push(CountRow {
            k,
            oracle,
            from_zeta: z,
            matches,
        });
    }
    Ok(CountReport {
        rows,
        all_match: all,
        result,
    })
}
