//! Nondegeneracy of a Laurent polynomial with respect to its Newton
//! polytope, and input validation for the zeta pipeline.
//!
//! Vertices never produce torus zeros, edges reduce to a univariate
//! square-freeness test, and the two-dimensional face is decided by
//! eliminating `y` with a resultant and checking the surviving candidate
//! `x`-factors over their residue fields. A bounded exhaustive search
//! covers the witness hunt and the rare case where every resultant
//! collapses.

use crate::arith::{FieldSpec, FqElement};
use crate::error::{Error, Result};
use crate::laurent::{LaurentPolynomial, Ring};
use crate::polytope::{pt, LatticePoint, NewtonPolytope, PolytopeConstants, UnimodularMap};

type FqPoly = Vec<FqElement>;

/// Tiny deterministic generator for the equal-degree splitting trials.
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

// ----------------- dense univariate helpers over any field ------------------

pub(crate) fn ptrim<R: Ring>(ring: &R, v: &mut Vec<R::Elem>) {
    while v.len() > 1 && ring.is_zero(v.last().unwrap()) {
        v.pop();
    }
}

pub(crate) fn pzero<R: Ring>(ring: &R) -> Vec<R::Elem> {
    vec![ring.zero()]
}

pub(crate) fn pis_zero<R: Ring>(ring: &R, v: &[R::Elem]) -> bool {
    v.iter().all(|c| ring.is_zero(c))
}

pub(crate) fn pdeg<R: Ring>(ring: &R, v: &[R::Elem]) -> usize {
    let mut d = v.len();
    while d > 1 && ring.is_zero(&v[d - 1]) {
        d -= 1;
    }
    d - 1
}

pub(crate) fn pmul<R: Ring>(ring: &R, a: &[R::Elem], b: &[R::Elem]) -> Vec<R::Elem> {
    let mut out = vec![ring.zero(); a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        if ring.is_zero(ai) {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            out[i + j] = ring.add(&out[i + j], &ring.mul(ai, bj));
        }
    }
    out
}

/// Remainder of a by b (b nonzero), over a field.
pub(crate) fn prem<R: Ring>(ring: &R, a: &[R::Elem], b: &[R::Elem]) -> Result<Vec<R::Elem>> {
    let mut r: Vec<R::Elem> = a.to_vec();
    ptrim(ring, &mut r);
    let mut bb = b.to_vec();
    ptrim(ring, &mut bb);
    if pis_zero(ring, &bb) {
        return Err(Error::Internal("division by zero polynomial".into()));
    }
    let db = bb.len() - 1;
    if db == 0 {
        return Ok(pzero(ring));
    }
    let lead_inv = ring.inv(&bb[db])?;
    while !pis_zero(ring, &r) && r.len() - 1 >= db {
        let k = r.len() - 1;
        let c = ring.mul(&r[k], &lead_inv);
        if !ring.is_zero(&c) {
            for i in 0..=db {
                let idx = k - db + i;
                let t = ring.mul(&c, &bb[i]);
                r[idx] = ring.sub(&r[idx], &t);
            }
        }
        r.pop();
        ptrim(ring, &mut r);
    }
    Ok(r)
}

pub(crate) fn pgcd<R: Ring>(ring: &R, a: &[R::Elem], b: &[R::Elem]) -> Result<Vec<R::Elem>> {
    let (mut x, mut y) = (a.to_vec(), b.to_vec());
    ptrim(ring, &mut x);
    ptrim(ring, &mut y);
    while !pis_zero(ring, &y) {
        let r = prem(ring, &x, &y)?;
        x = y;
        y = r;
    }
    // monic normalization
    if !pis_zero(ring, &x) {
        let inv = ring.inv(x.last().unwrap())?;
        for c in x.iter_mut() {
            *c = ring.mul(c, &inv);
        }
    }
    Ok(x)
}

/// Exact quotient a / b (remainder must vanish).
pub(crate) fn pdiv_exact<R: Ring>(ring: &R, a: &[R::Elem], b: &[R::Elem]) -> Result<Vec<R::Elem>> {
    let mut r = a.to_vec();
    ptrim(ring, &mut r);
    let mut bb = b.to_vec();
    ptrim(ring, &mut bb);
    let db = bb.len() - 1;
    let lead_inv = ring.inv(&bb[db])?;
    if pis_zero(ring, &r) {
        return Ok(pzero(ring));
    }
    let da = r.len() - 1;
    if da < db {
        return Err(Error::Internal("inexact polynomial division".into()));
    }
    let mut q = vec![ring.zero(); da - db + 1];
    for k in (db..=da).rev() {
        let c = ring.mul(&r[k], &lead_inv);
        q[k - db] = c.clone();
        if !ring.is_zero(&c) {
            for i in 0..=db {
                let t = ring.mul(&c, &bb[i]);
                r[k - db + i] = ring.sub(&r[k - db + i], &t);
            }
        }
    }
    if !pis_zero(ring, &r) {
        return Err(Error::Internal("inexact polynomial division".into()));
    }
    Ok(q)
}

pub(crate) fn ppowmod<R: Ring>(ring: &R, a: &[R::Elem], e: &num_bigint::BigUint, m: &[R::Elem]) -> Result<Vec<R::Elem>> {
    let mut acc = vec![ring.one()];
    let mut base = prem(ring, a, m)?;
    for i in 0..e.bits() {
        if e.bit(i) {
            acc = prem(ring, &pmul(ring, &acc, &base), m)?;
        }
        base = prem(ring, &pmul(ring, &base, &base), m)?;
    }
    Ok(acc)
}

pub(crate) fn pderiv<R: Ring>(ring: &R, a: &[R::Elem]) -> Vec<R::Elem> {
    if a.len() <= 1 {
        return pzero(ring);
    }
    let mut out: Vec<R::Elem> = (1..a.len())
        .map(|i| ring.mul(&a[i], &ring.from_i64(i as i64)))
        .collect();
    ptrim(ring, &mut out);
    out
}

// -------------------- residue field F_q[x]/(m) arithmetic -------------------

/// The field `F_q[x]/(m)` for an irreducible `m` over `F_q`.
pub(crate) struct ResidueField<'a> {
    pub base: &'a FieldSpec,
    pub modulus: FqPoly,
    deg: usize,
}

impl<'a> ResidueField<'a> {
    fn new(base: &'a FieldSpec, modulus: FqPoly) -> ResidueField<'a> {
        let deg = modulus.len() - 1;
        ResidueField { base, modulus, deg }
    }

    fn embed(&self, c: &FqElement) -> Vec<FqElement> {
        let mut v = vec![self.base.zero(); self.deg];
        v[0] = c.clone();
        v
    }

    fn class_of_x(&self) -> Vec<FqElement> {
        if self.deg == 1 {
            // x = -m_0 / m_1
            let inv = self.base.inv(&self.modulus[1]).unwrap();
            vec![self
                .base
                .mul(&self.base.neg(&self.modulus[0]), &inv)]
        } else {
            let mut v = vec![self.base.zero(); self.deg];
            v[1] = self.base.one();
            v
        }
    }
}

impl<'a> Ring for ResidueField<'a> {
    type Elem = Vec<FqElement>;

    fn zero(&self) -> Self::Elem {
        vec![self.base.zero(); self.deg]
    }
    fn one(&self) -> Self::Elem {
        let mut v = self.zero();
        v[0] = self.base.one();
        v
    }
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        a.iter().zip(b).map(|(x, y)| self.base.add(x, y)).collect()
    }
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        a.iter().zip(b).map(|(x, y)| self.base.sub(x, y)).collect()
    }
    fn neg(&self, a: &Self::Elem) -> Self::Elem {
        a.iter().map(|x| self.base.neg(x)).collect()
    }
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        // schoolbook then reduce by the modulus
        let mut prod = vec![self.base.zero(); 2 * self.deg - 1];
        for (i, ai) in a.iter().enumerate() {
            if self.base.is_zero(ai) {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                prod[i + j] = self.base.add(&prod[i + j], &self.base.mul(ai, bj));
            }
        }
        let rem = prem(self.base, &prod, &self.modulus).expect("field ops");
        let mut out = rem;
        out.resize(self.deg, self.base.zero());
        out
    }
    fn is_zero(&self, a: &Self::Elem) -> bool {
        a.iter().all(|c| self.base.is_zero(c))
    }
    fn inv(&self, a: &Self::Elem) -> Result<Self::Elem> {
        if self.is_zero(a) {
            return Err(Error::NonUnit);
        }
        // extended Euclid in F_q[x]
        let mut ap = a.to_vec();
        ptrim(self.base, &mut ap);
        let (mut r0, mut r1) = (self.modulus.clone(), ap);
        let (mut t0, mut t1) = (pzero(self.base), vec![self.base.one()]);
        while !pis_zero(self.base, &r1) {
            // quotient of r0 by r1
            let q = pquot(self.base, &r0, &r1)?;
            let r2 = psub(self.base, &r0, &pmul(self.base, &q, &r1));
            let t2 = psub(self.base, &t0, &pmul(self.base, &q, &t1));
            (r0, r1) = (r1, r2);
            (t0, t1) = (t1, t2);
        }
        if pdeg(self.base, &r0) != 0 {
            return Err(Error::NonUnit);
        }
        let cinv = self.base.inv(&r0[0])?;
        let mut out: Vec<FqElement> = t0.iter().map(|c| self.base.mul(c, &cinv)).collect();
        out.resize(self.deg, self.base.zero());
        Ok(out)
    }
    fn from_i64(&self, k: i64) -> Self::Elem {
        self.embed(&Ring::from_i64(self.base, k))
    }
    fn is_unit(&self, a: &Self::Elem) -> bool {
        !self.is_zero(a)
    }
}

pub(crate) fn psub<R: Ring>(ring: &R, a: &[R::Elem], b: &[R::Elem]) -> Vec<R::Elem> {
    let n = a.len().max(b.len());
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let x = if i < a.len() { a[i].clone() } else { ring.zero() };
        let y = if i < b.len() { b[i].clone() } else { ring.zero() };
        out.push(ring.sub(&x, &y));
    }
    ptrim(ring, &mut out);
    out
}

pub(crate) fn pquot<R: Ring>(ring: &R, a: &[R::Elem], b: &[R::Elem]) -> Result<Vec<R::Elem>> {
    let mut r = a.to_vec();
    ptrim(ring, &mut r);
    let mut bb = b.to_vec();
    ptrim(ring, &mut bb);
    let db = bb.len() - 1;
    let lead_inv = ring.inv(&bb[db])?;
    if pis_zero(ring, &r) || r.len() - 1 < db {
        return Ok(pzero(ring));
    }
    let da = r.len() - 1;
    let mut q = vec![ring.zero(); da - db + 1];
    for k in (db..=da).rev() {
        if k > r.len() - 1 {
            continue;
        }
        let c = ring.mul(&r[k], &lead_inv);
        q[k - db] = c.clone();
        if !ring.is_zero(&c) {
            for i in 0..=db {
                let t = ring.mul(&c, &bb[i]);
                r[k - db + i] = ring.sub(&r[k - db + i], &t);
            }
        }
    }
    Ok(q)
}

// ----------------------- factorization over F_q -----------------------------

/// Distinct irreducible factors (each once) of a nonzero univariate
/// polynomial over F_q, excluding any power of x.
fn distinct_irreducible_factors(field: &FieldSpec, poly: &FqPoly) -> Result<Vec<FqPoly>> {
    let mut f = poly.clone();
    ptrim(field, &mut f);
    // strip x^k
    while f.len() > 1 && field.is_zero(&f[0]) {
        f.remove(0);
    }
    if pdeg(field, &f) == 0 {
        return Ok(Vec::new());
    }
    let q = field.q();
    let mut out = Vec::new();
    let mut remaining = f.clone();
    let mut d = 1usize;
    while pdeg(field, &remaining) >= 1 {
        if pdeg(field, &remaining) < 2 * d {
            // remainder is irreducible
            let inv = field.inv(remaining.last().unwrap())?;
            let monic: FqPoly = remaining.iter().map(|c| field.mul(c, &inv)).collect();
            out.push(monic);
            break;
        }
        // x^(q^d) mod remaining
        let x = vec![field.zero(), field.one()];
        let mut xq = x.clone();
        for _ in 0..d {
            xq = ppowmod(field, &xq, &q, &remaining)?;
        }
        // gcd(remaining, x^(q^d) - x)
        let diff = psub(field, &xq, &x);
        let g = pgcd(field, &remaining, &diff)?;
        if pdeg(field, &g) >= 1 {
            out.extend(equal_degree_split(field, &g, d)?);
            // remove every copy of g's factors
            let mut r = remaining.clone();
            loop {
                let common = pgcd(field, &r, &g)?;
                if pdeg(field, &common) == 0 {
                    break;
                }
                r = pdiv_exact(field, &r, &common)?;
            }
            remaining = r;
        }
        d += 1;
        // recompute x^(q^d) from scratch each round; degrees are tiny here
    }
    Ok(out)
}

/// Cantor-Zassenhaus equal-degree splitting (deterministically seeded).
fn equal_degree_split(field: &FieldSpec, g: &FqPoly, d: usize) -> Result<Vec<FqPoly>> {
    let deg = pdeg(field, g);
    if deg == d {
        return Ok(vec![g.clone()]);
    }
    let mut rng = XorShift(0x5eed_0001);
    let q = field.q();
    loop {
        // pseudo-random trial polynomial of degree < deg
        let h: FqPoly = (0..deg)
            .map(|_| {
                let digits: Vec<u64> = (0..field.n).map(|_| rng.next() % field.p).collect();
                digits
            })
            .collect();
        let split = if field.p == 2 {
            // trace map sum h^(2^i) for i < n*d
            let bits = field.n * d;
            let mut acc = prem(field, &h, g)?;
            let mut cur = acc.clone();
            for _ in 1..bits {
                cur = prem(field, &pmul(field, &cur, &cur), g)?;
                acc = {
                    let mut s = psub(field, &acc, &cur);
                    // char 2: subtraction is addition
                    ptrim(field, &mut s);
                    s
                };
            }
            acc
        } else {
            // h^((q^d - 1)/2) - 1
            let mut e = q.pow(d as u32);
            e -= 1u32;
            e /= 2u32;
            let hp = ppowmod(field, &h, &e, g)?;
            psub(field, &hp, &[field.one()])
        };
        let w = pgcd(field, g, &split)?;
        let dw = pdeg(field, &w);
        if dw >= 1 && dw < deg {
            let other = pdiv_exact(field, g, &w)?;
            let mut out = equal_degree_split(field, &w, d)?;
            out.extend(equal_degree_split(field, &other, d)?);
            return Ok(out);
        }
    }
}

// ----------------------------- face analysis --------------------------------

/// One face of the Newton polytope with its nondegeneracy verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceResult {
    pub face: Face,
    pub ok: bool,
    /// A common torus zero of the face system, when one was located:
    /// coordinates over `F_{q^k}` plus the extension degree `k`.
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Face {
    Vertex(usize),
    Edge(usize),
    Interior,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub x: FqElement,
    pub y: FqElement,
    pub extension_degree: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NondegeneracyReport {
    pub nondegenerate: bool,
    pub faces: Vec<FaceResult>,
}

impl NondegeneracyReport {
    pub fn first_failure(&self) -> Option<&FaceResult> {
        self.faces.iter().find(|f| !f.ok)
    }

    pub fn describe_failure(&self) -> String {
        match self.first_failure() {
            None => "nondegenerate".into(),
            Some(f) => {
                let mut s = match f.face {
                    Face::Vertex(k) => format!("vertex face {k}"),
                    Face::Edge(k) => format!("edge face {k}"),
                    Face::Interior => "full polytope face".into(),
                };
                if let Some(w) = &f.witness {
                    s += &format!(
                        ", witness ({:?}, {:?}) over extension degree {}",
                        w.x, w.y, w.extension_degree
                    );
                }
                s
            }
        }
    }
}

/// The bivariate system f, x f_x, y f_y restricted to a face, cleared into
/// polynomial form with no x- or y-content.
fn face_system(
    field: &FieldSpec,
    f: &LaurentPolynomial<FieldSpec>,
    face_points: Option<&[LatticePoint]>,
) -> Vec<LaurentPolynomial<FieldSpec>> {
    let restricted = match face_points {
        None => f.clone(),
        Some(pts) => {
            let set: std::collections::BTreeSet<(i64, i64)> =
                pts.iter().map(|q| (q.y, q.x)).collect();
            LaurentPolynomial::from_terms(
                field,
                f.iter()
                    .filter(|(q, _)| set.contains(&(q.y, q.x)))
                    .map(|(q, c)| (q, c.clone())),
            )
        }
    };
    vec![
        restricted.clone(),
        restricted.x_dx(field),
        restricted.y_dy(field),
    ]
}

/// Shifts a Laurent polynomial into F_q[x, y] with no monomial content; the
/// torus zero set is unchanged. Returns dense coefficients grid[y][x].
fn clear_to_grid(field: &FieldSpec, h: &LaurentPolynomial<FieldSpec>) -> Vec<Vec<FqElement>> {
    if h.is_zero() {
        return vec![vec![field.zero()]];
    }
    let min_x = h.iter().map(|(q, _)| q.x).min().unwrap();
    let min_y = h.iter().map(|(q, _)| q.y).min().unwrap();
    let max_x = h.iter().map(|(q, _)| q.x).max().unwrap();
    let max_y = h.iter().map(|(q, _)| q.y).max().unwrap();
    let mut grid =
        vec![vec![field.zero(); (max_x - min_x + 1) as usize]; (max_y - min_y + 1) as usize];
    for (q, c) in h.iter() {
        grid[(q.y - min_y) as usize][(q.x - min_x) as usize] = c.clone();
    }
    grid
}

fn grid_deg_y(field: &FieldSpec, g: &[Vec<FqElement>]) -> usize {
    let mut d = g.len();
    while d > 1 && g[d - 1].iter().all(|c| field.is_zero(c)) {
        d -= 1;
    }
    d - 1
}

fn grid_is_constant(field: &FieldSpec, g: &[Vec<FqElement>]) -> bool {
    for (j, row) in g.iter().enumerate() {
        for (i, c) in row.iter().enumerate() {
            if (i, j) != (0, 0) && !field.is_zero(c) {
                return false;
            }
        }
    }
    true
}

/// Evaluates the grid at x = class of the residue field: result in K[y].
fn grid_eval_x(kf: &ResidueField<'_>, g: &[Vec<FqElement>]) -> Vec<Vec<FqElement>> {
    let xi = kf.class_of_x();
    let mut out: Vec<Vec<FqElement>> = Vec::with_capacity(g.len());
    for row in g {
        // Horner in xi over K
        let mut acc = kf.zero();
        for c in row.iter().rev() {
            acc = kf.mul(&acc, &xi);
            acc = kf.add(&acc, &kf.embed(c));
        }
        out.push(acc);
    }
    out
}

/// Resultant with respect to y of two grids, as a polynomial in x, computed
/// by fraction-free elimination of the Sylvester matrix over F_q[x].
fn resultant_y(field: &FieldSpec, a: &[Vec<FqElement>], b: &[Vec<FqElement>]) -> FqPoly {
    let da = grid_deg_y(field, a);
    let db = grid_deg_y(field, b);
    if da == 0 || db == 0 {
        // convention: not used in this degenerate case
        return pzero(field);
    }
    let n = da + db;
    // Sylvester matrix with entries in F_q[x]
    let mut mat: Vec<Vec<FqPoly>> = vec![vec![pzero(field); n]; n];
    for r in 0..db {
        for (k, row) in a.iter().enumerate().take(da + 1) {
            // coefficient of y^k goes to column (r + da - k)
            let col = r + da - k;
            let mut v = row.clone();
            ptrim(field, &mut v);
            mat[r][col] = v;
        }
    }
    for r in 0..da {
        for (k, row) in b.iter().enumerate().take(db + 1) {
            let col = r + db - k;
            let mut v = row.clone();
            ptrim(field, &mut v);
            mat[db + r][col] = v;
        }
    }
    // Bareiss fraction-free elimination over the domain F_q[x]
    let mut prev: FqPoly = vec![field.one()];
    for k in 0..n - 1 {
        // pivot search
        if pis_zero(field, &mat[k][k]) {
            let swap = (k + 1..n).find(|&r| !pis_zero(field, &mat[r][k]));
            match swap {
                Some(r) => {
                    mat.swap(k, r);
                    // row swap flips the sign
                    for c in mat[k].iter_mut() {
                        let neg: FqPoly = c.iter().map(|x| field.neg(x)).collect();
                        *c = neg;
                    }
                }
                None => return pzero(field),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t1 = pmul(field, &mat[k][k], &mat[i][j]);
                let t2 = pmul(field, &mat[i][k], &mat[k][j]);
                let num = psub(field, &t1, &t2);
                mat[i][j] = pdiv_exact(field, &num, &prev).expect("Bareiss division is exact");
            }
        }
        prev = mat[k][k].clone();
    }
    mat[n - 1][n - 1].clone()
}

/// Decides whether the cleared system has a common zero on the torus.
fn system_has_torus_zero(
    field: &FieldSpec,
    grids: &[Vec<Vec<FqElement>>],
    guard: &SearchGuard,
) -> Result<bool> {
    // constants never vanish
    for g in grids {
        if grid_is_constant(field, g) {
            if field.is_zero(&g[0][0]) {
                continue; // identically zero member imposes no condition
            }
            return Ok(false);
        }
    }
    let members: Vec<&Vec<Vec<FqElement>>> = grids
        .iter()
        .filter(|g| !grid_is_constant(field, g))
        .collect();
    if members.is_empty() {
        // all identically zero: every torus point is a solution
        return Ok(true);
    }
    let y_pos: Vec<&Vec<Vec<FqElement>>> = members
        .iter()
        .copied()
        .filter(|g| grid_deg_y(field, g) >= 1)
        .collect();
    let x_only: Vec<&Vec<Vec<FqElement>>> = members
        .iter()
        .copied()
        .filter(|g| grid_deg_y(field, g) == 0)
        .collect();

    // candidate x polynomial
    let candidates: FqPoly = if !x_only.is_empty() {
        let mut acc = x_only[0][0].clone();
        ptrim(field, &mut acc);
        for g in x_only.iter().skip(1) {
            let mut v = g[0].clone();
            ptrim(field, &mut v);
            acc = pgcd(field, &acc, &v)?;
        }
        acc
    } else if y_pos.len() >= 2 {
        let mut found = pzero(field);
        'pairs: for i in 0..y_pos.len() {
            for j in i + 1..y_pos.len() {
                let r = resultant_y(field, y_pos[i], y_pos[j]);
                if !pis_zero(field, &r) {
                    found = r;
                    break 'pairs;
                }
            }
        }
        if pis_zero(field, &found) {
            // every pair shares a component; fall back to bounded search
            return exhaustive_search(field, grids, guard).map(|w| w.is_some());
        }
        found
    } else {
        // single member with positive y-degree and no x constraint: a generic
        // nonzero x keeps a nonzero y-root available
        return Ok(true);
    };

    let factors = distinct_irreducible_factors(field, &candidates)?;
    for m in factors {
        let kf = ResidueField::new(field, m);
        // gcd over K[y] of all members, y-content stripped
        let mut g: Option<Vec<Vec<FqElement>>> = None;
        for mem in &members {
            let mut ev = grid_eval_x(&kf, mem);
            // strip y-content
            while ev.len() > 1 && kf.is_zero(&ev[0]) {
                ev.remove(0);
            }
            ptrim(&kf, &mut ev);
            if pis_zero(&kf, &ev) {
                continue;
            }
            g = Some(match g {
                None => ev,
                Some(prev) => pgcd(&kf, &prev, &ev)?,
            });
        }
        let g = match g {
            None => return Ok(true), // all members vanish along this fiber
            Some(g) => g,
        };
        // nonzero y-roots exist iff the gcd, with y-content stripped, is
        // nonconstant
        let mut gg = g;
        while gg.len() > 1 && kf.is_zero(&gg[0]) {
            gg.remove(0);
        }
        if pdeg(&kf, &gg) >= 1 {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Guard for the exhaustive fallback and the witness hunt.
struct SearchGuard {
    /// Maximum extension degree to scan.
    max_degree: usize,
    /// Skip scans whose torus exceeds this cardinality.
    max_points: u128,
}

/// Scans (F_{q^k}^*)^2 for a common zero, smallest k first. Only supports
/// prime base fields (the embedding is trivial there); other fields return
/// None without scanning.
fn exhaustive_search(
    field: &FieldSpec,
    grids: &[Vec<Vec<FqElement>>],
    guard: &SearchGuard,
) -> Result<Option<Witness>> {
    if field.n != 1 {
        return Err(Error::ExceedsSearchBound);
    }
    for k in 1..=guard.max_degree {
        let ext = FieldSpec::with_default_modulus(field.p, k)?;
        let count = (ext.q() - 1u32).pow(2);
        if count > num_bigint::BigUint::from(guard.max_points) {
            return Err(Error::ExceedsSearchBound);
        }
        for x in ext.iter_elements() {
            if ext.is_zero(&x) {
                continue;
            }
            for y in ext.iter_elements() {
                if ext.is_zero(&y) {
                    continue;
                }
                let mut all = true;
                for g in grids {
                    if grid_is_constant(field, g) && field.is_zero(&g[0][0]) {
                        continue;
                    }
                    let v = eval_grid(field, &ext, g, &x, &y);
                    if !ext.is_zero(&v) {
                        all = false;
                        break;
                    }
                }
                if all {
                    return Ok(Some(Witness {
                        x,
                        y,
                        extension_degree: k,
                    }));
                }
            }
        }
    }
    Ok(None)
}

/// Evaluates a grid with F_p coefficients at a point of an extension of F_p.
fn eval_grid(
    base: &FieldSpec,
    ext: &FieldSpec,
    g: &[Vec<FqElement>],
    x: &FqElement,
    y: &FqElement,
) -> FqElement {
    let mut acc = ext.zero();
    for row in g.iter().rev() {
        acc = ext.mul(&acc, y);
        // Horner in x for the row
        let mut racc = ext.zero();
        for c in row.iter().rev() {
            racc = ext.mul(&racc, x);
            racc = ext.add(&racc, &ext.from_u64(c[0]));
        }
        let _ = base;
        acc = ext.add(&acc, &racc);
    }
    acc
}

/// Full nondegeneracy decision per Definition of the face condition.
pub fn is_nondegenerate(
    field: &FieldSpec,
    f: &LaurentPolynomial<FieldSpec>,
) -> Result<NondegeneracyReport> {
    let poly = f.newton_polytope()?;
    let w = poly.width();
    let h = poly.height();
    let bound = (2 * w * h).min(12) as usize;
    let guard = SearchGuard {
        max_degree: bound,
        max_points: 100_000_000,
    };
    let witness_guard = SearchGuard {
        max_degree: bound.min(3),
        max_points: 1 << 22,
    };
    let mut faces = Vec::new();
    // vertices: a single monomial never vanishes on the torus
    for (k, _) in poly.vertices.iter().enumerate() {
        faces.push(FaceResult {
            face: Face::Vertex(k),
            ok: true,
            witness: None,
        });
    }
    // edges: univariate repeated-root test
    for (k, e) in poly.edges.iter().enumerate() {
        let dir = pt((e.to.x - e.from.x) / e.length, (e.to.y - e.from.y) / e.length);
        let g: FqPoly = (0..=e.length)
            .map(|t| f.coeff(field, pt(e.from.x + t * dir.x, e.from.y + t * dir.y)))
            .collect();
        let gp = pderiv(field, &g);
        let ok = if pis_zero(field, &gp) {
            // inseparable: every root is repeated and nonzero roots exist
            false
        } else {
            let gg = pgcd(field, &g, &gp)?;
            pdeg(field, &gg) == 0
        };
        let witness = if ok {
            None
        } else {
            let edge_points: Vec<LatticePoint> = (0..=e.length)
                .map(|t| pt(e.from.x + t * dir.x, e.from.y + t * dir.y))
                .collect();
            let grids: Vec<_> = face_system(field, f, Some(&edge_points))
                .iter()
                .map(|s| clear_to_grid(field, s))
                .collect();
            exhaustive_search(field, &grids, &witness_guard).unwrap_or(None)
        };
        faces.push(FaceResult {
            face: Face::Edge(k),
            ok,
            witness,
        });
    }
    // the two-dimensional face
    let grids: Vec<_> = face_system(field, f, None)
        .iter()
        .map(|s| clear_to_grid(field, s))
        .collect();
    let has_zero = system_has_torus_zero(field, &grids, &guard)?;
    let witness = if has_zero {
        exhaustive_search(field, &grids, &witness_guard).unwrap_or(None)
    } else {
        None
    };
    faces.push(FaceResult {
        face: Face::Interior,
        ok: !has_zero,
        witness,
    });
    let nondegenerate = faces.iter().all(|f| f.ok);
    Ok(NondegeneracyReport {
        nondegenerate,
        faces,
    })
}

/// A validated, normalized curve ready for the pipeline.
#[derive(Debug, Clone)]
pub struct ValidatedCurve {
    pub field: FieldSpec,
    /// The input polynomial after the normalizing substitution.
    pub f: LaurentPolynomial<FieldSpec>,
    pub polytope: NewtonPolytope,
    pub map: UnimodularMap,
    pub constants: PolytopeConstants,
    pub report: NondegeneracyReport,
}

/// Checks nondegeneracy, then normalizes the exponent lattice so the
/// polytope has unique top/bottom vertices and interior origin.
pub fn validate_input(
    field: &FieldSpec,
    f: &LaurentPolynomial<FieldSpec>,
) -> Result<ValidatedCurve> {
    if f.is_zero() {
        return Err(Error::DimensionTooLow);
    }
    let poly0 = f.newton_polytope()?;
    if poly0.genus() == 0 {
        return Err(Error::GenusZero);
    }
    let report = is_nondegenerate(field, f)?;
    if !report.nondegenerate {
        return Err(Error::Degenerate(report.describe_failure()));
    }
    let map = poly0.normalize()?;
    let g = f.apply_unimodular(&map);
    let poly = g.newton_polytope()?;
    debug_assert!(poly.is_normalized());
    // vertex coefficients must be nonzero (they are: hull vertices of the
    // image are images of support points)
    for v in &poly.vertices {
        if g.get(*v).is_none() {
            return Err(Error::NonUnitVertex);
        }
    }
    let constants = poly.constants();
    Ok(ValidatedCurve {
        field: field.clone(),
        f: g,
        polytope: poly,
        map,
        constants,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diamond(field: &FieldSpec) -> LaurentPolynomial<FieldSpec> {
        LaurentPolynomial::from_terms(
            field,
            [
                (pt(1, 0), field.one()),
                (pt(-1, 0), field.one()),
                (pt(0, 1), field.one()),
                (pt(0, -1), field.one()),
                (pt(0, 0), field.one()),
            ],
        )
    }

    #[test]
    fn diamond_f7_passes() {
        let f7 = FieldSpec::with_default_modulus(7, 1).unwrap();
        let rep = is_nondegenerate(&f7, &diamond(&f7)).unwrap();
        assert!(rep.nondegenerate, "{rep:?}");
    }

    #[test]
    fn diamond_f2_passes() {
        let f2 = FieldSpec::with_default_modulus(2, 1).unwrap();
        let rep = is_nondegenerate(&f2, &diamond(&f2)).unwrap();
        assert!(rep.nondegenerate, "{rep:?}");
    }

    #[test]
    fn diamond_f5_fails_with_witness() {
        let f5 = FieldSpec::with_default_modulus(5, 1).unwrap();
        let rep = is_nondegenerate(&f5, &diamond(&f5)).unwrap();
        assert!(!rep.nondegenerate);
        let fail = rep.first_failure().unwrap();
        assert_eq!(fail.face, Face::Interior);
        let w = fail.witness.as_ref().expect("witness");
        assert_eq!(w.extension_degree, 1);
        assert_eq!(w.x, vec![1]);
        assert_eq!(w.y, vec![1]);
    }

    #[test]
    fn line_passes_everywhere() {
        for p in [2u64, 3, 5, 7, 13] {
            let fp = FieldSpec::with_default_modulus(p, 1).unwrap();
            let f = LaurentPolynomial::from_terms(
                &fp,
                [
                    (pt(1, 0), fp.one()),
                    (pt(0, 1), fp.one()),
                    (pt(0, 0), fp.one()),
                ],
            );
            let rep = is_nondegenerate(&fp, &f).unwrap();
            assert!(rep.nondegenerate, "p = {p}");
        }
    }

    #[test]
    fn genus2_f5_passes() {
        let f5 = FieldSpec::with_default_modulus(5, 1).unwrap();
        // y^2 - x^5 - x - 1
        let m1 = Ring::neg(&f5, &f5.one());
        let f = LaurentPolynomial::from_terms(
            &f5,
            [
                (pt(0, 2), f5.one()),
                (pt(5, 0), m1.clone()),
                (pt(1, 0), m1.clone()),
                (pt(0, 0), m1.clone()),
            ],
        );
        let rep = is_nondegenerate(&f5, &f).unwrap();
        assert!(rep.nondegenerate, "{rep:?}");
    }

    #[test]
    fn degenerate_edge_detected() {
        // f = x^2 + 2xy + y^2 + x^3... edge (2,0)-(0,2) polynomial (x+y)^2 has
        // a repeated root; pad with a far vertex so the hull keeps the edge.
        let f7 = FieldSpec::with_default_modulus(7, 1).unwrap();
        let f = LaurentPolynomial::from_terms(
            &f7,
            [
                (pt(2, 0), f7.one()),
                (pt(1, 1), f7.from_u64(2)),
                (pt(0, 2), f7.one()),
                (pt(0, 0), f7.one()),
            ],
        );
        let rep = is_nondegenerate(&f7, &f).unwrap();
        assert!(!rep.nondegenerate);
        assert!(rep
            .faces
            .iter()
            .any(|fr| matches!(fr.face, Face::Edge(_)) && !fr.ok));
    }

    #[test]
    fn verdict_invariant_under_transforms_and_scaling() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(77);
        for p in [3u64, 5, 7] {
            let fp = FieldSpec::with_default_modulus(p, 1).unwrap();
            let f = diamond(&fp);
            let base = is_nondegenerate(&fp, &f).unwrap().nondegenerate;
            for _ in 0..6 {
                let k = rng.gen_range(-2..3i64);
                let map = UnimodularMap {
                    linear: [[1, k], [0, 1]],
                    shift: pt(rng.gen_range(-2..3), rng.gen_range(-2..3)),
                };
                let g = f.apply_unimodular(&map);
                assert_eq!(is_nondegenerate(&fp, &g).unwrap().nondegenerate, base);
                // unit scaling
                let c = fp.from_u64(rng.gen_range(1..p));
                let gs = g.scale(&fp, &c);
                assert_eq!(is_nondegenerate(&fp, &gs).unwrap().nondegenerate, base);
            }
        }
    }

    #[test]
    fn validate_input_examples() {
        let f7 = FieldSpec::with_default_modulus(7, 1).unwrap();
        let v = validate_input(&f7, &diamond(&f7)).unwrap();
        assert!(v.map.is_identity());
        assert_eq!(v.polytope.genus(), 1);

        let f5 = FieldSpec::with_default_modulus(5, 1).unwrap();
        assert!(matches!(
            validate_input(&f5, &diamond(&f5)),
            Err(Error::Degenerate(_))
        ));

        // genus-0 input
        let f3 = FieldSpec::with_default_modulus(3, 1).unwrap();
        let line = LaurentPolynomial::from_terms(
            &f3,
            [
                (pt(1, 0), f3.one()),
                (pt(0, 1), f3.one()),
                (pt(0, 0), f3.one()),
            ],
        );
        assert!(matches!(
            validate_input(&f3, &line),
            Err(Error::GenusZero)
        ));

        // genus-2 curve normalizes automatically
        let m1 = Ring::neg(&f5, &f5.one());
        let g2 = LaurentPolynomial::from_terms(
            &f5,
            [
                (pt(0, 2), f5.one()),
                (pt(5, 0), m1.clone()),
                (pt(1, 0), m1.clone()),
                (pt(0, 0), m1),
            ],
        );
        let v = validate_input(&f5, &g2).unwrap();
        assert_eq!(v.polytope.genus(), 2);
        assert!(v.polytope.is_normalized());
        assert_eq!(v.polytope.vol2, 10);
    }
}
