//! Sparse Laurent polynomials over `F_q` or `Z_q`, strip reduction modulo
//! the curve equation, partial derivatives and the operator
//! `D(h) = xy (f_y h_x - f_x h_y)`.
//!
//! Two representations coexist: a sparse exponent map used by the general
//! operations, and a dense row-major "strip" form used by the Frobenius
//! pipeline, whose products go through the NTT convolver.

use crate::arith::{FieldSpec, FqElement, ZqContext, ZqElement};
use crate::error::{Error, Result};
use crate::nat::{self, Limb};
use crate::ntt::Convolver;
use crate::polytope::{pt, LatticePoint, NewtonPolytope};
use std::collections::BTreeMap;

/// Ring-context abstraction so Laurent polynomials work over both `F_q`
/// and `Z_q`.
pub trait Ring {
    type Elem: Clone + PartialEq + std::fmt::Debug;
    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    fn inv(&self, a: &Self::Elem) -> Result<Self::Elem>;
    fn from_i64(&self, k: i64) -> Self::Elem;
    fn is_unit(&self, a: &Self::Elem) -> bool;
}

impl Ring for FieldSpec {
    type Elem = FqElement;

    fn zero(&self) -> FqElement {
        FieldSpec::zero(self)
    }
    fn one(&self) -> FqElement {
        FieldSpec::one(self)
    }
    fn add(&self, a: &FqElement, b: &FqElement) -> FqElement {
        FieldSpec::add(self, a, b)
    }
    fn sub(&self, a: &FqElement, b: &FqElement) -> FqElement {
        FieldSpec::sub(self, a, b)
    }
    fn mul(&self, a: &FqElement, b: &FqElement) -> FqElement {
        FieldSpec::mul(self, a, b)
    }
    fn neg(&self, a: &FqElement) -> FqElement {
        FieldSpec::neg(self, a)
    }
    fn is_zero(&self, a: &FqElement) -> bool {
        FieldSpec::is_zero(self, a)
    }
    fn inv(&self, a: &FqElement) -> Result<FqElement> {
        FieldSpec::inv(self, a)
    }
    fn from_i64(&self, k: i64) -> FqElement {
        let r = k.rem_euclid(self.p as i64) as u64;
        self.from_u64(r)
    }
    fn is_unit(&self, a: &FqElement) -> bool {
        !FieldSpec::is_zero(self, a)
    }
}

impl Ring for ZqContext {
    type Elem = ZqElement;

    fn zero(&self) -> ZqElement {
        ZqContext::zero(self)
    }
    fn one(&self) -> ZqElement {
        ZqContext::one(self)
    }
    fn add(&self, a: &ZqElement, b: &ZqElement) -> ZqElement {
        ZqContext::add(self, a, b)
    }
    fn sub(&self, a: &ZqElement, b: &ZqElement) -> ZqElement {
        ZqContext::sub(self, a, b)
    }
    fn mul(&self, a: &ZqElement, b: &ZqElement) -> ZqElement {
        ZqContext::mul(self, a, b)
    }
    fn neg(&self, a: &ZqElement) -> ZqElement {
        ZqContext::neg(self, a)
    }
    fn is_zero(&self, a: &ZqElement) -> bool {
        ZqContext::is_zero(self, a)
    }
    fn inv(&self, a: &ZqElement) -> Result<ZqElement> {
        ZqContext::inv(self, a)
    }
    fn from_i64(&self, k: i64) -> ZqElement {
        let v = self.from_u64(k.unsigned_abs());
        if k < 0 {
            ZqContext::neg(self, &v)
        } else {
            v
        }
    }
    fn is_unit(&self, a: &ZqElement) -> bool {
        ZqContext::is_unit(self, a)
    }
}

/// Sparse Laurent polynomial keyed `(y, x)` so iteration is y-major.
pub struct LaurentPolynomial<R: Ring> {
    pub terms: BTreeMap<(i64, i64), R::Elem>,
}

impl<R: Ring> Default for LaurentPolynomial<R> {
    fn default() -> Self {
        LaurentPolynomial {
            terms: BTreeMap::new(),
        }
    }
}

impl<R: Ring> Clone for LaurentPolynomial<R> {
    fn clone(&self) -> Self {
        LaurentPolynomial {
            terms: self.terms.clone(),
        }
    }
}

impl<R: Ring> PartialEq for LaurentPolynomial<R> {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}

impl<R: Ring> std::fmt::Debug for LaurentPolynomial<R> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_map().entries(self.terms.iter()).finish()
    }
}

impl<R: Ring> LaurentPolynomial<R> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(ring: &R, q: LatticePoint, c: R::Elem) -> Self {
        let mut p = Self::zero();
        p.insert_add(ring, q, c);
        p
    }

    pub fn from_terms(ring: &R, terms: impl IntoIterator<Item = (LatticePoint, R::Elem)>) -> Self {
        let mut p = Self::zero();
        for (q, c) in terms {
            p.insert_add(ring, q, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, q: LatticePoint) -> Option<&R::Elem> {
        self.terms.get(&(q.y, q.x))
    }

    pub fn coeff(&self, ring: &R, q: LatticePoint) -> R::Elem {
        self.get(q).cloned().unwrap_or_else(|| ring.zero())
    }

    pub fn iter(&self) -> impl Iterator<Item = (LatticePoint, &R::Elem)> {
        self.terms.iter().map(|(&(y, x), c)| (pt(x, y), c))
    }

    pub fn support(&self) -> Vec<LatticePoint> {
        self.iter().map(|(q, _)| q).collect()
    }

    pub fn insert_add(&mut self, ring: &R, q: LatticePoint, c: R::Elem) {
        if ring.is_zero(&c) {
            return;
        }
        let key = (q.y, q.x);
        match self.terms.remove(&key) {
            None => {
                self.terms.insert(key, c);
            }
            Some(old) => {
                let s = ring.add(&old, &c);
                if !ring.is_zero(&s) {
                    self.terms.insert(key, s);
                }
            }
        }
    }

    pub fn add(&self, ring: &R, other: &Self) -> Self {
        let mut out = self.clone();
        for (q, c) in other.iter() {
            out.insert_add(ring, q, c.clone());
        }
        out
    }

    pub fn sub(&self, ring: &R, other: &Self) -> Self {
        let mut out = self.clone();
        for (q, c) in other.iter() {
            out.insert_add(ring, q, ring.neg(c));
        }
        out
    }

    pub fn neg(&self, ring: &R) -> Self {
        let mut out = Self::zero();
        for (q, c) in self.iter() {
            out.insert_add(ring, q, ring.neg(c));
        }
        out
    }

    pub fn scale(&self, ring: &R, c: &R::Elem) -> Self {
        let mut out = Self::zero();
        for (q, a) in self.iter() {
            out.insert_add(ring, q, ring.mul(a, c));
        }
        out
    }

    pub fn mul_monomial(&self, shift: LatticePoint) -> Self {
        let mut out = Self::zero();
        for (&(y, x), c) in &self.terms {
            out.terms.insert((y + shift.y, x + shift.x), c.clone());
        }
        out
    }

    /// Sparse schoolbook product.
    pub fn multiply(&self, ring: &R, other: &Self) -> Self {
        let mut out = Self::zero();
        for (qa, ca) in self.iter() {
            for (qb, cb) in other.iter() {
                out.insert_add(ring, pt(qa.x + qb.x, qa.y + qb.y), ring.mul(ca, cb));
            }
        }
        out
    }

    /// x d/dx: multiplies each term by its x-exponent.
    pub fn x_dx(&self, ring: &R) -> Self {
        let mut out = Self::zero();
        for (q, c) in self.iter() {
            out.insert_add(ring, q, ring.mul(c, &ring.from_i64(q.x)));
        }
        out
    }

    /// y d/dy: multiplies each term by its y-exponent.
    pub fn y_dy(&self, ring: &R) -> Self {
        let mut out = Self::zero();
        for (q, c) in self.iter() {
            out.insert_add(ring, q, ring.mul(c, &ring.from_i64(q.y)));
        }
        out
    }

    /// Exponent substitution by a unimodular map.
    pub fn apply_unimodular(&self, map: &crate::polytope::UnimodularMap) -> Self {
        let mut out = Self::zero();
        for (q, c) in self.iter() {
            out.terms.insert(
                {
                    let m = map.apply(q);
                    (m.y, m.x)
                },
                c.clone(),
            );
        }
        out
    }

    pub fn newton_polytope(&self) -> Result<NewtonPolytope> {
        NewtonPolytope::from_support(&self.support())
    }

    /// `D(h) = xy (f_y h_x - f_x h_y)`, with `x f_x` etc. formed through the
    /// scaled derivative operators.
    pub fn d_operator(&self, ring: &R, f: &Self) -> Self {
        // xy(f_y h_x - f_x h_y) = (y f_y)(x h_x) - (x f_x)(y h_y)
        let yfy = f.y_dy(ring);
        let xfx = f.x_dx(ring);
        let xhx = self.x_dx(ring);
        let yhy = self.y_dy(ring);
        yfy.multiply(ring, &xhx).sub(ring, &xfx.multiply(ring, &yhy))
    }
}

impl LaurentPolynomial<FieldSpec> {
    /// Evaluates at a point of the torus (or anywhere).
    pub fn eval(&self, ring: &FieldSpec, x: &FqElement, y: &FqElement) -> FqElement {
        let xinv = if self.terms.keys().any(|&(_, i)| i < 0) {
            Some(ring.inv(x).expect("x must be nonzero"))
        } else {
            None
        };
        let yinv = if self.terms.keys().any(|&(j, _)| j < 0) {
            Some(ring.inv(y).expect("y must be nonzero"))
        } else {
            None
        };
        let mut acc = ring.zero();
        for (q, c) in self.iter() {
            let xe = if q.x >= 0 {
                pow_ref(ring, x, q.x as u64)
            } else {
                pow_ref(ring, xinv.as_ref().unwrap(), (-q.x) as u64)
            };
            let ye = if q.y >= 0 {
                pow_ref(ring, y, q.y as u64)
            } else {
                pow_ref(ring, yinv.as_ref().unwrap(), (-q.y) as u64)
            };
            acc = ring.add(&acc, &ring.mul(&ring.mul(c, &xe), &ye));
        }
        acc
    }
}

fn pow_ref(ring: &FieldSpec, a: &FqElement, mut e: u64) -> FqElement {
    let mut acc = Ring::one(ring);
    let mut base = a.clone();
    while e > 0 {
        if e & 1 == 1 {
            acc = Ring::mul(ring, &acc, &base);
        }
        base = Ring::mul(ring, &base, &base);
        e >>= 1;
    }
    acc
}

/// Precomputed data for reducing y-exponents into the strip `[d_b, d_t)`.
///
/// Requires the top and bottom vertex coefficients of `f` to be units.
pub struct StripReducer<R: Ring> {
    pub f: LaurentPolynomial<R>,
    pub d_b: i64,
    pub d_t: i64,
    pub top: LatticePoint,
    pub bottom: LatticePoint,
    top_inv: R::Elem,
    bottom_inv: R::Elem,
}

impl<R: Ring> StripReducer<R> {
    pub fn new(ring: &R, f: &LaurentPolynomial<R>, poly: &NewtonPolytope) -> Result<Self> {
        let d_t = poly.max_y;
        let d_b = poly.min_y;
        let top = *poly
            .vertices
            .iter()
            .find(|v| v.y == d_t)
            .ok_or(Error::NonUnitVertex)?;
        let bottom = *poly
            .vertices
            .iter()
            .find(|v| v.y == d_b)
            .ok_or(Error::NonUnitVertex)?;
        let top_c = f.get(top).ok_or(Error::NonUnitVertex)?;
        let bot_c = f.get(bottom).ok_or(Error::NonUnitVertex)?;
        if !ring.is_unit(top_c) || !ring.is_unit(bot_c) {
            return Err(Error::NonUnitVertex);
        }
        Ok(StripReducer {
            f: f.clone(),
            d_b,
            d_t,
            top,
            bottom,
            top_inv: ring.inv(top_c)?,
            bottom_inv: ring.inv(bot_c)?,
        })
    }

    /// Reduces `h` modulo `f` so all y-exponents lie in `[d_b, d_t)`.
    /// Also returns the quotient `q` with `h = reduced + q * f`.
    pub fn reduce_with_quotient(
        &self,
        ring: &R,
        h: &LaurentPolynomial<R>,
    ) -> (LaurentPolynomial<R>, LaurentPolynomial<R>) {
        let mut cur = h.clone();
        let mut quot = LaurentPolynomial::<R>::zero();
        loop {
            // highest row above the strip, largest |x| first within the row
            let target = cur
                .terms
                .keys()
                .filter(|&&(y, _)| y >= self.d_t)
                .max_by_key(|&&(y, x)| (y, x.abs(), x))
                .copied();
            if let Some((y, x)) = target {
                let c = cur.terms.get(&(y, x)).unwrap().clone();
                let factor = ring.mul(&c, &self.top_inv);
                let shift = pt(x - self.top.x, y - self.top.y);
                // cur -= factor * x^shift * f
                for (qf, cf) in self.f.iter() {
                    let t = ring.neg(&ring.mul(&factor, cf));
                    cur.insert_add(ring, pt(qf.x + shift.x, qf.y + shift.y), t);
                }
                quot.insert_add(ring, shift, factor);
                continue;
            }
            let target = cur
                .terms
                .keys()
                .filter(|&&(y, _)| y < self.d_b)
                .min_by_key(|&&(y, x)| (y, -x.abs(), x))
                .copied();
            if let Some((y, x)) = target {
                let c = cur.terms.get(&(y, x)).unwrap().clone();
                let factor = ring.mul(&c, &self.bottom_inv);
                let shift = pt(x - self.bottom.x, y - self.bottom.y);
                for (qf, cf) in self.f.iter() {
                    let t = ring.neg(&ring.mul(&factor, cf));
                    cur.insert_add(ring, pt(qf.x + shift.x, qf.y + shift.y), t);
                }
                quot.insert_add(ring, shift, factor);
                continue;
            }
            break;
        }
        (cur, quot)
    }

    pub fn reduce(&self, ring: &R, h: &LaurentPolynomial<R>) -> LaurentPolynomial<R> {
        self.reduce_with_quotient(ring, h).0
    }
}

// --------------------------- dense strip form -------------------------------

/// Dense block of Z_q coefficients on a rectangle of exponents.
///
/// Layout: row-major over y, then x, then the `n` extension components,
/// each `words` limbs. A "strip" object has rows exactly `[d_b, d_t)`, but
/// intermediate raw products carry wider row ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct StripPoly {
    pub y0: i64,
    pub rows: usize,
    pub x0: i64,
    pub cols: usize,
    pub comps: usize,
    pub words: usize,
    pub data: Vec<Limb>,
}

impl StripPoly {
    pub fn zero(ctx: &ZqContext, y0: i64, rows: usize, x0: i64, cols: usize) -> StripPoly {
        StripPoly {
            y0,
            rows,
            x0,
            cols,
            comps: ctx.n(),
            words: ctx.words(),
            data: vec![0; rows * cols * ctx.n() * ctx.words()],
        }
    }

    #[inline]
    pub fn stride(&self) -> usize {
        self.comps * self.words
    }

    #[inline]
    pub fn slot(&self, row: usize, col: usize) -> &[Limb] {
        let s = self.stride();
        let idx = (row * self.cols + col) * s;
        &self.data[idx..idx + s]
    }

    #[inline]
    pub fn slot_mut(&mut self, row: usize, col: usize) -> &mut [Limb] {
        let s = self.stride();
        let idx = (row * self.cols + col) * s;
        &mut self.data[idx..idx + s]
    }

    pub fn get(&self, ctx: &ZqContext, q: LatticePoint) -> ZqElement {
        if q.y < self.y0
            || q.y >= self.y0 + self.rows as i64
            || q.x < self.x0
            || q.x >= self.x0 + self.cols as i64
        {
            return ctx.zero();
        }
        ZqElement {
            c: self
                .slot((q.y - self.y0) as usize, (q.x - self.x0) as usize)
                .to_vec(),
        }
    }

    pub fn set(&mut self, q: LatticePoint, v: &ZqElement) {
        let row = (q.y - self.y0) as usize;
        let col = (q.x - self.x0) as usize;
        self.slot_mut(row, col).copy_from_slice(&v.c);
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&l| l == 0)
    }

    pub fn from_laurent(ctx: &ZqContext, h: &LaurentPolynomial<ZqContext>) -> StripPoly {
        if h.is_zero() {
            return StripPoly::zero(ctx, 0, 1, 0, 1);
        }
        let ys: Vec<i64> = h.terms.keys().map(|&(y, _)| y).collect();
        let xs: Vec<i64> = h.terms.keys().map(|&(_, x)| x).collect();
        let (y0, y1) = (*ys.iter().min().unwrap(), *ys.iter().max().unwrap());
        let (x0, x1) = (*xs.iter().min().unwrap(), *xs.iter().max().unwrap());
        let mut out = StripPoly::zero(
            ctx,
            y0,
            (y1 - y0 + 1) as usize,
            x0,
            (x1 - x0 + 1) as usize,
        );
        for (q, c) in h.iter() {
            out.set(q, c);
        }
        out
    }

    pub fn to_laurent(&self, _ctx: &ZqContext) -> LaurentPolynomial<ZqContext> {
        let mut out = LaurentPolynomial::zero();
        for row in 0..self.rows {
            for col in 0..self.cols {
                let v = self.slot(row, col);
                if !nat::is_zero(v) {
                    out.terms.insert(
                        (self.y0 + row as i64, self.x0 + col as i64),
                        ZqElement { c: v.to_vec() },
                    );
                }
            }
        }
        out
    }

    /// Drops leading/trailing all-zero columns and rows.
    pub fn trim(&self, ctx: &ZqContext) -> StripPoly {
        let s = self.stride();
        let col_zero = |c: usize| {
            (0..self.rows).all(|r| nat::is_zero(&self.data[(r * self.cols + c) * s..][..s]))
        };
        let row_zero = |r: usize| {
            (0..self.cols).all(|c| nat::is_zero(&self.data[(r * self.cols + c) * s..][..s]))
        };
        let mut c0 = 0;
        while c0 < self.cols && col_zero(c0) {
            c0 += 1;
        }
        if c0 == self.cols {
            return StripPoly::zero(ctx, self.y0, 1, self.x0, 1);
        }
        let mut c1 = self.cols - 1;
        while c1 > c0 && col_zero(c1) {
            c1 -= 1;
        }
        let mut r0 = 0;
        while r0 < self.rows && row_zero(r0) {
            r0 += 1;
        }
        let mut r1 = self.rows - 1;
        while r1 > r0 && row_zero(r1) {
            r1 -= 1;
        }
        let mut out = StripPoly::zero(
            ctx,
            self.y0 + r0 as i64,
            r1 - r0 + 1,
            self.x0 + c0 as i64,
            c1 - c0 + 1,
        );
        for r in r0..=r1 {
            for c in c0..=c1 {
                let src = self.slot(r, c).to_vec();
                out.slot_mut(r - r0, c - c0).copy_from_slice(&src);
            }
        }
        out
    }

    pub fn add_assign(&mut self, ctx: &ZqContext, other: &StripPoly) {
        *self = self.combine(ctx, other, false);
    }

    pub fn sub_assign(&mut self, ctx: &ZqContext, other: &StripPoly) {
        *self = self.combine(ctx, other, true);
    }

    fn combine(&self, ctx: &ZqContext, other: &StripPoly, negate: bool) -> StripPoly {
        let y0 = self.y0.min(other.y0);
        let y1 = (self.y0 + self.rows as i64).max(other.y0 + other.rows as i64);
        let x0 = self.x0.min(other.x0);
        let x1 = (self.x0 + self.cols as i64).max(other.x0 + other.cols as i64);
        let mut out = StripPoly::zero(ctx, y0, (y1 - y0) as usize, x0, (x1 - x0) as usize);
        let w = ctx.words();
        let mut tmp = ctx.modulus.zero();
        for (src, neg) in [(self, false), (other, negate)] {
            for r in 0..src.rows {
                for c in 0..src.cols {
                    let v = src.slot(r, c);
                    if nat::is_zero(v) {
                        continue;
                    }
                    let orow = (src.y0 + r as i64 - y0) as usize;
                    let ocol = (src.x0 + c as i64 - x0) as usize;
                    let dst = out.slot_mut(orow, ocol);
                    for comp in 0..ctx.n() {
                        let (a, b) = (&dst[comp * w..(comp + 1) * w], &v[comp * w..(comp + 1) * w]);
                        if neg {
                            ctx.modulus.sub(a, b, &mut tmp);
                        } else {
                            ctx.modulus.add(a, b, &mut tmp);
                        }
                        dst[comp * w..(comp + 1) * w].copy_from_slice(&tmp);
                    }
                }
            }
        }
        out
    }

    /// Multiplies every coefficient by a scalar.
    pub fn scale(&self, ctx: &ZqContext, c: &ZqElement) -> StripPoly {
        let mut out = StripPoly::zero(ctx, self.y0, self.rows, self.x0, self.cols);
        for r in 0..self.rows {
            for col in 0..self.cols {
                let v = self.slot(r, col);
                if nat::is_zero(v) {
                    continue;
                }
                let prod = ctx.mul(&ZqElement { c: v.to_vec() }, c);
                out.slot_mut(r, col).copy_from_slice(&prod.c);
            }
        }
        out
    }

    /// x d/dx on the dense form.
    pub fn x_dx(&self, ctx: &ZqContext) -> StripPoly {
        let mut out = StripPoly::zero(ctx, self.y0, self.rows, self.x0, self.cols);
        for col in 0..self.cols {
            let k = Ring::from_i64(ctx, self.x0 + col as i64);
            for r in 0..self.rows {
                let v = self.slot(r, col);
                if nat::is_zero(v) {
                    continue;
                }
                let prod = ctx.mul(&ZqElement { c: v.to_vec() }, &k);
                out.slot_mut(r, col).copy_from_slice(&prod.c);
            }
        }
        out
    }

    pub fn y_dy(&self, ctx: &ZqContext) -> StripPoly {
        let mut out = StripPoly::zero(ctx, self.y0, self.rows, self.x0, self.cols);
        for r in 0..self.rows {
            let k = Ring::from_i64(ctx, self.y0 + r as i64);
            for col in 0..self.cols {
                let v = self.slot(r, col);
                if nat::is_zero(v) {
                    continue;
                }
                let prod = ctx.mul(&ZqElement { c: v.to_vec() }, &k);
                out.slot_mut(r, col).copy_from_slice(&prod.c);
            }
        }
        out
    }

    /// Monomial shift.
    pub fn shifted(&self, dx: i64, dy: i64) -> StripPoly {
        let mut out = self.clone();
        out.x0 += dx;
        out.y0 += dy;
        out
    }

    /// In-place subtraction of a scalar at one exponent (must be in range).
    pub fn sub_assign_at(&mut self, ctx: &ZqContext, q: LatticePoint, v: &ZqElement) {
        let row = (q.y - self.y0) as usize;
        let col = (q.x - self.x0) as usize;
        let w = ctx.words();
        let mut t = ctx.modulus.zero();
        let dst = self.slot_mut(row, col);
        for comp in 0..v.c.len() / w {
            ctx.modulus
                .sub(&dst[comp * w..(comp + 1) * w], &v.c[comp * w..(comp + 1) * w], &mut t);
            dst[comp * w..(comp + 1) * w].copy_from_slice(&t);
        }
    }

    /// Mirror image under x -> -x (columns reversed).
    pub fn mirror_x(&self, ctx: &ZqContext) -> StripPoly {
        let mut out = StripPoly::zero(
            ctx,
            self.y0,
            self.rows,
            -(self.x0 + self.cols as i64 - 1),
            self.cols,
        );
        for r in 0..self.rows {
            for c in 0..self.cols {
                let src = self.slot(r, c).to_vec();
                out.slot_mut(r, self.cols - 1 - c).copy_from_slice(&src);
            }
        }
        out
    }

    /// Copies into a larger aligned buffer with the given geometry.
    pub fn embed(&self, ctx: &ZqContext, y0: i64, rows: usize, x0: i64, cols: usize) -> StripPoly {
        let mut out = StripPoly::zero(ctx, y0, rows, x0, cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                let v = self.slot(r, c);
                if nat::is_zero(v) {
                    continue;
                }
                let rr = (self.y0 + r as i64 - y0) as usize;
                let cc = (self.x0 + c as i64 - x0) as usize;
                out.slot_mut(rr, cc).copy_from_slice(v);
            }
        }
        out
    }

    /// Applies the Frobenius substitution coefficientwise.
    pub fn frobenius(&self, ctx: &ZqContext, power: usize) -> StripPoly {
        if ctx.n() == 1 || power % ctx.n() == 0 {
            return self.clone();
        }
        let mut out = StripPoly::zero(ctx, self.y0, self.rows, self.x0, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                let v = self.slot(r, c);
                if nat::is_zero(v) {
                    continue;
                }
                let im = ctx.frobenius(&ZqElement { c: v.to_vec() }, power);
                out.slot_mut(r, c).copy_from_slice(&im.c);
            }
        }
        out
    }

    /// Full product via NTT row convolutions (schoolbook for small sizes).
    /// The result carries the raw row range; no strip reduction is applied.
    pub fn mul_raw(&self, ctx: &ZqContext, conv: &mut Convolver, other: &StripPoly) -> StripPoly {
        let out_rows = self.rows + other.rows - 1;
        let out_cols = self.cols + other.cols - 1;
        let n = ctx.n();
        let w = ctx.words();
        let mut out = StripPoly::zero(
            ctx,
            self.y0 + other.y0,
            out_rows,
            self.x0 + other.x0,
            out_cols,
        );
        let work = (self.cols * other.cols) as u64 * (self.rows * other.rows) as u64;
        if work <= 1 << 14 {
            // schoolbook
            let mut t = ctx.modulus.zero();
            let mut prod = vec![0u64; (2 * n - 1).max(1) * w];
            for ra in 0..self.rows {
                for rb in 0..other.rows {
                    for ca in 0..self.cols {
                        let av = self.slot(ra, ca);
                        if nat::is_zero(av) {
                            continue;
                        }
                        for cb in 0..other.cols {
                            let bv = other.slot(rb, cb);
                            if nat::is_zero(bv) {
                                continue;
                            }
                            // polynomial product of the extension components
                            prod.fill(0);
                            for i in 0..n {
                                let ai = &av[i * w..(i + 1) * w];
                                if nat::is_zero(ai) {
                                    continue;
                                }
                                for j in 0..n {
                                    let bj = &bv[j * w..(j + 1) * w];
                                    if nat::is_zero(bj) {
                                        continue;
                                    }
                                    ctx.modulus.mul(ai, bj, &mut t);
                                    let dst = &mut prod[(i + j) * w..(i + j + 1) * w];
                                    let tmp = dst.to_vec();
                                    let mut sum = ctx.modulus.zero();
                                    ctx.modulus.add(&tmp, &t, &mut sum);
                                    dst.copy_from_slice(&sum);
                                }
                            }
                            let red = ctx.reduce_poly(&prod);
                            let dst = out.slot_mut(ra + rb, ca + cb);
                            let mut sum = ctx.modulus.zero();
                            for comp in 0..n {
                                ctx.modulus.add(
                                    &dst[comp * w..(comp + 1) * w],
                                    &red.c[comp * w..(comp + 1) * w],
                                    &mut sum,
                                );
                                dst[comp * w..(comp + 1) * w].copy_from_slice(&sum);
                            }
                        }
                    }
                }
            }
            return out;
        }

        // NTT path: convolve per (row, component) pairs.
        let bits = 2 * 64 * w as u64 + 20;
        let plan = conv.plan(bits, out_cols);
        // forward transforms of every (row, comp) lane
        fn forward_lanes(
            conv: &mut Convolver,
            plan: &crate::ntt::ConvPlan,
            sp: &StripPoly,
            n: usize,
            w: usize,
        ) -> Vec<Vec<crate::ntt::RowFft>> {
            (0..sp.rows)
                .map(|r| {
                    (0..n)
                        .map(|comp| {
                            let mut lane = vec![0u64; sp.cols * w];
                            for c in 0..sp.cols {
                                lane[c * w..(c + 1) * w]
                                    .copy_from_slice(&sp.slot(r, c)[comp * w..(comp + 1) * w]);
                            }
                            conv.forward_slices(plan, w, &lane)
                        })
                        .collect()
                })
                .collect()
        }
        let fa = forward_lanes(conv, &plan, self, n, w);
        let fb = forward_lanes(conv, &plan, other, n, w);
        let mut prod_row = vec![0u64; (2 * n - 1).max(1) * w];
        for orow in 0..out_rows {
            // accumulate per output component (before X-reduction)
            let mut accs: Vec<crate::ntt::RowAcc> =
                (0..2 * n - 1).map(|_| conv.new_acc(&plan)).collect();
            for ra in 0..self.rows {
                let rb = orow as i64 - ra as i64;
                if rb < 0 || rb >= other.rows as i64 {
                    continue;
                }
                let rb = rb as usize;
                for ia in 0..n {
                    for ib in 0..n {
                        conv.add_product(&plan, &mut accs[ia + ib], &fa[ra][ia], &fb[rb][ib]);
                    }
                }
            }
            let comps_out: Vec<Vec<Limb>> = accs
                .into_iter()
                .map(|acc| conv.finish(&plan, acc, &ctx.modulus, out_cols))
                .collect();
            for c in 0..out_cols {
                if n == 1 {
                    let v = &comps_out[0][c * w..(c + 1) * w];
                    if !nat::is_zero(v) {
                        out.slot_mut(orow, c).copy_from_slice(v);
                    }
                } else {
                    for comp in 0..2 * n - 1 {
                        prod_row[comp * w..(comp + 1) * w]
                            .copy_from_slice(&comps_out[comp][c * w..(c + 1) * w]);
                    }
                    let red = ctx.reduce_poly(&prod_row);
                    out.slot_mut(orow, c).copy_from_slice(&red.c);
                }
            }
        }
        out
    }
}

/// Dense strip reduction data for the pipeline: clears rows outside
/// `[d_b, d_t)` by subtracting shifted multiples of `f`.
pub struct DenseReducer {
    pub d_b: i64,
    pub d_t: i64,
    /// f's terms as (exponent, coefficient).
    pub f_terms: Vec<(LatticePoint, ZqElement)>,
    pub top: LatticePoint,
    pub bottom: LatticePoint,
    pub top_inv: ZqElement,
    pub bottom_inv: ZqElement,
}

impl DenseReducer {
    pub fn new(ctx: &ZqContext, f: &LaurentPolynomial<ZqContext>, poly: &NewtonPolytope) -> Result<DenseReducer> {
        let sr = StripReducer::new(ctx, f, poly)?;
        Ok(DenseReducer {
            d_b: sr.d_b,
            d_t: sr.d_t,
            f_terms: f.iter().map(|(q, c)| (q, c.clone())).collect(),
            top: sr.top,
            bottom: sr.bottom,
            top_inv: sr.top_inv,
            bottom_inv: sr.bottom_inv,
        })
    }

    /// Reduces a raw dense block into the strip rows.
    pub fn reduce(&self, ctx: &ZqContext, raw: &StripPoly) -> StripPoly {
        let w = ctx.words();
        let n = ctx.n();
        // room for fill-in: each cleared row scatters at most this far in x,
        // and every work row outside the strip is cleared once
        let per_pass: i64 = self
            .f_terms
            .iter()
            .map(|(q, _)| (q.x - self.top.x).abs().max((q.x - self.bottom.x).abs()))
            .max()
            .unwrap_or(0);
        let raw_top = raw.y0 + raw.rows as i64 - 1;
        let rows_above = (raw_top - (self.d_t - 1)).max(0);
        let rows_below = (self.d_b - raw.y0).max(0);
        let grow = (per_pass * (rows_above + rows_below + 1)).max(4) as usize;
        let y0 = raw.y0.min(self.d_b);
        let y1 = (raw.y0 + raw.rows as i64).max(self.d_t);
        let mut work = StripPoly::zero(
            ctx,
            y0,
            (y1 - y0) as usize,
            raw.x0 - grow as i64,
            raw.cols + 2 * grow,
        );
        for r in 0..raw.rows {
            for c in 0..raw.cols {
                let v = raw.slot(r, c);
                if !nat::is_zero(v) {
                    let dst = work.slot_mut(
                        (raw.y0 + r as i64 - y0) as usize,
                        c + grow,
                    );
                    dst.copy_from_slice(v);
                }
            }
        }
        let mut t = ctx.modulus.zero();
        // clear rows above the strip, top-down
        let mut y = work.y0 + work.rows as i64 - 1;
        while y >= self.d_t {
            let row = (y - work.y0) as usize;
            for col in 0..work.cols {
                let v = work.slot(row, col).to_vec();
                if nat::is_zero(&v) {
                    continue;
                }
                let coeff = ZqElement { c: v };
                let factor = ctx.mul(&coeff, &self.top_inv);
                let base_x = work.x0 + col as i64 - self.top.x;
                let base_y = y - self.top.y;
                for (q, cf) in &self.f_terms {
                    let tgt_row = (base_y + q.y - work.y0) as usize;
                    let tgt_col = (base_x + q.x - work.x0) as usize;
                    let prod = ctx.mul(&factor, cf);
                    let dst = work.slot_mut(tgt_row, tgt_col);
                    for comp in 0..n {
                        ctx.modulus.sub(
                            &dst[comp * w..(comp + 1) * w],
                            &prod.c[comp * w..(comp + 1) * w],
                            &mut t,
                        );
                        dst[comp * w..(comp + 1) * w].copy_from_slice(&t);
                    }
                }
            }
            y -= 1;
        }
        // clear rows below the strip, bottom-up
        let mut y = work.y0;
        while y < self.d_b {
            let row = (y - work.y0) as usize;
            for col in 0..work.cols {
                let v = work.slot(row, col).to_vec();
                if nat::is_zero(&v) {
                    continue;
                }
                let coeff = ZqElement { c: v };
                let factor = ctx.mul(&coeff, &self.bottom_inv);
                let base_x = work.x0 + col as i64 - self.bottom.x;
                let base_y = y - self.bottom.y;
                for (q, cf) in &self.f_terms {
                    let tgt_row = (base_y + q.y - work.y0) as usize;
                    let tgt_col = (base_x + q.x - work.x0) as usize;
                    let prod = ctx.mul(&factor, cf);
                    let dst = work.slot_mut(tgt_row, tgt_col);
                    for comp in 0..n {
                        ctx.modulus.sub(
                            &dst[comp * w..(comp + 1) * w],
                            &prod.c[comp * w..(comp + 1) * w],
                            &mut t,
                        );
                        dst[comp * w..(comp + 1) * w].copy_from_slice(&t);
                    }
                }
            }
            y += 1;
        }
        // extract the strip rows
        let mut out = StripPoly::zero(
            ctx,
            self.d_b,
            (self.d_t - self.d_b) as usize,
            work.x0,
            work.cols,
        );
        for r in 0..out.rows {
            let wr = (self.d_b + r as i64 - work.y0) as usize;
            for c in 0..work.cols {
                let v = work.slot(wr, c).to_vec();
                out.slot_mut(r, c).copy_from_slice(&v);
            }
        }
        out.trim(ctx)
    }
}

/// Strip product: multiply, reduce into the strip, then truncate to the
/// window `[x_lo, x_hi]`. Window truncation is sound because the exact
/// strip form of every pipeline object is supported there modulo p^N.
pub fn strip_mul(
    ctx: &ZqContext,
    conv: &mut Convolver,
    red: &DenseReducer,
    a: &StripPoly,
    b: &StripPoly,
    window: (i64, i64),
) -> StripPoly {
    let raw = a.mul_raw(ctx, conv, b);
    let out = red.reduce(ctx, &raw);
    window_truncate(ctx, out, window)
}

/// Drops columns outside the window and trims.
pub fn window_truncate(ctx: &ZqContext, mut sp: StripPoly, window: (i64, i64)) -> StripPoly {
    let s = sp.stride();
    let w = ctx.words();
    for c in 0..sp.cols {
        let x = sp.x0 + c as i64;
        if x < window.0 || x > window.1 {
            for r in 0..sp.rows {
                let idx = (r * sp.cols + c) * s;
                if cfg!(feature = "trunc-audit") {
                    for comp in 0..ctx.n() {
                        let v = &sp.data[idx + comp * w..idx + (comp + 1) * w];
                        let val = ctx.modulus.valuation(v);
                        if val < ctx.precision {
                            eprintln!(
                                "TRUNC-AUDIT: dropping x={x} y={} val={val} (window {:?})",
                                sp.y0 + r as i64,
                                window
                            );
                        }
                    }
                }
                sp.data[idx..idx + s].fill(0);
            }
        }
    }
    sp.trim(ctx)
}
