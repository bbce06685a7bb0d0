//! Reduction of strip polynomials modulo exact differentials, with
//! controlled precision loss, plus the supporting Z_q linear algebra:
//! Smith diagonalization with minimal-valuation pivots, bounded-denominator
//! solving, and the cohomology basis extraction.

use crate::arith::{ZqContext, ZqElement};
use crate::error::{Error, Result};
use crate::laurent::{LaurentPolynomial, Ring, StripPoly, StripReducer};
use crate::polytope::{pt, LatticePoint, NewtonPolytope, PolytopeConstants};
use num_bigint::BigUint;

pub type DMat = Vec<Vec<ZqElement>>;

// ------------------------- Smith diagonalization ----------------------------

/// Invertible transforms `n1 * A * n2 = diag`, with inverses.
#[derive(Debug, Clone)]
pub struct SmithData {
    pub n1: DMat,
    pub n1_inv: DMat,
    pub n2: DMat,
    pub n2_inv: DMat,
    /// Diagonal entries (invariant factors then zeros), length min(r, c).
    pub diag: Vec<ZqElement>,
    pub rank: usize,
}

fn identity(ctx: &ZqContext, n: usize) -> DMat {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { ctx.one() } else { ctx.zero() })
                .collect()
        })
        .collect()
}

pub fn mat_mul(ctx: &ZqContext, a: &DMat, b: &DMat) -> DMat {
    let (r, k, c) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![ctx.zero(); c]; r];
    for i in 0..r {
        for t in 0..k {
            if ctx.is_zero(&a[i][t]) {
                continue;
            }
            for j in 0..c {
                if ctx.is_zero(&b[t][j]) {
                    continue;
                }
                let p = ctx.mul(&a[i][t], &b[t][j]);
                out[i][j] = ctx.add(&out[i][j], &p);
            }
        }
    }
    out
}

pub fn mat_vec(ctx: &ZqContext, a: &DMat, v: &[ZqElement]) -> Vec<ZqElement> {
    a.iter()
        .map(|row| {
            let mut acc = ctx.zero();
            for (x, y) in row.iter().zip(v) {
                if !ctx.is_zero(x) && !ctx.is_zero(y) {
                    acc = ctx.add(&acc, &ctx.mul(x, y));
                }
            }
            acc
        })
        .collect()
}

/// Quotient a / b in Z/p^N for val(a) >= val(b); exact in the sense that
/// quotient * b == a holds exactly at the working precision.
fn div_val(ctx: &ZqContext, a: &ZqElement, b: &ZqElement) -> ZqElement {
    let v = ctx.valuation(b);
    debug_assert!(ctx.valuation(a) >= v);
    let unit = ctx.div_exact_p(b, v);
    let inv = ctx.inv(&unit).expect("unit part must be invertible");
    let shifted = ctx.div_exact_p(a, v);
    ctx.mul(&shifted, &inv)
}

/// Smith diagonalization over Z/p^N with pivots of minimal p-adic valuation
/// (ties: smallest row, then column index).
pub fn smith_diagonalize(ctx: &ZqContext, a: &DMat) -> SmithData {
    let r = a.len();
    let c = a[0].len();
    let mut m = a.clone();
    let mut n1 = identity(ctx, r);
    let mut n1_inv = identity(ctx, r);
    let mut n2 = identity(ctx, c);
    let mut n2_inv = identity(ctx, c);
    let steps = r.min(c);
    let mut rank = 0;
    for k in 0..steps {
        // minimal-valuation pivot in the trailing submatrix
        let mut best: Option<(u32, usize, usize)> = None;
        for i in k..r {
            for j in k..c {
                if ctx.is_zero(&m[i][j]) {
                    continue;
                }
                let v = ctx.valuation(&m[i][j]);
                match best {
                    Some((bv, _, _)) if bv <= v => {}
                    _ => best = Some((v, i, j)),
                }
                if v == 0 {
                    break;
                }
            }
            if matches!(best, Some((0, _, _))) {
                break;
            }
        }
        let (_, pi, pj) = match best {
            None => break,
            Some(b) => b,
        };
        rank += 1;
        if pi != k {
            m.swap(pi, k);
            n1.swap(pi, k);
            n1_inv.iter_mut().for_each(|row| row.swap(pi, k));
        }
        if pj != k {
            m.iter_mut().for_each(|row| row.swap(pj, k));
            n2.iter_mut().for_each(|row| row.swap(pj, k));
            n2_inv.swap(pj, k);
        }
        // clear column k below the pivot
        for i in k + 1..r {
            if ctx.is_zero(&m[i][k]) {
                continue;
            }
            let q = div_val(ctx, &m[i][k], &m[k][k]);
            for j in k..c {
                let t = ctx.mul(&q, &m[k][j]);
                m[i][j] = ctx.sub(&m[i][j], &t);
            }
            // n1 <- E n1 ; n1_inv <- n1_inv E^{-1}
            for j in 0..r {
                let t = ctx.mul(&q, &n1[k][j]);
                n1[i][j] = ctx.sub(&n1[i][j], &t);
            }
            for row in n1_inv.iter_mut() {
                let t = ctx.mul(&q, &row[i]);
                row[k] = ctx.add(&row[k], &t);
            }
        }
        // clear row k right of the pivot
        for j in k + 1..c {
            if ctx.is_zero(&m[k][j]) {
                continue;
            }
            let q = div_val(ctx, &m[k][j], &m[k][k]);
            for i in k..r {
                let t = ctx.mul(&q, &m[i][k]);
                m[i][j] = ctx.sub(&m[i][j], &t);
            }
            for row in n2.iter_mut() {
                let t = ctx.mul(&q, &row[k]);
                row[j] = ctx.sub(&row[j], &t);
            }
            for i in 0..c {
                let t = ctx.mul(&q, &n2_inv[j][i]);
                n2_inv[k][i] = ctx.add(&n2_inv[k][i], &t);
            }
        }
    }
    let diag = (0..steps).map(|k| m[k][k].clone()).collect();
    SmithData {
        n1,
        n1_inv,
        n2,
        n2_inv,
        diag,
        rank,
    }
}

/// Solves `A x = b` modulo `p^target` through a Smith form computed at the
/// context precision, which must be at least `target + theta` where `theta`
/// bounds the valuations of the nonzero invariant factors.
pub fn solve_zq(
    ctx: &ZqContext,
    a: &DMat,
    b: &[ZqElement],
    target: u32,
    theta: u32,
) -> Result<Vec<ZqElement>> {
    assert!(ctx.precision >= target + theta, "insufficient solve precision");
    let smith = smith_diagonalize(ctx, a);
    solve_with_smith(ctx, &smith, a, b, target)
}

fn solve_with_smith(
    ctx: &ZqContext,
    smith: &SmithData,
    a: &DMat,
    b: &[ZqElement],
    target: u32,
) -> Result<Vec<ZqElement>> {
    let c = a[0].len();
    let y = mat_vec(ctx, &smith.n1, b);
    let mut z = vec![ctx.zero(); c];
    for (i, yi) in y.iter().enumerate() {
        if i < smith.diag.len() && !ctx.is_zero(&smith.diag[i]) {
            let dv = ctx.valuation(&smith.diag[i]);
            if ctx.valuation(yi) < dv {
                return Err(Error::Inconsistent);
            }
            z[i] = div_val(ctx, yi, &smith.diag[i]);
        } else if !ctx.is_zero(yi) {
            return Err(Error::Inconsistent);
        }
    }
    let x = mat_vec(ctx, &smith.n2, &z);
    // verification at the target precision
    let ax = mat_vec(ctx, a, &x);
    let tol = BigUint::from(ctx.spec.p).pow(target);
    for (axi, bi) in ax.iter().zip(b) {
        let d = ctx.sub(axi, bi);
        if !residual_divisible(ctx, &d, &tol) {
            return Err(Error::Inconsistent);
        }
    }
    Ok(x)
}

fn residual_divisible(ctx: &ZqContext, d: &ZqElement, tol: &BigUint) -> bool {
    let w = ctx.words();
    (0..ctx.n()).all(|i| {
        let v = crate::nat::limbs_to_biguint(&d.c[i * w..(i + 1) * w]);
        (v % tol) == BigUint::from(0u32)
    })
}

// --------------------------- cohomology basis -------------------------------

/// Basis data for the quotient module of strip functions modulo exact
/// differentials and multiples of f.
#[derive(Debug, Clone)]
pub struct CohomologyBasis {
    /// Lattice points of the double dilation, fixing the coordinate order.
    pub monomials: Vec<LatticePoint>,
    /// Change of basis: monomial_m = sum_t n2[m][t] basis_t.
    pub n2: DMat,
    /// basis_s = sum_m n2_inv[s][m] monomial_m.
    pub n2_inv: DMat,
    /// Number of relations (nonzero invariant factors).
    pub ell: usize,
    /// Dimension of the quotient: columns - ell.
    pub dim: usize,
}

/// Precision padding for the diagonalization step.
pub fn basis_precision_pad(ctx_n: usize, p: u64, poly: &NewtonPolytope) -> u32 {
    let gen_count = 2 * poly.dilated_lattice_points(1).len();
    let col_count = poly.dilated_lattice_points(2).len();
    let ell = gen_count.min(col_count) as u64;
    let w = poly.width() as u64;
    let h = poly.height() as u64;
    let x = BigUint::from(ell * w * h * ctx_n as u64 * p);
    let target = x.pow((ell * ctx_n as u64) as u32);
    // largest e with p^e <= target
    let mut e = 0u32;
    let mut acc = BigUint::from(1u32);
    let pb = BigUint::from(p);
    loop {
        acc *= &pb;
        if acc > target {
            break;
        }
        e += 1;
    }
    e + 1
}

/// Computes the basis at precision `N + pad` and returns it reduced to the
/// caller's context.
pub fn cohomology_basis(
    ctx: &ZqContext,
    basis_ctx: &ZqContext,
    f: &LaurentPolynomial<ZqContext>,
    poly: &NewtonPolytope,
) -> Result<CohomologyBasis> {
    let gens_pts = poly.dilated_lattice_points(1);
    let cols_pts = poly.dilated_lattice_points(2);
    let col_index: std::collections::HashMap<(i64, i64), usize> = cols_pts
        .iter()
        .enumerate()
        .map(|(i, q)| ((q.y, q.x), i))
        .collect();
    // generators over the basis context
    let f_hi = convert_laurent(ctx, basis_ctx, f);
    let mut rows: Vec<Vec<ZqElement>> = Vec::with_capacity(2 * gens_pts.len());
    for m in &gens_pts {
        let mono = LaurentPolynomial::monomial(basis_ctx, *m, basis_ctx.one());
        for gen in [mono.d_operator(basis_ctx, &f_hi), f_hi.multiply(basis_ctx, &mono)] {
            let mut row = vec![basis_ctx.zero(); cols_pts.len()];
            for (q, cc) in gen.iter() {
                let idx = *col_index
                    .get(&(q.y, q.x))
                    .ok_or_else(|| Error::Internal("generator escaped double dilation".into()))?;
                row[idx] = basis_ctx.add(&row[idx], cc);
            }
            rows.push(row);
        }
    }
    let smith = smith_diagonalize(basis_ctx, &rows);
    let ell = smith.rank;
    let dim = cols_pts.len() - ell;
    let expected = (poly.vol2 + 1) as usize;
    if dim != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: dim,
        });
    }
    // reduce transforms to the working precision; note the Smith columns
    // correspond to the monomial coordinates
    let reduce_mat = |m: &DMat| -> DMat {
        m.iter()
            .map(|row| row.iter().map(|e| basis_ctx.convert(e, ctx)).collect())
            .collect()
    };
    Ok(CohomologyBasis {
        monomials: cols_pts,
        n2: reduce_mat(&smith.n2),
        n2_inv: reduce_mat(&smith.n2_inv),
        ell,
        dim,
    })
}

pub fn convert_laurent(
    from: &ZqContext,
    to: &ZqContext,
    h: &LaurentPolynomial<ZqContext>,
) -> LaurentPolynomial<ZqContext> {
    LaurentPolynomial::from_terms(to, h.iter().map(|(q, c)| (q, from.convert(c, to))))
}

// ------------------------- banded block solver -------------------------------

/// Sparse row used during banded elimination: sorted (column, value) pairs.
#[derive(Debug, Clone, Default)]
struct SparseRow {
    entries: Vec<(u32, ZqElement)>,
}

impl SparseRow {
    fn get(&self, col: u32) -> Option<&ZqElement> {
        self.entries
            .binary_search_by_key(&col, |e| e.0)
            .ok()
            .map(|i| &self.entries[i].1)
    }

    /// self -= q * other, dropping exact zeros.
    fn axpy(&mut self, ctx: &ZqContext, q: &ZqElement, other: &SparseRow) {
        let mut out: Vec<(u32, ZqElement)> =
            Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut i, mut j) = (0, 0);
        while i < self.entries.len() || j < other.entries.len() {
            let next_self = self.entries.get(i).map(|e| e.0).unwrap_or(u32::MAX);
            let next_other = other.entries.get(j).map(|e| e.0).unwrap_or(u32::MAX);
            if next_self < next_other {
                out.push(self.entries[i].clone());
                i += 1;
            } else if next_other < next_self {
                let v = ctx.neg(&ctx.mul(q, &other.entries[j].1));
                if !ctx.is_zero(&v) {
                    out.push((next_other, v));
                }
                j += 1;
            } else {
                let v = ctx.sub(&self.entries[i].1, &ctx.mul(q, &other.entries[j].1));
                if !ctx.is_zero(&v) {
                    out.push((next_self, v));
                }
                i += 1;
                j += 1;
            }
        }
        self.entries = out;
    }
}

/// LU-style factorization of a sparse system with unit pivots taken in
/// column order; columns without a unit pivot are deferred to a dense Smith
/// solve. Transforms are recorded so many right-hand sides can be solved.
pub struct BandedSolver {
    nrows: usize,
    ncols: usize,
    /// (target_row, pivot_row, factor) in application order.
    oplog: Vec<(u32, u32, ZqElement)>,
    /// (column, row, inverse of pivot value) in pivot order.
    pivots: Vec<(u32, u32, ZqElement)>,
    /// Final contents of pivot rows.
    rows: Vec<SparseRow>,
    /// Columns with no unit pivot.
    deferred: Vec<u32>,
    /// Rows never pivoted.
    free_rows: Vec<u32>,
    /// Smith data of the residual (free_rows x deferred) matrix.
    residual: Option<(SmithData, DMat)>,
    target: u32,
}

impl BandedSolver {
    /// Factors the matrix given as sparse columns (row, value) lists.
    /// Columns are eliminated in the order supplied.
    pub fn factor(
        ctx: &ZqContext,
        nrows: usize,
        columns: &[Vec<(u32, ZqElement)>],
        target: u32,
    ) -> Result<BandedSolver> {
        let ncols = columns.len();
        // row-major working form
        let mut rows: Vec<SparseRow> = vec![SparseRow::default(); nrows];
        for (c, col) in columns.iter().enumerate() {
            for (r, v) in col {
                rows[*r as usize].entries.push((c as u32, v.clone()));
            }
        }
        for row in rows.iter_mut() {
            row.entries.sort_by_key(|e| e.0);
        }
        // occurrence lists: active rows with an entry in each column
        let mut active = vec![true; nrows];
        let mut oplog = Vec::new();
        let mut pivots: Vec<(u32, u32, ZqElement)> = Vec::new();
        let mut deferred = Vec::new();
        for c in 0..ncols as u32 {
            // find a unit pivot among active rows
            let mut pivot_row: Option<u32> = None;
            for r in 0..nrows as u32 {
                if !active[r as usize] {
                    continue;
                }
                if let Some(v) = rows[r as usize].get(c) {
                    if ctx.is_unit(v) {
                        pivot_row = Some(r);
                        break;
                    }
                }
            }
            let pr = match pivot_row {
                None => {
                    deferred.push(c);
                    continue;
                }
                Some(r) => r,
            };
            active[pr as usize] = false;
            let pinv = ctx
                .inv(rows[pr as usize].get(c).unwrap())
                .expect("unit pivot");
            pivots.push((c, pr, pinv.clone()));
            // eliminate from the remaining active rows
            let pivot_copy = rows[pr as usize].clone();
            for r in 0..nrows {
                if !active[r] {
                    continue;
                }
                let val = match rows[r].get(c) {
                    Some(v) => v.clone(),
                    None => continue,
                };
                let q = ctx.mul(&val, &pinv);
                rows[r].axpy(ctx, &q, &pivot_copy);
                debug_assert!(rows[r].get(c).is_none());
                oplog.push((r as u32, pr, q));
            }
        }
        let free_rows: Vec<u32> = (0..nrows as u32)
            .filter(|&r| active[r as usize])
            .collect();
        // residual dense system over deferred columns
        let residual = if deferred.is_empty() {
            // consistency of free rows is checked during solve
            None
        } else {
            let mat: DMat = free_rows
                .iter()
                .map(|&r| {
                    deferred
                        .iter()
                        .map(|&c| {
                            rows[r as usize]
                                .get(c)
                                .cloned()
                                .unwrap_or_else(|| ctx.zero())
                        })
                        .collect()
                })
                .collect();
            if mat.is_empty() {
                None
            } else {
                let smith = smith_diagonalize(ctx, &mat);
                Some((smith, mat))
            }
        };
        Ok(BandedSolver {
            nrows,
            ncols,
            oplog,
            pivots,
            rows,
            deferred,
            free_rows,
            residual,
            target,
        })
    }

    /// Solves for one right-hand side. The result satisfies `A x = b` at the
    /// target precision; anything less reports Inconsistent.
    pub fn solve(&self, ctx: &ZqContext, b: &[ZqElement]) -> Result<Vec<ZqElement>> {
        debug_assert_eq!(b.len(), self.nrows);
        let mut bb: Vec<ZqElement> = b.to_vec();
        for (target, pivot, q) in &self.oplog {
            let t = ctx.mul(q, &bb[*pivot as usize]);
            bb[*target as usize] = ctx.sub(&bb[*target as usize], &t);
        }
        let mut x = vec![ctx.zero(); self.ncols];
        let tol = BigUint::from(ctx.spec.p).pow(self.target + 0);
        if let Some((smith, mat)) = &self.residual {
            let rb: Vec<ZqElement> = self
                .free_rows
                .iter()
                .map(|&r| bb[r as usize].clone())
                .collect();
            let sol = solve_with_smith(ctx, smith, mat, &rb, self.target)?;
            for (k, &c) in self.deferred.iter().enumerate() {
                x[c as usize] = sol[k].clone();
            }
        } else {
            // no deferred columns: free rows must be structurally consistent
            for &r in &self.free_rows {
                if !residual_divisible(ctx, &bb[r as usize], &tol) {
                    return Err(Error::Inconsistent);
                }
            }
        }
        // back substitution in reverse pivot order
        for (c, r, pinv) in self.pivots.iter().rev() {
            let mut acc = bb[*r as usize].clone();
            for (col, v) in &self.rows[*r as usize].entries {
                if col == c {
                    continue;
                }
                if ctx.is_zero(&x[*col as usize]) {
                    continue;
                }
                let t = ctx.mul(v, &x[*col as usize]);
                acc = ctx.sub(&acc, &t);
            }
            x[*c as usize] = ctx.mul(&acc, pinv);
        }
        Ok(x)
    }
}
// --------------------------- reduction engine -------------------------------

/// Constants for reducing inputs that start at level `m`.
#[derive(Debug, Clone, Copy)]
pub struct ReductionPlan {
    pub constants: PolytopeConstants,
    /// Phase step size.
    pub c: i64,
    /// Start level: inputs live in S_[-m, m].
    pub m: i64,
    /// Scaling exponent making the reduction integral.
    pub epsilon: u32,
    /// Invariant-factor bound for the linear systems.
    pub theta: u32,
}

/// Exact ceil(log_p(x)) for x >= 1.
pub fn ceil_log_p(p: u64, x: &BigUint) -> u32 {
    let mut e = 0u32;
    let mut acc = BigUint::from(1u32);
    let pb = BigUint::from(p);
    while &acc < x {
        acc *= &pb;
        e += 1;
    }
    e
}

impl ReductionPlan {
    pub fn new(p: u64, constants: PolytopeConstants, m: i64) -> ReductionPlan {
        let m = m.max(1);
        let eps_arg = BigUint::from((m * constants.m_ord + constants.delta).max(1) as u64);
        let epsilon = ceil_log_p(p, &eps_arg);
        let theta_arg = BigUint::from(
            ((m + 2 * (constants.kappa2 - constants.kappa1 + 1)) * constants.m_ord
                + constants.delta)
                .max(1) as u64,
        );
        let theta = ceil_log_p(p, &theta_arg);
        let c = constants.kappa2.max(1);
        ReductionPlan {
            constants,
            c,
            m,
            epsilon,
            theta,
        }
    }
}

/// The result of one cohomology reduction.
#[derive(Debug, Clone)]
pub struct Reduced {
    /// Representative supported in the double dilation.
    pub r: LaurentPolynomial<ZqContext>,
    /// When tracked: g with `input = r + D(g) + f q` exactly.
    pub g: Option<LaurentPolynomial<ZqContext>>,
}

/// Shared state for reducing a batch of strip polynomials against one plan,
/// reusing every block factorization across the batch. States are held as
/// dense strips; only the block solves go through sparse structures.
pub struct ReductionEngine<'a> {
    pub ctx: &'a ZqContext,
    pub poly: &'a NewtonPolytope,
    pub plan: ReductionPlan,
    /// strip(y^k * y f_y) and strip(y^k * x f_x) per strip row k.
    p_forms: Vec<LaurentPolynomial<ZqContext>>,
    q_forms: Vec<LaurentPolynomial<ZqContext>>,
    /// Mirrored (x -> -x) data for the negative-degree phase.
    cons_m: PolytopeConstants,
    p_forms_m: Vec<LaurentPolynomial<ZqContext>>,
    q_forms_m: Vec<LaurentPolynomial<ZqContext>>,
    /// strip forms of the double-dilation monomials (for the final step).
    strip_of_monomial: Vec<LaurentPolynomial<ZqContext>>,
    monomials: Vec<LatticePoint>,
    /// Half-width of the dense working window.
    half_width: i64,
    track: bool,
}

fn d_column_forms(
    ctx: &ZqContext,
    f: &LaurentPolynomial<ZqContext>,
    poly: &NewtonPolytope,
) -> Result<(
    Vec<LaurentPolynomial<ZqContext>>,
    Vec<LaurentPolynomial<ZqContext>>,
)> {
    let red = StripReducer::new(ctx, f, poly)?;
    let yfy = f.y_dy(ctx);
    let xfx = f.x_dx(ctx);
    let d_b = poly.min_y;
    let d_t = poly.max_y;
    let mut p_forms = Vec::new();
    let mut q_forms = Vec::new();
    for k in d_b..d_t {
        let yk = LaurentPolynomial::monomial(ctx, pt(0, k), ctx.one());
        p_forms.push(red.reduce(ctx, &yk.multiply(ctx, &yfy)));
        q_forms.push(red.reduce(ctx, &yk.multiply(ctx, &xfx)));
    }
    Ok((p_forms, q_forms))
}

fn mirror_laurent(
    ctx: &ZqContext,
    h: &LaurentPolynomial<ZqContext>,
) -> LaurentPolynomial<ZqContext> {
    LaurentPolynomial::from_terms(ctx, h.iter().map(|(q, c)| (pt(-q.x, q.y), c.clone())))
}

impl<'a> ReductionEngine<'a> {
    pub fn new(
        ctx: &'a ZqContext,
        poly: &'a NewtonPolytope,
        f: &LaurentPolynomial<ZqContext>,
        plan: ReductionPlan,
        track: bool,
    ) -> Result<ReductionEngine<'a>> {
        let (p_forms, q_forms) = d_column_forms(ctx, f, poly)?;
        let poly_m = poly.mirror_x();
        let f_m = mirror_laurent(ctx, f);
        let (p_forms_m, q_forms_m) = d_column_forms(ctx, &f_m, &poly_m)?;
        let cons_m = poly_m.constants();
        let red = StripReducer::new(ctx, f, poly)?;
        let monomials = poly.dilated_lattice_points(2);
        let strip_of_monomial: Vec<LaurentPolynomial<ZqContext>> = monomials
            .iter()
            .map(|&q| red.reduce(ctx, &LaurentPolynomial::monomial(ctx, q, ctx.one())))
            .collect();
        let spread = p_forms
            .iter()
            .chain(q_forms.iter())
            .chain(p_forms_m.iter())
            .chain(q_forms_m.iter())
            .chain(strip_of_monomial.iter())
            .flat_map(|h| h.iter().map(|(q, _)| q.x.abs()))
            .max()
            .unwrap_or(0);
        let cons = plan.constants;
        let half_width =
            plan.m + 2 * (cons.kappa2 - cons.kappa1).max(1) + spread + 4;
        Ok(ReductionEngine {
            ctx,
            poly,
            plan,
            p_forms,
            q_forms,
            cons_m,
            p_forms_m,
            q_forms_m,
            strip_of_monomial,
            monomials,
            half_width,
            track,
        })
    }

    fn effective_target(&self) -> u32 {
        self.ctx.precision.saturating_sub(self.plan.theta)
    }

    /// Reduces a batch of strip polynomials (already scaled by p^epsilon)
    /// to representatives supported in the double dilation.
    pub fn reduce_batch(&self, inputs: Vec<StripPoly>) -> Result<Vec<Reduced>> {
        let ctx = self.ctx;
        let d_b = self.poly.min_y;
        let d_t = self.poly.max_y;
        let h = (d_t - d_b) as usize;
        let hw = self.half_width;
        let cols = (2 * hw + 1) as usize;
        let mut states: Vec<StripPoly> = inputs
            .iter()
            .map(|sp| {
                assert!(sp.y0 >= d_b && sp.y0 + sp.rows as i64 <= d_t);
                assert!(sp.x0 >= -hw && sp.x0 + sp.cols as i64 <= hw + 1);
                sp.embed(ctx, d_b, h, -hw, cols)
            })
            .collect();
        let mut gs: Vec<LaurentPolynomial<ZqContext>> =
            vec![LaurentPolynomial::zero(); states.len()];

        self.run_phase(&mut states, &mut gs, false)?;
        self.run_phase(&mut states, &mut gs, true)?;
        self.final_step(&mut states, &mut gs)
    }

    /// Peels high x-degrees down to the residual window in blocks
    /// (mirrored = the negative-degree side).
    fn run_phase(
        &self,
        states: &mut [StripPoly],
        gs: &mut [LaurentPolynomial<ZqContext>],
        mirrored: bool,
    ) -> Result<()> {
        let ctx = self.ctx;
        let (p_forms, q_forms, cons) = if mirrored {
            (&self.p_forms_m, &self.q_forms_m, self.cons_m)
        } else {
            (&self.p_forms, &self.q_forms, self.plan.constants)
        };
        let d_b = self.poly.min_y;
        let d_t = self.poly.max_y;
        let h = (d_t - d_b) as usize;
        let m = self.plan.m;
        let c = self.plan.c;
        let t_max = {
            let lim = (m + cons.kappa1 - cons.kappa2 + 1).min(m - 2 * cons.chi2);
            if lim <= 0 {
                0
            } else {
                lim / c
            }
        };
        if t_max == 0 {
            return Ok(());
        }
        if mirrored {
            for s in states.iter_mut() {
                *s = s.mirror_x(ctx);
            }
        }
        for i in 1..=t_max {
            let a_i = m - i * c - cons.kappa2 + 2;
            let b_i = m - (i - 1) * c + cons.kappa2 - 1;
            let row_lo = m - i * c + 1;
            let row_hi = b_i + cons.kappa2 - 1;
            let mut cols: Vec<(i64, i64)> = Vec::new();
            for mu in (a_i..=b_i).rev() {
                for k in d_b..d_t {
                    cols.push((mu, k));
                }
            }
            let nrows = ((row_hi - row_lo + 1) as usize) * h;
            let row_id = |x: i64, y: i64| -> Option<u32> {
                if x < row_lo || x > row_hi || y < d_b || y >= d_t {
                    None
                } else {
                    Some((((row_hi - x) as usize) * h + (y - d_b) as usize) as u32)
                }
            };
            let columns: Vec<Vec<(u32, ZqElement)>> = cols
                .iter()
                .map(|&(mu, k)| {
                    d_image_column(ctx, p_forms, q_forms, d_b, mu, k, &row_id)
                })
                .collect();
            let solver = BandedSolver::factor(ctx, nrows, &columns, self.effective_target())?;
            for (s_idx, state) in states.iter_mut().enumerate() {
                let mut b = vec![ctx.zero(); nrows];
                let mut any = false;
                for x in row_lo..=row_hi {
                    for y in d_b..d_t {
                        let v = state.get(ctx, pt(x, y));
                        if !ctx.is_zero(&v) {
                            b[row_id(x, y).unwrap() as usize] = v;
                            any = true;
                        }
                    }
                }
                if !any {
                    continue;
                }
                let sol = solver.solve(ctx, &b)?;
                for (ci, &(mu, k)) in cols.iter().enumerate() {
                    let coeff = &sol[ci];
                    if ctx.is_zero(coeff) {
                        continue;
                    }
                    subtract_d_image(ctx, state, p_forms, q_forms, d_b, mu, k, coeff);
                    if self.track {
                        let point = if mirrored { pt(-mu, k) } else { pt(mu, k) };
                        let val = if mirrored {
                            ctx.neg(coeff)
                        } else {
                            coeff.clone()
                        };
                        gs[s_idx].insert_add(ctx, point, val);
                    }
                }
            }
        }
        if mirrored {
            for s in states.iter_mut() {
                *s = s.mirror_x(ctx);
            }
        }
        Ok(())
    }

    /// Clears the residual window with one joint system over g-monomials and
    /// the double-dilation representative coefficients.
    fn final_step(
        &self,
        states: &mut [StripPoly],
        gs: &mut [LaurentPolynomial<ZqContext>],
    ) -> Result<Vec<Reduced>> {
        let ctx = self.ctx;
        let cons = self.plan.constants;
        let d_b = self.poly.min_y;
        let d_t = self.poly.max_y;
        let h = (d_t - d_b) as usize;
        // residual extent across the batch
        let mut n1 = 1i64;
        let mut n2 = 1i64;
        for s in states.iter() {
            for r in 0..s.rows {
                for c in 0..s.cols {
                    if !crate::nat::is_zero(s.slot(r, c)) {
                        let x = s.x0 + c as i64;
                        n1 = n1.max(-x);
                        n2 = n2.max(x);
                    }
                }
            }
        }
        let g_lo = -n1 + 1 + cons.kappa1;
        let g_hi = n2 - 1 + cons.kappa2;
        let mut cols: Vec<(i64, i64)> = Vec::new();
        for mu in (g_lo..=g_hi).rev() {
            for k in d_b..d_t {
                cols.push((mu, k));
            }
        }
        let n_gcols = cols.len();
        let spread: i64 = self
            .p_forms
            .iter()
            .chain(self.q_forms.iter())
            .chain(self.strip_of_monomial.iter())
            .flat_map(|f| f.iter().map(|(q, _)| q.x.abs()))
            .max()
            .unwrap_or(0);
        let row_lo = (-n1).min(g_lo - spread).min(-spread);
        let row_hi = n2.max(g_hi + spread).max(spread);
        let nrows = ((row_hi - row_lo + 1) as usize) * h;
        let row_id = |x: i64, y: i64| -> Option<u32> {
            if x < row_lo || x > row_hi || y < d_b || y >= d_t {
                None
            } else {
                Some((((row_hi - x) as usize) * h + (y - d_b) as usize) as u32)
            }
        };
        let mut columns: Vec<Vec<(u32, ZqElement)>> = cols
            .iter()
            .map(|&(mu, k)| {
                d_image_column(ctx, &self.p_forms, &self.q_forms, d_b, mu, k, &row_id)
            })
            .collect();
        for sm in &self.strip_of_monomial {
            let mut col = Vec::new();
            for (q, v) in sm.iter() {
                match row_id(q.x, q.y) {
                    Some(r) => col.push((r, v.clone())),
                    None => {
                        return Err(Error::Internal(
                            "monomial strip escaped the final row window".into(),
                        ))
                    }
                }
            }
            col.sort_by_key(|e| e.0);
            columns.push(col);
        }
        let solver = BandedSolver::factor(ctx, nrows, &columns, self.effective_target())?;
        let mut out = Vec::with_capacity(states.len());
        for (s_idx, state) in states.iter_mut().enumerate() {
            let mut b = vec![ctx.zero(); nrows];
            for r in 0..state.rows {
                for cc in 0..state.cols {
                    if crate::nat::is_zero(state.slot(r, cc)) {
                        continue;
                    }
                    let x = state.x0 + cc as i64;
                    let y = state.y0 + r as i64;
                    match row_id(x, y) {
                        Some(rid) => {
                            b[rid as usize] = ZqElement {
                                c: state.slot(r, cc).to_vec(),
                            }
                        }
                        None => {
                            return Err(Error::Internal(
                                "state escaped the final row window".into(),
                            ))
                        }
                    }
                }
            }
            let sol = solver.solve(ctx, &b)?;
            let mut r_poly = LaurentPolynomial::zero();
            for (k, &q) in self.monomials.iter().enumerate() {
                r_poly.insert_add(ctx, q, sol[n_gcols + k].clone());
            }
            if self.track {
                for (ci, &(mu, k)) in cols.iter().enumerate() {
                    if !ctx.is_zero(&sol[ci]) {
                        gs[s_idx].insert_add(ctx, pt(mu, k), sol[ci].clone());
                    }
                }
            }
            out.push(Reduced {
                r: r_poly,
                g: if self.track {
                    Some(gs[s_idx].clone())
                } else {
                    None
                },
            });
        }
        Ok(out)
    }
}

/// Sparse column of the strip form of `D(x^mu y^k)`, restricted to rows the
/// indexer accepts.
fn d_image_column(
    ctx: &ZqContext,
    p_forms: &[LaurentPolynomial<ZqContext>],
    q_forms: &[LaurentPolynomial<ZqContext>],
    d_b: i64,
    mu: i64,
    k: i64,
    row_id: &dyn Fn(i64, i64) -> Option<u32>,
) -> Vec<(u32, ZqElement)> {
    let pk = &p_forms[(k - d_b) as usize];
    let qk = &q_forms[(k - d_b) as usize];
    let mu_c = Ring::from_i64(ctx, mu);
    let k_c = Ring::from_i64(ctx, k);
    let mut entries: std::collections::BTreeMap<(i64, i64), ZqElement> =
        std::collections::BTreeMap::new();
    for (q, v) in pk.iter() {
        let t = ctx.mul(&mu_c, v);
        entries
            .entry((q.y, q.x + mu))
            .and_modify(|e| *e = ctx.add(e, &t))
            .or_insert(t);
    }
    for (q, v) in qk.iter() {
        let t = ctx.neg(&ctx.mul(&k_c, v));
        entries
            .entry((q.y, q.x + mu))
            .and_modify(|e| *e = ctx.add(e, &t))
            .or_insert(t);
    }
    let mut col = Vec::new();
    for ((y, x), v) in entries {
        if ctx.is_zero(&v) {
            continue;
        }
        if let Some(r) = row_id(x, y) {
            col.push((r, v));
        }
    }
    col
}

/// state -= coeff * strip(D(x^mu y^k)); the state window must cover the
/// image support.
fn subtract_d_image(
    ctx: &ZqContext,
    state: &mut StripPoly,
    p_forms: &[LaurentPolynomial<ZqContext>],
    q_forms: &[LaurentPolynomial<ZqContext>],
    d_b: i64,
    mu: i64,
    k: i64,
    coeff: &ZqElement,
) {
    let pk = &p_forms[(k - d_b) as usize];
    let qk = &q_forms[(k - d_b) as usize];
    let mu_c = Ring::from_i64(ctx, mu);
    let k_c = Ring::from_i64(ctx, k);
    for (q, v) in pk.iter() {
        let t = ctx.mul(coeff, &ctx.mul(&mu_c, v));
        state.sub_assign_at(ctx, pt(q.x + mu, q.y), &t);
    }
    for (q, v) in qk.iter() {
        let t = ctx.neg(&ctx.mul(coeff, &ctx.mul(&k_c, v)));
        state.sub_assign_at(ctx, pt(q.x + mu, q.y), &t);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::FieldSpec;
        use rand::{Rng, SeedableRng};

    fn zctx(p: u64, prec: u32) -> ZqContext {
        ZqContext::new(FieldSpec::with_default_modulus(p, 1).unwrap(), prec)
    }

    fn rand_elem(ctx: &ZqContext, rng: &mut impl Rng) -> ZqElement {
        let mut e = ctx.zero();
        for l in e.c.iter_mut() {
            *l = rng.gen();
        }
        ZqElement {
            c: ctx.modulus.reduce_wide(&e.c),
        }
    }

    #[test]
    fn smith_examples() {
        let ctx = zctx(7, 4);
        // diag(1, 7)
        let a = vec![
            vec![ctx.one(), ctx.zero()],
            vec![ctx.zero(), ctx.from_u64(7)],
        ];
        let s = smith_diagonalize(&ctx, &a);
        assert_eq!(s.diag[0], ctx.one());
        assert_eq!(s.diag[1], ctx.from_u64(7));
        // [[0, 7], [1, 0]] -> (1, 7)
        let a = vec![
            vec![ctx.zero(), ctx.from_u64(7)],
            vec![ctx.one(), ctx.zero()],
        ];
        let s = smith_diagonalize(&ctx, &a);
        assert_eq!(ctx.valuation(&s.diag[0]), 0);
        assert_eq!(ctx.valuation(&s.diag[1]), 1);
        // zero matrix
        let a = vec![vec![ctx.zero(); 3]; 2];
        let s = smith_diagonalize(&ctx, &a);
        assert_eq!(s.rank, 0);
        assert!(s.diag.iter().all(|d| ctx.is_zero(d)));
    }

    #[test]
    fn smith_reconstruction_random() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(2024);
        for &(p, prec) in &[(7u64, 4u32), (2, 6), (5, 5)] {
            let ctx = zctx(p, prec);
            for _ in 0..70 {
                let r = rng.gen_range(1..5);
                let c = rng.gen_range(1..6);
                let a: DMat = (0..r)
                    .map(|_| (0..c).map(|_| rand_elem(&ctx, &mut rng)).collect())
                    .collect();
                let s = smith_diagonalize(&ctx, &a);
                // n1 * a * n2 diagonal
                let d = mat_mul(&ctx, &mat_mul(&ctx, &s.n1, &a), &s.n2);
                for i in 0..r {
                    for j in 0..c {
                        if i == j {
                            assert_eq!(d[i][j], s.diag[i]);
                        } else {
                            assert!(ctx.is_zero(&d[i][j]), "off-diagonal {i},{j}");
                        }
                    }
                }
                // transforms invert each other
                let i1 = mat_mul(&ctx, &s.n1, &s.n1_inv);
                let i2 = mat_mul(&ctx, &s.n2, &s.n2_inv);
                for (k, m) in [(r, &i1), (c, &i2)] {
                    for i in 0..k {
                        for j in 0..k {
                            let want = if i == j { ctx.one() } else { ctx.zero() };
                            assert_eq!(m[i][j], want);
                        }
                    }
                }
                // reconstruction n1_inv * d * n2_inv = a
                let back = mat_mul(&ctx, &mat_mul(&ctx, &s.n1_inv, &d), &s.n2_inv);
                assert_eq!(back, a);
            }
        }
    }

    #[test]
    fn solve_examples() {
        let ctx = zctx(7, 6);
        // identity
        let a = identity(&ctx, 3);
        let b = vec![ctx.from_u64(3), ctx.from_u64(11), ctx.from_u64(40)];
        let x = solve_zq(&ctx, &a, &b, 4, 1).unwrap();
        assert_eq!(x, b);
        // A = [[7]], b = [1]: no p-adic solution
        let a = vec![vec![ctx.from_u64(7)]];
        let b = vec![ctx.one()];
        assert!(matches!(
            solve_zq(&ctx, &a, &b, 3, 1),
            Err(Error::Inconsistent)
        ));
    }

    #[test]
    fn solve_planted_random() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(31337);
        let ctx = zctx(7, 6);
        for _ in 0..60 {
            let a: DMat = (0..4)
                .map(|_| (0..6).map(|_| rand_elem(&ctx, &mut rng)).collect())
                .collect();
            let planted: Vec<ZqElement> =
                (0..6).map(|_| rand_elem(&ctx, &mut rng)).collect();
            let b = mat_vec(&ctx, &a, &planted);
            let x = solve_zq(&ctx, &a, &b, 4, 2).unwrap();
            let ax = mat_vec(&ctx, &a, &x);
            let tol = BigUint::from(7u32).pow(4);
            for (axi, bi) in ax.iter().zip(&b) {
                let d = ctx.sub(axi, bi);
                assert!(residual_divisible(&ctx, &d, &tol));
            }
        }
    }

    fn diamond_f(ctx: &ZqContext) -> LaurentPolynomial<ZqContext> {
        LaurentPolynomial::from_terms(
            ctx,
            [
                (pt(1, 0), ctx.one()),
                (pt(-1, 0), ctx.one()),
                (pt(0, 1), ctx.one()),
                (pt(0, -1), ctx.one()),
                (pt(0, 0), ctx.one()),
            ],
        )
    }

    fn diamond_poly() -> NewtonPolytope {
        NewtonPolytope::from_support(&[pt(1, 0), pt(-1, 0), pt(0, 1), pt(0, -1)]).unwrap()
    }

    #[test]
    fn diamond_basis_dimension() {
        let ctx = zctx(7, 6);
        let poly = diamond_poly();
        let f = diamond_f(&ctx);
        let pad = basis_precision_pad(1, 7, &poly);
        let basis_ctx = ZqContext::new(ctx.spec.clone(), ctx.precision + pad);
        let basis = cohomology_basis(&ctx, &basis_ctx, &f, &poly).unwrap();
        assert_eq!(basis.dim, 5);
        assert_eq!(basis.dim as i64, 2 * poly.genus() + poly.boundary_count() - 1);
    }

    #[test]
    fn reduction_recombination_diamond() {
        let prec = 8u32;
        let ctx = zctx(7, prec);
        let poly = diamond_poly();
        let f = diamond_f(&ctx);
        let cons = poly.constants();
        let mut rng = rand::rngs::StdRng::seed_from_u64(555);
        let m = 8i64;
        let plan = ReductionPlan::new(7, cons, m);
        let engine = ReductionEngine::new(&ctx, &poly, &f, plan, true).unwrap();
        for round in 0..25 {
            // random strip polynomial in S_[-8, 8]
            let h = LaurentPolynomial::from_terms(
                &ctx,
                (0..14).map(|_| {
                    (
                        pt(rng.gen_range(-m..=m), rng.gen_range(-1..1)),
                        rand_elem(&ctx, &mut rng),
                    )
                }),
            );
            // scale by p^eps
            let scaled = h.scale(&ctx, &ctx.from_u64(7u64.pow(plan.epsilon)));
            let sp = StripPoly::from_laurent(&ctx, &scaled);
            let reduced = engine.reduce_batch(vec![sp]).unwrap();
            let red = &reduced[0];
            // recombination: p^eps h = r + D(g) + f*q exactly at the
            // effective precision
            let g = red.g.as_ref().unwrap();
            let dg = g.d_operator(&ctx, &f);
            let residue = scaled.sub(&ctx, &red.r).sub(&ctx, &dg);
            // residue must be divisible by f: strip-reduce and expect zero
            let sred = StripReducer::new(&ctx, &f, &poly).unwrap();
            let (rem, _)= sred.reduce_with_quotient(&ctx, &residue);
            let eff = prec - plan.theta;
            let tol = BigUint::from(7u32).pow(eff);
            for (_, v) in rem.iter() {
                assert!(residual_divisible(&ctx, v, &tol), "round {round}");
            }
            // supports within the double dilation
            for (q, _) in red.r.iter() {
                assert!(poly.contains_dilated(q, 2));
            }
        }
    }

    #[test]
    fn exact_forms_reduce_to_relations() {
        // D(x) reduced then expressed in basis coordinates must vanish
        let prec = 8u32;
        let ctx = zctx(7, prec);
        let poly = diamond_poly();
        let f = diamond_f(&ctx);
        let cons = poly.constants();
        let plan = ReductionPlan::new(7, cons, 4);
        let engine = ReductionEngine::new(&ctx, &poly, &f, plan, false).unwrap();
        let x = LaurentPolynomial::monomial(&ctx, pt(1, 0), ctx.one());
        let dx = x.d_operator(&ctx, &f);
        let scaled = dx.scale(&ctx, &ctx.from_u64(7u64.pow(plan.epsilon)));
        let sred = StripReducer::new(&ctx, &f, &poly).unwrap();
        let strip = sred.reduce(&ctx, &scaled);
        let sp = StripPoly::from_laurent(&ctx, &strip);
        let reduced = engine.reduce_batch(vec![sp]).unwrap();
        // r is a representative of an exact class: its basis coordinates die
        let pad = basis_precision_pad(1, 7, &poly);
        let basis_ctx = ZqContext::new(ctx.spec.clone(), ctx.precision + pad);
        let basis = cohomology_basis(&ctx, &basis_ctx, &f, &poly).unwrap();
        // coordinates over the monomials
        let coords: Vec<ZqElement> = basis
            .monomials
            .iter()
            .map(|q| reduced[0].r.coeff(&ctx, *q))
            .collect();
        // express over the basis: row vector * n2, keep the free part
        let eff = prec - plan.theta;
        let tol = BigUint::from(7u32).pow(eff);
        for t in basis.ell..basis.monomials.len() {
            let mut acc = ctx.zero();
            for (m_idx, coord) in coords.iter().enumerate() {
                let v = ctx.mul(coord, &basis.n2[m_idx][t]);
                acc = ctx.add(&acc, &v);
            }
            assert!(
                residual_divisible(&ctx, &acc, &tol),
                "free coordinate {t} survives"
            );
        }
    }
}
