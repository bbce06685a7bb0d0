//! Pipeline orchestration: working precision, the matrix of the p-th power
//! Frobenius on the cohomology basis, its twisted norm, the characteristic
//! polynomial, and assembly of the zeta function numerator.

use crate::arith::{FieldSpec, ZqContext, ZqElement};
use crate::error::{Error, Result, Stage};
use crate::frobenius::{
    lift_frobenius, power_tables, precompute_kernel,
    FrobeniusKernel, FrobeniusLift, PowerTables, StripCtx,
};
use crate::laurent::{LaurentPolynomial, StripPoly};
use crate::nondegen::{validate_input, ValidatedCurve};
use crate::ntt::Convolver;
use crate::nullstellensatz::{solve_nss, NssCertificate};
use crate::polytope::{NewtonPolytope, PolytopeConstants};
use crate::reduction::{
    ceil_log_p, cohomology_basis, basis_precision_pad, mat_mul, CohomologyBasis, DMat, Reduced,
    ReductionEngine, ReductionPlan,
};
use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};

/// Millisecond stage clock; a no-op on targets without a monotonic clock.
pub(crate) struct StageClock {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl StageClock {
    pub(crate) fn start() -> StageClock {
        StageClock {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    pub(crate) fn elapsed_ms(&self) -> u128 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.elapsed().as_millis()
        }
        #[cfg(target_arch = "wasm32")]
        {
            0
        }
    }
}

/// Working precision and the bounds that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrecisionPlan {
    /// Working precision N.
    pub n_prec: u32,
    /// Digits needed to pin the output coefficients.
    pub first_term: u32,
    /// Conservative per-reduction scaling exponent.
    pub eps_bound: u32,
}

fn binomial(n: u64, k: u64) -> BigUint {
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

fn precision_rhs(
    p: u64,
    n_field: usize,
    poly: &NewtonPolytope,
    cons: &PolytopeConstants,
    first: u32,
    n_try: u32,
) -> (u32, u32) {
    let d = (poly.vol2 + 1) as u64;
    let maxchi = cons.chi1.abs().max(cons.chi2) as u64;
    let h = poly.height() as u64;
    let w = poly.width() as u64;
    let budget = 9 * p * n_try as u64 + 5 * p;
    let arg = BigUint::from(budget * maxchi * h + h * w);
    let eps = ceil_log_p(p, &arg.max(BigUint::one()));
    (first + (n_field as u64 * d) as u32 * eps, eps)
}

/// Minimal N satisfying the precision inequality, by fixed-point iteration
/// from the first term upward.
pub fn determine_precision(
    poly: &NewtonPolytope,
    cons: &PolytopeConstants,
    p: u64,
    n_field: usize,
) -> Result<PrecisionPlan> {
    let d = (poly.vol2 + 1) as u64;
    let vol = (poly.vol2 / 2) as u64;
    let grd = (poly.genus() + poly.boundary_count() - 1) as u32;
    let q_pow = BigUint::from(p).pow(n_field as u32 * grd);
    let bound = BigUint::from(2u32) * binomial(d, vol) * q_pow;
    let first = ceil_log_p(p, &bound);
    let mut n_try = first.max(1);
    let mut eps = 0;
    for _ in 0..64 {
        let (rhs, e) = precision_rhs(p, n_field, poly, cons, first, n_try);
        eps = e;
        if n_try >= rhs {
            // minimality: the predecessor must fail
            if n_try > first.max(1) {
                let (rhs_prev, _) = precision_rhs(p, n_field, poly, cons, first, n_try - 1);
                debug_assert!(n_try - 1 < rhs_prev);
            }
            return Ok(PrecisionPlan {
                n_prec: n_try,
                first_term: first,
                eps_bound: eps,
            });
        }
        n_try = rhs;
    }
    let _ = eps;
    Err(Error::Internal("precision iteration diverged".into()))
}

/// The integral matrix `p^eps * M` of the p-th power Frobenius on the basis.
#[derive(Debug, Clone)]
pub struct FrobeniusMatrix {
    pub mat: DMat,
    pub epsilon: u32,
    pub precision: u32,
}

/// STEP V + VII: acts on every double-dilation monomial, reduces, and
/// restricts to the basis block through the diagonalizing transform.
#[allow(clippy::too_many_arguments)]
pub fn frobenius_matrix(
    sc: &StripCtx<'_>,
    conv: &mut Convolver,
    ctx_out: &ZqContext,
    _lift: &FrobeniusLift,
    kernel: &FrobeniusKernel,
    tables: &PowerTables,
    basis: &CohomologyBasis,
    f: &LaurentPolynomial<ZqContext>,
    poly: &NewtonPolytope,
    theta_bound: u32,
) -> Result<FrobeniusMatrix> {
    let ctx = sc.ctx;
    let p = ctx.spec.p as i64;
    let monomials = &basis.monomials;
    // per-monomial kernel actions, grouped by the y-power factor
    let mut images: Vec<Option<StripPoly>> = vec![None; monomials.len()];
    let mut cached_j: Option<(i64, StripPoly)> = None;
    for (idx, q) in monomials.iter().enumerate() {
        let ej = match &cached_j {
            Some((j, e)) if *j == q.y => e.clone(),
            _ => {
                let zyj = tables.zy.get(&q.y).expect("table covers dilation");
                let e = sc.mul(conv, zyj, &kernel.e, kernel.budget);
                cached_j = Some((q.y, e.clone()));
                e
            }
        };
        let zxi = tables.zx.get(&q.x).expect("table covers dilation");
        let w = sc.mul(conv, zxi, &ej, kernel.budget);
        let w = sc.shift_reduce(&w, p * q.x, p * q.y, kernel.budget);
        images[idx] = Some(w);
    }
    // reduction plan from the observed extents
    let mut m_star = 1i64;
    for img in images.iter().flatten() {
        for c in 0..img.cols {
            let x = img.x0 + c as i64;
            let s = img.stride();
            let col_nonzero = (0..img.rows)
                .any(|r| !crate::nat::is_zero(&img.data[(r * img.cols + c) * s..][..s]));
            if col_nonzero {
                m_star = m_star.max(x.abs());
            }
        }
    }
    let plan = ReductionPlan::new(ctx.spec.p, sc.cons, m_star);
    if plan.theta > theta_bound {
        return Err(Error::Internal(
            "observed reduction level exceeds the planned bound".into(),
        ));
    }
    let p_eps = {
        let mut e = ctx.zero();
        let big = BigUint::from(ctx.spec.p).pow(plan.epsilon);
        e.c[..ctx.words()].copy_from_slice(&ctx.modulus.from_biguint(&big));
        e
    };
    let scaled: Vec<StripPoly> = images
        .into_iter()
        .map(|img| img.unwrap().scale(ctx, &p_eps))
        .collect();
    let engine = ReductionEngine::new(ctx, poly, f, plan, false)?;
    let reduced: Vec<Reduced> = engine.reduce_batch(scaled)?;
    // rows of R: coordinates of r_ij over the monomials, at the output
    // precision
    let k = monomials.len();
    let mut r_mat: DMat = vec![vec![ctx_out.zero(); k]; k];
    let mono_index: std::collections::HashMap<(i64, i64), usize> = monomials
        .iter()
        .enumerate()
        .map(|(i, q)| ((q.y, q.x), i))
        .collect();
    for (row, red) in reduced.iter().enumerate() {
        for (q, c) in red.r.iter() {
            let col = *mono_index
                .get(&(q.y, q.x))
                .ok_or_else(|| Error::Internal("representative escaped the dilation".into()))?;
            r_mat[row][col] = ctx.convert(c, ctx_out);
        }
    }
    // sigma(n2_inv) . R . n2, restricted to the basis block
    let sigma_n2_inv: DMat = basis
        .n2_inv
        .iter()
        .map(|row| row.iter().map(|e| ctx_out.frobenius(e, 1)).collect())
        .collect();
    let full = mat_mul(ctx_out, &mat_mul(ctx_out, &sigma_n2_inv, &r_mat), &basis.n2);
    let dim = basis.dim;
    let ell = basis.ell;
    let mut mat = vec![vec![ctx_out.zero(); dim]; dim];
    for i in 0..dim {
        for j in 0..dim {
            mat[i][j] = full[ell + i][ell + j].clone();
        }
    }
    Ok(FrobeniusMatrix {
        mat,
        epsilon: plan.epsilon,
        precision: ctx_out.precision,
    })
}

/// STEP VIII: twisted norm `M^{sigma^(n-1)} ... M^sigma M` by binary
/// splitting on `T_(a+b) = T_a^{sigma^b} T_b`.
pub fn norm_matrix(ctx: &ZqContext, m: &DMat, n: usize) -> DMat {
    if n == 1 {
        return m.clone();
    }
    let sigma_mat = |a: &DMat, i: usize| -> DMat {
        a.iter()
            .map(|row| row.iter().map(|e| ctx.frobenius(e, i)).collect())
            .collect()
    };
    // recursive T_k
    fn t_k(ctx: &ZqContext, m: &DMat, k: usize, sig: &dyn Fn(&DMat, usize) -> DMat) -> DMat {
        if k == 1 {
            return m.clone();
        }
        let half = k / 2;
        let t_half = t_k(ctx, m, half, sig);
        let mut t = mat_mul(ctx, &sig(&t_half, half), &t_half);
        if k % 2 == 1 {
            t = mat_mul(ctx, &sig(&t, 1), m);
        }
        t
    }
    t_k(ctx, m, n, &sigma_mat)
}

/// Direct n-fold twisted product, for cross-checking the recursion.
pub fn norm_matrix_direct(ctx: &ZqContext, m: &DMat, n: usize) -> DMat {
    let mut acc = m.clone();
    for k in 1..n {
        let twisted: DMat = m
            .iter()
            .map(|row| row.iter().map(|e| ctx.frobenius(e, k)).collect())
            .collect();
        acc = mat_mul(ctx, &twisted, &acc);
    }
    acc
}

/// STEP IX: characteristic polynomial via Hessenberg reduction with
/// minimal-valuation pivots under the diagonal.
pub fn char_poly(ctx: &ZqContext, a: &DMat) -> Vec<ZqElement> {
    let d = a.len();
    let mut h = a.clone();
    for j in 0..d.saturating_sub(2) {
        // pivot: minimal valuation below the diagonal
        let mut best: Option<(u32, usize)> = None;
        for i in j + 1..d {
            if ctx.is_zero(&h[i][j]) {
                continue;
            }
            let v = ctx.valuation(&h[i][j]);
            match best {
                Some((bv, _)) if bv <= v => {}
                _ => best = Some((v, i)),
            }
        }
        let (pv, pi) = match best {
            None => continue,
            Some(b) => b,
        };
        let _ = pv;
        if pi != j + 1 {
            h.swap(pi, j + 1);
            for row in h.iter_mut() {
                row.swap(pi, j + 1);
            }
        }
        let pivot = h[j + 1][j].clone();
        for i in j + 2..d {
            if ctx.is_zero(&h[i][j]) {
                continue;
            }
            let q = div_val_pub(ctx, &h[i][j], &pivot);
            // row_i -= q row_{j+1}; col_{j+1} += q col_i
            for cc in 0..d {
                let t = ctx.mul(&q, &h[j + 1][cc]);
                h[i][cc] = ctx.sub(&h[i][cc], &t);
            }
            for rr in 0..d {
                let t = ctx.mul(&q, &h[rr][i]);
                h[rr][j + 1] = ctx.add(&h[rr][j + 1], &t);
            }
        }
    }
    // characteristic polynomial of a Hessenberg matrix
    let mut polys: Vec<Vec<ZqElement>> = Vec::with_capacity(d + 1);
    polys.push(vec![ctx.one()]); // p_0 = 1
    for k in 1..=d {
        // p_k = (t - h[k-1][k-1]) p_{k-1} - sum_{i<k} h[i-1][k-1] prod subdiag p_{i-1}
        let mut pk = poly_shift_mul(ctx, &polys[k - 1], &h[k - 1][k - 1]);
        let mut subprod = ctx.one();
        for i in (1..k).rev() {
            subprod = ctx.mul(&subprod, &h[i][i - 1]);
            let coeff = ctx.mul(&h[i - 1][k - 1], &subprod);
            for (deg, c) in polys[i - 1].iter().enumerate() {
                let t = ctx.mul(&coeff, c);
                pk[deg] = ctx.sub(&pk[deg], &t);
            }
        }
        polys.push(pk);
    }
    polys.pop().unwrap()
}

fn div_val_pub(ctx: &ZqContext, a: &ZqElement, b: &ZqElement) -> ZqElement {
    let v = ctx.valuation(b);
    let unit = ctx.div_exact_p(b, v);
    let inv = ctx.inv(&unit).expect("unit part invertible");
    ctx.mul(&ctx.div_exact_p(a, v), &inv)
}

/// (t - c) * poly
fn poly_shift_mul(ctx: &ZqContext, p: &[ZqElement], c: &ZqElement) -> Vec<ZqElement> {
    let mut out = vec![ctx.zero(); p.len() + 1];
    for (i, a) in p.iter().enumerate() {
        out[i + 1] = ctx.add(&out[i + 1], a);
        let t = ctx.mul(c, a);
        out[i] = ctx.sub(&out[i], &t);
    }
    out
}

/// The assembled zeta data for the torus part of the curve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZetaResult {
    pub p: u64,
    pub n: usize,
    /// Characteristic polynomial of the q-power Frobenius, ascending degree,
    /// sign fixed so the constant term is +q^(g+R-1).
    pub chi: Vec<BigInt>,
    /// Numerator of the zeta function: P(t) = chi(qt) / q^(g+R-1).
    pub p_num: Vec<BigInt>,
    pub genus: i64,
    pub boundary_points: i64,
    pub vol2: i64,
    pub precision: u32,
    pub epsilon_used: u32,
    /// Torus point counts over F_{q^k} derived from the zeta function.
    pub point_counts: Vec<(usize, BigInt)>,
    /// Stage timings in milliseconds (in execution order).
    pub timings_ms: Vec<(&'static str, u128)>,
}

/// Power sums of the inverse roots of P (Newton's identities).
pub fn power_sums(p_num: &[BigInt], kmax: usize) -> Vec<BigInt> {
    let deg = p_num.len() - 1;
    let mut s: Vec<BigInt> = Vec::with_capacity(kmax + 1);
    s.push(BigInt::from(deg)); // formally s_0, unused
    for k in 1..=kmax {
        // s_k = -k p_k - sum_{j=1}^{k-1} p_j s_{k-j}
        let mut acc = if k <= deg {
            -BigInt::from(k as u64) * &p_num[k]
        } else {
            BigInt::zero()
        };
        for j in 1..k {
            if j <= deg {
                acc -= &p_num[j] * &s[k - j];
            }
        }
        s.push(acc);
    }
    s
}

/// STEP IX output plus the Weil-window integer recovery.
#[allow(clippy::too_many_arguments)]
pub fn assemble_zeta(
    ctx: &ZqContext,
    chi_tilde: &[ZqElement],
    epsilon: u32,
    poly: &NewtonPolytope,
    p: u64,
    n_field: usize,
    kmax: usize,
    timings: Vec<(&'static str, u128)>,
) -> Result<ZetaResult> {
    let d = (poly.vol2 + 1) as usize;
    debug_assert_eq!(chi_tilde.len(), d + 1);
    let g = poly.genus();
    let r_count = poly.boundary_count();
    let grd = (g + r_count - 1) as u32;
    let q = BigUint::from(p).pow(n_field as u32);
    let q_grd = q.pow(grd);
    let n_eps = n_field as u32 * epsilon;
    let tilde_n = ctx
        .precision
        .checked_sub(d as u32 * n_eps)
        .ok_or(Error::PrecisionExhausted)?;
    let modulus = BigUint::from(p).pow(tilde_n);
    let half = &modulus / 2u32;
    let weil = (BigUint::one() << (d as u32)) * &q_grd;
    if &modulus <= &(BigUint::from(2u32) * &weil) {
        return Err(Error::PrecisionExhausted);
    }
    // rescale: chi_i = c_i / p^((d - i) n eps), then lift symmetrically
    let mut chi: Vec<BigInt> = Vec::with_capacity(d + 1);
    for (i, c) in chi_tilde.iter().enumerate() {
        let shift = (d - i) as u32 * n_eps;
        let val = c.c[..ctx.words()].to_vec();
        let big = crate::nat::limbs_to_biguint(&val);
        let p_shift = BigUint::from(p).pow(shift);
        if (&big % &p_shift) != BigUint::zero() {
            return Err(Error::Internal(format!(
                "coefficient {i} not divisible by the scale"
            )));
        }
        let scaled = (big / p_shift) % &modulus;
        let lifted = if scaled > half {
            BigInt::from(scaled) - BigInt::from(modulus.clone())
        } else {
            BigInt::from(scaled)
        };
        if lifted.magnitude() > &weil {
            return Err(Error::WeilViolation);
        }
        chi.push(lifted);
    }
    // sign: the constant term is +- q^(g+R-1)
    let q_grd_int = BigInt::from(q_grd.clone());
    let sign = if chi[0] == q_grd_int {
        1
    } else if chi[0] == -&q_grd_int {
        -1
    } else {
        return Err(Error::PrecisionExhausted);
    };
    if sign < 0 {
        for c in chi.iter_mut() {
            *c = -c.clone();
        }
    }
    // P(t) = chi(qt) / q^(g+R-1)
    let q_int = BigInt::from(q.clone());
    let mut p_num: Vec<BigInt> = Vec::with_capacity(d + 1);
    for (i, c) in chi.iter().enumerate() {
        let scaled = c * q_int.pow(i as u32);
        let (quot, rem) = num_integer_div_rem(&scaled, &BigInt::from(q_grd.clone()));
        if !rem.is_zero() {
            return Err(Error::Internal("zeta numerator is not integral".into()));
        }
        p_num.push(quot);
    }
    debug_assert!(p_num[0].is_one());
    // point counts
    let s = power_sums(&p_num, kmax);
    let mut point_counts = Vec::with_capacity(kmax);
    for k in 1..=kmax {
        let qk = BigInt::from(q.pow(k as u32));
        let nk = &qk - &s[k];
        if nk.is_negative() {
            return Err(Error::Internal(format!("negative point count N_{k}")));
        }
        let torus = (&qk - 1) * (&qk - 1);
        if nk > torus {
            return Err(Error::Internal(format!("point count N_{k} exceeds torus")));
        }
        point_counts.push((k, nk));
    }
    Ok(ZetaResult {
        p,
        n: n_field,
        chi,
        p_num,
        genus: g,
        boundary_points: r_count,
        vol2: poly.vol2,
        precision: ctx.precision,
        epsilon_used: epsilon,
        point_counts,
        timings_ms: timings,
    })
}

fn num_integer_div_rem(a: &BigInt, b: &BigInt) -> (BigInt, BigInt) {
    (a / b, a % b)
}

/// Options for the end-to-end computation.
#[derive(Debug, Clone, Copy)]
pub struct ZetaOptions {
    /// Expert override of the working precision (bypasses the plan).
    pub precision_override: Option<u32>,
    /// Number of point counts to derive.
    pub kmax: usize,
}

impl Default for ZetaOptions {
    fn default() -> Self {
        ZetaOptions {
            precision_override: None,
            kmax: 6,
        }
    }
}

/// Runs the whole pipeline on a Laurent polynomial over F_q.
pub fn compute_zeta(
    field: &FieldSpec,
    fbar: &LaurentPolynomial<FieldSpec>,
    options: &ZetaOptions,
) -> Result<ZetaResult> {
    let mut timings: Vec<(&'static str, u128)> = Vec::new();
    let clock = StageClock::start();
    let validated: ValidatedCurve =
        validate_input(field, fbar).map_err(|e| e.staged(Stage::Nondegeneracy))?;
    timings.push(("validate", clock.elapsed_ms()));
    compute_zeta_validated(&validated, options, timings)
}

/// Pipeline from an already validated curve.
pub fn compute_zeta_validated(
    validated: &ValidatedCurve,
    options: &ZetaOptions,
    mut timings: Vec<(&'static str, u128)>,
) -> Result<ZetaResult> {
    let field = &validated.field;
    let poly = &validated.polytope;
    let cons = validated.constants;
    let p = field.p;
    let n_field = field.n;

    let clock = StageClock::start();
    let plan = determine_precision(poly, &cons, p, n_field)
        .map_err(|e| e.staged(Stage::Precision))?;
    let n_prec = options.precision_override.unwrap_or(plan.n_prec);
    // work-precision buffer covering the solve losses; the buffer feeds back
    // into the support budget, so iterate to a fixed point
    let maxchi = cons.chi1.abs().max(cons.chi2);
    let mut theta_bound = 0u32;
    loop {
        let n_w = n_prec + theta_bound;
        let m_bound = (9 * p as i64 * n_w as i64 + 5 * p as i64) * maxchi + cons.pad2;
        let next = ReductionPlan::new(p, cons, m_bound).theta;
        if next <= theta_bound {
            theta_bound = theta_bound.max(next);
            break;
        }
        theta_bound = next;
    }
    let n_work = n_prec + theta_bound;
    timings.push(("precision", clock.elapsed_ms()));

    let clock = StageClock::start();
    let ctx_work = ZqContext::new(field.clone(), n_work);
    let ctx_out = ZqContext::new(field.clone(), n_prec);
    // canonical lift of the normalized polynomial
    let f_work: LaurentPolynomial<ZqContext> = LaurentPolynomial::from_terms(
        &ctx_work,
        validated
            .f
            .iter()
            .map(|(q, c)| (q, ctx_work.canonical_lift(c))),
    );
    let cert: NssCertificate =
        solve_nss(&ctx_work, &f_work, poly).map_err(|e| e.staged(Stage::Nullstellensatz))?;
    timings.push(("nullstellensatz", clock.elapsed_ms()));

    let clock = StageClock::start();
    let sc = StripCtx::new(&ctx_work, poly, cons, &f_work)
        .map_err(|e| e.staged(Stage::FrobeniusLift))?;
    let mut conv = Convolver::new();
    let lift = lift_frobenius(&sc, &mut conv, &f_work, &cert)
        .map_err(|e| e.staged(Stage::FrobeniusLift))?;
    timings.push(("frobenius_lift", clock.elapsed_ms()));

    let clock = StageClock::start();
    let dil = poly.dilated_lattice_points(2);
    let i_range = (
        dil.iter().map(|q| q.x).min().unwrap(),
        dil.iter().map(|q| q.x).max().unwrap(),
    );
    let j_range = (
        dil.iter().map(|q| q.y).min().unwrap(),
        dil.iter().map(|q| q.y).max().unwrap(),
    );
    let tables = power_tables(&sc, &mut conv, &lift, i_range, j_range);
    let kernel = precompute_kernel(&sc, &mut conv, &lift, &tables, &cert, &f_work)
        .map_err(|e| e.staged(Stage::FrobeniusLift))?;
    timings.push(("kernel", clock.elapsed_ms()));

    let clock = StageClock::start();
    let pad = basis_precision_pad(n_field, p, poly);
    let basis_ctx = ZqContext::new(field.clone(), n_prec + pad);
    let f_out: LaurentPolynomial<ZqContext> = LaurentPolynomial::from_terms(
        &ctx_out,
        validated
            .f
            .iter()
            .map(|(q, c)| (q, ctx_out.canonical_lift(c))),
    );
    let basis = cohomology_basis(&ctx_out, &basis_ctx, &f_out, poly)
        .map_err(|e| e.staged(Stage::Basis))?;
    timings.push(("basis", clock.elapsed_ms()));

    let clock = StageClock::start();
    let fmat = frobenius_matrix(
        &sc, &mut conv, &ctx_out, &lift, &kernel, &tables, &basis, &f_work, poly, theta_bound,
    )
    .map_err(|e| e.staged(Stage::Reduction))?;
    timings.push(("frobenius_matrix", clock.elapsed_ms()));

    let clock = StageClock::start();
    let normed = norm_matrix(&ctx_out, &fmat.mat, n_field);
    let chi_tilde = char_poly(&ctx_out, &normed);
    timings.push(("char_poly", clock.elapsed_ms()));

    assemble_zeta(
        &ctx_out,
        &chi_tilde,
        fmat.epsilon,
        poly,
        p,
        n_field,
        options.kmax,
        timings,
    )
    .map_err(|e| e.staged(Stage::Zeta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::pt;
    use rand::{Rng, SeedableRng};

    fn diamond_polytope() -> NewtonPolytope {
        NewtonPolytope::from_support(&[pt(1, 0), pt(-1, 0), pt(0, 1), pt(0, -1)]).unwrap()
    }

    #[test]
    fn precision_plan_diamond() {
        let poly = diamond_polytope();
        let cons = poly.constants();
        let plan7 = determine_precision(&poly, &cons, 7, 1).unwrap();
        assert_eq!(plan7.n_prec, 31);
        assert_eq!(plan7.first_term, 6);
        let plan2 = determine_precision(&poly, &cons, 2, 1).unwrap();
        assert_eq!(plan2.n_prec, 69);
        assert_eq!(plan2.first_term, 9);
        // minimality: N-1 violates the inequality
        for (p, plan) in [(7u64, &plan7), (2u64, &plan2)] {
            let (rhs, _) = precision_rhs(p, 1, &poly, &cons, plan.first_term, plan.n_prec - 1);
            assert!(plan.n_prec - 1 < rhs);
        }
    }

    #[test]
    fn char_poly_small() {
        let ctx = ZqContext::new(FieldSpec::with_default_modulus(7, 1).unwrap(), 4);
        // identity 2x2: t^2 - 2t + 1
        let a = vec![
            vec![ctx.one(), ctx.zero()],
            vec![ctx.zero(), ctx.one()],
        ];
        let cp = char_poly(&ctx, &a);
        assert_eq!(cp[2], ctx.one());
        assert_eq!(cp[1], ctx.from_u64(7u64.pow(4) - 2));
        assert_eq!(cp[0], ctx.one());
        // [[0,1],[1,0]]: t^2 - 1
        let a = vec![
            vec![ctx.zero(), ctx.one()],
            vec![ctx.one(), ctx.zero()],
        ];
        let cp = char_poly(&ctx, &a);
        assert_eq!(cp[2], ctx.one());
        assert!(ctx.is_zero(&cp[1]));
        assert_eq!(cp[0], ctx.from_u64(7u64.pow(4) - 1));
    }

    fn cofactor_char_poly(ctx: &ZqContext, a: &DMat) -> Vec<ZqElement> {
        // det(tI - A) by expansion over polynomial entries
        let d = a.len();
        let entries: Vec<Vec<Vec<ZqElement>>> = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        if i == j {
                            vec![ctx.neg(&a[i][j]), ctx.one()]
                        } else {
                            vec![ctx.neg(&a[i][j])]
                        }
                    })
                    .collect()
            })
            .collect();
        fn det(ctx: &ZqContext, m: &[Vec<Vec<ZqElement>>]) -> Vec<ZqElement> {
            let d = m.len();
            if d == 1 {
                return m[0][0].clone();
            }
            let mut acc = vec![ctx.zero()];
            for j in 0..d {
                let minor: Vec<Vec<Vec<ZqElement>>> = (1..d)
                    .map(|i| {
                        (0..d)
                            .filter(|&c| c != j)
                            .map(|c| m[i][c].clone())
                            .collect()
                    })
                    .collect();
                let sub = det(ctx, &minor);
                // acc += sign * m[0][j] * sub
                let mut term = vec![ctx.zero(); m[0][j].len() + sub.len() - 1];
                for (x, cx) in m[0][j].iter().enumerate() {
                    for (y, cy) in sub.iter().enumerate() {
                        let t = ctx.mul(cx, cy);
                        term[x + y] = ctx.add(&term[x + y], &t);
                    }
                }
                if acc.len() < term.len() {
                    acc.resize(term.len(), ctx.zero());
                }
                for (k, t) in term.iter().enumerate() {
                    if j % 2 == 0 {
                        acc[k] = ctx.add(&acc[k], t);
                    } else {
                        acc[k] = ctx.sub(&acc[k], t);
                    }
                }
            }
            acc
        }
        det(ctx, &entries)
    }

    #[test]
    fn char_poly_matches_cofactor_oracle() {
        let ctx = ZqContext::new(FieldSpec::with_default_modulus(7, 1).unwrap(), 4);
        let mut rng = rand::rngs::StdRng::seed_from_u64(4242);
        for _ in 0..200 {
            let d = rng.gen_range(1..=5);
            let a: DMat = (0..d)
                .map(|_| {
                    (0..d)
                        .map(|_| ctx.from_u64(rng.gen_range(0..7u64.pow(4))))
                        .collect()
                })
                .collect();
            let fast = char_poly(&ctx, &a);
            let slow = cofactor_char_poly(&ctx, &a);
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn norm_matrix_binary_equals_direct() {
        let ctx = ZqContext::new(FieldSpec::with_default_modulus(2, 3).unwrap(), 5);
        let mut rng = rand::rngs::StdRng::seed_from_u64(777);
        for n in 1..=6 {
            let d = 3;
            let a: DMat = (0..d)
                .map(|_| {
                    (0..d)
                        .map(|_| {
                            let digits: Vec<u64> =
                                (0..3).map(|_| rng.gen_range(0..32u64)).collect();
                            let mut e = ctx.zero();
                            for (i, v) in digits.iter().enumerate() {
                                let w = ctx.words();
                                e.c[i * w..(i + 1) * w]
                                    .copy_from_slice(&ctx.modulus.from_u64(*v));
                            }
                            e
                        })
                        .collect()
                })
                .collect();
            assert_eq!(norm_matrix(&ctx, &a, n), norm_matrix_direct(&ctx, &a, n));
        }
    }

    #[test]
    fn power_sums_examples() {
        // P = 1: no roots
        let s = power_sums(&[BigInt::one()], 4);
        assert!(s[1..].iter().all(|x| x.is_zero()));
        // P = 1 - t: single root 1
        let s = power_sums(&[BigInt::one(), BigInt::from(-1)], 5);
        assert!(s[1..].iter().all(|x| x.is_one()));
    }
}
