//! The lift of the p-th power Frobenius to the dagger algebra: the series
//! `Z_x, Z_y` with `x -> x^p Z_x`, `y -> y^p Z_y`, their inverses, and the
//! precomputed differential kernel used by the per-monomial action.
//!
//! All series are held as strip forms and truncated after every product to
//! the x-window implied by the overconvergence bound: an object computed
//! modulo `p^N` is supported, as a canonical series, in `(9pN + slack)`
//! times the polytope, so its strip form lives in the corresponding window.

use crate::arith::ZqContext;
use crate::error::{Error, Result};
use crate::laurent::{
    strip_mul, window_truncate, DenseReducer, LaurentPolynomial, Ring, StripPoly,
};
use crate::ntt::Convolver;
use crate::nullstellensatz::NssCertificate;
use crate::polytope::{pt, NewtonPolytope, PolytopeConstants};

/// Shared context for strip arithmetic against a fixed curve.
pub struct StripCtx<'a> {
    pub ctx: &'a ZqContext,
    pub poly: &'a NewtonPolytope,
    pub cons: PolytopeConstants,
    pub reducer: DenseReducer,
}

impl<'a> StripCtx<'a> {
    pub fn new(
        ctx: &'a ZqContext,
        poly: &'a NewtonPolytope,
        cons: PolytopeConstants,
        f: &LaurentPolynomial<ZqContext>,
    ) -> Result<StripCtx<'a>> {
        Ok(StripCtx {
            ctx,
            poly,
            cons,
            reducer: DenseReducer::new(ctx, f, poly)?,
        })
    }

    /// x-window for strip forms of objects supported in `budget * P`.
    pub fn window(&self, budget: i64) -> (i64, i64) {
        (
            budget * self.cons.chi1 - self.cons.pad1,
            budget * self.cons.chi2 + self.cons.pad2,
        )
    }

    pub fn mul(
        &self,
        conv: &mut Convolver,
        a: &StripPoly,
        b: &StripPoly,
        budget: i64,
    ) -> StripPoly {
        strip_mul(self.ctx, conv, &self.reducer, a, b, self.window(budget))
    }

    /// Multiplies by the monomial x^dx y^dy, reducing back into the strip.
    pub fn shift_reduce(&self, sp: &StripPoly, dx: i64, dy: i64, budget: i64) -> StripPoly {
        let shifted = sp.shifted(dx, dy);
        let red = self.reducer.reduce(self.ctx, &shifted);
        window_truncate(self.ctx, red, self.window(budget))
    }

    pub fn one(&self) -> StripPoly {
        let mut sp = StripPoly::zero(self.ctx, 0, 1, 0, 1);
        sp.set(pt(0, 0), &self.ctx.one());
        sp
    }
}

/// The truncated Frobenius lift data.
pub struct FrobeniusLift {
    pub z_x: StripPoly,
    pub z_y: StripPoly,
    pub z_x_inv: StripPoly,
    pub z_y_inv: StripPoly,
    /// Support budget (dilation factor) of the stored series.
    pub budget: i64,
}

/// Digit-wise lift of the p-th power of the reduction of `h`, with its
/// exponents scaled by p: the canonical lift of `hbar^p`.
fn p_power_lift(
    ctx: &ZqContext,
    h: &LaurentPolynomial<ZqContext>,
) -> LaurentPolynomial<ZqContext> {
    let field = &ctx.spec;
    LaurentPolynomial::from_terms(
        ctx,
        h.iter().map(|(q, c)| {
            let cbar = ctx.reduce_mod_p(c);
            let cp = field.frobenius(&cbar);
            (pt(q.x * ctx.spec.p as i64, q.y * ctx.spec.p as i64), ctx.canonical_lift(&cp))
        }),
    )
}

fn sigma_laurent(
    ctx: &ZqContext,
    h: &LaurentPolynomial<ZqContext>,
    power: usize,
) -> LaurentPolynomial<ZqContext> {
    LaurentPolynomial::from_terms(ctx, h.iter().map(|(q, c)| (q, ctx.frobenius(c, power))))
}

/// Budget for the lift data computed modulo p^N.
pub fn lift_budget(p: u64, n: u32) -> i64 {
    9 * p as i64 * n as i64 + 5 * p as i64
}

/// Budget for the differential kernel.
pub fn kernel_budget(p: u64, n: u32) -> i64 {
    9 * p as i64 * n as i64 + 3 * p as i64
}

/// Computes the Frobenius lift by Newton iteration on
/// `G(Z) = (1 + dx Z)^a (1 + dy Z)^b f^sigma(x^p(1 + dx Z), y^p(1 + dy Z))`
/// starting from zero, with an inverse-derivative iterate carried along.
pub fn lift_frobenius(
    sc: &StripCtx<'_>,
    conv: &mut Convolver,
    f: &LaurentPolynomial<ZqContext>,
    cert: &NssCertificate,
) -> Result<FrobeniusLift> {
    let ctx = sc.ctx;
    let p = ctx.spec.p;
    let n = ctx.precision;
    let delta_x = p_power_lift(ctx, &cert.alpha);
    let delta_y = p_power_lift(ctx, &cert.beta);
    let dx_dense = StripPoly::from_laurent(ctx, &delta_x);
    let dy_dense = StripPoly::from_laurent(ctx, &delta_y);
    // monomial x^a y^b clearing f's denominators, with a, b minimal
    let a_exp = -f.iter().map(|(q, _)| q.x).min().unwrap();
    let b_exp = -f.iter().map(|(q, _)| q.y).min().unwrap();
    debug_assert!(a_exp >= 0 && b_exp >= 0);
    let f_sigma = sigma_laurent(ctx, f, 1);

    // precision ladder
    let mut levels = vec![n];
    let mut cur = n;
    while cur > 2 {
        cur = (cur + 1) / 2;
        levels.push(cur);
    }
    levels.reverse();

    let mut z = StripPoly::zero(ctx, 0, 1, 0, 1);
    let mut w = sc.one(); // approximate inverse of G'(z)
    for &level in &levels {
        let budget = lift_budget(p, level);
        // u = 1 + dx z, v = 1 + dy z and their power tables
        let mut u = sc.mul(conv, &dx_dense, &z, budget);
        u.add_assign(ctx, &sc.one());
        let mut v = sc.mul(conv, &dy_dense, &z, budget);
        v.add_assign(ctx, &sc.one());
        let max_u = (a_exp + f.iter().map(|(q, _)| q.x).max().unwrap()) as usize;
        let max_v = (b_exp + f.iter().map(|(q, _)| q.y).max().unwrap()) as usize;
        let mut u_pow: Vec<StripPoly> = vec![sc.one(), u.clone()];
        for k in 2..=max_u.max(1) {
            let next = sc.mul(conv, &u_pow[k - 1], &u, budget);
            u_pow.push(next);
        }
        let mut v_pow: Vec<StripPoly> = vec![sc.one(), v.clone()];
        for k in 2..=max_v.max(1) {
            let next = sc.mul(conv, &v_pow[k - 1], &v, budget);
            v_pow.push(next);
        }
        // G(z) and the two derivative accumulators
        let mut g_val: Option<StripPoly> = None;
        let mut acc_u: Option<StripPoly> = None; // sum f_ij (a+i) x^{pi}y^{pj} u^{a+i-1} v^{b+j}
        let mut acc_v: Option<StripPoly> = None;
        for (q, coeff) in f_sigma.iter() {
            let iu = (a_exp + q.x) as usize;
            let iv = (b_exp + q.y) as usize;
            let term = sc.mul(conv, &u_pow[iu], &v_pow[iv], budget);
            let term = sc.shift_reduce(&term, p as i64 * q.x, p as i64 * q.y, budget);
            let term = term.scale(ctx, coeff);
            g_val = Some(match g_val {
                None => term.clone(),
                Some(mut acc) => {
                    acc.add_assign(ctx, &term);
                    acc
                }
            });
            if iu > 0 {
                let du = sc.mul(conv, &u_pow[iu - 1], &v_pow[iv], budget);
                let du = sc.shift_reduce(&du, p as i64 * q.x, p as i64 * q.y, budget);
                let du = du.scale(ctx, &ctx.mul(coeff, &Ring::from_i64(ctx, iu as i64)));
                acc_u = Some(match acc_u {
                    None => du,
                    Some(mut acc) => {
                        acc.add_assign(ctx, &du);
                        acc
                    }
                });
            }
            if iv > 0 {
                let dv = sc.mul(conv, &u_pow[iu], &v_pow[iv - 1], budget);
                let dv = sc.shift_reduce(&dv, p as i64 * q.x, p as i64 * q.y, budget);
                let dv = dv.scale(ctx, &ctx.mul(coeff, &Ring::from_i64(ctx, iv as i64)));
                acc_v = Some(match acc_v {
                    None => dv,
                    Some(mut acc) => {
                        acc.add_assign(ctx, &dv);
                        acc
                    }
                });
            }
        }
        let g_val = g_val.expect("f has terms");
        // G'(z) = dx acc_u + dy acc_v
        let mut g_der = match acc_u {
            Some(acc) => sc.mul(conv, &dx_dense, &acc, budget),
            None => StripPoly::zero(ctx, 0, 1, 0, 1),
        };
        if let Some(acc) = acc_v {
            let t = sc.mul(conv, &dy_dense, &acc, budget);
            g_der.add_assign(ctx, &t);
        }
        // refresh the inverse first, then step; updating z against the stale
        // inverse would cut the convergence rate below quadratic
        let gw = sc.mul(conv, &g_der, &w, budget);
        let mut two = sc.one();
        two.add_assign(ctx, &sc.one());
        two.sub_assign(ctx, &gw);
        w = sc.mul(conv, &w, &two, budget);
        // z <- z - G(z) w
        let step = sc.mul(conv, &g_val, &w, budget);
        z.sub_assign(ctx, &step);
        z = window_truncate(ctx, z, sc.window(budget));
    }

    let budget = lift_budget(p, n);
    let mut z_x = sc.mul(conv, &dx_dense, &z, budget);
    z_x.add_assign(ctx, &sc.one());
    let mut z_y = sc.mul(conv, &dy_dense, &z, budget);
    z_y.add_assign(ctx, &sc.one());
    let z_x_inv = invert_series(sc, conv, &z_x, budget)?;
    let z_y_inv = invert_series(sc, conv, &z_y, budget)?;

    // structural checks: everything is 1 mod p, and the inverses invert
    for (s, invs) in [(&z_x, &z_x_inv), (&z_y, &z_y_inv)] {
        let mut prod = sc.mul(conv, s, invs, budget);
        prod.sub_assign(ctx, &sc.one());
        if !strip_valuation_at_least(ctx, &prod, n) {
            return Err(Error::Internal("series inverse check failed".into()));
        }
        let mut dev = s.clone();
        dev.sub_assign(ctx, &sc.one());
        if !strip_valuation_at_least(ctx, &dev, 1) {
            return Err(Error::Internal("lift series is not 1 mod p".into()));
        }
    }
    Ok(FrobeniusLift {
        z_x,
        z_y,
        z_x_inv,
        z_y_inv,
        budget,
    })
}

/// Newton inverse of a strip series congruent to a unit constant mod p.
fn invert_series(
    sc: &StripCtx<'_>,
    conv: &mut Convolver,
    s: &StripPoly,
    budget: i64,
) -> Result<StripPoly> {
    let ctx = sc.ctx;
    let c0 = s.get(ctx, pt(0, 0));
    if !ctx.is_unit(&c0) {
        return Err(Error::NonUnitDerivative);
    }
    let mut u = StripPoly::zero(ctx, 0, 1, 0, 1);
    u.set(pt(0, 0), &ctx.inv(&c0)?);
    let mut steps = 1u32;
    while (1u32 << steps) < ctx.precision {
        steps += 1;
    }
    for _ in 0..=steps {
        let su = sc.mul(conv, s, &u, budget);
        let mut two = sc.one();
        two.add_assign(ctx, &sc.one());
        two.sub_assign(ctx, &su);
        u = sc.mul(conv, &u, &two, budget);
    }
    Ok(u)
}

/// All coefficients divisible by p^k.
pub fn strip_valuation_at_least(ctx: &ZqContext, sp: &StripPoly, k: u32) -> bool {
    let w = ctx.words();
    for r in 0..sp.rows {
        for c in 0..sp.cols {
            let v = sp.slot(r, c);
            for comp in 0..ctx.n() {
                if ctx.modulus.valuation(&v[comp * w..(comp + 1) * w]) < k {
                    return false;
                }
            }
        }
    }
    true
}

/// Power tables of the lift series over a contiguous exponent range.
pub struct PowerTables {
    pub zx: std::collections::BTreeMap<i64, StripPoly>,
    pub zy: std::collections::BTreeMap<i64, StripPoly>,
}

/// Builds `Z_x^i` for i in `[i_lo, i_hi]` and `Z_y^j` likewise,
/// incrementally in both directions from 0.
pub fn power_tables(
    sc: &StripCtx<'_>,
    conv: &mut Convolver,
    lift: &FrobeniusLift,
    i_range: (i64, i64),
    j_range: (i64, i64),
) -> PowerTables {
    let budget = lift.budget;
    let mut zx = std::collections::BTreeMap::new();
    let mut zy = std::collections::BTreeMap::new();
    zx.insert(0, sc.one());
    zy.insert(0, sc.one());
    for k in 1..=i_range.1.max(0) {
        let prev = zx.get(&(k - 1)).unwrap().clone();
        zx.insert(k, sc.mul(conv, &prev, &lift.z_x, budget));
    }
    for k in 1..=(-i_range.0).max(0) {
        let prev = zx.get(&(-(k - 1))).unwrap().clone();
        zx.insert(-k, sc.mul(conv, &prev, &lift.z_x_inv, budget));
    }
    for k in 1..=j_range.1.max(0) {
        let prev = zy.get(&(k - 1)).unwrap().clone();
        zy.insert(k, sc.mul(conv, &prev, &lift.z_y, budget));
    }
    for k in 1..=(-j_range.0).max(0) {
        let prev = zy.get(&(-(k - 1))).unwrap().clone();
        zy.insert(-k, sc.mul(conv, &prev, &lift.z_y_inv, budget));
    }
    PowerTables { zx, zy }
}

/// Image of a sparse polynomial under the induced Frobenius: coefficients
/// get the substitution, monomials map to `x^{pi} y^{pj} Z_x^i Z_y^j`.
pub fn frobenius_of_laurent(
    sc: &StripCtx<'_>,
    conv: &mut Convolver,
    tables: &PowerTables,
    h: &LaurentPolynomial<ZqContext>,
    budget: i64,
) -> StripPoly {
    let ctx = sc.ctx;
    let p = ctx.spec.p as i64;
    let mut acc = StripPoly::zero(ctx, 0, 1, 0, 1);
    for (q, c) in h.iter() {
        let zi = tables.zx.get(&q.x).expect("power table covers support");
        let zj = tables.zy.get(&q.y).expect("power table covers support");
        let t = sc.mul(conv, zi, zj, budget);
        let t = sc.shift_reduce(&t, p * q.x, p * q.y, budget);
        let t = t.scale(ctx, &ctx.frobenius(c, 1));
        acc.add_assign(ctx, &t);
    }
    window_truncate(ctx, acc, sc.window(budget))
}

/// The precomputed kernel: the pullback of the distinguished differential,
/// expressed as a strip form ready to be multiplied by monomial images.
pub struct FrobeniusKernel {
    pub e: StripPoly,
    pub budget: i64,
}

/// Assembles the kernel from the lift and the certificate cofactors.
pub fn precompute_kernel(
    sc: &StripCtx<'_>,
    conv: &mut Convolver,
    lift: &FrobeniusLift,
    tables: &PowerTables,
    cert: &NssCertificate,
    f: &LaurentPolynomial<ZqContext>,
) -> Result<FrobeniusKernel> {
    let ctx = sc.ctx;
    let p = ctx.spec.p;
    let budget = lift.budget;
    let fp_alpha = frobenius_of_laurent(sc, conv, tables, &cert.alpha, budget);
    let fp_beta = frobenius_of_laurent(sc, conv, tables, &cert.beta, budget);
    // logarithmic derivative ratios of the lift series
    let p_elem = ctx.from_u64(p);
    let ratio = |num: &StripPoly, den_inv: &StripPoly, add_p: bool, conv: &mut Convolver| {
        let mut r = sc.mul(conv, num, den_inv, budget);
        if add_p {
            let mut c = sc.one().scale(ctx, &p_elem);
            c.add_assign(ctx, &r);
            r = c;
        }
        r
    };
    let zx_dx = lift.z_x.x_dx(ctx);
    let zy_dx = lift.z_y.x_dx(ctx);
    let zx_dy = lift.z_x.y_dy(ctx);
    let zy_dy = lift.z_y.y_dy(ctx);
    let r1 = ratio(&zx_dx, &lift.z_x_inv, true, conv);
    let r2 = ratio(&zy_dx, &lift.z_y_inv, false, conv);
    let r3 = ratio(&zx_dy, &lift.z_x_inv, false, conv);
    let r4 = ratio(&zy_dy, &lift.z_y_inv, true, conv);
    // E = y f_y (F(beta) r1 - F(alpha) r2) - x f_x (F(beta) r3 - F(alpha) r4)
    let mut t1 = sc.mul(conv, &fp_beta, &r1, budget);
    let t2 = sc.mul(conv, &fp_alpha, &r2, budget);
    t1.sub_assign(ctx, &t2);
    let mut t3 = sc.mul(conv, &fp_beta, &r3, budget);
    let t4 = sc.mul(conv, &fp_alpha, &r4, budget);
    t3.sub_assign(ctx, &t4);
    let yfy = StripPoly::from_laurent(ctx, &f.y_dy(ctx));
    let xfx = StripPoly::from_laurent(ctx, &f.x_dx(ctx));
    let kb = kernel_budget(p, ctx.precision);
    let mut e = sc.mul(conv, &yfy, &t1, kb);
    let e2 = sc.mul(conv, &xfx, &t3, kb);
    e.sub_assign(ctx, &e2);
    let e = window_truncate(ctx, e, sc.window(kb));
    Ok(FrobeniusKernel { e, budget: kb })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::FieldSpec;
    use crate::nullstellensatz::solve_nss;

    fn setup(
        p: u64,
        prec: u32,
    ) -> (
        ZqContext,
        LaurentPolynomial<ZqContext>,
        NewtonPolytope,
    ) {
        let fs = FieldSpec::with_default_modulus(p, 1).unwrap();
        let ctx = ZqContext::new(fs, prec);
        let f = LaurentPolynomial::from_terms(
            &ctx,
            [
                (pt(1, 0), ctx.one()),
                (pt(-1, 0), ctx.one()),
                (pt(0, 1), ctx.one()),
                (pt(0, -1), ctx.one()),
                (pt(0, 0), ctx.one()),
            ],
        );
        let poly = NewtonPolytope::from_support(&f.support()).unwrap();
        (ctx, f, poly)
    }

    fn lift_for(
        ctx: &ZqContext,
        f: &LaurentPolynomial<ZqContext>,
        poly: &NewtonPolytope,
        conv: &mut Convolver,
    ) -> (FrobeniusLift, NssCertificate) {
        let cert = solve_nss(ctx, f, poly).unwrap();
        let sc = StripCtx::new(ctx, poly, poly.constants(), f).unwrap();
        let lift = lift_frobenius(&sc, conv, f, &cert).unwrap();
        (lift, cert)
    }

    /// Substituting the lift into f^sigma must vanish mod (f, p^N).
    fn lift_residual_is_zero(
        ctx: &ZqContext,
        f: &LaurentPolynomial<ZqContext>,
        poly: &NewtonPolytope,
        lift: &FrobeniusLift,
        conv: &mut Convolver,
    ) -> bool {
        let sc = StripCtx::new(ctx, poly, poly.constants(), f).unwrap();
        let mut i_lo = 0;
        let mut i_hi = 0;
        let mut j_lo = 0;
        let mut j_hi = 0;
        for (q, _) in f.iter() {
            i_lo = i_lo.min(q.x);
            i_hi = i_hi.max(q.x);
            j_lo = j_lo.min(q.y);
            j_hi = j_hi.max(q.y);
        }
        let tables = power_tables(&sc, conv, lift, (i_lo, i_hi), (j_lo, j_hi));
        let img = frobenius_of_laurent(&sc, conv, &tables, f, lift.budget);
        strip_valuation_at_least(ctx, &img, ctx.precision)
    }

    #[test]
    fn diamond_lift_f7() {
        let (ctx, f, poly) = setup(7, 5);
        let mut conv = Convolver::new();
        let (lift, _) = lift_for(&ctx, &f, &poly, &mut conv);
        assert!(strip_valuation_at_least(
            &ctx,
            &{
                let mut d = lift.z_x.clone();
                let sc = StripCtx::new(&ctx, &poly, poly.constants(), &f).unwrap();
                d.sub_assign(&ctx, &sc.one());
                d
            },
            1
        ));
        assert!(lift_residual_is_zero(&ctx, &f, &poly, &lift, &mut conv));
    }

    #[test]
    fn diamond_lift_f2() {
        let (ctx, f, poly) = setup(2, 6);
        let mut conv = Convolver::new();
        let (lift, _) = lift_for(&ctx, &f, &poly, &mut conv);
        assert!(lift_residual_is_zero(&ctx, &f, &poly, &lift, &mut conv));
    }

    #[test]
    fn truncation_soundness_enlarged_budget() {
        // recomputing with a larger support budget must agree mod p^N
        let (ctx, _f, poly) = setup(5, 4);
        // twist the diamond so it is nondegenerate over F_5
        let f = LaurentPolynomial::from_terms(
            &ctx,
            [
                (pt(1, 0), ctx.one()),
                (pt(-1, 0), ctx.one()),
                (pt(0, 1), ctx.one()),
                (pt(0, -1), ctx.one()),
                (pt(0, 0), ctx.from_u64(2)),
            ],
        );
        let mut conv = Convolver::new();
        let cert = solve_nss(&ctx, &f, &poly).unwrap();
        let sc = StripCtx::new(&ctx, &poly, poly.constants(), &f).unwrap();
        let lift_a = lift_frobenius(&sc, &mut conv, &f, &cert).unwrap();
        // enlarge every window by raising the budget
        let mut cons_wide = poly.constants();
        cons_wide.pad1 += 2 * ctx.spec.p as i64;
        cons_wide.pad2 += 2 * ctx.spec.p as i64;
        let sc_wide = StripCtx::new(&ctx, &poly, cons_wide, &f).unwrap();
        let lift_b = lift_frobenius(&sc_wide, &mut conv, &f, &cert).unwrap();
        // compare on the common narrow window
        let narrow = sc.window(lift_a.budget);
        let za = window_truncate(&ctx, lift_a.z_x.clone(), narrow);
        let zb = window_truncate(&ctx, lift_b.z_x.clone(), narrow);
        assert_eq!(za.to_laurent(&ctx), zb.to_laurent(&ctx));
    }

    #[test]
    fn kernel_identity_action() {
        // multiplying the kernel by the image of x^0 y^0 returns the kernel
        let (ctx, f, poly) = setup(7, 4);
        let mut conv = Convolver::new();
        let (lift, cert) = lift_for(&ctx, &f, &poly, &mut conv);
        let sc = StripCtx::new(&ctx, &poly, poly.constants(), &f).unwrap();
        let tables = power_tables(&sc, &mut conv, &lift, (-2, 2), (-2, 2));
        let kernel = precompute_kernel(&sc, &mut conv, &lift, &tables, &cert, &f).unwrap();
        let one_img = frobenius_of_laurent(
            &sc,
            &mut conv,
            &tables,
            &LaurentPolynomial::monomial(&ctx, pt(0, 0), ctx.one()),
            lift.budget,
        );
        let prod = sc.mul(&mut conv, &one_img, &kernel.e, kernel.budget);
        let narrow = sc.window(kernel.budget);
        let lhs = window_truncate(&ctx, prod, narrow);
        let rhs = window_truncate(&ctx, kernel.e.clone(), narrow);
        assert_eq!(lhs.to_laurent(&ctx), rhs.to_laurent(&ctx));
    }
}
