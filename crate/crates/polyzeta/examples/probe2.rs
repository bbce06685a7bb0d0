use polyzeta::arith::{FieldSpec, ZqContext};
use polyzeta::frobenius::*;
use polyzeta::laurent::{LaurentPolynomial, Ring, StripPoly};
use polyzeta::ntt::Convolver;
use polyzeta::nullstellensatz::solve_nss;
use polyzeta::polytope::pt;
use polyzeta::reduction::*;
use polyzeta::nondegen::validate_input;
use polyzeta::zeta::*;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n_prec: u32 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(44);
    let field = FieldSpec::with_default_modulus(7, 1).unwrap();
    let m1 = Ring::neg(&field, &field.one());
    let fbar = LaurentPolynomial::from_terms(
        &field,
        [
            (pt(0, 2), field.one()),
            (pt(3, 0), m1.clone()),
            (pt(1, 0), m1.clone()),
            (pt(0, 0), m1),
        ],
    );
    let v = validate_input(&field, &fbar).unwrap();
    let poly = &v.polytope;
    let cons = v.constants;
    println!("polytope vertices: {:?}", poly.vertices);
    println!("constants: {:?}", cons);
    let p = 7u64;
    let maxchi = cons.chi1.abs().max(cons.chi2);
    let mut theta_bound = 0u32;
    loop {
        let n_w = n_prec + theta_bound;
        let m_bound = (9 * p as i64 * n_w as i64 + 5 * p as i64) * maxchi + cons.pad2;
        let next = ReductionPlan::new(p, cons, m_bound).theta;
        if next <= theta_bound { break; }
        theta_bound = next;
    }
    let n_work = n_prec + theta_bound;
    println!("N={} theta_bound={} n_work={}", n_prec, theta_bound, n_work);
    let ctx_work = ZqContext::new(field.clone(), n_work);
    let ctx_out = ZqContext::new(field.clone(), n_prec);
    let f_work: LaurentPolynomial<ZqContext> = LaurentPolynomial::from_terms(
        &ctx_work, v.f.iter().map(|(q, c)| (q, ctx_work.canonical_lift(c))));
    let cert = solve_nss(&ctx_work, &f_work, poly).unwrap();
    println!("cert ok");
    let sc = StripCtx::new(&ctx_work, poly, cons, &f_work).unwrap();
    let mut conv = Convolver::new();
    let lift = lift_frobenius(&sc, &mut conv, &f_work, &cert).unwrap();
    println!("lift done, budget {}", lift.budget);
    // residual check
    let dil = poly.dilated_lattice_points(2);
    let i_range = (dil.iter().map(|q| q.x).min().unwrap(), dil.iter().map(|q| q.x).max().unwrap());
    let j_range = (dil.iter().map(|q| q.y).min().unwrap(), dil.iter().map(|q| q.y).max().unwrap());
    let tables = power_tables(&sc, &mut conv, &lift, i_range, j_range);
    let img = frobenius_of_laurent(&sc, &mut conv, &tables, &f_work, lift.budget);
    println!("lift residual zero mod p^N: {}", strip_valuation_at_least(&ctx_work, &img, n_work));
    let kernel = precompute_kernel(&sc, &mut conv, &lift, &tables, &cert, &f_work).unwrap();
    println!("kernel done");
    let pad = basis_precision_pad(1, p, poly);
    let basis_ctx = ZqContext::new(field.clone(), n_prec + pad);
    let f_out: LaurentPolynomial<ZqContext> = LaurentPolynomial::from_terms(
        &ctx_out, v.f.iter().map(|(q, c)| (q, ctx_out.canonical_lift(c))));
    let basis = cohomology_basis(&ctx_out, &basis_ctx, &f_out, poly).unwrap();
    println!("basis dim {} ell {}", basis.dim, basis.ell);

    // exact-form check at pipeline scale: reduce p^eps * strip(D(x)) along with the W batch
    let x_mono = LaurentPolynomial::monomial(&ctx_work, pt(1, 0), ctx_work.one());
    let dx = x_mono.d_operator(&ctx_work, &f_work);
    let sred = polyzeta::laurent::StripReducer::new(&ctx_work, &f_work, poly).unwrap();
    let dx_strip = StripPoly::from_laurent(&ctx_work, &sred.reduce(&ctx_work, &dx));

    // emulate frobenius_matrix with diagnostics
    let monomials = &basis.monomials;
    let mut images: Vec<StripPoly> = Vec::new();
    let mut cached: Option<(i64, StripPoly)> = None;
    for q in monomials.iter() {
        let ej = match &cached {
            Some((j, e)) if *j == q.y => e.clone(),
            _ => {
                let zyj = tables.zy.get(&q.y).unwrap();
                let e = sc.mul(&mut conv, zyj, &kernel.e, kernel.budget);
                cached = Some((q.y, e.clone()));
                e
            }
        };
        let zxi = tables.zx.get(&q.x).unwrap();
        let w = sc.mul(&mut conv, zxi, &ej, kernel.budget);
        images.push(sc.shift_reduce(&w, 7 * q.x, 7 * q.y, kernel.budget));
    }
    let mut m_star = 1i64;
    for img in &images {
        for c in 0..img.cols {
            let s = img.stride();
            if (0..img.rows).any(|r| img.data[(r * img.cols + c) * s..][..s].iter().any(|&l| l != 0)) {
                m_star = m_star.max((img.x0 + c as i64).abs());
            }
        }
    }
    let plan = ReductionPlan::new(p, cons, m_star);
    println!("m_star={} eps={} theta={} c={}", m_star, plan.epsilon, plan.theta, plan.c);
    let p_eps = ctx_work.scale_p_power(&ctx_work.one(), plan.epsilon);
    let mut batch: Vec<StripPoly> = images.iter().map(|i| i.scale(&ctx_work, &p_eps)).collect();
    batch.push(dx_strip.scale(&ctx_work, &p_eps));
    let engine = ReductionEngine::new(&ctx_work, poly, &f_work, plan, false).unwrap();
    let reduced = engine.reduce_batch(batch).unwrap();
    println!("reduction done");
    // exact form coordinates must vanish mod p^(n_work - theta - ?) in basis coords
    let dx_red = &reduced[monomials.len()];
    let coords: Vec<_> = basis.monomials.iter().map(|q| {
        let c = dx_red.r.coeff(&ctx_work, *q);
        ctx_work.convert(&c, &ctx_out)
    }).collect();
    let mut max_bad = 0u32;
    for t in basis.ell..basis.monomials.len() {
        let mut acc = ctx_out.zero();
        for (mi, coord) in coords.iter().enumerate() {
            let v2 = ctx_out.mul(coord, &basis.n2[mi][t]);
            acc = ctx_out.add(&acc, &v2);
        }
        let val = ctx_out.valuation(&acc);
        if val < n_prec { max_bad = max_bad.max(n_prec - val); }
    }
    println!("exact-form free-coordinate deficiency: {} digits (0 = perfect)", max_bad);

    // full matrix
    let fmat = frobenius_matrix(&sc, &mut conv, &ctx_out, &lift, &kernel, &tables, &basis, &f_work, poly, theta_bound).unwrap();
    let normed = norm_matrix(&ctx_out, &fmat.mat, 1);
    let chi_tilde = char_poly(&ctx_out, &normed);
    match assemble_zeta(&ctx_out, &chi_tilde, fmat.epsilon, poly, p, 1, 3, vec![]) {
        Ok(z) => println!("OK chi = {:?} counts={:?}", z.chi, z.point_counts),
        Err(e) => println!("assemble ERROR: {e}"),
    }
}
