use polyzeta::arith::{FieldSpec, ZqContext};
use polyzeta::laurent::{LaurentPolynomial, Ring, StripReducer};
use polyzeta::polytope::{pt, NewtonPolytope};

fn main() {
    // probe polytope: normalized form of the elliptic curve triangle
    let verts = [pt(-5, 2), pt(1, 0), pt(1, -1), pt(-3, 1)];
    let poly = NewtonPolytope::from_support(&verts).unwrap();
    let cons = poly.constants();
    println!("cons = {cons:?}");
    let field = FieldSpec::with_default_modulus(7, 1).unwrap();
    let ctx = ZqContext::new(field, 6);
    // generic f: all lattice points of the polytope with nonzero coeffs
    let f = LaurentPolynomial::from_terms(
        &ctx,
        poly.dilated_lattice_points(1)
            .iter()
            .enumerate()
            .map(|(i, q)| (*q, ctx.from_u64(1 + (i as u64 % 6)))),
    );
    let red = StripReducer::new(&ctx, &f, &poly).unwrap();
    for m in [1i64, 2, 4, 8, 16, 30] {
        let mut max_x = i64::MIN;
        let mut min_x = i64::MAX;
        for q in poly.dilated_lattice_points(m) {
            let h = LaurentPolynomial::monomial(&ctx, q, ctx.one());
            let r = red.reduce(&ctx, &h);
            for (s, _) in r.iter() {
                max_x = max_x.max(s.x);
                min_x = min_x.min(s.x);
            }
        }
        println!(
            "m={m}: strip x in [{min_x}, {max_x}]  window claim [{}, {}]",
            m * cons.chi1 - cons.pad1,
            m * cons.chi2 + cons.pad2
        );
    }
}
