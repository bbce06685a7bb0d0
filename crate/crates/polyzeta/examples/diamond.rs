use polyzeta::arith::FieldSpec;
use polyzeta::laurent::{LaurentPolynomial, Ring};
use polyzeta::polytope::pt;
use polyzeta::zeta::{compute_zeta, ZetaOptions};

fn main() {
    let p: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let field = FieldSpec::with_default_modulus(p, 1).unwrap();
    let f = LaurentPolynomial::from_terms(
        &field,
        [
            (pt(1, 0), field.one()),
            (pt(-1, 0), field.one()),
            (pt(0, 1), field.one()),
            (pt(0, -1), field.one()),
            (pt(0, 0), field.one()),
        ],
    );
    let start = std::time::Instant::now();
    match compute_zeta(&field, &f, &ZetaOptions::default()) {
        Ok(z) => {
            println!("chi = {:?}", z.chi);
            println!("P   = {:?}", z.p_num);
            println!("counts = {:?}", z.point_counts);
            println!("N = {}, eps = {}", z.precision, z.epsilon_used);
            println!("timings: {:?}", z.timings_ms);
        }
        Err(e) => println!("ERROR: {e}"),
    }
    println!("total: {:?}", start.elapsed());
}
