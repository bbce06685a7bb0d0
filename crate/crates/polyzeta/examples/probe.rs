use polyzeta::arith::FieldSpec;
use polyzeta::laurent::{LaurentPolynomial, Ring};
use polyzeta::oracle::verify;
use polyzeta::polytope::pt;
use polyzeta::zeta::ZetaOptions;

fn main() {
    // y^2 = x^3 + x + 1 over F_7: asymmetric polytope, nontrivial normalization
    let args: Vec<String> = std::env::args().collect();
    let p: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let over: Option<u32> = args.get(2).and_then(|s| s.parse().ok());
    let field = FieldSpec::with_default_modulus(p, 1).unwrap();
    let m1 = Ring::neg(&field, &field.one());
    let f = LaurentPolynomial::from_terms(
        &field,
        [
            (pt(0, 2), field.one()),
            (pt(3, 0), m1.clone()),
            (pt(1, 0), m1.clone()),
            (pt(0, 0), m1),
        ],
    );
    let start = std::time::Instant::now();
    let opts = ZetaOptions { precision_override: over, kmax: 4 };
    match verify(&field, &f, 3, &opts) {
        Ok(rep) => {
            for row in &rep.rows {
                println!("k={} oracle={} zeta={} match={}", row.k, row.oracle, row.from_zeta, row.matches);
            }
            println!("all = {}, chi = {:?}, N = {}", rep.all_match, rep.result.chi, rep.result.precision);
        }
        Err(e) => println!("ERROR: {e}"),
    }
    println!("total: {:?}", start.elapsed());
}
