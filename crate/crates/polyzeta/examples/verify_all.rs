use polyzeta::arith::FieldSpec;
use polyzeta::laurent::{LaurentPolynomial, Ring};
use polyzeta::oracle::verify;
use polyzeta::polytope::pt;
use polyzeta::zeta::ZetaOptions;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "d7".into());
    let (field, f, kmax) = match which.as_str() {
        "d7" => {
            let field = FieldSpec::with_default_modulus(7, 1).unwrap();
            let f = diamond(&field);
            (field, f, 4)
        }
        "d2" => {
            let field = FieldSpec::with_default_modulus(2, 1).unwrap();
            let f = diamond(&field);
            (field, f, 6)
        }
        "g2" => {
            let field = FieldSpec::with_default_modulus(5, 1).unwrap();
            let m1 = Ring::neg(&field, &field.one());
            let f = LaurentPolynomial::from_terms(
                &field,
                [
                    (pt(0, 2), field.one()),
                    (pt(5, 0), m1.clone()),
                    (pt(1, 0), m1.clone()),
                    (pt(0, 0), m1),
                ],
            );
            (field, f, 3)
        }
        _ => panic!("unknown curve"),
    };
    let start = std::time::Instant::now();
    match verify(&field, &f, kmax, &ZetaOptions::default()) {
        Ok(rep) => {
            for row in &rep.rows {
                println!(
                    "k={} oracle={} zeta={} match={}",
                    row.k, row.oracle, row.from_zeta, row.matches
                );
            }
            println!("all_match = {}", rep.all_match);
            println!("chi = {:?}", rep.result.chi);
            println!("timings: {:?}", rep.result.timings_ms);
        }
        Err(e) => println!("ERROR: {e}"),
    }
    println!("total: {:?}", start.elapsed());
}

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
