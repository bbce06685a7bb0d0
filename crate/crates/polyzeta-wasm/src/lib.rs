//! Browser bindings: three interactive operations over curve-file text,
//! each returning a JSON string for the demo page to render.

use polyzeta::curve_file::parse_curve;
use polyzeta::nondegen::{is_nondegenerate, validate_input};
use polyzeta::oracle;
use polyzeta::zeta::{compute_zeta, determine_precision, ZetaOptions};
use serde_json::{json, Number, Value};
use wasm_bindgen::prelude::wasm_bindgen;

fn big_num(s: &str) -> Value {
    Value::Number(Number::from_string_unchecked(s.to_string()))
}

fn err_json(msg: impl std::fmt::Display) -> String {
    json!({ "error": msg.to_string() }).to_string()
}

/// Polytope geometry, constants, precision plan, and the nondegeneracy
/// verdict, without running the pipeline.
#[wasm_bindgen]
pub fn analyze(curve_text: &str) -> String {
    let curve = match parse_curve(curve_text) {
        Ok(c) => c,
        Err(e) => return err_json(e),
    };
    let report = match is_nondegenerate(&curve.field, &curve.f) {
        Ok(r) => r,
        Err(e) => return err_json(e),
    };
    let poly0 = match curve.f.newton_polytope() {
        Ok(p) => p,
        Err(e) => return err_json(e),
    };
    let support: Vec<Value> = curve.f.iter().map(|(q, _)| json!([q.x, q.y])).collect();
    let hull: Vec<Value> = poly0.vertices.iter().map(|q| json!([q.x, q.y])).collect();
    let interior: Vec<Value> = poly0.interior.iter().map(|q| json!([q.x, q.y])).collect();
    let mut out = json!({
        "p": curve.field.p,
        "n": curve.field.n,
        "support": support,
        "hull": hull,
        "interior": interior,
        "genus": poly0.genus(),
        "boundary_points": poly0.boundary_count(),
        "volume_x2": poly0.vol2,
        "nondegenerate": report.nondegenerate,
        "verdict": report.describe_failure(),
    });
    if report.nondegenerate && poly0.genus() >= 1 {
        match validate_input(&curve.field, &curve.f) {
            Ok(v) => {
                let plan =
                    determine_precision(&v.polytope, &v.constants, curve.field.p, curve.field.n);
                let obj = out.as_object_mut().unwrap();
                obj.insert(
                    "normalized_hull".into(),
                    Value::Array(
                        v.polytope
                            .vertices
                            .iter()
                            .map(|q| json!([q.x, q.y]))
                            .collect(),
                    ),
                );
                obj.insert("chi".into(), json!([v.constants.chi1, v.constants.chi2]));
                obj.insert(
                    "kappa".into(),
                    json!([v.constants.kappa1, v.constants.kappa2]),
                );
                if let Ok(plan) = plan {
                    obj.insert("precision_N".into(), json!(plan.n_prec));
                }
            }
            Err(e) => {
                out.as_object_mut()
                    .unwrap()
                    .insert("pipeline_error".into(), json!(e.to_string()));
            }
        }
    }
    out.to_string()
}

/// Full zeta computation. Guarded: refuses plans whose working precision
/// would freeze the browser tab.
#[wasm_bindgen]
pub fn zeta(curve_text: &str, kmax: usize) -> String {
    let curve = match parse_curve(curve_text) {
        Ok(c) => c,
        Err(e) => return err_json(e),
    };
    // size guard
    match validate_input(&curve.field, &curve.f)
        .and_then(|v| determine_precision(&v.polytope, &v.constants, curve.field.p, curve.field.n))
    {
        Ok(plan) if plan.n_prec > 160 => {
            return err_json(format!(
                "working precision N = {} is too large for the in-browser demo; try a smaller prime or genus",
                plan.n_prec
            ));
        }
        Err(e) => return err_json(e),
        _ => {}
    }
    let options = ZetaOptions {
        precision_override: None,
        kmax: kmax.clamp(1, 8),
    };
    match compute_zeta(&curve.field, &curve.f, &options) {
        Ok(z) => json!({
            "p": z.p,
            "n": z.n,
            "genus": z.genus,
            "boundary_points": z.boundary_points,
            "precision_N": z.precision,
            "chi": z.chi.iter().map(|c| big_num(&c.to_string())).collect::<Vec<_>>(),
            "P": z.p_num.iter().map(|c| big_num(&c.to_string())).collect::<Vec<_>>(),
            "point_counts": z
                .point_counts
                .iter()
                .map(|(k, nk)| json!([k, big_num(&nk.to_string())]))
                .collect::<Vec<_>>(),
        })
        .to_string(),
        Err(e) => err_json(e),
    }
}

/// Brute-force torus counts, for side-by-side verification in the page.
#[wasm_bindgen]
pub fn brute_counts(curve_text: &str, kmax: usize) -> String {
    let curve = match parse_curve(curve_text) {
        Ok(c) => c,
        Err(e) => return err_json(e),
    };
    let mut rows = Vec::new();
    for k in 1..=kmax.clamp(1, 8) {
        match oracle::brute_force_count(&curve.field, &curve.f, k) {
            Ok(c) => rows.push(json!([k, c])),
            Err(e) => {
                rows.push(json!([k, e.to_string()]));
                break;
            }
        }
    }
    json!({ "counts": rows }).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    const DIAMOND: &str =
        "p 7\nn 1\nterm 1 0 1\nterm -1 0 1\nterm 0 1 1\nterm 0 -1 1\nterm 0 0 1\n";

    #[test]
    fn analyze_reports_geometry() {
        let v: serde_json::Value = serde_json::from_str(&analyze(DIAMOND)).unwrap();
        assert_eq!(v["genus"], 1);
        assert_eq!(v["boundary_points"], 4);
        assert_eq!(v["nondegenerate"], true);
        assert_eq!(v["precision_N"], 31);
    }

    #[test]
    fn brute_counts_work() {
        let v: serde_json::Value = serde_json::from_str(&brute_counts(DIAMOND, 2)).unwrap();
        assert_eq!(v["counts"][0][1], 4);
    }

    #[test]
    fn errors_are_json() {
        let v: serde_json::Value = serde_json::from_str(&analyze("p 6\nterm 0 0 1\n")).unwrap();
        assert!(v["error"].as_str().unwrap().contains("not prime"));
    }
}
