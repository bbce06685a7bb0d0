//! Certificate `1 = gamma f + alpha x f_x + beta y f_y` with all three
//! cofactors supported in the double dilation of the Newton polytope,
//! solved by Gaussian elimination restricted to unit pivots (so the
//! solution is exact at the working precision).

use crate::arith::{ZqContext, ZqElement};
use crate::error::{Error, Result};
use crate::laurent::LaurentPolynomial;
use crate::polytope::NewtonPolytope;

#[derive(Debug, Clone)]
pub struct NssCertificate {
    pub gamma: LaurentPolynomial<ZqContext>,
    pub alpha: LaurentPolynomial<ZqContext>,
    pub beta: LaurentPolynomial<ZqContext>,
    pub precision: u32,
}

impl NssCertificate {
    /// Recomputes gamma f + alpha x f_x + beta y f_y; must equal 1.
    pub fn residual_is_one(&self, ctx: &ZqContext, f: &LaurentPolynomial<ZqContext>) -> bool {
        let xfx = f.x_dx(ctx);
        let yfy = f.y_dy(ctx);
        let mut acc = self.gamma.multiply(ctx, f);
        acc = acc.add(ctx, &self.alpha.multiply(ctx, &xfx));
        acc = acc.add(ctx, &self.beta.multiply(ctx, &yfy));
        acc.len() == 1 && acc.coeff(ctx, crate::polytope::pt(0, 0)) == ctx.one()
    }
}

/// Solves for the certificate at the context precision.
pub fn solve_nss(
    ctx: &ZqContext,
    f: &LaurentPolynomial<ZqContext>,
    poly: &NewtonPolytope,
) -> Result<NssCertificate> {
    let cols_pts = poly.dilated_lattice_points(2);
    let rows_pts = poly.dilated_lattice_points(3);
    let row_index: std::collections::HashMap<(i64, i64), usize> = rows_pts
        .iter()
        .enumerate()
        .map(|(i, q)| ((q.y, q.x), i))
        .collect();
    let n_cols = 3 * cols_pts.len();
    let n_rows = rows_pts.len();

    let factors = [f.clone(), f.x_dx(ctx), f.y_dy(ctx)];
    // dense column-major assembly: column (block, monomial) holds the
    // coefficients of monomial * factor over the triple dilation
    let mut mat: Vec<Vec<ZqElement>> = vec![vec![ctx.zero(); n_cols]; n_rows];
    for (b, factor) in factors.iter().enumerate() {
        for (m_idx, m) in cols_pts.iter().enumerate() {
            let col = b * cols_pts.len() + m_idx;
            for (q, c) in factor.iter() {
                let target = (q.y + m.y, q.x + m.x);
                let row = *row_index
                    .get(&target)
                    .ok_or_else(|| Error::Internal("support escaped triple dilation".into()))?;
                mat[row][col] = ctx.add(&mat[row][col], c);
            }
        }
    }
    let mut rhs: Vec<ZqElement> = vec![ctx.zero(); n_rows];
    let origin_row = *row_index
        .get(&(0, 0))
        .ok_or_else(|| Error::Internal("origin not in triple dilation".into()))?;
    rhs[origin_row] = ctx.one();

    // reduced row echelon with unit pivots only
    let mut pivot_of_row: Vec<Option<usize>> = vec![None; n_rows];
    let mut pivoted_col = vec![false; n_cols];
    for r in 0..n_rows {
        let col = (0..n_cols)
            .find(|&c| !pivoted_col[c] && ctx.is_unit(&mat[r][c]));
        let col = match col {
            Some(c) => c,
            None => {
                return Err(Error::NoUnitPivot { row: r });
            }
        };
        let inv = ctx.inv(&mat[r][col])?;
        for c in 0..n_cols {
            mat[r][c] = ctx.mul(&mat[r][c], &inv);
        }
        rhs[r] = ctx.mul(&rhs[r], &inv);
        for r2 in 0..n_rows {
            if r2 == r || ctx.is_zero(&mat[r2][col]) {
                continue;
            }
            let factor = mat[r2][col].clone();
            for c in 0..n_cols {
                let t = ctx.mul(&factor, &mat[r][c]);
                mat[r2][c] = ctx.sub(&mat[r2][c], &t);
            }
            let t = ctx.mul(&factor, &rhs[r]);
            rhs[r2] = ctx.sub(&rhs[r2], &t);
        }
        pivot_of_row[r] = Some(col);
        pivoted_col[col] = true;
    }

    // read off the solution
    let mut solution: Vec<ZqElement> = vec![ctx.zero(); n_cols];
    for r in 0..n_rows {
        if let Some(c) = pivot_of_row[r] {
            solution[c] = rhs[r].clone();
        }
    }
    let block = |b: usize| -> LaurentPolynomial<ZqContext> {
        LaurentPolynomial::from_terms(
            ctx,
            cols_pts
                .iter()
                .enumerate()
                .map(|(i, q)| (*q, solution[b * cols_pts.len() + i].clone())),
        )
    };
    let cert = NssCertificate {
        gamma: block(0),
        alpha: block(1),
        beta: block(2),
        precision: ctx.precision,
    };
    if !cert.residual_is_one(ctx, f) {
        return Err(Error::Internal("certificate residual is not 1".into()));
    }
    // structural support check
    for part in [&cert.gamma, &cert.alpha, &cert.beta] {
        for (q, _) in part.iter() {
            debug_assert!(poly.contains_dilated(q, 2));
            let _ = q;
        }
    }
    Ok(cert)
}

/// Convenience: supports of all three cofactors stay within the double
/// dilation.
pub fn supports_within(cert: &NssCertificate, poly: &NewtonPolytope) -> bool {
    [&cert.gamma, &cert.alpha, &cert.beta]
        .iter()
        .all(|part| part.iter().all(|(q, _)| poly.contains_dilated(q, 2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::FieldSpec;
    use crate::polytope::pt;

    fn diamond_setup(
        p: u64,
        prec: u32,
    ) -> (ZqContext, LaurentPolynomial<ZqContext>, NewtonPolytope) {
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
        let support = f.support();
        let poly = NewtonPolytope::from_support(&support).unwrap();
        (ctx, f, poly)
    }

    #[test]
    fn line_certificate_is_trivial() {
        // f = x + y + 1: f - x f_x - y f_y = 1
        let fs = FieldSpec::with_default_modulus(7, 1).unwrap();
        let ctx = ZqContext::new(fs, 4);
        let f = LaurentPolynomial::from_terms(
            &ctx,
            [
                (pt(1, 0), ctx.one()),
                (pt(0, 1), ctx.one()),
                (pt(0, 0), ctx.one()),
            ],
        );
        let xfx = f.x_dx(&ctx);
        let yfy = f.y_dy(&ctx);
        let ident = f
            .sub(&ctx, &xfx)
            .sub(&ctx, &yfy);
        assert_eq!(ident.len(), 1);
        assert_eq!(ident.coeff(&ctx, pt(0, 0)), ctx.one());
    }

    #[test]
    fn diamond_certificate_f7() {
        let (ctx, f, poly) = diamond_setup(7, 5);
        let cert = solve_nss(&ctx, &f, &poly).unwrap();
        assert!(cert.residual_is_one(&ctx, &f));
        assert!(supports_within(&cert, &poly));
    }

    #[test]
    fn diamond_certificate_f2() {
        let (ctx, f, poly) = diamond_setup(2, 8);
        let cert = solve_nss(&ctx, &f, &poly).unwrap();
        assert!(cert.residual_is_one(&ctx, &f));
    }

    #[test]
    fn degenerate_input_has_no_unit_pivot() {
        let (ctx, f, poly) = diamond_setup(5, 4);
        assert!(matches!(
            solve_nss(&ctx, &f, &poly),
            Err(Error::NoUnitPivot { .. })
        ));
    }

    #[test]
    fn determinism_under_truncation() {
        let (ctx_hi, f_hi, poly) = diamond_setup(7, 8);
        let (ctx_lo, f_lo, _) = diamond_setup(7, 3);
        let hi = solve_nss(&ctx_hi, &f_hi, &poly).unwrap();
        let lo = solve_nss(&ctx_lo, &f_lo, &poly).unwrap();
        // truncating the high-precision solve gives the low-precision one
        for (a, b) in [
            (&hi.gamma, &lo.gamma),
            (&hi.alpha, &lo.alpha),
            (&hi.beta, &lo.beta),
        ] {
            let truncated = LaurentPolynomial::from_terms(
                &ctx_lo,
                a.iter().map(|(q, c)| (q, ctx_hi.convert(c, &ctx_lo))),
            );
            assert_eq!(&truncated, b);
        }
    }
}
