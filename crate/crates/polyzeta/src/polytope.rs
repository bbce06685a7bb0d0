//! Lattice geometry of Newton polytopes: hulls, edge data, genus,
//! normalization, dilation membership and the derived reduction constants.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LatticePoint {
    pub x: i64,
    pub y: i64,
}

impl LatticePoint {
    pub fn new(x: i64, y: i64) -> LatticePoint {
        LatticePoint { x, y }
    }

    pub fn dot(&self, other: LatticePoint) -> i64 {
        self.x * other.x + self.y * other.y
    }
}

pub fn pt(x: i64, y: i64) -> LatticePoint {
    LatticePoint::new(x, y)
}

fn cross(o: LatticePoint, a: LatticePoint, b: LatticePoint) -> i64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// An edge of the polytope, with its primitive inward normal and the
/// supporting-line constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub from: LatticePoint,
    pub to: LatticePoint,
    /// Primitive inward normal (a_k, b_k).
    pub normal: LatticePoint,
    /// Supporting constant: normal . q >= bound for q in the polytope, with
    /// equality exactly on the edge.
    pub bound: i64,
    /// Arithmetic length: gcd of the coordinate differences.
    pub length: i64,
}

/// A two-dimensional lattice polytope with cached combinatorial data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewtonPolytope {
    /// Vertices in clockwise order, starting from the lexicographically
    /// smallest.
    pub vertices: Vec<LatticePoint>,
    pub edges: Vec<Edge>,
    /// Interior lattice points, sorted.
    pub interior: Vec<LatticePoint>,
    /// Number of boundary lattice points.
    pub boundary_count: i64,
    /// Twice the euclidean area (exact).
    pub vol2: i64,
    pub min_x: i64,
    pub max_x: i64,
    /// Bottom vertex y (d_b) and top vertex y (d_t).
    pub min_y: i64,
    pub max_y: i64,
}

/// Exact rational level of a point with respect to dilations of the
/// polytope; `num/den` is the smallest real `m >= 0` with `q` in `m * P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Level {
    pub num: i64,
    pub den: i64,
}

impl Level {
    pub fn ceil(&self) -> i64 {
        debug_assert!(self.den > 0);
        if self.num <= 0 {
            0
        } else {
            (self.num + self.den - 1) / self.den
        }
    }

    pub fn le_int(&self, m: i64) -> bool {
        self.num <= m * self.den
    }
}

impl NewtonPolytope {
    /// Convex hull of a support set; errors unless it is two-dimensional.
    pub fn from_support(support: &[LatticePoint]) -> Result<NewtonPolytope> {
        let mut pts: Vec<LatticePoint> = support.to_vec();
        pts.sort();
        pts.dedup();
        if pts.len() < 3 {
            return Err(Error::DimensionTooLow);
        }
        // monotone chain, counterclockwise hull
        let mut lower: Vec<LatticePoint> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0
            {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<LatticePoint> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0
            {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        let mut ccw = lower;
        ccw.extend(upper);
        if ccw.len() < 3 {
            return Err(Error::DimensionTooLow);
        }
        // clockwise order starting from the lex-smallest vertex
        ccw.reverse();
        let start = ccw
            .iter()
            .enumerate()
            .min_by_key(|(_, p)| **p)
            .map(|(i, _)| i)
            .unwrap();
        let vertices: Vec<LatticePoint> =
            ccw[start..].iter().chain(&ccw[..start]).copied().collect();

        let r = vertices.len();
        let mut edges = Vec::with_capacity(r);
        let mut vol2 = 0i64;
        for k in 0..r {
            let from = vertices[k];
            let to = vertices[(k + 1) % r];
            vol2 += from.x * to.y - to.x * from.y;
            let (dx, dy) = (to.x - from.x, to.y - from.y);
            let g = gcd(dx, dy);
            // two normal candidates; inward points toward the other vertices
            let mut normal = pt(-dy / g, dx / g);
            let probe = vertices[(k + 2) % r];
            let side = normal.dot(pt(probe.x - from.x, probe.y - from.y));
            debug_assert_ne!(side, 0);
            if side < 0 {
                normal = pt(-normal.x, -normal.y);
            }
            edges.push(Edge {
                from,
                to,
                normal,
                bound: normal.dot(from),
                length: g,
            });
        }
        vol2 = vol2.abs();

        let min_x = vertices.iter().map(|p| p.x).min().unwrap();
        let max_x = vertices.iter().map(|p| p.x).max().unwrap();
        let min_y = vertices.iter().map(|p| p.y).min().unwrap();
        let max_y = vertices.iter().map(|p| p.y).max().unwrap();
        let mut interior = Vec::new();
        let mut boundary_count = 0i64;
        for x in min_x..=max_x {
            for y in min_y..=max_y {
                let q = pt(x, y);
                let mut inside = true;
                let mut strict = true;
                for e in &edges {
                    let d = e.normal.dot(q) - e.bound;
                    if d < 0 {
                        inside = false;
                        break;
                    }
                    if d == 0 {
                        strict = false;
                    }
                }
                if inside {
                    if strict {
                        interior.push(q);
                    } else {
                        boundary_count += 1;
                    }
                }
            }
        }
        interior.sort();

        let poly = NewtonPolytope {
            vertices,
            edges,
            interior,
            boundary_count,
            vol2,
            min_x,
            max_x,
            min_y,
            max_y,
        };
        debug_assert_eq!(
            poly.boundary_count,
            poly.edges.iter().map(|e| e.length).sum::<i64>()
        );
        Ok(poly)
    }

    /// Number of interior lattice points; equals the curve genus.
    pub fn genus(&self) -> i64 {
        self.interior.len() as i64
    }

    pub fn boundary_count(&self) -> i64 {
        self.boundary_count
    }

    pub fn width(&self) -> i64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> i64 {
        self.max_y - self.min_y
    }

    /// Membership of `q` in the dilation `m * P` (m >= 0).
    pub fn contains_dilated(&self, q: LatticePoint, m: i64) -> bool {
        self.edges.iter().all(|e| e.normal.dot(q) >= m * e.bound)
    }

    /// The gauge of `q` relative to the polytope; requires the origin to be
    /// strictly interior (all edge bounds negative).
    pub fn level(&self, q: LatticePoint) -> Level {
        debug_assert!(self.edges.iter().all(|e| e.bound < 0));
        let mut best = Level { num: 0, den: 1 };
        for e in &self.edges {
            let num = -e.normal.dot(q);
            let den = -e.bound;
            if num * best.den > best.num * den {
                let g = gcd(num, den).max(1);
                best = Level {
                    num: num / g,
                    den: den / g,
                };
            }
        }
        best
    }

    /// Smallest integer m with q in m * P.
    pub fn level_ceil(&self, q: LatticePoint) -> i64 {
        self.level(q).ceil()
    }

    /// All lattice points of `m * P`, sorted y-major then x.
    pub fn dilated_lattice_points(&self, m: i64) -> Vec<LatticePoint> {
        let mut out = Vec::new();
        for y in m * self.min_y..=m * self.max_y {
            for x in m * self.min_x..=m * self.max_x {
                let q = pt(x, y);
                if self.contains_dilated(q, m) {
                    out.push(q);
                }
            }
        }
        out
    }

    fn top_vertex(&self) -> Option<LatticePoint> {
        let top: Vec<_> = self.vertices.iter().filter(|v| v.y == self.max_y).collect();
        if top.len() == 1 {
            Some(*top[0])
        } else {
            None
        }
    }

    fn bottom_vertex(&self) -> Option<LatticePoint> {
        let bot: Vec<_> = self.vertices.iter().filter(|v| v.y == self.min_y).collect();
        if bot.len() == 1 {
            Some(*bot[0])
        } else {
            None
        }
    }

    fn origin_interior(&self) -> bool {
        self.edges.iter().all(|e| e.bound < 0)
    }

    /// True when the polytope already has the shape the pipeline requires:
    /// unique top vertex, unique bottom vertex, origin strictly interior.
    pub fn is_normalized(&self) -> bool {
        self.top_vertex().is_some() && self.bottom_vertex().is_some() && self.origin_interior()
    }

    /// Finds a unimodular exponent transform after which the polytope is
    /// normalized. Already-normalized polytopes map to the identity.
    pub fn normalize(&self) -> Result<UnimodularMap> {
        if self.interior.is_empty() {
            return Err(Error::GenusZero);
        }
        if self.is_normalized() {
            return Ok(UnimodularMap::identity());
        }
        // maximal-distance vertex pair, lexicographically smallest on ties
        let mut best: Option<(i64, (LatticePoint, LatticePoint))> = None;
        for (i, &u) in self.vertices.iter().enumerate() {
            for &v in &self.vertices[i + 1..] {
                let (a, b) = if u <= v { (u, v) } else { (v, u) };
                let d2 = (a.x - b.x).pow(2) + (a.y - b.y).pow(2);
                let better = match &best {
                    None => true,
                    Some((bd, bp)) => d2 > *bd || (d2 == *bd && (a, b) < *bp),
                };
                if better {
                    best = Some((d2, (a, b)));
                }
            }
        }
        let (_, (v0, v1)) = best.unwrap();
        let d = pt(v1.x - v0.x, v1.y - v0.y);
        let g = gcd(d.x, d.y);
        let mut alpha = pt(-d.y / g, d.x / g);
        if alpha.x < 0 || (alpha.x == 0 && alpha.y < 0) {
            alpha = pt(-alpha.x, -alpha.y);
        }
        // beta with alpha.x * beta.y - alpha.y * beta.x = 1
        let (s, t) = ext_gcd(alpha.x, alpha.y);
        let mut beta = pt(-t, s);
        // shorten beta against alpha
        let shift =
            ((beta.dot(alpha) as f64) / (alpha.dot(alpha) as f64)).round() as i64;
        beta = pt(beta.x - shift * alpha.x, beta.y - shift * alpha.y);

        let limit = 2 * self.vertices.len() as i64 + 2;
        let mut ks: Vec<i64> = vec![0];
        for k in 1..=limit {
            ks.push(k);
            ks.push(-k);
        }
        for k in ks {
            let row_y = pt(beta.x + k * alpha.x, beta.y + k * alpha.y);
            let mapped: Vec<LatticePoint> = self
                .vertices
                .iter()
                .map(|&q| pt(alpha.dot(q), row_y.dot(q)))
                .collect();
            let hull = NewtonPolytope::from_support(&mapped)?;
            if hull.top_vertex().is_some() && hull.bottom_vertex().is_some() {
                let interior: Vec<LatticePoint> = self
                    .interior
                    .iter()
                    .map(|&q| pt(alpha.dot(q), row_y.dot(q)))
                    .collect();
                let anchor = *interior.iter().min().unwrap();
                return Ok(UnimodularMap {
                    linear: [[alpha.x, alpha.y], [row_y.x, row_y.y]],
                    shift: pt(-anchor.x, -anchor.y),
                });
            }
        }
        Err(Error::Internal("normalization shear search failed".into()))
    }

    /// Mirror image under x -> -x.
    pub fn mirror_x(&self) -> NewtonPolytope {
        let pts: Vec<LatticePoint> = self.vertices.iter().map(|v| pt(-v.x, v.y)).collect();
        NewtonPolytope::from_support(&pts).expect("mirror preserves dimension")
    }

    /// Reduction constants for a normalized polytope.
    pub fn constants(&self) -> PolytopeConstants {
        assert!(self.is_normalized(), "constants need a normalized polytope");
        let (chi2, pad2) = right_window(self);
        let mirror = self.mirror_x();
        let (chi2m, pad1) = right_window(&mirror);
        let chi1 = -chi2m;

        let d_t = self.max_y;
        let d_b = self.min_y;
        let m_ord = self.edges.iter().map(|e| e.normal.x.abs()).max().unwrap();
        let mut delta = 0i64;
        for e in &self.edges {
            delta = delta.max(-(d_t - 1) * e.normal.y).max(-d_b * e.normal.y);
        }
        // divisor multiplier: smallest lambda with
        //   D + E_y + Div_inf(x) + Div_0(x) <= lambda * D   edge-wise
        let mut lambda = 1i64;
        for e in &self.edges {
            let d_coef = -e.bound; // coefficient of D at this edge, > 0
            let ey = (-d_b) * e.normal.y.max(0) + (d_t - 1) * (-e.normal.y).max(0);
            let divx = e.normal.x.abs();
            let total = d_coef + ey + divx;
            lambda = lambda.max((total + d_coef - 1) / d_coef);
        }
        let kappa1 = lambda * chi1;
        let kappa2 = lambda * chi2;
        PolytopeConstants {
            chi1,
            chi2,
            pad1,
            pad2,
            kappa1,
            kappa2,
            m_ord,
            delta,
            lambda,
        }
    }
}

/// Strip window growth on the right side: `chi2` is the per-level
/// coefficient, `pad2` a level-independent safety margin for truncation.
/// Both come from the steepest hull slopes at the top and bottom vertices.
fn right_window(poly: &NewtonPolytope) -> (i64, i64) {
    let d_t = poly.max_y;
    let d_b = poly.min_y;
    let top = poly.top_vertex().unwrap();
    let bot = poly.bottom_vertex().unwrap();
    let neighbors = |v: LatticePoint| -> Vec<LatticePoint> {
        poly.edges
            .iter()
            .filter_map(|e| {
                if e.from == v {
                    Some(e.to)
                } else if e.to == v {
                    Some(e.from)
                } else {
                    None
                }
            })
            .collect()
    };
    let mut chi2 = poly.max_x;
    let mut pad2 = 0i64;
    // clearing from above drifts right at rate max (a - c_t)/(d_t - b)
    let mut top_num = 0i64;
    let mut top_den = 1i64;
    for nb in neighbors(top) {
        let num = nb.x - top.x;
        let den = top.y - nb.y;
        debug_assert!(den > 0);
        if num * top_den > top_num * den {
            (top_num, top_den) = (num, den);
        }
    }
    if top_num > 0 {
        chi2 = chi2.max(top.x + div_ceil(d_t * top_num, top_den));
        pad2 = pad2.max(div_ceil(-d_b * top_num, top_den));
    }
    // clearing from below drifts right at rate max (a - c_b)/(b - d_b)
    let mut bot_num = 0i64;
    let mut bot_den = 1i64;
    for nb in neighbors(bot) {
        let num = nb.x - bot.x;
        let den = nb.y - bot.y;
        debug_assert!(den > 0);
        if num * bot_den > bot_num * den {
            (bot_num, bot_den) = (num, den);
        }
    }
    if bot_num > 0 {
        chi2 = chi2.max(bot.x + div_ceil(-d_b * bot_num, bot_den));
        pad2 = pad2.max(div_ceil(d_t * bot_num, bot_den));
    }
    (chi2, pad2)
}

fn div_ceil(a: i64, b: i64) -> i64 {
    debug_assert!(b > 0);
    if a >= 0 {
        (a + b - 1) / b
    } else {
        -((-a) / b)
    }
}

/// Extended gcd returning (s, t) with a*s + b*t = gcd(a, b).
fn ext_gcd(a: i64, b: i64) -> (i64, i64) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i64, 0i64);
    let (mut old_t, mut t) = (0i64, 1i64);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (old_s, old_t) = (-old_s, -old_t);
    }
    (old_s, old_t)
}

/// A unimodular exponent substitution `q -> M q + shift`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnimodularMap {
    /// Row-major 2x2 integer matrix with determinant +-1.
    pub linear: [[i64; 2]; 2],
    pub shift: LatticePoint,
}

impl UnimodularMap {
    pub fn identity() -> UnimodularMap {
        UnimodularMap {
            linear: [[1, 0], [0, 1]],
            shift: pt(0, 0),
        }
    }

    pub fn det(&self) -> i64 {
        self.linear[0][0] * self.linear[1][1] - self.linear[0][1] * self.linear[1][0]
    }

    pub fn apply(&self, q: LatticePoint) -> LatticePoint {
        pt(
            self.linear[0][0] * q.x + self.linear[0][1] * q.y + self.shift.x,
            self.linear[1][0] * q.x + self.linear[1][1] * q.y + self.shift.y,
        )
    }

    pub fn is_identity(&self) -> bool {
        self.linear == [[1, 0], [0, 1]] && self.shift == pt(0, 0)
    }
}

/// Constants controlling strip windows and precision loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolytopeConstants {
    pub chi1: i64,
    pub chi2: i64,
    /// Additive truncation margins for the left/right strip windows.
    pub pad1: i64,
    pub pad2: i64,
    pub kappa1: i64,
    pub kappa2: i64,
    /// Max |ord(x)| over places at infinity.
    pub m_ord: i64,
    /// Max pole order of y^(d_t - 1) and y^(d_b) at infinity.
    pub delta: i64,
    /// Divisor comparison multiplier defining kappa.
    pub lambda: i64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn diamond() -> NewtonPolytope {
        NewtonPolytope::from_support(&[pt(1, 0), pt(-1, 0), pt(0, 1), pt(0, -1), pt(0, 0)])
            .unwrap()
    }

    #[test]
    fn hull_and_edges() {
        let d = diamond();
        assert_eq!(d.vertices.len(), 4);
        assert_eq!(d.genus(), 1);
        assert_eq!(d.boundary_count(), 4);
        assert_eq!(d.vol2, 4);
        for e in &d.edges {
            assert_eq!(e.length, 1);
            assert_eq!(e.bound, -1);
            assert_eq!(e.normal.x.abs(), 1);
            assert_eq!(e.normal.y.abs(), 1);
        }
        let tri = NewtonPolytope::from_support(&[pt(0, 0), pt(3, 0), pt(0, 2)]).unwrap();
        let mut lens: Vec<i64> = tri.edges.iter().map(|e| e.length).collect();
        lens.sort();
        assert_eq!(lens, vec![1, 2, 3]);
        assert_eq!(tri.genus(), 1);
        assert_eq!(tri.boundary_count(), 6);
        assert_eq!(tri.vol2, 6);
        assert!(matches!(
            NewtonPolytope::from_support(&[pt(0, 0), pt(1, 1), pt(2, 2)]),
            Err(Error::DimensionTooLow)
        ));
        let unit = NewtonPolytope::from_support(&[pt(0, 0), pt(1, 0), pt(0, 1)]).unwrap();
        assert_eq!(unit.genus(), 0);
        assert_eq!(unit.boundary_count(), 3);
    }

    #[test]
    fn levels() {
        let d = diamond();
        assert_eq!(d.level_ceil(pt(3, 0)), 3);
        assert_eq!(d.level_ceil(pt(0, 0)), 0);
        assert_eq!(d.level_ceil(pt(2, 1)), 3);
        assert!(d.contains_dilated(pt(2, 1), 3));
        assert!(!d.contains_dilated(pt(2, 1), 2));
    }

    #[test]
    fn normalize_diamond_is_identity() {
        let d = diamond();
        assert!(d.normalize().unwrap().is_identity());
    }

    #[test]
    fn normalize_examples() {
        for support in [
            vec![pt(0, 0), pt(3, 0), pt(0, 2)],
            vec![pt(0, 0), pt(2, 0), pt(2, 2), pt(0, 2)],
            vec![pt(0, 2), pt(5, 0), pt(1, 0), pt(0, 0)],
        ] {
            let p = NewtonPolytope::from_support(&support).unwrap();
            let map = p.normalize().unwrap();
            assert_eq!(map.det().abs(), 1);
            let mapped: Vec<LatticePoint> = support.iter().map(|&q| map.apply(q)).collect();
            let q = NewtonPolytope::from_support(&mapped).unwrap();
            assert!(q.is_normalized(), "not normalized: {q:?}");
            assert_eq!(q.genus(), p.genus());
            assert_eq!(q.boundary_count(), p.boundary_count());
            assert_eq!(q.vol2, p.vol2);
        }
    }

    #[test]
    fn diamond_constants() {
        let d = diamond();
        let c = d.constants();
        assert_eq!(c.chi1, -1);
        assert_eq!(c.chi2, 1);
        assert_eq!(c.m_ord, 1);
        assert_eq!(c.delta, 1);
        assert_eq!(c.lambda, 3);
        assert_eq!(c.kappa1, -3);
        assert_eq!(c.kappa2, 3);
    }

    #[test]
    fn pick_identity_random() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(1001);
        let mut done = 0;
        while done < 200 {
            let n = rng.gen_range(3..8);
            let ptsv: Vec<LatticePoint> = (0..n)
                .map(|_| pt(rng.gen_range(-6..7), rng.gen_range(-6..7)))
                .collect();
            let p = match NewtonPolytope::from_support(&ptsv) {
                Ok(p) => p,
                Err(_) => continue,
            };
            // Pick: vol2 / 2 = interior + boundary/2 - 1
            assert_eq!(p.vol2, 2 * p.genus() + p.boundary_count() - 2);
            assert_eq!(
                p.boundary_count(),
                p.edges.iter().map(|e| e.length).sum::<i64>()
            );
            if p.genus() >= 1 {
                // Scott bound
                let total = p.genus() + p.boundary_count();
                assert!(total <= 3 * p.genus() + 7);
            }
            done += 1;
        }
    }

    #[test]
    fn dilation_membership_random() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(1002);
        let mut done = 0;
        while done < 100 {
            let n = rng.gen_range(3..7);
            let ptsv: Vec<LatticePoint> = (0..n)
                .map(|_| pt(rng.gen_range(-4..5), rng.gen_range(-4..5)))
                .collect();
            let p = match NewtonPolytope::from_support(&ptsv) {
                Ok(p) => p,
                Err(_) => continue,
            };
            if !p.origin_interior() {
                continue;
            }
            for m in 1..=5i64 {
                for q in p.dilated_lattice_points(m) {
                    assert!(p.level(q).le_int(m));
                }
                for _ in 0..20 {
                    let q = pt(rng.gen_range(-30..31), rng.gen_range(-30..31));
                    let inside = p.contains_dilated(q, m);
                    assert_eq!(p.level(q).le_int(m), inside);
                }
            }
            done += 1;
        }
    }

    #[test]
    fn normalize_random_property() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(1003);
        let mut done = 0;
        while done < 200 {
            let n = rng.gen_range(3..8);
            let ptsv: Vec<LatticePoint> = (0..n)
                .map(|_| pt(rng.gen_range(-5..6), rng.gen_range(-5..6)))
                .collect();
            let p = match NewtonPolytope::from_support(&ptsv) {
                Ok(p) => p,
                Err(_) => continue,
            };
            if p.genus() == 0 {
                assert!(matches!(p.normalize(), Err(Error::GenusZero)));
                continue;
            }
            let map = p.normalize().unwrap();
            assert_eq!(map.det().abs(), 1);
            let mapped: Vec<LatticePoint> = ptsv.iter().map(|&q| map.apply(q)).collect();
            let q = NewtonPolytope::from_support(&mapped).unwrap();
            assert!(q.is_normalized());
            assert_eq!(q.vol2, p.vol2);
            done += 1;
        }
    }
}
