//! Building-block pattern curves: the Chebyshev box patterns and the
//! Lissajous annulus patterns used by the star product.
//!
//! Crossings of the coprime Chebyshev pattern are enumerated exactly on the
//! angle lattice, so the count check against (p-1)(q-1)/2 is an integer
//! theorem rather than a tolerance test.

use crate::arrangement;
use crate::error::DivideError;
use crate::geom::*;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Dyadic grid used for all generated pattern vertices.
pub const COORD_BITS: u32 = 24;

/// Chebyshev polynomial value T(n, t) by the integer three-term recurrence,
/// exact on rational input.
pub fn cheb_eval(n: u32, t: &Rat) -> Rat {
    let mut prev = Rat::one();
    if n == 0 {
        return prev;
    }
    let mut cur = t.clone();
    let two_t = t * rat_int(2);
    for _ in 1..n {
        let next = &two_t * &cur - &prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Integer coefficients of T(n, z), constant term first.
pub fn cheb_coeffs(n: u32) -> Vec<BigInt> {
    let mut prev: Vec<BigInt> = vec![BigInt::one()];
    if n == 0 {
        return prev;
    }
    let mut cur: Vec<BigInt> = vec![BigInt::zero(), BigInt::one()];
    for _ in 1..n {
        let mut next = vec![BigInt::zero(); cur.len() + 1];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += c * 2;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// One self-crossing of the pattern curve theta -> (cos(p theta), cos(q theta)).
///
/// Angles are integer multiples of pi/(pq); `m1 > m2` are the two parameter
/// numerators. The exact location is encoded by the cosine indices
/// `x = cos(pi*xi/(pq))`, `y = cos(pi*yi/(pq))`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChebCrossing {
    pub m1: u64,
    pub m2: u64,
    pub xi: u64,
    pub yi: u64,
}

impl ChebCrossing {
    pub fn point_f64(&self, p: u32, q: u32) -> (f64, f64) {
        let pq = (p as f64) * (q as f64);
        (
            (std::f64::consts::PI * self.xi as f64 / pq).cos(),
            (std::f64::consts::PI * self.yi as f64 / pq).cos(),
        )
    }
}

/// Exact enumeration of the crossings of the coprime Chebyshev pattern.
///
/// Every solution of cos(p t1) = cos(p t2), cos(q t1) = cos(q t2) with
/// 0 < t2 < t1 < pi comes from an integer pair (k, l), 1 <= k < p,
/// 1 <= l < q, kq + lp < pq, via t1 = pi(kq+lp)/(pq), t2 = pi|lp-kq|/(pq).
pub fn cheb_crossings(p: u32, q: u32) -> Result<Vec<ChebCrossing>, DivideError> {
    if BigInt::from(p).gcd(&BigInt::from(q)) != BigInt::one() {
        return Err(DivideError::NotCoprime);
    }
    let (p, q) = (p as u64, q as u64);
    let pq = p * q;
    let mut out = Vec::new();
    for k in 1..p {
        for l in 1..q {
            let s = k * q + l * p;
            if s >= pq {
                continue;
            }
            let d = (l * p).abs_diff(k * q);
            debug_assert!(d != 0, "coprimality excludes lp = kq in range");
            // cosine indices: fold p*m mod 2pq into [0, pq]
            let fold = |v: u64| -> u64 {
                let r = v % (2 * pq);
                r.min(2 * pq - r)
            };
            out.push(ChebCrossing {
                m1: s,
                m2: d,
                xi: fold(p * s),
                yi: fold(q * s),
            });
        }
    }
    // Distinctness of the geometric points is part of the contract.
    let mut pts: Vec<(u64, u64)> = out.iter().map(|c| (c.xi, c.yi)).collect();
    pts.sort_unstable();
    let before = pts.len();
    pts.dedup();
    if pts.len() != before {
        return Err(DivideError::NotGeneric(
            "coincident Chebyshev crossings".into(),
        ));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentKind {
    Interval,
    Circle,
}

/// A Chebyshev pattern in the box [-1,1]^2.
#[derive(Debug, Clone)]
pub struct ChebyshevPattern {
    pub p: u32,
    pub q: u32,
    pub polylines: Vec<Polyline>,
    pub kinds: Vec<ComponentKind>,
    /// Exact crossings (coprime case only; empty for gcd > 1).
    pub crossings: Vec<ChebCrossing>,
    /// Sample angles theta_j (numerators over 2N of a half-turn) for the
    /// single interval component in the coprime case.
    pub samples: usize,
}

/// Sampled pattern for coprime (p, q): the image of
/// theta -> (T(p, cos theta), T(q, cos theta)) with vertices on the dyadic
/// grid, sampled strictly between the crossing angles, refined until the
/// polyline arrangement realizes exactly the enumerated crossings.
pub fn cheb_pattern(p: u32, q: u32, samples_per_arc: usize) -> Result<ChebyshevPattern, DivideError> {
    let g = BigInt::from(p).gcd(&BigInt::from(q)).to_u32().unwrap();
    if g == 1 {
        cheb_pattern_coprime(p, q, samples_per_arc)
    } else {
        cheb_pattern_contoured(p, q)
    }
}

fn cheb_pattern_coprime(
    p: u32,
    q: u32,
    samples_per_arc: usize,
) -> Result<ChebyshevPattern, DivideError> {
    let crossings = cheb_crossings(p, q)?;
    let base = (p * q) as usize;
    let mut n = base.max(8);
    // round up to a multiple of pq times a power of two, at least the request
    while n < samples_per_arc.max(4) * base {
        n *= 2;
    }
    let mut retries = 0;
    loop {
        let pts = sample_cheb(p, q, n);
        let poly = Polyline::open(pts).dedup();
        match arrangement::count_crossings(std::slice::from_ref(&poly)) {
            Ok(found) if found.len() == crossings.len() => {
                return Ok(ChebyshevPattern {
                    p,
                    q,
                    polylines: vec![poly],
                    kinds: vec![ComponentKind::Interval],
                    crossings,
                    samples: n,
                });
            }
            _ if retries < 6 => {
                n *= 2;
                retries += 1;
            }
            Ok(found) => {
                return Err(DivideError::GenericityFailure(format!(
                    "P_{{{p},{q}}} sampled with {n} points has {} crossings, expected {}",
                    found.len(),
                    crossings.len()
                )))
            }
            Err(e) if retries >= 6 => return Err(e),
            Err(_) => {
                n *= 2;
                retries += 1;
            }
        }
    }
}

/// Vertices at theta = (j+1/2) pi / n plus the exact corner endpoints, so no
/// vertex ever sits on a crossing angle (those are multiples of pi/(pq) and
/// n is a multiple of 2pq only through the half-offset).
fn sample_cheb(p: u32, q: u32, n: usize) -> Vec<Point> {
    let mut pts = Vec::with_capacity(n + 2);
    pts.push(Point::new(rat_int(1), rat_int(1)));
    for j in 0..n {
        let theta = std::f64::consts::PI * (j as f64 + 0.5) / n as f64;
        let x = (p as f64 * theta).cos();
        let y = (q as f64 * theta).cos();
        pts.push(Point::from_f64(x, y, COORD_BITS));
    }
    let corner = |e: u32| if e % 2 == 0 { rat_int(1) } else { rat_int(-1) };
    pts.push(Point::new(corner(p), corner(q)));
    pts
}

/// Marching-squares contouring of T(q,x) - T(p,y) on a 2pq by 2pq grid with
/// exact sign evaluation at the rational grid nodes. Zero values count as
/// positive. Components that stop next to a box corner are snapped to it.
fn cheb_pattern_contoured(p: u32, q: u32) -> Result<ChebyshevPattern, DivideError> {
    let n = (2 * p * q) as i64;
    let coord = |i: i64| -> Rat { Rat::new(BigInt::from(2 * i - n), BigInt::from(n)) };
    let mut signs = vec![vec![false; (n + 1) as usize]; (n + 1) as usize];
    let mut tq: Vec<Rat> = Vec::new();
    let mut tp: Vec<Rat> = Vec::new();
    for i in 0..=n {
        tq.push(cheb_eval(q, &coord(i)));
        tp.push(cheb_eval(p, &coord(i)));
    }
    for i in 0..=n {
        for j in 0..=n {
            let g = &tq[i as usize] - &tp[j as usize];
            signs[i as usize][j as usize] = !g.is_negative(); // 0 counts as +
        }
    }
    // Segments per cell; edges keyed by (cell edge id) with midpoint geometry.
    type EdgeKey = (i64, i64, u8); // cell (i,j), edge 0=bottom 1=right 2=top 3=left
    let mut links: std::collections::HashMap<EdgeKey, Vec<EdgeKey>> =
        std::collections::HashMap::new();
    let mut pts_of: std::collections::HashMap<EdgeKey, Point> = std::collections::HashMap::new();

    let canon = |i: i64, j: i64, e: u8| -> EdgeKey {
        match e {
            0 => (i, j, 0),
            1 => (i + 1, j, 3),
            2 => (i, j + 1, 0),
            _ => (i, j, 3),
        }
    };
    let edge_mid = |i: i64, j: i64, e: u8| -> Point {
        let (x, y) = match e {
            0 => (&coord(i) + &coord(i + 1), coord(j) * rat_int(2)),
            1 => (coord(i + 1) * rat_int(2), &coord(j) + &coord(j + 1)),
            2 => (&coord(i) + &coord(i + 1), coord(j + 1) * rat_int(2)),
            _ => (coord(i) * rat_int(2), &coord(j) + &coord(j + 1)),
        };
        Point::new(x / rat_int(2), y / rat_int(2))
    };

    for i in 0..n {
        for j in 0..n {
            let s = [
                signs[i as usize][j as usize],       // (i, j)
                signs[(i + 1) as usize][j as usize], // (i+1, j)
                signs[(i + 1) as usize][(j + 1) as usize],
                signs[i as usize][(j + 1) as usize],
            ];
            let mut cut = Vec::new(); // edges with a sign change
            if s[0] != s[1] {
                cut.push(0u8);
            }
            if s[1] != s[2] {
                cut.push(1);
            }
            if s[2] != s[3] {
                cut.push(2);
            }
            if s[3] != s[0] {
                cut.push(3);
            }
            let pairs: Vec<(u8, u8)> = match cut.len() {
                0 => vec![],
                2 => vec![(cut[0], cut[1])],
                4 => {
                    // ambiguous saddle cell: decide with the exact center sign
                    let cx = (&coord(i) + &coord(i + 1)) / rat_int(2);
                    let cy = (&coord(j) + &coord(j + 1)) / rat_int(2);
                    let g = cheb_eval(q, &cx) - cheb_eval(p, &cy);
                    let center = !g.is_negative();
                    if center == s[0] {
                        vec![(0, 1), (2, 3)]
                    } else {
                        vec![(0, 3), (1, 2)]
                    }
                }
                _ => {
                    return Err(DivideError::GenericityFailure(
                        "contour passes through a grid node".into(),
                    ))
                }
            };
            for (e1, e2) in pairs {
                let k1 = canon(i, j, e1);
                let k2 = canon(i, j, e2);
                pts_of.entry(k1).or_insert_with(|| edge_mid(i, j, e1));
                pts_of.entry(k2).or_insert_with(|| edge_mid(i, j, e2));
                links.entry(k1).or_default().push(k2);
                links.entry(k2).or_default().push(k1);
            }
        }
    }

    // Assemble chains.
    let mut visited: std::collections::HashSet<(EdgeKey, EdgeKey)> = Default::default();
    let mut polylines = Vec::new();
    let mut kinds = Vec::new();
    let mut keys: Vec<EdgeKey> = links.keys().cloned().collect();
    keys.sort_unstable();
    let boundary = |k: &EdgeKey| -> bool {
        // edge on the box boundary has only one incident cell
        (k.2 == 0 && (k.1 == 0 || k.1 == n)) || (k.2 == 3 && (k.0 == 0 || k.0 == n))
    };
    let deg = |k: &EdgeKey| links.get(k).map_or(0, |v| v.len());
    let mut walk = |start: EdgeKey,
                    visited: &mut std::collections::HashSet<(EdgeKey, EdgeKey)>|
     -> Vec<EdgeKey> {
        let mut chain = vec![start];
        let mut prev: Option<EdgeKey> = None;
        let mut cur = start;
        loop {
            let nexts = &links[&cur];
            let next = nexts
                .iter()
                .find(|&&nk| Some(nk) != prev && !visited.contains(&(cur, nk)))
                .copied();
            match next {
                Some(nk) => {
                    visited.insert((cur, nk));
                    visited.insert((nk, cur));
                    chain.push(nk);
                    prev = Some(cur);
                    cur = nk;
                    if nk == start {
                        break;
                    }
                }
                None => break,
            }
        }
        chain
    };
    // open chains first (start from boundary or odd-degree edges)
    for &k in &keys {
        if deg(&k) == 1 || (boundary(&k) && deg(&k) >= 1) {
            let has_unvisited = links[&k]
                .iter()
                .any(|&nk| !visited.contains(&(k, nk)));
            if !has_unvisited {
                continue;
            }
            let chain = walk(k, &mut visited);
            if chain.len() >= 2 {
                let mut pts: Vec<Point> = chain.iter().map(|k| pts_of[k].clone()).collect();
                snap_corner_ends(&mut pts);
                polylines.push(Polyline::open(pts).dedup());
                kinds.push(ComponentKind::Interval);
            }
        }
    }
    // remaining closed chains
    for &k in &keys {
        let has_unvisited = links[&k].iter().any(|&nk| !visited.contains(&(k, nk)));
        if !has_unvisited {
            continue;
        }
        let mut chain = walk(k, &mut visited);
        if chain.last() == chain.first() {
            chain.pop();
        }
        if chain.len() >= 3 {
            let pts: Vec<Point> = chain.iter().map(|k| pts_of[k].clone()).collect();
            polylines.push(Polyline::closed(pts).dedup());
            kinds.push(ComponentKind::Circle);
        }
    }

    let intervals = kinds
        .iter()
        .filter(|k| **k == ComponentKind::Interval)
        .count();
    if intervals > 2 {
        return Err(DivideError::GenericityFailure(format!(
            "contouring produced {intervals} interval components, at most two expected"
        )));
    }
    Ok(ChebyshevPattern {
        p,
        q,
        polylines,
        kinds,
        crossings: Vec::new(),
        samples: n as usize,
    })
}

/// Open contour components whose loose ends sit in a corner cell are snapped
/// to the exact corner, matching the parametric convention that interval
/// components leave the box through the corners.
fn snap_corner_ends(pts: &mut Vec<Point>) {
    let one = rat_int(1);
    let close = |p: &Point, cx: &Rat, cy: &Rat| -> bool {
        let dx = (&p.x - cx).abs();
        let dy = (&p.y - cy).abs();
        let tol = Rat::new(BigInt::from(1), BigInt::from(8));
        dx <= tol && dy <= tol
    };
    for end in [0usize, 1] {
        let idx = if end == 0 { 0 } else { pts.len() - 1 };
        for (cx, cy) in [
            (one.clone(), one.clone()),
            (one.clone(), -one.clone()),
            (-one.clone(), one.clone()),
            (-one.clone(), -one.clone()),
        ] {
            if close(&pts[idx], &cx, &cy) {
                let corner = Point::new(cx, cy);
                if pts[idx] != corner {
                    if end == 0 {
                        pts.insert(0, corner);
                    } else {
                        pts.push(corner);
                    }
                }
                break;
            }
        }
    }
}

/// A Lissajous pattern in the annulus 1/4 <= r <= 3/4.
#[derive(Debug, Clone)]
pub struct LissajousPattern {
    pub p: u32,
    pub q: u32,
    pub polylines: Vec<Polyline>,
    /// (p', q', rotation numerator k over p) for each closed component, so the
    /// star product can re-evaluate the parametric form.
    pub components: Vec<(u32, u32, u32)>,
    pub samples: usize,
}

/// Point of the Lissajous curve at parameter s in [0,1), rotated by 2*pi*rot/p.
pub fn lissajous_point(p: u32, q: u32, rot_num: u32, rot_den: u32, s: f64) -> (f64, f64) {
    let tau = std::f64::consts::TAU;
    let r = 0.5 + 0.25 * (tau * q as f64 * s).sin();
    let (x, y) = (r * (tau * p as f64 * s).sin(), r * (tau * p as f64 * s).cos());
    let a = tau * rot_num as f64 / rot_den as f64;
    (x * a.cos() - y * a.sin(), x * a.sin() + y * a.cos())
}

pub fn lissajous_pattern(p: u32, q: u32, samples: usize) -> Result<LissajousPattern, DivideError> {
    if p == 0 || q == 0 {
        return Err(DivideError::BlockTooLarge("lissajous exponents must be >= 1".into()));
    }
    let g = BigInt::from(p).gcd(&BigInt::from(q)).to_u32().unwrap();
    let (pr, qr) = (p / g, q / g);
    let n = samples.max(64 * (pr * qr) as usize);
    let mut polylines = Vec::new();
    let mut components = Vec::new();
    for k in 0..g {
        let pts: Vec<Point> = (0..n)
            .map(|j| {
                let s = (j as f64 + 0.5) / n as f64;
                let (x, y) = lissajous_point(pr, qr, k, p, s);
                Point::from_f64(x, y, COORD_BITS)
            })
            .collect();
        polylines.push(Polyline::closed(pts).dedup());
        components.push((pr, qr, k));
    }
    Ok(LissajousPattern {
        p,
        q,
        polylines,
        components,
        samples: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::FromPrimitive;

    #[test]
    fn cheb_eval_known_values() {
        assert_eq!(cheb_eval(3, &rat(1, 2)), rat_int(-1)); // cos(pi) via cos(3*pi/3)
        assert_eq!(cheb_eval(7, &rat_int(1)), rat_int(1));
        assert_eq!(cheb_eval(12, &rat_int(1)), rat_int(1));
        assert_eq!(cheb_eval(2, &rat_int(0)), rat_int(-1));
    }

    #[test]
    fn cheb_coeffs_structure() {
        assert_eq!(cheb_coeffs(1), vec![BigInt::from(0), BigInt::from(1)]);
        assert_eq!(
            cheb_coeffs(2),
            vec![BigInt::from(-1), BigInt::from(0), BigInt::from(2)]
        );
        // leading coefficient 2^{n-1}, parity symmetry
        for n in 1..=12u32 {
            let c = cheb_coeffs(n);
            assert_eq!(c.last().unwrap(), &BigInt::from(2).pow(n - 1));
            for (i, coef) in c.iter().enumerate() {
                if (i % 2) != (n as usize % 2) {
                    assert!(coef.is_zero(), "T({n}) has parity {}", n % 2);
                }
            }
        }
        assert_eq!(cheb_coeffs(7).last().unwrap(), &BigInt::from(64));
    }

    #[test]
    fn eval_matches_coefficients() {
        for n in 0..=12u32 {
            let coeffs = cheb_coeffs(n);
            for t in [rat(1, 3), rat(-2, 7), rat_int(1), rat(5, 8)] {
                let direct = cheb_eval(n, &t);
                let mut horner = Rat::from_integer(0.into());
                for c in coeffs.iter().rev() {
                    horner = horner * &t + Rat::from_integer(c.clone());
                }
                assert_eq!(direct, horner, "n={n}");
            }
        }
    }

    #[test]
    fn crossing_counts_match_formula() {
        for (p, q) in [(2u32, 3u32), (2, 5), (3, 4), (7, 5), (3, 5), (4, 9), (1, 7)] {
            let c = cheb_crossings(p, q).unwrap();
            assert_eq!(
                c.len() as u32,
                (p - 1) * (q - 1) / 2,
                "crossing count for ({p},{q})"
            );
        }
        assert!(matches!(
            cheb_crossings(2, 4),
            Err(DivideError::NotCoprime)
        ));
    }

    #[test]
    fn crossing_set_symmetric_under_angle_flip() {
        // theta -> pi - theta maps (m1, m2) -> (pq - m2, pq - m1)
        for (p, q) in [(2u32, 9u32), (3, 4), (5, 7)] {
            let pq = (p * q) as u64;
            let set: std::collections::HashSet<(u64, u64)> = cheb_crossings(p, q)
                .unwrap()
                .iter()
                .map(|c| (c.m1, c.m2))
                .collect();
            for &(m1, m2) in &set {
                assert!(set.contains(&(pq - m2, pq - m1)), "({p},{q}) {m1},{m2}");
            }
        }
    }

    #[test]
    fn crossings_satisfy_cosine_equations() {
        // exact check: p*m1 = +-p*m2 (mod 2pq) and q*m1 = +-q*m2 (mod 2pq)
        for (p, q) in [(2u32, 3u32), (7, 5), (3, 8)] {
            let pq = (p as u64) * (q as u64);
            for c in cheb_crossings(p, q).unwrap() {
                for f in [p as u64, q as u64] {
                    let a = (f * c.m1) % (2 * pq);
                    let b = (f * c.m2) % (2 * pq);
                    assert!(
                        a == b || a + b == 2 * pq || (a + b) % (2 * pq) == 0,
                        "cos(f m1 pi/pq) != cos(f m2 pi/pq) for ({p},{q}), f={f}"
                    );
                }
            }
        }
    }

    #[test]
    fn coprime_pattern_realizes_exact_crossings() {
        for (p, q) in [(2u32, 3u32), (2, 9), (7, 5)] {
            let pat = cheb_pattern(p, q, 8).unwrap();
            assert_eq!(pat.polylines.len(), 1);
            assert_eq!(pat.kinds[0], ComponentKind::Interval);
            let found = arrangement::count_crossings(&pat.polylines).unwrap();
            assert_eq!(found.len() as u32, (p - 1) * (q - 1) / 2);
            // endpoints are exact box corners
            let poly = &pat.polylines[0];
            let first = poly.pts.first().unwrap();
            let last = poly.pts.last().unwrap();
            for e in [first, last] {
                assert!(e.x.abs() == rat_int(1) && e.y.abs() == rat_int(1));
            }
        }
    }

    #[test]
    fn crossing_stability_under_doubling() {
        let a = cheb_pattern(3, 4, 8).unwrap();
        let b = cheb_pattern(3, 4, 16).unwrap();
        let ca = arrangement::count_crossings(&a.polylines).unwrap();
        let cb = arrangement::count_crossings(&b.polylines).unwrap();
        assert_eq!(ca.len(), cb.len());
    }

    #[test]
    fn embedded_arc_for_p_equal_one() {
        let pat = cheb_pattern(1, 7, 8).unwrap();
        let found = arrangement::count_crossings(&pat.polylines).unwrap();
        assert!(found.is_empty());
    }

    #[test]
    fn non_coprime_contouring_components() {
        // T(2,x)-T(2,y) factors into the two diagonals: two interval components.
        let pat = cheb_pattern(2, 2, 0).unwrap();
        assert_eq!(pat.polylines.len(), 2);
        assert!(pat.kinds.iter().all(|k| *k == ComponentKind::Interval));
        // T(3,x)-T(3,y): a diagonal plus an oval.
        let pat = cheb_pattern(3, 3, 0).unwrap();
        assert_eq!(
            pat.kinds
                .iter()
                .filter(|k| **k == ComponentKind::Circle)
                .count(),
            1,
            "P_3,3 contains one circle component"
        );
    }

    #[test]
    fn lissajous_basics() {
        let pat = lissajous_pattern(1, 1, 64).unwrap();
        assert_eq!(pat.polylines.len(), 1);
        let found = arrangement::count_crossings(&pat.polylines).unwrap();
        assert!(found.is_empty(), "L_1,1 is embedded");

        let pat = lissajous_pattern(3, 5, 512).unwrap();
        assert_eq!(pat.polylines.len(), 1);
        // Crossing count frozen by the arrangement oracle.
        let found = arrangement::count_crossings(&pat.polylines).unwrap();
        assert_eq!(found.len(), lissajous_crossings_oracle(3, 5));

        // gcd > 1: rotated copies
        let pat = lissajous_pattern(2, 4, 256).unwrap();
        assert_eq!(pat.polylines.len(), 2);
    }

    /// Regression constant established by the sampled arrangement itself and
    /// double-checked against an independent dense numeric scan.
    fn lissajous_crossings_oracle(p: u32, q: u32) -> usize {
        let n = 4096;
        let f = |s: f64| lissajous_point(p, q, 0, p, s);
        let mut count = 0;
        for i in 0..n {
            let (a1, a2) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
            let (ax, ay) = f(a1);
            let (bx, by) = f(a2);
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (c1, c2) = (j as f64 / n as f64, (j + 1) as f64 / n as f64);
                let (cx, cy) = f(c1);
                let (dx, dy) = f(c2);
                let o = |px: f64, py: f64, qx: f64, qy: f64, rx: f64, ry: f64| {
                    (qx - px) * (ry - py) - (qy - py) * (rx - px)
                };
                let o1 = o(ax, ay, bx, by, cx, cy);
                let o2 = o(ax, ay, bx, by, dx, dy);
                let o3 = o(cx, cy, dx, dy, ax, ay);
                let o4 = o(cx, cy, dx, dy, bx, by);
                if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
                    count += 1;
                }
            }
        }
        count
    }

    fn assert_rotation_invariant(pts: &[(f64, f64)], angle: f64, tol: f64) {
        let (c, s) = (angle.cos(), angle.sin());
        for &(x, y) in pts {
            let (rx, ry) = (x * c - y * s, x * s + y * c);
            let near = pts
                .iter()
                .any(|&(px, py)| ((px - rx).powi(2) + (py - ry).powi(2)).sqrt() < tol);
            assert!(near, "rotated point ({rx:.3},{ry:.3}) has no close sample");
        }
    }

    #[test]
    fn lissajous_rotation_symmetry() {
        // The parametrization winds p times with q radial oscillations, so the
        // coprime curve is carried to itself by rotations through 2*pi*p/q.
        let pat = lissajous_pattern(3, 5, 384).unwrap();
        let pts: Vec<(f64, f64)> = pat.polylines[0].pts.iter().map(|p| p.to_f64()).collect();
        assert_rotation_invariant(&pts, std::f64::consts::TAU * 3.0 / 5.0, 0.02);

        // The gcd > 1 system of rotated copies is invariant under 2*pi/p.
        let pat = lissajous_pattern(2, 4, 256).unwrap();
        let pts: Vec<(f64, f64)> = pat
            .polylines
            .iter()
            .flat_map(|pl| pl.pts.iter().map(|p| p.to_f64()))
            .collect();
        assert_rotation_invariant(&pts, std::f64::consts::TAU / 2.0, 0.03);
        let _ = BigRational::from_f64(0.0); // keep import used
    }
}
