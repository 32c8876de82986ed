//! Exact rational plane geometry: points, polylines and the predicates the
//! arrangement code is built on.
//!
//! All comparisons are exact. Floating point appears only when *constructing*
//! coordinates (which are then rounded to dyadic rationals) and when exporting
//! for display; it never feeds a predicate.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;

/// Rational from an integer pair, `d != 0`.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Round a float to the dyadic grid with denominator `2^bits`.
pub fn round_dyadic(v: f64, bits: u32) -> Rat {
    let scale = (1u64 << bits) as f64;
    let n = (v * scale).round();
    let n = BigInt::from_f64(n).expect("finite coordinate");
    Rat::new(n, BigInt::from(1u64 << bits))
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    let n = r.numer().to_f64().unwrap_or(f64::NAN);
    let d = r.denom().to_f64().unwrap_or(f64::NAN);
    n / d
}

/// Parse `num/den` or a plain integer.
pub fn parse_rat(s: &str) -> Option<Rat> {
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        Some(Rat::new(n, d))
    } else {
        let n: BigInt = s.trim().parse().ok()?;
        Some(Rat::from_integer(n))
    }
}

/// Format in lowest terms, integers without a denominator.
pub fn fmt_rat(r: &Rat) -> String {
    if r.denom() == &BigInt::from(1) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Point {
    pub x: Rat,
    pub y: Rat,
}

impl Point {
    pub fn new(x: Rat, y: Rat) -> Self {
        Point { x, y }
    }

    pub fn from_f64(x: f64, y: f64, bits: u32) -> Self {
        Point::new(round_dyadic(x, bits), round_dyadic(y, bits))
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (rat_to_f64(&self.x), rat_to_f64(&self.y))
    }
}

/// An open or closed chain of segments. Closed chains do not repeat the
/// first point at the end.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polyline {
    pub pts: Vec<Point>,
    pub closed: bool,
}

impl Polyline {
    pub fn open(pts: Vec<Point>) -> Self {
        Polyline { pts, closed: false }
    }

    pub fn closed(pts: Vec<Point>) -> Self {
        Polyline { pts, closed: true }
    }

    pub fn segment_count(&self) -> usize {
        if self.closed {
            self.pts.len()
        } else {
            self.pts.len().saturating_sub(1)
        }
    }

    /// Segment endpoints by index; closed chains wrap around.
    pub fn segment(&self, i: usize) -> (&Point, &Point) {
        let a = &self.pts[i];
        let b = &self.pts[(i + 1) % self.pts.len()];
        (a, b)
    }

    /// Drops exactly repeated consecutive points.
    pub fn dedup(mut self) -> Self {
        self.pts.dedup();
        if self.closed && self.pts.len() > 1 && self.pts.first() == self.pts.last() {
            self.pts.pop();
        }
        self
    }
}

/// Sign of the cross product (b-a) x (c-a): >0 left turn, <0 right, 0 collinear.
pub fn orient(a: &Point, b: &Point, c: &Point) -> i32 {
    let v = (&b.x - &a.x) * (&c.y - &a.y) - (&b.y - &a.y) * (&c.x - &a.x);
    sign_rat(&v)
}

pub fn sign_rat(v: &Rat) -> i32 {
    if v.is_zero() {
        0
    } else if v.is_positive() {
        1
    } else {
        -1
    }
}

/// Strictly inside the closed segment [a,b], assuming collinearity.
fn between(a: &Point, b: &Point, p: &Point) -> bool {
    let (lo_x, hi_x) = if a.x <= b.x { (&a.x, &b.x) } else { (&b.x, &a.x) };
    let (lo_y, hi_y) = if a.y <= b.y { (&a.y, &b.y) } else { (&b.y, &a.y) };
    lo_x <= &p.x && &p.x <= hi_x && lo_y <= &p.y && &p.y <= hi_y
}

/// Outcome of an exact segment/segment test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SegContact {
    None,
    /// Transversal crossing in the open interior of both segments.
    /// `t1`, `t2` are exact parameters in (0,1) along each segment.
    Proper { point: Point, t1: Rat, t2: Rat },
    /// An endpoint of one segment lies on the other (possibly at its endpoint).
    Touch { point: Point },
    /// Collinear with overlap of positive length.
    Overlap,
}

/// Exact contact classification for segments (a,b) and (c,d).
pub fn seg_contact(a: &Point, b: &Point, c: &Point, d: &Point) -> SegContact {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);

    if o1 == 0 && o2 == 0 {
        // Collinear supporting lines.
        let touches = [(a, b, c), (a, b, d), (c, d, a), (c, d, b)];
        let mut hits = 0;
        for (p, q, r) in touches {
            if between(p, q, r) {
                hits += 1;
            }
        }
        if hits == 0 {
            return SegContact::None;
        }
        // Endpoint-to-endpoint contact only is a touch; anything longer overlaps.
        let share_end = (a == c || a == d || b == c || b == d) as usize;
        if share_end > 0 && hits <= 2 {
            // e.g. consecutive collinear segments meeting at the shared point
            let p = if a == c || a == d { a } else { b };
            // Overlap of positive length shows as an interior containment.
            let interior = (between(a, b, c) && c != a && c != b)
                || (between(a, b, d) && d != a && d != b)
                || (between(c, d, a) && a != c && a != d)
                || (between(c, d, b) && b != c && b != d);
            if interior {
                return SegContact::Overlap;
            }
            return SegContact::Touch { point: p.clone() };
        }
        return SegContact::Overlap;
    }

    if o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0 {
        if o1 != o2 && o3 != o4 {
            // Proper crossing; solve for the point.
            let dx1 = &b.x - &a.x;
            let dy1 = &b.y - &a.y;
            let dx2 = &d.x - &c.x;
            let dy2 = &d.y - &c.y;
            let denom = &dx1 * &dy2 - &dy1 * &dx2;
            debug_assert!(!denom.is_zero());
            let t1 = ((&c.x - &a.x) * &dy2 - (&c.y - &a.y) * &dx2) / &denom;
            let t2 = ((&c.x - &a.x) * &dy1 - (&c.y - &a.y) * &dx1) / &denom;
            let point = Point::new(&a.x + &dx1 * &t1, &a.y + &dy1 * &t1);
            return SegContact::Proper { point, t1, t2 };
        }
        return SegContact::None;
    }

    // Some orientation vanished: an endpoint lies on the other line.
    if o1 == 0 && between(a, b, c) {
        return SegContact::Touch { point: c.clone() };
    }
    if o2 == 0 && between(a, b, d) {
        return SegContact::Touch { point: d.clone() };
    }
    if o3 == 0 && between(c, d, a) {
        return SegContact::Touch { point: a.clone() };
    }
    if o4 == 0 && between(c, d, b) {
        return SegContact::Touch { point: b.clone() };
    }
    SegContact::None
}

/// CCW comparison of direction vectors starting from angle 0 (positive x axis).
/// Returns Less when `d1` has the smaller angle.
pub fn cmp_dir(d1: &(Rat, Rat), d2: &(Rat, Rat)) -> std::cmp::Ordering {
    let h1 = dir_half(d1);
    let h2 = dir_half(d2);
    if h1 != h2 {
        return h1.cmp(&h2);
    }
    let cross = &d1.0 * &d2.1 - &d1.1 * &d2.0;
    // cross > 0: d2 is CCW of d1, so d1 comes first.
    sign_rat(&cross).cmp(&0).reverse()
}

fn dir_half(d: &(Rat, Rat)) -> u8 {
    let sy = sign_rat(&d.1);
    let sx = sign_rat(&d.0);
    assert!(sx != 0 || sy != 0, "zero direction vector");
    if sy > 0 || (sy == 0 && sx > 0) {
        0
    } else {
        1
    }
}

/// Squared euclidean distance between two points.
pub fn dist2(a: &Point, b: &Point) -> Rat {
    let dx = &a.x - &b.x;
    let dy = &a.y - &b.y;
    &dx * &dx + &dy * &dy
}

/// Exact squared distance from `p` to segment [a,b].
pub fn point_seg_dist2(p: &Point, a: &Point, b: &Point) -> Rat {
    let dx = &b.x - &a.x;
    let dy = &b.y - &a.y;
    let len2 = &dx * &dx + &dy * &dy;
    if len2.is_zero() {
        return dist2(p, a);
    }
    let t = ((&p.x - &a.x) * &dx + (&p.y - &a.y) * &dy) / &len2;
    if t <= Rat::zero() {
        dist2(p, a)
    } else if t >= Rat::from_integer(1.into()) {
        dist2(p, b)
    } else {
        let proj = Point::new(&a.x + &dx * &t, &a.y + &dy * &t);
        dist2(p, &proj)
    }
}

/// f64 bounding box for candidate filtering (never used in predicates).
#[derive(Clone, Copy, Debug)]
pub struct BBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BBox {
    pub fn of_segment(a: &Point, b: &Point) -> Self {
        let (ax, ay) = a.to_f64();
        let (bx, by) = b.to_f64();
        const PAD: f64 = 1e-9;
        BBox {
            min_x: ax.min(bx) - PAD,
            min_y: ay.min(by) - PAD,
            max_x: ax.max(bx) + PAD,
            max_y: ay.max(by) + PAD,
        }
    }

    pub fn overlaps(&self, other: &BBox) -> bool {
        self.min_x <= other.max_x
            && other.min_x <= self.max_x
            && self.min_y <= other.max_y
            && other.min_y <= self.max_y
    }
}

/// Uniform grid over segment bounding boxes; yields candidate pairs whose
/// boxes share a cell. Pairs are deduplicated.
pub struct SegGrid {
    cell: f64,
    min_x: f64,
    min_y: f64,
    cols: usize,
    rows: usize,
    cells: Vec<Vec<u32>>,
    boxes: Vec<BBox>,
}

impl SegGrid {
    pub fn build(boxes: Vec<BBox>) -> Self {
        let mut min_x = f64::INFINITY;
        let mut min_y = f64::INFINITY;
        let mut max_x = f64::NEG_INFINITY;
        let mut max_y = f64::NEG_INFINITY;
        let mut sum_dim = 0.0;
        for b in &boxes {
            min_x = min_x.min(b.min_x);
            min_y = min_y.min(b.min_y);
            max_x = max_x.max(b.max_x);
            max_y = max_y.max(b.max_y);
            sum_dim += (b.max_x - b.min_x).max(b.max_y - b.min_y);
        }
        if boxes.is_empty() {
            return SegGrid {
                cell: 1.0,
                min_x: 0.0,
                min_y: 0.0,
                cols: 1,
                rows: 1,
                cells: vec![Vec::new()],
                boxes,
            };
        }
        let avg = (sum_dim / boxes.len() as f64).max(1e-6);
        let cell = avg * 2.0;
        let cols = (((max_x - min_x) / cell).ceil() as usize + 1).max(1);
        let rows = (((max_y - min_y) / cell).ceil() as usize + 1).max(1);
        // Cap the grid so pathological inputs cannot blow memory.
        let (cols, rows, cell) = if cols * rows > 4_000_000 {
            let n = (boxes.len() as f64).sqrt().ceil() as usize + 1;
            let c = ((max_x - min_x).max(max_y - min_y) / n as f64).max(1e-6);
            (
                (((max_x - min_x) / c).ceil() as usize + 1).max(1),
                (((max_y - min_y) / c).ceil() as usize + 1).max(1),
                c,
            )
        } else {
            (cols, rows, cell)
        };
        let mut cells = vec![Vec::new(); cols * rows];
        for (i, b) in boxes.iter().enumerate() {
            let c0 = (((b.min_x - min_x) / cell) as usize).min(cols - 1);
            let c1 = (((b.max_x - min_x) / cell) as usize).min(cols - 1);
            let r0 = (((b.min_y - min_y) / cell) as usize).min(rows - 1);
            let r1 = (((b.max_y - min_y) / cell) as usize).min(rows - 1);
            for r in r0..=r1 {
                for c in c0..=c1 {
                    cells[r * cols + c].push(i as u32);
                }
            }
        }
        SegGrid {
            cell,
            min_x,
            min_y,
            cols,
            rows,
            cells,
            boxes,
        }
    }

    /// Visit each candidate pair (i < j) exactly once.
    pub fn for_candidate_pairs(&self, mut f: impl FnMut(u32, u32)) {
        let mut seen = std::collections::HashSet::new();
        for cell in &self.cells {
            for (k, &i) in cell.iter().enumerate() {
                for &j in &cell[k + 1..] {
                    let (a, b) = if i < j { (i, j) } else { (j, i) };
                    if self.boxes[a as usize].overlaps(&self.boxes[b as usize])
                        && seen.insert((a, b))
                    {
                        f(a, b);
                    }
                }
            }
        }
    }

    /// Segments whose boxes may intersect `b`.
    pub fn query(&self, b: &BBox) -> Vec<u32> {
        let c0 = ((((b.min_x - self.min_x) / self.cell).floor()).max(0.0) as usize).min(self.cols - 1);
        let c1 = ((((b.max_x - self.min_x) / self.cell).ceil()).max(0.0) as usize).min(self.cols - 1);
        let r0 = ((((b.min_y - self.min_y) / self.cell).floor()).max(0.0) as usize).min(self.rows - 1);
        let r1 = ((((b.max_y - self.min_y) / self.cell).ceil()).max(0.0) as usize).min(self.rows - 1);
        let mut out = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for r in r0..=r1 {
            for c in c0..=c1 {
                for &i in &self.cells[r * self.cols + c] {
                    if seen.insert(i) && self.boxes[i as usize].overlaps(b) {
                        out.push(i);
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: i64, y: i64) -> Point {
        Point::new(rat_int(x), rat_int(y))
    }

    #[test]
    fn proper_crossing_of_diagonals() {
        let c = seg_contact(&p(-1, -1), &p(1, 1), &p(-1, 1), &p(1, -1));
        match c {
            SegContact::Proper { point, t1, t2 } => {
                assert_eq!(point, p(0, 0));
                assert_eq!(t1, rat(1, 2));
                assert_eq!(t2, rat(1, 2));
            }
            other => panic!("expected proper crossing, got {other:?}"),
        }
    }

    #[test]
    fn endpoint_touch_detected() {
        let c = seg_contact(&p(0, 0), &p(2, 0), &p(1, 0), &p(1, 3));
        assert_eq!(
            c,
            SegContact::Touch {
                point: p(1, 0)
            }
        );
    }

    #[test]
    fn collinear_overlap_detected() {
        let c = seg_contact(&p(0, 0), &p(4, 0), &p(2, 0), &p(6, 0));
        assert_eq!(c, SegContact::Overlap);
        let c = seg_contact(&p(0, 0), &p(1, 0), &p(2, 0), &p(3, 0));
        assert_eq!(c, SegContact::None);
    }

    #[test]
    fn direction_ordering_is_ccw() {
        let dirs = [
            (rat_int(1), rat_int(0)),
            (rat_int(1), rat_int(1)),
            (rat_int(0), rat_int(1)),
            (rat_int(-1), rat_int(0)),
            (rat_int(0), rat_int(-1)),
            (rat_int(1), rat_int(-1)),
        ];
        let mut sorted = dirs.to_vec();
        sorted.sort_by(cmp_dir);
        let angles: Vec<f64> = sorted
            .iter()
            .map(|d| rat_to_f64(&d.1).atan2(rat_to_f64(&d.0)).rem_euclid(std::f64::consts::TAU))
            .collect();
        for w in angles.windows(2) {
            assert!(w[0] < w[1], "angles not increasing: {angles:?}");
        }
    }

    #[test]
    fn rational_parsing_round_trips() {
        for s in ["3", "-7", "1/3", "-22/7", "0"] {
            let r = parse_rat(s).unwrap();
            assert_eq!(parse_rat(&fmt_rat(&r)).unwrap(), r);
        }
        assert!(parse_rat("1/0").is_none());
        assert_eq!(fmt_rat(&parse_rat("2/4").unwrap()), "1/2");
    }

    #[test]
    fn dyadic_rounding_hits_grid() {
        let r = round_dyadic(0.3, 4);
        assert_eq!(r, rat(5, 16));
    }
}
