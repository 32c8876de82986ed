//! Star products: placing a Chebyshev block in the disk, cabling a pattern
//! around a branch through the normal-offset band, and full synthesis of the
//! iterated divide of an irreducible singularity.
//!
//! All construction runs in floating point, gets rounded to the dyadic grid,
//! and is then *validated exactly*: crossing counts, provenance completeness,
//! sign consistency and the core linking number are integer checks. A failed
//! check shrinks the band and refines the sampling, never loosens a bound.

use crate::arrangement;
use crate::blocks::{cheb_eval, ChebyshevPattern, ComponentKind, LissajousPattern, COORD_BITS};
use crate::divide::{CrossingTag, Divide, PplusTag};
use crate::error::DivideError;
use crate::geom::*;
use crate::puiseux::{self, PuiseuxSeq};
use num_traits::{Signed, ToPrimitive};
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct StarParams {
    /// Band half-width; picked from the base geometry when absent.
    pub eta: Option<Rat>,
    /// Refinement attempts before giving up.
    pub retries: u32,
    /// Minimum sample count override for the pattern sweep.
    pub samples: Option<usize>,
}

impl Default for StarParams {
    fn default() -> Self {
        StarParams {
            eta: None,
            retries: 6,
            samples: None,
        }
    }
}

const MAX_BLOCK_EXPONENT: u32 = 64;
const MAX_SAMPLES: usize = 1 << 19;

/// Map the pattern box [-1,1]^2 into the unit disk: rotate 45 degrees and
/// scale so the corners land on the boundary circle.
fn box_to_disk(p: &Point) -> Point {
    Point::new(
        (&p.x + &p.y) / rat_int(2),
        (&p.y - &p.x) / rat_int(2),
    )
}

fn disk_to_box(p: &Point) -> Point {
    Point::new(&p.x - &p.y, &p.x + &p.y)
}

/// Place a Chebyshev block as a signed divide in the disk. Region signs come
/// from the exact sign of T(q,x) - T(p,y) at region samples inside the box.
pub fn place_block(pattern: &ChebyshevPattern) -> Result<Divide, DivideError> {
    let branches: Vec<Polyline> = pattern
        .polylines
        .iter()
        .map(|pl| Polyline {
            pts: pl.pts.iter().map(box_to_disk).collect(),
            closed: pl.closed,
        })
        .collect();
    let mut divide = Divide::build(branches)?;
    let mut anchors = Vec::new();
    let one = rat_int(1);
    for region in divide.regions() {
        let Some(sample) = &region.sample else {
            continue;
        };
        let b = disk_to_box(sample);
        if b.x.abs() >= one || b.y.abs() >= one {
            continue; // outside the box the sign of g says nothing
        }
        let g = cheb_eval(pattern.q, &b.x) - cheb_eval(pattern.p, &b.y);
        let s = sign_rat(&g);
        if s != 0 {
            anchors.push((sample.clone(), s as i8));
        }
    }
    if anchors.is_empty() {
        return Err(DivideError::GenericityFailure(
            "no region sample lands inside the pattern box".into(),
        ));
    }
    divide.assign_signs(&anchors)?;
    Ok(divide)
}

/// Floating-point centerline with arclength parametrization and smoothed
/// normals; carries the exact dyadic core polyline derived from it.
struct Centerline {
    pts: Vec<(f64, f64)>,
    cum: Vec<f64>,
    normals: Vec<(f64, f64)>,
    total: f64,
    closed: bool,
    core: Polyline,
}

impl Centerline {
    fn eval(&self, mut s: f64) -> ((f64, f64), (f64, f64)) {
        if self.closed {
            s = s.rem_euclid(self.total);
        } else {
            s = s.clamp(0.0, self.total);
        }
        let i = match self
            .cum
            .binary_search_by(|c| c.partial_cmp(&s).unwrap())
        {
            Ok(i) => i.min(self.cum.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.cum.len() - 2),
        };
        let l0 = self.cum[i];
        let l1 = self.cum[i + 1];
        let t = if l1 > l0 { (s - l0) / (l1 - l0) } else { 0.0 };
        let a = self.pts[i];
        let b = self.pts[i + 1];
        let pos = (a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t);
        let na = self.normals[i];
        let nb = self.normals[i + 1];
        let n = (na.0 + (nb.0 - na.0) * t, na.1 + (nb.1 - na.1) * t);
        let len = (n.0 * n.0 + n.1 * n.1).sqrt().max(1e-12);
        (pos, (n.0 / len, n.1 / len))
    }
}

fn to_f64_pts(poly: &Polyline) -> Vec<(f64, f64)> {
    poly.pts.iter().map(|p| p.to_f64()).collect()
}

/// Uniform-arclength resampling, keeping endpoints (open) or closing up.
fn resample(pts: &[(f64, f64)], closed: bool, spacing: f64) -> Vec<(f64, f64)> {
    let mut path = pts.to_vec();
    if closed {
        path.push(pts[0]);
    }
    let mut cum = vec![0.0];
    for w in path.windows(2) {
        let d = ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt();
        cum.push(cum.last().unwrap() + d);
    }
    let total = *cum.last().unwrap();
    let n = ((total / spacing).ceil() as usize).max(8);
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..=n {
        if closed && k == n {
            break;
        }
        let s = total * k as f64 / n as f64;
        let i = match cum.binary_search_by(|c| c.partial_cmp(&s).unwrap()) {
            Ok(i) => i.min(path.len() - 2),
            Err(i) => i.saturating_sub(1).min(path.len() - 2),
        };
        let seg = cum[i + 1] - cum[i];
        let t = if seg > 0.0 { (s - cum[i]) / seg } else { 0.0 };
        out.push((
            path[i].0 + (path[i + 1].0 - path[i].0) * t,
            path[i].1 + (path[i + 1].1 - path[i].1) * t,
        ));
    }
    out
}

fn max_turn_angle(pts: &[(f64, f64)], closed: bool) -> f64 {
    let n = pts.len();
    let mut max = 0.0f64;
    let dirs: Vec<(f64, f64)> = pts
        .windows(2)
        .map(|w| (w[1].0 - w[0].0, w[1].1 - w[0].1))
        .collect();
    let m = dirs.len();
    let upto = if closed { m } else { m - 1 };
    for i in 0..upto {
        let a = dirs[i];
        let b = dirs[(i + 1) % m];
        let dot = a.0 * b.0 + a.1 * b.1;
        let cross = a.0 * b.1 - a.1 * b.0;
        max = max.max(cross.atan2(dot).abs());
    }
    let _ = n;
    max
}

/// One pass of Chaikin corner cutting; endpoints stay fixed for open chains.
fn chaikin(pts: &[(f64, f64)], closed: bool) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(pts.len() * 2);
    let n = pts.len();
    let segs = if closed { n } else { n - 1 };
    if !closed {
        out.push(pts[0]);
    }
    for i in 0..segs {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        out.push((a.0 + 0.25 * (b.0 - a.0), a.1 + 0.25 * (b.1 - a.1)));
        out.push((a.0 + 0.75 * (b.0 - a.0), a.1 + 0.75 * (b.1 - a.1)));
    }
    if !closed {
        out.push(pts[n - 1]);
    }
    out
}

/// Extend an open centerline beyond its endpoints: the direction blends to
/// radial, then runs straight out to just beyond the unit circle, so the
/// cable's turnarounds live in otherwise empty territory.
fn extend_radially(pts: &mut Vec<(f64, f64)>, step: f64) {
    for end in 0..2 {
        let (e, prev) = if end == 0 {
            (pts[0], pts[1])
        } else {
            (pts[pts.len() - 1], pts[pts.len() - 2])
        };
        let mut dir = norm2(e.0 - prev.0, e.1 - prev.1);
        let mut cur = e;
        let mut ext = Vec::new();
        let max_turn = 0.20; // ~11.5 degrees per step
        for _ in 0..400 {
            let r = (cur.0 * cur.0 + cur.1 * cur.1).sqrt();
            let radial = norm2(cur.0, cur.1);
            let dot = dir.0 * radial.0 + dir.1 * radial.1;
            let cross = dir.0 * radial.1 - dir.1 * radial.0;
            let ang = cross.atan2(dot);
            if r >= 1.06 && ang.abs() < 0.05 {
                break;
            }
            let turn = ang.clamp(-max_turn, max_turn);
            dir = rotate(dir, turn);
            cur = (cur.0 + dir.0 * step, cur.1 + dir.1 * step);
            ext.push(cur);
        }
        if end == 0 {
            ext.reverse();
            ext.extend_from_slice(pts);
            *pts = ext;
        } else {
            pts.extend_from_slice(&ext);
        }
    }
}

fn norm2(x: f64, y: f64) -> (f64, f64) {
    let l = (x * x + y * y).sqrt().max(1e-12);
    (x / l, y / l)
}

fn rotate(v: (f64, f64), a: f64) -> (f64, f64) {
    let (c, s) = (a.cos(), a.sin());
    (v.0 * c - v.1 * s, v.0 * s + v.1 * c)
}

fn build_centerline(
    branch: &Polyline,
    spacing: f64,
) -> Result<Centerline, DivideError> {
    let closed = branch.closed;
    let mut pts = resample(&to_f64_pts(branch), closed, spacing);
    if !closed {
        extend_radially(&mut pts, spacing.max(0.01));
    }
    let mut passes = 0;
    while max_turn_angle(&pts, closed) > 0.26 && passes < 5 {
        pts = chaikin(&pts, closed);
        passes += 1;
    }
    if max_turn_angle(&pts, closed) > 0.30 {
        return Err(DivideError::GenericityFailure(
            "centerline turning angle cannot be bounded".into(),
        ));
    }
    // arclength + vertex normals (average of adjacent segment normals)
    let n = pts.len();
    let mut cum = vec![0.0];
    let segs = if closed { n } else { n - 1 };
    for i in 0..segs {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        let d = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
        cum.push(cum.last().unwrap() + d);
    }
    let total = *cum.last().unwrap();
    let seg_normal = |i: usize| -> (f64, f64) {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        norm2(-(b.1 - a.1), b.0 - a.0)
    };
    let mut normals = Vec::with_capacity(n + 1);
    for i in 0..n {
        let nrm = if closed {
            let prev = seg_normal((i + n - 1) % n);
            let cur = seg_normal(i % n);
            norm2(prev.0 + cur.0, prev.1 + cur.1)
        } else if i == 0 {
            seg_normal(0)
        } else if i == n - 1 {
            seg_normal(n - 2)
        } else {
            let prev = seg_normal(i - 1);
            let cur = seg_normal(i);
            norm2(prev.0 + cur.0, prev.1 + cur.1)
        };
        normals.push(nrm);
    }
    let mut cpts = pts.clone();
    if closed {
        cum.truncate(n + 1);
        cpts.push(pts[0]);
        normals.push(normals[0]);
    }
    let core_pts: Vec<Point> = pts
        .iter()
        .map(|&(x, y)| Point::from_f64(x, y, COORD_BITS))
        .collect();
    let core = if closed {
        Polyline::closed(core_pts).dedup()
    } else {
        Polyline::open(core_pts).dedup()
    };
    Ok(Centerline {
        pts: cpts,
        cum,
        normals,
        total,
        closed,
        core,
    })
}

/// Feature size of the centerline: the smallest distance between parts of
/// the curve that are far apart in arclength.
fn feature_gap(c: &Centerline) -> f64 {
    let n = c.pts.len() - if c.closed { 1 } else { 0 };
    let mut min_gap = f64::INFINITY;
    let boxes: Vec<BBox> = (0..n.saturating_sub(1))
        .map(|i| {
            let a = Point::from_f64(c.pts[i].0, c.pts[i].1, 20);
            let b = Point::from_f64(c.pts[i + 1].0, c.pts[i + 1].1, 20);
            BBox::of_segment(&a, &b)
        })
        .collect();
    let grid = SegGrid::build(boxes);
    grid.for_candidate_pairs(|i, j| {
        let (i, j) = (i as usize, j as usize);
        let d = seg_seg_dist_f64(c.pts[i], c.pts[i + 1], c.pts[j], c.pts[j + 1]);
        let mut al = (c.cum[j] - c.cum[i + 1]).abs();
        if c.closed {
            al = al.min(c.total - (c.cum[j + 1] - c.cum[i]).abs());
        }
        if d < 0.5 * al && d < min_gap {
            min_gap = d;
        }
    });
    min_gap
}

fn seg_seg_dist_f64(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> f64 {
    let pd = |p: (f64, f64), a: (f64, f64), b: (f64, f64)| -> f64 {
        let dx = b.0 - a.0;
        let dy = b.1 - a.1;
        let l2 = dx * dx + dy * dy;
        let t = if l2 > 0.0 {
            (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / l2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        ((p.0 - a.0 - t * dx).powi(2) + (p.1 - a.1 - t * dy).powi(2)).sqrt()
    };
    pd(a, c, d).min(pd(b, c, d)).min(pd(c, a, b)).min(pd(d, a, b))
}

/// Crossings of the core with itself, matched 1:1 to the base divide's
/// crossings; returns the two arclength positions of each visit, indexed by
/// base crossing id.
fn core_visit_positions(
    center: &Centerline,
    base: &Divide,
) -> Result<Vec<[f64; 2]>, DivideError> {
    let pts = arrangement::count_crossings(std::slice::from_ref(&center.core))?;
    if pts.len() != base.crossing_count() {
        return Err(DivideError::GenericityFailure(format!(
            "smoothed core has {} self-crossings, base has {}",
            pts.len(),
            base.crossing_count()
        )));
    }
    // We need the visit arclengths; recompute crossing parameters directly.
    let core = &center.core;
    let mut visits: Vec<(Point, f64, f64)> = Vec::new();
    let m = core.segment_count();
    for i in 0..m {
        for j in i + 2..m {
            if core.closed && i == 0 && j == m - 1 {
                continue;
            }
            let (a, b) = core.segment(i);
            let (c, d) = core.segment(j);
            if let SegContact::Proper { point, t1, t2 } = seg_contact(a, b, c, d) {
                let l1 = arclen_at(center, i, rat_to_f64(&t1));
                let l2 = arclen_at(center, j, rat_to_f64(&t2));
                visits.push((point, l1, l2));
            }
        }
    }
    if visits.len() != base.crossing_count() {
        return Err(DivideError::GenericityFailure(
            "core self-crossing parameters disagree with the scan".into(),
        ));
    }
    // Match each core crossing to the nearest base crossing.
    let mut out = vec![[f64::NAN; 2]; base.crossing_count()];
    let mut used = vec![false; base.crossing_count()];
    for (p, l1, l2) in visits {
        let (px, py) = p.to_f64();
        let mut best = (f64::INFINITY, usize::MAX);
        for ci in 0..base.crossing_count() {
            let (bx, by) = base.crossing_point(ci).to_f64();
            let d = ((px - bx).powi(2) + (py - by).powi(2)).sqrt();
            if d < best.0 {
                best = (d, ci);
            }
        }
        if used[best.1] {
            return Err(DivideError::GenericityFailure(
                "two core crossings match the same base crossing".into(),
            ));
        }
        used[best.1] = true;
        out[best.1] = [l1.min(l2), l1.max(l2)];
    }
    Ok(out)
}

fn arclen_at(center: &Centerline, seg: usize, t: f64) -> f64 {
    // The core polyline may have dropped duplicate points relative to
    // center.pts; segment counts match in practice because spacing is
    // uniform. Guard with a clamp.
    let i = seg.min(center.cum.len() - 2);
    center.cum[i] + (center.cum[i + 1] - center.cum[i]) * t
}

/// Candidate witness samples for a base region: one per boundary arc.
fn region_witnesses(base: &Divide, region: usize) -> Vec<Point> {
    let arr = base.arrangement();
    let face = base.regions()[region].face;
    arrangement::face_sample_candidates(arr, face)
}

fn dist_to_centerline(p: &Point, c: &Centerline) -> f64 {
    let (px, py) = p.to_f64();
    let mut best = f64::INFINITY;
    let n = c.pts.len();
    for i in 0..n - 1 {
        let d = seg_seg_dist_f64((px, py), (px, py), c.pts[i], c.pts[i + 1]);
        best = best.min(d);
    }
    best
}

struct SweepSample {
    theta: f64,
    point: Point,
}

/// The composed open polyline of a Chebyshev cable plus per-segment angle
/// ranges for provenance matching.
struct Sweep {
    poly: Polyline,
    /// theta range per polyline segment.
    seg_theta: Vec<(f64, f64)>,
}

fn sweep_chebyshev(p: u32, q: u32, n: usize, eta: f64, c: &Centerline) -> Sweep {
    let mut samples: Vec<SweepSample> = Vec::with_capacity(n + 2);
    let mut push = |theta: f64, samples: &mut Vec<SweepSample>| {
        let along = (p as f64 * theta).cos();
        let w = (q as f64 * theta).cos();
        let s = (along + 1.0) / 2.0 * c.total;
        let (pos, nrm) = c.eval(s);
        let pt = Point::from_f64(pos.0 + eta * w * nrm.0, pos.1 + eta * w * nrm.1, COORD_BITS);
        samples.push(SweepSample { theta, point: pt });
    };
    push(0.0, &mut samples);
    for j in 0..n {
        let theta = std::f64::consts::PI * (j as f64 + 0.5) / n as f64;
        push(theta, &mut samples);
    }
    push(std::f64::consts::PI, &mut samples);

    let mut pts: Vec<Point> = Vec::with_capacity(samples.len());
    let mut seg_theta: Vec<(f64, f64)> = Vec::new();
    let mut last_theta = 0.0f64;
    for s in samples {
        if let Some(last) = pts.last() {
            if *last == s.point {
                // zero-length after rounding: extend the previous range
                if let Some(r) = seg_theta.last_mut() {
                    r.1 = s.theta;
                }
                last_theta = s.theta;
                continue;
            }
            seg_theta.push((last_theta, s.theta));
        }
        last_theta = s.theta;
        pts.push(s.point);
    }
    Sweep {
        poly: Polyline::open(pts),
        seg_theta,
    }
}

/// Star product of a coprime Chebyshev pattern over an open branch of a
/// signed one-branch base divide.
pub fn star_product(
    pattern: &ChebyshevPattern,
    base: &Divide,
    branch: usize,
    params: &StarParams,
) -> Result<Divide, DivideError> {
    if branch >= base.branches().len() {
        return Err(DivideError::NoSuchBranch(branch));
    }
    if base.branches()[branch].closed {
        return Err(DivideError::WrongBranchKind);
    }
    if base.branches().len() != 1 {
        return Err(DivideError::GenericityFailure(
            "star products are defined over one-branch divides".into(),
        ));
    }
    if pattern.crossings.is_empty() && pattern.p > 1 && pattern.q > 1 {
        return Err(DivideError::NotCoprime);
    }
    if !base.signed() {
        return Err(DivideError::UnsignedDivide);
    }
    if pattern.p > MAX_BLOCK_EXPONENT || pattern.q > MAX_BLOCK_EXPONENT {
        return Err(DivideError::BlockTooLarge(format!(
            "pattern ({}, {})",
            pattern.p, pattern.q
        )));
    }

    let mut last_err = DivideError::EtaTooLarge {
        retries: params.retries,
        detail: "no attempt made".into(),
    };
    for round in 0..=params.retries {
        match star_attempt(pattern, base, branch, params, round) {
            Ok(d) => return Ok(d),
            Err(
                e @ (DivideError::WrongBranchKind
                | DivideError::NoSuchBranch(_)
                | DivideError::UnsignedDivide
                | DivideError::BlockTooLarge(_)),
            ) => return Err(e),
            Err(e) => last_err = e,
        }
    }
    Err(DivideError::EtaTooLarge {
        retries: params.retries,
        detail: last_err.to_string(),
    })
}

fn star_attempt(
    pattern: &ChebyshevPattern,
    base: &Divide,
    branch: usize,
    params: &StarParams,
    round: u32,
) -> Result<Divide, DivideError> {
    let p = pattern.p;
    let q = pattern.q;
    let delta_base = base.crossing_count();

    // Centerline spacing tied to the eventual band width: two coupled passes.
    let rough = build_centerline(&base.branches()[branch], 0.02)?;
    let gap = feature_gap(&rough).min(0.12);
    let mut eta = params
        .eta
        .as_ref()
        .map(|e| rat_to_f64(e))
        .unwrap_or(0.5 * gap)
        .min(0.5 * gap);
    eta /= (1u32 << round) as f64;
    if eta < 1e-4 {
        return Err(DivideError::EtaTooLarge {
            retries: round,
            detail: format!("eta underflow ({eta:.2e})"),
        });
    }
    let spacing = (eta / 3.0).clamp(5e-4, 0.02);
    let center = build_centerline(&base.branches()[branch], spacing)?;
    let visits = core_visit_positions(&center, base)?;

    // Sample count: segments must resolve the band.
    let min_n = params.samples.unwrap_or(0);
    let speed = p as f64 * center.total / 2.0 + eta * q as f64;
    let mut n = (2.0 * std::f64::consts::PI * speed / eta).ceil() as usize;
    n = n.max(min_n).max(64 * p as usize * q as usize).max(512);
    let block = 2 * (p as usize) * (q as usize);
    n = n.div_ceil(block) * block;
    n <<= round.min(3);
    if n > MAX_SAMPLES {
        return Err(DivideError::BlockTooLarge(format!(
            "sample count {n} exceeds the guard"
        )));
    }

    let sweep = sweep_chebyshev(p, q, n, eta, &center);
    let composed = Divide::build(vec![sweep.poly.clone()])?;

    // Exact crossing-count postcondition.
    let expected = pattern.crossings.len() + delta_base * (p as usize).pow(2);
    if composed.crossing_count() != expected {
        return Err(DivideError::GenericityFailure(format!(
            "composed divide has {} crossings, expected {} (eta {eta:.4}, n {n})",
            composed.crossing_count(),
            expected
        )));
    }

    let tags = classify_crossings(pattern, &composed, &sweep, &center, &visits, eta, n)?;

    // Core linking: q wiggle zeros plus 2p per base crossing.
    let mut with_core = composed;
    with_core.set_core(center.core.clone());
    let want_link = q as usize + 2 * (p as usize) * delta_base;
    let got_link = with_core.core_linking()?;
    if got_link != want_link {
        return Err(DivideError::GenericityFailure(format!(
            "core linking {got_link}, expected {want_link}"
        )));
    }

    // Witnesses for every + region of the base.
    let base_signs = base.signs()?;
    let mut anchors = Vec::new();
    let mut pplus = Vec::new();
    for (r, &s) in base_signs.iter().enumerate() {
        if s <= 0 {
            continue;
        }
        let mut best: Option<(f64, Point)> = None;
        for cand in region_witnesses(base, r) {
            let d = dist_to_centerline(&cand, &center);
            if best.as_ref().map_or(true, |(bd, _)| d > *bd) {
                best = Some((d, cand));
            }
        }
        let (d, w) = best.ok_or_else(|| {
            DivideError::GenericityFailure(format!("no witness candidates in region {r}"))
        })?;
        if d < 3.0 * eta {
            return Err(DivideError::GenericityFailure(format!(
                "witness for base region {r} is {d:.4} from the band, need {:.4}",
                3.0 * eta
            )));
        }
        anchors.push((w.clone(), 1i8));
        pplus.push(PplusTag {
            witness: w,
            base_region: r,
        });
    }
    with_core.assign_signs(&anchors)?;

    // Distinctness of the P+ regions.
    let mut seen = std::collections::HashSet::new();
    for (region, _) in with_core.pplus_regions()? {
        if !seen.insert(region) {
            return Err(DivideError::GenericityFailure(
                "two base + regions fell into one composed region".into(),
            ));
        }
    }

    with_core.set_crossing_tags(tags);
    with_core.set_pplus_tags(pplus);
    Ok(with_core)
}

fn classify_crossings(
    pattern: &ChebyshevPattern,
    composed: &Divide,
    sweep: &Sweep,
    center: &Centerline,
    visits: &[[f64; 2]],
    eta: f64,
    n: usize,
) -> Result<BTreeMap<usize, CrossingTag>, DivideError> {
    let p = pattern.p;
    let q = pattern.q;
    let pq = (p as u64) * (q as u64);
    let h = std::f64::consts::PI / n as f64;
    let theta_tol = 4.0 * h;
    // Arclength tolerance for grid matching.
    let mut min_visit_gap = f64::INFINITY;
    let mut all_pos: Vec<f64> = visits.iter().flatten().copied().collect();
    all_pos.push(0.0);
    all_pos.push(center.total);
    all_pos.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for w in all_pos.windows(2) {
        min_visit_gap = min_visit_gap.min(w[1] - w[0]);
    }
    let speed_max = p as f64 * center.total / 2.0;
    let len_tol = (8.0 * eta).max(6.0 * h * speed_max);
    if visits.iter().count() > 0 && len_tol >= 0.45 * min_visit_gap {
        return Err(DivideError::GenericityFailure(format!(
            "grid zones overlap: tolerance {len_tol:.4} vs visit gap {min_visit_gap:.4}"
        )));
    }

    let seg_mid_theta = |s: usize| -> f64 {
        let (a, b) = sweep.seg_theta[s];
        0.5 * (a + b)
    };
    let seg_theta_dist = |s: usize, t: f64| -> f64 {
        let (a, b) = sweep.seg_theta[s];
        if t < a {
            a - t
        } else if t > b {
            t - b
        } else {
            0.0
        }
    };

    let mut tags: BTreeMap<usize, CrossingTag> = BTreeMap::new();
    let mut pattern_used = vec![false; pattern.crossings.len()];
    let mut grid_used: std::collections::HashSet<(usize, u32, u32)> = Default::default();

    for ci in 0..composed.crossing_count() {
        let cross = &composed.arrangement().crossings[ci];
        let s1 = cross.strands[0].1;
        let s2 = cross.strands[1].1;
        if s1 >= sweep.seg_theta.len() || s2 >= sweep.seg_theta.len() {
            return Err(DivideError::GenericityFailure(
                "crossing on an untracked segment".into(),
            ));
        }
        // Pattern match first.
        let mut matched = None;
        for (k, pc) in pattern.crossings.iter().enumerate() {
            if pattern_used[k] {
                continue;
            }
            let t1 = std::f64::consts::PI * pc.m1 as f64 / pq as f64;
            let t2 = std::f64::consts::PI * pc.m2 as f64 / pq as f64;
            let direct = seg_theta_dist(s1, t1).max(seg_theta_dist(s2, t2));
            let swapped = seg_theta_dist(s1, t2).max(seg_theta_dist(s2, t1));
            if direct.min(swapped) <= theta_tol {
                matched = Some(k);
                break;
            }
        }
        if let Some(k) = matched {
            pattern_used[k] = true;
            tags.insert(ci, CrossingTag::Pattern(k));
            continue;
        }
        // Grid match: both strands must sit over distinct visits of one base
        // crossing.
        let along = |s: usize| -> f64 {
            ((p as f64) * seg_mid_theta(s)).cos().mul_add(0.5, 0.5) * center.total
        };
        let sweep_idx = |s: usize| -> u32 {
            let k = (seg_mid_theta(s) * p as f64 / std::f64::consts::PI).floor() as i64;
            k.clamp(0, p as i64 - 1) as u32
        };
        let find_visit = |pos: f64| -> Option<(usize, usize)> {
            for (b, v) in visits.iter().enumerate() {
                for (vi, &vp) in v.iter().enumerate() {
                    if (pos - vp).abs() <= len_tol {
                        return Some((b, vi));
                    }
                }
            }
            None
        };
        let m1 = find_visit(along(s1));
        let m2 = find_visit(along(s2));
        match (m1, m2) {
            (Some((b1, v1)), Some((b2, v2))) if b1 == b2 && v1 != v2 => {
                let (i, j) = if v1 == 0 {
                    (sweep_idx(s1), sweep_idx(s2))
                } else {
                    (sweep_idx(s2), sweep_idx(s1))
                };
                if !grid_used.insert((b1, i, j)) {
                    return Err(DivideError::GenericityFailure(format!(
                        "grid slot ({b1}, {i}, {j}) hit twice"
                    )));
                }
                tags.insert(
                    ci,
                    CrossingTag::Grid {
                        base: b1,
                        i,
                        j,
                    },
                );
            }
            _ => {
                return Err(DivideError::GenericityFailure(format!(
                    "crossing {ci} matches neither the pattern nor a grid zone"
                )));
            }
        }
    }
    if pattern_used.iter().any(|u| !u) {
        return Err(DivideError::GenericityFailure(
            "some pattern crossings were not realized".into(),
        ));
    }
    // Each base crossing must carry a full p x p grid.
    for b in 0..visits.len() {
        for i in 0..p {
            for j in 0..p {
                if !grid_used.contains(&(b, i, j)) {
                    return Err(DivideError::GenericityFailure(format!(
                        "grid slot ({b}, {i}, {j}) missing"
                    )));
                }
            }
        }
    }
    Ok(tags)
}

/// Star product of a Lissajous pattern over a closed branch. Crossing counts
/// are not predicted by a formula; callers freeze them as regression values.
pub fn star_product_lissajous(
    pattern: &LissajousPattern,
    base: &Divide,
    branch: usize,
    params: &StarParams,
) -> Result<Divide, DivideError> {
    if branch >= base.branches().len() {
        return Err(DivideError::NoSuchBranch(branch));
    }
    if !base.branches()[branch].closed {
        return Err(DivideError::WrongBranchKind);
    }
    if !base.signed() {
        return Err(DivideError::UnsignedDivide);
    }
    let mut last_err = DivideError::EtaTooLarge {
        retries: params.retries,
        detail: "no attempt made".into(),
    };
    for round in 0..=params.retries {
        match lissajous_attempt(pattern, base, branch, params, round) {
            Ok(d) => return Ok(d),
            Err(
                e @ (DivideError::WrongBranchKind
                | DivideError::NoSuchBranch(_)
                | DivideError::UnsignedDivide
                | DivideError::BlockTooLarge(_)),
            ) => return Err(e),
            Err(e) => last_err = e,
        }
    }
    Err(DivideError::EtaTooLarge {
        retries: params.retries,
        detail: last_err.to_string(),
    })
}

fn lissajous_attempt(
    pattern: &LissajousPattern,
    base: &Divide,
    branch: usize,
    params: &StarParams,
    round: u32,
) -> Result<Divide, DivideError> {
    let rough = build_centerline(&base.branches()[branch], 0.02)?;
    let gap = feature_gap(&rough).min(0.12);
    let mut eta = params
        .eta
        .as_ref()
        .map(|e| rat_to_f64(e))
        .unwrap_or(0.4 * gap)
        .min(0.5 * gap);
    eta /= (1u32 << round) as f64;
    if eta < 1e-4 {
        return Err(DivideError::EtaTooLarge {
            retries: round,
            detail: "eta underflow".into(),
        });
    }
    let spacing = (eta / 3.0).clamp(5e-4, 0.02);
    let center = build_centerline(&base.branches()[branch], spacing)?;

    let mut branches = Vec::new();
    // keep the base's other branches untouched
    for (bi, br) in base.branches().iter().enumerate() {
        if bi != branch {
            branches.push(br.clone());
        }
    }
    for &(pr, qr, rot) in &pattern.components {
        let speed = pr as f64 * center.total + eta * qr as f64 * 6.0;
        let mut n = (2.0 * std::f64::consts::PI * speed / eta).ceil() as usize;
        n = n.max(params.samples.unwrap_or(0)).max(512);
        n <<= round.min(3);
        if n > MAX_SAMPLES {
            return Err(DivideError::BlockTooLarge(format!(
                "sample count {n} exceeds the guard"
            )));
        }
        let tau = std::f64::consts::TAU;
        let pts: Vec<Point> = (0..n)
            .map(|k| {
                let s = (k as f64 + 0.5) / n as f64;
                let u = (pr as f64 * s + rot as f64 / pattern.p as f64).fract();
                let w = (tau * qr as f64 * s).sin();
                let (pos, nrm) = center.eval(u * center.total);
                Point::from_f64(pos.0 + eta * w * nrm.0, pos.1 + eta * w * nrm.1, COORD_BITS)
            })
            .collect();
        branches.push(Polyline::closed(pts).dedup());
    }
    let mut composed = Divide::build(branches)?;
    composed.set_core(center.core.clone());

    // Signs through base + witnesses.
    let base_signs = base.signs()?;
    let mut anchors = Vec::new();
    let mut pplus = Vec::new();
    for (r, &s) in base_signs.iter().enumerate() {
        if s <= 0 {
            continue;
        }
        let mut best: Option<(f64, Point)> = None;
        for cand in region_witnesses(base, r) {
            let d = dist_to_centerline(&cand, &center);
            if best.as_ref().map_or(true, |(bd, _)| d > *bd) {
                best = Some((d, cand));
            }
        }
        if let Some((d, w)) = best {
            if d < 3.0 * eta {
                return Err(DivideError::GenericityFailure(format!(
                    "witness for base region {r} too close to the band"
                )));
            }
            anchors.push((w.clone(), 1i8));
            pplus.push(PplusTag {
                witness: w,
                base_region: r,
            });
        }
    }
    if anchors.is_empty() {
        return Err(DivideError::GenericityFailure(
            "base divide has no + regions to anchor".into(),
        ));
    }
    composed.assign_signs(&anchors)?;
    composed.set_pplus_tags(pplus);
    Ok(composed)
}

/// A synthesized stage: the divide together with the block that produced it.
pub struct SynthStage {
    pub divide: Divide,
    pub block: (u32, u32),
}

/// Iterated star product for a validated Puiseux sequence, innermost block
/// first. Every stage is validated against the delta recursion and the
/// linking numbers.
pub fn synth_stages(
    seq: &PuiseuxSeq,
    params: &StarParams,
) -> Result<Vec<SynthStage>, DivideError> {
    let data = puiseux::cable_data(seq);
    let blocks: Vec<(u32, u32)> = seq
        .pairs()
        .iter()
        .zip(&data.bprime)
        .map(|((a, _), bp)| {
            let a = a.to_u32().ok_or_else(|| {
                DivideError::BlockTooLarge("pattern multiplicity does not fit u32".into())
            })?;
            let bp = bp.to_u32().ok_or_else(|| {
                DivideError::BlockTooLarge("cable exponent does not fit u32".into())
            })?;
            if a > MAX_BLOCK_EXPONENT || bp > MAX_BLOCK_EXPONENT {
                return Err(DivideError::BlockTooLarge(format!("block ({a}, {bp})")));
            }
            Ok((a, bp))
        })
        .collect::<Result<_, _>>()?;

    let mut stages: Vec<SynthStage> = Vec::new();
    for (k, &(a, bp)) in blocks.iter().enumerate() {
        let pattern = crate::blocks::cheb_pattern(a, bp, 8)?;
        let divide = if k == 0 {
            place_block(&pattern)?
        } else {
            star_product(&pattern, &stages[k - 1].divide, 0, params)?
        };
        // delta recursion is the crossing count, exactly.
        let want = data.delta[k].to_usize().ok_or_else(|| {
            DivideError::BlockTooLarge("delta does not fit usize".into())
        })?;
        if divide.crossing_count() != want {
            return Err(DivideError::GenericityFailure(format!(
                "stage {k}: {} crossings, delta recursion says {want}",
                divide.crossing_count()
            )));
        }
        if divide.mu() != 2 * want {
            return Err(DivideError::GenericityFailure(format!(
                "stage {k}: mu {} != 2 delta {}",
                divide.mu(),
                2 * want
            )));
        }
        if k > 0 {
            let lambda = data.lambda[k].to_usize().ok_or_else(|| {
                DivideError::BlockTooLarge("lambda does not fit usize".into())
            })?;
            let got = divide.core_linking()?;
            if got != lambda {
                return Err(DivideError::GenericityFailure(format!(
                    "stage {k}: core linking {got} != lambda {lambda}"
                )));
            }
        }
        stages.push(SynthStage {
            divide,
            block: (a, bp),
        });
    }
    Ok(stages)
}

/// The divide of the full singularity.
pub fn synth(seq: &PuiseuxSeq, params: &StarParams) -> Result<Divide, DivideError> {
    Ok(synth_stages(seq, params)?.pop().expect("n >= 1").divide)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::cheb_pattern;

    #[test]
    fn placed_trefoil_block_counts() {
        let d = place_block(&cheb_pattern(2, 3, 8).unwrap()).unwrap();
        assert_eq!(d.crossing_count(), 1);
        assert_eq!(d.regions().len(), 3);
        assert_eq!(d.mu(), 2);
        // single interior region is the loop, and it is positive
        let interior = d.interior_region_ids();
        assert_eq!(interior.len(), 1);
        assert_eq!(d.sign_of(interior[0]), Some(1));
        assert!(d.checkerboard_ok());
    }

    #[test]
    fn placed_block_seven_five() {
        let d = place_block(&cheb_pattern(7, 5, 8).unwrap()).unwrap();
        assert_eq!(d.crossing_count(), 12);
        assert_eq!(d.mu(), 24); // mu = (p-1)(q-1)
    }

    #[test]
    fn star_over_diameter_gives_pattern_crossings() {
        // P_{p,q} over an embedded diameter: (p-1)(q-1)/2 crossings and
        // core linking q.
        let mut base = Divide::build(vec![Polyline::open(vec![
            Point::from_f64(-1.0, 0.0, 20),
            Point::from_f64(-0.5, 0.002, 20),
            Point::from_f64(0.0, 0.003, 20),
            Point::from_f64(0.5, 0.002, 20),
            Point::from_f64(1.0, 0.0, 20),
        ])])
        .unwrap();
        let anchor = base.regions()[0].sample.clone().unwrap();
        base.assign_signs(&[(anchor, 1)]).unwrap();
        let pat = cheb_pattern(2, 3, 8).unwrap();
        let d = star_product(&pat, &base, 0, &StarParams::default()).unwrap();
        assert_eq!(d.crossing_count(), 1);
        assert_eq!(d.core_linking().unwrap(), 3);
        assert!(d.checkerboard_ok());
    }

    #[test]
    fn wrong_branch_kind_rejected() {
        let circle: Vec<Point> = (0..24)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / 24.0;
                Point::from_f64(0.5 * a.cos(), 0.5 * a.sin(), 20)
            })
            .collect();
        let mut base = Divide::build(vec![Polyline::closed(circle)]).unwrap();
        let anchor = base.regions()[0].sample.clone().unwrap();
        base.assign_signs(&[(anchor, 1)]).unwrap();
        let pat = cheb_pattern(2, 3, 8).unwrap();
        assert!(matches!(
            star_product(&pat, &base, 0, &StarParams::default()),
            Err(DivideError::WrongBranchKind)
        ));
    }

    #[test]
    fn synth_single_block() {
        let seq = puiseux::validate([(2, 3)]).unwrap();
        let d = synth(&seq, &StarParams::default()).unwrap();
        assert_eq!(d.crossing_count(), 1);
        assert_eq!(d.mu(), 2);
    }

    #[test]
    fn synth_paper_example_two_seven() {
        let seq = puiseux::validate([(2, 3), (2, 7)]).unwrap();
        let stages = synth_stages(&seq, &StarParams::default()).unwrap();
        assert_eq!(stages.len(), 2);
        let d = &stages[1].divide;
        assert_eq!(d.crossing_count(), 8); // 4 pattern + 1 * 2^2 grid
        assert_eq!(d.mu(), 16);
        assert_eq!(d.core_linking().unwrap(), 13); // lambda_2
        // provenance: 4 pattern tags and one full 2x2 grid
        let tags = d.crossing_tags();
        let grids = tags
            .values()
            .filter(|t| matches!(t, CrossingTag::Grid { .. }))
            .count();
        assert_eq!(grids, 4);
        assert_eq!(tags.len(), 8);
        assert!(d.checkerboard_ok());
    }
}
