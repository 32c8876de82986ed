//! The `Divide` value: an exact planar arrangement of branches in the unit
//! disk together with region signs, star-product provenance and the core
//! curve, plus the line-oriented file format.

use crate::arrangement::{self, Arrangement};
use crate::error::DivideError;
use crate::geom::*;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

/// Provenance of a crossing in a star-composed divide.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CrossingTag {
    /// Image of the pattern's own crossing with the given index.
    Pattern(usize),
    /// Member of the p x p grid over base crossing `base`, at strand indices
    /// (i, j) with 0 <= i, j < p.
    Grid { base: usize, i: u32, j: u32 },
}

/// Witness that a region contains a particular + component of the base.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PplusTag {
    pub witness: Point,
    pub base_region: usize,
}

#[derive(Debug, Clone)]
pub struct Region {
    pub face: usize,
    pub interior: bool,
    pub corners: Vec<(usize, u8)>,
    pub sample: Option<Point>,
}

#[derive(Debug, Clone)]
pub struct Divide {
    branches: Vec<Polyline>,
    anchors: Vec<(Point, i8)>,
    core: Option<Polyline>,
    crossing_tags: BTreeMap<usize, CrossingTag>,
    pplus: Vec<PplusTag>,
    arr: Arrangement,
    regions: Vec<Region>,
    signs: Option<Vec<i8>>, // per region index
}

impl Divide {
    /// Build the exact arrangement of the given branches.
    pub fn build(branches: Vec<Polyline>) -> Result<Divide, DivideError> {
        let arr = arrangement::build(&branches)?;
        let regions = canonical_regions(&arr);
        Ok(Divide {
            branches,
            anchors: Vec::new(),
            core: None,
            crossing_tags: BTreeMap::new(),
            pplus: Vec::new(),
            arr,
            regions,
            signs: None,
        })
    }

    pub fn branches(&self) -> &[Polyline] {
        &self.branches
    }

    pub fn arrangement(&self) -> &Arrangement {
        &self.arr
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn crossing_count(&self) -> usize {
        self.arr.crossings.len()
    }

    pub fn crossing_point(&self, id: usize) -> &Point {
        &self.arr.crossings[id].point
    }

    pub fn interior_region_ids(&self) -> Vec<usize> {
        (0..self.regions.len())
            .filter(|&r| self.regions[r].interior)
            .collect()
    }

    /// Milnor number: crossings plus interior regions.
    pub fn mu(&self) -> usize {
        self.crossing_count() + self.interior_region_ids().len()
    }

    /// Two-color the regions. Anchors are (point, sign) pairs; the point must
    /// lie strictly inside a region.
    pub fn assign_signs(&mut self, anchors: &[(Point, i8)]) -> Result<(), DivideError> {
        let face_signs = arrangement::two_color(&self.arr, anchors)?;
        let signs: Vec<i8> = self.regions.iter().map(|r| face_signs[r.face]).collect();
        self.anchors = anchors.to_vec();
        self.signs = Some(signs);
        Ok(())
    }

    pub fn signed(&self) -> bool {
        self.signs.is_some()
    }

    pub fn sign_of(&self, region: usize) -> Option<i8> {
        self.signs.as_ref().map(|s| s[region])
    }

    pub fn signs(&self) -> Result<&[i8], DivideError> {
        self.signs
            .as_deref()
            .ok_or(DivideError::UnsignedDivide)
    }

    pub fn anchors(&self) -> &[(Point, i8)] {
        &self.anchors
    }

    pub fn core(&self) -> Option<&Polyline> {
        self.core.as_ref()
    }

    pub fn set_core(&mut self, core: Polyline) {
        self.core = Some(core);
    }

    pub fn crossing_tags(&self) -> &BTreeMap<usize, CrossingTag> {
        &self.crossing_tags
    }

    pub fn set_crossing_tags(&mut self, tags: BTreeMap<usize, CrossingTag>) {
        self.crossing_tags = tags;
    }

    pub fn pplus_tags(&self) -> &[PplusTag] {
        &self.pplus
    }

    pub fn set_pplus_tags(&mut self, tags: Vec<PplusTag>) {
        self.pplus = tags;
    }

    /// Region containing a point.
    pub fn locate(&self, p: &Point) -> Option<usize> {
        let face = arrangement::locate(&self.arr, p)?;
        self.regions.iter().position(|r| r.face == face)
    }

    /// Region ids of the P+ tags, resolved through their witnesses.
    pub fn pplus_regions(&self) -> Result<Vec<(usize, usize)>, DivideError> {
        let mut out = Vec::new();
        for tag in &self.pplus {
            let r = self.locate(&tag.witness).ok_or_else(|| {
                DivideError::NotGeneric("P+ witness lies on a curve".into())
            })?;
            out.push((r, tag.base_region));
        }
        Ok(out)
    }

    /// Exact count of transversal intersections with the core curve.
    pub fn core_linking(&self) -> Result<usize, DivideError> {
        let core = self.core.as_ref().ok_or(DivideError::NoCore)?;
        arrangement::transversal_intersections(
            &self.branches,
            std::slice::from_ref(core),
        )
    }

    /// Exact transversal intersection count between two divides.
    pub fn pair_intersections(a: &Divide, b: &Divide) -> Result<usize, DivideError> {
        arrangement::transversal_intersections(&a.branches, &b.branches)
    }

    /// Checkerboard consistency: adjacent regions carry opposite signs.
    pub fn checkerboard_ok(&self) -> bool {
        let Some(signs) = &self.signs else {
            return false;
        };
        let face_sign: std::collections::HashMap<usize, i8> = self
            .regions
            .iter()
            .zip(signs)
            .map(|(r, &s)| (r.face, s))
            .collect();
        self.arr.adjacency().into_iter().all(|(_, f1, f2)| {
            match (face_sign.get(&f1), face_sign.get(&f2)) {
                (Some(a), Some(b)) => a != b,
                _ => true, // one side is the pure exterior
            }
        })
    }

    pub fn write_file(&self, path: &Path) -> Result<(), DivideError> {
        std::fs::write(path, self.serialize())?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Divide, DivideError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str("divide v1\n");
        for br in &self.branches {
            let kind = if br.closed { "closed" } else { "open" };
            write!(out, "branch {kind}").unwrap();
            for p in &br.pts {
                write!(out, " {} {}", fmt_rat(&p.x), fmt_rat(&p.y)).unwrap();
            }
            out.push('\n');
        }
        for (p, s) in &self.anchors {
            writeln!(
                out,
                "sign {} {} {}",
                fmt_rat(&p.x),
                fmt_rat(&p.y),
                if *s > 0 { "+" } else { "-" }
            )
            .unwrap();
        }
        if let Some(core) = &self.core {
            write!(out, "core").unwrap();
            for p in &core.pts {
                write!(out, " {} {}", fmt_rat(&p.x), fmt_rat(&p.y)).unwrap();
            }
            out.push('\n');
        }
        for (id, tag) in &self.crossing_tags {
            match tag {
                CrossingTag::Pattern(k) => {
                    writeln!(out, "provenance crossing {id} pattern {k}").unwrap()
                }
                CrossingTag::Grid { base, i, j } => {
                    writeln!(out, "provenance crossing {id} grid {base} {i} {j}").unwrap()
                }
            }
        }
        for t in &self.pplus {
            writeln!(
                out,
                "pplus {} {} {}",
                fmt_rat(&t.witness.x),
                fmt_rat(&t.witness.y),
                t.base_region
            )
            .unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Divide, DivideError> {
        let mut lines = text.lines().enumerate();
        let perr = |line: usize, msg: &str| DivideError::Parse {
            line: line + 1,
            msg: msg.to_string(),
        };
        let (l0, header) = lines
            .next()
            .ok_or_else(|| perr(0, "empty file"))?;
        if header.trim() != "divide v1" {
            return Err(perr(l0, "expected header `divide v1`"));
        }
        let mut branches = Vec::new();
        let mut anchors = Vec::new();
        let mut core = None;
        let mut tags = BTreeMap::new();
        let mut pplus = Vec::new();
        for (ln, raw) in lines {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut tok = line.split_whitespace();
            match tok.next().unwrap() {
                "branch" => {
                    let kind = tok.next().ok_or_else(|| perr(ln, "missing open|closed"))?;
                    let closed = match kind {
                        "open" => false,
                        "closed" => true,
                        _ => return Err(perr(ln, "expected open|closed")),
                    };
                    let pts = parse_points(&mut tok).map_err(|m| perr(ln, &m))?;
                    let pl = if closed {
                        Polyline::closed(pts)
                    } else {
                        Polyline::open(pts)
                    };
                    branches.push(pl);
                }
                "sign" => {
                    let x = next_rat(&mut tok).map_err(|m| perr(ln, &m))?;
                    let y = next_rat(&mut tok).map_err(|m| perr(ln, &m))?;
                    let s = match tok.next() {
                        Some("+") => 1i8,
                        Some("-") => -1,
                        _ => return Err(perr(ln, "expected + or -")),
                    };
                    anchors.push((Point::new(x, y), s));
                }
                "core" => {
                    let pts = parse_points(&mut tok).map_err(|m| perr(ln, &m))?;
                    core = Some(Polyline::open(pts));
                }
                "provenance" => {
                    match tok.next() {
                        Some("crossing") => {}
                        _ => return Err(perr(ln, "expected `provenance crossing`")),
                    }
                    let id: usize = tok
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| perr(ln, "bad crossing id"))?;
                    match tok.next() {
                        Some("pattern") => {
                            let k: usize = tok
                                .next()
                                .and_then(|s| s.parse().ok())
                                .ok_or_else(|| perr(ln, "bad pattern index"))?;
                            tags.insert(id, CrossingTag::Pattern(k));
                        }
                        Some("grid") => {
                            let mut n = || -> Result<u32, DivideError> {
                                tok.next()
                                    .and_then(|s| s.parse().ok())
                                    .ok_or_else(|| perr(ln, "bad grid index"))
                            };
                            let base = n()? as usize;
                            let i = n()?;
                            let j = n()?;
                            tags.insert(id, CrossingTag::Grid { base, i, j });
                        }
                        _ => return Err(perr(ln, "expected pattern|grid")),
                    }
                }
                "pplus" => {
                    let x = next_rat(&mut tok).map_err(|m| perr(ln, &m))?;
                    let y = next_rat(&mut tok).map_err(|m| perr(ln, &m))?;
                    let base_region: usize = tok
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| perr(ln, "bad base region id"))?;
                    pplus.push(PplusTag {
                        witness: Point::new(x, y),
                        base_region,
                    });
                }
                other => return Err(perr(ln, &format!("unknown directive `{other}`"))),
            }
        }
        if branches.is_empty() {
            return Err(DivideError::Parse {
                line: 0,
                msg: "no branches".into(),
            });
        }
        let mut divide = Divide::build(branches)?;
        for id in tags.keys() {
            if *id >= divide.crossing_count() {
                return Err(DivideError::Parse {
                    line: 0,
                    msg: format!("provenance references crossing {id} out of range"),
                });
            }
        }
        divide.crossing_tags = tags;
        divide.pplus = pplus;
        divide.core = core;
        if !anchors.is_empty() {
            divide.assign_signs(&anchors)?;
        }
        Ok(divide)
    }
}

fn parse_points<'a>(
    tok: &mut impl Iterator<Item = &'a str>,
) -> Result<Vec<Point>, String> {
    let vals: Vec<&str> = tok.collect();
    if vals.len() < 4 || vals.len() % 2 != 0 {
        return Err("expected an even number (>= 4) of coordinates".into());
    }
    let mut pts = Vec::with_capacity(vals.len() / 2);
    for pair in vals.chunks(2) {
        let x = parse_rat(pair[0]).ok_or_else(|| format!("bad rational `{}`", pair[0]))?;
        let y = parse_rat(pair[1]).ok_or_else(|| format!("bad rational `{}`", pair[1]))?;
        pts.push(Point::new(x, y));
    }
    Ok(pts)
}

fn next_rat<'a>(tok: &mut impl Iterator<Item = &'a str>) -> Result<Rat, String> {
    let s = tok.next().ok_or("missing rational")?;
    parse_rat(s).ok_or_else(|| format!("bad rational `{s}`"))
}

/// Regions in a canonical, reload-stable order: faces keyed by their smallest
/// corner (crossing id, slot), falling back to the smallest boundary arc id.
fn canonical_regions(arr: &Arrangement) -> Vec<Region> {
    let mut keyed: Vec<((u8, usize, usize), Region)> = Vec::new();
    for f in arr.region_faces() {
        let face = &arr.faces[f];
        let key = if let Some(&(c, s)) = face.corners.first() {
            (0u8, c, s as usize)
        } else {
            let min_arc = face
                .cycles
                .iter()
                .flatten()
                .map(|&h| h / 2)
                .filter(|&a| !arr.arcs[a].synthetic)
                .min()
                .unwrap_or(usize::MAX);
            (1u8, min_arc, 0)
        };
        keyed.push((
            key,
            Region {
                face: f,
                interior: f != arr.outer_face && !face.has_synthetic,
                corners: face.corners.clone(),
                sample: face.sample.clone(),
            },
        ));
    }
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    keyed.into_iter().map(|(_, r)| r).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64) -> Point {
        Point::from_f64(x, y, 20)
    }

    fn cross_divide() -> Divide {
        Divide::build(vec![
            Polyline::open(vec![pt(-1.0, 0.0), pt(0.0, 0.01), pt(1.0, 0.0)]),
            Polyline::open(vec![pt(0.01, -1.0), pt(0.0, 0.0), pt(-0.01, 1.0)]),
        ])
        .unwrap()
    }

    #[test]
    fn crossing_and_region_counts() {
        let d = cross_divide();
        assert_eq!(d.crossing_count(), 1);
        assert_eq!(d.regions().len(), 4);
        assert_eq!(d.mu(), 1);
    }

    #[test]
    fn signs_round_trip_through_file() {
        let mut d = cross_divide();
        let anchor = d.regions()[0].sample.clone().unwrap();
        d.assign_signs(&[(anchor, 1)]).unwrap();
        assert!(d.checkerboard_ok());
        let text = d.serialize();
        let d2 = Divide::parse(&text).unwrap();
        assert_eq!(d2.crossing_count(), d.crossing_count());
        assert_eq!(d2.regions().len(), d.regions().len());
        for r in 0..d.regions().len() {
            assert_eq!(d2.sign_of(r), d.sign_of(r), "region {r}");
        }
        assert_eq!(d2.serialize(), text, "serialization is stable");
    }

    #[test]
    fn malformed_header_is_parse_error() {
        match Divide::parse("divides v2\n") {
            Err(DivideError::Parse { .. }) => {}
            other => panic!("expected ParseError, got {other:?}"),
        }
    }

    #[test]
    fn pair_intersections_counts() {
        let a = Divide::build(vec![Polyline::open(vec![
            pt(-1.0, 0.0),
            pt(0.0, 0.013),
            pt(1.0, 0.0),
        ])])
        .unwrap();
        let b = Divide::build(vec![Polyline::open(vec![
            pt(0.013, -1.0),
            pt(0.0, 0.0),
            pt(-0.013, 1.0),
        ])])
        .unwrap();
        assert_eq!(Divide::pair_intersections(&a, &b).unwrap(), 1);

        let c = Divide::build(vec![Polyline::open(vec![
            pt(0.5, -0.8),
            pt(0.55, 0.0),
            pt(0.5, 0.8),
        ])])
        .unwrap();
        assert_eq!(Divide::pair_intersections(&a, &c).unwrap(), 1);
        assert_eq!(Divide::pair_intersections(&b, &c).unwrap(), 0);
    }

    #[test]
    fn core_linking_requires_core() {
        let d = cross_divide();
        assert!(matches!(d.core_linking(), Err(DivideError::NoCore)));
    }
}
