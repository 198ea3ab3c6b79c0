//! Post-processing of crack-path tables. Everything here is a pure function
//! of the table rows.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::cem::{PathKind, PathPoint};
use crate::mesh::Point;

/// Points of each tip in path order.
pub fn tip_polylines(path: &[PathPoint]) -> BTreeMap<usize, Vec<&PathPoint>> {
    let mut out: BTreeMap<usize, Vec<&PathPoint>> = BTreeMap::new();
    for p in path {
        if p.kind != PathKind::Arrest {
            out.entry(p.tip).or_default().push(p);
        }
    }
    out
}

/// Time of the first crack advance.
pub fn initiation_time(path: &[PathPoint]) -> Option<f64> {
    path.iter()
        .filter(|p| p.kind == PathKind::Advance)
        .map(|p| p.time)
        .min_by(f64::total_cmp)
}

/// Total line fit of `points`: centroid and unit direction.
fn line_fit(points: &[Point]) -> Option<(Point, [f64; 2])> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = points.iter().map(|p| p[1]).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy) = (p[0] - cx, p[1] - cy);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx + syy == 0.0 {
        return None;
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    Some(([cx, cy], [theta.cos(), theta.sin()]))
}

/// Angle in degrees, in [0, 90], between the horizontal and a least-squares
/// line through the path of `tip`, leaving out the first 10% of segments.
pub fn crack_angle(path: &[PathPoint], tip: usize) -> Option<f64> {
    let lines = tip_polylines(path);
    let pts: Vec<Point> = lines.get(&tip)?.iter().map(|p| p.point).collect();
    let segments = pts.len().checked_sub(1)?;
    let skip = segments / 10;
    let (_, d) = line_fit(&pts[skip..])?;
    Some(d[1].abs().atan2(d[0].abs()).to_degrees())
}

/// Length of the path of each tip.
pub fn tip_lengths(path: &[PathPoint]) -> BTreeMap<usize, f64> {
    let mut out = BTreeMap::new();
    for p in path {
        let e = out.entry(p.tip).or_insert(0.0);
        *e = f64::max(*e, p.length);
    }
    out
}

/// Crack patterns found in a bending run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BendingPattern {
    /// A crack from the pre-notch grew past the threshold.
    pub mixed_mode: bool,
    /// A crack from the midspan grew past the threshold.
    pub mode_one: bool,
}

/// Classifies tips by where they start: within `tolerance` of `notch`, or
/// within `tolerance` of the vertical line `x = midspan`. A pattern is
/// present when such a tip's path is longer than `threshold`.
pub fn classify_bending(path: &[PathPoint], notch: Point, midspan: f64, tolerance: f64, threshold: f64) -> BendingPattern {
    let lengths = tip_lengths(path);
    let mut pattern = BendingPattern {
        mixed_mode: false,
        mode_one: false,
    };
    for (tip, pts) in tip_polylines(path) {
        let Some(first) = pts.first() else { continue };
        if lengths[&tip] <= threshold {
            continue;
        }
        let o = first.point;
        if (o[0] - notch[0]).hypot(o[1] - notch[1]) <= tolerance {
            pattern.mixed_mode = true;
        } else if (o[0] - midspan).abs() <= tolerance {
            pattern.mode_one = true;
        }
    }
    pattern
}

/// Direction change along a quadratic fit of the path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathTurning {
    /// Unit tangents at the start and end of the fit.
    pub start: [f64; 2],
    pub end: [f64; 2],
    /// Tangent turning rate keeps one sign along the whole fit.
    pub monotone: bool,
    /// Signed turn from start to end tangent, radians; positive is
    /// counterclockwise.
    pub turn: f64,
}

impl PathTurning {
    /// The tangent rotates steadily towards -x.
    pub fn turns_toward_negative_x(&self) -> bool {
        self.monotone && self.end[0] < self.start[0]
    }
}

fn quadratic_fit(s: &[f64], v: &[f64]) -> Option<[f64; 3]> {
    // Normal equations on a scaled abscissa for conditioning.
    let smax = s.iter().cloned().fold(0.0, f64::max);
    if smax <= 0.0 {
        return None;
    }
    let mut a = [[0.0; 3]; 3];
    let mut b = [0.0; 3];
    for (&si, &vi) in s.iter().zip(v) {
        let t = si / smax;
        let basis = [1.0, t, t * t];
        for r in 0..3 {
            for c in 0..3 {
                a[r][c] += basis[r] * basis[c];
            }
            b[r] += basis[r] * vi;
        }
    }
    // Gaussian elimination with partial pivoting.
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..3 {
            let f = a[r][col] / a[col][col];
            for c in col..3 {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let mut acc = b[r];
        for c in r + 1..3 {
            acc -= a[r][c] * x[c];
        }
        x[r] = acc / a[r][r];
    }
    Some([x[0], x[1] / smax, x[2] / (smax * smax)])
}

/// Fits `x(s)` and `y(s)` over arc length with quadratics and reports how
/// the fitted tangent turns. Needs at least four points.
pub fn path_turning(path: &[PathPoint], tip: usize) -> Option<PathTurning> {
    let lines = tip_polylines(path);
    let pts: Vec<Point> = lines.get(&tip)?.iter().map(|p| p.point).collect();
    if pts.len() < 4 {
        return None;
    }
    let mut s = vec![0.0];
    for w in pts.windows(2) {
        s.push(s.last().unwrap() + (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p[0]).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p[1]).collect();
    let cx = quadratic_fit(&s, &xs)?;
    let cy = quadratic_fit(&s, &ys)?;
    let total = *s.last().unwrap();
    let tangent = |t: f64| {
        let d = [cx[1] + 2.0 * cx[2] * t, cy[1] + 2.0 * cy[2] * t];
        let n = d[0].hypot(d[1]);
        [d[0] / n, d[1] / n]
    };
    // x'y'' - y'x'' is linear in s, so its sign at the ends decides.
    let cross = |t: f64| (cx[1] + 2.0 * cx[2] * t) * 2.0 * cy[2] - (cy[1] + 2.0 * cy[2] * t) * 2.0 * cx[2];
    let (c0, c1) = (cross(0.0), cross(total));
    let (start, end) = (tangent(0.0), tangent(total));
    let turn = (start[0] * end[1] - start[1] * end[0]).atan2(start[0] * end[0] + start[1] * end[1]);
    Some(PathTurning {
        start,
        end,
        monotone: c0 * c1 >= 0.0 && (c0 != 0.0 || c1 != 0.0) && start.iter().chain(&end).all(|v| v.is_finite()),
        turn,
    })
}

/// Width and height of the box around all path points.
pub fn path_extent(path: &[PathPoint]) -> Option<(f64, f64)> {
    let first = path.first()?.point;
    let (mut lo, mut hi) = (first, first);
    for p in path {
        for k in 0..2 {
            lo[k] = lo[k].min(p.point[k]);
            hi[k] = hi[k].max(p.point[k]);
        }
    }
    Some((hi[0] - lo[0], hi[1] - lo[1]))
}

/// Width over height of the path box; infinite for a flat path.
pub fn path_aspect(path: &[PathPoint]) -> Option<f64> {
    let (w, h) = path_extent(path)?;
    if w == 0.0 && h == 0.0 {
        return None;
    }
    Some(if h == 0.0 { f64::INFINITY } else { w / h })
}

/// Reads a crack-path table written by
/// [`write_crack_path`](super::output::write_crack_path).
pub fn parse_crack_path(text: &str) -> Result<Vec<PathPoint>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(format!("line {}: expected 7 fields, got {}", i + 1, f.len()));
        }
        let num = |k: usize| f[k].parse::<f64>().map_err(|e| format!("line {}: {e}", i + 1));
        let kind = match f[6] {
            "initial" => PathKind::Initial,
            "strength" => PathKind::Strength,
            "advance" => PathKind::Advance,
            "arrest" => PathKind::Arrest,
            other => return Err(format!("line {}: unknown kind `{other}`", i + 1)),
        };
        out.push(PathPoint {
            tip: f[0].parse().map_err(|e| format!("line {}: {e}", i + 1))?,
            time: num(1)?,
            point: [num(2)?, num(3)?],
            length: num(4)?,
            g: num(5)?,
            kind,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::output::write_crack_path;

    fn pt(tip: usize, t: f64, x: f64, y: f64, length: f64, kind: PathKind) -> PathPoint {
        PathPoint {
            tip,
            time: t,
            point: [x, y],
            length,
            g: 0.0,
            kind,
        }
    }

    fn straight(angle_deg: f64, n: usize) -> Vec<PathPoint> {
        let (c, s) = (angle_deg.to_radians().cos(), angle_deg.to_radians().sin());
        (0..n)
            .map(|i| {
                let r = i as f64 * 1e-3;
                let kind = if i == 0 { PathKind::Initial } else { PathKind::Advance };
                pt(0, i as f64 * 1e-6, 0.05 + r * c, 0.025 + r * s, r, kind)
            })
            .collect()
    }

    #[test]
    fn angle_of_straight_path() {
        for a in [0.0, 30.0, 68.0, 90.0] {
            let got = crack_angle(&straight(a, 20), 0).unwrap();
            assert!((got - a).abs() < 1e-9, "{a} {got}");
        }
        // Mirrored paths report the same acute angle.
        assert!((crack_angle(&straight(112.0, 20), 0).unwrap() - 68.0).abs() < 1e-9);
    }

    #[test]
    fn first_segments_are_ignored() {
        let mut p = straight(70.0, 21);
        // A kink in the first segment does not move the fit.
        p[0].point = [0.04, 0.025];
        let got = crack_angle(&p, 0).unwrap();
        assert!((got - 70.0).abs() < 1e-9);
    }

    #[test]
    fn initiation_is_first_advance() {
        let p = straight(45.0, 5);
        assert_eq!(initiation_time(&p), Some(1e-6));
        assert_eq!(initiation_time(&p[..1]), None);
    }

    #[test]
    fn bending_classification() {
        let notch = [0.04, 0.019];
        let mid = 0.1143;
        let depth_10 = 0.00762;
        let mut path = vec![
            pt(0, 0.0, notch[0], notch[1], 0.0, PathKind::Initial),
            pt(0, 1.0, notch[0], notch[1] + 0.004, 0.004, PathKind::Advance),
            pt(1, 1.0, mid, 0.0, 0.0, PathKind::Strength),
            pt(1, 2.0, mid, 0.02, 0.02, PathKind::Advance),
        ];
        let c = classify_bending(&path, notch, mid, 0.005, depth_10);
        assert_eq!(
            c,
            BendingPattern {
                mixed_mode: false,
                mode_one: true
            }
        );
        path.push(pt(0, 3.0, notch[0] + 0.005, notch[1] + 0.009, 0.0104, PathKind::Advance));
        let c = classify_bending(&path, notch, mid, 0.005, depth_10);
        assert!(c.mixed_mode && c.mode_one);
    }

    #[test]
    fn arc_turns_left() {
        // Quarter circle starting towards +x, bending up and back.
        let path: Vec<PathPoint> = (0..30)
            .map(|i| {
                let a = i as f64 / 29.0 * std::f64::consts::PI * 0.75;
                pt(0, i as f64, a.sin(), 1.0 - a.cos(), a, PathKind::Advance)
            })
            .collect();
        let t = path_turning(&path, 0).unwrap();
        assert!(t.monotone && t.turn > 0.0);
        assert!(t.turns_toward_negative_x());
        assert!(path_turning(&straight(0.0, 10), 0).map_or(true, |t| !t.turns_toward_negative_x()));
    }

    #[test]
    fn aspect_of_flat_path() {
        let p = straight(10.0, 10);
        let a = path_aspect(&p).unwrap();
        assert!((a - 1.0 / 10f64.to_radians().tan()).abs() < 1e-9);
    }

    #[test]
    fn table_round_trip() {
        let p = straight(33.0, 7);
        assert_eq!(parse_crack_path(&write_crack_path(&p)).unwrap(), p);
    }
}
