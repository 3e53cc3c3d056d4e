//! Static SVG figure: projected sample paths plus 2σ ellipses of the
//! initial, target and empirical terminal covariances.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen, Vector2};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 520.0;
const MARGIN: f64 = 56.0;
/// Sample paths drawn at most.
pub const MAX_PATHS: usize = 80;

pub struct Ellipse<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub mean: &'a DVector<f64>,
    pub cov: &'a DMatrix<f64>,
}

/// Points on `{μ + 2 C^{1/2} (cos t, sin t)}` for the `(i, j)` projection.
fn ellipse_points(mean: &DVector<f64>, cov: &DMatrix<f64>, (i, j): (usize, usize)) -> Vec<Vector2<f64>> {
    let c = Matrix2::new(cov[(i, i)], cov[(i, j)], cov[(j, i)], cov[(j, j)]);
    let eig = SymmetricEigen::new(c);
    let axes = eig.eigenvectors * Matrix2::from_diagonal(&eig.eigenvalues.map(|l| 2.0 * l.max(0.0).sqrt()));
    let centre = Vector2::new(mean[i], mean[j]);
    (0..=96)
        .map(|t| {
            let a = t as f64 / 96.0 * std::f64::consts::TAU;
            centre + axes * Vector2::new(a.cos(), a.sin())
        })
        .collect()
}

struct Frame {
    lo: Vector2<f64>,
    hi: Vector2<f64>,
}

impl Frame {
    fn fit(points: impl Iterator<Item = Vector2<f64>>) -> Self {
        let mut lo = Vector2::repeat(f64::INFINITY);
        let mut hi = Vector2::repeat(f64::NEG_INFINITY);
        for p in points {
            lo = lo.inf(&p);
            hi = hi.sup(&p);
        }
        if !lo.iter().chain(hi.iter()).all(|v| v.is_finite()) {
            lo = Vector2::repeat(-1.0);
            hi = Vector2::repeat(1.0);
        }
        let pad = (hi - lo).map(|d| if d > 0.0 { 0.05 * d } else { 1.0 });
        Self {
            lo: lo - pad,
            hi: hi + pad,
        }
    }

    fn map(&self, p: &Vector2<f64>) -> (f64, f64) {
        let sx = (WIDTH - 2.0 * MARGIN) / (self.hi.x - self.lo.x);
        let sy = (HEIGHT - 2.0 * MARGIN) / (self.hi.y - self.lo.y);
        (MARGIN + (p.x - self.lo.x) * sx, HEIGHT - MARGIN - (p.y - self.lo.y) * sy)
    }
}

fn polyline(out: &mut String, frame: &Frame, pts: &[Vector2<f64>], style: &str) {
    out.push_str("<polyline fill=\"none\" ");
    out.push_str(style);
    out.push_str(" points=\"");
    for p in pts {
        let (x, y) = frame.map(p);
        let _ = write!(out, "{x:.2},{y:.2} ");
    }
    out.push_str("\"/>\n");
}

/// `paths` are state sequences; only the first [`MAX_PATHS`] are drawn.
pub fn render(paths: &[Vec<DVector<f64>>], ellipses: &[Ellipse<'_>], axes: (usize, usize), title: &str) -> String {
    let (i, j) = axes;
    let projected: Vec<Vec<Vector2<f64>>> = paths
        .iter()
        .take(MAX_PATHS)
        .map(|p| p.iter().map(|x| Vector2::new(x[i], x[j])).collect())
        .collect();
    let rings: Vec<Vec<Vector2<f64>>> = ellipses.iter().map(|e| ellipse_points(e.mean, e.cov, axes)).collect();
    let frame = Frame::fit(projected.iter().flatten().chain(rings.iter().flatten()).copied());

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let _ = writeln!(s, "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{title}</text>", WIDTH / 2.0);
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">x[{i}]</text>", WIDTH / 2.0, HEIGHT - 12.0);
    let _ = writeln!(
        s,
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">x[{j}]</text>",
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for (k, (lo, hi)) in [(frame.lo.x, frame.hi.x), (frame.lo.y, frame.hi.y)].into_iter().enumerate() {
        for t in 0..=4 {
            let v = lo + (hi - lo) * t as f64 / 4.0;
            let (x, y) = if k == 0 {
                let (x, _) = frame.map(&Vector2::new(v, frame.lo.y));
                (x, HEIGHT - MARGIN + 16.0)
            } else {
                let (_, y) = frame.map(&Vector2::new(frame.lo.x, v));
                (MARGIN - 6.0, y + 4.0)
            };
            let anchor = if k == 0 { "middle" } else { "end" };
            let _ = writeln!(s, "<text x=\"{x:.2}\" y=\"{y:.2}\" text-anchor=\"{anchor}\">{v:.3}</text>");
        }
    }
    for p in &projected {
        polyline(&mut s, &frame, p, "stroke=\"#7f7f7f\" stroke-opacity=\"0.35\" stroke-width=\"0.8\"");
    }
    for (e, ring) in ellipses.iter().zip(&rings) {
        polyline(&mut s, &frame, ring, &format!("stroke=\"{}\" stroke-width=\"2\"", e.color));
    }
    for (n, e) in ellipses.iter().enumerate() {
        let y = MARGIN + 16.0 + 16.0 * n as f64;
        let x = WIDTH - MARGIN - 150.0;
        let _ = writeln!(s, "<line x1=\"{x}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>", y - 4.0, x + 20.0, y - 4.0, e.color);
        let _ = writeln!(s, "<text x=\"{}\" y=\"{y}\">{}</text>", x + 26.0, e.label);
    }
    s.push_str("</svg>\n");
    s
}
