//! SVG pictures of two-dimensional folded templates: cone facets with their
//! normals, the chart image of every region, and fold walls (dashed).

use std::fmt::Write;

use thiserror::Error;

use foldkit_core::lattice::FoldedTemplate;

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("only 2-dimensional templates can be rendered (got dimension {0})")]
    DimensionUnsupported(usize),
}

const SIZE: f64 = 480.0;
const GRID: usize = 40;
const PALETTE: [&str; 6] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"];

struct View {
    lo: [f64; 2],
    hi: [f64; 2],
}

impl View {
    fn fit(points: &[[f64; 2]]) -> View {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        for k in 0..2 {
            if !lo[k].is_finite() {
                lo[k] = -1.0;
                hi[k] = 1.0;
            }
            let pad = ((hi[k] - lo[k]) * 0.15).max(0.25);
            lo[k] -= pad;
            hi[k] += pad;
        }
        // Equal scales on both axes.
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        for k in 0..2 {
            let mid = (lo[k] + hi[k]) / 2.0;
            lo[k] = mid - span / 2.0;
            hi[k] = mid + span / 2.0;
        }
        View { lo, hi }
    }

    fn span(&self) -> f64 {
        self.hi[0] - self.lo[0]
    }

    fn px(&self, p: [f64; 2]) -> (f64, f64) {
        let s = SIZE / self.span();
        ((p[0] - self.lo[0]) * s, SIZE - (p[1] - self.lo[1]) * s)
    }
}

fn grid_points(lo: (f64, f64), hi: (f64, f64)) -> impl Iterator<Item = [f64; 2]> {
    (0..=GRID).flat_map(move |i| {
        (0..=GRID).map(move |j| {
            [lo.0 + (hi.0 - lo.0) * i as f64 / GRID as f64, lo.1 + (hi.1 - lo.1) * j as f64 / GRID as f64]
        })
    })
}

// Zeros of a wall function along the grid lines of the region's box.
fn wall_points(t: &FoldedTemplate, wall: usize, region: usize) -> Vec<[f64; 2]> {
    let w = &t.fold_walls[wall];
    let d = &t.regions[region].domain;
    let b = d.bounds();
    let h = |p: [f64; 2]| w.value(&p);
    let mut out = Vec::new();
    for axis in 0..2 {
        let other = 1 - axis;
        for i in 0..=GRID {
            let fixed = b[other].0 + (b[other].1 - b[other].0) * i as f64 / GRID as f64;
            let at = |s: f64| {
                let mut p = [0.0; 2];
                p[axis] = s;
                p[other] = fixed;
                p
            };
            let step = (b[axis].1 - b[axis].0) / GRID as f64;
            for j in 0..GRID {
                let (mut a, mut c) = (b[axis].0 + step * j as f64, b[axis].0 + step * (j + 1) as f64);
                let (Some(mut ha), Some(hc)) = (h(at(a)), h(at(c))) else { continue };
                if ha == 0.0 {
                    out.push(at(a));
                    continue;
                }
                if ha * hc > 0.0 {
                    continue;
                }
                for _ in 0..60 {
                    let m = (a + c) / 2.0;
                    let Some(hm) = h(at(m)) else { break };
                    if ha * hm <= 0.0 {
                        c = m;
                    } else {
                        a = m;
                        ha = hm;
                    }
                }
                out.push(at((a + c) / 2.0));
            }
        }
    }
    out.retain(|p| d.bounds().iter().zip(p).all(|((lo, hi), x)| *x >= lo - 1e-12 && *x <= hi + 1e-12));
    out
}

fn image(t: &FoldedTemplate, region: usize, p: &[f64; 2]) -> Option<[f64; 2]> {
    let v = t.regions[region].chart.eval(p).ok()?;
    (v[0].is_finite() && v[1].is_finite()).then_some([v[0], v[1]])
}

/// Deterministic SVG picture of a 2-dimensional template.
pub fn render_template(t: &FoldedTemplate) -> Result<String, RenderError> {
    if t.dim != 2 {
        return Err(RenderError::DimensionUnsupported(t.dim));
    }
    let mut images: Vec<Vec<[f64; 2]>> = Vec::new();
    let mut all = Vec::new();
    for (r, region) in t.regions.iter().enumerate() {
        let b = region.domain.bounds();
        let pts: Vec<[f64; 2]> = grid_points(b[0], b[1])
            .filter(|p| region.domain.contains(p, 1e-9))
            .filter_map(|p| image(t, r, &p))
            .collect();
        all.extend(pts.iter().copied());
        let a = region.cone.apex_f64();
        all.push([a[0], a[1]]);
        images.push(pts);
    }
    let mut walls: Vec<Vec<[f64; 2]>> = Vec::new();
    for (w, wall) in t.fold_walls.iter().enumerate() {
        let Some(r) = t.regions.iter().position(|reg| reg.id == wall.regions.0) else { continue };
        let mut pts: Vec<[f64; 2]> = wall_points(t, w, r).iter().filter_map(|p| image(t, r, p)).collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        pts.dedup_by(|a, b| (a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9);
        walls.push(pts);
    }
    let view = View::fit(&all);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(s, r#"<defs><clipPath id="frame"><rect x="0" y="0" width="{SIZE}" height="{SIZE}"/></clipPath>"#);
    let _ = writeln!(
        s,
        r#"<marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="6" markerHeight="6" orient="auto"><path d="M0,0 L10,5 L0,10 z"/></marker></defs>"#
    );
    let _ = writeln!(s, r##"<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="#ffffff"/>"##);
    let _ = writeln!(s, r#"<g clip-path="url(#frame)">"#);

    for (r, pts) in images.iter().enumerate() {
        let color = PALETTE[r % PALETTE.len()];
        let _ = writeln!(s, r#"<g class="region" data-id="{}" fill="{color}" fill-opacity="0.35">"#, t.regions[r].id);
        for p in pts {
            let (x, y) = view.px(*p);
            let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2"/>"#);
        }
        let _ = writeln!(s, "</g>");
    }

    let len = view.span() * 2.0;
    for (r, region) in t.regions.iter().enumerate() {
        let color = PALETTE[r % PALETTE.len()];
        let a = region.cone.apex_f64();
        let apex = [a[0], a[1]];
        let normals: Vec<[f64; 2]> = (0..region.cone.normals.nrows())
            .map(|i| {
                let v = region.cone.normals.row_f64(i);
                [v[0], v[1]]
            })
            .collect();
        for (i, v) in normals.iter().enumerate() {
            let d = [-v[1], v[0]];
            let (x1, y1) = view.px([apex[0] - len * d[0], apex[1] - len * d[1]]);
            let (x2, y2) = view.px([apex[0] + len * d[0], apex[1] + len * d[1]]);
            let _ = writeln!(
                s,
                r#"<line class="facet" x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{color}" stroke-width="2"/>"#
            );
            // Anchor the normal on the half of the facet line inside the cone.
            let inside = |q: [f64; 2]| {
                normals.iter().enumerate().all(|(j, n)| j == i || n[0] * (q[0] - apex[0]) + n[1] * (q[1] - apex[1]) >= -1e-12)
            };
            let reach = view.span() * 0.25;
            let forward = [apex[0] + reach * d[0], apex[1] + reach * d[1]];
            let base = if inside(forward) { forward } else { [apex[0] - reach * d[0], apex[1] - reach * d[1]] };
            let norm = (v[0] * v[0] + v[1] * v[1]).sqrt();
            let tip = [base[0] + 0.12 * view.span() * v[0] / norm, base[1] + 0.12 * view.span() * v[1] / norm];
            let (bx, by) = view.px(base);
            let (tx, ty) = view.px(tip);
            let _ = writeln!(
                s,
                r##"<line class="normal" x1="{bx:.2}" y1="{by:.2}" x2="{tx:.2}" y2="{ty:.2}" stroke="#000000" stroke-width="1.5" marker-end="url(#arrow)"/>"##
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-family="monospace" font-size="12">({}, {})</text>"#,
                tx + 4.0,
                ty - 4.0,
                region.cone.normals.get(i, 0),
                region.cone.normals.get(i, 1)
            );
        }
    }

    for pts in &walls {
        if pts.is_empty() {
            continue;
        }
        let path: Vec<String> = pts
            .iter()
            .map(|p| {
                let (x, y) = view.px(*p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            s,
            r##"<polyline class="fold-wall" points="{}" fill="none" stroke="#222222" stroke-width="2.5" stroke-dasharray="8 5"/>"##,
            path.join(" ")
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, "</svg>");
    Ok(s)
}
