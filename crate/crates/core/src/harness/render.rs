//! Static SVG snapshots.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimation::BeliefBank;
use crate::world::Pose;

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOptions {
    pub size_px: f64,
    pub r_body: f64,
    /// Heading tick length in world units.
    pub tick: f64,
    /// Agent whose beliefs and field of view are drawn.
    pub focus: Option<usize>,
    pub psi: f64,
    /// Confidence scale of covariance ellipses, in standard deviations.
    pub ellipse_sigma: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            size_px: 800.0,
            r_body: 1.0,
            tick: 4.0,
            focus: None,
            psi: 2.0 * PI,
            ellipse_sigma: 2.0,
        }
    }
}

struct View {
    cx: f64,
    cy: f64,
    scale: f64,
    half: f64,
}

impl View {
    fn fit(points: impl Iterator<Item = (f64, f64)>, size_px: f64, pad: f64) -> Self {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (x, y) in points {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 0.0, 0.0, 0.0);
        }
        let span = (x1 - x0).max(y1 - y0) + 2.0 * pad;
        Self {
            cx: 0.5 * (x0 + x1),
            cy: 0.5 * (y0 + y1),
            scale: size_px / span.max(1e-9),
            half: 0.5 * size_px,
        }
    }

    /// World to pixel; y points up in the world and down in SVG.
    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.half + (x - self.cx) * self.scale,
            self.half - (y - self.cy) * self.scale,
        )
    }
}

fn f(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

pub fn render_svg(poses: &[Pose], beliefs: Option<&BeliefBank>, opts: &RenderOptions) -> String {
    let pad = opts.r_body + opts.tick;
    let mut pts: Vec<(f64, f64)> = poses.iter().map(|p| (p.x, p.y)).collect();
    if let Some(bank) = beliefs {
        pts.extend(bank.alive().map(|(_, b)| (b.mean.x, b.mean.y)));
    }
    let view = View::fit(pts.into_iter(), opts.size_px, pad);
    let size = f(opts.size_px);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);

    if let Some(focus) = opts.focus.and_then(|i| poses.get(i)) {
        if opts.psi < 2.0 * PI {
            let reach = opts.size_px / view.scale;
            let (cx, cy) = view.px(focus.x, focus.y);
            let a0 = focus.theta - 0.5 * opts.psi;
            let a1 = focus.theta + 0.5 * opts.psi;
            let (x0, y0) = view.px(focus.x + reach * a0.cos(), focus.y + reach * a0.sin());
            let (x1, y1) = view.px(focus.x + reach * a1.cos(), focus.y + reach * a1.sin());
            let large = u8::from(opts.psi > PI);
            let r = f(reach * view.scale);
            let _ = writeln!(
                out,
                r##"<path class="fov" d="M {} {} L {} {} A {r} {r} 0 {large} 0 {} {} Z" fill="#f4d03f" fill-opacity="0.15" stroke="none"/>"##,
                f(cx),
                f(cy),
                f(x0),
                f(y0),
                f(x1),
                f(y1)
            );
        }
    }

    if let Some(bank) = beliefs {
        for (j, b) in bank.alive() {
            let (l0, l1) = b.cov.eigenvalues();
            // major axis direction
            let angle = if b.cov.xy.abs() < 1e-300 {
                if b.cov.xx >= b.cov.yy {
                    0.0
                } else {
                    90.0
                }
            } else {
                (l1 - b.cov.xx).atan2(b.cov.xy).to_degrees()
            };
            let (cx, cy) = view.px(b.mean.x, b.mean.y);
            let rx = opts.ellipse_sigma * l1.max(0.0).sqrt() * view.scale;
            let ry = opts.ellipse_sigma * l0.max(0.0).sqrt() * view.scale;
            let _ = writeln!(
                out,
                r##"<ellipse class="belief" data-id="{j}" cx="{}" cy="{}" rx="{}" ry="{}" transform="rotate({} {} {})" fill="none" stroke="#2e86c1" stroke-width="1"/>"##,
                f(cx),
                f(cy),
                f(rx.max(0.5)),
                f(ry.max(0.5)),
                f(-angle),
                f(cx),
                f(cy)
            );
        }
    }

    let r = f((opts.r_body * view.scale).max(1.0));
    for (i, p) in poses.iter().enumerate() {
        let (cx, cy) = view.px(p.x, p.y);
        let (tx, ty) = view.px(
            p.x + (opts.r_body + opts.tick) * p.theta.cos(),
            p.y + (opts.r_body + opts.tick) * p.theta.sin(),
        );
        let fill = if opts.focus == Some(i) { "#c0392b" } else { "#34495e" };
        let _ = writeln!(
            out,
            r#"<circle class="agent" data-id="{i}" cx="{}" cy="{}" r="{r}" fill="{fill}"/>"#,
            f(cx),
            f(cy)
        );
        let _ = writeln!(
            out,
            r#"<line class="heading" x1="{}" y1="{}" x2="{}" y2="{}" stroke="{fill}" stroke-width="1"/>"#,
            f(cx),
            f(cy),
            f(tx),
            f(ty)
        );
    }
    out.push_str("</svg>\n");
    out
}

pub fn render_snapshot(poses: &[Pose], beliefs: Option<&BeliefBank>, opts: &RenderOptions, path: &Path) -> Result<()> {
    fs::write(path, render_svg(poses, beliefs, opts)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circles(svg: &str) -> Vec<(f64, f64)> {
        svg.lines()
            .filter(|l| l.starts_with("<circle"))
            .map(|l| {
                let attr = |name: &str| -> f64 {
                    let start = l.find(&format!(" {name}=\"")).unwrap() + name.len() + 3;
                    let end = start + l[start..].find('"').unwrap();
                    l[start..end].parse().unwrap()
                };
                (attr("cx"), attr("cy"))
            })
            .collect()
    }

    #[test]
    fn single_agent_is_centered() {
        let svg = render_svg(&[Pose::new(0.0, 0.0, 0.0)], None, &RenderOptions::default());
        assert_eq!(circles(&svg), vec![(400.0, 400.0)]);
    }

    #[test]
    fn deterministic_bytes() {
        let poses: Vec<Pose> = (0..30)
            .map(|k| Pose::new(k as f64 * 3.1, (k as f64).sin() * 40.0, k as f64))
            .collect();
        let mut bank = BeliefBank::new(0, 30);
        bank.slots[3] = crate::estimation::NeighborBelief::new(
            crate::linalg::Vec2::new(5.0, 5.0),
            crate::linalg::Sym2::new(4.0, 1.0, 2.0),
            1.0,
        );
        let opts = RenderOptions {
            focus: Some(0),
            psi: PI / 2.0,
            ..RenderOptions::default()
        };
        let a = render_svg(&poses, Some(&bank), &opts);
        let b = render_svg(&poses, Some(&bank), &opts);
        assert_eq!(a, b);
        assert_eq!(a.matches("<ellipse").count(), 1);
        assert_eq!(a.matches("class=\"fov\"").count(), 1);
    }

    #[test]
    fn ring_layout_is_annular() {
        let n = 40;
        let poses: Vec<Pose> = (0..n)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / n as f64;
                Pose::new(50.0 * a.cos() + 7.0, 50.0 * a.sin() - 3.0, a + PI / 2.0)
            })
            .collect();
        let c = circles(&render_svg(&poses, None, &RenderOptions::default()));
        let (mx, my) = c
            .iter()
            .fold((0.0, 0.0), |(x, y), p| (x + p.0 / n as f64, y + p.1 / n as f64));
        let radii: Vec<f64> = c.iter().map(|p| (p.0 - mx).hypot(p.1 - my)).collect();
        let mean = radii.iter().sum::<f64>() / n as f64;
        let std = (radii.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!(std < 0.1 * mean);
    }
}
