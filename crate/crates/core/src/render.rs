//! SVG pictures of instances and covers under a gnomonic projection.
//!
//! Projection is for drawing only. Sky convention: north up, east (growing
//! RA) to the left.

use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::cover::Cover;
use crate::error::{Error, Result};
use crate::geometry::{angular_distance, gnomonic, move_on_sphere, SpherePoint};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layers {
    pub points: bool,
    pub discs: bool,
    /// Line from each relaxed assignee lying outside its disc to the center.
    pub segments: bool,
    /// Polyline through each disc's center per iteration.
    pub trajectories: bool,
}

impl Layers {
    /// Parses a comma list such as `points,discs`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Layers::default();
        for name in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match name {
                "points" => out.points = true,
                "discs" => out.discs = true,
                "segments" => out.segments = true,
                "trajectories" => out.trajectories = true,
                other => return Err(Error::InvalidInput(format!("unknown layer '{other}'"))),
            }
        }
        Ok(out)
    }

    pub fn any(&self) -> bool {
        self.points || self.discs || self.segments || self.trajectories
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderSpec {
    pub width: u32,
    pub height: u32,
    pub layers: Layers,
}

impl RenderSpec {
    pub fn new(width: u32, height: u32, layers: Layers) -> Result<Self> {
        if !layers.any() {
            return Err(Error::InvalidInput("at least one layer must be enabled".into()));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput("image size must be positive".into()));
        }
        Ok(Self { width, height, layers })
    }
}

/// What to draw. Layers whose data is missing are skipped.
#[derive(Clone, Copy, Debug)]
pub struct Scene<'a> {
    /// Projection center.
    pub center: SpherePoint,
    pub points: &'a [SpherePoint],
    pub cover: Option<&'a Cover>,
    /// Disc per point, parallel to `points`.
    pub relaxed: Option<&'a [Option<usize>]>,
    /// Disc centers per iteration; disc `j` is entry `j` of every step.
    pub trajectory: Option<&'a [Vec<SpherePoint>]>,
}

const MARGIN: f64 = 10.0;
const DOT: f64 = 1.5;

struct Frame {
    center: SpherePoint,
    scale: f64,
    x0: f64,
    y0: f64,
}

impl Frame {
    fn fit(scene: &Scene, spec: &RenderSpec) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        let mut take = |p: SpherePoint| {
            if let Some((x, y)) = gnomonic(scene.center, p) {
                let x = -x;
                lo = [lo[0].min(x), lo[1].min(y)];
                hi = [hi[0].max(x), hi[1].max(y)];
            }
        };
        scene.points.iter().for_each(|&p| take(p));
        if let Some(cover) = scene.cover {
            for d in &cover.discs {
                for p in rim(d.center, d.radius, 8) {
                    take(p);
                }
            }
        }
        if let Some(steps) = scene.trajectory {
            steps.iter().flatten().for_each(|&p| take(p));
        }
        if !lo[0].is_finite() {
            lo = [-1e-3; 2];
            hi = [1e-3; 2];
        }
        let span = [(hi[0] - lo[0]).max(1e-9), (hi[1] - lo[1]).max(1e-9)];
        let room = [
            (spec.width as f64 - 2.0 * MARGIN).max(1.0),
            (spec.height as f64 - 2.0 * MARGIN).max(1.0),
        ];
        let scale = (room[0] / span[0]).min(room[1] / span[1]);
        // center the drawing in the canvas
        let x0 = MARGIN + (room[0] - span[0] * scale) / 2.0 - lo[0] * scale;
        let y0 = MARGIN + (room[1] - span[1] * scale) / 2.0 + hi[1] * scale;
        Self {
            center: scene.center,
            scale,
            x0,
            y0,
        }
    }

    fn project(&self, p: SpherePoint) -> Option<(f64, f64)> {
        gnomonic(self.center, p).map(|(x, y)| (self.x0 - x * self.scale, self.y0 - y * self.scale))
    }
}

/// `n` points on the boundary circle of a cap.
fn rim(center: SpherePoint, radius: f64, n: usize) -> Vec<SpherePoint> {
    let (east, north) = center.tangent_basis();
    (0..n)
        .filter_map(|k| {
            let (s, c) = (std::f64::consts::TAU * k as f64 / n as f64).sin_cos();
            let dir = [0, 1, 2].map(|i| c * east[i] + s * north[i]);
            move_on_sphere(center, dir, radius).ok()
        })
        .collect()
}

pub fn render_svg<W: Write>(spec: &RenderSpec, scene: &Scene, mut out: W) -> Result<()> {
    let frame = Frame::fit(scene, spec);
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = spec.width,
        h = spec.height
    );
    let layers = spec.layers;

    if layers.segments {
        if let (Some(cover), Some(relaxed)) = (scene.cover, scene.relaxed) {
            let _ = writeln!(svg, r##"<g id="segments" stroke="#c03030" stroke-width="0.6">"##);
            for (p, d) in scene.points.iter().zip(relaxed) {
                let Some(disc) = d.and_then(|d| cover.discs.get(d)) else {
                    continue;
                };
                if angular_distance(disc.center, *p) <= disc.radius {
                    continue;
                }
                if let (Some(a), Some(b)) = (frame.project(*p), frame.project(disc.center)) {
                    let _ = writeln!(
                        svg,
                        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
                        a.0, a.1, b.0, b.1
                    );
                }
            }
            let _ = writeln!(svg, "</g>");
        }
    }
    if layers.points {
        let _ = writeln!(svg, r##"<g id="points" fill="#202020">"##);
        for p in scene.points {
            if let Some((x, y)) = frame.project(*p) {
                let _ = writeln!(
                    svg,
                    r#"<rect x="{:.2}" y="{:.2}" width="{DOT}" height="{DOT}"/>"#,
                    x - DOT / 2.0,
                    y - DOT / 2.0
                );
            }
        }
        let _ = writeln!(svg, "</g>");
    }
    if layers.trajectories {
        if let Some(steps) = scene.trajectory {
            let _ = writeln!(
                svg,
                r##"<g id="trajectories" fill="none" stroke="#2060c0" stroke-width="0.8">"##
            );
            let discs = steps.iter().map(Vec::len).max().unwrap_or(0);
            for j in 0..discs {
                let pts: Vec<String> = steps
                    .iter()
                    .filter_map(|s| s.get(j))
                    .filter_map(|&c| frame.project(c))
                    .map(|(x, y)| format!("{x:.2},{y:.2}"))
                    .collect();
                if pts.len() >= 2 {
                    let _ = writeln!(svg, r#"<polyline points="{}"/>"#, pts.join(" "));
                }
            }
            let _ = writeln!(svg, "</g>");
        }
    }
    if layers.discs {
        if let Some(cover) = scene.cover {
            let _ = writeln!(svg, r##"<g id="discs" fill="none" stroke="#208040" stroke-width="1">"##);
            for d in &cover.discs {
                let Some((cx, cy)) = frame.project(d.center) else {
                    continue;
                };
                // the image of a cap is an ellipse; draw the circle of mean radius
                let rim: Vec<(f64, f64)> = rim(d.center, d.radius, 8)
                    .into_iter()
                    .filter_map(|p| frame.project(p))
                    .collect();
                if rim.is_empty() {
                    continue;
                }
                let r = rim.iter().map(|(x, y)| (x - cx).hypot(y - cy)).sum::<f64>() / rim.len() as f64;
                let _ = writeln!(svg, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{r:.2}"/>"#);
            }
            let _ = writeln!(svg, "</g>");
        }
    }
    let _ = writeln!(svg, "</svg>");
    out.write_all(svg.as_bytes())?;
    Ok(())
}

/// Writes `iteration,disc,ra_deg,dec_deg` rows.
pub fn write_trajectory_csv<W: Write>(steps: &[Vec<SpherePoint>], mut out: W) -> Result<()> {
    writeln!(out, "iteration,disc,ra_deg,dec_deg")?;
    for (it, centers) in steps.iter().enumerate() {
        for (j, c) in centers.iter().enumerate() {
            let (ra, dec) = c.to_ra_dec();
            writeln!(out, "{it},{j},{ra},{dec}")?;
        }
    }
    Ok(())
}

pub fn read_trajectory_csv<R: Read>(input: R) -> Result<Vec<Vec<SpherePoint>>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut steps: Vec<Vec<SpherePoint>> = Vec::new();
    for (row, record) in reader.deserialize::<(usize, usize, f64, f64)>().enumerate() {
        let bad = |m: String| Error::CatalogParse {
            line: row as u64 + 2,
            message: m,
        };
        let (it, disc, ra, dec) = record.map_err(|e| bad(e.to_string()))?;
        if it > steps.len() || (it == steps.len()) == (disc != 0) || (it < steps.len() && disc != steps[it].len()) {
            return Err(bad("rows must be ordered by iteration, then disc".into()));
        }
        if it == steps.len() {
            steps.push(Vec::new());
        }
        steps[it].push(SpherePoint::from_ra_dec(ra, dec)?);
    }
    Ok(steps)
}
