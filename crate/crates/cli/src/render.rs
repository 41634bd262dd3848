//! Deterministic SVG drawings of a scenario and a planned path.

use std::fmt::Write as _;

use ariadne_core::cspace::Body;
use ariadne_core::geometry::{Capsule, Point, Shape};
use ariadne_core::scenario::Scenario;
use ariadne_core::RobotModel;

use crate::pathfile::PathFile;

/// Pixels per world unit.
const SCALE: f64 = 400.0;
/// Silhouettes drawn at most; waypoints are thinned evenly beyond this.
const MAX_SILHOUETTES: usize = 60;

fn px(v: f64) -> String {
    let s = format!("{:.2}", v * SCALE);
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

struct Canvas {
    out: String,
    min: Point,
    max_y: f64,
}

impl Canvas {
    fn x(&self, x: f64) -> String {
        px(x - self.min.x)
    }

    fn y(&self, y: f64) -> String {
        px(self.max_y - y)
    }

    fn capsule(&mut self, c: &Capsule, fill: &str, opacity: f64) {
        if c.a == c.b {
            let _ = writeln!(
                self.out,
                r#"<circle cx="{}" cy="{}" r="{}" fill="{fill}" fill-opacity="{opacity}"/>"#,
                self.x(c.a.x),
                self.y(c.a.y),
                px(c.radius)
            );
        } else {
            let _ = writeln!(
                self.out,
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{fill}" stroke-opacity="{opacity}" stroke-width="{}" stroke-linecap="round"/>"#,
                self.x(c.a.x),
                self.y(c.a.y),
                self.x(c.b.x),
                self.y(c.b.y),
                px(2.0 * c.radius)
            );
        }
    }

    fn shape(&mut self, s: &Shape, fill: &str) {
        match s {
            Shape::Capsule(c) => self.capsule(c, fill, 1.0),
            Shape::Box(b) => {
                let _ = writeln!(
                    self.out,
                    r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}"/>"#,
                    self.x(b.min.x),
                    self.y(b.max.y),
                    px(b.width()),
                    px(b.height())
                );
            }
        }
    }

    fn polyline(&mut self, points: &[Point], stroke: &str) {
        if points.len() < 2 {
            return;
        }
        let coords: Vec<String> = points
            .iter()
            .map(|p| format!("{},{}", self.x(p.x), self.y(p.y)))
            .collect();
        let _ = writeln!(
            self.out,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="2"/>"#,
            coords.join(" ")
        );
    }

    fn marker(&mut self, p: Point, fill: &str) {
        let _ = writeln!(
            self.out,
            r#"<circle cx="{}" cy="{}" r="3" fill="{fill}"/>"#,
            self.x(p.x),
            self.y(p.y)
        );
    }
}

/// The point traced by the path polyline: the disc centre of a mobile
/// robot or the tip of an arm.
fn tracer(robot: &RobotModel, q: &[f64]) -> Point {
    let g = robot.geometry(q);
    match robot.body() {
        Body::Mobile { .. } => g[0].a,
        Body::Arm { .. } => g.last().expect("arms have links").b,
    }
}

/// Draws obstacles, robot silhouettes along the path, landmark markers and
/// the traced polyline. Fails when `path` was planned for another scenario.
pub fn render(s: &Scenario, path: &PathFile) -> Result<String, String> {
    if path.scenario_hash != s.hash {
        return Err(format!(
            "path file was planned for scenario hash {}, this scenario hashes to {}",
            path.scenario_hash, s.hash
        ));
    }
    let dof = s.robot.dof();
    if let Some(bad) = path
        .waypoints
        .iter()
        .chain(path.landmarks.iter().map(|l| &l.configuration))
        .find(|q| q.len() != dof)
    {
        return Err(format!("configuration {bad:?} does not have {dof} values"));
    }
    let b = s.world.bounds();
    let mut c = Canvas {
        out: String::new(),
        min: b.min,
        max_y: b.max.y,
    };
    let _ = writeln!(
        c.out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = px(b.width()),
        h = px(b.height())
    );
    let _ = writeln!(c.out, "<title>{}</title>", escape(&s.name));
    let _ = writeln!(
        c.out,
        r##"<rect x="0" y="0" width="{}" height="{}" fill="#ffffff" stroke="#000000"/>"##,
        px(b.width()),
        px(b.height())
    );
    for shape in s.world.shapes() {
        c.shape(shape, "#555555");
    }

    let n = path.waypoints.len();
    let stride = n.div_ceil(MAX_SILHOUETTES).max(1);
    let mut shown: Vec<usize> = (0..n).step_by(stride).collect();
    if n > 0 && shown.last() != Some(&(n - 1)) {
        shown.push(n - 1);
    }
    if shown.is_empty() {
        shown.push(usize::MAX);
    }
    for i in shown {
        let (q, fill, opacity) = match i {
            usize::MAX => (&s.start.0, "#1f77b4", 0.6),
            i if i + 1 == n => (&path.waypoints[i], "#2ca02c", 0.8),
            i => (&path.waypoints[i], "#1f77b4", 0.25),
        };
        for cap in s.robot.geometry(q) {
            c.capsule(&cap, fill, opacity);
        }
    }
    for cap in s.robot.geometry(&s.goal) {
        if cap.a == cap.b {
            let _ = writeln!(
                c.out,
                r##"<circle cx="{}" cy="{}" r="{}" fill="none" stroke="#d62728" stroke-dasharray="4 2"/>"##,
                c.x(cap.a.x),
                c.y(cap.a.y),
                px(cap.radius)
            );
        } else {
            let _ = writeln!(
                c.out,
                r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#d62728" stroke-width="1" stroke-dasharray="4 2"/>"##,
                c.x(cap.a.x),
                c.y(cap.a.y),
                c.x(cap.b.x),
                c.y(cap.b.y)
            );
        }
    }
    let trace: Vec<Point> = path.waypoints.iter().map(|q| tracer(&s.robot, q)).collect();
    c.polyline(&trace, "#ff7f0e");
    for l in &path.landmarks {
        c.marker(tracer(&s.robot, &l.configuration), "#9467bd");
    }
    c.out.push_str("</svg>\n");
    Ok(c.out)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
