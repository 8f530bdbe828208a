//! Static SVG snapshots of a recorded trajectory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use swarm_core::discovery::{Phase, StepRecord};
use swarm_core::geometry::{self, Vec2};

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOptions {
    pub episode: usize,
    /// Also emit every `stride`-th step as its own frame.
    pub stride: Option<usize>,
    /// Draw a sensing ring of this radius around every robot.
    pub scan_radius: Option<f64>,
    /// Fill robots that are not mutually visible with every other robot.
    pub occlusion: bool,
    pub r_bot: f64,
    pub x_w: f64,
    pub y_w: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            episode: 0,
            stride: None,
            scan_radius: None,
            occlusion: false,
            r_bot: 1.0,
            x_w: 20.0,
            y_w: 20.0,
        }
    }
}

/// Picks the frames for one episode: the initial state, the last base step
/// and the last auxiliary step when present, plus strided steps.
pub fn select_frames<'a>(records: &'a [StepRecord], opts: &RenderOptions) -> Vec<(String, &'a StepRecord)> {
    let ep: Vec<&StepRecord> = records.iter().filter(|r| r.episode == opts.episode).collect();
    let mut frames = Vec::new();
    if let Some(first) = ep.iter().find(|r| r.phase == Phase::Initial) {
        frames.push(("initial".to_string(), *first));
    }
    if let Some(stride) = opts.stride.filter(|s| *s > 0) {
        for r in ep.iter().filter(|r| r.phase != Phase::Initial && r.step % stride == 0) {
            frames.push((format!("step_{:05}", r.step), *r));
        }
    }
    if let Some(last) = ep.iter().rev().find(|r| r.phase == Phase::Base) {
        frames.push(("base_final".to_string(), *last));
    }
    if let Some(last) = ep.iter().rev().find(|r| r.phase == Phase::Auxiliary) {
        frames.push(("aux_final".to_string(), *last));
    }
    frames
}

pub fn frame_svg(record: &StepRecord, opts: &RenderOptions) -> String {
    let pts: Vec<Vec2> = record.positions.iter().map(|p| Vec2::new(p[0], p[1])).collect();
    let (w, h) = (2.0 * opts.x_w, 2.0 * opts.y_w);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="600" height="{}">"#,
        -opts.x_w,
        -opts.y_w,
        w,
        h,
        (600.0 * h / w).round()
    );
    let _ = writeln!(
        s,
        r##"<rect x="{}" y="{}" width="{w}" height="{h}" fill="#ffffff" stroke="#888888" stroke-width="0.1"/>"##,
        -opts.x_w, -opts.y_w
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="1.2" font-family="monospace">episode {} step {} {:?}</text>"#,
        -opts.x_w + 0.5,
        -opts.y_w + 1.5,
        record.episode,
        record.step,
        record.phase
    );
    // Flip so +y points up.
    s.push_str("<g transform=\"scale(1,-1)\">\n");
    let _ = writeln!(s, r##"<path d="M -0.5 0 H 0.5 M 0 -0.5 V 0.5" stroke="#cc0000" stroke-width="0.1"/>"##);
    if let Some(r) = opts.scan_radius {
        for p in &pts {
            let _ = writeln!(
                s,
                r##"<circle class="scan" cx="{:.4}" cy="{:.4}" r="{r}" fill="none" stroke="#99bbdd" stroke-width="0.05" stroke-dasharray="0.3 0.3"/>"##,
                p.x, p.y
            );
        }
    }
    for (i, p) in pts.iter().enumerate() {
        let hidden = opts.occlusion
            && (0..pts.len()).any(|j| j != i && !geometry::mutually_visible(&pts, opts.r_bot, i, j).unwrap_or(false));
        let fill = if hidden { "#e0a040" } else { "#4070c0" };
        let _ = writeln!(
            s,
            r##"<circle class="robot" cx="{:.4}" cy="{:.4}" r="{}" fill="{fill}" stroke="#202020" stroke-width="0.05"/>"##,
            p.x, p.y, opts.r_bot
        );
    }
    s.push_str("</g>\n</svg>\n");
    s
}

/// Writes one SVG file per selected frame and returns their paths.
pub fn render(records: &[StepRecord], out_dir: &Path, opts: &RenderOptions) -> anyhow::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for (name, rec) in select_frames(records, opts) {
        let path = out_dir.join(format!("episode_{:03}_{name}.svg", opts.episode));
        std::fs::write(&path, frame_svg(rec, opts))?;
        written.push(path);
    }
    if written.is_empty() {
        anyhow::bail!("no records for episode {}", opts.episode);
    }
    Ok(written)
}
