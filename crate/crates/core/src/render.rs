//! SVG scenes: wall cells as rectangles, one polyline per plan segment,
//! start/goal/waypoint markers. Accepted plans draw solid, discarded
//! candidates gray.

use crate::maze::{Cell, Maze, State};
use crate::plan::Plan;
use crate::tree::SearchTree;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlanStyle {
    Solution,
    Discarded,
    Dataset,
}

impl PlanStyle {
    fn stroke(self) -> &'static str {
        match self {
            PlanStyle::Solution => "#d62728",
            PlanStyle::Discarded => "#b5b5b5",
            PlanStyle::Dataset => "#9ecae1",
        }
    }

    fn width(self) -> f64 {
        match self {
            PlanStyle::Solution => 0.10,
            PlanStyle::Discarded => 0.04,
            PlanStyle::Dataset => 0.03,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TaggedPlan<'a> {
    pub plan: &'a Plan,
    pub style: PlanStyle,
}

/// Point markers drawn on top of the scene.
#[derive(Clone, Debug, Default)]
pub struct Markers {
    pub start: Option<State>,
    pub goal: Option<State>,
    /// Radius of the goal-tolerance ring, when a goal is drawn.
    pub eps_goal: Option<f64>,
    pub waypoints: Vec<State>,
}

fn push_polyline(out: &mut String, states: &[State], stroke: &str, width: f64) {
    out.push_str("  <polyline fill=\"none\" stroke=\"");
    out.push_str(stroke);
    out.push_str(&format!("\" stroke-width=\"{width}\" points=\""));
    for (i, s) in states.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&format!("{:.4},{:.4}", s.x, s.y));
    }
    out.push_str("\"/>\n");
}

/// Render a scene. One `<rect>` per wall cell, one `<polyline>` per plan
/// segment (per provenance marker); tree segments render in the discarded
/// style beneath the tagged plans.
pub fn render_svg(
    maze: &Maze,
    plans: &[TaggedPlan<'_>],
    tree: Option<&SearchTree>,
    markers: &Markers,
) -> String {
    let w = maze.world_width();
    let h = maze.world_height();
    let scale = 48.0;
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {h}\" width=\"{}\" height=\"{}\">\n",
        (w * scale) as usize,
        (h * scale) as usize
    ));
    out.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"#f7f5f2\"/>\n"
    ));
    let cs = maze.cell_size();
    for cy in 0..maze.height() {
        for cx in 0..maze.width() {
            if maze.cell(cx as i64, cy as i64) == Cell::Wall {
                out.push_str(&format!(
                    "  <rect x=\"{}\" y=\"{}\" width=\"{cs}\" height=\"{cs}\" fill=\"#3b3b3b\"/>\n",
                    cx as f64 * cs,
                    cy as f64 * cs
                ));
            }
        }
    }
    if let Some(tree) = tree {
        for node in tree.nodes() {
            let Some(parent) = node.parent else { continue };
            let from = tree.node(parent).plan.len().saturating_sub(1);
            let seg = &node.plan.states[from..];
            if seg.len() >= 2 {
                push_polyline(
                    &mut out,
                    seg,
                    PlanStyle::Discarded.stroke(),
                    PlanStyle::Discarded.width(),
                );
            }
        }
    }
    for tagged in plans {
        // one polyline per provenance segment; junction states repeat so
        // segments connect visually
        let mut offset = 0usize;
        if tagged.plan.provenance.is_empty() {
            continue;
        }
        for marker in &tagged.plan.provenance {
            let end = (offset + marker.steps).min(tagged.plan.states.len() - 1);
            let seg = &tagged.plan.states[offset..=end];
            if seg.len() >= 2 {
                push_polyline(&mut out, seg, tagged.style.stroke(), tagged.style.width());
            }
            offset = end;
        }
    }
    for wp in &markers.waypoints {
        out.push_str(&format!(
            "  <circle cx=\"{:.4}\" cy=\"{:.4}\" r=\"0.14\" fill=\"#1f77b4\"/>\n",
            wp.x, wp.y
        ));
    }
    if let Some(goal) = markers.goal {
        if let Some(eps) = markers.eps_goal {
            out.push_str(&format!(
                "  <circle cx=\"{:.4}\" cy=\"{:.4}\" r=\"{eps}\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"0.03\" stroke-dasharray=\"0.1,0.08\"/>\n",
                goal.x, goal.y
            ));
        }
        out.push_str(&format!(
            "  <circle cx=\"{:.4}\" cy=\"{:.4}\" r=\"0.16\" fill=\"#d62728\"/>\n",
            goal.x, goal.y
        ));
    }
    if let Some(start) = markers.start {
        out.push_str(&format!(
            "  <circle cx=\"{:.4}\" cy=\"{:.4}\" r=\"0.16\" fill=\"#2ca02c\"/>\n",
            start.x, start.y
        ));
    }
    out.push_str("</svg>\n");
    out
}
