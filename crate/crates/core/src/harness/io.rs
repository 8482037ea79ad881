//! Trajectory CSV and JSON persistence.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::Trajectory;
use crate::world::{AgentAction, Pose};

pub const TRAJECTORY_HEADER: &str = "step,agent_id,x,y,theta,v,omega";

/// 17 significant digits: enough for an exact round trip.
fn real(out: &mut String, x: f64) {
    let _ = write!(out, "{x:.16e}");
}

pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(64 + traj.len() * traj.n_agents * 120);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for (step, frame) in traj.frames.iter().enumerate() {
        for (id, (p, a)) in frame.poses.iter().zip(&frame.actions).enumerate() {
            let _ = write!(out, "{step},{id},");
            for (k, x) in [p.x, p.y, p.theta, a.v, a.omega].into_iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                real(&mut out, x);
            }
            out.push('\n');
        }
    }
    out
}

pub fn trajectory_from_csv(text: &str) -> Result<Trajectory> {
    let mut lines = text.lines().enumerate();
    let header = lines.next().map(|(_, l)| l.trim()).unwrap_or("");
    if header != TRAJECTORY_HEADER {
        return Err(Error::TrajectoryParse {
            row: 1,
            message: format!("expected header `{TRAJECTORY_HEADER}`, found `{header}`"),
        });
    }
    let mut frames: Vec<(Vec<Pose>, Vec<AgentAction>)> = Vec::new();
    let mut n_agents: Option<usize> = None;
    for (idx, line) in lines {
        let row = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::TrajectoryParse { row, message };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 7 {
            return Err(err(format!("expected 7 fields, found {}", fields.len())));
        }
        let step: usize = fields[0]
            .parse()
            .map_err(|_| err(format!("bad step `{}`", fields[0])))?;
        let id: usize = fields[1]
            .parse()
            .map_err(|_| err(format!("bad agent_id `{}`", fields[1])))?;
        let mut vals = [0.0f64; 5];
        for (k, v) in vals.iter_mut().enumerate() {
            let s = fields[k + 2];
            *v = s.parse().map_err(|_| err(format!("bad number `{s}`")))?;
            if !v.is_finite() {
                return Err(err(format!("non-finite value `{s}`")));
            }
        }
        if step == frames.len() && id == 0 {
            if let Some(last) = frames.last() {
                let n = *n_agents.get_or_insert(last.0.len());
                if last.0.len() != n {
                    return Err(err(format!(
                        "step {} has {} agents, expected {n}",
                        step - 1,
                        last.0.len()
                    )));
                }
            }
            frames.push((Vec::new(), Vec::new()));
        }
        if step + 1 != frames.len() {
            return Err(err(format!("step {step} out of order")));
        }
        let Some(frame) = frames.last_mut() else {
            return Err(err(format!("step {step} out of order")));
        };
        if id != frame.0.len() || n_agents.is_some_and(|n| id >= n) {
            return Err(err(format!("agent_id {id} out of order")));
        }
        // stored theta is already wrapped; keep the exact bits
        frame.0.push(Pose {
            x: vals[0],
            y: vals[1],
            theta: vals[2],
        });
        frame.1.push(AgentAction {
            v: vals[3],
            omega: vals[4],
        });
    }
    let n = match (n_agents, frames.last()) {
        (Some(n), Some(last)) if last.0.len() != n => {
            return Err(Error::TrajectoryParse {
                row: text.lines().count(),
                message: format!("final step has {} agents, expected {n}", last.0.len()),
            })
        }
        (Some(n), _) => n,
        (None, Some(last)) => last.0.len(),
        (None, None) => 0,
    };
    let mut traj = Trajectory::new(n);
    for (poses, actions) in frames {
        traj.push(poses, actions);
    }
    Ok(traj)
}

pub fn write_trajectory(traj: &Trajectory, path: &Path) -> Result<()> {
    fs::write(path, trajectory_to_csv(traj)).map_err(|e| Error::io(path, e))
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    trajectory_from_csv(&text)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
