//! The simulation loop.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{select_action, AgentModel};
use crate::error::{Error, Result};
use crate::estimation::{BankDiagnostics, BeliefBank, EgoBelief};
use crate::harness::config::SimParams;
use crate::metrics::{compute_metrics, MetricsConfig, MetricsReport, Trajectory};
use crate::world::{init_world, observe_all, step_world, AgentAction, Pose, WorldState};

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "COHORT_WORKERS";

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Worker count from [`WORKERS_ENV`], if set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs `f` on a dedicated pool of `workers` threads, or on the global pool.
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match workers {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}

#[derive(Debug, Clone)]
struct AgentState {
    bank: BeliefBank,
    ego: EgoBelief,
    action: AgentAction,
}

/// Stepwise simulation: beliefs and previous actions for every agent on top
/// of the ground-truth world.
#[derive(Debug, Clone)]
pub struct Simulation {
    params: SimParams,
    model: AgentModel,
    world: WorldState,
    agents: Vec<AgentState>,
    diagnostics: BankDiagnostics,
}

impl Simulation {
    pub fn new(params: &SimParams) -> Result<Self> {
        let world = init_world(params, params.seed)?;
        Self::from_world(params, world)
    }

    /// Starts from explicit poses instead of the seeded random placement.
    pub fn with_poses(params: &SimParams, poses: Vec<Pose>) -> Result<Self> {
        params.validate()?;
        if poses.len() != params.n_agents {
            return Err(Error::DimensionMismatch {
                expected: params.n_agents,
                actual: poses.len(),
            });
        }
        let world = WorldState {
            step: 0,
            poses,
            seed: params.seed,
        };
        Self::from_world(params, world)
    }

    fn from_world(params: &SimParams, world: WorldState) -> Result<Self> {
        let start = AgentAction::new(params.v_init, 0.0)
            .clamped(params.v_max, params.omega_max)
            .with_min_speed(params.v_min);
        let agents = world
            .poses
            .iter()
            .enumerate()
            .map(|(i, p)| AgentState {
                bank: BeliefBank::new(i, params.n_agents),
                ego: EgoBelief::exact(*p),
                action: start,
            })
            .collect();
        Ok(Self {
            params: params.clone(),
            model: params.model(),
            world,
            agents,
            diagnostics: BankDiagnostics::default(),
        })
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn bank(&self, agent: usize) -> &BeliefBank {
        &self.agents[agent].bank
    }

    pub fn ego(&self, agent: usize) -> &EgoBelief {
        &self.agents[agent].ego
    }

    /// Cumulative estimator diagnostics.
    pub fn diagnostics(&self) -> &BankDiagnostics {
        &self.diagnostics
    }

    /// Perception, estimation and action selection for every agent against
    /// the current snapshot. Returns the chosen actions without moving.
    pub fn decide(&mut self) -> Result<Vec<AgentAction>> {
        let world = &self.world;
        let params = &self.params;
        let model = &self.model;
        let est = model.estimator;
        let results: Vec<Result<BankDiagnostics>> = self
            .agents
            .par_iter_mut()
            .enumerate()
            .map(|(i, agent)| {
                let numerical = |message: String| Error::Numerical {
                    step: world.step,
                    agent: i,
                    message,
                };
                agent.ego = EgoBelief {
                    mean: world.poses[i],
                    ..agent.ego
                };
                let obs = observe_all(world, i, params).map_err(|e| numerical(e.to_string()))?;
                let diag = agent
                    .bank
                    .step(&obs, &agent.ego, &est, params.dt)
                    .map_err(|e| numerical(e.to_string()))?;
                let sel = select_action(agent.action, &agent.ego, &agent.bank, model);
                if !(sel.action.v.is_finite() && sel.action.omega.is_finite()) {
                    return Err(numerical("non-finite action".into()));
                }
                agent.action = sel.action;
                Ok(diag)
            })
            .collect();
        for r in results {
            self.diagnostics.merge(&r?);
        }
        Ok(self.agents.iter().map(|a| a.action).collect())
    }

    /// Moves the world with the actions from [`Self::decide`].
    pub fn advance(&mut self, actions: &[AgentAction]) -> Result<()> {
        let next = step_world(&self.world, actions, &self.params)?;
        if let Some(i) = next
            .poses
            .iter()
            .position(|p| !(p.x.is_finite() && p.y.is_finite() && p.theta.is_finite()))
        {
            return Err(Error::Numerical {
                step: self.world.step,
                agent: i,
                message: "non-finite pose".into(),
            });
        }
        for (agent, a) in self.agents.iter_mut().zip(actions) {
            agent.ego = crate::estimation::propagate_ego(&agent.ego, *a, self.params.dt, self.params.q_ego);
        }
        self.world = next;
        Ok(())
    }

    /// One full step; returns the pre-step poses and the actions taken.
    pub fn step(&mut self) -> Result<(Vec<Pose>, Vec<AgentAction>)> {
        let poses = self.world.poses.clone();
        let actions = self.decide()?;
        self.advance(&actions)?;
        Ok((poses, actions))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub params: SimParams,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trajectory_path: Option<String>,
    pub metrics: MetricsReport,
    pub diagnostics: BankDiagnostics,
    pub wall_time_s: f64,
    pub version: String,
}

/// Full run. Returns the record and the in-memory trajectory.
pub fn run_simulation(params: &SimParams, workers: Option<usize>) -> Result<(RunRecord, Trajectory)> {
    let start = Instant::now();
    let (traj, diagnostics) = with_workers(workers, || -> Result<_> {
        let mut sim = Simulation::new(params)?;
        let mut traj = Trajectory::new(params.n_agents);
        traj.seed = params.seed;
        traj.params = Some(params.clone());
        for _ in 0..params.steps {
            let (poses, actions) = sim.step()?;
            traj.push(poses, actions);
        }
        Ok((traj, sim.diagnostics))
    })?;
    let metrics = compute_metrics(&traj, &MetricsConfig::from(params));
    let record = RunRecord {
        params: params.clone(),
        trajectory_path: None,
        metrics,
        diagnostics,
        wall_time_s: start.elapsed().as_secs_f64(),
        version: VERSION.to_string(),
    };
    Ok((record, traj))
}
