//! Toy continuous-control tasks with scripted experts. Velocity-integrator
//! point mass, additive Gaussian process noise, success latching. The tasks
//! are sized so behavioral cloning from a handful of demos visibly compounds
//! errors that local search can still recover from.

mod demo_io;
mod tasks;
#[cfg(test)]
mod tests;

pub use demo_io::{load_demos, save_demos, DemoSet};
pub use tasks::{expert_action, registry, task_by_name, TaskKind};

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::rng;

pub const DT: f32 = 0.1;
pub const ACCEL: f32 = 4.0;
pub const V_MAX: f32 = 1.0;

pub type Obs = Vec<f32>;
pub type Action = Vec<f32>;

#[derive(Clone, Debug, PartialEq)]
pub struct TaskSpec {
    pub name: String,
    pub d_o: usize,
    pub d_a: usize,
    pub horizon: usize,
    pub process_noise_std: f32,
    pub success_desc: String,
}

#[derive(Clone, Debug)]
pub struct Transition {
    pub obs: Obs,
    pub action: Action,
    /// 1 while the episode continues, 0 on the final transition.
    pub continuation: bool,
    /// Latched task success as of the post-action state.
    pub success: bool,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub transitions: Vec<Transition>,
    pub final_obs: Obs,
    pub success: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// Observation stream o_0..o_T (transitions plus the final observation).
    pub fn obs_at(&self, t: usize) -> &Obs {
        if t < self.transitions.len() {
            &self.transitions[t].obs
        } else {
            assert_eq!(t, self.transitions.len(), "obs index out of range");
            &self.final_obs
        }
    }
}

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("unknown task name {0}")]
    UnknownTask(String),
    #[error("step after episode termination")]
    SteppedWhenDone,
    #[error("non-finite action component")]
    BadAction,
    #[error("expert failed to collect {want} demos within {attempts} attempts")]
    DemoBudget { want: usize, attempts: usize },
}

/// Single-owner environment state machine. Physical state is a point mass
/// with clamped velocity; position receives additive Gaussian process noise.
pub struct Env {
    pub kind: TaskKind,
    pub spec: TaskSpec,
    pub pos: [f32; 2],
    pub vel: [f32; 2],
    pub goal: [f32; 2],
    t: usize,
    done: bool,
    succeeded: bool,
    noise_rng: ChaCha8Rng,
}

impl Env {
    /// Deterministic reset: initial state and the episode's process-noise
    /// stream both derive from `seed`.
    pub fn reset(task: &TaskSpec, seed: u64) -> Result<(Env, Obs), EnvError> {
        let kind = TaskKind::from_name(&task.name)?;
        let mut init_rng = rng::derive(seed, &[rng::tag("env-init"), rng::tag(&task.name)]);
        let noise_rng = rng::derive(seed, &[rng::tag("env-noise"), rng::tag(&task.name)]);
        let (pos, goal) = kind.sample_initial(&mut init_rng);
        let env = Env {
            kind,
            spec: task.clone(),
            pos,
            vel: [0.0, 0.0],
            goal,
            t: 0,
            done: false,
            succeeded: false,
            noise_rng,
        };
        let obs = env.observe();
        Ok((env, obs))
    }

    pub fn observe(&self) -> Obs {
        self.kind.observe(self)
    }

    pub fn steps(&self) -> usize {
        self.t
    }

    pub fn done(&self) -> bool {
        self.done
    }

    pub fn succeeded(&self) -> bool {
        self.succeeded
    }

    /// Advance one step. Actions are clamped to [-1,1] per component.
    /// Returns (obs, continuation, success); success latches and terminates.
    pub fn step(&mut self, action: &[f32]) -> Result<(Obs, bool, bool), EnvError> {
        if self.done {
            return Err(EnvError::SteppedWhenDone);
        }
        if action.iter().any(|a| !a.is_finite()) {
            return Err(EnvError::BadAction);
        }
        let ax = action[0].clamp(-1.0, 1.0);
        let ay = action[1].clamp(-1.0, 1.0);
        self.vel[0] = (self.vel[0] + ax * ACCEL * DT).clamp(-V_MAX, V_MAX);
        self.vel[1] = (self.vel[1] + ay * ACCEL * DT).clamp(-V_MAX, V_MAX);
        let sigma = self.spec.process_noise_std;
        self.pos[0] += self.vel[0] * DT + sigma * rng::randn(&mut self.noise_rng);
        self.pos[1] += self.vel[1] * DT + sigma * rng::randn(&mut self.noise_rng);
        self.t += 1;

        if self.kind.failed(self) {
            self.done = true;
        } else if self.kind.succeeded(self) {
            self.succeeded = true;
            self.done = true;
        } else if self.t >= self.spec.horizon {
            self.done = true;
        }
        Ok((self.observe(), !self.done, self.succeeded))
    }

    pub fn expert_action(&self) -> Action {
        tasks::expert_action(self)
    }
}

pub fn clamp_action(a: &mut [f32]) {
    for v in a {
        *v = v.clamp(-1.0, 1.0);
    }
}

/// Roll the scripted expert with optional action-perturbation noise.
pub fn expert_rollout(task: &TaskSpec, seed: u64, action_noise: f32) -> Result<Trajectory, EnvError> {
    let (mut env, mut obs) = Env::reset(task, seed)?;
    let mut noise_rng = rng::derive(seed, &[rng::tag("expert-noise"), rng::tag(&task.name)]);
    let mut transitions = Vec::new();
    loop {
        let mut a = env.expert_action();
        if action_noise > 0.0 {
            for v in a.iter_mut() {
                *v += action_noise * rng::randn(&mut noise_rng);
            }
        }
        clamp_action(&mut a);
        let (next_obs, cont, success) = env.step(&a)?;
        transitions.push(Transition { obs, action: a, continuation: cont, success });
        obs = next_obs;
        if !cont {
            break;
        }
    }
    let success = env.succeeded();
    Ok(Trajectory { transitions, final_obs: obs, success })
}

/// Collect `n` successful expert demonstrations; failed attempts are retried,
/// not stored. Deterministic in (task, seed).
pub fn collect_demos(
    task: &TaskSpec,
    n: usize,
    action_noise: f32,
    seed: u64,
) -> Result<DemoSet, EnvError> {
    assert!(n >= 1, "demo count must be at least 1");
    let budget = 50 * n;
    let mut trajectories = Vec::with_capacity(n);
    let mut attempt = 0usize;
    while trajectories.len() < n {
        if attempt >= budget {
            return Err(EnvError::DemoBudget { want: n, attempts: budget });
        }
        let ep_seed = rng::mix(seed, &[rng::tag("demo-attempt"), attempt as u64]);
        let traj = expert_rollout(task, ep_seed, action_noise)?;
        if traj.success {
            trajectories.push(traj);
        }
        attempt += 1;
    }
    Ok(DemoSet { task: task.clone(), trajectories })
}
