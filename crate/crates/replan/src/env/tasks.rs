use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Action, Env, EnvError, Obs, TaskSpec};

/// The three registered tasks, in increasing order of precision demands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TaskKind {
    /// 2D point mass to a jittered goal.
    PointReach,
    /// Goal behind a circular penalty region the expert skirts over the top;
    /// entering the region terminates the episode as a failure.
    PointReachObstacle,
    /// Align above a narrow slot mouth, then insert; touching the surface
    /// outside the mouth or the slot floor terminates as a failure.
    PegSlot2d,
}

// point_reach / point_reach_obstacle geometry
const GOAL_RADIUS: f32 = 0.10;
const OBSTACLE_CENTER: [f32; 2] = [0.0, 0.0];
const OBSTACLE_RADIUS: f32 = 0.28;
// Pass-through waypoints sit beyond their switch thresholds so the expert
// never parks on one: climb, cross above the disc, then descend to the goal.
const CLIMB_WAYPOINT: [f32; 2] = [-0.30, 0.45];
const CROSS_WAYPOINT: [f32; 2] = [0.30, 0.47];
const CLIMB_SWITCH_X: f32 = -0.38;
const CROSS_SWITCH_X: f32 = 0.15;

// peg_slot_2d geometry
const MOUTH_Y: f32 = 0.0;
const BOTTOM_Y: f32 = -0.30;
const SLOT_HALF_WIDTH: f32 = 0.07;
const INSERT_TOL: f32 = 0.05;
const INSERT_DEPTH_Y: f32 = -0.22;
const HOVER_Y: f32 = 0.18;

impl TaskKind {
    pub fn from_name(name: &str) -> Result<TaskKind, EnvError> {
        match name {
            "point_reach" => Ok(TaskKind::PointReach),
            "point_reach_obstacle" => Ok(TaskKind::PointReachObstacle),
            "peg_slot_2d" => Ok(TaskKind::PegSlot2d),
            other => Err(EnvError::UnknownTask(other.to_string())),
        }
    }

    pub fn spec(&self) -> TaskSpec {
        match self {
            TaskKind::PointReach => TaskSpec {
                name: "point_reach".into(),
                d_o: 6,
                d_a: 2,
                horizon: 60,
                process_noise_std: 0.01,
                success_desc: format!("distance to goal < {GOAL_RADIUS}"),
            },
            TaskKind::PointReachObstacle => TaskSpec {
                name: "point_reach_obstacle".into(),
                d_o: 8,
                d_a: 2,
                horizon: 70,
                process_noise_std: 0.01,
                success_desc: format!(
                    "distance to goal < {GOAL_RADIUS} without entering the penalty disc"
                ),
            },
            TaskKind::PegSlot2d => TaskSpec {
                name: "peg_slot_2d".into(),
                d_o: 7,
                d_a: 2,
                horizon: 70,
                process_noise_std: 0.01,
                success_desc: format!(
                    "|x - slot| <= {INSERT_TOL} at depth y <= {INSERT_DEPTH_Y} without wall contact"
                ),
            },
        }
    }

    pub(super) fn sample_initial(&self, rng: &mut ChaCha8Rng) -> ([f32; 2], [f32; 2]) {
        match self {
            TaskKind::PointReach => {
                let pos = [-0.7 + rng.random_range(-0.15..0.15), rng.random_range(-0.15..0.15)];
                let goal = [0.7 + rng.random_range(-0.15..0.15), rng.random_range(-0.15..0.15)];
                (pos, goal)
            }
            TaskKind::PointReachObstacle => {
                let pos = [-0.7 + rng.random_range(-0.12..0.12), rng.random_range(-0.12..0.12)];
                let goal = [0.7 + rng.random_range(-0.12..0.12), rng.random_range(-0.12..0.12)];
                (pos, goal)
            }
            TaskKind::PegSlot2d => {
                let pos =
                    [-0.65 + rng.random_range(-0.15..0.15), 0.45 + rng.random_range(-0.10..0.10)];
                // goal doubles as the slot location: x jittered, y at the mouth
                let goal = [0.45 + rng.random_range(-0.15..0.15), MOUTH_Y];
                (pos, goal)
            }
        }
    }

    pub(super) fn observe(&self, env: &Env) -> Obs {
        let p = env.pos;
        let v = env.vel;
        let g = env.goal;
        match self {
            TaskKind::PointReach => vec![p[0], p[1], v[0], v[1], g[0] - p[0], g[1] - p[1]],
            TaskKind::PointReachObstacle => vec![
                p[0],
                p[1],
                v[0],
                v[1],
                g[0] - p[0],
                g[1] - p[1],
                OBSTACLE_CENTER[0] - p[0],
                OBSTACLE_CENTER[1] - p[1],
            ],
            TaskKind::PegSlot2d => {
                vec![p[0], p[1], v[0], v[1], g[0] - p[0], MOUTH_Y - p[1], BOTTOM_Y - p[1]]
            }
        }
    }

    pub(super) fn succeeded(&self, env: &Env) -> bool {
        match self {
            TaskKind::PointReach | TaskKind::PointReachObstacle => {
                dist(env.pos, env.goal) < GOAL_RADIUS
            }
            TaskKind::PegSlot2d => {
                (env.pos[0] - env.goal[0]).abs() <= INSERT_TOL && env.pos[1] <= INSERT_DEPTH_Y
            }
        }
    }

    pub(super) fn failed(&self, env: &Env) -> bool {
        match self {
            TaskKind::PointReach => false,
            TaskKind::PointReachObstacle => dist(env.pos, OBSTACLE_CENTER) < OBSTACLE_RADIUS,
            TaskKind::PegSlot2d => {
                let lateral = (env.pos[0] - env.goal[0]).abs();
                (env.pos[1] < MOUTH_Y && lateral > SLOT_HALF_WIDTH) || env.pos[1] < BOTTOM_Y
            }
        }
    }
}

/// Waypoint PD controller for the task; feasible and successful from any
/// reachable state under zero process noise.
pub fn expert_action(env: &Env) -> Action {
    let p = env.pos;
    let v = env.vel;
    match env.kind {
        TaskKind::PointReach => pd(p, v, env.goal, 2.5, 1.2),
        TaskKind::PointReachObstacle => {
            let target = if p[0] < CLIMB_SWITCH_X {
                CLIMB_WAYPOINT
            } else if p[0] < CROSS_SWITCH_X {
                CROSS_WAYPOINT
            } else {
                env.goal
            };
            pd(p, v, target, 2.5, 1.2)
        }
        TaskKind::PegSlot2d => {
            let slot_x = env.goal[0];
            let aligned = (p[0] - slot_x).abs() <= 0.035 && v[0].abs() < 0.35;
            if !aligned {
                pd(p, v, [slot_x, HOVER_Y], 2.5, 1.3)
            } else {
                // slow vertical insertion with stiff lateral correction
                let ax = 3.0 * (slot_x - p[0]) - 1.4 * v[0];
                let ay = 1.6 * (INSERT_DEPTH_Y - 0.06 - p[1]) - 1.3 * v[1];
                vec![ax.clamp(-1.0, 1.0), ay.clamp(-1.0, 1.0)]
            }
        }
    }
}

fn pd(p: [f32; 2], v: [f32; 2], target: [f32; 2], kp: f32, kd: f32) -> Action {
    let ax = kp * (target[0] - p[0]) - kd * v[0];
    let ay = kp * (target[1] - p[1]) - kd * v[1];
    vec![ax.clamp(-1.0, 1.0), ay.clamp(-1.0, 1.0)]
}

fn dist(a: [f32; 2], b: [f32; 2]) -> f32 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

pub fn registry() -> Vec<TaskSpec> {
    vec![
        TaskKind::PointReach.spec(),
        TaskKind::PointReachObstacle.spec(),
        TaskKind::PegSlot2d.spec(),
    ]
}

pub fn task_by_name(name: &str) -> Result<TaskSpec, EnvError> {
    Ok(TaskKind::from_name(name)?.spec())
}
