use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{TaskSpec, Trajectory, Transition};

/// A set of demonstrations for one task, persisted in a binary format:
/// header (task name, d_o, d_a, horizon, count), then per-trajectory records
/// of little-endian f32 obs/action streams with continuation and success
/// bytes. Round-trips bit-exactly.
#[derive(Clone, Debug)]
pub struct DemoSet {
    pub task: TaskSpec,
    pub trajectories: Vec<Trajectory>,
}

impl DemoSet {
    pub fn total_transitions(&self) -> usize {
        self.trajectories.iter().map(|t| t.len()).sum()
    }
}

const MAGIC: &[u8; 4] = b"DEMO";
const VERSION: u32 = 1;

pub fn save_demos(path: &Path, set: &DemoSet) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let name = set.task.name.as_bytes();
    w.write_all(&(name.len() as u16).to_le_bytes())?;
    w.write_all(name)?;
    w.write_all(&(set.task.d_o as u32).to_le_bytes())?;
    w.write_all(&(set.task.d_a as u32).to_le_bytes())?;
    w.write_all(&(set.task.horizon as u32).to_le_bytes())?;
    w.write_all(&set.task.process_noise_std.to_le_bytes())?;
    w.write_all(&(set.trajectories.len() as u32).to_le_bytes())?;
    for traj in &set.trajectories {
        w.write_all(&(traj.len() as u32).to_le_bytes())?;
        w.write_all(&[traj.success as u8])?;
        for tr in &traj.transitions {
            debug_assert_eq!(tr.obs.len(), set.task.d_o);
            debug_assert_eq!(tr.action.len(), set.task.d_a);
            for &v in &tr.obs {
                w.write_all(&v.to_le_bytes())?;
            }
            for &v in &tr.action {
                w.write_all(&v.to_le_bytes())?;
            }
            w.write_all(&[tr.continuation as u8, tr.success as u8])?;
        }
        for &v in &traj.final_obs {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()
}

pub fn load_demos(path: &Path) -> io::Result<DemoSet> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("not a demo file"));
    }
    if read_u32(&mut r)? != VERSION {
        return Err(bad("unsupported demo file version"));
    }
    let mut nlen = [0u8; 2];
    r.read_exact(&mut nlen)?;
    let mut name = vec![0u8; u16::from_le_bytes(nlen) as usize];
    r.read_exact(&mut name)?;
    let name = String::from_utf8(name).map_err(|e| bad(&e.to_string()))?;
    let d_o = read_u32(&mut r)? as usize;
    let d_a = read_u32(&mut r)? as usize;
    let horizon = read_u32(&mut r)? as usize;
    let noise = read_f32(&mut r)?;
    let count = read_u32(&mut r)? as usize;

    let task = match super::tasks::task_by_name(&name) {
        Ok(spec) => {
            if spec.d_o != d_o || spec.d_a != d_a {
                return Err(bad("demo file dimensions do not match the task registry"));
            }
            spec
        }
        Err(_) => TaskSpec {
            name,
            d_o,
            d_a,
            horizon,
            process_noise_std: noise,
            success_desc: String::new(),
        },
    };

    let mut trajectories = Vec::with_capacity(count);
    for _ in 0..count {
        let n = read_u32(&mut r)? as usize;
        let mut flag = [0u8; 1];
        r.read_exact(&mut flag)?;
        let success = flag[0] != 0;
        let mut transitions = Vec::with_capacity(n);
        for _ in 0..n {
            let obs = read_f32_vec(&mut r, d_o)?;
            let action = read_f32_vec(&mut r, d_a)?;
            let mut flags = [0u8; 2];
            r.read_exact(&mut flags)?;
            transitions.push(Transition {
                obs,
                action,
                continuation: flags[0] != 0,
                success: flags[1] != 0,
            });
        }
        let final_obs = read_f32_vec(&mut r, d_o)?;
        trajectories.push(Trajectory { transitions, final_obs, success });
    }
    Ok(DemoSet { task, trajectories })
}

fn bad(msg: &str) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.to_string())
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f32<R: Read>(r: &mut R) -> io::Result<f32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(f32::from_le_bytes(b))
}

fn read_f32_vec<R: Read>(r: &mut R, n: usize) -> io::Result<Vec<f32>> {
    let mut buf = vec![0u8; n * 4];
    r.read_exact(&mut buf)?;
    Ok(buf.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
}
