//! Monte Carlo trajectories of a sequential supersample experiment.

use std::io::Write;

use rand::Rng;

use crate::error::{invalid, Result};
use crate::rng::{draw_index, stream, Purpose};

use super::spec::{History, Learner, Retention, World};

#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub z0: usize,
    pub z1: usize,
    pub u: u8,
    pub q: f64,
    pub obs: u32,
    pub w: usize,
    pub selected_loss: f64,
    pub ghost_loss: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transcript {
    pub seed: u64,
    pub replica: u64,
    pub initial_state: usize,
    pub rounds: Vec<RoundRecord>,
}

impl Transcript {
    /// H_t as the fold of the retained selected-path variables of rounds 1..=t.
    pub fn history(&self, t: usize, ret: Retention) -> History {
        self.rounds[..t].iter().fold(History::new(), |h, r| h.extended(ret, r.obs, r.w as u32))
    }

    /// (1/n) sum_t (ghost - selected) along this trajectory.
    pub fn gap(&self) -> f64 {
        let n = self.rounds.len() as f64;
        self.rounds.iter().map(|r| r.ghost_loss - r.selected_loss).sum::<f64>() / n
    }
}

pub fn sample_transcripts(
    world: &dyn World<f64>,
    learner: &dyn Learner<f64>,
    n: usize,
    reps: usize,
    seed: u64,
    retention: Retention,
) -> Result<Vec<Transcript>> {
    if reps == 0 || n == 0 {
        return invalid("need at least one replica and one round");
    }
    (0..reps as u64).map(|rep| sample_one(world, learner, n, seed, rep, retention)).collect()
}

fn sample_one(
    world: &dyn World<f64>,
    learner: &dyn Learner<f64>,
    n: usize,
    seed: u64,
    replica: u64,
    retention: Retention,
) -> Result<Transcript> {
    let mut hist = History::new();
    let mut rounds = Vec::with_capacity(n);
    for t in 1..=n {
        let mut rng = stream(seed, Purpose::Transcript, &[replica, t as u64]);
        let rows = world.row_law(t, &hist)?;
        let probs: Vec<f64> = rows.iter().map(|(_, p)| *p).collect();
        let (z0, z1) = rows[draw_index(&mut rng, &probs)].0;
        let u: u8 = rng.random_range(0..2);
        let z = if u == 0 { z0 } else { z1 };
        let q = learner.weight(t, &hist)?;
        let obs = learner.observe(t, &hist, z)?;
        let law = learner.update(t, &hist, obs)?;
        let wp: Vec<f64> = law.iter().map(|(_, p)| *p).collect();
        let w = law[draw_index(&mut rng, &wp)].0;
        let ghost = if u == 0 { z1 } else { z0 };
        rounds.push(RoundRecord {
            z0,
            z1,
            u,
            q,
            obs,
            w,
            selected_loss: q * learner.loss(w, z),
            ghost_loss: q * learner.loss(w, ghost),
        });
        hist = hist.extended(retention, obs, w as u32);
    }
    Ok(Transcript { seed, replica, initial_state: learner.initial_state(), rounds })
}

/// Mean and standard error of a per-transcript statistic.
pub fn mean_stderr(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for x in xs {
        n += 1.0;
        let d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    if n < 2.0 {
        return (mean, f64::INFINITY);
    }
    (mean, (m2 / (n - 1.0) / n).sqrt())
}

pub fn write_transcripts_csv<W: Write>(ts: &[Transcript], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["seed", "replica", "t", "z0", "z1", "u", "q", "w", "selected_loss", "ghost_loss"])?;
    for tr in ts {
        for (i, r) in tr.rounds.iter().enumerate() {
            wr.write_record([
                tr.seed.to_string(),
                tr.replica.to_string(),
                (i + 1).to_string(),
                r.z0.to_string(),
                r.z1.to_string(),
                r.u.to_string(),
                format!("{:?}", r.q),
                r.w.to_string(),
                format!("{:?}", r.selected_loss),
                format!("{:?}", r.ghost_loss),
            ])?;
        }
    }
    wr.flush()?;
    Ok(())
}
