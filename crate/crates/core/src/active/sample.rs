//! Monte Carlo trajectories of the streaming importance-weighted learner.

use rand::Rng;

use crate::error::Result;
use crate::rng::{draw_index, stream, Purpose};
use crate::scalar::Rational;

use super::{ActiveProblem, LabeledEntry};

#[derive(Clone, Debug, PartialEq)]
pub struct ActiveRound {
    pub u: u8,
    /// Selected triple (X, Y, V) with V on the coin grid.
    pub x: usize,
    pub y: usize,
    pub v: Rational,
    /// Unselected triple, never shown to the learner.
    pub ghost: (usize, usize, Rational),
    pub p: Rational,
    pub queried: bool,
    /// The label as the learner sees it; `None` is the masked symbol.
    pub ybar: Option<usize>,
    pub w: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActiveTranscript {
    pub seed: u64,
    pub replica: u64,
    pub rounds: Vec<ActiveRound>,
    pub sample: Vec<LabeledEntry>,
}

impl ActiveTranscript {
    pub fn terminal(&self) -> usize {
        self.rounds.last().map_or(0, |r| r.w)
    }
}

pub fn sample_iwal(prob: &ActiveProblem, seed: u64, replica: u64) -> Result<ActiveTranscript> {
    prob.validate()?;
    let (world, learner, query) = (&prob.world, &prob.learner, &prob.query);
    let labels = world.labels();
    let atoms: Vec<(usize, usize)> =
        (0..world.features()).flat_map(|x| (0..labels).map(move |y| (x, y))).collect();
    let law: Vec<f64> = atoms.iter().map(|&(x, y)| world.law[x][y].to_f64()).collect();
    let m = query.grid as i64;
    let mut w_prev = learner.initial;
    let mut sample = Vec::new();
    let mut rounds = Vec::with_capacity(prob.n);
    for t in 1..=prob.n {
        let mut rng = stream(seed, Purpose::Active, &[replica, t as u64]);
        let mut triple = || {
            let (x, y) = atoms[draw_index(&mut rng, &law)];
            let v = Rational::new(rng.random_range(1..=m), m);
            (x, y, v)
        };
        let a = triple();
        let b = triple();
        let u: u8 = rng.random_range(0..2);
        let ((x, y, v), ghost) = if u == 0 { (a, b) } else { (b, a) };
        let p = query.rule.prob(w_prev, x);
        let queried = v <= p;
        let ybar = queried.then_some(y);
        if let Some(y) = ybar {
            sample.push(LabeledEntry { x, y, weight: Rational::one() / p });
        }
        let law_w = learner.psi::<f64>(labels, &sample, w_prev);
        let wp: Vec<f64> = law_w.iter().map(|(_, p)| *p).collect();
        let w = law_w[draw_index(&mut rng, &wp)].0;
        rounds.push(ActiveRound { u, x, y, v, ghost, p, queried, ybar, w });
        w_prev = w;
    }
    Ok(ActiveTranscript { seed, replica, rounds, sample })
}
