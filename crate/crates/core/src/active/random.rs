//! Seeded generator of small enumerable active problems.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::rng::{stream, Purpose, Stream};
use crate::scalar::Rational;

use super::{ActiveLearner, ActiveProblem, ActiveUpdate, ActiveWorld, QueryRule, QuerySpec};

const PROBS: [(i64, i64); 4] = [(1, 4), (1, 2), (3, 4), (1, 1)];
const LOSSES: [(i64, i64); 3] = [(0, 1), (1, 2), (1, 1)];

fn pick(rng: &mut Stream, table: &[(i64, i64)]) -> Rational {
    let (a, b) = *table.choose(rng).unwrap();
    Rational::new(a, b)
}

/// A random problem whose enumeration stays under roughly `budget` leaves.
pub fn random_problem(seed: u64, index: u64, budget: usize) -> ActiveProblem {
    let mut rng = stream(seed, Purpose::WorldGen, &[0xac71, index]);
    let features = rng.random_range(1..=2);
    let labels = 2;
    let law = loop {
        let w: Vec<i64> = (0..features * labels).map(|_| rng.random_range(0..=3)).collect();
        let s: i64 = w.iter().sum();
        if s > 0 {
            break w.chunks(labels).map(|r| r.iter().map(|&a| Rational::new(a, s)).collect()).collect();
        }
    };
    let world = ActiveWorld { law };
    let states = rng.random_range(2..=3);
    let loss = (0..states).map(|_| (0..features * labels).map(|_| pick(&mut rng, &LOSSES)).collect()).collect();
    let update = if rng.random_bool(0.5) {
        ActiveUpdate::WeightedErm
    } else {
        let eta = *[0.5, 1.0, 2.0].choose(&mut rng).unwrap();
        ActiveUpdate::WeightedGibbs { eta, prior: vec![1.0 / states as f64; states] }
    };
    let rule = match rng.random_range(0..3) {
        0 => QueryRule::Constant { p: pick(&mut rng, &PROBS) },
        1 => QueryRule::ByFeature { p: (0..features).map(|_| pick(&mut rng, &PROBS)).collect() },
        _ => QueryRule::ByStateFeature {
            p: (0..states).map(|_| (0..features).map(|_| pick(&mut rng, &PROBS)).collect()).collect(),
        },
    };
    let lowest = match &rule {
        QueryRule::Constant { p } => *p,
        QueryRule::ByFeature { p } => *p.iter().min().unwrap(),
        QueryRule::ByStateFeature { p } => *p.iter().flatten().min().unwrap(),
    };
    let p_min = if rng.random_bool(0.5) { lowest } else { Rational::new(1, 4) };
    let query = QuerySpec { p_min, rule, grid: 8 };
    let cells = query.coin_cells().len();
    let branch = if matches!(update, ActiveUpdate::WeightedErm) { 1 } else { states };
    let per_round = (features * labels * cells).pow(2) * 2 * branch;
    let mut n = 1;
    while n < 3 && per_round.pow(n as u32 + 1) <= budget {
        n += 1;
    }
    ActiveProblem { world, query, learner: ActiveLearner { states, initial: 0, update, loss }, n }
}
