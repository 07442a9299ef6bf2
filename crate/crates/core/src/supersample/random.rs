//! Seeded generator of small random experiments for property sweeps.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::rng::{stream, Purpose, Stream};
use crate::scalar::Rational;

use super::spec::{LearnerSpec, OutcomeSpace, RowKernelSpec, UpdateSpec, WeightSpec, WorldSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Any,
    Exchangeable,
    Asymmetric,
}

#[derive(Clone, Debug)]
pub struct GenOptions {
    pub max_n: usize,
    pub max_atoms: usize,
    pub max_states: usize,
    /// Upper bound on the enumerated atom count; the horizon shrinks to respect it.
    pub budget: usize,
    pub family: Family,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions { max_n: 4, max_atoms: 3, max_states: 4, budget: 60_000, family: Family::Any }
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Instance {
    pub world: WorldSpec,
    pub learner: LearnerSpec,
    pub n: usize,
}

const GRID: [(i64, i64); 5] = [(0, 1), (1, 4), (1, 2), (3, 4), (1, 1)];

fn grid_value(rng: &mut Stream) -> Rational {
    let (a, b) = *GRID.choose(rng).unwrap();
    Rational::new(a, b)
}

/// Random small integer weights normalized to a distribution; `sparse` zeroes entries.
fn random_dist(rng: &mut Stream, k: usize, sparse: bool) -> Vec<Rational> {
    loop {
        let w: Vec<i64> = (0..k)
            .map(|_| if sparse && rng.random_bool(0.4) { 0 } else { rng.random_range(0..=4) })
            .collect();
        let s: i64 = w.iter().sum();
        if s > 0 {
            return w.into_iter().map(|x| Rational::new(x, s)).collect();
        }
    }
}

fn random_pairs(rng: &mut Stream, k: usize, symmetric: bool) -> Vec<Vec<Rational>> {
    loop {
        let mut w = vec![vec![0i64; k]; k];
        for i in 0..k {
            for j in 0..k {
                if symmetric && j < i {
                    w[i][j] = w[j][i];
                } else {
                    w[i][j] = if rng.random_bool(0.25) { 0 } else { rng.random_range(0..=4) };
                }
            }
        }
        let asym = (0..k).any(|i| (0..k).any(|j| w[i][j] != w[j][i]));
        let s: i64 = w.iter().flatten().sum();
        if s > 0 && (symmetric || asym) {
            return w.iter().map(|r| r.iter().map(|&x| Rational::new(x, s)).collect()).collect();
        }
    }
}

fn random_kernel(rng: &mut Stream, k: usize, family: Family) -> RowKernelSpec {
    let symmetric = match family {
        Family::Exchangeable => true,
        Family::Asymmetric => false,
        Family::Any => rng.random_bool(0.6),
    };
    match rng.random_range(0..3) {
        0 if symmetric => RowKernelSpec::Iid { p: random_dist(rng, k, false) },
        1 => RowKernelSpec::Markov {
            initial: random_pairs(rng, k, symmetric),
            by_last: (0..k).map(|_| random_pairs(rng, k, symmetric)).collect(),
        },
        _ => RowKernelSpec::Table { pairs: random_pairs(rng, k, symmetric) },
    }
}

fn random_learner(rng: &mut Stream, k: usize, max_states: usize) -> LearnerSpec {
    let kind = rng.random_range(0..10);
    let states = if kind == 1 && k <= max_states { k } else { rng.random_range(1..=max_states) };
    let update = match kind {
        0 => UpdateSpec::Constant { state: rng.random_range(0..states) },
        1 if states == k => UpdateSpec::MemorizeLast,
        2 | 3 => UpdateSpec::Erm,
        _ => UpdateSpec::Markov {
            initial: rng.random_range(0..states),
            table: (0..states)
                .map(|_| (0..k).map(|_| random_dist(rng, states, true)).collect())
                .collect(),
        },
    };
    let weight = match rng.random_range(0..6) {
        0 => WeightSpec::Constant { q: grid_value(rng) },
        1 => WeightSpec::ByPrevState { q: (0..states).map(|_| grid_value(rng)).collect() },
        2 => WeightSpec::ByRound { q: (0..4).map(|_| grid_value(rng)).collect() },
        _ => WeightSpec::Constant { q: Rational::one() },
    };
    let loss = (0..states).map(|_| (0..k).map(|_| grid_value(rng)).collect()).collect();
    LearnerSpec { states, update, weight, loss }
}

fn branching(world: &WorldSpec, learner: &LearnerSpec) -> usize {
    let pairs = world
        .tables()
        .iter()
        .map(|t| t.iter().flatten().filter(|x| !x.is_zero()).count())
        .max()
        .unwrap_or(1);
    let upd = match &learner.update {
        UpdateSpec::Markov { table, .. } => table
            .iter()
            .flatten()
            .map(|r| r.iter().filter(|x| !x.is_zero()).count())
            .max()
            .unwrap_or(1),
        UpdateSpec::Gibbs { prior, .. } => prior.len(),
        _ => 1,
    };
    pairs * 2 * upd
}

/// The `index`-th instance of the sweep keyed by `seed`.
pub fn random_instance(seed: u64, index: u64, opts: &GenOptions) -> Instance {
    let mut rng = stream(seed, Purpose::WorldGen, &[index]);
    let k = rng.random_range(2..=opts.max_atoms.max(2));
    let rows = random_kernel(&mut rng, k, opts.family);
    let mut world = WorldSpec { space: OutcomeSpace::numbered(k), rows, exchangeable: false, conditional_product: false };
    let (ex, cp) = world.detect_flags();
    world.exchangeable = ex;
    world.conditional_product = cp;
    let learner = random_learner(&mut rng, k, opts.max_states);
    let b = branching(&world, &learner);
    let mut n = rng.random_range(1..=opts.max_n);
    while n > 1 && b.saturating_pow(n as u32) > opts.budget {
        n -= 1;
    }
    Instance { world, learner, n }
}
