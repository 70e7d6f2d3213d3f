use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pack::{gwo_step, WolfPack, WORST_FITNESS};
use crate::error::{Error, Result};

/// One named search dimension. Integer dimensions are rounded when decoded;
/// the wolf position itself stays continuous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dim {
    pub name: String,
    pub low: f64,
    pub high: f64,
    #[serde(default)]
    pub integer: bool,
}

impl Dim {
    pub fn continuous(name: &str, low: f64, high: f64) -> Self {
        Self { name: name.into(), low, high, integer: false }
    }

    pub fn integer(name: &str, low: f64, high: f64) -> Self {
        Self { name: name.into(), low, high, integer: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub dims: Vec<Dim>,
}

impl SearchSpace {
    pub fn new(dims: Vec<Dim>) -> Result<Self> {
        let s = Self { dims };
        s.validate()?;
        Ok(s)
    }

    /// Continuous box `[low, high]^dim` with generated names `x0, x1, ...`.
    pub fn uniform(dim: usize, low: f64, high: f64) -> Result<Self> {
        Self::new((0..dim).map(|d| Dim::continuous(&format!("x{d}"), low, high)).collect())
    }

    /// A dimension whose bounds coincide is allowed and acts as a constant.
    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return Err(Error::Config("search space has no dimensions".into()));
        }
        for d in &self.dims {
            if !d.low.is_finite() || !d.high.is_finite() || d.low > d.high {
                return Err(Error::Config(format!(
                    "dimension {} has bounds [{}, {}]",
                    d.name, d.low, d.high
                )));
            }
        }
        Ok(())
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.dims.iter().map(|d| (d.low, d.high)).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.dims.iter().position(|d| d.name == name)
    }

    /// Position with integer dimensions rounded.
    pub fn decode(&self, position: &[f64]) -> Vec<f64> {
        position
            .iter()
            .zip(&self.dims)
            .map(|(&v, d)| if d.integer { v.round() } else { v })
            .collect()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let s: SearchSpace = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }
}

/// Per-iteration summary; leader positions are decoded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub convergence_factor: f64,
    /// Best finite fitness seen so far, if any.
    pub best_fitness: Option<f64>,
    pub leader_positions: Vec<Vec<f64>>,
    pub leader_fitness: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GwoResult {
    /// Best-ever decoded position.
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
    /// Iteration and wolf index that produced the best position.
    pub best_origin: (usize, usize),
    pub history: Vec<IterationRecord>,
    pub evaluations: usize,
}

/// Minimise `fitness` over `space` with a uniformly initialised pack.
///
/// `fitness` receives the decoded position, the iteration and the wolf index;
/// evaluations inside an iteration run in parallel. Non-finite values rank
/// last. Fails with [`Error::TuningFailed`] if no evaluation was finite.
pub fn gwo_optimize<F>(
    fitness: F,
    space: &SearchSpace,
    pack_size: usize,
    iterations: usize,
    seed: u64,
) -> Result<GwoResult>
where
    F: Fn(&[f64], usize, usize) -> f64 + Sync,
{
    gwo_optimize_from(fitness, space, pack_size, iterations, seed, &[])
}

/// As [`gwo_optimize`], with the first wolves placed at `initial` (raw,
/// clamped) instead of at random.
pub fn gwo_optimize_from<F>(
    fitness: F,
    space: &SearchSpace,
    pack_size: usize,
    iterations: usize,
    seed: u64,
    initial: &[Vec<f64>],
) -> Result<GwoResult>
where
    F: Fn(&[f64], usize, usize) -> f64 + Sync,
{
    space.validate()?;
    if iterations == 0 {
        return Err(Error::InvalidPack("iterations must be at least 1".into()));
    }
    if initial.len() > pack_size {
        return Err(Error::InvalidPack(format!(
            "{} initial positions for a pack of {pack_size}",
            initial.len()
        )));
    }
    let random = WolfPack::random(pack_size, space.bounds(), iterations, seed)?;
    let mut positions = random.positions().to_vec();
    positions[..initial.len()].clone_from_slice(initial);
    let mut pack = WolfPack::new(positions, space.bounds(), iterations, seed)?;

    let mut best: Option<(f64, Vec<f64>, (usize, usize))> = None;
    let mut history = Vec::with_capacity(iterations);
    for iter in 0..iterations {
        let decoded: Vec<Vec<f64>> = pack.positions().iter().map(|p| space.decode(p)).collect();
        let values: Vec<f64> = decoded
            .par_iter()
            .enumerate()
            .map(|(w, x)| fitness(x, iter, w))
            .collect();
        pack.set_fitness(&values)?;
        for (w, (v, x)) in values.iter().zip(&decoded).enumerate() {
            if v.is_finite() && best.as_ref().is_none_or(|b| *v < b.0) {
                best = Some((*v, x.clone(), (iter, w)));
            }
        }
        let leaders = pack.leaders()?;
        let fit = pack.fitness();
        history.push(IterationRecord {
            iteration: iter,
            convergence_factor: pack.convergence_factor(),
            best_fitness: best.as_ref().map(|b| b.0),
            leader_positions: leaders.iter().map(|&l| decoded[l].clone()).collect(),
            leader_fitness: leaders.iter().map(|&l| fit[l].unwrap_or(WORST_FITNESS)).collect(),
        });
        if iter + 1 < iterations {
            pack = gwo_step(&pack)?;
        }
    }
    let evaluations = pack_size * iterations;
    match best {
        Some((best_fitness, best_position, best_origin)) => Ok(GwoResult {
            best_position,
            best_fitness,
            best_origin,
            history,
            evaluations,
        }),
        None => Err(Error::TuningFailed { evaluations, history }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    fn rastrigin(x: &[f64]) -> f64 {
        10.0 * x.len() as f64
            + x.iter()
                .map(|v| v * v - 10.0 * (2.0 * std::f64::consts::PI * v).cos())
                .sum::<f64>()
    }

    #[test]
    fn sphere_converges() {
        let space = SearchSpace::uniform(2, -10.0, 10.0).unwrap();
        let r = gwo_optimize(|x, _, _| sphere(x), &space, 30, 100, 1).unwrap();
        assert!(r.best_fitness < 1e-3, "{}", r.best_fitness);
    }

    #[test]
    fn rastrigin_converges() {
        let space = SearchSpace::uniform(2, -5.12, 5.12).unwrap();
        let r = gwo_optimize(|x, _, _| rastrigin(x), &space, 30, 200, 2).unwrap();
        assert!(r.best_fitness < 1.0, "{}", r.best_fitness);
    }

    #[test]
    fn best_is_non_increasing() {
        let space = SearchSpace::uniform(3, -5.12, 5.12).unwrap();
        let r = gwo_optimize(|x, _, _| rastrigin(x), &space, 10, 50, 3).unwrap();
        let bests: Vec<f64> = r.history.iter().map(|h| h.best_fitness.unwrap()).collect();
        assert!(bests.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*bests.last().unwrap(), r.best_fitness);
    }

    #[test]
    fn constant_fitness_terminates_in_bounds() {
        let space = SearchSpace::uniform(2, -1.0, 1.0).unwrap();
        let r = gwo_optimize(|_, _, _| 4.0, &space, 5, 10, 0).unwrap();
        assert_eq!(r.best_fitness, 4.0);
        assert!(r.best_position.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn same_seed_same_trace() {
        let space = SearchSpace::uniform(2, -3.0, 3.0).unwrap();
        let a = gwo_optimize(|x, _, _| rastrigin(x), &space, 8, 20, 11).unwrap();
        let b = gwo_optimize(|x, _, _| rastrigin(x), &space, 8, 20, 11).unwrap();
        assert_eq!(a, b);
        let c = gwo_optimize(|x, _, _| rastrigin(x), &space, 8, 20, 12).unwrap();
        assert_ne!(a.history, c.history);
    }

    #[test]
    fn non_finite_fitness_is_survivable() {
        let space = SearchSpace::uniform(1, -1.0, 1.0).unwrap();
        let r = gwo_optimize(|x, _, w| if w % 2 == 0 { f64::NAN } else { x[0] * x[0] }, &space, 6, 10, 0)
            .unwrap();
        assert!(r.best_fitness.is_finite());
    }

    #[test]
    fn all_divergent_fails_with_history() {
        let space = SearchSpace::uniform(1, -1.0, 1.0).unwrap();
        match gwo_optimize(|_, _, _| f64::INFINITY, &space, 4, 3, 0) {
            Err(Error::TuningFailed { evaluations, history }) => {
                assert_eq!(evaluations, 12);
                assert_eq!(history.len(), 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn integer_dims_are_rounded() {
        let space = SearchSpace::new(vec![Dim::integer("k", 0.0, 10.0)]).unwrap();
        let r = gwo_optimize(|x, _, _| (x[0] - 3.3).abs(), &space, 5, 20, 0).unwrap();
        assert_eq!(r.best_position, vec![3.0]);
    }

    #[test]
    fn initial_positions_are_used() {
        let space = SearchSpace::uniform(1, -1.0, 1.0).unwrap();
        let r = gwo_optimize_from(|x, _, _| x[0].abs(), &space, 4, 1, 0, &[vec![0.0]]).unwrap();
        assert_eq!(r.best_fitness, 0.0);
    }

    #[test]
    fn space_from_toml() {
        let s = SearchSpace::from_toml(
            "[[dims]]\nname = \"hidden_dim\"\nlow = 4\nhigh = 16\ninteger = true\n",
        )
        .unwrap();
        assert_eq!(s.dims[0], Dim::integer("hidden_dim", 4.0, 16.0));
        assert!(SearchSpace::from_toml("[[dims]]\nname = \"x\"\nlow = 2\nhigh = 1\n").is_err());
    }
}
