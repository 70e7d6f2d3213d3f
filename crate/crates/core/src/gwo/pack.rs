use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng};

/// Rank sentinel for wolves whose fitness was not finite.
pub const WORST_FITNESS: f64 = f64::MAX;

/// One `(r1, r2)` pair for a single wolf, leader and dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    pub r1: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WolfPack {
    positions: Vec<Vec<f64>>,
    fitness: Vec<Option<f64>>,
    bounds: Vec<(f64, f64)>,
    t: usize,
    max_t: usize,
    seed: u64,
}

impl WolfPack {
    /// Pack at iteration 0 with the given positions, clamped into `bounds`.
    pub fn new(positions: Vec<Vec<f64>>, bounds: Vec<(f64, f64)>, max_t: usize, seed: u64) -> Result<Self> {
        if positions.len() < 3 {
            return Err(Error::InvalidPack(format!(
                "a pack needs at least 3 wolves, got {}",
                positions.len()
            )));
        }
        if max_t == 0 {
            return Err(Error::InvalidPack("max iterations must be at least 1".into()));
        }
        for (d, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidPack(format!("dimension {d} has bounds ({lo}, {hi})")));
            }
        }
        let mut positions = positions;
        for (w, p) in positions.iter_mut().enumerate() {
            if p.len() != bounds.len() {
                return Err(Error::InvalidPack(format!(
                    "wolf {w} has {} coordinates, bounds have {}",
                    p.len(),
                    bounds.len()
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidPack(format!("wolf {w} has a non-finite coordinate")));
            }
            clamp(p, &bounds);
        }
        let n = positions.len();
        Ok(Self {
            positions,
            fitness: vec![None; n],
            bounds,
            t: 0,
            max_t,
            seed,
        })
    }

    /// Pack with positions drawn uniformly inside `bounds`.
    pub fn random(size: usize, bounds: Vec<(f64, f64)>, max_t: usize, seed: u64) -> Result<Self> {
        let mut rng = stream_rng(derive_seed(seed, &[0]), 0);
        let positions = (0..size)
            .map(|_| {
                bounds
                    .iter()
                    .map(|&(lo, hi)| if hi > lo { rng.random_range(lo..=hi) } else { lo })
                    .collect()
            })
            .collect();
        Self::new(positions, bounds, max_t, seed)
    }

    pub fn positions(&self) -> &[Vec<f64>] {
        &self.positions
    }

    pub fn fitness(&self) -> &[Option<f64>] {
        &self.fitness
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn iteration(&self) -> usize {
        self.t
    }

    pub fn max_iterations(&self) -> usize {
        self.max_t
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Replace the current iteration counter (e.g. to evaluate the schedule
    /// endpoint).
    pub fn with_iteration(mut self, t: usize) -> Self {
        self.t = t.min(self.max_t);
        self
    }

    /// Record fitness values; non-finite values become [`WORST_FITNESS`].
    pub fn set_fitness(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: values.len(),
            });
        }
        self.fitness = values
            .iter()
            .map(|&v| Some(if v.is_finite() { v } else { WORST_FITNESS }))
            .collect();
        Ok(())
    }

    /// `a = 2 (1 - t / T)`.
    pub fn convergence_factor(&self) -> f64 {
        2.0 * (1.0 - self.t as f64 / self.max_t as f64)
    }

    /// Indices of alpha, beta and delta; ties go to the lower index.
    pub fn leaders(&self) -> Result<[usize; 3]> {
        let fit = self.evaluated()?;
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| fit[a].total_cmp(&fit[b]).then(a.cmp(&b)));
        Ok([order[0], order[1], order[2]])
    }

    fn evaluated(&self) -> Result<Vec<f64>> {
        self.fitness
            .iter()
            .enumerate()
            .map(|(w, f)| f.ok_or_else(|| Error::InvalidPack(format!("wolf {w} has not been evaluated"))))
            .collect()
    }
}

/// `D = |C X_leader - X|` with `C = 2 r2`.
pub(crate) fn distance(r2: f64, leader: f64, x: f64) -> f64 {
    (2.0 * r2 * leader - x).abs()
}

fn clamp(p: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, &(lo, hi)) in p.iter_mut().zip(bounds) {
        *v = v.clamp(lo, hi);
    }
}

/// One GWO update with random draws from the stream keyed by `(seed, t)`.
///
/// Draws are consumed per wolf, then per dimension, then per leader.
pub fn gwo_step(pack: &WolfPack) -> Result<WolfPack> {
    let mut rng = stream_rng(derive_seed(pack.seed, &[1, pack.t as u64]), 0);
    step_with_draws(pack, |_, _, _| Draw {
        r1: rng.random::<f64>(),
        r2: rng.random::<f64>(),
    })
}

/// One GWO update with caller-supplied draws, called as
/// `draw(wolf, dim, leader)` with leader 0..3 for alpha, beta, delta.
///
/// Each leader proposes `X_j - A_j |C_j X_j - X|` with `A = 2 a r1 - a` and
/// `C = 2 r2`; the new position is the mean of the three proposals, clamped.
/// The mean is accumulated relative to alpha so coincident leaders with zero
/// distances reproduce the position exactly.
pub fn step_with_draws<F>(pack: &WolfPack, mut draw: F) -> Result<WolfPack>
where
    F: FnMut(usize, usize, usize) -> Draw,
{
    let leaders = pack.leaders()?;
    let a = pack.convergence_factor();
    let lead: Vec<&[f64]> = leaders.iter().map(|&l| pack.positions[l].as_slice()).collect();
    let mut next = pack.positions.clone();
    for (w, pos) in next.iter_mut().enumerate() {
        for (d, x) in pos.iter_mut().enumerate() {
            let mut pull = 0.0;
            for (j, leader) in lead.iter().enumerate() {
                let Draw { r1, r2 } = draw(w, d, j);
                let big_a = 2.0 * a * r1 - a;
                let dist = distance(r2, leader[d], *x);
                pull += (leader[d] - lead[0][d]) - big_a * dist;
            }
            *x = lead[0][d] + pull / 3.0;
        }
        clamp(pos, &pack.bounds);
    }
    Ok(WolfPack {
        positions: next,
        fitness: vec![None; pack.len()],
        bounds: pack.bounds.clone(),
        t: (pack.t + 1).min(pack.max_t),
        max_t: pack.max_t,
        seed: pack.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pack_1d(xs: &[f64], fit: &[f64], t: usize, max_t: usize) -> WolfPack {
        let mut p = WolfPack::new(xs.iter().map(|&x| vec![x]).collect(), vec![(-1000.0, 1000.0)], max_t, 5)
            .unwrap()
            .with_iteration(t);
        p.set_fitness(fit).unwrap();
        p
    }

    #[test]
    fn rejects_small_packs() {
        assert!(matches!(
            WolfPack::new(vec![vec![0.0]; 2], vec![(0.0, 1.0)], 10, 0),
            Err(Error::InvalidPack(_))
        ));
    }

    #[test]
    fn step_needs_fitness() {
        let p = WolfPack::random(4, vec![(0.0, 1.0)], 10, 0).unwrap();
        assert!(gwo_step(&p).is_err());
    }

    #[test]
    fn hand_arithmetic_pinned_half() {
        // r1 = r2 = 0.5 gives A = 0 and C = 1, so every wolf moves to the
        // leader mean.
        let p = pack_1d(&[1.0, 2.0, 3.0, 10.0], &[0.1, 0.2, 0.3, 0.4], 3, 10);
        let n = step_with_draws(&p, |_, _, _| Draw { r1: 0.5, r2: 0.5 }).unwrap();
        for pos in n.positions() {
            assert!((pos[0] - 2.0).abs() < 1e-15);
        }
        assert_eq!(n.iteration(), 4);
    }

    #[test]
    fn hand_arithmetic_general_draws() {
        // t = 5, T = 10 -> a = 1; r1 = 0.75 -> A = 0.5; r2 = 0.25 -> C = 0.5.
        // Wolf at X = 10, leaders 1, 2, 3:
        //   D = |0.5*1 - 10| = 9.5, |0.5*2 - 10| = 9, |0.5*3 - 10| = 8.5
        //   proposals 1 - 4.75, 2 - 4.5, 3 - 4.25 -> mean (-3.75 - 2.5 - 1.25)/3 = -2.5
        let p = pack_1d(&[1.0, 2.0, 3.0, 10.0], &[0.1, 0.2, 0.3, 0.4], 5, 10);
        let n = step_with_draws(&p, |_, _, _| Draw { r1: 0.75, r2: 0.25 }).unwrap();
        assert!((n.positions()[3][0] + 2.5).abs() < 1e-12);
    }

    #[test]
    fn coincident_leaders_are_a_fixed_point() {
        let x = [0.1f64, -7.3, 1e-9, 123.456];
        for &v in &x {
            let p = pack_1d(&[v, v, v, v], &[1.0, 2.0, 3.0, 4.0], 2, 10);
            let n = step_with_draws(&p, |_, _, j| Draw { r1: 0.3 + 0.1 * j as f64, r2: 0.5 }).unwrap();
            for pos in n.positions() {
                assert_eq!(pos[0], v);
            }
        }
    }

    #[test]
    fn endpoint_moves_to_leader_mean() {
        let p = pack_1d(&[4.0, -2.0, 7.0, 50.0, -30.0], &[1.0, 2.0, 3.0, 4.0, 5.0], 10, 10);
        assert_eq!(p.convergence_factor(), 0.0);
        let n = step_with_draws(&p, |_, _, _| Draw { r1: 0.9, r2: 0.5 }).unwrap();
        for pos in n.positions() {
            assert!((pos[0] - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_c_distances_are_plain_gaps() {
        let xs = [4.0, -2.0, 7.0, 50.0, 1e-3, -123.25];
        for &l in &xs {
            for &x in &xs {
                assert_eq!(distance(0.5, l, x), (l - x).abs());
            }
        }
    }

    #[test]
    fn positions_stay_in_bounds() {
        let mut p = WolfPack::random(8, vec![(-1.0, 1.0), (0.0, 5.0)], 20, 3).unwrap();
        for _ in 0..20 {
            let fit: Vec<f64> = p.positions().iter().map(|x| -x[0] * 100.0 - x[1]).collect();
            p.set_fitness(&fit).unwrap();
            p = step_with_draws(&p, |w, d, j| Draw {
                r1: ((w + d + j) % 2) as f64,
                r2: 1.0,
            })
            .unwrap();
            for x in p.positions() {
                assert!((-1.0..=1.0).contains(&x[0]) && (0.0..=5.0).contains(&x[1]));
            }
        }
    }

    #[test]
    fn non_finite_fitness_ranks_last() {
        let mut p = WolfPack::random(4, vec![(0.0, 1.0)], 10, 0).unwrap();
        p.set_fitness(&[f64::NAN, 3.0, f64::INFINITY, 1.0]).unwrap();
        assert_eq!(p.leaders().unwrap(), [3, 1, 0]);
    }
}
