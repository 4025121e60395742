use serde::{Deserialize, Serialize};

use crate::numerics::{
    count_nodes, propagate_natural, propagate_with_jumps, NumericsError, RadialGrid, Spacing,
    Trajectory,
};

use super::request::{Coefficient, SolveRequest, Validated};
use super::{Eigenstate, SolveError};

const TINY: f64 = 1e-300;
/// `∫κ dr` beyond the match point at which the inward solution starts.
const DECAY_LENGTHS: f64 = 50.0;
const MATCH_SHIFTS: usize = 5;

/// `W(E) = L_in − L_out` at the match point, with `L = u'/u`. `W` increases
/// through zero at a simple eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mismatch {
    pub energy: f64,
    pub w: f64,
    pub match_radius: f64,
    pub match_index: usize,
    /// Sign changes of the outward solution below the match point.
    pub nodes_out: usize,
    /// Sign changes of the inward solution above the match point.
    pub nodes_in: usize,
}

impl Mismatch {
    /// Number of eigenvalues below this energy.
    pub fn count(&self) -> usize {
        self.nodes_out + self.nodes_in + usize::from(self.w > 0.0)
    }
}

struct Shot {
    mismatch: Mismatch,
    outward: Trajectory,
    inward: Trajectory,
    inward_start: usize,
}

pub(crate) struct Shooter<'a> {
    req: &'a SolveRequest,
    valid: Validated,
    coefficient: Coefficient<'a>,
    jumps: Vec<f64>,
    /// First node of the outward propagation.
    origin: usize,
}

impl<'a> Shooter<'a> {
    pub(crate) fn new(req: &'a SolveRequest) -> Result<Self, SolveError> {
        let valid = req.validate()?;
        let mut jumps: Vec<f64> = req.potential.discontinuities().to_vec();
        if let Some(rc) = req.cutoff {
            jumps.retain(|&d| d > rc);
        }
        let nodes = req.grid.nodes();
        let origin = nodes
            .partition_point(|&r| r < valid.seed.resolvable_radius())
            .min(nodes.len() / 4);
        Ok(Self {
            req,
            valid,
            coefficient: req.coefficient(),
            jumps,
            origin,
        })
    }

    fn grid(&self) -> &RadialGrid {
        &self.req.grid
    }

    fn natural_t(&self, r: f64, f: f64) -> f64 {
        let h = self.grid().step();
        let q = match self.grid().spacing() {
            Spacing::Logarithmic => r * r * f + 0.25,
            _ => f,
        };
        h * h * q / 12.0
    }

    fn shoot(&self, energy: f64) -> Result<Shot, SolveError> {
        let grid = self.grid();
        let nodes = grid.nodes();
        let n = grid.len();
        if n < 16 {
            return Err(NumericsError::TooFewPoints(n).into());
        }
        let fvals: Vec<f64> = nodes
            .iter()
            .map(|&r| self.coefficient.eval(r, energy))
            .collect();
        let (lo, hi) = (4, n - 7);
        let base = match self.req.match_radius {
            Some(r) => grid.nearest(r),
            None => (lo..=hi).rev().find(|&k| fvals[k] < 0.0).unwrap_or(n / 2),
        }
        .clamp(lo, hi);
        let mut last_err = None;
        for shift in 0..=MATCH_SHIFTS {
            let m = if base + shift <= hi {
                base + shift
            } else {
                base - shift
            };
            match self.attempt(energy, m, &fvals) {
                Err(SolveError::Numerics(NumericsError::NodeAtMatch { r })) => {
                    last_err = Some(r);
                }
                other => return other,
            }
        }
        Err(SolveError::NodeAtMatch {
            r: last_err.unwrap_or(nodes[base]),
            shifts: MATCH_SHIFTS,
        })
    }

    fn inward_start(&self, m: usize, fvals: &[f64]) -> usize {
        let nodes = self.grid().nodes();
        let n = nodes.len();
        let mut acc = 0.0;
        for k in m + 1..n {
            let kappa = 0.5 * (fvals[k - 1].max(0.0).sqrt() + fvals[k].max(0.0).sqrt());
            acc += kappa * (nodes[k] - nodes[k - 1]);
            if k >= m + 4 && (acc > DECAY_LENGTHS || self.natural_t(nodes[k], fvals[k]) > 0.5) {
                return k;
            }
        }
        n - 1
    }

    fn attempt(&self, energy: f64, m: usize, fvals: &[f64]) -> Result<Shot, SolveError> {
        let grid = self.grid();
        let nodes = grid.nodes();
        let f = |r: f64| self.coefficient.eval(r, energy);
        let seed = self.valid.seed;
        let o = self.origin.min(m.saturating_sub(4));
        let local = self
            .coefficient
            .local_expansion(nodes[o], nodes[o + 1], energy);
        let (y0, dy) = seed.natural_pair(grid, o, local);
        let mut outward = propagate_natural(f, grid, o, m + 2, y0, dy, &self.jumps)?;
        if let Some(k) = outward.overflow() {
            return Err(SolveError::Overflow { r: nodes[k] });
        }
        if o > 0 {
            let scale = outward.value(o) / seed.value_with(nodes[o], local);
            outward.fill_below(|k| scale * seed.value_with(nodes[k], local));
        }
        let s = self.inward_start(m, fvals);
        let (v0, v1) = if fvals[s] > 0.0 {
            let kappa = 0.5 * (fvals[s].sqrt() + fvals[s - 1].max(0.0).sqrt());
            (1.0, (kappa * (nodes[s] - nodes[s - 1])).exp())
        } else {
            (0.0, 1.0)
        };
        let inward = propagate_with_jumps(f, grid, s, m - 2, v0, v1, &self.jumps)?;
        if let Some(k) = inward.overflow() {
            return Err(SolveError::Overflow { r: nodes[k] });
        }
        let (uo, ui) = (outward.value(m), inward.value(m));
        if uo.abs() < TINY || ui.abs() < TINY {
            return Err(NumericsError::NodeAtMatch { r: nodes[m] }.into());
        }
        let l_out = outward.derivative_at_node(m)? / uo;
        let l_in = inward.derivative_at_node(m)? / ui;
        let mismatch = Mismatch {
            energy,
            w: l_in - l_out,
            match_radius: nodes[m],
            match_index: m,
            nodes_out: count_nodes(&outward, nodes[0], nodes[m]),
            nodes_in: count_nodes(&inward, nodes[m], nodes[s]),
        };
        Ok(Shot {
            mismatch,
            outward,
            inward,
            inward_start: s,
        })
    }

    pub(crate) fn mismatch(&self, energy: f64) -> Result<Mismatch, SolveError> {
        self.shoot(energy).map(|s| s.mismatch)
    }

    /// Bisects on the eigenvalue count for the state with `n_r` nodes.
    /// `cache` holds `(E, count)` pairs from earlier calls.
    fn bracket(
        &self,
        n_r: usize,
        cache: &mut Vec<(f64, usize)>,
    ) -> Result<(f64, usize), SolveError> {
        let tol = self.req.tolerances;
        let (e_lo, e_hi) = self.req.energy_window;
        let count_at = |e: f64, cache: &mut Vec<(f64, usize)>| -> Result<usize, SolveError> {
            if let Some(&(_, c)) = cache.iter().find(|&&(x, _)| x == e) {
                return Ok(c);
            }
            let c = self.mismatch(e)?.count();
            cache.push((e, c));
            Ok(c)
        };
        let below = count_at(e_lo, cache)?;
        let above = count_at(e_hi, cache)?;
        if n_r < below || n_r >= above {
            return Err(SolveError::NotFound {
                n_r,
                window: self.req.energy_window,
                first: below,
                end: above,
            });
        }
        let mut lo = cache
            .iter()
            .filter(|&&(_, c)| c <= n_r)
            .map(|&(e, _)| e)
            .fold(e_lo, f64::max);
        let mut hi = cache
            .iter()
            .filter(|&&(_, c)| c > n_r)
            .map(|&(e, _)| e)
            .fold(e_hi, f64::min);
        let mut iterations = 0;
        while hi - lo > tol.energy_rel * lo.abs().max(hi.abs()).max(TINY) {
            if iterations == tol.max_iterations {
                return Err(SolveError::NotConverged { n_r, lo, hi });
            }
            let mid = 0.5 * (lo + hi);
            if count_at(mid, cache)? <= n_r {
                lo = mid;
            } else {
                hi = mid;
            }
            iterations += 1;
        }
        Ok((0.5 * (lo + hi), iterations))
    }

    pub(crate) fn solve(
        &self,
        n_r: usize,
        cache: &mut Vec<(f64, usize)>,
    ) -> Result<Eigenstate, SolveError> {
        let (energy, iterations) = self.bracket(n_r, cache)?;
        let shot = self.shoot(energy)?;
        let u = merge(&shot);
        let norm = u.norm_squared();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(SolveError::Overflow {
                r: shot.mismatch.match_radius,
            });
        }
        let mut u = u;
        let sign = u
            .values()
            .iter()
            .find(|v| v.abs() > TINY)
            .map_or(1.0, |v| v.signum());
        u.scale(sign / norm.sqrt());
        let node_count = count_nodes(&u, self.grid().r_min(), self.grid().r_max());
        Ok(Eigenstate {
            energy,
            node_count,
            norm_check: u.norm_squared(),
            near_origin_exponent: near_origin_exponent(&u),
            seed: self.valid.seed,
            policy: self.req.policy,
            indicial: self.valid.indicial,
            l: self.req.l,
            mismatch: shot.mismatch.w,
            match_radius: shot.mismatch.match_radius,
            iterations,
            u,
        })
    }

    pub(crate) fn counts(&self) -> Result<(usize, usize), SolveError> {
        let (e_lo, e_hi) = self.req.energy_window;
        Ok((self.mismatch(e_lo)?.count(), self.mismatch(e_hi)?.count()))
    }
}

/// Outward values up to the match node, inward values rescaled to agree
/// there, zero beyond the inward starting node.
fn merge(shot: &Shot) -> Trajectory {
    let m = shot.mismatch.match_index;
    let grid = shot.outward.grid().clone();
    let factor = shot.outward.value(m) / shot.inward.value(m);
    let values = (0..grid.len())
        .map(|k| {
            if k <= m {
                shot.outward.value(k)
            } else if k <= shot.inward_start {
                factor * shot.inward.value(k)
            } else {
                0.0
            }
        })
        .collect();
    Trajectory::from_samples(grid, values)
}

/// Least-squares slope of `ln|u|` against `ln r` over the first decade of
/// nodes above `r_min`.
pub fn near_origin_exponent(u: &Trajectory) -> Option<f64> {
    let nodes = u.grid().nodes();
    let start = 1;
    let end = nodes
        .partition_point(|&r| r <= 10.0 * nodes[start])
        .max(start + 3);
    let pts: Vec<(f64, f64)> = (start..end.min(nodes.len()))
        .filter(|&k| u.value(k).abs() > TINY)
        .map(|k| (nodes[k].ln(), u.value(k).abs().ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), &(x, y)| {
        (a + (x - mx) * (y - my), b + (x - mx) * (x - mx))
    });
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `W(E)` for one trial energy.
pub fn mismatch(req: &SolveRequest, energy: f64) -> Result<Mismatch, SolveError> {
    Shooter::new(req)?.mismatch(energy)
}

/// `W(E)` at each energy, for dense scans.
pub fn scan_mismatch(req: &SolveRequest, energies: &[f64]) -> Result<Vec<Mismatch>, SolveError> {
    let shooter = Shooter::new(req)?;
    energies.iter().map(|&e| shooter.mismatch(e)).collect()
}

/// The bound state with `n_r` nodes.
pub fn solve_state(req: &SolveRequest, n_r: usize) -> Result<Eigenstate, SolveError> {
    Shooter::new(req)?.solve(n_r, &mut Vec::new())
}

/// Bound states in the energy window, ascending, at most `max_states`.
pub fn spectrum(req: &SolveRequest, max_states: usize) -> Result<Vec<Eigenstate>, SolveError> {
    let shooter = Shooter::new(req)?;
    let (first, end) = shooter.counts()?;
    let mut cache = Vec::new();
    (first..end)
        .take(max_states)
        .map(|k| shooter.solve(k, &mut cache))
        .collect()
}

/// Number of eigenvalues inside the energy window.
pub fn count_in_window(req: &SolveRequest) -> Result<usize, SolveError> {
    let (first, end) = Shooter::new(req)?.counts()?;
    Ok(end.saturating_sub(first))
}

/// `E_{k+1}/E_k` for consecutive states.
pub fn successive_ratios(states: &[Eigenstate]) -> Vec<f64> {
    states
        .windows(2)
        .map(|w| w[1].energy / w[0].energy)
        .collect()
}
