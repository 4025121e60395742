use serde::{Deserialize, Serialize};

use super::{NumericsError, RadialGrid, Spacing};

/// Values beyond this magnitude trigger a power-of-two renormalization.
pub const OVERFLOW_GUARD: f64 = 1e200;
const RESCALE_EXP: i32 = 600;
const TINY: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Outward,
    Inward,
}

/// Samples of `u` on a grid, valid on the inclusive index span.
///
/// The true solution is `values · 2^log2_scale`; rescaling is applied to the
/// whole span at once, so ratios and log-derivatives need no correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: RadialGrid,
    values: Vec<f64>,
    span: (usize, usize),
    direction: Option<Direction>,
    log2_scale: i64,
    overflow: Option<usize>,
}

impl Trajectory {
    /// Wraps samples on the full grid, e.g. a merged eigenfunction or values
    /// read back from a file.
    pub fn from_samples(grid: RadialGrid, values: Vec<f64>) -> Self {
        assert_eq!(grid.len(), values.len(), "one sample per grid node");
        let n = values.len();
        let overflow = values.iter().position(|v| !v.is_finite());
        Self {
            grid,
            values,
            span: (0, n - 1),
            direction: None,
            log2_scale: 0,
            overflow,
        }
    }

    /// Samples `u` at every node.
    pub fn from_fn(grid: RadialGrid, u: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().iter().map(|&r| u(r)).collect();
        Self::from_samples(grid, values)
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Inclusive index range holding propagated values.
    pub fn span(&self) -> (usize, usize) {
        self.span
    }

    /// `None` for assembled trajectories.
    pub fn direction(&self) -> Option<Direction> {
        self.direction
    }

    pub fn log2_scale(&self) -> i64 {
        self.log2_scale
    }

    /// Index where the values stopped being finite, if any.
    pub fn overflow(&self) -> Option<usize> {
        self.overflow
    }

    pub fn is_finite(&self) -> bool {
        self.overflow.is_none()
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Extends the span down to node 0 with `u(k)` for each node below it.
    pub fn fill_below(&mut self, u: impl Fn(usize) -> f64) {
        for k in 0..self.span.0 {
            self.values[k] = u(k);
        }
        self.span.0 = 0;
    }

    /// `du/dr` at node `i` from a 5-point centered difference.
    pub fn derivative_at_node(&self, i: usize) -> Result<f64, NumericsError> {
        let (lo, hi) = self.span;
        if i < lo + 2 || i + 2 > hi {
            return Err(self.outside(self.grid.nodes()[i]));
        }
        let u = &self.values;
        let h = self.grid.step();
        let d = (u[i - 2] - 8.0 * u[i - 1] + 8.0 * u[i + 1] - u[i + 2]) / (12.0 * h);
        match self.grid.spacing() {
            Spacing::Linear => Ok(d),
            Spacing::Logarithmic => Ok(d / self.grid.nodes()[i]),
            Spacing::Irregular => Err(NumericsError::NonUniformGrid),
        }
    }

    /// Cubic (4-point Lagrange) interpolation of `u` and of the nodal
    /// derivatives, in the grid's natural coordinate.
    pub fn value_and_derivative(&self, r: f64) -> Result<(f64, f64), NumericsError> {
        let i = self.stencil_base(r)?;
        let xs: Vec<f64> = (i..i + 4)
            .map(|k| self.grid.coordinate(self.grid.nodes()[k]))
            .collect();
        let x = self.grid.coordinate(r);
        let w = lagrange_weights(&xs, x);
        let mut u = 0.0;
        let mut du = 0.0;
        for (j, k) in (i..i + 4).enumerate() {
            u += w[j] * self.values[k];
            du += w[j] * self.derivative_at_node(k)?;
        }
        Ok((u, du))
    }

    pub fn value_at(&self, r: f64) -> Result<f64, NumericsError> {
        self.value_and_derivative(r).map(|(u, _)| u)
    }

    /// Smallest radius at which [`Self::value_and_derivative`] is defined.
    pub fn min_resolved_radius(&self) -> f64 {
        self.grid.nodes()[(self.span.0 + 3).min(self.span.1)]
    }

    /// Largest radius at which [`Self::value_and_derivative`] is defined.
    pub fn max_resolved_radius(&self) -> f64 {
        self.grid.nodes()[self.span.1.saturating_sub(3).max(self.span.0)]
    }

    fn stencil_base(&self, r: f64) -> Result<usize, NumericsError> {
        if self.grid.spacing() == Spacing::Irregular {
            return Err(NumericsError::NonUniformGrid);
        }
        let (lo, hi) = self.span;
        if !(r >= self.min_resolved_radius() && r <= self.max_resolved_radius()) || hi < lo + 7 {
            return Err(self.outside(r));
        }
        // nodes i..i+3 with i+1 ≤ r's cell, each with a ±2 derivative stencil
        let cell = self.grid.locate(r);
        Ok(cell.saturating_sub(1).clamp(lo + 2, hi - 5))
    }

    fn outside(&self, r: f64) -> NumericsError {
        NumericsError::OutsideSpan {
            r,
            lo: self.grid.nodes()[self.span.0],
            hi: self.grid.nodes()[self.span.1],
        }
    }

    /// `∫ u² dr` over the span: Simpson in the natural coordinate, with a
    /// trapezoid on a trailing odd interval.
    pub fn norm_squared(&self) -> f64 {
        let (lo, hi) = self.span;
        let nodes = self.grid.nodes();
        let weight = |k: usize| {
            let u = self.values[k];
            match self.grid.spacing() {
                Spacing::Logarithmic => u * u * nodes[k],
                _ => u * u,
            }
        };
        if self.grid.spacing() == Spacing::Irregular {
            return (lo..hi)
                .map(|k| {
                    0.5 * (nodes[k + 1] - nodes[k])
                        * (self.values[k].powi(2) + self.values[k + 1].powi(2))
                })
                .sum();
        }
        let h = self.grid.step();
        let intervals = hi - lo;
        let pairs = intervals / 2;
        let mut sum = 0.0;
        for p in 0..pairs {
            let k = lo + 2 * p;
            sum += h / 3.0 * (weight(k) + 4.0 * weight(k + 1) + weight(k + 2));
        }
        if intervals % 2 == 1 {
            sum += 0.5 * h * (weight(hi - 1) + weight(hi));
        }
        sum
    }

    /// Multiplies every sample by `factor`.
    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }
}

fn lagrange_weights(xs: &[f64], x: f64) -> Vec<f64> {
    (0..xs.len())
        .map(|j| {
            xs.iter()
                .enumerate()
                .filter(|&(m, _)| m != j)
                .map(|(_, &xm)| (x - xm) / (xs[j] - xm))
                .product()
        })
        .collect()
}

/// Propagates `u'' = f(r) u` over the whole grid from seeds at the first two
/// nodes in the given direction.
pub fn numerov_propagate<F>(
    f: F,
    grid: &RadialGrid,
    u0: f64,
    u1: f64,
    direction: Direction,
) -> Result<Trajectory, NumericsError>
where
    F: Fn(f64) -> f64,
{
    let last = grid.len() - 1;
    match direction {
        Direction::Outward => propagate_between(f, grid, 0, last, u0, u1),
        Direction::Inward => propagate_between(f, grid, last, 0, u0, u1),
    }
}

/// Propagates from node `start` to node `stop` (either order) with `u0` at
/// `start` and `u1` at its neighbor toward `stop`.
pub fn propagate_between<F>(
    f: F,
    grid: &RadialGrid,
    start: usize,
    stop: usize,
    u0: f64,
    u1: f64,
) -> Result<Trajectory, NumericsError>
where
    F: Fn(f64) -> f64,
{
    propagate_with_jumps(f, grid, start, stop, u0, u1, &[])
}

/// As [`propagate_between`], for an `f` that jumps at the radii in `jumps`.
///
/// A jump that falls on a grid node is stepped over with the one-sided
/// limits of `f` and its slope, which keeps the scheme fourth order. Jumps
/// between nodes are ignored.
pub fn propagate_with_jumps<F>(
    f: F,
    grid: &RadialGrid,
    start: usize,
    stop: usize,
    u0: f64,
    u1: f64,
    jumps: &[f64],
) -> Result<Trajectory, NumericsError>
where
    F: Fn(f64) -> f64,
{
    let n = grid.len();
    if start >= n || stop >= n || start.abs_diff(stop) < 1 {
        return Err(NumericsError::BadRange {
            start,
            stop,
            len: n,
        });
    }
    let next = if stop > start { start + 1 } else { start - 1 };
    let y0 = grid.natural_value(start, u0);
    let y1 = grid.natural_value(next, u1);
    propagate_natural(f, grid, start, stop, y0, y1 - y0, jumps)
}

/// As [`propagate_with_jumps`], seeded in the grid's natural variable: `y0`
/// at `start` and the difference `dy = y1 − y0` to the next node. Seeds whose
/// difference is known to full relative precision, such as a recessive
/// power-law branch, should enter this way.
pub fn propagate_natural<F>(
    f: F,
    grid: &RadialGrid,
    start: usize,
    stop: usize,
    y0: f64,
    dy: f64,
    jumps: &[f64],
) -> Result<Trajectory, NumericsError>
where
    F: Fn(f64) -> f64,
{
    let n = grid.len();
    if start >= n || stop >= n || start.abs_diff(stop) < 1 {
        return Err(NumericsError::BadRange {
            start,
            stop,
            len: n,
        });
    }
    let spacing = grid.spacing();
    if spacing == Spacing::Irregular {
        return Err(NumericsError::NonUniformGrid);
    }
    let nodes = grid.nodes();
    let h = grid.step();
    let h2 = h * h / 12.0;
    let logarithmic = spacing == Spacing::Logarithmic;
    // coefficient of the propagated variable y (u, or u/√r on log grids)
    let q_of = |r: f64| {
        if logarithmic {
            r * r * f(r) + 0.25
        } else {
            f(r)
        }
    };
    let at_coordinate = |x: f64| if logarithmic { x.exp() } else { x };
    let jump_nodes: Vec<usize> = jumps
        .iter()
        .filter_map(|&j| {
            let k = grid.nearest(j);
            ((nodes[k] - j).abs() <= 1e-9 * j.abs().max(h) && k > 0 && k + 1 < n).then_some(k)
        })
        .collect();

    let direction = if stop > start {
        Direction::Outward
    } else {
        Direction::Inward
    };
    let sign = match direction {
        Direction::Outward => 1.0,
        Direction::Inward => -1.0,
    };
    // one-sided limits (behind, ahead) of q and dq/ds along the travel direction
    let one_sided = |k: usize| -> Result<[f64; 4], NumericsError> {
        let x = grid.coordinate(nodes[k]);
        let eps = 1e-6 * h;
        let q = |d: f64| q_of(at_coordinate(x + sign * d * eps));
        let (a1, a2, b1, b2) = (q(1.0), q(2.0), q(-1.0), q(-2.0));
        let out = [
            2.0 * b1 - b2,
            2.0 * a1 - a2,
            (b1 - b2) / eps,
            (a2 - a1) / eps,
        ];
        if out.iter().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(NumericsError::NonFiniteCoefficient {
                index: k,
                r: nodes[k],
            })
        }
    };
    let coeff = |k: usize| -> Result<f64, NumericsError> {
        if jump_nodes.contains(&k) {
            let [behind, ahead, _, _] = one_sided(k)?;
            return Ok(0.5 * (behind + ahead));
        }
        let r = nodes[k];
        let q = q_of(r);
        if q.is_finite() {
            Ok(q)
        } else {
            Err(NumericsError::NonFiniteCoefficient { index: k, r })
        }
    };

    let order: Vec<usize> = match direction {
        Direction::Outward => (start..=stop).collect(),
        Direction::Inward => (stop..=start).rev().collect(),
    };

    let mut y = vec![0.0; n];
    let mut log2_scale: i64 = 0;
    let mut overflow = None;
    let (k0, k1) = (order[0], order[1]);
    y[k0] = y0;
    y[k1] = y0 + dy;
    let mut t_prev = h2 * coeff(k0)?;
    let mut t_cur = h2 * coeff(k1)?;
    // summed form: z = (1 − t) y and its first difference are carried
    // separately, which keeps roundoff out of the slope
    let mut z = (1.0 - t_cur) * y[k1];
    let mut dz = dy - t_cur * y[k1] + t_prev * y0;
    for (p, w) in order.windows(3).enumerate() {
        let (km, k, kp) = (w[0], w[1], w[2]);
        let t_next = h2 * coeff(kp)?;
        if t_next >= 1.0 {
            return Err(NumericsError::StepTooCoarse {
                index: kp,
                r: nodes[kp],
                t: t_next,
            });
        }
        let near_jump = [km, k, kp].iter().any(|j| jump_nodes.contains(j));
        let next = if near_jump {
            // a jump node seen from a neighboring stencil takes the limit from that side
            let t_m = if jump_nodes.contains(&km) {
                h2 * one_sided(km)?[1]
            } else {
                t_prev
            };
            let t_p = if jump_nodes.contains(&kp) {
                h2 * one_sided(kp)?[0]
            } else {
                t_next
            };
            let mut rhs = 2.0 * (1.0 + 5.0 * t_cur) * y[k] - (1.0 - t_m) * y[km];
            if jump_nodes.contains(&k) {
                let [behind, ahead, d_behind, d_ahead] = one_sided(k)?;
                let dy = backward_slope(&y, &order[..=p + 1], h);
                rhs += h * h * h / 12.0 * ((ahead - behind) * dy + (d_ahead - d_behind) * y[k]);
            }
            let next = rhs / (1.0 - t_p);
            let z_next = (1.0 - t_next) * next;
            dz = z_next - (1.0 - t_cur) * y[k];
            z = z_next;
            next
        } else {
            dz += 12.0 * t_cur * y[k];
            z += dz;
            z / (1.0 - t_next)
        };
        if !next.is_finite() {
            overflow = Some(kp);
            break;
        }
        y[kp] = next;
        if next.abs() > OVERFLOW_GUARD {
            let factor = 2f64.powi(-RESCALE_EXP);
            for &j in &order[..=p + 2] {
                y[j] *= factor;
            }
            z *= factor;
            dz *= factor;
            log2_scale += RESCALE_EXP as i64;
        }
        t_prev = t_cur;
        t_cur = t_next;
    }

    let mut values = y;
    if logarithmic {
        for &k in &order {
            values[k] *= nodes[k].sqrt();
        }
    }
    let span = (start.min(stop), start.max(stop));
    Ok(Trajectory {
        grid: grid.clone(),
        values,
        span,
        direction: Some(direction),
        log2_scale,
        overflow,
    })
}

/// `dy/ds` at the last node of `path` from backward differences along it.
fn backward_slope(y: &[f64], path: &[usize], h: f64) -> f64 {
    let v = |back: usize| y[path[path.len() - 1 - back]];
    match path.len() {
        0 | 1 => 0.0,
        2 => (v(0) - v(1)) / h,
        3 => (3.0 * v(0) - 4.0 * v(1) + v(2)) / (2.0 * h),
        _ => (11.0 * v(0) - 18.0 * v(1) + 9.0 * v(2) - 2.0 * v(3)) / (6.0 * h),
    }
}

/// `u'/u` at `r`.
pub fn log_derivative(t: &Trajectory, r: f64) -> Result<f64, NumericsError> {
    let (u, du) = t.value_and_derivative(r)?;
    if u.abs() < TINY {
        return Err(NumericsError::NodeAtMatch { r });
    }
    Ok(du / u)
}

/// Strict sign changes of `u` between consecutive nodes inside
/// `[r_lo, r_hi]`; samples with `|u| < 1e-300` take the sign of their
/// nearest nonzero neighbor.
pub fn count_nodes(t: &Trajectory, r_lo: f64, r_hi: f64) -> usize {
    let nodes = t.grid().nodes();
    let (lo, hi) = t.span();
    let first = nodes.partition_point(|&r| r < r_lo).max(lo);
    let last = nodes.partition_point(|&r| r <= r_hi).min(hi + 1);
    count_sign_changes(&t.values()[first.min(last)..last])
}

pub(crate) fn count_sign_changes(values: &[f64]) -> usize {
    let mut count = 0;
    let mut prev: Option<bool> = None;
    for &v in values {
        if v.abs() < TINY || !v.is_finite() {
            continue;
        }
        let positive = v > 0.0;
        if let Some(p) = prev {
            if p != positive {
                count += 1;
            }
        }
        prev = Some(positive);
    }
    count
}
