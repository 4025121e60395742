use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::NumericsError;

pub const MIN_POINTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    /// Uniform in `r`.
    Linear,
    /// Uniform in `ln r`.
    Logarithmic,
    /// Anything else; not propagatable.
    Irregular,
}

/// Strictly increasing radius nodes, `nodes[0] = r_min`, `nodes[n-1] = r_max`.
///
/// Cloning is cheap: the nodes are shared.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    spacing: Spacing,
    nodes: Arc<[f64]>,
    /// `h` for linear grids, `Δ ln r` for logarithmic ones.
    step: f64,
}

impl RadialGrid {
    pub fn linear(r_min: f64, r_max: f64, n_points: usize) -> Result<Self, NumericsError> {
        check_extent(r_min, r_max, n_points)?;
        let h = (r_max - r_min) / (n_points - 1) as f64;
        let mut nodes: Vec<f64> = (0..n_points).map(|i| r_min + i as f64 * h).collect();
        nodes[n_points - 1] = r_max;
        Ok(Self {
            spacing: Spacing::Linear,
            nodes: nodes.into(),
            step: h,
        })
    }

    pub fn logarithmic(r_min: f64, r_max: f64, n_points: usize) -> Result<Self, NumericsError> {
        check_extent(r_min, r_max, n_points)?;
        let x0 = r_min.ln();
        let dx = (r_max.ln() - x0) / (n_points - 1) as f64;
        let mut nodes: Vec<f64> = (0..n_points).map(|i| (x0 + i as f64 * dx).exp()).collect();
        nodes[0] = r_min;
        nodes[n_points - 1] = r_max;
        Ok(Self {
            spacing: Spacing::Logarithmic,
            nodes: nodes.into(),
            step: dx,
        })
    }

    /// Linear grid from `r_min` with `n_points` nodes, one of them exactly at
    /// `anchor`. The step is shrunk just enough for `anchor − r_min` to be a
    /// whole number of steps, so `r_max` may move inward by up to one part in
    /// that number. Anchors outside `(r_min, r_max)` are ignored.
    pub fn linear_anchored(
        r_min: f64,
        r_max: f64,
        n_points: usize,
        anchor: f64,
    ) -> Result<Self, NumericsError> {
        let plain = Self::linear(r_min, r_max, n_points)?;
        if !(anchor > r_min && anchor < r_max) {
            return Ok(plain);
        }
        let steps = ((anchor - r_min) / plain.step).ceil();
        let h = (anchor - r_min) / steps;
        let mut nodes: Vec<f64> = (0..n_points).map(|i| r_min + i as f64 * h).collect();
        nodes[steps as usize] = anchor;
        Ok(Self {
            spacing: Spacing::Linear,
            nodes: nodes.into(),
            step: h,
        })
    }

    /// Logarithmic counterpart of [`Self::linear_anchored`].
    pub fn logarithmic_anchored(
        r_min: f64,
        r_max: f64,
        n_points: usize,
        anchor: f64,
    ) -> Result<Self, NumericsError> {
        let plain = Self::logarithmic(r_min, r_max, n_points)?;
        if !(anchor > r_min && anchor < r_max) {
            return Ok(plain);
        }
        let x0 = r_min.ln();
        let steps = ((anchor.ln() - x0) / plain.step).ceil();
        let dx = (anchor.ln() - x0) / steps;
        let mut nodes: Vec<f64> = (0..n_points).map(|i| (x0 + i as f64 * dx).exp()).collect();
        nodes[0] = r_min;
        nodes[steps as usize] = anchor;
        Ok(Self {
            spacing: Spacing::Logarithmic,
            nodes: nodes.into(),
            step: dx,
        })
    }

    pub fn new(
        spacing: Spacing,
        r_min: f64,
        r_max: f64,
        n_points: usize,
    ) -> Result<Self, NumericsError> {
        match spacing {
            Spacing::Linear => Self::linear(r_min, r_max, n_points),
            Spacing::Logarithmic => Self::logarithmic(r_min, r_max, n_points),
            Spacing::Irregular => Err(NumericsError::NonUniformGrid),
        }
    }

    /// Wraps explicit nodes, detecting linear or logarithmic spacing to
    /// 1e-10 relative.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self, NumericsError> {
        let n = nodes.len();
        if n < MIN_POINTS {
            return Err(NumericsError::TooFewPoints(n));
        }
        if !nodes.iter().all(|r| r.is_finite() && *r > 0.0) {
            return Err(NumericsError::BadExtent {
                r_min: nodes[0],
                r_max: nodes[n - 1],
            });
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(NumericsError::NotIncreasing);
        }
        let uniform = |xs: &[f64]| {
            let h = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
            let ok = xs.windows(2).all(|w| {
                ((w[1] - w[0]) - h).abs() <= 1e-10 * h.abs().max(1e-300) + 1e-14 * w[1].abs()
            });
            ok.then_some(h)
        };
        let (spacing, step) = if let Some(h) = uniform(&nodes) {
            (Spacing::Linear, h)
        } else {
            let logs: Vec<f64> = nodes.iter().map(|r| r.ln()).collect();
            match uniform(&logs) {
                Some(dx) => (Spacing::Logarithmic, dx),
                None => (Spacing::Irregular, f64::NAN),
            }
        };
        Ok(Self {
            spacing,
            nodes: nodes.into(),
            step,
        })
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn r_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Step in the grid's natural coordinate (`r` or `ln r`).
    pub fn step(&self) -> f64 {
        self.step
    }

    /// The variable Numerov propagates on this grid: `u` itself, or `u/√r`
    /// on logarithmic grids.
    pub fn natural_value(&self, k: usize, u: f64) -> f64 {
        match self.spacing {
            Spacing::Logarithmic => u / self.nodes[k].sqrt(),
            _ => u,
        }
    }

    /// Maps `r` to the grid's natural coordinate.
    pub fn coordinate(&self, r: f64) -> f64 {
        match self.spacing {
            Spacing::Logarithmic => r.ln(),
            _ => r,
        }
    }

    /// Index of the last node `≤ r`, clamped to the grid.
    pub fn locate(&self, r: f64) -> usize {
        self.nodes.partition_point(|&x| x <= r).saturating_sub(1)
    }

    /// Index of the node closest to `r`.
    pub fn nearest(&self, r: f64) -> usize {
        let i = self.locate(r);
        if i + 1 < self.len() && (self.nodes[i + 1] - r).abs() < (r - self.nodes[i]).abs() {
            i + 1
        } else {
            i
        }
    }
}

fn check_extent(r_min: f64, r_max: f64, n_points: usize) -> Result<(), NumericsError> {
    if n_points < MIN_POINTS {
        return Err(NumericsError::TooFewPoints(n_points));
    }
    if !(r_min.is_finite() && r_max.is_finite() && r_min > 0.0 && r_max > r_min) {
        return Err(NumericsError::BadExtent { r_min, r_max });
    }
    Ok(())
}
