use crate::error::{Error, Result};
use crate::numcore::RealArray;

/// Snapshot pairs `(x_i, y_i)` with `y_i = φ_h(x_i)`.
///
/// States are stored once; pairs index into them, so a trajectory of `T`
/// states yields `T - 1` pairs without duplicating interior points.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowDataset {
    points: RealArray,
    inputs: Vec<usize>,
    targets: Vec<usize>,
    groups: Vec<usize>,
    h: f64,
}

impl FlowDataset {
    /// Independent pairs: row `i` of `x` maps to row `i` of `y`.
    pub fn from_pairs(x: &RealArray, y: &RealArray, h: f64) -> Result<Self> {
        if x.shape() != y.shape() || x.shape().len() != 2 {
            return Err(Error::invalid("pair arrays must be equal-shape matrices"));
        }
        let n_pairs = x.rows();
        let mut data = x.data().to_vec();
        data.extend_from_slice(y.data());
        let points = RealArray::matrix(2 * n_pairs, x.cols(), data);
        Self::build(
            points,
            (0..n_pairs).collect(),
            (n_pairs..2 * n_pairs).collect(),
            vec![0; n_pairs],
            h,
        )
    }

    /// Consecutive pairs along each trajectory (`[T, n]` arrays).
    pub fn from_trajectories(trajectories: &[RealArray], h: f64) -> Result<Self> {
        let first = trajectories
            .first()
            .ok_or_else(|| Error::invalid("dataset needs at least one trajectory"))?;
        let n = first.cols();
        let (mut data, mut inputs, mut targets, mut groups) = (vec![], vec![], vec![], vec![]);
        let mut offset = 0;
        for (g, traj) in trajectories.iter().enumerate() {
            if traj.cols() != n || traj.shape().len() != 2 {
                return Err(Error::dims("trajectory", n, traj.cols()));
            }
            if traj.rows() < 2 {
                return Err(Error::invalid("trajectory needs at least two states"));
            }
            data.extend_from_slice(traj.data());
            for i in 0..traj.rows() - 1 {
                inputs.push(offset + i);
                targets.push(offset + i + 1);
                groups.push(g);
            }
            offset += traj.rows();
        }
        Self::build(RealArray::matrix(offset, n, data), inputs, targets, groups, h)
    }

    fn build(points: RealArray, inputs: Vec<usize>, targets: Vec<usize>, groups: Vec<usize>, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid(format!("time step must be positive, got {h}")));
        }
        if inputs.is_empty() {
            return Err(Error::invalid("dataset has no pairs"));
        }
        if !points.is_finite() {
            return Err(Error::NonFinite("dataset contains non-finite values".into()));
        }
        Ok(Self {
            points,
            inputs,
            targets,
            groups,
            h,
        })
    }

    /// Number of pairs `N`.
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Ambient dimension `n`.
    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn points(&self) -> &RealArray {
        &self.points
    }

    pub fn input_index(&self) -> &[usize] {
        &self.inputs
    }

    pub fn target_index(&self) -> &[usize] {
        &self.targets
    }

    pub fn groups(&self) -> &[usize] {
        &self.groups
    }

    pub fn group_count(&self) -> usize {
        self.groups.iter().max().map_or(0, |g| g + 1)
    }

    pub fn x(&self) -> RealArray {
        self.points.gather_rows(&self.inputs)
    }

    pub fn y(&self) -> RealArray {
        self.points.gather_rows(&self.targets)
    }

    /// How often each stored point appears as an input or a target.
    pub fn multiplicity(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.points.rows()];
        for &i in self.inputs.iter().chain(&self.targets) {
            w[i] += 1.0;
        }
        w
    }

    /// Final target state of trajectory `g`.
    pub fn trajectory_end(&self, g: usize) -> Option<&[f64]> {
        self.groups
            .iter()
            .rposition(|&x| x == g)
            .map(|i| self.points.row(self.targets[i]))
    }
}
