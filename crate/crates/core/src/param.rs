//! Parameter points, rectangular search grids and set-valued results over them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A parameter value θ = (β, γ): β is the parameter of interest, γ the nuisance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterPoint {
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl ParameterPoint {
    pub fn new(beta: Vec<f64>, gamma: Vec<f64>) -> Result<Self> {
        if beta.iter().chain(&gamma).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("parameter entries must be finite".into()));
        }
        Ok(Self { beta, gamma })
    }

    pub fn scalar(beta: f64, gamma: f64) -> Self {
        Self { beta: vec![beta], gamma: vec![gamma] }
    }

    /// θ flattened as (β, γ).
    pub fn flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.extend_from_slice(&self.beta);
        v.extend_from_slice(&self.gamma);
        v
    }

    pub fn dim(&self) -> usize {
        self.beta.len() + self.gamma.len()
    }
}

/// One closed axis `[lower, upper]` split into `steps` equally spaced points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lower: f64,
    pub upper: f64,
    pub steps: usize,
}

impl Axis {
    pub fn new(lower: f64, upper: f64, steps: usize) -> Result<Self> {
        let axis = Self { lower, upper, steps };
        axis.validate()?;
        Ok(axis)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lower.is_finite() || !self.upper.is_finite() {
            return Err(Error::InvalidGrid("axis bounds must be finite".into()));
        }
        if self.lower >= self.upper {
            return Err(Error::InvalidGrid(format!(
                "axis lower bound {} must be below upper bound {}",
                self.lower, self.upper
            )));
        }
        if self.steps < 2 {
            return Err(Error::InvalidGrid(format!("axis needs at least 2 steps, got {}", self.steps)));
        }
        Ok(())
    }

    /// Coordinate of the i-th point: `lower + i·(upper−lower)/(steps−1)`.
    #[inline]
    pub fn value(&self, i: usize) -> f64 {
        self.lower + i as f64 * (self.upper - self.lower) / (self.steps - 1) as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.steps).map(|i| self.value(i)).collect()
    }

    pub fn spacing(&self) -> f64 {
        (self.upper - self.lower) / (self.steps - 1) as f64
    }
}

/// A lattice over a list of axes, enumerated row-major (last axis fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub axes: Vec<Axis>,
}

impl Lattice {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        for a in &axes {
            a.validate()?;
        }
        Ok(Self { axes })
    }

    /// Number of points; a lattice with no axes has the single empty point.
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.steps).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn indices(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes.len()];
        for (k, axis) in self.axes.iter().enumerate().rev() {
            idx[k] = flat % axis.steps;
            flat /= axis.steps;
        }
        idx
    }

    pub fn flat_index(&self, indices: &[usize]) -> usize {
        assert_eq!(indices.len(), self.axes.len());
        indices
            .iter()
            .zip(&self.axes)
            .fold(0, |acc, (&i, axis)| {
                assert!(i < axis.steps, "index out of range");
                acc * axis.steps + i
            })
    }

    pub fn coords(&self, flat: usize) -> Vec<f64> {
        self.indices(flat)
            .into_iter()
            .zip(&self.axes)
            .map(|(i, a)| a.value(i))
            .collect()
    }

    pub fn enumerate(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.coords(i)).collect()
    }
}

/// Search grid over θ = (β, γ): the β lattice is the outer loop, γ the inner one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterGrid {
    pub beta: Lattice,
    pub gamma: Lattice,
}

impl ParameterGrid {
    pub fn new(beta_axes: Vec<Axis>, gamma_axes: Vec<Axis>) -> Result<Self> {
        if beta_axes.is_empty() {
            return Err(Error::InvalidGrid("grid needs at least one beta axis".into()));
        }
        Ok(Self { beta: Lattice::new(beta_axes)?, gamma: Lattice::new(gamma_axes)? })
    }

    /// Scalar β and scalar γ.
    pub fn plane(beta: Axis, gamma: Axis) -> Result<Self> {
        Self::new(vec![beta], vec![gamma])
    }

    pub fn len(&self) -> usize {
        self.beta.len() * self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn gamma_len(&self) -> usize {
        self.gamma.len()
    }

    pub fn index(&self, beta_index: usize, gamma_index: usize) -> usize {
        beta_index * self.gamma.len() + gamma_index
    }

    /// Splits a flat grid index into (β index, γ index).
    pub fn split(&self, flat: usize) -> (usize, usize) {
        (flat / self.gamma.len(), flat % self.gamma.len())
    }

    pub fn point(&self, flat: usize) -> ParameterPoint {
        let (b, g) = self.split(flat);
        ParameterPoint { beta: self.beta.coords(b), gamma: self.gamma.coords(g) }
    }

    pub fn all_axes(&self) -> Vec<Axis> {
        self.beta.axes.iter().chain(&self.gamma.axes).copied().collect()
    }

    pub fn full_lattice(&self) -> Lattice {
        Lattice { axes: self.all_axes() }
    }

    pub fn enumerate(&self) -> Vec<ParameterPoint> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    pub fn empty_mask(&self) -> GridMask {
        GridMask::empty(self.full_lattice())
    }

    pub fn gamma_mask(&self) -> GridMask {
        GridMask::empty(self.gamma.clone())
    }
}

pub fn enumerate(grid: &ParameterGrid) -> Vec<ParameterPoint> {
    grid.enumerate()
}

/// A subset of a lattice, stored as one flag per lattice point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMask {
    lattice: Lattice,
    flags: Vec<bool>,
}

impl GridMask {
    pub fn empty(lattice: Lattice) -> Self {
        let n = lattice.len();
        Self { lattice, flags: vec![false; n] }
    }

    pub fn full(lattice: Lattice) -> Self {
        let n = lattice.len();
        Self { lattice, flags: vec![true; n] }
    }

    pub fn from_flags(lattice: Lattice, flags: Vec<bool>) -> Result<Self> {
        if flags.len() != lattice.len() {
            return Err(Error::InvalidGrid(format!(
                "mask has {} flags but the grid has {} points",
                flags.len(),
                lattice.len()
            )));
        }
        Ok(Self { lattice, flags })
    }

    pub fn from_indices(lattice: Lattice, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut mask = Self::empty(lattice);
        for i in indices {
            mask.flags[i] = true;
        }
        mask
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.flags[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.flags[i] = value;
    }

    pub fn count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn none(&self) -> bool {
        !self.flags.iter().any(|&f| f)
    }

    pub fn flagged(&self) -> impl Iterator<Item = usize> + '_ {
        self.flags.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| i)
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.lattice != other.lattice {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn is_subset(&self, other: &Self) -> Result<bool> {
        self.check_same(other)?;
        Ok(self.flags.iter().zip(&other.flags).all(|(&a, &b)| !a || b))
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let flags = self.flags.iter().zip(&other.flags).map(|(&a, &b)| a && b).collect();
        Ok(Self { lattice: self.lattice.clone(), flags })
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let flags = self.flags.iter().zip(&other.flags).map(|(&a, &b)| a || b).collect();
        Ok(Self { lattice: self.lattice.clone(), flags })
    }

    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let flags = self.flags.iter().zip(&other.flags).map(|(&a, &b)| a && !b).collect();
        Ok(Self { lattice: self.lattice.clone(), flags })
    }
}

/// True iff every point flagged in `a` is flagged in `b`.
pub fn mask_subset(a: &GridMask, b: &GridMask) -> Result<bool> {
    a.is_subset(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_plane() -> ParameterGrid {
        ParameterGrid::plane(Axis::new(0.0, 1.0, 2).unwrap(), Axis::new(0.0, 1.0, 2).unwrap()).unwrap()
    }

    #[test]
    fn enumerate_corners() {
        let pts: Vec<(f64, f64)> = enumerate(&unit_plane()).iter().map(|p| (p.beta[0], p.gamma[0])).collect();
        assert_eq!(pts, vec![(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)]);
    }

    #[test]
    fn single_axis_progressions() {
        let g = ParameterGrid::new(vec![Axis::new(2.0, 4.0, 3).unwrap()], vec![]).unwrap();
        let v: Vec<f64> = g.enumerate().iter().map(|p| p.beta[0]).collect();
        assert_eq!(v, vec![2.0, 3.0, 4.0]);
        assert!(g.enumerate().iter().all(|p| p.gamma.is_empty()));

        let g = ParameterGrid::new(vec![Axis::new(0.0, 1.0, 5).unwrap()], vec![]).unwrap();
        let v: Vec<f64> = g.enumerate().iter().map(|p| p.beta[0]).collect();
        assert_eq!(v, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn invalid_axes_rejected() {
        assert!(Axis::new(1.0, 1.0, 3).is_err());
        assert!(Axis::new(0.0, 1.0, 1).is_err());
        assert!(Axis::new(f64::NAN, 1.0, 3).is_err());
        assert!(ParameterGrid::new(vec![], vec![Axis::new(0.0, 1.0, 2).unwrap()]).is_err());
    }

    #[test]
    fn subset_examples() {
        let g = unit_plane();
        let empty = g.empty_mask();
        let a = GridMask::from_indices(g.full_lattice(), [0]);
        let b = GridMask::from_indices(g.full_lattice(), [3]);
        assert!(mask_subset(&empty, &b).unwrap());
        assert!(mask_subset(&a, &a).unwrap());
        assert!(!mask_subset(&a, &b).unwrap());
    }

    #[test]
    fn subset_rejects_grid_mismatch() {
        let g = unit_plane();
        let other = ParameterGrid::plane(Axis::new(0.0, 2.0, 2).unwrap(), Axis::new(0.0, 1.0, 2).unwrap()).unwrap();
        assert!(matches!(mask_subset(&g.empty_mask(), &other.empty_mask()), Err(Error::GridMismatch)));
    }

    #[test]
    fn from_flags_checks_length() {
        let g = unit_plane();
        assert!(GridMask::from_flags(g.full_lattice(), vec![true; 3]).is_err());
    }

    proptest! {
        #[test]
        fn index_point_round_trip(
            lo in -5.0f64..5.0, width in 0.1f64..10.0, s1 in 2usize..7, s2 in 2usize..7, s3 in 2usize..5,
        ) {
            let grid = ParameterGrid::new(
                vec![Axis::new(lo, lo + width, s1).unwrap()],
                vec![Axis::new(-lo, -lo + width, s2).unwrap(), Axis::new(0.0, width, s3).unwrap()],
            ).unwrap();
            let pts = grid.enumerate();
            prop_assert_eq!(pts.len(), s1 * s2 * s3);
            let lattice = grid.full_lattice();
            for (i, p) in pts.iter().enumerate() {
                let idx = lattice.indices(i);
                prop_assert_eq!(lattice.flat_index(&idx), i);
                // bit-exact reconstruction from indices
                prop_assert_eq!(p.flat(), lattice.coords(i));
                let (b, g) = grid.split(i);
                prop_assert_eq!(grid.index(b, g), i);
            }
        }

        #[test]
        fn subset_of_union(a in proptest::collection::vec(any::<bool>(), 12), b in proptest::collection::vec(any::<bool>(), 12)) {
            let lattice = Lattice::new(vec![Axis::new(0.0, 1.0, 3).unwrap(), Axis::new(0.0, 1.0, 4).unwrap()]).unwrap();
            let ma = GridMask::from_flags(lattice.clone(), a).unwrap();
            let mb = GridMask::from_flags(lattice, b).unwrap();
            let u = ma.union(&mb).unwrap();
            prop_assert!(mask_subset(&ma, &u).unwrap());
            prop_assert!(mask_subset(&ma.intersection(&mb).unwrap(), &ma).unwrap());
        }
    }
}
