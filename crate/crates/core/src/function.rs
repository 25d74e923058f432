//! Nonnegative functions on a space.

use crate::error::{Error, Result};
use crate::scalar::ExtScalar;
use crate::space::{PointId, PointLabel, PointSet, Space};

/// Values per stored point. In quotient mode a value applies to every copy of
/// the orbit, so only orbit-constant functions are representable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedFunction {
    values: Vec<ExtScalar>,
}

impl WeightedFunction {
    pub fn zeros(space: &Space) -> Self {
        WeightedFunction {
            values: vec![ExtScalar::zero(); space.len()],
        }
    }

    pub fn constant(space: &Space, c: ExtScalar) -> Result<Self> {
        Self::from_values(space, vec![c; space.len()])
    }

    pub fn from_values(space: &Space, values: Vec<ExtScalar>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::InvalidStructure(format!(
                "{} values for {} points",
                values.len(),
                space.len()
            )));
        }
        if let Some(p) = values.iter().position(|v| v.is_negative()) {
            return Err(Error::InvalidStructure(format!(
                "negative value at point {p}"
            )));
        }
        Ok(WeightedFunction { values })
    }

    /// Values addressed by label (first part containing each label).
    pub fn from_labels(space: &Space, entries: &[(PointLabel, ExtScalar)]) -> Result<Self> {
        let mut f = Self::zeros(space);
        for (label, v) in entries {
            let id = space
                .find(label)
                .ok_or_else(|| Error::NotOrbitConstant(format!("{label} is not a stored point")))?;
            f.set(space, id, v.clone())?;
        }
        Ok(f)
    }

    /// Unit mass at one point.
    pub fn dirac(space: &Space, id: PointId) -> Result<Self> {
        space.check(id)?;
        if space.multiplicity(id) != 1 {
            return Err(Error::NotOrbitConstant(format!(
                "Dirac at {} whose orbit has {} copies",
                space.label(id),
                space.multiplicity(id)
            )));
        }
        let mut f = Self::zeros(space);
        f.values[id as usize] = ExtScalar::one();
        Ok(f)
    }

    /// Characteristic function of a union of whole orbits.
    pub fn indicator(space: &Space, set: &PointSet) -> Result<Self> {
        let mut f = Self::zeros(space);
        for (id, c) in set.entries(space) {
            if c != space.multiplicity(id) {
                return Err(Error::NotOrbitConstant(format!(
                    "{c} of {} copies of {}",
                    space.multiplicity(id),
                    space.label(id)
                )));
            }
            f.values[id as usize] = ExtScalar::one();
        }
        Ok(f)
    }

    pub fn set(&mut self, space: &Space, id: PointId, v: ExtScalar) -> Result<()> {
        space.check(id)?;
        if v.is_negative() {
            return Err(Error::InvalidStructure(format!(
                "negative value at point {id}"
            )));
        }
        self.values[id as usize] = v;
        Ok(())
    }

    pub fn value(&self, id: PointId) -> &ExtScalar {
        &self.values[id as usize]
    }

    pub fn values(&self) -> &[ExtScalar] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.is_zero())
    }

    /// Stored points with a nonzero value.
    pub fn support(&self) -> impl Iterator<Item = PointId> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(i, _)| i as PointId)
    }

    pub fn scaled(&self, c: &ExtScalar) -> Self {
        WeightedFunction {
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Values at the given points, in order.
    pub fn select(&self, ids: &[PointId]) -> Self {
        WeightedFunction {
            values: ids
                .iter()
                .map(|&p| self.values[p as usize].clone())
                .collect(),
        }
    }

    /// Carries values to a refined space through the representative map
    /// returned by [`Space::split_blocks`].
    pub fn lift(&self, map: &[Vec<PointId>], target: &Space) -> Self {
        let mut values = vec![ExtScalar::zero(); target.len()];
        for (old, news) in map.iter().enumerate() {
            for &n in news {
                values[n as usize] = self.values[old].clone();
            }
        }
        WeightedFunction { values }
    }
}
