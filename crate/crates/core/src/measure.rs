//! Finite nonnegative measures on an indexed point set.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::entropy::EntropyDescriptor;
use crate::error::{Error, Result};
use crate::extended::ExtendedValue;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub space_id: String,
    atoms: Vec<(usize, f64)>,
}

impl DiscreteMeasure {
    /// Atoms are sorted by index; duplicate indices and negative or non-finite
    /// masses are rejected.
    pub fn new(space_id: impl Into<String>, mut atoms: Vec<(usize, f64)>) -> Result<Self> {
        if let Some(&(i, m)) = atoms.iter().find(|(_, m)| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::Usage(format!("atom {i} has invalid mass {m}")));
        }
        atoms.sort_by_key(|a| a.0);
        if let Some(w) = atoms.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Usage(format!("duplicate atom index {}", w[0].0)));
        }
        Ok(DiscreteMeasure { space_id: space_id.into(), atoms })
    }

    /// Atom `i` carries `masses[i]`.
    pub fn from_masses(space_id: impl Into<String>, masses: &[f64]) -> Result<Self> {
        Self::new(space_id, masses.iter().copied().enumerate().collect())
    }

    pub fn atoms(&self) -> &[(usize, f64)] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn mass_at(&self, index: usize) -> f64 {
        self.atoms
            .binary_search_by_key(&index, |a| a.0)
            .map(|k| self.atoms[k].1)
            .unwrap_or(0.0)
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        DiscreteMeasure {
            space_id: self.space_id.clone(),
            atoms: self.atoms.iter().map(|&(i, m)| (i, lambda * m)).collect(),
        }
    }

    /// `(index, r_i, t_i)` over the union of both supports.
    pub fn paired<'a>(&'a self, other: &'a DiscreteMeasure) -> Result<Vec<(usize, f64, f64)>> {
        if self.space_id != other.space_id {
            return Err(Error::Usage(format!(
                "measures live on different spaces ({:?} vs {:?})",
                self.space_id, other.space_id
            )));
        }
        let mut map: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
        for &(i, m) in &self.atoms {
            map.entry(i).or_default().0 = m;
        }
        for &(i, m) in &other.atoms {
            map.entry(i).or_default().1 = m;
        }
        Ok(map.into_iter().map(|(i, (r, t))| (i, r, t)).collect())
    }
}

/// `D_F(mu1 || mu2) = sum_i F(r_i / t_i) t_i`, with the recession term where `t_i = 0`.
pub fn f_divergence(f: &EntropyDescriptor, mu1: &DiscreteMeasure, mu2: &DiscreteMeasure) -> Result<ExtendedValue> {
    Ok(mu1.paired(mu2)?.into_iter().map(|(_, r, t)| f.perspective(r, t)).sum())
}
