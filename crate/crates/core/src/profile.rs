//! Initial data and its projection onto the grid.

use serde::{Deserialize, Serialize};

use crate::equilibrium::EquilibriumMap;
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// A scalar profile of bounded variation on the line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// `inside` on `[left, right)`, `outside` elsewhere.
    Step {
        left: f64,
        right: f64,
        inside: f64,
        #[serde(default)]
        outside: f64,
    },
    /// `values[k]` between `breaks[k-1]` and `breaks[k]`; the first and last
    /// values are the tails.
    Piecewise {
        breaks: Vec<f64>,
        values: Vec<f64>,
    },
    /// Linear from `from` at `left` to `to` at `right`, zero outside.
    Ramp {
        left: f64,
        right: f64,
        from: f64,
        to: f64,
    },
    /// `height cos²(π (x - center) / (2 half_width))` on the support, zero
    /// outside.
    Bump {
        center: f64,
        half_width: f64,
        height: f64,
    },
}

impl Profile {
    pub fn validate(&self) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        let ok = match self {
            Profile::Constant { value } => finite(&[*value]),
            Profile::Step {
                left,
                right,
                inside,
                outside,
            } => finite(&[*left, *right, *inside, *outside]) && left < right,
            Profile::Piecewise { breaks, values } => {
                finite(breaks)
                    && finite(values)
                    && values.len() == breaks.len() + 1
                    && breaks.windows(2).all(|w| w[0] < w[1])
            }
            Profile::Ramp {
                left,
                right,
                from,
                to,
            } => finite(&[*left, *right, *from, *to]) && left < right,
            Profile::Bump {
                center,
                half_width,
                height,
            } => finite(&[*center, *half_width, *height]) && *half_width > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Rejected(format!("malformed profile {self:?}")))
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::Step {
                left,
                right,
                inside,
                outside,
            } => {
                if (*left..*right).contains(&x) {
                    *inside
                } else {
                    *outside
                }
            }
            Profile::Piecewise { breaks, values } => values[breaks.partition_point(|&b| b <= x)],
            Profile::Ramp {
                left,
                right,
                from,
                to,
            } => {
                if (*left..=*right).contains(&x) {
                    from + (to - from) * (x - left) / (right - left)
                } else {
                    0.0
                }
            }
            Profile::Bump {
                center,
                half_width,
                height,
            } => {
                let s = (x - center) / half_width;
                if s.abs() < 1.0 {
                    let c = (0.5 * std::f64::consts::PI * s).cos();
                    height * c * c
                } else {
                    0.0
                }
            }
        }
    }

    /// Mean of the profile over `[a, b]`; exact for the piecewise
    /// polynomial kinds, 4-point Gauss otherwise.
    pub fn cell_average(&self, a: f64, b: f64) -> f64 {
        let len = b - a;
        match self {
            Profile::Constant { value } => *value,
            Profile::Step {
                left,
                right,
                inside,
                outside,
            } => {
                let overlap = (b.min(*right) - a.max(*left)).max(0.0);
                if overlap == len {
                    *inside
                } else if overlap == 0.0 {
                    *outside
                } else {
                    (inside * overlap + outside * (len - overlap)) / len
                }
            }
            Profile::Piecewise { breaks, values } => {
                let first = breaks.partition_point(|&x| x <= a);
                let last = breaks.partition_point(|&x| x < b);
                if first == last {
                    return values[first];
                }
                let mut acc = 0.0;
                let mut from = a;
                for k in first..last {
                    acc += values[k] * (breaks[k] - from);
                    from = breaks[k];
                }
                acc += values[last] * (b - from);
                acc / len
            }
            Profile::Ramp { left, right, .. } => {
                let lo = a.max(*left);
                let hi = b.min(*right);
                if hi <= lo {
                    return 0.0;
                }
                // linear on the overlap, so the midpoint value is exact
                self.value(0.5 * (lo + hi)) * (hi - lo) / len
            }
            Profile::Bump { .. } => GaussLegendre::FOUR.integrate(a, b, |x| self.value(x)) / len,
        }
    }

    /// Total variation of the profile as a function on the line.
    pub fn total_variation(&self) -> f64 {
        match self {
            Profile::Constant { .. } => 0.0,
            Profile::Step {
                inside, outside, ..
            } => 2.0 * (inside - outside).abs(),
            Profile::Piecewise { values, .. } => {
                values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
            }
            Profile::Ramp { from, to, .. } => from.abs() + (to - from).abs() + to.abs(),
            Profile::Bump { height, .. } => 2.0 * height.abs(),
        }
    }

    /// Values far to the left and right.
    pub fn tails(&self) -> (f64, f64) {
        match self {
            Profile::Constant { value } => (*value, *value),
            Profile::Step { outside, .. } => (*outside, *outside),
            Profile::Piecewise { values, .. } => (values[0], values[values.len() - 1]),
            Profile::Ramp { .. } | Profile::Bump { .. } => (0.0, 0.0),
        }
    }

    /// Smallest interval outside which the profile equals its tails.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            Profile::Constant { .. } => None,
            Profile::Step { left, right, .. } | Profile::Ramp { left, right, .. } => {
                Some((*left, *right))
            }
            Profile::Piecewise { breaks, .. } => {
                breaks.first().map(|&a| (a, breaks[breaks.len() - 1]))
            }
            Profile::Bump {
                center, half_width, ..
            } => Some((center - half_width, center + half_width)),
        }
    }
}

/// Initial data for all species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum InitialData {
    /// One profile per species.
    PerSpecies { species: Vec<Profile> },
    /// A total-concentration profile projected onto the equilibrium
    /// manifold cell by cell.
    Equilibrium { total: Profile },
}

impl InitialData {
    pub fn validate(&self, species: usize) -> Result<()> {
        match self {
            InitialData::PerSpecies { species: ps } => {
                if ps.len() != species {
                    return Err(Error::Rejected(format!(
                        "{} profiles given for {species} species",
                        ps.len()
                    )));
                }
                ps.iter().try_for_each(Profile::validate)
            }
            InitialData::Equilibrium { total } => total.validate(),
        }
    }

    pub fn support(&self) -> Option<(f64, f64)> {
        let all: Vec<Option<(f64, f64)>> = match self {
            InitialData::PerSpecies { species } => species.iter().map(Profile::support).collect(),
            InitialData::Equilibrium { total } => vec![total.support()],
        };
        all.into_iter()
            .flatten()
            .reduce(|a, b| (a.0.min(b.0), a.1.max(b.1)))
    }

    /// Sum of the profile variations, an upper bound for the discrete TV.
    pub fn total_variation_estimate(&self) -> f64 {
        match self {
            InitialData::PerSpecies { species } => {
                species.iter().map(Profile::total_variation).sum()
            }
            InitialData::Equilibrium { total } => total.total_variation(),
        }
    }

    pub fn is_equilibrium(&self) -> bool {
        matches!(self, InitialData::Equilibrium { .. })
    }

    /// Cell averages on `cells` cells of width `dx` starting at `x_left`, in
    /// the flat layout of [`crate::scheme::GridState`].
    pub fn project(
        &self,
        x_left: f64,
        dx: f64,
        cells: usize,
        species: usize,
        eq: Option<&EquilibriumMap>,
    ) -> Result<Vec<f64>> {
        self.validate(species)?;
        let tv = self.total_variation_estimate();
        if !tv.is_finite() {
            return Err(Error::Rejected(format!("initial total variation {tv}")));
        }
        let edge = |j: usize| x_left + j as f64 * dx;
        let mut out = Vec::with_capacity(cells * species);
        match self {
            InitialData::PerSpecies { species: ps } => {
                for j in 0..cells {
                    for p in ps {
                        out.push(p.cell_average(edge(j), edge(j + 1)));
                    }
                }
            }
            InitialData::Equilibrium { total } => {
                let eq = eq.ok_or_else(|| {
                    Error::Usage("equilibrium data need an equilibrium map".into())
                })?;
                if eq.model().species() != species {
                    return Err(Error::Usage(
                        "equilibrium map has the wrong species count".into(),
                    ));
                }
                for j in 0..cells {
                    let v = total.cell_average(edge(j), edge(j + 1));
                    out.extend(eq.u_of_v(v)?);
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::KineticsModel;

    #[test]
    fn step_cells_are_exact() {
        let p = Profile::Step {
            left: 0.0,
            right: 1.0,
            inside: 1.0,
            outside: 0.0,
        };
        let data = InitialData::PerSpecies { species: vec![p] };
        let cells = data.project(-1.0, 0.125, 24, 1, None).unwrap();
        for (j, c) in cells.iter().enumerate() {
            let expect = if (8..16).contains(&j) { 1.0 } else { 0.0 };
            assert_eq!(*c, expect, "cell {j}");
        }
    }

    #[test]
    fn constant_and_ramp() {
        let c = Profile::Constant { value: 0.3 };
        assert_eq!(c.cell_average(-5.0, -4.9), 0.3);
        let ramp = Profile::Ramp {
            left: 0.0,
            right: 1.0,
            from: 0.0,
            to: 1.0,
        };
        assert!((ramp.cell_average(0.0, 0.1) - 0.05).abs() < 1e-15);
        // half the cell outside the ramp
        assert!((ramp.cell_average(-0.1, 0.1) - 0.025).abs() < 1e-15);
        assert_eq!(ramp.total_variation(), 2.0);
    }

    #[test]
    fn piecewise_average_splits_cells() {
        let p = Profile::Piecewise {
            breaks: vec![0.0, 0.25],
            values: vec![1.0, 3.0, -1.0],
        };
        assert_eq!(p.cell_average(-1.0, -0.5), 1.0);
        assert!((p.cell_average(-0.25, 0.5) - (0.25 + 0.75 - 0.25) / 0.75).abs() < 1e-15);
        assert_eq!(p.total_variation(), 6.0);
        assert_eq!(p.tails(), (1.0, -1.0));
    }

    #[test]
    fn bump_average_is_close_to_integral() {
        let b = Profile::Bump {
            center: 0.0,
            half_width: 1.0,
            height: 2.0,
        };
        // ∫ 2 cos²(πx/2) over [-1, 1] is 2
        let n = 200;
        let dx = 2.0 / n as f64;
        let total: f64 = (0..n)
            .map(|j| b.cell_average(-1.0 + j as f64 * dx, -1.0 + (j + 1) as f64 * dx) * dx)
            .sum();
        assert!((total - 2.0).abs() < 1e-10);
    }

    #[test]
    fn equilibrium_projection() {
        let model = KineticsModel::linear_chain(vec![1.0, 0.0], &[1.0], &[1.0]).unwrap();
        let eq = EquilibriumMap::new(model);
        let data = InitialData::Equilibrium {
            total: Profile::Constant { value: 2.0 },
        };
        let cells = data.project(0.0, 0.5, 3, 2, Some(&eq)).unwrap();
        for c in cells {
            assert!((c - 1.0).abs() < 1e-13);
        }
        assert!(data.project(0.0, 0.5, 3, 2, None).is_err());
    }

    #[test]
    fn rejects_malformed() {
        let bad = Profile::Step {
            left: 1.0,
            right: 0.0,
            inside: 1.0,
            outside: 0.0,
        };
        assert!(bad.validate().is_err());
        let inf = Profile::Constant {
            value: f64::INFINITY,
        };
        let data = InitialData::PerSpecies { species: vec![inf] };
        assert!(matches!(
            data.project(0.0, 1.0, 2, 1, None),
            Err(Error::Rejected(_))
        ));
    }
}
