//! Discrete input sets `{0} ∪ {±u_max e_i} ∪ W`, their cross-polytope hull,
//! and the distance metrics used to certify discreteness.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Finite admissible input set.
///
/// Points are materialized in a fixed order: the origin, then `+u_max e_1`,
/// `-u_max e_1`, `+u_max e_2`, ..., then the extra points `W` in the order
/// given. Projection ties are broken by this order.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteInputSet {
    m: usize,
    u_max: f64,
    extra: Vec<DVector<f64>>,
    points: Vec<DVector<f64>>,
}

/// Serialized form of an input set (`m`, `u_max`, `W`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSetSpec {
    pub m: usize,
    pub u_max: f64,
    #[serde(rename = "W", default)]
    pub w: Vec<Vec<f64>>,
}

impl DiscreteInputSet {
    /// Build the set. Only structure is checked here; call [`validate`](Self::validate)
    /// for the hull condition.
    pub fn new(m: usize, u_max: f64, extra: Vec<Vec<f64>>) -> Result<Self> {
        if m == 0 {
            return Err(Error::Structural("input dimension must be >= 1".into()));
        }
        if !(u_max > 0.0) || !u_max.is_finite() {
            return Err(Error::Structural(format!("u_max must be positive, got {u_max}")));
        }
        let mut points = Vec::with_capacity(1 + 2 * m + extra.len());
        points.push(DVector::zeros(m));
        for i in 0..m {
            for sign in [1.0, -1.0] {
                let mut v = DVector::zeros(m);
                v[i] = sign * u_max;
                points.push(v);
            }
        }
        let tol = tol_geom(u_max);
        let mut w = Vec::with_capacity(extra.len());
        for (k, p) in extra.into_iter().enumerate() {
            if p.len() != m {
                return Err(Error::Structural(format!(
                    "W[{k}] has dimension {}, expected {m}",
                    p.len()
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::Structural(format!("W[{k}] has a non-finite entry")));
            }
            let p = DVector::from_vec(p);
            if let Some(j) = points.iter().position(|q| (q - &p).norm() <= tol) {
                return Err(Error::Structural(format!(
                    "W[{k}] duplicates materialized point {j}"
                )));
            }
            points.push(p.clone());
            w.push(p);
        }
        Ok(Self {
            m,
            u_max,
            extra: w,
            points,
        })
    }

    pub fn from_spec(spec: &InputSetSpec) -> Result<Self> {
        Self::new(spec.m, spec.u_max, spec.w.clone())
    }

    pub fn to_spec(&self) -> InputSetSpec {
        InputSetSpec {
            m: self.m,
            u_max: self.u_max,
            w: self.extra.iter().map(|p| p.iter().copied().collect()).collect(),
        }
    }

    /// Axis-only set `{0, ±u_max e_i}`.
    pub fn axis_only(m: usize, u_max: f64) -> Result<Self> {
        Self::new(m, u_max, Vec::new())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    pub fn extra(&self) -> &[DVector<f64>] {
        &self.extra
    }

    /// All points, in tie-break order.
    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tol_geom(&self) -> f64 {
        tol_geom(self.u_max)
    }

    pub fn hull(&self) -> CrossPolytope {
        CrossPolytope {
            m: self.m,
            u_max: self.u_max,
        }
    }

    /// Check that every extra point lies in the closed 1-ball of radius `u_max`.
    pub fn validate(&self) -> ValidationReport {
        let tol = self.tol_geom();
        let violations: Vec<Violation> = self
            .extra
            .iter()
            .enumerate()
            .filter_map(|(index, w)| {
                let norm1 = w.lp_norm(1);
                (norm1 > self.u_max + tol).then(|| Violation {
                    index,
                    point: w.iter().copied().collect(),
                    norm1,
                })
            })
            .collect();
        // axis vertices are materialized by construction
        let axis_vertices_present = (0..self.m).all(|i| {
            self.points[1 + 2 * i][i] == self.u_max && self.points[2 + 2 * i][i] == -self.u_max
        });
        ValidationReport {
            valid: violations.is_empty() && axis_vertices_present,
            m: self.m,
            u_max: self.u_max,
            point_count: self.points.len(),
            axis_vertices_present,
            violations,
        }
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.valid {
            return Ok(());
        }
        let detail: Vec<String> = report
            .violations
            .iter()
            .map(|v| format!("W[{}] has 1-norm {} > u_max = {}", v.index, v.norm1, self.u_max))
            .collect();
        Err(Error::Validation(detail.join("; ")))
    }

    /// Extreme points of the convex hull: the `2m` signed-axis vertices.
    pub fn hull_extreme_points(&self) -> Result<Vec<DVector<f64>>> {
        self.ensure_valid()?;
        Ok(self.hull().vertices())
    }

    /// Extreme points of the relaxed augmented set `{(u, ν): ‖u‖₁ ≤ ν ≤ u_max}`.
    pub fn augmented_extreme_points(&self) -> Result<AugmentedExtremeSet> {
        self.ensure_valid()?;
        let mut vertices = Vec::with_capacity(2 * self.m + 1);
        vertices.push(DVector::zeros(self.m + 1));
        for v in self.hull().vertices() {
            let mut e = DVector::zeros(self.m + 1);
            e.rows_mut(0, self.m).copy_from(&v);
            e[self.m] = self.u_max;
            vertices.push(e);
        }
        Ok(AugmentedExtremeSet {
            base: self.clone(),
            vertices,
            u_bar: self.u_max,
        })
    }

    fn check_dim(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.m {
            return Err(Error::Argument(format!(
                "point has dimension {}, expected {}",
                u.len(),
                self.m
            )));
        }
        Ok(())
    }

    /// `min over ζ in the set of ‖u − ζ‖₂`.
    pub fn distance_to_set(&self, u: &[f64]) -> Result<f64> {
        self.check_dim(u)?;
        Ok(self.nearest(u).1)
    }

    /// Nearest member of the set, ties to the lowest index.
    pub fn project_to_set(&self, u: &[f64]) -> Result<&DVector<f64>> {
        self.check_dim(u)?;
        Ok(&self.points[self.nearest(u).0])
    }

    /// Index into [`points`](Self::points) and distance of the nearest member.
    pub fn nearest(&self, u: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, p) in self.points.iter().enumerate() {
            let d2: f64 = p.iter().zip(u).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 < best.1 {
                best = (i, d2);
            }
        }
        (best.0, best.1.sqrt())
    }
}

/// Geometric tolerance used for membership and duplicate tests.
pub fn tol_geom(u_max: f64) -> f64 {
    1e-9 * u_max.max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub index: usize,
    pub point: Vec<f64>,
    pub norm1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub m: usize,
    pub u_max: f64,
    pub point_count: usize,
    pub axis_vertices_present: bool,
    pub violations: Vec<Violation>,
}

/// The closed 1-ball `{u : ‖u‖₁ ≤ u_max}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossPolytope {
    pub m: usize,
    pub u_max: f64,
}

impl CrossPolytope {
    pub fn vertices(&self) -> Vec<DVector<f64>> {
        let mut out = Vec::with_capacity(2 * self.m);
        for i in 0..self.m {
            for sign in [1.0, -1.0] {
                let mut v = DVector::zeros(self.m);
                v[i] = sign * self.u_max;
                out.push(v);
            }
        }
        out
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.iter().map(|v| v.abs()).sum::<f64>() <= self.u_max + tol_geom(self.u_max)
    }
}

/// Vertices `(u, ν)` of the relaxed epigraph set.
#[derive(Debug, Clone)]
pub struct AugmentedExtremeSet {
    pub base: DiscreteInputSet,
    /// `(0, 0)` followed by `(±u_max e_i, u_max)`, each of length `m + 1`.
    pub vertices: Vec<DVector<f64>>,
    pub u_bar: f64,
}

impl AugmentedExtremeSet {
    /// Distance from `(u, ν)` to the nearest vertex and that vertex's index.
    pub fn nearest_vertex(&self, u: &[f64], nu: f64) -> (usize, f64) {
        let m = self.base.m();
        let mut best = (0, f64::INFINITY);
        for (i, v) in self.vertices.iter().enumerate() {
            let mut d2 = (v[m] - nu) * (v[m] - nu);
            for j in 0..m {
                d2 += (v[j] - u[j]) * (v[j] - u[j]);
            }
            if d2 < best.1 {
                best = (i, d2);
            }
        }
        (best.0, best.1.sqrt())
    }

    /// Membership in the augmented discrete set: `u` in the base set and
    /// `‖u‖₁ ≤ ν ≤ ū`.
    pub fn contains(&self, u: &[f64], nu: f64) -> bool {
        let tol = self.base.tol_geom();
        let n1: f64 = u.iter().map(|v| v.abs()).sum();
        self.base.nearest(u).1 <= tol && n1 <= nu + tol && nu <= self.u_bar + tol
    }
}

/// Points added to the rendezvous set: `±(u_max/2)(e_i + e_j)` and `±(u_max/3)(1,1,1)`.
pub fn rendezvous_extra_points(u_max: f64) -> Vec<Vec<f64>> {
    let h = u_max / 2.0;
    let t = u_max / 3.0;
    vec![
        vec![h, h, 0.0],
        vec![-h, -h, 0.0],
        vec![h, 0.0, h],
        vec![-h, 0.0, -h],
        vec![0.0, h, h],
        vec![0.0, -h, -h],
        vec![t, t, t],
        vec![-t, -t, -t],
    ]
}
