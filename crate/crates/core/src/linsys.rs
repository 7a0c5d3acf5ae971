//! Continuous-time LTI plants, controllability, matrix exponential and
//! zero-order-hold discretization.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Continuous-time plant `ẋ = A x + B u`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl LtiSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Structural(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.nrows() == 0 || b.ncols() == 0 {
            return Err(Error::Structural("need n >= 1 and m >= 1".into()));
        }
        if b.nrows() != a.nrows() {
            return Err(Error::Structural(format!(
                "B has {} rows, expected {}",
                b.nrows(),
                a.nrows()
            )));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Structural("non-finite entry in (A, B)".into()));
        }
        Ok(Self { a, b })
    }

    /// Build from row-major slices.
    pub fn from_row_slices(n: usize, m: usize, a: &[f64], b: &[f64]) -> Result<Self> {
        if a.len() != n * n || b.len() != n * m {
            return Err(Error::Structural(format!(
                "expected {} entries in A and {} in B, got {} and {}",
                n * n,
                n * m,
                a.len(),
                b.len()
            )));
        }
        Self::new(
            DMatrix::from_row_slice(n, n, a),
            DMatrix::from_row_slice(n, m, b),
        )
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Input dimension.
    pub fn m(&self) -> usize {
        self.b.ncols()
    }
}

/// Result of the Kalman rank test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ControllabilityReport {
    pub rank: usize,
    pub n: usize,
    pub is_controllable: bool,
    /// Singular values of the Kalman matrix, descending.
    pub singular_values: Vec<f64>,
    /// Threshold below which a singular value counts as zero.
    pub tolerance: f64,
    /// Controllability of `(A, B)` makes the plant normal with respect to the
    /// cross-polytope relaxation, and the cost-augmented pair inherits the
    /// same property. When this is `false` the relaxation is not certified
    /// lossless.
    pub certifies_normality: bool,
}

/// The controllability matrix `[B, AB, ..., A^{n-1}B]`.
pub fn kalman_matrix(sys: &LtiSystem) -> DMatrix<f64> {
    let (n, m) = (sys.n(), sys.m());
    let mut k = DMatrix::zeros(n, n * m);
    let mut block = sys.b.clone();
    for i in 0..n {
        k.view_mut((0, i * m), (n, m)).copy_from(&block);
        if i + 1 < n {
            block = &sys.a * block;
        }
    }
    k
}

/// Numerical rank of the Kalman matrix by singular-value thresholding.
///
/// Singular values below `(n + m) * eps * sigma_max` are treated as zero.
pub fn controllability_rank(sys: &LtiSystem) -> ControllabilityReport {
    let (n, m) = (sys.n(), sys.m());
    let k = kalman_matrix(sys);
    let mut sv: Vec<f64> = k.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let sigma_max = sv.first().copied().unwrap_or(0.0);
    let tolerance = n.max(n + m) as f64 * f64::EPSILON * sigma_max;
    let rank = if sigma_max == 0.0 {
        0
    } else {
        sv.iter().filter(|&&s| s > tolerance).count()
    };
    let is_controllable = rank == n;
    ControllabilityReport {
        rank,
        n,
        is_controllable,
        singular_values: sv,
        tolerance,
        certifies_normality: is_controllable,
    }
}

// Padé [13/13] coefficients.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a degree-13 Padé approximant.
pub fn matrix_exponential(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Structural(format!(
            "matrix exponential needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Structural("non-finite entry in matrix".into()));
    }
    let k = m.nrows();
    if k == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let nrm = norm1(m);
    let s = if nrm > THETA13 {
        (nrm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = m * 2f64.powi(-s);
    let b = &PADE13;
    let id = DMatrix::<f64>::identity(k, k);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &id * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &id * b[0];

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::Structural("singular Padé denominator".into()))?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

/// Cost-augmented plant with the fuel integral as an extra state.
#[derive(Debug, Clone)]
pub struct AugmentedSystem {
    pub a_e: DMatrix<f64>,
    pub b_e: DMatrix<f64>,
    pub base: LtiSystem,
    pub controllability: ControllabilityReport,
}

impl AugmentedSystem {
    pub fn as_lti(&self) -> LtiSystem {
        LtiSystem {
            a: self.a_e.clone(),
            b: self.b_e.clone(),
        }
    }
}

/// Append the cost state `x_c` driven by the slack input `ν`.
///
/// `A_e = diag(A, 0)`, `B_e = diag(B, 1)`.
pub fn augment(sys: &LtiSystem) -> AugmentedSystem {
    let (n, m) = (sys.n(), sys.m());
    let mut a_e = DMatrix::zeros(n + 1, n + 1);
    a_e.view_mut((0, 0), (n, n)).copy_from(&sys.a);
    let mut b_e = DMatrix::zeros(n + 1, m + 1);
    b_e.view_mut((0, 0), (n, m)).copy_from(&sys.b);
    b_e[(n, m)] = 1.0;
    let aug = LtiSystem {
        a: a_e.clone(),
        b: b_e.clone(),
    };
    let controllability = controllability_rank(&aug);
    AugmentedSystem {
        a_e,
        b_e,
        base: sys.clone(),
        controllability,
    }
}

/// Zero-order-hold discretization on a uniform grid.
#[derive(Debug, Clone)]
pub struct DiscretizedSystem {
    pub a_d: DMatrix<f64>,
    pub b_d: DMatrix<f64>,
    pub dt: f64,
    pub steps: usize,
    pub source: LtiSystem,
}

impl DiscretizedSystem {
    pub fn n(&self) -> usize {
        self.a_d.nrows()
    }

    pub fn m(&self) -> usize {
        self.b_d.ncols()
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.steps as f64
    }

    /// One step `A_d x + B_d u`.
    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a_d * x + &self.b_d * u
    }
}

/// Exact step matrices for piecewise-constant inputs held for `dt`.
///
/// Both come out of a single exponential of `[[A, B], [0, 0]] * dt`.
pub fn zoh_step(sys: &LtiSystem, dt: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Argument(format!("dt must be positive, got {dt}")));
    }
    let (n, m) = (sys.n(), sys.m());
    let mut blk = DMatrix::zeros(n + m, n + m);
    blk.view_mut((0, 0), (n, n)).copy_from(&(&sys.a * dt));
    blk.view_mut((0, n), (n, m)).copy_from(&(&sys.b * dt));
    let e = matrix_exponential(&blk)?;
    Ok((
        e.view((0, 0), (n, n)).into_owned(),
        e.view((0, n), (n, m)).into_owned(),
    ))
}

/// Discretize `sys` over `[0, t_f]` with `steps` uniform intervals.
pub fn zoh_discretize(sys: &LtiSystem, t_f: f64, steps: usize) -> Result<DiscretizedSystem> {
    if steps == 0 {
        return Err(Error::Argument("need at least one step".into()));
    }
    if !(t_f > 0.0) || !t_f.is_finite() {
        return Err(Error::Argument(format!("t_f must be positive, got {t_f}")));
    }
    let dt = t_f / steps as f64;
    let (a_d, b_d) = zoh_step(sys, dt)?;
    Ok(DiscretizedSystem {
        a_d,
        b_d,
        dt,
        steps,
        source: sys.clone(),
    })
}
