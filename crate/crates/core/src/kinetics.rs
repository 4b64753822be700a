//! Reaction chain models, source vectors and mean-value Jacobians.
//!
//! A model with `r` species carries velocities `λ_1..λ_r` and `r - 1`
//! reactions `f_i(u_i, u_{i+1})`, each strictly decreasing in its first and
//! strictly increasing in its second argument with `f_i(0, 0) = 0`. The source
//! is `Q(U) = K G(U)` with `G = (f_1, .., f_{r-1})` and `K` the constant
//! bidiagonal matrix with `1` on the diagonal and `-1` below it.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{ensure_finite, Error, Result};
use crate::quadrature::GaussLegendre;

/// One reaction `f(v, w)` of the chain.
pub trait ReactionFunction: Send + Sync + fmt::Debug {
    fn eval(&self, v: f64, w: f64) -> f64;

    /// Partial derivative in `v`; negative for admissible reactions.
    fn d_first(&self, v: f64, w: f64) -> f64;

    /// Partial derivative in `w`; positive for admissible reactions.
    fn d_second(&self, v: f64, w: f64) -> f64;

    /// Whether `f` is linear, making every mean-value matrix constant.
    fn is_linear(&self) -> bool {
        false
    }

    /// Mean partials along the segment from `to` to `from`:
    /// `(∫ ∂_1 f dθ, ∫ ∂_2 f dθ)` at `θ from + (1 - θ) to`, `θ ∈ [0, 1]`.
    fn mean_partials(&self, from: (f64, f64), to: (f64, f64)) -> (f64, f64) {
        let mut a = 0.0;
        let mut b = 0.0;
        for (t, w) in GaussLegendre::EIGHT.points() {
            let x = t * from.0 + (1.0 - t) * to.0;
            let y = t * from.1 + (1.0 - t) * to.1;
            a += w * self.d_first(x, y);
            b += w * self.d_second(x, y);
        }
        (a, b)
    }
}

/// Strictly increasing piecewise-linear map through the given knots, extended
/// linearly past both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneTable {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl MonotoneTable {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::InvalidModel(format!(
                "table needs matching knot lists of length >= 2 (got {} and {})",
                xs.len(),
                ys.len()
            )));
        }
        ensure_finite(&xs, "table abscissae")?;
        ensure_finite(&ys, "table values")?;
        if xs.windows(2).any(|p| p[1] <= p[0]) || ys.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::InvalidModel(
                "table knots and values must be strictly increasing".into(),
            ));
        }
        let table = MonotoneTable { xs, ys };
        let at_zero = table.value(0.0);
        if at_zero.abs() > 1e-14 {
            return Err(Error::InvalidModel(format!(
                "table must vanish at 0 (value {at_zero})"
            )));
        }
        Ok(table)
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.partition_point(|&k| k <= x) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        }
    }

    fn segment_slope(&self, k: usize) -> f64 {
        (self.ys[k + 1] - self.ys[k]) / (self.xs[k + 1] - self.xs[k])
    }

    pub fn value(&self, x: f64) -> f64 {
        let k = self.segment(x);
        self.ys[k] + self.segment_slope(k) * (x - self.xs[k])
    }

    pub fn slope(&self, x: f64) -> f64 {
        self.segment_slope(self.segment(x))
    }

    /// Exact mean of the slope over `[x0, x1]` (either order).
    pub fn mean_slope(&self, x0: f64, x1: f64) -> f64 {
        let (lo, hi) = if x0 <= x1 { (x0, x1) } else { (x1, x0) };
        let (k0, k1) = (self.segment(lo), self.segment(hi));
        if k0 == k1 || hi == lo {
            return self.segment_slope(k0);
        }
        let mut acc = 0.0;
        for k in k0..=k1 {
            let a = if k == k0 { lo } else { self.xs[k] };
            let b = if k == k1 { hi } else { self.xs[k + 1] };
            acc += self.segment_slope(k) * (b - a);
        }
        acc / (hi - lo)
    }
}

/// Strictly increasing shape function vanishing at zero.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// `x`
    Linear,
    /// `x + x³`
    Cubic,
    Table(MonotoneTable),
}

impl Shape {
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Shape::Linear => x,
            Shape::Cubic => x + x * x * x,
            Shape::Table(t) => t.value(x),
        }
    }

    pub fn slope(&self, x: f64) -> f64 {
        match self {
            Shape::Linear => 1.0,
            Shape::Cubic => 1.0 + 3.0 * x * x,
            Shape::Table(t) => t.slope(x),
        }
    }

    fn mean_slope(&self, x0: f64, x1: f64) -> f64 {
        match self {
            Shape::Table(t) => t.mean_slope(x0, x1),
            _ => GaussLegendre::EIGHT.unit(|s| self.slope(s * x0 + (1.0 - s) * x1)),
        }
    }
}

/// Separable reaction `f(v, w) = -a φ(v) + b ψ(w)` with `a, b > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableReaction {
    pub a: f64,
    pub b: f64,
    pub first: Shape,
    pub second: Shape,
}

impl SeparableReaction {
    pub fn new(a: f64, b: f64, first: Shape, second: Shape) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "reaction coefficients must be positive and finite (a = {a}, b = {b})"
            )));
        }
        Ok(SeparableReaction {
            a,
            b,
            first,
            second,
        })
    }

    pub fn linear(a: f64, b: f64) -> Result<Self> {
        Self::new(a, b, Shape::Linear, Shape::Linear)
    }

    /// `-a (v + v³) + b w`.
    pub fn cubic(a: f64, b: f64) -> Result<Self> {
        Self::new(a, b, Shape::Cubic, Shape::Linear)
    }
}

impl ReactionFunction for SeparableReaction {
    fn eval(&self, v: f64, w: f64) -> f64 {
        -self.a * self.first.value(v) + self.b * self.second.value(w)
    }

    fn d_first(&self, v: f64, _w: f64) -> f64 {
        -self.a * self.first.slope(v)
    }

    fn d_second(&self, _v: f64, w: f64) -> f64 {
        self.b * self.second.slope(w)
    }

    fn is_linear(&self) -> bool {
        self.first == Shape::Linear && self.second == Shape::Linear
    }

    fn mean_partials(&self, from: (f64, f64), to: (f64, f64)) -> (f64, f64) {
        (
            -self.a * self.first.mean_slope(from.0, to.0),
            self.b * self.second.mean_slope(from.1, to.1),
        )
    }
}

/// Mean-value coefficients `A_i < 0`, `B_i > 0` between two states.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanValues {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl MeanValues {
    /// Number of species `r`.
    pub fn species(&self) -> usize {
        self.a.len() + 1
    }

    /// The `r × r` tridiagonal matrix with `Q(V) - Q(W) = 𝒬 (V - W)`.
    pub fn q_matrix(&self) -> DMatrix<f64> {
        let r = self.species();
        let mut q = DMatrix::zeros(r, r);
        for i in 0..r - 1 {
            q[(i, i)] += self.a[i];
            q[(i, i + 1)] = self.b[i];
            q[(i + 1, i)] = -self.a[i];
            q[(i + 1, i + 1)] -= self.b[i];
        }
        q
    }

    /// The `(r - 1) × (r - 1)` matrix `M` driving the evolution of `G`.
    pub fn m_matrix(&self) -> DMatrix<f64> {
        let n = self.a.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.a[i] - self.b[i];
            if i + 1 < n {
                m[(i, i + 1)] = self.b[i];
            }
            if i > 0 {
                m[(i, i - 1)] = -self.a[i];
            }
        }
        m
    }

    /// The `(r - 1) × r` bidiagonal matrix with `G(V) - G(W) = 𝓜 (V - W)`.
    pub fn g_jacobian(&self) -> DMatrix<f64> {
        let n = self.a.len();
        let mut m = DMatrix::zeros(n, n + 1);
        for i in 0..n {
            m[(i, i)] = self.a[i];
            m[(i, i + 1)] = self.b[i];
        }
        m
    }
}

/// The constant `r × (r - 1)` matrix `K` with `Q = K G`.
pub fn k_matrix(r: usize) -> DMatrix<f64> {
    let mut k = DMatrix::zeros(r, r.saturating_sub(1));
    for i in 0..r.saturating_sub(1) {
        k[(i, i)] = 1.0;
        k[(i + 1, i)] = -1.0;
    }
    k
}

/// Left inverse of `K`: row `i` sums the first `i + 1` components.
pub fn k_left_inverse(r: usize) -> DMatrix<f64> {
    let n = r.saturating_sub(1);
    DMatrix::from_fn(n, r, |i, j| if j <= i { 1.0 } else { 0.0 })
}

/// Model of `r` transported species coupled by a reaction chain.
#[derive(Clone)]
pub struct KineticsModel {
    velocities: Vec<f64>,
    reactions: Vec<Arc<dyn ReactionFunction>>,
}

impl fmt::Debug for KineticsModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KineticsModel")
            .field("velocities", &self.velocities)
            .field("reactions", &self.reactions)
            .finish()
    }
}

impl KineticsModel {
    /// Generic constructor; `r = 1` with no reactions gives the pure
    /// transport mode.
    pub fn new(velocities: Vec<f64>, reactions: Vec<Arc<dyn ReactionFunction>>) -> Result<Self> {
        if velocities.is_empty() {
            return Err(Error::InvalidModel("at least one species required".into()));
        }
        ensure_finite(&velocities, "velocities")?;
        if reactions.len() + 1 != velocities.len() {
            return Err(Error::InvalidModel(format!(
                "{} species need exactly {} reactions, got {}",
                velocities.len(),
                velocities.len() - 1,
                reactions.len()
            )));
        }
        let model = KineticsModel {
            velocities,
            reactions,
        };
        for (i, f) in model.reactions.iter().enumerate() {
            let f00 = f.eval(0.0, 0.0);
            if f00.abs() > 1e-14 {
                return Err(Error::InvalidModel(format!(
                    "f_{} (0, 0) = {f00} != 0",
                    i + 1
                )));
            }
        }
        Ok(model)
    }

    pub fn separable(velocities: Vec<f64>, reactions: Vec<SeparableReaction>) -> Result<Self> {
        let reactions = reactions
            .into_iter()
            .map(|f| Arc::new(f) as Arc<dyn ReactionFunction>)
            .collect();
        Self::new(velocities, reactions)
    }

    /// Chain with `f_i = -a_i u_i + b_i u_{i+1}`.
    pub fn linear_chain(velocities: Vec<f64>, a: &[f64], b: &[f64]) -> Result<Self> {
        Self::chain(velocities, a, b, SeparableReaction::linear)
    }

    /// Chain with `f_i = -a_i (u_i + u_i³) + b_i u_{i+1}`.
    pub fn cubic_chain(velocities: Vec<f64>, a: &[f64], b: &[f64]) -> Result<Self> {
        Self::chain(velocities, a, b, SeparableReaction::cubic)
    }

    fn chain(
        velocities: Vec<f64>,
        a: &[f64],
        b: &[f64],
        make: fn(f64, f64) -> Result<SeparableReaction>,
    ) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::InvalidModel(format!(
                "coefficient lists differ in length ({} vs {})",
                a.len(),
                b.len()
            )));
        }
        let reactions = a
            .iter()
            .zip(b)
            .map(|(&a, &b)| make(a, b))
            .collect::<Result<Vec<_>>>()?;
        Self::separable(velocities, reactions)
    }

    /// Single species with no reactions.
    pub fn transport_only(velocity: f64) -> Result<Self> {
        Self::new(vec![velocity], Vec::new())
    }

    pub fn species(&self) -> usize {
        self.velocities.len()
    }

    pub fn velocities(&self) -> &[f64] {
        &self.velocities
    }

    pub fn reactions(&self) -> &[Arc<dyn ReactionFunction>] {
        &self.reactions
    }

    pub fn max_speed(&self) -> f64 {
        self.velocities.iter().fold(0.0, |m, l| m.max(l.abs()))
    }

    pub fn is_linear(&self) -> bool {
        self.reactions.iter().all(|f| f.is_linear())
    }

    /// `G(U) = (f_1, .., f_{r-1})` without input checks.
    pub fn g_into(&self, u: &[f64], out: &mut [f64]) {
        for (i, f) in self.reactions.iter().enumerate() {
            out[i] = f.eval(u[i], u[i + 1]);
        }
    }

    /// `Q(U)` without input checks.
    pub fn q_into(&self, u: &[f64], out: &mut [f64]) {
        let r = self.species();
        let mut prev = 0.0;
        for i in 0..r {
            let cur = if i + 1 < r {
                self.reactions[i].eval(u[i], u[i + 1])
            } else {
                0.0
            };
            out[i] = cur - prev;
            prev = cur;
        }
    }

    pub fn eval_q(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_state(u)?;
        let mut out = vec![0.0; self.species()];
        self.q_into(u, &mut out);
        ensure_finite(&out, "Q(U)")?;
        Ok(out)
    }

    pub fn eval_g(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_state(u)?;
        let mut out = vec![0.0; self.species() - 1];
        self.g_into(u, &mut out);
        ensure_finite(&out, "G(U)")?;
        Ok(out)
    }

    fn check_state(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.species() {
            return Err(Error::InvalidState(format!(
                "state has {} components, model has {} species",
                u.len(),
                self.species()
            )));
        }
        ensure_finite(u, "state")
    }

    /// Mean-value coefficients between `v` and `w` into caller buffers.
    pub fn mean_values_into(&self, v: &[f64], w: &[f64], a: &mut [f64], b: &mut [f64]) {
        for (i, f) in self.reactions.iter().enumerate() {
            let (ai, bi) = f.mean_partials((v[i], v[i + 1]), (w[i], w[i + 1]));
            a[i] = ai;
            b[i] = bi;
        }
    }

    /// Pointwise partials `∂_1 f_i`, `∂_2 f_i` at `u`.
    pub fn partials_into(&self, u: &[f64], a: &mut [f64], b: &mut [f64]) {
        for (i, f) in self.reactions.iter().enumerate() {
            a[i] = f.d_first(u[i], u[i + 1]);
            b[i] = f.d_second(u[i], u[i + 1]);
        }
    }

    pub fn mean_values(&self, v: &[f64], w: &[f64]) -> Result<MeanValues> {
        self.check_state(v)?;
        self.check_state(w)?;
        let n = self.species() - 1;
        let mut mv = MeanValues {
            a: vec![0.0; n],
            b: vec![0.0; n],
        };
        self.mean_values_into(v, w, &mut mv.a, &mut mv.b);
        ensure_finite(&mv.a, "mean value A")?;
        ensure_finite(&mv.b, "mean value B")?;
        Ok(mv)
    }

    /// `(𝒬(V, W), M(V, W))`.
    pub fn mean_value_matrices(
        &self,
        v: &[f64],
        w: &[f64],
    ) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let mv = self.mean_values(v, w)?;
        Ok((mv.q_matrix(), mv.m_matrix()))
    }

    /// Check the sign conditions on the partials over a lattice of the box.
    pub fn check_monotonicity(&self, region: &StateBox, points_per_axis: usize) -> Result<()> {
        let n = points_per_axis.max(2);
        for (i, f) in self.reactions.iter().enumerate() {
            for p in 0..n {
                for q in 0..n {
                    let v = region.axis_point(i, p, n);
                    let w = region.axis_point(i + 1, q, n);
                    let (d1, d2) = (f.d_first(v, w), f.d_second(v, w));
                    if !(d1 < 0.0 && d2 > 0.0) {
                        return Err(Error::InvalidModel(format!(
                            "f_{} violates monotonicity at ({v}, {w}): d1 = {d1}, d2 = {d2}",
                            i + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Axis-aligned box of states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl StateBox {
    /// `[-radius, radius]^r`.
    pub fn symmetric(r: usize, radius: f64) -> Self {
        StateBox {
            lo: vec![-radius; r],
            hi: vec![radius; r],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    fn axis_point(&self, axis: usize, k: usize, n: usize) -> f64 {
        let t = k as f64 / (n - 1) as f64;
        self.lo[axis] + t * (self.hi[axis] - self.lo[axis])
    }
}

/// How a decay rate `λ` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaMethod {
    /// `r = 2`: `λ = min (B_1 - A_1)`.
    ScalarGap,
    /// `r = 3`: `λ = min {A - a, B / a}` from the explicit 2×2 inverse.
    TwoByTwo,
    /// Linear kinetics: smallest eigenvalue of the symmetrised `-M`.
    Symmetrizer,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LambdaBound {
    Available {
        lambda: f64,
        method: LambdaMethod,
        /// True when the value is a lattice minimum over a state box.
        sampled: bool,
    },
    Unavailable {
        reason: String,
    },
}

impl LambdaBound {
    pub fn value(&self) -> Option<f64> {
        match self {
            LambdaBound::Available { lambda, .. } => Some(*lambda),
            LambdaBound::Unavailable { .. } => None,
        }
    }
}

/// `λ` for one set of coefficients, using the `r ≤ 3` formulas.
pub fn lambda_from_coefficients(mv: &MeanValues) -> Option<f64> {
    match mv.a.len() {
        1 => Some(mv.b[0] - mv.a[0]),
        2 => {
            let (a1, b1, a2, b2) = (mv.a[0], mv.b[0], mv.a[1], mv.b[1]);
            let big_a = b1 - a1 + b2 - a2;
            let big_b = b1 * b2 - a1 * b2 + a1 * a2;
            let a = (b1 + b2 - a2).max(b1 - a1 - a2);
            Some((big_a - a).min(big_b / a))
        }
        _ => None,
    }
}

/// Diagonal symmetrizer of a constant `M` and the transformation
/// `P = T D^{1/2}` that diagonalises `M`.
#[derive(Debug, Clone)]
pub struct Symmetrizer {
    /// Diagonal of `D`: `α_1 = 1`, `α_{i+1} = -α_i B_i / A_{i+1}`.
    pub alpha: Vec<f64>,
    /// Eigenvalues of `N`, all negative.
    pub eigenvalues: Vec<f64>,
    pub p: DMatrix<f64>,
    pub lambda: f64,
}

pub fn symmetrize(mv: &MeanValues) -> Result<Symmetrizer> {
    let n = mv.a.len();
    if n == 0 {
        return Err(Error::Unsupported("no reactions to symmetrize".into()));
    }
    let mut alpha = vec![1.0; n];
    for k in 0..n - 1 {
        alpha[k + 1] = -alpha[k] * mv.b[k] / mv.a[k + 1];
    }
    if alpha.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
        return Err(Error::InvalidState(format!(
            "symmetrizer not positive: {alpha:?}"
        )));
    }
    let m = mv.m_matrix();
    let sq: Vec<f64> = alpha.iter().map(|a| a.sqrt()).collect();
    let s = DMatrix::from_fn(n, n, |i, j| sq[i] * m[(i, j)] / sq[j]);
    let s = (&s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(s);
    let t = eig.eigenvectors.transpose();
    let d_half = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(sq));
    let p = t * d_half;
    let eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let lambda = eigenvalues.iter().fold(f64::INFINITY, |m, &e| m.min(-e));
    if !(lambda > 0.0) {
        return Err(Error::InvalidState(format!(
            "symmetrised M is not negative definite (eigenvalues {eigenvalues:?})"
        )));
    }
    Ok(Symmetrizer {
        alpha,
        eigenvalues,
        p,
        lambda,
    })
}

/// Decay rate `λ` of `(I - τ M)^{-1}` in a state-independent norm.
///
/// Linear kinetics use the constant coefficients; `r ≤ 3` nonlinear kinetics
/// take a lattice minimum over `region`. Nonlinear models with `r > 3` have
/// no known such norm and report [`LambdaBound::Unavailable`].
pub fn lambda_bound(model: &KineticsModel, region: &StateBox, lattice: usize) -> LambdaBound {
    let r = model.species();
    if r < 2 {
        return LambdaBound::Unavailable {
            reason: "no reactions".into(),
        };
    }
    let zero = vec![0.0; r];
    if model.is_linear() {
        let mv = match model.mean_values(&zero, &zero) {
            Ok(mv) => mv,
            Err(e) => {
                return LambdaBound::Unavailable {
                    reason: e.to_string(),
                }
            }
        };
        if let Some(lambda) = lambda_from_coefficients(&mv) {
            let method = if r == 2 {
                LambdaMethod::ScalarGap
            } else {
                LambdaMethod::TwoByTwo
            };
            return LambdaBound::Available {
                lambda,
                method,
                sampled: false,
            };
        }
        return match symmetrize(&mv) {
            Ok(s) => LambdaBound::Available {
                lambda: s.lambda,
                method: LambdaMethod::Symmetrizer,
                sampled: false,
            },
            Err(e) => LambdaBound::Unavailable {
                reason: e.to_string(),
            },
        };
    }
    if r > 3 {
        return LambdaBound::Unavailable {
            reason: format!("nonlinear kinetics with r = {r} > 3 has no known star norm"),
        };
    }
    if region.dim() != r {
        return LambdaBound::Unavailable {
            reason: format!("state box has dimension {}, model has {r}", region.dim()),
        };
    }
    let n = lattice.max(2);
    let ranges = partial_ranges(model, region, n);
    let lambda = if r == 2 {
        // B_1 - A_1 averages the pointwise gap over a segment inside the box
        gap_minimum(model, region, n)
    } else {
        two_by_two_minimum(&ranges, 16)
    };
    if lambda > 0.0 && lambda.is_finite() {
        LambdaBound::Available {
            lambda,
            method: if r == 2 {
                LambdaMethod::ScalarGap
            } else {
                LambdaMethod::TwoByTwo
            },
            sampled: true,
        }
    } else {
        LambdaBound::Unavailable {
            reason: format!("lattice minimum is not positive ({lambda})"),
        }
    }
}

fn gap_minimum(model: &KineticsModel, region: &StateBox, n: usize) -> f64 {
    let f = &model.reactions()[0];
    let mut best = f64::INFINITY;
    for p in 0..n {
        for q in 0..n {
            let v = region.axis_point(0, p, n);
            let w = region.axis_point(1, q, n);
            best = best.min(f.d_second(v, w) - f.d_first(v, w));
        }
    }
    best
}

/// `[min, max]` of `∂_1 f_i` and `∂_2 f_i` over lattice points of the box.
fn partial_ranges(model: &KineticsModel, region: &StateBox, n: usize) -> Vec<[(f64, f64); 2]> {
    model
        .reactions()
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let mut d1 = (f64::INFINITY, f64::NEG_INFINITY);
            let mut d2 = (f64::INFINITY, f64::NEG_INFINITY);
            for p in 0..n {
                for q in 0..n {
                    let v = region.axis_point(i, p, n);
                    let w = region.axis_point(i + 1, q, n);
                    let (x, y) = (f.d_first(v, w), f.d_second(v, w));
                    d1 = (d1.0.min(x), d1.1.max(x));
                    d2 = (d2.0.min(y), d2.1.max(y));
                }
            }
            [d1, d2]
        })
        .collect()
}

fn two_by_two_minimum(ranges: &[[(f64, f64); 2]], n: usize) -> f64 {
    let pick = |(lo, hi): (f64, f64), k: usize| lo + (hi - lo) * k as f64 / (n - 1) as f64;
    let mut best = f64::INFINITY;
    let mut mv = MeanValues {
        a: vec![0.0; 2],
        b: vec![0.0; 2],
    };
    for i in 0..n {
        mv.a[0] = pick(ranges[0][0], i);
        for j in 0..n {
            mv.b[0] = pick(ranges[0][1], j);
            for k in 0..n {
                mv.a[1] = pick(ranges[1][0], k);
                for l in 0..n {
                    mv.b[1] = pick(ranges[1][1], l);
                    if let Some(lam) = lambda_from_coefficients(&mv) {
                        best = best.min(lam);
                    }
                }
            }
        }
    }
    best
}
