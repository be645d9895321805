//! Interaction densities `ρ_k = exp(∫ g · V(A_k φ))` evaluated by node-wise
//! evaluation on a quadrature grid.
//!
//! Three kinds are supported: a bounded local function, an unbounded one
//! clipped at level `k` and damped by the coupling `λ_k`, and a
//! Wick-ordered polynomial with respect to the mollified covariance.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::covariance::SpectralOperator;
use crate::error::{Error, Result};
use crate::harmonics::{basis_len, degree_of, eval_basis, multiplicity, sphere_volume, GridTransform, SphereField, SphereGrid};
use crate::mollifier::MollifierFamily;

/// Highest Wick power accepted before factorials lose precision.
pub const MAX_WICK_POWER: usize = 12;
/// Highest polynomial degree accepted for Wick interactions.
pub const MAX_WICK_DEGREE: usize = 8;
/// Half-width of the probe interval used to validate declared bounds.
const BOUND_PROBE_RANGE: f64 = 1e3;
/// Probe grid expansion stops here when the clip level is never reached.
const MAX_PROBE_RANGE: f64 = 1024.0;
const PROBE_POINTS: usize = 4097;

/// Scalar functions `ℝ → ℝ` usable as local interactions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarFn {
    Constant { value: f64 },
    /// `Σ cᵢ xⁱ`, ascending coefficients.
    Polynomial { coefficients: Vec<f64> },
    /// `a (cos(ω x) - 1)` when centred, else `a cos(ω x)`.
    Cosine {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        centered: bool,
    },
    Sine { amplitude: f64, frequency: f64 },
    /// `a tanh(x / s)`.
    Tanh { amplitude: f64, scale: f64 },
}

impl ScalarFn {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ScalarFn::Constant { value } => *value,
            ScalarFn::Polynomial { coefficients } => coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c),
            ScalarFn::Cosine {
                amplitude,
                frequency,
                centered,
            } => amplitude * ((frequency * x).cos() - if *centered { 1.0 } else { 0.0 }),
            ScalarFn::Sine { amplitude, frequency } => amplitude * (frequency * x).sin(),
            ScalarFn::Tanh { amplitude, scale } => amplitude * (x / scale).tanh(),
        }
    }

    /// Closed-form `sup |F|` where one exists.
    pub fn sup_bound(&self) -> Option<f64> {
        match self {
            ScalarFn::Constant { value } => Some(value.abs()),
            ScalarFn::Polynomial { coefficients } => {
                let degree = coefficients.iter().rposition(|c| *c != 0.0);
                match degree {
                    None => Some(0.0),
                    Some(0) => Some(coefficients[0].abs()),
                    Some(_) => None,
                }
            }
            ScalarFn::Cosine {
                amplitude, centered, ..
            } => Some(amplitude.abs() * if *centered { 2.0 } else { 1.0 }),
            ScalarFn::Sine { amplitude, .. } | ScalarFn::Tanh { amplitude, .. } => Some(amplitude.abs()),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            ScalarFn::Constant { value } => value.is_finite(),
            ScalarFn::Polynomial { coefficients } => coefficients.iter().all(|c| c.is_finite()),
            ScalarFn::Cosine {
                amplitude, frequency, ..
            }
            | ScalarFn::Sine { amplitude, frequency } => amplitude.is_finite() && frequency.is_finite(),
            ScalarFn::Tanh { amplitude, scale } => amplitude.is_finite() && scale.is_finite() && *scale != 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("non-finite parameters in {self:?}")))
        }
    }
}

/// `F_k(x) = F(x)` where `|F(x)| ≤ k`, else `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedFn {
    pub f: ScalarFn,
    pub level: f64,
}

impl TruncatedFn {
    pub fn eval(&self, x: f64) -> f64 {
        let v = self.f.eval(x);
        if v.abs() <= self.level {
            v
        } else {
            self.level
        }
    }
}

pub fn truncate_f(f: &ScalarFn, k: usize) -> Result<TruncatedFn> {
    if k == 0 {
        return Err(Error::InvalidArgument("truncation level must be at least 1".into()));
    }
    Ok(TruncatedFn {
        f: f.clone(),
        level: k as f64,
    })
}

/// `λ_k = 1 / sup{|F(x)| : |F(x)| ≤ k}`.
///
/// The sup is taken on a probe grid over `[-R, R]`, doubling `R` until some
/// probe exceeds the clip level `k` or `R` reaches its cap. Once a probe
/// exceeds `k`, continuity of `F` (and `|F(0)| ≤ k` or another point below
/// the level) makes the sup exactly `k`.
pub fn coupling_lambda(f: &ScalarFn, k: usize) -> Result<f64> {
    f.validate()?;
    if k == 0 {
        return Err(Error::InvalidArgument("coupling index must be at least 1".into()));
    }
    let level = k as f64;
    let mut radius = 1.0;
    let mut best: f64 = 0.0;
    let mut best_x = 0.0;
    loop {
        let h = 2.0 * radius / (PROBE_POINTS - 1) as f64;
        let mut crossed = false;
        let mut below = false;
        for i in 0..PROBE_POINTS {
            let x = -radius + i as f64 * h;
            let v = f.eval(x).abs();
            if v > level {
                crossed = true;
            } else {
                below = true;
                if v > best {
                    best = v;
                    best_x = x;
                }
            }
        }
        if crossed && below {
            return Ok(1.0 / level);
        }
        if radius >= MAX_PROBE_RANGE {
            // refine the best probe by golden-section search
            let (mut a, mut b) = (best_x - h, best_x + h);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..80 {
                let (c, d) = (b - g * (b - a), a + g * (b - a));
                if f.eval(c).abs() > f.eval(d).abs() {
                    b = d;
                } else {
                    a = c;
                }
            }
            let refined = f.eval(0.5 * (a + b)).abs();
            if refined <= level {
                best = best.max(refined);
            }
            break;
        }
        radius *= 2.0;
    }
    if best == 0.0 {
        return Err(Error::InvalidArgument("F vanishes on the probe range; coupling undefined".into()));
    }
    Ok(1.0 / best)
}

/// `:fⁿ:_c` node by node.
pub fn wick_power(values: &[f64], n: usize, c: f64) -> Result<Vec<f64>> {
    if n > MAX_WICK_POWER {
        return Err(Error::InvalidArgument(format!("Wick power {n} exceeds {MAX_WICK_POWER}")));
    }
    if !(c >= 0.0) {
        return Err(Error::InvalidArgument(format!("Wick variance must be nonnegative, got {c}")));
    }
    let coeffs = wick_coefficients(n, c);
    Ok(values
        .iter()
        .map(|f| coeffs.iter().rev().fold(0.0, |acc, a| acc * f + a))
        .collect())
}

/// Ascending monomial coefficients of `:xⁿ:_c`.
fn wick_coefficients(n: usize, c: f64) -> Vec<f64> {
    let fact = |m: usize| (1..=m).map(|v| v as f64).product::<f64>();
    let mut coeffs = vec![0.0; n + 1];
    for j in 0..=n / 2 {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        coeffs[n - 2 * j] = sign * fact(n) / (fact(n - 2 * j) * fact(j) * 2f64.powi(j as i32)) * c.powi(j as i32);
    }
    coeffs
}

/// `C_k(x, y)` of `C_k = A_k C A_k` as a function of geodesic distance.
pub fn c_k_kernel(c: &SpectralOperator, a: &MollifierFamily, r: f64) -> Result<f64> {
    check_pair(c, a)?;
    let w = |l: usize| a.multiplier(l).powi(2) * c.multiplier(l);
    Ok(match c.dim() {
        1 => {
            let mut s = w(0);
            for l in 1..=c.cutoff() {
                s += 2.0 * w(l) * (l as f64 * r).cos();
            }
            s / (2.0 * PI)
        }
        _ => {
            let z = r.cos();
            let (mut prev, mut cur) = (1.0, z);
            let mut s = w(0);
            for l in 1..=c.cutoff() {
                s += w(l) * (2 * l + 1) as f64 * cur;
                let next = ((2 * l + 1) as f64 * z * cur - l as f64 * prev) / (l + 1) as f64;
                prev = cur;
                cur = next;
            }
            s / (4.0 * PI)
        }
    })
}

fn check_pair(c: &SpectralOperator, a: &MollifierFamily) -> Result<()> {
    if c.dim() != a.dim() || c.cutoff() != a.cutoff() {
        return Err(Error::Mismatch(format!(
            "covariance (d={}, L={}) vs mollifier (d={}, L={})",
            c.dim(),
            c.cutoff(),
            a.dim(),
            a.cutoff()
        )));
    }
    Ok(())
}

/// Constant diagonal of `C_k = A_k C A_k`, cross-checked against the basis
/// sum `Σ a_l² c_l Y_i(x)²` at three points.
pub fn c_k_diagonal(c: &SpectralOperator, a: &MollifierFamily) -> Result<f64> {
    check_pair(c, a)?;
    let dim = c.dim();
    let w = |l: usize| a.multiplier(l).powi(2) * c.multiplier(l);
    let value = (0..=c.cutoff()).map(|l| w(l) * multiplicity(dim, l) as f64).sum::<f64>() / sphere_volume(dim);
    let points: [&[f64]; 3] = match dim {
        1 => [&[0.6, 0.8], &[-1.0, 0.0], &[0.28, -0.96]],
        _ => [&[0.0, 0.0, -1.0], &[0.48, 0.6, 0.64], &[-0.36, 0.48, -0.8]],
    };
    let mut values = vec![0.0; basis_len(dim, c.cutoff())];
    for p in points {
        eval_basis(dim, c.cutoff(), p, &mut values);
        let direct: f64 = values.iter().enumerate().map(|(i, y)| w(degree_of(dim, i)) * y * y).sum();
        if (direct - value).abs() > 1e-10 * value.abs().max(1e-300) {
            return Err(Error::CrossValidation(format!(
                "C_k diagonal {value:.15e} vs basis sum {direct:.15e} at {p:?}"
            )));
        }
    }
    Ok(value)
}

/// Weight `g` multiplying the local interaction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpatialWeight {
    Constant { value: f64 },
    /// `offset + gradient · x`.
    Affine { offset: f64, gradient: Vec<f64> },
}

impl SpatialWeight {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            SpatialWeight::Constant { value } => *value,
            SpatialWeight::Affine { offset, gradient } => offset + gradient.iter().zip(x).map(|(g, v)| g * v).sum::<f64>(),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            SpatialWeight::Constant { .. } => true,
            SpatialWeight::Affine { gradient, .. } => gradient.iter().all(|g| *g == 0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InteractionKind {
    /// `∫ g F(A_k φ)`, default `g = 1`; `bound` is a declared `sup |F|`.
    Bounded { f: ScalarFn, bound: f64 },
    /// `∫ g F_k(A_k φ)`, default `g = -λ_k`.
    RegularizedUnbounded { f: ScalarFn },
    /// `∫ g :P(A_k φ):_{C_k}`, default `g = -1`; ascending coefficients.
    WickPolynomial { coefficients: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInteractionSpec")]
pub struct InteractionSpec {
    #[serde(flatten)]
    pub kind: InteractionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<SpatialWeight>,
}

/// Flat wire form; `flatten` cannot be combined with unknown-field checks.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInteractionSpec {
    kind: String,
    f: Option<ScalarFn>,
    bound: Option<f64>,
    coefficients: Option<Vec<f64>>,
    weight: Option<SpatialWeight>,
}

impl TryFrom<RawInteractionSpec> for InteractionSpec {
    type Error = Error;

    fn try_from(raw: RawInteractionSpec) -> Result<Self> {
        let missing = |field: &str| Error::InvalidArgument(format!("interaction `{}` needs `{field}`", raw.kind));
        let unexpected = |field: &str| Error::InvalidArgument(format!("interaction `{}` does not take `{field}`", raw.kind));
        let kind = match raw.kind.as_str() {
            "bounded" => {
                if raw.coefficients.is_some() {
                    return Err(unexpected("coefficients"));
                }
                InteractionKind::Bounded {
                    f: raw.f.clone().ok_or_else(|| missing("f"))?,
                    bound: raw.bound.ok_or_else(|| missing("bound"))?,
                }
            }
            "regularized_unbounded" => {
                if raw.coefficients.is_some() || raw.bound.is_some() {
                    return Err(unexpected("bound/coefficients"));
                }
                InteractionKind::RegularizedUnbounded {
                    f: raw.f.clone().ok_or_else(|| missing("f"))?,
                }
            }
            "wick_polynomial" => {
                if raw.f.is_some() || raw.bound.is_some() {
                    return Err(unexpected("f/bound"));
                }
                InteractionKind::WickPolynomial {
                    coefficients: raw.coefficients.clone().ok_or_else(|| missing("coefficients"))?,
                }
            }
            other => return Err(Error::InvalidArgument(format!("unknown interaction kind `{other}`"))),
        };
        let spec = InteractionSpec { kind, weight: raw.weight };
        spec.validate()?;
        Ok(spec)
    }
}

impl InteractionSpec {
    pub fn new(kind: InteractionKind) -> Result<Self> {
        let spec = Self { kind, weight: None };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_weight(mut self, weight: SpatialWeight) -> Result<Self> {
        self.weight = Some(weight);
        self.validate()?;
        Ok(self)
    }

    /// `ρ ≡ 1`.
    pub fn free() -> Self {
        Self {
            kind: InteractionKind::Bounded {
                f: ScalarFn::Constant { value: 0.0 },
                bound: 0.0,
            },
            weight: None,
        }
    }

    /// True when `ρ_k ≡ 1`, so the reweighted measure is the Gaussian one.
    pub fn is_free(&self) -> bool {
        match &self.kind {
            InteractionKind::Bounded {
                f: ScalarFn::Constant { value },
                ..
            } => *value == 0.0,
            InteractionKind::WickPolynomial { coefficients } => coefficients.iter().all(|c| *c == 0.0),
            _ => false,
        }
    }

    pub fn label(&self) -> &'static str {
        match self.kind {
            InteractionKind::Bounded { .. } => "bounded",
            InteractionKind::RegularizedUnbounded { .. } => "regularized_unbounded",
            InteractionKind::WickPolynomial { .. } => "wick_polynomial",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            InteractionKind::Bounded { f, bound } => {
                f.validate()?;
                if !(*bound >= 0.0 && bound.is_finite()) {
                    return Err(Error::InvalidArgument(format!("declared bound must be finite and >= 0, got {bound}")));
                }
                let h = 2.0 * BOUND_PROBE_RANGE / (PROBE_POINTS - 1) as f64;
                for i in 0..PROBE_POINTS {
                    let x = -BOUND_PROBE_RANGE + i as f64 * h;
                    let v = f.eval(x).abs();
                    if v > bound * (1.0 + 1e-12) {
                        return Err(Error::InvalidArgument(format!("|F({x})| = {v} exceeds declared bound {bound}")));
                    }
                }
            }
            InteractionKind::RegularizedUnbounded { f } => f.validate()?,
            InteractionKind::WickPolynomial { coefficients } => {
                let degree = coefficients
                    .iter()
                    .rposition(|c| *c != 0.0)
                    .ok_or_else(|| Error::InvalidArgument("Wick polynomial is identically zero".into()))?;
                if degree > MAX_WICK_DEGREE || degree % 2 != 0 || coefficients[degree] <= 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "Wick polynomial needs even degree <= {MAX_WICK_DEGREE} and positive leading coefficient"
                    )));
                }
                if coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(Error::NonFinite("Wick coefficients".into()));
                }
            }
        }
        if let Some(SpatialWeight::Affine { offset, gradient }) = &self.weight {
            if !offset.is_finite() || gradient.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFinite("spatial weight".into()));
            }
        }
        Ok(())
    }

    /// Value of the local function at `0`; reflection positivity needs it
    /// to vanish.
    pub fn value_at_zero(&self) -> f64 {
        match &self.kind {
            InteractionKind::Bounded { f, .. } | InteractionKind::RegularizedUnbounded { f } => f.eval(0.0),
            InteractionKind::WickPolynomial { coefficients } => coefficients.first().copied().unwrap_or(0.0),
        }
    }

    /// Fails unless `F(0) = 0`; used by reflection-positivity suites.
    pub fn require_vanishing_at_zero(&self) -> Result<()> {
        let v = self.value_at_zero();
        if v != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "reflection-positivity checks need F(0) = 0, got {v}"
            )));
        }
        Ok(())
    }

    /// Upper bound on `|log ρ|` for bounded kinds with constant weight.
    pub fn log_density_bound(&self, dim: usize) -> Option<f64> {
        match (&self.kind, &self.weight) {
            (InteractionKind::Bounded { bound, .. }, None) => Some(bound * sphere_volume(dim)),
            (InteractionKind::Bounded { bound, .. }, Some(SpatialWeight::Constant { value })) => {
                Some(bound * value.abs() * sphere_volume(dim))
            }
            _ => None,
        }
    }
}

/// `log ρ_k(φ)` with its index and kind.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogDensityValue {
    pub value: f64,
    pub k: usize,
    pub kind: &'static str,
}

/// Everything `log ρ_k` needs that does not depend on `φ`.
pub struct DensityEvaluator<'g> {
    spec: InteractionSpec,
    k: usize,
    mollifier: MollifierFamily,
    transform: GridTransform<'g>,
    /// Quadrature weight times spatial weight at each node.
    node_weights: Vec<f64>,
    local: LocalFn,
}

enum LocalFn {
    Plain(ScalarFn),
    Clipped(TruncatedFn),
    Wick(Vec<f64>),
}

impl LocalFn {
    fn eval(&self, x: f64) -> f64 {
        match self {
            LocalFn::Plain(f) => f.eval(x),
            LocalFn::Clipped(f) => f.eval(x),
            LocalFn::Wick(coeffs) => coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c),
        }
    }
}

impl<'g> DensityEvaluator<'g> {
    /// `covariance` is only consulted for Wick ordering.
    pub fn new(
        spec: &InteractionSpec,
        k: usize,
        mollifier: &MollifierFamily,
        grid: &'g SphereGrid,
        covariance: &SpectralOperator,
    ) -> Result<Self> {
        spec.validate()?;
        if grid.dim() != mollifier.dim() {
            return Err(Error::Mismatch("grid and mollifier dimensions differ".into()));
        }
        if grid.max_cutoff() < 2 * mollifier.cutoff() {
            log::warn!(
                "grid capacity {} is below 2L = {}; interaction quadrature may be inexact",
                grid.max_cutoff(),
                2 * mollifier.cutoff()
            );
        }
        if spec.value_at_zero() != 0.0 {
            log::warn!("interaction does not vanish at zero; reflection positivity is not guaranteed");
        }
        let transform = GridTransform::new(grid, mollifier.cutoff())?;
        let (local, default_weight) = match &spec.kind {
            InteractionKind::Bounded { f, .. } => (LocalFn::Plain(f.clone()), 1.0),
            InteractionKind::RegularizedUnbounded { f } => {
                (LocalFn::Clipped(truncate_f(f, k)?), -coupling_lambda(f, k)?)
            }
            InteractionKind::WickPolynomial { coefficients } => {
                let c = c_k_diagonal(covariance, mollifier)?;
                let mut total = vec![0.0; coefficients.len()];
                for (n, p) in coefficients.iter().enumerate() {
                    for (i, w) in wick_coefficients(n, c).into_iter().enumerate() {
                        total[i] += p * w;
                    }
                }
                (LocalFn::Wick(total), -1.0)
            }
        };
        let node_weights = grid
            .nodes()
            .zip(grid.weights())
            .map(|(x, w)| w * spec.weight.as_ref().map_or(default_weight, |g| g.eval(x)))
            .collect();
        Ok(Self {
            spec: spec.clone(),
            k,
            mollifier: mollifier.clone(),
            transform,
            node_weights,
            local,
        })
    }

    pub fn spec(&self) -> &InteractionSpec {
        &self.spec
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn log_density(&self, phi: &SphereField) -> Result<LogDensityValue> {
        let smoothed = self.mollifier.mollify(phi)?;
        let values = self.transform.synthesize(&smoothed)?;
        let terms: Vec<f64> = values
            .iter()
            .zip(&self.node_weights)
            .map(|(v, w)| w * self.local.eval(*v))
            .collect();
        let value = crate::stats::pairwise_sum(&terms);
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("log density at k = {}", self.k)));
        }
        Ok(LogDensityValue {
            value,
            k: self.k,
            kind: self.spec.label(),
        })
    }
}

/// One-shot `log ρ_k(φ)`; build a [`DensityEvaluator`] to reuse setup.
pub fn log_density(
    spec: &InteractionSpec,
    phi: &SphereField,
    k: usize,
    mollifier: &MollifierFamily,
    grid: &SphereGrid,
    covariance: &SpectralOperator,
) -> Result<LogDensityValue> {
    DensityEvaluator::new(spec, k, mollifier, grid, covariance)?.log_density(phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::{apply_isometry, Rotation};
    use crate::covariance::free_covariance;
    use crate::mollifier::build_mollifier;
    use proptest::prelude::*;

    fn quartic() -> ScalarFn {
        ScalarFn::Polynomial {
            coefficients: vec![0.0, 0.0, 0.0, 0.0, 1.0],
        }
    }

    #[test]
    fn truncation_examples() {
        let f = truncate_f(&quartic(), 16).unwrap();
        assert_eq!(f.eval(1.0), 1.0);
        assert_eq!(f.eval(3.0), 16.0);
        assert_eq!(f.eval(-3.0), 16.0);
        let cos = ScalarFn::Cosine {
            amplitude: 0.5,
            frequency: 1.0,
            centered: false,
        };
        let t = truncate_f(&cos, 1).unwrap();
        for x in [-2.0, 0.0, 0.7, 5.0] {
            assert_eq!(t.eval(x), cos.eval(x));
        }
    }

    #[test]
    fn coupling_examples() {
        for k in [1, 4, 16, 100] {
            assert_eq!(coupling_lambda(&quartic(), k).unwrap(), 1.0 / k as f64);
        }
        let cos = ScalarFn::Cosine {
            amplitude: 0.3,
            frequency: 2.0,
            centered: false,
        };
        assert!((coupling_lambda(&cos, 1).unwrap() - 1.0 / 0.3).abs() < 1e-12);
        let tanh = ScalarFn::Tanh { amplitude: 2.0, scale: 1.0 };
        let lam: Vec<f64> = [1, 2, 3, 4].iter().map(|k| coupling_lambda(&tanh, *k).unwrap()).collect();
        assert!(lam.windows(2).all(|w| w[1] <= w[0]));
        assert!((lam[3] - 0.5).abs() < 1e-9);
        assert!(coupling_lambda(&ScalarFn::Constant { value: 0.0 }, 3).is_err());
    }

    #[test]
    fn wick_examples() {
        let f = [0.3, -1.2, 2.0];
        let c = 0.7;
        assert_eq!(wick_power(&f, 0, c).unwrap(), vec![1.0; 3]);
        assert_eq!(wick_power(&f, 1, c).unwrap(), f.to_vec());
        for (v, x) in wick_power(&f, 2, c).unwrap().iter().zip(f) {
            assert!((v - (x * x - c)).abs() < 1e-14);
        }
        for (v, x) in wick_power(&f, 4, c).unwrap().iter().zip(f) {
            assert!((v - (x.powi(4) - 6.0 * c * x * x + 3.0 * c * c)).abs() < 1e-13);
        }
        assert!(wick_power(&f, 13, c).is_err());
        assert!(wick_power(&f, 2, -0.1).is_err());
    }

    /// Probabilists' Hermite recurrence `He_{n+1} = x He_n - n He_{n-1}`
    /// scaled by `c^{n/2}` gives the same polynomials.
    #[test]
    fn wick_matches_hermite_recurrence() {
        let c: f64 = 0.4;
        for x in [-1.5, 0.2, 0.9] {
            let u = x / c.sqrt();
            let (mut prev, mut cur) = (1.0, u);
            for n in 1..MAX_WICK_POWER {
                let expected = cur * c.powf(n as f64 / 2.0);
                let got = wick_power(&[x], n, c).unwrap()[0];
                assert!((got - expected).abs() < 1e-9 * expected.abs().max(1.0), "n={n}");
                let next = u * cur - n as f64 * prev;
                prev = cur;
                cur = next;
            }
        }
    }

    #[test]
    fn c_k_diagonal_examples() {
        let c = free_covariance(1.0, 2, 0).unwrap();
        let a = build_mollifier(1, 2, 0).unwrap();
        assert!((c_k_diagonal(&c, &a).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-15);
        for dim in [1, 2] {
            let c = free_covariance(1.0, dim, 16).unwrap();
            let a = build_mollifier(1, dim, 16).unwrap();
            let diag = c_k_diagonal(&c, &a).unwrap();
            assert!((c_k_kernel(&c, &a, 0.0).unwrap() - diag).abs() < 1e-12);
        }
    }

    /// Dense kernel assembly: `∫∫ C_k(x, y) δ`-free check through the
    /// reproducing identity `∫ C_k(x, y)² dy = Σ a_l⁴ c_l² Y(x)²`.
    #[test]
    fn c_k_kernel_reproduces_squared_multipliers() {
        let c = free_covariance(1.0, 2, 16).unwrap();
        let a = build_mollifier(1, 2, 16).unwrap();
        let (z, w) = crate::harmonics::gauss_legendre(64);
        let integral: f64 = z
            .iter()
            .zip(&w)
            .map(|(z, w)| w * c_k_kernel(&c, &a, z.acos()).unwrap().powi(2))
            .sum::<f64>()
            * 2.0
            * PI;
        let expected: f64 = (0..=16)
            .map(|l| (a.multiplier(l).powi(2) * c.multiplier(l)).powi(2) * (2 * l + 1) as f64)
            .sum::<f64>()
            / (4.0 * PI);
        assert!((integral - expected).abs() < 1e-12 * expected);
    }

    fn setup(dim: usize, cutoff: usize) -> (SphereGrid, MollifierFamily, SpectralOperator) {
        (
            SphereGrid::for_cutoff(dim, 2 * cutoff).unwrap(),
            build_mollifier(2, dim, cutoff).unwrap(),
            free_covariance(1.0, dim, cutoff).unwrap(),
        )
    }

    #[test]
    fn log_density_examples() {
        let (grid, a, c) = setup(2, 8);
        let phi = SphereField::from_coeffs(2, 8, (0..81).map(|i| ((i * 7) % 5) as f64 - 2.0).collect()).unwrap();
        let eps = 0.25;
        let constant = InteractionSpec::new(InteractionKind::Bounded {
            f: ScalarFn::Constant { value: eps },
            bound: eps,
        })
        .unwrap();
        let v = log_density(&constant, &phi, 2, &a, &grid, &c).unwrap().value;
        assert!((v - eps * 4.0 * PI).abs() < 1e-12);

        let zero = SphereField::zeros(2, 8).unwrap();
        let cosine = InteractionSpec::new(InteractionKind::Bounded {
            f: ScalarFn::Cosine { amplitude: 0.1, frequency: 1.0, centered: true },
            bound: 0.2,
        })
        .unwrap();
        assert_eq!(log_density(&cosine, &zero, 2, &a, &grid, &c).unwrap().value, 0.0);
        let reg = InteractionSpec::new(InteractionKind::RegularizedUnbounded { f: quartic() }).unwrap();
        assert_eq!(log_density(&reg, &zero, 2, &a, &grid, &c).unwrap().value, 0.0);

        let wick = InteractionSpec::new(InteractionKind::WickPolynomial {
            coefficients: vec![0.0, 0.0, 0.0, 0.0, 1.0],
        })
        .unwrap();
        let ck = c_k_diagonal(&c, &a).unwrap();
        let v = log_density(&wick, &zero, 2, &a, &grid, &c).unwrap().value;
        assert!((v + 12.0 * PI * ck * ck).abs() < 1e-12 * ck * ck);

        let bounded = InteractionSpec::new(InteractionKind::Bounded {
            f: ScalarFn::Cosine { amplitude: 0.1, frequency: 1.0, centered: false },
            bound: 0.1,
        })
        .unwrap();
        let v = log_density(&bounded, &phi, 2, &a, &grid, &c).unwrap().value;
        assert!(v.abs() <= bounded.log_density_bound(2).unwrap());
    }

    #[test]
    fn specs_are_validated() {
        assert!(InteractionSpec::new(InteractionKind::Bounded { f: quartic(), bound: 10.0 }).is_err());
        assert!(InteractionSpec::new(InteractionKind::WickPolynomial { coefficients: vec![0.0, 0.0, 0.0, 1.0] }).is_err());
        assert!(InteractionSpec::new(InteractionKind::WickPolynomial { coefficients: vec![0.0, 0.0, -1.0] }).is_err());
        assert!(InteractionSpec::new(InteractionKind::WickPolynomial { coefficients: vec![0.0; 11] }).is_err());
        let json = r#"{"kind":"regularized_unbounded","f":{"kind":"polynomial","coefficients":[0,0,0,0,1]}}"#;
        let spec: InteractionSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.kind, InteractionKind::RegularizedUnbounded { f: quartic() });
        let bad = r#"{"kind":"bounded","f":{"kind":"constant","value":0},"bound":0,"extra":1}"#;
        assert!(serde_json::from_str::<InteractionSpec>(bad).is_err());
        let invalid = r#"{"kind":"bounded","f":{"kind":"constant","value":2},"bound":1}"#;
        assert!(serde_json::from_str::<InteractionSpec>(invalid).is_err());
        let weighted = InteractionSpec::new(InteractionKind::WickPolynomial { coefficients: vec![0.0, 0.0, 1.0] })
            .unwrap()
            .with_weight(SpatialWeight::Affine { offset: -1.0, gradient: vec![0.0, 0.0, 0.5] })
            .unwrap();
        let text = serde_json::to_string(&weighted).unwrap();
        assert_eq!(serde_json::from_str::<InteractionSpec>(&text).unwrap(), weighted);
        let shifted = InteractionSpec::new(InteractionKind::Bounded {
            f: ScalarFn::Cosine { amplitude: 0.1, frequency: 1.0, centered: false },
            bound: 0.1,
        })
        .unwrap();
        assert!(shifted.require_vanishing_at_zero().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn log_density_is_rotation_invariant(
            coeffs in proptest::collection::vec(-1.0f64..1.0, 49),
            ax in -1.0f64..1.0, ay in -1.0f64..1.0, angle in 0.0f64..std::f64::consts::TAU,
        ) {
            let (_, a, c) = setup(2, 6);
            let rot = Rotation::from_axis_angle(2, &[ax, ay, 0.5], angle).unwrap();
            let phi = SphereField::from_coeffs(2, 6, coeffs).unwrap();
            // polynomial integrands are integrated exactly at capacity 2L;
            // the cosine needs headroom
            let cases = [
                (
                    InteractionSpec::new(InteractionKind::WickPolynomial { coefficients: vec![0.0, 0.0, 0.5, 0.0, 1.0] }).unwrap(),
                    12,
                ),
                (
                    InteractionSpec::new(InteractionKind::Bounded {
                        f: ScalarFn::Cosine { amplitude: 0.1, frequency: 1.0, centered: true },
                        bound: 0.2,
                    }).unwrap(),
                    48,
                ),
            ];
            for (spec, capacity) in &cases {
                let grid = SphereGrid::for_cutoff(2, *capacity).unwrap();
                let rotated = apply_isometry(&phi, &rot, &grid).unwrap();
                let ev = DensityEvaluator::new(spec, 2, &a, &grid, &c).unwrap();
                let lhs = ev.log_density(&phi).unwrap().value;
                let rhs = ev.log_density(&rotated).unwrap().value;
                prop_assert!((lhs - rhs).abs() < 1e-8 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
            }
        }
    }
}
