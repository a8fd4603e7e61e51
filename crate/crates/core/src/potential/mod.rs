//! Potential catalog `V = W + χ` with closed-form derivatives.
//!
//! Every entry carries an explicit decomposition into a uniformly convex part
//! `W` (Hessian bounded below by `c`) and a compactly supported perturbation
//! `χ`. For non-convex entries `χ` is a single polynomial bump
//! `A (L² − |x − x_c|²)³` fitted so that `W = V − χ` is `c`-convex with the
//! smallest possible oscillation `A L⁶`.

mod critical;
mod decomposition;
mod hypotheses;
pub mod spline;

pub use critical::{find_critical_points, Basins, CriticalKind, CriticalPoint, CriticalScan, SearchBox};
pub use decomposition::{osc_chi, Bump, Decomposition};
pub use hypotheses::{check_hypotheses, AnnulusStats, HypothesisReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{Point, Sym2};
use spline::TwoWellSpline;

/// Convexity constant targeted when fitting the bump of a non-convex entry.
pub const TARGET_CONVEXITY: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CatalogId {
    Quadratic,
    DoubleWell,
    SplineTwowell,
    TiltedWell,
    Mexican2d,
}

impl CatalogId {
    pub const ALL: [CatalogId; 5] = [
        CatalogId::Quadratic,
        CatalogId::DoubleWell,
        CatalogId::SplineTwowell,
        CatalogId::TiltedWell,
        CatalogId::Mexican2d,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CatalogId::Quadratic => "quadratic",
            CatalogId::DoubleWell => "double_well",
            CatalogId::SplineTwowell => "spline_twowell",
            CatalogId::TiltedWell => "tilted_well",
            CatalogId::Mexican2d => "mexican_2d",
        }
    }

    pub fn parse(s: &str) -> Option<CatalogId> {
        CatalogId::ALL.into_iter().find(|id| id.as_str() == s)
    }

    pub fn describe(&self) -> &'static str {
        match self {
            CatalogId::Quadratic => "V = s|x|²/2 in d = 1 or 2 (params: dim, stiffness)",
            CatalogId::DoubleWell => "V = (x² − 1)² in d = 1",
            CatalogId::SplineTwowell => {
                "C² spline with minima 0 at ∓1, curvatures h_minus/h_plus, barrier B at 0 (params: h_minus, h_plus, barrier)"
            }
            CatalogId::TiltedWell => "V = (x − v)²/2 in d = 1 (param: center)",
            CatalogId::Mexican2d => "V = (|x|² − 1)² in d = 2",
        }
    }
}

/// Numeric parameters of a catalog entry; absent fields take the entry defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stiffness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_minus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_plus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub barrier: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
}

#[derive(Clone, Debug)]
enum Shape {
    Quadratic { stiffness: f64 },
    DoubleWell,
    SplineTwoWell(TwoWellSpline),
    TiltedWell { center: f64 },
    Mexican,
}

impl Shape {
    #[inline]
    fn value(&self, x: &Point) -> f64 {
        match self {
            Shape::Quadratic { stiffness } => 0.5 * stiffness * x.norm2(),
            Shape::DoubleWell => {
                let q = x.x() * x.x() - 1.0;
                q * q
            }
            Shape::SplineTwoWell(s) => s.eval(x.x()).0,
            Shape::TiltedWell { center } => 0.5 * (x.x() - center).powi(2),
            Shape::Mexican => {
                let q = x.norm2() - 1.0;
                q * q
            }
        }
    }

    #[inline]
    fn gradient(&self, x: &Point) -> Point {
        match self {
            Shape::Quadratic { stiffness } => *x * *stiffness,
            Shape::DoubleWell => {
                let v = x.x();
                Point::new1(4.0 * v * (v * v - 1.0))
            }
            Shape::SplineTwoWell(s) => Point::new1(s.eval(x.x()).1),
            Shape::TiltedWell { center } => Point::new1(x.x() - center),
            Shape::Mexican => *x * (4.0 * (x.norm2() - 1.0)),
        }
    }

    fn hessian(&self, x: &Point) -> Sym2 {
        match self {
            Shape::Quadratic { stiffness } => Sym2::identity(x.dim(), *stiffness),
            Shape::DoubleWell => Sym2::scalar(12.0 * x.x() * x.x() - 4.0),
            Shape::SplineTwoWell(s) => Sym2::scalar(s.eval(x.x()).2),
            Shape::TiltedWell { .. } => Sym2::scalar(1.0),
            Shape::Mexican => {
                let q = 4.0 * (x.norm2() - 1.0);
                Sym2::new2(q + 8.0 * x[0] * x[0], 8.0 * x[0] * x[1], q + 8.0 * x[1] * x[1])
            }
        }
    }

    /// Radius beyond which nothing interesting happens (minima, barriers).
    fn feature_radius(&self) -> f64 {
        match self {
            Shape::TiltedWell { center } => center.abs() + 1.0,
            _ => 1.0,
        }
    }
}

/// Constants of the Laplacian growth bound `ΔV ≤ a + bV`, stored as metadata
/// and checked by [`check_hypotheses`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthConstants {
    pub a: f64,
    pub b: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub gradient: Point,
    pub hessian: Sym2,
}

#[derive(Clone, Debug)]
pub struct Potential {
    id: CatalogId,
    dim: usize,
    shape: Shape,
    offset: f64,
    decomposition: Decomposition,
    growth: GrowthConstants,
}

impl Potential {
    fn build(id: CatalogId, dim: usize, shape: Shape, growth: GrowthConstants, convexity: f64) -> Self {
        let decomposition = Decomposition::fit(dim, convexity, |x| shape.hessian(x));
        Potential { id, dim, shape, offset: 0.0, decomposition, growth }
    }

    /// `V = s|x|²/2`.
    pub fn quadratic(dim: usize, stiffness: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Config(format!("quadratic: dim must be 1 or 2, got {dim}")));
        }
        if !(stiffness.is_finite() && stiffness > 0.0) {
            return Err(Error::Config(format!("quadratic: stiffness must be positive, got {stiffness}")));
        }
        let growth = GrowthConstants { a: stiffness * dim as f64, b: 0.0 };
        Ok(Self::build(CatalogId::Quadratic, dim, Shape::Quadratic { stiffness }, growth, stiffness))
    }

    /// `V = (x² − 1)²` on the line.
    pub fn double_well() -> Self {
        // 12x² − 4 ≤ 20 + 6(x² − 1)²  ⇔  (x² − 2)² + 1 ≥ 0
        let growth = GrowthConstants { a: 20.0, b: 6.0 };
        Self::build(CatalogId::DoubleWell, 1, Shape::DoubleWell, growth, TARGET_CONVEXITY)
    }

    pub fn spline_twowell(h_minus: f64, h_plus: f64, barrier: f64) -> Result<Self> {
        let spline = TwoWellSpline::new(h_minus, h_plus, barrier)?;
        // tails: h + 3u² ≤ h + 12(h u²/2 + u⁴/4); inside [-1, 1] ΔV is bounded
        let b = 12.0;
        let a = (0..=2000)
            .map(|i| {
                let x = -1.0 + i as f64 * 1e-3;
                let (v, _, s) = spline.eval(x);
                s - b * v
            })
            .fold(h_minus.max(h_plus), f64::max)
            .max(0.0)
            + 1.0;
        Ok(Self::build(
            CatalogId::SplineTwowell,
            1,
            Shape::SplineTwoWell(spline),
            GrowthConstants { a, b },
            TARGET_CONVEXITY,
        ))
    }

    /// `V = (x − v)²/2`; its Gibbs law at unit temperature has mean `v`.
    pub fn tilted_well(center: f64) -> Result<Self> {
        if !center.is_finite() {
            return Err(Error::Config("tilted_well: center must be finite".into()));
        }
        Ok(Self::build(CatalogId::TiltedWell, 1, Shape::TiltedWell { center }, GrowthConstants { a: 1.0, b: 0.0 }, 1.0))
    }

    /// `V = (|x|² − 1)²` on the plane; its minima form the unit circle.
    pub fn mexican_2d() -> Self {
        // 16r² − 8 ≤ 20 + 8(r² − 1)²  ⇔  8(r² − 2)² + 4 ≥ 0
        let growth = GrowthConstants { a: 20.0, b: 8.0 };
        Self::build(CatalogId::Mexican2d, 2, Shape::Mexican, growth, TARGET_CONVEXITY)
    }

    pub fn from_catalog(id: &str, params: &CatalogParams) -> Result<Self> {
        let cid = CatalogId::parse(id).ok_or_else(|| Error::Config(format!("unknown potential id `{id}`")))?;
        let reject = |name: &str, present: bool| -> Result<()> {
            if present {
                Err(Error::Config(format!("potential `{id}` does not take parameter `{name}`")))
            } else {
                Ok(())
            }
        };
        let p = params;
        let base = match cid {
            CatalogId::Quadratic => {
                reject("h_minus", p.h_minus.is_some())?;
                reject("h_plus", p.h_plus.is_some())?;
                reject("barrier", p.barrier.is_some())?;
                reject("center", p.center.is_some())?;
                Potential::quadratic(p.dim.unwrap_or(1), p.stiffness.unwrap_or(1.0))?
            }
            CatalogId::DoubleWell | CatalogId::Mexican2d => {
                for (n, present) in [
                    ("stiffness", p.stiffness.is_some()),
                    ("h_minus", p.h_minus.is_some()),
                    ("h_plus", p.h_plus.is_some()),
                    ("barrier", p.barrier.is_some()),
                    ("center", p.center.is_some()),
                ] {
                    reject(n, present)?;
                }
                let want = if cid == CatalogId::DoubleWell { 1 } else { 2 };
                if let Some(d) = p.dim {
                    if d != want {
                        return Err(Error::Config(format!("potential `{id}` has dimension {want}, got dim = {d}")));
                    }
                }
                if cid == CatalogId::DoubleWell {
                    Potential::double_well()
                } else {
                    Potential::mexican_2d()
                }
            }
            CatalogId::SplineTwowell => {
                reject("stiffness", p.stiffness.is_some())?;
                reject("center", p.center.is_some())?;
                if p.dim.is_some_and(|d| d != 1) {
                    return Err(Error::Config("spline_twowell is one-dimensional".into()));
                }
                Potential::spline_twowell(p.h_minus.unwrap_or(2.0), p.h_plus.unwrap_or(8.0), p.barrier.unwrap_or(1.0))?
            }
            CatalogId::TiltedWell => {
                reject("stiffness", p.stiffness.is_some())?;
                reject("h_minus", p.h_minus.is_some())?;
                reject("h_plus", p.h_plus.is_some())?;
                reject("barrier", p.barrier.is_some())?;
                if p.dim.is_some_and(|d| d != 1) {
                    return Err(Error::Config("tilted_well is one-dimensional".into()));
                }
                Potential::tilted_well(p.center.unwrap_or(1.0))?
            }
        };
        match p.offset {
            Some(c) => base.with_offset(c),
            None => Ok(base),
        }
    }

    /// Adds a nonnegative constant to `V` (and to `W`).
    pub fn with_offset(mut self, offset: f64) -> Result<Self> {
        if !(offset.is_finite() && offset >= 0.0) {
            return Err(Error::Config(format!("offset must be finite and nonnegative, got {offset}")));
        }
        self.offset += offset;
        Ok(self)
    }

    pub fn id(&self) -> CatalogId {
        self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn decomposition(&self) -> &Decomposition {
        &self.decomposition
    }

    /// Convexity constant `c` of `W`.
    pub fn convexity(&self) -> f64 {
        self.decomposition.convexity
    }

    pub fn growth_constants(&self) -> GrowthConstants {
        self.growth
    }

    /// Radius of the ball about the origin outside which `χ ≡ 0`.
    pub fn support_radius(&self) -> f64 {
        self.decomposition.support_radius()
    }

    /// Radius containing the support of `χ` and every critical point.
    pub fn characteristic_radius(&self) -> f64 {
        self.support_radius().max(self.shape.feature_radius())
    }

    #[inline]
    pub fn value(&self, x: &Point) -> f64 {
        self.shape.value(x) + self.offset
    }

    #[inline]
    pub fn gradient(&self, x: &Point) -> Point {
        self.shape.gradient(x)
    }

    pub fn hessian(&self, x: &Point) -> Sym2 {
        self.shape.hessian(x)
    }

    pub fn laplacian(&self, x: &Point) -> f64 {
        self.hessian(x).trace()
    }

    /// Value, gradient and Hessian at `x`; rejects non-finite or mis-sized input.
    pub fn eval_all(&self, x: &Point) -> Result<Evaluation> {
        if x.dim() != self.dim {
            return Err(Error::Domain(format!(
                "point of dimension {} passed to a {}-dimensional potential",
                x.dim(),
                self.dim
            )));
        }
        if !x.is_finite() {
            return Err(Error::Domain(format!("non-finite point {:?}", x.coords())));
        }
        Ok(Evaluation { value: self.value(x), gradient: self.gradient(x), hessian: self.hessian(x) })
    }

    pub fn chi_value(&self, x: &Point) -> f64 {
        self.decomposition.chi_value(x)
    }

    pub fn chi_gradient(&self, x: &Point) -> Point {
        self.decomposition.chi_gradient(x)
    }

    pub fn chi_hessian(&self, x: &Point) -> Sym2 {
        self.decomposition.chi_hessian(x)
    }

    pub fn w_value(&self, x: &Point) -> f64 {
        self.value(x) - self.chi_value(x)
    }

    pub fn w_gradient(&self, x: &Point) -> Point {
        self.gradient(x) - self.chi_gradient(x)
    }

    pub fn w_hessian(&self, x: &Point) -> Sym2 {
        self.hessian(x) - self.chi_hessian(x)
    }

    /// Default box for [`find_critical_points`].
    pub fn default_search_box(&self) -> SearchBox {
        let r = self.characteristic_radius() + 1.0;
        SearchBox::cube(self.dim, r)
    }

    pub fn default_grid_step(&self) -> f64 {
        if self.dim == 1 {
            1e-2
        } else {
            2e-2
        }
    }

    /// Critical points over the default search box.
    pub fn critical_points(&self) -> Result<CriticalScan> {
        find_critical_points(self, &self.default_search_box(), self.default_grid_step())
    }

    pub fn is_radially_symmetric(&self) -> bool {
        matches!(self.shape, Shape::Mexican | Shape::Quadratic { .. }) && self.dim == 2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn catalog() -> Vec<Potential> {
        vec![
            Potential::quadratic(1, 1.0).unwrap(),
            Potential::quadratic(2, 1.0).unwrap(),
            Potential::double_well(),
            Potential::spline_twowell(2.0, 8.0, 1.0).unwrap(),
            Potential::tilted_well(1.0).unwrap(),
            Potential::mexican_2d(),
        ]
    }

    fn random_point(rng: &mut RngStream, dim: usize, r: f64) -> Point {
        let x = (2.0 * rng.uniform() - 1.0) * r;
        if dim == 1 {
            Point::new1(x)
        } else {
            Point::new2(x, (2.0 * rng.uniform() - 1.0) * r)
        }
    }

    #[test]
    fn eval_all_examples() {
        let q = Potential::quadratic(1, 1.0).unwrap();
        let e = q.eval_all(&Point::new1(0.0)).unwrap();
        assert_eq!((e.value, e.gradient.x(), e.hessian.xx), (0.0, 0.0, 1.0));

        // V'' = 12x² − 4
        let dw = Potential::double_well();
        let e = dw.eval_all(&Point::new1(1.0)).unwrap();
        assert_eq!((e.value, e.gradient.x(), e.hessian.xx), (0.0, 0.0, 8.0));
        let e = dw.eval_all(&Point::new1(0.0)).unwrap();
        assert_eq!((e.value, e.gradient.x(), e.hessian.xx), (1.0, 0.0, -4.0));
    }

    #[test]
    fn eval_all_rejects_non_finite_and_wrong_dimension() {
        let dw = Potential::double_well();
        assert!(matches!(dw.eval_all(&Point::new1(f64::NAN)), Err(Error::Domain(_))));
        assert!(matches!(dw.eval_all(&Point::new1(f64::INFINITY)), Err(Error::Domain(_))));
        assert!(matches!(dw.eval_all(&Point::new2(0.0, 0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn finite_differences_match_closed_forms() {
        let h = 1e-5;
        let mut rng = RngStream::new(1, 0);
        for p in catalog() {
            for _ in 0..200 {
                let x = random_point(&mut rng, p.dim(), 2.5);
                let g = p.gradient(&x);
                let hs = p.hessian(&x);
                for i in 0..p.dim() {
                    let mut e = Point::zero(p.dim());
                    let mut c = [0.0; 2];
                    c[i] = h;
                    e += Point::from_slice(&c[..p.dim()]).unwrap();
                    let fd = (p.value(&(x + e)) - p.value(&(x - e))) / (2.0 * h);
                    let scale = g[i].abs().max(1.0);
                    assert!((fd - g[i]).abs() / scale < 1e-6, "{:?} grad at {:?}: {fd} vs {}", p.id(), x, g[i]);
                    let gd = (p.gradient(&(x + e)) - p.gradient(&(x - e))) * (0.5 / h);
                    let row = if i == 0 { [hs.xx, hs.xy] } else { [hs.xy, hs.yy] };
                    for j in 0..p.dim() {
                        let scale = row[j].abs().max(1.0);
                        assert!((gd[j] - row[j]).abs() / scale < 1e-4, "{:?} hess at {:?}", p.id(), x);
                    }
                }
            }
        }
    }

    #[test]
    fn v_equals_w_outside_support() {
        let mut rng = RngStream::new(2, 0);
        for p in catalog() {
            let r = p.support_radius();
            for _ in 0..500 {
                let x = random_point(&mut rng, p.dim(), r + 3.0);
                if x.norm() > r {
                    assert_eq!(p.value(&x), p.w_value(&x));
                    assert_eq!(p.chi_value(&x), 0.0);
                }
            }
        }
    }

    #[test]
    fn w_is_uniformly_convex_and_v_nonnegative() {
        let mut rng = RngStream::new(3, 0);
        for p in catalog() {
            let c = p.convexity();
            assert!(c > 0.0);
            for _ in 0..5000 {
                let x = random_point(&mut rng, p.dim(), p.support_radius() + 2.0);
                let lam = p.w_hessian(&x).min_eigenvalue();
                assert!(lam >= c - 1e-9, "{:?}: min eig {lam} < c = {c} at {:?}", p.id(), x);
                assert!(p.value(&x) >= 0.0);
            }
        }
    }

    #[test]
    fn catalog_lookup_and_parameter_checks() {
        let p = Potential::from_catalog(
            "spline_twowell",
            &CatalogParams { h_minus: Some(2.0), h_plus: Some(8.0), barrier: Some(1.0), ..Default::default() },
        )
        .unwrap();
        assert_eq!(p.id(), CatalogId::SplineTwowell);
        assert!(Potential::from_catalog("nope", &CatalogParams::default()).is_err());
        assert!(
            Potential::from_catalog("double_well", &CatalogParams { center: Some(1.0), ..Default::default() }).is_err()
        );
        assert!(Potential::from_catalog("mexican_2d", &CatalogParams { dim: Some(1), ..Default::default() }).is_err());
        let shifted =
            Potential::from_catalog("double_well", &CatalogParams { offset: Some(2.0), ..Default::default() }).unwrap();
        assert_eq!(shifted.value(&Point::new1(1.0)), 2.0);
    }
}
