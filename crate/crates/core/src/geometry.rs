//! Cubes, two-particle boxes and the separation geometry of box pairs.
//!
//! All cubes are closed and axis-parallel. Distances between centers are
//! measured in the sup-norm, and two cubes intersect exactly when their
//! centers are within the sum of the half-widths along every axis.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Slack used when deciding whether a lattice point sits on a cube face.
const LATTICE_SLACK: f64 = 1e-9;

/// Multiplier in the sufficiently-distant predicate.
pub const DEFAULT_DISTANCE_MULTIPLIER: f64 = 8.0;

pub type Site = Vec<i64>;

/// Closed cube `[c_i - L, c_i + L]` in `d` dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCube", into = "RawCube")]
pub struct Cube {
    center: Vec<f64>,
    half_width: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCube {
    center: Vec<f64>,
    half_width: f64,
}

impl TryFrom<RawCube> for Cube {
    type Error = Error;
    fn try_from(raw: RawCube) -> Result<Self> {
        Cube::new(raw.center, raw.half_width)
    }
}

impl From<Cube> for RawCube {
    fn from(c: Cube) -> Self {
        RawCube { center: c.center, half_width: c.half_width }
    }
}

impl Cube {
    pub fn new(center: Vec<f64>, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return invalid(format!("cube half-width must be positive, got {half_width}"));
        }
        if center.is_empty() {
            return invalid("cube needs at least one dimension");
        }
        if center.iter().any(|c| !c.is_finite()) {
            return invalid("cube center must be finite");
        }
        Ok(Cube { center, half_width })
    }

    pub fn dimension(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn lower(&self, axis: usize) -> f64 {
        self.center[axis] - self.half_width
    }

    pub fn upper(&self, axis: usize) -> f64 {
        self.center[axis] + self.half_width
    }

    /// Euclidean volume `(2L)^d`.
    pub fn volume(&self) -> f64 {
        (2.0 * self.half_width).powi(self.dimension() as i32)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dimension()
            && x.iter()
                .zip(&self.center)
                .all(|(xi, ci)| (xi - ci).abs() <= self.half_width)
    }

    /// Closed-set intersection test.
    pub fn intersects(&self, other: &Cube) -> bool {
        self.dimension() == other.dimension()
            && sup_distance(&self.center, &other.center) <= self.half_width + other.half_width
    }

    /// Same center, half-width grown by `r`.
    pub fn enlarged(&self, r: f64) -> Result<Cube> {
        if r < 0.0 {
            return invalid(format!("enlargement must be nonnegative, got {r}"));
        }
        Cube::new(self.center.clone(), self.half_width + r)
    }

    /// Integer range covered along one axis, inclusive.
    fn axis_range(&self, axis: usize) -> (i64, i64) {
        let lo = (self.lower(axis) - LATTICE_SLACK).ceil() as i64;
        let hi = (self.upper(axis) + LATTICE_SLACK).floor() as i64;
        (lo, hi)
    }

    /// All integer points inside the cube, in lexicographic order.
    pub fn lattice_sites(&self) -> Vec<Site> {
        let ranges: Vec<(i64, i64)> = (0..self.dimension()).map(|a| self.axis_range(a)).collect();
        if ranges.iter().any(|(lo, hi)| lo > hi) {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut current: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        loop {
            out.push(current.clone());
            // odometer, last axis fastest
            let mut axis = ranges.len();
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                if current[axis] < ranges[axis].1 {
                    current[axis] += 1;
                    for later in axis + 1..ranges.len() {
                        current[later] = ranges[later].0;
                    }
                    break;
                }
            }
        }
    }

    pub fn lattice_count(&self) -> usize {
        (0..self.dimension())
            .map(|a| {
                let (lo, hi) = self.axis_range(a);
                (hi - lo + 1).max(0) as usize
            })
            .product()
    }
}

impl fmt::Display for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Λ_{}({:?})", self.half_width, self.center)
    }
}

pub fn make_cube(center: Vec<f64>, half_width: f64) -> Result<Cube> {
    Cube::new(center, half_width)
}

pub fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Which particle a projection refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Particle {
    First,
    Second,
}

impl Particle {
    pub fn from_index(axis: usize) -> Result<Self> {
        match axis {
            1 => Ok(Particle::First),
            2 => Ok(Particle::Second),
            other => invalid(format!("projection axis must be 1 or 2, got {other}")),
        }
    }
}

/// Product `Λ_{L1}(u1) × Λ_{L2}(u2)` of two cubes of equal dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBox", into = "RawBox")]
pub struct TwoParticleBox {
    factor1: Cube,
    factor2: Cube,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBox {
    center1: Vec<f64>,
    center2: Vec<f64>,
    half_width1: f64,
    half_width2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dimension: Option<usize>,
}

impl TryFrom<RawBox> for TwoParticleBox {
    type Error = Error;
    fn try_from(raw: RawBox) -> Result<Self> {
        let dimension = raw.dimension.unwrap_or(raw.center1.len());
        if raw.center1.len() != dimension || raw.center2.len() != dimension {
            return invalid(format!(
                "box centers must have {} coordinates, got {} and {}",
                dimension,
                raw.center1.len(),
                raw.center2.len()
            ));
        }
        TwoParticleBox::new(
            Cube::new(raw.center1, raw.half_width1)?,
            Cube::new(raw.center2, raw.half_width2)?,
        )
    }
}

impl From<TwoParticleBox> for RawBox {
    fn from(b: TwoParticleBox) -> Self {
        RawBox {
            center1: b.factor1.center,
            center2: b.factor2.center,
            half_width1: b.factor1.half_width,
            half_width2: b.factor2.half_width,
            dimension: None,
        }
    }
}

impl TwoParticleBox {
    pub fn new(factor1: Cube, factor2: Cube) -> Result<Self> {
        if factor1.dimension() != factor2.dimension() {
            return invalid(format!(
                "box factors differ in dimension ({} vs {})",
                factor1.dimension(),
                factor2.dimension()
            ));
        }
        Ok(TwoParticleBox { factor1, factor2 })
    }

    /// Convenience constructor from centers and half-widths.
    pub fn from_parts(u1: Vec<f64>, l1: f64, u2: Vec<f64>, l2: f64) -> Result<Self> {
        Self::new(Cube::new(u1, l1)?, Cube::new(u2, l2)?)
    }

    /// Single-particle dimension `d`.
    pub fn dimension(&self) -> usize {
        self.factor1.dimension()
    }

    pub fn factor(&self, particle: Particle) -> &Cube {
        match particle {
            Particle::First => &self.factor1,
            Particle::Second => &self.factor2,
        }
    }

    pub fn factors(&self) -> [&Cube; 2] {
        [&self.factor1, &self.factor2]
    }

    /// The pair of centers `u = (u1, u2)` flattened to a point of `R^{2d}`.
    pub fn center(&self) -> Vec<f64> {
        let mut u = self.factor1.center.clone();
        u.extend_from_slice(&self.factor2.center);
        u
    }

    pub fn volume(&self) -> f64 {
        self.factor1.volume() * self.factor2.volume()
    }

    /// `|Λ ∩ Z^{2d}|`.
    pub fn lattice_count(&self) -> usize {
        self.factor1.lattice_count() * self.factor2.lattice_count()
    }

    pub fn max_half_width(&self) -> f64 {
        self.factor1.half_width.max(self.factor2.half_width)
    }
}

pub fn projection(b: &TwoParticleBox, axis: usize) -> Result<Cube> {
    Ok(b.factor(Particle::from_index(axis)?).clone())
}

/// A finite union of closed cubes of one dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalUnion {
    pub members: Vec<Cube>,
}

impl IntervalUnion {
    pub fn new(members: Vec<Cube>) -> Self {
        IntervalUnion { members }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.members.iter().any(|c| c.contains(x))
    }

    pub fn intersects_cube(&self, cube: &Cube) -> bool {
        self.members.iter().any(|c| c.intersects(cube))
    }

    pub fn intersects(&self, other: &IntervalUnion) -> bool {
        other.members.iter().any(|c| self.intersects_cube(c))
    }

    /// Deduplicated lattice points of the union, in lexicographic order.
    pub fn lattice_sites(&self) -> Vec<Site> {
        let set: BTreeSet<Site> = self.members.iter().flat_map(|c| c.lattice_sites()).collect();
        set.into_iter().collect()
    }
}

/// The shadow `Π₁Λ ∪ Π₂Λ`.
pub fn shadow(b: &TwoParticleBox) -> IntervalUnion {
    IntervalUnion::new(vec![b.factor1.clone(), b.factor2.clone()])
}

/// Grow both half-widths by `r`, keeping centers.
pub fn enlarge(b: &TwoParticleBox, r: f64) -> Result<TwoParticleBox> {
    TwoParticleBox::new(b.factor1.enlarged(r)?, b.factor2.enlarged(r)?)
}

/// Swap the particle coordinates of a configuration pair.
pub fn reflect<T: Clone>(u: &(T, T)) -> (T, T) {
    (u.1.clone(), u.0.clone())
}

fn check_same_dimension(a: &TwoParticleBox, b: &TwoParticleBox) -> Result<()> {
    if a.dimension() != b.dimension() {
        return invalid(format!(
            "boxes differ in dimension ({} vs {})",
            a.dimension(),
            b.dimension()
        ));
    }
    Ok(())
}

/// Left-hand side of the distance predicate: `min{‖u−u′‖, ‖S(u)−u′‖}` in sup-norm.
pub fn reflected_center_distance(a: &TwoParticleBox, b: &TwoParticleBox) -> f64 {
    let u = a.center();
    let s_u = {
        let (u1, u2) = reflect(&(a.factor1.center.clone(), a.factor2.center.clone()));
        let mut v = u1;
        v.extend(u2);
        v
    };
    let w = b.center();
    sup_distance(&u, &w).min(sup_distance(&s_u, &w))
}

/// Right-hand side of the distance predicate: `multiplier · max{L_i + R}`.
pub fn distance_threshold(a: &TwoParticleBox, b: &TwoParticleBox, range: f64, multiplier: f64) -> f64 {
    multiplier * (a.max_half_width().max(b.max_half_width()) + range)
}

pub fn is_sufficiently_distant(a: &TwoParticleBox, b: &TwoParticleBox, range: f64) -> Result<bool> {
    is_sufficiently_distant_with(a, b, range, DEFAULT_DISTANCE_MULTIPLIER)
}

/// Distance predicate with a configurable multiplier (8 in the standard form).
pub fn is_sufficiently_distant_with(
    a: &TwoParticleBox,
    b: &TwoParticleBox,
    range: f64,
    multiplier: f64,
) -> Result<bool> {
    check_same_dimension(a, b)?;
    Ok(reflected_center_distance(a, b) > distance_threshold(a, b, range, multiplier))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SeparationCase {
    A,
    B,
    C,
    D,
    E,
}

impl SeparationCase {
    /// Image of the case under renaming the two boxes.
    pub fn swapped(self) -> Self {
        match self {
            SeparationCase::A => SeparationCase::C,
            SeparationCase::B => SeparationCase::D,
            SeparationCase::C => SeparationCase::A,
            SeparationCase::D => SeparationCase::B,
            SeparationCase::E => SeparationCase::E,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeparationKind {
    CompletelySeparated,
    PartiallySeparatedOnly,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparationVerdict {
    pub cases: Vec<SeparationCase>,
    pub kind: SeparationKind,
}

impl SeparationVerdict {
    pub fn contains(&self, case: SeparationCase) -> bool {
        self.cases.contains(&case)
    }
}

/// Evaluate the five emptiness conditions on the `R`-enlarged boxes.
///
/// Returns every case that holds. Requires the pair to be sufficiently
/// distant; outside that regime no case is guaranteed.
pub fn classify_separation(a: &TwoParticleBox, b: &TwoParticleBox, range: f64) -> Result<SeparationVerdict> {
    classify_separation_with(a, b, range, DEFAULT_DISTANCE_MULTIPLIER)
}

pub fn classify_separation_with(
    a: &TwoParticleBox,
    b: &TwoParticleBox,
    range: f64,
    multiplier: f64,
) -> Result<SeparationVerdict> {
    if !is_sufficiently_distant_with(a, b, range, multiplier)? {
        return Err(Error::Precondition(format!(
            "boxes are not sufficiently distant: {} <= {}",
            reflected_center_distance(a, b),
            distance_threshold(a, b, range, multiplier)
        )));
    }
    let cases = separation_cases(a, b, range)?;
    let kind = if cases.contains(&SeparationCase::E) {
        SeparationKind::CompletelySeparated
    } else {
        SeparationKind::PartiallySeparatedOnly
    };
    Ok(SeparationVerdict { cases, kind })
}

/// The raw case evaluation without the distance precondition.
pub fn separation_cases(a: &TwoParticleBox, b: &TwoParticleBox, range: f64) -> Result<Vec<SeparationCase>> {
    check_same_dimension(a, b)?;
    let ea = enlarge(a, range)?;
    let eb = enlarge(b, range)?;
    let [p1, p2] = ea.factors();
    let [q1, q2] = eb.factors();

    // a projection is isolated when it meets none of the other three
    let isolated = |x: &Cube, others: [&Cube; 3]| others.iter().all(|o| !x.intersects(o));

    let mut cases = Vec::new();
    if isolated(p1, [p2, q1, q2]) {
        cases.push(SeparationCase::A);
    }
    if isolated(p2, [p1, q1, q2]) {
        cases.push(SeparationCase::B);
    }
    if isolated(q1, [p1, p2, q2]) {
        cases.push(SeparationCase::C);
    }
    if isolated(q2, [p1, p2, q1]) {
        cases.push(SeparationCase::D);
    }
    if !shadow(&ea).intersects(&shadow(&eb)) {
        cases.push(SeparationCase::E);
    }
    Ok(cases)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bx1(u1: f64, l1: f64, u2: f64, l2: f64) -> TwoParticleBox {
        TwoParticleBox::from_parts(vec![u1], l1, vec![u2], l2).unwrap()
    }

    #[test]
    fn make_cube_unfolds_definition() {
        let c = make_cube(vec![0.0], 1.0).unwrap();
        assert_eq!((c.lower(0), c.upper(0)), (-1.0, 1.0));
        let c = make_cube(vec![2.0, 3.0], 0.5).unwrap();
        assert_eq!((c.lower(0), c.upper(0)), (1.5, 2.5));
        assert_eq!((c.lower(1), c.upper(1)), (2.5, 3.5));
        assert!(matches!(make_cube(vec![0.0], 0.0), Err(Error::InvalidArgument(_))));
        assert!(make_cube(vec![0.0], -1.0).is_err());
    }

    #[test]
    fn lattice_sites_enumerate_closed_cube() {
        let c = make_cube(vec![0.0], 1.0).unwrap();
        assert_eq!(c.lattice_sites(), vec![vec![-1], vec![0], vec![1]]);
        let c = make_cube(vec![0.5], 1.0).unwrap();
        assert_eq!(c.lattice_sites(), vec![vec![0], vec![1]]);
        let c = make_cube(vec![0.0, 0.0], 2.0).unwrap();
        let sites = c.lattice_sites();
        assert_eq!(sites.len(), 25);
        assert_eq!(c.lattice_count(), 25);
        let mut sorted = sites.clone();
        sorted.sort();
        assert_eq!(sites, sorted);
    }

    #[test]
    fn projections_and_bad_axis() {
        let b = bx1(0.0, 1.0, 5.0, 2.0);
        assert_eq!(projection(&b, 1).unwrap(), make_cube(vec![0.0], 1.0).unwrap());
        assert_eq!(projection(&b, 2).unwrap(), make_cube(vec![5.0], 2.0).unwrap());
        assert!(matches!(projection(&b, 3), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn shadow_examples() {
        let s = shadow(&bx1(0.0, 1.0, 0.0, 1.0));
        assert!(s.contains(&[-1.0]) && s.contains(&[1.0]) && !s.contains(&[1.5]));
        assert_eq!(s.lattice_sites(), vec![vec![-1], vec![0], vec![1]]);

        let s = shadow(&bx1(0.0, 1.0, 10.0, 1.0));
        assert!(s.contains(&[0.0]) && s.contains(&[9.0]) && !s.contains(&[5.0]));
        assert_eq!(s.lattice_sites().len(), 6);

        // touching at a single point
        let s = shadow(&bx1(0.0, 1.0, 2.0, 1.0));
        assert!(s.contains(&[1.0]) && s.contains(&[3.0]));
        assert!(s.members[0].intersects(&s.members[1]));
    }

    #[test]
    fn enlarge_examples() {
        let b = bx1(0.0, 1.0, 0.0, 1.0);
        assert_eq!(enlarge(&b, 1.0).unwrap(), bx1(0.0, 2.0, 0.0, 2.0));
        assert_eq!(enlarge(&b, 0.0).unwrap(), b);
        assert!(matches!(enlarge(&b, -0.5), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn reflect_examples() {
        assert_eq!(reflect(&(0, 5)), (5, 0));
        assert_eq!(reflect(&(3, 3)), (3, 3));
        let u = (vec![1, 2], vec![3, 4]);
        assert_eq!(reflect(&reflect(&u)), u);
    }

    #[test]
    fn sufficiently_distant_examples() {
        let a = bx1(0.0, 1.0, 0.0, 1.0);
        assert!(is_sufficiently_distant(&a, &bx1(100.0, 1.0, 0.0, 1.0), 1.0).unwrap());
        assert!(!is_sufficiently_distant(&a, &bx1(10.0, 1.0, 0.0, 1.0), 1.0).unwrap());

        let b = bx1(3.0, 2.0, 40.0, 1.0);
        let reflected = bx1(40.0, 1.0, 3.0, 1.5);
        assert_eq!(reflected_center_distance(&b, &reflected), 0.0);
        assert!(!is_sufficiently_distant(&b, &reflected, 0.5).unwrap());

        let two_d = TwoParticleBox::from_parts(vec![0.0, 0.0], 1.0, vec![0.0, 0.0], 1.0).unwrap();
        assert!(matches!(
            is_sufficiently_distant(&a, &two_d, 1.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn classify_examples() {
        let a = bx1(0.0, 1.0, 0.0, 1.0);
        let v = classify_separation(&a, &bx1(100.0, 1.0, 100.0, 1.0), 1.0).unwrap();
        assert!(v.contains(SeparationCase::E));
        assert_eq!(v.kind, SeparationKind::CompletelySeparated);

        let far = bx1(100.0, 1.0, 0.0, 1.0);
        let v = classify_separation(&a, &far, 1.0).unwrap();
        assert_eq!(v.cases, vec![SeparationCase::C]);
        assert_eq!(v.kind, SeparationKind::PartiallySeparatedOnly);

        let v = classify_separation(&far, &a, 1.0).unwrap();
        assert!(v.contains(SeparationCase::A));
        assert!(!v.contains(SeparationCase::E));

        assert!(matches!(
            classify_separation(&a, &bx1(10.0, 1.0, 0.0, 1.0), 1.0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn verdict_serializes_case_letters() {
        let v = SeparationVerdict {
            cases: vec![SeparationCase::C],
            kind: SeparationKind::PartiallySeparatedOnly,
        };
        assert_eq!(
            serde_json::to_string(&v).unwrap(),
            r#"{"cases":["C"],"kind":"partially_separated_only"}"#
        );
    }

    #[test]
    fn box_json_shape() {
        let b = bx1(0.0, 1.0, 5.0, 2.0);
        let json = serde_json::to_value(&b).unwrap();
        assert_eq!(
            json,
            serde_json::json!({"center1":[0.0],"center2":[5.0],"half_width1":1.0,"half_width2":2.0})
        );
        let back: TwoParticleBox = serde_json::from_value(json).unwrap();
        assert_eq!(back, b);
        let explicit = serde_json::json!({"center1":[0.0],"center2":[5.0],"half_width1":1.0,"half_width2":2.0,"dimension":1});
        assert_eq!(serde_json::from_value::<TwoParticleBox>(explicit).unwrap(), b);
        let mismatch = serde_json::json!({"center1":[0.0],"center2":[5.0],"half_width1":1.0,"half_width2":2.0,"dimension":2});
        assert!(serde_json::from_value::<TwoParticleBox>(mismatch).is_err());
        let bad = serde_json::json!({"center1":[0.0],"center2":[5.0],"half_width1":-1.0,"half_width2":2.0,"dimension":1});
        assert!(serde_json::from_value::<TwoParticleBox>(bad).is_err());
    }

    fn arb_box(d: usize) -> impl Strategy<Value = TwoParticleBox> {
        (
            prop::collection::vec(-30i32..30, 2 * d),
            0.5f64..4.0,
            0.5f64..4.0,
        )
            .prop_map(move |(c, l1, l2)| {
                let c: Vec<f64> = c.into_iter().map(f64::from).collect();
                TwoParticleBox::from_parts(c[..d].to_vec(), l1, c[d..].to_vec(), l2).unwrap()
            })
    }

    proptest! {
        #[test]
        fn distance_predicate_is_symmetric(a in arb_box(2), b in arb_box(2), r in 0.0f64..2.0) {
            prop_assert_eq!(
                is_sufficiently_distant(&a, &b, r).unwrap(),
                is_sufficiently_distant(&b, &a, r).unwrap()
            );
        }

        #[test]
        fn case_table_swaps_under_renaming(a in arb_box(1), b in arb_box(1), r in 0.0f64..2.0) {
            let forward = separation_cases(&a, &b, r).unwrap();
            let mut mapped: Vec<_> = forward.iter().map(|c| c.swapped()).collect();
            mapped.sort();
            prop_assert_eq!(mapped, separation_cases(&b, &a, r).unwrap());
        }

        #[test]
        fn enlarged_shadow_covers_shadow(b in arb_box(2), r in 0.0f64..3.0, t in prop::collection::vec(-1.0f64..1.0, 2), which in 0usize..2) {
            let cube = b.factors()[which];
            let x: Vec<f64> = cube.center().iter().zip(&t).map(|(c, s)| c + s * cube.half_width()).collect();
            prop_assert!(shadow(&b).contains(&x));
            prop_assert!(shadow(&enlarge(&b, r).unwrap()).contains(&x));
        }

        #[test]
        fn complete_separation_gives_disjoint_site_sets(a in arb_box(1), b in arb_box(1), r in 0.0f64..2.0) {
            let cases = separation_cases(&a, &b, r).unwrap();
            if cases.contains(&SeparationCase::E) {
                let sa = shadow(&enlarge(&a, r).unwrap()).lattice_sites();
                let sb = shadow(&enlarge(&b, r).unwrap()).lattice_sites();
                prop_assert!(sa.iter().all(|s| !sb.contains(s)));
            }
        }
    }
}
