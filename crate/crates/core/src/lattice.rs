//! Momentum bookkeeping on the unit torus.
//!
//! Momenta live on `2πZ³ \ {0}` and are stored as integer triples; the
//! factor `2π` is applied only when a physical value is needed.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TWO_PI: f64 = 2.0 * PI;

/// Default upper bound on the number of points a lattice may hold.
pub const DEFAULT_POINT_LIMIT: usize = 4_000_000;

/// Relative slack used for every closed-ball test, so that cutoffs given as
/// exact multiples of `2π` keep their boundary shell despite rounding.
const BALL_SLACK: f64 = 1e-12;

pub type IVec3 = [i32; 3];
pub type Vec3 = [f64; 3];

#[inline]
pub fn momentum(n: IVec3) -> Vec3 {
    [TWO_PI * n[0] as f64, TWO_PI * n[1] as f64, TWO_PI * n[2] as f64]
}

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm2(a: Vec3) -> f64 {
    dot(a, a)
}

#[inline]
pub fn inorm2(n: IVec3) -> i64 {
    let [x, y, z] = n.map(i64::from);
    x * x + y * y + z * z
}

#[inline]
pub fn iadd(a: IVec3, b: IVec3) -> IVec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn isub(a: IVec3, b: IVec3) -> IVec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Whether an integer point with squared norm `n2` lies in the closed ball of
/// physical radius `radius`.
#[inline]
pub fn in_ball(n2: i64, radius: f64) -> bool {
    if radius.is_infinite() {
        return true;
    }
    let r = radius / TWO_PI;
    (n2 as f64) <= r * r * (1.0 + BALL_SLACK)
}

#[inline]
pub(crate) fn within(p2: f64, radius: f64) -> bool {
    radius.is_infinite() || p2 <= radius * radius * (1.0 + BALL_SLACK)
}

/// Largest integer coordinate that can occur inside the ball.
pub fn integer_radius(radius: f64) -> i32 {
    let r = radius / TWO_PI;
    (r * (1.0 + BALL_SLACK)).floor() as i32
}

/// Bogoliubov dispersion `√(p⁴ + 16π a_V p²)` as a function of `p²`.
#[inline]
pub fn dispersion_p2(p2: f64, a_v: f64) -> f64 {
    (p2 * p2 + 16.0 * PI * a_v * p2).sqrt()
}

pub fn dispersion(p: Vec3, a_v: f64) -> f64 {
    dispersion_p2(norm2(p), a_v)
}

/// Impurity–boson coupling `8π a_W |p| ε(p)^{-1/2}` inside the closed ball of
/// radius `lambda`, zero outside. `lambda` may be `f64::INFINITY`.
pub fn form_factor(p: Vec3, a_w: f64, a_v: f64, lambda: f64) -> Result<f64> {
    let p2 = norm2(p);
    if p2 == 0.0 {
        return Err(Error::domain("form factor is undefined at the zero mode"));
    }
    Ok(form_factor_p2(p2, a_w, a_v, lambda))
}

#[inline]
pub(crate) fn form_factor_p2(p2: f64, a_w: f64, a_v: f64, lambda: f64) -> f64 {
    if !within(p2, lambda) {
        return 0.0;
    }
    8.0 * PI * a_w * p2.sqrt() / dispersion_p2(p2, a_v).sqrt()
}

/// Model parameters shared by the operator and counterterm layers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub a_v: f64,
    pub a_w: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub n_max: usize,
    /// Total momentum in units of `2π`.
    pub p_total: IVec3,
}

impl ModelParams {
    pub fn new(a_v: f64, a_w: f64, lambda: f64, kappa: f64, n_max: usize) -> Self {
        ModelParams {
            a_v,
            a_w,
            lambda,
            kappa,
            n_max,
            p_total: [0, 0, 0],
        }
    }

    pub fn with_total_momentum(mut self, p: IVec3) -> Self {
        self.p_total = p;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a_v >= 0.0 && self.a_v.is_finite()) {
            return Err(Error::domain(format!("a_V must be finite and >= 0, got {}", self.a_v)));
        }
        if !(self.a_w >= 0.0 && self.a_w.is_finite()) {
            return Err(Error::domain(format!("a_W must be finite and >= 0, got {}", self.a_w)));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::domain(format!("cutoff must be > 0, got {}", self.lambda)));
        }
        if !(self.kappa >= 0.0) {
            return Err(Error::domain(format!("kappa must be >= 0, got {}", self.kappa)));
        }
        Ok(())
    }

    /// Extra checks for anything that uses the Gross transform.
    pub fn validate_gross(&self) -> Result<()> {
        self.validate()?;
        if self.kappa > self.lambda {
            return Err(Error::domain(format!(
                "kappa = {} exceeds the cutoff {}",
                self.kappa, self.lambda
            )));
        }
        Ok(())
    }

    pub fn p_total_momentum(&self) -> Vec3 {
        momentum(self.p_total)
    }
}

/// Nonzero points of `2πZ³` inside a closed ball, in lexicographic order of
/// their integer coordinates.
#[derive(Debug, Clone)]
pub struct MomentumLattice {
    cutoff_radius: f64,
    points: Vec<IVec3>,
    // Dense lookup cube of side 2R+1 holding ordinals (u32::MAX for absent).
    radius: i32,
    table: Vec<u32>,
}

impl MomentumLattice {
    pub fn build(cutoff_radius: f64) -> Result<Self> {
        Self::build_with_limit(cutoff_radius, DEFAULT_POINT_LIMIT)
    }

    pub fn build_with_limit(cutoff_radius: f64, limit: usize) -> Result<Self> {
        if !(cutoff_radius > 0.0) || !cutoff_radius.is_finite() {
            return Err(Error::domain(format!(
                "lattice cutoff must be finite and > 0, got {cutoff_radius}"
            )));
        }
        let r = integer_radius(cutoff_radius);
        // Cheap upper estimate before allocating anything.
        let rr = cutoff_radius / TWO_PI;
        let estimate = (4.0 / 3.0 * PI * rr.powi(3)) as u128;
        if estimate > 2 * limit as u128 {
            return Err(Error::capacity("momentum lattice points", estimate, limit as u128));
        }
        let side = (2 * r + 1) as usize;
        let mut table = vec![u32::MAX; side * side * side];
        let mut points = Vec::new();
        for x in -r..=r {
            for y in -r..=r {
                for z in -r..=r {
                    let n = [x, y, z];
                    let n2 = inorm2(n);
                    if n2 == 0 || !in_ball(n2, cutoff_radius) {
                        continue;
                    }
                    if points.len() >= limit {
                        return Err(Error::capacity(
                            "momentum lattice points",
                            points.len() as u128 + 1,
                            limit as u128,
                        ));
                    }
                    let slot = ((x + r) as usize * side + (y + r) as usize) * side + (z + r) as usize;
                    table[slot] = points.len() as u32;
                    points.push(n);
                }
            }
        }
        Ok(MomentumLattice {
            cutoff_radius,
            points,
            radius: r,
            table,
        })
    }

    pub fn cutoff_radius(&self) -> f64 {
        self.cutoff_radius
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Integer coordinates of every point.
    pub fn points(&self) -> &[IVec3] {
        &self.points
    }

    pub fn point(&self, i: usize) -> IVec3 {
        self.points[i]
    }

    /// Physical momentum of point `i`.
    pub fn momentum(&self, i: usize) -> Vec3 {
        momentum(self.points[i])
    }

    pub fn p2(&self, i: usize) -> f64 {
        TWO_PI * TWO_PI * inorm2(self.points[i]) as f64
    }

    /// Largest integer coordinate of any point.
    pub fn integer_radius(&self) -> i32 {
        self.radius
    }

    pub fn index_of(&self, n: IVec3) -> Option<usize> {
        let r = self.radius;
        if n.iter().any(|&c| c < -r || c > r) {
            return None;
        }
        let side = (2 * r + 1) as usize;
        let slot = ((n[0] + r) as usize * side + (n[1] + r) as usize) * side + (n[2] + r) as usize;
        match self.table[slot] {
            u32::MAX => None,
            i => Some(i as usize),
        }
    }
}

/// One of the 48 signed permutations that map `Z³` to itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CubicSymmetry {
    perm: [usize; 3],
    sign: [i32; 3],
}

impl CubicSymmetry {
    #[inline]
    pub fn apply(&self, n: IVec3) -> IVec3 {
        [
            self.sign[0] * n[self.perm[0]],
            self.sign[1] * n[self.perm[1]],
            self.sign[2] * n[self.perm[2]],
        ]
    }

    #[inline]
    pub fn apply_real(&self, v: Vec3) -> Vec3 {
        [
            self.sign[0] as f64 * v[self.perm[0]],
            self.sign[1] as f64 * v[self.perm[1]],
            self.sign[2] as f64 * v[self.perm[2]],
        ]
    }
}

/// The full octahedral group `O_h`, in a fixed order.
pub fn cubic_group() -> Vec<CubicSymmetry> {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out = Vec::with_capacity(48);
    for perm in PERMS {
        for s in 0..8 {
            let sign = [
                if s & 1 == 0 { 1 } else { -1 },
                if s & 2 == 0 { 1 } else { -1 },
                if s & 4 == 0 { 1 } else { -1 },
            ];
            out.push(CubicSymmetry { perm, sign });
        }
    }
    out
}

/// Elements of `O_h` fixing `v`.
pub fn stabilizer(v: IVec3) -> Vec<CubicSymmetry> {
    cubic_group().into_iter().filter(|g| g.apply(v) == v).collect()
}

/// Orbit representatives of `points` under `group`, with orbit sizes.
///
/// A point represents its orbit when it is the lexicographically largest
/// image. `points` must be closed under the group.
pub fn orbit_representatives(points: &[IVec3], group: &[CubicSymmetry]) -> Vec<(usize, usize)> {
    let mut reps = Vec::new();
    let mut images: Vec<IVec3> = Vec::with_capacity(group.len());
    for (i, &n) in points.iter().enumerate() {
        images.clear();
        let mut is_rep = true;
        for g in group {
            let m = g.apply(n);
            if m > n {
                is_rep = false;
                break;
            }
            images.push(m);
        }
        if is_rep {
            images.sort_unstable();
            images.dedup();
            reps.push((i, images.len()));
        }
    }
    reps
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn shell_counts() {
        assert_eq!(MomentumLattice::build(TWO_PI).unwrap().len(), 6);
        assert_eq!(MomentumLattice::build(TWO_PI * 0.5).unwrap().len(), 0);
        assert_eq!(MomentumLattice::build(TWO_PI * 2.0).unwrap().len(), 32);
    }

    #[test]
    fn lattice_rejects_bad_cutoff_and_capacity() {
        assert!(matches!(MomentumLattice::build(0.0), Err(Error::Domain(_))));
        assert!(matches!(
            MomentumLattice::build_with_limit(TWO_PI * 3.0, 50),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn lattice_is_ordered_indexed_and_symmetric() {
        let lat = MomentumLattice::build(TWO_PI * 3.3).unwrap();
        for (i, &n) in lat.points().iter().enumerate() {
            assert_eq!(lat.index_of(n), Some(i));
            assert!(lat.index_of([-n[0], -n[1], -n[2]]).is_some());
            assert!(inorm2(n) > 0);
        }
        assert!(lat.points().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(lat.index_of([0, 0, 0]), None);
        assert_eq!(lat.index_of([9, 0, 0]), None);
    }

    #[test]
    fn dispersion_values() {
        assert_eq!(dispersion([0.0; 3], 3.0), 0.0);
        assert!((dispersion([TWO_PI, 0.0, 0.0], 0.0) - 39.47841760435743).abs() < 1e-12);
        // Independent high-precision value for a_V = 1, |p| = 2π.
        let e = dispersion([0.0, TWO_PI, 0.0], 1.0);
        assert!((e - 59.522_660_929_122).abs() < 1e-9, "{e}");
    }

    #[test]
    fn form_factor_values() {
        let p = [TWO_PI, 0.0, 0.0];
        assert_eq!(form_factor(p, 0.0, 1.0, 100.0).unwrap(), 0.0);
        assert_eq!(form_factor(p, 0.7, 0.0, 100.0).unwrap(), 8.0 * PI * 0.7);
        assert!(matches!(form_factor([0.0; 3], 1.0, 1.0, 1.0), Err(Error::Domain(_))));
        assert_eq!(form_factor(p, 1.0, 1.0, 1.0).unwrap(), 0.0);
        // Boundary shell is kept.
        assert!(form_factor(p, 1.0, 1.0, TWO_PI).unwrap() > 0.0);
        let far = form_factor([100.0 * TWO_PI, 0.0, 0.0], 1.0, 1.0, f64::INFINITY).unwrap();
        assert!((far / (8.0 * PI) - 1.0).abs() < 0.01);
    }

    #[test]
    fn group_and_orbits() {
        let g = cubic_group();
        assert_eq!(g.len(), 48);
        let lat = MomentumLattice::build(TWO_PI * 4.0).unwrap();
        let reps = orbit_representatives(lat.points(), &g);
        let total: usize = reps.iter().map(|r| r.1).sum();
        assert_eq!(total, lat.len());
        assert_eq!(stabilizer([1, 0, 0]).len(), 8);
        assert_eq!(stabilizer([0, 0, 0]).len(), 48);
        let sub = stabilizer([0, 0, 2]);
        let total: usize = orbit_representatives(lat.points(), &sub).iter().map(|r| r.1).sum();
        assert_eq!(total, lat.len());
    }

    proptest! {
        #[test]
        fn dispersion_dominates_free(n in prop::array::uniform3(-30i32..30), a in 0.0f64..5.0) {
            let p = momentum(n);
            prop_assert!(dispersion(p, a) >= norm2(p) * (1.0 - 1e-15));
        }

        #[test]
        fn form_factor_is_cubic_invariant(n in prop::array::uniform3(-6i32..6), a_w in 0.0f64..2.0, a_v in 0.0f64..2.0, g in 0usize..48) {
            prop_assume!(inorm2(n) > 0);
            let sym = cubic_group()[g];
            let lam = TWO_PI * 5.0;
            let f = form_factor(momentum(n), a_w, a_v, lam).unwrap();
            let fg = form_factor(momentum(sym.apply(n)), a_w, a_v, lam).unwrap();
            let fm = form_factor(momentum([-n[0], -n[1], -n[2]]), a_w, a_v, lam).unwrap();
            prop_assert!((f - fg).abs() <= 1e-14 * f.abs());
            prop_assert!((f - fm).abs() <= 1e-14 * f.abs());
        }

        #[test]
        fn lattice_prefix_stability(r1 in 0.6f64..3.0, dr in 0.0f64..2.0) {
            let small = MomentumLattice::build(TWO_PI * r1).unwrap();
            let big = MomentumLattice::build(TWO_PI * (r1 + dr)).unwrap();
            let restricted: Vec<IVec3> = big.points().iter().copied()
                .filter(|&n| in_ball(inorm2(n), TWO_PI * r1)).collect();
            prop_assert_eq!(restricted, small.points().to_vec());
        }
    }
}
