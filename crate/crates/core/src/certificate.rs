//! Rotation–shear word algebra and the quasi-direction non-identity
//! certificate.
//!
//! A word `(α_1, s_1) … (α_n, s_n)` with `0 < α_i < π` and `s_i > 0` stands
//! for the product `R(α_n)A_n ⋯ R(α_1)A_1`, `A_i = [[1, s_i], [0, 1]]`. When
//! `Σα_i ≤ 2π` the product is never the identity: following the halfline
//! spanned by `(1, 0)`, shears only turn it clockwise within its half-plane
//! and rotations turn it counterclockwise by `α_i`, so its total turning lies
//! strictly between `0` and `2π` and it cannot come back to `(1, 0)`.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use crate::curve::ConvexBoundary;
use crate::curve::{cross, Vec2};
use crate::error::{BilliardError, Result};
use crate::outer::{monodromy_letters, Mat2, OuterOrbit};

/// Threshold on the normalized y-component below which a halfline counts as
/// lying on the x-axis.
pub const AXIS_TOL: f64 = 1e-14;
/// Minimum max-entry distance from the identity accepted by the cross-check.
pub const NON_IDENTITY_MARGIN: f64 = 1e-12;

pub fn rotation(alpha: f64) -> Mat2 {
    let (s, c) = alpha.sin_cos();
    Mat2::new(c, -s, s, c)
}

pub fn shear(s: f64) -> Mat2 {
    Mat2::new(1.0, s, 0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Letter {
    pub alpha: f64,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShearRotationWord {
    letters: Vec<Letter>,
}

impl ShearRotationWord {
    pub fn new(letters: Vec<Letter>) -> Result<Self> {
        if letters.is_empty() {
            return Err(BilliardError::InvalidWord("empty word".into()));
        }
        for (i, l) in letters.iter().enumerate() {
            if !(l.alpha > 0.0 && l.alpha < PI) {
                return Err(BilliardError::InvalidWord(format!(
                    "letter {}: alpha = {} not in (0, π)",
                    i + 1,
                    l.alpha
                )));
            }
            if !(l.s > 0.0 && l.s.is_finite()) {
                return Err(BilliardError::InvalidWord(format!(
                    "letter {}: shear s = {} not positive",
                    i + 1,
                    l.s
                )));
            }
        }
        Ok(ShearRotationWord { letters })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(alpha, s)| Letter { alpha, s })
                .collect(),
        )
    }

    /// The word of the monodromy along a closed outer billiard orbit.
    pub fn from_orbit<B: ConvexBoundary + ?Sized>(curve: &B, orbit: &OuterOrbit) -> Result<Self> {
        Self::from_pairs(&monodromy_letters(curve, orbit))
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn alpha_sum(&self) -> f64 {
        self.letters.iter().map(|l| l.alpha).sum()
    }
}

/// Right-to-left product `R(α_n)A_n ⋯ R(α_1)A_1`.
pub fn word_product(word: &ShearRotationWord) -> Mat2 {
    word.letters.iter().fold(Mat2::identity(), |acc, l| {
        rotation(l.alpha) * shear(l.s) * acc
    })
}

/// The constant word `α = (n-2)π/n`, `s = 4 cot(2π/n)`, whose product is the
/// identity for every `n >= 5`.
pub fn identity_family(n: usize) -> Result<ShearRotationWord> {
    if n < 5 {
        return Err(BilliardError::InvalidPeriod {
            n,
            reason: "needs n >= 5: cot(2π/n) is negative for n = 3 and zero for n = 4".into(),
        });
    }
    let nf = n as f64;
    let alpha = (nf - 2.0) * PI / nf;
    let s = 4.0 / (TAU / nf).tan();
    ShearRotationWord::new(vec![Letter { alpha, s }; n])
}

/// Max-entry distance from the identity.
pub fn distance_from_identity(m: &Mat2) -> f64 {
    (m - Mat2::identity()).amax()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Start,
    Shear,
    Rotation,
}

impl Stage {
    fn label(self) -> &'static str {
        match self {
            Stage::Start => "start",
            Stage::Shear => "shear",
            Stage::Rotation => "rotation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep {
    pub stage: Stage,
    /// 1-based letter index, 0 for the start record.
    pub index: usize,
    /// Continuously lifted direction angle of the tracked halfline.
    pub angle: f64,
    pub quasi_direction: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasiDirectionTrace {
    pub steps: Vec<TraceStep>,
    pub total_rotation: f64,
}

/// 0: positive x-axis, 1: upper half-plane, 2: negative x-axis, 3: lower
/// half-plane.
pub fn quasi_direction(v: &Vec2) -> u8 {
    let y = v.y / v.norm();
    if y > AXIS_TOL {
        1
    } else if y < -AXIS_TOL {
        3
    } else if v.x > 0.0 {
        0
    } else {
        2
    }
}

/// Follow the halfline spanned by `(1, 0)` through `A_1, R(α_1), …, A_n, R(α_n)`.
pub fn track_halfline(word: &ShearRotationWord) -> QuasiDirectionTrace {
    let mut v = Vec2::new(1.0, 0.0);
    let mut angle = 0.0;
    let mut steps = Vec::with_capacity(2 * word.len() + 1);
    steps.push(TraceStep {
        stage: Stage::Start,
        index: 0,
        angle,
        quasi_direction: quasi_direction(&v),
    });
    for (i, l) in word.letters.iter().enumerate() {
        let sheared = shear(l.s) * v;
        angle += cross(&v, &sheared).atan2(v.dot(&sheared));
        v = sheared.normalize();
        steps.push(TraceStep {
            stage: Stage::Shear,
            index: i + 1,
            angle,
            quasi_direction: quasi_direction(&v),
        });
        v = (rotation(l.alpha) * v).normalize();
        angle += l.alpha;
        steps.push(TraceStep {
            stage: Stage::Rotation,
            index: i + 1,
            angle,
            quasi_direction: quasi_direction(&v),
        });
    }
    QuasiDirectionTrace {
        steps,
        total_rotation: angle,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    ProvenNotIdentity,
    Inconclusive(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub verdict: Verdict,
    pub alpha_sum: f64,
    pub trace: QuasiDirectionTrace,
    pub product: Mat2,
    pub distance_from_identity: f64,
}

impl Certificate {
    pub fn is_proven(&self) -> bool {
        self.verdict == Verdict::ProvenNotIdentity
    }

    /// Human-readable report: verdict line, product, then one line per stage.
    pub fn report(&self) -> String {
        let mut out = String::new();
        match &self.verdict {
            Verdict::ProvenNotIdentity => {
                let _ = writeln!(
                    out,
                    "proven_not_identity (Σα = {} <= 2π; total rotation {} < 2π)",
                    pi_multiple(self.alpha_sum),
                    pi_multiple(self.trace.total_rotation)
                );
            }
            Verdict::Inconclusive(reason) => {
                let _ = writeln!(out, "inconclusive ({reason})");
            }
        }
        if self.distance_from_identity < 1e-10 {
            let _ = writeln!(out, "product = Id to 1e-10");
        } else {
            let _ = writeln!(
                out,
                "product differs from Id by {:.6e}",
                self.distance_from_identity
            );
        }
        let p = &self.product;
        let _ = writeln!(
            out,
            "product = [[{:.16e}, {:.16e}], [{:.16e}, {:.16e}]]",
            p[(0, 0)],
            p[(0, 1)],
            p[(1, 0)],
            p[(1, 1)]
        );
        let _ = writeln!(out, "stage,index,q,lifted_angle");
        for s in &self.trace.steps {
            let _ = writeln!(
                out,
                "{},{},{},{:.16e}",
                s.stage.label(),
                s.index,
                s.quasi_direction,
                s.angle
            );
        }
        out
    }
}

/// Angle written as a multiple of π, exact integers printed bare.
fn pi_multiple(angle: f64) -> String {
    let k = angle / PI;
    if (k - k.round()).abs() < 1e-9 {
        format!("{}π", k.round() as i64)
    } else {
        format!("{k:.6}π")
    }
}

/// Certify `word_product(word) != Id` when `Σα_i <= 2π`.
pub fn certify_not_identity(word: &ShearRotationWord) -> Certificate {
    let alpha_sum = word.alpha_sum();
    let trace = track_halfline(word);
    let product = word_product(word);
    let distance = distance_from_identity(&product);
    let verdict = if alpha_sum > TAU + 1e-12 {
        Verdict::Inconclusive(format!("Σα = {} > 2π", pi_multiple(alpha_sum)))
    } else if !(trace.total_rotation > 0.0 && trace.total_rotation < TAU) {
        Verdict::Inconclusive(format!(
            "tracked halfline turned {} (outside (0, 2π))",
            pi_multiple(trace.total_rotation)
        ))
    } else if distance <= NON_IDENTITY_MARGIN {
        Verdict::Inconclusive(format!(
            "cross-check failed: product within {distance:.3e} of Id"
        ))
    } else {
        Verdict::ProvenNotIdentity
    };
    Certificate {
        verdict,
        alpha_sum,
        trace,
        product,
        distance_from_identity: distance,
    }
}

/// `|Σα_i - π(n - 2m)| < 1e-8`.
pub fn winding_sum_check(orbit: &OuterOrbit) -> bool {
    let expected = PI * (orbit.n as f64 - 2.0 * f64::from(orbit.winding));
    (orbit.alpha_sum() - expected).abs() < 1e-8
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::CurveModel;
    use crate::outer::{monodromy_analytic, OuterOrbit};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn single_letter_product() {
        let w = ShearRotationWord::from_pairs(&[(PI / 2.0, 1.0)]).unwrap();
        assert_abs_diff_eq!(
            word_product(&w),
            Mat2::new(0.0, -1.0, 1.0, 1.0),
            epsilon = 1e-15
        );
    }

    #[test]
    fn octagon_word_is_identity() {
        let w = ShearRotationWord::from_pairs(&[(3.0 * PI / 4.0, 4.0); 8]).unwrap();
        assert!(distance_from_identity(&word_product(&w)) < 1e-10);
        let fam = identity_family(8).unwrap();
        for l in fam.letters() {
            assert_abs_diff_eq!(l.alpha, 3.0 * PI / 4.0, epsilon = 1e-15);
            assert_abs_diff_eq!(l.s, 4.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn pentagon_family_by_direct_multiplication() {
        let fam = identity_family(5).unwrap();
        let alpha = 3.0 * PI / 5.0;
        let s = 4.0 / (2.0 * PI / 5.0).tan();
        assert_abs_diff_eq!(fam.letters()[0].alpha, alpha, epsilon = 1e-15);
        assert_abs_diff_eq!(fam.letters()[0].s, s, epsilon = 1e-14);
        let (c, sn) = (alpha.cos(), alpha.sin());
        // explicit R·A written out entrywise
        let f = Mat2::new(c, c * s - sn, sn, sn * s + c);
        let mut p = Mat2::identity();
        for _ in 0..5 {
            p = f * p;
        }
        assert!(distance_from_identity(&p) < 1e-9);
    }

    #[test]
    fn small_periods_rejected() {
        for n in [0, 3, 4] {
            assert_eq!(identity_family(n).unwrap_err().name(), "InvalidPeriod");
        }
    }

    #[test]
    fn invalid_letters_rejected() {
        assert!(ShearRotationWord::from_pairs(&[(PI, 1.0)]).is_err());
        assert!(ShearRotationWord::from_pairs(&[(1.0, 0.0)]).is_err());
        assert!(ShearRotationWord::from_pairs(&[]).is_err());
    }

    #[test]
    fn triangle_word_certified() {
        let s = 2.0 / 3f64.sqrt();
        let w = ShearRotationWord::from_pairs(&[(PI / 3.0, s); 3]).unwrap();
        let cert = certify_not_identity(&w);
        assert!(cert.is_proven());
        assert_abs_diff_eq!(cert.product[(1, 0)], 1.5 * 3f64.sqrt(), epsilon = 1e-12);
        assert!(cert.trace.total_rotation < TAU);
    }

    #[test]
    fn identity_family_is_inconclusive() {
        let cert = certify_not_identity(&identity_family(8).unwrap());
        assert!(!cert.is_proven());
        let report = cert.report();
        assert!(
            report.starts_with("inconclusive (Σα = 6π > 2π)"),
            "{report}"
        );
        assert!(report.contains("product = Id to 1e-10"));
    }

    #[test]
    fn square_word_certified() {
        for s in [1e-3, 0.5, 2.0, 40.0] {
            let w = ShearRotationWord::from_pairs(&[(PI / 2.0, s); 4]).unwrap();
            let cert = certify_not_identity(&w);
            assert!(cert.is_proven(), "s = {s}");
            // direct product oracle: the (0,1) entry grows with s
            assert!(cert.product[(0, 1)].abs() > 1e-12 || cert.product[(1, 0)].abs() > 1e-12);
        }
    }

    #[test]
    fn winding_identity_on_circle_orbits() {
        let c = CurveModel::circle(1.0).unwrap();
        let tri = OuterOrbit::from_start(&c, Vec2::new(2.0, 0.0), 3).unwrap();
        assert!(winding_sum_check(&tri));
        assert_abs_diff_eq!(tri.alpha_sum(), PI, epsilon = 1e-10);
        let d = 1.0 / (2.0 * PI / 5.0).cos();
        let star = OuterOrbit::from_start(&c, Vec2::new(d, 0.0), 5).unwrap();
        assert_eq!(star.winding, 2);
        assert!(winding_sum_check(&star));
        let sq = OuterOrbit::from_start(&c, Vec2::new(2f64.sqrt(), 0.0), 4).unwrap();
        assert!(winding_sum_check(&sq));
        assert_abs_diff_eq!(sq.alpha_sum(), TAU, epsilon = 1e-10);
    }

    #[test]
    fn orbit_word_matches_monodromy() {
        let c = CurveModel::circle(1.0).unwrap();
        let tri = OuterOrbit::from_start(&c, Vec2::new(2.0, 0.0), 3).unwrap();
        let w = ShearRotationWord::from_orbit(&c, &tri).unwrap();
        assert_abs_diff_eq!(
            word_product(&w),
            monodromy_analytic(&c, &tri).unwrap(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn report_lists_every_stage() {
        let w = ShearRotationWord::from_pairs(&[(1.0, 0.5), (2.0, 3.0)]).unwrap();
        let cert = certify_not_identity(&w);
        let stage_lines = cert
            .report()
            .lines()
            .filter(|l| {
                l.starts_with("shear,") || l.starts_with("rotation,") || l.starts_with("start,")
            })
            .count();
        assert_eq!(stage_lines, 5);
    }

    proptest! {
        #[test]
        fn shear_keeps_quasi_direction(phi in 0.0..TAU, s in 1e-6f64..50.0) {
            let v = Vec2::new(phi.cos(), phi.sin());
            let w = shear(s) * v;
            prop_assert_eq!(quasi_direction(&v), quasi_direction(&w));
            // clockwise or fixed
            prop_assert!(cross(&v, &w) <= 1e-15);
        }

        #[test]
        fn rotation_advances_lift_by_alpha(alphas in proptest::collection::vec(1e-3f64..(PI - 1e-3), 1..8)) {
            let w = ShearRotationWord::from_pairs(&alphas.iter().map(|&a| (a, 1e-300)).collect::<Vec<_>>()).unwrap();
            let trace = track_halfline(&w);
            let rot: Vec<_> = trace.steps.iter().filter(|s| s.stage == Stage::Rotation).collect();
            let shr: Vec<_> = trace.steps.iter().filter(|s| s.stage == Stage::Shear).collect();
            for (r, s) in rot.iter().zip(shr.iter()) {
                prop_assert!((r.angle - s.angle - alphas[r.index - 1]).abs() < 1e-13);
            }
        }

        #[test]
        fn determinant_is_one(pairs in proptest::collection::vec((1e-3f64..(PI - 1e-3), 1e-3f64..10.0), 1..12)) {
            let w = ShearRotationWord::from_pairs(&pairs).unwrap();
            let det = word_product(&w).determinant();
            let scale = word_product(&w).amax().max(1.0);
            prop_assert!((det - 1.0).abs() < 1e-12 * scale * scale);
        }
    }
}
