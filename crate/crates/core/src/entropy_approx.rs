//! Polygonal approximation of the entropy cardinality term and its reduction
//! to pairwise submodular energies.
//!
//! The quantity approximated is `g(c) = -c ln(c / N)`, so that
//! `Σ_k g(|S^k|) = N·H(S)`. Its piecewise-linear interpolant through a set of
//! integer breakpoints is written as a sum of "triangle" terms
//! `min(a_L c, a_U c + b_U)`. Each triangle term becomes pairwise after adding
//! one auxiliary binary variable, and the pairwise terms are submodular as long
//! as all elements enter the cardinality with the same orientation.

use alloc::vec::Vec;

use crate::energy::Labeling;
use crate::math::{ln, pow, round};
use crate::{Error, Result};

/// Default number of breakpoints per segment function.
pub const DEFAULT_BREAKPOINTS: usize = 16;

/// `min(a_lower·c, a_upper·c + b_upper)` on `valid_range`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleTerm {
    pub a_lower: f64,
    pub a_upper: f64,
    pub b_upper: f64,
    pub valid_range: (f64, f64),
}

impl TriangleTerm {
    pub fn new(a_lower: f64, a_upper: f64, b_upper: f64, valid_range: (f64, f64)) -> Result<Self> {
        if a_lower < a_upper {
            return Err(Error::NotSubmodular);
        }
        Ok(Self { a_lower, a_upper, b_upper, valid_range })
    }

    /// `h·min(c, 1)`: the label-cost term as a triangle.
    pub fn label_cost(h: f64, n: usize) -> Self {
        Self { a_lower: h, a_upper: 0.0, b_upper: h, valid_range: (0.0, n as f64) }
    }

    #[inline]
    pub fn value(&self, c: f64) -> f64 {
        (self.a_lower * c).min(self.a_upper * c + self.b_upper)
    }

    /// Cardinality where the two pieces meet, if they are not parallel.
    pub fn breakpoint(&self) -> Option<f64> {
        let d = self.a_lower - self.a_upper;
        (d > 0.0).then(|| self.b_upper / d)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { a_lower: self.a_lower * s, a_upper: self.a_upper * s, b_upper: self.b_upper * s, ..*self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolygonalApprox {
    pub terms: Vec<TriangleTerm>,
    /// Cardinalities where the approximation equals `g` exactly.
    pub breakpoints: Vec<usize>,
    pub n: usize,
}

/// `g(c) = -c ln(c / n)` with `g(0) = 0`.
#[inline]
pub fn entropy_cardinality(c: f64, n: f64) -> f64 {
    if c <= 0.0 {
        0.0
    } else {
        -c * ln(c / n)
    }
}

/// Breakpoints at 0, `n`, and geometrically spaced integers from 1.
fn breakpoint_positions(n: usize, num_breakpoints: usize) -> Vec<usize> {
    let interior = num_breakpoints - 2;
    let mut pts = Vec::with_capacity(num_breakpoints);
    pts.push(0);
    if n >= 2 {
        let mut prev = 0usize;
        for j in 0..interior {
            let ideal = pow(n as f64, j as f64 / interior as f64);
            let c = (round(ideal) as usize).max(prev + 1);
            if c >= n {
                break;
            }
            pts.push(c);
            prev = c;
        }
    }
    pts.push(n);
    pts
}

pub fn build_approximation(n: usize, num_breakpoints: usize) -> Result<PolygonalApprox> {
    if n == 0 {
        return Err(Error::Invalid("domain size must be at least 1"));
    }
    if num_breakpoints < 3 {
        return Err(Error::Invalid("need at least three breakpoints"));
    }
    let breakpoints = breakpoint_positions(n, num_breakpoints);
    let nf = n as f64;
    let slopes: Vec<f64> = breakpoints
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0] as f64, w[1] as f64);
            (entropy_cardinality(b, nf) - entropy_cardinality(a, nf)) / (b - a)
        })
        .collect();
    let range = (0.0, nf);
    let mut terms = Vec::with_capacity(slopes.len());
    if slopes.len() == 1 {
        terms.push(TriangleTerm::new(slopes[0], slopes[0], 0.0, range)?);
    } else {
        for l in 0..slopes.len() - 1 {
            let drop = slopes[l] - slopes[l + 1];
            let b = breakpoints[l + 1] as f64;
            let a_lower = if l == 0 { slopes[0] } else { 0.0 };
            terms.push(TriangleTerm::new(a_lower, a_lower - drop, drop * b, range)?);
        }
    }
    Ok(PolygonalApprox { terms, breakpoints, n })
}

pub fn evaluate(approx: &PolygonalApprox, c: usize) -> f64 {
    approx.evaluate(c as f64)
}

impl PolygonalApprox {
    pub fn evaluate(&self, c: f64) -> f64 {
        self.terms.iter().map(|t| t.value(c)).sum()
    }

    /// Largest `|approx(c) - g(c)|` over integer `c ∈ [0, N]`.
    pub fn sup_error(&self) -> f64 {
        let nf = self.n as f64;
        (0..=self.n)
            .map(|c| (self.evaluate(c as f64) - entropy_cardinality(c as f64, nf)).abs())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { terms: self.terms.iter().map(|t| t.scaled(s)).collect(), ..self.clone() }
    }
}

/// One triangle term written over binary variables: a constant, identical
/// unary potentials on every listed element, and (optionally) one auxiliary
/// variable joined to every element by the same pairwise potential.
///
/// Element variables are `x_p`; the auxiliary variable is `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseEnergyFragment {
    pub constant: f64,
    pub elements: Vec<usize>,
    /// Potential of each listed element, indexed by `x_p`.
    pub element_unary: [f64; 2],
    pub has_aux: bool,
    /// Potential of the auxiliary variable, indexed by `z`.
    pub aux_unary: [f64; 2],
    /// `θ[z][x_p]`, applied to every listed element.
    pub pairwise: [[f64; 2]; 2],
}

/// How the cardinality depends on the listed element variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Orientation {
    /// `c = c0 + Σ x_p`
    Direct,
    /// `c = c0 + Σ (1 - x_p)`
    Complement,
}

impl PairwiseEnergyFragment {
    /// Energy for element values `x` (indexed by element id) and aux value `z`.
    pub fn value(&self, x: &dyn Fn(usize) -> bool, z: bool) -> f64 {
        let mut e = self.constant;
        for &p in &self.elements {
            let xp = x(p) as usize;
            e += self.element_unary[xp];
            if self.has_aux {
                e += self.pairwise[z as usize][xp];
            }
        }
        if self.has_aux {
            e += self.aux_unary[z as usize];
        }
        e
    }

    /// Energy minimized over the auxiliary variable.
    pub fn min_value(&self, x: &dyn Fn(usize) -> bool) -> f64 {
        if self.has_aux {
            self.value(x, false).min(self.value(x, true))
        } else {
            self.value(x, false)
        }
    }

    pub fn is_submodular(&self) -> bool {
        let t = &self.pairwise;
        t[0][0] + t[1][1] <= t[0][1] + t[1][0]
    }
}

fn reduce(term: &TriangleTerm, elements: Vec<usize>, c0: f64, orientation: Orientation) -> Result<PairwiseEnergyFragment> {
    if term.a_lower < term.a_upper {
        return Err(Error::NotSubmodular);
    }
    let (al, au, bu) = (term.a_lower, term.a_upper, term.b_upper);
    let d = al - au;
    let c_lo = c0;
    let c_hi = c0 + elements.len() as f64;
    // which piece is active over the whole reachable range, if only one is
    let linear = match term.breakpoint() {
        None => Some((al, 0.0)),
        Some(b) if c_hi <= b => Some((al, 0.0)),
        Some(b) if c_lo >= b => Some((au, bu)),
        _ => None,
    };
    let none = [[0.0; 2]; 2];
    let frag = match (linear, orientation) {
        (Some((a, b)), Orientation::Direct) => PairwiseEnergyFragment {
            constant: a * c0 + b,
            elements,
            element_unary: [0.0, a],
            has_aux: false,
            aux_unary: [0.0; 2],
            pairwise: none,
        },
        (Some((a, b)), Orientation::Complement) => PairwiseEnergyFragment {
            constant: a * c0 + b,
            elements,
            element_unary: [a, 0.0],
            has_aux: false,
            aux_unary: [0.0; 2],
            pairwise: none,
        },
        // z = 1 selects the upper piece: a_L c + z (b_U - d c)
        (None, Orientation::Direct) => PairwiseEnergyFragment {
            constant: al * c0,
            elements,
            element_unary: [0.0, al],
            has_aux: true,
            aux_unary: [0.0, bu - d * c0],
            pairwise: [[0.0, 0.0], [0.0, -d]],
        },
        // z = 1 selects the lower piece: a_U c + b_U + z (d c - b_U)
        (None, Orientation::Complement) => PairwiseEnergyFragment {
            constant: au * c0 + bu,
            elements,
            element_unary: [au, 0.0],
            has_aux: true,
            aux_unary: [0.0, d * c0 - bu],
            pairwise: [[0.0, 0.0], [d, 0.0]],
        },
    };
    Ok(frag)
}

/// Reduction for binary labelings `S_p ∈ {0, 1}` over `n` elements, with
/// `x_p = S_p`. Segment `k = 1` has `|S^1| = Σ x_p`; `k = 0` has
/// `|S^0| = Σ (1 - x_p)`.
pub fn reduce_binary(term: &TriangleTerm, k: usize, n: usize) -> Result<PairwiseEnergyFragment> {
    let elements = (0..n).collect();
    match k {
        1 => reduce(term, elements, 0.0, Orientation::Direct),
        0 => reduce(term, elements, 0.0, Orientation::Complement),
        _ => Err(Error::NotBinary(k + 1)),
    }
}

/// Reduction for an α-expansion from `s_t`, with `x_p = 1` meaning "switch to α".
///
/// For `k = α` the cardinality is `|S_t^α| + Σ_{p ∉ S_t^α} x_p`; elements
/// already labeled α are not variables. For `k ≠ α` it is
/// `Σ_{p ∈ S_t^k} (1 - x_p)`. `k` and `alpha` may be [`crate::energy::OUTLIER`].
pub fn reduce_expansion(term: &TriangleTerm, k: usize, alpha: usize, s_t: &Labeling) -> Result<PairwiseEnergyFragment> {
    if k == alpha {
        let (mut fixed, mut elements) = (0usize, Vec::new());
        for (p, &l) in s_t.labels().iter().enumerate() {
            if l == alpha {
                fixed += 1;
            } else {
                elements.push(p);
            }
        }
        reduce(term, elements, fixed as f64, Orientation::Direct)
    } else {
        let elements = s_t.members(k);
        reduce(term, elements, 0.0, Orientation::Complement)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::OUTLIER;
    use alloc::vec;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn endpoints_and_breakpoints_are_exact() {
        for &(n, m) in &[(100usize, 12usize), (100, 3), (7, 16), (1, 3), (2, 5), (1000, 16)] {
            let a = build_approximation(n, m).unwrap();
            assert!(evaluate(&a, 0).abs() < 1e-9);
            assert!(evaluate(&a, n).abs() < 1e-9);
            for &b in &a.breakpoints {
                assert!(close(evaluate(&a, b), entropy_cardinality(b as f64, n as f64), 1e-9), "n={n} b={b}");
            }
            assert!(a.terms.iter().all(|t| t.a_lower >= t.a_upper));
        }
    }

    #[test]
    fn breakpoint_layout() {
        let a = build_approximation(100, 12).unwrap();
        assert_eq!(a.breakpoints, vec![0, 1, 2, 3, 4, 6, 10, 16, 25, 40, 63, 100]);
        // fewer integers than requested interior points
        let a = build_approximation(4, 16).unwrap();
        assert_eq!(a.breakpoints, vec![0, 1, 2, 3, 4]);
        assert!(a.sup_error() < 1e-12);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(build_approximation(0, 5).is_err());
        assert!(build_approximation(10, 2).is_err());
        assert_eq!(TriangleTerm::new(0.0, 1.0, 0.0, (0.0, 1.0)), Err(Error::NotSubmodular));
        let bad = TriangleTerm { a_lower: -1.0, a_upper: 1.0, b_upper: 0.0, valid_range: (0.0, 2.0) };
        assert_eq!(reduce_binary(&bad, 1, 2), Err(Error::NotSubmodular));
    }

    #[test]
    fn degenerate_triangle_is_unary() {
        let t = TriangleTerm::new(0.7, 0.7, 0.0, (0.0, 3.0)).unwrap();
        let f = reduce_binary(&t, 1, 3).unwrap();
        assert!(!f.has_aux);
        assert_eq!(f.element_unary, [0.0, 0.7]);
        assert_eq!(f.constant, 0.0);
    }

    #[test]
    fn empty_segment_contributes_min_zero_bu() {
        for bu in [2.0, -1.5] {
            let t = TriangleTerm::new(3.0, -1.0, bu, (0.0, 4.0)).unwrap();
            let f = reduce_binary(&t, 1, 4).unwrap();
            assert!(close(f.min_value(&|_| false), 0.0f64.min(bu), 1e-12));
            let f0 = reduce_binary(&t, 0, 4).unwrap();
            assert!(close(f0.min_value(&|_| true), 0.0f64.min(bu), 1e-12));
        }
    }

    #[test]
    fn binary_reduction_matches_direct_evaluation() {
        let t = TriangleTerm::new(2.0, -0.5, 2.5, (0.0, 2.0)).unwrap();
        for k in 0..2 {
            let f = reduce_binary(&t, k, 2).unwrap();
            assert!(f.is_submodular());
            for mask in 0..4u32 {
                let x = |p: usize| mask >> p & 1 == 1;
                let c = (0..2).filter(|&p| (x(p) as usize) == k).count() as f64;
                assert!(close(f.min_value(&x), t.value(c), 1e-12), "k={k} mask={mask}");
            }
        }
    }

    #[test]
    fn expansion_reduction_identity_and_full_moves() {
        let s = Labeling::new(vec![0, 1, 1, OUTLIER, 2], 3).unwrap();
        let t = TriangleTerm::new(1.5, -2.0, 3.5, (0.0, 5.0)).unwrap();
        for alpha in [0, 1, 2, OUTLIER] {
            for k in [0, 1, 2, OUTLIER] {
                let f = reduce_expansion(&t, k, alpha, &s).unwrap();
                assert!(f.is_submodular());
                let ck = s.labels().iter().filter(|&&l| l == k).count() as f64;
                assert!(close(f.min_value(&|_| false), t.value(ck), 1e-12));
                let full = if k == alpha { 5.0 } else { 0.0 };
                assert!(close(f.min_value(&|_| true), t.value(full), 1e-12));
            }
        }
    }

    #[test]
    fn label_cost_triangle() {
        let t = TriangleTerm::label_cost(7.0, 10);
        assert_eq!(t.value(0.0), 0.0);
        assert_eq!(t.value(1.0), 7.0);
        assert_eq!(t.value(9.0), 7.0);
    }
}
