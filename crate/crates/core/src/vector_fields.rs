//! Vector-field families `X = (X_1, …, X_m)` on `R^n` and convergent
//! sequences `X^j → X`.
//!
//! Coefficients are polynomial tables, which keeps evaluation exact,
//! Jacobians exact and commutators computable both algebraically and by
//! central finite differences (the two routes cross-check each other in
//! the tests).

use crate::error::{CoreError, Result};
use crate::linalg;
use crate::poly::Polynomial;
use crate::util::{lattice_points, BoxRegion};
use serde::{Deserialize, Serialize};

/// Default finite-difference bracket step at `x`: `1e-4 * (1 + |x|)`.
pub fn default_fd_step(x: &[f64]) -> f64 {
    1e-4 * (1.0 + linalg::norm(x))
}

/// Default lattice density (points per axis) for box suprema.
pub const DEFAULT_LATTICE: usize = 33;

/// An m-tuple of smooth vector fields with polynomial coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorFieldFamily {
    pub name: String,
    /// Ambient dimension.
    pub n: usize,
    /// Number of fields, `2 ≤ m ≤ n`.
    pub m: usize,
    /// Declared step bound: commutators up to this length span `R^n`.
    pub step_bound: usize,
    /// `rows[i][k]` is the k-th Euclidean component of `X_i`.
    pub rows: Vec<Vec<Polynomial>>,
}

impl VectorFieldFamily {
    pub fn new(
        name: impl Into<String>,
        n: usize,
        m: usize,
        step_bound: usize,
        rows: Vec<Vec<Polynomial>>,
    ) -> Result<Self> {
        if m < 2 || m > n {
            return Err(CoreError::InvalidFamily(format!(
                "need 2 <= m <= n, got m = {m}, n = {n}"
            )));
        }
        if step_bound < 1 {
            return Err(CoreError::InvalidFamily("step bound must be >= 1".into()));
        }
        if rows.len() != m || rows.iter().any(|r| r.len() != n) {
            return Err(CoreError::InvalidFamily(
                "coefficient table must be m rows of n polynomials".into(),
            ));
        }
        Ok(VectorFieldFamily {
            name: name.into(),
            n,
            m,
            step_bound,
            rows,
        })
    }

    /// Coordinate fields `X_i = ∂_i` on `R^n` (m = n).
    pub fn euclidean(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|k| Polynomial::constant(n, if i == k { 1.0 } else { 0.0 }))
                    .collect()
            })
            .collect();
        Self::new(format!("euclidean{n}"), n, n, 1, rows).expect("valid builtin")
    }

    /// Heisenberg frame on `R^3`: `X_1 = ∂x − (y/2)∂t`, `X_2 = ∂y + (x/2)∂t`.
    pub fn heisenberg() -> Self {
        let rows = vec![
            vec![
                Polynomial::constant(3, 1.0),
                Polynomial::zero(3),
                Polynomial::linear(3, 1, -0.5),
            ],
            vec![
                Polynomial::zero(3),
                Polynomial::constant(3, 1.0),
                Polynomial::linear(3, 0, 0.5),
            ],
        ];
        Self::new("heisenberg", 3, 2, 2, rows).expect("valid builtin")
    }

    /// Step-2 model on `R^n` (n ≥ 3): `X_1 = ∂_1`, `X_2 = ∂_2 + x_1 ∂_n`,
    /// `X_i = ∂_i` for the remaining i < n; the missing `∂_n` arises from
    /// `[X_1, X_2]`.
    pub fn step2(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(CoreError::InvalidFamily(
                "step2 family needs n >= 3".into(),
            ));
        }
        let m = n - 1;
        let mut rows = Vec::with_capacity(m);
        for i in 0..m {
            let mut row: Vec<Polynomial> = (0..n)
                .map(|k| Polynomial::constant(n, if i == k { 1.0 } else { 0.0 }))
                .collect();
            if i == 1 {
                row[n - 1] = Polynomial::linear(n, 0, 1.0);
            }
            rows.push(row);
        }
        Self::new(format!("step2_{n}"), n, m, 2, rows)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(CoreError::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinitePoint);
        }
        Ok(())
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.m {
            return Err(CoreError::FieldIndexOutOfRange { index: i, m: self.m });
        }
        Ok(())
    }

    /// Evaluate field `X_i` (zero-based index) at `x`.
    pub fn eval_field(&self, i: usize, x: &[f64]) -> Result<Vec<f64>> {
        self.check_index(i)?;
        self.check_point(x)?;
        Ok(self.rows[i].iter().map(|p| p.eval(x)).collect())
    }

    /// All field values at `x` as m rows of length n.
    pub fn field_matrix(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_point(x)?;
        Ok(self
            .rows
            .iter()
            .map(|row| row.iter().map(|p| p.eval(x)).collect())
            .collect())
    }

    /// Exact Jacobian of `X_i` at `x`, row-major n×n with
    /// `J[r*n + c] = ∂_c a_{i,r}(x)`.
    pub fn jacobian(&self, i: usize, x: &[f64]) -> Result<Vec<f64>> {
        self.check_index(i)?;
        self.check_point(x)?;
        let n = self.n;
        let mut j = vec![0.0; n * n];
        for (r, p) in self.rows[i].iter().enumerate() {
            for c in 0..n {
                j[r * n + c] = p.derivative(c).eval(x);
            }
        }
        Ok(j)
    }

    /// Rigorous `sup |X_i|` over the centered Euclidean ball (or cube) of
    /// radius `r`, from coefficient-table bounds.
    pub fn field_sup_bound(&self, i: usize, r: f64) -> Result<f64> {
        self.check_index(i)?;
        let s: f64 = self.rows[i]
            .iter()
            .map(|p| {
                let b = p.sup_bound_centered(r);
                b * b
            })
            .sum();
        Ok(s.sqrt())
    }

    /// Certified subunit speed bound on the centered ball of radius `r`:
    /// with `|h|₂ ≤ 1`, `|γ'| ≤ √m · max_i sup |X_i|`.
    pub fn speed_bound(&self, r: f64) -> f64 {
        let mut mx = 0.0_f64;
        for i in 0..self.m {
            mx = mx.max(self.field_sup_bound(i, r).expect("index in range"));
        }
        (self.m as f64).sqrt() * mx
    }

    /// Verify pointwise linear independence (rank m of the coefficient
    /// matrix) at each probe point.
    pub fn check_probe_independence(&self, probes: &[Vec<f64>]) -> Result<()> {
        for p in probes {
            let rows = self.field_matrix(p)?;
            let r = linalg::rank(&rows, 1e-9);
            if r < self.m {
                return Err(CoreError::DegenerateFamily {
                    point: p.clone(),
                    rank: r,
                    m: self.m,
                });
            }
        }
        Ok(())
    }

    /// Canonical JSON followed by SHA-256, used to key graph caches.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_vec(self).expect("family serializes");
        let mut hasher = Sha256::new();
        hasher.update(&json);
        let out = hasher.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Bracket word over field indices: either a single field or a bracket of
/// two sub-words. The flat list `(w1, w2, …)` reads as the right-nested
/// `[X_{w1}, [X_{w2}, …]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BracketWord {
    Field(usize),
    Bracket(Box<BracketWord>, Box<BracketWord>),
}

impl BracketWord {
    pub fn pair(a: usize, b: usize) -> Self {
        BracketWord::Bracket(
            Box::new(BracketWord::Field(a)),
            Box::new(BracketWord::Field(b)),
        )
    }

    /// `[X_{ids[0]}, [X_{ids[1]}, …]]`.
    pub fn right_nested(ids: &[usize]) -> Result<Self> {
        match ids {
            [] => Err(CoreError::BracketWordTooShort),
            [i] => Ok(BracketWord::Field(*i)),
            [i, rest @ ..] => Ok(BracketWord::Bracket(
                Box::new(BracketWord::Field(*i)),
                Box::new(Self::right_nested(rest)?),
            )),
        }
    }

    /// Number of field factors.
    pub fn len(&self) -> usize {
        match self {
            BracketWord::Field(_) => 1,
            BracketWord::Bracket(a, b) => a.len() + b.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn max_index(&self) -> usize {
        match self {
            BracketWord::Field(i) => *i,
            BracketWord::Bracket(a, b) => a.max_index().max(b.max_index()),
        }
    }
}

/// Exact polynomial vector field of a bracket word:
/// `[V, W]_r = Σ_c (V_c ∂_c W_r − W_c ∂_c V_r)`.
fn word_field(family: &VectorFieldFamily, word: &BracketWord) -> Vec<Polynomial> {
    match word {
        BracketWord::Field(i) => family.rows[*i].clone(),
        BracketWord::Bracket(a, b) => {
            let va = word_field(family, a);
            let vb = word_field(family, b);
            poly_bracket(&va, &vb, family.n)
        }
    }
}

fn poly_bracket(v: &[Polynomial], w: &[Polynomial], n: usize) -> Vec<Polynomial> {
    let mut out = Vec::with_capacity(n);
    for r in 0..n {
        let mut comp = Polynomial::zero(n);
        for c in 0..n {
            comp = comp.add_scaled(1.0, &v[c].mul(&w[r].derivative(c)));
            comp = comp.add_scaled(-1.0, &w[c].mul(&v[r].derivative(c)));
        }
        out.push(comp);
    }
    out
}

/// How bracket Jacobians are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum JacobianMode {
    /// Exact differentiation of the coefficient tables.
    Exact,
    /// Central finite differences with the given step; `None` selects
    /// the default step `1e-4 (1 + |x|)`.
    FiniteDifference { step: Option<f64> },
}

/// Iterated Lie bracket of `word` evaluated at `x`.
///
/// Words of length < 2 are rejected: a single field is not a bracket.
pub fn commutator(
    family: &VectorFieldFamily,
    word: &BracketWord,
    x: &[f64],
    mode: JacobianMode,
) -> Result<Vec<f64>> {
    if word.len() < 2 {
        return Err(CoreError::BracketWordTooShort);
    }
    if word.max_index() >= family.m {
        return Err(CoreError::FieldIndexOutOfRange {
            index: word.max_index(),
            m: family.m,
        });
    }
    family.check_point(x)?;
    match mode {
        JacobianMode::Exact => {
            let field = word_field(family, word);
            Ok(field.iter().map(|p| p.eval(x)).collect())
        }
        JacobianMode::FiniteDifference { step } => {
            let rho = step.unwrap_or_else(|| default_fd_step(x));
            if !(rho > 0.0) || x.iter().any(|&v| v + rho == v) {
                return Err(CoreError::FiniteDifferenceUnderflow(rho));
            }
            Ok(eval_word_fd(family, word, x, rho))
        }
    }
}

fn eval_word_fd(family: &VectorFieldFamily, word: &BracketWord, x: &[f64], rho: f64) -> Vec<f64> {
    match word {
        BracketWord::Field(i) => family.rows[*i].iter().map(|p| p.eval(x)).collect(),
        BracketWord::Bracket(a, b) => {
            let n = family.n;
            let va = eval_word_fd(family, a, x, rho);
            let vb = eval_word_fd(family, b, x, rho);
            // Central-difference Jacobians of the two sub-fields at x.
            let mut ja = vec![0.0; n * n];
            let mut jb = vec![0.0; n * n];
            let mut xp = x.to_vec();
            for c in 0..n {
                let x0 = x[c];
                xp[c] = x0 + rho;
                let ap = eval_word_fd(family, a, &xp, rho);
                let bp = eval_word_fd(family, b, &xp, rho);
                xp[c] = x0 - rho;
                let am = eval_word_fd(family, a, &xp, rho);
                let bm = eval_word_fd(family, b, &xp, rho);
                xp[c] = x0;
                for r in 0..n {
                    ja[r * n + c] = (ap[r] - am[r]) / (2.0 * rho);
                    jb[r * n + c] = (bp[r] - bm[r]) / (2.0 * rho);
                }
            }
            let mut out = vec![0.0; n];
            for r in 0..n {
                let mut s = 0.0;
                for c in 0..n {
                    s += jb[r * n + c] * va[c] - ja[r * n + c] * vb[c];
                }
                out[r] = s;
            }
            out
        }
    }
}

/// Rank at `x` of the span of the fields together with all right-nested
/// bracket words of length ≤ `s`. The family satisfies the Chow-Hörmander
/// condition at `x` up to step `s` iff this equals `n`.
pub fn hormander_rank(family: &VectorFieldFamily, x: &[f64], s: usize) -> Result<usize> {
    if s < 1 {
        return Err(CoreError::InvalidCommutatorOrder);
    }
    family.check_point(x)?;
    let mut vectors: Vec<Vec<f64>> = Vec::new();
    // Right-nested words span the same space as all bracket words of the
    // same length, by the Jacobi identity.
    let mut ids = vec![0usize; 1];
    for len in 1..=s {
        ids.resize(len, 0);
        ids.iter_mut().for_each(|v| *v = 0);
        loop {
            let word = BracketWord::right_nested(&ids)?;
            let field = word_field(family, &word);
            vectors.push(field.iter().map(|p| p.eval(x)).collect());
            // next multi-index over {0..m}^len
            let mut k = len;
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                ids[k] += 1;
                if ids[k] < family.m {
                    break;
                }
                ids[k] = 0;
            }
            if ids.iter().all(|&v| v == 0) {
                break;
            }
        }
    }
    Ok(linalg::rank(&vectors, 1e-9))
}

/// A sequence `X^j = X + (c/j) V` converging to `X` in `C^∞_loc`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilySequence {
    pub name: String,
    pub limit: VectorFieldFamily,
    /// Perturbation direction `V` as m rows of n polynomials.
    pub direction: Vec<Vec<Polynomial>>,
    /// Scale `c` in `ε_j = c / j`.
    pub coefficient: f64,
}

impl FamilySequence {
    pub fn new(
        name: impl Into<String>,
        limit: VectorFieldFamily,
        direction: Vec<Vec<Polynomial>>,
        coefficient: f64,
    ) -> Result<Self> {
        if direction.len() != limit.m || direction.iter().any(|r| r.len() != limit.n) {
            return Err(CoreError::InvalidFamily(
                "perturbation direction must be m rows of n polynomials".into(),
            ));
        }
        Ok(FamilySequence {
            name: name.into(),
            limit,
            direction,
            coefficient,
        })
    }

    /// The constant sequence `X^j = X`.
    pub fn identical(limit: VectorFieldFamily) -> Self {
        let direction = (0..limit.m)
            .map(|_| (0..limit.n).map(|_| Polynomial::zero(limit.n)).collect())
            .collect();
        FamilySequence {
            name: format!("{}_const", limit.name),
            limit,
            direction,
            coefficient: 0.0,
        }
    }

    /// Scaling perturbation `X^j = (1 + c/j) X` (direction `V = X`).
    pub fn scaled(limit: VectorFieldFamily, c: f64) -> Self {
        let direction = limit.rows.clone();
        FamilySequence {
            name: format!("{}_scaled", limit.name),
            limit,
            direction,
            coefficient: c,
        }
    }

    /// Constant-vector perturbation: `V_i` is the constant field `shift[i]`.
    pub fn constant_shift(limit: VectorFieldFamily, shifts: &[Vec<f64>], c: f64) -> Result<Self> {
        if shifts.len() != limit.m || shifts.iter().any(|s| s.len() != limit.n) {
            return Err(CoreError::InvalidFamily(
                "shift table must be m vectors of length n".into(),
            ));
        }
        let n = limit.n;
        let direction = shifts
            .iter()
            .map(|s| s.iter().map(|&v| Polynomial::constant(n, v)).collect())
            .collect();
        let name = format!("{}_shift", limit.name);
        Self::new(name, limit, direction, c)
    }

    /// Member `X^j`, `j ≥ 1`.
    pub fn member(&self, j: usize) -> Result<VectorFieldFamily> {
        if j == 0 {
            return Err(CoreError::SequenceIndexOutOfRange(j));
        }
        let eps = self.coefficient / j as f64;
        let rows = self
            .limit
            .rows
            .iter()
            .zip(&self.direction)
            .map(|(xr, vr)| {
                xr.iter()
                    .zip(vr)
                    .map(|(p, v)| p.add_scaled(eps, v))
                    .collect()
            })
            .collect();
        VectorFieldFamily::new(
            format!("{}_j{}", self.name, j),
            self.limit.n,
            self.limit.m,
            self.limit.step_bound,
            rows,
        )
    }
}

/// Lattice maximum over `box` of per-field deviations between `X^j` and the
/// limit: Euclidean norm of the value difference for `derivative_order` 0,
/// Frobenius norm of the Jacobian difference for order 1.
pub fn sup_deviation(
    seq: &FamilySequence,
    j: usize,
    region: &BoxRegion,
    derivative_order: u8,
    lattice: usize,
) -> Result<Vec<f64>> {
    if region.dim() != seq.limit.n {
        return Err(CoreError::DimensionMismatch {
            expected: seq.limit.n,
            got: region.dim(),
        });
    }
    let member = seq.member(j)?;
    let pts = lattice_points(region, lattice);
    let mut out = Vec::with_capacity(seq.limit.m);
    for i in 0..seq.limit.m {
        let mut mx = 0.0_f64;
        for p in &pts {
            let d = match derivative_order {
                0 => {
                    let a = member.eval_field(i, p)?;
                    let b = seq.limit.eval_field(i, p)?;
                    let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
                    linalg::norm(&diff)
                }
                1 => {
                    let a = member.jacobian(i, p)?;
                    let b = seq.limit.jacobian(i, p)?;
                    let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
                    linalg::frobenius_norm(&diff)
                }
                other => {
                    return Err(CoreError::InvalidFamily(format!(
                        "derivative order must be 0 or 1, got {other}"
                    )))
                }
            };
            mx = mx.max(d);
        }
        out.push(mx);
    }
    Ok(out)
}

/// Anisotropic blow-up pullback: `X^λ_i(x) = (1/λ) D(δ_λ)^{-1} X_i(δ_λ x)`
/// with `δ_λ x = (λ^{w_1} x_1, …, λ^{w_n} x_n)`. For a family with
/// homogeneous weights this converges, as λ → 0, to the nilpotent model.
pub fn blow_up(family: &VectorFieldFamily, weights: &[u32], lambda: f64) -> Result<VectorFieldFamily> {
    if weights.len() != family.n {
        return Err(CoreError::DimensionMismatch {
            expected: family.n,
            got: weights.len(),
        });
    }
    if !(lambda > 0.0) {
        return Err(CoreError::InvalidFamily("blow-up scale must be > 0".into()));
    }
    let scales: Vec<f64> = weights.iter().map(|&w| lambda.powi(w as i32)).collect();
    // Coefficient k of the blown-up field: λ^{1-w_k} a_{i,k}(δ_λ x).
    let rows = family
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(k, p)| p.dilate(&scales).scale(lambda / scales[k]))
                .collect()
        })
        .collect();
    VectorFieldFamily::new(
        format!("{}_blowup", family.name),
        family.n,
        family.m,
        family.step_bound,
        rows,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_euclidean_coordinate_field() {
        let fam = VectorFieldFamily::euclidean(2);
        let v = fam.eval_field(0, &[3.0, 7.0]).unwrap();
        assert_eq!(v, vec![1.0, 0.0]);
    }

    #[test]
    fn eval_heisenberg_fields() {
        let fam = VectorFieldFamily::heisenberg();
        let v1 = fam.eval_field(0, &[0.0, 2.0, 0.0]).unwrap();
        assert_eq!(v1, vec![1.0, 0.0, -1.0]);
        let v2 = fam.eval_field(1, &[4.0, 0.0, 0.0]).unwrap();
        assert_eq!(v2, vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn eval_rejects_bad_input() {
        let fam = VectorFieldFamily::heisenberg();
        assert!(matches!(
            fam.eval_field(2, &[0.0; 3]),
            Err(CoreError::FieldIndexOutOfRange { .. })
        ));
        assert!(matches!(
            fam.eval_field(0, &[f64::NAN, 0.0, 0.0]),
            Err(CoreError::NonFinitePoint)
        ));
    }

    #[test]
    fn commutators_of_coordinate_fields_vanish() {
        let fam = VectorFieldFamily::euclidean(2);
        let w = BracketWord::pair(0, 1);
        let v = commutator(&fam, &w, &[0.3, -0.7], JacobianMode::Exact).unwrap();
        assert_eq!(v, vec![0.0, 0.0]);
    }

    #[test]
    fn heisenberg_bracket_is_vertical() {
        let fam = VectorFieldFamily::heisenberg();
        let w = BracketWord::pair(0, 1);
        for x in [[0.0, 0.0, 0.0], [1.0, -2.0, 0.5]] {
            let v = commutator(&fam, &w, &x, JacobianMode::Exact).unwrap();
            assert!((v[0]).abs() < 1e-14 && (v[1]).abs() < 1e-14);
            assert!((v[2] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn heisenberg_triple_bracket_vanishes() {
        let fam = VectorFieldFamily::heisenberg();
        // [X_1, [X_1, X_2]]
        let w = BracketWord::Bracket(
            Box::new(BracketWord::Field(0)),
            Box::new(BracketWord::pair(0, 1)),
        );
        let v = commutator(&fam, &w, &[0.4, 0.9, -0.1], JacobianMode::Exact).unwrap();
        assert!(v.iter().all(|c| c.abs() < 1e-13));
    }

    #[test]
    fn fd_commutator_tracks_exact() {
        let fam = VectorFieldFamily::heisenberg();
        let w = BracketWord::pair(0, 1);
        let x = [0.2, 0.3, 0.1];
        let rho = default_fd_step(&x);
        let fd = commutator(&fam, &w, &x, JacobianMode::FiniteDifference { step: None }).unwrap();
        let exact = commutator(&fam, &w, &x, JacobianMode::Exact).unwrap();
        for (a, b) in fd.iter().zip(&exact) {
            assert!((a - b).abs() <= 10.0 * rho * rho + 1e-12);
        }
    }

    #[test]
    fn word_shorter_than_two_rejected() {
        let fam = VectorFieldFamily::euclidean(2);
        let w = BracketWord::Field(0);
        assert!(matches!(
            commutator(&fam, &w, &[0.0, 0.0], JacobianMode::Exact),
            Err(CoreError::BracketWordTooShort)
        ));
    }

    #[test]
    fn hormander_ranks() {
        let eu = VectorFieldFamily::euclidean(3);
        assert_eq!(hormander_rank(&eu, &[0.1, 0.2, 0.3], 1).unwrap(), 3);
        let h = VectorFieldFamily::heisenberg();
        assert_eq!(hormander_rank(&h, &[0.5, -0.5, 2.0], 1).unwrap(), 2);
        assert_eq!(hormander_rank(&h, &[0.5, -0.5, 2.0], 2).unwrap(), 3);
        assert!(hormander_rank(&h, &[0.0; 3], 0).is_err());
    }

    #[test]
    fn rank_monotone_and_stabilizes_on_builtins() {
        let fams = vec![
            VectorFieldFamily::euclidean(2),
            VectorFieldFamily::heisenberg(),
            VectorFieldFamily::step2(3).unwrap(),
        ];
        for fam in fams {
            let x = vec![0.37; fam.n];
            let mut prev = 0;
            for s in 1..=3 {
                let r = hormander_rank(&fam, &x, s).unwrap();
                assert!(r >= prev);
                prev = r;
                if s >= fam.step_bound {
                    assert_eq!(r, fam.n);
                }
            }
        }
    }

    #[test]
    fn sup_deviation_constant_shift() {
        let seq = FamilySequence::constant_shift(
            VectorFieldFamily::euclidean(2),
            &[vec![1.0, 0.0], vec![1.0, 0.0]],
            1.0,
        )
        .unwrap();
        let b = BoxRegion::centered_cube(2, 1.0);
        for j in [1usize, 2, 5] {
            let dev = sup_deviation(&seq, j, &b, 0, 9).unwrap();
            for d in dev {
                assert!((d - 1.0 / j as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sup_deviation_identical_is_zero() {
        let seq = FamilySequence::identical(VectorFieldFamily::heisenberg());
        let b = BoxRegion::centered_cube(3, 2.0);
        let dev = sup_deviation(&seq, 3, &b, 0, 5).unwrap();
        assert!(dev.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn sup_deviation_linear_direction_maximizes_on_box() {
        // X^j_1 = X_1 + (1/j) x_1 e_2 on [0,2]^3: sup = 2/j.
        let h = VectorFieldFamily::heisenberg();
        let mut direction: Vec<Vec<Polynomial>> = (0..2)
            .map(|_| (0..3).map(|_| Polynomial::zero(3)).collect())
            .collect();
        direction[0][1] = Polynomial::linear(3, 0, 1.0);
        let seq = FamilySequence::new("h_lin", h, direction, 1.0).unwrap();
        let b = BoxRegion::new(vec![0.0; 3], vec![2.0; 3]).unwrap();
        for j in [1usize, 4] {
            let dev = sup_deviation(&seq, j, &b, 0, 9).unwrap();
            assert!((dev[0] - 2.0 / j as f64).abs() < 1e-12);
            assert_eq!(dev[1], 0.0);
        }
    }

    #[test]
    fn deviation_decreases_in_j() {
        let seq = FamilySequence::scaled(VectorFieldFamily::heisenberg(), 0.25);
        let b = BoxRegion::centered_cube(3, 1.0);
        let mut last = f64::INFINITY;
        for j in 1..=8 {
            let dev = sup_deviation(&seq, j, &b, 0, 7).unwrap();
            let total: f64 = dev.iter().sum();
            assert!(total <= last + 1e-12);
            last = total;
        }
        assert!(last > 0.0);
    }

    #[test]
    fn probe_independence_accepts_builtins_rejects_grushin() {
        let h = VectorFieldFamily::heisenberg();
        let probes = lattice_points(&BoxRegion::centered_cube(3, 3.0), 5);
        h.check_probe_independence(&probes).unwrap();

        // Grushin-type plane: X_1 = ∂x, X_2 = x ∂y degenerates at x = 0.
        let grushin = VectorFieldFamily::new(
            "grushin",
            2,
            2,
            2,
            vec![
                vec![Polynomial::constant(2, 1.0), Polynomial::zero(2)],
                vec![Polynomial::zero(2), Polynomial::linear(2, 0, 1.0)],
            ],
        )
        .unwrap();
        let probes2 = lattice_points(&BoxRegion::centered_cube(2, 1.0), 5);
        assert!(matches!(
            grushin.check_probe_independence(&probes2),
            Err(CoreError::DegenerateFamily { .. })
        ));
    }

    #[test]
    fn family_hash_distinguishes_members() {
        let seq = FamilySequence::scaled(VectorFieldFamily::heisenberg(), 0.25);
        let h1 = seq.member(1).unwrap().content_hash();
        let h2 = seq.member(2).unwrap().content_hash();
        assert_ne!(h1, h2);
        assert_eq!(h1, seq.member(1).unwrap().content_hash());
    }
}
