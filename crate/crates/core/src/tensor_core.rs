//! Dense real tensors on `(C^N)^{⊗k}`.
//!
//! Multi-indices are laid out row-major with the leftmost leg slowest, so the
//! flat position of `e_{i(1)} ⊗ … ⊗ e_{i(k)}` is `Σ_s (i(s)-1) N^{k-s}`. Every
//! construction in this crate is real in the standard basis, so `f64` suffices.
//!
//! Public constructors take 1-based basis labels (`e_1, …, e_N`); everything
//! internal is 0-based.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest ambient dimension `N^legs` allowed per tensor factor by default.
pub const DEFAULT_MAX_DIM: usize = 4096;

/// `N^legs`, or `CapExceeded` if it overflows or exceeds `cap`.
pub fn checked_dim(n: usize, legs: usize, cap: usize) -> Result<usize> {
    let dim = u32::try_from(legs)
        .ok()
        .and_then(|l| n.checked_pow(l))
        .ok_or(Error::CapExceeded { dim: usize::MAX, cap })?;
    if dim > cap {
        return Err(Error::CapExceeded { dim, cap });
    }
    Ok(dim)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TensorShape {
    pub n: usize,
    pub legs: usize,
}

impl TensorShape {
    pub fn new(n: usize, legs: usize, cap: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("local dimension must be positive".into()));
        }
        checked_dim(n, legs, cap)?;
        Ok(Self { n, legs })
    }

    pub fn dim(&self) -> usize {
        self.n.pow(self.legs as u32)
    }

    /// Flat position of a 1-based multi-index.
    pub fn position(&self, multi_index: &[usize]) -> Result<usize> {
        if multi_index.len() != self.legs {
            return Err(Error::ShapeMismatch(format!(
                "multi-index of length {} for {} legs",
                multi_index.len(),
                self.legs
            )));
        }
        multi_index.iter().try_fold(0usize, |acc, &i| {
            if i == 0 || i > self.n {
                Err(Error::IndexOutOfRange { index: i, n: self.n })
            } else {
                Ok(acc * self.n + (i - 1))
            }
        })
    }

    /// 1-based multi-index of a flat position.
    pub fn multi_index(&self, mut position: usize) -> Vec<usize> {
        let mut out = vec![0; self.legs];
        for slot in out.iter_mut().rev() {
            *slot = position % self.n + 1;
            position /= self.n;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorVector {
    shape: TensorShape,
    data: DVector<f64>,
}

impl TensorVector {
    pub fn new(shape: TensorShape, data: DVector<f64>) -> Result<Self> {
        if data.len() != shape.dim() {
            return Err(Error::ShapeMismatch(format!(
                "vector of length {} for dimension {}",
                data.len(),
                shape.dim()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: TensorShape) -> Self {
        Self { shape, data: DVector::zeros(shape.dim()) }
    }

    pub fn shape(&self) -> TensorShape {
        self.shape
    }

    pub fn data(&self) -> &DVector<f64> {
        &self.data
    }

    pub fn into_data(self) -> DVector<f64> {
        self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.norm()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { shape: self.shape, data: &self.data * factor }
    }

    pub fn dot(&self, other: &Self) -> Result<f64> {
        same_shape(self.shape, other.shape)?;
        Ok(self.data.dot(&other.data))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorOperator {
    in_shape: TensorShape,
    out_shape: TensorShape,
    data: DMatrix<f64>,
}

impl TensorOperator {
    pub fn new(in_shape: TensorShape, out_shape: TensorShape, data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() != out_shape.dim() || data.ncols() != in_shape.dim() {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} matrix for a map of dimension {} -> {}",
                data.nrows(),
                data.ncols(),
                in_shape.dim(),
                out_shape.dim()
            )));
        }
        Ok(Self { in_shape, out_shape, data })
    }

    pub fn identity(shape: TensorShape) -> Self {
        Self { in_shape: shape, out_shape: shape, data: DMatrix::identity(shape.dim(), shape.dim()) }
    }

    pub fn in_shape(&self) -> TensorShape {
        self.in_shape
    }

    pub fn out_shape(&self) -> TensorShape {
        self.out_shape
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    pub fn is_square(&self) -> bool {
        self.in_shape == self.out_shape
    }

    pub fn trace(&self) -> f64 {
        self.data.trace()
    }

    pub fn apply(&self, v: &TensorVector) -> Result<TensorVector> {
        same_shape(self.in_shape, v.shape)?;
        Ok(TensorVector { shape: self.out_shape, data: &self.data * &v.data })
    }
}

fn same_shape(a: TensorShape, b: TensorShape) -> Result<()> {
    if a != b {
        return Err(Error::ShapeMismatch(format!("{a:?} vs {b:?}")));
    }
    Ok(())
}

/// `e_{i(1)} ⊗ … ⊗ e_{i(k)}` for a 1-based multi-index.
pub fn basis_vector(shape: TensorShape, multi_index: &[usize]) -> Result<TensorVector> {
    let pos = shape.position(multi_index)?;
    let mut v = TensorVector::zeros(shape);
    v.data[pos] = 1.0;
    Ok(v)
}

/// Flat position of `e_i ⊗ e_ǐ` inside `(C^N)^{⊗2r}` for a 0-based position
/// `i` of `(C^N)^{⊗r}`, where `ǐ(s) = i(r-s+1)`.
fn cup_position(n: usize, r: usize, i: usize) -> usize {
    let mut rev = 0;
    let mut rest = i;
    for _ in 0..r {
        rev = rev * n + rest % n;
        rest /= n;
    }
    i * n.pow(r as u32) + rev
}

/// The invariant vector `T_r = Σ_i e_i ⊗ e_ǐ` on `2r` legs; `T_0` is the
/// scalar 1.
pub fn cup_vector(n: usize, r: usize, cap: usize) -> Result<TensorVector> {
    let shape = TensorShape::new(n, 2 * r, cap)?;
    let mut v = TensorVector::zeros(shape);
    for i in 0..n.pow(r as u32) {
        v.data[cup_position(n, r, i)] = 1.0;
    }
    Ok(v)
}

/// `η_k(i,j) = e_i ⊗ e_j ⊗ e_i ⊗ …` with `k` alternating factors.
pub fn alternating_vector(n: usize, legs: usize, i: usize, j: usize, cap: usize) -> Result<TensorVector> {
    if i == j {
        return Err(Error::RepeatedIndex(i));
    }
    let shape = TensorShape::new(n, legs, cap)?;
    let idx: Vec<usize> = (0..legs).map(|s| if s % 2 == 0 { i } else { j }).collect();
    basis_vector(shape, &idx)
}

/// Kronecker product with leg concatenation.
pub trait Kron: Sized {
    fn kron(&self, other: &Self, cap: usize) -> Result<Self>;
}

impl Kron for TensorVector {
    fn kron(&self, other: &Self, cap: usize) -> Result<Self> {
        let shape = joined(self.shape, other.shape, cap)?;
        let data = DVector::from_iterator(
            shape.dim(),
            self.data.iter().flat_map(|&a| other.data.iter().map(move |&b| a * b)),
        );
        Ok(Self { shape, data })
    }
}

impl Kron for TensorOperator {
    fn kron(&self, other: &Self, cap: usize) -> Result<Self> {
        let in_shape = joined(self.in_shape, other.in_shape, cap)?;
        let out_shape = joined(self.out_shape, other.out_shape, cap)?;
        Ok(Self { in_shape, out_shape, data: self.data.kronecker(&other.data) })
    }
}

fn joined(a: TensorShape, b: TensorShape, cap: usize) -> Result<TensorShape> {
    if a.n != b.n {
        return Err(Error::ShapeMismatch(format!("local dimensions {} and {}", a.n, b.n)));
    }
    TensorShape::new(a.n, a.legs + b.legs, cap)
}

/// Which block of legs a partial trace removes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceSide {
    /// `Tr ⊗ ι`: trace the first `split` legs, keep the rest.
    First,
    /// `ι ⊗ Tr`: keep the first `split` legs, trace the rest.
    Last,
}

/// Partial trace of a square operator on `legs` legs cut after `split` legs.
pub fn partial_trace(op: &TensorOperator, split: usize, side: TraceSide) -> Result<TensorOperator> {
    if !op.is_square() {
        return Err(Error::ShapeMismatch("partial trace of a non-square operator".into()));
    }
    let TensorShape { n, legs } = op.in_shape;
    if split > legs {
        return Err(Error::InvalidSplit { split, legs });
    }
    let left = n.pow(split as u32);
    let right = n.pow((legs - split) as u32);
    let m = &op.data;
    let (kept_legs, out) = match side {
        TraceSide::First => {
            let out = DMatrix::from_fn(right, right, |b, b2| {
                (0..left).map(|a| m[(a * right + b, a * right + b2)]).sum()
            });
            (legs - split, out)
        }
        TraceSide::Last => {
            let out = DMatrix::from_fn(left, left, |a, a2| {
                (0..right).map(|b| m[(a * right + b, a2 * right + b)]).sum()
            });
            (split, out)
        }
    };
    let shape = TensorShape { n, legs: kept_legs };
    TensorOperator::new(shape, shape, out)
}

/// The `N^split × N^{legs-split}` matrix of a vector across the cut after
/// `split` legs.
pub fn matricize(v: &TensorVector, split: usize) -> Result<DMatrix<f64>> {
    let TensorShape { n, legs } = v.shape;
    if split > legs {
        return Err(Error::InvalidSplit { split, legs });
    }
    Ok(matricize_slice(v.data.as_slice(), n.pow(split as u32), n.pow((legs - split) as u32)))
}

pub(crate) fn matricize_slice(data: &[f64], rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, data)
}

/// `(ι_{N^before} ⊗ T_r ⊗ ι_{N^after})` applied to every column of `x`,
/// whose rows index `before + after` legs.
pub fn insert_cup(n: usize, before: usize, r: usize, after: usize, x: &DMatrix<f64>) -> DMatrix<f64> {
    let left = n.pow(before as u32);
    let right = n.pow(after as u32);
    let mid = n.pow(r as u32);
    let cup_dim = mid * mid;
    assert_eq!(x.nrows(), left * right, "insert_cup: row count does not match legs");
    let mut out = DMatrix::zeros(left * cup_dim * right, x.ncols());
    let cups: Vec<usize> = (0..mid).map(|i| cup_position(n, r, i)).collect();
    for c in 0..x.ncols() {
        for a in 0..left {
            for b in 0..right {
                let val = x[(a * right + b, c)];
                if val == 0.0 {
                    continue;
                }
                for &pos in &cups {
                    out[((a * cup_dim + pos) * right + b, c)] = val;
                }
            }
        }
    }
    out
}

/// `(ι_{N^before} ⊗ T_r^* ⊗ ι_{N^after})` applied to every column of `x`.
pub fn contract_cup(n: usize, before: usize, r: usize, after: usize, x: &DMatrix<f64>) -> DMatrix<f64> {
    let left = n.pow(before as u32);
    let right = n.pow(after as u32);
    let mid = n.pow(r as u32);
    let cup_dim = mid * mid;
    assert_eq!(x.nrows(), left * cup_dim * right, "contract_cup: row count does not match legs");
    let cups: Vec<usize> = (0..mid).map(|i| cup_position(n, r, i)).collect();
    DMatrix::from_fn(left * right, x.ncols(), |row, c| {
        let (a, b) = (row / right, row % right);
        cups.iter().map(|&pos| x[((a * cup_dim + pos) * right + b, c)]).sum()
    })
}

/// The cap operator `ι^{⊗(i-1)} ⊗ T_1 T_1^* ⊗ ι^{⊗(legs-i-1)}` (1-based `i`)
/// applied to every column of `x`.
pub fn apply_cap(n: usize, legs: usize, i: usize, x: &DMatrix<f64>) -> DMatrix<f64> {
    assert!(i >= 1 && i < legs, "cap position {i} invalid for {legs} legs");
    let contracted = contract_cup(n, i - 1, 1, legs - i - 1, x);
    insert_cup(n, i - 1, 1, legs - i - 1, &contracted)
}

/// `(A ⊗ B) x` for every column of `x`, where `A` acts on the first
/// `A.ncols()` rows-factor and `B` on the second, without forming `A ⊗ B`.
pub fn apply_bipartite(a: &DMatrix<f64>, b: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let (la, lb) = (a.ncols(), b.ncols());
    assert_eq!(x.nrows(), la * lb, "apply_bipartite: dimension mismatch");
    let (oa, ob) = (a.nrows(), b.nrows());
    let bt = b.transpose();
    let mut out = DMatrix::zeros(oa * ob, x.ncols());
    for c in 0..x.ncols() {
        let col = x.column(c);
        let m = matricize_slice(col.as_slice(), la, lb);
        let y = a * m * &bt;
        // y is oa × ob, store row-major into the output column
        let mut dst = out.column_mut(c);
        for p in 0..oa {
            for s in 0..ob {
                dst[p * ob + s] = y[(p, s)];
            }
        }
    }
    out
}

/// Groups the positions of `(C^N)^{⊗legs}` by the parity of every colour count.
///
/// The diagonal sign flips `e_c ↦ -e_c` commute with `T_1 T_1^*`, so every
/// Temperley–Lieb operator (in particular every Jones–Wenzl projection) is
/// block diagonal in these sectors.
pub fn parity_sectors(n: usize, legs: usize) -> Vec<Vec<usize>> {
    let shape = TensorShape { n, legs };
    let mut sectors: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for pos in 0..shape.dim() {
        let mut odd: Vec<usize> = Vec::with_capacity(legs);
        for c in shape.multi_index(pos) {
            match odd.iter().position(|&x| x == c) {
                Some(at) => {
                    odd.swap_remove(at);
                }
                None => odd.push(c),
            }
        }
        odd.sort_unstable();
        sectors.entry(odd).or_default().push(pos);
    }
    sectors.into_values().collect()
}

#[derive(Serialize, Deserialize)]
struct VectorJson {
    n: usize,
    legs: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct OperatorJson {
    n: usize,
    in_legs: usize,
    out_legs: usize,
    /// Row-major, `N^out_legs` rows of `N^in_legs` entries.
    data: Vec<f64>,
}

fn shape_from_json(n: usize, legs: usize) -> Result<TensorShape> {
    TensorShape::new(n, legs, usize::MAX)
}

impl Serialize for TensorVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        VectorJson { n: self.shape.n, legs: self.shape.legs, data: self.data.as_slice().to_vec() }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TensorVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = VectorJson::deserialize(d)?;
        let shape = shape_from_json(raw.n, raw.legs).map_err(serde::de::Error::custom)?;
        TensorVector::new(shape, DVector::from_vec(raw.data)).map_err(serde::de::Error::custom)
    }
}

impl Serialize for TensorOperator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let data = self.data.transpose().as_slice().to_vec();
        OperatorJson { n: self.in_shape.n, in_legs: self.in_shape.legs, out_legs: self.out_shape.legs, data }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TensorOperator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = OperatorJson::deserialize(d)?;
        let in_shape = shape_from_json(raw.n, raw.in_legs).map_err(serde::de::Error::custom)?;
        let out_shape = shape_from_json(raw.n, raw.out_legs).map_err(serde::de::Error::custom)?;
        let (rows, cols) = (out_shape.dim(), in_shape.dim());
        if raw.data.len() != rows * cols {
            return Err(serde::de::Error::custom(format!(
                "operator data of length {} for a {rows}x{cols} matrix",
                raw.data.len()
            )));
        }
        let data = DMatrix::from_row_slice(rows, cols, &raw.data);
        TensorOperator::new(in_shape, out_shape, data).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const CAP: usize = DEFAULT_MAX_DIM;

    fn shape(n: usize, legs: usize) -> TensorShape {
        TensorShape::new(n, legs, CAP).unwrap()
    }

    #[test]
    fn basis_vectors() {
        let e1 = basis_vector(shape(3, 1), &[1]).unwrap();
        assert_eq!(e1.data().as_slice(), &[1.0, 0.0, 0.0]);
        let e12 = basis_vector(shape(2, 2), &[1, 2]).unwrap();
        assert_eq!(e12.data().as_slice(), &[0.0, 1.0, 0.0, 0.0]);
        let scalar = basis_vector(shape(3, 0), &[]).unwrap();
        assert_eq!(scalar.data().as_slice(), &[1.0]);
        assert!(matches!(basis_vector(shape(3, 1), &[4]), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(basis_vector(shape(3, 1), &[0]), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(TensorShape::new(4, 7, CAP), Err(Error::CapExceeded { dim: 16384, .. })));
        assert!(TensorShape::new(4, 6, CAP).is_ok());
        assert!(matches!(cup_vector(4, 4, CAP), Err(Error::CapExceeded { .. })));
        assert!(matches!(TensorShape::new(3, 200, CAP), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn cup_vectors() {
        let t0 = cup_vector(3, 0, CAP).unwrap();
        assert_eq!(t0.data().as_slice(), &[1.0]);
        let t1 = cup_vector(3, 1, CAP).unwrap();
        assert_relative_eq!(t1.norm().powi(2), 3.0);
        for i in 1..=3 {
            assert_eq!(t1.data()[shape(3, 2).position(&[i, i]).unwrap()], 1.0);
        }
        let t2 = cup_vector(2, 2, CAP).unwrap();
        let nonzero: Vec<Vec<usize>> = (0..16)
            .filter(|&p| t2.data()[p] != 0.0)
            .map(|p| t2.shape().multi_index(p))
            .collect();
        assert_eq!(nonzero.len(), 4);
        for idx in nonzero {
            assert_eq!((idx[0], idx[1]), (idx[3], idx[2]));
        }
    }

    #[test]
    fn alternating_vectors() {
        let e1 = alternating_vector(3, 1, 1, 2, CAP).unwrap();
        assert_eq!(e1, basis_vector(shape(3, 1), &[1]).unwrap());
        let v = alternating_vector(3, 3, 1, 2, CAP).unwrap();
        assert_eq!(v, basis_vector(shape(3, 3), &[1, 2, 1]).unwrap());
        let w = alternating_vector(3, 2, 2, 3, CAP).unwrap();
        assert_eq!(w, basis_vector(shape(3, 2), &[2, 3]).unwrap());
        assert!(matches!(alternating_vector(3, 2, 2, 2, CAP), Err(Error::RepeatedIndex(2))));
    }

    #[test]
    fn kronecker_products() {
        let e1 = basis_vector(shape(3, 1), &[1]).unwrap();
        let e2 = basis_vector(shape(3, 1), &[2]).unwrap();
        assert_eq!(e1.kron(&e2, CAP).unwrap(), basis_vector(shape(3, 2), &[1, 2]).unwrap());
        let id2 = TensorOperator::identity(shape(3, 2));
        let id1 = TensorOperator::identity(shape(3, 1));
        assert_eq!(id2.kron(&id1, CAP).unwrap(), TensorOperator::identity(shape(3, 3)));
        let t1 = cup_vector(3, 1, CAP).unwrap();
        assert_relative_eq!(t1.kron(&t1, CAP).unwrap().norm().powi(2), 9.0, max_relative = 1e-14);
        let big = cup_vector(4, 3, CAP).unwrap();
        assert!(matches!(big.kron(&big, CAP), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn partial_traces() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b = DMatrix::from_row_slice(2, 2, &[0.5, -1.0, 2.0, 7.0]);
        let s1 = shape(2, 1);
        let op = TensorOperator::new(s1, s1, a.clone())
            .unwrap()
            .kron(&TensorOperator::new(s1, s1, b.clone()).unwrap(), CAP)
            .unwrap();
        let first = partial_trace(&op, 1, TraceSide::First).unwrap();
        assert_relative_eq!(first.matrix(), &(&b * a.trace()), epsilon = 1e-14);
        let last = partial_trace(&op, 1, TraceSide::Last).unwrap();
        assert_relative_eq!(last.matrix(), &(&a * b.trace()), epsilon = 1e-14);

        let t1 = cup_vector(3, 1, CAP).unwrap();
        let proj = t1.data() * t1.data().transpose();
        let op = TensorOperator::new(shape(3, 2), shape(3, 2), proj).unwrap();
        let reduced = partial_trace(&op, 1, TraceSide::First).unwrap();
        assert_relative_eq!(reduced.matrix(), &DMatrix::identity(3, 3), epsilon = 1e-14);
        assert!(matches!(partial_trace(&op, 3, TraceSide::First), Err(Error::InvalidSplit { .. })));
    }

    #[test]
    fn matricization() {
        let t1 = cup_vector(3, 1, CAP).unwrap();
        assert_eq!(matricize(&t1, 1).unwrap(), DMatrix::identity(3, 3));
        let eta = basis_vector(shape(3, 1), &[2]).unwrap();
        let zeta = TensorVector::new(shape(3, 2), DVector::from_fn(9, |i, _| i as f64)).unwrap();
        let m = matricize(&eta.kron(&zeta, CAP).unwrap(), 1).unwrap();
        assert_eq!(m, eta.data() * zeta.data().transpose());
        assert_eq!(m.rank(1e-12), 1);
        assert!(matches!(matricize(&t1, 3), Err(Error::InvalidSplit { .. })));
    }

    #[test]
    fn cup_matricizes_to_reversal_permutation() {
        for n in 2usize..=4 {
            for r in 1..=3 {
                if n.pow(2 * r as u32) > CAP {
                    continue;
                }
                let m = matricize(&cup_vector(n, r, CAP).unwrap(), r).unwrap();
                let s = shape(n, r);
                for row in 0..s.dim() {
                    let mut rev = s.multi_index(row);
                    rev.reverse();
                    let col = s.position(&rev).unwrap();
                    for c in 0..s.dim() {
                        assert_eq!(m[(row, c)], if c == col { 1.0 } else { 0.0 });
                    }
                }
            }
        }
    }

    #[test]
    fn cap_contracts_and_reinserts() {
        // T_1 T_1^* e_1⊗e_1 = T_1, T_1 T_1^* e_1⊗e_2 = 0.
        let x = basis_vector(shape(3, 2), &[1, 1]).unwrap().into_data();
        let y = apply_cap(3, 2, 1, &DMatrix::from_column_slice(9, 1, x.as_slice()));
        assert_eq!(y.column(0).into_owned(), cup_vector(3, 1, CAP).unwrap().into_data());
        let x = basis_vector(shape(3, 2), &[1, 2]).unwrap().into_data();
        let y = apply_cap(3, 2, 1, &DMatrix::from_column_slice(9, 1, x.as_slice()));
        assert_eq!(y.norm(), 0.0);
    }

    #[test]
    fn bipartite_application_matches_kronecker() {
        let a = DMatrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64 - 4.0);
        let b = DMatrix::from_fn(9, 9, |i, j| ((i * 5 + j * 7) % 11) as f64);
        let x = DMatrix::from_fn(27, 4, |i, j| ((i + 2 * j) % 7) as f64);
        let direct = a.kronecker(&b) * &x;
        assert_relative_eq!(apply_bipartite(&a, &b, &x), direct, epsilon = 1e-10);
    }

    #[test]
    fn sectors_partition_positions() {
        let sectors = parity_sectors(3, 4);
        let mut all: Vec<usize> = sectors.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..81).collect::<Vec<_>>());
        // Even number of legs: even count of odd colours, so {}, {1,2}, {1,3}, {2,3}.
        assert_eq!(sectors.len(), 4);
    }

    #[test]
    fn json_round_trip() {
        let v = cup_vector(2, 1, CAP).unwrap();
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"{"n":2,"legs":2,"data":[1.0,0.0,0.0,1.0]}"#);
        assert_eq!(serde_json::from_str::<TensorVector>(&s).unwrap(), v);
        let op = TensorOperator::new(
            shape(2, 1),
            shape(2, 1),
            DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]),
        )
        .unwrap();
        let s = serde_json::to_string(&op).unwrap();
        assert_eq!(s, r#"{"n":2,"in_legs":1,"out_legs":1,"data":[1.0,2.0,3.0,4.0]}"#);
        assert_eq!(serde_json::from_str::<TensorOperator>(&s).unwrap(), op);
        assert!(serde_json::from_str::<TensorVector>(r#"{"n":2,"legs":2,"data":[1.0]}"#).is_err());
    }
}
