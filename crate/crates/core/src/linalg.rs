//! Exact row reduction over a field.
//!
//! [`Echelon`] keeps rows in echelon form with unit pivots, scanning columns
//! left to right. Callers choose the column order, so that "first pivot"
//! means something meaningful (lowest degree, non-pure before pure, ...).

use crate::field::Field;

/// Sparse row: `(column, value)` pairs sorted by column, the first entry
/// being the unit pivot.
type SparseRow<E> = Vec<(usize, E)>;

#[derive(Clone)]
pub struct Echelon<K: Field> {
    field: K,
    ncols: usize,
    rows: Vec<SparseRow<K::Elem>>,
    pivot_row: Vec<Option<usize>>,
}

impl<K: Field> std::fmt::Debug for Echelon<K> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Echelon({} rows x {} cols)", self.rows.len(), self.ncols)
    }
}

impl<K: Field> Echelon<K> {
    pub fn new(field: K, ncols: usize) -> Self {
        Echelon {
            field,
            ncols,
            rows: Vec::new(),
            pivot_row: vec![None; ncols],
        }
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_full(&self) -> bool {
        self.rows.len() == self.ncols
    }

    /// Pivot columns in insertion order.
    pub fn pivots(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows.iter().map(|r| r[0].0)
    }

    pub fn has_pivot(&self, col: usize) -> bool {
        self.pivot_row[col].is_some()
    }

    /// Row `i` in dense form.
    pub fn row(&self, i: usize) -> Vec<K::Elem> {
        let mut v = vec![self.field.zero(); self.ncols];
        for (c, x) in &self.rows[i] {
            v[*c] = x.clone();
        }
        v
    }

    /// Columns `range` of row `i`, densely.
    pub fn row_segment(&self, i: usize, range: std::ops::Range<usize>) -> Vec<K::Elem> {
        let mut v = vec![self.field.zero(); range.len()];
        for (c, x) in &self.rows[i] {
            if range.contains(c) {
                v[*c - range.start] = x.clone();
            }
        }
        v
    }

    /// Reduces `v` in place against the stored rows.
    pub fn reduce(&self, v: &mut [K::Elem]) {
        debug_assert_eq!(v.len(), self.ncols);
        for col in 0..self.ncols {
            if self.field.is_zero(&v[col]) {
                continue;
            }
            if let Some(r) = self.pivot_row[col] {
                let factor = self.field.neg(&v[col]);
                for (c, x) in &self.rows[r] {
                    let t = self.field.mul(&factor, x);
                    v[*c] = self.field.add(&v[*c], &t);
                }
            }
        }
    }

    /// First nonzero column of `v` after reduction, if any.
    pub fn reduced_leading(&self, v: &[K::Elem]) -> Option<usize> {
        let mut w = v.to_vec();
        self.reduce(&mut w);
        w.iter().position(|x| !self.field.is_zero(x))
    }

    pub fn contains(&self, v: &[K::Elem]) -> bool {
        self.reduced_leading(v).is_none()
    }

    /// Inserts `v`, returning the new pivot column if it was independent.
    pub fn insert(&mut self, mut v: Vec<K::Elem>) -> Option<usize> {
        self.reduce(&mut v);
        self.insert_reduced(v)
    }

    /// Inserts a vector that has already been reduced against `self`.
    pub fn insert_reduced(&mut self, v: Vec<K::Elem>) -> Option<usize> {
        let pivot = v.iter().position(|x| !self.field.is_zero(x))?;
        let inv = self.field.inv(&v[pivot]).expect("nonzero pivot");
        let row: SparseRow<K::Elem> = v
            .into_iter()
            .enumerate()
            .skip(pivot)
            .filter(|(_, x)| !self.field.is_zero(x))
            .map(|(c, x)| (c, self.field.mul(&x, &inv)))
            .collect();
        self.pivot_row[pivot] = Some(self.rows.len());
        self.rows.push(row);
        Some(pivot)
    }
}

pub fn rank<K: Field>(field: &K, rows: &[Vec<K::Elem>]) -> usize {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut ech = Echelon::new(field.clone(), ncols);
    for r in rows {
        ech.insert(r.clone());
    }
    ech.rank()
}

/// Outcome of solving `A x = b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Solution<E> {
    Unique(Vec<E>),
    /// Consistent, but the columns of `A` are dependent.
    RankDeficient {
        rank: usize,
        particular: Vec<E>,
    },
    Inconsistent,
}

/// Solves `A x = b` by Gauss-Jordan elimination with column pivoting over
/// the unknowns in their given order.
pub fn solve<K: Field>(field: &K, a: &[Vec<K::Elem>], b: &[K::Elem]) -> Solution<K::Elem> {
    let nrows = a.len();
    let ncols = a.first().map_or(0, Vec::len);
    let mut m: Vec<Vec<K::Elem>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(k) = (r..nrows).find(|&k| !field.is_zero(&m[k][c])) else {
            continue;
        };
        m.swap(r, k);
        let inv = field.inv(&m[r][c]).expect("nonzero pivot");
        for x in m[r].iter_mut() {
            *x = field.mul(x, &inv);
        }
        let pivot = m[r].clone();
        for (k, row) in m.iter_mut().enumerate() {
            if k == r || field.is_zero(&row[c]) {
                continue;
            }
            let factor = field.neg(&row[c]);
            for (x, p) in row.iter_mut().zip(&pivot) {
                *x = field.add(x, &field.mul(&factor, p));
            }
        }
        pivot_cols.push(c);
        r += 1;
        if r == nrows {
            break;
        }
    }
    if m[r..].iter().any(|row| !field.is_zero(&row[ncols])) {
        return Solution::Inconsistent;
    }
    let mut x = vec![field.zero(); ncols];
    for (i, &c) in pivot_cols.iter().enumerate() {
        x[c] = m[i][ncols].clone();
    }
    if pivot_cols.len() == ncols {
        Solution::Unique(x)
    } else {
        Solution::RankDeficient {
            rank: pivot_cols.len(),
            particular: x,
        }
    }
}

/// Inverse of a square matrix, `None` when singular.
pub fn invert<K: Field>(field: &K, m: &[Vec<K::Elem>]) -> Option<Vec<Vec<K::Elem>>> {
    let n = m.len();
    let mut a: Vec<Vec<K::Elem>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { field.one() } else { field.zero() }));
            r
        })
        .collect();
    for c in 0..n {
        let k = (c..n).find(|&k| !field.is_zero(&a[k][c]))?;
        a.swap(c, k);
        let inv = field.inv(&a[c][c])?;
        for x in a[c].iter_mut() {
            *x = field.mul(x, &inv);
        }
        let pivot = a[c].clone();
        for (k, row) in a.iter_mut().enumerate() {
            if k == c || field.is_zero(&row[c]) {
                continue;
            }
            let factor = field.neg(&row[c]);
            for (x, p) in row.iter_mut().zip(&pivot) {
                *x = field.add(x, &field.mul(&factor, p));
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub fn determinant<K: Field>(field: &K, m: &[Vec<K::Elem>]) -> K::Elem {
    let n = m.len();
    let mut a = m.to_vec();
    let mut det = field.one();
    for c in 0..n {
        let Some(k) = (c..n).find(|&k| !field.is_zero(&a[k][c])) else {
            return field.zero();
        };
        if k != c {
            a.swap(c, k);
            det = field.neg(&det);
        }
        det = field.mul(&det, &a[c][c]);
        let inv = field.inv(&a[c][c]).expect("nonzero pivot");
        for k in c + 1..n {
            if field.is_zero(&a[k][c]) {
                continue;
            }
            let factor = field.neg(&field.mul(&a[k][c], &inv));
            for j in c..n {
                let t = field.mul(&factor, &a[c][j]);
                a[k][j] = field.add(&a[k][j], &t);
            }
        }
    }
    det
}

pub fn mat_vec<K: Field>(field: &K, m: &[Vec<K::Elem>], v: &[K::Elem]) -> Vec<K::Elem> {
    m.iter()
        .map(|row| {
            row.iter().zip(v).fold(field.zero(), |acc, (a, b)| {
                field.add(&acc, &field.mul(a, b))
            })
        })
        .collect()
}

pub fn identity<K: Field>(field: &K, n: usize) -> Vec<Vec<K::Elem>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { field.one() } else { field.zero() })
                .collect()
        })
        .collect()
}
