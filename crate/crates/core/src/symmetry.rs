//! The hyperoctahedral group `B_d` of hypercube symmetries, realized as
//! signed permutation matrices, and its action on pixel indices.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// A `d x d` signed permutation matrix.
///
/// Row `i` has its single nonzero entry `signs[i]` in column `permutation[i]`,
/// so `(M x)_i = signs[i] * x[permutation[i]]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    // Field order matters: the derived ordering is lexicographic on the
    // flattened matrix.
    matrix: Vec<i32>,
    d: usize,
    permutation: Vec<usize>,
    signs: Vec<i32>,
    det: i32,
}

impl GroupElement {
    /// Builds an element from a row-major integer matrix, checking that it is
    /// a signed permutation.
    pub fn from_matrix(d: usize, matrix: Vec<i32>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension(d));
        }
        if matrix.len() != d * d {
            return Err(Error::ComponentCount { expected: d * d, found: matrix.len() });
        }
        let mut permutation = vec![0; d];
        let mut signs = vec![0; d];
        let mut col_used = vec![false; d];
        for i in 0..d {
            let row = &matrix[i * d..(i + 1) * d];
            let nonzero: Vec<usize> = (0..d).filter(|&j| row[j] != 0).collect();
            if nonzero.len() != 1 || row[nonzero[0]].abs() != 1 || col_used[nonzero[0]] {
                return Err(Error::SpecMismatch(format!("matrix {matrix:?} is not a signed permutation")));
            }
            col_used[nonzero[0]] = true;
            permutation[i] = nonzero[0];
            signs[i] = row[nonzero[0]];
        }
        let det = crate::tensor::permutation_sign(&permutation) * signs.iter().product::<i32>();
        Ok(GroupElement { matrix, d, permutation, signs, det })
    }

    pub fn identity(d: usize) -> Self {
        let mut matrix = vec![0; d * d];
        for i in 0..d {
            matrix[i * d + i] = 1;
        }
        GroupElement::from_matrix(d, matrix).expect("identity is a signed permutation")
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Row-major matrix entries.
    pub fn matrix(&self) -> &[i32] {
        &self.matrix
    }

    pub fn det(&self) -> i32 {
        self.det
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn signs(&self) -> &[i32] {
        &self.signs
    }

    pub fn is_identity(&self) -> bool {
        self.permutation.iter().enumerate().all(|(i, &p)| p == i) && self.signs.iter().all(|&s| s == 1)
    }

    /// Matrix product `self * other`.
    pub fn compose(&self, other: &GroupElement) -> Result<GroupElement> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: other.d });
        }
        let d = self.d;
        let mut matrix = vec![0; d * d];
        for i in 0..d {
            let j = self.permutation[i];
            let l = other.permutation[j];
            matrix[i * d + l] = self.signs[i] * other.signs[j];
        }
        GroupElement::from_matrix(d, matrix)
    }

    /// The inverse, i.e. the transpose.
    pub fn inverse(&self) -> GroupElement {
        let d = self.d;
        let mut matrix = vec![0; d * d];
        for i in 0..d {
            for j in 0..d {
                matrix[j * d + i] = self.matrix[i * d + j];
            }
        }
        GroupElement::from_matrix(d, matrix).expect("transpose of a signed permutation")
    }

    /// Applies the matrix to an integer vector.
    pub fn apply(&self, x: &[i64]) -> Vec<i64> {
        (0..self.d).map(|i| self.signs[i] as i64 * x[self.permutation[i]]).collect()
    }

    /// Acts on a pixel index of an `N^d` torus image: the matrix is applied
    /// about the center `((N-1)/2, ...)` and the result is reduced mod `N`.
    pub fn act_on_pixel(&self, idx: &[usize], n: usize) -> Result<Vec<usize>> {
        if n.is_multiple_of(2) {
            return Err(Error::UnsupportedSidelength(n));
        }
        if idx.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: idx.len() });
        }
        Ok(self.act_on_pixel_unchecked(idx, n))
    }

    pub(crate) fn act_on_pixel_unchecked(&self, idx: &[usize], n: usize) -> Vec<usize> {
        let center = ((n - 1) / 2) as i64;
        let n = n as i64;
        (0..self.d)
            .map(|i| {
                let x = idx[self.permutation[i]] as i64 - center;
                (self.signs[i] as i64 * x + center).rem_euclid(n) as usize
            })
            .collect()
    }
}

/// A finite group of signed permutation matrices stored in canonical
/// (lexicographic) order.
#[derive(Clone, Debug)]
pub struct Group {
    d: usize,
    elements: Vec<GroupElement>,
}

impl Group {
    /// Closes a generator set under products.
    pub fn generate(d: usize, generators: &[GroupElement]) -> Result<Group> {
        if generators.iter().any(|g| g.d() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: generators[0].d() });
        }
        let mut found: BTreeSet<GroupElement> = BTreeSet::new();
        let identity = GroupElement::identity(d);
        let mut frontier = vec![identity.clone()];
        found.insert(identity);
        while let Some(current) = frontier.pop() {
            for gen in generators {
                let next = gen.compose(&current)?;
                if found.insert(next.clone()) {
                    frontier.push(next);
                }
            }
        }
        Ok(Group { d, elements: found.into_iter().collect() })
    }

    /// The full hyperoctahedral group `B_d`, generated by one 90 degree
    /// rotation per coordinate plane and one axis reflection.
    pub fn hyperoctahedral(d: usize) -> Group {
        assert!(d >= 1, "dimension must be positive");
        let mut generators: Vec<GroupElement> = Vec::new();
        for i in 0..d {
            for j in i + 1..d {
                generators.push(rotation90(d, i, j));
            }
        }
        let mut reflection = GroupElement::identity(d).matrix().to_vec();
        reflection[0] = -1;
        generators.push(GroupElement::from_matrix(d, reflection).expect("reflection"));
        Group::generate(d, &generators).expect("generators share a dimension")
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.elements.binary_search(g).is_ok()
    }

    /// Counter-clockwise quarter turn in the `(i, j)` plane: `e_i -> e_j`.
    pub fn rotation90(&self, i: usize, j: usize) -> GroupElement {
        rotation90(self.d, i, j)
    }
}

fn rotation90(d: usize, i: usize, j: usize) -> GroupElement {
    let mut matrix = GroupElement::identity(d).matrix().to_vec();
    matrix[i * d + i] = 0;
    matrix[j * d + j] = 0;
    matrix[j * d + i] = 1;
    matrix[i * d + j] = -1;
    GroupElement::from_matrix(d, matrix).expect("rotation is a signed permutation")
}
