//! Restriction systems of the generalized Sierpiński gaskets `SG_n`.
//!
//! Vertices are lattice points `(i, j)` with `i + j ≤ n` in triangular
//! coordinates; the corners are `v0 = (0, 0)`, `v1 = (n, 0)`, `v2 = (0, n)`.
//! Each upward cell is named by its lower-left vertex `(i, j)` and has
//! corners `(i, j), (i+1, j), (i, j+1)`, the images of `v0, v1, v2` under
//! the cell's similarity.

use std::collections::HashMap;

use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::field::{Field, Surd};
use crate::linalg::Matrix;
use crate::matsys::MatrixSystem;
use crate::spectral::renormalize;
use crate::symbolic::Alphabet;

pub const MAX_N: usize = 6;

#[derive(Debug, Clone)]
pub struct GasketGraph {
    pub n: usize,
    pub vertices: Vec<(usize, usize)>,
    pub edges: Vec<(usize, usize)>,
    /// Indices of `v0, v1, v2`.
    pub boundary: [usize; 3],
    /// Corner vertex indices of each cell, in symbol order.
    pub cells: Vec<[usize; 3]>,
    /// Lower-left lattice point of each cell, in symbol order.
    pub cell_origins: Vec<(usize, usize)>,
}

impl GasketGraph {
    pub fn vertex_index(&self, p: (usize, usize)) -> Option<usize> {
        self.vertices.iter().position(|&v| v == p)
    }

    /// Non-boundary vertices in vertex order.
    pub fn interior(&self) -> Vec<usize> {
        (0..self.vertices.len())
            .filter(|v| !self.boundary.contains(v))
            .collect()
    }
}

/// Rotation of the lattice by `2π/3`, taking `v0 → v1 → v2 → v0`.
fn rotate(n: usize, (i, j): (usize, usize)) -> (usize, usize) {
    (n - i - j, i)
}

fn rotate_cell(n: usize, (i, j): (usize, usize)) -> (usize, usize) {
    (n - i - j - 1, i)
}

/// Cells grouped into rotation orbits. Each orbit lists `c, ρ²c, ρc`, so
/// that consecutive symbols are related by `A_{s+1} = R⁻¹ A_s R`; the
/// orbit of the corner cell at `v0` comes first.
fn ordered_cells(n: usize) -> Vec<(usize, usize)> {
    let mut all: Vec<(usize, usize)> = Vec::new();
    for j in 0..n {
        for i in 0..n - j {
            all.push((i, j));
        }
    }
    let mut out: Vec<(usize, usize)> = Vec::new();
    for &c in &all {
        if out.contains(&c) {
            continue;
        }
        let c1 = rotate_cell(n, c);
        let c2 = rotate_cell(n, c1);
        out.push(c);
        if c1 != c {
            out.push(c2);
            out.push(c1);
        }
    }
    out
}

pub fn build_graph(n: usize) -> Result<GasketGraph> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "gasket needs n ≥ 2, got {n}"
        )));
    }
    let mut vertices = Vec::new();
    for j in 0..=n {
        for i in 0..=n - j {
            vertices.push((i, j));
        }
    }
    let index: HashMap<(usize, usize), usize> =
        vertices.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let origins = ordered_cells(n);
    let mut cells = Vec::new();
    let mut edges = Vec::new();
    for &(i, j) in &origins {
        let c = [index[&(i, j)], index[&(i + 1, j)], index[&(i, j + 1)]];
        cells.push(c);
        for (a, b) in [(c[0], c[1]), (c[0], c[2]), (c[1], c[2])] {
            edges.push((a.min(b), a.max(b)));
        }
    }
    edges.sort_unstable();
    Ok(GasketGraph {
        n,
        boundary: [index[&(0, 0)], index[&(n, 0)], index[&(0, n)]],
        vertices,
        edges,
        cells,
        cell_origins: origins,
    })
}

/// Values at every vertex of the harmonic extension of boundary data, as a
/// `|V| × 3` matrix (rows indexed like `g.vertices`). Unit conductances.
pub fn vertex_extension(g: &GasketGraph) -> Result<Matrix<Surd>> {
    let interior = g.interior();
    let pos: HashMap<usize, usize> = interior.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let m = interior.len();
    let mut lap = Matrix::<Surd>::zeros(m, m);
    let mut rhs = Matrix::<Surd>::zeros(m, 3);
    let one = Surd::one();
    for &(a, b) in &g.edges {
        for (x, y) in [(a, b), (b, a)] {
            let Some(&px) = pos.get(&x) else { continue };
            lap[(px, px)] = lap[(px, px)].clone() + one.clone();
            match pos.get(&y) {
                Some(&py) => lap[(px, py)] = lap[(px, py)].clone() - one.clone(),
                None => {
                    let k = g
                        .boundary
                        .iter()
                        .position(|&v| v == y)
                        .expect("boundary vertex");
                    rhs[(px, k)] = rhs[(px, k)].clone() + one.clone();
                }
            }
        }
    }
    let sol = lap
        .solve(&rhs)
        .ok_or_else(|| Error::Invalid("interior Laplacian is singular".into()))?;
    Ok(Matrix::from_fn(g.vertices.len(), 3, |v, k| {
        match pos.get(&v) {
            Some(&p) => sol[(p, k)].clone(),
            None => {
                if g.boundary[k] == v {
                    Surd::one()
                } else {
                    Surd::zero()
                }
            }
        }
    }))
}

/// The `(interior) × 3` extension matrix: interior values from the corner
/// values. Rows follow [`GasketGraph::interior`].
pub fn harmonic_extension(g: &GasketGraph) -> Result<Matrix<Surd>> {
    let full = vertex_extension(g)?;
    let interior = g.interior();
    Ok(Matrix::from_fn(interior.len(), 3, |r, k| {
        full[(interior[r], k)].clone()
    }))
}

/// Two boundary vectors spanning the functions modulo constants.
#[derive(Debug, Clone)]
pub struct HarmonicBasis {
    pub h1: [Surd; 3],
    pub h2: [Surd; 3],
}

impl Default for HarmonicBasis {
    /// `h1 = (√2/3)(1, −1/2, −1/2)`, `h2 = (1/√6)(0, 1, −1)`.
    fn default() -> Self {
        let a: Surd = "1/3*sqrt(2)".parse().expect("literal");
        let b: Surd = "1/6*sqrt(6)".parse().expect("literal");
        let half = Surd::ratio(-1, 2);
        HarmonicBasis {
            h1: [a.clone(), a.clone() * half.clone(), a * half],
            h2: [Surd::zero(), b.clone(), -b],
        }
    }
}

impl HarmonicBasis {
    fn vectors(&self) -> [&[Surd; 3]; 2] {
        [&self.h1, &self.h2]
    }

    fn check(&self) -> Result<()> {
        for h in self.vectors() {
            let s = h.iter().fold(Surd::zero(), |acc, x| acc + x.clone());
            if !s.is_zero() {
                return Err(Error::InvalidArgument(
                    "basis vector is not orthogonal to constants".into(),
                ));
            }
        }
        let dot = dot3(&self.h1, &self.h2);
        if !dot.is_zero()
            || dot3(&self.h1, &self.h1).is_zero()
            || dot3(&self.h2, &self.h2).is_zero()
        {
            return Err(Error::InvalidArgument("degenerate harmonic basis".into()));
        }
        Ok(())
    }
}

fn dot3(a: &[Surd; 3], b: &[Surd; 3]) -> Surd {
    a.iter()
        .zip(b)
        .fold(Surd::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

/// Raw (unnormalized) restriction matrices, one per cell: column `i` holds
/// the basis coefficients of the restriction of `h_i` to the cell's corners.
pub fn cell_restrictions(g: &GasketGraph, basis: &HarmonicBasis) -> Result<Vec<Matrix<Surd>>> {
    basis.check()?;
    let ext = vertex_extension(g)?;
    let hs = basis.vectors();
    let norms: Vec<Surd> = hs
        .iter()
        .map(|h| dot3(h, h).inv().expect("nonzero basis vector"))
        .collect();
    let mut out = Vec::new();
    for cell in &g.cells {
        let p = Matrix::from_fn(3, 3, |k, b| ext[(cell[k], b)].clone());
        let m = Matrix::from_fn(2, 2, |j, i| {
            let h = hs[i];
            let restricted: [Surd; 3] = std::array::from_fn(|k| {
                (0..3).fold(Surd::zero(), |acc, b| {
                    acc + p[(k, b)].clone() * h[b].clone()
                })
            });
            dot3(hs[j], &restricted) * norms[j].clone()
        });
        out.push(m);
    }
    Ok(out)
}

/// The renormalized system of `SG_n`, `2 ≤ n ≤ 6`, with symbols `0…` in the
/// cell order of [`build_graph`].
pub fn generate_system(n: usize) -> Result<MatrixSystem<Surd>> {
    if !(2..=MAX_N).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "gasket size must be between 2 and {MAX_N}, got {n}"
        )));
    }
    let g = build_graph(n)?;
    let raw = cell_restrictions(&g, &HarmonicBasis::default())?;
    Ok(renormalize(Alphabet::numbered(raw.len()), raw)?.system)
}

/// Vertex coordinates rotated by `2π/3` (exposed for symmetry checks).
pub fn rotate_vertex(n: usize, p: (usize, usize)) -> (usize, usize) {
    rotate(n, p)
}

/// Extension weights as rationals (all entries are rational).
pub fn extension_rationals(g: &GasketGraph) -> Result<Vec<Vec<BigRational>>> {
    let ext = harmonic_extension(g)?;
    (0..ext.rows())
        .map(|r| {
            (0..3)
                .map(|k| {
                    ext[(r, k)]
                        .as_rational()
                        .ok_or_else(|| Error::Invalid("irrational extension weight".into()))
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::spectral::theta1;

    fn s(x: &str) -> Surd {
        x.parse().unwrap()
    }

    #[test]
    fn graph_sizes() {
        for (n, v, c) in [(2, 6, 3), (3, 10, 6), (5, 21, 15)] {
            let g = build_graph(n).unwrap();
            assert_eq!(g.vertices.len(), v);
            assert_eq!(g.cells.len(), c);
            assert_eq!(g.edges.len(), 3 * c);
        }
        assert!(build_graph(1).is_err());
    }

    #[test]
    fn sg2_extension_is_one_fifth_two_fifths() {
        let g = build_graph(2).unwrap();
        let ext = harmonic_extension(&g).unwrap();
        // interior vertices: (1,0), (0,1), (1,1): midpoints opposite v2, v1, v0
        let expect = [
            ["2/5", "2/5", "1/5"],
            ["2/5", "1/5", "2/5"],
            ["1/5", "2/5", "2/5"],
        ];
        for (r, row) in expect.iter().enumerate() {
            for k in 0..3 {
                assert_eq!(ext[(r, k)], s(row[k]));
            }
        }
    }

    #[test]
    fn constants_extend_to_constants() {
        for n in 2..=5 {
            let g = build_graph(n).unwrap();
            let ext = harmonic_extension(&g).unwrap();
            for r in 0..ext.rows() {
                let sum = (0..3).fold(Surd::zero(), |a, k| a + ext[(r, k)].clone());
                assert_eq!(sum, Surd::one());
            }
        }
    }

    #[test]
    fn sg3_extension_denominators_divide_15() {
        let g = build_graph(3).unwrap();
        for row in extension_rationals(&g).unwrap() {
            for q in row {
                let d: u32 = q.denom().try_into().unwrap();
                assert_eq!(15 % d, 0, "{q}");
            }
        }
    }

    #[test]
    fn corner_cells_are_rotations() {
        let r = builtin::rotation();
        let r_inv = r.transpose();
        for n in 2..=5 {
            let g = build_graph(n).unwrap();
            let raw = cell_restrictions(&g, &HarmonicBasis::default()).unwrap();
            for s in 0..2 {
                assert_eq!(raw[s + 1], &(&r_inv * &raw[s]) * &r, "n = {n}, s = {s}");
            }
        }
    }

    #[test]
    fn sg2_matches_builtin() {
        let sys = generate_system(2).unwrap();
        assert_eq!(sys, builtin::sg());
    }

    #[test]
    fn sg3_theta1() {
        let sys = generate_system(3).unwrap();
        assert!(sys.validate(0.0).unwrap().passed());
        assert_eq!(
            theta1(&sys).unwrap().value,
            crate::field::Scalar::Exact(s("5/7"))
        );
    }

    #[test]
    fn sg4_and_sg5_theta1() {
        for (n, want) in [(4, "2822/4223"), (5, "209527/327611")] {
            let sys = generate_system(n).unwrap();
            let t = theta1(&sys).unwrap();
            assert_eq!(t.value, crate::field::Scalar::Exact(s(want)), "n = {n}");
        }
    }
}
