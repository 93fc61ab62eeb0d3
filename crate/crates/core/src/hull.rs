//! Facet enumeration: half-space representation of the convex hull of a
//! point cloud in `R^d`.
//!
//! General dimensions use an incremental (QuickHull-style) construction over
//! simplicial facets with adjacency and conflict lists. Facets that come out
//! coplanar within tolerance are merged afterwards, so the output is
//! irredundant for point sets in general position as well as for degenerate
//! ones such as cubes.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{dot, DenseMatrix};

/// Relative tolerance (times the point-cloud diameter) for hull decisions.
pub const HULL_REL_TOL: f64 = 1e-9;
const NORMAL_MERGE_ANGLE: f64 = 1e-7;

/// Half-space `{x : gᵀx ≤ h}` with unit normal `g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Facet {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Facet {
    #[inline]
    pub fn signed_distance(&self, p: &[f64]) -> f64 {
        dot(&self.normal, p) - self.offset
    }
}

/// Bounded polytope given by its facets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HPolytope {
    pub dim: usize,
    pub facets: Vec<Facet>,
    /// Hull vertices when known (empty for hand-built or imported polytopes).
    pub vertices: Vec<Vec<f64>>,
    /// Tolerance the facets were computed with.
    pub tolerance: f64,
}

impl HPolytope {
    /// Builds a polytope from raw half-spaces, normalizing each normal.
    pub fn from_halfspaces(dim: usize, halfspaces: &[(Vec<f64>, f64)]) -> Result<Self> {
        let mut facets = Vec::with_capacity(halfspaces.len());
        for (g, h) in halfspaces {
            if g.len() != dim {
                return Err(Error::DimMismatch(format!(
                    "normal of length {} in dimension {dim}",
                    g.len()
                )));
            }
            let nrm = dot(g, g).sqrt();
            if !(nrm > 0.0) || !nrm.is_finite() || !h.is_finite() {
                return Err(Error::InvalidParameter("degenerate half-space".into()));
            }
            facets.push(Facet {
                normal: g.iter().map(|v| v / nrm).collect(),
                offset: h / nrm,
            });
        }
        Ok(Self {
            dim,
            facets,
            vertices: Vec::new(),
            tolerance: 0.0,
        })
    }

    pub fn num_facets(&self) -> usize {
        self.facets.len()
    }

    /// True iff `gᵢᵀp ≤ hᵢ + slack` for every facet.
    pub fn contains(&self, p: &[f64], slack: f64) -> Result<bool> {
        if p.len() != self.dim {
            return Err(Error::DimMismatch(format!(
                "point of length {} in dimension {}",
                p.len(),
                self.dim
            )));
        }
        Ok(self.facets.iter().all(|f| f.signed_distance(p) <= slack))
    }

    /// Largest `gᵢᵀp − hᵢ` over all facets.
    pub fn max_violation(&self, p: &[f64]) -> f64 {
        self.facets
            .iter()
            .map(|f| f.signed_distance(p))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Facet dump: one `g_1,...,g_d,h` row per facet.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut out = std::io::BufWriter::new(out);
        for f in &self.facets {
            let row: Vec<String> = f
                .normal
                .iter()
                .chain(std::iter::once(&f.offset))
                .map(|&v| crate::io::fmt_f64(v))
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a facet dump written by [`HPolytope::write_csv`] or an external tool.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let m = crate::io::read_matrix_csv(input)?;
        if m.cols() < 2 {
            return Err(Error::Parse("facet rows need at least g_1 and h".into()));
        }
        let dim = m.cols() - 1;
        let hs: Vec<(Vec<f64>, f64)> = (0..m.rows())
            .map(|i| (m.row(i)[..dim].to_vec(), m.row(i)[dim]))
            .collect();
        Self::from_halfspaces(dim, &hs)
    }
}

/// Irredundant H-representation of `conv(points)`.
pub fn enumerate_facets(points: &[Vec<f64>]) -> Result<HPolytope> {
    let dim = points.first().map_or(0, Vec::len);
    if dim == 0 {
        return Err(Error::BadDims("points must have dimension >= 1".into()));
    }
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::DimMismatch("points of differing dimension".into()));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NotFinite("hull points"));
    }
    if points.len() < dim + 1 {
        return Err(Error::TooFewPoints {
            needed: dim + 1,
            got: points.len(),
        });
    }
    let diam = bounding_diameter(points);
    let eps = HULL_REL_TOL * diam;
    if dim == 1 {
        return hull_1d(points, eps);
    }
    Builder::new(points, dim, eps)?.run()
}

/// Enumerates facets of the columns of a `d × L` matrix.
pub fn enumerate_facets_of_columns(x: &DenseMatrix) -> Result<HPolytope> {
    enumerate_facets(&x.columns())
}

fn bounding_diameter(points: &[Vec<f64>]) -> f64 {
    let dim = points[0].len();
    let mut sq = 0.0;
    for k in 0..dim {
        let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p[k]), hi.max(p[k]))
        });
        sq += (hi - lo) * (hi - lo);
    }
    sq.sqrt()
}

fn hull_1d(points: &[Vec<f64>], eps: f64) -> Result<HPolytope> {
    let lo = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 1e-12 * hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateInput("all points coincide".into()));
    }
    Ok(HPolytope {
        dim: 1,
        facets: vec![
            Facet {
                normal: vec![-1.0],
                offset: -lo,
            },
            Facet {
                normal: vec![1.0],
                offset: hi,
            },
        ],
        vertices: vec![vec![lo], vec![hi]],
        tolerance: eps,
    })
}

struct SimplexFacet {
    /// `d` point indices.
    vertices: Vec<usize>,
    /// `neighbors[k]` shares every vertex except `vertices[k]`.
    neighbors: Vec<usize>,
    normal: Vec<f64>,
    offset: f64,
    outside: Vec<usize>,
    alive: bool,
}

struct Builder<'a> {
    points: &'a [Vec<f64>],
    dim: usize,
    eps: f64,
    interior: Vec<f64>,
    facets: Vec<SimplexFacet>,
}

impl<'a> Builder<'a> {
    fn new(points: &'a [Vec<f64>], dim: usize, eps: f64) -> Result<Self> {
        let simplex = initial_simplex(points, dim, eps)?;
        let interior: Vec<f64> = (0..dim)
            .map(|k| simplex.iter().map(|&i| points[i][k]).sum::<f64>() / (dim + 1) as f64)
            .collect();
        let mut b = Self {
            points,
            dim,
            eps,
            interior,
            facets: Vec::new(),
        };
        for skip in 0..=dim {
            let vertices: Vec<usize> = simplex
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != skip)
                .map(|(_, &v)| v)
                .collect();
            // neighbor opposite simplex[j] is the facet that skips j
            let neighbors: Vec<usize> = (0..=dim).filter(|&j| j != skip).collect();
            b.push_facet(vertices, neighbors)?;
        }
        let in_simplex: Vec<bool> = {
            let mut v = vec![false; points.len()];
            simplex.iter().for_each(|&i| v[i] = true);
            v
        };
        let ids: Vec<usize> = (0..b.facets.len()).collect();
        let candidates: Vec<usize> = (0..points.len()).filter(|&i| !in_simplex[i]).collect();
        b.distribute(&candidates, &ids);
        Ok(b)
    }

    fn push_facet(&mut self, vertices: Vec<usize>, neighbors: Vec<usize>) -> Result<usize> {
        let (normal, offset) = self.hyperplane(&vertices)?;
        self.facets.push(SimplexFacet {
            vertices,
            neighbors,
            normal,
            offset,
            outside: Vec::new(),
            alive: true,
        });
        Ok(self.facets.len() - 1)
    }

    /// Unit normal through the facet's vertices, pointing away from the interior point.
    fn hyperplane(&self, vertices: &[usize]) -> Result<(Vec<f64>, f64)> {
        let origin = &self.points[vertices[0]];
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(self.dim - 1);
        for &v in &vertices[1..] {
            let mut e: Vec<f64> = self.points[v].iter().zip(origin).map(|(a, b)| a - b).collect();
            gram_schmidt(&mut e, &basis);
            let n = dot(&e, &e).sqrt();
            if n == 0.0 {
                return Err(Error::DegenerateInput("collapsed facet".into()));
            }
            e.iter_mut().for_each(|x| *x /= n);
            basis.push(e);
        }
        let mut best: Option<(f64, Vec<f64>)> = None;
        for axis in 0..self.dim {
            let mut e = vec![0.0; self.dim];
            e[axis] = 1.0;
            gram_schmidt(&mut e, &basis);
            let n = dot(&e, &e).sqrt();
            if best.as_ref().is_none_or(|(bn, _)| n > *bn) {
                best = Some((n, e));
            }
        }
        let (n, mut normal) = best.expect("dim >= 1");
        normal.iter_mut().for_each(|x| *x /= n);
        let mut offset = dot(&normal, origin);
        if dot(&normal, &self.interior) > offset {
            normal.iter_mut().for_each(|x| *x = -*x);
            offset = -offset;
        }
        Ok((normal, offset))
    }

    fn distance(&self, f: usize, p: usize) -> f64 {
        let facet = &self.facets[f];
        dot(&facet.normal, &self.points[p]) - facet.offset
    }

    /// Assigns each candidate to the facet it is farthest outside of; points
    /// within tolerance of every facet are inside and dropped.
    fn distribute(&mut self, candidates: &[usize], facet_ids: &[usize]) {
        for &p in candidates {
            let mut best: Option<(usize, f64)> = None;
            for &f in facet_ids {
                let d = self.distance(f, p);
                if d > self.eps && best.is_none_or(|(_, bd)| d > bd) {
                    best = Some((f, d));
                }
            }
            if let Some((f, _)) = best {
                self.facets[f].outside.push(p);
            }
        }
    }

    fn run(mut self) -> Result<HPolytope> {
        let mut stack: Vec<usize> = (0..self.facets.len()).collect();
        while let Some(start) = stack.pop() {
            if !self.facets[start].alive || self.facets[start].outside.is_empty() {
                continue;
            }
            let apex = *self.facets[start]
                .outside
                .iter()
                .max_by(|&&a, &&b| self.distance(start, a).total_cmp(&self.distance(start, b)))
                .expect("nonempty outside set");

            // visible region by flood fill
            let mut visible = vec![start];
            let mut is_visible: HashMap<usize, bool> = HashMap::from([(start, true)]);
            let mut head = 0;
            while head < visible.len() {
                let f = visible[head];
                head += 1;
                for k in 0..self.dim {
                    let nb = self.facets[f].neighbors[k];
                    if is_visible.contains_key(&nb) {
                        continue;
                    }
                    let vis = self.distance(nb, apex) > self.eps;
                    is_visible.insert(nb, vis);
                    if vis {
                        visible.push(nb);
                    }
                }
            }

            // horizon ridges become new facets through the apex
            let mut new_ids = Vec::new();
            let mut ridge_map: HashMap<Vec<usize>, (usize, usize)> = HashMap::new();
            for &f in &visible {
                for k in 0..self.dim {
                    let nb = self.facets[f].neighbors[k];
                    if is_visible[&nb] {
                        continue;
                    }
                    let mut verts: Vec<usize> = self.facets[f]
                        .vertices
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != k)
                        .map(|(_, &v)| v)
                        .collect();
                    verts.push(apex);
                    let mut neighbors = vec![usize::MAX; self.dim];
                    neighbors[self.dim - 1] = nb;
                    let id = self.push_facet(verts, neighbors)?;
                    let slot = self.facets[nb]
                        .neighbors
                        .iter()
                        .position(|&x| x == f)
                        .expect("adjacency is symmetric");
                    self.facets[nb].neighbors[slot] = id;
                    // link sub-ridges shared with sibling new facets
                    for j in 0..self.dim - 1 {
                        let mut key: Vec<usize> = self.facets[id].vertices[..self.dim - 1]
                            .iter()
                            .enumerate()
                            .filter(|&(i, _)| i != j)
                            .map(|(_, &v)| v)
                            .collect();
                        key.sort_unstable();
                        if let Some((other, oslot)) = ridge_map.remove(&key) {
                            self.facets[id].neighbors[j] = other;
                            self.facets[other].neighbors[oslot] = id;
                        } else {
                            ridge_map.insert(key, (id, j));
                        }
                    }
                    new_ids.push(id);
                }
            }
            if !ridge_map.is_empty() {
                return Err(Error::DegenerateInput("inconsistent horizon".into()));
            }

            let mut orphans = Vec::new();
            for &f in &visible {
                self.facets[f].alive = false;
                orphans.append(&mut self.facets[f].outside);
            }
            orphans.retain(|&p| p != apex);
            self.distribute(&orphans, &new_ids);
            stack.extend(new_ids.iter().copied().filter(|&f| !self.facets[f].outside.is_empty()));
        }
        self.finish()
    }

    fn finish(self) -> Result<HPolytope> {
        let alive: Vec<usize> = (0..self.facets.len()).filter(|&f| self.facets[f].alive).collect();
        // union coplanar neighbors
        let mut parent: HashMap<usize, usize> = alive.iter().map(|&f| (f, f)).collect();
        fn find(parent: &mut HashMap<usize, usize>, x: usize) -> usize {
            let mut r = x;
            while parent[&r] != r {
                r = parent[&r];
            }
            let mut c = x;
            while parent[&c] != r {
                let next = parent[&c];
                parent.insert(c, r);
                c = next;
            }
            r
        }
        for &f in &alive {
            for &nb in &self.facets[f].neighbors {
                let (a, b) = (&self.facets[f], &self.facets[nb]);
                let cos = dot(&a.normal, &b.normal).clamp(-1.0, 1.0);
                let angle = if cos > 0.99 {
                    // accurate for tiny angles
                    let diff: f64 = a
                        .normal
                        .iter()
                        .zip(&b.normal)
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum::<f64>()
                        .sqrt();
                    2.0 * (0.5 * diff).asin()
                } else {
                    cos.acos()
                };
                if angle < NORMAL_MERGE_ANGLE && (a.offset - b.offset).abs() < self.eps {
                    let (ra, rb) = (find(&mut parent, f), find(&mut parent, nb));
                    if ra != rb {
                        parent.insert(ra.max(rb), ra.min(rb));
                    }
                }
            }
        }
        let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
        let mut index_of: HashMap<usize, usize> = HashMap::new();
        for &f in &alive {
            let r = find(&mut parent, f);
            let gi = *index_of.entry(r).or_insert_with(|| {
                groups.push((r, Vec::new()));
                groups.len() - 1
            });
            groups[gi].1.push(f);
        }

        let mut facets = Vec::with_capacity(groups.len());
        let mut is_vertex = vec![false; self.points.len()];
        for (rep, members) in &groups {
            let mut normal = vec![0.0; self.dim];
            for &m in members {
                normal.iter_mut().zip(&self.facets[m].normal).for_each(|(a, b)| *a += b);
            }
            let n = dot(&normal, &normal).sqrt();
            let normal: Vec<f64> = if n > 0.0 {
                normal.iter().map(|v| v / n).collect()
            } else {
                self.facets[*rep].normal.clone()
            };
            let mut offset = f64::NEG_INFINITY;
            for &m in members {
                for &v in &self.facets[m].vertices {
                    offset = offset.max(dot(&normal, &self.points[v]));
                    is_vertex[v] = true;
                }
            }
            facets.push(Facet { normal, offset });
        }
        let vertices = (0..self.points.len())
            .filter(|&i| is_vertex[i])
            .map(|i| self.points[i].clone())
            .collect();
        Ok(HPolytope {
            dim: self.dim,
            facets,
            vertices,
            tolerance: self.eps,
        })
    }
}

fn gram_schmidt(e: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let p = dot(e, b);
            e.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
    }
}

/// Greedy `d+1` points spanning maximal volume.
fn initial_simplex(points: &[Vec<f64>], dim: usize, eps: f64) -> Result<Vec<usize>> {
    let diam = eps / HULL_REL_TOL;
    let first = (0..points.len())
        .min_by(|&a, &b| points[a][0].total_cmp(&points[b][0]))
        .expect("nonempty");
    let mut chosen = vec![first];
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut volume = 1.0;
    while chosen.len() < dim + 1 {
        let origin = &points[chosen[0]];
        let mut best: Option<(usize, f64, Vec<f64>)> = None;
        for (i, p) in points.iter().enumerate() {
            let mut e: Vec<f64> = p.iter().zip(origin).map(|(a, b)| a - b).collect();
            gram_schmidt(&mut e, &basis);
            let n = dot(&e, &e).sqrt();
            if best.as_ref().is_none_or(|(_, bn, _)| n > *bn) {
                best = Some((i, n, e));
            }
        }
        let (i, n, e) = best.expect("nonempty");
        if n <= 0.0 {
            return Err(Error::DegenerateInput(format!(
                "points span only {} dimensions",
                basis.len()
            )));
        }
        volume *= n;
        basis.push(e.into_iter().map(|x| x / n).collect());
        chosen.push(i);
    }
    if volume < 1e-12 * diam.powi(dim as i32) {
        return Err(Error::DegenerateInput(format!(
            "points do not span R^{dim} (relative volume {:.2e})",
            volume / diam.powi(dim as i32)
        )));
    }
    Ok(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_facets(p: &HPolytope) -> Vec<(Vec<i64>, i64)> {
        let mut v: Vec<(Vec<i64>, i64)> = p
            .facets
            .iter()
            .map(|f| {
                (
                    f.normal.iter().map(|x| (x * 1e6).round() as i64).collect(),
                    (f.offset * 1e6).round() as i64,
                )
            })
            .collect();
        v.sort();
        v
    }

    #[test]
    fn unit_square() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let p = enumerate_facets(&pts).unwrap();
        assert_eq!(p.num_facets(), 4);
        let expected = vec![
            (vec![-1_000_000, 0], 0),
            (vec![0, -1_000_000], 0),
            (vec![0, 1_000_000], 1_000_000),
            (vec![1_000_000, 0], 1_000_000),
        ];
        assert_eq!(sorted_facets(&p), expected);
    }

    #[test]
    fn triangle_with_interior_point() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![0.2, 0.2]];
        let p = enumerate_facets(&pts).unwrap();
        assert_eq!(p.num_facets(), 3);
        assert_eq!(p.vertices.len(), 3);
    }

    #[test]
    fn cube_merges_coplanar_triangles() {
        let mut pts = Vec::new();
        for i in 0..8 {
            pts.push(vec![(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64]);
        }
        pts.push(vec![0.5, 0.5, 0.5]);
        let p = enumerate_facets(&pts).unwrap();
        assert_eq!(p.num_facets(), 6);
        assert_eq!(p.vertices.len(), 8);
    }

    #[test]
    fn one_dimensional() {
        let pts = vec![vec![3.0], vec![-1.0], vec![2.0]];
        let p = enumerate_facets(&pts).unwrap();
        assert_eq!(p.num_facets(), 2);
        assert!(p.contains(&[0.0], 0.0).unwrap());
        assert!(!p.contains(&[3.5], 0.0).unwrap());
    }

    #[test]
    fn degenerate_and_small_inputs() {
        let collinear = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]];
        assert!(matches!(enumerate_facets(&collinear), Err(Error::DegenerateInput(_))));
        let two = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        assert!(matches!(enumerate_facets(&two), Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn containment() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let p = enumerate_facets(&pts).unwrap();
        assert!(p.contains(&[0.5, 0.5], 0.0).unwrap());
        assert!(p.contains(&[1.0, 1.0], 0.0).unwrap());
        assert!(!p.contains(&[2.0, 2.0], 1e-9).unwrap());
        assert!(matches!(p.contains(&[0.0], 0.0), Err(Error::DimMismatch(_))));
    }

    #[test]
    fn facet_dump_round_trip() {
        let pts = vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let p = enumerate_facets(&pts).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let q = HPolytope::read_csv(buf.as_slice()).unwrap();
        assert_eq!(q.dim, 3);
        assert_eq!(q.facets, p.facets);
    }
}
