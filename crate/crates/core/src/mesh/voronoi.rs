//! Clipped Voronoi meshes with Lloyd smoothing.
//!
//! Each cell is obtained by clipping the bounding rectangle against the
//! perpendicular bisectors between its seed and the other seeds, visited by
//! increasing distance. Clipping stops once the next seed is farther than
//! twice the current cell radius, since its bisector can no longer cut the
//! cell.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{polygon_area, polygon_centroid, MeshError, Point2, PolyMesh, Rect, Result};

#[derive(Debug, Clone, Copy)]
pub struct VoronoiOptions {
    /// Perturb-and-retry cap for coincident seeds or failed topology.
    pub max_retries: usize,
    /// Relative (to the domain diagonal) distance below which two seeds or
    /// two vertices are considered identical.
    pub merge_tol: f64,
}

impl Default for VoronoiOptions {
    fn default() -> Self {
        Self { max_retries: 10, merge_tol: 1e-10 }
    }
}

/// Voronoi mesh of `n_seeds` uniformly random seeds in `rect`, smoothed by
/// `lloyd_iterations` centroidal updates. Bit-reproducible for a fixed
/// `rng_seed`.
pub fn generate_voronoi(rect: Rect, n_seeds: usize, lloyd_iterations: usize, rng_seed: u64) -> Result<PolyMesh> {
    generate_voronoi_with(rect, n_seeds, lloyd_iterations, rng_seed, VoronoiOptions::default())
}

pub fn generate_voronoi_with(
    rect: Rect,
    n_seeds: usize,
    lloyd_iterations: usize,
    rng_seed: u64,
    opts: VoronoiOptions,
) -> Result<PolyMesh> {
    if n_seeds == 0 {
        return Err(MeshError::NoSeeds);
    }
    if rect.is_degenerate() {
        return Err(MeshError::DegenerateRect(rect));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut seeds: Vec<Point2> =
        (0..n_seeds).map(|_| Point2::new(rng.gen_range(rect.x0..rect.x1), rng.gen_range(rect.y0..rect.y1))).collect();
    let tol = opts.merge_tol * rect.diagonal();
    let mut retries = 0;

    let mut it = 0;
    while it < lloyd_iterations {
        match clipped_cells(&seeds, &rect, tol) {
            Ok(cells) => {
                seeds = cells.iter().map(|c| polygon_centroid(c)).collect();
                it += 1;
            }
            Err(bad) => {
                retries += 1;
                if retries > opts.max_retries {
                    return Err(MeshError::DuplicateSeeds(opts.max_retries));
                }
                perturb(&mut seeds, &bad, &rect, &mut rng);
            }
        }
    }

    loop {
        let attempt = clipped_cells(&seeds, &rect, tol).map_err(Some).and_then(|cells| {
            let (vertices, cells) = merge_vertices(&cells, tol);
            PolyMesh::new(vertices, cells, rect).map_err(|e| {
                log::debug!("voronoi topology failed: {e}");
                None
            })
        });
        match attempt {
            Ok(mesh) => return Ok(mesh),
            Err(bad) => {
                retries += 1;
                if retries > opts.max_retries {
                    return Err(MeshError::DuplicateSeeds(opts.max_retries));
                }
                let bad = bad.unwrap_or_else(|| (0..seeds.len()).collect());
                perturb(&mut seeds, &bad, &rect, &mut rng);
            }
        }
    }
}

fn perturb(seeds: &mut [Point2], bad: &[usize], rect: &Rect, rng: &mut ChaCha8Rng) {
    let eps = 1e-6 * rect.diagonal();
    for &i in bad {
        let p = seeds[i];
        let x = (p.x + rng.gen_range(-eps..eps)).clamp(rect.x0, rect.x1);
        let y = (p.y + rng.gen_range(-eps..eps)).clamp(rect.y0, rect.y1);
        seeds[i] = Point2::new(x, y);
    }
}

/// Clips `poly` (convex, counter-clockwise) to the half-plane `n·x <= c`.
fn clip(poly: &[Point2], n: Point2, c: f64) -> Vec<Point2> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let len = poly.len();
    for i in 0..len {
        let p = poly[i];
        let q = poly[(i + 1) % len];
        let dp = n.dot(p) - c;
        let dq = n.dot(q) - c;
        if dp <= 0.0 {
            out.push(p);
        }
        if (dp < 0.0 && dq > 0.0) || (dp > 0.0 && dq < 0.0) {
            let t = dp / (dp - dq);
            out.push(p + (q - p) * t);
        }
    }
    out
}

/// Voronoi regions of all seeds clipped to `rect`. On failure returns the
/// indices of seeds whose regions collapsed.
fn clipped_cells(seeds: &[Point2], rect: &Rect, tol: f64) -> std::result::Result<Vec<Vec<Point2>>, Vec<usize>> {
    let n = seeds.len();
    let mut cells = Vec::with_capacity(n);
    let mut bad = Vec::new();
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(n);
    for i in 0..n {
        let si = seeds[i];
        order.clear();
        order.extend((0..n).filter(|&j| j != i).map(|j| {
            let d = seeds[j] - si;
            (d.dot(d), j)
        }));
        if order.iter().any(|&(d2, _)| d2.sqrt() <= tol) {
            bad.push(i);
            cells.push(Vec::new());
            continue;
        }
        let k = order.len().min(48);
        if k < order.len() {
            order.select_nth_unstable_by(k, |a, b| a.partial_cmp(b).unwrap());
        }
        order[..k].sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut poly: Vec<Point2> = rect.corners().to_vec();
        let mut sorted_tail = false;
        let mut idx = 0;
        while idx < order.len() {
            if idx == k && !sorted_tail {
                order[k..].sort_by(|a, b| a.partial_cmp(b).unwrap());
                sorted_tail = true;
            }
            let (d2, j) = order[idx];
            let r2 = poly.iter().map(|&v| (v - si).dot(v - si)).fold(0.0, f64::max);
            if d2 > 4.0 * r2 {
                break;
            }
            let nrm = seeds[j] - si;
            let mid = (seeds[j] + si) * 0.5;
            poly = clip(&poly, nrm, nrm.dot(mid));
            if poly.len() < 3 {
                break;
            }
            idx += 1;
        }
        if poly.len() < 3 || !(polygon_area(&poly) > 0.0) {
            bad.push(i);
        }
        cells.push(poly);
    }
    if bad.is_empty() {
        Ok(cells)
    } else {
        Err(bad)
    }
}

/// Merges coincident vertices across cells and drops repeated consecutive
/// vertices inside each cell.
fn merge_vertices(cells: &[Vec<Point2>], tol: f64) -> (Vec<Point2>, Vec<Vec<usize>>) {
    let mut vertices: Vec<Point2> = Vec::new();
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let key = |p: Point2| ((p.x / tol).floor() as i64, (p.y / tol).floor() as i64);
    let mut out = Vec::with_capacity(cells.len());
    for poly in cells {
        let mut ids: Vec<usize> = Vec::with_capacity(poly.len());
        for &p in poly {
            let (kx, ky) = key(p);
            let mut found = None;
            'search: for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(list) = buckets.get(&(kx + dx, ky + dy)) {
                        for &v in list {
                            if vertices[v].dist(p) <= tol {
                                found = Some(v);
                                break 'search;
                            }
                        }
                    }
                }
            }
            let id = found.unwrap_or_else(|| {
                vertices.push(p);
                buckets.entry((kx, ky)).or_default().push(vertices.len() - 1);
                vertices.len() - 1
            });
            if ids.last() != Some(&id) {
                ids.push(id);
            }
        }
        while ids.len() > 1 && ids.first() == ids.last() {
            ids.pop();
        }
        out.push(ids);
    }
    (vertices, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_seed_is_the_rectangle() {
        let r = Rect::new(0.0, 3.0, -1.0, 1.0);
        let m = generate_voronoi(r, 1, 0, 7).unwrap();
        assert_eq!(m.n_cells(), 1);
        assert_eq!(m.cells[0].len(), 4);
        assert!((m.geometry[0].area - r.area()).abs() < 1e-14);
    }

    #[test]
    fn clip_half_square() {
        let sq = Rect::new(0.0, 1.0, 0.0, 1.0).corners().to_vec();
        let h = clip(&sq, Point2::new(1.0, 0.0), 0.5);
        assert!((polygon_area(&h) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn coincident_seeds_are_perturbed() {
        let seeds = vec![Point2::new(0.5, 0.5), Point2::new(0.5, 0.5), Point2::new(0.2, 0.8)];
        let r = Rect::new(0.0, 1.0, 0.0, 1.0);
        let bad = clipped_cells(&seeds, &r, 1e-10).unwrap_err();
        assert_eq!(bad, vec![0, 1]);
    }

    #[test]
    fn small_voronoi_is_valid() {
        let m = generate_voronoi(Rect::new(0.0, 1.0, 0.0, 1.0), 30, 5, 3).unwrap();
        assert_eq!(m.n_cells(), 30);
        let a: f64 = m.geometry.iter().map(|g| g.area).sum();
        assert!((a - 1.0).abs() < 1e-12);
    }
}
