//! Binary morphology with disk structuring elements, connected components
//! and contour-based shape measures.
//!
//! Disk dilation is computed through an exact squared Euclidean distance
//! transform: a pixel belongs to `dilate(M, r)` iff its squared distance to
//! the nearest foreground pixel is at most `r²`, which is the same set as a
//! sliding disk of radius `r`.

use std::collections::VecDeque;
use std::f64::consts::PI;

use crate::grid::{BinaryMask, Grid};

const FAR: f64 = 1e20;

/// 1-D squared distance transform of a sampled function (lower envelope of
/// parabolas).
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] {
                if k == 0 {
                    v[0] = q;
                    z[0] = f64::NEG_INFINITY;
                    z[1] = f64::INFINITY;
                    break;
                }
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Squared Euclidean distance from every pixel to the nearest foreground
/// pixel (`≥ 1e20` when the mask is empty).
pub fn squared_distance_to(mask: &BinaryMask) -> Grid<f64> {
    let (w, h) = (mask.width(), mask.height());
    let n = w.max(h);
    let mut f = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];
    let mut grid = Grid::from_fn(w, h, |x, y| if mask.get(x, y) { 0.0 } else { FAR });
    for x in 0..w {
        for y in 0..h {
            f[y] = *grid.get(x, y);
        }
        edt_1d(&f[..h], &mut out[..h], &mut v[..h], &mut z[..=h]);
        for y in 0..h {
            *grid.get_mut(x, y) = out[y];
        }
    }
    for y in 0..h {
        let row = &mut grid.as_mut_slice()[y * w..(y + 1) * w];
        f[..w].copy_from_slice(row);
        edt_1d(&f[..w], &mut out[..w], &mut v[..w], &mut z[..=w]);
        row.copy_from_slice(&out[..w]);
    }
    grid
}

/// Dilation by a disk of integer radius; radius 0 is the identity.
pub fn dilate(mask: &BinaryMask, radius: usize) -> BinaryMask {
    if radius == 0 || mask.is_empty() {
        return mask.clone();
    }
    let limit = (radius * radius) as f64;
    let d = squared_distance_to(mask);
    BinaryMask::from_grid(d.map(|&v| v <= limit))
}

/// Erosion by a disk. Pixels outside the frame count as foreground, so the
/// frame edge itself does not erode.
pub fn erode(mask: &BinaryMask, radius: usize) -> BinaryMask {
    if radius == 0 {
        return mask.clone();
    }
    dilate(&mask.complement(), radius).complement()
}

pub fn open(mask: &BinaryMask, radius: usize) -> BinaryMask {
    dilate(&erode(mask, radius), radius)
}

pub fn close(mask: &BinaryMask, radius: usize) -> BinaryMask {
    erode(&dilate(mask, radius), radius)
}

/// Fills background regions not 4-connected to the frame border.
pub fn fill_holes(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    let mut outside = vec![false; w * h];
    let mut queue = VecDeque::new();
    let seed = |x: usize, y: usize, outside: &mut Vec<bool>, queue: &mut VecDeque<(usize, usize)>| {
        if !mask.get(x, y) && !outside[y * w + x] {
            outside[y * w + x] = true;
            queue.push_back((x, y));
        }
    };
    for x in 0..w {
        seed(x, 0, &mut outside, &mut queue);
        seed(x, h - 1, &mut outside, &mut queue);
    }
    for y in 0..h {
        seed(0, y, &mut outside, &mut queue);
        seed(w - 1, y, &mut outside, &mut queue);
    }
    while let Some((x, y)) = queue.pop_front() {
        let neighbours = [
            (x.wrapping_sub(1), y),
            (x + 1, y),
            (x, y.wrapping_sub(1)),
            (x, y + 1),
        ];
        for (nx, ny) in neighbours {
            if nx < w && ny < h {
                seed(nx, ny, &mut outside, &mut queue);
            }
        }
    }
    BinaryMask::from_fn(w, h, |x, y| !outside[y * w + x])
}

/// 8-connected components, each as its pixel list in raster order.
/// Components are ordered by their first (topmost-leftmost) pixel.
pub fn components(mask: &BinaryMask) -> Vec<Vec<(usize, usize)>> {
    let (w, h) = (mask.width(), mask.height());
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    for start in 0..w * h {
        if seen[start] || !mask.as_slice()[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut pixels = Vec::new();
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            pixels.push((x as usize, y as usize));
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if !seen[j] && mask.as_slice()[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        pixels.sort_unstable_by_key(|&(x, y)| (y, x));
        out.push(pixels);
    }
    out
}

pub fn mask_from_pixels(width: usize, height: usize, pixels: &[(usize, usize)]) -> BinaryMask {
    let mut m = BinaryMask::empty(width, height);
    for &(x, y) in pixels {
        m.set(x, y, true);
    }
    m
}

/// Keeps the 8-connected component containing `(x, y)`; empty if that pixel
/// is background.
pub fn component_containing(mask: &BinaryMask, x: usize, y: usize) -> BinaryMask {
    if !mask.get(x, y) {
        return BinaryMask::empty(mask.width(), mask.height());
    }
    components(mask)
        .into_iter()
        .find(|c| c.binary_search_by_key(&(y, x), |&(px, py)| (py, px)).is_ok())
        .map(|c| mask_from_pixels(mask.width(), mask.height(), &c))
        .unwrap_or_else(|| BinaryMask::empty(mask.width(), mask.height()))
}

// Chain-code directions, counter-clockwise from east (y grows downward).
const DIRS: [(isize, isize); 8] = [
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// Freeman chain code of the outer boundary of the component containing the
/// topmost-leftmost foreground pixel (Moore tracing, Jacob's stop rule).
pub fn boundary_chain(mask: &BinaryMask) -> Vec<u8> {
    let Some(start) = mask.pixels().next() else {
        return Vec::new();
    };
    let start = (start.0 as isize, start.1 as isize);
    let mut codes = Vec::new();
    let mut cur = start;
    // The west neighbour of the topmost-leftmost pixel is background.
    let mut search_from = 4usize;
    let mut first_move: Option<u8> = None;
    let limit = 4 * mask.width() * mask.height() + 8;
    loop {
        let mut step = None;
        for i in 0..8 {
            let d = (search_from + i) % 8;
            let (nx, ny) = (cur.0 + DIRS[d].0, cur.1 + DIRS[d].1);
            if mask.at(nx, ny) {
                step = Some(d);
                break;
            }
        }
        let Some(d) = step else {
            break; // isolated pixel
        };
        if cur == start && first_move == Some(d as u8) {
            break;
        }
        if first_move.is_none() {
            first_move = Some(d as u8);
        }
        codes.push(d as u8);
        cur = (cur.0 + DIRS[d].0, cur.1 + DIRS[d].1);
        search_from = (d + 5) % 8;
        if codes.len() > limit {
            break;
        }
    }
    codes
}

/// Boundary length from a chain code with corner correction
/// (`0.980·even + 1.406·odd − 0.091·corners`), plus π to move from the
/// pixel-center contour out to the pixel-edge outline.
pub fn chain_perimeter(codes: &[u8]) -> f64 {
    let even = codes.iter().filter(|&&c| c % 2 == 0).count() as f64;
    let odd = codes.len() as f64 - even;
    let corners = (0..codes.len())
        .filter(|&i| codes[i] != codes[(i + codes.len() - 1) % codes.len()])
        .count() as f64;
    0.980 * even + 1.406 * odd - 0.091 * corners + PI
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Convex hull of pixel centers, counter-clockwise (monotone chain).
pub fn convex_hull(pixels: &[(usize, usize)]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = pixels.iter().map(|&(x, y)| (x as f64, y as f64)).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Perimeter of the hull outline (center polygon + π, matching
/// [`chain_perimeter`]).
pub fn hull_perimeter(hull: &[(f64, f64)]) -> f64 {
    let poly: f64 = match hull.len() {
        0 | 1 => 0.0,
        2 => 2.0 * ((hull[1].0 - hull[0].0).hypot(hull[1].1 - hull[0].1)),
        n => (0..n)
            .map(|i| {
                let (a, b) = (hull[i], hull[(i + 1) % n]);
                (b.0 - a.0).hypot(b.1 - a.1)
            })
            .sum(),
    };
    poly + PI
}

/// Number of pixel centers lying inside or on the hull polygon.
pub fn hull_pixel_count(hull: &[(f64, f64)], fallback: usize) -> usize {
    if hull.len() < 3 {
        return fallback;
    }
    let min_x = hull.iter().map(|p| p.0).fold(f64::INFINITY, f64::min) as usize;
    let max_x = hull.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max) as usize;
    let min_y = hull.iter().map(|p| p.1).fold(f64::INFINITY, f64::min) as usize;
    let max_y = hull.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max) as usize;
    let n = hull.len();
    let mut count = 0;
    for y in min_y..=max_y {
        for x in min_x..=max_x {
            let p = (x as f64, y as f64);
            if (0..n).all(|i| cross(hull[i], hull[(i + 1) % n], p) >= -1e-9) {
                count += 1;
            }
        }
    }
    count.max(fallback)
}

/// Shape descriptors of one connected pixel set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeMetrics {
    pub area: usize,
    pub perimeter: f64,
    /// `4πA/P²`, clamped to at most 1.
    pub circularity: f64,
    /// Area over rasterized convex-hull area.
    pub solidity: f64,
    pub hull_perimeter: f64,
    /// `P / P_hull`, at least 1.
    pub roughness: f64,
}

pub fn shape_metrics(mask: &BinaryMask) -> ShapeMetrics {
    let pixels: Vec<(usize, usize)> = mask.pixels().collect();
    let area = pixels.len();
    if area == 0 {
        return ShapeMetrics {
            area: 0,
            perimeter: 0.0,
            circularity: 0.0,
            solidity: 0.0,
            hull_perimeter: 0.0,
            roughness: 1.0,
        };
    }
    let perimeter = chain_perimeter(&boundary_chain(mask));
    let hull = convex_hull(&pixels);
    let hull_area = hull_pixel_count(&hull, area);
    let hull_perimeter = hull_perimeter(&hull);
    ShapeMetrics {
        area,
        perimeter,
        circularity: (4.0 * PI * area as f64 / (perimeter * perimeter)).min(1.0),
        solidity: area as f64 / hull_area as f64,
        hull_perimeter,
        roughness: (perimeter / hull_perimeter).max(1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_dilate(mask: &BinaryMask, r: usize) -> BinaryMask {
        let r2 = (r * r) as isize;
        let ri = r as isize;
        BinaryMask::from_fn(mask.width(), mask.height(), |x, y| {
            for dy in -ri..=ri {
                for dx in -ri..=ri {
                    if dx * dx + dy * dy <= r2 && mask.at(x as isize + dx, y as isize + dy) {
                        return true;
                    }
                }
            }
            false
        })
    }

    fn square(n: usize, x0: usize, side: usize) -> BinaryMask {
        BinaryMask::from_fn(n, n, |x, y| (x0..x0 + side).contains(&x) && (x0..x0 + side).contains(&y))
    }

    #[test]
    fn dilate_single_pixel_gives_disk() {
        let mut m = BinaryMask::empty(21, 21);
        m.set(10, 10, true);
        assert_eq!(dilate(&m, 5), BinaryMask::disk(21, 21, 10.0, 10.0, 5.0));
        assert_eq!(dilate(&m, 0), m);
    }

    #[test]
    fn opening_removes_isolated_pixel() {
        let mut m = BinaryMask::disk(40, 40, 20.0, 20.0, 8.0);
        m.set(2, 2, true);
        let out = open(&m, 2);
        assert!(!out.get(2, 2));
        assert!(out.get(20, 20));
    }

    #[test]
    fn holes_are_filled() {
        let mut m = BinaryMask::disk(50, 50, 25.0, 25.0, 12.0);
        for (x, y) in [(25, 25), (26, 25), (25, 26)] {
            m.set(x, y, false);
        }
        assert_eq!(fill_holes(&m), BinaryMask::disk(50, 50, 25.0, 25.0, 12.0));
    }

    #[test]
    fn components_are_eight_connected() {
        let mut m = BinaryMask::empty(6, 6);
        m.set(1, 1, true);
        m.set(2, 2, true);
        m.set(5, 5, true);
        let c = components(&m);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0], vec![(1, 1), (2, 2)]);
    }

    #[test]
    fn disk_shape_is_near_ideal() {
        let m = BinaryMask::disk(101, 101, 50.0, 50.0, 30.0);
        let s = shape_metrics(&m);
        assert!(s.circularity >= 0.95, "{s:?}");
        assert!(s.solidity >= 0.98, "{s:?}");
        assert!(s.roughness <= 1.05 && s.roughness >= 1.0, "{s:?}");
    }

    #[test]
    fn square_circularity_is_near_pi_over_four() {
        let s = shape_metrics(&square(100, 20, 40));
        assert!((s.circularity - PI / 4.0).abs() < 0.05, "{s:?}");
        assert!((s.solidity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn concave_shape_has_lower_solidity() {
        let m = BinaryMask::from_fn(60, 60, |x, y| {
            (10..50).contains(&x) && (10..50).contains(&y) && !((25..50).contains(&x) && (20..40).contains(&y))
        });
        let s = shape_metrics(&m);
        assert!(s.solidity < 0.8);
        assert!(s.roughness > 1.0);
    }

    #[test]
    fn chain_of_square_is_closed() {
        let codes = boundary_chain(&square(20, 5, 4));
        assert_eq!(codes.len(), 12);
        let (mut x, mut y) = (0isize, 0isize);
        for c in codes {
            x += DIRS[c as usize].0;
            y += DIRS[c as usize].1;
        }
        assert_eq!((x, y), (0, 0));
    }

    proptest! {
        #[test]
        fn dilation_matches_sliding_disk(bits in proptest::collection::vec(proptest::bool::weighted(0.05), 24 * 19), r in 0usize..6) {
            let m = BinaryMask::from_grid(Grid::from_vec(24, 19, bits));
            prop_assert_eq!(dilate(&m, r), brute_dilate(&m, r));
        }

        #[test]
        fn dilation_is_extensive_and_monotone(bits in proptest::collection::vec(proptest::bool::weighted(0.1), 20 * 20), r in 0usize..5) {
            let m = BinaryMask::from_grid(Grid::from_vec(20, 20, bits));
            let a = dilate(&m, r);
            let b = dilate(&m, r + 1);
            prop_assert!(m.is_subset_of(&a));
            prop_assert!(a.is_subset_of(&b));
        }
    }
}
