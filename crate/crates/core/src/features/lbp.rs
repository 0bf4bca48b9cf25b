//! 8-neighbour local binary patterns grouped into 32 bins.
//!
//! Neighbour `k` sets bit `k` when its value is at least the center's. The
//! order runs counter-clockwise from east: E, NE, N, NW, W, SW, S, SE.
//! Group `g` sums raw codes `8g..8g+7`.

use crate::grid::{BinaryMask, Grid};

pub const NEIGHBOURS: [(isize, isize); 8] = [
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

pub const GROUPS: usize = 32;

/// Code at an interior pixel (caller guarantees the 3×3 window is in frame).
pub fn code_at(gray: &Grid<f64>, x: usize, y: usize) -> u8 {
    let c = *gray.get(x, y);
    NEIGHBOURS.iter().enumerate().fold(0u8, |code, (k, (dx, dy))| {
        let v = *gray.get((x as isize + dx) as usize, (y as isize + dy) as usize);
        if v >= c {
            code | (1 << k)
        } else {
            code
        }
    })
}

/// 256-bin code histogram over domain pixels with a full in-frame
/// neighbourhood.
pub fn raw_histogram(gray: &Grid<f64>, domain: &BinaryMask) -> [u64; 256] {
    let mut hist = [0u64; 256];
    let (w, h) = (gray.width(), gray.height());
    for (x, y) in domain.pixels() {
        if x == 0 || y == 0 || x + 1 >= w || y + 1 >= h {
            continue;
        }
        hist[code_at(gray, x, y) as usize] += 1;
    }
    hist
}

/// Sums contiguous runs of 8 raw bins.
pub fn group(raw: &[u64; 256]) -> [u64; GROUPS] {
    let mut out = [0u64; GROUPS];
    for (i, &v) in raw.iter().enumerate() {
        out[i / 8] += v;
    }
    out
}

/// Normalized 32-group histogram; `None` when no pixel qualifies.
pub fn lbp_histogram(gray: &Grid<f64>, domain: &BinaryMask) -> Option<[f64; GROUPS]> {
    let grouped = group(&raw_histogram(gray, domain));
    let total: u64 = grouped.iter().sum();
    (total > 0).then(|| grouped.map(|v| v as f64 / total as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_region_is_all_ones() {
        let g = Grid::filled(9, 9, 42.0);
        assert_eq!(code_at(&g, 4, 4), 255);
        let h = lbp_histogram(&g, &BinaryMask::full(9, 9)).unwrap();
        assert_eq!(h[31], 1.0);
        assert_eq!(h.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn manual_bit_assembly() {
        // E, NE, N, NW, W, SW, S, SE = 120, 90, 90, 90, 120, 90, 90, 90.
        let values = [[90.0, 90.0, 90.0], [120.0, 100.0, 120.0], [90.0, 90.0, 90.0]];
        let g = Grid::from_fn(3, 3, |x, y| values[y][x]);
        let code = code_at(&g, 1, 1);
        assert_eq!(code, 17);
        assert_eq!(code / 8, 2);
    }

    #[test]
    fn raw_count_equals_valid_pixels() {
        let g = Grid::from_fn(20, 20, |x, y| ((x * 7) ^ (y * 3)) as f64);
        let m = BinaryMask::disk(20, 20, 3.0, 10.0, 6.0);
        let valid = m
            .pixels()
            .filter(|&(x, y)| x > 0 && y > 0 && x < 19 && y < 19)
            .count() as u64;
        let raw = raw_histogram(&g, &m);
        assert_eq!(raw.iter().sum::<u64>(), valid);
        assert_eq!(group(&raw).iter().sum::<u64>(), valid);
    }

    #[test]
    fn empty_domain_yields_none() {
        assert!(lbp_histogram(&Grid::filled(5, 5, 0.0), &BinaryMask::empty(5, 5)).is_none());
    }
}
