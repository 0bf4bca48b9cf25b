//! Row-major 2-D rasters and binary masks.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl<T> Grid<T> {
    /// Panics if `data.len() != width * height`.
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), width * height, "grid data length mismatch");
        Self {
            width,
            height,
            data,
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn same_shape<U>(&self, other: &Grid<U>) -> bool {
        self.width == other.width && self.height == other.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[y * self.width + x]
    }

    #[inline]
    pub fn get_mut(&mut self, x: usize, y: usize) -> &mut T {
        &mut self.data[y * self.width + x]
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Signed lookup; `None` outside the frame.
    #[inline]
    pub fn at(&self, x: isize, y: isize) -> Option<&T> {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            None
        } else {
            Some(&self.data[y as usize * self.width + x as usize])
        }
    }
}

impl<T: Copy> Grid<T> {
    /// Edge-replicated lookup.
    #[inline]
    pub fn clamped(&self, x: isize, y: isize) -> T {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.data[cy * self.width + cx]
    }

    pub fn flip_horizontal(&self) -> Self {
        Grid::from_fn(self.width, self.height, |x, y| {
            *self.get(self.width - 1 - x, y)
        })
    }

    pub fn flip_vertical(&self) -> Self {
        Grid::from_fn(self.width, self.height, |x, y| {
            *self.get(x, self.height - 1 - y)
        })
    }

    /// Rotates 90° counter-clockwise (output is `height × width`).
    pub fn rotate90(&self) -> Self {
        Grid::from_fn(self.height, self.width, |x, y| {
            *self.get(self.width - 1 - y, x)
        })
    }
}

/// A boolean raster, `true` = foreground.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryMask(Grid<bool>);

impl BinaryMask {
    pub fn empty(width: usize, height: usize) -> Self {
        Self(Grid::filled(width, height, false))
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self(Grid::filled(width, height, true))
    }

    pub fn from_grid(grid: Grid<bool>) -> Self {
        Self(grid)
    }

    pub fn from_fn(width: usize, height: usize, f: impl FnMut(usize, usize) -> bool) -> Self {
        Self(Grid::from_fn(width, height, f))
    }

    /// Filled disk of the given radius (pixel centers with `dx²+dy² ≤ r²`).
    pub fn disk(width: usize, height: usize, cx: f64, cy: f64, radius: f64) -> Self {
        Self::from_fn(width, height, |x, y| {
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            dx * dx + dy * dy <= radius * radius
        })
    }

    pub fn grid(&self) -> &Grid<bool> {
        &self.0
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        *self.0.get(x, y)
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        *self.0.get_mut(x, y) = value;
    }

    #[inline]
    pub fn at(&self, x: isize, y: isize) -> bool {
        self.0.at(x, y).copied().unwrap_or(false)
    }

    pub fn as_slice(&self) -> &[bool] {
        self.0.as_slice()
    }

    pub fn count(&self) -> usize {
        self.0.as_slice().iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.0.as_slice().iter().any(|&b| b)
    }

    pub fn same_shape(&self, other: &BinaryMask) -> bool {
        self.0.same_shape(&other.0)
    }

    fn zip_with(&self, other: &BinaryMask, f: impl Fn(bool, bool) -> bool) -> BinaryMask {
        assert!(self.same_shape(other), "mask shape mismatch");
        let data = self
            .as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(&a, &b)| f(a, b))
            .collect();
        BinaryMask(Grid::from_vec(self.width(), self.height(), data))
    }

    pub fn union(&self, other: &BinaryMask) -> BinaryMask {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &BinaryMask) -> BinaryMask {
        self.zip_with(other, |a, b| a && b)
    }

    /// `self \ other`.
    pub fn difference(&self, other: &BinaryMask) -> BinaryMask {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn complement(&self) -> BinaryMask {
        BinaryMask(self.0.map(|&b| !b))
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.same_shape(other)
            && self
                .as_slice()
                .iter()
                .zip(other.as_slice())
                .all(|(&a, &b)| !a || b)
    }

    pub fn is_disjoint(&self, other: &BinaryMask) -> bool {
        self.same_shape(other)
            && self
                .as_slice()
                .iter()
                .zip(other.as_slice())
                .all(|(&a, &b)| !(a && b))
    }

    /// Coordinates of foreground pixels in raster order.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width();
        self.as_slice()
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i % w, i / w))
    }

    pub fn centroid(&self) -> Option<(f64, f64)> {
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
        for (x, y) in self.pixels() {
            sx += x as f64;
            sy += y as f64;
            n += 1;
        }
        (n > 0).then(|| (sx / n as f64, sy / n as f64))
    }

    pub fn touches_border(&self) -> bool {
        let (w, h) = (self.width(), self.height());
        self.pixels()
            .any(|(x, y)| x == 0 || y == 0 || x + 1 == w || y + 1 == h)
    }

    /// Dice overlap `2|A∩B| / (|A|+|B|)`.
    pub fn dice(&self, other: &BinaryMask) -> f64 {
        let inter = self.intersection(other).count();
        let total = self.count() + other.count();
        if total == 0 {
            1.0
        } else {
            2.0 * inter as f64 / total as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_algebra_basics() {
        let a = BinaryMask::from_fn(4, 1, |x, _| x < 2);
        let b = BinaryMask::from_fn(4, 1, |x, _| x >= 1);
        assert_eq!(a.intersection(&b).count(), 1);
        assert_eq!(a.union(&b).count(), 4);
        assert_eq!(a.difference(&b).count(), 1);
        assert!(a.difference(&b).is_disjoint(&b));
        assert!(a.intersection(&b).is_subset_of(&a));
    }

    #[test]
    fn rotate_four_times_is_identity() {
        let g = Grid::from_fn(3, 2, |x, y| x + 10 * y);
        assert_eq!(g.rotate90().rotate90().rotate90().rotate90(), g);
        assert_eq!(g.rotate90().width(), 2);
    }

    #[test]
    fn border_detection() {
        let inner = BinaryMask::disk(20, 20, 10.0, 10.0, 3.0);
        assert!(!inner.touches_border());
        let edge = BinaryMask::disk(20, 20, 1.0, 10.0, 3.0);
        assert!(edge.touches_border());
    }
}
