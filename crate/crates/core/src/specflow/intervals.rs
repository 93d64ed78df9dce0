/// Finite union of disjoint closed intervals, sorted.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalSet {
    parts: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { parts: Vec::new() }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        if lo <= hi {
            IntervalSet {
                parts: vec![(lo, hi)],
            }
        } else {
            Self::empty()
        }
    }

    pub fn parts(&self) -> &[(f64, f64)] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.parts.iter().any(|&(a, b)| a <= x && x <= b)
    }

    /// Removes the open interval `(lo, hi)`.
    pub fn remove(&mut self, lo: f64, hi: f64) {
        if lo >= hi {
            return;
        }
        let mut out = Vec::with_capacity(self.parts.len() + 1);
        for &(a, b) in &self.parts {
            if b <= lo || a >= hi {
                out.push((a, b));
                continue;
            }
            if a < lo {
                out.push((a, lo));
            }
            if b > hi {
                out.push((hi, b));
            }
        }
        self.parts = out;
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.parts.len() && j < other.parts.len() {
            let (a0, a1) = self.parts[i];
            let (b0, b1) = other.parts[j];
            let lo = a0.max(b0);
            let hi = a1.min(b1);
            if lo <= hi {
                out.push((lo, hi));
            }
            if a1 < b1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalSet { parts: out }
    }

    /// `0` when `prefer_zero` and admissible; otherwise the midpoint of the
    /// widest part, ties going to the part closest to `0`.
    pub fn choose(&self, prefer_zero: bool) -> Option<f64> {
        if prefer_zero && self.contains(0.0) {
            return Some(0.0);
        }
        let dist0 = |&(a, b): &(f64, f64)| {
            if a <= 0.0 && 0.0 <= b {
                0.0
            } else {
                a.abs().min(b.abs())
            }
        };
        let width = |&(a, b): &(f64, f64)| b - a;
        let best = self.parts.iter().max_by(|x, y| {
            let (wx, wy) = (width(x), width(y));
            let tol = 1e-12 * wx.abs().max(wy.abs()).max(f64::MIN_POSITIVE);
            if (wx - wy).abs() <= tol {
                dist0(y).total_cmp(&dist0(x))
            } else {
                wx.total_cmp(&wy)
            }
        })?;
        Some(0.5 * (best.0 + best.1))
    }
}
