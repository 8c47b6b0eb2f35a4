/// One axis of a hypercube: `[lo, hi)`, or `[lo, hi]` when `closed`.
///
/// The last interval along an axis of a potential's support is closed; every
/// other interval is half-open, so adjacent pieces never share a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub closed: bool,
}

impl Interval {
    pub fn half_open(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            closed: false,
        }
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            closed: true,
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lo <= x && x < self.hi) || (self.closed && x == self.hi)
    }

    /// Intersection with a non-empty interior, or `None`.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let (hi, closed) = if self.hi < other.hi {
            (self.hi, self.closed)
        } else if other.hi < self.hi {
            (other.hi, other.closed)
        } else {
            (self.hi, self.closed && other.closed)
        };
        (lo < hi).then_some(Interval { lo, hi, closed })
    }

    /// Whether `inner` lies inside `self` (as sets of interior points).
    pub fn covers(&self, inner: &Interval) -> bool {
        self.lo <= inner.lo && inner.hi <= self.hi
    }
}
