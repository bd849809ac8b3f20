//! Minimal double-double arithmetic: a value is an unevaluated sum of two
//! floats carrying roughly 31 significant digits. The consensus coefficient
//! pipeline runs on this because expanding a Newton interpolant into the
//! power basis cancels catastrophically once a dozen nodes crowd into
//! [0, 1], and the residual gate needs an evaluation it can trust.

/// Errorless sum of two floats: returns `(fl(a + b), roundoff)`.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

/// As [`two_sum`] but assumes `|a| >= |b|`, saving half the work.
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

/// Errorless product via fused multiply-add: returns `(fl(a * b), roundoff)`.
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

/// A double-double value `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    pub(crate) const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub(crate) fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    /// Exact difference of two floats.
    pub(crate) fn diff(a: f64, b: f64) -> Self {
        let (hi, lo) = two_sum(a, -b);
        Dd { hi, lo }
    }

    pub(crate) fn value(self) -> f64 {
        self.hi + self.lo
    }

    pub(crate) fn add(self, o: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, o.hi);
        let (t1, t2) = two_sum(self.lo, o.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Dd { hi, lo }
    }

    pub(crate) fn sub(self, o: Dd) -> Dd {
        self.add(Dd { hi: -o.hi, lo: -o.lo })
    }

    /// Full product; only the tests need it (to round-trip [`Dd::div`]).
    #[cfg(test)]
    pub(crate) fn mul(self, o: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, o.hi);
        let p2 = p2 + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    pub(crate) fn mul_f64(self, b: f64) -> Dd {
        let (p1, p2) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p1, p2 + self.lo * b);
        Dd { hi, lo }
    }

    /// Quotient with two Newton corrections, accurate to the full width.
    pub(crate) fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let mut r = self.sub(o.mul_f64(q1));
        let q2 = r.hi / o.hi;
        r = r.sub(o.mul_f64(q2));
        let q3 = r.hi / o.hi;
        let (s, e) = quick_two_sum(q1, q2);
        let (hi, lo) = quick_two_sum(s, e + q3);
        Dd { hi, lo }
    }
}
