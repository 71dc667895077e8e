//! Row activity bounds with infinity counting.

/// Interval of values a linear expression can take under the current bounds.
///
/// Infinite contributions are counted instead of summed, so the finite parts stay usable
/// when a single term is unbounded.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Activity {
    pub min_finite: f64,
    pub max_finite: f64,
    pub inf_count_min: u32,
    pub inf_count_max: u32,
}

/// `(min, max)` contribution of `a * x` with `x` in `[l, u]`; `None` marks an infinite side.
pub fn term_range(a: f64, l: f64, u: f64) -> (Option<f64>, Option<f64>) {
    let (lo, hi) = if a > 0.0 { (l, u) } else { (u, l) };
    let min = lo.is_finite().then(|| a * lo);
    let max = hi.is_finite().then(|| a * hi);
    (min, max)
}

impl Activity {
    pub fn add_term(&mut self, a: f64, l: f64, u: f64) {
        let (min, max) = term_range(a, l, u);
        match min {
            Some(v) => self.min_finite += v,
            None => self.inf_count_min += 1,
        }
        match max {
            Some(v) => self.max_finite += v,
            None => self.inf_count_max += 1,
        }
    }

    pub fn of_terms(terms: impl IntoIterator<Item = (f64, f64, f64)>) -> Self {
        let mut act = Activity::default();
        for (a, l, u) in terms {
            act.add_term(a, l, u);
        }
        act
    }

    pub fn min_act(&self) -> f64 {
        if self.inf_count_min > 0 {
            f64::NEG_INFINITY
        } else {
            self.min_finite
        }
    }

    pub fn max_act(&self) -> f64 {
        if self.inf_count_max > 0 {
            f64::INFINITY
        } else {
            self.max_finite
        }
    }

    /// Sum of two partial activities.
    pub fn merge(&mut self, other: &Activity) {
        self.min_finite += other.min_finite;
        self.max_finite += other.max_finite;
        self.inf_count_min += other.inf_count_min;
        self.inf_count_max += other.inf_count_max;
    }

    /// Removes a partial previously merged into `self`.
    pub fn without(&self, part: &Activity) -> Activity {
        Activity {
            min_finite: self.min_finite - part.min_finite,
            max_finite: self.max_finite - part.max_finite,
            inf_count_min: self.inf_count_min - part.inf_count_min,
            inf_count_max: self.inf_count_max - part.inf_count_max,
        }
    }

    /// Minimum activity of every other term, if finite.
    pub fn residual_min(&self, a: f64, l: f64, u: f64) -> Option<f64> {
        match term_range(a, l, u).0 {
            Some(v) if self.inf_count_min == 0 => Some(self.min_finite - v),
            None if self.inf_count_min == 1 => Some(self.min_finite),
            _ => None,
        }
    }

    /// Maximum activity of every other term, if finite.
    pub fn residual_max(&self, a: f64, l: f64, u: f64) -> Option<f64> {
        match term_range(a, l, u).1 {
            Some(v) if self.inf_count_max == 0 => Some(self.max_finite - v),
            None if self.inf_count_max == 1 => Some(self.max_finite),
            _ => None,
        }
    }
}
