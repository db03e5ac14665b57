use crate::objectives::lf1_tenths;

use super::ConfigRecord;

/// Dense `(d, l, n)` grid with one layer of `+inf` padding below each axis.
#[derive(Clone, Debug)]
pub struct ObjectiveTensor {
    d_max: usize,
    s_max: usize,
    t_max: usize,
    values: Vec<f64>,
    best: Vec<Option<usize>>,
}

impl ObjectiveTensor {
    pub fn new(d_max: u32, s_max: usize, t_max: usize) -> Self {
        let len = (d_max as usize + 2) * (s_max + 2) * (t_max + 2);
        ObjectiveTensor {
            d_max: d_max as usize,
            s_max,
            t_max,
            values: vec![f64::INFINITY; len],
            best: vec![None; len],
        }
    }

    /// Flat position of `(d, l, n)`; each coordinate may be `-1`.
    fn pos(&self, d: i64, l: i64, n: i64) -> usize {
        debug_assert!(d >= -1 && l >= -1 && n >= -1);
        let (d, l, n) = ((d + 1) as usize, (l + 1) as usize, (n + 1) as usize);
        (d * (self.s_max + 2) + l) * (self.t_max + 2) + n
    }

    /// `(d_max, s_max, t_max)`.
    pub fn bounds(&self) -> (u32, usize, usize) {
        (self.d_max as u32, self.s_max, self.t_max)
    }

    pub fn get(&self, d: i64, l: i64, n: i64) -> f64 {
        self.values[self.pos(d, l, n)]
    }

    /// Record index holding the minimum at `(d, l, n)`, if any was inserted there.
    pub fn best_record(&self, d: u32, l: usize, n: usize) -> Option<usize> {
        self.best[self.pos(d as i64, l as i64, n as i64)]
    }

    /// Lowers the cell for `record` to its loading if smaller. The first record wins ties.
    pub fn insert(&mut self, index: usize, record: &ConfigRecord) {
        let p = self.pos(
            record.depth as i64,
            record.switches as i64,
            record.non_ref as i64,
        );
        if record.lf1 < self.values[p] {
            self.values[p] = record.lf1;
            self.best[p] = Some(index);
        }
    }
}

/// A surviving cell of the tensor filter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NondominatedTuple {
    pub depth: u32,
    pub switches: u32,
    pub non_ref: u32,
    /// Unrounded minimum loading in the cell.
    pub lf1: f64,
    /// Index of the record attaining `lf1`.
    pub record: usize,
}

/// Keeps the `(d, l, n)` cells whose rounded minimum loading beats every cell below them.
///
/// Cells are visited in increasing `d`, then `l`, then `n`; a cell that does not survive takes
/// the minimum of its three lower neighbours so later cells compare against everything below.
pub fn filter_nondominated(
    records: &[ConfigRecord],
    d_max: u32,
    s_max: usize,
    t_max: usize,
) -> Vec<NondominatedTuple> {
    let mut tensor = ObjectiveTensor::new(d_max, s_max, t_max);
    for (i, r) in records.iter().enumerate() {
        if r.depth <= d_max && r.switches as usize <= s_max && r.non_ref as usize <= t_max {
            tensor.insert(i, r);
        }
    }
    let mut out = Vec::new();
    for d in 0..=d_max as i64 {
        for l in 0..=s_max as i64 {
            for n in 0..=t_max as i64 {
                let own = tensor.get(d, l, n);
                let below = tensor
                    .get(d - 1, l, n)
                    .min(tensor.get(d, l - 1, n))
                    .min(tensor.get(d, l, n - 1));
                let p = tensor.pos(d, l, n);
                if own.is_finite() && lf1_tenths(own) < lf1_tenths(below) {
                    out.push(NondominatedTuple {
                        depth: d as u32,
                        switches: l as u32,
                        non_ref: n as u32,
                        lf1: own,
                        record: tensor.best[p].expect("finite cell has a record"),
                    });
                } else {
                    tensor.values[p] = below;
                }
            }
        }
    }
    out
}
