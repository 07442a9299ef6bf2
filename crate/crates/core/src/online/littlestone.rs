//! Finite binary classes: Littlestone dimension, VC dimension and the sequential
//! pattern-growth bound.
//!
//! ```text
//!   Ldim(F) = max_x 1 + min(Ldim(F_x^0), Ldim(F_x^1))   over x splitting F
//!   log Pi_seq(F, n) <= log sum_{i <= min(d, n)} C(n, i) <= d log(en/d)   (1 <= d <= n)
//! ```

use std::collections::HashMap;
use std::io::Read;

use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryClass {
    domain: Vec<String>,
    functions: Vec<Vec<bool>>,
}

impl BinaryClass {
    pub fn new(domain: Vec<String>, functions: Vec<Vec<bool>>) -> Result<Self> {
        if functions.iter().any(|f| f.len() != domain.len()) {
            return invalid("every function needs one value per domain point");
        }
        let mut seen = functions.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != functions.len() {
            return invalid("class functions must be distinct");
        }
        Ok(BinaryClass { domain, functions })
    }

    /// Header row names the domain points; each following row is one function of 0/1 values.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let domain: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut functions = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let f = rec
                .iter()
                .map(|v| match v {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    _ => Err(Error::Schema(format!("line {}: expected 0 or 1, got {v:?}", i + 2))),
                })
                .collect::<Result<Vec<_>>>()?;
            functions.push(f);
        }
        Self::new(domain, functions)
    }

    /// All 0/1 functions on `m` points.
    pub fn full(m: usize) -> Self {
        let functions = (0..1u64 << m).map(|b| (0..m).map(|i| b >> i & 1 == 1).collect()).collect();
        BinaryClass { domain: (0..m).map(|i| format!("x{i}")).collect(), functions }
    }

    /// Thresholds 1{x >= theta} on points 1..=m, theta in 1..=m+1.
    pub fn thresholds(m: usize) -> Self {
        let functions = (1..=m + 1).map(|th| (1..=m).map(|x| x >= th).collect()).collect();
        BinaryClass { domain: (1..=m).map(|i| i.to_string()).collect(), functions }
    }

    pub fn domain(&self) -> &[String] {
        &self.domain
    }

    pub fn functions(&self) -> &[Vec<bool>] {
        &self.functions
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn with_function(&self, f: Vec<bool>) -> Result<Self> {
        let mut fs = self.functions.clone();
        fs.push(f);
        Self::new(self.domain.clone(), fs)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LdimOptions {
    /// Largest tree depth the search will certify.
    pub max_depth: usize,
    /// Largest |domain| * |class| accepted.
    pub max_cells: usize,
}

impl Default for LdimOptions {
    fn default() -> Self {
        LdimOptions { max_depth: 12, max_cells: 1 << 16 }
    }
}

type Subset = Vec<u64>;

struct Search<'a> {
    cls: &'a BinaryClass,
    memo: HashMap<Subset, usize>,
}

impl Search<'_> {
    fn ldim(&mut self, set: &Subset) -> usize {
        let size: u32 = set.iter().map(|w| w.count_ones()).sum();
        if size <= 1 {
            return 0;
        }
        if let Some(&d) = self.memo.get(set) {
            return d;
        }
        // Any shattered tree of depth d needs 2^d functions.
        let ceiling = (31 - size.leading_zeros()) as usize;
        let mut best = 0;
        for x in 0..self.cls.domain.len() {
            let (mut on, mut off) = (vec![0u64; set.len()], vec![0u64; set.len()]);
            for (k, &word) in set.iter().enumerate() {
                let mut w = word;
                while w != 0 {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    if self.cls.functions[k * 64 + b][x] {
                        on[k] |= 1 << b;
                    } else {
                        off[k] |= 1 << b;
                    }
                }
            }
            if on.iter().all(|&w| w == 0) || off.iter().all(|&w| w == 0) {
                continue;
            }
            let d = 1 + self.ldim(&on).min(self.ldim(&off));
            best = best.max(d);
            if best == ceiling {
                break;
            }
        }
        self.memo.insert(set.clone(), best);
        best
    }
}

/// Exact Littlestone dimension by recursive shattering-tree search, memoized on the
/// surviving function set. The empty class has no tree and is reported as 0.
pub fn littlestone_dimension(cls: &BinaryClass, opts: LdimOptions) -> Result<usize> {
    let cells = cls.domain.len() * cls.len();
    if cells > opts.max_cells {
        return Err(Error::CapExceeded(format!("class has {cells} cells, cap is {}", opts.max_cells)));
    }
    let mut all = vec![0u64; cls.len().div_ceil(64)];
    for i in 0..cls.len() {
        all[i / 64] |= 1 << (i % 64);
    }
    let d = Search { cls, memo: HashMap::new() }.ldim(&all);
    if d > opts.max_depth {
        return Err(Error::CapExceeded(format!("Littlestone dimension {d} exceeds the depth cap {}", opts.max_depth)));
    }
    Ok(d)
}

/// Exact VC dimension: the largest set of domain points on which every labeling occurs.
pub fn vc_dimension(cls: &BinaryClass) -> usize {
    let m = cls.domain.len();
    let mut best = 0;
    for k in 1..=m {
        if (1usize << k) > cls.len() {
            break;
        }
        let mut found = false;
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            let mut seen = vec![false; 1 << k];
            for f in &cls.functions {
                let code = idx.iter().enumerate().fold(0, |c, (b, &x)| c | (f[x] as usize) << b);
                seen[code] = true;
            }
            if seen.iter().all(|&s| s) {
                found = true;
                break;
            }
            // Next k-combination in lexicographic order.
            let mut i = k;
            while i > 0 && idx[i - 1] == m - k + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
        if !found {
            break;
        }
        best = k;
    }
    best
}

/// log sum_{i <= min(d, n)} C(n, i), computed in log space.
pub fn log_binomial_sum(d: usize, n: usize) -> f64 {
    let top = d.min(n);
    let mut log_c = 0.0f64;
    let mut terms = vec![0.0];
    for i in 1..=top {
        log_c += ((n - i + 1) as f64).ln() - (i as f64).ln();
        terms.push(log_c);
    }
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PatternBound {
    pub ldim: usize,
    pub log_binomial: f64,
    /// d log(en/d), present when 1 <= d <= n.
    pub ldim_form: Option<f64>,
}

pub fn pattern_growth_bound(cls: &BinaryClass, n: usize) -> Result<PatternBound> {
    let d = littlestone_dimension(cls, LdimOptions::default())?;
    Ok(pattern_growth_from_dim(d, n))
}

pub fn pattern_growth_from_dim(d: usize, n: usize) -> PatternBound {
    let ldim_form = (1..=n).contains(&d).then(|| d as f64 * (std::f64::consts::E * n as f64 / d as f64).ln());
    PatternBound { ldim: d, log_binomial: log_binomial_sum(d, n), ldim_form }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_sum_values() {
        assert_eq!(log_binomial_sum(0, 5), 0.0);
        assert!((log_binomial_sum(2, 8) - 37f64.ln()).abs() < 1e-12);
        assert!((log_binomial_sum(6, 6) - 6.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let c = BinaryClass::read_csv("a,b\n0,1\n1,1\n".as_bytes()).unwrap();
        assert_eq!(c.len(), 2);
        assert!(BinaryClass::read_csv("a,b\n0,1\n0,1\n".as_bytes()).is_err());
        assert!(BinaryClass::read_csv("a,b\n0,2\n".as_bytes()).is_err());
    }
}
