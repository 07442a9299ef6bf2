//! Finite joint probability tables.
//!
//! A [`DiscreteJoint`] stores one row per positive-mass atom and one coded column per named
//! coordinate. Columns intern their distinct values, so grouping and marginalization work
//! on small integer codes:
//!
//! ```text
//!   atom i:  (code_0[i], code_1[i], ..., code_k[i])  with mass probs[i]
//!   value of column c at atom i = values_c[code_c[i]]
//! ```

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const CLOSURE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum Value<S> {
    Int(i64),
    Num(S),
    Text(String),
}

impl<S: Scalar> Value<S> {
    pub fn as_scalar(&self) -> Option<S> {
        match self {
            Value::Int(i) => Some(if *i >= 0 {
                S::from_usize(*i as usize)
            } else {
                -S::from_usize(i.unsigned_abs() as usize)
            }),
            Value::Num(x) => Some(x.clone()),
            Value::Text(_) => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    fn key(&self) -> ValueKey<S::Key> {
        match self {
            Value::Int(i) => ValueKey::Int(*i),
            Value::Num(x) => ValueKey::Num(x.key()),
            Value::Text(s) => ValueKey::Text(s.clone()),
        }
    }

    pub fn to_f64(&self) -> Value<f64> {
        match self {
            Value::Int(i) => Value::Int(*i),
            Value::Num(x) => Value::Num(x.to_f64()),
            Value::Text(s) => Value::Text(s.clone()),
        }
    }
}

impl<S: Scalar> fmt::Display for Value<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Num(x) => write!(f, "{:?}", x.to_f64()),
            Value::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum ValueKey<K> {
    Int(i64),
    Num(K),
    Text(String),
}

// ---------------------------------------------------------------------------
// Columns

#[derive(Clone, Debug)]
pub struct Column<S> {
    pub name: String,
    pub codes: Vec<u32>,
    pub values: Vec<Value<S>>,
}

impl<S: Scalar> Column<S> {
    pub fn value(&self, atom: usize) -> &Value<S> {
        &self.values[self.codes[atom] as usize]
    }

    pub fn cardinality(&self) -> usize {
        self.values.len()
    }
}

/// Builds a column by interning pushed values.
pub struct ColumnBuilder<S: Scalar> {
    name: String,
    codes: Vec<u32>,
    values: Vec<Value<S>>,
    lookup: HashMap<ValueKey<S::Key>, u32>,
}

impl<S: Scalar> ColumnBuilder<S> {
    pub fn new(name: impl Into<String>) -> Self {
        ColumnBuilder {
            name: name.into(),
            codes: Vec::new(),
            values: Vec::new(),
            lookup: HashMap::new(),
        }
    }

    pub fn intern(&mut self, v: Value<S>) -> u32 {
        let key = v.key();
        if let Some(&c) = self.lookup.get(&key) {
            return c;
        }
        let c = self.values.len() as u32;
        self.values.push(v);
        self.lookup.insert(key, c);
        c
    }

    pub fn push(&mut self, v: Value<S>) {
        let c = self.intern(v);
        self.codes.push(c);
    }

    pub fn push_code(&mut self, code: u32) {
        debug_assert!((code as usize) < self.values.len());
        self.codes.push(code);
    }

    pub fn finish(self) -> Column<S> {
        Column { name: self.name, codes: self.codes, values: self.values }
    }
}

// ---------------------------------------------------------------------------
// Metadata

/// What kind of experiment produced a joint, and which structural premises it satisfies.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct JointMeta {
    pub kind: JointKind,
    pub horizon: Option<usize>,
    /// Every row kernel reached is invariant under swapping the two coordinates.
    pub exchangeable: bool,
    /// Every row kernel reached is a product of identical marginals.
    pub conditional_product: bool,
    /// The learner's update reads only the selected coordinate.
    pub selected_update: bool,
    /// `loss_table[w][z]`, when the experiment has a finite state and outcome space.
    pub loss_table: Option<Vec<Vec<f64>>>,
    /// Additional named numbers (for example `p_min` of an active world).
    pub params: Vec<(String, f64)>,
}

impl JointMeta {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum JointKind {
    #[default]
    Generic,
    Sequential,
    Batch,
    Active,
    Bandit,
}

// ---------------------------------------------------------------------------
// Joint

#[derive(Clone, Debug)]
pub struct DiscreteJoint<S> {
    columns: Vec<Column<S>>,
    index: HashMap<String, usize>,
    probs: Vec<S>,
    pub meta: JointMeta,
}

/// Dense ids for the distinct value tuples of some columns.
#[derive(Clone, Debug)]
pub struct Grouping {
    pub ids: Vec<u32>,
    pub count: usize,
}

impl<S: Scalar> DiscreteJoint<S> {
    pub fn new(columns: Vec<Column<S>>, probs: Vec<S>, meta: JointMeta) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, c) in columns.iter().enumerate() {
            if c.codes.len() != probs.len() {
                return Err(Error::Schema(format!(
                    "column {} has {} entries for {} atoms",
                    c.name,
                    c.codes.len(),
                    probs.len()
                )));
            }
            if index.insert(c.name.clone(), i).is_some() {
                return Err(Error::Schema(format!("duplicate schema name {}", c.name)));
            }
        }
        let mut total = S::zero();
        for p in &probs {
            if *p < S::zero() {
                return Err(Error::Invalid(format!("negative probability {p:?}")));
            }
            total = total + p.clone();
        }
        let dev = (total.to_f64() - 1.0).abs();
        if dev > CLOSURE_TOL {
            return Err(Error::Invalid(format!("probabilities sum to 1 + {dev:e}")));
        }
        Ok(DiscreteJoint { columns, index, probs, meta })
    }

    /// Builds a joint from explicit rows of values.
    pub fn from_rows(names: &[&str], rows: Vec<(Vec<Value<S>>, S)>) -> Result<Self> {
        let mut builders: Vec<ColumnBuilder<S>> = names.iter().map(|n| ColumnBuilder::new(*n)).collect();
        let mut probs = Vec::with_capacity(rows.len());
        for (vals, p) in rows {
            if vals.len() != names.len() {
                return Err(Error::Schema(format!(
                    "row has {} values for {} names",
                    vals.len(),
                    names.len()
                )));
            }
            if p.is_zero() {
                continue;
            }
            for (b, v) in builders.iter_mut().zip(vals) {
                b.push(v);
            }
            probs.push(p);
        }
        let columns = builders.into_iter().map(ColumnBuilder::finish).collect();
        Self::new(columns, probs, JointMeta::default())
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[S] {
        &self.probs
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    pub fn has(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn column(&self, name: &str) -> Result<&Column<S>> {
        self.index
            .get(name)
            .map(|&i| &self.columns[i])
            .ok_or_else(|| Error::Schema(format!("missing schema coordinate {name}")))
    }

    pub fn total_mass(&self) -> S {
        self.probs.iter().fold(S::zero(), |a, p| a + p.clone())
    }

    /// Per-atom numeric values of a column.
    pub fn numeric(&self, name: &str) -> Result<Vec<S>> {
        let col = self.column(name)?;
        let table: Vec<S> = col
            .values
            .iter()
            .map(|v| {
                v.as_scalar()
                    .ok_or_else(|| Error::Schema(format!("column {name} is not numeric")))
            })
            .collect::<Result<_>>()?;
        Ok(col.codes.iter().map(|&c| table[c as usize].clone()).collect())
    }

    /// Per-atom integer values of a column.
    pub fn ints(&self, name: &str) -> Result<Vec<i64>> {
        let col = self.column(name)?;
        let table: Vec<i64> = col
            .values
            .iter()
            .map(|v| v.as_int().ok_or_else(|| Error::Schema(format!("column {name} is not integer"))))
            .collect::<Result<_>>()?;
        Ok(col.codes.iter().map(|&c| table[c as usize]).collect())
    }

    /// E[f(atom)] for a per-atom quantity.
    pub fn expect_with(&self, f: impl Fn(usize) -> S) -> S {
        self.probs
            .iter()
            .enumerate()
            .fold(S::zero(), |acc, (i, p)| acc + p.clone() * f(i))
    }

    pub fn expect(&self, name: &str) -> Result<S> {
        let xs = self.numeric(name)?;
        Ok(self.expect_with(|i| xs[i].clone()))
    }

    pub fn group_ids(&self, names: &[&str]) -> Result<Grouping> {
        let mut g = Grouping { ids: vec![0; self.len()], count: 1 };
        for name in names {
            let col = self.column(name)?;
            g = refine(&g, &col.codes, col.cardinality());
        }
        Ok(g)
    }

    /// Appends a column computed from per-atom values.
    pub fn add_column(&mut self, name: impl Into<String>, values: Vec<Value<S>>) -> Result<()> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(Error::Schema(format!("duplicate schema name {name}")));
        }
        if values.len() != self.len() {
            return Err(Error::Schema(format!("column {name} has wrong length")));
        }
        let mut b = ColumnBuilder::new(name.clone());
        for v in values {
            b.push(v);
        }
        self.index.insert(name, self.columns.len());
        self.columns.push(b.finish());
        Ok(())
    }

    pub fn add_numeric(&mut self, name: impl Into<String>, values: Vec<S>) -> Result<()> {
        self.add_column(name, values.into_iter().map(Value::Num).collect())
    }

    /// Appends a column whose value at each atom is `f` of the listed input values.
    pub fn derive(
        &mut self,
        name: impl Into<String>,
        inputs: &[&str],
        f: impl Fn(&[&Value<S>]) -> Value<S>,
    ) -> Result<()> {
        let cols: Vec<&Column<S>> = inputs.iter().map(|n| self.column(n)).collect::<Result<_>>()?;
        let mut args: Vec<&Value<S>> = Vec::with_capacity(cols.len());
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            args.clear();
            args.extend(cols.iter().map(|c| c.value(i)));
            out.push(f(&args));
        }
        self.add_column(name, out)
    }

    /// Law of the listed coordinates.
    pub fn marginal(&self, names: &[&str]) -> Result<DiscreteJoint<S>> {
        let g = self.group_ids(names)?;
        let mut rep = vec![usize::MAX; g.count];
        let mut mass = vec![S::zero(); g.count];
        for (i, &id) in g.ids.iter().enumerate() {
            if rep[id as usize] == usize::MAX {
                rep[id as usize] = i;
            }
            mass[id as usize] = mass[id as usize].clone() + self.probs[i].clone();
        }
        let mut columns = Vec::with_capacity(names.len());
        for name in names {
            let col = self.column(name)?;
            let mut b = ColumnBuilder::new(*name);
            for &r in &rep {
                b.push(col.value(r).clone());
            }
            columns.push(b.finish());
        }
        DiscreteJoint::new(columns, mass, self.meta.clone())
    }

    pub fn to_f64(&self) -> DiscreteJoint<f64> {
        DiscreteJoint {
            columns: self
                .columns
                .iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    codes: c.codes.clone(),
                    values: c.values.iter().map(Value::to_f64).collect(),
                })
                .collect(),
            index: self.index.clone(),
            probs: self.probs.iter().map(Scalar::to_f64).collect(),
            meta: self.meta.clone(),
        }
    }

    /// Writes a header naming every coordinate followed by `prob`, then one line per atom.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header: Vec<&str> = self.names().collect();
        header.push("prob");
        wr.write_record(&header)?;
        let mut rec: Vec<String> = Vec::with_capacity(header.len());
        for i in 0..self.len() {
            rec.clear();
            rec.extend(self.columns.iter().map(|c| c.value(i).to_string()));
            rec.push(format!("{:?}", self.probs[i].to_f64()));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }
}

impl DiscreteJoint<f64> {
    /// Reads the format written by [`DiscreteJoint::write_csv`]. Cells that parse as
    /// integers become integer values, other numbers become reals, the rest text.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let header = rd.headers()?.clone();
        let np = header
            .iter()
            .position(|h| h == "prob")
            .ok_or_else(|| Error::Schema("CSV header lacks a prob column".into()))?;
        let names: Vec<&str> = header.iter().enumerate().filter(|(i, _)| *i != np).map(|(_, h)| h).collect();
        let mut rows = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let p: f64 = rec[np]
                .trim()
                .parse()
                .map_err(|_| Error::Invalid(format!("bad probability {:?}", &rec[np])))?;
            let vals = rec
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != np)
                .map(|(_, cell)| parse_cell(cell))
                .collect();
            rows.push((vals, p));
        }
        DiscreteJoint::from_rows(&names, rows)
    }
}

fn parse_cell(cell: &str) -> Value<f64> {
    let t = cell.trim();
    if let Ok(i) = t.parse::<i64>() {
        Value::Int(i)
    } else if let Ok(x) = t.parse::<f64>() {
        Value::Num(x)
    } else {
        Value::Text(t.to_string())
    }
}

/// Splits each group of `g` by `codes` (with `card` distinct values).
pub fn refine(g: &Grouping, codes: &[u32], card: usize) -> Grouping {
    let n = g.ids.len();
    let mut ids = vec![0u32; n];
    let mut count = 0u32;
    let span = g.count as u64 * card as u64;
    if span <= 1 << 22 {
        let mut table = vec![u32::MAX; span as usize];
        for i in 0..n {
            let k = g.ids[i] as usize * card + codes[i] as usize;
            if table[k] == u32::MAX {
                table[k] = count;
                count += 1;
            }
            ids[i] = table[k];
        }
    } else {
        let mut table: HashMap<u64, u32> = HashMap::new();
        for i in 0..n {
            let k = g.ids[i] as u64 * card as u64 + codes[i] as u64;
            let next = count;
            let id = *table.entry(k).or_insert_with(|| next);
            if id == next {
                count += 1;
            }
            ids[i] = id;
        }
    }
    Grouping { ids, count: count as usize }
}

/// Dense ids for arbitrary per-atom keys, in first-occurrence order.
pub fn grouping_from_keys<K: std::hash::Hash + Eq>(keys: impl IntoIterator<Item = K>) -> Grouping {
    let mut table: HashMap<K, u32> = HashMap::new();
    let mut ids = Vec::new();
    for k in keys {
        let next = table.len() as u32;
        ids.push(*table.entry(k).or_insert(next));
    }
    Grouping { ids, count: table.len() }
}

/// Joint grouping of two groupings over the same atoms.
pub fn combine(a: &Grouping, b: &Grouping) -> Grouping {
    refine(a, &b.ids, b.count)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits() -> DiscreteJoint<f64> {
        DiscreteJoint::from_rows(
            &["X", "Y"],
            vec![
                (vec![Value::Int(0), Value::Int(0)], 0.375),
                (vec![Value::Int(1), Value::Int(1)], 0.375),
                (vec![Value::Int(0), Value::Int(1)], 0.125),
                (vec![Value::Int(1), Value::Int(0)], 0.125),
            ],
        )
        .unwrap()
    }

    #[test]
    fn closure_is_enforced() {
        let r = DiscreteJoint::from_rows(&["X"], vec![(vec![Value::<f64>::Int(0)], 0.5)]);
        assert!(r.is_err());
    }

    #[test]
    fn duplicate_names_rejected() {
        let r = DiscreteJoint::from_rows(&["X", "X"], vec![(vec![Value::<f64>::Int(0), Value::Int(0)], 1.0)]);
        assert!(matches!(r, Err(Error::Schema(_))));
    }

    #[test]
    fn marginal_sums_groups() {
        let j = bits();
        let m = j.marginal(&["X"]).unwrap();
        assert_eq!(m.len(), 2);
        assert!(m.probs().iter().all(|p| (p - 0.5).abs() < 1e-15));
    }

    #[test]
    fn grouping_ids_are_dense() {
        let j = bits();
        let g = j.group_ids(&["X", "Y"]).unwrap();
        assert_eq!(g.count, 4);
        let g = j.group_ids(&[]).unwrap();
        assert_eq!(g.count, 1);
    }

    #[test]
    fn csv_round_trip() {
        let mut j = bits();
        j.derive("S", &["X", "Y"], |v| Value::Num((v[0].as_int().unwrap() + v[1].as_int().unwrap()) as f64 * 0.5))
            .unwrap();
        let mut buf = Vec::new();
        j.write_csv(&mut buf).unwrap();
        let back = DiscreteJoint::read_csv(&buf[..]).unwrap();
        let mut buf2 = Vec::new();
        back.write_csv(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
        assert_eq!(back.names().collect::<Vec<_>>(), vec!["X", "Y", "S"]);
    }
}
