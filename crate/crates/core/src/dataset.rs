//! Columnar observational data, row predicates and 2×2 counts.
//!
//! A [`Dataset`] is immutable once built. Row subsets are represented by
//! [`DataView`], a borrowed dataset plus a list of row indices, so that
//! context restriction never copies columns.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::error::{Error, Result};

/// Index of a variable in [`Dataset::variables`].
pub type VarId = usize;

/// How the values of a variable are encoded.
#[derive(Debug, Clone, PartialEq)]
pub enum VariableKind {
    /// Finite set of labels; values are indices into `labels`.
    Categorical {
        /// Labels in lexicographic order.
        labels: Vec<String>,
    },
    /// Real-valued.
    Numeric,
}

/// Name and encoding of one column.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableMeta {
    /// Position in the dataset.
    pub id: VarId,
    /// Column name, unique within the dataset.
    pub name: String,
    /// Encoding.
    pub kind: VariableKind,
}

impl VariableMeta {
    /// Number of categories, `None` for numeric variables.
    pub fn cardinality(&self) -> Option<usize> {
        match &self.kind {
            VariableKind::Categorical { labels } => Some(labels.len()),
            VariableKind::Numeric => None,
        }
    }

    /// True for two-level categorical variables, the only admissible treatments.
    pub fn is_binary(&self) -> bool {
        self.cardinality() == Some(2)
    }

    /// True for numeric variables.
    pub fn is_numeric(&self) -> bool {
        matches!(self.kind, VariableKind::Numeric)
    }

    /// Label of category `code`, if categorical.
    pub fn label(&self, code: u32) -> Option<&str> {
        match &self.kind {
            VariableKind::Categorical { labels } => labels.get(code as usize).map(String::as_str),
            VariableKind::Numeric => None,
        }
    }
}

/// Storage of a single column.
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    /// Category indices.
    Categorical(Vec<u32>),
    /// Real values.
    Numeric(Vec<f64>),
}

impl Column {
    /// Number of rows.
    pub fn len(&self) -> usize {
        match self {
            Column::Categorical(v) => v.len(),
            Column::Numeric(v) => v.len(),
        }
    }

    /// True when the column has no rows.
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, rows: &[u32]) -> Column {
        match self {
            Column::Categorical(v) => {
                Column::Categorical(rows.iter().map(|&r| v[r as usize]).collect())
            }
            Column::Numeric(v) => Column::Numeric(rows.iter().map(|&r| v[r as usize]).collect()),
        }
    }
}

/// A predicate on a single variable.
#[derive(Debug, Clone, Copy)]
pub enum Condition {
    /// Categorical value equals the given category index.
    Equals(u32),
    /// Numeric value `<= t`.
    AtMost(f64),
    /// Numeric value `> t`.
    Above(f64),
    /// Numeric value in `(low, high]`; produced when a path splits twice on
    /// the same numeric variable.
    Within {
        /// Exclusive lower bound.
        low: f64,
        /// Inclusive upper bound.
        high: f64,
    },
}

impl Condition {
    /// Evaluates the condition on a categorical code.
    pub fn holds_categorical(&self, code: u32) -> bool {
        matches!(self, Condition::Equals(c) if *c == code)
    }

    /// Evaluates the condition on a numeric value.
    pub fn holds_numeric(&self, x: f64) -> bool {
        match *self {
            Condition::Equals(_) => false,
            Condition::AtMost(t) => x <= t,
            Condition::Above(t) => x > t,
            Condition::Within { low, high } => x > low && x <= high,
        }
    }

    /// True for the conditions that apply to numeric variables.
    pub fn is_numeric(&self) -> bool {
        !matches!(self, Condition::Equals(_))
    }

    fn bounds(&self) -> Option<(Option<f64>, Option<f64>)> {
        match *self {
            Condition::Equals(_) => None,
            Condition::AtMost(t) => Some((None, Some(t))),
            Condition::Above(t) => Some((Some(t), None)),
            Condition::Within { low, high } => Some((Some(low), Some(high))),
        }
    }

    /// Conjunction of two numeric conditions on the same variable.
    ///
    /// Returns `None` for categorical conditions.
    pub fn intersect(&self, other: &Condition) -> Option<Condition> {
        let (l1, h1) = self.bounds()?;
        let (l2, h2) = other.bounds()?;
        let low = match (l1, l2) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        let high = match (h1, h2) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        Some(match (low, high) {
            (Some(low), Some(high)) => Condition::Within { low, high },
            (Some(low), None) => Condition::Above(low),
            (None, Some(high)) => Condition::AtMost(high),
            (None, None) => unreachable!("numeric conditions carry at least one bound"),
        })
    }

    fn rank(&self) -> u8 {
        match self {
            Condition::Equals(_) => 0,
            Condition::AtMost(_) => 1,
            Condition::Above(_) => 2,
            Condition::Within { .. } => 3,
        }
    }
}

impl Ord for Condition {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank().cmp(&other.rank()).then_with(|| match (self, other) {
            (Condition::Equals(a), Condition::Equals(b)) => a.cmp(b),
            (Condition::AtMost(a), Condition::AtMost(b))
            | (Condition::Above(a), Condition::Above(b)) => a.total_cmp(b),
            (
                Condition::Within { low: l1, high: h1 },
                Condition::Within { low: l2, high: h2 },
            ) => l1.total_cmp(l2).then(h1.total_cmp(h2)),
            _ => Ordering::Equal,
        })
    }
}

impl PartialOrd for Condition {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Condition {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Condition {}

/// A conjunction of single-variable conditions, at most one per variable.
///
/// Order of insertion is preserved (root-to-leaf for decision rules);
/// [`Assignment::canonical`] sorts by variable id.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Assignment {
    pairs: Vec<(VarId, Condition)>,
}

impl Assignment {
    /// The empty assignment, matched by every row.
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds an assignment, rejecting repeated variables.
    pub fn from_pairs(pairs: Vec<(VarId, Condition)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (var, _) in &pairs {
            if !seen.insert(*var) {
                return Err(Error::InvalidAssignment(format!("variable {var} repeated")));
            }
        }
        Ok(Self { pairs })
    }

    /// Single categorical condition `var = code`.
    pub fn equals(var: VarId, code: u32) -> Self {
        Self {
            pairs: alloc::vec![(var, Condition::Equals(code))],
        }
    }

    /// Adds a condition, intersecting with an existing numeric condition on
    /// the same variable. Fails on a second categorical condition.
    pub fn constrain(&mut self, var: VarId, condition: Condition) -> Result<()> {
        if let Some(slot) = self.pairs.iter_mut().find(|(v, _)| *v == var) {
            slot.1 = slot.1.intersect(&condition).ok_or_else(|| {
                Error::InvalidAssignment(format!("variable {var} constrained twice"))
            })?;
        } else {
            self.pairs.push((var, condition));
        }
        Ok(())
    }

    /// Number of conditions.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    /// True for the empty assignment.
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Conditions in insertion order.
    pub fn pairs(&self) -> &[(VarId, Condition)] {
        &self.pairs
    }

    /// Iterator over the constrained variables.
    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.pairs.iter().map(|(v, _)| *v)
    }

    /// Condition on `var`, if any.
    pub fn get(&self, var: VarId) -> Option<&Condition> {
        self.pairs.iter().find(|(v, _)| *v == var).map(|(_, c)| c)
    }

    /// Copy sorted by variable id.
    pub fn canonical(&self) -> Assignment {
        let mut pairs = self.pairs.clone();
        pairs.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
        Assignment { pairs }
    }

    /// Copy without the condition on `var`.
    pub fn without(&self, var: VarId) -> Assignment {
        Assignment {
            pairs: self.pairs.iter().filter(|(v, _)| *v != var).cloned().collect(),
        }
    }

    /// True when every condition of `self` also appears in `other`.
    pub fn is_subset_of(&self, other: &Assignment) -> bool {
        self.pairs
            .iter()
            .all(|(v, c)| other.get(*v).is_some_and(|oc| oc == c))
    }

    /// Formats with variable names and labels of `data`.
    pub fn display<'a>(&'a self, data: &'a Dataset) -> AssignmentDisplay<'a> {
        AssignmentDisplay { assignment: self, data }
    }

    /// Checks that every condition is well-typed against `data`.
    pub fn validate(&self, data: &Dataset) -> Result<()> {
        let mut seen = BTreeSet::new();
        for (var, cond) in &self.pairs {
            if !seen.insert(*var) {
                return Err(Error::InvalidAssignment(format!("variable {var} repeated")));
            }
            let meta = data
                .variables
                .get(*var)
                .ok_or_else(|| Error::InvalidAssignment(format!("no variable with id {var}")))?;
            match (&meta.kind, cond) {
                (VariableKind::Categorical { labels }, Condition::Equals(c)) => {
                    if *c as usize >= labels.len() {
                        return Err(Error::InvalidAssignment(format!(
                            "category {c} out of range for `{}`",
                            meta.name
                        )));
                    }
                }
                (VariableKind::Numeric, c) if c.is_numeric() => {}
                _ => {
                    return Err(Error::InvalidAssignment(format!(
                        "condition kind does not match variable `{}`",
                        meta.name
                    )))
                }
            }
        }
        Ok(())
    }
}

/// Counts of a binary treatment against a binary outcome.
///
/// | treatment | Y=1 | Y=0 |
/// |-----------|-----|-----|
/// | treated   | a   | b   |
/// | control   | c   | d   |
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ContingencyTable {
    /// Treated with positive outcome.
    pub a: u64,
    /// Treated with negative outcome.
    pub b: u64,
    /// Control with positive outcome.
    pub c: u64,
    /// Control with negative outcome.
    pub d: u64,
}

impl ContingencyTable {
    /// Table from its four cells.
    pub const fn new(a: u64, b: u64, c: u64, d: u64) -> Self {
        Self { a, b, c, d }
    }

    /// Total count `a + b + c + d`.
    pub fn n(&self) -> u64 {
        self.a + self.b + self.c + self.d
    }

    /// Size of the treated arm.
    pub fn treated(&self) -> u64 {
        self.a + self.b
    }

    /// Size of the control arm.
    pub fn control(&self) -> u64 {
        self.c + self.d
    }

    /// Adds one observation.
    pub fn record(&mut self, treated: bool, positive: bool) {
        match (treated, positive) {
            (true, true) => self.a += 1,
            (true, false) => self.b += 1,
            (false, true) => self.c += 1,
            (false, false) => self.d += 1,
        }
    }
}

/// Diagnostics from building a dataset out of raw records.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoadReport {
    /// Records read, before dropping.
    pub rows_read: usize,
    /// Records dropped because a cell was empty.
    pub rows_dropped: usize,
    /// Columns dropped because they held a single value.
    pub constant_columns: Vec<String>,
    /// Columns detected as numeric.
    pub numeric_columns: Vec<String>,
}

/// Immutable table of observations with a binary target.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    variables: Vec<VariableMeta>,
    columns: Vec<Column>,
    target: VarId,
    n_rows: usize,
    /// Bit `r` set iff row `r` holds level 1, for binary categoricals.
    bits: Vec<Option<Vec<u64>>>,
}

impl Dataset {
    /// Assembles a dataset, validating every invariant.
    ///
    /// `variables[i].id` is overwritten with `i`.
    pub fn new(mut variables: Vec<VariableMeta>, columns: Vec<Column>, target: VarId) -> Result<Self> {
        if variables.len() != columns.len() {
            return Err(Error::MalformedData(format!(
                "{} variables but {} columns",
                variables.len(),
                columns.len()
            )));
        }
        let n_rows = columns.first().map_or(0, Column::len);
        let mut names = BTreeSet::new();
        for (i, (meta, col)) in variables.iter_mut().zip(&columns).enumerate() {
            meta.id = i;
            if !names.insert(meta.name.clone()) {
                return Err(Error::DuplicateVariable(meta.name.clone()));
            }
            if col.len() != n_rows {
                return Err(Error::MalformedData(format!(
                    "column `{}` has {} rows, expected {n_rows}",
                    meta.name,
                    col.len()
                )));
            }
            match (&meta.kind, col) {
                (VariableKind::Categorical { labels }, Column::Categorical(values)) => {
                    if labels.len() < 2 {
                        return Err(Error::MalformedData(format!(
                            "categorical `{}` needs at least 2 categories",
                            meta.name
                        )));
                    }
                    if let Some(bad) = values.iter().find(|&&v| v as usize >= labels.len()) {
                        return Err(Error::MalformedData(format!(
                            "category {bad} out of range in `{}`",
                            meta.name
                        )));
                    }
                }
                (VariableKind::Numeric, Column::Numeric(values)) => {
                    if values.iter().any(|x| !x.is_finite()) {
                        return Err(Error::MalformedData(format!(
                            "non-finite value in `{}`",
                            meta.name
                        )));
                    }
                }
                _ => {
                    return Err(Error::MalformedData(format!(
                        "column storage does not match kind of `{}`",
                        meta.name
                    )))
                }
            }
        }
        let target_meta = variables
            .get(target)
            .ok_or_else(|| Error::UnknownVariable(format!("#{target}")))?;
        if !target_meta.is_binary() {
            return Err(Error::NonBinaryTarget {
                name: target_meta.name.clone(),
                distinct: target_meta.cardinality().unwrap_or(0),
            });
        }
        Ok(Self {
            bits: columns.iter().zip(&variables).map(|(c, m)| binary_bits(c, m, n_rows)).collect(),
            variables,
            columns,
            target,
            n_rows,
        })
    }

    /// Packed level-1 indicator of a binary categorical variable.
    pub(crate) fn binary_bits(&self, var: VarId) -> Option<&[u64]> {
        self.bits[var].as_deref()
    }

    /// Dataset of binary categorical columns labelled `"0"`/`"1"`.
    pub fn from_binary_columns(names: &[&str], columns: Vec<Vec<u32>>, target: &str) -> Result<Self> {
        let target = names
            .iter()
            .position(|n| *n == target)
            .ok_or_else(|| Error::UnknownVariable(target.to_string()))?;
        let variables = names
            .iter()
            .enumerate()
            .map(|(id, name)| VariableMeta {
                id,
                name: (*name).to_string(),
                kind: binary_kind(),
            })
            .collect();
        let columns = columns.into_iter().map(Column::Categorical).collect();
        Self::new(variables, columns, target)
    }

    /// Number of rows.
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    /// All variables, including the target.
    pub fn variables(&self) -> &[VariableMeta] {
        &self.variables
    }

    /// Metadata of one variable.
    pub fn variable(&self, id: VarId) -> &VariableMeta {
        &self.variables[id]
    }

    /// Id of the variable called `name`.
    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Id of the target variable.
    pub fn target(&self) -> VarId {
        self.target
    }

    /// Ids of every non-target variable.
    pub fn predictors(&self) -> impl Iterator<Item = VarId> + '_ {
        (0..self.variables.len()).filter(move |&v| v != self.target)
    }

    /// Storage of one column.
    pub fn column(&self, id: VarId) -> &Column {
        &self.columns[id]
    }

    /// Category index of a categorical cell.
    ///
    /// # Panics
    /// If `var` is numeric.
    #[inline]
    pub fn code(&self, row: usize, var: VarId) -> u32 {
        match &self.columns[var] {
            Column::Categorical(v) => v[row],
            Column::Numeric(_) => panic!("variable {var} is numeric"),
        }
    }

    /// Outcome of `row` as 0/1.
    #[inline]
    pub fn outcome(&self, row: usize) -> u32 {
        self.code(row, self.target)
    }

    /// Evaluates one condition on one row.
    #[inline]
    pub fn condition_holds(&self, row: usize, var: VarId, condition: &Condition) -> bool {
        match &self.columns[var] {
            Column::Categorical(v) => condition.holds_categorical(v[row]),
            Column::Numeric(v) => condition.holds_numeric(v[row]),
        }
    }

    /// True when the row satisfies every condition of `assignment`.
    pub fn satisfies(&self, row: usize, assignment: &Assignment) -> bool {
        assignment
            .pairs()
            .iter()
            .all(|(var, cond)| self.condition_holds(row, *var, cond))
    }

    /// View over every row.
    pub fn view(&self) -> DataView<'_> {
        DataView {
            data: self,
            rows: (0..self.n_rows as u32).collect(),
        }
    }

    /// Materialized copy of the rows satisfying `ctx`. May be empty.
    pub fn subset(&self, ctx: &Assignment) -> Result<Dataset> {
        ctx.validate(self)?;
        Ok(self.view().restrict(ctx).to_dataset())
    }

    /// Treated-vs-control by outcome counts over every row.
    pub fn contingency_table(&self, treatment: VarId, treated: &Condition) -> ContingencyTable {
        self.view().contingency_table(treatment, treated)
    }
}

fn binary_kind() -> VariableKind {
    VariableKind::Categorical {
        labels: alloc::vec!["0".to_string(), "1".to_string()],
    }
}

/// A subset of the rows of a [`Dataset`].
#[derive(Debug, Clone)]
pub struct DataView<'a> {
    data: &'a Dataset,
    rows: Vec<u32>,
}

impl<'a> DataView<'a> {
    /// View over explicit row indices.
    pub fn from_rows(data: &'a Dataset, rows: Vec<u32>) -> Self {
        debug_assert!(rows.iter().all(|&r| (r as usize) < data.n_rows()));
        Self { data, rows }
    }

    /// Underlying dataset.
    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    /// Row indices into the underlying dataset.
    pub fn rows(&self) -> &[u32] {
        &self.rows
    }

    /// Number of rows in the view.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// True when the view holds no row.
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Packed membership of the view's rows.
    pub(crate) fn mask(&self) -> Vec<u64> {
        let mut bits = vec![0u64; self.data.n_rows.div_ceil(64)];
        for &r in &self.rows {
            bits[r as usize / 64] |= 1 << (r % 64);
        }
        bits
    }

    /// Rows of this view that also satisfy `ctx`.
    pub fn restrict(&self, ctx: &Assignment) -> DataView<'a> {
        let rows = self
            .rows
            .iter()
            .copied()
            .filter(|&r| self.data.satisfies(r as usize, ctx))
            .collect();
        DataView {
            data: self.data,
            rows,
        }
    }

    /// `[negatives, positives]` of the target.
    pub fn outcome_counts(&self) -> [u64; 2] {
        let mut counts = [0u64; 2];
        for &r in &self.rows {
            counts[self.data.outcome(r as usize) as usize] += 1;
        }
        counts
    }

    /// Rows where `treated` holds on `treatment` form the treated arm, the
    /// remaining rows form the control arm.
    pub fn contingency_table(&self, treatment: VarId, treated: &Condition) -> ContingencyTable {
        let mut table = ContingencyTable::default();
        for &r in &self.rows {
            let r = r as usize;
            table.record(
                self.data.condition_holds(r, treatment, treated),
                self.data.outcome(r) == 1,
            );
        }
        table
    }

    /// Copies the view into a standalone dataset.
    pub fn to_dataset(&self) -> Dataset {
        let columns: Vec<Column> = self.data.columns.iter().map(|c| c.select(&self.rows)).collect();
        let n_rows = self.rows.len();
        Dataset {
            bits: columns
                .iter()
                .zip(&self.data.variables)
                .map(|(c, m)| binary_bits(c, m, n_rows))
                .collect(),
            variables: self.data.variables.clone(),
            columns,
            target: self.data.target,
            n_rows,
        }
    }
}

/// Builds a [`Dataset`] from text records.
///
/// Empty cells mark missing values; records containing one are dropped.
/// A column is numeric when every cell parses as a finite number and it
/// holds more than two distinct values; otherwise it is categorical with
/// labels sorted lexicographically. The target is always categorical.
#[derive(Debug, Clone)]
pub struct DatasetBuilder {
    header: Vec<String>,
    records: Vec<Vec<String>>,
    rows_read: usize,
}

impl DatasetBuilder {
    /// Starts a builder with the given column names.
    pub fn new<I, S>(header: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let header: Vec<String> = header.into_iter().map(|s| s.as_ref().trim().to_string()).collect();
        if header.is_empty() {
            return Err(Error::MalformedData("empty header".into()));
        }
        let mut names = BTreeSet::new();
        for name in &header {
            if !names.insert(name.as_str()) {
                return Err(Error::DuplicateVariable(name.clone()));
            }
        }
        Ok(Self {
            header,
            records: Vec::new(),
            rows_read: 0,
        })
    }

    /// Appends one record; it is silently dropped if any cell is empty.
    pub fn push_record<I, S>(&mut self, record: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let cells: Vec<String> = record.into_iter().map(|s| s.as_ref().trim().to_string()).collect();
        self.rows_read += 1;
        if cells.len() != self.header.len() {
            return Err(Error::MalformedData(format!(
                "record {} has {} fields, expected {}",
                self.rows_read,
                cells.len(),
                self.header.len()
            )));
        }
        if cells.iter().all(|c| !c.is_empty()) {
            self.records.push(cells);
        }
        Ok(())
    }

    /// Encodes the collected records.
    pub fn finish(self, target_name: &str) -> Result<(Dataset, LoadReport)> {
        let target_col = self
            .header
            .iter()
            .position(|h| h == target_name)
            .ok_or_else(|| Error::UnknownVariable(target_name.to_string()))?;
        let mut report = LoadReport {
            rows_read: self.rows_read,
            rows_dropped: self.rows_read - self.records.len(),
            ..LoadReport::default()
        };
        if self.records.is_empty() {
            return Err(Error::NoRows);
        }

        let mut variables = Vec::new();
        let mut columns = Vec::new();
        let mut target = 0;
        for (j, name) in self.header.iter().enumerate() {
            let cells: Vec<&str> = self.records.iter().map(|r| r[j].as_str()).collect();
            let mut labels: Vec<&str> = cells.clone();
            labels.sort_unstable();
            labels.dedup();

            if j == target_col {
                if labels.len() != 2 {
                    return Err(Error::NonBinaryTarget {
                        name: name.clone(),
                        distinct: labels.len(),
                    });
                }
                target = variables.len();
            } else if labels.len() < 2 {
                report.constant_columns.push(name.clone());
                continue;
            } else if labels.len() > 2 {
                let parsed: Option<Vec<f64>> = cells
                    .iter()
                    .map(|c| c.parse::<f64>().ok().filter(|x| x.is_finite()))
                    .collect();
                if let Some(values) = parsed {
                    report.numeric_columns.push(name.clone());
                    variables.push(VariableMeta {
                        id: variables.len(),
                        name: name.clone(),
                        kind: VariableKind::Numeric,
                    });
                    columns.push(Column::Numeric(values));
                    continue;
                }
            }
            let codes = cells
                .iter()
                .map(|c| labels.binary_search(c).expect("label present") as u32)
                .collect();
            variables.push(VariableMeta {
                id: variables.len(),
                name: name.clone(),
                kind: VariableKind::Categorical {
                    labels: labels.iter().map(|s| s.to_string()).collect(),
                },
            });
            columns.push(Column::Categorical(codes));
        }
        Ok((Dataset::new(variables, columns, target)?, report))
    }
}

/// Formats an assignment with variable names, e.g. `A=1, Age<=60`.
pub struct AssignmentDisplay<'a> {
    /// Assignment to print.
    pub assignment: &'a Assignment,
    /// Dataset providing names and labels.
    pub data: &'a Dataset,
}

impl fmt::Display for AssignmentDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (var, cond)) in self.assignment.pairs().iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            let meta = self.data.variable(*var);
            write_condition(f, meta, cond)?;
        }
        Ok(())
    }
}

pub(crate) fn write_condition(f: &mut fmt::Formatter<'_>, meta: &VariableMeta, cond: &Condition) -> fmt::Result {
    match *cond {
        Condition::Equals(c) => write!(f, "{}={}", meta.name, meta.label(c).unwrap_or("?")),
        Condition::AtMost(t) => write!(f, "{}<={}", meta.name, t),
        Condition::Above(t) => write!(f, "{}>{}", meta.name, t),
        Condition::Within { low, high } => write!(f, "{}<{}<={}", low, meta.name, high),
    }
}

fn binary_bits(column: &Column, meta: &VariableMeta, n_rows: usize) -> Option<Vec<u64>> {
    match column {
        Column::Categorical(values) if meta.is_binary() => {
            let mut bits = vec![0u64; n_rows.div_ceil(64)];
            for (r, &v) in values.iter().enumerate() {
                bits[r / 64] |= u64::from(v) << (r % 64);
            }
            Some(bits)
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn ab() -> Dataset {
        Dataset::from_binary_columns(&["A", "B", "Y"], vec![vec![0, 0, 1], vec![0, 1, 1], vec![0, 1, 1]], "Y")
            .unwrap()
    }

    #[test]
    fn subset_filters_rows() {
        let d = ab();
        let s = d.subset(&Assignment::equals(0, 0)).unwrap();
        assert_eq!(s.n_rows(), 2);
        assert_eq!(s.column(0), &Column::Categorical(vec![0, 0]));
        assert_eq!(s.column(1), &Column::Categorical(vec![0, 1]));
    }

    #[test]
    fn empty_context_is_identity() {
        let d = ab();
        assert_eq!(d.subset(&Assignment::new()).unwrap(), d);
    }

    #[test]
    fn unmatched_context_gives_empty_dataset() {
        let d = ab();
        let ctx = Assignment::from_pairs(vec![(0, Condition::Equals(1)), (1, Condition::Equals(0))]).unwrap();
        assert_eq!(d.subset(&ctx).unwrap().n_rows(), 0);
    }

    #[test]
    fn ill_typed_context_rejected() {
        let d = ab();
        assert!(d.subset(&Assignment::equals(0, 7)).is_err());
        let numeric_on_categorical = Assignment::from_pairs(vec![(0, Condition::AtMost(0.5))]).unwrap();
        assert!(d.subset(&numeric_on_categorical).is_err());
        assert!(Assignment::from_pairs(vec![(0, Condition::Equals(0)), (0, Condition::Equals(1))]).is_err());
    }

    #[test]
    fn contingency_counts() {
        let d = Dataset::from_binary_columns(&["X", "Y"], vec![vec![1, 1, 0, 0], vec![1, 0, 1, 0]], "Y").unwrap();
        assert_eq!(d.contingency_table(0, &Condition::Equals(1)), ContingencyTable::new(1, 1, 1, 1));

        let d = Dataset::from_binary_columns(&["X", "Y"], vec![vec![1; 6], vec![1; 6]], "Y").unwrap();
        assert_eq!(d.contingency_table(0, &Condition::Equals(1)), ContingencyTable::new(6, 0, 0, 0));
    }

    #[test]
    fn numeric_conditions_merge_into_intervals() {
        let mut a = Assignment::new();
        a.constrain(3, Condition::AtMost(60.0)).unwrap();
        a.constrain(3, Condition::Above(40.0)).unwrap();
        a.constrain(3, Condition::AtMost(50.0)).unwrap();
        assert_eq!(a.get(3), Some(&Condition::Within { low: 40.0, high: 50.0 }));
        assert!(a.constrain(1, Condition::Equals(0)).is_ok());
        assert!(a.constrain(1, Condition::Equals(1)).is_err());
    }

    #[test]
    fn subset_relation() {
        let g = Assignment::new();
        let a1 = Assignment::equals(1, 1);
        let a1b0 = Assignment::from_pairs(vec![(2, Condition::Equals(0)), (1, Condition::Equals(1))]).unwrap();
        assert!(g.is_subset_of(&a1));
        assert!(a1.is_subset_of(&a1b0));
        assert!(!a1b0.is_subset_of(&a1));
        assert!(!Assignment::equals(1, 0).is_subset_of(&a1b0));
    }

    fn build(header: &[&str], rows: &[&[&str]], target: &str) -> Result<(Dataset, LoadReport)> {
        let mut b = DatasetBuilder::new(header.iter().copied())?;
        for r in rows {
            b.push_record(r.iter().copied())?;
        }
        b.finish(target)
    }

    #[test]
    fn builder_drops_missing_and_sorts_labels() {
        let (d, report) = build(
            &["X1", "X2", "Y"],
            &[&["b", "1", "yes"], &["a", "", "no"], &["c", "0", "no"], &["a", "1", "yes"]],
            "Y",
        )
        .unwrap();
        assert_eq!(d.n_rows(), 3);
        assert_eq!(report.rows_dropped, 1);
        assert_eq!(
            d.variable(0).kind,
            VariableKind::Categorical {
                labels: vec!["a".into(), "b".into(), "c".into()]
            }
        );
        assert_eq!(d.column(0), &Column::Categorical(vec![1, 2, 0]));
        assert_eq!(d.outcome(0), 1);
        assert_eq!(d.outcome(1), 0);
    }

    #[test]
    fn builder_detects_numeric_columns() {
        let (d, report) = build(
            &["Age", "Flag", "Y"],
            &[&["31", "0", "1"], &["64.5", "1", "0"], &["47", "1", "1"]],
            "Y",
        )
        .unwrap();
        assert!(d.variable(0).is_numeric());
        assert!(d.variable(1).is_binary());
        assert_eq!(report.numeric_columns, vec![String::from("Age")]);
    }

    #[test]
    fn builder_errors() {
        assert_eq!(
            build(&["X", "Y"], &[&["1", "low"], &["0", "mid"], &["1", "high"]], "Y").unwrap_err(),
            Error::NonBinaryTarget {
                name: "Y".into(),
                distinct: 3
            }
        );
        assert!(matches!(build(&["X", "Y"], &[&["1", "1"]], "Z"), Err(Error::UnknownVariable(_))));
        assert_eq!(build(&["X", "Y"], &[&["", "1"]], "Y").unwrap_err(), Error::NoRows);
        assert!(DatasetBuilder::new(["A", "A"]).is_err());
    }

    #[test]
    fn builder_is_row_order_independent_in_encoding() {
        let rows: &[&[&str]] = &[&["red", "1"], &["blue", "0"], &["green", "1"]];
        let (d1, _) = build(&["C", "Y"], rows, "Y").unwrap();
        let reversed: Vec<&[&str]> = rows.iter().rev().copied().collect();
        let (d2, _) = build(&["C", "Y"], &reversed, "Y").unwrap();
        assert_eq!(d1.variable(0), d2.variable(0));
    }
}
