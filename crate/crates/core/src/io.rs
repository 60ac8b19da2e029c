//! Reading flows from CSV and writing ranking tables.
//!
//! Long format: a header `from,to,amount` or `from,to,amount,year`, then one
//! record per flow. Amounts use `.` as decimal point and no thousands
//! separators. Pairs that never appear are zero flows; repeated pairs are
//! summed.
//!
//! Wide format: the first row holds an empty cell (or `entity`) followed by
//! receiver codes; every further row starts with a sender code followed by
//! amounts. Empty cells are zero.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::flow::{build_flow_matrix, EntityId, FlowMatrix, MergeGroup, MergeSpec, Registry};
use crate::ranker::{Ranking, WeightVector};

/// Flow matrices for several years over one shared registry.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowPanel {
    registry: Registry,
    by_year: BTreeMap<i32, FlowMatrix>,
}

impl FlowPanel {
    pub fn new(registry: Registry, by_year: BTreeMap<i32, FlowMatrix>) -> Result<Self> {
        if by_year.values().any(|m| *m.registry() != registry) {
            return Err(Error::RegistryMismatch);
        }
        Ok(FlowPanel { registry, by_year })
    }

    /// A panel holding one matrix under year 0.
    pub fn single(matrix: FlowMatrix) -> Self {
        let registry = matrix.registry().clone();
        FlowPanel { registry, by_year: BTreeMap::from([(0, matrix)]) }
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        self.by_year.keys().copied()
    }

    pub fn year(&self, year: i32) -> Option<&FlowMatrix> {
        self.by_year.get(&year)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, &FlowMatrix)> {
        self.by_year.iter().map(|(y, m)| (*y, m))
    }

    pub fn len(&self) -> usize {
        self.by_year.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_year.is_empty()
    }

    /// The only matrix of a one-year panel.
    pub fn only(&self) -> Option<&FlowMatrix> {
        if self.by_year.len() == 1 {
            self.by_year.values().next()
        } else {
            None
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct LongCsvOptions {
    /// Skip records from an entity to itself (and count them) instead of
    /// failing.
    pub drop_self_flows: bool,
    /// Fixed registry; otherwise entities are registered in order of first
    /// appearance.
    pub registry: Option<Registry>,
}

/// What ingestion skipped.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IngestReport {
    pub records: usize,
    pub self_flows_dropped: usize,
    /// Line numbers of dropped records.
    pub dropped_lines: Vec<u64>,
}

pub fn read_long_csv(path: impl AsRef<Path>, options: &LongCsvOptions) -> Result<(FlowPanel, IngestReport)> {
    parse_long_csv(File::open(path)?, options)
}

pub fn parse_long_csv<R: Read>(input: R, options: &LongCsvOptions) -> Result<(FlowPanel, IngestReport)> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).flexible(true).from_reader(input);
    let mut records = reader.records();
    let header = match records.next() {
        Some(rec) => rec.map_err(csv_error)?,
        None => return Err(Error::EmptyInput),
    };
    let names: Vec<String> = header.iter().map(|h| h.trim_start_matches('\u{feff}').to_ascii_lowercase()).collect();
    let has_year = match names.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["from", "to", "amount"] => false,
        ["from", "to", "amount", "year"] => true,
        _ => {
            return Err(Error::Parse { line: 1, reason: "expected header `from,to,amount[,year]`".into() });
        }
    };
    let width = names.len();

    let mut report = IngestReport::default();
    let mut order: Vec<String> = Vec::new();
    let mut seen: HashMap<String, ()> = HashMap::new();
    let mut rows: Vec<(i32, String, String, f64)> = Vec::new();
    for rec in records {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if rec.len() != width {
            return Err(Error::Parse { line, reason: format!("expected {width} fields, found {}", rec.len()) });
        }
        report.records += 1;
        let (from, to) = (rec[0].to_owned(), rec[1].to_owned());
        if from.is_empty() || to.is_empty() {
            return Err(Error::Parse { line, reason: "empty entity code".into() });
        }
        let amount = parse_amount(&rec[2], line)?;
        if !amount.is_finite() {
            return Err(at(line, Error::NonFiniteAmount { from, to }));
        }
        if amount < 0.0 {
            return Err(at(line, Error::NegativeAmount { from, to, amount }));
        }
        let year = if has_year {
            rec[3].parse::<i32>().map_err(|e| Error::Parse { line, reason: format!("bad year `{}`: {e}", &rec[3]) })?
        } else {
            0
        };
        if from == to {
            if amount == 0.0 {
                continue;
            }
            if options.drop_self_flows {
                report.self_flows_dropped += 1;
                report.dropped_lines.push(line);
                continue;
            }
            return Err(at(line, Error::SelfFlow { code: from, amount }));
        }
        if let Some(reg) = &options.registry {
            for code in [&from, &to] {
                if !reg.contains(code) {
                    return Err(at(line, Error::UnknownEntity(code.clone())));
                }
            }
        } else {
            for code in [&from, &to] {
                if seen.insert(code.clone(), ()).is_none() {
                    order.push(code.clone());
                }
            }
        }
        rows.push((year, from, to, amount));
    }
    if report.records == 0 {
        return Err(Error::EmptyInput);
    }
    let registry = match &options.registry {
        Some(reg) => reg.clone(),
        None => Registry::from_codes(order)?,
    };
    let mut grouped: BTreeMap<i32, Vec<(String, String, f64)>> = BTreeMap::new();
    for (year, from, to, amount) in rows {
        grouped.entry(year).or_default().push((from, to, amount));
    }
    if grouped.is_empty() {
        // every record was a dropped self-flow
        return Err(Error::EmptyInput);
    }
    let by_year = grouped
        .into_iter()
        .map(|(year, entries)| Ok((year, build_flow_matrix(registry.clone(), entries)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok((FlowPanel::new(registry, by_year)?, report))
}

/// Writes a panel in long format. The `year` column is omitted for a panel
/// consisting of year 0 only.
pub fn write_long_csv<W: Write>(panel: &FlowPanel, out: W) -> Result<()> {
    let with_year = panel.years().ne([0]);
    let mut w = csv::Writer::from_writer(out);
    if with_year {
        w.write_record(["from", "to", "amount", "year"]).map_err(csv_error)?;
    } else {
        w.write_record(["from", "to", "amount"]).map_err(csv_error)?;
    }
    for (year, m) in panel.iter() {
        let reg = m.registry();
        for (i, j, amount) in m.entries() {
            let amount = amount.to_string();
            let year = year.to_string();
            let mut rec = vec![reg.code(i), reg.code(j), amount.as_str()];
            if with_year {
                rec.push(year.as_str());
            }
            w.write_record(&rec).map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_wide_csv(path: impl AsRef<Path>) -> Result<FlowMatrix> {
    parse_wide_csv(File::open(path)?)
}

pub fn parse_wide_csv<R: Read>(input: R) -> Result<FlowMatrix> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).flexible(true).from_reader(input);
    let mut records = reader.records();
    let header = match records.next() {
        Some(rec) => rec.map_err(csv_error)?,
        None => return Err(Error::EmptyInput),
    };
    let corner = header.get(0).unwrap_or("").trim_start_matches('\u{feff}');
    if !(corner.is_empty() || corner.eq_ignore_ascii_case("entity")) {
        return Err(Error::Parse { line: 1, reason: "first cell must be empty or `entity`".into() });
    }
    let columns: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let registry = Registry::from_codes(columns.iter().cloned()).map_err(|e| at(1, e))?;
    let n = registry.len();

    let mut flows = vec![0.0; n * n];
    let mut filled = vec![false; n];
    let mut row_labels = Vec::new();
    for rec in records {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if rec.len() != n + 1 {
            return Err(Error::NonSquare(format!("line {line} has {} cells, expected {}", rec.len(), n + 1)));
        }
        let label = rec[0].to_owned();
        row_labels.push(label.clone());
        let Some(i) = registry.index_of(&label) else {
            continue;
        };
        if std::mem::replace(&mut filled[i], true) {
            return Err(Error::Parse { line, reason: format!("row `{label}` appears twice") });
        }
        for (j, cell) in rec.iter().skip(1).enumerate() {
            if cell.is_empty() {
                continue;
            }
            let amount = parse_amount(cell, line)?;
            if !amount.is_finite() {
                return Err(at(line, Error::NonFiniteAmount { from: label.clone(), to: registry.code(j).to_owned() }));
            }
            if amount < 0.0 {
                return Err(at(
                    line,
                    Error::NegativeAmount { from: label.clone(), to: registry.code(j).to_owned(), amount },
                ));
            }
            if i == j && amount != 0.0 {
                return Err(Error::Parse { line, reason: format!("nonzero diagonal entry {amount} for `{label}`") });
            }
            flows[i * n + j] = amount;
        }
    }
    if row_labels.is_empty() {
        return Err(Error::EmptyInput);
    }
    if row_labels.len() != n {
        return Err(Error::NonSquare(format!("{} rows but {} columns", row_labels.len(), n)));
    }
    let mut rows_sorted = row_labels.clone();
    rows_sorted.sort();
    let mut cols_sorted = columns;
    cols_sorted.sort();
    if rows_sorted != cols_sorted {
        return Err(Error::LabelMismatch(format!("rows {{{}}}, columns {{{}}}", rows_sorted.join(","), cols_sorted.join(","))));
    }
    FlowMatrix::from_dense(registry, flows)
}

/// Writes `a` in wide format, rows and columns in registry order.
pub fn write_wide_csv<W: Write>(a: &FlowMatrix, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let reg = a.registry();
    w.write_record(std::iter::once("entity").chain(reg.codes())).map_err(csv_error)?;
    for i in 0..a.n() {
        let cells: Vec<String> = (0..a.n()).map(|j| a.get(i, j).to_string()).collect();
        w.write_record(std::iter::once(reg.code(i)).chain(cells.iter().map(String::as_str))).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `group_code,member_code` lines. Blank lines and lines starting with
/// `#` are ignored, as is a leading `group_code,member_code` or
/// `group,member` header. Groups keep the order of their first line.
pub fn read_merge_spec(path: impl AsRef<Path>) -> Result<MergeSpec> {
    parse_merge_spec(File::open(path)?)
}

pub fn parse_merge_spec<R: Read>(input: R) -> Result<MergeSpec> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(input);
    let mut groups: Vec<MergeGroup> = Vec::new();
    let mut first = true;
    for rec in reader.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if rec.len() != 2 {
            return Err(Error::Parse { line, reason: "expected `group_code,member_code`".into() });
        }
        let (group, member) = (&rec[0], &rec[1]);
        if std::mem::take(&mut first)
            && matches!((group, member), ("group_code", "member_code") | ("group", "member"))
        {
            continue;
        }
        if group.is_empty() || member.is_empty() {
            return Err(Error::Parse { line, reason: "empty code".into() });
        }
        match groups.iter_mut().find(|g| g.id.code() == group) {
            Some(g) => g.members.push(member.to_owned()),
            None => groups.push(MergeGroup { id: EntityId::new(group)?, members: vec![member.to_owned()] }),
        }
    }
    Ok(MergeSpec::new(groups))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Text,
}

impl std::str::FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "text" => Ok(TableFormat::Text),
            other => Err(format!("unknown format `{other}` (expected csv or text)")),
        }
    }
}

/// A labelled ranking with the scores it came from.
#[derive(Clone, Debug)]
pub struct RankingColumn {
    pub label: String,
    pub ranking: Ranking,
    pub weights: WeightVector,
}

impl RankingColumn {
    pub fn new(label: impl Into<String>, ranking: Ranking, weights: WeightVector) -> Self {
        RankingColumn { label: label.into(), ranking, weights }
    }
}

/// Renders one row per entity (sorted by code) with a `<label>_rank` and a
/// `<label>_score` column per ranking.
pub fn render_ranking_table(columns: &[RankingColumn], format: TableFormat) -> Result<String> {
    let first = columns.first().ok_or(Error::EmptyReport)?;
    let registry = first.ranking.registry();
    if columns.iter().any(|c| c.ranking.registry() != registry || c.weights.registry() != registry) {
        return Err(Error::RegistryMismatch);
    }
    let mut header = vec!["entity".to_owned()];
    for c in columns {
        header.push(format!("{}_rank", c.label));
        header.push(format!("{}_score", c.label));
    }
    let mut order: Vec<usize> = (0..registry.len()).collect();
    order.sort_by(|&i, &j| registry.code(i).cmp(registry.code(j)));
    let rows: Vec<Vec<String>> = order
        .into_iter()
        .map(|i| {
            let mut row = vec![registry.code(i).to_owned()];
            for c in columns {
                row.push(c.ranking.ranks()[i].to_string());
                row.push(format_score(c.weights.values()[i]));
            }
            row
        })
        .collect();
    Ok(render_table(&header, &rows, format))
}

pub fn write_ranking_table(columns: &[RankingColumn], path: impl AsRef<Path>, format: TableFormat) -> Result<()> {
    let text = render_ranking_table(columns, format)?;
    std::fs::write(path, text)?;
    Ok(())
}

/// CSV (no quoting needed for codes and numbers) or right-aligned text.
pub fn render_table(header: &[String], rows: &[Vec<String>], format: TableFormat) -> String {
    let mut out = String::new();
    match format {
        TableFormat::Csv => {
            for row in std::iter::once(header).chain(rows.iter().map(Vec::as_slice)) {
                let cells: Vec<String> = row.iter().map(|c| csv_cell(c)).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
        }
        TableFormat::Text => {
            let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
            for row in rows {
                for (w, c) in widths.iter_mut().zip(row) {
                    *w = (*w).max(c.chars().count());
                }
            }
            for row in std::iter::once(header).chain(rows.iter().map(Vec::as_slice)) {
                let mut line = String::new();
                for (k, (c, w)) in row.iter().zip(&widths).enumerate() {
                    if k == 0 {
                        let _ = write!(line, "{c:<w$}");
                    } else {
                        let _ = write!(line, "  {c:>w$}");
                    }
                }
                out.push_str(line.trim_end());
                out.push('\n');
            }
        }
    }
    out
}

fn csv_cell(c: &str) -> String {
    if c.contains([',', '"', '\n']) {
        format!("\"{}\"", c.replace('"', "\"\""))
    } else {
        c.to_owned()
    }
}

/// Formats with 12 significant digits, dropping trailing zeros (like C's
/// `%.12g`). Zero, including negative zero, prints as `0`.
pub fn format_score(x: f64) -> String {
    if x == 0.0 {
        return "0".to_owned();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_fraction(format!("{x:.decimals$}"))
    } else {
        format!("{}e{}", trim_fraction(mantissa.to_owned()), exp)
    }
}

fn trim_fraction(mut s: String) -> String {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".to_owned();
    }
    s
}

fn parse_amount(cell: &str, line: u64) -> Result<f64> {
    cell.parse::<f64>().map_err(|_| Error::Parse { line, reason: format!("bad amount `{cell}`") })
}

fn at(line: u64, e: Error) -> Error {
    Error::AtLine { line, source: Box::new(e) }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse { line, reason: format!("{other:?}") },
    }
}
