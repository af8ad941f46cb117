use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::seed;

use super::{Dataset, FlowRecord, Schema};

/// Parses one feature cell. Empty and `NaN` tokens, and anything that is
/// not a number, become NaN (missing). Infinity tokens become `±inf`.
fn parse_cell(token: &str) -> f64 {
    let t = token.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("nan") {
        return f64::NAN;
    }
    let (neg, body) = match t.as_bytes()[0] {
        b'-' => (true, &t[1..]),
        b'+' => (false, &t[1..]),
        _ => (false, t),
    };
    if body.eq_ignore_ascii_case("inf") || body.eq_ignore_ascii_case("infinity") {
        return if neg { f64::NEG_INFINITY } else { f64::INFINITY };
    }
    t.parse::<f64>().unwrap_or(f64::NAN)
}

/// Loads a flow CSV. The schema is the header order minus `label_column`.
///
/// With `sample_fraction < 1` each data row is kept by its own seeded
/// Bernoulli draw, keyed on the row index, so the selected set does not
/// depend on how the file is read.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str, sample_fraction: f64, seed: u64) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(BufReader::new(file), &path.display().to_string(), label_column, sample_fraction, seed)
}

pub fn read_csv<R: Read>(
    reader: R,
    source: &str,
    label_column: &str,
    sample_fraction: f64,
    seed: u64,
) -> Result<Dataset> {
    if !(sample_fraction > 0.0 && sample_fraction <= 1.0) {
        return Err(Error::param(format!("sample fraction {sample_fraction} outside (0, 1]")));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let label_column = label_column.trim();
    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingLabelColumn(label_column.to_string()))?;
    let feature_idx: Vec<usize> = (0..header.len()).filter(|&i| i != label_idx).collect();
    let schema = Schema::new(feature_idx.iter().map(|&i| header[i].clone()).collect(), label_column)?;

    let mut records = Vec::new();
    let mut row = csv::StringRecord::new();
    let mut index: u64 = 0;
    while rdr.read_record(&mut row)? {
        let i = index;
        index += 1;
        if row.len() != header.len() {
            let line = row.position().map_or(i + 2, |p| p.line());
            return Err(Error::Arity {
                line,
                expected: header.len(),
                found: row.len(),
            });
        }
        if sample_fraction < 1.0 && seed::unit(seed, i) >= sample_fraction {
            continue;
        }
        let values = feature_idx.iter().map(|&j| parse_cell(&row[j])).collect();
        records.push(FlowRecord::new(values, row[label_idx].trim()));
    }

    let provenance = if sample_fraction < 1.0 {
        format!("{source} (sample {sample_fraction}, seed {seed})")
    } else {
        source.to_string()
    };
    Dataset::new(schema, records, provenance)
}

/// Writes features in schema order followed by the label column.
pub fn write_csv_to<W: Write>(d: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let schema = d.schema();
    w.write_record(
        schema
            .feature_names()
            .iter()
            .map(String::as_str)
            .chain(std::iter::once(schema.label_column())),
    )?;
    let mut buf: Vec<String> = Vec::with_capacity(schema.dim() + 1);
    for r in d.records() {
        buf.clear();
        buf.extend(r.values.iter().map(|v| v.to_string()));
        buf.push(r.label.clone());
        w.write_record(&buf)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn write_csv(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(d, BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::CellKind;

    fn read(text: &str, fraction: f64, seed: u64) -> Result<Dataset> {
        read_csv(text.as_bytes(), "mem", "Label", fraction, seed)
    }

    #[test]
    fn loads_two_rows() {
        let d = read("a, b ,Label\n1,2,BENIGN\n3,4,DoS\n", 1.0, 0).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.schema().feature_names(), ["a", "b"]);
        assert_eq!(d.records()[1].values, vec![3.0, 4.0]);
        assert_eq!(d.records()[1].label, "DoS");
    }

    #[test]
    fn label_in_middle() {
        let d = read("a,Label,b\n1,x,2\n", 1.0, 0).unwrap();
        assert_eq!(d.schema().feature_names(), ["a", "b"]);
        assert_eq!(d.records()[0].values, vec![1.0, 2.0]);
    }

    #[test]
    fn missing_label_column() {
        let err = read("a,b\n1,2\n", 1.0, 0).unwrap_err();
        assert!(err.to_string().contains("label column not found"), "{err}");
    }

    #[test]
    fn arity_error_names_line() {
        let err = read("a,b,Label\n1,2,x\n1,x\n", 1.0, 0).unwrap_err();
        match err {
            Error::Arity { line, expected, found } => {
                assert_eq!((line, expected, found), (3, 3, 2));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn tags_missing_and_non_finite() {
        let d = read(
            "a,b,c,d,e,f,g,Label\n,NaN,nan,Infinity,-inf,+INF,abc,x\n",
            1.0,
            0,
        )
        .unwrap();
        let r = &d.records()[0];
        let kinds: Vec<_> = (0..7).map(|i| r.cell(i)).collect();
        use CellKind::*;
        assert_eq!(kinds, [Missing, Missing, Missing, NonFinite, NonFinite, NonFinite, Missing]);
        assert_eq!(r.values[4], f64::NEG_INFINITY);
    }

    #[test]
    fn rejects_bad_fraction() {
        assert!(read("a,Label\n1,x\n", 0.0, 0).is_err());
        assert!(read("a,Label\n1,x\n", 1.5, 0).is_err());
    }
}
