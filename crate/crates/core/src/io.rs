//! CSV ingestion and export for the event log and the catalog.
//!
//! Interactions: `customer_id,item_id,action,timestamp`
//! Catalog: `item_id,retail_price,price`

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::domain::{Action, Catalog, Dataset, Interaction, ItemId, ItemRecord};
use crate::error::{Error, Result};

pub const INTERACTIONS_HEADER: [&str; 4] = ["customer_id", "item_id", "action", "timestamp"];
pub const CATALOG_HEADER: [&str; 3] = ["item_id", "retail_price", "price"];

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_owned(),
        line,
        message: message.into(),
    }
}

fn csv_err(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line());
    match err.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_owned(),
            source,
        },
        kind => parse_err(path, line, format!("{kind:?}")),
    }
}

fn check_header(path: &Path, reader: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let header = reader.headers().map_err(|e| csv_err(path, e))?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(parse_err(
            path,
            1,
            format!(
                "expected header '{}', found '{}'",
                expected.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    Ok(())
}

fn reader(input: impl Read) -> csv::Reader<impl Read> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

/// Parses an interactions CSV. `path` is only used in error messages.
pub fn parse_interactions(input: impl Read, path: &Path) -> Result<Vec<Interaction>> {
    let mut rdr = reader(input);
    check_header(path, &mut rdr, &INTERACTIONS_HEADER)?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let action: Action = record[2]
            .parse()
            .map_err(|e: Error| parse_err(path, line, e.to_string()))?;
        let timestamp: i64 = record[3]
            .parse()
            .map_err(|_| parse_err(path, line, format!("timestamp '{}' is not an integer", &record[3])))?;
        out.push(Interaction {
            customer_id: record[0].into(),
            item_id: record[1].into(),
            action,
            timestamp,
        });
    }
    Ok(out)
}

/// Parses a catalog CSV, returning records with their 1-based line numbers.
/// Duplicate item ids are a parse error.
pub fn parse_catalog_lines(input: impl Read, path: &Path) -> Result<Vec<(u64, ItemRecord)>> {
    let mut rdr = reader(input);
    check_header(path, &mut rdr, &CATALOG_HEADER)?;
    let mut out = Vec::new();
    let mut seen = std::collections::HashMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let number = |field: &str, raw: &str| -> Result<f64> {
            raw.parse::<f64>()
                .map_err(|_| parse_err(path, line, format!("{field} '{raw}' is not a number")))
        };
        let item = ItemRecord {
            item_id: record[0].into(),
            retail_price: number("retail_price", &record[1])?,
            price: number("price", &record[2])?,
        };
        if let Some(first) = seen.insert(item.item_id.clone(), line) {
            return Err(parse_err(
                path,
                line,
                format!("duplicate item_id '{}' (first seen on line {first})", item.item_id),
            ));
        }
        out.push((line, item));
    }
    Ok(out)
}

pub fn read_interactions(path: &Path) -> Result<Vec<Interaction>> {
    parse_interactions(open(path)?, path)
}

pub fn read_catalog_lines(path: &Path) -> Result<Vec<(u64, ItemRecord)>> {
    parse_catalog_lines(open(path)?, path)
}

pub fn read_catalog(path: &Path) -> Result<Catalog> {
    Ok(Dataset::catalog_from_records(
        read_catalog_lines(path)?.into_iter().map(|(_, r)| r),
    ))
}

pub fn read_dataset(interactions: &Path, catalog: &Path) -> Result<Dataset> {
    Ok(Dataset::new(read_interactions(interactions)?, read_catalog(catalog)?))
}

pub fn write_interactions(out: impl Write, interactions: &[Interaction]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(INTERACTIONS_HEADER)?;
    for i in interactions {
        w.write_record([
            i.customer_id.as_str(),
            i.item_id.as_str(),
            i.action.as_str(),
            &i.timestamp.to_string(),
        ])?;
    }
    w.flush()
}

pub fn write_catalog(out: impl Write, catalog: &Catalog) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CATALOG_HEADER)?;
    for r in catalog.values() {
        w.write_record([r.item_id.as_str(), &r.retail_price.to_string(), &r.price.to_string()])?;
    }
    w.flush()
}

/// Writes `interactions.csv` and `catalog.csv` into `dir`.
pub fn write_dataset(dir: &Path, d: &Dataset) -> Result<()> {
    let io = |path: &Path, source| Error::Io {
        path: path.to_owned(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let ip = dir.join("interactions.csv");
    let cp = dir.join("catalog.csv");
    write_interactions(File::create(&ip).map_err(|e| io(&ip, e))?, &d.interactions).map_err(|e| io(&ip, e))?;
    write_catalog(File::create(&cp).map_err(|e| io(&cp, e))?, &d.catalog).map_err(|e| io(&cp, e))?;
    Ok(())
}

/// SHA-256 over the canonical CSV encoding of the dataset (interactions in
/// their stored order, then the catalog).
pub fn dataset_hash(d: &Dataset) -> String {
    let mut buf = Vec::new();
    write_interactions(&mut buf, &d.interactions).expect("in-memory write");
    write_catalog(&mut buf, &d.catalog).expect("in-memory write");
    hex::encode(Sha256::digest(&buf))
}

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn item_line(lines: &[(u64, ItemRecord)], item: &ItemId) -> Option<u64> {
    lines.iter().find(|(_, r)| &r.item_id == item).map(|(line, _)| *line)
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: &str = "test.csv";

    #[test]
    fn parses_interactions() {
        let csv = "customer_id,item_id,action,timestamp\nu1,a,view,5\nu1,a,purchase,7\n";
        let rows = parse_interactions(csv.as_bytes(), Path::new(P)).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1], Interaction::new("u1", "a", Action::Purchase, 7));
    }

    #[test]
    fn bad_action_reports_line() {
        let csv = "customer_id,item_id,action,timestamp\nu1,a,view,5\nu1,a,Buy,7\n";
        match parse_interactions(csv.as_bytes(), Path::new(P)) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_header_is_rejected() {
        let csv = "user,item,action,ts\n";
        assert!(matches!(
            parse_interactions(csv.as_bytes(), Path::new(P)),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn ragged_row_is_a_parse_error() {
        let csv = "item_id,retail_price,price\na,1.0\n";
        assert!(matches!(
            parse_catalog_lines(csv.as_bytes(), Path::new(P)),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn catalog_keeps_lines_and_rejects_duplicates() {
        let csv = "item_id,retail_price,price\na,10.5,5\nb,0,1\n";
        let rows = parse_catalog_lines(csv.as_bytes(), Path::new(P)).unwrap();
        assert_eq!(rows[1].0, 3);
        assert_eq!(rows[1].1.retail_price, 0.0);

        let dup = "item_id,retail_price,price\na,1,1\na,2,2\n";
        assert!(matches!(
            parse_catalog_lines(dup.as_bytes(), Path::new(P)),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = read_interactions(Path::new("/definitely/not/here.csv")).unwrap_err();
        assert!(err.is_input_error());
    }

    #[test]
    fn csv_round_trip() {
        let d = Dataset::new(
            vec![Interaction::new("u1", "a", Action::Purchase, 3)],
            Dataset::catalog_from_records([ItemRecord::new("a", 12.345, 0.1)]),
        );
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &d).unwrap();
        let back = read_dataset(&dir.path().join("interactions.csv"), &dir.path().join("catalog.csv")).unwrap();
        assert_eq!(back, d);
        assert_eq!(dataset_hash(&back), dataset_hash(&d));
    }
}
