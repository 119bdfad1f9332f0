//! Delimited text to [`Table`] and back.

use tsqa_core::Table;

use crate::{Error, Result};

/// Parses comma-separated text with a header row.
pub fn parse_table(csv_text: &[u8], table_id: &str) -> Result<Table> {
    parse_delimited(csv_text, table_id, b',', true)
}

/// Parses tab-separated text with a header row and no quoting.
pub fn parse_tsv(text: &[u8], table_id: &str) -> Result<Table> {
    parse_delimited(text, table_id, b'\t', false)
}

fn parse_delimited(input: &[u8], table_id: &str, delimiter: u8, quoting: bool) -> Result<Table> {
    let input = input.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(input);
    if input.iter().all(u8::is_ascii_whitespace) {
        return Err(Error::EmptyInput);
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(delimiter)
        .quoting(quoting)
        .from_reader(input);
    let mut records = reader.records();
    let header = match records.next() {
        Some(h) => h?,
        None => return Err(Error::EmptyInput),
    };
    let rows = records
        .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect::<Vec<_>>()))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Table::from_records(table_id, header.iter(), rows).map_err(|source| Error::Table {
        table: table_id.to_string(),
        source,
    })
}

/// Serializes the header and raw cell values as RFC 4180 CSV.
pub fn table_to_csv(table: &Table) -> Vec<u8> {
    let mut writer = csv::WriterBuilder::new()
        .quote_style(csv::QuoteStyle::Necessary)
        .from_writer(Vec::new());
    for record in table.records() {
        writer
            .write_record(&record)
            .expect("writing to memory cannot fail");
    }
    writer.into_inner().expect("writing to memory cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use tsqa_core::TableError;

    const TABLE_ONE: &str = "Title,Semantic representation,Data type,Scope,High level claims\n\
        Paper 1,ORKG,Free text,Summary,Yes\n\
        Paper 2,Nanopublications,Free text,Statement level,Yes\n\
        Paper 3,RASH,Quoted text,Full paper,Partially\n";

    #[test]
    fn parses_table_one() {
        let t = parse_table(TABLE_ONE.as_bytes(), "t1").unwrap();
        assert_eq!((t.num_rows(), t.num_columns()), (3, 5));
        assert_eq!(t.columns[2].name, "Data type");
        assert_eq!(t.rows[2][1].raw, "RASH");
    }

    #[test]
    fn header_only() {
        let t = parse_table(b"a,b,c\n", "h").unwrap();
        assert_eq!(t.num_rows(), 0);
    }

    #[test]
    fn ragged_row() {
        let err = parse_table(b"a,b,c,d\n1,2,3\n", "r").unwrap_err();
        assert!(matches!(
            err,
            Error::Table {
                source: TableError::RaggedRow {
                    row: 1,
                    expected: 4,
                    found: 3
                },
                ..
            }
        ));
    }

    #[test]
    fn empty_input() {
        assert!(matches!(parse_table(b"", "e"), Err(Error::EmptyInput)));
        assert!(matches!(
            parse_table(b"\xEF\xBB\xBF \n", "e"),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn quoted_fields_and_bom() {
        let t = parse_table(b"\xEF\xBB\xBFname,\"note\"\nx,\"a, \"\"b\"\"\nc\"\n", "q").unwrap();
        assert_eq!(t.columns[0].name, "name");
        assert_eq!(t.rows[0][1].raw, "a, \"b\"\nc");
    }

    #[test]
    fn tsv_has_no_quoting() {
        let t = parse_tsv(b"a\tb\nx\t\"y\n", "t").unwrap();
        assert_eq!(t.rows[0][1].raw, "\"y");
    }

    fn arb_records() -> impl Strategy<Value = (Vec<String>, Vec<Vec<String>>)> {
        (1usize..5, 0usize..5).prop_flat_map(|(cols, rows)| {
            let header = Just((0..cols).map(|c| format!("col {c}")).collect::<Vec<_>>());
            let body = proptest::collection::vec(
                proptest::collection::vec("[a-zA-Z0-9 ,\"\n.%-]{0,8}", cols),
                rows,
            );
            (header, body)
        })
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_stable((header, rows) in arb_records()) {
            let t = Table::from_records("rt", header, rows).unwrap();
            let bytes = table_to_csv(&t);
            let again = parse_table(&bytes, "rt").unwrap();
            prop_assert_eq!(&again, &t);
            prop_assert_eq!(table_to_csv(&again), bytes);
        }
    }
}
