use std::io::{Read, Write};

use ndarray::Array2;

use super::Dataset;
use crate::{Error, Result};

/// Writes `x0,…,x{D-1},true_lid,component_id`; absent labels are empty cells.
pub fn write_dataset_csv<W: Write>(data: &Dataset, writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    let d = data.dim();
    let mut header: Vec<String> = (0..d).map(|k| format!("x{k}")).collect();
    header.push("true_lid".into());
    header.push("component_id".into());
    out.write_record(&header)?;
    let mut record = Vec::with_capacity(d + 2);
    for (i, row) in data.points.rows().into_iter().enumerate() {
        record.clear();
        record.extend(row.iter().map(|v| v.to_string()));
        let label = |v: &Option<Vec<u32>>| v.as_ref().map(|l| l[i].to_string()).unwrap_or_default();
        record.push(label(&data.true_lid));
        record.push(label(&data.component_id));
        out.write_record(&record)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads the format produced by [`write_dataset_csv`]. The label columns are
/// optional; a label column that is empty for every row is treated as absent.
pub fn read_dataset_csv<R: Read>(reader: R) -> Result<Dataset> {
    let mut input = csv::Reader::from_reader(reader);
    let headers = input.headers()?.clone();
    let coord_cols: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with('x') && h[1..].parse::<usize>().is_ok())
        .map(|(i, _)| i)
        .collect();
    if coord_cols.is_empty() {
        return Err(Error::InvalidArgument("no x<k> columns in dataset header".into()));
    }
    let lid_col = headers.iter().position(|h| h == "true_lid");
    let comp_col = headers.iter().position(|h| h == "component_id");

    let mut values = Vec::new();
    let mut lids: Vec<Option<u32>> = Vec::new();
    let mut comps: Vec<Option<u32>> = Vec::new();
    let parse_label = |s: &str| -> Result<Option<u32>> {
        if s.trim().is_empty() {
            Ok(None)
        } else {
            s.trim()
                .parse()
                .map(Some)
                .map_err(|_| Error::InvalidArgument(format!("bad label '{s}'")))
        }
    };
    for record in input.records() {
        let record = record?;
        for &c in &coord_cols {
            let field = record.get(c).unwrap_or("");
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad coordinate '{field}'")))?;
            values.push(v);
        }
        lids.push(match lid_col {
            Some(c) => parse_label(record.get(c).unwrap_or(""))?,
            None => None,
        });
        comps.push(match comp_col {
            Some(c) => parse_label(record.get(c).unwrap_or(""))?,
            None => None,
        });
    }
    let n = lids.len();
    let points = Array2::from_shape_vec((n, coord_cols.len()), values)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let collect = |col: Vec<Option<u32>>| -> Result<Option<Vec<u32>>> {
        if col.iter().all(Option::is_none) {
            Ok(None)
        } else if col.iter().all(Option::is_some) {
            Ok(Some(col.into_iter().flatten().collect()))
        } else {
            Err(Error::InvalidArgument("label column is only partially filled".into()))
        }
    };
    let data = Dataset {
        points,
        true_lid: collect(lids)?,
        component_id: collect(comps)?,
        spec: None,
        seed: 0,
    };
    data.validate()?;
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::{generate, ManifoldKind, ManifoldSpec};
    use proptest::prelude::*;

    #[test]
    fn header_and_empty_labels() {
        let data = Dataset::from_points(ndarray::array![[1.5, -2.0], [0.0, 3.25]]).unwrap();
        let mut buf = Vec::new();
        write_dataset_csv(&data, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "x0,x1,true_lid,component_id\n1.5,-2,,\n0,3.25,,\n");
        let back = read_dataset_csv(text.as_bytes()).unwrap();
        assert_eq!(back.points, data.points);
        assert!(back.true_lid.is_none() && back.component_id.is_none());
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(seed in 0u64..1000, n in 1usize..50) {
            let spec = ManifoldSpec::new(ManifoldKind::lollipop());
            let data = generate(&spec, n, seed).unwrap();
            let mut buf = Vec::new();
            write_dataset_csv(&data, &mut buf).unwrap();
            let back = read_dataset_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(&back.points, &data.points);
            prop_assert_eq!(&back.true_lid, &data.true_lid);
            prop_assert_eq!(&back.component_id, &data.component_id);
        }
    }
}
