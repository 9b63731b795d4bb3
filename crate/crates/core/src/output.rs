use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::analysis::Field;
use crate::error::Result;
use crate::sim::{FieldState, Grid, SimResult};

/// One row per cell and snapshot: `t, x, u, v, u1, v1`. The reversible
/// columns are empty for the memory-free system.
pub fn write_snapshots_csv(path: &Path, snapshots: &[FieldState]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "x", "u", "v", "u1", "v1"])?;
    for s in snapshots {
        let full = !s.u1.is_empty();
        for (i, x) in s.grid.centers().into_iter().enumerate() {
            let opt = |f: &[f64]| if full { f[i].to_string() } else { String::new() };
            w.write_record([
                s.t.to_string(),
                x.to_string(),
                s.u[i].to_string(),
                s.v[i].to_string(),
                opt(&s.u1),
                opt(&s.v1),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Long-format space-time table: `t, x` and one column per field.
pub fn write_spacetime_csv(path: &Path, snapshots: &[FieldState], fields: &[Field]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t".to_string(), "x".to_string()];
    header.extend(fields.iter().map(|f| f.name().to_string()));
    w.write_record(&header)?;
    for s in snapshots {
        let cols: Vec<Vec<f64>> = fields.iter().map(|f| f.extract(s)).collect::<Result<_>>()?;
        for (i, x) in s.grid.centers().into_iter().enumerate() {
            let mut row = vec![s.t.to_string(), x.to_string()];
            row.extend(cols.iter().map(|c| c[i].to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Serializable rows to CSV, header from the field names.
pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

/// `snapshots.csv` and `meta.json` in `dir`.
pub fn write_run(dir: &Path, run: &SimResult) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_snapshots_csv(&dir.join("snapshots.csv"), &run.snapshots)?;
    write_json(&dir.join("meta.json"), &run.meta)
}

#[derive(serde::Deserialize)]
struct SnapshotRow {
    t: f64,
    u: f64,
    v: f64,
    u1: Option<f64>,
    v1: Option<f64>,
}

/// Reads a file written by [`write_snapshots_csv`]. Rows sharing a time form
/// one snapshot on the unit interval.
pub fn read_snapshots_csv(path: &Path) -> Result<Vec<FieldState>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut groups: Vec<(f64, Vec<SnapshotRow>)> = Vec::new();
    for row in rdr.deserialize() {
        let row: SnapshotRow = row?;
        match groups.last_mut() {
            Some((t, rows)) if *t == row.t => rows.push(row),
            _ => groups.push((row.t, vec![row])),
        }
    }
    groups
        .into_iter()
        .map(|(t, rows)| {
            let grid = Grid::new(rows.len())?;
            let col = |f: fn(&SnapshotRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
            let mut s = if rows[0].u1.is_some() && rows[0].v1.is_some() {
                FieldState::full(
                    grid,
                    col(|r| r.u),
                    col(|r| r.v),
                    col(|r| r.u1.unwrap_or(f64::NAN)),
                    col(|r| r.v1.unwrap_or(f64::NAN)),
                )?
            } else {
                FieldState::memory_free(grid, col(|r| r.u), col(|r| r.v))?
            };
            s.t = t;
            Ok(s)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_rows() {
        let g = Grid::new(16).unwrap();
        let s = FieldState::memory_free(g, vec![1.0; 16], vec![1.0; 16]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_snapshots_csv(&p, &[s.clone(), s]).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 33);
        assert!(text.lines().nth(1).unwrap().ends_with(",,"));
    }

    #[test]
    fn snapshots_round_trip() {
        let g = Grid::new(20).unwrap();
        let u: Vec<f64> = (0..20).map(|i| 1.0 + 0.01 * i as f64).collect();
        let mut a = FieldState::full(g, u.clone(), u.clone(), vec![0.3; 20], vec![0.4; 20]).unwrap();
        let mut b = a.clone();
        a.t = 0.0;
        b.t = 0.5;
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_snapshots_csv(&p, &[a.clone(), b]).unwrap();
        let back = read_snapshots_csv(&p).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0], a);
        assert_eq!(back[1].t, 0.5);
    }

    #[test]
    fn spacetime_needs_full_fields() {
        let g = Grid::new(16).unwrap();
        let s = FieldState::memory_free(g, vec![1.0; 16], vec![1.0; 16]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("st.csv");
        assert!(write_spacetime_csv(&p, std::slice::from_ref(&s), &[Field::U, Field::V]).is_ok());
        assert!(write_spacetime_csv(&p, &[s], &[Field::U1OverU]).is_err());
    }
}
