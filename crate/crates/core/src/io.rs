//! Plain-text mesh, field and snapshot-store files.
//!
//! Mesh (`.mesh.txt`): `dim n_nodes n_elems`, one coordinate line per node,
//! one line of 0-based node ids per element.
//!
//! Fields (`.field.txt`): `n_nodes n_fields`, a line of field names, then one
//! row of values per node.
//!
//! Store: a directory with `manifest.txt`, one `index time mesh_file
//! field_file` line per snapshot. A mesh file is shared by consecutive
//! snapshots on the same mesh.
//!
//! Reals are written with 17 significant digits, times in shortest
//! round-trip form.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::fem::FeField;
use crate::mesh::SimplicialMesh;
use crate::series::{Snapshot, SnapshotSeries};
use crate::text::LineCursor;

pub const MANIFEST: &str = "manifest.txt";

pub fn write_mesh(mesh: &SimplicialMesh, w: &mut impl Write) -> Result<()> {
    writeln!(w, "{} {} {}", mesh.dim(), mesh.n_nodes(), mesh.n_elements())?;
    for i in 0..mesh.n_nodes() {
        let line: Vec<String> = mesh.node(i).iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    for e in 0..mesh.n_elements() {
        let line: Vec<String> = mesh.element(e).iter().map(|n| n.to_string()).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn read_mesh(r: impl BufRead, source_name: &str) -> Result<SimplicialMesh> {
    let mut cur = LineCursor::new(r, source_name)?;
    let head: Vec<usize> = cur.values(3, "mesh header")?;
    let (dim, nn, ne) = (head[0], head[1], head[2]);
    if !(1..=2).contains(&dim) {
        return Err(cur.error(format!("dimension must be 1 or 2, got {dim}")));
    }
    let mut coords = Vec::with_capacity(nn * dim);
    for _ in 0..nn {
        coords.extend(cur.values::<f64>(dim, "node coordinates")?);
    }
    let mut cells = Vec::with_capacity(ne * (dim + 1));
    for _ in 0..ne {
        cells.extend(cur.values::<usize>(dim + 1, "element")?);
    }
    cur.finish()?;
    SimplicialMesh::new(dim, coords, cells).map_err(|e| cur.error(e.to_string()))
}

pub fn write_fields(fields: &[FeField], w: &mut impl Write) -> Result<()> {
    let n = fields.first().map_or(0, |f| f.values.len());
    if fields.iter().any(|f| f.values.len() != n || f.name.split_whitespace().count() != 1) {
        return Err(invalid("fields must share a length and have single-word names"));
    }
    writeln!(w, "{n} {}", fields.len())?;
    writeln!(w, "{}", fields.iter().map(|f| f.name.as_str()).collect::<Vec<_>>().join(" "))?;
    for i in 0..n {
        let row: Vec<String> = fields.iter().map(|f| format!("{:.16e}", f.values[i])).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn read_fields(r: impl BufRead, source_name: &str, mesh: Arc<SimplicialMesh>) -> Result<Vec<FeField>> {
    let mut cur = LineCursor::new(r, source_name)?;
    let head: Vec<usize> = cur.values(2, "field header")?;
    let (n, k) = (head[0], head[1]);
    if n != mesh.n_nodes() {
        return Err(cur.error(format!("{n} values per field but the mesh has {} nodes", mesh.n_nodes())));
    }
    let names: Vec<String> = cur.values(k, "field names")?;
    let mut cols = vec![Vec::with_capacity(n); k];
    for _ in 0..n {
        for (c, v) in cols.iter_mut().zip(cur.values::<f64>(k, "field values")?) {
            c.push(v);
        }
    }
    cur.finish()?;
    names
        .into_iter()
        .zip(cols)
        .map(|(name, values)| FeField::new(mesh.clone(), values, name).map_err(|e| cur.error(e.to_string())))
        .collect()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

pub fn write_mesh_file(mesh: &SimplicialMesh, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    write_mesh(mesh, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_mesh_file(path: &Path) -> Result<SimplicialMesh> {
    read_mesh(open(path)?, &path.display().to_string())
}

/// Writes the series into the existing directory `dir`.
pub fn write_store(series: &SnapshotSeries, dir: &Path) -> Result<()> {
    let mut manifest = create(&dir.join(MANIFEST))?;
    let mut last_mesh: Option<(Arc<SimplicialMesh>, String)> = None;
    let mut mesh_count = 0;
    for s in &series.snapshots {
        let mesh_name = match &last_mesh {
            Some((m, name)) if Arc::ptr_eq(m, s.mesh()) || m.same_geometry(s.mesh()) => name.clone(),
            _ => {
                let name = format!("mesh_{mesh_count:04}.mesh.txt");
                mesh_count += 1;
                write_mesh_file(s.mesh(), &dir.join(&name))?;
                last_mesh = Some((s.mesh().clone(), name.clone()));
                name
            }
        };
        let field_name = format!("snap_{:05}.field.txt", s.index);
        let mut w = create(&dir.join(&field_name))?;
        write_fields(&s.fields, &mut w)?;
        w.flush()?;
        writeln!(manifest, "{} {} {} {}", s.index, s.time, mesh_name, field_name)?;
    }
    manifest.flush()?;
    Ok(())
}

pub fn read_store(dir: &Path) -> Result<SnapshotSeries> {
    let manifest_path = dir.join(MANIFEST);
    let mut cur = LineCursor::new(open(&manifest_path)?, &manifest_path.display().to_string())?;
    let mut meshes: HashMap<String, Arc<SimplicialMesh>> = HashMap::new();
    let mut snaps = Vec::new();
    while let Some(line) = cur.next_content() {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 4 {
            return Err(cur.error("expected `index time mesh_file field_file`"));
        }
        let index: usize = parts[0].parse().map_err(|_| cur.error(format!("bad index `{}`", parts[0])))?;
        let time: f64 = parts[1].parse().map_err(|_| cur.error(format!("bad time `{}`", parts[1])))?;
        let mesh = match meshes.get(parts[2]) {
            Some(m) => m.clone(),
            None => {
                let m = Arc::new(read_mesh_file(&dir.join(parts[2]))?);
                meshes.insert(parts[2].to_string(), m.clone());
                m
            }
        };
        let fpath = dir.join(parts[3]);
        let fields = read_fields(open(&fpath)?, &fpath.display().to_string(), mesh)?;
        snaps.push(Snapshot::new(index, time, fields).map_err(|e| cur.error(e.to_string()))?);
    }
    SnapshotSeries::new(snaps).map_err(|e| cur.error(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::mesh::{build_interval_mesh, build_structured_triangle_mesh};

    #[test]
    fn mesh_round_trip() {
        let m = build_structured_triangle_mesh((-1.0, 1.0), (0.0, 0.3), 3, 2).unwrap();
        let mut buf = Vec::new();
        write_mesh(&m, &mut buf).unwrap();
        let back = read_mesh(buf.as_slice(), "mem").unwrap();
        assert!(back.same_geometry(&m));
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("2 12 12\n"));
    }

    #[test]
    fn bad_mesh_reports_line() {
        match read_mesh("1 2 1\n0.0\nx\n0 1\n".as_bytes(), "m") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(read_mesh("1 2 1\n0.0\n1.0\n0 5\n".as_bytes(), "m").is_err());
    }

    #[test]
    fn store_round_trip_shares_meshes() {
        let dir = tempfile::tempdir().unwrap();
        let a = Arc::new(build_interval_mesh(0.0, 1.0, 3).unwrap());
        let b = Arc::new(build_interval_mesh(0.0, 1.0, 5).unwrap());
        let snaps = [(&a, 0.0), (&a, 0.25), (&b, 0.5)]
            .iter()
            .enumerate()
            .map(|(k, (m, t))| {
                let f = FeField::interpolate((*m).clone(), "s", |x| x[0] + t).unwrap();
                let g = FeField::constant((*m).clone(), "e", 1.0 / 3.0).unwrap();
                Snapshot::new(k, *t, vec![f, g]).unwrap()
            })
            .collect();
        let series = SnapshotSeries::new(snaps).unwrap();
        write_store(&series, dir.path()).unwrap();
        let manifest = std::fs::read_to_string(dir.path().join(MANIFEST)).unwrap();
        assert_eq!(
            manifest,
            "0 0 mesh_0000.mesh.txt snap_00000.field.txt\n1 0.25 mesh_0000.mesh.txt snap_00001.field.txt\n2 0.5 mesh_0001.mesh.txt snap_00002.field.txt\n"
        );
        let back = read_store(dir.path()).unwrap();
        assert_eq!(back.len(), 3);
        assert!(Arc::ptr_eq(back.snapshots[0].mesh(), back.snapshots[1].mesh()));
        for (x, y) in back.snapshots.iter().zip(&series.snapshots) {
            assert_eq!(x.time, y.time);
            for (f, g) in x.fields.iter().zip(&y.fields) {
                assert_eq!(f.name, g.name);
                assert_eq!(f.values, g.values);
            }
        }
    }
}
