//! Plain-text model file.
//!
//! ```text
//! amrdmd-model 1
//! n <n>
//! r <r>
//! t0 <t0>
//! dt_o <dt_o>
//! field <name>
//! lambda        r lines `re im`
//! omega         r lines `re im`
//! b             r lines `re im`
//! modes         n·r lines `re im`, column by column
//! ```
//!
//! Numbers carry 17 significant digits so a round trip is bit exact.

use std::io::{BufRead, Write};

use num_complex::Complex64;

use super::DmdModel;
use crate::error::Result;
use crate::linalg::ComplexMatrix;
use crate::text::LineCursor;

const MAGIC: &str = "amrdmd-model 1";

fn write_complex(w: &mut impl Write, z: &Complex64) -> Result<()> {
    writeln!(w, "{:.16e} {:.16e}", z.re, z.im)?;
    Ok(())
}

pub fn write_model(model: &DmdModel, w: &mut impl Write) -> Result<()> {
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "n {}", model.n())?;
    writeln!(w, "r {}", model.rank())?;
    writeln!(w, "t0 {:.16e}", model.t0)?;
    writeln!(w, "dt_o {:.16e}", model.dt_o)?;
    writeln!(w, "field {}", model.field_name)?;
    for (tag, v) in [("lambda", &model.lambda), ("omega", &model.omega), ("b", &model.amplitudes)] {
        writeln!(w, "{tag}")?;
        for z in v {
            write_complex(w, z)?;
        }
    }
    writeln!(w, "modes")?;
    for j in 0..model.modes.cols() {
        for i in 0..model.modes.rows() {
            write_complex(w, &model.modes[(i, j)])?;
        }
    }
    Ok(())
}

fn read_complex(cur: &mut LineCursor, count: usize, what: &str) -> Result<Vec<Complex64>> {
    (0..count)
        .map(|_| {
            let v: Vec<f64> = cur.values(2, what)?;
            if !v.iter().all(|x| x.is_finite()) {
                return Err(cur.error(format!("non-finite entry in {what}")));
            }
            Ok(Complex64::new(v[0], v[1]))
        })
        .collect()
}

pub fn read_model(r: impl BufRead, source_name: &str) -> Result<DmdModel> {
    let mut cur = LineCursor::new(r, source_name)?;
    let magic = cur.expect_line("header")?;
    if magic != MAGIC {
        return Err(cur.error(format!("not a model file (header `{magic}`)")));
    }
    let n: usize = cur.keyed("n")?;
    let r: usize = cur.keyed("r")?;
    if n == 0 || r == 0 {
        return Err(cur.error("n and r must be positive"));
    }
    let t0: f64 = cur.keyed("t0")?;
    let dt_o: f64 = cur.keyed("dt_o")?;
    if !(dt_o > 0.0) || !t0.is_finite() || !dt_o.is_finite() {
        return Err(cur.error("t0 must be finite and dt_o positive"));
    }
    let field_name: String = cur.keyed("field")?;
    cur.expect_tag("lambda")?;
    let lambda = read_complex(&mut cur, r, "lambda")?;
    cur.expect_tag("omega")?;
    let omega = read_complex(&mut cur, r, "omega")?;
    cur.expect_tag("b")?;
    let amplitudes = read_complex(&mut cur, r, "b")?;
    cur.expect_tag("modes")?;
    let mut modes = ComplexMatrix::zeros(n, r);
    for j in 0..r {
        let col = read_complex(&mut cur, n, "modes")?;
        modes.set_column(j, &col);
    }
    cur.finish()?;
    Ok(DmdModel {
        lambda,
        omega,
        modes,
        amplitudes,
        t0,
        dt_o,
        field_name,
    })
}
