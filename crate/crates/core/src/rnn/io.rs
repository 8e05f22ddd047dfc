//! Model file format.
//!
//! ```text
//! DEPRNN v1
//! H=<h> N=<n> C=<c> M=<m> order=<o> D=<d> mode=<seq|dep|ldep>
//! VOCAB v1 N=<n> C=<c>
//! ...vocabulary rows...
//! LABELS v1 M=<k>
//! ...one label per line...
//! BINARY
//! <U W Vc Vw F Gc Gw d as little-endian f64, row-major>
//! ```
//!
//! The initialization seed is not stored; loaded models report seed 0.

use std::io::{BufRead, Write};

use super::{HyperParams, ParamFamily, Parameters};
use crate::corpus::{read_label_lines, read_vocab_lines, write_labels, write_vocab};
use crate::error::{Error, Result};
use crate::model::{Mode, Model};
use crate::textio::{header_field, header_usize, LineReader};

pub const MAGIC: &str = "DEPRNN v1";
const BINARY_MARKER: &str = "BINARY";

pub fn serialize<W: Write>(model: &Model, mut out: W) -> Result<()> {
    model.check()?;
    let h = model.hyper();
    writeln!(out, "{MAGIC}")?;
    writeln!(
        out,
        "H={} N={} C={} M={} order={} D={} mode={}",
        h.hidden, h.vocab_size, h.classes, h.labels, h.order, h.direct_size, model.mode
    )?;
    write_vocab(&mut out, &model.vocab, &model.classes)?;
    write_labels(&mut out, &model.labels)?;
    writeln!(out, "{BINARY_MARKER}")?;
    let mut buf = Vec::with_capacity(8 * 4096);
    for fam in ParamFamily::ALL {
        for chunk in model.params.family(fam).chunks(4096) {
            buf.clear();
            for x in chunk {
                buf.extend_from_slice(&x.to_le_bytes());
            }
            out.write_all(&buf)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn deserialize<R: BufRead>(reader: R) -> Result<Model> {
    let mut lines = LineReader::new(reader);
    let magic = lines
        .next_line()?
        .ok_or_else(|| Error::Truncated("empty model stream".into()))?
        .to_owned();
    if magic != MAGIC {
        return Err(Error::Version(format!("expected `{MAGIC}`, found `{magic}`")));
    }
    let line = lines.expect_line("hyperparameter line")?;
    let ln = lines.line_number();
    let mode: Mode = header_field(&line, "mode")
        .ok_or_else(|| Error::parse(ln, "missing `mode=`"))?
        .parse()?;
    let hyper = HyperParams {
        hidden: header_usize(&line, "H", ln)?,
        vocab_size: header_usize(&line, "N", ln)?,
        classes: header_usize(&line, "C", ln)?,
        labels: header_usize(&line, "M", ln)?,
        order: header_usize(&line, "order", ln)?,
        direct_size: header_usize(&line, "D", ln)?,
        seed: 0,
    };
    hyper.validate()?;
    let (vocab, classes) = read_vocab_lines(&mut lines)?;
    let labels = read_label_lines(&mut lines)?;
    let marker = lines.expect_line("BINARY marker")?;
    if marker != BINARY_MARKER {
        return Err(Error::Format(format!(
            "line {}: expected `{BINARY_MARKER}`, found `{marker}`",
            lines.line_number()
        )));
    }

    let mut params = Parameters::zeros(&hyper)?;
    let mut reader = lines.into_inner();
    let mut bytes = [0u8; 8];
    for fam in ParamFamily::ALL {
        let len = fam.len(&hyper);
        for (i, x) in params.family_mut(fam).iter_mut().enumerate() {
            if let Err(e) = reader.read_exact(&mut bytes) {
                return Err(match e.kind() {
                    std::io::ErrorKind::UnexpectedEof => Error::Truncated(format!(
                        "{} ends after {i} of {len} values",
                        fam.name()
                    )),
                    _ => e.into(),
                });
            }
            *x = f64::from_le_bytes(bytes);
        }
    }
    let mut rest = [0u8; 1];
    if reader.read(&mut rest)? != 0 {
        return Err(Error::ShapeMismatch(
            "trailing bytes after the parameter block".into(),
        ));
    }

    let model = Model {
        mode,
        params,
        vocab,
        classes,
        labels,
    };
    model.check()?;
    Ok(model)
}

/// Like [`deserialize`], but fails with a shape mismatch unless the stored
/// hyperparameters (seed aside) equal `expected`.
pub fn deserialize_expecting<R: BufRead>(reader: R, expected: &HyperParams) -> Result<Model> {
    let model = deserialize(reader)?;
    let got = model.hyper();
    let same = HyperParams {
        seed: expected.seed,
        ..got.clone()
    };
    if &same != expected {
        return Err(Error::ShapeMismatch(format!(
            "model has H={} N={} C={} M={} order={} D={}, expected H={} N={} C={} M={} order={} D={}",
            got.hidden,
            got.vocab_size,
            got.classes,
            got.labels,
            got.order,
            got.direct_size,
            expected.hidden,
            expected.vocab_size,
            expected.classes,
            expected.labels,
            expected.order,
            expected.direct_size
        )));
    }
    Ok(model)
}
