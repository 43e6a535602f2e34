//! Parameter snapshots: one text header line, then raw little-endian `f64`s.
//!
//! ```text
//! imba-mlp v1 dims=60,100,2
//! <w1 row-major><b1><w2 row-major><b2>...
//! ```

use std::io::{BufRead, Write};

use super::matrix::Matrix;
use super::mlp::{Dense, MlpModel};
use crate::error::{Error, Result};

const MAGIC: &str = "imba-mlp v1";

pub fn write_snapshot<W: Write>(mut out: W, model: &MlpModel) -> Result<()> {
    let dims: Vec<String> = model.dims().iter().map(usize::to_string).collect();
    writeln!(out, "{MAGIC} dims={}", dims.join(","))?;
    for (_, tensor) in model.tensors() {
        for v in tensor {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_snapshot<R: BufRead>(mut input: R) -> Result<MlpModel> {
    let mut header = String::new();
    input.read_line(&mut header)?;
    let bad = |reason: String| Error::Parse { line: 1, reason };
    let dims_text = header
        .trim_end()
        .strip_prefix(MAGIC)
        .and_then(|rest| rest.trim_start().strip_prefix("dims="))
        .ok_or_else(|| bad(format!("expected `{MAGIC} dims=...`, got {header:?}")))?;
    let dims = dims_text
        .split(',')
        .map(|d| d.parse::<usize>().ok().filter(|&d| d > 0))
        .collect::<Option<Vec<_>>>()
        .filter(|d| d.len() >= 2)
        .ok_or_else(|| bad(format!("bad dims {dims_text:?}")))?;

    let mut read_values = |count: usize| -> Result<Vec<f64>> {
        let mut buf = vec![0u8; count * 8];
        input.read_exact(&mut buf)?;
        Ok(buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect())
    };
    let mut layers = Vec::with_capacity(dims.len() - 1);
    for w in dims.windows(2) {
        let weights = Matrix::from_vec(w[1], w[0], read_values(w[0] * w[1])?)?;
        let bias = read_values(w[1])?;
        layers.push(Dense { weights, bias });
    }
    let mut trailing = [0u8; 1];
    if input.read(&mut trailing)? != 0 {
        return Err(bad("trailing bytes after parameters".into()));
    }
    Ok(MlpModel { layers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Architecture;
    use crate::rng::RngStream;

    #[test]
    fn round_trip_is_bit_exact() {
        let arch = Architecture {
            input_dim: 7,
            hidden: 5,
            hidden_layers: 2,
            out: 2,
        };
        let model = arch.init(&mut RngStream::new(3, 1)).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &model).unwrap();
        assert!(buf.starts_with(b"imba-mlp v1 dims=7,5,5,2\n"));
        assert_eq!(buf.len(), 25 + 8 * model.num_params());
        assert_eq!(read_snapshot(&buf[..]).unwrap(), model);
    }

    #[test]
    fn truncated_or_garbled_input_fails() {
        let model = Architecture {
            input_dim: 3,
            hidden: 2,
            hidden_layers: 1,
            out: 2,
        }
        .init(&mut RngStream::new(3, 1))
        .unwrap();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &model).unwrap();
        assert!(read_snapshot(&buf[..buf.len() - 1]).is_err());
        let mut extra = buf.clone();
        extra.push(0);
        assert!(read_snapshot(&extra[..]).is_err());
        assert!(read_snapshot(&b"not-a-snapshot\n"[..]).is_err());
    }
}
