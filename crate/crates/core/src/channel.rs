//! Rayleigh flat-fading channel draws and the plain-text channel fixture format.
//!
//! Fixture layout:
//!
//! ```text
//! # optional comments
//! M N
//! re im re im ...   (N pairs, one line per row, M lines)
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};

/// Counter-based random stream: `(seed, stream_id)` fully determines the draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Draws one circularly-symmetric CN(0, 1) sample.
#[inline]
pub fn cn01<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Channel matrix: rows are users, columns are transmit antennas.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub h: ComplexMatrix,
    pub seed_tag: u64,
}

impl Channel {
    pub fn new(h: ComplexMatrix, seed_tag: u64) -> Self {
        Self { h, seed_tag }
    }

    pub fn users(&self) -> usize {
        self.h.rows()
    }

    pub fn antennas(&self) -> usize {
        self.h.cols()
    }
}

/// Draws an `m × n` matrix of i.i.d. CN(0, 1) entries from an existing generator.
pub fn sample_matrix<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> ComplexMatrix {
    let data = (0..m * n).map(|_| cn01(rng)).collect();
    ComplexMatrix::from_vec(m, n, data).expect("gaussian draws are finite")
}

pub fn sample_channel(m: usize, n: usize, stream: RngStream) -> Result<Channel> {
    if m == 0 || n < m {
        return Err(Error::Config(format!(
            "channel needs n >= m >= 1, got m={m}, n={n}"
        )));
    }
    let h = sample_matrix(m, n, &mut stream.rng());
    Ok(Channel::new(h, stream.stream_id))
}

pub fn format_fixture(channel: &Channel) -> String {
    let h = &channel.h;
    let mut out = String::new();
    let _ = writeln!(out, "# seed_tag {}", channel.seed_tag);
    let _ = writeln!(out, "{} {}", h.rows(), h.cols());
    for i in 0..h.rows() {
        let line: Vec<String> = h
            .row(i)
            .iter()
            .map(|z| format!("{:.16e} {:.16e}", z.re, z.im))
            .collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

pub fn parse_fixture(text: &str) -> Result<Channel> {
    let mut seed_tag = 0;
    let mut header: Option<(usize, usize)> = None;
    let mut rows: Vec<Vec<C64>> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(tag) = comment.trim().strip_prefix("seed_tag") {
                seed_tag = tag.trim().parse().unwrap_or(0);
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let Some((m, n)) = header else {
            let dims: Vec<usize> = tokens
                .iter()
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse {
                    line: line_no,
                    column: None,
                    message: format!("expected header \"M N\", got {line:?}"),
                })?;
            if dims.len() != 2 || dims[0] == 0 || dims[1] == 0 {
                return Err(Error::Parse {
                    line: line_no,
                    column: None,
                    message: "header must be two positive integers \"M N\"".into(),
                });
            }
            header = Some((dims[0], dims[1]));
            continue;
        };
        if !tokens.len().is_multiple_of(2) {
            return Err(Error::Parse {
                line: line_no,
                column: None,
                message: format!("odd number of floats ({}); expected re/im pairs", tokens.len()),
            });
        }
        let mut vals = Vec::with_capacity(tokens.len());
        for (col, t) in tokens.iter().enumerate() {
            let v: f64 = t.parse().map_err(|_| Error::Parse {
                line: line_no,
                column: Some(col + 1),
                message: format!("invalid float {t:?}"),
            })?;
            vals.push(v);
        }
        let row: Vec<C64> = vals.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect();
        if row.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "line {line_no}: header says {n} columns, row has {}",
                row.len()
            )));
        }
        rows.push(row);
        if rows.len() > m {
            return Err(Error::DimensionMismatch(format!(
                "header says {m} rows, found more at line {line_no}"
            )));
        }
    }

    let (m, _) = header.ok_or(Error::Parse {
        line: text.lines().count().max(1),
        column: None,
        message: "missing header".into(),
    })?;
    if rows.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "header says {m} rows, body has {}",
            rows.len()
        )));
    }
    Ok(Channel::new(ComplexMatrix::from_rows(&rows)?, seed_tag))
}

pub fn write_fixture(path: impl AsRef<Path>, channel: &Channel) -> Result<()> {
    fs::write(path, format_fixture(channel))?;
    Ok(())
}

pub fn read_fixture(path: impl AsRef<Path>) -> Result<Channel> {
    parse_fixture(&fs::read_to_string(path)?)
}
