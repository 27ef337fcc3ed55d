//! JSON documents for states, channels, spectra and SDP dumps.
//!
//! Matrices are encoded as `{"dims": [d1, d2, ..], "entries": [[re, im], ..]}`
//! in row-major order. Channels are `{"dim_in", "dim_out", "choi": [[re, im], ..]}`
//! with the input-major Choi convention. Spectra are `{"spectrum": [..]}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::ChoiMap;
use crate::error::{Error, Result};
use crate::majorize::Spectrum;
use crate::qmat::{c, hermitize, max_asymmetry, ComplexMatrix, DensityOperator};

const FILE_HERMITIAN_TOL: f64 = 1e-9;
const FILE_CP_TOL: f64 = 1e-8;

/// Serde adapter storing a complex matrix as `{rows, cols, entries}`.
pub mod serde_cmat {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Raw {
        rows: usize,
        cols: usize,
        entries: Vec<[f64; 2]>,
    }

    fn to_raw(m: &ComplexMatrix) -> Raw {
        let mut entries = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                entries.push([m[(i, j)].re, m[(i, j)].im]);
            }
        }
        Raw {
            rows: m.nrows(),
            cols: m.ncols(),
            entries,
        }
    }

    fn from_raw<E: serde::de::Error>(r: Raw) -> std::result::Result<ComplexMatrix, E> {
        if r.entries.len() != r.rows * r.cols {
            return Err(E::custom(format!(
                "expected {} entries for a {}x{} matrix, found {}",
                r.rows * r.cols,
                r.rows,
                r.cols,
                r.entries.len()
            )));
        }
        Ok(ComplexMatrix::from_row_iterator(
            r.rows,
            r.cols,
            r.entries.iter().map(|[re, im]| c(*re, *im)),
        ))
    }

    pub fn serialize<S: Serializer>(m: &ComplexMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        to_raw(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ComplexMatrix, D::Error> {
        from_raw(Raw::deserialize(d)?)
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[ComplexMatrix], s: S) -> std::result::Result<S::Ok, S::Error> {
            v.iter().map(to_raw).collect::<Vec<_>>().serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> std::result::Result<Vec<ComplexMatrix>, D::Error> {
            Vec::<Raw>::deserialize(d)?.into_iter().map(from_raw).collect()
        }
    }
}

/// On-disk form of a square operator with subsystem dimensions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub dims: Vec<usize>,
    pub entries: Vec<[f64; 2]>,
}

/// On-disk form of a channel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelDoc {
    pub dim_in: usize,
    pub dim_out: usize,
    pub choi: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumDoc {
    pub spectrum: Vec<f64>,
}

fn entries_of(m: &ComplexMatrix) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push([m[(i, j)].re, m[(i, j)].im]);
        }
    }
    out
}

fn square_from_entries(field: &str, n: usize, entries: &[[f64; 2]]) -> Result<ComplexMatrix> {
    if entries.len() != n * n {
        return Err(Error::parse(
            field,
            format!("expected {} entries for a {n}x{n} matrix, found {}", n * n, entries.len()),
        ));
    }
    if entries.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::parse(field, "non-finite entry"));
    }
    Ok(ComplexMatrix::from_row_iterator(
        n,
        n,
        entries.iter().map(|[re, im]| c(*re, *im)),
    ))
}

impl MatrixDoc {
    pub fn from_state(rho: &DensityOperator) -> Self {
        MatrixDoc {
            dims: rho.dims().to_vec(),
            entries: entries_of(rho.matrix()),
        }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(Error::parse("dims", "dimensions must be a nonempty list of positive integers"));
        }
        let n: usize = self.dims.iter().product();
        square_from_entries("entries", n, &self.entries)
    }

    /// Validates Hermiticity at 1e-9 before the usual state checks.
    pub fn to_state(&self) -> Result<DensityOperator> {
        let m = self.to_matrix()?;
        let asym = max_asymmetry(&m);
        if asym > FILE_HERMITIAN_TOL {
            return Err(Error::parse(
                "entries",
                format!("matrix is not Hermitian (max asymmetry {asym:.3e})"),
            ));
        }
        DensityOperator::new(hermitize(&m), self.dims.clone()).map_err(|e| Error::parse("entries", e.to_string()))
    }
}

impl ChannelDoc {
    pub fn from_channel(ch: &ChoiMap) -> Self {
        ChannelDoc {
            dim_in: ch.dim_in(),
            dim_out: ch.dim_out(),
            choi: entries_of(ch.choi()),
        }
    }

    pub fn to_channel(&self) -> Result<ChoiMap> {
        if self.dim_in == 0 || self.dim_out == 0 {
            return Err(Error::parse("dim_in", "dimensions must be positive"));
        }
        let m = square_from_entries("choi", self.dim_in * self.dim_out, &self.choi)?;
        let asym = max_asymmetry(&m);
        if asym > FILE_HERMITIAN_TOL {
            return Err(Error::parse(
                "choi",
                format!("Choi matrix is not Hermitian (max asymmetry {asym:.3e})"),
            ));
        }
        ChoiMap::with_tolerance(hermitize(&m), self.dim_in, self.dim_out, FILE_CP_TOL)
            .map_err(|e| Error::parse("choi", e.to_string()))
    }
}

impl SpectrumDoc {
    pub fn to_spectrum(&self) -> Result<Spectrum> {
        Spectrum::new(self.spectrum.clone()).map_err(|e| Error::parse("spectrum", e.to_string()))
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    parse_json(&text)
}

/// Parses JSON, naming the offending field on failure where serde reports one.
pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        let field = msg
            .split('`')
            .nth(1)
            .map(str::to_string)
            .unwrap_or_else(|| "document".into());
        Error::parse(field, msg)
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::parse("document", e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_state(path: &Path) -> Result<DensityOperator> {
    read_json::<MatrixDoc>(path)?.to_state()
}

pub fn load_channel(path: &Path) -> Result<ChoiMap> {
    read_json::<ChannelDoc>(path)?.to_channel()
}

/// A spectrum document, or a bare JSON array.
pub fn parse_spectrum(text: &str) -> Result<Spectrum> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        let v: Vec<f64> = parse_json(text)?;
        return Spectrum::new(v).map_err(|e| Error::parse("spectrum", e.to_string()));
    }
    parse_json::<SpectrumDoc>(text)?.to_spectrum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_round_trip() {
        let rho = DensityOperator::diagonal(&[0.25, 0.75]).unwrap();
        let doc = MatrixDoc::from_state(&rho);
        let text = serde_json::to_string(&doc).unwrap();
        let back: MatrixDoc = parse_json(&text).unwrap();
        assert!((back.to_state().unwrap().matrix() - rho.matrix()).norm() < 1e-15);
    }

    #[test]
    fn rejects_non_hermitian_state() {
        let doc = MatrixDoc {
            dims: vec![2],
            entries: vec![[0.5, 0.0], [0.1, 0.0], [0.0, 0.0], [0.5, 0.0]],
        };
        let err = doc.to_state().unwrap_err();
        assert!(err.is_parse_error());
        assert!(err.to_string().contains("entries"));
    }

    #[test]
    fn rejects_wrong_entry_count() {
        let doc = MatrixDoc {
            dims: vec![2, 2],
            entries: vec![[1.0, 0.0]],
        };
        assert!(doc.to_state().unwrap_err().is_parse_error());
        let missing = parse_json::<MatrixDoc>(r#"{"entries": []}"#).unwrap_err();
        assert!(missing.to_string().contains("dims"));
    }

    #[test]
    fn channel_round_trip_and_spectra() {
        let ch = ChoiMap::erasure(2);
        let doc = ChannelDoc::from_channel(&ch);
        let back = doc.to_channel().unwrap();
        assert!((back.choi() - ch.choi()).norm() < 1e-15);
        let s = parse_spectrum("[0.5, 0.5]").unwrap();
        assert_eq!(s.values(), &[0.5, 0.5]);
        let s = parse_spectrum(r#"{"spectrum": [0.25, 0.75]}"#).unwrap();
        assert_eq!(s.values(), &[0.75, 0.25]);
        assert!(parse_spectrum("[0.5, -0.5]").unwrap_err().is_parse_error());
    }
}
