//! Serializes an `Array2<f64>` as a JSON array of rows.

use ndarray::Array2;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub fn serialize<S: Serializer>(m: &Array2<f64>, s: S) -> Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = m.outer_iter().map(|r| r.to_vec()).collect();
    rows.serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Array2<f64>, D::Error> {
    let rows = Vec::<Vec<f64>>::deserialize(d)?;
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(D::Error::custom("ragged matrix rows"));
    }
    let nrows = rows.len();
    Array2::from_shape_vec((nrows, ncols), rows.into_iter().flatten().collect()).map_err(D::Error::custom)
}

/// The same row layout for a list of matrices.
pub mod list {
    use ndarray::Array2;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(ms: &[Array2<f64>], s: S) -> Result<S::Ok, S::Error> {
        let nested: Vec<Vec<Vec<f64>>> = ms
            .iter()
            .map(|m| m.outer_iter().map(|r| r.to_vec()).collect())
            .collect();
        nested.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Array2<f64>>, D::Error> {
        Vec::<Vec<Vec<f64>>>::deserialize(d)?
            .into_iter()
            .map(|rows| {
                let ncols = rows.first().map_or(0, Vec::len);
                if rows.iter().any(|r| r.len() != ncols) {
                    return Err(D::Error::custom("ragged matrix rows"));
                }
                let nrows = rows.len();
                Array2::from_shape_vec((nrows, ncols), rows.into_iter().flatten().collect()).map_err(D::Error::custom)
            })
            .collect()
    }
}
