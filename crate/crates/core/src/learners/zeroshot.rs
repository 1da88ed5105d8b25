use alloc::vec::Vec;

use super::argmax;
use crate::error::{Error, Result};
use crate::math;

/// Per query, the class whose text embedding has the highest cosine
/// similarity; the lowest class index wins ties.
pub fn zero_shot_predict(queries: &[&[f32]], class_text: &[Vec<f32>]) -> Result<Vec<usize>> {
    let texts: Vec<Vec<f64>> = class_text
        .iter()
        .map(|t| math::normalized(&math::to_f64(t)).ok_or(Error::DegenerateQuery))
        .collect::<Result<_>>()?;
    queries
        .iter()
        .map(|q| {
            if let Some(t) = texts.first() {
                if t.len() != q.len() {
                    return Err(Error::DimMismatch {
                        expected: t.len(),
                        got: q.len(),
                    });
                }
            }
            let q = math::normalized(&math::to_f64(q)).ok_or(Error::DegenerateQuery)?;
            let scores: Vec<f64> = texts.iter().map(|t| math::dot(&q, t)).collect();
            Ok(argmax(&scores))
        })
        .collect()
}
