//! CSV dump: one row per keypoint,
//! `id,x,y,scale,orientation,response,d0,...,d63`.

use std::io::{BufRead, Write};

use super::{Keypoint, SurfDescriptor, DESCRIPTOR_LEN};
use crate::error::{FeatureError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorRecord {
    /// Image key, `<profile>/<image>` for dataset extraction.
    pub id: String,
    pub keypoint: Keypoint,
    pub descriptor: SurfDescriptor,
}

pub fn header() -> String {
    let mut cols = vec!["id".to_string(), "x".into(), "y".into(), "scale".into(), "orientation".into(), "response".into()];
    cols.extend((0..DESCRIPTOR_LEN).map(|i| format!("d{i}")));
    cols.join(",")
}

pub fn write_records<W: Write>(mut w: W, records: &[DescriptorRecord]) -> std::io::Result<()> {
    writeln!(w, "{}", header())?;
    for r in records {
        let kp = &r.keypoint;
        write!(w, "{},{},{},{},{},{}", r.id, kp.x, kp.y, kp.scale, kp.orientation, kp.response)?;
        for v in r.descriptor.values() {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_records<R: BufRead>(r: R) -> Result<Vec<DescriptorRecord>> {
    let mut out = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line.map_err(|e| FeatureError::format("descriptor file", e.to_string()))?;
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 + DESCRIPTOR_LEN {
            return Err(FeatureError::format("descriptor file", format!("line {}: {} fields", lineno + 1, fields.len())));
        }
        let nums = fields[1..]
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| FeatureError::format("descriptor file", format!("line {}: {e}", lineno + 1)))?;
        out.push(DescriptorRecord {
            id: fields[0].to_string(),
            keypoint: Keypoint {
                x: nums[0],
                y: nums[1],
                scale: nums[2],
                orientation: nums[3],
                response: nums[4],
                laplacian_positive: false,
            },
            descriptor: SurfDescriptor(nums[5..].to_vec()),
        });
    }
    Ok(out)
}
