//! Point clouds as text: one `range latitude longitude` triple per line
//! (meters, radians), `#` comments and blank lines ignored.

use std::fmt::Write;
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::geometry::LidarPoint;

pub fn read_point_cloud(text: &str) -> Result<Vec<LidarPoint>> {
    let mut cloud = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let data = raw.split('#').next().unwrap_or("").trim();
        if data.is_empty() {
            continue;
        }
        let fields: Vec<&str> = data.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                line,
                format!("expected 3 fields (range latitude longitude), found {}", fields.len()),
            ));
        }
        let mut v = [0.0; 3];
        for (slot, (field, name)) in v.iter_mut().zip(fields.iter().zip(["range", "latitude", "longitude"])) {
            *slot = field
                .parse::<f64>()
                .map_err(|_| Error::parse(line, format!("{name} is not a number: {field:?}")))?;
            if !slot.is_finite() {
                return Err(Error::Range {
                    line,
                    message: format!("{name} must be finite"),
                });
            }
        }
        let [range, latitude, longitude] = v;
        if range <= 0.0 {
            return Err(Error::Range {
                line,
                message: format!("range must be positive, got {range}"),
            });
        }
        if latitude.abs() > FRAC_PI_2 {
            return Err(Error::Range {
                line,
                message: format!("latitude must lie in [-pi/2, pi/2], got {latitude}"),
            });
        }
        cloud.push(LidarPoint::new(range, latitude, longitude));
    }
    Ok(cloud)
}

/// 17 significant digits per value, so reading back is exact.
pub fn write_point_cloud(cloud: &[LidarPoint]) -> String {
    let mut out = String::with_capacity(32 + cloud.len() * 72);
    out.push_str("# range_m latitude_rad longitude_rad\n");
    for p in cloud {
        writeln!(out, "{:.16e} {:.16e} {:.16e}", p.range, p.latitude, p.longitude).expect("string write");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_examples() {
        assert_eq!(read_point_cloud("5.0 0.0 0.0").unwrap(), vec![LidarPoint::new(5.0, 0.0, 0.0)]);
        assert_eq!(read_point_cloud("# comment\n5.0 0.0 0.0\n").unwrap().len(), 1);
        assert_eq!(read_point_cloud("").unwrap(), vec![]);
    }

    #[test]
    fn field_count_and_range_errors() {
        assert!(matches!(read_point_cloud("5.0 0.0"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(read_point_cloud("\n\n1 0 0 0"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(read_point_cloud("1 0 0\n0 0 0"), Err(Error::Range { line: 2, .. })));
        assert!(matches!(read_point_cloud("-2 0 0"), Err(Error::Range { line: 1, .. })));
        assert!(matches!(read_point_cloud("2 abc 0"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(read_point_cloud("2 2.0 0"), Err(Error::Range { line: 1, .. })));
    }

    #[test]
    fn round_trip_is_exact() {
        let cloud = vec![
            LidarPoint::new(0.1 + 0.2, -0.261_799_387_799_149_4, 3.141_592_653_589_793),
            LidarPoint::new(1e-300, 1.0 / 3.0, -2.0 / 3.0),
            LidarPoint::new(99.999_999_999_999_99, 0.0, -0.0),
        ];
        let text = write_point_cloud(&cloud);
        let back = read_point_cloud(&text).unwrap();
        for (a, b) in cloud.iter().zip(&back) {
            assert_eq!(a.range.to_bits(), b.range.to_bits());
            assert_eq!(a.latitude.to_bits(), b.latitude.to_bits());
            assert_eq!(a.longitude.to_bits(), b.longitude.to_bits());
        }
        assert_eq!(write_point_cloud(&back), text);
    }
}
