//! `.bfpraw` files and the `bfp transpose` lane dump.
//!
//! A `.bfpraw` file is a flat sequence of little-endian encodings,
//! `ceil((1 + e + s) / 8)` bytes each, with no header or padding.

use std::fmt::Write as _;

use bfp_core::lane::SUPPORTED_WIDTHS;
use bfp_core::{with_lane_width, BfpVector, Encoding, FormatSpec, Lane};

use crate::CliError;

pub fn read_bfpraw(bytes: &[u8], spec: &FormatSpec) -> Result<Vec<Encoding>, CliError> {
    let width = spec.bytes_per_encoding();
    if !bytes.len().is_multiple_of(width) {
        return Err(CliError::Usage(format!(
            "input has {} bytes, not a multiple of {width} bytes per {} encoding",
            bytes.len(),
            spec.name()
        )));
    }
    let mask = spec.encoding_mask();
    bytes
        .chunks(width)
        .enumerate()
        .map(|(i, chunk)| {
            let mut buf = [0u8; 8];
            buf[..width].copy_from_slice(chunk);
            let v = u64::from_le_bytes(buf);
            if v & !mask != 0 {
                Err(CliError::Usage(format!(
                    "element {i}: {v:#x} does not fit in {} bits",
                    spec.total_bits()
                )))
            } else {
                Ok(v)
            }
        })
        .collect()
}

pub fn write_bfpraw(encodings: &[Encoding], spec: &FormatSpec) -> Vec<u8> {
    let width = spec.bytes_per_encoding();
    encodings
        .iter()
        .flat_map(|v| v.to_le_bytes().into_iter().take(width))
        .collect()
}

fn lane_label(spec: &FormatSpec, j: usize) -> String {
    let s = spec.sig_bits() as usize;
    let e = spec.exp_bits() as usize;
    if j == e + s {
        "sign".to_string()
    } else if j >= s {
        format!("exp[{}]", j - s)
    } else {
        format!("frac[{j}]")
    }
}

/// Lane width used for a dump of `count` elements: the narrowest supported
/// width that holds them, capped at `max_width`.
pub fn dump_width(count: usize, max_width: usize) -> usize {
    SUPPORTED_WIDTHS
        .iter()
        .copied()
        .find(|&w| w >= count)
        .unwrap_or(max_width)
        .min(max_width)
}

fn dump_block<L: Lane>(out: &mut String, encodings: &[Encoding], spec: &FormatSpec, first: usize) {
    let v = BfpVector::<L>::pack(encodings, spec).expect("validated encodings");
    let n = spec.total_bits() as usize;
    writeln!(
        out,
        "# elements {}..{}: {} lanes x {} bits, element {} leftmost",
        first,
        first + encodings.len(),
        n,
        L::WIDTH,
        first
    )
    .unwrap();
    let label_width = (0..n).map(|j| lane_label(spec, j).len()).max().unwrap_or(0);
    for j in (0..n).rev() {
        let lane = v.lanes()[j];
        let bits: String = (0..L::WIDTH)
            .map(|k| if lane.bit(k) { '1' } else { '0' })
            .collect();
        writeln!(
            out,
            "lane {j:>2} {:<label_width$}  {bits}",
            lane_label(spec, j)
        )
        .unwrap();
    }
}

/// Prints the bitslice layout of `encodings`, sign lane first, one row per
/// lane, bit `k` of each row belonging to element `k`. Empty input gives an
/// empty dump.
pub fn lane_dump(encodings: &[Encoding], spec: &FormatSpec, max_width: usize) -> String {
    let mut out = String::new();
    if encodings.is_empty() {
        return out;
    }
    let width = dump_width(encodings.len(), max_width);
    for (i, block) in encodings.chunks(width).enumerate() {
        with_lane_width!(width, L => dump_block::<L>(&mut out, block, spec, i * width));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use bfp_core::Rounding;

    #[test]
    fn bfpraw_round_trip() {
        let spec = FormatSpec::new("x", 5, 6, Rounding::NearestEven).unwrap();
        let values = vec![0x000, 0xfff, 0x123, 0x800];
        let bytes = write_bfpraw(&values, &spec);
        assert_eq!(bytes, [0x00, 0x00, 0xff, 0x0f, 0x23, 0x01, 0x00, 0x08]);
        assert_eq!(read_bfpraw(&bytes, &spec).unwrap(), values);
        assert!(read_bfpraw(&bytes[..3], &spec).is_err());
        assert!(read_bfpraw(&[0xff, 0xff], &spec).is_err());
    }

    #[test]
    fn sixteen_fp8_values_make_eight_sixteen_bit_lanes() {
        let spec = FormatSpec::fp8(Rounding::TowardZero);
        let values: Vec<u64> = (0..16).map(|i| i * 16 + i).collect();
        let dump = lane_dump(&values, &spec, 256);
        let rows: Vec<&str> = dump.lines().filter(|l| l.starts_with("lane")).collect();
        assert_eq!(rows.len(), 8);
        for row in &rows {
            assert_eq!(row.split_whitespace().last().unwrap().len(), 16);
        }
        assert!(rows[0].contains("sign"));
        assert!(rows[7].contains("frac[0]"));
    }

    #[test]
    fn single_value_dump_matches_pack() {
        let spec = FormatSpec::fp8(Rounding::TowardZero);
        let dump = lane_dump(&[0x3c], &spec, 256);
        let set: Vec<usize> = dump
            .lines()
            .filter(|l| l.starts_with("lane"))
            .filter(|l| l.ends_with("10000000"))
            .map(|l| l.split_whitespace().nth(1).unwrap().parse().unwrap())
            .collect();
        assert_eq!(set, vec![5, 4, 3, 2]);
    }

    #[test]
    fn empty_dump() {
        assert_eq!(lane_dump(&[], &FormatSpec::fp8(Rounding::TowardZero), 256), "");
    }

    #[test]
    fn large_inputs_split_into_blocks() {
        let spec = FormatSpec::fp8(Rounding::TowardZero);
        let dump = lane_dump(&vec![1; 40], &spec, 32);
        assert_eq!(dump.lines().filter(|l| l.starts_with('#')).count(), 2);
    }
}
