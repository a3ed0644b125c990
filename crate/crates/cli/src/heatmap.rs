//! Binary PPM (P6) rendering of a case grid.

use std::io::Write;

use rumorlab::closed_forms::Case;

/// Colour per case, in [`Case::ALL`] order; invalid cells are white.
pub const PALETTE: [[u8; 3]; 7] = [
    [190, 190, 190], // I
    [102, 194, 165], // II
    [252, 141, 98],  // III
    [141, 160, 203], // IV
    [231, 138, 195], // V
    [166, 216, 84],  // VI
    [255, 255, 255], // invalid
];

/// Writes `cases` (row-major, `y` rows from low to high, `c` columns from
/// low to high) with the lowest `y` at the bottom of the image. Each cell
/// becomes a `scale` x `scale` block.
pub fn write_ppm<W: Write>(mut out: W, cases: &[Case], columns: usize, rows: usize, scale: usize) -> std::io::Result<()> {
    assert_eq!(cases.len(), columns * rows, "grid size mismatch");
    let scale = scale.max(1);
    let (width, height) = (columns * scale, rows * scale);
    write!(out, "P6\n{width} {height}\n255\n")?;
    let mut line = Vec::with_capacity(width * 3);
    for row in (0..rows).rev() {
        line.clear();
        for col in 0..columns {
            let colour = PALETTE[cases[row * columns + col].index()];
            for _ in 0..scale {
                line.extend_from_slice(&colour);
            }
        }
        for _ in 0..scale {
            out.write_all(&line)?;
        }
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_size() {
        let mut buf = Vec::new();
        write_ppm(&mut buf, &[Case::I, Case::II, Case::Invalid, Case::IV], 2, 2, 3).unwrap();
        let header = b"P6\n6 6\n255\n";
        assert!(buf.starts_with(header));
        assert_eq!(buf.len(), header.len() + 6 * 6 * 3);
        // The top-left pixel shows the highest row's first cell.
        assert_eq!(&buf[header.len()..header.len() + 3], &PALETTE[Case::Invalid.index()]);
    }
}
