//! Minimal reference implementation of the version 1.0 array file layout for
//! 2-D little-endian float64 arrays, written independently of the library.

pub fn write(rows: &[[f64; 6]]) -> Vec<u8> {
    let header = format!(
        "{{'descr': '<f8', 'fortran_order': False, 'shape': ({}, 6), }}",
        rows.len()
    );
    let fixed = 6 + 2 + 2;
    let pad = (64 - (fixed + header.len() + 1) % 64) % 64;
    let header_total = header.len() + pad + 1;

    let mut out = Vec::new();
    out.push(0x93);
    out.extend_from_slice("NUMPY".as_bytes());
    out.push(1);
    out.push(0);
    out.push((header_total & 0xff) as u8);
    out.push((header_total >> 8) as u8);
    out.extend_from_slice(header.as_bytes());
    out.extend(std::iter::repeat_n(b' ', pad));
    out.push(b'\n');
    for row in rows {
        for v in row {
            let bits = if v.is_nan() {
                0x7ff8_0000_0000_0000u64
            } else {
                v.to_bits()
            };
            for shift in (0..64).step_by(8) {
                out.push((bits >> shift) as u8);
            }
        }
    }
    out
}

/// Parses an oracle-compatible file into raw rows, or `None` on any deviation.
pub fn read(bytes: &[u8]) -> Option<Vec<[f64; 6]>> {
    if bytes.len() < 10
        || bytes[0] != 0x93
        || &bytes[1..6] != b"NUMPY"
        || bytes[6] != 1
        || bytes[7] != 0
    {
        return None;
    }
    let hlen = bytes[8] as usize | (bytes[9] as usize) << 8;
    let header = std::str::from_utf8(bytes.get(10..10 + hlen)?).ok()?;
    if !header.ends_with('\n')
        || !header.contains("'descr': '<f8'")
        || !header.contains("'fortran_order': False")
    {
        return None;
    }
    let shape_start = header.find("'shape': (")? + "'shape': (".len();
    let shape_end = shape_start + header[shape_start..].find(')')?;
    let dims: Vec<usize> = header[shape_start..shape_end]
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().ok())
        .collect::<Option<_>>()?;
    let [n, 6] = dims[..] else { return None };
    let data = &bytes[10 + hlen..];
    if data.len() != n * 48 {
        return None;
    }
    let mut rows = Vec::with_capacity(n);
    for r in 0..n {
        let mut row = [0f64; 6];
        for (c, v) in row.iter_mut().enumerate() {
            let at = r * 48 + c * 8;
            let mut bits = 0u64;
            for k in 0..8 {
                bits |= u64::from(data[at + k]) << (8 * k);
            }
            *v = f64::from_bits(bits);
        }
        rows.push(row);
    }
    Some(rows)
}

/// Byte image of a single all-NaN row as produced by the reference NumPy writer
/// (`np.save(f, np.full((1, 6), np.nan))`), 176 bytes.
pub fn numpy_single_nan_row() -> Vec<u8> {
    let mut out = b"\x93NUMPY\x01\x00\x76\x00".to_vec();
    let header = "{'descr': '<f8', 'fortran_order': False, 'shape': (1, 6), }";
    out.extend_from_slice(header.as_bytes());
    out.extend(std::iter::repeat_n(b' ', 128 - 10 - header.len() - 1));
    out.push(b'\n');
    for _ in 0..6 {
        out.extend_from_slice(&[0, 0, 0, 0, 0, 0, 0xf8, 0x7f]);
    }
    out
}
