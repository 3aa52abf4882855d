//! Binary PGM (P5) reading and writing, byte-exact for the files this
//! pipeline emits.

use std::path::Path;

use crate::error::{Error, Result};

/// Encodes an 8-bit grayscale image as binary PGM.
pub fn encode(width: usize, height: usize, pixels: &[u8]) -> Result<Vec<u8>> {
    if pixels.len() != width * height {
        return Err(Error::Shape(format!(
            "pgm encode: {width}x{height} needs {} pixels, got {}",
            width * height,
            pixels.len()
        )));
    }
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    Ok(out)
}

/// Decodes a binary PGM. Returns `(width, height, pixels)`.
///
/// Accepts the standard header form: `P5`, then width, height and maxval
/// tokens separated by whitespace, `#` comments allowed, a single whitespace
/// byte before the raster.
pub fn decode(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let mut pos = 0usize;
    if bytes.len() < 2 || &bytes[0..2] != b"P5" {
        return Err(Error::Pgm("missing P5 magic".into()));
    }
    pos += 2;

    let read_token = |pos: &mut usize| -> Result<usize> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
            *pos += 1;
        }
        if start == *pos {
            return Err(Error::Pgm("expected numeric header token".into()));
        }
        std::str::from_utf8(&bytes[start..*pos])
            .unwrap()
            .parse()
            .map_err(|_| Error::Pgm("header token out of range".into()))
    };

    let width = read_token(&mut pos)?;
    let height = read_token(&mut pos)?;
    let maxval = read_token(&mut pos)?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::Pgm(format!("unsupported maxval {maxval}")));
    }
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::Pgm("missing whitespace before raster".into()));
    }
    pos += 1;
    let need = width * height;
    let raster = &bytes[pos..];
    if raster.len() != need {
        return Err(Error::Pgm(format!(
            "raster length {} != {width}x{height}",
            raster.len()
        )));
    }
    Ok((width, height, raster.to_vec()))
}

pub fn write_file(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    let bytes = encode(width, height, pixels)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let bytes = encode(2, 3, &[0, 1, 2, 3, 4, 255]).unwrap();
        assert!(bytes.starts_with(b"P5\n2 3\n255\n"));
        assert_eq!(bytes.len(), b"P5\n2 3\n255\n".len() + 6);
    }

    #[test]
    fn decode_rejects_garbage() {
        assert!(decode(b"P6\n1 1\n255\n\0").is_err());
        assert!(decode(b"P5\n2 2\n255\n\0\0\0").is_err()); // short raster
        assert!(decode(b"P5\n2 2\n70000\n").is_err());
    }

    #[test]
    fn decode_handles_comments() {
        let bytes = b"P5\n# a comment\n2 1\n255\n\x10\x20";
        let (w, h, px) = decode(bytes).unwrap();
        assert_eq!((w, h), (2, 1));
        assert_eq!(px, vec![0x10, 0x20]);
    }

    proptest! {
        #[test]
        fn roundtrip_is_byte_exact(
            w in 1usize..24,
            h in 1usize..24,
            seed in 0u64..1000,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let pixels: Vec<u8> = (0..w * h).map(|_| rng.gen()).collect();
            let encoded = encode(w, h, &pixels).unwrap();
            let (dw, dh, decoded) = decode(&encoded).unwrap();
            prop_assert_eq!((dw, dh), (w, h));
            prop_assert_eq!(&decoded, &pixels);
            // Re-encoding reproduces the identical byte stream.
            let again = encode(dw, dh, &decoded).unwrap();
            prop_assert_eq!(again, encoded);
        }
    }
}
