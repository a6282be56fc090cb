//! PNG and binary PPM (P6) frame files, and directory-of-frames sequences.
//!
//! Channels are quantized round-half-up: `byte = floor(v * 255 + 0.5)`.

use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use image::{ColorType, ImageFormat, RgbImage};

use super::{Frame, FrameSequence, ImageError};

const PNG_SIGNATURE: &[u8] = b"\x89PNG\r\n\x1a\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameFormat {
    Png,
    Ppm,
}

impl FrameFormat {
    pub fn extension(self) -> &'static str {
        match self {
            FrameFormat::Png => "png",
            FrameFormat::Ppm => "ppm",
        }
    }

    /// Format implied by a file extension; anything but `.ppm` is PNG.
    pub fn from_path(path: &Path) -> FrameFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("ppm") => FrameFormat::Ppm,
            _ => FrameFormat::Png,
        }
    }
}

impl std::str::FromStr for FrameFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "png" => Ok(FrameFormat::Png),
            "ppm" => Ok(FrameFormat::Ppm),
            other => Err(format!("unknown frame format `{other}` (expected png or ppm)")),
        }
    }
}

#[inline]
pub fn quantize(v: f64) -> u8 {
    (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

#[inline]
fn dequantize(b: u8) -> f64 {
    b as f64 / 255.0
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

pub fn load_frame(path: impl AsRef<Path>) -> Result<Frame, ImageError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        ErrorKind::NotFound => ImageError::NotFound { path: display(path) },
        _ => ImageError::Io { path: display(path), source: e },
    })?;
    if bytes.starts_with(b"P6") {
        decode_ppm(&bytes, path)
    } else if bytes.starts_with(PNG_SIGNATURE) {
        decode_png(&bytes, path)
    } else {
        Err(ImageError::Unsupported {
            path: display(path),
            reason: "expected PNG or binary PPM (P6)".into(),
        })
    }
}

fn decode_png(bytes: &[u8], path: &Path) -> Result<Frame, ImageError> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png).map_err(|e| {
        ImageError::CorruptHeader { path: display(path), reason: e.to_string() }
    })?;
    match img.color() {
        ColorType::Rgb8 | ColorType::Rgba8 => {}
        other => {
            return Err(ImageError::Unsupported {
                path: display(path),
                reason: format!("color type {other:?}; only 8-bit RGB/RGBA is accepted"),
            })
        }
    }
    let rgb = img.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let pixels = rgb.pixels().map(|p| p.0.map(dequantize)).collect();
    Frame::new(w, h, pixels).map_err(|_| ImageError::CorruptHeader {
        path: display(path),
        reason: "zero-sized image".into(),
    })
}

/// Reads one whitespace-delimited header token, skipping `#` comments.
fn ppm_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
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
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    (start < *pos).then(|| &bytes[start..*pos])
}

fn decode_ppm(bytes: &[u8], path: &Path) -> Result<Frame, ImageError> {
    let header_err = |reason: &str| ImageError::CorruptHeader {
        path: display(path),
        reason: reason.to_string(),
    };
    let mut pos = 2;
    let mut field = |name: &str| -> Result<usize, ImageError> {
        let tok = ppm_token(bytes, &mut pos).ok_or_else(|| header_err(&format!("missing {name}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| header_err(&format!("invalid {name}")))
    };
    let width = field("width")?;
    let height = field("height")?;
    let maxval = field("maxval")?;
    if width == 0 || height == 0 {
        return Err(header_err("zero dimension"));
    }
    if maxval != 255 {
        return Err(ImageError::Unsupported {
            path: display(path),
            reason: format!("maxval {maxval}; only 8-bit (255) is accepted"),
        });
    }
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(ImageError::CorruptPayload { path: display(path) });
    }
    pos += 1;
    let need = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(3))
        .ok_or_else(|| header_err("dimensions overflow"))?;
    let body = &bytes[pos..];
    if body.len() < need {
        return Err(ImageError::CorruptPayload { path: display(path) });
    }
    let pixels = body[..need]
        .chunks_exact(3)
        .map(|c| [dequantize(c[0]), dequantize(c[1]), dequantize(c[2])])
        .collect();
    Ok(Frame::new(width, height, pixels).expect("dimensions checked"))
}

pub fn encode_ppm(frame: &Frame) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    out.reserve(frame.pixels().len() * 3);
    for p in frame.pixels() {
        out.extend(p.map(quantize));
    }
    out
}

pub fn encode_png(frame: &Frame) -> Vec<u8> {
    let raw: Vec<u8> = frame.pixels().iter().flat_map(|p| p.map(quantize)).collect();
    let img = RgbImage::from_raw(frame.width() as u32, frame.height() as u32, raw)
        .expect("buffer matches dimensions");
    let mut out = std::io::Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png).expect("in-memory PNG encoding");
    out.into_inner()
}

/// Writes a frame; `.ppm` paths get P6, everything else PNG.
pub fn save_frame(frame: &Frame, path: impl AsRef<Path>) -> Result<(), ImageError> {
    let path = path.as_ref();
    let bytes = match FrameFormat::from_path(path) {
        FrameFormat::Ppm => encode_ppm(frame),
        FrameFormat::Png => encode_png(frame),
    };
    fs::write(path, bytes).map_err(|e| ImageError::Unwritable { path: display(path), source: e })
}

/// File name of frame `index` (0-based) inside a sequence directory.
pub fn frame_file_name(index: usize, format: FrameFormat) -> String {
    format!("frame_{:05}.{}", index + 1, format.extension())
}

fn frame_index_of(name: &str) -> Option<usize> {
    let stem = name.strip_prefix("frame_")?;
    let (digits, ext) = stem.split_once('.')?;
    if !(ext.eq_ignore_ascii_case("png") || ext.eq_ignore_ascii_case("ppm")) {
        return None;
    }
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Lists `frame_NNNNN.{png,ppm}` files of a directory in index order.
pub fn list_frame_files(dir: &Path) -> Result<Vec<PathBuf>, ImageError> {
    let entries = fs::read_dir(dir).map_err(|e| match e.kind() {
        ErrorKind::NotFound => ImageError::NotFound { path: display(dir) },
        _ => ImageError::Io { path: display(dir), source: e },
    })?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| ImageError::Io { path: display(dir), source: e })?;
        let name = entry.file_name();
        if let Some(idx) = name.to_str().and_then(frame_index_of) {
            files.push((idx, entry.path()));
        }
    }
    if files.is_empty() {
        return Err(ImageError::EmptyDirectory { path: display(dir) });
    }
    files.sort();
    Ok(files.into_iter().map(|(_, p)| p).collect())
}

pub fn load_sequence(dir: impl AsRef<Path>, frame_rate: f64) -> Result<FrameSequence, ImageError> {
    let dir = dir.as_ref();
    let frames = list_frame_files(dir)?
        .iter()
        .map(load_frame)
        .collect::<Result<Vec<_>, _>>()?;
    FrameSequence::new(frames, frame_rate)
}

/// Writes a sequence as `frame_00001.<ext>`, ... into `dir`, creating it.
pub fn save_sequence(seq: &FrameSequence, dir: impl AsRef<Path>, format: FrameFormat) -> Result<(), ImageError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| ImageError::Unwritable { path: display(dir), source: e })?;
    for (i, frame) in seq.frames().iter().enumerate() {
        save_frame(frame, dir.join(frame_file_name(i, format)))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write(dir: &Path, name: &str, bytes: &[u8]) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, bytes).unwrap();
        p
    }

    #[test]
    fn ppm_byte_mapping() {
        let tmp = tempfile::tempdir().unwrap();
        let p = write(tmp.path(), "a.ppm", b"P6\n1 1\n255\n\xff\x00\x00");
        assert_eq!(load_frame(&p).unwrap(), Frame::filled(1, 1, [1.0, 0.0, 0.0]));

        let p = write(tmp.path(), "b.ppm", b"P6 2 1 255\n\x00\x00\x00\x80\x80\x80");
        let f = load_frame(&p).unwrap();
        assert_eq!(f.pixels()[0], [0.0; 3]);
        assert_eq!(f.pixels()[1], [128.0 / 255.0; 3]);
        assert!((f.pixels()[1][0] - 0.50196).abs() < 1e-5);
    }

    #[test]
    fn ppm_header_comments() {
        let tmp = tempfile::tempdir().unwrap();
        let p = write(tmp.path(), "c.ppm", b"P6\n# made by hand\n1 # w\n1\n255\n\x01\x02\x03");
        assert_eq!(load_frame(&p).unwrap().pixels()[0], [1.0 / 255.0, 2.0 / 255.0, 3.0 / 255.0]);
    }

    #[test]
    fn load_errors_are_distinct() {
        let tmp = tempfile::tempdir().unwrap();
        let missing = tmp.path().join("nope.ppm");
        assert!(matches!(load_frame(&missing), Err(ImageError::NotFound { path }) if path.contains("nope.ppm")));

        let p = write(tmp.path(), "t.ppm", b"P6\n2 2\n255\n\x00\x00\x00");
        assert!(matches!(load_frame(&p), Err(ImageError::CorruptPayload { .. })));

        let p = write(tmp.path(), "h.ppm", b"P6\n2 x\n255\n");
        assert!(matches!(load_frame(&p), Err(ImageError::CorruptHeader { .. })));

        let p = write(tmp.path(), "g.gif", b"GIF89a....");
        assert!(matches!(load_frame(&p), Err(ImageError::Unsupported { .. })));

        let p = write(tmp.path(), "m.ppm", b"P6\n1 1\n65535\n\x00\x00\x00\x00\x00\x00");
        assert!(matches!(load_frame(&p), Err(ImageError::Unsupported { .. })));
    }

    #[test]
    fn save_rounds_half_up() {
        assert_eq!(quantize(0.5), 128);
        assert_eq!(quantize(0.0), 0);
        assert_eq!(quantize(1.0), 255);
        let tmp = tempfile::tempdir().unwrap();
        let p = tmp.path().join("half.ppm");
        save_frame(&Frame::filled(1, 1, [0.5; 3]), &p).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert_eq!(&bytes[bytes.len() - 3..], &[128, 128, 128]);
    }

    #[test]
    fn zero_frame_round_trip_both_formats() {
        let tmp = tempfile::tempdir().unwrap();
        let f = Frame::filled(4, 4, [0.0; 3]);
        for name in ["z.ppm", "z.png"] {
            let p = tmp.path().join(name);
            save_frame(&f, &p).unwrap();
            assert_eq!(load_frame(&p).unwrap(), f);
        }
    }

    #[test]
    fn png_rgba_alpha_dropped() {
        let tmp = tempfile::tempdir().unwrap();
        let img = image::RgbaImage::from_raw(1, 1, vec![10, 20, 30, 0]).unwrap();
        let p = tmp.path().join("a.png");
        img.save(&p).unwrap();
        assert_eq!(load_frame(&p).unwrap().pixels()[0], [10.0 / 255.0, 20.0 / 255.0, 30.0 / 255.0]);
    }

    #[cfg(unix)]
    #[test]
    fn save_to_read_only_dir_fails() {
        use std::os::unix::fs::PermissionsExt;
        let tmp = tempfile::tempdir().unwrap();
        let ro = tmp.path().join("ro");
        fs::create_dir(&ro).unwrap();
        fs::set_permissions(&ro, fs::Permissions::from_mode(0o555)).unwrap();
        let res = save_frame(&Frame::filled(1, 1, [0.0; 3]), ro.join("x.ppm"));
        // Root ignores directory permissions; only assert when the write was refused.
        if fs::metadata(ro.join("x.ppm")).is_err() {
            assert!(matches!(res, Err(ImageError::Unwritable { .. })));
        }
        let res = save_frame(&Frame::filled(1, 1, [0.0; 3]), tmp.path().join("missing/dir/x.ppm"));
        assert!(matches!(res, Err(ImageError::Unwritable { .. })));
    }

    #[test]
    fn sequence_directory_order() {
        let tmp = tempfile::tempdir().unwrap();
        let frames: Vec<Frame> = (0..12).map(|i| Frame::filled(2, 2, [i as f64 / 11.0; 3])).collect();
        let seq = FrameSequence::from_frames(frames).unwrap();
        save_sequence(&seq, tmp.path(), FrameFormat::Ppm).unwrap();
        assert!(tmp.path().join("frame_00001.ppm").exists());
        assert!(tmp.path().join("frame_00012.ppm").exists());
        fs::write(tmp.path().join("notes.txt"), "ignored").unwrap();
        let back = load_sequence(tmp.path(), 30.0).unwrap();
        assert_eq!(back.len(), 12);
        for (a, b) in seq.frames().iter().zip(back.frames()) {
            for (p, q) in a.pixels().iter().zip(b.pixels()) {
                assert!((p[0] - q[0]).abs() <= 0.5 / 255.0 + 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn round_trip_within_one_step(
            (w, h, px) in (1usize..5, 1usize..5).prop_flat_map(|(w, h)| {
                (Just(w), Just(h), prop::collection::vec(prop::array::uniform3(0.0f64..=1.0), w * h))
            }),
            ppm in any::<bool>(),
        ) {
            let f = Frame::new(w, h, px).unwrap();
            let tmp = tempfile::tempdir().unwrap();
            let p = tmp.path().join(if ppm { "f.ppm" } else { "f.png" });
            save_frame(&f, &p).unwrap();
            let g = load_frame(&p).unwrap();
            for (a, b) in f.pixels().iter().zip(g.pixels()) {
                for c in 0..3 {
                    prop_assert!((a[c] - b[c]).abs() <= 1.0 / 255.0);
                }
            }
        }
    }
}
