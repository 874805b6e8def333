//! Pre-decoded media: PCM WAV audio and 8-bit RGB frame sequences.
//!
//! Frame sequences are either a directory of numbered PNG files or a raw
//! dump: an ASCII header line `RGB8 <width> <height> <count>` followed by
//! `count * height * width * 3` bytes, row-major, interleaved RGB.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::FeatureError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    pub rgb: Vec<u8>,
}

impl Frame {
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        Frame { width, height, rgb: rgb.iter().copied().cycle().take(width * height * 3).collect() }
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }
}

fn media_err(path: &Path, msg: impl std::fmt::Display) -> FeatureError {
    FeatureError::Media(format!("{}: {msg}", path.display()))
}

/// Reads a WAV file as mono samples in [-1, 1] (channel mean) and its rate.
pub fn read_wav_mono(path: &Path) -> Result<(Vec<f64>, u32), FeatureError> {
    let mut reader = hound::WavReader::open(path).map_err(|e| media_err(path, e))?;
    let spec = reader.spec();
    let ch = spec.channels as usize;
    let samples: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => {
            reader.samples::<f32>().map(|s| s.map(f64::from)).collect::<Result<_, _>>().map_err(|e| media_err(path, e))?
        }
        hound::SampleFormat::Int => {
            let scale = f64::from(1u32 << (spec.bits_per_sample - 1));
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| f64::from(v) / scale))
                .collect::<Result<_, _>>()
                .map_err(|e| media_err(path, e))?
        }
    };
    let mono = samples.chunks_exact(ch).map(|c| c.iter().sum::<f64>() / ch as f64).collect();
    Ok((mono, spec.sample_rate))
}

/// Writes mono 16-bit PCM.
pub fn write_wav_mono(path: &Path, samples: &[f64], rate: u32) -> Result<(), FeatureError> {
    let spec = hound::WavSpec { channels: 1, sample_rate: rate, bits_per_sample: 16, sample_format: hound::SampleFormat::Int };
    let mut w = hound::WavWriter::create(path, spec).map_err(|e| media_err(path, e))?;
    for &s in samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        w.write_sample(v).map_err(|e| media_err(path, e))?;
    }
    w.finalize().map_err(|e| media_err(path, e))
}

/// Loads a raw dump file or a directory of PNG frames (sorted by file name).
pub fn read_frames(path: &Path) -> Result<Vec<Frame>, FeatureError> {
    if path.is_dir() {
        let mut names: Vec<_> = fs::read_dir(path)
            .map_err(|e| media_err(path, e))?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
            .collect();
        names.sort();
        return names
            .iter()
            .map(|p| {
                let img = image::open(p).map_err(|e| media_err(p, e))?.to_rgb8();
                Ok(Frame { width: img.width() as usize, height: img.height() as usize, rgb: img.into_raw() })
            })
            .collect();
    }
    let f = fs::File::open(path).map_err(|e| media_err(path, e))?;
    let mut r = BufReader::new(f);
    let mut header = String::new();
    r.read_line(&mut header).map_err(|e| media_err(path, e))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "RGB8" {
        return Err(media_err(path, "expected header `RGB8 <width> <height> <count>`"));
    }
    let nums: Vec<usize> = parts[1..].iter().map(|p| p.parse()).collect::<Result<_, _>>().map_err(|e| media_err(path, e))?;
    let (w, h, n) = (nums[0], nums[1], nums[2]);
    let mut frames = Vec::with_capacity(n);
    for _ in 0..n {
        let mut rgb = vec![0u8; w * h * 3];
        r.read_exact(&mut rgb).map_err(|e| media_err(path, e))?;
        frames.push(Frame { width: w, height: h, rgb });
    }
    Ok(frames)
}

pub fn write_raw_frames(path: &Path, frames: &[Frame]) -> Result<(), FeatureError> {
    let (w, h) = frames.first().map_or((0, 0), |f| (f.width, f.height));
    let mut f = fs::File::create(path).map_err(|e| media_err(path, e))?;
    writeln!(f, "RGB8 {w} {h} {}", frames.len()).map_err(|e| media_err(path, e))?;
    for fr in frames {
        if fr.width != w || fr.height != h {
            return Err(media_err(path, "frames differ in size"));
        }
        f.write_all(&fr.rgb).map_err(|e| media_err(path, e))?;
    }
    Ok(())
}

/// Writes an 8-bit grayscale PNG.
pub fn write_gray_png(path: &Path, width: usize, height: usize, px: &[u8]) -> Result<(), FeatureError> {
    let img = image::GrayImage::from_raw(width as u32, height as u32, px.to_vec())
        .ok_or_else(|| media_err(path, "raster size mismatch"))?;
    img.save(path).map_err(|e| media_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_frames_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.rgb");
        let frames = vec![Frame::filled(3, 2, [1, 2, 3]), Frame::filled(3, 2, [200, 0, 9])];
        write_raw_frames(&p, &frames).unwrap();
        assert_eq!(read_frames(&p).unwrap(), frames);
    }

    #[test]
    fn wav_round_trip_within_quantisation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        let x: Vec<f64> = (0..100).map(|i| (i as f64 / 10.0).sin() * 0.5).collect();
        write_wav_mono(&p, &x, 8000).unwrap();
        let (y, rate) = read_wav_mono(&p).unwrap();
        assert_eq!(rate, 8000);
        assert!(x.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-4));
    }
}
