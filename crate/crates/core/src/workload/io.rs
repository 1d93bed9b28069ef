//! Binary dataset container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//! 0       6     magic "COGSEL"
//! 6       2     u16 format version (1)
//! 8       4     u32 number of train frames
//! 12      4     u32 number of test frames
//! 16      ...   frames, train split first, each 1029 bytes:
//!               u8 class id, f32 snr_db, 256 x f32 interleaved I,Q
//! ```

use std::io::{Read, Write};

use rustfft::num_complex::Complex64;

use super::modulation::ModClass;
use super::synth::{Frame, FRAME_LEN};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 6] = b"COGSEL";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 16;
pub const FRAME_RECORD_LEN: usize = 1 + 4 + FRAME_LEN * 2 * 4;

pub fn write_frames<W: Write>(mut w: W, train: &[Frame], test: &[Frame]) -> Result<()> {
    let mut header = [0u8; HEADER_LEN];
    header[..6].copy_from_slice(MAGIC);
    header[6..8].copy_from_slice(&VERSION.to_le_bytes());
    header[8..12].copy_from_slice(&count(train.len())?.to_le_bytes());
    header[12..16].copy_from_slice(&count(test.len())?.to_le_bytes());
    w.write_all(&header)?;
    let mut rec = Vec::with_capacity(FRAME_RECORD_LEN);
    for f in train.iter().chain(test) {
        if f.iq.len() != FRAME_LEN {
            return Err(Error::Format(format!("frame has {} samples", f.iq.len())));
        }
        rec.clear();
        rec.push(f.label.id());
        rec.extend_from_slice(&(f.snr_db as f32).to_le_bytes());
        for z in &f.iq {
            rec.extend_from_slice(&(z.re as f32).to_le_bytes());
            rec.extend_from_slice(&(z.im as f32).to_le_bytes());
        }
        w.write_all(&rec)?;
    }
    Ok(())
}

fn count(n: usize) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::Format(format!("{n} frames exceed the u32 count field")))
}

/// Reads `(train, test)` frames.
pub fn read_frames<R: Read>(mut r: R) -> Result<(Vec<Frame>, Vec<Frame>)> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)?;
    if &header[..6] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u16::from_le_bytes([header[6], header[7]]);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n_train = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let n_test = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let mut rec = vec![0u8; FRAME_RECORD_LEN];
    let mut read_split = |n: usize| -> Result<Vec<Frame>> {
        (0..n)
            .map(|_| {
                r.read_exact(&mut rec)?;
                let label = ModClass::from_id(rec[0])
                    .ok_or_else(|| Error::Format(format!("bad class id {}", rec[0])))?;
                let f32_at = |off: usize| f32::from_le_bytes(rec[off..off + 4].try_into().unwrap());
                let snr_db = f64::from(f32_at(1));
                let iq = (0..FRAME_LEN)
                    .map(|k| {
                        let off = 5 + 8 * k;
                        Complex64::new(f64::from(f32_at(off)), f64::from(f32_at(off + 4)))
                    })
                    .collect();
                Ok(Frame { iq, label, snr_db })
            })
            .collect()
    };
    let train = read_split(n_train)?;
    let test = read_split(n_test)?;
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use crate::workload::synth::synthesize_frame;

    #[test]
    fn round_trip_at_f32_precision() {
        let mut rng = SplitMix64::new(1);
        let train: Vec<Frame> = (0..3).map(|_| synthesize_frame(ModClass::Qam16, 2.0, &mut rng)).collect();
        let test = vec![synthesize_frame(ModClass::Wbfm, -16.0, &mut rng)];
        let mut buf = Vec::new();
        write_frames(&mut buf, &train, &test).unwrap();
        assert_eq!(buf.len(), HEADER_LEN + 4 * FRAME_RECORD_LEN);
        assert_eq!(&buf[..6], b"COGSEL");
        let (tr, te) = read_frames(buf.as_slice()).unwrap();
        assert_eq!(tr.len(), 3);
        assert_eq!(te[0].label, ModClass::Wbfm);
        assert_eq!(te[0].snr_db, -16.0);
        for (a, b) in train.iter().zip(&tr) {
            for (x, y) in a.iq.iter().zip(&b.iq) {
                assert!((x - y).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let mut buf = Vec::new();
        write_frames(&mut buf, &[], &[]).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_frames(bad.as_slice()), Err(Error::Format(_))));
        buf[8] = 1; // claims one train frame that is not there
        assert!(matches!(read_frames(buf.as_slice()), Err(Error::Io(_))));
    }
}
