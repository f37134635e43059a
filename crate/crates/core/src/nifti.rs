//! Reader and writer for the subset of NIfTI-1 the toolkit needs.
//!
//! Supported: single-file (`n+1`) and header/image pairs (`ni1`), either byte
//! order on input, datatypes u8/i16/i32/f32/f64, `scl_slope`/`scl_inter`
//! scaling, and the sform affine (falling back to a pixdim diagonal).
//! Unsupported: gzip, header extensions, qform quaternions.
//!
//! Dimensions are stored in 16-bit fields. The writer reinterprets them as
//! unsigned so extents up to 65535 round-trip, and the reader undoes this
//! for fields that decode as negative.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use byteorder::{BigEndian, ByteOrder, LittleEndian};

use crate::error::{Error, Result};
use crate::volume::{Affine4, ElementKind, Volume4D};

pub const HEADER_SIZE: usize = 348;
/// Header plus the 4-byte extension flag.
pub const SINGLE_FILE_OFFSET: usize = 352;

const MAGIC_SINGLE: &[u8; 4] = b"n+1\0";
const MAGIC_PAIR: &[u8; 4] = b"ni1\0";

/// Decoded header fields relevant to this subset.
#[derive(Debug, Clone, PartialEq)]
pub struct NiftiHeader {
    pub little_endian: bool,
    pub dim: [i64; 8],
    pub datatype: i16,
    pub bitpix: i16,
    pub pixdim: [f32; 8],
    pub vox_offset: f32,
    pub scl_slope: f32,
    pub scl_inter: f32,
    pub sform_code: i16,
    pub srow: [[f32; 4]; 3],
    pub single_file: bool,
}

impl NiftiHeader {
    /// Parses the first 348 bytes of `bytes`.
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_SIZE {
            return Err(Error::TruncatedFile {
                path: PathBuf::new(),
                detail: format!("{} bytes, header needs {HEADER_SIZE}", bytes.len()),
            });
        }
        let le_dim0 = LittleEndian::read_i16(&bytes[40..42]);
        let be_dim0 = BigEndian::read_i16(&bytes[40..42]);
        let little_endian = if (1..=7).contains(&le_dim0) {
            true
        } else if (1..=7).contains(&be_dim0) {
            false
        } else {
            return Err(Error::BadMagic(format!(
                "dim[0] is {le_dim0} (LE) / {be_dim0} (BE), expected 1..7"
            )));
        };
        if little_endian {
            Self::parse_with::<LittleEndian>(bytes, true)
        } else {
            Self::parse_with::<BigEndian>(bytes, false)
        }
    }

    fn parse_with<B: ByteOrder>(b: &[u8], little_endian: bool) -> Result<Self> {
        let sizeof_hdr = B::read_i32(&b[0..4]);
        if sizeof_hdr != HEADER_SIZE as i32 {
            return Err(Error::BadMagic(format!("sizeof_hdr = {sizeof_hdr}")));
        }
        let magic = &b[344..348];
        let single_file = if magic == MAGIC_SINGLE {
            true
        } else if magic == MAGIC_PAIR {
            false
        } else {
            return Err(Error::BadMagic(format!("magic bytes {magic:?}")));
        };
        let mut dim = [0i64; 8];
        for (i, d) in dim.iter_mut().enumerate() {
            let raw = B::read_i16(&b[40 + 2 * i..42 + 2 * i]);
            *d = if raw < 0 { i64::from(raw as u16) } else { i64::from(raw) };
        }
        let mut pixdim = [0f32; 8];
        for (i, p) in pixdim.iter_mut().enumerate() {
            *p = B::read_f32(&b[76 + 4 * i..80 + 4 * i]);
        }
        let mut srow = [[0f32; 4]; 3];
        for (r, row) in srow.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                let off = 280 + 16 * r + 4 * c;
                *v = B::read_f32(&b[off..off + 4]);
            }
        }
        Ok(NiftiHeader {
            little_endian,
            dim,
            datatype: B::read_i16(&b[70..72]),
            bitpix: B::read_i16(&b[72..74]),
            pixdim,
            vox_offset: B::read_f32(&b[108..112]),
            scl_slope: B::read_f32(&b[112..116]),
            scl_inter: B::read_f32(&b[116..120]),
            sform_code: B::read_i16(&b[254..256]),
            srow,
            single_file,
        })
    }

    /// Volume shape from `dim[1..=4]`; trailing dimensions default to 1.
    pub fn shape(&self) -> Result<[usize; 4]> {
        let ndim = self.dim[0] as usize;
        let mut shape = [1usize; 4];
        for (i, s) in shape.iter_mut().enumerate() {
            if i < ndim {
                let d = self.dim[i + 1];
                if d < 1 {
                    return Err(Error::BadShape(format!("dim[{}] = {d}", i + 1)));
                }
                *s = d as usize;
            }
        }
        for i in 5..=ndim {
            if self.dim[i] > 1 {
                return Err(Error::BadShape(format!(
                    "dim[{i}] = {}: only 4 dimensions are supported",
                    self.dim[i]
                )));
            }
        }
        Ok(shape)
    }

    pub fn affine(&self) -> Result<Affine4> {
        if self.sform_code > 0 {
            let s = &self.srow;
            let row = |r: usize| s[r].map(f64::from);
            Affine4::new([row(0), row(1), row(2), [0.0, 0.0, 0.0, 1.0]])
        } else {
            let p = |i: usize| {
                let v = f64::from(self.pixdim[i]);
                if v == 0.0 { 1.0 } else { v.abs() }
            };
            Affine4::new([
                [p(1), 0.0, 0.0, 0.0],
                [0.0, p(2), 0.0, 0.0],
                [0.0, 0.0, p(3), 0.0],
                [0.0, 0.0, 0.0, 1.0],
            ])
        }
    }

    /// Little-endian single-file f64 header for a volume of `shape`.
    pub fn for_volume(shape: [usize; 4], affine: &Affine4) -> Result<Self> {
        let mut dim = [1i64; 8];
        dim[0] = if shape[3] > 1 { 4 } else { 3 };
        for (i, &s) in shape.iter().enumerate() {
            if s == 0 || s > usize::from(u16::MAX) {
                return Err(Error::DimensionOverflow(s));
            }
            dim[i + 1] = s as i64;
        }
        let pitch = affine.voxel_pitch();
        let m = affine.matrix();
        let srow = [0, 1, 2].map(|r| m[r].map(|v| v as f32));
        Ok(NiftiHeader {
            little_endian: true,
            dim,
            datatype: ElementKind::F64.nifti_code(),
            bitpix: 64,
            pixdim: [1.0, pitch[0] as f32, pitch[1] as f32, pitch[2] as f32, 1.0, 1.0, 1.0, 1.0],
            vox_offset: SINGLE_FILE_OFFSET as f32,
            scl_slope: 1.0,
            scl_inter: 0.0,
            sform_code: 1,
            srow,
            single_file: true,
        })
    }

    /// Serializes to 348 little-endian bytes.
    pub fn encode(&self) -> [u8; HEADER_SIZE] {
        type B = LittleEndian;
        let mut b = [0u8; HEADER_SIZE];
        B::write_i32(&mut b[0..4], HEADER_SIZE as i32);
        b[38] = b'r';
        for (i, &d) in self.dim.iter().enumerate() {
            // values above i16::MAX are stored by their u16 bit pattern
            B::write_u16(&mut b[40 + 2 * i..42 + 2 * i], d as u16);
        }
        B::write_i16(&mut b[70..72], self.datatype);
        B::write_i16(&mut b[72..74], self.bitpix);
        for (i, &p) in self.pixdim.iter().enumerate() {
            B::write_f32(&mut b[76 + 4 * i..80 + 4 * i], p);
        }
        B::write_f32(&mut b[108..112], self.vox_offset);
        B::write_f32(&mut b[112..116], self.scl_slope);
        B::write_f32(&mut b[116..120], self.scl_inter);
        b[123] = 2 | 8; // mm, seconds
        B::write_i16(&mut b[254..256], self.sform_code);
        for (r, row) in self.srow.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                let off = 280 + 16 * r + 4 * c;
                B::write_f32(&mut b[off..off + 4], v);
            }
        }
        b[344..348].copy_from_slice(if self.single_file { MAGIC_SINGLE } else { MAGIC_PAIR });
        b
    }
}

/// Reads a `.nii` file, or a `.hdr`/`.img` pair when the magic says `ni1`.
pub fn read_nifti(path: impl AsRef<Path>) -> Result<Volume4D> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let header = NiftiHeader::parse(&bytes).map_err(|e| with_path(e, path))?;
    if header.single_file {
        if bytes.len() < SINGLE_FILE_OFFSET {
            return Err(Error::TruncatedFile {
                path: path.into(),
                detail: format!("{} bytes, single-file NIfTI needs at least {SINGLE_FILE_OFFSET}", bytes.len()),
            });
        }
        decode_payload(&header, &bytes, path)
    } else {
        let img = path.with_extension("img");
        let payload = fs::read(&img).map_err(|e| Error::io(&img, e))?;
        decode_payload(&header, &payload, &img)
    }
}

/// Decodes a volume from an in-memory single-file image.
pub fn decode_nifti(bytes: &[u8]) -> Result<Volume4D> {
    let header = NiftiHeader::parse(bytes)?;
    if !header.single_file {
        return Err(Error::BadMagic("ni1 images keep their data in a separate file".into()));
    }
    decode_payload(&header, bytes, Path::new("<memory>"))
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::TruncatedFile { detail, .. } => Error::TruncatedFile {
            path: path.into(),
            detail,
        },
        other => other,
    }
}

fn decode_payload(h: &NiftiHeader, bytes: &[u8], path: &Path) -> Result<Volume4D> {
    let kind =
        ElementKind::from_nifti_code(h.datatype).ok_or(Error::UnsupportedDatatype(h.datatype))?;
    let shape = h.shape()?;
    let affine = h.affine()?;
    let n: usize = shape.iter().product();
    let offset = if h.vox_offset.is_finite() && h.vox_offset >= 0.0 {
        h.vox_offset as usize
    } else {
        return Err(Error::BadMagic(format!("vox_offset = {}", h.vox_offset)));
    };
    let needed = offset + n * kind.byte_size();
    if bytes.len() < needed {
        return Err(Error::TruncatedFile {
            path: path.into(),
            detail: format!("payload needs {needed} bytes, file has {}", bytes.len()),
        });
    }
    let raw = &bytes[offset..needed];
    let mut data = if h.little_endian {
        decode_values::<LittleEndian>(raw, kind, n)
    } else {
        decode_values::<BigEndian>(raw, kind, n)
    };
    let slope = f64::from(h.scl_slope);
    let inter = f64::from(h.scl_inter);
    if slope != 0.0 && slope.is_finite() && !(slope == 1.0 && inter == 0.0) {
        data.iter_mut().for_each(|v| *v = *v * slope + inter);
    }
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteData(format!("{} at voxel {i}", path.display())));
    }
    Ok(Volume4D::new(shape, data, affine)?.with_element_kind(kind))
}

fn decode_values<B: ByteOrder>(raw: &[u8], kind: ElementKind, n: usize) -> Vec<f64> {
    let w = kind.byte_size();
    (0..n)
        .map(|i| {
            let s = &raw[i * w..(i + 1) * w];
            match kind {
                ElementKind::U8 => f64::from(s[0]),
                ElementKind::I16 => f64::from(B::read_i16(s)),
                ElementKind::I32 => f64::from(B::read_i32(s)),
                ElementKind::F32 => f64::from(B::read_f32(s)),
                ElementKind::F64 => B::read_f64(s),
            }
        })
        .collect()
}

/// Encodes a volume as a little-endian single-file f64 image.
pub fn encode_nifti(vol: &Volume4D) -> Result<Vec<u8>> {
    let header = NiftiHeader::for_volume(vol.shape(), vol.affine())?;
    let mut out = Vec::with_capacity(SINGLE_FILE_OFFSET + 8 * vol.data().len());
    out.extend_from_slice(&header.encode());
    out.extend_from_slice(&[0u8; 4]);
    for &v in vol.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn write_nifti(vol: &Volume4D, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let header = NiftiHeader::for_volume(vol.shape(), vol.affine())?;
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let write = |w: &mut std::io::BufWriter<fs::File>| -> std::io::Result<()> {
        w.write_all(&header.encode())?;
        w.write_all(&[0u8; 4])?;
        for &v in vol.data() {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()
    };
    write(&mut w).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube() -> Volume4D {
        let a = Affine4::new([
            [2.0, 0.0, 0.0, -3.0],
            [0.0, 2.5, 0.0, 1.0],
            [0.0, 0.0, 3.0, 0.5],
            [0.0, 0.0, 0.0, 1.0],
        ])
        .unwrap();
        Volume4D::from_fn([2, 2, 2, 1], a, |x, y, z, _| (x + 2 * y + 4 * z) as f64 * 0.5)
            .unwrap()
    }

    /// Minimal big-endian f32 header built byte by byte, independent of
    /// `NiftiHeader::encode`.
    fn hand_built_be_f32(values: &[f32], shape: [i16; 3]) -> Vec<u8> {
        let mut b = vec![0u8; 352];
        b[0..4].copy_from_slice(&348i32.to_be_bytes());
        b[40..42].copy_from_slice(&3i16.to_be_bytes());
        for (i, s) in shape.iter().enumerate() {
            b[42 + 2 * i..44 + 2 * i].copy_from_slice(&s.to_be_bytes());
        }
        b[70..72].copy_from_slice(&16i16.to_be_bytes());
        b[72..74].copy_from_slice(&32i16.to_be_bytes());
        for (i, p) in [1.0f32, 1.5, 2.0, 2.5].iter().enumerate() {
            b[76 + 4 * i..80 + 4 * i].copy_from_slice(&p.to_be_bytes());
        }
        b[108..112].copy_from_slice(&352f32.to_be_bytes());
        b[344..348].copy_from_slice(b"n+1\0");
        for v in values {
            b.extend_from_slice(&v.to_be_bytes());
        }
        b
    }

    #[test]
    fn header_layout_matches_hex_dump() {
        let bytes = encode_nifti(&cube()).unwrap();
        assert_eq!(bytes.len(), 352 + 64);
        // sizeof_hdr = 348 = 0x15c
        assert_eq!(&bytes[0..4], &[0x5c, 0x01, 0x00, 0x00]);
        // dim = (3, 2, 2, 2, 1, 1, 1, 1)
        assert_eq!(&bytes[40..50], &[3, 0, 2, 0, 2, 0, 2, 0, 1, 0]);
        // datatype 64, bitpix 64
        assert_eq!(&bytes[70..74], &[64, 0, 64, 0]);
        // vox_offset = 352.0f32 = 0x43b00000
        assert_eq!(&bytes[108..112], &[0x00, 0x00, 0xb0, 0x43]);
        // scl_slope = 1.0f32
        assert_eq!(&bytes[112..116], &[0x00, 0x00, 0x80, 0x3f]);
        // sform_code = 1
        assert_eq!(&bytes[254..256], &[1, 0]);
        // srow_x[0] = 2.0f32 = 0x40000000
        assert_eq!(&bytes[280..284], &[0, 0, 0, 0x40]);
        assert_eq!(&bytes[344..348], b"n+1\0");
        // first payload voxel: 0.0f64, second: 0.5f64 = 0x3fe0000000000000
        assert_eq!(&bytes[360..368], &[0, 0, 0, 0, 0, 0, 0xe0, 0x3f]);

        let v = decode_nifti(&bytes).unwrap();
        assert_eq!(v.shape(), [2, 2, 2, 1]);
    }

    #[test]
    fn reads_big_endian_f32_with_pixdim_affine() {
        let vals: Vec<f32> = (0..8).map(|i| i as f32 * 1.25).collect();
        let bytes = hand_built_be_f32(&vals, [2, 2, 2]);
        let v = decode_nifti(&bytes).unwrap();
        assert_eq!(v.shape(), [2, 2, 2, 1]);
        assert_eq!(v.element_kind(), ElementKind::F32);
        assert_eq!(v.data()[3], 3.75);
        assert_eq!(v.affine().voxel_pitch(), [1.5, 2.0, 2.5]);
        assert_eq!(v.affine().apply([0.0; 3]), [0.0; 3]);
    }

    #[test]
    fn applies_scaling() {
        let vals = [1.0f32, 2.0];
        let mut bytes = hand_built_be_f32(&vals, [2, 1, 1]);
        bytes[112..116].copy_from_slice(&2.0f32.to_be_bytes());
        bytes[116..120].copy_from_slice(&(-1.0f32).to_be_bytes());
        let v = decode_nifti(&bytes).unwrap();
        assert_eq!(v.data(), &[1.0, 3.0]);
    }

    #[test]
    fn rejects_rgb_datatype() {
        let mut bytes = encode_nifti(&cube()).unwrap();
        bytes[70..72].copy_from_slice(&128i16.to_le_bytes());
        assert!(matches!(decode_nifti(&bytes), Err(Error::UnsupportedDatatype(128))));
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let good = encode_nifti(&cube()).unwrap();
        let mut bad = good.clone();
        bad[344..348].copy_from_slice(b"xyz\0");
        assert!(matches!(decode_nifti(&bad), Err(Error::BadMagic(_))));
        assert!(matches!(
            decode_nifti(&good[..good.len() - 1]),
            Err(Error::TruncatedFile { .. })
        ));
        assert!(matches!(decode_nifti(&good[..100]), Err(Error::TruncatedFile { .. })));
    }

    #[test]
    fn rejects_nan_payload() {
        let bytes = hand_built_be_f32(&[1.0, f32::NAN], [2, 1, 1]);
        assert!(matches!(decode_nifti(&bytes), Err(Error::NonFiniteData(_))));
    }

    #[test]
    fn zero_volume_file_size() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.nii");
        let v = Volume4D::zeros([2, 2, 2, 1], Affine4::identity()).unwrap();
        write_nifti(&v, &p).unwrap();
        assert_eq!(fs::metadata(&p).unwrap().len(), 352 + 64);
    }

    #[test]
    fn large_dims_are_representable() {
        let a = Affine4::identity();
        let h = NiftiHeader::for_volume([40000, 1, 1, 1], &a).unwrap();
        let back = NiftiHeader::parse(&h.encode()).unwrap();
        assert_eq!(back.shape().unwrap(), [40000, 1, 1, 1]);
        let h = NiftiHeader::for_volume([40000, 40000, 1, 1], &a).unwrap();
        assert_eq!(NiftiHeader::parse(&h.encode()).unwrap().shape().unwrap(), [40000, 40000, 1, 1]);
        assert!(matches!(
            NiftiHeader::for_volume([70000, 1, 1, 1], &a),
            Err(Error::DimensionOverflow(70000))
        ));

        let v = Volume4D::from_fn([40000, 1, 1, 1], a, |x, _, _, _| x as f64).unwrap();
        let back = decode_nifti(&encode_nifti(&v).unwrap()).unwrap();
        assert_eq!(back.shape(), [40000, 1, 1, 1]);
        assert_eq!(back.data()[39999], 39999.0);
    }

    #[test]
    fn reads_header_image_pair() {
        let dir = tempfile::tempdir().unwrap();
        let v = cube();
        let mut h = NiftiHeader::for_volume(v.shape(), v.affine()).unwrap();
        h.single_file = false;
        h.vox_offset = 0.0;
        fs::write(dir.path().join("pair.hdr"), h.encode()).unwrap();
        let payload: Vec<u8> = v.data().iter().flat_map(|x| x.to_le_bytes()).collect();
        fs::write(dir.path().join("pair.img"), payload).unwrap();
        let back = read_nifti(dir.path().join("pair.hdr")).unwrap();
        assert_eq!(back.data(), v.data());
    }
}
