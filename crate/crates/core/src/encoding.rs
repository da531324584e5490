//! Little-endian binary layout for seed fields and mark sets.
//!
//! ```text
//! magic    4 bytes  "PSP1"
//! version  u16      1
//! region   i32 x0, i32 y0, u32 width, u32 height
//! horizon  f64      (0 for seed fields)
//! k        u32      (0 for seed fields)
//! count    u64      number of records
//! records  seed field: f64 per site, row-major
//!          mark set:   i32 x, i32 y, u32 index, f64 time, f64 rate_uniform, u8 keep
//! ```

use std::io::{Read, Write};

use crate::lattice::{BoxRegion, Site};
use crate::randomness::{Mark, MarkSet, SeedField};
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"PSP1";
pub const VERSION: u16 = 1;

struct Header {
    region: BoxRegion,
    horizon: f64,
    k: u32,
    count: u64,
}

fn write_header<W: Write>(w: &mut W, h: &Header) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&h.region.origin.x.to_le_bytes())?;
    w.write_all(&h.region.origin.y.to_le_bytes())?;
    w.write_all(&h.region.width.to_le_bytes())?;
    w.write_all(&h.region.height.to_le_bytes())?;
    w.write_all(&h.horizon.to_le_bytes())?;
    w.write_all(&h.k.to_le_bytes())?;
    w.write_all(&h.count.to_le_bytes())?;
    Ok(())
}

fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_header<R: Read>(r: &mut R) -> Result<Header> {
    if &take::<4, _>(r)? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u16::from_le_bytes(take(r)?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let x = i32::from_le_bytes(take(r)?);
    let y = i32::from_le_bytes(take(r)?);
    let width = u32::from_le_bytes(take(r)?);
    let height = u32::from_le_bytes(take(r)?);
    if width == 0 || height == 0 {
        return Err(Error::Format("empty region".into()));
    }
    Ok(Header {
        region: BoxRegion::new(Site::new(x, y), width, height),
        horizon: f64::from_le_bytes(take(r)?),
        k: u32::from_le_bytes(take(r)?),
        count: u64::from_le_bytes(take(r)?),
    })
}

pub fn write_seed_field<W: Write>(w: &mut W, field: &SeedField) -> Result<()> {
    write_header(
        w,
        &Header {
            region: field.region(),
            horizon: 0.0,
            k: 0,
            count: field.uniforms().len() as u64,
        },
    )?;
    for u in field.uniforms() {
        w.write_all(&u.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_seed_field<R: Read>(r: &mut R) -> Result<SeedField> {
    let h = read_header(r)?;
    if h.k != 0 || h.count != h.region.len() as u64 {
        return Err(Error::Format("not a seed field record".into()));
    }
    let uniforms = (0..h.count)
        .map(|_| Ok(f64::from_le_bytes(take(r)?)))
        .collect::<Result<Vec<_>>>()?;
    SeedField::from_uniforms(h.region, uniforms)
}

pub fn write_mark_set<W: Write>(w: &mut W, marks: &MarkSet) -> Result<()> {
    write_header(
        w,
        &Header {
            region: marks.region(),
            horizon: marks.horizon(),
            k: marks.thickening(),
            count: marks.len() as u64,
        },
    )?;
    for m in marks.marks() {
        w.write_all(&m.site.x.to_le_bytes())?;
        w.write_all(&m.site.y.to_le_bytes())?;
        w.write_all(&m.index.to_le_bytes())?;
        w.write_all(&m.time.to_le_bytes())?;
        w.write_all(&m.rate_uniform.to_le_bytes())?;
        w.write_all(&[m.keep as u8])?;
    }
    Ok(())
}

pub fn read_mark_set<R: Read>(r: &mut R) -> Result<MarkSet> {
    let h = read_header(r)?;
    if h.k == 0 {
        return Err(Error::Format("not a mark set record".into()));
    }
    let mut marks = Vec::with_capacity(h.count.min(1 << 24) as usize);
    for _ in 0..h.count {
        let x = i32::from_le_bytes(take(r)?);
        let y = i32::from_le_bytes(take(r)?);
        let index = u32::from_le_bytes(take(r)?);
        let time = f64::from_le_bytes(take(r)?);
        let rate_uniform = f64::from_le_bytes(take(r)?);
        let keep = match take::<1, _>(r)?[0] {
            0 => false,
            1 => true,
            b => return Err(Error::Format(format!("invalid keep byte {b}"))),
        };
        marks.push(Mark {
            site: Site::new(x, y),
            time,
            rate_uniform,
            keep,
            index,
        });
    }
    MarkSet::from_marks(h.region, h.horizon, h.k, marks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randomness::{sample_marks, sample_seed_field};
    use proptest::prelude::*;

    #[test]
    fn header_layout_is_fixed() {
        let region = BoxRegion::new(Site::new(-1, 2), 1, 1);
        let field = SeedField::from_uniforms(region, vec![0.25]).unwrap();
        let mut bytes = Vec::new();
        write_seed_field(&mut bytes, &field).unwrap();
        let mut want = Vec::new();
        want.extend_from_slice(b"PSP1");
        want.extend_from_slice(&[1, 0]);
        want.extend_from_slice(&(-1i32).to_le_bytes());
        want.extend_from_slice(&2i32.to_le_bytes());
        want.extend_from_slice(&1u32.to_le_bytes());
        want.extend_from_slice(&1u32.to_le_bytes());
        want.extend_from_slice(&0f64.to_le_bytes());
        want.extend_from_slice(&0u32.to_le_bytes());
        want.extend_from_slice(&1u64.to_le_bytes());
        want.extend_from_slice(&0.25f64.to_le_bytes());
        assert_eq!(bytes, want);
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_mark_set(&mut &b"PSP2\x01\x00"[..]).is_err());
        let field = sample_seed_field(BoxRegion::new(Site::new(0, 0), 2, 2), 1);
        let mut bytes = Vec::new();
        write_seed_field(&mut bytes, &field).unwrap();
        assert!(read_mark_set(&mut bytes.as_slice()).is_err());
        bytes.truncate(bytes.len() - 3);
        assert!(read_seed_field(&mut bytes.as_slice()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn round_trips(seed in any::<u64>(), w in 1u32..8, h in 1u32..8, k in 1u32..5, horizon in 0.1f64..3.0) {
            let region = BoxRegion::new(Site::new(-3, 5), w, h);
            let marks = sample_marks(region, horizon, k, seed).unwrap();
            let mut bytes = Vec::new();
            write_mark_set(&mut bytes, &marks).unwrap();
            prop_assert_eq!(read_mark_set(&mut bytes.as_slice()).unwrap(), marks);

            let field = sample_seed_field(region, seed);
            let mut bytes = Vec::new();
            write_seed_field(&mut bytes, &field).unwrap();
            prop_assert_eq!(read_seed_field(&mut bytes.as_slice()).unwrap(), field);
        }
    }
}
