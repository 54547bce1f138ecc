//! Binary checkpoint layout (little endian):
//!
//! ```text
//! magic      8 bytes  "DGCNCKPT"
//! version    u32      1
//! width      u8       scalar width in bytes (4 = f32, 8 = f64)
//! f_in, h    u32, u32
//! dropout    f64
//! params     w0 (f_in*h, row-major), b0 (h), w1 (h), b1 (1)   scalars of `width`
//! adam       lr, beta1, beta2, eps: f64; step: u64; first moment; second moment (param layout)
//! features   u32
//! standardizer  iot_mean, iot_std, router_mean, router_std   f64 x features each
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use super::adam::AdamState;
use super::model::GcnModel;
use super::params::GcnParams;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::topology::Standardizer;

pub const MAGIC: &[u8; 8] = b"DGCNCKPT";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T> {
    pub model: GcnModel<T>,
    pub optimizer: AdamState<T>,
    pub standardizer: Standardizer,
}

fn ck(e: std::io::Error) -> Error {
    Error::Checkpoint(e.to_string())
}

fn write_scalar<T: Scalar, W: Write>(w: &mut W, v: T) -> std::io::Result<()> {
    match T::WIDTH {
        4 => w.write_f32::<LE>(v.to_f64_lossy() as f32),
        _ => w.write_f64::<LE>(v.to_f64_lossy()),
    }
}

fn read_scalar<T: Scalar, R: Read>(r: &mut R) -> std::io::Result<T> {
    Ok(match T::WIDTH {
        4 => T::from_f64_lossy(r.read_f32::<LE>()? as f64),
        _ => T::from_f64_lossy(r.read_f64::<LE>()?),
    })
}

fn write_params<T: Scalar, W: Write>(w: &mut W, p: &GcnParams<T>) -> std::io::Result<()> {
    for block in p.blocks() {
        for v in block {
            write_scalar(w, *v)?;
        }
    }
    Ok(())
}

fn read_params<T: Scalar, R: Read>(r: &mut R, f_in: usize, h: usize) -> std::io::Result<GcnParams<T>> {
    let mut p = GcnParams::zeros(f_in, h);
    for block in p.blocks_mut() {
        for v in block.iter_mut() {
            *v = read_scalar(r)?;
        }
    }
    Ok(p)
}

impl<T: Scalar> Checkpoint<T> {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let m = &self.model;
        let o = &self.optimizer;
        let s = &self.standardizer;
        (|| -> std::io::Result<()> {
            w.write_all(MAGIC)?;
            w.write_u32::<LE>(VERSION)?;
            w.write_u8(T::WIDTH)?;
            w.write_u32::<LE>(m.f_in() as u32)?;
            w.write_u32::<LE>(m.hidden() as u32)?;
            w.write_f64::<LE>(m.dropout_rate)?;
            write_params(&mut w, &m.params)?;
            for v in [o.learning_rate, o.beta1, o.beta2, o.epsilon] {
                w.write_f64::<LE>(v)?;
            }
            w.write_u64::<LE>(o.step)?;
            write_params(&mut w, &o.first_moment)?;
            write_params(&mut w, &o.second_moment)?;
            w.write_u32::<LE>(s.iot_mean.len() as u32)?;
            for block in [&s.iot_mean, &s.iot_std, &s.router_mean, &s.router_std] {
                for v in block {
                    w.write_f64::<LE>(*v)?;
                }
            }
            w.flush()
        })()
        .map_err(ck)
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(ck)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint("bad magic header".into()));
        }
        let version = r.read_u32::<LE>().map_err(ck)?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let width = r.read_u8().map_err(ck)?;
        if width != T::WIDTH {
            return Err(Error::Checkpoint(format!(
                "checkpoint stores {width}-byte scalars, reader expects {}",
                T::WIDTH
            )));
        }
        (|| -> std::io::Result<Self> {
            let f_in = r.read_u32::<LE>()? as usize;
            let h = r.read_u32::<LE>()? as usize;
            let dropout_rate = r.read_f64::<LE>()?;
            let params = read_params(&mut r, f_in, h)?;
            let mut hyper = [0.0; 4];
            for v in hyper.iter_mut() {
                *v = r.read_f64::<LE>()?;
            }
            let step = r.read_u64::<LE>()?;
            let first_moment = read_params(&mut r, f_in, h)?;
            let second_moment = read_params(&mut r, f_in, h)?;
            let nf = r.read_u32::<LE>()? as usize;
            let mut blocks: [Vec<f64>; 4] = Default::default();
            for b in blocks.iter_mut() {
                for _ in 0..nf {
                    b.push(r.read_f64::<LE>()?);
                }
            }
            let [iot_mean, iot_std, router_mean, router_std] = blocks;
            Ok(Self {
                model: GcnModel { params, dropout_rate },
                optimizer: AdamState {
                    learning_rate: hyper[0],
                    beta1: hyper[1],
                    beta2: hyper[2],
                    epsilon: hyper[3],
                    step,
                    first_moment,
                    second_moment,
                },
                standardizer: Standardizer {
                    iot_mean,
                    iot_std,
                    router_mean,
                    router_std,
                },
            })
        })()
        .map_err(ck)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn checkpoint<T: Scalar>() -> Checkpoint<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut model = GcnModel::<T>::init(5, 6, 0.4, &mut rng).unwrap();
        let mut optimizer = AdamState::new(&model, 1e-3);
        let mut g = GcnParams::zeros(5, 6);
        g.w0.fill(T::from_f64_lossy(0.25));
        g.b1 = T::from_f64_lossy(-1.0);
        optimizer.step(&mut model, &g).unwrap();
        let mut standardizer = Standardizer::identity(5);
        standardizer.iot_mean[2] = 3.5;
        Checkpoint {
            model,
            optimizer,
            standardizer,
        }
    }

    #[test]
    fn roundtrip_both_widths() {
        for_width::<f32>();
        for_width::<f64>();
    }

    fn for_width<T: Scalar>() {
        let c = checkpoint::<T>();
        let mut buf = Vec::new();
        c.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..8], MAGIC);
        assert_eq!(Checkpoint::<T>::read_from(buf.as_slice()).unwrap(), c);
    }

    #[test]
    fn rejects_wrong_magic_and_width() {
        let mut buf = Vec::new();
        checkpoint::<f64>().write_to(&mut buf).unwrap();
        assert!(Checkpoint::<f32>::read_from(buf.as_slice()).is_err());
        buf[0] = b'X';
        assert!(Checkpoint::<f64>::read_from(buf.as_slice()).is_err());
    }
}
