//! Dyadic Brownian lattices: joint per-step increments (dW, dZ) with exact
//! coarsening, so every scheme and the fine reference consume one path.
//!
//! Per step of size h, the pair (dW, dZ) with `dZ = int (W_s - W_start) ds`
//! is bivariate Gaussian with covariance [[h, h^2/2], [h^2/2, h^3/3]] and is
//! drawn through its Cholesky factor from two counter-keyed normals:
//! `dW = sqrt(h) n1`, `dZ = h^(3/2) (n1/2 + n2/(2 sqrt 3))`.

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::normal_pair;

const MAGIC: &[u8; 4] = b"BLAT";

/// Identifies one simulated path within a seeded experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathKey {
    pub seed: u64,
    pub path: u64,
}

/// Per-step Wiener increments on the uniform dyadic mesh with 2^level steps
/// over [0, t_final]. Increment k, component j sits at `dw[k*m + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianLattice {
    pub m: usize,
    pub level: u32,
    pub t_final: f64,
    dw: Vec<f64>,
    dz: Option<Vec<f64>>,
}

impl BrownianLattice {
    /// Number of steps, `2^level`.
    pub fn steps(&self) -> usize {
        1usize << self.level
    }

    /// Uniform step size `t_final / 2^level`.
    pub fn h(&self) -> f64 {
        self.t_final / self.steps() as f64
    }

    pub fn has_dz(&self) -> bool {
        self.dz.is_some()
    }

    pub fn dw_at(&self, step: usize) -> &[f64] {
        &self.dw[step * self.m..(step + 1) * self.m]
    }

    pub fn dz_at(&self, step: usize) -> Option<&[f64]> {
        self.dz.as_ref().map(|z| &z[step * self.m..(step + 1) * self.m])
    }

    /// Terminal Brownian value `W(t_final)` componentwise.
    pub fn terminal_w(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.m];
        for k in 0..self.steps() {
            for (wj, dj) in w.iter_mut().zip(self.dw_at(k)) {
                *wj += dj;
            }
        }
        w
    }

    /// Sample a lattice. Increments are pure functions of
    /// (key.seed, key.path, step, component); the dW stream is unchanged by
    /// `with_dz`.
    pub fn sample(m: usize, level: u32, t_final: f64, with_dz: bool, key: PathKey) -> Self {
        assert!(m >= 1, "noise dimension must be at least 1");
        assert!(t_final > 0.0 && t_final.is_finite());
        let n = 1usize << level;
        let h = t_final / n as f64;
        let sqrt_h = h.sqrt();
        let z_scale = h * sqrt_h;
        let z_mix = 0.5 / 3f64.sqrt();
        let mut dw = vec![0.0; n * m];
        let mut dz = if with_dz { Some(vec![0.0; n * m]) } else { None };
        for k in 0..n {
            for j in 0..m {
                let (n1, n2) = normal_pair(key.seed, key.path, k as u64, j as u32);
                dw[k * m + j] = sqrt_h * n1;
                if let Some(z) = dz.as_mut() {
                    z[k * m + j] = z_scale * (0.5 * n1 + z_mix * n2);
                }
            }
        }
        BrownianLattice { m, level, t_final, dw, dz }
    }

    /// Exact restriction to a coarser dyadic level. Block sums give the
    /// coarse dW; the coarse time integral adds the running fine-increment
    /// sum: over a block starting at t_k,
    /// `dZ_coarse = sum_i [ dz_i + (W(s_i) - W(t_k)) * h_fine ]`.
    pub fn coarsen(&self, target_level: u32) -> Result<Self> {
        if target_level > self.level {
            return Err(Error::Config(format!(
                "cannot coarsen a level-{} lattice to finer level {}",
                self.level, target_level
            )));
        }
        if target_level == self.level {
            return Ok(self.clone());
        }
        let m = self.m;
        let block = 1usize << (self.level - target_level);
        let nc = 1usize << target_level;
        let hf = self.h();
        let mut dw = vec![0.0; nc * m];
        let mut dz = self.dz.as_ref().map(|_| vec![0.0; nc * m]);
        let mut running = vec![0.0; m];
        for kc in 0..nc {
            running.fill(0.0);
            for b in 0..block {
                let kf = kc * block + b;
                let fine_w = self.dw_at(kf);
                if let (Some(zc), Some(zf)) = (dz.as_mut(), self.dz_at(kf)) {
                    for j in 0..m {
                        zc[kc * m + j] += zf[j] + running[j] * hf;
                    }
                }
                for j in 0..m {
                    dw[kc * m + j] += fine_w[j];
                    running[j] += fine_w[j];
                }
            }
        }
        Ok(BrownianLattice { m, level: target_level, t_final: self.t_final, dw, dz })
    }

    /// Binary dump: magic "BLAT", u32 m, u32 level, f64 t_final, u8 dz flag,
    /// then dW and (optionally) dZ as little-endian f64, step-major.
    pub fn dump<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(self.m as u32)?;
        w.write_u32::<LittleEndian>(self.level)?;
        w.write_f64::<LittleEndian>(self.t_final)?;
        w.write_u8(self.dz.is_some() as u8)?;
        for v in &self.dw {
            w.write_f64::<LittleEndian>(*v)?;
        }
        if let Some(z) = &self.dz {
            for v in z {
                w.write_f64::<LittleEndian>(*v)?;
            }
        }
        Ok(())
    }

    pub fn load<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic, not a lattice dump".into()));
        }
        let m = r.read_u32::<LittleEndian>()? as usize;
        let level = r.read_u32::<LittleEndian>()?;
        let t_final = r.read_f64::<LittleEndian>()?;
        let flag = r.read_u8()?;
        if m == 0 || level > 40 || !(t_final > 0.0 && t_final.is_finite()) || flag > 1 {
            return Err(Error::Format("corrupt lattice header".into()));
        }
        let n = (1usize << level) * m;
        let mut dw = vec![0.0; n];
        for v in dw.iter_mut() {
            *v = r.read_f64::<LittleEndian>()?;
        }
        let dz = if flag == 1 {
            let mut z = vec![0.0; n];
            for v in z.iter_mut() {
                *v = r.read_f64::<LittleEndian>()?;
            }
            Some(z)
        } else {
            None
        };
        Ok(BrownianLattice { m, level, t_final, dw, dz })
    }

    pub fn dump_file<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        self.dump(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::load(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}
