use std::ops::Range;
use std::path::Path;

use num_complex::{Complex32, Complex64};

use crate::error::{Error, Result};
use crate::fsutil::{write_atomic, ByteReader};
use crate::sim::SimConfig;
use crate::tensor::Array;

/// Per-part statistics: `x_std = (x − mean) / std` for the real and the
/// imaginary part independently.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Standardization {
    pub mean_re: f64,
    pub std_re: f64,
    pub mean_im: f64,
    pub std_im: f64,
}

impl Standardization {
    pub fn apply(&self, z: Complex64) -> (f64, f64) {
        ((z.re - self.mean_re) / self.std_re, (z.im - self.mean_im) / self.std_im)
    }

    pub fn invert(&self, re: f64, im: f64) -> Complex64 {
        Complex64::new(re * self.std_re + self.mean_re, im * self.std_im + self.mean_im)
    }
}

/// Complex CSI sequence indexed `[t][l][m]`, with AP geometry.
///
/// The payload is always the raw channel. `standardization`, when set,
/// records the statistics a training run derived from this data.
#[derive(Clone, Debug, PartialEq)]
pub struct CsiDataset {
    pub t_total: usize,
    pub l: usize,
    pub m: usize,
    csi: Vec<Complex32>,
    pub ap_positions: Array<f64>,
    pub sim_config: Option<SimConfig>,
    pub standardization: Option<Standardization>,
}

impl CsiDataset {
    pub fn new(t_total: usize, l: usize, m: usize, csi: Vec<Complex32>, ap_positions: Array<f64>) -> Result<Self> {
        if t_total == 0 || l == 0 || m == 0 {
            return Err(Error::Data(format!("empty dataset shape {t_total}×{l}×{m}")));
        }
        if csi.len() != t_total * l * m {
            return Err(Error::dim("CsiDataset", &[csi.len()], &[t_total, l, m]));
        }
        if ap_positions.shape() != [m, 3] {
            return Err(Error::dim("ap_positions", ap_positions.shape(), &[m, 3]));
        }
        if let Some(i) = csi.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Data(format!("non-finite CSI at flat index {i}")));
        }
        // Positions are stored as f32 on disk; round them now so file
        // round trips are exact.
        let ap_positions = ap_positions.map(|v| v as f32 as f64);
        Ok(Self { t_total, l, m, csi, ap_positions, sim_config: None, standardization: None })
    }

    /// Equality of everything a CSIF file carries (generation metadata excluded).
    pub fn same_content(&self, other: &Self) -> bool {
        self.t_total == other.t_total
            && self.l == other.l
            && self.m == other.m
            && self.csi == other.csi
            && self.ap_positions == other.ap_positions
            && self.standardization == other.standardization
    }

    #[inline]
    pub fn index(&self, t: usize, l: usize, m: usize) -> usize {
        (t * self.l + l) * self.m + m
    }

    #[inline]
    pub fn at(&self, t: usize, l: usize, m: usize) -> Complex64 {
        let z = self.csi[self.index(t, l, m)];
        Complex64::new(z.re as f64, z.im as f64)
    }

    pub fn csi(&self) -> &[Complex32] {
        &self.csi
    }

    /// Time series of one subcarrier/AP pair.
    pub fn series(&self, l: usize, m: usize) -> Vec<Complex64> {
        (0..self.t_total).map(|t| self.at(t, l, m)).collect()
    }

    pub fn snapshot_len(&self) -> usize {
        self.l * self.m
    }

    /// Copy of the snapshots in `range`.
    pub fn slice_time(&self, range: Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.t_total {
            return Err(Error::Data(format!("time range {range:?} outside 0..{}", self.t_total)));
        }
        let n = self.snapshot_len();
        let csi = self.csi[range.start * n..range.end * n].to_vec();
        let mut out = Self::new(range.len(), self.l, self.m, csi, self.ap_positions.clone())?;
        out.sim_config = self.sim_config.clone();
        out.standardization = self.standardization;
        Ok(out)
    }

    /// Entry-wise map (e.g. conjugation in symmetry tests).
    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Result<Self> {
        let csi = self
            .csi
            .iter()
            .map(|z| {
                let w = f(Complex64::new(z.re as f64, z.im as f64));
                Complex32::new(w.re as f32, w.im as f32)
            })
            .collect();
        let mut out = Self::new(self.t_total, self.l, self.m, csi, self.ap_positions.clone())?;
        out.sim_config = self.sim_config.clone();
        Ok(out)
    }
}

const MAGIC: &[u8; 4] = b"CSIF";
const VERSION: u32 = 1;

/// `CSIF` encoding: magic, `u32` version, `u32` T_total, L, M, `f32` AP
/// positions, `f32` (re, im) payload in `[t][l][m]` order, then a flag byte
/// and, when set, four `f64` standardisation values. Little-endian.
pub fn write_csif(ds: &CsiDataset) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(21 + ds.m * 12 + ds.csi.len() * 8 + 33);
    out.extend_from_slice(MAGIC);
    for v in [VERSION as usize, ds.t_total, ds.l, ds.m] {
        let v = u32::try_from(v).map_err(|_| Error::Format(format!("{v} does not fit in u32")))?;
        out.extend_from_slice(&v.to_le_bytes());
    }
    for &p in ds.ap_positions.data() {
        out.extend_from_slice(&(p as f32).to_le_bytes());
    }
    for z in &ds.csi {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    match &ds.standardization {
        Some(s) => {
            out.push(1);
            for v in [s.mean_re, s.std_re, s.mean_im, s.std_im] {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        None => out.push(0),
    }
    Ok(out)
}

pub fn read_csif(bytes: &[u8]) -> Result<CsiDataset> {
    let mut r = ByteReader::new(bytes, "CSIF");
    r.magic(MAGIC)?;
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported CSIF version {version}")));
    }
    let (t_total, l, m) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
    let n = t_total
        .checked_mul(l)
        .and_then(|v| v.checked_mul(m))
        .ok_or_else(|| Error::Format("CSIF dimensions overflow".into()))?;
    if n.saturating_mul(8) > bytes.len() {
        return Err(Error::Format(format!("CSIF header claims {n} samples but file is {} bytes", bytes.len())));
    }
    let pos = (0..m * 3).map(|_| r.f32().map(f64::from)).collect::<Result<Vec<_>>>()?;
    let csi = (0..n).map(|_| Ok(Complex32::new(r.f32()?, r.f32()?))).collect::<Result<Vec<_>>>()?;
    let standardization = match r.u8()? {
        0 => None,
        1 => Some(Standardization { mean_re: r.f64()?, std_re: r.f64()?, mean_im: r.f64()?, std_im: r.f64()? }),
        f => return Err(Error::Format(format!("bad standardization flag {f}"))),
    };
    r.finish()?;
    let positions = Array::from_vec(&[m, 3], pos).map_err(|e| Error::Format(format!("AP positions: {e}")))?;
    let mut ds = CsiDataset::new(t_total, l, m, csi, positions)?;
    ds.standardization = standardization;
    Ok(ds)
}

impl CsiDataset {
    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &write_csif(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_csif(&std::fs::read(path)?)
    }
}
