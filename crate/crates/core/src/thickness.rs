//! `(ρ, L)`-thickness of observation masks on the periodic grid.
//!
//! A set `ω` is `(ρ, L)`-thick when every box `⨉(0, Lᵢ) + x` meets it in
//! measure at least `ρ ∏Lᵢ`. On the torus every cell is an admissible anchor
//! and windows are snapped to whole cells, so `ρ` is an exact ratio of cell
//! counts.

use std::fmt::Write as _;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, ObsError, Result};
use crate::scalar::Real;
use crate::spectral::{Field, GridSpec};

/// Boolean observation set, one bit per lattice cell in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct Mask<T> {
    grid: GridSpec<T>,
    bits: Vec<bool>,
}

impl<T: Real> Mask<T> {
    pub fn new(grid: GridSpec<T>, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != grid.len() {
            return Err(ObsError::GridMismatch(format!(
                "mask has {} bits, grid has {} cells",
                bits.len(),
                grid.len()
            )));
        }
        Ok(Mask { grid, bits })
    }

    pub fn full(grid: &GridSpec<T>) -> Self {
        Mask {
            grid: grid.clone(),
            bits: vec![true; grid.len()],
        }
    }

    pub fn empty(grid: &GridSpec<T>) -> Self {
        Mask {
            grid: grid.clone(),
            bits: vec![false; grid.len()],
        }
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// `(number of observed cells)·dx^d`.
    pub fn measure(&self) -> T {
        T::from_usize_lossy(self.count()) * self.grid.cell_volume()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn is_full(&self) -> bool {
        self.bits.iter().all(|&b| b)
    }

    /// Cyclic shift: the bit at multi-index `i` moves to `i + shift`.
    pub fn shifted(&self, shift: &[usize]) -> Result<Self> {
        let d = self.grid.dim();
        if shift.len() != d {
            return Err(invalid("shift", "one offset per axis required"));
        }
        let shape = self.grid.shape();
        let mut bits = vec![false; self.bits.len()];
        for (flat, &b) in self.bits.iter().enumerate() {
            let idx = self.grid.unravel(flat);
            let mut dst = [0usize; 3];
            for a in 0..d {
                dst[a] = (idx[a] + shift[a]) % shape[a];
            }
            bits[self.grid.ravel(&dst[..d])] = b;
        }
        Ok(Mask {
            grid: self.grid.clone(),
            bits,
        })
    }

    /// 0/1 field, used for the binary dump of 3-D masks.
    pub fn to_field(&self) -> Field<T> {
        let values = self
            .bits
            .iter()
            .map(|&b| Complex::new(if b { T::one() } else { T::zero() }, T::zero()))
            .collect();
        Field::new(self.grid.clone(), values).expect("0/1 values are finite")
    }

    /// Inverse of [`Mask::to_field`]; every value must be exactly 0 or 1.
    pub fn from_field(field: &Field<T>) -> Result<Self> {
        let mut bits = Vec::with_capacity(field.values().len());
        for (i, v) in field.values().iter().enumerate() {
            if v.im != T::zero() || !(v.re == T::zero() || v.re == T::one()) {
                return Err(ObsError::Format(format!("mask value {v} at cell {i} is not 0 or 1")));
            }
            bits.push(v.re == T::one());
        }
        Mask::new(field.grid().clone(), bits)
    }
}

/// Generator families for masks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum MaskFamily<T> {
    /// Slabs along axis 0: a cell is observed when `j mod period < round(duty·period)`.
    PeriodicStripes { duty: T, period: usize },
    /// Independent Bernoulli cells.
    Random { density: T, seed: u64 },
    /// Everything except the periodic ball `|x − center| ≤ radius`.
    Holed { radius: T, center: Vec<T> },
}

pub fn gen_mask<T: Real>(grid: &GridSpec<T>, family: &MaskFamily<T>) -> Result<Mask<T>> {
    match family {
        MaskFamily::PeriodicStripes { duty, period } => {
            let n0 = grid.shape()[0];
            if *period == 0 || *period > n0 {
                return Err(invalid("period", format!("must lie in 1..={n0} cells, got {period}")));
            }
            if !(*duty >= T::zero() && *duty <= T::one()) {
                return Err(invalid("duty", format!("must lie in [0, 1], got {duty}")));
            }
            let on = (*duty * T::from_usize_lossy(*period)).round().to_usize().unwrap_or(0);
            let bits = (0..grid.len())
                .map(|flat| grid.unravel(flat)[0] % period < on)
                .collect();
            Mask::new(grid.clone(), bits)
        }
        MaskFamily::Random { density, seed } => {
            if !(*density >= T::zero() && *density <= T::one()) {
                return Err(invalid("density", format!("must lie in [0, 1], got {density}")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let p = density.as_f64();
            let bits = (0..grid.len()).map(|_| rng.random::<f64>() < p).collect();
            Mask::new(grid.clone(), bits)
        }
        MaskFamily::Holed { radius, center } => {
            let d = grid.dim();
            if center.len() != d {
                return Err(invalid("center", "one coordinate per axis required"));
            }
            if !(*radius >= T::zero()) {
                return Err(invalid("radius", format!("must be >= 0, got {radius}")));
            }
            let half = T::lit(0.5);
            for (a, &l) in grid.lengths().iter().enumerate() {
                if *radius > l * half {
                    return Err(invalid(
                        "radius",
                        format!("hole radius {radius} exceeds half the period {l} of axis {a}"),
                    ));
                }
            }
            let r2 = *radius * *radius;
            let bits = (0..grid.len())
                .map(|flat| {
                    let x = grid.point(flat);
                    let dist2 = (0..d).fold(T::zero(), |acc, a| {
                        let l = grid.lengths()[a];
                        let mut dx = x[a] - center[a];
                        dx = dx - l * (dx / l).round();
                        acc + dx * dx
                    });
                    dist2 > r2
                })
                .collect();
            Mask::new(grid.clone(), bits)
        }
    }
}

/// Minimum window density of a mask.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct ThicknessReport<T> {
    /// Requested window lengths.
    #[serde(rename = "L")]
    pub lengths: Vec<T>,
    /// Window size in cells after snapping.
    pub window_cells: Vec<usize>,
    /// Observed cells in the sparsest window.
    pub min_count: u64,
    /// Cells per window.
    pub window_total: u64,
    /// `min_count / window_total`.
    pub rho: T,
    /// Lower corner (multi-index) of the first sparsest window in row-major order.
    pub anchor: Vec<usize>,
    pub is_thick: bool,
}

impl<T: Real> ThicknessReport<T> {
    pub const CSV_HEADER: &'static str = "rho,min_count,window_total,window_cells,anchor,L";

    fn new(lengths: &[T], window: &[usize], min_count: u64, anchor: Vec<usize>) -> Self {
        let total: u64 = window.iter().map(|&w| w as u64).product();
        ThicknessReport {
            lengths: lengths.to_vec(),
            window_cells: window.to_vec(),
            min_count,
            window_total: total,
            rho: T::lit(min_count as f64 / total as f64),
            anchor,
            is_thick: min_count > 0,
        }
    }

    /// One CSV row matching [`Self::CSV_HEADER`]; list columns are `;`-joined.
    pub fn csv_row(&self) -> String {
        let join = |v: Vec<String>| v.join(";");
        format!(
            "{:.16e},{},{},{},{},{}",
            self.rho.as_f64(),
            self.min_count,
            self.window_total,
            join(self.window_cells.iter().map(|w| w.to_string()).collect()),
            join(self.anchor.iter().map(|a| a.to_string()).collect()),
            join(self.lengths.iter().map(|l| format!("{:.16e}", l.as_f64())).collect()),
        )
    }
}

/// Snaps `L` to whole cells, warning when it is not a cell multiple.
fn window_cells<T: Real>(grid: &GridSpec<T>, lengths: &[T]) -> Result<Vec<usize>> {
    if lengths.len() != grid.dim() {
        return Err(invalid("L", "one window length per axis required"));
    }
    let mut out = Vec::with_capacity(lengths.len());
    for (a, &l) in lengths.iter().enumerate() {
        if !(l > T::zero()) || !l.is_finite() {
            return Err(invalid("L", format!("window lengths must be finite and > 0, got {l}")));
        }
        let dx = grid.spacing(a);
        let cells_f = (l / dx).round();
        if ((l / dx) - cells_f).abs() > T::lit(1e-9) {
            log::warn!("window length {l} on axis {a} is not a multiple of dx = {dx}; snapped to {cells_f} cells");
        }
        let cells = cells_f.to_usize().unwrap_or(0);
        if cells == 0 {
            return Err(invalid("L", format!("window on axis {a} is shorter than one cell")));
        }
        let available = grid.shape()[a];
        if cells > available {
            return Err(ObsError::WindowTooLarge {
                axis: a,
                cells,
                available,
            });
        }
        out.push(cells);
    }
    Ok(out)
}

/// Row-major strides of a shape.
fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; shape.len()];
    for a in (0..shape.len().saturating_sub(1)).rev() {
        s[a] = s[a + 1] * shape[a + 1];
    }
    s
}

/// Exact `ρ` over all periodic cell anchors.
///
/// Window sums come from a per-axis cyclic prefix sum (a factorized
/// summed-area table), `O(d·N^d)` in total.
pub fn thickness_rho<T: Real>(mask: &Mask<T>, lengths: &[T]) -> Result<ThicknessReport<T>> {
    let grid = mask.grid();
    let window = window_cells(grid, lengths)?;
    let shape = grid.shape();
    let stride = strides(shape);
    let mut sums: Vec<u64> = mask.bits().iter().map(|&b| b as u64).collect();
    let mut line = Vec::new();
    let mut prefix = Vec::new();
    for a in 0..grid.dim() {
        let n = shape[a];
        let w = window[a];
        let st = stride[a];
        let lines = sums.len() / n;
        for l in 0..lines {
            // base offset of line `l` along axis `a`
            let outer = l / st;
            let inner = l % st;
            let base = outer * n * st + inner;
            line.clear();
            line.extend((0..n).map(|i| sums[base + i * st]));
            prefix.clear();
            prefix.push(0u64);
            let mut acc = 0u64;
            for k in 0..n + w {
                acc += line[k % n];
                prefix.push(acc);
            }
            for i in 0..n {
                sums[base + i * st] = prefix[i + w] - prefix[i];
            }
        }
    }
    let (best, count) = sums
        .iter()
        .enumerate()
        .fold((0usize, u64::MAX), |(bi, bc), (i, &c)| if c < bc { (i, c) } else { (bi, bc) });
    let anchor = grid.unravel(best)[..grid.dim()].to_vec();
    Ok(ThicknessReport::new(lengths, &window, count, anchor))
}

/// Direct count over every anchor and every window cell; the reference for
/// [`thickness_rho`].
pub fn thickness_rho_bruteforce<T: Real>(mask: &Mask<T>, lengths: &[T]) -> Result<ThicknessReport<T>> {
    let grid = mask.grid();
    let window = window_cells(grid, lengths)?;
    let d = grid.dim();
    let shape = grid.shape();
    let offsets: usize = window.iter().product();
    let mut best = (0usize, u64::MAX);
    for anchor in 0..grid.len() {
        let a_idx = grid.unravel(anchor);
        let mut count = 0u64;
        for off in 0..offsets {
            let mut rem = off;
            let mut idx = [0usize; 3];
            for a in (0..d).rev() {
                idx[a] = (a_idx[a] + rem % window[a]) % shape[a];
                rem /= window[a];
            }
            if mask.bits()[grid.ravel(&idx[..d])] {
                count += 1;
            }
        }
        if count < best.1 {
            best = (anchor, count);
        }
    }
    let anchor = grid.unravel(best.0)[..d].to_vec();
    Ok(ThicknessReport::new(lengths, &window, best.1, anchor))
}

/// Plain PBM (`P1`) text for `d ≤ 2`; `1` marks an observed cell. Rows run
/// over axis 0. The periods are kept in a comment line.
pub fn mask_to_pbm<T: Real>(mask: &Mask<T>) -> Result<String> {
    let grid = mask.grid();
    let (rows, cols) = match grid.shape() {
        [n] => (1, *n),
        [r, c] => (*r, *c),
        _ => return Err(invalid("d", "PBM output supports d <= 2; use the binary field format")),
    };
    let mut out = String::from("P1\n# box");
    for l in grid.lengths() {
        let _ = write!(out, " {:.17e}", l.as_f64());
    }
    let _ = write!(out, "\n{cols} {rows}\n");
    for r in 0..rows {
        let row: Vec<&str> = mask.bits()[r * cols..(r + 1) * cols]
            .iter()
            .map(|&b| if b { "1" } else { "0" })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    Ok(out)
}

/// Parses the output of [`mask_to_pbm`]. The periods come from the `# box`
/// comment, or from `lengths` when the text has none.
pub fn mask_from_pbm<T: Real>(text: &str, lengths: Option<Vec<T>>) -> Result<Mask<T>> {
    let mut box_from_text = None;
    let mut tokens = Vec::new();
    for line in text.lines() {
        let content = match line.find('#') {
            Some(pos) => {
                let comment = line[pos + 1..].trim();
                if let Some(rest) = comment.strip_prefix("box") {
                    let parsed: std::result::Result<Vec<f64>, _> =
                        rest.split_whitespace().map(str::parse::<f64>).collect();
                    box_from_text = Some(parsed.map_err(|e| ObsError::Format(format!("bad box comment: {e}")))?);
                }
                &line[..pos]
            }
            None => line,
        };
        tokens.extend(content.split_whitespace().map(str::to_owned));
    }
    let mut it = tokens.into_iter();
    if it.next().as_deref() != Some("P1") {
        return Err(ObsError::Format("missing P1 magic".into()));
    }
    let mut dim_token = |name: &str| -> Result<usize> {
        it.next()
            .ok_or_else(|| ObsError::Format(format!("missing {name}")))?
            .parse::<usize>()
            .map_err(|e| ObsError::Format(format!("bad {name}: {e}")))
    };
    let cols = dim_token("width")?;
    let rows = dim_token("height")?;
    // plain PBM also allows pixels without separators
    let pixels: String = it.collect::<Vec<_>>().concat();
    let mut bits = Vec::with_capacity(rows * cols);
    for ch in pixels.chars() {
        match ch {
            '0' => bits.push(false),
            '1' => bits.push(true),
            _ => return Err(ObsError::Format(format!("unexpected pixel character {ch:?}"))),
        }
    }
    if bits.len() != rows * cols {
        return Err(ObsError::Format(format!("expected {} pixels, found {}", rows * cols, bits.len())));
    }
    let shape = if rows == 1 { vec![cols] } else { vec![rows, cols] };
    let lengths = match (box_from_text, lengths) {
        (Some(b), _) => b.into_iter().map(T::lit).collect(),
        (None, Some(l)) => l,
        (None, None) => return Err(ObsError::Format("no box lengths in file or arguments".into())),
    };
    Mask::new(GridSpec::new(shape, lengths)?, bits)
}
