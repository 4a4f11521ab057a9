//! Exact pair weights of the singular kernel `|x - y|^(-alpha)` for the
//! piecewise-constant ansatz, restricted to pairs with at least one interior
//! cell, plus the analytic tail coupling to the half-lines beyond the collar.
//!
//! All closed forms are written as second differences of the double
//! antiderivative `Φ(t) = t^(2-α) / ((1-α)(2-α))` (or `-ln t` for α = 2),
//! evaluated through `expm1`/`ln_1p` so that far-apart small cells keep full
//! relative precision.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{CellTag, DomainMesh, Interval, MeshId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn as_str(&self) -> &'static str {
        match self {
            Side::Left => "LEFT",
            Side::Right => "RIGHT",
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || alpha <= 1.0 {
        return Err(Error::param(
            "alpha",
            format!("kernel exponent must be finite and > 1, got {alpha}"),
        ));
    }
    Ok(())
}

fn is_log_branch(alpha: f64) -> bool {
    alpha == 2.0
}

/// `(x + a)^β - x^β` for `x >= 0`, `a >= 0`, computed without cancellation.
fn power_increment(x: f64, a: f64, beta: f64) -> f64 {
    if x == 0.0 {
        return a.powf(beta);
    }
    x.powf(beta) * (beta * (a / x).ln_1p()).exp_m1()
}

/// Double integral over `[l, l + a] × [l + a + g, l + a + g + b]` of `|x - y|^(-α)`
/// as a function of the two widths `a`, `b` and the gap `g >= 0`.
fn separated_weight(a: f64, b: f64, gap: f64, alpha: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    if is_log_branch(alpha) {
        // ln[(g+a)(g+b) / (g (g+a+b))]
        return (a * b / (gap * (gap + a + b))).ln_1p();
    }
    let beta = 2.0 - alpha;
    let second_diff = power_increment(gap + b, a, beta) - power_increment(gap, a, beta);
    second_diff / ((1.0 - alpha) * (2.0 - alpha))
}

/// `∬_{I1×I2} |x−y|^(−alpha) dx dy` for intervals with disjoint interiors.
///
/// Intervals sharing an endpoint are accepted while the integral is finite
/// (`alpha < 2`); for `alpha >= 2` touching cells are a domain error.
pub fn pair_weight(i1: Interval, i2: Interval, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if i1.is_empty() || i2.is_empty() {
        return Ok(0.0);
    }
    let (left, right) = if i2.lo >= i1.hi {
        (i1, i2)
    } else if i1.lo >= i2.hi {
        (i2, i1)
    } else {
        return Err(Error::Domain(format!(
            "intervals [{}, {}] and [{}, {}] overlap",
            i1.lo, i1.hi, i2.lo, i2.hi
        )));
    };
    let gap = right.lo - left.hi;
    if gap == 0.0 && alpha >= 2.0 {
        return Err(Error::Domain(format!(
            "touching intervals at {} give a divergent integral for alpha = {alpha}",
            left.hi
        )));
    }
    Ok(separated_weight(left.len(), right.len(), gap, alpha))
}

/// Weight used for two cells sharing an endpoint when `alpha >= 2`.
///
/// Each cell is split at its midpoint. The three half-pairs that do not touch
/// are integrated exactly; the divergent touching half-pair is replaced by the
/// mean of the two half-pairs adjacent to it (one half-cell shift on either
/// side). Finite, positive and symmetric; it is not a consistent quadrature.
pub fn regularized_adjacent_weight(left: Interval, right: Interval, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let (left, right) = if left.hi <= right.lo {
        (left, right)
    } else {
        (right, left)
    };
    if left.hi != right.lo {
        return Err(Error::Domain("cells are not adjacent".into()));
    }
    let (l_far, l_near) = left.midpoint_split();
    let (r_near, r_far) = right.midpoint_split();
    let a = pair_weight(l_far, r_near, alpha)?;
    let b = pair_weight(l_far, r_far, alpha)?;
    let c = pair_weight(l_near, r_far, alpha)?;
    Ok(a + b + c + 0.5 * (a + c))
}

/// `∬_{I×H} |x−y|^(−alpha)` where `H` is the half-line beyond `cut` on `side`.
pub fn tail_weight(interval: Interval, cut: f64, side: Side, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let near = match side {
        Side::Right => cut - interval.hi,
        Side::Left => interval.lo - cut,
    };
    if !(near > 0.0) {
        return Err(Error::Domain(format!(
            "interval [{}, {}] touches or crosses the {} cut at {cut}",
            interval.lo,
            interval.hi,
            side.as_str()
        )));
    }
    if interval.is_empty() {
        return Ok(0.0);
    }
    let len = interval.len();
    if is_log_branch(alpha) {
        return Ok((len / near).ln_1p());
    }
    let beta = 2.0 - alpha;
    Ok(power_increment(near, len, beta) / ((alpha - 1.0) * (2.0 - alpha)))
}

/// Symmetric pair weights over the cells of one mesh.
///
/// `pair` holds the plain cell-pair integrals; `effective` additionally folds
/// each interior cell's tail weight onto the outermost collar cell of the same
/// side (the field beyond the collar is frozen to that cell's value). Energies
/// and gradients use `effective`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelWeights {
    mesh_id: MeshId,
    n_cells: usize,
    pub alpha: f64,
    pair: Vec<f64>,
    effective: Vec<f64>,
    tail_left: Vec<f64>,
    tail_right: Vec<f64>,
    /// True when touching cells were coupled by [`regularized_adjacent_weight`].
    pub regularized_adjacent: bool,
}

impl KernelWeights {
    pub fn mesh_id(&self) -> MeshId {
        self.mesh_id
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn pair(&self, i: usize, j: usize) -> f64 {
        self.pair[i * self.n_cells + j]
    }

    pub fn effective(&self, i: usize, j: usize) -> f64 {
        self.effective[i * self.n_cells + j]
    }

    /// Row `i` of the effective weight matrix.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.effective[i * self.n_cells..(i + 1) * self.n_cells]
    }

    pub fn tail(&self, i: usize, side: Side) -> f64 {
        match side {
            Side::Left => self.tail_left[i],
            Side::Right => self.tail_right[i],
        }
    }

    /// Share of the total effective weight mass carried by the frozen tails.
    pub fn tail_fraction(&self) -> f64 {
        let tails: f64 = self.tail_left.iter().sum::<f64>() + self.tail_right.iter().sum::<f64>();
        let mut total = 0.0;
        for i in 0..self.n_cells {
            total += self.row(i)[i + 1..].iter().sum::<f64>();
        }
        if total > 0.0 {
            tails / total
        } else {
            0.0
        }
    }

    pub fn check_mesh(&self, mesh: &DomainMesh) -> Result<()> {
        if mesh.id() != self.mesh_id || mesh.n_cells() != self.n_cells {
            return Err(Error::Binding("weights were assembled on a different mesh".into()));
        }
        Ok(())
    }

    fn from_parts(
        mesh: &DomainMesh,
        alpha: f64,
        pair: Vec<f64>,
        tail_left: Vec<f64>,
        tail_right: Vec<f64>,
        regularized_adjacent: bool,
    ) -> Self {
        let n = mesh.n_cells();
        let mut effective = pair.clone();
        let (first, last) = mesh.outermost();
        for i in mesh.interior_range() {
            effective[i * n + first] += tail_left[i];
            effective[first * n + i] += tail_left[i];
            effective[i * n + last] += tail_right[i];
            effective[last * n + i] += tail_right[i];
        }
        KernelWeights {
            mesh_id: mesh.id(),
            n_cells: n,
            alpha,
            pair,
            effective,
            tail_left,
            tail_right,
            regularized_adjacent,
        }
    }
}

pub fn kernel_exponent(p: f64, s: f64) -> Result<f64> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::param("p", format!("must lie in (1, inf), got {p}")));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::param("s", format!("must lie in (0, 1), got {s}")));
    }
    Ok(1.0 + p * s)
}

pub fn assemble_weights(mesh: &DomainMesh, p: f64, s: f64) -> Result<KernelWeights> {
    let alpha = kernel_exponent(p, s)?;
    mesh.validate()?;
    let n = mesh.n_cells();
    let regularize = alpha >= 2.0;
    let cells = mesh.cells();

    // Each row is computed independently with a fixed inner order.
    let rows: Vec<Result<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; n];
            for j in i + 1..n {
                if mesh.tag(i) == CellTag::Exterior && mesh.tag(j) == CellTag::Exterior {
                    continue;
                }
                let w = if regularize && cells[i].hi == cells[j].lo {
                    regularized_adjacent_weight(cells[i], cells[j], alpha)?
                } else {
                    pair_weight(cells[i], cells[j], alpha)?
                };
                row[j] = w;
            }
            Ok(row)
        })
        .collect();

    let mut pair = vec![0.0; n * n];
    for (i, row) in rows.into_iter().enumerate() {
        let row = row?;
        for j in i + 1..n {
            pair[i * n + j] = row[j];
            pair[j * n + i] = row[j];
        }
    }

    let lo_cut = mesh.omega_lo - mesh.collar_radius;
    let hi_cut = mesh.omega_hi + mesh.collar_radius;
    let mut tail_left = vec![0.0; n];
    let mut tail_right = vec![0.0; n];
    for i in mesh.interior_range() {
        tail_left[i] = tail_weight(cells[i], lo_cut, Side::Left, alpha)?;
        tail_right[i] = tail_weight(cells[i], hi_cut, Side::Right, alpha)?;
    }
    let w = KernelWeights::from_parts(mesh, alpha, pair, tail_left, tail_right, regularize);
    if w.effective.iter().any(|x| !x.is_finite()) {
        return Err(Error::param("mesh", "non-finite kernel weight"));
    }
    Ok(w)
}

/// Self-describing text form of a mesh and its weights.
///
/// Line 1: `omega_lo=.. omega_hi=.. collar_radius=.. alpha=.. n_cells=..`;
/// then `cell k lo hi TAG`; then `pair i j w` with `i < j` for every nonzero
/// pair weight; then `tail i LEFT|RIGHT w`.
pub fn write_text(mesh: &DomainMesh, w: &KernelWeights) -> Result<String> {
    w.check_mesh(mesh)?;
    let n = mesh.n_cells();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "omega_lo={} omega_hi={} collar_radius={} alpha={} n_cells={}",
        mesh.omega_lo, mesh.omega_hi, mesh.collar_radius, w.alpha, n
    );
    for (k, c) in mesh.cells().iter().enumerate() {
        let _ = writeln!(out, "cell {k} {} {} {}", c.lo, c.hi, mesh.tag(k).as_str());
    }
    for i in 0..n {
        for j in i + 1..n {
            let v = w.pair(i, j);
            if v != 0.0 {
                let _ = writeln!(out, "pair {i} {j} {v}");
            }
        }
    }
    for i in mesh.interior_range() {
        let _ = writeln!(out, "tail {i} LEFT {}", w.tail_left[i]);
        let _ = writeln!(out, "tail {i} RIGHT {}", w.tail_right[i]);
    }
    Ok(out)
}

fn parse_f64(tok: Option<&str>, what: &str, line: usize) -> Result<f64> {
    tok.and_then(|t| t.parse::<f64>().ok())
        .ok_or_else(|| Error::Input(format!("line {line}: bad or missing {what}")))
}

fn parse_usize(tok: Option<&str>, what: &str, line: usize) -> Result<usize> {
    tok.and_then(|t| t.parse::<usize>().ok())
        .ok_or_else(|| Error::Input(format!("line {line}: bad or missing {what}")))
}

/// Reads the format produced by [`write_text`].
pub fn read_text(text: &str) -> Result<(DomainMesh, KernelWeights)> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Input("empty mesh file".into()))?;
    let mut fields = std::collections::HashMap::new();
    for kv in header.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Input(format!("header token `{kv}` is not key=value")))?;
        fields.insert(k, v);
    }
    let get = |k: &str| -> Result<f64> {
        fields
            .get(k)
            .and_then(|v| v.parse::<f64>().ok())
            .ok_or_else(|| Error::Input(format!("header misses `{k}`")))
    };
    let (omega_lo, omega_hi, radius, alpha) = (
        get("omega_lo")?,
        get("omega_hi")?,
        get("collar_radius")?,
        get("alpha")?,
    );
    let n = get("n_cells")? as usize;

    let mut cells = vec![Interval::new(0.0, 0.0); n];
    let mut tags = vec![CellTag::Exterior; n];
    let mut pair = vec![0.0; n * n];
    let mut tail_left = vec![0.0; n];
    let mut tail_right = vec![0.0; n];
    for (lineno, line) in lines {
        let lineno = lineno + 1;
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("cell") => {
                let k = parse_usize(tok.next(), "cell index", lineno)?;
                let lo = parse_f64(tok.next(), "lo", lineno)?;
                let hi = parse_f64(tok.next(), "hi", lineno)?;
                let tag = match tok.next() {
                    Some("INTERIOR") => CellTag::Interior,
                    Some("EXTERIOR") => CellTag::Exterior,
                    _ => return Err(Error::Input(format!("line {lineno}: bad tag"))),
                };
                if k >= n {
                    return Err(Error::Input(format!("line {lineno}: cell index out of range")));
                }
                cells[k] = Interval::new(lo, hi);
                tags[k] = tag;
            }
            Some("pair") => {
                let i = parse_usize(tok.next(), "i", lineno)?;
                let j = parse_usize(tok.next(), "j", lineno)?;
                let v = parse_f64(tok.next(), "w", lineno)?;
                if i >= j || j >= n {
                    return Err(Error::Input(format!("line {lineno}: need i < j < n_cells")));
                }
                pair[i * n + j] = v;
                pair[j * n + i] = v;
            }
            Some("tail") => {
                let i = parse_usize(tok.next(), "i", lineno)?;
                let side = tok.next();
                let v = parse_f64(tok.next(), "w", lineno)?;
                if i >= n {
                    return Err(Error::Input(format!("line {lineno}: tail index out of range")));
                }
                match side {
                    Some("LEFT") => tail_left[i] = v,
                    Some("RIGHT") => tail_right[i] = v,
                    _ => return Err(Error::Input(format!("line {lineno}: bad tail side"))),
                }
            }
            None => {}
            Some(other) => {
                return Err(Error::Input(format!("line {lineno}: unknown record `{other}`")))
            }
        }
    }
    let mesh = DomainMesh::from_cells(omega_lo, omega_hi, radius, cells, tags)?;
    let w = KernelWeights::from_parts(&mesh, alpha, pair, tail_left, tail_right, alpha >= 2.0);
    Ok((mesh, w))
}
