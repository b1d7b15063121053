//! Open-boundary matrix product states with SVD truncation.
//!
//! Site tensors have shape `(left, 2, right)` and are stored row-major, so
//! the same buffer reads as a `(2*left) x right` or a `left x (2*right)`
//! matrix. The state is kept in mixed-canonical form: sites left of
//! `center` are left-isometries, sites right of it are right-isometries.
//!
//! Two-qubit gates act on neighbouring sites. A gate whose sites are not
//! adjacent (the ring's closing bond) is routed by swapping the far site
//! next to the near one, applying the gate, and swapping back; every swap
//! is an ordinary truncated two-site update and is charged to the ledger.

use std::f64::consts::PI;
use std::io::{self, Read, Write};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::circuit::{Circuit, LocalState};
use crate::pauli::{Pauli, PauliString};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

const SNAPSHOT_MAGIC: &[u8; 4] = b"MPS1";

#[derive(Debug, Error)]
pub enum MpsError {
    #[error("empty product-state specification")]
    Empty,
    #[error("gate weight {0} not supported (at most 2)")]
    Weight(usize),
    #[error("qubit count mismatch: state has {state}, operand has {operand}")]
    QubitMismatch { state: usize, operand: usize },
    #[error("SVD did not converge")]
    Svd,
    #[error("truncation policy needs chi_cut >= 1")]
    Policy,
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Bond truncation applied at every two-site update.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct TruncationPolicy {
    pub chi_cut: usize,
    /// Singular values below `rel_floor * s_max` are treated as zero.
    pub rel_floor: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy { chi_cut: 16, rel_floor: 1e-12 }
    }
}

impl TruncationPolicy {
    pub fn with_chi(chi_cut: usize) -> Self {
        TruncationPolicy { chi_cut, ..Default::default() }
    }

    /// Large enough never to truncate an `n`-site state.
    pub fn exact(n: usize) -> Self {
        TruncationPolicy::with_chi(1usize << (n / 2).min(20))
    }
}

/// Cost counters for one circuit.
///
/// `gate_count` counts logical gates; `two_site_updates` counts SVD
/// contractions including routing swaps. `sum_chi_cubed` adds `chi_m^3`
/// per update where `chi_m` is the largest bond touched by that update.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CostLedger {
    pub gate_count: u64,
    pub two_site_updates: u64,
    pub sum_chi_cubed: u64,
    pub chi_max: usize,
    pub wall: Duration,
}

impl CostLedger {
    fn charge(&mut self, chi: usize) {
        self.two_site_updates += 1;
        self.sum_chi_cubed += (chi as u64).pow(3);
        self.chi_max = self.chi_max.max(chi);
    }

    /// `sum chi_m^3 <= updates * chi_max^3`.
    pub fn within_bound(&self) -> bool {
        self.sum_chi_cubed <= self.two_site_updates * (self.chi_max as u64).pow(3)
    }

    pub fn absorb(&mut self, other: &CostLedger) {
        self.gate_count += other.gate_count;
        self.two_site_updates += other.two_site_updates;
        self.sum_chi_cubed += other.sum_chi_cubed;
        self.chi_max = self.chi_max.max(other.chi_max);
        self.wall += other.wall;
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Site {
    left: usize,
    right: usize,
    data: Vec<C64>,
}

impl Site {
    fn as_matrix(&self, rows: usize, cols: usize) -> DMatrix<C64> {
        DMatrix::from_row_slice(rows, cols, &self.data)
    }

    fn left_grouped(&self) -> DMatrix<C64> {
        self.as_matrix(2 * self.left, self.right)
    }

    fn right_grouped(&self) -> DMatrix<C64> {
        self.as_matrix(self.left, 2 * self.right)
    }

    fn from_matrix(left: usize, right: usize, m: &DMatrix<C64>) -> Self {
        Site {
            left,
            right,
            data: row_major(m),
        }
    }

    /// `A[l, s, r] <- sum_t u[s][t] A[l, t, r]`.
    fn apply_local(&mut self, u: &[C64; 4]) {
        let r = self.right;
        for l in 0..self.left {
            let base = l * 2 * r;
            for x in 0..r {
                let a0 = self.data[base + x];
                let a1 = self.data[base + r + x];
                self.data[base + x] = u[0] * a0 + u[1] * a1;
                self.data[base + r + x] = u[2] * a0 + u[3] * a1;
            }
        }
    }
}

fn row_major(m: &DMatrix<C64>) -> Vec<C64> {
    let (rows, cols) = m.shape();
    let mut v = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            v.push(m[(i, j)]);
        }
    }
    v
}

fn scale(u: [C64; 4], c: C64) -> [C64; 4] {
    u.map(|x| x * c)
}

/// Single-qubit `exp(-i angle/2 P)`.
fn rotation_1q(p: Pauli, angle: f64) -> [C64; 4] {
    let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    let m = p.matrix();
    [0, 1, 2, 3].map(|i| {
        let id = if i == 0 || i == 3 { ONE } else { ZERO };
        id * c + m[i] * C64::new(0.0, -s)
    })
}

/// Two-qubit `exp(-i angle/2 P (x) Q)` in the basis `s_left * 2 + s_right`.
fn rotation_2q(p: Pauli, q: Pauli, angle: f64) -> [[C64; 4]; 4] {
    let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    let (mp, mq) = (p.matrix(), q.matrix());
    let mut g = [[ZERO; 4]; 4];
    for (row, gr) in g.iter_mut().enumerate() {
        for (col, x) in gr.iter_mut().enumerate() {
            let (a, b) = (row >> 1, row & 1);
            let (ap, bp) = (col >> 1, col & 1);
            let kron = mp[a * 2 + ap] * mq[b * 2 + bp];
            let id = if row == col { ONE } else { ZERO };
            *x = id * c + kron * C64::new(0.0, -s);
        }
    }
    g
}

const SWAP: [[C64; 4]; 4] = [
    [ONE, ZERO, ZERO, ZERO],
    [ZERO, ZERO, ONE, ZERO],
    [ZERO, ONE, ZERO, ZERO],
    [ZERO, ZERO, ZERO, ONE],
];

#[derive(Clone, Debug, PartialEq)]
pub struct MpsState {
    sites: Vec<Site>,
    center: usize,
    discarded: f64,
}

impl MpsState {
    pub fn product(spec: &[LocalState]) -> Result<Self, MpsError> {
        if spec.is_empty() {
            return Err(MpsError::Empty);
        }
        let sites = spec
            .iter()
            .map(|s| Site {
                left: 1,
                right: 1,
                data: s.amplitudes().to_vec(),
            })
            .collect();
        Ok(MpsState {
            sites,
            center: 0,
            discarded: 0.0,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn center(&self) -> usize {
        self.center
    }

    /// Internal bond dimensions, `n - 1` of them.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.sites.len() - 1].iter().map(|s| s.right).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.sites.iter().map(|s| s.right).max().unwrap_or(1)
    }

    /// Cumulative squared Schmidt weight removed by the bond cap.
    pub fn discarded_weight(&self) -> f64 {
        self.discarded
    }

    fn check(&self, n: usize) -> Result<(), MpsError> {
        if n != self.sites.len() {
            Err(MpsError::QubitMismatch {
                state: self.sites.len(),
                operand: n,
            })
        } else {
            Ok(())
        }
    }

    fn move_right(&mut self) {
        let c = self.center;
        let (l, r) = (self.sites[c].left, self.sites[c].right);
        let qr = self.sites[c].left_grouped().qr();
        let (q, rr) = (qr.q(), qr.r());
        let k = q.ncols();
        self.sites[c] = Site::from_matrix(l, k, &q);
        let next = &self.sites[c + 1];
        let m = rr * next.right_grouped();
        debug_assert_eq!(m.nrows(), k);
        let nr = next.right;
        self.sites[c + 1] = Site::from_matrix(k, nr, &m);
        let _ = r;
        self.center = c + 1;
    }

    fn move_left(&mut self) {
        let c = self.center;
        let r = self.sites[c].right;
        let qr = self.sites[c].right_grouped().adjoint().qr();
        let (q, rr) = (qr.q(), qr.r());
        let k = q.ncols();
        self.sites[c] = Site::from_matrix(k, r, &q.adjoint());
        let prev = &self.sites[c - 1];
        let m = prev.left_grouped() * rr.adjoint();
        let pl = prev.left;
        self.sites[c - 1] = Site::from_matrix(pl, k, &m);
        self.center = c - 1;
    }

    /// Moves the orthogonality center to `site`.
    pub fn canonicalize_to(&mut self, site: usize) {
        while self.center < site {
            self.move_right();
        }
        while self.center > site {
            self.move_left();
        }
    }

    fn apply_local(&mut self, site: usize, u: &[C64; 4]) {
        self.sites[site].apply_local(u);
    }

    /// Applies a 4x4 gate on sites `(i, i+1)`, truncates, and leaves the
    /// center on `i + 1` when `absorb_right`, otherwise on `i`.
    fn two_site(&mut self, i: usize, gate: &[[C64; 4]; 4], policy: &TruncationPolicy, ledger: &mut CostLedger, absorb_right: bool) -> Result<(), MpsError> {
        if self.center < i {
            self.canonicalize_to(i);
        } else if self.center > i + 1 {
            self.canonicalize_to(i + 1);
        }
        let (dl, dr) = (self.sites[i].left, self.sites[i + 1].right);
        let mut theta = self.sites[i].left_grouped() * self.sites[i + 1].right_grouped();
        // theta rows: l*2 + s1, cols: s2*dr + r
        for l in 0..dl {
            for r in 0..dr {
                let v = [theta[(2 * l, r)], theta[(2 * l, dr + r)], theta[(2 * l + 1, r)], theta[(2 * l + 1, dr + r)]];
                let mut w = [ZERO; 4];
                for (o, row) in w.iter_mut().zip(gate) {
                    *o = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
                }
                theta[(2 * l, r)] = w[0];
                theta[(2 * l, dr + r)] = w[1];
                theta[(2 * l + 1, r)] = w[2];
                theta[(2 * l + 1, dr + r)] = w[3];
            }
        }
        // nalgebra's complex SVD is unreliable on rank-deficient input
        let svd = faer::Mat::<C64>::from_fn(2 * dl, 2 * dr, |i, j| theta[(i, j)])
            .thin_svd()
            .map_err(|_| MpsError::Svd)?;
        let (u, v) = (svd.U(), svd.V());
        let s: Vec<f64> = svd.S().column_vector().iter().map(|x| x.re).collect();
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
        let s_max = s[order[0]];
        let total: f64 = s.iter().map(|x| x * x).sum();
        let above: Vec<usize> = order.iter().copied().take_while(|&j| s[j] > policy.rel_floor * s_max).collect();
        let keep = &above[..above.len().min(policy.chi_cut).max(1)];
        let kept: f64 = keep.iter().map(|&j| s[j] * s[j]).sum();
        let over: f64 = above[keep.len()..].iter().map(|&j| s[j] * s[j]).sum();
        if over > 0.0 && total > 0.0 {
            self.discarded += over / total;
        }
        let norm = kept.sqrt();
        let k = keep.len();
        let mut left = DMatrix::<C64>::zeros(2 * dl, k);
        let mut right = DMatrix::<C64>::zeros(k, 2 * dr);
        for (col, &j) in keep.iter().enumerate() {
            let sv = s[j] / norm;
            let (lf, rf) = if absorb_right { (1.0, sv) } else { (sv, 1.0) };
            for row in 0..2 * dl {
                left[(row, col)] = u[(row, j)] * lf;
            }
            for c in 0..2 * dr {
                right[(col, c)] = v[(c, j)].conj() * rf;
            }
        }
        self.sites[i] = Site::from_matrix(dl, k, &left);
        self.sites[i + 1] = Site::from_matrix(k, dr, &right);
        self.center = if absorb_right { i + 1 } else { i };
        ledger.charge(dl.max(k).max(dr));
        Ok(())
    }

    /// Applies `exp(-i angle/2 P)` for a Pauli string of weight at most two.
    pub fn apply_pauli_rotation(&mut self, pauli: &PauliString, angle: f64, policy: &TruncationPolicy, ledger: &mut CostLedger) -> Result<(), MpsError> {
        self.check(pauli.n_qubits())?;
        if pauli.weight() > 2 {
            return Err(MpsError::Weight(pauli.weight()));
        }
        if policy.chi_cut == 0 {
            return Err(MpsError::Policy);
        }
        if angle == 0.0 {
            return Ok(());
        }
        ledger.gate_count += 1;
        match pauli.ops() {
            [] => {}
            &[(site, p)] => self.apply_local(site, &rotation_1q(p, angle)),
            &[(a, pa), (b, pb)] => {
                if angle.abs() == PI {
                    // exp(-/+ i pi/2 P Q) = -/+ i P Q needs no contraction
                    let phase = C64::new(0.0, -angle.signum());
                    self.apply_local(a, &scale(pa.matrix(), phase));
                    self.apply_local(b, &pb.matrix());
                } else {
                    self.apply_routed(a, b, &[rotation_2q(pa, pb, angle)], policy, ledger)?;
                }
            }
            _ => unreachable!(),
        }
        Ok(())
    }

    /// Applies gates on sites `(a, b)`, `a < b`, swapping `b` next to `a`
    /// first when they are not neighbours.
    fn apply_routed(&mut self, a: usize, b: usize, gates: &[[[C64; 4]; 4]], policy: &TruncationPolicy, ledger: &mut CostLedger) -> Result<(), MpsError> {
        for p in (a + 1..b).rev() {
            self.two_site(p, &SWAP, policy, ledger, false)?;
        }
        for g in gates {
            self.two_site(a, g, policy, ledger, true)?;
        }
        for p in a + 1..b {
            self.two_site(p, &SWAP, policy, ledger, true)?;
        }
        Ok(())
    }

    /// Runs every rotation of `circuit` in order. Consecutive gates on the
    /// same non-adjacent pair share one routing.
    pub fn run_circuit(&mut self, circuit: &dyn Circuit, policy: &TruncationPolicy, ledger: &mut CostLedger) -> Result<(), MpsError> {
        self.check(circuit.n_qubits())?;
        if policy.chi_cut == 0 {
            return Err(MpsError::Policy);
        }
        let start = Instant::now();
        let mut pending: Option<(usize, usize)> = None;
        let mut batch: Vec<[[C64; 4]; 4]> = Vec::new();
        for rot in circuit.rotations() {
            let routed = match rot.pauli.ops() {
                &[(a, pa), (b, pb)] if b > a + 1 && rot.angle != 0.0 && rot.angle.abs() != PI => Some((a, b, pa, pb)),
                _ => None,
            };
            match routed {
                Some((a, b, pa, pb)) => {
                    if pending.is_some_and(|ab| ab != (a, b)) {
                        let (pa_, pb_) = pending.take().unwrap();
                        self.apply_routed(pa_, pb_, &batch, policy, ledger)?;
                        batch.clear();
                    }
                    pending = Some((a, b));
                    batch.push(rotation_2q(pa, pb, rot.angle));
                    ledger.gate_count += 1;
                }
                None => {
                    if let Some((a, b)) = pending.take() {
                        self.apply_routed(a, b, &batch, policy, ledger)?;
                        batch.clear();
                    }
                    self.apply_pauli_rotation(rot.pauli, rot.angle, policy, ledger)?;
                }
            }
        }
        if let Some((a, b)) = pending {
            self.apply_routed(a, b, &batch, policy, ledger)?;
        }
        ledger.wall += start.elapsed();
        Ok(())
    }

    /// `E'[r, r'] = sum conj(A[l, s, r]) E[l, l'] O[s, s'] A[l', s', r']`.
    fn transfer(env: &DMatrix<C64>, site: &Site, op: Pauli) -> DMatrix<C64> {
        let mut oa = site.clone();
        if op != Pauli::I {
            oa.apply_local(&op.matrix());
        }
        let t = env * oa.right_grouped();
        let t = DMatrix::from_row_slice(2 * site.left, site.right, &row_major(&t));
        site.left_grouped().adjoint() * t
    }

    /// `<psi| P |psi>` (real part).
    pub fn expectation(&self, pauli: &PauliString) -> Result<f64, MpsError> {
        self.check(pauli.n_qubits())?;
        let first = pauli.support().next().unwrap_or(self.center).min(self.center);
        let last = pauli.support().last().unwrap_or(self.center).max(self.center);
        let mut env = DMatrix::<C64>::identity(self.sites[first].left, self.sites[first].left);
        for k in first..=last {
            env = Self::transfer(&env, &self.sites[k], pauli.op_at(k));
        }
        Ok(env.trace().re)
    }

    /// Full contraction of `<psi|psi>`, independent of the canonical form.
    pub fn norm_sqr(&self) -> f64 {
        let mut env = DMatrix::<C64>::identity(1, 1);
        for s in &self.sites {
            env = Self::transfer(&env, s, Pauli::I);
        }
        env.trace().re
    }

    /// Dense amplitudes with site `k` as bit `k`.
    pub fn to_amplitudes(&self) -> Vec<C64> {
        let mut v: Vec<Vec<C64>> = vec![vec![ONE]];
        for (k, site) in self.sites.iter().enumerate() {
            let mut next = vec![vec![ZERO; site.right]; v.len() * 2];
            for (prefix, row) in v.iter().enumerate() {
                for s in 0..2 {
                    let out = &mut next[prefix | (s << k)];
                    for (l, &x) in row.iter().enumerate() {
                        if x == ZERO {
                            continue;
                        }
                        let base = (l * 2 + s) * site.right;
                        for (r, o) in out.iter_mut().enumerate() {
                            *o += x * site.data[base + r];
                        }
                    }
                }
            }
            v = next;
        }
        v.into_iter().map(|row| row[0]).collect()
    }

    /// Binary snapshot: magic, site count, center, discarded weight, the
    /// `(left, right)` dimensions of every site, then the tensors as
    /// little-endian `f64` `(re, im)` pairs.
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<(), MpsError> {
        w.write_all(SNAPSHOT_MAGIC)?;
        w.write_all(&(self.sites.len() as u64).to_le_bytes())?;
        w.write_all(&(self.center as u64).to_le_bytes())?;
        w.write_all(&self.discarded.to_le_bytes())?;
        for s in &self.sites {
            w.write_all(&(s.left as u64).to_le_bytes())?;
            w.write_all(&(s.right as u64).to_le_bytes())?;
        }
        for s in &self.sites {
            for x in &s.data {
                w.write_all(&x.re.to_le_bytes())?;
                w.write_all(&x.im.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_snapshot<R: Read>(mut r: R) -> Result<Self, MpsError> {
        let bad = |m: &str| MpsError::Snapshot(m.to_string());
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(bad("bad magic"));
        }
        let mut word = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8], MpsError> {
            r.read_exact(&mut word)?;
            Ok(word)
        };
        let n = u64::from_le_bytes(next(&mut r)?) as usize;
        let center = u64::from_le_bytes(next(&mut r)?) as usize;
        let discarded = f64::from_le_bytes(next(&mut r)?);
        if n == 0 || center >= n {
            return Err(bad("bad header"));
        }
        let mut dims = Vec::with_capacity(n);
        for _ in 0..n {
            let l = u64::from_le_bytes(next(&mut r)?) as usize;
            let rr = u64::from_le_bytes(next(&mut r)?) as usize;
            dims.push((l, rr));
        }
        if dims[0].0 != 1 || dims[n - 1].1 != 1 || dims.windows(2).any(|w| w[0].1 != w[1].0) {
            return Err(bad("inconsistent bond dimensions"));
        }
        let mut sites = Vec::with_capacity(n);
        for (left, right) in dims {
            let mut data = Vec::with_capacity(2 * left * right);
            for _ in 0..2 * left * right {
                let re = f64::from_le_bytes(next(&mut r)?);
                let im = f64::from_le_bytes(next(&mut r)?);
                data.push(C64::new(re, im));
            }
            sites.push(Site { left, right, data });
        }
        Ok(MpsState { sites, center, discarded })
    }
}
