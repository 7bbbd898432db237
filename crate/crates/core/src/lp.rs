//! Dense revised simplex for `min c.x  s.t.  A x = b,  x >= 0`.
//!
//! The constraint matrix is shared across many solves that differ only in
//! `b` and `c` (one Jensen polytope per grid node), so the solver keeps its
//! basis between calls. A warm basis that stays primal feasible continues
//! with primal simplex; one that stays dual feasible (same objective, new
//! right-hand side) continues with dual simplex. Otherwise a crash basis or
//! a cold two-phase start is used.
//!
//! Artificial columns are virtual: column `n + i` is `s_i e_i`. They are free
//! to move in phase one and fixed at zero afterwards, so a redundant row keeps
//! its artificial basic at zero and an inconsistent one shows up as a
//! primal infeasibility.

/// Primal feasibility and optimality tolerance.
pub const FEAS_TOL: f64 = 1e-9;
/// Smallest admissible pivot magnitude.
pub const PIVOT_TOL: f64 = 1e-10;
/// Consecutive degenerate pivots before switching to Bland's rule.
const STALL_LIMIT: usize = 50;
/// Pivots between refactorizations of the basis inverse.
const REFACTOR_EVERY: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub enum LpFailure {
    Infeasible { residual: f64 },
    Unbounded,
    IterationLimit { iterations: usize },
    SingularBasis,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// `max |A x - b|` at the returned point.
    pub residual: f64,
}

/// Column-major constraint matrix.
#[derive(Clone, Debug)]
pub struct StandardForm {
    rows: usize,
    cols: usize,
    a: Vec<f64>,
}

impl StandardForm {
    /// `columns` holds `cols` consecutive columns of length `rows`.
    pub fn new(rows: usize, columns: Vec<f64>) -> Self {
        assert!(rows > 0, "standard form needs at least one row");
        assert_eq!(columns.len() % rows, 0, "ragged column data");
        let cols = columns.len() / rows;
        Self {
            rows,
            cols,
            a: columns,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.a[j * self.rows..(j + 1) * self.rows]
    }

    pub fn residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let mut r = b.to_vec();
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                for (ri, aij) in r.iter_mut().zip(self.column(j)) {
                    *ri -= aij * xj;
                }
            }
        }
        r.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Dot product with four independent accumulators so the loop vectorizes.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for k in 0..chunks {
        let i = 4 * k;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..n {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

/// Simplex workspace bound to one [`StandardForm`]; reusable across solves.
pub struct Simplex<'a> {
    form: &'a StandardForm,
    m: usize,
    n: usize,
    basis: Vec<usize>,
    /// Basis position of each variable, `usize::MAX` when nonbasic.
    pos: Vec<usize>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    art_sign: Vec<f64>,
    /// Structural columns held at zero for the current solve.
    fixed: Vec<bool>,
    warm: bool,
    iterations: usize,
    limit: usize,
    since_refactor: usize,
}

impl<'a> Simplex<'a> {
    pub fn new(form: &'a StandardForm) -> Self {
        let m = form.rows;
        let n = form.cols;
        Self {
            form,
            m,
            n,
            basis: Vec::new(),
            pos: vec![usize::MAX; n + m],
            binv: vec![0.0; m * m],
            xb: vec![0.0; m],
            art_sign: vec![1.0; m],
            fixed: vec![false; n],
            warm: false,
            iterations: 0,
            limit: 20 * (m + n) + 1000,
            since_refactor: 0,
        }
    }

    /// Basic structural columns of the last successful solve.
    pub fn basis(&self) -> Vec<usize> {
        self.basis.clone()
    }

    /// Solves with right-hand side `b` and costs `c` (one per structural
    /// column). Columns flagged in `fixed` are held at zero. `crash` lists
    /// `m` basic variables to try when the warm basis is unusable; indices
    /// `>= cols` denote artificial columns.
    pub fn solve(
        &mut self,
        b: &[f64],
        c: &[f64],
        fixed: Option<&[bool]>,
        crash: Option<&[usize]>,
    ) -> Result<LpSolution, LpFailure> {
        assert_eq!(b.len(), self.m);
        assert_eq!(c.len(), self.n);
        match fixed {
            Some(f) => self.fixed.copy_from_slice(f),
            None => self.fixed.iter_mut().for_each(|v| *v = false),
        }
        self.iterations = 0;
        let started = match self.try_warm(b, c, crash) {
            Ok(s) => s,
            Err(LpFailure::SingularBasis) | Err(LpFailure::IterationLimit { .. }) => false,
            Err(e) => return Err(e),
        };
        if !started {
            self.iterations = 0;
            self.cold(b)?;
            self.primal(b, c, Phase::Two)?;
        }
        self.warm = true;
        let mut x = vec![0.0; self.n];
        for (i, &j) in self.basis.iter().enumerate() {
            if j < self.n {
                x[j] = self.xb[i].max(0.0);
            }
        }
        let objective = x.iter().zip(c).map(|(a, b)| a * b).sum();
        let residual = self.form.residual(&x, b);
        Ok(LpSolution {
            x,
            objective,
            iterations: self.iterations,
            residual,
        })
    }

    /// Warm basis if primal feasible, then the crash basis if already
    /// optimal, then dual simplex from the warm basis, then primal simplex
    /// from the crash basis. `Ok(false)` means none applied.
    fn try_warm(&mut self, b: &[f64], c: &[f64], crash: Option<&[usize]>) -> Result<bool, LpFailure> {
        let mut previous = None;
        if self.warm && self.refactor().is_ok() {
            self.compute_xb(b);
            if self.primal_feasible(Phase::Two) {
                self.primal(b, c, Phase::Two)?;
                return Ok(true);
            }
            previous = Some(self.basis.clone());
        }
        let mut crash_feasible = false;
        if let Some(cb) = crash {
            if self.install(cb).is_ok() {
                self.compute_xb(b);
                crash_feasible = self.primal_feasible(Phase::Two);
                if crash_feasible && self.dual_feasible(c) {
                    self.primal(b, c, Phase::Two)?;
                    return Ok(true);
                }
            }
        }
        if let Some(prev) = previous {
            if self.install(&prev).is_ok() && self.dual_feasible(c) {
                self.compute_xb(b);
                match self.dual(b, c) {
                    Ok(()) => return Ok(true),
                    // Dual simplex proves infeasibility only up to
                    // tolerance; the cold start confirms it.
                    Err(LpFailure::Infeasible { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
        }
        if crash_feasible {
            let cb = crash.expect("crash basis was installed");
            if self.install(cb).is_ok() {
                self.compute_xb(b);
                self.primal(b, c, Phase::Two)?;
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn install(&mut self, basis: &[usize]) -> Result<(), LpFailure> {
        if basis.len() != self.m {
            return Err(LpFailure::SingularBasis);
        }
        self.pos.iter_mut().for_each(|p| *p = usize::MAX);
        for (i, &j) in basis.iter().enumerate() {
            if self.pos[j] != usize::MAX {
                return Err(LpFailure::SingularBasis);
            }
            self.pos[j] = i;
        }
        self.basis = basis.to_vec();
        let r = self.refactor();
        if r.is_err() {
            self.warm = false;
        }
        r
    }

    fn cold(&mut self, b: &[f64]) -> Result<(), LpFailure> {
        let m = self.m;
        for (s, bi) in self.art_sign.iter_mut().zip(b) {
            *s = if *bi < 0.0 { -1.0 } else { 1.0 };
        }
        let basis: Vec<usize> = (0..m).map(|i| self.n + i).collect();
        self.install(&basis)?;
        self.compute_xb(b);
        let c1 = vec![0.0; self.n];
        self.primal(b, &c1, Phase::One)?;
        let infeas: f64 = self
            .basis
            .iter()
            .zip(&self.xb)
            .filter(|(j, _)| **j >= self.n)
            .map(|(_, x)| x.abs())
            .sum();
        let scale = 1.0 + b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if infeas > FEAS_TOL * scale * (m as f64).sqrt() {
            self.warm = false;
            return Err(LpFailure::Infeasible { residual: infeas });
        }
        Ok(())
    }

    fn column_into(&self, j: usize, out: &mut [f64]) {
        if j < self.n {
            out.copy_from_slice(self.form.column(j));
        } else {
            out.iter_mut().for_each(|v| *v = 0.0);
            out[j - self.n] = self.art_sign[j - self.n];
        }
    }

    /// Gauss-Jordan inversion of the current basis with partial pivoting.
    fn refactor(&mut self) -> Result<(), LpFailure> {
        let m = self.m;
        let mut work = vec![0.0; m * 2 * m];
        let mut col = vec![0.0; m];
        for (k, &j) in self.basis.iter().enumerate() {
            self.column_into(j, &mut col);
            for i in 0..m {
                work[i * 2 * m + k] = col[i];
            }
        }
        for i in 0..m {
            work[i * 2 * m + m + i] = 1.0;
        }
        for k in 0..m {
            let (p, best) = (k..m)
                .map(|i| (i, work[i * 2 * m + k].abs()))
                .fold((k, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
            if best < 1e-13 {
                return Err(LpFailure::SingularBasis);
            }
            if p != k {
                for c in 0..2 * m {
                    work.swap(p * 2 * m + c, k * 2 * m + c);
                }
            }
            let inv = 1.0 / work[k * 2 * m + k];
            for c in 0..2 * m {
                work[k * 2 * m + c] *= inv;
            }
            for i in 0..m {
                if i != k {
                    let f = work[i * 2 * m + k];
                    if f != 0.0 {
                        for c in 0..2 * m {
                            work[i * 2 * m + c] -= f * work[k * 2 * m + c];
                        }
                    }
                }
            }
        }
        for i in 0..m {
            self.binv[i * m..(i + 1) * m].copy_from_slice(&work[i * 2 * m + m..(i + 1) * 2 * m]);
        }
        self.since_refactor = 0;
        Ok(())
    }

    fn compute_xb(&mut self, b: &[f64]) {
        let m = self.m;
        for i in 0..m {
            self.xb[i] = self.binv[i * m..(i + 1) * m]
                .iter()
                .zip(b)
                .map(|(p, q)| p * q)
                .sum();
        }
    }

    fn upper(&self, j: usize, phase: Phase) -> f64 {
        if (j >= self.n && phase == Phase::Two) || (j < self.n && self.fixed[j]) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn primal_feasible(&self, phase: Phase) -> bool {
        self.basis.iter().zip(&self.xb).all(|(&j, &x)| {
            x >= -FEAS_TOL && x <= self.upper(j, phase) + FEAS_TOL
        })
    }

    fn duals(&self, c: &[f64], phase: Phase) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (i, &j) in self.basis.iter().enumerate() {
            let cj = self.cost(j, c, phase);
            if cj != 0.0 {
                for (yk, bik) in y.iter_mut().zip(&self.binv[i * m..(i + 1) * m]) {
                    *yk += cj * bik;
                }
            }
        }
        y
    }

    fn cost(&self, j: usize, c: &[f64], phase: Phase) -> f64 {
        match phase {
            Phase::One => {
                if j >= self.n {
                    1.0
                } else {
                    0.0
                }
            }
            Phase::Two => {
                if j >= self.n {
                    0.0
                } else {
                    c[j]
                }
            }
        }
    }

    /// Reduced costs of the structural columns (basic ones are zero).
    fn reduced_costs(&self, c: &[f64], phase: Phase) -> Vec<f64> {
        let y = self.duals(c, phase);
        (0..self.n)
            .map(|j| {
                if self.pos[j] != usize::MAX || self.fixed[j] {
                    0.0
                } else {
                    let dot = dot(self.form.column(j), &y);
                    self.cost(j, c, phase) - dot
                }
            })
            .collect()
    }

    fn dual_feasible(&self, c: &[f64]) -> bool {
        self.reduced_costs(c, Phase::Two)
            .iter()
            .all(|d| *d >= -FEAS_TOL)
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        if j >= self.n {
            let i = j - self.n;
            let s = self.art_sign[i];
            (0..m).map(|r| s * self.binv[r * m + i]).collect()
        } else {
            let a = self.form.column(j);
            (0..m)
                .map(|r| {
                    self.binv[r * m..(r + 1) * m]
                        .iter()
                        .zip(a)
                        .map(|(p, q)| p * q)
                        .sum()
                })
                .collect()
        }
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[f64], step: f64, b: &[f64]) -> Result<(), LpFailure> {
        let m = self.m;
        for (i, a) in alpha.iter().enumerate() {
            self.xb[i] -= step * a;
        }
        self.xb[r] = step;
        let leaving = self.basis[r];
        self.pos[leaving] = usize::MAX;
        self.basis[r] = q;
        self.pos[q] = r;
        let inv = 1.0 / alpha[r];
        for k in 0..m {
            self.binv[r * m + k] *= inv;
        }
        for i in 0..m {
            if i != r && alpha[i] != 0.0 {
                let f = alpha[i];
                for k in 0..m {
                    self.binv[i * m + k] -= f * self.binv[r * m + k];
                }
            }
        }
        self.since_refactor += 1;
        self.iterations += 1;
        if self.since_refactor >= REFACTOR_EVERY {
            self.refactor()?;
            self.compute_xb(b);
        }
        if self.iterations > self.limit {
            return Err(LpFailure::IterationLimit {
                iterations: self.iterations,
            });
        }
        Ok(())
    }

    fn primal(&mut self, b: &[f64], c: &[f64], phase: Phase) -> Result<(), LpFailure> {
        let mut stall = 0usize;
        loop {
            let d = self.reduced_costs(c, phase);
            let bland = stall >= STALL_LIMIT;
            let mut q = usize::MAX;
            let mut best = -FEAS_TOL;
            for (j, &dj) in d.iter().enumerate() {
                if self.pos[j] != usize::MAX || self.fixed[j] {
                    continue;
                }
                if bland {
                    if dj < -FEAS_TOL {
                        q = j;
                        break;
                    }
                } else if dj < best {
                    best = dj;
                    q = j;
                }
            }
            if q == usize::MAX {
                return Ok(());
            }
            let alpha = self.ftran(q);
            let mut r = usize::MAX;
            let mut ratio = f64::INFINITY;
            for (i, &a) in alpha.iter().enumerate() {
                let j = self.basis[i];
                let t = if a > PIVOT_TOL {
                    self.xb[i].max(0.0) / a
                } else if a < -PIVOT_TOL && self.upper(j, phase).is_finite() {
                    (self.upper(j, phase) - self.xb[i]).max(0.0) / -a
                } else {
                    continue;
                };
                let better = if r == usize::MAX || t < ratio - 1e-12 {
                    true
                } else if t <= ratio + 1e-12 {
                    if bland {
                        j < self.basis[r]
                    } else {
                        a.abs() > alpha[r].abs()
                    }
                } else {
                    false
                };
                if better {
                    r = i;
                    ratio = t;
                }
            }
            if r == usize::MAX {
                return Err(LpFailure::Unbounded);
            }
            if ratio <= 1e-12 {
                stall += 1;
            } else {
                stall = 0;
            }
            self.pivot(r, q, &alpha, ratio, b)?;
        }
    }

    fn dual(&mut self, b: &[f64], c: &[f64]) -> Result<(), LpFailure> {
        let m = self.m;
        let mut stall = 0usize;
        loop {
            let bland = stall >= STALL_LIMIT;
            let mut r = usize::MAX;
            let mut worst = FEAS_TOL;
            for i in 0..m {
                let j = self.basis[i];
                let x = self.xb[i];
                let infeas = if self.upper(j, Phase::Two) == 0.0 { x.abs() } else { -x };
                if infeas > FEAS_TOL {
                    if bland {
                        if r == usize::MAX || j < self.basis[r] {
                            r = i;
                        }
                    } else if infeas > worst {
                        worst = infeas;
                        r = i;
                    }
                }
            }
            if r == usize::MAX {
                // Primal feasible; clean up any dual infeasibility left by
                // round-off with a few primal iterations.
                return self.primal(b, c, Phase::Two);
            }
            let increase = self.xb[r] < 0.0;
            let y = self.duals(c, Phase::Two);
            let rho = &self.binv[r * m..(r + 1) * m];
            let mut q = usize::MAX;
            let mut ratio = f64::INFINITY;
            let mut q_alpha = 0.0;
            for j in 0..self.n {
                if self.pos[j] != usize::MAX || self.fixed[j] {
                    continue;
                }
                let a = dot(self.form.column(j), rho);
                let eligible = if increase { a < -PIVOT_TOL } else { a > PIVOT_TOL };
                if !eligible {
                    continue;
                }
                let col = self.form.column(j);
                let dj = c[j] - dot(col, &y);
                let t = dj.max(0.0) / a.abs();
                let better = if q == usize::MAX || t < ratio - 1e-12 {
                    true
                } else {
                    t <= ratio + 1e-12 && !bland && a.abs() > q_alpha
                };
                if better {
                    q = j;
                    ratio = t;
                    q_alpha = a.abs();
                }
            }
            if q == usize::MAX {
                return Err(LpFailure::Infeasible {
                    residual: self.xb[r].abs(),
                });
            }
            if ratio <= 1e-12 {
                stall += 1;
            } else {
                stall = 0;
            }
            let alpha = self.ftran(q);
            let step = self.xb[r] / alpha[r];
            self.pivot(r, q, &alpha, step, b)?;
        }
    }
}

/// One-shot convenience wrapper around [`Simplex`].
pub fn solve(form: &StandardForm, b: &[f64], c: &[f64]) -> Result<LpSolution, LpFailure> {
    Simplex::new(form).solve(b, c, None, None)
}
