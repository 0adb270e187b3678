//! Primal-dual interior-point method on the homogeneous self-dual embedding
//! with Nesterov-Todd scaling and Mehrotra predictor-corrector steps.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::{svec_index, Cone, ConicProblem, ConicSolution, ConicSolver, Sense, SolveStatus};
use crate::error::Result;

const STEP_FRACTION: f64 = 0.99;
/// Relaxation of the residual and gap targets accepted when progress stalls.
const NEAR_OPTIMAL_FACTOR: f64 = 10.0;
/// Iterations without a 10% gap reduction before the method is declared stalled.
const STALL_WINDOW: usize = 20;
const DEPENDENCE_TOL: f64 = 1e-10;

/// Built-in dense interior-point solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteriorPoint {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for InteriorPoint {
    fn default() -> Self {
        Self { tol: 1e-8, max_iters: 200 }
    }
}

impl ConicSolver for InteriorPoint {
    fn solve(&self, problem: &ConicProblem) -> Result<ConicSolution> {
        problem.validate()?;
        Ok(run(problem, self.tol, self.max_iters))
    }

    fn tolerance(&self) -> f64 {
        self.tol
    }
}

fn smat(v: &[f64], n: usize) -> DMatrix<f64> {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let mut m = DMatrix::zeros(n, n);
    for col in 0..n {
        for r in col..n {
            let x = v[svec_index(n, r, col)];
            if r == col {
                m[(r, r)] = x;
            } else {
                m[(r, col)] = x * s;
                m[(col, r)] = x * s;
            }
        }
    }
    m
}

fn svec_into(m: &DMatrix<f64>, out: &mut [f64]) {
    let n = m.nrows();
    let s = core::f64::consts::SQRT_2;
    for col in 0..n {
        for r in col..n {
            out[svec_index(n, r, col)] = if r == col { m[(r, r)] } else { s * 0.5 * (m[(r, col)] + m[(col, r)]) };
        }
    }
}

fn frob_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn lower_inverse(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let mut inv = DMatrix::identity(n, n);
    l.solve_lower_triangular_mut(&mut inv);
    inv
}

fn sym_eig_min(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

#[derive(Clone)]
struct Block {
    cone: Cone,
    offset: usize,
    len: usize,
    /// Rows of `A` restricted to this block as symmetric matrices (PSD only).
    rows: Vec<(usize, DMatrix<f64>)>,
    /// Nonzero rows per coordinate (nonnegative blocks only).
    cols: Vec<Vec<(usize, f64)>>,
}

enum Scaling {
    Psd { r: DMatrix<f64>, rinv: DMatrix<f64>, g: DMatrix<f64>, lambda: DVector<f64> },
    Nonneg { w: DVector<f64>, lambda: DVector<f64> },
    Free,
}

struct Reduced {
    a: DMatrix<f64>,
    b: DVector<f64>,
    /// Original row index and scale of every kept row.
    kept: Vec<(usize, f64)>,
}

enum Presolve {
    Reduced(Reduced),
    Infeasible(Vec<f64>),
}

/// Removes linearly dependent equality rows and normalizes the rest. An
/// inconsistent dependent row yields a Farkas certificate.
fn presolve(a: &DMatrix<f64>, b: &DVector<f64>) -> Presolve {
    let (m, n) = a.shape();
    // Orthonormal basis of the kept row space, each with its combination of original rows.
    let mut basis: Vec<(DVector<f64>, DVector<f64>)> = Vec::new();
    let mut kept = Vec::new();
    for i in 0..m {
        let row = a.row(i).transpose();
        let norm = row.norm();
        let mut res = row.clone();
        let mut comb = DVector::zeros(m);
        comb[i] = 1.0;
        for _ in 0..2 {
            for (q, qc) in &basis {
                let proj = q.dot(&res);
                res.axpy(-proj, q, 1.0);
                comb.axpy(-proj, qc, 1.0);
            }
        }
        let rnorm = res.norm();
        if rnorm <= DEPENDENCE_TOL * norm.max(1.0) {
            let mismatch = comb.dot(b);
            let scale: f64 = comb.iter().zip(b.iter()).map(|(c, v)| (c * v).abs()).sum::<f64>().max(1.0);
            if mismatch.abs() > 1e-9 * scale {
                let y: Vec<f64> = comb.iter().map(|c| c * mismatch.signum()).collect();
                return Presolve::Infeasible(y);
            }
            continue;
        }
        basis.push((res / rnorm, comb / rnorm));
        kept.push((i, norm));
    }
    let mut ra = DMatrix::zeros(kept.len(), n);
    let mut rb = DVector::zeros(kept.len());
    for (k, &(i, norm)) in kept.iter().enumerate() {
        ra.row_mut(k).copy_from(&(a.row(i) / norm));
        rb[k] = b[i] / norm;
    }
    Presolve::Reduced(Reduced { a: ra, b: rb, kept })
}

struct Hsd<'a> {
    a: &'a DMatrix<f64>,
    b: &'a DVector<f64>,
    c: &'a DVector<f64>,
    blocks: Vec<Block>,
    free: Vec<usize>,
    nu: f64,
}

impl<'a> Hsd<'a> {
    fn new(a: &'a DMatrix<f64>, b: &'a DVector<f64>, c: &'a DVector<f64>, cones: &[Cone]) -> Self {
        let m = a.nrows();
        let mut blocks = Vec::new();
        let mut free = Vec::new();
        let mut offset = 0;
        let mut nu = 0.0;
        for &cone in cones {
            let len = cone.len();
            let mut rows = Vec::new();
            let mut cols = Vec::new();
            match cone {
                Cone::Psd(k) => {
                    for i in 0..m {
                        let seg: Vec<f64> = (0..len).map(|j| a[(i, offset + j)]).collect();
                        if seg.iter().any(|&x| x != 0.0) {
                            rows.push((i, smat(&seg, k)));
                        }
                    }
                }
                Cone::Nonneg(_) => {
                    for j in 0..len {
                        cols.push((0..m).filter(|&i| a[(i, offset + j)] != 0.0).map(|i| (i, a[(i, offset + j)])).collect());
                    }
                }
                Cone::Free(_) => free.extend(offset..offset + len),
            }
            nu += cone.degree() as f64;
            blocks.push(Block { cone, offset, len, rows, cols });
            offset += len;
        }
        Self { a, b, c, blocks, free, nu }
    }

    fn identity_point(&self) -> DVector<f64> {
        let n = self.a.ncols();
        let mut e = DVector::zeros(n);
        for blk in &self.blocks {
            match blk.cone {
                Cone::Psd(k) => {
                    for i in 0..k {
                        e[blk.offset + svec_index(k, i, i)] = 1.0;
                    }
                }
                Cone::Nonneg(_) => e.rows_mut(blk.offset, blk.len).fill(1.0),
                Cone::Free(_) => {}
            }
        }
        e
    }

    fn scalings(&self, x: &DVector<f64>, z: &DVector<f64>) -> Option<Vec<Scaling>> {
        let mut out = Vec::with_capacity(self.blocks.len());
        for blk in &self.blocks {
            let xs = x.rows(blk.offset, blk.len);
            let zs = z.rows(blk.offset, blk.len);
            match blk.cone {
                Cone::Psd(k) => {
                    let xm = smat(xs.as_slice(), k);
                    let zm = smat(zs.as_slice(), k);
                    let lx = xm.cholesky()?.unpack();
                    let lz = zm.cholesky()?.unpack();
                    let svd = (lz.transpose() * &lx).svd(true, true);
                    let u = svd.u?;
                    let _ = u;
                    let vt = svd.v_t?;
                    let lam = svd.singular_values;
                    if lam.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
                        return None;
                    }
                    let v = vt.transpose();
                    let mut r = &lx * &v;
                    let mut rinv = &vt * lower_inverse(&lx);
                    for j in 0..k {
                        let s = lam[j].sqrt();
                        r.column_mut(j).scale_mut(1.0 / s);
                        rinv.row_mut(j).scale_mut(s);
                    }
                    let g = &r * r.transpose();
                    let mut lambda = DVector::zeros(blk.len);
                    for j in 0..k {
                        lambda[svec_index(k, j, j)] = lam[j];
                    }
                    out.push(Scaling::Psd { r, rinv, g, lambda });
                }
                Cone::Nonneg(_) => {
                    if xs.iter().chain(zs.iter()).any(|&v| !(v > 0.0)) {
                        return None;
                    }
                    let w = DVector::from_fn(blk.len, |i, _| (xs[i] / zs[i]).sqrt());
                    let lambda = DVector::from_fn(blk.len, |i, _| (xs[i] * zs[i]).sqrt());
                    out.push(Scaling::Nonneg { w, lambda });
                }
                Cone::Free(_) => out.push(Scaling::Free),
            }
        }
        Some(out)
    }

    /// Maps block-wise with `f(block, scaling, segment) -> segment`; free coordinates map to zero.
    fn map_blocks(
        &self,
        sc: &[Scaling],
        v: &DVector<f64>,
        f: impl Fn(&Block, &Scaling, &[f64], &mut [f64]),
    ) -> DVector<f64> {
        let mut out = DVector::zeros(v.len());
        for (blk, s) in self.blocks.iter().zip(sc) {
            if matches!(blk.cone, Cone::Free(_)) {
                continue;
            }
            let seg: Vec<f64> = v.rows(blk.offset, blk.len).iter().copied().collect();
            let mut res = vec![0.0; blk.len];
            f(blk, s, &seg, &mut res);
            out.rows_mut(blk.offset, blk.len).copy_from_slice(&res);
        }
        out
    }

    /// `H v = G V G` (PSD) or `w^2 v` (nonnegative).
    fn apply_h(&self, sc: &[Scaling], v: &DVector<f64>) -> DVector<f64> {
        self.map_blocks(sc, v, |blk, s, seg, out| match (blk.cone, s) {
            (Cone::Psd(k), Scaling::Psd { g, .. }) => svec_into(&(g * smat(seg, k) * g), out),
            (_, Scaling::Nonneg { w, .. }) => out.iter_mut().zip(seg).zip(w.iter()).for_each(|((o, x), w)| *o = w * w * x),
            _ => {}
        })
    }

    /// Scaled-space vector to x-space: `R V R'` or `w v`.
    fn apply_wt(&self, sc: &[Scaling], v: &DVector<f64>) -> DVector<f64> {
        self.map_blocks(sc, v, |blk, s, seg, out| match (blk.cone, s) {
            (Cone::Psd(k), Scaling::Psd { r, .. }) => svec_into(&(r * smat(seg, k) * r.transpose()), out),
            (_, Scaling::Nonneg { w, .. }) => out.iter_mut().zip(seg).zip(w.iter()).for_each(|((o, x), w)| *o = w * x),
            _ => {}
        })
    }

    /// x-space direction to scaled space: `R^{-1} D R^{-T}` or `d / w`.
    fn scale_x(&self, sc: &[Scaling], v: &DVector<f64>) -> DVector<f64> {
        self.map_blocks(sc, v, |blk, s, seg, out| match (blk.cone, s) {
            (Cone::Psd(k), Scaling::Psd { rinv, .. }) => svec_into(&(rinv * smat(seg, k) * rinv.transpose()), out),
            (_, Scaling::Nonneg { w, .. }) => out.iter_mut().zip(seg).zip(w.iter()).for_each(|((o, x), w)| *o = x / w),
            _ => {}
        })
    }

    /// z-space direction to scaled space: `R' D R` or `w d`.
    fn scale_z(&self, sc: &[Scaling], v: &DVector<f64>) -> DVector<f64> {
        self.map_blocks(sc, v, |blk, s, seg, out| match (blk.cone, s) {
            (Cone::Psd(k), Scaling::Psd { r, .. }) => svec_into(&(r.transpose() * smat(seg, k) * r), out),
            (_, Scaling::Nonneg { w, .. }) => out.iter_mut().zip(seg).zip(w.iter()).for_each(|((o, x), w)| *o = w * x),
            _ => {}
        })
    }

    fn lambda(&self, sc: &[Scaling]) -> DVector<f64> {
        let n = self.a.ncols();
        let mut out = DVector::zeros(n);
        for (blk, s) in self.blocks.iter().zip(sc) {
            match s {
                Scaling::Psd { lambda, .. } | Scaling::Nonneg { lambda, .. } => {
                    out.rows_mut(blk.offset, blk.len).copy_from(lambda)
                }
                Scaling::Free => {}
            }
        }
        out
    }

    /// Jordan product `(UV + VU)/2` / entrywise product.
    fn jordan_prod(&self, sc: &[Scaling], u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(u.len());
        for (blk, s) in self.blocks.iter().zip(sc) {
            match (blk.cone, s) {
                (Cone::Psd(k), Scaling::Psd { .. }) => {
                    let um = smat(u.rows(blk.offset, blk.len).as_slice(), k);
                    let vm = smat(v.rows(blk.offset, blk.len).as_slice(), k);
                    let p = (&um * &vm + &vm * &um) * 0.5;
                    let mut seg = vec![0.0; blk.len];
                    svec_into(&p, &mut seg);
                    out.rows_mut(blk.offset, blk.len).copy_from_slice(&seg);
                }
                (_, Scaling::Nonneg { .. }) => {
                    for i in blk.offset..blk.offset + blk.len {
                        out[i] = u[i] * v[i];
                    }
                }
                _ => {}
            }
        }
        out
    }

    /// Solves `lambda ∘ u = v` for `u` with `lambda` diagonal.
    fn jordan_div(&self, sc: &[Scaling], v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(v.len());
        for (blk, s) in self.blocks.iter().zip(sc) {
            match (blk.cone, s) {
                (Cone::Psd(k), Scaling::Psd { lambda, .. }) => {
                    for col in 0..k {
                        for r in col..k {
                            let idx = svec_index(k, r, col);
                            let lr = lambda[svec_index(k, r, r)];
                            let lc = lambda[svec_index(k, col, col)];
                            out[blk.offset + idx] = 2.0 * v[blk.offset + idx] / (lr + lc);
                        }
                    }
                }
                (_, Scaling::Nonneg { lambda, .. }) => {
                    for i in 0..blk.len {
                        out[blk.offset + i] = v[blk.offset + i] / lambda[i];
                    }
                }
                _ => {}
            }
        }
        out
    }

    /// Largest `alpha` with `lambda + alpha d` in the cone (infinity if unbounded).
    fn max_step(&self, sc: &[Scaling], d: &DVector<f64>) -> f64 {
        let mut alpha = f64::INFINITY;
        for (blk, s) in self.blocks.iter().zip(sc) {
            match (blk.cone, s) {
                (Cone::Psd(k), Scaling::Psd { lambda, .. }) => {
                    let mut dm = smat(d.rows(blk.offset, blk.len).as_slice(), k);
                    for i in 0..k {
                        for j in 0..k {
                            dm[(i, j)] /= (lambda[svec_index(k, i, i)] * lambda[svec_index(k, j, j)]).sqrt();
                        }
                    }
                    let emin = sym_eig_min(&dm);
                    if emin < 0.0 {
                        alpha = alpha.min(-1.0 / emin);
                    }
                }
                (_, Scaling::Nonneg { lambda, .. }) => {
                    for i in 0..blk.len {
                        let di = d[blk.offset + i];
                        if di < 0.0 {
                            alpha = alpha.min(-lambda[i] / di);
                        }
                    }
                }
                _ => {}
            }
        }
        alpha
    }

    /// Factorizes the reduced KKT matrix `[[A_K H A_K', A_F], [A_F', -δI]]`.
    fn kkt(&self, sc: &[Scaling]) -> Kkt {
        let m = self.a.nrows();
        let nf = self.free.len();
        let mut k = DMatrix::zeros(m + nf, m + nf);
        for (blk, s) in self.blocks.iter().zip(sc) {
            match s {
                Scaling::Psd { g, .. } => {
                    for (j, aj) in &blk.rows {
                        let t = g * aj * g;
                        for (i, ai) in &blk.rows {
                            if i <= j {
                                let v = frob_dot(ai, &t);
                                k[(*i, *j)] += v;
                            }
                        }
                    }
                }
                Scaling::Nonneg { w, .. } => {
                    for (col, wc) in blk.cols.iter().zip(w.iter()) {
                        let w2 = wc * wc;
                        for &(i, ai) in col {
                            for &(j, aj) in col {
                                if i <= j {
                                    k[(i, j)] += w2 * ai * aj;
                                }
                            }
                        }
                    }
                }
                Scaling::Free => {}
            }
        }
        for j in 0..m {
            for i in 0..j {
                k[(j, i)] = k[(i, j)];
            }
        }
        for (p, &fi) in self.free.iter().enumerate() {
            for i in 0..m {
                let v = self.a[(i, fi)];
                k[(i, m + p)] = v;
                k[(m + p, i)] = v;
            }
        }
        let scale = (0..m).map(|i| k[(i, i)]).fold(1.0, f64::max);
        let delta = 1e-14 * scale;
        let mut reg = k.clone();
        for i in 0..m {
            reg[(i, i)] += delta;
        }
        for p in 0..nf {
            reg[(m + p, m + p)] -= delta;
        }
        Kkt { exact: k, lu: reg.lu() }
    }

    /// Solves `A dx = r1`, `A'dy + dz = r2` (`dz_F = 0`), `dx_K = W^T rc - H dz_K`.
    fn solve_reduced(
        &self,
        sc: &[Scaling],
        kkt: &Kkt,
        r1: &DVector<f64>,
        r2: &DVector<f64>,
        rc: &DVector<f64>,
    ) -> Option<(DVector<f64>, DVector<f64>, DVector<f64>)> {
        let m = self.a.nrows();
        let nf = self.free.len();
        let wrc = self.apply_wt(sc, rc);
        let hr2 = self.apply_h(sc, r2);
        let t = &wrc - &hr2;
        let mut rhs = DVector::zeros(m + nf);
        rhs.rows_mut(0, m).copy_from(&(r1 - self.a * &t));
        for (p, &fi) in self.free.iter().enumerate() {
            rhs[m + p] = r2[fi];
        }
        let mut sol = if m + nf == 0 { DVector::zeros(0) } else { kkt.lu.solve(&rhs)? };
        for _ in 0..3 {
            if m + nf == 0 {
                break;
            }
            let res = &rhs - &kkt.exact * &sol;
            if res.amax() <= 1e-15 * rhs.amax().max(1.0) {
                break;
            }
            sol += kkt.lu.solve(&res)?;
        }
        if sol.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let dy = sol.rows(0, m).into_owned();
        let mut dz = r2 - self.a.transpose() * &dy;
        for &fi in &self.free {
            dz[fi] = 0.0;
        }
        let mut dx = &wrc - self.apply_h(sc, &dz);
        for (p, &fi) in self.free.iter().enumerate() {
            dx[fi] = sol[m + p];
        }
        Some((dx, dy, dz))
    }
}

struct Kkt {
    exact: DMatrix<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

#[derive(Clone)]
struct Iterate {
    x: DVector<f64>,
    y: DVector<f64>,
    z: DVector<f64>,
    tau: f64,
    kappa: f64,
}

fn run(problem: &ConicProblem, tol: f64, max_iters: usize) -> ConicSolution {
    let n = problem.num_vars();
    let m0 = problem.equalities.len();
    let sign = match problem.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut c_user = DVector::zeros(n);
    for &(i, v) in &problem.objective {
        c_user[i] += v;
    }
    let mut a0 = DMatrix::zeros(m0, n);
    let mut b0 = DVector::zeros(m0);
    for (r, eq) in problem.equalities.iter().enumerate() {
        for &(i, v) in &eq.coeffs {
            a0[(r, i)] += v;
        }
        b0[r] = eq.rhs;
    }
    let c = &c_user * sign;

    let reduced = match presolve(&a0, &b0) {
        Presolve::Infeasible(y) => {
            return ConicSolution {
                status: SolveStatus::Infeasible,
                x: vec![0.0; n],
                y: vec![0.0; m0],
                z: vec![0.0; n],
                primal_objective: f64::NAN,
                dual_objective: f64::NAN,
                gap: f64::NAN,
                relative_gap: f64::NAN,
                primal_residual: f64::NAN,
                dual_residual: f64::NAN,
                iterations: 0,
                certificate: Some(y),
            };
        }
        Presolve::Reduced(r) => r,
    };

    let hsd = Hsd::new(&reduced.a, &reduced.b, &c, &problem.blocks);
    let (status, it, iters) = iterate(&hsd, tol, max_iters);

    // Recover the user-facing solution.
    let tau = if status == SolveStatus::Optimal || status == SolveStatus::MaxIters { it.tau } else { 1.0 };
    let x = &it.x / tau;
    let z = &it.z * (sign / tau);
    let mut y = DVector::zeros(m0);
    for (k, &(i, norm)) in reduced.kept.iter().enumerate() {
        y[i] = sign * it.y[k] / (tau * norm);
    }
    let primal_objective = c_user.dot(&x);
    let dual_objective = b0.dot(&y);
    let gap = (primal_objective - dual_objective).abs();
    let primal_residual = (&a0 * &x - &b0).norm() / (1.0 + b0.norm());
    let dual_residual = (a0.transpose() * &y + &z - &c_user).norm() / (1.0 + c_user.norm());
    let certificate = match status {
        SolveStatus::Infeasible => Some(y.iter().map(|v| v * tau).collect()),
        SolveStatus::Unbounded => Some(it.x.iter().copied().collect()),
        _ => None,
    };
    ConicSolution {
        status,
        x: x.iter().copied().collect(),
        y: y.iter().copied().collect(),
        z: z.iter().copied().collect(),
        primal_objective,
        dual_objective,
        gap,
        relative_gap: gap / (1.0 + primal_objective.abs() + dual_objective.abs()),
        primal_residual,
        dual_residual,
        iterations: iters,
        certificate,
    }
}

fn iterate(hsd: &Hsd<'_>, tol: f64, max_iters: usize) -> (SolveStatus, Iterate, usize) {
    let (a, b, c) = (hsd.a, hsd.b, hsd.c);
    let e = hsd.identity_point();
    let mut it = Iterate { x: e.clone(), y: DVector::zeros(a.nrows()), z: e, tau: 1.0, kappa: 1.0 };
    let bnorm = 1.0 + b.norm();
    let cnorm = 1.0 + c.norm();
    let mut free_mask = DVector::from_element(c.len(), 1.0);
    for &fi in &hsd.free {
        free_mask[fi] = 0.0;
    }

    let mut near: Option<(Iterate, usize)> = None;
    let mut best_gap = f64::INFINITY;
    let mut last_progress = 0;
    for iter in 0..=max_iters {
        let rp = a * &it.x - b * it.tau;
        let rd = a.transpose() * &it.y + &it.z - c * it.tau;
        let cx = c.dot(&it.x);
        let by = b.dot(&it.y);
        let rg = cx - by + it.kappa;
        let mu = (it.x.dot(&it.z) + it.tau * it.kappa) / (hsd.nu + 1.0);

        let pres = rp.norm() / it.tau / bnorm;
        let dres = rd.norm() / it.tau / cnorm;
        let pobj = cx / it.tau;
        let dobj = by / it.tau;
        let relgap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        if pres <= tol && dres <= tol && relgap <= tol {
            return (SolveStatus::Optimal, it, iter);
        }
        let near_tol = NEAR_OPTIMAL_FACTOR * tol;
        if pres <= near_tol && dres <= near_tol && relgap <= near_tol {
            near = Some((it.clone(), iter));
        }
        if relgap < 0.9 * best_gap {
            best_gap = relgap;
            last_progress = iter;
        } else if iter - last_progress > STALL_WINDOW {
            break;
        }
        let aty_z = a.transpose() * &it.y + &it.z;
        if by > 0.0 && aty_z.norm() <= tol * by {
            return (SolveStatus::Infeasible, it, iter);
        }
        if cx < 0.0 && (a * &it.x).norm() <= tol * (-cx) {
            return (SolveStatus::Unbounded, it, iter);
        }
        if iter == max_iters {
            break;
        }

        let Some(sc) = hsd.scalings(&it.x, &it.z) else { break };
        let kkt = hsd.kkt(&sc);
        let lam = hsd.lambda(&sc);
        let zero_n = DVector::zeros(c.len());
        let Some((dx1, dy1, _)) = hsd.solve_reduced(&sc, &kkt, b, c, &zero_n) else { break };
        let denom = c.dot(&dx1) - b.dot(&dy1) - it.kappa / it.tau;

        // Returns (dx, dy, dz, dtau, dkappa) for complementarity rhs (cone, tau-kappa) and residual weight eta.
        let direction = |comp: &DVector<f64>, comp_tk: f64, eta: f64| {
            let rc = hsd.jordan_div(&sc, comp);
            let (dx0, dy0, dz0) = hsd.solve_reduced(&sc, &kkt, &(&rp * -eta), &(&rd * -eta), &rc)?;
            let dtau = (-eta * rg - c.dot(&dx0) + b.dot(&dy0) - comp_tk / it.tau) / denom;
            let dx = dx0 + &dx1 * dtau;
            let dy = dy0 + &dy1 * dtau;
            let mut dz = dz0 - (a.transpose() * &dy1 - c) * dtau;
            dz.component_mul_assign(&free_mask);
            let dkappa = (comp_tk - it.kappa * dtau) / it.tau;
            Some((dx, dy, dz, dtau, dkappa))
        };
        let step_len = |dx: &DVector<f64>, dz: &DVector<f64>, dtau: f64, dkappa: f64| {
            let mut alpha = hsd.max_step(&sc, &hsd.scale_x(&sc, dx)).min(hsd.max_step(&sc, &hsd.scale_z(&sc, dz)));
            if dtau < 0.0 {
                alpha = alpha.min(-it.tau / dtau);
            }
            if dkappa < 0.0 {
                alpha = alpha.min(-it.kappa / dkappa);
            }
            alpha
        };

        // Predictor.
        let lam_sq = hsd.jordan_prod(&sc, &lam, &lam);
        let Some((dxa, _, dza, dta, dka)) = direction(&(-&lam_sq), -it.tau * it.kappa, 1.0) else { break };
        let alpha_aff = step_len(&dxa, &dza, dta, dka).min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

        // Corrector.
        let corr = hsd.jordan_prod(&sc, &hsd.scale_x(&sc, &dxa), &hsd.scale_z(&sc, &dza));
        let target = &hsd.identity_point() * (sigma * mu);
        let comp = -&lam_sq + target - corr;
        let comp_tk = -it.tau * it.kappa + sigma * mu - dta * dka;
        let Some((dx, dy, dz, dtau, dkappa)) = direction(&comp, comp_tk, 1.0 - sigma) else { break };
        let alpha = (STEP_FRACTION * step_len(&dx, &dz, dtau, dkappa)).min(1.0);
        if !(alpha > 1e-12) {
            break;
        }
        it.x += &dx * alpha;
        it.y += &dy * alpha;
        it.z += &dz * alpha;
        it.tau += alpha * dtau;
        it.kappa += alpha * dkappa;
        // Keep the homogenizing variables strictly positive against round-off.
        it.tau = it.tau.max(1e-300);
        it.kappa = it.kappa.max(1e-300);
    }
    // Problems without strictly feasible points can stall slightly above the
    // targets; accept the last iterate that met the relaxed criterion.
    match near {
        Some((best, iter)) => (SolveStatus::Optimal, best, iter),
        None => (SolveStatus::MaxIters, it, max_iters),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::{solve, Equality};

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn scalar_lp() {
        // min t  s.t.  t - s = 5, t >= 0, s >= 0
        let mut p = ConicProblem::new(Sense::Minimize);
        p.add_block(Cone::Nonneg(2));
        p.objective = vec![(0, 1.0)];
        p.equalities.push(Equality { coeffs: vec![(0, 1.0), (1, -1.0)], rhs: 5.0 });
        let sol = solve(&p, 1e-9, 200).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(approx(sol.primal_objective, 5.0, 1e-7));
        assert!(approx(sol.dual_objective, 5.0, 1e-7));
    }

    #[test]
    fn svec_round_trip() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 5.0, 3.0, 5.0, 6.0]);
        let mut v = vec![0.0; 6];
        svec_into(&m, &mut v);
        assert!((smat(&v, 3) - &m).amax() < 1e-15);
        let n2: f64 = v.iter().map(|x| x * x).sum();
        assert!(approx(n2, frob_dot(&m, &m), 1e-12));
    }

    #[test]
    fn infeasible_equalities_detected_in_presolve() {
        let mut p = ConicProblem::new(Sense::Minimize);
        p.add_block(Cone::Free(1));
        p.equalities.push(Equality { coeffs: vec![(0, 1.0)], rhs: 1.0 });
        p.equalities.push(Equality { coeffs: vec![(0, 2.0)], rhs: 1.0 });
        let sol = solve(&p, 1e-8, 100).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
        let y = sol.certificate.unwrap();
        // A'y = 0 and b'y > 0.
        assert!(approx(y[0] + 2.0 * y[1], 0.0, 1e-12));
        assert!(y[0] + y[1] > 0.0);
    }

    #[test]
    fn infeasible_cone_detected() {
        // x >= 0, x = -1
        let mut p = ConicProblem::new(Sense::Minimize);
        p.add_block(Cone::Nonneg(1));
        p.equalities.push(Equality { coeffs: vec![(0, 1.0)], rhs: -1.0 });
        let sol = solve(&p, 1e-8, 100).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        // min -x, x >= 0, free constraint x - s = 0 with s >= 0
        let mut p = ConicProblem::new(Sense::Minimize);
        p.add_block(Cone::Nonneg(2));
        p.objective = vec![(0, -1.0)];
        p.equalities.push(Equality { coeffs: vec![(0, 1.0), (1, -1.0)], rhs: 0.0 });
        let sol = solve(&p, 1e-8, 100).unwrap();
        assert_eq!(sol.status, SolveStatus::Unbounded);
    }

    #[test]
    fn malformed_layout_rejected() {
        let mut p = ConicProblem::new(Sense::Minimize);
        p.add_block(Cone::Nonneg(1));
        p.objective = vec![(3, 1.0)];
        assert!(solve(&p, 1e-8, 10).is_err());
        assert!(solve(&ConicProblem::new(Sense::Minimize), 1e-8, 10).is_err());
    }

    #[test]
    fn real_psd_max_eigenvalue() {
        // max <C, X> s.t. tr X = 1, X psd  -> lambda_max(C)
        let c = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let mut p = ConicProblem::new(Sense::Maximize);
        p.add_block(Cone::Psd(2));
        let mut cv = vec![0.0; 3];
        svec_into(&c, &mut cv);
        p.objective = cv.iter().copied().enumerate().collect();
        p.equalities.push(Equality { coeffs: vec![(svec_index(2, 0, 0), 1.0), (svec_index(2, 1, 1), 1.0)], rhs: 1.0 });
        let sol = solve(&p, 1e-9, 200).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        let want = 2.5 + (1.25f64).sqrt();
        assert!(approx(sol.primal_objective, want, 1e-7), "{}", sol.primal_objective);
        assert!(approx(sol.dual_objective, want, 1e-7));
    }

    #[test]
    fn deterministic_iterates() {
        let c = DMatrix::from_row_slice(2, 2, &[0.3, -1.0, -1.0, 0.7]);
        let mut p = ConicProblem::new(Sense::Minimize);
        p.add_block(Cone::Psd(2));
        let mut cv = vec![0.0; 3];
        svec_into(&c, &mut cv);
        p.objective = cv.iter().copied().enumerate().collect();
        p.equalities.push(Equality { coeffs: vec![(0, 1.0), (2, 1.0)], rhs: 1.0 });
        let a = solve(&p, 1e-9, 200).unwrap();
        let b = solve(&p, 1e-9, 200).unwrap();
        assert_eq!(a, b);
    }
}
