"""Primal-dual interior-point solver for the canonical convex subproblem.

Assumes every inequality family exposes smooth convex values / gradients /
Hessians (see program.py). Inequalities get slacks (g(x) + s = 0, s > 0);
Newton steps on the perturbed KKT conditions with a fraction-to-boundary rule
and a residual-norm backtracking line search. The reduced KKT system is
assembled in COO form with per-family dense blocks and factored sparse.

Deterministic: no randomness anywhere, so identical programs produce
bit-identical solutions on one platform.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..errors import SolverError
from .program import ConvexProgram

_SIGMA = 0.1  # centering parameter
_BOUNDARY_FRACTION = 0.99
_BACKTRACK = 0.5
_ARMIJO = 0.01


@dataclass
class Solution:
    """Solver result: primal values, objective, status, and KKT residuals."""

    values: dict
    x: np.ndarray
    objective: float
    status: str  # optimal | infeasible | max_iter
    kkt: dict[str, float]
    dual_bound: float
    iterations: int
    lam: np.ndarray = field(repr=False, default=None)
    nu: np.ndarray = field(repr=False, default=None)


class _Work:
    """Per-solve cached structure: scalings and COO index layout."""

    def __init__(self, program: ConvexProgram, x0: np.ndarray):
        self.program = program
        n = program.space.dimension
        self.n = n
        self.sc = program.space.scales()
        self.fams = program.families
        self.eqs = program.eq_families
        self.m = program.n_ineq
        self.p = program.n_eq

        # Row scaling from the start point: 1 / max(1, |g|, |scaled grad|_inf).
        self.rho = []
        for fam in self.fams:
            vals = fam.values(x0)
            grads = fam.grad_loc(x0) * self.sc[fam.cols]
            mag = np.maximum(np.abs(vals), np.max(np.abs(grads), axis=1))
            self.rho.append(1.0 / np.maximum(1.0, mag))
        self.rho_eq = []
        for fam in self.eqs:
            grads = fam.grad_loc(x0) * self.sc[fam.cols]
            mag = np.max(np.abs(grads), axis=1)
            self.rho_eq.append(1.0 / np.maximum(1.0, mag))

        # COO structure of the KKT matrix [[M, E'], [E, -delta I]].
        rows, cols = [np.arange(n)], [np.arange(n)]  # primal regularization diag
        quad_idx = np.arange(n)
        rows.append(quad_idx)
        cols.append(quad_idx)
        if program.objective.quad_coo is not None:
            qi, qj, _ = program.objective.quad_coo
            rows.append(qi)
            cols.append(qj)
        for term in program.objective.norms:
            i = np.repeat(term.cols[:, :, None], term.cols.shape[1], axis=2)
            j = np.repeat(term.cols[:, None, :], term.cols.shape[1], axis=1)
            rows.append(i.ravel())
            cols.append(j.ravel())
        for fam in self.fams:
            bi, bj = fam.block_structure()
            rows.append(bi)
            cols.append(bj)
        # E block first (all families), then its transpose, matching the
        # order the value arrays are concatenated in at every iteration.
        row_off = 0
        eq_rows, eq_cols = [], []
        for fam in self.eqs:
            jr, jc = fam.jac_structure()
            eq_rows.append(jr + row_off + n)
            eq_cols.append(jc)
            row_off += fam.m
        rows.extend(eq_rows)
        cols.extend(eq_cols)
        rows.extend(eq_cols)
        cols.extend(eq_rows)
        if self.p:
            dual_idx = np.arange(n, n + self.p)
            rows.append(dual_idx)
            cols.append(dual_idx)
        self.kkt_rows = np.concatenate(rows)
        self.kkt_cols = np.concatenate(cols)
        self.kkt_shape = (n + self.p, n + self.p)

        # Scaled equality Jacobian values are constant.
        self.eq_vals = []
        for fam, rho in zip(self.eqs, self.rho_eq):
            self.eq_vals.append((fam.grad_loc(x0) * self.sc[fam.cols] * rho[:, None]).ravel())

    def eq_residual(self, x):
        if not self.eqs:
            return np.zeros(0)
        return np.concatenate([fam.values(x) * rho for fam, rho in zip(self.eqs, self.rho_eq)])

    def ineq_values(self, x):
        if not self.fams:
            return np.zeros(0)
        return np.concatenate([fam.values(x) * rho for fam, rho in zip(self.fams, self.rho)])

    def scaled_obj_grad(self, x):
        return self.program.objective.grad(x) * self.sc

    def dual_residual(self, x, lam, nu):
        """r_dual = scaled objective gradient + J' lam + E' nu."""
        r = self.scaled_obj_grad(x)
        off = 0
        for fam, rho in zip(self.fams, self.rho):
            g = fam.grad_loc(x) * self.sc[fam.cols] * rho[:, None]
            np.add.at(r, fam.cols.ravel(), (g * lam[off : off + fam.m, None]).ravel())
            off += fam.m
        off = 0
        for fam, vals in zip(self.eqs, self.eq_vals):
            g = vals.reshape(fam.m, fam.nloc)
            np.add.at(r, fam.cols.ravel(), (g * nu[off : off + fam.m, None]).ravel())
            off += fam.m
        return r


def _objective_hessian_blocks(program: ConvexProgram, x, sc):
    """Diagonal + norm-term value arrays matching the static structure order."""
    vals = [program.objective.quad_diag * sc * sc]
    if program.objective.quad_coo is not None:
        qi, qj, qv = program.objective.quad_coo
        vals.append(qv * sc[qi] * sc[qj])
    for term in program.objective.norms:
        u = np.einsum("mrl,ml->mr", term.a_loc, x[term.cols]) + term.b_loc
        r = np.sqrt(np.einsum("mr,mr->m", u, u) + 1e-20)
        a_sc = term.a_loc * sc[term.cols][:, None, :]
        ata = np.einsum("mrl,mrk->mlk", a_sc, a_sc)
        atu = np.einsum("mrl,mr->ml", a_sc, u)
        outer = np.einsum("ml,mk->mlk", atu, atu)
        h = term.weight[:, None, None] * (ata / r[:, None, None] - outer / (r**3)[:, None, None])
        vals.append(h.ravel())
    return vals


def solve(
    program: ConvexProgram,
    tol: float = 1e-7,
    max_iter: int = 200,
    x0: np.ndarray | None = None,
    trace: bool = False,
) -> Solution:
    """Solve the program to KKT residuals <= tol (scaled), or report failure."""
    n = program.space.dimension
    x_orig = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    work = _Work(program, x_orig)
    sc = work.sc
    x = x_orig / sc  # internal scaled coordinates
    m, p = work.m, work.p

    def eval_at(xs):
        return work.ineq_values(xs * sc), work.eq_residual(xs * sc)

    g0, r_eq = eval_at(x)
    s = np.maximum(-g0, 1.0)
    obj_scale = max(1.0, float(np.max(np.abs(work.scaled_obj_grad(x_orig)))) if n else 1.0)
    lam = np.full(m, obj_scale) / s
    nu = np.zeros(p)

    delta = 1e-10
    best_prim = np.inf
    stall = 0
    crawl = 0
    status = "max_iter"
    it = 0

    def residual_norm(xs, ss, ls, ns, mu):
        gg, re = eval_at(xs)
        rr = [work.dual_residual(xs * sc, ls, ns)]
        if m:
            rr.append(gg + ss)
            rr.append(ls * ss - mu)
        if p:
            rr.append(re)
        return float(np.sqrt(sum(float(r @ r) for r in rr)))

    for it in range(1, max_iter + 1):
        x_phys = x * sc
        g, r_eq = eval_at(x)
        r_prim = g + s
        r_dual = work.dual_residual(x_phys, lam, nu)
        gap = float(s @ lam) if m else 0.0

        # Convergence on the scaled system.
        comp = float(np.max(lam * s)) if m else 0.0
        stat = float(np.max(np.abs(r_dual))) if n else 0.0
        prim = max(
            float(np.max(np.abs(r_prim))) if m else 0.0,
            float(np.max(np.abs(r_eq))) if p else 0.0,
        )
        # Keep the barrier from collapsing while still infeasible, so that
        # multipliers of violated constraints stay live.
        mu = _SIGMA * max(gap / max(m, 1), 0.1 * prim)
        r_cent = lam * s - mu
        grad_scale = max(1.0, float(np.max(np.abs(work.scaled_obj_grad(x_phys)))))
        if trace:
            worst = int(np.argmax(np.abs(r_prim))) if m else -1
            wf = ""
            if m:
                off_t = 0
                for fam in work.fams:
                    if worst < off_t + fam.m:
                        wf = f"{fam.tag}[{worst - off_t}]"
                        break
                    off_t += fam.m
            print(
                f"  it={it:3d} comp={comp:.3e} stat={stat:.3e} prim={prim:.3e} "
                f"gap={gap:.3e} delta={delta:.1e} worst={wf} mu={mu:.2e}"
            )
        if comp <= tol and stat <= tol * grad_scale and prim <= tol:
            status = "optimal"
            break

        # Infeasibility heuristic: primal residual stalls far from feasible
        # while the algorithm keeps tightening everything else.
        if prim < best_prim * 0.9:
            best_prim = prim
            stall = 0
        else:
            stall += 1
        if stall >= 30 and prim > 1e4 * tol:
            status = "infeasible"
            break

        accepted = False
        for _attempt in range(10):
            # Assemble M = H_obj + sum lam H_i + J' diag(lam/s) J + delta I.
            vals = [np.full(n, delta * max(1.0, obj_scale))]
            vals.extend(_objective_hessian_blocks(program, x_phys, sc))
            rhs_x = -r_dual.copy()
            off = 0
            for fam, rho in zip(work.fams, work.rho):
                lam_f = lam[off : off + fam.m]
                s_f = s[off : off + fam.m]
                colscale = sc[fam.cols]
                grad_sc = fam.grad_loc(x_phys) * colscale * rho[:, None]
                hess = fam.hess_loc(x_phys, lam_f * rho) * colscale[:, :, None] * colscale[:, None, :]
                hess += (lam_f / s_f)[:, None, None] * np.einsum("ml,mk->mlk", grad_sc, grad_sc)
                vals.append(hess.ravel())
                coeff = (lam_f / s_f) * r_prim[off : off + fam.m] - r_cent[off : off + fam.m] / s_f
                np.add.at(rhs_x, fam.cols.ravel(), -(grad_sc * coeff[:, None]).ravel())
                off += fam.m
            vals.extend(work.eq_vals)  # E block
            vals.extend(work.eq_vals)  # E' block
            if p:
                vals.append(np.full(p, -delta * max(1.0, obj_scale)))

            kkt = sp.coo_matrix(
                (np.concatenate(vals), (work.kkt_rows, work.kkt_cols)), shape=work.kkt_shape
            ).tocsc()
            rhs = np.concatenate([rhs_x, -r_eq]) if p else rhs_x
            try:
                step = spla.splu(kkt).solve(rhs)
            except (RuntimeError, ValueError):
                delta = max(delta * 100.0, 1e-8)
                continue
            if not np.all(np.isfinite(step)) or np.max(np.abs(step)) > 1e9:
                delta = max(delta * 100.0, 1e-8)
                continue

            dx = step[:n]
            dnu = step[n:] if p else np.zeros(0)
            jdx = np.zeros(m)
            off = 0
            for fam, rho in zip(work.fams, work.rho):
                grad_sc = fam.grad_loc(x_phys) * sc[fam.cols] * rho[:, None]
                jdx[off : off + fam.m] = np.einsum("ml,ml->m", grad_sc, dx[fam.cols])
                off += fam.m
            ds = -r_prim - jdx
            dlam = -(lam / s) * ds - r_cent / s if m else np.zeros(0)

            # Fraction-to-boundary on s and lam.
            alpha_bound = 1.0
            if m:
                neg_s = ds < 0
                if np.any(neg_s):
                    alpha_bound = min(
                        alpha_bound, _BOUNDARY_FRACTION * float(np.min(-s[neg_s] / ds[neg_s]))
                    )
                neg_l = dlam < 0
                if np.any(neg_l):
                    alpha_bound = min(
                        alpha_bound, _BOUNDARY_FRACTION * float(np.min(-lam[neg_l] / dlam[neg_l]))
                    )

            alpha = alpha_bound
            base = residual_norm(x, s, lam, nu, mu)
            for _ in range(30):
                x_t = x + alpha * dx
                s_t = s + alpha * ds
                lam_t = lam + alpha * dlam
                nu_t = nu + alpha * dnu
                if residual_norm(x_t, s_t, lam_t, nu_t, mu) <= (1.0 - _ARMIJO * alpha) * base:
                    accepted = True
                    break
                alpha *= _BACKTRACK
            if accepted:
                break
            # The residual would not drop along this direction at all:
            # stiffen the regularization and rebuild the step.
            delta = min(max(delta * 30.0, 1e-8), 1e-2)
        if not accepted:
            if prim > 1e4 * tol:
                status = "infeasible"
            elif comp <= 10 * tol and stat <= 10 * tol * grad_scale and prim <= 10 * tol:
                status = "optimal"
            else:
                status = "max_iter"
            break
        x, s, lam, nu = x_t, s_t, lam_t, nu_t
        # Persistent crawling (backtracked far below the boundary step on
        # consecutive iterations) marks a flat direction the Newton model
        # mishandles; Levenberg-style stiffening restores progress.
        if alpha < 1e-3 * alpha_bound:
            crawl += 1
            if crawl >= 2:
                delta = min(max(delta * 30.0, 1e-8), 1e-2)
        else:
            crawl = 0
            delta = max(delta * 0.5, 1e-10)

    x_phys = x * sc
    obj = program.objective.value(x_phys)
    g, r_eq = eval_at(x)
    r_dual = work.dual_residual(x_phys, lam, nu)
    kkt_report = {
        "stationarity": float(np.max(np.abs(r_dual))) if n else 0.0,
        "primal_feas": max(
            float(np.max(g)) if m else 0.0, float(np.max(np.abs(r_eq))) if p else 0.0, 0.0
        ),
        "dual_feas": float(max(0.0, -np.min(lam))) if m else 0.0,
        "complementarity": float(np.max(np.abs(lam * s))) if m else 0.0,
    }
    dual_bound = obj - (float(s @ lam) if m else 0.0)
    if p:
        dual_bound -= float(np.abs(r_eq) @ np.abs(nu))
    return Solution(
        values=program.space.unpack(x_phys),
        x=x_phys,
        objective=obj,
        status=status,
        kkt=kkt_report,
        dual_bound=dual_bound,
        iterations=it,
        lam=lam,
        nu=nu,
    )


def require_optimal(solution: Solution, context: str = "") -> Solution:
    if solution.status != "optimal":
        raise SolverError(f"solve failed ({solution.status}) {context}: kkt={solution.kkt}")
    return solution
