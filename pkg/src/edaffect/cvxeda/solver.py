"""
分解的凸二次规划

    min_{p≥0, λ, d}  ½‖Hp + Bλ + Cd − y‖² + α·ℓ1 + γ/2‖λ‖²

ℓ1 项默认作用在相位分量 Hp 上(p ≥ 0 且 H 非负时 ‖Hp‖₁ = (Hᵀ1)ᵀp)，
penalize_driver 时直接作用在 p 上。两种情况都是 p 的线性项 cᵀp。

(λ, d) 对固定 p 有闭式解，消去后只剩关于 p 的非负约束问题，
用单调加速近端梯度(回溯步长 + 自适应重启)求解。
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Tuple

import numpy as np
from loguru import logger
from scipy.linalg import cho_factor, cho_solve

from edaffect.core.errors import NoConvergence, NonFinite, ShapeMismatch
from edaffect.cvxeda.config import CvxedaConfig
from edaffect.cvxeda.operators import PhasicOperator, TonicBasis

POWER_ITERATIONS = 30
LOG_EVERY = 500


@dataclass(frozen=True, eq=False)
class QpSolution:
    """求解结果; 可以像 (p, λ, d, objective_trace) 四元组一样解包"""
    p: np.ndarray
    lam: np.ndarray
    d: np.ndarray
    objective_trace: np.ndarray
    residual: float
    iterations: int
    converged: bool

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter((self.p, self.lam, self.d, self.objective_trace))

    @property
    def objective(self) -> float:
        return float(self.objective_trace[-1])


class QpProblem:
    """把 (λ, d) 消去后的约化问题"""

    def __init__(self, y, op: PhasicOperator, basis: TonicBasis, cfg: CvxedaConfig):
        y = np.asarray(y, dtype=np.float64)
        if y.ndim != 1 or y.shape[0] != op.n or basis.n != op.n:
            raise ShapeMismatch(
                f"y 长度 {y.shape}、算子长度 {op.n}、基长度 {basis.n} 不一致"
            )
        if not np.all(np.isfinite(y)):
            raise NonFinite("y 含有非有限值")
        self.y = y
        self.op = op
        self.basis = basis
        self.cfg = cfg
        self.q = np.hstack([basis.b, basis.c])
        self.kb = basis.n_splines
        gram = self.q.T @ self.q
        gram[np.arange(self.kb), np.arange(self.kb)] += cfg.gamma
        self._chol = cho_factor(gram)
        ones = np.ones(op.n)
        self.linear = cfg.alpha * (ones if cfg.penalize_driver else op.apply_t(ones))

    def tonic_coefficients(self, p: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """固定 p 时的最优 (λ, d)，返回 (z, r)，r = Hp + Qz − y"""
        hp = self.op.apply(p)
        z = cho_solve(self._chol, self.q.T @ (self.y - hp))
        return z, hp + self.q @ z - self.y

    def smooth(self, p: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
        z, r = self.tonic_coefficients(p)
        lam = z[: self.kb]
        value = 0.5 * float(r @ r) + 0.5 * self.cfg.gamma * float(lam @ lam)
        return value, r, z

    def gradient(self, r: np.ndarray) -> np.ndarray:
        """包络定理: ∇f(p) = Hᵀ r"""
        return self.op.apply_t(r)

    def reduced_objective(self, p) -> float:
        """p 处的完整目标值((λ, d) 取最优)"""
        p = np.asarray(p, dtype=np.float64)
        value, _, _ = self.smooth(p)
        return value + float(self.linear @ p)

    def kkt_residual(self, p: np.ndarray, grad: np.ndarray) -> float:
        """‖p − max(p − (∇f + c), 0)‖∞，最优点处为 0"""
        step = np.maximum(p - (grad + self.linear), 0.0)
        return float(np.max(np.abs(p - step))) if p.size else 0.0

    def lipschitz(self) -> float:
        """幂迭代估计 Hᵀ(I − QG⁻¹Qᵀ)H 的最大特征值; 低估由回溯修正"""
        v = np.ones(self.op.n) / np.sqrt(self.op.n)
        estimate = 0.0
        for _ in range(POWER_ITERATIONS):
            hv = self.op.apply(v)
            projected = hv - self.q @ cho_solve(self._chol, self.q.T @ hv)
            w = self.op.apply_t(projected)
            norm = float(np.linalg.norm(w))
            if norm == 0.0:
                break
            estimate = norm
            v = w / norm
        return max(estimate, 1e-12)

    def solve(self, strict: bool = True) -> QpSolution:
        cfg = self.cfg
        tol_abs = cfg.solver_tol * max(1.0, float(np.max(np.abs(self.y))))

        x = np.zeros(self.op.n)
        fx, rx, zx = self.smooth(x)
        big_f = fx
        gx = self.gradient(rx)
        trace = [big_f]
        residual = self.kkt_residual(x, gx)
        iterations = 0

        if residual > tol_abs:
            lip = self.lipschitz()
            yk = x.copy()
            t = 1.0
            for iterations in range(1, cfg.max_iter + 1):
                fy, ry, _ = self.smooth(yk)
                gy = self.gradient(ry)
                while True:
                    z = np.maximum(yk - (gy + self.linear) / lip, 0.0)
                    fz, rz, zz = self.smooth(z)
                    diff = z - yk
                    bound = fy + float(gy @ diff) + 0.5 * lip * float(diff @ diff)
                    if fz <= bound + 1e-12 * max(1.0, abs(fy)):
                        break
                    lip *= 2.0
                fz_total = fz + float(self.linear @ z)

                x_prev = x
                accepted = fz_total <= big_f
                if accepted:
                    x, big_f, zx = z, fz_total, zz
                    gx = self.gradient(rz)
                    residual = self.kkt_residual(x, gx)
                trace.append(big_f)

                if iterations % LOG_EVERY == 0:
                    logger.debug(
                        f"cvxEDA 迭代 {iterations}: 目标 {big_f:.6e}, KKT 残差 {residual:.3e}, L={lip:.3e}"
                    )
                if residual <= tol_abs:
                    break

                # 单调性拒绝或动量与下降方向相反时重启
                if not accepted or float((yk - z) @ (z - x_prev)) > 0:
                    t = 1.0
                    yk = x.copy()
                    continue
                t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
                yk = x + ((t - 1.0) / t_next) * (x - x_prev)
                t = t_next

        solution = QpSolution(
            p=x,
            lam=zx[: self.kb].copy(),
            d=zx[self.kb:].copy(),
            objective_trace=np.asarray(trace),
            residual=residual,
            iterations=iterations,
            converged=residual <= tol_abs,
        )
        if solution.converged:
            logger.debug(f"cvxEDA 收敛: {iterations} 次迭代，目标 {big_f:.6e}")
        elif strict:
            raise NoConvergence(
                f"{cfg.max_iter} 次迭代后 KKT 残差 {residual:.3e} > {tol_abs:.3e}",
                best=solution,
            )
        return solution


def solve_qp(y, op: PhasicOperator, basis: TonicBasis, cfg: CvxedaConfig,
             strict: bool = True) -> QpSolution:
    """求解分解 QP; strict 时未收敛抛 NoConvergence(best 为最优迭代点)"""
    return QpProblem(y, op, basis, cfg).solve(strict=strict)
