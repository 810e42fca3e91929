"""把一条 EDA 记录分解为 phasic / tonic / residual"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence

from loguru import logger

from edaffect.core.errors import NoConvergence
from edaffect.core.model import DecomposedEda, EdaTrace
from edaffect.core.signal import validate_trace
from edaffect.cvxeda.config import BatemanIrf, CvxedaConfig
from edaffect.cvxeda.irf import sample_irf
from edaffect.cvxeda.operators import build_phasic_operator, build_tonic_basis
from edaffect.cvxeda.solver import solve_qp


def decompose(trace: EdaTrace, irf: Optional[BatemanIrf] = None,
              cfg: Optional[CvxedaConfig] = None, strict: bool = False) -> DecomposedEda:
    """分解一条记录

    信号先减去最小值再求解，偏移并回 tonic。
    residual = origin − phasic − tonic。

    Args:
        trace: 原始记录
        irf: 冲激响应参数，默认 BatemanIrf()
        cfg: 求解参数，默认 CvxedaConfig()
        strict: 为 True 时未收敛抛 NoConvergence(best 为分解结果)，
            否则记录 WARNING 并返回最优迭代点

    Returns:
        DecomposedEda
    """
    irf = irf or BatemanIrf()
    cfg = cfg or CvxedaConfig()
    validate_trace(trace)

    y = trace.samples
    shift = float(y.min())
    kernel = sample_irf(irf, trace.sampling_hz)
    op = build_phasic_operator(kernel, trace.n_samples, cfg.conv_method)
    basis = build_tonic_basis(trace.n_samples, trace.sampling_hz, cfg.knot_spacing_s)
    solution = solve_qp(y - shift, op, basis, cfg, strict=False)

    phasic = op.apply(solution.p)
    tonic = basis.evaluate(solution.lam, solution.d) + shift
    result = DecomposedEda(
        origin=y,
        phasic=phasic,
        tonic=tonic,
        driver=solution.p,
        residual=y - phasic - tonic,
    )
    if not solution.converged:
        message = (
            f"{trace.subject_id}/{trace.stimulus_id}: {solution.iterations} 次迭代后"
            f"未收敛 (KKT 残差 {solution.residual:.3e})"
        )
        if strict:
            raise NoConvergence(message, best=result)
        logger.warning(f"⚠️ {message}，使用最优迭代点")
    return result


def decompose_many(traces: Sequence[EdaTrace], irf: Optional[BatemanIrf] = None,
                   cfg: Optional[CvxedaConfig] = None, jobs: int = 1) -> List[DecomposedEda]:
    """并行分解多条记录(非严格模式)，结果顺序与输入一致"""
    if jobs <= 1 or len(traces) <= 1:
        return [decompose(t, irf, cfg) for t in traces]
    with ThreadPoolExecutor(max_workers=jobs) as executor:
        return list(executor.map(lambda t: decompose(t, irf, cfg), traces))
