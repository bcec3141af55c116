"""Construct, verify and expand: the steps the command line strings together."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from .config import RunConfig
from .errors import IllConditionedSystem
from .frame import FrameSystem, expand, test_function, verify_frame
from .induction import ConstructionResult, recheck, run_induction
from .report import Report
from .translate import TranslateFrame, verify_translate, verify_translate_expansion

log = logging.getLogger(__name__)


def construct(config: RunConfig) -> ConstructionResult:
    return run_induction(config.K, config)


def translate_frame(frame: FrameSystem, config: RunConfig) -> TranslateFrame:
    return TranslateFrame(frame, window=config.x_window, dx=config.x_step)


@dataclass
class Verification:
    report: Report
    frame: FrameSystem | None = None
    tframe: TranslateFrame | None = None
    translate_profile: object = None

    @property
    def passed(self) -> bool:
        return self.report.passed


def verify(result: ConstructionResult, seed: int | None = None, translate: bool = True) -> Verification:
    """Recompute the construction checks, then run the frame and translate suites."""
    cfg = result.config
    seed = cfg.seed if seed is None else seed
    recheck(result)
    rep = Report()
    rep.extend(result.report, prefix="construction.")
    try:
        frame = FrameSystem(result)
    except IllConditionedSystem as exc:
        rep.add("frame.gram_condition", exc.details["condition"], 1e12, "<=")
        return Verification(rep)
    log.info("frame: %d points, Gram condition %.3g", len(frame.points), frame.cond)
    rep.extend(verify_frame(frame, seed, cfg.n_test_functions, cfg.decomposition_samples,
                            waive_derived=bool(result.relaxed)), prefix="frame.")
    out = Verification(rep, frame)
    if translate:
        tf = translate_frame(frame, cfg)
        trep, prof = verify_translate(tf, seed)
        rep.extend(trep, prefix="translate.")
        out.tframe, out.translate_profile = tf, prof
    return out


def expand_both(result: ConstructionResult, spec: str, J: int | None = None, seed: int = 0,
                translate: bool = True):
    """Weighted-side and translate-side profiles of the test function ``spec``.

    Returns ``(weighted, translated, clamped)`` where ``clamped`` tells whether
    ``J`` exceeded the number of frequencies.
    """
    frame = FrameSystem(result)
    f = test_function(spec, frame, seed)
    n = len(frame.points)
    clamped = J is not None and J > n
    weighted = expand(f, frame, J)
    translated = None
    if translate:
        tf = translate_frame(frame, result.config)
        translated = verify_translate_expansion(tf.image(f), tf, J, reference=weighted)
    return weighted, translated, clamped


def summary_table(result: ConstructionResult) -> str:
    from .serialize import SUMMARY_HEADER, summary_rows

    rows = [SUMMARY_HEADER] + [tuple(_fmt(v) for v in r) for r in summary_rows(result)]
    widths = [max(len(str(r[i])) for r in rows) for i in range(len(SUMMARY_HEADER))]
    return "\n".join("  ".join(str(v).rjust(w) for v, w in zip(r, widths)) for r in rows)


def _fmt(v):
    if isinstance(v, float):
        return "inf" if math.isinf(v) else f"{v:.6g}"
    return v
