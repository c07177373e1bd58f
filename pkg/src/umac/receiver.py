"""Iterative receiver: energy detection, joint MMSE/BP decoding, hard SIC."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .detector import detect_active
from .ldpc.bp import LLR_CLIP, BeliefState, HardDecision, bp_round, hard_decision
from .ldpc.code import LdpcCode
from .mmse import GAMMA_MIN, mmse_pass
from .phy import ReceivedFrame, SignatureDictionary, TransmissionScenario, int_to_bits, modulate

__all__ = [
    "ReceiverConfig",
    "RoundTrace",
    "DecodeOutcome",
    "inner_loop",
    "subtract_valid",
    "decode",
    "per_user_error",
    "format_trace",
]


@dataclass(frozen=True)
class ReceiverConfig:
    joint_iters: int = 20
    bp_iters_per_mmse: int = 1
    max_outer_iters: int = 15
    llr_clip: float = LLR_CLIP
    gamma_min: float = GAMMA_MIN

    def __post_init__(self):
        for name in ("joint_iters", "bp_iters_per_mmse", "max_outer_iters"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.llr_clip <= 0:
            raise ValueError("llr_clip must be positive")
        if not 0.0 < self.gamma_min < 0.5:
            raise ValueError("gamma_min must lie in (0, 0.5)")


@dataclass
class RoundTrace:
    round: int
    detected: list
    valid: list
    residual_energy: float
    joint_iters_used: int


@dataclass
class DecodeOutcome:
    messages: list = field(default_factory=list)   # recovered B-bit uint8 arrays
    rounds: list = field(default_factory=list)      # RoundTrace per outer iteration
    reason: str = ""

    def message_set(self) -> set:
        return {m.tobytes() for m in self.messages}


def inner_loop(Y: np.ndarray, S: np.ndarray, sigma2: float, code: LdpcCode,
               cfg: ReceiverConfig):
    """Alternate MMSE passes and BP rounds for the detected sequences.

    Returns ``(state, decision, iterations_used)``; ``decision.syndrome_ok``
    marks the valid set.
    """
    state = BeliefState.initial(code, S.shape[1], clip=cfg.llr_clip)
    used = 0
    decision = None
    for used in range(1, cfg.joint_iters + 1):
        out = mmse_pass(Y, S, state.to_mac, sigma2, cfg.gamma_min, cfg.llr_clip)
        state.from_mac = out.llr
        bp_round(state, cfg.bp_iters_per_mmse)
        decision = hard_decision(state)
        if decision.syndrome_ok.all():
            break
    return state, decision, used


def subtract_valid(Y: np.ndarray, S: np.ndarray, decision: HardDecision) -> np.ndarray:
    """Remove the re-modulated valid codewords from every section."""
    ok = np.asarray(decision.syndrome_ok, dtype=bool)
    if not ok.any():
        return Y.copy()
    return Y - S[:, ok] @ modulate(decision.bits[ok])


def decode(frame: ReceivedFrame, dictionary: SignatureDictionary, code: LdpcCode,
           ka: int, cfg: ReceiverConfig | None = None) -> DecodeOutcome:
    """Recover up to ``ka`` messages from ``frame``."""
    if ka < 1:
        raise ValueError("ka must be >= 1")
    cfg = cfg or ReceiverConfig()
    bp = int(round(np.log2(dictionary.size)))
    outcome = DecodeOutcome()
    seen = set()
    Y = frame.Y.copy()
    for rnd in range(1, cfg.max_outer_iters + 1):
        det = detect_active(Y, dictionary.A, ka - len(outcome.messages))
        S = dictionary.A[:, det.indices]
        _, decision, used = inner_loop(Y, S, frame.sigma2, code, cfg)
        valid = np.nonzero(decision.syndrome_ok)[0]
        for j in valid:
            msg = np.concatenate([int_to_bits(int(det.indices[j]), bp),
                                  code.extract_message(decision.bits[j])])
            key = msg.tobytes()
            if key not in seen:
                seen.add(key)
                outcome.messages.append(msg)
        Y = subtract_valid(Y, S, decision)
        outcome.rounds.append(RoundTrace(rnd, det.indices.tolist(), det.indices[valid].tolist(),
                                         float(np.sum(Y**2)), used))
        if valid.size == 0:
            outcome.reason = "no valid codewords"
            break
        if len(outcome.messages) >= ka:
            outcome.reason = "all users decoded"
            break
    else:
        outcome.reason = "outer iteration cap"
    return outcome


def per_user_error(scenario: TransmissionScenario, outcome: DecodeOutcome) -> float:
    """Fraction of transmitted messages missing from the decoded list."""
    found = outcome.message_set()
    missed = sum(m.tobytes() not in found for m in scenario.messages)
    return missed / scenario.ka


def format_trace(outcome: DecodeOutcome) -> str:
    """``round,detected,valid,residual_energy`` lines; indices are 1-based, ``;``-joined."""
    lines = ["round,detected,valid,residual_energy"]
    for r in outcome.rounds:
        det = ";".join(str(j + 1) for j in r.detected)
        val = ";".join(str(j + 1) for j in r.valid)
        lines.append(f"{r.round},{det},{val},{r.residual_energy!r}")
    return "\n".join(lines) + "\n"
