"""Sum-product belief propagation on a batch of codewords sharing one code.

Messages are natural-log LLRs ``log P(v=+1)/P(v=-1)`` with the BPSK map
``v = 1 - 2u``, so a positive LLR favours bit 0.  Every message family is
kept as a ``(J, ...)`` array, one row per detected spreading sequence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .code import LdpcCode

__all__ = [
    "LLR_CLIP",
    "BeliefState",
    "HardDecision",
    "variable_to_check",
    "check_to_variable",
    "variable_to_mac",
    "bp_round",
    "total_llr",
    "hard_decision",
    "bp_decode",
]

LLR_CLIP = 30.0
_LN2 = np.log(2.0)


@dataclass
class BeliefState:
    """All four message families for ``J`` sequences on one Tanner graph.

    ``v2c``/``c2v`` are ``(J, E)`` in the code's check-major edge order;
    ``to_mac`` (variable to MAC factor) and ``from_mac`` (MAC factor to
    variable, i.e. channel LLRs) are ``(J, n)``.
    """

    code: LdpcCode
    v2c: np.ndarray
    c2v: np.ndarray
    to_mac: np.ndarray
    from_mac: np.ndarray
    clip: float = LLR_CLIP

    @classmethod
    def initial(cls, code: LdpcCode, num_seq: int, channel_llr=None,
                clip: float = LLR_CLIP) -> "BeliefState":
        E, n = code.num_edges, code.n
        if channel_llr is None:
            from_mac = np.zeros((num_seq, n))
        else:
            from_mac = np.clip(np.array(channel_llr, dtype=float).reshape(num_seq, n),
                               -clip, clip)
        return cls(code, np.zeros((num_seq, E)), np.zeros((num_seq, E)),
                   np.zeros((num_seq, n)), from_mac, clip)

    @property
    def num_seq(self) -> int:
        return self.from_mac.shape[0]


@dataclass
class HardDecision:
    bits: np.ndarray          # (J, n) uint8
    syndrome_ok: np.ndarray   # (J,) bool


def _var_sums(code: LdpcCode, edge_msgs: np.ndarray) -> np.ndarray:
    return np.asarray(code.edge_to_var.T @ edge_msgs.T).T


def variable_to_check(state: BeliefState) -> np.ndarray:
    """Channel LLR plus all incoming check messages except the target edge."""
    code = state.code
    total = _var_sums(code, state.c2v) + state.from_mac
    out = total[:, code.edge_var] - state.c2v
    return np.clip(out, -state.clip, state.clip)


def variable_to_mac(state: BeliefState) -> np.ndarray:
    """Extrinsic to the MAC node: sum of check messages, channel term excluded."""
    return np.clip(_var_sums(state.code, state.c2v), -state.clip, state.clip)


def check_to_variable(state: BeliefState) -> np.ndarray:
    """Tanh rule ``2 atanh(prod tanh(M/2))`` over all other edges of the check.

    Evaluated in the log domain: ``log tanh(|x|/2) = log1p(-e^-|x|) - log1p(e^-|x|)``
    and ``2 atanh(e^s) = log1p(e^s) - log(-expm1(s))``, which stays accurate
    when every input is near saturation.
    """
    code = state.code
    x = state.v2c
    ax = np.abs(x)
    zero = ax == 0.0
    neg = x < 0.0
    em = np.exp(-ax)
    with np.errstate(divide="ignore"):
        # log(1 - e^-a), switching form at a = ln 2 for accuracy
        log1m = np.where(ax < _LN2, np.log(-np.expm1(-ax)), np.log1p(-em))
    logabs = np.where(zero, 0.0, log1m - np.log1p(em))
    starts = code.chk_start
    idx = code.edge_chk
    log_sum = np.add.reduceat(logabs, starts, axis=1)[:, idx]
    zero_cnt = np.add.reduceat(zero.astype(np.int64), starts, axis=1)[:, idx]
    neg_cnt = np.add.reduceat(neg.astype(np.int64), starts, axis=1)[:, idx]
    s = np.minimum(log_sum - logabs, 0.0)
    with np.errstate(divide="ignore"):
        mag = np.log1p(np.exp(s)) - np.log(-np.expm1(s))
    mag[(zero_cnt - zero) > 0] = 0.0
    sign = 1.0 - 2.0 * ((neg_cnt - neg) & 1)
    return np.clip(sign * mag, -state.clip, state.clip)


def bp_round(state: BeliefState, iters: int = 1) -> BeliefState:
    """``iters`` flooding rounds (V->C, C->V, V->MAC); updates ``state`` in place."""
    for _ in range(iters):
        state.v2c = variable_to_check(state)
        state.c2v = check_to_variable(state)
        state.to_mac = variable_to_mac(state)
    return state


def total_llr(state: BeliefState) -> np.ndarray:
    return _var_sums(state.code, state.c2v) + state.from_mac


def hard_decision(state: BeliefState, code: LdpcCode | None = None) -> HardDecision:
    """Bit 1 iff the total LLR is negative; an exact zero decides bit 0."""
    code = state.code if code is None else code
    bits = (total_llr(state) < 0.0).astype(np.uint8)
    return HardDecision(bits, code.is_codeword(bits))


def bp_decode(code: LdpcCode, channel_llr, max_iters: int = 50, early_stop: bool = True):
    """Single- or multi-word BP decoding from channel LLRs.

    Returns ``(HardDecision, state, iterations_used)``.
    """
    llr = np.atleast_2d(np.asarray(channel_llr, dtype=float))
    state = BeliefState.initial(code, llr.shape[0], llr)
    used = 0
    for used in range(1, max_iters + 1):
        bp_round(state)
        if early_stop and hard_decision(state).syndrome_ok.all():
            break
    return hard_decision(state), state, used
