"""Transmit chain and real AWGN multiple-access channel.

Column indices are 0-based in every array; a preamble read as a big-endian
integer ``p`` selects column ``p`` (reported as sequence ``p + 1``).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ldpc.code import LdpcCode

__all__ = [
    "SystemParams",
    "SignatureDictionary",
    "TransmissionScenario",
    "ReceivedFrame",
    "derive_noise_variance",
    "generate_dictionary",
    "bits_to_int",
    "int_to_bits",
    "split_message",
    "modulate",
    "encode_user",
    "scenario_from_messages",
    "random_scenario",
    "transmit",
]


@dataclass(frozen=True)
class SystemParams:
    """Frame dimensions and operating point.

    ``ktot`` is carried for bookkeeping only; the common codebook makes the
    total population irrelevant to encoding and decoding.
    """

    ka: int = 25
    b: int = 100
    n: int = 30000
    bp: int = 12
    n_p: int = 84
    ebn0_db: float = 0.0
    ktot: int = 0

    def __post_init__(self):
        if self.ka < 1:
            raise ValueError("ka must be >= 1")
        if not 0 < self.bp < self.b:
            raise ValueError(f"need 0 < bp < b, got bp={self.bp}, b={self.b}")
        if self.n_p < 1 or self.n < self.n_p:
            raise ValueError(f"need 1 <= n_p <= n, got n_p={self.n_p}, n={self.n}")
        if self.nc <= self.bc:
            raise ValueError(f"codelength {self.nc} must exceed payload {self.bc}")

    @property
    def bc(self) -> int:
        return self.b - self.bp

    @property
    def nc(self) -> int:
        return self.n // self.n_p

    @property
    def num_sequences(self) -> int:
        return 2 ** self.bp

    @property
    def column_energy(self) -> float:
        return self.n / self.nc

    @property
    def sigma2(self) -> float:
        return derive_noise_variance(self.n, self.b, self.ebn0_db)

    @property
    def code_rate(self) -> float:
        return self.bc / self.nc


def derive_noise_variance(n: int, b: int, ebn0_db: float) -> float:
    """Noise variance with ``Eb/N0 = n / (2 b sigma^2)``."""
    if n <= 0 or b <= 0:
        raise ValueError("n and b must be positive")
    return n / (2.0 * b * 10.0 ** (ebn0_db / 10.0))


@dataclass
class SignatureDictionary:
    """Spreading matrix ``A`` (``n_p x 2^bp``), every column of energy ``energy``."""

    A: np.ndarray
    energy: float

    @property
    def n_p(self) -> int:
        return self.A.shape[0]

    @property
    def size(self) -> int:
        return self.A.shape[1]

    def save(self, path) -> None:
        """Binary export: two little-endian int64 (rows, cols), then column-major float64."""
        with open(path, "wb") as fh:
            fh.write(struct.pack("<qq", *self.A.shape))
            fh.write(np.asfortranarray(self.A, dtype="<f8").tobytes(order="F"))

    @classmethod
    def load(cls, path) -> "SignatureDictionary":
        raw = Path(path).read_bytes()
        if len(raw) < 16:
            raise ValueError(f"{path}: truncated dictionary header")
        rows, cols = struct.unpack("<qq", raw[:16])
        body = np.frombuffer(raw[16:], dtype="<f8")
        if body.size != rows * cols:
            raise ValueError(f"{path}: expected {rows * cols} entries, found {body.size}")
        A = body.reshape((rows, cols), order="F").astype(float)
        return cls(A, float(np.mean(np.sum(A**2, axis=0))))


def generate_dictionary(n_p: int, bp: int, energy: float, seed) -> SignatureDictionary:
    """I.i.d. Gaussian columns rescaled to squared norm ``energy``."""
    if n_p < 1 or bp < 1:
        raise ValueError("n_p and bp must be >= 1")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n_p, 2 ** bp))
    A *= np.sqrt(energy) / np.linalg.norm(A, axis=0)
    return SignatureDictionary(A, float(energy))


def bits_to_int(bits) -> int:
    out = 0
    for b in np.asarray(bits, dtype=np.uint8):
        out = (out << 1) | int(b)
    return out


def int_to_bits(value: int, width: int) -> np.ndarray:
    return np.array([(value >> (width - 1 - k)) & 1 for k in range(width)], dtype=np.uint8)


def split_message(bits, bp: int):
    """Return ``(preamble, payload)``."""
    bits = np.asarray(bits, dtype=np.uint8)
    return bits[:bp], bits[bp:]


def modulate(codeword) -> np.ndarray:
    """BPSK: bit 0 -> +1, bit 1 -> -1."""
    return 1.0 - 2.0 * np.asarray(codeword, dtype=float)


def encode_user(message, code: LdpcCode, dictionary: SignatureDictionary, bp: int) -> np.ndarray:
    """Flat transmit vector ``v (x) a_j`` of length ``nc * n_p``."""
    preamble, payload = split_message(message, bp)
    if payload.size != code.k:
        raise ValueError(f"payload has {payload.size} bits, code expects {code.k}")
    if 2 ** bp != dictionary.size:
        raise ValueError(f"bp={bp} does not match dictionary with {dictionary.size} columns")
    v = modulate(code.encode(payload))
    return np.kron(v, dictionary.A[:, bits_to_int(preamble)])


@dataclass
class TransmissionScenario:
    """Messages of the ``ka`` active users and what they put on the air.

    ``columns[k]`` is the 0-based dictionary column picked by user ``k``;
    ``codewords[k]`` its LDPC codeword.
    """

    messages: np.ndarray   # (ka, b) uint8
    columns: np.ndarray    # (ka,) int
    codewords: np.ndarray  # (ka, nc) uint8

    @property
    def ka(self) -> int:
        return self.messages.shape[0]

    @property
    def active(self) -> set:
        return set(int(c) for c in self.columns)

    @property
    def collisions(self) -> dict:
        """``{column: [users]}`` for every column picked by two or more users."""
        groups = {}
        for k, c in enumerate(self.columns):
            groups.setdefault(int(c), []).append(k)
        return {c: users for c, users in groups.items() if len(users) > 1}

    def aggregate_symbols(self, num_sequences: int) -> dict:
        """Sparse ``{column: sum of BPSK words}`` over the active set."""
        agg = {}
        for c, cw in zip(self.columns, self.codewords):
            agg[int(c)] = agg.get(int(c), 0.0) + modulate(cw)
        return agg


def scenario_from_messages(messages, code: LdpcCode, bp: int) -> TransmissionScenario:
    messages = np.atleast_2d(np.asarray(messages, dtype=np.uint8))
    columns = np.array([bits_to_int(m[:bp]) for m in messages], dtype=np.int64)
    codewords = code.encode(messages[:, bp:])
    return TransmissionScenario(messages, columns, codewords)


def random_scenario(params: SystemParams, code: LdpcCode, rng) -> TransmissionScenario:
    """Draw ``ka`` independent uniform ``b``-bit messages."""
    rng = np.random.default_rng(rng)
    messages = rng.integers(0, 2, size=(params.ka, params.b), dtype=np.uint8)
    return scenario_from_messages(messages, code, params.bp)


@dataclass
class ReceivedFrame:
    """Received signal reshaped to ``n_p x nc``: column ``i`` is the section of symbol ``i``."""

    Y: np.ndarray
    sigma2: float

    @property
    def flat(self) -> np.ndarray:
        return self.Y.flatten(order="F")

    @classmethod
    def from_flat(cls, y, n_p: int, sigma2: float) -> "ReceivedFrame":
        y = np.asarray(y, dtype=float)
        nc = y.size // n_p
        # trailing channel uses beyond nc * n_p carry nothing
        return cls(y[: nc * n_p].reshape((n_p, nc), order="F"), sigma2)


def transmit(scenario: TransmissionScenario, dictionary: SignatureDictionary,
             sigma2: float, rng) -> ReceivedFrame:
    """``Y = A V~ + Z`` with i.i.d. ``N(0, sigma2)`` noise."""
    rng = np.random.default_rng(rng)
    nc = scenario.codewords.shape[1]
    agg = scenario.aggregate_symbols(dictionary.size)
    cols = np.array(sorted(agg), dtype=np.int64)
    V = np.array([agg[c] for c in cols]).reshape(len(cols), nc)
    Y = dictionary.A[:, cols] @ V
    Y += np.sqrt(sigma2) * rng.standard_normal(Y.shape)
    return ReceivedFrame(Y, float(sigma2))
