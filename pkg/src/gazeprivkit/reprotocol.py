"""Two-party kernel computation through additive randomized encodings.

Alice and Bob hold feature matrices X and Y (features in rows, samples in
columns). Alice draws mask vectors r1, r2 and a scalar r3 and shares them with
Bob; the parties publish

    C1 = X + r1,  C3_i = sum_d (r2 * X_:i)_d + r3
    C2 = Y + r2,  C4_j = sum_d (r1 * Y_:j + r1 * r2)_d - r3

and an untrusted server recovers every cross inner product as
``C1_:i . C2_:j - C3_i - C4_j`` without seeing raw samples. Together with the
parties' local gram blocks this yields the pooled linear kernel, from which an
RBF kernel follows entrywise via ``exp(-gamma * (k_xx - 2 k_xy + k_yy))``.
Kernel ridge regression on the pooled kernel then predicts (pitch, yaw) gaze
targets.

With ``quantum`` set, features and masks live on a dyadic lattice where every
intermediate product and sum is exactly representable in float64, so the
decoded gram (and everything downstream) is bit-identical to the plaintext
pooled computation; with continuous masks the decode is exact up to a 1e-9
relative floating-point residue.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._rng import derived_rng
from .errors import HandshakeError, KernelIntegrityError, ProtocolError

_DOT_PRODUCT_KINDS = ("mask-vectors", "alice-share", "bob-share")


def communication_cost_bytes(n_features: int, n_alice: int, n_bob: int, d: int = 8) -> int:
    """Bytes moved to compute the cross gram: both encodings plus the mask vectors."""
    if min(n_features, n_alice, n_bob, d) < 1:
        raise ValueError("all dimensions must be >= 1")
    return (n_features * n_alice + n_features * n_bob + n_alice + n_bob + 2 * n_features) * d


# ---------------------------------------------------------------------------
# Masks and encodings


@dataclass(frozen=True)
class MaskTriple:
    r1: np.ndarray
    r2: np.ndarray
    r3: float

    def __post_init__(self) -> None:
        r1 = np.asarray(self.r1, dtype=np.float64)
        r2 = np.asarray(self.r2, dtype=np.float64)
        if r1.ndim != 1 or r1.shape != r2.shape:
            raise ValueError("r1 and r2 must be 1-d vectors of equal length")
        object.__setattr__(self, "r1", r1)
        object.__setattr__(self, "r2", r2)
        object.__setattr__(self, "r3", float(self.r3))


def gen_masks(
    n_features: int,
    rng: np.random.Generator,
    bound: float = 1e3,
    quantum: float | None = None,
) -> MaskTriple:
    """Uniform masks on [-bound, bound]; with ``quantum`` set, on its dyadic lattice."""
    if n_features < 1:
        raise ValueError("n_features must be >= 1")
    if bound <= 0:
        raise ValueError("bound must be positive")
    if quantum is None:
        r1 = rng.uniform(-bound, bound, n_features)
        r2 = rng.uniform(-bound, bound, n_features)
        r3 = float(rng.uniform(-bound, bound))
    else:
        if quantum <= 0 or quantum > bound:
            raise ValueError("need 0 < quantum <= bound")
        levels = int(bound / quantum)
        r1 = rng.integers(-levels, levels + 1, n_features) * quantum
        r2 = rng.integers(-levels, levels + 1, n_features) * quantum
        r3 = float(rng.integers(-levels, levels + 1)) * quantum
    return MaskTriple(r1, r2, r3)


@dataclass(frozen=True)
class EncodedShare:
    """Published encoding of one party's samples: masked columns plus scalars."""

    matrix_part: np.ndarray  # (n_features, n_samples)
    scalar_part: np.ndarray  # (n_samples,)

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix_part, dtype=np.float64)
        s = np.asarray(self.scalar_part, dtype=np.float64)
        if m.ndim != 2 or s.ndim != 1 or m.shape[1] != len(s):
            raise ValueError("matrix_part must be (n_features, n) with matching scalars")
        object.__setattr__(self, "matrix_part", m)
        object.__setattr__(self, "scalar_part", s)


def _check_features(X: np.ndarray, masks: MaskTriple) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("features must be 2-d (n_features x n_samples)")
    if X.shape[0] != len(masks.r1):
        raise ValueError(f"mask dimension {len(masks.r1)} != feature dimension {X.shape[0]}")
    return X


def encode_alice(X: np.ndarray, masks: MaskTriple) -> EncodedShare:
    """C1 = X + r1 (per column); C3_i = r2 . X_:i + r3."""
    X = _check_features(X, masks)
    c1 = X + masks.r1[:, None]
    c3 = masks.r2 @ X + masks.r3
    return EncodedShare(c1, c3)


def encode_bob(Y: np.ndarray, masks: MaskTriple) -> EncodedShare:
    """C2 = Y + r2 (per column); C4_j = r1 . Y_:j + r1 . r2 - r3."""
    Y = _check_features(Y, masks)
    c2 = Y + masks.r2[:, None]
    c4 = masks.r1 @ Y + float(np.dot(masks.r1, masks.r2)) - masks.r3
    return EncodedShare(c2, c4)


def decode_cross_gram(alice: EncodedShare, bob: EncodedShare) -> np.ndarray:
    """Cross inner products X^T Y from the two encodings; masks cancel exactly."""
    if alice.matrix_part.shape[0] != bob.matrix_part.shape[0]:
        raise ValueError("encodings disagree on the feature dimension")
    return (
        alice.matrix_part.T @ bob.matrix_part
        - alice.scalar_part[:, None]
        - bob.scalar_part[None, :]
    )


# ---------------------------------------------------------------------------
# Kernel assembly


def _check_symmetric(block: np.ndarray, name: str) -> None:
    scale = max(1.0, float(np.max(np.abs(block))) if block.size else 0.0)
    if float(np.max(np.abs(block - block.T))) > 1e-6 * scale:
        raise KernelIntegrityError(f"{name} gram block is not symmetric")


def rbf_from_linear_gram(gram: np.ndarray, gamma: float) -> np.ndarray:
    """Entrywise exp(-gamma * (k_xx - 2 k_xy + k_yy)) over a full linear gram."""
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    diag = np.diag(gram)
    sq = np.maximum(diag[:, None] - 2.0 * gram + diag[None, :], 0.0)
    return np.exp(-gamma * sq)


def rbf_cross(
    diag_rows: np.ndarray, cross: np.ndarray, diag_cols: np.ndarray, gamma: float
) -> np.ndarray:
    """RBF block from a linear cross block and the two diagonals of self products."""
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    sq = np.maximum(
        np.asarray(diag_rows)[:, None] - 2.0 * cross + np.asarray(diag_cols)[None, :], 0.0
    )
    return np.exp(-gamma * sq)


def assemble_kernel(
    gram_aa: np.ndarray,
    gram_ab: np.ndarray,
    gram_bb: np.ndarray,
    kernel: str = "linear",
    gamma: float | None = None,
) -> np.ndarray:
    """Pooled kernel from the three gram blocks (Alice-Alice, Alice-Bob, Bob-Bob)."""
    aa = np.asarray(gram_aa, dtype=np.float64)
    ab = np.asarray(gram_ab, dtype=np.float64)
    bb = np.asarray(gram_bb, dtype=np.float64)
    if aa.shape != (ab.shape[0], ab.shape[0]) or bb.shape != (ab.shape[1], ab.shape[1]):
        raise ValueError("gram block shapes are inconsistent")
    _check_symmetric(aa, "alice")
    _check_symmetric(bb, "bob")
    full = np.block([[aa, ab], [ab.T, bb]])
    if kernel == "linear":
        return full
    if kernel == "rbf":
        if gamma is None:
            raise ValueError("rbf kernel needs gamma")
        return rbf_from_linear_gram(full, gamma)
    raise ValueError(f"unknown kernel {kernel!r}")


# ---------------------------------------------------------------------------
# Kernel ridge regression on (pitch, yaw) targets


def pitchyaw_to_vector(pitchyaw: np.ndarray) -> np.ndarray:
    """Unit gaze vectors from (pitch, yaw) radians."""
    py = np.asarray(pitchyaw, dtype=np.float64)
    pitch, yaw = py[..., 0], py[..., 1]
    return np.stack(
        [np.cos(pitch) * np.sin(yaw), np.sin(pitch), np.cos(pitch) * np.cos(yaw)],
        axis=-1,
    )


def mean_angular_error(true_pitchyaw: np.ndarray, pred_pitchyaw: np.ndarray) -> float:
    """Mean angle (radians) between true and predicted gaze vectors."""
    a = pitchyaw_to_vector(true_pitchyaw)
    b = pitchyaw_to_vector(pred_pitchyaw)
    if a.shape != b.shape:
        raise ValueError("target arrays must have equal shapes")
    dots = np.clip(np.sum(a * b, axis=-1), -1.0, 1.0)
    return float(np.mean(np.arccos(dots)))


@dataclass
class KernelRidgeModel:
    """Kernel ridge regressor carrying its dual coefficients (n_train, n_targets)."""

    dual_coef: np.ndarray

    @classmethod
    def fit(cls, K_train: np.ndarray, y_train: np.ndarray, ridge: float) -> "KernelRidgeModel":
        K = np.asarray(K_train, dtype=np.float64)
        y = np.asarray(y_train, dtype=np.float64)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise ValueError("K_train must be square")
        if y.ndim != 2 or y.shape[0] != K.shape[0]:
            raise ValueError("y_train must be (n_train, n_targets)")
        if ridge < 0:
            raise ValueError("ridge must be nonnegative")
        system = K + ridge * np.eye(K.shape[0])
        return cls(np.linalg.solve(system, y))  # singular at ridge=0 raises LinAlgError

    def predict(self, K_cross: np.ndarray) -> np.ndarray:
        K = np.asarray(K_cross, dtype=np.float64)
        if K.ndim != 2 or K.shape[0] != self.dual_coef.shape[0]:
            raise ValueError("K_cross must be (n_train, n_test)")
        return K.T @ self.dual_coef


def krr_fit_predict(
    K_train: np.ndarray,
    y_train: np.ndarray,
    K_cross: np.ndarray,
    ridge: float,
    y_test: np.ndarray | None = None,
) -> tuple[np.ndarray, float | None]:
    """Fit on the train kernel, predict the cross block, optionally score angularly."""
    model = KernelRidgeModel.fit(K_train, y_train, ridge)
    predictions = model.predict(K_cross)
    error = mean_angular_error(y_test, predictions) if y_test is not None else None
    return predictions, error


# ---------------------------------------------------------------------------
# Protocol runtime


@dataclass(frozen=True)
class Message:
    step: int
    sender: str
    recipient: str
    kind: str
    payload: dict


def _payload_bytes(payload: dict) -> int:
    total = 0
    for value in payload.values():
        if isinstance(value, np.ndarray):
            total += value.nbytes
        else:
            total += len(json.dumps(value).encode())
    return total


def _payload_hash(payload: dict) -> str:
    digest = hashlib.sha256()
    for name in sorted(payload):
        value = payload[name]
        digest.update(name.encode())
        if isinstance(value, np.ndarray):
            digest.update(str(value.dtype).encode())
            digest.update(str(value.shape).encode())
            digest.update(np.ascontiguousarray(value).tobytes())
        else:
            digest.update(json.dumps(value, sort_keys=True).encode())
    return digest.hexdigest()


@dataclass
class TranscriptEntry:
    step: int
    sender: str
    recipient: str
    kind: str
    payload_bytes: int
    payload_hash: str
    payload: dict = field(repr=False, default_factory=dict)


@dataclass
class Transcript:
    """Ordered record of every protocol message."""

    entries: list[TranscriptEntry] = field(default_factory=list)

    def record(self, message: Message) -> None:
        self.entries.append(
            TranscriptEntry(
                message.step, message.sender, message.recipient, message.kind,
                _payload_bytes(message.payload), _payload_hash(message.payload),
                message.payload,
            )
        )

    @property
    def total_payload_bytes(self) -> int:
        return sum(e.payload_bytes for e in self.entries)

    @property
    def dot_product_payload_bytes(self) -> int:
        """Bytes of the cross-gram computation itself: mask vectors and encodings."""
        return sum(e.payload_bytes for e in self.entries if e.kind in _DOT_PRODUCT_KINDS)

    def to_jsonl(self) -> str:
        lines = [
            json.dumps(
                {
                    "step": e.step,
                    "from": e.sender,
                    "to": e.recipient,
                    "kind": e.kind,
                    "payload_bytes": e.payload_bytes,
                    "payload_hash": e.payload_hash,
                },
                sort_keys=True,
            )
            for e in self.entries
        ]
        return "\n".join(lines) + "\n"


@dataclass
class PartyData:
    """One input party's samples: features (n_features x n) and (pitch, yaw) targets."""

    features: np.ndarray
    targets: np.ndarray

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64)
        self.targets = np.asarray(self.targets, dtype=np.float64)
        if self.features.ndim != 2:
            raise ValueError("features must be (n_features, n_samples)")
        if self.targets.shape != (self.features.shape[1], 2):
            raise ValueError("targets must be (n_samples, 2)")


@dataclass(frozen=True)
class ProtocolConfig:
    kernel: str = "rbf"
    gamma: float | None = None
    ridge: float = 1e-6
    mask_bound: float = 1e3
    quantum: float | None = None
    test_fraction: float = 0.2

    def __post_init__(self) -> None:
        if self.kernel not in ("linear", "rbf"):
            raise ValueError("kernel must be 'linear' or 'rbf'")
        if self.kernel == "rbf" and (self.gamma is None or self.gamma < 0):
            raise ValueError("rbf kernel needs a nonnegative gamma")
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must be in (0, 1)")
        if self.mask_bound <= 0:
            raise ValueError("mask_bound must be positive")
        if self.quantum is not None and not 0 < self.quantum <= self.mask_bound:
            raise ValueError("need 0 < quantum <= mask_bound")
        if self.ridge < 0:
            raise ValueError("ridge must be nonnegative")


@dataclass
class ProtocolResult:
    predictions: np.ndarray          # pooled test predictions (n_test, 2)
    test_targets: np.ndarray         # pooled true test targets, party-held
    mean_angular_error: float
    kernel: np.ndarray               # server-side pooled kernel
    transcript: Transcript


def _quantize(values: np.ndarray, quantum: float | None) -> np.ndarray:
    if quantum is None:
        return values
    return np.round(values / quantum) * quantum


class _Party:
    def __init__(self, name: str, expected: Sequence[str]):
        self.name = name
        self._expected = list(expected)

    def take(self, message: Message, kind: str) -> dict:
        if message.recipient != self.name:
            raise ProtocolError(f"{self.name} received a message addressed to {message.recipient}")
        if not self._expected:
            raise ProtocolError(f"{self.name} expected no further messages, got {message.kind!r}")
        if message.kind != kind or self._expected[0] != kind:
            raise ProtocolError(
                f"{self.name} expected {self._expected[0]!r}, got {message.kind!r}"
            )
        self._expected.pop(0)
        return message.payload


class AliceParty(_Party):
    """Mask creator; encodes her samples and later receives her predictions."""

    def __init__(self, features: np.ndarray, targets: np.ndarray, test_mask: np.ndarray):
        super().__init__("alice", ["predictions"])
        self.features = features
        self.targets = targets
        self.test_mask = test_mask
        self.masks: MaskTriple | None = None
        self.predictions: np.ndarray | None = None

    def create_masks(self, rng: np.random.Generator, bound: float, quantum: float | None) -> None:
        self.masks = gen_masks(self.features.shape[0], rng, bound, quantum)

    def encode(self) -> EncodedShare:
        assert self.masks is not None
        return encode_alice(self.features, self.masks)

    def gram(self) -> np.ndarray:
        return self.features.T @ self.features

    def receive_predictions(self, message: Message) -> None:
        self.predictions = self.take(message, "predictions")["values"]


class BobParty(_Party):
    """Receives the masks, encodes his samples, later receives his predictions."""

    def __init__(self, features: np.ndarray, targets: np.ndarray, test_mask: np.ndarray):
        super().__init__("bob", ["handshake", "mask-vectors", "mask-scalar", "predictions"])
        self.features = features
        self.targets = targets
        self.test_mask = test_mask
        self.masks: MaskTriple | None = None
        self._vectors: np.ndarray | None = None
        self.predictions: np.ndarray | None = None

    def receive_handshake(self, message: Message) -> None:
        payload = self.take(message, "handshake")
        if payload["n_features"] != self.features.shape[0]:
            raise HandshakeError(
                f"alice announces {payload['n_features']} features, bob holds "
                f"{self.features.shape[0]}"
            )

    def receive_mask_vectors(self, message: Message) -> None:
        vectors = self.take(message, "mask-vectors")["vectors"]
        if vectors.shape != (2, self.features.shape[0]):
            raise HandshakeError("mask vectors do not match the feature dimension")
        self._vectors = vectors

    def receive_mask_scalar(self, message: Message) -> None:
        scalar = self.take(message, "mask-scalar")["value"]
        assert self._vectors is not None
        self.masks = MaskTriple(self._vectors[0], self._vectors[1], float(scalar[0]))

    def encode(self) -> EncodedShare:
        assert self.masks is not None
        return encode_bob(self.features, self.masks)

    def gram(self) -> np.ndarray:
        return self.features.T @ self.features

    def receive_predictions(self, message: Message) -> None:
        self.predictions = self.take(message, "predictions")["values"]


class ServerParty(_Party):
    """Untrusted aggregator: decodes the cross gram and runs the regression."""

    _ORDER = [
        "handshake", "handshake",
        "alice-share", "alice-gram", "alice-roles", "alice-targets",
        "bob-share", "bob-gram", "bob-roles", "bob-targets",
    ]

    def __init__(self, config: ProtocolConfig):
        super().__init__("server", list(self._ORDER))
        self.config = config
        self.n_features: int | None = None
        self.shares: dict[str, EncodedShare] = {}
        self.grams: dict[str, np.ndarray] = {}
        self.roles: dict[str, np.ndarray] = {}
        self.targets: dict[str, np.ndarray] = {}

    def receive(self, message: Message) -> None:
        payload = self.take(message, message.kind)
        if message.kind == "handshake":
            if self.n_features is None:
                self.n_features = payload["n_features"]
            elif payload["n_features"] != self.n_features:
                raise HandshakeError(
                    f"parties disagree on the feature dimension: "
                    f"{self.n_features} vs {payload['n_features']}"
                )
            return
        party, item = message.kind.split("-", 1)
        if item == "share":
            self.shares[party] = EncodedShare(payload["matrix"], payload["scalars"])
        elif item == "gram":
            self.grams[party] = payload["values"]
        elif item == "roles":
            self.roles[party] = payload["test_mask"]
        elif item == "targets":
            self.targets[party] = payload["values"]

    def compute(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Returns (kernel, predictions_alice, predictions_bob, pooled predictions)."""
        cross = decode_cross_gram(self.shares["alice"], self.shares["bob"])
        kernel = assemble_kernel(
            self.grams["alice"], cross, self.grams["bob"],
            kernel=self.config.kernel, gamma=self.config.gamma,
        )
        test = np.concatenate([self.roles["alice"], self.roles["bob"]])
        train = ~test
        y_train = np.vstack([self.targets["alice"], self.targets["bob"]])
        model = KernelRidgeModel.fit(kernel[np.ix_(train, train)], y_train, self.config.ridge)
        predictions = model.predict(kernel[np.ix_(train, test)])
        n_test_alice = int(np.sum(self.roles["alice"]))
        return kernel, predictions[:n_test_alice], predictions[n_test_alice:], predictions


def _prepare_party(data: PartyData, name: str, config: ProtocolConfig,
                   base_seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Quantize (optionally), shuffle sample order, and mark the test tail."""
    features = _quantize(data.features, config.quantum)
    n = features.shape[1]
    perm = derived_rng(base_seed, "shuffle", name).permutation(n)
    features = features[:, perm]
    targets = data.targets[perm]
    n_test = max(1, int(round(config.test_fraction * n)))
    if n_test >= n:
        raise ValueError(f"{name}: test fraction leaves no training samples")
    test_mask = np.zeros(n, dtype=bool)
    test_mask[n - n_test:] = True
    return features, targets, test_mask


def run_protocol(
    alice_data: PartyData,
    bob_data: PartyData,
    config: ProtocolConfig,
    base_seed: int = 0,
) -> ProtocolResult:
    """Drive the three-party protocol over ordered channels and keep a transcript.

    Both parties shuffle their sample order (seeded) before encoding so the
    published column order carries no temporal information. The driver executes
    the fixed message schedule; every message is validated by its recipient's
    state machine and recorded with payload byte counts and hashes.
    """
    if alice_data.features.shape[0] != bob_data.features.shape[0]:
        raise HandshakeError("parties hold different feature dimensions")
    a_feat, a_targ, a_test = _prepare_party(alice_data, "alice", config, base_seed)
    b_feat, b_targ, b_test = _prepare_party(bob_data, "bob", config, base_seed)
    alice = AliceParty(a_feat, a_targ, a_test)
    bob = BobParty(b_feat, b_targ, b_test)
    server = ServerParty(config)
    transcript = Transcript()
    step = 0

    def send(sender: str, recipient: str, kind: str, payload: dict) -> Message:
        nonlocal step
        step += 1
        message = Message(step, sender, recipient, kind, payload)
        transcript.record(message)
        return message

    n_features = a_feat.shape[0]
    server.receive(send("alice", "server", "handshake",
                        {"n_features": n_features, "n_samples": a_feat.shape[1]}))
    server.receive(send("bob", "server", "handshake",
                        {"n_features": n_features, "n_samples": b_feat.shape[1]}))
    bob.receive_handshake(send("alice", "bob", "handshake", {"n_features": n_features}))

    alice.create_masks(derived_rng(base_seed, "masks"), config.mask_bound, config.quantum)
    assert alice.masks is not None
    bob.receive_mask_vectors(
        send("alice", "bob", "mask-vectors",
             {"vectors": np.vstack([alice.masks.r1, alice.masks.r2])})
    )
    bob.receive_mask_scalar(
        send("alice", "bob", "mask-scalar", {"value": np.array([alice.masks.r3])})
    )

    a_share = alice.encode()
    server.receive(send("alice", "server", "alice-share",
                        {"matrix": a_share.matrix_part, "scalars": a_share.scalar_part}))
    server.receive(send("alice", "server", "alice-gram", {"values": alice.gram()}))
    server.receive(send("alice", "server", "alice-roles", {"test_mask": a_test}))
    server.receive(send("alice", "server", "alice-targets", {"values": a_targ[~a_test]}))

    b_share = bob.encode()
    server.receive(send("bob", "server", "bob-share",
                        {"matrix": b_share.matrix_part, "scalars": b_share.scalar_part}))
    server.receive(send("bob", "server", "bob-gram", {"values": bob.gram()}))
    server.receive(send("bob", "server", "bob-roles", {"test_mask": b_test}))
    server.receive(send("bob", "server", "bob-targets", {"values": b_targ[~b_test]}))

    kernel, pred_alice, pred_bob, pooled = server.compute()
    alice.receive_predictions(send("server", "alice", "predictions", {"values": pred_alice}))
    bob.receive_predictions(send("server", "bob", "predictions", {"values": pred_bob}))

    test_targets = np.vstack([a_targ[a_test], b_targ[b_test]])
    return ProtocolResult(
        predictions=pooled,
        test_targets=test_targets,
        mean_angular_error=mean_angular_error(test_targets, pooled),
        kernel=kernel,
        transcript=transcript,
    )


def plaintext_reference(
    alice_data: PartyData,
    bob_data: PartyData,
    config: ProtocolConfig,
    base_seed: int = 0,
) -> ProtocolResult:
    """Pooled plaintext pipeline with the identical preparation, kernel, and solve.

    The only difference from run_protocol is that the cross gram is computed
    directly as X^T Y; under a quantized config the protocol run matches this
    reference bit for bit.
    """
    if alice_data.features.shape[0] != bob_data.features.shape[0]:
        raise HandshakeError("parties hold different feature dimensions")
    a_feat, a_targ, a_test = _prepare_party(alice_data, "alice", config, base_seed)
    b_feat, b_targ, b_test = _prepare_party(bob_data, "bob", config, base_seed)
    kernel = assemble_kernel(
        a_feat.T @ a_feat, a_feat.T @ b_feat, b_feat.T @ b_feat,
        kernel=config.kernel, gamma=config.gamma,
    )
    test = np.concatenate([a_test, b_test])
    train = ~test
    y_train = np.vstack([a_targ[~a_test], b_targ[~b_test]])
    model = KernelRidgeModel.fit(kernel[np.ix_(train, train)], y_train, config.ridge)
    predictions = model.predict(kernel[np.ix_(train, test)])
    test_targets = np.vstack([a_targ[a_test], b_targ[b_test]])
    return ProtocolResult(
        predictions=predictions,
        test_targets=test_targets,
        mean_angular_error=mean_angular_error(test_targets, predictions),
        kernel=kernel,
        transcript=Transcript(),
    )
