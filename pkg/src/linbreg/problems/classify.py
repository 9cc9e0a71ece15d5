"""Image classification with a small fully-connected network.

The network is rho_1(A_1 rho_2(A_2 ... rho_l(A_l x))) with a single activation
kind shared by all layers; the energy is a data-misfit between the network
output on the training matrix and the one-hot label matrix, plus a small
squared-Frobenius term that bounds the level sets.  The solver sees the
concatenated flattened weight matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..solver import SmoothObjective


# ---------------------------------------------------------------------------
# activations: value and backprop through one layer
# ---------------------------------------------------------------------------

def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class Activation:
    """Elementwise or columnwise layer nonlinearity."""

    def value(self, z):
        raise NotImplementedError

    def backprop(self, z, g):
        """Apply the (transposed) Jacobian at pre-activation z to upstream g."""
        raise NotImplementedError


class Rectifier(Activation):
    """Clipped linear unit min(1, max(0, y)); derivative defined as 0 at the kinks."""

    def value(self, z):
        return np.clip(z, 0.0, 1.0)

    def backprop(self, z, g):
        return g * ((z > 0.0) & (z < 1.0))


class SmoothMax(Activation):
    """Pointwise smooth maximum (y e^{by} + c e^{bc}) / (e^{by} + e^{bc})."""

    def __init__(self, beta: float = 5.0, c: float = 0.0):
        self.beta = float(beta)
        self.c = float(c)

    def value(self, z):
        s = _sigmoid(self.beta * (z - self.c))
        return z * s + self.c * (1.0 - s)

    def backprop(self, z, g):
        s = _sigmoid(self.beta * (z - self.c))
        return g * (s + self.beta * s * (1.0 - s) * (z - self.c))


class SoftMax(Activation):
    """Columnwise soft-max; outputs satisfy the simplex constraint per column."""

    def value(self, z):
        e = np.exp(z - np.max(z, axis=0, keepdims=True))
        return e / np.sum(e, axis=0, keepdims=True)

    def backprop(self, z, g):
        s = self.value(z)
        return s * (g - np.sum(s * g, axis=0, keepdims=True))


def make_activation(kind: str, beta: float = 5.0, c: float = 0.0) -> Activation:
    if kind == "rectifier":
        return Rectifier()
    if kind == "smooth-max":
        return SmoothMax(beta=beta, c=c)
    if kind == "soft-max":
        return SoftMax()
    raise ValueError(f"unknown activation kind {kind!r}")


# ---------------------------------------------------------------------------
# losses: value and derivative with respect to the network output
# ---------------------------------------------------------------------------

def loss_value_grad(kind: str, X: np.ndarray, Y: np.ndarray, eps: float = 0.0):
    """Misfit D(X, Y) and dD/dX for the supported loss kinds.

    ``kl`` is the shifted Kullback-Leibler divergence
    sum (X+eps) log((X+eps)/(Y+eps)) + Y - X, ``kl-sym`` its symmetrised form
    sum log((X+eps)/(Y+eps)) (X - Y).  Both require all shifted entries to be
    positive.
    """
    if kind == "frobenius":
        d = X - Y
        return 0.5 * float(np.sum(d * d)), d
    if kind in ("kl", "kl-sym"):
        Xs = X + eps
        Ys = Y + eps
        if np.any(Xs <= 0.0) or np.any(Ys <= 0.0):
            raise ValueError("shifted KL loss needs positive shifted entries; increase eps")
        logratio = np.log(Xs / Ys)
        if kind == "kl":
            value = float(np.sum(Xs * logratio + Y - X))
            return value, logratio
        value = float(np.sum(logratio * (X - Y)))
        return value, logratio + (X - Y) / Xs
    raise ValueError(f"unknown loss kind {kind!r}")


# ---------------------------------------------------------------------------
# network forward / backward
# ---------------------------------------------------------------------------

def nn_forward(As, D: np.ndarray, activation: Activation) -> np.ndarray:
    """Network output rho_1(A_1 rho_2(A_2 ... rho_l(A_l D)))."""
    T = np.asarray(D, dtype=np.float64)
    for A in reversed(As):
        A = np.asarray(A, dtype=np.float64)
        if A.shape[1] != T.shape[0]:
            raise ValueError(f"layer shape {A.shape} does not accept input of height {T.shape[0]}")
        T = activation.value(A @ T)
    return T


def nn_energy_grad(As, D: np.ndarray, Y: np.ndarray, activation: Activation,
                   loss_kind: str = "frobenius", loss_eps: float = 0.0,
                   eps: float = 0.0):
    """Energy value and per-layer gradients by reverse-mode differentiation.

    Energy = loss(network(D), Y) + (eps/2) * sum_j ||A_j||_F^2.
    """
    As = [np.asarray(A, dtype=np.float64) for A in As]
    D = np.asarray(D, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)

    inputs = []   # input fed to layer j (same order as As)
    pres = []     # pre-activation A_j @ input
    T = D
    for A in reversed(As):
        if A.shape[1] != T.shape[0]:
            raise ValueError(f"layer shape {A.shape} does not accept input of height {T.shape[0]}")
        Z = A @ T
        inputs.append(T)
        pres.append(Z)
        T = activation.value(Z)
    inputs.reverse()
    pres.reverse()
    if T.shape != Y.shape:
        raise ValueError(f"network output {T.shape} does not match labels {Y.shape}")

    value, G = loss_value_grad(loss_kind, T, Y, eps=loss_eps)
    grads = [None] * len(As)
    for j, A in enumerate(As):
        Gz = activation.backprop(pres[j], G)
        grads[j] = Gz @ inputs[j].T + eps * A
        G = A.T @ Gz
        value += 0.5 * eps * float(np.sum(A * A))
    return value, grads


@dataclass
class ClassifierProblem:
    """Training data, one-hot labels, layer shapes and loss configuration."""

    D: np.ndarray
    Y: np.ndarray
    shapes: list
    activation_kind: str = "rectifier"
    beta: float = 5.0
    smooth_c: float = 0.0
    loss_kind: str = "frobenius"
    loss_eps: float = 0.0
    eps: float = float(np.finfo(float).eps)
    labels: np.ndarray = field(default=None, repr=False)


class ClassifierObjective(SmoothObjective):
    """Stacked flattened-weights view of the classification energy."""

    lipschitz = None

    def __init__(self, problem: ClassifierProblem):
        self.p = problem
        self.activation = make_activation(problem.activation_kind, problem.beta,
                                          problem.smooth_c)
        self.shapes = [tuple(s) for s in problem.shapes]
        for (m, n), nxt in zip(self.shapes, self.shapes[1:]):
            if n != nxt[0]:
                raise ValueError(f"layer shapes {self.shapes} do not chain")
        if self.shapes[-1][1] != problem.D.shape[0]:
            raise ValueError("innermost layer does not match the data height")
        if self.shapes[0][0] != problem.Y.shape[0]:
            raise ValueError("outermost layer does not match the label height")
        self.sizes = [m * n for m, n in self.shapes]
        self.size = sum(self.sizes)

    def split(self, x):
        x = np.ravel(x)
        if x.size != self.size:
            raise ValueError(f"expected {self.size} entries, got {x.size}")
        out = []
        at = 0
        for (m, n), sz in zip(self.shapes, self.sizes):
            out.append(x[at:at + sz].reshape(m, n))
            at += sz
        return out

    def pack(self, As):
        return np.concatenate([np.ravel(A) for A in As])

    def value(self, x):
        value, _ = nn_energy_grad(self.split(x), self.p.D, self.p.Y, self.activation,
                                  self.p.loss_kind, self.p.loss_eps, self.p.eps)
        return value

    def grad(self, x):
        _, grads = nn_energy_grad(self.split(x), self.p.D, self.p.Y, self.activation,
                                  self.p.loss_kind, self.p.loss_eps, self.p.eps)
        return self.pack(grads)


def init_weights(shapes, seed: int):
    """Seeded uniform weights scaled by 1/sqrt(fan-in); zero weights would be a
    dead point of the rectifier network."""
    rng = np.random.default_rng(seed)
    return [rng.uniform(-1.0, 1.0, size=(m, n)) / np.sqrt(n) for m, n in shapes]


# ---------------------------------------------------------------------------
# synthetic digit data (stand-in for handwritten-digit scans)
# ---------------------------------------------------------------------------

_GLYPHS = [
    "01110 10001 10001 10001 10001 10001 01110",
    "00100 01100 00100 00100 00100 00100 01110",
    "01110 10001 00001 00010 00100 01000 11111",
    "11110 00001 00001 01110 00001 00001 11110",
    "00010 00110 01010 10010 11111 00010 00010",
    "11111 10000 11110 00001 00001 10001 01110",
    "00110 01000 10000 11110 10001 10001 01110",
    "11111 00001 00010 00100 01000 01000 01000",
    "01110 10001 10001 01110 10001 10001 01110",
    "01110 10001 10001 01111 00001 00010 01100",
]


def _glyph(digit: int) -> np.ndarray:
    rows = _GLYPHS[digit].split()
    return np.array([[float(ch) for ch in row] for row in rows])


def synthetic_digits(seed: int, n: int, side: int = 28):
    """Seeded digit-image matrix D (side^2 x n, values in [0, 1]) and labels.

    Blocky 7x5 glyphs upsampled to side x side with random shifts, intensity
    scaling and pixel noise; deterministic per seed.
    """
    rng = np.random.default_rng(seed)
    scale = side // 7
    pad = side - 5 * scale
    D = np.zeros((side * side, n))
    labels = np.zeros(n, dtype=np.int64)
    for i in range(n):
        d = int(rng.integers(0, 10))
        img = np.kron(_glyph(d), np.ones((scale, scale)))
        img = np.pad(img, ((0, side - img.shape[0]), (pad // 2, pad - pad // 2)))
        img = np.roll(img, (int(rng.integers(-2, 3)), int(rng.integers(-2, 3))), axis=(0, 1))
        img = img * rng.uniform(0.75, 1.0) + 0.05 * rng.uniform(size=img.shape)
        D[:, i] = np.clip(img, 0.0, 1.0).ravel()
        labels[i] = d
    return D, labels


def one_hot(labels: np.ndarray, classes: int = 10) -> np.ndarray:
    Y = np.zeros((classes, len(labels)))
    Y[np.asarray(labels, dtype=int), np.arange(len(labels))] = 1.0
    return Y
