"""Random fully connected networks with i.i.d. alpha-stable weights and biases.

Layers are indexed ``1..L`` as in ``h^l = W^l x^(l-1) + b^l``, ``x^l = phi(h^l)``;
``x^0`` is the input.  Every weight matrix and bias vector is drawn from its own
child seed, so a layer can be regenerated on its own (see :func:`layer_parameters`)
and very wide networks can be run layer by layer without storing all matrices.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special

from . import io as _io
from .errors import ParameterError
from .stable import ensemble_sigma, standard_variates


def _tanh_prime(h):
    # sech^2 h = 4 e / (1 + e)^2 with e = exp(-2|h|); stays positive until e underflows (|h| > ~370)
    e = np.exp(-2.0 * np.abs(h))
    return 4.0 * e / (1.0 + e) ** 2


def _erf_act(h):
    return special.erf(0.5 * math.sqrt(math.pi) * h)


def _erf_prime(h):
    return np.exp(-0.25 * math.pi * h * h)


# name -> (phi, phi', sup |phi|); all entries are odd, bounded and satisfy phi'(0) = 1
ACTIVATIONS = {
    "tanh": (np.tanh, _tanh_prime, 1.0),
    "erf": (_erf_act, _erf_prime, 1.0),
}


def activation(name):
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise ParameterError(
            f"unknown activation {name!r}; sublinear choices are {sorted(ACTIVATIONS)}"
        ) from None


@dataclass(frozen=True)
class NetworkSpec:
    alpha: float
    Dw: float
    Db: float = 0.0
    N: int = 100
    L: int = 1
    phi: str = "tanh"

    def __post_init__(self):
        if not (1.0 <= self.alpha <= 2.0):
            raise ParameterError(f"alpha must lie in [1, 2], got {self.alpha}")
        if not self.Dw > 0:
            raise ParameterError("Dw must be positive")
        if self.Db < 0:
            raise ParameterError("Db must be >= 0")
        if self.N < 1 or self.L < 1:
            raise ParameterError("N and L must be >= 1")
        activation(self.phi)

    @classmethod
    def from_root(cls, alpha, dw_root, **kw):
        """Build a spec from the plotted coordinate ``Dw^(1/alpha)``."""
        return cls(alpha=alpha, Dw=dw_root**alpha, **kw)

    @property
    def weight_scale(self):
        return ensemble_sigma(self.Dw, self.alpha, self.N)

    @property
    def bias_scale(self):
        return ensemble_sigma(self.Db, self.alpha, 1)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class Network:
    spec: NetworkSpec
    weights: tuple
    biases: tuple
    seed: int | None = None

    def __post_init__(self):
        N, L = self.spec.N, self.spec.L
        if len(self.weights) != L or len(self.biases) != L:
            raise ParameterError("need exactly L weight matrices and bias vectors")
        for W, b in zip(self.weights, self.biases):
            if W.shape != (N, N) or b.shape != (N,):
                raise ParameterError("all layers must be square N x N with length-N biases")
            W.flags.writeable = False
            b.flags.writeable = False


@dataclass
class LayerState:
    h: list
    x: list = field(default_factory=list)


_ROW_CHUNK = 2_000_000


def _layer_seeds(seed, L):
    ss = np.random.SeedSequence(seed)
    kids = ss.spawn(2 * L)
    return kids[:L], kids[L:]


def _stable_matrix(alpha, scale, shape, seed_seq):
    rng = np.random.default_rng(seed_seq)
    if scale == 0:
        return np.zeros(shape)
    out = np.empty(shape)
    flat = out.reshape(-1)
    for i in range(0, flat.size, _ROW_CHUNK):
        n = min(_ROW_CHUNK, flat.size - i)
        flat[i : i + n] = standard_variates(alpha, 0.0, n, rng)
    out *= scale
    return out


def layer_parameters(spec, seed, l):
    """Regenerate ``(W^l, b^l)`` of the network ``init(spec, seed)`` without the rest."""
    if not 1 <= l <= spec.L:
        raise IndexError(f"layer {l} outside 1..{spec.L}")
    wseeds, bseeds = _layer_seeds(seed, spec.L)
    W = _stable_matrix(spec.alpha, spec.weight_scale, (spec.N, spec.N), wseeds[l - 1])
    b = _stable_matrix(spec.alpha, spec.bias_scale, (spec.N,), bseeds[l - 1])
    return W, b


def init(spec, seed=None):
    """Sample a network: ``W_ij ~ S_a((Dw/2N)^(1/a))``, ``b_i ~ S_a((Db/2)^(1/a))``."""
    if seed is None:
        seed = int(np.random.SeedSequence().entropy % (2**63))
    layers = [layer_parameters(spec, seed, l) for l in range(1, spec.L + 1)]
    return Network(spec, tuple(W for W, _ in layers), tuple(b for _, b in layers), seed)


def _check_input(x0, N):
    x0 = np.asarray(x0, dtype=float)
    if x0.shape[0] != N or x0.ndim > 2:
        raise ParameterError(f"input must have leading dimension {N}, got shape {x0.shape}")
    return x0


def forward(net, x0):
    """Propagate ``x0`` (shape ``(N,)`` or ``(N, P)`` for P inputs at once)."""
    x0 = _check_input(x0, net.spec.N)
    phi = activation(net.spec.phi)[0]
    hs, xs = [], [x0]
    x = x0
    for W, b in zip(net.weights, net.biases):
        h = W @ x + (b if x.ndim == 1 else b[:, None])
        x = phi(h)
        hs.append(h)
        xs.append(x)
    return LayerState(hs, xs)


def stream_forward(spec, seed, x0, callback):
    """Forward pass that regenerates each layer on the fly.

    ``callback(l, h_l, x_l)`` is called for every layer; results equal
    ``forward(init(spec, seed), x0)`` bit for bit while holding one matrix at a time.
    """
    x = _check_input(x0, spec.N)
    phi = activation(spec.phi)[0]
    for l in range(1, spec.L + 1):
        W, b = layer_parameters(spec, seed, l)
        h = W @ x + (b if x.ndim == 1 else b[:, None])
        del W
        x = phi(h)
        callback(l, h, x)


def derivative_diagonal(net, state, l):
    if not 1 <= l <= net.spec.L:
        raise IndexError(f"layer {l} outside 1..{net.spec.L}")
    h = state.h[l - 1]
    if h.ndim != 1:
        raise ParameterError("Jacobians need a single-input forward state")
    return activation(net.spec.phi)[1](h)


def layer_jacobian(net, state, l, form="DW"):
    """``D^l W^l`` (form ``"DW"``) or ``W^(l+1) D^l`` (form ``"WD"``)."""
    if form == "DW":
        return derivative_diagonal(net, state, l)[:, None] * net.weights[l - 1]
    if form == "WD":
        if not 1 <= l <= net.spec.L - 1:
            raise IndexError(f"WD form needs 1 <= l <= L-1, got l={l}, L={net.spec.L}")
        return net.weights[l] * derivative_diagonal(net, state, l)[None, :]
    raise ParameterError(f"form must be 'DW' or 'WD', got {form!r}")


def full_jacobian(net, state):
    """Input-output Jacobian ``D^L W^L ... D^1 W^1``."""
    J = layer_jacobian(net, state, 1, "DW")
    for l in range(2, net.spec.L + 1):
        J = layer_jacobian(net, state, l, "DW") @ J
    return J


def stationary_input(spec, qstar, seed):
    """Input ``x^0 = phi(h^0)`` with ``h^0`` drawn from the fixed-point law ``S_a((q*/2)^(1/a))``.

    Layer-1 preactivations then already follow the mean-field fixed point.
    """
    rng = np.random.default_rng(seed)
    scale = (qstar / 2.0) ** (1.0 / spec.alpha) if qstar > 0 else 0.0
    h0 = scale * standard_variates(spec.alpha, 0.0, spec.N, rng) if scale else np.zeros(spec.N)
    return activation(spec.phi)[0](h0)


# ---------------------------------------------------------------------------
# export / import


def save(net, directory):
    """Write one weight file (+ JSON sidecar) per layer and a JSON manifest."""
    os.makedirs(directory, exist_ok=True)
    layers = []
    for l, (W, b) in enumerate(zip(net.weights, net.biases), start=1):
        wname, bname = f"W{l}.bin", f"b{l}.bin"
        _io.write_weight_file(os.path.join(directory, wname), W)
        _io.write_weight_file(os.path.join(directory, bname), b[None, :])
        layers.append({"weights": wname, "bias": bname})
    manifest = {"spec": net.spec.to_dict(), "seed": net.seed, "layers": layers}
    _io.atomic_write_text(os.path.join(directory, "network.json"), json.dumps(manifest, indent=2))


def load(directory):
    """Read a network written by :func:`save` (or assembled from external weights).

    Weight files hold 32-bit floats, so loaded values are float32-rounded.
    """
    with open(os.path.join(directory, "network.json")) as fh:
        manifest = json.load(fh)
    spec = NetworkSpec(**manifest["spec"])
    Ws, bs = [], []
    for entry in manifest["layers"]:
        Ws.append(_io.read_weight_file(os.path.join(directory, entry["weights"])).astype(float))
        bs.append(_io.read_weight_file(os.path.join(directory, entry["bias"])).astype(float).ravel())
    return Network(spec, tuple(Ws), tuple(bs), manifest.get("seed"))
