"""Config-driven experiment runs with CSV monitor logs and iterate snapshots.

A configuration is a plain-text file of ``key = value`` lines (``#`` starts a
comment).  Unknown keys are rejected with their line number.  Every run writes
into its output directory:

* ``log.csv``           one row per accepted iteration (fixed, versioned header)
* ``config.resolved``   every key the run used, defaults included
* ``summary.txt``       stop reason, iteration count, wall time, final metrics
* ``snapshots/``        iterates at the configured iterations (16-bit PGM with
                        a ``.range`` sidecar recording the affine pixel map,
                        or CSV for non-image variables)

Re-running a config with the same seed reproduces ``log.csv`` byte for byte.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import ConfigError
from .pdhg import PdhgConfig
from .problems.classify import (
    ClassifierObjective,
    ClassifierProblem,
    init_weights,
    make_activation,
    nn_forward,
    one_hot,
    synthetic_digits,
)
from .problems.deconv import BlindDeconvObjective, discrepancy_eta, make_synthetic_deconv
from .problems.mnist import load_digit_set
from .problems.mri import ParallelMriObjective, make_synthetic_mri
from .problems.pgm import write_pgm
from .problems.quadratic import random_psd_quadratic
from .regularizers import (
    L1,
    NoDualMemory,
    NuclearNorm,
    SeparableSum,
    SimplexIndicator,
    TotalVariation2D,
    WeightedL1Dct,
    Zero,
    project_simplex,
)
from .solver import BacktrackingPolicy, StoppingRule, initial_state, run
from .tensor_ops import total_variation

LOG_FORMAT_VERSION = 1
BASE_COLUMNS = ["k", "tau", "energy", "surrogate", "iterate_gap", "breg_sym",
                "r_norm", "rho2_bound", "decrease_ok", "bound_ok"]


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def rank_of(A: np.ndarray, tol: float = 1e-8) -> int:
    """Numerical rank: number of singular values above tol * sigma_max."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    s = np.linalg.svd(np.asarray(A, dtype=np.float64), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def prediction_rate(As, D: np.ndarray, Y: np.ndarray, activation) -> float:
    """Fraction of columns whose output argmax matches the label argmax.

    Ties break toward the lowest index in both arguments.
    """
    out = nn_forward(As, D, activation)
    return float(np.mean(np.argmax(out, axis=0) == np.argmax(Y, axis=0)))


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def _parse_bool(s):
    if s.lower() in ("true", "1", "yes"):
        return True
    if s.lower() in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_int_list(s):
    return [int(tok) for tok in s.split(",") if tok.strip()]


# key -> (parser, default, problems it applies to; None = all)
_KEYS = {
    "problem": (str, None, None),
    "solver": (str, "linbreg", None),
    "tau0": (float, None, None),
    "eps_decrease": (float, None, None),
    "max_iter": (int, 100, None),
    "discrepancy_eta": (float, None, None),
    "iterate_gap_tol": (float, None, None),
    "seed": (int, 0, None),
    "out": (str, "", None),
    "snapshots": (_parse_int_list, [], None),
    "alpha": (float, None, None),
    "tv_tol": (float, 1e-8, ("deconv", "mri")),
    "tv_maxit": (int, 400, ("deconv", "mri")),
    # deconv
    "height": (int, 32, ("deconv",)),
    "width": (int, 32, ("deconv",)),
    "kernel_h": (int, 3, ("deconv",)),
    "kernel_w": (int, 5, ("deconv",)),
    "sigma": (float, 0.0, ("deconv",)),
    "auto_eta": (_parse_bool, False, ("deconv",)),
    # when false (the motivating iteration), the kernel takes plain projected
    # steps while the image keeps its Bregman memory
    "kernel_memory": (_parse_bool, False, ("deconv",)),
    # mri
    "n": (int, 32, ("mri", "quadratic")),
    "coils": (int, 2, ("mri",)),
    "mask": (str, "spiral", ("mri",)),
    "mask_p": (float, 0.5, ("mri",)),
    "epsilon": (float, float(np.finfo(float).eps), ("mri", "classifier")),
    "alpha_b": (float, 1.0, ("mri",)),
    "w_low": (float, 1e-6, ("mri",)),
    "w_high": (float, 5.0, ("mri",)),
    # classifier
    "train_n": (int, 500, ("classifier",)),
    "hidden": (int, 20, ("classifier",)),
    "activation": (str, "rectifier", ("classifier",)),
    "beta": (float, 5.0, ("classifier",)),
    "smooth_c": (float, 0.0, ("classifier",)),
    "loss": (str, "frobenius", ("classifier",)),
    "loss_eps": (float, 1.0, ("classifier",)),
    "alpha1": (float, 0.2, ("classifier",)),
    "alpha2": (float, 0.2, ("classifier",)),
    "data_images": (str, "", ("classifier",)),
    "data_labels": (str, "", ("classifier",)),
    # quadratic toy
    "l_const": (float, 1.0, ("quadratic",)),
    "reg": (str, "l1", ("quadratic",)),
    "reg_alpha": (float, 0.1, ("quadratic",)),
}

_PROBLEMS = ("deconv", "mri", "classifier", "quadratic")
_SOLVERS = ("linbreg", "projected-gd", "proximal-gd")

_DEFAULT_TAU0 = {"deconv": 2.0, "mri": 0.5, "classifier": 1e-3, "quadratic": 1.0}
_DEFAULT_ALPHA = {"deconv": 0.05, "mri": 1.0, "classifier": 0.0, "quadratic": 0.0}


@dataclass
class ExperimentConfig:
    """Resolved experiment parameters; ``values`` holds every applicable key."""

    values: dict
    source: str = "<memory>"

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)


def parse_config(path) -> ExperimentConfig:
    """Parse and resolve a key-value config file; raises ConfigError with line numbers."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, source=str(path))


def parse_config_text(text: str, source: str = "<memory>") -> ExperimentConfig:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {stripped!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        parser = _KEYS[key][0]
        try:
            raw[key] = parser(value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from exc

    if "problem" not in raw:
        raise ConfigError(f"{source}: missing required key 'problem'")
    problem = raw["problem"]
    if problem not in _PROBLEMS:
        raise ConfigError(f"{source}: unknown problem {problem!r} (choose from {_PROBLEMS})")
    if raw.get("solver", "linbreg") not in _SOLVERS:
        raise ConfigError(f"{source}: unknown solver {raw['solver']!r} (choose from {_SOLVERS})")

    for key, (parser, default, scope) in _KEYS.items():
        if key in raw and scope is not None and problem not in scope:
            raise ConfigError(f"{source}: key {key!r} does not apply to problem {problem!r}")

    values = {}
    for key, (parser, default, scope) in _KEYS.items():
        if scope is not None and problem not in scope:
            continue
        values[key] = raw.get(key, default)
    if values["tau0"] is None:
        values["tau0"] = _DEFAULT_TAU0[problem]
    if values["alpha"] is None:
        values["alpha"] = _DEFAULT_ALPHA[problem]
    return ExperimentConfig(values=values, source=source)


def apply_overrides(cfg: ExperimentConfig, seed=None, max_iter=None) -> ExperimentConfig:
    values = dict(cfg.values)
    if seed is not None:
        values["seed"] = int(seed)
    if max_iter is not None:
        values["max_iter"] = int(max_iter)
    return ExperimentConfig(values=values, source=cfg.source)


# ---------------------------------------------------------------------------
# problem assembly
# ---------------------------------------------------------------------------

@dataclass
class _Built:
    E: object
    R: object
    project: object
    u0: np.ndarray
    extra_columns: list
    extras_fn: object
    snapshot_fn: object


def _build_deconv(cfg: ExperimentConfig) -> _Built:
    H, W = cfg["height"], cfg["width"]
    prob = make_synthetic_deconv(cfg["seed"], H, W,
                                 kernel_shape=(cfg["kernel_h"], cfg["kernel_w"]),
                                 sigma=cfg["sigma"])
    E = BlindDeconvObjective(prob.f, prob.kernel_shape)
    alpha = cfg["alpha"]
    tv_cfg = PdhgConfig(tol=cfg["tv_tol"], maxit=cfg["tv_maxit"])
    # budget-mode inner solves: exhausted budgets return the best iterate, and
    # the warm-started dual keeps improving across outer iterations
    image_part = (TotalVariation2D(alpha, (H, W), config=tv_cfg, strict=False)
                  if alpha > 0 else Zero())
    kernel_part = SimplexIndicator()
    if not cfg["kernel_memory"]:
        kernel_part = NoDualMemory(kernel_part)
    R = SeparableSum([
        (image_part, (0, E.n_image)),
        (kernel_part, (E.n_image, E.size)),
    ])
    u0 = E.pack(np.zeros((H, W)), np.full(prob.kernel_shape, 1.0 / E.n_kernel))

    def project(x):
        u, h = E.split(x)
        return E.pack(u, project_simplex(h).reshape(h.shape))

    def extras_fn(st):
        u, _ = E.split(st.u)
        return {"tv_value": total_variation(u)}

    def snapshot_fn(st, directory: Path):
        u, _ = E.split(st.u)
        _write_image_snapshot(directory / f"iter_{st.k}.pgm", u)

    return _Built(E, R, project, u0, ["tv_value"], extras_fn, snapshot_fn)


def _build_mri(cfg: ExperimentConfig) -> _Built:
    N = cfg["n"]
    prob = make_synthetic_mri(cfg["seed"], N, coils=cfg["coils"],
                              mask_kind=cfg["mask"], p=cfg["mask_p"],
                              eps=cfg["epsilon"])
    E = ParallelMriObjective(prob.data, prob.mask, prob.eps)
    w = np.full((N, N), cfg["w_high"])
    w[:2, :2] = cfg["w_low"]
    tv_cfg = PdhgConfig(tol=cfg["tv_tol"], maxit=cfg["tv_maxit"])
    n = N * N
    parts = []
    for chan in range(2):  # real and imaginary parts of u
        part = (TotalVariation2D(cfg["alpha"], (N, N), config=tv_cfg, strict=False)
                if cfg["alpha"] > 0 else Zero())
        parts.append((part, (chan * n, (chan + 1) * n)))
    at = 2 * n
    for _ in range(cfg["coils"]):
        for _chan in range(2):
            parts.append((WeightedL1Dct(cfg["alpha_b"], w, (N, N)), (at, at + n)))
            at += n
    R = SeparableSum(parts)
    u0 = E.pack(np.full((N, N), 2.0 + 0.0j),
                [np.ones((N, N), dtype=np.complex128) for _ in range(cfg["coils"])])

    def extras_fn(st):
        u, _ = E.split(st.u)
        return {"tv_value": total_variation(np.abs(u))}

    def snapshot_fn(st, directory: Path):
        u, _ = E.split(st.u)
        _write_image_snapshot(directory / f"iter_{st.k}.pgm", np.abs(u))

    return _Built(E, R, None, u0, ["tv_value"], extras_fn, snapshot_fn)


def _build_classifier(cfg: ExperimentConfig) -> _Built:
    if cfg["data_images"] and cfg["data_labels"]:
        D, labels = load_digit_set(cfg["data_images"], cfg["data_labels"],
                                   limit=cfg["train_n"])
    else:
        D, labels = synthetic_digits(cfg["seed"], cfg["train_n"])
    Y = one_hot(labels)
    shapes = [(10, cfg["hidden"]), (cfg["hidden"], D.shape[0])]
    prob = ClassifierProblem(
        D=D, Y=Y, shapes=shapes,
        activation_kind=cfg["activation"], beta=cfg["beta"], smooth_c=cfg["smooth_c"],
        loss_kind=cfg["loss"], loss_eps=cfg["loss_eps"], eps=cfg["epsilon"],
        labels=labels,
    )
    E = ClassifierObjective(prob)
    alphas = [cfg["alpha1"], cfg["alpha2"]]
    parts = []
    at = 0
    for shape, a in zip(shapes, alphas):
        size = shape[0] * shape[1]
        parts.append((NuclearNorm(a, shape), (at, at + size)))
        at += size
    R = SeparableSum(parts)
    u0 = E.pack(init_weights(shapes, cfg["seed"]))
    extra_cols = [f"rank_A{j + 1}" for j in range(len(shapes))] + ["prediction_rate"]

    def extras_fn(st):
        As = E.split(st.u)
        out = {f"rank_A{j + 1}": rank_of(A) for j, A in enumerate(As)}
        out["prediction_rate"] = prediction_rate(As, D, Y, E.activation)
        return out

    def snapshot_fn(st, directory: Path):
        for j, A in enumerate(E.split(st.u)):
            np.savetxt(directory / f"iter_{st.k}_A{j + 1}.csv", A, delimiter=",")

    return _Built(E, R, None, u0, extra_cols, extras_fn, snapshot_fn)


def _build_quadratic(cfg: ExperimentConfig) -> _Built:
    E = random_psd_quadratic(cfg["seed"], cfg["n"], L=cfg["l_const"])
    if cfg["reg"] == "l1":
        R = L1(cfg["reg_alpha"])
    elif cfg["reg"] == "none":
        R = Zero()
    else:
        raise ConfigError(f"quadratic driver supports reg in ('l1', 'none'), got {cfg['reg']!r}")
    u0 = np.zeros(cfg["n"])

    def snapshot_fn(st, directory: Path):
        np.savetxt(directory / f"iter_{st.k}.csv", st.u, delimiter=",")

    return _Built(E, R, None, u0, [], lambda st: {}, snapshot_fn)


_BUILDERS = {
    "deconv": _build_deconv,
    "mri": _build_mri,
    "classifier": _build_classifier,
    "quadratic": _build_quadratic,
}


def build_experiment(cfg: ExperimentConfig) -> _Built:
    return _BUILDERS[cfg["problem"]](cfg)


# ---------------------------------------------------------------------------
# output files
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_image_snapshot(path: Path, image: np.ndarray) -> None:
    """16-bit PGM with the affine map to [0, 65535] recorded in a sidecar file."""
    lo = float(np.min(image))
    hi = float(np.max(image))
    span = hi - lo if hi > lo else 1.0
    pixels = np.round((image - lo) / span * 65535.0).astype(np.int64)
    write_pgm(path, pixels, maxval=65535)
    Path(str(path) + ".range").write_text(f"min = {lo!r}\nmax = {hi!r}\n")


def read_image_snapshot(path) -> np.ndarray:
    """Invert ``_write_image_snapshot`` using the sidecar affine map."""
    from .problems.pgm import read_pgm

    pixels, maxval = read_pgm(path)
    lines = Path(str(path) + ".range").read_text().splitlines()
    lo = float(lines[0].split("=")[1])
    hi = float(lines[1].split("=")[1])
    span = hi - lo if hi > lo else 1.0
    return pixels.astype(np.float64) / maxval * span + lo


@dataclass
class RunLog:
    """Everything a finished experiment produced."""

    records: list
    stop_reason: str
    iterations: int
    wall_time: float
    final_energy: float
    out_dir: Path
    final_extras: dict = field(default_factory=dict)


def write_log_csv(path, records, extra_columns) -> None:
    cols = BASE_COLUMNS + list(extra_columns)
    lines = [",".join(cols)]
    for rec in records:
        row = [_fmt(rec.k), _fmt(rec.tau), _fmt(rec.energy), _fmt(rec.surrogate),
               _fmt(rec.iterate_gap), _fmt(rec.breg_sym), _fmt(rec.r_norm),
               _fmt(rec.rho2_bound), _fmt(rec.decrease_ok), _fmt(rec.bound_ok)]
        row += [_fmt(rec.extras.get(c, float("nan"))) for c in extra_columns]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def run_experiment(cfg: ExperimentConfig, out_dir) -> RunLog:
    """Execute a resolved config and write log, snapshots, summary and resolved config."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    snap_dir = out / "snapshots"

    built = build_experiment(cfg)
    st0 = initial_state(built.E, built.R, built.u0, cfg["tau0"])
    policy = BacktrackingPolicy(tau0=cfg["tau0"], eps_decrease=cfg["eps_decrease"])
    eta = cfg["discrepancy_eta"]
    if cfg["problem"] == "deconv" and cfg.get("auto_eta") and eta is None:
        eta = discrepancy_eta(cfg["sigma"], cfg["height"], cfg["width"])
    stop = StoppingRule(max_iter=cfg["max_iter"], discrepancy_eta=eta,
                        iterate_gap_tol=cfg["iterate_gap_tol"])

    snaps = set(cfg["snapshots"])
    if snaps:
        snap_dir.mkdir(exist_ok=True)

    def extras_fn(st):
        if st.k in snaps:
            built.snapshot_fn(st, snap_dir)
        return built.extras_fn(st)

    method = cfg["solver"]
    t0 = time.perf_counter()
    if method == "projected-gd":
        result = run(built.E, None, st0, policy, stop, method="projected-gd",
                     project=built.project, extras_fn=extras_fn)
    else:
        result = run(built.E, built.R, st0, policy, stop,
                     method=("linbreg" if method == "linbreg" else "proximal-gd"),
                     extras_fn=extras_fn)
    wall = time.perf_counter() - t0

    write_log_csv(out / "log.csv", result.records, built.extra_columns)

    resolved = [f"{k} = {_fmt(v) if not isinstance(v, list) else ','.join(map(str, v))}"
                for k, v in sorted(cfg.values.items())]
    (out / "config.resolved").write_text("\n".join(resolved) + "\n")

    final_extras = result.records[-1].extras if result.records else {}
    summary = [
        f"log_format = {LOG_FORMAT_VERSION}",
        f"stop_reason = {result.stop_reason}",
        f"iterations = {len(result.records)}",
        f"wall_time_s = {wall:.3f}",
        f"final_energy = {_fmt(result.state.energy)}",
    ] + [f"final_{k} = {_fmt(v)}" for k, v in final_extras.items()]
    (out / "summary.txt").write_text("\n".join(summary) + "\n")

    return RunLog(records=result.records, stop_reason=result.stop_reason,
                  iterations=len(result.records), wall_time=wall,
                  final_energy=result.state.energy, out_dir=out,
                  final_extras=final_extras)
