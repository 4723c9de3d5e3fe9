"""Scalable benchmark function suite with seeded instancing and expert labels.

The suite provides 13 box-constrained minimization problems covering the five
classic difficulty categories (separable, low/moderate conditioning, high
conditioning unimodal, multimodal with strong global structure, multimodal
with weak global structure).  Every function is defined for any dimension
n >= 2 on the box [-5, 5]^n and reaches its global optimum value 0 at a
seeded shift location.  Non-separable functions additionally apply a seeded
orthogonal rotation around the shift.

Instance seed 0 is the canonical instance: zero shift and no rotation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Bounds",
    "PropertyLabels",
    "InstanceDescriptor",
    "PROPERTY_LEVELS",
    "SUITE_FUNCTION_IDS",
    "DEFAULT_INSTANCE_SEEDS",
    "make_instance",
    "evaluate",
    "evaluate_batch",
    "function_name",
    "function_category",
    "function_labels",
    "suite_manifest",
]

DEFAULT_LOWER = -5.0
DEFAULT_UPPER = 5.0
SHIFT_RANGE = 4.0  # optimum drawn uniformly in [-4, 4]^n, interior to the box

#: Allowed categorical levels per high-level property.
PROPERTY_LEVELS = {
    "multimodality": ("none", "low", "med", "high"),
    "global_structure": ("none", "med", "strong", "deceptive"),
    "separability": ("none", "high"),
    "variable_scaling": ("none", "low", "med", "high"),
    "homogeneity": ("med", "high"),
    "basin_size": ("none", "low", "med"),
    "global_local_contrast": ("none", "low", "high"),
}

PROPERTY_NAMES = tuple(PROPERTY_LEVELS)


@dataclass(frozen=True)
class PropertyLabels:
    """The seven expert-assigned categorical landscape traits of a function."""

    multimodality: str
    global_structure: str
    separability: str
    variable_scaling: str
    homogeneity: str
    basin_size: str
    global_local_contrast: str

    def __post_init__(self):
        for prop, levels in PROPERTY_LEVELS.items():
            value = getattr(self, prop)
            if value not in levels:
                raise ValueError(
                    f"label {value!r} for {prop} not in allowed levels {levels}"
                )

    def as_dict(self) -> dict[str, str]:
        return {prop: getattr(self, prop) for prop in PROPERTY_NAMES}


@dataclass(frozen=True)
class Bounds:
    """Box constraints: lower[j] < upper[j] for every coordinate."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ValueError("bounds must be 1-d vectors of equal length")
        if not (np.isfinite(lower).all() and np.isfinite(upper).all()):
            raise ValueError("bounds must be finite")
        if not (lower < upper).all():
            raise ValueError("need lower[j] < upper[j] for all j")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dimension(self) -> int:
        return self.lower.size

    @classmethod
    def default_box(cls, dimension: int) -> "Bounds":
        return cls(
            np.full(dimension, DEFAULT_LOWER), np.full(dimension, DEFAULT_UPPER)
        )


# (name, category, rotated, labels) per function id.  Labels are constant
# across dimensions and instances.
_SUITE = {
    1: ("sphere", "separable", False,
        PropertyLabels("none", "strong", "high", "none", "high", "none", "none")),
    2: ("ellipsoid_separable", "separable", False,
        PropertyLabels("none", "strong", "high", "high", "high", "none", "none")),
    3: ("rastrigin_separable", "separable", False,
        PropertyLabels("high", "strong", "high", "low", "high", "low", "low")),
    4: ("attractive_sector", "low_conditioning", True,
        PropertyLabels("none", "strong", "none", "low", "med", "none", "none")),
    5: ("rosenbrock_rotated", "low_conditioning", True,
        PropertyLabels("low", "strong", "none", "low", "med", "low", "low")),
    6: ("ellipsoid_rotated", "high_conditioning", True,
        PropertyLabels("none", "strong", "none", "high", "high", "none", "none")),
    7: ("bent_cigar", "high_conditioning", True,
        PropertyLabels("none", "strong", "none", "high", "high", "none", "none")),
    8: ("sharp_ridge", "high_conditioning", True,
        PropertyLabels("none", "strong", "none", "med", "med", "none", "none")),
    9: ("rastrigin_rotated", "multimodal_strong", True,
        PropertyLabels("high", "strong", "none", "low", "high", "low", "low")),
    10: ("griewank_rosenbrock", "multimodal_strong", True,
         PropertyLabels("high", "strong", "none", "low", "high", "low", "low")),
    11: ("schwefel", "multimodal_weak", True,
         PropertyLabels("med", "deceptive", "none", "low", "high", "low", "high")),
    12: ("gallagher_peaks", "multimodal_weak", True,
         PropertyLabels("med", "none", "none", "med", "high", "med", "low")),
    13: ("double_funnel", "multimodal_weak", True,
         PropertyLabels("high", "deceptive", "none", "low", "high", "low", "low")),
}

SUITE_FUNCTION_IDS = tuple(sorted(_SUITE))

#: Seeds used for the default per-function instance set (seed 0 is reserved
#: for the canonical unshifted instance).
DEFAULT_INSTANCE_SEEDS = tuple(range(1, 16))


@dataclass(frozen=True)
class InstanceDescriptor:
    """A concrete problem instance: function id, dimension, seed and labels.

    ``shift`` is the optimum location, ``rotation`` the orthogonal matrix
    applied around it (``None`` for separable functions and the canonical
    instance).  Both are derived deterministically from
    ``(function_id, dimension, instance_seed)``.
    """

    function_id: int
    dimension: int
    instance_seed: int
    labels: PropertyLabels
    bounds: Bounds = field(repr=False, compare=False)
    shift: np.ndarray = field(repr=False, compare=False)
    rotation: np.ndarray | None = field(repr=False, compare=False)
    _extra: dict = field(repr=False, compare=False, default_factory=dict)

    @property
    def name(self) -> str:
        return _SUITE[self.function_id][0]

    @property
    def category(self) -> str:
        return _SUITE[self.function_id][1]


def _instance_rng(function_id: int, dimension: int, instance_seed: int):
    entropy = [function_id, dimension, instance_seed & 0xFFFFFFFFFFFFFFFF]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def _random_rotation(rng, dimension: int) -> np.ndarray:
    """Seeded orthogonal matrix: QR of a Gaussian matrix, sign-fixed."""
    mat = rng.standard_normal((dimension, dimension))
    q, r = np.linalg.qr(mat)
    q = q * np.sign(np.diag(r))
    return q


def _gallagher_extra(rng, dimension: int) -> dict:
    n_peaks = 21
    centers = np.zeros((n_peaks, dimension))
    centers[1:] = rng.uniform(-4.0, 4.0, size=(n_peaks - 1, dimension))
    weights = np.empty(n_peaks)
    weights[0] = 10.0
    weights[1:] = 1.1 + 8.0 * np.arange(n_peaks - 1) / (n_peaks - 2)
    conditions = 10.0 ** rng.uniform(0.0, 3.0, size=n_peaks)
    conditions[0] = 1.0
    exponents = np.linspace(-0.5, 0.5, dimension)
    scales = np.empty((n_peaks, dimension))
    for k in range(n_peaks):
        scales[k] = conditions[k] ** rng.permutation(exponents)
    return {"centers": centers, "weights": weights, "scales": scales}


def make_instance(
    function_id: int, dimension: int, instance_seed: int
) -> InstanceDescriptor:
    """Build a deterministic problem instance.

    Raises ``ValueError`` for unknown function ids or ``dimension < 2``.
    Instance seed 0 yields the canonical instance (zero shift, no rotation).
    """
    if function_id not in _SUITE:
        raise ValueError(f"unknown function_id {function_id}")
    if dimension < 2:
        raise ValueError("dimension must be >= 2")
    name, category, rotated, labels = _SUITE[function_id]
    rng = _instance_rng(function_id, dimension, instance_seed)
    if instance_seed == 0:
        shift = np.zeros(dimension)
        rotation = None
    else:
        shift = rng.uniform(-SHIFT_RANGE, SHIFT_RANGE, size=dimension)
        rotation = _random_rotation(rng, dimension) if rotated else None
    extra = _gallagher_extra(rng, dimension) if name == "gallagher_peaks" else {}
    shift.setflags(write=False)
    if rotation is not None:
        rotation.setflags(write=False)
    return InstanceDescriptor(
        function_id=function_id,
        dimension=dimension,
        instance_seed=instance_seed,
        labels=labels,
        bounds=Bounds.default_box(dimension),
        shift=shift,
        rotation=rotation,
        _extra=extra,
    )


# -- base functions on the shifted/rotated coordinates -----------------------

def _sphere(z):
    return np.einsum("ij,ij->i", z, z)


def _ellipsoid(z):
    n = z.shape[1]
    w = 10.0 ** (6.0 * np.arange(n) / (n - 1))
    return z * z @ w


def _rastrigin(z):
    n = z.shape[1]
    return 10.0 * (n - np.cos(2.0 * np.pi * z).sum(axis=1)) + _sphere(z)


def _attractive_sector(z):
    s = np.where(z > 0.0, 100.0, 1.0)
    return np.einsum("ij,ij->i", s * z, s * z)


def _rosenbrock(z):
    # optimum at z = 1
    a = z[:, :-1]
    b = z[:, 1:]
    return (100.0 * (a**2 - b) ** 2 + (a - 1.0) ** 2).sum(axis=1)


def _bent_cigar(z):
    return z[:, 0] ** 2 + 1.0e6 * np.einsum("ij,ij->i", z[:, 1:], z[:, 1:])


def _sharp_ridge(z):
    tail = np.sqrt(np.einsum("ij,ij->i", z[:, 1:], z[:, 1:]))
    return z[:, 0] ** 2 + 100.0 * tail


def _griewank_rosenbrock(z):
    n = z.shape[1]
    a = z[:, :-1]
    b = z[:, 1:]
    s = 100.0 * (a**2 - b) ** 2 + (a - 1.0) ** 2
    return 10.0 / (n - 1) * (s / 4000.0 - np.cos(s)).sum(axis=1) + 10.0


_SCHWEFEL_MU = 420.9687462275036
_SCHWEFEL_C = _SCHWEFEL_MU * np.sin(np.sqrt(_SCHWEFEL_MU))


def _schwefel(z):
    u = _SCHWEFEL_MU + 100.0 * z
    return (_SCHWEFEL_C - u * np.sin(np.sqrt(np.abs(u)))).sum(axis=1)


def _gallagher(z, extra):
    n = z.shape[1]
    diff = z[:, None, :] - extra["centers"][None, :, :]  # (l, peaks, n)
    q = np.einsum("lkn,kn,lkn->lk", diff, extra["scales"], diff)
    peak_values = extra["weights"][None, :] * np.exp(-q / (2.0 * n))
    return 10.0 - peak_values.max(axis=1)


def _double_funnel(z):
    n = z.shape[1]
    mu0 = 2.5
    d = 1.0
    s = 1.0 - 1.0 / (2.0 * np.sqrt(n + 20.0) - 8.2)
    mu1 = -np.sqrt((mu0**2 - d) / s)
    v = z + mu0  # optimum of the first funnel sits at v = mu0, i.e. z = 0
    funnel0 = ((v - mu0) ** 2).sum(axis=1)
    funnel1 = d * n + s * ((v - mu1) ** 2).sum(axis=1)
    ripple = 10.0 * (n - np.cos(2.0 * np.pi * (v - mu0)).sum(axis=1))
    return np.minimum(funnel0, funnel1) + ripple


_ROSENBROCK_STYLE = {"rosenbrock_rotated", "griewank_rosenbrock"}


def evaluate_batch(instance: InstanceDescriptor, points: np.ndarray) -> np.ndarray:
    """Evaluate an instance on an (l, n) batch of points.

    Pure: neither the instance nor the inputs are mutated.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim != 2 or x.shape[1] != instance.dimension:
        raise ValueError(
            f"expected points of shape (l, {instance.dimension}), got {x.shape}"
        )
    if not np.isfinite(x).all():
        raise ValueError("points must be finite")
    z = x - instance.shift
    if instance.rotation is not None:
        z = z @ instance.rotation.T
    name = instance.name
    if name in _ROSENBROCK_STYLE:
        z = z + 1.0  # these bases have their optimum at the all-ones vector
    if name == "sphere":
        return _sphere(z)
    if name in ("ellipsoid_separable", "ellipsoid_rotated"):
        return _ellipsoid(z)
    if name in ("rastrigin_separable", "rastrigin_rotated"):
        return _rastrigin(z)
    if name == "attractive_sector":
        return _attractive_sector(z)
    if name == "rosenbrock_rotated":
        return _rosenbrock(z)
    if name == "bent_cigar":
        return _bent_cigar(z)
    if name == "sharp_ridge":
        return _sharp_ridge(z)
    if name == "griewank_rosenbrock":
        return _griewank_rosenbrock(z)
    if name == "schwefel":
        return _schwefel(z)
    if name == "gallagher_peaks":
        return _gallagher(z, instance._extra)
    if name == "double_funnel":
        return _double_funnel(z)
    raise AssertionError(f"unhandled function {name}")  # pragma: no cover


def evaluate(instance: InstanceDescriptor, x: np.ndarray) -> float:
    """Evaluate an instance at a single point of length n."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("evaluate expects a single point; use evaluate_batch")
    return float(evaluate_batch(instance, x[None, :])[0])


def function_name(function_id: int) -> str:
    return _SUITE[function_id][0]


def function_category(function_id: int) -> str:
    return _SUITE[function_id][1]


def function_labels(function_id: int) -> PropertyLabels:
    if function_id not in _SUITE:
        raise ValueError(f"unknown function_id {function_id}")
    return _SUITE[function_id][3]


def suite_manifest() -> list[dict]:
    """JSON-ready description of the suite: id, name, category and labels."""
    return [
        {
            "function_id": fid,
            "name": name,
            "category": category,
            "labels": labels.as_dict(),
        }
        for fid, (name, category, _, labels) in sorted(_SUITE.items())
    ]
