"""Gaussian mixture models fitted by EM, cluster roles, background synthesis."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .imgcore import ColorImage, LUMA_WEIGHTS, gaussian_blur

SIGMA_FLOOR = 1e-4   # gray units, univariate std floor
LAMBDA_FLOOR = 1e-6  # covariance eigenvalue floor
MAX_COMPONENTS = 8
DEFAULT_MAX_ITER = 200
DEFAULT_TOL = 1e-6
SUBSAMPLE_CAP = 200_000

_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class EmTrace:
    iterations: int
    log_likelihood_per_iter: list
    converged: bool
    clamped_components: tuple = ()

    def __post_init__(self):
        lls = self.log_likelihood_per_iter
        for a, b in zip(lls, lls[1:]):
            if b < a - 1e-9:
                raise ValueError(f"log-likelihood decreased from {a!r} to {b!r}")


@dataclass(frozen=True)
class Gmm1D:
    priors: np.ndarray   # (K,)
    means: np.ndarray    # (K,)
    stds: np.ndarray     # (K,)

    def __post_init__(self):
        object.__setattr__(self, "priors", np.asarray(self.priors, dtype=np.float64))
        object.__setattr__(self, "means", np.asarray(self.means, dtype=np.float64))
        object.__setattr__(self, "stds", np.asarray(self.stds, dtype=np.float64))
        k = len(self.priors)
        if not (1 <= k <= MAX_COMPONENTS):
            raise ValueError(f"component count {k} outside [1, {MAX_COMPONENTS}]")
        if abs(self.priors.sum() - 1.0) > 1e-9:
            raise ValueError("priors must sum to 1")
        if np.any(self.stds < SIGMA_FLOOR - 1e-15):
            raise ValueError(f"stds below floor {SIGMA_FLOOR}")

    @property
    def K(self):
        return len(self.priors)

    def log_density(self, x):
        x = np.asarray(x, dtype=np.float64)
        z = (x[..., None] - self.means) / self.stds
        comp = -0.5 * (z * z + _LOG_2PI) - np.log(self.stds) + np.log(self.priors)
        return _logsumexp(comp, axis=-1)


@dataclass(frozen=True)
class Gmm3D:
    priors: np.ndarray   # (K,)
    means: np.ndarray    # (K, 3)
    covs: np.ndarray     # (K, 3, 3)

    def __post_init__(self):
        object.__setattr__(self, "priors", np.asarray(self.priors, dtype=np.float64))
        object.__setattr__(self, "means", np.asarray(self.means, dtype=np.float64))
        object.__setattr__(self, "covs", np.asarray(self.covs, dtype=np.float64))
        k = len(self.priors)
        if not (1 <= k <= MAX_COMPONENTS):
            raise ValueError(f"component count {k} outside [1, {MAX_COMPONENTS}]")
        if abs(self.priors.sum() - 1.0) > 1e-9:
            raise ValueError("priors must sum to 1")
        if self.means.shape != (k, 3) or self.covs.shape != (k, 3, 3):
            raise ValueError("means must be (K,3) and covariances (K,3,3)")
        for i, cov in enumerate(self.covs):
            if not np.allclose(cov, cov.T):
                raise ValueError(f"covariance {i} is not symmetric")
            if np.linalg.eigvalsh(cov).min() < LAMBDA_FLOOR * (1 - 1e-9):
                raise ValueError(f"covariance {i} has eigenvalue below {LAMBDA_FLOOR}")

    @property
    def K(self):
        return len(self.priors)

    def component_log_densities(self, x):
        """(N, K) array of log(P_i * G_i(x)) for x of shape (N, 3)."""
        x = np.asarray(x, dtype=np.float64)
        out = np.empty((x.shape[0], self.K))
        for i in range(self.K):
            diff = x - self.means[i]
            chol = np.linalg.cholesky(self.covs[i])
            sol = np.linalg.solve(chol, diff.T)
            maha = np.sum(sol * sol, axis=0)
            logdet = 2.0 * np.log(np.diag(chol)).sum()
            out[:, i] = np.log(self.priors[i]) - 0.5 * (maha + logdet + 3.0 * _LOG_2PI)
        return out

    def log_density(self, x):
        return _logsumexp(self.component_log_densities(x), axis=1)


@dataclass(frozen=True)
class ClusterRoles:
    background_idx: int
    text_idx: int
    scanner_white_idx: int | None = None
    noise_idxs: tuple = field(default=())

    def __post_init__(self):
        ids = [self.background_idx, self.text_idx]
        if self.scanner_white_idx is not None:
            ids.append(self.scanner_white_idx)
        ids.extend(self.noise_idxs)
        if len(ids) != len(set(ids)):
            raise ValueError("cluster roles must use distinct component indices")


def _logsumexp(a, axis):
    m = np.max(a, axis=axis, keepdims=True)
    return (m + np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True))).squeeze(axis)


def _subsample(samples, cap, rng):
    if cap is not None and len(samples) > cap:
        idx = rng.choice(len(samples), size=cap, replace=False)
        return samples[np.sort(idx)]
    return samples


def _kmeanspp_means(samples, k, rng):
    """k-means++ style seeding: first center uniform, rest by squared distance."""
    n = len(samples)
    chosen = [int(rng.integers(n))]
    flat = samples.reshape(n, -1)
    for _ in range(1, k):
        d2 = np.min(
            [np.sum((flat - flat[c]) ** 2, axis=1) for c in chosen], axis=0
        )
        total = d2.sum()
        if total <= 0:
            # all remaining points coincide with a center; spread arbitrarily
            chosen.append(int(rng.integers(n)))
            continue
        chosen.append(int(rng.choice(n, p=d2 / total)))
    return samples[chosen].copy()


def fit_em_1d(samples, k, seed=0, max_iter=DEFAULT_MAX_ITER, tol=DEFAULT_TOL,
              subsample_cap=SUBSAMPLE_CAP):
    """EM fit of a K-component univariate mixture. Deterministic per seed."""
    samples = np.asarray(samples, dtype=np.float64).ravel()
    if samples.size == 0:
        raise ValueError("samples must be nonempty")
    if k < 1:
        raise ValueError("K must be >= 1")
    if k > np.unique(samples).size:
        raise ValueError(f"K={k} exceeds the number of distinct samples")
    rng = np.random.Generator(np.random.PCG64(seed))
    x = _subsample(samples, subsample_cap, rng)
    n = x.size

    means = _kmeanspp_means(x, k, rng)
    stds = np.full(k, max(x.std(), SIGMA_FLOOR))
    priors = np.full(k, 1.0 / k)

    lls = []
    clamped = set()
    converged = False
    for _ in range(max_iter):
        z = (x[:, None] - means) / stds
        log_joint = -0.5 * (z * z + _LOG_2PI) - np.log(stds) + np.log(priors)
        log_norm = _logsumexp(log_joint, axis=1)
        ll = float(log_norm.sum())
        resp = np.exp(log_joint - log_norm[:, None])

        if lls and abs(ll - lls[-1]) < tol:
            lls.append(ll)
            converged = True
            break
        lls.append(ll)

        nk = resp.sum(axis=0)
        nk = np.maximum(nk, 1e-300)
        priors = nk / n
        priors = priors / priors.sum()
        means = (resp * x[:, None]).sum(axis=0) / nk
        var = (resp * (x[:, None] - means) ** 2).sum(axis=0) / nk
        stds = np.sqrt(var)
        low = stds < SIGMA_FLOOR
        if low.any():
            clamped.update(np.nonzero(low)[0].tolist())
            stds = np.maximum(stds, SIGMA_FLOOR)

    model = Gmm1D(priors, means, stds)
    trace = EmTrace(len(lls), lls, converged, tuple(sorted(clamped)))
    return model, trace


def _regularize_cov(cov):
    """Lift eigenvalues to the floor; returns (cov, was_clamped)."""
    cov = (cov + cov.T) / 2.0
    min_eig = float(np.linalg.eigvalsh(cov).min())
    if min_eig < LAMBDA_FLOOR:
        cov = cov + (LAMBDA_FLOOR + max(0.0, -min_eig)) * np.eye(3)
        return cov, True
    return cov, False


def fit_em_3d(samples, k, seed=0, max_iter=DEFAULT_MAX_ITER, tol=DEFAULT_TOL,
              subsample_cap=SUBSAMPLE_CAP):
    """EM fit of a K-component trivariate mixture with full covariances."""
    samples = np.asarray(samples, dtype=np.float64).reshape(-1, 3)
    if samples.size == 0:
        raise ValueError("samples must be nonempty")
    if k < 1:
        raise ValueError("K must be >= 1")
    if k > np.unique(samples, axis=0).shape[0]:
        raise ValueError(f"K={k} exceeds the number of distinct samples")
    rng = np.random.Generator(np.random.PCG64(seed))
    x = _subsample(samples, subsample_cap, rng)
    n = len(x)

    means = _kmeanspp_means(x, k, rng)
    base_cov, _ = _regularize_cov(np.cov(x.T) if n > 1 else np.zeros((3, 3)))
    covs = np.stack([base_cov.copy() for _ in range(k)])
    priors = np.full(k, 1.0 / k)

    lls = []
    clamped = set()
    converged = False
    for _ in range(max_iter):
        model = Gmm3D(priors, means, covs)
        log_joint = model.component_log_densities(x)
        log_norm = _logsumexp(log_joint, axis=1)
        ll = float(log_norm.sum())
        resp = np.exp(log_joint - log_norm[:, None])

        if lls and abs(ll - lls[-1]) < tol:
            lls.append(ll)
            converged = True
            break
        lls.append(ll)

        nk = np.maximum(resp.sum(axis=0), 1e-300)
        priors = nk / n
        priors = priors / priors.sum()
        means = (resp.T @ x) / nk[:, None]
        new_covs = []
        for i in range(k):
            diff = x - means[i]
            cov = (resp[:, i][:, None] * diff).T @ diff / nk[i]
            cov, was_clamped = _regularize_cov(cov)
            if was_clamped:
                clamped.add(i)
            new_covs.append(cov)
        covs = np.stack(new_covs)

    model = Gmm3D(priors, means, covs)
    trace = EmTrace(len(lls), lls, converged, tuple(sorted(clamped)))
    return model, trace


def responsibilities(model: Gmm3D, x) -> np.ndarray:
    log_joint = model.component_log_densities(np.asarray(x).reshape(-1, 3))
    log_norm = _logsumexp(log_joint, axis=1)
    return np.exp(log_joint - log_norm[:, None])


def assign_clusters(model: Gmm3D, img: ColorImage) -> np.ndarray:
    """Per-pixel argmax-posterior labels, ties to the lowest index."""
    flat = img.data.reshape(-1, 3)
    labels = np.argmax(model.component_log_densities(flat), axis=1)
    return labels.reshape(img.height, img.width).astype(np.int32)


def mean_luma(model: Gmm3D) -> np.ndarray:
    r, g, b = LUMA_WEIGHTS
    return r * model.means[:, 0] + g * model.means[:, 1] + b * model.means[:, 2]


def identify_roles(model: Gmm3D, white_luma: float = 0.92) -> ClusterRoles:
    """Background = highest prior; text = darkest mean; bright leftovers are
    scanner white; everything else is noise/back-impression."""
    if model.K < 2:
        raise ValueError("cannot separate text from background with K < 2")
    lumas = mean_luma(model)
    background = int(np.argmax(model.priors))
    text = int(np.argmin(lumas))
    if text == background:
        raise ValueError(
            "background and text resolve to the same component; the mixture "
            "does not separate them (try a different K)"
        )
    white = None
    rest = [i for i in range(model.K) if i not in (background, text)]
    bright = [i for i in rest if lumas[i] > white_luma]
    if bright:
        white = max(bright, key=lambda i: lumas[i])
        rest.remove(white)
    return ClusterRoles(background, text, white, tuple(rest))


def sample_background(model: Gmm3D, roles: ClusterRoles, width, height, seed) -> ColorImage:
    """I.i.d. draws from the background component, clamped to [0,1]."""
    rng = np.random.Generator(np.random.PCG64(seed))
    mean = model.means[roles.background_idx]
    cov = model.covs[roles.background_idx]
    chol = np.linalg.cholesky(cov)
    z = rng.standard_normal((height, width, 3))
    return ColorImage(np.clip(z @ chol.T + mean, 0.0, 1.0))


def synthesize_background(model: Gmm3D, roles: ClusterRoles, width, height,
                          seed, blur_sigma=2.0) -> ColorImage:
    """Random background fill followed by Gaussian smoothing."""
    raw = sample_background(model, roles, width, height, seed)
    if blur_sigma <= 0:
        return raw
    return gaussian_blur(raw, blur_sigma)


# --- plain-text model serialization ---------------------------------------

_FMT = "{:.17g}"


def _fmt_row(values):
    return " ".join(_FMT.format(float(v)) for v in values)


def dumps_model(model) -> str:
    lines = []
    if isinstance(model, Gmm1D):
        lines.append("gmm1d 1")
        lines.append(f"K {model.K}")
        for i in range(model.K):
            lines.append(_fmt_row([model.priors[i], model.means[i], model.stds[i]]))
    elif isinstance(model, Gmm3D):
        lines.append("gmm3d 1")
        lines.append(f"K {model.K}")
        for i in range(model.K):
            lines.append(_FMT.format(float(model.priors[i])))
            lines.append(_fmt_row(model.means[i]))
            lines.append(_fmt_row(model.covs[i].ravel()))
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return "\n".join(lines) + "\n"


def loads_model(text: str):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty model file")
    kind, version = lines[0].split()
    if version != "1":
        raise ValueError(f"unsupported model format version {version}")
    k = int(lines[1].split()[1])
    if kind == "gmm1d":
        rows = [list(map(float, ln.split())) for ln in lines[2 : 2 + k]]
        arr = np.array(rows)
        return Gmm1D(arr[:, 0], arr[:, 1], arr[:, 2])
    if kind == "gmm3d":
        priors, means, covs = [], [], []
        for i in range(k):
            base = 2 + 3 * i
            priors.append(float(lines[base]))
            means.append(list(map(float, lines[base + 1].split())))
            covs.append(np.array(list(map(float, lines[base + 2].split()))).reshape(3, 3))
        return Gmm3D(np.array(priors), np.array(means), np.stack(covs))
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(model, path):
    with open(path, "w") as fh:
        fh.write(dumps_model(model))


def load_model(path):
    with open(path) as fh:
        return loads_model(fh.read())
