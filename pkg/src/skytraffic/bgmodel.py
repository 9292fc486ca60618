"""Per-pixel adaptive Gaussian mixture background model.

Each pixel owns up to K weighted components (mean, variance). A new frame
is matched against the components in descending-weight order using the
squared normalized distance (x - mu)^2 / var; the first component under
match_threshold_sq absorbs the observation, otherwise the observation
seeds a new component. Pixels are labeled foreground when no component of
the background prefix (smallest descending-weight prefix with cumulative
weight above background_ratio) sits within classify_threshold_sq.

The update recursion, with a = learning_rate and o_k the ownership
indicator:

    w_k   <- w_k + a (o_k - w_k), then renormalized over live components
    mu_m  <- mu_m + (a / w_m) (x - mu_m)                (matched m only)
    var_m <- max(min_variance, var_m + (a / w_m) ((x - mu_m)^2 - var_m))

with w_m read after renormalization. An unmatched observation fills an
empty slot, or replaces the lowest-weight component once all K slots are
live, with (mean x, initial_variance, weight a) followed by
renormalization; the surviving weights are not decayed in that branch.
Components stay sorted by descending weight (stable under ties), and the
weight of every component is clamped only through renormalization, never
pruned.

State is float64 throughout so long runs stay in lockstep with a scalar
reference recursion. Per-pixel work is compiled with numba; a 640x480
frame updates in a few milliseconds on one core.
"""

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

# Band-specific classification defaults: the thermal band carries heavier
# sensor noise, so its threshold sits higher.
CLASSIFY_THRESHOLD_SQ_BY_BAND = {"RGB": 16.0, "IR": 36.0}

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class MixtureParams:
    max_components: int = 5
    match_threshold_sq: float = 9.0
    classify_threshold_sq: float = 16.0
    learning_rate: float = 1.0 / 500.0
    background_ratio: float = 0.9
    initial_variance: float = 225.0
    min_variance: float = 4.0
    warmup_frames: int = 200

    def __post_init__(self):
        if self.max_components < 1:
            raise ValueError(f"max_components must be >= 1, got {self.max_components}")
        if self.match_threshold_sq <= 0:
            raise ValueError(f"match_threshold_sq must be > 0, got {self.match_threshold_sq}")
        if self.classify_threshold_sq <= 0:
            raise ValueError(f"classify_threshold_sq must be > 0, got {self.classify_threshold_sq}")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if not 0.0 < self.background_ratio < 1.0:
            raise ValueError(f"background_ratio must be in (0, 1), got {self.background_ratio}")
        if self.min_variance <= 0:
            raise ValueError(f"min_variance must be > 0, got {self.min_variance}")
        if self.initial_variance < self.min_variance:
            raise ValueError(f"initial_variance {self.initial_variance} below "
                             f"min_variance {self.min_variance}")
        if self.warmup_frames < 0:
            raise ValueError(f"warmup_frames must be >= 0, got {self.warmup_frames}")


def luminance(frame):
    """Collapse an (H, W, 3) frame to single-channel luminance."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim == 2:
        return frame
    if frame.ndim != 3 or frame.shape[2] != 3:
        raise ValueError(f"expected (H, W) or (H, W, 3), got {frame.shape}")
    r, g, b = LUMA_WEIGHTS
    return frame[:, :, 0] * r + frame[:, :, 1] * g + frame[:, :, 2] * b


@njit(cache=True)
def _apply_kernel(x, w, mu, var, ncomp, out, match_t, classify_t, a,
                  bg_ratio, init_var, min_var, kmax):
    npix = x.shape[0]
    for i in range(npix):
        xi = x[i]
        n = ncomp[i]

        m = -1
        for k in range(n):
            d = xi - mu[i, k]
            if d * d / var[i, k] < match_t:
                m = k
                break

        if m >= 0:
            s = 0.0
            for k in range(n):
                o = 1.0 if k == m else 0.0
                w[i, k] = w[i, k] + a * (o - w[i, k])
                s += w[i, k]
            for k in range(n):
                w[i, k] /= s
            d = xi - mu[i, m]
            r = a / w[i, m]
            mu[i, m] += r * d
            v = var[i, m] + r * (d * d - var[i, m])
            var[i, m] = v if v > min_var else min_var
        else:
            if n < kmax:
                slot = n
                n += 1
                ncomp[i] = n
            else:
                slot = n - 1
            w[i, slot] = a
            mu[i, slot] = xi
            var[i, slot] = init_var
            s = 0.0
            for k in range(n):
                s += w[i, k]
            for k in range(n):
                w[i, k] /= s

        # stable insertion sort, descending weight
        for k in range(1, n):
            wk = w[i, k]
            mk = mu[i, k]
            vk = var[i, k]
            j = k - 1
            while j >= 0 and w[i, j] < wk:
                w[i, j + 1] = w[i, j]
                mu[i, j + 1] = mu[i, j]
                var[i, j + 1] = var[i, j]
                j -= 1
            w[i, j + 1] = wk
            mu[i, j + 1] = mk
            var[i, j + 1] = vk

        cum = 0.0
        fg = np.uint8(1)
        for k in range(n):
            if cum > bg_ratio:
                break
            d = xi - mu[i, k]
            if d * d / var[i, k] < classify_t:
                fg = np.uint8(0)
                break
            cum += w[i, k]
        out[i] = fg


@njit(cache=True)
def _classify_kernel(x, w, mu, var, ncomp, out, classify_t, bg_ratio):
    npix = x.shape[0]
    for i in range(npix):
        xi = x[i]
        n = ncomp[i]
        cum = 0.0
        fg = np.uint8(1)
        for k in range(n):
            if cum > bg_ratio:
                break
            d = xi - mu[i, k]
            if d * d / var[i, k] < classify_t:
                fg = np.uint8(0)
                break
            cum += w[i, k]
        out[i] = fg


@njit(cache=True)
def _apply_kernel_color(x, w, mu, var, ncomp, out, match_t, classify_t, a,
                        bg_ratio, init_var, min_var, kmax):
    # 3-channel variant: distance is the sum of per-channel squared
    # deviations over a shared scalar variance.
    npix = x.shape[0]
    nch = x.shape[1]
    held = np.empty(nch, dtype=np.float64)
    for i in range(npix):
        n = ncomp[i]

        m = -1
        for k in range(n):
            dsq = 0.0
            for c in range(nch):
                d = x[i, c] - mu[i, k, c]
                dsq += d * d
            if dsq / var[i, k] < match_t:
                m = k
                break

        if m >= 0:
            s = 0.0
            for k in range(n):
                o = 1.0 if k == m else 0.0
                w[i, k] = w[i, k] + a * (o - w[i, k])
                s += w[i, k]
            for k in range(n):
                w[i, k] /= s
            r = a / w[i, m]
            dsq = 0.0
            for c in range(nch):
                d = x[i, c] - mu[i, m, c]
                dsq += d * d
                mu[i, m, c] += r * d
            v = var[i, m] + r * (dsq - var[i, m])
            var[i, m] = v if v > min_var else min_var
        else:
            if n < kmax:
                slot = n
                n += 1
                ncomp[i] = n
            else:
                slot = n - 1
            w[i, slot] = a
            for c in range(nch):
                mu[i, slot, c] = x[i, c]
            var[i, slot] = init_var
            s = 0.0
            for k in range(n):
                s += w[i, k]
            for k in range(n):
                w[i, k] /= s

        for k in range(1, n):
            wk = w[i, k]
            vk = var[i, k]
            for c in range(nch):
                held[c] = mu[i, k, c]
            j = k - 1
            while j >= 0 and w[i, j] < wk:
                w[i, j + 1] = w[i, j]
                var[i, j + 1] = var[i, j]
                for c in range(nch):
                    mu[i, j + 1, c] = mu[i, j, c]
                j -= 1
            w[i, j + 1] = wk
            var[i, j + 1] = vk
            for c in range(nch):
                mu[i, j + 1, c] = held[c]

        cum = 0.0
        fg = np.uint8(1)
        for k in range(n):
            if cum > bg_ratio:
                break
            dsq = 0.0
            for c in range(nch):
                d = x[i, c] - mu[i, k, c]
                dsq += d * d
            if dsq / var[i, k] < classify_t:
                fg = np.uint8(0)
                break
            cum += w[i, k]
        out[i] = fg


@njit(cache=True)
def _classify_kernel_color(x, w, mu, var, ncomp, out, classify_t, bg_ratio):
    npix = x.shape[0]
    nch = x.shape[1]
    for i in range(npix):
        n = ncomp[i]
        cum = 0.0
        fg = np.uint8(1)
        for k in range(n):
            if cum > bg_ratio:
                break
            dsq = 0.0
            for c in range(nch):
                d = x[i, c] - mu[i, k, c]
                dsq += d * d
            if dsq / var[i, k] < classify_t:
                fg = np.uint8(0)
                break
            cum += w[i, k]
        out[i] = fg


class MixtureModel:
    """Mutable per-pixel mixture state for one frame geometry."""

    def __init__(self, params, first_frame):
        frame = np.asarray(first_frame, dtype=np.float64)
        if frame.ndim == 2:
            self.channels = 1
        elif frame.ndim == 3 and frame.shape[2] == 3:
            self.channels = 3
        else:
            raise ValueError(f"expected (H, W) or (H, W, 3) frame, got {frame.shape}")
        self.params = params
        self.height, self.width = frame.shape[:2]
        n = self.height * self.width
        k = params.max_components
        self.weights = np.zeros((n, k), dtype=np.float64)
        self.variances = np.zeros((n, k), dtype=np.float64)
        self.ncomp = np.zeros(n, dtype=np.int64)
        if self.channels == 1:
            self.means = np.zeros((n, k), dtype=np.float64)
            self.means[:, 0] = frame.ravel()
        else:
            self.means = np.zeros((n, k, 3), dtype=np.float64)
            self.means[:, 0, :] = frame.reshape(n, 3)
        self.weights[:, 0] = 1.0
        self.variances[:, 0] = params.initial_variance
        self.ncomp[:] = 1
        self.frame_count = 0

    def _check_frame(self, frame):
        frame = np.asarray(frame, dtype=np.float64)
        expected = (self.height, self.width) if self.channels == 1 \
            else (self.height, self.width, 3)
        if frame.shape != expected:
            raise ValueError(f"frame shape {frame.shape} does not match model {expected}")
        return frame

    def apply(self, frame):
        """Update the model with one frame and return its foreground mask
        (uint8, 1 = foreground). Classification sees the post-update state."""
        frame = self._check_frame(frame)
        p = self.params
        out = np.empty(self.height * self.width, dtype=np.uint8)
        if self.channels == 1:
            _apply_kernel(frame.ravel(), self.weights, self.means, self.variances,
                          self.ncomp, out, p.match_threshold_sq, p.classify_threshold_sq,
                          p.learning_rate, p.background_ratio, p.initial_variance,
                          p.min_variance, p.max_components)
        else:
            _apply_kernel_color(frame.reshape(-1, 3), self.weights, self.means,
                                self.variances, self.ncomp, out, p.match_threshold_sq,
                                p.classify_threshold_sq, p.learning_rate,
                                p.background_ratio, p.initial_variance,
                                p.min_variance, p.max_components)
        self.frame_count += 1
        return out.reshape(self.height, self.width)

    def classify(self, frame, classify_threshold_sq=None):
        """Label a frame against the current state without updating it."""
        frame = self._check_frame(frame)
        t = self.params.classify_threshold_sq if classify_threshold_sq is None \
            else float(classify_threshold_sq)
        if t <= 0:
            raise ValueError(f"classify_threshold_sq must be > 0, got {t}")
        out = np.empty(self.height * self.width, dtype=np.uint8)
        if self.channels == 1:
            _classify_kernel(frame.ravel(), self.weights, self.means, self.variances,
                             self.ncomp, out, t, self.params.background_ratio)
        else:
            _classify_kernel_color(frame.reshape(-1, 3), self.weights, self.means,
                                   self.variances, self.ncomp, out, t,
                                   self.params.background_ratio)
        return out.reshape(self.height, self.width)

    def background_image(self):
        """Mean of the highest-weight component per pixel."""
        if self.channels == 1:
            return self.means[:, 0].reshape(self.height, self.width).copy()
        return self.means[:, 0, :].reshape(self.height, self.width, 3).copy()


def init_model(params, first_frame):
    """Fresh model with one component per pixel owning the first frame."""
    return MixtureModel(params, first_frame)
