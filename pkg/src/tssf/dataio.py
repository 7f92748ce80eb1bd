"""Trial data ingestion, covariance estimation, and a synthetic generator.

The on-disk trial format ("EEGT") is a little-endian binary layout:

===========  ==========================================================
bytes        content
===========  ==========================================================
4            magic ``b"EEGT"``
u32          format version (currently 1)
u32 x 3      C (channels), N (samples), T (trials)
f64 x C*N*T  data tensor, channel-major: index (c, n, t) is stored at
             offset ((c*N + n)*T + t)
i8 x T       labels, each -1 or +1
u32 x T      session ids
C records    channel names, each a u32 byte length + UTF-8 bytes
===========  ==========================================================

Reads are strict: wrong magic or version, truncation, and trailing bytes
all raise :class:`~tssf.errors.FormatError`, and ``read(write(x))`` is
bit-exact.
"""

import os
import struct
import warnings
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg
import scipy.signal

from .errors import FormatError, InvalidInput, NotPositiveDefinite
from .manifold import ensure_spd

MAGIC = b"EEGT"
FORMAT_VERSION = 1


@dataclass
class TrialSet:
    """Band-passed epochs: a C x N x T tensor with per-trial metadata."""

    data: np.ndarray
    labels: np.ndarray
    session_ids: np.ndarray
    channel_names: list

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int8)
        self.session_ids = np.asarray(self.session_ids, dtype=np.uint32)
        if self.data.ndim != 3:
            raise InvalidInput("data must be a C x N x T tensor")
        c, _, t = self.data.shape
        if self.labels.shape != (t,) or self.session_ids.shape != (t,):
            raise InvalidInput("labels and session ids must have one entry per trial")
        if not np.all(np.isin(self.labels, (-1, 1))):
            raise InvalidInput("labels must be -1 or +1")
        if len(self.channel_names) != c:
            raise InvalidInput("need one channel name per channel")
        self.channel_names = [str(n) for n in self.channel_names]

    @property
    def n_channels(self):
        return self.data.shape[0]

    @property
    def n_samples(self):
        return self.data.shape[1]

    @property
    def n_trials(self):
        return self.data.shape[2]

    def trial(self, t):
        """The C x N data of trial ``t``."""
        return self.data[:, :, t]

    def subset(self, indices):
        """New TrialSet restricted to the given trial indices."""
        indices = np.asarray(indices)
        return TrialSet(
            data=self.data[:, :, indices],
            labels=self.labels[indices],
            session_ids=self.session_ids[indices],
            channel_names=list(self.channel_names),
        )


def write_trials(trialset, path):
    """Serialize a TrialSet in the EEGT binary format."""
    c, n, t = trialset.data.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IIII", FORMAT_VERSION, c, n, t))
        fh.write(trialset.data.astype("<f8").tobytes(order="C"))
        fh.write(trialset.labels.astype("<i1").tobytes())
        fh.write(trialset.session_ids.astype("<u4").tobytes())
        for name in trialset.channel_names:
            raw = name.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)


def read_trials(path):
    """Read an EEGT file; raises FormatError on any structural problem."""
    with open(path, "rb") as fh:
        blob = fh.read()
    view = memoryview(blob)
    pos = 0

    def take(nbytes, what):
        nonlocal pos
        if pos + nbytes > len(view):
            raise FormatError(f"truncated file: {what} needs {nbytes} bytes")
        out = view[pos : pos + nbytes]
        pos += nbytes
        return out

    if bytes(take(4, "magic")) != MAGIC:
        raise FormatError("bad magic; not an EEGT file")
    version, c, n, t = struct.unpack("<IIII", take(16, "header"))
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported format version {version}")
    data = np.frombuffer(take(8 * c * n * t, "data tensor"), dtype="<f8")
    data = data.reshape(c, n, t).copy()
    labels = np.frombuffer(take(t, "labels"), dtype="<i1").copy()
    sessions = np.frombuffer(take(4 * t, "session ids"), dtype="<u4").copy()
    names = []
    for i in range(c):
        (length,) = struct.unpack("<I", take(4, f"channel name {i} length"))
        names.append(bytes(take(length, f"channel name {i}")).decode("utf-8"))
    if pos != len(view):
        raise FormatError(f"{len(view) - pos} trailing bytes after channel names")
    return TrialSet(data=data, labels=labels, session_ids=sessions, channel_names=names)


def read_manifest(path):
    """Parse a manifest: one ``<session id> <file path>`` pair per line.

    Relative paths are resolved against the manifest's directory.
    ``#`` starts a comment line.
    """
    base = os.path.dirname(os.path.abspath(path))
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(None, 1)
            if len(parts) != 2:
                raise FormatError(f"manifest line {lineno}: expected '<session> <path>'")
            try:
                session = int(parts[0])
            except ValueError:
                raise FormatError(f"manifest line {lineno}: bad session id") from None
            if session < 0:
                raise FormatError(f"manifest line {lineno}: session id must be >= 0")
            file_path = parts[1]
            if not os.path.isabs(file_path):
                file_path = os.path.join(base, file_path)
            entries.append((session, file_path))
    if not entries:
        raise FormatError("manifest lists no files")
    return entries


def load_manifest(path):
    """Load every file in a manifest into one TrialSet (one file = one session)."""
    sets = []
    for session, file_path in read_manifest(path):
        ts = read_trials(file_path)
        ts.session_ids[:] = session
        sets.append(ts)
    first = sets[0]
    for ts in sets[1:]:
        if ts.data.shape[:2] != first.data.shape[:2]:
            raise InvalidInput("manifest files disagree on channels or samples")
    return TrialSet(
        data=np.concatenate([ts.data for ts in sets], axis=2),
        labels=np.concatenate([ts.labels for ts in sets]),
        session_ids=np.concatenate([ts.session_ids for ts in sets]),
        channel_names=list(first.channel_names),
    )


def read_trial_csv(path):
    """One trial from a CSV file: rows are channels, columns samples."""
    try:
        arr = np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)
    except ValueError as exc:
        raise FormatError(f"bad trial CSV: {exc}") from exc
    return arr


def empirical_covariance(trial, center=True, scale=True, spd_tol=1e-10, jitter=0.0):
    """Sample covariance ``X @ X.T`` of one C x N trial.

    Per-channel means are removed first when ``center`` (default), and the
    product is divided by N when ``scale`` (default). The result is
    validated SPD; rank-deficient estimates are rejected.
    """
    x = np.asarray(trial, dtype=float)
    if x.ndim != 2:
        raise InvalidInput("trial must be a C x N matrix")
    c, n = x.shape
    if n <= c:
        warnings.warn(
            f"trial has {n} samples for {c} channels; covariance may be rank-deficient",
            stacklevel=2,
        )
    if center:
        x = x - x.mean(axis=1, keepdims=True)
    cov = x @ x.T
    if scale:
        cov /= n
    cov = 0.5 * (cov + cov.T)
    try:
        return ensure_spd(cov, spd_tol=spd_tol, jitter=jitter, name="covariance")
    except NotPositiveDefinite as exc:
        raise NotPositiveDefinite(
            f"{exc} (estimate is rank-deficient: use more samples per trial, "
            "drop constant channels, or pass jitter > 0)"
        ) from exc


def covariances(trialset, center=True, scale=True, spd_tol=1e-10, jitter=0.0):
    """Per-trial covariances of a TrialSet, shape (T, C, C), trial order."""
    return np.array(
        [
            empirical_covariance(
                trialset.trial(t), center=center, scale=scale, spd_tol=spd_tol, jitter=jitter
            )
            for t in range(trialset.n_trials)
        ]
    )


def fir_bandpass(trialset, low_hz=8.0, high_hz=32.0, fs_hz=250.0, taps=129):
    """Zero-phase FIR band-pass of every channel of every trial.

    A Hamming-windowed sinc band-pass is applied forward and time-reversed
    (no phase distortion; the amplitude response is squared). ``low_hz``
    and ``high_hz`` are passband edges: the Hamming transition bands
    extend outside them, so in-band tones keep their amplitude.
    """
    if not (0.0 < low_hz < high_hz < fs_hz / 2.0):
        raise InvalidInput("need 0 < low < high < fs/2")
    if taps < 3 or taps % 2 == 0:
        raise InvalidInput("taps must be odd and >= 3")
    n = trialset.n_samples
    transition = 3.3 * fs_hz / taps  # approximate Hamming transition width
    cut_low = max(low_hz - transition / 2.0, 0.05 * low_hz)
    cut_high = min(high_hz + transition / 2.0, fs_hz / 2.0 - 0.05 * (fs_hz / 2.0 - high_hz))
    coef = scipy.signal.firwin(
        taps, [cut_low, cut_high], pass_zero=False, fs=fs_hz, window="hamming"
    )
    padlen = min(3 * taps, n - 1)
    filtered = scipy.signal.filtfilt(coef, [1.0], trialset.data, axis=1, padlen=padlen)
    return replace(trialset, data=filtered)


@dataclass
class SynthConfig:
    """Linear-mixing generator: ``X = A @ sources + noise``.

    The first ``n_discriminative`` sources carry class-dependent variances
    (``var_pos`` for label +1, ``var_neg`` for label -1); the remaining
    sources share ``background_variance``. ``nonstationarity`` rotates the
    mixing matrix by a random per-trial rotation of that magnitude (radians).
    """

    channels: int = 8
    samples: int = 256
    trials_per_class: int = 100
    seed: int = 0
    n_discriminative: int = 2
    var_pos: tuple = (4.0, 1.0)
    var_neg: tuple = (1.0, 4.0)
    background_variance: float = 1.0
    noise_sigma: float = 0.0
    mixing: str = "random"
    nonstationarity: float = 0.0
    sessions: int = 1

    def validate(self):
        if self.channels < 1 or self.samples < 1 or self.trials_per_class < 1:
            raise InvalidInput("channels, samples, trials_per_class must be >= 1")
        if not 1 <= self.n_discriminative <= self.channels:
            raise InvalidInput("n_discriminative must be in [1, channels]")
        if len(self.var_pos) != self.n_discriminative or len(self.var_neg) != self.n_discriminative:
            raise InvalidInput("var_pos/var_neg need one variance per discriminative source")
        if min(self.var_pos) <= 0 or min(self.var_neg) <= 0 or self.background_variance <= 0:
            raise InvalidInput("source variances must be positive")
        if self.noise_sigma < 0:
            raise InvalidInput("noise_sigma must be >= 0")
        if self.nonstationarity < 0:
            raise InvalidInput("nonstationarity must be >= 0")
        if self.mixing not in ("random", "identity"):
            raise InvalidInput("mixing must be 'random' or 'identity'")
        if self.sessions < 1:
            raise InvalidInput("sessions must be >= 1")
        return self

    @classmethod
    def from_text(cls, path):
        """Read a config file of ``key: value`` lines (# for comments)."""
        fields = {f.name: f for f in cls.__dataclass_fields__.values()}
        kwargs = {}
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if ":" not in line:
                    raise InvalidInput(f"config line {lineno}: expected 'key: value'")
                key, _, value = line.partition(":")
                key, value = key.strip(), value.strip()
                if key not in fields:
                    raise InvalidInput(f"config line {lineno}: unknown key {key!r}")
                kwargs[key] = _parse_config_value(key, value)
        return cls(**kwargs).validate()


def _parse_config_value(key, value):
    if key in ("var_pos", "var_neg"):
        try:
            return tuple(float(v) for v in value.replace(",", " ").split())
        except ValueError:
            raise InvalidInput(f"{key} must be a list of numbers") from None
    if key == "mixing":
        return value
    try:
        if key in ("background_variance", "noise_sigma", "nonstationarity"):
            return float(value)
        return int(value)
    except ValueError:
        raise InvalidInput(f"config key {key!r} has a bad value {value!r}") from None


def synth_generate(cfg):
    """Generate a TrialSet from a SynthConfig; same seed, same bytes.

    With zero noise and identity mixing, per-class sample covariances
    converge to the configured diagonal source variances; with a mixing
    matrix A they converge to ``A @ diag(vars) @ A.T``.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    c, n = cfg.channels, cfg.samples
    t_total = 2 * cfg.trials_per_class

    if cfg.mixing == "identity":
        mix = np.eye(c)
    else:
        # well-conditioned by construction: singular values in [0.5, 1.5]
        u, _ = np.linalg.qr(rng.standard_normal((c, c)))
        v, _ = np.linalg.qr(rng.standard_normal((c, c)))
        mix = (u * rng.uniform(0.5, 1.5, size=c)) @ v.T

    stds = {
        1: np.sqrt(np.concatenate([cfg.var_pos, np.full(c - cfg.n_discriminative, cfg.background_variance)])),
        -1: np.sqrt(np.concatenate([cfg.var_neg, np.full(c - cfg.n_discriminative, cfg.background_variance)])),
    }
    labels = np.where(np.arange(t_total) % 2 == 0, 1, -1).astype(np.int8)
    session_ids = ((np.arange(t_total) // 2) % cfg.sessions).astype(np.uint32)

    data = np.empty((c, n, t_total))
    for t in range(t_total):
        sources = rng.standard_normal((c, n)) * stds[int(labels[t])][:, None]
        mix_t = mix
        if cfg.nonstationarity > 0:
            g = rng.standard_normal((c, c))
            mix_t = mix @ scipy.linalg.expm(cfg.nonstationarity * 0.5 * (g - g.T))
        x = mix_t @ sources
        if cfg.noise_sigma > 0:
            x = x + cfg.noise_sigma * rng.standard_normal((c, n))
        data[:, :, t] = x

    names = [f"ch{i:02d}" for i in range(c)]
    return TrialSet(data=data, labels=labels, session_ids=session_ids, channel_names=names)
