"""Synthetic multipath environment producing RSS sample streams.

Each receive antenna sees a coherent sum of rays: a direct path and/or
single-bounce paths through fixed point scatterers. A ray of total length
``d`` contributes ``g * exp(-2j*pi*d/lambda) / d**(alpha/2)``, so the
noise-free received power is location specific and varies on the scale of
half a wavelength.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0
# Near-field guard on ray lengths.
MIN_RAY_LENGTH = 1e-2


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        for value in (self.x, self.y, self.z):
            if not math.isfinite(value):
                raise ValueError(f"non-finite coordinate in {self!r}")

    def as_array(self):
        return np.array([self.x, self.y, self.z], dtype=float)

    @classmethod
    def from_seq(cls, seq):
        x, y, z = (float(v) for v in seq)
        return cls(x, y, z)


@dataclass(frozen=True)
class ReceiverSpec:
    position: Point3
    antenna_offsets: tuple
    noise_power: float = 0.0
    gain_db: float = 0.0  # front-end gain, scales signal and noise alike

    def __post_init__(self):
        if len(self.antenna_offsets) < 1:
            raise ValueError("a receiver needs at least one antenna")
        if not self.noise_power >= 0:
            raise ValueError("noise_power must be >= 0")
        if not math.isfinite(self.gain_db):
            raise ValueError("gain_db must be finite")
        object.__setattr__(self, "antenna_offsets", tuple(self.antenna_offsets))

    def antenna_positions(self):
        base = self.position.as_array()
        return np.array([base + off.as_array() for off in self.antenna_offsets])


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MultipathModel:
    """Immutable ray model.

    ``scatterers`` is ``(K, 3)``; a row of NaNs marks a direct (line of
    sight) ray. ``gains`` is ``(F, K)`` complex, one row per antenna, and
    ``alphas`` holds the per-ray path-loss exponent.
    """

    antenna_positions: np.ndarray
    noise_power: np.ndarray
    scatterers: np.ndarray
    gains: np.ndarray
    alphas: np.ndarray
    carrier_hz: float = 2.3e9
    tx_power: float = 1.0
    bounds: tuple = None
    rng_seed: int = None
    receivers: tuple = field(default=(), compare=False)

    def __post_init__(self):
        ant = _frozen(self.antenna_positions, float).reshape(-1, 3)
        F = ant.shape[0]
        if F < 1:
            raise ValueError("model needs at least one antenna")
        noise = _frozen(np.broadcast_to(self.noise_power, (F,)), float)
        scat = _frozen(self.scatterers, float).reshape(-1, 3)
        K = scat.shape[0]
        if K < 1:
            raise ValueError("model needs at least one ray")
        gains = _frozen(self.gains, complex)
        if gains.shape != (F, K):
            raise ValueError(f"gains must have shape {(F, K)}, got {gains.shape}")
        alphas = _frozen(np.broadcast_to(self.alphas, (K,)), float)
        if np.any(noise < 0):
            raise ValueError("noise power must be >= 0")
        if not np.all(np.isfinite(gains)):
            raise ValueError("ray gains must be finite")
        if np.any((alphas < 1.5) | (alphas > 4.0)):
            raise ValueError("path-loss exponents must lie in [1.5, 4]")
        if not self.carrier_hz > 0:
            raise ValueError("carrier frequency must be positive")
        if self.bounds is not None:
            lo, hi = (tuple(float(v) for v in b) for b in self.bounds)
            object.__setattr__(self, "bounds", (lo, hi))
        object.__setattr__(self, "antenna_positions", ant)
        object.__setattr__(self, "noise_power", noise)
        object.__setattr__(self, "scatterers", scat)
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "receivers", tuple(self.receivers))

    @property
    def n_antennas(self):
        return self.antenna_positions.shape[0]

    @property
    def n_rays(self):
        return self.scatterers.shape[0]

    @property
    def wavelength(self):
        return SPEED_OF_LIGHT / self.carrier_hz

    def check_location(self, location):
        p = location.as_array() if isinstance(location, Point3) else np.asarray(location, float)
        if p.shape != (3,) or not np.all(np.isfinite(p)):
            raise ValueError(f"invalid location {location!r}")
        if self.bounds is not None:
            lo, hi = np.array(self.bounds[0]), np.array(self.bounds[1])
            if np.any(p < lo - 1e-9) or np.any(p > hi + 1e-9):
                raise ValueError(f"location {p.tolist()} outside environment bounds")
        return p

    def ray_lengths(self, location):
        """``(F, K)`` total propagation length of every ray."""
        p = self.check_location(location)
        direct = np.isnan(self.scatterers[:, 0])
        ant = self.antenna_positions
        d_direct = np.linalg.norm(ant - p, axis=1)[:, None]
        scat = np.where(direct[:, None], 0.0, self.scatterers)
        leg_tx = np.linalg.norm(scat - p, axis=1)[None, :]
        leg_rx = np.linalg.norm(ant[:, None, :] - scat[None, :, :], axis=2)
        d = np.where(direct[None, :], d_direct, leg_tx + leg_rx)
        return np.maximum(d, MIN_RAY_LENGTH)

    def field(self, location):
        """Complex noise-free baseband channel coefficient per antenna."""
        d = self.ray_lengths(location)
        phase = np.exp(-2j * np.pi * d / self.wavelength)
        amp = self.gains * phase / d ** (self.alphas / 2.0)
        return math.sqrt(self.tx_power) * amp.sum(axis=1)


def _antenna_index(model, antenna):
    if not isinstance(antenna, (int, np.integer)) or not 0 <= antenna < model.n_antennas:
        raise ValueError(f"antenna index {antenna!r} out of range [0, {model.n_antennas})")
    return int(antenna)


def rss_true(model, location, antenna):
    """Expected received power ``|h|^2 + noise`` at one antenna."""
    m = _antenna_index(model, antenna)
    h = model.field(location)[m]
    return float(abs(h) ** 2 + model.noise_power[m])


def rss_true_vector(model, location):
    h = model.field(location)
    return np.abs(h) ** 2 + model.noise_power


@dataclass(frozen=True)
class SampleBlock:
    values: np.ndarray
    sample_interval: float = 1e-7

    def __post_init__(self):
        v = _frozen(self.values, float).ravel()
        if np.any(v < 0):
            raise ValueError("power samples must be nonnegative")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size


def _draw_power(h, noise_power, shape, rng):
    """|h*s + v|^2 for unit-modulus s with random phase and CN(0, noise) v.

    ``h`` and ``noise_power`` broadcast against the trailing axes of
    ``shape``; the first draw is the signal phase, then the noise.
    """
    theta = rng.uniform(0.0, 2.0 * np.pi, size=shape)
    s = np.exp(1j * theta)
    scale = np.sqrt(np.asarray(noise_power) / 2.0)
    v = scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return np.abs(h * s + v) ** 2


def sample_block(model, location, antenna, n_samples, rng=None, sample_interval=1e-7):
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    m = _antenna_index(model, antenna)
    rng = np.random.default_rng(rng)
    h = model.field(location)[m]
    values = _draw_power(h, model.noise_power[m], (int(n_samples),), rng)
    return SampleBlock(values, sample_interval)


def rss_estimate(block):
    values = block.values if isinstance(block, SampleBlock) else np.asarray(block, float)
    if values.size == 0:
        raise ValueError("cannot estimate RSS from an empty block")
    return float(values.mean())


def rss_vector_estimate(model, location, n_samples, rng=None):
    """One RSS vector estimate: each antenna averages its own N samples."""
    return rss_vector_estimates(model, location, 1, n_samples, rng)[0]


def rss_vector_estimates(model, location, n_estimates, n_samples, rng=None):
    """``(E, F)`` independent RSS vector estimates at a fixed location."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(rng)
    h = model.field(location)
    shape = (int(n_estimates), int(n_samples), model.n_antennas)
    power = _draw_power(h, model.noise_power, shape, rng)
    return power.mean(axis=1)


def spatial_profile(model, start, direction, length, step, antenna):
    """Noise-free RSS in dB sampled along a straight line.

    Returns an ``(n, 2)`` array of (distance along the line, RSS dB).
    """
    if not step > 0:
        raise ValueError("step must be positive")
    if length < 0:
        raise ValueError("length must be nonnegative")
    m = _antenna_index(model, antenna)
    u = direction.as_array() if isinstance(direction, Point3) else np.asarray(direction, float)
    norm = np.linalg.norm(u)
    if norm == 0:
        raise ValueError("direction must be nonzero")
    u = u / norm
    p0 = start.as_array() if isinstance(start, Point3) else np.asarray(start, float)
    n = int(math.floor(length / step + 1e-9)) + 1
    dist = np.arange(n) * step
    rss = np.empty(n)
    for i, t in enumerate(dist):
        h = model.field(p0 + t * u)[m]
        rss[i] = abs(h) ** 2 + model.noise_power[m]
    return np.column_stack([dist, 10.0 * np.log10(np.maximum(rss, 1e-15))])


# -- environment construction -------------------------------------------------

ROOM_SIZE = (10.0, 6.0, 3.0)
# Heterogeneous, uncalibrated front ends: each receiver scales its four
# antennas by its own gain and adds its own noise figure. The loudest
# receivers are also the noisiest, so linear-domain norms lean on the least
# reliable features. The SNR is quoted for the quietest receiver.
DEFAULT_RECEIVER_GAINS_DB = (0.0, 7.0, 13.0, 20.0)
DEFAULT_RECEIVER_NOISE_DB = (0.0, 5.0, 10.0, 15.0)
DEFAULT_SNR_DB = 6.5


def ula_offsets(n_antennas, spacing, axis=0):
    """Offsets of a uniform linear array centered on the receiver."""
    centre = (n_antennas - 1) / 2.0
    offsets = []
    for i in range(n_antennas):
        v = [0.0, 0.0, 0.0]
        v[axis] = (i - centre) * spacing
        offsets.append(Point3(*v))
    return tuple(offsets)


def default_receivers(carrier_hz=2.3e9, noise_power=1e-10, antennas_per_receiver=4,
                      gains_db=(0.0, 0.0, 0.0, 0.0), noise_figures_db=(0.0, 0.0, 0.0, 0.0)):
    lam = SPEED_OF_LIGHT / carrier_hz
    Lx, Ly, _ = ROOM_SIZE
    spots = [(0.5, 0.5, 2.5, 0), (Lx - 0.5, 0.5, 2.5, 1),
             (Lx - 0.5, Ly - 0.5, 2.5, 0), (0.5, Ly - 0.5, 2.5, 1)]
    if len(gains_db) != len(spots) or len(noise_figures_db) != len(spots):
        raise ValueError(f"need {len(spots)} receiver gains and noise figures")
    return tuple(
        ReceiverSpec(Point3(x, y, z), ula_offsets(antennas_per_receiver, lam / 2, axis),
                     noise_power * 10 ** (nf / 10.0), float(gdb))
        for (x, y, z, axis), gdb, nf in zip(spots, gains_db, noise_figures_db)
    )


def _antenna_arrays(receivers):
    """Antenna positions, unscaled noise powers and linear front-end gains."""
    ant = np.vstack([r.antenna_positions() for r in receivers])
    noise = np.concatenate([[r.noise_power] * len(r.antenna_offsets) for r in receivers])
    gain = np.concatenate([[10 ** (r.gain_db / 10.0)] * len(r.antenna_offsets) for r in receivers])
    return ant, noise, gain


def build_environment(receivers, n_rays=12, alpha=2.5, carrier_hz=2.3e9, snr_db=DEFAULT_SNR_DB,
                      seed=0, scatterers=None, include_los=True, scatter_gain=1.0,
                      room=ROOM_SIZE):
    """Place scatterers and draw ray gains from ``seed``.

    The transmit power is scaled so that a transmitter at the room centre
    reaches a mean per-antenna SNR of ``snr_db`` against the smallest
    receiver noise power (powers summed incoherently over rays).
    """
    if n_rays < 1:
        raise ValueError("n_rays must be >= 1")
    rng = np.random.default_rng(seed)
    n_scat = n_rays - 1 if include_los else n_rays
    lo, hi = np.zeros(3), np.asarray(room, float)
    if scatterers is None:
        scat = rng.uniform(lo, hi, size=(n_scat, 3))
    else:
        scat = np.asarray(scatterers, float).reshape(-1, 3)
        if scat.shape[0] != n_scat:
            raise ValueError(f"expected {n_scat} scatterers, got {scat.shape[0]}")
    if include_los:
        scat = np.vstack([np.full((1, 3), np.nan), scat])
    ant, noise, fe_gain = _antenna_arrays(receivers)
    F = ant.shape[0]
    g = scatter_gain * (rng.standard_normal((F, n_rays)) + 1j * rng.standard_normal((F, n_rays))) / np.sqrt(2)
    if include_los:
        g[:, 0] = 1.0
    model = MultipathModel(ant, noise, scat, g, alpha, carrier_hz, 1.0,
                           (tuple(lo), tuple(hi)), seed, receivers)
    centre = hi / 2.0
    centre[2] = 1.0
    d = model.ray_lengths(centre)
    mean_power = np.mean(np.sum(np.abs(g) ** 2 / d ** alpha, axis=1))
    ref_noise = float(np.min(noise))
    if ref_noise > 0:
        tx_power = 10 ** (snr_db / 10.0) * ref_noise / mean_power
    else:
        tx_power = 1.0 / mean_power
    # Front-end gains leave each antenna's SNR unchanged.
    g = g * np.sqrt(fe_gain)[:, None]
    return MultipathModel(ant, noise * fe_gain, scat, g, alpha, carrier_hz, tx_power,
                          (tuple(lo), tuple(hi)), seed, receivers)


def default_environment(seed=0, **overrides):
    """Ten by six metre room, 4 receivers x 4 antennas at 2.3 GHz."""
    overrides.setdefault("snr_db", DEFAULT_SNR_DB)
    carrier = overrides.pop("carrier_hz", 2.3e9)
    noise = overrides.pop("noise_power", 1e-10)
    gains_db = overrides.pop("receiver_gains_db", DEFAULT_RECEIVER_GAINS_DB)
    nf_db = overrides.pop("receiver_noise_db", DEFAULT_RECEIVER_NOISE_DB)
    receivers = default_receivers(carrier, noise, gains_db=gains_db, noise_figures_db=nf_db)
    return build_environment(receivers, carrier_hz=carrier, seed=seed, **overrides)


def environment_config(model, n_rays=None, snr_db=None):
    """JSON-serializable description that rebuilds ``model`` exactly."""
    direct = np.isnan(model.scatterers[:, 0])
    return {
        "carrier_hz": model.carrier_hz,
        "alpha": float(model.alphas[0]) if np.all(model.alphas == model.alphas[0]) else model.alphas.tolist(),
        "tx_power": model.tx_power,
        "bounds": [list(model.bounds[0]), list(model.bounds[1])] if model.bounds else None,
        "seed": model.rng_seed,
        "receivers": [
            {"position": [r.position.x, r.position.y, r.position.z],
             "antenna_offsets": [[o.x, o.y, o.z] for o in r.antenna_offsets],
             "noise_power": r.noise_power, "gain_db": r.gain_db}
            for r in model.receivers
        ],
        "scatterers": [None if d else s.tolist() for d, s in zip(direct, model.scatterers)],
        "gains": [[[g.real, g.imag] for g in row] for row in model.gains],
    }


def _receivers_from_config(items):
    return tuple(
        ReceiverSpec(Point3.from_seq(r["position"]),
                     tuple(Point3.from_seq(o) for o in r["antenna_offsets"]),
                     float(r.get("noise_power", 0.0)), float(r.get("gain_db", 0.0)))
        for r in items
    )


def environment_from_config(cfg):
    """Build a model from a config dict.

    Either give the full ray table (``scatterers`` + ``gains``, as written
    by :func:`environment_config`) or just ``seed``/``n_rays``/``snr_db`` to
    auto-place scatterers. Missing receivers fall back to the default
    4 x 4 layout.
    """
    cfg = dict(cfg)
    carrier = float(cfg.get("carrier_hz", 2.3e9))
    if "receivers" in cfg:
        receivers = _receivers_from_config(cfg["receivers"])
    else:
        receivers = default_receivers(
            carrier, float(cfg.get("noise_power", 1e-10)),
            gains_db=cfg.get("receiver_gains_db", DEFAULT_RECEIVER_GAINS_DB),
            noise_figures_db=cfg.get("receiver_noise_db", DEFAULT_RECEIVER_NOISE_DB))
    if "gains" in cfg:
        scat = np.array([[np.nan] * 3 if s is None else s for s in cfg["scatterers"]], float)
        gains = np.array([[complex(re, im) for re, im in row] for row in cfg["gains"]])
        ant, noise, fe_gain = _antenna_arrays(receivers)
        bounds = cfg.get("bounds")
        return MultipathModel(ant, noise * fe_gain, scat, gains, np.asarray(cfg.get("alpha", 2.5), float),
                              carrier, float(cfg.get("tx_power", 1.0)),
                              tuple(tuple(b) for b in bounds) if bounds else None,
                              cfg.get("seed"), receivers)
    scatterers = cfg.get("scatterers")
    if scatterers is not None:
        scatterers = [s for s in scatterers if s is not None]
    return build_environment(
        receivers,
        n_rays=int(cfg.get("n_rays", 12)),
        alpha=float(cfg.get("alpha", 2.5)),
        carrier_hz=carrier,
        snr_db=float(cfg.get("snr_db", DEFAULT_SNR_DB)),
        seed=int(cfg.get("seed", 0)),
        scatterers=scatterers,
        include_los=bool(cfg.get("include_los", True)),
        scatter_gain=float(cfg.get("scatter_gain", 1.0)),
        room=tuple(cfg.get("room", ROOM_SIZE)),
    )


def save_environment(model, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(environment_config(model), fh, indent=1)
        fh.write("\n")


def load_environment(path):
    with open(path, encoding="utf-8") as fh:
        return environment_from_config(json.load(fh))
