"""Downlink channel generation for a multibeam GEO satellite.

The channel is ``H = diag(phase) @ D`` where ``D`` is the real multibeam
antenna pattern built from a link budget, and ``phase`` carries one
uniformly distributed carrier phase per user (line-of-sight, identical
across feeds).

Geometry is flat: user positions are planar ground coordinates (meters)
relative to the sub-satellite point, and beam boresights are pointing
angles (degrees) off nadir along the same two axes. Only the slant range
``d_k`` and the off-axis angle between user and boresight enter the model.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .exceptions import GainTableError, InvalidScenarioError

SPEED_OF_LIGHT = 3.0e8  # m/s
BOLTZMANN = 1.38e-23  # J/K


def db_to_linear(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def dbw_to_watts(x):
    """Convert dBW to watts, ``W = 10**(dBW/10)``."""
    out = db_to_linear(x)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class ScenarioParams:
    """Link-budget constants and optimisation settings for one scenario.

    Powers are in watts; ``rx_antenna_gain_dBi`` and ``g_over_t_dB`` are
    logarithmic as they appear on a datasheet. ``noise_power`` is the
    normalised sigma^2 (1 means "noise-normalised by kappa*T_R*B_W").
    """

    user_positions: np.ndarray  # (K, 2) ground offsets, meters
    carrier_frequency: float = 20e9
    satellite_height: float = 35_786e3
    rx_antenna_gain_dBi: float = 41.7
    g_over_t_dB: float = 17.68
    bandwidth_Hz: float = 500e6
    boltzmann: float = BOLTZMANN
    noise_power: float = 1.0
    num_feeds: int = 8
    total_power_W: float = 10.0
    static_power_W: float = 10.0
    beam_weights: np.ndarray | None = None
    sinr_thresholds: np.ndarray | None = None

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.user_positions, dtype=float))
        if pos.shape[1] != 2:
            raise InvalidScenarioError("user_positions must be (K, 2)")
        K = pos.shape[0]
        alpha = np.ones(K) if self.beam_weights is None else np.asarray(self.beam_weights, float)
        gbar = np.ones(K) if self.sinr_thresholds is None else np.asarray(self.sinr_thresholds, float)
        object.__setattr__(self, "user_positions", pos)
        object.__setattr__(self, "beam_weights", alpha)
        object.__setattr__(self, "sinr_thresholds", gbar)
        self.validate()

    @property
    def num_users(self) -> int:
        return self.user_positions.shape[0]

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency

    @property
    def rx_gain_linear(self) -> float:
        return float(db_to_linear(self.rx_antenna_gain_dBi))

    @property
    def noise_temperature(self) -> float:
        """Receiver noise temperature T_R = G_R / (G/T), in kelvin."""
        return float(db_to_linear(self.rx_antenna_gain_dBi - self.g_over_t_dB))

    def distances(self) -> np.ndarray:
        """Slant range from the satellite to each user, meters."""
        r2 = np.sum(self.user_positions**2, axis=1)
        return np.sqrt(self.satellite_height**2 + r2)

    def validate(self) -> None:
        K, M = self.num_users, self.num_feeds
        if K < 1:
            raise InvalidScenarioError("need at least one user")
        if M < K:
            raise InvalidScenarioError(f"num_feeds ({M}) must be >= num_users ({K})")
        if not self.total_power_W > 0:
            raise InvalidScenarioError("total_power_W must be positive")
        if not self.static_power_W >= 0:
            raise InvalidScenarioError("static_power_W must be nonnegative")
        if not self.bandwidth_Hz > 0:
            raise InvalidScenarioError("bandwidth_Hz must be positive")
        if not self.noise_power > 0:
            raise InvalidScenarioError("noise_power must be positive")
        if not (self.carrier_frequency > 0 and self.satellite_height > 0):
            raise InvalidScenarioError("carrier_frequency and satellite_height must be positive")
        if self.beam_weights.shape != (K,) or np.any(self.beam_weights < 0) \
                or not np.any(self.beam_weights > 0):
            raise InvalidScenarioError("beam_weights must be K nonnegative values, one positive")
        if self.sinr_thresholds.shape != (K,) or np.any(self.sinr_thresholds < 0):
            raise InvalidScenarioError("sinr_thresholds must be K nonnegative values")

    def with_powers(self, total_power_W=None, static_power_W=None) -> "ScenarioParams":
        kw = {}
        if total_power_W is not None:
            kw["total_power_W"] = float(total_power_W)
        if static_power_W is not None:
            kw["static_power_W"] = float(static_power_W)
        return replace(self, **kw)


@dataclass(frozen=True, eq=False)
class BeamGainModel:
    """Linear feed-to-user gains ``G[k, m]`` plus where they came from."""

    gains: np.ndarray
    source: str = "table"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        g = np.atleast_2d(np.asarray(self.gains, dtype=float))
        if not np.all(np.isfinite(g)) or np.any(g <= 0):
            raise InvalidScenarioError("beam gains must be finite and strictly positive")
        object.__setattr__(self, "gains", g)

    @property
    def shape(self) -> tuple[int, int]:
        return self.gains.shape

    def check_dims(self, K: int, M: int) -> None:
        if self.gains.shape != (K, M):
            raise InvalidScenarioError(f"gain table is {self.gains.shape}, expected {(K, M)}")


@dataclass(frozen=True, eq=False)
class ChannelMatrix:
    H: np.ndarray
    phase_diag: np.ndarray
    pattern: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.H.shape


def antenna_pattern_matrix(params: ScenarioParams, gains: BeamGainModel) -> np.ndarray:
    """Real K x M pattern ``D`` from the link budget.

    ``D[k, m] = sqrt(G_R G[k, m]) / (4 pi d_k / lambda * sqrt(kappa T_R B_W))``
    """
    K, M = params.num_users, params.num_feeds
    gains.check_dims(K, M)
    d = params.distances()
    if np.any(~np.isfinite(d)) or np.any(d <= 0):
        raise InvalidScenarioError("slant ranges must be positive")
    noise = math.sqrt(params.boltzmann * params.noise_temperature * params.bandwidth_Hz)
    path = 4.0 * np.pi * d / params.wavelength
    return np.sqrt(params.rx_gain_linear * gains.gains) / (path[:, None] * noise)


def sample_phase_matrix(rng_seed: int, K: int) -> np.ndarray:
    """Unit-modulus diagonal of the phase matrix, phases uniform on (0, 2pi)."""
    if K < 1:
        raise InvalidScenarioError("K must be >= 1")
    rng = np.random.default_rng(rng_seed)
    phi = rng.uniform(0.0, 2.0 * np.pi, size=K)
    return np.exp(1j * phi)


def assemble_channel(phase_diag, D) -> ChannelMatrix:
    phase_diag = np.asarray(phase_diag, dtype=complex).ravel()
    D = np.atleast_2d(np.asarray(D, dtype=float))
    if D.shape[0] != phase_diag.shape[0]:
        raise InvalidScenarioError(
            f"phase vector has length {phase_diag.shape[0]}, pattern has {D.shape[0]} rows")
    if not np.all(np.isfinite(D)) or np.any(D <= 0):
        raise InvalidScenarioError("pattern entries must be finite and positive")
    return ChannelMatrix(H=phase_diag[:, None] * D, phase_diag=phase_diag, pattern=D)


def load_gain_table(path, shape: tuple[int, int] | None = None) -> BeamGainModel:
    """Read a K x M gain table from CSV.

    The first line is a header ``format=linear`` or ``format=db``; every
    following non-blank line is one user's row of comma-separated gains.
    dB entries are converted with ``10**(x/10)``.
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            lines = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    except OSError as exc:
        raise GainTableError(f"cannot read {path}: {exc}") from exc
    if not lines:
        raise GainTableError(f"{path}: empty file")
    header = ",".join(lines[0]).strip().replace(" ", "").lower()
    if header not in ("format=linear", "format=db"):
        raise GainTableError(f"{path}: header must be format=linear or format=db, got {header!r}")
    try:
        rows = [[float(c) for c in row] for row in lines[1:]]
    except ValueError as exc:
        raise GainTableError(f"{path}: non-numeric entry ({exc})") from exc
    if not rows:
        raise GainTableError(f"{path}: no data rows")
    ncols = shape[1] if shape is not None else len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != ncols:
            raise GainTableError(f"{path}: row {i + 1} has {len(row)} values, expected {ncols}")
    if shape is not None and len(rows) != shape[0]:
        raise GainTableError(f"{path}: {len(rows)} rows, expected {shape[0]}")
    table = np.array(rows, dtype=float)
    if header == "format=db":
        table = db_to_linear(table)
    if not np.all(np.isfinite(table)) or np.any(table <= 0):
        raise GainTableError(f"{path}: gains must be finite and strictly positive")
    return BeamGainModel(table, source="table", meta={"path": str(path), "format": header[7:]})


def _pointing_vectors(angles_deg: np.ndarray) -> np.ndarray:
    t = np.tan(np.deg2rad(np.atleast_2d(angles_deg)))
    v = np.column_stack([t, -np.ones(len(t))])
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def off_axis_angles(params: ScenarioParams, boresights_deg) -> np.ndarray:
    """Angle (degrees) between each user direction and each beam boresight."""
    u = np.column_stack([params.user_positions, -np.full(params.num_users, params.satellite_height)])
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    b = _pointing_vectors(boresights_deg)
    cos = u @ b.T
    sin = np.linalg.norm(np.cross(u[:, None, :], b[None, :, :]), axis=2)
    return np.rad2deg(np.arctan2(sin, cos))


def synthetic_gain_model(params: ScenarioParams, boresights, taper: float,
                         peak_gain_dBi: float = 55.0) -> BeamGainModel:
    """Gaussian-taper feed pattern: ``G = G_peak * exp(-taper * angle_deg**2)``.

    ``boresights`` holds one (x, y) pointing angle in degrees per feed;
    ``taper`` is in 1/deg^2.
    """
    boresights = np.atleast_2d(np.asarray(boresights, dtype=float))
    if boresights.shape != (params.num_feeds, 2):
        raise InvalidScenarioError(
            f"need one (x, y) boresight per feed: got {boresights.shape}, M={params.num_feeds}")
    if not taper > 0:
        raise InvalidScenarioError("taper must be positive")
    theta = off_axis_angles(params, boresights)
    peak = float(db_to_linear(peak_gain_dBi))
    # floor keeps far sidelobes strictly positive in double precision
    gains = np.maximum(peak * np.exp(-taper * theta**2), peak * 1e-30)
    return BeamGainModel(gains, source="synthetic",
                         meta={"boresights_deg": boresights.tolist(), "taper": taper,
                               "peak_gain_dBi": peak_gain_dBi})


def beam_grid(num_beams: int, spacing_deg: float = 0.5, columns: int = 4) -> np.ndarray:
    """Boresights on a staggered (hexagonal-like) grid centred on nadir."""
    rows = math.ceil(num_beams / columns)
    pts = []
    for r in range(rows):
        for c in range(columns):
            pts.append(((c + 0.5 * (r % 2)) * spacing_deg, r * spacing_deg * math.sqrt(3) / 2))
    pts = np.array(pts[:num_beams])
    return pts - pts.mean(axis=0)


def users_in_beams(boresights_deg, satellite_height: float, radius_deg: float,
                   seed: int) -> np.ndarray:
    """One user per beam, dropped uniformly in a disc around its boresight."""
    b = np.atleast_2d(boresights_deg)
    rng = np.random.default_rng(seed)
    r = radius_deg * np.sqrt(rng.uniform(size=len(b)))
    phi = rng.uniform(0, 2 * np.pi, size=len(b))
    ang = b + np.column_stack([r * np.cos(phi), r * np.sin(phi)])
    return satellite_height * np.tan(np.deg2rad(ang))


def generate_channel(params: ScenarioParams, gains: BeamGainModel, seed: int) -> ChannelMatrix:
    """Pure function of its arguments: same inputs give a bitwise-identical channel."""
    D = antenna_pattern_matrix(params, gains)
    return assemble_channel(sample_phase_matrix(seed, params.num_users), D)


# --- scenario files -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    """Parsed scenario file: base link budget plus how to lay out users per seed.

    If the file fixes ``user_positions_m`` those are used for every seed;
    otherwise each seed drops one user per beam within ``user_radius_deg``
    of its boresight.
    """

    base: ScenarioParams
    gain_model: dict
    user_radius_deg: float = 0.1
    fixed_positions: bool = False
    source: dict = field(default_factory=dict)

    def realize(self, seed: int) -> tuple[ScenarioParams, BeamGainModel, ChannelMatrix]:
        params = self.base
        kind = self.gain_model.get("type", "synthetic")
        if kind == "synthetic":
            bores = np.asarray(self.gain_model["boresights_deg"], dtype=float)
            if not self.fixed_positions:
                pos = users_in_beams(bores[: params.num_users], params.satellite_height,
                                     self.user_radius_deg, seed)
                params = replace(params, user_positions=pos)
            gains = synthetic_gain_model(params, bores, self.gain_model["taper_per_deg2"],
                                         self.gain_model.get("peak_gain_dBi", 55.0))
        elif kind == "table":
            gains = load_gain_table(self.gain_model["path"], (params.num_users, params.num_feeds))
        else:
            raise InvalidScenarioError(f"unknown gain model type {kind!r}")
        # phases use a derived stream so they do not alias the user layout draw
        return params, gains, generate_channel(params, gains, seed + 1_000_003)

    def with_powers(self, total_power_W=None, static_power_W=None) -> "ScenarioConfig":
        return replace(self, base=self.base.with_powers(total_power_W, static_power_W))


def default_scenario_dict(num_users: int = 8, num_feeds: int = 8) -> dict:
    """Default GEO scenario (20 GHz, 500 MHz, K = M = 8) as a scenario-file dict."""
    bores = beam_grid(num_feeds, spacing_deg=0.5)
    return {
        "carrier_frequency_Hz": 20e9,
        "satellite_height_m": 35_786e3,
        "rx_antenna_gain_dBi": 41.7,
        "g_over_t_dB": 17.68,
        "bandwidth_Hz": 500e6,
        "boltzmann": BOLTZMANN,
        "noise_power": 1.0,
        "num_users": num_users,
        "num_feeds": num_feeds,
        "total_power_dBW": 10.0,
        "static_power_dBW": 10.0,
        "beam_weights": [1.0] * num_users,
        "sinr_thresholds_dB": [0.0] * num_users,
        "user_radius_deg": 0.1,
        "gain_model": {
            "type": "synthetic",
            "boresights_deg": bores.tolist(),
            "taper_per_deg2": 14.0,
            "peak_gain_dBi": 55.0,
        },
    }


def _power(d: dict, stem: str, default_w: float) -> float:
    if f"{stem}_W" in d:
        return float(d[f"{stem}_W"])
    if f"{stem}_dBW" in d:
        return dbw_to_watts(float(d[f"{stem}_dBW"]))
    return default_w


def scenario_from_dict(d: dict) -> ScenarioConfig:
    """Build a ScenarioConfig from a scenario-file mapping.

    Recognised keys: ``carrier_frequency_Hz``, ``satellite_height_m``,
    ``rx_antenna_gain_dBi``, ``g_over_t_dB`` (T_R is derived as
    G_R/(G/T)), ``bandwidth_Hz``, ``boltzmann``, ``noise_power``,
    ``num_users``, ``num_feeds``, ``total_power_W|dBW``,
    ``static_power_W|dBW``, ``beam_weights``, ``sinr_thresholds`` (linear)
    or ``sinr_thresholds_dB``, ``user_positions_m`` or ``user_radius_deg``,
    and ``gain_model`` (``{"type": "synthetic", "boresights_deg",
    "taper_per_deg2", "peak_gain_dBi"}`` or ``{"type": "table", "path"}``).
    """
    K = int(d.get("num_users", 8))
    M = int(d.get("num_feeds", K))
    if "sinr_thresholds" in d:
        gbar = np.asarray(d["sinr_thresholds"], dtype=float)
    elif "sinr_thresholds_dB" in d:
        gbar = db_to_linear(d["sinr_thresholds_dB"])
    else:
        gbar = np.ones(K)
    gbar = np.broadcast_to(gbar, (K,)).copy()
    gm = dict(d.get("gain_model", {"type": "synthetic"}))
    if gm.get("type", "synthetic") == "synthetic":
        gm.setdefault("boresights_deg", beam_grid(M).tolist())
        gm.setdefault("taper_per_deg2", 14.0)
        gm.setdefault("peak_gain_dBi", 55.0)
    fixed = "user_positions_m" in d
    if fixed:
        pos = np.asarray(d["user_positions_m"], dtype=float)
    elif gm.get("type", "synthetic") == "synthetic":
        pos = float(d.get("satellite_height_m", 35_786e3)) * np.tan(
            np.deg2rad(np.asarray(gm["boresights_deg"], dtype=float)[:K]))
    else:
        pos = np.zeros((K, 2))
    base = ScenarioParams(
        user_positions=pos,
        carrier_frequency=float(d.get("carrier_frequency_Hz", 20e9)),
        satellite_height=float(d.get("satellite_height_m", 35_786e3)),
        rx_antenna_gain_dBi=float(d.get("rx_antenna_gain_dBi", 41.7)),
        g_over_t_dB=float(d.get("g_over_t_dB", 17.68)),
        bandwidth_Hz=float(d.get("bandwidth_Hz", 500e6)),
        boltzmann=float(d.get("boltzmann", BOLTZMANN)),
        noise_power=float(d.get("noise_power", 1.0)),
        num_feeds=M,
        total_power_W=_power(d, "total_power", 10.0),
        static_power_W=_power(d, "static_power", 10.0),
        beam_weights=np.broadcast_to(np.asarray(d.get("beam_weights", 1.0), float), (K,)).copy(),
        sinr_thresholds=gbar,
    )
    return ScenarioConfig(base=base, gain_model=gm,
                          user_radius_deg=float(d.get("user_radius_deg", 0.1)),
                          fixed_positions=fixed, source=dict(d))


def load_scenario(path) -> ScenarioConfig:
    with open(path) as fh:
        d = json.load(fh)
    gm = d.get("gain_model", {})
    if gm.get("type") == "table" and not Path(gm["path"]).is_absolute():
        gm["path"] = str(Path(path).parent / gm["path"])
    return scenario_from_dict(d)
