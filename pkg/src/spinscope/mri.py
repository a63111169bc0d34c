"""Hyperfine geometry and three-direction inversion to nuclear-spin positions.

Frame: ``z`` along the NV axis ([111]), ``x`` along the [-1 -1 2] projection,
so that the field azimuth is measured from [-1 -1 2]. Positions are in
angstrom; hyperfine strengths and Larmor frequencies in rad/s.

The sensor at the origin sees the hyperfine vector

    A = C_n / R^3 * sqrt(1 + 3 n_z^2) * a,
    a = (-3 n_x n_z, -3 n_y n_z, 1 - 3 n_z^2) / sqrt(1 + 3 n_z^2),

with ``C_n = mu0 hbar gamma_e |gamma_n| / 4 pi``. A resonant CPMG trace under
field direction ``m`` oscillates with pulse-number period
``pi omega0 / (g A_perp)``, ``A_perp = A sqrt(1 - (m . a)^2)``.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import AnalysisError, InversionError
from .analysis import find_zeros, fingerprint
from .constants import ANGSTROM, GAUSS, load_constants
from .systems import DipolarCoupling, IndependentSpins, SensorKind

CRYSTAL_TO_NV = np.array(
    [
        [-1.0, -1.0, 2.0] / np.sqrt(6.0),
        [1.0, -1.0, 0.0] / np.sqrt(2.0),
        [1.0, 1.0, 1.0] / np.sqrt(3.0),
    ]
)
DEFAULT_SURFACE_NORMAL = CRYSTAL_TO_NV @ np.array([0.0, 0.0, 1.0])
DEFAULT_NV_DEPTH_NM = 2.0
COPLANAR_DET = 1e-3
MIN_MC_SAMPLES = 500


@dataclass(frozen=True)
class FieldDirection:
    """Static field of ``magnitude`` gauss at polar ``theta`` / azimuth ``phi`` (degrees)."""

    magnitude: float
    theta: float
    phi: float

    def __post_init__(self):
        if not self.magnitude > 0:
            raise ValueError("field magnitude must be positive")

    @property
    def unit_vector(self):
        t, p = np.radians(self.theta), np.radians(self.phi)
        return np.array([np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t)])

    @property
    def tesla(self):
        return self.magnitude * GAUSS

    def larmor(self, gamma):
        """``|gamma| B`` in rad/s."""
        return abs(gamma) * self.tesla


@dataclass(frozen=True, eq=False)
class TargetGeometry:
    position: np.ndarray
    species: str
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, float))

    @property
    def distance(self):
        return float(np.linalg.norm(self.position))

    @property
    def direction(self):
        r = self.distance
        if r == 0:
            raise ZeroDivisionError("target sits on the sensor")
        return self.position / r


@dataclass(frozen=True, eq=False)
class HyperfineVector:
    A: float
    a: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, float)
        if self.A < 0:
            raise ValueError("hyperfine strength must be non-negative")
        if not np.isclose(np.linalg.norm(a), 1.0, atol=1e-8):
            raise ValueError("hyperfine direction must be a unit vector")
        object.__setattr__(self, "a", a)

    @classmethod
    def from_vector(cls, v):
        v = np.asarray(v, float)
        n = np.linalg.norm(v)
        if n == 0:
            raise ValueError("zero hyperfine vector has no direction")
        return cls(float(n), v / n)

    @property
    def vector(self):
        return self.A * self.a

    @property
    def components(self):
        return tuple(self.vector)


def _orientation_factor(n):
    return np.sqrt(1.0 + 3.0 * n[2] ** 2)


def hyperfine_direction(n):
    n = np.asarray(n, float)
    return np.array([-3 * n[0] * n[2], -3 * n[1] * n[2], 1 - 3 * n[2] ** 2]) / _orientation_factor(n)


def hyperfine_from_position(geom, constants=None):
    """Point-dipole hyperfine vector of a target at ``geom.position`` (angstrom)."""
    constants = constants or load_constants()
    r = geom.distance
    if r == 0:
        raise ZeroDivisionError("hyperfine field diverges at R = 0")
    n = geom.direction
    strength = constants.dipolar_prefactor(geom.species) / (r * ANGSTROM) ** 3 * _orientation_factor(n)
    return HyperfineVector(float(strength), hyperfine_direction(n))


def perpendicular_component(h, direction):
    """``A sqrt(1 - (m . a)^2)``: the hyperfine part transverse to the field."""
    m = direction.unit_vector if isinstance(direction, FieldDirection) else np.asarray(direction, float)
    c = float(np.clip(np.dot(m, h.a), -1.0, 1.0))
    return h.A * np.sqrt(1.0 - c * c)


def direction_matrix(directions):
    m = np.array([d.unit_vector if isinstance(d, FieldDirection) else np.asarray(d, float) for d in directions])
    if m.shape != (3, 3):
        raise InversionError(f"need exactly three field directions, got {len(m)}")
    det = abs(np.linalg.det(m))
    if det < COPLANAR_DET:
        raise InversionError(f"field directions are nearly coplanar (|det| = {det:.2e})", {"det": det})
    return m


def _common_larmor(species, directions):
    constants = load_constants()
    mags = {d.magnitude for d in directions}
    if len(mags) != 1:
        raise ValueError("the three directions must share one field magnitude")
    return directions[0].larmor(constants.gamma(species))


def forward_periods(geoms, directions, g=2, constants=None):
    """Pulse-number periods ``pi omega0 / (g A_perp)``, shape ``(n_targets, n_directions)``.

    A target with no transverse coupling under some direction gets ``inf``.
    """
    constants = constants or load_constants()
    g = SensorKind.parse(g).g
    direction_matrix(directions)
    out = np.empty((len(geoms), len(directions)))
    for k, geom in enumerate(geoms):
        h = hyperfine_from_position(geom, constants)
        for i, d in enumerate(directions):
            w0 = d.larmor(constants.gamma(geom.species))
            a_perp = perpendicular_component(h, d)
            out[k, i] = np.inf if a_perp <= 1e-12 * h.A else np.pi * w0 / (g * a_perp)
    return out


def _fibonacci_sphere(n):
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    r = np.sqrt(1 - z * z)
    t = np.pi * (1 + 5**0.5) * i
    return np.c_[r * np.cos(t), r * np.sin(t), z]


def _residual(v, m, c2):
    return np.sum(v * v, axis=-1)[..., None] - (v @ m.T) ** 2 - c2


def _jacobian(v, m):
    proj = v @ m.T
    return 2.0 * v[:, None, :] - 2.0 * proj[:, :, None] * m[None, :, :]


def _levenberg_marquardt(starts, m, c2, iterations=200):
    v = np.array(starts, float)
    lam = np.full(len(v), 1e-3)
    r = _residual(v, m, c2)
    cost = np.sum(r * r, axis=1)
    eye = np.eye(3)
    for _ in range(iterations):
        jac = _jacobian(v, m)
        jtj = np.einsum("sij,sik->sjk", jac, jac)
        grad = np.einsum("sij,si->sj", jac, r)
        damp = lam[:, None, None] * (jtj * eye + 1e-30 * eye)
        step = -np.linalg.solve(jtj + damp, grad[..., None])[..., 0]
        trial = v + step
        r_new = _residual(trial, m, c2)
        cost_new = np.sum(r_new * r_new, axis=1)
        better = cost_new < cost
        v[better], r[better], cost[better] = trial[better], r_new[better], cost_new[better]
        lam = np.where(better, lam / 3.0, lam * 4.0)
        lam = np.clip(lam, 1e-12, 1e12)
    return v, np.sqrt(cost)


def solve_hyperfine(c, directions, starts=None, n_starts=96, rtol=1e-8):
    """All hyperfine vectors ``v`` with ``|v|^2 - (m_i . v)^2 = c_i^2``.

    Multistart Levenberg-Marquardt-damped Newton on the three residuals.
    Solutions come back in ``+v, -v`` pairs, sorted by decreasing ``|v|``.
    """
    c = np.asarray(c, float)
    if c.shape != (3,) or np.any(c < 0) or not np.all(np.isfinite(c)):
        raise InversionError(f"need three finite non-negative transverse couplings, got {c!r}")
    m = direction_matrix(directions)
    scale = float(np.max(c))
    if scale == 0:
        raise InversionError("all transverse couplings vanish; no orientation information")
    c2 = c**2
    if starts is None:
        dirs = _fibonacci_sphere(n_starts)
        starts = np.vstack([dirs * scale * f for f in (1.0, 1.6, 3.0)])
    else:
        starts = np.atleast_2d(np.asarray(starts, float))
    v, res = _levenberg_marquardt(starts, m, c2)
    ok = res < rtol * scale**2
    if not np.any(ok):
        raise InversionError(
            "no hyperfine vector satisfies the three transverse couplings",
            {"best_residual": float(res.min()) / scale**2, "couplings": c.tolist()},
        )
    sols = []
    for vec in v[ok]:
        # canonical sign: first significant component positive
        k = int(np.argmax(np.abs(vec) > 1e-9 * scale))
        vec = vec if vec[k] > 0 else -vec
        if not any(np.linalg.norm(vec - s) < 1e-6 * scale for s in sols):
            sols.append(vec)
    sols.sort(key=lambda s: -np.linalg.norm(s))
    out = []
    for s in sols:
        out.append(HyperfineVector.from_vector(s))
        out.append(HyperfineVector.from_vector(-s))
    return out


@dataclass
class OrientationCandidates:
    candidates: list
    degenerate: bool = False


def invert_orientation(a, ring_samples=0):
    """Target directions ``n`` whose hyperfine direction is ``a``.

    ``u = n_z^2`` solves ``a_z sqrt(1 + 3u) = 1 - 3u``; the left side is monotone
    so exactly one root lies in ``[0, 1]``. The result holds ``n`` and ``-n``.
    For ``a = (0, 0, 1)`` every equatorial ``n`` works; the result is flagged
    degenerate and, when ``ring_samples > 0``, carries that many ring points.
    """
    a = np.asarray(a, float)
    if not np.isclose(np.linalg.norm(a), 1.0, atol=1e-8):
        raise ValueError("a must be a unit vector")
    az = float(np.clip(a[2], -1.0, 1.0))
    # 9u^2 - (6 + 3 a_z^2) u + (1 - a_z^2) = 0; discriminant 72 a_z^2 + 9 a_z^4 >= 0
    a2 = az * az
    disc = np.sqrt(72.0 * a2 + 9.0 * a2 * a2)
    roots = [(6.0 + 3.0 * a2 + sgn * disc) / 18.0 for sgn in (1.0, -1.0)]
    roots = [u for u in roots if -1e-9 <= u <= 1 + 1e-9]
    # the squared equation admits a spurious root of the wrong sign
    roots = [min(max(u, 0.0), 1.0) for u in roots if abs(az * np.sqrt(1 + 3 * u) - (1 - 3 * u)) < 1e-6]
    if not roots:
        raise InversionError(f"no target direction produces hyperfine direction {a.tolist()}")
    u = min(roots, key=lambda u: abs(az * np.sqrt(1 + 3 * u) - (1 - 3 * u)))
    nz = np.sqrt(u)
    if nz < 1e-9:
        if ring_samples:
            t = np.linspace(0, 2 * np.pi, ring_samples, endpoint=False)
            ring = [np.array([np.cos(x), np.sin(x), 0.0]) for x in t]
        else:
            ring = []
        return OrientationCandidates(ring, degenerate=True)
    f = np.sqrt(1 + 3 * u)
    nxy = -a[:2] * f / (3 * nz)
    n = np.array([nxy[0], nxy[1], nz])
    n /= np.linalg.norm(n)
    return OrientationCandidates([n, -n])


def position_from_hyperfine(h, n, species, constants=None):
    """Place the target along ``n`` at the distance implied by the strength ``h.A``."""
    if not h.A > 0:
        raise ValueError("hyperfine strength must be positive")
    constants = constants or load_constants()
    n = np.asarray(n, float)
    r = (constants.dipolar_prefactor(species) * _orientation_factor(n) / h.A) ** (1.0 / 3.0) / ANGSTROM
    return TargetGeometry(r * n, species)


@dataclass(frozen=True)
class SurfacePrior:
    """Targets sit outside the diamond: beyond a plane ``depth`` angstrom above the sensor."""

    normal: tuple = tuple(DEFAULT_SURFACE_NORMAL)
    depth: float = DEFAULT_NV_DEPTH_NM * 10.0

    def height(self, position):
        n = np.asarray(self.normal, float)
        return float(np.dot(position, n / np.linalg.norm(n)))

    def admits(self, position):
        return self.height(position) >= self.depth


def candidate_positions(c, directions, species, constants=None, starts=None):
    """Every position consistent with the couplings ``c``, with the hyperfine vector behind it."""
    out = []
    for h in solve_hyperfine(c, directions, starts=starts):
        for n in invert_orientation(h.a).candidates:
            out.append((position_from_hyperfine(h, n, species, constants).position, h))
    return out


def select_branch(cands, prior):
    """Admissible candidates, farthest along the surface normal first."""
    kept = [cd for cd in cands if prior.admits(cd[0])]
    kept.sort(key=lambda cd: -prior.height(cd[0]))
    return kept


@dataclass
class TargetReconstruction:
    name: str
    hyperfine: HyperfineVector
    candidates: list
    position: np.ndarray
    sigma: np.ndarray
    periods: dict
    n_samples: int
    flags: list = field(default_factory=list)
    true_position: object = None

    def to_dict(self):
        d = {
            "name": self.name,
            "hyperfine": {"A": self.hyperfine.A, "a": self.hyperfine.a.tolist()},
            "candidates": [np.asarray(p).tolist() for p in self.candidates],
            "position": dict(zip("xyz", map(float, self.position))),
            "sigma": dict(zip("xyz", map(float, self.sigma))),
            "periods": {str(k): (None if not np.isfinite(v) else float(v)) for k, v in self.periods.items()},
            "mc_samples": self.n_samples,
            "flags": list(self.flags),
        }
        if self.true_position is not None:
            d["true_position"] = dict(zip("xyz", map(float, self.true_position)))
        return d


@dataclass
class ReconstructionResult:
    targets: list
    directions: list
    noise_sigma: float
    seed: int

    def to_dict(self):
        return {
            "directions": [
                {"id": i, "gauss": d.magnitude, "theta_deg": d.theta, "phi_deg": d.phi} for i, d in enumerate(self.directions)
            ],
            "noise_sigma": self.noise_sigma,
            "seed": self.seed,
            "targets": [t.to_dict() for t in self.targets],
        }


def synthetic_dip(periods, n_max):
    """``prod_k cos(pi N / P_k)`` on ``N = 0..n_max``; infinite periods contribute 1."""
    n = np.arange(n_max + 1, dtype=float)
    p = np.asarray(periods, float)
    p = p[np.isfinite(p)]
    return n, np.prod(np.cos(np.pi * np.outer(n, 1.0 / p)), axis=1)


def _trace_length(periods):
    finite = periods[np.isfinite(periods)]
    return int(np.ceil(0.75 * finite.max())) + 5


def _refine_zero(n, y, z, half_width=3):
    """Zero of a straight line fitted to the samples around a crossing.

    Two-point interpolation weights the noise by the sub-sample position of the
    crossing; a local least-squares line averages it out.
    """
    i = int(np.clip(np.round(z), half_width, len(n) - 1 - half_width))
    window = slice(i - half_width + 1, i + half_width + 1)
    slope, intercept = np.polyfit(n[window] - z, y[window], 1)
    if slope == 0.0:
        return z
    return z - intercept / slope


def _remeasure(periods, sigma, rng):
    """Noisy periods for every target under one direction, matched to the nominal ones."""
    n_max = _trace_length(periods)
    n, y = synthetic_dip(periods, n_max)
    y = y + rng.normal(0.0, sigma, len(y))
    zeros = np.array([z.n_frac for z in find_zeros(n, y)])
    out = np.empty(len(periods))
    for k, p in enumerate(periods):
        if not np.isfinite(p):
            out[k] = np.inf
        elif zeros.size == 0:
            out[k] = np.nan
        else:
            z = zeros[np.argmin(np.abs(zeros - p / 2.0))]
            out[k] = 2.0 * _refine_zero(n, y, z)
    return out


def _track_branch(c, m, h_ref, n_ref, species, constants):
    """Least-squares re-solve started on the reference branch; follows it rather than re-selecting.

    Noisy couplings need not admit an exact solution, so the damped Newton minimizer
    is accepted as is.
    """
    v, _ = _levenberg_marquardt(h_ref.vector[None, :], m, c**2)
    v = v[0]
    if np.dot(v, h_ref.vector) < 0:
        v = -v
    h = HyperfineVector.from_vector(v)
    cands = invert_orientation(h.a).candidates
    if not cands:
        return np.full(3, np.nan)
    n = max(cands, key=lambda x: float(np.dot(x, n_ref)))
    return position_from_hyperfine(h, n, species, constants).position


def _mc_chunk(args):
    periods, omega0, g, m, species, refs, sigma, seeds, constants = args
    out = np.full((len(seeds), len(species), 3), np.nan)
    for s, seed in enumerate(seeds):
        rng = np.random.default_rng(seed)
        noisy = np.column_stack([_remeasure(periods[:, i], sigma, rng) for i in range(periods.shape[1])])
        for k, ref in enumerate(refs):
            if ref is None or not np.all(np.isfinite(noisy[k]) | np.isinf(periods[k])):
                continue
            c = np.where(np.isfinite(noisy[k]), np.pi * omega0[k] / (g * noisy[k]), 0.0)
            out[s, k] = _track_branch(c, m, ref[0], ref[1], species[k], constants)
    return out


def reconstruct(
    periods,
    directions,
    species,
    g=2,
    names=None,
    noise_sigma=0.01,
    n_samples=MIN_MC_SAMPLES,
    seed=0,
    prior=None,
    constants=None,
    n_workers=1,
    true_positions=None,
    branch=None,
):
    """Positions of every target from its pulse-number periods under three field directions.

    ``periods`` has shape ``(n_targets, 3)``; row ``k`` must refer to the same spin
    in all three columns. Each target's candidates are filtered by ``prior`` and the
    one farthest above the surface is selected; ``branch[k]``, when given, picks an
    index into the full candidate list instead (external knowledge). Uncertainties
    come from redrawing each direction's dip trace with Gaussian noise of std
    ``noise_sigma``, re-locating the zeros and re-solving on the selected branch.
    Monte-Carlo seeds are spawned per sample from ``seed``, so the result does not
    depend on ``n_workers``.
    """
    constants = constants or load_constants()
    prior = prior or SurfacePrior()
    g = SensorKind.parse(g).g
    periods = np.atleast_2d(np.asarray(periods, float))
    if periods.shape[1] != 3 or len(directions) != 3:
        raise InversionError("three field directions are required to locate a target", {"given": periods.shape[1]})
    m = direction_matrix(directions)
    n_targets = periods.shape[0]
    species = [species] * n_targets if isinstance(species, str) else list(species)
    names = names or [f"target-{k + 1}" for k in range(n_targets)]
    omega0 = np.array([_common_larmor(sp, directions) for sp in species])

    picks = []
    for k in range(n_targets):
        c = np.pi * omega0[k] / (g * periods[k])
        c = np.where(np.isfinite(c), c, 0.0)
        cands = candidate_positions(c, directions, species[k], constants)
        chosen = select_branch(cands, prior)
        flags = []
        if branch is not None and branch[k] is not None:
            chosen = [cands[branch[k]]] + [cd for i, cd in enumerate(cands) if i != branch[k]]
            flags.append("branch-override")
        elif not chosen:
            flags.append("no-admissible-candidate")
        elif len(chosen) > 1:
            flags.append("ambiguous-branch")
        picks.append((cands, chosen, flags))

    refs = [None if not ch else (ch[0][1], ch[0][0] / np.linalg.norm(ch[0][0])) for _, ch, _ in picks]
    samples = None
    if n_samples:
        seeds = np.random.SeedSequence(seed).spawn(int(n_samples))
        chunks = [ch for ch in np.array_split(np.arange(int(n_samples)), max(1, int(n_workers))) if len(ch)]
        jobs = [(periods, omega0, g, m, species, refs, noise_sigma, [seeds[i] for i in ch], constants) for ch in chunks]
        if len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=len(jobs)) as ex:
                parts = list(ex.map(_mc_chunk, jobs))
        else:
            parts = [_mc_chunk(j) for j in jobs]
        samples = np.concatenate(parts, axis=0)

    targets = []
    for k, (cands, chosen, flags) in enumerate(picks):
        if chosen:
            position, h = chosen[0]
            kept = chosen
        else:
            position, h = np.full(3, np.nan), cands[0][1]
            kept = cands
        if samples is not None and chosen:
            good = samples[:, k][np.all(np.isfinite(samples[:, k]), axis=1)]
            sigma = good.std(axis=0, ddof=1) if len(good) > 1 else np.full(3, np.nan)
            if len(good) < len(samples):
                flags.append(f"mc-failures:{len(samples) - len(good)}")
        elif samples is not None:
            sigma = np.full(3, np.nan)
        else:
            sigma = np.zeros(3)
        targets.append(
            TargetReconstruction(
                name=names[k],
                hyperfine=h,
                candidates=[p for p, _ in kept],
                position=np.asarray(position),
                sigma=np.asarray(sigma),
                periods={i: periods[k, i] for i in range(3)},
                n_samples=int(n_samples),
                flags=flags,
                true_position=None if true_positions is None else np.asarray(true_positions[k], float),
            )
        )
    return ReconstructionResult(targets, list(directions), float(noise_sigma), int(seed))


def nearest_branch(periods, directions, species, reference, g=2, constants=None):
    """Candidate index closest to ``reference`` (angstrom), for use as ``reconstruct(branch=...)``."""
    constants = constants or load_constants()
    g = SensorKind.parse(g).g
    omega0 = _common_larmor(species, directions)
    c = np.pi * omega0 / (g * np.asarray(periods, float))
    c = np.where(np.isfinite(c), c, 0.0)
    cands = candidate_positions(c, directions, species, constants)
    d = [np.linalg.norm(p - np.asarray(reference, float)) for p, _ in cands]
    return int(np.argmin(d)), float(np.min(d))


def periods_from_traces(traces, omega0, g=2, assignment=None):
    """Per-direction periods from measured dip traces.

    Each trace is peeled into couplings (strongest first). ``assignment[i][k]``
    names which of direction ``i``'s couplings belongs to target ``k``; by default
    the strength ranking is assumed to be the same under every direction.
    """
    g = SensorKind.parse(g).g
    cols = []
    counts = set()
    for i, tr in enumerate(traces):
        rep = fingerprint(tr, omega0, g)
        counts.add(rep.n_detected)
        a = np.asarray(rep.couplings)
        order = np.arange(len(a)) if assignment is None else np.asarray(assignment[i])
        cols.append(np.pi * omega0 / (g * a[order]))
    if len(counts) != 1:
        raise AnalysisError("different numbers of spins detected per direction", {"counts": sorted(counts)})
    return np.column_stack(cols)


def measurement_budget(a_perp, readout_fidelity, target_sigma, t_init_readout):
    """Repetitions and wall time to place a dip zero with standard error ``target_sigma``.

    ``K = 1 / (F sigma)^2`` shots, each lasting ``pi^2 / (4 A_perp)`` of DD
    evolution plus ``t_init_readout``. ``a_perp`` is in rad/s, times in seconds.
    """
    for name, v in (("a_perp", a_perp), ("readout_fidelity", readout_fidelity), ("target_sigma", target_sigma), ("t_init_readout", t_init_readout)):
        if not v > 0:
            raise ValueError(f"{name} must be positive")
    k = 1.0 / (readout_fidelity * target_sigma) ** 2
    t_dd = np.pi**2 / (4.0 * a_perp)
    return {"K": k, "t_dd": t_dd, "T_total": k * (t_dd + t_init_readout)}


def nv_target_system(geoms, direction, constants=None, dipolar=False):
    """Independent-spin description of labelled targets under one field direction."""
    constants = constants or load_constants()
    hf = [hyperfine_from_position(g, constants).vector for g in geoms]
    w0 = [direction.larmor(constants.gamma(g.species)) for g in geoms]
    couplings = []
    for i in range(len(geoms)):
        for j in range(i + 1, len(geoms)):
            d = (geoms[j].position - geoms[i].position) * ANGSTROM
            r = np.linalg.norm(d)
            if geoms[i].species == geoms[j].species:
                strength = constants.nuclear_dipolar_prefactor(geoms[i].species) / r**3
            else:
                strength = constants.mu0 / (4 * np.pi) * constants.hbar * constants.gamma(geoms[i].species) * constants.gamma(geoms[j].species) / r**3
            couplings.append(DipolarCoupling(i, j, strength, tuple(d / r)))
    return IndependentSpins(np.array(hf), w0, tuple(direction.unit_vector), tuple(couplings), use_dipolar=dipolar)


class NuclearSpinLocalizer(TransformerMixin, BaseEstimator):
    """Three-direction localization of labelled nuclear spins.

    ``fit(X)`` takes a ``(n_targets, 3)`` array of pulse-number periods (one column
    per field direction) and stores ``positions_``, ``position_std_``,
    ``hyperfine_`` and the full ``result_``. ``transform`` maps periods to
    positions without redoing the Monte-Carlo step.
    """

    def __init__(
        self,
        field_gauss=50.0,
        theta_deg=40.0,
        phi_deg=(0.0, 60.0, 120.0),
        species="P31",
        sensor="nv",
        noise_sigma=0.01,
        n_samples=MIN_MC_SAMPLES,
        nv_depth_nm=DEFAULT_NV_DEPTH_NM,
        random_state=0,
        n_jobs=1,
    ):
        self.field_gauss = field_gauss
        self.theta_deg = theta_deg
        self.phi_deg = phi_deg
        self.species = species
        self.sensor = sensor
        self.noise_sigma = noise_sigma
        self.n_samples = n_samples
        self.nv_depth_nm = nv_depth_nm
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _directions(self):
        return [FieldDirection(self.field_gauss, self.theta_deg, p) for p in self.phi_deg]

    def _check(self, X):
        X = check_array(X, dtype=float, ensure_all_finite=False)
        if X.shape[1] != 3:
            raise ValueError(f"expected periods for 3 field directions, got {X.shape[1]}")
        return X

    def fit(self, X, y=None):
        X = self._check(X)
        self.result_ = reconstruct(
            X,
            self._directions(),
            self.species,
            g=self.sensor,
            noise_sigma=self.noise_sigma,
            n_samples=self.n_samples,
            seed=self.random_state,
            prior=SurfacePrior(depth=self.nv_depth_nm * 10.0),
            n_workers=self.n_jobs,
        )
        self.positions_ = np.array([t.position for t in self.result_.targets])
        self.position_std_ = np.array([t.sigma for t in self.result_.targets])
        self.hyperfine_ = [t.hyperfine for t in self.result_.targets]
        self.n_features_in_ = 3
        return self

    def transform(self, X):
        check_is_fitted(self, "result_")
        X = self._check(X)
        res = reconstruct(
            X,
            self._directions(),
            self.species,
            g=self.sensor,
            n_samples=0,
            prior=SurfacePrior(depth=self.nv_depth_nm * 10.0),
        )
        return np.array([t.position for t in res.targets])
