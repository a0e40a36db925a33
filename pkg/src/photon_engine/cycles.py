"""Four-stroke Otto and Carnot cycles with a projective energy measurement
after every stroke, iterated to the steady periodic state."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import dynamics, sectors
from .dynamics import BathCoupling, IntegratorConfig
from .errors import ConfigError, ConvergenceError, EngineError
from .jc_model import (
    DressedBasis,
    ModelParams,
    PistonProtocol,
    dressed_basis,
    hamiltonian,
    hamiltonian_derivative,
    pressure_operator,
)
from .quantum_ops import ATOM, CAVITY, HilbertSpec
from .thermo import StrokeLedger, alicki_work_rate, energy, required_n_max, thermal_product_state

OTTO = "otto"
CARNOT = "carnot"

TIMESERIES_COLUMNS = ("t", "L", "V", "omega_c", "energy", "w_exp_cum", "w_al_cum", "pressure", "stroke_index")


@dataclass(frozen=True)
class CycleConfig:
    """Geometry, timing and baths of one engine.

    Give the base stroke time ``tau`` or the wall speed ``speed`` (or both,
    consistently): ``tau * speed = L1 - L2``.  ``L1 == L2`` is accepted as a
    degenerate, zero-work cycle and then needs ``tau``.
    """

    kind: str = OTTO
    L1: float = 12.5
    L2: float = 7.5
    tau: float | None = None
    speed: float | None = None
    n_cold: float = 5.0
    n_hot: float = 20.0
    bath_target: str = CAVITY
    gamma_rate: float = 0.01
    alpha_u: float = 0.5
    alpha_h: float = 0.5
    gamma_exponent: float = 1.0
    max_cycles: int = 500
    steady_tol: float = 1e-8
    steady_solver: str = "iterate"

    def __post_init__(self):
        if self.kind not in (OTTO, CARNOT):
            raise ConfigError(f"kind must be 'otto' or 'carnot', got {self.kind!r}")
        if not (self.L2 > 0 and self.L1 >= self.L2):
            raise ConfigError(f"need L1 >= L2 > 0, got L1={self.L1}, L2={self.L2}")
        if not (self.n_cold >= 0 and self.n_hot >= self.n_cold):
            raise ConfigError(f"need n_hot >= n_cold >= 0, got {self.n_hot}, {self.n_cold}")
        if self.bath_target not in (CAVITY, ATOM):
            raise ConfigError(f"bath_target must be 'cavity' or 'atom', got {self.bath_target!r}")
        if not self.gamma_rate > 0:
            raise ConfigError("gamma_rate must be positive")
        if self.gamma_exponent == 0:
            raise ConfigError("gamma_exponent must be nonzero")
        if self.max_cycles < 1:
            raise ConfigError("max_cycles must be >= 1")
        if not self.steady_tol > 0:
            raise ConfigError("steady_tol must be positive")
        if self.steady_solver not in ("iterate", "krylov"):
            raise ConfigError(f"steady_solver must be 'iterate' or 'krylov', got {self.steady_solver!r}")
        for name in ("alpha_u", "alpha_h"):
            a = getattr(self, name)
            if self.kind == CARNOT and a != 0.5:
                raise ConfigError(f"{name} is only available for otto cycles")
            if not 0 < a < 1:
                raise ConfigError(f"{name} must lie in (0, 1), got {a}")
        span = self.L1 - self.L2
        if self.tau is None and self.speed is None:
            raise ConfigError("give tau or speed")
        if self.tau is not None and not self.tau > 0:
            raise ConfigError("tau must be positive")
        if self.speed is not None:
            if not self.speed > 0:
                raise ConfigError("speed must be positive")
            if span == 0:
                raise ConfigError("a degenerate cycle (L1 == L2) is timed by tau, not speed")
            if self.tau is not None and abs(self.tau * self.speed - span) > 1e-9 * span:
                raise ConfigError(f"tau={self.tau} and speed={self.speed} disagree with L1 - L2 = {span}")

    @property
    def stroke_time(self) -> float:
        """Base stroke time tau."""
        if self.tau is not None:
            return self.tau
        return (self.L1 - self.L2) / self.speed

    @property
    def wall_speed(self) -> float:
        return (self.L1 - self.L2) / self.stroke_time

    @property
    def duration(self) -> float:
        return 4 * self.stroke_time

    def replace(self, **changes) -> "CycleConfig":
        data = asdict(self)
        if "tau" in changes and "speed" not in changes:
            data["speed"] = None
        if "speed" in changes and "tau" not in changes:
            data["tau"] = None
        data.update(changes)
        return CycleConfig(**data)


@dataclass(frozen=True)
class StrokePlan:
    kind: str
    protocol: PistonProtocol
    bath: BathCoupling | None


def carnot_geometry(L1: float, L2: float, tau: float) -> tuple[float, float, float]:
    """``(L3, L4, v)`` for four strokes of equal duration and speed."""
    if not (L1 > L2 > 0 and tau > 0):
        raise ValueError("need L1 > L2 > 0 and tau > 0")
    v = (L1 - L2) / tau
    L3 = L2 + v * tau
    return L3, L3 + v * tau, v


def stroke_plan(config: CycleConfig) -> list[StrokePlan]:
    tau = config.stroke_time
    g = config.gamma_exponent
    L1, L2 = config.L1, config.L2
    hot = BathCoupling(config.bath_target, config.n_hot, config.gamma_rate)
    cold = BathCoupling(config.bath_target, config.n_cold, config.gamma_rate)
    if config.kind == OTTO:
        au, ah = config.alpha_u, config.alpha_h
        return [
            StrokePlan("adiabatic_compression", PistonProtocol(L1, L2, 2 * au * tau, g), None),
            StrokePlan("isochoric_heating", PistonProtocol.frozen(L2, 2 * ah * tau), hot),
            StrokePlan("adiabatic_expansion", PistonProtocol(L2, L1, 2 * (1 - au) * tau, g), None),
            StrokePlan("isochoric_cooling", PistonProtocol.frozen(L1, 2 * (1 - ah) * tau), cold),
        ]
    if L1 == L2:
        L3 = L4 = L1
    else:
        L3, L4, _ = carnot_geometry(L1, L2, tau)
    return [
        StrokePlan("adiabatic_compression", PistonProtocol(L1, L2, tau, g), None),
        StrokePlan("isoparametric_expansion", PistonProtocol(L2, L3, tau, g), hot),
        StrokePlan("adiabatic_expansion", PistonProtocol(L3, L4, tau, g), None),
        StrokePlan("isoparametric_compression", PistonProtocol(L4, L1, tau, g), cold),
    ]


def default_n_max(config: CycleConfig) -> int:
    """Truncation keeping the hottest thermal state's top levels below 1e-7."""
    return required_n_max(max(config.n_hot, config.n_cold))


def dephase(rho: np.ndarray, basis: DressedBasis) -> np.ndarray:
    """Keep only the diagonal of ``rho`` in ``basis`` (rank-one projectors)."""
    rho = np.asarray(rho)
    if rho.shape != (basis.space.dim_total,) * 2:
        raise ValueError(f"state shape {rho.shape} does not match basis dimension {basis.space.dim_total}")
    V = basis.eigenvectors
    weights = np.real(np.einsum("ik,ij,jk->k", V.conj(), rho, V))
    return (V * weights) @ V.conj().T


# --- records --------------------------------------------------------------

@dataclass
class CycleSummary:
    w_cycle: float
    w_cycle_al: float
    q_hot: float
    eta: float | None
    power: float
    is_engine: bool
    cycles_to_steady: int = 1
    residual: float | None = None
    converged: bool | None = None

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class CycleRecord:
    config: CycleConfig
    series: dict
    strokes: list
    summary: CycleSummary
    diagnostics: dict = field(default_factory=dict)
    residual_history: list = field(default_factory=list)
    final_state: object = None

    @property
    def w_cycle(self) -> float:
        return self.summary.w_cycle

    @property
    def q_hot(self) -> float:
        return self.summary.q_hot

    @property
    def duration(self) -> float:
        return float(self.series["t"][-1] - self.series["t"][0])


def _summarize(config: CycleConfig, ledgers: list[StrokeLedger]) -> CycleSummary:
    w = sum(s.w_exp for s in ledgers)
    w_al = sum(s.w_al for s in ledgers)
    q_hot = ledgers[1].heat
    engine = w > 0 and q_hot > 0
    eta = abs(w) / abs(q_hot) if q_hot > 0 else None
    return CycleSummary(w_cycle=w, w_cycle_al=w_al, q_hot=q_hot, eta=eta,
                        power=w / config.duration, is_engine=engine)


# --- one cycle ------------------------------------------------------------

def _dense_stroke(rho, plan: StrokePlan, params: ModelParams, integ: IntegratorConfig, *,
                  t0: float, zero_point: bool, debug_heat: bool):
    space = HilbertSpec.from_dim(rho.shape[0])
    protocol = plan.protocol
    track_heat = debug_heat and plan.bath is not None
    samples = []

    def integrand(t, L, state):
        v = protocol.velocity(t)
        out = [
            float(np.einsum("ij,ji->", pressure_operator(params, L, t, space), state).real) * params.surface * v,
            alicki_work_rate(state, hamiltonian_derivative(params, L, v, space, zero_point)),
        ]
        if track_heat:
            out.append(energy(dynamics.dissipator(state, plan.bath), hamiltonian(params, L, space, zero_point)))
        return out

    def sampler(t, L, state, acc):
        H = hamiltonian(params, L, space, zero_point)
        p = float(np.einsum("ij,ji->", pressure_operator(params, L, t - t0, space), state).real)
        samples.append((t, L, energy(state, H), p, *acc))

    rho_end, _ = dynamics.evolve_stroke(rho, protocol, plan.bath, params, integ, sampler,
                                        t0=t0, integrand=integrand, zero_point=zero_point)
    cols = np.array(samples).T
    trace = sectors.StrokeTrace(
        t=cols[0], L=cols[1], energy=cols[2], pressure=cols[3], w_exp=cols[4], w_al=cols[5],
        heat_direct=cols[6] if track_heat else None, n_steps=len(samples) - 1,
        dt=protocol.duration / (len(samples) - 1),
    )
    return rho_end, trace


def _resolve_engine(state, engine: str) -> str:
    if engine not in ("auto", "sector", "dense"):
        raise ValueError(f"engine must be 'auto', 'sector' or 'dense', got {engine!r}")
    if isinstance(state, sectors.SectorState):
        if engine == "dense":
            raise ValueError("the dense engine needs a density matrix")
        return "sector"
    if engine == "auto":
        return "sector" if sectors.is_sector_representable(state) else "dense"
    return engine


def run_cycle(rho_in, config: CycleConfig, params: ModelParams, integ: IntegratorConfig, *,
              engine: str = "auto", zero_point: bool = True, debug_heat: bool = False, t0: float = 0.0):
    """Run the four strokes, measuring the energy after each.

    ``rho_in`` may be a dense density matrix or a :class:`SectorState`; the
    returned state has the same type.  With ``engine='auto'`` a dense input
    that is block-diagonal in the excitation number goes through the sector
    integrator.
    """
    mode = _resolve_engine(rho_in, engine)
    dense_out = not isinstance(rho_in, sectors.SectorState)
    state = rho_in
    if mode == "sector" and dense_out:
        state = sectors.SectorState.from_dense(rho_in)
    if mode == "dense":
        state = np.array(rho_in, dtype=complex)
        space = HilbertSpec.from_dim(state.shape[0])

    pieces = {k: [] for k in ("t", "L", "energy", "pressure", "w_exp", "w_al", "stroke_index", "q_direct")}
    ledgers = []
    w_exp_off = w_al_off = q_off = 0.0
    t = t0
    top = 0.0
    drift = 0.0
    steps = []
    for k, plan in enumerate(stroke_plan(config), start=1):
        try:
            if mode == "sector":
                state, tr = sectors.evolve_stroke(state, plan.protocol, plan.bath, params, integ, t0=t,
                                                  zero_point=zero_point, debug_heat=debug_heat)
                top = max(top, tr.top_population)
                drift = max(drift, tr.max_trace_drift)
            else:
                state, tr = _dense_stroke(state, plan, params, integ, t0=t, zero_point=zero_point,
                                          debug_heat=debug_heat)
        except EngineError as exc:
            raise type(exc)(f"stroke {k} ({plan.kind}): {exc}") from exc
        steps.append((tr.n_steps, tr.dt))
        first = 0 if k == 1 else 1
        pieces["t"].append(tr.t[first:])
        pieces["L"].append(tr.L[first:])
        pieces["energy"].append(tr.energy[first:])
        pieces["pressure"].append(tr.pressure[first:])
        pieces["w_exp"].append(w_exp_off + tr.w_exp[first:])
        pieces["w_al"].append(w_al_off + tr.w_al[first:])
        pieces["stroke_index"].append(np.full(len(tr.t) - first, k))
        q = tr.heat_direct if tr.heat_direct is not None else np.zeros_like(tr.t)
        pieces["q_direct"].append(q_off + q[first:])
        ledgers.append(StrokeLedger(
            index=k, kind=plan.kind, bath=None if plan.bath is None else plan.bath.target,
            t_start=float(tr.t[0]), t_end=float(tr.t[-1]),
            L_start=plan.protocol.L_start, L_end=plan.protocol.L_end,
            energy_start=float(tr.energy[0]), energy_end=float(tr.energy[-1]),
            w_exp=float(tr.w_exp[-1]), w_al=float(tr.w_al[-1]),
            heat_direct=None if tr.heat_direct is None else float(tr.heat_direct[-1]),
        ))
        w_exp_off += tr.w_exp[-1]
        w_al_off += tr.w_al[-1]
        q_off += q[-1]
        t = float(tr.t[-1])

        L_end = plan.protocol.L_end
        if mode == "sector":
            state = sectors.dephase(state, params, L_end)
        else:
            state = dephase(state, dressed_basis(params, L_end, space))

    series = {k: np.concatenate(v) for k, v in pieces.items()}
    series["V"] = params.surface * series["L"]
    series["omega_c"] = params.alpha_0 / series["L"]
    if not debug_heat:
        del series["q_direct"]
    if mode == "dense":
        top = float(np.real(np.diagonal(state)).reshape(2, -1).sum(axis=0)[-5:].sum())
    diagnostics = {"engine": mode, "top_population": top, "max_trace_drift": drift,
                   "steps": steps}
    record = CycleRecord(config, series, ledgers, _summarize(config, ledgers), diagnostics)
    if mode == "sector" and dense_out:
        state = state.to_dense()
    return state, record


def state_distance(a, b) -> float:
    if isinstance(a, sectors.SectorState):
        return sectors.trace_distance(a, b)
    from .quantum_ops import trace_distance

    return trace_distance(a, b)


def initial_state(config: CycleConfig, params: ModelParams, n_max: int, dense: bool = False):
    """Product thermal state at the cold bath parameter, wall at L1."""
    if dense:
        return thermal_product_state(params, config.L1, config.n_cold, HilbertSpec(n_max))
    return sectors.SectorState.thermal(config.n_cold, n_max)


def _sector_cycle_map(config: CycleConfig, params: ModelParams, integ: IntegratorConfig, zero_point: bool):
    """The bare cycle map on packed sector arrays (linear, no bookkeeping)."""
    plan = stroke_plan(config)

    def apply(flat: np.ndarray, n_max: int) -> np.ndarray:
        state = sectors.SectorState.unpack(flat.reshape(4, n_max + 1))
        for stroke in plan:
            state, _ = sectors.evolve_stroke(state, stroke.protocol, stroke.bath, params, integ,
                                             zero_point=zero_point, truncation_tol=None)
            state = sectors.dephase(state, params, stroke.protocol.L_end)
        return state.pack().ravel()

    return apply


def krylov_fixed_point(state: sectors.SectorState, config: CycleConfig, params: ModelParams,
                       integ: IntegratorConfig, *, zero_point: bool = True, max_maps: int | None = None):
    """Solve ``Phi(rho) = rho`` for the cycle map with GMRES.

    Phi is linear and trace preserving, so writing ``rho = rho0 + d`` with a
    traceless ``d`` turns the fixed point into ``(1 - Phi) d = Phi(rho0) - rho0``,
    which is regular on traceless states.  Returns ``(state, n_maps)``.
    """
    from scipy.sparse.linalg import LinearOperator, gmres

    M = state.n_max
    apply = _sector_cycle_map(config, params, integ, zero_point)
    x0 = state.pack().ravel()
    count = [0]

    def matvec(v):
        count[0] += 1
        return v - apply(np.asarray(v, dtype=float), M)

    b = apply(x0, M) - x0
    count[0] += 1
    size = x0.size
    op = LinearOperator((size, size), matvec=matvec, dtype=float)
    budget = max_maps or config.max_cycles
    # the 2-norm bounds the trace norm up to sqrt(dim)
    atol = 0.05 * config.steady_tol / math.sqrt(2 * (M + 1))
    d, _ = gmres(op, b, rtol=0.0, atol=atol, restart=min(budget, 200), maxiter=max(1, budget // 200 + 1))
    return sectors.SectorState.unpack((x0 + d).reshape(4, M + 1)), count[0]


def run_to_steady_cycle(config: CycleConfig, params: ModelParams, integ: IntegratorConfig, *,
                        n_max: int | None = None, engine: str = "sector", zero_point: bool = True,
                        debug_heat: bool = False, initial=None) -> CycleRecord:
    """Iterate cycles until successive cycle-start states are within ``steady_tol``.

    With ``config.steady_solver == 'krylov'`` (sector engine only) the
    iteration starts from a GMRES estimate of the fixed point; the cycles
    spent there count towards ``cycles_to_steady`` and ``max_cycles``.

    The returned record is the last cycle run; its summary carries
    ``cycles_to_steady`` and the final residual.  Raises
    :class:`ConvergenceError` (with that record attached) after ``max_cycles``.
    """
    if config.steady_solver == "krylov" and engine != "sector":
        raise ConfigError("the krylov steady solver needs the sector engine")
    if n_max is None:
        n_max = default_n_max(config)
    state = initial if initial is not None else initial_state(config, params, n_max, dense=engine == "dense")
    history = []
    record = None
    spent = 0
    if config.steady_solver == "krylov":
        if not isinstance(state, sectors.SectorState):
            raise ConfigError("the krylov steady solver needs a sector-form initial state")
        state, spent = krylov_fixed_point(state, config, params, integ, zero_point=zero_point,
                                          max_maps=max(1, config.max_cycles - 5))
    for k in range(spent + 1, max(config.max_cycles, spent + 1) + 1):
        end, record = run_cycle(state, config, params, integ, engine=engine,
                                zero_point=zero_point, debug_heat=debug_heat)
        residual = state_distance(state, end)
        history.append(residual)
        state = end
        record.summary.cycles_to_steady = k
        record.summary.residual = residual
        record.residual_history = history
        record.diagnostics["n_max"] = n_max
        record.diagnostics["krylov_maps"] = spent
        if not math.isfinite(residual):
            break
        if residual < config.steady_tol:
            record.summary.converged = True
            record.final_state = state
            return record
    record.summary.converged = False
    record.final_state = state
    raise ConvergenceError(
        f"no steady cycle after {record.summary.cycles_to_steady} cycles "
        f"(residual {history[-1]:.3e} >= {config.steady_tol:g})",
        record=record, residual=history[-1])
