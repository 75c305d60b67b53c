"""HTTP session service for interactive fairing.

Sessions hold a curve fit in progress: create one from a point set or an
analytic model, paint smoothing weights onto control-point ranges, step
or run the iteration, insert knots, and read snapshots. All geometry
lives server-side; clients only ever see JSON snapshots, so every number
a UI displays originates here.

Status codes: 400 malformed body, 404 unknown session, 409 busy,
410 diverged session, 422 infeasible request (n > m, bad range, bad
knot). Each session serializes its mutations through a non-blocking
lock; reads never block.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .assembly import NonContractiveError, WeightConfig, build_curve_bundle
from .datasets import sample_starfish, sample_viviani
from .iteration import IterationState, StoppingRule, run, step
from .jobs import JobConfigError, apply_weight_ranges
from .metrics import curvature_comb
from .splines import (
    DataSet,
    InvalidSizeError,
    SplineCurve,
    chord_length_params,
    insert_knot,
    make_knot_vector,
    select_initial_controls,
)

__all__ = ["create_app", "ApiError"]

SNAPSHOT_CURVE_SAMPLES = 200
SNAPSHOT_COMB_SAMPLES = 100


class ApiError(Exception):
    def __init__(self, status: int, detail: str):
        super().__init__(detail)
        self.status = status
        self.detail = detail


def _required(body: dict, key: str):
    if key not in body:
        raise ApiError(400, f"missing field {key!r}")
    return body[key]


def _auto_comb_scale(points: np.ndarray, peak: float) -> float:
    box = points.max(axis=0) - points.min(axis=0)
    return 0.1 * float(box.max()) / peak if peak > 0 else 1.0


@dataclass
class Session:
    id: str
    data: DataSet
    degree: int
    r: int
    mu_policy: str
    omega: np.ndarray
    state: IterationState
    status: str = "idle"  # idle | running | diverged
    reason: str | None = None
    history: list = field(default_factory=list)
    rounds: list = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)
    baseline: dict = field(default_factory=dict)

    @property
    def curve(self) -> SplineCurve:
        return SplineCurve(self.state.bundle.knots, self.state.control)

    def rebuild(self, omega: np.ndarray, control: np.ndarray, knots) -> None:
        config = WeightConfig(omega, self.r, self.mu_policy)
        try:
            bundle = build_curve_bundle(
                knots, self.data.params, self.data.points, config
            )
        except NonContractiveError as exc:
            raise ApiError(422, str(exc)) from None
        self.omega = np.asarray(omega, dtype=float)
        self.state = IterationState(bundle, control, self.state.k)

    def metrics(self) -> dict:
        bundle = self.state.bundle
        control = self.state.control
        diff = bundle.points - bundle.colloc.dense @ control
        fit = float(np.sqrt(np.mean(np.einsum("ij,ij->i", diff, diff))))
        eta = bundle.gram.matrix @ control
        energy = float(np.einsum("ij,ij->", control, eta))
        residual = bundle.rhs - bundle.a @ control
        ssq = float(np.einsum("ij,ij->", residual, residual))
        base = self.baseline

        def rel(value: float, base_value: float):
            if base_value > 0.0:
                return value / base_value
            return 1.0 if value == 0.0 else None

        return {
            "k": self.state.k,
            "fit_abs": fit,
            "energy_abs": energy,
            "fit_rel": rel(fit, base["fit"]),
            "energy_rel": rel(energy, base["energy"]),
            "iter_rel": rel(np.sqrt(ssq), np.sqrt(base["ssq"])),
        }

    def reset_baseline(self) -> None:
        bundle = self.state.bundle
        control = self.state.control
        diff = bundle.points - bundle.colloc.dense @ control
        residual = bundle.rhs - bundle.a @ control
        self.baseline = {
            "fit": float(np.sqrt(np.mean(np.einsum("ij,ij->i", diff, diff)))),
            "energy": float(
                np.einsum("ij,ij->", control, bundle.gram.matrix @ control)
            ),
            "ssq": float(np.einsum("ij,ij->", residual, residual)),
        }

    def snapshot(self) -> dict:
        bundle = self.state.bundle
        curve = self.curve
        ts = np.linspace(0.0, 1.0, SNAPSHOT_CURVE_SAMPLES)
        comb = curvature_comb(curve, SNAPSHOT_COMB_SAMPLES, 1.0)
        scale = _auto_comb_scale(self.data.points, comb.max_curvature())
        diag = bundle.diagnostics
        return {
            "id": self.id,
            "status": self.status,
            "reason": self.reason,
            "k": self.state.k,
            "m": self.data.m,
            "n": bundle.n,
            "dim": self.data.dim,
            "degree": self.degree,
            "r": self.r,
            "round": len(self.rounds),
            "control_points": self.state.control.tolist(),
            "knots": bundle.knots.knots.tolist(),
            "omega": self.omega.tolist(),
            "curve_samples": curve.eval_many(ts).tolist(),
            "comb": curvature_comb(curve, SNAPSHOT_COMB_SAMPLES, scale).to_dict(),
            "metrics": self.metrics(),
            "diagnostics": {
                "inf_norm": diag.inf_norm,
                "diagonally_dominant": diag.diagonally_dominant,
                "spectral_radius": diag.spectral_radius,
                "reliable": diag.reliable,
            },
        }


class SessionStore:
    def __init__(self):
        self._sessions: dict[str, Session] = {}
        self._counter = 0
        self._lock = threading.Lock()

    def add(self, session: Session) -> None:
        with self._lock:
            self._sessions[session.id] = session

    def next_id(self) -> str:
        with self._lock:
            self._counter += 1
            return f"s{self._counter}"

    def get(self, session_id: str) -> Session:
        session = self._sessions.get(session_id)
        if session is None:
            raise ApiError(404, f"no session {session_id!r}")
        return session


def _build_dataset(body: dict) -> DataSet:
    has_model = "model" in body
    has_points = "points" in body
    if has_model == has_points:
        raise ApiError(400, "need exactly one of 'model' or 'points'")
    try:
        if has_model:
            m = int(body.get("samples", 100))
            if body["model"] == "starfish":
                return sample_starfish(m)
            if body["model"] == "viviani":
                return sample_viviani(
                    m, float(body.get("sigma", 0.0)), int(body.get("seed", 0))
                )
            raise ApiError(400, f"unknown model {body['model']!r}")
        points = np.asarray(body["points"], dtype=float)
        if "params" in body:
            return DataSet(points, np.asarray(body["params"], dtype=float))
        return DataSet(points, chord_length_params(points))
    except ApiError:
        raise
    except (ValueError, TypeError) as exc:
        raise ApiError(400, str(exc)) from None


def _make_session(store: SessionStore, body: dict) -> Session:
    data = _build_dataset(body)
    try:
        n = int(_required(body, "n"))
        degree = int(body.get("degree", 3))
        r = int(body.get("r", 2))
        mu_policy = body.get("mu_policy", "per-row")
        base_omega = float(body.get("base_omega", 0.0))
    except (TypeError, ValueError) as exc:
        raise ApiError(400, str(exc)) from None
    if n > data.m:
        raise ApiError(422, f"n={n} exceeds the {data.m} data points")
    if r not in (1, 2, 3):
        raise ApiError(400, f"r must be 1, 2 or 3, got {r}")
    if not 0.0 <= base_omega <= 1.0:
        raise ApiError(400, f"base_omega {base_omega!r} outside [0, 1]")
    try:
        indices, control0 = select_initial_controls(data, n, degree)
        knots = make_knot_vector(data.params, indices, degree)
        config = WeightConfig(np.full(n, base_omega), r, mu_policy)
        bundle = build_curve_bundle(knots, data.params, data.points, config)
    except NonContractiveError as exc:
        raise ApiError(422, str(exc)) from None
    except (ValueError, TypeError) as exc:
        raise ApiError(400, str(exc)) from None
    session = Session(
        id=store.next_id(),
        data=data,
        degree=degree,
        r=r,
        mu_policy=mu_policy,
        omega=np.full(n, base_omega),
        state=IterationState(bundle, control0),
    )
    session.reset_baseline()
    session.history.append({"action": "create", "body": body})
    store.add(session)
    return session


def _mutation_guard(session: Session):
    if session.status == "diverged":
        raise ApiError(410, f"session diverged: {session.reason or 'non-finite'}")
    if not session.lock.acquire(blocking=False):
        raise ApiError(409, "a run is already in progress")
    return session.lock


def _apply_weights(session: Session, body: dict) -> None:
    ranges = body.get("ranges", [])
    if not isinstance(ranges, list):
        raise ApiError(400, "'ranges' must be a list")
    omega = np.array(session.omega)
    if "base_omega" in body:
        base = float(body["base_omega"])
        if not 0.0 <= base <= 1.0:
            raise ApiError(422, f"base_omega {base!r} outside [0, 1]")
        omega[:] = base
    try:
        omega = apply_weight_ranges(omega, ranges)
    except JobConfigError as exc:
        raise ApiError(422, str(exc)) from None
    session.rebuild(omega, session.state.control, session.state.bundle.knots)
    session.reset_baseline()
    session.history.append({"action": "weights", "body": body})


def _remap_omega(omega: np.ndarray, span: int, degree: int) -> np.ndarray:
    """Weights for the control net after one knot insertion at span.

    Kept rows keep their weight; each re-blended or shifted row takes the
    larger weight of the two old rows it draws from.
    """
    n = omega.size + 1
    out = np.empty(n)
    for i in range(n):
        if i <= span - degree:
            out[i] = omega[i]
        elif i <= span:
            out[i] = max(omega[i - 1], omega[i])
        else:
            out[i] = omega[i - 1]
    return out


def _apply_knots(session: Session, body: dict) -> None:
    values = _required(body, "values")
    if not isinstance(values, list) or not values:
        raise ApiError(400, "'values' must be a non-empty list")
    curve = session.curve
    omega = np.array(session.omega)
    for raw in values:
        try:
            u = float(raw)
        except (TypeError, ValueError):
            raise ApiError(422, f"knot {raw!r} is not a number") from None
        if not (np.isfinite(u) and 0.0 < u < 1.0):
            raise ApiError(422, f"knot {u!r} outside the open interval (0, 1)")
        span = curve.knots.span(u)
        try:
            curve = insert_knot(curve, u)
        except (InvalidSizeError, ValueError) as exc:
            raise ApiError(422, str(exc)) from None
        omega = _remap_omega(omega, span, session.degree)
    session.rebuild(omega, curve.control, curve.knots)
    session.reset_baseline()
    session.history.append({"action": "knots", "body": body})


def _run_session(session: Session, stop: StoppingRule) -> None:
    state, trace = run(session.state, stop)
    session.state = state
    session.rounds.append(
        {
            "omega": session.omega.tolist(),
            "stop": {"tol": stop.tol, "max_iters": stop.max_iters, "mode": stop.mode},
            "stop_reason": trace.stop_reason,
            "iterations": len(trace) - 1,
            "k_after": state.k,
            "trace": [[float(v) for v in row] for row in trace.table],
            "control_points": state.control.tolist(),
        }
    )
    if trace.stop_reason == "diverged":
        session.status = "diverged"
        session.reason = "iteration diverged"
    else:
        session.status = "idle"


def create_app() -> FastAPI:
    app = FastAPI(title="fairspline session service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store = SessionStore()
    app.state.store = store

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError):
        return JSONResponse({"detail": exc.detail}, status_code=exc.status)

    async def _body(request: Request) -> dict:
        raw = await request.body()
        if not raw:
            return {}
        try:
            body = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ApiError(400, f"malformed JSON: {exc.msg}") from None
        if not isinstance(body, dict):
            raise ApiError(400, "body must be a JSON object")
        return body

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        session = _make_session(store, await _body(request))
        return session.snapshot()

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str):
        return store.get(session_id).snapshot()

    @app.get("/sessions/{session_id}/comb")
    async def get_comb(session_id: str, samples: int = 200, scale: float = 0.0):
        session = store.get(session_id)
        if samples < 2:
            raise ApiError(422, "samples must be at least 2")
        curve = session.curve
        if scale <= 0.0:
            probe = curvature_comb(curve, samples, 1.0)
            scale = _auto_comb_scale(session.data.points, probe.max_curvature())
        return curvature_comb(curve, samples, scale).to_dict()

    @app.get("/sessions/{session_id}/history")
    async def get_history(session_id: str):
        session = store.get(session_id)
        return {"history": session.history, "rounds": session.rounds}

    @app.post("/sessions/{session_id}/weights")
    async def post_weights(session_id: str, request: Request):
        session = store.get(session_id)
        body = await _body(request)
        lock = _mutation_guard(session)
        try:
            _apply_weights(session, body)
        finally:
            lock.release()
        return session.snapshot()

    @app.post("/sessions/{session_id}/step")
    async def post_step(session_id: str, request: Request):
        session = store.get(session_id)
        body = await _body(request)
        count = body.get("count", 1)
        if isinstance(count, bool) or not isinstance(count, int) or count < 1:
            raise ApiError(422, f"count must be a positive integer, got {count!r}")
        lock = _mutation_guard(session)
        try:
            state = session.state
            try:
                for _ in range(count):
                    state = step(state)
            except FloatingPointError as exc:
                session.status = "diverged"
                session.reason = str(exc)
                raise ApiError(410, f"session diverged: {exc}") from None
            session.state = state
            session.history.append({"action": "step", "body": {"count": count}})
        finally:
            lock.release()
        return session.snapshot()

    @app.post("/sessions/{session_id}/run")
    async def post_run(session_id: str, request: Request):
        session = store.get(session_id)
        body = await _body(request)
        try:
            stop = StoppingRule(
                tol=float(body.get("tol", 1e-6)),
                max_iters=int(body.get("max_iters", 10_000)),
                mode=body.get("mode", "delta"),
            )
        except (TypeError, ValueError) as exc:
            raise ApiError(422, str(exc)) from None
        background = bool(body.get("background", False))
        lock = _mutation_guard(session)
        session.history.append({"action": "run", "body": body})
        if not background:
            try:
                _run_session(session, stop)
            finally:
                lock.release()
            return session.snapshot()

        session.status = "running"

        def worker():
            try:
                _run_session(session, stop)
            finally:
                lock.release()

        threading.Thread(target=worker, daemon=True).start()
        return session.snapshot()

    @app.post("/sessions/{session_id}/knots")
    async def post_knots(session_id: str, request: Request):
        session = store.get(session_id)
        body = await _body(request)
        lock = _mutation_guard(session)
        try:
            _apply_knots(session, body)
        finally:
            lock.release()
        return session.snapshot()

    return app
