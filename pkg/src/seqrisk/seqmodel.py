"""Token-sequence models, stopping horizons, and trajectory sampling.

A sequence model is anything that maps a token prefix to a probability
distribution over the next token.  A :class:`Vocabulary` designates one
token as the outcome of interest, an optional terminal set, and per-token
time increments; a :class:`HorizonPolicy` bounds generation.  Trajectories
record, at every generated position, the *unrestricted* probability that
the next token would have been the outcome token (the hazard), which is
what the downstream estimators consume.

Generation stops after the first token that is the outcome (standard mode
only), is terminal, pushes cumulative time past the limit, or fills the
step cap.  In ``outcome_excluded`` mode the outcome token is removed from
the candidate pool and the remaining mass renormalized; the hazards still
come from the unrestricted distribution.
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass, field
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

from .errors import DegenerateHazardError, ModelValidationError

STANDARD = "standard"
OUTCOME_EXCLUDED = "outcome_excluded"
MODES = (STANDARD, OUTCOME_EXCLUDED)

#: outcome mass at or above this is treated as degenerate (restricted
#: distribution undefined)
DEGENERATE_HAZARD = 1.0 - 1e-15

#: tolerance for "sums to one" checks on probability vectors
PROBABILITY_TOL = 1e-12

_UNIFORM_CHUNK = 32


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"unknown trajectory mode {mode!r}; expected one of {MODES}")


@dataclass(frozen=True, eq=False)
class Vocabulary:
    """Token universe: size, outcome token, terminal tokens, per-token times.

    ``time_map[v]`` is the calendar time contributed by token ``v``; tokens
    that do not represent the passage of time must map to exactly 0.  The
    outcome token may be a member of the terminal set.
    """

    size: int
    outcome: int
    terminal: frozenset[int] = frozenset()
    time_map: np.ndarray | None = None
    _time_list: list = field(init=False, repr=False)

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("vocabulary size must be positive")
        if not 0 <= self.outcome < self.size:
            raise ValueError(f"outcome token {self.outcome} outside [0, {self.size})")
        if any(not 0 <= t < self.size for t in self.terminal):
            raise ValueError("terminal set contains out-of-range tokens")
        object.__setattr__(self, "terminal", frozenset(int(t) for t in self.terminal))
        tm = self.time_map
        if tm is None:
            tm = np.zeros(self.size)
        tm = np.asarray(tm, dtype=float)
        if tm.shape != (self.size,):
            raise ValueError("time_map must have one entry per token")
        if not np.all(np.isfinite(tm)) or np.any(tm < 0):
            raise ValueError("time_map entries must be finite and >= 0")
        tm = tm.copy()
        tm.flags.writeable = False
        object.__setattr__(self, "time_map", tm)
        object.__setattr__(self, "_time_list", tm.tolist())

    @classmethod
    def unit_steps(cls, size: int, outcome: int) -> "Vocabulary":
        """Vocabulary where every token advances time by exactly one step."""
        return cls(size=size, outcome=outcome, time_map=np.ones(size))


@dataclass(frozen=True)
class HorizonPolicy:
    """Generation bounds: a hard step cap plus an optional time limit.

    ``max_steps`` is mandatory so every trajectory terminates even when the
    model emits only zero-time tokens.  When ``time_limit`` is set,
    generation stops after the first token that pushes cumulative time
    strictly past it.
    """

    max_steps: int
    time_limit: float | None = None

    def __post_init__(self):
        if int(self.max_steps) != self.max_steps or self.max_steps < 1:
            raise ValueError("max_steps must be a positive integer")
        if self.time_limit is not None and not self.time_limit >= 0:
            raise ValueError("time_limit must be >= 0 when set")

    def to_dict(self) -> dict:
        d = {"max_steps": self.max_steps}
        if self.time_limit is not None:
            d["time_limit"] = self.time_limit
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "HorizonPolicy":
        return cls(max_steps=int(d["max_steps"]), time_limit=d.get("time_limit"))


@runtime_checkable
class SequenceModel(Protocol):
    """Anything that maps a token prefix to a next-token distribution."""

    @property
    def vocabulary(self) -> Vocabulary: ...

    def next_distribution(self, prefix: Sequence[int]) -> np.ndarray: ...


@dataclass(frozen=True, eq=False)
class MarkovModel:
    """Finite-state sequence model driven by a row-stochastic matrix.

    The next-token distribution depends only on the most recent token (or
    on ``initial_state`` for an empty prefix).  States double as tokens;
    every token advances time by one unit, so a horizon in step-count mode
    carries ``time_limit == max_steps == number of steps``.
    """

    n_states: int
    transition: np.ndarray
    initial_state: int
    outcome_state: int
    horizon: HorizonPolicy
    _vocab: Vocabulary = field(init=False, repr=False)
    _hazard: tuple = field(init=False, repr=False)
    _cum_standard: tuple = field(init=False, repr=False)
    _cum_restricted: tuple = field(init=False, repr=False)

    def __post_init__(self):
        t = np.asarray(self.transition, dtype=float)
        if t.shape != (self.n_states, self.n_states):
            raise ValueError(
                f"transition must be {self.n_states}x{self.n_states}, got {t.shape}"
            )
        for name in ("initial_state", "outcome_state"):
            v = getattr(self, name)
            if not 0 <= v < self.n_states:
                raise ValueError(f"{name} {v} outside [0, {self.n_states})")
        t = t.copy()
        t.flags.writeable = False
        object.__setattr__(self, "transition", t)
        object.__setattr__(
            self, "_vocab", Vocabulary.unit_steps(self.n_states, self.outcome_state)
        )
        o = self.outcome_state
        hazard = t[:, o].tolist()
        cum_std = []
        cum_res = []
        for s in range(self.n_states):
            row = t[s]
            c = np.cumsum(row)
            c[-1] = 1.0
            cum_std.append(c.tolist())
            h = row[o]
            if h >= DEGENERATE_HAZARD:
                cum_res.append(None)
            else:
                r = row / (1.0 - h)
                r[o] = 0.0
                cr = np.cumsum(r)
                cr[-1] = 1.0
                cum_res.append(cr.tolist())
        object.__setattr__(self, "_hazard", tuple(hazard))
        object.__setattr__(self, "_cum_standard", tuple(cum_std))
        object.__setattr__(self, "_cum_restricted", tuple(cum_res))

    @property
    def vocabulary(self) -> Vocabulary:
        return self._vocab

    @classmethod
    def step_mode(
        cls, transition, initial_state: int, outcome_state: int, steps: int
    ) -> "MarkovModel":
        """Chain observed for a fixed number of steps (unit time per token)."""
        transition = np.asarray(transition, dtype=float)
        return cls(
            n_states=transition.shape[0],
            transition=transition,
            initial_state=initial_state,
            outcome_state=outcome_state,
            horizon=HorizonPolicy(max_steps=int(steps), time_limit=float(steps)),
        )

    def next_distribution(self, prefix: Sequence[int]) -> np.ndarray:
        state = self.initial_state if len(prefix) == 0 else prefix[-1]
        if not 0 <= state < self.n_states:
            raise ValueError(f"invalid token id {state} in prefix")
        return self.transition[state]

    def to_json(self) -> str:
        return json.dumps(
            {
                "n_states": self.n_states,
                "transition": [float(x) for x in self.transition.ravel()],
                "initial_state": self.initial_state,
                "outcome_state": self.outcome_state,
                "horizon": self.horizon.to_dict(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "MarkovModel":
        d = json.loads(text)
        n = int(d["n_states"])
        flat = np.asarray(d["transition"], dtype=float)
        if flat.size != n * n:
            raise ValueError(f"transition has {flat.size} entries, expected {n * n}")
        return cls(
            n_states=n,
            transition=flat.reshape(n, n),
            initial_state=int(d["initial_state"]),
            outcome_state=int(d["outcome_state"]),
            horizon=HorizonPolicy.from_dict(d["horizon"]),
        )


@dataclass(frozen=True)
class Trajectory:
    """One sampled timeline plus the hazards recorded while generating it.

    ``hazards`` has one entry per generation step; ``end_index`` equals
    ``len(hazards)``.  When an outcome-excluded sample hits a degenerate
    hazard, the hazard of the impossible step is still recorded but no
    token is drawn for it, so ``len(tokens) == end_index - 1`` there and
    the trajectory is flagged ``degenerate``.
    """

    tokens: tuple
    hazards: tuple
    hit_index: int | None
    end_index: int
    mode: str
    elapsed_time: float
    degenerate: bool = False
    stop_reason: str = ""
    seed: int | None = None

    def to_dict(self) -> dict:
        return {
            "tokens": list(self.tokens),
            "hazards": list(self.hazards),
            "hit_index": self.hit_index,
            "end_index": self.end_index,
            "mode": self.mode,
            "elapsed_time": self.elapsed_time,
            "degenerate": self.degenerate,
            "stop_reason": self.stop_reason,
            "seed": self.seed,
        }

    def to_json_line(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "Trajectory":
        return cls(
            tokens=tuple(d["tokens"]),
            hazards=tuple(d["hazards"]),
            hit_index=d.get("hit_index"),
            end_index=int(d["end_index"]),
            mode=d["mode"],
            elapsed_time=float(d["elapsed_time"]),
            degenerate=bool(d.get("degenerate", False)),
            stop_reason=d.get("stop_reason", ""),
            seed=d.get("seed"),
        )


def write_jsonl(trajectories, path) -> None:
    with open(path, "w") as fh:
        for t in trajectories:
            fh.write(t.to_json_line() + "\n")


def read_jsonl(path) -> list:
    with open(path) as fh:
        return [Trajectory.from_dict(json.loads(line)) for line in fh if line.strip()]


def validate(model: MarkovModel) -> list[str]:
    """Diagnostic check of row-stochasticity; empty list means ok."""
    out = []
    t = np.asarray(model.transition, dtype=float)
    for i, row in enumerate(t):
        bad = np.nonzero((row < 0) | (row > 1) | ~np.isfinite(row))[0]
        for j in bad:
            out.append(f"row {i} entry {j} = {row[j]!r} outside [0, 1]")
        if bad.size == 0 and abs(float(row.sum()) - 1.0) > PROBABILITY_TOL:
            out.append(f"row {i} sums to {float(row.sum())!r}, expected 1")
    return out


def require_valid(model: MarkovModel) -> None:
    violations = validate(model)
    if violations:
        raise ModelValidationError(violations)


def next_distribution(model: SequenceModel, prefix: Sequence[int]) -> np.ndarray:
    """Next-token distribution for ``prefix``, with pre/post checks."""
    vocab = model.vocabulary
    for tok in prefix:
        if not 0 <= tok < vocab.size:
            raise ValueError(f"invalid token id {tok} in prefix")
    dist = np.asarray(model.next_distribution(prefix), dtype=float)
    if dist.shape != (vocab.size,):
        raise ValueError("model returned a vector of the wrong length")
    if np.any(dist < 0) or abs(float(dist.sum()) - 1.0) > PROBABILITY_TOL:
        raise ValueError("model returned an invalid probability vector")
    return dist


def restricted_distribution(dist: np.ndarray, outcome: int) -> np.ndarray:
    """Remove the outcome token's mass and renormalize the rest.

    Raises :class:`DegenerateHazardError` when the outcome holds essentially
    all mass, in which case no restricted draw exists.
    """
    dist = np.asarray(dist, dtype=float)
    if np.any(dist < 0) or abs(float(dist.sum()) - 1.0) > PROBABILITY_TOL:
        raise ValueError("dist is not a valid probability vector")
    h = float(dist[outcome])
    if h >= DEGENERATE_HAZARD:
        raise DegenerateHazardError(
            f"outcome mass {h} leaves nothing to renormalize"
        )
    out = dist / (1.0 - h)
    out[outcome] = 0.0
    return out


def _stop_reason(vocab, horizon, mode, token, elapsed, n_tokens):
    """Why generation stops after appending ``token``, or None to continue."""
    if mode == STANDARD and token == vocab.outcome:
        return "outcome"
    if token in vocab.terminal:
        return "terminal"
    if horizon.time_limit is not None and elapsed > horizon.time_limit:
        return "time_limit"
    if n_tokens >= horizon.max_steps:
        return "max_steps"
    return None


def sample_trajectory(
    model: SequenceModel,
    vocab: Vocabulary,
    horizon: HorizonPolicy,
    mode: str,
    rng: np.random.Generator,
    *,
    seed: int | None = None,
) -> Trajectory:
    """Draw one trajectory, recording the unrestricted hazard at every step.

    Inverse-CDF draws consume exactly one uniform per generated token, in
    order, so a trajectory is reproducible from the stream that produced
    it.  ``seed`` is carried as metadata only.
    """
    _check_mode(mode)
    if vocab.size != model.vocabulary.size:
        raise ValueError("vocabulary size does not match the model")
    if isinstance(model, MarkovModel):
        return _sample_markov(model, vocab, horizon, mode, rng, seed)
    return _sample_generic(model, vocab, horizon, mode, rng, seed)


def _sample_markov(model, vocab, horizon, mode, rng, seed):
    excluded = mode == OUTCOME_EXCLUDED
    times = vocab._time_list
    terminal = vocab.terminal
    hazard = model._hazard
    cum_std = model._cum_standard
    cum_res = model._cum_restricted
    tokens: list[int] = []
    hazards: list[float] = []
    elapsed = 0.0
    hit = None
    degenerate = False
    reason = ""
    state = model.initial_state
    buf: list[float] = []
    pos = 0
    while True:
        h = hazard[state]
        hazards.append(h)
        if excluded:
            cum = cum_res[state]
            if cum is None:
                degenerate = True
                reason = "degenerate_hazard"
                break
        else:
            cum = cum_std[state]
        if pos == len(buf):
            buf = rng.random(_UNIFORM_CHUNK).tolist()
            pos = 0
        tok = bisect.bisect_right(cum, buf[pos])
        pos += 1
        tokens.append(tok)
        elapsed += times[tok]
        stop = _stop_reason(vocab, horizon, mode, tok, elapsed, len(tokens))
        if stop is not None:
            if stop == "outcome":
                hit = len(tokens) - 1
            reason = stop
            break
        state = tok
    return Trajectory(
        tokens=tuple(tokens),
        hazards=tuple(hazards),
        hit_index=hit,
        end_index=len(hazards),
        mode=mode,
        elapsed_time=elapsed,
        degenerate=degenerate,
        stop_reason=reason,
        seed=seed,
    )


def _sample_generic(model, vocab, horizon, mode, rng, seed):
    excluded = mode == OUTCOME_EXCLUDED
    o = vocab.outcome
    times = vocab._time_list
    prefix: list[int] = []
    hazards: list[float] = []
    elapsed = 0.0
    hit = None
    degenerate = False
    reason = ""
    buf: list[float] = []
    pos = 0
    while True:
        dist = np.asarray(model.next_distribution(prefix), dtype=float)
        h = float(dist[o])
        hazards.append(h)
        if excluded:
            if h >= DEGENERATE_HAZARD:
                degenerate = True
                reason = "degenerate_hazard"
                break
            draw_from = dist / (1.0 - h)
            draw_from[o] = 0.0
        else:
            draw_from = dist
        cum = np.cumsum(draw_from)
        cum[-1] = 1.0
        if pos == len(buf):
            buf = rng.random(_UNIFORM_CHUNK).tolist()
            pos = 0
        tok = int(np.searchsorted(cum, buf[pos], side="right"))
        pos += 1
        prefix.append(tok)
        elapsed += times[tok]
        stop = _stop_reason(vocab, horizon, mode, tok, elapsed, len(prefix))
        if stop is not None:
            if stop == "outcome":
                hit = len(prefix) - 1
            reason = stop
            break
    return Trajectory(
        tokens=tuple(prefix),
        hazards=tuple(hazards),
        hit_index=hit,
        end_index=len(hazards),
        mode=mode,
        elapsed_time=elapsed,
        degenerate=degenerate,
        stop_reason=reason,
        seed=seed,
    )


def effective_steps(vocab: Vocabulary, horizon: HorizonPolicy) -> int:
    """Largest number of tokens a trajectory can contain under unit times.

    Only meaningful for vocabularies whose tokens all take time 1 (the
    Markov setting): the time limit then binds after ``floor(limit) + 1``
    tokens, the step cap after ``max_steps``.
    """
    cap = horizon.max_steps
    if horizon.time_limit is not None:
        cap = min(cap, int(np.floor(horizon.time_limit)) + 1)
    return cap
