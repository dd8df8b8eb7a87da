"""Scenario JSON schema: parsing, validation and assembly.

A scenario file declares the model, topology, formation family, regime and
simulation settings; gains are synthesized at load time unless explicit
matrices are given.  Unknown keys anywhere are rejected, and the schema is
versioned.
"""

import json
import math

import numpy as np

from . import synthesis
from .errors import ScenarioError
from .formation import ZeroFormation, make_harmonic_spec, make_piecewise_spec
from .graph import build_topology
from .protocols import LeaderInput, Regime, RegimeOptions
from .sim import InitSpec, Scenario
from .synthesis import GainSet, LtiModel
from .vehicle import VehicleParams

SCHEMA_VERSION = 1

_TOP_KEYS = {"version", "name", "model", "topology", "gains", "formation",
             "regime", "leader_input", "vehicle", "sim", "output",
             "acceptance"}
_MODEL_KEYS = {"a", "b", "c"}
_TOPOLOGY_KEYS = {"adjacency", "pinning", "directed"}
_GAINS_KEYS = {"k1", "k2", "k2_poles", "k2_lqr", "q", "f", "gamma", "s",
               "q_tilde", "f_tilde", "gamma_tilde", "beta"}
_FORMATION_KEYS = {"family", "r", "w", "component_map", "pieces", "phases"}
_PIECE_KEYS = {"interval", "assembly"}
_REGIME_KEYS = {"name", "options"}
_OPTION_KEYS = {"smooth_z", "delta", "leak_eps", "k_edge", "k_pin"}
_CHANNEL_KEYS = {"exp", "sin", "offset", "abs"}
_SIM_KEYS = {"t_final", "dt", "seed", "record_stride", "init"}
_INIT_KEYS = {"x", "v", "w", "w0", "c_edge", "c_node", "leader_x",
              "x_range", "c_range"}
_OUTPUT_KEYS = {"dir", "snapshots", "plots", "position_components"}
_VEHICLE_KEYS = {"mass", "inertia", "hand_offset"}
_ACCEPT_KEYS = {"final_error", "final_window"}


def _check_keys(section, allowed, where):
    unknown = set(section) - allowed
    if unknown:
        raise ScenarioError(f"unknown keys {sorted(unknown)} in {where}")


def _matrix(raw, where):
    try:
        m = np.array(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"bad matrix in {where}: {exc}") from exc
    return m


def _poles(raw):
    out = []
    for entry in raw:
        if isinstance(entry, (int, float)):
            out.append(complex(entry, 0.0))
        else:
            out.append(complex(entry[0], entry[1]))
    return out


def make_leader_profile(channels):
    """Vector profile t -> u0(t) from per-channel term descriptions."""
    parsed = []
    for k, ch in enumerate(channels):
        _check_keys(ch, _CHANNEL_KEYS, f"leader_input.channels[{k}]")
        exp = ch.get("exp")
        sin = ch.get("sin")
        parsed.append((
            None if exp is None else (float(exp[0]), float(exp[1])),
            None if sin is None else (float(sin[0]), float(sin[1]),
                                      float(sin[2]) if len(sin) > 2 else 0.0),
            float(ch.get("offset", 0.0)),
            bool(ch.get("abs", False))))

    def profile(t):
        vals = []
        for exp, sin, offset, take_abs in parsed:
            val = offset
            if exp is not None:
                val += exp[0] * math.exp(exp[1] * t)
            if sin is not None:
                val += sin[0] * math.sin(sin[1] * t + sin[2])
            vals.append(abs(val) if take_abs else val)
        return np.array(vals)

    return profile


def _build_formation(raw, n, n_followers, k1, t_final):
    _check_keys(raw, _FORMATION_KEYS, "formation")
    family = raw.get("family", "harmonic")
    if family == "zero":
        return ZeroFormation(n=n, n_followers=n_followers, k1=k1)
    if family != "harmonic":
        raise ScenarioError(f"unknown formation family '{family}'")
    base = make_harmonic_spec(
        n, n_followers, r=float(raw["r"]), w=float(raw["w"]),
        component_map=[tuple(pair) for pair in raw["component_map"]],
        k1=k1, t_final=t_final,
        phases=raw.get("phases"))
    pieces_raw = raw.get("pieces")
    if not pieces_raw:
        return base
    pieces = []
    for k, piece in enumerate(pieces_raw):
        _check_keys(piece, _PIECE_KEYS, f"formation.pieces[{k}]")
        t0, t1 = piece["interval"]
        pieces.append(((float(t0), float(t1)),
                       _matrix(piece["assembly"], "assembly")))
    return make_piecewise_spec(base, pieces)


def _build_gains(raw, model, regime, leader_bound):
    _check_keys(raw, _GAINS_KEYS, "gains")
    if "k1" not in raw:
        raise ScenarioError("gains.k1 is required (shape gain)")
    k1 = _matrix(raw["k1"], "gains.k1")
    explicit = {key: _matrix(raw[key], f"gains.{key}")
                for key in ("k2", "q", "f", "gamma", "s", "q_tilde",
                            "f_tilde", "gamma_tilde") if key in raw}
    beta = raw.get("beta")
    state_regime = regime.uses_relative_state

    gains = GainSet(k1=k1)
    if "k2" in explicit:
        gains.k2 = explicit["k2"]
    elif "k2_poles" in raw:
        gains.k2 = synthesis.synth_k2(model, poles=_poles(raw["k2_poles"]))
    elif "k2_lqr" in raw:
        spec = raw["k2_lqr"]
        gains.k2 = synthesis.synth_k2(
            model, weights=(_matrix(spec["q"], "k2_lqr.q"),
                            _matrix(spec["r"], "k2_lqr.r")))
    else:
        raise ScenarioError("gains needs one of k2, k2_poles, k2_lqr")

    if state_regime:
        given = {"q_tilde", "f_tilde", "gamma_tilde"} & set(explicit)
        if given == {"q_tilde", "f_tilde", "gamma_tilde"}:
            gains.q_tilde = explicit["q_tilde"]
            gains.f_tilde = explicit["f_tilde"]
            gains.gamma_tilde = explicit["gamma_tilde"]
        elif given:
            raise ScenarioError("give all of q_tilde, f_tilde, gamma_tilde "
                                "or none")
        else:
            gains.q_tilde, gains.f_tilde, gains.gamma_tilde = \
                synthesis.synth_state_gains(model)
    else:
        given = {"q", "f"} & set(explicit)
        if given == {"q", "f"}:
            gains.q_mat = explicit["q"]
            gains.f = explicit["f"]
            gains.gamma = explicit.get("gamma", np.eye(model.q))
        elif given:
            raise ScenarioError("give both q and f or neither")
        else:
            gains.q_mat, gains.f, gains.gamma = \
                synthesis.synth_output_gains(model)
    if regime is Regime.DIRECTED_TRACKING_BOUNDED_INPUT:
        gains.s_mat = explicit.get("s")
        if gains.s_mat is None:
            gains.s_mat = synthesis.synth_s(model, gains.k2)
        gains.beta = synthesis.synth_beta(
            leader_bound if leader_bound is not None else 0.0,
            override=beta)
    return gains


def load_scenario(path):
    """Parse, validate and assemble a Scenario plus its output options."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON in {path}: {exc}") from exc
    return scenario_from_dict(raw)


def scenario_from_dict(raw):
    _check_keys(raw, _TOP_KEYS, "scenario")
    version = raw.get("version")
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"unsupported schema version {version!r} "
                            f"(expected {SCHEMA_VERSION})")
    for key in ("name", "model", "topology", "gains", "formation", "regime",
                "sim"):
        if key not in raw:
            raise ScenarioError(f"missing required section '{key}'")

    model_raw = raw["model"]
    _check_keys(model_raw, _MODEL_KEYS, "model")
    model = LtiModel(_matrix(model_raw["a"], "model.a"),
                     _matrix(model_raw["b"], "model.b"),
                     _matrix(model_raw["c"], "model.c"))

    topo_raw = raw["topology"]
    _check_keys(topo_raw, _TOPOLOGY_KEYS, "topology")
    topo = build_topology(_matrix(topo_raw["adjacency"], "adjacency"),
                          _matrix(topo_raw["pinning"], "pinning"),
                          directed=bool(topo_raw.get("directed", True)))

    regime_raw = raw["regime"]
    _check_keys(regime_raw, _REGIME_KEYS, "regime")
    try:
        regime = Regime(regime_raw["name"])
    except ValueError as exc:
        raise ScenarioError(f"unknown regime '{regime_raw['name']}'") from exc
    opt_raw = dict(regime_raw.get("options", {}))
    _check_keys(opt_raw, _OPTION_KEYS, "regime.options")
    for key in ("k_edge", "k_pin"):
        if key in opt_raw:
            opt_raw[key] = _matrix(opt_raw[key], key)
    options = RegimeOptions(**opt_raw)

    sim_raw = raw["sim"]
    _check_keys(sim_raw, _SIM_KEYS, "sim")
    t_final = float(sim_raw["t_final"])

    leader_input = None
    if raw.get("leader_input") is not None:
        li = raw["leader_input"]
        _check_keys(li, {"channels"}, "leader_input")
        profile = make_leader_profile(li["channels"])
        if len(profile(0.0)) != model.p:
            raise ScenarioError("leader input channel count must equal the "
                                "input dimension")
        leader_input = LeaderInput.certify(profile, t_final)

    gains = _build_gains(raw["gains"], model, regime,
                         None if leader_input is None else leader_input.bound)

    spec = _build_formation(raw["formation"], model.n, topo.n_followers,
                            gains.k1, t_final)

    init_raw = dict(sim_raw.get("init", {}))
    _check_keys(init_raw, _INIT_KEYS, "sim.init")
    for key in ("x", "v", "w", "w0", "c_edge", "c_node", "leader_x"):
        if key in init_raw:
            init_raw[key] = _matrix(init_raw[key], f"init.{key}")
    for key in ("x_range", "c_range"):
        if key in init_raw:
            init_raw[key] = tuple(float(v) for v in init_raw[key])
    init = InitSpec(**init_raw)

    vehicle = None
    if raw.get("vehicle") is not None:
        veh_raw = raw["vehicle"]
        _check_keys(veh_raw, _VEHICLE_KEYS, "vehicle")
        vehicle = VehicleParams(**{k: float(v) for k, v in veh_raw.items()})

    out_raw = dict(raw.get("output", {}))
    _check_keys(out_raw, _OUTPUT_KEYS, "output")
    accept_raw = dict(raw.get("acceptance", {}))
    _check_keys(accept_raw, _ACCEPT_KEYS, "acceptance")

    scenario = Scenario(
        name=str(raw["name"]),
        model=model, topology=topo, gains=gains, spec=spec, regime=regime,
        options=options, leader_input=leader_input,
        t_final=t_final, dt=float(sim_raw.get("dt", 1e-3)),
        seed=int(sim_raw.get("seed", 0)),
        record_stride=int(sim_raw.get("record_stride", 100)),
        init=init,
        position_components=tuple(out_raw.get("position_components", (0, 1))),
        vehicle=vehicle)
    output = {
        "dir": out_raw.get("dir"),
        "snapshots": list(out_raw.get("snapshots", [])),
        "plots": bool(out_raw.get("plots", False)),
        "acceptance": accept_raw,
    }
    return scenario, output
