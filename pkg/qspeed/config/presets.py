"""
Scenario presets for the seven measured dephasing configurations
"""

import json
from typing import Any, Dict, List, Optional, Tuple

# (key, value, comment); keys not listed keep their defaults
_COMMON: List[Tuple[str, Any, Optional[str]]] = [
    ("source.center_nm", 808.0, "photon center wavelength"),
    ("source.filter_fwhm_nm", 12.0, "bandpass filter FWHM in front of each detector"),
    ("evolution.l_start", 0.0, "optical path difference grid, in center wavelengths"),
    ("evolution.l_stop", 1.0, None),
    ("evolution.l_step", 0.025, None),
    ("evolution.rho_dot", "auto", "analytic without noise plates, 5-point stencil with them"),
    ("observable.kind", "initial_state_projector", "A = |psi(0)><psi(0)|"),
    ("experiment.enabled", True, "virtual tomography run for `qspeed experiment`"),
    ("experiment.delta_l", 0.025, "central-difference step"),
    ("experiment.resamples", 10000, "Monte Carlo resamples of the counts"),
    ("experiment.master_seed", 42, None),
]

_CORRELATED: List[Tuple[str, Any, Optional[str]]] = [
    ("source.kind", "correlated", "photon pair from a 404 nm continuous-wave pump"),
    ("source.pump_fwhm_nm", 0.06, "pump spectral width"),
]

_DECORRELATED: List[Tuple[str, Any, Optional[str]]] = [
    ("source.kind", "decorrelated", "independent photon spectra"),
]

# the noise plates keep half of the two-photon x-basis coherence with this pump width
_NOISY_PAIR: List[Tuple[str, Any, Optional[str]]] = [
    ("source.kind", "correlated", "photon pair from a broadband 404 nm pump"),
    ("source.pump_fwhm_nm", 0.74, "pump spectral width seen behind the noise plates"),
]

_NOISE: List[Tuple[str, Any, Optional[str]]] = [
    ("noise.enabled", True, "quartz plate with its optic axis along |+>"),
    ("noise.axis", "x", None),
    ("noise.length_lambda", 120.0, "about one coherence length"),
]


def _preset(
    title: str,
    state: str,
    n: int,
    source: List[Tuple[str, Any, Optional[str]]],
    reference: Tuple[float, float],
    rate_hz: float = 13000.0,
    integration_s: float = 5.0,
    noise: bool = False,
) -> Dict[str, Any]:
    entries: List[Tuple[str, Any, Optional[str]]] = [
        ("initial_state.name", state, None),
        ("initial_state.n", n, None),
        *source,
        *_COMMON,
        ("noise.enabled", False, None),
    ]
    if noise:
        entries = [e for e in entries if e[0] != "noise.enabled"] + _NOISE
    entries += [
        ("experiment.rate_hz", rate_hz, "coincidence rate"),
        ("experiment.integration_s", integration_s, "integration time per setting"),
        ("scenario.reference_max_speed", reference[0], "measured maximum speed, for reference"),
        ("scenario.reference_max_speed_err", reference[1], None),
    ]
    return {"title": title, "entries": entries}


PRESETS: Dict[str, Dict[str, Any]] = {
    "plus": _preset("|+>, single photon", "plus", 1, _DECORRELATED, (3.103, 0.006)),
    "plus_plus": _preset("|++>, photon pair", "plusN", 2, _CORRELATED, (4.049, 0.012)),
    "bell": _preset(
        "|Phi+>, entangled pair",
        "bell_phi_plus",
        2,
        _CORRELATED,
        (4.981, 0.011),
        rate_hz=7200.0,
        integration_s=10.0,
    ),
    "p": _preset("|P>, single photon", "P", 1, _DECORRELATED, (2.184, 0.004)),
    "pp": _preset("|PP>, photon pair", "PN", 2, _CORRELATED, (3.296, 0.010)),
    "p_noise": _preset(
        "|P> behind a sigma_x noise plate", "P", 1, _DECORRELATED, (1.448, 0.004), noise=True
    ),
    "pp_noise": _preset(
        "|PP> behind a sigma_x noise plate", "PN", 2, _NOISY_PAIR, (1.391, 0.004), noise=True
    ),
}


def preset_names() -> List[str]:
    return list(PRESETS)


def preset_values(name: str) -> Dict[str, Any]:
    """Flat dotted-key values of a preset, including its name and output directory"""
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    values = {key: value for key, value, _ in PRESETS[name]["entries"]}
    values["scenario.name"] = name
    values["output_dir"] = f"results/{name}"
    return values


def _scalar(value: Any) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return json.dumps(value)
    return repr(value)


def render_preset(name: str) -> str:
    """Annotated scenario file for a preset, one dotted key per line"""
    values = preset_values(name)
    comments = {key: comment for key, _, comment in PRESETS[name]["entries"]}
    lines = [f"# qspeed scenario: {PRESETS[name]['title']}", ""]
    for key, value in values.items():
        line = f"{key}: {_scalar(value)}"
        if comments.get(key):
            line += f"  # {comments[key]}"
        lines.append(line)
    return "\n".join(lines) + "\n"
