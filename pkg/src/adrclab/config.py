"""Flat key-value config files and preset assembly.

File format: one `dotted.path = value` per line, `#` comments, blank lines
ignored.  Values are parsed as int, float, bool or bare string; multiple
whitespace-separated tokens become a list (used by search-space files).

Recognized keys:

    scenario.tf | scenario.dt | scenario.sample_dt
    scenario.reference.amplitude | .omega | .constant
    noise.mean | noise.variance | noise.seed
    event.<n>.time | event.<n>.kind | event.<n>.value
    plant.Ks Jh m g h Km Kg Jl Rm
    observer.variant omega0 a1..a5 b0 k_alpha k_beta alpha beta
    td.variant R a b c rho_td normalized
    nlsef.alpha1 alpha2 delta1 delta2 kp kd
    inlsef.k11 k12 k21 k22 mu1 mu2 alpha1 alpha2 delta

Exactly one of the nlsef/inlsef sections selects the controller.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .controller import InlsefConfig, NlsefConfig
from .differentiator import TdConfig
from .errors import ConfigError
from .observer import ObserverConfig
from .odesim import Event, NoiseSpec, Reference, Scenario
from .plant import PlantParams, slfjm_default_params


@dataclass(frozen=True)
class Preset:
    """A named scenario plus the full component configuration."""

    name: str
    scenario: Scenario
    plant: PlantParams
    observer: ObserverConfig
    controller: object  # NlsefConfig | InlsefConfig
    differentiator: TdConfig


def parse_kv(text: str) -> dict:
    """Parse flat key-value text into {path: value}."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        tokens = value.split()
        if not key or not tokens:
            raise ConfigError(f"line {lineno}: empty key or value")
        parsed = [_parse_token(tok) for tok in tokens]
        out[key] = parsed[0] if len(parsed) == 1 else parsed
    return out


def _parse_token(tok: str):
    low = tok.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(tok)
    except ValueError:
        pass
    try:
        return float(tok)
    except ValueError:
        return tok


def _section(flat: dict, prefix: str) -> dict:
    plen = len(prefix) + 1
    return {k[plen:]: v for k, v in flat.items() if k.startswith(prefix + ".")}


def build_preset(flat: dict, name: str) -> Preset:
    """Assemble a Preset from parsed flat keys."""
    known_roots = ("scenario", "noise", "event", "plant", "observer", "td",
                   "nlsef", "inlsef")
    for key in flat:
        if key.split(".", 1)[0] not in known_roots:
            raise ConfigError(f"unknown config key {key!r}")

    sc = _section(flat, "scenario")
    reference = Reference(
        amplitude=float(sc.pop("reference.amplitude", 0.0)),
        omega=float(sc.pop("reference.omega", 0.0)),
        constant=float(sc.pop("reference.constant", 0.0)),
    )
    noise_keys = _section(flat, "noise")
    noise = None
    if noise_keys:
        noise = NoiseSpec(
            mean=float(noise_keys.pop("mean", 0.0)),
            variance=float(noise_keys.pop("variance", 0.0)),
            seed=int(noise_keys.pop("seed", 0)),
        )
        _reject_unknown("noise", noise_keys)

    events = _build_events(_section(flat, "event"))
    scenario = Scenario(
        reference=reference,
        tf=float(sc.pop("tf", 20.0)),
        dt=float(sc.pop("dt", 1e-4)),
        sample_dt=float(sc.pop("sample_dt", 1e-3)),
        events=events,
        noise=noise,
    )
    _reject_unknown("scenario", sc)

    plant_keys = _section(flat, "plant")
    plant = slfjm_default_params()
    if plant_keys:
        values = {f.name: getattr(plant, f.name) for f in fields(PlantParams)}
        for key, val in plant_keys.items():
            if key not in values:
                raise ConfigError(f"unknown plant key {key!r}")
            values[key] = float(val)
        plant = PlantParams(**values)

    observer = _build_observer(_section(flat, "observer"))
    controller = _build_controller(_section(flat, "nlsef"), _section(flat, "inlsef"))
    td = _build_td(_section(flat, "td"))
    return Preset(name, scenario, plant, observer, controller, td)


def _reject_unknown(section: str, leftovers: dict):
    if leftovers:
        raise ConfigError(f"unknown {section} key(s): {sorted(leftovers)}")


def _build_events(keys: dict) -> tuple:
    groups = {}
    for key, val in keys.items():
        idx, _, field = key.partition(".")
        groups.setdefault(idx, {})[field] = val
    def index_key(idx):
        try:
            return (0, int(idx))
        except ValueError:
            return (1, idx)

    events = []
    for idx in sorted(groups, key=index_key):
        g = groups[idx]
        try:
            events.append(Event(time=float(g["time"]), kind=str(g["kind"]),
                                value=float(g["value"])))
        except KeyError as missing:
            raise ConfigError(f"event.{idx} is missing key {missing}") from None
    return tuple(events)


def _build_observer(keys: dict) -> ObserverConfig:
    if not keys:
        raise ConfigError("missing observer section")
    a = []
    i = 1
    while f"a{i}" in keys:
        a.append(float(keys.pop(f"a{i}")))
        i += 1
    if not a:
        raise ConfigError("observer needs coefficients a1..a5")
    cfg = ObserverConfig(
        omega0=float(keys.pop("omega0")),
        a=tuple(a),
        b0=float(keys.pop("b0")),
        variant=str(keys.pop("variant", "linear")),
        rho=len(a) - 1,
        k_alpha=float(keys.pop("k_alpha", 0.0)),
        k_beta=float(keys.pop("k_beta", 0.0)),
        alpha=float(keys.pop("alpha", 0.5)),
        beta=float(keys.pop("beta", 1.0)),
    )
    _reject_unknown("observer", keys)
    return cfg


def _build_controller(nlsef_keys: dict, inlsef_keys: dict):
    if bool(nlsef_keys) == bool(inlsef_keys):
        raise ConfigError("exactly one of the nlsef/inlsef sections must be present")
    if nlsef_keys:
        cfg = NlsefConfig(
            alpha1=float(nlsef_keys.pop("alpha1")),
            delta1=float(nlsef_keys.pop("delta1")),
            alpha2=float(nlsef_keys.pop("alpha2")),
            delta2=float(nlsef_keys.pop("delta2")),
            kp=float(nlsef_keys.pop("kp", 1.0)),
            kd=float(nlsef_keys.pop("kd", 1.0)),
        )
        _reject_unknown("nlsef", nlsef_keys)
        return cfg
    cfg = InlsefConfig(
        k11=float(inlsef_keys.pop("k11")), k12=float(inlsef_keys.pop("k12")),
        k21=float(inlsef_keys.pop("k21")), k22=float(inlsef_keys.pop("k22")),
        mu1=float(inlsef_keys.pop("mu1")), mu2=float(inlsef_keys.pop("mu2")),
        alpha1=float(inlsef_keys.pop("alpha1")), alpha2=float(inlsef_keys.pop("alpha2")),
        delta=float(inlsef_keys.pop("delta")),
    )
    _reject_unknown("inlsef", inlsef_keys)
    return cfg


def _build_td(keys: dict) -> TdConfig:
    if not keys:
        raise ConfigError("missing td section")
    variant = str(keys.pop("variant", "classic"))
    cfg = TdConfig(
        variant=variant,
        R=float(keys.pop("R", 100.0)),
        a=float(keys.pop("a", 0.5)),
        b=float(keys.pop("b", 1.0)),
        c=float(keys.pop("c", 1.0)),
        rho_td=float(keys.pop("rho_td", 1.0)),
        normalized=bool(keys.pop("normalized", True)),
    )
    _reject_unknown("td", keys)
    return cfg


def preset_to_text(preset: Preset) -> str:
    """Serialize a preset back to the flat config format."""
    lines = [f"# preset: {preset.name}"]
    sc = preset.scenario
    lines += [
        f"scenario.tf = {sc.tf!r}",
        f"scenario.dt = {sc.dt!r}",
        f"scenario.sample_dt = {sc.sample_dt!r}",
        f"scenario.reference.amplitude = {sc.reference.amplitude!r}",
        f"scenario.reference.omega = {sc.reference.omega!r}",
        f"scenario.reference.constant = {sc.reference.constant!r}",
    ]
    if sc.noise is not None:
        lines += [
            f"noise.mean = {sc.noise.mean!r}",
            f"noise.variance = {sc.noise.variance!r}",
            f"noise.seed = {sc.noise.seed}",
        ]
    for i, ev in enumerate(sc.events, 1):
        lines += [
            f"event.{i}.time = {ev.time!r}",
            f"event.{i}.kind = {ev.kind}",
            f"event.{i}.value = {ev.value!r}",
        ]
    for f in fields(PlantParams):
        lines.append(f"plant.{f.name} = {getattr(preset.plant, f.name)!r}")
    o = preset.observer
    lines.append(f"observer.variant = {o.variant}")
    lines.append(f"observer.omega0 = {o.omega0!r}")
    for i, ai in enumerate(o.a, 1):
        lines.append(f"observer.a{i} = {ai!r}")
    lines.append(f"observer.b0 = {o.b0!r}")
    if o.variant == "improved_nonlinear":
        lines += [
            f"observer.k_alpha = {o.k_alpha!r}",
            f"observer.k_beta = {o.k_beta!r}",
            f"observer.alpha = {o.alpha!r}",
            f"observer.beta = {o.beta!r}",
        ]
    c = preset.controller
    if isinstance(c, NlsefConfig):
        lines += [
            f"nlsef.alpha1 = {c.alpha1!r}", f"nlsef.delta1 = {c.delta1!r}",
            f"nlsef.alpha2 = {c.alpha2!r}", f"nlsef.delta2 = {c.delta2!r}",
            f"nlsef.kp = {c.kp!r}", f"nlsef.kd = {c.kd!r}",
        ]
    else:
        lines += [
            f"inlsef.k11 = {c.k11!r}", f"inlsef.k12 = {c.k12!r}",
            f"inlsef.k21 = {c.k21!r}", f"inlsef.k22 = {c.k22!r}",
            f"inlsef.mu1 = {c.mu1!r}", f"inlsef.mu2 = {c.mu2!r}",
            f"inlsef.alpha1 = {c.alpha1!r}", f"inlsef.alpha2 = {c.alpha2!r}",
            f"inlsef.delta = {c.delta!r}",
        ]
    td = preset.differentiator
    lines.append(f"td.variant = {td.variant}")
    if td.variant == "classic":
        lines.append(f"td.R = {td.R!r}")
    else:
        lines += [
            f"td.a = {td.a!r}", f"td.b = {td.b!r}", f"td.c = {td.c!r}",
            f"td.rho_td = {td.rho_td!r}",
            f"td.normalized = {'true' if td.normalized else 'false'}",
        ]
    return "\n".join(lines) + "\n"


def parse_search_space(text: str):
    """Parse a search-space file: each line `path = lower upper`."""
    from .tuner import SearchSpace

    flat = parse_kv(text)
    entries = []
    for path, bounds in flat.items():
        if not isinstance(bounds, list) or len(bounds) != 2:
            raise ConfigError(f"search-space entry {path!r} needs two bounds")
        entries.append((path, float(bounds[0]), float(bounds[1])))
    return SearchSpace(tuple(entries))
