"""Scene description, rendering pipeline, and fidelity profiles.

A scene is a declarative JSON-serializable description: a room, one
target talker, one to three interferers, a listener with a yaw
trajectory, a desired SNR and a seed. Rendering turns it into hearing
aid ear signals:

    room impulse responses  ->  Ambisonic convolution  ->  SNR mixing
    ->  transducer noise    ->  head-rotation           ->  binaural decode

The fidelity profile bundles the four knobs that separate the idealized
simulation from a measurement-like capture: Ambisonic order, interferer
directivity, microphone self-noise, and a perturbation of the room
absorption. Each knob can be toggled alone, which is what the ablation
harness does.
"""

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import signals
from .ambisonics import AmbiSignal, apply_rotation, binaural_decode, yaw_rotation
from .audio import DEFAULT_RATE, SampleBuffer, convolve_channels, mono, read_wav, rms_array, write_wav
from .errors import MixError, SceneValidationError
from .hrtf import default_hrtf_set
from .room import RoomSpec, SourceSpec, image_source_rir

PAPER_ROOM = RoomSpec(dimensions=(6.6, 5.8, 2.8), absorption=0.438)

DEFAULT_RIR_SECONDS = 0.35
ROTATION_BLOCK_SECONDS = 0.01

# Fixed microphone calibration applied to the decoded ear signals. It
# compensates the free-field spreading loss at desk-scale distances so the
# hearing-aid input sits near the reference level: quiet enough to leave
# amplification headroom, loud enough that a 40 dB loss does not push the
# band envelopes into the metric floor. Constant across scenes, so every
# rendering stage stays linear.
EAR_CALIBRATION_GAIN = 2.0

FIDELITY_NAMES = ("simulated", "measured_like")


def thread_count():
    """Worker cap for scene-parallel stages (CLARITY_BENCH_THREADS)."""
    env = os.environ.get("CLARITY_BENCH_THREADS")
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


@dataclass(frozen=True)
class FidelityProfile:
    """The four independently toggleable sim-vs-measurement knobs."""

    ambisonic_order: int = 6
    interferer_directivity: str = "omni"
    transducer_noise_db: float = None   # dB relative to target RMS; None = off
    absorption_scale: float = 1.0

    def __post_init__(self):
        if not 1 <= self.ambisonic_order <= 6:
            raise ValueError(f"ambisonic order must be 1..6, got {self.ambisonic_order}")
        if self.interferer_directivity not in ("omni", "cardioid"):
            raise ValueError(f"unknown directivity {self.interferer_directivity!r}")

    @classmethod
    def simulated(cls):
        return cls()

    @classmethod
    def measured_like(cls):
        # -25 dB is the quietest self-noise the surrogate metrics register
        # reliably; fainter levels vanish below the envelope floor.
        return cls(
            ambisonic_order=1,
            interferer_directivity="cardioid",
            transducer_noise_db=-25.0,
            absorption_scale=0.85,
        )

    @classmethod
    def from_name(cls, name):
        if name == "simulated":
            return cls.simulated()
        if name == "measured_like":
            return cls.measured_like()
        raise ValueError(f"unknown fidelity {name!r}; expected one of {FIDELITY_NAMES}")

    def with_knob(self, knob):
        """The simulated profile with a single measured-like knob enabled."""
        base = FidelityProfile.simulated()
        measured = FidelityProfile.measured_like()
        if knob not in _KNOB_FIELDS:
            raise ValueError(f"unknown knob {knob!r}; expected one of {sorted(_KNOB_FIELDS)}")
        field_name = _KNOB_FIELDS[knob]
        return replace(base, **{field_name: getattr(measured, field_name)})


_KNOB_FIELDS = {
    "order": "ambisonic_order",
    "directivity": "interferer_directivity",
    "transducer_noise": "transducer_noise_db",
    "absorption": "absorption_scale",
}


@dataclass(frozen=True)
class RotationTrajectory:
    """Piecewise-linear listener yaw over time; held flat past the end."""

    breakpoints: tuple  # ((time_s, yaw_rad), ...)

    def __post_init__(self):
        pts = tuple((float(t), float(y)) for t, y in self.breakpoints)
        if not pts:
            raise ValueError("trajectory needs at least one breakpoint")
        if pts[0][0] != 0.0:
            raise ValueError("first trajectory breakpoint must be at t=0")
        times = [t for t, _ in pts]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("trajectory times must be strictly increasing")
        object.__setattr__(self, "breakpoints", pts)

    def yaw_at(self, times):
        t = np.asarray(times, dtype=np.float64)
        knots = np.array([p[0] for p in self.breakpoints])
        yaws = np.array([p[1] for p in self.breakpoints])
        return np.interp(t, knots, yaws)


@dataclass(frozen=True)
class SourceSignal:
    """Dry signal for a talker/interferer: a WAV file or a seeded synth."""

    kind: str            # speech | noise | music
    duration_s: float = None
    synth_seed: int = None
    file: str = None

    def resolve(self, rate):
        if self.file is not None:
            return read_wav(self.file, expected_rate=rate).channel(0)
        if self.duration_s is None or self.synth_seed is None:
            raise ValueError("synthetic sources need duration_s and synth_seed")
        return signals.source_signal(self.kind, self.duration_s, self.synth_seed, rate=rate)


@dataclass(frozen=True)
class TargetSpec:
    position: tuple
    source: SourceSignal
    onset_s: float = 0.0


@dataclass(frozen=True)
class InterfererSpec:
    kind: str
    position: tuple
    source: SourceSignal
    onset_s: float = 0.0
    directivity: str = "omni"


@dataclass(frozen=True)
class ListenerSpec:
    position: tuple
    trajectory: RotationTrajectory


@dataclass(frozen=True)
class SceneSpec:
    room: RoomSpec
    target: TargetSpec
    interferers: tuple
    listener: ListenerSpec
    snr_db: float = None
    fidelity: str = "simulated"
    seed: int = 0

    def __post_init__(self):
        problems = validate_scene_dict(scene_to_dict(self, validate=False))
        if problems:
            raise SceneValidationError(problems)


def validate_scene_dict(payload):
    """Collect every schema violation in a scene dictionary."""
    problems = []

    room = payload.get("room")
    if not isinstance(room, dict):
        problems.append("room: missing or not an object")
        room = {}
    dims = room.get("dimensions")
    if not (isinstance(dims, (list, tuple)) and len(dims) == 3 and all(
            isinstance(v, (int, float)) and v > 0 for v in dims)):
        problems.append("room.dimensions: need three positive numbers")
        dims = None
    absorption = room.get("absorption")
    if not (isinstance(absorption, (int, float)) and 0 < absorption <= 1):
        problems.append("room.absorption: must lie in (0, 1]")

    def check_position(path, pos):
        if not (isinstance(pos, (list, tuple)) and len(pos) == 3 and all(
                isinstance(v, (int, float)) for v in pos)):
            problems.append(f"{path}: need three coordinates")
            return
        if dims is not None and not all(0 < p < d for p, d in zip(pos, dims)):
            problems.append(f"{path}: position {list(pos)} outside room bounds {list(dims)}")

    target = payload.get("target")
    if not isinstance(target, dict):
        problems.append("target: missing or not an object")
    else:
        check_position("target.position", target.get("position"))
        if not isinstance(target.get("source"), dict):
            problems.append("target.source: missing source description")

    interferers = payload.get("interferers")
    if not isinstance(interferers, list) or not 1 <= len(interferers) <= 3:
        problems.append(
            "interferers: need between 1 and 3, got "
            f"{len(interferers) if isinstance(interferers, list) else 'none'}"
        )
        interferers = interferers if isinstance(interferers, list) else []
    for i, interferer in enumerate(interferers):
        if not isinstance(interferer, dict):
            problems.append(f"interferers[{i}]: not an object")
            continue
        if interferer.get("kind") not in ("speech", "noise", "music"):
            problems.append(f"interferers[{i}].kind: must be speech, noise or music")
        check_position(f"interferers[{i}].position", interferer.get("position"))

    listener = payload.get("listener")
    if not isinstance(listener, dict):
        problems.append("listener: missing or not an object")
    else:
        check_position("listener.position", listener.get("position"))
        traj = listener.get("trajectory")
        if not (isinstance(traj, list) and traj):
            problems.append("listener.trajectory: need a non-empty breakpoint list")
        else:
            times = [p[0] for p in traj if isinstance(p, (list, tuple)) and len(p) == 2]
            if len(times) != len(traj):
                problems.append("listener.trajectory: breakpoints must be [time, yaw] pairs")
            elif times[0] != 0:
                problems.append("listener.trajectory: first breakpoint must be at t=0")
            elif any(b <= a for a, b in zip(times, times[1:])):
                problems.append("listener.trajectory: times must be strictly increasing")

    snr = payload.get("snr_db")
    if snr is not None and not isinstance(snr, (int, float)):
        problems.append("snr_db: must be a number or null")
    if payload.get("fidelity") not in FIDELITY_NAMES:
        problems.append(f"fidelity: must be one of {FIDELITY_NAMES}")
    if not isinstance(payload.get("seed"), int):
        problems.append("seed: must be an integer")
    return problems


def _source_signal_to_dict(src):
    out = {"kind": src.kind}
    if src.file is not None:
        out["file"] = src.file
    if src.duration_s is not None:
        out["duration_s"] = src.duration_s
    if src.synth_seed is not None:
        out["synth_seed"] = src.synth_seed
    return out


def _source_signal_from_dict(kind, payload):
    return SourceSignal(
        kind=payload.get("kind", kind),
        duration_s=payload.get("duration_s"),
        synth_seed=payload.get("synth_seed"),
        file=payload.get("file"),
    )


def scene_to_dict(scene, validate=True):
    payload = {
        "room": {
            "dimensions": list(scene.room.dimensions),
            "absorption": scene.room.absorption,
            "speed_of_sound": scene.room.speed_of_sound,
        },
        "target": {
            "position": list(scene.target.position),
            "source": _source_signal_to_dict(scene.target.source),
            "onset_s": scene.target.onset_s,
        },
        "interferers": [
            {
                "kind": i.kind,
                "position": list(i.position),
                "source": _source_signal_to_dict(i.source),
                "onset_s": i.onset_s,
                "directivity": i.directivity,
            }
            for i in scene.interferers
        ],
        "listener": {
            "position": list(scene.listener.position),
            "trajectory": [[t, y] for t, y in scene.listener.trajectory.breakpoints],
        },
        "snr_db": scene.snr_db,
        "fidelity": scene.fidelity,
        "seed": scene.seed,
    }
    if validate:
        problems = validate_scene_dict(payload)
        if problems:
            raise SceneValidationError(problems)
    return payload


def scene_from_dict(payload):
    problems = validate_scene_dict(payload)
    if problems:
        raise SceneValidationError(problems)
    room = RoomSpec(
        dimensions=tuple(payload["room"]["dimensions"]),
        absorption=payload["room"]["absorption"],
        speed_of_sound=payload["room"].get("speed_of_sound", 343.0),
    )
    target = TargetSpec(
        position=tuple(payload["target"]["position"]),
        source=_source_signal_from_dict("speech", payload["target"]["source"]),
        onset_s=payload["target"].get("onset_s", 0.0),
    )
    interferers = tuple(
        InterfererSpec(
            kind=i["kind"],
            position=tuple(i["position"]),
            source=_source_signal_from_dict(i["kind"], i.get("source", {})),
            onset_s=i.get("onset_s", 0.0),
            directivity=i.get("directivity", "omni"),
        )
        for i in payload["interferers"]
    )
    listener = ListenerSpec(
        position=tuple(payload["listener"]["position"]),
        trajectory=RotationTrajectory(tuple((t, y) for t, y in payload["listener"]["trajectory"])),
    )
    return SceneSpec(
        room=room,
        target=target,
        interferers=interferers,
        listener=listener,
        snr_db=payload["snr_db"],
        fidelity=payload["fidelity"],
        seed=payload["seed"],
    )


def load_scene(path):
    """Parse and validate a scene JSON file."""
    with open(path, encoding="utf-8") as fp:
        payload = json.load(fp)
    return scene_from_dict(payload)


def save_scene(scene, path):
    with open(path, "w", encoding="utf-8") as fp:
        json.dump(scene_to_dict(scene), fp, indent=2, sort_keys=True)


def mix_at_snr(target, interferers, snr_db, active_range):
    """Scale the summed interferer field to hit an SNR against the target.

    The SNR is defined on the omnidirectional (W) channel over the
    target-active frame range, before any decoding. One scalar gain is
    applied to the interferer sum; the return value is target + gain*sum.
    """
    if not interferers:
        raise MixError("no interferer fields to mix")
    for f in interferers:
        if f.order != target.order or f.rate != target.rate:
            raise ValueError("interferer fields must match the target order and rate")
    frames = max(target.frames, max(f.frames for f in interferers))
    total = np.zeros((target.channels, frames))
    for f in interferers:
        total[:, : f.frames] += f.data
    start, stop = active_range
    start = max(0, int(start))
    stop = min(frames, int(stop))
    if stop <= start:
        raise ValueError("empty target-active range")
    target_rms = rms_array(target.w[start : min(stop, target.frames)])
    interferer_rms = rms_array(total[0, start:stop])
    if interferer_rms == 0.0:
        raise MixError("interferer sum is silent over the target-active range")
    if target_rms == 0.0:
        raise MixError("target is silent over the target-active range")
    gain = target_rms / interferer_rms * 10.0 ** (-snr_db / 20.0)
    mixed = total * gain
    mixed[:, : target.frames] += target.data
    return AmbiSignal(mixed, target.order, target.rate)


def apply_trajectory(field, trajectory, block_s=ROTATION_BLOCK_SECONDS):
    """Rotate a field through a time-varying listener yaw.

    Processing runs in 50%-overlapped blocks of 2*block_s with triangular
    crossfade windows (an exact partition of unity). Each block is
    rotated by the negated yaw at its centre time: a listener turning by
    +theta sees the field rotate by -theta.
    """
    hop = int(round(block_s * field.rate))
    if hop < 1:
        raise ValueError("block too short for this sample rate")
    frames = field.frames
    window = np.empty(2 * hop)
    ramp = (np.arange(hop) + 0.5) / hop
    window[:hop] = ramp
    window[hop:] = ramp[::-1]

    out = np.zeros_like(field.data)
    weight = np.zeros(frames)
    cache = {}
    start = -hop
    while start < frames:
        stop = min(start + 2 * hop, frames)
        lo = max(start, 0)
        center_t = (start + hop) / field.rate
        yaw = float(trajectory.yaw_at(center_t))
        rot = cache.get(yaw)
        if rot is None:
            rot = yaw_rotation(field.order, -yaw)
            cache[yaw] = rot
        seg = rot.matrix @ field.data[:, lo:stop]
        w = window[lo - start : stop - start]
        out[:, lo:stop] += seg * w
        weight[lo:stop] += w
        start += hop
    out /= np.maximum(weight, 1e-12)
    return AmbiSignal(out, field.order, field.rate)


def add_transducer_noise(field, level_db, seed, reference_rms):
    """Add independent microphone self-noise to every channel.

    The noise starts at sample 0 regardless of source onsets. Its
    per-channel RMS sits level_db below (or above) reference_rms, which
    callers take from the target's W channel. level_db None disables.
    """
    if level_db is None:
        return field
    rng = np.random.default_rng(seed)
    sigma = float(reference_rms) * 10.0 ** (level_db / 20.0)
    noise = rng.standard_normal(field.data.shape) * sigma
    return AmbiSignal(field.data + noise, field.order, field.rate)


def default_trajectory(target_azimuth, seed, onset_s=0.0):
    """Seeded head turn toward the talker.

    Starts offset by 15..30 degrees to either side, begins turning up to
    0.6 s before the target onset, and settles within 10 degrees of the
    target azimuth after 0.2..0.4 s.
    """
    rng = np.random.default_rng(seed)
    offset = np.radians(rng.uniform(15.0, 30.0)) * rng.choice([-1.0, 1.0])
    initial = target_azimuth + offset
    start = onset_s - rng.uniform(0.0, 0.6)
    duration = rng.uniform(0.2, 0.4)
    final = target_azimuth + np.radians(rng.uniform(-10.0, 10.0))
    if start <= 1e-9:
        return RotationTrajectory(((0.0, initial), (max(duration, 1e-3), final)))
    return RotationTrajectory(
        ((0.0, initial), (start, initial), (start + duration, final))
    )


@dataclass(frozen=True)
class RenderResult:
    ears: SampleBuffer
    reference: SampleBuffer
    record: dict
    components: dict = None


def _scene_child_seeds(scene_seed):
    """Deterministic per-purpose seeds: target, 3 interferers, noise."""
    seq = np.random.SeedSequence(scene_seed)
    children = seq.spawn(5)
    return [int(c.generate_state(1)[0]) for c in children]


def render_scene(scene, hrtfs=None, profile=None, rate=DEFAULT_RATE,
                 rir_seconds=DEFAULT_RIR_SECONDS, keep_components=False,
                 ear_gain=EAR_CALIBRATION_GAIN):
    """Render a scene to hearing-aid ear signals plus the scoring reference.

    Deterministic in (scene, profile). The reference is the dry target
    utterance RMS-normalized to -26 dBFS.
    """
    profile = profile or FidelityProfile.from_name(scene.fidelity)
    hrtfs = hrtfs or default_hrtf_set(rate=rate)
    listener = np.asarray(scene.listener.position)

    absorption = min(1.0, scene.room.absorption * profile.absorption_scale)
    room = RoomSpec(scene.room.dimensions, absorption, scene.room.speed_of_sound)
    order = profile.ambisonic_order

    child_seeds = _scene_child_seeds(scene.seed)

    def wet_field(position, dry, directivity, aim):
        src = SourceSpec(tuple(position), directivity, aim)
        rir = image_source_rir(room, src, listener, order, rir_seconds, rate=rate)
        return convolve_channels(rir.signal.data, dry)

    target_source = scene.target.source
    if target_source.synth_seed is None and target_source.file is None:
        target_source = replace(target_source, synth_seed=child_seeds[0])
    target_dry = target_source.resolve(rate)
    target_wet = wet_field(scene.target.position, target_dry, "omni", None)

    interferer_wets = []
    for idx, interferer in enumerate(scene.interferers):
        source = interferer.source
        if source.synth_seed is None and source.file is None:
            source = replace(source, synth_seed=child_seeds[1 + idx])
        dry = source.resolve(rate)
        aim = None
        if profile.interferer_directivity == "cardioid":
            aim = listener - np.asarray(interferer.position)
        interferer_wets.append(
            (interferer.onset_s, wet_field(interferer.position, dry,
                                           profile.interferer_directivity, aim))
        )

    target_onset = int(round(scene.target.onset_s * rate))
    ends = [target_onset + target_wet.shape[1]]
    for onset_s, wet in interferer_wets:
        ends.append(int(round(onset_s * rate)) + wet.shape[1])
    frames = max(ends)
    k = target_wet.shape[0]

    target_field = np.zeros((k, frames))
    target_field[:, target_onset : target_onset + target_wet.shape[1]] = target_wet
    target_field = AmbiSignal(target_field, order, rate)

    interferer_fields = []
    for onset_s, wet in interferer_wets:
        onset = int(round(onset_s * rate))
        buf = np.zeros((k, frames))
        buf[:, onset : onset + wet.shape[1]] = wet
        interferer_fields.append(AmbiSignal(buf, order, rate))

    active = (target_onset, target_onset + target_wet.shape[1])
    if scene.snr_db is None:
        mixed = target_field.data + sum(f.data for f in interferer_fields)
        mixed = AmbiSignal(mixed, order, rate)
        interferer_gain = 1.0
    else:
        mixed = mix_at_snr(target_field, interferer_fields, scene.snr_db, active)
        # bookkeeping: recover the gain for the manifest record
        target_rms = rms_array(target_field.w[active[0] : active[1]])
        total_w = sum(f.data[0] for f in interferer_fields)
        interferer_gain = (
            target_rms / rms_array(total_w[active[0] : active[1]])
            * 10.0 ** (-scene.snr_db / 20.0)
        )

    target_w_rms = rms_array(target_field.w[active[0] : active[1]])
    noisy = add_transducer_noise(mixed, profile.transducer_noise_db,
                                 child_seeds[4], target_w_rms)
    rotated = apply_trajectory(noisy, scene.listener.trajectory)
    decoded = binaural_decode(rotated, hrtfs)
    ears = SampleBuffer(decoded.data * ear_gain, rate)

    reference_rms = rms_array(target_dry)
    reference_level = 10.0 ** (-26.0 / 20.0)
    reference_gain = (reference_level / reference_rms) if reference_rms > 0 else 1.0
    reference = mono(target_dry * reference_gain, rate)

    record = {
        "seed": scene.seed,
        "fidelity": scene.fidelity,
        "snr_db": scene.snr_db,
        "profile": {
            "ambisonic_order": profile.ambisonic_order,
            "interferer_directivity": profile.interferer_directivity,
            "transducer_noise_db": profile.transducer_noise_db,
            "absorption_scale": profile.absorption_scale,
        },
        "duration_s": frames / rate,
        "interferer_gain": float(interferer_gain),
        "ear_gain": float(ear_gain),
        "target_onset_s": scene.target.onset_s,
    }

    components = None
    if keep_components:
        def decode_path(field):
            out = binaural_decode(apply_trajectory(field, scene.listener.trajectory), hrtfs)
            return SampleBuffer(out.data * ear_gain, rate)

        scaled = [AmbiSignal(f.data * interferer_gain, order, rate) for f in interferer_fields]
        components = {
            "target_ears": decode_path(target_field),
            "interferer_ears": decode_path(
                AmbiSignal(sum(f.data for f in scaled), order, rate)
            ),
            "noise_ears": decode_path(
                AmbiSignal(noisy.data - mixed.data, order, rate)
            ),
        }
    return RenderResult(ears=ears, reference=reference, record=record, components=components)


def _draw_positions(rng, room, count, margin=0.5, spacing=1.0):
    """Rejection-sample positions >= margin from walls, >= spacing apart."""
    dims = np.asarray(room.dimensions)
    placed = []
    attempts = 0
    while len(placed) < count:
        attempts += 1
        if attempts > 10000:
            raise RuntimeError("could not place sources with the spacing constraints")
        candidate = rng.uniform([margin, margin, 1.2], [dims[0] - margin, dims[1] - margin, min(1.8, dims[2] - margin)])
        if all(np.linalg.norm(candidate - p) >= spacing for p in placed):
            placed.append(candidate)
    return placed


def _build_scene(index, rng_seed, room, fidelity, rate):
    """Draw one randomized scene; deterministic in rng_seed."""
    rng = np.random.default_rng(rng_seed)
    n_interferers = int(rng.integers(1, 4))
    positions = _draw_positions(rng, room, 2 + n_interferers)
    listener_pos, target_pos = positions[0], positions[1]

    target_onset = float(rng.uniform(0.6, 1.0))
    target_duration = 1.8
    scene_end = target_onset + target_duration + 0.2

    target_azimuth = float(np.arctan2(
        target_pos[1] - listener_pos[1], target_pos[0] - listener_pos[0]
    ))
    trajectory = default_trajectory(
        target_azimuth, int(rng.integers(0, 2**31)), onset_s=target_onset
    )

    kinds = ["speech", "noise", "music"]
    interferers = []
    for j in range(n_interferers):
        kind = kinds[int(rng.integers(0, len(kinds)))]
        onset = float(rng.uniform(0.0, 0.3))
        interferers.append(
            InterfererSpec(
                kind=kind,
                position=tuple(positions[2 + j]),
                source=SourceSignal(
                    kind=kind,
                    duration_s=round(scene_end - onset, 3),
                    synth_seed=int(rng.integers(0, 2**31)),
                ),
                onset_s=onset,
                directivity="omni",
            )
        )

    return SceneSpec(
        room=room,
        target=TargetSpec(
            position=tuple(target_pos),
            source=SourceSignal(kind="speech", duration_s=target_duration,
                                synth_seed=int(rng.integers(0, 2**31))),
            onset_s=target_onset,
        ),
        interferers=tuple(interferers),
        listener=ListenerSpec(position=tuple(listener_pos), trajectory=trajectory),
        snr_db=float(np.round(rng.uniform(-6.0, 6.0), 3)),
        fidelity=fidelity,
        seed=int(rng.integers(0, 2**31)),
    )


def draw_scenes(count, seed, room=None, fidelity="simulated", rate=DEFAULT_RATE):
    """Draw a seeded batch of randomized scenes (no rendering)."""
    room = room or PAPER_ROOM
    children = np.random.SeedSequence(seed).spawn(count)
    return [
        _build_scene(i, int(c.generate_state(1)[0]), room, fidelity, rate)
        for i, c in enumerate(children)
    ]


def generate_dataset(out_dir, count, seed, fidelity="simulated", room=None,
                     rate=DEFAULT_RATE, hrtfs=None):
    """Render a seeded batch of scenes to WAV/JSON files plus a manifest.

    Returns the manifest path. Re-running with identical arguments
    reproduces every byte, regardless of the worker count.
    """
    from . import __version__

    os.makedirs(out_dir, exist_ok=True)
    scenes = draw_scenes(count, seed, room=room, fidelity=fidelity, rate=rate)
    profile = FidelityProfile.from_name(fidelity)
    hrtfs = hrtfs or default_hrtf_set(rate=rate)

    def render_one(item):
        index, scene = item
        scene_id = f"S{index:04d}"
        result = render_scene(scene, hrtfs=hrtfs, profile=profile, rate=rate)
        mix_path = os.path.join(out_dir, f"{scene_id}_mix.wav")
        ref_path = os.path.join(out_dir, f"{scene_id}_ref.wav")
        scene_path = os.path.join(out_dir, f"{scene_id}_scene.json")
        write_wav(mix_path, result.ears)
        write_wav(ref_path, result.reference)
        save_scene(scene, scene_path)
        entry = {
            "id": scene_id,
            "mix": f"{scene_id}_mix.wav",
            "reference": f"{scene_id}_ref.wav",
            "scene": f"{scene_id}_scene.json",
        }
        entry.update(result.record)
        return index, entry

    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        entries = list(pool.map(render_one, enumerate(scenes)))
    entries = [e for _, e in sorted(entries, key=lambda pair: pair[0])]

    manifest = {
        "version": __version__,
        "seed": seed,
        "count": count,
        "fidelity": fidelity,
        "rate": rate,
        "scenes": entries,
    }
    manifest_path = os.path.join(out_dir, "manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fp:
        json.dump(manifest, fp, indent=2, sort_keys=True)
    return manifest_path
