"""A small feedforward inference engine and its on-disk weight format.

The engine covers the layer set needed for compact convolutional digit
classifiers: 2-D convolution (valid or same padding), max pooling, dense
layers, ReLU, flatten and a final softmax.  All arithmetic is 64-bit float,
so repeated forward passes are bit-identical across platforms.

Weight files are a text header followed by a binary payload::

    shape W H C
    normalize <variant> [mean per channel...] [std per channel...] <rounding>
    conv KH KW CIN COUT STRIDE PAD      # PAD is 'valid' or 'same'
    maxpool KH KW STRIDE
    dense IN OUT
    relu
    flatten
    softmax
    weights
    <little-endian float32 payload>

The payload holds, for each parameterized layer in declaration order, its
weights then its biases.  Convolution kernels are laid out row-major as
(out channel, in channel, kernel row, kernel column); dense weights as
(output, input).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import ImageShape, IntegerImage, RealImage
from .errors import ConfigurationError, FormatError
from .normalization import NormalizationScheme, ROUNDINGS, VARIANTS, normalize
from .oracle import ClassifierOracle, ProbabilityVector, softmax

__all__ = [
    "Conv2D",
    "MaxPool2D",
    "Dense",
    "ReLU",
    "Flatten",
    "Softmax",
    "NetworkDefinition",
    "NetworkOracle",
    "forward",
    "forward_real",
    "load_network",
    "save_network",
]


def _as_f64(arr, count: int, what: str) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float64).ravel()
    if arr.size != count:
        raise ConfigurationError(f"{what}: expected {count} values, got {arr.size}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Conv2D:
    kh: int
    kw: int
    cin: int
    cout: int
    weights: np.ndarray  # (cout, cin, kh, kw)
    biases: np.ndarray  # (cout,)
    stride: int = 1
    padding: str = "valid"

    def __post_init__(self):
        if min(self.kh, self.kw, self.cin, self.cout, self.stride) < 1:
            raise ConfigurationError("conv dimensions and stride must be positive")
        if self.padding not in ("valid", "same"):
            raise ConfigurationError(f"conv padding must be 'valid' or 'same', got {self.padding!r}")
        w = _as_f64(self.weights, self.cout * self.cin * self.kh * self.kw, "conv weights")
        object.__setattr__(self, "weights", w.reshape(self.cout, self.cin, self.kh, self.kw))
        object.__setattr__(self, "biases", _as_f64(self.biases, self.cout, "conv biases"))

    @property
    def parameter_count(self) -> int:
        return self.weights.size + self.biases.size


@dataclass(frozen=True)
class MaxPool2D:
    kh: int
    kw: int
    stride: int

    def __post_init__(self):
        if min(self.kh, self.kw, self.stride) < 1:
            raise ConfigurationError("maxpool window and stride must be positive")


@dataclass(frozen=True, eq=False)
class Dense:
    n_in: int
    n_out: int
    weights: np.ndarray  # (n_out, n_in)
    biases: np.ndarray  # (n_out,)

    def __post_init__(self):
        if self.n_in < 1 or self.n_out < 1:
            raise ConfigurationError("dense dimensions must be positive")
        w = _as_f64(self.weights, self.n_out * self.n_in, "dense weights")
        object.__setattr__(self, "weights", w.reshape(self.n_out, self.n_in))
        object.__setattr__(self, "biases", _as_f64(self.biases, self.n_out, "dense biases"))

    @property
    def parameter_count(self) -> int:
        return self.weights.size + self.biases.size


@dataclass(frozen=True)
class ReLU:
    pass


@dataclass(frozen=True)
class Flatten:
    pass


@dataclass(frozen=True)
class Softmax:
    pass


def _conv_output_size(n: int, k: int, stride: int, padding: str) -> int:
    if padding == "same":
        return -(-n // stride)
    if n < k:
        raise ConfigurationError(f"input extent {n} smaller than kernel {k} with valid padding")
    return (n - k) // stride + 1


def _trace_shapes(input_shape: ImageShape, layers) -> int:
    """Validate layer composition; returns the class count of the softmax."""
    if not layers:
        raise ConfigurationError("network has no layers")
    state = ("grid", input_shape.height, input_shape.width, input_shape.channels)
    for i, layer in enumerate(layers):
        last = i == len(layers) - 1
        where = f"layer {i + 1} ({type(layer).__name__})"
        if isinstance(layer, Softmax):
            if not last:
                raise ConfigurationError(f"{where}: softmax must be the final layer")
            if state[0] != "flat":
                raise ConfigurationError(f"{where}: softmax needs a flat input; add a flatten layer")
            if state[1] < 2:
                raise ConfigurationError(f"{where}: softmax needs at least 2 classes, got {state[1]}")
            return state[1]
        if isinstance(layer, ReLU):
            continue
        if isinstance(layer, Flatten):
            if state[0] == "grid":
                state = ("flat", state[1] * state[2] * state[3])
            continue
        if isinstance(layer, Conv2D):
            if state[0] != "grid":
                raise ConfigurationError(f"{where}: convolution needs a grid input")
            _, h, w, c = state
            if c != layer.cin:
                raise ConfigurationError(f"{where}: expects {layer.cin} input channels, got {c}")
            oh = _conv_output_size(h, layer.kh, layer.stride, layer.padding)
            ow = _conv_output_size(w, layer.kw, layer.stride, layer.padding)
            state = ("grid", oh, ow, layer.cout)
            continue
        if isinstance(layer, MaxPool2D):
            if state[0] != "grid":
                raise ConfigurationError(f"{where}: maxpool needs a grid input")
            _, h, w, c = state
            if h < layer.kh or w < layer.kw:
                raise ConfigurationError(f"{where}: window {layer.kh}x{layer.kw} larger than input {h}x{w}")
            state = ("grid", (h - layer.kh) // layer.stride + 1,
                     (w - layer.kw) // layer.stride + 1, c)
            continue
        if isinstance(layer, Dense):
            if state[0] == "grid":
                raise ConfigurationError(f"{where}: dense needs a flat input; add a flatten layer")
            if state[1] != layer.n_in:
                raise ConfigurationError(f"{where}: expects {layer.n_in} inputs, got {state[1]}")
            state = ("flat", layer.n_out)
            continue
        raise ConfigurationError(f"{where}: unknown layer type")
    raise ConfigurationError("network must end with a softmax layer")


@dataclass(frozen=True, eq=False)
class NetworkDefinition:
    """Validated layer stack plus the normalization applied before it."""

    input_shape: ImageShape
    scheme: NormalizationScheme
    layers: tuple
    class_count: int = field(init=False, default=0)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "class_count", _trace_shapes(self.input_shape, self.layers))


def _pad_same(x: np.ndarray, kh: int, kw: int, stride: int) -> np.ndarray:
    h, w = x.shape[:2]
    oh, ow = -(-h // stride), -(-w // stride)
    ph = max((oh - 1) * stride + kh - h, 0)
    pw = max((ow - 1) * stride + kw - w, 0)
    return np.pad(x, ((ph // 2, ph - ph // 2), (pw // 2, pw - pw // 2), (0, 0)))


def _run_layers(x: np.ndarray, net: NetworkDefinition) -> ProbabilityVector:
    for layer in net.layers:
        if isinstance(layer, Conv2D):
            if layer.padding == "same":
                x = _pad_same(x, layer.kh, layer.kw, layer.stride)
            windows = np.lib.stride_tricks.sliding_window_view(x, (layer.kh, layer.kw), axis=(0, 1))
            windows = windows[::layer.stride, ::layer.stride]
            # windows: (oh, ow, cin, kh, kw); kernel: (cout, cin, kh, kw)
            x = np.einsum("xyikl,oikl->xyo", windows, layer.weights) + layer.biases
        elif isinstance(layer, MaxPool2D):
            windows = np.lib.stride_tricks.sliding_window_view(x, (layer.kh, layer.kw), axis=(0, 1))
            x = windows[::layer.stride, ::layer.stride].max(axis=(3, 4))
        elif isinstance(layer, Dense):
            x = layer.weights @ x + layer.biases
        elif isinstance(layer, ReLU):
            x = np.maximum(x, 0.0)
        elif isinstance(layer, Flatten):
            x = x.ravel()
        else:  # Softmax, guaranteed last by construction
            return ProbabilityVector(softmax(x))
    raise ConfigurationError("network must end with a softmax layer")


def forward(net: NetworkDefinition, d: IntegerImage) -> ProbabilityVector:
    """Normalize the image with the attached scheme and evaluate the layers."""
    if d.shape != net.input_shape:
        raise ValueError(f"network expects shape {net.input_shape}, got {d.shape}")
    return _run_layers(normalize(d, net.scheme).grid(), net)


def forward_real(net: NetworkDefinition, v: RealImage) -> ProbabilityVector:
    """Evaluate the layers on an already-normalized continuous image."""
    if v.shape != net.input_shape:
        raise ValueError(f"network expects shape {net.input_shape}, got {v.shape}")
    return _run_layers(v.grid(), net)


class NetworkOracle(ClassifierOracle):
    """Expose a :class:`NetworkDefinition` through the oracle interface."""

    def __init__(self, net: NetworkDefinition):
        self._net = net

    @property
    def network(self) -> NetworkDefinition:
        return self._net

    def predict(self, d: IntegerImage) -> ProbabilityVector:
        return forward(self._net, d)

    def predict_real(self, v: RealImage) -> ProbabilityVector:
        return forward_real(self._net, v)

    def class_count(self) -> int:
        return self._net.class_count

    def input_shape(self) -> ImageShape:
        return self._net.input_shape


# --- weight-file reader/writer -------------------------------------------

def _parse_ints(tokens, n, line_no, what):
    if len(tokens) != n:
        raise FormatError(f"line {line_no}: {what} needs {n} fields, got {len(tokens)}")
    try:
        return [int(t) for t in tokens]
    except ValueError as e:
        raise FormatError(f"line {line_no}: {what}: {e}") from None


def _parse_normalize(tokens, channels, line_no) -> NormalizationScheme:
    if len(tokens) < 2:
        raise FormatError(f"line {line_no}: normalize needs a variant and a rounding mode")
    variant, rounding = tokens[0], tokens[-1]
    if variant not in VARIANTS:
        raise FormatError(f"line {line_no}: unknown normalization variant {variant!r}")
    if rounding not in ROUNDINGS:
        raise FormatError(f"line {line_no}: unknown rounding mode {rounding!r}")
    params = tokens[1:-1]
    need = {"unit": 0, "centered_half": 0, "centered_one": 0,
            "mean_subtract": channels, "mean_std": 2 * channels}[variant]
    if len(params) != need:
        raise FormatError(
            f"line {line_no}: normalize {variant} with {channels} channels needs "
            f"{need} numeric parameters, got {len(params)}"
        )
    try:
        vals = [float(t) for t in params]
    except ValueError as e:
        raise FormatError(f"line {line_no}: normalize parameters: {e}") from None
    mean = tuple(vals[:channels]) if need else None
    std = tuple(vals[channels:]) if variant == "mean_std" else None
    return NormalizationScheme(variant, mean, std, rounding)


def load_network(path) -> NetworkDefinition:
    """Read a weight file; raises :class:`FormatError` with the offending location."""
    with open(path, "rb") as f:
        blob = f.read()

    lines = []
    pos = 0
    while True:
        nl = blob.find(b"\n", pos)
        if nl < 0:
            raise FormatError("header not terminated by a 'weights' line")
        try:
            line = blob[pos:nl].decode("ascii").strip()
        except UnicodeDecodeError:
            raise FormatError(f"header line at byte {pos} is not ASCII") from None
        pos = nl + 1
        lines.append(line)
        if line == "weights":
            break

    payload = blob[pos:]
    header = [(i + 1, ln) for i, ln in enumerate(lines[:-1]) if ln and not ln.startswith("#")]
    if len(header) < 2:
        raise FormatError("header must declare 'shape' and 'normalize' before any layers")

    line_no, first = header[0]
    tokens = first.split()
    if tokens[0] != "shape":
        raise FormatError(f"line {line_no}: expected 'shape W H C', got {first!r}")
    w, h, c = _parse_ints(tokens[1:], 3, line_no, "shape")
    try:
        input_shape = ImageShape(w, h, c)
    except ValueError as e:
        raise FormatError(f"line {line_no}: {e}") from None

    line_no, second = header[1]
    tokens = second.split()
    if tokens[0] != "normalize":
        raise FormatError(f"line {line_no}: expected a 'normalize' line, got {second!r}")
    scheme = _parse_normalize(tokens[1:], c, line_no)

    specs = []  # (line_no, kind, args)
    for line_no, line in header[2:]:
        tokens = line.split()
        kind, args = tokens[0], tokens[1:]
        if kind == "conv":
            kh, kw, cin, cout, stride = _parse_ints(args[:5], 5, line_no, "conv")
            if len(args) != 6:
                raise FormatError(f"line {line_no}: conv needs 6 fields (KH KW CIN COUT STRIDE PAD)")
            specs.append((line_no, "conv", (kh, kw, cin, cout, stride, args[5])))
        elif kind == "maxpool":
            specs.append((line_no, "maxpool", tuple(_parse_ints(args, 3, line_no, "maxpool"))))
        elif kind == "dense":
            specs.append((line_no, "dense", tuple(_parse_ints(args, 2, line_no, "dense"))))
        elif kind in ("relu", "flatten", "softmax"):
            if args:
                raise FormatError(f"line {line_no}: {kind} takes no fields")
            specs.append((line_no, kind, ()))
        else:
            raise FormatError(f"line {line_no}: unknown layer {kind!r}")

    layers = []
    offset = 0

    def take(count: int, what: str) -> np.ndarray:
        nonlocal offset
        nbytes = 4 * count
        if offset + nbytes > len(payload):
            have = (len(payload) - offset) // 4
            raise FormatError(f"{what}: payload truncated, need {count} floats but only {have} remain")
        out = np.frombuffer(payload, dtype="<f4", count=count, offset=offset)
        offset += nbytes
        return out

    for line_no, kind, args in specs:
        where = f"line {line_no} ({kind})"
        try:
            if kind == "conv":
                kh, kw, cin, cout, stride, pad = args
                weights = take(cout * cin * kh * kw, f"{where} weights")
                biases = take(cout, f"{where} biases")
                layers.append(Conv2D(kh, kw, cin, cout, weights, biases, stride, pad))
            elif kind == "maxpool":
                layers.append(MaxPool2D(*args))
            elif kind == "dense":
                n_in, n_out = args
                weights = take(n_out * n_in, f"{where} weights")
                biases = take(n_out, f"{where} biases")
                layers.append(Dense(n_in, n_out, weights, biases))
            elif kind == "relu":
                layers.append(ReLU())
            elif kind == "flatten":
                layers.append(Flatten())
            else:
                layers.append(Softmax())
        except ConfigurationError as e:
            raise FormatError(f"{where}: {e}") from None

    if offset != len(payload):
        raise FormatError(
            f"payload has {len(payload) - offset} trailing bytes after the declared parameters"
        )
    try:
        return NetworkDefinition(input_shape, scheme, tuple(layers))
    except ConfigurationError as e:
        raise FormatError(f"layer shapes do not compose: {e}") from None


def _format_float(x: float) -> str:
    return repr(float(x))


def save_network(net: NetworkDefinition, path) -> None:
    """Write a network in the weight-file format read by :func:`load_network`."""
    lines = [f"shape {net.input_shape.width} {net.input_shape.height} {net.input_shape.channels}"]
    s = net.scheme
    parts = ["normalize", s.variant]
    if s.variant in ("mean_subtract", "mean_std"):
        parts += [_format_float(m) for m in s.mean]
    if s.variant == "mean_std":
        parts += [_format_float(v) for v in s.std]
    parts.append(s.rounding)
    lines.append(" ".join(parts))

    payload = bytearray()
    for layer in net.layers:
        if isinstance(layer, Conv2D):
            lines.append(f"conv {layer.kh} {layer.kw} {layer.cin} {layer.cout} "
                         f"{layer.stride} {layer.padding}")
            payload += layer.weights.astype("<f4").tobytes()
            payload += layer.biases.astype("<f4").tobytes()
        elif isinstance(layer, MaxPool2D):
            lines.append(f"maxpool {layer.kh} {layer.kw} {layer.stride}")
        elif isinstance(layer, Dense):
            lines.append(f"dense {layer.n_in} {layer.n_out}")
            payload += layer.weights.astype("<f4").tobytes()
            payload += layer.biases.astype("<f4").tobytes()
        elif isinstance(layer, ReLU):
            lines.append("relu")
        elif isinstance(layer, Flatten):
            lines.append("flatten")
        else:
            lines.append("softmax")
    lines.append("weights")

    with open(path, "wb") as f:
        f.write("\n".join(lines).encode("ascii") + b"\n")
        f.write(bytes(payload))
