"""CNN inference workloads: CONV layer shapes, built-in ResNet generators, file I/O.

Only convolutional layers are represented. Feature maps are square, kernels are
square, and the output side follows the same-padding convention
``out = ceil(I_H / S)`` used by standard ResNets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

ALLOWED_WEIGHT_BITS = frozenset({1, 2, 4, 8})
LAYER_TAGS = ("stem", "block", "projection")


class WorkloadError(ValueError):
    """Raised for malformed workload files or invalid layer definitions."""


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


@dataclass(frozen=True)
class ConvLayerSpec:
    """One convolutional layer: shape, stride, and operand word-lengths.

    ``wq`` is either a single weight word-length or a tuple of
    ``(channels, bits)`` groups covering the output channels contiguously
    (channel-wise precision).  Activations are ``n_bits`` wide everywhere.
    """

    name: str
    ih: int          # input feature-map side (square)
    iw: int          # input channel count
    od: int          # output channel count
    k: int           # kernel side (square)
    s: int = 1       # stride
    n_bits: int = 8  # activation word-length
    wq: int | tuple[tuple[int, int], ...] = 8
    tag: str = "block"

    def __post_init__(self):
        for fname in ("ih", "iw", "od", "k", "s", "n_bits"):
            v = getattr(self, fname)
            if not isinstance(v, int) or v < 1:
                raise WorkloadError(f"layer {self.name!r}: field {fname!r} must be a positive integer, got {v!r}")
        if self.tag not in LAYER_TAGS:
            raise WorkloadError(f"layer {self.name!r}: field 'tag' must be one of {LAYER_TAGS}, got {self.tag!r}")
        object.__setattr__(self, "wq", self._normalize_wq(self.wq))
        for _, bits in self.wq_groups:
            if bits not in ALLOWED_WEIGHT_BITS:
                raise WorkloadError(f"layer {self.name!r}: unsupported word-length wq={bits} "
                                    f"(allowed: {sorted(ALLOWED_WEIGHT_BITS)})")
            if bits > self.n_bits:
                raise WorkloadError(f"layer {self.name!r}: wq={bits} exceeds activation width n_bits={self.n_bits}")
        if sum(ch for ch, _ in self.wq_groups) != self.od:
            raise WorkloadError(f"layer {self.name!r}: field 'wq' group sizes sum to "
                                f"{sum(ch for ch, _ in self.wq_groups)}, expected od={self.od}")

    def _normalize_wq(self, wq):
        if isinstance(wq, int):
            return wq
        groups = []
        for ch, bits in wq:
            if not (isinstance(ch, int) and ch >= 1 and isinstance(bits, int)):
                raise WorkloadError(f"layer {self.name!r}: bad precision group ({ch!r}, {bits!r})")
            # merge adjacent groups of equal precision
            if groups and groups[-1][1] == bits:
                groups[-1] = (groups[-1][0] + ch, bits)
            else:
                groups.append((ch, bits))
        if len(groups) == 1:
            return groups[0][1]
        return tuple(groups)

    @property
    def wq_groups(self) -> tuple[tuple[int, int], ...]:
        """Output-channel precision groups as ((channels, bits), ...)."""
        if isinstance(self.wq, int):
            return ((self.od, self.wq),)
        return self.wq

    @property
    def uniform_wq(self) -> int | None:
        return self.wq if isinstance(self.wq, int) else None

    @property
    def out_side(self) -> int:
        return _ceil_div(self.ih, self.s)

    @property
    def macs(self) -> int:
        return layer_macs(self)

    @property
    def weight_count(self) -> int:
        return self.k * self.k * self.iw * self.od

    @property
    def weight_bits(self) -> int:
        per_ch = self.k * self.k * self.iw
        return sum(per_ch * ch * bits for ch, bits in self.wq_groups)


def layer_macs(layer: ConvLayerSpec) -> int:
    """Total multiply-accumulate count of one layer.

    Same-padding output side ceil(I_H/S), so the count is
    ceil(I_H/S)^2 * K^2 * I_W * O_D.
    """
    out = layer.out_side
    return out * out * layer.k * layer.k * layer.iw * layer.od


@dataclass(frozen=True)
class NetworkSpec:
    """An ordered set of CONV layers forming one inference workload."""

    name: str
    layers: tuple[ConvLayerSpec, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise WorkloadError(f"network {self.name!r}: must contain at least one layer")
        names = [l.name for l in self.layers]
        if len(set(names)) != len(names):
            raise WorkloadError(f"network {self.name!r}: duplicate layer names")

    @property
    def first_layer(self) -> ConvLayerSpec:
        return self.layers[0]

    @property
    def last_layer(self) -> ConvLayerSpec:
        return self.layers[-1]

    @property
    def total_macs(self) -> int:
        return sum(l.macs for l in self.layers)

    @property
    def total_weight_bits(self) -> int:
        return sum(l.weight_bits for l in self.layers)

    def macs_by_tag(self) -> dict[str, int]:
        out = {t: 0 for t in LAYER_TAGS}
        for l in self.layers:
            out[l.tag] += l.macs
        return out

    def with_inner_wq(self, wq_inner: int) -> "NetworkSpec":
        """Copy of the network with all non-stem layers set to ``wq_inner``."""
        layers = tuple(
            l if l.tag == "stem" else ConvLayerSpec(l.name, l.ih, l.iw, l.od, l.k, l.s, l.n_bits, wq_inner, l.tag)
            for l in self.layers
        )
        return NetworkSpec(self.name.split("-wq")[0] + f"-wq{wq_inner}", layers)


# ---------------------------------------------------------------------------
# built-in ResNet generators (224x224 input, CONV layers only, FC omitted)
# ---------------------------------------------------------------------------

_RESNET_STAGES = {
    # variant -> (block kind, blocks per stage)
    18: ("basic", (2, 2, 2, 2)),
    50: ("bottleneck", (3, 4, 6, 3)),
    152: ("bottleneck", (3, 8, 36, 3)),
}


def resnet(variant: int, wq_inner: int = 8) -> NetworkSpec:
    """Standard ResNet CONV workload for 224x224 input.

    The stem convolution stays at 8 bit weights; all other convolutions
    (including 1x1 bottleneck and downsample-projection layers) carry
    ``wq_inner``.  The fully-connected classifier is omitted.  Layers are
    tagged ``stem`` / ``block`` / ``projection`` so accounting policies can
    include or exclude them.
    """
    if variant not in _RESNET_STAGES:
        raise WorkloadError(f"unknown ResNet variant {variant!r} (supported: {sorted(_RESNET_STAGES)})")
    if wq_inner not in ALLOWED_WEIGHT_BITS:
        raise WorkloadError(f"unsupported word-length wq={wq_inner} (allowed: {sorted(ALLOWED_WEIGHT_BITS)})")

    kind, stage_blocks = _RESNET_STAGES[variant]
    layers = [ConvLayerSpec("conv1", 224, 3, 64, 7, 2, 8, 8, "stem")]
    ih = 56  # after the stem (224 -> 112) and the 3x3/2 max pool (112 -> 56)
    cin = 64
    for stage, nblocks in enumerate(stage_blocks):
        width = 64 * (2 ** stage)
        cout = width if kind == "basic" else width * 4
        for b in range(nblocks):
            stride = 2 if (stage > 0 and b == 0) else 1
            pre = f"layer{stage + 1}.{b}"
            if kind == "basic":
                layers.append(ConvLayerSpec(f"{pre}.conv1", ih, cin, width, 3, stride, 8, wq_inner))
                layers.append(ConvLayerSpec(f"{pre}.conv2", _ceil_div(ih, stride), width, width, 3, 1, 8, wq_inner))
            else:
                # stride lives on the 3x3 (torchvision layout)
                layers.append(ConvLayerSpec(f"{pre}.conv1", ih, cin, width, 1, 1, 8, wq_inner))
                layers.append(ConvLayerSpec(f"{pre}.conv2", ih, width, width, 3, stride, 8, wq_inner))
                layers.append(ConvLayerSpec(f"{pre}.conv3", _ceil_div(ih, stride), width, cout, 1, 1, 8, wq_inner))
            if b == 0 and (stride != 1 or cin != cout):
                layers.append(ConvLayerSpec(f"{pre}.downsample", ih, cin, cout, 1, stride, 8, wq_inner,
                                            "projection"))
            ih = _ceil_div(ih, stride)
            cin = cout
    return NetworkSpec(f"resnet{variant}-wq{wq_inner}", tuple(layers))


# ---------------------------------------------------------------------------
# workload file format (strict JSON)
# ---------------------------------------------------------------------------

_LAYER_FIELDS = {"name", "ih", "iw", "od", "k", "s", "n_bits", "wq", "tag"}


def parse_workload(text: str) -> NetworkSpec:
    """Parse a workload file (one JSON document) into a validated NetworkSpec.

    Unknown fields are an error.  Syntax errors report the line number;
    invariant violations name the layer and field.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise WorkloadError(f"workload syntax error at line {e.lineno}, column {e.colno}: {e.msg}") from e
    if not isinstance(doc, dict):
        raise WorkloadError("workload file must be a JSON object")
    unknown = set(doc) - {"name", "layers"}
    if unknown:
        raise WorkloadError(f"unknown top-level fields: {sorted(unknown)}")
    if "name" not in doc or "layers" not in doc:
        raise WorkloadError("workload file requires 'name' and 'layers'")
    if not isinstance(doc["layers"], list):
        raise WorkloadError("field 'layers' must be an array")

    layers = []
    for i, obj in enumerate(doc["layers"]):
        if not isinstance(obj, dict):
            raise WorkloadError(f"layer #{i}: must be an object")
        unknown = set(obj) - _LAYER_FIELDS
        if unknown:
            raise WorkloadError(f"layer #{i} ({obj.get('name', '?')}): unknown fields {sorted(unknown)}")
        missing = {"name", "ih", "iw", "od", "k", "s"} - set(obj)
        if missing:
            raise WorkloadError(f"layer #{i} ({obj.get('name', '?')}): missing fields {sorted(missing)}")
        wq = obj.get("wq", 8)
        if isinstance(wq, list):
            try:
                wq = tuple((g["channels"], g["bits"]) for g in wq)
            except (TypeError, KeyError) as e:
                raise WorkloadError(f"layer #{i} ({obj['name']}): field 'wq' groups need "
                                    f"'channels' and 'bits'") from e
        layers.append(ConvLayerSpec(
            name=obj["name"], ih=obj["ih"], iw=obj["iw"], od=obj["od"], k=obj["k"], s=obj["s"],
            n_bits=obj.get("n_bits", 8), wq=wq, tag=obj.get("tag", "block"),
        ))
    return NetworkSpec(doc["name"], tuple(layers))


def serialize_workload(net: NetworkSpec) -> str:
    """Inverse of parse_workload; round-trips all declared fields."""
    layers = []
    for l in net.layers:
        obj = {"name": l.name, "ih": l.ih, "iw": l.iw, "od": l.od, "k": l.k, "s": l.s,
               "n_bits": l.n_bits, "tag": l.tag}
        if isinstance(l.wq, int):
            obj["wq"] = l.wq
        else:
            obj["wq"] = [{"channels": ch, "bits": b} for ch, b in l.wq]
        layers.append(obj)
    return json.dumps({"name": net.name, "layers": layers}, indent=2)
