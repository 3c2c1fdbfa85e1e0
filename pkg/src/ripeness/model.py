"""
The CIDIS network: construction, forward/backward composition, checkpoints and transfer surgery.

The network is three blocks of ``conv -> relu -> conv -> relu -> maxpool`` followed by a
fully-connected head ``flatten -> dense -> relu -> dropout -> dense`` and a softmax cross-entropy
loss head. With the default geometry (224x224x3 input, widths 32/64/128, 50 hidden units) it holds
5,304,862 parameters.

Checkpoint layout (little-endian)::

    b"RIPECKPT" | u32 format version | u32 header length | JSON header
    then, for every tensor named in the header: u64 byte length | tensor encoding
"""

import copy
import hashlib
import json
import struct
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Set, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .common.rng import Rng
from .common.tensor import deserialize, payload_nbytes, serialize
from .common.types import NUM_CLASSES, Mode
from .dto.checkpoint import CheckpointHeader, LayerManifestEntry, TrainingMetadata
from .errors import CorruptDataError, DatasetIOError, FormatError, IncompatibleArchitectureError, ShapeError
from .logger import Log
from .nn import layers as L
from .nn.layers import LayerKind, LayerState

MAGIC = b"RIPECKPT"
FORMAT_VERSION = 1
BYTES_PER_MB = 1_000_000

_PREAMBLE = struct.Struct("<8sII")
_LENGTH = struct.Struct("<Q")

FEATURE_KINDS = {LayerKind.CONV2D, LayerKind.RELU, LayerKind.MAXPOOL2D}


class NetworkSpec(BaseModel):
    """An ordered layer list with its input contract, frozen parameter set and provenance."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    layers: List[LayerState]
    input_shape: Tuple[int, int, int] = (3, 224, 224)
    num_classes: int = NUM_CLASSES
    frozen: Set[str] = Field(default_factory=set)
    metadata: TrainingMetadata = Field(default_factory=TrainingMetadata)

    @property
    def params(self) -> Dict[str, np.ndarray]:
        """All parameters by qualified name, in layer order."""
        return {layer.qualified(key): value for layer in self.layers for key, value in layer.params.items()}

    @property
    def trainable(self) -> List[str]:
        """Names of the parameters that are not frozen."""
        return [name for name in self.params if name not in self.frozen]

    @property
    def param_count(self) -> int:
        return sum(int(p.size) for p in self.params.values())

    @property
    def payload_bytes(self) -> int:
        """Bytes of float32 weight payload (headers excluded)."""
        return sum(payload_nbytes(p) for p in self.params.values())

    @property
    def model_size_mb(self) -> float:
        """Weight payload in decimal megabytes."""
        return self.payload_bytes / BYTES_PER_MB

    def manifest(self) -> List[LayerManifestEntry]:
        return [layer.manifest_entry() for layer in self.layers]

    def fingerprint(self) -> str:
        return fingerprint_of(self.manifest())

    def check_composition(self) -> "NetworkSpec":
        """
        Validate that consecutive layer shapes compose and end in ``num_classes`` logits.

        Raises:
            ShapeError: If any layer rejects its input shape or the head width is wrong
        """
        if not self.layers or self.layers[-1].kind is not LayerKind.SOFTMAX_XENT:
            raise ShapeError("A network must end with a softmax_xent loss head")
        names = [layer.name for layer in self.layers]
        if len(set(names)) != len(names):
            raise ShapeError(f"Layer names must be unique, got {names}")
        shape: Tuple[int, ...] = tuple(self.input_shape)
        for layer in self.layers[:-1]:
            shape = layer.output_shape(shape)
        if shape != (self.num_classes,):
            raise ShapeError(f"Network produces shape {shape}, expected ({self.num_classes},) logits")
        unknown = self.frozen - set(self.params)
        if unknown:
            raise ShapeError(f"Frozen set names unknown parameters: {sorted(unknown)}")
        return self

    def clear(self) -> None:
        """Drop every forward cache."""
        for layer in self.layers:
            layer.clear()

    def clone(self) -> "NetworkSpec":
        """A deep copy without forward caches; ``self`` is not modified."""
        twin = copy.deepcopy(self)
        twin.clear()
        return twin

    def astype(self, dtype: np.dtype) -> "NetworkSpec":
        """A copy with every parameter cast to ``dtype`` (e.g. float64 for gradient checks)."""
        twin = self.clone()
        for layer in twin.layers:
            layer.params = {key: value.astype(dtype) for key, value in layer.params.items()}
        return twin


def fingerprint_of(manifest: Sequence[LayerManifestEntry]) -> str:
    """Stable SHA-256 of the ``(kind, hyper, param-shapes)`` list; layer names do not contribute."""
    canonical = [entry.model_dump(exclude={"name"}) for entry in manifest]
    text = json.dumps(canonical, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _head(
    features: int, hidden_units: int, num_classes: int, dropout_layers: int, dropout_rate: float, rng: Rng
) -> List[LayerState]:
    if dropout_layers not in (1, 2):
        raise ShapeError(f"dropout_layers must be 1 or 2, got {dropout_layers}")
    head = [L.flatten("flatten")]
    if dropout_layers == 2:
        head.append(L.dropout("dropout_flat", dropout_rate))
    head += [
        L.dense("dense1", features, hidden_units, rng.spawn(7)),
        L.relu("relu7"),
        L.dropout("dropout_hidden", dropout_rate),
        L.dense("dense2", hidden_units, num_classes, rng.spawn(8)),
        L.softmax_xent("loss"),
    ]
    return head


def build_cidis(
    rng: Rng,
    input_size: int = 224,
    widths: Sequence[int] = (32, 64, 128),
    hidden_units: int = 50,
    dropout_layers: int = 1,
    dropout_rate: float = 0.2,
    num_classes: int = NUM_CLASSES,
    in_channels: int = 3,
) -> NetworkSpec:
    """
    Build a freshly initialized CIDIS network (Glorot-uniform weights, zero biases).

    Each parameterized layer draws from its own child stream of ``rng``, so two builds from equal
    seeds are bit-identical.
    """
    if input_size % 8:
        raise ShapeError(f"input_size must be divisible by 8, got {input_size}")
    layers: List[LayerState] = []
    channels, index = in_channels, 0
    for block, width in enumerate(widths, start=1):
        for _ in range(2):
            index += 1
            layers.append(L.conv2d(f"conv{index}", channels, width, rng.spawn(index)))
            layers.append(L.relu(f"relu{index}"))
            channels = width
        layers.append(L.maxpool2d(f"pool{block}"))
    side = input_size // 2 ** len(widths)
    layers += _head(channels * side * side, hidden_units, num_classes, dropout_layers, dropout_rate, rng)
    net = NetworkSpec(layers=layers, input_shape=(in_channels, input_size, input_size), num_classes=num_classes)
    return net.check_composition()


def _check_batch(net: NetworkSpec, batch: np.ndarray) -> None:
    if batch.ndim != 4 or tuple(batch.shape[1:]) != tuple(net.input_shape) or batch.shape[0] < 1:
        raise ShapeError(f"Expected a batch of shape [b, {', '.join(map(str, net.input_shape))}], got {batch.shape}")


def forward(
    net: NetworkSpec, batch: np.ndarray, mode: Mode = Mode.EVAL, rng: Optional[Rng] = None, retain: bool = True
) -> np.ndarray:
    """
    Logits ``[b, num_classes]`` for ``batch``.

    Args:
        net: Network to run
        batch: Input of shape ``[b, *net.input_shape]`` with values in ``[0, 1]``
        mode: ``train`` activates dropout (and then needs ``rng``)
        rng: Dropout stream
        retain: Keep forward caches for a following :func:`backward`
    """
    _check_batch(net, batch)
    x = batch
    for layer in net.layers[:-1]:
        x = layer.forward(x, mode, rng)
        if not retain:
            layer.clear()
    return x


def _lowest_trainable(net: NetworkSpec) -> int:
    for position, layer in enumerate(net.layers):
        if any(layer.qualified(key) not in net.frozen for key in layer.params):
            return position
    return len(net.layers)


def backward(net: NetworkSpec, grad_logits: np.ndarray) -> Dict[str, np.ndarray]:
    """
    Backpropagate ``d loss / d logits`` through the cached forward pass.

    Propagation stops below the lowest layer that owns a trainable parameter.

    Returns:
        A gradient for every non-frozen parameter
    """
    grads: Dict[str, np.ndarray] = {}
    grad = grad_logits
    stop = _lowest_trainable(net)
    for position in range(len(net.layers) - 2, stop - 1, -1):
        grad, layer_grads = net.layers[position].backward(grad)
        grads.update({name: g for name, g in layer_grads.items() if name not in net.frozen})
    return grads


def loss_and_grads(
    net: NetworkSpec, batch: np.ndarray, labels: np.ndarray, mode: Mode = Mode.TRAIN, rng: Optional[Rng] = None
) -> Tuple[float, np.ndarray, Dict[str, np.ndarray]]:
    """
    One forward and backward pass.

    Returns:
        ``(loss, logits, grads)``
    """
    logits = forward(net, batch, mode, rng)
    loss, _, grad_logits = net.layers[-1].loss(logits, labels)
    return loss, logits, backward(net, grad_logits)


# --- checkpoints ---


def to_bytes(net: NetworkSpec) -> bytes:
    """Encode ``net`` in the checkpoint format."""
    params = net.params
    header = CheckpointHeader(
        fingerprint=net.fingerprint(),
        input_shape=list(net.input_shape),
        num_classes=net.num_classes,
        manifest=net.manifest(),
        frozen=sorted(net.frozen),
        tensors=list(params),
        metadata=net.metadata,
    )
    header_bytes = header.model_dump_json().encode("utf-8")
    chunks = [_PREAMBLE.pack(MAGIC, FORMAT_VERSION, len(header_bytes)), header_bytes]
    for value in params.values():
        encoded = serialize(value)
        chunks += [_LENGTH.pack(len(encoded)), encoded]
    return b"".join(chunks)


def from_bytes(data: bytes, expect: Optional[Union[str, NetworkSpec]] = None) -> NetworkSpec:
    """
    Decode a checkpoint, verifying magic, version and fingerprint before reading any weights.

    Args:
        data: Checkpoint bytes
        expect: Architecture fingerprint (or a network whose fingerprint) the checkpoint must match

    Raises:
        FormatError: Bad magic, unsupported version or malformed layout
        IncompatibleArchitectureError: Fingerprint differs from the manifest or from ``expect``
    """
    if len(data) < _PREAMBLE.size:
        raise FormatError("Checkpoint is truncated before its header")
    magic, version, header_length = _PREAMBLE.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(f"Not a checkpoint (magic {magic!r})")
    if version != FORMAT_VERSION:
        raise FormatError(f"Unsupported checkpoint version {version}")
    offset = _PREAMBLE.size
    if len(data) < offset + header_length:
        raise FormatError("Checkpoint is truncated inside its header")
    try:
        header = CheckpointHeader.model_validate_json(data[offset : offset + header_length])
    except ValidationError as e:
        raise FormatError(f"Malformed checkpoint header: {e.error_count()} problem(s)") from e
    offset += header_length

    if fingerprint_of(header.manifest) != header.fingerprint:
        raise IncompatibleArchitectureError("Checkpoint fingerprint does not match its layer manifest")
    if expect is not None:
        wanted = expect.fingerprint() if isinstance(expect, NetworkSpec) else expect
        if wanted != header.fingerprint:
            raise IncompatibleArchitectureError(
                f"Checkpoint architecture {header.fingerprint[:12]} differs from expected {wanted[:12]}"
            )

    tensors: Dict[str, np.ndarray] = {}
    for name in header.tensors:
        if len(data) < offset + _LENGTH.size:
            raise FormatError(f"Checkpoint is truncated before tensor {name}")
        (length,) = _LENGTH.unpack_from(data, offset)
        offset += _LENGTH.size
        if len(data) < offset + length:
            raise FormatError(f"Checkpoint is truncated inside tensor {name}")
        try:
            tensors[name] = deserialize(data[offset : offset + length])
        except CorruptDataError as e:
            raise FormatError(f"Tensor {name} is corrupt: {e}") from e
        offset += length
    if offset != len(data):
        raise FormatError(f"Checkpoint has {len(data) - offset} trailing bytes")

    layers = []
    for entry in header.manifest:
        params = {}
        for key, shape in entry.params.items():
            qualified = f"{entry.name}.{key}"
            if qualified not in tensors or list(tensors[qualified].shape) != shape:
                raise FormatError(f"Tensor {qualified} is missing or does not have shape {shape}")
            params[key] = tensors[qualified]
        try:
            kind = LayerKind(entry.kind)
        except ValueError as e:
            raise FormatError(f"Unknown layer kind {entry.kind!r}") from e
        layers.append(LayerState(kind=kind, name=entry.name, params=params, hyper=entry.hyper))
    net = NetworkSpec(
        layers=layers,
        input_shape=tuple(header.input_shape),
        num_classes=header.num_classes,
        frozen=set(header.frozen),
        metadata=header.metadata,
    )
    return net.check_composition()


def save(net: NetworkSpec, path: Path) -> None:
    """Write ``net`` to ``path`` in the checkpoint format."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(to_bytes(net))
    except OSError as e:
        raise DatasetIOError(f"Cannot write checkpoint {path}: {e}") from e
    Log.info("Checkpoint saved", path=str(path), params=net.param_count, fingerprint=net.fingerprint()[:12])


def load(path: Path, expect: Optional[Union[str, NetworkSpec]] = None) -> NetworkSpec:
    """Read a checkpoint written by :func:`save`."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise DatasetIOError(f"Cannot read checkpoint {path}: {e}") from e
    net = from_bytes(data, expect)
    Log.info("Checkpoint loaded", path=str(path), params=net.param_count, fingerprint=net.fingerprint()[:12])
    return net


# --- transfer learning ---


def geometry(net: NetworkSpec) -> Dict[str, object]:
    """
    ``image_size``, ``widths`` (last convolution of each pooled block) and ``hidden_units`` of a
    network, named as the :class:`~ripeness.dto.configs.TrainConfig` fields that build it.
    """
    widths: List[int] = []
    channels: Optional[int] = None
    for layer in net.layers:
        if layer.kind is LayerKind.CONV2D:
            channels = int(layer.params["kernel"].shape[0])
        elif layer.kind is LayerKind.MAXPOOL2D and channels is not None:
            widths.append(channels)
    dense = next(layer for layer in net.layers if layer.kind is LayerKind.DENSE)
    return {
        "image_size": int(net.input_shape[1]),
        "widths": tuple(widths),
        "hidden_units": int(dense.params["weight"].shape[0]),
    }


def feature_param_names(net: NetworkSpec) -> List[str]:
    """Parameters of the convolutional feature extractor."""
    return [
        layer.qualified(key) for layer in net.layers if layer.kind is LayerKind.CONV2D for key in layer.params
    ]


def prepare_transfer(
    net: NetworkSpec, rng: Rng, dropout_layers: Optional[int] = None, dropout_rate: Optional[float] = None
) -> NetworkSpec:
    """
    Freeze the feature extractor and replace the fully-connected head.

    Returns a new network whose convolution parameters are copies of ``net``'s (marked frozen) and
    whose head is re-initialized from ``rng`` with the same widths and the requested dropout
    configuration (by default the one ``net`` already has).
    """
    source = net.clone()
    split = next(i for i, layer in enumerate(source.layers) if layer.kind not in FEATURE_KINDS)
    features = source.layers[:split]
    head_layers = source.layers[split:]
    dense_layers = [layer for layer in head_layers if layer.kind is LayerKind.DENSE]
    if len(dense_layers) != 2:
        raise ShapeError(f"Transfer expects a two-dense head, found {len(dense_layers)}")
    hidden_units, in_features = dense_layers[0].params["weight"].shape
    current_dropouts = [layer for layer in head_layers if layer.kind is LayerKind.DROPOUT]
    layers_wanted = dropout_layers if dropout_layers is not None else len(current_dropouts)
    rate = dropout_rate if dropout_rate is not None else float(current_dropouts[0].hyper["p"])

    head = _head(in_features, hidden_units, source.num_classes, layers_wanted, rate, rng)
    transferred = NetworkSpec(
        layers=features + head,
        input_shape=source.input_shape,
        num_classes=source.num_classes,
        metadata=TrainingMetadata(
            epochs_seen=0, optimizer=None, seed=rng.seed, stage="cnn2", config_id=source.metadata.config_id
        ),
    )
    transferred.frozen = set(feature_param_names(transferred))
    Log.info("Prepared transfer", frozen=len(transferred.frozen), trainable=len(transferred.trainable))
    return transferred.check_composition()
