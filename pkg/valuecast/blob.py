"""
Binary (de)serialization of model checkpoints.

A blob is the protocol header followed by one encoded item. Items are None, bool, int,
float, str, bytes, list, tuple, dict and numeric numpy arrays; containers nest. Each item
starts with a one-byte type code; lengths and counts are little-endian uint64. Arrays keep
their dtype and shape bit-exactly. Blobs over 1000 bytes are compressed when that makes
them smaller.
"""

import zlib
import snappy
import collections
import numpy as np
from .errors import CheckpointError
from .settings import config

PROTOCOL = b"vc0\0"
MIN_COMPRESS = 1000

# compressed blobs: prefix, uint64 uncompressed size, payload
compressors = {
    "zlib": (b"ZL123\0", zlib.compress, zlib.decompress),
    "snappy": (b"SNPY1\0", snappy.compress, snappy.uncompress),
}

dtypes = {
    3: np.dtype("bool"),
    6: np.dtype("float64"),
    7: np.dtype("float32"),
    8: np.dtype("int8"),
    9: np.dtype("uint8"),
    10: np.dtype("int16"),
    11: np.dtype("uint16"),
    12: np.dtype("int32"),
    13: np.dtype("uint32"),
    14: np.dtype("int64"),
    15: np.dtype("uint64"),
}
dtype_ids = {v: k for k, v in dtypes.items()}

NONE, ARRAY, TUPLE, LIST, DICT, STRING, BYTES, INT, BOOL, FLOAT = (
    b"\xff",
    b"A",
    b"\x01",
    b"\x02",
    b"\x04",
    b"\x05",
    b"\x06",
    b"\x0a",
    b"\x0b",
    b"\x0d",
)


def u64(n):
    return np.uint64(n).tobytes()


def _sized(data):
    return u64(len(data)) + data


class Writer:
    """Encodes python objects into the item format"""

    def encode(self, obj):
        if obj is None:
            return NONE
        if isinstance(obj, np.ndarray):
            return self.array(obj)
        if isinstance(obj, (bool, np.bool_)):
            return BOOL + np.array(obj, dtype="bool").tobytes()
        if isinstance(obj, np.number):
            return self.array(np.array(obj))
        if isinstance(obj, int):
            n_bytes = obj.bit_length() // 8 + 1
            if n_bytes > 0xFFFF:
                raise CheckpointError("Integers are limited to 65535 bytes")
            return (
                INT
                + np.uint16(n_bytes).tobytes()
                + obj.to_bytes(n_bytes, "little", signed=True)
            )
        if isinstance(obj, float):
            return FLOAT + np.float64(obj).tobytes()
        if isinstance(obj, str):
            return STRING + _sized(obj.encode())
        if isinstance(obj, (bytes, bytearray)):
            return BYTES + _sized(bytes(obj))
        if isinstance(obj, collections.abc.Mapping):
            return DICT + u64(len(obj)) + b"".join(
                _sized(self.encode(k)) + _sized(self.encode(v)) for k, v in obj.items()
            )
        if isinstance(obj, collections.abc.MutableSequence):
            return LIST + self.sequence(obj)
        if isinstance(obj, collections.abc.Sequence):
            return TUPLE + self.sequence(obj)
        raise CheckpointError("Cannot serialize an object of type %s" % type(obj).__name__)

    def sequence(self, items):
        return u64(len(items)) + b"".join(_sized(self.encode(item)) for item in items)

    @staticmethod
    def array(array):
        """Scalars are encoded with ndim == 0"""
        try:
            type_id = dtype_ids[array.dtype]
        except KeyError:
            raise CheckpointError("Cannot serialize arrays of dtype %s" % array.dtype)
        return (
            ARRAY
            + u64(array.ndim)
            + np.array(array.shape, dtype=np.uint64).tobytes()
            + np.uint32(type_id).tobytes()
            + np.ascontiguousarray(array).tobytes()
        )


class Reader:
    """Decodes one item from a buffer, advancing a read position"""

    def __init__(self, buffer):
        self.buffer = buffer
        self.pos = 0
        self.decoders = {
            NONE: lambda: None,
            ARRAY: self.array,
            TUPLE: lambda: tuple(self.items()),
            LIST: lambda: list(self.items()),
            DICT: self.dict,
            STRING: lambda: bytes(self.take(self.value())).decode(),
            BYTES: lambda: bytes(self.take(self.value())),
            INT: lambda: int.from_bytes(self.take(self.value("uint16")), "little", signed=True),
            BOOL: lambda: bool(self.value("bool")),
            FLOAT: lambda: float(self.value("float64")),
        }

    def take(self, n_bytes):
        n_bytes = int(n_bytes)
        if self.pos + n_bytes > len(self.buffer):
            raise CheckpointError("Truncated blob")
        self.pos += n_bytes
        return self.buffer[self.pos - n_bytes : self.pos]

    def value(self, dtype="uint64", count=None):
        """one scalar, or an array of count values"""
        dtype = np.dtype(dtype)
        data = np.frombuffer(self.take(dtype.itemsize * (count or 1)), dtype=dtype)
        return data if count is not None else data[0]

    def item(self, n_bytes=None):
        start = self.pos
        code = bytes(self.take(1))
        try:
            decode = self.decoders[code]
        except KeyError:
            raise CheckpointError("Unknown item code %r. Upgrade valuecast." % code)
        obj = decode()
        if n_bytes is not None and self.pos - start != n_bytes:
            raise CheckpointError("Item length check failed! Invalid blob")
        return obj

    def items(self):
        for _ in range(int(self.value())):
            yield self.item(int(self.value()))

    def dict(self):
        d = {}
        for _ in range(int(self.value())):
            key = self.item(int(self.value()))
            d[key] = self.item(int(self.value()))
        return d

    def array(self):
        n_dims = int(self.value())
        shape = tuple(int(n) for n in self.value(count=n_dims)) if n_dims else ()
        try:
            dtype = dtypes[int(self.value("uint32"))]
        except KeyError:
            raise CheckpointError("Unknown array dtype in blob")
        n_elem = int(np.prod(shape, dtype=int))
        if not n_elem:
            return np.zeros(shape, dtype=dtype)
        return self.value(dtype, count=n_elem).reshape(shape).copy()


def pack(obj, compress=True):
    """
    :param compress: compress with config["checkpoint.compression"] when that shrinks the blob
    :return: bytes
    """
    blob = PROTOCOL + Writer().encode(obj)
    if compress and len(blob) > MIN_COMPRESS:
        prefix, compressor, _ = compressors[config["checkpoint.compression"]]
        compressed = prefix + u64(len(blob)) + compressor(blob)
        if len(compressed) < len(blob):
            blob = compressed
    return blob


def unpack(blob):
    if blob is None:
        return None
    for prefix, _, decompressor in compressors.values():
        if blob.startswith(prefix):
            try:
                size = int(np.frombuffer(blob, np.uint64, count=1, offset=len(prefix))[0])
                blob = decompressor(blob[len(prefix) + 8 :])
            except Exception as e:
                raise CheckpointError("Cannot decompress blob: %s" % e)
            if len(blob) != size:
                raise CheckpointError("Decompressed size check failed! Invalid blob")
            break
    if not blob.startswith(PROTOCOL):
        raise CheckpointError("Unknown serialization protocol. Not a valuecast blob")
    reader = Reader(memoryview(blob)[len(PROTOCOL) :])
    obj = reader.item()
    if reader.pos != len(reader.buffer):
        raise CheckpointError("Trailing bytes after the blob item")
    return obj
