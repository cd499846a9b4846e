"""Read and write model weight files.

Layout, little-endian throughout:

* header: magic ``RTNW``, format version, family, then r, H, PH, m, p and the
  baseline layer count as unsigned 32-bit integers
* payload: every parameter tensor in declared order as float64 values

The conversion is lossless, so loading a saved model reproduces every
parameter bit for bit.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from struct import Struct, error as StructError
from typing import Any, BinaryIO, Tuple

import numpy as np

from ..errors import RetainFormatError, RetainShapeError, assert_eq, assert_in
from ..serde import Family
from .family import FAMILIES, family_of
from .models import ModelDimensions, Parameters, tensors, with_arrays

HEADER = Struct("<4s 2I 6I")
assert HEADER.size == 36, HEADER.size

MAGIC = b"RTNW"
VERSION = 1
FLOAT64 = np.dtype("<f8")

LOG = logging.getLogger(__name__)


@dataclass
class SavedModel:
    family: Family
    dims: ModelDimensions
    params: Parameters


class BinReader:
    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0
        self.prev = 0

    def __len__(self) -> int:
        return len(self.data)

    def read(self, struct: Struct) -> Tuple[Any, ...]:
        try:
            values = struct.unpack_from(self.data, self.offset)
        except StructError as e:
            raise RetainFormatError(f"truncated data (at {self.offset})") from e
        self.prev = self.offset
        self.offset += struct.size
        return values

    def read_doubles(self, count: int) -> np.ndarray:
        values = np.frombuffer(self.data, dtype=FLOAT64, count=count, offset=self.offset)
        self.prev = self.offset
        self.offset += count * FLOAT64.itemsize
        return values.astype(np.float64)


def template(family: Family, dims: ModelDimensions) -> Parameters:
    params: Parameters = FAMILIES[family].init_params(dims, np.random.default_rng(0))
    return params


def read_model(data: bytes) -> SavedModel:
    reader = BinReader(data)
    LOG.debug("Reading model data...")
    magic, version, family_value, r, history, horizon, m, p, layers = reader.read(HEADER)

    assert_eq("magic", MAGIC, magic, reader.prev + 0, RetainFormatError)
    assert_eq("version", VERSION, version, reader.prev + 4, RetainFormatError)
    assert_in(
        "family", [f.value for f in Family], family_value, reader.prev + 8, RetainFormatError
    )
    family = Family(family_value)
    try:
        dims = ModelDimensions(
            inputs=r, history=history, horizon=horizon, embedding=m, hidden=p, layers=layers
        )
    except ValueError as e:
        raise RetainFormatError(f"dimension header: {e} (at {reader.prev + 12})") from e
    LOG.debug("Model family %s, dimensions %s", family.name, dims)

    shapes = [t.shape for t in tensors(template(family, dims))]
    expected = sum(int(np.prod(shape)) for shape in shapes) * FLOAT64.itemsize
    assert_eq("payload size", expected, len(reader) - reader.offset, reader.offset, RetainFormatError)

    arrays = []
    for shape in shapes:
        count = int(np.prod(shape))
        arrays.append(reader.read_doubles(count).reshape(shape))

    assert_eq("model end", len(reader), reader.offset, reader.offset, RetainFormatError)
    params = with_arrays(template(family, dims), arrays)
    LOG.debug("Read model data")
    return SavedModel(family=family, dims=dims, params=params)


def write_model(f: BinaryIO, params: Parameters, dims: ModelDimensions) -> None:
    LOG.debug("Writing model data...")
    family = family_of(params).family
    expected = [t.shape for t in tensors(template(family, dims))]
    actual = [t.shape for t in tensors(params)]
    assert_eq("parameter shapes", expected, actual, "header", RetainShapeError)
    f.write(
        HEADER.pack(
            MAGIC,
            VERSION,
            family.value,
            dims.inputs,
            dims.history,
            dims.horizon,
            dims.embedding,
            dims.hidden,
            dims.layers,
        )
    )
    for tensor in tensors(params):
        f.write(np.ascontiguousarray(tensor.data, dtype=FLOAT64).tobytes())
    LOG.debug("Wrote model data")


def save_model(path: Path, params: Parameters, dims: ModelDimensions) -> None:
    with path.open("wb") as f:
        write_model(f, params, dims)


def load_model(path: Path) -> SavedModel:
    return read_model(path.read_bytes())
