"""Binary image-feature matrices and their id index.

Feature file: ``IMGF`` magic, then little-endian u32 version, row count ``N``
and width ``D``, then ``N * D`` little-endian float32 values. The index file
maps an image id to a row, one ``id<TAB>row`` pair per line.
"""

from __future__ import annotations

import logging
import struct
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Union

import numpy as np

from multiseq.errors import DatasetError, ImageIndexError

logger = logging.getLogger(__name__)

MAGIC = b"IMGF"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIII")
_FEATURE_DTYPE = np.dtype("<f4")


class ImageFeatureStore:
    """Feature rows addressed by image id."""

    def __init__(self, features: np.ndarray, index: Mapping[str, int]) -> None:
        features = np.asarray(features, dtype=_FEATURE_DTYPE)
        if features.ndim != 2:  # noqa: PLR2004
            msg = f"image features must be a matrix, got shape {features.shape}"
            raise DatasetError(msg)
        for image_id, row in index.items():
            if not 0 <= row < len(features):
                msg = f"image {image_id!r} points at row {row} of a {len(features)}-row matrix"
                raise DatasetError(msg)
        self.features = features
        self.index = dict(index)

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])

    def __len__(self) -> int:
        return len(self.index)

    def __contains__(self, image_id: object) -> bool:
        return image_id in self.index

    def row(self, image_id: str) -> np.ndarray:
        try:
            return self.features[self.index[image_id]]
        except KeyError:
            msg = f"image id {image_id!r} not in the feature index"
            raise ImageIndexError(msg) from None

    def rows(self, image_ids: Sequence[str]) -> np.ndarray:
        """``(len(image_ids), D)`` rows; :class:`ImageIndexError` on the first unknown id."""
        if not image_ids:
            return np.zeros((0, self.dim), dtype=_FEATURE_DTYPE)
        return np.stack([self.row(i) for i in image_ids])

    def save(self, features_path: Union[str, Path], index_path: Union[str, Path]) -> None:
        rows, dim = self.features.shape
        with Path(features_path).open("wb") as handle:
            handle.write(_HEADER.pack(MAGIC, FORMAT_VERSION, rows, dim))
            handle.write(self.features.astype(_FEATURE_DTYPE).tobytes())
        lines = sorted(self.index.items(), key=lambda item: (item[1], item[0]))
        Path(index_path).write_text("".join(f"{i}\t{r}\n" for i, r in lines), encoding="utf-8")

    @classmethod
    def load(
        cls, features_path: Union[str, Path], index_path: Union[str, Path]
    ) -> ImageFeatureStore:
        features = read_features(features_path)
        store = cls(features, read_index(index_path))
        logger.info("loaded %d image feature rows of width %d", len(features), store.dim)
        return store


def read_features(path: Union[str, Path]) -> np.ndarray:
    try:
        payload = Path(path).read_bytes()
    except OSError as exc:
        msg = f"cannot read image features {path}: {exc}"
        raise DatasetError(msg) from exc
    if len(payload) < _HEADER.size:
        msg = f"{path}: truncated image-feature header"
        raise DatasetError(msg)
    magic, version, rows, dim = _HEADER.unpack_from(payload)
    if magic != MAGIC:
        msg = f"{path}: not an image-feature file (magic {magic!r})"
        raise DatasetError(msg)
    if version != FORMAT_VERSION:
        msg = f"{path}: unsupported image-feature version {version}"
        raise DatasetError(msg)
    expected = _HEADER.size + rows * dim * _FEATURE_DTYPE.itemsize
    if len(payload) != expected:
        msg = f"{path}: expected {expected} bytes for {rows}x{dim} features, found {len(payload)}"
        raise DatasetError(msg)
    data = np.frombuffer(payload, dtype=_FEATURE_DTYPE, offset=_HEADER.size)
    return data.reshape(rows, dim).copy()


def read_index(path: Union[str, Path]) -> dict[str, int]:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        msg = f"cannot read image index {path}: {exc}"
        raise DatasetError(msg) from exc
    index: dict[str, int] = {}
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        image_id, sep, row = line.rpartition("\t")
        if not sep or not row.strip().isdigit():
            msg = f"{path}:{number}: expected 'id<TAB>row', got {line!r}"
            raise DatasetError(msg)
        if image_id in index:
            msg = f"{path}:{number}: image id {image_id!r} listed twice"
            raise DatasetError(msg)
        index[image_id] = int(row)
    return index
