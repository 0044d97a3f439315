"""
Labeled streams for experiments: a synthetic generator of three clusters
whose negative class alternates between two of them, and a CSV reader and
writer for streams prepared elsewhere.
"""

import csv
import math
import os
from typing import List
from typing import Optional
from typing import Sequence

import attr
import numpy as np
import pandas as pd

from voicache.constants import NEGATIVE_LABEL
from voicache.constants import POSITIVE_LABEL
from voicache.exceptions import DimensionInconsistent
from voicache.exceptions import InvalidConfig
from voicache.exceptions import InvalidLabel
from voicache.exceptions import OutputError
from voicache.exceptions import StreamFileNotFound
from voicache.exceptions import StreamParseError
from voicache.extra_attr_validators import binary_label
from voicache.extra_attr_validators import positive
from voicache.extra_attr_validators import probability


_LABEL_COLUMN = "label"
_LABEL_TOKENS = {"+1": POSITIVE_LABEL, "-1": NEGATIVE_LABEL}
_COMMENT_PREFIX = "#"
# Never found in stream files, so each line is read as a single field.
_WHOLE_LINE = "\x1f"


def _readonly_vector(value):
    array = np.array(value, dtype=np.float64)
    array.setflags(write=False)
    return array


@attr.s(frozen=True, slots=True, eq=False)
class StreamPoint:
    """
    :ivar int index: Arrival order, consecutive from 0.
    :ivar numpy.ndarray features: Raw features, without the bias coordinate.
    :ivar int true_label: Hidden from the learner until probed.
    :ivar int cluster: Cluster the point was drawn from (1, 2 or 3), 0 when
        unknown.
    """

    index: int = attr.ib()
    features: np.ndarray = attr.ib(converter=_readonly_vector)
    true_label: int = attr.ib(validator=binary_label)
    cluster: int = attr.ib(default=0)


def _are_centers(inst, attribute, value):
    if not isinstance(value, tuple) or len(value) != 3:
        msg = "'{name}' must be a tuple of 3 centers but got {value!r}"
        raise TypeError(msg.format(name=attribute.name, value=value))
    for center in value:
        if (
            not isinstance(center, tuple)
            or len(center) != 2
            or not all(isinstance(c, (int, float)) and math.isfinite(c) for c in center)
        ):
            msg = "'{name}' centers must be pairs of finite numbers but got {value!r}"
            raise TypeError(msg.format(name=attribute.name, value=value))
    if len(set(value)) != 3:
        msg = "'{name}' centers must be pairwise distinct but got {value!r}"
        raise ValueError(msg.format(name=attribute.name, value=value))


def _to_centers(value):
    try:
        return tuple(tuple(float(c) for c in center) for center in value)
    except (TypeError, ValueError):
        return value


def _is_count(minimum):
    def validate(inst, attribute, value):
        if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
            msg = "'{name}' must be an integer not smaller than {minimum} but got {value!r}"
            raise ValueError(msg.format(name=attribute.name, minimum=minimum, value=value))

    return validate


@attr.s(frozen=True, slots=True)
class ClusterStreamConfig:
    """
    Three isotropic Gaussian clusters. Cluster 1 is the positive class and is
    mixed into every block; the negative class comes from cluster 2 in even
    blocks and from cluster 3 in odd blocks.

    By default cluster 1 lies halfway between clusters 2 and 3 on one line:
    every block is linearly separable but the whole stream isn't, so a
    learner must set aside the labels of the regime that went away.

    :ivar tuple centers: Centers of clusters 1, 2 and 3.
    :ivar float std_dev: Spread of every cluster.
    :ivar int block_len: Points per block.
    :ivar int total_points: Stream length.
    :ivar float mix_c1: Fraction of every block drawn from cluster 1.
    :ivar int seed:
    """

    centers = attr.ib(
        default=((0.0, 0.0), (-1.5, 0.0), (1.5, 0.0)), converter=_to_centers, validator=_are_centers
    )
    std_dev: float = attr.ib(default=0.3, validator=positive)
    block_len: int = attr.ib(default=20, validator=_is_count(1))
    total_points: int = attr.ib(default=100, validator=_is_count(0))
    mix_c1: float = attr.ib(default=0.5, validator=probability)
    seed: int = attr.ib(default=0, validator=attr.validators.instance_of(int))

    @classmethod
    def default(cls, seed=0):
        return cls(seed=seed)


def generate_cluster_stream(cfg: ClusterStreamConfig) -> List[StreamPoint]:
    """
    Draws the stream described by `cfg`. The same configuration (seed
    included) always produces the same points.

    Inside each block the cluster 1 draws are `round(mix_c1·len(block))`
    positions picked at random, so positives are interleaved with the
    block's negatives.

    :rtype: list[StreamPoint]
    """
    try:
        attr.validate(cfg)
    except (TypeError, ValueError) as e:
        raise InvalidConfig(str(e))

    rng = np.random.default_rng(cfg.seed)
    centers = np.array(cfg.centers)
    points = []
    for start in range(0, cfg.total_points, cfg.block_len):
        block = start // cfg.block_len
        size = min(cfg.block_len, cfg.total_points - start)
        negative_cluster = 2 if block % 2 == 0 else 3

        positives = set(rng.choice(size, size=round(cfg.mix_c1 * size), replace=False).tolist())
        for offset in range(size):
            cluster = 1 if offset in positives else negative_cluster
            features = centers[cluster - 1] + cfg.std_dev * rng.standard_normal(2)
            label = POSITIVE_LABEL if cluster == 1 else NEGATIVE_LABEL
            points.append(StreamPoint(start + offset, features, label, cluster))
    return points


def augment_bias(x) -> np.ndarray:
    """
    :return: `x` with a constant 1 appended as its last coordinate.
    """
    return np.append(np.asarray(x, dtype=np.float64), 1.0)


def _read_lines(path) -> pd.Series:
    """
    :return: The stripped text of every physical line of `path`, indexed by
        its 1-based line number.
    """
    try:
        frame = pd.read_csv(
            path,
            header=None,
            names=["text"],
            sep=_WHOLE_LINE,
            dtype=str,
            quoting=csv.QUOTE_NONE,
            skip_blank_lines=False,
            keep_default_na=False,
            na_filter=False,
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError:
        return pd.Series([], dtype=object)
    except UnicodeDecodeError as e:
        raise StreamParseError(None, "{} is not valid UTF-8 text: {}".format(path, e))
    except pd.errors.ParserError as e:
        raise StreamParseError(None, "unable to parse {}: {}".format(path, e))
    except OSError as e:
        raise StreamParseError(None, "unable to read {}: {}".format(path, e))

    lines = frame["text"].fillna("").astype(str).str.strip()
    lines.index = lines.index + 1
    return lines


def _split_cells(body: pd.Series, dim: int) -> pd.DataFrame:
    """
    :return: One column per expected field, stripped, with missing fields
        left empty.
    """
    cells = body.str.split(",", expand=True).reindex(columns=range(dim + 1))
    return cells.fillna("").astype(str).apply(lambda column: column.str.strip())


def _first_row_error(body: pd.Series, cells: pd.DataFrame, dim: int):
    """
    Validates every data row at once.

    :return: The error for the earliest invalid row, or None. Inside a row the
        field count is checked before the features, and those before the label.
    """
    numbers = cells.iloc[:, :dim].apply(pd.to_numeric, errors="coerce").astype(np.float64)

    widths = body.str.count(",") + 1
    bad_width = widths != dim + 1
    bad_features = pd.Series(~np.isfinite(numbers.to_numpy()).all(axis=1), index=body.index)
    bad_label = cells[dim].map(_LABEL_TOKENS).isna()

    invalid = bad_width | bad_features | bad_label
    if not invalid.any():
        return None

    line_number = int(invalid[invalid].index[0])
    if bad_width[line_number]:
        return DimensionInconsistent(
            line_number, "expected {} features but got {}".format(dim, widths[line_number] - 1)
        )
    if bad_features[line_number]:
        return StreamParseError(
            line_number,
            "features must be finite numbers but got {!r}".format(
                ",".join(cells.loc[line_number].iloc[:dim])
            ),
        )
    return InvalidLabel(
        line_number, "label must be +1 or -1 but got {!r}".format(cells.loc[line_number, dim])
    )


def load_csv_stream(path) -> List[StreamPoint]:
    """
    Reads a stream with a `f1,...,fd,label` header and one point per row.
    Labels are written `+1` or `-1`; lines starting with `#` are comments.

    :param str|os.PathLike path:
    :rtype: list[StreamPoint]
    :raise StreamFileNotFound:
    :raise StreamParseError: Unreadable file, malformed header or feature
        value.
    :raise DimensionInconsistent: Row with a different number of features.
    :raise InvalidLabel:
    """
    if not os.path.isfile(path):
        raise StreamFileNotFound("Stream file not found: {}".format(path))

    lines = _read_lines(path)
    lines = lines[(lines.str.strip(" \t,") != "") & ~lines.str.startswith(_COMMENT_PREFIX)]
    if lines.empty:
        raise StreamParseError(1, "missing header")

    header = [cell.strip() for cell in lines.iloc[0].split(",")]
    if len(header) < 2 or header[-1] != _LABEL_COLUMN:
        raise StreamParseError(
            int(lines.index[0]),
            "header must be 'f1,...,fd,label' but got {!r}".format(",".join(header)),
        )
    dim = len(header) - 1

    body = lines.iloc[1:]
    if body.empty:
        return []
    cells = _split_cells(body, dim)
    error = _first_row_error(body, cells, dim)
    if error is not None:
        raise error

    # numpy parses decimal text with correct rounding, so written streams load bit-exact.
    features = cells.iloc[:, :dim].to_numpy(dtype=str).astype(np.float64)
    labels = cells[dim].map(_LABEL_TOKENS).to_numpy()
    return [StreamPoint(i, x, int(label)) for i, (x, label) in enumerate(zip(features, labels))]


def write_csv_stream(points: Sequence[StreamPoint], path, dim: Optional[int] = None) -> None:
    """
    Writes points in the format read by :func:`load_csv_stream`.

    :param sequence[StreamPoint] points:
    :param str|os.PathLike path:
    :param int|None dim: Feature dimension, needed only when `points` is
        empty.
    """
    if dim is None:
        if not points:
            raise ValueError("'dim' is required to write an empty stream")
        dim = len(points[0].features)

    header = ["f{}".format(i) for i in range(1, dim + 1)] + [_LABEL_COLUMN]
    # repr keeps every float bit-exact through a write and load.
    rows = [
        [repr(float(f)) for f in point.features]
        + ["+1" if point.true_label == POSITIVE_LABEL else "-1"]
        for point in points
    ]
    frame = pd.DataFrame(rows, columns=header, dtype=str)
    try:
        frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
    except OSError as e:
        raise OutputError("Unable to write stream to {}: {}".format(path, e))
