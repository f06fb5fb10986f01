"""
Atomic writers for the CSV and JSON products.

Every product names the configuration it came from: CSV files start with a
`# config-sha256: <hex>` comment line and JSON reports carry a `config_sha256`
key. Floats are written with 17 significant digits, so that they round-trip.
"""
from collections.abc import Mapping
from enum import Enum
import json
import os
from pathlib import Path
from tempfile import mkstemp
from types import TracebackType
from typing import Any, IO

import konsole
import numpy as np
import pandas as pd


__all__ = (
    'atomic_write',
    'HASH_PREFIX',
    'jsonable',
    'read_csv',
    'write_csv',
    'write_json',
)


HASH_PREFIX = '# config-sha256: '


class atomic_write:
    """
    Atomically write the text file with the given path. Entering the context
    creates a temporary file in the same directory and returns it. Regular
    completion of `with`'s body renames the temporary file over the path, while
    an exception deletes it again and leaves the path untouched.
    """

    def __init__(self, path: str | os.PathLike[str]) -> None:
        self.target = Path(os.path.realpath(path))
        self._tmp: None | str = None
        self._file: None | IO[str] = None

    def __enter__(self) -> IO[str]:
        self.target.parent.mkdir(parents=True, exist_ok=True)
        fd, self._tmp = mkstemp(
            dir=self.target.parent, prefix=self.target.name + '-', suffix='.tmp'
        )
        self._file = os.fdopen(fd, mode='w', encoding='utf8', newline='')
        return self._file

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc_value: BaseException | None,
        traceback: TracebackType | None,
    ) -> None:
        assert self._file is not None and self._tmp is not None
        self._file.close()
        if exc_value is None:
            os.replace(self._tmp, self.target)
        else:
            try:
                os.unlink(self._tmp)
            except FileNotFoundError:
                pass
        self._file = self._tmp = None


def write_csv(
    path: str | os.PathLike[str], frame: pd.DataFrame, config_hash: str
) -> Path:
    with atomic_write(path) as file:
        file.write(f'{HASH_PREFIX}{config_hash}\n')
        frame.to_csv(file, index=False, float_format='%.17g', lineterminator='\n')
    konsole.info('Wrote CSV product', detail={'path': str(path), 'rows': len(frame)})
    return Path(path)


def read_csv(path: str | os.PathLike[str]) -> tuple[None | str, pd.DataFrame]:
    """Read a product back, returning the embedded config hash and the table."""
    with open(path, mode='r', encoding='utf8') as file:
        first = file.readline()
        config_hash = None
        if first.startswith(HASH_PREFIX):
            config_hash = first[len(HASH_PREFIX) :].strip()
        else:
            file.seek(0)
        return config_hash, pd.read_csv(file, float_precision='round_trip')


def jsonable(value: Any) -> Any:
    """Convert to plain JSON values. Non-finite floats become null."""
    if isinstance(value, Mapping):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value) if np.isfinite(value) else None
    return value


def write_json(
    path: str | os.PathLike[str], report: Mapping[str, Any], config_hash: str
) -> Path:
    data = jsonable(report)
    data['config_sha256'] = config_hash
    with atomic_write(path) as file:
        json.dump(data, file, indent=4, sort_keys=True, allow_nan=False)
        file.write('\n')
    konsole.info('Wrote JSON report', detail={'path': str(path)})
    return Path(path)
