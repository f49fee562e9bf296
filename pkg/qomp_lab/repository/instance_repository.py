import csv
import json
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
from pydantic import ValidationError

from qomp_lab.core import Dictionary, Signal, Support, make_dictionary, make_signal
from qomp_lab.errors import InvalidInstance
from qomp_lab.hardness import X3CInstance, make_x3c
from qomp_lab.schemas import InstancePayload, MatrixPayload, X3CPayload
from qomp_lab.utils import PathLike, dumps_json, write_text


def matrix_to_payload(matrix: np.ndarray) -> MatrixPayload:
    array = np.asarray(matrix, dtype=complex)
    if array.ndim == 1:
        array = array.reshape(-1, 1)
    n, m = array.shape
    flat = array.reshape(-1)
    return MatrixPayload(n=n, m=m, real=flat.real.tolist(), imag=flat.imag.tolist())


def payload_to_matrix(payload: MatrixPayload) -> np.ndarray:
    real = np.asarray(payload.real, dtype=float)
    imag = np.asarray(payload.imag, dtype=float)
    return (real + 1j * imag).reshape(payload.n, payload.m)


def _read_json(path: PathLike) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as error:
        raise InvalidInstance(f"{path} is not valid JSON: {error}")


def load_instance(path: PathLike) -> Tuple[Dictionary, Signal, Optional[Support]]:
    """Instance JSON, or a real CSV whose last column is the signal."""
    if str(path).endswith(".csv"):
        return load_instance_csv(path)
    try:
        payload = InstancePayload.parse_obj(_read_json(path))
    except ValidationError as error:
        raise InvalidInstance(f"{path} does not match the instance format: {error}")
    dictionary = make_dictionary(payload_to_matrix(payload.dictionary))
    signal = make_signal(payload_to_matrix(payload.signal).reshape(-1))
    if signal.n != dictionary.n:
        raise InvalidInstance(f"Signal length {signal.n} does not match {dictionary.n} dictionary rows")
    support = Support(tuple(payload.support), dictionary.m) if payload.support is not None else None
    return dictionary, signal, support


def load_instance_csv(path: PathLike) -> Tuple[Dictionary, Signal, Optional[Support]]:
    with open(path, newline="", encoding="utf-8") as handle:
        rows = [row for row in csv.reader(handle) if row]
    try:
        values = np.asarray(rows, dtype=float)
    except ValueError as error:
        raise InvalidInstance(f"{path} has non-numeric cells: {error}")
    if values.ndim != 2 or values.shape[1] < 2:
        raise InvalidInstance(f"{path} needs at least one dictionary column and a signal column")
    return make_dictionary(values[:, :-1]), make_signal(values[:, -1]), None


def save_instance(
    path: Optional[PathLike], dictionary: Dictionary, signal: Signal, support: Optional[Support] = None
) -> None:
    payload = InstancePayload(
        dictionary=matrix_to_payload(dictionary.entries),
        signal=matrix_to_payload(signal.amplitudes),
        support=list(support.indices) if support is not None else None,
    )
    write_text(path, dumps_json(payload.dict()))


def load_x3c(path: PathLike) -> X3CInstance:
    try:
        payload = X3CPayload.parse_obj(_read_json(path))
    except ValidationError as error:
        raise InvalidInstance(f"{path} does not match the X3C format: {error}")
    return make_x3c(payload.N, payload.triples)


def x3c_to_payload(instance: X3CInstance) -> X3CPayload:
    return X3CPayload(N=instance.ground_size, triples=[list(t) for t in instance.triples])
