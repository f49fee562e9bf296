from dataclasses import asdict
from pathlib import Path
from typing import Any, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel

from qomp_lab.classical_omp import RecoveryResult
from qomp_lab.core import Support
from qomp_lab.qomp import PrecisionBudget, QompRun
from qomp_lab.qsvt import OddPolynomial
from qomp_lab.quantum_primitives import QueryLedger
from qomp_lab.recovery import Certificates, TomographyReport
from qomp_lab.schemas import (
    BudgetExport,
    CertificatesExport,
    ComplexVector,
    LedgerExport,
    LedgerSnapshotExport,
    PolynomialExport,
    RunRecord,
    TomographyReportExport,
)
from qomp_lab.utils import PathLike, dumps_json, format_csv, write_text

RUN_SUMMARY_HEADER = ("solver", "status", "iterations", "support", "residual", "u_s", "u_d", "seed")
SWEEP_HEADER = (
    "trial", "seed", "n", "m", "K", "mu", "eta", "gamma", "epsilon",
    "status", "error", "support_ok", "u_s", "u_d",
)


def ledger_to_export(ledger: QueryLedger) -> LedgerExport:
    return LedgerExport(
        **ledger.totals(),
        per_iteration=[
            LedgerSnapshotExport(label=snapshot.label, counts=dict(snapshot.counts))
            for snapshot in ledger.per_iteration
        ],
    )


def budget_to_export(budget: PrecisionBudget) -> BudgetExport:
    return BudgetExport(**asdict(budget))


def vector_to_export(vector: np.ndarray) -> ComplexVector:
    values = np.asarray(vector, dtype=complex)
    return ComplexVector(real=values.real.tolist(), imag=values.imag.tolist())


def omp_record(
    result: RecoveryResult, seed: Optional[int], planted: Optional[Support] = None
) -> RunRecord:
    return RunRecord(
        solver="omp",
        status=result.status.value,
        support=list(result.support.indices),
        iterations=result.iterations,
        residual_norms=list(result.residual_norms),
        seed=seed,
        coefficients=vector_to_export(result.coefficients),
        planted_support=list(planted.indices) if planted is not None else None,
    )


def qomp_record(run: QompRun, seed: Optional[int], planted: Optional[Support] = None) -> RunRecord:
    result = run.result
    return RunRecord(
        solver="qomp",
        status=result.status.value,
        support=list(result.support.indices),
        iterations=result.iterations,
        residual_norms=list(result.residual_norms),
        seed=seed,
        ledger=ledger_to_export(run.ledger),
        budget=budget_to_export(run.budgets[-1]) if run.budgets else None,
        planted_support=list(planted.indices) if planted is not None else None,
    )


def certificates_to_export(certificates: Certificates) -> CertificatesExport:
    return CertificatesExport(
        mi_condition=certificates.mi_condition,
        erc_value=certificates.erc_value,
        identifiable=certificates.identifiable,
    )


def report_to_export(report: TomographyReport, seed: Optional[int]) -> TomographyReportExport:
    return TomographyReportExport(
        support=list(report.support.indices),
        coefficients=vector_to_export(report.coefficients),
        reconstruction_error=report.reconstruction_error,
        epsilon=report.epsilon,
        success=report.success,
        ledger=ledger_to_export(report.ledger),
        certificates=certificates_to_export(report.certificates),
        budgets=dict(report.budgets),
        seed=seed,
    )


def polynomial_to_export(poly: OddPolynomial) -> PolynomialExport:
    return PolynomialExport(
        chebyshev_coeffs=list(poly.chebyshev_coeffs),
        degree=poly.degree,
        scale=poly.scale,
        region=poly.guarantee.region,
        epsilon=poly.guarantee.epsilon,
    )


def summary_row(record: RunRecord) -> List[Any]:
    ledger = record.ledger
    return [
        record.solver,
        record.status,
        record.iterations,
        " ".join(str(j) for j in record.support),
        record.residual_norms[-1] if record.residual_norms else None,
        ledger.u_s if ledger else None,
        ledger.u_d if ledger else None,
        record.seed,
    ]


def csv_path_for(out: Optional[PathLike]) -> Optional[Path]:
    return None if out is None else Path(out).with_suffix(".csv")


def save_model(path: Optional[PathLike], model: BaseModel) -> None:
    write_text(path, dumps_json(model.dict()))


def save_rows(path: Optional[PathLike], header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    write_text(path, format_csv(header, rows))
