# forge_report.py
# Results Workbook Forge
# Turns a result table (FER sweep, wrong-key report, census, attack runs) into a
# styled Excel workbook: a Results sheet plus a Run_Info sheet with the settings.

import logging
import os
from typing import Any, Dict, Optional

import pandas as pd
from openpyxl import Workbook
from openpyxl.formatting.rule import CellIsRule
from openpyxl.styles import Alignment, Font, PatternFill
from openpyxl.utils import get_column_letter
from openpyxl.utils.dataframe import dataframe_to_rows

logger = logging.getLogger(__name__)


# --- STYLES ---
class ReportStyle:
    """Centralized look of forged workbooks."""
    HEADER_FONT = Font(bold=True, color="FFFFFF")
    HEADER_FILL = PatternFill(start_color="305496", end_color="305496", fill_type="solid")
    TITLE_FONT = Font(bold=True, size=14)
    LABEL_FONT = Font(bold=True)
    CENSORED_FILL = PatternFill(start_color="FFC7CE", end_color="FFC7CE", fill_type="solid")
    HIGH_KEY_FILL = PatternFill(start_color="FFEB9C", end_color="FFEB9C", fill_type="solid")

    SCIENTIFIC = "0.00E+00"
    DECIMAL = "0.000"
    SCIENTIFIC_COLUMNS = ("fer", "fer_ci95_low", "fer_ci95_high", "exclusion_rate_low", "exclusion_rate_high")
    DECIMAL_COLUMNS = ("ber", "avg_iterations", "alpha")
    MIN_WIDTH = 10
    MAX_WIDTH = 40


def _style_header(ws, n_cols: int) -> None:
    for col in range(1, n_cols + 1):
        cell = ws.cell(row=1, column=col)
        cell.font = ReportStyle.HEADER_FONT
        cell.fill = ReportStyle.HEADER_FILL
        cell.alignment = Alignment(horizontal="center")


def _fit_columns(ws, frame: pd.DataFrame) -> None:
    for i, name in enumerate(frame.columns, start=1):
        longest = max([len(str(name))] + [len(str(v)) for v in frame[name].head(200)])
        width = min(max(longest + 2, ReportStyle.MIN_WIDTH), ReportStyle.MAX_WIDTH)
        ws.column_dimensions[get_column_letter(i)].width = width


def _flag_rows(ws, frame: pd.DataFrame) -> None:
    last = len(frame) + 1
    columns = list(frame.columns)
    if "censored" in columns:
        letter = get_column_letter(columns.index("censored") + 1)
        ws.conditional_formatting.add(
            f"{letter}2:{letter}{last}",
            CellIsRule(operator="equal", formula=["1"], fill=ReportStyle.CENSORED_FILL),
        )
    for name in ("key_class", "class", "returned_key_class"):
        if name in columns:
            letter = get_column_letter(columns.index(name) + 1)
            ws.conditional_formatting.add(
                f"{letter}2:{letter}{last}",
                CellIsRule(operator="equal", formula=['"high"'], fill=ReportStyle.HIGH_KEY_FILL),
            )


def create_results_sheet(wb: Workbook, frame: pd.DataFrame, title: str = "Results") -> None:
    ws = wb.active
    ws.title = title
    for row in dataframe_to_rows(frame, index=False, header=True):
        ws.append(row)
    _style_header(ws, len(frame.columns))

    for i, name in enumerate(frame.columns, start=1):
        fmt = None
        if name in ReportStyle.SCIENTIFIC_COLUMNS:
            fmt = ReportStyle.SCIENTIFIC
        elif name in ReportStyle.DECIMAL_COLUMNS:
            fmt = ReportStyle.DECIMAL
        if fmt:
            for (cell,) in ws.iter_rows(min_row=2, min_col=i, max_col=i):
                cell.number_format = fmt

    _flag_rows(ws, frame)
    _fit_columns(ws, frame)
    ws.freeze_panes = "A2"
    if len(frame):
        ws.auto_filter.ref = ws.dimensions


def create_run_info_sheet(wb: Workbook, run_info: Dict[str, Any]) -> None:
    ws = wb.create_sheet("Run_Info")
    ws["A1"] = "Run Settings"
    ws["A1"].font = ReportStyle.TITLE_FONT
    row = 3
    for label, value in run_info.items():
        ws[f"A{row}"] = str(label)
        ws[f"A{row}"].font = ReportStyle.LABEL_FONT
        ws[f"B{row}"] = value if isinstance(value, (int, float, str)) else str(value)
        row += 1
    ws.column_dimensions["A"].width = 24
    ws.column_dimensions["B"].width = 60


def forge_workbook(frame: pd.DataFrame, path: str, run_info: Optional[Dict[str, Any]] = None,
                   title: str = "Results") -> str:
    """Writes the workbook and returns its path."""
    wb = Workbook()
    create_results_sheet(wb, frame, title)
    create_run_info_sheet(wb, run_info or {})
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    wb.save(path)
    logger.info(f"Forged workbook {path} ({len(frame)} rows)")
    return path
