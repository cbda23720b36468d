from __future__ import annotations

import pandas as pd
from openpyxl import load_workbook

from forge_report import forge_workbook


def test_forged_workbook_layout(tmp_path):
    frame = pd.DataFrame({
        "key": ["", "0a", "1f"],
        "class": ["baseline", "low", "high"],
        "ber": [0.03, 0.03, 0.03],
        "fer": [1e-3, 2e-3, 0.5],
        "censored": [0, 1, 0],
    })
    path = forge_workbook(frame, str(tmp_path / "out" / "wrongkeys.xlsx"), {"seed": 7, "grid": [0.03]}, "Wrong_Keys")

    wb = load_workbook(path)
    assert wb.sheetnames == ["Wrong_Keys", "Run_Info"]
    ws = wb["Wrong_Keys"]
    assert [c.value for c in ws[1]] == list(frame.columns)
    assert ws.freeze_panes == "A2"
    assert ws["D2"].number_format == "0.00E+00"
    assert ws["C4"].value == 0.03
    assert len(list(ws.conditional_formatting)) == 2

    info = wb["Run_Info"]
    assert info["A3"].value == "seed"
    assert info["B3"].value == 7
    assert info["B4"].value == "[0.03]"


def test_empty_frame_still_writes(tmp_path):
    frame = pd.DataFrame(columns=["ber", "fer"])
    path = forge_workbook(frame, str(tmp_path / "empty.xlsx"))
    assert load_workbook(path)["Results"]["A1"].value == "ber"
