"""
Comparison table over run summaries: one row per method with accuracy
mean and std over seeds, total TFLOPs and FLOPs saved against the
reference method.
"""
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import pandas as pd
from tabulate import tabulate

from helpers.errors import ReportError
from py_models.run_summary import RunSummary

REFERENCE_METHOD = 'full'
REPORT_COLUMNS = ['method', 'runs', 'accuracy_mean', 'accuracy_std', 'total_tflops', 'flops_saved_pct']


class ReportGenerator:

    def __init__(self, summaries: Sequence[RunSummary], reference: Optional[str] = None):
        if not summaries:
            raise ReportError("report needs at least one run summary")
        setups = {s.setup_digest for s in summaries}
        if len(setups) > 1:
            raise ReportError(f"summaries come from {len(setups)} different setups (network, task or training "
                              f"length differ) and cannot be compared")
        self.summaries = list(summaries)
        self.reference = reference

    @classmethod
    def from_paths(cls, paths: Iterable[Union[str, Path]], reference: Optional[str] = None) -> 'ReportGenerator':
        return cls([RunSummary.read(p) for p in paths], reference)

    def frame(self) -> pd.DataFrame:
        runs = pd.DataFrame([{'method': s.method, 'accuracy': s.final_test_accuracy, 'flops': s.total_flops}
                             for s in self.summaries])
        grouped = runs.groupby('method', sort=True)
        table = pd.DataFrame({
            'runs': grouped.size(),
            'accuracy_mean': grouped['accuracy'].mean(),
            # sample std; a single run has none
            'accuracy_std': grouped['accuracy'].std(ddof=1).fillna(0.0),
            'flops_mean': grouped['flops'].mean(),
        })
        reference = self.reference or (REFERENCE_METHOD if REFERENCE_METHOD in table.index
                                       else table['flops_mean'].idxmax())
        if reference not in table.index:
            raise ReportError(f"reference method {reference!r} has no runs")
        base = table.loc[reference, 'flops_mean']
        table['total_tflops'] = table['flops_mean'] / 1e12
        table['flops_saved_pct'] = 0.0 if base == 0 else 100.0 * (1.0 - table['flops_mean'] / base)
        return table.reset_index()[REPORT_COLUMNS]

    def render(self) -> str:
        frame = self.frame()
        rows = [[r.method, r.runs, f"{100 * r.accuracy_mean:.2f} ± {100 * r.accuracy_std:.2f}",
                 f"{r.total_tflops:.6f}", f"{r.flops_saved_pct:.1f}"] for r in frame.itertuples()]
        return tabulate(rows, headers=['Method', 'Runs', 'Accuracy (%)', 'Total TFLOPs', 'FLOPs saved (%)'],
                        tablefmt='grid', disable_numparse=True)

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.render() + '\n', encoding='utf-8')
        return path


def report(paths: List[Union[str, Path]], reference: Optional[str] = None) -> str:
    return ReportGenerator.from_paths(paths, reference).render()
