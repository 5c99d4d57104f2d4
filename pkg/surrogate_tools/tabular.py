"""
Interfaces:
* ResultTable - rows of metrics, evaluation reports and sweep summaries.
    While iterating, every column is readable as a property of the yielded table.

USAGE EXAMPLE:

    table = ResultTable([('burgers', 0.01, 0.12), ('burgers', 0.1, 0.05)], ['kind', 'param', 'nrmse'])
    for row in table:
        print(row.kind, row.param, row.nrmse)
    for (kind, ), group in table.grouped('kind'):
        print(kind, group.extract_column('nrmse'))
    table.write_csv('report.csv')
"""
from collections import OrderedDict
from typing import Any, Dict, Iterator, List, Sequence, Tuple

from surrogate_tools.misc import write_to_io

__all__ = ('ResultTable', )

RESERVED = ('rows', 'cols', 'raw')


def _column(idx: int) -> property:
    return property(lambda table: table.raw[idx])


class ResultTable:

    def __new__(cls, rows, cols):
        clash = sorted(set(cols) & (set(dir(cls)) | set(RESERVED)))
        if clash:
            raise ValueError('Column names {} are reserved'.format(clash))
        columns = {name: _column(idx) for idx, name in enumerate(cols)}
        return object.__new__(type('{}Rows'.format(cls.__name__), (cls, ), columns))

    def __init__(self, rows: Sequence[Sequence], cols: Sequence[str]):
        if len(set(cols)) != len(cols):
            raise ValueError('Duplicated column names in {}'.format(list(cols)))
        self.cols = tuple(cols)
        self.rows = []  # type: List[Tuple]
        self.raw = None
        for row in rows:
            self.append(row)

    def __repr__(self):
        return 'ResultTable({} rows x {})'.format(len(self.rows), ','.join(self.cols))

    def __iter__(self) -> Iterator['ResultTable']:
        for row in self.rows:
            self.raw = row
            yield self

    def __len__(self):
        return len(self.rows)

    def __eq__(self, other):
        return isinstance(other, ResultTable) and (self.cols, self.rows) == (other.cols, other.rows)

    def _new(self, rows) -> 'ResultTable':
        return ResultTable(rows, self.cols)

    def _idx(self, col: str) -> int:
        if col not in self.cols:
            raise ValueError('Unknown column "{}", table has {}'.format(col, list(self.cols)))
        return self.cols.index(col)

    def append(self, row: Sequence):
        if len(row) != len(self.cols):
            raise ValueError('Row of {} values for {} columns'.format(len(row), len(self.cols)))
        self.rows.append(tuple(row))

    def extend(self, other: 'ResultTable'):
        if not isinstance(other, ResultTable):
            raise TypeError('Cannot extend a table with {}'.format(type(other).__name__))
        if other.cols != self.cols:
            raise ValueError('Columns differ: {} vs {}'.format(self.cols, other.cols))
        self.rows.extend(other.rows)

    def extract_column(self, column: str) -> List:
        idx = self._idx(column)
        return [row[idx] for row in self.rows]

    def sorted_by(self, *cols: str) -> 'ResultTable':
        idxs = [self._idx(col) for col in cols]
        return self._new(sorted(self.rows, key=lambda row: [row[i] for i in idxs]))

    def filtered(self, **conditions) -> 'ResultTable':
        """ Rows whose columns equal every given value """
        checks = [(self._idx(col), value) for col, value in conditions.items()]
        return self._new(row for row in self.rows if all(row[i] == value for i, value in checks))

    def grouped(self, *cols: str) -> List[Tuple[Tuple, 'ResultTable']]:
        """ (key values, sub-table) per distinct key, in order of first appearance """
        idxs = [self._idx(col) for col in cols]
        groups = OrderedDict()  # type: Dict[Tuple, List[Tuple]]
        for row in self.rows:
            groups.setdefault(tuple(row[i] for i in idxs), []).append(row)
        return [(key, self._new(rows)) for key, rows in groups.items()]

    def to_dicts(self, cols: Sequence[str] = None) -> Iterator[Dict[str, Any]]:
        cols = list(cols or self.cols)
        idxs = [self._idx(col) for col in cols]
        return (dict(zip(cols, (row[i] for i in idxs))) for row in self.rows)

    def write_csv(self, filename: str):
        with open(filename, 'w', encoding='utf-8') as f:
            write_to_io(f, *self.cols)
            for row in self.rows:
                write_to_io(f, *row)
