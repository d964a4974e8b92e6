"""
Finite Set Models

A finite interpretation of a signature: a carrier of integer element ids per
sort, a total table per function symbol and a set of tuples per relation.
"""

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Tuple

from app.models.logic import FunctionSymbol, RelationSymbol, Sort

Element = int
Row = Tuple[Element, ...]


@dataclass(frozen=True, eq=True)
class FiniteModel:
    carriers: Dict[Sort, Tuple[Element, ...]]
    functions: Dict[FunctionSymbol, Dict[Row, Element]] = field(default_factory=dict)
    relations: Dict[RelationSymbol, FrozenSet[Row]] = field(default_factory=dict)

    def carrier(self, sort: Sort) -> Tuple[Element, ...]:
        return self.carriers.get(sort, ())

    def size(self, sort: Sort) -> int:
        return len(self.carrier(sort))

    def describe(self) -> str:
        parts = [f"{s.name}={len(c)}" for s, c in self.carriers.items()]
        for r, rows in self.relations.items():
            parts.append(f"{r.name}={sorted(rows)}")
        for f, table in self.functions.items():
            parts.append(f"{f.name}={dict(sorted(table.items()))}")
        return " ".join(parts)
