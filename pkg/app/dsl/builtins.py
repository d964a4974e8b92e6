"""
Builtin theories shipped with the package

The ``euclidean`` theory treats betweenness, congruence, apartness and
non-betweenness as primary observable relations, with a starter axiom set
(not a complete axiomatization of plane geometry).
"""

from functools import lru_cache
from pathlib import Path
from typing import Tuple, Union

from app.core.exceptions import ConfigurationException
from app.core.logger import get_logger
from app.dsl.parser import Source, parse_theory, parse_theory_file
from app.dsl.source import SourceFile
from app.models.logic import Signature, Theory
from app.services.logic import extend_theory

logger = get_logger(__name__)

THEORY_DIR = Path(__file__).parent / "theories"
_BUILTINS = ("euclidean", "graph_sym", "graph_sym_trans")
_EXTENSIONS = ("ag_aliases",)


def builtin_ids() -> Tuple[str, ...]:
    return _BUILTINS


@lru_cache(maxsize=None)
def builtin_theory(theory_id: str) -> Theory:
    if theory_id not in _BUILTINS:
        raise ConfigurationException(
            "theory", f"unknown builtin theory '{theory_id}' (choose from {', '.join(_BUILTINS)})"
        )
    return parse_theory_file(THEORY_DIR / f"{theory_id}.obs")


def euclidean_theory() -> Theory:
    return builtin_theory("euclidean")


def load_extension(theory: Theory, src: Source) -> Theory:
    """
    Extend ``theory`` with the declarations of an extension file

    The extension may use the symbols of ``theory`` but not redeclare them.
    The result keeps ``theory``'s axioms, adds the extension's own and is
    named ``<theory>+<extension>``.
    """
    ext = parse_theory(src, base=theory.signature, default_id="extension")
    base = theory.signature
    delta = Signature(
        sorts=tuple(s for s in ext.signature.sorts if s not in base.sorts),
        functions=tuple(f for f in ext.signature.functions if f not in base.functions),
        relations=tuple(r for r in ext.signature.relations if r not in base.relations),
    )
    extended = extend_theory(theory, delta, theory_id=f"{theory.id}+{ext.id}")
    logger.info(
        "signature_extended",
        theory=theory.id,
        extension=ext.id,
        sorts=len(delta.sorts),
        functions=len(delta.functions),
        relations=len(delta.relations),
    )
    return Theory(extended.id, extended.signature, theory.axioms + ext.axioms)


def ag_aliases_theory() -> Theory:
    """The Euclidean theory extended with the construct aliases (perp, coll, cyclic, midpoint)"""
    return load_extension(euclidean_theory(), SourceFile.from_path(THEORY_DIR / "ag_aliases.obs"))


def resolve_theory(ref: Union[str, Path]) -> Theory:
    """A theory from a ``.obs`` path, a builtin id or a builtin extension id"""
    path = Path(ref)
    if path.suffix == ".obs" or path.exists():
        return parse_theory_file(path)
    name = str(ref)
    if name in _EXTENSIONS:
        return ag_aliases_theory()
    return builtin_theory(name)
