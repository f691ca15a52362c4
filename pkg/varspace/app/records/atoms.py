import json
from typing import Any, Dict, List

import numpy as np

from app.dictionaries.atoms import Atom, BarronAtom, PolynomialRidgeAtom, RidgeAtom, SpectralAtom
from app.errors import ConfigurationError
from app.varnorm.combination import SparseCombination

RECORD_NAME = "combination.json"


def atom_to_record(atom: Atom) -> Dict[str, Any]:
    """Plain-JSON description of an atom"""
    if isinstance(atom, RidgeAtom):
        return {"family": "P_k", "k": atom.k, "omega": list(atom.omega), "b": atom.b}
    if isinstance(atom, SpectralAtom):
        return {"family": "F_s", "s": atom.s, "xi": list(atom.xi)}
    if isinstance(atom, BarronAtom):
        return {"family": "B", "omega": list(atom.omega), "b": atom.b}
    if isinstance(atom, PolynomialRidgeAtom):
        return {"family": "poly", "degree": atom.degree, "omega": list(atom.omega), "b": atom.b}
    raise TypeError(f"no record format for {type(atom).__name__}")


def atom_from_record(record: Dict[str, Any]) -> Atom:
    family = record.get("family")
    try:
        if family == "P_k":
            return RidgeAtom(int(record["k"]), record["omega"], record["b"])
        if family == "F_s":
            return SpectralAtom(record["s"], record["xi"])
        if family == "B":
            return BarronAtom(record["omega"], record["b"])
        if family == "poly":
            return PolynomialRidgeAtom(int(record["degree"]), record["omega"], record["b"])
    except KeyError as e:
        raise ConfigurationError(f"atom record is missing {e}", loc=f"atoms.{e.args[0]}") from e
    raise ConfigurationError(f"unknown atom family '{family}'", loc="atoms.family")


def _coefficient_to_record(value):
    if np.iscomplexobj(value):
        return {"re": float(np.real(value)), "im": float(np.imag(value))}
    return float(value)


def _coefficient_from_record(value):
    if isinstance(value, dict):
        return complex(value["re"], value["im"])
    return float(value)


def combination_to_record(combination: SparseCombination) -> Dict[str, Any]:
    return {
        "atoms": [atom_to_record(atom) for atom in combination.atoms],
        "coefficients": [_coefficient_to_record(c) for c in combination.coefficients],
        "mass": combination.mass,
    }


def combination_from_record(record: Dict[str, Any]) -> SparseCombination:
    atoms: List[Atom] = [atom_from_record(r) for r in record.get("atoms", [])]
    values = [_coefficient_from_record(c) for c in record.get("coefficients", [])]
    if len(values) != len(atoms):
        raise ConfigurationError(
            f"{len(atoms)} atoms but {len(values)} coefficients", loc="combination.coefficients"
        )
    dtype = complex if any(isinstance(v, complex) for v in values) else float
    return SparseCombination(tuple(atoms), np.array(values, dtype=dtype))


def save_combination(store, combination: SparseCombination, name: str = RECORD_NAME) -> str:
    return store.write_json(name, combination_to_record(combination))


def load_combination(path: str) -> SparseCombination:
    """Read a combination file written by save_combination"""
    try:
        with open(path, encoding="utf-8") as handle:
            record = json.load(handle)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"cannot read combination file '{path}': {e}", loc="target.path") from e
    return combination_from_record(record)
