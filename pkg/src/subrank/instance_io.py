"""JSON serialization for ranking instances.

Document layout::

    {
      "n": 6,
      "agents": [
        {"functions": [{"family": "singleton", "params": {"element": 1}, "weight": 1.01}]}
      ],
      "tables": {"t0": [[0, 1], [1, 0]]}        # only when odt functions appear
    }

Family params: coverage -> {items: [{id, w}], covers: {elem: [ids]}};
odt -> {table_ref, row} with table_ref resolved against the top-level
"tables" object; gmsc -> {members: [...], K}; singleton -> {element}.
Unknown families are rejected.
"""

from __future__ import annotations

import json
from typing import IO, Union

from subrank.core import Agent, Instance
from subrank.functions import (
    CoverageFunction,
    GmscFunction,
    GmscSet,
    OdtFunction,
    OdtTable,
    SingletonFunction,
    coverage_function,
    gmsc_function,
    odt_function,
    singleton_function,
)

FAMILIES = ("coverage", "odt", "gmsc", "singleton")


class InstanceFormatError(ValueError):
    """Raised when an instance document is structurally invalid."""


def instance_to_doc(inst: Instance) -> dict:
    tables: dict = {}
    table_refs: dict = {}  # id(table.rows) -> ref
    agents_doc = []
    for agent in inst.agents:
        funcs_doc = []
        for oracle, weight in agent.functions:
            if isinstance(oracle, CoverageFunction):
                family, params = "coverage", oracle.to_params()
            elif isinstance(oracle, OdtFunction):
                rows = oracle.table.rows
                key = rows  # tuples hash by content, deduping identical tables
                if key not in table_refs:
                    table_refs[key] = f"t{len(table_refs)}"
                    tables[table_refs[key]] = [list(r) for r in rows]
                family = "odt"
                params = {"table_ref": table_refs[key], "row": oracle.row}
            elif isinstance(oracle, GmscFunction):
                family, params = "gmsc", oracle.to_params()
            elif isinstance(oracle, SingletonFunction):
                family, params = "singleton", oracle.to_params()
            else:
                raise InstanceFormatError(
                    f"oracle type {type(oracle).__name__} has no JSON family"
                )
            funcs_doc.append({"family": family, "params": params, "weight": weight})
        agents_doc.append({"functions": funcs_doc})
    doc = {"n": inst.n, "agents": agents_doc}
    if tables:
        doc["tables"] = tables
    return doc


def doc_to_instance(doc: dict) -> Instance:
    try:
        n = int(doc["n"])
        agents_doc = doc["agents"]
    except (KeyError, TypeError) as exc:
        raise InstanceFormatError(f"missing or malformed field: {exc}") from exc
    tables = {
        ref: OdtTable(rows=tuple(tuple(r) for r in rows))
        for ref, rows in doc.get("tables", {}).items()
    }
    agents = []
    for i, agent_doc in enumerate(agents_doc, start=1):
        funcs = []
        for f_doc in agent_doc.get("functions", []):
            family = f_doc.get("family")
            params = f_doc.get("params", {})
            weight = float(f_doc["weight"])
            if weight <= 0:
                raise InstanceFormatError(f"agent {i}: nonpositive weight {weight}")
            funcs.append((_build_oracle(family, params, tables, i), weight))
        agents.append(Agent(id=i, functions=tuple(funcs)))
    return Instance(n=n, agents=tuple(agents))


def _build_oracle(family, params, tables, agent_index):
    if family == "coverage":
        items = [(item["id"], item["w"]) for item in params["items"]]
        covers = {int(e): ids for e, ids in params["covers"].items()}
        return coverage_function(items, covers)
    if family == "odt":
        ref = params["table_ref"]
        if ref not in tables:
            raise InstanceFormatError(f"agent {agent_index}: unknown table_ref {ref!r}")
        return odt_function(tables[ref], int(params["row"]))
    if family == "gmsc":
        return gmsc_function(GmscSet(members=frozenset(params["members"]), K=int(params["K"])))
    if family == "singleton":
        return singleton_function(int(params["element"]))
    raise InstanceFormatError(f"agent {agent_index}: unknown family {family!r}")


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def save_instance(inst: Instance, path_or_file: Union[str, IO]) -> None:
    text = dumps(instance_to_doc(inst))
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w") as fh:
            fh.write(text)


def load_instance(path_or_file: Union[str, IO]) -> Instance:
    if hasattr(path_or_file, "read"):
        doc = json.load(path_or_file)
    else:
        with open(path_or_file) as fh:
            doc = json.load(fh)
    return doc_to_instance(doc)
