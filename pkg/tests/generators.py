"""Random snippet generators for the fuzz-style suites.

Well-formed snippets are built type-directed over a fixed host scope, so
their expected type is known by construction. Ill-formed snippets take a
well-formed one and break it in a way agents commonly do (bad name, bad
final type, bad arity, bad argument, non-exhaustive match), prefixed with
state mutations that must never fire.
"""

from __future__ import annotations

import random

HOST_SETUP = """
var counter: Int = 0
var note: String = "start"
val a = 7
val b = 3
val s1 = "delta"
val flag = true
val xs = List(1, 2, 3, 4)
def twice(n: Int): Int = n * 2
enum Mode { case Fast, Slow, Safe }
val mode = Mode.Fast
"""

INT_LEAVES = ["1", "2", "5", "a", "b", "counter", "xs.size", "s1.size", "twice(b)"]
BOOL_LEAVES = ["true", "false", "flag", "a > b", "a == 7", "s1.contains(\"el\")"]
STRING_LEAVES = ['"lit"', "s1", "note", "s1.toUpperCase", "s1.trim"]


def gen_int(rng: random.Random, depth: int = 0) -> str:
    if depth >= 3 or rng.random() < 0.4:
        return rng.choice(INT_LEAVES)
    kind = rng.randrange(6)
    if kind == 0:
        return f"({gen_int(rng, depth + 1)} + {gen_int(rng, depth + 1)})"
    if kind == 1:
        return f"({gen_int(rng, depth + 1)} - {gen_int(rng, depth + 1)})"
    if kind == 2:
        return f"({gen_int(rng, depth + 1)} * {gen_int(rng, depth + 1)})"
    if kind == 3:
        return (f"(if ({gen_bool(rng, depth + 1)}) {gen_int(rng, depth + 1)} "
                f"else {gen_int(rng, depth + 1)})")
    if kind == 4:
        return f"twice({gen_int(rng, depth + 1)})"
    return f"{gen_list(rng, depth + 1)}.size"


def gen_bool(rng: random.Random, depth: int = 0) -> str:
    if depth >= 3 or rng.random() < 0.5:
        return rng.choice(BOOL_LEAVES)
    kind = rng.randrange(4)
    if kind == 0:
        return f"({gen_int(rng, depth + 1)} < {gen_int(rng, depth + 1)})"
    if kind == 1:
        return f"({gen_bool(rng, depth + 1)} && {gen_bool(rng, depth + 1)})"
    if kind == 2:
        return f"({gen_bool(rng, depth + 1)} || {gen_bool(rng, depth + 1)})"
    return f"!{gen_bool(rng, depth + 1)}"


def gen_string(rng: random.Random, depth: int = 0) -> str:
    if depth >= 3 or rng.random() < 0.5:
        return rng.choice(STRING_LEAVES)
    kind = rng.randrange(3)
    if kind == 0:
        return f"({gen_string(rng, depth + 1)} + {gen_string(rng, depth + 1)})"
    if kind == 1:
        return f's"v=${{{gen_int(rng, depth + 1)}}}"'
    return (f"(if ({gen_bool(rng, depth + 1)}) {gen_string(rng, depth + 1)} "
            f"else {gen_string(rng, depth + 1)})")


def gen_list(rng: random.Random, depth: int = 0) -> str:
    if depth >= 2 or rng.random() < 0.4:
        return rng.choice(["xs", "List(1, 2)", "(1 to 4)"])
    kind = rng.randrange(4)
    if kind == 0:
        return f"{gen_list(rng, depth + 1)}.map((x: Int) => x + {gen_int(rng, depth + 1)})"
    if kind == 1:
        return f"{gen_list(rng, depth + 1)}.filter((x: Int) => x > {rng.randrange(4)})"
    if kind == 2:
        return f"{gen_list(rng, depth + 1)}.take({rng.randrange(5)})"
    return f"{gen_list(rng, depth + 1)}.reverse"


GEN_BY_TYPE = {
    "Int": gen_int,
    "Bool": gen_bool,
    "String": gen_string,
    "List[Int]": gen_list,
}


def gen_well_formed(rng: random.Random) -> tuple[str, str]:
    """(snippet, expected type). May open with benign local statements."""
    expected = rng.choice(list(GEN_BY_TYPE))
    lines = []
    if rng.random() < 0.5:
        lines.append(f"val tmp = {gen_int(rng, 1)}")
        lines.append(f"val msg = {gen_string(rng, 1)}")
    lines.append(GEN_BY_TYPE[expected](rng))
    return "\n".join(lines), expected


MUTATIONS = [
    "counter += 1",
    "counter = counter * 2 + 1",
    'note = "mutated"',
    'setMemory("probe", "fired")',
]


def gen_ill_formed(rng: random.Random) -> tuple[str, str]:
    """(snippet, expected type): statically rejectable code behind one or
    two effectful statements that must never run."""
    prefix = rng.sample(MUTATIONS, k=rng.randrange(1, 3))
    expected = rng.choice(["Int", "String", "Bool"])
    flaw = rng.randrange(6)
    if flaw == 0:  # undefined name
        body = [f"ghost_{rng.randrange(100)} + 1"]
        expected = "Int"
    elif flaw == 1:  # wrong final type
        body = [f's"x=${{{gen_int(rng, 1)}}}"']
        expected = "Int"
    elif flaw == 2:  # ill-typed local binding
        body = [f'val bad: Int = {gen_string(rng, 1)}', gen_int(rng, 1)]
        expected = "Int"
    elif flaw == 3:  # wrong arity
        body = ["twice(1, 2)"]
        expected = "Int"
    elif flaw == 4:  # wrong argument type
        body = [f"twice({gen_string(rng, 1)})"]
        expected = "Int"
    else:  # non-exhaustive match
        body = ['mode match {\n  case Mode.Fast => "f"\n}']
        expected = "String"
    return "\n".join(prefix + body), expected
