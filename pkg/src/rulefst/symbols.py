"""Interned symbol alphabets.

Every machine in the package works on integer ids.  Id 0 is reserved for
epsilon; input, output and marker symbols share one dense id space.
"""

EPSILON = 0
EPSILON_NAME = "<eps>"

INPUT = "input"
OUTPUT = "output"
MARKER = "marker"
KINDS = (INPUT, OUTPUT, MARKER)


class SymbolError(ValueError):
    pass


class SymbolTable:
    """Bidirectional name <-> id map with a kind tag per symbol.

    A name used both as an input and an output symbol gets a single id and
    keeps the kind it was first registered with.  Marker names may never be
    shared with any other kind.
    """

    def __init__(self):
        self._names = [EPSILON_NAME]
        self._kinds = ["epsilon"]
        self._ids = {EPSILON_NAME: EPSILON}

    def add(self, name: str, kind: str = INPUT) -> int:
        if kind not in KINDS:
            raise SymbolError(f"unknown symbol kind {kind!r}")
        if not name or any(c.isspace() for c in name):
            raise SymbolError(f"invalid symbol name {name!r}")
        sid = self._ids.get(name)
        if sid is not None:
            if sid == EPSILON:
                raise SymbolError(f"{name!r} is reserved for epsilon")
            old = self._kinds[sid]
            if (old == MARKER) != (kind == MARKER):
                raise SymbolError(f"symbol {name!r} cannot be both {old} and {kind}")
            return sid
        sid = len(self._names)
        self._names.append(name)
        self._kinds.append(kind)
        self._ids[name] = sid
        return sid

    def id(self, name: str) -> int:
        try:
            return self._ids[name]
        except KeyError:
            raise SymbolError(f"unknown symbol {name!r}") from None

    def get(self, name, default=None):
        return self._ids.get(name, default)

    def name(self, sid: int) -> str:
        return self._names[sid]

    def kind(self, sid: int) -> str:
        return self._kinds[sid]

    def ids(self, kind: str) -> list[int]:
        return [i for i, k in enumerate(self._kinds) if k == kind]

    def names(self, ids) -> list[str]:
        return [self._names[i] for i in ids]

    def __contains__(self, name) -> bool:
        return name in self._ids

    def __len__(self) -> int:
        return len(self._names)

    def __iter__(self):
        """Yield ``(id, name, kind)`` for every symbol except epsilon."""
        for i in range(1, len(self._names)):
            yield i, self._names[i], self._kinds[i]

    def __eq__(self, other):
        if not isinstance(other, SymbolTable):
            return NotImplemented
        return self._names == other._names and self._kinds == other._kinds

    def __repr__(self):
        return f"SymbolTable({len(self) - 1} symbols)"
