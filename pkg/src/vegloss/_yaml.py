"""YAML loading that keeps source line numbers for error messages."""

import yaml

from .errors import ParseError


class Node(dict):
    """Mapping that remembers the 1-based line of itself and of each key."""

    def __init__(self, line):
        super().__init__()
        self.line = line
        self.key_lines = {}


class Seq(list):
    def __init__(self, line):
        super().__init__()
        self.line = line


def _convert(node, source):
    if isinstance(node, yaml.MappingNode):
        out = Node(node.start_mark.line + 1)
        for key_node, value_node in node.value:
            key = _convert(key_node, source)
            if not isinstance(key, str):
                raise ParseError(f"non-string key {key!r}", source, key_node.start_mark.line + 1)
            if key in out:
                raise ParseError(f"duplicate key {key!r}", source, key_node.start_mark.line + 1)
            out[key] = _convert(value_node, source)
            out.key_lines[key] = key_node.start_mark.line + 1
        return out
    if isinstance(node, yaml.SequenceNode):
        out = Seq(node.start_mark.line + 1)
        out.extend(_convert(v, source) for v in node.value)
        return out
    # scalars: let the safe constructor resolve ints/floats/bools
    return _construct_scalar(node)


def _construct_scalar(node):
    loader = yaml.SafeLoader("")
    try:
        return loader.construct_object(node, deep=True)
    finally:
        loader.dispose()


def load(text, source="<string>"):
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        problem = getattr(exc, "problem", None) or str(exc)
        raise ParseError(f"invalid YAML: {problem}", source, line) from None
    if root is None:
        raise ParseError("empty document", source, 1)
    return _convert(root, source)


def check_keys(node, required, optional=(), source=None, what="section"):
    if not isinstance(node, Node):
        raise ParseError(f"{what} must be a mapping", source, getattr(node, "line", None))
    unknown = [k for k in node if k not in required and k not in optional]
    if unknown:
        k = unknown[0]
        raise ParseError(f"unknown key {k!r} in {what}", source, node.key_lines[k])
    for k in required:
        if k not in node:
            raise ParseError(f"missing key {k!r} in {what}", source, node.line)


def number(node, key, source, positive=False, allow_zero=True):
    value = node[key]
    line = node.key_lines.get(key, node.line)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{key!r} must be a number, got {value!r}", source, line)
    value = float(value)
    if value != value or value in (float("inf"), float("-inf")):
        raise ParseError(f"{key!r} must be finite", source, line)
    if positive and (value < 0 or (value == 0 and not allow_zero)):
        raise ParseError(f"{key!r} must be positive", source, line)
    return value


def text(node, key, source):
    value = node[key]
    if not isinstance(value, (str, int)) or isinstance(value, bool):
        raise ParseError(f"{key!r} must be text", source, node.key_lines.get(key, node.line))
    return str(value)
