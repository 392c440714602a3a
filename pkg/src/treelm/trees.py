"""Bracketed treebank reading, headword percolation and binarization.

Trees come in two flavours. ``RawTree`` is what the bracketed file gives
us: labels, children, words at the leaves. ``HeadedTree`` is the model's
input representation: every node carries a head (word, POS tag, leaf
index) and a span, and after ``binarize`` every node has at most two
children. Intermediate nodes introduced by binarization carry the primed
label of their parent (``NP`` spawns ``NP'``).
"""

from __future__ import annotations

from typing import Iterable, Iterator, Optional


class TreebankError(ValueError):
    """Malformed bracketed input or structurally invalid tree."""


class RuleFileError(ValueError):
    """Malformed percolation or binarization rule file."""


class RawTree:
    """A node of a plain bracketed parse tree."""

    __slots__ = ("label", "children", "word")

    def __init__(self, label, children=None, word=None):
        self.label = label
        self.children = children if children is not None else []
        self.word = word

    def is_leaf(self):
        return self.word is not None

    def leaves(self):
        """Yield (word, tag) pairs left to right."""
        if self.is_leaf():
            yield (self.word, self.label)
        else:
            for child in self.children:
                yield from child.leaves()

    def words(self):
        return [w for w, _ in self.leaves()]

    def __repr__(self):
        return "RawTree(%s)" % write_tree(self)

    def __eq__(self, other):
        if not isinstance(other, RawTree):
            return NotImplemented
        return (self.label == other.label and self.word == other.word
                and self.children == other.children)


class HeadedTree:
    """A head-annotated (and, after binarize, at most binary) node.

    ``head_word``/``head_tag`` are the percolated headword and its POS
    tag; ``head_index`` is the leaf position of the headword, which keeps
    head identity unambiguous when a word occurs twice. ``span`` is the
    [start, end) range of covered leaf positions.
    """

    __slots__ = ("label", "children", "word", "head_word", "head_tag",
                 "head_index", "span")

    def __init__(self, label, children=None, word=None,
                 head_word=None, head_tag=None, head_index=None, span=None):
        self.label = label
        self.children = children if children is not None else []
        self.word = word
        self.head_word = head_word
        self.head_tag = head_tag
        self.head_index = head_index
        self.span = span

    def is_leaf(self):
        return self.word is not None

    @property
    def head(self):
        return (self.head_word, self.head_tag)

    def leaves(self):
        if self.is_leaf():
            yield self
        else:
            for child in self.children:
                yield from child.leaves()

    def words(self):
        return [leaf.word for leaf in self.leaves()]

    def tags(self):
        return [leaf.label for leaf in self.leaves()]

    def __repr__(self):
        return "HeadedTree(%s)" % write_headed_tree(self)

    def __eq__(self, other):
        if not isinstance(other, HeadedTree):
            return NotImplemented
        return (self.label == other.label and self.word == other.word
                and self.head_word == other.head_word
                and self.head_tag == other.head_tag
                and self.head_index == other.head_index
                and self.children == other.children)


# ---------------------------------------------------------------------------
# reading and writing bracketed text


def _tokenize(text):
    """Yield (token, line, column) over a bracketed stream."""
    line, col = 1, 0
    buf = []
    buf_pos = None
    for ch in text:
        col += 1
        if ch == "\n":
            line += 1
            col = 0
        if ch in "()" or ch.isspace():
            if buf:
                yield ("".join(buf), buf_pos[0], buf_pos[1])
                buf = []
                buf_pos = None
            if ch in "()":
                yield (ch, line, col)
        else:
            if not buf:
                buf_pos = (line, col)
            buf.append(ch)
    if buf:
        yield ("".join(buf), buf_pos[0], buf_pos[1])


def _strip_label(label):
    """Drop PTB function tags and indices: NP-SBJ-1 -> NP, NP=2 -> NP.

    Labels that start with '-' (-LRB-, -NONE-) are kept whole so the
    bracket POS tags survive.
    """
    if label.startswith("-"):
        return label
    for sep in ("-", "="):
        pos = label.find(sep)
        if pos > 0:
            label = label[:pos]
    return label


def _normalize(tree):
    """Strip traces and function tags; return None for empty subtrees."""
    if tree.is_leaf():
        if tree.label == "-NONE-":
            return None
        return RawTree(_strip_label(tree.label), word=tree.word)
    children = []
    for child in tree.children:
        kept = _normalize(child)
        if kept is not None:
            children.append(kept)
    if not children:
        return None
    return RawTree(_strip_label(tree.label), children)


def read_treebank(text, normalize=True):
    """Parse bracketed (Penn-style) text into a list of RawTree.

    One tree per top-level bracketed group. An outer wrapping pair of
    parentheses around a sentence (a group whose label is empty and that
    holds a single subtree) is unwrapped. With ``normalize`` (the
    default), trace leaves (-NONE-) are deleted and function-tag
    suffixes are stripped from labels.

    Raises TreebankError with line/column on unbalanced parentheses or
    on a leaf without a word.
    """
    trees = []
    stack = []  # (label, children, line, col); label None until first token
    last = (1, 0)
    for tok, line, col in _tokenize(text):
        last = (line, col)
        if tok == "(":
            stack.append([None, [], line, col])
        elif tok == ")":
            if not stack:
                raise TreebankError(
                    "unbalanced parentheses: unexpected ')' at line %d, column %d"
                    % (line, col))
            label, children, oline, ocol = stack.pop()
            if label is None and len(children) == 1:
                node = children[0]  # outer wrapping pair
            elif label is None:
                raise TreebankError(
                    "unlabeled group with %d children at line %d, column %d"
                    % (len(children), oline, ocol))
            elif not children:
                raise TreebankError(
                    "leaf '%s' without a word at line %d, column %d"
                    % (label, oline, ocol))
            else:
                node = RawTree(label, children)
            if stack:
                stack[-1][1].append(node)
            else:
                trees.append(node)
        else:
            if not stack:
                raise TreebankError(
                    "token '%s' outside parentheses at line %d, column %d"
                    % (tok, line, col))
            if stack[-1][0] is None and not stack[-1][1]:
                stack[-1][0] = tok
            elif stack[-1][0] is not None and not stack[-1][1]:
                # second bare token inside a group: (TAG word)
                stack[-1][1] = [RawTree(stack[-1][0], word=tok)]
                stack[-1][0] = "\x00leaf"
            elif stack[-1][0] == "\x00leaf":
                raise TreebankError(
                    "more than one word under a preterminal at line %d, column %d"
                    % (line, col))
            else:
                raise TreebankError(
                    "bare token '%s' mixed with subtrees at line %d, column %d"
                    % (tok, line, col))
    if stack:
        raise TreebankError(
            "unbalanced parentheses: %d unclosed '(' at end of input "
            "(last token near line %d, column %d)" % (len(stack), *last))

    out = []
    for tree in trees:
        if tree.label == "\x00leaf":
            tree = tree.children[0]
        tree = _unwrap_leaf_markers(tree)
        if normalize:
            tree = _normalize(tree)
            if tree is None:
                raise TreebankError("sentence empty after trace removal")
        out.append(tree)
    return out


def _unwrap_leaf_markers(tree):
    if tree.label == "\x00leaf":
        return tree.children[0]
    tree.children = [_unwrap_leaf_markers(c) for c in tree.children]
    return tree


def write_tree(tree):
    """Serialize a RawTree back to single-line bracketed text."""
    if tree.is_leaf():
        return "(%s %s)" % (tree.label, tree.word)
    return "(%s %s)" % (tree.label, " ".join(write_tree(c) for c in tree.children))


HEAD_SEP = "~"


def write_headed_tree(tree):
    """Serialize a HeadedTree; internal labels become label~i~headword~headtag.

    ``i`` is the position of the head child, so reading back never has
    to guess between two children that happen to share the same head
    pair.
    """
    if tree.is_leaf():
        return "(%s %s)" % (tree.label, tree.word)
    child_pos = None
    for i, child in enumerate(tree.children):
        if child.head_index == tree.head_index:
            child_pos = i
            break
    if child_pos is None:
        raise TreebankError("head index %d of %r is outside its children"
                            % (tree.head_index, tree.label))
    label = HEAD_SEP.join((tree.label, str(child_pos), tree.head_word,
                           tree.head_tag))
    return "(%s %s)" % (label,
                        " ".join(write_headed_tree(c) for c in tree.children))


def read_headed_trees(text):
    """Parse the output of write_headed_tree back into HeadedTree objects."""
    return [_rehead(t) for t in read_treebank(text, normalize=False)]


def _rehead(raw, next_index=None):
    if next_index is None:
        next_index = [0]
    if raw.is_leaf():
        idx = next_index[0]
        next_index[0] += 1
        return HeadedTree(raw.label, word=raw.word, head_word=raw.word,
                          head_tag=raw.label, head_index=idx, span=(idx, idx + 1))
    parts = raw.label.split(HEAD_SEP)
    if len(parts) != 4:
        raise TreebankError("internal node label %r lacks %schild%sword%stag "
                            "annotation" % ((raw.label,) + (HEAD_SEP,) * 3))
    label, pos_text, head_word, head_tag = parts
    children = [_rehead(c, next_index) for c in raw.children]
    span = (children[0].span[0], children[-1].span[1])
    try:
        head_child = children[int(pos_text)]
    except (ValueError, IndexError):
        raise TreebankError("bad head child position %r under %r"
                            % (pos_text, label)) from None
    if (head_child.head_word, head_child.head_tag) != (head_word, head_tag):
        raise TreebankError(
            "node %r names head (%s, %s) but child %s carries (%s, %s)"
            % (label, head_word, head_tag, pos_text,
               head_child.head_word, head_child.head_tag))
    return HeadedTree(label, children, head_word=head_word, head_tag=head_tag,
                      head_index=head_child.head_index, span=span)


# ---------------------------------------------------------------------------
# percolation rules

LEFT_TO_RIGHT = "left-to-right"
RIGHT_TO_LEFT = "right-to-left"

_DIRECTIONS = {
    LEFT_TO_RIGHT: LEFT_TO_RIGHT,
    RIGHT_TO_LEFT: RIGHT_TO_LEFT,
    "ltr": LEFT_TO_RIGHT,
    "rtl": RIGHT_TO_LEFT,
}

DEFAULT_RULE_KEY = "DEFAULT"


class PercolationRuleSet:
    """Head-finding rules: per parent label a search direction and a
    priority list of child labels.

    The head child of ``Z -> Y_1 .. Y_n`` is found by scanning the
    priority list outermost; for each priority label the children are
    scanned in the rule's direction and the first match wins. When
    nothing matches (or no rule names the parent) the default rule
    applies; its final fallback is the rightmost child, which keeps the
    rule set total.
    """

    def __init__(self, rules=None, default=(RIGHT_TO_LEFT, ())):
        self.rules = dict(rules or {})
        self.default = default

    def head_child(self, parent_label, child_labels):
        """Return the index of the head child."""
        rule = self.rules.get(parent_label)
        candidates = [rule] if rule is not None else []
        candidates.append(self.default)
        for direction, priority in candidates:
            order = range(len(child_labels))
            if direction == RIGHT_TO_LEFT:
                order = reversed(order)
            order = list(order)
            for wanted in priority:
                for i in order:
                    if child_labels[i] == wanted:
                        return i
        return len(child_labels) - 1  # documented fallback: rightmost child

    @classmethod
    def from_text(cls, text):
        """Parse `PARENT direction child1 child2 ...` lines ('#' comments)."""
        rules = {}
        default = (RIGHT_TO_LEFT, ())
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) < 2:
                raise RuleFileError(
                    "line %d: expected 'PARENT direction [children...]'" % lineno)
            parent, direction = fields[0], fields[1]
            if direction not in _DIRECTIONS:
                raise RuleFileError(
                    "line %d: unknown direction %r (use left-to-right or "
                    "right-to-left)" % (lineno, direction))
            entry = (_DIRECTIONS[direction], tuple(fields[2:]))
            if parent == DEFAULT_RULE_KEY:
                default = entry
            else:
                rules[parent] = entry
        return cls(rules, default)

    @classmethod
    def from_file(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read())


class BinarizationRuleSet:
    """Per parent label, which of the two binarization shapes to use.

    Scheme A folds the siblings to the left of the head child in first
    (innermost), then the right siblings; scheme B folds the right side
    in first. Unlisted parents use the default scheme (A unless the rule
    file says otherwise).
    """

    def __init__(self, schemes=None, default="A"):
        self.schemes = dict(schemes or {})
        if default not in ("A", "B"):
            raise RuleFileError("default binarization scheme must be A or B")
        self.default = default

    def scheme(self, parent_label):
        return self.schemes.get(parent_label, self.default)

    @classmethod
    def from_text(cls, text):
        """Parse `PARENT A|B` lines ('#' comments; DEFAULT sets the default)."""
        schemes = {}
        default = "A"
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != 2 or fields[1] not in ("A", "B"):
                raise RuleFileError("line %d: expected 'PARENT A|B'" % lineno)
            if fields[0] == DEFAULT_RULE_KEY:
                default = fields[1]
            else:
                schemes[fields[0]] = fields[1]
        return cls(schemes, default)

    @classmethod
    def from_file(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read())


# ---------------------------------------------------------------------------
# percolation and binarization


def percolate(tree, rules):
    """Annotate every node of a RawTree with its head (word, tag, index).

    Returns a HeadedTree with the original (possibly n-ary) shape.
    Leaves are self-headed; an internal node takes the head of the child
    picked by the rules.
    """
    return _percolate(tree, rules, [0])


def _percolate(tree, rules, next_index):
    if tree.is_leaf():
        idx = next_index[0]
        next_index[0] += 1
        return HeadedTree(tree.label, word=tree.word, head_word=tree.word,
                          head_tag=tree.label, head_index=idx,
                          span=(idx, idx + 1))
    children = [_percolate(c, rules, next_index) for c in tree.children]
    k = rules.head_child(tree.label, [c.label for c in children])
    head = children[k]
    return HeadedTree(tree.label, children,
                      head_word=head.head_word, head_tag=head.head_tag,
                      head_index=head.head_index,
                      span=(children[0].span[0], children[-1].span[1]))


def primed(label):
    """The label given to intermediate nodes created under ``label``."""
    return label + "'"


def binarize(tree, rules):
    """Binarize a headed tree using the per-label scheme choice.

    Nodes with more than two children are rebuilt as a binary spine that
    always contains the head child, so every new node inherits the head
    of the original node and head inheritance stays child-local.
    Intermediate nodes receive the primed parent label. Scheme A attaches
    the siblings left of the head first (innermost), scheme B the right
    siblings first. Unary nodes are kept as they are.
    """
    if tree.is_leaf():
        return tree
    if not tree.children:
        raise TreebankError("internal node %r has no children" % tree.label)
    children = [binarize(c, rules) for c in tree.children]
    if len(children) <= 2:
        out = HeadedTree(tree.label, children, head_word=tree.head_word,
                         head_tag=tree.head_tag, head_index=tree.head_index,
                         span=tree.span)
        return out
    k = None
    for i, child in enumerate(children):
        if child.head_index == tree.head_index:
            k = i
            break
    if k is None:
        raise TreebankError("head of %r is not the head of any child" % tree.label)

    scheme = rules.scheme(tree.label)
    mid = primed(tree.label)
    node = children[k]
    left = list(range(k - 1, -1, -1))   # adjacent left sibling first
    right = list(range(k + 1, len(children)))
    sides = (left, right) if scheme == "A" else (right, left)
    for side in sides:
        for i in side:
            sib = children[i]
            pair = [sib, node] if i < k else [node, sib]
            node = HeadedTree(mid, pair, head_word=tree.head_word,
                              head_tag=tree.head_tag,
                              head_index=tree.head_index,
                              span=(pair[0].span[0], pair[1].span[1]))
    node.label = tree.label
    return node


def prepare_tree(raw, percolation_rules, binarization_rules):
    """percolate + binarize in one step."""
    return binarize(percolate(raw, percolation_rules), binarization_rules)


def validate_headed(tree, _top=True):
    """Check the binarized-tree invariants; raise TreebankError on failure."""
    if tree.is_leaf():
        if tree.children:
            raise TreebankError("leaf with children")
        if tree.head_word != tree.word or tree.head_tag != tree.label:
            raise TreebankError("leaf not self-headed")
        return
    if not 1 <= len(tree.children) <= 2:
        raise TreebankError("node %r has %d children after binarization"
                            % (tree.label, len(tree.children)))
    if not any(c.head_index == tree.head_index and
               c.head_word == tree.head_word for c in tree.children):
        raise TreebankError("head of %r is not inherited from a child" % tree.label)
    spans = [c.span for c in tree.children]
    for a, b in zip(spans, spans[1:]):
        if a[1] != b[0]:
            raise TreebankError("sibling spans not adjacent under %r" % tree.label)
    if (spans[0][0], spans[-1][1]) != tree.span:
        raise TreebankError("span of %r does not cover its children" % tree.label)
    for child in tree.children:
        validate_headed(child, _top=False)
