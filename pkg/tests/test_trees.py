import pytest

from treelm import trees as tr


def test_read_treebank_basic():
    trees = tr.read_treebank("((S (NP (NN dog)) (VP (VBZ barks))))")
    assert len(trees) == 1
    t = trees[0]
    assert t.label == "S"
    assert t.words() == ["dog", "barks"]
    assert list(t.leaves()) == [("dog", "NN"), ("barks", "VBZ")]


def test_read_treebank_multiple_and_whitespace():
    text = "( (S (NN a)) )\n\n( (S (NN b)) )"
    trees = tr.read_treebank(text)
    assert [t.words() for t in trees] == [["a"], ["b"]]


def test_write_read_roundtrip(toy_raw):
    for t in toy_raw["dev"][:80]:
        again = tr.read_treebank(tr.write_tree(t))
        assert len(again) == 1
        assert again[0] == t


def test_read_error_reports_position():
    with pytest.raises(tr.TreebankError) as err:
        tr.read_treebank("((S (NN dog))")
    assert "line" in str(err.value)
    with pytest.raises(tr.TreebankError):
        tr.read_treebank("((S (NN dog)) extra)")


def test_function_tag_stripping():
    t = tr.read_treebank("((S (NP-SBJ-1 (NN dog)) (VP=2 (VBZ barks))))")[0]
    assert t.children[0].label == "NP"
    assert t.children[1].label == "VP"


def test_trace_removal_and_bracket_labels():
    t = tr.read_treebank("((S (-NONE- *T*) (NN dog)))")[0]
    assert [c.label for c in t.children] == ["NN"]
    raw = tr.read_treebank("((S (-NONE- *T*) (NN dog)))", normalize=False)[0]
    assert raw.children[0].label == "-NONE-"
    t = tr.read_treebank("((S (-LRB- lrb) (NN dog)))")[0]
    assert t.children[0].label == "-LRB-"


def test_percolation_priority_over_direction():
    rules = tr.PercolationRuleSet.from_text("S left-to-right VP NP")
    # NP precedes VP among the children, but VP outranks it.
    assert rules.head_child("S", ["NP", "VP", "PP"]) == 1
    assert rules.head_child("S", ["NP", "PP"]) == 0


def test_percolation_direction_breaks_ties():
    ltr = tr.PercolationRuleSet.from_text("X left-to-right NN")
    rtl = tr.PercolationRuleSet.from_text("X right-to-left NN")
    labels = ["NN", "JJ", "NN"]
    assert ltr.head_child("X", labels) == 0
    assert rtl.head_child("X", labels) == 2


def test_percolation_fallback_rightmost():
    rules = tr.PercolationRuleSet.from_text("X left-to-right NN")
    assert rules.head_child("X", ["JJ", "DT"]) == 1
    assert rules.head_child("UNLISTED", ["A", "B", "C"]) == 2


def test_percolation_default_rule_override():
    rules = tr.PercolationRuleSet.from_text(
        "DEFAULT left-to-right NN\nS left-to-right VP")
    assert rules.head_child("ANY", ["NN", "JJ", "NN"]) == 0


def test_rule_file_errors():
    with pytest.raises(tr.RuleFileError):
        tr.PercolationRuleSet.from_text("S sideways NN")
    with pytest.raises(tr.RuleFileError):
        tr.PercolationRuleSet.from_text("S")
    with pytest.raises(tr.RuleFileError):
        tr.BinarizationRuleSet.from_text("S C")


def test_percolate_marks_heads(rules):
    perc, _ = rules
    raw = tr.read_treebank(
        "((S (NP (DT the) (NN dog)) (VP (VBZ barks))))")[0]
    headed = tr.percolate(raw, perc)
    assert headed.head == ("barks", "VBZ")
    assert headed.children[0].head == ("dog", "NN")
    assert headed.head_index == 2


def test_head_index_disambiguates_duplicates(rules):
    perc, _ = rules
    raw = tr.read_treebank("((NP (NN dog) (NN dog)))")[0]
    headed = tr.percolate(raw, perc)
    # right-to-left NP rule: the second "dog" is the head.
    assert headed.head_index == 1


def _four_kids(scheme_text):
    perc = tr.PercolationRuleSet.from_text("X left-to-right H")
    binr = tr.BinarizationRuleSet.from_text(scheme_text)
    raw = tr.read_treebank("((X (A a) (B b) (H h) (C c)))")[0]
    return tr.binarize(tr.percolate(raw, perc), binr)


def test_binarize_scheme_a_left_siblings_innermost():
    t = _four_kids("X A")
    # A: fold left siblings in first, then the right ones, so the
    # outermost split peels the rightmost sibling.
    assert t.label == "X"
    assert [c.label for c in t.children] == ["X'", "C"]
    inner = t.children[0]
    assert [c.label for c in inner.children] == ["A", "X'"]
    assert [c.label for c in inner.children[1].children] == ["B", "H"]
    assert t.head == ("h", "H")


def test_binarize_scheme_b_right_siblings_innermost():
    t = _four_kids("X B")
    assert [c.label for c in t.children] == ["A", "X'"]
    inner = t.children[1]
    assert [c.label for c in inner.children] == ["B", "X'"]
    assert [c.label for c in inner.children[1].children] == ["H", "C"]
    assert t.head == ("h", "H")


def test_binarize_keeps_unary_and_binary_nodes():
    perc = tr.PercolationRuleSet.from_text("DEFAULT right-to-left")
    binr = tr.BinarizationRuleSet.from_text("DEFAULT A")
    raw = tr.read_treebank("((S (NP (NN dog)) (VP (VBZ barks))))")[0]
    t = tr.binarize(tr.percolate(raw, perc), binr)
    assert len(t.children) == 2
    assert len(t.children[0].children) == 1


def test_binarized_arity_at_most_two(toy_prepared):
    def walk(node):
        assert len(node.children) <= 2
        for c in node.children:
            walk(c)
    for t in toy_prepared["dev"][:100]:
        walk(t)


def test_prepare_tree_validates(toy_prepared):
    for t in toy_prepared["dev"][:50]:
        tr.validate_headed(t)


def test_validate_headed_rejects_bad_head():
    bad = tr.HeadedTree("X", word="a", head_word="b", head_tag="X",
                        head_index=0, span=(0, 1))
    with pytest.raises(tr.TreebankError):
        tr.validate_headed(bad)


def test_headed_serialization_roundtrip(toy_prepared):
    for t in toy_prepared["dev"][:60]:
        text = tr.write_headed_tree(t)
        back = tr.read_headed_trees(text)
        assert len(back) == 1
        assert back[0] == t


def test_read_headed_rejects_inconsistent_head():
    good = tr.write_headed_tree(
        tr.prepare_tree(
            tr.read_treebank("((S (NN dog) (VBZ barks)))")[0],
            tr.PercolationRuleSet.from_text("DEFAULT right-to-left"),
            tr.BinarizationRuleSet.from_text("DEFAULT A")))
    assert "~" in good
    tampered = good.replace("barks~", "dog~", 1)
    with pytest.raises(tr.TreebankError):
        tr.read_headed_trees(tampered)


def test_primed_label():
    assert tr.primed("NP") == "NP'"
