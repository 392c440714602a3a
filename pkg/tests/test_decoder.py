"""Multi-stack beam search over word/tag/parser extensions."""

import math

import pytest

import treelm.decoder as dc
import treelm.derivation as dv


UNPRUNED = dict(stack_depth=10**6, logprob_threshold=None, nbest=10**6,
                tag_candidates="all")


def replay_logp(masked, events):
    """Recompute a derivation's log-probability from the masked models."""
    prefix = dv.WordParsePrefix.initial()
    total = 0.0
    for ev in events:
        if ev.component == dv.WORD_PREDICTOR:
            p = masked.word_prob(prefix, ev.outcome)
        elif ev.component == dv.TAGGER:
            p = masked.tag_prob(prefix, ev.outcome)
        else:
            p = masked.parser_prob(prefix, ev.outcome)
        total += math.log(p)
        prefix, _ = dv.apply(prefix, ev.component, ev.outcome)
    return total


def test_phi_weights_two_hypotheses():
    hyps = [dc.Hypothesis(None, -1.0, None, None),
            dc.Hypothesis(None, -2.0, None, None)]
    phis = dc.phi_weights(hyps)
    assert phis == pytest.approx([0.7310585786300049, 0.2689414213699951])
    assert math.fsum(phis) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(dc.DecodeError):
        dc.phi_weights([])


def test_search_params_validation():
    with pytest.raises(dc.DecodeError):
        dc.SearchParams(stack_depth=0)
    with pytest.raises(dc.DecodeError):
        dc.SearchParams(logprob_threshold=-1.0)
    with pytest.raises(dc.DecodeError):
        dc.SearchParams(nbest=0)
    with pytest.raises(dc.DecodeError):
        dc.SearchParams(max_position_ops=1)
    assert dc.SearchParams(logprob_threshold=None).logprob_threshold \
        == math.inf
    assert dc.SearchParams().position_cap(3) == 8
    assert dc.SearchParams(max_position_ops=2).position_cap(3) == 2


def test_decode_input_validation(tiny_masked):
    params = dc.SearchParams()
    with pytest.raises(dc.DecodeError):
        dc.decode([], tiny_masked, params)
    with pytest.raises(dc.DecodeError):
        dc.decode(["u", "<s>"], tiny_masked, params)


def test_no_survivor_reports_position(tiny_masked):
    class Dead:
        vocabs = tiny_masked.vocabs

        def word_prob(self, prefix, y):
            return 0.0

    with pytest.raises(dc.DecodeError, match="word 1"):
        dc.decode(["u"], Dead(), dc.SearchParams())


def test_oov_words_map_to_unknown(tiny_masked):
    result = dc.decode(["u", "zzz"], tiny_masked, dc.SearchParams())
    assert result.words == ("u", "<unk>")


def test_nbest_sorted_and_unique(tiny_masked):
    result = dc.decode(["u", "v"], tiny_masked, dc.SearchParams(**UNPRUNED))
    logps = [h.logp for h in result.nbest]
    assert logps == sorted(logps, reverse=True)
    keys = [h.key for h in result.nbest]
    assert len(set(keys)) == len(keys)
    for h in result.nbest:
        assert h.prefix.is_complete()


def test_scores_match_masked_model_replay(tiny_masked):
    result = dc.decode(["v", "u"], tiny_masked, dc.SearchParams())
    for h in result.nbest:
        assert h.logp == pytest.approx(
            replay_logp(tiny_masked, h.events()), abs=1e-9)


def test_stage_weights_are_normalized_posteriors(tiny_masked):
    result = dc.decode(["u", "v"], tiny_masked, dc.SearchParams(**UNPRUNED))
    assert len(result.stages) == 3  # start, after word 1, after word 2
    for stage in result.stages:
        total = math.fsum(w for _h, w in stage)
        assert total == pytest.approx(1.0, abs=1e-12)
        (h0, w0) = stage[0]
        for h, w in stage[1:]:
            assert w / w0 == pytest.approx(math.exp(h.logp - h0.logp),
                                           rel=1e-9)


def test_stack_depth_and_threshold_hold_in_the_lattice(tiny_masked):
    params = dc.SearchParams(stack_depth=2, logprob_threshold=0.5)
    result = dc.decode(["u", "v", "u"], tiny_masked, params,
                       collect_lattice=True)
    assert result.lattice
    groups = {}
    for line in result.lattice:
        k, p, logp, _actions = line.split("\t")
        groups.setdefault((k, p), []).append(float(logp))
    for scores in groups.values():
        assert len(scores) <= 2
        assert max(scores) - min(scores) <= 0.5 + 1e-12


def test_pruned_results_are_a_subset(tiny_masked):
    full = dc.decode(["u", "v"], tiny_masked, dc.SearchParams(**UNPRUNED))
    pruned = dc.decode(["u", "v"], tiny_masked,
                       dc.SearchParams(stack_depth=3, logprob_threshold=2.0,
                                       nbest=5))
    scores = {h.key: h.logp for h in full.nbest}
    for h in pruned.nbest:
        assert h.key in scores
        assert h.logp == scores[h.key]  # same arithmetic path, bit equal


def test_nbest_one_is_the_viterbi_parse(tiny_masked):
    full = dc.decode(["u", "v", "u"], tiny_masked,
                     dc.SearchParams(**UNPRUNED))
    single = dc.decode(["u", "v", "u"], tiny_masked,
                       dc.SearchParams(**dict(UNPRUNED, nbest=1)))
    assert len(single.nbest) == 1
    assert single.nbest[0].key == full.nbest[0].key
    assert single.nbest[0].logp == full.nbest[0].logp


def test_decode_is_deterministic(tiny_masked):
    params = dc.SearchParams(stack_depth=4, logprob_threshold=3.0)
    a = dc.decode(["u", "v", "u"], tiny_masked, params, collect_lattice=True)
    b = dc.decode(["u", "v", "u"], tiny_masked, params, collect_lattice=True)
    assert a.lattice == b.lattice
    assert [(h.key, repr(h.logp)) for h in a.nbest] \
        == [(h.key, repr(h.logp)) for h in b.nbest]


def test_degenerate_null_keeps_one_flat_parse(tiny):
    masked = tiny.masked(degenerate_null=True)
    # observed tags are unambiguous here, so one derivation survives
    result = dc.decode(["u", "v"], masked,
                       dc.SearchParams(**dict(UNPRUNED,
                                              tag_candidates="observed")))
    assert len(result.nbest) == 1
    assert all(len(stage) == 1 for stage in result.stages)
    # branching over both tags yields one flat skeleton per tagging
    result = dc.decode(["u", "v"], masked, dc.SearchParams(**UNPRUNED))
    assert len(result.nbest) == 4
    ar = dv.ADJOIN_RIGHT
    for h in result.nbest:
        moves = [ev.outcome for ev in h.events()
                 if ev.component == dv.PARSER]
        assert moves == [dv.NULL, dv.NULL, "%s_TOP'" % ar,
                         "%s_TOP'" % ar, "%s_TOP" % ar]
        # parser moves are all forced, so none of them costs probability
        assert h.logp == pytest.approx(replay_logp(masked, h.events()),
                                       abs=1e-12)


def test_position_op_cap_prunes_deep_chains(tiny_masked):
    full = dc.decode(["u", "v", "u"], tiny_masked,
                     dc.SearchParams(**UNPRUNED))
    capped = dc.decode(["u", "v", "u"], tiny_masked,
                       dc.SearchParams(**dict(UNPRUNED, max_position_ops=2)))
    full_keys = {h.key for h in full.nbest}
    capped_keys = {h.key for h in capped.nbest}
    assert capped_keys < full_keys
    for h in capped.nbest:
        prefix = dv.WordParsePrefix.initial()
        for ev in h.events():
            if ev.component == dv.PARSER:
                forced, _acts = dv.legal_actions(prefix)
                if not forced and prefix.pos_ops + 1 >= 2:
                    # budget exhausted: only the closing null is allowed
                    assert ev.outcome == dv.NULL
            prefix, _ = dv.apply(prefix, ev.component, ev.outcome)


def test_nbest_with_phi_pairs_trees_and_weights(tiny_masked):
    result = dc.decode(["u", "v"], tiny_masked, dc.SearchParams())
    pairs = dc.nbest_with_phi(result)
    assert len(pairs) == len(result.nbest)
    assert math.fsum(phi for _t, phi in pairs) == pytest.approx(1.0)
    phis = [phi for _t, phi in pairs]
    assert phis == sorted(phis, reverse=True)
    for (tree, _phi), h in zip(pairs, result.nbest):
        assert tree == h.tree()
