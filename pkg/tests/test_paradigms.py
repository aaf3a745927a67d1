"""Question-selection paradigms: per-rule checks plus oracle comparisons."""

import random

from learnmesh.paradigms import (
    CONTINUE,
    EXHAUSTED,
    FALLBACK,
    BalancedDirective,
    BalancedParams,
    CausalDirective,
    CausalEdge,
    DynamicDirective,
    FreeDirective,
    OrderingDirective,
    Repeat,
    SelectorState,
    balanced_gate,
    next_causal,
    next_dynamic,
    next_free,
    next_ordering,
    run_course,
)
from learnmesh.resources import Course, ResourceId
from oracles import course_transcript


def q(n):
    return ResourceId("t", n)


Q1, Q2, Q3, Q4, Q5 = (q(i) for i in range(1, 6))


def asked(*pairs):
    state = SelectorState()
    for qid, outcome in pairs:
        state.record(qid, outcome)
    return state


def course_of(program, members):
    return Course(ResourceId("t", 99), program=tuple(program), members=frozenset(members))


class TestFree:
    def test_nothing_asked_picks_first(self):
        assert next_free(SelectorState(), [Q1, Q2, Q3]) == Q1

    def test_skips_asked(self):
        assert next_free(asked((Q1, 1.0)), [Q1, Q2, Q3]) == Q2

    def test_exhausted(self):
        state = asked((Q1, 1.0), (Q2, 0.0), (Q3, 1.0))
        assert next_free(state, [Q1, Q2, Q3]) is EXHAUSTED


class TestCausal:
    EDGES = {Q1: CausalEdge(correct=Q2, wrong=Q3)}

    def test_correct_edge(self):
        state = asked((Q1, 1.0))
        assert next_causal(state, self.EDGES, (Q1, 1.0)) == Q2

    def test_wrong_edge(self):
        state = asked((Q1, 0.0))
        assert next_causal(state, self.EDGES, (Q1, 0.0)) == Q3

    def test_no_edges_falls_back(self):
        state = asked((Q1, 1.0), (Q2, 1.0))
        assert next_causal(state, self.EDGES, (Q2, 1.0)) is FALLBACK

    def test_asked_target_falls_back(self):
        state = asked((Q2, 1.0), (Q1, 1.0))
        assert next_causal(state, self.EDGES, (Q1, 1.0)) is FALLBACK


class TestOrdering:
    def test_chain_head_only(self):
        got = next_ordering(SelectorState(), [Q1, Q2, Q3], [[Q1, Q2, Q3]])
        assert got == {Q1}

    def test_forced_sub_blocked_until_reference(self):
        forced = frozenset({(Q2, Q3)})
        before = next_ordering(SelectorState(), [Q1, Q2, Q3], [], forced)
        assert before == {Q1, Q3}
        after = next_ordering(asked((Q3, 1.0)), [Q1, Q2, Q3], [], forced)
        assert after == {Q1, Q2}

    def test_unconstrained_questions_always_eligible(self):
        got = next_ordering(SelectorState(), [Q1, Q2, Q3], [[Q1, Q2]])
        assert got == {Q1, Q3}


class TestDynamic:
    def test_single_eligible_chain(self):
        state = asked((Q1, 1.0), (Q2, 1.0))
        rng = random.Random(0)
        got = next_dynamic(state, [[Q1, Q2], [Q3, Q4]], rng)
        assert got == Q3

    def test_result_is_some_chain_head(self):
        got = next_dynamic(SelectorState(), [[Q1, Q2], [Q3, Q4]], random.Random(5))
        assert got in {Q1, Q3}

    def test_uniform_over_chains(self):
        hits = 0
        for seed in range(1000):
            pick = next_dynamic(
                SelectorState(), [[Q1, Q2], [Q3, Q4]], random.Random(seed)
            )
            hits += pick == Q1
        assert 0.45 <= hits / 1000 <= 0.55


class TestBalancedGate:
    def test_all_correct_continues(self):
        hist = [(q(i), 1.0) for i in range(4)]
        assert balanced_gate(hist, BalancedParams(4, 0.5)) is CONTINUE

    def test_all_wrong_repeats_in_order(self):
        hist = [(Q1, 0.0), (Q2, 0.0), (Q3, 0.0), (Q4, 0.0)]
        verdict = balanced_gate(hist, BalancedParams(4, 0.5))
        assert verdict == Repeat((Q1, Q2, Q3, Q4))

    def test_boundary_mean_equal_p_repeats(self):
        hist = [(Q1, 0.0), (Q2, 1.0), (Q3, 0.0), (Q4, 1.0)]
        verdict = balanced_gate(hist, BalancedParams(4, 0.5))
        assert isinstance(verdict, Repeat)

    def test_short_history_bypasses(self):
        assert balanced_gate([(Q1, 0.0)], BalancedParams(4, 0.5)) is CONTINUE

    def test_window_permutation_invariance(self):
        rng = random.Random(2)
        for _ in range(50):
            outcomes = [rng.choice((0.0, 1.0)) for _ in range(4)]
            hist = list(zip((Q1, Q2, Q3, Q4), outcomes))
            base = balanced_gate(hist, BalancedParams(4, 0.5))
            rng.shuffle(outcomes)
            perm = list(zip((Q1, Q2, Q3, Q4), outcomes))
            other = balanced_gate(perm, BalancedParams(4, 0.5))
            assert isinstance(base, Repeat) == isinstance(other, Repeat)


class TestRunCourse:
    def test_free_all_correct(self):
        course = course_of([FreeDirective()], [Q1, Q2])
        tx = run_course(course, [Q1, Q2], lambda qid: 1.0)
        assert [(e.question, e.outcome) for e in tx.entries] == [(Q1, 1.0), (Q2, 1.0)]

    def test_balanced_all_wrong_truncates(self):
        course = course_of(
            [BalancedDirective(params=BalancedParams(2, 0.9))], [Q1, Q2]
        )
        tx = run_course(course, [Q1, Q2], lambda qid: 0.0)
        assert "truncated" in tx.flags
        # windows replay verbatim before the cap fires
        seq = [e.question for e in tx.entries]
        assert seq[:2] == [Q1, Q2]
        assert all(seq[i : i + 2] == [Q1, Q2] for i in range(0, len(seq), 2))

    def test_repeat_replays_window_in_order(self):
        course = course_of(
            [BalancedDirective(params=BalancedParams(2, 0.5))], [Q1, Q2, Q3]
        )
        outcomes = {Q1: 0.0, Q2: 0.0, Q3: 1.0}
        tx = run_course(course, [Q1, Q2, Q3], lambda qid: outcomes[qid])
        seq = [e.question for e in tx.entries]
        assert seq[0:2] == [Q1, Q2]
        assert seq[2:4] == [Q1, Q2]  # the failed window, verbatim

    def test_skipped_chain_is_flagged_and_unasked(self):
        course = course_of(
            [OrderingDirective(chains=((Q1, Q5), (Q2, Q3)))], [Q1, Q2, Q3, Q5]
        )
        tx = run_course(course, [Q1, Q2, Q3], lambda qid: 1.0)  # Q5 unavailable
        assert any(f.startswith("constraint-unavailable:d0c0") for f in tx.flags)
        seq = [e.question for e in tx.entries]
        assert Q1 not in seq and Q5 not in seq
        assert seq == [Q2, Q3]

    def test_causal_steers_then_falls_back(self):
        edges = {Q1: CausalEdge(correct=Q3, wrong=Q2)}
        course = course_of([CausalDirective(edges=edges)], [Q1, Q2, Q3])
        tx = run_course(course, [Q1, Q2, Q3], lambda qid: 1.0)
        assert [e.question for e in tx.entries] == [Q1, Q3, Q2]

    def test_determinism_same_seed(self):
        course = course_of(
            [DynamicDirective(chains=((Q1, Q2), (Q3, Q4)))], [Q1, Q2, Q3, Q4]
        )
        a = run_course(course, [Q1, Q2, Q3, Q4], lambda qid: 1.0, random.Random(9))
        b = run_course(course, [Q1, Q2, Q3, Q4], lambda qid: 1.0, random.Random(9))
        assert a == b

    def test_mixed_program_matches_oracle(self):
        program = [
            OrderingDirective(chains=((Q1, Q2),), forced=frozenset({(Q3, Q2)})),
            CausalDirective(edges={Q4: CausalEdge(correct=Q5, wrong=Q1)}),
            BalancedDirective(params=BalancedParams(2, 0.5)),
        ]
        members = [Q1, Q2, Q3, Q4, Q5]
        course = course_of(program, members)
        outcomes = {Q1: 1.0, Q2: 0.0, Q3: 1.0, Q4: 1.0, Q5: 0.0}
        tx = run_course(course, members, lambda qid: outcomes[qid], random.Random(3))
        want, flags = course_transcript(
            program, members, members, lambda qid: outcomes[qid], random.Random(3)
        )
        got = [(e.question, e.directive, e.outcome, e.verdict) for e in tx.entries]
        assert got == want
        assert tuple(flags) == tx.flags

    def test_forced_reference_safety_random(self):
        rng = random.Random(21)
        members = [Q1, Q2, Q3, Q4, Q5]
        for _ in range(100):
            sub, ref = rng.sample(members, 2)
            chains = []
            if rng.random() < 0.5:
                chains.append(tuple(rng.sample(members, rng.randint(2, 3))))
            program = [
                OrderingDirective(
                    chains=tuple(chains), forced=frozenset({(sub, ref)})
                )
            ]
            course = course_of(program, members)
            tx = run_course(
                course, members, lambda qid: rng.choice((0.0, 1.0)), random.Random(0)
            )
            seq = [e.question for e in tx.entries]
            if sub in seq and ref in seq:
                assert seq.index(ref) < seq.index(sub)
