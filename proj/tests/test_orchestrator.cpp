#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "cowrite/orchestrator.hpp"
#include "cowrite/text.hpp"
#include "support/fixtures.hpp"
#include "support/sim.hpp"

using namespace cowrite;
using cowrite::testing::ScriptedBackend;
using cowrite::testing::SimDriver;
using cowrite::testing::words;

namespace {

template <class P>
bool in(const SessionMachine& m) {
  return std::holds_alternative<P>(m.state().phase);
}

std::size_t count_kind(const std::vector<SessionEvent>& log, EventKind k) {
  std::size_t n = 0;
  for (const auto& e : log) n += e.kind == k;
  return n;
}

// Drives a session into Showing at t=8000 with a 30-word document.
void to_showing(SimDriver& sim) {
  sim.type(words(30));
  sim.space();
  sim.advance_to(8000);
  REQUIRE(in<phase::Showing>(sim.machine));
}

}  // namespace

TEST_CASE("policy defaults and validation") {
  TriggerPolicy p;
  CHECK(p.min_words == 25);
  CHECK(p.delay_ms == 8000);
  CHECK(p.context_words == 20);
  CHECK(p.n_candidates == 3);
  CHECK(p.max_new_tokens == 60);
  CHECK(p.temperature == 1.0);
  CHECK_NOTHROW(TriggerPolicy::with_overrides(p, {{"delay_ms", 0}}));
  CHECK_THROWS_AS(TriggerPolicy::with_overrides(p, {{"min_words", 0}}), InvalidPolicy);
  CHECK_THROWS_AS(TriggerPolicy::with_overrides(p, {{"temperature", 0.0}}), InvalidPolicy);
  CHECK_THROWS_AS(TriggerPolicy::with_overrides(p, {{"bogus", 1}}), InvalidPolicy);
  CHECK_THROWS_AS(TriggerPolicy::with_overrides(p, {{"delay_ms", "soon"}}), InvalidPolicy);
  CHECK(TriggerPolicy::with_overrides(p, {{"n_candidates", 5}}).n_candidates == 5);
}

TEST_CASE("threshold is crossed at exactly 25 words") {
  SessionMachine m("s", TriggerPolicy{}, 1);
  CHECK(in<phase::BelowThreshold>(m));
  m.on_text_change(words(24), 0);
  CHECK(in<phase::BelowThreshold>(m));
  m.on_text_change(words(25), 10);
  CHECK(in<phase::Idle>(m));
  CHECK(m.state().word_count == 25);
}

TEST_CASE("spacebar below threshold does not dispatch") {
  SessionMachine m("s", TriggerPolicy{}, 1);
  m.on_text_change(words(10), 0);
  auto fx = m.on_space_keypress(5);
  CHECK_FALSE(fx.dispatch);
  CHECK(in<phase::BelowThreshold>(m));
  REQUIRE(fx.events.size() == 1);
  CHECK(fx.events[0].kind == EventKind::SpaceKey);
}

TEST_CASE("spacebar in Idle dispatches one request with the policy parameters") {
  SessionMachine m("s", TriggerPolicy{}, 7);
  m.on_text_change(words(30), 0);
  auto fx = m.on_space_keypress(100);
  REQUIRE(fx.dispatch);
  const auto& r = fx.dispatch->request;
  CHECK(r.context == build_context(words(30), 20));
  CHECK(count_words(r.context) == 20);
  CHECK(r.n_candidates == 3);
  CHECK(r.max_new_tokens == 60);
  CHECK(r.temperature == 1.0);
  CHECK(r.seed == m.request_seed(fx.dispatch->request_id));
  CHECK(in<phase::Pending>(m));
  REQUIRE(fx.events.size() == 2);
  CHECK(fx.events[1].kind == EventKind::Dispatched);
}

TEST_CASE("a second space while pending restarts the delay without dispatching") {
  ScriptedBackend backend;
  SimDriver sim(backend, TriggerPolicy{}, 1, 500);
  sim.type(words(30));
  sim.space();
  sim.advance_to(1000);
  sim.space();
  CHECK(sim.dispatches == 1);
  CHECK(std::get<phase::Pending>(sim.machine.state().phase).since_ms == 1000);
  sim.advance_to(8999);
  CHECK(in<phase::Pending>(sim.machine));
  sim.advance_to(9000);
  CHECK(in<phase::Showing>(sim.machine));
  CHECK(backend.calls == 1);
}

TEST_CASE("typing while pending cancels the request") {
  SessionMachine m("s", TriggerPolicy{}, 1);
  m.on_text_change(words(30), 0);
  auto d = m.on_space_keypress(0);
  auto fx = m.on_text_change(words(31), 500);
  REQUIRE(fx.cancel);
  CHECK(*fx.cancel == d.dispatch->request_id);
  CHECK(in<phase::Idle>(m));
  // A late result for the cancelled request is ignored.
  Candidate c;
  c.text = "spaet";
  CHECK(m.on_generation_result(d.dispatch->request_id, {c}, 600).events.empty());
  CHECK(in<phase::Idle>(m));
}

TEST_CASE("deleting below the threshold returns to BelowThreshold") {
  SessionMachine m("s", TriggerPolicy{}, 1);
  m.on_text_change(words(26), 0);
  CHECK(in<phase::Idle>(m));
  m.on_text_change(words(20), 100);
  CHECK(in<phase::BelowThreshold>(m));

  m.on_text_change(words(26), 200);
  m.on_space_keypress(200);
  auto fx = m.on_text_change(words(20), 300);
  CHECK(fx.cancel);
  CHECK(in<phase::BelowThreshold>(m));
}

TEST_CASE("trailing whitespace does not count as resumed typing") {
  SessionMachine m("s", TriggerPolicy{}, 1);
  m.on_text_change(words(30), 0);
  m.on_space_keypress(0);
  auto fx = m.on_text_change(words(30) + " ", 1);
  CHECK_FALSE(fx.cancel);
  CHECK(in<phase::Pending>(m));
}

TEST_CASE("results are held until the delay has elapsed") {
  ScriptedBackend backend;
  SUBCASE("generation finishes at 3 s, shown at 8 s") {
    SimDriver sim(backend, TriggerPolicy{}, 1, 3000);
    sim.type(words(30));
    sim.space();
    sim.advance_to(3000);
    CHECK(in<phase::Pending>(sim.machine));
    CHECK(std::get<phase::Pending>(sim.machine.state().phase).ready.has_value());
    sim.advance_to(7999);
    CHECK(in<phase::Pending>(sim.machine));
    sim.advance_to(8000);
    REQUIRE(sim.presentations.size() == 1);
    CHECK(sim.presentations[0].shown_ms == 8000);
    CHECK(sim.presentations[0].candidates.size() == 3);
  }
  SUBCASE("generation finishes at 11 s, shown immediately") {
    SimDriver sim(backend, TriggerPolicy{}, 1, 11000);
    sim.type(words(30));
    sim.space();
    sim.advance_to(10999);
    CHECK(in<phase::Pending>(sim.machine));
    sim.advance_to(20000);
    REQUIRE(sim.presentations.size() == 1);
    CHECK(sim.presentations[0].shown_ms == 11000);
  }
  SUBCASE("zero delay shows on arrival") {
    TriggerPolicy p;
    p.delay_ms = 0;
    SimDriver sim(backend, p, 1, 250);
    sim.type(words(30));
    sim.space();
    sim.advance_to(1000);
    REQUIRE(sim.presentations.size() == 1);
    CHECK(sim.presentations[0].shown_ms == 250);
  }
}

TEST_CASE("backend failure returns to Idle and is logged") {
  ScriptedBackend backend;
  backend.fail = true;
  SimDriver sim(backend, TriggerPolicy{}, 1, 100);
  sim.type(words(30));
  sim.space();
  sim.advance_to(10000);
  CHECK(in<phase::Idle>(sim.machine));
  CHECK(count_kind(sim.log, EventKind::BackendError) == 1);
  CHECK(sim.presentations.empty());
  CHECK(sim.machine.state().document == words(30));
}

TEST_CASE("exhausted candidates are dropped; none usable counts as failure") {
  SessionMachine m("s", TriggerPolicy{}, 1);
  m.on_text_change(words(30), 0);
  auto d = m.on_space_keypress(0);
  Candidate good;
  good.text = "gut";
  Candidate empty;
  empty.exhausted = true;
  auto fx = m.on_generation_result(d.dispatch->request_id, {empty, good}, 9000);
  REQUIRE(fx.presented);
  const auto& showing = std::get<phase::Showing>(m.state().phase);
  REQUIRE(showing.candidates.size() == 1);
  CHECK(showing.candidates[0].text == "gut");
  CHECK(showing.degraded);

  m.reject(9001);
  d = m.on_space_keypress(9002);
  fx = m.on_generation_result(d.dispatch->request_id, {empty}, 9003);
  REQUIRE(fx.events.size() == 1);
  CHECK(fx.events[0].kind == EventKind::BackendError);
  CHECK(fx.events[0].payload["kind"] == "exhausted");
  CHECK(in<phase::Idle>(m));
}

TEST_CASE("build_context") {
  const auto ws = split_words(words(30));
  CHECK(build_context(words(30), 20) == join_words(std::vector<std::string>(ws.begin() + 10, ws.end())));
  CHECK(split_words(build_context(words(30), 20)).front() == ws[10]);
  CHECK(build_context(words(5), 20) == words(5));
  CHECK(build_context("  a \n b\t c  ", 2) == "b c");
  CHECK_THROWS_AS(build_context("   ", 20), std::invalid_argument);
  CHECK_THROWS_AS(build_context("a", 0), std::invalid_argument);
}

TEST_CASE("context after an accepted suggestion includes the suggestion tail") {
  const std::string long_suggestion = words(45, "neu");
  ScriptedBackend backend({long_suggestion, "b", "c"});
  SimDriver sim(backend, TriggerPolicy{}, 1, 0);
  to_showing(sim);
  sim.accept();
  sim.space();
  sim.advance(10);
  CHECK(backend.calls == 2);
  CHECK(backend.last_request.context == build_context(long_suggestion, 20));
}

TEST_CASE("cycling wraps around and up undoes down") {
  ScriptedBackend backend;
  SimDriver sim(backend, TriggerPolicy{}, 1, 0);
  to_showing(sim);
  auto selected = [&] { return std::get<phase::Showing>(sim.machine.state().phase).selected; };
  CHECK(selected() == 0);
  sim.cycle(CycleDirection::Up);
  CHECK(selected() == 2);
  sim.cycle(CycleDirection::Down);
  CHECK(selected() == 0);
  for (int i = 0; i < 3; ++i) sim.cycle(CycleDirection::Down);
  CHECK(selected() == 0);
  sim.cycle(CycleDirection::Down);
  sim.cycle(CycleDirection::Up);
  CHECK(selected() == 0);
}

TEST_CASE("cycle, accept and reject outside Showing are ignored silently") {
  SessionMachine m("s", TriggerPolicy{}, 1);
  m.on_text_change(words(30), 0);
  auto before = m.state().event_seq;
  CHECK(m.cycle(CycleDirection::Down, 1).events.empty());
  CHECK(m.accept(2).events.empty());
  CHECK(m.reject(3).events.empty());
  CHECK(m.state().event_seq == before);
  CHECK(m.state().document == words(30));
}

TEST_CASE("accepting merges the selected candidate into the document") {
  TriggerPolicy p;
  p.min_words = 1;
  ScriptedBackend backend({"C D", "E", "F"});
  SimDriver sim(backend, p, 1, 0);
  sim.type("A B");
  sim.space();
  sim.advance(8000);
  REQUIRE(in<phase::Showing>(sim.machine));
  sim.accept();
  CHECK(sim.machine.state().document == "A B C D");
  CHECK(sim.machine.state().word_count == 4);
  CHECK(in<phase::Idle>(sim.machine));
  CHECK(sim.log.back().kind == EventKind::Accepted);
  CHECK(sim.log.back().payload["word_count"] == 4);

  // A document already ending in a space is not given a second one.
  SimDriver sim2(backend, p, 1, 0);
  sim2.type("A B ");
  sim2.space();
  sim2.advance(8000);
  sim2.cycle(CycleDirection::Down);
  sim2.accept();
  CHECK(sim2.machine.state().document == "A B E");
}

TEST_CASE("rejecting leaves the document untouched") {
  ScriptedBackend backend;
  SimDriver sim(backend, TriggerPolicy{}, 1, 0);
  to_showing(sim);
  const std::string doc = sim.machine.state().document;
  sim.reject();
  CHECK(sim.machine.state().document == doc);
  CHECK(in<phase::Idle>(sim.machine));
  auto seq = sim.machine.state().event_seq;
  sim.reject();
  CHECK(sim.machine.state().event_seq == seq);

  sim.space();
  CHECK(sim.dispatches == 2);
  CHECK(in<phase::Pending>(sim.machine));
  sim.advance(8000);
  CHECK(sim.presentations.size() == 2);
}

TEST_CASE("typing while showing dismisses the suggestions") {
  ScriptedBackend backend;
  SimDriver sim(backend, TriggerPolicy{}, 1, 0);
  to_showing(sim);
  sim.type(words(31));
  CHECK(in<phase::Idle>(sim.machine));
  CHECK(sim.machine.state().document == words(31));
}

TEST_CASE("request seeds are a pure function of session seed and request id") {
  SessionMachine a("a", TriggerPolicy{}, 99);
  SessionMachine b("b", TriggerPolicy{}, 99);
  SessionMachine c("c", TriggerPolicy{}, 100);
  CHECK(a.request_seed(1) == b.request_seed(1));
  CHECK(a.request_seed(1) != a.request_seed(2));
  CHECK(a.request_seed(1) != c.request_seed(1));
}

TEST_CASE("properties over random sessions") {
  for (std::uint64_t s = 0; s < 200; ++s) {
    std::mt19937_64 rng(s);
    TriggerPolicy p;
    p.delay_ms = static_cast<std::int64_t>(s % 3) * 4000;
    ScriptedBackend backend;
    backend.fail = s % 7 == 0;
    SimDriver sim(backend, p, s, static_cast<std::int64_t>(s % 5) * 2500);
    CAPTURE(s);
    REQUIRE_NOTHROW(cowrite::testing::run_random_session(sim, rng, 60));

    // Single flight.
    CHECK(sim.max_in_flight <= 1);
    for (const auto& pr : sim.presentations) {
      // Suppression below the threshold.
      CHECK(pr.word_count >= static_cast<std::size_t>(p.min_words));
      // Delay lower bound measured from the last spacebar press.
      CHECK(pr.shown_ms - pr.trigger_ms >= p.delay_ms);
      // Presented as soon as both conditions hold.
      CHECK(pr.shown_ms == std::max(pr.trigger_ms + p.delay_ms, pr.arrived_ms));
      // Context length.
      CHECK(count_words(pr.request.context) <= static_cast<std::size_t>(p.context_words));
      CHECK(pr.candidates.size() <= static_cast<std::size_t>(p.n_candidates));
    }
    const auto& st = sim.machine.state();
    // Document integrity: the machine's document equals the client's copy.
    CHECK(st.document == sim.typed);
    CHECK(st.word_count == count_words(st.document));
    CHECK(in<phase::BelowThreshold>(sim.machine) == (st.word_count < static_cast<std::size_t>(p.min_words)));
    // Sequence numbers are dense.
    for (std::size_t i = 0; i < sim.log.size(); ++i) CHECK(sim.log[i].seq == i + 1);
    CHECK(count_kind(sim.log, EventKind::Dispatched) == static_cast<std::size_t>(sim.dispatches));
  }
}
