#include <doctest.h>

#include <cmath>

#include "core/metrics.hpp"
#include "support/helpers.hpp"
#include "support/oracles.hpp"

using namespace distner;

namespace {

std::vector<std::vector<BioTag>> random_rows(Rng& rng, LabelSpace& ls, int sentences) {
  std::vector<std::vector<BioTag>> rows;
  for (int s = 0; s < sentences; ++s) {
    int len = 1 + static_cast<int>(rng.below(10));
    std::vector<BioTag> row;
    int i = 0;
    while (i < len) {
      if (rng.bernoulli(0.4)) {
        int type = static_cast<int>(rng.below(static_cast<std::uint64_t>(ls.size())));
        int end = std::min(len - 1, i + static_cast<int>(rng.below(2)));
        row.push_back(BioTag{BioTag::B, type});
        for (int k = i + 1; k <= end; ++k) row.push_back(BioTag{BioTag::I, type});
        i = end + 1;
      } else {
        row.push_back(BioTag{BioTag::O, -1});
        ++i;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

TEST_CASE("perfect predictions score one and all-O predictions zero") {
  LabelSpace ls;
  std::vector<std::vector<BioTag>> gold = {
      testutil::tags(ls, {"B-PER", "I-PER", "O"}),
      testutil::tags(ls, {"O", "B-LOC", "O"}),
  };
  Prf perfect = entity_f1(gold, gold);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);

  std::vector<std::vector<BioTag>> all_o = {
      testutil::tags(ls, {"O", "O", "O"}),
      testutil::tags(ls, {"O", "O", "O"}),
  };
  Prf blank = entity_f1(all_o, gold);
  CHECK(blank.precision == 0.0);
  CHECK(blank.precision_zero_denominator);
  CHECK(blank.recall == 0.0);
  CHECK(blank.f1 == 0.0);
}

TEST_CASE("hand-counted fixture: three hits, one phantom, two misses") {
  LabelSpace ls;
  std::vector<std::vector<BioTag>> gold = {
      testutil::tags(ls, {"B-PER", "I-PER", "O"}),   // hit
      testutil::tags(ls, {"B-LOC", "O", "O"}),       // hit
      testutil::tags(ls, {"O", "B-ORG", "O"}),       // hit
      testutil::tags(ls, {"B-PER", "O", "B-LOC"}),   // both missed
      testutil::tags(ls, {"O", "O", "O"}),           // phantom lives here
  };
  std::vector<std::vector<BioTag>> pred = {
      testutil::tags(ls, {"B-PER", "I-PER", "O"}),
      testutil::tags(ls, {"B-LOC", "O", "O"}),
      testutil::tags(ls, {"O", "B-ORG", "O"}),
      testutil::tags(ls, {"O", "O", "O"}),
      testutil::tags(ls, {"O", "B-PER", "O"}),
  };
  Prf r = entity_f1(pred, gold);
  CHECK(r.tp == 3);
  CHECK(r.fp == 1);
  CHECK(r.fn == 2);
  CHECK(r.precision == doctest::Approx(0.75));
  CHECK(r.recall == doctest::Approx(0.6));
  CHECK(r.f1 == doctest::Approx(2.0 * 0.75 * 0.6 / (0.75 + 0.6)));
}

TEST_CASE("swapping prediction and gold swaps precision and recall") {
  LabelSpace ls;
  ls.add("A");
  ls.add("B");
  Rng rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    auto x = random_rows(rng, ls, 6);
    Rng rng2(rng.next());
    auto y = random_rows(rng2, ls, 6);
    for (std::size_t s = 0; s < x.size(); ++s)
      y[s].resize(x[s].size(), BioTag{BioTag::O, -1});
    Prf fwd = entity_f1(x, y);
    Prf rev = entity_f1(y, x);
    CHECK(fwd.precision == rev.recall);
    CHECK(fwd.recall == rev.precision);
    CHECK(fwd.f1 == doctest::Approx(rev.f1));
    // And both agree with the multiset-counting reference.
    Prf ref = oracles::entity_prf(x, y);
    CHECK(fwd.tp == ref.tp);
    CHECK(fwd.fp == ref.fp);
    CHECK(fwd.fn == ref.fn);
  }
}

TEST_CASE("mismatched sentence counts or lengths are rejected") {
  LabelSpace ls;
  std::vector<std::vector<BioTag>> two = {testutil::tags(ls, {"O"}),
                                          testutil::tags(ls, {"O"})};
  std::vector<std::vector<BioTag>> one = {testutil::tags(ls, {"O"})};
  CHECK_THROWS_AS(entity_f1(two, one), Error);
  std::vector<std::vector<BioTag>> wide = {testutil::tags(ls, {"O", "O"})};
  CHECK_THROWS_AS(token_f1(wide, one), Error);
}

TEST_CASE("token-level scoring rewards partial matches that span scoring rejects") {
  LabelSpace ls;
  std::vector<std::vector<BioTag>> gold = {testutil::tags(ls, {"B-PER", "I-PER", "O"})};
  std::vector<std::vector<BioTag>> pred = {testutil::tags(ls, {"B-PER", "O", "O"})};
  CHECK(entity_f1(pred, gold).f1 == 0.0);
  Prf tok = token_f1(pred, gold);
  CHECK(tok.tp == 1);
  CHECK(tok.fn == 1);
  CHECK(tok.f1 > 0.0);
}

TEST_CASE("flagging exactly the hidden entities gives perfect diagnostics") {
  std::vector<NegativeOutcome> outcomes;
  for (int i = 0; i < 10; ++i)
    outcomes.push_back({i % 3 == 0, i % 3 == 0});
  FnReport r = fn_metrics(outcomes);
  REQUIRE(r.fn_recall.has_value());
  REQUIRE(r.fn_precision.has_value());
  CHECK(*r.fn_recall == 1.0);
  CHECK(*r.fn_precision == 1.0);
}

TEST_CASE("an all-quiet model has zero recall and no defined precision") {
  std::vector<NegativeOutcome> outcomes(8);
  outcomes[2].hidden_entity = true;
  FnReport r = fn_metrics(outcomes);
  REQUIRE(r.fn_recall.has_value());
  CHECK(*r.fn_recall == 0.0);
  CHECK_FALSE(r.fn_precision.has_value());

  // No hidden entities at all: recall is undefined instead.
  FnReport none = fn_metrics(std::vector<NegativeOutcome>(5));
  CHECK_FALSE(none.fn_recall.has_value());
}

TEST_CASE("hidden-entity diagnostics match the set comprehension on random data") {
  Rng rng(37);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<NegativeOutcome> outcomes;
    int n = static_cast<int>(rng.below(60));
    for (int i = 0; i < n; ++i)
      outcomes.push_back({rng.bernoulli(0.3), rng.bernoulli(0.4)});
    FnReport r = fn_metrics(outcomes);
    oracles::FnCounts c = oracles::fn_counts(outcomes);
    CHECK(r.hidden_total == c.hidden);
    CHECK(r.flagged_total == c.flagged);
    CHECK(r.hidden_flagged == c.hidden_flagged);
    if (c.hidden > 0)
      CHECK(*r.fn_recall ==
            static_cast<double>(c.hidden_flagged) / static_cast<double>(c.hidden));
    CHECK(r.hidden_flagged <= r.hidden_total);
    CHECK(r.hidden_flagged <= r.flagged_total);
  }
}

TEST_CASE("a separable confidence split finds the smallest winning threshold") {
  std::vector<std::pair<double, bool>> data;
  for (int i = 0; i < 5; ++i) data.push_back({0.2, true});
  for (int i = 0; i < 7; ++i) data.push_back({0.9, false});
  TauSearchResult r = optimal_tau(data);
  CHECK(r.tau == doctest::Approx(0.201));
  CHECK(r.ne_recall == 1.0);
  CHECK(r.ne_precision == 1.0);
  CHECK(r.flagged == 5);
}

TEST_CASE("threshold search needs at least one noisy positive") {
  CHECK_THROWS_AS(optimal_tau({{0.5, false}, {0.7, false}}), Error);
}

TEST_CASE("threshold search agrees with an exhaustive independent rescan") {
  Rng rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::pair<double, bool>> data;
    for (int i = 0; i < 200; ++i)
      data.push_back({rng.uniform01(), rng.bernoulli(0.3)});
    bool any_noisy = false;
    for (const auto& [c, n] : data)
      if (n) any_noisy = true;
    if (!any_noisy) data[0].second = true;

    TauSearchResult r = optimal_tau(data);
    oracles::TauScan ref = oracles::tau_scan(data);
    CHECK(r.tau == ref.tau);
    CHECK(r.ne_recall == doctest::Approx(ref.recall).epsilon(1e-12));
    CHECK(r.ne_precision == doctest::Approx(ref.precision).epsilon(1e-12));

    // The reported threshold really is a global grid maximum.
    double best_elsewhere = -1.0;
    for (int k = 0; k <= 1000; ++k) {
      double tau = k / 1000.0;
      std::int64_t fl = 0, fn = 0;
      for (const auto& [conf, noisy] : data)
        if (conf < tau) {
          ++fl;
          if (noisy) ++fn;
        }
      double rec = static_cast<double>(fn) / static_cast<double>(r.noisy_total);
      double prec = fl > 0 ? static_cast<double>(fn) / static_cast<double>(fl) : 0.0;
      double h = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
      best_elsewhere = std::max(best_elsewhere, h);
    }
    double at_tau = r.ne_precision + r.ne_recall > 0
                        ? 2 * r.ne_precision * r.ne_recall / (r.ne_precision + r.ne_recall)
                        : 0.0;
    CHECK(at_tau == doctest::Approx(best_elsewhere).epsilon(1e-12));
  }
}

TEST_CASE("removing a pure phantom span never lowers the score") {
  LabelSpace ls;
  std::vector<std::vector<BioTag>> gold = {
      testutil::tags(ls, {"B-PER", "O", "B-LOC", "O", "O"})};
  std::vector<std::vector<BioTag>> pred = {
      testutil::tags(ls, {"B-PER", "O", "B-LOC", "O", "B-ORG"})};
  std::vector<std::vector<BioTag>> trimmed = {
      testutil::tags(ls, {"B-PER", "O", "B-LOC", "O", "O"})};
  CHECK(entity_f1(trimmed, gold).f1 >= entity_f1(pred, gold).f1);
}
