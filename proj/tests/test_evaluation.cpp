// Copyright 2026 The mrspoof Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "mrspoof/errors.hpp"
#include "mrspoof/evaluation.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace {

using namespace mrspoof;
using mrspoof::testing::TempDir;

using mrspoof::oracle::brute_force_eer;

void random_sets(std::mt19937_64& rng, std::vector<double>& tar, std::vector<double>& non) {
  const std::size_t nt = 1 + rng() % 40, nn = 1 + rng() % 60;
  const double sep = std::uniform_real_distribution<double>(-1, 3)(rng);
  const bool coarse = rng() % 3 == 0;  // rounded scores produce ties
  std::normal_distribution<double> nd(0, 1);
  auto draw = [&](double mu) {
    double v = mu + nd(rng);
    return coarse ? std::round(v * 4) / 4 : v;
  };
  tar.clear();
  non.clear();
  for (std::size_t i = 0; i < nt; ++i) tar.push_back(draw(sep));
  for (std::size_t i = 0; i < nn; ++i) non.push_back(draw(0));
}

ScoreTable random_table(std::mt19937_64& rng, const LabelTable& labels, double sep) {
  std::normal_distribution<double> nd(0, 1);
  ScoreTable t;
  for (const auto& [u, l] : labels) t[u] = nd(rng) + (l == kBonafideLabel ? sep : 0.0);
  return t;
}

LabelTable make_labels(std::size_t n_bona, std::size_t n_spoof) {
  LabelTable l;
  for (std::size_t i = 0; i < n_bona; ++i) l["b" + std::to_string(i)] = "bonafide";
  for (std::size_t i = 0; i < n_spoof; ++i) l["s" + std::to_string(i)] = "AA";
  return l;
}

// Logit row whose log-softmax at class 0 equals lp, other nine logits zero.
void set_row(Tensor<float>& t, std::size_t r, double lp) {
  const double p = std::exp(lp);
  t.at(r, 0) = static_cast<float>(std::log(9.0 * p / (1.0 - p)));
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("utterance score averages the bonafide log-probabilities") {
  Tensor<float> two({2, 10}, 0.0f);
  set_row(two, 0, -1.0);
  set_row(two, 1, -3.0);
  CHECK(utterance_score(two) == doctest::Approx(-2.0).epsilon(1e-6));
  Tensor<float> one({1, 10}, 0.0f);
  set_row(one, 0, -0.7);
  CHECK(utterance_score(one) == doctest::Approx(-0.7).epsilon(1e-6));
  for (std::size_t s : {1u, 3u, 17u})
    CHECK(utterance_score(Tensor<float>({s, 10}, 1.5f)) ==
          doctest::Approx(-std::log(10.0)).epsilon(1e-7));
}

TEST_CASE("EER fixture is exactly one third") {
  const std::vector<double> tar{0.9, 0.8, 0.7}, non{0.1, 0.2, 0.75};
  const auto r = compute_eer(tar, non);
  CHECK(r.eer == 1.0 / 3.0);
  CHECK(r.threshold > 0.7);
  CHECK(r.threshold <= 0.75);
  CHECK(r.n_target == 3);
  CHECK(r.n_nontarget == 3);
}

TEST_CASE("perfect separation gives zero EER") {
  const std::vector<double> tar{2, 3, 4}, non{-1, 0, 1.5};
  CHECK(compute_eer(tar, non).eer == 0.0);
}

TEST_CASE("EER matches the brute-force sweep on random sets") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> tar, non;
    random_sets(rng, tar, non);
    CAPTURE(i);
    CHECK(std::abs(compute_eer(tar, non).eer - brute_force_eer(tar, non)) < 1e-9);
  }
}

TEST_CASE("EER is invariant under strictly increasing transforms") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> tar, non;
    random_sets(rng, tar, non);
    const double e = compute_eer(tar, non).eer;
    auto f = [](double x) { return std::atan(x) * 3.0 + 11.0; };
    std::vector<double> t2, n2;
    for (double x : tar) t2.push_back(f(x));
    for (double x : non) n2.push_back(f(x));
    CHECK(compute_eer(t2, n2).eer == doctest::Approx(e).epsilon(1e-12));
  }
}

TEST_CASE("label swap with negated scores keeps the EER") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> tar, non;
    random_sets(rng, tar, non);
    std::vector<double> t2, n2;
    for (double x : non) t2.push_back(-x);
    for (double x : tar) n2.push_back(-x);
    CHECK(compute_eer(t2, n2).eer == doctest::Approx(compute_eer(tar, non).eer).epsilon(1e-12));
  }
}

TEST_CASE("EER needs both classes and labels for every score") {
  const std::vector<double> some{1, 2}, none;
  CHECK_THROWS(compute_eer(some, none));
  CHECK_THROWS(compute_eer(none, some));
  ScoreTable s{{"a", 1.0}, {"b", 0.0}};
  LabelTable l{{"a", "bonafide"}};
  CHECK_THROWS(compute_eer(s, l));
  l["b"] = "CC";
  CHECK(compute_eer(s, l).eer == 0.0);
}

TEST_CASE("operating points run from accept-all to reject-all") {
  const std::vector<double> tar{0.9, 0.8, 0.7}, non{0.1, 0.2, 0.75};
  const auto pts = operating_points(tar, non);
  REQUIRE(pts.size() >= 2);
  CHECK(pts.front().far == 1.0);
  CHECK(pts.front().frr == 0.0);
  CHECK(pts.back().far == 0.0);
  CHECK(pts.back().frr == 1.0);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    CHECK(pts[i].far <= pts[i - 1].far);
    CHECK(pts[i].frr >= pts[i - 1].frr);
  }
}

TEST_CASE("fusion examples") {
  std::mt19937_64 rng(1);
  const auto labels = make_labels(5, 9);
  const ScoreTable a = random_table(rng, labels, 1), b = random_table(rng, labels, 0.5),
                   c = random_table(rng, labels, 2);
  const ScoreTable ab[] = {a, b};
  const double w10[] = {1.0, 0.0};
  CHECK(fuse_scores(ab, w10) == a);
  const double w01[] = {0.0, 1.0};
  CHECK(fuse_scores(ab, w01) == b);

  const ScoreTable u1[] = {{{"u", -1.0}}, {{"u", -3.0}}};
  const double half[] = {0.5, 0.5};
  CHECK(fuse_scores(u1, half).at("u") == -2.0);

  const ScoreTable abc[] = {a, b, c};
  const double third[] = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  const auto f = fuse_scores(abc, third);
  for (const auto& [u, s] : f)
    CHECK(s == doctest::Approx((a.at(u) + b.at(u) + c.at(u)) / 3.0).epsilon(1e-14));
}

TEST_CASE("fusion rejects bad weights and mismatched utterances") {
  const ScoreTable t[] = {{{"u", 1.0}, {"v", 2.0}}, {{"u", 1.0}, {"w", 2.0}}};
  const double w[] = {0.5, 0.5};
  try {
    fuse_scores(t, w);
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("v") != std::string::npos);
    CHECK(msg.find("w") != std::string::npos);
  }
  const ScoreTable ok[] = {{{"u", 1.0}}, {{"u", 2.0}}};
  const double neg[] = {1.5, -0.5};
  CHECK_THROWS_AS(fuse_scores(ok, neg), ConfigError);
  const double sum[] = {0.5, 0.6};
  CHECK_THROWS_AS(fuse_scores(ok, sum), ConfigError);
  const double one[] = {1.0};
  CHECK_THROWS_AS(fuse_scores(ok, one), ConfigError);
}

TEST_CASE("simplex grid enumeration") {
  const auto g = simplex_grid(3, 0.5);
  REQUIRE(g.size() == 6);
  std::set<std::vector<double>> pts(g.begin(), g.end());
  CHECK(pts.size() == 6);
  for (const auto& p : std::vector<std::vector<double>>{
           {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0.5, 0.5, 0}, {0.5, 0, 0.5}, {0, 0.5, 0.5}})
    CHECK(pts.count(p) == 1);
  CHECK(std::is_sorted(g.begin(), g.end()));
  CHECK(simplex_grid(2, 0.05).size() == mrspoof::oracle::simplex_count(2, 20));
  CHECK(simplex_grid(3, 0.05).size() == mrspoof::oracle::simplex_count(3, 20));
  CHECK(mrspoof::oracle::simplex_count(3, 2) == 6);
  for (const auto& p : simplex_grid(3, 0.05)) {
    double s = 0;
    for (double x : p) s += x;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(simplex_grid(2, 0.3), ConfigError);
  CHECK_THROWS_AS(simplex_grid(2, 0.0), ConfigError);
}

TEST_CASE("identical systems resolve to the first grid point") {
  std::mt19937_64 rng(4);
  const auto labels = make_labels(6, 12);
  const auto a = random_table(rng, labels, 1);
  const ScoreTable tt[] = {a, a};
  const auto r = search_fusion_weights(tt, labels, 0.05);
  CHECK(r.weights == std::vector<double>{0.0, 1.0});
  CHECK(r.n_evaluated == 21);
  CHECK(r.dev_eer == compute_eer(a, labels).eer);
}

TEST_CASE("searched fusion is never worse than the best single system") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto labels = make_labels(3 + rng() % 8, 5 + rng() % 20);
    const std::size_t n = 2 + trial % 2;
    std::vector<ScoreTable> tables;
    for (std::size_t i = 0; i < n; ++i)
      tables.push_back(random_table(rng, labels, std::uniform_real_distribution<>(-1, 2)(rng)));
    const auto r = search_fusion_weights(tables, labels, n == 2 ? 0.05 : 0.1);
    double best = 1.0;
    for (const auto& t : tables) best = std::min(best, compute_eer(t, labels).eer);
    CHECK(r.dev_eer <= best);
    CHECK(r.dev_eer == compute_eer(fuse_scores(tables, r.weights), labels).eer);
  }
  const auto labels = make_labels(3, 3);
  const ScoreTable three[] = {random_table(rng, labels, 1), random_table(rng, labels, 1),
                              random_table(rng, labels, 1)};
  CHECK(search_fusion_weights(three, labels, 0.5).n_evaluated == 6);
  const ScoreTable single[] = {three[0]};
  CHECK_THROWS(search_fusion_weights(single, labels, 0.5));
}

TEST_CASE("score and label files round-trip") {
  TempDir dir("eval");
  std::mt19937_64 rng(6);
  const auto labels = make_labels(4, 7);
  const auto scores = random_table(rng, labels, 1);
  write_score_file(dir / "s.tsv", scores);
  CHECK(read_score_file(dir / "s.tsv") == scores);
  write_label_file(dir / "l.tsv", labels);
  CHECK(read_label_file(dir / "l.tsv") == labels);
  mrspoof::testing::write_text(dir / "dup.tsv", "a\t1\na\t2\n");
  CHECK_THROWS_AS(read_score_file(dir / "dup.tsv"), FormatError);
  mrspoof::testing::write_text(dir / "bad.tsv", "a\tx\n");
  CHECK_THROWS_AS(read_score_file(dir / "bad.tsv"), FormatError);
}

}  // TEST_SUITE
