#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "bdpp/oracle.hpp"

using namespace bdpp;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string tmp_path(const char* name) {
  return std::string("/tmp/bdpp_oracle_") + name;
}

}  // namespace

TEST_CASE("task generation is deterministic in the seed") {
  SyntheticTaskParams p;
  p.seed = 7;
  const Dataset a = generate_task(p);
  const Dataset b = generate_task(p);
  REQUIRE(a.size() == p.n);
  CHECK(a.y == b.y);
  for (std::size_t i = 0; i < a.x.size(); ++i) CHECK(a.x.data[i] == b.x.data[i]);

  p.seed = 8;
  const Dataset c = generate_task(p);
  bool differs = false;
  for (std::size_t i = 0; i < a.x.size(); ++i)
    if (a.x.data[i] != c.x.data[i]) differs = true;
  CHECK(differs);
}

TEST_CASE("task classes are separated at the planted directions") {
  SyntheticTaskParams p;
  p.seed = 3;
  p.n = 1024;
  const Dataset d = generate_task(p);
  // per-class mean along each class's own direction vs the others'
  for (std::size_t c = 0; c < p.num_classes; ++c) {
    double own = 0.0, other = 0.0;
    std::size_t n_own = 0, n_other = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (static_cast<std::size_t>(d.y[i]) == c) {
        own += d.x.at(i, c);
        ++n_own;
      } else {
        other += d.x.at(i, c);
        ++n_other;
      }
    }
    own /= static_cast<double>(n_own);
    other /= static_cast<double>(n_other);
    CHECK(own - other > 2.0 * p.noise);
  }
  // labels cycle through all classes
  std::set<int> seen(d.y.begin(), d.y.end());
  CHECK(seen.size() == p.num_classes);
}

TEST_CASE("task rejects degenerate parameters") {
  SyntheticTaskParams p;
  p.dim = 2;
  p.num_classes = 4;
  CHECK_THROWS_AS(generate_task(p), std::invalid_argument);
}

TEST_CASE("genotype enumeration covers the whole space in counting order") {
  const OpSet ops = OpSet::canonical();
  const auto all = enumerate_genotypes(ops);
  REQUIRE(all.size() == 15625);
  CHECK(all.front().ops == std::vector<int>{0, 0, 0, 0, 0, 0});
  CHECK(all[1].ops == std::vector<int>{0, 0, 0, 0, 0, 1});
  CHECK(all[5].ops == std::vector<int>{0, 0, 0, 0, 1, 0});
  CHECK(all.back().ops == std::vector<int>{4, 4, 4, 4, 4, 4});
  std::set<std::string> uniq;
  for (const auto& g : all) uniq.insert(genotype_to_string(g, ops));
  CHECK(uniq.size() == all.size());
}

TEST_CASE("generated benchmark is complete with scores in [0,1]") {
  const TabularBenchmark b = TabularBenchmark::generate(17);
  REQUIRE(b.size() == 15625);
  CHECK(b.complete());
  double lo = 2.0, hi = -1.0;
  for (const auto& [key, score] : b.entries()) {
    CHECK(score >= 0.0);
    CHECK(score <= 1.0);
    lo = std::min(lo, score);
    hi = std::max(hi, score);
  }
  // min-max normalized: extremes attained
  CHECK(lo == 0.0);
  CHECK(hi == 1.0);
}

TEST_CASE("benchmark generation is seed-deterministic") {
  const TabularBenchmark a = TabularBenchmark::generate(5);
  const TabularBenchmark b = TabularBenchmark::generate(5);
  const TabularBenchmark c = TabularBenchmark::generate(6);
  REQUIRE(a.size() == b.size());
  bool same = true, differs = false;
  for (std::size_t i = 0; i < a.entries().size(); ++i) {
    if (a.entries()[i] != b.entries()[i]) same = false;
    if (a.entries()[i].second != c.entries()[i].second) differs = true;
  }
  CHECK(same);
  CHECK(differs);
}

TEST_CASE("the all-none genotype is the unique minimum") {
  const OpSet ops = OpSet::canonical();
  const TabularBenchmark b = TabularBenchmark::generate(11);
  const std::string all_none = genotype_to_string(Genotype{{0, 0, 0, 0, 0, 0}}, ops);
  const double s = b.evaluate(all_none);
  CHECK(s == 0.0);
  for (const auto& [key, score] : b.entries())
    if (key != all_none) CHECK(score > s);
}

TEST_CASE("best matches an independent exhaustive scan") {
  const TabularBenchmark b = TabularBenchmark::generate(23);
  const auto t0 = std::chrono::steady_clock::now();
  const auto [key, score] = b.best();
  const auto elapsed = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
  CHECK(elapsed < 1.0);
  // second route: scan the entry list directly
  std::string scan_key;
  double scan_score = -1.0;
  for (const auto& [k, s] : b.entries())
    if (s > scan_score) {
      scan_score = s;
      scan_key = k;
    }
  CHECK(key == scan_key);
  CHECK(score == scan_score);
  CHECK(score == 1.0);
  // the designed optimum: every edge keeps the rectified linear op
  const OpSet ops = OpSet::canonical();
  CHECK(key == genotype_to_string(Genotype{{1, 1, 3, 1, 1, 1}}, ops));
}

TEST_CASE("unknown genotype lookups throw") {
  const TabularBenchmark b = TabularBenchmark::generate(1);
  CHECK_THROWS_AS(b.evaluate("|bogus~0|"), std::out_of_range);
}

TEST_CASE("incomplete tables refuse to report a best") {
  const std::string path = tmp_path("partial.csv");
  {
    std::ofstream out(path);
    out << "genotype,score\n";
    out << "|none~0|+|none~0|none~1|+|none~0|none~1|none~2|,0.5\n";
  }
  const TabularBenchmark b = TabularBenchmark::load_csv(path);
  CHECK(!b.complete());
  try {
    b.best();
    FAIL("expected incomplete-table error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("missing") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("csv round trip is byte identical and score exact") {
  const TabularBenchmark b = TabularBenchmark::generate(42);
  const std::string p1 = tmp_path("a.csv"), p2 = tmp_path("b.csv");
  b.save_csv(p1);
  const std::string bytes1 = slurp(p1);
  CHECK(bytes1.rfind("genotype,score\n", 0) == 0);

  const TabularBenchmark loaded = TabularBenchmark::load_csv(p1);
  CHECK(loaded.provenance() == TabularBenchmark::Provenance::Imported);
  REQUIRE(loaded.size() == b.size());
  for (const auto& [key, score] : b.entries())
    CHECK(loaded.evaluate(key) == doctest::Approx(score).epsilon(1e-12));

  loaded.save_csv(p2);
  CHECK(slurp(p2) == bytes1);
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("malformed csv inputs are rejected") {
  const std::string path = tmp_path("bad.csv");
  {
    std::ofstream out(path);
    out << "wrong,header\n";
  }
  CHECK_THROWS_AS(TabularBenchmark::load_csv(path), IoError);
  {
    std::ofstream out(path);
    out << "genotype,score\nnocomma\n";
  }
  CHECK_THROWS_AS(TabularBenchmark::load_csv(path), IoError);
  {
    std::ofstream out(path);
    out << "genotype,score\n|skip~0|+|skip~0|skip~1|+|skip~0|skip~1|skip~2|,abc\n";
  }
  CHECK_THROWS_AS(TabularBenchmark::load_csv(path), IoError);
  {
    std::ofstream out(path);
    out << "genotype,score\ng,0.5\ng,0.6\n";
  }
  CHECK_THROWS_AS(TabularBenchmark::load_csv(path), IoError);
  CHECK_THROWS_AS(TabularBenchmark::load_csv("/nonexistent/x.csv"), IoError);
  std::remove(path.c_str());
}
