#include <doctest.h>

#include <json.hpp>
#include <sstream>

#include "defilab/cli.hpp"
#include "defilab/corpus.hpp"
#include "defilab/definability.hpp"

using namespace defilab;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("elements table") {
  const auto r = run({"elements", "gf:2,2", "--rank", "unbounded", "--params", "none"});
  CHECK(r.code == cli::kExitOk);
  CHECK(r.out.find("dcl = {0,1}") != std::string::npos);
  CHECK(r.out.find("k* = 5") != std::string::npos);
}

TEST_CASE("elements json matches the library") {
  const auto r = run({"elements", "gf:2,2", "--rank", "unbounded", "--format", "json"});
  REQUIRE(r.code == cli::kExitOk);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["schema_version"] == cli::kSchemaVersion);
  CHECK(j["budget"]["effective_rank"] == 5);
  const auto lib = classify_elements(gen_finite_field(2, 2), Budget::unbounded());
  REQUIRE(j["elements"].size() == lib.reports.size());
  for (std::size_t i = 0; i < lib.reports.size(); ++i) CHECK(j["elements"][i]["degree"] == lib.reports[i].degree);
}

TEST_CASE("subsets json") {
  const auto r = run({"subsets", "linord:2", "--rank", "1", "--params", "none", "--format", "json"});
  REQUIRE(r.code == cli::kExitOk);
  const auto j = nlohmann::json::parse(r.out);
  const auto& subsets = j["subsets"];
  REQUIRE(subsets.size() == 4);
  for (int i : {1, 2}) {
    CHECK(subsets[i]["explicit"] == true);
    CHECK(subsets[i]["implicit"] == false);
    CHECK(subsets[i]["degree"] == 2);
  }
}

TEST_CASE("hierarchy report") {
  const auto r = run({"hierarchy", "hf:0", "--op", "imp", "--rank", "unbounded", "--params", "none", "--steps", "3"});
  CHECK(r.code == cli::kExitOk);
  CHECK(r.out.find("stage 3: 16 sets = V_4") != std::string::npos);
  CHECK(r.out.find("no divergence from V_n") != std::string::npos);
  const auto both = run({"hierarchy", "hf:0", "--op", "both", "--rank", "unbounded", "--steps", "3", "--format", "json"});
  REQUIRE(both.code == cli::kExitOk);
  const auto j = nlohmann::json::parse(both.out);
  CHECK(j["def_imp_divergence"].is_null());
}

TEST_CASE("check, witness, convert and pin") {
  auto r = run({"check", "linord:2", "--formula", "exists y. x < y", "--assign", "x=0"});
  CHECK(r.code == 0);
  CHECK(r.out.find("value: true") != std::string::npos);
  r = run({"witness", "gf:2,2", "--element", "2", "--params", "2", "--rank", "1"});
  CHECK(r.code == 0);
  CHECK(r.out.find("x1 = @2") != std::string::npos);
  r = run({"convert", "linord:2", "--implicit", "exists x. A(x) & forall y. (A(y) -> y = x)", "--target", "{0}",
           "--format", "json"});
  REQUIRE(r.code == 0);
  CHECK(nlohmann::json::parse(r.out)["added_params"] == nlohmann::json::array({0}));
  r = run({"pin", "linord:3", "--set", "exists y. x < y", "--order", "x < y", "--format", "json"});
  REQUIRE(r.code == 0);
  CHECK(nlohmann::json::parse(r.out)["pins"].size() == 2);
  r = run({"pin", "linord:3", "--set", "x = x", "--order", "x < y & ~x < y"});
  CHECK(r.code == cli::kExitAnalysis);
}

TEST_CASE("exit codes") {
  CHECK(run({"elements", "linord:2", "--rank", "nope"}).code == cli::kExitUsage);
  CHECK(run({"frobnicate"}).code == cli::kExitUsage);
  CHECK(run({}).code == cli::kExitUsage);
  CHECK(run({"show", "nosuch:1"}).code == cli::kExitAnalysis);
  CHECK(run({"subsets", "linord:30", "--rank", "unbounded"}).code == cli::kExitCap);
  const auto bad = run({"check", "linord:2", "--formula", "x <"});
  CHECK(bad.code == cli::kExitAnalysis);
  CHECK_FALSE(bad.err.empty());
  CHECK(bad.out.empty());
}

TEST_CASE("reports do not depend on the thread count") {
  const std::vector<std::vector<std::string>> queries{
      {"subsets", "cycle:6", "--rank", "2", "--format", "json"},
      {"elements", "gf:3,2", "--rank", "unbounded", "--witnesses", "--format", "json"},
      {"gap", "digraphs:3", "--rank", "1", "--format", "json"},
  };
  for (const auto& q : queries) {
    auto one = q;
    one.insert(one.end(), {"--threads", "1"});
    auto eight = q;
    eight.insert(eight.end(), {"--threads", "8"});
    const auto a = run(one);
    const auto b = run(eight);
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(run(one).out == a.out);
  }
}
