#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "mbmm/csv.hpp"
#include "mbmm/error.hpp"
#include "mbmm/io.hpp"

using namespace mbmm;

namespace {

PosteriorSamples two_draws() {
  PosteriorSamples s;
  s.n = 3;
  s.p = 2;
  for (int t = 0; t < 2; ++t) {
    Draw d;
    d.iteration = 10 * (t + 1);
    d.k = 2 + t;
    d.k_nonempty = 2;
    d.log_posterior = -12.345678901234567 - t;
    d.z = Eigen::Vector3i(0, 1, t);
    d.pi = Eigen::VectorXd::Constant(d.k, 1.0 / d.k);
    d.theta = Eigen::MatrixXd::Constant(2, d.k, 0.1 / 3.0);
    d.theta(1, 0) = 0.999999999;
    s.draws.push_back(d);
  }
  return s;
}

ProfileSummary small_summary() {
  ProfileSummary s;
  s.k_map = 2;
  s.theta_mean.resize(2, 2);
  s.theta_mean << 0.9, 0.1, 0.25, 0.75;
  s.pi_mean = Eigen::Vector2d(2.0 / 3.0, 1.0 / 3.0);
  s.assignment_probability.resize(3, 2);
  s.assignment_probability << 0.8, 0.2, 1.0, 0.0, 0.3, 0.7;
  s.hard_assignment = Eigen::Vector3i(0, 0, 1);
  s.reclassification_log.push_back({2, 2, 1});
  return s;
}

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "mbmm_test_io";
  std::filesystem::create_directories(dir);
  return dir / name;
}

nlohmann::json counties() {
  return nlohmann::json::parse(R"({
    "type": "FeatureCollection",
    "features": [
      {"type": "Feature", "properties": {"GEOID": "a", "name": "A"}, "geometry": null},
      {"type": "Feature", "properties": {"GEOID": "zz"}, "geometry": null},
      {"type": "Feature", "geometry": {"type": "Point", "coordinates": [0, 0]}},
      {"type": "Feature", "properties": {"GEOID": "c"}, "geometry": null}
    ]})");
}

}  // namespace

TEST_CASE("samples survive a JSONL round trip exactly") {
  const PosteriorSamples s = two_draws();
  const std::string text = samples_to_jsonl(s);
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
  CHECK(text.find("\"z\":[1,2,1]") != std::string::npos);
  const PosteriorSamples back = samples_from_jsonl(text, 3, 2);
  REQUIRE(back.draws.size() == 2);
  for (std::size_t t = 0; t < 2; ++t) {
    CHECK(back.draws[t].iteration == s.draws[t].iteration);
    CHECK(back.draws[t].k == s.draws[t].k);
    CHECK(back.draws[t].log_posterior == s.draws[t].log_posterior);
    CHECK(back.draws[t].z == s.draws[t].z);
    CHECK(back.draws[t].pi == s.draws[t].pi);
    CHECK(back.draws[t].theta == s.draws[t].theta);
  }
  CHECK(samples_to_jsonl(back) == text);
}

TEST_CASE("draws without parameters serialize only the scalars") {
  PosteriorSamples s = two_draws();
  for (auto& d : s.draws) {
    d.z.resize(0);
    d.pi.resize(0);
    d.theta.resize(0, 0);
  }
  const std::string text = samples_to_jsonl(s);
  CHECK(text.find("theta") == std::string::npos);
  CHECK(samples_from_jsonl(text, 3, 2).draws[1].k == 3);
}

TEST_CASE("malformed sample lines name the line") {
  CHECK_THROWS_WITH_AS(samples_from_jsonl("{\"iteration\":1,\"k\":1,\"k_nonempty\":1,"
                                          "\"log_posterior\":0}\n{oops}\n",
                                          3, 2),
                       doctest::Contains("line 2"), ValidationError);
  CHECK_THROWS_AS(samples_from_jsonl("{\"iteration\":1,\"k\":1,\"k_nonempty\":1,"
                                     "\"log_posterior\":0,\"z\":[1],\"pi\":[1],\"theta\":[[0.5,0.5]]}",
                                     3, 2),
                  ValidationError);
}

TEST_CASE("profile tables") {
  const ProfileSummary s = small_summary();
  const std::vector<std::string> ids{"a", "b", "c"};
  CHECK(assignments_csv(s, ids) ==
        "unit_id,profile,prob_1,prob_2\na,1,0.8,0.2\nb,1,1,0\nc,2,0.3,0.7\n");
  CHECK(theta_mean_csv(s, {"pct_poverty", "pct_uninsured"}) ==
        "variable,profile_1,profile_2\npct_poverty,0.9,0.1\npct_uninsured,0.25,0.75\n");
  CHECK(reclassification_csv(s, ids) == "unit_id,from_raw_profile,to_profile\nc,3,2\n");
  const auto json = summary_json(s);
  CHECK(json["profiles"] == 2);
  CHECK(json["sizes"] == nlohmann::json::array({2, 1}));
  CHECK(json["reclassified_units"] == 1);
}

TEST_CASE("assignments read back from disk") {
  const auto path = temp_file("assignments.csv");
  csv::write_atomic(path.string(), assignments_csv(small_summary(), {"a", "b", "c"}));
  int profiles = 0;
  const auto map = read_assignments(path.string(), &profiles);
  CHECK(map == std::map<std::string, int>{{"a", 1}, {"b", 1}, {"c", 2}});
  CHECK(profiles == 2);
  csv::write_atomic(path.string(), "unit,profile\na,1\n");
  CHECK_THROWS_AS(read_assignments(path.string()), ValidationError);
  csv::write_atomic(path.string(), "unit_id,profile\na,one\n");
  CHECK_THROWS_WITH_AS(read_assignments(path.string()), doctest::Contains("'one'"),
                       ValidationError);
  CHECK_THROWS_AS(read_assignments((path.parent_path() / "missing.csv").string()),
                  ValidationError);
}

TEST_CASE("imputation table lists only unobserved cells") {
  BinaryMatrix x(2, 2);
  x << 1, 0, 0, 1;
  MaskMatrix observed(2, 2);
  observed << true, false, true, true;
  const BinaryDataset data = BinaryDataset::from_matrix(x, observed);
  PosteriorSamples s;
  s.imputation_mean = Eigen::MatrixXd::Constant(2, 2, std::numeric_limits<double>::quiet_NaN());
  s.imputation_mean(0, 1) = 0.625;
  CHECK(imputations_csv(s, data) == "unit_id,variable,probability,imputed\nu1,v2,0.625,1\n");
}

TEST_CASE("GeoJSON join fills matches and nulls the rest") {
  const auto joined = join_geojson(counties(), small_summary(), {"a", "b", "c"});
  const auto& f = joined["features"];
  CHECK(f[0]["properties"]["mbmm_profile"] == 1);
  CHECK(f[0]["properties"]["mbmm_prob_2"] == 0.2);
  CHECK(f[0]["properties"]["name"] == "A");
  CHECK(f[1]["properties"]["mbmm_profile"].is_null());
  CHECK_FALSE(f[1]["properties"].contains("mbmm_prob_1"));
  CHECK(f[2]["properties"]["mbmm_profile"].is_null());
  CHECK(f[2]["geometry"]["type"] == "Point");
  CHECK(f[3]["properties"]["mbmm_profile"] == 2);
  const auto via_csv =
      join_geojson_from_csv(counties(), assignments_csv(small_summary(), {"a", "b", "c"}));
  CHECK(via_csv == joined);
}

TEST_CASE("GeoJSON join uses a configurable key and numeric ids") {
  auto collection = counties();
  collection["features"][0]["properties"]["fips"] = 25001;
  const auto joined =
      join_geojson(collection, small_summary(), {"25001", "b", "c"}, "fips");
  CHECK(joined["features"][0]["properties"]["mbmm_profile"] == 1);
  CHECK(joined["features"][3]["properties"]["mbmm_profile"].is_null());
  CHECK_THROWS_AS(join_geojson(nlohmann::json::object(), small_summary(), {"a", "b", "c"}),
                  ValidationError);
}
