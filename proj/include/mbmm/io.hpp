#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "mbmm/dataset.hpp"
#include "mbmm/postprocess.hpp"
#include "mbmm/sampler.hpp"

namespace mbmm {

// One JSON object per retained draw:
//   {"iteration", "k", "k_nonempty", "log_posterior", "z" (1-based),
//    "pi", "theta" (k arrays of length p, one per component)}
std::string samples_to_jsonl(const PosteriorSamples& samples);
PosteriorSamples samples_from_jsonl(const std::string& text, Eigen::Index n, Eigen::Index p);

// Swap tally, per-chain move counts and warnings.
nlohmann::json samples_diagnostics(const PosteriorSamples& samples);

// unit_id, profile, prob_1..prob_K (profiles 1-based).
std::string assignments_csv(const ProfileSummary& summary,
                            const std::vector<std::string>& unit_ids);

// variable, profile_1..profile_K: posterior mean P(x_j = 1 | profile).
std::string theta_mean_csv(const ProfileSummary& summary,
                           const std::vector<std::string>& column_names);

std::string reclassification_csv(const ProfileSummary& summary,
                                 const std::vector<std::string>& unit_ids);

nlohmann::json summary_json(const ProfileSummary& summary);

// unit_id, variable, probability, imputed (probability thresholded at 0.5)
// for every unobserved cell.
std::string imputations_csv(const PosteriorSamples& samples, const BinaryDataset& data);

// Reads assignments_csv output back into unit id -> 1-based profile.
std::map<std::string, int> read_assignments(const std::string& path, int* profiles = nullptr);

// Copies a GeoJSON FeatureCollection and, for every feature whose
// properties[key] names a unit, injects "mbmm_profile" (1-based) and
// "mbmm_prob_<k>" fields. Features without a match get "mbmm_profile": null.
nlohmann::json join_geojson(const nlohmann::json& collection, const ProfileSummary& summary,
                            const std::vector<std::string>& unit_ids,
                            const std::string& key = "GEOID");

// Same join driven by an assignments table (unit id -> profile and
// probabilities), as written by assignments_csv.
nlohmann::json join_geojson_from_csv(const nlohmann::json& collection,
                                     const std::string& assignments_text,
                                     const std::string& key = "GEOID");

}  // namespace mbmm
