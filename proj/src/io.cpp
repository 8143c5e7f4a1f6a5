#include "mbmm/io.hpp"

#include <cmath>
#include <sstream>

#include "mbmm/csv.hpp"
#include "mbmm/error.hpp"

namespace mbmm {

namespace {

template <typename Vector>
std::vector<typename Vector::Scalar> to_std(const Vector& v) {
  return std::vector<typename Vector::Scalar>(v.data(), v.data() + v.size());
}

struct UnitProfile {
  int profile = 0;  // 1-based
  std::vector<double> probability;
};

nlohmann::json join_features(const nlohmann::json& collection,
                             const std::map<std::string, UnitProfile>& units,
                             const std::string& key) {
  if (!collection.is_object() || collection.value("type", "") != "FeatureCollection" ||
      !collection.contains("features") || !collection["features"].is_array()) {
    throw ValidationError("GeoJSON input must be a FeatureCollection");
  }
  nlohmann::json out = collection;
  for (auto& feature : out["features"]) {
    if (!feature.contains("properties") || feature["properties"].is_null()) {
      feature["properties"] = nlohmann::json::object();
    }
    auto& properties = feature["properties"];
    std::string id;
    if (properties.contains(key)) {
      const auto& value = properties[key];
      id = value.is_string() ? value.get<std::string>() : value.dump();
    }
    const auto it = units.find(id);
    if (it == units.end()) {
      properties["mbmm_profile"] = nullptr;
      continue;
    }
    properties["mbmm_profile"] = it->second.profile;
    for (std::size_t k = 0; k < it->second.probability.size(); ++k) {
      properties["mbmm_prob_" + std::to_string(k + 1)] = it->second.probability[k];
    }
  }
  return out;
}

}  // namespace

std::string samples_to_jsonl(const PosteriorSamples& samples) {
  std::string out;
  for (const Draw& draw : samples.draws) {
    nlohmann::json record{{"iteration", draw.iteration},
                          {"k", draw.k},
                          {"k_nonempty", draw.k_nonempty},
                          {"log_posterior", draw.log_posterior}};
    if (draw.z.size() > 0) {
      std::vector<int> z = to_std(draw.z);
      for (int& label : z) ++label;
      record["z"] = z;
      record["pi"] = to_std(draw.pi);
      nlohmann::json theta = nlohmann::json::array();
      for (Eigen::Index c = 0; c < draw.theta.cols(); ++c) {
        theta.push_back(to_std(Eigen::VectorXd(draw.theta.col(c))));
      }
      record["theta"] = theta;
    }
    out += record.dump();
    out.push_back('\n');
  }
  return out;
}

PosteriorSamples samples_from_jsonl(const std::string& text, Eigen::Index n, Eigen::Index p) {
  PosteriorSamples samples;
  samples.n = n;
  samples.p = p;
  std::istringstream in(text);
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    try {
      const auto record = nlohmann::json::parse(line);
      Draw draw;
      draw.iteration = record.at("iteration").get<int>();
      draw.k = record.at("k").get<int>();
      draw.k_nonempty = record.at("k_nonempty").get<int>();
      draw.log_posterior = record.at("log_posterior").get<double>();
      if (record.contains("z")) {
        const auto z = record["z"].get<std::vector<int>>();
        if (static_cast<Eigen::Index>(z.size()) != n) throw ValidationError("z has wrong length");
        draw.z.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) draw.z[i] = z[static_cast<std::size_t>(i)] - 1;
        const auto pi = record["pi"].get<std::vector<double>>();
        draw.pi = Eigen::Map<const Eigen::VectorXd>(pi.data(), static_cast<Eigen::Index>(pi.size()));
        const auto& theta = record["theta"];
        draw.theta.resize(p, static_cast<Eigen::Index>(theta.size()));
        for (std::size_t c = 0; c < theta.size(); ++c) {
          const auto column = theta[c].get<std::vector<double>>();
          if (static_cast<Eigen::Index>(column.size()) != p) {
            throw ValidationError("theta column has wrong length");
          }
          draw.theta.col(static_cast<Eigen::Index>(c)) =
              Eigen::Map<const Eigen::VectorXd>(column.data(), p);
        }
      }
      samples.draws.push_back(std::move(draw));
    } catch (const nlohmann::json::exception& error) {
      throw ValidationError("samples line " + std::to_string(line_number) + ": " + error.what());
    } catch (const ValidationError& error) {
      throw ValidationError("samples line " + std::to_string(line_number) + ": " + error.what());
    }
  }
  return samples;
}

nlohmann::json samples_diagnostics(const PosteriorSamples& samples) {
  nlohmann::json chains = nlohmann::json::array();
  for (const auto& chain : samples.chains) {
    chains.push_back({{"heat", chain.heat},
                      {"mean_k_nonempty", chain.mean_k_nonempty},
                      {"birth_proposals", chain.moves.birth_proposals},
                      {"birth_accepts", chain.moves.birth_accepts},
                      {"death_proposals", chain.moves.death_proposals},
                      {"death_accepts", chain.moves.death_accepts}});
  }
  return {{"retained_draws", samples.draws.size()},
          {"swap_attempts", to_std(samples.swaps.attempts)},
          {"swap_accepts", to_std(samples.swaps.accepts)},
          {"swap_acceptance", samples.swaps.acceptance_rate()},
          {"chains", chains},
          {"warnings", samples.warnings}};
}

std::string assignments_csv(const ProfileSummary& summary,
                            const std::vector<std::string>& unit_ids) {
  std::ostringstream out;
  out << "unit_id,profile";
  for (int k = 1; k <= summary.profiles(); ++k) out << ",prob_" << k;
  out << '\n';
  for (Eigen::Index i = 0; i < summary.hard_assignment.size(); ++i) {
    out << csv::escape(unit_ids[static_cast<std::size_t>(i)], ',') << ','
        << summary.hard_assignment[i] + 1;
    for (int k = 0; k < summary.profiles(); ++k) {
      out << ',' << csv::format_double(summary.assignment_probability(i, k));
    }
    out << '\n';
  }
  return out.str();
}

std::string theta_mean_csv(const ProfileSummary& summary,
                           const std::vector<std::string>& column_names) {
  std::ostringstream out;
  out << "variable";
  for (int k = 1; k <= summary.profiles(); ++k) out << ",profile_" << k;
  out << '\n';
  for (Eigen::Index j = 0; j < summary.theta_mean.rows(); ++j) {
    out << csv::escape(column_names[static_cast<std::size_t>(j)], ',');
    for (int k = 0; k < summary.profiles(); ++k) {
      out << ',' << csv::format_double(summary.theta_mean(j, k));
    }
    out << '\n';
  }
  return out.str();
}

std::string reclassification_csv(const ProfileSummary& summary,
                                 const std::vector<std::string>& unit_ids) {
  std::ostringstream out;
  out << "unit_id,from_raw_profile,to_profile\n";
  for (const auto& move : summary.reclassification_log) {
    out << csv::escape(unit_ids[static_cast<std::size_t>(move.unit)], ',') << ','
        << move.from + 1 << ',' << move.to + 1 << '\n';
  }
  return out.str();
}

nlohmann::json summary_json(const ProfileSummary& summary) {
  return {{"k_map", summary.k_map},
          {"profiles", summary.profiles()},
          {"pi_mean", to_std(summary.pi_mean)},
          {"sizes", to_std(summary.sizes())},
          {"reclassified_units", summary.reclassification_log.size()}};
}

std::string imputations_csv(const PosteriorSamples& samples, const BinaryDataset& data) {
  std::ostringstream out;
  out << "unit_id,variable,probability,imputed\n";
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index j = 0; j < data.p(); ++j) {
      if (data.observed(i, j)) continue;
      const double probability = samples.imputation_mean(i, j);
      out << csv::escape(data.unit_ids[static_cast<std::size_t>(i)], ',') << ','
          << csv::escape(data.column_names[static_cast<std::size_t>(j)], ',') << ','
          << csv::format_double(probability) << ',' << (probability >= 0.5 ? 1 : 0) << '\n';
    }
  }
  return out.str();
}

std::map<std::string, int> read_assignments(const std::string& path, int* profiles) {
  const auto records = csv::read_file(path, ',');
  if (records.size() < 2) throw ValidationError("assignments table '" + path + "' is empty");
  const auto& header = records.front().fields;
  if (header.size() < 2 || header[0] != "unit_id" || header[1] != "profile") {
    throw ValidationError("assignments table must start with unit_id,profile");
  }
  std::map<std::string, int> out;
  int highest = 0;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& fields = records[r].fields;
    if (fields.size() < 2) throw ValidationError("assignments line " + std::to_string(records[r].line) + " is short");
    int profile = 0;
    try {
      profile = std::stoi(fields[1]);
    } catch (const std::exception&) {
      throw ValidationError("assignments line " + std::to_string(records[r].line) +
                            ": profile '" + fields[1] + "' is not an integer");
    }
    out[fields[0]] = profile;
    highest = std::max(highest, profile);
  }
  if (profiles != nullptr) *profiles = std::max(highest, static_cast<int>(header.size()) - 2);
  return out;
}

nlohmann::json join_geojson(const nlohmann::json& collection, const ProfileSummary& summary,
                            const std::vector<std::string>& unit_ids, const std::string& key) {
  std::map<std::string, UnitProfile> units;
  for (Eigen::Index i = 0; i < summary.hard_assignment.size(); ++i) {
    UnitProfile unit;
    unit.profile = summary.hard_assignment[i] + 1;
    unit.probability = to_std(Eigen::VectorXd(summary.assignment_probability.row(i).transpose()));
    units[unit_ids[static_cast<std::size_t>(i)]] = std::move(unit);
  }
  return join_features(collection, units, key);
}

nlohmann::json join_geojson_from_csv(const nlohmann::json& collection,
                                     const std::string& assignments_text,
                                     const std::string& key) {
  const auto records = csv::parse(assignments_text, ',');
  if (records.size() < 2) throw ValidationError("assignments table is empty");
  std::map<std::string, UnitProfile> units;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& fields = records[r].fields;
    if (fields.size() < 2) throw ValidationError("assignments line " + std::to_string(records[r].line) + " is short");
    UnitProfile unit;
    try {
      unit.profile = std::stoi(fields[1]);
      for (std::size_t c = 2; c < fields.size(); ++c) unit.probability.push_back(std::stod(fields[c]));
    } catch (const std::exception&) {
      throw ValidationError("assignments line " + std::to_string(records[r].line) +
                            " holds a non-numeric value");
    }
    units[fields[0]] = std::move(unit);
  }
  return join_features(collection, units, key);
}

}  // namespace mbmm
