#include "mbmm/postprocess.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "mbmm/error.hpp"

namespace mbmm {

int infer_k_map(std::span<const int> k_nonempty) {
  if (k_nonempty.empty()) throw DomainError("cannot infer K_map from zero draws");
  std::map<int, long> counts;
  for (const int k : k_nonempty) ++counts[k];
  int best = counts.begin()->first;
  long best_count = counts.begin()->second;
  for (const auto& [k, count] : counts) {
    if (count > best_count) {
      best = k;
      best_count = count;
    }
  }
  return best;
}

int infer_k_map(const PosteriorSamples& samples) {
  const Eigen::VectorXi trace = samples.k_nonempty_trace();
  return infer_k_map(std::span<const int>(trace.data(), static_cast<std::size_t>(trace.size())));
}

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  // Potentials formulation, 1-based internally.
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw DomainError("assignment cost matrix must be square");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), min_slack(n + 1);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int row = 1; row <= n; ++row) {
    match[0] = row;
    int column = 0;
    std::fill(min_slack.begin(), min_slack.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[column] = 1;
      const int current_row = match[column];
      double delta = inf;
      int next = 0;
      for (int c = 1; c <= n; ++c) {
        if (used[c]) continue;
        const double slack = cost(current_row - 1, c - 1) - u[current_row] - v[c];
        if (slack < min_slack[c]) {
          min_slack[c] = slack;
          way[c] = column;
        }
        if (min_slack[c] < delta) {
          delta = min_slack[c];
          next = c;
        }
      }
      for (int c = 0; c <= n; ++c) {
        if (used[c]) {
          u[match[c]] += delta;
          v[c] -= delta;
        } else {
          min_slack[c] -= delta;
        }
      }
      column = next;
    } while (match[column] != 0);
    do {
      const int previous = way[column];
      match[column] = match[previous];
      column = previous;
    } while (column != 0);
  }
  std::vector<int> assignment(static_cast<std::size_t>(n), -1);
  for (int c = 1; c <= n; ++c) assignment[static_cast<std::size_t>(match[c] - 1)] = c - 1;
  return assignment;
}

int mismatch_count(const Eigen::Ref<const Eigen::VectorXi>& z,
                   const Eigen::Ref<const Eigen::VectorXi>& pivot,
                   std::span<const int> permutation) {
  int mismatches = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    mismatches += permutation[static_cast<std::size_t>(z[i])] != pivot[i];
  }
  return mismatches;
}

std::vector<int> ecr_permutation(const Eigen::Ref<const Eigen::VectorXi>& z,
                                 const Eigen::Ref<const Eigen::VectorXi>& pivot, int k) {
  if (z.size() != pivot.size()) throw DomainError("allocation and pivot lengths differ");
  // cost(a, b) = units labelled a in z that the pivot does not label b
  Eigen::MatrixXd agreement = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd label_counts = Eigen::VectorXd::Zero(k);
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    agreement(z[i], pivot[i]) += 1.0;
    label_counts[z[i]] += 1.0;
  }
  const Eigen::MatrixXd cost = label_counts.replicate(1, k) - agreement;
  return solve_assignment(cost);
}

namespace {

// Relabel the occupied components of a draw 0..K-1 by first appearance.
Draw compact_draw(const Draw& draw, std::vector<int>& label_map) {
  label_map.assign(static_cast<std::size_t>(draw.k), -1);
  int next = 0;
  Draw out;
  out.iteration = draw.iteration;
  out.log_posterior = draw.log_posterior;
  out.z.resize(draw.z.size());
  for (Eigen::Index i = 0; i < draw.z.size(); ++i) {
    int& label = label_map[static_cast<std::size_t>(draw.z[i])];
    if (label < 0) label = next++;
    out.z[i] = label;
  }
  out.k = next;
  out.k_nonempty = next;
  out.pi.resize(next);
  out.theta.resize(draw.theta.rows(), next);
  for (int c = 0; c < draw.k; ++c) {
    const int label = label_map[static_cast<std::size_t>(c)];
    if (label < 0) continue;
    out.pi[label] = draw.pi[c];
    out.theta.col(label) = draw.theta.col(c);
  }
  out.pi /= out.pi.sum();
  return out;
}

void apply_permutation(Draw& draw, const std::vector<int>& permutation) {
  for (Eigen::Index i = 0; i < draw.z.size(); ++i) {
    draw.z[i] = permutation[static_cast<std::size_t>(draw.z[i])];
  }
  Eigen::VectorXd pi(draw.k);
  Eigen::MatrixXd theta(draw.theta.rows(), draw.k);
  for (int c = 0; c < draw.k; ++c) {
    const int target = permutation[static_cast<std::size_t>(c)];
    pi[target] = draw.pi[c];
    theta.col(target) = draw.theta.col(c);
  }
  draw.pi = std::move(pi);
  draw.theta = std::move(theta);
}

}  // namespace

RelabeledSamples ecr_relabel(const PosteriorSamples& samples, int k_map) {
  RelabeledSamples out;
  out.k_map = k_map;
  out.n = samples.n;
  out.p = samples.p;
  for (std::size_t t = 0; t < samples.draws.size(); ++t) {
    const Draw& draw = samples.draws[t];
    if (draw.k_nonempty != k_map) continue;
    if (draw.z.size() != samples.n) {
      throw DomainError("draws carry no allocations; rerun with parameters stored");
    }
    std::vector<int> label_map;
    out.draws.push_back(compact_draw(draw, label_map));
    out.label_maps.push_back(std::move(label_map));
    out.source_index.push_back(t);
  }
  if (out.draws.empty()) {
    throw DomainError("no retained draw has " + std::to_string(k_map) +
                      " nonempty components; inspect the k_nonempty histogram");
  }

  for (std::size_t t = 1; t < out.draws.size(); ++t) {
    if (out.draws[t].log_posterior > out.draws[out.pivot].log_posterior) out.pivot = t;
  }
  const Eigen::VectorXi pivot = out.draws[out.pivot].z;
  for (std::size_t t = 0; t < out.draws.size(); ++t) {
    const std::vector<int> permutation = ecr_permutation(out.draws[t].z, pivot, k_map);
    apply_permutation(out.draws[t], permutation);
    for (int& label : out.label_maps[t]) {
      if (label >= 0) label = permutation[static_cast<std::size_t>(label)];
    }
  }
  return out;
}

PosteriorMeans posterior_means(const RelabeledSamples& relabeled) {
  if (relabeled.draws.empty()) throw DomainError("posterior means need at least one draw");
  PosteriorMeans means;
  means.theta = Eigen::MatrixXd::Zero(relabeled.p, relabeled.k_map);
  means.pi = Eigen::VectorXd::Zero(relabeled.k_map);
  for (const Draw& draw : relabeled.draws) {
    means.theta += draw.theta;
    means.pi += draw.pi;
  }
  const double count = static_cast<double>(relabeled.draws.size());
  means.theta /= count;
  means.pi /= count;
  return means;
}

Eigen::VectorXi hard_assignment(const Eigen::MatrixXd& probability) {
  Eigen::VectorXi hard(probability.rows());
  for (Eigen::Index i = 0; i < probability.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < probability.cols(); ++c) {
      if (probability(i, c) > probability(i, best)) best = c;
    }
    hard[i] = static_cast<int>(best);
  }
  return hard;
}

ProfileAssignment assign_profiles(const RelabeledSamples& relabeled, const BinaryDataset& data) {
  if (relabeled.n != data.n()) throw DomainError("samples and dataset disagree on n");
  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(data.n(), relabeled.k_map);
  for (const Draw& draw : relabeled.draws) {
    for (Eigen::Index i = 0; i < data.n(); ++i) ++counts(i, draw.z[i]);
  }
  ProfileAssignment out;
  out.probability = counts.cast<double>() / static_cast<double>(relabeled.draws.size());
  out.hard = hard_assignment(out.probability);
  return out;
}

Eigen::VectorXi ProfileSummary::sizes() const {
  Eigen::VectorXi sizes = Eigen::VectorXi::Zero(profiles());
  for (Eigen::Index i = 0; i < hard_assignment.size(); ++i) ++sizes[hard_assignment[i]];
  return sizes;
}

namespace {

// Reorders profile columns; order[new] = old.
ProfileSummary reorder_profiles(const ProfileSummary& in, const std::vector<int>& order) {
  ProfileSummary out;
  out.k_map = in.k_map;
  const auto k = static_cast<Eigen::Index>(order.size());
  out.theta_mean.resize(in.theta_mean.rows(), k);
  out.pi_mean.resize(k);
  out.assignment_probability.resize(in.assignment_probability.rows(), k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const int source = order[static_cast<std::size_t>(c)];
    out.theta_mean.col(c) = in.theta_mean.col(source);
    out.pi_mean[c] = in.pi_mean[source];
    out.assignment_probability.col(c) = in.assignment_probability.col(source);
  }
  out.pi_mean /= out.pi_mean.sum();
  out.hard_assignment = hard_assignment(out.assignment_probability);
  out.reclassification_log = in.reclassification_log;
  return out;
}

std::vector<int> order_by_size(const Eigen::VectorXi& sizes, const std::vector<int>& candidates) {
  std::vector<int> order = candidates;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return sizes[a] > sizes[b]; });
  return order;
}

}  // namespace

ProfileSummary summarize_profiles(const RelabeledSamples& relabeled, const BinaryDataset& data) {
  const PosteriorMeans means = posterior_means(relabeled);
  const ProfileAssignment assignment = assign_profiles(relabeled, data);
  ProfileSummary raw;
  raw.k_map = relabeled.k_map;
  raw.theta_mean = means.theta;
  raw.pi_mean = means.pi;
  raw.assignment_probability = assignment.probability;
  raw.hard_assignment = assignment.hard;
  std::vector<int> all(static_cast<std::size_t>(relabeled.k_map));
  std::iota(all.begin(), all.end(), 0);
  return reorder_profiles(raw, order_by_size(raw.sizes(), all));
}

ProfileSummary reclassify_small(const ProfileSummary& summary, double threshold_fraction) {
  const int k = summary.profiles();
  const Eigen::Index n = summary.hard_assignment.size();
  const double threshold = threshold_fraction * static_cast<double>(n);
  Eigen::VectorXi hard = summary.hard_assignment;
  Eigen::VectorXi sizes = summary.sizes();
  std::vector<char> active(static_cast<std::size_t>(k), 1);
  std::vector<Reclassification> moves;

  while (true) {
    int smallest = -1;
    int active_count = 0;
    int below = 0;
    for (int c = 0; c < k; ++c) {
      if (!active[static_cast<std::size_t>(c)]) continue;
      ++active_count;
      if (sizes[c] >= threshold) continue;
      ++below;
      if (smallest < 0 || sizes[c] <= sizes[smallest]) smallest = c;
    }
    if (smallest < 0) break;
    if (below == active_count) {
      throw DomainError("every profile holds fewer than " + std::to_string(threshold_fraction) +
                        " of the units; the run is degenerate");
    }
    active[static_cast<std::size_t>(smallest)] = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (hard[i] != smallest) continue;
      int best = -1;
      for (int c = 0; c < k; ++c) {
        if (!active[static_cast<std::size_t>(c)]) continue;
        if (best < 0 || summary.assignment_probability(i, c) >
                            summary.assignment_probability(i, best)) {
          best = c;
        }
      }
      moves.push_back({i, smallest, best});
      hard[i] = best;
      --sizes[smallest];
      ++sizes[best];
    }
  }
  if (moves.empty() && std::all_of(active.begin(), active.end(), [](char a) { return a; })) {
    return summary;
  }

  std::vector<int> survivors;
  for (int c = 0; c < k; ++c) {
    if (active[static_cast<std::size_t>(c)]) survivors.push_back(c);
  }
  const std::vector<int> order = order_by_size(sizes, survivors);
  std::vector<int> new_index(static_cast<std::size_t>(k), -1);
  for (std::size_t c = 0; c < order.size(); ++c) new_index[static_cast<std::size_t>(order[c])] = static_cast<int>(c);

  ProfileSummary out;
  out.k_map = summary.k_map;
  const auto kept = static_cast<Eigen::Index>(order.size());
  out.theta_mean.resize(summary.theta_mean.rows(), kept);
  out.pi_mean.resize(kept);
  out.assignment_probability.resize(n, kept);
  for (Eigen::Index c = 0; c < kept; ++c) {
    const int source = order[static_cast<std::size_t>(c)];
    out.theta_mean.col(c) = summary.theta_mean.col(source);
    out.pi_mean[c] = summary.pi_mean[source];
    out.assignment_probability.col(c) = summary.assignment_probability.col(source);
  }
  out.pi_mean /= out.pi_mean.sum();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mass = out.assignment_probability.row(i).sum();
    if (mass > 0.0) {
      out.assignment_probability.row(i) /= mass;
    } else {
      out.assignment_probability.row(i).setZero();
      out.assignment_probability(i, new_index[static_cast<std::size_t>(hard[i])]) = 1.0;
    }
  }
  out.hard_assignment = hard_assignment(out.assignment_probability);
  out.reclassification_log = summary.reclassification_log;
  for (auto move : moves) {
    move.to = out.hard_assignment[move.unit];
    out.reclassification_log.push_back(move);
  }
  return out;
}

double adjusted_rand_index(const Eigen::Ref<const Eigen::VectorXi>& a,
                           const Eigen::Ref<const Eigen::VectorXi>& b) {
  if (a.size() != b.size()) throw DomainError("partitions have different lengths");
  const Eigen::Index n = a.size();
  std::map<std::pair<int, int>, long> table;
  std::map<int, long> rows, cols;
  for (Eigen::Index i = 0; i < n; ++i) {
    ++table[{a[i], b[i]}];
    ++rows[a[i]];
    ++cols[b[i]];
  }
  auto pairs = [](long m) { return 0.5 * static_cast<double>(m) * static_cast<double>(m - 1); };
  double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [cell, m] : table) index += pairs(m);
  for (const auto& [label, m] : rows) sum_rows += pairs(m);
  for (const auto& [label, m] : cols) sum_cols += pairs(m);
  const double expected = sum_rows * sum_cols / pairs(n);
  const double maximum = 0.5 * (sum_rows + sum_cols);
  if (maximum == expected) return 1.0;
  return (index - expected) / (maximum - expected);
}

}  // namespace mbmm
