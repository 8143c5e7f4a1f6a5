#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mbmm/dataset.hpp"
#include "mbmm/sampler.hpp"

namespace mbmm {

// Mode of k_nonempty over the retained draws; ties go to the smaller K.
int infer_k_map(const PosteriorSamples& samples);
int infer_k_map(std::span<const int> k_nonempty);

// Minimum-cost perfect matching on a square cost matrix (Hungarian method).
// Returns assignment[row] = column.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

// Number of units whose permuted label differs from the pivot's:
// sum_i [permutation[z_i] != pivot_i].
int mismatch_count(const Eigen::Ref<const Eigen::VectorXi>& z,
                   const Eigen::Ref<const Eigen::VectorXi>& pivot,
                   std::span<const int> permutation);

// Permutation of {0..k-1} minimizing mismatch_count(z, pivot, .), solved
// exactly as an assignment problem on the co-allocation counts.
std::vector<int> ecr_permutation(const Eigen::Ref<const Eigen::VectorXi>& z,
                                 const Eigen::Ref<const Eigen::VectorXi>& pivot, int k);

// Draws with exactly K_map occupied components, compacted to those
// components and aligned to a pivot allocation.
struct RelabeledSamples {
  int k_map = 0;
  Eigen::Index n = 0;
  Eigen::Index p = 0;
  std::vector<Draw> draws;  // k == k_map, labels aligned to the pivot
  // label_maps[t][c] is the aligned label of component c of the source
  // draw, or -1 if that component was empty.
  std::vector<std::vector<int>> label_maps;
  std::vector<std::size_t> source_index;  // position in PosteriorSamples::draws
  std::size_t pivot = 0;                  // index into `draws`
};

// Keeps draws with k_nonempty == k_map, numbers their occupied components by
// first appearance in unit order (weights renormalized over them), takes the
// highest-log-posterior draw as pivot and applies ecr_permutation to every
// draw.
RelabeledSamples ecr_relabel(const PosteriorSamples& samples, int k_map);

struct PosteriorMeans {
  Eigen::MatrixXd theta;  // p x K
  Eigen::VectorXd pi;
};

PosteriorMeans posterior_means(const RelabeledSamples& relabeled);

struct ProfileAssignment {
  Eigen::MatrixXd probability;  // n x K, fraction of draws with z_i = k
  Eigen::VectorXi hard;         // row argmax, lowest index on ties
};

ProfileAssignment assign_profiles(const RelabeledSamples& relabeled, const BinaryDataset& data);

// Row argmax with ties to the lowest column.
Eigen::VectorXi hard_assignment(const Eigen::MatrixXd& probability);

struct Reclassification {
  Eigen::Index unit = 0;
  int from = 0;  // profile index in the input summary
  int to = 0;    // profile index in the output summary
};

struct ProfileSummary {
  int k_map = 0;
  Eigen::MatrixXd theta_mean;  // p x K
  Eigen::VectorXd pi_mean;
  Eigen::MatrixXd assignment_probability;  // n x K
  Eigen::VectorXi hard_assignment;         // 0-based profile per unit
  std::vector<Reclassification> reclassification_log;

  int profiles() const { return static_cast<int>(pi_mean.size()); }
  Eigen::VectorXi sizes() const;
};

// Profiles ordered by descending size (hard assignments), ties by aligned
// label.
ProfileSummary summarize_profiles(const RelabeledSamples& relabeled, const BinaryDataset& data);

// While some profile holds fewer than threshold_fraction * n units, dissolve
// the smallest (ties: the later one) and move each of its units to the
// surviving profile with its highest assignment probability. Surviving
// probability rows are renormalized and profiles renumbered by descending
// size. Throws DomainError when every profile falls below the threshold.
ProfileSummary reclassify_small(const ProfileSummary& summary,
                                double threshold_fraction = 0.05);

double adjusted_rand_index(const Eigen::Ref<const Eigen::VectorXi>& a,
                           const Eigen::Ref<const Eigen::VectorXi>& b);

}  // namespace mbmm
