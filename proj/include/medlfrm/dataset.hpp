#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace medlfrm {

// Base for malformed or inconsistent input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public DataError {
 public:
  using DataError::DataError;
};

// One observed entry of the link tensor. label is +1 (link) or -1 (no link).
struct Link {
  int relation = 0;
  int source = 0;
  int target = 0;
  int label = 1;
};

// N entities, R relations, a sparse +-1 link tensor and optional D-dim
// features per ordered entity pair. Dyads without a Link entry are missing.
class RelationalDataset {
 public:
  RelationalDataset() = default;
  RelationalDataset(int n_entities, int n_relations, int feature_dim = 0);

  int n_entities() const { return n_entities_; }
  int n_relations() const { return n_relations_; }
  int feature_dim() const { return feature_dim_; }
  bool has_features() const { return feature_dim_ > 0; }

  const std::vector<Link>& links() const { return links_; }
  const Link& link(std::size_t index) const { return links_.at(index); }
  std::size_t size() const { return links_.size(); }

  // Throws ValidationError on out-of-range indices, bad labels or duplicates.
  void add_link(int relation, int source, int target, int label);
  std::optional<std::size_t> find_link(int relation, int source, int target) const;

  // Throws ValidationError if x.size() != feature_dim() or indices are out of range.
  void set_pair_features(int source, int target, std::span<const double> x);
  // Empty span when the pair has no stored features (read as the zero vector).
  std::span<const double> pair_features(int source, int target) const;
  std::size_t n_feature_rows() const { return feature_rows_.size(); }
  // (source, target) of every stored feature row, in insertion order.
  const std::vector<std::pair<int, int>>& feature_pairs() const { return feature_pairs_; }

  const std::vector<std::string>& names() const { return names_; }
  void set_names(std::vector<std::string> names);

 private:
  std::uint64_t pair_key(int source, int target) const;
  std::uint64_t link_key(int relation, int source, int target) const;
  void check_entity(int index) const;

  int n_entities_ = 0;
  int n_relations_ = 0;
  int feature_dim_ = 0;
  std::vector<Link> links_;
  std::unordered_map<std::uint64_t, std::size_t> link_index_;
  std::unordered_map<std::uint64_t, std::size_t> feature_rows_;
  std::vector<std::pair<int, int>> feature_pairs_;
  std::vector<double> feature_data_;
  std::vector<std::string> names_;
};

// Partition of a dataset's links into training (observed) and held-out
// entries, as sorted link indices.
struct SplitMask {
  std::vector<std::size_t> observed;
  std::vector<std::size_t> heldout;
  std::uint64_t seed = 0;
};

RelationalDataset load_dataset(const std::filesystem::path& path);
RelationalDataset parse_dataset(std::istream& in);
void save_dataset(const std::filesystem::path& path, const RelationalDataset& ds);
void write_dataset(std::ostream& out, const RelationalDataset& ds);

// Holds out round(fraction * |links|) entries chosen uniformly by seed.
SplitMask split_holdout(const RelationalDataset& ds, double fraction, std::uint64_t seed);

// Further splits the observed part of `split`; the result's heldout set is
// taken from split.observed only and its observed set is the remainder.
SplitMask split_observed(const SplitMask& split, double fraction, std::uint64_t seed);

// Split files list held-out triples as "rel i j" lines.
void write_split(const std::filesystem::path& path, const RelationalDataset& ds,
                 const SplitMask& split);
SplitMask read_split(const std::filesystem::path& path, const RelationalDataset& ds);

// Single-relation view used by the "single" setting: the relation's links,
// the pair features, and the split restricted to that relation.
struct RelationSlice {
  RelationalDataset dataset;
  SplitMask split;
  std::vector<std::size_t> source_links;  // index in the parent dataset per link
};
RelationSlice slice_relation(const RelationalDataset& ds, const SplitMask& split, int relation);

// Planted-feature benchmark with its ground truth.
struct SyntheticData {
  RelationalDataset dataset;
  Eigen::MatrixXd z;  // n x k_true, binary
  Eigen::MatrixXd w;  // k_true x k_true, symmetric
  double noise_std = 0.0;
  double link_density = 0.0;

  // Ground-truth discriminant Z_i W Z_j^T.
  double oracle_score(int source, int target) const;
};

// Z ~ Bernoulli(feature_density), W symmetric with N(0, weight_scale^2)
// entries, y_ij = sign(Z_i W Z_j^T + e_ij) with sign(0) = -1 and
// e_ij ~ N(0, s^2). s = noise_ratio * std(discriminant), or noise_ratio
// itself when every discriminant is zero. All n^2 dyads are observed.
SyntheticData synth_generate(int n, int k_true, std::uint64_t seed,
                             double feature_density = 0.3, double weight_scale = 1.0,
                             double noise_ratio = 0.1);

}  // namespace medlfrm
