#pragma once

// User interest model: a log-linear conditional distribution over files,
//
//   Pr(f_j | f_i) = 2^(sum_h w_h * F_h(f_j, f_i)) / Z(f_i)
//
// where the F_h are 0/1 feature functions over attribute pairs and Z(f_i)
// sums the numerator over every file in the catalog (f_i included).

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "p2psim/ids.hpp"

namespace p2psim {

inline constexpr double kDefaultMaxDistance = 32.0;

/// Raised when a model's partition function leaves the double exponent range.
class ModelRangeError : public std::range_error {
 public:
  using std::range_error::range_error;
};

/// Raised when gradient ascent produces a non-finite objective.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FileRecord {
  FileId id;
  std::vector<std::pair<std::string, std::string>> attributes;

  /// Value of the named attribute, or nullptr when the file lacks it.
  const std::string* find(std::string_view name) const;
};

class Catalog {
 public:
  /// Throws std::invalid_argument unless the list is non-empty, ids are
  /// dense in [0, size) and stored in order, and every file has attributes.
  explicit Catalog(std::vector<FileRecord> files);

  std::size_t size() const { return files_.size(); }
  const FileRecord& operator[](FileId id) const { return files_.at(id.value); }
  const std::vector<FileRecord>& files() const { return files_; }
  bool contains(FileId id) const { return id.value < files_.size(); }

 private:
  std::vector<FileRecord> files_;
};

/// One conjunct of a feature predicate.
struct FeatureClause {
  enum class Kind {
    TargetEquals,  // f_j.attribute == value
    SourceEquals,  // f_i.attribute == value
    SameValue,     // f_j.attribute == f_i.attribute
  };
  Kind kind = Kind::SameValue;
  std::string attribute;
  std::string value;

  friend bool operator==(const FeatureClause&, const FeatureClause&) = default;
};

/// Conjunction of clauses; fires (returns 1) only when every clause holds.
struct FeatureFunction {
  int id = 0;
  std::vector<FeatureClause> clauses;

  /// Canonical text form, e.g. "same(cluster) & source(genre=rock)".
  std::string to_string() const;

  friend bool operator==(const FeatureFunction&, const FeatureFunction&) = default;
};

/// Parses the text form produced by FeatureFunction::to_string. Clauses are
/// `same(attr)`, `target(attr=value)` and `source(attr=value)` joined by `&`.
/// Throws std::invalid_argument on malformed input.
FeatureFunction parse_feature(std::string_view text, int id = 0);

/// Missing attributes make the clause unsatisfied.
int evaluate_feature(const FeatureFunction& feature, const FileRecord& target,
                     const FileRecord& source);

/// Dense table of which features fire for each (target, source) pair, stored
/// as one bitmask per pair. Column-major: all targets of one source are
/// contiguous.
class ActivationMatrix {
 public:
  static constexpr std::size_t kMaxFeatures = 64;

  ActivationMatrix() = default;
  ActivationMatrix(std::size_t file_count, std::size_t feature_count);

  std::size_t file_count() const { return files_; }
  std::size_t feature_count() const { return features_; }

  std::uint64_t at(FileId target, FileId source) const {
    return masks_[static_cast<std::size_t>(source.value) * files_ + target.value];
  }
  std::span<const std::uint64_t> column(FileId source) const {
    return {masks_.data() + static_cast<std::size_t>(source.value) * files_, files_};
  }
  std::span<std::uint64_t> column(FileId source) {
    return {masks_.data() + static_cast<std::size_t>(source.value) * files_, files_};
  }

  friend bool operator==(const ActivationMatrix&, const ActivationMatrix&) = default;

 private:
  std::size_t files_ = 0;
  std::size_t features_ = 0;
  std::vector<std::uint64_t> masks_;
};

/// Sum of the weights of the features set in `mask`.
double masked_score(std::uint64_t mask, std::span<const double> weights);

/// An observed co-shared pair: a peer sharing `source` also shares `target`.
struct TrainingPair {
  FileId source;  // f_i
  FileId target;  // f_j

  friend bool operator==(const TrainingPair&, const TrainingPair&) = default;
};

/// Immutable once built; safe to share between threads.
class InterestModel {
 public:
  InterestModel(std::shared_ptr<const Catalog> catalog,
                std::vector<FeatureFunction> features,
                std::vector<double> weights = {},
                double max_distance = kDefaultMaxDistance);

  /// Same catalog and features, new weights. Reuses the activation table.
  InterestModel with_weights(std::vector<double> weights) const;

  const Catalog& catalog() const { return *catalog_; }
  const std::shared_ptr<const Catalog>& catalog_ptr() const { return catalog_; }
  const std::vector<FeatureFunction>& features() const { return *features_; }
  const std::vector<double>& weights() const { return weights_; }
  const ActivationMatrix& activations() const { return *activations_; }
  double max_distance() const { return max_distance_; }

  /// sum_h w_h * F_h(target, source)
  double score(FileId target, FileId source) const;

  /// log2 Z(source). Finite even when Z itself is not representable.
  double log2_partition(FileId source) const { return log2_partition_.at(source.value); }

  /// Z(source). Throws ModelRangeError if it over- or underflows a double.
  double partition_function(FileId source) const;

  /// Pr(target | source). Throws ModelRangeError like partition_function.
  double conditional_probability(FileId target, FileId source) const;

  /// -log2 Pr(target | source), clamped to [0, max_distance].
  double file_distance(FileId target, FileId source) const;

 private:
  InterestModel(std::shared_ptr<const Catalog> catalog,
                std::shared_ptr<const std::vector<FeatureFunction>> features,
                std::shared_ptr<const ActivationMatrix> activations,
                std::vector<double> weights, double max_distance);

  void check_range(FileId source) const;

  std::shared_ptr<const Catalog> catalog_;
  std::shared_ptr<const std::vector<FeatureFunction>> features_;
  std::shared_ptr<const ActivationMatrix> activations_;
  std::vector<double> weights_;
  std::vector<double> log2_partition_;
  double max_distance_;
};

/// Minimum file_distance(a, b) over a in `targets`, b in `sources`: the
/// closest interest link from one peer's files toward another's.
/// Throws std::domain_error if either set is empty.
double peer_distance(const InterestModel& model, std::span<const FileId> targets,
                     std::span<const FileId> sources);

/// sum over pairs of log2 Pr(target | source). Throws std::invalid_argument
/// on an empty pair list or ids outside the catalog.
double log_likelihood(const InterestModel& model, std::span<const TrainingPair> pairs);

/// log_likelihood - l2_penalty * |w|^2
double training_objective(const InterestModel& model, std::span<const TrainingPair> pairs,
                          double l2_penalty);

/// d(training_objective)/dw_h = sum_pairs [F_h(j,i) - E_{f~Pr(.|i)} F_h(f,i)]
///                              - 2 * l2_penalty * w_h
std::vector<double> objective_gradient(const InterestModel& model,
                                       std::span<const TrainingPair> pairs,
                                       double l2_penalty);

struct TrainingOptions {
  double step_size = 0.1;
  int max_iterations = 200;
  double l2_penalty = 1e-3;

  friend bool operator==(const TrainingOptions&, const TrainingOptions&) = default;
};

struct TrainingReport {
  double initial_objective = 0.0;
  double final_objective = 0.0;
  int iterations = 0;
};

/// Batch gradient ascent on training_objective. Each step moves the weights
/// by step_size * gradient / |pairs|; a step that lowers the objective is
/// retried at half length, so the objective never decreases.
/// Throws DivergenceError on a non-finite objective.
InterestModel train_weights(const InterestModel& model, std::span<const TrainingPair> pairs,
                            const TrainingOptions& options, TrainingReport* report = nullptr);

}  // namespace p2psim
