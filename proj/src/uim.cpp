#include "p2psim/uim.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

#include "p2psim/kernels.hpp"

namespace p2psim {

const std::string* FileRecord::find(std::string_view name) const {
  for (const auto& [key, value] : attributes) {
    if (key == name) return &value;
  }
  return nullptr;
}

Catalog::Catalog(std::vector<FileRecord> files) : files_(std::move(files)) {
  if (files_.empty()) throw std::invalid_argument("catalog must not be empty");
  for (std::size_t i = 0; i < files_.size(); ++i) {
    if (files_[i].id.value != i) {
      throw std::invalid_argument("catalog file ids must be dense and ordered; position " +
                                  std::to_string(i) + " holds id " +
                                  std::to_string(files_[i].id.value));
    }
    if (files_[i].attributes.empty()) {
      throw std::invalid_argument("file " + std::to_string(i) + " has no attributes");
    }
  }
}

// ---------------------------------------------------------------------------
// Feature functions

std::string FeatureFunction::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < clauses.size(); ++i) {
    if (i) out += " & ";
    const auto& c = clauses[i];
    switch (c.kind) {
      case FeatureClause::Kind::SameValue:
        out += "same(" + c.attribute + ")";
        break;
      case FeatureClause::Kind::TargetEquals:
        out += "target(" + c.attribute + "=" + c.value + ")";
        break;
      case FeatureClause::Kind::SourceEquals:
        out += "source(" + c.attribute + "=" + c.value + ")";
        break;
    }
  }
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool valid_token(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char ch) {
    return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.';
  });
}

FeatureClause parse_clause(std::string_view text) {
  text = trim(text);
  const auto open = text.find('(');
  if (open == std::string_view::npos || text.back() != ')') {
    throw std::invalid_argument("malformed feature clause '" + std::string(text) + "'");
  }
  const auto head = trim(text.substr(0, open));
  const auto body = trim(text.substr(open + 1, text.size() - open - 2));
  FeatureClause clause;
  if (head == "same") {
    clause.kind = FeatureClause::Kind::SameValue;
    clause.attribute = std::string(body);
    if (!valid_token(body)) {
      throw std::invalid_argument("bad attribute name in '" + std::string(text) + "'");
    }
    return clause;
  }
  if (head == "target") {
    clause.kind = FeatureClause::Kind::TargetEquals;
  } else if (head == "source") {
    clause.kind = FeatureClause::Kind::SourceEquals;
  } else {
    throw std::invalid_argument("unknown feature clause '" + std::string(head) +
                                "' (expected same, target or source)");
  }
  const auto eq = body.find('=');
  if (eq == std::string_view::npos) {
    throw std::invalid_argument("clause '" + std::string(text) + "' needs attribute=value");
  }
  const auto attr = trim(body.substr(0, eq));
  const auto value = trim(body.substr(eq + 1));
  if (!valid_token(attr) || !valid_token(value)) {
    throw std::invalid_argument("bad attribute or value in '" + std::string(text) + "'");
  }
  clause.attribute = std::string(attr);
  clause.value = std::string(value);
  return clause;
}

}  // namespace

FeatureFunction parse_feature(std::string_view text, int id) {
  FeatureFunction feature;
  feature.id = id;
  std::size_t start = 0;
  while (true) {
    const auto amp = text.find('&', start);
    feature.clauses.push_back(parse_clause(text.substr(start, amp - start)));
    if (amp == std::string_view::npos) break;
    start = amp + 1;
  }
  return feature;
}

int evaluate_feature(const FeatureFunction& feature, const FileRecord& target,
                     const FileRecord& source) {
  for (const auto& clause : feature.clauses) {
    switch (clause.kind) {
      case FeatureClause::Kind::TargetEquals: {
        const auto* v = target.find(clause.attribute);
        if (!v || *v != clause.value) return 0;
        break;
      }
      case FeatureClause::Kind::SourceEquals: {
        const auto* v = source.find(clause.attribute);
        if (!v || *v != clause.value) return 0;
        break;
      }
      case FeatureClause::Kind::SameValue: {
        const auto* a = target.find(clause.attribute);
        const auto* b = source.find(clause.attribute);
        if (!a || !b || *a != *b) return 0;
        break;
      }
    }
  }
  return 1;
}

ActivationMatrix::ActivationMatrix(std::size_t file_count, std::size_t feature_count)
    : files_(file_count), features_(feature_count), masks_(file_count * file_count, 0) {
  if (feature_count > kMaxFeatures) {
    throw std::invalid_argument("at most 64 feature functions are supported");
  }
}

double masked_score(std::uint64_t mask, std::span<const double> weights) {
  double s = 0.0;
  while (mask) {
    s += weights[static_cast<std::size_t>(std::countr_zero(mask))];
    mask &= mask - 1;
  }
  return s;
}

// ---------------------------------------------------------------------------
// InterestModel

InterestModel::InterestModel(std::shared_ptr<const Catalog> catalog,
                             std::vector<FeatureFunction> features, std::vector<double> weights,
                             double max_distance)
    : InterestModel(std::move(catalog),
                    std::make_shared<const std::vector<FeatureFunction>>(std::move(features)),
                    nullptr, std::move(weights), max_distance) {}

InterestModel::InterestModel(std::shared_ptr<const Catalog> catalog,
                             std::shared_ptr<const std::vector<FeatureFunction>> features,
                             std::shared_ptr<const ActivationMatrix> activations,
                             std::vector<double> weights, double max_distance)
    : catalog_(std::move(catalog)),
      features_(std::move(features)),
      activations_(std::move(activations)),
      weights_(std::move(weights)),
      max_distance_(max_distance) {
  if (!catalog_) throw std::invalid_argument("interest model needs a catalog");
  if (!activations_) {
    activations_ = std::make_shared<const ActivationMatrix>(
        kernels::feature_activations(*catalog_, *features_));
    if (weights_.empty()) weights_.assign(features_->size(), 0.0);
  }
  if (weights_.size() != features_->size()) {
    throw std::invalid_argument("weight count " + std::to_string(weights_.size()) +
                                " does not match feature count " +
                                std::to_string(features_->size()));
  }
  for (double w : weights_) {
    if (!std::isfinite(w)) throw std::invalid_argument("model weights must be finite");
  }
  if (!(max_distance_ > 0.0) || !std::isfinite(max_distance_)) {
    throw std::invalid_argument("max distance must be positive and finite");
  }
  log2_partition_ = kernels::column_log_partition(*activations_, weights_);
}

InterestModel InterestModel::with_weights(std::vector<double> weights) const {
  return InterestModel(catalog_, features_, activations_, std::move(weights), max_distance_);
}

double InterestModel::score(FileId target, FileId source) const {
  return masked_score(activations_->at(target, source), weights_);
}

void InterestModel::check_range(FileId source) const {
  const double lz = log2_partition(source);
  if (lz >= static_cast<double>(std::numeric_limits<double>::max_exponent) ||
      lz < static_cast<double>(std::numeric_limits<double>::min_exponent -
                               std::numeric_limits<double>::digits)) {
    throw ModelRangeError("partition function of file " + std::to_string(source.value) +
                          " is outside the double range (log2 Z = " + std::to_string(lz) + ")");
  }
}

double InterestModel::partition_function(FileId source) const {
  check_range(source);
  return std::exp2(log2_partition(source));
}

double InterestModel::conditional_probability(FileId target, FileId source) const {
  check_range(source);
  return std::exp2(score(target, source) - log2_partition(source));
}

double InterestModel::file_distance(FileId target, FileId source) const {
  const double d = log2_partition(source) - score(target, source);
  return std::clamp(d, 0.0, max_distance_);
}

double peer_distance(const InterestModel& model, std::span<const FileId> targets,
                     std::span<const FileId> sources) {
  if (targets.empty() || sources.empty()) {
    throw std::domain_error("peer distance needs non-empty file sets");
  }
  double best = std::numeric_limits<double>::infinity();
  for (FileId a : targets) {
    for (FileId b : sources) best = std::min(best, model.file_distance(a, b));
  }
  return best;
}

// ---------------------------------------------------------------------------
// Likelihood and training

namespace {

void check_pairs(const InterestModel& model, std::span<const TrainingPair> pairs) {
  if (pairs.empty()) throw std::invalid_argument("training pair list is empty");
  for (const auto& p : pairs) {
    if (!model.catalog().contains(p.source) || !model.catalog().contains(p.target)) {
      throw std::invalid_argument("training pair references a file outside the catalog");
    }
  }
}

// Pair statistics that do not depend on the weights.
struct PairSummary {
  std::vector<FileId> columns;        // distinct sources
  std::vector<double> column_counts;  // pairs per source
  std::vector<double> observed;       // sum_pairs F_h(target, source)
  std::size_t pair_count = 0;
};

PairSummary summarize(const InterestModel& model, std::span<const TrainingPair> pairs) {
  const auto& act = model.activations();
  PairSummary s;
  s.pair_count = pairs.size();
  s.observed.assign(act.feature_count(), 0.0);
  std::vector<double> per_file(act.file_count(), 0.0);
  for (const auto& p : pairs) {
    per_file[p.source.value] += 1.0;
    std::uint64_t mask = act.at(p.target, p.source);
    while (mask) {
      s.observed[static_cast<std::size_t>(std::countr_zero(mask))] += 1.0;
      mask &= mask - 1;
    }
  }
  for (std::size_t i = 0; i < per_file.size(); ++i) {
    if (per_file[i] > 0.0) {
      s.columns.push_back(FileId{static_cast<std::uint32_t>(i)});
      s.column_counts.push_back(per_file[i]);
    }
  }
  return s;
}

double penalty(std::span<const double> w, double l2) {
  double sq = 0.0;
  for (double x : w) sq += x * x;
  return l2 * sq;
}

struct Evaluation {
  double objective = 0.0;
  std::vector<double> gradient;
};

Evaluation evaluate(const ActivationMatrix& act, std::span<const double> weights,
                    const PairSummary& s, double l2, bool with_gradient) {
  const auto moments = kernels::column_moments(act, weights, s.columns);
  Evaluation e;
  // sum_pairs score = sum_h w_h * observed_h
  double ll = 0.0;
  for (std::size_t h = 0; h < weights.size(); ++h) ll += weights[h] * s.observed[h];
  for (std::size_t c = 0; c < s.columns.size(); ++c) {
    ll -= s.column_counts[c] * moments.log2_partition[c];
  }
  e.objective = ll - penalty(weights, l2);
  if (with_gradient) {
    e.gradient = s.observed;
    for (std::size_t c = 0; c < s.columns.size(); ++c) {
      const auto ex = moments.expectation(c);
      for (std::size_t h = 0; h < weights.size(); ++h) e.gradient[h] -= s.column_counts[c] * ex[h];
    }
    for (std::size_t h = 0; h < weights.size(); ++h) e.gradient[h] -= 2.0 * l2 * weights[h];
  }
  return e;
}

}  // namespace

double log_likelihood(const InterestModel& model, std::span<const TrainingPair> pairs) {
  check_pairs(model, pairs);
  double ll = 0.0;
  for (const auto& p : pairs) {
    ll += model.score(p.target, p.source) - model.log2_partition(p.source);
  }
  return ll;
}

double training_objective(const InterestModel& model, std::span<const TrainingPair> pairs,
                          double l2_penalty) {
  return log_likelihood(model, pairs) - penalty(model.weights(), l2_penalty);
}

std::vector<double> objective_gradient(const InterestModel& model,
                                       std::span<const TrainingPair> pairs, double l2_penalty) {
  check_pairs(model, pairs);
  const auto summary = summarize(model, pairs);
  return evaluate(model.activations(), model.weights(), summary, l2_penalty, true).gradient;
}

InterestModel train_weights(const InterestModel& model, std::span<const TrainingPair> pairs,
                            const TrainingOptions& options, TrainingReport* report) {
  if (!(options.step_size > 0.0)) throw std::invalid_argument("step_size must be positive");
  if (options.max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (!(options.l2_penalty >= 0.0)) throw std::invalid_argument("l2_penalty must be >= 0");
  check_pairs(model, pairs);

  const auto summary = summarize(model, pairs);
  const auto& act = model.activations();
  std::vector<double> weights = model.weights();
  auto current = evaluate(act, weights, summary, options.l2_penalty, true);
  if (!std::isfinite(current.objective)) {
    throw DivergenceError("initial training objective is not finite");
  }
  const double initial = current.objective;
  const double scale = options.step_size / static_cast<double>(summary.pair_count);

  int iteration = 0;
  std::vector<double> candidate(weights.size());
  for (; iteration < options.max_iterations && !weights.empty(); ++iteration) {
    double step = scale;
    bool improved = false;
    for (int halving = 0; halving < 40; ++halving) {
      for (std::size_t h = 0; h < weights.size(); ++h) {
        candidate[h] = weights[h] + step * current.gradient[h];
      }
      auto next = evaluate(act, candidate, summary, options.l2_penalty, true);
      if (!std::isfinite(next.objective)) {
        throw DivergenceError("training objective became non-finite at iteration " +
                              std::to_string(iteration) + "; reduce the step size");
      }
      if (next.objective >= current.objective) {
        weights = candidate;
        current = std::move(next);
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;  // converged to floating-point resolution
  }

  if (report) {
    report->initial_objective = initial;
    report->final_objective = current.objective;
    report->iterations = iteration;
  }
  return model.with_weights(std::move(weights));
}

}  // namespace p2psim
