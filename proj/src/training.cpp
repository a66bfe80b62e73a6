// Copyright 2026 The HapCap Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <random>

#include <fmt/format.h>

#include "hapcap/error.hpp"
#include "hapcap/random.hpp"
#include "hapcap/training.hpp"

namespace hapcap {

namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

const char* to_string(CategoryScope scope) {
  switch (scope) {
    case CategoryScope::kAll: return "all";
    case CategoryScope::kSensory: return "sensory";
    case CategoryScope::kEmotional: return "emotional";
    case CategoryScope::kAssociative: return "associative";
  }
  return "all";
}

CategoryScope parse_category_scope(std::string_view text) {
  if (lower(text) == "all") return CategoryScope::kAll;
  return scope_of(parse_category(text));
}

std::optional<Category> scope_category(CategoryScope scope) {
  switch (scope) {
    case CategoryScope::kAll: return std::nullopt;
    case CategoryScope::kSensory: return Category::kSensory;
    case CategoryScope::kEmotional: return Category::kEmotional;
    case CategoryScope::kAssociative: return Category::kAssociative;
  }
  return std::nullopt;
}

CategoryScope scope_of(Category c) {
  switch (c) {
    case Category::kSensory: return CategoryScope::kSensory;
    case Category::kEmotional: return CategoryScope::kEmotional;
    case Category::kAssociative: return CategoryScope::kAssociative;
  }
  return CategoryScope::kAll;
}

const char* to_string(PairRepresentation rep) {
  return rep == PairRepresentation::kViews ? "views" : "concat";
}

PairRepresentation parse_pair_representation(std::string_view text) {
  const auto t = lower(text);
  if (t == "views") return PairRepresentation::kViews;
  if (t == "concat") return PairRepresentation::kConcat;
  throw InvalidInput(fmt::format("unknown pair representation '{}'", text));
}

void validate(const TrainConfig& c) {
  if (!(c.alpha > 0.0) || !std::isfinite(c.alpha)) {
    throw InvalidInput(fmt::format("alpha must be positive, got {}", c.alpha));
  }
  if (!(c.tau > 0.0) || !std::isfinite(c.tau)) {
    throw InvalidInput(fmt::format("tau must be positive, got {}", c.tau));
  }
  if (c.batch_size < 2) {
    throw InvalidInput(fmt::format("batch_size must be at least 2, got {}", c.batch_size));
  }
  if (c.epochs < 0) throw InvalidInput(fmt::format("epochs must be >= 0, got {}", c.epochs));
  if (c.n < 0 || c.m < 0) {
    throw InvalidInput(fmt::format("trainable depths must be >= 0, got n={} m={}", c.n, c.m));
  }
  if (c.k < 1) throw InvalidInput(fmt::format("k must be >= 1, got {}", c.k));
  if (!(c.kappa > 0.0) || !std::isfinite(c.kappa)) {
    throw InvalidInput(fmt::format("kappa must be positive, got {}", c.kappa));
  }
}

std::vector<HapticTextPair> in_scope(std::span<const HapticTextPair> pairs,
                                     CategoryScope scope) {
  const auto cat = scope_category(scope);
  std::vector<HapticTextPair> out;
  for (const auto& p : pairs) {
    if (!cat || p.label.category == *cat) out.push_back(p);
  }
  return out;
}

namespace {

// Same-label indices are kept adjacent in chunks of two so that every batch
// holds positives wherever the label has more than one pair.
std::vector<std::vector<std::size_t>> label_aware_batches(
    std::span<const HapticTextPair> pairs, int batch_size, std::mt19937_64& rng) {
  std::map<PairLabel, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < pairs.size(); ++i) groups[pairs[i].label].push_back(i);
  std::vector<std::vector<std::size_t>> chunks;
  for (auto& [label, idx] : groups) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t i = 0; i < idx.size(); i += 2) {
      chunks.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(i),
                          idx.begin() + static_cast<std::ptrdiff_t>(
                                            std::min(i + 2, idx.size())));
    }
  }
  std::shuffle(chunks.begin(), chunks.end(), rng);
  std::vector<std::vector<std::size_t>> batches;
  std::vector<std::size_t> current;
  for (const auto& chunk : chunks) {
    if (!current.empty() &&
        current.size() + chunk.size() > static_cast<std::size_t>(batch_size)) {
      batches.push_back(std::move(current));
      current.clear();
    }
    current.insert(current.end(), chunk.begin(), chunk.end());
  }
  if (!current.empty()) {
    if (current.size() < 2 && !batches.empty()) {
      batches.back().insert(batches.back().end(), current.begin(), current.end());
    } else {
      batches.push_back(std::move(current));
    }
  }
  return batches;
}

struct AdamSlot {
  Eigen::MatrixXd m;
  Eigen::MatrixXd v;
};

class Adam {
 public:
  explicit Adam(double alpha) : alpha_(alpha) {}

  void step(EncoderState& state, const GradientSet& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    for (auto& p : parameters(state)) {
      if (!p.trainable) continue;
      const Eigen::MatrixXd* g = grads.find(p.name);
      if (!g) continue;
      auto& slot = slots_[p.name];
      if (slot.m.size() == 0) {
        slot.m = Eigen::MatrixXd::Zero(g->rows(), g->cols());
        slot.v = Eigen::MatrixXd::Zero(g->rows(), g->cols());
      }
      slot.m = kBeta1 * slot.m + (1.0 - kBeta1) * *g;
      slot.v = kBeta2 * slot.v + (1.0 - kBeta2) * g->cwiseProduct(*g);
      p.value->array() -= alpha_ * (slot.m.array() / c1) /
                          ((slot.v.array() / c2).sqrt() + kEpsilon);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;
  double alpha_;
  int t_ = 0;
  std::map<std::string, AdamSlot> slots_;
};

double validation_metric(const EncoderState& state,
                         std::span<const HapticTextPair> valid,
                         const HapticInputs& haptics, const TrainConfig& config) {
  return evaluate_scope(state, valid, haptics, scope_category(config.category_scope),
                        {config.k, config.kappa})
      .precision;
}

}  // namespace

TrainResult train(const EncoderState& initial, const DatasetSplit& split,
                  const HapticInputs& haptics, const TrainConfig& config) {
  validate(config);
  const auto train_pairs = in_scope(split.train, config.category_scope);
  const auto valid_pairs = in_scope(split.valid, config.category_scope);
  if (valid_pairs.empty()) throw InvalidInput("validation set is empty");

  TrainResult result;
  if (config.epochs == 0) {
    result.state = initial;
    result.best_metric = validation_metric(initial, valid_pairs, haptics, config);
    return result;
  }
  if (train_pairs.empty()) throw InvalidInput("training set is empty");

  EncoderState state = initial;
  state.text_trainable = config.n;
  state.haptic_trainable = config.m;
  validate(state);

  Adam adam(config.alpha);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::mt19937_64 rng(derive_seed(config.seed, 1000 + static_cast<std::uint64_t>(epoch)));
    const auto batches = label_aware_batches(train_pairs, config.batch_size, rng);
    double loss_sum = 0.0;
    for (const auto& idx : batches) {
      const auto batch = make_batch(state, train_pairs, idx, haptics);
      const auto lg = loss_gradients(state, batch, config.tau, config.representation);
      loss_sum += lg.loss;
      adam.step(state, lg.gradients);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = batches.empty() ? 0.0 : loss_sum / static_cast<double>(batches.size());
    rec.val_metric = validation_metric(state, valid_pairs, haptics, config);
    result.history.push_back(rec);
    if (epoch == 1 || rec.val_metric > result.best_metric) {
      result.best_metric = rec.val_metric;
      result.best_epoch = epoch;
      result.state = state;
    }
  }
  return result;
}

std::string history_csv(std::span<const EpochRecord> history) {
  std::string out = "epoch,loss,val_p_at_k\n";
  for (const auto& r : history) {
    out += fmt::format("{},{:.17g},{:.17g}\n", r.epoch, r.loss, r.val_metric);
  }
  return out;
}

GridResult grid_search(const EncoderState& initial, const DatasetSplit& split,
                       const HapticInputs& haptics, const TrainConfig& base,
                       const GridSpec& grid) {
  if (grid.size() == 0) throw InvalidInput("hyperparameter grid is empty");
  GridResult result;
  for (double alpha : grid.alphas) {
    for (double tau : grid.taus) {
      for (int n : grid.ns) {
        for (int m : grid.ms) {
          GridCell cell;
          cell.config = base;
          cell.config.alpha = alpha;
          cell.config.tau = tau;
          cell.config.n = n;
          cell.config.m = m;
          try {
            auto run = train(initial, split, haptics, cell.config);
            cell.ok = true;
            cell.best_epoch = run.best_epoch;
            cell.val_metric = run.best_metric;
            if (!result.best || cell.val_metric > result.cells[*result.best].val_metric) {
              result.best = result.cells.size();
              result.best_run = std::move(run);
            }
          } catch (const std::exception& e) {
            cell.error = e.what();
          }
          result.cells.push_back(std::move(cell));
        }
      }
    }
  }
  return result;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

}  // namespace

std::string grid_csv(const GridResult& result) {
  std::string out = "alpha,tau,n,m,status,best_epoch,val_p_at_k,error\n";
  for (const auto& c : result.cells) {
    out += fmt::format("{},{},{},{},{},{},{:.17g},{}\n", c.config.alpha, c.config.tau,
                       c.config.n, c.config.m, c.ok ? "ok" : "failed", c.best_epoch,
                       c.val_metric, csv_field(c.error));
  }
  return out;
}

}  // namespace hapcap
