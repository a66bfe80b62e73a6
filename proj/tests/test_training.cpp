// Copyright 2026 The HapCap Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstring>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "hapcap/error.hpp"
#include "hapcap/synthetic.hpp"
#include "hapcap/training.hpp"

namespace hapcap {
namespace {

PairLabel lab(const std::string& id, Category c = Category::kSensory) { return {id, c}; }

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

PairEmbeddingBatch random_batch(std::mt19937_64& rng, int items, int dim, int labels) {
  std::normal_distribution<double> g;
  std::uniform_int_distribution<int> l(0, labels - 1);
  PairEmbeddingBatch b;
  for (int i = 0; i < items; ++i) {
    Eigen::VectorXd z(dim);
    for (int j = 0; j < dim; ++j) z(j) = g(rng);
    b.z.push_back(z.normalized());
    b.labels.push_back(lab("F" + std::to_string(l(rng))));
  }
  return b;
}

TEST(SupCon, HandCase) {
  PairEmbeddingBatch b;
  b.z = {vec({1, 0}), vec({1, 0}), vec({0, 1})};
  b.labels = {lab("A"), lab("A"), lab("B")};
  EXPECT_NEAR(supcon_loss(b, 1.0), std::log(1.0 + std::exp(-1.0)), 1e-12);
  EXPECT_NEAR(supcon_loss(b, 1.0), 0.3133, 1e-4);
}

TEST(SupCon, NoPositivesIsZero) {
  PairEmbeddingBatch b;
  b.z = {vec({1, 0}), vec({0, 1})};
  b.labels = {lab("A"), lab("B")};
  EXPECT_EQ(supcon_loss(b, 0.1), 0.0);
}

TEST(SupCon, InvalidBatchesThrow) {
  PairEmbeddingBatch b;
  b.z = {vec({1, 0})};
  b.labels = {lab("A")};
  EXPECT_THROW(supcon_loss(b, 0.1), InvalidInput);
  b.z = {vec({1, 0}), vec({1, 0, 0})};
  b.labels = {lab("A"), lab("A")};
  EXPECT_THROW(supcon_loss(b, 0.1), InvalidInput);
  b.z = {vec({1, 0}), vec({1, 0})};
  EXPECT_THROW(supcon_loss(b, 0.0), InvalidInput);
}

TEST(SupCon, NonNegativePermutationAndRotationInvariant) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 30; ++t) {
    auto b = random_batch(rng, 10, 5, 4);
    const double loss = supcon_loss(b, 0.1);
    EXPECT_GE(loss, 0.0);

    auto p = b;
    std::vector<int> order(10);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (int i = 0; i < 10; ++i) {
      p.z[i] = b.z[order[i]];
      p.labels[i] = b.labels[order[i]];
    }
    EXPECT_NEAR(supcon_loss(p, 0.1), loss, 1e-10);

    Eigen::MatrixXd a(5, 5);
    std::normal_distribution<double> g;
    for (int i = 0; i < 25; ++i) a.data()[i] = g(rng);
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
    auto r = b;
    for (auto& z : r.z) z = q * z;
    EXPECT_NEAR(supcon_loss(r, 0.1), loss, 1e-10);
  }
}

TEST(SupCon, TemperatureChangesLoss) {
  std::mt19937_64 rng(2);
  const auto b = random_batch(rng, 8, 4, 3);
  EXPECT_GT(std::abs(supcon_loss(b, 0.05) - supcon_loss(b, 0.1)), 1e-6);
}

TEST(SupCon, EmbeddingGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  for (double tau : {0.05, 0.07, 0.1}) {
    const auto b = random_batch(rng, 7, 4, 3);
    std::vector<int> cls;
    for (const auto& l : b.labels) cls.push_back(l.signal_id.back() - '0');
    std::vector<Eigen::VectorXd> grad;
    supcon_value(b.z, cls, tau, &grad);
    auto z = b.z;
    for (std::size_t i = 0; i < z.size(); ++i) {
      for (int j = 0; j < 4; ++j) {
        const double h = 1e-5, keep = z[i](j);
        z[i](j) = keep + h;
        const double up = supcon_value(z, cls, tau).loss;
        z[i](j) = keep - h;
        const double dn = supcon_value(z, cls, tau).loss;
        z[i](j) = keep;
        EXPECT_NEAR(grad[i](j), (up - dn) / (2 * h), 1e-6);
      }
    }
  }
}

EncoderDims fd_dims(int d) {
  EncoderDims dims;
  dims.embed_dim = 3;
  dims.text_hidden = 5;
  dims.text_depth = 3;
  dims.haptic_input = 6;
  dims.haptic_hidden = 5;
  dims.haptic_depth = 3;
  dims.d1 = 4;
  dims.d2 = 5;
  dims.d = d;
  return dims;
}

TrainingBatch fd_batch(std::mt19937_64& rng, const EncoderState& s, int size) {
  std::uniform_int_distribution<std::size_t> tok(0, s.vocab.size() - 1);
  std::uniform_int_distribution<int> len(1, 4), lbl(0, size / 2);
  std::normal_distribution<double> g;
  TrainingBatch b;
  for (int i = 0; i < size; ++i) {
    std::vector<std::size_t> ids(len(rng));
    for (auto& id : ids) id = tok(rng);
    Eigen::VectorXd x(s.dims.haptic_input);
    for (int j = 0; j < x.size(); ++j) x(j) = g(rng);
    b.token_ids.push_back(ids);
    b.haptic_inputs.push_back(x);
    b.labels.push_back(lab("F" + std::to_string(lbl(rng))));
  }
  return b;
}

// Zero biases put dead units exactly on the ReLU kink; move off it.
void jitter_biases(std::mt19937_64& rng, EncoderState& s) {
  std::normal_distribution<double> g(0.0, 0.5);
  for (auto& p : parameters(s)) {
    if (p.name.ends_with("bias")) {
      for (Eigen::Index k = 0; k < p.value->size(); ++k) p.value->data()[k] = g(rng);
    }
  }
}

double max_relative_error(EncoderState s, const TrainingBatch& b, double tau,
                          PairRepresentation rep) {
  const auto lg = loss_gradients(s, b, tau, rep);
  double worst = 0.0;
  for (auto& p : parameters(s)) {
    const auto* g = lg.gradients.find(p.name);
    if (!p.trainable) {
      EXPECT_EQ(g, nullptr) << p.name;
      continue;
    }
    EXPECT_NE(g, nullptr) << p.name;
    if (!g) continue;
    Eigen::MatrixXd fd(g->rows(), g->cols());
    for (Eigen::Index k = 0; k < p.value->size(); ++k) {
      const double h = 1e-4, keep = p.value->data()[k];
      p.value->data()[k] = keep + h;
      const double up = batch_loss(s, b, tau, rep);
      p.value->data()[k] = keep - h;
      const double dn = batch_loss(s, b, tau, rep);
      p.value->data()[k] = keep;
      fd.data()[k] = (up - dn) / (2 * h);
    }
    const double scale = std::max({g->norm(), fd.norm(), 1e-8});
    worst = std::max(worst, (*g - fd).norm() / scale);
  }
  return worst;
}

TEST(LossGradients, MatchCentralFiniteDifferences) {
  std::mt19937_64 rng(4);
  const std::vector<std::string> texts = {"soft buzz", "strong hum", "calm rain cat"};
  int configs = 0;
  for (auto rep : {PairRepresentation::kViews, PairRepresentation::kConcat}) {
    for (double tau : {0.07, 0.1}) {
      for (int n = 1; n <= 3; ++n) {
        const int m = 4 - n;
        const int d = 2 + (configs % 7);
        auto s = init_encoder(fd_dims(d), build_vocab_from_texts(texts), rng(), n, m);
        jitter_biases(rng, s);
        const auto b = fd_batch(rng, s, 3 + configs % 6);
        EXPECT_LT(max_relative_error(s, b, tau, rep), 1e-4)
            << to_string(rep) << " tau=" << tau << " n=" << n;
        ++configs;
      }
    }
  }
  EXPECT_GE(configs, 12);
}

TEST(LossGradients, ZeroTrainableLayersGiveEmptySet) {
  std::mt19937_64 rng(5);
  const std::vector<std::string> texts = {"a b"};
  const auto s = init_encoder(fd_dims(4), build_vocab_from_texts(texts), 1, 0, 0);
  const auto lg = loss_gradients(s, fd_batch(rng, s, 4), 0.1);
  EXPECT_TRUE(lg.gradients.empty());
  EXPECT_GE(lg.loss, 0.0);
}

TEST(LossGradients, OneTowerFrozen) {
  std::mt19937_64 rng(6);
  const std::vector<std::string> texts = {"a b"};
  const auto s = init_encoder(fd_dims(4), build_vocab_from_texts(texts), 1, 0, 2);
  const auto lg = loss_gradients(s, fd_batch(rng, s, 4), 0.1);
  for (const auto& [name, g] : lg.gradients.tensors) {
    EXPECT_EQ(name.rfind("haptic.", 0), 0u) << name;
  }
  EXPECT_EQ(lg.gradients.size(), 5u);  // dense1, dense2 weight+bias, proj
}

struct Corpus {
  DatasetSplit split;
  HapticInputs haptics;
  Vocabulary vocab;
};

Corpus small_corpus(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.classes = 4;
  spec.signals_per_class = 6;
  spec.participants = 2;
  spec.duration_s = 2.0;
  spec.sample_rate = 1200;
  spec.seed = seed;
  const auto corpus = make_synthetic_corpus(spec);
  std::set<std::string> ids;
  for (const auto& s : corpus.signals) ids.insert(s.id);
  Corpus c;
  const auto pairs = build_pairs(corpus.captions, ids);
  c.split = split_dataset(pairs, seed);
  c.haptics = compute_haptic_inputs(corpus.signals);
  std::vector<CaptionRecord> train_caps;
  for (const auto& p : c.split.train) train_caps.push_back(p.caption);
  c.vocab = build_vocab(train_caps);
  return c;
}

EncoderDims small_dims() {
  EncoderDims d;
  d.embed_dim = 16;
  d.text_hidden = 32;
  d.haptic_hidden = 32;
  d.d1 = d.d2 = d.d = 16;
  return d;
}

TrainConfig small_config() {
  TrainConfig t;
  t.batch_size = 16;
  t.epochs = 4;
  t.seed = 3;
  return t;
}

TEST(Train, ZeroEpochsReturnsInitialState) {
  const auto c = small_corpus(1);
  const auto init = init_encoder(small_dims(), c.vocab, 1);
  auto cfg = small_config();
  cfg.epochs = 0;
  const auto r = train(init, c.split, c.haptics, cfg);
  EXPECT_EQ(serialize_checkpoint(r.state), serialize_checkpoint(init));
  EXPECT_TRUE(r.history.empty());
}

TEST(Train, DeterministicAndFrozenLayersUntouched) {
  const auto c = small_corpus(2);
  const auto init = init_encoder(small_dims(), c.vocab, 2);
  auto cfg = small_config();
  cfg.n = 1;
  cfg.m = 2;
  const auto a = train(init, c.split, c.haptics, cfg);
  const auto b = train(init, c.split, c.haptics, cfg);
  EXPECT_EQ(serialize_checkpoint(a.state), serialize_checkpoint(b.state));
  ASSERT_EQ(a.history.size(), 4u);
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].loss, b.history[i].loss);
  }
  EXPECT_EQ(a.state.text_trainable, 1);
  EXPECT_EQ(a.state.haptic_trainable, 2);

  const auto before = parameters(init);
  const auto after = parameters(a.state);
  bool any_changed = false;
  for (std::size_t i = 0; i < before.size(); ++i) {
    const bool same = std::memcmp(before[i].value->data(), after[i].value->data(),
                                  sizeof(double) * before[i].value->size()) == 0;
    if (!after[i].trainable) {
      EXPECT_TRUE(same) << before[i].name;
    } else {
      any_changed |= !same;
    }
  }
  EXPECT_TRUE(any_changed);
}

TEST(Train, LossFallsOnSeparableCorpus) {
  const auto c = small_corpus(3);
  const auto init = init_encoder(small_dims(), c.vocab, 3);
  auto cfg = small_config();
  cfg.epochs = 8;
  const auto r = train(init, c.split, c.haptics, cfg);
  EXPECT_LT(r.history.back().loss, r.history.front().loss);
}

TEST(Train, BestCheckpointReproducesLoggedMetric) {
  const auto c = small_corpus(4);
  const auto init = init_encoder(small_dims(), c.vocab, 4);
  const auto cfg = small_config();
  const auto r = train(init, c.split, c.haptics, cfg);
  double best = -1.0;
  for (const auto& h : r.history) best = std::max(best, h.val_metric);
  EXPECT_EQ(r.best_metric, best);
  EXPECT_EQ(r.history[r.best_epoch - 1].val_metric, best);
  const auto again = evaluate_scope(r.state, c.split.valid, c.haptics, std::nullopt,
                                    {cfg.k, cfg.kappa});
  EXPECT_EQ(again.precision, r.best_metric);
}

TEST(Train, CategoryScopeRestrictsPairs) {
  const auto c = small_corpus(5);
  const auto init = init_encoder(small_dims(), c.vocab, 5);
  auto cfg = small_config();
  cfg.epochs = 1;
  cfg.category_scope = CategoryScope::kEmotional;
  const auto r = train(init, c.split, c.haptics, cfg);
  const auto v = in_scope(c.split.valid, CategoryScope::kEmotional);
  const auto again = evaluate_scope(r.state, v, c.haptics, Category::kEmotional,
                                    {cfg.k, cfg.kappa});
  EXPECT_EQ(again.precision, r.best_metric);
}

TEST(Train, InvalidInputs) {
  const auto c = small_corpus(6);
  const auto init = init_encoder(small_dims(), c.vocab, 6);
  auto split = c.split;
  split.valid.clear();
  EXPECT_THROW(train(init, split, c.haptics, small_config()), InvalidInput);
  auto cfg = small_config();
  cfg.tau = 0.0;
  EXPECT_THROW(train(init, c.split, c.haptics, cfg), InvalidInput);
  cfg = small_config();
  cfg.batch_size = 1;
  EXPECT_THROW(train(init, c.split, c.haptics, cfg), InvalidInput);
  cfg = small_config();
  cfg.n = 4;
  EXPECT_THROW(train(init, c.split, c.haptics, cfg), InvalidInput);
}

TEST(History, CsvLayout) {
  const std::vector<EpochRecord> h = {{1, 2.5, 0.125}, {2, 2.0, 0.25}};
  EXPECT_EQ(history_csv(h), "epoch,loss,val_p_at_k\n1,2.5,0.125\n2,2,0.25\n");
}

TEST(Grid, SingleCellEqualsTrain) {
  const auto c = small_corpus(7);
  const auto init = init_encoder(small_dims(), c.vocab, 7);
  auto cfg = small_config();
  GridSpec g{{1e-3}, {0.1}, {2}, {1}};
  const auto res = grid_search(init, c.split, c.haptics, cfg, g);
  ASSERT_EQ(res.cells.size(), 1u);
  ASSERT_TRUE(res.best_run);
  cfg.n = 2;
  cfg.m = 1;
  const auto direct = train(init, c.split, c.haptics, cfg);
  EXPECT_EQ(serialize_checkpoint(res.best_run->state), serialize_checkpoint(direct.state));
  EXPECT_EQ(res.cells[0].val_metric, direct.best_metric);
}

TEST(Grid, TableCoversGridAndBestDominates) {
  const auto c = small_corpus(8);
  const auto init = init_encoder(small_dims(), c.vocab, 8);
  auto cfg = small_config();
  cfg.epochs = 2;
  GridSpec g{{1e-3, 1e-4}, {0.07, 0.1}, {1, 4}, {2}};
  const auto res = grid_search(init, c.split, c.haptics, cfg, g);
  ASSERT_EQ(res.cells.size(), g.size());
  const auto csv = grid_csv(res);
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), g.size() + 1);
  ASSERT_TRUE(res.best);
  int failed = 0;
  for (const auto& cell : res.cells) {
    if (!cell.ok) {
      ++failed;
      EXPECT_EQ(cell.config.n, 4);
      EXPECT_FALSE(cell.error.empty());
      continue;
    }
    EXPECT_GE(res.cells[*res.best].val_metric, cell.val_metric);
  }
  EXPECT_EQ(failed, 4);
  EXPECT_NE(csv.find("failed"), std::string::npos);
}

TEST(Config, ScopeAndRepresentationParsing) {
  EXPECT_EQ(parse_category_scope("ALL"), CategoryScope::kAll);
  EXPECT_EQ(parse_category_scope("Associative"), CategoryScope::kAssociative);
  EXPECT_THROW(parse_category_scope("touch"), InvalidInput);
  EXPECT_EQ(parse_pair_representation("concat"), PairRepresentation::kConcat);
  EXPECT_THROW(parse_pair_representation("x"), InvalidInput);
  TrainConfig t;
  EXPECT_EQ(t.alpha, 1e-3);
  EXPECT_EQ(t.tau, 0.1);
  EXPECT_EQ(t.n, 3);
  EXPECT_EQ(t.m, 2);
  EXPECT_EQ(t.batch_size, 128);
  EXPECT_EQ(t.epochs, 15);
  EXPECT_EQ(t.kappa, 100.0);
  EXPECT_EQ(t.k, 10);
}

}  // namespace
}  // namespace hapcap
